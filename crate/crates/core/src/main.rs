use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::json;

use hahnsolve::conjugation::{additive_conjugate, change_derivation, multiplicative_conjugate, Transformed};
use hahnsolve::derivation::{validate, DerivationSpec, SpecFile};
use hahnsolve::diffpoly::{DiffPoly, EquationFile};
use hahnsolve::grid::GridSet;
use hahnsolve::series::DEFAULT_ENUM_CAP;
use hahnsolve::solver::{
    solve, support_bound_r, Provenance, ResonancePolicy, SolveBudget, SolveConfig, Variant,
};
use hahnsolve::{Error, Exponent, Series};

#[derive(Parser)]
#[command(name = "hahnsolve", version, about = "Generalized power series with Hardy-type derivations")]
struct Cli {
    /// Print structured JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Cap on enumerated terms and lattice points.
    #[arg(long, global = true, default_value_t = DEFAULT_ENUM_CAP)]
    enum_cap: usize,
    /// Truncate every input series at this exponent, e.g. "(1,0)".
    #[arg(long, global = true)]
    truncation: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SpecArg {
    #[arg(long)]
    spec: PathBuf,
}

#[derive(Args)]
struct EqArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    equation: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Check a derivation spec and print its constants.
    Validate(SpecArg),
    /// Apply D_k (D₀ for k = 0) to a series, i times.
    Derive {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        series: String,
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        times: u32,
    },
    /// Evaluate an equation at a series.
    Eval {
        #[command(flatten)]
        eq: EqArgs,
        #[arg(long)]
        series: String,
    },
    /// Substitute y = a + ỹ.
    ConjugateAdd {
        #[command(flatten)]
        eq: EqArgs,
        #[arg(long)]
        by: String,
        /// Write the transformed equation here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Substitute y = m·z for a single term m.
    ConjugateMul {
        #[command(flatten)]
        eq: EqArgs,
        #[arg(long)]
        by: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rewrite the equation in terms of D_l.
    ChangeDeriv {
        #[command(flatten)]
        eq: EqArgs,
        #[arg(long)]
        to: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Indicial polynomial of a normalized equation of Weierstrass order 1.
    Indicial {
        #[command(flatten)]
        eq: EqArgs,
    },
    /// Search for solution prefixes.
    Solve {
        #[command(flatten)]
        eq: EqArgs,
        #[arg(long, default_value_t = 8)]
        budget_terms: usize,
        #[arg(long, default_value_t = 64)]
        budget_branches: usize,
        #[arg(long, default_value_t = 8)]
        budget_depth: usize,
        /// zero, value:<q> or report
        #[arg(long, default_value = "zero")]
        resonance_policy: String,
        /// Leading term m₀t^μ₀ to split off first.
        #[arg(long)]
        leading: Option<String>,
        /// Write the provenance of every outcome to this file.
        #[arg(long)]
        provenance_out: Option<PathBuf>,
    },
    /// Recompute R from a provenance file (one record or a list).
    SupportBound {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        provenance: PathBuf,
    },
    /// Operations on grid sets given in text form.
    Gridset {
        #[arg(long)]
        set: String,
        #[arg(long)]
        rank: usize,
        /// Replace the set by the semigroup it generates first.
        #[arg(long)]
        semigroup: bool,
        #[arg(long)]
        add_generator: Option<String>,
        #[arg(long)]
        translate_neg: Option<String>,
        #[arg(long)]
        member: Option<String>,
        /// List the elements below this exponent.
        #[arg(long)]
        enumerate_below: Option<String>,
    },
}

enum Failure {
    Usage(String),
    Domain(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Domain(e.to_string()),
        }
    }
}

type Out = std::result::Result<(), Failure>;

fn read_json<T: DeserializeOwned>(path: &Path) -> std::result::Result<T, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Out {
    let text = serde_json::to_string_pretty(value).expect("json value");
    fs::write(path, text + "\n").map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json value"));
}

struct Ctx {
    json: bool,
    cap: usize,
    truncation: Option<String>,
}

impl Ctx {
    fn trunc(&self, rank: usize) -> std::result::Result<Option<Exponent>, Failure> {
        Ok(self.truncation.as_deref().map(|t| Exponent::parse(t, rank)).transpose()?)
    }

    fn series(&self, text: &str, rank: usize) -> std::result::Result<Series, Failure> {
        let s = Series::parse(text, rank)?;
        Ok(match self.trunc(rank)? {
            Some(t) => s.truncate_at(&t),
            None => s,
        })
    }

    fn spec(&self, path: &Path) -> std::result::Result<DerivationSpec, Failure> {
        let file: SpecFile = read_json(path)?;
        Ok(DerivationSpec::from_file(&file)?)
    }

    fn equation(&self, args: &EqArgs) -> std::result::Result<(DerivationSpec, DiffPoly), Failure> {
        let spec = self.spec(&args.spec)?;
        let file: EquationFile = read_json(&args.equation)?;
        let mut p = DiffPoly::from_file(&file, spec.rank())?;
        if let Some(t) = self.trunc(spec.rank())? {
            let coeffs: Vec<_> = p.coeffs().iter().map(|(i, c)| (i.clone(), c.truncate_at(&t))).collect();
            p = DiffPoly::new(p.rank(), p.order(), p.deriv(), coeffs)?;
        }
        Ok((spec, p))
    }
}

fn report_transform(ctx: &Ctx, t: &Transformed, out: Option<&PathBuf>) -> Out {
    let file = t.poly.to_file();
    if let Some(path) = out {
        write_json(path, &serde_json::to_value(&file).expect("equation file"))?;
    }
    if ctx.json {
        print_json(&json!({
            "equation": file,
            "step": t.step.to_json(),
        }));
    } else {
        println!("{}", t.poly);
        println!("case: {}", t.step.case);
        println!("support bound: {}", t.step.bound);
    }
    Ok(())
}

fn run(cli: Cli) -> Out {
    let ctx = Ctx {
        json: cli.json,
        cap: cli.enum_cap,
        truncation: cli.truncation,
    };
    if ctx.cap == 0 {
        return Err(Failure::Usage("--enum-cap must be positive".into()));
    }
    match cli.command {
        Command::Validate(SpecArg { spec }) => {
            let file: SpecFile = read_json(&spec)?;
            let logs = file
                .log_derivatives
                .iter()
                .map(|s| Series::parse(s, file.rank))
                .collect::<hahnsolve::Result<Vec<_>>>()?;
            let report = validate(file.rank, &logs)?;
            if ctx.json {
                print_json(&json!({
                    "passed": report.passed(),
                    "checks": report.checks.iter().map(|c| json!({
                        "axiom": c.name,
                        "indices": c.indices,
                        "passed": c.passed,
                        "detail": c.detail,
                    })).collect::<Vec<_>>(),
                    "constants": report.constants.as_ref().map(|k| json!({
                        "k0": k.k0,
                        "classes": k.classes.iter().enumerate().map(|(i, c)| json!({
                            "k": i + 1,
                            "d": format!("{}*t^{}", hahnsolve::exponent::fmt_q(&c.coeff), c.theta),
                            "tau": c.tau.to_string(),
                            "theta": c.theta.to_string(),
                            "tilde_k": c.tilde_k,
                        })).collect::<Vec<_>>(),
                    })),
                }));
            } else {
                if let Some(k) = &report.constants {
                    println!("k  d_k coeff  tau            theta          tilde k");
                    for (i, c) in k.classes.iter().enumerate() {
                        println!(
                            "{:<2} {:<10} {:<14} {:<14} {}",
                            i + 1,
                            hahnsolve::exponent::fmt_q(&c.coeff),
                            c.tau.to_string(),
                            c.theta.to_string(),
                            c.tilde_k.map_or("-".into(), |t| t.to_string())
                        );
                    }
                    println!("k0 = {}", k.k0);
                }
                for c in &report.checks {
                    println!("{c}");
                }
            }
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Domain(format!("invalid spec: {}", report.failures().join("; "))))
            }
        }
        Command::Derive { spec, series, k, times } => {
            let spec = ctx.spec(&spec.spec)?;
            let a = ctx.series(&series, spec.rank())?;
            let mut out = a;
            for _ in 0..times {
                out = spec.derive(&out, k)?;
            }
            if ctx.json {
                print_json(&json!({ "k": k, "times": times, "result": out.to_string() }));
            } else {
                println!("{out}");
            }
            Ok(())
        }
        Command::Eval { eq, series } => {
            let (spec, p) = ctx.equation(&eq)?;
            let y = ctx.series(&series, spec.rank())?;
            let r = p.evaluate_capped(&y, &spec, ctx.cap)?;
            let v = r.v()?;
            if ctx.json {
                print_json(&json!({
                    "value": r.to_string(),
                    "valuation": v.as_ref().map_or("inf".to_string(), ToString::to_string),
                }));
            } else {
                println!("{r}");
                println!("v = {}", v.as_ref().map_or("inf".to_string(), ToString::to_string));
            }
            Ok(())
        }
        Command::ConjugateAdd { eq, by, out } => {
            let (spec, p) = ctx.equation(&eq)?;
            let a = ctx.series(&by, spec.rank())?;
            report_transform(&ctx, &additive_conjugate(&p, &a, &spec)?, out.as_ref())
        }
        Command::ConjugateMul { eq, by, out } => {
            let (spec, p) = ctx.equation(&eq)?;
            let m = ctx.series(&by, spec.rank())?;
            report_transform(&ctx, &multiplicative_conjugate(&p, &m, &spec)?, out.as_ref())
        }
        Command::ChangeDeriv { eq, to, out } => {
            let (spec, p) = ctx.equation(&eq)?;
            report_transform(&ctx, &change_derivation(&p, to, &spec)?, out.as_ref())
        }
        Command::Indicial { eq } => {
            let (_, p) = ctx.equation(&eq)?;
            let (norm, w, shift) = p.weierstrass_normalize()?;
            if w != 1 {
                return Err(Failure::Domain(format!("Weierstrass order is {w}, indicial data needs 1")));
            }
            let ind = norm.indicial()?;
            let roots: Vec<String> = ind.rational_roots.iter().map(hahnsolve::exponent::fmt_q).collect();
            let witnesses: Vec<Vec<u32>> = ind.witnesses.iter().map(|i| i.entries().to_vec()).collect();
            if ctx.json {
                print_json(&json!({
                    "normalized_by": shift.to_string(),
                    "witnesses": witnesses,
                    "pi": ind.pi.to_string(),
                    "roots": roots,
                    "multiplicities": ind.multiplicities,
                    "irrational_root": ind.irrational_root,
                }));
            } else {
                println!("normalized by t^{shift}");
                println!("A = {witnesses:?}");
                println!("pi(X) = {}", ind.pi);
                println!("positive rational roots: [{}]", roots.join(", "));
                if ind.irrational_root {
                    println!("warning: pi has an irrational positive root");
                }
            }
            Ok(())
        }
        Command::Solve {
            eq,
            budget_terms,
            budget_branches,
            budget_depth,
            resonance_policy,
            leading,
            provenance_out,
        } => {
            let (spec, p) = ctx.equation(&eq)?;
            let policy: ResonancePolicy = resonance_policy.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?;
            let budget = SolveBudget::new(budget_terms, budget_branches, budget_depth, ctx.cap)
                .map_err(|e| Failure::Usage(e.to_string()))?;
            let leading = leading.map(|l| Series::parse(&l, spec.rank())).transpose()?;
            let cfg = SolveConfig { budget, policy, leading };
            let outcomes = solve(&p, &spec, &cfg)?;
            if let Some(path) = provenance_out {
                let provs: Vec<&Provenance> = outcomes.iter().map(|o| &o.provenance).collect();
                write_json(&path, &serde_json::to_value(provs).expect("provenance"))?;
            }
            if ctx.json {
                print_json(&serde_json::Value::Array(outcomes.iter().map(|o| o.to_json()).collect()));
            } else {
                for o in &outcomes {
                    print!("{o}");
                }
            }
            let exhausted = outcomes.iter().filter(|o| o.variant == Variant::BudgetExhausted).count();
            if exhausted > 0 {
                return Err(Failure::Domain(format!("{exhausted} branch(es) stopped at a cap")));
            }
            Ok(())
        }
        Command::SupportBound { spec, provenance } => {
            let spec = ctx.spec(&spec.spec)?;
            let value: serde_json::Value = read_json(&provenance)?;
            let provs: Vec<Provenance> = match value {
                serde_json::Value::Array(_) => serde_json::from_value(value),
                _ => serde_json::from_value(value).map(|p| vec![p]),
            }
            .map_err(|e| Failure::Usage(format!("{}: {e}", provenance.display())))?;
            let bounds = provs
                .iter()
                .map(|p| support_bound_r(p, &spec))
                .collect::<hahnsolve::Result<Vec<GridSet>>>()?;
            if ctx.json {
                print_json(&json!(bounds
                    .iter()
                    .map(|r| json!({ "text": r.to_string(), "set": r.to_json() }))
                    .collect::<Vec<_>>()));
            } else {
                for r in &bounds {
                    println!("{r}");
                }
            }
            Ok(())
        }
        Command::Gridset {
            set,
            rank,
            semigroup,
            add_generator,
            translate_neg,
            member,
            enumerate_below,
        } => {
            let mut g = GridSet::parse(&set, rank)?;
            if semigroup {
                g = g.semigroup()?;
            }
            if let Some(a) = add_generator {
                g = g.add_generator(&Exponent::parse(&a, rank)?)?;
            }
            if let Some(b) = translate_neg {
                g = g.translate_neg(&Exponent::parse(&b, rank)?, ctx.cap)?;
            }
            let membership = member
                .map(|m| Exponent::parse(&m, rank).map(|e| (g.member(&e, ctx.cap), e)))
                .transpose()?;
            let listed = enumerate_below
                .map(|b| g.enumerate_below(&Exponent::parse(&b, rank)?, ctx.cap))
                .transpose()?;
            if ctx.json {
                print_json(&json!({
                    "text": g.to_string(),
                    "set": g.to_json(),
                    "member": membership.as_ref().map(|(m, _)| format!("{m:?}")),
                    "elements": listed.as_ref().map(|l| l.iter().map(ToString::to_string).collect::<Vec<_>>()),
                }));
            } else {
                println!("{g}");
                if let Some((m, e)) = &membership {
                    println!("{e}: {m:?}");
                }
                if let Some(l) = &listed {
                    let items: Vec<String> = l.iter().map(ToString::to_string).collect();
                    println!("[{}]", items.join(", "));
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}
