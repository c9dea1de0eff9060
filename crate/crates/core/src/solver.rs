//! Term-by-term search for series solutions of P(y, Dy, …, Dⁿy) = 0.
//!
//! A node is a normalized equation in a local unknown z together with the
//! affine map z ↦ y back to the top-level unknown. Nodes of Weierstrass order 1
//! are stepped one exponent at a time; higher orders are centered on a
//! solution of a derivative equation and split along the Newton polygon. Once
//! a class is exhausted the search restarts from the top-level equation
//! conjugated by the prefix found so far, one class lower.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::conjugation::{
    additive_conjugate, change_derivation, multiplicative_conjugate, normalize, Step, Transform,
};
use crate::derivation::DerivationSpec;
use crate::diffpoly::DiffPoly;
use crate::error::{check_rank, Error, Result};
use crate::exponent::{fmt_q, Exponent, MultiIndex, Q};
use crate::grid::{GridSet, GridSetJson, Membership};
use crate::poly::UPoly;
use crate::series::{Series, DEFAULT_ENUM_CAP};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveBudget {
    /// Maximal number of terms in a reported prefix.
    pub max_terms: usize,
    pub max_branches: usize,
    pub max_depth: usize,
    pub enum_cap: usize,
}

impl SolveBudget {
    pub fn new(max_terms: usize, max_branches: usize, max_depth: usize, enum_cap: usize) -> Result<Self> {
        if max_terms == 0 || max_branches == 0 || max_depth == 0 || enum_cap == 0 {
            return Err(Error::Domain("budget entries must be positive".into()));
        }
        Ok(SolveBudget {
            max_terms,
            max_branches,
            max_depth,
            enum_cap,
        })
    }
}

impl Default for SolveBudget {
    fn default() -> Self {
        SolveBudget {
            max_terms: 8,
            max_branches: 64,
            max_depth: 8,
            enum_cap: DEFAULT_ENUM_CAP,
        }
    }
}

/// What to do with a coefficient left free by a root of the indicial polynomial.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum ResonancePolicy {
    #[default]
    Zero,
    Value(Q),
    Report,
}

impl FromStr for ResonancePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(ResonancePolicy::Zero),
            "report" => Ok(ResonancePolicy::Report),
            _ => match s.strip_prefix("value:") {
                Some(v) => v
                    .trim()
                    .parse::<Q>()
                    .map(ResonancePolicy::Value)
                    .map_err(|_| Error::Domain(format!("bad rational in resonance policy: {v}"))),
                None => Err(Error::Domain(format!(
                    "unknown resonance policy {s:?}; expected zero, value:<q> or report"
                ))),
            },
        }
    }
}

impl fmt::Display for ResonancePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResonancePolicy::Zero => write!(f, "zero"),
            ResonancePolicy::Value(q) => write!(f, "value:{}", fmt_q(q)),
            ResonancePolicy::Report => write!(f, "report"),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SolveConfig {
    pub budget: SolveBudget,
    pub policy: ResonancePolicy,
    /// Leading term m₀t^{μ₀} of a solution that is not infinitesimal enough.
    pub leading: Option<Series>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Variant {
    SolutionPrefix,
    Stabilized,
    BudgetExhausted,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Variant::SolutionPrefix => "SolutionPrefix",
            Variant::Stabilized => "Stabilized",
            Variant::BudgetExhausted => "BudgetExhausted",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TermKind {
    Newton,
    Resonance,
    /// First term read off a Newton polygon edge.
    Edge,
    /// Part of the center of a higher-order node.
    Center,
}

impl fmt::Display for TermKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TermKind::Newton => "newton",
            TermKind::Resonance => "resonance",
            TermKind::Edge => "edge",
            TermKind::Center => "center",
        };
        f.write_str(s)
    }
}

/// One appended term, in the unknown of the original equation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermRecord {
    pub exponent: Exponent,
    pub coeff: Q,
    pub kind: TermKind,
    /// The exponent in the unknown of the node that produced it, with that node's class.
    pub local: Exponent,
    pub class: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Resonance {
    pub exponent: Exponent,
    pub note: String,
}

/// (Weierstrass order, class) before and after one reduction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduction {
    pub from: (usize, Option<usize>),
    pub to: (usize, Option<usize>),
}

impl Reduction {
    /// Strict decrease of (w, reverse class) in lexicographic order.
    pub fn decreases(&self) -> bool {
        let (w0, c0) = self.from;
        let (w1, c1) = self.to;
        w1 < w0 || (w1 == w0 && matches!((c0, c1), (Some(a), Some(b)) if b > a))
    }
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub variant: Variant,
    pub prefix: Series,
    /// (number of prefix terms, v(P(prefix))); `None` is ∞.
    pub trace: Vec<(usize, Option<Exponent>)>,
    pub resonances: Vec<Resonance>,
    pub support_bound: GridSet,
    pub provenance: Provenance,
    pub terms: Vec<TermRecord>,
    pub reductions: Vec<Reduction>,
    /// v(y₀) − α₀ when the leading term was split off first.
    pub shift: Option<Exponent>,
    /// Every prefix exponent (shifted back when needed) is a member of `support_bound`.
    pub contained: bool,
    pub extensions_tested: usize,
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
}

impl SolveOutcome {
    pub fn final_valuation(&self) -> Option<&Exponent> {
        self.trace.last().and_then(|(_, v)| v.as_ref())
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "variant": self.variant.to_string(),
            "prefix": self.prefix.to_string(),
            "trace": self.trace.iter().map(|(n, v)| json!({
                "length": n,
                "valuation": v.as_ref().map_or("inf".to_string(), ToString::to_string),
            })).collect::<Vec<_>>(),
            "resonances": self.resonances.iter().map(|r| json!({
                "exponent": r.exponent.to_string(),
                "note": r.note,
            })).collect::<Vec<_>>(),
            "support_bound": self.support_bound.to_json(),
            "support_bound_text": self.support_bound.to_string(),
            "provenance": serde_json::to_value(&self.provenance).expect("provenance serializes"),
            "terms": self.terms.iter().map(|t| json!({
                "exponent": t.exponent.to_string(),
                "coeff": fmt_q(&t.coeff),
                "kind": t.kind.to_string(),
            })).collect::<Vec<_>>(),
            "reductions": self.reductions.iter().map(|r| json!({
                "from": [r.from.0, r.from.1],
                "to": [r.to.0, r.to.1],
            })).collect::<Vec<_>>(),
            "shift": self.shift.as_ref().map(ToString::to_string),
            "contained": self.contained,
            "extensions_tested": self.extensions_tested,
            "notes": self.notes,
            "warnings": self.warnings,
        })
    }
}

impl fmt::Display for SolveOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}: {}", self.variant, self.prefix)?;
        let trace: Vec<String> = self
            .trace
            .iter()
            .map(|(n, v)| format!("({n}, {})", v.as_ref().map_or("inf".into(), ToString::to_string)))
            .collect();
        writeln!(f, "  trace: {}", trace.join(" "))?;
        for r in &self.resonances {
            writeln!(f, "  resonance at {}: {}", r.exponent, r.note)?;
        }
        writeln!(f, "  R = {}", self.support_bound)?;
        if let Some(s) = &self.shift {
            writeln!(f, "  shift: {s}")?;
        }
        writeln!(f, "  prefix contained in R: {}", self.contained)?;
        for s in &self.provenance.steps {
            writeln!(f, "  step: {} [{}]", s.summary(), s.case)?;
        }
        for n in &self.notes {
            writeln!(f, "  note: {n}")?;
        }
        for w in &self.warnings {
            writeln!(f, "  warning: {w}")?;
        }
        Ok(())
    }
}

/// The transformation trail of one branch, in a form that can be written to
/// and read back from a file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub rank: usize,
    pub order: usize,
    /// Derivation index of the equation the trail starts from.
    pub base_deriv: usize,
    pub steps: Vec<StepRecord>,
    /// Resonant exponents in the unknown of the node where they arose.
    pub resonances: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub by: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prestep: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<String>,
    pub case: String,
    pub bound: GridSetJson,
}

impl StepRecord {
    pub fn summary(&self) -> String {
        match self.kind.as_str() {
            "change-derivation" => format!(
                "change-derivation {} -> {}{}",
                self.from.unwrap_or(0),
                self.to.unwrap_or(0),
                self.prestep.as_ref().map_or(String::new(), |m| format!(" after y = {m}*y"))
            ),
            "normalize" => format!("normalize by t^{}", self.shift.as_deref().unwrap_or("?")),
            kind => format!("{kind} {}", self.by.as_deref().unwrap_or("?")),
        }
    }

    pub fn from_step(s: &Step) -> Self {
        let mut rec = StepRecord {
            kind: String::new(),
            by: None,
            from: None,
            to: None,
            prestep: None,
            shift: None,
            case: s.case.clone(),
            bound: s.bound.to_json(),
        };
        match &s.transform {
            Transform::Additive { by } => {
                rec.kind = "additive".into();
                rec.by = Some(by.to_string());
            }
            Transform::Multiplicative { by } => {
                rec.kind = "multiplicative".into();
                rec.by = Some(by.to_string());
            }
            Transform::ChangeDerivation { from, to, prestep } => {
                rec.kind = "change-derivation".into();
                rec.from = Some(*from);
                rec.to = Some(*to);
                rec.prestep = prestep.as_ref().map(ToString::to_string);
            }
            Transform::Normalize { shift } => {
                rec.kind = "normalize".into();
                rec.shift = Some(shift.to_string());
            }
        }
        rec
    }

    pub fn to_step(&self, rank: usize) -> Result<Step> {
        let missing = |what: &str| Error::Domain(format!("{} step without {what}", self.kind));
        let transform = match self.kind.as_str() {
            "additive" => Transform::Additive {
                by: Series::parse(self.by.as_deref().ok_or_else(|| missing("by"))?, rank)?,
            },
            "multiplicative" => Transform::Multiplicative {
                by: Series::parse(self.by.as_deref().ok_or_else(|| missing("by"))?, rank)?,
            },
            "change-derivation" => Transform::ChangeDerivation {
                from: self.from.ok_or_else(|| missing("from"))?,
                to: self.to.ok_or_else(|| missing("to"))?,
                prestep: self.prestep.as_deref().map(|p| Series::parse(p, rank)).transpose()?,
            },
            "normalize" => Transform::Normalize {
                shift: Exponent::parse(self.shift.as_deref().ok_or_else(|| missing("shift"))?, rank)?,
            },
            other => return Err(Error::Domain(format!("unknown step kind {other:?}"))),
        };
        Ok(Step {
            transform,
            case: self.case.clone(),
            bound: GridSet::from_json(&self.bound, rank)?,
        })
    }
}

impl Provenance {
    pub fn new(rank: usize, order: usize, base_deriv: usize, steps: &[Step], resonances: &[Exponent]) -> Self {
        Provenance {
            rank,
            order,
            base_deriv,
            steps: steps.iter().map(StepRecord::from_step).collect(),
            resonances: resonances.iter().map(ToString::to_string).collect(),
        }
    }

    pub fn steps(&self) -> Result<Vec<Step>> {
        self.steps.iter().map(|s| s.to_step(self.rank)).collect()
    }

    pub fn resonance_exponents(&self) -> Result<Vec<Exponent>> {
        self.resonances.iter().map(|e| Exponent::parse(e, self.rank)).collect()
    }
}

/// Replays a trail into the set R: the semigroup generated by every
/// normalized support on the trail, the exponents of the monomial factors,
/// the resonant exponents, plus 𝒯_l for every rescaled derivation D_l used.
pub fn support_bound_r(prov: &Provenance, spec: &DerivationSpec) -> Result<GridSet> {
    check_rank(prov.rank, spec.rank())?;
    let rank = prov.rank;
    let mut gens = GridSet::origin(rank);
    let mut derivs = BTreeSet::new();
    if prov.base_deriv >= 1 {
        derivs.insert(prov.base_deriv);
    }
    let add_point = |gens: &mut GridSet, e: &Exponent| -> Result<()> {
        if e.is_positive() {
            *gens = gens.union(&GridSet::point(e.clone()))?;
        }
        Ok(())
    };
    for step in prov.steps()? {
        match &step.transform {
            Transform::Normalize { .. } => gens = gens.union(&step.bound)?,
            Transform::Multiplicative { by } => {
                if let Some((e, _)) = by.leading() {
                    add_point(&mut gens, e)?;
                }
            }
            Transform::ChangeDerivation { to, prestep, .. } => {
                derivs.insert(*to);
                if let Some((e, _)) = prestep.as_ref().and_then(Series::leading) {
                    add_point(&mut gens, e)?;
                }
            }
            Transform::Additive { .. } => {}
        }
    }
    for e in prov.resonance_exponents()? {
        add_point(&mut gens, &e)?;
    }
    let mut out = gens.semigroup()?;
    for l in derivs {
        out = out.sum(&spec.script_t(l, prov.order)?)?;
    }
    Ok(out)
}

/// Result of splitting off a leading term that is not infinitesimal enough.
#[derive(Clone, Debug)]
pub struct PositiveReduction {
    pub poly: DiffPoly,
    /// μ₀ − α₀, so that y = m₀t^{μ₀} + t^{shift}·ŷ.
    pub shift: Exponent,
    pub alpha0: Exponent,
    pub steps: Vec<Step>,
}

/// y = m₀t^{μ₀} + t^{μ₀−α₀}ŷ when μ₀ ≤ α₀; `None` when no reduction is needed.
pub fn reduce_to_positive(
    p: &DiffPoly,
    leading: &Series,
    spec: &DerivationSpec,
) -> Result<Option<PositiveReduction>> {
    check_rank(p.rank(), leading.rank())?;
    if leading.len() != 1 || !leading.is_exact() {
        return Err(Error::Domain(format!("leading term must be a single exact term, got {leading}")));
    }
    let (mu0, _) = leading.leading().expect("one term");
    let alpha0 = spec.alpha0(p.order());
    if mu0 > &alpha0 {
        return Ok(None);
    }
    let shift = mu0 - &alpha0;
    let add = additive_conjugate(p, leading, spec)?;
    let mul = multiplicative_conjugate(&add.poly, &Series::monomial(Q::one(), shift.clone()), spec)?;
    Ok(Some(PositiveReduction {
        poly: mul.poly,
        shift,
        alpha0,
        steps: vec![add.step, mul.step],
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CandidateKind {
    Newton,
    Resonance,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidates {
    pub list: Vec<(Exponent, CandidateKind)>,
    pub v_s: Option<Exponent>,
    pub irrational_root: bool,
}

/// The class a normalized node works in: its derivation index, or none for
/// equations without derivatives.
fn node_class(f: &DiffPoly) -> Result<Option<usize>> {
    if f.order() == 0 {
        return Ok(None);
    }
    if f.deriv() == 0 {
        return Err(Error::Domain(
            "stepping needs a rescaled derivation D_k; change derivation first".into(),
        ));
    }
    Ok(Some(f.deriv()))
}

fn class_coord(mu: &Exponent, class: Option<usize>) -> Q {
    class.map_or_else(Q::zero, |c| mu.at(c).clone())
}

/// Possible next exponents after `prefix` for a normalized F of Weierstrass order 1.
pub fn next_candidates(f: &DiffPoly, prefix: &Series, spec: &DerivationSpec) -> Result<Candidates> {
    let class = node_class(f)?;
    let ind = f.indicial()?;
    let v_s = f.evaluate(prefix, spec)?.v()?;
    let last = prefix.max_exponent();
    let mut list = Vec::new();
    if let Some(v) = &v_s {
        if last.is_none_or(|l| v > l) {
            list.push((v.clone(), CandidateKind::Newton));
        }
    }
    if let Some(c) = class {
        for rho in &ind.rational_roots {
            let mu = Exponent::unit(f.rank(), c).scale(rho);
            if last.is_none_or(|l| &mu > l) && Some(&mu) != v_s.as_ref() {
                list.push((mu, CandidateKind::Resonance));
            }
        }
    }
    list.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(Candidates {
        list,
        v_s,
        irrational_root: ind.irrational_root,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum W1Step {
    /// m_μ = −δ(f_S)/π(μ_k).
    Determined { coeff: Q, prefix: Series },
    /// π(μ_k) = 0 below v_S: the coefficient is free and the policy chose one.
    Free { chosen: Q, prefix: Series, note: String },
    /// π(μ_k) = 0 under the report policy.
    Reported { note: String },
    /// No coefficient at μ can lower the residual.
    Dead,
}

pub fn solve_w1_step(
    f: &DiffPoly,
    prefix: &Series,
    mu: &Exponent,
    spec: &DerivationSpec,
    policy: &ResonancePolicy,
) -> Result<W1Step> {
    let class = node_class(f)?;
    let ind = f.indicial()?;
    let residual = f.evaluate(prefix, spec)?;
    let v_s = residual.v()?;
    let pi = ind.pi.eval(&class_coord(mu, class));
    if v_s.as_ref() == Some(mu) {
        if pi.is_zero() {
            return Ok(W1Step::Dead);
        }
        let lc = residual.leading().expect("finite valuation").1.clone();
        let coeff = -lc / pi;
        let prefix = prefix + &Series::monomial(coeff.clone(), mu.clone());
        return Ok(W1Step::Determined { coeff, prefix });
    }
    let below = v_s.as_ref().is_none_or(|v| mu < v);
    if !pi.is_zero() || !below {
        return Ok(W1Step::Dead);
    }
    let note = format!("free coefficient at {mu}");
    Ok(match policy {
        ResonancePolicy::Zero => W1Step::Free {
            chosen: Q::zero(),
            prefix: prefix.clone(),
            note: format!("{note}; set to 0"),
        },
        ResonancePolicy::Value(q) => W1Step::Free {
            chosen: q.clone(),
            prefix: prefix + &Series::monomial(q.clone(), mu.clone()),
            note: format!("{note}; set to {}", fmt_q(q)),
        },
        ResonancePolicy::Report => W1Step::Reported { note },
    })
}

/// A Newton polygon edge of a centered node: slope μ and the edge polynomial
/// Φ(m) = Σ δ(c_I)·μ_k^{‖I‖}·m^{|I|} over the indices on the edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub slope: Exponent,
    pub phi: UPoly,
    /// Nonzero rational roots, increasing.
    pub roots: Vec<Q>,
    /// Φ has a nonzero real root that is not rational.
    pub irrational_root: bool,
}

/// Edges with positive slope in `class` (any class without derivatives) above `cursor`.
pub fn newton_edges(f: &DiffPoly, class: Option<usize>, cursor: Option<&Exponent>) -> Result<Vec<Edge>> {
    let mut points: Vec<(u32, Exponent)> = Vec::new();
    let mut vals: Vec<(&MultiIndex, Exponent, Q)> = Vec::new();
    for (idx, c) in f.coeffs() {
        let Some(v) = c.v()? else { continue };
        let lc = c.leading().expect("nonzero").1.clone();
        let d = idx.length();
        match points.iter_mut().find(|(e, _)| *e == d) {
            Some((_, best)) if &v < best => *best = v.clone(),
            Some(_) => {}
            None => points.push((d, v.clone())),
        }
        vals.push((idx, v, lc));
    }
    points.sort();
    let mut slopes: Vec<Exponent> = Vec::new();
    for (i, (a, va)) in points.iter().enumerate() {
        for (b, vb) in &points[i + 1..] {
            let mu = (va - vb).scale(&Q::new((1).into(), (b - a).into()));
            if !mu.is_positive() || cursor.is_some_and(|c| &mu <= c) {
                continue;
            }
            if class.is_some() && mu.leading_class() != class {
                continue;
            }
            let line = va + &mu.scale(&Q::from_integer((*a).into()));
            let on_hull = points
                .iter()
                .all(|(d, vd)| vd + &mu.scale(&Q::from_integer((*d).into())) >= line);
            if on_hull && !slopes.contains(&mu) {
                slopes.push(mu);
            }
        }
    }
    slopes.sort();
    let mut edges = Vec::new();
    for mu in slopes {
        let line = points
            .iter()
            .map(|(d, vd)| vd + &mu.scale(&Q::from_integer((*d).into())))
            .min()
            .expect("points");
        let mut coeffs = vec![Q::zero(); f.degree() as usize + 1];
        let mu_k = class_coord(&mu, class);
        for (idx, v, lc) in &vals {
            if v + &mu.scale(&Q::from_integer(idx.length().into())) == line {
                let w = num_traits::pow::pow(mu_k.clone(), idx.weight() as usize);
                coeffs[idx.length() as usize] += lc * &w;
            }
        }
        let phi = UPoly::new(coeffs);
        let roots: Vec<Q> = phi
            .rational_roots()
            .into_iter()
            .map(|(r, _)| r)
            .filter(|r| !r.is_zero())
            .collect();
        let mirrored = UPoly::new(
            phi.coeffs()
                .iter()
                .enumerate()
                .map(|(i, c)| if i % 2 == 1 { -c } else { c.clone() })
                .collect(),
        );
        let real = phi.positive_root_count() + mirrored.positive_root_count();
        edges.push(Edge {
            irrational_root: real > roots.len(),
            slope: mu,
            phi,
            roots,
        });
    }
    Ok(edges)
}

/// One child of a Weierstrass reduction: z = q_{<μ} + m t^μ + t^μ·ẑ, where
/// m − q_μ is a root of the edge polynomial.
#[derive(Clone, Debug)]
pub struct ReducedChild {
    /// q_{<μ} + m t^μ, the part fixed by this child.
    pub fixed: Series,
    pub slope: Exponent,
    pub coeff: Q,
    /// The equation in ẑ before normalization.
    pub poly: DiffPoly,
    pub w: usize,
    pub steps: Vec<Step>,
}

#[derive(Clone, Debug)]
pub struct WeierstrassReduction {
    pub w: usize,
    pub class: Option<usize>,
    /// I₀ and the center q found by solving F^{(I₀)}.
    pub pivot: MultiIndex,
    pub center: Series,
    pub edges: Vec<Edge>,
    pub children: Vec<ReducedChild>,
}

fn terms_below(s: &Series, e: &Exponent) -> Series {
    Series::from_terms(
        s.rank(),
        s.terms().iter().filter(|(x, _)| *x < e).map(|(x, c)| (x.clone(), c.clone())),
        None,
    )
    .expect("same rank")
}

/// Terms of the solution of F^{(I₀)} = 0 in the node class above `cursor`.
fn center(f: &DiffPoly, w: usize, class: Option<usize>, cursor: Option<&Exponent>, spec: &DerivationSpec, budget: &SolveBudget) -> Result<(MultiIndex, Series)> {
    let mut pivots: Vec<MultiIndex> = Vec::new();
    let zero = Exponent::zero(f.rank());
    for (idx, c) in f.coeffs() {
        if idx.length() as usize == w && c.v()?.as_ref() == Some(&zero) {
            for j in 0..=f.order() {
                if let Some(i) = idx.checked_sub(&MultiIndex::unit(f.order(), j)) {
                    pivots.push(i);
                }
            }
        }
    }
    pivots.sort_by(|a, b| a.antilex(b));
    let pivot = pivots.pop().ok_or_else(|| Error::Domain("no index of Weierstrass order".into()))?;
    let sub = f.partial_derivative(&pivot)?;
    let mut q = Series::zero(f.rank());
    if sub.weierstrass_order()? != Some(1) {
        return Ok((pivot, q));
    }
    let ind = sub.indicial()?;
    let mut last = cursor.cloned();
    for _ in 0..budget.max_terms {
        let r = sub.evaluate_capped(&q, spec, budget.enum_cap)?;
        let Ok(Some(v)) = r.v() else { break };
        if last.as_ref().is_some_and(|l| &v <= l) || (class.is_some() && v.leading_class() != class) {
            break;
        }
        let pi = ind.pi.eval(&class_coord(&v, class));
        if pi.is_zero() {
            break;
        }
        let m = -r.leading().expect("finite").1.clone() / pi;
        q = &q + &Series::monomial(m, v.clone());
        last = Some(v);
    }
    Ok((pivot, q))
}

/// Centers a normalized F of Weierstrass order w ≥ 2 and splits it along the
/// Newton polygon edges of its class; `None` when w ≤ 1.
pub fn reduce_weierstrass(
    f: &DiffPoly,
    cursor: Option<&Exponent>,
    spec: &DerivationSpec,
    budget: &SolveBudget,
) -> Result<Option<WeierstrassReduction>> {
    let class = node_class(f)?;
    let w = match f.weierstrass_order()? {
        Some(w) if w >= 2 => w,
        _ => return Ok(None),
    };
    let (pivot, q) = center(f, w, class, cursor, spec, budget)?;
    let centered = if q.is_exact_zero() {
        f.clone()
    } else {
        additive_conjugate(f, &q, spec)?.poly
    };
    let edges = newton_edges(&centered, class, cursor)?;
    let mut children = Vec::new();
    for edge in &edges {
        for root in &edge.roots {
            // roots are relative to the centered equation
            let m = root + q.coeff(&edge.slope);
            let fixed = &terms_below(&q, &edge.slope) + &Series::monomial(m.clone(), edge.slope.clone());
            let add = additive_conjugate(f, &fixed, spec)?;
            let mul = multiplicative_conjugate(&add.poly, &Series::monomial(Q::one(), edge.slope.clone()), spec)?;
            let w_child = mul.poly.weierstrass_normalize().map(|(_, w, _)| w).unwrap_or(0);
            children.push(ReducedChild {
                fixed,
                slope: edge.slope.clone(),
                coeff: m,
                poly: mul.poly,
                w: w_child,
                steps: vec![add.step, mul.step],
            });
        }
    }
    Ok(Some(WeierstrassReduction {
        w,
        class,
        pivot,
        center: q,
        edges,
        children,
    }))
}

/// Top unknown = base + coeff·t^shift·(local unknown).
#[derive(Clone, Debug)]
struct Map {
    base: Series,
    coeff: Q,
    shift: Exponent,
}

impl Map {
    fn identity(rank: usize) -> Self {
        Map {
            base: Series::zero(rank),
            coeff: Q::one(),
            shift: Exponent::zero(rank),
        }
    }

    fn apply(&self, z: &Series) -> Series {
        &self.base + &z.mul_monomial(&self.coeff, &self.shift)
    }

    fn then_add(&self, a: &Series) -> Map {
        Map {
            base: self.apply(a),
            coeff: self.coeff.clone(),
            shift: self.shift.clone(),
        }
    }

    fn then_mul(&self, c: &Q, e: &Exponent) -> Map {
        Map {
            base: self.base.clone(),
            coeff: &self.coeff * c,
            shift: &self.shift + e,
        }
    }
}

#[derive(Clone, Debug)]
struct Branch {
    /// Prefix in the top unknown.
    y: Series,
    steps: Vec<Step>,
    res_gens: Vec<Exponent>,
    resonances: Vec<Resonance>,
    terms: Vec<TermRecord>,
    trace: Vec<(usize, Option<Exponent>)>,
    reductions: Vec<Reduction>,
    notes: Vec<String>,
    warnings: Vec<String>,
    depth: usize,
}

struct Frame {
    eq: DiffPoly,
    map: Map,
    /// Inclusive class range, or none for equations without derivatives.
    classes: Option<(usize, usize)>,
    cursor: Option<Exponent>,
    /// Also try the classes below the range through a restart from the top.
    restart_below: bool,
    /// (w, class) of the node this frame was reduced from.
    parent: Option<(usize, Option<usize>)>,
}

struct Node {
    g: DiffPoly,
    w: usize,
    class: Option<usize>,
    map: Map,
    z: Series,
    cursor: Option<Exponent>,
    fresh: bool,
}

struct Search<'a> {
    spec: &'a DerivationSpec,
    cfg: &'a SolveConfig,
    original: &'a DiffPoly,
    top: DiffPoly,
    top_map: Map,
    shift: Option<Exponent>,
    alpha0: Exponent,
    lo_top: usize,
    rank: usize,
    branches: usize,
    capped: bool,
    outcomes: Vec<SolveOutcome>,
}

const EXTENSION_COEFFS: [i64; 3] = [1, -1, 2];

impl Search<'_> {
    fn cap(&self) -> usize {
        self.cfg.budget.enum_cap
    }

    fn original_prefix(&self, y: &Series) -> Series {
        self.top_map.apply(y)
    }

    fn value(&self, y: &Series) -> Result<Option<Exponent>> {
        let r = self
            .original
            .evaluate_capped(&self.original_prefix(y), self.spec, self.cap())?;
        r.v()
    }

    fn over_budget(&self, y: &Series) -> bool {
        self.original_prefix(y).len() >= self.cfg.budget.max_terms
    }

    /// Replaces the prefix and records the new terms and the trace entry.
    fn append(&self, br: &mut Branch, node_map: &Map, local: &Series, kind: TermKind, class: Option<usize>) -> Result<()> {
        let y = node_map.apply(local);
        let before = self.original_prefix(&br.y);
        let after = self.original_prefix(&y);
        for (e, c) in after.terms() {
            if before.coeff(e) != *c {
                let local_e = e - &(&node_map.shift + &self.top_map.shift);
                br.terms.push(TermRecord {
                    exponent: e.clone(),
                    coeff: c.clone(),
                    kind,
                    local: local_e,
                    class,
                });
            }
        }
        br.y = y;
        let v = self.value(&br.y)?;
        br.trace.push((after.len(), v));
        Ok(())
    }

    fn emit(&mut self, br: Branch, variant: Variant, extensions_tested: usize) -> Result<()> {
        let mut br = br;
        let mut variant = variant;
        let prefix = self.original_prefix(&br.y);
        if variant == Variant::SolutionPrefix {
            let r = self.original.evaluate_capped(&prefix, self.spec, self.cap())?;
            if !r.is_empty() {
                br.warnings.push(format!("residual {r} does not vanish; not certified"));
                variant = Variant::BudgetExhausted;
            }
        }
        let prov = Provenance::new(self.rank, self.top.order(), self.top.deriv(), &br.steps, &br.res_gens);
        let bound = support_bound_r(&prov, self.spec).and_then(|r| match &self.shift {
            Some(_) if self.alpha0.is_positive() => r.add_generator(&self.alpha0),
            _ => Ok(r),
        });
        let (support_bound, contained) = match bound {
            Ok(r) => {
                let shift = self.shift.clone().unwrap_or_else(|| Exponent::zero(self.rank));
                let contained = prefix
                    .support()
                    .all(|e| r.member(&(e - &shift), self.cap()) == Membership::Yes);
                (r, contained)
            }
            Err(e) => {
                br.warnings.push(format!("support bound unavailable: {e}"));
                (GridSet::empty(self.rank), false)
            }
        };
        if !contained {
            br.warnings.push("a prefix exponent is not certified to lie in R".into());
        }
        self.outcomes.push(SolveOutcome {
            variant,
            prefix,
            trace: br.trace,
            resonances: br.resonances,
            support_bound,
            provenance: prov,
            terms: br.terms,
            reductions: br.reductions,
            shift: self.shift.clone(),
            contained,
            extensions_tested,
            notes: br.notes,
            warnings: br.warnings,
        });
        Ok(())
    }

    fn exhausted(&mut self, mut br: Branch, note: impl Into<String>) -> Result<bool> {
        br.notes.push(note.into());
        self.emit(br, Variant::BudgetExhausted, 0)?;
        Ok(true)
    }

    fn allow_branch(&mut self, br: &Branch) -> Result<bool> {
        self.branches += 1;
        if self.branches <= self.cfg.budget.max_branches {
            return Ok(true);
        }
        if !self.capped {
            self.capped = true;
            self.exhausted(br.clone(), "branch cap reached; remaining branches skipped")?;
        }
        Ok(false)
    }

    /// Emits `Stabilized` when v(P) stays put on every extension z + tail + c·t^e,
    /// and `BudgetExhausted` otherwise.
    fn stabilized(&mut self, mut br: Branch, map: &Map, z: &Series, tail: &Series, exps: &[Exponent], note: String) -> Result<bool> {
        br.y = map.apply(z);
        let v0 = self.value(&br.y).ok().flatten();
        let mut tested = 0;
        let mut ok = v0.is_some() && !exps.is_empty();
        'outer: for e in exps {
            for c in EXTENSION_COEFFS {
                let ext = &(z + tail) + &Series::monomial(Q::from_integer(c.into()), e.clone());
                match self.value(&map.apply(&ext)) {
                    Ok(v) if v == v0 => tested += 1,
                    _ => {
                        ok = false;
                        break 'outer;
                    }
                }
            }
        }
        if ok && tested >= 3 {
            br.notes.push(note);
            self.emit(br, Variant::Stabilized, tested)?;
        } else {
            br.notes.push(format!("{note}; stabilisation not confirmed on the tested extensions"));
            self.emit(br, Variant::BudgetExhausted, tested)?;
        }
        Ok(true)
    }

    /// Test exponents of class j above `cursor`.
    fn class_probes(&self, j: usize, cursor: Option<&Exponent>) -> Vec<Exponent> {
        let unit = Exponent::unit(self.rank, j);
        let half = Q::new(1.into(), 2.into());
        let base = match cursor {
            Some(c) if c.leading_class() == Some(j) => c.clone(),
            Some(c) if c.leading_class().is_some_and(|k| k < j) => return Vec::new(),
            _ => Exponent::zero(self.rank),
        };
        [Q::one(), half, Q::from_integer(2.into())]
            .iter()
            .map(|s| &base + &unit.scale(s))
            .collect()
    }

    fn explore(&mut self, fr: Frame, br: Branch, fallback: bool) -> Result<bool> {
        let mut emitted = false;
        match fr.classes {
            None => emitted |= self.open_node(&fr, None, br.clone())?,
            Some((lo, hi)) => {
                for c in (lo..=hi).rev() {
                    emitted |= self.open_node(&fr, Some(c), br.clone())?;
                }
                if fr.restart_below && lo > self.lo_top {
                    emitted |= self.restart(br.clone(), lo - 1, false)?;
                }
            }
        }
        if emitted || !fallback {
            return Ok(emitted);
        }
        let r = self.value(&br.y);
        if matches!(r, Ok(None)) {
            self.emit(br, Variant::SolutionPrefix, 0)?;
            return Ok(true);
        }
        let classes: Vec<usize> = match fr.classes {
            Some((lo, hi)) => (lo..=hi).rev().collect(),
            None => (1..=self.rank).rev().collect(),
        };
        let probes: Vec<Exponent> = classes
            .into_iter()
            .flat_map(|j| self.class_probes(j, fr.cursor.as_ref()))
            .collect();
        let z = Series::zero(self.rank);
        self.stabilized(br, &fr.map, &z, &z, &probes, "no admissible continuation in any class".into())
    }

    /// Restarts from the top equation conjugated by the current prefix, classes ≤ hi.
    fn restart(&mut self, mut br: Branch, hi: usize, fallback: bool) -> Result<bool> {
        if hi < self.lo_top {
            return if fallback {
                self.exhausted(br, "the continuation lies in classes below the derivation index of the equation")
            } else {
                Ok(false)
            };
        }
        if br.depth >= self.cfg.budget.max_depth {
            return self.exhausted(br, "reduction depth cap reached");
        }
        br.depth += 1;
        let eq = if br.y.is_exact_zero() {
            self.top.clone()
        } else {
            let t = additive_conjugate(&self.top, &br.y, self.spec)?;
            br.steps.push(t.step);
            t.poly
        };
        let frame = Frame {
            eq,
            map: Map::identity(self.rank).then_add(&br.y),
            classes: Some((self.lo_top, hi)),
            cursor: br.y.max_exponent().cloned(),
            restart_below: false,
            parent: None,
        };
        self.explore(frame, br, fallback)
    }

    fn open_node(&mut self, fr: &Frame, class: Option<usize>, mut br: Branch) -> Result<bool> {
        if !self.allow_branch(&br)? {
            return Ok(true);
        }
        let (eq, map, cursor) = match class {
            Some(c) => match change_derivation(&fr.eq, c, self.spec) {
                Err(Error::IllDefined(_)) => return Ok(false),
                Err(e) => return Err(e),
                Ok(t) => {
                    let (map, cursor) = match &t.step.transform {
                        Transform::ChangeDerivation { prestep: Some(m), .. } => {
                            let (e, c) = m.leading().expect("monomial");
                            (fr.map.then_mul(c, e), fr.cursor.as_ref().map(|x| x - e))
                        }
                        _ => (fr.map.clone(), fr.cursor.clone()),
                    };
                    if t.step.case != "identity" {
                        br.steps.push(t.step);
                    }
                    (t.poly, map, cursor)
                }
            },
            None => (fr.eq.clone(), fr.map.clone(), fr.cursor.clone()),
        };
        if eq.is_zero() {
            br.notes.push("the equation vanishes identically on this branch".into());
            self.emit(br, Variant::SolutionPrefix, 0)?;
            return Ok(true);
        }
        let (nt, w) = normalize(&eq)?;
        br.steps.push(nt.step);
        if let Some(from) = fr.parent {
            let red = Reduction { from, to: (w, class) };
            let ok = red.decreases();
            br.reductions.push(red);
            if !ok && w > 0 {
                return self.exhausted(br, format!("reduction from {from:?} to {:?} did not decrease", (w, class)));
            }
        }
        let node = Node {
            g: nt.poly,
            w,
            class,
            map,
            z: Series::zero(self.rank),
            cursor,
            fresh: true,
        };
        match w {
            0 => Ok(false),
            1 => self.run_w1(node, br),
            _ => self.run_reduction(node, br),
        }
    }

    fn run_w1(&mut self, mut node: Node, mut br: Branch) -> Result<bool> {
        let ind = node.g.indicial()?;
        if ind.irrational_root {
            br.warnings.push(format!(
                "indicial polynomial {} has an irrational positive root; R and the branch set may be incomplete",
                ind.pi
            ));
        }
        let resonant: Vec<Exponent> = match node.class {
            Some(c) => ind
                .rational_roots
                .iter()
                .map(|r| Exponent::unit(self.rank, c).scale(r))
                .collect(),
            None => Vec::new(),
        };
        loop {
            let f = node.g.evaluate_capped(&node.z, self.spec, self.cap())?;
            let above = |mu: &Exponent| node.cursor.as_ref().is_none_or(|c| mu > c);
            let fills = matches!(&self.cfg.policy, ResonancePolicy::Value(q) if !q.is_zero());
            if f.is_empty() && !(fills && resonant.iter().any(above)) {
                for mu in resonant.iter().filter(|mu| above(mu)) {
                    let e = &node.map.shift + mu;
                    br.resonances.push(Resonance {
                        exponent: &e + &self.top_map.shift,
                        note: format!("free coefficient (indicial root {}); further terms not explored", fmt_q(&class_coord(mu, node.class))),
                    });
                    br.res_gens.push(mu.clone());
                }
                self.emit(br, Variant::SolutionPrefix, 0)?;
                return Ok(true);
            }
            let v_s = if f.is_empty() {
                None
            } else {
                match f.v() {
                    Ok(Some(v)) => Some(v),
                    _ => return self.exhausted(br, "residual valuation lies beyond the truncation"),
                }
            };
            let pending = resonant
                .iter()
                .find(|mu| above(mu) && v_s.as_ref().is_none_or(|v| *mu < v))
                .cloned();
            if let Some(mu) = pending {
                let y_e = &(&node.map.shift + &mu) + &self.top_map.shift;
                br.res_gens.push(mu.clone());
                match &self.cfg.policy {
                    ResonancePolicy::Zero => {
                        br.resonances.push(Resonance {
                            exponent: y_e,
                            note: "free coefficient; set to 0".into(),
                        });
                    }
                    ResonancePolicy::Value(q) => {
                        br.resonances.push(Resonance {
                            exponent: y_e,
                            note: format!("free coefficient; set to {}", fmt_q(q)),
                        });
                        if !q.is_zero() {
                            if self.over_budget(&br.y) {
                                return self.exhausted(br, "term budget reached");
                            }
                            node.z = &node.z + &Series::monomial(q.clone(), mu.clone());
                            self.append(&mut br, &node.map, &node.z, TermKind::Resonance, node.class)?;
                            node.fresh = false;
                        }
                    }
                    ResonancePolicy::Report => {
                        br.resonances.push(Resonance {
                            exponent: y_e,
                            note: "free coefficient; branch stopped by the report policy".into(),
                        });
                        return self.exhausted(br, "stopped at a free coefficient");
                    }
                }
                node.cursor = Some(mu);
                continue;
            }
            let v_s = v_s.expect("an empty residual always has a pending resonance here");
            let admissible = node.cursor.as_ref().is_none_or(|c| &v_s > c)
                && (node.class.is_none() || v_s.leading_class() == node.class);
            if !admissible {
                if node.fresh {
                    return Ok(false);
                }
                let c = node.class.expect("classless nodes accept every exponent");
                if v_s.leading_class().is_some_and(|k| k < c) {
                    return self.restart(br, c - 1, true);
                }
                let probes = self.class_probes(c, node.cursor.as_ref());
                return self.stabilized(br, &node.map.clone(), &node.z.clone(), &Series::zero(self.rank), &probes, format!("residual valuation {v_s} lies in a higher class than {c}"));
            }
            let pi = ind.pi.eval(&class_coord(&v_s, node.class));
            if pi.is_zero() {
                let mut probes = vec![v_s.clone(), v_s.scale(&Q::from_integer(2.into()))];
                if let Some(c) = node.class {
                    probes.push(&v_s + &Exponent::unit(self.rank, c));
                }
                return self.stabilized(br, &node.map.clone(), &node.z.clone(), &Series::zero(self.rank), &probes, format!("indicial polynomial vanishes at the residual valuation {v_s}"));
            }
            if self.over_budget(&br.y) {
                return self.exhausted(br, "term budget reached");
            }
            let m = -f.leading().expect("finite").1.clone() / pi;
            node.z = &node.z + &Series::monomial(m, v_s.clone());
            self.append(&mut br, &node.map, &node.z, TermKind::Newton, node.class)?;
            node.cursor = Some(v_s);
            node.fresh = false;
        }
    }

    fn run_reduction(&mut self, node: Node, br: Branch) -> Result<bool> {
        let mut emitted = false;
        if node.g.constant_term().is_exact_zero() {
            self.emit(br.clone(), Variant::SolutionPrefix, 0)?;
            emitted = true;
        }
        if br.depth >= self.cfg.budget.max_depth {
            return self.exhausted(br, "reduction depth cap reached");
        }
        let red = reduce_weierstrass(&node.g, node.cursor.as_ref(), self.spec, &self.cfg.budget)?
            .expect("Weierstrass order at least 2");
        for e in &red.edges {
            if e.irrational_root {
                let mut b = br.clone();
                b.warnings.push(format!(
                    "edge polynomial {} at slope {} has an irrational root; those branches are not explored",
                    e.phi, e.slope
                ));
                if e.roots.is_empty() {
                    self.exhausted(b, "no rational coefficient on an edge with real roots")?;
                    emitted = true;
                }
            }
            if e.phi.is_zero() {
                let mut b = br.clone();
                b.warnings.push(format!("edge polynomial vanishes identically at slope {}", e.slope));
                self.exhausted(b, "free leading coefficient on a Newton polygon edge")?;
                emitted = true;
            }
        }
        if !red.center.is_exact_zero() {
            let centered = additive_conjugate(&node.g, &red.center, self.spec)?.poly;
            if centered.constant_term().is_exact_zero()
                && node.cursor.as_ref().is_none_or(|c| red.center.lower_bound().is_some_and(|v| v > c))
            {
                let mut b = br.clone();
                if !self.over_budget(&b.y) {
                    self.append(&mut b, &node.map, &red.center, TermKind::Center, node.class)?;
                    self.emit(b, Variant::SolutionPrefix, 0)?;
                    emitted = true;
                }
            }
        }
        if red.edges.is_empty() {
            return Ok(emitted);
        }
        if red.children.is_empty() {
            let mu = red.edges.last().expect("edges").slope.clone();
            if red.edges.iter().all(|e| !e.irrational_root && !e.phi.is_zero()) {
                let mut b = br.clone();
                let pre = terms_below(&red.center, &mu);
                if !pre.is_exact_zero() {
                    self.append(&mut b, &node.map, &pre, TermKind::Center, node.class)?;
                }
                let tail = &red.center - &pre;
                let probes = vec![
                    mu.clone(),
                    mu.scale(&Q::new(3.into(), 2.into())),
                    mu.scale(&Q::from_integer(2.into())),
                ];
                self.stabilized(b, &node.map, &pre, &tail, &probes, format!("no rational root on the Newton polygon edges (largest slope {mu})"))?;
                emitted = true;
            }
            return Ok(emitted);
        }
        for child in red.children {
            let mut b = br.clone();
            if !self.allow_branch(&b)? {
                emitted = true;
                continue;
            }
            if self.original_prefix(&node.map.apply(&child.fixed)).len() > self.cfg.budget.max_terms {
                self.exhausted(b, "term budget reached")?;
                emitted = true;
                continue;
            }
            b.depth += 1;
            b.steps.extend(child.steps.iter().cloned());
            b.res_gens.push(child.slope.clone());
            self.append(&mut b, &node.map, &child.fixed, TermKind::Edge, node.class)?;
            let frame = Frame {
                eq: child.poly,
                map: node.map.then_add(&child.fixed).then_mul(&Q::one(), &child.slope),
                classes: node.class.map(|c| (c, self.rank)),
                cursor: None,
                restart_below: true,
                parent: Some((node.w, node.class)),
            };
            emitted |= self.explore(frame, b, true)?;
        }
        Ok(emitted)
    }
}

fn outcome_key(o: &SolveOutcome) -> (Variant, Series, Vec<(usize, Option<Exponent>)>) {
    (o.variant, o.prefix.clone(), o.trace.clone())
}

/// Depth-first search over candidate branches; every leaf becomes an outcome.
pub fn solve(p: &DiffPoly, spec: &DerivationSpec, cfg: &SolveConfig) -> Result<Vec<SolveOutcome>> {
    check_rank(p.rank(), spec.rank())?;
    if p.is_zero() {
        return Err(Error::Domain("cannot solve the zero equation".into()));
    }
    let b = &cfg.budget;
    SolveBudget::new(b.max_terms, b.max_branches, b.max_depth, b.enum_cap)?;
    let rank = p.rank();
    let alpha0 = spec.alpha0(p.order());
    let mut pre_steps = Vec::new();
    let mut notes = Vec::new();
    let (top, top_map, shift) = match &cfg.leading {
        None => (p.clone(), Map::identity(rank), None),
        Some(lead) => match reduce_to_positive(p, lead, spec)? {
            Some(red) => {
                pre_steps = red.steps;
                let map = Map {
                    base: lead.clone(),
                    coeff: Q::one(),
                    shift: red.shift.clone(),
                };
                (red.poly, map, Some(red.shift))
            }
            None => {
                notes.push(format!("leading exponent exceeds alpha0 = {alpha0}; no reduction applied"));
                (p.clone(), Map::identity(rank), None)
            }
        },
    };
    if top.is_zero() {
        return Err(Error::Domain("the equation vanishes identically at the given leading term".into()));
    }
    let lo_top = top.deriv().max(1);
    let mut search = Search {
        spec,
        cfg,
        original: p,
        top: top.clone(),
        top_map,
        shift,
        alpha0: alpha0.clone(),
        lo_top,
        rank,
        branches: 0,
        capped: false,
        outcomes: Vec::new(),
    };
    let y0 = Series::zero(rank);
    let v0 = search.value(&y0)?;
    let br = Branch {
        y: y0.clone(),
        steps: pre_steps,
        res_gens: Vec::new(),
        resonances: Vec::new(),
        terms: Vec::new(),
        trace: vec![(search.original_prefix(&y0).len(), v0)],
        reductions: Vec::new(),
        notes,
        warnings: Vec::new(),
        depth: 0,
    };
    let frame = Frame {
        eq: top.clone(),
        map: Map::identity(rank),
        classes: if top.order() == 0 { None } else { Some((lo_top, rank)) },
        cursor: alpha0.is_positive().then_some(alpha0),
        restart_below: false,
        parent: None,
    };
    search.explore(frame, br, true)?;
    let mut seen = Vec::new();
    let mut out = Vec::new();
    for o in search.outcomes {
        let key = outcome_key(&o);
        if !seen.contains(&key) {
            seen.push(key);
            out.push(o);
        }
    }
    out.sort_by(|a, b| {
        let ea: Vec<&Exponent> = a.prefix.support().collect();
        let eb: Vec<&Exponent> = b.prefix.support().collect();
        ea.cmp(&eb)
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivation::{spec_a, spec_b, spec_c};
    use crate::exponent::{q, qr};

    fn e(c: &[i64]) -> Exponent {
        Exponent::from_ints(c)
    }

    fn s(text: &str, rank: usize) -> Series {
        Series::parse(text, rank).unwrap()
    }

    fn euler() -> DiffPoly {
        DiffPoly::parse(1, 1, &[(&[0, 1], "1"), (&[1, 0], "-2"), (&[0, 0], "1*t1^1")]).unwrap()
    }

    fn riccati() -> DiffPoly {
        DiffPoly::parse(1, 0, &[(&[0, 1], "1"), (&[2, 0], "1")]).unwrap()
    }

    fn shadow() -> DiffPoly {
        let c = "-1*t2^1 + -1*t2^2 + -1*t2^3 + -1*t2^4 + -1*t2^5 + -1*t2^6 + 1*t1^1";
        DiffPoly::parse(2, 0, &[(&[1], "1"), (&[0], c)]).unwrap()
    }

    fn budget(terms: usize) -> SolveConfig {
        SolveConfig {
            budget: SolveBudget {
                max_terms: terms,
                ..SolveBudget::default()
            },
            ..SolveConfig::default()
        }
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("zero".parse::<ResonancePolicy>().unwrap(), ResonancePolicy::Zero);
        assert_eq!("value:3/2".parse::<ResonancePolicy>().unwrap(), ResonancePolicy::Value(qr(3, 2)));
        assert_eq!("report".parse::<ResonancePolicy>().unwrap(), ResonancePolicy::Report);
        assert!("value:x".parse::<ResonancePolicy>().is_err());
        assert_eq!(ResonancePolicy::Value(qr(-1, 3)).to_string(), "value:-1/3");
        assert!(SolveBudget::new(0, 1, 1, 1).is_err());
    }

    #[test]
    fn candidates_euler() {
        let a = spec_a();
        let f = euler();
        let c = next_candidates(&f, &Series::zero(1), &a).unwrap();
        assert_eq!(
            c.list,
            vec![(e(&[1]), CandidateKind::Newton), (e(&[2]), CandidateKind::Resonance)]
        );
        let c = next_candidates(&f, &s("1*t1^1", 1), &a).unwrap();
        assert_eq!(c.list, vec![(e(&[2]), CandidateKind::Resonance)]);
        assert_eq!(c.v_s, None);
        let g = DiffPoly::parse(1, 1, &[(&[0, 1], "1"), (&[0, 0], "1*t1^1")]).unwrap();
        let c = next_candidates(&g, &Series::zero(1), &a).unwrap();
        assert_eq!(c.list, vec![(e(&[1]), CandidateKind::Newton)]);
    }

    #[test]
    fn w1_steps() {
        let a = spec_a();
        let f = euler();
        let zero = Series::zero(1);
        let st = solve_w1_step(&f, &zero, &e(&[1]), &a, &ResonancePolicy::Zero).unwrap();
        assert_eq!(st, W1Step::Determined { coeff: q(1), prefix: s("1*t1^1", 1) });
        let st = solve_w1_step(&f, &s("1*t1^1", 1), &e(&[2]), &a, &ResonancePolicy::Zero).unwrap();
        assert!(matches!(st, W1Step::Free { ref chosen, ref prefix, .. } if chosen.is_zero() && *prefix == s("1*t1^1", 1)));
        let st = solve_w1_step(&f, &s("1*t1^1", 1), &e(&[2]), &a, &ResonancePolicy::Value(q(5))).unwrap();
        let W1Step::Free { prefix, .. } = st else { panic!() };
        assert!(f.evaluate(&prefix, &a).unwrap().is_exact_zero());
        let g = DiffPoly::parse(1, 1, &[(&[0, 1], "1"), (&[0, 0], "1*t1^1")]).unwrap();
        let st = solve_w1_step(&g, &zero, &e(&[1]), &a, &ResonancePolicy::Zero).unwrap();
        let W1Step::Determined { coeff, prefix } = st else { panic!() };
        assert_eq!(coeff, q(-1));
        assert!(g.evaluate(&prefix, &a).unwrap().is_exact_zero());
        assert_eq!(solve_w1_step(&f, &zero, &e(&[3]), &a, &ResonancePolicy::Zero).unwrap(), W1Step::Dead);
    }

    #[test]
    fn euler_solution() {
        let a = spec_a();
        let out = solve(&euler(), &a, &SolveConfig::default()).unwrap();
        assert_eq!(out.len(), 1);
        let o = &out[0];
        assert_eq!(o.variant, Variant::SolutionPrefix);
        assert_eq!(o.prefix, s("1*t1^1", 1));
        assert_eq!(o.resonances.len(), 1);
        assert_eq!(o.resonances[0].exponent, e(&[2]));
        assert!(o.contained);
        for x in [e(&[1]), e(&[2])] {
            assert_eq!(o.support_bound.member(&x, 100), Membership::Yes);
        }
        assert_eq!(o.trace, vec![(0, Some(e(&[1]))), (1, None)]);
    }

    #[test]
    fn euler_value_and_report_policies() {
        let a = spec_a();
        let cfg = SolveConfig {
            policy: ResonancePolicy::Value(q(3)),
            ..SolveConfig::default()
        };
        let out = solve(&euler(), &a, &cfg).unwrap();
        assert_eq!(out[0].variant, Variant::SolutionPrefix);
        assert_eq!(out[0].prefix, s("1*t1^1 + 3*t1^2", 1));
        let cfg = SolveConfig {
            policy: ResonancePolicy::Report,
            ..SolveConfig::default()
        };
        let out = solve(&euler(), &a, &cfg).unwrap();
        // the free coefficient sits above the last term, so the prefix is still a solution
        assert_eq!(out[0].variant, Variant::SolutionPrefix);
    }

    #[test]
    fn riccati_solution() {
        let a = spec_a();
        let out = solve(&riccati(), &a, &SolveConfig::default()).unwrap();
        let prefixes: Vec<String> = out.iter().map(|o| o.prefix.to_string()).collect();
        assert_eq!(prefixes, vec!["0", "1*t1^1"]);
        for o in &out {
            assert_eq!(o.variant, Variant::SolutionPrefix);
            assert!(riccati().evaluate(&o.prefix, &a).unwrap().is_exact_zero());
            assert!(o.contained);
        }
        let t = &out[1];
        assert_eq!(t.reductions, vec![Reduction { from: (2, Some(1)), to: (1, Some(1)) }]);
        assert!(t.reductions.iter().all(Reduction::decreases));
        assert_eq!(t.resonances[0].exponent, e(&[2]));
    }

    #[test]
    fn riccati_reduction_step() {
        let a = spec_a();
        let g = change_derivation(&riccati(), 1, &a).unwrap().poly;
        let red = reduce_weierstrass(&g, None, &a, &SolveBudget::default()).unwrap().unwrap();
        assert_eq!(red.w, 2);
        assert_eq!(red.pivot, MultiIndex(vec![1, 0]));
        assert!(red.center.is_exact_zero());
        assert_eq!(red.edges.len(), 1);
        assert_eq!(red.edges[0].slope, e(&[1]));
        assert_eq!(red.edges[0].phi.to_string(), "X^2 - X");
        assert_eq!(red.children.len(), 1);
        let child = normalize(&red.children[0].poly).unwrap();
        assert_eq!(child.1, 1);
        assert_eq!(child.0.poly.to_string(), "(-1)*D1y + (1)*y^2 + (1)*y");
        let gate = reduce_weierstrass(&euler(), None, &a, &SolveBudget::default()).unwrap();
        assert!(gate.is_none());
    }

    #[test]
    fn shadow_budget() {
        let c = spec_c();
        let out = solve(&shadow(), &c, &budget(4)).unwrap();
        assert_eq!(out.len(), 1);
        let o = &out[0];
        assert_eq!(o.variant, Variant::BudgetExhausted);
        let expected: Vec<(usize, Option<Exponent>)> = (0..=4).map(|k| (k, Some(e(&[0, k as i64 + 1])))).collect();
        assert_eq!(o.trace, expected);
        assert!(o.contained);
        assert_eq!(o.prefix, s("1*t2^1 + 1*t2^2 + 1*t2^3 + 1*t2^4", 2));
    }

    #[test]
    fn shadow_full_budget_solves() {
        let c = spec_c();
        let out = solve(&shadow(), &c, &budget(12)).unwrap();
        assert_eq!(out[0].variant, Variant::SolutionPrefix);
        assert_eq!(out[0].prefix.len(), 7);
    }

    #[test]
    fn quadratic_stabilizes() {
        let a = spec_a();
        let f = DiffPoly::parse(1, 0, &[(&[2], "1"), (&[1], "1*t1^1"), (&[0], "1*t1^2")]).unwrap();
        let out = solve(&f, &a, &SolveConfig::default()).unwrap();
        assert_eq!(out.len(), 1);
        let o = &out[0];
        assert_eq!(o.variant, Variant::Stabilized);
        assert!(o.extensions_tested >= 3);
        assert!(o.trace.iter().all(|(_, v)| v.as_ref() == Some(&e(&[2]))));
    }

    #[test]
    fn algebraic_double_root_needs_center() {
        // (y − t)² − t³: the center t separates the branches ±t^{3/2}
        let a = spec_a();
        let f = DiffPoly::parse(1, 0, &[(&[2], "1"), (&[1], "-2*t1^1"), (&[0], "1*t1^2 + -1*t1^3")]).unwrap();
        let out = solve(&f, &a, &SolveConfig::default()).unwrap();
        let sols: Vec<String> = out
            .iter()
            .filter(|o| o.variant == Variant::SolutionPrefix)
            .map(|o| o.prefix.to_string())
            .collect();
        assert_eq!(sols, vec!["1*t1^1 - 1*t1^(3/2)", "1*t1^1 + 1*t1^(3/2)"]);
        for o in &out {
            assert!(o.contained, "{o}");
            assert!(o.reductions.iter().all(Reduction::decreases));
        }
    }

    #[test]
    fn order_zero_support_bound_is_coefficient_support() {
        let a = spec_a();
        let f = DiffPoly::parse(1, 0, &[(&[1], "1"), (&[0], "-1*t1^1 + -2*t1^3")]).unwrap();
        let out = solve(&f, &a, &SolveConfig::default()).unwrap();
        assert_eq!(out[0].variant, Variant::SolutionPrefix);
        assert_eq!(out[0].support_bound, GridSet::lattice(1, [e(&[1]), e(&[3])]).unwrap());
    }

    #[test]
    fn two_classes() {
        // y = t₂ + t₁ under SPEC-B in D₀ form: y' − (t₂' + t₁') = 0
        let b = spec_b();
        let target = s("1*t1^1 + 1*t2^1", 3);
        let rhs = b.derive_d0(&target).unwrap();
        let f = DiffPoly::new(3, 1, 0, [(MultiIndex(vec![0, 1]), Series::one(3)), (MultiIndex(vec![0, 0]), -&rhs)]).unwrap();
        let out = solve(&f, &b, &SolveConfig::default()).unwrap();
        assert!(out.iter().any(|o| o.variant == Variant::SolutionPrefix
            && f.evaluate(&o.prefix, &b).unwrap().is_empty()), "{out:?}");
        for o in &out {
            assert!(o.contained, "{o}");
        }
    }

    #[test]
    fn leading_term_reduction() {
        let c = spec_c();
        let p = DiffPoly::parse(2, 0, &[(&[1], "1"), (&[0], "-1*t2^1")]).unwrap();
        assert!(reduce_to_positive(&p, &s("1*t2^1", 2), &c).unwrap().is_none());
        let a = spec_a();
        let p = DiffPoly::parse(1, 0, &[(&[0, 1], "1"), (&[0, 0], "-1")]).unwrap();
        let lead = s("1*t1^-1", 1);
        let red = reduce_to_positive(&p, &lead, &a).unwrap().unwrap();
        assert_eq!(red.shift, e(&[-1]));
        let z = s("2*t1^1 + -1*t1^3", 1);
        let y = &lead + &z.mul_monomial(&q(1), &red.shift);
        assert_eq!(p.evaluate(&y, &a).unwrap(), red.poly.evaluate(&z, &a).unwrap());
        let cfg = SolveConfig {
            leading: Some(lead),
            ..SolveConfig::default()
        };
        let out = solve(&p, &a, &cfg).unwrap();
        assert!(!out.is_empty());
        for o in &out {
            assert!(o.contained, "{o}");
            assert_eq!(o.shift, Some(e(&[-1])));
        }
    }

    #[test]
    fn provenance_round_trip() {
        let a = spec_a();
        let out = solve(&riccati(), &a, &SolveConfig::default()).unwrap();
        let prov = &out[1].provenance;
        let text = serde_json::to_string(prov).unwrap();
        let back: Provenance = serde_json::from_str(&text).unwrap();
        assert_eq!(&back, prov);
        assert_eq!(support_bound_r(&back, &a).unwrap(), out[1].support_bound);
    }

    #[test]
    fn deterministic() {
        let a = spec_a();
        let f = DiffPoly::parse(1, 0, &[(&[2], "1"), (&[1], "-2*t1^1"), (&[0], "1*t1^2 + -1*t1^3")]).unwrap();
        let one: Vec<String> = solve(&f, &a, &SolveConfig::default()).unwrap().iter().map(ToString::to_string).collect();
        let two: Vec<String> = solve(&f, &a, &SolveConfig::default()).unwrap().iter().map(ToString::to_string).collect();
        assert_eq!(one, two);
    }
}
