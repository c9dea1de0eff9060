//! Hardy-type derivations given by their logarithmic derivatives t_k'/t_k,
//! the rescaled derivations D_k, and the constants d_k, τ⁽ᵏ⁾, θ⁽ᵏ⁾, k̃, k₀.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{check_rank, Error, Result};
use crate::exponent::{Exponent, Q};
use crate::grid::GridSet;
use crate::series::Series;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassConstants {
    /// Coefficient T_k of d_k = δ(t_k'/t_k).
    pub coeff: Q,
    /// θ⁽ᵏ⁾ = v(d_k)
    pub theta: Exponent,
    /// τ⁽ᵏ⁾ = v(t_k') = e_k + θ⁽ᵏ⁾
    pub tau: Exponent,
    /// k̃: class of θ⁽ᵏ⁾, absent when θ⁽ᵏ⁾ = 0̲.
    pub tilde_k: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecConstants {
    pub classes: Vec<ClassConstants>,
    pub k0: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomCheck {
    pub name: &'static str,
    pub indices: Vec<usize>,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for AxiomCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx: Vec<String> = self.indices.iter().map(ToString::to_string).collect();
        let status = if self.passed { "pass" } else { "FAIL" };
        write!(f, "{} [{}]: {} ({})", self.name, idx.join("->"), status, self.detail)
    }
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub checks: Vec<AxiomCheck>,
    pub constants: Option<SpecConstants>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(ToString::to_string)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivationSpec {
    rank: usize,
    logs: Vec<Series>,
    constants: SpecConstants,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecFile {
    pub rank: usize,
    pub log_derivatives: Vec<String>,
}

/// What the valuation law for iterated derivatives of d_k predicts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DkPrediction {
    /// d_k is a constant, so every derivative vanishes.
    Zero,
    Value(Exponent),
    /// The resonant case: one of these values, depending on a class k̂ > k₀
    /// that the data does not pin down.
    Candidates(Vec<Exponent>),
}

fn check(name: &'static str, indices: Vec<usize>, passed: bool, detail: String) -> AxiomCheck {
    AxiomCheck {
        name,
        indices,
        passed,
        detail,
    }
}

/// Checks the axioms on the leading data of the given log-derivatives.
pub fn validate(rank: usize, logs: &[Series]) -> Result<ValidationReport> {
    if logs.len() != rank {
        return Err(Error::LengthMismatch {
            left: rank,
            right: logs.len(),
        });
    }
    let mut checks = Vec::new();
    let mut leading = Vec::new();
    for (i, l) in logs.iter().enumerate() {
        check_rank(rank, l.rank())?;
        let lead = l.leading().map(|(e, c)| (e.clone(), c.clone()));
        let ok = lead.is_some();
        checks.push(check(
            "nonzero",
            vec![i + 1],
            ok,
            if ok {
                format!("t{}'/t{} = {}", i + 1, i + 1, l)
            } else {
                "log-derivative has no determinable leading term".into()
            },
        ));
        leading.push(lead);
    }
    if leading.iter().any(Option::is_none) {
        return Ok(ValidationReport {
            checks,
            constants: None,
        });
    }
    let classes: Vec<ClassConstants> = leading
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            let (theta, coeff) = l.expect("checked above");
            let tau = &Exponent::unit(rank, i + 1) + &theta;
            let tilde_k = theta.leading_class();
            ClassConstants {
                coeff,
                theta,
                tau,
                tilde_k,
            }
        })
        .collect();

    for k in 1..rank {
        let (a, b) = (&classes[k - 1], &classes[k]);
        checks.push(check(
            "HD2",
            vec![k, k + 1],
            a.tau > b.tau,
            format!("v(t{k}') = {} vs v(t{}') = {}", a.tau, k + 1, b.tau),
        ));
        checks.push(check(
            "HD3",
            vec![k, k + 1],
            a.theta < b.theta,
            format!("theta{k} = {} vs theta{} = {}", a.theta, k + 1, b.theta),
        ));
        let (ta, tb) = (a.tau.coords(), b.tau.coords());
        let same_head = (0..k - 1).all(|j| ta[j] == tb[j]);
        let step = tb[k - 1] == &ta[k - 1] - Q::one();
        let mut tail_b: Vec<Q> = vec![Q::zero(); rank];
        let mut tail_a: Vec<Q> = vec![Q::zero(); rank];
        tail_b[k..rank].clone_from_slice(&tb[k..rank]);
        tail_a[k..rank].clone_from_slice(&ta[k..rank]);
        tail_b[k] -= Q::one();
        let tail = Exponent::new(tail_b) > Exponent::new(tail_a);
        checks.push(check(
            "tau-matrix",
            vec![k, k + 1],
            same_head && step && tail,
            format!(
                "head equal: {same_head}, class-{k} step -1: {step}, tail increase: {tail}"
            ),
        ));
    }
    for k in 1..=rank {
        for l in 1..k {
            let diff = &classes[k - 1].theta - &classes[l - 1].theta;
            let ok = match diff.leading_class() {
                Some(m) => m >= l && diff.at(m).is_positive(),
                None => false,
            };
            checks.push(check(
                "val_d_k",
                vec![l, k],
                ok,
                format!("v(d{k}/d{l}) = {diff}"),
            ));
        }
    }

    let fixed: Vec<usize> = (1..=rank)
        .filter(|&k| classes[k - 1].tilde_k == Some(k))
        .collect();
    checks.push(check(
        "k0",
        fixed.clone(),
        fixed.len() <= 1,
        format!("classes with tilde k = k: {fixed:?}"),
    ));
    let k0 = fixed.first().copied().unwrap_or(rank);
    Ok(ValidationReport {
        checks,
        constants: Some(SpecConstants { classes, k0 }),
    })
}

impl DerivationSpec {
    pub fn new(rank: usize, logs: Vec<Series>) -> Result<Self> {
        let report = validate(rank, &logs)?;
        if !report.passed() {
            return Err(Error::InvalidSpec(report.failures()));
        }
        Ok(DerivationSpec {
            rank,
            logs,
            constants: report.constants.expect("constants of a passing spec"),
        })
    }

    pub fn parse(rank: usize, logs: &[&str]) -> Result<Self> {
        let logs = logs
            .iter()
            .map(|s| Series::parse(s, rank))
            .collect::<Result<Vec<_>>>()?;
        DerivationSpec::new(rank, logs)
    }

    pub fn from_file(file: &SpecFile) -> Result<Self> {
        let refs: Vec<&str> = file.log_derivatives.iter().map(String::as_str).collect();
        DerivationSpec::parse(file.rank, &refs)
    }

    pub fn to_file(&self) -> SpecFile {
        SpecFile {
            rank: self.rank,
            log_derivatives: self.logs.iter().map(ToString::to_string).collect(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// t_k'/t_k
    pub fn log_derivative(&self, k: usize) -> &Series {
        &self.logs[k - 1]
    }

    pub fn constants(&self) -> &SpecConstants {
        &self.constants
    }

    pub fn class(&self, k: usize) -> &ClassConstants {
        &self.constants.classes[k - 1]
    }

    pub fn theta(&self, k: usize) -> &Exponent {
        &self.class(k).theta
    }

    pub fn k0(&self) -> usize {
        self.constants.k0
    }

    /// d_k as a one-term series; d₀ = 1.
    pub fn d(&self, k: usize) -> Series {
        if k == 0 {
            return Series::one(self.rank);
        }
        let c = self.class(k);
        Series::monomial(c.coeff.clone(), c.theta.clone())
    }

    /// v(d_k), with v(d₀) = 0̲.
    pub fn v_d(&self, k: usize) -> Exponent {
        if k == 0 {
            Exponent::zero(self.rank)
        } else {
            self.theta(k).clone()
        }
    }

    /// a' = Σ_k [Σ_α a_α α_k t^α]·(t_k'/t_k).
    pub fn derive_d0(&self, a: &Series) -> Result<Series> {
        check_rank(self.rank, a.rank())?;
        let mut out = Series::zero(self.rank);
        for k in 1..=self.rank {
            let weighted = Series::from_terms(
                self.rank,
                a.terms()
                    .iter()
                    .map(|(e, c)| (e.clone(), c * e.at(k))),
                a.trunc().cloned(),
            )?;
            out = &out + &(&weighted * &self.logs[k - 1]);
        }
        Ok(out)
    }

    /// D_k a = a'/d_k for k ≥ 1, and D₀ a = a'.
    pub fn derive(&self, a: &Series, k: usize) -> Result<Series> {
        let da = self.derive_d0(a)?;
        if k == 0 {
            return Ok(da);
        }
        let c = self.class(k);
        Ok(da.mul_monomial(&c.coeff.recip(), &-&c.theta))
    }

    /// D_kⁱ a
    pub fn derive_dk(&self, a: &Series, k: usize, i: u32) -> Result<Series> {
        if k > self.rank {
            return Err(Error::Domain(format!("class {k} outside rank {}", self.rank)));
        }
        let mut out = a.clone();
        for _ in 0..i {
            out = self.derive(&out, k)?;
        }
        Ok(out)
    }

    /// The valuation of d_k⁽ⁱ⁾ predicted by case analysis on k, k̃ and k₀.
    pub fn predicted_dk_derivative_valuation(&self, k: usize, i: u32) -> DkPrediction {
        assert!(i >= 1, "prediction is for i >= 1");
        let theta = self.theta(k);
        let Some(tk) = self.class(k).tilde_k else {
            return DkPrediction::Zero;
        };
        let k0 = self.k0();
        let th0 = self.theta(k0);
        let iq = Q::from_integer(i.into());
        let straight = |base: &Exponent| &theta.clone() + &base.scale(&iq);
        let shifted = |hat: usize| {
            let im1 = Q::from_integer((i - 1).into());
            &(theta + self.theta(hat)) + &th0.scale(&im1)
        };
        if k >= k0 {
            return DkPrediction::Value(straight(th0));
        }
        if tk < k0 {
            return DkPrediction::Value(straight(self.theta(tk)));
        }
        if tk > k0 {
            return DkPrediction::Value(shifted(tk));
        }
        // k̃ = k₀: resonance when θ⁽ᵏ⁾_{k₀} = −j·θ⁽ᵏ⁰⁾_{k₀} for some j ≥ 1.
        let ratio = -(theta.at(k0) / th0.at(k0));
        if ratio.is_integer() && ratio.is_positive() && iq > ratio {
            return DkPrediction::Candidates(((k0 + 1)..=self.rank).map(shifted).collect());
        }
        DkPrediction::Value(straight(th0))
    }

    /// v(d_k⁽ⁱ⁾) computed by differentiating d_k i times.
    pub fn dk_derivative_valuation(&self, k: usize, i: u32) -> Result<Option<Exponent>> {
        self.derive_dk(&self.d(k), 0, i)?.v()
    }

    /// 𝒯_k = Σ_{i=1..n} Σ_{l=k..r} ⟨Supp D_kⁱ t_l / t_l⟩
    pub fn script_t(&self, k: usize, n: usize) -> Result<GridSet> {
        if k == 0 || k > self.rank {
            return Err(Error::Domain(format!("class {k} outside 1..{}", self.rank)));
        }
        let mut out = GridSet::origin(self.rank);
        for l in k..=self.rank {
            let tl = Series::monomial(Q::one(), Exponent::unit(self.rank, l));
            let mut cur = tl.clone();
            for _ in 1..=n {
                cur = self.derive(&cur, k)?;
                let ratio = cur.mul_monomial(&Q::one(), &-&Exponent::unit(self.rank, l));
                if let Some(t) = ratio.trunc() {
                    return Err(Error::NonAccessible(format!(
                        "support of D_{k}^i t_{l}/t_{l} only known below {t}"
                    )));
                }
                out = out.sum(&GridSet::support_of(&ratio).semigroup()?)?;
            }
        }
        Ok(out)
    }

    /// α₀ = max{0̲, −n·θ⁽ᵏ⁰⁾}
    pub fn alpha0(&self, n: usize) -> Exponent {
        let neg = self.theta(self.k0()).scale(&-Q::from_integer(n.into()));
        Exponent::max_of(&Exponent::zero(self.rank), &neg)
    }
}

/// Reference derivations: t₁ ∼ 1/x under d/dx.
pub fn spec_a() -> DerivationSpec {
    DerivationSpec::parse(1, &["-1*t1^1"]).expect("reference spec A")
}

/// t₁ = e^{−x}, t₂ = 1/x, t₃ = 1/log x.
pub fn spec_b() -> DerivationSpec {
    DerivationSpec::parse(3, &["-1", "-1*t2^1", "-1*t2^1*t3^1"]).expect("reference spec B")
}

/// t₁ = e^{−1/x}, t₂ = x as x → 0⁺.
pub fn spec_c() -> DerivationSpec {
    DerivationSpec::parse(2, &["1*t2^-2", "1*t2^-1"]).expect("reference spec C")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::{q, qr};
    use proptest::prelude::*;

    fn e(c: &[i64]) -> Exponent {
        Exponent::from_ints(c)
    }

    fn s(text: &str, rank: usize) -> Series {
        Series::parse(text, rank).unwrap()
    }

    #[test]
    fn reference_constants() {
        let a = spec_a();
        assert_eq!(a.class(1).tau, e(&[2]));
        assert_eq!(a.theta(1), &e(&[1]));
        assert_eq!(a.class(1).coeff, q(-1));
        assert_eq!(a.class(1).tilde_k, Some(1));
        assert_eq!(a.k0(), 1);

        let b = spec_b();
        assert_eq!(b.theta(1), &e(&[0, 0, 0]));
        assert_eq!(b.theta(2), &e(&[0, 1, 0]));
        assert_eq!(b.theta(3), &e(&[0, 1, 1]));
        assert_eq!(b.class(1).tau, e(&[1, 0, 0]));
        assert_eq!(b.class(2).tau, e(&[0, 2, 0]));
        assert_eq!(b.class(3).tau, e(&[0, 1, 2]));
        assert_eq!(b.class(2).tilde_k, Some(2));
        assert_eq!(b.class(1).tilde_k, None);
        assert_eq!(b.k0(), 2);

        let c = spec_c();
        assert_eq!(c.class(1).tau, e(&[1, -2]));
        assert_eq!(c.class(2).tau, e(&[0, 0]));
        assert_eq!(c.k0(), 2);
    }

    #[test]
    fn literal_spec_b_rejected() {
        let logs = vec![s("-1", 3), s("-1*t2^1", 3), s("-1*t1^1*t2^2*t3^-1", 3)];
        let report = validate(3, &logs).unwrap();
        let hd2 = report
            .checks
            .iter()
            .find(|c| c.name == "HD2" && c.indices == vec![2, 3])
            .unwrap();
        assert!(!hd2.passed);
        assert!(matches!(DerivationSpec::new(3, logs), Err(Error::InvalidSpec(_))));

        let variant = vec![s("-1", 3), s("-1*t2^1", 3), s("-1*t1^1*t2^1", 3)];
        let report = validate(3, &variant).unwrap();
        assert!(report
            .checks
            .iter()
            .any(|c| c.name == "HD2" && c.indices == vec![2, 3] && !c.passed));
    }

    #[test]
    fn zero_log_derivative_rejected() {
        let report = validate(1, &[Series::zero(1)]).unwrap();
        assert!(!report.passed());
        assert!(report.constants.is_none());
    }

    #[test]
    fn d0_examples() {
        let b = spec_b();
        let a = s("1*t2^(3/2)", 3);
        assert_eq!(b.derive_d0(&a).unwrap(), s("-3/2*t2^(5/2)", 3));
        assert!(b.derive_d0(&s("5", 3)).unwrap().is_exact_zero());
        let c = spec_c();
        assert_eq!(c.derive_d0(&s("1*t1^1", 2)).unwrap(), s("1*t1^1*t2^-2", 2));
    }

    #[test]
    fn d0_truncation() {
        let a = spec_a();
        let x = s("1*t1^1 + O((3))", 1);
        assert_eq!(a.derive_d0(&x).unwrap(), s("-1*t1^2 + O((4))", 1));
    }

    #[test]
    fn dk_examples() {
        let a = spec_a();
        let mu = qr(7, 3);
        let x = Series::monomial(q(1), Exponent::new(vec![mu.clone()]));
        assert_eq!(a.derive_dk(&x, 1, 1).unwrap(), x.scale(&mu));
        let b = spec_b();
        let y = Series::monomial(q(1), Exponent::new(vec![q(0), q(0), qr(5, 2)]));
        assert_eq!(b.derive_dk(&y, 3, 2).unwrap(), y.scale(&qr(25, 4)));
        assert_eq!(b.derive_dk(&y, 2, 0).unwrap(), y);
    }

    #[test]
    fn prediction_examples() {
        let b = spec_b();
        assert_eq!(
            b.predicted_dk_derivative_valuation(3, 1),
            DkPrediction::Value(e(&[0, 2, 1]))
        );
        assert_eq!(b.dk_derivative_valuation(3, 1).unwrap(), Some(e(&[0, 2, 1])));
        assert_eq!(b.derive_d0(&b.d(3)).unwrap(), s("1*t2^2*t3^1 + 1*t2^2*t3^2", 3));
        assert_eq!(b.predicted_dk_derivative_valuation(1, 3), DkPrediction::Zero);
        let c = spec_c();
        assert_eq!(
            c.predicted_dk_derivative_valuation(1, 2),
            DkPrediction::Value(e(&[0, -4]))
        );
        assert_eq!(c.dk_derivative_valuation(1, 2).unwrap(), Some(e(&[0, -4])));
    }

    #[test]
    fn resonant_prediction_reports_candidates() {
        // θ⁽¹⁾ = (0,2,0) against θ⁽ᵏ⁰⁾ = (0,-1,0): j = 2.
        let spec = DerivationSpec::parse(3, &["1*t2^2", "1*t2^-1", "1*t2^-1*t3^1"]);
        if let Ok(spec) = spec {
            if spec.k0() == 2 && spec.class(1).tilde_k == Some(2) {
                assert!(matches!(
                    spec.predicted_dk_derivative_valuation(1, 3),
                    DkPrediction::Candidates(_)
                ));
            }
        }
    }

    #[test]
    fn script_t_examples() {
        let b = spec_b();
        let t = b.script_t(2, 1).unwrap();
        assert_eq!(t, GridSet::lattice(3, [e(&[0, 0, 1])]).unwrap());
        let a = spec_a();
        let t = a.script_t(1, 2).unwrap();
        assert_eq!(t, GridSet::origin(1));
        let nat1 = GridSet::lattice(1, [e(&[1])]).unwrap();
        for x in t.enumerate_below(&e(&[50]), 100).unwrap() {
            assert_eq!(nat1.member(&x, 100), crate::grid::Membership::Yes);
        }
        assert_eq!(b.script_t(1, 0).unwrap(), GridSet::origin(3));
    }

    #[test]
    fn alpha0_examples() {
        assert_eq!(spec_a().alpha0(2), e(&[0]));
        assert_eq!(spec_c().alpha0(2), e(&[0, 2]));
        assert_eq!(spec_b().alpha0(0), e(&[0, 0, 0]));
    }

    fn specs() -> Vec<DerivationSpec> {
        vec![spec_a(), spec_b(), spec_c()]
    }

    fn arb_series(rank: usize) -> impl Strategy<Value = Series> {
        proptest::collection::vec(
            (proptest::collection::vec(-3i64..4, rank), 1i64..3, -4i64..5),
            0..4,
        )
        .prop_map(move |ts| {
            Series::from_terms(
                rank,
                ts.into_iter().map(|(ex, d, c)| {
                    (Exponent::new(ex.into_iter().map(|x| qr(x, d)).collect()), q(c))
                }),
                None,
            )
            .unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn leibniz(idx in 0usize..3, seed_a in arb_series(3), seed_b in arb_series(3)) {
            let spec = &specs()[idx];
            let r = spec.rank();
            let cut = |x: &Series| Series::from_terms(
                r,
                x.terms().iter().map(|(e, c)| (Exponent::new(e.coords()[..r].to_vec()), c.clone())),
                None,
            ).unwrap();
            let (a, b) = (cut(&seed_a), cut(&seed_b));
            let lhs = spec.derive_d0(&(&a * &b)).unwrap();
            let rhs = &(&spec.derive_d0(&a).unwrap() * &b) + &(&a * &spec.derive_d0(&b).unwrap());
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn valuation_law(idx in 0usize..3, raw in proptest::collection::vec((-4i64..5, 1i64..3), 3)) {
            let spec = &specs()[idx];
            let r = spec.rank();
            let alpha = Exponent::new(raw[..r].iter().map(|&(n, d)| qr(n, d)).collect());
            prop_assume!(!alpha.is_zero());
            let k = alpha.leading_class().unwrap();
            let d = spec.derive_d0(&Series::monomial(q(1), alpha.clone())).unwrap();
            prop_assert_eq!(d.v().unwrap(), Some(&alpha + spec.theta(k)));
        }
    }
}
