//! Equation transformations: additive conjugation y = a + z, multiplicative
//! conjugation y = m·z, and the change of derivation D_k → D_l, each with a
//! support bound for the transformed coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::derivation::DerivationSpec;
use crate::diffpoly::{derivatives, DiffPoly};
use crate::error::{check_rank, Error, Result};
use crate::exponent::{binomial, Exponent, MultiIndex, Q};
use crate::grid::GridSet;
use crate::series::{Series, DEFAULT_ENUM_CAP};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Transform {
    Additive { by: Series },
    Multiplicative { by: Series },
    ChangeDerivation {
        from: usize,
        to: usize,
        /// The monomial M of the preliminary y = M·z, when one was needed.
        prestep: Option<Series>,
    },
    Normalize { shift: Exponent },
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transform::Additive { by } => write!(f, "y = ({by}) + z"),
            Transform::Multiplicative { by } => write!(f, "y = ({by})*z"),
            Transform::ChangeDerivation { from, to, prestep: None } => write!(f, "D{from} -> D{to}"),
            Transform::ChangeDerivation { from, to, prestep: Some(m) } => {
                write!(f, "y = ({m})*z, then D{from} -> D{to}")
            }
            Transform::Normalize { shift } => write!(f, "divide by t^{shift}"),
        }
    }
}

/// One transformation applied to an equation, with the support bound of its output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub transform: Transform,
    /// Which inclusion produced `bound`; "exact" when the computed support was used.
    pub case: String,
    pub bound: GridSet,
}

impl Step {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "transform": self.transform.to_string(),
            "case": self.case,
            "bound": self.bound.to_json(),
            "bound_text": self.bound.to_string(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct Transformed {
    pub poly: DiffPoly,
    pub step: Step,
}

/// θ* and 𝒯* governing base-derivation derivatives of terms of class ≥ `class`.
fn base_constants(spec: &DerivationSpec, class: usize, n: usize) -> Result<(Exponent, GridSet)> {
    let k = if class < spec.k0() { class } else { spec.k0() };
    Ok((spec.theta(k).clone(), spec.script_t(k, n)?))
}

fn min_class(s: &Series) -> Option<usize> {
    s.support().filter_map(Exponent::leading_class).min()
}

fn with_fallback(bound: Result<GridSet>, case: &'static str, out: &DiffPoly) -> (GridSet, &'static str) {
    match bound {
        Ok(b) => (b, case),
        Err(_) => (out.support(), "exact"),
    }
}

/// F(a + z) = Σ_J F^{(J)}(a)/J! · z^{(J)}
pub fn additive_conjugate(f: &DiffPoly, a: &Series, spec: &DerivationSpec) -> Result<Transformed> {
    check_rank(f.rank(), a.rank())?;
    let derivs = derivatives(spec, a, f.deriv(), f.order())?;
    let mut coeffs = Vec::new();
    for idx in f.partial_indices() {
        let fj = f.partial_derivative(&idx)?;
        let val = fj.evaluate_with(&derivs, DEFAULT_ENUM_CAP)?;
        coeffs.push((idx.clone(), val.scale(&Q::from_integer(idx.factorial()).recip())));
    }
    let out = DiffPoly::new(f.rank(), f.order(), f.deriv(), coeffs)?;
    let (bound, case) = with_fallback(additive_bound(f, a, spec), additive_case(f, a, spec), &out);
    Ok(Transformed {
        poly: out,
        step: Step {
            transform: Transform::Additive { by: a.clone() },
            case: case.into(),
            bound,
        },
    })
}

fn additive_case(f: &DiffPoly, a: &Series, spec: &DerivationSpec) -> &'static str {
    match (f.deriv(), min_class(a)) {
        (_, None) => "identity",
        (0, Some(l)) if l < spec.k0() => "base derivation, class below k0",
        (0, Some(_)) => "base derivation, class at least k0",
        _ => "rescaled derivation",
    }
}

/// ∪_J bound(F^{(J)} at a), which is Supp F + 𝒯 + ⟨S_a⟩ up to the θ-shifts
/// needed for the base derivation.
fn additive_bound(f: &DiffPoly, a: &Series, spec: &DerivationSpec) -> Result<GridSet> {
    let Some(l) = min_class(a) else {
        return if a.is_exact_zero() {
            Ok(f.support())
        } else {
            Err(Error::Domain("constant shift has no class".into()))
        };
    };
    if a.support().any(|e| e.is_zero()) || a.trunc().is_some() {
        return Err(Error::Domain("shift must be exact and free of constants".into()));
    }
    let supp_a = GridSet::support_of(a);
    let mut out = GridSet::empty(f.rank());
    for idx in f.partial_indices() {
        let fj = f.partial_derivative(&idx)?;
        out = out.union(&fj.evaluation_support_bound(l, &supp_a, spec)?)?;
    }
    Ok(out)
}

/// The single term of a monomial series.
fn as_monomial(m: &Series) -> Result<(Q, Exponent)> {
    if m.len() != 1 || !m.is_exact() {
        return Err(Error::Domain(format!("expected an exact single term, got {m}")));
    }
    let (e, c) = m.terms().iter().next().expect("one term");
    Ok((c.clone(), e.clone()))
}

/// F(m·z), with Dʲ(mz) = Σ_i C(j,i) D^{j−i}m · Dⁱz.
pub fn multiplicative_conjugate(f: &DiffPoly, m: &Series, spec: &DerivationSpec) -> Result<Transformed> {
    check_rank(f.rank(), m.rank())?;
    let (_, lambda) = as_monomial(m)?;
    let n = f.order();
    let dm = derivatives(spec, m, f.deriv(), n)?;
    let forms: Vec<Vec<Series>> = (0..=n)
        .map(|j| {
            (0..=n)
                .map(|i| {
                    if i > j {
                        Series::zero(f.rank())
                    } else {
                        dm[j - i].scale(&Q::from_integer(binomial(j as u32, i as u32)))
                    }
                })
                .collect()
        })
        .collect();
    let out = f.substitute_linear(&forms, f.deriv(), DEFAULT_ENUM_CAP)?;
    let (bound, case) = with_fallback(
        multiplicative_bound(f, &lambda, spec),
        multiplicative_case(f, &lambda, spec),
        &out,
    );
    Ok(Transformed {
        poly: out,
        step: Step {
            transform: Transform::Multiplicative { by: m.clone() },
            case: case.into(),
            bound,
        },
    })
}

fn multiplicative_case(f: &DiffPoly, lambda: &Exponent, spec: &DerivationSpec) -> &'static str {
    match (f.deriv(), lambda.leading_class()) {
        (_, None) => "constant factor",
        (0, Some(l)) if l < spec.k0() => "base derivation, class below k0",
        (0, Some(_)) => "base derivation, class at least k0",
        _ => "rescaled derivation",
    }
}

/// ∪_I ∪_{0≤j≤‖I‖} (Supp c_I + |I|λ + jθ*) + 𝒯*
fn multiplicative_bound(f: &DiffPoly, lambda: &Exponent, spec: &DerivationSpec) -> Result<GridSet> {
    let n = f.order();
    let (theta, script_t) = match (f.deriv(), lambda.leading_class()) {
        (_, None) => (Exponent::zero(f.rank()), GridSet::origin(f.rank())),
        (0, Some(l)) => base_constants(spec, l, n)?,
        (k, Some(l)) if l >= k => (Exponent::zero(f.rank()), spec.script_t(k, n)?),
        _ => return Err(Error::Domain("factor class lies below the derivation index".into())),
    };
    let mut out = GridSet::empty(f.rank());
    for (idx, c) in f.coeffs() {
        let base = GridSet::support_of(c).translate(&lambda.scale(&Q::from_integer(idx.length().into())));
        for j in 0..=idx.weight() {
            out = out.union(&base.translate(&theta.scale(&Q::from_integer(j.into()))))?;
        }
    }
    out.sum(&script_t)
}

/// The multi-sequence q_{j,i} with D_kⁱy = Σ_j q_{j,i} D_lʲy, m = d_l/d_k.
#[derive(Clone, Debug)]
pub struct QMatrix {
    pub k: usize,
    pub l: usize,
    pub n: usize,
    pub m: Series,
    entries: BTreeMap<(usize, usize), Series>,
}

impl QMatrix {
    pub fn new(spec: &DerivationSpec, k: usize, l: usize, n: usize) -> Result<Self> {
        let m = spec.d(l).mul_monomial(&spec.d(k).coeff(&spec.v_d(k)).recip(), &-&spec.v_d(k));
        Self::with_m(spec, k, l, n, m)
    }

    fn with_m(spec: &DerivationSpec, k: usize, l: usize, n: usize, m: Series) -> Result<Self> {
        let mut entries: BTreeMap<(usize, usize), Series> = BTreeMap::new();
        if n >= 1 {
            entries.insert((1, 1), m.clone());
        }
        for i in 1..n {
            let first = spec.derive(&entries[&(1, i)], k)?;
            entries.insert((1, i + 1), first);
            for j in 1..i {
                let v = &(&entries[&(j, i)] * &m) + &spec.derive(&entries[&(j + 1, i)], k)?;
                entries.insert((j + 1, i + 1), v);
            }
            let diag = &entries[&(i, i)] * &m;
            entries.insert((i + 1, i + 1), diag);
        }
        Ok(QMatrix {
            k,
            l,
            n,
            m,
            entries,
        })
    }

    /// q_{j,i} for 1 ≤ j ≤ i ≤ n.
    pub fn get(&self, j: usize, i: usize) -> &Series {
        &self.entries[&(j, i)]
    }

    /// Rows Dᵏⁱy in terms of (y, D_l y, …, D_lⁿ y).
    fn forms(&self, rank: usize) -> Vec<Vec<Series>> {
        (0..=self.n)
            .map(|i| {
                (0..=self.n)
                    .map(|j| {
                        if i == 0 && j == 0 {
                            Series::one(rank)
                        } else if j == 0 || j > i {
                            Series::zero(rank)
                        } else {
                            self.get(j, i).clone()
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// A polynomial in m, D m, D² m, …: exponent vectors to natural coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MPoly(pub BTreeMap<Vec<u32>, BigInt>);

impl MPoly {
    fn add_term(&mut self, mut e: Vec<u32>, c: BigInt) {
        while e.last() == Some(&0) {
            e.pop();
        }
        *self.0.entry(e).or_insert_with(BigInt::zero) += c;
    }

    fn times_m(&self) -> MPoly {
        let mut out = MPoly::default();
        for (e, c) in &self.0 {
            let mut e = e.clone();
            if e.is_empty() {
                e.push(0);
            }
            e[0] += 1;
            out.add_term(e, c.clone());
        }
        out
    }

    /// D applied through the Leibniz rule: D(Dˢm) = Dˢ⁺¹m.
    fn derive(&self) -> MPoly {
        let mut out = MPoly::default();
        for (e, c) in &self.0 {
            for s in 0..e.len() {
                if e[s] == 0 {
                    continue;
                }
                let mut f = e.clone();
                f[s] -= 1;
                if f.len() <= s + 1 {
                    f.resize(s + 2, 0);
                }
                f[s + 1] += 1;
                out.add_term(f, c * BigInt::from(e[s]));
            }
        }
        out
    }

    fn plus(&self, other: &MPoly) -> MPoly {
        let mut out = self.clone();
        for (e, c) in &other.0 {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    /// Value at m given its derivatives Dˢm.
    pub fn eval(&self, dm: &[Series]) -> Series {
        let rank = dm[0].rank();
        let mut out = Series::zero(rank);
        for (e, c) in &self.0 {
            let mut t = Series::constant(rank, Q::from_integer(c.clone()));
            for (s, &p) in e.iter().enumerate() {
                t = &t * &dm[s].pow(p);
            }
            out = &out + &t;
        }
        out
    }
}

impl fmt::Display for MPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (e, c) in self.0.iter().rev() {
            let mut factors = Vec::new();
            if !c.is_one() {
                factors.push(c.to_string());
            }
            for (s, &p) in e.iter().enumerate() {
                let var = match s {
                    0 => "m".to_string(),
                    1 => "Dm".to_string(),
                    _ => format!("D^{s}m"),
                };
                match p {
                    0 => {}
                    1 => factors.push(var),
                    _ => factors.push(format!("({var})^{p}")),
                }
            }
            parts.push(factors.join("*"));
        }
        write!(f, "{}", parts.join(" + "))
    }
}

/// The q_{j,i} as universal polynomials in m and its derivatives.
pub fn symbolic_q(n: usize) -> BTreeMap<(usize, usize), MPoly> {
    let mut q: BTreeMap<(usize, usize), MPoly> = BTreeMap::new();
    if n == 0 {
        return q;
    }
    let mut m = MPoly::default();
    m.add_term(vec![1], BigInt::one());
    q.insert((1, 1), m.clone());
    for i in 1..n {
        let first = q[&(1, i)].derive();
        q.insert((1, i + 1), first);
        for j in 1..i {
            let v = q[&(j, i)].times_m().plus(&q[&(j + 1, i)].derive());
            q.insert((j + 1, i + 1), v);
        }
        let diag = q[&(i, i)].times_m();
        q.insert((i + 1, i + 1), diag);
    }
    q
}

/// Rewrites F from its derivation D_k to D_l.
pub fn change_derivation(f: &DiffPoly, l: usize, spec: &DerivationSpec) -> Result<Transformed> {
    check_rank(f.rank(), spec.rank())?;
    let k = f.deriv();
    let n = f.order();
    if l == k {
        return Ok(Transformed {
            poly: f.clone(),
            step: Step {
                transform: Transform::ChangeDerivation {
                    from: k,
                    to: l,
                    prestep: None,
                },
                case: "identity".into(),
                bound: f.support(),
            },
        });
    }
    if l == 0 || l > f.rank() {
        return Err(Error::IllDefined(format!("target derivation D{l} is not a rescaled derivation")));
    }
    if k >= 1 {
        if l < k {
            return Err(Error::IllDefined(format!(
                "D{k} -> D{l}: only changes towards higher classes are well defined"
            )));
        }
        let q = QMatrix::new(spec, k, l, n)?;
        let out = f.substitute_linear(&q.forms(f.rank()), l, DEFAULT_ENUM_CAP)?;
        let bound = spec.script_t(k, n).and_then(|t| f.support().sum(&t));
        let (bound, case) = with_fallback(bound, "rescaled to rescaled", &out);
        return Ok(Transformed {
            poly: out,
            step: Step {
                transform: Transform::ChangeDerivation {
                    from: k,
                    to: l,
                    prestep: None,
                },
                case: case.into(),
                bound,
            },
        });
    }
    let theta_l = spec.theta(l).clone();
    let k0 = spec.k0();
    let theta_k0 = spec.theta(k0);
    if theta_k0.is_negative() && l > k0 {
        return Err(Error::IllDefined(format!(
            "D0 -> D{l}: with v(d_k0) < 0 only classes up to k0 = {k0} admit solutions with positive-valuation derivatives"
        )));
    }
    if !theta_l.is_negative() {
        let q = QMatrix::new(spec, 0, l, n)?;
        for i in 1..=n {
            if q.get(1, i).v()?.is_some_and(|v| v.is_negative()) {
                return Err(Error::IllDefined(format!(
                    "D0 -> D{l}: derivative {} of d_{l} has negative valuation",
                    i - 1
                )));
            }
        }
        let out = f.substitute_linear(&q.forms(f.rank()), l, DEFAULT_ENUM_CAP)?;
        let (theta, t, case) = if l < k0 {
            (theta_l, spec.script_t(l, n), "base to rescaled, class below k0")
        } else {
            (theta_k0.clone(), spec.script_t(k0, n), "base to rescaled, class at least k0")
        };
        let bound = t.and_then(|t| {
            let s = f.support().sum(&t)?;
            if theta.is_zero() {
                Ok(s)
            } else {
                s.add_generator(&theta)
            }
        });
        let (bound, case) = with_fallback(bound, case, &out);
        return Ok(Transformed {
            poly: out,
            step: Step {
                transform: Transform::ChangeDerivation {
                    from: 0,
                    to: l,
                    prestep: None,
                },
                case: case.into(),
                bound,
            },
        });
    }
    // v(d_l) < 0̲ and l ≤ k₀: first y = d_l^{-n} z.
    let c = spec.class(l).coeff.clone();
    let nq = Q::from_integer(n.into());
    let big_m = Series::monomial(
        num_traits::pow::pow(c.recip(), n),
        theta_l.scale(&-nq),
    );
    let pre = multiplicative_conjugate(f, &big_m, spec)?.poly;
    let q = QMatrix::new(spec, 0, l, n)?;
    let out = pre.substitute_linear(&q.forms(f.rank()), l, DEFAULT_ENUM_CAP)?;
    let bound = spec
        .script_t(l, n)
        .and_then(|t| f.support().sum(&t)?.add_generator(&-&theta_l));
    let (bound, case) = with_fallback(bound, "base to rescaled after y = d_l^-n z", &out);
    Ok(Transformed {
        poly: out,
        step: Step {
            transform: Transform::ChangeDerivation {
                from: 0,
                to: l,
                prestep: Some(big_m),
            },
            case: case.into(),
            bound,
        },
    })
}

/// Division by t^{min Supp F}, recorded as a step.
pub fn normalize(f: &DiffPoly) -> Result<(Transformed, usize)> {
    let (g, w, shift) = f.weierstrass_normalize()?;
    let bound = f.support().translate(&-&shift);
    Ok((
        Transformed {
            poly: g,
            step: Step {
                transform: Transform::Normalize { shift },
                case: "normalize".into(),
                bound,
            },
        },
        w,
    ))
}

/// The right-hand side of the support inclusion for a transformation of `f`.
pub fn transform_support_bound(t: &Transform, f: &DiffPoly, spec: &DerivationSpec) -> Result<Step> {
    let tr = match t {
        Transform::Additive { by } => additive_conjugate(f, by, spec)?,
        Transform::Multiplicative { by } => multiplicative_conjugate(f, by, spec)?,
        Transform::ChangeDerivation { to, .. } => change_derivation(f, *to, spec)?,
        Transform::Normalize { .. } => normalize(f)?.0,
    };
    Ok(tr.step)
}

/// The coefficient pattern of a multiplicative conjugation: ĉ_J only draws on
/// c_I·m^{(K)} with |I| = |J| = |K|, ‖I‖ = ‖J‖ + ‖K‖ and J, K ≤ I anti-lexicographically.
pub fn multiplicative_sources(n: usize, j_idx: &MultiIndex, coeffs: &[MultiIndex]) -> Vec<(MultiIndex, MultiIndex)> {
    let mut out = Vec::new();
    for i_idx in coeffs {
        if i_idx.length() != j_idx.length() || i_idx.weight() < j_idx.weight() {
            continue;
        }
        if j_idx.antilex(i_idx) == std::cmp::Ordering::Greater {
            continue;
        }
        for k_idx in bounded_indices(n, i_idx.length()) {
            if k_idx.weight() + j_idx.weight() == i_idx.weight()
                && k_idx.antilex(i_idx) != std::cmp::Ordering::Greater
            {
                out.push((i_idx.clone(), k_idx));
            }
        }
    }
    out
}

fn bounded_indices(n: usize, len: u32) -> Vec<MultiIndex> {
    let top = MultiIndex(vec![len; n + 1]);
    top.below().into_iter().filter(|i| i.length() == len).collect()
}

/// m^{(K)} = Π_s (Dˢm)^{k_s}
pub fn m_power(dm: &[Series], k_idx: &MultiIndex) -> Series {
    let rank = dm[0].rank();
    let mut out = Series::one(rank);
    for (s, &p) in k_idx.entries().iter().enumerate() {
        out = &out * &dm[s].pow(p);
    }
    out
}
