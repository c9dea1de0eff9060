//! Differential polynomials F = Σ c_I y^{i₀}(Dy)^{i₁}⋯(Dⁿy)^{iₙ} over the
//! series field, with D either the base derivation or one of the D_k.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::derivation::DerivationSpec;
use crate::error::{check_rank, Error, Result};
use crate::exponent::{Exponent, MultiIndex, Q};
use crate::grid::GridSet;
use crate::poly::UPoly;
use crate::series::{Series, DEFAULT_ENUM_CAP};

#[derive(Clone, PartialEq, Eq)]
pub struct DiffPoly {
    rank: usize,
    order: usize,
    deriv: usize,
    coeffs: BTreeMap<MultiIndex, Series>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoeffEntry {
    pub index: Vec<u32>,
    pub series: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquationFile {
    pub order: usize,
    pub derivation: usize,
    pub coefficients: Vec<CoeffEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndicialData {
    /// A = {I : |I| = 1, v(c_I) = 0̲}
    pub witnesses: Vec<MultiIndex>,
    pub pi: UPoly,
    /// Distinct positive rational roots, increasing.
    pub rational_roots: Vec<Q>,
    pub multiplicities: Vec<usize>,
    /// π has a positive real root that is not rational.
    pub irrational_root: bool,
}

/// Sum-of-monomials in the formal variables Z₀..Zₙ standing for z, Dz, …, Dⁿz.
pub(crate) type ZPoly = BTreeMap<MultiIndex, Series>;

pub(crate) fn zpoly_add_term(p: &mut ZPoly, idx: MultiIndex, c: Series) {
    if c.is_exact_zero() {
        return;
    }
    let merged = match p.remove(&idx) {
        Some(old) => &old + &c,
        None => c,
    };
    if !merged.is_exact_zero() {
        p.insert(idx, merged);
    }
}

fn zpoly_mul(a: &ZPoly, b: &ZPoly, cap: usize) -> Result<ZPoly> {
    let mut out = ZPoly::new();
    for (ia, ca) in a {
        for (ib, cb) in b {
            zpoly_add_term(&mut out, ia.plus(ib), ca.mul_capped(cb, cap)?);
        }
    }
    Ok(out)
}

/// Dʲz for j = 0..=n.
pub fn derivatives(spec: &DerivationSpec, y: &Series, deriv: usize, n: usize) -> Result<Vec<Series>> {
    let mut out = vec![y.clone()];
    for j in 0..n {
        let next = spec.derive(&out[j], deriv)?;
        out.push(next);
    }
    Ok(out)
}

/// y^{(I)} = Π_j (Dʲy)^{i_j} from precomputed derivatives.
pub fn monomial_value(derivs: &[Series], idx: &MultiIndex, cap: usize) -> Result<Series> {
    let rank = derivs[0].rank();
    let mut out = Series::one(rank);
    for (j, &e) in idx.entries().iter().enumerate() {
        if e > 0 {
            out = out.mul_capped(&derivs[j].pow_capped(e, cap)?, cap)?;
        }
    }
    Ok(out)
}

impl DiffPoly {
    pub fn new(
        rank: usize,
        order: usize,
        deriv: usize,
        coeffs: impl IntoIterator<Item = (MultiIndex, Series)>,
    ) -> Result<Self> {
        let mut map = ZPoly::new();
        for (idx, c) in coeffs {
            if idx.entries().len() != order + 1 {
                return Err(Error::LengthMismatch {
                    left: order + 1,
                    right: idx.entries().len(),
                });
            }
            check_rank(rank, c.rank())?;
            zpoly_add_term(&mut map, idx, c);
        }
        if deriv > rank {
            return Err(Error::Domain(format!("derivation index {deriv} exceeds rank {rank}")));
        }
        Ok(DiffPoly {
            rank,
            order,
            deriv,
            coeffs: map,
        })
    }

    /// Convenience constructor from `(index, series text)` pairs.
    pub fn parse(rank: usize, deriv: usize, terms: &[(&[u32], &str)]) -> Result<Self> {
        let order = terms
            .first()
            .map(|(i, _)| i.len().saturating_sub(1))
            .unwrap_or(0);
        let coeffs = terms
            .iter()
            .map(|(i, s)| Ok((MultiIndex(i.to_vec()), Series::parse(s, rank)?)))
            .collect::<Result<Vec<_>>>()?;
        DiffPoly::new(rank, order, deriv, coeffs)
    }

    pub fn from_file(file: &EquationFile, rank: usize) -> Result<Self> {
        let coeffs = file
            .coefficients
            .iter()
            .map(|c| Ok((MultiIndex(c.index.clone()), Series::parse(&c.series, rank)?)))
            .collect::<Result<Vec<_>>>()?;
        let p = DiffPoly::new(rank, file.order, file.derivation, coeffs)?;
        if p.is_zero() {
            return Err(Error::Domain("equation has no nonzero coefficient".into()));
        }
        Ok(p)
    }

    pub fn to_file(&self) -> EquationFile {
        EquationFile {
            order: self.order,
            derivation: self.deriv,
            coefficients: self
                .coeffs
                .iter()
                .map(|(i, c)| CoeffEntry {
                    index: i.entries().to_vec(),
                    series: c.to_string(),
                })
                .collect(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// 0 for the base derivation, k for D_k.
    pub fn deriv(&self) -> usize {
        self.deriv
    }

    pub fn coeffs(&self) -> &BTreeMap<MultiIndex, Series> {
        &self.coeffs
    }

    pub fn coeff(&self, idx: &MultiIndex) -> Option<&Series> {
        self.coeffs.get(idx)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of y^{(0)}, the value of F at y = 0.
    pub fn constant_term(&self) -> Series {
        self.coeffs
            .get(&MultiIndex::zero(self.order))
            .cloned()
            .unwrap_or_else(|| Series::zero(self.rank))
    }

    /// Largest |I| present.
    pub fn degree(&self) -> u32 {
        self.coeffs.keys().map(MultiIndex::length).max().unwrap_or(0)
    }

    pub fn with_deriv(mut self, deriv: usize) -> Self {
        self.deriv = deriv;
        self
    }

    pub fn checked_add(&self, other: &DiffPoly) -> Result<DiffPoly> {
        check_rank(self.rank, other.rank)?;
        if self.order != other.order || self.deriv != other.deriv {
            return Err(Error::Domain("adding differential polynomials of different shape".into()));
        }
        let mut out = self.clone();
        for (i, c) in &other.coeffs {
            zpoly_add_term(&mut out.coeffs, i.clone(), c.clone());
        }
        Ok(out)
    }

    /// Every coefficient multiplied by c·t^e.
    pub fn mul_monomial(&self, c: &Q, e: &Exponent) -> DiffPoly {
        let mut out = self.clone();
        out.coeffs = self
            .coeffs
            .iter()
            .map(|(i, s)| (i.clone(), s.mul_monomial(c, e)))
            .filter(|(_, s)| !s.is_exact_zero())
            .collect();
        out
    }

    /// Supp F, the union of coefficient supports.
    pub fn support(&self) -> GridSet {
        let mut out = GridSet::empty(self.rank);
        for c in self.coeffs.values() {
            out = out.union(&GridSet::support_of(c)).expect("same rank");
        }
        out
    }

    /// min Supp F
    pub fn min_support(&self) -> Result<Exponent> {
        let mut best: Option<Exponent> = None;
        for c in self.coeffs.values() {
            if let Some(v) = c.v()? {
                best = Some(match best {
                    Some(b) if b <= v => b,
                    _ => v,
                });
            }
        }
        best.ok_or_else(|| Error::Domain("zero differential polynomial has no support".into()))
    }

    pub fn evaluate(&self, y: &Series, spec: &DerivationSpec) -> Result<Series> {
        self.evaluate_capped(y, spec, DEFAULT_ENUM_CAP)
    }

    pub fn evaluate_capped(&self, y: &Series, spec: &DerivationSpec, cap: usize) -> Result<Series> {
        check_rank(self.rank, y.rank())?;
        check_rank(self.rank, spec.rank())?;
        let derivs = derivatives(spec, y, self.deriv, self.order)?;
        self.evaluate_with(&derivs, cap)
    }

    /// F at y given y, Dy, …, Dⁿy.
    pub fn evaluate_with(&self, derivs: &[Series], cap: usize) -> Result<Series> {
        let mut out = Series::zero(self.rank);
        for (idx, c) in &self.coeffs {
            let m = monomial_value(derivs, idx, cap)?;
            out = out.checked_add(&c.mul_capped(&m, cap)?)?;
        }
        Ok(out)
    }

    /// F^{(I)} = Σ_{J ≥ I} c_J · J!/(J−I)! · y^{(J−I)}
    pub fn partial_derivative(&self, idx: &MultiIndex) -> Result<DiffPoly> {
        if idx.entries().len() != self.order + 1 {
            return Err(Error::LengthMismatch {
                left: self.order + 1,
                right: idx.entries().len(),
            });
        }
        let mut out = ZPoly::new();
        for (j, c) in &self.coeffs {
            if let Some(rest) = j.checked_sub(idx) {
                let f = Q::from_integer(j.factorial() / rest.factorial());
                zpoly_add_term(&mut out, rest, c.scale(&f));
            }
        }
        Ok(DiffPoly {
            rank: self.rank,
            order: self.order,
            deriv: self.deriv,
            coeffs: out,
        })
    }

    /// Every I with F^{(I)} ≠ 0 possible, i.e. I below some support index.
    pub fn partial_indices(&self) -> Vec<MultiIndex> {
        let mut all: Vec<MultiIndex> = self.coeffs.keys().flat_map(MultiIndex::below).collect();
        all.sort();
        all.dedup();
        all
    }

    /// F(p+q) − Σ_I F^{(I)}(p)/I! · q^{(I)}
    pub fn taylor_residual(&self, p: &Series, q: &Series, spec: &DerivationSpec) -> Result<Series> {
        let lhs = self.evaluate(&(p + q), spec)?;
        let dq = derivatives(spec, q, self.deriv, self.order)?;
        let mut rhs = Series::zero(self.rank);
        for idx in self.partial_indices() {
            let fi = self.partial_derivative(&idx)?.evaluate(p, spec)?;
            let w = Q::from_integer(idx.factorial()).recip();
            let term = fi.mul_capped(&monomial_value(&dq, &idx, DEFAULT_ENUM_CAP)?, DEFAULT_ENUM_CAP)?;
            rhs = &rhs + &term.scale(&w);
        }
        Ok(&lhs - &rhs)
    }

    /// Divides by t^{min Supp F}; returns the quotient, its Weierstrass order and the shift.
    pub fn weierstrass_normalize(&self) -> Result<(DiffPoly, usize, Exponent)> {
        let shift = self.min_support()?;
        let normalized = self.mul_monomial(&Q::one(), &-&shift);
        let w = normalized
            .weierstrass_order()?
            .expect("dividing by the minimum yields a Weierstrass order");
        Ok((normalized, w, shift))
    }

    /// The Weierstrass order, if every v(c_I) ≥ 0̲ and one equals 0̲.
    pub fn weierstrass_order(&self) -> Result<Option<usize>> {
        let mut w: Option<u32> = None;
        for (idx, c) in &self.coeffs {
            let Some(v) = c.v()? else { continue };
            if v.is_negative() {
                return Ok(None);
            }
            if v.is_zero() {
                w = Some(w.map_or(idx.length(), |x| x.min(idx.length())));
            }
        }
        Ok(w.map(|x| x as usize))
    }

    /// c_{I,0}, the coefficient of t^0̲ in c_I.
    pub fn leading_coeff(&self, idx: &MultiIndex) -> Q {
        self.coeffs
            .get(idx)
            .map(|c| c.coeff(&Exponent::zero(self.rank)))
            .unwrap_or_else(Q::zero)
    }

    /// π(X) = Σ_{I ∈ A} c_{I,0} X^{‖I‖} for a normalized F of Weierstrass order 1.
    pub fn indicial(&self) -> Result<IndicialData> {
        match self.weierstrass_order()? {
            Some(1) => {}
            other => {
                return Err(Error::Domain(format!(
                    "indicial polynomial needs Weierstrass order 1, found {other:?}"
                )))
            }
        }
        let zero = Exponent::zero(self.rank);
        let mut witnesses = Vec::new();
        let mut coeffs = vec![Q::zero(); self.order + 1];
        for (idx, c) in &self.coeffs {
            if idx.length() == 1 && c.v()?.as_ref() == Some(&zero) {
                coeffs[idx.weight() as usize] += c.coeff(&zero);
                witnesses.push(idx.clone());
            }
        }
        let pi = UPoly::new(coeffs);
        let positive: Vec<(Q, usize)> = pi
            .rational_roots()
            .into_iter()
            .filter(|(r, _)| r > &Q::zero())
            .collect();
        let irrational_root = pi.positive_root_count() > positive.len();
        Ok(IndicialData {
            witnesses,
            pi,
            rational_roots: positive.iter().map(|(r, _)| r.clone()).collect(),
            multiplicities: positive.iter().map(|(_, m)| *m).collect(),
            irrational_root,
        })
    }

    /// A grid set containing Supp F(y) for every y whose terms lie in classes ≥ k
    /// with support inside `y_support`.
    pub fn evaluation_support_bound(
        &self,
        k: usize,
        y_support: &GridSet,
        spec: &DerivationSpec,
    ) -> Result<GridSet> {
        check_rank(self.rank, spec.rank())?;
        check_rank(self.rank, y_support.rank())?;
        if k == 0 || k > self.rank {
            return Err(Error::Domain(format!("class {k} outside 1..{}", self.rank)));
        }
        let n = self.order;
        let (script_t, theta) = if self.deriv >= 1 {
            if k < self.deriv {
                return Err(Error::Domain(format!(
                    "class {k} lies below the derivation index {}",
                    self.deriv
                )));
            }
            (spec.script_t(self.deriv, n)?, Exponent::zero(self.rank))
        } else if k < spec.k0() {
            (spec.script_t(k, n)?, spec.theta(k).clone())
        } else {
            let k0 = spec.k0();
            (spec.script_t(k0, n)?, spec.theta(k0).clone())
        };
        let mut coeff_part = GridSet::empty(self.rank);
        for (idx, c) in &self.coeffs {
            let shift = theta.scale(&Q::from_integer(idx.weight().into()));
            coeff_part = coeff_part.union(&GridSet::support_of(c).translate(&shift))?;
        }
        coeff_part.sum(&script_t)?.sum(&y_support.semigroup()?)
    }

    /// Substitutes Dʲy = Σ_i forms[j][i]·D'ⁱz and returns the polynomial in z
    /// under the derivation `new_deriv`.
    pub fn substitute_linear(&self, forms: &[Vec<Series>], new_deriv: usize, cap: usize) -> Result<DiffPoly> {
        let n = self.order;
        if forms.len() != n + 1 {
            return Err(Error::LengthMismatch {
                left: n + 1,
                right: forms.len(),
            });
        }
        let linear: Vec<ZPoly> = forms
            .iter()
            .map(|row| {
                let mut p = ZPoly::new();
                for (i, c) in row.iter().enumerate() {
                    zpoly_add_term(&mut p, MultiIndex::unit(n, i), c.clone());
                }
                p
            })
            .collect();
        let mut one = ZPoly::new();
        one.insert(MultiIndex::zero(n), Series::one(self.rank));
        let mut powers: Vec<Vec<ZPoly>> = vec![vec![one]; n + 1];
        let mut out = ZPoly::new();
        for (idx, c) in &self.coeffs {
            let mut acc = ZPoly::new();
            acc.insert(MultiIndex::zero(n), c.clone());
            for (j, &e) in idx.entries().iter().enumerate() {
                while powers[j].len() <= e as usize {
                    let next = zpoly_mul(powers[j].last().expect("seeded"), &linear[j], cap)?;
                    powers[j].push(next);
                }
                acc = zpoly_mul(&acc, &powers[j][e as usize], cap)?;
            }
            for (i, s) in acc {
                zpoly_add_term(&mut out, i, s);
            }
        }
        Ok(DiffPoly {
            rank: self.rank,
            order: n,
            deriv: new_deriv,
            coeffs: out,
        })
    }
}

fn monomial_name(idx: &MultiIndex, deriv: usize) -> String {
    let mut parts = Vec::new();
    for (j, &e) in idx.entries().iter().enumerate() {
        if e == 0 {
            continue;
        }
        let var = match j {
            0 => "y".to_string(),
            1 => format!("D{deriv}y"),
            _ => format!("D{deriv}^{j}y"),
        };
        parts.push(if e == 1 { var } else { format!("{var}^{e}") });
    }
    parts.join("*")
}

impl fmt::Display for DiffPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut entries: Vec<(&MultiIndex, &Series)> = self.coeffs.iter().collect();
        entries.sort_by(|a, b| b.0.antilex(a.0));
        let parts: Vec<String> = entries
            .into_iter()
            .map(|(i, c)| {
                let name = monomial_name(i, self.deriv);
                if name.is_empty() {
                    format!("({c})")
                } else {
                    format!("({c})*{name}")
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl fmt::Debug for DiffPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
