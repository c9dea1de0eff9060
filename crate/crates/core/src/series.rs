//! Truncated generalized power series over ℚ with exponents in ℚʳ.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};

use crate::error::{check_rank, Error, Result};
use crate::exponent::{fmt_q, Exponent, Q};
use crate::parse::Cursor;

pub const DEFAULT_ENUM_CAP: usize = 10_000;

/// A finite list of terms, exact below `trunc` and unknown at or above it.
/// `trunc = None` means the series is exactly its terms.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Series {
    rank: usize,
    terms: BTreeMap<Exponent, Q>,
    trunc: Option<Exponent>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Valuation {
    Finite { value: Exponent, coeff: Q },
    Infinite,
}

impl Valuation {
    pub fn exponent(&self) -> Option<&Exponent> {
        match self {
            Valuation::Finite { value, .. } => Some(value),
            Valuation::Infinite => None,
        }
    }
}

impl Series {
    pub fn zero(rank: usize) -> Self {
        Series {
            rank,
            terms: BTreeMap::new(),
            trunc: None,
        }
    }

    pub fn one(rank: usize) -> Self {
        Series::constant(rank, Q::one())
    }

    pub fn constant(rank: usize, c: Q) -> Self {
        Series::monomial(c, Exponent::zero(rank))
    }

    pub fn monomial(c: Q, e: Exponent) -> Self {
        let mut s = Series::zero(e.rank());
        s.push_term(e, c);
        s
    }

    /// Series with the given terms; exponents at or above `trunc` are dropped.
    pub fn from_terms(
        rank: usize,
        terms: impl IntoIterator<Item = (Exponent, Q)>,
        trunc: Option<Exponent>,
    ) -> Result<Self> {
        if let Some(t) = &trunc {
            check_rank(rank, t.rank())?;
        }
        let mut s = Series {
            rank,
            terms: BTreeMap::new(),
            trunc,
        };
        for (e, c) in terms {
            check_rank(rank, e.rank())?;
            s.push_term(e, c);
        }
        Ok(s)
    }

    fn push_term(&mut self, e: Exponent, c: Q) {
        if self.trunc.as_ref().is_some_and(|t| &e >= t) {
            return;
        }
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                if !c.is_zero() {
                    v.insert(c);
                }
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn terms(&self) -> &BTreeMap<Exponent, Q> {
        &self.terms
    }

    pub fn trunc(&self) -> Option<&Exponent> {
        self.trunc.as_ref()
    }

    pub fn is_exact(&self) -> bool {
        self.trunc.is_none()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// No known terms (the series may still be truncated).
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_exact_zero(&self) -> bool {
        self.terms.is_empty() && self.trunc.is_none()
    }

    pub fn coeff(&self, e: &Exponent) -> Q {
        self.terms.get(e).cloned().unwrap_or_else(Q::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = &Exponent> {
        self.terms.keys()
    }

    pub fn valuation(&self) -> Result<Valuation> {
        match self.terms.iter().next() {
            Some((e, c)) => Ok(Valuation::Finite {
                value: e.clone(),
                coeff: c.clone(),
            }),
            None => match &self.trunc {
                Some(t) => Err(Error::ValuationUndetermined(t.clone())),
                None => Ok(Valuation::Infinite),
            },
        }
    }

    /// v(a) when it is a finite exponent.
    pub fn v(&self) -> Result<Option<Exponent>> {
        Ok(self.valuation()?.exponent().cloned())
    }

    pub fn leading(&self) -> Option<(&Exponent, &Q)> {
        self.terms.iter().next()
    }

    /// A lower bound for every exponent of the series: v(a) if known,
    /// otherwise the truncation; `None` for the exact zero series.
    pub fn lower_bound(&self) -> Option<&Exponent> {
        self.terms.keys().next().or(self.trunc.as_ref())
    }

    pub fn max_exponent(&self) -> Option<&Exponent> {
        self.terms.keys().next_back()
    }

    /// Forget everything at or above `beta`.
    pub fn truncate_at(&self, beta: &Exponent) -> Series {
        let trunc = match &self.trunc {
            Some(t) if t <= beta => t.clone(),
            _ => beta.clone(),
        };
        Series {
            rank: self.rank,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| *e < &trunc)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
            trunc: Some(trunc),
        }
    }

    pub fn with_trunc(mut self, trunc: Option<Exponent>) -> Series {
        if let Some(t) = &trunc {
            self.terms.retain(|e, _| e < t);
        }
        self.trunc = match (self.trunc, trunc) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self
    }

    pub fn scale(&self, c: &Q) -> Series {
        if c.is_zero() {
            return Series {
                rank: self.rank,
                terms: BTreeMap::new(),
                trunc: None,
            };
        }
        Series {
            rank: self.rank,
            terms: self.terms.iter().map(|(e, x)| (e.clone(), x * c)).collect(),
            trunc: self.trunc.clone(),
        }
    }

    /// Multiplication by the monomial c·t^e.
    pub fn mul_monomial(&self, c: &Q, e: &Exponent) -> Series {
        assert_eq!(self.rank, e.rank(), "series rank mismatch");
        if c.is_zero() {
            return Series::zero(self.rank);
        }
        Series {
            rank: self.rank,
            terms: self.terms.iter().map(|(x, a)| (x + e, a * c)).collect(),
            trunc: self.trunc.as_ref().map(|t| t + e),
        }
    }

    pub fn checked_add(&self, other: &Series) -> Result<Series> {
        check_rank(self.rank, other.rank)?;
        Ok(self.combine(other, true))
    }

    pub fn checked_sub(&self, other: &Series) -> Result<Series> {
        check_rank(self.rank, other.rank)?;
        Ok(self.combine(other, false))
    }

    fn combine(&self, other: &Series, plus: bool) -> Series {
        let trunc = match (&self.trunc, &other.trunc) {
            (Some(a), Some(b)) => Some(a.min(b).clone()),
            (a, b) => a.clone().or_else(|| b.clone()),
        };
        let mut out = Series {
            rank: self.rank,
            terms: BTreeMap::new(),
            trunc,
        };
        out.terms = self.terms.clone();
        if let Some(t) = &out.trunc {
            out.terms.retain(|e, _| e < t);
        }
        for (e, c) in &other.terms {
            let c = if plus { c.clone() } else { -c.clone() };
            out.push_term(e.clone(), c);
        }
        out
    }

    /// Product, failing when more than `cap` terms would be produced.
    pub fn mul_capped(&self, other: &Series, cap: usize) -> Result<Series> {
        check_rank(self.rank, other.rank)?;
        if self.is_exact_zero() || other.is_exact_zero() {
            return Ok(Series::zero(self.rank));
        }
        let trunc = match (&self.trunc, &other.trunc) {
            (None, None) => None,
            (Some(ta), None) => Some(ta + other.lower_bound().expect("nonzero")),
            (None, Some(tb)) => Some(tb + self.lower_bound().expect("nonzero")),
            (Some(ta), Some(tb)) => {
                let x = ta + other.lower_bound().expect("nonzero");
                let y = tb + self.lower_bound().expect("nonzero");
                Some(x.min(y))
            }
        };
        let mut acc: BTreeMap<Exponent, Q> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea + eb;
                if trunc.as_ref().is_some_and(|t| &e >= t) {
                    continue;
                }
                *acc.entry(e).or_insert_with(Q::zero) += ca * cb;
                if acc.len() > cap {
                    return Err(Error::NonAccessible(format!(
                        "product has more than {cap} terms below its truncation"
                    )));
                }
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Ok(Series {
            rank: self.rank,
            terms: acc,
            trunc,
        })
    }

    pub fn pow(&self, n: u32) -> Series {
        let mut out = Series::one(self.rank);
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    pub fn pow_capped(&self, n: u32, cap: usize) -> Result<Series> {
        let mut out = Series::one(self.rank);
        for _ in 0..n {
            out = out.mul_capped(self, cap)?;
        }
        Ok(out)
    }

    /// 1/a up to `beta`, for a unit a (v(a) = 0̲).
    pub fn invert_unit(&self, beta: &Exponent, cap: usize) -> Result<Series> {
        check_rank(self.rank, beta.rank())?;
        let (e0, c0) = match self.valuation()? {
            Valuation::Finite { value, coeff } => (value, coeff),
            Valuation::Infinite => return Err(Error::Domain("cannot invert zero".into())),
        };
        if !e0.is_zero() {
            return Err(Error::Domain(format!("invert_unit needs v(a)=0, got {e0}")));
        }
        let inv_c = c0.recip();
        let eps = &self.scale(&inv_c) - &Series::one(self.rank);
        let steps = match eps.lower_bound() {
            None => 0,
            Some(gamma) => powers_needed(gamma, beta).ok_or_else(|| {
                Error::NonAccessible(format!(
                    "no power of an element of valuation {gamma} reaches {beta}"
                ))
            })?,
        };
        if steps > cap {
            return Err(Error::NonAccessible(format!(
                "{steps} powers needed to reach {beta}"
            )));
        }
        let minus_eps = -&eps;
        let mut sum = Series::one(self.rank).truncate_at(beta);
        let mut power = Series::one(self.rank);
        for _ in 0..steps {
            power = power.mul_capped(&minus_eps, cap)?.truncate_at(beta);
            sum = &sum + &power;
            if sum.len() > cap {
                return Err(Error::NonAccessible(format!(
                    "inverse has more than {cap} terms below {beta}"
                )));
            }
        }
        Ok(sum.scale(&inv_c))
    }

    /// Splits a ∈ K^≺ as a_1 + ⋯ + a_r by leading class of each exponent.
    pub fn decompose_by_class(&self) -> Result<Vec<Series>> {
        if let Some(v) = self.v()? {
            if !v.is_positive() {
                return Err(Error::Domain(format!(
                    "decomposition needs v(a) > 0, got {v}"
                )));
            }
        }
        let mut parts: Vec<Series> = (0..self.rank)
            .map(|_| Series {
                rank: self.rank,
                terms: BTreeMap::new(),
                trunc: self.trunc.clone(),
            })
            .collect();
        for (e, c) in &self.terms {
            let k = e.leading_class().expect("positive exponent");
            parts[k - 1].terms.insert(e.clone(), c.clone());
        }
        Ok(parts)
    }

    /// a ≍ b
    pub fn asymp(&self, other: &Series) -> Result<bool> {
        Ok(self.valuation()?.exponent() == other.valuation()?.exponent())
    }

    /// a ∼ b
    pub fn sim(&self, other: &Series) -> Result<bool> {
        let va = self.v()?;
        let vb = other.v()?;
        let vd = self.checked_sub(other)?.v()?;
        let m = match (va, vb) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => return Ok(true),
        };
        Ok(match vd {
            None => true,
            Some(d) => d > m,
        })
    }

    /// Terms strictly above `e`.
    pub fn above(&self, e: &Exponent) -> Series {
        Series {
            rank: self.rank,
            terms: self
                .terms
                .iter()
                .filter(|(x, _)| *x > e)
                .map(|(x, c)| (x.clone(), c.clone()))
                .collect(),
            trunc: self.trunc.clone(),
        }
    }

    pub fn parse(text: &str, rank: usize) -> Result<Series> {
        let mut cur = Cursor::new(text);
        let s = parse_series(&mut cur, rank)?;
        cur.finish()?;
        Ok(s)
    }
}

/// Smallest K with K·γ ≥ β for γ > 0̲, if any.
pub(crate) fn powers_needed(gamma: &Exponent, beta: &Exponent) -> Option<usize> {
    if !beta.is_positive() {
        return Some(0);
    }
    let cg = gamma.leading_class()?;
    let cb = beta.leading_class()?;
    if cg > cb {
        return None;
    }
    if cg < cb {
        return Some(1);
    }
    let ratio = beta.at(cb) / gamma.at(cg);
    let mut k = ratio.ceil().to_integer();
    let kq = Q::from_integer(k.clone());
    if gamma.scale(&kq) < *beta {
        k += 1;
    }
    usize::try_from(k).ok()
}

fn parse_series(cur: &mut Cursor, rank: usize) -> Result<Series> {
    let mut terms: BTreeMap<Exponent, Q> = BTreeMap::new();
    let mut trunc = None;
    let mut sign = if cur.eat(b'-') { -Q::one() } else { Q::one() };
    if cur.keyword("O(") {
        let t = cur.exponent()?;
        cur.expect(b')')?;
        check_rank(rank, t.rank())?;
        return Series::from_terms(rank, [], Some(t));
    }
    loop {
        let start = cur.position();
        let (e, c) = parse_term(cur, rank)?;
        let c = c * &sign;
        if terms.contains_key(&e) {
            return Err(Error::Parse {
                pos: start,
                msg: format!("duplicate exponent {e}"),
            });
        }
        if !c.is_zero() {
            terms.insert(e, c);
        }
        if cur.eat(b'+') {
            if cur.keyword("O(") {
                let t = cur.exponent()?;
                cur.expect(b')')?;
                check_rank(rank, t.rank())?;
                trunc = Some(t);
                break;
            }
            sign = Q::one();
        } else if cur.eat(b'-') {
            sign = -Q::one();
        } else {
            break;
        }
    }
    if let Some(t) = &trunc {
        if let Some(bad) = terms.keys().find(|e| *e >= t) {
            return cur.fail(format!("term {bad} not below truncation {t}"));
        }
    }
    Series::from_terms(rank, terms, trunc)
}

fn parse_term(cur: &mut Cursor, rank: usize) -> Result<(Exponent, Q)> {
    let c = cur.rational()?;
    let mut coords = vec![Q::zero(); rank];
    while cur.eat(b'*') {
        cur.expect(b't')?;
        let idx = cur.usize()?;
        if idx == 0 || idx > rank {
            return cur.fail(format!("variable t{idx} outside rank {rank}"));
        }
        cur.expect(b'^')?;
        coords[idx - 1] += cur.rational()?;
    }
    Ok((Exponent::new(coords), c))
}

fn fmt_power(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("({})", fmt_q(x))
    }
}

fn fmt_term(e: &Exponent, c: &Q) -> String {
    let mut s = fmt_q(c);
    for (i, x) in e.coords().iter().enumerate() {
        if !x.is_zero() {
            s.push_str(&format!("*t{}^{}", i + 1, fmt_power(x)));
        }
    }
    s
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i == 0 {
                out.push_str(&fmt_term(e, c));
            } else if c.is_negative() {
                out.push_str(" - ");
                out.push_str(&fmt_term(e, &-c));
            } else {
                out.push_str(" + ");
                out.push_str(&fmt_term(e, c));
            }
        }
        if out.is_empty() {
            out.push('0');
        }
        if let Some(t) = &self.trunc {
            out.push_str(&format!(" + O({t})"));
        }
        f.write_str(&out)
    }
}

impl fmt::Debug for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Add for &Series {
    type Output = Series;

    fn add(self, other: &Series) -> Series {
        self.checked_add(other).expect("series rank mismatch")
    }
}

impl Sub for &Series {
    type Output = Series;

    fn sub(self, other: &Series) -> Series {
        self.checked_sub(other).expect("series rank mismatch")
    }
}

impl Mul for &Series {
    type Output = Series;

    fn mul(self, other: &Series) -> Series {
        self.mul_capped(other, usize::MAX).expect("series rank mismatch")
    }
}

impl Neg for &Series {
    type Output = Series;

    fn neg(self) -> Series {
        self.scale(&-Q::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::{q, qr};
    use proptest::prelude::*;

    fn s(text: &str, rank: usize) -> Series {
        Series::parse(text, rank).unwrap()
    }

    fn e(c: &[i64]) -> Exponent {
        Exponent::from_ints(c)
    }

    #[test]
    fn valuation_examples() {
        let a = s("3*t2^1 + 1*t1^1", 2);
        assert_eq!(
            a.valuation().unwrap(),
            Valuation::Finite { value: e(&[0, 1]), coeff: q(3) }
        );
        assert_eq!(Series::zero(1).valuation().unwrap(), Valuation::Infinite);
        let b = s("1*t1^(1/2) - 1*t1^1", 1);
        assert_eq!(
            b.valuation().unwrap(),
            Valuation::Finite { value: Exponent::new(vec![qr(1, 2)]), coeff: q(1) }
        );
        let c = s("O((1,0))", 2);
        assert_eq!(
            c.valuation(),
            Err(Error::ValuationUndetermined(e(&[1, 0])))
        );
    }

    #[test]
    fn arithmetic_examples() {
        let a = s("1 + 1*t1^1", 1);
        let b = s("1 - 1*t1^1", 1);
        assert_eq!(&a * &b, s("1 - 1*t1^2", 1));

        let c = s("1*t1^1 + O((3))", 1);
        let d = s("1*t1^1", 1);
        let p = &c * &d;
        assert_eq!(p, s("1*t1^2 + O((4))", 1));

        let x = s("1*t1^1 + 1*t2^1", 2);
        let sq = x.pow(2);
        let exps: Vec<_> = sq.support().cloned().collect();
        assert_eq!(exps, vec![e(&[0, 2]), e(&[1, 1]), e(&[2, 0])]);
        assert_eq!(sq.coeff(&e(&[1, 1])), q(2));

        assert!(matches!(
            x.pow(3).mul_capped(&x.pow(3), 5),
            Err(Error::NonAccessible(_))
        ));
        assert!(a.checked_add(&x).is_err());
    }

    #[test]
    fn add_truncation_is_min() {
        let a = s("1 + O((2))", 1);
        let b = s("1*t1^1 + 1*t1^3 + O((5))", 1);
        assert_eq!(&a + &b, s("1 + 1*t1^1 + O((2))", 1));
    }

    #[test]
    fn invert_examples() {
        let a = s("1 - 1*t1^1", 1);
        assert_eq!(
            a.invert_unit(&e(&[3]), DEFAULT_ENUM_CAP).unwrap(),
            s("1 + 1*t1^1 + 1*t1^2 + O((3))", 1)
        );
        let two = s("2", 1);
        assert_eq!(
            two.invert_unit(&e(&[1]), DEFAULT_ENUM_CAP).unwrap(),
            s("1/2 + O((1))", 1)
        );
        let b = s("1 + 1*t2^1 + 1*t1^1", 2);
        // Infinitely many (0,k) lie below (1,1).
        assert!(matches!(
            b.invert_unit(&e(&[1, 1]), DEFAULT_ENUM_CAP),
            Err(Error::NonAccessible(_))
        ));
        let beta = e(&[0, 5]);
        let inv = b.invert_unit(&beta, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(inv, s("1 - 1*t2^1 + 1*t2^2 - 1*t2^3 + 1*t2^4 + O((0,5))", 2));
        let check = &(&b * &inv) - &Series::one(2);
        assert!(check.is_empty());
        assert!(s("1*t1^1", 1).invert_unit(&e(&[1]), 10).is_err());
    }

    #[test]
    fn invert_truncated_input() {
        let a = s("1 + 1*t1^1 + O((2))", 1);
        let inv = a.invert_unit(&e(&[5]), DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(inv, s("1 - 1*t1^1 + O((2))", 1));
    }

    #[test]
    fn decompose_examples() {
        let parts = s("1*t2^1 + 1*t1^1", 2).decompose_by_class().unwrap();
        assert_eq!(parts, vec![s("1*t1^1", 2), s("1*t2^1", 2)]);
        let parts = s("1*t2^1 + 1*t1^1*t2^-1", 2).decompose_by_class().unwrap();
        assert_eq!(parts, vec![s("1*t1^1*t2^-1", 2), s("1*t2^1", 2)]);
        let parts = s("1*t3^2", 3).decompose_by_class().unwrap();
        assert_eq!(parts, vec![Series::zero(3), Series::zero(3), s("1*t3^2", 3)]);
        assert!(s("1 + 1*t1^1", 1).decompose_by_class().is_err());
    }

    #[test]
    fn parse_examples() {
        let a = s("1*t1^1 + -1*t1^2", 1);
        assert_eq!(a.coeff(&e(&[1])), q(1));
        assert_eq!(a.coeff(&e(&[2])), q(-1));
        let b = s("3/2*t1^(1/2)*t2^-3", 2);
        assert_eq!(b.len(), 1);
        assert_eq!(b.coeff(&Exponent::new(vec![qr(1, 2), q(-3)])), qr(3, 2));
        assert!(matches!(
            Series::parse("1*t1^1 + 1*t1^1", 1),
            Err(Error::Parse { .. })
        ));
        assert!(Series::parse("1*t3^1", 2).is_err());
        assert!(Series::parse("1*t1^1 + O((1/2,0))", 2).is_err());
        let c = s("3/2*t1^(1/2)*t2^-3 - 1*t2^2 + O((1,0))", 2);
        assert_eq!(c.to_string(), "-1*t2^2 + 3/2*t1^(1/2)*t2^-3 + O((1,0))");
    }

    fn arb_series(rank: usize) -> impl Strategy<Value = Series> {
        proptest::collection::vec(
            (proptest::collection::vec(-3i64..5, rank), 1i64..3, -5i64..6, 1i64..4),
            0..5,
        )
        .prop_map(move |ts| {
            Series::from_terms(
                rank,
                ts.into_iter().map(|(ex, d, n, cd)| {
                    (
                        Exponent::new(ex.into_iter().map(|x| qr(x, d)).collect()),
                        qr(n, cd),
                    )
                }),
                None,
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn valuation_is_additive(a in arb_series(2), b in arb_series(2)) {
            prop_assume!(!a.is_empty() && !b.is_empty());
            let p = &a * &b;
            let (ea, ca) = a.leading().unwrap();
            let (eb, cb) = b.leading().unwrap();
            let (ep, cp) = p.leading().unwrap();
            prop_assert_eq!(ep, &(ea + eb));
            prop_assert_eq!(cp, &(ca * cb));
        }

        #[test]
        fn ultrametric(a in arb_series(2), b in arb_series(2)) {
            prop_assume!(!a.is_empty() && !b.is_empty());
            let va = a.v().unwrap().unwrap();
            let vb = b.v().unwrap().unwrap();
            let m = va.clone().min(vb.clone());
            match (&a + &b).v().unwrap() {
                Some(vs) => {
                    prop_assert!(vs >= m);
                    if va != vb { prop_assert_eq!(vs, m); }
                }
                None => prop_assert_eq!(va, vb),
            }
        }

        #[test]
        fn dominance_predicates(a in arb_series(2), b in arb_series(2)) {
            prop_assume!(!a.is_empty() && !b.is_empty());
            let va = a.v().unwrap().unwrap();
            let vb = b.v().unwrap().unwrap();
            prop_assert_eq!(a.asymp(&b).unwrap(), va == vb);
            let d = &a - &b;
            let expected = match d.v().unwrap() {
                None => true,
                Some(vd) => vd > va.clone().min(vb.clone()),
            };
            prop_assert_eq!(a.sim(&b).unwrap(), expected);
            // a ∼ b means equal leading terms.
            prop_assert_eq!(expected, a.leading() == b.leading());
        }

        #[test]
        fn invert_round_trip(tail in arb_series(1), c in 1i64..5, top in 1i64..8) {
            let tail: Series = Series::from_terms(
                1,
                tail.terms().iter().filter(|(e, _)| e.is_positive()).map(|(e, x)| (e.clone(), x.clone())),
                None,
            ).unwrap();
            let a = &Series::constant(1, q(c)) + &tail;
            let beta = Exponent::from_ints(&[top]);
            let inv = a.invert_unit(&beta, DEFAULT_ENUM_CAP).unwrap();
            let r = &(&a * &inv) - &Series::one(1);
            prop_assert!(r.is_empty());
            prop_assert!(r.trunc().unwrap() >= &beta);
        }

        #[test]
        fn decomposition_partitions(a in arb_series(3)) {
            let pos = Series::from_terms(
                3,
                a.terms().iter().filter(|(e, _)| e.is_positive()).map(|(e, x)| (e.clone(), x.clone())),
                None,
            ).unwrap();
            let parts = pos.decompose_by_class().unwrap();
            let mut sum = Series::zero(3);
            let mut count = 0;
            for (k, p) in parts.iter().enumerate() {
                for e in p.support() {
                    prop_assert_eq!(e.leading_class(), Some(k + 1));
                }
                count += p.len();
                sum = &sum + p;
            }
            prop_assert_eq!(count, pos.len());
            prop_assert_eq!(sum, pos);
        }

        #[test]
        fn print_parse_round_trip(a in arb_series(2)) {
            let text = a.to_string();
            let b = Series::parse(&text, 2).unwrap();
            prop_assert_eq!(&b, &a);
            prop_assert_eq!(b.to_string(), text);
        }
    }
}
