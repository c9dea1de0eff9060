//! Rational exponent vectors under lexicographic order, and multi-indices.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{check_rank, Error, Result};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Canonical rational text: `p` or `p/q`.
pub fn fmt_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Element of Γ = ℚʳ. The derived order on the coordinate vector is the
/// lexicographic order, which is total only between equal ranks.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Exponent {
    coords: Vec<Q>,
}

impl Exponent {
    pub fn new(coords: Vec<Q>) -> Self {
        Exponent { coords }
    }

    pub fn from_ints(coords: &[i64]) -> Self {
        Exponent::new(coords.iter().map(|&c| q(c)).collect())
    }

    pub fn zero(rank: usize) -> Self {
        Exponent::new(vec![Q::zero(); rank])
    }

    /// The generator e_k (1-based class index).
    pub fn unit(rank: usize, k: usize) -> Self {
        let mut e = Exponent::zero(rank);
        e.coords[k - 1] = Q::one();
        e
    }

    pub fn rank(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Q] {
        &self.coords
    }

    /// Coordinate at a 1-based class index.
    pub fn at(&self, k: usize) -> &Q {
        &self.coords[k - 1]
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }

    pub fn is_positive(&self) -> bool {
        self.first_nonzero().is_some_and(|(_, c)| c.is_positive())
    }

    pub fn is_negative(&self) -> bool {
        self.first_nonzero().is_some_and(|(_, c)| c.is_negative())
    }

    fn first_nonzero(&self) -> Option<(usize, &Q)> {
        self.coords
            .iter()
            .enumerate()
            .find(|(_, c)| !c.is_zero())
    }

    /// Archimedean class: 1-based index of the first nonzero coordinate.
    pub fn leading_class(&self) -> Option<usize> {
        self.first_nonzero().map(|(i, _)| i + 1)
    }

    pub fn scale(&self, s: &Q) -> Exponent {
        Exponent::new(self.coords.iter().map(|c| c * s).collect())
    }

    pub fn lex_compare(&self, other: &Exponent) -> Result<Ordering> {
        check_rank(self.rank(), other.rank())?;
        Ok(self.cmp(other))
    }

    pub fn checked_add(&self, other: &Exponent) -> Result<Exponent> {
        check_rank(self.rank(), other.rank())?;
        Ok(self + other)
    }

    pub fn max_of(a: &Exponent, b: &Exponent) -> Exponent {
        if a >= b {
            a.clone()
        } else {
            b.clone()
        }
    }

    /// Lowest common denominator of the coordinates.
    pub fn denominator_lcm(&self) -> BigInt {
        self.coords
            .iter()
            .fold(BigInt::one(), |acc, c| num_integer::Integer::lcm(&acc, c.denom()))
    }

    pub fn parse(text: &str, rank: usize) -> Result<Exponent> {
        let mut p = crate::parse::Cursor::new(text);
        let e = p.exponent()?;
        p.finish()?;
        check_rank(rank, e.rank())?;
        Ok(e)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(fmt_q).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl fmt::Debug for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Add for &Exponent {
    type Output = Exponent;

    fn add(self, other: &Exponent) -> Exponent {
        assert_eq!(self.rank(), other.rank(), "exponent rank mismatch");
        Exponent::new(self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Exponent {
    type Output = Exponent;

    fn sub(self, other: &Exponent) -> Exponent {
        assert_eq!(self.rank(), other.rank(), "exponent rank mismatch");
        Exponent::new(self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &Exponent {
    type Output = Exponent;

    fn neg(self) -> Exponent {
        Exponent::new(self.coords.iter().map(|c| -c).collect())
    }
}

/// Multiplicities (i₀, …, iₙ) of y, Dy, …, Dⁿy in a differential monomial.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(order: usize) -> Self {
        MultiIndex(vec![0; order + 1])
    }

    /// The index of the single variable Dʲy.
    pub fn unit(order: usize, j: usize) -> Self {
        let mut m = MultiIndex::zero(order);
        m.0[j] = 1;
        m
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len() - 1
    }

    /// |I|
    pub fn length(&self) -> u32 {
        self.0.iter().sum()
    }

    /// ‖I‖
    pub fn weight(&self) -> u32 {
        self.0.iter().enumerate().map(|(j, &i)| j as u32 * i).sum()
    }

    /// I!
    pub fn factorial(&self) -> BigInt {
        self.0.iter().map(|&i| factorial(i)).product()
    }

    pub fn stats(&self) -> (u32, u32, BigInt) {
        (self.length(), self.weight(), self.factorial())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&i| i == 0)
    }

    /// Componentwise I ≤ J.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if !other.le(self) {
            return None;
        }
        Some(MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    pub fn plus(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Anti-lexicographic order: the highest differing position decides.
    pub fn antilex_compare(&self, other: &MultiIndex) -> Result<Ordering> {
        if self.0.len() != other.0.len() {
            return Err(Error::LengthMismatch {
                left: self.0.len(),
                right: other.0.len(),
            });
        }
        Ok(self.antilex(other))
    }

    pub(crate) fn antilex(&self, other: &MultiIndex) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0).rev() {
            match a.cmp(b) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        Ordering::Equal
    }

    /// All indices J ≤ I componentwise.
    pub fn below(&self) -> Vec<MultiIndex> {
        let mut out = vec![Vec::new()];
        for &i in &self.0 {
            let mut next = Vec::new();
            for prefix in &out {
                for k in 0..=i {
                    let mut p: Vec<u32> = prefix.clone();
                    p.push(k);
                    next.push(p);
                }
            }
            out = next;
        }
        out.into_iter().map(MultiIndex).collect()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub fn factorial(n: u32) -> BigInt {
    (1..=n).map(BigInt::from).product()
}

pub fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e(c: &[i64]) -> Exponent {
        Exponent::from_ints(c)
    }

    #[test]
    fn lex_examples() {
        assert_eq!(e(&[0, 1]).lex_compare(&e(&[1, 0])).unwrap(), Ordering::Less);
        assert_eq!(e(&[1, -2]).lex_compare(&e(&[1, -2])).unwrap(), Ordering::Equal);
        assert_eq!(e(&[1, -2]).lex_compare(&e(&[0, 0])).unwrap(), Ordering::Greater);
        assert!(matches!(
            e(&[1]).lex_compare(&e(&[1, 0])),
            Err(Error::RankMismatch { .. })
        ));
    }

    #[test]
    fn antilex_examples() {
        let m = |v: &[u32]| MultiIndex(v.to_vec());
        assert_eq!(m(&[2, 0]).antilex_compare(&m(&[0, 1])).unwrap(), Ordering::Less);
        assert_eq!(m(&[1, 1]).antilex_compare(&m(&[3, 0])).unwrap(), Ordering::Greater);
        assert_eq!(m(&[1, 0]).antilex_compare(&m(&[1, 0])).unwrap(), Ordering::Equal);
        assert!(m(&[1]).antilex_compare(&m(&[1, 0])).is_err());
    }

    #[test]
    fn stats_examples() {
        let m = |v: &[u32]| MultiIndex(v.to_vec()).stats();
        assert_eq!(m(&[0, 0]), (0, 0, BigInt::from(1)));
        assert_eq!(m(&[2, 1]), (3, 1, BigInt::from(2)));
        assert_eq!(m(&[1, 0, 2]), (3, 4, BigInt::from(2)));
    }

    #[test]
    fn classes() {
        assert_eq!(e(&[0, 0, 3]).leading_class(), Some(3));
        assert_eq!(e(&[1, -1]).leading_class(), Some(1));
        assert_eq!(e(&[0, 0]).leading_class(), None);
        assert!(e(&[0, -1, 5]).is_negative());
    }

    #[test]
    fn display_and_parse() {
        let x = Exponent::new(vec![qr(1, 2), q(-3)]);
        assert_eq!(x.to_string(), "(1/2,-3)");
        assert_eq!(Exponent::parse("(1/2,-3)", 2).unwrap(), x);
    }

    fn arb_exp() -> impl Strategy<Value = Exponent> {
        proptest::collection::vec((-6i64..6, 1i64..4), 3)
            .prop_map(|v| Exponent::new(v.into_iter().map(|(n, d)| qr(n, d)).collect()))
    }

    fn arb_index() -> impl Strategy<Value = MultiIndex> {
        proptest::collection::vec(0u32..4, 4).prop_map(MultiIndex)
    }

    proptest! {
        #[test]
        fn lex_total_and_translation_invariant(a in arb_exp(), b in arb_exp(), c in arb_exp()) {
            let ab = a.lex_compare(&b).unwrap();
            prop_assert_eq!(ab.reverse(), b.lex_compare(&a).unwrap());
            prop_assert_eq!(ab == Ordering::Equal, a == b);
            prop_assert_eq!((&a + &c).lex_compare(&(&b + &c)).unwrap(), ab);
            if a <= b && b <= c {
                prop_assert!(a <= c);
            }
        }

        #[test]
        fn antilex_matches_scan(i in arb_index(), j in arb_index()) {
            let mut expected = Ordering::Equal;
            for pos in (0..4).rev() {
                if i.0[pos] != j.0[pos] {
                    expected = i.0[pos].cmp(&j.0[pos]);
                    break;
                }
            }
            prop_assert_eq!(i.antilex_compare(&j).unwrap(), expected);
        }

        #[test]
        fn stats_additive(i in arb_index(), j in arb_index()) {
            let s = i.plus(&j);
            prop_assert_eq!(s.length(), i.length() + j.length());
            prop_assert_eq!(s.weight(), i.weight() + j.weight());
        }
    }
}
