//! Univariate polynomials over ℚ: exact rational roots and Sturm counts.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::exponent::{fmt_q, Q};

/// Coefficients in increasing degree, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UPoly(Vec<Q>);

impl UPoly {
    pub fn new(mut coeffs: Vec<Q>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        UPoly(coeffs)
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree; the zero polynomial has none.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn eval(&self, x: &Q) -> Q {
        self.0
            .iter()
            .rev()
            .fold(Q::zero(), |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> UPoly {
        UPoly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * Q::from_integer(i.into()))
                .collect(),
        )
    }

    /// Quotient and remainder; panics on a zero divisor.
    pub fn div_rem(&self, d: &UPoly) -> (UPoly, UPoly) {
        let dd = d.degree().expect("division by zero polynomial");
        let lead = d.0[dd].clone();
        let mut rem = self.0.clone();
        let mut quot = vec![Q::zero(); rem.len().saturating_sub(dd)];
        while rem.len() > dd && !rem.is_empty() {
            let top = rem.len() - 1;
            let c = &rem[top] / &lead;
            let shift = top - dd;
            for (i, di) in d.0.iter().enumerate() {
                rem[shift + i] -= &c * di;
            }
            quot[shift] = c;
            rem.pop();
            while rem.last().is_some_and(Zero::is_zero) {
                rem.pop();
            }
        }
        (UPoly::new(quot), UPoly::new(rem))
    }

    /// All rational roots with multiplicity, sorted.
    pub fn rational_roots(&self) -> Vec<(Q, usize)> {
        let mut p = self.clone();
        let mut out = Vec::new();
        if p.is_zero() {
            return out;
        }
        let zeros = p.0.iter().take_while(|c| c.is_zero()).count();
        if zeros > 0 {
            out.push((Q::zero(), zeros));
            p = UPoly::new(p.0[zeros..].to_vec());
        }
        for cand in p.root_candidates() {
            let mut mult = 0;
            let lin = UPoly::new(vec![-cand.clone(), Q::one()]);
            loop {
                let (qt, r) = p.div_rem(&lin);
                if !r.is_zero() {
                    break;
                }
                p = qt;
                mult += 1;
            }
            if mult > 0 {
                out.push((cand, mult));
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    /// ±p/q with p | a₀ and q | a_d after clearing denominators.
    fn root_candidates(&self) -> Vec<Q> {
        let Some(d) = self.degree() else {
            return Vec::new();
        };
        if d == 0 {
            return Vec::new();
        }
        let den = self
            .0
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<BigInt> = self
            .0
            .iter()
            .map(|c| (c * Q::from_integer(den.clone())).to_integer())
            .collect();
        let ps = divisors(&ints[0]);
        let qs = divisors(&ints[d]);
        let mut cands: Vec<Q> = Vec::new();
        for p in &ps {
            for q in &qs {
                let r = Q::new(p.clone(), q.clone());
                cands.push(r.clone());
                cands.push(-r);
            }
        }
        cands.sort();
        cands.dedup();
        cands
    }

    /// Number of distinct real roots in (0, ∞), by a Sturm sequence.
    pub fn positive_root_count(&self) -> usize {
        if self.is_zero() || self.degree() == Some(0) {
            return 0;
        }
        let zeros = self.0.iter().take_while(|c| c.is_zero()).count();
        let p = UPoly::new(self.0[zeros..].to_vec());
        if p.degree() == Some(0) {
            return 0;
        }
        let mut seq = vec![p.clone(), p.derivative()];
        loop {
            let n = seq.len();
            if seq[n - 1].is_zero() {
                seq.pop();
                break;
            }
            let (_, r) = seq[n - 2].div_rem(&seq[n - 1]);
            if r.is_zero() {
                break;
            }
            seq.push(UPoly::new(r.0.iter().map(|c| -c).collect()));
        }
        let at_zero: Vec<Q> = seq.iter().map(|s| s.0[0].clone()).collect();
        let at_inf: Vec<Q> = seq.iter().map(|s| s.0.last().expect("nonzero").clone()).collect();
        variations(&at_zero) - variations(&at_inf)
    }
}

fn variations(signs: &[Q]) -> usize {
    let nz: Vec<bool> = signs
        .iter()
        .filter(|c| !c.is_zero())
        .map(Signed::is_positive)
        .collect();
    nz.windows(2).filter(|w| w[0] != w[1]).count()
}

fn divisors(n: &BigInt) -> Vec<BigInt> {
    let n = n.abs();
    let mut out = Vec::new();
    let mut i = BigInt::one();
    while &i * &i <= n {
        if (&n % &i).is_zero() {
            out.push(i.clone());
            out.push(&n / &i);
        }
        i += 1;
    }
    out.sort();
    out.dedup();
    out
}

impl fmt::Display for UPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.0.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let (sign, mag) = if c.is_negative() { ("-", -c) } else { ("+", c.clone()) };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let coeff = fmt_q(&mag);
            match (i, mag.is_one()) {
                (0, _) => write!(f, "{coeff}")?,
                (1, true) => write!(f, "X")?,
                (1, false) => write!(f, "{coeff}*X")?,
                (_, true) => write!(f, "X^{i}")?,
                (_, false) => write!(f, "{coeff}*X^{i}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::{q, qr};
    use proptest::prelude::*;

    fn p(c: &[i64]) -> UPoly {
        UPoly::new(c.iter().map(|&x| q(x)).collect())
    }

    #[test]
    fn roots() {
        assert_eq!(p(&[-2, 1]).rational_roots(), vec![(q(2), 1)]);
        assert_eq!(p(&[1, -2, 1]).rational_roots(), vec![(q(1), 2)]);
        assert_eq!(p(&[0, 1]).rational_roots(), vec![(q(0), 1)]);
        assert_eq!(p(&[-1, 0, 4]).rational_roots(), vec![(qr(-1, 2), 1), (qr(1, 2), 1)]);
        assert!(p(&[-2, 0, 1]).rational_roots().is_empty());
        assert_eq!(p(&[-2, 0, 1]).positive_root_count(), 1);
        assert_eq!(p(&[2, 0, 1]).positive_root_count(), 0);
        assert_eq!(p(&[1, -2, 1]).positive_root_count(), 1);
        assert_eq!(p(&[3, 0, -4, 1]).to_string(), "X^3 - 4*X^2 + 3");
    }

    proptest! {
        #[test]
        fn planted_roots_found(rs in proptest::collection::vec((-6i64..7, 1i64..4), 1..4)) {
            let mut poly = UPoly::new(vec![q(1)]);
            for &(n, d) in &rs {
                let lin = UPoly::new(vec![-qr(n, d), q(1)]);
                let mut prod = vec![Q::zero(); poly.0.len() + 1];
                for (i, a) in poly.0.iter().enumerate() {
                    for (j, b) in lin.0.iter().enumerate() {
                        prod[i + j] += a * b;
                    }
                }
                poly = UPoly::new(prod);
            }
            let found = poly.rational_roots();
            for &(n, d) in &rs {
                prop_assert!(found.iter().any(|(r, _)| *r == qr(n, d)));
                prop_assert!(poly.eval(&qr(n, d)).is_zero());
            }
            let total: usize = found.iter().map(|(_, m)| m).sum();
            prop_assert_eq!(total, rs.len());
        }
    }
}
