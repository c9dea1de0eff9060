#![allow(dead_code)]

use hahnsolve::derivation::{spec_a, spec_b, spec_c, DerivationSpec};
use hahnsolve::diffpoly::DiffPoly;
use hahnsolve::{Exponent, MultiIndex, Series, Q};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn specs() -> Vec<(&'static str, DerivationSpec)> {
    vec![("A", spec_a()), ("B", spec_b()), ("C", spec_c())]
}

pub fn q(n: i64) -> Q {
    Q::from_integer(n.into())
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

pub fn e(c: &[i64]) -> Exponent {
    Exponent::from_ints(c)
}

pub fn small_q(r: &mut impl Rng, lo: i64, hi: i64) -> Q {
    qr(r.gen_range(lo..=hi), *[1, 1, 2].choose(r).unwrap())
}

pub fn nonzero_q(r: &mut impl Rng) -> Q {
    loop {
        let c = small_q(r, -3, 3);
        if c != q(0) {
            return c;
        }
    }
}

pub fn exponent(r: &mut impl Rng, rank: usize) -> Exponent {
    Exponent::new((0..rank).map(|_| small_q(r, -3, 3)).collect())
}

pub fn nonzero_exponent(r: &mut impl Rng, rank: usize) -> Exponent {
    loop {
        let x = exponent(r, rank);
        if !x.is_zero() {
            return x;
        }
    }
}

pub fn positive_exponent(r: &mut impl Rng, rank: usize) -> Exponent {
    loop {
        let x = exponent(r, rank);
        if x.is_positive() {
            return x;
        }
    }
}

/// An exponent whose leading class is `k`.
pub fn class_exponent(r: &mut impl Rng, rank: usize, k: usize) -> Exponent {
    let coords = (1..=rank)
        .map(|j| match j.cmp(&k) {
            std::cmp::Ordering::Less => q(0),
            std::cmp::Ordering::Equal => nonzero_q(r),
            std::cmp::Ordering::Greater => small_q(r, -3, 3),
        })
        .collect();
    Exponent::new(coords)
}

pub fn series(r: &mut impl Rng, rank: usize, max_terms: usize, positive: bool) -> Series {
    let n = r.gen_range(1..=max_terms);
    let terms: Vec<(Exponent, Q)> = (0..n)
        .map(|_| {
            let x = if positive { positive_exponent(r, rank) } else { exponent(r, rank) };
            (x, nonzero_q(r))
        })
        .collect();
    let mut out = Series::zero(rank);
    for (x, c) in terms {
        out = &out + &Series::monomial(c, x);
    }
    out
}

pub fn multi_index(r: &mut impl Rng, order: usize, max_len: u32) -> MultiIndex {
    let mut entries = vec![0u32; order + 1];
    for _ in 0..r.gen_range(0..=max_len) {
        entries[r.gen_range(0..=order)] += 1;
    }
    MultiIndex(entries)
}

/// A nonzero differential polynomial with exact coefficients.
pub fn diff_poly(r: &mut impl Rng, rank: usize, order: usize, deriv: usize) -> DiffPoly {
    loop {
        let n = r.gen_range(1..=3);
        let coeffs: Vec<(MultiIndex, Series)> = (0..n)
            .map(|_| (multi_index(r, order, 2), series(r, rank, 2, false)))
            .collect();
        let p = DiffPoly::new(rank, order, deriv, coeffs).unwrap();
        if !p.is_zero() {
            return p;
        }
    }
}
