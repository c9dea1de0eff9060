//! Finite unions of cosets `offset + ⟨generators⟩` used to over-approximate
//! well-ordered supports, with the four elementary transformations.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_rank, Error, Result};
use crate::exponent::{Exponent, Q};
use crate::parse::Cursor;
use crate::series::Series;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Coset {
    pub offset: Exponent,
    pub generators: BTreeSet<Exponent>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GridSet {
    rank: usize,
    cosets: BTreeSet<Coset>,
    exact: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Membership {
    Yes,
    No,
    Unknown,
}

impl GridSet {
    pub fn empty(rank: usize) -> Self {
        GridSet {
            rank,
            cosets: BTreeSet::new(),
            exact: true,
        }
    }

    pub fn point(e: Exponent) -> Self {
        GridSet::points(e.rank(), [e])
    }

    /// {0̲}
    pub fn origin(rank: usize) -> Self {
        GridSet::point(Exponent::zero(rank))
    }

    pub fn points(rank: usize, pts: impl IntoIterator<Item = Exponent>) -> Self {
        GridSet {
            rank,
            cosets: pts
                .into_iter()
                .map(|offset| Coset {
                    offset,
                    generators: BTreeSet::new(),
                })
                .collect(),
            exact: true,
        }
    }

    pub fn support_of(s: &Series) -> Self {
        GridSet::points(s.rank(), s.support().cloned())
    }

    /// ⟨generators⟩ as a single exact coset at 0̲.
    pub fn lattice(rank: usize, generators: impl IntoIterator<Item = Exponent>) -> Result<Self> {
        GridSet::from_cosets(
            rank,
            [(Exponent::zero(rank), generators.into_iter().collect())],
            true,
        )
    }

    pub fn from_cosets(
        rank: usize,
        cosets: impl IntoIterator<Item = (Exponent, Vec<Exponent>)>,
        exact: bool,
    ) -> Result<Self> {
        let mut out = GridSet::empty(rank);
        out.exact = exact;
        for (offset, gens) in cosets {
            check_rank(rank, offset.rank())?;
            for g in &gens {
                check_rank(rank, g.rank())?;
                if !g.is_positive() {
                    return Err(Error::Domain(format!("generator {g} is not > 0")));
                }
            }
            out.cosets.insert(Coset {
                offset,
                generators: gens.into_iter().collect(),
            });
        }
        Ok(out)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn cosets(&self) -> &BTreeSet<Coset> {
        &self.cosets
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn is_empty(&self) -> bool {
        self.cosets.is_empty()
    }

    pub fn with_exact(mut self, exact: bool) -> Self {
        self.exact = self.exact && exact;
        self
    }

    pub fn union(&self, other: &GridSet) -> Result<GridSet> {
        check_rank(self.rank, other.rank)?;
        let mut out = self.clone();
        out.cosets.extend(other.cosets.iter().cloned());
        out.exact = self.exact && other.exact;
        Ok(out)
    }

    /// {ξ₁ + ξ₂}
    pub fn sum(&self, other: &GridSet) -> Result<GridSet> {
        check_rank(self.rank, other.rank)?;
        let mut out = GridSet::empty(self.rank);
        out.exact = self.exact && other.exact;
        for a in &self.cosets {
            for b in &other.cosets {
                out.cosets.insert(Coset {
                    offset: &a.offset + &b.offset,
                    generators: a.generators.union(&b.generators).cloned().collect(),
                });
            }
        }
        Ok(out)
    }

    /// A superset of the additive monoid generated by the set.
    pub fn semigroup(&self) -> Result<GridSet> {
        let mut gens = BTreeSet::new();
        let mut faithful = true;
        for c in &self.cosets {
            if c.offset.is_negative() {
                return Err(Error::Domain(format!(
                    "semigroup of a set containing {} < 0 is not well ordered",
                    c.offset
                )));
            }
            if !c.offset.is_zero() {
                faithful &= c.generators.is_empty();
                gens.insert(c.offset.clone());
            }
            gens.extend(c.generators.iter().cloned());
        }
        let mut out = GridSet::empty(self.rank);
        out.cosets.insert(Coset {
            offset: Exponent::zero(self.rank),
            generators: gens,
        });
        out.exact = self.exact && faithful;
        Ok(out)
    }

    /// X + ℕα
    pub fn add_generator(&self, alpha: &Exponent) -> Result<GridSet> {
        check_rank(self.rank, alpha.rank())?;
        if !alpha.is_positive() {
            return Err(Error::Domain(format!("generator {alpha} is not > 0")));
        }
        let mut out = GridSet::empty(self.rank);
        out.exact = self.exact;
        for c in &self.cosets {
            let mut g = c.generators.clone();
            g.insert(alpha.clone());
            out.cosets.insert(Coset {
                offset: c.offset.clone(),
                generators: g,
            });
        }
        Ok(out)
    }

    /// X + e for a single exponent e (offsets shifted).
    pub fn translate(&self, e: &Exponent) -> GridSet {
        GridSet {
            rank: self.rank,
            cosets: self
                .cosets
                .iter()
                .map(|c| Coset {
                    offset: &c.offset + e,
                    generators: c.generators.clone(),
                })
                .collect(),
            exact: self.exact,
        }
    }

    /// (X)_{≥β} − β, by splitting each coset on the multiplicity of one
    /// generator at a time. The result is exact when X is.
    pub fn translate_neg(&self, beta: &Exponent, cap: usize) -> Result<GridSet> {
        check_rank(self.rank, beta.rank())?;
        let mut out = GridSet::empty(self.rank);
        out.exact = self.exact;
        for c in &self.cosets {
            let gens: Vec<Exponent> = c.generators.iter().cloned().collect();
            let target = beta - &c.offset;
            split_coset(&gens, &target, &mut out.cosets, cap, gens.len())?;
        }
        Ok(out)
    }

    pub fn member(&self, gamma: &Exponent, cap: usize) -> Membership {
        if gamma.rank() != self.rank {
            return Membership::No;
        }
        let mut unknown = false;
        for c in &self.cosets {
            let mut gens: Vec<&Exponent> = c.generators.iter().collect();
            gens.sort_by_key(|g| g.leading_class());
            let mut budget = cap;
            match coset_member(&gens, &(gamma - &c.offset), &mut budget) {
                Some(true) => return Membership::Yes,
                Some(false) => {}
                None => unknown = true,
            }
        }
        if unknown {
            Membership::Unknown
        } else {
            Membership::No
        }
    }

    /// All denoted elements strictly below `bound`, sorted.
    pub fn enumerate_below(&self, bound: &Exponent, cap: usize) -> Result<Vec<Exponent>> {
        check_rank(self.rank, bound.rank())?;
        let mut found = BTreeSet::new();
        let mut visits = 0usize;
        let visit_cap = cap.saturating_mul(64);
        for c in &self.cosets {
            if &c.offset >= bound {
                continue;
            }
            let gens: Vec<&Exponent> = c.generators.iter().collect();
            let mut stack = vec![(c.offset.clone(), 0usize)];
            while let Some((value, from)) = stack.pop() {
                visits += 1;
                if visits > visit_cap {
                    return Err(non_accessible(bound, cap));
                }
                for (j, g) in gens.iter().enumerate().skip(from) {
                    let next = &value + g;
                    if &next < bound {
                        stack.push((next, j));
                    }
                }
                found.insert(value);
                if found.len() > cap {
                    return Err(non_accessible(bound, cap));
                }
            }
        }
        Ok(found.into_iter().collect())
    }

    pub fn parse(text: &str, rank: usize) -> Result<GridSet> {
        let mut cur = Cursor::new(text);
        cur.expect(b'{')?;
        let mut cosets = Vec::new();
        if !cur.eat(b'}') {
            loop {
                cur.expect(b'(')?;
                let offset = cur.exponent()?;
                cur.expect(b';')?;
                let mut gens = Vec::new();
                if !cur.eat(b')') {
                    loop {
                        gens.push(cur.exponent()?);
                        if cur.eat(b')') {
                            break;
                        }
                        cur.expect(b',')?;
                    }
                }
                cosets.push((offset, gens));
                if cur.eat(b'}') {
                    break;
                }
                cur.expect(b',')?;
            }
        }
        let exact = if cur.keyword("exact") {
            true
        } else if cur.keyword("approx") {
            false
        } else {
            return cur.fail("expected 'exact' or 'approx'");
        };
        cur.finish()?;
        GridSet::from_cosets(rank, cosets, exact)
    }

    pub fn to_json(&self) -> GridSetJson {
        GridSetJson {
            cosets: self
                .cosets
                .iter()
                .map(|c| CosetJson {
                    offset: c.offset.to_string(),
                    generators: c.generators.iter().map(ToString::to_string).collect(),
                })
                .collect(),
            exact: self.exact,
        }
    }

    pub fn from_json(j: &GridSetJson, rank: usize) -> Result<GridSet> {
        let mut cosets = Vec::new();
        for c in &j.cosets {
            let offset = Exponent::parse(&c.offset, rank)?;
            let gens = c
                .generators
                .iter()
                .map(|g| Exponent::parse(g, rank))
                .collect::<Result<Vec<_>>>()?;
            cosets.push((offset, gens));
        }
        GridSet::from_cosets(rank, cosets, j.exact)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CosetJson {
    pub offset: String,
    pub generators: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSetJson {
    pub cosets: Vec<CosetJson>,
    pub exact: bool,
}

fn non_accessible(bound: &Exponent, cap: usize) -> Error {
    Error::NonAccessible(format!("more than {cap} grid points below {bound}"))
}

/// Elements s of ⟨gens⟩ with s ≥ target, pushed as cosets of s − target.
fn split_coset(
    gens: &[Exponent],
    target: &Exponent,
    out: &mut BTreeSet<Coset>,
    cap: usize,
    depth_left: usize,
) -> Result<()> {
    if !target.is_positive() {
        out.insert(Coset {
            offset: -target,
            generators: gens.iter().cloned().collect(),
        });
        return check_size(out, cap);
    }
    // The generator reaching the target in the fewest steps; generators of
    // a deeper class than the target never reach it.
    let pick = gens
        .iter()
        .enumerate()
        .filter_map(|(i, g)| crate::series::powers_needed(g, target).map(|k| (k, i)))
        .min();
    let Some((k0, idx)) = pick else {
        return Ok(());
    };
    assert!(depth_left > 0, "coset split recursion deeper than the generator count");
    if k0 > cap {
        return Err(Error::NonAccessible(format!(
            "{k0} steps needed to split a coset at {target}"
        )));
    }
    let lambda = &gens[idx];
    let k0q = Q::from_integer(k0.into());
    out.insert(Coset {
        offset: &lambda.scale(&k0q) - target,
        generators: gens.iter().cloned().collect(),
    });
    check_size(out, cap)?;
    let rest: Vec<Exponent> = gens
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != idx)
        .map(|(_, g)| g.clone())
        .collect();
    let mut t = target.clone();
    for _ in 0..k0 {
        split_coset(&rest, &t, out, cap, depth_left - 1)?;
        t = &t - lambda;
    }
    Ok(())
}

fn check_size(out: &BTreeSet<Coset>, cap: usize) -> Result<()> {
    if out.len() > cap {
        Err(Error::NonAccessible(format!(
            "negative translation produced more than {cap} cosets"
        )))
    } else {
        Ok(())
    }
}

/// Is `target` an ℕ-combination of `gens` (sorted by leading class)?
/// `None` once the search budget runs out.
fn coset_member(gens: &[&Exponent], target: &Exponent, budget: &mut usize) -> Option<bool> {
    if *budget == 0 {
        return None;
    }
    *budget -= 1;
    if target.is_zero() {
        return Some(true);
    }
    if target.is_negative() {
        return Some(false);
    }
    let Some((g, rest)) = gens.split_first() else {
        return Some(false);
    };
    let p = g.leading_class().expect("positive generator");
    let tp = target.leading_class().expect("positive target");
    // Remaining generators vanish before position p.
    if tp < p {
        return Some(false);
    }
    let max_k = if tp == p {
        (target.at(p) / g.at(p)).floor().to_integer()
    } else {
        num_bigint::BigInt::from(0)
    };
    let max_k = usize::try_from(max_k).ok()?;
    let mut unknown = false;
    let mut t = target.clone();
    for _ in 0..=max_k {
        match coset_member(rest, &t, budget) {
            Some(true) => return Some(true),
            Some(false) => {}
            None => unknown = true,
        }
        t = &t - g;
    }
    if unknown {
        None
    } else {
        Some(false)
    }
}

impl fmt::Display for GridSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .cosets
            .iter()
            .map(|c| {
                let g: Vec<String> = c.generators.iter().map(ToString::to_string).collect();
                if g.is_empty() {
                    format!("({};)", c.offset)
                } else {
                    format!("({}; {})", c.offset, g.join(", "))
                }
            })
            .collect();
        let tag = if self.exact { "exact" } else { "approx" };
        if parts.is_empty() {
            write!(f, "{{ }} {tag}")
        } else {
            write!(f, "{{ {} }} {tag}", parts.join(" , "))
        }
    }
}
