//! The finite combinatorial form of the product inequality.
//!
//! For `p` in the simplex and `m >= 1` the condition compares
//!
//! ```text
//!   sum_{(k, j) admissible} prod_i C(2m, k_i) S2(k_i, j_i) (-1)^{k_i} p_i^{2m - k_i + j_i}
//!     - prod_i sum_{k=m}^{2m} C(2m, k) S2(k, k - m) (-1)^k p_i^m
//! ```
//!
//! against zero, where `0 <= j_i <= k_i <= 2m`, `sum k_i >= md`, and either
//! `sum j_i = sum (k_i - m)` ([`ConstraintVariant::Equality`]) or
//! `sum j_i <= sum k_i - md` ([`ConstraintVariant::Slack`]).
//!
//! Writing `r_i = k_i - j_i`, both constraints only involve `sum r_i`, and a
//! nonzero Stirling factor forces `j_i = 0` when `k_i = 0` and `1 <= j_i <= k_i`
//! otherwise, so `0 <= r_i <= max(k_i - 1, 0)`. The enumeration walks `k`
//! lexicographically, cutting every prefix whose largest reachable `sum r`
//! is below `md`, then walks `j` for each surviving `k` with the same bound
//! (plus the upper bound for the equality form).

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::budget::{checked_pow, Budget};
use crate::combinatorics::{binomial, stirling2};
use crate::error::{Error, Result};
use crate::exact::{from_bigint, pow, ExactRational};
use crate::multinomial::{MultiIndex, ProbVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintVariant {
    /// `sum j_i = sum (k_i - m)`.
    Equality,
    /// `sum j_i <= sum k_i - md`.
    Slack,
}

impl ConstraintVariant {
    pub const ALL: [ConstraintVariant; 2] = [ConstraintVariant::Equality, ConstraintVariant::Slack];

    pub fn as_str(self) -> &'static str {
        match self {
            ConstraintVariant::Equality => "equality",
            ConstraintVariant::Slack => "slack",
        }
    }

    /// Whether a complete `(k, j)` pair with `sum r = reduced` and `sum k = k_total` is admissible.
    fn admits(self, k_total: u64, reduced: u64, md: u64) -> bool {
        k_total >= md
            && match self {
                ConstraintVariant::Equality => reduced == md,
                ConstraintVariant::Slack => reduced >= md,
            }
    }
}

impl fmt::Display for ConstraintVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConstraintVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "equality" | "eq" => Ok(ConstraintVariant::Equality),
            "slack" | "script" => Ok(ConstraintVariant::Slack),
            other => Err(Error::InvalidArgument(format!(
                "unknown constraint variant {other:?} (expected equality or slack)"
            ))),
        }
    }
}

/// One admissible summand.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConstrainedTerm {
    pub k: MultiIndex,
    pub j: MultiIndex,
    /// `prod_i C(2m, k_i) S2(k_i, j_i) (-1)^{k_i}`.
    pub coefficient: BigInt,
    /// `2m - k_i + j_i` per coordinate.
    pub p_exponents: MultiIndex,
}

impl ConstrainedTerm {
    fn build(k: Vec<u32>, j: Vec<u32>, m: u32) -> Self {
        let two_m = 2 * m;
        let mut coefficient = BigInt::one();
        for (&ki, &ji) in k.iter().zip(&j) {
            coefficient *= binomial(two_m, ki as i64) * stirling2(ki, ji as i64);
            if ki % 2 == 1 {
                coefficient = -coefficient;
            }
        }
        let p_exponents = k.iter().zip(&j).map(|(&ki, &ji)| two_m - ki + ji).collect();
        ConstrainedTerm {
            k: MultiIndex(k),
            j: MultiIndex(j),
            coefficient,
            p_exponents: MultiIndex(p_exponents),
        }
    }

    /// `k_i >= m` and `j_i = k_i - m` in every coordinate.
    pub fn is_diagonal(&self, m: u32) -> bool {
        self.k
            .iter()
            .zip(self.j.iter())
            .all(|(&k, &j)| k >= m && j + m == k)
    }

    /// `coefficient * prod_i p_i^{2m - k_i + j_i}`.
    pub fn evaluate(&self, p: &ProbVector) -> ExactRational {
        let mut v = from_bigint(self.coefficient.clone());
        for (pi, &e) in p.entries().iter().zip(self.p_exponents.iter()) {
            v *= pow(pi, e);
        }
        v
    }
}

fn max_reduction(k: u32) -> u64 {
    k.saturating_sub(1) as u64
}

/// Depth-first walk over a box of integer vectors that skips every subtree
/// whose prefix `keep` rejects. Yields vectors in lexicographic order.
struct PrunedWalk<F> {
    ranges: Vec<(u32, u32)>,
    cur: Vec<u32>,
    started: bool,
    done: bool,
    keep: F,
}

impl<F: FnMut(&[u32]) -> bool> PrunedWalk<F> {
    fn new(ranges: Vec<(u32, u32)>, keep: F) -> Self {
        let cur = ranges.iter().map(|r| r.0).collect();
        PrunedWalk {
            ranges,
            cur,
            started: false,
            done: false,
            keep,
        }
    }
}

impl<F: FnMut(&[u32]) -> bool> Iterator for PrunedWalk<F> {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        if self.done {
            return None;
        }
        let d = self.ranges.len();
        if d == 0 {
            self.done = true;
            return Some(Vec::new());
        }
        let mut pos;
        if self.started {
            pos = d - 1;
            self.cur[pos] += 1;
        } else {
            self.started = true;
            pos = 0;
            self.cur[0] = self.ranges[0].0;
        }
        loop {
            if self.cur[pos] > self.ranges[pos].1 {
                if pos == 0 {
                    self.done = true;
                    return None;
                }
                pos -= 1;
                self.cur[pos] += 1;
                continue;
            }
            if !(self.keep)(&self.cur[..=pos]) {
                self.cur[pos] += 1;
                continue;
            }
            if pos + 1 == d {
                return Some(self.cur.clone());
            }
            pos += 1;
            self.cur[pos] = self.ranges[pos].0;
        }
    }
}

type KeepFn = Box<dyn FnMut(&[u32]) -> bool + Send>;

/// Stream of admissible terms, ordered lexicographically by `k` then `j`.
pub struct ConstrainedTerms {
    d: usize,
    m: u32,
    variant: ConstraintVariant,
    outer: PrunedWalk<KeepFn>,
    inner: Option<(Vec<u32>, PrunedWalk<KeepFn>)>,
}

impl ConstrainedTerms {
    fn inner_walk(&self, k: &[u32]) -> PrunedWalk<KeepFn> {
        let md = self.m as u64 * self.d as u64;
        let variant = self.variant;
        let ranges: Vec<(u32, u32)> = k.iter().map(|&ki| (u32::from(ki > 0), ki)).collect();
        // suffix_max[i] = largest sum of r over coordinates i..d
        let mut suffix_max = vec![0u64; k.len() + 1];
        for i in (0..k.len()).rev() {
            suffix_max[i] = suffix_max[i + 1] + max_reduction(k[i]);
        }
        let k_owned = k.to_vec();
        let keep: KeepFn = Box::new(move |prefix: &[u32]| {
            let reduced: u64 = prefix
                .iter()
                .zip(&k_owned)
                .map(|(&j, &ki)| (ki - j) as u64)
                .sum();
            if reduced + suffix_max[prefix.len()] < md {
                return false;
            }
            match variant {
                ConstraintVariant::Equality => reduced <= md,
                ConstraintVariant::Slack => true,
            }
        });
        PrunedWalk::new(ranges, keep)
    }
}

impl Iterator for ConstrainedTerms {
    type Item = ConstrainedTerm;

    fn next(&mut self) -> Option<ConstrainedTerm> {
        let md = self.m as u64 * self.d as u64;
        loop {
            if let Some((k, walk)) = self.inner.as_mut() {
                if let Some(j) = walk.next() {
                    let reduced: u64 = k.iter().zip(&j).map(|(&a, &b)| (a - b) as u64).sum();
                    let k_total: u64 = k.iter().map(|&x| x as u64).sum();
                    if self.variant.admits(k_total, reduced, md) {
                        return Some(ConstrainedTerm::build(k.clone(), j, self.m));
                    }
                    continue;
                }
                self.inner = None;
            }
            let k = self.outer.next()?;
            let walk = self.inner_walk(&k);
            self.inner = Some((k, walk));
        }
    }
}

fn check_shape(d: usize, m: u32) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension d must be at least 1".into()));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("moment order m must be at least 1".into()));
    }
    Ok(())
}

/// Pruned enumeration of the admissible `(k, j)` pairs with nonzero Stirling factors.
pub fn enumerate_constrained_terms(
    d: usize,
    m: u32,
    variant: ConstraintVariant,
    budget: &Budget,
) -> Result<ConstrainedTerms> {
    check_shape(d, m)?;
    budget.check_terms("constrained term enumeration", checked_pow(2 * m as u64 + 1, d))?;
    let md = m as u64 * d as u64;
    let per_coord_max = max_reduction(2 * m);
    let keep: KeepFn = Box::new(move |prefix: &[u32]| {
        let reachable: u64 = prefix.iter().map(|&k| max_reduction(k)).sum::<u64>()
            + per_coord_max * (d - prefix.len()) as u64;
        reachable >= md
    });
    let outer = PrunedWalk::new(vec![(0, 2 * m); d], keep);
    Ok(ConstrainedTerms {
        d,
        m,
        variant,
        outer,
        inner: None,
    })
}

/// The same term set by filtering the full `k`/`j` box, without pruning.
///
/// Reference implementation for checking [`enumerate_constrained_terms`].
pub fn unpruned_constrained_terms(
    d: usize,
    m: u32,
    variant: ConstraintVariant,
    budget: &Budget,
) -> Result<Vec<ConstrainedTerm>> {
    check_shape(d, m)?;
    // (2m+1)^d choices of k, each with at most (2m+1)^d choices of j.
    budget.check_terms("unpruned term enumeration", checked_pow(2 * m as u64 + 1, 2 * d))?;
    let md = m as u64 * d as u64;
    let mut out = Vec::new();
    let box_k = PrunedWalk::new(vec![(0, 2 * m); d], |_: &[u32]| true);
    for k in box_k {
        let ranges = k.iter().map(|&ki| (0, ki)).collect();
        for j in PrunedWalk::new(ranges, |_: &[u32]| true) {
            let k_total: u64 = k.iter().map(|&x| x as u64).sum();
            let j_total: u64 = j.iter().map(|&x| x as u64).sum();
            let admissible = k_total >= md
                && match variant {
                    ConstraintVariant::Equality => j_total + md == k_total,
                    ConstraintVariant::Slack => j_total + md <= k_total,
                };
            if !admissible {
                continue;
            }
            if k.iter().zip(&j).any(|(&ki, &ji)| stirling2(ki, ji as i64).is_zero()) {
                continue;
            }
            out.push(ConstrainedTerm::build(k.clone(), j, m));
        }
    }
    Ok(out)
}

/// `sum_{k=m}^{2m} C(2m, k) S2(k, k - m) (-1)^k`, the per-coordinate diagonal weight.
pub fn diagonal_weight(m: u32) -> BigInt {
    (m..=2 * m)
        .map(|k| {
            let c = binomial(2 * m, k as i64) * stirling2(k, (k - m) as i64);
            if k % 2 == 1 {
                -c
            } else {
                c
            }
        })
        .sum()
}

/// `prod_i sum_{k=m}^{2m} C(2m, k) S2(k, k - m) (-1)^k p_i^m`.
pub fn diagonal_product(p: &ProbVector, m: u32) -> ExactRational {
    let w = from_bigint(diagonal_weight(m));
    p.entries().iter().map(|pi| &w * pow(pi, m)).product()
}

/// Constrained sum minus the diagonal product.
pub fn theorem_gap(
    p: &ProbVector,
    m: u32,
    variant: ConstraintVariant,
    budget: &Budget,
) -> Result<ExactRational> {
    let two_m = 2 * m;
    let powers: Vec<Vec<ExactRational>> = p
        .entries()
        .iter()
        .map(|pi| (0..=two_m).map(|e| pow(pi, e)).collect())
        .collect();
    let mut sum = ExactRational::zero();
    for term in enumerate_constrained_terms(p.dim(), m, variant, budget)? {
        let mut v = from_bigint(term.coefficient);
        for (pw, &e) in powers.iter().zip(term.p_exponents.iter()) {
            v *= &pw[e as usize];
        }
        sum += v;
    }
    Ok(sum - diagonal_product(p, m))
}

/// Sum of the coefficients of the non-diagonal equality-constrained terms.
///
/// When every `p_i` equals a common `q`, each equality term carries `q^{md}`
/// and the diagonal terms cancel the product, so
/// `theorem_gap((q, .., q), m, Equality) = equal_p_sum(d, m) q^{md}`.
pub fn equal_p_sum(d: usize, m: u32, budget: &Budget) -> Result<BigInt> {
    Ok(enumerate_constrained_terms(d, m, ConstraintVariant::Equality, budget)?
        .filter(|t| !t.is_diagonal(m))
        .map(|t| t.coefficient)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, ratio};

    fn budget() -> Budget {
        Budget::new(10_000_000, 24)
    }

    fn terms(d: usize, m: u32, v: ConstraintVariant) -> Vec<ConstrainedTerm> {
        enumerate_constrained_terms(d, m, v, &budget()).unwrap().collect()
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("equality".parse::<ConstraintVariant>().unwrap(), ConstraintVariant::Equality);
        assert_eq!("Slack".parse::<ConstraintVariant>().unwrap(), ConstraintVariant::Slack);
        assert!("other".parse::<ConstraintVariant>().is_err());
    }

    #[test]
    fn small_term_sets() {
        let t = terms(1, 1, ConstraintVariant::Equality);
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].k.0, vec![2]);
        assert_eq!(t[0].j.0, vec![1]);

        for v in ConstraintVariant::ALL {
            let t = terms(2, 1, v);
            assert_eq!(t.len(), 1, "{v}");
            assert_eq!(t[0].k.0, vec![2, 2]);
            assert_eq!(t[0].j.0, vec![1, 1]);
            assert_eq!(t[0].p_exponents.0, vec![1, 1]);
            assert_eq!(t[0].coefficient, BigInt::one());
        }
    }

    #[test]
    fn terms_are_sorted_and_unique() {
        for v in ConstraintVariant::ALL {
            let t = terms(3, 2, v);
            let keys: Vec<_> = t.iter().map(|x| (x.k.clone(), x.j.clone())).collect();
            let mut sorted = keys.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(keys, sorted);
        }
    }

    #[test]
    fn diagonal_product_examples() {
        assert_eq!(diagonal_product(&ProbVector::parse("1/2,1/4").unwrap(), 1), ratio(1, 8));
        assert_eq!(diagonal_product(&ProbVector::parse("1/2").unwrap(), 2), ratio(3, 4));
        assert_eq!(
            diagonal_product(&ProbVector::parse("1/4,1/4,1/4").unwrap(), 1),
            ratio(1, 64)
        );
    }

    #[test]
    fn gap_examples() {
        let b = budget();
        for m in 1..=5 {
            let g = theorem_gap(&ProbVector::parse("2/7").unwrap(), m, ConstraintVariant::Equality, &b);
            assert_eq!(g.unwrap(), int(0));
        }
        let q = ProbVector::parse("1/4,1/4").unwrap();
        assert_eq!(theorem_gap(&q, 1, ConstraintVariant::Equality, &b).unwrap(), int(0));
        // golden values from the unpruned enumeration
        assert_eq!(theorem_gap(&q, 2, ConstraintVariant::Equality, &b).unwrap(), int(0));
        assert_eq!(theorem_gap(&q, 2, ConstraintVariant::Slack, &b).unwrap(), ratio(5, 32));
    }

    #[test]
    fn slack_variant_does_not_vanish_in_one_dimension() {
        let b = budget();
        let p = ProbVector::parse("1/3").unwrap();
        let g: Vec<_> = (1..=5)
            .map(|m| theorem_gap(&p, m, ConstraintVariant::Slack, &b).unwrap())
            .collect();
        assert_eq!(g, vec![int(0), ratio(1, 3), ratio(28, 9), ratio(856, 27), ratio(3829, 9)]);
    }

    #[test]
    fn equal_p_examples() {
        let b = budget();
        for m in 1..=4 {
            assert_eq!(equal_p_sum(1, m, &b).unwrap(), BigInt::zero());
        }
        assert_eq!(equal_p_sum(2, 1, &b).unwrap(), BigInt::zero());
        assert_eq!(equal_p_sum(2, 2, &b).unwrap(), BigInt::zero());
    }

    #[test]
    fn budget_and_shape_errors() {
        let tiny = Budget::new(100, 24);
        assert!(enumerate_constrained_terms(3, 2, ConstraintVariant::Equality, &tiny).is_err());
        assert!(enumerate_constrained_terms(0, 2, ConstraintVariant::Equality, &budget()).is_err());
        assert!(enumerate_constrained_terms(2, 0, ConstraintVariant::Equality, &budget()).is_err());
    }
}
