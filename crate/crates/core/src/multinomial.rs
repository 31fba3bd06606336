//! Finite-N multinomial machinery.
//!
//! `xi ~ Multinomial(N, p)` with `p` in the open simplex `S_d`; the last cell
//! probability `p_{d+1} = 1 - sum p_i` is implicit. Central mixed moments are
//! computed through the Stirling / factorial-moment expansion, whose cost does
//! not depend on `N`. The pmf-weighted sum over the support is kept as an
//! independent oracle for small `N`.

use std::fmt;
use std::ops::Deref;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::budget::{checked_pow, Budget};
use crate::combinatorics::{binomial, factorial, falling_factorial_int, stirling2};
use crate::error::{Error, Result};
use crate::exact::{format_rational, from_bigint, parse_rational_list, pow, ExactRational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BoundaryPolicy {
    /// `p_i > 0` and `sum p_i < 1`.
    #[default]
    Strict,
    /// Also admits `sum p_i = 1` (singular covariance).
    AllowFullSum,
}

/// Point of the simplex `S_d`: `d` positive rationals with sum below one.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProbVector {
    entries: Vec<ExactRational>,
}

impl ProbVector {
    pub fn new(entries: Vec<ExactRational>) -> Result<Self> {
        Self::with_policy(entries, BoundaryPolicy::Strict)
    }

    pub fn with_policy(entries: Vec<ExactRational>, policy: BoundaryPolicy) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidProbVector("dimension must be at least 1".into()));
        }
        if let Some(bad) = entries.iter().find(|p| !p.is_positive()) {
            return Err(Error::InvalidProbVector(format!(
                "entries must be positive, got {}",
                format_rational(bad)
            )));
        }
        let total: ExactRational = entries.iter().sum();
        let one = ExactRational::one();
        let ok = match policy {
            BoundaryPolicy::Strict => total < one,
            BoundaryPolicy::AllowFullSum => total <= one,
        };
        if !ok {
            return Err(Error::InvalidProbVector(format!(
                "entries sum to {}, which leaves no mass for the implicit last cell",
                format_rational(&total)
            )));
        }
        Ok(ProbVector { entries })
    }

    /// Parses `"1/2,1/4"`.
    pub fn parse(text: &str) -> Result<Self> {
        Self::new(parse_rational_list(text)?)
    }

    pub fn parse_with_policy(text: &str, policy: BoundaryPolicy) -> Result<Self> {
        Self::with_policy(parse_rational_list(text)?, policy)
    }

    /// `d` equal entries.
    pub fn uniform(d: usize, p: ExactRational) -> Result<Self> {
        Self::new(vec![p; d])
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[ExactRational] {
        &self.entries
    }

    /// `p_{d+1} = 1 - sum p_i`.
    pub fn remainder(&self) -> ExactRational {
        ExactRational::one() - self.entries.iter().sum::<ExactRational>()
    }

    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: order.len(),
            });
        }
        Ok(ProbVector {
            entries: order.iter().map(|&i| self.entries[i].clone()).collect(),
        })
    }
}

impl fmt::Display for ProbVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(format_rational).collect();
        f.write_str(&parts.join(","))
    }
}

/// Vector of small nonnegative integers (count vectors, exponent vectors).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zeros(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&x| x as u64).sum()
    }
}

impl Deref for MultiIndex {
    type Target = [u32];

    fn deref(&self) -> &[u32] {
        &self.0
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultinomialSpec {
    trials: u64,
    probs: ProbVector,
}

impl MultinomialSpec {
    pub fn new(trials: u64, probs: ProbVector) -> Result<Self> {
        if trials == 0 {
            return Err(Error::InvalidArgument("number of trials must be at least 1".into()));
        }
        Ok(MultinomialSpec { trials, probs })
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn probs(&self) -> &ProbVector {
        &self.probs
    }

    pub fn dim(&self) -> usize {
        self.probs.dim()
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                found,
            })
        }
    }
}

/// Exact probability of observing `counts` in the first `d` cells.
pub fn pmf(spec: &MultinomialSpec, counts: &MultiIndex) -> Result<ExactRational> {
    spec.check_dim(counts.len())?;
    let n = spec.trials;
    let total = counts.total();
    if total > n {
        return Ok(ExactRational::zero());
    }
    let rest = (n - total) as u32;
    let mut denom = factorial(rest);
    for &k in counts.iter() {
        denom *= factorial(k);
    }
    let mut prob = ExactRational::new(factorial(n as u32), denom);
    prob *= pow(&spec.probs.remainder(), rest);
    for (&k, p) in counts.iter().zip(spec.probs.entries()) {
        prob *= pow(p, k);
    }
    Ok(prob)
}

/// Every lattice point `k` with `k_i >= 0` and `sum k_i <= N`, each exactly once.
///
/// The first coordinate varies fastest.
pub fn support_iter(spec: &MultinomialSpec) -> SupportIter {
    SupportIter {
        trials: spec.trials,
        current: Some(vec![0; spec.dim()]),
    }
}

/// Number of support points, `C(N + d, d)`.
pub fn support_size(spec: &MultinomialSpec) -> BigInt {
    binomial((spec.trials + spec.dim() as u64) as u32, spec.dim() as i64)
}

#[derive(Debug, Clone)]
pub struct SupportIter {
    trials: u64,
    current: Option<Vec<u32>>,
}

impl Iterator for SupportIter {
    type Item = MultiIndex;

    fn next(&mut self) -> Option<MultiIndex> {
        let cur = self.current.as_mut()?;
        let out = MultiIndex(cur.clone());
        let mut sum: u64 = cur.iter().map(|&x| x as u64).sum();
        let mut i = 0;
        loop {
            if i == cur.len() {
                self.current = None;
                break;
            }
            if sum < self.trials {
                cur[i] += 1;
                break;
            }
            sum -= cur[i] as u64;
            cur[i] = 0;
            i += 1;
        }
        Some(out)
    }
}

/// `E[f(xi)] = sum_k f(k) pmf(k)` by direct enumeration of the support.
pub fn brute_force_expectation<F>(
    spec: &MultinomialSpec,
    f: F,
    budget: &Budget,
) -> Result<ExactRational>
where
    F: Fn(&MultiIndex) -> ExactRational,
{
    let size: Option<u128> = support_size(spec).try_into().ok();
    budget.check_terms("multinomial support enumeration", size)?;
    let mut acc = ExactRational::zero();
    for k in support_iter(spec) {
        let weight = pmf(spec, &k)?;
        if !weight.is_zero() {
            acc += f(&k) * weight;
        }
    }
    Ok(acc)
}

/// `E[prod xi_i^(j_i)] = N^(sum j) prod p_i^j_i`.
pub fn factorial_moment(spec: &MultinomialSpec, orders: &MultiIndex) -> Result<ExactRational> {
    spec.check_dim(orders.len())?;
    let total = orders.total();
    if total > spec.trials {
        return Ok(ExactRational::zero());
    }
    let mut value = from_bigint(falling_factorial_int(&BigInt::from(spec.trials), total as u32));
    for (&j, p) in orders.iter().zip(spec.probs.entries()) {
        value *= pow(p, j);
    }
    Ok(value)
}

/// Coefficients `c[j] = sum_k C(2m, k) S2(k, j) (-N p)^(2m - k) p^j`, `j = 0..=2m`.
///
/// With these, `E[(xi - Np)^{2m}]` for one coordinate is `sum_j N^(j) c[j]`,
/// and the mixed moment is the same sum over the convolution of the
/// per-coordinate coefficient vectors (factorial moments only depend on
/// `sum j`).
fn coordinate_coefficients(trials: u64, p: &ExactRational, m: u32) -> Vec<ExactRational> {
    let two_m = 2 * m;
    let neg_np = -(from_bigint(BigInt::from(trials)) * p);
    let neg_np_pows: Vec<ExactRational> = (0..=two_m).map(|e| pow(&neg_np, e)).collect();
    let p_pows: Vec<ExactRational> = (0..=two_m).map(|e| pow(p, e)).collect();
    (0..=two_m)
        .map(|j| {
            let mut c = ExactRational::zero();
            for k in j..=two_m {
                let s = stirling2(k, j as i64);
                if s.is_zero() {
                    continue;
                }
                let integer = binomial(two_m, k as i64) * s;
                c += from_bigint(integer) * &neg_np_pows[(two_m - k) as usize];
            }
            c * &p_pows[j as usize]
        })
        .collect()
}

fn convolve(a: &[ExactRational], b: &[ExactRational]) -> Vec<ExactRational> {
    let mut out = vec![ExactRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn finite_moment_from_coefficients(trials: u64, coeffs: &[ExactRational]) -> ExactRational {
    let n = BigInt::from(trials);
    coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(total, c)| from_bigint(falling_factorial_int(&n, total as u32)) * c)
        .sum()
}

/// `E[prod_i (xi_i - N p_i)^{2m}]` through binomial, Stirling and factorial-moment expansion.
pub fn central_mixed_moment(
    spec: &MultinomialSpec,
    m: u32,
    budget: &Budget,
) -> Result<ExactRational> {
    check_order(m)?;
    budget.check_terms(
        "central mixed moment expansion",
        checked_pow(2 * m as u64 + 1, spec.dim()),
    )?;
    let mut acc = vec![ExactRational::one()];
    for p in spec.probs.entries() {
        acc = convolve(&acc, &coordinate_coefficients(spec.trials, p, m));
    }
    Ok(finite_moment_from_coefficients(spec.trials, &acc))
}

/// `E[(xi - N p)^{2m}]` for a single binomial coordinate.
pub fn central_moment_univariate(trials: u64, p: &ExactRational, m: u32) -> ExactRational {
    let coeffs = coordinate_coefficients(trials, p, m);
    finite_moment_from_coefficients(trials, &coeffs)
}

/// `{E[prod (xi_i - N p_i)^{2m}] - prod E[(xi_i - N p_i)^{2m}]} / N^{md}`.
pub fn scaled_gap_finite(spec: &MultinomialSpec, m: u32, budget: &Budget) -> Result<ExactRational> {
    let mixed = central_mixed_moment(spec, m, budget)?;
    let product: ExactRational = spec
        .probs
        .entries()
        .iter()
        .map(|p| central_moment_univariate(spec.trials, p, m))
        .product();
    let scale = pow(
        &from_bigint(BigInt::from(spec.trials)),
        m * spec.dim() as u32,
    );
    Ok((mixed - product) / scale)
}

fn check_order(m: u32) -> Result<()> {
    if m == 0 {
        Err(Error::InvalidArgument("moment order m must be at least 1".into()))
    } else {
        Ok(())
    }
}
