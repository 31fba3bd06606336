//! Exact mixed moments of the limiting Gaussian law `N_d(0, diag(p) - p p^T)`.
//!
//! Mixed moments come from Isserlis' theorem: `E[prod Y_i^{a_i}]` is the sum,
//! over perfect pairings of the multiset with `a_i` copies of index `i`, of the
//! product of covariance entries along the pairs. Instead of listing the
//! `(|a| - 1)!!` pairings, [`wick_moment`] recurses on the remaining
//! multiplicity vector: pair one copy of the first live index with each live
//! partner (weighted by the partner's remaining count) and memoize on the
//! multiplicities that are left.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::budget::Budget;
use crate::combinatorics::{double_factorial, perfect_pairings};
use crate::error::{Error, Result};
use crate::exact::{from_bigint, pow, ExactRational};
use crate::multinomial::ProbVector;

/// Largest total degree the pairing-enumeration oracle accepts.
pub const NAIVE_MAX_DEGREE: u64 = 10;

/// Symmetric `d x d` rational matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CovMatrix {
    dim: usize,
    entries: Vec<ExactRational>,
}

impl CovMatrix {
    /// Row-major entries; rejects non-square or non-symmetric input.
    pub fn from_rows(rows: Vec<Vec<ExactRational>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::InvalidArgument("covariance must be at least 1x1".into()));
        }
        if let Some(row) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: row.len(),
            });
        }
        for (a, row) in rows.iter().enumerate() {
            for (b, x) in row.iter().enumerate().take(a) {
                if *x != rows[b][a] {
                    return Err(Error::InvalidArgument(format!(
                        "covariance is not symmetric at ({a}, {b})"
                    )));
                }
            }
        }
        Ok(CovMatrix {
            dim,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn diagonal(variances: Vec<ExactRational>) -> Result<Self> {
        let d = variances.len();
        let rows = variances
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                let mut row = vec![ExactRational::zero(); d];
                row[i] = v;
                row
            })
            .collect();
        Self::from_rows(rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, a: usize, b: usize) -> &ExactRational {
        &self.entries[a * self.dim + b]
    }
}

/// Exponents `a_i` of a mixed moment `E[prod Y_i^{a_i}]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiplicityVector(pub Vec<u32>);

impl MultiplicityVector {
    /// `(2m, .., 2m)` in dimension `d`.
    pub fn even(d: usize, m: u32) -> Self {
        MultiplicityVector(vec![2 * m; d])
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&a| a as u64).sum()
    }
}

/// `diag(p) - p p^T`.
pub fn covariance_from_p(p: &ProbVector) -> CovMatrix {
    let e = p.entries();
    let d = e.len();
    let entries = (0..d)
        .flat_map(|a| {
            (0..d).map(move |b| {
                let off = -(&e[a] * &e[b]);
                if a == b {
                    off + &e[a]
                } else {
                    off
                }
            })
        })
        .collect();
    CovMatrix { dim: d, entries }
}

/// `E[Y^{2m}] = (2m - 1)!! variance^m`.
pub fn univariate_even_moment(variance: &ExactRational, m: u32) -> ExactRational {
    let df = double_factorial(2 * m as i64 - 1).expect("2m - 1 is odd and >= -1");
    from_bigint(df) * pow(variance, m)
}

/// Gaussian mixed moment by memoized pairing recursion.
pub fn wick_moment(
    cov: &CovMatrix,
    mult: &MultiplicityVector,
    budget: &Budget,
) -> Result<ExactRational> {
    check_dim(cov, mult)?;
    let degree = mult.total();
    if degree % 2 == 1 {
        return Ok(ExactRational::zero());
    }
    budget.check_degree("Gaussian mixed moment", degree)?;
    let mut memo = HashMap::new();
    Ok(pair_recursive(cov, &mut mult.0.clone(), &mut memo))
}

fn pair_recursive(
    cov: &CovMatrix,
    remaining: &mut Vec<u32>,
    memo: &mut HashMap<Vec<u32>, ExactRational>,
) -> ExactRational {
    let Some(first) = remaining.iter().position(|&c| c > 0) else {
        return ExactRational::one();
    };
    if let Some(v) = memo.get(remaining.as_slice()) {
        return v.clone();
    }
    let key = remaining.clone();
    remaining[first] -= 1;
    let mut total = ExactRational::zero();
    for partner in first..remaining.len() {
        let count = remaining[partner];
        if count == 0 {
            continue;
        }
        let sigma = cov.get(first, partner);
        if sigma.is_zero() {
            continue;
        }
        remaining[partner] -= 1;
        let rest = pair_recursive(cov, remaining, memo);
        remaining[partner] += 1;
        total += sigma * from_bigint(BigInt::from(count)) * rest;
    }
    remaining[first] += 1;
    memo.insert(key, total.clone());
    total
}

/// Gaussian mixed moment by listing every perfect pairing; reference oracle for small degrees.
pub fn wick_moment_naive(cov: &CovMatrix, mult: &MultiplicityVector) -> Result<ExactRational> {
    check_dim(cov, mult)?;
    let degree = mult.total();
    if degree % 2 == 1 {
        return Ok(ExactRational::zero());
    }
    if degree > NAIVE_MAX_DEGREE {
        return Err(Error::BudgetExceeded {
            what: "pairing enumeration",
            required: degree.to_string(),
            limit: NAIVE_MAX_DEGREE,
        });
    }
    let labels: Vec<usize> = mult
        .0
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| std::iter::repeat_n(i, a as usize))
        .collect();
    let total = perfect_pairings(labels.len())
        .map(|pairing| {
            pairing
                .iter()
                .map(|&(x, y)| cov.get(labels[x], labels[y]).clone())
                .product::<ExactRational>()
        })
        .sum();
    Ok(total)
}

/// `E[prod Y_i^{2m}] - prod E[Y_i^{2m}]` for `Y ~ N(0, diag(p) - p p^T)`.
pub fn gaussian_gpi_gap(p: &ProbVector, m: u32, budget: &Budget) -> Result<ExactRational> {
    if m == 0 {
        return Err(Error::InvalidArgument("moment order m must be at least 1".into()));
    }
    let cov = covariance_from_p(p);
    let mixed = wick_moment(&cov, &MultiplicityVector::even(p.dim(), m), budget)?;
    let product: ExactRational = (0..cov.dim())
        .map(|i| univariate_even_moment(cov.get(i, i), m))
        .product();
    Ok(mixed - product)
}

fn check_dim(cov: &CovMatrix, mult: &MultiplicityVector) -> Result<()> {
    if cov.dim() == mult.0.len() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: cov.dim(),
            found: mult.0.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, ratio};

    fn budget() -> Budget {
        Budget::new(1_000_000, 24)
    }

    #[test]
    fn covariance_examples() {
        let c = covariance_from_p(&ProbVector::parse("1/2,1/4").unwrap());
        assert_eq!(c.get(0, 0), &ratio(1, 4));
        assert_eq!(c.get(0, 1), &ratio(-1, 8));
        assert_eq!(c.get(1, 0), &ratio(-1, 8));
        assert_eq!(c.get(1, 1), &ratio(3, 16));
        let c1 = covariance_from_p(&ProbVector::parse("1/2").unwrap());
        assert_eq!(c1.dim(), 1);
        assert_eq!(c1.get(0, 0), &ratio(1, 4));
        let c3 = covariance_from_p(&ProbVector::parse("1/4,1/4,1/4").unwrap());
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    assert!(c3.get(a, b) < &int(0));
                }
            }
        }
    }

    #[test]
    fn rejects_asymmetric() {
        let rows = vec![vec![int(1), int(2)], vec![int(3), int(1)]];
        assert!(CovMatrix::from_rows(rows).is_err());
    }

    #[test]
    fn univariate_examples() {
        assert_eq!(univariate_even_moment(&int(1), 2), int(3));
        assert_eq!(univariate_even_moment(&ratio(2, 7), 1), ratio(2, 7));
        assert_eq!(univariate_even_moment(&ratio(3, 16), 2), ratio(27, 256));
    }

    #[test]
    fn wick_examples() {
        let b = budget();
        let c = covariance_from_p(&ProbVector::parse("1/2,1/4").unwrap());
        let v = wick_moment(&c, &MultiplicityVector(vec![2, 2]), &b).unwrap();
        assert_eq!(v, ratio(5, 64));
        assert_eq!(wick_moment_naive(&c, &MultiplicityVector(vec![2, 2])).unwrap(), ratio(5, 64));
        assert_eq!(wick_moment(&c, &MultiplicityVector(vec![1, 2]), &b).unwrap(), int(0));
        assert!(wick_moment(&c, &MultiplicityVector(vec![2]), &b).is_err());
        let c1 = covariance_from_p(&ProbVector::parse("1/3").unwrap());
        for m in 1..=5 {
            assert_eq!(
                wick_moment(&c1, &MultiplicityVector(vec![2 * m]), &b).unwrap(),
                univariate_even_moment(c1.get(0, 0), m)
            );
        }
        let small = Budget::new(1_000_000, 6);
        assert!(wick_moment(&c, &MultiplicityVector(vec![4, 4]), &small).unwrap_err().is_budget());
    }

    #[test]
    fn gap_examples() {
        let b = budget();
        for m in 1..=4 {
            assert_eq!(gaussian_gpi_gap(&ProbVector::parse("3/7").unwrap(), m, &b).unwrap(), int(0));
        }
        assert_eq!(
            gaussian_gpi_gap(&ProbVector::parse("1/2,1/4").unwrap(), 1, &b).unwrap(),
            ratio(1, 32)
        );
        for p in ["1/3,1/5", "1/10,7/10", "2/9,4/9"] {
            let pv = ProbVector::parse(p).unwrap();
            let (a, c) = (&pv.entries()[0], &pv.entries()[1]);
            let expected = int(2) * a * a * c * c;
            assert_eq!(gaussian_gpi_gap(&pv, 1, &b).unwrap(), expected);
        }
    }
}
