//! Enumeration budgets.
//!
//! Every enumeration in this crate is exponential in the dimension, so each
//! budgeted operation checks its nominal size up front and fails with
//! [`Error::BudgetExceeded`] instead of running unbounded.

use crate::error::{Error, Result};

/// Environment variable overriding [`Budget::max_terms`].
pub const TERM_BUDGET_ENV: &str = "GPI_TERM_BUDGET";
/// Environment variable overriding [`Budget::max_wick_degree`].
pub const WICK_DEGREE_ENV: &str = "GPI_WICK_MAX_DEGREE";

pub const DEFAULT_MAX_TERMS: u64 = 50_000_000;
pub const DEFAULT_MAX_WICK_DEGREE: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    /// Cap on the nominal number of evaluated terms per call.
    pub max_terms: u64,
    /// Cap on the total degree of a Gaussian mixed moment.
    pub max_wick_degree: u32,
}

impl Budget {
    pub const fn new(max_terms: u64, max_wick_degree: u32) -> Self {
        Budget {
            max_terms,
            max_wick_degree,
        }
    }

    /// Defaults, overridden by `GPI_TERM_BUDGET` / `GPI_WICK_MAX_DEGREE` when set.
    pub fn from_env() -> Self {
        let mut budget = Budget::new(DEFAULT_MAX_TERMS, DEFAULT_MAX_WICK_DEGREE);
        if let Some(v) = read_env(TERM_BUDGET_ENV) {
            budget.max_terms = v;
        }
        if let Some(v) = read_env(WICK_DEGREE_ENV) {
            budget.max_wick_degree = v.min(u32::MAX as u64) as u32;
        }
        budget
    }

    pub fn unlimited() -> Self {
        Budget::new(u64::MAX, u32::MAX)
    }

    /// Fails when `required` (None meaning "does not fit in u128") exceeds the term cap.
    pub fn check_terms(&self, what: &'static str, required: Option<u128>) -> Result<()> {
        match required {
            Some(n) if n <= self.max_terms as u128 => Ok(()),
            other => Err(Error::BudgetExceeded {
                what,
                required: other.map_or_else(|| "more than 2^128".to_string(), |n| n.to_string()),
                limit: self.max_terms,
            }),
        }
    }

    pub fn check_degree(&self, what: &'static str, degree: u64) -> Result<()> {
        if degree <= self.max_wick_degree as u64 {
            Ok(())
        } else {
            Err(Error::BudgetExceeded {
                what,
                required: degree.to_string(),
                limit: self.max_wick_degree as u64,
            })
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::from_env()
    }
}

fn read_env(name: &str) -> Option<u64> {
    std::env::var(name).ok()?.trim().parse().ok()
}

/// `base^exp` in u128, or None on overflow.
pub(crate) fn checked_pow(base: u64, exp: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base as u128)?;
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn term_cap_is_inclusive() {
        let b = Budget::new(10, 4);
        assert!(b.check_terms("t", Some(10)).is_ok());
        assert!(b.check_terms("t", Some(11)).unwrap_err().is_budget());
        assert!(b.check_terms("t", None).is_err());
        assert!(b.check_degree("w", 4).is_ok());
        assert!(b.check_degree("w", 6).is_err());
    }

    #[test]
    fn pow_overflow() {
        assert_eq!(checked_pow(5, 3), Some(125));
        assert_eq!(checked_pow(3, 0), Some(1));
        assert_eq!(checked_pow(u64::MAX, 3), None);
    }
}
