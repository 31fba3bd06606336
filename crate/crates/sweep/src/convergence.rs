//! Finite-N convergence of the scaled multinomial gap to the Gaussian limit.

use gpi_core::exact::to_f64;
use gpi_core::gaussian::gaussian_gpi_gap;
use gpi_core::multinomial::{scaled_gap_finite, MultinomialSpec, ProbVector};
use gpi_core::{Budget, Error, ExactRational, Result};
use num_traits::{Signed, Zero};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub trials: u64,
    pub scaled_gap: Option<ExactRational>,
    /// `|scaled_gap - gaussian_gap|`.
    pub error: Option<ExactRational>,
    /// `error(previous row) / error(this row)`.
    pub ratio: Option<f64>,
    /// Set when the row was skipped (budget exhausted).
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub p: ProbVector,
    pub m: u32,
    pub gaussian_gap: ExactRational,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Errors strictly decrease and every consecutive ratio lies in `[lo, hi]`.
    pub fn converges_at_rate(&self, lo: f64, hi: f64) -> bool {
        let errors: Option<Vec<&ExactRational>> = self.rows.iter().map(|r| r.error.as_ref()).collect();
        let Some(errors) = errors else {
            return false;
        };
        let decreasing = errors.windows(2).all(|w| w[1] < w[0]);
        let ratios_ok = self
            .rows
            .iter()
            .skip(1)
            .all(|r| r.ratio.is_some_and(|x| (lo..=hi).contains(&x)));
        decreasing && ratios_ok
    }
}

pub fn run_convergence(
    p: &ProbVector,
    m: u32,
    trials: &[u64],
    budget: &Budget,
) -> Result<ConvergenceTable> {
    if trials.is_empty() {
        return Err(Error::InvalidArgument("N list is empty".into()));
    }
    if trials.windows(2).any(|w| w[1] <= w[0]) || trials[0] == 0 {
        return Err(Error::InvalidArgument(
            "N list must be positive and strictly ascending".into(),
        ));
    }
    let limit = gaussian_gpi_gap(p, m, budget)?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(trials.len());
    for &n in trials {
        let spec = MultinomialSpec::new(n, p.clone())?;
        let row = match scaled_gap_finite(&spec, m, budget) {
            Ok(gap) => {
                let error = (&gap - &limit).abs();
                let ratio = rows
                    .last()
                    .and_then(|prev| prev.error.as_ref())
                    .filter(|_| !error.is_zero())
                    .map(|prev| to_f64(&(prev / &error)));
                ConvergenceRow {
                    trials: n,
                    scaled_gap: Some(gap),
                    error: Some(error),
                    ratio,
                    skipped: None,
                }
            }
            Err(e) if e.is_budget() => ConvergenceRow {
                trials: n,
                scaled_gap: None,
                error: None,
                ratio: None,
                skipped: Some(e.to_string()),
            },
            Err(e) => return Err(e),
        };
        rows.push(row);
    }
    Ok(ConvergenceTable {
        p: p.clone(),
        m,
        gaussian_gap: limit,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use gpi_core::exact::{int, ratio};

    fn budget() -> Budget {
        Budget::new(50_000_000, 24)
    }

    #[test]
    fn one_dimension_has_no_error() {
        let t = run_convergence(&ProbVector::parse("1/3").unwrap(), 2, &[1, 4, 9], &budget()).unwrap();
        for row in &t.rows {
            assert_eq!(row.error, Some(int(0)));
            assert_eq!(row.ratio, None);
        }
    }

    #[test]
    fn small_n_row() {
        let t = run_convergence(&ProbVector::parse("1/2,1/4").unwrap(), 1, &[2], &budget()).unwrap();
        assert_eq!(t.gaussian_gap, ratio(1, 32));
        assert_eq!(t.rows[0].scaled_gap, Some(ratio(1, 64)));
        assert_eq!(t.rows[0].error, Some(ratio(1, 64)));
    }

    #[test]
    fn ratios_near_two() {
        let t = run_convergence(&ProbVector::parse("1/2,1/4").unwrap(), 1, &[64, 128, 256], &budget())
            .unwrap();
        assert!(t.converges_at_rate(1.7, 2.3));
        assert_eq!(t.rows[1].ratio, Some(2.0));
    }

    #[test]
    fn skipped_rows_and_bad_lists() {
        let p = ProbVector::parse("1/2,1/4").unwrap();
        let t = run_convergence(&p, 1, &[8], &Budget::new(4, 24)).unwrap();
        assert!(t.rows[0].skipped.is_some());
        assert!(!t.converges_at_rate(1.7, 2.3));
        assert!(run_convergence(&p, 1, &[], &budget()).is_err());
        assert!(run_convergence(&p, 1, &[8, 4], &budget()).is_err());
        assert!(run_convergence(&p, 1, &[0, 4], &budget()).is_err());
    }
}
