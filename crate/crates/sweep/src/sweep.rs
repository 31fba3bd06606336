//! Parameter sweeps over `(m, d)` grids.
//!
//! Each `(m, d, sample)` point is an independent task. Tasks run on a bounded
//! rayon pool and the results are collected in task order, so the report is
//! identical for any worker count.

use std::time::Instant;

use gpi_core::condition::{theorem_gap, ConstraintVariant};
use gpi_core::exact::Sign;
use gpi_core::gaussian::gaussian_gpi_gap;
use gpi_core::multinomial::{scaled_gap_finite, MultinomialSpec, ProbVector};
use gpi_core::{Budget, Error, ExactRational, Result};
use rayon::prelude::*;

use crate::sampler::{cell_rng, ramp_mean, sample_simplex, SamplerKind, DEFAULT_GRID, MIN_GRID};

pub const DEFAULT_SAMPLES: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub m_max: u32,
    pub d_max: usize,
    pub samples_per_cell: usize,
    pub sampler: SamplerKind,
    pub grid: u64,
    pub seed: u64,
    pub variants: Vec<ConstraintVariant>,
    /// Evaluate the Gaussian limit gap alongside the condition.
    pub oracle: bool,
    /// Trial counts for scaled finite-N gaps (empty to skip).
    pub finite_n: Vec<u64>,
    /// Points for [`SamplerKind::FixedList`]; each is used in the cell matching its dimension.
    pub fixed_points: Vec<ProbVector>,
    /// Record wall time per evaluation. Makes output run-dependent.
    pub timings: bool,
    pub workers: usize,
    pub budget: Budget,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            m_max: 4,
            d_max: 4,
            samples_per_cell: DEFAULT_SAMPLES,
            sampler: SamplerKind::DirichletRamp,
            grid: DEFAULT_GRID,
            seed: 0,
            variants: ConstraintVariant::ALL.to_vec(),
            oracle: true,
            finite_n: Vec::new(),
            fixed_points: Vec::new(),
            timings: false,
            workers: 1,
            budget: Budget::from_env(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.m_max == 0 || self.d_max == 0 {
            return bad("m_max and d_max must be at least 1".into());
        }
        if self.grid < MIN_GRID || self.grid < self.d_max as u64 + 1 {
            return bad(format!(
                "grid denominator must be at least max({MIN_GRID}, d_max + 1), got {}",
                self.grid
            ));
        }
        if self.sampler != SamplerKind::FixedList && self.samples_per_cell == 0 {
            return bad("samples per cell must be at least 1".into());
        }
        if self.variants.is_empty() {
            return bad("at least one constraint variant is required".into());
        }
        if self.finite_n.contains(&0) {
            return bad("finite-N trial counts must be positive".into());
        }
        Ok(())
    }

    fn points(&self, m: u32, d: usize) -> Result<Vec<ProbVector>> {
        match self.sampler {
            SamplerKind::FixedList => {
                if self.fixed_points.is_empty() {
                    return Ok(vec![ramp_mean(d)]);
                }
                Ok(self.fixed_points.iter().filter(|p| p.dim() == d).cloned().collect())
            }
            kind => (0..self.samples_per_cell)
                .map(|s| sample_simplex(d, kind, self.grid, &mut cell_rng(self.seed, m, d, s)))
                .collect(),
        }
    }
}

/// Result of one budgeted evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Value(ExactRational),
    BudgetExceeded(String),
}

impl Outcome {
    fn from_result(r: Result<ExactRational>) -> Result<Outcome> {
        match r {
            Ok(v) => Ok(Outcome::Value(v)),
            Err(e) if e.is_budget() => Ok(Outcome::BudgetExceeded(e.to_string())),
            Err(e) => Err(e),
        }
    }

    pub fn value(&self) -> Option<&ExactRational> {
        match self {
            Outcome::Value(v) => Some(v),
            Outcome::BudgetExceeded(_) => None,
        }
    }

    pub fn sign(&self) -> Option<Sign> {
        self.value().map(Sign::of)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteGap {
    pub trials: u64,
    pub gap: Outcome,
}

/// One `(m, d, sample, variant)` evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct GapRecord {
    pub m: u32,
    pub d: usize,
    pub sample: usize,
    pub p: ProbVector,
    pub variant: ConstraintVariant,
    pub theorem_gap: Outcome,
    pub gaussian_gap: Option<Outcome>,
    pub finite_n: Vec<FiniteGap>,
    pub elapsed_ms: Option<f64>,
}

impl GapRecord {
    pub fn theorem_sign(&self) -> Option<Sign> {
        self.theorem_gap.sign()
    }

    pub fn gaussian_sign(&self) -> Option<Sign> {
        self.gaussian_gap.as_ref().and_then(Outcome::sign)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FindingKind {
    TheoremNegativeGaussianNonnegative,
    TheoremNonnegativeGaussianNegative,
}

impl FindingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingKind::TheoremNegativeGaussianNonnegative => "theorem-negative-gaussian-nonnegative",
            FindingKind::TheoremNonnegativeGaussianNegative => "theorem-nonnegative-gaussian-negative",
        }
    }
}

/// Sign disagreement between the combinatorial condition and the Gaussian limit.
#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub m: u32,
    pub d: usize,
    pub sample: usize,
    pub variant: ConstraintVariant,
    pub kind: FindingKind,
    pub p: ProbVector,
    pub theorem_gap: ExactRational,
    pub gaussian_gap: ExactRational,
}

/// A negative Gaussian gap, i.e. a numerical counterexample to the product inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjectureViolation {
    pub m: u32,
    pub d: usize,
    pub sample: usize,
    pub p: ProbVector,
    pub gaussian_gap: ExactRational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapStats {
    /// `"gaussian"` or `"theorem:<variant>"`.
    pub kind: String,
    pub count: usize,
    pub min: Option<ExactRational>,
    pub median: Option<ExactRational>,
    pub negatives: usize,
    pub budget_exceeded: usize,
}

impl GapStats {
    fn from_outcomes<'a>(kind: String, outcomes: impl Iterator<Item = &'a Outcome>) -> Self {
        let mut values = Vec::new();
        let mut exceeded = 0;
        for o in outcomes {
            match o {
                Outcome::Value(v) => values.push(v.clone()),
                Outcome::BudgetExceeded(_) => exceeded += 1,
            }
        }
        values.sort();
        let negatives = values.iter().filter(|v| Sign::of(v).is_negative()).count();
        let median = match values.len() {
            0 => None,
            n if n % 2 == 1 => Some(values[n / 2].clone()),
            n => Some((&values[n / 2 - 1] + &values[n / 2]) / ExactRational::from_integer(2.into())),
        };
        GapStats {
            kind,
            count: values.len(),
            min: values.first().cloned(),
            median,
            negatives,
            budget_exceeded: exceeded,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub m: u32,
    pub d: usize,
    pub stats: Vec<GapStats>,
}

impl CellSummary {
    pub fn stat(&self, kind: &str) -> Option<&GapStats> {
        self.stats.iter().find(|s| s.kind == kind)
    }
}

/// `m_max x d_max` matrix of cell summaries; row index `m - 1`, column index `d - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryMatrix {
    pub rows: Vec<Vec<CellSummary>>,
}

impl SummaryMatrix {
    pub fn cell(&self, m: u32, d: usize) -> &CellSummary {
        &self.rows[m as usize - 1][d - 1]
    }

    pub fn kinds(&self) -> Vec<String> {
        self.rows
            .first()
            .and_then(|r| r.first())
            .map(|c| c.stats.iter().map(|s| s.kind.clone()).collect())
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub records: Vec<GapRecord>,
    pub summary: SummaryMatrix,
    pub findings: Vec<Finding>,
    pub conjecture_watch: Vec<ConjectureViolation>,
}

struct Task {
    m: u32,
    d: usize,
    sample: usize,
    p: ProbVector,
}

fn evaluate(task: &Task, config: &SweepConfig) -> Result<Vec<GapRecord>> {
    let budget = &config.budget;
    let started = Instant::now();
    let gaussian = if config.oracle {
        Some(Outcome::from_result(gaussian_gpi_gap(&task.p, task.m, budget))?)
    } else {
        None
    };
    let finite_n = config
        .finite_n
        .iter()
        .map(|&n| {
            let spec = MultinomialSpec::new(n, task.p.clone())?;
            Ok(FiniteGap {
                trials: n,
                gap: Outcome::from_result(scaled_gap_finite(&spec, task.m, budget))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let shared_ms = started.elapsed().as_secs_f64() * 1e3;

    config
        .variants
        .iter()
        .map(|&variant| {
            let t = Instant::now();
            let gap = Outcome::from_result(theorem_gap(&task.p, task.m, variant, budget))?;
            let ms = shared_ms + t.elapsed().as_secs_f64() * 1e3;
            Ok(GapRecord {
                m: task.m,
                d: task.d,
                sample: task.sample,
                p: task.p.clone(),
                variant,
                theorem_gap: gap,
                gaussian_gap: gaussian.clone(),
                finite_n: finite_n.clone(),
                elapsed_ms: config.timings.then_some(ms),
            })
        })
        .collect()
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepReport> {
    config.validate()?;
    let mut tasks = Vec::new();
    for m in 1..=config.m_max {
        for d in 1..=config.d_max {
            for (sample, p) in config.points(m, d)?.into_iter().enumerate() {
                tasks.push(Task { m, d, sample, p });
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let per_task: Vec<Vec<GapRecord>> =
        pool.install(|| tasks.par_iter().map(|t| evaluate(t, config)).collect::<Result<_>>())?;
    let records: Vec<GapRecord> = per_task.into_iter().flatten().collect();

    let summary = summarize(config, &records);
    let findings = collect_findings(&records);
    let conjecture_watch = collect_violations(&records);
    Ok(SweepReport {
        config: config.clone(),
        records,
        summary,
        findings,
        conjecture_watch,
    })
}

fn summarize(config: &SweepConfig, records: &[GapRecord]) -> SummaryMatrix {
    let rows = (1..=config.m_max)
        .map(|m| {
            (1..=config.d_max)
                .map(|d| {
                    let cell: Vec<&GapRecord> =
                        records.iter().filter(|r| r.m == m && r.d == d).collect();
                    let mut stats = Vec::new();
                    if config.oracle {
                        // one Gaussian value per sample, repeated across variant records
                        let first_variant = config.variants[0];
                        stats.push(GapStats::from_outcomes(
                            "gaussian".into(),
                            cell.iter()
                                .filter(|r| r.variant == first_variant)
                                .filter_map(|r| r.gaussian_gap.as_ref()),
                        ));
                    }
                    for &v in &config.variants {
                        stats.push(GapStats::from_outcomes(
                            format!("theorem:{v}"),
                            cell.iter().filter(|r| r.variant == v).map(|r| &r.theorem_gap),
                        ));
                    }
                    CellSummary { m, d, stats }
                })
                .collect()
        })
        .collect();
    SummaryMatrix { rows }
}

fn collect_findings(records: &[GapRecord]) -> Vec<Finding> {
    records
        .iter()
        .filter_map(|r| {
            let theorem = r.theorem_gap.value()?;
            let gaussian = r.gaussian_gap.as_ref()?.value()?;
            let kind = match (Sign::of(theorem).is_negative(), Sign::of(gaussian).is_negative()) {
                (true, false) => FindingKind::TheoremNegativeGaussianNonnegative,
                (false, true) => FindingKind::TheoremNonnegativeGaussianNegative,
                _ => return None,
            };
            Some(Finding {
                m: r.m,
                d: r.d,
                sample: r.sample,
                variant: r.variant,
                kind,
                p: r.p.clone(),
                theorem_gap: theorem.clone(),
                gaussian_gap: gaussian.clone(),
            })
        })
        .collect()
}

fn collect_violations(records: &[GapRecord]) -> Vec<ConjectureViolation> {
    let mut out: Vec<ConjectureViolation> = Vec::new();
    for r in records {
        let Some(g) = r.gaussian_gap.as_ref().and_then(Outcome::value) else {
            continue;
        };
        let seen = out
            .last()
            .is_some_and(|v| v.m == r.m && v.d == r.d && v.sample == r.sample);
        if Sign::of(g).is_negative() && !seen {
            out.push(ConjectureViolation {
                m: r.m,
                d: r.d,
                sample: r.sample,
                p: r.p.clone(),
                gaussian_gap: g.clone(),
            });
        }
    }
    out
}
