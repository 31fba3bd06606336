//! Seeded simplex sampling snapped to a rational grid.
//!
//! Every sampled point has coordinates `c_i / grid` with integer `c_i >= 1`
//! and an implicit last cell of at least `1 / grid`, so all downstream
//! arithmetic stays exact.
//!
//! Streams: each `(m, d, sample)` cell draws from its own ChaCha8 stream,
//! `ChaCha8Rng::seed_from_u64(seed)` with stream id
//! `(m << 48) | (d << 32) | sample`. A cell's point therefore does not depend
//! on evaluation order or worker count.

use std::fmt;
use std::str::FromStr;

use gpi_core::exact::ratio;
use gpi_core::multinomial::ProbVector;
use gpi_core::{Error, Result};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

pub const DEFAULT_GRID: u64 = 10_000;
pub const MIN_GRID: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    /// `(p, p_{d+1}) ~ Dirichlet(1, 2, .., d + 1)`.
    DirichletRamp,
    /// Uniform on the simplex, i.e. `Dirichlet(1, .., 1)`, realised as a
    /// uniform composition of the grid.
    UniformSimplex,
    /// Points supplied by the caller.
    FixedList,
}

impl SamplerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SamplerKind::DirichletRamp => "dirichlet-ramp",
            SamplerKind::UniformSimplex => "uniform",
            SamplerKind::FixedList => "fixed",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet-ramp" | "dirichlet" => Ok(SamplerKind::DirichletRamp),
            "uniform" | "uniform-simplex" => Ok(SamplerKind::UniformSimplex),
            "fixed" | "fixed-list" => Ok(SamplerKind::FixedList),
            other => Err(Error::InvalidArgument(format!("unknown sampler {other:?}"))),
        }
    }
}

pub fn cell_rng(seed: u64, m: u32, d: usize, sample: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stream = ((m as u64) << 48) | ((d as u64 & 0xffff) << 32) | (sample as u64 & 0xffff_ffff);
    rng.set_stream(stream);
    rng
}

/// Draws one interior grid point of `S_d`.
pub fn sample_simplex<R: Rng + ?Sized>(
    d: usize,
    kind: SamplerKind,
    grid: u64,
    rng: &mut R,
) -> Result<ProbVector> {
    check_grid(d, grid)?;
    match kind {
        SamplerKind::UniformSimplex => {
            // d distinct cut points in 1..grid split grid into d + 1 positive parts.
            let mut cuts: Vec<u64> = index::sample(rng, (grid - 1) as usize, d)
                .into_iter()
                .map(|i| i as u64 + 1)
                .collect();
            cuts.sort_unstable();
            let mut prev = 0;
            let entries = cuts
                .into_iter()
                .map(|c| {
                    let part = c - prev;
                    prev = c;
                    ratio(part as i64, grid as i64)
                })
                .collect();
            ProbVector::new(entries)
        }
        SamplerKind::DirichletRamp => {
            let draws: Vec<f64> = (1..=d + 1)
                .map(|alpha| {
                    let gamma = Gamma::new(alpha as f64, 1.0).expect("positive shape");
                    gamma.sample(rng)
                })
                .collect();
            let total: f64 = draws.iter().sum();
            let weights: Vec<f64> = draws[..d].iter().map(|x| x / total).collect();
            snap_to_grid(&weights, grid)
        }
        SamplerKind::FixedList => Err(Error::InvalidArgument(
            "the fixed sampler takes its points from the configuration".into(),
        )),
    }
}

/// Rounds `d` simplex coordinates to multiples of `1 / grid`, then repairs the
/// point so every coordinate and the implicit last cell are at least `1 / grid`.
///
/// Repair lowers the largest count (first one on ties) until the last cell has room.
pub fn snap_to_grid(weights: &[f64], grid: u64) -> Result<ProbVector> {
    let d = weights.len();
    check_grid(d, grid)?;
    let mut counts: Vec<u64> = weights
        .iter()
        .map(|&w| {
            let scaled = (w * grid as f64).round();
            if scaled.is_finite() && scaled >= 1.0 {
                (scaled as u64).min(grid)
            } else {
                1
            }
        })
        .collect();
    while counts.iter().sum::<u64>() > grid - 1 {
        let (idx, _) = counts
            .iter()
            .enumerate()
            .rev()
            .max_by_key(|(_, &c)| c)
            .expect("d >= 1");
        counts[idx] -= 1;
    }
    ProbVector::new(counts.iter().map(|&c| ratio(c as i64, grid as i64)).collect())
}

/// Built-in point for the fixed sampler: the `Dirichlet(1, .., d + 1)` mean,
/// `p_i = 2i / ((d + 1)(d + 2))`.
pub fn ramp_mean(d: usize) -> ProbVector {
    let denom = ((d + 1) * (d + 2)) as i64;
    ProbVector::new((1..=d).map(|i| ratio(2 * i as i64, denom)).collect())
        .expect("ramp mean lies inside the simplex")
}

fn check_grid(d: usize, grid: u64) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension d must be at least 1".into()));
    }
    if grid < MIN_GRID || grid < d as u64 + 1 {
        return Err(Error::InvalidArgument(format!(
            "grid denominator {grid} is too small for d = {d} (need at least max({MIN_GRID}, d + 1))"
        )));
    }
    if grid > i64::MAX as u64 {
        return Err(Error::InvalidArgument("grid denominator too large".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use gpi_core::exact::ratio;
    use num_traits::Signed;

    fn assert_interior(p: &ProbVector, grid: u64) {
        let min = ratio(1, grid as i64);
        for x in p.entries() {
            assert!(x.is_positive() && *x >= min);
        }
        assert!(p.remainder() >= min);
    }

    #[test]
    fn snaps_exact_grid_points() {
        let p = snap_to_grid(&[0.5, 0.25], 100).unwrap();
        assert_eq!(p.entries(), &[ratio(1, 2), ratio(1, 4)]);
    }

    #[test]
    fn repairs_boundary_points() {
        let p = snap_to_grid(&[0.0, 1.0], 10).unwrap();
        assert_interior(&p, 10);
        assert_eq!(p.entries(), &[ratio(1, 10), ratio(8, 10)]);
        let p = snap_to_grid(&[0.5, 0.5, 0.0], 10).unwrap();
        assert_interior(&p, 10);
        let p = snap_to_grid(&[f64::NAN], 10).unwrap();
        assert_eq!(p.entries(), &[ratio(1, 10)]);
    }

    #[test]
    fn rejects_small_grids() {
        assert!(snap_to_grid(&[0.5], 9).is_err());
        let mut rng = cell_rng(1, 1, 12, 0);
        assert!(sample_simplex(12, SamplerKind::UniformSimplex, 12, &mut rng).is_err());
        assert!(sample_simplex(2, SamplerKind::FixedList, 100, &mut rng).is_err());
    }

    #[test]
    fn samples_are_interior_and_reproducible() {
        for kind in [SamplerKind::UniformSimplex, SamplerKind::DirichletRamp] {
            for d in 1..=5 {
                for s in 0..20 {
                    let a = sample_simplex(d, kind, 12, &mut cell_rng(7, 2, d, s)).unwrap();
                    let b = sample_simplex(d, kind, 12, &mut cell_rng(7, 2, d, s)).unwrap();
                    assert_eq!(a, b);
                    assert_interior(&a, 12);
                }
            }
        }
    }

    #[test]
    fn pinned_uniform_draw() {
        let p = sample_simplex(2, SamplerKind::UniformSimplex, 12, &mut cell_rng(42, 1, 2, 0)).unwrap();
        assert_eq!(p.to_string(), PINNED_UNIFORM);
    }

    const PINNED_UNIFORM: &str = "1/6,2/3";

    #[test]
    fn streams_differ_between_cells() {
        let draws: std::collections::HashSet<String> = (0..16)
            .map(|s| {
                sample_simplex(3, SamplerKind::UniformSimplex, DEFAULT_GRID, &mut cell_rng(9, 1, 3, s))
                    .unwrap()
                    .to_string()
            })
            .collect();
        assert!(draws.len() > 12);
    }

    #[test]
    fn ramp_mean_points() {
        assert_eq!(ramp_mean(1).entries(), &[ratio(1, 3)]);
        assert_eq!(ramp_mean(2).entries(), &[ratio(1, 6), ratio(1, 3)]);
    }
}
