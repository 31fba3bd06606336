//! The invariant battery behind `gpi verify`.
//!
//! Hard invariants decide the exit status. The sign survey and the
//! conjecture watch only produce findings.

use std::fmt::Write as _;

use gpi_core::combinatorics::{
    binomial, double_factorial, falling_factorial, falling_product_expand,
    monomial_to_falling_with, perfect_pairings, StirlingTable, DEFAULT_TABLE_CAP,
};
use gpi_core::condition::{
    enumerate_constrained_terms, equal_p_sum, theorem_gap, unpruned_constrained_terms,
    ConstraintVariant,
};
use gpi_core::exact::{format_float, format_rational, int, parse_rational, pow, ratio, to_f64, Sign};
use gpi_core::gaussian::{
    covariance_from_p, gaussian_gpi_gap, univariate_even_moment, wick_moment, wick_moment_naive,
    CovMatrix, MultiplicityVector,
};
use gpi_core::multinomial::{
    brute_force_expectation, central_mixed_moment, central_moment_univariate, factorial_moment,
    MultiIndex, MultinomialSpec, ProbVector,
};
use gpi_core::{Budget, ExactRational};
use num_bigint::BigInt;
use num_traits::Zero;

use crate::convergence::run_convergence;
use crate::output::write_csv;
use crate::sampler::SamplerKind;
use crate::sweep::{run_sweep, SweepConfig};

const BATTERY: [&str; 5] = [
    "1/2,1/4,1/8",
    "1/3,1/3,1/5",
    "1/10,1/5,3/10",
    "2/7,1/7,3/7",
    "1/6,1/6,1/6",
];

pub struct VerifyContext {
    pub stirling: StirlingTable,
    pub budget: Budget,
    /// Samples per `(m, d)` cell in the sign survey.
    pub survey_samples: usize,
    pub seed: u64,
}

impl Default for VerifyContext {
    fn default() -> Self {
        VerifyContext {
            stirling: StirlingTable::new(DEFAULT_TABLE_CAP),
            budget: Budget::from_env(),
            survey_samples: 4,
            seed: 2022,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
    pub findings: Vec<String>,
    pub conjecture_watch: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn invariants_run(&self) -> usize {
        self.checks.len()
    }

    pub fn findings_logged(&self) -> usize {
        self.findings.len() + self.conjecture_watch.len()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "[{tag}] {}{}", c.name, if c.detail.is_empty() { String::new() } else { format!(": {}", c.detail) });
        }
        for f in &self.findings {
            let _ = writeln!(s, "[FINDING] {f}");
        }
        for w in &self.conjecture_watch {
            let _ = writeln!(s, "[CONJECTURE WATCH] {w}");
        }
        let failed = self.failed().count();
        let _ = writeln!(
            s,
            "invariants run: {}, failed: {}, findings logged: {}",
            self.invariants_run(),
            failed,
            self.findings_logged()
        );
        s
    }
}

type Check = fn(&VerifyContext) -> Result<(), String>;

const CHECKS: &[(&str, Check)] = &[
    ("stirling-recurrence", stirling_recurrence),
    ("monomial-falling-identity", monomial_identity),
    ("falling-product-identity", falling_product_identity),
    ("binomial-symmetry", binomial_symmetry),
    ("double-factorial-pairings", double_factorial_pairings),
    ("factorial-moment-oracle", factorial_moment_oracle),
    ("central-moment-oracle", central_moment_oracle),
    ("mean-centering", mean_centering),
    ("univariate-consistency", univariate_consistency),
    ("clt-convergence", clt_convergence),
    ("wick-closed-form", wick_closed_form),
    ("wick-pairing-count", wick_pairing_count),
    ("wick-independence", wick_independence),
    ("wick-naive-agreement", wick_naive_agreement),
    ("gaussian-gap-closed-form", gaussian_gap_closed_form),
    ("gaussian-permutation-symmetry", gaussian_permutation_symmetry),
    ("theorem-d1-degeneracy", theorem_d1_degeneracy),
    ("equal-p-identity", equal_p_identity),
    ("pruned-vs-unpruned", pruned_vs_unpruned),
    ("variant-containment", variant_containment),
    ("theorem-permutation-symmetry", theorem_permutation_symmetry),
    ("sweep-determinism", sweep_determinism),
    ("exact-sign-discipline", exact_sign_discipline),
];

pub fn verify_all() -> VerifyReport {
    verify_with(&VerifyContext::default())
}

pub fn verify_with(ctx: &VerifyContext) -> VerifyReport {
    let checks = CHECKS
        .iter()
        .map(|(name, check)| {
            let result = check(ctx);
            CheckOutcome {
                name,
                passed: result.is_ok(),
                detail: result.err().unwrap_or_default(),
            }
        })
        .collect();
    let mut report = VerifyReport {
        checks,
        ..VerifyReport::default()
    };
    survey(ctx, &mut report);
    report
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn battery(d: usize) -> Vec<ProbVector> {
    BATTERY
        .iter()
        .map(|s| {
            let all = ProbVector::parse(s).expect("battery point");
            ProbVector::new(all.entries()[..d].to_vec()).expect("prefix of a battery point")
        })
        .collect()
}

fn err(e: gpi_core::Error) -> String {
    e.to_string()
}

fn stirling_recurrence(ctx: &VerifyContext) -> Result<(), String> {
    let s = &ctx.stirling;
    ensure(s.get(0, 0) == BigInt::from(1), || "S2(0,0) != 1".into())?;
    for k in 1..=12u32 {
        for j in 1..=k as i64 {
            let expected = s.get(k - 1, j) * j + s.get(k - 1, j - 1);
            ensure(s.get(k, j) == expected, || {
                format!("S2({k},{j}) = {} but recurrence gives {expected}", s.get(k, j))
            })?;
        }
    }
    Ok(())
}

fn monomial_identity(ctx: &VerifyContext) -> Result<(), String> {
    for k in 0..=10u32 {
        let e = monomial_to_falling_with(&ctx.stirling, k);
        for x in 0..=10i64 {
            ensure(e.evaluate(&int(x)) == pow(&int(x), k), || {
                format!("falling-factorial expansion of x^{k} fails at x = {x}")
            })?;
        }
    }
    Ok(())
}

fn falling_product_identity(_: &VerifyContext) -> Result<(), String> {
    for j in 0..=6 {
        for jp in 0..=6 {
            let e = falling_product_expand(j, jp);
            for x in -5..=10i64 {
                let x = int(x);
                ensure(
                    e.evaluate(&x) == falling_factorial(&x, j) * falling_factorial(&x, jp),
                    || format!("x^({j}) x^({jp}) expansion fails at x = {x}"),
                )?;
            }
        }
    }
    Ok(())
}

fn binomial_symmetry(_: &VerifyContext) -> Result<(), String> {
    for n in 0..=20u32 {
        for k in 0..=n as i64 {
            ensure(binomial(n, k) == binomial(n, n as i64 - k), || format!("C({n},{k})"))?;
        }
    }
    Ok(())
}

fn double_factorial_pairings(_: &VerifyContext) -> Result<(), String> {
    for r in 0..=5usize {
        let count = perfect_pairings(2 * r).count();
        let df = double_factorial(2 * r as i64 - 1).map_err(err)?;
        ensure(df == BigInt::from(count), || {
            format!("(2*{r}-1)!! = {df} but {count} pairings enumerated")
        })?;
    }
    Ok(())
}

fn small_orders(d: usize, max_total: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|v: Vec<u32>| {
                let used: u32 = v.iter().sum();
                (0..=max_total - used).map(move |x| {
                    let mut w = v.clone();
                    w.push(x);
                    w
                })
            })
            .collect();
    }
    out
}

fn factorial_moment_oracle(ctx: &VerifyContext) -> Result<(), String> {
    for d in 1..=3 {
        for p in battery(d) {
            for n in 1..=4 {
                let spec = MultinomialSpec::new(n, p.clone()).map_err(err)?;
                for j in small_orders(d, 4) {
                    let oracle = brute_force_expectation(
                        &spec,
                        |k| {
                            k.iter()
                                .zip(&j)
                                .map(|(&ki, &ji)| falling_factorial(&int(ki as i64), ji))
                                .product()
                        },
                        &ctx.budget,
                    )
                    .map_err(err)?;
                    let value = factorial_moment(&spec, &MultiIndex::new(j.clone())).map_err(err)?;
                    ensure(value == oracle, || format!("N={n}, p={p}, j={j:?}"))?;
                }
            }
        }
    }
    Ok(())
}

fn centered_power(spec: &MultinomialSpec, k: &MultiIndex, m: u32) -> ExactRational {
    k.iter()
        .zip(spec.probs().entries())
        .map(|(&ki, p)| pow(&(int(ki as i64) - int(spec.trials() as i64) * p), 2 * m))
        .product()
}

fn central_moment_oracle(ctx: &VerifyContext) -> Result<(), String> {
    for d in 1..=3 {
        for p in battery(d) {
            for n in 1..=4 {
                let spec = MultinomialSpec::new(n, p.clone()).map_err(err)?;
                for m in 1..=2 {
                    let oracle =
                        brute_force_expectation(&spec, |k| centered_power(&spec, k, m), &ctx.budget)
                            .map_err(err)?;
                    let value = central_mixed_moment(&spec, m, &ctx.budget).map_err(err)?;
                    ensure(value == oracle, || format!("N={n}, p={p}, m={m}"))?;
                }
            }
        }
    }
    Ok(())
}

fn mean_centering(ctx: &VerifyContext) -> Result<(), String> {
    for p in battery(3) {
        let spec = MultinomialSpec::new(4, p.clone()).map_err(err)?;
        for i in 0..3 {
            let mean = brute_force_expectation(
                &spec,
                |k| int(k[i] as i64) - int(4) * &spec.probs().entries()[i],
                &ctx.budget,
            )
            .map_err(err)?;
            ensure(mean.is_zero(), || format!("E[xi_{i} - N p_{i}] = {mean} for p={p}"))?;
        }
    }
    Ok(())
}

fn univariate_consistency(ctx: &VerifyContext) -> Result<(), String> {
    for p in battery(1) {
        for n in [1, 3, 10, 64] {
            for m in 1..=3 {
                let spec = MultinomialSpec::new(n, p.clone()).map_err(err)?;
                let mixed = central_mixed_moment(&spec, m, &ctx.budget).map_err(err)?;
                ensure(mixed == central_moment_univariate(n, &p.entries()[0], m), || {
                    format!("N={n}, p={p}, m={m}")
                })?;
            }
        }
    }
    Ok(())
}

fn clt_convergence(ctx: &VerifyContext) -> Result<(), String> {
    for (p, m) in [("1/2,1/4", 1), ("1/4,1/4", 2)] {
        let p = ProbVector::parse(p).map_err(err)?;
        let t = run_convergence(&p, m, &[32, 64, 128, 256], &ctx.budget).map_err(err)?;
        ensure(t.converges_at_rate(1.7, 2.3), || {
            let ratios: Vec<_> = t.rows.iter().map(|r| r.ratio).collect();
            format!("p={p}, m={m}: ratios {ratios:?}")
        })?;
    }
    Ok(())
}

fn wick_closed_form(ctx: &VerifyContext) -> Result<(), String> {
    for p in ["1/2", "1/7", "5/9"] {
        let cov = covariance_from_p(&ProbVector::parse(p).map_err(err)?);
        for m in 1..=6 {
            let w = wick_moment(&cov, &MultiplicityVector(vec![2 * m]), &ctx.budget).map_err(err)?;
            ensure(w == univariate_even_moment(cov.get(0, 0), m), || format!("p={p}, m={m}"))?;
        }
    }
    Ok(())
}

fn wick_pairing_count(ctx: &VerifyContext) -> Result<(), String> {
    for d in 1..=3usize {
        let cov = CovMatrix::from_rows(vec![vec![int(1); d]; d]).map_err(err)?;
        for mult in small_orders(d, 12) {
            let total: u32 = mult.iter().sum();
            if total % 2 == 1 {
                continue;
            }
            let expected = ExactRational::from_integer(double_factorial(total as i64 - 1).map_err(err)?);
            let w = wick_moment(&cov, &MultiplicityVector(mult.clone()), &ctx.budget).map_err(err)?;
            ensure(w == expected, || format!("multiplicities {mult:?}: {w} != {expected}"))?;
        }
    }
    Ok(())
}

fn wick_independence(ctx: &VerifyContext) -> Result<(), String> {
    let vars = vec![ratio(1, 3), ratio(2, 5), ratio(7, 4)];
    let cov = CovMatrix::diagonal(vars.clone()).map_err(err)?;
    for mult in small_orders(3, 8) {
        if mult.iter().any(|a| a % 2 == 1) {
            continue;
        }
        let expected: ExactRational = vars
            .iter()
            .zip(&mult)
            .map(|(v, &a)| univariate_even_moment(v, a / 2))
            .product();
        let w = wick_moment(&cov, &MultiplicityVector(mult.clone()), &ctx.budget).map_err(err)?;
        ensure(w == expected, || format!("multiplicities {mult:?}"))?;
    }
    Ok(())
}

fn wick_naive_agreement(ctx: &VerifyContext) -> Result<(), String> {
    for p in battery(3) {
        let cov = covariance_from_p(&p);
        for mult in small_orders(3, 10) {
            let mult = MultiplicityVector(mult);
            let fast = wick_moment(&cov, &mult, &ctx.budget).map_err(err)?;
            let slow = wick_moment_naive(&cov, &mult).map_err(err)?;
            ensure(fast == slow, || format!("p={p}, multiplicities {:?}", mult.0))?;
        }
    }
    Ok(())
}

fn gaussian_gap_closed_form(ctx: &VerifyContext) -> Result<(), String> {
    let g = gaussian_gpi_gap(&ProbVector::parse("1/2,1/4").map_err(err)?, 1, &ctx.budget).map_err(err)?;
    ensure(g == ratio(1, 32), || format!("p=(1/2,1/4), m=1 gave {g}"))?;
    for p in battery(2) {
        let (a, b) = (&p.entries()[0], &p.entries()[1]);
        let g = gaussian_gpi_gap(&p, 1, &ctx.budget).map_err(err)?;
        ensure(g == int(2) * a * a * b * b, || format!("p={p}"))?;
    }
    Ok(())
}

const PERMUTATIONS_3: [[usize; 3]; 5] = [[0, 2, 1], [1, 0, 2], [2, 1, 0], [1, 2, 0], [2, 0, 1]];

fn gaussian_permutation_symmetry(ctx: &VerifyContext) -> Result<(), String> {
    let p = ProbVector::parse("1/2,1/5,1/10").map_err(err)?;
    for m in 1..=3 {
        let base = gaussian_gpi_gap(&p, m, &ctx.budget).map_err(err)?;
        for order in PERMUTATIONS_3 {
            let q = p.permuted(&order).map_err(err)?;
            ensure(gaussian_gpi_gap(&q, m, &ctx.budget).map_err(err)? == base, || {
                format!("m={m}, order {order:?}")
            })?;
        }
    }
    Ok(())
}

fn theorem_d1_degeneracy(ctx: &VerifyContext) -> Result<(), String> {
    for p in ["1/2", "1/9", "7/8"] {
        let p = ProbVector::parse(p).map_err(err)?;
        for m in 1..=5 {
            let g = theorem_gap(&p, m, ConstraintVariant::Equality, &ctx.budget).map_err(err)?;
            ensure(g.is_zero(), || format!("p={p}, m={m}: {g}"))?;
        }
    }
    Ok(())
}

fn equal_p_identity(ctx: &VerifyContext) -> Result<(), String> {
    for d in 1..=3usize {
        for m in 1..=3u32 {
            let coeff = ExactRational::from_integer(equal_p_sum(d, m, &ctx.budget).map_err(err)?);
            for q in [ratio(1, 8), ratio(1, d as i64 + 1), ratio(1, 4)] {
                let Ok(p) = ProbVector::uniform(d, q.clone()) else {
                    continue;
                };
                let g = theorem_gap(&p, m, ConstraintVariant::Equality, &ctx.budget).map_err(err)?;
                ensure(g == &coeff * pow(&q, m * d as u32), || format!("d={d}, m={m}, q={q}"))?;
            }
        }
    }
    Ok(())
}

fn pruned_vs_unpruned(ctx: &VerifyContext) -> Result<(), String> {
    for d in 1..=2 {
        for m in 1..=3 {
            for v in ConstraintVariant::ALL {
                let pruned: Vec<_> =
                    enumerate_constrained_terms(d, m, v, &ctx.budget).map_err(err)?.collect();
                let full = unpruned_constrained_terms(d, m, v, &ctx.budget).map_err(err)?;
                ensure(pruned == full, || {
                    format!("d={d}, m={m}, {v}: {} pruned vs {} unpruned", pruned.len(), full.len())
                })?;
            }
        }
    }
    Ok(())
}

fn variant_containment(ctx: &VerifyContext) -> Result<(), String> {
    for d in 1..=3 {
        for m in 1..=3 {
            let slack: std::collections::HashSet<_> =
                enumerate_constrained_terms(d, m, ConstraintVariant::Slack, &ctx.budget)
                    .map_err(err)?
                    .map(|t| (t.k, t.j))
                    .collect();
            let missing = enumerate_constrained_terms(d, m, ConstraintVariant::Equality, &ctx.budget)
                .map_err(err)?
                .find(|t| !slack.contains(&(t.k.clone(), t.j.clone())));
            ensure(missing.is_none(), || format!("d={d}, m={m}: {missing:?}"))?;
        }
    }
    Ok(())
}

fn theorem_permutation_symmetry(ctx: &VerifyContext) -> Result<(), String> {
    let p = ProbVector::parse("1/8,1/4,1/3").map_err(err)?;
    for m in 1..=2 {
        for v in ConstraintVariant::ALL {
            let base = theorem_gap(&p, m, v, &ctx.budget).map_err(err)?;
            for order in PERMUTATIONS_3 {
                let q = p.permuted(&order).map_err(err)?;
                ensure(theorem_gap(&q, m, v, &ctx.budget).map_err(err)? == base, || {
                    format!("m={m}, {v}, order {order:?}")
                })?;
            }
        }
    }
    Ok(())
}

fn determinism_config(ctx: &VerifyContext, workers: usize) -> SweepConfig {
    SweepConfig {
        m_max: 2,
        d_max: 3,
        samples_per_cell: 3,
        sampler: SamplerKind::DirichletRamp,
        seed: ctx.seed,
        workers,
        budget: ctx.budget,
        ..SweepConfig::default()
    }
}

fn csv_bytes(config: &SweepConfig) -> Result<Vec<u8>, String> {
    let report = run_sweep(config).map_err(err)?;
    let mut buf = Vec::new();
    write_csv(&report, &mut buf).map_err(|e| e.to_string())?;
    Ok(buf)
}

fn sweep_determinism(ctx: &VerifyContext) -> Result<(), String> {
    let a = csv_bytes(&determinism_config(ctx, 1))?;
    let b = csv_bytes(&determinism_config(ctx, 1))?;
    let c = csv_bytes(&determinism_config(ctx, 3))?;
    ensure(a == b, || "repeated runs differ".into())?;
    ensure(a == c, || "output depends on worker count".into())
}

fn exact_sign_discipline(ctx: &VerifyContext) -> Result<(), String> {
    let report = run_sweep(&determinism_config(ctx, 1)).map_err(err)?;
    for r in &report.records {
        for outcome in [Some(&r.theorem_gap), r.gaussian_gap.as_ref()].into_iter().flatten() {
            let Some(v) = outcome.value() else { continue };
            let sign = Sign::of(v);
            // render, parse back, and make sure neither route disagrees with the exact sign
            let reparsed = parse_rational(&format_rational(v)).map_err(err)?;
            ensure(Sign::of(&reparsed) == sign, || format!("{v} changed sign on round trip"))?;
            let f: f64 = format_float(to_f64(v)).parse().map_err(|e| format!("{e}"))?;
            let float_sign = if f > 0.0 {
                Sign::Positive
            } else if f < 0.0 {
                Sign::Negative
            } else {
                Sign::Zero
            };
            ensure(float_sign == sign || (f == 0.0 && sign != Sign::Zero), || {
                format!("float rendering of {v} has the wrong sign")
            })?;
        }
    }
    Ok(())
}

fn survey(ctx: &VerifyContext, report: &mut VerifyReport) {
    let config = SweepConfig {
        m_max: 3,
        d_max: 3,
        samples_per_cell: ctx.survey_samples,
        sampler: SamplerKind::UniformSimplex,
        seed: ctx.seed,
        budget: ctx.budget,
        ..SweepConfig::default()
    };
    match run_sweep(&config) {
        Ok(sweep) => {
            for f in &sweep.findings {
                report.findings.push(format!(
                    "{} at m={}, d={}, sample={}, variant={}, p=({}): theorem_gap={}, gaussian_gap={}",
                    f.kind.as_str(),
                    f.m,
                    f.d,
                    f.sample,
                    f.variant,
                    f.p,
                    format_rational(&f.theorem_gap),
                    format_rational(&f.gaussian_gap)
                ));
            }
            for v in &sweep.conjecture_watch {
                report.conjecture_watch.push(format!(
                    "negative Gaussian gap at m={}, d={}, p=({}): {}",
                    v.m,
                    v.d,
                    v.p,
                    format_rational(&v.gaussian_gap)
                ));
            }
        }
        Err(e) => report.findings.push(format!("sign survey did not run: {e}")),
    }
    // The script-style filter keeps off-diagonal terms even in one dimension.
    if let Ok(p) = ProbVector::parse("1/3") {
        if let Ok(g) = theorem_gap(&p, 2, ConstraintVariant::Slack, &ctx.budget) {
            if !g.is_zero() {
                report.findings.push(format!(
                    "slack variant is nonzero at d=1: theorem_gap(p=1/3, m=2, slack) = {}",
                    format_rational(&g)
                ));
            }
        }
    }
}
