use std::collections::BTreeSet;

use gpi_core::combinatorics::{
    binomial, double_factorial, falling_factorial, falling_product_expand, monomial_to_falling,
    perfect_pairings, stirling2, FallingFactorialExpansion,
};
use gpi_core::condition::{
    enumerate_constrained_terms, equal_p_sum, theorem_gap, unpruned_constrained_terms,
    ConstraintVariant,
};
use gpi_core::exact::{int, pow, ratio};
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
use proptest::prelude::*;

const BATTERY: [&str; 5] = [
    "1/2,1/4,1/8",
    "1/3,1/3,1/5",
    "1/10,1/5,3/10",
    "2/7,1/7,3/7",
    "1/6,1/6,1/6",
];

fn budget() -> Budget {
    Budget::new(50_000_000, 24)
}

fn battery(d: usize) -> Vec<ProbVector> {
    BATTERY
        .iter()
        .map(|s| {
            let all = ProbVector::parse(s).unwrap();
            ProbVector::new(all.entries()[..d].to_vec()).unwrap()
        })
        .collect()
}

#[test]
fn stirling_recurrence() {
    for k in 1..=12u32 {
        for j in 1..=k as i64 {
            assert_eq!(
                stirling2(k, j),
                stirling2(k - 1, j) * j + stirling2(k - 1, j - 1),
                "S2({k},{j})"
            );
        }
    }
}

#[test]
fn monomials_expand_into_falling_factorials() {
    for k in 0..=10u32 {
        let e = monomial_to_falling(k);
        for x in 0..=10i64 {
            assert_eq!(e.evaluate(&int(x)), pow(&int(x), k), "x={x}, k={k}");
        }
    }
}

#[test]
fn falling_product_identity_on_integers() {
    for j in 0..=6 {
        for jp in 0..=6 {
            let e = falling_product_expand(j, jp);
            for x in -5..=10i64 {
                let x = int(x);
                assert_eq!(
                    e.evaluate(&x),
                    falling_factorial(&x, j) * falling_factorial(&x, jp),
                    "j={j}, jp={jp}, x={x}"
                );
            }
        }
    }
}

#[test]
fn iterated_falling_products() {
    // N^(j1) N^(j2) N^(j3) through repeated pairwise expansion.
    let orders = [3u32, 2, 4];
    let e = orders
        .iter()
        .map(|&j| FallingFactorialExpansion::single(j))
        .reduce(|a, b| a.multiply(&b))
        .unwrap();
    for n in 0..=12i64 {
        let x = int(n);
        let direct: ExactRational = orders.iter().map(|&j| falling_factorial(&x, j)).product();
        assert_eq!(e.evaluate(&x), direct);
    }
}

#[test]
fn binomial_symmetry() {
    for n in 0..=20u32 {
        for k in 0..=n as i64 {
            assert_eq!(binomial(n, k), binomial(n, n as i64 - k));
        }
    }
}

#[test]
fn double_factorial_counts_pairings() {
    for r in 0..=5usize {
        let count = perfect_pairings(2 * r).count();
        assert_eq!(double_factorial(2 * r as i64 - 1).unwrap(), BigInt::from(count));
    }
    assert_eq!(perfect_pairings(8).count(), 105);
}

#[test]
fn factorial_moments_match_brute_force() {
    let b = budget();
    for d in 1..=3 {
        for p in battery(d) {
            for n in 1..=4 {
                let spec = MultinomialSpec::new(n, p.clone()).unwrap();
                let orders: Vec<Vec<u32>> = all_vectors(d, 4).filter(|v| v.iter().sum::<u32>() <= 4).collect();
                for j in orders {
                    let jj = j.clone();
                    let oracle = brute_force_expectation(
                        &spec,
                        |k| {
                            k.iter()
                                .zip(&jj)
                                .map(|(&ki, &ji)| falling_factorial(&int(ki as i64), ji))
                                .product()
                        },
                        &b,
                    )
                    .unwrap();
                    assert_eq!(factorial_moment(&spec, &MultiIndex::new(j)).unwrap(), oracle);
                }
            }
        }
    }
}

fn all_vectors(d: usize, max: u32) -> impl Iterator<Item = Vec<u32>> {
    let total = (max as usize + 1).pow(d as u32);
    (0..total).map(move |mut code| {
        (0..d)
            .map(|_| {
                let v = (code % (max as usize + 1)) as u32;
                code /= max as usize + 1;
                v
            })
            .collect()
    })
}

fn central_integrand(spec: &MultinomialSpec, m: u32) -> impl Fn(&MultiIndex) -> ExactRational + '_ {
    move |k: &MultiIndex| {
        k.iter()
            .zip(spec.probs().entries())
            .map(|(&ki, p)| {
                let centered = int(ki as i64) - int(spec.trials() as i64) * p;
                pow(&centered, 2 * m)
            })
            .product()
    }
}

#[test]
fn central_moments_match_brute_force() {
    let b = budget();
    for d in 1..=3 {
        for p in battery(d) {
            for n in 1..=4 {
                let spec = MultinomialSpec::new(n, p.clone()).unwrap();
                for m in 1..=2 {
                    let oracle = brute_force_expectation(&spec, central_integrand(&spec, m), &b).unwrap();
                    assert_eq!(central_mixed_moment(&spec, m, &b).unwrap(), oracle, "N={n}, p={p}, m={m}");
                }
            }
        }
    }
}

#[test]
fn centered_coordinates_have_zero_mean() {
    let b = budget();
    for p in battery(3) {
        let spec = MultinomialSpec::new(4, p).unwrap();
        for i in 0..3 {
            let mean = brute_force_expectation(
                &spec,
                |k| int(k[i] as i64) - int(4) * &spec.probs().entries()[i],
                &b,
            )
            .unwrap();
            assert!(mean.is_zero());
        }
    }
}

#[test]
fn one_dimensional_moments_agree() {
    let b = budget();
    for p in battery(1) {
        for n in [1, 2, 5, 13, 64] {
            for m in 1..=3 {
                let spec = MultinomialSpec::new(n, p.clone()).unwrap();
                assert_eq!(
                    central_mixed_moment(&spec, m, &b).unwrap(),
                    central_moment_univariate(n, &p.entries()[0], m)
                );
            }
        }
    }
}

#[test]
fn finite_gap_errors_shrink_like_one_over_n() {
    use gpi_core::multinomial::scaled_gap_finite;
    let b = budget();
    let p = ProbVector::parse("1/2,1/4").unwrap();
    let limit = gaussian_gpi_gap(&p, 1, &b).unwrap();
    let errors: Vec<f64> = [32u64, 64, 128, 256]
        .iter()
        .map(|&n| {
            let spec = MultinomialSpec::new(n, p.clone()).unwrap();
            let e = scaled_gap_finite(&spec, 1, &b).unwrap() - &limit;
            gpi_core::exact::to_f64(&e).abs()
        })
        .collect();
    for w in errors.windows(2) {
        assert!(w[1] < w[0]);
        let r = w[0] / w[1];
        assert!((1.7..=2.3).contains(&r), "ratio {r}");
    }
}

#[test]
fn wick_matches_closed_form_in_one_dimension() {
    let b = budget();
    for p in ["1/2", "1/7", "5/9"] {
        let cov = covariance_from_p(&ProbVector::parse(p).unwrap());
        for m in 1..=6 {
            assert_eq!(
                wick_moment(&cov, &MultiplicityVector(vec![2 * m]), &b).unwrap(),
                univariate_even_moment(cov.get(0, 0), m)
            );
        }
    }
}

#[test]
fn wick_counts_pairings_with_all_ones_covariance() {
    let b = budget();
    for d in 1..=4usize {
        let cov = CovMatrix::from_rows(vec![vec![int(1); d]; d]).unwrap();
        for mult in all_vectors(d, 6) {
            let total: u32 = mult.iter().sum();
            if total % 2 == 1 || total > 12 {
                continue;
            }
            let expected = double_factorial(total as i64 - 1).unwrap();
            assert_eq!(
                wick_moment(&cov, &MultiplicityVector(mult.clone()), &b).unwrap(),
                ExactRational::from_integer(expected),
                "{mult:?}"
            );
        }
    }
}

#[test]
fn wick_factorizes_for_diagonal_covariance() {
    let b = budget();
    let vars = vec![ratio(1, 3), ratio(2, 5), ratio(7, 4)];
    let cov = CovMatrix::diagonal(vars.clone()).unwrap();
    for mult in all_vectors(3, 4) {
        if mult.iter().any(|a| a % 2 == 1) {
            continue;
        }
        let expected: ExactRational = vars
            .iter()
            .zip(&mult)
            .map(|(v, &a)| univariate_even_moment(v, a / 2))
            .product();
        assert_eq!(wick_moment(&cov, &MultiplicityVector(mult), &b).unwrap(), expected);
    }
}

#[test]
fn gaussian_gap_is_invariant_under_relabeling() {
    let b = budget();
    let p = ProbVector::parse("1/2,1/5,1/10").unwrap();
    for m in 1..=3 {
        let base = gaussian_gpi_gap(&p, m, &b).unwrap();
        for order in [[0, 2, 1], [1, 0, 2], [2, 1, 0], [1, 2, 0], [2, 0, 1]] {
            assert_eq!(gaussian_gpi_gap(&p.permuted(&order).unwrap(), m, &b).unwrap(), base);
        }
    }
}

#[test]
fn singular_covariance_is_accepted() {
    use gpi_core::multinomial::BoundaryPolicy;
    let b = budget();
    let p = ProbVector::parse_with_policy("1/2,1/2", BoundaryPolicy::AllowFullSum).unwrap();
    // Y_2 = -Y_1, so E[Y_1^2 Y_2^2] = E[Y_1^4] and the gap is 3 s^2 - s^2.
    assert_eq!(gaussian_gpi_gap(&p, 1, &b).unwrap(), ratio(1, 8));
}

#[test]
fn theorem_gap_vanishes_in_one_dimension() {
    let b = budget();
    for p in ["1/2", "1/9", "7/8"] {
        let p = ProbVector::parse(p).unwrap();
        for m in 1..=5 {
            assert!(theorem_gap(&p, m, ConstraintVariant::Equality, &b).unwrap().is_zero());
        }
    }
}

#[test]
fn equal_p_identity() {
    let b = budget();
    for d in 1..=3usize {
        for m in 1..=3u32 {
            let coeff = ExactRational::from_integer(equal_p_sum(d, m, &b).unwrap());
            for q in [ratio(1, 8), ratio(1, d as i64 + 1), ratio(1, 4)] {
                let Ok(p) = ProbVector::uniform(d, q.clone()) else {
                    continue;
                };
                assert_eq!(
                    theorem_gap(&p, m, ConstraintVariant::Equality, &b).unwrap(),
                    &coeff * pow(&q, m * d as u32),
                    "d={d}, m={m}, q={q}"
                );
            }
        }
    }
}

fn key_set(
    terms: impl IntoIterator<Item = gpi_core::condition::ConstrainedTerm>,
) -> BTreeSet<(Vec<u32>, Vec<u32>)> {
    terms.into_iter().map(|t| (t.k.0, t.j.0)).collect()
}

#[test]
fn pruning_keeps_every_admissible_term() {
    let b = budget();
    for d in 1..=2 {
        for m in 1..=3 {
            for v in ConstraintVariant::ALL {
                let pruned: Vec<_> = enumerate_constrained_terms(d, m, v, &b).unwrap().collect();
                let full = unpruned_constrained_terms(d, m, v, &b).unwrap();
                assert_eq!(pruned.len(), full.len(), "d={d}, m={m}, {v}");
                assert_eq!(pruned, full);
            }
        }
    }
    // one larger shape, compared as sets
    let pruned = key_set(enumerate_constrained_terms(3, 2, ConstraintVariant::Slack, &b).unwrap());
    let full = key_set(unpruned_constrained_terms(3, 2, ConstraintVariant::Slack, &b).unwrap());
    assert_eq!(pruned, full);
}

#[test]
fn equality_terms_are_contained_in_slack_terms() {
    let b = budget();
    for d in 1..=3 {
        for m in 1..=3 {
            let eq = key_set(enumerate_constrained_terms(d, m, ConstraintVariant::Equality, &b).unwrap());
            let slack = key_set(enumerate_constrained_terms(d, m, ConstraintVariant::Slack, &b).unwrap());
            assert!(eq.is_subset(&slack), "d={d}, m={m}");
        }
    }
}

#[test]
fn theorem_gap_is_invariant_under_relabeling() {
    let b = budget();
    let p = ProbVector::parse("1/8,1/4,1/3").unwrap();
    for m in 1..=2 {
        for v in ConstraintVariant::ALL {
            let base = theorem_gap(&p, m, v, &b).unwrap();
            for order in [[0, 2, 1], [1, 0, 2], [2, 1, 0], [1, 2, 0], [2, 0, 1]] {
                assert_eq!(theorem_gap(&p.permuted(&order).unwrap(), m, v, &b).unwrap(), base);
            }
        }
    }
    assert_eq!(theorem_gap(&p, 2, ConstraintVariant::Slack, &b).unwrap(), ratio(145, 3072));
}

fn small_prob_vector(d: usize) -> impl Strategy<Value = ProbVector> {
    // d + 1 positive integer weights, normalized
    prop::collection::vec(1i64..12, d + 1).prop_map(|w| {
        let total: i64 = w.iter().sum();
        ProbVector::new(w[..w.len() - 1].iter().map(|&x| ratio(x, total)).collect()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn expansion_matches_pmf_oracle(p in (1usize..=3).prop_flat_map(small_prob_vector), n in 1u64..=5, m in 1u32..=2) {
        let b = budget();
        let spec = MultinomialSpec::new(n, p).unwrap();
        let oracle = brute_force_expectation(&spec, central_integrand(&spec, m), &b).unwrap();
        prop_assert_eq!(central_mixed_moment(&spec, m, &b).unwrap(), oracle);
    }

    #[test]
    fn memoized_wick_matches_pairing_enumeration(
        p in (1usize..=3).prop_flat_map(small_prob_vector),
        mult in prop::collection::vec(0u32..=4, 3),
    ) {
        let d = p.dim();
        let mult = MultiplicityVector(mult[..d].to_vec());
        prop_assume!(mult.total() <= 10);
        let cov = covariance_from_p(&p);
        prop_assert_eq!(
            wick_moment(&cov, &mult, &budget()).unwrap(),
            wick_moment_naive(&cov, &mult).unwrap()
        );
    }

    #[test]
    fn stirling_expansion_holds_on_rationals(k in 0u32..=8, num in -20i64..20, den in 1i64..7) {
        let x = ratio(num, den);
        prop_assert_eq!(monomial_to_falling(k).evaluate(&x), pow(&x, k));
    }
}
