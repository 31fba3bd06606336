//! Exact integer combinatorics.
//!
//! Binomial coefficients and Stirling numbers of the second kind are served
//! from process-wide memo tables built once (up to [`DEFAULT_TABLE_CAP`]);
//! requests past the cap fall back to direct computation. The tables are
//! immutable after construction, so concurrent readers need no locking.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::{from_bigint, ExactRational};

/// Largest moment order `m` the default memo tables are sized for.
pub const DEFAULT_M_MAX: u32 = 8;
/// Largest row kept in the default memo tables (`2 * DEFAULT_M_MAX`).
pub const DEFAULT_TABLE_CAP: u32 = 2 * DEFAULT_M_MAX;

/// Triangular table of Stirling numbers of the second kind, rows `0..=cap`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StirlingTable {
    rows: Vec<Vec<BigInt>>,
}

impl StirlingTable {
    pub fn new(cap: u32) -> Self {
        let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(cap as usize + 1);
        rows.push(vec![BigInt::one()]);
        for k in 1..=cap as usize {
            let prev = &rows[k - 1];
            let mut row = vec![BigInt::zero(); k + 1];
            for j in 1..=k {
                let stay = if j < k { &prev[j] * j } else { BigInt::zero() };
                row[j] = stay + &prev[j - 1];
            }
            rows.push(row);
        }
        StirlingTable { rows }
    }

    pub fn cap(&self) -> u32 {
        (self.rows.len() - 1) as u32
    }

    pub fn get(&self, k: u32, j: i64) -> BigInt {
        if j < 0 || j > k as i64 {
            return BigInt::zero();
        }
        match self.rows.get(k as usize) {
            Some(row) => row[j as usize].clone(),
            None => stirling2_row(k).swap_remove(j as usize),
        }
    }

    /// Overwrites one entry. Only meant for fault-injection in verification harnesses.
    pub fn set(&mut self, k: u32, j: u32, value: BigInt) {
        assert!(j <= k && k <= self.cap(), "entry ({k}, {j}) outside table");
        self.rows[k as usize][j as usize] = value;
    }
}

/// Pascal triangle, rows `0..=cap`.
#[derive(Debug, Clone)]
struct BinomialTable {
    rows: Vec<Vec<BigInt>>,
}

impl BinomialTable {
    fn new(cap: u32) -> Self {
        let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(cap as usize + 1);
        rows.push(vec![BigInt::one()]);
        for n in 1..=cap as usize {
            let prev = &rows[n - 1];
            let mut row = vec![BigInt::one(); n + 1];
            for k in 1..n {
                row[k] = &prev[k - 1] + &prev[k];
            }
            rows.push(row);
        }
        BinomialTable { rows }
    }
}

fn stirling_table() -> &'static StirlingTable {
    static TABLE: OnceLock<StirlingTable> = OnceLock::new();
    TABLE.get_or_init(|| StirlingTable::new(DEFAULT_TABLE_CAP))
}

fn binomial_table() -> &'static BinomialTable {
    static TABLE: OnceLock<BinomialTable> = OnceLock::new();
    TABLE.get_or_init(|| BinomialTable::new(DEFAULT_TABLE_CAP))
}

/// The shared default Stirling table.
pub fn default_stirling_table() -> &'static StirlingTable {
    stirling_table()
}

fn stirling2_row(k: u32) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for n in 1..=k as usize {
        let mut next = vec![BigInt::zero(); n + 1];
        for j in 1..=n {
            let stay = if j < n { &row[j] * j } else { BigInt::zero() };
            next[j] = stay + &row[j - 1];
        }
        row = next;
    }
    row
}

/// `C(n, k)`, zero when `k < 0` or `k > n`.
pub fn binomial(n: u32, k: i64) -> BigInt {
    if k < 0 || k > n as i64 {
        return BigInt::zero();
    }
    let table = binomial_table();
    if let Some(row) = table.rows.get(n as usize) {
        return row[k as usize].clone();
    }
    let k = (k as u32).min(n - k as u32);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Stirling number of the second kind `{k brace j}`; zero outside `0 <= j <= k`.
pub fn stirling2(k: u32, j: i64) -> BigInt {
    stirling_table().get(k, j)
}

pub fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * i)
}

/// `x (x - 1) ... (x - j + 1)`, with `x^(0) = 1`.
pub fn falling_factorial(x: &ExactRational, j: u32) -> ExactRational {
    let mut acc = ExactRational::one();
    let mut term = x.clone();
    let one = ExactRational::one();
    for _ in 0..j {
        acc *= &term;
        term -= &one;
    }
    acc
}

/// Integer falling factorial `n^(j)`; zero once `j > n` for nonnegative `n`.
pub fn falling_factorial_int(n: &BigInt, j: u32) -> BigInt {
    let mut acc = BigInt::one();
    let mut term = n.clone();
    for _ in 0..j {
        if term.is_zero() {
            return BigInt::zero();
        }
        acc *= &term;
        term -= 1;
    }
    acc
}

/// `n!!` for odd `n >= -1`, with `(-1)!! = 1`.
pub fn double_factorial(n: i64) -> Result<BigInt> {
    if n < -1 || n % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "double factorial is defined here for odd n >= -1, got {n}"
        )));
    }
    let mut acc = BigInt::one();
    let mut k = n;
    while k > 1 {
        acc *= k;
        k -= 2;
    }
    Ok(acc)
}

/// Finite integer combination `sum_r c_r x^(r)` of falling factorials.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FallingFactorialExpansion {
    coefficients: BTreeMap<u32, BigInt>,
}

impl FallingFactorialExpansion {
    pub fn new() -> Self {
        Self::default()
    }

    /// The single falling factorial `x^(order)`.
    pub fn single(order: u32) -> Self {
        let mut e = Self::new();
        e.add_term(order, BigInt::one());
        e
    }

    pub fn add_term(&mut self, order: u32, coefficient: BigInt) {
        if coefficient.is_zero() {
            return;
        }
        let entry = self.coefficients.entry(order).or_insert_with(BigInt::zero);
        *entry += coefficient;
        if entry.is_zero() {
            self.coefficients.remove(&order);
        }
    }

    pub fn coefficient(&self, order: u32) -> BigInt {
        self.coefficients.get(&order).cloned().unwrap_or_default()
    }

    /// Nonzero `(order, coefficient)` pairs in ascending order.
    pub fn terms(&self) -> impl Iterator<Item = (u32, &BigInt)> {
        self.coefficients.iter().map(|(&r, c)| (r, c))
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn evaluate(&self, x: &ExactRational) -> ExactRational {
        self.terms()
            .map(|(r, c)| falling_factorial(x, r) * from_bigint(c.clone()))
            .sum()
    }

    /// Product of two expansions, re-expanded term by term with [`falling_product_expand`].
    pub fn multiply(&self, other: &Self) -> Self {
        let mut out = Self::new();
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                let coeff = ca * cb;
                for (r, c) in falling_product_expand(a, b).terms() {
                    out.add_term(r, &coeff * c);
                }
            }
        }
        out
    }
}

/// `x^k = sum_j {k brace j} x^(j)`.
pub fn monomial_to_falling(k: u32) -> FallingFactorialExpansion {
    monomial_to_falling_with(stirling_table(), k)
}

pub fn monomial_to_falling_with(table: &StirlingTable, k: u32) -> FallingFactorialExpansion {
    let mut e = FallingFactorialExpansion::new();
    for j in 0..=k {
        e.add_term(j, table.get(k, j as i64));
    }
    e
}

/// `x^(j) x^(jp) = sum_l C(j, l) C(jp, l) l! x^(j + jp - l)`.
pub fn falling_product_expand(j: u32, jp: u32) -> FallingFactorialExpansion {
    let mut e = FallingFactorialExpansion::new();
    let mut l_fact = BigInt::one();
    for l in 0..=jp.min(j) {
        if l > 0 {
            l_fact *= l;
        }
        let c = binomial(j, l as i64) * binomial(jp, l as i64) * &l_fact;
        e.add_term(j + jp - l, c);
    }
    e
}

/// Iterator over all perfect pairings of `{0, .., n-1}` (empty when `n` is odd).
///
/// Each pairing lists its pairs with the smaller label first, ordered by that
/// label. There are `(n - 1)!!` of them.
pub fn perfect_pairings(n: usize) -> PerfectPairings {
    PerfectPairings::new(n)
}

pub struct PerfectPairings {
    n: usize,
    // choice[t] = index of the partner chosen at step t among the free labels.
    choice: Vec<usize>,
    done: bool,
}

impl PerfectPairings {
    fn new(n: usize) -> Self {
        PerfectPairings {
            n,
            choice: vec![0; n / 2],
            done: n % 2 == 1,
        }
    }

    fn decode(&self) -> Vec<(usize, usize)> {
        let mut free: Vec<usize> = (0..self.n).collect();
        let mut pairs = Vec::with_capacity(self.n / 2);
        for &c in &self.choice {
            let a = free.remove(0);
            let b = free.remove(c);
            pairs.push((a, b));
        }
        pairs
    }
}

impl Iterator for PerfectPairings {
    type Item = Vec<(usize, usize)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let out = self.decode();
        // Step t chooses among n - 2t - 1 partners; advance like a mixed-radix counter.
        let mut t = self.choice.len();
        loop {
            if t == 0 {
                self.done = true;
                break;
            }
            t -= 1;
            let radix = self.n - 2 * t - 1;
            self.choice[t] += 1;
            if self.choice[t] < radix {
                break;
            }
            self.choice[t] = 0;
        }
        Some(out)
    }
}
