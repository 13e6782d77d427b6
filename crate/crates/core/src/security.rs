//! Guessing statistics and brute-force attack costs for the permutation key.
//!
//! A uniformly guessed key agrees with the true key in exactly `l` positions
//! with probability
//!
//! ```text
//! P_l = C(N, l) D_{N-l} / N! = (1/l!) * sum_{n=0}^{N-l} (-1)^n / n!
//! ```
//!
//! where `D_m` counts derangements of `m` elements.

use std::f64::consts::{E, LN_2, PI};
use std::io::Write;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{check_len, Error, Result};
use crate::transforms::PermutationKey;

/// Largest `N` for which guess probabilities are computed in exact integer
/// arithmetic; larger `N` use the log domain.
pub const EXACT_MODE_MAX_N: usize = 512;

/// Agreement required between the two closed forms of `P_l`.
pub const ROUTE_TOLERANCE: f64 = 1e-12;

/// `D_n` via `D_n = (n - 1)(D_{n-1} + D_{n-2})`, `D_0 = 1`, `D_1 = 0`.
pub fn derangement_count(n: usize) -> BigUint {
    let (mut prev, mut cur) = (BigUint::one(), BigUint::zero());
    if n == 0 {
        return prev;
    }
    for k in 2..=n {
        let next = (&cur + &prev) * BigUint::from(k - 1);
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

/// Precomputed `D_0 ..= D_max`. Immutable once built, so it can be shared
/// freely between threads.
#[derive(Clone, Debug)]
pub struct DerangementTable {
    counts: Vec<BigUint>,
}

impl DerangementTable {
    pub fn new(max_n: usize) -> Self {
        let mut counts = Vec::with_capacity(max_n + 1);
        counts.push(BigUint::one());
        if max_n >= 1 {
            counts.push(BigUint::zero());
        }
        for k in 2..=max_n {
            let next = (&counts[k - 1] + &counts[k - 2]) * BigUint::from(k - 1);
            counts.push(next);
        }
        Self { counts }
    }

    pub fn max_n(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn get(&self, n: usize) -> Option<&BigUint> {
        self.counts.get(n)
    }
}

fn factorial(n: usize) -> BigUint {
    (1..=n as u64).map(BigUint::from).product()
}

/// Natural log of a big integer; `-inf` for zero.
fn ln_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().map_or(f64::NAN, f64::ln);
    }
    let shift = bits - 64;
    (x >> shift).to_f64().map_or(f64::NAN, f64::ln) + shift as f64 * LN_2
}

/// `num / den` rounded to double precision (relative error below 2^-62).
fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    // Scale so the integer quotient carries 64 significant bits.
    let shift = 64 + den.bits() as i64 - num.bits() as i64;
    let q = if shift >= 0 {
        (num << shift as u64) / den
    } else {
        num / (den << (-shift) as u64)
    };
    let qf = q.to_f64().unwrap_or(f64::NAN);
    if shift > 1000 {
        // Split the power to avoid an intermediate underflow.
        let half = (shift / 2) as i32;
        qf * 2f64.powi(-half) * 2f64.powi(-(shift as i32 - half))
    } else {
        qf * 2f64.powi(-(shift as i32))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Precision {
    /// Integer numerators over the common denominator `N!`.
    Exact,
    /// Double precision in the log domain.
    LogDomain,
}

/// Distribution of the number of positions a uniform guess gets right.
#[derive(Clone, Debug)]
pub struct GuessDistribution {
    n: usize,
    precision: Precision,
    pmf: Vec<f64>,
    ln_pmf: Vec<f64>,
    cdf_wrong: Vec<f64>,
    alternating: Vec<f64>,
    numerators: Option<Vec<BigUint>>,
    denominator: Option<BigUint>,
}

/// `S_m = sum_{n=0}^{m} (-1)^n / n!` for `m = 0..=max`.
fn alternating_sums(max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(max + 1);
    let (mut term, mut acc) = (1.0f64, 0.0f64);
    for n in 0..=max {
        if n > 0 {
            term /= n as f64;
        }
        acc += if n % 2 == 0 { term } else { -term };
        out.push(acc);
    }
    out
}

/// Beyond this size `D_m / m!` equals `1/e` to within `1/(m+1)! < 1e-50`.
const DERANGEMENT_RATIO_EXACT_MAX: usize = 40;

/// `D_m / m!` for `m = 0..=max`, from exact counts while they differ from
/// `1/e` in double precision.
fn derangement_ratios(max: usize) -> Vec<f64> {
    let exact_max = max.min(DERANGEMENT_RATIO_EXACT_MAX);
    let table = DerangementTable::new(exact_max);
    let mut out: Vec<f64> = (0..=exact_max)
        .map(|m| ratio_to_f64(&table.counts[m], &factorial(m)))
        .collect();
    out.resize(max + 1, (-1.0f64).exp());
    out
}

impl GuessDistribution {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        let alt = alternating_sums(n);
        let alternating: Vec<f64> = (0..=n)
            .map(|l| (alt[n - l].ln() - ln_gamma(l as f64 + 1.0)).exp())
            .map(|v| if v.is_nan() { 0.0 } else { v })
            .collect();
        let dist = if n <= EXACT_MODE_MAX_N {
            Self::exact(n, alternating)
        } else {
            Self::log_domain(n, alternating)
        };
        let gap = dist.route_discrepancy();
        if gap.is_nan() || gap > ROUTE_TOLERANCE {
            return Err(Error::Numerical(format!(
                "guess probability routes disagree by {gap:e} for N={n}"
            )));
        }
        Ok(dist)
    }

    fn exact(n: usize, alternating: Vec<f64>) -> Self {
        let table = DerangementTable::new(n);
        let denominator = factorial(n);
        // C(N, l) D_{N-l}, built with C(N, l+1) = C(N, l) (N - l) / (l + 1).
        let mut binom = BigUint::one();
        let mut numerators = Vec::with_capacity(n + 1);
        for l in 0..=n {
            numerators.push(&binom * &table.counts[n - l]);
            binom = binom * BigUint::from(n - l) / BigUint::from(l + 1);
        }
        let ln_den = ln_big(&denominator);
        let pmf = numerators.iter().map(|a| ratio_to_f64(a, &denominator)).collect();
        let ln_pmf = numerators.iter().map(|a| ln_big(a) - ln_den).collect();
        let mut acc = BigUint::zero();
        let cdf_wrong = numerators
            .iter()
            .map(|a| {
                acc += a;
                ratio_to_f64(&acc, &denominator)
            })
            .collect();
        Self {
            n,
            precision: Precision::Exact,
            pmf,
            ln_pmf,
            cdf_wrong,
            alternating,
            numerators: Some(numerators),
            denominator: Some(denominator),
        }
    }

    fn log_domain(n: usize, alternating: Vec<f64>) -> Self {
        let ratios = derangement_ratios(n);
        let ln_pmf: Vec<f64> = (0..=n)
            .map(|l| ratios[n - l].ln() - ln_gamma(l as f64 + 1.0))
            .collect();
        let pmf: Vec<f64> = ln_pmf.iter().map(|v| v.exp()).collect();
        // Accumulate the (tiny) upper tail so values near one keep full
        // absolute precision.
        let mut cdf_wrong = vec![1.0; n + 1];
        let mut tail = 0.0;
        for l in (0..n).rev() {
            tail += pmf[l + 1];
            cdf_wrong[l] = 1.0 - tail;
        }
        Self {
            n,
            precision: Precision::LogDomain,
            pmf,
            ln_pmf,
            cdf_wrong,
            alternating,
            numerators: None,
            denominator: None,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    /// `P_l` for `l = 0..=N`.
    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// `ln P_l`; finite even where `P_l` underflows.
    pub fn ln_pmf(&self) -> &[f64] {
        &self.ln_pmf
    }

    /// Probability of at most `l` correct positions, i.e. at least `N - l`
    /// wrong ones.
    pub fn cdf_wrong(&self) -> &[f64] {
        &self.cdf_wrong
    }

    /// `(1/l!) sum (-1)^n/n!`, evaluated independently of [`Self::pmf`].
    pub fn alternating_form(&self) -> &[f64] {
        &self.alternating
    }

    /// Exact numerators `C(N,l) D_{N-l}` over [`Self::exact_denominator`].
    pub fn exact_numerators(&self) -> Option<&[BigUint]> {
        self.numerators.as_deref()
    }

    /// `N!` in exact mode.
    pub fn exact_denominator(&self) -> Option<&BigUint> {
        self.denominator.as_ref()
    }

    /// `true` when the exact probabilities sum to one; `None` in log mode.
    pub fn exactly_normalized(&self) -> Option<bool> {
        let nums = self.numerators.as_ref()?;
        let total: BigUint = nums.iter().sum();
        Some(Some(&total) == self.denominator.as_ref())
    }

    /// `max_l |P_l - alternating_l|`.
    pub fn route_discrepancy(&self) -> f64 {
        self.pmf
            .iter()
            .zip(&self.alternating)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Writes `l,p_l,cdf_at_least_n_minus_l_wrong,log10_p_l` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["l", "p_l", "cdf_at_least_n_minus_l_wrong", "log10_p_l"])
            .map_err(io)?;
        for l in 0..=self.n {
            w.write_record([
                l.to_string(),
                fmt_f64(self.pmf[l]),
                fmt_f64(self.cdf_wrong[l]),
                fmt_f64(self.ln_pmf[l] / std::f64::consts::LN_10),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))
    }
}

/// Shortest round-trip decimal, in exponent form outside `[1e-4, 1e15)`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// `P_l` for a uniform guess over `N!` keys.
pub fn guess_pmf(n: usize, l: usize) -> Result<f64> {
    check_fixed_points(n, l)?;
    Ok(GuessDistribution::new(n)?.pmf[l])
}

/// Probability that a uniform guess has at most `l_max` correct positions.
pub fn guess_cdf_wrong(n: usize, l_max: usize) -> Result<f64> {
    check_fixed_points(n, l_max)?;
    Ok(GuessDistribution::new(n)?.cdf_wrong[l_max])
}

fn check_fixed_points(n: usize, l: usize) -> Result<()> {
    if l > n {
        return Err(Error::InvalidParameter(format!(
            "number of correct positions {l} exceeds N={n}"
        )));
    }
    Ok(())
}

/// Cost of evaluating one candidate key.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerEvalCost {
    pub label: String,
    pub log10: f64,
}

impl PerEvalCost {
    /// One `N x N` complex matrix-vector product, `N^2` operations.
    pub fn matrix_vector(n: usize) -> Self {
        Self {
            label: "N^2".into(),
            log10: 2.0 * (n as f64).log10(),
        }
    }
}

/// Classical exhaustive-search and Grover-adaptive-search cost figures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackCostReport {
    pub n: usize,
    pub per_eval_cost: PerEvalCost,
    /// `log10 N!`: number of key evaluations for exhaustive search.
    pub classical_log10_evals: f64,
    /// `N!` in decimal for small `N`.
    pub classical_evals_exact: Option<String>,
    /// `log10(lambda N!)`.
    pub classical_log10_ops: f64,
    /// `log10 sqrt(N!)`.
    pub gas_log10_queries: f64,
    /// `log10((2 pi N)^{1/4} (N/e)^{N/2})`.
    pub gas_log10_queries_stirling: f64,
    /// `log2 N!` as a sum of logs.
    pub logical_qubits: f64,
    /// `N log2 N - N log2 e`, the truncated Stirling estimate.
    pub logical_qubits_stirling: f64,
    pub overhead_range: (f64, f64),
    pub physical_qubits_range: (f64, f64),
}

/// Largest `N` whose `N!` is also reported in full.
pub const EXACT_FACTORIAL_MAX_N: usize = 64;

/// Full attack-cost report.
pub fn attack_cost(n: usize, per_eval: &PerEvalCost, overhead_low: f64, overhead_high: f64) -> Result<AttackCostReport> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("N must be at least 2, got {n}")));
    }
    if !(overhead_low > 0.0 && overhead_low <= overhead_high && overhead_high.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "overhead range must satisfy 0 < low <= high, got [{overhead_low}, {overhead_high}]"
        )));
    }
    let nf = n as f64;
    let log10_fact = ln_gamma(nf + 1.0) / std::f64::consts::LN_10;
    let log2_fact: f64 = (2..=n).map(|k| (k as f64).log2()).sum();
    Ok(AttackCostReport {
        n,
        per_eval_cost: per_eval.clone(),
        classical_log10_evals: log10_fact,
        classical_evals_exact: (n <= EXACT_FACTORIAL_MAX_N).then(|| factorial(n).to_string()),
        classical_log10_ops: log10_fact + per_eval.log10,
        gas_log10_queries: log10_fact / 2.0,
        gas_log10_queries_stirling: 0.25 * (2.0 * PI * nf).log10() + 0.5 * nf * (nf.log10() - E.log10()),
        logical_qubits: log2_fact,
        logical_qubits_stirling: nf * nf.log2() - nf * E.log2(),
        overhead_range: (overhead_low, overhead_high),
        physical_qubits_range: (log2_fact * overhead_low, log2_fact * overhead_high),
    })
}

/// Exhaustive-search cost with per-evaluation cost `lambda`; quantum fields
/// use the default `[1e3, 1e4]` error-correction overhead.
pub fn classical_cost(n: usize, lambda: &PerEvalCost) -> Result<AttackCostReport> {
    attack_cost(n, lambda, 1e3, 1e4)
}

/// Grover-adaptive-search cost with the given physical-per-logical qubit
/// overhead range.
pub fn quantum_cost(n: usize, overhead_low: f64, overhead_high: f64) -> Result<AttackCostReport> {
    attack_cost(n, &PerEvalCost::matrix_vector(n), overhead_low, overhead_high)
}

/// `m x 10^e` with `digits` decimals from a base-10 logarithm, e.g.
/// `2.1e13`.
pub fn sci_from_log10(log10: f64, digits: usize) -> String {
    let mut e = log10.floor();
    let mut m = 10f64.powf(log10 - e);
    let scale = 10f64.powi(digits as i32);
    if (m * scale).round() / scale >= 10.0 {
        m /= 10.0;
        e += 1.0;
    }
    format!("{m:.digits$}e{e}")
}

/// Uniformly random key that agrees with `truth` in exactly `l` positions.
pub fn sample_perm_with_fixed_points<R: Rng + ?Sized>(
    n: usize,
    l: usize,
    truth: &PermutationKey,
    rng: &mut R,
) -> Result<PermutationKey> {
    check_len(n, truth.n())?;
    check_fixed_points(n, l)?;
    if l + 1 == n {
        return Err(Error::InvalidParameter(format!(
            "no permutation of {n} elements has exactly {l} fixed points"
        )));
    }
    let keep = index::sample(rng, n, l);
    let mut kept = vec![false; n];
    for i in keep.iter() {
        kept[i] = true;
    }
    let rest: Vec<usize> = (0..n).filter(|&i| !kept[i]).collect();
    let m = rest.len();
    let mut sigma: Vec<usize> = (0..m).collect();
    loop {
        sigma.shuffle(rng);
        if sigma.iter().enumerate().all(|(i, &s)| i != s) {
            break;
        }
    }
    let t = truth.perm();
    let mut perm = t.to_vec();
    for (i, &pos) in rest.iter().enumerate() {
        perm[pos] = t[rest[sigma[i]]];
    }
    PermutationKey::from_perm(perm)
}

/// Uniformly random key agreeing with `truth` in at most `l_max` positions.
pub fn sample_perm_with_at_most_fixed_points<R: Rng + ?Sized>(
    n: usize,
    l_max: usize,
    truth: &PermutationKey,
    rng: &mut R,
) -> Result<PermutationKey> {
    check_len(n, truth.n())?;
    check_fixed_points(n, l_max)?;
    if n == 1 && l_max == 0 {
        return Err(Error::InvalidParameter(
            "a single-element key always agrees with the truth".into(),
        ));
    }
    // At least 1/3 of all keys qualify for N >= 2, so rejection is cheap.
    loop {
        let k = PermutationKey::random(n, rng);
        if k.agreements(truth) <= l_max {
            return Ok(k);
        }
    }
}
