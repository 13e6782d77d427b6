//! Seeded, parallel BER Monte Carlo for Bob (matched key) and Eve
//! (mismatched key).
//!
//! Every trial owns a ChaCha8 substream selected by `(snr_index, trial)` from
//! the master seed, and per-point results are integer error counts, so the
//! output does not depend on the number of workers or on scheduling.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::Instant;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelScenarioConfig, DelayDopplerChannel};
use crate::error::{Error, Result};
use crate::link::{awgn, demap_symbols, map_bits, mmse_time_domain, Constellation, Modulation};
use crate::security::{fmt_f64, sample_perm_with_at_most_fixed_points, sample_perm_with_fixed_points};
use crate::transforms::{ChirpProfile, FastDaft, PermutationKey};

/// Substream reserved for draws shared by all trials (fixed keys/channels).
const SHARED_STREAM: u64 = u64::MAX;

/// z-score of the two-sided 95% Wilson interval.
const WILSON_Z: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Eve sees an independent channel and independent noise.
    Remote,
    /// Eve observes exactly Bob's received signal.
    Colocated,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Remote => "remote",
            Scenario::Colocated => "colocated",
        })
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "remote" => Ok(Scenario::Remote),
            "colocated" | "co-located" => Ok(Scenario::Colocated),
            other => Err(Error::Parse(format!("unknown scenario '{other}'"))),
        }
    }
}

/// How Eve picks her demodulation key in each trial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EveStrategy {
    /// Uniform over all `N!` keys.
    RandomKey,
    /// Uniform over keys agreeing with Alice's in at most `l_max` positions.
    FixedPointBounded { l_max: usize },
    /// Always the key with this decimal rank.
    FixedKey { rank: String },
    /// Uniform over keys agreeing with Alice's in exactly `l` positions.
    ExactFixedPoints { l: usize },
}

impl fmt::Display for EveStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EveStrategy::RandomKey => f.write_str("random"),
            EveStrategy::FixedPointBounded { l_max } => write!(f, "bounded:{l_max}"),
            EveStrategy::FixedKey { rank } => write!(f, "fixed:{rank}"),
            EveStrategy::ExactFixedPoints { l } => write!(f, "exact:{l}"),
        }
    }
}

impl FromStr for EveStrategy {
    type Err = Error;

    /// Parses `random`, `bounded:L`, `fixed:RANK` or `exact:L`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
        let num = |what: &str| {
            arg.parse::<usize>()
                .map_err(|_| Error::Parse(format!("eve strategy '{s}': expected {what}")))
        };
        match kind {
            "random" | "random-key" if arg.is_empty() => Ok(EveStrategy::RandomKey),
            "bounded" => Ok(EveStrategy::FixedPointBounded { l_max: num("bounded:<l_max>")? }),
            "exact" => Ok(EveStrategy::ExactFixedPoints { l: num("exact:<l>")? }),
            "fixed" => {
                parse_rank(arg)?;
                Ok(EveStrategy::FixedKey { rank: arg.to_string() })
            }
            _ => Err(Error::Parse(format!(
                "unknown eve strategy '{s}' (expected random, bounded:L, fixed:RANK or exact:L)"
            ))),
        }
    }
}

/// Alice's key in each trial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AliceKeyPolicy {
    /// A fresh uniform key every trial.
    FreshPerTrial,
    /// One key with this decimal rank for the whole run.
    Fixed { rank: String },
}

/// Whether the channel is redrawn every trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelPolicy {
    /// Block fading: independent channels per trial.
    PerTrial,
    /// One realization (per receiver) for the whole run.
    Fixed,
}

/// BER experiment configuration. The channel's own `seed` and `colocated`
/// fields are ignored: randomness comes from `master_seed` and sharing
/// from `scenario`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BerConfig {
    pub n: usize,
    pub modulation: Modulation,
    pub snr_grid_db: Vec<f64>,
    pub trials_per_point: u64,
    pub scenario: Scenario,
    pub eve_strategy: EveStrategy,
    pub channel: ChannelScenarioConfig,
    pub master_seed: u64,
    pub alice_key: AliceKeyPolicy,
    pub channel_policy: ChannelPolicy,
    /// Second chirp frequency; `None` selects the default.
    pub c2: Option<f64>,
}

impl Default for BerConfig {
    fn default() -> Self {
        Self {
            n: 64,
            modulation: Modulation::Qpsk,
            snr_grid_db: (0..=15).map(|i| 2.0 * i as f64).collect(),
            trials_per_point: 10_000,
            scenario: Scenario::Remote,
            eve_strategy: EveStrategy::RandomKey,
            channel: ChannelScenarioConfig::default(),
            master_seed: 0,
            alice_key: AliceKeyPolicy::FreshPerTrial,
            channel_policy: ChannelPolicy::PerTrial,
            c2: None,
        }
    }
}

fn parse_rank(text: &str) -> Result<BigUint> {
    BigUint::from_str(text.trim()).map_err(|_| Error::Parse(format!("invalid key rank '{text}'")))
}

/// `sigma^2 = 10^{-snr/10}` for unit-energy symbols.
pub fn noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

impl BerConfig {
    pub fn validate(&self) -> Result<()> {
        self.prepare().map(|_| ())
    }

    pub fn profile(&self) -> Result<ChirpProfile> {
        ChirpProfile::new(
            self.n,
            self.channel.c1(),
            self.c2.unwrap_or(ChirpProfile::DEFAULT_C2),
        )
    }

    fn prepare(&self) -> Result<Prepared> {
        let n = self.n;
        if self.trials_per_point == 0 {
            return Err(Error::InvalidParameter("trials_per_point must be at least 1".into()));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::InvalidParameter("snr_grid_db must not be empty".into()));
        }
        if let Some(v) = self.snr_grid_db.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("SNR grid value {v} is not finite")));
        }
        if self.snr_grid_db.len() as u64 >= u64::from(u32::MAX) || self.trials_per_point > u64::from(u32::MAX) {
            return Err(Error::InvalidParameter(
                "SNR grid length and trials_per_point must each stay below 2^32".into(),
            ));
        }
        if self.channel.n != n {
            return Err(Error::InvalidParameter(format!(
                "channel N={} does not match N={n}",
                self.channel.n
            )));
        }
        self.channel.validate()?;
        let profile = self.profile()?;
        let eve_fixed = match &self.eve_strategy {
            EveStrategy::RandomKey => None,
            EveStrategy::FixedPointBounded { l_max } => {
                if *l_max > n || (n == 1 && *l_max == 0) {
                    return Err(Error::InvalidParameter(format!("l_max={l_max} is out of range for N={n}")));
                }
                None
            }
            EveStrategy::ExactFixedPoints { l } => {
                if *l > n || *l + 1 == n {
                    return Err(Error::InvalidParameter(format!(
                        "exactly {l} correct positions is impossible for N={n}"
                    )));
                }
                None
            }
            EveStrategy::FixedKey { rank } => Some(PermutationKey::from_rank(&parse_rank(rank)?, n)?),
        };

        let mut shared = ChaCha8Rng::seed_from_u64(self.master_seed);
        shared.set_stream(SHARED_STREAM);
        let alice_fixed = match &self.alice_key {
            AliceKeyPolicy::FreshPerTrial => None,
            AliceKeyPolicy::Fixed { rank } => Some(PermutationKey::from_rank(&parse_rank(rank)?, n)?),
        };
        let channels = match self.channel_policy {
            ChannelPolicy::PerTrial => None,
            ChannelPolicy::Fixed => {
                let bob = self.channel.sample(&mut shared)?;
                let eve = match self.scenario {
                    Scenario::Colocated => bob.clone(),
                    Scenario::Remote => self.channel.sample(&mut shared)?,
                };
                Some((bob, eve))
            }
        };
        Ok(Prepared {
            fast: FastDaft::new(&profile),
            constellation: Constellation::new(self.modulation),
            alice_fixed,
            eve_fixed,
            channels,
        })
    }
}

/// Immutable inputs shared by all trials.
struct Prepared {
    fast: FastDaft,
    constellation: Constellation,
    alice_fixed: Option<PermutationKey>,
    eve_fixed: Option<PermutationKey>,
    channels: Option<(DelayDopplerChannel, DelayDopplerChannel)>,
}

/// Bit-error counts of one SNR point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerRow {
    pub snr_db: f64,
    pub bob_ber: f64,
    pub eve_ber: f64,
    pub bob_bit_errors: u64,
    pub eve_bit_errors: u64,
    pub total_bits: u64,
}

impl BerRow {
    fn from_counts(snr_db: f64, bob: u64, eve: u64, bits: u64) -> Self {
        Self {
            snr_db,
            bob_ber: bob as f64 / bits as f64,
            eve_ber: eve as f64 / bits as f64,
            bob_bit_errors: bob,
            eve_bit_errors: eve,
            total_bits: bits,
        }
    }

    pub fn bob_ci(&self) -> (f64, f64) {
        wilson_interval(self.bob_bit_errors, self.total_bits)
    }

    pub fn eve_ci(&self) -> (f64, f64) {
        wilson_interval(self.eve_bit_errors, self.total_bits)
    }
}

/// 95% Wilson score interval for `errors` out of `total`.
pub fn wilson_interval(errors: u64, total: u64) -> (f64, f64) {
    if total == 0 {
        return (0.0, 1.0);
    }
    let n = total as f64;
    let p = errors as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if errors == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if errors == total { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerReport {
    pub config: BerConfig,
    pub rows: Vec<BerRow>,
    /// Excluded from the CSV so that reruns stay byte-identical.
    pub wall_time_s: f64,
}

const CSV_HEADER: [&str; 7] = ["snr_db", "receiver", "ber", "errors", "bits", "ci_low", "ci_high"];

impl BerReport {
    /// Two rows per SNR point (`bob`, then `eve`).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(CSV_HEADER).map_err(io)?;
        for row in &self.rows {
            for (name, ber, errors, ci) in [
                ("bob", row.bob_ber, row.bob_bit_errors, row.bob_ci()),
                ("eve", row.eve_ber, row.eve_bit_errors, row.eve_ci()),
            ] {
                w.write_record([
                    fmt_f64(row.snr_db),
                    name.to_string(),
                    fmt_f64(ber),
                    errors.to_string(),
                    row.total_bits.to_string(),
                    fmt_f64(ci.0),
                    fmt_f64(ci.1),
                ])
                .map_err(io)?;
            }
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
    }

    /// Parses rows written by [`Self::write_csv`].
    pub fn read_csv<R: Read>(input: R) -> Result<Vec<BerRow>> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers().map_err(|e| Error::Parse(e.to_string()))?;
        if header.iter().ne(CSV_HEADER) {
            return Err(Error::Parse(format!("unexpected BER CSV header: {header:?}")));
        }
        let mut records = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let f = |i: usize| -> Result<f64> {
                rec[i].parse().map_err(|_| Error::Parse(format!("bad number '{}'", &rec[i])))
            };
            let u = |i: usize| -> Result<u64> {
                rec[i].parse().map_err(|_| Error::Parse(format!("bad count '{}'", &rec[i])))
            };
            records.push((f(0)?, rec[1].to_string(), f(2)?, u(3)?, u(4)?));
        }
        if records.len() % 2 != 0 {
            return Err(Error::Parse("BER CSV must hold bob/eve row pairs".into()));
        }
        records
            .chunks(2)
            .map(|pair| {
                let (b, e) = (&pair[0], &pair[1]);
                if b.1 != "bob" || e.1 != "eve" || b.0 != e.0 || b.4 != e.4 {
                    return Err(Error::Parse(format!("mismatched bob/eve rows at snr_db={}", b.0)));
                }
                Ok(BerRow {
                    snr_db: b.0,
                    bob_ber: b.2,
                    eve_ber: e.2,
                    bob_bit_errors: b.3,
                    eve_bit_errors: e.3,
                    total_bits: b.4,
                })
            })
            .collect()
    }

    /// Structured summary including confidence intervals.
    pub fn to_json(&self) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                serde_json::json!({
                    "snr_db": r.snr_db,
                    "bob_ber": r.bob_ber,
                    "eve_ber": r.eve_ber,
                    "bob_bit_errors": r.bob_bit_errors,
                    "eve_bit_errors": r.eve_bit_errors,
                    "total_bits": r.total_bits,
                    "bob_ci": r.bob_ci(),
                    "eve_ci": r.eve_ci(),
                })
            })
            .collect();
        let value = serde_json::json!({
            "config": self.config,
            "rows": rows,
            "wall_time_s": self.wall_time_s,
        });
        serde_json::to_string_pretty(&value).unwrap_or_default()
    }
}

/// RNG of trial `trial` at SNR index `snr_index`.
pub fn trial_rng(master_seed: u64, snr_index: usize, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((snr_index as u64) << 32) | trial);
    rng
}

fn count_errors(a: &[u8], b: &[u8]) -> u64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u64
}

/// One trial: returns `(bob_bit_errors, eve_bit_errors)`.
///
/// Draw order is fixed: Bob's channel, Alice's key, bits, Bob's noise, then
/// Eve's channel, Eve's noise and Eve's key, so Bob's outcome does not
/// depend on the scenario or on Eve's strategy.
fn run_trial(config: &BerConfig, prep: &Prepared, sigma2: f64, rng: &mut ChaCha8Rng) -> Result<(u64, u64)> {
    let n = config.n;
    let bob_channel = match &prep.channels {
        Some((bob, _)) => bob.clone(),
        None => config.channel.sample(rng)?,
    };
    let alice = match &prep.alice_fixed {
        Some(k) => k.clone(),
        None => PermutationKey::random(n, rng),
    };
    let c = &prep.constellation;
    let bits: Vec<u8> = (0..n * c.bits_per_symbol()).map(|_| rng.random_range(0..2u8)).collect();
    let x = map_bits(&bits, c)?;
    let s = prep.fast.inverse(&alice, &x)?;

    let mut r_bob = bob_channel.apply(&s)?;
    for (v, w) in r_bob.iter_mut().zip(awgn(n, sigma2, rng)) {
        *v += w;
    }
    let s_bob = mmse_time_domain(&r_bob, bob_channel.matrix(), sigma2)?;
    let bob_bits = demap_symbols(&prep.fast.forward(&alice, &s_bob)?, c);

    let s_eve = match config.scenario {
        Scenario::Colocated => {
            let eve_channel = match &prep.channels {
                Some((_, eve)) => eve,
                None => &bob_channel,
            };
            if eve_channel.matrix() != bob_channel.matrix() {
                return Err(Error::Numerical("co-located channels differ".into()));
            }
            // Same r and same H: Eve's time-domain estimate is Bob's.
            s_bob
        }
        Scenario::Remote => {
            let eve_channel = match &prep.channels {
                Some((_, eve)) => eve.clone(),
                None => config.channel.sample(rng)?,
            };
            let mut r_eve = eve_channel.apply(&s)?;
            for (v, w) in r_eve.iter_mut().zip(awgn(n, sigma2, rng)) {
                *v += w;
            }
            mmse_time_domain(&r_eve, eve_channel.matrix(), sigma2)?
        }
    };
    let eve_key = match &config.eve_strategy {
        EveStrategy::RandomKey => PermutationKey::random(n, rng),
        EveStrategy::FixedPointBounded { l_max } => sample_perm_with_at_most_fixed_points(n, *l_max, &alice, rng)?,
        EveStrategy::ExactFixedPoints { l } => sample_perm_with_fixed_points(n, *l, &alice, rng)?,
        EveStrategy::FixedKey { .. } => prep.eve_fixed.clone().expect("fixed Eve key prepared"),
    };
    let eve_bits = demap_symbols(&prep.fast.forward(&eve_key, &s_eve)?, c);
    Ok((count_errors(&bob_bits, &bits), count_errors(&eve_bits, &bits)))
}

fn run_points(config: &BerConfig) -> Result<BerReport> {
    let start = Instant::now();
    let prep = config.prepare()?;
    let bits_per_trial = (config.n * prep.constellation.bits_per_symbol()) as u64;
    let mut rows = Vec::with_capacity(config.snr_grid_db.len());
    for (snr_index, &snr_db) in config.snr_grid_db.iter().enumerate() {
        let sigma2 = noise_variance(snr_db);
        let outcomes: Vec<Result<(u64, u64)>> = (0..config.trials_per_point)
            .into_par_iter()
            .map(|trial| {
                let mut rng = trial_rng(config.master_seed, snr_index, trial);
                run_trial(config, &prep, sigma2, &mut rng)
            })
            .collect();
        let (mut bob, mut eve) = (0u64, 0u64);
        for (trial, outcome) in outcomes.into_iter().enumerate() {
            let (b, e) = outcome.map_err(|source| Error::TrialFailed {
                snr_index,
                trial: trial as u64,
                source: Box::new(source),
            })?;
            bob += b;
            eve += e;
        }
        rows.push(BerRow::from_counts(
            snr_db,
            bob,
            eve,
            bits_per_trial * config.trials_per_point,
        ));
    }
    Ok(BerReport {
        config: config.clone(),
        rows,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Runs the experiment on the current rayon pool.
pub fn run_ber(config: &BerConfig) -> Result<BerReport> {
    run_points(config)
}

/// Runs the experiment on a dedicated pool of `workers` threads.
pub fn run_ber_with_workers(config: &BerConfig, workers: usize) -> Result<BerReport> {
    if workers == 0 {
        return Err(Error::InvalidParameter("worker count must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_points(config))
}

/// Eve BER versus her exact number of correct key positions. Every `l`
/// reuses the master seed, so Bob's rows are identical across the sweep.
pub fn run_fixed_point_sweep(config: &BerConfig, l_values: &[usize]) -> Result<Vec<(usize, BerReport)>> {
    for &l in l_values {
        if l > config.n || l + 1 == config.n {
            return Err(Error::InvalidParameter(format!(
                "exactly {l} correct positions is impossible for N={}",
                config.n
            )));
        }
    }
    l_values
        .iter()
        .map(|&l| {
            let cfg = BerConfig {
                eve_strategy: EveStrategy::ExactFixedPoints { l },
                ..config.clone()
            };
            run_ber(&cfg).map(|r| (l, r))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n: usize) -> BerConfig {
        BerConfig {
            n,
            snr_grid_db: vec![0.0, 10.0, 20.0],
            trials_per_point: 200,
            channel: ChannelScenarioConfig { n, ..Default::default() },
            master_seed: 7,
            ..Default::default()
        }
    }

    #[test]
    fn validation() {
        assert!(small(16).validate().is_ok());
        assert!(BerConfig { trials_per_point: 0, ..small(16) }.validate().is_err());
        assert!(BerConfig { snr_grid_db: vec![], ..small(16) }.validate().is_err());
        assert!(BerConfig { snr_grid_db: vec![f64::NAN], ..small(16) }.validate().is_err());
        assert!(BerConfig { n: 8, ..small(16) }.validate().is_err());
        let bad_l = BerConfig { eve_strategy: EveStrategy::ExactFixedPoints { l: 15 }, ..small(16) };
        assert!(bad_l.validate().is_err());
        let bad_rank = BerConfig { eve_strategy: EveStrategy::FixedKey { rank: "abc".into() }, ..small(16) };
        assert!(bad_rank.validate().is_err());
        let big_rank = BerConfig { eve_strategy: EveStrategy::FixedKey { rank: "24".into() }, ..small(4) };
        assert!(BerConfig { channel: ChannelScenarioConfig { n: 4, max_delay: 2, ..Default::default() }, ..big_rank }
            .validate()
            .is_err());
        assert!(run_fixed_point_sweep(&small(16), &[15]).is_err());
    }

    #[test]
    fn strategy_parsing() {
        for s in ["random", "bounded:10", "exact:3", "fixed:123456789012345678901234567890"] {
            let parsed: EveStrategy = s.parse().unwrap();
            assert_eq!(parsed.to_string(), s);
        }
        assert!("bounded".parse::<EveStrategy>().is_err());
        assert!("fixed:-1".parse::<EveStrategy>().is_err());
        assert!("guess".parse::<EveStrategy>().is_err());
        assert_eq!("co-located".parse::<Scenario>().unwrap(), Scenario::Colocated);
    }

    #[test]
    fn wilson_interval_basics() {
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo + hi - 1.0).abs() < 1e-12);
        assert!((lo - 0.4038).abs() < 1e-3, "{lo}");
        assert_eq!(wilson_interval(0, 100).0, 0.0);
        assert!(wilson_interval(0, 100).1 > 0.0);
        assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
    }

    #[test]
    fn deterministic_across_workers_and_csv_round_trip() {
        let cfg = small(16);
        let a = run_ber_with_workers(&cfg, 1).unwrap();
        let b = run_ber_with_workers(&cfg, 3).unwrap();
        assert_eq!(a.rows, b.rows);
        let text = a.to_csv_string().unwrap();
        assert_eq!(text, b.to_csv_string().unwrap());
        assert_eq!(BerReport::read_csv(text.as_bytes()).unwrap(), a.rows);
        assert_eq!(text.lines().count(), 1 + 2 * cfg.snr_grid_db.len());
        let json: serde_json::Value = serde_json::from_str(&a.to_json()).unwrap();
        assert_eq!(json["rows"].as_array().unwrap().len(), 3);
        let other = run_ber(&BerConfig { master_seed: 8, ..cfg }).unwrap();
        assert_ne!(other.rows, a.rows);
    }

    #[test]
    fn bob_improves_and_eve_is_chance() {
        let r = run_ber(&small(32)).unwrap();
        assert!(r.rows[0].bob_ber > r.rows[2].bob_ber);
        for row in &r.rows {
            assert!(row.eve_ber > 0.4 && row.eve_ber < 0.6, "{row:?}");
            assert!(row.bob_bit_errors <= row.total_bits);
        }
    }

    #[test]
    fn colocated_full_key_matches_bob() {
        let cfg = BerConfig { scenario: Scenario::Colocated, ..small(16) };
        let sweep = run_fixed_point_sweep(&cfg, &[0, 16]).unwrap();
        let bob = &sweep[0].1.rows;
        assert_eq!(bob.iter().map(|r| r.bob_bit_errors).collect::<Vec<_>>(),
                   sweep[1].1.rows.iter().map(|r| r.bob_bit_errors).collect::<Vec<_>>());
        for row in &sweep[1].1.rows {
            assert_eq!(row.eve_bit_errors, row.bob_bit_errors);
        }
    }

    #[test]
    fn fixed_policies() {
        let cfg = BerConfig {
            alice_key: AliceKeyPolicy::Fixed { rank: "12345".into() },
            channel_policy: ChannelPolicy::Fixed,
            eve_strategy: EveStrategy::FixedKey { rank: "12345".into() },
            scenario: Scenario::Colocated,
            ..small(8)
        };
        let r = run_ber(&cfg).unwrap();
        for row in &r.rows {
            assert_eq!(row.eve_bit_errors, row.bob_bit_errors);
        }
    }

    #[test]
    fn high_snr_bob_is_error_free() {
        let cfg = BerConfig { snr_grid_db: vec![60.0], trials_per_point: 500, ..small(32) };
        let r = run_ber(&cfg).unwrap();
        assert!(r.rows[0].bob_ber < 1e-4, "{:?}", r.rows[0]);
    }
}
