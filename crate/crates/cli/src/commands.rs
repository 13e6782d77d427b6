use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, ensure, Context, Result};
use clap::Args;
use cpafdm::link::{row_support_counts, support_mask};
use cpafdm::security::{fmt_f64, sci_from_log10};
use cpafdm::sim::run_ber_with_workers;
use cpafdm::{
    effective_channel as compute_effective_channel, mismatched_effective_channel, quantum_cost,
    run_ber, AliceKeyPolicy, BerConfig, BerReport, BigUint, ChannelPolicy, ChannelScenarioConfig,
    ChirpProfile, CMatrix, DelayDopplerChannel, EveStrategy, GuessDistribution, Modulation,
    PermutationKey, Scenario,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{load, unix_ms, Format, Outputs};
use crate::Common;

/// Environment variable selecting the number of simulation worker threads.
pub const WORKERS_ENV: &str = "CPAFDM_WORKERS";

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn out_dir(common: &Common) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn parse_rank(text: &str) -> Result<BigUint> {
    BigUint::from_str(text.trim()).with_context(|| format!("invalid key rank '{text}' (expected a decimal integer)"))
}

/// Key from a decimal rank or an explicit permutation; `None` if neither.
fn explicit_key(rank: &Option<String>, perm: &Option<Vec<usize>>, n: usize, what: &str) -> Result<Option<PermutationKey>> {
    match (rank, perm) {
        (Some(_), Some(_)) => bail!("give either a rank or a permutation for the {what}, not both"),
        (Some(r), None) => Ok(Some(PermutationKey::from_rank(&parse_rank(r)?, n)?)),
        (None, Some(p)) => {
            ensure!(p.len() == n, "{what} permutation has {} entries, expected N={n}", p.len());
            Ok(Some(PermutationKey::from_perm(p.clone())?))
        }
        (None, None) => Ok(None),
    }
}

fn comma_list(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

/// SNR grid flag value.
#[derive(Clone, Debug)]
pub struct Grid(Vec<f64>);

/// Parses `start:step:stop` or a comma-separated list.
fn parse_grid(text: &str) -> std::result::Result<Grid, String> {
    parse_values(text).map(Grid)
}

fn parse_values(text: &str) -> std::result::Result<Vec<f64>, String> {
    let nums = |sep: char| -> std::result::Result<Vec<f64>, String> {
        text.split(sep)
            .map(|t| t.trim().parse::<f64>().map_err(|_| format!("'{t}' is not a number")))
            .collect()
    };
    if text.contains(':') {
        let p = nums(':')?;
        let [start, step, stop] = p[..] else {
            return Err("range must be start:step:stop".into());
        };
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start {
            return Err("range needs step > 0 and stop >= start".into());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| start + step * i as f64).collect())
    } else {
        nums(',')
    }
}

fn workers() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => {
            let w: usize = v
                .trim()
                .parse()
                .with_context(|| format!("{WORKERS_ENV}='{v}' is not a positive integer"))?;
            ensure!(w > 0, "{WORKERS_ENV} must be at least 1");
            Ok(Some(w))
        }
        Err(_) => Ok(None),
    }
}

fn simulate(config: &BerConfig) -> Result<BerReport> {
    Ok(match workers()? {
        Some(w) => run_ber_with_workers(config, w)?,
        None => run_ber(config)?,
    })
}

// ---------------------------------------------------------------- effective-channel

#[derive(Args, Debug)]
pub struct EffectiveChannelArgs {
    /// Number of subcarriers.
    #[arg(long)]
    n: Option<usize>,
    /// First chirp frequency (default: full-diversity value for the Doppler spread).
    #[arg(long)]
    c1: Option<f64>,
    /// Second chirp frequency.
    #[arg(long)]
    c2: Option<f64>,
    /// Transmit key as a decimal rank.
    #[arg(long, value_name = "RANK")]
    key_rank: Option<String>,
    /// Transmit key as a comma-separated permutation of 0..N.
    #[arg(long, value_delimiter = ',', value_name = "P0,P1,...")]
    key_perm: Option<Vec<usize>>,
    /// Mismatched demodulator key as a decimal rank.
    #[arg(long, value_name = "RANK")]
    eve_rank: Option<String>,
    /// Mismatched demodulator key as a comma-separated permutation.
    #[arg(long, value_delimiter = ',', value_name = "P0,P1,...")]
    eve_perm: Option<Vec<usize>>,
    /// Channel realization as JSON (n, c1, prefix, paths); random if omitted.
    #[arg(long, value_name = "PATH")]
    channel: Option<PathBuf>,
    /// Number of paths of the random channel.
    #[arg(long)]
    paths: Option<usize>,
    /// Largest delay of the random channel.
    #[arg(long)]
    max_delay: Option<usize>,
    /// Largest normalized Doppler of the random channel.
    #[arg(long)]
    max_doppler: Option<f64>,
    /// Draw fractional rather than integer Doppler shifts.
    #[arg(long)]
    fractional_doppler: bool,
    /// Magnitude threshold of the support masks.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EffectiveChannelConfig {
    pub n: usize,
    pub c2: Option<f64>,
    pub key_rank: Option<String>,
    pub key_perm: Option<Vec<usize>>,
    pub eve_rank: Option<String>,
    pub eve_perm: Option<Vec<usize>>,
    pub channel_file: Option<PathBuf>,
    pub channel: ChannelScenarioConfig,
    pub seed: u64,
    pub threshold: f64,
}

impl Default for EffectiveChannelConfig {
    fn default() -> Self {
        Self {
            n: 64,
            c2: None,
            key_rank: None,
            key_perm: None,
            eve_rank: None,
            eve_perm: None,
            channel_file: None,
            channel: ChannelScenarioConfig::default(),
            seed: 0,
            threshold: 1e-9,
        }
    }
}

fn long_rows(name: &str, m: &CMatrix, w: &mut csv::Writer<Vec<u8>>) -> Result<()> {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            w.write_record([name.to_string(), r.to_string(), c.to_string(), fmt_f64(z.norm()), fmt_f64(z.arg())])?;
        }
    }
    Ok(())
}

fn magnitude_grid(m: &CMatrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|row| row.iter().map(|z| z.norm()).collect()).collect()
}

fn grid_csv(m: &CMatrix) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in magnitude_grid(m) {
        w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
    }
    Ok(w.into_inner()?)
}

pub fn effective_channel(common: &Common, args: EffectiveChannelArgs) -> Result<String> {
    let started = unix_ms();
    let (mut cfg, file_format) = load::<EffectiveChannelConfig>(common.config.as_deref(), "effective-channel")?;
    set(&mut cfg.n, args.n);
    set(&mut cfg.c2, args.c2.map(Some));
    set(&mut cfg.key_rank, args.key_rank.map(Some));
    set(&mut cfg.key_perm, args.key_perm.map(Some));
    set(&mut cfg.eve_rank, args.eve_rank.map(Some));
    set(&mut cfg.eve_perm, args.eve_perm.map(Some));
    set(&mut cfg.channel_file, args.channel.map(Some));
    set(&mut cfg.channel.c1, args.c1.map(Some));
    set(&mut cfg.channel.paths, args.paths);
    set(&mut cfg.channel.max_delay, args.max_delay);
    set(&mut cfg.channel.max_doppler, args.max_doppler);
    cfg.channel.fractional_doppler |= args.fractional_doppler;
    set(&mut cfg.threshold, args.threshold);
    set(&mut cfg.seed, common.seed);
    cfg.channel.n = cfg.n;
    let format = common.format.or(file_format).unwrap_or_default();
    ensure!(cfg.threshold > 0.0, "threshold must be positive");

    let n = cfg.n;
    let profile = ChirpProfile::new(n, cfg.channel.c1(), cfg.c2.unwrap_or(ChirpProfile::DEFAULT_C2))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let channel = match &cfg.channel_file {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read channel {}", path.display()))?;
            let h = DelayDopplerChannel::from_json(&text)?;
            ensure!(h.n() == n, "channel file has N={}, expected N={n}", h.n());
            h
        }
        None => cfg.channel.sample(&mut rng)?,
    };
    let alice = match explicit_key(&cfg.key_rank, &cfg.key_perm, n, "transmit key")? {
        Some(k) => k,
        None => PermutationKey::random(n, &mut rng),
    };
    let eve = match explicit_key(&cfg.eve_rank, &cfg.eve_perm, n, "demodulator key")? {
        Some(k) => k,
        None => loop {
            let k = PermutationKey::random(n, &mut rng);
            if k != alice {
                break k;
            }
        },
    };

    let classic = compute_effective_channel(&channel, &profile, &PermutationKey::identity(n))?.matrix;
    let matched = compute_effective_channel(&channel, &profile, &alice)?.matrix;
    let mismatched = mismatched_effective_channel(&channel, &profile, &alice, &eve)?;
    let identical = support_mask(&matched, cfg.threshold) == support_mask(&classic, cfg.threshold);
    let counts: Vec<(&str, Vec<usize>)> = [("classic", &classic), ("matched", &matched), ("mismatched", &mismatched)]
        .into_iter()
        .map(|(name, m)| (name, row_support_counts(m, cfg.threshold)))
        .collect();

    let mut out = Outputs::new(&out_dir(common))?;
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["matrix", "row", "col", "magnitude", "phase"])?;
            long_rows("classic", &classic, &mut w)?;
            long_rows("matched", &matched, &mut w)?;
            long_rows("mismatched", &mismatched, &mut w)?;
            out.write("effective_channel.csv", &w.into_inner()?)?;
            out.write("grid_classic.csv", &grid_csv(&classic)?)?;
            out.write("grid_matched.csv", &grid_csv(&matched)?)?;
            out.write("grid_mismatched.csv", &grid_csv(&mismatched)?)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["row", "classic", "matched", "mismatched"])?;
            for r in 0..n {
                w.write_record([r.to_string(), counts[0].1[r].to_string(), counts[1].1[r].to_string(), counts[2].1[r].to_string()])?;
            }
            out.write("sparsity.csv", &w.into_inner()?)?;
        }
        Format::Json => {
            let doc = serde_json::json!({
                "n": n,
                "threshold": cfg.threshold,
                "support_identical": identical,
                "alice_rank": alice.rank().to_string(),
                "eve_rank": eve.rank().to_string(),
                "magnitude": {
                    "classic": magnitude_grid(&classic),
                    "matched": magnitude_grid(&matched),
                    "mismatched": magnitude_grid(&mismatched),
                },
                "row_support": {
                    "classic": counts[0].1,
                    "matched": counts[1].1,
                    "mismatched": counts[2].1,
                },
            });
            out.write("effective_channel.json", serde_json::to_string_pretty(&doc)?.as_bytes())?;
        }
    }

    let mut text = String::new();
    writeln!(text, "N={n} c1={} c2={}", profile.c1(), profile.c2())?;
    writeln!(text, "transmit key rank: {}", alice.rank())?;
    writeln!(text, "demodulator key rank: {}", eve.rank())?;
    writeln!(text, "support masks identical (classic vs matched, threshold {:e}): {identical}", cfg.threshold)?;
    for (name, c) in &counts {
        let lo = c.iter().min().copied().unwrap_or(0);
        let hi = c.iter().max().copied().unwrap_or(0);
        writeln!(text, "nonzeros per row, {name}: {lo}..{hi}")?;
    }
    for f in out.files() {
        writeln!(text, "wrote {}", f.display())?;
    }
    let manifest = out.finish("effective-channel", &cfg, cfg.seed, format, started)?;
    writeln!(text, "manifest {}", manifest.display())?;
    Ok(text)
}

// ---------------------------------------------------------------- guess-prob

#[derive(Args, Debug)]
pub struct GuessProbArgs {
    /// Key lengths to tabulate, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Report the probability of at most this many correct positions.
    #[arg(long)]
    l_max: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuessProbConfig {
    pub n: Vec<usize>,
    pub l_max: usize,
}

impl Default for GuessProbConfig {
    fn default() -> Self {
        Self { n: vec![64, 3300], l_max: 10 }
    }
}

pub fn guess_prob(common: &Common, args: GuessProbArgs) -> Result<String> {
    let started = unix_ms();
    let (mut cfg, file_format) = load::<GuessProbConfig>(common.config.as_deref(), "guess-prob")?;
    set(&mut cfg.n, args.n);
    set(&mut cfg.l_max, args.l_max);
    let format = common.format.or(file_format).unwrap_or_default();
    ensure!(!cfg.n.is_empty(), "at least one N is required");
    for &n in &cfg.n {
        ensure!(cfg.l_max <= n, "l_max={} exceeds N={n}", cfg.l_max);
    }

    let mut out = Outputs::new(&out_dir(common))?;
    let mut text = String::new();
    let mut json = serde_json::Map::new();
    for &n in &cfg.n {
        let d = GuessDistribution::new(n)?;
        let cdf = d.cdf_wrong()[cfg.l_max];
        writeln!(
            text,
            "N={n} CDF(l<={}) = P(at least {} wrong) = {cdf:.17}",
            cfg.l_max,
            n - cfg.l_max
        )?;
        match format {
            Format::Csv => {
                let mut buf = Vec::new();
                d.write_csv(&mut buf)?;
                out.write(&format!("guess_prob_n{n}.csv"), &buf)?;
            }
            Format::Json => {
                json.insert(
                    n.to_string(),
                    serde_json::json!({
                        "precision": d.precision(),
                        "pmf": d.pmf(),
                        "log10_pmf": d.ln_pmf().iter().map(|v| v / std::f64::consts::LN_10).collect::<Vec<_>>(),
                        "cdf_at_least_n_minus_l_wrong": d.cdf_wrong(),
                        "cdf_l_max": cdf,
                    }),
                );
            }
        }
    }
    if format == Format::Json {
        let doc = serde_json::json!({ "l_max": cfg.l_max, "tables": json });
        out.write("guess_prob.json", serde_json::to_string_pretty(&doc)?.as_bytes())?;
    }
    for f in out.files() {
        writeln!(text, "wrote {}", f.display())?;
    }
    let manifest = out.finish("guess-prob", &cfg, common.seed.unwrap_or(0), format, started)?;
    writeln!(text, "manifest {}", manifest.display())?;
    Ok(text)
}

// ---------------------------------------------------------------- attack-cost

#[derive(Args, Debug)]
pub struct AttackCostArgs {
    /// Key length.
    #[arg(long)]
    n: Option<usize>,
    /// Physical qubits per logical qubit, lower end.
    #[arg(long)]
    overhead_low: Option<f64>,
    /// Physical qubits per logical qubit, upper end.
    #[arg(long)]
    overhead_high: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackCostConfig {
    pub n: usize,
    pub overhead_low: f64,
    pub overhead_high: f64,
}

impl Default for AttackCostConfig {
    fn default() -> Self {
        Self {
            n: 3300,
            overhead_low: 1e3,
            overhead_high: 1e4,
        }
    }
}

pub fn attack_cost(common: &Common, args: AttackCostArgs) -> Result<String> {
    let started = unix_ms();
    let (mut cfg, file_format) = load::<AttackCostConfig>(common.config.as_deref(), "attack-cost")?;
    set(&mut cfg.n, args.n);
    set(&mut cfg.overhead_low, args.overhead_low);
    set(&mut cfg.overhead_high, args.overhead_high);
    let format = common.format.or(file_format);

    let r = quantum_cost(cfg.n, cfg.overhead_low, cfg.overhead_high)?;
    let sci = |x: f64| sci_from_log10(x, 1);
    let mut text = String::new();
    if format == Some(Format::Json) {
        text = serde_json::to_string_pretty(&r)? + "\n";
    } else {
        writeln!(text, "n: {}", r.n)?;
        writeln!(text, "per_eval_cost: {} (log10 {:.2})", r.per_eval_cost.label, r.per_eval_cost.log10)?;
        writeln!(text, "classical_evals: {} (log10 {:.2})", sci(r.classical_log10_evals), r.classical_log10_evals)?;
        if let Some(exact) = &r.classical_evals_exact {
            writeln!(text, "classical_evals_exact: {exact}")?;
        }
        writeln!(text, "classical_ops: {} (log10 {:.2})", sci(r.classical_log10_ops), r.classical_log10_ops)?;
        writeln!(text, "gas_queries: {} (log10 {:.2})", sci(r.gas_log10_queries), r.gas_log10_queries)?;
        writeln!(
            text,
            "gas_queries_stirling_form: {} (log10 {:.2})",
            sci(r.gas_log10_queries_stirling),
            r.gas_log10_queries_stirling
        )?;
        writeln!(text, "logical_qubits: {:.2}", r.logical_qubits)?;
        writeln!(text, "logical_qubits_stirling_truncated: {:.2}", r.logical_qubits_stirling)?;
        let (lo, hi) = r.physical_qubits_range;
        writeln!(
            text,
            "physical_qubits: {} - {} (overhead {} - {})",
            sci(lo.log10()),
            sci(hi.log10()),
            sci(r.overhead_range.0.log10()),
            sci(r.overhead_range.1.log10())
        )?;
    }
    if common.out.is_some() {
        let format = format.unwrap_or_default();
        let mut out = Outputs::new(&out_dir(common))?;
        match format {
            Format::Json => out.write("attack_cost.json", text.as_bytes())?,
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["key", "value"])?;
                let value = serde_json::to_value(&r)?;
                for (k, v) in value.as_object().into_iter().flatten() {
                    w.write_record([k.as_str(), &v.to_string()])?;
                }
                out.write("attack_cost.csv", &w.into_inner()?)?
            }
        };
        for f in out.files() {
            writeln!(text, "wrote {}", f.display())?;
        }
        let manifest = out.finish("attack-cost", &cfg, common.seed.unwrap_or(0), format, started)?;
        writeln!(text, "manifest {}", manifest.display())?;
    }
    Ok(text)
}

// ---------------------------------------------------------------- ber

#[derive(Args, Debug)]
pub struct BerArgs {
    /// Number of subcarriers.
    #[arg(long)]
    n: Option<usize>,
    /// Constellation: bpsk, qpsk, 16qam or 64qam.
    #[arg(long)]
    modulation: Option<Modulation>,
    /// SNR grid in dB, as start:step:stop or a comma-separated list.
    #[arg(long, value_parser = parse_grid, value_name = "GRID")]
    snr: Option<Grid>,
    /// Monte Carlo trials per SNR point.
    #[arg(long)]
    trials: Option<u64>,
    /// Eavesdropper placement: remote or colocated.
    #[arg(long)]
    scenario: Option<Scenario>,
    /// Eve's key: random, bounded:L, exact:L or fixed:RANK.
    #[arg(long, value_name = "STRATEGY")]
    eve: Option<EveStrategy>,
    /// Use one fixed transmit key with this decimal rank.
    #[arg(long, value_name = "RANK")]
    alice_rank: Option<String>,
    /// Keep one channel realization for the whole run.
    #[arg(long)]
    fixed_channel: bool,
    /// Second chirp frequency.
    #[arg(long)]
    c2: Option<f64>,
    /// Number of channel paths.
    #[arg(long)]
    paths: Option<usize>,
    /// Largest channel delay.
    #[arg(long)]
    max_delay: Option<usize>,
    /// Largest normalized Doppler.
    #[arg(long)]
    max_doppler: Option<f64>,
    /// Draw fractional rather than integer Doppler shifts.
    #[arg(long)]
    fractional_doppler: bool,
}

impl BerArgs {
    fn apply(self, cfg: &mut BerConfig, seed: Option<u64>) -> Result<()> {
        set(&mut cfg.n, self.n);
        set(&mut cfg.modulation, self.modulation);
        set(&mut cfg.snr_grid_db, self.snr.map(|g| g.0));
        set(&mut cfg.trials_per_point, self.trials);
        set(&mut cfg.scenario, self.scenario);
        set(&mut cfg.eve_strategy, self.eve);
        if let Some(rank) = self.alice_rank {
            parse_rank(&rank)?;
            cfg.alice_key = AliceKeyPolicy::Fixed { rank };
        }
        if self.fixed_channel {
            cfg.channel_policy = ChannelPolicy::Fixed;
        }
        set(&mut cfg.c2, self.c2.map(Some));
        set(&mut cfg.channel.paths, self.paths);
        set(&mut cfg.channel.max_delay, self.max_delay);
        set(&mut cfg.channel.max_doppler, self.max_doppler);
        cfg.channel.fractional_doppler |= self.fractional_doppler;
        set(&mut cfg.master_seed, seed);
        cfg.channel.n = cfg.n;
        cfg.channel.colocated = cfg.scenario == Scenario::Colocated;
        cfg.validate()?;
        Ok(())
    }
}

fn report_lines(text: &mut String, report: &BerReport) -> Result<()> {
    for row in &report.rows {
        writeln!(
            text,
            "snr_db={} bob_ber={} eve_ber={} bits={}",
            fmt_f64(row.snr_db),
            fmt_f64(row.bob_ber),
            fmt_f64(row.eve_ber),
            row.total_bits
        )?;
    }
    Ok(())
}

pub fn ber(common: &Common, args: BerArgs) -> Result<String> {
    let started = unix_ms();
    let (mut cfg, file_format) = load::<BerConfig>(common.config.as_deref(), "ber")?;
    args.apply(&mut cfg, common.seed)?;
    let format = common.format.or(file_format).unwrap_or_default();

    let report = simulate(&cfg)?;
    let mut out = Outputs::new(&out_dir(common))?;
    match format {
        Format::Csv => out.write("ber.csv", report.to_csv_string()?.as_bytes())?,
        Format::Json => out.write("ber.json", report.to_json().as_bytes())?,
    };
    let mut text = String::new();
    report_lines(&mut text, &report)?;
    writeln!(text, "wall_time_s={:.2}", report.wall_time_s)?;
    for f in out.files() {
        writeln!(text, "wrote {}", f.display())?;
    }
    let manifest = out.finish("ber", &cfg, cfg.master_seed, format, started)?;
    writeln!(text, "manifest {}", manifest.display())?;
    Ok(text)
}

// ---------------------------------------------------------------- ber-sweep-l

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    ber: BerArgs,
    /// Numbers of correct key positions to sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    l: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    #[serde(flatten)]
    pub ber: BerConfig,
    pub l_values: Vec<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            ber: BerConfig::default(),
            l_values: vec![0, 16, 32, 48, 64],
        }
    }
}

pub fn ber_sweep_l(common: &Common, args: SweepArgs) -> Result<String> {
    let started = unix_ms();
    let (mut cfg, file_format) = load::<SweepConfig>(common.config.as_deref(), "ber-sweep-l")?;
    set(&mut cfg.l_values, args.l);
    args.ber.apply(&mut cfg.ber, common.seed)?;
    let format = common.format.or(file_format).unwrap_or_default();
    ensure!(!cfg.l_values.is_empty(), "at least one l value is required");
    for &l in &cfg.l_values {
        ensure!(
            l <= cfg.ber.n && l + 1 != cfg.ber.n,
            "exactly {l} correct positions is impossible for N={}",
            cfg.ber.n
        );
    }

    let mut out = Outputs::new(&out_dir(common))?;
    let mut text = String::new();
    let mut json = Vec::new();
    for &l in &cfg.l_values {
        let run = BerConfig {
            eve_strategy: EveStrategy::ExactFixedPoints { l },
            ..cfg.ber.clone()
        };
        let report = simulate(&run)?;
        writeln!(text, "l={l}")?;
        report_lines(&mut text, &report)?;
        match format {
            Format::Csv => {
                out.write(&format!("ber_l{l}.csv"), report.to_csv_string()?.as_bytes())?;
            }
            Format::Json => {
                let value: serde_json::Value = serde_json::from_str(&report.to_json())?;
                json.push(serde_json::json!({ "l": l, "report": value }));
            }
        }
    }
    if format == Format::Json {
        out.write("ber_sweep_l.json", serde_json::to_string_pretty(&json)?.as_bytes())?;
    }
    for f in out.files() {
        writeln!(text, "wrote {}", f.display())?;
    }
    let manifest = out.finish("ber-sweep-l", &cfg, cfg.ber.master_seed, format, started)?;
    writeln!(text, "manifest {}", manifest.display())?;
    Ok(text)
}

// ---------------------------------------------------------------- key

#[derive(Args, Debug)]
pub struct KeyArgs {
    /// Key length (implied by --perm).
    #[arg(long)]
    n: Option<usize>,
    /// Decimal rank to decode.
    #[arg(long, value_name = "RANK")]
    rank: Option<String>,
    /// Comma-separated permutation to encode.
    #[arg(long, value_delimiter = ',', value_name = "P0,P1,...")]
    perm: Option<Vec<usize>>,
    /// Draw a uniformly random key from the seed.
    #[arg(long)]
    random: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KeyConfig {
    pub n: Option<usize>,
    pub rank: Option<String>,
    pub perm: Option<Vec<usize>>,
    pub random: bool,
    pub seed: u64,
}

/// First 16 hex digits of SHA-256 over the comma-separated permutation.
pub fn fingerprint(key: &PermutationKey) -> String {
    let digest = Sha256::digest(comma_list(key.perm()).as_bytes());
    hex::encode(digest)[..16].to_string()
}

pub fn key(common: &Common, args: KeyArgs) -> Result<String> {
    let started = unix_ms();
    let (mut cfg, file_format) = load::<KeyConfig>(common.config.as_deref(), "key")?;
    set(&mut cfg.n, args.n.map(Some));
    set(&mut cfg.rank, args.rank.map(Some));
    set(&mut cfg.perm, args.perm.map(Some));
    cfg.random |= args.random;
    set(&mut cfg.seed, common.seed);
    let format = common.format.or(file_format);

    let sources = usize::from(cfg.rank.is_some()) + usize::from(cfg.perm.is_some()) + usize::from(cfg.random);
    ensure!(sources == 1, "give exactly one of --rank, --perm or --random");
    let key = if let Some(p) = &cfg.perm {
        if let Some(n) = cfg.n {
            ensure!(n == p.len(), "--perm has {} entries but N={n}", p.len());
        }
        PermutationKey::from_perm(p.clone())?
    } else {
        let n = cfg.n.context("--n is required with --rank or --random")?;
        match &cfg.rank {
            Some(r) => PermutationKey::from_rank(&parse_rank(r)?, n)?,
            None => PermutationKey::random(n, &mut ChaCha8Rng::seed_from_u64(cfg.seed)),
        }
    };

    let mut text = String::new();
    if format == Some(Format::Json) {
        let doc = serde_json::json!({
            "n": key.n(),
            "perm": key.perm(),
            "rank": key.rank().to_string(),
            "order": key.order().to_string(),
            "lehmer": key.lehmer_code(),
            "fingerprint": fingerprint(&key),
        });
        text = serde_json::to_string_pretty(&doc)? + "\n";
    } else {
        writeln!(text, "perm: [{}] (order {})", comma_list(key.perm()), key.order())?;
        writeln!(text, "rank: {}", key.rank())?;
        writeln!(text, "lehmer: [{}]", comma_list(&key.lehmer_code()))?;
        writeln!(text, "fingerprint: sha256:{}", fingerprint(&key))?;
    }
    if common.out.is_some() {
        let format = format.unwrap_or_default();
        let mut out = Outputs::new(&out_dir(common))?;
        match format {
            Format::Json => out.write("key.json", text.as_bytes())?,
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["n", "rank", "perm", "fingerprint"])?;
                w.write_record([key.n().to_string(), key.rank().to_string(), comma_list(key.perm()), fingerprint(&key)])?;
                out.write("key.csv", &w.into_inner()?)?
            }
        };
        for f in out.files() {
            writeln!(text, "wrote {}", f.display())?;
        }
        let manifest = out.finish("key", &cfg, cfg.seed, format, started)?;
        writeln!(text, "manifest {}", manifest.display())?;
    }
    Ok(text)
}
