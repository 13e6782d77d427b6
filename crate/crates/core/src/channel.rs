//! Doubly-dispersive circular-convolution channel.
//!
//! Each path `p` contributes `h_p * Phi_p * Z^{f_p} * Pi^{l_p}` where `Pi` is
//! the circular left shift, `Z` the diagonal roots-of-unity matrix and
//! `Phi_p` the diagonal prefix phase over the first `l_p` samples.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::transforms::{unit_phasor, ChirpProfile};
use crate::CMatrix;

/// Prefix phase function applied to the wrapped-around samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrefixPhase {
    /// AFDM chirp-periodic prefix, `phi(n) = c1 (N^2 - 2 N n)`.
    #[default]
    ChirpPeriodic,
    /// Plain cyclic prefix, `phi = 0`.
    Cyclic,
}

impl PrefixPhase {
    fn phase(self, n: usize, c1: f64, m: usize) -> f64 {
        match self {
            PrefixPhase::ChirpPeriodic => {
                let nf = n as f64;
                c1 * (nf * nf - 2.0 * nf * m as f64)
            }
            PrefixPhase::Cyclic => 0.0,
        }
    }
}

/// One propagation path: complex gain, integer delay, digital Doppler.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "PathRecord", into = "PathRecord")]
pub struct PathParams {
    pub gain: Complex64,
    pub delay: usize,
    pub doppler: f64,
}

#[derive(Serialize, Deserialize)]
struct PathRecord {
    gain_re: f64,
    gain_im: f64,
    delay: usize,
    doppler: f64,
}

impl From<PathRecord> for PathParams {
    fn from(r: PathRecord) -> Self {
        Self {
            gain: Complex64::new(r.gain_re, r.gain_im),
            delay: r.delay,
            doppler: r.doppler,
        }
    }
}

impl From<PathParams> for PathRecord {
    fn from(p: PathParams) -> Self {
        Self {
            gain_re: p.gain.re,
            gain_im: p.gain.im,
            delay: p.delay,
            doppler: p.doppler,
        }
    }
}

/// `Pi^l`: applied to a vector, a circular left shift by `l`.
pub fn shift_matrix_power(n: usize, l: usize) -> Result<DMatrix<f64>> {
    if l >= n {
        return Err(Error::InvalidParameter(format!(
            "shift {l} must be below N={n}; reduce modulo N first"
        )));
    }
    Ok(DMatrix::from_fn(n, n, |r, c| if c == (r + l) % n { 1.0 } else { 0.0 }))
}

/// Diagonal of `Z^f`, entries `exp(-j 2 pi n f / N)`.
pub fn doppler_diag(n: usize, f: f64) -> Vec<Complex64> {
    (0..n).map(|k| unit_phasor(k as f64 * f / n as f64)).collect()
}

/// `Z^f` as a dense diagonal matrix.
pub fn doppler_matrix_power(n: usize, f: f64) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_vec(doppler_diag(n, f)))
}

/// Diagonal of `Phi` for delay `l`: `[e(phi(l)), ..., e(phi(1)), 1, ..., 1]`.
pub fn prefix_phase_diag(n: usize, l: usize, c1: f64, kind: PrefixPhase) -> Result<Vec<Complex64>> {
    if l >= n {
        return Err(Error::InvalidParameter(format!("delay {l} must be below N={n}")));
    }
    Ok((0..n)
        .map(|i| {
            if i < l {
                unit_phasor(kind.phase(n, c1, l - i))
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
        .collect())
}

/// Chirp-periodic prefix phase matrix `Phi` for delay `l`.
pub fn prefix_phase_matrix(n: usize, l: usize, c1: f64) -> Result<CMatrix> {
    let d = prefix_phase_diag(n, l, c1, PrefixPhase::ChirpPeriodic)?;
    Ok(CMatrix::from_diagonal(&nalgebra::DVector::from_vec(d)))
}

/// Serializable description of a channel realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub n: usize,
    pub c1: f64,
    #[serde(default)]
    pub prefix: PrefixPhase,
    pub paths: Vec<PathParams>,
}

/// Assembled channel: path list plus the `N x N` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DelayDopplerChannel {
    spec: ChannelSpec,
    matrix: CMatrix,
}

impl DelayDopplerChannel {
    pub fn from_spec(spec: ChannelSpec) -> Result<Self> {
        build_channel_with(&spec.paths, spec.n, spec.c1, spec.prefix)
    }

    pub fn identity(n: usize) -> Self {
        let path = PathParams {
            gain: Complex64::new(1.0, 0.0),
            delay: 0,
            doppler: 0.0,
        };
        build_channel(&[path], n, 0.0).expect("identity channel is valid")
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn paths(&self) -> &[PathParams] {
        &self.spec.paths
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn spec(&self) -> &ChannelSpec {
        &self.spec
    }

    /// `H s`.
    pub fn apply(&self, s: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.n();
        check_len(n, s.len())?;
        Ok((0..n)
            .map(|r| (0..n).map(|c| self.matrix[(r, c)] * s[c]).sum())
            .collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.spec).expect("channel spec serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ChannelSpec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_spec(spec)
    }
}

/// `H = sum_p h_p Phi_p Z^{f_p} Pi^{l_p}` with the chirp-periodic prefix.
pub fn build_channel(paths: &[PathParams], n: usize, c1: f64) -> Result<DelayDopplerChannel> {
    build_channel_with(paths, n, c1, PrefixPhase::ChirpPeriodic)
}

pub fn build_channel_with(
    paths: &[PathParams],
    n: usize,
    c1: f64,
    prefix: PrefixPhase,
) -> Result<DelayDopplerChannel> {
    if paths.is_empty() {
        return Err(Error::EmptyChannel);
    }
    if n == 0 {
        return Err(Error::InvalidParameter("channel size must be positive".into()));
    }
    let mut matrix = CMatrix::zeros(n, n);
    for p in paths {
        if !p.doppler.is_finite() || !p.gain.re.is_finite() || !p.gain.im.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite path parameters {p:?}")));
        }
        let phi = prefix_phase_diag(n, p.delay, c1, prefix)?;
        let z = doppler_diag(n, p.doppler);
        // Row r of Phi Z Pi^l has its single entry in column (r + l) mod n.
        for r in 0..n {
            matrix[(r, (r + p.delay) % n)] += p.gain * phi[r] * z[r];
        }
    }
    Ok(DelayDopplerChannel {
        spec: ChannelSpec {
            n,
            c1,
            prefix,
            paths: paths.to_vec(),
        },
        matrix,
    })
}

/// Random channel scenario for the legitimate receiver and the eavesdropper.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelScenarioConfig {
    pub n: usize,
    pub paths: usize,
    pub max_delay: usize,
    pub max_doppler: f64,
    pub fractional_doppler: bool,
    pub seed: u64,
    /// Eve shares Bob's channel realization.
    pub colocated: bool,
    /// First chirp frequency used by the prefix phase; defaults to the
    /// full-diversity value for `max_doppler`.
    pub c1: Option<f64>,
    pub prefix: PrefixPhase,
}

impl Default for ChannelScenarioConfig {
    fn default() -> Self {
        Self {
            n: 64,
            paths: 3,
            max_delay: 3,
            max_doppler: 1.0,
            fractional_doppler: false,
            seed: 0,
            colocated: false,
            c1: None,
            prefix: PrefixPhase::ChirpPeriodic,
        }
    }
}

impl ChannelScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!("N must be at least 2, got {}", self.n)));
        }
        if self.paths == 0 {
            return Err(Error::InvalidParameter("path count must be positive".into()));
        }
        if self.max_delay >= self.n {
            return Err(Error::InvalidParameter(format!(
                "max_delay {} must be below N={}",
                self.max_delay, self.n
            )));
        }
        if !(self.max_doppler >= 0.0 && self.max_doppler.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "max_doppler must be finite and non-negative, got {}",
                self.max_doppler
            )));
        }
        Ok(())
    }

    pub fn c1(&self) -> f64 {
        self.c1
            .unwrap_or_else(|| ChirpProfile::default_c1(self.n, self.max_doppler))
    }

    /// Draws a single channel realization.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DelayDopplerChannel> {
        self.validate()?;
        self.draw(rng)
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DelayDopplerChannel> {
        let p = self.paths;
        let sd = (0.5 / p as f64).sqrt();
        let paths: Vec<PathParams> = (0..p)
            .map(|i| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let delay = if i == 0 { 0 } else { rng.random_range(0..=self.max_delay) };
                let u: f64 = rng.random();
                let mut doppler = (2.0 * u - 1.0) * self.max_doppler;
                if !self.fractional_doppler {
                    doppler = doppler.round();
                }
                PathParams {
                    gain: Complex64::new(re * sd, im * sd),
                    delay,
                    doppler,
                }
            })
            .collect();
        build_channel_with(&paths, self.n, self.c1(), self.prefix)
    }
}

/// Draws `(bob, eve)` channels. Co-located scenarios return two copies of the
/// same realization.
pub fn sample_channel<R: Rng + ?Sized>(
    config: &ChannelScenarioConfig,
    rng: &mut R,
) -> Result<(DelayDopplerChannel, DelayDopplerChannel)> {
    config.validate()?;
    let bob = config.draw(rng)?;
    let eve = if config.colocated {
        bob.clone()
    } else {
        config.draw(rng)?
    };
    Ok((bob, eve))
}
