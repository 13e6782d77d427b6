//! CP-AFDM transceiver chain: modulation, reception, demodulation and the
//! effective channel seen through matched and mismatched keys.

mod constellation;
mod detect;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::DelayDopplerChannel;
use crate::error::{check_len, Error, Result};
use crate::transforms::{daft, dft_matrix, ChirpProfile, Direction, PermutationKey};
use crate::{CMatrix, CVector};

pub use constellation::{demap_symbols, map_bits, Constellation, Modulation};
pub use detect::{ml_detect, mmse_equalize, mmse_time_domain, ML_SEARCH_LIMIT};

/// Everything Alice produces for one transmission.
#[derive(Clone, Debug)]
pub struct Frame {
    pub bits: Vec<u8>,
    pub symbols: Vec<Complex64>,
    pub tx_signal: Vec<Complex64>,
    pub noise_variance: f64,
}

impl Frame {
    pub fn new(
        bits: Vec<u8>,
        constellation: &Constellation,
        profile: &ChirpProfile,
        key: &PermutationKey,
        noise_variance: f64,
    ) -> Result<Self> {
        let symbols = map_bits(&bits, constellation)?;
        let tx_signal = modulate(&symbols, profile, key)?;
        Ok(Self {
            bits,
            symbols,
            tx_signal,
            noise_variance,
        })
    }
}

fn mat_vec(m: &CMatrix, v: &[Complex64]) -> Vec<Complex64> {
    (m * CVector::from_column_slice(v)).data.into()
}

/// `s = A_k^{-1} x`.
pub fn modulate(x: &[Complex64], profile: &ChirpProfile, key: &PermutationKey) -> Result<Vec<Complex64>> {
    check_len(profile.n(), x.len())?;
    let inv = daft(profile, key, Direction::Inverse)?;
    Ok(mat_vec(&inv.matrix, x))
}

/// `y = A_k r`.
pub fn demodulate(r: &[Complex64], profile: &ChirpProfile, key: &PermutationKey) -> Result<Vec<Complex64>> {
    check_len(profile.n(), r.len())?;
    let fwd = daft(profile, key, Direction::Forward)?;
    Ok(mat_vec(&fwd.matrix, r))
}

/// Circularly-symmetric complex Gaussian noise with total variance `sigma2`
/// per entry.
pub fn awgn<R: Rng + ?Sized>(len: usize, sigma2: f64, rng: &mut R) -> Vec<Complex64> {
    let sd = (sigma2 / 2.0).sqrt();
    (0..len)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * sd, im * sd)
        })
        .collect()
}

/// `r = H s + w`.
pub fn receive<R: Rng + ?Sized>(
    s: &[Complex64],
    channel: &DelayDopplerChannel,
    sigma2: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be finite and non-negative, got {sigma2}"
        )));
    }
    let mut r = channel.apply(s)?;
    if sigma2 > 0.0 {
        for (v, w) in r.iter_mut().zip(awgn(s.len(), sigma2, rng)) {
            *v += w;
        }
    }
    Ok(r)
}

/// Effective channel `G = A_k H A_k^{-1}` and the key-independent
/// intermediate channel `Xi = F diag(chirp1) H diag(chirp1)^H F^H`.
#[derive(Clone, Debug)]
pub struct EffectiveChannel {
    pub matrix: CMatrix,
    pub intermediate: CMatrix,
    pub key: PermutationKey,
}

/// `Xi = F Lambda_{c1} H Lambda_{c1}^H F^H`.
pub fn intermediate_channel(channel: &DelayDopplerChannel, profile: &ChirpProfile) -> Result<CMatrix> {
    let n = profile.n();
    check_len(n, channel.n())?;
    let f = dft_matrix(n)?;
    let c1 = profile.chirp1();
    let h = channel.matrix();
    let inner = CMatrix::from_fn(n, n, |r, c| c1[r] * h[(r, c)] * c1[c].conj());
    Ok(&f * inner * f.adjoint())
}

/// `diag(a) * m * diag(b)^H`.
fn conjugate_diag(m: &CMatrix, a: &[Complex64], b: &[Complex64]) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| a[r] * m[(r, c)] * b[c].conj())
}

pub fn effective_channel(
    channel: &DelayDopplerChannel,
    profile: &ChirpProfile,
    key: &PermutationKey,
) -> Result<EffectiveChannel> {
    check_len(profile.n(), key.n())?;
    let xi = intermediate_channel(channel, profile)?;
    let c2 = key.apply(&profile.chirp2());
    Ok(EffectiveChannel {
        matrix: conjugate_diag(&xi, &c2, &c2),
        intermediate: xi,
        key: key.clone(),
    })
}

/// Channel seen by a receiver demodulating with `rx_key` a signal modulated
/// with `tx_key`: `A_{rx} H A_{tx}^{-1}`.
pub fn mismatched_effective_channel(
    channel: &DelayDopplerChannel,
    profile: &ChirpProfile,
    tx_key: &PermutationKey,
    rx_key: &PermutationKey,
) -> Result<CMatrix> {
    check_len(profile.n(), tx_key.n())?;
    check_len(profile.n(), rx_key.n())?;
    let xi = intermediate_channel(channel, profile)?;
    let c2 = profile.chirp2();
    Ok(conjugate_diag(&xi, &rx_key.apply(&c2), &tx_key.apply(&c2)))
}

/// Entries whose magnitude exceeds `threshold`, row-major.
pub fn support_mask(m: &CMatrix, threshold: f64) -> Vec<bool> {
    let mut mask = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            mask.push(m[(r, c)].norm() > threshold);
        }
    }
    mask
}

/// Number of entries above `threshold` in each row.
pub fn row_support_counts(m: &CMatrix, threshold: f64) -> Vec<usize> {
    m.row_iter()
        .map(|row| row.iter().filter(|z| z.norm() > threshold).count())
        .collect()
}
