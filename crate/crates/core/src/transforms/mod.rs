//! DFT, chirp and (permuted) DAFT matrices.
//!
//! The forward permuted DAFT for key `k` is
//!
//! ```text
//! A_k = diag(perm(chirp(c2), k)) * F_N * diag(chirp(c1))
//! ```
//!
//! and its inverse is the conjugate transpose. Rank 0 is the identity
//! permutation, which reproduces classic AFDM.

mod codec;
mod fast;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::CMatrix;

pub use codec::{perm_to_rank, rank_to_perm, PermutationKey};
pub use fast::FastDaft;

/// Smallest admissible distance between two entries of the second chirp.
pub const CHIRP_DISTINCTNESS_TOL: f64 = 1e-9;

/// `exp(-j 2 pi t)`, with `t` reduced modulo one first.
pub(crate) fn unit_phasor(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, -2.0 * PI * t.rem_euclid(1.0))
}

/// Chirp vector with entries `exp(-j 2 pi c n^2)` for `n = 0..len`.
pub fn chirp_vector(c: f64, len: usize) -> Vec<Complex64> {
    (0..len)
        .map(|n| {
            let n2 = (n as f64) * (n as f64);
            unit_phasor(c * n2)
        })
        .collect()
}

/// Unitary `n`-point DFT matrix, entry `(m, k) = exp(-j 2 pi m k / n) / sqrt(n)`.
pub fn dft_matrix(n: usize) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("DFT size must be at least 1".into()));
    }
    let scale = 1.0 / (n as f64).sqrt();
    Ok(CMatrix::from_fn(n, n, |m, k| {
        let idx = (m * k) % n;
        unit_phasor(idx as f64 / n as f64) * scale
    }))
}

/// Waveform parameters of the DAFT: subcarrier count and the two chirp
/// digital frequencies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile")]
pub struct ChirpProfile {
    n: usize,
    c1: f64,
    c2: f64,
}

#[derive(Deserialize)]
struct RawProfile {
    n: usize,
    c1: f64,
    c2: f64,
}

impl TryFrom<RawProfile> for ChirpProfile {
    type Error = Error;

    fn try_from(raw: RawProfile) -> Result<Self> {
        Self::new(raw.n, raw.c1, raw.c2)
    }
}

impl ChirpProfile {
    /// Default second-chirp frequency: the golden-ratio conjugate. Being
    /// irrational, `c2 * (a^2 - b^2)` is never an integer, so all entries of
    /// the second chirp are distinct, and its phase differences spread over the
    /// whole circle, which is what makes a wrong key scramble every symbol.
    pub const DEFAULT_C2: f64 = 0.618_033_988_749_894_9;

    /// Builds a profile, validating `n >= 2`, finite frequencies, and that the
    /// second chirp has pairwise-distinct entries.
    pub fn new(n: usize, c1: f64, c2: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "subcarrier count must be at least 2, got {n}"
            )));
        }
        if !c1.is_finite() || !c2.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "chirp frequencies must be finite, got c1={c1}, c2={c2}"
            )));
        }
        let gap = min_chirp_gap(c2, n);
        if gap <= CHIRP_DISTINCTNESS_TOL {
            return Err(Error::InvalidParameter(format!(
                "second chirp c2={c2} has coinciding entries for N={n} (min distance {gap:.3e}); \
                 distinct keys would produce identical waveforms"
            )));
        }
        Ok(Self { n, c1, c2 })
    }

    /// Skips validation; only for degenerate reference profiles in tests.
    #[cfg(test)]
    pub(crate) fn unchecked(n: usize, c1: f64, c2: f64) -> Self {
        Self { n, c1, c2 }
    }

    /// Profile with the full-diversity `c1` for the given maximum normalized
    /// Doppler and the default `c2`.
    pub fn for_max_doppler(n: usize, max_doppler: f64) -> Result<Self> {
        Self::new(n, Self::default_c1(n, max_doppler), Self::DEFAULT_C2)
    }

    /// `c1 = (2 ceil(f_max) + 1) / (2N)`.
    pub fn default_c1(n: usize, max_doppler: f64) -> f64 {
        (2.0 * max_doppler.max(0.0).ceil() + 1.0) / (2.0 * n as f64)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn chirp1(&self) -> Vec<Complex64> {
        chirp_vector(self.c1, self.n)
    }

    pub fn chirp2(&self) -> Vec<Complex64> {
        chirp_vector(self.c2, self.n)
    }

    /// Minimum pairwise distance between entries of the second chirp.
    pub fn chirp2_min_distance(&self) -> f64 {
        min_chirp_gap(self.c2, self.n)
    }
}

/// Minimum chord distance between the entries of `chirp_vector(c, n)`,
/// computed in O(n log n) by sorting the phases.
fn min_chirp_gap(c: f64, n: usize) -> f64 {
    let mut phases: Vec<f64> = (0..n)
        .map(|k| (c * (k as f64) * (k as f64)).rem_euclid(1.0))
        .collect();
    phases.sort_by(f64::total_cmp);
    let mut min_turn = 1.0 - phases[n - 1] + phases[0];
    for w in phases.windows(2) {
        min_turn = min_turn.min(w[1] - w[0]);
    }
    2.0 * (PI * min_turn).sin().abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Inverse,
}

/// A materialized (permuted) DAFT or IDAFT matrix.
#[derive(Clone, Debug)]
pub struct DaftMatrix {
    pub matrix: CMatrix,
    pub profile: ChirpProfile,
    pub key: PermutationKey,
    pub direction: Direction,
}

impl DaftMatrix {
    /// `max |(A A^H - I)_{mn}|`.
    pub fn unitarity_error(&self) -> f64 {
        let n = self.matrix.nrows();
        let prod = &self.matrix * self.matrix.adjoint();
        let eye = CMatrix::identity(n, n);
        (prod - eye).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Builds the permuted DAFT (forward) or IDAFT (inverse) matrix.
pub fn daft(profile: &ChirpProfile, key: &PermutationKey, direction: Direction) -> Result<DaftMatrix> {
    check_len(profile.n(), key.n())?;
    let n = profile.n();
    let c1 = profile.chirp1();
    let c2 = key.apply(&profile.chirp2());
    let f = dft_matrix(n)?;
    let forward = CMatrix::from_fn(n, n, |m, k| c2[m] * f[(m, k)] * c1[k]);
    let matrix = match direction {
        Direction::Forward => forward,
        Direction::Inverse => forward.adjoint(),
    };
    Ok(DaftMatrix {
        matrix,
        profile: *profile,
        key: key.clone(),
        direction,
    })
}
