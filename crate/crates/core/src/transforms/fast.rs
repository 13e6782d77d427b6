use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{ChirpProfile, PermutationKey};
use crate::error::{check_len, Result};

/// O(N log N) application of the permuted DAFT/IDAFT without materializing
/// the matrix. Plans are shared, so one instance can serve many threads.
#[derive(Clone)]
pub struct FastDaft {
    profile: ChirpProfile,
    chirp1: Vec<Complex64>,
    chirp2: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl fmt::Debug for FastDaft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FastDaft").field("profile", &self.profile).finish()
    }
}

impl FastDaft {
    pub fn new(profile: &ChirpProfile) -> Self {
        let n = profile.n();
        let mut planner = FftPlanner::new();
        Self {
            profile: *profile,
            chirp1: profile.chirp1(),
            chirp2: profile.chirp2(),
            fft: planner.plan_fft_forward(n),
            ifft: planner.plan_fft_inverse(n),
            scale: 1.0 / (n as f64).sqrt(),
        }
    }

    pub fn profile(&self) -> &ChirpProfile {
        &self.profile
    }

    /// `A_k x`.
    pub fn forward(&self, key: &PermutationKey, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.profile.n();
        check_len(n, key.n())?;
        check_len(n, x.len())?;
        let mut buf: Vec<Complex64> = x.iter().zip(&self.chirp1).map(|(a, c)| a * c).collect();
        self.fft.process(&mut buf);
        for (m, v) in buf.iter_mut().enumerate() {
            *v *= self.chirp2[key.perm()[m]] * self.scale;
        }
        Ok(buf)
    }

    /// `A_k^{-1} x = A_k^H x`.
    pub fn inverse(&self, key: &PermutationKey, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.profile.n();
        check_len(n, key.n())?;
        check_len(n, x.len())?;
        let mut buf: Vec<Complex64> = x
            .iter()
            .zip(key.perm())
            .map(|(a, &p)| a * self.chirp2[p].conj())
            .collect();
        self.ifft.process(&mut buf);
        for (v, c) in buf.iter_mut().zip(&self.chirp1) {
            *v *= c.conj() * self.scale;
        }
        Ok(buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::{daft, Direction};
    use crate::CVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fast_path_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2, 5, 16, 64, 100] {
            let profile = ChirpProfile::new(n, rng.random::<f64>(), ChirpProfile::DEFAULT_C2).unwrap();
            let key = PermutationKey::random(n, &mut rng);
            let x: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let fast = FastDaft::new(&profile);
            let xv = CVector::from_column_slice(&x);
            for dir in [Direction::Forward, Direction::Inverse] {
                let dense = &daft(&profile, &key, dir).unwrap().matrix * &xv;
                let got = match dir {
                    Direction::Forward => fast.forward(&key, &x).unwrap(),
                    Direction::Inverse => fast.inverse(&key, &x).unwrap(),
                };
                let err = got
                    .iter()
                    .zip(dense.iter())
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max);
                assert!(err < 1e-9, "n={n} {dir:?} err={err}");
            }
        }
    }

    #[test]
    fn length_checked() {
        let profile = ChirpProfile::for_max_doppler(8, 1.0).unwrap();
        let fast = FastDaft::new(&profile);
        let key = PermutationKey::identity(8);
        assert!(fast.forward(&key, &[Complex64::default(); 7]).is_err());
        assert!(fast.inverse(&PermutationKey::identity(4), &[Complex64::default(); 8]).is_err());
    }
}
