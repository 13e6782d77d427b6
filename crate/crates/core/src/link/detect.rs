use nalgebra::Cholesky;
use num_complex::Complex64;

use super::Constellation;
use crate::channel::DelayDopplerChannel;
use crate::error::{check_len, Error, Result};
use crate::transforms::{ChirpProfile, FastDaft, PermutationKey};
use crate::{CMatrix, CVector};

/// Largest `M^N` the exhaustive ML detector will search.
pub const ML_SEARCH_LIMIT: usize = 1 << 20;

/// Smallest admissible `(min L_ii / max L_ii)^2` of the Cholesky factor when
/// solving without regularization.
const ZF_CONDITION_FLOOR: f64 = 1e-12;

/// Exhaustive maximum-likelihood detection `argmin_x ||y - G x||^2` over
/// `constellation^N`.
///
/// Codewords are indexed with the first symbol as the most significant
/// base-`M` digit; among equal residuals the lowest index wins.
pub fn ml_detect(y: &[Complex64], g: &CMatrix, constellation: &Constellation) -> Result<Vec<Complex64>> {
    let n = y.len();
    check_len(n, g.nrows())?;
    check_len(n, g.ncols())?;
    let m = constellation.order();
    let too_large = Error::SearchSpaceTooLarge {
        modulation_order: m,
        n,
    };
    let total = u32::try_from(n)
        .ok()
        .and_then(|e| m.checked_pow(e))
        .filter(|&t| t <= ML_SEARCH_LIMIT)
        .ok_or(too_large)?;
    if n == 0 {
        return Ok(Vec::new());
    }

    let points = constellation.points();
    let last = n - 1;
    let mut digits = vec![0usize; n];
    let mut best = digits.clone();
    let mut best_d = f64::INFINITY;
    let mut base = vec![Complex64::default(); n];
    let mut idx = 0;
    while idx < total {
        // Contribution of every symbol but the last, refreshed once per carry.
        for (r, b) in base.iter_mut().enumerate() {
            *b = (0..last).map(|c| g[(r, c)] * points[digits[c]]).sum();
        }
        for (d_last, &p) in points.iter().enumerate().take(m) {
            let mut dist = 0.0;
            for r in 0..n {
                dist += (y[r] - base[r] - g[(r, last)] * p).norm_sqr();
            }
            if dist < best_d {
                best_d = dist;
                digits[last] = d_last;
                best.copy_from_slice(&digits);
            }
        }
        idx += m;
        // Advance the odometer on the leading digits.
        for pos in (0..last).rev() {
            digits[pos] += 1;
            if digits[pos] < m {
                break;
            }
            digits[pos] = 0;
        }
    }
    Ok(best.into_iter().map(|d| points[d]).collect())
}

/// Time-domain MMSE equalizer `H^H (H H^H + sigma2 I)^{-1} r`.
///
/// The Gram matrix is accumulated from the nonzero entries of each column of
/// `H`, which is cheap for the sparse delay-Doppler channels used here. With
/// `sigma2 = 0` this is the zero-forcing solution and a numerically singular
/// `H H^H` is reported as an error.
pub fn mmse_time_domain(r: &[Complex64], h: &CMatrix, sigma2: f64) -> Result<Vec<Complex64>> {
    let n = h.nrows();
    check_len(n, h.ncols())?;
    check_len(n, r.len())?;
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be finite and non-negative, got {sigma2}"
        )));
    }
    let zero = Complex64::default();
    let cols: Vec<Vec<(usize, Complex64)>> = (0..n)
        .map(|c| {
            (0..n)
                .filter_map(|row| {
                    let v = h[(row, c)];
                    (v != zero).then_some((row, v))
                })
                .collect()
        })
        .collect();

    let mut gram = CMatrix::zeros(n, n);
    for col in &cols {
        for &(i, a) in col {
            for &(j, b) in col {
                gram[(i, j)] += a * b.conj();
            }
        }
    }
    for i in 0..n {
        gram[(i, i)] += sigma2;
    }
    let chol = Cholesky::new(gram).ok_or(Error::Singular { sigma2 })?;
    if sigma2 == 0.0 {
        let l = chol.l_dirty();
        let (lo, hi) = (0..n)
            .map(|i| l[(i, i)].re)
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
        if hi.is_nan() || hi <= 0.0 || (lo / hi).powi(2) < ZF_CONDITION_FLOOR {
            return Err(Error::Singular { sigma2 });
        }
    }
    let z = chol.solve(&CVector::from_column_slice(r));
    Ok(cols
        .iter()
        .map(|col| col.iter().map(|&(i, a)| a.conj() * z[i]).sum())
        .collect())
}

/// MMSE-equalized soft symbols `A_key H^H (H H^H + sigma2 I)^{-1} r`.
pub fn mmse_equalize(
    r: &[Complex64],
    channel: &DelayDopplerChannel,
    sigma2: f64,
    profile: &ChirpProfile,
    key: &PermutationKey,
) -> Result<Vec<Complex64>> {
    check_len(profile.n(), channel.n())?;
    let s_hat = mmse_time_domain(r, channel.matrix(), sigma2)?;
    FastDaft::new(profile).forward(key, &s_hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_channel, sample_channel, ChannelScenarioConfig, PathParams};
    use crate::link::{demap_symbols, effective_channel, map_bits, mismatched_effective_channel, modulate, receive, Modulation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_bits(len: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
        (0..len).map(|_| rng.random_range(0..2u8)).collect()
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    fn mat_vec(m: &CMatrix, v: &[Complex64]) -> Vec<Complex64> {
        (m * CVector::from_column_slice(v)).iter().copied().collect()
    }

    fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn brute_force(y: &[Complex64], g: &CMatrix, c: &Constellation) -> Vec<Complex64> {
        let n = y.len();
        let m = c.order();
        let total = m.pow(n as u32);
        let mut best = (f64::INFINITY, Vec::new());
        for idx in 0..total {
            let x: Vec<Complex64> = (0..n)
                .map(|i| c.points()[(idx / m.pow((n - 1 - i) as u32)) % m])
                .collect();
            let gx = mat_vec(g, &x);
            let d: f64 = y.iter().zip(&gx).map(|(a, b)| (a - b).norm_sqr()).sum();
            if d < best.0 {
                best = (d, x);
            }
        }
        best.1
    }

    #[test]
    fn ml_noiseless_recovers_symbols() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let c = Constellation::new(Modulation::Qpsk);
        for _ in 0..20 {
            let g = random_matrix(4, &mut rng);
            let x = map_bits(&random_bits(8, &mut rng), &c).unwrap();
            let y = mat_vec(&g, &x);
            assert_eq!(ml_detect(&y, &g, &c).unwrap(), x);
        }
    }

    #[test]
    fn ml_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for m in [Modulation::Bpsk, Modulation::Qpsk, Modulation::Qam16] {
            let c = Constellation::new(m);
            for n in [1, 2, 3] {
                for _ in 0..10 {
                    let g = random_matrix(n, &mut rng);
                    let y: Vec<Complex64> =
                        (0..n).map(|_| Complex64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0)).collect();
                    assert_eq!(ml_detect(&y, &g, &c).unwrap(), brute_force(&y, &g, &c));
                }
            }
        }
    }

    #[test]
    fn ml_ties_break_to_lowest_index() {
        let c = Constellation::new(Modulation::Bpsk);
        let g = CMatrix::zeros(2, 2);
        let y = vec![Complex64::default(); 2];
        assert_eq!(ml_detect(&y, &g, &c).unwrap(), vec![c.points()[0]; 2]);
    }

    #[test]
    fn ml_guard_and_dimensions() {
        let c = Constellation::new(Modulation::Qpsk);
        let g = CMatrix::identity(11, 11);
        let y = vec![Complex64::default(); 11];
        assert!(matches!(ml_detect(&y, &g, &c), Err(Error::SearchSpaceTooLarge { .. })));
        let g = CMatrix::identity(10, 10);
        let y = vec![Complex64::new(0.7, 0.7); 10];
        assert!(ml_detect(&y, &g, &c).is_ok());
        assert!(ml_detect(&y[..9], &g, &c).is_err());
    }

    #[test]
    fn ml_qpsk_high_snr_symbol_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 4;
        let c = Constellation::new(Modulation::Qpsk);
        let p = ChirpProfile::for_max_doppler(n, 1.0).unwrap();
        let cfg = ChannelScenarioConfig { n, paths: 2, max_delay: 1, ..Default::default() };
        let sigma2 = 1e-3;
        let (mut errors, mut total) = (0, 0);
        for _ in 0..1000 {
            let (h, _) = sample_channel(&cfg, &mut rng).unwrap();
            let k = PermutationKey::random(n, &mut rng);
            let x = map_bits(&random_bits(2 * n, &mut rng), &c).unwrap();
            let r = receive(&modulate(&x, &p, &k).unwrap(), &h, sigma2, &mut rng).unwrap();
            let y = FastDaft::new(&p).forward(&k, &r).unwrap();
            let g = effective_channel(&h, &p, &k).unwrap();
            let xh = ml_detect(&y, &g.matrix, &c).unwrap();
            errors += xh.iter().zip(&x).filter(|(a, b)| (*a - *b).norm() > 1e-9).count();
            total += n;
        }
        let ser = errors as f64 / total as f64;
        assert!(ser < 0.01, "{ser}");
    }

    #[test]
    fn mmse_identity_channel_shrinks() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let n = 8;
        let c = Constellation::new(Modulation::Qpsk);
        let p = ChirpProfile::for_max_doppler(n, 1.0).unwrap();
        let k = PermutationKey::random(n, &mut rng);
        let x = map_bits(&random_bits(2 * n, &mut rng), &c).unwrap();
        let s = modulate(&x, &p, &k).unwrap();
        for sigma2 in [0.0, 0.1, 1.0, 3.5] {
            let got = mmse_equalize(&s, &DelayDopplerChannel::identity(n), sigma2, &p, &k).unwrap();
            let expected: Vec<Complex64> = x.iter().map(|v| v / (1.0 + sigma2)).collect();
            assert!(max_diff(&got, &expected) < 1e-12, "sigma2={sigma2}");
        }
    }

    #[test]
    fn mmse_zero_forcing_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let n = 32;
        let c = Constellation::new(Modulation::Qpsk);
        let p = ChirpProfile::for_max_doppler(n, 1.0).unwrap();
        let cfg = ChannelScenarioConfig { n, ..Default::default() };
        let (h, _) = sample_channel(&cfg, &mut rng).unwrap();
        let k = PermutationKey::random(n, &mut rng);
        let x = map_bits(&random_bits(2 * n, &mut rng), &c).unwrap();
        let r = receive(&modulate(&x, &p, &k).unwrap(), &h, 0.0, &mut rng).unwrap();
        let zf = mmse_equalize(&r, &h, 0.0, &p, &k).unwrap();
        assert!(max_diff(&zf, &x) < 1e-8);
        let tiny = mmse_equalize(&r, &h, 1e-12, &p, &k).unwrap();
        assert!(max_diff(&tiny, &x) < 1e-6);
    }

    #[test]
    fn mmse_singular_and_invalid() {
        let n = 8;
        let p = ChirpProfile::for_max_doppler(n, 1.0).unwrap();
        let k = PermutationKey::identity(n);
        // Two equal-gain paths with cancelling phases leave H rank deficient.
        let paths = [
            PathParams { gain: Complex64::new(1.0, 0.0), delay: 0, doppler: 0.0 },
            PathParams { gain: Complex64::new(1.0, 0.0), delay: 4, doppler: 0.0 },
        ];
        let h = build_channel(&paths, n, 0.0).unwrap();
        let r = vec![Complex64::new(1.0, 0.0); n];
        assert!(matches!(mmse_equalize(&r, &h, 0.0, &p, &k), Err(Error::Singular { .. })));
        assert!(mmse_equalize(&r, &h, 0.1, &p, &k).is_ok());
        assert!(mmse_equalize(&r, &h, -0.1, &p, &k).is_err());
        assert!(mmse_equalize(&r[..7], &h, 0.1, &p, &k).is_err());
    }

    #[test]
    fn mmse_matches_effective_domain_and_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let n = 24;
        let c = Constellation::new(Modulation::Qam16);
        let p = ChirpProfile::for_max_doppler(n, 2.0).unwrap();
        let cfg = ChannelScenarioConfig { n, max_doppler: 2.0, fractional_doppler: true, ..Default::default() };
        for _ in 0..5 {
            let (h, _) = sample_channel(&cfg, &mut rng).unwrap();
            let k = PermutationKey::random(n, &mut rng);
            let x = map_bits(&random_bits(4 * n, &mut rng), &c).unwrap();
            let sigma2 = 0.05;
            let r = receive(&modulate(&x, &p, &k).unwrap(), &h, sigma2, &mut rng).unwrap();
            let got = mmse_equalize(&r, &h, sigma2, &p, &k).unwrap();

            let hm = h.matrix();
            let gram = hm * hm.adjoint() + CMatrix::identity(n, n) * Complex64::new(sigma2, 0.0);
            let dense_t = hm.adjoint() * gram.try_inverse().unwrap() * CVector::from_column_slice(&r);
            let a = crate::transforms::daft(&p, &k, crate::transforms::Direction::Forward).unwrap().matrix;
            let dense: Vec<Complex64> = (&a * dense_t).iter().copied().collect();
            assert!(max_diff(&got, &dense) < 1e-9);

            let g = effective_channel(&h, &p, &k).unwrap().matrix;
            let y = mat_vec(&a, &r);
            let gg = &g * g.adjoint() + CMatrix::identity(n, n) * Complex64::new(sigma2, 0.0);
            let eff: Vec<Complex64> =
                (g.adjoint() * gg.try_inverse().unwrap() * CVector::from_column_slice(&y)).iter().copied().collect();
            assert!(max_diff(&got, &eff) < 1e-9);
        }
    }

    #[test]
    fn mismatched_noiseless_is_chance_level() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let n = 64;
        let c = Constellation::new(Modulation::Qpsk);
        let p = ChirpProfile::for_max_doppler(n, 1.0).unwrap();
        let cfg = ChannelScenarioConfig { n, ..Default::default() };
        let (mut errors, mut bits) = (0, 0);
        for _ in 0..100 {
            let (h, _) = sample_channel(&cfg, &mut rng).unwrap();
            let k = PermutationKey::random(n, &mut rng);
            let eve = PermutationKey::random(n, &mut rng);
            let b = random_bits(2 * n, &mut rng);
            let x = map_bits(&b, &c).unwrap();
            let r = receive(&modulate(&x, &p, &k).unwrap(), &h, 0.0, &mut rng).unwrap();
            let xe = mmse_equalize(&r, &h, 0.0, &p, &eve).unwrap();
            errors += demap_symbols(&xe, &c).iter().zip(&b).filter(|(a, b)| a != b).count();
            bits += b.len();

            let mm = mismatched_effective_channel(&h, &p, &k, &eve).unwrap();
            assert!(mm.iter().all(|z| z.is_finite()));
        }
        let ber = errors as f64 / bits as f64;
        assert!((ber - 0.5).abs() < 0.05, "{ber}");
    }

    #[test]
    fn ml_and_mmse_agree_at_high_snr() {
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let c = Constellation::new(Modulation::Qpsk);
        let sigma2 = 1e-3;
        let (mut agree, mut total) = (0, 0);
        for n in [2, 3, 4] {
            let p = ChirpProfile::for_max_doppler(n, 1.0).unwrap();
            let cfg = ChannelScenarioConfig { n, paths: 2, max_delay: 1, ..Default::default() };
            for _ in 0..300 {
                let (h, _) = sample_channel(&cfg, &mut rng).unwrap();
                let k = PermutationKey::random(n, &mut rng);
                let x = map_bits(&random_bits(2 * n, &mut rng), &c).unwrap();
                let r = receive(&modulate(&x, &p, &k).unwrap(), &h, sigma2, &mut rng).unwrap();
                let Ok(soft) = mmse_equalize(&r, &h, sigma2, &p, &k) else { continue };
                let mmse = demap_symbols(&soft, &c);
                let g = effective_channel(&h, &p, &k).unwrap();
                let y = FastDaft::new(&p).forward(&k, &r).unwrap();
                let ml = demap_symbols(&ml_detect(&y, &g.matrix, &c).unwrap(), &c);
                for (a, b) in mmse.chunks(2).zip(ml.chunks(2)) {
                    agree += usize::from(a == b);
                    total += 1;
                }
            }
        }
        let rate = agree as f64 / total as f64;
        assert!(rate > 0.99, "{rate}");
    }
}
