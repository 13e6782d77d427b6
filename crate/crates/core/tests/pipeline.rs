use cpafdm::link::awgn;
use cpafdm::{
    demap_symbols, mmse_equalize, receive, run_ber, run_fixed_point_sweep, sample_channel,
    BerConfig, ChannelScenarioConfig, ChirpProfile, Constellation, EveStrategy, Frame, Modulation,
    PermutationKey, Scenario,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sweep_config(trials: u64, snr: Vec<f64>) -> BerConfig {
    BerConfig {
        snr_grid_db: snr,
        trials_per_point: trials,
        master_seed: 5,
        ..BerConfig::default()
    }
}

fn sigma(ber: f64, bits: u64) -> f64 {
    (ber * (1.0 - ber) / bits as f64).sqrt()
}

#[test]
fn frame_round_trip_through_public_api() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 64;
    let profile = ChirpProfile::for_max_doppler(n, 1.0).unwrap();
    let c = Constellation::new(Modulation::Qam16);
    let cfg = ChannelScenarioConfig { n, ..Default::default() };
    let (mut errors, mut total) = (0, 0);
    for _ in 0..20 {
        let key = PermutationKey::random(n, &mut rng);
        let bits: Vec<u8> = (0..4 * n).map(|_| rng.random_range(0..2)).collect();
        let frame = Frame::new(bits, &c, &profile, &key, 1e-6).unwrap();
        let (h, _) = sample_channel(&cfg, &mut rng).unwrap();
        let r = receive(&frame.tx_signal, &h, frame.noise_variance, &mut rng).unwrap();
        let soft = mmse_equalize(&r, &h, frame.noise_variance, &profile, &key).unwrap();
        errors += demap_symbols(&soft, &c).iter().zip(&frame.bits).filter(|(a, b)| a != b).count();
        total += frame.bits.len();
    }
    // Linear equalization still loses the occasional bit on deep fades.
    assert!(errors * 200 < total, "{errors}/{total}");
    assert_eq!(awgn(4, 0.0, &mut rng), vec![Default::default(); 4]);
}

#[test]
fn bob_high_snr_surrogate() {
    // 7813 trials of 128 bits exceed 10^6 bits.
    let report = run_ber(&sweep_config(7813, vec![60.0])).unwrap();
    let row = &report.rows[0];
    assert!(row.total_bits >= 1_000_000);
    assert!(row.bob_ber < 1e-4, "{row:?}");
}

#[test]
fn eve_ber_decreases_with_correct_positions() {
    let config = sweep_config(400, vec![20.0]);
    let sweep = run_fixed_point_sweep(&config, &[0, 16, 32, 48, 64]).unwrap();
    let bers: Vec<(f64, u64)> = sweep.iter().map(|(_, r)| (r.rows[0].eve_ber, r.rows[0].total_bits)).collect();
    for w in bers.windows(2) {
        let (a, bits) = w[0];
        let (b, _) = w[1];
        let s = (sigma(a, bits).powi(2) + sigma(b, bits).powi(2)).sqrt();
        assert!(b <= a + 3.0 * s, "{bers:?}");
    }
    assert!(bers[0].0 > 0.45 && bers[4].0 < 0.05, "{bers:?}");
}

#[test]
fn few_correct_positions_stay_at_chance() {
    let config = sweep_config(300, vec![0.0, 30.0]);
    for (l, report) in run_fixed_point_sweep(&config, &[0, 1, 2, 3, 4, 5]).unwrap() {
        for row in &report.rows {
            assert!((0.45..=0.55).contains(&row.eve_ber), "l={l}: {row:?}");
        }
    }
}

#[test]
fn bounded_guess_stays_at_chance_colocated() {
    let config = BerConfig {
        scenario: Scenario::Colocated,
        eve_strategy: EveStrategy::FixedPointBounded { l_max: 10 },
        ..sweep_config(300, vec![0.0, 15.0, 30.0])
    };
    for row in run_ber(&config).unwrap().rows {
        assert!((0.45..=0.55).contains(&row.eve_ber), "{row:?}");
    }
}

#[test]
fn colocated_and_remote_eve_agree() {
    let remote = run_ber(&sweep_config(1000, vec![10.0, 25.0])).unwrap();
    let colocated = run_ber(&BerConfig { scenario: Scenario::Colocated, ..sweep_config(1000, vec![10.0, 25.0]) }).unwrap();
    for (r, c) in remote.rows.iter().zip(&colocated.rows) {
        assert_eq!(r.bob_bit_errors, c.bob_bit_errors);
        let s = (sigma(r.eve_ber, r.total_bits).powi(2) + sigma(c.eve_ber, c.total_bits).powi(2)).sqrt();
        // Two-sided p > 0.01.
        assert!((r.eve_ber - c.eve_ber).abs() / s < 2.576, "{r:?} vs {c:?}");
    }
}
