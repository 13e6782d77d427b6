//! Chirp-permuted AFDM (CP-AFDM) secure link simulation.
//!
//! The crate is organised bottom-up:
//!
//! - [`transforms`]: DFT, chirp, DAFT/IDAFT and permuted-DAFT matrices, an
//!   FFT fast path, and the permutation-key codec (rank <-> permutation).
//! - [`channel`]: the doubly-dispersive circular-convolution channel and
//!   random realizations for the legitimate receiver and the eavesdropper.
//! - [`link`]: constellations, modulation, reception, effective channels,
//!   ML and MMSE detection.
//! - [`security`]: derangement combinatorics, guess probabilities, and the
//!   classical / Grover-adaptive-search attack cost estimators.
//! - [`sim`]: the seeded, parallel BER Monte Carlo engine.
//!
//! Matrices are dense `nalgebra` complex matrices in double precision.

pub mod channel;
pub mod error;
pub mod link;
pub mod security;
pub mod sim;
pub mod transforms;

pub use num_bigint::BigUint;
pub use num_complex::Complex64;

pub use channel::{
    build_channel, sample_channel, ChannelScenarioConfig, ChannelSpec, DelayDopplerChannel,
    PathParams, PrefixPhase,
};
pub use error::{Error, Result};
pub use link::{
    demap_symbols, demodulate, effective_channel, map_bits, mismatched_effective_channel,
    ml_detect, mmse_equalize, mmse_time_domain, modulate, receive, Constellation,
    EffectiveChannel, Frame, Modulation,
};
pub use security::{
    attack_cost, classical_cost, derangement_count, guess_cdf_wrong, guess_pmf, quantum_cost,
    sample_perm_with_at_most_fixed_points, sample_perm_with_fixed_points, AttackCostReport,
    DerangementTable, GuessDistribution, PerEvalCost,
};
pub use sim::{
    run_ber, run_ber_with_workers, run_fixed_point_sweep, AliceKeyPolicy, BerConfig, BerReport,
    BerRow, ChannelPolicy, EveStrategy, Scenario,
};
pub use transforms::{
    chirp_vector, daft, dft_matrix, perm_to_rank, rank_to_perm, ChirpProfile, DaftMatrix,
    Direction, FastDaft, PermutationKey,
};

/// Dense complex matrix used throughout the crate.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<Complex64>;
