//! Seed derivation for reproducible parallel streams.
//!
//! Every trial of a simulation cell owns an independent ChaCha8 stream keyed
//! by the master seed and selected by `(cell, trial)`, so results never depend
//! on which worker ran which trial.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Generator for a single seeded draw outside the simulation engine.
pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream for trial `trial` of cell `cell` under `master_seed`.
pub fn trial_stream(master_seed: u64, cell: u32, trial: u32) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((cell as u64) << 32) | trial as u64);
    rng
}

/// Uniform draw on the open interval (0, 1) with 53 random bits.
pub fn open01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}
