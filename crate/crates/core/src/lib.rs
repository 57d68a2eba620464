//! Noncooperatively optimized tolerance on the forest-fire lattice.
//!
//! A square grid of cells is split among `m` players. Each player decides
//! which of its cells to plant, trading the survival probability of its
//! trees against a per-tree cost. Lightning strikes a single cell according
//! to a truncated Gaussian and burns the whole connected component it lands
//! on. With one player this is the classic highly-optimized-tolerance
//! design problem; with many players it becomes a game whose approximate
//! equilibria are found by best-response dynamics.
//!
//! The crate is organized as:
//!
//! * [`grid`] - configurations, player partitions, component labeling and
//!   exact expected utilities.
//! * [`lightning`] - strike distributions.
//! * [`dynamics`] - best-response dynamics and the registry of per-player
//!   optimizers (sampled fictitious play by default).
//! * [`metrics`] - welfare, fire-break statistics, cascade distributions,
//!   fragility and fines.
//! * [`oned`] - closed forms for the one-dimensional line.
//! * [`runner`] - parameter sweeps, config files and output artifacts.
//! * [`verify`] - self-contained oracle suites used by the `verify` command.

pub mod dynamics;
mod error;
pub mod grid;
pub mod lightning;
pub mod metrics;
pub mod oned;
pub mod runner;
pub mod verify;

pub use error::{Error, Result};

/// The single RNG type used throughout a run.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Builds the RNG for `seed` on an independent `stream`.
pub fn sim_rng(seed: u64, stream: u64) -> SimRng {
    use rand::SeedableRng;
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
