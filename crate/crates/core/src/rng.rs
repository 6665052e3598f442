//! Named random substreams.
//!
//! Every random draw in a run comes from one of a handful of ChaCha8
//! streams. All of them share the key derived from the master seed and
//! differ only in the ChaCha stream id, so each stream is independent of
//! how many draws the others consume. The mapping below is part of the
//! reproducibility contract: changing an id changes every result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator behind every substream.
pub type SimRng = ChaCha8Rng;

/// Identifies one substream of a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Substream {
    /// Sensor positions (and resampling when a deployment is disconnected).
    Deployment,
    /// Choice of which sensors are attackers.
    AttackerPlacement,
    /// Event origins, one draw per round.
    Events,
    /// Coin flips between equal-energy candidates.
    TieBreak,
    /// Per-neighbor gate draws of the trust-gated rule.
    TrustGate,
}

impl Substream {
    /// ChaCha stream id for this substream.
    pub const fn stream_id(self) -> u64 {
        match self {
            Substream::Deployment => 1,
            Substream::AttackerPlacement => 2,
            Substream::Events => 3,
            Substream::TieBreak => 4,
            Substream::TrustGate => 5,
        }
    }
}

/// Builds the generator for `stream` under `master_seed`.
pub fn substream(master_seed: u64, stream: Substream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream.stream_id());
    rng
}
