use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Identifies one replica's random stream.
///
/// Streams are split by hashing: the ChaCha8 key for a sub-stream is
/// `SHA-256("kacstroock/stream/v1" ‖ master_seed ‖ replica_index ‖ substream)`
/// with integers encoded little-endian. Distinct tuples give unrelated keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SamplerSeed {
    pub master_seed: u64,
    pub replica_index: u64,
}

/// Sub-stream used for jump times and sizes.
pub(crate) const JUMP_STREAM: u32 = 0;
/// Sub-stream used for grid increments (Gaussian or stable).
pub(crate) const GRID_STREAM: u32 = 1;

impl SamplerSeed {
    pub fn new(master_seed: u64, replica_index: u64) -> Self {
        SamplerSeed {
            master_seed,
            replica_index,
        }
    }

    pub fn stream_key(&self, substream: u32) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"kacstroock/stream/v1");
        h.update(self.master_seed.to_le_bytes());
        h.update(self.replica_index.to_le_bytes());
        h.update(substream.to_le_bytes());
        h.finalize().into()
    }

    pub fn rng(&self, substream: u32) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.stream_key(substream))
    }
}
