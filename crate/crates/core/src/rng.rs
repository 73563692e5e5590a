//! Stream-addressable RNG.
//!
//! Every random quantity in a simulation is drawn from a stream identified
//! by `(seed, stream id)`. Child streams are derived by hashing a tag into the
//! stream id, so replication `j`'s environment, rewards and algorithm noise
//! never depend on how many other streams were consumed or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Names a reproducible stream of random draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

/// The generator behind every [`RngStream`].
pub type SimRng = ChaCha8Rng;

const fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub const fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Derives an independent child stream for `tag`.
    pub const fn child(self, tag: u64) -> Self {
        Self {
            seed: self.seed,
            stream: splitmix64(self.stream ^ splitmix64(tag.wrapping_add(0x5851_F42D_4C95_7F2D))),
        }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(self) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}
