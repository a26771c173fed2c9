//! Seedable, split-able random streams.
//!
//! A stream is identified by `(master_seed, stream_id)`. The master seed keys a
//! ChaCha8 generator and the stream id selects one of its 2^64 independent
//! streams, so two streams with the same key always produce the same sequence
//! and disjoint ids never overlap. Experiments use one stream id per replicate,
//! which makes results independent of how replicates are scheduled on threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream-id tags for the independent sub-streams a replicate needs.
pub mod tags {
    pub const SAMPLING: u64 = 0x5341_4d50_4c45_0001;
    pub const NOISE: u64 = 0x4e4f_4953_4500_0002;
    pub const POPULATION: u64 = 0x504f_5055_4c00_0003;
    pub const ORACLE: u64 = 0x4f52_4143_4c45_0004;
}

#[derive(Clone, Debug)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    antithetic: bool,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(stream_id);
        RngStream { master_seed, stream_id, antithetic: false, inner }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn is_antithetic(&self) -> bool {
        self.antithetic
    }

    /// A fresh stream whose id is a pure function of this stream's id and `tag`.
    pub fn substream(&self, tag: u64) -> RngStream {
        let mut s = RngStream::new(self.master_seed, mix(self.stream_id, tag));
        s.antithetic = self.antithetic;
        s
    }

    /// The same stream with every output word bit-complemented.
    ///
    /// Under [`next_open01`](Self::next_open01) this maps each uniform `u` to
    /// exactly `1 - u`.
    pub fn antithetic(mut self) -> RngStream {
        self.antithetic = !self.antithetic;
        self
    }

    /// Uniform draw on the open interval (0, 1).
    ///
    /// Uses the top 52 bits of one word: `u = (2k + 1) / 2^53`. Every value is
    /// exactly representable and so is `1 - u`.
    pub fn next_open01(&mut self) -> f64 {
        let k = self.next_u64() >> 12;
        ((2 * k + 1) as f64) * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        let x = self.inner.next_u32();
        if self.antithetic {
            !x
        } else {
            x
        }
    }

    fn next_u64(&mut self) -> u64 {
        let x = self.inner.next_u64();
        if self.antithetic {
            !x
        } else {
            x
        }
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst);
        if self.antithetic {
            dst.iter_mut().for_each(|b| *b = !*b);
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix(stream_id: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(stream_id) ^ tag.rotate_left(17))
}
