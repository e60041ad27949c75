//! Counter-based random streams.
//!
//! Every draw is addressed by `(seed, domain, stream, index)`: the ChaCha
//! key is built from the seed and a domain tag, the ChaCha stream id selects
//! the stream and the word position selects the index. Draws therefore do not
//! depend on how many other draws were made or in which order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Disjoint key spaces for the different consumers of randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Brownian = 1,
    MonteCarlo = 2,
    BoxSampling = 3,
}

/// u32 words reserved per keyed normal (two u64 uniforms).
const WORDS_PER_NORMAL: u128 = 4;

fn key(seed: u64, domain: Domain) -> [u8; 32] {
    let mut k = [0u8; 32];
    k[..8].copy_from_slice(&seed.to_le_bytes());
    k[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    k[16..24].copy_from_slice(b"sle-kapp");
    k
}

/// Generator positioned at the start of `(seed, domain, stream)`.
pub fn stream(seed: u64, domain: Domain, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(key(seed, domain));
    rng.set_stream(stream);
    rng
}

#[inline]
fn unit_open(bits: u64) -> f64 {
    // (0, 1]: never zero, so the logarithm below is finite
    ((bits >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
}

/// Sequential reader of standard normals where draw `k` of a stream always
/// comes from the same four words, so it is addressable by index.
pub struct KeyedNormals {
    rng: ChaCha8Rng,
}

impl KeyedNormals {
    /// Reader positioned at draw `start` of the given stream.
    pub fn new(seed: u64, domain: Domain, stream_id: u64, start: u64) -> Self {
        let mut rng = stream(seed, domain, stream_id);
        rng.set_word_pos(start as u128 * WORDS_PER_NORMAL);
        KeyedNormals { rng }
    }

    /// Box-Muller on exactly two uniforms (cosine branch).
    #[inline]
    pub fn next_normal(&mut self) -> f64 {
        let u1 = unit_open(self.rng.next_u64());
        let u2 = unit_open(self.rng.next_u64());
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Single keyed normal draw.
pub fn keyed_normal(seed: u64, domain: Domain, stream_id: u64, index: u64) -> f64 {
    KeyedNormals::new(seed, domain, stream_id, index).next_normal()
}

/// Plain sequential standard normals for Monte Carlo stream `stream_id`.
pub fn normal_stream(seed: u64, stream_id: u64) -> impl Iterator<Item = f64> {
    let mut rng = stream(seed, Domain::MonteCarlo, stream_id);
    std::iter::repeat_with(move || StandardNormal.sample(&mut rng))
}
