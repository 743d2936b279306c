//! Deterministic seed derivation.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream whose
//! seed is mixed from `(root seed, purpose tag, indices...)`. Two properties
//! matter:
//!
//! * runs are reproducible bit-for-bit from the root seed alone, regardless
//!   of thread count, because each column/replicate owns its substream;
//! * unrelated streams (e.g. the sketch entries and the noise of the same
//!   column) never overlap, because they differ in the purpose tag.
//!
//! The mixer is the splitmix64 finalizer folded over the parts; it is not
//! cryptographic, it just has to spread structured integer inputs across the
//! 64-bit space.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream purposes. The numeric values are part of the on-disk/reporting
/// contract (a regenerated instance must reproduce the stored bytes), so
/// they are fixed rather than derived from declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag {
    BasisFactor = 1,
    CoefficientFactor = 2,
    SketchColumn = 3,
    NoiseColumn = 4,
    Replicate = 5,
    Trial = 6,
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix an arbitrary sequence of words into one seed.
pub fn mix(parts: &[u64]) -> u64 {
    let mut state = 0x243F_6A88_85A3_08D3; // arbitrary nonzero start
    let mut acc = 0u64;
    for &p in parts {
        state ^= p;
        acc ^= splitmix64(&mut state);
    }
    acc
}

/// Substream for `(seed, tag, index)`.
pub fn stream(seed: u64, tag: Tag, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(&[seed, tag as u64, index]))
}

/// Bit pattern of an `f64` for seeding purposes (total order not needed,
/// only stability: the same parameter value always mixes identically).
pub fn f64_bits(x: f64) -> u64 {
    x.to_bits()
}
