//! Counter-based random streams.
//!
//! Every draw is a pure function of `(seed, stream_id, counter)`, computed with
//! the Philox4x32-10 bijection: the 64-bit seed is the key, and the counter
//! block holds `(counter, stream_id)`. Lanes therefore need no shared state and
//! results do not depend on scheduling order or the number of worker lanes.

use rand_core::RngCore;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::real::Real;

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

#[inline(always)]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = (a as u64) * (b as u64);
    ((p >> 32) as u32, p as u32)
}

/// Philox4x32 with 10 rounds.
#[inline]
pub fn philox4x32_10(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, c[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

/// One independent random stream: `(seed, stream_id)` plus a draw position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
    pub counter: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self {
            seed,
            stream_id,
            counter: 0,
        }
    }

    /// The 128-bit block at an arbitrary position, without advancing.
    #[inline]
    pub fn block_at(&self, position: u64) -> [u32; 4] {
        philox4x32_10(
            [
                position as u32,
                (position >> 32) as u32,
                self.stream_id as u32,
                (self.stream_id >> 32) as u32,
            ],
            [self.seed as u32, (self.seed >> 32) as u32],
        )
    }

    #[inline]
    pub fn bits_at(&self, position: u64) -> u64 {
        let b = self.block_at(position);
        (b[0] as u64) | ((b[1] as u64) << 32)
    }

    /// The `position`-th uniform of this stream, in `(0, 1)`.
    #[inline]
    pub fn uniform_at<T: Real>(&self, position: u64) -> T {
        T::open_unit(self.bits_at(position))
    }

    /// Draws the next uniform in `(0, 1)` and advances the counter.
    #[inline]
    pub fn uniform<T: Real>(&mut self) -> T {
        let u = self.uniform_at(self.counter);
        self.counter += 1;
        u
    }

    pub fn advance(&mut self, draws: u64) {
        self.counter += draws;
    }

    /// Standard normal draw (ziggurat, consumes a variable number of positions).
    #[inline]
    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(self)
    }

    /// Inverse-gamma draw with shape `a` and scale `b` (mean `b / (a - 1)`).
    pub fn inverse_gamma(&mut self, shape: f64, scale: f64) -> f64 {
        let g = Gamma::new(shape, 1.0)
            .expect("inverse-gamma shape must be positive and finite")
            .sample(self);
        scale / g
    }
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        let v = self.block_at(self.counter)[0];
        self.counter += 1;
        v
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        let v = self.bits_at(self.counter);
        self.counter += 1;
        v
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        rand_core::impls::fill_bytes_via_next(self, dst)
    }
}

/// Source of one uniform per output slot, used by the resamplers.
///
/// Implemented by [`StreamFamily`] (slot `j` reads its own stream) and by
/// plain slices of fixed uniforms.
pub trait UniformSource<T>: Sync {
    fn uniform(&self, slot: usize) -> T;
}

impl<T: Real> UniformSource<T> for [T] {
    #[inline]
    fn uniform(&self, slot: usize) -> T {
        self[slot]
    }
}

impl<T: Real> UniformSource<T> for Vec<T> {
    #[inline]
    fn uniform(&self, slot: usize) -> T {
        self[slot]
    }
}

/// A block of streams `base_id + slot`, all sharing one seed and counter offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFamily {
    pub seed: u64,
    pub base_id: u64,
    pub counter: u64,
}

impl StreamFamily {
    pub fn new(seed: u64, base_id: u64) -> Self {
        Self {
            seed,
            base_id,
            counter: 0,
        }
    }

    #[inline]
    pub fn stream(&self, slot: usize) -> RngStream {
        RngStream {
            seed: self.seed,
            stream_id: self.base_id + slot as u64,
            counter: self.counter,
        }
    }
}

impl<T: Real> UniformSource<T> for StreamFamily {
    #[inline]
    fn uniform(&self, slot: usize) -> T {
        self.stream(slot).uniform_at(self.counter)
    }
}

/// Stream-id layout used by the filter: 8-bit phase tag, 24-bit time step,
/// 32-bit particle slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Phase {
    Initialize = 1,
    Propagate = 2,
    Resample = 3,
    Simulate = 4,
}

#[inline]
pub fn stream_base(phase: Phase, step: usize) -> u64 {
    debug_assert!(step < (1 << 24));
    ((phase as u64) << 56) | ((step as u64) << 32)
}
