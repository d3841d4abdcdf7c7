//! Seeded Gaussian sample streams.
//!
//! Every stream is a ChaCha8 keystream (`rand_chacha`), keyed by
//! `ChaCha8Rng::seed_from_u64(master_seed)` and separated by its 64-bit
//! ChaCha stream id. Uniforms take the top 53 bits of each `u64`:
//! `u = ((x >> 11) + 1) · 2⁻⁵³ ∈ (0, 1]`. Normals use the Box–Muller
//! transform on consecutive uniform pairs `(u1, u2)`:
//! `z0 = √(−2 ln u1)·cos(2π u2)` is returned first and
//! `z1 = √(−2 ln u1)·sin(2π u2)` on the next call. Transcendentals come from
//! `libm`, so the sequence is bit-identical on every platform.

use core::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::linalg::Vector;

/// What a stream is used for; mixed into the stream id so that agents and
/// purposes never share draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamKind {
    ProcessNoise = 0,
    PrivacyNoise = 1,
    InitialState = 2,
    Auxiliary = 3,
}

const KINDS: u64 = 4;

/// Stream id for `(owner, kind)`.
pub fn stream_id(owner: u64, kind: StreamKind) -> u64 {
    owner.wrapping_mul(KINDS).wrapping_add(kind as u64)
}

#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, spare: None }
    }

    pub fn for_owner(seed: u64, owner: u64, kind: StreamKind) -> Self {
        Self::with_stream(seed, stream_id(owner, kind))
    }

    /// Uniform on `(0, 1]`.
    pub fn next_uniform(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        ((self.rng.next_u64() >> 11) + 1) as f64 * SCALE
    }

    pub fn next_standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        let radius = libm::sqrt(-2.0 * libm::log(u1));
        let angle = 2.0 * PI * u2;
        self.spare = Some(radius * libm::sin(angle));
        radius * libm::cos(angle)
    }

    pub fn standard_normal_vector(&mut self, len: usize) -> Vector {
        Vector::from_fn(len, |_, _| self.next_standard_normal())
    }
}
