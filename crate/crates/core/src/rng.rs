//! Deterministic, splittable random number generation.
//!
//! Experiments derive one stream per randomness phase (initialization,
//! transitions, observations, injected noise, projections, evaluation,
//! ground truth) from a single experiment seed, so toggling one phase's
//! randomness does not perturb the draws of any other phase. The generator
//! is xoshiro256++ seeded through splitmix64; both are fixed algorithms,
//! so every draw is reproducible bit-for-bit across runs and platforms.

use crate::scalar::Real;

/// Stream labels for the per-phase substreams of an experiment seed.
pub mod stream {
    pub const INIT: u64 = 1;
    pub const TRANSITION: u64 = 2;
    pub const OBSERVATION: u64 = 3;
    pub const NOISE: u64 = 4;
    pub const PROJECTIONS: u64 = 5;
    pub const EVAL: u64 = 6;
    /// Ground-truth trajectory of a simulated episode.
    pub const TRUTH: u64 = 7;
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// xoshiro256++ generator with a cached spare normal draw.
#[derive(Debug, Clone)]
pub struct Rng {
    s: [u64; 4],
    spare_normal: Option<f64>,
}

impl Rng {
    /// Seed directly from a single value.
    pub fn from_seed(seed: u64) -> Self {
        Self::stream(seed, 0)
    }

    /// Derive the substream `stream_id` of `seed`.
    pub fn stream(seed: u64, stream_id: u64) -> Self {
        let mut sm = seed ^ stream_id.wrapping_mul(0xD2B74407B1CE6E93);
        let mut s = [0u64; 4];
        for v in s.iter_mut() {
            *v = splitmix64(&mut sm);
        }
        // All-zero state is invalid for xoshiro.
        if s == [0, 0, 0, 0] {
            s[0] = 0x1;
        }
        Rng {
            s,
            spare_normal: None,
        }
    }

    /// Derive a fresh independent generator labelled by `label`.
    pub fn split(&mut self, label: u64) -> Rng {
        let a = self.next_u64();
        Rng::stream(a ^ label.wrapping_mul(0xA0761D6478BD642F), label)
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0]
            .wrapping_add(s[3])
            .rotate_left(23)
            .wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform draw in [0, 1).
    pub fn uniform<T: Real>(&mut self) -> T {
        T::of((self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64))
    }

    /// Uniform draw in [lo, hi).
    pub fn uniform_range<T: Real>(&mut self, lo: T, hi: T) -> T {
        lo + (hi - lo) * self.uniform::<T>()
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Modulo bias is negligible for the small ranges used here.
        (self.next_u64() % n as u64) as usize
    }

    /// Standard normal draw (Box-Muller, deterministic sequence).
    pub fn normal<T: Real>(&mut self) -> T {
        if let Some(z) = self.spare_normal.take() {
            return T::of(z);
        }
        // u1 in (0, 1] so the log is finite.
        let u1 = 1.0 - (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        T::of(r * theta.cos())
    }

    /// Vector of standard normal draws.
    pub fn normal_vec<T: Real>(&mut self, len: usize) -> Vec<T> {
        (0..len).map(|_| self.normal()).collect()
    }

    /// Uniformly distributed unit vector in `dim` dimensions.
    pub fn unit_vector<T: Real>(&mut self, dim: usize) -> Vec<T> {
        loop {
            let v: Vec<T> = self.normal_vec(dim);
            let norm = v.iter().map(|x| *x * *x).sum::<T>().sqrt();
            if norm > T::of(1e-12) {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }
}
