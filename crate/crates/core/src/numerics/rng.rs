//! Seeded, stream-indexed random number generation.
//!
//! Each `(seed, stream)` pair addresses an independent ChaCha8 keystream.
//! ChaCha is counter-based, so replication `r` of an experiment can be given
//! stream `r` and will produce the same draws no matter which worker runs it.
//!
//! Normal variates use the Box–Muller transform, both outputs of each pair
//! consumed in order (cosine branch first). Uniforms take the top 53 bits of
//! a `u64`. This mapping is part of the reproducibility contract: changing it
//! changes every simulated chain.

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, stream, inner, spare: None }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - U lies in (0, 1], keeping the logarithm finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare = Some(r * angle.sin());
        r * angle.cos()
    }

    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for z in out {
            *z = self.standard_normal();
        }
    }
}

/// Draws `mean + L z`, with `z` a vector of iid standard normals.
pub fn mvn_sample(
    rng: &mut RngStream,
    mean: ArrayView1<'_, f64>,
    cov_chol: ArrayView2<'_, f64>,
) -> Array1<f64> {
    let p = mean.len();
    let mut z = vec![0.0; p];
    rng.fill_standard_normal(&mut z);
    let mut out = mean.to_owned();
    for i in 0..p {
        let mut s = 0.0;
        for k in 0..=i {
            s += cov_chol[[i, k]] * z[k];
        }
        out[i] += s;
    }
    out
}
