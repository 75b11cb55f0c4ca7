//! Seeded stand-in for a trained box regressor.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::geometry::{normalize_angle, OrientedBox};

/// Mixes a base seed with a stream tag and an index (splitmix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed
        ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_for(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, index))
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a * (1.0 - t) + b * t
}

/// Moves `anchor` a fraction `pull` of the way toward `gt` in `(x, y, w, h, theta)`
/// space, then perturbs it with Gaussian noise of scale `noise_scale`.
///
/// The angle moves along the shorter way round (residual wrapped into
/// `(-pi/2, pi/2]`). Noise is applied in offset units: center shifts scale with
/// the anchor size, sizes are multiplied by `exp(noise)`, and the angle shifts
/// by `noise` radians. The result is deterministic for a given `seed`.
pub fn synthetic_regressor(
    anchor: &OrientedBox,
    gt: &OrientedBox,
    pull: f64,
    noise_scale: f64,
    seed: u64,
) -> OrientedBox {
    let theta_goal = anchor.theta + normalize_angle(gt.theta - anchor.theta);
    let mut b = OrientedBox {
        x: lerp(anchor.x, gt.x, pull),
        y: lerp(anchor.y, gt.y, pull),
        w: lerp(anchor.w, gt.w, pull),
        h: lerp(anchor.h, gt.h, pull),
        theta: lerp(anchor.theta, theta_goal, pull),
    };
    if noise_scale > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut n = || -> f64 { StandardNormal.sample(&mut rng) };
        b.x += noise_scale * anchor.w * n();
        b.y += noise_scale * anchor.h * n();
        b.w *= (noise_scale * n()).exp();
        b.h *= (noise_scale * n()).exp();
        b.theta += noise_scale * n();
    }
    // Extrapolating pulls can shrink a side through zero.
    b.w = b.w.abs().max(1e-6);
    b.h = b.h.abs().max(1e-6);
    b.normalized()
}

/// How predictions are synthesized for every anchor of a scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressorParams {
    /// Each anchor's pull is drawn uniformly from `[pull_min, pull_max]`.
    /// Negative pulls model regressions that drift away from the object.
    pub pull_min: f64,
    pub pull_max: f64,
    pub noise: f64,
    /// Anchors whose center is farther than `reach` times the object's long
    /// side from every object center regress toward nothing (pull 0).
    pub reach: f64,
}

impl Default for RegressorParams {
    fn default() -> Self {
        Self {
            pull_min: -0.4,
            pull_max: 1.0,
            noise: 0.1,
            reach: 1.0,
        }
    }
}
