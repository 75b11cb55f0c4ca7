//! Monte-Carlo IoU oracle and the random box pairs it is checked on.
//!
//! The oracle never touches polygon clipping: it samples points in the union's
//! bounding box and classifies them with per-box point-in-rectangle tests.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::regressor::rng_for;
use crate::exec::{self, Execution};
use crate::geometry::{rotated_iou, OrientedBox, Point};

const PAIR_STREAM: u64 = 0xB0C5;
const SAMPLE_STREAM: u64 = 0x5A3B1E;

/// Smallest sample count accepted by the oracle.
pub const MIN_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    /// Binomial standard error of the estimate given the number of union hits.
    pub standard_error: f64,
    pub samples: u64,
    pub union_hits: u64,
    pub intersection_hits: u64,
}

/// How sample points are placed in the bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Independent uniform points.
    #[default]
    Iid,
    /// One uniform point per cell of a `k x k` grid (`k = floor(sqrt(n))`).
    /// Every point is still uniform over the box, but the error is well below
    /// the binomial standard error, which then acts as a conservative bound.
    Stratified,
}

impl std::str::FromStr for Sampling {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> crate::error::Result<Self> {
        match s {
            "iid" => Ok(Self::Iid),
            "stratified" => Ok(Self::Stratified),
            _ => Err(crate::error::Error::InvalidConfig(format!(
                "unknown sampling {s:?}"
            ))),
        }
    }
}

fn union_bounds(a: &OrientedBox, b: &OrientedBox) -> (Point, Point) {
    let (amin, amax) = a.aabb();
    let (bmin, bmax) = b.aabb();
    (
        Point::new(amin.x.min(bmin.x), amin.y.min(bmin.y)),
        Point::new(amax.x.max(bmax.x), amax.y.max(bmax.y)),
    )
}

/// `OrientedBox::contains` with the rotation hoisted out of the sampling loop.
struct Frame {
    x: f64,
    y: f64,
    s: f64,
    c: f64,
    hw: f64,
    hh: f64,
}

impl Frame {
    fn new(b: &OrientedBox) -> Self {
        let (s, c) = b.theta.sin_cos();
        Self {
            x: b.x,
            y: b.y,
            s,
            c,
            hw: 0.5 * b.w,
            hh: 0.5 * b.h,
        }
    }

    #[inline]
    fn contains(&self, p: Point) -> bool {
        let dx = p.x - self.x;
        let dy = p.y - self.y;
        (dx * self.c + dy * self.s).abs() <= self.hw
            && (-dx * self.s + dy * self.c).abs() <= self.hh
    }
}

/// Uniform rejection-sampling estimate of `IoU(a, b)` from `n_samples` iid points.
pub fn mc_iou_oracle(a: &OrientedBox, b: &OrientedBox, n_samples: usize, seed: u64) -> McEstimate {
    mc_iou_oracle_with(a, b, n_samples, seed, Sampling::Iid)
}

pub fn mc_iou_oracle_with(
    a: &OrientedBox,
    b: &OrientedBox,
    n_samples: usize,
    seed: u64,
    sampling: Sampling,
) -> McEstimate {
    let n_samples = n_samples.max(MIN_SAMPLES);
    let (lo, hi) = union_bounds(a, b);
    let span = hi - lo;
    let mut rng = rng_for(seed, SAMPLE_STREAM, 0);
    let (mut union_hits, mut inter_hits) = (0u64, 0u64);
    let (fa, fb) = (Frame::new(a), Frame::new(b));
    let mut tally = |p: Point| {
        let ia = fa.contains(p);
        let ib = fb.contains(p);
        union_hits += (ia || ib) as u64;
        inter_hits += (ia && ib) as u64;
    };
    let samples = match sampling {
        Sampling::Iid => {
            for _ in 0..n_samples {
                let u: f64 = rng.random();
                let v: f64 = rng.random();
                tally(Point::new(lo.x + u * span.x, lo.y + v * span.y));
            }
            n_samples as u64
        }
        Sampling::Stratified => {
            let k = (n_samples as f64).sqrt().floor() as usize;
            let cell = 1.0 / k as f64;
            for i in 0..k {
                for j in 0..k {
                    let u = (i as f64 + rng.random::<f64>()) * cell;
                    let v = (j as f64 + rng.random::<f64>()) * cell;
                    tally(Point::new(lo.x + u * span.x, lo.y + v * span.y));
                }
            }
            (k * k) as u64
        }
    };
    let (estimate, standard_error) = if union_hits == 0 {
        (0.0, 0.0)
    } else {
        let p = inter_hits as f64 / union_hits as f64;
        (p, (p * (1.0 - p) / union_hits as f64).sqrt())
    };
    McEstimate {
        estimate,
        standard_error,
        samples,
        union_hits,
        intersection_hits: inter_hits,
    }
}

/// A random box: center in `[0, 20]^2`, sides in `[1, 10]`, any orientation.
pub fn random_box(rng: &mut impl Rng) -> OrientedBox {
    OrientedBox::new(
        rng.random_range(0.0..20.0),
        rng.random_range(0.0..20.0),
        rng.random_range(1.0..10.0),
        rng.random_range(1.0..10.0),
        rng.random_range(-FRAC_PI_2..FRAC_PI_2),
    )
    .expect("sides are positive")
}

/// Pair `index` of the seeded workload: the second box is centered within 5
/// pixels of the first so most pairs overlap.
pub fn random_pair(seed: u64, index: u64) -> (OrientedBox, OrientedBox) {
    let mut rng = rng_for(seed, PAIR_STREAM, index);
    let a = random_box(&mut rng);
    let mut b = random_box(&mut rng);
    b.x = a.x + rng.random_range(-5.0..5.0);
    b.y = a.y + rng.random_range(-5.0..5.0);
    (a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub exact: f64,
    pub estimate: f64,
    pub standard_error: f64,
    /// `|exact - estimate| / standard_error`; 0 when both agree exactly.
    pub z: f64,
    pub within_tolerance: bool,
}

impl PairCheck {
    pub fn new(exact: f64, mc: &McEstimate, sigmas: f64) -> Self {
        let diff = (exact - mc.estimate).abs();
        let z = if diff == 0.0 {
            0.0
        } else if mc.standard_error > 0.0 {
            diff / mc.standard_error
        } else {
            f64::INFINITY
        };
        Self {
            exact,
            estimate: mc.estimate,
            standard_error: mc.standard_error,
            z,
            within_tolerance: diff <= sigmas * mc.standard_error || diff <= 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub pairs: usize,
    pub samples: usize,
    pub seed: u64,
    pub sigmas: f64,
    pub sampling: Sampling,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            pairs: 1000,
            samples: 1_000_000,
            seed: 0,
            sigmas: 3.0,
            sampling: Sampling::Stratified,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub schema_version: u32,
    pub config: OracleConfig,
    pub pairs_checked: usize,
    pub failures: usize,
    pub max_z: f64,
    pub mean_abs_error: f64,
    /// Closed-form cases: identity, disjoint, unit square vs its 45-degree twin.
    pub analytic: Vec<AnalyticCheck>,
    pub checks: Vec<PairCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticCheck {
    pub name: String,
    pub exact: f64,
    pub expected: f64,
    pub oracle: McEstimate,
}

/// Unit square and the same square rotated by 45 degrees.
pub fn octagon_pair() -> (OrientedBox, OrientedBox, f64) {
    let a = OrientedBox::new(0.0, 0.0, 1.0, 1.0, 0.0).unwrap();
    let b = OrientedBox::new(0.0, 0.0, 1.0, 1.0, FRAC_PI_4).unwrap();
    let inter = 2.0 * (SQRT_2 - 1.0);
    (a, b, inter / (2.0 - inter))
}

pub fn analytic_cases(samples: usize, seed: u64, sampling: Sampling) -> Vec<AnalyticCheck> {
    let id = OrientedBox::new(3.0, 4.0, 5.0, 2.0, 0.6).unwrap();
    let far = OrientedBox::new(40.0, -30.0, 5.0, 2.0, -0.2).unwrap();
    let (sq, rot, oct) = octagon_pair();
    [
        ("identity", id, id, 1.0),
        ("disjoint", id, far, 0.0),
        ("octagon", sq, rot, oct),
    ]
    .into_iter()
    .enumerate()
    .map(|(k, (name, a, b, expected))| AnalyticCheck {
        name: name.into(),
        exact: rotated_iou(&a, &b),
        expected,
        oracle: mc_iou_oracle_with(&a, &b, samples, seed ^ (k as u64 + 1), sampling),
    })
    .collect()
}

/// Compares exact IoU with the Monte-Carlo oracle on `config.pairs` seeded pairs.
pub fn run_iou_oracle(config: &OracleConfig) -> OracleReport {
    let checks = exec::map_indexed(config.exec, config.pairs, |i| {
        let (a, b) = random_pair(config.seed, i as u64);
        let mc = mc_iou_oracle_with(
            &a,
            &b,
            config.samples,
            config.seed ^ (i as u64) << 20,
            config.sampling,
        );
        PairCheck::new(rotated_iou(&a, &b), &mc, config.sigmas)
    });
    let failures = checks.iter().filter(|c| !c.within_tolerance).count();
    let max_z = checks.iter().map(|c| c.z).fold(0.0, f64::max);
    let mean_abs_error = if checks.is_empty() {
        0.0
    } else {
        checks
            .iter()
            .map(|c| (c.exact - c.estimate).abs())
            .sum::<f64>()
            / checks.len() as f64
    };
    OracleReport {
        schema_version: super::stats::SCHEMA_VERSION,
        config: config.clone(),
        pairs_checked: checks.len(),
        failures,
        max_z,
        mean_abs_error,
        analytic: analytic_cases(config.samples, config.seed, config.sampling),
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_matches_contains() {
        let mut rng = rng_for(3, 0, 0);
        for _ in 0..200 {
            let b = random_box(&mut rng);
            let f = Frame::new(&b);
            for _ in 0..50 {
                let p = Point::new(rng.random_range(-5.0..25.0), rng.random_range(-5.0..25.0));
                assert_eq!(f.contains(p), b.contains(p));
            }
        }
    }

    #[test]
    fn identical_boxes() {
        let b = OrientedBox::new(1.0, 2.0, 3.0, 1.5, 0.4).unwrap();
        let mc = mc_iou_oracle(&b, &b, 20_000, 1);
        assert_eq!(mc.estimate, 1.0);
        assert_eq!(mc.standard_error, 0.0);
        assert_eq!(mc.intersection_hits, mc.union_hits);
    }

    #[test]
    fn disjoint_boxes() {
        let a = OrientedBox::new(0.0, 0.0, 1.0, 1.0, 0.0).unwrap();
        let b = OrientedBox::new(10.0, 0.0, 1.0, 1.0, 0.3).unwrap();
        let mc = mc_iou_oracle(&a, &b, 20_000, 1);
        assert_eq!(mc.estimate, 0.0);
        assert!(mc.union_hits > 0);
    }

    #[test]
    fn octagon_within_three_sigma() {
        let (a, b, expected) = octagon_pair();
        for sampling in [Sampling::Iid, Sampling::Stratified] {
            let mc = mc_iou_oracle_with(&a, &b, 200_000, 5, sampling);
            assert!(
                (mc.estimate - expected).abs() <= 3.0 * mc.standard_error,
                "{sampling:?} {mc:?}"
            );
        }
    }

    #[test]
    fn sample_floor() {
        let (a, b, _) = octagon_pair();
        assert_eq!(mc_iou_oracle(&a, &b, 10, 0).samples, MIN_SAMPLES as u64);
        assert_eq!(
            mc_iou_oracle_with(&a, &b, 10_001, 0, Sampling::Stratified).samples,
            10_000
        );
    }

    #[test]
    fn pairs_are_seeded() {
        assert_eq!(random_pair(4, 17), random_pair(4, 17));
        assert_ne!(random_pair(4, 17), random_pair(4, 18));
    }

    #[test]
    fn small_oracle_run() {
        let r = run_iou_oracle(&OracleConfig {
            pairs: 20,
            samples: 20_000,
            sampling: Sampling::Stratified,
            ..Default::default()
        });
        assert_eq!(r.pairs_checked, 20);
        assert_eq!(r.analytic.len(), 3);
        assert!(r.mean_abs_error < 0.01);
    }
}
