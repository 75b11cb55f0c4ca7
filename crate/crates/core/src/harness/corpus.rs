//! Seeded synthetic scenes with controllable size, aspect ratio and orientation.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::annotations::{GtObject, Scene};
use super::regressor::rng_for;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::geometry::OrientedBox;

pub const CORPUS_CLASSES: [&str; 3] = ["ship", "plane", "vehicle"];

const SCENE_STREAM: u64 = 0x5CE7E;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub scenes: usize,
    pub width: f64,
    pub height: f64,
    pub objects_min: usize,
    pub objects_max: usize,
    /// Long side of each object, uniform in this range (pixels).
    pub long_side: (f64, f64),
    /// Long/short side ratio, uniform in this range.
    pub aspect: (f64, f64),
    /// Orientation, uniform in this range (radians).
    pub angle: (f64, f64),
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            scenes: 100,
            width: 256.0,
            height: 256.0,
            objects_min: 1,
            objects_max: 6,
            long_side: (24.0, 160.0),
            aspect: (1.0, 6.0),
            angle: (-FRAC_PI_2, FRAC_PI_2),
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.width > 0.0
            && self.height > 0.0
            && self.objects_min >= 1
            && self.objects_min <= self.objects_max
            && self.long_side.0 > 0.0
            && self.long_side.0 <= self.long_side.1
            && self.aspect.0 >= 1.0
            && self.aspect.0 <= self.aspect.1
            && self.angle.0 <= self.angle.1
            && self.angle.1 - self.angle.0 <= PI;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("bad corpus config {self:?}")))
        }
    }
}

fn uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

pub fn generate_scene(config: &CorpusConfig, seed: u64, index: usize) -> Scene {
    let mut rng = rng_for(seed, SCENE_STREAM, index as u64);
    let n = rng.random_range(config.objects_min..=config.objects_max);
    let objects = (0..n)
        .map(|_| {
            let long = uniform(&mut rng, config.long_side);
            let short = long / uniform(&mut rng, config.aspect);
            let theta = uniform(&mut rng, config.angle);
            let x = rng.random_range(0.0..config.width);
            let y = rng.random_range(0.0..config.height);
            let class = CORPUS_CLASSES[rng.random_range(0..CORPUS_CLASSES.len())];
            GtObject {
                bbox: OrientedBox {
                    x,
                    y,
                    w: long,
                    h: short,
                    theta,
                }
                .canonical(),
                class: class.to_string(),
                difficult: false,
            }
        })
        .collect();
    Scene {
        width: config.width,
        height: config.height,
        objects,
    }
}

/// Generates `config.scenes` scenes; scene `i` depends only on `(seed, i)`.
pub fn generate_corpus(config: &CorpusConfig, seed: u64, exec: Execution) -> Result<Vec<Scene>> {
    config.validate()?;
    Ok(exec::map_indexed(exec, config.scenes, |i| {
        generate_scene(config, seed, i)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_valid() {
        let cfg = CorpusConfig::default();
        let a = generate_corpus(&cfg, 11, Execution::Parallel).unwrap();
        let b = generate_corpus(&cfg, 11, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 100);
        let classes: Vec<String> = CORPUS_CLASSES.iter().map(|s| s.to_string()).collect();
        for s in &a {
            assert!((1..=6).contains(&s.objects.len()));
            s.validate(Some(&classes)).unwrap();
            for o in &s.objects {
                assert!(o.bbox.w >= o.bbox.h);
                assert!(o.bbox.w >= 24.0 && o.bbox.w <= 160.0);
            }
        }
        assert_ne!(a, generate_corpus(&cfg, 12, Execution::Sequential).unwrap());
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = CorpusConfig {
            objects_min: 0,
            ..Default::default()
        };
        assert!(generate_corpus(&cfg, 0, Execution::Sequential).is_err());
    }
}
