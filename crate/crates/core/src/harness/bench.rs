//! Throughput benchmark over seeded rotated-IoU and assignment workloads.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::corpus::{generate_scene, CorpusConfig};
use super::experiment::synthesize_predictions;
use super::oracle::random_pair;
use super::regressor::{derive_seed, RegressorParams};
use super::stats::SCHEMA_VERSION;
use crate::anchors::{default_levels, generate_grid, DEFAULT_RATIOS};
use crate::assignment::{assign_anchors, MatchingConfig};
use crate::batch::paired_iou;
use crate::error::Result;
use crate::exec::Execution;

const BENCH_SCENE_STREAM: u64 = 0xBE5C;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub pairs: usize,
    pub seed: u64,
    /// Pairs are generated and scored in batches of this size.
    pub batch_size: usize,
    pub assign_scenes: usize,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            pairs: 1_000_000,
            seed: 0,
            batch_size: 65_536,
            assign_scenes: 20,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub seed: u64,
    pub execution: String,
    pub threads: usize,
    pub pairs: u64,
    pub batch_size: u64,
    pub batches: u64,
    pub iou_seconds: f64,
    pub pairs_per_second: f64,
    /// Sum of all IoUs in pair order.
    pub iou_checksum: f64,
    pub overlapping_pairs: u64,
    pub assign_scenes: u64,
    pub assign_anchors: u64,
    pub assign_positives: u64,
    pub assign_seconds: f64,
    pub scenes_per_second: f64,
}

fn threads(exec: Execution) -> usize {
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return rayon::current_num_threads();
    }
    let _ = exec;
    1
}

fn per_second(n: u64, seconds: f64) -> f64 {
    if n == 0 || seconds <= 0.0 {
        0.0
    } else {
        n as f64 / seconds
    }
}

/// Times `rotated_iou` over `config.pairs` seeded pairs and `assign` over
/// `config.assign_scenes` synthetic scenes. Only the timings vary between runs.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchReport> {
    let batch_size = config.batch_size.max(1);
    let mut checksum = 0.0;
    let mut overlapping = 0u64;
    let mut batches = 0u64;
    let mut iou_seconds = 0.0;
    let mut start = 0;
    while start < config.pairs {
        let end = (start + batch_size).min(config.pairs);
        let (a, b): (Vec<_>, Vec<_>) = (start..end)
            .map(|k| random_pair(config.seed, k as u64))
            .unzip();
        let t0 = Instant::now();
        let ious = paired_iou(&a, &b, config.exec)?;
        iou_seconds += t0.elapsed().as_secs_f64();
        for v in ious {
            checksum += v;
            overlapping += (v > 0.0) as u64;
        }
        batches += 1;
        start = end;
    }

    let corpus = CorpusConfig::default();
    let matching = MatchingConfig::default();
    let levels = default_levels();
    let regressor = RegressorParams::default();
    let mut workloads = Vec::with_capacity(config.assign_scenes);
    for i in 0..config.assign_scenes {
        let scene = generate_scene(&corpus, config.seed, i);
        let grid = generate_grid(scene.width, scene.height, &levels, &DEFAULT_RATIOS)?;
        let gts = scene.gt_boxes();
        let seed = derive_seed(config.seed, BENCH_SCENE_STREAM, i as u64);
        let preds = synthesize_predictions(&grid.anchors, &gts, &regressor, seed);
        workloads.push((grid.anchors, preds, gts));
    }
    let (mut anchors, mut positives) = (0u64, 0u64);
    let t0 = Instant::now();
    for (a, p, g) in &workloads {
        let r = assign_anchors(a, p, g, &matching, 1.0, config.exec)?;
        anchors += a.len() as u64;
        positives += r.num_positives() as u64;
    }
    let assign_seconds = t0.elapsed().as_secs_f64();

    Ok(BenchReport {
        schema_version: SCHEMA_VERSION,
        seed: config.seed,
        execution: if config.exec.is_parallel() {
            "parallel"
        } else {
            "sequential"
        }
        .into(),
        threads: threads(config.exec),
        pairs: config.pairs as u64,
        batch_size: batch_size as u64,
        batches,
        iou_seconds,
        pairs_per_second: per_second(config.pairs as u64, iou_seconds),
        iou_checksum: checksum,
        overlapping_pairs: overlapping,
        assign_scenes: config.assign_scenes as u64,
        assign_anchors: anchors,
        assign_positives: positives,
        assign_seconds,
        scenes_per_second: per_second(config.assign_scenes as u64, assign_seconds),
    })
}
