//! Label-assignment diagnostics over a set of scenes.
//!
//! For every scene the anchor grid is tiled, each anchor is pushed through the
//! synthetic regressor, and anchors are labeled by the chosen strategy. The
//! resulting statistics describe how well positives localize after regression
//! and how a score driven by the assignment metric ranks output IoU.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::annotations::Scene;
use super::regressor::{derive_seed, rng_for, synthetic_regressor, RegressorParams};
use super::stats::{
    ratio, Histogram, ScatterSummary, StatsReport, HIGH_QUALITY_IOU, SCHEMA_VERSION,
};
use crate::anchors::{default_levels, generate_grid, LevelSpec, DEFAULT_RATIOS};
use crate::assignment::{match_matrix, select, MatchMatrix, MatchingConfig};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::geometry::OrientedBox;

const SCENE_STREAM: u64 = 0xE5CE;
const PULL_STREAM: u64 = 0x9011;
const NOISE_STREAM: u64 = 0x4015E;
const SCORE_STREAM: u64 = 0x5C0BE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Threshold on the anchor's own IoU.
    InputIou,
    /// Threshold on `alpha * sa + (1 - alpha) * fa` without the uncertainty penalty.
    OutputIou,
    /// Threshold on the full matching degree.
    MatchingDegree,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [
        Strategy::InputIou,
        Strategy::OutputIou,
        Strategy::MatchingDegree,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::InputIou => "input-iou",
            Strategy::OutputIou => "output-iou",
            Strategy::MatchingDegree => "matching-degree",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown strategy {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub levels: Vec<LevelSpec>,
    pub ratios: Vec<f64>,
    pub matching: MatchingConfig,
    /// Training progress used for the `alpha` schedule.
    pub progress: f64,
    pub regressor: RegressorParams,
    /// Standard deviation of the noise added to synthetic scores.
    pub score_noise: f64,
    pub bins: usize,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            levels: default_levels(),
            ratios: DEFAULT_RATIOS.to_vec(),
            matching: MatchingConfig::default(),
            progress: 1.0,
            regressor: RegressorParams::default(),
            score_noise: 0.05,
            bins: super::stats::DEFAULT_BINS,
            exec: Execution::default(),
        }
    }
}

/// Per-anchor predictions for one scene. Each anchor regresses toward the
/// object whose center is nearest, provided it lies within `reach` long sides.
pub fn synthesize_predictions(
    anchors: &[OrientedBox],
    gts: &[OrientedBox],
    params: &RegressorParams,
    scene_seed: u64,
) -> Vec<OrientedBox> {
    anchors
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let target = gts
                .iter()
                .map(|g| {
                    let d = ((g.x - a.x).powi(2) + (g.y - a.y).powi(2)).sqrt();
                    (d / g.w.max(g.h), g)
                })
                .filter(|(rel, _)| *rel <= params.reach)
                .min_by(|x, y| x.0.total_cmp(&y.0))
                .map(|(_, g)| g);
            let pull = match target {
                Some(_) if params.pull_max > params.pull_min => {
                    rng_for(scene_seed, PULL_STREAM, i as u64)
                        .random_range(params.pull_min..params.pull_max)
                }
                Some(_) => params.pull_min,
                None => 0.0,
            };
            let noise_seed = derive_seed(scene_seed, NOISE_STREAM, i as u64);
            synthetic_regressor(a, target.unwrap_or(a), pull, params.noise, noise_seed)
        })
        .collect()
}

/// Sub-seed of scene `index`; the same value drives the scene's predictions
/// and score noise in every run.
pub fn scene_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, SCENE_STREAM, index as u64)
}

/// The per-pair score a strategy thresholds, anchor-major like `m`.
pub fn strategy_metric(strategy: Strategy, m: &MatchMatrix, config: &ExperimentConfig) -> Vec<f64> {
    match strategy {
        Strategy::InputIou => m.sa.clone(),
        Strategy::MatchingDegree => m.md.clone(),
        Strategy::OutputIou => {
            let alpha = config.matching.alpha_at(config.progress);
            m.sa.iter()
                .zip(&m.fa)
                .map(|(&sa, &fa)| alpha * sa + (1.0 - alpha) * fa)
                .collect()
        }
    }
}

#[derive(Debug, Clone)]
struct SceneStats {
    anchors: u64,
    gts: u64,
    positives: u64,
    compensated: u64,
    hist: Histogram,
    hq: u64,
    hq_from_pos: u64,
    sa: Vec<f64>,
    fa: Vec<f64>,
    score: Vec<f64>,
}

fn scene_stats(
    scene: &Scene,
    scene_seed: u64,
    config: &ExperimentConfig,
    strategies: &[Strategy],
) -> Result<Option<Vec<SceneStats>>> {
    if scene.objects.is_empty() {
        return Ok(None);
    }
    let grid = generate_grid(scene.width, scene.height, &config.levels, &config.ratios)?;
    let gts = scene.gt_boxes();
    let predictions = synthesize_predictions(&grid.anchors, &gts, &config.regressor, scene_seed);
    let m = match_matrix(
        &grid.anchors,
        &predictions,
        &gts,
        &config.matching,
        config.progress,
        Execution::Sequential,
    )?;

    let mut out = Vec::with_capacity(strategies.len());
    for &strategy in strategies {
        let metric = strategy_metric(strategy, &m, config);
        let a = select(&metric, m.n_anchors, m.n_gts, config.matching.pos_threshold)?;
        let mut s = SceneStats {
            anchors: m.n_anchors as u64,
            gts: m.n_gts as u64,
            positives: 0,
            compensated: a
                .per_gt
                .iter()
                .filter(|g| g.compensated_anchor.is_some())
                .count() as u64,
            hist: Histogram::new(config.bins),
            hq: 0,
            hq_from_pos: 0,
            sa: Vec::new(),
            fa: Vec::new(),
            score: Vec::new(),
        };
        for i in 0..m.n_anchors {
            let g = a.matched_gt[i].unwrap_or(a.best_gt[i]);
            let k = m.idx(i, g);
            let (sa, fa) = (m.sa[k], m.fa[k]);
            let positive = a.labels[i].is_positive();
            if positive {
                s.positives += 1;
                s.hist.add(fa);
            }
            if sa <= 0.0 && fa <= 0.0 {
                continue;
            }
            if fa >= HIGH_QUALITY_IOU {
                s.hq += 1;
                if positive {
                    s.hq_from_pos += 1;
                }
            }
            let noise: f64 = rng_for(scene_seed, SCORE_STREAM, i as u64).sample(StandardNormal);
            s.sa.push(sa);
            s.fa.push(fa);
            s.score.push(metric[k] + config.score_noise * noise);
        }
        out.push(s);
    }
    Ok(Some(out))
}

/// Runs several strategies over the same scenes and predictions. Results are
/// deterministic in `seed` and independent of the execution policy.
pub fn run_strategies(
    scenes: &[Scene],
    config: &ExperimentConfig,
    strategies: &[Strategy],
    seed: u64,
) -> Result<Vec<StatsReport>> {
    config.matching.validate()?;
    if !scenes.iter().any(|s| !s.objects.is_empty()) {
        return Err(Error::EmptyGroundTruth);
    }
    for s in scenes {
        s.validate(None)?;
    }
    let per_scene = exec::map_indexed(config.exec, scenes.len(), |i| {
        scene_stats(&scenes[i], scene_seed(seed, i), config, strategies)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut reports = Vec::with_capacity(strategies.len());
    for (k, strategy) in strategies.iter().enumerate() {
        let mut hist = Histogram::new(config.bins);
        let mut r = StatsReport {
            schema_version: SCHEMA_VERSION,
            strategy: strategy.to_string(),
            score_model: "synthetic: assignment metric plus gaussian noise".into(),
            seed,
            ..StatsReport::default()
        };
        let (mut sa, mut fa, mut score) = (Vec::new(), Vec::new(), Vec::new());
        for scene in &per_scene {
            let Some(stats) = scene else {
                continue;
            };
            let s = &stats[k];
            r.scenes += 1;
            r.anchors += s.anchors;
            r.ground_truths += s.gts;
            r.positives += s.positives;
            r.compensated += s.compensated;
            hist.merge(&s.hist);
            r.high_quality_detections += s.hq;
            r.high_quality_from_positives += s.hq_from_pos;
            sa.extend_from_slice(&s.sa);
            fa.extend_from_slice(&s.fa);
            score.extend_from_slice(&s.score);
        }
        r.positives_high_quality = hist.count_at_least(HIGH_QUALITY_IOU);
        r.fraction_positives_high_quality = ratio(r.positives_high_quality, hist.total());
        r.fraction_high_quality_from_positives =
            ratio(r.high_quality_from_positives, r.high_quality_detections);
        r.positive_output_iou = hist;
        r.input_iou_vs_score = ScatterSummary::from_samples(&sa, &score, config.bins);
        r.output_iou_vs_score = ScatterSummary::from_samples(&fa, &score, config.bins);
        reports.push(r);
    }
    Ok(reports)
}

pub fn run_experiment(
    scenes: &[Scene],
    config: &ExperimentConfig,
    strategy: Strategy,
    seed: u64,
) -> Result<StatsReport> {
    Ok(run_strategies(scenes, config, &[strategy], seed)?.remove(0))
}
