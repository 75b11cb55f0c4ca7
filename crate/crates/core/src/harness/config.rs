//! TOML run configuration. Every key mirrors a CLI flag; all keys are optional
//! and unset keys fall back to library defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::bench::BenchConfig;
use super::corpus::CorpusConfig;
use super::experiment::{ExperimentConfig, Strategy};
use super::oracle::{OracleConfig, Sampling};
use super::report::ReportFormat;
use crate::anchors::LevelSpec;
use crate::assignment::MatchingConfig;
use crate::error::{Error, Result};
use crate::exec::Execution;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessConfig {
    pub seed: Option<u64>,
    pub strategy: Option<Strategy>,
    pub alpha0: Option<f64>,
    pub gamma: Option<f64>,
    pub threshold: Option<f64>,
    pub format: Option<ReportFormat>,
    pub out: Option<PathBuf>,
    pub sequential: Option<bool>,

    pub progress: Option<f64>,
    pub penalty_during_warmup: Option<bool>,
    pub strides: Option<Vec<f64>>,
    /// One per stride; defaults to four strides each.
    pub base_scales: Option<Vec<f64>>,
    pub ratios: Option<Vec<f64>>,
    pub bins: Option<usize>,

    pub pull_min: Option<f64>,
    pub pull_max: Option<f64>,
    pub noise: Option<f64>,
    pub reach: Option<f64>,
    pub score_noise: Option<f64>,

    pub annotations: Option<PathBuf>,
    pub strict: Option<bool>,
    pub classes: Option<Vec<String>>,
    pub scenes: Option<usize>,
    pub image_width: Option<f64>,
    pub image_height: Option<f64>,
    pub objects_min: Option<usize>,
    pub objects_max: Option<usize>,

    pub pairs: Option<usize>,
    pub batch_size: Option<usize>,
    pub assign_scenes: Option<usize>,
    pub samples: Option<usize>,
    pub sampling: Option<Sampling>,
    pub sigmas: Option<f64>,

    pub iou_threshold: Option<f64>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),* $(,)?) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f; } )*
    };
}

impl HarnessConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Keys set in `top` replace those in `self`.
    pub fn overlay(mut self, top: HarnessConfig) -> Self {
        let base = &mut self;
        overlay!(base, top;
            seed, strategy, alpha0, gamma, threshold, format, out, sequential,
            progress, penalty_during_warmup, strides, base_scales, ratios, bins,
            pull_min, pull_max, noise, reach, score_noise,
            annotations, strict, classes, scenes, image_width, image_height, objects_min, objects_max,
            pairs, batch_size, assign_scenes, samples, sampling, sigmas,
            iou_threshold,
        );
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn exec(&self) -> Execution {
        if self.sequential.unwrap_or(false) {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    pub fn matching(&self) -> Result<MatchingConfig> {
        let d = MatchingConfig::default();
        let m = MatchingConfig {
            alpha0: self.alpha0.unwrap_or(d.alpha0),
            gamma: self.gamma.unwrap_or(d.gamma),
            pos_threshold: self.threshold.unwrap_or(d.pos_threshold),
            penalty_during_warmup: self
                .penalty_during_warmup
                .unwrap_or(d.penalty_during_warmup),
            ..d
        };
        m.validate()?;
        Ok(m)
    }

    pub fn levels(&self) -> Result<Option<Vec<LevelSpec>>> {
        let Some(strides) = &self.strides else {
            if self.base_scales.is_some() {
                return Err(Error::InvalidConfig("base_scales requires strides".into()));
            }
            return Ok(None);
        };
        match &self.base_scales {
            None => Ok(Some(
                strides.iter().map(|&s| LevelSpec::with_stride(s)).collect(),
            )),
            Some(scales) if scales.len() == strides.len() => Ok(Some(
                strides
                    .iter()
                    .zip(scales)
                    .map(|(&stride, &base_scale)| LevelSpec { stride, base_scale })
                    .collect(),
            )),
            Some(scales) => Err(Error::LengthMismatch {
                what: "base_scales",
                expected: strides.len(),
                actual: scales.len(),
            }),
        }
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig {
            matching: self.matching()?,
            exec: self.exec(),
            ..ExperimentConfig::default()
        };
        if let Some(levels) = self.levels()? {
            c.levels = levels;
        }
        if let Some(r) = &self.ratios {
            c.ratios = r.clone();
        }
        let r = &mut c.regressor;
        r.pull_min = self.pull_min.unwrap_or(r.pull_min);
        r.pull_max = self.pull_max.unwrap_or(r.pull_max);
        r.noise = self.noise.unwrap_or(r.noise);
        r.reach = self.reach.unwrap_or(r.reach);
        c.progress = self.progress.unwrap_or(c.progress);
        c.score_noise = self.score_noise.unwrap_or(c.score_noise);
        c.bins = self.bins.unwrap_or(c.bins);
        if !(0.0..=1.0).contains(&c.progress) {
            return Err(Error::InvalidConfig(format!(
                "progress {} outside [0, 1]",
                c.progress
            )));
        }
        if c.regressor.pull_min > c.regressor.pull_max
            || c.regressor.noise < 0.0
            || c.score_noise < 0.0
        {
            return Err(Error::InvalidConfig("bad regressor parameters".into()));
        }
        Ok(c)
    }

    pub fn corpus(&self) -> Result<CorpusConfig> {
        let d = CorpusConfig::default();
        let c = CorpusConfig {
            scenes: self.scenes.unwrap_or(d.scenes),
            width: self.image_width.unwrap_or(d.width),
            height: self.image_height.unwrap_or(d.height),
            objects_min: self.objects_min.unwrap_or(d.objects_min),
            objects_max: self.objects_max.unwrap_or(d.objects_max),
            ..d
        };
        c.validate()?;
        Ok(c)
    }

    pub fn bench(&self) -> BenchConfig {
        let d = BenchConfig::default();
        BenchConfig {
            pairs: self.pairs.unwrap_or(d.pairs),
            seed: self.seed(),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            assign_scenes: self.assign_scenes.unwrap_or(d.assign_scenes),
            exec: self.exec(),
        }
    }

    pub fn oracle(&self) -> OracleConfig {
        let d = OracleConfig::default();
        OracleConfig {
            pairs: self.pairs.unwrap_or(d.pairs),
            samples: self.samples.unwrap_or(d.samples),
            seed: self.seed(),
            sigmas: self.sigmas.unwrap_or(d.sigmas),
            sampling: self.sampling.unwrap_or(d.sampling),
            exec: self.exec(),
        }
    }

    pub fn image_size(&self) -> Option<(f64, f64)> {
        self.image_width.zip(self.image_height)
    }
}
