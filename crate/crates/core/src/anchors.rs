//! Horizontal anchor grids over a feature pyramid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::OrientedBox;

/// One pyramid level: cell size in pixels and the side of its unit-ratio anchor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub stride: f64,
    pub base_scale: f64,
}

impl LevelSpec {
    /// Level with the default base scale of four cells.
    pub fn with_stride(stride: f64) -> Self {
        Self {
            stride,
            base_scale: 4.0 * stride,
        }
    }
}

/// Strides of pyramid levels P3 through P7.
pub const DEFAULT_STRIDES: [f64; 5] = [8.0, 16.0, 32.0, 64.0, 128.0];
/// Width/height ratios of the anchors placed at every location.
pub const DEFAULT_RATIOS: [f64; 3] = [0.5, 1.0, 2.0];

pub fn default_levels() -> Vec<LevelSpec> {
    DEFAULT_STRIDES
        .iter()
        .map(|&s| LevelSpec::with_stride(s))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorGrid {
    pub anchors: Vec<OrientedBox>,
    /// Index of the first anchor of each level, plus a final entry equal to the total.
    pub level_offsets: Vec<usize>,
    pub strides: Vec<f64>,
    pub ratios: Vec<f64>,
}

impl AnchorGrid {
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn level(&self, level: usize) -> &[OrientedBox] {
        &self.anchors[self.level_offsets[level]..self.level_offsets[level + 1]]
    }

    pub fn anchors_per_location(&self) -> usize {
        self.ratios.len()
    }
}

/// Number of anchors `generate_grid` produces for the given configuration.
pub fn expected_count(image_w: f64, image_h: f64, levels: &[LevelSpec], n_ratios: usize) -> usize {
    levels
        .iter()
        .map(|l| {
            (image_w / l.stride).ceil() as usize * (image_h / l.stride).ceil() as usize * n_ratios
        })
        .sum()
}

/// Tiles anchors over every level. For ratio `r` the anchor is
/// `base_scale * sqrt(r)` wide and `base_scale / sqrt(r)` tall, so all anchors
/// of a level share the area `base_scale^2`. Ordering is level-major, then
/// row-major over cells, then by ratio.
pub fn generate_grid(
    image_w: f64,
    image_h: f64,
    levels: &[LevelSpec],
    ratios: &[f64],
) -> Result<AnchorGrid> {
    let positive = |v: f64| v.is_finite() && v > 0.0;
    if !positive(image_w) || !positive(image_h) {
        return Err(Error::InvalidConfig(format!(
            "image size {image_w}x{image_h} must be positive"
        )));
    }
    if levels.is_empty() || ratios.is_empty() {
        return Err(Error::InvalidConfig(
            "need at least one level and one ratio".into(),
        ));
    }
    if let Some(l) = levels
        .iter()
        .find(|l| !positive(l.stride) || !positive(l.base_scale))
    {
        return Err(Error::InvalidConfig(format!("bad level {l:?}")));
    }
    if let Some(r) = ratios.iter().find(|&&r| !positive(r)) {
        return Err(Error::InvalidConfig(format!("bad ratio {r}")));
    }

    let shapes: Vec<(f64, f64)> = ratios
        .iter()
        .map(|&r| (r.sqrt(), r.sqrt().recip()))
        .collect();
    let total = expected_count(image_w, image_h, levels, ratios.len());
    let mut anchors = Vec::with_capacity(total);
    let mut level_offsets = Vec::with_capacity(levels.len() + 1);
    for level in levels {
        level_offsets.push(anchors.len());
        let cols = (image_w / level.stride).ceil() as usize;
        let rows = (image_h / level.stride).ceil() as usize;
        for row in 0..rows {
            let cy = (row as f64 + 0.5) * level.stride;
            for col in 0..cols {
                let cx = (col as f64 + 0.5) * level.stride;
                for &(sw, sh) in &shapes {
                    anchors.push(OrientedBox {
                        x: cx,
                        y: cy,
                        w: level.base_scale * sw,
                        h: level.base_scale * sh,
                        theta: 0.0,
                    });
                }
            }
        }
    }
    level_offsets.push(anchors.len());
    Ok(AnchorGrid {
        anchors,
        level_offsets,
        strides: levels.iter().map(|l| l.stride).collect(),
        ratios: ratios.to_vec(),
    })
}
