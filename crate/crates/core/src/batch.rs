//! Flat-array batch entry points.
//!
//! Boxes cross this boundary as contiguous row-major `f64` arrays with five
//! values per box: `x, y, w, h, theta`. These functions are the surface a
//! foreign-function layer wraps; they call the same kernels as the typed API,
//! so results are bit-identical to per-pair calls.

use crate::assignment::{match_matrix, select, MatchingConfig};
use crate::codec::{decode, encode, Offsets};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::geometry::{rotated_iou, OrientedBox};

/// Pairs per work unit when filling IoU matrices.
pub const IOU_CHUNK: usize = 4096;

/// Parses a flat `[x, y, w, h, theta] * n` array into validated boxes.
///
/// Angles are kept exactly as given (not re-wrapped) so a box read back from
/// its own flat form is bit-identical.
pub fn boxes_from_flat(flat: &[f64]) -> Result<Vec<OrientedBox>> {
    if !flat.len().is_multiple_of(5) {
        return Err(Error::Shape(flat.len()));
    }
    flat.chunks_exact(5)
        .map(|c| {
            let b = OrientedBox {
                x: c[0],
                y: c[1],
                w: c[2],
                h: c[3],
                theta: c[4],
            };
            b.validate().map(|_| b)
        })
        .collect()
}

pub fn boxes_to_flat(boxes: &[OrientedBox]) -> Vec<f64> {
    boxes
        .iter()
        .flat_map(|b| [b.x, b.y, b.w, b.h, b.theta])
        .collect()
}

/// Row-major `n x m` IoU matrix between two box lists.
pub fn iou_matrix(a: &[OrientedBox], b: &[OrientedBox], exec: Execution) -> Vec<f64> {
    let m = b.len();
    let mut out = vec![0.0; a.len() * m];
    if m == 0 {
        return out;
    }
    exec::fill_chunks(exec, &mut out, IOU_CHUNK, |ci, chunk| {
        let base = ci * IOU_CHUNK;
        for (k, v) in chunk.iter_mut().enumerate() {
            let idx = base + k;
            *v = rotated_iou(&a[idx / m], &b[idx % m]);
        }
    });
    out
}

/// IoU of `a[k]` with `b[k]` for every `k`.
pub fn paired_iou(a: &[OrientedBox], b: &[OrientedBox], exec: Execution) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            what: "paired boxes",
            expected: a.len(),
            actual: b.len(),
        });
    }
    let mut out = vec![0.0; a.len()];
    exec::fill_chunks(exec, &mut out, IOU_CHUNK, |ci, chunk| {
        let base = ci * IOU_CHUNK;
        for (k, v) in chunk.iter_mut().enumerate() {
            *v = rotated_iou(&a[base + k], &b[base + k]);
        }
    });
    Ok(out)
}

/// Flat wrapper over [`iou_matrix`]. Returns the `n x m` matrix row-major.
pub fn batch_iou(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    batch_iou_with(a, b, Execution::default())
}

pub fn batch_iou_with(a: &[f64], b: &[f64], exec: Execution) -> Result<Vec<f64>> {
    let a = boxes_from_flat(a)?;
    let b = boxes_from_flat(b)?;
    Ok(iou_matrix(&a, &b, exec))
}

/// Three aligned per-anchor arrays: label (0/1), matched ground truth (-1 for
/// negatives), and compensation weight.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatAssignment {
    pub labels: Vec<i32>,
    pub matched_gt: Vec<i64>,
    pub weights: Vec<f64>,
}

pub fn batch_assign(
    anchors: &[f64],
    predictions: &[f64],
    gts: &[f64],
    config: &MatchingConfig,
    t: f64,
) -> Result<FlatAssignment> {
    batch_assign_with(anchors, predictions, gts, config, t, Execution::default())
}

pub fn batch_assign_with(
    anchors: &[f64],
    predictions: &[f64],
    gts: &[f64],
    config: &MatchingConfig,
    t: f64,
    exec: Execution,
) -> Result<FlatAssignment> {
    let anchors = boxes_from_flat(anchors)?;
    let predictions = boxes_from_flat(predictions)?;
    let gts = boxes_from_flat(gts)?;
    let m = match_matrix(&anchors, &predictions, &gts, config, t, exec)?;
    let a = select(&m.md, m.n_anchors, m.n_gts, config.pos_threshold)?;
    Ok(FlatAssignment {
        labels: a.labels.iter().map(|l| l.is_positive() as i32).collect(),
        matched_gt: a
            .matched_gt
            .iter()
            .map(|g| g.map_or(-1, |g| g as i64))
            .collect(),
        weights: a.weights,
    })
}

/// Encodes `targets[k]` against `anchors[k]`; returns five offsets per pair.
pub fn batch_encode(targets: &[f64], anchors: &[f64]) -> Result<Vec<f64>> {
    let targets = boxes_from_flat(targets)?;
    let anchors = boxes_from_flat(anchors)?;
    if targets.len() != anchors.len() {
        return Err(Error::LengthMismatch {
            what: "anchors",
            expected: targets.len(),
            actual: anchors.len(),
        });
    }
    let mut out = Vec::with_capacity(5 * targets.len());
    for (t, a) in targets.iter().zip(&anchors) {
        out.extend_from_slice(&encode(t, a)?.to_array());
    }
    Ok(out)
}

/// Decodes five offsets per anchor back to boxes in flat form.
pub fn batch_decode(offsets: &[f64], anchors: &[f64]) -> Result<Vec<f64>> {
    if !offsets.len().is_multiple_of(5) {
        return Err(Error::Shape(offsets.len()));
    }
    let anchors = boxes_from_flat(anchors)?;
    if offsets.len() / 5 != anchors.len() {
        return Err(Error::LengthMismatch {
            what: "anchors",
            expected: offsets.len() / 5,
            actual: anchors.len(),
        });
    }
    let boxes: Vec<OrientedBox> = offsets
        .chunks_exact(5)
        .zip(&anchors)
        .map(|(o, a)| decode(&Offsets::from_array([o[0], o[1], o[2], o[3], o[4]]), a))
        .collect();
    Ok(boxes_to_flat(&boxes))
}
