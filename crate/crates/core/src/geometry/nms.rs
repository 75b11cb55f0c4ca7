use super::{rotated_iou, OrientedBox};
use crate::error::{Error, Result};

/// Greedy non-maximum suppression with rotated IoU.
///
/// Returns kept indices in descending score order; equal scores keep the lower
/// index first. A box is suppressed when its IoU with an already kept box is
/// strictly greater than `iou_threshold`.
pub fn rotated_nms(
    boxes: &[OrientedBox],
    scores: &[f64],
    iou_threshold: f64,
) -> Result<Vec<usize>> {
    if boxes.len() != scores.len() {
        return Err(Error::LengthMismatch {
            what: "scores",
            expected: boxes.len(),
            actual: scores.len(),
        });
    }
    if !(0.0..=1.0).contains(&iou_threshold) {
        return Err(Error::InvalidConfig(format!(
            "iou threshold {iou_threshold} outside [0, 1]"
        )));
    }
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    // Stable sort keeps lower indices first among equal scores.
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut keep: Vec<usize> = Vec::new();
    for i in order {
        if keep
            .iter()
            .all(|&k| rotated_iou(&boxes[k], &boxes[i]) <= iou_threshold)
        {
            keep.push(i);
        }
    }
    Ok(keep)
}
