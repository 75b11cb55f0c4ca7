//! Matching degree and dynamic anchor selection.
//!
//! Every (anchor, ground truth) pair gets a matching degree
//! `md = alpha * sa + (1 - alpha) * fa - |sa - fa|^gamma`, where `sa` is the IoU
//! of the anchor itself and `fa` the IoU of the anchor's regressed box. Anchors
//! whose best `md` clears the threshold become positives; each ground truth left
//! without a positive is given its best unclaimed anchor. Positive weights are
//! shifted per ground truth so that the best positive has weight exactly 1.

use serde::{Deserialize, Serialize};

use crate::anchors::AnchorGrid;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::geometry::{rotated_iou, OrientedBox};

/// Progress below which `alpha` is held at 1.
pub const WARMUP_END: f64 = 0.1;
/// Progress from which `alpha` stays at its final value.
pub const RAMP_END: f64 = 0.3;
// Not `RAMP_END - WARMUP_END`, which rounds below 0.2.
const RAMP_WIDTH: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchingConfig {
    /// Final weight of the input IoU, reached at progress 0.3.
    pub alpha0: f64,
    /// Exponent of the uncertainty penalty.
    pub gamma: f64,
    pub pos_threshold: f64,
    pub total_iterations: u64,
    /// Apply the `u^gamma` penalty while `alpha` is still held at 1.
    pub penalty_during_warmup: bool,
}

impl Default for MatchingConfig {
    fn default() -> Self {
        Self {
            alpha0: 0.3,
            gamma: 5.0,
            pos_threshold: 0.6,
            total_iterations: 1,
            penalty_during_warmup: true,
        }
    }
}

impl MatchingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0 && self.alpha0 <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha0 {} outside (0, 1]",
                self.alpha0
            )));
        }
        if !(self.gamma >= 1.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!("gamma {} < 1", self.gamma)));
        }
        if !(self.pos_threshold > 0.0 && self.pos_threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "positive threshold {} outside (0, 1)",
                self.pos_threshold
            )));
        }
        if self.total_iterations == 0 {
            return Err(Error::InvalidConfig("total_iterations must be > 0".into()));
        }
        Ok(())
    }

    /// Training progress `iteration / total_iterations`, clamped to `[0, 1]`.
    pub fn progress(&self, iteration: u64) -> f64 {
        (iteration as f64 / self.total_iterations as f64).clamp(0.0, 1.0)
    }

    pub fn alpha_at(&self, t: f64) -> f64 {
        alpha_schedule(t, self.alpha0)
    }

    /// Matching degree at progress `t`, honoring `penalty_during_warmup`.
    pub fn matching_degree_at(&self, sa: f64, fa: f64, t: f64) -> f64 {
        let alpha = self.alpha_at(t);
        if !self.penalty_during_warmup && t < WARMUP_END {
            alpha * sa + (1.0 - alpha) * fa
        } else {
            matching_degree(sa, fa, alpha, self.gamma)
        }
    }
}

/// Weight of the input IoU as a function of training progress `t`.
///
/// Held at 1 for `t < 0.1`, ramps linearly to `alpha0` over `[0.1, 0.3)`, then
/// stays at `alpha0`.
pub fn alpha_schedule(t: f64, alpha0: f64) -> f64 {
    if t < WARMUP_END {
        1.0
    } else if t < RAMP_END {
        // Same line as 5(alpha0 - 1)t + 1.5 - alpha0/2, written to hit the
        // breakpoint values exactly.
        1.0 - (1.0 - alpha0) * ((t - WARMUP_END) / RAMP_WIDTH)
    } else {
        alpha0
    }
}

#[inline]
pub fn matching_degree(sa: f64, fa: f64, alpha: f64, gamma: f64) -> f64 {
    let u = (sa - fa).abs();
    alpha * sa + (1.0 - alpha) * fa - u.powf(gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchScores {
    pub sa: f64,
    pub fa: f64,
    pub u: f64,
    pub md: f64,
}

impl MatchScores {
    pub fn new(sa: f64, fa: f64, alpha: f64, gamma: f64) -> Self {
        Self {
            sa,
            fa,
            u: (sa - fa).abs(),
            md: matching_degree(sa, fa, alpha, gamma),
        }
    }
}

/// Dense per-pair scores, anchor-major (`index = anchor * n_gts + gt`).
#[derive(Debug, Clone, PartialEq)]
pub struct MatchMatrix {
    pub n_anchors: usize,
    pub n_gts: usize,
    pub sa: Vec<f64>,
    pub fa: Vec<f64>,
    pub md: Vec<f64>,
}

impl MatchMatrix {
    #[inline]
    pub fn idx(&self, anchor: usize, gt: usize) -> usize {
        anchor * self.n_gts + gt
    }

    pub fn scores(&self, anchor: usize, gt: usize) -> MatchScores {
        let k = self.idx(anchor, gt);
        MatchScores {
            sa: self.sa[k],
            fa: self.fa[k],
            u: (self.sa[k] - self.fa[k]).abs(),
            md: self.md[k],
        }
    }
}

fn check_inputs(
    anchors: &[OrientedBox],
    predictions: &[OrientedBox],
    gts: &[OrientedBox],
) -> Result<()> {
    if gts.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    if predictions.len() != anchors.len() {
        return Err(Error::LengthMismatch {
            what: "predictions",
            expected: anchors.len(),
            actual: predictions.len(),
        });
    }
    for b in anchors.iter().chain(predictions).chain(gts) {
        b.validate()?;
    }
    Ok(())
}

/// Input IoU, output IoU and matching degree for every (anchor, gt) pair.
pub fn match_matrix(
    anchors: &[OrientedBox],
    predictions: &[OrientedBox],
    gts: &[OrientedBox],
    config: &MatchingConfig,
    t: f64,
    exec: Execution,
) -> Result<MatchMatrix> {
    config.validate()?;
    check_inputs(anchors, predictions, gts)?;
    let n_gts = gts.len();
    let rows = exec::map_indexed(exec, anchors.len(), |i| {
        let mut row = Vec::with_capacity(n_gts);
        for gt in gts {
            let sa = rotated_iou(&anchors[i], gt);
            let fa = rotated_iou(&predictions[i], gt);
            row.push((sa, fa, config.matching_degree_at(sa, fa, t)));
        }
        row
    });
    let n = anchors.len() * n_gts;
    let mut m = MatchMatrix {
        n_anchors: anchors.len(),
        n_gts,
        sa: Vec::with_capacity(n),
        fa: Vec::with_capacity(n),
        md: Vec::with_capacity(n),
    };
    for (sa, fa, md) in rows.into_iter().flatten() {
        m.sa.push(sa);
        m.fa.push(fa);
        m.md.push(md);
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtSummary {
    /// Largest matching degree among this ground truth's positives.
    pub md_max: f64,
    /// `1 - md_max`, added to every positive's matching degree.
    pub delta_md: f64,
    pub positives: usize,
    /// Anchor forced positive because nothing cleared the threshold.
    pub compensated_anchor: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub labels: Vec<Label>,
    /// Ground truth a positive anchor is trained against; `None` for negatives.
    pub matched_gt: Vec<Option<usize>>,
    /// Ground truth with the highest score for each anchor (ties to the lower index).
    pub best_gt: Vec<usize>,
    /// Score of each anchor against `matched_gt`, or `best_gt` for negatives.
    pub md: Vec<f64>,
    /// Compensation factor; zero for negatives.
    pub weights: Vec<f64>,
    pub per_gt: Vec<GtSummary>,
}

impl Assignment {
    pub fn num_positives(&self) -> usize {
        self.labels.iter().filter(|l| l.is_positive()).count()
    }

    pub fn positive_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_positive())
            .map(|(i, _)| i)
    }
}

/// Per-ground-truth compensation: returns `(md_max, delta_md, weights)`.
///
/// Weights are evaluated as `1 - (md_max - md)`, which equals `md + delta_md`
/// and makes the best positive's weight exactly 1.
fn compensate(md_pos: &[f64]) -> Option<(f64, f64, Vec<f64>)> {
    let md_max = md_pos.iter().copied().reduce(f64::max)?;
    let weights = md_pos.iter().map(|&m| 1.0 - (md_max - m)).collect();
    Some((md_max, 1.0 - md_max, weights))
}

/// Compensation factors for each ground truth's positive matching degrees.
pub fn compensation_weights(md_pos: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    md_pos
        .iter()
        .enumerate()
        .map(|(gt, group)| {
            compensate(group)
                .map(|(_, _, w)| w)
                .ok_or(Error::EmptyPositives { gt })
        })
        .collect()
}

/// Threshold selection with compensation over an arbitrary anchor-major score
/// matrix (matching degree for DAL, input IoU for the classic baseline).
pub fn select(
    metric: &[f64],
    n_anchors: usize,
    n_gts: usize,
    threshold: f64,
) -> Result<Assignment> {
    if n_gts == 0 {
        return Err(Error::EmptyGroundTruth);
    }
    if metric.len() != n_anchors * n_gts {
        return Err(Error::LengthMismatch {
            what: "score matrix",
            expected: n_anchors * n_gts,
            actual: metric.len(),
        });
    }
    if n_anchors < n_gts {
        return Err(Error::InsufficientAnchors {
            anchors: n_anchors,
            gts: n_gts,
        });
    }

    let mut best_gt = Vec::with_capacity(n_anchors);
    let mut md = Vec::with_capacity(n_anchors);
    for row in metric.chunks_exact(n_gts) {
        let mut g = 0;
        for (k, &v) in row.iter().enumerate().skip(1) {
            if v > row[g] {
                g = k;
            }
        }
        best_gt.push(g);
        md.push(row[g]);
    }

    let mut labels = vec![Label::Negative; n_anchors];
    let mut matched_gt = vec![None; n_anchors];
    let mut has_positive = vec![false; n_gts];
    for i in 0..n_anchors {
        if md[i] >= threshold {
            labels[i] = Label::Positive;
            matched_gt[i] = Some(best_gt[i]);
            has_positive[best_gt[i]] = true;
        }
    }

    let mut compensated = vec![None; n_gts];
    for g in 0..n_gts {
        if has_positive[g] {
            continue;
        }
        let mut pick: Option<usize> = None;
        for i in 0..n_anchors {
            if labels[i].is_positive() {
                continue;
            }
            if pick.is_none_or(|p| metric[i * n_gts + g] > metric[p * n_gts + g]) {
                pick = Some(i);
            }
        }
        if pick.is_none() {
            // Every anchor is claimed. Take a threshold positive from a GT that
            // keeps at least one other positive.
            let mut count = vec![0usize; n_gts];
            for m in matched_gt.iter().flatten() {
                count[*m] += 1;
            }
            for i in 0..n_anchors {
                let Some(owner) = matched_gt[i] else { continue };
                if count[owner] < 2 {
                    continue;
                }
                if pick.is_none_or(|p| metric[i * n_gts + g] > metric[p * n_gts + g]) {
                    pick = Some(i);
                }
            }
        }
        let i = pick.ok_or(Error::InsufficientAnchors {
            anchors: n_anchors,
            gts: n_gts,
        })?;
        labels[i] = Label::Positive;
        matched_gt[i] = Some(g);
        md[i] = metric[i * n_gts + g];
        has_positive[g] = true;
        compensated[g] = Some(i);
    }

    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n_gts];
    for (i, m) in matched_gt.iter().enumerate() {
        if let Some(g) = m {
            groups[*g].push(i);
        }
    }
    let mut weights = vec![0.0; n_anchors];
    let mut per_gt = Vec::with_capacity(n_gts);
    for (g, members) in groups.iter().enumerate() {
        let mds: Vec<f64> = members.iter().map(|&i| md[i]).collect();
        let (md_max, delta_md, w) = compensate(&mds).ok_or(Error::EmptyPositives { gt: g })?;
        for (&i, wi) in members.iter().zip(w) {
            weights[i] = wi;
        }
        per_gt.push(GtSummary {
            md_max,
            delta_md,
            positives: members.len(),
            compensated_anchor: compensated[g],
        });
    }

    Ok(Assignment {
        labels,
        matched_gt,
        best_gt,
        md,
        weights,
        per_gt,
    })
}

/// Dynamic anchor assignment for one image at training progress `t`.
pub fn assign(
    grid: &AnchorGrid,
    predictions: &[OrientedBox],
    gts: &[OrientedBox],
    config: &MatchingConfig,
    t: f64,
) -> Result<Assignment> {
    assign_anchors(
        &grid.anchors,
        predictions,
        gts,
        config,
        t,
        Execution::default(),
    )
}

/// [`assign`] over a bare anchor list with an explicit execution policy.
pub fn assign_anchors(
    anchors: &[OrientedBox],
    predictions: &[OrientedBox],
    gts: &[OrientedBox],
    config: &MatchingConfig,
    t: f64,
    exec: Execution,
) -> Result<Assignment> {
    let m = match_matrix(anchors, predictions, gts, config, t, exec)?;
    select(&m.md, m.n_anchors, m.n_gts, config.pos_threshold)
}
