//! Matching-sensitive classification and regression losses.
//!
//! Classification: `(1/N) * sum_all FL(p_i, p*_i) + (1/N_p) * sum_pos w_j * FL(p_j, 1)`.
//! Regression: `(1/N_p) * sum_pos w_j * smoothL1(t_j - t*_j)`.
//! The weights `w` come from the assignment and are treated as constants.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::assignment::Assignment;
use crate::codec::{encode, Offsets};
use crate::error::{Error, Result};
use crate::exec::{stable_sum, Execution};
use crate::geometry::OrientedBox;

/// Probability clamp applied before taking logarithms.
pub const SCORE_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocalParams {
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for FocalParams {
    fn default() -> Self {
        Self {
            alpha: 0.25,
            gamma: 2.0,
        }
    }
}

#[inline]
fn clamp_score(p: f64) -> f64 {
    p.clamp(SCORE_EPS, 1.0 - SCORE_EPS)
}

pub fn focal_loss(p: f64, positive: bool, params: FocalParams) -> f64 {
    let p = clamp_score(p);
    if positive {
        -params.alpha * (1.0 - p).powf(params.gamma) * p.ln()
    } else {
        -(1.0 - params.alpha) * p.powf(params.gamma) * (1.0 - p).ln()
    }
}

/// `d focal_loss / d p`; zero where the clamp is active.
pub fn focal_loss_grad(p: f64, positive: bool, params: FocalParams) -> f64 {
    if !(SCORE_EPS..=1.0 - SCORE_EPS).contains(&p) {
        return 0.0;
    }
    let FocalParams { alpha, gamma } = params;
    if positive {
        let q = 1.0 - p;
        alpha * (gamma * q.powf(gamma - 1.0) * p.ln() - q.powf(gamma) / p)
    } else {
        let q = 1.0 - p;
        -(1.0 - alpha) * (gamma * p.powf(gamma - 1.0) * q.ln() - p.powf(gamma) / q)
    }
}

pub fn smooth_l1(x: f64) -> f64 {
    let a = x.abs();
    if a < 1.0 {
        0.5 * x * x
    } else {
        a - 0.5
    }
}

pub fn smooth_l1_grad(x: f64) -> f64 {
    if x.abs() < 1.0 {
        x
    } else {
        x.signum()
    }
}

/// Smooth-L1 summed over the five offset components of `pred - target`.
pub fn smooth_l1_offsets(pred: &Offsets, target: &Offsets) -> f64 {
    (*pred - *target)
        .to_array()
        .iter()
        .fold(0.0, |acc, &r| acc + smooth_l1(r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositiveSample {
    pub anchor: usize,
    pub pred: Offsets,
    pub target: Offsets,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossInputs {
    /// Classification confidence per anchor.
    pub scores: Vec<f64>,
    /// Hard binary labels per anchor.
    pub labels: Vec<bool>,
    pub positives: Vec<PositiveSample>,
    /// Whether the image has any ground truth. Without it, regression loss is 0.
    pub has_ground_truth: bool,
    pub focal: FocalParams,
}

impl LossInputs {
    pub fn num_anchors(&self) -> usize {
        self.scores.len()
    }

    pub fn num_positives(&self) -> usize {
        self.positives.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.labels.len() != self.scores.len() {
            return Err(Error::LengthMismatch {
                what: "labels",
                expected: self.scores.len(),
                actual: self.labels.len(),
            });
        }
        let n_pos = self.labels.iter().filter(|&&l| l).count();
        if n_pos != self.positives.len() {
            return Err(Error::LengthMismatch {
                what: "positive samples",
                expected: n_pos,
                actual: self.positives.len(),
            });
        }
        let mut seen = HashSet::with_capacity(n_pos);
        for s in &self.positives {
            if s.anchor >= self.scores.len() || !self.labels[s.anchor] || !seen.insert(s.anchor) {
                return Err(Error::InvalidConfig(format!(
                    "positive sample refers to anchor {} which is not a unique positive",
                    s.anchor
                )));
            }
        }
        if self.has_ground_truth && self.positives.is_empty() {
            return Err(Error::NoPositives);
        }
        Ok(())
    }

    /// Builds loss inputs from an assignment: labels and weights from the
    /// assignment, regression targets encoded against each positive's anchor.
    pub fn from_assignment(
        assignment: &Assignment,
        scores: &[f64],
        predicted: &[Offsets],
        anchors: &[OrientedBox],
        gts: &[OrientedBox],
    ) -> Result<Self> {
        let n = assignment.labels.len();
        for (what, len) in [
            ("scores", scores.len()),
            ("offsets", predicted.len()),
            ("anchors", anchors.len()),
        ] {
            if len != n {
                return Err(Error::LengthMismatch {
                    what,
                    expected: n,
                    actual: len,
                });
            }
        }
        let mut positives = Vec::new();
        for i in assignment.positive_indices() {
            let g = assignment.matched_gt[i].expect("positives carry a match");
            positives.push(PositiveSample {
                anchor: i,
                pred: predicted[i],
                target: encode(&gts[g], &anchors[i])?,
                weight: assignment.weights[i],
            });
        }
        Ok(Self {
            scores: scores.to_vec(),
            labels: assignment.labels.iter().map(|l| l.is_positive()).collect(),
            positives,
            has_ground_truth: !gts.is_empty(),
            focal: FocalParams::default(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub cls: f64,
    pub reg: f64,
    pub total: f64,
    /// Total-loss contribution of each anchor.
    pub per_anchor: Vec<f64>,
}

fn first_term(inputs: &LossInputs, exec: Execution) -> f64 {
    let n = inputs.num_anchors();
    if n == 0 {
        return 0.0;
    }
    let sum = stable_sum(exec, n, |i| {
        focal_loss(inputs.scores[i], inputs.labels[i], inputs.focal)
    });
    sum / n as f64
}

fn second_term(inputs: &LossInputs, exec: Execution) -> f64 {
    let np = inputs.num_positives();
    if np == 0 {
        return 0.0;
    }
    let sum = stable_sum(exec, np, |j| {
        let s = &inputs.positives[j];
        s.weight * focal_loss(inputs.scores[s.anchor], true, inputs.focal)
    });
    sum / np as f64
}

pub fn cls_loss(inputs: &LossInputs) -> Result<f64> {
    cls_loss_with(inputs, Execution::default())
}

pub fn cls_loss_with(inputs: &LossInputs, exec: Execution) -> Result<f64> {
    inputs.validate()?;
    Ok(first_term(inputs, exec) + second_term(inputs, exec))
}

pub fn reg_loss(inputs: &LossInputs) -> Result<f64> {
    reg_loss_with(inputs, Execution::default())
}

pub fn reg_loss_with(inputs: &LossInputs, exec: Execution) -> Result<f64> {
    inputs.validate()?;
    let np = inputs.num_positives();
    if np == 0 {
        return Ok(0.0);
    }
    let sum = stable_sum(exec, np, |j| {
        let s = &inputs.positives[j];
        s.weight * smooth_l1_offsets(&s.pred, &s.target)
    });
    Ok(sum / np as f64)
}

pub fn total_loss(inputs: &LossInputs) -> Result<LossReport> {
    total_loss_with(inputs, Execution::default())
}

pub fn total_loss_with(inputs: &LossInputs, exec: Execution) -> Result<LossReport> {
    let cls = cls_loss_with(inputs, exec)?;
    let reg = reg_loss_with(inputs, exec)?;
    let n = inputs.num_anchors() as f64;
    let np = inputs.num_positives() as f64;
    let mut per_anchor: Vec<f64> = inputs
        .scores
        .iter()
        .zip(&inputs.labels)
        .map(|(&p, &l)| focal_loss(p, l, inputs.focal) / n)
        .collect();
    for s in &inputs.positives {
        per_anchor[s.anchor] += s.weight
            * (focal_loss(inputs.scores[s.anchor], true, inputs.focal)
                + smooth_l1_offsets(&s.pred, &s.target))
            / np;
    }
    Ok(LossReport {
        cls,
        reg,
        total: cls + reg,
        per_anchor,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGradients {
    /// `dL/dp` per anchor.
    pub scores: Vec<f64>,
    /// `dL/dt` per positive sample, aligned with `LossInputs::positives`.
    pub offsets: Vec<[f64; 5]>,
}

/// Analytic gradient of the total loss with respect to scores and predicted offsets.
pub fn total_loss_grad(inputs: &LossInputs) -> Result<LossGradients> {
    inputs.validate()?;
    let n = inputs.num_anchors() as f64;
    let np = inputs.num_positives() as f64;
    let mut scores: Vec<f64> = inputs
        .scores
        .iter()
        .zip(&inputs.labels)
        .map(|(&p, &l)| focal_loss_grad(p, l, inputs.focal) / n)
        .collect();
    let mut offsets = Vec::with_capacity(inputs.positives.len());
    for s in &inputs.positives {
        scores[s.anchor] +=
            s.weight * focal_loss_grad(inputs.scores[s.anchor], true, inputs.focal) / np;
        let r = (s.pred - s.target).to_array();
        offsets.push(r.map(|x| s.weight * smooth_l1_grad(x) / np));
    }
    Ok(LossGradients { scores, offsets })
}

/// A scalar function of a parameter vector with an analytic gradient.
pub trait Objective {
    fn params(&self) -> Vec<f64>;
    fn value_at(&self, params: &[f64]) -> f64;
    fn gradient_at(&self, params: &[f64]) -> Vec<f64>;
    /// Distance from `params[index]` to the nearest point where the function is
    /// not differentiable in that coordinate.
    fn distance_to_kink(&self, params: &[f64], index: usize) -> f64;
}

fn clamp_kink_distance(p: f64) -> f64 {
    (p - SCORE_EPS).abs().min((1.0 - SCORE_EPS - p).abs())
}

fn smooth_l1_kink_distance(x: f64) -> f64 {
    (x.abs() - 1.0).abs()
}

#[derive(Debug, Clone, Copy)]
pub struct FocalObjective {
    pub p: f64,
    pub positive: bool,
    pub params: FocalParams,
}

impl Objective for FocalObjective {
    fn params(&self) -> Vec<f64> {
        vec![self.p]
    }
    fn value_at(&self, x: &[f64]) -> f64 {
        focal_loss(x[0], self.positive, self.params)
    }
    fn gradient_at(&self, x: &[f64]) -> Vec<f64> {
        vec![focal_loss_grad(x[0], self.positive, self.params)]
    }
    fn distance_to_kink(&self, x: &[f64], _index: usize) -> f64 {
        clamp_kink_distance(x[0])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SmoothL1Objective {
    pub x: f64,
}

impl Objective for SmoothL1Objective {
    fn params(&self) -> Vec<f64> {
        vec![self.x]
    }
    fn value_at(&self, x: &[f64]) -> f64 {
        smooth_l1(x[0])
    }
    fn gradient_at(&self, x: &[f64]) -> Vec<f64> {
        vec![smooth_l1_grad(x[0])]
    }
    fn distance_to_kink(&self, x: &[f64], _index: usize) -> f64 {
        smooth_l1_kink_distance(x[0])
    }
}

/// Total loss as a function of all scores followed by every positive's five
/// predicted offsets.
#[derive(Debug, Clone)]
pub struct TotalLossObjective {
    pub inputs: LossInputs,
}

impl TotalLossObjective {
    fn with_params(&self, x: &[f64]) -> LossInputs {
        let n = self.inputs.num_anchors();
        let mut inputs = self.inputs.clone();
        inputs.scores.copy_from_slice(&x[..n]);
        for (j, s) in inputs.positives.iter_mut().enumerate() {
            let k = n + 5 * j;
            s.pred = Offsets::from_array([x[k], x[k + 1], x[k + 2], x[k + 3], x[k + 4]]);
        }
        inputs
    }
}

impl Objective for TotalLossObjective {
    fn params(&self) -> Vec<f64> {
        let mut x = self.inputs.scores.clone();
        for s in &self.inputs.positives {
            x.extend_from_slice(&s.pred.to_array());
        }
        x
    }
    fn value_at(&self, x: &[f64]) -> f64 {
        total_loss_with(&self.with_params(x), Execution::Sequential)
            .map(|r| r.total)
            .unwrap_or(f64::NAN)
    }
    fn gradient_at(&self, x: &[f64]) -> Vec<f64> {
        let g = total_loss_grad(&self.with_params(x)).expect("validated inputs");
        let mut out = g.scores;
        for o in g.offsets {
            out.extend_from_slice(&o);
        }
        out
    }
    fn distance_to_kink(&self, x: &[f64], index: usize) -> f64 {
        let n = self.inputs.num_anchors();
        if index < n {
            return clamp_kink_distance(x[index]);
        }
        let j = (index - n) / 5;
        let c = (index - n) % 5;
        let target = self.inputs.positives[j].target.to_array()[c];
        smooth_l1_kink_distance(x[index] - target)
    }
}

/// Largest relative disagreement between the analytic gradient and central
/// differences with step `h`. Relative error is `|a - n| / max(|a|, |n|, 1e-12)`.
pub fn grad_check<O: Objective + ?Sized>(objective: &O, h: f64) -> Result<f64> {
    let x = objective.params();
    for i in 0..x.len() {
        if objective.distance_to_kink(&x, i) <= h {
            return Err(Error::NonDifferentiablePoint { index: i, step: h });
        }
    }
    let analytic = objective.gradient_at(&x);
    let mut worst = 0.0f64;
    let mut probe = x.clone();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = objective.value_at(&probe);
        probe[i] = x[i] - h;
        let down = objective.value_at(&probe);
        probe[i] = x[i];
        let numeric = (up - down) / (2.0 * h);
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-12);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    const FL: FocalParams = FocalParams {
        alpha: 0.25,
        gamma: 2.0,
    };

    fn sample(anchor: usize, residual: [f64; 5], weight: f64) -> PositiveSample {
        PositiveSample {
            anchor,
            pred: Offsets::from_array(residual),
            target: Offsets::ZERO,
            weight,
        }
    }

    /// N = 2: anchor 0 positive with p = 0.5, anchor 1 negative with p = eps.
    fn two_anchor_inputs(residual: [f64; 5]) -> LossInputs {
        LossInputs {
            scores: vec![0.5, SCORE_EPS],
            labels: vec![true, false],
            positives: vec![sample(0, residual, 1.0)],
            has_ground_truth: true,
            focal: FL,
        }
    }

    #[test]
    fn focal_examples() {
        assert!(focal_loss(1.0 - SCORE_EPS, true, FL) <= 1e-6);
        assert!(focal_loss(1.0, true, FL) <= 1e-6);
        assert!((focal_loss(0.5, true, FL) - 0.25 * 0.25 * LN_2).abs() < 1e-15);
        assert!((focal_loss(0.5, true, FL) - 0.043322).abs() < 1e-6);
        let half = FocalParams {
            alpha: 0.5,
            gamma: 0.0,
        };
        for p in [0.1, 0.37, 0.9] {
            assert!((focal_loss(p, true, half) - 0.5 * -p.ln()).abs() < 1e-15);
            assert!((focal_loss(p, false, half) - 0.5 * -(1.0 - p).ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn smooth_l1_examples() {
        assert_eq!(smooth_l1(0.0), 0.0);
        assert_eq!(smooth_l1(0.5), 0.125);
        assert_eq!(smooth_l1(2.0), 1.5);
        assert_eq!(smooth_l1(-2.0), 1.5);
        assert_eq!(smooth_l1(1.0), 0.5);
    }

    #[test]
    fn cls_example() {
        let inputs = two_anchor_inputs([0.5, 0.0, 0.0, 0.0, 0.0]);
        let cls = cls_loss(&inputs).unwrap();
        assert!((cls - 1.5 * 0.25 * 0.25 * LN_2).abs() < 1e-12);
        assert!((cls - 0.064983).abs() < 1e-6);

        // Doubling the sole positive's weight doubles the second term exactly.
        let mut doubled = inputs.clone();
        doubled.positives[0].weight = 2.0;
        let first = first_term(&inputs, Execution::Sequential);
        let second = second_term(&inputs, Execution::Sequential);
        assert_eq!(second_term(&doubled, Execution::Sequential), 2.0 * second);
        assert_eq!(first_term(&doubled, Execution::Sequential), first);
    }

    #[test]
    fn reg_examples() {
        let inputs = two_anchor_inputs([0.5, 0.0, 0.0, 0.0, 0.0]);
        assert!((reg_loss(&inputs).unwrap() - 0.125).abs() < 1e-15);
        assert_eq!(reg_loss(&two_anchor_inputs([0.0; 5])).unwrap(), 0.0);

        // Residual sums 0.125 and 0.2 with weights 1.0 and 0.95.
        let r2 = (0.4f64).sqrt();
        let inputs = LossInputs {
            scores: vec![0.5, 0.5, 0.1],
            labels: vec![true, true, false],
            positives: vec![
                sample(0, [0.5, 0.0, 0.0, 0.0, 0.0], 1.0),
                sample(1, [r2, 0.0, 0.0, 0.0, 0.0], 0.95),
            ],
            has_ground_truth: true,
            focal: FL,
        };
        assert!((reg_loss(&inputs).unwrap() - 0.1575).abs() < 1e-12);
    }

    #[test]
    fn total_combines_terms() {
        let inputs = two_anchor_inputs([0.5, 0.0, 0.0, 0.0, 0.0]);
        let r = total_loss(&inputs).unwrap();
        assert_eq!(r.total, r.cls + r.reg);
        assert!((r.total - (0.064983 + 0.125)).abs() < 1e-6);
        assert!(r.total >= r.cls.max(r.reg));
        let s: f64 = r.per_anchor.iter().sum();
        assert!((s - r.total).abs() < 1e-12);

        let perfect = LossInputs {
            scores: vec![1.0, 0.0],
            labels: vec![true, false],
            positives: vec![sample(0, [0.0; 5], 1.0)],
            has_ground_truth: true,
            focal: FL,
        };
        assert!(total_loss(&perfect).unwrap().total <= 1e-5);
    }

    #[test]
    fn no_ground_truth() {
        let inputs = LossInputs {
            scores: vec![0.2, 0.1],
            labels: vec![false, false],
            positives: vec![],
            has_ground_truth: false,
            focal: FL,
        };
        let r = total_loss(&inputs).unwrap();
        assert_eq!(r.reg, 0.0);
        let expected = (focal_loss(0.2, false, FL) + focal_loss(0.1, false, FL)) / 2.0;
        assert!((r.cls - expected).abs() < 1e-15);

        let missing = LossInputs {
            has_ground_truth: true,
            ..inputs
        };
        assert!(matches!(cls_loss(&missing), Err(Error::NoPositives)));
        assert!(matches!(reg_loss(&missing), Err(Error::NoPositives)));
    }

    #[test]
    fn inconsistent_inputs_rejected() {
        let mut inputs = two_anchor_inputs([0.0; 5]);
        inputs.positives[0].anchor = 1;
        assert!(inputs.validate().is_err());
        let mut inputs = two_anchor_inputs([0.0; 5]);
        inputs.labels.pop();
        assert!(matches!(
            inputs.validate(),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn grad_check_examples() {
        let e = grad_check(
            &FocalObjective {
                p: 0.5,
                positive: true,
                params: FL,
            },
            1e-6,
        )
        .unwrap();
        assert!(e <= 1e-5, "{e}");
        assert_eq!(smooth_l1_grad(0.5), 0.5);
        let e = grad_check(&SmoothL1Objective { x: 0.5 }, 1e-6).unwrap();
        assert!(e <= 1e-6, "{e}");
        assert!(matches!(
            grad_check(&SmoothL1Objective { x: 1.0 }, 1e-6),
            Err(Error::NonDifferentiablePoint { .. })
        ));
        assert!(grad_check(
            &FocalObjective {
                p: SCORE_EPS,
                positive: false,
                params: FL
            },
            1e-6
        )
        .is_err());
    }

    #[test]
    fn total_gradient_matches_differences() {
        let inputs = LossInputs {
            scores: vec![0.3, 0.8, 0.45, 0.6],
            labels: vec![true, false, true, false],
            positives: vec![
                sample(0, [0.2, -0.4, 1.7, 0.05, -0.3], 1.0),
                sample(2, [-2.5, 0.6, 0.1, -0.9, 0.33], 0.8),
            ],
            has_ground_truth: true,
            focal: FL,
        };
        let e = grad_check(&TotalLossObjective { inputs }, 1e-6).unwrap();
        assert!(e <= 1e-5, "{e}");
    }

    #[test]
    fn focal_grad_zero_in_clamp() {
        assert_eq!(focal_loss_grad(0.0, true, FL), 0.0);
        assert_eq!(focal_loss_grad(1.0, false, FL), 0.0);
    }
}
