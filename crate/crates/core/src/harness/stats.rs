//! Diagnostic statistics: output-IoU histograms, quality fractions and
//! score/IoU rank correlations.

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;
/// Output IoU at or above which a detection counts as high quality.
pub const HIGH_QUALITY_IOU: f64 = 0.5;
pub const DEFAULT_BINS: usize = 10;

/// Equal-width histogram over `[0, 1]`; the value 1 falls in the last bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Default for Histogram {
    fn default() -> Self {
        Self::new(DEFAULT_BINS)
    }
}

impl Histogram {
    pub fn new(bins: usize) -> Self {
        let bins = bins.max(1);
        Self {
            edges: (0..=bins).map(|i| i as f64 / bins as f64).collect(),
            counts: vec![0; bins],
        }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_of(&self, v: f64) -> usize {
        let b = self.bins();
        ((v.clamp(0.0, 1.0) * b as f64) as usize).min(b - 1)
    }

    pub fn add(&mut self, v: f64) {
        let i = self.bin_of(v);
        self.counts[i] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Mass in bins whose lower edge is at least `threshold`.
    pub fn count_at_least(&self, threshold: f64) -> u64 {
        self.counts
            .iter()
            .zip(&self.edges)
            .filter(|(_, &lo)| lo >= threshold)
            .map(|(c, _)| c)
            .sum()
    }

    pub fn merge(&mut self, other: &Histogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

/// Binned view of a scatter plot plus its Spearman rank correlation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterSummary {
    pub count: u64,
    pub spearman: f64,
    pub edges: Vec<f64>,
    pub bin_counts: Vec<u64>,
    /// Mean score of the samples in each x bin (0 for empty bins).
    pub bin_mean_score: Vec<f64>,
}

impl Default for ScatterSummary {
    fn default() -> Self {
        Self::from_samples(&[], &[], DEFAULT_BINS)
    }
}

impl ScatterSummary {
    pub fn from_samples(x: &[f64], score: &[f64], bins: usize) -> Self {
        let mut hist = Histogram::new(bins);
        let mut sums = vec![0.0; hist.bins()];
        for (&xi, &si) in x.iter().zip(score) {
            let b = hist.bin_of(xi);
            hist.counts[b] += 1;
            sums[b] += si;
        }
        let bin_mean_score = sums
            .iter()
            .zip(&hist.counts)
            .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
            .collect();
        Self {
            count: x.len() as u64,
            spearman: spearman(x, score),
            edges: hist.edges,
            bin_counts: hist.counts,
            bin_mean_score,
        }
    }
}

/// Average ranks (1-based), ties sharing their mean rank.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && v[idx[j]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        for &k in &idx[i..j] {
            r[k] = avg;
        }
        i = j;
    }
    r
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len());
    if n < 2 {
        return 0.0;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Spearman rank correlation; 0 when either side is constant or has < 2 samples.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub schema_version: u32,
    pub strategy: String,
    /// Scores are synthesized from the assignment metric, not a trained classifier.
    pub score_model: String,
    pub seed: u64,
    pub scenes: u64,
    pub anchors: u64,
    pub ground_truths: u64,
    pub positives: u64,
    pub compensated: u64,
    /// Output IoU (against the matched ground truth) of every positive.
    pub positive_output_iou: Histogram,
    pub positives_high_quality: u64,
    pub fraction_positives_high_quality: f64,
    /// Anchors whose regressed box reaches the high-quality IoU.
    pub high_quality_detections: u64,
    pub high_quality_from_positives: u64,
    pub fraction_high_quality_from_positives: f64,
    pub input_iou_vs_score: ScatterSummary,
    pub output_iou_vs_score: ScatterSummary,
}

impl Default for StatsReport {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            strategy: String::new(),
            score_model: String::new(),
            seed: 0,
            scenes: 0,
            anchors: 0,
            ground_truths: 0,
            positives: 0,
            compensated: 0,
            positive_output_iou: Histogram::default(),
            positives_high_quality: 0,
            fraction_positives_high_quality: 0.0,
            high_quality_detections: 0,
            high_quality_from_positives: 0,
            fraction_high_quality_from_positives: 0.0,
            input_iou_vs_score: ScatterSummary::default(),
            output_iou_vs_score: ScatterSummary::default(),
        }
    }
}

pub(crate) fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl StatsReport {
    /// Recomputes the positive-quality fraction from the histogram bins.
    pub fn fraction_from_histogram(&self) -> f64 {
        ratio(
            self.positive_output_iou.count_at_least(HIGH_QUALITY_IOU),
            self.positive_output_iou.total(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_binning() {
        let mut h = Histogram::new(10);
        for v in [0.0, 0.05, 0.5, 0.49999, 0.99, 1.0] {
            h.add(v);
        }
        assert_eq!(h.total(), 6);
        assert_eq!(h.counts[0], 2);
        assert_eq!(h.counts[4], 1);
        assert_eq!(h.counts[5], 1);
        assert_eq!(h.counts[9], 2);
        assert_eq!(h.count_at_least(0.5), 3);
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
    }

    #[test]
    fn spearman_basics() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!((spearman(&x, &[2.0, 4.0, 8.0, 16.0, 32.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&x, &[5.0, 4.0, 3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        assert_eq!(spearman(&x, &[1.0; 5]), 0.0);
        assert_eq!(spearman(&[], &[]), 0.0);
        // Hand-computed: d = (0, 1, -1, 0) -> 1 - 6*2/(4*15) = 0.8
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn scatter_bins() {
        let s = ScatterSummary::from_samples(&[0.1, 0.15, 0.9], &[0.2, 0.4, 0.8], 10);
        assert_eq!(s.count, 3);
        assert_eq!(s.bin_counts[1], 2);
        assert!((s.bin_mean_score[1] - 0.3).abs() < 1e-12);
        assert_eq!(s.bin_mean_score[5], 0.0);
    }

    #[test]
    fn empty_report_is_zeroed() {
        let r = StatsReport::default();
        assert_eq!(r.schema_version, 1);
        assert_eq!(r.positive_output_iou.total(), 0);
        assert_eq!(r.fraction_from_histogram(), 0.0);
    }
}
