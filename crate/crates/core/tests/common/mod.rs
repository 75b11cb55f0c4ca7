//! Brute-force reimplementation of dynamic anchor assignment.

use dal_core::assignment::MatchingConfig;
use dal_core::geometry::rotated_iou;
use dal_core::OrientedBox;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Scene {
    pub anchors: Vec<OrientedBox>,
    pub preds: Vec<OrientedBox>,
    pub gts: Vec<OrientedBox>,
    pub t: f64,
    pub config: MatchingConfig,
}

fn rbox(rng: &mut ChaCha8Rng, cx: f64, cy: f64, spread: f64) -> OrientedBox {
    OrientedBox::new(
        cx + rng.random_range(-spread..spread),
        cy + rng.random_range(-spread..spread),
        rng.random_range(2.0..12.0),
        rng.random_range(2.0..12.0),
        rng.random_range(-1.5..1.5),
    )
    .unwrap()
}

/// Scene `k`: at most 20 anchors and 5 ground truths clustered so that many
/// pairs overlap. Some scenes jitter a prediction to exactly its anchor or GT.
pub fn scene(k: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA55 ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let n_gts = rng.random_range(1..=5);
    let n_anchors = rng.random_range(n_gts..=20);
    let gts: Vec<_> = (0..n_gts)
        .map(|_| rbox(&mut rng, 10.0, 10.0, 8.0))
        .collect();
    let mut anchors = Vec::with_capacity(n_anchors);
    let mut preds = Vec::with_capacity(n_anchors);
    for _ in 0..n_anchors {
        let g = gts[rng.random_range(0..n_gts)];
        let a = rbox(&mut rng, g.x, g.y, 4.0);
        let p = match rng.random_range(0..6) {
            0 => a,
            1 => g,
            _ => rbox(&mut rng, g.x, g.y, 3.0),
        };
        anchors.push(a);
        preds.push(p);
    }
    let t = [0.0, 0.05, 0.1, 0.2, 0.29, 0.3, 0.7, 1.0][rng.random_range(0..8)];
    let config = MatchingConfig {
        alpha0: [0.2, 0.3, 0.5, 0.7, 0.9][rng.random_range(0..5)],
        gamma: [1.0, 2.0, 5.0][rng.random_range(0..3)],
        pos_threshold: [0.3, 0.5, 0.6][rng.random_range(0..3)],
        total_iterations: 1,
        penalty_during_warmup: rng.random_bool(0.8),
    };
    Scene {
        anchors,
        preds,
        gts,
        t,
        config,
    }
}

pub struct Expected {
    pub positive: Vec<bool>,
    pub matched: Vec<Option<usize>>,
    pub weights: Vec<f64>,
}

pub fn brute_force(s: &Scene) -> Expected {
    let c = &s.config;
    let alpha = if s.t < 0.1 {
        1.0
    } else if s.t < 0.3 {
        // Linear from 1 at t = 0.1 to alpha0 at t = 0.3.
        1.0 - (1.0 - c.alpha0) * ((s.t - 0.1) / 0.2)
    } else {
        c.alpha0
    };
    let penalize = c.penalty_during_warmup || s.t >= 0.1;
    let md = |i: usize, g: usize| {
        let sa = rotated_iou(&s.anchors[i], &s.gts[g]);
        let fa = rotated_iou(&s.preds[i], &s.gts[g]);
        let base = alpha * sa + (1.0 - alpha) * fa;
        if penalize {
            base - (sa - fa).abs().powf(c.gamma)
        } else {
            base
        }
    };

    let n = s.anchors.len();
    let m = s.gts.len();
    let mut positive = vec![false; n];
    let mut matched = vec![None; n];
    let mut score = vec![f64::NAN; n];
    for i in 0..n {
        // First maximum wins.
        let mut best = 0;
        for g in 1..m {
            if md(i, g) > md(i, best) {
                best = g;
            }
        }
        if md(i, best) >= c.pos_threshold {
            positive[i] = true;
            matched[i] = Some(best);
            score[i] = md(i, best);
        }
    }
    for g in 0..m {
        if matched.contains(&Some(g)) {
            continue;
        }
        let free = (0..n).filter(|&i| !positive[i]);
        let pick = free.fold(None::<usize>, |acc, i| match acc {
            Some(j) if md(j, g) >= md(i, g) => Some(j),
            _ => Some(i),
        });
        // No free anchor: move a positive away from a GT that has several.
        let pick = pick.or_else(|| {
            (0..n)
                .filter(|&i| match matched[i] {
                    Some(o) => matched.iter().filter(|&&x| x == Some(o)).count() >= 2,
                    None => false,
                })
                .fold(None::<usize>, |acc, i| match acc {
                    Some(j) if md(j, g) >= md(i, g) => Some(j),
                    _ => Some(i),
                })
        });
        let i = pick.expect("at least as many anchors as GTs");
        positive[i] = true;
        matched[i] = Some(g);
        score[i] = md(i, g);
    }
    let mut weights = vec![0.0; n];
    for g in 0..m {
        let members: Vec<usize> = (0..n).filter(|&i| matched[i] == Some(g)).collect();
        let top = members
            .iter()
            .map(|&i| score[i])
            .fold(f64::NEG_INFINITY, f64::max);
        for i in members {
            weights[i] = 1.0 - (top - score[i]);
        }
    }
    Expected {
        positive,
        matched,
        weights,
    }
}
