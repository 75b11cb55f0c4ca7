//! Exact agreement between the library and a brute-force assignment on
//! seeded random scenes.

mod common;

use common::{brute_force, scene, Scene};
use dal_core::assignment::{assign_anchors, Assignment};
use dal_core::Execution;

fn run(s: &Scene, exec: Execution) -> Assignment {
    assign_anchors(&s.anchors, &s.preds, &s.gts, &s.config, s.t, exec).unwrap()
}

#[test]
fn matches_brute_force_on_200_scenes() {
    for k in 0..200 {
        let s = scene(k);
        let got = run(&s, Execution::Sequential);
        let want = brute_force(&s);
        let labels: Vec<bool> = got.labels.iter().map(|l| l.is_positive()).collect();
        assert_eq!(labels, want.positive, "scene {k}");
        assert_eq!(got.matched_gt, want.matched, "scene {k}");
        let gw: Vec<u64> = got.weights.iter().map(|w| w.to_bits()).collect();
        let ww: Vec<u64> = want.weights.iter().map(|w| w.to_bits()).collect();
        assert_eq!(gw, ww, "scene {k}");
    }
}

#[test]
fn every_gt_has_a_positive_with_unit_max_weight() {
    for k in 0..200 {
        let s = scene(k);
        let a = run(&s, Execution::Sequential);
        for g in 0..s.gts.len() {
            let w: Vec<f64> = (0..s.anchors.len())
                .filter(|&i| a.matched_gt[i] == Some(g))
                .map(|i| a.weights[i])
                .collect();
            assert!(!w.is_empty(), "scene {k} gt {g}");
            assert_eq!(w.iter().copied().fold(f64::MIN, f64::max), 1.0);
        }
    }
}

#[test]
fn execution_policy_does_not_change_results() {
    for k in 0..50 {
        let s = scene(k);
        assert_eq!(
            run(&s, Execution::Sequential),
            run(&s, Execution::Parallel),
            "scene {k}"
        );
    }
}

#[test]
fn scenes_exercise_compensation() {
    let compensated: usize = (0..200)
        .map(|k| {
            let s = scene(k);
            run(&s, Execution::Sequential)
                .per_gt
                .iter()
                .filter(|g| g.compensated_anchor.is_some())
                .count()
        })
        .sum();
    assert!(compensated > 20, "{compensated}");
}
