//! End-to-end tracker behaviour on the constructed scenarios.

use smr_core::eval::{evaluate, iou};
use smr_core::fixtures;
use smr_core::imaging::extract_patch;
use smr_core::matching::{sad_score, smr_score, Metric, Template};
use smr_core::synth::generate;
use smr_core::tracker::{track_sequence, TrackerConfig, TrackerState};

fn config(radius: u32) -> TrackerConfig {
    TrackerConfig {
        search_radius: radius,
        ..TrackerConfig::default()
    }
}

#[test]
fn constant_velocity_is_tracked_exactly() {
    let spec = fixtures::constant_velocity(100);
    let (frames, truth) = generate(&spec).unwrap();
    let cfg = config(fixtures::CONSTANT_VELOCITY_RADIUS);
    let results = track_sequence(frames.into_iter().map(Ok), spec.target, &cfg).unwrap();
    assert_eq!(results.len(), 99);
    for r in &results {
        assert_eq!(
            Some(r.bbox),
            truth.get(r.frame_index).flatten(),
            "frame {}",
            r.frame_index
        );
        assert_eq!(r.score, 1024.0);
        assert!(r.updated);
    }
    let report = evaluate(&results, &truth, 0.5).unwrap();
    assert_eq!(report.correctly_tracked, 99);
}

#[test]
fn static_sequence_stays_put() {
    let mut spec = fixtures::constant_velocity(10);
    spec.motion = smr_core::synth::Motion::Constant { dx: 0, dy: 0 };
    let (frames, _) = generate(&spec).unwrap();
    let results = track_sequence(frames.into_iter().map(Ok), spec.target, &config(5)).unwrap();
    assert_eq!(results.len(), 9);
    assert!(results.iter().all(|r| r.bbox == spec.target && r.score == 1024.0));
}

#[test]
fn exit_freezes_template_and_alpha() {
    let spec = fixtures::frame_exit();
    let (frames, truth) = generate(&spec).unwrap();
    let cfg = config(fixtures::FRAME_EXIT_RADIUS);
    let results = track_sequence(frames.into_iter().map(Ok), spec.target, &cfg).unwrap();
    let mut overhanging = 0;
    let mut frozen_alpha = None;
    for r in &results {
        assert_eq!(
            Some(r.bbox),
            truth.get(r.frame_index).flatten(),
            "frame {}",
            r.frame_index
        );
        let inside = r.bbox.fits_within(spec.width, spec.height);
        assert_eq!(r.updated, inside, "frame {}", r.frame_index);
        if !inside {
            overhanging += 1;
            assert!(r.bbox.right() > spec.width as i64);
            let a = *frozen_alpha.get_or_insert(r.alpha_used);
            assert_eq!(r.alpha_used, a);
        }
    }
    assert!(overhanging >= 5, "only {overhanging} overhanging frames");
}

#[test]
fn minority_outliers_mislead_sad_not_smr() {
    let scene = fixtures::robustness_scene();
    let tpl = Template::new(extract_patch(&scene.first, &scene.init_box).unwrap(), 1);
    let at_true = extract_patch(&scene.second, &scene.true_box).unwrap();
    let at_decoy = extract_patch(&scene.second, &scene.decoy_box).unwrap();
    let alpha = scene.config.alpha0;
    assert!(smr_score(&at_true, &tpl, alpha).unwrap() > smr_score(&at_decoy, &tpl, alpha).unwrap());
    assert!(sad_score(&at_decoy, &tpl).unwrap() < sad_score(&at_true, &tpl).unwrap());

    let mut smr = TrackerState::init(&scene.first, scene.init_box, &scene.config).unwrap();
    assert_eq!(smr.step(&scene.second, &scene.config).unwrap().bbox, scene.true_box);

    let sad_cfg = TrackerConfig {
        metric: Metric::Sad,
        ..scene.config.clone()
    };
    let mut sad = TrackerState::init(&scene.first, scene.init_box, &sad_cfg).unwrap();
    assert_eq!(sad.step(&scene.second, &sad_cfg).unwrap().bbox, scene.decoy_box);
}

#[test]
fn slow_occluder_drags_the_tracker_away() {
    let spec = fixtures::slow_occlusion();
    let (frames, truth) = generate(&spec).unwrap();
    let cfg = config(fixtures::SLOW_OCCLUSION_RADIUS);
    let results = track_sequence(frames.into_iter().map(Ok), spec.target, &cfg).unwrap();
    let last = results.last().unwrap();
    let final_truth = truth.get(last.frame_index).flatten().unwrap();
    let final_iou = iou(&last.bbox, &final_truth);
    assert!(final_iou < 0.25, "final IoU {final_iou}, box {}", last.bbox);
    // Early frames, before the occluder reaches the target, are tracked.
    for r in results.iter().take(20) {
        assert_eq!(r.bbox, spec.target);
    }
}

#[test]
fn sequential_runs_are_bit_identical() {
    let spec = fixtures::slow_occlusion();
    let (frames, _) = generate(&spec).unwrap();
    let cfg = config(fixtures::SLOW_OCCLUSION_RADIUS);
    let a = track_sequence(frames.iter().cloned().map(Ok), spec.target, &cfg).unwrap();
    let b = track_sequence(frames.into_iter().map(Ok), spec.target, &cfg).unwrap();
    assert_eq!(a, b);
    let bits = |r: &smr_core::tracker::TrackResult| (r.score.to_bits(), r.alpha_used.to_bits());
    assert!(a.iter().zip(&b).all(|(x, y)| bits(x) == bits(y)));
}

#[test]
fn box_can_leave_entirely_without_search_errors() {
    let mut spec = fixtures::frame_exit();
    spec.length = 40;
    // Reaches x = 160 (fully outside a 160-wide frame) at frame 21, then parks.
    spec.motion = smr_core::synth::Motion::Piecewise(vec![(1, 3, 0), (21, 0, 0)]);
    let (frames, _) = generate(&spec).unwrap();
    let results = track_sequence(frames.into_iter().map(Ok), spec.target, &config(8)).unwrap();
    assert_eq!(results.len(), 39);
    for r in &results[20..] {
        assert!(!r.updated);
        assert!(r.bbox.right() > spec.width as i64);
        assert!(r.bbox.x <= spec.width as i32, "box {} left the reachable band", r.bbox);
    }
}
