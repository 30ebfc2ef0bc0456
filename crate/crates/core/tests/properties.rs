mod oracle;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smr_core::eval::{evaluate, iou, GroundTruth};
use smr_core::imaging::{decode_pgm, encode_pgm, extract_patch, pad_frame, to_grayscale, BBox, GrayFrame};
use smr_core::matching::{diff_histogram, diff_map, sad_score, search, smr_score, Metric, SearchParams, Template};
use smr_core::synth::{generate, Effect, EffectKind, FrameRange, Motion, Pattern, SynthSpec};
use smr_core::tracker::{track_sequence, TrackResult, TrackerConfig, TrackerState};

fn frame_strategy(max_w: usize, max_h: usize) -> impl Strategy<Value = GrayFrame> {
    (1..=max_w, 1..=max_h).prop_flat_map(|(w, h)| {
        prop::collection::vec(any::<u8>(), w * h).prop_map(move |d| GrayFrame::new(w, h, d).unwrap())
    })
}

/// A (patch, template) pair of equal size.
fn pair_strategy() -> impl Strategy<Value = (GrayFrame, GrayFrame)> {
    (1..=8usize, 1..=8usize).prop_flat_map(|(w, h)| {
        (
            prop::collection::vec(any::<u8>(), w * h),
            prop::collection::vec(any::<u8>(), w * h),
        )
            .prop_map(move |(a, b)| (GrayFrame::new(w, h, a).unwrap(), GrayFrame::new(w, h, b).unwrap()))
    })
}

fn bbox_strategy() -> impl Strategy<Value = BBox> {
    (-20..20i32, -20..20i32, 1..15u32, 1..15u32).prop_map(|(x, y, w, h)| BBox::new(x, y, w, h).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pgm_round_trip(f in frame_strategy(12, 12)) {
        prop_assert_eq!(decode_pgm(&encode_pgm(&f)).unwrap(), f);
    }

    #[test]
    fn padding_preserves_interior(f in frame_strategy(10, 10), m in 0..6usize) {
        let p = pad_frame(&f, m);
        prop_assert_eq!(p.dims(), (f.width() + 2 * m, f.height() + 2 * m));
        let interior = BBox::new(m as i32, m as i32, f.width() as u32, f.height() as u32).unwrap();
        prop_assert_eq!(extract_patch(&p, &interior).unwrap(), f.clone());
        let border_sum: u64 = p.data().iter().map(|&v| v as u64).sum::<u64>()
            - f.data().iter().map(|&v| v as u64).sum::<u64>();
        prop_assert_eq!(border_sum, 0);
    }

    #[test]
    fn grayscale_is_monotone(r in any::<u8>(), g in any::<u8>(), b in any::<u8>()) {
        let base = to_grayscale(r, g, b);
        prop_assert!(to_grayscale(r.saturating_add(1), g, b) >= base);
        prop_assert!(to_grayscale(r, g.saturating_add(1), b) >= base);
        prop_assert!(to_grayscale(r, g, b.saturating_add(1)) >= base);
    }

    #[test]
    fn smr_matches_oracle_pointwise((p, t) in pair_strategy(), alpha in 0.0..300.0f64, beta in 0.01..2.0f64) {
        let tpl = Template::new(t.clone(), 1);
        let got = smr_core::matching::smr_score_scaled(&p, &tpl, alpha, beta).unwrap();
        prop_assert_eq!(got, oracle::smr_at(&p, 0, 0, &t, alpha, beta));
    }

    #[test]
    fn sad_identity_and_symmetry((p, t) in pair_strategy()) {
        prop_assert_eq!(sad_score(&t, &Template::new(t.clone(), 1)).unwrap(), 0);
        let ab = sad_score(&p, &Template::new(t.clone(), 1)).unwrap();
        let ba = sad_score(&t, &Template::new(p.clone(), 1)).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert_eq!(ab as f64, oracle::sad_at(&p, 0, 0, &t));
    }

    #[test]
    fn histogram_conserves_pixels(f in frame_strategy(16, 16), bin in 1..300u32) {
        let bins = diff_histogram(&f, bin).unwrap();
        prop_assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), f.len());
        prop_assert_eq!(bins.last().unwrap().lower + bin > 255, true);
    }

    #[test]
    fn diff_map_is_elementwise((p, t) in pair_strategy()) {
        let m = diff_map(&p, &Template::new(t.clone(), 1)).unwrap();
        for i in 0..m.len() {
            prop_assert_eq!(m.data()[i], p.data()[i].abs_diff(t.data()[i]));
        }
    }

    #[test]
    fn iou_properties(a in bbox_strategy(), b in bbox_strategy()) {
        let ab = iou(&a, &b);
        prop_assert_eq!(ab, iou(&b, &a));
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(ab == 1.0, a == b);
        prop_assert_eq!(iou(&a, &a), 1.0);
    }

    #[test]
    fn evaluate_is_monotone_in_threshold(
        pairs in prop::collection::vec((bbox_strategy(), prop::option::of(bbox_strategy())), 1..30),
        t1 in 0.0..1.1f64,
        t2 in 0.0..1.1f64,
    ) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let results: Vec<TrackResult> = pairs.iter().enumerate().map(|(i, (r, _))| TrackResult {
            frame_index: i + 1, bbox: *r, score: 0.0, updated: true, alpha_used: 1.0,
        }).collect();
        let truth = GroundTruth::new(pairs.iter().enumerate().map(|(i, (_, t))| (i + 1, *t)).collect()).unwrap();
        let a = evaluate(&results, &truth, lo).unwrap();
        let b = evaluate(&results, &truth, hi).unwrap();
        prop_assert!(b.correctly_tracked <= a.correctly_tracked);
        prop_assert!(a.correctly_tracked <= a.total_evaluated);
        prop_assert_eq!(a.total_evaluated, pairs.iter().filter(|p| p.1.is_some()).count());

        // Changing result boxes on absent-truth frames changes nothing.
        let moved: Vec<TrackResult> = results.iter().zip(&pairs).map(|(r, p)| {
            let mut r = r.clone();
            if p.1.is_none() { r.bbox = r.bbox.translated(7, -3); }
            r
        }).collect();
        let c = evaluate(&moved, &truth, lo).unwrap();
        prop_assert_eq!((c.correctly_tracked, c.total_evaluated), (a.correctly_tracked, a.total_evaluated));
    }
}

#[test]
fn production_search_equals_oracle_with_ties() {
    // Tiny intensity ranges make many exact ties, exercising the tie-break.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    for case in 0..300 {
        let radius = rng.random_range(0..=4);
        let (tw, th) = (rng.random_range(1..=5usize), rng.random_range(1..=5usize));
        let levels = if case % 2 == 0 { 3 } else { 256 };
        let (fw, fh) = (
            tw + 2 * radius as usize + rng.random_range(0..4),
            th + 2 * radius as usize + rng.random_range(0..4),
        );
        let frame = GrayFrame::from_fn(fw, fh, |_, _| {
            (rng.random_range(0..levels) * (255 / (levels - 1).max(1))) as u8
        })
        .unwrap();
        let tpl = GrayFrame::from_fn(tw, th, |_, _| {
            (rng.random_range(0..levels) * (255 / (levels - 1).max(1))) as u8
        })
        .unwrap();
        let prev = BBox::new(
            radius + rng.random_range(0..=(fw - tw - 2 * radius as usize) as i32),
            radius + rng.random_range(0..=(fh - th - 2 * radius as usize) as i32),
            tw as u32,
            th as u32,
        )
        .unwrap();
        let alpha = rng.random_range(0.0..200.0);
        for metric in [Metric::Smr, Metric::Sad] {
            let params = SearchParams {
                radius: radius as u32,
                alpha,
                beta: 1.0,
                metric,
            };
            let got = search(&frame, &Template::new(tpl.clone(), 1), &prev, &params).unwrap();
            let want = oracle::search(&frame, &tpl, &prev, radius, alpha, 1.0, metric);
            assert_eq!(got.best_offset, want.best_offset, "case {case} {metric}");
            assert_eq!(got.best_score, want.best_score);
            for ((off, s), (woff, ws)) in got.iter().zip(&want.scores) {
                assert_eq!(off, *woff);
                assert!((s - ws).abs() <= 1e-12, "case {case} offset {off:?}: {s} vs {ws}");
            }
        }
    }
}

#[test]
fn parallel_search_matches_single_thread() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let frame = GrayFrame::from_fn(120, 110, |_, _| rng.random()).unwrap();
    let tpl = Template::new(extract_patch(&frame, &BBox::new(50, 40, 32, 32).unwrap()).unwrap(), 1);
    let prev = BBox::new(45, 38, 32, 32).unwrap();
    let params = SearchParams::smr(20, 40.0);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let single = pool.install(|| search(&frame, &tpl, &prev, &params).unwrap());
    let multi = search(&frame, &tpl, &prev, &params).unwrap();
    assert_eq!(single, multi);
    assert_eq!(multi.best_offset, (5, 2));
    assert_eq!(multi.best_score, 1024.0);
    let want = oracle::search(&frame, &tpl.patch, &prev, 20, 40.0, 1.0, Metric::Smr);
    assert_eq!(multi.best_offset, want.best_offset);
}

fn random_pair(rng: &mut ChaCha8Rng) -> (GrayFrame, GrayFrame) {
    let (w, h) = (rng.random_range(1..=10usize), rng.random_range(1..=10usize));
    let a = GrayFrame::from_fn(w, h, |_, _| rng.random()).unwrap();
    let b = GrayFrame::from_fn(w, h, |_, _| rng.random()).unwrap();
    (a, b)
}

#[test]
fn smr_bounds_and_threshold_monotonicity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..500 {
        let (p, t) = random_pair(&mut rng);
        let tpl = Template::new(t, 1);
        let n = tpl.pixel_count() as f64;
        let a1 = rng.random_range(0.0..255.0);
        let a2 = a1 + rng.random_range(0.0..100.0);
        let s1 = smr_score(&p, &tpl, a1).unwrap();
        let s2 = smr_score(&p, &tpl, a2).unwrap();
        assert!((0.0..=n).contains(&s1) && (0.0..=n).contains(&s2));
        assert!(s1 <= s2, "{s1} > {s2} for alpha {a1} <= {a2}");
    }
}

#[test]
fn self_match_is_maximal() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..500 {
        let (p, t) = random_pair(&mut rng);
        let tpl = Template::new(t.clone(), 1);
        let alpha = rng.random_range(0.0..300.0);
        let n = tpl.pixel_count() as f64;
        assert_eq!(smr_score(&t, &tpl, alpha).unwrap(), n);
        assert!(smr_score(&p, &tpl, alpha).unwrap() <= n);
    }
}

#[test]
fn outliers_contribute_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let (p, t) = random_pair(&mut rng);
        let alpha: f64 = rng.random_range(0.0..127.0);
        let corrupt: Vec<bool> = (0..p.len()).map(|_| rng.random_bool(0.3)).collect();

        let mut corrupted = p.clone().into_data();
        for (i, &c) in corrupt.iter().enumerate() {
            if c {
                let g = t.data()[i];
                // Farthest reachable value is always more than 127 away.
                corrupted[i] = if g < 128 { 255 } else { 0 };
                assert!(corrupted[i].abs_diff(g) as f64 > alpha);
            }
        }
        let corrupted = GrayFrame::new(p.width(), p.height(), corrupted).unwrap();
        let got = smr_score(&corrupted, &Template::new(t.clone(), 1), alpha).unwrap();

        let kept: Vec<usize> = (0..p.len()).filter(|&i| !corrupt[i]).collect();
        let deleted = if kept.is_empty() {
            0.0
        } else {
            let pk = GrayFrame::new(kept.len(), 1, kept.iter().map(|&i| p.data()[i]).collect()).unwrap();
            let tk = GrayFrame::new(kept.len(), 1, kept.iter().map(|&i| t.data()[i]).collect()).unwrap();
            smr_score(&pk, &Template::new(tk, 1), alpha).unwrap()
        };
        assert_eq!(got, deleted);
    }
}

#[test]
fn translation_is_recovered_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..200 {
        let radius = rng.random_range(1..=5i32);
        let (tw, th) = (rng.random_range(4..=10usize), rng.random_range(4..=10usize));
        let mut frame = GrayFrame::from_fn(40, 40, |_, _| rng.random()).unwrap();
        let tpl = GrayFrame::from_fn(tw, th, |_, _| rng.random()).unwrap();
        let prev = BBox::new(15, 15, tw as u32, th as u32).unwrap();
        let (a, b) = (rng.random_range(-radius..=radius), rng.random_range(-radius..=radius));
        for y in 0..th {
            for x in 0..tw {
                frame.set((15 + a) as usize + x, (15 + b) as usize + y, tpl.get(x, y));
            }
        }
        let map = search(
            &frame,
            &Template::new(tpl.clone(), 1),
            &prev,
            &SearchParams::smr(radius as u32, 10.0),
        )
        .unwrap();
        assert_eq!(map.best_offset, (a, b), "case {case}");
        assert_eq!(map.best_score, (tw * th) as f64);
    }
}

fn random_spec(rng: &mut ChaCha8Rng) -> SynthSpec {
    let (w, h) = (rng.random_range(40..80usize), rng.random_range(40..80usize));
    let tw = rng.random_range(6..14u32);
    let length = rng.random_range(2..25usize);
    let steps = (0..length)
        .map(|_| (rng.random_range(-3..=3), rng.random_range(-3..=3)))
        .collect();
    let mut spec = SynthSpec {
        width: w,
        height: h,
        length,
        background: rng.random(),
        target: BBox::new(
            rng.random_range(0..(w as i32 - 14)),
            rng.random_range(0..(h as i32 - 14)),
            tw,
            tw,
        )
        .unwrap(),
        pattern: Pattern::Random {
            seed: rng.random(),
            lo: 0,
            hi: 255,
        },
        motion: Motion::Scripted(steps),
        effects: vec![Effect {
            frames: FrameRange::new(1, length),
            kind: EffectKind::Noise {
                seed: rng.random(),
                amplitude: rng.random_range(0..6),
            },
        }],
    };
    if rng.random_bool(0.5) {
        spec.effects.push(Effect {
            frames: FrameRange::new(1, length),
            kind: EffectKind::Occluder {
                bbox: BBox::new(0, rng.random_range(0..h as i32), 10, 10).unwrap(),
                velocity: (2, 0),
                pattern: Pattern::Solid(rng.random()),
            },
        });
    }
    spec
}

#[test]
fn tracker_state_invariants_hold_on_random_sequences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    while checked < 40 {
        let spec = random_spec(&mut rng);
        if spec.validate().is_err() {
            continue;
        }
        checked += 1;
        let (frames, truth) = generate(&spec).unwrap();
        for (i, b) in spec.trajectory().iter().enumerate() {
            if let Some(t) = truth.get(i + 1).flatten() {
                assert_eq!(t, *b);
            }
        }
        let cfg = TrackerConfig {
            search_radius: rng.random_range(0..6),
            alpha_min: rng.random_range(0.0..3.0),
            ..TrackerConfig::default()
        };
        let mut state = TrackerState::init(&frames[0], spec.target, &cfg).unwrap();
        let dims = state.template.patch.dims();
        let mut prev_box = spec.target;
        for f in &frames[1..] {
            let alpha_before = state.alpha;
            let r = state.step(f, &cfg).unwrap();
            assert!(state.alpha >= cfg.alpha_min);
            assert_eq!(state.template.patch.dims(), dims);
            assert_eq!(r.updated, r.bbox.fits_within(spec.width, spec.height));
            assert_eq!(r.alpha_used, alpha_before);
            if !r.updated {
                assert_eq!(state.alpha, alpha_before);
            }
            let moved = (r.bbox.x - prev_box.x).abs().max((r.bbox.y - prev_box.y).abs());
            assert!(moved <= cfg.search_radius as i32);
            prev_box = r.bbox;
        }

        let again = generate(&spec).unwrap();
        assert_eq!(again.0, frames);
        let a = track_sequence(frames.iter().cloned().map(Ok), spec.target, &cfg).unwrap();
        let b = track_sequence(frames.into_iter().map(Ok), spec.target, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
