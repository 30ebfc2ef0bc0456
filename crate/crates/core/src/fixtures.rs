//! Constructed tracking scenarios with known outcomes, shared by the test
//! suites and the CLI.

use crate::imaging::{BBox, GrayFrame};
use crate::synth::{Effect, EffectKind, FrameRange, Motion, Pattern, SynthSpec};
use crate::tracker::TrackerConfig;

/// 32x32 textured target crossing a 320x240 frame at (+2, +1) per frame.
pub fn constant_velocity(length: usize) -> SynthSpec {
    SynthSpec {
        width: 320,
        height: 240,
        length,
        background: 40,
        target: BBox {
            x: 40,
            y: 60,
            w: 32,
            h: 32,
        },
        pattern: Pattern::Random {
            seed: 11,
            lo: 0,
            hi: 255,
        },
        motion: Motion::Constant { dx: 2, dy: 1 },
        effects: vec![],
    }
}

/// Radius used with [`constant_velocity`].
pub const CONSTANT_VELOCITY_RADIUS: u32 = 20;

/// Textured target on a black background sliding out through the right
/// edge at 3 px per frame. From frame 14 on the box overhangs the frame.
pub fn frame_exit() -> SynthSpec {
    SynthSpec {
        width: 160,
        height: 120,
        length: 20,
        background: 0,
        target: BBox {
            x: 100,
            y: 48,
            w: 24,
            h: 24,
        },
        pattern: Pattern::Random {
            seed: 23,
            lo: 30,
            hi: 230,
        },
        motion: Motion::Constant { dx: 3, dy: 0 },
        effects: vec![],
    }
}

pub const FRAME_EXIT_RADIUS: u32 = 8;

/// A stationary textured target crossed by a slow uniform occluder wider
/// than the target (1 px per frame over 100 frames). Updating the template
/// every frame lets the occluder take over the template, after which the
/// box follows the occluder away from the target.
pub fn slow_occlusion() -> SynthSpec {
    SynthSpec {
        width: 200,
        height: 120,
        length: 100,
        background: 90,
        target: BBox {
            x: 60,
            y: 40,
            w: 24,
            h: 24,
        },
        pattern: Pattern::Random {
            seed: 5,
            lo: 0,
            hi: 255,
        },
        motion: Motion::Constant { dx: 0, dy: 0 },
        effects: vec![Effect {
            frames: FrameRange::new(1, 100),
            kind: EffectKind::Occluder {
                bbox: BBox {
                    x: 23,
                    y: 37,
                    w: 36,
                    h: 30,
                },
                velocity: (1, 0),
                pattern: Pattern::Solid(200),
            },
        }],
    }
}

pub const SLOW_OCCLUSION_RADIUS: u32 = 10;

/// Two-frame scene where a minority of the target changes drastically.
///
/// The 20x20 template is 75% textured object and 25% dark background strip
/// on its right. In the second frame the object moves by (3, 1) and its
/// background strip turns white, so a quarter of the template's pixels are
/// far beyond any threshold at the true location. A look-alike elsewhere
/// has the dark strip intact but the object 20 levels brighter: every pixel
/// is close, none exact. SAD prefers the look-alike, SMR the true location.
#[derive(Debug, Clone)]
pub struct RobustnessScene {
    pub first: GrayFrame,
    pub second: GrayFrame,
    pub init_box: BBox,
    pub true_box: BBox,
    pub decoy_box: BBox,
    pub config: TrackerConfig,
}

pub fn robustness_scene() -> RobustnessScene {
    const SIZE: u32 = 20;
    const STRIP: u32 = 5;
    const BACKGROUND: u8 = 128;
    let object = Pattern::Random {
        seed: 41,
        lo: 0,
        hi: 215,
    };
    let init_box = BBox {
        x: 40,
        y: 40,
        w: SIZE,
        h: SIZE,
    };
    let true_box = init_box.translated(3, 1);
    let decoy_box = init_box.translated(-2, 22);

    let appearance = |u: i64, v: i64, strip: u8, lift: u8| -> u8 {
        if u >= (SIZE - STRIP) as i64 {
            strip
        } else {
            object.value(u, v) + lift
        }
    };
    let draw = |frame: &mut GrayFrame, b: &BBox, strip: u8, lift: u8| {
        for v in 0..b.h as i64 {
            for u in 0..b.w as i64 {
                frame.set(
                    (b.x as i64 + u) as usize,
                    (b.y as i64 + v) as usize,
                    appearance(u, v, strip, lift),
                );
            }
        }
    };

    let mut first = GrayFrame::filled(120, 120, BACKGROUND).expect("nonempty");
    draw(&mut first, &init_box, 0, 0);
    let mut second = GrayFrame::filled(120, 120, BACKGROUND).expect("nonempty");
    draw(&mut second, &true_box, 255, 0);
    draw(&mut second, &decoy_box, 0, 20);

    RobustnessScene {
        first,
        second,
        init_box,
        true_box,
        decoy_box,
        config: TrackerConfig {
            search_radius: 24,
            ..TrackerConfig::default()
        },
    }
}
