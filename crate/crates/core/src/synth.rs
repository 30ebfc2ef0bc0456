//! Deterministic synthetic sequences with exact ground truth.
//!
//! A [`SynthSpec`] describes a uniform background, one textured target with
//! a scripted trajectory, and a list of timed effects. Frames are rendered
//! back to front: background, background patterns, target, appearance
//! changes, occluders, then noise. All randomness derives from explicit
//! seeds through [`SplitMix64`], so equal specs give bit-identical output.
//!
//! # Text format
//!
//! ```text
//! # 1-based frame numbers; ranges are inclusive
//! width = 320
//! height = 240
//! length = 100
//! background = 20
//! target = 40 50 32 32
//! pattern = random 7 30 230
//! motion = constant 2 1
//! effect = noise 1-100 seed=9 amplitude=3
//! effect = occluder 10-60 box=0,50,40,40 velocity=1,0 pattern=solid,255
//! effect = appearance 5-10 region=0,0,8,8 intensity=255
//! effect = background 1-100 region=0,0,320,240 pattern=stripes,4,0,255
//! ```
//!
//! `motion` is one of `constant dx dy`, `piecewise f:dx,dy ...` (velocity
//! from frame `f` on) or `scripted dx,dy ...` (one displacement per frame
//! transition, zero once the list runs out).

use std::fmt::{self, Write as _};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::GroundTruth;
use crate::imaging::{encode_pgm, BBox, GrayFrame};

/// Fraction of the target an occluder must hide for the truth to be absent.
pub const ABSENT_COVERAGE: f64 = 0.9;

/// SplitMix64 (Steele, Lea & Flood). Part of the fixture contract: noise and
/// random textures must reproduce across implementations.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(Self::GAMMA);
        mix64(self.state)
    }
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Intensity pattern in a local coordinate frame `(u, v)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    Solid(u8),
    Checker {
        cell: u32,
        a: u8,
        b: u8,
    },
    /// Vertical stripes `period` pixels wide.
    Stripes {
        period: u32,
        a: u8,
        b: u8,
    },
    /// Per-pixel hash noise, uniform in `[lo, hi]`.
    Random {
        seed: u64,
        lo: u8,
        hi: u8,
    },
}

impl Pattern {
    #[inline]
    pub fn value(&self, u: i64, v: i64) -> u8 {
        match *self {
            Pattern::Solid(c) => c,
            Pattern::Checker { cell, a, b } => {
                let c = cell as i64;
                if (u.div_euclid(c) + v.div_euclid(c)).rem_euclid(2) == 0 {
                    a
                } else {
                    b
                }
            }
            Pattern::Stripes { period, a, b } => {
                if u.div_euclid(period as i64).rem_euclid(2) == 0 {
                    a
                } else {
                    b
                }
            }
            Pattern::Random { seed, lo, hi } => {
                let key = seed ^ ((u as u64) << 32 ^ (v as u64 & 0xFFFF_FFFF)).wrapping_mul(SplitMix64::GAMMA);
                let span = hi as u64 - lo as u64 + 1;
                lo + (mix64(key) % span) as u8
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Pattern::Checker { cell: 0, .. } => Err(Error::Spec("checker cell must be >= 1".into())),
            Pattern::Stripes { period: 0, .. } => Err(Error::Spec("stripe period must be >= 1".into())),
            Pattern::Random { lo, hi, .. } if lo > hi => {
                Err(Error::Spec(format!("random pattern needs lo <= hi, got {lo} > {hi}")))
            }
            _ => Ok(()),
        }
    }

    fn parse(tokens: &[&str]) -> Result<Self> {
        let bad = || Error::Spec(format!("bad pattern {:?}", tokens.join(" ")));
        let num = |i: usize| tokens.get(i).ok_or_else(bad)?.parse::<u64>().map_err(|_| bad());
        let byte = |i: usize| u8::try_from(num(i)?).map_err(|_| bad());
        let expect = |n: usize| if tokens.len() == n { Ok(()) } else { Err(bad()) };
        let p = match tokens.first().copied() {
            Some("solid") => {
                expect(2)?;
                Pattern::Solid(byte(1)?)
            }
            Some("checker") => {
                expect(4)?;
                Pattern::Checker {
                    cell: u32::try_from(num(1)?).map_err(|_| bad())?,
                    a: byte(2)?,
                    b: byte(3)?,
                }
            }
            Some("stripes") => {
                expect(4)?;
                Pattern::Stripes {
                    period: u32::try_from(num(1)?).map_err(|_| bad())?,
                    a: byte(2)?,
                    b: byte(3)?,
                }
            }
            Some("random") => {
                expect(4)?;
                Pattern::Random {
                    seed: num(1)?,
                    lo: byte(2)?,
                    hi: byte(3)?,
                }
            }
            _ => return Err(bad()),
        };
        p.validate()?;
        Ok(p)
    }

    fn write_tokens(&self, sep: char) -> String {
        match self {
            Pattern::Solid(c) => format!("solid{sep}{c}"),
            Pattern::Checker { cell, a, b } => format!("checker{sep}{cell}{sep}{a}{sep}{b}"),
            Pattern::Stripes { period, a, b } => format!("stripes{sep}{period}{sep}{a}{sep}{b}"),
            Pattern::Random { seed, lo, hi } => format!("random{sep}{seed}{sep}{lo}{sep}{hi}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Motion {
    Constant {
        dx: i32,
        dy: i32,
    },
    /// `(from_frame, dx, dy)`: velocity applied on transitions out of
    /// `from_frame` and later, until the next segment starts.
    Piecewise(Vec<(usize, i32, i32)>),
    /// Displacement for each transition `t -> t+1`, starting at frame 1.
    Scripted(Vec<(i32, i32)>),
}

impl Motion {
    /// Displacement applied between frame `t` and `t + 1` (1-based).
    pub fn displacement(&self, t: usize) -> (i32, i32) {
        match self {
            Motion::Constant { dx, dy } => (*dx, *dy),
            Motion::Piecewise(segments) => segments.iter().rev().find(|s| s.0 <= t).map_or((0, 0), |s| (s.1, s.2)),
            Motion::Scripted(steps) => steps.get(t - 1).copied().unwrap_or((0, 0)),
        }
    }
}

/// Inclusive, 1-based frame range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameRange {
    pub first: usize,
    pub last: usize,
}

impl FrameRange {
    pub fn new(first: usize, last: usize) -> Self {
        Self { first, last }
    }

    pub fn contains(&self, t: usize) -> bool {
        self.first <= t && t <= self.last
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EffectKind {
    /// Additive integer noise uniform in `[-amplitude, amplitude]`, clamped.
    Noise { seed: u64, amplitude: u8 },
    /// A box moving `velocity` pixels per frame from `bbox` at the range's
    /// first frame, painted with `pattern` in box-local coordinates.
    Occluder {
        bbox: BBox,
        velocity: (i32, i32),
        pattern: Pattern,
    },
    /// Repaints `region` (relative to the target's top-left) with a constant.
    Appearance { region: BBox, intensity: u8 },
    /// Paints `pattern` over the background inside `region` (frame
    /// coordinates), underneath the target.
    Background { region: BBox, pattern: Pattern },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Effect {
    pub frames: FrameRange,
    pub kind: EffectKind,
}

impl Effect {
    fn occluder_box(&self, t: usize) -> Option<BBox> {
        match &self.kind {
            EffectKind::Occluder { bbox, velocity, .. } if self.frames.contains(t) => {
                let n = (t - self.frames.first) as i32;
                Some(bbox.translated(velocity.0 * n, velocity.1 * n))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub length: usize,
    pub background: u8,
    /// Target box on frame 1.
    pub target: BBox,
    pub pattern: Pattern,
    pub motion: Motion,
    pub effects: Vec<Effect>,
}

impl SynthSpec {
    /// Target boxes for frames `1..=length`.
    pub fn trajectory(&self) -> Vec<BBox> {
        let mut boxes = Vec::with_capacity(self.length);
        let mut b = self.target;
        for t in 1..=self.length {
            boxes.push(b);
            let (dx, dy) = self.motion.displacement(t);
            b = b.translated(dx, dy);
        }
        boxes
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Spec(format!(
                "frame size must be positive, got {}x{}",
                self.width, self.height
            )));
        }
        if self.length == 0 {
            return Err(Error::Spec("length must be >= 1".into()));
        }
        self.pattern.validate()?;
        for (i, b) in self.trajectory().iter().enumerate() {
            let reachable = b.x >= -(b.w as i32)
                && b.y >= -(b.h as i32)
                && b.x as i64 <= self.width as i64
                && b.y as i64 <= self.height as i64;
            if !reachable {
                return Err(Error::Spec(format!(
                    "target {b} at frame {} is more than one box size outside the frame",
                    i + 1
                )));
            }
        }
        if let Motion::Piecewise(segs) = &self.motion {
            if segs.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(Error::Spec("piecewise segments must start on increasing frames".into()));
            }
        }
        for e in &self.effects {
            if e.frames.first == 0 || e.frames.first > e.frames.last {
                return Err(Error::Spec(format!(
                    "bad frame range {}-{}",
                    e.frames.first, e.frames.last
                )));
            }
            match &e.kind {
                EffectKind::Occluder { pattern, .. } | EffectKind::Background { pattern, .. } => pattern.validate()?,
                EffectKind::Appearance { region, .. } => {
                    if !region.fits_within(self.target.w as usize, self.target.h as usize) {
                        return Err(Error::Spec(format!(
                            "appearance region {region} lies outside the {}x{} target",
                            self.target.w, self.target.h
                        )));
                    }
                }
                EffectKind::Noise { .. } => {}
            }
        }
        Ok(())
    }

    /// Fraction of `target` hidden by occluders active at frame `t`.
    pub fn occluded_fraction(&self, t: usize, target: &BBox) -> f64 {
        let occluders: Vec<BBox> = self.effects.iter().filter_map(|e| e.occluder_box(t)).collect();
        if occluders.is_empty() {
            return 0.0;
        }
        let mut covered = 0u64;
        for y in target.y..target.y + target.h as i32 {
            for x in target.x..target.x + target.w as i32 {
                let hit = occluders
                    .iter()
                    .any(|o| x >= o.x && (x as i64) < o.right() && y >= o.y && (y as i64) < o.bottom());
                covered += hit as u64;
            }
        }
        covered as f64 / target.area() as f64
    }

    fn render(&self, t: usize, target: &BBox) -> GrayFrame {
        let (w, h) = (self.width, self.height);
        let mut data = vec![self.background; w * h];
        let active = |kind: fn(&EffectKind) -> bool| {
            self.effects
                .iter()
                .filter(move |e| e.frames.contains(t) && kind(&e.kind))
        };

        let mut paint = |b: &BBox, f: &dyn Fn(i64, i64) -> u8| {
            let x0 = (b.x as i64).max(0);
            let y0 = (b.y as i64).max(0);
            let x1 = b.right().min(w as i64);
            let y1 = b.bottom().min(h as i64);
            for y in y0..y1 {
                for x in x0..x1 {
                    data[y as usize * w + x as usize] = f(x - b.x as i64, y - b.y as i64);
                }
            }
        };

        for e in active(|k| matches!(k, EffectKind::Background { .. })) {
            if let EffectKind::Background { region, pattern } = &e.kind {
                paint(region, &|u, v| pattern.value(u + region.x as i64, v + region.y as i64));
            }
        }
        paint(target, &|u, v| self.pattern.value(u, v));
        for e in active(|k| matches!(k, EffectKind::Appearance { .. })) {
            if let EffectKind::Appearance { region, intensity } = &e.kind {
                let abs = region.translated(target.x, target.y);
                paint(&abs, &|_, _| *intensity);
            }
        }
        for e in active(|k| matches!(k, EffectKind::Occluder { .. })) {
            if let (Some(b), EffectKind::Occluder { pattern, .. }) = (e.occluder_box(t), &e.kind) {
                paint(&b, &|u, v| pattern.value(u, v));
            }
        }
        for e in active(|k| matches!(k, EffectKind::Noise { .. })) {
            if let EffectKind::Noise { seed, amplitude } = e.kind {
                let mut rng = SplitMix64::new(seed ^ (t as u64).wrapping_mul(SplitMix64::GAMMA));
                let span = 2 * amplitude as u64 + 1;
                for px in data.iter_mut() {
                    let n = (rng.next_u64() % span) as i32 - amplitude as i32;
                    *px = (*px as i32 + n).clamp(0, 255) as u8;
                }
            }
        }
        GrayFrame::new(w, h, data).expect("render produces a full frame")
    }

    /// Serializes to the text format accepted by [`SynthSpec::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "width = {}", self.width).unwrap();
        writeln!(out, "height = {}", self.height).unwrap();
        writeln!(out, "length = {}", self.length).unwrap();
        writeln!(out, "background = {}", self.background).unwrap();
        let t = &self.target;
        writeln!(out, "target = {} {} {} {}", t.x, t.y, t.w, t.h).unwrap();
        writeln!(out, "pattern = {}", self.pattern.write_tokens(' ')).unwrap();
        let motion = match &self.motion {
            Motion::Constant { dx, dy } => format!("constant {dx} {dy}"),
            Motion::Piecewise(segs) => {
                let parts: Vec<String> = segs.iter().map(|(f, dx, dy)| format!("{f}:{dx},{dy}")).collect();
                format!("piecewise {}", parts.join(" "))
            }
            Motion::Scripted(steps) => {
                let parts: Vec<String> = steps.iter().map(|(dx, dy)| format!("{dx},{dy}")).collect();
                format!("scripted {}", parts.join(" ")).trim_end().to_string()
            }
        };
        writeln!(out, "motion = {motion}").unwrap();
        let bx = |b: &BBox| format!("{},{},{},{}", b.x, b.y, b.w, b.h);
        for e in &self.effects {
            let r = format!("{}-{}", e.frames.first, e.frames.last);
            let line = match &e.kind {
                EffectKind::Noise { seed, amplitude } => format!("noise {r} seed={seed} amplitude={amplitude}"),
                EffectKind::Occluder {
                    bbox,
                    velocity,
                    pattern,
                } => format!(
                    "occluder {r} box={} velocity={},{} pattern={}",
                    bx(bbox),
                    velocity.0,
                    velocity.1,
                    pattern.write_tokens(',')
                ),
                EffectKind::Appearance { region, intensity } => {
                    format!("appearance {r} region={} intensity={intensity}", bx(region))
                }
                EffectKind::Background { region, pattern } => {
                    format!(
                        "background {r} region={} pattern={}",
                        bx(region),
                        pattern.write_tokens(',')
                    )
                }
            };
            writeln!(out, "effect = {line}").unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut width = None;
        let mut height = None;
        let mut length = None;
        let mut background = 0u8;
        let mut target = None;
        let mut pattern = Pattern::Solid(255);
        let mut motion = Motion::Constant { dx: 0, dy: 0 };
        let mut effects = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |e: Error| Error::Parse {
                line: i + 1,
                reason: match e {
                    Error::Spec(m) => m,
                    other => other.to_string(),
                },
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(Error::Spec(format!("expected key = value, got {line:?}"))))?;
            let value = value.trim();
            let tokens = split_tokens(value);
            let num = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| at(Error::Spec(format!("bad number {s:?}"))))
            };
            match key.trim() {
                "width" => width = Some(num(value)?),
                "height" => height = Some(num(value)?),
                "length" => length = Some(num(value)?),
                "background" => {
                    background =
                        u8::try_from(num(value)?).map_err(|_| at(Error::Spec("background must be 0..=255".into())))?
                }
                "target" => target = Some(parse_box(&tokens).map_err(at)?),
                "pattern" => pattern = Pattern::parse(&tokens).map_err(at)?,
                "motion" => motion = parse_motion(value).map_err(at)?,
                "effect" => effects.push(parse_effect(value).map_err(at)?),
                other => return Err(at(Error::Spec(format!("unknown key {other:?}")))),
            }
        }
        let missing = |k: &str| Error::Spec(format!("missing required key {k:?}"));
        let spec = SynthSpec {
            width: width.ok_or_else(|| missing("width"))?,
            height: height.ok_or_else(|| missing("height"))?,
            length: length.ok_or_else(|| missing("length"))?,
            background,
            target: target.ok_or_else(|| missing("target"))?,
            pattern,
            motion,
            effects,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for SynthSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn split_tokens(s: &str) -> Vec<&str> {
    s.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .collect()
}

fn parse_box(tokens: &[&str]) -> Result<BBox> {
    BBox::parse(&tokens.join(" ")).map_err(|_| Error::Spec(format!("bad box {:?}", tokens.join(","))))
}

fn parse_pair(s: &str) -> Result<(i32, i32)> {
    let bad = || Error::Spec(format!("expected dx,dy, got {s:?}"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

fn parse_motion(value: &str) -> Result<Motion> {
    let mut parts = value.split_whitespace();
    let kind = parts.next().unwrap_or("");
    let rest: Vec<&str> = parts.collect();
    match kind {
        "constant" => {
            if rest.len() != 2 {
                return Err(Error::Spec("constant motion needs dx dy".into()));
            }
            let bad = |_| Error::Spec(format!("bad constant motion {value:?}"));
            Ok(Motion::Constant {
                dx: rest[0].parse().map_err(bad)?,
                dy: rest[1].parse().map_err(bad)?,
            })
        }
        "piecewise" => {
            let mut segs = Vec::new();
            for seg in rest {
                let (f, d) = seg
                    .split_once(':')
                    .ok_or_else(|| Error::Spec(format!("piecewise segment needs frame:dx,dy, got {seg:?}")))?;
                let f = f.parse().map_err(|_| Error::Spec(format!("bad frame in {seg:?}")))?;
                let (dx, dy) = parse_pair(d)?;
                segs.push((f, dx, dy));
            }
            Ok(Motion::Piecewise(segs))
        }
        "scripted" => Ok(Motion::Scripted(
            rest.into_iter().map(parse_pair).collect::<Result<_>>()?,
        )),
        other => Err(Error::Spec(format!("unknown motion {other:?}"))),
    }
}

fn parse_range(s: &str) -> Result<FrameRange> {
    let bad = || Error::Spec(format!("bad frame range {s:?}"));
    let (a, b) = s.split_once('-').unwrap_or((s, s));
    Ok(FrameRange::new(
        a.parse().map_err(|_| bad())?,
        b.parse().map_err(|_| bad())?,
    ))
}

fn parse_effect(value: &str) -> Result<Effect> {
    let mut parts = value.split_whitespace();
    let kind = parts.next().unwrap_or("");
    let frames = parse_range(
        parts
            .next()
            .ok_or_else(|| Error::Spec("effect needs a frame range".into()))?,
    )?;
    let mut args = std::collections::BTreeMap::new();
    for p in parts {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Error::Spec(format!("effect argument must be key=value, got {p:?}")))?;
        args.insert(k, v);
    }
    let take = |k: &str| {
        args.get(k)
            .copied()
            .ok_or_else(|| Error::Spec(format!("{kind} effect needs {k}=")))
    };
    let byte = |k: &str| -> Result<u8> {
        take(k)?
            .parse()
            .map_err(|_| Error::Spec(format!("{k} must be an integer in 0..=255")))
    };
    let kind = match kind {
        "noise" => EffectKind::Noise {
            seed: take("seed")?
                .parse()
                .map_err(|_| Error::Spec("bad noise seed".into()))?,
            amplitude: byte("amplitude")?,
        },
        "occluder" => EffectKind::Occluder {
            bbox: parse_box(&split_tokens(take("box")?))?,
            velocity: args.get("velocity").map_or(Ok((0, 0)), |v| parse_pair(v))?,
            pattern: Pattern::parse(&split_tokens(take("pattern")?))?,
        },
        "appearance" => EffectKind::Appearance {
            region: parse_box(&split_tokens(take("region")?))?,
            intensity: byte("intensity")?,
        },
        "background" => EffectKind::Background {
            region: parse_box(&split_tokens(take("region")?))?,
            pattern: Pattern::parse(&split_tokens(take("pattern")?))?,
        },
        other => return Err(Error::Spec(format!("unknown effect {other:?}"))),
    };
    Ok(Effect { frames, kind })
}

/// Renders every frame and the matching ground truth.
pub fn generate(spec: &SynthSpec) -> Result<(Vec<GrayFrame>, GroundTruth)> {
    spec.validate()?;
    let boxes = spec.trajectory();
    let frames: Vec<GrayFrame> = boxes
        .par_iter()
        .enumerate()
        .map(|(i, b)| spec.render(i + 1, b))
        .collect();
    let truth = boxes
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let t = i + 1;
            let hidden = spec.occluded_fraction(t, b) >= ABSENT_COVERAGE;
            (t, (!hidden).then_some(*b))
        })
        .collect();
    Ok((frames, GroundTruth::new(truth)?))
}

pub const TRUTH_FILE: &str = "truth.csv";
pub const INIT_FILE: &str = "init.txt";

/// Writes `00001.pgm`, `00002.pgm`, ..., `truth.csv` and `init.txt` (the
/// first annotated box as `x y w h`) into `dir`. Returns the written paths.
pub fn write_sequence(dir: &Path, frames: &[GrayFrame], truth: &GroundTruth) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(frames.len() + 2);
    for (i, f) in frames.iter().enumerate() {
        let path = dir.join(format!("{:05}.pgm", i + 1));
        std::fs::write(&path, encode_pgm(f))?;
        written.push(path);
    }
    let truth_path = dir.join(TRUTH_FILE);
    std::fs::write(&truth_path, truth.to_csv())?;
    written.push(truth_path);
    if let Some((_, b)) = truth.first_box() {
        let init_path = dir.join(INIT_FILE);
        std::fs::write(&init_path, format!("{} {} {} {}\n", b.x, b.y, b.w, b.h))?;
        written.push(init_path);
    }
    Ok(written)
}
