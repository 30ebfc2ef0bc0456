//! Similarity Matching Ratio scoring, the SAD baseline, and the windowed
//! offset search shared by both.
//!
//! The SMR score of a patch `F` against a template `G` under threshold `α` is
//!
//! ```text
//! Σ exp(-β·|F - G|)   over pixels with |F - G| ≤ α
//! ```
//!
//! Pixels whose difference exceeds `α` contribute nothing, so a corrupted
//! region of the patch affects the score exactly as if it had been cut out of
//! the template. Differences are raw 8-bit intensity units and `β` defaults
//! to 1.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imaging::{BBox, GrayFrame};

/// Below this many pixel comparisons a search runs on the calling thread.
const PARALLEL_WORK_THRESHOLD: usize = 1 << 16;

/// The current appearance model of the target.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub patch: GrayFrame,
    /// 1-based index of the frame the patch was cut from.
    pub source_frame_index: usize,
}

impl Template {
    pub fn new(patch: GrayFrame, source_frame_index: usize) -> Self {
        Self {
            patch,
            source_frame_index,
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.patch.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Metric {
    /// Maximize the similarity matching ratio.
    #[default]
    Smr,
    /// Minimize the sum of absolute differences.
    Sad,
}

impl Metric {
    /// True when `a` is a strictly better score than `b` under this metric.
    #[inline]
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Metric::Smr => a > b,
            Metric::Sad => a < b,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Smr => "smr",
            Metric::Sad => "sad",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "smr" => Ok(Metric::Smr),
            "sad" => Ok(Metric::Sad),
            other => Err(Error::Config(format!("unknown metric {other:?}, expected smr or sad"))),
        }
    }
}

/// Parameters of one windowed search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchParams {
    pub radius: u32,
    pub alpha: f64,
    pub beta: f64,
    pub metric: Metric,
}

impl SearchParams {
    pub fn smr(radius: u32, alpha: f64) -> Self {
        Self {
            radius,
            alpha,
            beta: 1.0,
            metric: Metric::Smr,
        }
    }

    pub fn sad(radius: u32) -> Self {
        Self {
            radius,
            alpha: 0.0,
            beta: 1.0,
            metric: Metric::Sad,
        }
    }
}

/// Scores for every offset of a search window.
///
/// Offsets `(dx, dy)` span `[-radius, radius]²` and are stored row-major:
/// `dy` selects the row and `dx` the column.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap {
    pub center: BBox,
    pub radius: u32,
    pub metric: Metric,
    pub scores: Vec<f64>,
    pub best_offset: (i32, i32),
    pub best_score: f64,
}

impl ScoreMap {
    #[inline]
    pub fn side(&self) -> usize {
        2 * self.radius as usize + 1
    }

    pub fn score_at(&self, dx: i32, dy: i32) -> Option<f64> {
        let r = self.radius as i32;
        if dx.abs() > r || dy.abs() > r {
            return None;
        }
        let idx = (dy + r) as usize * self.side() + (dx + r) as usize;
        Some(self.scores[idx])
    }

    /// Iterates `((dx, dy), score)` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = ((i32, i32), f64)> + '_ {
        let r = self.radius as i32;
        let side = self.side();
        self.scores
            .iter()
            .enumerate()
            .map(move |(i, &s)| (((i % side) as i32 - r, (i / side) as i32 - r), s))
    }

    /// The box the winning offset selects.
    pub fn best_box(&self) -> BBox {
        self.center.translated(self.best_offset.0, self.best_offset.1)
    }
}

/// Per-difference contribution table: `table[d] = exp(-β·d)` when `d ≤ α`,
/// otherwise zero.
#[derive(Clone)]
pub struct SmrKernel {
    table: [f64; 256],
}

impl SmrKernel {
    pub fn new(alpha: f64, beta: f64) -> Self {
        let mut table = [0.0; 256];
        for (d, slot) in table.iter_mut().enumerate() {
            let d = d as f64;
            if d <= alpha {
                *slot = (-beta * d).exp();
            }
        }
        Self { table }
    }

    #[inline]
    pub fn weight(&self, diff: u8) -> f64 {
        self.table[diff as usize]
    }

    /// Scores the template against the window of `frame` whose top-left
    /// corner is `(x0, y0)`. The caller guarantees the window is in bounds.
    #[inline]
    fn score_window(&self, frame: &GrayFrame, x0: usize, y0: usize, template: &GrayFrame) -> f64 {
        let tw = template.width();
        let mut sum = 0.0;
        for ty in 0..template.height() {
            let frow = &frame.row(y0 + ty)[x0..x0 + tw];
            for (&f, &g) in frow.iter().zip(template.row(ty)) {
                sum += self.table[f.abs_diff(g) as usize];
            }
        }
        sum
    }
}

#[inline]
fn sad_window(frame: &GrayFrame, x0: usize, y0: usize, template: &GrayFrame) -> u64 {
    let tw = template.width();
    let mut sum = 0u64;
    for ty in 0..template.height() {
        let frow = &frame.row(y0 + ty)[x0..x0 + tw];
        let row_sum: u32 = frow
            .iter()
            .zip(template.row(ty))
            .map(|(&f, &g)| f.abs_diff(g) as u32)
            .sum();
        sum += row_sum as u64;
    }
    sum
}

/// SMR score with `β = 1`.
pub fn smr_score(patch: &GrayFrame, template: &Template, alpha: f64) -> Result<f64> {
    smr_score_scaled(patch, template, alpha, 1.0)
}

/// SMR score with an explicit exponent scale `β`.
pub fn smr_score_scaled(patch: &GrayFrame, template: &Template, alpha: f64, beta: f64) -> Result<f64> {
    template.patch.check_same_dims(patch)?;
    Ok(SmrKernel::new(alpha, beta).score_window(patch, 0, 0, &template.patch))
}

pub fn sad_score(patch: &GrayFrame, template: &Template) -> Result<u64> {
    template.patch.check_same_dims(patch)?;
    Ok(sad_window(patch, 0, 0, &template.patch))
}

/// Scores every offset of `prev_pos` within `params.radius` and picks the
/// best one.
///
/// Ties go to the offset nearest the previous position (smallest
/// `dx² + dy²`), then to the first offset in row-major order. Every
/// candidate window must lie inside `frame`; pad the frame first when the
/// target may leave it. Each score is accumulated in a fixed row-major
/// pixel order, so the result is identical whether or not offsets are
/// scored in parallel.
pub fn search(frame: &GrayFrame, template: &Template, prev_pos: &BBox, params: &SearchParams) -> Result<ScoreMap> {
    let tpl = &template.patch;
    if (prev_pos.w as usize, prev_pos.h as usize) != tpl.dims() {
        return Err(Error::DimensionMismatch {
            expected: tpl.dims(),
            actual: (prev_pos.w as usize, prev_pos.h as usize),
        });
    }
    let r = params.radius as i32;
    let window = BBox {
        x: prev_pos.x - r,
        y: prev_pos.y - r,
        w: prev_pos.w + 2 * params.radius,
        h: prev_pos.h + 2 * params.radius,
    };
    if let Some(edge) = window.overhang(frame.width(), frame.height()) {
        return Err(Error::OutOfBounds {
            bbox: window,
            edge,
            width: frame.width(),
            height: frame.height(),
        });
    }

    let side = 2 * params.radius as usize + 1;
    let (left, top) = (window.x as usize, window.y as usize);
    let kernel = match params.metric {
        Metric::Smr => Some(SmrKernel::new(params.alpha, params.beta)),
        Metric::Sad => None,
    };
    let score_row = |row: usize, out: &mut [f64]| {
        for (col, slot) in out.iter_mut().enumerate() {
            *slot = match &kernel {
                Some(k) => k.score_window(frame, left + col, top + row, tpl),
                None => sad_window(frame, left + col, top + row, tpl) as f64,
            };
        }
    };

    let mut scores = vec![0.0; side * side];
    if side * side * tpl.len() >= PARALLEL_WORK_THRESHOLD {
        scores
            .par_chunks_mut(side)
            .enumerate()
            .for_each(|(row, out)| score_row(row, out));
    } else {
        for (row, out) in scores.chunks_mut(side).enumerate() {
            score_row(row, out);
        }
    }

    let (best_idx, best_score) = select_best(&scores, side, params.metric);
    let best_offset = ((best_idx % side) as i32 - r, (best_idx / side) as i32 - r);
    Ok(ScoreMap {
        center: *prev_pos,
        radius: params.radius,
        metric: params.metric,
        scores,
        best_offset,
        best_score,
    })
}

fn select_best(scores: &[f64], side: usize, metric: Metric) -> (usize, f64) {
    let r = (side / 2) as i64;
    let dist2 = |i: usize| {
        let dx = (i % side) as i64 - r;
        let dy = (i / side) as i64 - r;
        dx * dx + dy * dy
    };
    let mut best = 0;
    for i in 1..scores.len() {
        let (s, b) = (scores[i], scores[best]);
        if metric.better(s, b) || (s == b && dist2(i) < dist2(best)) {
            best = i;
        }
    }
    (best, scores[best])
}

/// Next threshold from consecutive templates: `k · max |G_t − G_{t+1}|`,
/// floored at `alpha_min`.
pub fn dynamic_alpha(old: &Template, new: &Template, k: f64, alpha_min: f64) -> Result<f64> {
    old.patch.check_same_dims(&new.patch)?;
    let max_diff = old
        .patch
        .data()
        .iter()
        .zip(new.patch.data())
        .map(|(&a, &b)| a.abs_diff(b))
        .max()
        .unwrap_or(0);
    Ok((k * max_diff as f64).max(alpha_min))
}

/// Per-pixel `|F − G|` as an image; dark means a close match.
pub fn diff_map(patch: &GrayFrame, template: &Template) -> Result<GrayFrame> {
    template.patch.check_same_dims(patch)?;
    let data = patch
        .data()
        .iter()
        .zip(template.patch.data())
        .map(|(&f, &g)| f.abs_diff(g))
        .collect();
    GrayFrame::new(patch.width(), patch.height(), data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HistogramBin {
    /// Inclusive lower bound; the bin covers `[lower, lower + bin_width)`.
    pub lower: u32,
    pub count: usize,
}

/// Counts map pixels in fixed-width bins spanning `[0, 255]`.
pub fn diff_histogram(map: &GrayFrame, bin_width: u32) -> Result<Vec<HistogramBin>> {
    if bin_width == 0 {
        return Err(Error::Config("histogram bin width must be at least 1".into()));
    }
    let bins = 256u32.div_ceil(bin_width) as usize;
    let mut counts = vec![0usize; bins];
    for &v in map.data() {
        counts[(v as u32 / bin_width) as usize] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            lower: i as u32 * bin_width,
            count,
        })
        .collect())
}

/// `bin_lower,count` lines, one per bin.
pub fn histogram_csv(bins: &[HistogramBin]) -> String {
    let mut out = String::from("bin_lower,count\n");
    for b in bins {
        out.push_str(&format!("{},{}\n", b.lower, b.count));
    }
    out
}
