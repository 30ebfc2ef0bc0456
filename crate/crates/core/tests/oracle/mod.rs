//! Naive reference implementations, written independently of the
//! production kernels: direct `exp` per pixel, no lookup table, and the
//! winner chosen by sorting on an explicit key.

#![allow(dead_code)]

use smr_core::imaging::{BBox, GrayFrame};
use smr_core::matching::Metric;

pub fn smr_at(frame: &GrayFrame, x0: usize, y0: usize, tpl: &GrayFrame, alpha: f64, beta: f64) -> f64 {
    let mut total = 0.0;
    for j in 0..tpl.height() {
        for i in 0..tpl.width() {
            let d = (frame.get(x0 + i, y0 + j) as f64 - tpl.get(i, j) as f64).abs();
            if d <= alpha {
                total += (-beta * d).exp();
            }
        }
    }
    total
}

pub fn sad_at(frame: &GrayFrame, x0: usize, y0: usize, tpl: &GrayFrame) -> f64 {
    let mut total = 0i64;
    for j in 0..tpl.height() {
        for i in 0..tpl.width() {
            total += (frame.get(x0 + i, y0 + j) as i64 - tpl.get(i, j) as i64).abs();
        }
    }
    total as f64
}

pub struct NaiveSearch {
    /// `((dx, dy), score)` with `dy` outer, `dx` inner.
    pub scores: Vec<((i32, i32), f64)>,
    pub best_offset: (i32, i32),
    pub best_score: f64,
}

pub fn search(
    frame: &GrayFrame,
    tpl: &GrayFrame,
    prev: &BBox,
    radius: i32,
    alpha: f64,
    beta: f64,
    metric: Metric,
) -> NaiveSearch {
    let mut scores = Vec::new();
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let x0 = (prev.x + dx) as usize;
            let y0 = (prev.y + dy) as usize;
            let s = match metric {
                Metric::Smr => smr_at(frame, x0, y0, tpl, alpha, beta),
                Metric::Sad => sad_at(frame, x0, y0, tpl),
            };
            scores.push(((dx, dy), s));
        }
    }
    let optimum = match metric {
        Metric::Smr => scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max),
        Metric::Sad => scores.iter().map(|s| s.1).fold(f64::INFINITY, f64::min),
    };
    let mut winners: Vec<(i32, i32)> = scores.iter().filter(|s| s.1 == optimum).map(|s| s.0).collect();
    winners.sort_by_key(|&(dx, dy)| (dx * dx + dy * dy, dy, dx));
    NaiveSearch {
        scores,
        best_offset: winners[0],
        best_score: optimum,
    }
}
