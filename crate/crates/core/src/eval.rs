//! Ground-truth comparison: IoU per frame, correctly-tracked counts, and
//! tracker-by-sequence comparison tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::imaging::BBox;
use crate::tracker::TrackResult;

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

/// Intersection over union; 0 for disjoint boxes.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter == 0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    inter as f64 / union as f64
}

/// Annotated target box per frame; `None` marks a fully occluded or
/// out-of-view target.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GroundTruth {
    entries: Vec<(usize, Option<BBox>)>,
}

impl GroundTruth {
    pub fn new(entries: Vec<(usize, Option<BBox>)>) -> Result<Self> {
        if let Some(w) = entries.windows(2).find(|w| w[1].0 <= w[0].0) {
            return Err(Error::IndexMismatch(format!(
                "ground-truth frame indices must be strictly increasing ({} then {})",
                w[0].0, w[1].0
            )));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(usize, Option<BBox>)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, frame_index: usize) -> Option<Option<BBox>> {
        self.entries
            .binary_search_by_key(&frame_index, |e| e.0)
            .ok()
            .map(|i| self.entries[i].1)
    }

    /// First annotated box, the usual tracker initialization.
    pub fn first_box(&self) -> Option<(usize, BBox)> {
        self.entries.iter().find_map(|&(i, b)| b.map(|b| (i, b)))
    }

    /// Parses `frame_index,x,y,w,h` or `frame_index,NaN` lines. Blank lines,
    /// `#` comments and a leading header are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("frame_index")) {
                continue;
            }
            let err = |reason: &str| Error::Parse {
                line: i + 1,
                reason: format!("{reason}: {line:?}"),
            };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let index: usize = fields[0].parse().map_err(|_| err("bad frame index"))?;
            let bbox = match fields.len() {
                2 if fields[1].eq_ignore_ascii_case("nan") => None,
                5 => {
                    let n: Vec<i64> = fields[1..]
                        .iter()
                        .map(|s| s.parse::<i64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| err("bad box coordinate"))?;
                    let b = BBox::new(
                        i32::try_from(n[0]).map_err(|_| err("x out of range"))?,
                        i32::try_from(n[1]).map_err(|_| err("y out of range"))?,
                        u32::try_from(n[2]).map_err(|_| err("w out of range"))?,
                        u32::try_from(n[3]).map_err(|_| err("h out of range"))?,
                    )
                    .map_err(|_| err("empty box"))?;
                    Some(b)
                }
                _ => return Err(err("expected frame_index,x,y,w,h or frame_index,NaN")),
            };
            if entries.last().is_some_and(|&(prev, _)| index <= prev) {
                return Err(err("frame indices must be strictly increasing"));
            }
            entries.push((index, bbox));
        }
        Ok(Self { entries })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (i, b) in &self.entries {
            match b {
                Some(b) => writeln!(out, "{i},{},{},{},{}", b.x, b.y, b.w, b.h),
                None => writeln!(out, "{i},NaN"),
            }
            .unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub correctly_tracked: usize,
    pub total_evaluated: usize,
    pub per_frame_iou: Vec<(usize, Option<f64>)>,
    /// Minimum IoU for a frame to count as correctly tracked.
    pub iou_threshold: f64,
}

impl EvalReport {
    pub fn criterion(&self) -> String {
        format!("iou >= {:.6}", self.iou_threshold)
    }

    pub fn summary(&self) -> String {
        format!(
            "correct: {} / {} ({})",
            self.correctly_tracked,
            self.total_evaluated,
            self.criterion()
        )
    }

    /// Header, one `frame_index,iou` row per frame (`NaN` where truth is
    /// absent), then a `#` summary line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame_index,iou\n");
        for (i, v) in &self.per_frame_iou {
            match v {
                Some(v) => writeln!(out, "{i},{v:.6}"),
                None => writeln!(out, "{i},NaN"),
            }
            .unwrap();
        }
        writeln!(out, "# {}", self.summary()).unwrap();
        out
    }
}

/// Counts frames whose IoU with the truth reaches `iou_threshold`.
///
/// Truth entries before the first result frame are the initialization
/// frames and are skipped. Every other truth frame needs a result and every
/// result needs a truth entry. Frames whose truth is absent are excluded
/// from both counts.
pub fn evaluate(results: &[TrackResult], truth: &GroundTruth, iou_threshold: f64) -> Result<EvalReport> {
    let by_frame: BTreeMap<usize, &TrackResult> = results.iter().map(|r| (r.frame_index, r)).collect();
    if by_frame.len() != results.len() {
        return Err(Error::IndexMismatch("duplicate frame indices in results".into()));
    }
    let first = by_frame.keys().next().copied().unwrap_or(usize::MAX);
    let truth_frames: BTreeSet<usize> = truth.entries.iter().map(|e| e.0).filter(|&i| i >= first).collect();

    let missing_results: Vec<usize> = truth_frames
        .iter()
        .filter(|i| !by_frame.contains_key(i))
        .copied()
        .collect();
    let missing_truth: Vec<usize> = by_frame.keys().filter(|i| truth.get(**i).is_none()).copied().collect();
    if !missing_results.is_empty() || !missing_truth.is_empty() {
        let mut msg = String::new();
        if !missing_results.is_empty() {
            write!(msg, "no result for frames {missing_results:?}").unwrap();
        }
        if !missing_truth.is_empty() {
            if !msg.is_empty() {
                msg.push_str("; ");
            }
            write!(msg, "no ground truth for frames {missing_truth:?}").unwrap();
        }
        return Err(Error::IndexMismatch(msg));
    }

    let mut report = EvalReport {
        correctly_tracked: 0,
        total_evaluated: 0,
        per_frame_iou: Vec::with_capacity(by_frame.len()),
        iou_threshold,
    };
    for (&index, result) in &by_frame {
        let overlap = truth.get(index).flatten().map(|t| iou(&result.bbox, &t));
        if let Some(v) = overlap {
            report.total_evaluated += 1;
            if v >= iou_threshold {
                report.correctly_tracked += 1;
            }
        }
        report.per_frame_iou.push((index, overlap));
    }
    Ok(report)
}

/// Correctly-tracked counts laid out trackers × sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonTable {
    pub trackers: Vec<String>,
    pub sequences: Vec<String>,
    /// `cells[tracker][sequence]`; `None` where no report was supplied.
    pub cells: Vec<Vec<Option<usize>>>,
}

/// One evaluated (tracker, sequence) pair.
#[derive(Debug, Clone)]
pub struct NamedReport {
    pub tracker: String,
    pub sequence: String,
    pub report: EvalReport,
}

/// Builds the table in first-appearance order of tracker and sequence names.
pub fn compare(reports: &[NamedReport]) -> ComparisonTable {
    let mut trackers: Vec<String> = Vec::new();
    let mut sequences: Vec<String> = Vec::new();
    for r in reports {
        if !trackers.contains(&r.tracker) {
            trackers.push(r.tracker.clone());
        }
        if !sequences.contains(&r.sequence) {
            sequences.push(r.sequence.clone());
        }
    }
    let mut cells = vec![vec![None; sequences.len()]; trackers.len()];
    for r in reports {
        let t = trackers.iter().position(|n| n == &r.tracker).unwrap();
        let s = sequences.iter().position(|n| n == &r.sequence).unwrap();
        cells[t][s] = Some(r.report.correctly_tracked);
    }
    ComparisonTable {
        trackers,
        sequences,
        cells,
    }
}

impl ComparisonTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tracker");
        for s in &self.sequences {
            write!(out, ",{s}").unwrap();
        }
        out.push('\n');
        for (name, row) in self.trackers.iter().zip(&self.cells) {
            out.push_str(name);
            for c in row {
                match c {
                    Some(v) => write!(out, ",{v}"),
                    None => write!(out, ",n/a"),
                }
                .unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Right-aligned columns for terminal output.
    pub fn to_text(&self) -> String {
        let cell = |c: &Option<usize>| c.map_or_else(|| "n/a".to_string(), |v| v.to_string());
        let name_w = self
            .trackers
            .iter()
            .map(String::len)
            .max()
            .unwrap_or(0)
            .max("tracker".len());
        let col_w: Vec<usize> = self
            .sequences
            .iter()
            .enumerate()
            .map(|(j, s)| {
                self.cells
                    .iter()
                    .map(|row| cell(&row[j]).len())
                    .max()
                    .unwrap_or(0)
                    .max(s.len())
            })
            .collect();
        let mut out = format!("{:<name_w$}", "tracker");
        for (s, w) in self.sequences.iter().zip(&col_w) {
            write!(out, "  {s:>w$}").unwrap();
        }
        out.push('\n');
        for (name, row) in self.trackers.iter().zip(&self.cells) {
            write!(out, "{name:<name_w$}").unwrap();
            for (c, w) in row.iter().zip(&col_w) {
                write!(out, "  {:>w$}", cell(c)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}
