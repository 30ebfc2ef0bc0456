//! Frame-to-frame SMR tracking.
//!
//! Each step pads the incoming frame with zeros, searches the neighbourhood
//! of the last position, and, when the detection lies fully inside the
//! frame, replaces the template with the detected patch and recomputes the
//! threshold from the change between the two templates. While the detected
//! box overhangs the frame the template and threshold are held.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::imaging::{extract_patch, pad_frame, BBox, GrayFrame};
use crate::matching::{dynamic_alpha, search, Metric, SearchParams, Template};

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    /// Factor applied to the largest template change to get the next threshold.
    pub k: f64,
    pub search_radius: u32,
    /// Threshold used before the first template update.
    pub alpha0: f64,
    pub alpha_min: f64,
    /// Exponent scale in `exp(-beta * d)`.
    pub beta: f64,
    pub metric: Metric,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            k: 0.25,
            search_radius: 20,
            alpha0: 63.75,
            alpha_min: 1.0,
            beta: 1.0,
            metric: Metric::Smr,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.k, self.alpha0, self.alpha_min, self.beta]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("numeric fields must be finite".into()));
        }
        if self.k <= 0.0 {
            return Err(Error::Config(format!("k must be > 0, got {}", self.k)));
        }
        if self.beta <= 0.0 {
            return Err(Error::Config(format!("beta must be > 0, got {}", self.beta)));
        }
        if self.alpha_min < 0.0 {
            return Err(Error::Config(format!("alpha_min must be >= 0, got {}", self.alpha_min)));
        }
        if self.alpha0 < self.alpha_min {
            return Err(Error::Config(format!(
                "alpha0 ({}) must be >= alpha_min ({})",
                self.alpha0, self.alpha_min
            )));
        }
        Ok(())
    }

    /// Parses flat `key=value` lines. Blank lines and `#` comments are
    /// skipped; keys not given keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |reason: String| Error::Parse { line: i + 1, reason };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected key=value, got {line:?}")))?;
            config
                .set(key.trim(), value.trim())
                .map_err(|e| parse_err(e.to_string()))?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Sets one field by its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
        }
        match key {
            "k" => self.k = num(key, value)?,
            "search_radius" | "radius" => self.search_radius = num(key, value)?,
            "alpha0" => self.alpha0 = num(key, value)?,
            "alpha_min" => self.alpha_min = num(key, value)?,
            "beta" => self.beta = num(key, value)?,
            "metric" => self.metric = value.parse()?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn to_kv(&self) -> String {
        format!(
            "k={}\nsearch_radius={}\nalpha0={}\nalpha_min={}\nbeta={}\nmetric={}\n",
            self.k, self.search_radius, self.alpha0, self.alpha_min, self.beta, self.metric
        )
    }

    fn search_params(&self, alpha: f64) -> SearchParams {
        SearchParams {
            radius: self.search_radius,
            alpha,
            beta: self.beta,
            metric: self.metric,
        }
    }
}

/// Output for one tracked frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackResult {
    /// 1-based position in the sequence.
    pub frame_index: usize,
    /// Detected box in original frame coordinates; may overhang the frame.
    pub bbox: BBox,
    pub score: f64,
    /// Whether the template was refreshed from this detection.
    pub updated: bool,
    /// Threshold applied while searching this frame.
    pub alpha_used: f64,
}

pub const RESULTS_CSV_HEADER: &str = "frame_index,x,y,w,h,score,updated,alpha";

impl TrackResult {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{:.6},{},{:.6}",
            self.frame_index,
            self.bbox.x,
            self.bbox.y,
            self.bbox.w,
            self.bbox.h,
            self.score,
            self.updated as u8,
            self.alpha_used
        )
    }
}

/// Serializes results with a header line.
pub fn results_csv(results: &[TrackResult]) -> String {
    let mut out = String::with_capacity(48 * (results.len() + 1));
    out.push_str(RESULTS_CSV_HEADER);
    out.push('\n');
    for r in results {
        let _ = writeln!(out, "{}", r.csv_line());
    }
    out
}

/// Parses the results CSV. A leading header line is optional.
pub fn parse_results_csv(text: &str) -> Result<Vec<TrackResult>> {
    let mut results = Vec::new();
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
        if fields.len() != 8 {
            return Err(err("expected 8 comma-separated fields"));
        }
        let int = |s: &str| s.parse::<i64>().map_err(|_| err("bad integer"));
        let real = |s: &str| s.parse::<f64>().map_err(|_| err("bad number"));
        let frame_index = usize::try_from(int(fields[0])?).map_err(|_| err("negative frame index"))?;
        let (x, y, w, h) = (int(fields[1])?, int(fields[2])?, int(fields[3])?, int(fields[4])?);
        let bbox = BBox::new(
            i32::try_from(x).map_err(|_| err("x out of range"))?,
            i32::try_from(y).map_err(|_| err("y out of range"))?,
            u32::try_from(w).map_err(|_| err("w out of range"))?,
            u32::try_from(h).map_err(|_| err("h out of range"))?,
        )
        .map_err(|_| err("empty box"))?;
        let updated = match fields[6] {
            "1" | "true" => true,
            "0" | "false" => false,
            _ => return Err(err("updated must be 0 or 1")),
        };
        results.push(TrackResult {
            frame_index,
            bbox,
            score: real(fields[5])?,
            updated,
            alpha_used: real(fields[7])?,
        });
    }
    Ok(results)
}

/// Everything carried from one frame to the next.
#[derive(Debug, Clone)]
pub struct TrackerState {
    pub template: Template,
    pub alpha: f64,
    /// Last detection in padded-frame coordinates.
    pub position: BBox,
    pub update_frozen: bool,
    /// 1-based index of the last frame consumed.
    pub frame_index: usize,
    margin: usize,
    frame_dims: (usize, usize),
}

impl TrackerState {
    /// Starts tracking from `init_box` on the first frame of a sequence.
    pub fn init(first_frame: &GrayFrame, init_box: BBox, config: &TrackerConfig) -> Result<Self> {
        config.validate()?;
        let patch = extract_patch(first_frame, &init_box)?;
        let margin = config.search_radius as usize + init_box.w.max(init_box.h) as usize;
        Ok(Self {
            template: Template::new(patch, 1),
            alpha: config.alpha0,
            position: init_box.translated(margin as i32, margin as i32),
            update_frozen: false,
            frame_index: 1,
            margin,
            frame_dims: first_frame.dims(),
        })
    }

    /// Zero border added around every frame before searching.
    pub fn margin(&self) -> usize {
        self.margin
    }

    /// Last detection in original frame coordinates.
    pub fn unpadded_position(&self) -> BBox {
        let m = self.margin as i32;
        self.position.translated(-m, -m)
    }

    /// Tracks the target into `frame`, the next frame of the sequence.
    pub fn step(&mut self, frame: &GrayFrame, config: &TrackerConfig) -> Result<TrackResult> {
        if frame.dims() != self.frame_dims {
            return Err(Error::DimensionMismatch {
                expected: self.frame_dims,
                actual: frame.dims(),
            });
        }
        let frame_index = self.frame_index + 1;
        let alpha_used = self.alpha;
        let padded = pad_frame(frame, self.margin);
        let map = search(
            &padded,
            &self.template,
            &self.position,
            &config.search_params(alpha_used),
        )?;
        let detected = self.clamp_reachable(map.best_box());
        self.position = detected;
        self.frame_index = frame_index;

        let bbox = self.unpadded_position();
        let updated = bbox.fits_within(frame.width(), frame.height());
        if updated {
            let fresh = Template::new(extract_patch(frame, &bbox)?, frame_index);
            self.alpha = dynamic_alpha(&self.template, &fresh, config.k, config.alpha_min)?;
            self.template = fresh;
        }
        self.update_frozen = !updated;

        Ok(TrackResult {
            frame_index,
            bbox,
            score: map.best_score,
            updated,
            alpha_used,
        })
    }

    /// Keeps the box within one box-size of the frame so the next search
    /// window still fits in the padded frame.
    fn clamp_reachable(&self, b: BBox) -> BBox {
        let m = self.margin as i32;
        let (fw, fh) = (self.frame_dims.0 as i32, self.frame_dims.1 as i32);
        let (w, h) = (b.w as i32, b.h as i32);
        BBox {
            x: b.x.clamp(m - w, m + fw),
            y: b.y.clamp(m - h, m + fh),
            ..b
        }
    }
}

/// Initializes on the first frame and steps through the rest.
pub fn track_sequence<I>(frames: I, init_box: BBox, config: &TrackerConfig) -> Result<Vec<TrackResult>>
where
    I: IntoIterator<Item = Result<GrayFrame>>,
{
    let mut frames = frames.into_iter();
    let first = frames
        .next()
        .ok_or_else(|| Error::InvalidFrame("sequence has no frames".into()))?
        .map_err(|e| e.at_frame(1))?;
    let mut state = TrackerState::init(&first, init_box, config).map_err(|e| e.at_frame(1))?;
    drop(first);
    let mut results = Vec::new();
    for (i, frame) in frames.enumerate() {
        let index = i + 2;
        let frame = frame.map_err(|e| e.at_frame(index))?;
        results.push(state.step(&frame, config).map_err(|e| e.at_frame(index))?);
    }
    Ok(results)
}
