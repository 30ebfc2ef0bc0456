//! Grayscale frames, bounding boxes, and the pixel plumbing feeding the matcher.
//!
//! Coordinates are top-left anchored: `x` grows rightward, `y` downward, and
//! frames are stored row-major.

mod codec;
mod sequence;

use std::fmt;

use crate::error::{Edge, Error, Result};

pub use codec::{decode_frame, decode_pgm, decode_png, encode_pgm};
pub use sequence::FrameDir;

/// A single 8-bit grayscale image.
#[derive(Clone, PartialEq, Eq)]
pub struct GrayFrame {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayFrame {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidFrame(format!(
                "frame dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidFrame(format!(
                "{width}x{height} frame needs {} pixels, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    /// A frame with every pixel set to `value`.
    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    /// Always false: frames have at least one pixel.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.data[y * self.width + x] = value;
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[u8] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// The box covering the whole frame.
    pub fn bounds(&self) -> BBox {
        BBox {
            x: 0,
            y: 0,
            w: self.width as u32,
            h: self.height as u32,
        }
    }

    pub(crate) fn check_same_dims(&self, other: &GrayFrame) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: other.dims(),
            });
        }
        Ok(())
    }
}

impl fmt::Debug for GrayFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("GrayFrame");
        s.field("width", &self.width).field("height", &self.height);
        if self.data.len() <= 64 {
            s.field("data", &self.data);
        }
        s.finish_non_exhaustive()
    }
}

/// Integer rectangle, top-left anchored. `x`/`y` may be negative or past the
/// frame edge when the box overhangs a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BBox {
    pub x: i32,
    pub y: i32,
    pub w: u32,
    pub h: u32,
}

impl BBox {
    pub fn new(x: i32, y: i32, w: u32, h: u32) -> Result<Self> {
        if w == 0 || h == 0 {
            return Err(Error::InvalidFrame(format!("box size must be positive, got {w}x{h}")));
        }
        Ok(Self { x, y, w, h })
    }

    #[inline]
    pub fn right(&self) -> i64 {
        self.x as i64 + self.w as i64
    }

    #[inline]
    pub fn bottom(&self) -> i64 {
        self.y as i64 + self.h as i64
    }

    #[inline]
    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn translated(&self, dx: i32, dy: i32) -> Self {
        Self {
            x: self.x + dx,
            y: self.y + dy,
            ..*self
        }
    }

    /// First edge of `self` lying outside a `width`x`height` frame, if any.
    pub fn overhang(&self, width: usize, height: usize) -> Option<Edge> {
        if self.x < 0 {
            Some(Edge::Left)
        } else if self.y < 0 {
            Some(Edge::Top)
        } else if self.right() > width as i64 {
            Some(Edge::Right)
        } else if self.bottom() > height as i64 {
            Some(Edge::Bottom)
        } else {
            None
        }
    }

    pub fn fits_within(&self, width: usize, height: usize) -> bool {
        self.overhang(width, height).is_none()
    }

    /// Overlap area with `other`.
    pub fn intersection_area(&self, other: &BBox) -> u64 {
        let ix = (self.right().min(other.right()) - (self.x.max(other.x) as i64)).max(0);
        let iy = (self.bottom().min(other.bottom()) - (self.y.max(other.y) as i64)).max(0);
        (ix * iy) as u64
    }

    /// Parses `"x y w h"`; commas are accepted as separators too.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .collect();
        let bad = || Error::Parse {
            line: 1,
            reason: format!("expected four integers \"x y w h\", got {text:?}"),
        };
        if parts.len() != 4 {
            return Err(bad());
        }
        let x = parts[0].parse().map_err(|_| bad())?;
        let y = parts[1].parse().map_err(|_| bad())?;
        let w = parts[2].parse().map_err(|_| bad())?;
        let h = parts[3].parse().map_err(|_| bad())?;
        Self::new(x, y, w, h)
    }
}

impl fmt::Display for BBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}x{})", self.x, self.y, self.w, self.h)
    }
}

/// BT.601 luma with round-half-up, computed in exact integer arithmetic.
#[inline]
pub fn to_grayscale(r: u8, g: u8, b: u8) -> u8 {
    let weighted = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    ((weighted + 500) / 1000).min(255) as u8
}

/// Surrounds `frame` with `margin` pixels of zero on every side. Input pixel
/// `(x, y)` lands at `(x + margin, y + margin)`.
pub fn pad_frame(frame: &GrayFrame, margin: usize) -> GrayFrame {
    if margin == 0 {
        return frame.clone();
    }
    let width = frame.width + 2 * margin;
    let height = frame.height + 2 * margin;
    let mut data = vec![0u8; width * height];
    for y in 0..frame.height {
        let start = (y + margin) * width + margin;
        data[start..start + frame.width].copy_from_slice(frame.row(y));
    }
    GrayFrame { width, height, data }
}

/// Copies the pixels under `bbox`, which must lie entirely inside `frame`.
pub fn extract_patch(frame: &GrayFrame, bbox: &BBox) -> Result<GrayFrame> {
    if let Some(edge) = bbox.overhang(frame.width, frame.height) {
        return Err(Error::OutOfBounds {
            bbox: *bbox,
            edge,
            width: frame.width,
            height: frame.height,
        });
    }
    let (x0, y0) = (bbox.x as usize, bbox.y as usize);
    let (w, h) = (bbox.w as usize, bbox.h as usize);
    let mut data = Vec::with_capacity(w * h);
    for y in y0..y0 + h {
        data.extend_from_slice(&frame.row(y)[x0..x0 + w]);
    }
    Ok(GrayFrame {
        width: w,
        height: h,
        data,
    })
}
