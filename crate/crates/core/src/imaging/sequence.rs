use std::path::{Path, PathBuf};

use super::{decode_frame, GrayFrame};
use crate::error::{Error, Result};

/// A directory of numbered frames. Files ending in `.pgm` or `.png` are
/// taken in ascending lexicographic order of their names; other files are
/// ignored.
#[derive(Debug, Clone)]
pub struct FrameDir {
    paths: Vec<PathBuf>,
}

impl FrameDir {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        if !dir.is_dir() {
            return Err(Error::NoSuchInput(dir.to_path_buf()));
        }
        let mut paths = Vec::new();
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            let is_frame = path
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("pgm") || e.eq_ignore_ascii_case("png"));
            if is_frame && path.is_file() {
                paths.push(path);
            }
        }
        paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
        if paths.is_empty() {
            return Err(Error::NoSuchInput(dir.join("*.pgm|*.png")));
        }
        Ok(Self { paths })
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn paths(&self) -> &[PathBuf] {
        &self.paths
    }

    /// Lazily decodes frames in order. Every frame must match the first
    /// frame's dimensions; errors carry the 1-based frame index.
    pub fn frames(&self) -> impl Iterator<Item = Result<GrayFrame>> + '_ {
        let mut dims = None;
        self.paths.iter().enumerate().map(move |(i, path)| {
            let index = i + 1;
            let frame = decode_frame(path).map_err(|e| e.at_frame(index))?;
            match dims {
                None => dims = Some(frame.dims()),
                Some(d) if d != frame.dims() => {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        actual: frame.dims(),
                    }
                    .at_frame(index));
                }
                Some(_) => {}
            }
            Ok(frame)
        })
    }
}
