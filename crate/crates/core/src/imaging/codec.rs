use std::io::Cursor;
use std::path::Path;

use super::{to_grayscale, GrayFrame};
use crate::error::{Error, Result};

/// Decodes a binary (`P5`) PGM with maxval at most 255. Pixel values are
/// copied verbatim; no rescaling happens when maxval < 255.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayFrame> {
    let mut header = HeaderReader { bytes, pos: 0 };
    let magic = header.token("magic")?;
    if magic != b"P5" {
        return Err(Error::decode(
            "magic",
            format!("expected P5, found {:?}", String::from_utf8_lossy(magic)),
        ));
    }
    let width = header.number("width")?;
    let height = header.number("height")?;
    let maxval = header.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::decode(
            if width == 0 { "width" } else { "height" },
            "must be positive",
        ));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::decode(
            "maxval",
            format!("{maxval} is outside 1..=255 (only 8-bit frames are supported)"),
        ));
    }
    // Exactly one whitespace byte separates maxval from the raster.
    match bytes.get(header.pos) {
        Some(b) if b.is_ascii_whitespace() => header.pos += 1,
        _ => return Err(Error::decode("maxval", "missing whitespace before payload")),
    }
    let needed = width
        .checked_mul(height)
        .ok_or_else(|| Error::decode("width", "dimensions overflow"))?;
    let payload = &bytes[header.pos..];
    if payload.len() < needed {
        return Err(Error::decode(
            "payload",
            format!("truncated: expected {needed} bytes, found {}", payload.len()),
        ));
    }
    GrayFrame::new(width, height, payload[..needed].to_vec())
}

/// Binary PGM: `"P5\n<w> <h>\n255\n"` followed by the row-major raster.
pub fn encode_pgm(frame: &GrayFrame) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", frame.width(), frame.height());
    let mut out = Vec::with_capacity(header.len() + frame.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(frame.data());
    out
}

/// Decodes an 8-bit PNG. Grayscale is copied verbatim, colour goes through
/// [`to_grayscale`]; alpha channels are dropped and palettes expanded.
pub fn decode_png(bytes: &[u8]) -> Result<GrayFrame> {
    let png_err = |e: png::DecodingError| Error::decode("png", e.to_string());
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(png_err)?;
    let depth = reader.info().bit_depth;
    if depth != png::BitDepth::Eight {
        return Err(Error::decode(
            "bit depth",
            format!("{} bits per sample is unsupported, expected 8", depth as u8),
        ));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::decode("png", "image too large"))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    let (width, height) = (info.width as usize, info.height as usize);
    let pixels = width * height;
    let stride = info.line_size;
    let channels = info.color_type.samples();

    let mut data = Vec::with_capacity(pixels);
    for row in buf.chunks(stride).take(height) {
        for px in row[..width * channels].chunks_exact(channels) {
            data.push(match info.color_type {
                png::ColorType::Grayscale | png::ColorType::GrayscaleAlpha => px[0],
                png::ColorType::Rgb | png::ColorType::Rgba => to_grayscale(px[0], px[1], px[2]),
                png::ColorType::Indexed => {
                    return Err(Error::decode("color type", "unexpanded palette"));
                }
            });
        }
    }
    GrayFrame::new(width, height, data)
}

/// Decodes by file extension (`.pgm` or `.png`, case-insensitive).
pub fn decode_frame(path: &Path) -> Result<GrayFrame> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NoSuchInput(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    match ext.as_deref() {
        Some("pgm") => decode_pgm(&bytes),
        Some("png") => decode_png(&bytes),
        _ => Err(Error::decode(
            "extension",
            format!("{} is neither .pgm nor .png", path.display()),
        )),
    }
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self, field: &'static str) -> Result<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() || b == b'#' {
                break;
            }
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::decode(field, "missing (header truncated)"));
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self, field: &'static str) -> Result<usize> {
        let tok = self.token(field)?;
        std::str::from_utf8(tok)
            .ok()
            .filter(|s| s.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| {
                Error::decode(
                    field,
                    format!("not a decimal integer: {:?}", String::from_utf8_lossy(tok)),
                )
            })
    }
}
