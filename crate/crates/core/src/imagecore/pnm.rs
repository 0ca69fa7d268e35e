//! Binary PGM (P5) and PPM (P6) with maxval 255.

use std::path::Path;

use super::Image;
use crate::{Error, Result};

pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pnm(&bytes).map_err(|(offset, msg)| Error::Format {
        path: path.to_path_buf(),
        offset,
        msg,
    })
}

/// Writes `img` as P5 (one channel) or P6 (three channels).
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_pnm(img)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_pnm(img: &Image) -> Result<Vec<u8>> {
    if !img.is_unit_range() {
        return Err(Error::invalid("only images within [0, 1] can be stored"));
    }
    let magic = if img.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.data().iter().map(|&v| quantize(v)));
    Ok(out)
}

/// `round(v * 255)` with halves rounded up.
#[inline]
fn quantize(v: f64) -> u8 {
    (v * 255.0 + 0.5).floor() as u8
}

/// Parses a P5/P6 buffer. Errors carry the byte offset of the problem.
pub fn decode_pnm(bytes: &[u8]) -> std::result::Result<Image, (usize, String)> {
    let mut cur = Cursor { bytes, pos: 0 };
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err((0, "expected magic number P5 or P6".into())),
    };
    cur.pos = 2;
    let width = cur.header_value("width")?;
    let height = cur.header_value("height")?;
    let maxval_at = cur.skip_space();
    let maxval = cur.header_value("maxval")?;
    if maxval != 255 {
        return Err((
            maxval_at,
            format!("unsupported maxval {maxval}, expected 255"),
        ));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err((cur.pos, "expected whitespace after maxval".into())),
    }
    if width == 0 || height == 0 {
        return Err((cur.pos, format!("degenerate dimensions {width}x{height}")));
    }
    let need = width * height * channels;
    let raster = &bytes[cur.pos..];
    if raster.len() < need {
        return Err((
            bytes.len(),
            format!(
                "truncated raster: need {need} bytes, found {}",
                raster.len()
            ),
        ));
    }
    if raster.len() > need {
        return Err((cur.pos + need, "trailing bytes after raster".into()));
    }
    let data = raster.iter().map(|&b| b as f64 / 255.0).collect();
    Image::new(width, height, channels, data).map_err(|e| (cur.pos, e.to_string()))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    /// Skips whitespace and `#` comments, returning the new position.
    fn skip_space(&mut self) -> usize {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.pos
    }

    fn header_value(&mut self, what: &str) -> std::result::Result<usize, (usize, String)> {
        let start = self.skip_space();
        if start == 2 && self.bytes.len() > 2 && !self.bytes[2].is_ascii_whitespace() {
            return Err((2, "expected whitespace after magic number".into()));
        }
        let digits = self.bytes[start..]
            .iter()
            .take_while(|b| b.is_ascii_digit())
            .count();
        if digits == 0 {
            return Err((start, format!("expected {what}")));
        }
        self.pos = start + digits;
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or((start, format!("{what} out of range")))
    }
}
