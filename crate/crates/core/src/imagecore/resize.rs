use super::Image;
use crate::{Error, Result};

/// Bilinear resampling with half-pixel centres and edge clamping.
///
/// Source coordinate of destination column `x` is
/// `(x + 0.5) * W / out_w - 0.5`, likewise for rows.
pub fn resize_bilinear(img: &Image, out_w: usize, out_h: usize) -> Result<Image> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::invalid(format!(
            "resize target must be positive, got {out_w}x{out_h}"
        )));
    }
    if img.dims() == (out_w, out_h) {
        return Ok(img.clone());
    }
    let cols = taps(img.width(), out_w);
    let rows = taps(img.height(), out_h);
    let ch = img.channels();
    let mut data = Vec::with_capacity(out_w * out_h * ch);
    for &(y0, y1, fy) in &rows {
        for &(x0, x1, fx) in &cols {
            for c in 0..ch {
                let p = [
                    img.get(x0, y0, c),
                    img.get(x1, y0, c),
                    img.get(x0, y1, c),
                    img.get(x1, y1, c),
                ];
                let top = p[0] * (1.0 - fx) + p[1] * fx;
                let bottom = p[2] * (1.0 - fx) + p[3] * fx;
                let v = top * (1.0 - fy) + bottom * fy;
                // Keep the result inside the hull of its samples despite rounding.
                let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                data.push(v.clamp(lo, hi));
            }
        }
    }
    Image::new(out_w, out_h, ch, data)
}

/// For each output index: the two source indices and the weight of the second.
fn taps(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    let last = src as f64 - 1.0;
    (0..dst)
        .map(|d| {
            let s = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, last);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}
