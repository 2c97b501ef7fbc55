//! Binary PPM (P6) heatmaps of sampled fields: a blue-white-red diverging
//! palette over a percentile-clipped value range, black for masked nodes,
//! image rows running from y_max down to y_min.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::GridData;

/// Lower and upper nearest-rank percentiles used to clip the color range.
pub const CLIP_PERCENTILES: (f64, f64) = (2.0, 98.0);

const BLUE: [f64; 3] = [59.0, 76.0, 192.0];
const WHITE: [f64; 3] = [221.0, 221.0, 221.0];
const RED: [f64; 3] = [180.0, 4.0, 38.0];

/// A rasterized heatmap ready to be written as PPM.
pub struct Rendered {
    pub width: usize,
    pub height: usize,
    /// RGB triples, row major, top row first.
    pub pixels: Vec<u8>,
    /// True when no node was valid and the image is entirely black.
    pub all_masked: bool,
}

fn nearest_rank(sorted: &[f64], percentile: f64) -> f64 {
    let n = sorted.len();
    let rank = ((percentile / 100.0 * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

fn mix(a: [f64; 3], b: [f64; 3], t: f64) -> [u8; 3] {
    let mut out = [0u8; 3];
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = (a[k] + (b[k] - a[k]) * t).round().clamp(0.0, 255.0) as u8;
    }
    out
}

fn shade(t: f64) -> [u8; 3] {
    if t <= 0.5 {
        mix(BLUE, WHITE, t * 2.0)
    } else {
        mix(WHITE, RED, (t - 0.5) * 2.0)
    }
}

/// Rasterizes `data`. The color range is the 2nd..98th percentile span of
/// the valid values; a constant field renders as the palette midpoint.
pub fn render_heatmap(data: &GridData) -> Rendered {
    render_heatmap_clipped(data, CLIP_PERCENTILES.0, CLIP_PERCENTILES.1)
}

/// [`render_heatmap`] with caller-chosen clip percentiles in [0, 100].
pub fn render_heatmap_clipped(data: &GridData, lo_pct: f64, hi_pct: f64) -> Rendered {
    let spec = data.spec;
    let (width, height) = (spec.nx, spec.ny);
    let mut valid: Vec<f64> = data
        .values
        .iter()
        .zip(&data.mask)
        .filter(|(_, m)| **m)
        .map(|(v, _)| *v)
        .collect();
    valid.sort_by(f64::total_cmp);
    let all_masked = valid.is_empty();
    let (lo, hi) = if all_masked {
        (0.0, 0.0)
    } else {
        (nearest_rank(&valid, lo_pct), nearest_rank(&valid, hi_pct))
    };
    let span = hi - lo;
    let mut pixels = vec![0u8; width * height * 3];
    for row in 0..height {
        let j = height - 1 - row;
        for i in 0..width {
            if !data.mask_at(i, j) {
                continue;
            }
            let v = data.value_at(i, j);
            let t = if span > 0.0 {
                ((v - lo) / span).clamp(0.0, 1.0)
            } else {
                0.5
            };
            let rgb = shade(t);
            let at = (row * width + i) * 3;
            pixels[at..at + 3].copy_from_slice(&rgb);
        }
    }
    Rendered { width, height, pixels, all_masked }
}

/// Writes `r` in binary PPM form.
pub fn write_ppm<W: Write>(r: &Rendered, w: &mut W) -> std::io::Result<()> {
    write!(w, "P6\n{} {}\n255\n", r.width, r.height)?;
    w.write_all(&r.pixels)
}

pub fn write_ppm_file(r: &Rendered, path: &Path) -> Result<()> {
    let file = File::create(path)
        .map_err(|e| Error::Grid(format!("cannot create {}: {e}", path.display())))?;
    let mut out = BufWriter::new(file);
    write_ppm(r, &mut out).map_err(|e| Error::Grid(format!("cannot write {}: {e}", path.display())))
}
