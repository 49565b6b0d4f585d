//! Raster plots: scatter and heatmap PNGs with a viridis-style colormap.
//! Heatmaps are rendered from their binned-mean CSV so the picture is a pure
//! function of the exported table.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::latent::{BinnedSurface, LatentPoint};

const VIRIDIS: [[u8; 3]; 9] = [
    [68, 1, 84],
    [71, 44, 122],
    [59, 81, 139],
    [44, 113, 142],
    [33, 144, 141],
    [39, 173, 129],
    [92, 200, 99],
    [170, 220, 50],
    [253, 231, 37],
];

const BACKGROUND: [u8; 3] = [255, 255, 255];
const EMPTY_CELL: [u8; 3] = [220, 220, 220];

/// Colormap lookup for `t` in [0, 1] (clamped; NaN maps to the low end).
pub fn viridis(t: f64) -> [u8; 3] {
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
    let x = t * (VIRIDIS.len() - 1) as f64;
    let i = (x.floor() as usize).min(VIRIDIS.len() - 2);
    let f = x - i as f64;
    let mut out = [0u8; 3];
    for c in 0..3 {
        let a = VIRIDIS[i][c] as f64;
        let b = VIRIDIS[i + 1][c] as f64;
        out[c] = (a + f * (b - a)).round() as u8;
    }
    out
}

/// Row-major RGB raster.
pub struct Canvas {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl Canvas {
    pub fn new(width: u32, height: u32, fill: [u8; 3]) -> Self {
        let pixels = fill.iter().copied().cycle().take(3 * (width * height) as usize).collect();
        Self { width, height, pixels }
    }

    pub fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        if x < self.width && y < self.height {
            let k = 3 * (y * self.width + x) as usize;
            self.pixels[k..k + 3].copy_from_slice(&rgb);
        }
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width, self.height);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().map_err(|e| Error::Internal(e.to_string()))?;
            w.write_image_data(&self.pixels).map_err(|e| Error::Internal(e.to_string()))?;
        }
        Ok(out)
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode_png()?)?;
        Ok(())
    }
}

fn value_range(values: &[f64]) -> (f64, f64) {
    let (lo, hi) = values
        .iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if lo.is_finite() && hi > lo {
        (lo, hi)
    } else {
        (lo.min(0.0), lo.min(0.0) + 1.0)
    }
}

/// One 3×3 marker per point, colored by value; axes span the data with a 5% margin.
pub fn render_scatter(points: &[LatentPoint], values: &[f64], size: u32) -> Result<Canvas> {
    if points.len() != values.len() {
        return Err(invalid("scatter needs one value per point"));
    }
    let mut canvas = Canvas::new(size, size, BACKGROUND);
    if points.is_empty() {
        return Ok(canvas);
    }
    let (x0, x1) = value_range(&points.iter().map(|p| p.d1).collect::<Vec<_>>());
    let (y0, y1) = value_range(&points.iter().map(|p| p.d2).collect::<Vec<_>>());
    let (v0, v1) = value_range(values);
    let span = (size - 1) as f64;
    let px = |v: f64, lo: f64, hi: f64| (0.05 + 0.9 * (v - lo) / (hi - lo)) * span;
    for (p, &v) in points.iter().zip(values) {
        let cx = px(p.d1, x0, x1).round() as i64;
        let cy = (span - px(p.d2, y0, y1)).round() as i64;
        let rgb = viridis((v - v0) / (v1 - v0));
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (x, y) = (cx + dx, cy + dy);
                if x >= 0 && y >= 0 {
                    canvas.set(x as u32, y as u32, rgb);
                }
            }
        }
    }
    Ok(canvas)
}

/// One row of a binned-mean table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinRow {
    pub ix: usize,
    pub iy: usize,
    pub d1_lo: f64,
    pub d1_hi: f64,
    pub d2_lo: f64,
    pub d2_hi: f64,
    pub count: usize,
    pub mean: Option<f64>,
}

pub fn surface_rows(s: &BinnedSurface) -> Vec<BinRow> {
    let w1 = (s.d1_range[1] - s.d1_range[0]) / s.bins as f64;
    let w2 = (s.d2_range[1] - s.d2_range[0]) / s.bins as f64;
    let mut rows = Vec::with_capacity(s.bins * s.bins);
    for iy in 0..s.bins {
        for ix in 0..s.bins {
            rows.push(BinRow {
                ix,
                iy,
                d1_lo: s.d1_range[0] + ix as f64 * w1,
                d1_hi: s.d1_range[0] + (ix + 1) as f64 * w1,
                d2_lo: s.d2_range[0] + iy as f64 * w2,
                d2_hi: s.d2_range[0] + (iy + 1) as f64 * w2,
                count: s.counts[iy * s.bins + ix],
                mean: s.get(ix, iy),
            });
        }
    }
    rows
}

pub fn write_bin_rows<W: Write>(rows: &[BinRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_bin_rows(path: &Path) -> Result<Vec<BinRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<Vec<BinRow>, _>>()?)
}

/// Heatmap of a binned-mean table: `iy = 0` at the bottom, empty cells grey.
pub fn render_heatmap(rows: &[BinRow], size: u32) -> Result<Canvas> {
    let bins = rows.iter().map(|r| r.ix.max(r.iy) + 1).max().unwrap_or(0);
    if bins == 0 || rows.len() != bins * bins {
        return Err(invalid(format!("binned table has {} rows, not a square grid", rows.len())));
    }
    let mut grid = vec![None; bins * bins];
    for r in rows {
        grid[r.iy * bins + r.ix] = r.mean;
    }
    let (v0, v1) = value_range(&grid.iter().flatten().copied().collect::<Vec<_>>());
    let mut canvas = Canvas::new(size, size, EMPTY_CELL);
    for y in 0..size {
        let iy = bins - 1 - (y as usize * bins / size as usize);
        for x in 0..size {
            let ix = x as usize * bins / size as usize;
            if let Some(v) = grid[iy * bins + ix] {
                canvas.set(x, y, viridis((v - v0) / (v1 - v0)));
            }
        }
    }
    Ok(canvas)
}
