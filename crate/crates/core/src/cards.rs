//! Procedural monochrome playing-card suit glyphs with random rotation and
//! symmetric shear, plus the target encodings used for regression.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::ndcore::Matrix;
use crate::seed::component_rng;

pub const MAX_ROTATION: f64 = 2.0 * PI / 3.0;
pub const MAX_SHEAR: f64 = PI / 9.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suit {
    Clubs = 0,
    Spades = 1,
    Hearts = 2,
    Diamonds = 3,
}

impl Suit {
    pub const ALL: [Suit; 4] = [Suit::Clubs, Suit::Spades, Suit::Hearts, Suit::Diamonds];

    pub fn label(self) -> usize {
        self as usize
    }

    pub fn from_label(label: usize) -> Result<Self> {
        Self::ALL.get(label).copied().ok_or_else(|| invalid(format!("unknown suit label {label}")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Suit::Clubs => "clubs",
            Suit::Spades => "spades",
            Suit::Hearts => "hearts",
            Suit::Diamonds => "diamonds",
        }
    }
}

impl fmt::Display for Suit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suit {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|suit| suit.name() == s).ok_or_else(|| invalid(format!("unknown suit `{s}`")))
    }
}

/// Square grayscale image, row-major, values in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    pub size: usize,
    pub pixels: Vec<f64>,
}

impl GrayImage {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.size + x]
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len() as f64
    }

    pub fn mean_abs_diff(&self, other: &GrayImage) -> f64 {
        self.pixels.iter().zip(&other.pixels).map(|(a, b)| (a - b).abs()).sum::<f64>() / self.pixels.len() as f64
    }

    /// Mean absolute difference over pixels at least `margin` from the border.
    pub fn interior_mean_abs_diff(&self, other: &GrayImage, margin: usize) -> f64 {
        let (mut s, mut n) = (0.0, 0usize);
        for y in margin..self.size - margin {
            for x in margin..self.size - margin {
                s += (self.get(x, y) - other.get(x, y)).abs();
                n += 1;
            }
        }
        s / n as f64
    }

    /// Rotates the pixel grid by 90° (exact index permutation).
    pub fn rotate90(&self) -> GrayImage {
        let n = self.size;
        let mut pixels = vec![0.0; n * n];
        for y in 0..n {
            for x in 0..n {
                pixels[x * n + (n - 1 - y)] = self.get(x, y);
            }
        }
        GrayImage { size: n, pixels }
    }

    pub fn mirror_x(&self) -> GrayImage {
        let n = self.size;
        let mut pixels = vec![0.0; n * n];
        for y in 0..n {
            for x in 0..n {
                pixels[y * n + (n - 1 - x)] = self.get(x, y);
            }
        }
        GrayImage { size: n, pixels }
    }
}

fn in_disc(u: f64, v: f64, cu: f64, cv: f64, r: f64) -> bool {
    (u - cu).powi(2) + (v - cv).powi(2) <= r * r
}

fn in_triangle(u: f64, v: f64, t: [(f64, f64); 3]) -> bool {
    let edge = |(ax, ay): (f64, f64), (bx, by): (f64, f64)| (bx - ax) * (v - ay) - (by - ay) * (u - ax);
    let d = [edge(t[0], t[1]), edge(t[1], t[2]), edge(t[2], t[0])];
    d.iter().all(|&x| x >= 0.0) || d.iter().all(|&x| x <= 0.0)
}

/// Glyph membership in unit coordinates (u right, v up, glyph within [-1, 1]²).
fn glyph_contains(suit: Suit, u: f64, v: f64) -> bool {
    match suit {
        Suit::Hearts => {
            in_disc(u, v, -0.45, 0.35, 0.5)
                || in_disc(u, v, 0.45, 0.35, 0.5)
                || in_triangle(u, v, [(-0.93, 0.18), (0.93, 0.18), (0.0, -0.95)])
        }
        Suit::Spades => {
            in_disc(u, v, -0.45, -0.12, 0.45)
                || in_disc(u, v, 0.45, -0.12, 0.45)
                || in_triangle(u, v, [(-0.88, -0.27), (0.88, -0.27), (0.0, 0.95)])
                || in_triangle(u, v, [(0.0, -0.3), (-0.35, -0.95), (0.35, -0.95)])
        }
        Suit::Clubs => {
            in_disc(u, v, 0.0, 0.47, 0.42)
                || in_disc(u, v, -0.47, -0.12, 0.42)
                || in_disc(u, v, 0.47, -0.12, 0.42)
                || in_disc(u, v, 0.0, 0.05, 0.25)
                || in_triangle(u, v, [(0.0, 0.0), (-0.32, -0.95), (0.32, -0.95)])
        }
        Suit::Diamonds => u.abs() + v.abs() <= 0.92,
    }
}

const SUPERSAMPLE: usize = 4;

/// Anti-aliased glyph centered in a `size × size` frame with a 2-pixel margin.
pub fn render_suit_glyph(suit: Suit, size: usize) -> Result<GrayImage> {
    if size < 16 {
        return Err(invalid(format!("glyph size must be at least 16, got {size}")));
    }
    let half = size as f64 / 2.0;
    let c = (size as f64 - 1.0) / 2.0;
    // Pixel k covers [k − ½, k + ½]; keep two full pixels empty on each side.
    let scale = (half - 2.0 - 0.5) / half;
    let ss = SUPERSAMPLE as f64;
    let mut pixels = vec![0.0; size * size];
    for y in 0..size {
        for x in 0..size {
            let mut hits = 0;
            for sy in 0..SUPERSAMPLE {
                for sx in 0..SUPERSAMPLE {
                    let px = x as f64 + (sx as f64 + 0.5) / ss - 0.5;
                    let py = y as f64 + (sy as f64 + 0.5) / ss - 0.5;
                    let u = (px - c) / half / scale;
                    let v = -(py - c) / half / scale;
                    if glyph_contains(suit, u, v) {
                        hits += 1;
                    }
                }
            }
            pixels[y * size + x] = hits as f64 / (SUPERSAMPLE * SUPERSAMPLE) as f64;
        }
    }
    Ok(GrayImage { size, pixels })
}

fn sample_bilinear(img: &GrayImage, x: f64, y: f64) -> f64 {
    let n = img.size as isize;
    let x0 = x.floor();
    let y0 = y.floor();
    let (fx, fy) = (x - x0, y - y0);
    let (x0, y0) = (x0 as isize, y0 as isize);
    let at = |xi: isize, yi: isize| {
        if xi < 0 || yi < 0 || xi >= n || yi >= n {
            0.0
        } else {
            img.pixels[(yi * n + xi) as usize]
        }
    };
    let v = (1.0 - fx) * (1.0 - fy) * at(x0, y0)
        + fx * (1.0 - fy) * at(x0 + 1, y0)
        + (1.0 - fx) * fy * at(x0, y0 + 1)
        + fx * fy * at(x0 + 1, y0 + 1);
    v.clamp(0.0, 1.0)
}

/// Rotates about the image center, then shears with `[[1, tan s], [tan s, 1]]`,
/// by inverse mapping with bilinear sampling (zero outside the frame).
/// Angles are in radians, in pixel coordinates (x right, y down).
pub fn affine_transform(image: &GrayImage, rotation: f64, shear: f64) -> Result<GrayImage> {
    if rotation == 0.0 && shear == 0.0 {
        return Ok(image.clone());
    }
    let (s, c) = rotation.sin_cos();
    let t = shear.tan();
    // forward M = Sh · R
    let m = [[c + t * s, -s + t * c], [t * c + s, -t * s + c]];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if !det.is_finite() || det.abs() < 1e-9 {
        return Err(invalid(format!("rotation {rotation} with shear {shear} is singular")));
    }
    let inv = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]];
    let n = image.size;
    let ctr = (n as f64 - 1.0) / 2.0;
    let mut pixels = vec![0.0; n * n];
    for y in 0..n {
        for x in 0..n {
            let (dx, dy) = (x as f64 - ctr, y as f64 - ctr);
            let sx = inv[0][0] * dx + inv[0][1] * dy + ctr;
            let sy = inv[1][0] * dx + inv[1][1] * dy + ctr;
            pixels[y * n + x] = sample_bilinear(image, sx, sy);
        }
    }
    Ok(GrayImage { size: n, pixels })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CardImage {
    pub image: GrayImage,
    pub suit: Suit,
    pub rotation: f64,
    pub shear: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CardsConfig {
    pub per_suit: usize,
    pub size: usize,
}

impl Default for CardsConfig {
    fn default() -> Self {
        Self { per_suit: 2000, size: 32 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CardsDataset {
    pub size: usize,
    pub images: Vec<CardImage>,
}

impl CardsDataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Flattened images, one row per card.
    pub fn inputs(&self) -> Matrix {
        let data = self.images.iter().flat_map(|c| c.image.pixels.iter().copied()).collect();
        Matrix::from_vec(self.len(), self.size * self.size, data).expect("uniform image sizes")
    }
}

/// Suit-major dataset: `per_suit` cards of each suit in label order.
pub fn generate_cards_dataset(cfg: &CardsConfig, seed: u64) -> Result<CardsDataset> {
    if cfg.per_suit == 0 {
        return Err(invalid("per_suit must be at least 1"));
    }
    let glyphs = Suit::ALL.iter().map(|&s| render_suit_glyph(s, cfg.size)).collect::<Result<Vec<_>>>()?;
    let images = (0..4 * cfg.per_suit)
        .into_par_iter()
        .map(|k| {
            let suit = Suit::ALL[k / cfg.per_suit];
            let mut rng = component_rng(seed, "card", k as u64);
            let rotation = rng.gen_range(-MAX_ROTATION..=MAX_ROTATION);
            let shear = rng.gen_range(-MAX_SHEAR..=MAX_SHEAR);
            let image = affine_transform(&glyphs[suit.label()], rotation, shear)?;
            Ok(CardImage { image, suit, rotation, shear })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CardsDataset { size: cfg.size, images })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetKind {
    /// 1 for the chosen suit, 0 otherwise.
    OneVsRest(Suit),
    /// clubs 0, spades 1, hearts 2, diamonds 3.
    OrdinalSuit,
    Rotation,
    Shear,
}

impl FromStr for TargetKind {
    type Err = crate::Error;

    /// Accepts `suit`, `rotation`, `shear`, or a suit name for one-vs-rest.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "suit" => Ok(Self::OrdinalSuit),
            "rotation" => Ok(Self::Rotation),
            "shear" => Ok(Self::Shear),
            other => other.strip_prefix("one_vs_rest:").unwrap_or(other).parse().map(Self::OneVsRest),
        }
    }
}

pub fn encode_target(dataset: &CardsDataset, kind: TargetKind) -> Vec<f64> {
    dataset
        .images
        .iter()
        .map(|c| match kind {
            TargetKind::OneVsRest(s) => f64::from(u8::from(c.suit == s)),
            TargetKind::OrdinalSuit => c.suit.label() as f64,
            TargetKind::Rotation => c.rotation,
            TargetKind::Shear => c.shear,
        })
        .collect()
}
