//! Analysis of 2-D latent embeddings: binned target surfaces, their local
//! maxima, and nearest-neighbour classification.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::ndcore::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentPoint {
    pub d1: f64,
    pub d2: f64,
}

impl LatentPoint {
    pub fn distance_sq(&self, other: &LatentPoint) -> f64 {
        (self.d1 - other.d1).powi(2) + (self.d2 - other.d2).powi(2)
    }
}

/// Rows of an `n × 2` matrix as latent points.
pub fn points_from_matrix(z: &Matrix) -> Vec<LatentPoint> {
    (0..z.rows()).map(|i| LatentPoint { d1: z[(i, 0)], d2: z[(i, 1)] }).collect()
}

/// Mean target value per cell of a regular grid over the points' bounding box.
/// Cell `(ix, iy)` is stored at `iy * bins + ix`; `ix` runs along `d1`, `iy` along `d2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinnedSurface {
    pub bins: usize,
    pub d1_range: [f64; 2],
    pub d2_range: [f64; 2],
    pub means: Vec<Option<f64>>,
    pub counts: Vec<usize>,
}

fn padded_range(values: impl Iterator<Item = f64>) -> [f64; 2] {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if hi - lo > 1e-12 {
        [lo, hi]
    } else {
        [lo - 0.5, hi + 0.5]
    }
}

fn bin_of(v: f64, range: [f64; 2], bins: usize) -> usize {
    let t = (v - range[0]) / (range[1] - range[0]);
    ((t * bins as f64).floor() as isize).clamp(0, bins as isize - 1) as usize
}

pub fn binned_mean_surface(points: &[LatentPoint], values: &[f64], bins: usize) -> Result<BinnedSurface> {
    if bins == 0 {
        return Err(invalid("bin count must be positive"));
    }
    if points.len() != values.len() || points.is_empty() {
        return Err(invalid(format!("{} points but {} values", points.len(), values.len())));
    }
    if points.iter().any(|p| !(p.d1.is_finite() && p.d2.is_finite())) {
        return Err(invalid("latent points must be finite"));
    }
    let d1_range = padded_range(points.iter().map(|p| p.d1));
    let d2_range = padded_range(points.iter().map(|p| p.d2));
    let mut sums = vec![0.0; bins * bins];
    let mut counts = vec![0usize; bins * bins];
    for (p, v) in points.iter().zip(values) {
        let cell = bin_of(p.d2, d2_range, bins) * bins + bin_of(p.d1, d1_range, bins);
        sums[cell] += v;
        counts[cell] += 1;
    }
    let means = sums.iter().zip(&counts).map(|(s, &c)| (c > 0).then(|| s / c as f64)).collect();
    Ok(BinnedSurface { bins, d1_range, d2_range, means, counts })
}

impl BinnedSurface {
    pub fn get(&self, ix: usize, iy: usize) -> Option<f64> {
        self.means[iy * self.bins + ix]
    }

    /// Occupied cells strictly greater than every occupied 8-neighbour.
    /// A cell with no occupied neighbours counts as a maximum.
    pub fn count_local_maxima(&self) -> usize {
        let n = self.bins as isize;
        let mut count = 0;
        for iy in 0..n {
            for ix in 0..n {
                let Some(v) = self.get(ix as usize, iy as usize) else { continue };
                let mut is_max = true;
                'nb: for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (x, y) = (ix + dx, iy + dy);
                        if (dx, dy) == (0, 0) || x < 0 || y < 0 || x >= n || y >= n {
                            continue;
                        }
                        if let Some(w) = self.get(x as usize, y as usize) {
                            if w >= v {
                                is_max = false;
                                break 'nb;
                            }
                        }
                    }
                }
                count += usize::from(is_max);
            }
        }
        count
    }
}

/// k-nearest-neighbour vote; ties go to the tied label whose nearest member is closest.
pub fn knn_classify(train: &[LatentPoint], labels: &[usize], queries: &[LatentPoint], k: usize) -> Result<Vec<usize>> {
    if train.len() != labels.len() || train.is_empty() {
        return Err(invalid(format!("{} training points but {} labels", train.len(), labels.len())));
    }
    if k == 0 {
        return Err(invalid("k must be positive"));
    }
    let k = k.min(train.len());
    let n_labels = labels.iter().max().copied().unwrap_or(0) + 1;
    Ok(queries
        .iter()
        .map(|q| {
            let mut order: Vec<(f64, usize)> = train.iter().enumerate().map(|(i, p)| (p.distance_sq(q), i)).collect();
            order.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut nearest = order[..k].to_vec();
            nearest.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut votes = vec![0usize; n_labels];
            for &(_, i) in &nearest {
                votes[labels[i]] += 1;
            }
            let top = *votes.iter().max().unwrap();
            // nearest is sorted by distance, so the first tied label wins
            nearest.iter().map(|&(_, i)| labels[i]).find(|&l| votes[l] == top).unwrap()
        })
        .collect())
}

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len().max(1) as f64
}
