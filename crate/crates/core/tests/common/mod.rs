//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn dense_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs())).unwrap();
        m.swap(c, p);
        let d = m[c][c];
        m[c].iter_mut().for_each(|v| *v /= d);
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                if f != 0.0 {
                    let pivot = m[c].clone();
                    m[r].iter_mut().zip(&pivot).for_each(|(v, p)| *v -= f * p);
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// `α·exp(−½‖a−b‖²/l²)`
pub fn rbf(a: &[f64], b: &[f64], alpha: f64, l: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    alpha * (-0.5 * d2 / (l * l)).exp()
}

/// Posterior mean and variance from the textbook formulas with an explicit
/// inverse of `K + diag_add·I`.
pub fn gp_posterior(
    x: &[Vec<f64>],
    y: &[f64],
    q: &[Vec<f64>],
    alpha: f64,
    l: f64,
    diag_add: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let k: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| rbf(&x[i], &x[j], alpha, l) + if i == j { diag_add } else { 0.0 }).collect())
        .collect();
    let kinv = dense_inverse(&k);
    let mut mean = Vec::new();
    let mut var = Vec::new();
    for p in q {
        let ks: Vec<f64> = x.iter().map(|xi| rbf(p, xi, alpha, l)).collect();
        let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| kinv[i][j] * ks[j]).sum()).collect();
        mean.push((0..n).map(|i| w[i] * y[i]).sum());
        var.push(alpha - (0..n).map(|i| w[i] * ks[i]).sum::<f64>());
    }
    (mean, var)
}

/// Straight-loop `Σ|curl|` with explicit periodic neighbours, on `(P_x, P_y)[i][j]`.
pub fn curl_sum(px: &[Vec<f64>], py: &[Vec<f64>]) -> f64 {
    let n = px.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let up = py[(i + 1) % n][j];
            let down = py[(i + n - 1) % n][j];
            let right = px[i][(j + 1) % n];
            let left = px[i][(j + n - 1) % n];
            total += ((up - down) / 2.0 - (right - left) / 2.0).abs();
        }
    }
    total
}

pub fn to_grid(v: &[f64], n: usize) -> Vec<Vec<f64>> {
    v.chunks(n).map(<[f64]>::to_vec).collect()
}

/// Median of a non-empty list (upper median for even lengths).
pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}
