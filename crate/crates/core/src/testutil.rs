//! Independent oracles for unit tests.

use rand::Rng;

use crate::ndcore::Matrix;
use crate::seed::rng_from_seed;

/// Gauss-Jordan inverse with partial pivoting.
pub fn dense_inverse(a: &Matrix) -> Matrix {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut r = a.row(i).to_vec();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
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
                let pivot = m[c].clone();
                m[r].iter_mut().zip(&pivot).for_each(|(v, pv)| *v -= f * pv);
            }
        }
    }
    Matrix::from_rows(&m.into_iter().map(|r| r[n..].to_vec()).collect::<Vec<_>>()).unwrap()
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64, scale: f64) -> Matrix {
    let mut rng = rng_from_seed(seed);
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-scale..scale)).collect()).unwrap()
}

pub fn random_vec(n: usize, seed: u64, scale: f64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}
