#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

pub fn uniform_vector(rng: &mut ChaCha8Rng, len: usize, lo: f64, hi: f64) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.random_range(lo..hi))
}

/// Laplacian `D − W` built with explicit loops, independent of the library.
pub fn brute_laplacian(points: &DMatrix<f64>, sigma: f64) -> DMatrix<f64> {
    let n = points.ncols();
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let mut d2 = 0.0;
                for k in 0..points.nrows() {
                    let diff = points[(k, i)] - points[(k, j)];
                    d2 += diff * diff;
                }
                w[(i, j)] = (-d2 / (2.0 * sigma * sigma)).exp();
            }
        }
    }
    let mut l = -w.clone();
    for i in 0..n {
        l[(i, i)] = w.row(i).sum();
    }
    l
}

pub fn in_cone(x: &[f64], damping: f64, slack: f64) -> bool {
    x.iter().all(|v| *v >= -slack) && x.windows(2).all(|w| w[0] >= damping * w[1] - slack)
}

/// Refining grid search over the cone. Points are parametrized as
/// `λ = Σ_j d_j g_j` with `d ≥ 0` and `(g_j)_i = ξ^{-i}` for `i ≤ j`, so the
/// search box lives in the nonnegative orthant of `d`. Each level samples
/// `points` values per axis, then shrinks the box around the incumbent.
pub fn grid_minimize(
    f: impl Fn(&[f64]) -> f64,
    dim: usize,
    damping: f64,
    upper: f64,
    points: usize,
    levels: usize,
) -> (Vec<f64>, f64) {
    let mut lo = vec![0.0; dim];
    let mut hi = vec![upper; dim];
    let mut best = vec![0.0; dim];
    let mut best_val = f(&best);
    let mut idx = vec![0usize; dim];
    let mut d = vec![0.0; dim];
    let mut x = vec![0.0; dim];
    let to_lambda = |d: &[f64], x: &mut [f64]| {
        let mut tail = 0.0;
        for i in (0..dim).rev() {
            tail += d[i];
            x[i] = tail * damping.powi(-(i as i32));
        }
    };
    for _ in 0..levels {
        idx.iter_mut().for_each(|v| *v = 0);
        'outer: loop {
            for k in 0..dim {
                d[k] = lo[k] + (hi[k] - lo[k]) * idx[k] as f64 / (points - 1) as f64;
            }
            to_lambda(&d, &mut x);
            let v = f(&x);
            if v < best_val {
                best_val = v;
                best.copy_from_slice(&d);
            }
            let mut k = 0;
            loop {
                if k == dim {
                    break 'outer;
                }
                idx[k] += 1;
                if idx[k] < points {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
        for k in 0..dim {
            let half = (hi[k] - lo[k]) / (points - 1) as f64 * 1.5;
            lo[k] = (best[k] - half).max(0.0);
            hi[k] = best[k] + half;
        }
    }
    to_lambda(&best, &mut x);
    (x, best_val)
}

pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    let sym = (a + a.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}
