//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use plugin_gp::spline::bspline_basis;
use plugin_gp::{Dataset, Kernel, KernelConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Mat = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>()).collect()
}

pub fn noisy_sine(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<f64>) {
    let x = uniform_points(rng, n);
    let y = x
        .iter()
        .map(|&v| (2.0 * std::f64::consts::PI * v).sin() + 0.3 * (rng.random::<f64>() - 0.5))
        .collect();
    (x, y)
}

/// Gaussian elimination with partial pivoting, one column per right-hand side.
pub fn solve(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let cols = b[0].len();
    let mut m: Mat = (0..n)
        .map(|i| a[i].iter().chain(b[i].iter()).copied().collect())
        .collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
            .unwrap();
        m.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = m[r][c] / m[c][c];
                if f != 0.0 {
                    for k in c..n + cols {
                        m[r][k] -= f * m[c][k];
                    }
                }
            }
        }
    }
    (0..n)
        .map(|i| (0..cols).map(|j| m[i][n + j] / m[i][i]).collect())
        .collect()
}

pub fn solve_vec(a: &Mat, b: &[f64]) -> Vec<f64> {
    let col: Mat = b.iter().map(|&v| vec![v]).collect();
    solve(a, &col).into_iter().map(|r| r[0]).collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let inner = b.len();
    (0..a.len())
        .map(|i| {
            (0..b[0].len())
                .map(|j| (0..inner).map(|k| a[i][k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

pub fn transpose(a: &Mat) -> Mat {
    (0..a[0].len())
        .map(|j| a.iter().map(|r| r[j]).collect())
        .collect()
}

pub fn matvec(a: &Mat, v: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn table(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Mat {
    (0..rows)
        .map(|i| (0..cols).map(|j| f(i, j)).collect())
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Leave-one-out mean squared error by refitting a linear smoother `n` times.
pub fn brute_force_loo(x: &[f64], y: &[f64], predict: impl Fn(&[f64], &[f64], f64) -> f64) -> f64 {
    let n = x.len();
    let mut total = 0.0;
    for i in 0..n {
        let xs: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| x[j]).collect();
        let ys: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| y[j]).collect();
        let r = y[i] - predict(&xs, &ys, x[i]);
        total += r * r;
    }
    total / n as f64
}

/// Scalar Gaussian log density of `y ~ N(0, cov)` through elimination.
pub fn gaussian_log_density(cov: &Mat, y: &[f64]) -> f64 {
    let n = y.len();
    let w = solve_vec(cov, y);
    let quad: f64 = y.iter().zip(&w).map(|(a, b)| a * b).sum();
    // log det from the same elimination, via LU pivots
    let mut m = cov.clone();
    let mut logdet = 0.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
            .unwrap();
        m.swap(c, p);
        logdet += m[c][c].abs().ln();
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    -0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + quad)
}

/// Central difference with one Richardson step, base step `h`.
pub fn richardson(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let central = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * central(h / 2.0) - central(h)) / 3.0
}

/// Textbook conditioning of `f^(k)` on `y` with prior covariance `s K`,
/// `s = sigma^2 / (n lambda)`, and noise covariance `sigma^2 I`.
pub fn textbook_posterior(
    kernel: &KernelConfig<f64>,
    data: &Dataset<f64>,
    lambda: f64,
    sigma2: f64,
    k: usize,
    grid: &[f64],
) -> (Vec<f64>, Mat) {
    let n = data.len();
    let s = sigma2 / (n as f64 * lambda);
    let kd = |a: usize, b: usize, x: f64, x2: f64| kernel.eval_deriv(a, b, x, x2).unwrap();
    let cov_y = table(n, n, |i, j| {
        s * kd(0, 0, data.x[i], data.x[j]) + if i == j { sigma2 } else { 0.0 }
    });
    let cross = table(n, grid.len(), |i, g| s * kd(0, k, data.x[i], grid[g]));
    let w = solve_vec(&cov_y, &data.y);
    let mean = (0..grid.len())
        .map(|g| (0..n).map(|i| cross[i][g] * w[i]).sum())
        .collect();
    let reduce = matmul(&transpose(&cross), &solve(&cov_y, &cross));
    let cov = table(grid.len(), grid.len(), |a, b| {
        s * kd(k, k, grid[a], grid[b]) - reduce[a][b]
    });
    (mean, cov)
}

/// GP leave-one-out by refitting on `n - 1` points with the same absolute
/// ridge `n lambda`.
pub fn gp_refit_loo(data: &Dataset<f64>, kernel: &KernelConfig<f64>, lambda: f64) -> f64 {
    let ridge = data.len() as f64 * lambda;
    brute_force_loo(&data.x, &data.y, |xs, ys, at| {
        let m = xs.len();
        let a = table(m, m, |i, j| {
            kernel.eval(xs[i], xs[j]) + if i == j { ridge } else { 0.0 }
        });
        let w = solve_vec(&a, ys);
        (0..m).map(|i| kernel.eval(at, xs[i]) * w[i]).sum()
    })
}

/// B-spline leave-one-out by refitting `beta = (B^T B + I)^{-1} B^T y`.
pub fn spline_refit_loo(data: &Dataset<f64>, n_basis: usize) -> f64 {
    brute_force_loo(&data.x, &data.y, |xs, ys, at| {
        let b: Mat = xs
            .iter()
            .map(|&x| bspline_basis(n_basis, x, 0).unwrap())
            .collect();
        let bt = transpose(&b);
        let mut a = matmul(&bt, &b);
        for (i, row) in a.iter_mut().enumerate() {
            row[i] += 1.0;
        }
        let beta = solve_vec(&a, &matvec(&bt, ys));
        bspline_basis(n_basis, at, 0)
            .unwrap()
            .iter()
            .zip(&beta)
            .map(|(u, v)| u * v)
            .sum()
    })
}
