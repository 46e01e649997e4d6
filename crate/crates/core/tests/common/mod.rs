#![allow(dead_code)]

use itertools::Itertools;
use robust_sensing::experiments::{generate_rs_instance, generate_rsn_instance};
use robust_sensing::linalg::{least_squares, DenseMatrix};
use robust_sensing::{Matrix, OutlierModel, Problem, RngStream, Truth};

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn gaussian_vec(len: usize, rng: &mut RngStream) -> Vec<f64> {
    (0..len).map(|_| rng.standard_normal()).collect()
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut RngStream) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.standard_normal())
}

/// Random problem with Gaussian `A` and `b`, no planted structure.
pub fn random_problem(n: usize, m: usize, k: usize, rng: &mut RngStream) -> Problem {
    let a = gaussian_matrix(k * m, n, rng);
    let b = gaussian_vec(k * m, rng);
    Problem::from_stacked(&a, &b, m).unwrap()
}

pub fn rs_instance(n: usize, m: usize, k: usize, s: usize, seed: u64, stream: u64) -> (Problem, Truth) {
    generate_rs_instance(n, m, k, s, &mut RngStream::new(seed, stream)).unwrap()
}

pub fn gaussian_outlier_instance(n: usize, m: usize, k: usize, s: usize, sigma: f64, seed: u64) -> (Problem, Truth) {
    generate_rsn_instance(
        n,
        m,
        k,
        s,
        sigma,
        OutlierModel::GaussianOutlier,
        None,
        &mut RngStream::new(seed, 0),
    )
    .unwrap()
}

/// Reorders sensor blocks so that new block `j` is old block `perm[j]`.
pub fn permute(problem: &Problem, perm: &[usize]) -> Problem {
    problem.subset(perm).unwrap()
}

/// Largest number of simultaneously satisfiable equations of `C x = d`, by checking the
/// exact solutions of every n-subset of equations plus random points.
pub fn mcle_optimum(c: &Matrix, d: &[f64], rng: &mut RngStream) -> usize {
    let (k, n) = c.shape();
    let count = |x: &[f64]| {
        (0..k)
            .filter(|&i| {
                let lhs: f64 = c.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
                (lhs - d[i]).abs() <= 1e-9 * (1.0 + d[i].abs())
            })
            .count()
    };
    let mut best = 0;
    for rows in (0..k).combinations(n.min(k)) {
        let sub = DenseMatrix::from_rows(&rows.iter().map(|&i| c.row(i).to_vec()).collect::<Vec<_>>()).unwrap();
        let rhs: Vec<f64> = rows.iter().map(|&i| d[i]).collect();
        let x = least_squares(&sub, &rhs).unwrap();
        best = best.max(count(&x));
    }
    for _ in 0..50 {
        best = best.max(count(&gaussian_vec(n, rng)));
    }
    best
}

/// Random MCLE instance with a planted group of consistent equations.
pub fn mcle_instance(seed: u64) -> (Matrix, Vec<f64>) {
    let mut rng = RngStream::new(seed, 9);
    let n = 1 + rng.below(3);
    let k = n + 1 + rng.below(6 - n);
    let c = gaussian_matrix(k, n, &mut rng);
    let x = gaussian_vec(n, &mut rng);
    let planted = rng.below(k + 1);
    let mut d = c.matvec(&x);
    for di in d.iter_mut().skip(planted) {
        *di = rng.standard_normal();
    }
    (c, d)
}
