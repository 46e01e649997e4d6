mod common;

use common::*;
use robust_sensing::model::pad_to_uniform;
use robust_sensing::solvers::{solve_l1, solve_p1, solve_p3};
use robust_sensing::{Config, Matrix, RngStream};

fn ragged(rng: &mut RngStream) -> Vec<(Matrix, Vec<f64>)> {
    [2usize, 3, 1, 3, 2, 3, 2]
        .iter()
        .map(|&h| (gaussian_matrix(h, 3, rng), gaussian_vec(h, rng)))
        .collect()
}

/// Direct `Σ‖b_i − A_i x‖` over the unpadded blocks.
fn ragged_objective(blocks: &[(Matrix, Vec<f64>)], x: &[f64]) -> f64 {
    blocks
        .iter()
        .map(|(a, b)| {
            let r: Vec<f64> = b.iter().zip(a.matvec(x)).map(|(bi, ax)| bi - ax).collect();
            norm(&r)
        })
        .sum()
}

#[test]
fn padding_preserves_the_sum_of_norms() {
    let mut rng = RngStream::new(10, 0);
    let blocks = ragged(&mut rng);
    let p = pad_to_uniform(blocks.clone()).unwrap();
    assert_eq!((p.m(), p.k()), (3, 7));
    for _ in 0..5 {
        let x = gaussian_vec(3, &mut rng);
        assert!((p.sum_of_norms(&x) - ragged_objective(&blocks, &x)).abs() < 1e-12);
    }
}

#[test]
fn padding_preserves_solver_outputs() {
    let mut rng = RngStream::new(11, 0);
    let blocks = ragged(&mut rng);
    let padded = pad_to_uniform(blocks.clone()).unwrap();
    let extra = pad_to_uniform(
        blocks
            .into_iter()
            .chain(std::iter::once((Matrix::zeros(5, 3), vec![0.0; 5])))
            .collect(),
    )
    .unwrap();
    let cfg = Config::default().with_lambda(0.5);
    let pairs = [
        (solve_p1(&padded, &cfg, None).unwrap(), solve_p1(&extra, &cfg, None).unwrap()),
        (solve_p3(&padded, &cfg).unwrap(), solve_p3(&extra, &cfg).unwrap()),
        (solve_l1(&padded, &cfg).unwrap(), solve_l1(&extra, &cfg).unwrap()),
    ];
    for (a, b) in &pairs {
        assert!(max_abs_diff(&a.x_hat, &b.x_hat) < 1e-6);
    }
}
