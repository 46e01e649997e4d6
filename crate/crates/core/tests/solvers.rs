mod common;

use common::*;
use proptest::prelude::*;
use robust_sensing::linalg::{toeplitz, DenseMatrix};
use robust_sensing::solvers::*;
use robust_sensing::{Config, Matrix, Problem, RngStream};

fn bst_objective(v: &[f64], u: &[f64], lam: f64) -> f64 {
    let d: Vec<f64> = v.iter().zip(u).map(|(a, b)| a - b).collect();
    0.5 * norm(&d).powi(2) + lam * norm(u)
}

#[test]
fn block_soft_threshold_examples() {
    assert_eq!(block_soft_threshold(&[3.0, 4.0], 5.0), vec![0.0, 0.0]);
    assert_eq!(block_soft_threshold(&[3.0, 4.0], 0.0), vec![3.0, 4.0]);
    let u = block_soft_threshold(&[3.0, 4.0], 2.5);
    assert!(max_abs_diff(&u, &[1.5, 2.0]) < 1e-15);
    // Minimizing over the ray t·v/‖v‖ by golden section gives t = ‖v‖ − λ = 2.5.
    let (mut lo, mut hi) = (0.0f64, 5.0f64);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let f = |t: f64| bst_objective(&[3.0, 4.0], &[0.6 * t, 0.8 * t], 2.5);
    for _ in 0..200 {
        let a = hi - phi * (hi - lo);
        let b = lo + phi * (hi - lo);
        if f(a) < f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    assert!((0.5 * (lo + hi) - norm(&u)).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn block_soft_threshold_is_the_prox(
        v in prop::collection::vec(-10.0f64..10.0, 1..6),
        lam in 0.0f64..8.0,
        dirs in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 6), 20),
    ) {
        let u = block_soft_threshold(&v, lam);
        let best = bst_objective(&v, &u, lam);
        let nv = norm(&v);
        if nv > 0.0 {
            for j in 0..=400 {
                let t = 1.2 * nv * j as f64 / 400.0;
                let cand: Vec<f64> = v.iter().map(|x| x / nv * t).collect();
                prop_assert!(best <= bst_objective(&v, &cand, lam) + 1e-10);
            }
        }
        for d in &dirs {
            let cand: Vec<f64> = u.iter().zip(d).map(|(a, b)| a + 0.1 * b).collect();
            prop_assert!(best <= bst_objective(&v, &cand, lam) + 1e-10);
        }
    }

    #[test]
    fn vector_huber_is_continuous_and_below_quadratic(r in 0.0f64..10.0, lam in 0.01f64..5.0) {
        let h = vector_huber_cost(&[r], lam);
        prop_assert!(h <= 0.5 * r * r + 1e-12);
        prop_assert!(h >= 0.0);
        let at = vector_huber_cost(&[lam], lam);
        prop_assert!((at - 0.5 * lam * lam).abs() < 1e-12);
    }
}

#[test]
fn vector_huber_examples() {
    assert_eq!(vector_huber_cost(&[5.0], 2.0), 8.0);
    assert_eq!(vector_huber_cost(&[0.0, 0.0], 2.0), 0.0);
}

#[test]
fn ls_is_exact_on_consistent_data() {
    let (p, truth) = rs_instance(6, 3, 5, 5, 11, 0);
    let out = solve_ls(&p).unwrap();
    assert!(max_abs_diff(&out.x_hat, &truth.x0) < 1e-10);
    assert!(out.residual_norms.iter().all(|&r| r <= 1e-10));
    assert!(out.u_hat.is_none());
}

#[test]
fn ls_on_identity_returns_data() {
    let b = vec![1.0, -2.0, 0.5];
    let p = Problem::from_stacked(&Matrix::identity(3), &b, 3).unwrap();
    assert!(max_abs_diff(&solve_ls(&p).unwrap().x_hat, &b) < 1e-15);
}

#[test]
fn ls_cost_is_minimal_among_estimators() {
    let (p, _) = rs_instance(5, 2, 8, 5, 3, 0);
    let ls = solve_ls(&p).unwrap();
    let p1 = solve_p1(&p, &Config::default(), None).unwrap();
    assert!(ls_cost(&p, &ls.x_hat) <= ls_cost(&p, &p1.x_hat) + 1e-12);
}

#[test]
fn ls_rejects_rank_deficient_data() {
    let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0], vec![1.0, 2.0]]).unwrap();
    let p = Problem::from_stacked(&a, &[1.0, 2.0, 3.0, 4.0], 2).unwrap();
    assert!(solve_ls(&p).is_err());
}

#[test]
fn p1_is_exact_when_every_sensor_is_consistent() {
    let (p, truth) = rs_instance(8, 3, 6, 6, 21, 0);
    let out = solve_p1(&p, &Config::default(), None).unwrap();
    assert!(max_abs_diff(&out.x_hat, &truth.x0) < 1e-6);
    assert!(p.sum_of_norms(&out.x_hat) < 1e-6);
}

/// Coarse-to-fine grid search of a function of two variables.
fn grid_minimize(f: impl Fn(f64, f64) -> f64, center: (f64, f64), mut radius: f64) -> f64 {
    let (mut cx, mut cy) = center;
    let mut best = f(cx, cy);
    for _ in 0..60 {
        let (mut bx, mut by) = (cx, cy);
        for i in -20..=20 {
            for j in -20..=20 {
                let (x, y) = (cx + radius * i as f64 / 20.0, cy + radius * j as f64 / 20.0);
                let v = f(x, y);
                if v < best {
                    best = v;
                    bx = x;
                    by = y;
                }
            }
        }
        cx = bx;
        cy = by;
        radius *= 0.5;
    }
    best
}

#[test]
fn p1_matches_grid_search_on_tiny_instances() {
    for seed in 0..5 {
        let mut rng = RngStream::new(100 + seed, 0);
        let p = random_problem(2, 2, 3, &mut rng);
        let out = solve_p1(&p, &Config::default(), None).unwrap();
        let ls = solve_ls(&p).unwrap().x_hat;
        let oracle = grid_minimize(|x, y| p.sum_of_norms(&[x, y]), (ls[0], ls[1]), 10.0);
        let got = p.sum_of_norms(&out.x_hat);
        assert!((got - oracle).abs() < 1e-5, "seed {seed}: {got} vs {oracle}");
    }
}

#[test]
fn p1_subgradient_certificate() {
    let mut rng = RngStream::new(5, 1);
    let p = random_problem(4, 3, 7, &mut rng);
    let w: Vec<f64> = (0..7).map(|i| 0.5 + 0.25 * i as f64).collect();
    let weights = BlockWeights::new(w.clone()).unwrap();
    let out = solve_p1(&p, &Config::default(), Some(&weights)).unwrap();
    assert!(out.converged);
    let mut g = vec![0.0; 4];
    for (i, blk) in p.blocks().iter().enumerate() {
        let r = blk.residual(&out.x_hat);
        let nr = norm(&r);
        assert!(nr > 1e-6, "generic data should leave every residual nonzero");
        let atr = blk.a.tr_matvec(&r);
        for (gj, v) in g.iter_mut().zip(atr) {
            *gj += w[i] * v / nr;
        }
    }
    assert!(g.iter().all(|v| v.abs() < 1e-5), "{g:?}");
}

#[test]
fn p1_and_l1_agree_for_scalar_sensors() {
    let mut rng = RngStream::new(8, 0);
    let p = random_problem(3, 1, 12, &mut rng);
    let cfg = Config::default();
    let a = solve_p1(&p, &cfg, None).unwrap();
    let b = solve_l1(&p, &cfg).unwrap();
    assert!((p.sum_of_norms(&a.x_hat) - p.sum_of_norms(&b.x_hat)).abs() < 1e-6);
}

#[test]
fn p1_weights_are_validated() {
    let mut rng = RngStream::new(8, 1);
    let p = random_problem(3, 2, 5, &mut rng);
    assert!(BlockWeights::new(vec![1.0, -1.0]).is_err());
    let short = BlockWeights::new(vec![1.0; 4]).unwrap();
    assert!(solve_p1(&p, &Config::default(), Some(&short)).is_err());
}

#[test]
fn p2_with_zero_outer_iterations_is_p1() {
    let (p, _) = rs_instance(6, 2, 10, 6, 4, 0);
    let cfg = Config::default();
    assert_eq!(solve_p2(&p, &cfg, 0).unwrap(), solve_p1(&p, &cfg, None).unwrap());
}

#[test]
fn p2_keeps_a_recovered_solution_fixed() {
    let (p, truth) = rs_instance(6, 3, 8, 7, 5, 0);
    let cfg = Config::default();
    let one = solve_p2(&p, &cfg, 1).unwrap();
    assert!(max_abs_diff(&one.x_hat, &truth.x0) < 1e-8);
    let more = solve_p2(&p, &cfg, 4).unwrap();
    assert!(max_abs_diff(&more.x_hat, &one.x_hat) <= 1e-6 * norm(&one.x_hat));
}

#[test]
fn p2_log_surrogate_does_not_increase() {
    for seed in 0..4 {
        let (p, _) = rs_instance(10, 3, 10, 6, 30 + seed, 0);
        let out = solve_p2(&p, &Config::default(), 3).unwrap();
        for w in out.cost_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-6, "seed {seed}: {:?}", out.cost_trace);
        }
    }
}

fn assert_p3_kkt(p: &Problem, x: &[f64], u: &[Vec<f64>], lambda: f64, tol: f64) {
    let mut g = vec![0.0; p.n()];
    for (blk, ui) in p.blocks().iter().zip(u) {
        let r = blk.residual(x);
        let e: Vec<f64> = r.iter().zip(ui).map(|(a, b)| a - b).collect();
        for (gj, v) in g.iter_mut().zip(blk.a.tr_matvec(&e)) {
            *gj += v;
        }
        if ui.iter().all(|&v| v == 0.0) {
            assert!(norm(&r) <= lambda * (1.0 + tol), "zero block with ‖r‖ = {} > λ", norm(&r));
        } else {
            let want = block_soft_threshold(&r, lambda);
            assert!(max_abs_diff(ui, &want) <= tol * (1.0 + norm(&r)), "{ui:?} vs {want:?}");
        }
    }
    assert!(g.iter().all(|v| v.abs() < 1e-8), "stationarity in x: {g:?}");
}

#[test]
fn p3_satisfies_kkt_and_huber_identity() {
    for seed in 0..5 {
        let (p, _) = gaussian_outlier_instance(20, 4, 16, 10, 0.3, seed);
        let lambda = 1.34 * 0.3 * 2.0;
        let out = solve_p3(&p, &Config::default().with_lambda(lambda)).unwrap();
        assert!(out.converged);
        let u = out.u_hat.as_ref().unwrap();
        assert_p3_kkt(&p, &out.x_hat, u, lambda, 1e-4);
        let cost = p3_cost(&p, &out.x_hat, u, lambda);
        let huber = vector_huber_cost(&out.residual_norms, lambda);
        assert!((cost - huber).abs() < 1e-6, "{cost} vs {huber}");
        for w in out.cost_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }
}

#[test]
fn p3_with_large_lambda_is_ls() {
    let (p, _) = gaussian_outlier_instance(10, 3, 8, 5, 0.1, 3);
    let ls = solve_ls(&p).unwrap();
    let lambda = ls.residual_norms.iter().cloned().fold(0.0, f64::max) * 1.01;
    let out = solve_p3(&p, &Config::default().with_lambda(lambda)).unwrap();
    assert!(out.outlier_support().unwrap().is_empty());
    assert!(max_abs_diff(&out.x_hat, &ls.x_hat) < 1e-12);
    assert!(solve_p3(&p, &Config::default().with_lambda(0.0)).is_err());
}

#[test]
fn p3_with_tiny_lambda_approaches_p1() {
    let (p, _) = gaussian_outlier_instance(6, 2, 8, 5, 0.1, 9);
    // Each sweep moves x by O(λ), so tiny penalties are reached along a warm-started path.
    let grid: Vec<f64> = (0..=50).map(|j| 10f64.powf(-1.0 - 5.0 * j as f64 / 50.0)).collect();
    let cfg = Config {
        max_iters: 200_000,
        epsilon: 1e-10,
        ..Config::default()
    };
    let path = solve_p3_path(&p, &grid, &cfg).unwrap();
    let (out, lambda) = (path.last().unwrap(), grid[50]);
    let p1 = solve_p1(&p, &Config::default(), None).unwrap();
    let scaled = p3_cost(&p, &out.x_hat, out.u_hat.as_ref().unwrap(), lambda) / lambda;
    let opt = p.sum_of_norms(&p1.x_hat);
    assert!((scaled - opt).abs() < 1e-3 * opt.max(1.0), "{scaled} vs {opt}");
}

#[test]
fn p3_path_warm_starts_and_shrinks_support() {
    let (p, _) = gaussian_outlier_instance(20, 4, 16, 8, 0.3, 12);
    let grid: Vec<f64> = (0..8).map(|j| 4.0 * 0.7f64.powi(j)).collect();
    let path = solve_p3_path(&p, &grid, &Config::default()).unwrap();
    assert_eq!(path.len(), grid.len());
    let mut prev = 0;
    for (out, &lam) in path.iter().zip(&grid) {
        assert_p3_kkt(&p, &out.x_hat, out.u_hat.as_ref().unwrap(), lam, 1e-4);
        let support = out.outlier_support().unwrap().len();
        assert!(support >= prev);
        prev = support;
    }
    let single = solve_p3_path(&p, &grid[..1], &Config::default()).unwrap();
    assert_eq!(single[0], solve_p3(&p, &Config::default().with_lambda(grid[0])).unwrap());
    assert!(solve_p3_path(&p, &[1.0, 2.0], &Config::default()).is_err());
    assert!(solve_p3_path(&p, &[], &Config::default()).is_err());
}

#[test]
fn p4_examples() {
    let (p, _) = gaussian_outlier_instance(20, 4, 16, 10, 0.3, 4);
    let cfg = Config::default().with_lambda(1.34 * 0.3 * 2.0);
    assert_eq!(solve_p4(&p, &cfg, 0).unwrap(), solve_p3(&p, &cfg).unwrap());
    let p3 = solve_p3(&p, &cfg).unwrap();
    let p4 = solve_p4(&p, &cfg, 3).unwrap();
    let start = p4_cost(&p, &p3.x_hat, p3.u_hat.as_ref().unwrap(), cfg.lambda, cfg.delta);
    let end = p4_cost(&p, &p4.x_hat, p4.u_hat.as_ref().unwrap(), cfg.lambda, cfg.delta);
    assert!(end <= start + 1e-9);
    for w in p4.cost_trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "{:?}", p4.cost_trace);
    }
}

#[test]
fn huber_cost_matches_scalar_rho() {
    let (p, _) = gaussian_outlier_instance(10, 4, 8, 5, 0.3, 6);
    let tau = 0.4;
    let out = solve_huber_scalar(&p, tau, &Config::default()).unwrap();
    let scalar = p.to_scalar_blocks();
    let u: Vec<Vec<f64>> = out.u_hat.as_ref().unwrap().concat().into_iter().map(|v| vec![v]).collect();
    let direct: f64 = scalar
        .blocks()
        .iter()
        .map(|blk| huber_rho(blk.residual(&out.x_hat)[0], tau))
        .sum();
    assert!((p3_cost(&scalar, &out.x_hat, &u, tau) - direct).abs() < 1e-8);
    assert_eq!(out.u_hat.as_ref().unwrap().len(), p.k());
}

#[test]
fn huber_is_close_to_ls_without_outliers() {
    let mut worse = 0;
    for t in 0..100 {
        let mut rng = RngStream::new(77, t);
        let a = gaussian_matrix(40, 5, &mut rng);
        let x0 = gaussian_vec(5, &mut rng);
        let mut b = a.matvec(&x0);
        for bi in &mut b {
            *bi += 0.1 * rng.standard_normal();
        }
        let p = Problem::from_stacked(&a, &b, 4).unwrap();
        let h = solve_huber_scalar(&p, 0.134, &Config::default()).unwrap();
        let l = solve_ls(&p).unwrap();
        if norm(&sub(&h.x_hat, &x0)) > 2.0 * norm(&sub(&l.x_hat, &x0)) {
            worse += 1;
        }
    }
    assert!(worse <= 5, "{worse} of 100 trials");
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[test]
fn colored_with_scaled_identity_reduces_to_rescaled_p3() {
    let sigma = 0.5;
    let (p, _) = gaussian_outlier_instance(10, 3, 8, 5, sigma, 2);
    let cov = Matrix::identity(24).scaled(sigma * sigma);
    let lambda = 0.8;
    let colored = solve_p3_colored(&p, &cov, &Config::default().with_lambda(lambda)).unwrap();
    // Whitening divides (b, A) by σ: the colored cost at (x, u) is the plain cost of the
    // scaled problem at (x, u/σ) with penalty λσ, divided by σ² overall.
    let scaled = Problem::from_stacked(&p.stacked_matrix().scaled(1.0 / sigma), &scale(&p.stacked_data(), 1.0 / sigma), 3).unwrap();
    let cfg = Config {
        epsilon: 1e-12,
        max_iters: 100_000,
        ..Config::default().with_lambda(lambda * sigma)
    };
    let plain = solve_p3(&scaled, &cfg).unwrap();
    assert!(max_abs_diff(&colored.x_hat, &plain.x_hat) < 1e-6);
    let u_plain: Vec<f64> = scale(&plain.u_hat.unwrap().concat(), sigma);
    assert!(max_abs_diff(&colored.u_hat.unwrap().concat(), &u_plain) < 1e-6);
}

fn scale(v: &[f64], a: f64) -> Vec<f64> {
    v.iter().map(|x| a * x).collect()
}

fn toeplitz_cov(len: usize, sigma: f64) -> Matrix {
    let col: Vec<f64> = (0..len).map(|j| 0.9f64.powi(j as i32)).collect();
    toeplitz(&col).scaled(sigma * sigma)
}

#[test]
fn colored_solvers_descend_and_are_stationary() {
    let sigma = 0.3;
    let cov = toeplitz_cov(64, sigma);
    let mut rng = RngStream::new(4, 0);
    let (p, _) = robust_sensing::experiments::generate_rsn_instance(
        20,
        4,
        16,
        12,
        sigma,
        robust_sensing::OutlierModel::GaussianOutlier,
        Some(&cov),
        &mut rng,
    )
    .unwrap();
    let cfg = Config::default().with_lambda(1.34 * 2.0 / sigma);
    let out = solve_p3_colored(&p, &cov, &cfg).unwrap();
    for w in out.cost_trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-9);
    }
    // Stationarity in x: A′ᵀ(b′ − A′x̂ − W û) = AᵀΣ⁻¹(b − Ax̂ − û) = 0.
    let u = out.u_hat.as_ref().unwrap().concat();
    let resid: Vec<f64> = sub(&sub(&p.stacked_data(), &p.stacked_matrix().matvec(&out.x_hat)), &u);
    let w = robust_sensing::linalg::least_squares(&cov, &resid).unwrap();
    let g = p.stacked_matrix().tr_matvec(&w);
    assert!(g.iter().all(|v| v.abs() < 1e-6), "{g:?}");

    let p4 = solve_p4_colored(&p, &cov, &cfg, 2).unwrap();
    for w in p4.cost_trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "{:?}", p4.cost_trace);
    }
    assert_eq!(solve_p4_colored(&p, &cov, &cfg, 0).unwrap(), out);
}

#[test]
fn colored_rejects_bad_covariance() {
    let (p, _) = gaussian_outlier_instance(4, 2, 4, 3, 0.1, 1);
    let not_spd = Matrix::from_diagonal(&[1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, -1.0]);
    assert!(solve_p3_colored(&p, &not_spd, &Config::default()).is_err());
    assert!(solve_p3_colored(&p, &Matrix::identity(5), &Config::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solvers_are_permutation_equivariant(seed in 0u64..1000, rot in 1usize..7) {
        let (p, truth) = gaussian_outlier_instance(6, 2, 8, 6, 0.05, seed);
        let perm: Vec<usize> = (0..8).map(|i| (i + rot) % 8).collect();
        let q = permute(&p, &perm);
        let cfg = Config::default().with_lambda(0.2);
        let pairs = [
            (solve_ls(&p).unwrap(), solve_ls(&q).unwrap()),
            (solve_p1(&p, &cfg, None).unwrap(), solve_p1(&q, &cfg, None).unwrap()),
            (solve_p2(&p, &cfg, 1).unwrap(), solve_p2(&q, &cfg, 1).unwrap()),
            (solve_p3(&p, &cfg).unwrap(), solve_p3(&q, &cfg).unwrap()),
            (solve_p4(&p, &cfg, 1).unwrap(), solve_p4(&q, &cfg, 1).unwrap()),
            (solve_huber_scalar(&p, 0.1, &cfg).unwrap(), solve_huber_scalar(&q, 0.1, &cfg).unwrap()),
        ];
        let _ = truth;
        for (a, b) in &pairs {
            prop_assert!(max_abs_diff(&a.x_hat, &b.x_hat) < 1e-5);
            let permuted: Vec<f64> = perm.iter().map(|&i| a.residual_norms[i]).collect();
            prop_assert!(max_abs_diff(&permuted, &b.residual_norms) < 1e-5);
            if let (Some(ua), Some(ub)) = (&a.u_hat, &b.u_hat) {
                for (j, &i) in perm.iter().enumerate() {
                    prop_assert!(max_abs_diff(&ua[i], &ub[j]) < 1e-5);
                }
            }
        }
    }

    #[test]
    fn p3_identity_holds_on_random_data(seed in 0u64..10_000, lambda in 0.05f64..3.0) {
        let mut rng = RngStream::new(seed, 3);
        let p = random_problem(5, 3, 7, &mut rng);
        let out = solve_p3(&p, &Config::default().with_lambda(lambda)).unwrap();
        let cost = p3_cost(&p, &out.x_hat, out.u_hat.as_ref().unwrap(), lambda);
        prop_assert!((cost - vector_huber_cost(&out.residual_norms, lambda)).abs() < 1e-6);
    }
}

#[test]
fn f32_solvers_run() {
    let (p, truth) = rs_instance(6, 3, 6, 6, 2, 0);
    let p32 = p.cast::<f32>();
    let out = solve_p3(&p32, &robust_sensing::Config32::default().with_lambda(0.1)).unwrap();
    let x: Vec<f64> = out.x_hat.iter().map(|&v| v as f64).collect();
    assert!(max_abs_diff(&x, &truth.x0) < 1e-4);
}
