mod common;

use approx::assert_relative_eq;
use common::{grid_minimize, in_cone, rng, uniform_matrix, uniform_vector};
use dgl_core::qp::{kkt_residual, objective, project_damped_cone, solve, solve_active_set, QpOptions};
use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use rand::Rng;

fn random_instance(seed: u64, dim: usize) -> (DMatrix<f64>, DVector<f64>) {
    let mut r = rng(seed);
    let a = uniform_matrix(&mut r, dim, dim, -1.0, 1.0);
    let q = a.transpose() * &a + DMatrix::identity(dim, dim) * 0.5;
    let rv = uniform_vector(&mut r, dim, -1.0, 2.0);
    (q, rv)
}

#[test]
fn projection_matches_grid_oracle() {
    let mut r = rng(21);
    for &xi in &[1.0, 1.5, 2.0] {
        for dim in 1..=4 {
            for _ in 0..3 {
                let x = uniform_vector(&mut r, dim, -1.0, 2.0);
                let p = project_damped_cone(&x, xi);
                let dist = |y: &[f64]| y.iter().zip(x.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
                let (_, grid) = grid_minimize(dist, dim, xi, 3.0, 13, 12);
                let ours = dist(p.as_slice());
                assert!(ours <= grid + 1e-9, "xi={xi} x={x:?}: {ours} vs grid {grid}");
                assert!(grid - ours < 1e-6, "grid oracle did not approach projection");
            }
        }
    }
}

#[test]
fn projection_idempotent_and_optimal() {
    let mut r = rng(22);
    for trial in 0..1000 {
        let dim = 1 + trial % 8;
        let xi = 1.0 + r.random_range(0.0..2.0);
        let x = uniform_vector(&mut r, dim, -3.0, 3.0);
        let p = project_damped_cone(&x, xi);
        assert!(in_cone(p.as_slice(), xi, 1e-12));
        let pp = project_damped_cone(&p, xi);
        assert!((&pp - &p).amax() <= 1e-12);
        // Random feasible point built from the cone generators.
        let mut y = DVector::zeros(dim);
        for j in 0..dim {
            let d: f64 = r.random_range(0.0..1.0);
            for i in 0..=j {
                y[i] += d * xi.powi(-(i as i32));
            }
        }
        assert!((&p - &x).norm() <= (&y - &x).norm() + 1e-12);
    }
}

#[test]
fn projection_leaves_feasible_points() {
    let x = dvector![4.0, 2.0, 1.0, 0.0];
    assert_eq!(project_damped_cone(&x, 2.0), x);
}

#[test]
fn solver_matches_grid_minimum() {
    for seed in 0..20u64 {
        let dim = 1 + (seed as usize % 6);
        let (q, rv) = random_instance(100 + seed, dim);
        let opts = QpOptions::default();
        let sol = solve(&q, &rv, 1.0 + (seed % 3) as f64 * 0.5, &opts).unwrap();
        let xi = 1.0 + (seed % 3) as f64 * 0.5;
        let f = |x: &[f64]| objective(&q, &rv, &DVector::from_row_slice(x));
        let upper = 4.0 * rv.norm() + 1.0;
        let (_, grid) = grid_minimize(f, dim, xi, upper, 9, 20);
        assert!(sol.objective <= grid + 1e-5, "seed {seed}: {} vs {grid}", sol.objective);
        assert!(grid - sol.objective < 1e-4, "grid oracle stalled on seed {seed}");
        assert!(sol.kkt_residual < 1e-6);
        assert!(in_cone(sol.point.as_slice(), xi, 1e-8));
    }
}

#[test]
fn solvers_agree_and_beat_starting_points() {
    for seed in 0..20u64 {
        let dim = 2 + (seed as usize % 7);
        let (q, rv) = random_instance(200 + seed, dim);
        let xi = 1.0 + (seed % 4) as f64 * 0.4;
        let opts = QpOptions::default();
        let pg = solve(&q, &rv, xi, &opts).unwrap();
        let active = solve_active_set(&q, &rv, xi, &opts).unwrap();
        assert!((pg.objective - active.objective).abs() < 1e-8 * (1.0 + pg.objective.abs()));
        assert!(active.kkt_residual < 1e-6);
        assert_relative_eq!(
            kkt_residual(&q, &rv, xi, &active.point),
            active.kkt_residual,
            epsilon = 1e-15
        );
        let zero = project_damped_cone(&DVector::zeros(dim), xi);
        let at_r = project_damped_cone(&rv, xi);
        for start in [zero, at_r] {
            assert!(pg.objective <= objective(&q, &rv, &start) + 1e-12);
        }
    }
}

#[test]
fn pooled_example_objective() {
    let sol = solve(&DMatrix::identity(2, 2), &dvector![1.0, 2.0], 1.0, &QpOptions::default()).unwrap();
    assert_relative_eq!(sol.point, dvector![1.5, 1.5], epsilon = 1e-8);
    assert_relative_eq!(sol.objective, -4.5, epsilon = 1e-8);
}

#[test]
fn ill_conditioned_spread_is_solved_exactly() {
    // Rank-deficient Q whose optimum spans several orders of magnitude.
    let basis = dmatrix![1.0, 1e-3, 0.0; 0.0, 1e-3, 1e-3; 1.0, 0.0, 1e-3; 0.5, 1e-3, 0.0];
    let g = basis.transpose() * &basis;
    let q = g.component_mul(&g);
    let rv = dvector![2.0, 1e-6, 5e-7];
    let sol = solve_active_set(&q, &rv, 1.0, &QpOptions::default()).unwrap();
    assert!(sol.kkt_residual < 1e-6);
    let f = |x: &[f64]| objective(&q, &rv, &DVector::from_row_slice(x));
    assert!(f(sol.point.as_slice()) <= f(project_damped_cone(&rv, 1.0).as_slice()));
}
