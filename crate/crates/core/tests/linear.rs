use std::f64::consts::PI;
use std::sync::Arc;

use pluri_core::{
    assemble_linearized, solve_with, upper_barrier, BoxGrid, HermitianMatrix, LinearSolverConfig, LinearStrategy, MatrixField, ScalarField,
};

/// Torsion function of the unit square (`Δw = −1`, `w = 0` on the boundary)
/// at its centre, from the double sine series.
fn membrane_centre() -> f64 {
    let mut sum = 0.0;
    for m in (1..400).step_by(2) {
        for n in (1..400).step_by(2) {
            let sign = if (m / 2 + n / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let (m, n) = (m as f64, n as f64);
            sum += sign * 16.0 / (PI.powi(4) * m * n * (m * m + n * n));
        }
    }
    sum
}

/// `(1/4)Δu = −1/4` on the unit square, i.e. the membrane problem, via the
/// linearized assembly with `C = [1]`.
fn membrane(resolution: usize, strategy: LinearStrategy) -> (f64, Arc<BoxGrid<f64>>, Vec<f64>) {
    let grid = Arc::new(BoxGrid::cube(1, 0.0, 1.0, resolution).unwrap());
    let one = HermitianMatrix::identity(1).unwrap();
    let coeffs = MatrixField::new(grid.interior_nodes().into_iter().map(|k| (k, one.clone())).collect());
    let rhs = ScalarField::from_fn(grid.clone(), |_| -0.25).unwrap();
    let system = assemble_linearized(&coeffs, &rhs, &grid).unwrap();
    let x = solve_with(&system, &LinearSolverConfig { strategy, ..Default::default() }).unwrap();
    let u = system.scatter(&x, &vec![0.0; grid.node_count()]);
    (u[grid.center()], grid, u)
}

#[test]
fn membrane_matches_series() {
    let oracle = membrane_centre();
    assert!((oracle - 0.07367).abs() < 1e-5);
    let errors: Vec<f64> = [17, 33, 65].into_iter().map(|r| (membrane(r, LinearStrategy::Auto).0 - oracle).abs()).collect();
    assert!(errors[2] < 5e-5, "{errors:?}");
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn direct_and_iterative_agree_on_membrane() {
    let (_, _, a) = membrane(33, LinearStrategy::Direct);
    let (_, _, b) = membrane(33, LinearStrategy::Iterative);
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-10));
}

#[test]
fn indefinite_coefficients_are_rejected() {
    let grid = Arc::new(BoxGrid::cube(2, 0.0, 1.0, 9).unwrap());
    let bad = HermitianMatrix::from_diagonal(&[1.0, -1.0]).unwrap();
    let coeffs = MatrixField::new(grid.interior_nodes().into_iter().map(|k| (k, bad.clone())).collect());
    let rhs = ScalarField::zeros(grid.clone());
    assert!(matches!(assemble_linearized(&coeffs, &rhs, &grid), Err(pluri_core::Error::IndefiniteCoefficients { .. })));
}

fn cube() -> Arc<BoxGrid<f64>> {
    Arc::new(BoxGrid::cube(2, -1.0, 1.0, 9).unwrap())
}

fn modulus_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[test]
fn upper_barrier_recovers_minus_modulus_squared() {
    // tr(I + i∂∂̄(−|z|²)) = 0 in C².
    let grid = cube();
    let phi = ScalarField::from_fn(grid.clone(), |x| -modulus_sq(x)).unwrap();
    let chi = HermitianMatrix::identity(2).unwrap();
    let v = upper_barrier(&chi, &chi, &phi).unwrap();
    for k in 0..grid.node_count() {
        assert!((v.values()[k] + modulus_sq(&grid.coords(k))).abs() < 1e-12);
    }
}

#[test]
fn upper_barrier_reproduces_pluriharmonic_data() {
    let grid = cube();
    let re_z1_cubed = |x: &[f64]| x[0].powi(3) - 3.0 * x[0] * x[1] * x[1] + 0.5 * (x[0] * x[2] + x[1] * x[3]);
    let phi = ScalarField::from_fn(grid.clone(), re_z1_cubed).unwrap();
    let zero = HermitianMatrix::zeros(2).unwrap();
    let v = upper_barrier(&zero, &HermitianMatrix::identity(2).unwrap(), &phi).unwrap();
    for k in 0..grid.node_count() {
        assert!((v.values()[k] - re_z1_cubed(&grid.coords(k))).abs() < 1e-12);
    }
}

#[test]
fn upper_barrier_converges_on_smooth_data() {
    // Re e^{z1} is pluriharmonic; the error drops at second order.
    let f = |x: &[f64]| x[0].exp() * x[1].cos();
    let errors: Vec<f64> = [9, 17]
        .into_iter()
        .map(|r| {
            let grid = Arc::new(BoxGrid::cube(2, -0.5, 0.5, r).unwrap());
            let phi = ScalarField::from_fn(grid.clone(), f).unwrap();
            let zero = HermitianMatrix::zeros(2).unwrap();
            let v = upper_barrier(&zero, &HermitianMatrix::identity(2).unwrap(), &phi).unwrap();
            (0..grid.node_count()).map(|k| (v.values()[k] - f(&grid.coords(k))).abs()).fold(0.0, f64::max)
        })
        .collect();
    let ratio = errors[0] / errors[1];
    assert!((3.0..5.0).contains(&ratio) && errors[1] < 1e-4, "{errors:?}");
}

#[test]
fn upper_barrier_is_linear_in_the_data_when_chi_vanishes() {
    let grid = cube();
    let zero = HermitianMatrix::zeros(2).unwrap();
    let omega = HermitianMatrix::from_real(2, &[2.0, 0.5, 0.5, 1.0]).unwrap();
    let a = |x: &[f64]| x[0] * x[0] * x[3] + x[2];
    let b = |x: &[f64]| (x[1] - x[2]).powi(2) * x[0];
    let solve = |f: &dyn Fn(&[f64]) -> f64| upper_barrier(&zero, &omega, &ScalarField::from_fn(grid.clone(), f).unwrap()).unwrap();
    let (va, vb) = (solve(&a), solve(&b));
    let vc = solve(&|x: &[f64]| a(x) - 2.0 * b(x));
    for k in 0..grid.node_count() {
        let expected = va.values()[k] - 2.0 * vb.values()[k];
        assert!((vc.values()[k] - expected).abs() < 1e-11);
    }
}

#[test]
fn upper_barrier_obeys_the_maximum_principle() {
    let grid = cube();
    let zero = HermitianMatrix::zeros(2).unwrap();
    let data = |x: &[f64]| (3.0 * x[0]).sin() + x[1] * x[2] * x[3] - (x[2] * 2.0).cos();
    let phi = ScalarField::from_fn(grid.clone(), data).unwrap();
    let v = upper_barrier(&zero, &HermitianMatrix::identity(2).unwrap(), &phi).unwrap();
    let boundary = grid.boundary_nodes();
    let lo = boundary.iter().map(|&k| phi.values()[k]).fold(f64::INFINITY, f64::min);
    let hi = boundary.iter().map(|&k| phi.values()[k]).fold(f64::NEG_INFINITY, f64::max);
    assert!(v.values().iter().all(|&x| x >= lo - 1e-12 && x <= hi + 1e-12));
}
