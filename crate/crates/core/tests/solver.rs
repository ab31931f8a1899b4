use std::sync::Arc;

use pluri_core::{
    boundary_trace_check, c2_ratio_monitor, continuity_solve, level_summary, manufactured_problem, radial_boundary_trace, radial_eigenvalues,
    sandwich_check, tangential_trace, upper_barrier_on, barrier_check, BarrierParams, BoxGrid, BoxScheme, ContinuationConfig, DiscreteProblem,
    Discretization, Error, FnSource, Geometry, HermitianMatrix, LinearSolverConfig, Monomial, OperatorParams, ProblemSpec, RadialGrid,
    RadialScheme, RhsSource, ScalarFn,
};

fn radial_spec(rhs: RhsSource<f64>, subsolution: FnSource<f64>, points: usize) -> ProblemSpec<f64> {
    ProblemSpec {
        n: 3,
        p: 2,
        geometry: Geometry::Radial { radius: 1.0, points },
        chi: HermitianMatrix::identity(3).unwrap(),
        omega: HermitianMatrix::identity(3).unwrap(),
        rhs,
        boundary: FnSource::FromSolution,
        subsolution,
        solution: Some(ScalarFn::RadialPower { power: 2, scale: 1.0 }),
        initial: None,
    }
}

/// `ψ = (2+2s)(2+3s)²`, the right-hand side of `s²/2` with `χ = I` in `C³`.
fn radial_psi(scale: f64) -> RhsSource<f64> {
    RhsSource::Function(ScalarFn::RadialPoly([8.0, 32.0, 42.0, 18.0].iter().map(|c| c * scale).collect()))
}

/// `s²/2 + κ(s − 1)`: matches the data at `s = 1`, every eigenvalue larger by `κ`.
fn strict_sub(kappa: f64) -> FnSource<f64> {
    FnSource::Function(ScalarFn::RadialPoly(vec![-kappa, kappa, 0.5]))
}

fn solve(problem: &DiscreteProblem<f64>) -> Vec<f64> {
    continuity_solve(problem, &ContinuationConfig::for_problem(problem)).unwrap().u().to_vec()
}

#[test]
fn strict_radial_subsolution_reaches_the_exact_solution() {
    let problem = DiscreteProblem::build(&radial_spec(radial_psi(1.0), strict_sub(0.5), 801)).unwrap();
    let report = problem.verify_subsolution().unwrap();
    assert!(report.worst_shortfall < 0.0);
    let out = continuity_solve(&problem, &ContinuationConfig::for_problem(&problem)).unwrap();
    let s = match problem.scheme() {
        pluri_core::Scheme::Radial(r) => r.grid().s().to_vec(),
        _ => unreachable!(),
    };
    for (k, &sk) in s.iter().enumerate() {
        assert!((out.u()[k] - sk * sk / 2.0).abs() < 1e-6);
        assert!(out.u()[k] >= problem.subsolution()[k] - 1e-12);
    }
    assert!(out.path.iter().filter(|p| p.accepted).all(|p| p.min_margin > 0.0));
    assert!(out.path.iter().filter(|p| p.accepted).count() >= 2);
}

#[test]
fn solution_decreases_as_psi_grows() {
    let small = DiscreteProblem::build(&radial_spec(radial_psi(0.8), strict_sub(0.5), 401)).unwrap();
    let large = DiscreteProblem::build(&radial_spec(radial_psi(1.0), strict_sub(0.5), 401)).unwrap();
    let (us, ul) = (solve(&small), solve(&large));
    assert!(us.iter().zip(&ul).all(|(a, b)| a >= b));
    assert!(us[0] - ul[0] > 1e-3);
}

#[test]
fn trace_case_agrees_with_the_upper_barrier() {
    // M_2 on C² is the trace: tr(I + i∂∂̄u) = 1 is the barrier equation with χ = I/2.
    let phi = ScalarFn::Polynomial(vec![
        Monomial { coef: -0.5, exponents: vec![2, 0, 0, 0] },
        Monomial { coef: -0.5, exponents: vec![0, 2, 0, 0] },
        Monomial { coef: -0.5, exponents: vec![0, 0, 2, 0] },
        Monomial { coef: -0.5, exponents: vec![0, 0, 0, 2] },
        Monomial { coef: 0.1, exponents: vec![4, 0, 0, 0] },
        Monomial { coef: 0.2, exponents: vec![1, 0, 1, 1] },
    ]);
    let spec = ProblemSpec {
        n: 2,
        p: 2,
        geometry: Geometry::Box { lower: vec![-0.5; 4], upper: vec![0.5; 4], resolution: 9 },
        chi: HermitianMatrix::identity(2).unwrap(),
        omega: HermitianMatrix::identity(2).unwrap(),
        rhs: RhsSource::Function(ScalarFn::Constant(1.0)),
        boundary: FnSource::Function(phi.clone()),
        subsolution: FnSource::Function(phi),
        solution: None,
        initial: None,
    };
    let problem = DiscreteProblem::build(&spec).unwrap();
    let u = solve(&problem);
    let grid = match problem.scheme() {
        pluri_core::Scheme::Box(b) => b.grid().clone(),
        _ => unreachable!(),
    };
    let half = HermitianMatrix::scaled_identity(2, 0.5).unwrap();
    let scheme = BoxScheme::new(grid, half, HermitianMatrix::identity(2).unwrap(), OperatorParams::new(2, 2).unwrap()).unwrap();
    let v = upper_barrier_on(&scheme, problem.boundary(), &LinearSolverConfig::default()).unwrap();
    assert!(u.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-11));
}

#[test]
fn radial_and_box_schemes_agree() {
    // s²/2 with χ = 0 in C²: eigenvalues s and 2s.
    let quartic = ScalarFn::RadialPower { power: 2, scale: 1.0 };
    let params = OperatorParams::new(2, 1).unwrap();
    let radial = RadialScheme::new(RadialGrid::new(1.0, 401).unwrap(), 0.0, params.clone());
    let s: Vec<f64> = radial.grid().s().to_vec();
    let u_radial: Vec<f64> = s.iter().map(|s| s * s / 2.0).collect();
    let grid = Arc::new(BoxGrid::cube(2, -1.0, 1.0, 17).unwrap());
    let boxed = BoxScheme::new(grid.clone(), HermitianMatrix::zeros(2).unwrap(), HermitianMatrix::identity(2).unwrap(), params).unwrap();
    let u_box: Vec<f64> = (0..grid.node_count()).map(|k| quartic.value(&grid.coords(k))).collect();
    let node = grid.node_id(&[12, 8, 8, 8]);
    let r = radial.spectrum(&u_radial, 100);
    let b = boxed.spectrum(&u_box, node);
    let exact = radial_eigenvalues(0.25, 1.0, 0.25, 2, 0.0);
    for ((x, y), e) in r.values().iter().zip(b.values()).zip(exact.values()) {
        assert!((x - e).abs() < 1e-12);
        assert!((y - e).abs() < 0.02, "box {y} vs exact {e}");
    }
}

#[test]
fn second_order_ratios_are_stable_under_refinement() {
    let summaries: Vec<_> = [201, 401, 801]
        .into_iter()
        .map(|points| {
            let problem = DiscreteProblem::build(&radial_spec(radial_psi(1.0), FnSource::FromSolution, points)).unwrap();
            level_summary(&problem, problem.exact().unwrap())
        })
        .collect();
    for s in &summaries {
        // sup|∂∂̄u| = 2 at s = 1; K = 4·s·U'² + 1 = 5 there.
        assert!((s.sup_hessian - 2.0).abs() < 1e-6);
        assert!((s.k - 5.0).abs() < 1e-6);
        assert!((s.interior_ratio() - 2.0 / 7.0).abs() < 1e-6);
    }
    let report = c2_ratio_monitor(summaries).unwrap();
    assert!(report.interior_variation < 1e-5);
    assert!(matches!(c2_ratio_monitor(report.levels[..1].to_vec()), Err(Error::InvalidField { .. })));
}

fn quadratic_box(lower: f64, upper: f64, resolution: usize) -> DiscreteProblem<f64> {
    let spec = manufactured_problem(
        ScalarFn::Quadratic(1.0),
        HermitianMatrix::zeros(2).unwrap(),
        HermitianMatrix::identity(2).unwrap(),
        &OperatorParams::new(2, 1).unwrap(),
        Geometry::Box { lower: vec![lower; 4], upper: vec![upper; 4], resolution },
    )
    .unwrap();
    DiscreteProblem::build(&spec).unwrap()
}

#[test]
fn collar_barrier_on_the_subsolution() {
    // v = 0.1d − d² ≥ 0 on d < 0.05; 𝓛v = F·(−d²)'' = −1/4 with F = I/2, 𝓕 = 1.
    let problem = quadratic_box(-0.1, 0.1, 9);
    let sub = problem.subsolution().to_vec();
    let params = BarrierParams { tau: 0.1, n_coef: 1.0, delta: Some(0.05) };
    let report = barrier_check(&sub, &sub, &problem, &params).unwrap();
    assert!(!report.degenerate_collar);
    assert!(report.min_v >= 0.0);
    assert!((report.epsilon() - 0.125).abs() < 1e-10, "epsilon {}", report.epsilon());

    let wide = barrier_check(&sub, &sub, &problem, &BarrierParams { delta: Some(1.0), ..params }).unwrap();
    assert!(wide.degenerate_collar);
}

#[test]
fn boundary_trace_of_the_identity() {
    let id3 = HermitianMatrix::<f64>::identity(3).unwrap();
    for omit in 0..3 {
        assert_eq!(tangential_trace(&id3, &id3, omit).unwrap(), 2.0);
    }
    let spec = manufactured_problem(
        ScalarFn::<f64>::Constant(0.0),
        HermitianMatrix::identity(2).unwrap(),
        HermitianMatrix::identity(2).unwrap(),
        &OperatorParams::new(2, 1).unwrap(),
        Geometry::Box { lower: vec![0.0; 4], upper: vec![1.0; 4], resolution: 9 },
    )
    .unwrap();
    let problem = DiscreteProblem::build(&spec).unwrap();
    assert!((boundary_trace_check(problem.subsolution(), &problem).unwrap() - 1.0).abs() < 1e-14);

    let mut radial = radial_spec(radial_psi(1.0), FnSource::FromSolution, 101);
    radial.solution = Some(ScalarFn::Constant(0.0));
    radial.rhs = RhsSource::Manufactured;
    let problem = DiscreteProblem::build(&radial).unwrap();
    assert!((radial_boundary_trace(problem.subsolution(), &problem).unwrap() - 2.0).abs() < 1e-14);
}

#[test]
fn sandwich_detects_violations() {
    let sub = [0.0, 0.0, 0.0];
    let upper = [1.0, 1.0, 1.0];
    assert_eq!(sandwich_check(&[0.5, 0.2, 1.0], &sub, &upper), 0.0);
    assert_eq!(sandwich_check(&[0.5, -0.3, 1.0], &sub, &upper), 0.3);
    assert_eq!(sandwich_check(&[0.5, 0.2, 1.25], &sub, &upper), 0.25);
}

#[test]
fn inflated_psi_is_reported_at_its_node() {
    let mut problem = quadratic_box(-1.0, 1.0, 9);
    let node = match problem.scheme() {
        pluri_core::Scheme::Box(b) => b.grid().node_id(&[3, 4, 5, 4]),
        _ => unreachable!(),
    };
    assert!(problem.disc().is_equation_node(node));
    problem.set_psi(node, problem.psi()[node] * 1.1).unwrap();
    match problem.verify_subsolution() {
        Err(Error::SubsolutionInvalid { node: witness, required, available }) => {
            assert_eq!(witness, node);
            assert!(required > available);
        }
        other => panic!("expected SubsolutionInvalid, got {other:?}"),
    }
    assert!(matches!(continuity_solve(&problem, &ContinuationConfig::for_problem(&problem)), Err(Error::SubsolutionInvalid { .. })));
}

#[test]
fn inadmissible_start_escapes_the_cone() {
    let mut problem = quadratic_box(-1.0, 1.0, 9);
    let start: Vec<f64> = problem.subsolution().iter().map(|v| -v).collect();
    problem.set_initial(start).unwrap();
    assert!(matches!(continuity_solve(&problem, &ContinuationConfig::for_problem(&problem)), Err(Error::ConeEscape { t, .. }) if t == 0.0));
}

#[test]
fn single_precision_scheme_runs() {
    let spec = manufactured_problem(
        ScalarFn::<f32>::RadialPower { power: 2, scale: 1.0 },
        HermitianMatrix::identity(3).unwrap(),
        HermitianMatrix::identity(3).unwrap(),
        &OperatorParams::new(3, 2).unwrap(),
        Geometry::Radial { radius: 1.0, points: 101 },
    )
    .unwrap();
    let problem = DiscreteProblem::build(&spec).unwrap();
    let mut config = ContinuationConfig::for_problem(&problem);
    config.newton.tol = 1e-3;
    let out = continuity_solve(&problem, &config).unwrap();
    assert!(out.diagnostics.exact_error.unwrap() < 1e-3);
}
