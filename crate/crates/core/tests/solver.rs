use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use tfns::fem::{
    assemble_forcing, assemble_operators, interpolate, l2_error, ElementPair, MixedSpace,
};
use tfns::frac_quadrature::{caputo_decay_factor, CaputoOracle};
use tfns::geometry::build_structured_mesh;
use tfns::harness::manufactured::{
    forcing_with_factor, manufactured_forcing, pressure_gradient, pressure_profile,
    velocity_laplacian, velocity_profile,
};
use tfns::saddle::{self, SaddleSystem, DEFAULT_LINEAR_TOL};
use tfns::stepper::{manufactured_interpolant, run, ForcingMode, SolverConfig, Stepper};
use tfns::Error;

const PAIRS: [ElementPair; 2] = [ElementPair::TaylorHood, ElementPair::IsoTaylorHood];

fn space(n: usize, element: ElementPair) -> MixedSpace {
    MixedSpace::with_element(Arc::new(build_structured_mesh(n)), element)
}

fn config(alpha: f64, steps: usize, cells: usize) -> SolverConfig {
    SolverConfig {
        alpha,
        steps,
        cells,
        ..SolverConfig::default()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn zero_data_stays_at_rest() {
    let t = run(SolverConfig {
        forcing: ForcingMode::Zero,
        ..config(0.6, 5, 3)
    })
    .unwrap();
    for j in 0..=5 {
        let f = t.ledger().field(j);
        assert!(f.velocity.iter().chain(&f.pressure).all(|&x| x == 0.0));
    }
}

#[test]
fn no_steps_keeps_only_the_initial_field() {
    let t = run(config(0.5, 0, 2)).unwrap();
    assert!(t.ledger().is_empty());
    assert!(t.diagnostics().is_empty());
    assert!(norm(&t.ledger().initial.velocity) > 0.0);
}

#[test]
fn history_grows_by_one_residual_per_step() {
    let t = run(config(0.3, 6, 2)).unwrap();
    for d in t.diagnostics() {
        assert_eq!(d.history_accumulations, d.step - 1);
    }
    assert_eq!(t.ledger().steps().len(), 6);
}

#[test]
fn summed_continuity_residual_vanishes() {
    let t = run(config(0.7, 6, 4)).unwrap();
    let s = &t.stepper;
    for n in 1..=6 {
        let scale: f64 = (0..n)
            .map(|k| s.weights.weights[k] * norm(&s.ledger.field(n - k).velocity))
            .sum();
        assert!(s.summed_constraint_residual(n) <= 1e-9 * scale.max(1.0));
    }
}

#[test]
fn picard_converges_quickly() {
    let t = run(config(0.5, 4, 4)).unwrap();
    assert!(t.diagnostics().iter().all(|d| d.picard_iterations <= 10));
}

#[test]
fn picard_cap_is_reported() {
    let mut s = Stepper::new(SolverConfig {
        picard_max: 1,
        picard_tol: 1e-15,
        ..config(0.5, 2, 2)
    })
    .unwrap();
    let err = s.run_to_end().unwrap_err();
    match err {
        Error::Step { step: 1, source } => {
            assert!(matches!(*source, Error::PicardNonConvergence { iterations: 1, .. }))
        }
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn initial_projection_is_discretely_divergence_free() {
    for element in PAIRS {
        let mut errors = Vec::new();
        for n in [4, 8] {
            let s = Stepper::new(SolverConfig {
                element,
                ..config(0.5, 1, n)
            })
            .unwrap();
            let u0 = &s.ledger.initial;
            assert!(norm(&s.ops.divergence.matvec(&u0.velocity)) <= 1e-10);
            let e = l2_error(&s.space, u0, |x, y| {
                let u = velocity_profile(x, y);
                [u[0], u[1], 0.0]
            });
            errors.push(e[0].hypot(e[1]));
        }
        assert!(errors[0] / errors[1] >= 4.0, "{element:?}: {errors:?}");
    }
}

#[test]
fn runs_are_bitwise_reproducible() {
    let a = run(config(0.45, 3, 3)).unwrap();
    let b = run(config(0.45, 3, 3)).unwrap();
    assert_eq!(a.ledger().latest(), b.ledger().latest());
    assert_eq!(a.diagnostics(), b.diagnostics());
}

#[test]
fn pressure_is_mean_free_every_step() {
    let t = run(config(0.8, 4, 4)).unwrap();
    for d in t.diagnostics() {
        assert!(d.pressure_mean.abs() <= 10.0 * DEFAULT_LINEAR_TOL * d.pressure_coeff_norm);
    }
}

fn erfi(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    for k in 1..200 {
        term *= x * x / k as f64;
        sum += term / (2 * k + 1) as f64;
    }
    2.0 / std::f64::consts::PI.sqrt() * sum
}

#[test]
fn caputo_half_order_matches_erfi_series() {
    for t in [0.25f64, 0.5, 1.0, 2.0] {
        let expect = -(-t).exp() * erfi(t.sqrt());
        assert!((caputo_decay_factor(0.5, t, 1e-12).unwrap() - expect).abs() < 1e-9);
    }
}

#[test]
fn caputo_reports_unresolved_quadrature() {
    let oracle = CaputoOracle::new(0.5, 1e-12).unwrap();
    assert!(matches!(oracle.decay_factor(1e4), Err(Error::Accuracy { .. })));
    assert!(oracle.decay_factor(-1.0).is_err());
}

#[test]
fn forcing_approaches_classical_limit() {
    for t in [0.3f64, 1.0] {
        let (x, y) = (0.3, 0.6);
        let classical = forcing_with_factor(1.5, -(-t).exp(), t, x, y);
        let (f1, f2) = manufactured_forcing(0.9999, 1.5, x, y, t).unwrap();
        assert!((f1 - classical[0]).abs() < 1e-3 * classical[0].abs().max(1.0));
        assert!((f2 - classical[1]).abs() < 1e-3 * classical[1].abs().max(1.0));
        let (g1, g2) = manufactured_forcing(1.0, 1.5, x, y, t).unwrap();
        assert_eq!([g1, g2], classical);
    }
}

#[test]
fn interpolation_orders() {
    let exact = |x: f64, y: f64| {
        let u = velocity_profile(x, y);
        [u[0], u[1], pressure_profile(x, y)]
    };
    for (element, velocity_order) in [(ElementPair::TaylorHood, 3.0), (ElementPair::IsoTaylorHood, 2.0)] {
        let errs: Vec<[f64; 3]> = [2, 4, 8, 16]
            .iter()
            .map(|&n| {
                let s = space(n, element);
                let f = interpolate(&s, velocity_profile, pressure_profile, 0.0);
                l2_error(&s, &f, exact)
            })
            .collect();
        let rates: Vec<[f64; 2]> = errs
            .windows(2)
            .map(|w| [(w[0][0] / w[1][0]).log2(), (w[0][2] / w[1][2]).log2()])
            .collect();
        for r in &rates {
            assert!(r[0] > velocity_order - 0.5, "{element:?} u rates {rates:?}");
            assert!((r[1] - 2.0).abs() < 0.1, "{element:?} p rates {rates:?}");
        }
        let last = rates.last().unwrap();
        assert!((last[0] - velocity_order).abs() < 0.1, "{element:?} u rates {rates:?}");
    }
}

#[test]
fn manufactured_interpolant_decays_in_time() {
    let s = space(2, ElementPair::default());
    let a = manufactured_interpolant(&s, 0.0);
    let b = manufactured_interpolant(&s, 1.0);
    let e = (-1.0f64).exp();
    for (x, y) in a.velocity.iter().zip(&b.velocity) {
        assert!((x * e - y).abs() < 1e-15);
    }
}

fn stokes_error(n: usize, element: ElementPair) -> f64 {
    let space = space(n, element);
    let nu = 1.5;
    let ops = assemble_operators(&space, nu);
    let rhs = assemble_forcing(&space, |x, y| {
        let l = velocity_laplacian(x, y);
        let g = pressure_gradient(x, y);
        [-nu * l[0] + g[0], -nu * l[1] + g[1]]
    });
    let system = SaddleSystem {
        velocity_block: ops.stiffness.clone(),
        coupling: &ops.divergence,
        coupling_scale: 1.0,
        mean: Some(&ops.mean),
        space: &space,
        rhs_momentum: rhs,
        rhs_continuity: vec![0.0; space.pressure_dofs()],
    };
    let sol = saddle::solve(&system, DEFAULT_LINEAR_TOL).unwrap();
    let field = tfns::fem::FieldCoefficients {
        velocity: sol.velocity,
        pressure: sol.pressure,
        time: 0.0,
    };
    let e = l2_error(&space, &field, |x, y| {
        let u = velocity_profile(x, y);
        [u[0], u[1], pressure_profile(x, y)]
    });
    e[0].hypot(e[1])
}

#[test]
fn steady_stokes_converges() {
    for element in PAIRS {
        let coarse = stokes_error(4, element);
        let fine = stokes_error(8, element);
        assert!(coarse < 1e-2);
        assert!(coarse / fine > 3.5, "{element:?}: {coarse} -> {fine}");
    }
}

fn dense_free(m: &tfns::fem::CsrMatrix, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    let full = m.to_dense();
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| full[rows[i]][cols[j]])
}

fn pressure_mass(space: &MixedSpace) -> DMatrix<f64> {
    let mesh = space.mesh();
    let np = space.pressure_dofs();
    let mut q = DMatrix::zeros(np, np);
    for t in 0..mesh.num_triangles() {
        let a = mesh.area(t);
        for (i, &vi) in mesh.triangles[t].iter().enumerate() {
            for (j, &vj) in mesh.triangles[t].iter().enumerate() {
                q[(vi, vj)] += a / 12.0 * if i == j { 2.0 } else { 1.0 };
            }
        }
    }
    q
}

/// Smallest non-zero singular value of `B` measured in `H¹₀ × L²`.
fn inf_sup(n: usize, element: ElementPair) -> f64 {
    let space = space(n, element);
    let ops = assemble_operators(&space, 1.0);
    let free: Vec<usize> = (0..space.velocity_dofs()).filter(|&i| !space.is_dirichlet(i)).collect();
    let all_p: Vec<usize> = (0..space.pressure_dofs()).collect();
    let a = dense_free(&ops.stiffness, &free, &free);
    let b = dense_free(&ops.divergence, &all_p, &free);
    let schur = &b * a.clone().cholesky().unwrap().solve(&b.transpose());
    let l = pressure_mass(&space).cholesky().unwrap();
    let linv = l.l().try_inverse().unwrap();
    let sym = &linv * schur * linv.transpose();
    let mut eig: Vec<f64> = SymmetricEigen::new(0.5 * (&sym + sym.transpose())).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    assert!(eig[0].abs() < 1e-10, "constant pressure mode expected, got {}", eig[0]);
    eig[1].sqrt()
}

#[test]
fn inf_sup_constant_is_positive_and_stable() {
    for element in PAIRS {
        let coarse = inf_sup(2, element);
        let fine = inf_sup(4, element);
        assert!(coarse > 1e-2 && fine > 1e-2, "{element:?}: {coarse}, {fine}");
        assert!(fine >= 0.8 * coarse, "{element:?}: {coarse} -> {fine}");
    }
}

#[test]
fn velocity_mass_is_positive_definite_on_free_dofs() {
    for element in PAIRS {
        let space = space(3, element);
        let ops = assemble_operators(&space, 1.0);
        let free: Vec<usize> = (0..space.velocity_dofs()).filter(|&i| !space.is_dirichlet(i)).collect();
        let m = dense_free(&ops.mass, &free, &free);
        let min = SymmetricEigen::new(m).eigenvalues.min();
        assert!(min > 0.0, "{element:?}: {min}");
    }
}

#[test]
fn free_decay_never_grows() {
    let t = run(SolverConfig {
        forcing: ForcingMode::FreeDecay,
        ..config(0.5, 16, 4)
    })
    .unwrap();
    let s = &t.stepper;
    let u0 = tfns::fem::l2_norm_velocity(&s.ops, &s.ledger.initial.velocity);
    assert!(s.diagnostics.iter().all(|d| d.velocity_norm <= u0));
}
