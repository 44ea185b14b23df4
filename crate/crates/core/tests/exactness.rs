use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use splitting_core::flows::{diffusion_flow, FlowCounters, QuadraticReaction, ZeroReaction};
use splitting_core::linalg::{CsrMatrix, LinearOperator};
use splitting_core::matfun::{Backend, Propagator};
use splitting_core::mesh::{build_laplacian, BoundaryKind, BoundarySpec, DiscreteDiffusion, Face, Grid};
use splitting_core::schemes::{Extension, Integrator, Problem, Scheme, SchemeConfig};

fn mixed(n: usize, data: impl Fn(Face, f64) -> f64 + Send + Sync + 'static) -> DiscreteDiffusion {
    let bc = BoundarySpec::new(
        vec![(Face::Left, BoundaryKind::Dirichlet), (Face::Right, BoundaryKind::Neumann)],
        move |f: Face, _: [f64; 2], t: f64| data(f, t),
    );
    build_laplacian(Grid::new_1d(n).unwrap(), bc).unwrap()
}

fn dense(a: &CsrMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |r, c| a.get(r, c))
}

/// `y(T)` for `y' = Ay + c₀ + t c₁` from the exponential of the augmented
/// generator acting on `(y₀, 0, 1)`.
fn affine_oracle(a: &DMatrix<f64>, c0: &[f64], c1: &[f64], y0: &[f64], t: f64) -> Vec<f64> {
    let n = a.nrows();
    let mut m = DMatrix::zeros(n + 2, n + 2);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    for i in 0..n {
        m[(i, n)] = c1[i];
        m[(i, n + 1)] = c0[i];
    }
    m[(n, n + 1)] = 1.0;
    let mut z = DVector::zeros(n + 2);
    z.rows_mut(0, n).copy_from_slice(y0);
    z[n + 1] = 1.0;
    let out = (m * t).exp() * z;
    out.rows(0, n).iter().copied().collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn time_linear(face: Face, t: f64) -> f64 {
    match face {
        Face::Left => 2.0 * (2.0 - t),
        _ => 0.5,
    }
}

#[test]
fn reaction_free_schemes_follow_exact_diffusion() {
    let d = mixed(30, time_linear);
    let a = dense(d.matrix());
    let c0 = d.forcing(0.0);
    let c1: Vec<f64> = d.forcing(1.0).iter().zip(&c0).map(|(e, s)| e - s).collect();
    let sampled = d.grid().sample(|p| 2.0 * ((std::f64::consts::PI * p[0]).cos() + 1.0));
    let initial = d.apply_boundary_reconstruction(&sampled.interior(), 0.0).unwrap();
    let y0 = initial.interior();
    let t_final = 0.1;
    let want = affine_oracle(&a, &c0, &c1, &y0, t_final);
    let problem = Problem {
        name: "heat".into(),
        diffusion: d,
        reaction: Arc::new(ZeroReaction),
        initial,
        t_final,
        m3_extension: None,
    };
    for scheme in [Scheme::Strang, Scheme::StrangDiffusionOuter, Scheme::StrangM3, Scheme::StrangM5a, Scheme::StrangM5b] {
        for tau in [0.05, 0.0125] {
            let traj = Integrator::new(&problem, SchemeConfig::new(scheme, tau, t_final)).unwrap().run().unwrap();
            let dev = max_diff(&traj.last().interior(), &want);
            assert!(dev <= 1e-9, "{scheme} tau={tau}: {dev:e}");
        }
    }
}

#[test]
fn time_linear_boundary_matches_crank_nicolson() {
    let d = mixed(50, time_linear);
    let a = dense(d.matrix());
    let n = d.dim();
    let initial = d.grid().sample(|p| 2.0 * ((std::f64::consts::PI * p[0]).cos() + 1.0));
    let tau = 0.1;
    let steps = 10_000;
    let h = tau / steps as f64;
    let id = DMatrix::<f64>::identity(n, n);
    let lhs = (&id - &a * (0.5 * h)).lu();
    let rhs_m = &id + &a * (0.5 * h);
    let mut y = DVector::from_vec(initial.interior());
    for k in 0..steps {
        let c = DVector::from_vec(d.forcing(k as f64 * h)) + DVector::from_vec(d.forcing((k + 1) as f64 * h));
        y = lhs.solve(&(&rhs_m * &y + c * (0.5 * h))).unwrap();
    }
    let p = Propagator::new(&Backend::default(), d.matrix(), tau).unwrap();
    let out = diffusion_flow(&d, &p, &initial, 0.0, None, &mut FlowCounters::default()).unwrap();
    let dev = max_diff(&out.interior(), y.as_slice());
    assert!(dev <= 1e-8, "deviation from Crank-Nicolson {dev:e}");
}

#[test]
fn steady_state_is_a_fixed_point() {
    let d = mixed(80, |f, _| if f == Face::Left { 1.5 } else { -0.7 });
    let a = dense(d.matrix());
    let c = DVector::from_vec(d.forcing(0.0));
    let ystar = a.lu().solve(&(-c)).unwrap();
    let u = d.apply_boundary_reconstruction(ystar.as_slice(), 0.0).unwrap();
    for (backend, tol) in [(Backend::default(), 1e-11), (Backend::krylov(), 1e-8)] {
        for tau in [1e-3, 0.1, 1.0] {
            let p = Propagator::new(&backend, d.matrix(), tau).unwrap();
            let out = diffusion_flow(&d, &p, &u, 0.0, None, &mut FlowCounters::default()).unwrap();
            let dev = max_diff(out.values(), u.values());
            assert!(dev <= tol, "{} tau={tau}: {dev:e}", backend.name());
        }
    }
}

#[test]
fn five_part_step_is_exact_without_diffusion() {
    let d = mixed(40, |_, _| 0.0);
    let grid = *d.grid();
    let n = d.dim();
    let tau = 0.02;
    for m in [1.0, 5.0] {
        let problem = Problem {
            name: "no diffusion".into(),
            diffusion: d.clone(),
            reaction: Arc::new(QuadraticReaction::uniform(&grid, m)),
            initial: grid.sample(|p| 0.6 + 0.2 * (4.0 * p[0]).cos()),
            t_final: 5.0 * tau,
            m3_extension: None,
        };
        let zero = Arc::new(Propagator::new(&Backend::default(), &CsrMatrix::zeros(n, n), tau).unwrap());
        let mut cfg = SchemeConfig::new(Scheme::StrangM5a, tau, problem.t_final);
        cfg.extension = Extension::Harmonic;
        let it = Integrator::with_propagators(&problem, cfg, Some(zero), None).unwrap();
        let mut u = problem.initial.clone();
        let mut counters = FlowCounters::default();
        for step in 0..5 {
            let next = it.step_m5(&u, step as f64 * tau, &mut counters).unwrap();
            let defect = grid
                .interior_nodes()
                .into_iter()
                .map(|k| {
                    let u0 = u.values()[k];
                    (next.state.values()[k] - u0 / (1.0 - m * tau * u0)).abs()
                })
                .fold(0.0, f64::max);
            assert!(defect <= 1e-12, "m={m} step {step}: defect {defect:e}");
            assert!(next.corrector.sup_norm() > 0.0);
            u = next.state;
        }
    }
}

