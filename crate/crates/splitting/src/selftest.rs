//! Quick invariant checks against independent oracles, for `splitting selftest`.

use std::sync::Arc;

use splitting_core::flows::{QuadraticReaction, ZeroReaction};
use splitting_core::linalg::CsrMatrix;
use splitting_core::matfun::{expm_action, phi1_action, phi2_action, Backend, Propagator};
use splitting_core::mesh::{build_laplacian, BoundaryKind, BoundarySpec, Face, Grid};
use splitting_core::norm::fit_order;
use splitting_core::problems::ProblemSpec;
use splitting_core::schemes::{Integrator, Problem, Scheme, SchemeConfig};

use crate::report::{guide_line, parse_csv, to_csv, ConvergenceReport, Row, Status};

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }

    fn failed(name: &'static str, err: impl std::fmt::Display) -> Self {
        Self::new(name, false, err.to_string())
    }
}

pub fn run_all() -> Vec<Check> {
    vec![
        matfun_taylor(),
        krylov_matches_dense(),
        flow_counts(),
        steady_state(),
        m5a_without_diffusion(),
        csv_round_trip(),
        guide_slopes(),
    ]
}

/// `Σ_j X^j v / (j+k)!` for `k = 0, 1, 2`, 100 terms.
fn taylor_phi(x: &[Vec<f64>], v: &[f64]) -> [Vec<f64>; 3] {
    let n = v.len();
    let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut term = v.to_vec();
    let mut fact = 1.0;
    for j in 0..100usize {
        if j > 0 {
            term = (0..n).map(|r| (0..n).map(|c| x[r][c] * term[c]).sum()).collect();
            fact *= j as f64;
        }
        let mut denom = fact;
        for (k, o) in out.iter_mut().enumerate() {
            if k > 0 {
                denom *= (j + k) as f64;
            }
            o.iter_mut().zip(&term).for_each(|(o, t)| *o += t / denom);
        }
    }
    out
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn matfun_taylor() -> Check {
    const NAME: &str = "matfun vs Taylor series";
    let n = 8;
    let mut worst = 0.0f64;
    for seed in 0..4 {
        let s = seed as f64;
        let mut trip = Vec::new();
        let mut dense = vec![vec![0.0; n]; n];
        for r in 0..n {
            for c in 0..n {
                let mut v = 0.3 * ((r * 7 + c * 3) as f64 + s).sin();
                if r == c {
                    v -= 2.0 + 0.25 * r as f64;
                }
                dense[r][c] = v;
                trip.push((r, c, v));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &trip);
        let v: Vec<f64> = (0..n).map(|i| (i as f64 + s).cos()).collect();
        for tau in [0.01, 0.1, 1.0] {
            let x: Vec<Vec<f64>> = dense.iter().map(|row| row.iter().map(|a| tau * a).collect()).collect();
            let oracle = taylor_phi(&x, &v);
            let b = Backend::default();
            let got = match (expm_action(&b, &a, tau, &v), phi1_action(&b, &a, tau, &v), phi2_action(&b, &a, tau, &v)) {
                (Ok(e), Ok(p1), Ok(p2)) => [e, p1, p2],
                (Err(e), ..) | (_, Err(e), _) | (.., Err(e)) => return Check::failed(NAME, e),
            };
            for k in 0..3 {
                worst = worst.max(max_diff(&got[k], &oracle[k]));
            }
        }
    }
    Check::new(NAME, worst <= 1e-11, format!("max deviation {worst:.2e}"))
}

fn laplacian_1d(n: usize, data: f64) -> splitting_core::DiscreteDiffusion {
    let bc = BoundarySpec::new(
        vec![(Face::Left, BoundaryKind::Dirichlet), (Face::Right, BoundaryKind::Neumann)],
        move |_: Face, _: [f64; 2], _: f64| data,
    );
    build_laplacian(Grid::new_1d(n).expect("grid"), bc).expect("laplacian")
}

fn krylov_matches_dense() -> Check {
    const NAME: &str = "Krylov vs dense propagator";
    let d = laplacian_1d(60, 1.0);
    let n = d.dim();
    let v: Vec<f64> = (0..n).map(|i| (0.1 * i as f64).sin()).collect();
    let run = |b: Backend| Propagator::new(&b, d.matrix(), 0.01).and_then(|p| p.apply(&v, &v, &v));
    match (run(Backend::default()), run(Backend::krylov())) {
        (Ok(a), Ok(b)) => {
            let dev = max_diff(&a, &b);
            Check::new(NAME, dev <= 1e-9, format!("max deviation {dev:.2e}"))
        }
        (Err(e), _) | (_, Err(e)) => Check::failed(NAME, e),
    }
}

fn flow_counts() -> Check {
    const NAME: &str = "flow counts";
    let mut spec = ProblemSpec::quadratic1d(1.0);
    spec.interior = 40;
    let problem = match spec.build() {
        Ok(p) => p,
        Err(e) => return Check::failed(NAME, e),
    };
    let mut bad = Vec::new();
    for scheme in [Scheme::Strang, Scheme::StrangM3, Scheme::StrangM5a, Scheme::StrangM5b] {
        for tau in [0.02, 0.01] {
            let n = (problem.t_final / tau).round() as u64;
            let expected = match scheme {
                Scheme::Strang | Scheme::StrangM5b => 2 * n + 1,
                _ => 3 * n,
            };
            let cfg = SchemeConfig::new(scheme, tau, problem.t_final);
            match Integrator::new(&problem, cfg).and_then(|it| it.run()) {
                Ok(t) if t.counters.total() == expected => {}
                Ok(t) => bad.push(format!("{scheme} tau={tau}: {} != {expected}", t.counters.total())),
                Err(e) => bad.push(format!("{scheme} tau={tau}: {e}")),
            }
        }
    }
    Check::new(NAME, bad.is_empty(), if bad.is_empty() { "all match".into() } else { bad.join("; ") })
}

fn steady_state() -> Check {
    const NAME: &str = "steady state preserved without reaction";
    let d = laplacian_1d(40, 1.0);
    let initial = d.grid().sample(|p| 1.0 + p[0]);
    let problem = Problem {
        name: "steady".into(),
        diffusion: d,
        reaction: Arc::new(ZeroReaction),
        initial: initial.clone(),
        t_final: 0.1,
        m3_extension: None,
    };
    let mut worst = 0.0f64;
    for scheme in [Scheme::Strang, Scheme::StrangDiffusionOuter, Scheme::StrangM3, Scheme::StrangM5a, Scheme::StrangM5b] {
        let cfg = SchemeConfig::new(scheme, 0.025, 0.1);
        match Integrator::new(&problem, cfg).and_then(|it| it.run()) {
            Ok(t) => worst = worst.max(max_diff(t.last().values(), initial.values())),
            Err(e) => return Check::failed(NAME, format!("{scheme}: {e}")),
        }
    }
    Check::new(NAME, worst <= 1e-9, format!("max drift {worst:.2e}"))
}

fn m5a_without_diffusion() -> Check {
    const NAME: &str = "five-part step exact without diffusion";
    let d = laplacian_1d(30, 0.0);
    let n = d.dim();
    let grid = *d.grid();
    let reaction = QuadraticReaction::uniform(&grid, 1.0);
    let initial = grid.sample(|p| 1.0 + 0.5 * (3.0 * p[0]).sin());
    let tau = 0.05;
    let problem = Problem {
        name: "no diffusion".into(),
        diffusion: d,
        reaction: Arc::new(reaction),
        initial: initial.clone(),
        t_final: tau,
        m3_extension: None,
    };
    let zero = CsrMatrix::zeros(n, n);
    let full = match Propagator::new(&Backend::default(), &zero, tau) {
        Ok(p) => Arc::new(p),
        Err(e) => return Check::failed(NAME, e),
    };
    let cfg = SchemeConfig::new(Scheme::StrangM5a, tau, tau);
    let traj = match Integrator::with_propagators(&problem, cfg, Some(full), None).and_then(|it| it.run()) {
        Ok(t) => t,
        Err(e) => return Check::failed(NAME, e),
    };
    let out = traj.last();
    let defect = grid
        .interior_nodes()
        .into_iter()
        .map(|k| {
            let u0 = initial.values()[k];
            (out.values()[k] - u0 / (1.0 - tau * u0)).abs()
        })
        .fold(0.0, f64::max);
    Check::new(NAME, defect <= 1e-12, format!("defect {defect:.2e}"))
}

fn csv_round_trip() -> Check {
    const NAME: &str = "CSV round trip";
    let rows: Vec<Row> = [0.02, 0.01, 0.005]
        .into_iter()
        .enumerate()
        .map(|(k, tau)| Row {
            scheme: Scheme::ALL[k % 4],
            tau,
            error: (k != 2).then(|| 1.0 / 3.0 * tau * tau),
            diffusion_flows: 5 << k,
            reaction_flows: 6 << k,
            status: if k == 2 { Status::BlowUp } else { Status::Ok },
        })
        .collect();
    let report = ConvergenceReport {
        rows: rows.clone(),
        ..Default::default()
    };
    match to_csv(&report).and_then(|text| parse_csv(&text)) {
        Ok(back) => Check::new(NAME, back == rows, format!("{} rows", back.len())),
        Err(e) => Check::failed(NAME, e),
    }
}

fn guide_slopes() -> Check {
    const NAME: &str = "guide line slopes";
    let report = ConvergenceReport {
        rows: (0..7)
            .map(|k| Row {
                scheme: Scheme::StrangM5b,
                tau: 0.02 / f64::from(1 << k),
                error: Some(1e-3 / f64::from(3 << k)),
                diffusion_flows: 0,
                reaction_flows: 0,
                status: Status::Ok,
            })
            .collect(),
        ..Default::default()
    };
    let mut worst = 0.0f64;
    for order in [1.0, 2.0] {
        let Some(line) = guide_line(&report, order) else {
            return Check::failed(NAME, "no guide line");
        };
        let (t, e): (Vec<f64>, Vec<f64>) = line.into_iter().unzip();
        match fit_order(&t, &e) {
            Ok(p) => worst = worst.max((p - order).abs()),
            Err(e) => return Check::failed(NAME, e),
        }
    }
    Check::new(NAME, worst <= 1e-12, format!("max slope deviation {worst:.1e}"))
}
