use splitting_core::flows::{reaction_flow, FlowCounters};
use splitting_core::norm::{error_norm, fit_order};
use splitting_core::problems::ProblemSpec;
use splitting_core::schemes::{integrate, rk4_reference, Extension, Scheme, SchemeConfig};

fn small(mut spec: ProblemSpec, interior: usize) -> ProblemSpec {
    spec.interior = interior;
    spec
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn fused_and_unfused_loops_agree() {
    for spec in [small(ProblemSpec::quadratic1d(5.0), 100), small(ProblemSpec::integro1d(), 60)] {
        let p = spec.build().unwrap();
        for scheme in [Scheme::Strang, Scheme::StrangM5b] {
            let mut cfg = SchemeConfig::new(scheme, 0.01, p.t_final);
            cfg.fused = true;
            let fused = integrate(&p, &cfg).unwrap();
            cfg.fused = false;
            let plain = integrate(&p, &cfg).unwrap();
            assert_eq!(fused.times(), plain.times());
            for (a, b) in fused.states().iter().zip(plain.states()) {
                let dev = max_diff(a.values(), b.values());
                assert!(dev <= 1e-13, "{} {scheme}: {dev:e}", spec.label());
            }
            let n = plain.len() as u64 - 1;
            assert_eq!(fused.counters.total(), 2 * n + 1);
            assert_eq!(plain.counters.total(), 3 * n);
        }
    }
}

#[test]
fn five_part_with_zero_corrector_is_strang() {
    let p = small(ProblemSpec::quadratic1d(1.0), 80).build().unwrap();
    let mut strang = SchemeConfig::new(Scheme::Strang, 0.005, p.t_final);
    strang.fused = false;
    let mut m5a = SchemeConfig::new(Scheme::StrangM5a, 0.005, p.t_final);
    m5a.extension = Extension::Zero;
    let a = integrate(&p, &strang).unwrap();
    let b = integrate(&p, &m5a).unwrap();
    assert_eq!(a.states(), b.states());
    assert_eq!(a.counters, b.counters);
}

#[test]
fn table_counts_for_every_step_count() {
    let p = small(ProblemSpec::quadratic1d(1.0), 30).build().unwrap();
    for k in 0..5 {
        let tau = 0.02 / f64::from(1 << k);
        let n = 5u64 << k;
        for (scheme, diffusion, reaction) in [
            (Scheme::Strang, n, n + 1),
            (Scheme::StrangM3, 2 * n, n),
            (Scheme::StrangM5a, n, 2 * n),
            (Scheme::StrangM5b, n, n + 1),
        ] {
            let t = integrate(&p, &SchemeConfig::new(scheme, tau, p.t_final)).unwrap();
            assert_eq!((t.counters.diffusion, t.counters.reaction), (diffusion, reaction), "{scheme} N={n}");
        }
    }
}

#[test]
fn integral_reaction_flow_matches_fine_rk4() {
    let spec = ProblemSpec::integro1d();
    let p = spec.build().unwrap();
    let grid = *p.initial.grid();
    let nodes = grid.node_count();
    let xs: Vec<f64> = (0..nodes).map(|k| grid.point(k)[0]).collect();
    let w: Vec<f64> = (0..nodes).map(|k| grid.trapezoid_weight(k)).collect();
    let rhs = |u: &[f64]| -> Vec<f64> {
        xs.iter()
            .map(|x| {
                -xs.iter()
                    .zip(u)
                    .zip(&w)
                    .map(|((s, v), w)| w * v.powi(4) / (1.0 + (x - s).abs()).powi(2))
                    .sum::<f64>()
            })
            .collect()
    };
    let t = 1e-3;
    let h = t / 100.0;
    let mut u: Vec<f64> = xs.iter().map(|x| 2.0 * ((std::f64::consts::PI * x).cos() + 1.0)).collect();
    for _ in 0..100 {
        let k1 = rhs(&u);
        let s: Vec<f64> = u.iter().zip(&k1).map(|(u, k)| u + 0.5 * h * k).collect();
        let k2 = rhs(&s);
        let s: Vec<f64> = u.iter().zip(&k2).map(|(u, k)| u + 0.5 * h * k).collect();
        let k3 = rhs(&s);
        let s: Vec<f64> = u.iter().zip(&k3).map(|(u, k)| u + h * k).collect();
        let k4 = rhs(&s);
        for i in 0..nodes {
            u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    let u0 = grid.sample(|x| 2.0 * ((std::f64::consts::PI * x[0]).cos() + 1.0));
    let got = reaction_flow(p.reaction.as_ref(), &u0, t, 5, &mut FlowCounters::default()).unwrap();
    let dev = max_diff(got.values(), &u);
    assert!(dev <= 1e-10, "{dev:e}");
}

#[test]
fn corrected_schemes_recover_second_order_on_a_coarse_grid() {
    let p = small(ProblemSpec::quadratic1d(1.0), 60).build().unwrap();
    let taus: Vec<f64> = (0..5).map(|k| 0.02 / f64::from(1 << k)).collect();
    let reference = rk4_reference(&p, 0.02 / f64::from(1 << 12), taus[4]).unwrap();
    let order = |scheme| {
        let errors: Vec<f64> = taus
            .iter()
            .map(|&tau| {
                let mut cfg = SchemeConfig::new(scheme, tau, p.t_final);
                cfg.smoother.tol = Some(1e-10);
                error_norm(&integrate(&p, &cfg).unwrap(), &reference).unwrap()
            })
            .collect();
        fit_order(&taus, &errors).unwrap()
    };
    assert!(order(Scheme::Strang) < 1.6);
    for scheme in [Scheme::StrangM3, Scheme::StrangM5a, Scheme::StrangM5b] {
        let p = order(scheme);
        assert!((1.8..=2.2).contains(&p), "{scheme}: {p}");
    }
}
