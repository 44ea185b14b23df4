use proptest::prelude::*;

use splitting::report::{format_sci, parse_csv, to_csv};
use splitting::{run_convergence, Status, SweepOptions};
use splitting_core::problems::ProblemSpec;
use splitting_core::schemes::Scheme;

const SCHEMES: [Scheme; 4] = [Scheme::Strang, Scheme::StrangM3, Scheme::StrangM5a, Scheme::StrangM5b];

fn small_quadratic() -> ProblemSpec {
    let mut spec = ProblemSpec::quadratic1d(1.0);
    spec.interior = 40;
    spec
}

fn taus() -> Vec<f64> {
    (0..3).map(|k| 0.02 / f64::from(1 << k)).collect()
}

#[test]
fn repeated_sweeps_are_byte_identical() {
    let mut opts = SweepOptions::default();
    opts.reference_step = Some(0.02 / 64.0);
    let a = to_csv(&run_convergence(&small_quadratic(), &SCHEMES, &taus(), &opts).unwrap()).unwrap();
    let b = to_csv(&run_convergence(&small_quadratic(), &SCHEMES, &taus(), &opts).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn csv_round_trips_through_the_parser() {
    let mut opts = SweepOptions::default();
    opts.reference_step = Some(0.02 / 64.0);
    let report = run_convergence(&small_quadratic(), &SCHEMES, &taus(), &opts).unwrap();
    let rows = parse_csv(&to_csv(&report).unwrap()).unwrap();
    assert_eq!(rows.len(), report.rows.len());
    for (got, want) in rows.iter().zip(&report.rows) {
        assert_eq!(got.scheme, want.scheme);
        assert_eq!(got.tau.to_bits(), want.tau.to_bits());
        assert_eq!(got.error.map(f64::to_bits), want.error.map(f64::to_bits));
        assert_eq!((got.diffusion_flows, got.reaction_flows), (want.diffusion_flows, want.reaction_flows));
        assert_eq!(got.status, Status::Ok);
    }
}

#[test]
fn errors_are_insensitive_to_the_reference_step() {
    let run = |h: f64| {
        let mut opts = SweepOptions::default();
        opts.reference_step = Some(h);
        run_convergence(&small_quadratic(), &SCHEMES, &taus(), &opts).unwrap()
    };
    let coarse = run(0.02 / 512.0);
    let fine = run(0.02 / 1024.0);
    for scheme in SCHEMES {
        for tau in taus() {
            let (a, b) = (coarse.error(scheme, tau).unwrap(), fine.error(scheme, tau).unwrap());
            assert!(((a - b) / b).abs() < 0.01, "{scheme} tau={tau}: {a:e} vs {b:e}");
        }
    }
}

#[test]
fn tiny_corrector_cap_marks_rows_without_aborting() {
    let mut opts = SweepOptions::default();
    opts.reference_step = Some(0.02 / 64.0);
    opts.corrector_cap = 1e-3;
    let report = run_convergence(&small_quadratic(), &[Scheme::Strang, Scheme::StrangM5a], &taus(), &opts).unwrap();
    assert!(report.rows_for(Scheme::Strang).all(|r| r.is_ok()));
    assert!(report.rows_for(Scheme::StrangM5a).all(|r| r.status == Status::CorrectorCap && r.error.is_none()));
    assert_eq!(report.failures().count(), taus().len());
    assert!(report.slope(Scheme::StrangM5a).is_none());
}

proptest! {
    #[test]
    fn format_sci_round_trips(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        let s = format_sci(x);
        prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
        let (mantissa, exp) = s.split_once('e').unwrap();
        prop_assert_eq!(mantissa.trim_start_matches('-').len(), 18);
        prop_assert!(exp.starts_with('+') || exp.starts_with('-'));
        prop_assert!(exp.len() >= 3);
    }
}
