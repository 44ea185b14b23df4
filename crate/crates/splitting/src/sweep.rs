//! Convergence sweeps against an RK4 reference.

use std::sync::Arc;

use splitting_core::linalg::CsrMatrix;
use splitting_core::matfun::{Backend, KrylovParams, Propagator, DEFAULT_DENSE_CAP};
use splitting_core::multigrid::SmootherConfig;
use splitting_core::norm::error_norm;
use splitting_core::problems::{ProblemSpec, Scale};
use splitting_core::schemes::{rk4_reference, Extension, Integrator, Problem, Scheme, SchemeConfig, Trajectory};

use crate::error::{Error, Result};
use crate::report::{format_sci, ConvergenceReport, Diagnostics, Row, Status};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BackendChoice {
    /// Dense up to `dense_cap` unknowns, Krylov beyond.
    Auto { dense_cap: usize, krylov: KrylovParams },
    Fixed(Backend),
}

impl Default for BackendChoice {
    fn default() -> Self {
        BackendChoice::Auto {
            dense_cap: DEFAULT_DENSE_CAP,
            krylov: KrylovParams::default(),
        }
    }
}

impl BackendChoice {
    pub fn resolve(&self, n: usize) -> Backend {
        match *self {
            BackendChoice::Auto { dense_cap, krylov } if n > dense_cap => Backend::Krylov(krylov),
            BackendChoice::Auto { dense_cap, .. } => Backend::Dense { cap: dense_cap },
            BackendChoice::Fixed(b) => b,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepOptions {
    pub scale: Scale,
    pub backend: BackendChoice,
    pub substeps: usize,
    pub extension: Extension,
    pub smoother: SmootherConfig,
    pub corrector_cap: f64,
    /// Overrides the problem's reference step.
    pub reference_step: Option<f64>,
    /// `None` fuses every scheme that allows it.
    pub fused: Option<bool>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            scale: Scale::Paper,
            backend: BackendChoice::default(),
            substeps: 5,
            extension: Extension::Auto,
            smoother: SmootherConfig::default(),
            corrector_cap: splitting_core::corrector::DEFAULT_CAP,
            reference_step: None,
            fused: None,
        }
    }
}

impl SweepOptions {
    pub fn scheme_config(&self, scheme: Scheme, tau: f64, t_final: f64, unknowns: usize) -> SchemeConfig {
        let mut cfg = SchemeConfig::new(scheme, tau, t_final);
        cfg.fused = self.fused.map_or(scheme.fusable(), |f| f && scheme.fusable());
        cfg.substeps = self.substeps;
        cfg.backend = self.backend.resolve(unknowns);
        cfg.extension = self.extension;
        cfg.smoother = self.smoother;
        cfg.corrector_cap = self.corrector_cap;
        cfg
    }
}

/// Propagators shared by every run of a sweep, keyed by step size. Steps
/// that are power-of-two multiples of the finest one come from a single
/// doubling ladder.
#[derive(Clone, Debug, Default)]
pub struct PropagatorCache {
    entries: Vec<Arc<Propagator>>,
}

fn power_of_two_ratio(step: f64, finest: f64) -> Option<u32> {
    let r = step / finest;
    let k = r.log2().round();
    ((r - k.exp2()).abs() <= 1e-9 * r && k >= 0.0).then_some(k as u32)
}

impl PropagatorCache {
    pub fn build(backend: &Backend, a: &CsrMatrix, steps: &[f64]) -> Result<Self> {
        let mut steps: Vec<f64> = steps.to_vec();
        steps.sort_by(f64::total_cmp);
        steps.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
        let Some(&finest) = steps.first() else {
            return Ok(Self::default());
        };
        let ladder: Option<Vec<u32>> = steps.iter().map(|&s| power_of_two_ratio(s, finest)).collect();
        let entries = match ladder {
            Some(ks) => {
                let top = *ks.iter().max().expect("nonempty") as usize;
                let all = Propagator::ladder(backend, a, finest, top + 1)?;
                all.into_iter()
                    .enumerate()
                    .filter(|(k, _)| ks.contains(&(*k as u32)))
                    .map(|(_, p)| Arc::new(p))
                    .collect()
            }
            None => steps
                .iter()
                .map(|&s| Propagator::new(backend, a, s).map(Arc::new))
                .collect::<std::result::Result<Vec<_>, _>>()?,
        };
        Ok(Self { entries })
    }

    pub fn get(&self, tau: f64) -> Option<Arc<Propagator>> {
        self.entries.iter().find(|p| (p.tau() - tau).abs() <= 1e-12 * tau).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// A problem prepared for sweeping.
pub struct Sweep {
    pub spec: ProblemSpec,
    pub problem: Problem,
    pub opts: SweepOptions,
}

impl Sweep {
    pub fn prepare(spec: &ProblemSpec, opts: &SweepOptions) -> Result<Self> {
        Ok(Self {
            spec: *spec,
            problem: spec.build()?,
            opts: *opts,
        })
    }

    pub fn reference_step(&self) -> f64 {
        self.opts
            .reference_step
            .unwrap_or_else(|| self.spec.reference_step(self.opts.scale))
    }

    fn checkpoint(taus: &[f64]) -> Result<f64> {
        let finest = taus.iter().copied().fold(f64::INFINITY, f64::min);
        if !(finest > 0.0) || !finest.is_finite() {
            return Err(Error::usage("step sizes must be positive"));
        }
        for &t in taus {
            let r = t / finest;
            if (r - r.round()).abs() > 1e-9 * r {
                return Err(Error::usage(format!(
                    "step {t} is not a multiple of the finest step {finest}"
                )));
            }
        }
        Ok(finest)
    }

    /// RK4 solution with checkpoints at every multiple of the finest step.
    pub fn reference(&self, taus: &[f64]) -> Result<Trajectory> {
        let every = Self::checkpoint(taus)?;
        rk4_reference(&self.problem, self.reference_step(), every).map_err(Error::Reference)
    }

    fn backend(&self) -> Backend {
        self.opts.backend.resolve(self.problem.diffusion.dim())
    }

    pub fn propagators(&self, schemes: &[Scheme], taus: &[f64]) -> Result<PropagatorCache> {
        let mut steps = Vec::new();
        for &s in schemes {
            for &t in taus {
                match s {
                    Scheme::StrangM3 | Scheme::StrangDiffusionOuter => steps.push(0.5 * t),
                    Scheme::Rk4Reference => {}
                    _ => steps.push(t),
                }
            }
        }
        PropagatorCache::build(&self.backend(), self.problem.diffusion.matrix(), &steps)
    }

    /// Runs every `(scheme, τ)` pair and measures it against `reference`.
    /// Failed runs become rows with a failure status.
    pub fn run(&self, schemes: &[Scheme], taus: &[f64], reference: &Trajectory) -> Result<ConvergenceReport> {
        if schemes.is_empty() || taus.is_empty() {
            return Err(Error::usage("a sweep needs at least one scheme and one step size"));
        }
        if schemes.contains(&Scheme::Rk4Reference) {
            return Err(Error::usage("the RK4 reference cannot be part of a sweep"));
        }
        Self::checkpoint(taus)?;
        let cache = self.propagators(schemes, taus)?;
        let mut report = ConvergenceReport {
            meta: self.meta(),
            ..Default::default()
        };
        let unknowns = self.problem.diffusion.dim();
        for &scheme in schemes {
            for &tau in taus {
                let cfg = self.opts.scheme_config(scheme, tau, self.problem.t_final, unknowns);
                let run = Integrator::with_propagators(&self.problem, cfg, cache.get(tau), cache.get(0.5 * tau))
                    .and_then(|it| it.run());
                let measured = run.and_then(|traj| error_norm(&traj, reference).map(|e| (traj, e)));
                let (row, diag) = match measured {
                    Ok((traj, error)) => (
                        Row {
                            scheme,
                            tau,
                            error: Some(error),
                            diffusion_flows: traj.counters.diffusion,
                            reaction_flows: traj.counters.reaction,
                            status: if error.is_finite() { Status::Ok } else { Status::NonFinite },
                        },
                        Diagnostics {
                            max_corrector: traj.corrector_norms.iter().copied().fold(0.0, f64::max),
                            max_trace_error: traj.trace_errors.iter().copied().fold(0.0, f64::max),
                            message: None,
                        },
                    ),
                    Err(err) => (
                        Row {
                            scheme,
                            tau,
                            error: None,
                            diffusion_flows: 0,
                            reaction_flows: 0,
                            status: Status::of(&err),
                        },
                        Diagnostics {
                            message: Some(err.to_string()),
                            ..Default::default()
                        },
                    ),
                };
                report.rows.push(row);
                report.diagnostics.push(diag);
            }
        }
        Ok(report)
    }

    fn meta(&self) -> Vec<(String, String)> {
        let g = self.problem.diffusion.grid();
        let grid = (0..g.dim())
            .map(|a| g.interior_per_axis(a).to_string())
            .collect::<Vec<_>>()
            .join("x");
        let backend = self.backend();
        let mut meta = vec![
            ("problem", self.spec.label()),
            ("grid", grid),
            ("t_final", self.problem.t_final.to_string()),
            ("scale", self.opts.scale.name().to_string()),
            ("backend", backend.name().to_string()),
            ("reference_step", format_sci(self.reference_step())),
            ("substeps", self.opts.substeps.to_string()),
            ("extension", format!("{:?}", self.opts.extension).to_ascii_lowercase()),
        ];
        if let Backend::Krylov(p) = backend {
            meta.push(("krylov_tol", format_sci(p.tol)));
            meta.push(("krylov_dim", p.max_dim.to_string()));
        }
        let s = &self.opts.smoother;
        meta.push((
            "multigrid",
            format!(
                "cycles={} pre={} post={} damping={} tol={}",
                s.cycles,
                s.pre_sweeps,
                s.post_sweeps,
                s.damping,
                s.tol.map_or("none".to_string(), |t| t.to_string())
            ),
        ));
        meta.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

/// Builds the problem, computes the reference once and sweeps.
pub fn run_convergence(
    spec: &ProblemSpec,
    schemes: &[Scheme],
    taus: &[f64],
    opts: &SweepOptions,
) -> Result<ConvergenceReport> {
    if schemes.is_empty() {
        return Err(Error::usage("empty scheme list"));
    }
    let sweep = Sweep::prepare(spec, opts)?;
    let reference = sweep.reference(taus)?;
    sweep.run(schemes, taus, &reference)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_detection() {
        assert_eq!(power_of_two_ratio(0.02, 0.02 / 64.0), Some(6));
        assert_eq!(power_of_two_ratio(0.03, 0.01), None);
        let p = ProblemSpec::quadratic1d(1.0);
        let sweep = Sweep::prepare(&p, &SweepOptions::default()).unwrap();
        let taus = p.sweep_steps();
        let cache = sweep.propagators(&[Scheme::StrangM3, Scheme::StrangM5b], &taus).unwrap();
        assert_eq!(cache.len(), 8);
        for t in taus {
            assert!(cache.get(t).is_some() && cache.get(0.5 * t).is_some());
        }
    }

    #[test]
    fn steps_must_nest() {
        let p = ProblemSpec::quadratic1d(1.0);
        let sweep = Sweep::prepare(&p, &SweepOptions::default()).unwrap();
        assert!(matches!(sweep.reference(&[0.02, 0.03]), Err(Error::Usage(_))));
    }
}
