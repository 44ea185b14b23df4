//! Splitting integrators and the method-of-lines RK4 reference solver.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::corrector::{
    boundary_trace_m3, boundary_trace_m5a, boundary_trace_m5b, extend_analytic, trace_discrepancy, AnalyticExtension,
    Corrector, HarmonicExtension, Provenance, Variant, DEFAULT_CAP,
};
use crate::error::{Error, Result};
use crate::flows::{diffusion_flow, projection_flow, reaction_flow, reaction_minus_q_flow, FlowCounters, Reaction};
use crate::linalg::LinearOperator;
use crate::matfun::{Backend, Propagator};
use crate::mesh::{BoundaryValues, DiscreteDiffusion, StateField};
use crate::multigrid::SmootherConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// `φ^f_{τ/2} ∘ φ^D_τ ∘ φ^f_{τ/2}`
    Strang,
    /// `φ^D_{τ/2} ∘ φ^f_τ ∘ φ^D_{τ/2}`
    StrangDiffusionOuter,
    StrangM3,
    StrangM5a,
    StrangM5b,
    Rk4Reference,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Strang,
        Scheme::StrangDiffusionOuter,
        Scheme::StrangM3,
        Scheme::StrangM5a,
        Scheme::StrangM5b,
        Scheme::Rk4Reference,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Strang => "strang",
            Scheme::StrangDiffusionOuter => "strang-d",
            Scheme::StrangM3 => "m3",
            Scheme::StrangM5a => "m5a",
            Scheme::StrangM5b => "m5b",
            Scheme::Rk4Reference => "rk4",
        }
    }

    /// Whether adjacent reaction half-steps of consecutive steps may merge.
    pub fn fusable(self) -> bool {
        matches!(self, Scheme::Strang | Scheme::StrangM5b)
    }

    pub fn variant(self) -> Variant {
        match self {
            Scheme::StrangM3 => Variant::M3,
            Scheme::StrangM5a => Variant::M5a,
            Scheme::StrangM5b => Variant::M5b,
            _ => Variant::None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let scheme = match lower.as_str() {
            "strang" => Scheme::Strang,
            "strang-d" | "strang2" => Scheme::StrangDiffusionOuter,
            "m3" | "strangm3" => Scheme::StrangM3,
            "m5a" | "strangm5a" => Scheme::StrangM5a,
            "m5b" | "strangm5b" => Scheme::StrangM5b,
            "rk4" | "rk4ref" => Scheme::Rk4Reference,
            _ => return Err(Error::Config(format!("unknown scheme '{s}'"))),
        };
        Ok(scheme)
    }
}

/// How the interior of the corrector is filled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extension {
    /// Analytic when the problem supplies one for the scheme, else harmonic.
    Auto,
    Harmonic,
    Analytic,
    /// Forces `q ≡ 0`.
    Zero,
}

impl FromStr for Extension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auto" => Ok(Extension::Auto),
            "harmonic" => Ok(Extension::Harmonic),
            "analytic" => Ok(Extension::Analytic),
            "zero" => Ok(Extension::Zero),
            _ => Err(Error::Config(format!("unknown corrector extension '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrectorRule {
    pub variant: Variant,
    pub extension: Extension,
    pub smoother: SmootherConfig,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub tau: f64,
    pub t_final: f64,
    pub fused: bool,
    /// RK4 substeps per half-step reaction flow; full steps use twice as many.
    pub substeps: usize,
    pub backend: Backend,
    pub extension: Extension,
    pub smoother: SmootherConfig,
    pub corrector_cap: f64,
}

impl SchemeConfig {
    /// Defaults: fused when the scheme allows it, 5 substeps, dense backend,
    /// automatic corrector extension.
    pub fn new(scheme: Scheme, tau: f64, t_final: f64) -> Self {
        Self {
            scheme,
            tau,
            t_final,
            fused: scheme.fusable(),
            substeps: 5,
            backend: Backend::default(),
            extension: Extension::Auto,
            smoother: SmootherConfig::default(),
            corrector_cap: DEFAULT_CAP,
        }
    }

    pub fn corrector_rule(&self) -> CorrectorRule {
        let variant = self.scheme.variant();
        CorrectorRule {
            variant,
            extension: if variant == Variant::None { Extension::Zero } else { self.extension },
            smoother: self.smoother,
        }
    }

    /// `N = T/τ`, rejected unless it is a positive integer.
    pub fn steps(&self) -> Result<usize> {
        steps_for(self.t_final, self.tau)
    }

    pub fn validate(&self) -> Result<usize> {
        if self.fused && !self.scheme.fusable() {
            return Err(Error::Config(format!("scheme {} cannot be fused", self.scheme)));
        }
        if self.substeps == 0 {
            return Err(Error::Config("reaction substeps must be at least 1".into()));
        }
        if !(self.corrector_cap > 0.0) {
            return Err(Error::Config("corrector cap must be positive".into()));
        }
        self.steps()
    }
}

fn steps_for(t_final: f64, tau: f64) -> Result<usize> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::ZeroStep);
    }
    let ratio = t_final / tau;
    let n = libm::round(ratio);
    if !(n >= 1.0) || (n - ratio).abs() > 1e-9 * n {
        return Err(Error::StepCount { ratio });
    }
    Ok(n as usize)
}

/// A semidiscrete problem: diffusion with eliminated boundary conditions,
/// reaction term and initial state.
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub diffusion: DiscreteDiffusion,
    pub reaction: Arc<dyn Reaction>,
    pub initial: StateField,
    pub t_final: f64,
    /// Closed-form corrector for the three-part splitting, if known.
    pub m3_extension: Option<Arc<dyn AnalyticExtension>>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("grid", self.diffusion.grid())
            .field("t_final", &self.t_final)
            .field("m3_extension", &self.m3_extension.is_some())
            .finish()
    }
}

/// States at `t_n = nτ`, flow counts and per-step corrector diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<StateField>,
    pub counters: FlowCounters,
    /// `‖q_n‖∞` per step (empty for uncorrected schemes).
    pub corrector_norms: Vec<f64>,
    /// Relative mismatch between `Bq_n` and its requested trace, per step.
    pub trace_errors: Vec<f64>,
}

impl Trajectory {
    fn start(u0: StateField) -> Self {
        Self {
            times: vec![0.0],
            states: vec![u0],
            counters: FlowCounters::default(),
            corrector_norms: Vec::new(),
            trace_errors: Vec::new(),
        }
    }

    fn push(&mut self, t: f64, u: StateField) {
        self.times.push(t);
        self.states.push(u);
    }

    fn record(&mut self, q: &Corrector, trace_error: f64) {
        self.corrector_norms.push(q.sup_norm());
        self.trace_errors.push(trace_error);
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[StateField] {
        &self.states
    }

    pub fn last(&self) -> &StateField {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Output of a corrected step.
#[derive(Clone, Debug)]
pub struct Step {
    pub state: StateField,
    pub corrector: Corrector,
    pub trace_error: f64,
}

/// Integrator for one problem and configuration, holding the propagators
/// and the multigrid hierarchy across steps.
pub struct Integrator<'p> {
    problem: &'p Problem,
    cfg: SchemeConfig,
    steps: usize,
    full: Option<Arc<Propagator>>,
    half: Option<Arc<Propagator>>,
    harmonic: Option<HarmonicExtension>,
    analytic: Option<Arc<dyn AnalyticExtension>>,
}

impl<'p> Integrator<'p> {
    pub fn new(problem: &'p Problem, cfg: SchemeConfig) -> Result<Self> {
        Self::with_propagators(problem, cfg, None, None)
    }

    /// Like [`Integrator::new`], reusing propagators for `τ` and `τ/2` when
    /// given; missing ones are built.
    pub fn with_propagators(
        problem: &'p Problem,
        cfg: SchemeConfig,
        full: Option<Arc<Propagator>>,
        half: Option<Arc<Propagator>>,
    ) -> Result<Self> {
        let steps = cfg.validate()?;
        let d = &problem.diffusion;
        let a = d.matrix();
        let tau = cfg.tau;
        let build = |given: Option<Arc<Propagator>>, step: f64| -> Result<Arc<Propagator>> {
            match given {
                Some(p) if (p.tau() - step).abs() <= 1e-15 * step => Ok(p),
                Some(p) => Err(Error::Config(format!("propagator for step {} given where {step} is needed", p.tau()))),
                None => Ok(Arc::new(Propagator::new(&cfg.backend, a, step)?)),
            }
        };
        let (mut full_p, mut half_p) = (None, None);
        match cfg.scheme {
            Scheme::Strang | Scheme::StrangM5a | Scheme::StrangM5b => full_p = Some(build(full, tau)?),
            Scheme::StrangDiffusionOuter | Scheme::StrangM3 => half_p = Some(build(half, 0.5 * tau)?),
            Scheme::Rk4Reference => {}
        }

        let rule = cfg.corrector_rule();
        let mut harmonic = None;
        let mut analytic = None;
        if rule.variant != Variant::None {
            let offered = if rule.variant == Variant::M3 { problem.m3_extension.clone() } else { None };
            match (rule.extension, offered) {
                (Extension::Zero, _) => {}
                (Extension::Analytic | Extension::Auto, Some(e)) => analytic = Some(e),
                (Extension::Analytic, None) => {
                    return Err(Error::Config(format!(
                        "no analytic corrector for scheme {} on problem {}",
                        cfg.scheme, problem.name
                    )))
                }
                (Extension::Harmonic | Extension::Auto, _) => harmonic = Some(HarmonicExtension::new(d, rule.smoother)),
            }
        }
        Ok(Self {
            problem,
            cfg,
            steps,
            full: full_p,
            half: half_p,
            harmonic,
            analytic,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn d(&self) -> &DiscreteDiffusion {
        &self.problem.diffusion
    }

    fn f(&self) -> &dyn Reaction {
        self.problem.reaction.as_ref()
    }

    fn half_flow(&self, u: &StateField, counters: &mut FlowCounters) -> Result<StateField> {
        reaction_flow(self.f(), u, 0.5 * self.cfg.tau, self.cfg.substeps, counters)
    }

    fn full_flow(&self, u: &StateField, counters: &mut FlowCounters) -> Result<StateField> {
        reaction_flow(self.f(), u, self.cfg.tau, 2 * self.cfg.substeps, counters)
    }

    fn full_propagator(&self) -> Result<&Propagator> {
        self.full.as_deref().ok_or_else(|| Error::Config("no full-step propagator".into()))
    }

    fn half_propagator(&self) -> Result<&Propagator> {
        self.half.as_deref().ok_or_else(|| Error::Config("no half-step propagator".into()))
    }

    fn extend(&self, trace: &BoundaryValues, u_n: &StateField) -> Result<Corrector> {
        let d = self.d();
        let q = if let Some(h) = &self.harmonic {
            h.extend(d, trace)?
        } else if let Some(e) = &self.analytic {
            extend_analytic(d, e.sample(u_n), trace, e.trace_tolerance(d.grid()))?
        } else {
            Corrector::zero(*d.grid())
        };
        q.check_cap(self.cfg.corrector_cap)?;
        Ok(q)
    }

    fn finish_corrector(&self, q: Corrector, trace: BoundaryValues) -> (Corrector, f64) {
        if q.provenance() == Provenance::Zero {
            return (q, 0.0);
        }
        let (err, _) = trace_discrepancy(self.d(), q.values(), &trace);
        (q, err)
    }

    /// One unfused classical Strang step from `t_n`, in the ordering of the
    /// configured scheme.
    pub fn step_strang(&self, u: &StateField, t_n: f64, counters: &mut FlowCounters) -> Result<StateField> {
        let d = self.d();
        if self.cfg.scheme == Scheme::StrangDiffusionOuter {
            let half = self.half_propagator()?;
            let v = diffusion_flow(d, half, u, t_n, None, counters)?;
            let v = self.full_flow(&v, counters)?;
            return diffusion_flow(d, half, &v, t_n + 0.5 * self.cfg.tau, None, counters);
        }
        let v = self.half_flow(u, counters)?;
        let v = diffusion_flow(d, self.full_propagator()?, &v, t_n, None, counters)?;
        self.half_flow(&v, counters)
    }

    /// One step of `φ^{D+q}_{τ/2} ∘ φ^{f-q}_τ ∘ φ^{D+q}_{τ/2}` with
    /// `Bq = Bf(u_n)`.
    pub fn step_m3(&self, u: &StateField, t_n: f64, counters: &mut FlowCounters) -> Result<Step> {
        let d = self.d();
        let half = self.half_propagator()?;
        let trace = boundary_trace_m3(d, u, self.f());
        let q = self.extend(&trace, u)?;
        let g = (q.provenance() != Provenance::Zero).then(|| q.interior());
        let v = diffusion_flow(d, half, u, t_n, g.as_deref(), counters)?;
        let v = reaction_minus_q_flow(self.f(), q.values(), &v, self.cfg.tau, 2 * self.cfg.substeps, counters)?;
        let state = diffusion_flow(d, half, &v, t_n + 0.5 * self.cfg.tau, g.as_deref(), counters)?;
        let (corrector, trace_error) = self.finish_corrector(q, trace);
        Ok(Step {
            state,
            corrector,
            trace_error,
        })
    }

    /// Corrector and the projected-diffused state `φ^{-q}_{τ/2} ∘ φ^{D+q}_τ ∘
    /// φ^{-q}_{τ/2}(w)`, given `w = φ^f_{τ/2}(u_n)`.
    fn m5_core(&self, u: &StateField, w: &StateField, t_n: f64, counters: &mut FlowCounters) -> Result<(StateField, Corrector, f64)> {
        let d = self.d();
        let tau = self.cfg.tau;
        let trace = match self.cfg.scheme {
            Scheme::StrangM5b => boundary_trace_m5b(d, w, &d.boundary_data(t_n), tau)?,
            _ => boundary_trace_m5a(d, u, w, tau)?,
        };
        let q = self.extend(&trace, u)?;
        let v = if q.provenance() == Provenance::Zero {
            diffusion_flow(d, self.full_propagator()?, w, t_n, None, counters)?
        } else {
            let v = projection_flow(q.values(), w, 0.5 * tau);
            let v = diffusion_flow(d, self.full_propagator()?, &v, t_n, Some(&q.interior()), counters)?;
            projection_flow(q.values(), &v, 0.5 * tau)
        };
        let (q, err) = self.finish_corrector(q, trace);
        Ok((v, q, err))
    }

    /// One unfused step of the five-part splitting.
    pub fn step_m5(&self, u: &StateField, t_n: f64, counters: &mut FlowCounters) -> Result<Step> {
        let w = self.half_flow(u, counters)?;
        let (v, corrector, trace_error) = self.m5_core(u, &w, t_n, counters)?;
        let state = self.half_flow(&v, counters)?;
        Ok(Step {
            state,
            corrector,
            trace_error,
        })
    }

    pub fn run(&self) -> Result<Trajectory> {
        let u0 = self.problem.initial.clone();
        if self.cfg.scheme == Scheme::Rk4Reference {
            return rk4_reference(self.problem, self.cfg.tau, self.cfg.tau);
        }
        if self.cfg.fused {
            return self.run_fused(u0);
        }
        let mut traj = Trajectory::start(u0);
        let mut counters = FlowCounters::default();
        let tau = self.cfg.tau;
        for n in 0..self.steps {
            let t_n = n as f64 * tau;
            let u = traj.last();
            let next = match self.cfg.scheme {
                Scheme::Strang | Scheme::StrangDiffusionOuter => self.step_strang(u, t_n, &mut counters),
                Scheme::StrangM3 => self.step_m3(u, t_n, &mut counters).map(|s| {
                    traj.record(&s.corrector, s.trace_error);
                    s.state
                }),
                _ => self.step_m5(u, t_n, &mut counters).map(|s| {
                    traj.record(&s.corrector, s.trace_error);
                    s.state
                }),
            }
            .map_err(|e| e.at_step(n))?;
            traj.push((n + 1) as f64 * tau, next);
        }
        traj.counters = counters;
        Ok(traj)
    }

    /// Fused loop: the closing reaction half-step of one step and the opening
    /// one of the next are a single full flow. The state reported at each
    /// interior checkpoint is completed with an extra half flow that is not
    /// part of the propagation and is not counted.
    fn run_fused(&self, u0: StateField) -> Result<Trajectory> {
        let d = self.d();
        let tau = self.cfg.tau;
        let mut counters = FlowCounters::default();
        let mut scratch = FlowCounters::default();
        let mut traj = Trajectory::start(u0);
        let mut w = self.half_flow(traj.last(), &mut counters).map_err(|e| e.at_step(0))?;
        for n in 0..self.steps {
            let t_n = n as f64 * tau;
            let v = if self.cfg.scheme == Scheme::StrangM5b {
                let (v, q, err) = self.m5_core(traj.last(), &w, t_n, &mut counters).map_err(|e| e.at_step(n))?;
                traj.record(&q, err);
                v
            } else {
                diffusion_flow(d, self.full_propagator()?, &w, t_n, None, &mut counters).map_err(|e| e.at_step(n))?
            };
            let t_next = (n + 1) as f64 * tau;
            if n + 1 == self.steps {
                let last = self.half_flow(&v, &mut counters).map_err(|e| e.at_step(n))?;
                traj.push(t_next, last);
            } else {
                let out = self.half_flow(&v, &mut scratch).map_err(|e| e.at_step(n))?;
                traj.push(t_next, out);
                w = self.full_flow(&v, &mut counters).map_err(|e| e.at_step(n + 1))?;
            }
        }
        traj.counters = counters;
        Ok(traj)
    }
}

/// Runs `cfg` on `problem`.
pub fn integrate(problem: &Problem, cfg: &SchemeConfig) -> Result<Trajectory> {
    Integrator::new(problem, *cfg)?.run()
}

/// Largest RK4 step for which `τ ρ(A)` stays inside the real stability
/// interval, with `ρ(A)` bounded by the Gershgorin radius.
pub fn rk4_stability_limit(d: &DiscreteDiffusion) -> f64 {
    let a = d.matrix();
    let radius = (0..a.nrows())
        .map(|r| a.row(r).map(|(_, v)| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    2.785 / radius
}

/// Method-of-lines RK4 on `u' = A u + c(t) + f(u)` with step `tau_ref`,
/// keeping the states at multiples of `checkpoint`.
pub fn rk4_reference(problem: &Problem, tau_ref: f64, checkpoint: f64) -> Result<Trajectory> {
    let steps = steps_for(problem.t_final, tau_ref)?;
    let every = steps_for(checkpoint, tau_ref)?;
    if steps % every != 0 {
        return Err(Error::Config(format!(
            "checkpoint interval {checkpoint} does not divide the final time {}",
            problem.t_final
        )));
    }
    let d = &problem.diffusion;
    let a = d.matrix();
    let f = problem.reaction.as_ref();
    let grid = *d.grid();
    let interior_nodes = grid.interior_nodes();
    let reaction_free = f.is_zero();
    let rhs = |t: f64, y: &[f64], out: &mut [f64]| -> Result<()> {
        let c = d.forcing(t);
        out.copy_from_slice(&c);
        a.apply_add(1.0, y, out);
        if !reaction_free {
            let full = d.apply_boundary_reconstruction(y, t)?;
            let fv = f.evaluate(&full);
            for (o, k) in out.iter_mut().zip(&interior_nodes) {
                *o += fv.values()[*k];
            }
        }
        Ok(())
    };

    let n = d.dim();
    let mut traj = Trajectory::start(problem.initial.clone());
    let mut y = problem.initial.interior();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut stage = vec![0.0; n];
    let h = tau_ref;
    for step in 0..steps {
        let t = step as f64 * h;
        rhs(t, &y, &mut k1)?;
        stage.iter_mut().zip(&y).zip(&k1).for_each(|((s, y), k)| *s = y + 0.5 * h * k);
        rhs(t + 0.5 * h, &stage, &mut k2)?;
        stage.iter_mut().zip(&y).zip(&k2).for_each(|((s, y), k)| *s = y + 0.5 * h * k);
        rhs(t + 0.5 * h, &stage, &mut k3)?;
        stage.iter_mut().zip(&y).zip(&k3).for_each(|((s, y), k)| *s = y + h * k);
        rhs(t + h, &stage, &mut k4)?;
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if y.iter().any(|v| !v.is_finite() || v.abs() > 1e100) {
            return Err(Error::Unstable { step });
        }
        if (step + 1) % every == 0 {
            let t_next = ((step + 1) / every) as f64 * checkpoint;
            traj.push(t_next, d.apply_boundary_reconstruction(&y, t_next)?);
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{QuadraticReaction, ZeroReaction};
    use crate::mesh::{build_laplacian, BoundaryKind, BoundarySpec, Face, Grid};

    fn problem(n: usize, f: Arc<dyn Reaction>) -> Problem {
        let bc = BoundarySpec::new(
            vec![(Face::Left, BoundaryKind::Dirichlet), (Face::Right, BoundaryKind::Neumann)],
            |face, _, t| if face == Face::Left { 1.0 + t } else { 0.5 },
        );
        let d = build_laplacian(Grid::new_1d(n).unwrap(), bc).unwrap();
        let u0 = d.grid().sample(|p| 1.0 + 0.5 * p[0]);
        let initial = d.apply_boundary_reconstruction(&u0.interior(), 0.0).unwrap();
        Problem {
            name: "test".into(),
            diffusion: d,
            reaction: f,
            initial,
            t_final: 0.1,
            m3_extension: None,
        }
    }

    #[test]
    fn step_count_must_be_integral() {
        assert_eq!(SchemeConfig::new(Scheme::Strang, 0.02, 0.1).steps().unwrap(), 5);
        assert_eq!(SchemeConfig::new(Scheme::Strang, 0.1 / 1024.0, 0.1).steps().unwrap(), 1024);
        assert!(matches!(
            SchemeConfig::new(Scheme::Strang, 0.03, 0.1).steps(),
            Err(Error::StepCount { .. })
        ));
        assert_eq!(SchemeConfig::new(Scheme::Strang, 0.0, 0.1).steps(), Err(Error::ZeroStep));
        let mut cfg = SchemeConfig::new(Scheme::StrangM5a, 0.02, 0.1);
        cfg.fused = true;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("lie".parse::<Scheme>().is_err());
    }

    #[test]
    fn counters_follow_cost_table() {
        let p = problem(20, Arc::new(QuadraticReaction::uniform(&Grid::new_1d(20).unwrap(), 1.0)));
        for (scheme, fused, total) in [
            (Scheme::Strang, true, 2 * 10 + 1),
            (Scheme::Strang, false, 30),
            (Scheme::StrangM3, false, 30),
            (Scheme::StrangM5a, false, 30),
            (Scheme::StrangM5b, true, 21),
            (Scheme::StrangM5b, false, 30),
        ] {
            let mut cfg = SchemeConfig::new(scheme, 0.01, 0.1);
            cfg.fused = fused;
            let traj = integrate(&p, &cfg).unwrap();
            assert_eq!(traj.counters.total(), total, "{scheme} fused={fused}");
            assert_eq!(traj.len(), 11);
            for (n, t) in traj.times().iter().enumerate() {
                assert_eq!(*t, n as f64 * 0.01);
            }
        }
    }

    #[test]
    fn reaction_free_schemes_follow_exact_diffusion() {
        let p = problem(30, Arc::new(ZeroReaction));
        let exact = integrate(&p, &SchemeConfig::new(Scheme::Strang, 0.1, 0.1)).unwrap();
        for scheme in [Scheme::StrangM3, Scheme::StrangM5a, Scheme::StrangM5b] {
            let traj = integrate(&p, &SchemeConfig::new(scheme, 0.025, 0.1)).unwrap();
            let diff = traj.last().minus_scaled(1.0, exact.last()).max_abs();
            assert!(diff < 1e-9, "{scheme}: {diff}");
        }
    }

    #[test]
    fn rk4_detects_instability() {
        let p = problem(100, Arc::new(ZeroReaction));
        let limit = rk4_stability_limit(&p.diffusion);
        let tau = 0.1 / libm::floor(0.1 / (2.0 * limit));
        assert!(matches!(rk4_reference(&p, tau, 0.1), Err(Error::Unstable { .. })));
        let tau = 0.1 / libm::ceil(0.1 / (0.9 * limit));
        assert!(rk4_reference(&p, tau, 0.1).is_ok());
    }
}
