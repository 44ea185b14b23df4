//! Correctors `q_n`: boundary traces and their extension into the domain.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flows::Reaction;
use crate::mesh::{BoundaryValues, DiscreteDiffusion, Grid, StateField};
use crate::multigrid::{Multigrid, SmootherConfig};

/// Default bound on `‖q‖∞`.
pub const DEFAULT_CAP: f64 = 1e8;

/// Default relative tolerance of the trace-consistency check.
pub const TRACE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    Harmonic,
    Zero,
}

/// Which boundary condition the corrector satisfies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// `Bq = (2/τ)(Bφ^f_{τ/2}(u_n) - Bu_n)`
    M5a,
    /// `Bq = (2/τ)(Bφ^f_{τ/2}(u_n) - b(t_n))`
    M5b,
    /// `Bq = Bf(u_n)`
    M3,
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Corrector {
    values: StateField,
    trace: BoundaryValues,
    provenance: Provenance,
}

impl Corrector {
    pub fn zero(grid: Grid) -> Self {
        Self {
            values: StateField::zeros(grid),
            trace: BoundaryValues::zeros(&grid),
            provenance: Provenance::Zero,
        }
    }

    /// Full field, boundary nodes included.
    pub fn values(&self) -> &StateField {
        &self.values
    }

    pub fn interior(&self) -> Vec<f64> {
        self.values.interior()
    }

    /// The trace this corrector was built for.
    pub fn trace(&self) -> &BoundaryValues {
        &self.trace
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.max_abs()
    }

    /// Fails unless every value is finite and `‖q‖∞ ≤ cap`.
    pub fn check_cap(&self, cap: f64) -> Result<()> {
        let norm = self.sup_norm();
        if !self.values.is_finite() || !norm.is_finite() {
            return Err(Error::NonFinite);
        }
        if norm > cap {
            return Err(Error::CorrectorTooLarge { norm, cap });
        }
        Ok(())
    }
}

fn check_step(tau: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::ZeroStep);
    }
    Ok(())
}

/// `(2/τ)(Bw - Bu_n)` with `w = φ^f_{τ/2}(u_n)`.
pub fn boundary_trace_m5a(d: &DiscreteDiffusion, u_n: &StateField, w: &StateField, tau: f64) -> Result<BoundaryValues> {
    check_step(tau)?;
    let bw = d.apply_boundary_operator(w);
    let bu = d.apply_boundary_operator(u_n);
    Ok(BoundaryValues::scaled_difference(2.0 / tau, &bw, &bu))
}

/// `(2/τ)(Bw - b(t_n))` with `w = φ^f_{τ/2}(u_n)`.
pub fn boundary_trace_m5b(d: &DiscreteDiffusion, w: &StateField, b_n: &BoundaryValues, tau: f64) -> Result<BoundaryValues> {
    check_step(tau)?;
    let bw = d.apply_boundary_operator(w);
    Ok(BoundaryValues::scaled_difference(2.0 / tau, &bw, b_n))
}

/// `B f(u_n)`
pub fn boundary_trace_m3(d: &DiscreteDiffusion, u_n: &StateField, f: &dyn Reaction) -> BoundaryValues {
    d.apply_boundary_operator(&f.evaluate(u_n))
}

/// Largest relative discrepancy between `Bq` and `trace` over owned face
/// nodes, with the node where it occurs.
pub fn trace_discrepancy(d: &DiscreteDiffusion, q: &StateField, trace: &BoundaryValues) -> (f64, Option<(crate::mesh::Face, usize)>) {
    let bq = d.apply_boundary_operator(q);
    let scale = trace.max_abs().max(bq.max_abs());
    if scale == 0.0 {
        return (0.0, None);
    }
    let mut worst = (0.0, None);
    for (face, want) in trace.iter() {
        for (k, (w, got)) in want.iter().zip(bq.face(face)).enumerate() {
            if !d.owns_face_node(face, k) {
                continue;
            }
            let rel = (w - got).abs() / scale;
            if rel > worst.0 || rel.is_nan() {
                worst = (rel, Some((face, k)));
            }
        }
    }
    worst
}

fn check_trace(d: &DiscreteDiffusion, q: &StateField, trace: &BoundaryValues, tol: f64) -> Result<()> {
    match trace_discrepancy(d, q, trace) {
        (rel, Some((face, index))) if !(rel <= tol) => Err(Error::TraceMismatch {
            face,
            index,
            discrepancy: rel,
        }),
        _ => Ok(()),
    }
}

/// Discrete harmonic extension with a prebuilt multigrid hierarchy, reused
/// across the steps of a run.
#[derive(Clone, Debug)]
pub struct HarmonicExtension {
    mg: Multigrid,
    cfg: SmootherConfig,
}

impl HarmonicExtension {
    pub fn new(d: &DiscreteDiffusion, cfg: SmootherConfig) -> Self {
        Self {
            mg: Multigrid::new(d),
            cfg,
        }
    }

    pub fn config(&self) -> &SmootherConfig {
        &self.cfg
    }

    /// Approximate solution of `Δq = 0`, `Bq = trace`. The boundary nodes
    /// are reconstructed from `trace`, so the trace holds on every owned face
    /// node whatever the smoother accuracy.
    pub fn extend(&self, d: &DiscreteDiffusion, trace: &BoundaryValues) -> Result<Corrector> {
        if trace.iter().any(|(_, v)| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite);
        }
        if trace.is_zero() {
            return Ok(Corrector {
                trace: trace.clone(),
                ..Corrector::zero(*d.grid())
            });
        }
        let rhs: Vec<f64> = d.forcing_from(trace).into_iter().map(|c| -c).collect();
        let solve = self.mg.solve(&rhs, None, &self.cfg)?;
        let values = d.reconstruct_with(&solve.x, trace)?;
        let tol = TRACE_TOL.max(10.0 * self.cfg.tol.unwrap_or(0.0));
        check_trace(d, &values, trace, tol)?;
        Ok(Corrector {
            values,
            trace: trace.clone(),
            provenance: Provenance::Harmonic,
        })
    }
}

/// One-off harmonic extension; builds the multigrid hierarchy each call.
pub fn extend_harmonic(d: &DiscreteDiffusion, trace: &BoundaryValues, cfg: &SmootherConfig) -> Result<Corrector> {
    HarmonicExtension::new(d, *cfg).extend(d, trace)
}

/// A closed-form corrector `q_n = E(u_n)`.
pub trait AnalyticExtension: Send + Sync {
    fn sample(&self, u_n: &StateField) -> StateField;

    /// Relative tolerance of the trace check against the requested trace.
    fn trace_tolerance(&self, _grid: &Grid) -> f64 {
        TRACE_TOL
    }
}

/// Wraps a sampled closed-form corrector after checking that its discrete
/// boundary trace matches `trace` within `tol` (relative).
pub fn extend_analytic(d: &DiscreteDiffusion, sampled: StateField, trace: &BoundaryValues, tol: f64) -> Result<Corrector> {
    if sampled.grid() != d.grid() {
        return Err(Error::Dimension("corrector sampled on another grid".into()));
    }
    if !sampled.is_finite() {
        return Err(Error::NonFinite);
    }
    check_trace(d, &sampled, trace, tol)?;
    Ok(Corrector {
        values: sampled,
        trace: trace.clone(),
        provenance: Provenance::Analytic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{reaction_flow, FlowCounters, QuadraticReaction, ZeroReaction};
    use crate::mesh::{build_laplacian, BoundaryKind, BoundarySpec, Face};
    use alloc::vec;

    fn mixed_1d(n: usize, left: f64, right: f64) -> DiscreteDiffusion {
        let bc = BoundarySpec::new(
            vec![(Face::Left, BoundaryKind::Dirichlet), (Face::Right, BoundaryKind::Neumann)],
            move |face, _, _| if face == Face::Left { left } else { right },
        );
        build_laplacian(Grid::new_1d(n).unwrap(), bc).unwrap()
    }

    fn trace_1d(g: &Grid, left: f64, right: f64) -> BoundaryValues {
        BoundaryValues::from_fn(g, |f, _| if f == Face::Left { left } else { right })
    }

    #[test]
    fn zero_reaction_gives_zero_traces() {
        let d = mixed_1d(20, 1.0, 1.0);
        let u = d.grid().sample(|p| 1.0 + p[0]);
        let w = reaction_flow(&ZeroReaction, &u, 0.05, 5, &mut FlowCounters::default()).unwrap();
        assert!(boundary_trace_m5a(&d, &u, &w, 0.1).unwrap().is_zero());
        assert!(boundary_trace_m5b(&d, &w, &d.boundary_data(0.0), 0.1).unwrap().max_abs() < 1e-12);
        assert!(boundary_trace_m3(&d, &u, &ZeroReaction).is_zero());
        assert_eq!(boundary_trace_m5a(&d, &u, &w, 0.0), Err(Error::ZeroStep));
    }

    #[test]
    fn dirichlet_trace_recovers_source() {
        let d = mixed_1d(10, 1.0, 0.0);
        let tau = 0.01;
        let u = d.grid().sample(|_| 1.0);
        let w = d.grid().sample(|_| 1.0 + 0.5 * tau * 3.0);
        let tr = boundary_trace_m5a(&d, &u, &w, tau).unwrap();
        assert!((tr.face(Face::Left)[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_trace_extends_to_zero() {
        let d = mixed_1d(30, 0.0, 0.0);
        let q = extend_harmonic(&d, &BoundaryValues::zeros(d.grid()), &SmootherConfig::default()).unwrap();
        assert_eq!(q.provenance(), Provenance::Zero);
        assert_eq!(q.sup_norm(), 0.0);
    }

    #[test]
    fn harmonic_extension_is_affine_in_1d() {
        let (a, s) = (0.7, -1.3);
        let d = mixed_1d(500, 0.0, 0.0);
        let tr = trace_1d(d.grid(), a, s);
        let q = extend_harmonic(&d, &tr, &SmootherConfig::converged(1e-13)).unwrap();
        let g = d.grid();
        for k in 0..g.node_count() {
            let x = g.point(k)[0];
            assert!((q.values().values()[k] - (a + s * x)).abs() < 1e-8, "node {k}");
        }
    }

    #[test]
    fn default_smoother_still_matches_trace() {
        let d = mixed_1d(200, 0.0, 0.0);
        let tr = trace_1d(d.grid(), 2.0, 5.0);
        let q = extend_harmonic(&d, &tr, &SmootherConfig::default()).unwrap();
        let (rel, _) = trace_discrepancy(&d, q.values(), &tr);
        assert!(rel < 1e-12);
    }

    #[test]
    fn analytic_zero_with_nonzero_trace_fails() {
        let d = mixed_1d(20, 0.0, 0.0);
        let tr = trace_1d(d.grid(), 0.0, 1.0);
        let err = extend_analytic(&d, StateField::zeros(*d.grid()), &tr, TRACE_TOL).unwrap_err();
        assert!(matches!(err, Error::TraceMismatch { face: Face::Right, .. }), "{err:?}");
    }

    #[test]
    fn m5_traces_agree_when_boundary_consistent() {
        let d = mixed_1d(100, 1.0, 1.0);
        let g = *d.grid();
        let u0 = g.sample(|p| 1.0 + 2.0 / core::f64::consts::PI * (1.0 - libm::cos(core::f64::consts::PI * p[0] / 2.0)));
        let u0 = d.apply_boundary_reconstruction(&u0.interior(), 0.0).unwrap();
        let f = QuadraticReaction::uniform(&g, 1.0);
        let tau = 0.02;
        let w = reaction_flow(&f, &u0, tau / 2.0, 5, &mut FlowCounters::default()).unwrap();
        let a = boundary_trace_m5a(&d, &u0, &w, tau).unwrap();
        let b = boundary_trace_m5b(&d, &w, &d.boundary_data(0.0), tau).unwrap();
        for (face, va) in a.iter() {
            for (x, y) in va.iter().zip(b.face(face)) {
                assert!((x - y).abs() < 1e-13 * x.abs().max(1.0));
            }
        }
        // closed form at the Dirichlet end
        let want = 2.0 / tau * (1.0 / (1.0 - tau / 2.0) - 1.0);
        assert!((a.face(Face::Left)[0] - want).abs() < 1e-12);
    }

    #[test]
    fn cap_is_enforced() {
        let g = Grid::new_1d(4).unwrap();
        let mut q = Corrector::zero(g);
        q.values.values_mut()[2] = 2e8;
        assert!(matches!(q.check_cap(DEFAULT_CAP), Err(Error::CorrectorTooLarge { .. })));
        q.values.values_mut()[2] = f64::NAN;
        assert_eq!(q.check_cap(DEFAULT_CAP), Err(Error::NonFinite));
    }
}
