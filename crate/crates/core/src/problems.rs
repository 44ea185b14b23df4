//! The benchmark problems: a quadratic source, a nonlocal integral source
//! with time-dependent Dirichlet data, and a stiff 2D quadratic source.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{E, PI};

use libm::{cos, exp, pow, sin};

use crate::corrector::{AnalyticExtension, TRACE_TOL};
use crate::error::{Error, Result};
use crate::flows::{IntegralReaction, QuadraticReaction, Reaction};
use crate::mesh::{build_laplacian, BoundaryKind, BoundarySpec, Face, Grid, StateField};
use crate::schemes::Problem;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProblemKind {
    /// `f(u) = m u²`, `u(0) = 1`, `∂ₙu(1) = 1`.
    Quadratic1d { m: f64 },
    /// `f(u)(x) = -∫ u(s)⁴ / (1 + |x - s|)² ds`, `u(0, t) = 2(2 - t)`, `∂ₙu(1) = 0`.
    Integro1d,
    /// `f(u) = (1 - M sin πx sin πy) u²` on the unit square.
    Stiff2d { stiffness: f64 },
    /// `f(u) = (1 - M sin πx) u²` with the boundary data of `Quadratic1d`.
    Stiff1d { stiffness: f64 },
}

/// Resolution profile of the 2D problem and its reference run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Paper,
    Desk,
}

impl core::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "paper" => Ok(Scale::Paper),
            "desk" => Ok(Scale::Desk),
            _ => Err(Error::Config(format!("unknown scale '{s}'"))),
        }
    }
}

impl Scale {
    pub fn name(self) -> &'static str {
        match self {
            Scale::Paper => "paper",
            Scale::Desk => "desk",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    /// Interior points per axis.
    pub interior: usize,
    pub t_final: f64,
}

pub const INTERIOR_1D: usize = 500;
pub const INTERIOR_2D_PAPER: usize = 127;
pub const INTERIOR_2D_DESK: usize = 63;

/// Every benchmark at paper resolution.
pub fn builtin_problems() -> Vec<ProblemSpec> {
    vec![
        ProblemSpec::quadratic1d(1.0),
        ProblemSpec::quadratic1d(5.0),
        ProblemSpec::integro1d(),
        ProblemSpec::stiff2d(1.0),
        ProblemSpec::stiff2d(100.0),
    ]
}

fn quadratic_initial(x: f64) -> f64 {
    1.0 + 2.0 / PI - 2.0 / PI * cos(0.5 * PI * x)
}

impl ProblemSpec {
    pub fn quadratic1d(m: f64) -> Self {
        Self {
            kind: ProblemKind::Quadratic1d { m },
            interior: INTERIOR_1D,
            t_final: 0.1,
        }
    }

    pub fn integro1d() -> Self {
        Self {
            kind: ProblemKind::Integro1d,
            interior: INTERIOR_1D,
            t_final: 0.1,
        }
    }

    pub fn stiff2d(stiffness: f64) -> Self {
        Self {
            kind: ProblemKind::Stiff2d { stiffness },
            interior: INTERIOR_2D_PAPER,
            t_final: 0.1,
        }
    }

    pub fn stiff1d(stiffness: f64) -> Self {
        Self {
            kind: ProblemKind::Stiff1d { stiffness },
            interior: INTERIOR_1D,
            t_final: 0.1,
        }
    }

    /// Applies a resolution profile; only the 2D grid depends on it.
    pub fn with_scale(mut self, scale: Scale) -> Self {
        if self.dim() == 2 {
            self.interior = match scale {
                Scale::Paper => INTERIOR_2D_PAPER,
                Scale::Desk => INTERIOR_2D_DESK,
            };
        }
        self
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ProblemKind::Quadratic1d { .. } => "quadratic1d",
            ProblemKind::Integro1d => "integro1d",
            ProblemKind::Stiff2d { .. } => "stiff2d",
            ProblemKind::Stiff1d { .. } => "stiff1d",
        }
    }

    /// The `m` or `M` parameter.
    pub fn parameter(&self) -> Option<f64> {
        match self.kind {
            ProblemKind::Quadratic1d { m } => Some(m),
            ProblemKind::Stiff2d { stiffness } | ProblemKind::Stiff1d { stiffness } => Some(stiffness),
            ProblemKind::Integro1d => None,
        }
    }

    /// Replaces the `m` or `M` parameter.
    pub fn with_parameter(mut self, value: f64) -> Result<Self> {
        self.kind = match self.kind {
            ProblemKind::Quadratic1d { .. } => ProblemKind::Quadratic1d { m: value },
            ProblemKind::Stiff2d { .. } => ProblemKind::Stiff2d { stiffness: value },
            ProblemKind::Stiff1d { .. } => ProblemKind::Stiff1d { stiffness: value },
            ProblemKind::Integro1d => return Err(Error::Config("integro1d has no parameter".into())),
        };
        Ok(self)
    }

    pub fn label(&self) -> String {
        match self.kind {
            ProblemKind::Quadratic1d { m } => format!("quadratic1d(m={m})"),
            ProblemKind::Integro1d => "integro1d".into(),
            ProblemKind::Stiff2d { stiffness } => format!("stiff2d(M={stiffness})"),
            ProblemKind::Stiff1d { stiffness } => format!("stiff1d(M={stiffness})"),
        }
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            ProblemKind::Stiff2d { .. } => 2,
            _ => 1,
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        match self.dim() {
            1 => Grid::new_1d(self.interior),
            _ => Grid::new_2d(self.interior, self.interior),
        }
    }

    pub fn initial_value(&self, p: [f64; 2]) -> f64 {
        match self.kind {
            ProblemKind::Quadratic1d { .. } | ProblemKind::Stiff1d { .. } => quadratic_initial(p[0]),
            ProblemKind::Integro1d => 2.0 * (cos(PI * p[0]) + 1.0),
            ProblemKind::Stiff2d { .. } => 0.5 * (exp(p[0]) + exp(p[1])),
        }
    }

    pub fn boundary_spec(&self) -> BoundarySpec {
        use BoundaryKind::{Dirichlet, Neumann};
        match self.kind {
            ProblemKind::Quadratic1d { .. } | ProblemKind::Stiff1d { .. } => {
                BoundarySpec::new(vec![(Face::Left, Dirichlet), (Face::Right, Neumann)], |_: Face, _: [f64; 2], _: f64| 1.0)
            }
            ProblemKind::Integro1d => BoundarySpec::new(
                vec![(Face::Left, Dirichlet), (Face::Right, Neumann)],
                |face: Face, _: [f64; 2], t: f64| if face == Face::Left { 2.0 * (2.0 - t) } else { 0.0 },
            ),
            ProblemKind::Stiff2d { .. } => BoundarySpec::new(
                vec![
                    (Face::Left, Dirichlet),
                    (Face::Right, Neumann),
                    (Face::Bottom, Neumann),
                    (Face::Top, Neumann),
                ],
                |face: Face, p: [f64; 2], _: f64| match face {
                    Face::Left => 0.5 * (1.0 + exp(p[1])),
                    Face::Bottom => -0.5,
                    Face::Right | Face::Top => 0.5 * E,
                },
            ),
        }
    }

    fn reaction(&self, grid: &Grid) -> Arc<dyn Reaction> {
        match self.kind {
            ProblemKind::Quadratic1d { m } => Arc::new(QuadraticReaction::uniform(grid, m)),
            ProblemKind::Integro1d => Arc::new(IntegralReaction::new(
                grid,
                |x, s| {
                    let r = 1.0 + (x[0] - s[0]).abs();
                    1.0 / (r * r)
                },
                4,
                -1.0,
            )),
            ProblemKind::Stiff2d { stiffness } => Arc::new(QuadraticReaction::from_fn(grid, move |p| {
                1.0 - stiffness * sin(PI * p[0]) * sin(PI * p[1])
            })),
            ProblemKind::Stiff1d { stiffness } => {
                Arc::new(QuadraticReaction::from_fn(grid, move |p| 1.0 - stiffness * sin(PI * p[0])))
            }
        }
    }

    fn m3_extension(&self) -> Option<Arc<dyn AnalyticExtension>> {
        match self.kind {
            ProblemKind::Quadratic1d { m } => Some(Arc::new(LinearCorrector::Quadratic { m })),
            ProblemKind::Stiff1d { stiffness } => Some(Arc::new(LinearCorrector::Stiff { stiffness })),
            _ => None,
        }
    }

    /// Discretised problem. The initial field takes its interior values from
    /// the initial condition and its boundary nodes from the discrete
    /// boundary conditions at `t = 0`.
    pub fn build(&self) -> Result<Problem> {
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::Config(format!("final time must be positive, got {}", self.t_final)));
        }
        let grid = self.grid()?;
        let diffusion = build_laplacian(grid, self.boundary_spec())?;
        let sampled = grid.sample(|p| self.initial_value(p));
        let initial = diffusion.apply_boundary_reconstruction(&sampled.interior(), 0.0)?;
        Ok(Problem {
            name: self.label(),
            reaction: self.reaction(&grid),
            diffusion,
            initial,
            t_final: self.t_final,
            m3_extension: self.m3_extension(),
        })
    }

    /// Step sizes of the convergence sweep.
    pub fn sweep_steps(&self) -> Vec<f64> {
        match self.dim() {
            1 => (0..=6).map(|k| 0.02 * pow(2.0, -(k as f64))).collect(),
            _ => (0..=8).map(|k| 0.1 * pow(2.0, -(k as f64))).collect(),
        }
    }

    /// RK4 reference step. The desk 2D profile uses `0.1·2⁻¹¹`, the largest
    /// power-of-two refinement inside the RK4 stability interval on its grid.
    pub fn reference_step(&self, scale: Scale) -> f64 {
        match (self.dim(), scale) {
            (1, _) => 0.02 * pow(2.0, -14.0),
            (_, Scale::Paper) => 0.1 * pow(2.0, -14.0),
            (_, Scale::Desk) => 0.1 * pow(2.0, -11.0),
        }
    }
}

/// Affine-in-`x` correctors for the three-part splitting in 1D with
/// `u(0) = 1`, `∂ₙu(1) = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LinearCorrector {
    /// `q = m + 2m x u(1)`
    Quadratic { m: f64 },
    /// `q = 1 + (Mπ u(1)² + 2u(1)) x`
    Stiff { stiffness: f64 },
}

impl AnalyticExtension for LinearCorrector {
    fn sample(&self, u_n: &StateField) -> StateField {
        let g = u_n.grid();
        let right = u_n.values()[g.node_count() - 1];
        let (a, s) = match *self {
            LinearCorrector::Quadratic { m } => (m, 2.0 * m * right),
            LinearCorrector::Stiff { stiffness } => (1.0, stiffness * PI * right * right + 2.0 * right),
        };
        g.sample(|p| a + s * p[0])
    }

    /// The formulas reproduce the continuous trace `B f(u)`; on the grid the
    /// one-sided derivative of `f(u_n)` departs from it by `O(Δx²)`.
    fn trace_tolerance(&self, grid: &Grid) -> f64 {
        let h = grid.spacing(0);
        TRACE_TOL.max(50.0 * h * h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrector::{boundary_trace_m3, extend_analytic};
    use crate::mesh::BoundaryValues;

    #[test]
    fn registry_matches_benchmarks() {
        let all = builtin_problems();
        assert_eq!(all.len(), 5);
        let names: Vec<String> = all.iter().map(ProblemSpec::label).collect();
        assert_eq!(
            names,
            ["quadratic1d(m=1)", "quadratic1d(m=5)", "integro1d", "stiff2d(M=1)", "stiff2d(M=100)"]
        );
        for p in &all {
            assert_eq!(p.t_final, 0.1);
            let g = p.grid().unwrap();
            match p.dim() {
                1 => assert_eq!(g.interior_count(), 500),
                _ => assert!((g.spacing(0) - 1.0 / 128.0).abs() < 1e-15),
            }
        }
        let desk = ProblemSpec::stiff2d(100.0).with_scale(Scale::Desk).grid().unwrap();
        assert!((desk.spacing(1) - 1.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn initial_data_is_consistent_with_boundary_conditions() {
        for spec in builtin_problems().into_iter().map(|p| p.with_scale(Scale::Desk)) {
            let p = spec.build().unwrap();
            let d = &p.diffusion;
            let b = d.boundary_data(0.0);
            let sampled = d.grid().sample(|x| spec.initial_value(x));
            let h = d.grid().spacing(0);
            // discrete B of the sampled condition is within the stencil error
            let bu = d.apply_boundary_operator(&sampled);
            for (face, want) in b.iter() {
                for (k, (w, got)) in want.iter().zip(bu.face(face)).enumerate() {
                    if d.grid().is_corner(face, k) {
                        continue;
                    }
                    assert!((w - got).abs() < 10.0 * h * h, "{} {face:?} {k}", spec.label());
                }
            }
            // and the stored field differs from the sampled one only at the boundary, by O(h²)
            let diff = p.initial.minus_scaled(1.0, &sampled).max_abs();
            assert!(diff < 10.0 * h * h, "{}: {diff}", spec.label());
        }
    }

    #[test]
    fn analytic_m3_correctors_pass_their_trace_checks() {
        for spec in [ProblemSpec::quadratic1d(1.0), ProblemSpec::quadratic1d(5.0), ProblemSpec::stiff1d(100.0)] {
            let p = spec.build().unwrap();
            let d = &p.diffusion;
            let ext = p.m3_extension.clone().unwrap();
            let q = ext.sample(&p.initial);
            // exactly against the continuous trace
            let right = p.initial.values()[d.grid().node_count() - 1];
            let exact = match spec.kind {
                ProblemKind::Quadratic1d { m } => [m, 2.0 * m * right],
                _ => [1.0, spec.parameter().unwrap() * PI * right * right + 2.0 * right],
            };
            let continuous = BoundaryValues::from_fn(d.grid(), |f, _| if f == Face::Left { exact[0] } else { exact[1] });
            extend_analytic(d, q.clone(), &continuous, TRACE_TOL).unwrap();
            // within the stencil tolerance against the discrete trace of f(u_n)
            let discrete = boundary_trace_m3(d, &p.initial, p.reaction.as_ref());
            extend_analytic(d, q, &discrete, ext.trace_tolerance(d.grid())).unwrap();
        }
    }

    #[test]
    fn sweeps_and_reference_steps() {
        let q = ProblemSpec::quadratic1d(1.0);
        assert_eq!(q.sweep_steps().len(), 7);
        assert_eq!(q.sweep_steps()[6], 0.02 / 64.0);
        assert_eq!(q.reference_step(Scale::Paper), 0.02 / 16384.0);
        let s = ProblemSpec::stiff2d(1.0);
        assert_eq!(s.sweep_steps().len(), 9);
        assert_eq!(s.reference_step(Scale::Desk), 0.1 / 2048.0);
    }
}
