//! The subproblem flows every splitting is composed of.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::matfun::Propagator;
use crate::mesh::{DiscreteDiffusion, Grid, StateField};

/// Denominators of the quadratic flow at or below this value count as
/// finite-time blow-up.
pub const BLOW_UP_THRESHOLD: f64 = 1e-12;

/// Reaction term `f`, evaluated nodewise on full fields.
pub trait Reaction: Send + Sync {
    /// Writes `f(u)` for every node of `u` into `out`.
    fn eval(&self, u: &StateField, out: &mut [f64]);

    /// Exact flow of `u' = f(u)` after time `t`, when a closed form exists.
    fn analytic_flow(&self, _u0: &StateField, _t: f64) -> Option<Result<StateField>> {
        None
    }

    /// Whether `f ≡ 0`.
    fn is_zero(&self) -> bool {
        false
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        None
    }

    fn evaluate(&self, u: &StateField) -> StateField {
        let mut out = StateField::zeros(*u.grid());
        self.eval(u, out.values_mut());
        out
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroReaction;

impl Reaction for ZeroReaction {
    fn eval(&self, _u: &StateField, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }

    fn analytic_flow(&self, u0: &StateField, _t: f64) -> Option<Result<StateField>> {
        Some(Ok(u0.clone()))
    }

    fn is_zero(&self) -> bool {
        true
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// `f(u) = c(x) u²` with a per-node coefficient.
#[derive(Clone, Debug)]
pub struct QuadraticReaction {
    coeff: Vec<f64>,
}

impl QuadraticReaction {
    pub fn uniform(grid: &Grid, c: f64) -> Self {
        Self {
            coeff: vec![c; grid.node_count()],
        }
    }

    pub fn from_fn(grid: &Grid, c: impl Fn([f64; 2]) -> f64) -> Self {
        Self {
            coeff: grid.sample(c).into_values(),
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeff
    }
}

impl Reaction for QuadraticReaction {
    fn eval(&self, u: &StateField, out: &mut [f64]) {
        for ((o, &c), &v) in out.iter_mut().zip(&self.coeff).zip(u.values()) {
            *o = c * v * v;
        }
    }

    /// `u(t) = u₀ / (1 - c t u₀)`
    fn analytic_flow(&self, u0: &StateField, t: f64) -> Option<Result<StateField>> {
        let mut out = u0.clone();
        for (node, (v, &c)) in out.values_mut().iter_mut().zip(&self.coeff).enumerate() {
            let denominator = 1.0 - c * t * *v;
            if denominator <= BLOW_UP_THRESHOLD {
                return Some(Err(Error::BlowUp { node, denominator }));
            }
            *v /= denominator;
        }
        Some(Ok(out))
    }

    fn is_zero(&self) -> bool {
        self.coeff.iter().all(|c| *c == 0.0)
    }
}

/// Nonlocal source `f(u)(x) = sign ∫ K(x, s) u(s)^p ds`, with the integral
/// taken by the trapezoidal rule over every grid node.
#[derive(Clone, Debug)]
pub struct IntegralReaction {
    /// `K(x_i, x_j) w_j`
    weighted_kernel: DMatrix<f64>,
    power: u32,
    sign: f64,
}

impl IntegralReaction {
    pub fn new(grid: &Grid, kernel: impl Fn([f64; 2], [f64; 2]) -> f64, power: u32, sign: f64) -> Self {
        let n = grid.node_count();
        let weighted_kernel = DMatrix::from_fn(n, n, |i, j| {
            kernel(grid.point(i), grid.point(j)) * grid.trapezoid_weight(j)
        });
        Self {
            weighted_kernel,
            power,
            sign,
        }
    }
}

impl Reaction for IntegralReaction {
    fn eval(&self, u: &StateField, out: &mut [f64]) {
        let powered = DVector::from_iterator(u.values().len(), u.values().iter().map(|v| powi(*v, self.power)));
        let mut res = DVector::zeros(out.len());
        res.gemv(self.sign, &self.weighted_kernel, &powered, 0.0);
        out.copy_from_slice(res.as_slice());
    }
}

fn powi(x: f64, p: u32) -> f64 {
    (0..p).fold(1.0, |acc, _| acc * x)
}

/// Number of full flow applications made by one integration run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FlowCounters {
    pub diffusion: u64,
    pub reaction: u64,
}

impl FlowCounters {
    pub fn total(&self) -> u64 {
        self.diffusion + self.reaction
    }
}

fn rk4<F>(u0: &StateField, t: f64, substeps: usize, rhs: F) -> Result<StateField>
where
    F: Fn(&StateField, &mut [f64]),
{
    if substeps == 0 {
        return Err(Error::Config("reaction flow needs at least one substep".into()));
    }
    let h = t / substeps as f64;
    let len = u0.values().len();
    let mut u = u0.clone();
    let mut stage = u0.clone();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    for _ in 0..substeps {
        rhs(&u, &mut k1);
        for ((s, v), k) in stage.values_mut().iter_mut().zip(u.values()).zip(&k1) {
            *s = v + 0.5 * h * k;
        }
        rhs(&stage, &mut k2);
        for ((s, v), k) in stage.values_mut().iter_mut().zip(u.values()).zip(&k2) {
            *s = v + 0.5 * h * k;
        }
        rhs(&stage, &mut k3);
        for ((s, v), k) in stage.values_mut().iter_mut().zip(u.values()).zip(&k3) {
            *s = v + h * k;
        }
        rhs(&stage, &mut k4);
        for (i, v) in u.values_mut().iter_mut().enumerate() {
            *v += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    if !u.is_finite() {
        let node = u.values().iter().position(|v| !v.is_finite()).unwrap_or(0);
        return Err(Error::BlowUp {
            node,
            denominator: f64::NAN,
        });
    }
    Ok(u)
}

/// `φ^f_t(u₀)`: the closed-form flow when `f` has one, otherwise `substeps`
/// classical RK4 steps.
pub fn reaction_flow(
    f: &dyn Reaction,
    u0: &StateField,
    t: f64,
    substeps: usize,
    counters: &mut FlowCounters,
) -> Result<StateField> {
    if !(t >= 0.0) {
        return Err(Error::Config(format!("flow duration must be nonnegative, got {t}")));
    }
    counters.reaction += 1;
    if let Some(exact) = f.analytic_flow(u0, t) {
        return exact;
    }
    rk4(u0, t, substeps, |u, out| f.eval(u, out))
}

/// `φ^{f-q}_t(u₀)` for a time-independent `q`, by RK4 substepping.
pub fn reaction_minus_q_flow(
    f: &dyn Reaction,
    q: &StateField,
    u0: &StateField,
    t: f64,
    substeps: usize,
    counters: &mut FlowCounters,
) -> Result<StateField> {
    if !(t >= 0.0) {
        return Err(Error::Config(format!("flow duration must be nonnegative, got {t}")));
    }
    if q.values().len() != u0.values().len() {
        return Err(Error::Dimension("corrector and state differ in size".into()));
    }
    counters.reaction += 1;
    rk4(u0, t, substeps, |u, out| {
        f.eval(u, out);
        out.iter_mut().zip(q.values()).for_each(|(o, q)| *o -= q);
    })
}

/// `φ^{-q}_t(u₀) = u₀ - t q`. Not counted as a flow evaluation.
pub fn projection_flow(q: &StateField, u0: &StateField, t: f64) -> StateField {
    u0.minus_scaled(t, q)
}

/// Exact flow of `u' = A u + c(t) + g` on the interior nodes over the step
/// of `propagator`, starting at `t0`. The boundary forcing is taken affine in
/// time through its values at both ends of the step; boundary nodes of the
/// result are reconstructed from the data at `t0 + τ`.
pub fn diffusion_flow(
    d: &DiscreteDiffusion,
    propagator: &Propagator,
    u0: &StateField,
    t0: f64,
    g: Option<&[f64]>,
    counters: &mut FlowCounters,
) -> Result<StateField> {
    let tau = propagator.tau();
    let c_start = d.forcing(t0);
    let c_end = d.forcing(t0 + tau);
    let mut b0 = c_start.clone();
    if let Some(g) = g {
        if g.len() != b0.len() {
            return Err(Error::Dimension(format!(
                "forcing has {} entries, system has {}",
                g.len(),
                b0.len()
            )));
        }
        b0.iter_mut().zip(g).for_each(|(b, g)| *b += g);
    }
    let b1: Vec<f64> = c_end.iter().zip(&c_start).map(|(e, s)| (e - s) / tau).collect();
    counters.diffusion += 1;
    let interior = propagator.apply(&u0.interior(), &b0, &b1)?;
    d.apply_boundary_reconstruction(&interior, t0 + tau)
}
