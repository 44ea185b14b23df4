//! Actions of `e^{τA}`, `φ₁(τA)` and `φ₂(τA)` on vectors, with
//! `φ₁(z) = (e^z - 1)/z` and `φ₂(z) = (φ₁(z) - 1)/z`.
//!
//! Two backends: dense (scaling and squaring, for systems up to a size cap)
//! and Krylov (Arnoldi with substepping, for everything else).

pub mod dense;
pub mod krylov;

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, LinearOperator};

pub const DEFAULT_DENSE_CAP: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovParams {
    /// Maximum Krylov subspace dimension per substep.
    pub max_dim: usize,
    /// Relative error tolerance over the whole interval.
    pub tol: f64,
    /// Substep budget (accepted plus rejected) before giving up.
    pub max_substeps: usize,
}

impl Default for KrylovParams {
    fn default() -> Self {
        Self {
            max_dim: 64,
            tol: 1e-10,
            max_substeps: 10_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Backend {
    Dense { cap: usize },
    Krylov(KrylovParams),
}

impl Default for Backend {
    fn default() -> Self {
        Backend::Dense {
            cap: DEFAULT_DENSE_CAP,
        }
    }
}

impl Backend {
    pub fn krylov() -> Self {
        Backend::Krylov(KrylovParams::default())
    }

    /// Dense when `n` fits under the default cap, Krylov otherwise.
    pub fn auto(n: usize) -> Self {
        if n <= DEFAULT_DENSE_CAP {
            Backend::default()
        } else {
            Backend::krylov()
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            Backend::Dense { cap } if n > cap => Err(Error::DenseTooLarge { n, cap }),
            Backend::Krylov(p) if !(p.tol > 0.0) || p.max_dim == 0 => Err(Error::Config(format!(
                "Krylov tolerance must be positive and dimension nonzero, got {p:?}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Backend::Dense { .. } => "dense",
            Backend::Krylov(_) => "krylov",
        }
    }
}

fn check_inputs<A: LinearOperator + ?Sized>(a: &A, tau: f64, v: &[f64]) -> Result<()> {
    if a.nrows() != a.ncols() || v.len() != a.nrows() {
        return Err(Error::Dimension(format!(
            "operator is {}x{}, vector has {} entries",
            a.nrows(),
            a.ncols(),
            v.len()
        )));
    }
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::Config(format!("time step must be finite and nonnegative, got {tau}")));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

fn dense_of<A: LinearOperator + ?Sized>(a: &A) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m = DMatrix::zeros(n, n);
    let mut e = alloc::vec![0.0; n];
    let mut col = alloc::vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        a.apply(&e, &mut col);
        m.column_mut(j).copy_from_slice(&col);
        e[j] = 0.0;
    }
    m
}

/// Exponential of `[[τA, W], [0, J]]` with `J` the nilpotent shift, applied
/// to the last unit vector: returns `Σ_k φ_k(τA) w_k` for the columns `w_k`
/// of `W` taken in reverse order.
fn dense_augmented<A: LinearOperator + ?Sized>(a: &A, tau: f64, cols: &[&[f64]]) -> Vec<f64> {
    let n = a.nrows();
    let p = cols.len();
    let mut aug = DMatrix::zeros(n + p, n + p);
    aug.view_mut((0, 0), (n, n)).copy_from(&(dense_of(a) * tau));
    for (k, c) in cols.iter().enumerate() {
        aug.view_mut((0, n + k), (n, 1)).copy_from_slice(c);
    }
    for k in 0..p.saturating_sub(1) {
        aug[(n + k, n + k + 1)] = 1.0;
    }
    let e = dense::expm(&aug);
    e.view((0, n + p - 1), (n, 1)).iter().copied().collect()
}

/// `e^{τA} v`
pub fn expm_action<A: LinearOperator + ?Sized>(backend: &Backend, a: &A, tau: f64, v: &[f64]) -> Result<Vec<f64>> {
    check_inputs(a, tau, v)?;
    backend.validate(a.nrows())?;
    if tau == 0.0 {
        return Ok(v.to_vec());
    }
    match backend {
        Backend::Dense { .. } => {
            let e = dense::expm(&(dense_of(a) * tau));
            Ok((e * DVector::from_column_slice(v)).as_slice().to_vec())
        }
        Backend::Krylov(p) => {
            let zero = alloc::vec![0.0; v.len()];
            krylov::phi_combination(a, tau, v, &zero, &zero, p)
        }
    }
}

/// `φ₁(τA) v`
pub fn phi1_action<A: LinearOperator + ?Sized>(backend: &Backend, a: &A, tau: f64, v: &[f64]) -> Result<Vec<f64>> {
    check_inputs(a, tau, v)?;
    backend.validate(a.nrows())?;
    if tau == 0.0 {
        return Ok(v.to_vec());
    }
    match backend {
        Backend::Dense { .. } => Ok(dense_augmented(a, tau, &[v])),
        Backend::Krylov(p) => {
            let zero = alloc::vec![0.0; v.len()];
            let w = krylov::phi_combination(a, tau, &zero, v, &zero, p)?;
            Ok(w.into_iter().map(|x| x / tau).collect())
        }
    }
}

/// `φ₂(τA) v`
pub fn phi2_action<A: LinearOperator + ?Sized>(backend: &Backend, a: &A, tau: f64, v: &[f64]) -> Result<Vec<f64>> {
    check_inputs(a, tau, v)?;
    backend.validate(a.nrows())?;
    if tau == 0.0 {
        return Ok(v.iter().map(|x| 0.5 * x).collect());
    }
    match backend {
        Backend::Dense { .. } => {
            let zero = alloc::vec![0.0; v.len()];
            Ok(dense_augmented(a, tau, &[v, &zero]))
        }
        Backend::Krylov(p) => {
            let zero = alloc::vec![0.0; v.len()];
            let w = krylov::phi_combination(a, tau, &zero, &zero, v, p)?;
            Ok(w.into_iter().map(|x| x / (tau * tau)).collect())
        }
    }
}

/// Exact solution operator of `u' = A u + b₀ + s b₁` over a fixed step `τ`.
///
/// The dense variant precomputes `e^{τA}`, `φ₁(τA)`, `φ₂(τA)` once; the
/// Krylov variant recomputes an Arnoldi approximation per application.
#[derive(Clone, Debug)]
pub struct Propagator {
    tau: f64,
    kind: PropagatorKind,
}

#[derive(Clone, Debug)]
enum PropagatorKind {
    Dense(dense::PhiMatrices),
    Krylov { a: CsrMatrix, params: KrylovParams },
}

impl Propagator {
    pub fn new(backend: &Backend, a: &CsrMatrix, tau: f64) -> Result<Self> {
        backend.validate(a.nrows())?;
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::ZeroStep);
        }
        let kind = match backend {
            Backend::Dense { .. } => PropagatorKind::Dense(dense::phi_matrices(&(a.to_dense() * tau))),
            Backend::Krylov(p) => PropagatorKind::Krylov { a: a.clone(), params: *p },
        };
        Ok(Self { tau, kind })
    }

    /// Propagators for `τ, 2τ, 4τ, …` (`count` of them). The dense backend
    /// builds the finest one and doubles it.
    pub fn ladder(backend: &Backend, a: &CsrMatrix, finest: f64, count: usize) -> Result<Vec<Self>> {
        let mut out: Vec<Self> = Vec::with_capacity(count);
        if count == 0 {
            return Ok(out);
        }
        out.push(Self::new(backend, a, finest)?);
        while out.len() < count {
            let next = out[out.len() - 1].doubled();
            out.push(next);
        }
        Ok(out)
    }

    /// Propagator for twice the step.
    pub fn doubled(&self) -> Self {
        let kind = match &self.kind {
            PropagatorKind::Dense(m) => PropagatorKind::Dense(m.doubled()),
            k @ PropagatorKind::Krylov { .. } => k.clone(),
        };
        Self {
            tau: 2.0 * self.tau,
            kind,
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.kind, PropagatorKind::Dense(_))
    }

    /// `e^{τA}u + τφ₁(τA)b₀ + τ²φ₂(τA)b₁`
    pub fn apply(&self, u: &[f64], b0: &[f64], b1: &[f64]) -> Result<Vec<f64>> {
        let tau = self.tau;
        match &self.kind {
            PropagatorKind::Dense(m) => {
                let n = u.len();
                if m.exp.nrows() != n || b0.len() != n || b1.len() != n {
                    return Err(Error::Dimension(format!(
                        "propagator has dimension {}, vectors {}/{}/{}",
                        m.exp.nrows(),
                        n,
                        b0.len(),
                        b1.len()
                    )));
                }
                let mut w = DVector::zeros(n);
                w.gemv(1.0, &m.exp, &DVector::from_column_slice(u), 0.0);
                if b0.iter().any(|v| *v != 0.0) {
                    w.gemv(tau, &m.phi1, &DVector::from_column_slice(b0), 1.0);
                }
                if b1.iter().any(|v| *v != 0.0) {
                    w.gemv(tau * tau, &m.phi2, &DVector::from_column_slice(b1), 1.0);
                }
                Ok(w.as_slice().to_vec())
            }
            PropagatorKind::Krylov { a, params } => {
                if u.len() != a.nrows() || b0.len() != u.len() || b1.len() != u.len() {
                    return Err(Error::Dimension(format!(
                        "propagator has dimension {}, vectors {}/{}/{}",
                        a.nrows(),
                        u.len(),
                        b0.len(),
                        b1.len()
                    )));
                }
                krylov::phi_combination(a, tau, u, b0, b1, params)
            }
        }
    }
}
