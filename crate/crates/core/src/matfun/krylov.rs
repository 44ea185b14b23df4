//! Arnoldi approximation of `e^{τA}u + τφ₁(τA)b₀ + τ²φ₂(τA)b₁`.
//!
//! The forcing terms are folded into the exponential of an augmented
//! operator `[[A, b₁/η, b₀/η], [0, 0, 1], [0, 0, 0]]` acting on `[u; 0; η]`,
//! so a single Krylov space per substep covers all three terms. Long
//! intervals are traversed in substeps whose length is controlled by the
//! generalized residual estimate `β h h_{m+1,m} |e_mᵀ φ₁(hH_m) e₁|`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use super::dense::expm;
use super::KrylovParams;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, LinearOperator};

struct Augmented<'a, A: LinearOperator + ?Sized> {
    a: &'a A,
    b0: &'a [f64],
    b1: &'a [f64],
    inv_eta: f64,
    augmented: bool,
}

impl<A: LinearOperator + ?Sized> Augmented<'_, A> {
    fn len(&self) -> usize {
        self.a.nrows() + if self.augmented { 2 } else { 0 }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.a.nrows();
        self.a.apply(&x[..n], &mut y[..n]);
        if self.augmented {
            let (xa, xc) = (x[n] * self.inv_eta, x[n + 1] * self.inv_eta);
            for i in 0..n {
                y[i] += xa * self.b1[i] + xc * self.b0[i];
            }
            y[n] = x[n + 1];
            y[n + 1] = 0.0;
        }
    }
}

struct Arnoldi {
    basis: Vec<Vec<f64>>,
    hess: DMatrix<f64>,
    /// Krylov dimension actually built.
    dim: usize,
    /// `h_{m+1,m}`; zero on happy breakdown.
    tail: f64,
}

fn arnoldi<A: LinearOperator + ?Sized>(op: &Augmented<'_, A>, start: &[f64], beta: f64, max_dim: usize) -> Arnoldi {
    let len = op.len();
    let max_dim = max_dim.min(len).max(1);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_dim + 1);
    basis.push(start.iter().map(|v| v / beta).collect());
    let mut hess = DMatrix::zeros(max_dim + 1, max_dim);
    let mut op_scale: f64 = 0.0;
    let mut w = vec![0.0; len];
    for j in 0..max_dim {
        op.apply(&basis[j], &mut w);
        op_scale = op_scale.max(norm2(&w));
        for (i, v) in basis.iter().enumerate() {
            let h = dot(&w, v);
            hess[(i, j)] = h;
            w.iter_mut().zip(v).for_each(|(w, v)| *w -= h * v);
        }
        // one reorthogonalisation pass keeps the basis orthonormal for the
        // non-normal augmented operator
        for (i, v) in basis.iter().enumerate() {
            let h = dot(&w, v);
            hess[(i, j)] += h;
            w.iter_mut().zip(v).for_each(|(w, v)| *w -= h * v);
        }
        let next = norm2(&w);
        hess[(j + 1, j)] = next;
        if next <= 1e-13 * op_scale.max(f64::MIN_POSITIVE) || j + 1 == len {
            return Arnoldi {
                basis,
                hess: hess.view((0, 0), (j + 1, j + 1)).into_owned(),
                dim: j + 1,
                tail: 0.0,
            };
        }
        if j + 1 < max_dim {
            basis.push(w.iter().map(|v| v / next).collect());
        } else {
            return Arnoldi {
                basis,
                hess: hess.view((0, 0), (max_dim, max_dim)).into_owned(),
                dim: max_dim,
                tail: next,
            };
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// Returns `e^{τA}u + τφ₁(τA)b₀ + τ²φ₂(τA)b₁`.
pub fn phi_combination<A: LinearOperator + ?Sized>(
    a: &A,
    tau: f64,
    u: &[f64],
    b0: &[f64],
    b1: &[f64],
    params: &KrylovParams,
) -> Result<Vec<f64>> {
    let n = a.nrows();
    if tau == 0.0 {
        return Ok(u.to_vec());
    }
    let forcing = b0.iter().chain(b1).any(|v| *v != 0.0);
    let mut state = u.to_vec();
    if !forcing && state.iter().all(|v| *v == 0.0) {
        return Ok(state);
    }

    let mut t = 0.0;
    let mut h = tau;
    let mut substeps = 0usize;
    let mut shifted = vec![0.0; n];
    let mut start = vec![0.0; n + if forcing { 2 } else { 0 }];
    while t < tau {
        substeps += 1;
        // forcing seen from the start of this substep: b₀ + t b₁
        for i in 0..n {
            shifted[i] = b0[i] + t * b1[i];
        }
        let eta = if forcing {
            (tau * norm2(&shifted) + tau * tau * norm2(b1)).max(f64::MIN_POSITIVE)
        } else {
            1.0
        };
        start[..n].copy_from_slice(&state);
        if forcing {
            start[n] = 0.0;
            start[n + 1] = eta;
        }
        let beta = norm2(&start);
        let op = Augmented {
            a,
            b0: &shifted,
            b1,
            inv_eta: 1.0 / eta,
            augmented: forcing,
        };
        let krylov = arnoldi(&op, &start, beta, params.max_dim);
        let m = krylov.dim;

        loop {
            h = h.min(tau - t);
            // exp([[hH, e₁], [0, 0]]) carries e^{hH}e₁ in its first column and
            // φ₁(hH)e₁ in its last.
            let mut aug = DMatrix::zeros(m + 1, m + 1);
            aug.view_mut((0, 0), (m, m)).copy_from(&(&krylov.hess * h));
            aug[(0, m)] = 1.0;
            let f = expm(&aug);
            let estimate = beta * h * krylov.tail * f[(m - 1, m)].abs();
            let allowed = params.tol * beta * h / tau;
            if !estimate.is_finite() {
                return Err(Error::NonFinite);
            }
            if estimate <= allowed {
                state.iter_mut().for_each(|v| *v = 0.0);
                for (k, v) in krylov.basis.iter().enumerate().take(m) {
                    let c = beta * f[(k, 0)];
                    state.iter_mut().zip(&v[..n]).for_each(|(s, v)| *s += c * v);
                }
                t = if tau - t <= h { tau } else { t + h };
                let grow = if estimate == 0.0 {
                    5.0
                } else {
                    (0.9 * libm::pow(allowed / estimate, 1.0 / (m as f64 + 1.0))).min(5.0)
                };
                h *= grow.max(1.0);
                break;
            }
            let shrink = (0.9 * libm::pow(allowed / estimate, 1.0 / (m as f64 + 1.0))).clamp(0.05, 0.9);
            h *= shrink;
            substeps += 1;
            if h <= tau * 1e-13 || substeps > params.max_substeps {
                return Err(Error::KrylovNotConverged { estimate: estimate / beta });
            }
        }
        if substeps > params.max_substeps {
            return Err(Error::KrylovNotConverged { estimate: f64::NAN });
        }
    }
    Ok(state)
}
