//! Geometric multigrid V-cycles with damped Jacobi smoothing for the
//! eliminated-boundary Laplacian.
//!
//! Coarse grids keep every other interior node per axis (odd fine indices),
//! which works for any interior count. Prolongation is linear interpolation
//! between kept nodes; past the last kept node it falls back to the boundary
//! behaviour of that face (zero error at Dirichlet faces, constant
//! extrapolation at derivative faces). Coarse operators are Galerkin
//! products `Pᵀ A P`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{norm2, CsrMatrix, LinearOperator};
use crate::mesh::{DiscreteDiffusion, Face};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmootherConfig {
    /// V-cycles to run when no tolerance is set.
    pub cycles: usize,
    pub pre_sweeps: usize,
    pub post_sweeps: usize,
    /// Jacobi damping factor.
    pub damping: f64,
    /// When set, cycle until the relative residual drops below it.
    pub tol: Option<f64>,
    /// Cycle cap in tolerance mode.
    pub max_cycles: usize,
}

impl Default for SmootherConfig {
    fn default() -> Self {
        Self {
            cycles: 2,
            pre_sweeps: 3,
            post_sweeps: 3,
            damping: 2.0 / 3.0,
            tol: None,
            max_cycles: 100,
        }
    }
}

impl SmootherConfig {
    pub fn converged(tol: f64) -> Self {
        Self {
            tol: Some(tol),
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug)]
struct Level {
    a: CsrMatrix,
    inv_diag: Vec<f64>,
    /// Prolongation from the next coarser level.
    prolong: Option<CsrMatrix>,
    restrict: Option<CsrMatrix>,
}

#[derive(Clone, Debug)]
pub struct Multigrid {
    levels: Vec<Level>,
    coarse: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

/// Result of a multigrid solve.
#[derive(Clone, Debug)]
pub struct Solve {
    pub x: Vec<f64>,
    /// `‖b - A x‖₂ / ‖b‖₂` after each V-cycle (entry 0 is the initial guess).
    pub residuals: Vec<f64>,
}

const COARSEST: usize = 16;

/// 1D prolongation from kept nodes (odd indices of `1..=n`) onto all `n`.
fn prolong_1d(n: usize, far_dirichlet: bool) -> (CsrMatrix, usize) {
    let nc = (n + 1) / 2;
    let mut t = Vec::with_capacity(2 * n);
    for i in 1..=n {
        let r = i - 1;
        if i % 2 == 1 {
            t.push((r, (i - 1) / 2, 1.0));
        } else if i < n {
            t.push((r, (i - 2) / 2, 0.5));
            t.push((r, i / 2, 0.5));
        } else {
            t.push((r, (i - 2) / 2, if far_dirichlet { 0.5 } else { 1.0 }));
        }
    }
    (CsrMatrix::from_triplets(n, nc, &t), nc)
}

fn kron(py: &CsrMatrix, px: &CsrMatrix) -> CsrMatrix {
    let (nx, ncx) = (px.nrows(), px.ncols());
    let mut t = Vec::new();
    for j in 0..py.nrows() {
        for (jc, wy) in py.row(j) {
            for i in 0..nx {
                for (ic, wx) in px.row(i) {
                    t.push((j * nx + i, jc * ncx + ic, wy * wx));
                }
            }
        }
    }
    CsrMatrix::from_triplets(py.nrows() * nx, py.ncols() * ncx, &t)
}

impl Multigrid {
    /// Hierarchy for the interior operator of `d`.
    pub fn new(d: &DiscreteDiffusion) -> Self {
        let g = d.grid();
        let far_dirichlet = |f: Face| d.kind(f).is_dirichlet();
        let mut sizes: Vec<usize> = (0..g.dim()).map(|a| g.interior_per_axis(a)).collect();
        let mut levels = Vec::new();
        let mut a = d.matrix().clone();
        loop {
            let inv_diag = a.diagonal().iter().map(|v| 1.0 / v).collect();
            let total: usize = sizes.iter().product();
            if total <= COARSEST || sizes.iter().any(|&n| n < 3) {
                levels.push(Level {
                    a,
                    inv_diag,
                    prolong: None,
                    restrict: None,
                });
                break;
            }
            let (px, ncx) = prolong_1d(sizes[0], far_dirichlet(Face::Right));
            let (p, next) = if g.dim() == 1 {
                (px, vec![ncx])
            } else {
                let (py, ncy) = prolong_1d(sizes[1], far_dirichlet(Face::Top));
                (kron(&py, &px), vec![ncx, ncy])
            };
            let r = p.transpose();
            let coarse = r.matmul(&a).matmul(&p);
            levels.push(Level {
                a,
                inv_diag,
                prolong: Some(p),
                restrict: Some(r),
            });
            a = coarse;
            sizes = next;
        }
        let coarse = levels.last().expect("at least one level").a.to_dense().lu();
        Self { levels, coarse }
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    fn smooth(level: &Level, b: &[f64], x: &mut [f64], sweeps: usize, damping: f64) {
        let mut ax = vec![0.0; x.len()];
        for _ in 0..sweeps {
            level.a.apply(x, &mut ax);
            for i in 0..x.len() {
                x[i] += damping * level.inv_diag[i] * (b[i] - ax[i]);
            }
        }
    }

    fn vcycle(&self, k: usize, b: &[f64], x: &mut [f64], cfg: &SmootherConfig) {
        let level = &self.levels[k];
        let (Some(p), Some(r)) = (&level.prolong, &level.restrict) else {
            let sol = self
                .coarse
                .solve(&DVector::from_column_slice(b))
                .unwrap_or_else(|| DVector::from_column_slice(x));
            x.copy_from_slice(sol.as_slice());
            return;
        };
        Self::smooth(level, b, x, cfg.pre_sweeps, cfg.damping);
        let mut res = vec![0.0; x.len()];
        level.a.apply(x, &mut res);
        res.iter_mut().zip(b).for_each(|(r, b)| *r = b - *r);
        let mut rc = vec![0.0; r.nrows()];
        r.apply(&res, &mut rc);
        let mut ec = vec![0.0; rc.len()];
        self.vcycle(k + 1, &rc, &mut ec, cfg);
        p.apply_add(1.0, &ec, x);
        Self::smooth(level, b, x, cfg.post_sweeps, cfg.damping);
    }

    fn relative_residual(&self, b: &[f64], x: &[f64], bnorm: f64) -> f64 {
        let a = &self.levels[0].a;
        let mut ax = vec![0.0; x.len()];
        a.apply(x, &mut ax);
        let r: Vec<f64> = ax.iter().zip(b).map(|(ax, b)| b - ax).collect();
        norm2(&r) / bnorm
    }

    /// Runs V-cycles on `A x = b` from `x0`: a fixed number, or until the
    /// relative residual meets `cfg.tol`.
    pub fn solve(&self, b: &[f64], x0: Option<&[f64]>, cfg: &SmootherConfig) -> Result<Solve> {
        let n = self.levels[0].a.nrows();
        if b.len() != n {
            return Err(Error::Dimension(format!("right-hand side has {} entries, operator {n}", b.len())));
        }
        if !(cfg.damping > 0.0 && cfg.damping <= 1.0) {
            return Err(Error::Config(format!("Jacobi damping must lie in (0, 1], got {}", cfg.damping)));
        }
        let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
        let bnorm = norm2(b);
        if bnorm == 0.0 {
            return Ok(Solve {
                x: vec![0.0; n],
                residuals: vec![0.0],
            });
        }
        let mut residuals = vec![self.relative_residual(b, &x, bnorm)];
        match cfg.tol {
            None => {
                for _ in 0..cfg.cycles {
                    self.vcycle(0, b, &mut x, cfg);
                    residuals.push(self.relative_residual(b, &x, bnorm));
                }
            }
            Some(tol) => {
                while residuals[residuals.len() - 1] > tol {
                    if residuals.len() > cfg.max_cycles {
                        return Err(Error::SmootherNotConverged {
                            residual: residuals[residuals.len() - 1],
                        });
                    }
                    self.vcycle(0, b, &mut x, cfg);
                    residuals.push(self.relative_residual(b, &x, bnorm));
                }
            }
        }
        let last = residuals[residuals.len() - 1];
        if !last.is_finite() {
            return Err(Error::SmootherNotConverged { residual: last });
        }
        Ok(Solve { x, residuals })
    }
}

/// Dense reference solve, used to check the hierarchy on small systems.
pub fn direct_solve(a: &CsrMatrix, b: &[f64]) -> Option<Vec<f64>> {
    let dense: DMatrix<f64> = a.to_dense();
    dense.lu().solve(&DVector::from_column_slice(b)).map(|v| v.as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_laplacian, BoundaryKind, BoundarySpec, Grid};

    fn mixed(grid: Grid) -> DiscreteDiffusion {
        let mut kinds = vec![(Face::Left, BoundaryKind::Dirichlet), (Face::Right, BoundaryKind::Neumann)];
        if grid.dim() == 2 {
            kinds.push((Face::Bottom, BoundaryKind::Neumann));
            kinds.push((Face::Top, BoundaryKind::Neumann));
        }
        build_laplacian(grid, BoundarySpec::new(kinds, |_, _, _| 0.0)).unwrap()
    }

    #[test]
    fn prolongation_rows_handle_both_parities() {
        let (p, nc) = prolong_1d(6, true);
        assert_eq!(nc, 3);
        assert_eq!(p.get(5, 2), 0.5);
        let (p, nc) = prolong_1d(7, false);
        assert_eq!(nc, 4);
        assert_eq!(p.get(6, 3), 1.0);
        assert_eq!(p.get(5, 2), 0.5);
        assert_eq!(p.get(5, 3), 0.5);
    }

    #[test]
    fn converges_to_direct_solution() {
        for grid in [Grid::new_1d(500).unwrap(), Grid::new_2d(31, 24).unwrap()] {
            let d = mixed(grid);
            let mg = Multigrid::new(&d);
            assert!(mg.depth() > 2);
            let b: Vec<f64> = (0..d.dim()).map(|k| ((k * 7 % 13) as f64 - 6.0) * 0.1).collect();
            let sol = mg.solve(&b, None, &SmootherConfig::converged(1e-12)).unwrap();
            let exact = direct_solve(d.matrix(), &b).unwrap();
            let err = sol.x.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let scale = exact.iter().map(|v| v.abs()).fold(0.0, f64::max);
            assert!(err <= 1e-9 * scale, "{err} vs {scale}");
            for w in sol.residuals.windows(2) {
                assert!(w[1] < w[0]);
            }
        }
    }

    #[test]
    fn tolerance_mode_reports_non_convergence() {
        let d = mixed(Grid::new_1d(200).unwrap());
        let mg = Multigrid::new(&d);
        let cfg = SmootherConfig {
            pre_sweeps: 0,
            post_sweeps: 1,
            max_cycles: 2,
            tol: Some(1e-14),
            ..SmootherConfig::default()
        };
        let b = vec![1.0; d.dim()];
        assert!(matches!(
            mg.solve(&b, None, &cfg),
            Err(Error::SmootherNotConverged { .. })
        ));
    }
}
