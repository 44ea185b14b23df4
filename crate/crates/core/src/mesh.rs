//! Uniform grids on the unit interval / unit square, the centred
//! second-order Laplacian with boundary rows eliminated, and the affine
//! boundary forcing that carries inhomogeneous boundary data.
//!
//! Node layout: every axis has `n + 2` nodes at `i * dx`, `i = 0..=n+1`,
//! with `dx = 1 / (n + 1)`. Nodes `1..=n` are unknowns of the
//! method-of-lines system; nodes `0` and `n + 1` lie on the faces and are
//! recovered from the interior values and the boundary data.
//!
//! Derivative faces (Neumann, Robin) are closed with the second-order
//! one-sided stencil `(3 u_b - 4 u_1 + u_2) / (2 dx)` for the outward normal
//! derivative; solving it for `u_b` eliminates the boundary node from the
//! neighbouring interior row.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, LinearOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Face {
    /// `x = 0`
    Left,
    /// `x = 1`
    Right,
    /// `y = 0`
    Bottom,
    /// `y = 1`
    Top,
}

impl Face {
    pub const ALL: [Face; 4] = [Face::Left, Face::Right, Face::Bottom, Face::Top];

    fn slot(self) -> usize {
        self as usize
    }

    /// Axis the face is normal to.
    pub fn axis(self) -> usize {
        match self {
            Face::Left | Face::Right => 0,
            Face::Bottom | Face::Top => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryKind {
    Dirichlet,
    /// Outward normal derivative prescribed.
    Neumann,
    /// `alpha u + beta ∂ₙu` prescribed.
    Robin { alpha: f64, beta: f64 },
}

impl BoundaryKind {
    /// `(alpha, beta)` in `alpha u + beta ∂ₙu = b`.
    pub fn coefficients(self) -> (f64, f64) {
        match self {
            BoundaryKind::Dirichlet => (1.0, 0.0),
            BoundaryKind::Neumann => (0.0, 1.0),
            BoundaryKind::Robin { alpha, beta } => (alpha, beta),
        }
    }

    pub fn is_dirichlet(self) -> bool {
        matches!(self, BoundaryKind::Dirichlet)
    }
}

/// Boundary data `b(face, point, t)`.
pub trait BoundaryData: Send + Sync {
    fn value(&self, face: Face, point: [f64; 2], t: f64) -> f64;
}

impl<F> BoundaryData for F
where
    F: Fn(Face, [f64; 2], f64) -> f64 + Send + Sync,
{
    fn value(&self, face: Face, point: [f64; 2], t: f64) -> f64 {
        self(face, point, t)
    }
}

/// Kind of condition on each face plus the data function.
#[derive(Clone)]
pub struct BoundarySpec {
    kinds: Vec<(Face, BoundaryKind)>,
    data: Arc<dyn BoundaryData>,
}

impl fmt::Debug for BoundarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundarySpec").field("kinds", &self.kinds).finish_non_exhaustive()
    }
}

impl BoundarySpec {
    pub fn new(kinds: Vec<(Face, BoundaryKind)>, data: impl BoundaryData + 'static) -> Self {
        Self {
            kinds,
            data: Arc::new(data),
        }
    }

    pub fn from_arc(kinds: Vec<(Face, BoundaryKind)>, data: Arc<dyn BoundaryData>) -> Self {
        Self { kinds, data }
    }

    pub fn kind(&self, face: Face) -> Option<BoundaryKind> {
        self.kinds.iter().find(|(f, _)| *f == face).map(|&(_, k)| k)
    }

    pub fn kinds(&self) -> &[(Face, BoundaryKind)] {
        &self.kinds
    }

    pub fn data(&self) -> &dyn BoundaryData {
        &*self.data
    }

    /// Same kinds, data scaled by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let inner = self.data.clone();
        Self::new(self.kinds.clone(), move |face, p, t| s * inner.value(face, p, t))
    }

    /// Same kinds, zero data.
    pub fn homogeneous(&self) -> Self {
        Self::new(self.kinds.clone(), |_, _, _| 0.0)
    }
}

/// Uniform tensor grid on `(0,1)^dim`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    n: [usize; 2],
    dx: [f64; 2],
}

impl Grid {
    pub fn new_1d(n: usize) -> Result<Self> {
        Self::new(1, [n, 1])
    }

    pub fn new_2d(nx: usize, ny: usize) -> Result<Self> {
        Self::new(2, [nx, ny])
    }

    fn new(dim: usize, n: [usize; 2]) -> Result<Self> {
        for &m in &n[..dim] {
            if m < 2 {
                return Err(Error::GridTooSmall(m));
            }
        }
        let spacing = |m: usize| 1.0 / (m + 1) as f64;
        Ok(Self {
            dim,
            n,
            dx: [spacing(n[0]), if dim == 2 { spacing(n[1]) } else { 0.0 }],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Interior nodes along `axis`.
    pub fn interior_per_axis(&self, axis: usize) -> usize {
        self.n[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.dx[axis]
    }

    /// Nodes along `axis` including both boundary nodes (1 for the unused
    /// second axis of a 1D grid).
    pub fn nodes_per_axis(&self, axis: usize) -> usize {
        if axis < self.dim {
            self.n[axis] + 2
        } else {
            1
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_axis(0) * self.nodes_per_axis(1)
    }

    pub fn interior_count(&self) -> usize {
        if self.dim == 1 {
            self.n[0]
        } else {
            self.n[0] * self.n[1]
        }
    }

    /// Coordinate of node `i` along `axis`; the last node sits exactly at 1.
    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        if axis >= self.dim {
            0.0
        } else if i == self.n[axis] + 1 {
            1.0
        } else {
            i as f64 * self.dx[axis]
        }
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        j * self.nodes_per_axis(0) + i
    }

    pub fn node_coords(&self, node: usize) -> (usize, usize) {
        let w = self.nodes_per_axis(0);
        (node % w, node / w)
    }

    pub fn point(&self, node: usize) -> [f64; 2] {
        let (i, j) = self.node_coords(node);
        [self.coordinate(0, i), self.coordinate(1, j)]
    }

    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        let inside = |axis: usize, k: usize| axis >= self.dim || (k >= 1 && k <= self.n[axis]);
        inside(0, i) && inside(1, j)
    }

    /// Index of interior node `(i, j)` in method-of-lines ordering.
    pub fn interior_index(&self, i: usize, j: usize) -> usize {
        if self.dim == 1 {
            i - 1
        } else {
            (j - 1) * self.n[0] + (i - 1)
        }
    }

    /// Node index of every interior unknown, in method-of-lines order.
    pub fn interior_nodes(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.interior_count());
        if self.dim == 1 {
            out.extend((1..=self.n[0]).map(|i| self.node(i, 0)));
        } else {
            for j in 1..=self.n[1] {
                out.extend((1..=self.n[0]).map(|i| self.node(i, j)));
            }
        }
        out
    }

    pub fn faces(&self) -> &'static [Face] {
        if self.dim == 1 {
            &Face::ALL[..2]
        } else {
            &Face::ALL
        }
    }

    /// Nodes on `face`, corners included in 2D.
    pub fn face_len(&self, face: Face) -> usize {
        if self.dim == 1 {
            1
        } else {
            self.nodes_per_axis(1 - face.axis())
        }
    }

    /// Grid coordinates of the `k`-th node of `face`.
    pub fn face_node(&self, face: Face, k: usize) -> (usize, usize) {
        let (ex, ey) = (self.nodes_per_axis(0) - 1, self.nodes_per_axis(1) - 1);
        match face {
            Face::Left => (0, k),
            Face::Right => (ex, k),
            Face::Bottom => (k, 0),
            Face::Top => (k, ey),
        }
    }

    pub fn is_corner(&self, face: Face, k: usize) -> bool {
        self.dim == 2 && (k == 0 || k + 1 == self.face_len(face))
    }

    /// Grid step pointing from `face` into the domain.
    fn inward(face: Face) -> (isize, isize) {
        match face {
            Face::Left => (1, 0),
            Face::Right => (-1, 0),
            Face::Bottom => (0, 1),
            Face::Top => (0, -1),
        }
    }

    /// Nodes one and two steps inward from `(i, j)` on `face`.
    fn normal_line(&self, face: Face, i: usize, j: usize) -> (usize, usize) {
        let (di, dj) = Self::inward(face);
        let at = |s: isize| {
            self.node(
                (i as isize + s * di) as usize,
                (j as isize + s * dj) as usize,
            )
        };
        (at(1), at(2))
    }

    /// Trapezoidal-rule quadrature weight of a node on `[0,1]^dim`.
    pub fn trapezoid_weight(&self, node: usize) -> f64 {
        let (i, j) = self.node_coords(node);
        let axis_weight = |axis: usize, k: usize| {
            if axis >= self.dim {
                1.0
            } else if k == 0 || k == self.n[axis] + 1 {
                0.5 * self.dx[axis]
            } else {
                self.dx[axis]
            }
        };
        axis_weight(0, i) * axis_weight(1, j)
    }

    /// Samples `f(point)` at every node.
    pub fn sample(&self, f: impl Fn([f64; 2]) -> f64) -> StateField {
        let values = (0..self.node_count()).map(|k| f(self.point(k))).collect();
        StateField { grid: *self, values }
    }
}

/// Values of a grid function at every node, boundary nodes included.
#[derive(Clone, Debug, PartialEq)]
pub struct StateField {
    grid: Grid,
    values: Vec<f64>,
}

impl StateField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.node_count()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::Dimension(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.node(i, j)]
    }

    pub fn interior(&self) -> Vec<f64> {
        self.grid.interior_nodes().into_iter().map(|k| self.values[k]).collect()
    }

    pub fn set_interior(&mut self, interior: &[f64]) -> Result<()> {
        let nodes = self.grid.interior_nodes();
        if interior.len() != nodes.len() {
            return Err(Error::Dimension(format!(
                "interior vector has {} values, grid has {} unknowns",
                interior.len(),
                nodes.len()
            )));
        }
        for (k, v) in nodes.into_iter().zip(interior) {
            self.values[k] = *v;
        }
        Ok(())
    }

    /// `self - s * other`, nodewise.
    pub fn minus_scaled(&self, s: f64, other: &StateField) -> StateField {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - s * b).collect();
        StateField { grid: self.grid, values }
    }

    pub fn max_abs(&self) -> f64 {
        crate::linalg::norm_inf(&self.values)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// One value per node of every face (corners included in 2D).
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryValues {
    faces: Vec<(Face, Vec<f64>)>,
}

impl BoundaryValues {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            faces: grid.faces().iter().map(|&f| (f, vec![0.0; grid.face_len(f)])).collect(),
        }
    }

    /// Samples `g(face, point)` at every face node.
    pub fn from_fn(grid: &Grid, mut g: impl FnMut(Face, [f64; 2]) -> f64) -> Self {
        let faces = grid
            .faces()
            .iter()
            .map(|&f| {
                let vals = (0..grid.face_len(f))
                    .map(|k| {
                        let (i, j) = grid.face_node(f, k);
                        g(f, grid.point(grid.node(i, j)))
                    })
                    .collect();
                (f, vals)
            })
            .collect();
        Self { faces }
    }

    pub fn face(&self, face: Face) -> &[f64] {
        self.faces
            .iter()
            .find(|(f, _)| *f == face)
            .map(|(_, v)| v.as_slice())
            .unwrap_or(&[])
    }

    pub fn face_mut(&mut self, face: Face) -> &mut [f64] {
        self.faces
            .iter_mut()
            .find(|(f, _)| *f == face)
            .map(|(_, v)| v.as_mut_slice())
            .unwrap_or(&mut [])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Face, &[f64])> {
        self.faces.iter().map(|(f, v)| (*f, v.as_slice()))
    }

    /// Nodewise `s * (a - b)`.
    pub fn scaled_difference(s: f64, a: &BoundaryValues, b: &BoundaryValues) -> BoundaryValues {
        let faces = a
            .faces
            .iter()
            .map(|(f, va)| {
                let vb = b.face(*f);
                (*f, va.iter().zip(vb).map(|(x, y)| s * (x - y)).collect())
            })
            .collect();
        BoundaryValues { faces }
    }

    pub fn max_abs(&self) -> f64 {
        self.faces.iter().fold(0.0, |m, (_, v)| f64::max(m, crate::linalg::norm_inf(v)))
    }

    pub fn is_zero(&self) -> bool {
        self.faces.iter().all(|(_, v)| v.iter().all(|x| *x == 0.0))
    }
}

/// Elimination weights of one face: `u_b = first u_1 + second u_2 + data g`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Closure {
    kind: BoundaryKind,
    first: f64,
    second: f64,
    data: f64,
}

impl Closure {
    fn new(face: Face, kind: BoundaryKind, h: f64) -> Result<Self> {
        let (alpha, beta) = kind.coefficients();
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::Boundary {
                face,
                reason: "non-finite Robin coefficient",
            });
        }
        if kind.is_dirichlet() {
            return Ok(Self {
                kind,
                first: 0.0,
                second: 0.0,
                data: 1.0,
            });
        }
        if beta == 0.0 {
            return Err(Error::Boundary {
                face,
                reason: "beta = 0 on a derivative face",
            });
        }
        let denom = alpha + 1.5 * beta / h;
        if denom.abs() < 1e-300 {
            return Err(Error::Boundary {
                face,
                reason: "singular one-sided closure",
            });
        }
        let g = 1.0 / denom;
        Ok(Self {
            kind,
            first: 2.0 * beta / h * g,
            second: -0.5 * beta / h * g,
            data: g,
        })
    }
}

/// The method-of-lines diffusion operator: `u' = A u + c(t)` on interior
/// nodes, with the boundary conditions eliminated.
#[derive(Clone, Debug)]
pub struct DiscreteDiffusion {
    grid: Grid,
    bc: BoundarySpec,
    matrix: CsrMatrix,
    closures: [Option<Closure>; 4],
}

/// Assembles the centred Laplacian for `grid` with boundary conditions `bc`.
pub fn build_laplacian(grid: Grid, bc: BoundarySpec) -> Result<DiscreteDiffusion> {
    DiscreteDiffusion::new(grid, bc)
}

impl DiscreteDiffusion {
    pub fn new(grid: Grid, bc: BoundarySpec) -> Result<Self> {
        for &(face, _) in bc.kinds() {
            if !grid.faces().contains(&face) {
                return Err(Error::Dimension(format!(
                    "{face:?} boundary given for a {}D grid",
                    grid.dim()
                )));
            }
        }
        let mut closures = [None; 4];
        for &face in grid.faces() {
            let kind = bc.kind(face).ok_or_else(|| {
                Error::Dimension(format!("no boundary condition for {face:?}"))
            })?;
            closures[face.slot()] = Some(Closure::new(face, kind, grid.spacing(face.axis()))?);
        }

        let n = grid.interior_count();
        let mut triplets = Vec::with_capacity(5 * n);
        for node in grid.interior_nodes() {
            let (i, j) = grid.node_coords(node);
            let row = grid.interior_index(i, j);
            for axis in 0..grid.dim() {
                let h2 = {
                    let h = grid.spacing(axis);
                    h * h
                };
                triplets.push((row, row, -2.0 / h2));
                for step in [-1isize, 1] {
                    let (ni, nj) = if axis == 0 {
                        ((i as isize + step) as usize, j)
                    } else {
                        (i, (j as isize + step) as usize)
                    };
                    if grid.is_interior(ni, nj) {
                        triplets.push((row, grid.interior_index(ni, nj), 1.0 / h2));
                        continue;
                    }
                    let face = match (axis, step) {
                        (0, -1) => Face::Left,
                        (0, _) => Face::Right,
                        (_, -1) => Face::Bottom,
                        _ => Face::Top,
                    };
                    let cl = closures[face.slot()].expect("closure for every face");
                    let (first, second) = grid.normal_line(face, ni, nj);
                    let (fi, fj) = grid.node_coords(first);
                    let (si, sj) = grid.node_coords(second);
                    if cl.first != 0.0 {
                        triplets.push((row, grid.interior_index(fi, fj), cl.first / h2));
                    }
                    if cl.second != 0.0 {
                        triplets.push((row, grid.interior_index(si, sj), cl.second / h2));
                    }
                }
            }
        }
        let matrix = CsrMatrix::from_triplets(n, n, &triplets);
        Ok(Self {
            grid,
            bc,
            matrix,
            closures,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn boundary(&self) -> &BoundarySpec {
        &self.bc
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn kind(&self, face: Face) -> BoundaryKind {
        self.closure(face).kind
    }

    fn closure(&self, face: Face) -> Closure {
        self.closures[face.slot()].expect("face belongs to grid")
    }

    /// Boundary data sampled at every face node at time `t`.
    pub fn boundary_data(&self, t: f64) -> BoundaryValues {
        let data = self.bc.data();
        BoundaryValues::from_fn(&self.grid, |face, p| data.value(face, p, t))
    }

    /// Forcing vector `c(t)` of the method-of-lines system.
    pub fn forcing(&self, t: f64) -> Vec<f64> {
        self.forcing_from(&self.boundary_data(t))
    }

    /// Forcing produced by arbitrary boundary values in place of `b(t)`.
    /// Linear in `values`.
    pub fn forcing_from(&self, values: &BoundaryValues) -> Vec<f64> {
        let g = &self.grid;
        let mut c = vec![0.0; g.interior_count()];
        for &face in g.faces() {
            let cl = self.closure(face);
            let h = g.spacing(face.axis());
            let vals = values.face(face);
            for (k, &v) in vals.iter().enumerate() {
                if g.is_corner(face, k) || v == 0.0 {
                    continue;
                }
                let (i, j) = g.face_node(face, k);
                let (first, _) = g.normal_line(face, i, j);
                let (fi, fj) = g.node_coords(first);
                c[g.interior_index(fi, fj)] += cl.data * v / (h * h);
            }
        }
        c
    }

    /// Field with the given interior values and boundary nodes recovered
    /// from the boundary data at time `t`.
    pub fn apply_boundary_reconstruction(&self, interior: &[f64], t: f64) -> Result<StateField> {
        self.reconstruct_with(interior, &self.boundary_data(t))
    }

    /// Boundary nodes filled so that the discrete boundary operator returns
    /// `values` on every face node it owns.
    pub fn reconstruct_with(&self, interior: &[f64], values: &BoundaryValues) -> Result<StateField> {
        let mut field = StateField::zeros(self.grid);
        field.set_interior(interior)?;
        self.fill_boundary(&mut field, values);
        Ok(field)
    }

    /// Overwrites the boundary nodes of `field` from its interior values.
    pub fn fill_boundary(&self, field: &mut StateField, values: &BoundaryValues) {
        let g = self.grid;
        let faces = g.faces();
        for &face in faces {
            let cl = self.closure(face);
            let vals = values.face(face);
            for k in 0..g.face_len(face) {
                if g.is_corner(face, k) {
                    continue;
                }
                let (i, j) = g.face_node(face, k);
                let (first, second) = g.normal_line(face, i, j);
                let v = &mut field.values;
                v[g.node(i, j)] = cl.first * v[first] + cl.second * v[second] + cl.data * vals[k];
            }
        }
        if g.dim() == 2 {
            self.fill_corners(field, values);
        }
    }

    fn fill_corners(&self, field: &mut StateField, values: &BoundaryValues) {
        let g = self.grid;
        let last = |f: Face| g.face_len(f) - 1;
        // (corner node, x-normal face and its index, y-normal face and its index)
        let corners = [
            (Face::Left, 0, Face::Bottom, 0),
            (Face::Left, last(Face::Left), Face::Top, 0),
            (Face::Right, 0, Face::Bottom, last(Face::Bottom)),
            (Face::Right, last(Face::Right), Face::Top, last(Face::Top)),
        ];
        for (fx, kx, fy, ky) in corners {
            let (i, j) = g.face_node(fx, kx);
            let node = g.node(i, j);
            let cx = self.closure(fx);
            let cy = self.closure(fy);
            let vx = values.face(fx)[kx];
            let vy = values.face(fy)[ky];
            let value = match (cx.kind.is_dirichlet(), cy.kind.is_dirichlet()) {
                (true, true) => 0.5 * (vx + vy),
                (true, false) => vx,
                (false, true) => vy,
                (false, false) => {
                    let v = &field.values;
                    let along = |face: Face, cl: Closure, data: f64| {
                        let (first, second) = g.normal_line(face, i, j);
                        cl.first * v[first] + cl.second * v[second] + cl.data * data
                    };
                    0.5 * (along(fx, cx, vx) + along(fy, cy, vy))
                }
            };
            field.values[node] = value;
        }
    }

    /// Discrete boundary operator `B` applied to a full field, at every face
    /// node (corners evaluated with the stencil of each face).
    pub fn apply_boundary_operator(&self, field: &StateField) -> BoundaryValues {
        let g = self.grid;
        let v = field.values();
        let faces = g
            .faces()
            .iter()
            .map(|&face| {
                let cl = self.closure(face);
                let (alpha, beta) = cl.kind.coefficients();
                let h = g.spacing(face.axis());
                let vals = (0..g.face_len(face))
                    .map(|k| {
                        let (i, j) = g.face_node(face, k);
                        let b = v[g.node(i, j)];
                        if cl.kind.is_dirichlet() {
                            b
                        } else {
                            let (first, second) = g.normal_line(face, i, j);
                            alpha * b + beta * (3.0 * b - 4.0 * v[first] + v[second]) / (2.0 * h)
                        }
                    })
                    .collect();
                (face, vals)
            })
            .collect();
        BoundaryValues { faces }
    }

    /// Whether the boundary operator on `face` at node `k` is reproduced
    /// exactly by reconstruction. False only for corners whose value is set
    /// by a Dirichlet neighbour or by averaging two derivative closures.
    pub fn owns_face_node(&self, face: Face, k: usize) -> bool {
        !self.grid.is_corner(face, k) || self.kind(face).is_dirichlet()
    }
}
