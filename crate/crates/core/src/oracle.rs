//! Dense reference implementations for small grids.
//!
//! Matrices are assembled from the stencil formulas directly (not by probing
//! the matrix-free kernels), so comparing the two is a genuine check.

use crate::error::{Error, Result};
use crate::grid::{for_each_point, Bc, Grid, ScalarField, VectorField};

/// Largest number of unknowns the dense routines accept.
pub const SIZE_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorId {
    /// Cells → cells, zero-flux walls.
    LaplacianNeumann,
    /// Interior faces → interior faces, componentwise with no-slip ghosts.
    LaplacianDirichlet,
    /// Cells → interior faces.
    Gradient,
    /// Interior faces → cells (wall faces carry zero flux).
    Divergence,
    /// Interior faces → interior faces, Helmholtz projection.
    Projection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcTag {
    Neumann,
    Dirichlet,
    Mixed,
}

/// Row-major dense matrix with the boundary treatment it encodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
    pub bc: BcTag,
}

impl DenseOperator {
    pub fn zeros(rows: usize, cols: usize, bc: BcTag) -> Self {
        DenseOperator { rows, cols, data: vec![0.0; rows * cols], bc }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n, BcTag::Mixed);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] += v;
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        self.data.chunks_exact(self.cols).map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn matmul(&self, other: &DenseOperator) -> DenseOperator {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols, BcTag::Mixed);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in out.data[i * other.cols..(i + 1) * other.cols].iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseOperator {
        let mut out = Self::zeros(self.cols, self.rows, self.bc);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j);
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &DenseOperator) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Interior cell values, x fastest.
pub fn pack_cells(s: &ScalarField) -> Vec<f64> {
    s.interior()
}

/// Cell field with Neumann ghosts from packed values.
pub fn unpack_cells(grid: &Grid, values: &[f64]) -> ScalarField {
    let mut s = grid.zeros();
    s.set_interior(values);
    s.fill_ghosts(Bc::NeumannZero);
    s
}

/// Interior faces of every component, component-major, x fastest.
pub fn pack_faces(v: &VectorField) -> Vec<f64> {
    let mut out = Vec::new();
    for (d, comp) in v.comps.iter().enumerate() {
        let l = comp.layout;
        let (mut lo, mut hi) = ([0; 3], l.n);
        lo[d] = 1;
        hi[d] = l.n[d] - 1;
        for_each_point(&l, lo, hi, |idx, _| out.push(comp.data[idx]));
    }
    out
}

/// No-slip vector field from packed interior-face values.
pub fn unpack_faces(grid: &Grid, values: &[f64]) -> VectorField {
    let mut v = grid.vector_zeros();
    let mut it = values.iter();
    for (d, comp) in v.comps.iter_mut().enumerate() {
        let l = comp.layout;
        let (mut lo, mut hi) = ([0; 3], l.n);
        lo[d] = 1;
        hi[d] = l.n[d] - 1;
        for_each_point(&l, lo, hi, |idx, _| comp.data[idx] = *it.next().expect("enough face values"));
    }
    assert!(it.next().is_none(), "too many face values");
    v.fill_ghosts(Bc::DirichletZero);
    v
}

/// Index maps between grid positions and packed unknowns.
struct Numbering {
    cells: [usize; 3],
    /// Offsets of each component's block and its (interior) extents.
    face_offset: Vec<usize>,
    face_dims: Vec<[usize; 3]>,
    num_faces: usize,
}

impl Numbering {
    fn new(grid: &Grid) -> Self {
        let mut cells = [1; 3];
        cells[..grid.dim()].copy_from_slice(grid.cells());
        let mut face_offset = Vec::new();
        let mut face_dims = Vec::new();
        let mut off = 0;
        for d in 0..grid.dim() {
            let mut dims = cells;
            dims[d] -= 1;
            face_offset.push(off);
            face_dims.push(dims);
            off += dims.iter().product::<usize>();
        }
        Numbering { cells, face_offset, face_dims, num_faces: off }
    }

    fn cell(&self, p: [usize; 3]) -> usize {
        p[0] + self.cells[0] * (p[1] + self.cells[1] * p[2])
    }

    fn num_cells(&self) -> usize {
        self.cells.iter().product()
    }

    /// Face of component d with normal index i ∈ 1..n_d (interior) at tangential position p.
    fn face(&self, d: usize, p: [isize; 3]) -> Option<usize> {
        let dims = self.face_dims[d];
        let mut q = [0usize; 3];
        for a in 0..3 {
            let v = if a == d { p[a] - 1 } else { p[a] };
            if v < 0 || v as usize >= dims[a] {
                return None;
            }
            q[a] = v as usize;
        }
        Some(self.face_offset[d] + q[0] + dims[0] * (q[1] + dims[1] * q[2]))
    }

    fn for_each_face(&self, mut f: impl FnMut(usize, usize, [isize; 3])) {
        for d in 0..self.face_dims.len() {
            let dims = self.face_dims[d];
            for k in 0..dims[2] {
                for j in 0..dims[1] {
                    for i in 0..dims[0] {
                        let mut p = [i as isize, j as isize, k as isize];
                        p[d] += 1;
                        f(self.face(d, p).unwrap(), d, p);
                    }
                }
            }
        }
    }
}

fn check_cap(unknowns: usize) -> Result<()> {
    if unknowns > SIZE_CAP {
        return Err(Error::SizeCap { unknowns, cap: SIZE_CAP });
    }
    Ok(())
}

fn unknowns(grid: &Grid, op: OperatorId) -> usize {
    let num = Numbering::new(grid);
    match op {
        OperatorId::LaplacianNeumann => num.num_cells(),
        _ => num.num_cells().max(num.num_faces),
    }
}

pub fn assemble(op: OperatorId, grid: &Grid) -> Result<DenseOperator> {
    check_cap(unknowns(grid, op))?;
    let num = Numbering::new(grid);
    let dim = grid.dim();
    let dx = grid.dx();
    let (nc, nf) = (num.num_cells(), num.num_faces);
    Ok(match op {
        OperatorId::LaplacianNeumann => {
            let mut m = DenseOperator::zeros(nc, nc, BcTag::Neumann);
            let c = num.cells;
            for k in 0..c[2] {
                for j in 0..c[1] {
                    for i in 0..c[0] {
                        let p = [i, j, k];
                        let row = num.cell(p);
                        for a in 0..dim {
                            let w = 1.0 / (dx[a] * dx[a]);
                            for step in [-1isize, 1] {
                                let q = p[a] as isize + step;
                                if q < 0 || q as usize >= c[a] {
                                    continue;
                                }
                                let mut nb = p;
                                nb[a] = q as usize;
                                m.add(row, num.cell(nb), w);
                                m.add(row, row, -w);
                            }
                        }
                    }
                }
            }
            m
        }
        OperatorId::LaplacianDirichlet => {
            let mut m = DenseOperator::zeros(nf, nf, BcTag::Dirichlet);
            num.for_each_face(|row, d, p| {
                for a in 0..dim {
                    let w = 1.0 / (dx[a] * dx[a]);
                    m.add(row, row, -2.0 * w);
                    for step in [-1isize, 1] {
                        let mut q = p;
                        q[a] += step;
                        match num.face(d, q) {
                            Some(col) => m.add(row, col, w),
                            // along the normal the neighbour is a wall face (zero);
                            // tangentially the ghost mirrors with a sign flip
                            None if a != d => m.add(row, row, -w),
                            None => {}
                        }
                    }
                }
            });
            m
        }
        OperatorId::Gradient => {
            let mut m = DenseOperator::zeros(nf, nc, BcTag::Neumann);
            num.for_each_face(|row, d, p| {
                let mut left = [p[0] as usize, p[1] as usize, p[2] as usize];
                let right = left;
                left[d] -= 1;
                m.add(row, num.cell(right), 1.0 / dx[d]);
                m.add(row, num.cell(left), -1.0 / dx[d]);
            });
            m
        }
        OperatorId::Divergence => {
            let mut m = DenseOperator::zeros(nc, nf, BcTag::Neumann);
            num.for_each_face(|col, d, p| {
                let mut left = [p[0] as usize, p[1] as usize, p[2] as usize];
                let right = left;
                left[d] -= 1;
                // face i is the high face of cell i−1 and the low face of cell i
                m.add(num.cell(left), col, 1.0 / dx[d]);
                m.add(num.cell(right), col, -1.0 / dx[d]);
            });
            m
        }
        OperatorId::Projection => {
            let g = assemble(OperatorId::Gradient, grid)?;
            let dv = assemble(OperatorId::Divergence, grid)?;
            let lap = dv.matmul(&g);
            let (vals, vecs) = symmetric_eigen(&lap)?;
            // pseudo-inverse on the complement of constants
            let scale = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let mut pinv = DenseOperator::zeros(nc, nc, BcTag::Neumann);
            for (k, &l) in vals.iter().enumerate() {
                if l.abs() <= 1e-12 * scale {
                    continue;
                }
                for i in 0..nc {
                    let vi = vecs.get(i, k) / l;
                    for j in 0..nc {
                        pinv.add(i, j, vi * vecs.get(j, k));
                    }
                }
            }
            let correction = g.matmul(&pinv).matmul(&dv);
            let mut p = DenseOperator::identity(nf);
            for (a, b) in p.data.iter_mut().zip(&correction.data) {
                *a -= b;
            }
            p.bc = BcTag::Mixed;
            p
        }
    })
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns ascending eigenvalues and the matrix whose columns are the
/// orthonormal eigenvectors.
pub fn symmetric_eigen(m: &DenseOperator) -> Result<(Vec<f64>, DenseOperator)> {
    let n = m.rows;
    if m.cols != n {
        return Err(Error::Precondition("eigen-decomposition needs a square matrix".into()));
    }
    check_cap(n)?;
    let mut a = m.data.clone();
    let mut v = DenseOperator::identity(n).data;
    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i * n + j].powi(2)).sum::<f64>().sqrt();
        if off <= 1e-15 * frob.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let (app, aqq) = (a[p * n + p], a[q * n + q]);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let vals = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vecs = DenseOperator::zeros(n, n, m.bc);
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vecs.data[k * n + new] = v[k * n + old];
        }
    }
    Ok((vals, vecs))
}

/// exp(tΔ_N) n0 through the eigen-decomposition of the dense Neumann Laplacian.
pub fn heat_reference(n0: &ScalarField, t: f64, grid: &Grid) -> Result<ScalarField> {
    let lap = assemble(OperatorId::LaplacianNeumann, grid)?;
    let (vals, vecs) = symmetric_eigen(&lap)?;
    let x = pack_cells(n0);
    let n = x.len();
    let mut out = vec![0.0; n];
    for (k, &l) in vals.iter().enumerate() {
        let coeff: f64 = (0..n).map(|i| vecs.get(i, k) * x[i]).sum::<f64>() * (t * l).exp();
        for i in 0..n {
            out[i] += coeff * vecs.get(i, k);
        }
    }
    Ok(unpack_cells(grid, &out))
}

/// Eigenpairs of A_h = P(−Δ_h) on the discretely divergence-free subspace,
/// eigenvalues ascending.
pub fn stokes_eigenpairs(grid: &Grid) -> Result<Vec<(f64, VectorField)>> {
    let p = assemble(OperatorId::Projection, grid)?;
    let lap = assemble(OperatorId::LaplacianDirichlet, grid)?;
    let nf = p.rows;
    // orthonormal basis of range(P): eigenvectors of P with eigenvalue 1
    let (pv, pvecs) = symmetric_eigen(&p)?;
    let basis: Vec<usize> = (0..nf).filter(|&k| pv[k] > 0.5).collect();
    let m = basis.len();
    let mut q = DenseOperator::zeros(nf, m, BcTag::Dirichlet);
    for (c, &k) in basis.iter().enumerate() {
        for i in 0..nf {
            q.data[i * m + c] = pvecs.get(i, k);
        }
    }
    let mut neg = lap;
    neg.data.iter_mut().for_each(|v| *v = -*v);
    let reduced = q.transpose().matmul(&neg).matmul(&q);
    // symmetrize against round-off before the Jacobi sweep
    let mut sym = reduced.clone();
    for i in 0..m {
        for j in 0..m {
            sym.data[i * m + j] = 0.5 * (reduced.get(i, j) + reduced.get(j, i));
        }
    }
    let (vals, vecs) = symmetric_eigen(&sym)?;
    let full = q.matmul(&vecs);
    Ok((0..m)
        .map(|k| {
            let col: Vec<f64> = (0..nf).map(|i| full.get(i, k)).collect();
            (vals[k], unpack_faces(grid, &col))
        })
        .collect())
}
