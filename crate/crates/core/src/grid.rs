//! Uniform Cartesian boxes with cell-centered scalars and face-staggered
//! vectors (MAC layout), each stored with one ghost layer per active axis.
//!
//! Two-dimensional grids are stored as three-dimensional ones with a single,
//! ghost-free cell of unit thickness along z, so every kernel is written once.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_CELLS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    extents: [f64; 3],
    cells: [usize; 3],
    dx: [f64; 3],
}

impl Grid {
    pub fn new(dim: usize, extents: &[f64], cells: &[usize]) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Config(format!("dim must be 2 or 3, got {dim}")));
        }
        if extents.len() != dim || cells.len() != dim {
            return Err(Error::Config(format!(
                "expected {dim} extents and cell counts, got {} and {}",
                extents.len(),
                cells.len()
            )));
        }
        let mut e = [1.0; 3];
        let mut c = [1usize; 3];
        let mut dx = [1.0; 3];
        for d in 0..dim {
            if !(extents[d] > 0.0 && extents[d].is_finite()) {
                return Err(Error::Config(format!("extent {d} must be positive, got {}", extents[d])));
            }
            if cells[d] < MIN_CELLS {
                return Err(Error::Config(format!(
                    "axis {d} needs at least {MIN_CELLS} cells, got {}",
                    cells[d]
                )));
            }
            e[d] = extents[d];
            c[d] = cells[d];
            dx[d] = extents[d] / cells[d] as f64;
        }
        Ok(Grid { dim, extents: e, cells: c, dx })
    }

    pub fn square(n: usize, length: f64) -> Result<Self> {
        Grid::new(2, &[length, length], &[n, n])
    }

    pub fn cube(n: usize, length: f64) -> Result<Self> {
        Grid::new(3, &[length; 3], &[n; 3])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Extents of the active axes.
    pub fn extents(&self) -> &[f64] {
        &self.extents[..self.dim]
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells[..self.dim]
    }

    pub fn dx(&self) -> &[f64] {
        &self.dx[..self.dim]
    }

    pub(crate) fn dx3(&self) -> [f64; 3] {
        self.dx
    }

    pub fn min_dx(&self) -> f64 {
        self.dx().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx.iter().product()
    }

    pub fn domain_volume(&self) -> f64 {
        self.extents.iter().product()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.iter().product()
    }

    /// Number of interior (non-boundary) faces carrying velocity unknowns.
    pub fn num_interior_faces(&self) -> usize {
        (0..self.dim)
            .map(|d| {
                let mut n = self.cells;
                n[d] -= 1;
                n.iter().product::<usize>()
            })
            .sum()
    }

    fn ghosts(&self) -> [usize; 3] {
        [1, 1, if self.dim == 3 { 1 } else { 0 }]
    }

    pub fn scalar_layout(&self) -> Layout {
        Layout::new(self.cells, self.ghosts())
    }

    pub fn face_layout(&self, axis: usize) -> Layout {
        let mut n = self.cells;
        n[axis] += 1;
        Layout::new(n, self.ghosts())
    }

    /// Cell-center coordinate along `axis`.
    pub fn center(&self, axis: usize, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx[axis]
    }

    /// Coordinate of face `i` along its normal axis.
    pub fn face(&self, axis: usize, i: usize) -> f64 {
        i as f64 * self.dx[axis]
    }

    pub fn zeros(&self) -> ScalarField {
        ScalarField::zeros(self.scalar_layout())
    }

    pub fn vector_zeros(&self) -> VectorField {
        VectorField {
            comps: (0..self.dim).map(|d| ScalarField::zeros(self.face_layout(d))).collect(),
        }
    }

    /// Scalar field sampled at cell centers; ghosts left at zero.
    pub fn scalar_from_fn(&self, f: impl Fn([f64; 3]) -> f64) -> ScalarField {
        let mut s = self.zeros();
        let layout = s.layout;
        for_each_point(&layout, [0; 3], layout.n, |idx, [i, j, k]| {
            s.data[idx] = f([self.center(0, i), self.center(1, j), self.center(2, k)]);
        });
        s
    }
}

/// Storage shape of one staggered quantity: interior counts per axis, ghost
/// depth per axis and row-major strides with x fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub n: [usize; 3],
    pub ghost: [usize; 3],
    pub stride: [usize; 3],
    pub len: usize,
}

impl Layout {
    pub fn new(n: [usize; 3], ghost: [usize; 3]) -> Self {
        let full = [n[0] + 2 * ghost[0], n[1] + 2 * ghost[1], n[2] + 2 * ghost[2]];
        let stride = [1, full[0], full[0] * full[1]];
        Layout { n, ghost, stride, len: full[0] * full[1] * full[2] }
    }

    /// Storage index of interior coordinate (i, j, k); ghosts sit at -1 and n.
    #[inline(always)]
    pub fn idx(&self, i: isize, j: isize, k: isize) -> usize {
        let g = self.ghost;
        ((i + g[0] as isize) as usize)
            + ((j + g[1] as isize) as usize) * self.stride[1]
            + ((k + g[2] as isize) as usize) * self.stride[2]
    }

    #[inline(always)]
    pub fn at(&self, p: [usize; 3]) -> usize {
        (p[0] + self.ghost[0]) + (p[1] + self.ghost[1]) * self.stride[1] + (p[2] + self.ghost[2]) * self.stride[2]
    }

    pub fn interior_len(&self) -> usize {
        self.n.iter().product()
    }
}

/// Visits `lo..hi` (interior coordinates) in x-fastest order.
#[inline]
pub fn for_each_point(layout: &Layout, lo: [usize; 3], hi: [usize; 3], mut f: impl FnMut(usize, [usize; 3])) {
    for k in lo[2]..hi[2] {
        for j in lo[1]..hi[1] {
            let base = layout.at([0, j, k]);
            for i in lo[0]..hi[0] {
                f(base + i, [i, j, k]);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bc {
    NeumannZero,
    DirichletZero,
}

/// Cell-centered scalar (also used for a single face-centered component).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub layout: Layout,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(layout: Layout) -> Self {
        ScalarField { layout, data: vec![0.0; layout.len] }
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        let mut s = grid.zeros();
        s.data.fill(value);
        s
    }

    #[inline(always)]
    pub fn get(&self, i: isize, j: isize, k: isize) -> f64 {
        self.data[self.layout.idx(i, j, k)]
    }

    #[inline(always)]
    pub fn at(&self, p: [usize; 3]) -> f64 {
        self.data[self.layout.at(p)]
    }

    pub fn set(&mut self, p: [usize; 3], v: f64) {
        let idx = self.layout.at(p);
        self.data[idx] = v;
    }

    /// Interior values packed in x-fastest order.
    pub fn interior(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.layout.interior_len());
        for_each_point(&self.layout, [0; 3], self.layout.n, |idx, _| out.push(self.data[idx]));
        out
    }

    pub fn set_interior(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.layout.interior_len());
        let layout = self.layout;
        let mut it = values.iter();
        for_each_point(&layout, [0; 3], layout.n, |idx, _| self.data[idx] = *it.next().unwrap());
    }

    pub fn interior_fold(&self, init: f64, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
        let mut acc = init;
        for_each_point(&self.layout, [0; 3], self.layout.n, |idx, _| acc = f(acc, self.data[idx]));
        acc
    }

    pub fn sum(&self) -> f64 {
        self.interior_fold(0.0, |a, v| a + v)
    }

    pub fn max(&self) -> f64 {
        self.interior_fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.interior_fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.interior_fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        let mut ok = true;
        for_each_point(&self.layout, [0; 3], self.layout.n, |idx, _| ok &= self.data[idx].is_finite());
        ok
    }

    /// Interior dot product.
    pub fn dot(&self, other: &ScalarField) -> f64 {
        let mut acc = 0.0;
        for_each_point(&self.layout, [0; 3], self.layout.n, |idx, _| acc += self.data[idx] * other.data[idx]);
        acc
    }

    pub fn norm2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// self += a * x over the whole storage.
    pub fn axpy(&mut self, a: f64, x: &ScalarField) {
        for (s, v) in self.data.iter_mut().zip(&x.data) {
            *s += a * v;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.data.iter_mut().for_each(|v| *v *= a);
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField { layout: self.layout, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Removes the interior mean (null space of the Neumann Laplacian).
    pub fn remove_mean(&mut self) {
        let mean = self.sum() / self.layout.interior_len() as f64;
        let layout = self.layout;
        for_each_point(&layout, [0; 3], layout.n, |idx, _| self.data[idx] -= mean);
    }

    /// Scalar ghost fill for a cell-centered field.
    pub fn fill_ghosts(&mut self, bc: Bc) {
        let sign = match bc {
            Bc::NeumannZero => 1.0,
            Bc::DirichletZero => -1.0,
        };
        for axis in 0..3 {
            if self.layout.ghost[axis] == 0 {
                continue;
            }
            let n = self.layout.n[axis] as isize;
            self.fill_axis(axis, |edge| match edge {
                Edge::Low => (-1, 0, sign),
                Edge::High => (n, n - 1, sign),
            });
        }
    }

    /// Copies `factor * data[src]` into `data[dst]` for ghost planes along
    /// `axis`, sweeping the full (ghost-inclusive) range of the other axes so
    /// corners are filled by later axes.
    pub(crate) fn fill_axis(&mut self, axis: usize, rule: impl Fn(Edge) -> (isize, isize, f64)) {
        let l = self.layout;
        let (a1, a2) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let r1 = -(l.ghost[a1] as isize)..(l.n[a1] + l.ghost[a1]) as isize;
        for q in -(l.ghost[a2] as isize)..(l.n[a2] + l.ghost[a2]) as isize {
            for p in r1.clone() {
                for edge in [Edge::Low, Edge::High] {
                    let (dst, src, factor) = rule(edge);
                    let pos = |t: isize| {
                        let mut c = [0isize; 3];
                        c[axis] = t;
                        c[a1] = p;
                        c[a2] = q;
                        l.idx(c[0], c[1], c[2])
                    };
                    self.data[pos(dst)] = factor * self.data[pos(src)];
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Edge {
    Low,
    High,
}

/// Face-staggered vector field; component `d` lives on faces normal to axis `d`,
/// with face index 0 and `cells[d]` lying on the walls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorField {
    pub comps: Vec<ScalarField>,
}

impl VectorField {
    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn dot(&self, other: &VectorField) -> f64 {
        self.comps.iter().zip(&other.comps).map(|(a, b)| a.dot(b)).sum()
    }

    pub fn norm2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn axpy(&mut self, a: f64, x: &VectorField) {
        for (s, v) in self.comps.iter_mut().zip(&x.comps) {
            s.axpy(a, v);
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.comps.iter_mut().for_each(|c| c.scale(a));
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().map(|c| c.max_abs()).fold(0.0, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.comps.iter().all(|c| c.all_finite())
    }

    /// Ghost fill for the staggered components.
    ///
    /// `DirichletZero` pins wall faces to zero and reflects tangential
    /// neighbours with a sign flip (no-slip); `NeumannZero` mirrors evenly.
    pub fn fill_ghosts(&mut self, bc: Bc) {
        let sign = match bc {
            Bc::NeumannZero => 1.0,
            Bc::DirichletZero => -1.0,
        };
        for (d, comp) in self.comps.iter_mut().enumerate() {
            if bc == Bc::DirichletZero {
                let nd = comp.layout.n[d] as isize - 1;
                comp.fill_axis(d, |edge| match edge {
                    Edge::Low => (0, 0, 0.0),
                    Edge::High => (nd, nd, 0.0),
                });
            }
            for axis in 0..3 {
                if comp.layout.ghost[axis] == 0 {
                    continue;
                }
                let n = comp.layout.n[axis] as isize;
                if axis == d {
                    // reflect about the wall face
                    comp.fill_axis(axis, |edge| match edge {
                        Edge::Low => (-1, 1, sign),
                        Edge::High => (n, n - 2, sign),
                    });
                } else {
                    comp.fill_axis(axis, |edge| match edge {
                        Edge::Low => (-1, 0, sign),
                        Edge::High => (n, n - 1, sign),
                    });
                }
            }
        }
    }

    /// Sets wall-normal faces to zero without touching ghosts.
    pub fn zero_wall_faces(&mut self) {
        for (d, comp) in self.comps.iter_mut().enumerate() {
            let l = comp.layout;
            let nd = l.n[d] - 1;
            let mut hi = l.n;
            hi[d] = 1;
            for_each_point(&l, [0; 3], hi, |idx, _| comp.data[idx] = 0.0);
            let mut lo = [0; 3];
            lo[d] = nd;
            for_each_point(&l, lo, l.n, |idx, _| comp.data[idx] = 0.0);
        }
    }
}
