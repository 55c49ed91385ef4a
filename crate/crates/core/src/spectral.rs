//! Fast separable solvers for the constant-coefficient second-difference
//! operators on the box, built on real trigonometric transforms.
//!
//! Each axis of a packed array is diagonalized by a DCT or DST depending on
//! where its unknowns sit and which boundary condition the stencil encodes.

use std::sync::Arc;

use rustdct::{DctPlanner, Dst1, TransformType2And3};

/// Boundary treatment along one axis of a packed array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    /// Cell centers, zero-flux walls (even ghost): DCT-II / DCT-III.
    CellNeumann,
    /// Cell centers, zero value at the walls (odd ghost): DST-II / DST-III.
    CellDirichlet,
    /// Interior nodes with pinned wall values: DST-I.
    NodeDirichlet,
}

enum Plan {
    Type23(Arc<dyn TransformType2And3<f64>>),
    Type1(Arc<dyn Dst1<f64>>),
}

struct Axis {
    kind: AxisKind,
    len: usize,
    plan: Plan,
    /// Eigenvalues of −δ² per mode.
    eig: Vec<f64>,
    /// inverse(forward(x)) = scale·x.
    scale: f64,
    scratch: usize,
}

impl Axis {
    fn new(planner: &mut DctPlanner<f64>, kind: AxisKind, cells: usize, dx: f64) -> Self {
        let len = match kind {
            AxisKind::NodeDirichlet => cells - 1,
            _ => cells,
        };
        let plan = match kind {
            AxisKind::CellNeumann => Plan::Type23(planner.plan_dct2(len)),
            AxisKind::CellDirichlet => Plan::Type23(planner.plan_dst2(len)),
            AxisKind::NodeDirichlet => Plan::Type1(planner.plan_dst1(len)),
        };
        let scratch = match &plan {
            Plan::Type23(p) => p.get_scratch_len(),
            Plan::Type1(p) => p.get_scratch_len(),
        };
        let n = cells as f64;
        let eig = (0..len)
            .map(|k| {
                let freq = match kind {
                    AxisKind::CellNeumann => k as f64,
                    _ => (k + 1) as f64,
                };
                (2.0 - 2.0 * (std::f64::consts::PI * freq / n).cos()) / (dx * dx)
            })
            .collect();
        let mut axis = Axis { kind, len, plan, eig, scale: 1.0, scratch };
        let mut probe = vec![0.0; len];
        probe[0] = 1.0;
        let mut scratch = vec![0.0; axis.scratch];
        axis.forward(&mut probe, &mut scratch);
        axis.inverse(&mut probe, &mut scratch);
        axis.scale = probe[0];
        axis
    }

    fn forward(&self, line: &mut [f64], scratch: &mut [f64]) {
        match (&self.plan, self.kind) {
            (Plan::Type23(p), AxisKind::CellNeumann) => p.process_dct2_with_scratch(line, scratch),
            (Plan::Type23(p), _) => p.process_dst2_with_scratch(line, scratch),
            (Plan::Type1(p), _) => {
                // the FFT-based DST-I reads scratch it never writes
                scratch.fill(0.0);
                p.process_dst1_with_scratch(line, scratch)
            }
        }
    }

    fn inverse(&self, line: &mut [f64], scratch: &mut [f64]) {
        match (&self.plan, self.kind) {
            (Plan::Type23(p), AxisKind::CellNeumann) => p.process_dct3_with_scratch(line, scratch),
            (Plan::Type23(p), _) => p.process_dst3_with_scratch(line, scratch),
            (Plan::Type1(p), _) => {
                scratch.fill(0.0);
                p.process_dst1_with_scratch(line, scratch)
            }
        }
    }
}

/// Diagonalizes a sum of per-axis −δ² operators on a packed array of shape
/// `dims` (x fastest); unused trailing axes have length 1.
pub struct SeparableSolver {
    dims: [usize; 3],
    axes: Vec<Axis>,
    scratch_len: usize,
}

impl SeparableSolver {
    /// `cells[a]` and `dx[a]` describe axis `a` of the underlying grid.
    pub fn new(kinds: &[AxisKind], cells: &[usize], dx: &[f64]) -> Self {
        let mut planner = DctPlanner::new();
        let axes: Vec<Axis> =
            kinds.iter().zip(cells).zip(dx).map(|((&k, &n), &h)| Axis::new(&mut planner, k, n, h)).collect();
        let mut dims = [1; 3];
        for (a, ax) in axes.iter().enumerate() {
            dims[a] = ax.len;
        }
        let scratch_len = axes.iter().map(|a| a.scratch.max(a.len)).max().unwrap_or(0);
        SeparableSolver { dims, axes, scratch_len }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn sweep(&self, buf: &mut [f64], inverse: bool) {
        let [n0, n1, n2] = self.dims;
        let strides = [1, n0, n0 * n1];
        let mut scratch = vec![0.0; self.scratch_len];
        let mut line = vec![0.0; self.dims.iter().copied().max().unwrap_or(0)];
        for (a, ax) in self.axes.iter().enumerate() {
            let st = strides[a];
            let len = ax.len;
            let line = &mut line[..len];
            let scratch = &mut scratch[..ax.scratch];
            // base offsets of every line along axis a
            let (o1, o2) = match a {
                0 => ((n1, strides[1]), (n2, strides[2])),
                1 => ((n0, strides[0]), (n2, strides[2])),
                _ => ((n0, strides[0]), (n1, strides[1])),
            };
            for q in 0..o2.0 {
                for p in 0..o1.0 {
                    let base = p * o1.1 + q * o2.1;
                    for i in 0..len {
                        line[i] = buf[base + i * st];
                    }
                    if inverse {
                        ax.inverse(line, scratch);
                    } else {
                        ax.forward(line, scratch);
                    }
                    for i in 0..len {
                        buf[base + i * st] = line[i];
                    }
                }
            }
        }
    }

    /// Replaces `buf` by Σ_modes m(λ) ⟨mode, buf⟩ mode, where λ is the mode's
    /// eigenvalue of Σ_a −δ²_a.
    pub fn apply(&self, buf: &mut [f64], multiplier: impl Fn(f64) -> f64) {
        assert_eq!(buf.len(), self.len());
        self.sweep(buf, false);
        let norm: f64 = self.axes.iter().map(|a| a.scale).product();
        let [n0, n1, _] = self.dims;
        let eig = |a: usize, k: usize| self.axes.get(a).map_or(0.0, |ax| ax.eig[k]);
        for (idx, v) in buf.iter_mut().enumerate() {
            let (i, j, k) = (idx % n0, (idx / n0) % n1, idx / (n0 * n1));
            let lambda = eig(0, i) + eig(1, j) + eig(2, k);
            *v *= multiplier(lambda) / norm;
        }
        self.sweep(buf, true);
    }
}
