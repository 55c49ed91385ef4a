//! Incompressible flow: pressure projection, the Yosida resolvent of the
//! discrete Stokes operator, and the explicit Navier–Stokes step.

use crate::error::{Error, Result};
use crate::grid::{for_each_point, Bc, Grid, ScalarField, VectorField};
use crate::model::ModelParams;
use crate::ops;
use crate::spectral::{AxisKind, SeparableSolver};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final residual relative to the right-hand side.
    pub residual: f64,
}

/// Neumann Poisson solver for the cell Laplacian: preconditioned CG on the
/// zero-mean subspace, with the exact fast inverse as preconditioner.
pub struct PoissonSolver {
    grid: Grid,
    pub tolerance: f64,
    pub max_iterations: usize,
    inverse: SeparableSolver,
}

impl PoissonSolver {
    pub fn new(grid: &Grid) -> Self {
        let kinds = vec![AxisKind::CellNeumann; grid.dim()];
        PoissonSolver {
            grid: *grid,
            tolerance: 1e-10,
            max_iterations: 200,
            inverse: SeparableSolver::new(&kinds, grid.cells(), grid.dx()),
        }
    }

    fn precondition(&self, r: &ScalarField) -> ScalarField {
        let mut buf = r.interior();
        self.inverse.apply(&mut buf, |l| if l > 0.0 { 1.0 / l } else { 0.0 });
        let mut z = self.grid.zeros();
        z.set_interior(&buf);
        z
    }

    /// Solves Δ_h q = rhs − mean(rhs) with zero-mean q.
    pub fn solve(&self, rhs: &ScalarField) -> Result<(ScalarField, SolveStats)> {
        // work with the positive operator −Δ_h
        let mut b = rhs.map(|v| -v);
        b.remove_mean();
        let bnorm = b.norm2();
        let mut x = self.grid.zeros();
        if bnorm == 0.0 {
            return Ok((x, SolveStats::default()));
        }
        let mut r = b;
        let mut z = self.precondition(&r);
        let mut p = z.clone();
        let mut rz = r.dot(&z);
        let mut stats = SolveStats { iterations: 0, residual: 1.0 };
        while stats.iterations < self.max_iterations {
            let mut ap = ops::laplacian(&self.grid, &p);
            ap.scale(-1.0);
            let alpha = rz / p.dot(&ap);
            x.axpy(alpha, &p);
            r.axpy(-alpha, &ap);
            stats.iterations += 1;
            stats.residual = r.norm2() / bnorm;
            if stats.residual <= self.tolerance {
                x.remove_mean();
                x.fill_ghosts(Bc::NeumannZero);
                return Ok((x, stats));
            }
            z = self.precondition(&r);
            let rz_new = r.dot(&z);
            let beta = rz_new / rz;
            rz = rz_new;
            for (pv, zv) in p.data.iter_mut().zip(&z.data) {
                *pv = zv + beta * *pv;
            }
        }
        Err(Error::NonConvergence { solver: "poisson", iterations: stats.iterations, residual: stats.residual })
    }
}

/// Interior-face unknowns of component `d` packed x-fastest (wall faces excluded).
fn pack_faces(comp: &ScalarField, d: usize) -> Vec<f64> {
    let l = comp.layout;
    let (mut lo, mut hi) = ([0; 3], l.n);
    lo[d] = 1;
    hi[d] = l.n[d] - 1;
    let mut out = Vec::with_capacity((hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]));
    for_each_point(&l, lo, hi, |idx, _| out.push(comp.data[idx]));
    out
}

fn unpack_faces(comp: &mut ScalarField, d: usize, values: &[f64]) {
    let l = comp.layout;
    let (mut lo, mut hi) = ([0; 3], l.n);
    lo[d] = 1;
    hi[d] = l.n[d] - 1;
    let mut it = values.iter();
    for_each_point(&l, lo, hi, |idx, _| comp.data[idx] = *it.next().unwrap());
}

pub struct FlowSolver {
    grid: Grid,
    pub poisson: PoissonSolver,
    /// (I + ε(−Δ_h))^{-1} per velocity component is diagonal in these bases.
    resolvent: Vec<SeparableSolver>,
    pub yosida_tolerance: f64,
    pub yosida_max_iterations: usize,
    pub last_yosida: SolveStats,
    pub last_poisson: SolveStats,
    /// Previous Y_ε u, used as the initial guess by `momentum_tendency`.
    pub warm: Option<VectorField>,
    /// Relative tolerance of the Yosida solve inside `momentum_tendency`.
    pub stepping_tolerance: f64,
}

impl FlowSolver {
    pub fn new(grid: &Grid) -> Self {
        let dim = grid.dim();
        let resolvent = (0..dim)
            .map(|d| {
                let kinds: Vec<AxisKind> = (0..dim)
                    .map(|a| if a == d { AxisKind::NodeDirichlet } else { AxisKind::CellDirichlet })
                    .collect();
                SeparableSolver::new(&kinds, grid.cells(), grid.dx())
            })
            .collect();
        FlowSolver {
            grid: *grid,
            poisson: PoissonSolver::new(grid),
            resolvent,
            yosida_tolerance: 1e-10,
            yosida_max_iterations: 500,
            last_yosida: SolveStats::default(),
            last_poisson: SolveStats::default(),
            warm: None,
            stepping_tolerance: 1e-6,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Helmholtz projection: returns (u − ∇q, q) with Δ_h q = ∇·u, q zero-mean.
    /// The result has no-slip ghosts filled.
    pub fn project(&mut self, u: &VectorField) -> Result<(VectorField, ScalarField)> {
        let mut v = u.clone();
        v.zero_wall_faces();
        let div = ops::cell_divergence(&self.grid, &v);
        let (q, stats) = self.poisson.solve(&div)?;
        self.last_poisson = stats;
        let g = ops::face_gradient(&self.grid, &q);
        v.axpy(-1.0, &g);
        v.zero_wall_faces();
        v.fill_ghosts(Bc::DirichletZero);
        Ok((v, q))
    }

    fn projected(&mut self, u: &VectorField) -> Result<VectorField> {
        Ok(self.project(u)?.0)
    }

    /// v + ε P(−Δ_h v) for v with no-slip ghosts.
    fn stokes_shifted(&mut self, v: &VectorField, eps: f64) -> Result<VectorField> {
        let mut lap = ops::vector_laplacian(&self.grid, v);
        lap.scale(-1.0);
        let mut out = self.projected(&lap)?;
        out.scale(eps);
        out.axpy(1.0, v);
        Ok(out)
    }

    fn precondition(&mut self, r: &VectorField, eps: f64) -> Result<VectorField> {
        let mut z = self.grid.vector_zeros();
        for (d, solver) in self.resolvent.iter().enumerate() {
            let mut buf = pack_faces(&r.comps[d], d);
            solver.apply(&mut buf, |l| 1.0 / (1.0 + eps * l));
            unpack_faces(&mut z.comps[d], d, &buf);
        }
        self.projected(&z)
    }

    /// Y_ε u = (I + εA_h)^{-1} u with A_h = P(−Δ_h) on divergence-free fields,
    /// by preconditioned CG on the divergence-free subspace.
    pub fn yosida(&mut self, u: &VectorField, eps: f64) -> Result<VectorField> {
        self.yosida_from(u, eps, None)
    }

    /// As `yosida`, starting CG from a divergence-free `guess`.
    pub fn yosida_from(&mut self, u: &VectorField, eps: f64, guess: Option<&VectorField>) -> Result<VectorField> {
        if !(eps >= 0.0) {
            return Err(Error::Domain(format!("Yosida parameter must be nonnegative, got {eps}")));
        }
        let b = self.projected(u)?;
        let unorm = u.norm2();
        let bnorm = b.norm2();
        if bnorm == 0.0 || eps == 0.0 {
            self.last_yosida = SolveStats::default();
            return Ok(b);
        }
        // stop a little below the contract so the residual against u also holds
        let target = 0.5 * self.yosida_tolerance * unorm.max(bnorm);
        let (mut x, mut r) = match guess {
            Some(g) => {
                let mut x = g.clone();
                x.fill_ghosts(Bc::DirichletZero);
                let mut r = b;
                r.axpy(-1.0, &self.stokes_shifted(&x, eps)?);
                (x, r)
            }
            None => (self.grid.vector_zeros(), b),
        };
        let mut stats = SolveStats { iterations: 0, residual: r.norm2() / bnorm };
        if r.norm2() <= target {
            self.last_yosida = stats;
            x.zero_wall_faces();
            x.fill_ghosts(Bc::DirichletZero);
            return Ok(x);
        }
        let mut z = self.precondition(&r, eps)?;
        let mut p = z.clone();
        let mut rz = r.dot(&z);
        while stats.iterations < self.yosida_max_iterations {
            p.fill_ghosts(Bc::DirichletZero);
            let ap = self.stokes_shifted(&p, eps)?;
            let alpha = rz / p.dot(&ap);
            x.axpy(alpha, &p);
            r.axpy(-alpha, &ap);
            stats.iterations += 1;
            let rn = r.norm2();
            stats.residual = rn / bnorm;
            if rn <= target {
                self.last_yosida = stats;
                x.zero_wall_faces();
                x.fill_ghosts(Bc::DirichletZero);
                debug_assert!(
                    x.norm2() <= unorm * (1.0 + 1e-12 + self.yosida_tolerance),
                    "Yosida contraction violated: {} > {}",
                    x.norm2(),
                    unorm
                );
                return Ok(x);
            }
            z = self.precondition(&r, eps)?;
            let rz_new = r.dot(&z);
            let beta = rz_new / rz;
            rz = rz_new;
            for (pc, zc) in p.comps.iter_mut().zip(&z.comps) {
                for (pv, zv) in pc.data.iter_mut().zip(&zc.data) {
                    *pv = zv + beta * *pv;
                }
            }
        }
        self.last_yosida = stats;
        Err(Error::NonConvergence { solver: "yosida", iterations: stats.iterations, residual: stats.residual })
    }

    /// Explicit momentum tendency −κ(Y_ε u·∇)u + Δ_h u + n̄∇Φ on interior faces.
    pub fn momentum_tendency(&mut self, u: &VectorField, n: &ScalarField, params: &ModelParams) -> Result<VectorField> {
        let mut tend = ops::vector_laplacian(&self.grid, u);
        if params.kappa != 0.0 {
            let guess = self.warm.take();
            let strict = std::mem::replace(&mut self.yosida_tolerance, self.stepping_tolerance);
            let w = self.yosida_from(u, params.epsilon, guess.as_ref());
            self.yosida_tolerance = strict;
            let w = w?;
            self.warm = Some(w.clone());
            let adv = ops::advect_velocity(&self.grid, u, &w);
            tend.axpy(params.kappa, &adv);
        }
        if params.phi_gradient.iter().any(|&g| g != 0.0) {
            tend.axpy(1.0, &ops::buoyancy(&self.grid, n, params));
        }
        tend.zero_wall_faces();
        Ok(tend)
    }

    /// One projection step; returns the new velocity and zero-mean pressure.
    pub fn ns_step(
        &mut self,
        u: &VectorField,
        n: &ScalarField,
        params: &ModelParams,
        dt: f64,
    ) -> Result<(VectorField, ScalarField)> {
        let tend = self.momentum_tendency(u, n, params)?;
        let mut star = u.clone();
        star.axpy(dt, &tend);
        star.zero_wall_faces();
        star.fill_ghosts(Bc::DirichletZero);
        let (u_new, q) = self.project(&star)?;
        let mut pressure = q.map(|v| -v / dt);
        pressure.remove_mean();
        pressure.fill_ghosts(Bc::NeumannZero);
        Ok((u_new, pressure))
    }
}

/// Discretely divergence-free no-slip field from a stream function sampled at
/// cell nodes (2D) or node-aligned edges (3D, ψ along z only).
pub fn from_stream_function(grid: &Grid, psi: impl Fn([f64; 3]) -> f64) -> VectorField {
    let mut u = grid.vector_zeros();
    let dx = grid.dx3();
    let node = |i: usize, j: usize, z: f64| psi([i as f64 * dx[0], j as f64 * dx[1], z]);
    for (d, comp) in u.comps.iter_mut().enumerate().take(2) {
        let l = comp.layout;
        for_each_point(&l, [0; 3], l.n, |idx, [i, j, k]| {
            let z = grid.center(2, k);
            comp.data[idx] = if d == 0 {
                (node(i, j + 1, z) - node(i, j, z)) / dx[1]
            } else {
                -(node(i + 1, j, z) - node(i, j, z)) / dx[0]
            };
        });
    }
    u.zero_wall_faces();
    u.fill_ghosts(Bc::DirichletZero);
    u
}
