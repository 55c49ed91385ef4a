//! Checks shared by the integration tests and the acceptance harness. Each
//! returns the measured numbers; callers decide what to assert or print.
#![allow(dead_code)]

use chemoflow::audit::{weak_residual, TestFunction};
use chemoflow::driver::{default_config, RunConfig, Simulation};
use chemoflow::exponents;
use chemoflow::flow::FlowSolver;
use chemoflow::grid::{Grid, ScalarField, VectorField};
use chemoflow::model::{f_eps_prime_unchecked, f_eps_unchecked, ModelParams};
use chemoflow::ops;
use chemoflow::oracle::{self, assemble, pack_cells, pack_faces, unpack_cells, unpack_faces, OperatorId};
use chemoflow::transport::{self, State};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// max |a − b| / max(1, max |a|).
pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let d = a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    d / max_abs(a).max(1.0)
}

#[derive(Debug, Clone)]
pub struct Equivalence {
    /// (operator, worst relative disagreement over the random vectors)
    pub operators: Vec<(&'static str, f64)>,
    /// max |D + Gᵀ| relative to max |G|.
    pub dense_adjoint: f64,
    /// |⟨∇·v, s⟩ + ⟨v, ∇s⟩| relative to ‖v‖‖∇s‖, matrix-free.
    pub matrix_free_adjoint: f64,
}

impl Equivalence {
    pub fn worst(&self) -> f64 {
        self.operators.iter().map(|o| o.1).fold(0.0, f64::max)
    }
}

/// Dense twins against the matrix-free kernels on `samples` random vectors.
pub fn oracle_equivalence(grid: &Grid, samples: usize, seed: u64) -> Equivalence {
    let mut r = rng(seed);
    let lap_n = assemble(OperatorId::LaplacianNeumann, grid).unwrap();
    let lap_d = assemble(OperatorId::LaplacianDirichlet, grid).unwrap();
    let grad = assemble(OperatorId::Gradient, grid).unwrap();
    let div = assemble(OperatorId::Divergence, grid).unwrap();
    let proj = assemble(OperatorId::Projection, grid).unwrap();
    let mut flow = FlowSolver::new(grid);
    let mut worst = [0.0_f64; 5];
    let mut mf_adj = 0.0_f64;
    for _ in 0..samples {
        let s = random_vec(&mut r, lap_n.cols);
        let v = random_vec(&mut r, lap_d.cols);
        let sf = unpack_cells(grid, &s);
        let vf = unpack_faces(grid, &v);

        worst[0] = worst[0].max(rel_diff(&lap_n.apply(&s), &pack_cells(&ops::laplacian(grid, &sf))));
        worst[1] = worst[1].max(rel_diff(&lap_d.apply(&v), &pack_faces(&ops::vector_laplacian(grid, &vf))));
        let gs = ops::face_gradient(grid, &sf);
        worst[2] = worst[2].max(rel_diff(&grad.apply(&s), &pack_faces(&gs)));
        let dv = ops::cell_divergence(grid, &vf);
        worst[3] = worst[3].max(rel_diff(&div.apply(&v), &pack_cells(&dv)));
        let (pv, _) = flow.project(&vf).unwrap();
        worst[4] = worst[4].max(rel_diff(&proj.apply(&v), &pack_faces(&pv)));

        // wall faces of ∇s carry the Neumann ghost difference, which is zero
        let lhs = dv.dot(&sf);
        let rhs = vf.dot(&gs);
        mf_adj = mf_adj.max((lhs + rhs).abs() / (vf.norm2() * gs.norm2()).max(f64::MIN_POSITIVE));
    }
    let gt = grad.transpose();
    let dense_adjoint = div.data.iter().zip(&gt.data).fold(0.0_f64, |m, (a, b)| m.max((a + b).abs()))
        / max_abs(&grad.data);
    Equivalence {
        operators: vec![
            ("laplacian_neumann", worst[0]),
            ("laplacian_dirichlet", worst[1]),
            ("gradient", worst[2]),
            ("divergence", worst[3]),
            ("projection", worst[4]),
        ],
        dense_adjoint,
        matrix_free_adjoint: mf_adj,
    }
}

/// Random field projected onto the discretely divergence-free subspace.
pub fn random_solenoidal(grid: &Grid, flow: &mut FlowSolver, rng: &mut ChaCha8Rng) -> VectorField {
    let v = unpack_faces(grid, &random_vec(rng, grid.num_interior_faces()));
    flow.project(&v).unwrap().0
}

#[derive(Debug, Clone, Copy, Default)]
pub struct HelmholtzChecks {
    /// max over samples of ‖P(Pu) − Pu‖₂ / ‖u‖₂.
    pub idempotency: f64,
    /// max over samples of ‖∇·(Pu)‖_∞ / (tol · ‖∇·u‖_∞).
    pub divergence_in_tol_units: f64,
    /// max over samples of ‖Y_ε u‖₂ / ‖u‖₂ for divergence-free u.
    pub yosida_gain: f64,
}

pub fn helmholtz_checks(grid: &Grid, samples: usize, eps: f64, seed: u64) -> HelmholtzChecks {
    let mut r = rng(seed);
    let mut flow = FlowSolver::new(grid);
    let tol = flow.poisson.tolerance;
    let mut out = HelmholtzChecks::default();
    for _ in 0..samples {
        let u = unpack_faces(grid, &random_vec(&mut r, grid.num_interior_faces()));
        let (pu, _) = flow.project(&u).unwrap();
        let (ppu, _) = flow.project(&pu).unwrap();
        let mut d = ppu.clone();
        d.axpy(-1.0, &pu);
        out.idempotency = out.idempotency.max(d.norm2() / u.norm2());
        let div_u = ops::cell_divergence(grid, &u).max_abs();
        let div_pu = ops::cell_divergence(grid, &pu).max_abs();
        out.divergence_in_tol_units = out.divergence_in_tol_units.max(div_pu / (tol * div_u));

        let w = random_solenoidal(grid, &mut flow, &mut r);
        let y = flow.yosida(&w, eps).unwrap();
        out.yosida_gain = out.yosida_gain.max(y.norm2() / w.norm2());
    }
    out
}

/// Worst ‖Y_ε u_k − u_k/(1+ελ_k)‖_∞ / ‖u_k‖_∞ over the `modes` smallest
/// Stokes eigenpairs, and the smallest eigenvalues themselves.
pub fn yosida_eigen_consistency(grid: &Grid, eps: f64, modes: usize) -> (f64, Vec<f64>) {
    let pairs = oracle::stokes_eigenpairs(grid).unwrap();
    let mut flow = FlowSolver::new(grid);
    let mut worst = 0.0_f64;
    let mut lambdas = Vec::new();
    for (lambda, u) in pairs.iter().take(modes) {
        let y = flow.yosida(u, eps).unwrap();
        let mut expect = u.clone();
        expect.scale(1.0 / (1.0 + eps * lambda));
        let mut d = y;
        d.axpy(-1.0, &expect);
        worst = worst.max(d.max_abs() / u.max_abs());
        lambdas.push(*lambda);
    }
    (worst, lambdas)
}

fn heat_params(dim: usize) -> ModelParams {
    ModelParams::new(2.0, 1.0, 0.1, vec![0.0; dim])
}

/// One explicit n-step with c ≡ 0, u ≡ 0 and p = 2.
pub fn heat_step(grid: &Grid, n: &ScalarField, t: f64, dt: f64) -> ScalarField {
    let s = State::new(grid, t, n.clone(), grid.zeros(), grid.vector_zeros());
    transport::step(grid, &s, &heat_params(grid.dim()), dt, None, 0).unwrap().0.n
}

/// One-step errors against the dense heat reference for the given dt values
/// and the observed slopes between consecutive halvings.
pub fn heat_richardson(grid: &Grid, dts: &[f64], seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let n0 = unpack_cells(grid, &random_vec(&mut r, grid.num_cells()).iter().map(|v| 1.0 + 0.5 * v).collect::<Vec<_>>());
    let errors: Vec<f64> = dts
        .iter()
        .map(|&dt| {
            let exact = oracle::heat_reference(&n0, dt, grid).unwrap();
            let mut d = heat_step(grid, &n0, 0.0, dt);
            d.axpy(-1.0, &exact);
            (d.dot(&d) * grid.cell_volume()).sqrt()
        })
        .collect();
    let slopes = errors
        .windows(2)
        .zip(dts.windows(2))
        .map(|(e, d)| (e[0] / e[1]).ln() / (d[0] / d[1]).ln())
        .collect();
    (errors, slopes)
}

/// L² error of the explicit n-solver against 1 + cos(πx)e^{−π²t} on the unit
/// square at time `t_end`, with dt = 0.1 dx².
pub fn eigenmode_error(cells: usize, t_end: f64) -> f64 {
    let g = Grid::square(cells, 1.0).unwrap();
    let pi = std::f64::consts::PI;
    let mut n = g.scalar_from_fn(|x| 1.0 + (pi * x[0]).cos());
    let dt0 = 0.1 * g.dx()[0].powi(2);
    let mut t = 0.0;
    while t < t_end {
        let dt = dt0.min(t_end - t);
        n = heat_step(&g, &n, t, dt);
        t += dt;
    }
    let decay = (-pi * pi * t_end).exp();
    let exact = g.scalar_from_fn(|x| 1.0 + (pi * x[0]).cos() * decay);
    let mut d = n;
    d.axpy(-1.0, &exact);
    (d.dot(&d) * g.cell_volume()).sqrt()
}

pub const F_EPS_EPSILONS: [f64; 4] = [0.9, 0.5, 0.1, 1e-3];

/// Log-spaced sample of [0, 1e6], zero included.
pub fn f_eps_samples(per_decade: usize) -> Vec<f64> {
    let mut s = vec![0.0];
    let decades = 18;
    for k in 0..=decades * per_decade {
        s.push(10f64.powf(-12.0 + k as f64 / per_decade as f64));
    }
    s
}

/// Violations of 0 ≤ F_ε ≤ s, 0 ≤ F_ε′ ≤ 1, sF_ε′ ≤ 1/ε at one point.
pub fn f_eps_point_violations(s: f64, eps: f64) -> usize {
    let f = f_eps_unchecked(s, eps);
    let fp = f_eps_prime_unchecked(s, eps);
    [f >= 0.0, f <= s, fp >= 0.0, fp <= 1.0, s * fp <= 1.0 / eps].iter().filter(|ok| !**ok).count()
}

/// All violations over the sample set, including monotonicity in ε
/// (larger ε gives a smaller F_ε).
pub fn f_eps_violations(samples: &[f64]) -> usize {
    let mut bad = 0;
    for &s in samples {
        for &eps in &F_EPS_EPSILONS {
            bad += f_eps_point_violations(s, eps);
        }
        for w in F_EPS_EPSILONS.windows(2) {
            if f_eps_unchecked(s, w[0]) > f_eps_unchecked(s, w[1]) {
                bad += 1;
            }
        }
    }
    bad
}

/// |gap residual| / max(1, upper) for random (m0, p).
pub fn gap_identity_worst(cases: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let m0 = r.random_range(1.0..50.0);
        let p = r.random_range(1.34..12.0);
        let range = exponents::admissible_m_range(m0, p).unwrap();
        worst = worst.max(range.gap_residual.abs() / range.upper.abs().max(1.0));
    }
    worst
}

/// Default scenario at the given resolution and horizon, collecting states at
/// uniform snapshot times, then the three weak residuals against a fixed
/// off-center test function.
pub fn weak_residuals(cells: usize, t_end: f64, snapshot_interval: f64) -> [f64; 3] {
    let mut cfg = default_config();
    cfg.grid.cells = vec![cells, cells];
    cfg.time.t_end = t_end;
    cfg.time.snapshot_interval = Some(snapshot_interval);
    let snaps = collect_snapshots(cfg, snapshot_interval);
    let grid = snaps.0;
    let params = snaps.2;
    // off-center so that the mirror symmetry of the blob does not cancel terms
    let test = TestFunction { lo: vec![0.45, 0.35], hi: vec![1.35, 1.55], t0: 0.1 * t_end, t1: 0.9 * t_end };
    let mut flow = FlowSolver::new(&grid);
    weak_residual(&grid, &snaps.1, &params, &test, &mut flow).unwrap()
}

pub fn collect_snapshots(cfg: RunConfig, interval: f64) -> (Grid, Vec<State>, ModelParams) {
    let mut sim = Simulation::new(cfg).unwrap();
    let mut snaps = vec![sim.state.clone()];
    while !sim.finished() {
        sim.step().unwrap();
        let next = snaps.len() as f64 * interval;
        if (sim.state.t - next).abs() <= 1e-12 * next.max(1.0) {
            snaps.push(sim.state.clone());
        }
    }
    (sim.grid, snaps, sim.params.clone())
}
