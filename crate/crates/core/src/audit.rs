//! Discrete counterparts of the energy functionals and dissipation rates, the
//! cumulative time integrals, and verdicts on their qualitative behaviour.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowSolver;
use crate::grid::{for_each_point, Bc, Grid, ScalarField, VectorField};
use crate::model::{f_eps_prime_unchecked, f_eps_unchecked, psi_prime, ModelParams};
use crate::ops;
use crate::transport::State;

/// Floor applied to every denominator n, c, c³, g(c).
pub const DIVISION_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyReport {
    pub t: f64,
    pub mass_n: f64,
    pub min_n: f64,
    pub max_n: f64,
    pub max_c: f64,
    pub e_nlogn: f64,
    pub e_psi: f64,
    pub e_kin: f64,
    pub d_plap: f64,
    pub d_plap_power: f64,
    pub d_hess: f64,
    pub d_quart: f64,
    pub d_gradu: f64,
    pub norm_u_103: f64,
    pub norm_n_r: f64,
    /// ∫|∇c|⁴.
    pub grad_c4: f64,
    /// Cells where any denominator hit the floor.
    pub floored_cells: usize,
    /// Cells with n < 0 (they enter e_nlogn as n ln|n|).
    pub negative_n_cells: usize,
}

impl EnergyReport {
    /// ∫ n ln n + ½∫|∇Ψ(c)|².
    pub fn lyapunov(&self) -> f64 {
        self.e_nlogn + self.e_psi
    }
}

/// Centered cell gradient (average of the two adjacent face gradients).
#[inline(always)]
fn cell_grad(s: &[f64], idx: usize, strides: &[usize; 3], inv2dx: &[f64; 3], dim: usize) -> [f64; 3] {
    let mut g = [0.0; 3];
    for d in 0..dim {
        g[d] = (s[idx + strides[d]] - s[idx - strides[d]]) * inv2dx[d];
    }
    g
}

fn floor(v: f64, hits: &mut bool) -> f64 {
    if v < DIVISION_FLOOR {
        *hits = true;
        DIVISION_FLOOR
    } else {
        v
    }
}

fn finite(v: f64, term: &'static str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::DiagnosticOverflow(term))
    }
}

/// Velocity averaged to cell centers.
pub fn cell_velocity(grid: &Grid, u: &VectorField) -> Vec<ScalarField> {
    (0..grid.dim())
        .map(|d| {
            let mut out = grid.zeros();
            let fl = u.comps[d].layout;
            let l = out.layout;
            for_each_point(&l, [0; 3], l.n, |idx, p| {
                let f = fl.at(p);
                out.data[idx] = 0.5 * (u.comps[d].data[f] + u.comps[d].data[f + fl.stride[d]]);
            });
            out
        })
        .collect()
}

/// Every tracked functional at one instant. Ghosts of n and c must be filled
/// (corners included) and u must carry no-slip ghosts.
pub fn energy_report(grid: &Grid, state: &State, params: &ModelParams, r: f64) -> Result<EnergyReport> {
    let dim = grid.dim();
    let dv = grid.cell_volume();
    let dx = grid.dx3();
    let l = state.n.layout;
    let strides = l.stride;
    let inv2dx = [0.5 / dx[0], 0.5 / dx[1], 0.5 / dx[2]];
    let (nd, cd) = (&state.n.data, &state.c.data);
    let (p, eps) = (params.p, params.epsilon);
    let pow_coeff = ((p - 1.0) / p).powf(p);
    let pair = &params.sensitivity;

    let mut rep = EnergyReport {
        t: state.t,
        min_n: f64::INFINITY,
        max_n: f64::NEG_INFINITY,
        max_c: f64::NEG_INFINITY,
        ..Default::default()
    };
    for_each_point(&l, [0; 3], l.n, |idx, _| {
        let (n, c) = (nd[idx], cd[idx]);
        let mut floored = false;
        rep.mass_n += n;
        rep.min_n = rep.min_n.min(n);
        rep.max_n = rep.max_n.max(n);
        rep.max_c = rep.max_c.max(c);
        if n < 0.0 {
            rep.negative_n_cells += 1;
        }
        if n != 0.0 {
            rep.e_nlogn += n * n.abs().ln();
        }
        rep.norm_n_r += n.abs().powf(r);

        let gn = cell_grad(nd, idx, &strides, &inv2dx, dim);
        let gn2: f64 = gn.iter().map(|v| v * v).sum();
        let n_f = floor(n, &mut floored);
        rep.d_plap += (gn2 + eps).powf(0.5 * (p - 2.0)) * gn2 / n_f;
        rep.d_plap_power += pow_coeff * gn2.powf(0.5 * p) / n_f;

        let gc = cell_grad(cd, idx, &strides, &inv2dx, dim);
        let gc2: f64 = gc.iter().map(|v| v * v).sum();
        let g_c = pair.g(c);
        let w = if g_c < DIVISION_FLOOR {
            floored = true;
            1.0 / DIVISION_FLOOR
        } else {
            psi_prime(c, pair).powi(2)
        };
        rep.e_psi += 0.5 * w * gc2;

        let c_f = floor(c, &mut floored);
        rep.d_quart += gc2 * gc2 / (c_f * c_f * c_f);
        rep.grad_c4 += gc2 * gc2;

        let mut hess2 = 0.0;
        for a in 0..dim {
            let sa = strides[a];
            let caa = (cd[idx + sa] - 2.0 * c + cd[idx - sa]) / (dx[a] * dx[a]);
            hess2 += caa * caa;
            for b in (a + 1)..dim {
                let sb = strides[b];
                let cab = (cd[idx + sa + sb] - cd[idx + sa - sb] - cd[idx - sa + sb] + cd[idx - sa - sb])
                    / (4.0 * dx[a] * dx[b]);
                hess2 += 2.0 * cab * cab;
            }
        }
        rep.d_hess += hess2 / c_f;
        if floored {
            rep.floored_cells += 1;
        }
    });

    let uc = cell_velocity(grid, &state.u);
    for_each_point(&l, [0; 3], l.n, |idx, _| {
        let s2: f64 = uc.iter().map(|c| c.data[idx] * c.data[idx]).sum();
        rep.norm_u_103 += s2.powf(5.0 / 3.0);
    });
    rep.e_kin = state.u.dot(&state.u);
    rep.d_gradu = -state.u.dot(&ops::vector_laplacian(grid, &state.u));

    for v in [
        &mut rep.mass_n,
        &mut rep.e_nlogn,
        &mut rep.e_psi,
        &mut rep.e_kin,
        &mut rep.d_plap,
        &mut rep.d_plap_power,
        &mut rep.d_hess,
        &mut rep.d_quart,
        &mut rep.d_gradu,
        &mut rep.norm_u_103,
        &mut rep.norm_n_r,
        &mut rep.grad_c4,
    ] {
        *v *= dv;
    }
    let named = [
        ("mass_n", rep.mass_n),
        ("min_n", rep.min_n),
        ("max_c", rep.max_c),
        ("e_nlogn", rep.e_nlogn),
        ("e_psi", rep.e_psi),
        ("e_kin", rep.e_kin),
        ("d_plap", rep.d_plap),
        ("d_plap_power", rep.d_plap_power),
        ("d_hess", rep.d_hess),
        ("d_quart", rep.d_quart),
        ("d_gradu", rep.d_gradu),
        ("norm_u_103", rep.norm_u_103),
        ("norm_n_r", rep.norm_n_r),
        ("grad_c4", rep.grad_c4),
    ];
    for (name, v) in named {
        finite(v, name)?;
    }
    Ok(rep)
}

/// Quantities integrated in time by the ledger, in CSV order.
pub const LEDGER_QUANTITIES: [&str; 7] =
    ["d_plap_power", "d_hess", "d_quart", "d_gradu", "norm_u_103", "norm_n_r", "grad_c4"];

fn ledger_values(r: &EnergyReport) -> [f64; 7] {
    [r.d_plap_power, r.d_hess, r.d_quart, r.d_gradu, r.norm_u_103, r.norm_n_r, r.grad_c4]
}

/// Trapezoidal time integrals of the ledger quantities over the reports seen.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CumulativeLedger {
    pub times: Vec<f64>,
    /// cumulative[k][q]: integral of quantity q up to times[k].
    pub cumulative: Vec<[f64; 7]>,
    last: Option<[f64; 7]>,
}

impl CumulativeLedger {
    pub fn push(&mut self, report: &EnergyReport) {
        let values = ledger_values(report);
        let next = match (self.last, self.cumulative.last(), self.times.last()) {
            (Some(prev), Some(cum), Some(&t0)) => {
                let h = report.t - t0;
                let mut out = *cum;
                for q in 0..7 {
                    out[q] += 0.5 * h * (prev[q] + values[q]);
                }
                out
            }
            _ => [0.0; 7],
        };
        self.times.push(report.t);
        self.cumulative.push(next);
        self.last = Some(values);
    }

    pub fn latest(&self) -> [f64; 7] {
        self.cumulative.last().copied().unwrap_or([0.0; 7])
    }

    /// r_Q(T) = cumulative(T)/(T + 1) for quantity `q`.
    pub fn ratios(&self, q: usize) -> Vec<f64> {
        self.times.iter().zip(&self.cumulative).map(|(t, c)| c[q] / (t + 1.0)).collect()
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.cumulative.windows(2).all(|w| (0..7).all(|q| w[1][q] >= w[0][q]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthVerdict {
    pub quantity: &'static str,
    /// Empirical constant Ĉ = sup_T r_Q(T).
    pub c_hat: f64,
    pub window_sup: f64,
    pub window_median: f64,
    pub pass: bool,
}

/// Trailing-window sup of r_Q must not exceed 1.1 × its window median.
pub fn check_linear_growth(ledger: &CumulativeLedger, window: f64) -> Result<Vec<GrowthVerdict>> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::Precondition(format!("window fraction must lie in (0, 1], got {window}")));
    }
    let t_end = match ledger.times.last() {
        Some(&t) if ledger.times.len() >= 2 => t,
        _ => return Err(Error::Precondition("ledger needs at least two reports".into())),
    };
    let t0 = ledger.times[0];
    let start = t_end - window * (t_end - t0);
    Ok(LEDGER_QUANTITIES
        .iter()
        .enumerate()
        .map(|(q, &name)| {
            let ratios = ledger.ratios(q);
            let mut win: Vec<f64> =
                ledger.times.iter().zip(&ratios).filter(|(t, _)| **t >= start).map(|(_, r)| *r).collect();
            win.sort_by(f64::total_cmp);
            let median = if win.len() % 2 == 1 {
                win[win.len() / 2]
            } else {
                0.5 * (win[win.len() / 2 - 1] + win[win.len() / 2])
            };
            let sup = *win.last().unwrap();
            GrowthVerdict {
                quantity: name,
                c_hat: ratios.iter().copied().fold(0.0, f64::max),
                window_sup: sup,
                window_median: median,
                pass: sup <= 1.1 * median,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayVerdict {
    pub pass: bool,
    pub first_violation: Option<usize>,
    /// Largest increase seen between consecutive reports.
    pub max_increase: f64,
}

/// e_nlogn + e_psi must be nonincreasing up to 1e−10·(1 + |value|).
pub fn check_energy_decay(history: &[EnergyReport]) -> Result<DecayVerdict> {
    if history.len() < 2 {
        return Err(Error::Precondition("decay check needs at least two reports".into()));
    }
    let mut verdict = DecayVerdict { pass: true, first_violation: None, max_increase: f64::NEG_INFINITY };
    for (k, w) in history.windows(2).enumerate() {
        let (a, b) = (w[0].lyapunov(), w[1].lyapunov());
        verdict.max_increase = verdict.max_increase.max(b - a);
        if b - a > 1e-10 * (1.0 + a.abs()) && verdict.pass {
            verdict.pass = false;
            verdict.first_violation = Some(k + 1);
        }
    }
    Ok(verdict)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassMaxVerdict {
    pub mass_ok: bool,
    pub max_c_ok: bool,
    pub min_n_ok: bool,
    /// max_c strictly decreased between every pair of reports with n > 0.
    pub max_c_strictly_decreasing: bool,
    pub max_relative_mass_drift: f64,
}

impl MassMaxVerdict {
    pub fn pass(&self) -> bool {
        self.mass_ok && self.max_c_ok && self.min_n_ok
    }
}

pub fn check_mass_and_max(history: &[EnergyReport], s0: f64) -> Result<MassMaxVerdict> {
    if history.len() < 2 {
        return Err(Error::Precondition("mass check needs at least two reports".into()));
    }
    let m0 = history[0].mass_n;
    let mut v = MassMaxVerdict {
        mass_ok: true,
        max_c_ok: true,
        min_n_ok: true,
        max_c_strictly_decreasing: true,
        max_relative_mass_drift: 0.0,
    };
    for (k, r) in history.iter().enumerate() {
        let drift = (r.mass_n - m0).abs();
        if m0 != 0.0 {
            v.max_relative_mass_drift = v.max_relative_mass_drift.max(drift / m0.abs());
        }
        v.mass_ok &= drift <= 1e-12 * m0.abs();
        v.max_c_ok &= r.max_c <= s0 * (1.0 + 1e-12);
        v.min_n_ok &= r.min_n >= -1e-8 * r.max_n.max(0.0);
        if k > 0 && history[k - 1].max_n > 0.0 && history[k - 1].max_c > 0.0 {
            v.max_c_strictly_decreasing &= r.max_c < history[k - 1].max_c;
        }
    }
    Ok(v)
}

/// Column order of the diagnostics CSV.
pub fn csv_header() -> String {
    let mut cols: Vec<String> = [
        "t",
        "mass_n",
        "min_n",
        "max_c",
        "e_nlogn",
        "e_psi",
        "e_kin",
        "d_plap",
        "d_plap_power",
        "d_hess",
        "d_quart",
        "d_gradu",
        "norm_u_103",
        "norm_n_r",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend(LEDGER_QUANTITIES.iter().map(|q| format!("cum_{q}")));
    cols.push("dt".into());
    cols.push("floored_cells".into());
    cols.join(",")
}

pub fn csv_row(r: &EnergyReport, cumulative: &[f64; 7], dt: f64) -> String {
    let mut vals = vec![
        r.t,
        r.mass_n,
        r.min_n,
        r.max_c,
        r.e_nlogn,
        r.e_psi,
        r.e_kin,
        r.d_plap,
        r.d_plap_power,
        r.d_hess,
        r.d_quart,
        r.d_gradu,
        r.norm_u_103,
        r.norm_n_r,
    ];
    vals.extend_from_slice(cumulative);
    vals.push(dt);
    let mut s: Vec<String> = vals.iter().map(|v| format!("{v:e}")).collect();
    s.push(r.floored_cells.to_string());
    s.join(",")
}

pub fn write_csv(out: &mut impl Write, rows: &[(EnergyReport, [f64; 7], f64)]) -> std::io::Result<()> {
    writeln!(out, "{}", csv_header())?;
    for (r, c, dt) in rows {
        writeln!(out, "{}", csv_row(r, c, *dt))?;
    }
    Ok(())
}

/// sin⁴(πs) on [0, 1] and its first three derivatives; zero outside.
fn bump(s: f64) -> [f64; 4] {
    if !(0.0..=1.0).contains(&s) {
        return [0.0; 4];
    }
    let w = std::f64::consts::PI;
    let (sn, cs) = ((w * s).sin(), (w * s).cos());
    [
        sn.powi(4),
        4.0 * w * sn.powi(3) * cs,
        4.0 * w * w * (3.0 * sn * sn * cs * cs - sn.powi(4)),
        4.0 * w.powi(3) * (6.0 * sn * cs.powi(3) - 10.0 * sn.powi(3) * cs),
    ]
}

/// Smooth test function B(x)τ(t) supported in a box strictly inside the
/// domain and a time window strictly inside the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub t0: f64,
    pub t1: f64,
}

impl TestFunction {
    /// Centered box covering `fraction` of each extent and the middle of [0, t_end].
    pub fn centered(grid: &Grid, fraction: f64, t_end: f64) -> Self {
        let ext = grid.extents();
        TestFunction {
            lo: ext.iter().map(|l| 0.5 * l * (1.0 - fraction)).collect(),
            hi: ext.iter().map(|l| 0.5 * l * (1.0 + fraction)).collect(),
            t0: 0.1 * t_end,
            t1: 0.9 * t_end,
        }
    }

    fn axis(&self, d: usize, x: f64) -> [f64; 4] {
        let len = self.hi[d] - self.lo[d];
        let b = bump((x - self.lo[d]) / len);
        [b[0], b[1] / len, b[2] / (len * len), b[3] / len.powi(3)]
    }

    fn time(&self, t: f64) -> [f64; 2] {
        let len = self.t1 - self.t0;
        let b = bump((t - self.t0) / len);
        [b[0], b[1] / len]
    }

    /// Spatial factor B and derivatives: value, gradient, Hessian, and the
    /// third derivatives needed for the curl of ∇B.
    fn spatial(&self, x: [f64; 3], dim: usize) -> SpatialJet {
        let f: Vec<[f64; 4]> = (0..dim).map(|d| self.axis(d, x[d])).collect();
        let prod = |orders: [usize; 3]| -> f64 { (0..dim).map(|d| f[d][orders[d]]).product() };
        let mut jet = SpatialJet { value: prod([0; 3]), ..Default::default() };
        for a in 0..dim {
            let mut o = [0; 3];
            o[a] = 1;
            jet.grad[a] = prod(o);
            for b in 0..dim {
                let mut o2 = o;
                o2[b] += 1;
                jet.hess[a][b] = prod(o2);
                for c in 0..dim {
                    let mut o3 = o2;
                    o3[c] += 1;
                    jet.third[a][b][c] = prod(o3);
                }
            }
        }
        jet
    }

    fn validate(&self, grid: &Grid, t_first: f64, t_last: f64) -> Result<()> {
        let ext = grid.extents();
        if self.lo.len() != grid.dim() || self.hi.len() != grid.dim() {
            return Err(Error::Precondition("test function box must match the grid dimension".into()));
        }
        for d in 0..grid.dim() {
            if !(self.lo[d] > 0.0 && self.hi[d] < ext[d] && self.lo[d] < self.hi[d]) {
                return Err(Error::Precondition(format!(
                    "test function support [{}, {}] must lie strictly inside (0, {}) on axis {d}",
                    self.lo[d], self.hi[d], ext[d]
                )));
            }
        }
        if !(self.t0 > t_first && self.t1 < t_last && self.t0 < self.t1) {
            return Err(Error::Precondition(format!(
                "test function time window [{}, {}] must lie strictly inside ({t_first}, {t_last})",
                self.t0, self.t1
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct SpatialJet {
    value: f64,
    grad: [f64; 3],
    hess: [[f64; 3]; 3],
    third: [[[f64; 3]; 3]; 3],
}

/// Divergence-free vector test field φ = curl of the stream function B e_z
/// (first two components), and its Jacobian ∂_j φ_i.
fn solenoidal(jet: &SpatialJet) -> ([f64; 3], [[f64; 3]; 3]) {
    let phi = [jet.grad[1], -jet.grad[0], 0.0];
    let mut jac = [[0.0; 3]; 3];
    for j in 0..3 {
        jac[0][j] = jet.hess[1][j];
        jac[1][j] = -jet.hess[0][j];
    }
    (phi, jac)
}

/// Residuals of the three weak identities (n, c, u) against the test
/// function, for snapshots at uniform time spacing.
///
/// Each identity has the time derivative moved onto the test function; the
/// fluxes are those of the regularized system, so the residuals vanish as the
/// grid and the snapshot spacing are refined.
pub fn weak_residual(
    grid: &Grid,
    snapshots: &[State],
    params: &ModelParams,
    test: &TestFunction,
    flow: &mut FlowSolver,
) -> Result<[f64; 3]> {
    if snapshots.len() < 3 {
        return Err(Error::Precondition("weak residual needs at least three snapshots".into()));
    }
    let h = snapshots[1].t - snapshots[0].t;
    for w in snapshots.windows(2) {
        if ((w[1].t - w[0].t) - h).abs() > 1e-9 * h.abs().max(1e-300) {
            return Err(Error::Precondition("snapshots must be uniformly spaced in time".into()));
        }
    }
    test.validate(grid, snapshots[0].t, snapshots.last().unwrap().t)?;

    let dim = grid.dim();
    let dv = grid.cell_volume();
    let dx = grid.dx3();
    let inv2dx = [0.5 / dx[0], 0.5 / dx[1], 0.5 / dx[2]];
    let (p, eps) = (params.p, params.epsilon);
    let last = snapshots.len() - 1;
    let mut res = [0.0; 3];

    for (k, s) in snapshots.iter().enumerate() {
        let wt = if k == 0 || k == last { 0.5 * h } else { h };
        let [tau, tau_t] = test.time(s.t);
        if tau == 0.0 && tau_t == 0.0 {
            continue;
        }
        let mut n = s.n.clone();
        n.fill_ghosts(Bc::NeumannZero);
        let mut c = s.c.clone();
        c.fill_ghosts(Bc::NeumannZero);
        let mut u = s.u.clone();
        u.fill_ghosts(Bc::DirichletZero);
        let uc = cell_velocity(grid, &u);
        let yu = if params.kappa != 0.0 { flow.yosida(&u, eps)? } else { grid.vector_zeros() };
        let yc = cell_velocity(grid, &yu);

        // cell-centered velocity gradient from centered differences of the
        // averaged components (with no-slip mirror ghosts)
        let mut ucg: Vec<ScalarField> = uc.clone();
        for f in &mut ucg {
            f.fill_ghosts(Bc::DirichletZero);
        }

        let l = n.layout;
        let strides = l.stride;
        let mut acc = [0.0; 3];
        for_each_point(&l, [0; 3], l.n, |idx, q| {
            let x = [grid.center(0, q[0]), grid.center(1, q[1]), grid.center(2, q[2])];
            let jet = test.spatial(x, dim);
            if jet.value == 0.0 && jet.grad.iter().all(|g| *g == 0.0) {
                return;
            }
            let (nv, cv) = (n.data[idx], c.data[idx]);
            let gn = cell_grad(&n.data, idx, &strides, &inv2dx, dim);
            let gc = cell_grad(&c.data, idx, &strides, &inv2dx, dim);
            let gn2: f64 = gn.iter().map(|v| v * v).sum();
            let diff = (gn2 + eps).powf(0.5 * (p - 2.0));
            let chem = nv * f_eps_prime_unchecked(nv.max(0.0), eps) * params.sensitivity.chi(cv);
            let mut flux_n = 0.0;
            let mut flux_c = 0.0;
            for d in 0..dim {
                let ud = uc[d].data[idx];
                flux_n += (diff * gn[d] - chem * gc[d] - ud * nv) * jet.grad[d];
                flux_c += (gc[d] - ud * cv) * jet.grad[d];
            }
            acc[0] += nv * jet.value * tau_t - flux_n * tau;
            acc[1] += cv * jet.value * tau_t - flux_c * tau
                - f_eps_unchecked(nv.max(0.0), eps) * params.sensitivity.f(cv) * jet.value * tau;

            let (phi, jac) = solenoidal(&jet);
            let mut m = 0.0;
            for i in 0..dim.min(2) {
                m += uc[i].data[idx] * phi[i] * tau_t;
                for j in 0..dim {
                    let st = strides[j];
                    let dudx = (ucg[i].data[idx + st] - ucg[i].data[idx - st]) * inv2dx[j];
                    m -= dudx * jac[i][j] * tau;
                    m += params.kappa * yc[j].data[idx] * uc[i].data[idx] * jac[i][j] * tau;
                }
                m += nv * params.grad_phi(i) * phi[i] * tau;
            }
            acc[2] += m;
        });
        for e in 0..3 {
            res[e] += wt * acc[e] * dv;
        }
    }
    Ok(res.map(f64::abs))
}
