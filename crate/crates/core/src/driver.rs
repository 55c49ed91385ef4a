//! Run configuration, time-step control and the simulation loop with
//! reporting, snapshots and checkpoint/restart.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::audit::{
    self, check_energy_decay, check_linear_growth, check_mass_and_max, CumulativeLedger, DecayVerdict,
    EnergyReport, GrowthVerdict, MassMaxVerdict,
};
use crate::error::{Error, Result};
use crate::flow::{from_stream_function, FlowSolver};
use crate::grid::{Grid, ScalarField, VectorField};
use crate::io;
use crate::model::{f_eps_unchecked, validate_structural_conditions, ModelParams, SensitivityPair};
use crate::ops;
use crate::transport::{self, State};

/// Below this the controller gives up.
pub const MIN_DT: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub extents: Vec<f64>,
    pub cells: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub p: f64,
    pub kappa: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub sensitivity: SensitivityPair,
    pub phi_gradient: Vec<f64>,
    /// Declared bound on the initial oxygen.
    #[serde(default = "one")]
    pub s0: f64,
    /// Exponent r of the tracked ∫n^r.
    #[serde(default = "two")]
    pub r: f64,
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

fn fifth() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarIc {
    Constant {
        value: f64,
    },
    /// background + amplitude·exp(−|x − center|²/width²); center defaults to
    /// the middle of the box.
    Gaussian {
        #[serde(default)]
        center: Option<Vec<f64>>,
        width: f64,
        amplitude: f64,
        #[serde(default)]
        background: f64,
    },
}

impl ScalarIc {
    fn sup(&self) -> f64 {
        match *self {
            ScalarIc::Constant { value } => value,
            ScalarIc::Gaussian { amplitude, background, .. } => amplitude + background,
        }
    }

    fn validate(&self, name: &str, dim: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("initial.{name}: {m}")));
        match self {
            ScalarIc::Constant { value } if !(*value >= 0.0 && value.is_finite()) => {
                bad(format!("value must be nonnegative, got {value}"))
            }
            ScalarIc::Gaussian { center, width, amplitude, background } => {
                if !(*width > 0.0 && *amplitude >= 0.0 && *background >= 0.0) {
                    return bad("width must be positive, amplitude and background nonnegative".into());
                }
                if center.as_ref().is_some_and(|c| c.len() != dim) {
                    return bad(format!("center needs {dim} entries"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn build(&self, grid: &Grid) -> ScalarField {
        match self {
            ScalarIc::Constant { value } => ScalarField::constant(grid, *value),
            ScalarIc::Gaussian { center, width, amplitude, background } => {
                let ext = grid.extents();
                let center: Vec<f64> = center.clone().unwrap_or_else(|| ext.iter().map(|l| 0.5 * l).collect());
                let dim = grid.dim();
                grid.scalar_from_fn(|x| {
                    let r2: f64 = (0..dim).map(|d| (x[d] - center[d]).powi(2)).sum();
                    background + amplitude * (-r2 / (width * width)).exp()
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocityIc {
    Zero,
    /// Single-cell Taylor–Green-like vortex in the x–y plane, built from the
    /// stream function A·sin²(πx/Lx)·sin²(πy/Ly) so that it is discretely
    /// divergence-free and vanishes on the walls.
    Vortex { amplitude: f64 },
}

impl VelocityIc {
    pub fn build(&self, grid: &Grid) -> VectorField {
        match *self {
            VelocityIc::Zero => grid.vector_zeros(),
            VelocityIc::Vortex { amplitude } => {
                let ext = grid.extents().to_vec();
                let pi = std::f64::consts::PI;
                from_stream_function(grid, |x| {
                    amplitude * (pi * x[0] / ext[0]).sin().powi(2) * (pi * x[1] / ext[1]).sin().powi(2)
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub n: ScalarIc,
    pub c: ScalarIc,
    #[serde(default = "zero_velocity")]
    pub u: VelocityIc,
}

fn zero_velocity() -> VelocityIc {
    VelocityIc::Zero
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t_end: f64,
    pub cfl_safety: f64,
    pub report_interval: f64,
    /// Field snapshots (and rolling checkpoints) every this much time.
    #[serde(default)]
    pub snapshot_interval: Option<f64>,
    /// Stop after this many steps even if t_end is not reached.
    #[serde(default)]
    pub max_steps: Option<usize>,
    /// Trailing fraction of the run used by the growth check.
    #[serde(default = "fifth")]
    pub growth_window: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    #[serde(default)]
    pub vtk: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: PathBuf::from("out"), vtk: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub model: ModelSpec,
    pub initial: InitialSpec,
    pub time: TimeSpec,
    #[serde(default)]
    pub output: OutputSpec,
    /// Freeze u at its initial value (normally zero).
    #[serde(default)]
    pub disable_flow: bool,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.dim, &self.grid.extents, &self.grid.cells).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn params(&self) -> ModelParams {
        let m = &self.model;
        ModelParams {
            p: m.p,
            kappa: m.kappa,
            epsilon: m.epsilon,
            sensitivity: m.sensitivity.clone(),
            phi_gradient: m.phi_gradient.clone(),
            s0: m.s0,
        }
    }

    /// Checks every documented invariant, including the structural
    /// conditions on the sensitivity pair over [0, s₀].
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        let g = &self.grid;
        if !(2..=3).contains(&g.dim) || g.extents.len() != g.dim || g.cells.len() != g.dim {
            return cfg(format!("grid: dim must be 2 or 3 with matching extents and cells, got {g:?}"));
        }
        if g.cells.iter().any(|&n| n < 2) || g.extents.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return cfg("grid: need at least 2 cells and positive extents per axis".into());
        }
        if self.model.phi_gradient.len() != g.dim {
            return cfg(format!("model.phi_gradient needs {} entries", g.dim));
        }
        let params = self.params();
        params.validate()?;
        if params.p < 2.0 {
            return cfg(format!("p = {} < 2 is fast diffusion, which the solver does not support", params.p));
        }
        if !(self.model.r >= 1.0 && self.model.r.is_finite()) {
            return cfg(format!("model.r must be at least 1, got {}", self.model.r));
        }
        let t = &self.time;
        if !(t.cfl_safety > 0.0 && t.cfl_safety <= 1.0) {
            return cfg(format!("time.cfl_safety must lie in (0, 1], got {}", t.cfl_safety));
        }
        if !(t.t_end > 0.0 && t.t_end.is_finite()) || !(t.report_interval > 0.0) {
            return cfg("time.t_end and time.report_interval must be positive".into());
        }
        if t.snapshot_interval.is_some_and(|s| !(s > 0.0)) || t.max_steps == Some(0) {
            return cfg("time.snapshot_interval and time.max_steps must be positive".into());
        }
        if !(t.growth_window > 0.0 && t.growth_window <= 1.0) {
            return cfg(format!("time.growth_window must lie in (0, 1], got {}", t.growth_window));
        }
        self.initial.n.validate("n", g.dim)?;
        self.initial.c.validate("c", g.dim)?;
        if self.initial.c.sup() > self.model.s0 * (1.0 + 1e-12) {
            return cfg(format!("initial c reaches {} above the declared s0 = {}", self.initial.c.sup(), self.model.s0));
        }
        if let VelocityIc::Vortex { amplitude } = self.initial.u {
            if !amplitude.is_finite() {
                return cfg("initial.u amplitude must be finite".into());
            }
        }
        let report = validate_structural_conditions(&params.sensitivity, params.s0.max(1e-12), 201)?;
        if !report.passed() {
            let names: Vec<&str> = report.failures().iter().map(|c| c.describe()).collect();
            return Err(Error::StructuralCondition(names.join(", ")));
        }
        Ok(())
    }

    pub fn initial_state(&self, grid: &Grid) -> State {
        let u = if self.disable_flow { grid.vector_zeros() } else { self.initial.u.build(grid) };
        State::new(grid, 0.0, self.initial.n.build(grid), self.initial.c.build(grid), u)
    }
}

/// Individual step limits (unscaled) and the resulting dt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtLimits {
    pub diffusion_n: f64,
    pub diffusion_c: f64,
    pub advection: f64,
    pub chemotaxis: f64,
    pub consumption: f64,
    /// Positivity of the full explicit n update.
    pub monotone_n: f64,
    /// Maximum principle for the full explicit c update.
    pub monotone_c: f64,
    pub dt: f64,
}

/// dt = cfl_safety · min over the individual and combined stability limits.
pub fn stable_dt(grid: &Grid, state: &State, params: &ModelParams, cfl_safety: f64) -> Result<DtLimits> {
    if !(state.n.all_finite() && state.c.all_finite() && state.u.all_finite()) {
        return Err(Error::Precondition("stable_dt needs a finite state".into()));
    }
    let dx = grid.dx();
    let inv_dx2: f64 = dx.iter().map(|h| 1.0 / (h * h)).sum();
    let d_max = ops::max_face_diffusivity(grid, &state.n, params.p, params.epsilon)?;
    let umax: Vec<f64> = state.u.comps.iter().map(|c| c.max_abs()).collect();
    let chem = ops::max_chemotactic_speed(grid, &state.c, params);
    let u_rate: f64 = umax.iter().zip(dx).map(|(u, h)| u / h).sum();
    let chem_rate: f64 = chem.iter().zip(dx).map(|(a, h)| a / h).sum();
    let n_max = state.n.max().max(0.0);
    let c_top = state.c.max().max(params.s0);
    let consumption_rate = f_eps_unchecked(n_max, params.epsilon) * params.sensitivity.max_f_prime(c_top, 64);

    let inv = |rate: f64| if rate > 0.0 { 1.0 / rate } else { f64::INFINITY };
    let u_abs = umax.iter().copied().fold(0.0, f64::max);
    let mut lim = DtLimits {
        diffusion_n: inv(2.0 * d_max * inv_dx2),
        diffusion_c: inv(2.0 * inv_dx2),
        advection: grid.min_dx() / (u_abs + 1e-300),
        chemotaxis: inv(chem_rate),
        consumption: inv(consumption_rate),
        monotone_n: inv(2.0 * d_max * inv_dx2 + u_rate + chem_rate),
        monotone_c: inv(2.0 * inv_dx2 + u_rate + consumption_rate),
        dt: 0.0,
    };
    let m = [
        lim.diffusion_n,
        lim.diffusion_c,
        lim.advection,
        lim.chemotaxis,
        lim.consumption,
        lim.monotone_n,
        lim.monotone_c,
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min);
    lim.dt = cfl_safety * m;
    if !(lim.dt >= MIN_DT) {
        return Err(Error::Stiffness(lim.dt));
    }
    Ok(lim)
}

/// Outcome of every auditor check that applies to a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdicts {
    pub mass_and_max: Option<MassMaxVerdict>,
    /// Only for runs with the flow disabled.
    pub decay: Option<DecayVerdict>,
    /// Only once the ledger holds enough reports.
    pub growth: Option<Vec<GrowthVerdict>>,
    pub ledger_nondecreasing: bool,
}

impl Verdicts {
    pub fn pass(&self) -> bool {
        self.mass_and_max.is_none_or(|v| v.pass())
            && self.decay.is_none_or(|v| v.pass)
            && self.growth.as_ref().is_none_or(|g| g.iter().all(|v| v.pass))
            && self.ledger_nondecreasing
    }
}

/// Minimum number of reports before the growth check is meaningful.
pub const MIN_GROWTH_REPORTS: usize = 8;

/// Lossless restart point: configuration, state and all bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config: RunConfig,
    pub state: State,
    pub steps: usize,
    pub reports: Vec<EnergyReport>,
    /// dt of the step that preceded each report (0 for the first).
    pub report_dts: Vec<f64>,
    pub ledger: CumulativeLedger,
    pub next_report: usize,
    pub next_snapshot: usize,
    pub max_divergence_defect: f64,
    /// Initial guess for the next Yosida solve.
    #[serde(default)]
    pub yosida_guess: Option<VectorField>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunStats {
    pub steps: usize,
    pub wall_seconds: f64,
    pub max_divergence_defect: f64,
    pub last_dt: f64,
}

/// A simulation in progress.
pub struct Simulation {
    pub config: RunConfig,
    pub grid: Grid,
    pub params: ModelParams,
    pub state: State,
    flow: Option<FlowSolver>,
    pub steps: usize,
    pub reports: Vec<EnergyReport>,
    pub report_dts: Vec<f64>,
    pub ledger: CumulativeLedger,
    next_report: usize,
    next_snapshot: usize,
    pub max_divergence_defect: f64,
    last_dt: f64,
    write_output: bool,
}

/// Tolerance for "the clock has reached an event time".
fn reached(t: f64, target: f64) -> bool {
    target - t <= 1e-12 * target.abs().max(1.0)
}

impl Simulation {
    /// Fresh run at t = 0 (validates the config and records the first report).
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let grid = config.grid()?;
        let state = config.initial_state(&grid);
        let mut sim = Self::assemble(config, grid, state);
        sim.record(0.0)?;
        sim.next_report = 1;
        Ok(sim)
    }

    fn assemble(config: RunConfig, grid: Grid, state: State) -> Self {
        let params = config.params();
        let flow = (!config.disable_flow).then(|| FlowSolver::new(&grid));
        Simulation {
            params,
            flow,
            state,
            grid,
            config,
            steps: 0,
            reports: Vec::new(),
            report_dts: Vec::new(),
            ledger: CumulativeLedger::default(),
            next_report: 0,
            next_snapshot: 0,
            max_divergence_defect: 0.0,
            last_dt: 0.0,
            write_output: false,
        }
    }

    /// Resumes from a checkpoint; `t_end` optionally extends the horizon.
    pub fn from_checkpoint(cp: Checkpoint, t_end: Option<f64>) -> Result<Self> {
        let mut config = cp.config;
        if let Some(t) = t_end {
            config.time.t_end = t;
        }
        config.validate()?;
        let grid = config.grid()?;
        let mut sim = Self::assemble(config, grid, cp.state);
        sim.steps = cp.steps;
        sim.reports = cp.reports;
        sim.report_dts = cp.report_dts;
        sim.ledger = cp.ledger;
        sim.next_report = cp.next_report;
        sim.next_snapshot = cp.next_snapshot;
        sim.max_divergence_defect = cp.max_divergence_defect;
        if let Some(flow) = sim.flow.as_mut() {
            flow.warm = cp.yosida_guess;
        }
        sim.last_dt = sim.report_dts.last().copied().unwrap_or(0.0);
        Ok(sim)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            config: self.config.clone(),
            state: self.state.clone(),
            steps: self.steps,
            reports: self.reports.clone(),
            report_dts: self.report_dts.clone(),
            ledger: self.ledger.clone(),
            next_report: self.next_report,
            next_snapshot: self.next_snapshot,
            max_divergence_defect: self.max_divergence_defect,
            yosida_guess: self.flow.as_ref().and_then(|f| f.warm.clone()),
        }
    }

    /// Turns on CSV, snapshot and checkpoint output under the configured directory.
    pub fn enable_output(&mut self) -> Result<()> {
        let dir = &self.config.output.dir;
        fs::create_dir_all(dir.join("snapshots")).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        let path = dir.join("diagnostics.csv");
        let mut w = BufWriter::new(File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?);
        let rows: Vec<_> = self
            .reports
            .iter()
            .zip(&self.ledger.cumulative)
            .zip(&self.report_dts)
            .map(|((r, c), dt)| (r.clone(), *c, *dt))
            .collect();
        audit::write_csv(&mut w, &rows).map_err(|e| Error::Io(e.to_string()))?;
        w.flush().map_err(|e| Error::Io(e.to_string()))?;
        self.write_output = true;
        if self.steps == 0 && self.config.time.snapshot_interval.is_some() {
            self.write_snapshot()?;
            self.next_snapshot = 1;
        }
        Ok(())
    }

    fn record(&mut self, dt: f64) -> Result<()> {
        let rep = audit::energy_report(&self.grid, &self.state, &self.params, self.config.model.r)?;
        self.ledger.push(&rep);
        if self.write_output {
            let path = self.config.output.dir.join("diagnostics.csv");
            let mut f = OpenOptions::new()
                .append(true)
                .open(&path)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            writeln!(f, "{}", audit::csv_row(&rep, &self.ledger.latest(), dt)).map_err(|e| Error::Io(e.to_string()))?;
        }
        self.reports.push(rep);
        self.report_dts.push(dt);
        Ok(())
    }

    fn write_snapshot(&self) -> Result<()> {
        let dir = self.config.output.dir.join("snapshots");
        let index = self.next_snapshot;
        io::write_state_snapshots(&dir, &self.grid, &self.state, index)?;
        if self.config.output.vtk {
            io::write_vtk(&dir.join(format!("state_{index:05}.vtk")), &self.grid, &self.state)?;
        }
        self.save_checkpoint(&self.config.output.dir.join("checkpoint.json"))
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.checkpoint()).map_err(|e| Error::Io(e.to_string()))?;
        fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    fn report_time(&self, k: usize) -> f64 {
        (k as f64 * self.config.time.report_interval).min(self.config.time.t_end)
    }

    fn snapshot_time(&self, k: usize) -> Option<f64> {
        self.config.time.snapshot_interval.map(|s| (k as f64 * s).min(self.config.time.t_end))
    }

    pub fn finished(&self) -> bool {
        reached(self.state.t, self.config.time.t_end) || self.config.time.max_steps.is_some_and(|m| self.steps >= m)
    }

    /// One controlled step, clamped so that report and snapshot times are hit exactly.
    pub fn step(&mut self) -> Result<()> {
        let lim = stable_dt(&self.grid, &self.state, &self.params, self.config.time.cfl_safety)?;
        let t = self.state.t;
        let mut target = self.report_time(self.next_report);
        if let Some(ts) = self.snapshot_time(self.next_snapshot) {
            target = target.min(ts);
        }
        let (dt, clamped) = if t + lim.dt >= target || reached(t + lim.dt, target) {
            (target - t, true)
        } else {
            (lim.dt, false)
        };
        let (mut next, info) = transport::step(&self.grid, &self.state, &self.params, dt, self.flow.as_mut(), self.steps)?;
        if clamped {
            next.t = target;
        }
        self.state = next;
        self.steps += 1;
        self.last_dt = dt;
        self.max_divergence_defect = self.max_divergence_defect.max(info.divergence_defect);

        let end = self.finished();
        if reached(self.state.t, self.report_time(self.next_report)) || end {
            self.record(dt)?;
            while reached(self.state.t, self.report_time(self.next_report)) && self.report_time(self.next_report) < self.config.time.t_end {
                self.next_report += 1;
            }
            if reached(self.state.t, self.config.time.t_end) {
                self.next_report += 1;
            }
        }
        if let Some(ts) = self.snapshot_time(self.next_snapshot) {
            if reached(self.state.t, ts) {
                if self.write_output {
                    self.write_snapshot()?;
                }
                self.next_snapshot += 1;
            }
        }
        Ok(())
    }

    /// Steps until t_end or max_steps. On failure the last valid state is
    /// written as `checkpoint_last_valid.json` when output is enabled.
    pub fn run_to_end(&mut self) -> Result<RunStats> {
        let start = Instant::now();
        while !self.finished() {
            if let Err(e) = self.step() {
                if self.write_output {
                    let _ = self.save_checkpoint(&self.config.output.dir.join("checkpoint_last_valid.json"));
                }
                return Err(e);
            }
        }
        if self.write_output {
            self.save_checkpoint(&self.config.output.dir.join("checkpoint.json"))?;
        }
        Ok(RunStats {
            steps: self.steps,
            wall_seconds: start.elapsed().as_secs_f64(),
            max_divergence_defect: self.max_divergence_defect,
            last_dt: self.last_dt,
        })
    }

    pub fn verdicts(&self) -> Result<Verdicts> {
        let enough = self.reports.len() >= 2;
        Ok(Verdicts {
            mass_and_max: if enough { Some(check_mass_and_max(&self.reports, self.params.s0)?) } else { None },
            decay: if enough && self.config.disable_flow { Some(check_energy_decay(&self.reports)?) } else { None },
            growth: if self.reports.len() >= MIN_GROWTH_REPORTS {
                Some(check_linear_growth(&self.ledger, self.config.time.growth_window)?)
            } else {
                None
            },
            ledger_nondecreasing: self.ledger.is_nondecreasing(),
        })
    }

    /// Diagnostics CSV of the reports so far, as written to disk.
    pub fn csv(&self) -> String {
        let mut out = audit::csv_header();
        out.push('\n');
        for ((r, c), dt) in self.reports.iter().zip(&self.ledger.cumulative).zip(&self.report_dts) {
            out.push_str(&audit::csv_row(r, c, *dt));
            out.push('\n');
        }
        out
    }
}

/// Process exit status of a finished (or failed) run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExitStatus {
    Pass = 0,
    InvariantViolation = 2,
    BlowUp = 3,
    ConfigError = 4,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn from_error(e: &Error) -> Self {
        match e {
            Error::Config(_) | Error::StructuralCondition(_) | Error::FastDiffusion(_) | Error::Domain(_) => {
                ExitStatus::ConfigError
            }
            Error::Io(_) | Error::Precondition(_) | Error::InvalidSensitivity(_) => ExitStatus::ConfigError,
            _ => ExitStatus::BlowUp,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub status: ExitStatus,
    pub error: Option<String>,
    pub stats: Option<RunStats>,
    pub verdicts: Option<Verdicts>,
    pub final_report: Option<EnergyReport>,
}

/// Runs a validated configuration end to end, optionally writing output.
pub fn run(config: RunConfig, write_output: bool) -> RunReport {
    let fail = |e: Error| RunReport {
        status: ExitStatus::from_error(&e),
        error: Some(e.to_string()),
        stats: None,
        verdicts: None,
        final_report: None,
    };
    let mut sim = match Simulation::new(config) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    if write_output {
        if let Err(e) = sim.enable_output() {
            return fail(e);
        }
    }
    finish(&mut sim)
}

/// Continues `sim` to its horizon and summarizes.
pub fn finish(sim: &mut Simulation) -> RunReport {
    let result = sim.run_to_end().and_then(|stats| Ok((stats, sim.verdicts()?)));
    let final_report = sim.reports.last().cloned();
    let report = match result {
        Ok((stats, verdicts)) => RunReport {
            status: if verdicts.pass() { ExitStatus::Pass } else { ExitStatus::InvariantViolation },
            error: None,
            stats: Some(stats),
            verdicts: Some(verdicts),
            final_report,
        },
        Err(e) => RunReport {
            status: ExitStatus::from_error(&e),
            error: Some(e.to_string()),
            stats: None,
            verdicts: sim.verdicts().ok(),
            final_report,
        },
    };
    if sim.write_output {
        let path = sim.config.output.dir.join("summary.json");
        if let Ok(text) = serde_json::to_string_pretty(&report) {
            let _ = fs::write(path, text);
        }
    }
    report
}

/// Short-horizon invariant suite: at most ten report intervals, no output.
pub fn verify(mut config: RunConfig) -> RunReport {
    config.time.t_end = config.time.t_end.min(10.0 * config.time.report_interval);
    config.time.snapshot_interval = None;
    let mut report = run(config, false);
    if let Some(v) = report.verdicts.as_mut() {
        v.growth = None;
        if report.status == ExitStatus::InvariantViolation && v.pass() {
            report.status = ExitStatus::Pass;
        }
    }
    report
}

/// One entry of an ε sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub epsilon: f64,
    pub report: RunReport,
    /// ‖n_ε − n_ε_prev‖ in the discrete L² norm (previous sweep value).
    pub n_difference: Option<f64>,
}

/// Runs the configuration once per ε, each into `<dir>/eps_<ε>`.
pub fn sweep_eps(config: &RunConfig, values: &[f64], write_output: bool) -> Vec<SweepEntry> {
    let mut out = Vec::new();
    let mut prev: Option<ScalarField> = None;
    for &eps in values {
        let mut cfg = config.clone();
        cfg.model.epsilon = eps;
        cfg.output.dir = config.output.dir.join(format!("eps_{eps:e}"));
        let mut sim = match Simulation::new(cfg) {
            Ok(s) => s,
            Err(e) => {
                out.push(SweepEntry {
                    epsilon: eps,
                    report: RunReport {
                        status: ExitStatus::from_error(&e),
                        error: Some(e.to_string()),
                        stats: None,
                        verdicts: None,
                        final_report: None,
                    },
                    n_difference: None,
                });
                prev = None;
                continue;
            }
        };
        let report = match if write_output { sim.enable_output() } else { Ok(()) } {
            Ok(()) => finish(&mut sim),
            Err(e) => RunReport {
                status: ExitStatus::from_error(&e),
                error: Some(e.to_string()),
                stats: None,
                verdicts: None,
                final_report: None,
            },
        };
        let n = sim.state.n.clone();
        let n_difference = prev.as_ref().map(|p| {
            let mut d = n.clone();
            d.axpy(-1.0, p);
            (d.dot(&d) * sim.grid.cell_volume()).sqrt()
        });
        prev = (report.status != ExitStatus::BlowUp).then_some(n);
        out.push(SweepEntry { epsilon: eps, report, n_difference });
    }
    out
}

/// The documented default 2D scenario.
pub fn default_config() -> RunConfig {
    RunConfig::from_toml(DEFAULT_CONFIG).expect("default config is valid")
}

pub const DEFAULT_CONFIG: &str = r#"
disable_flow = false

[grid]
dim = 2
extents = [2.0, 2.0]
cells = [64, 64]

[model]
p = 2.2
kappa = 1.0
epsilon = 0.05
phi_gradient = [0.0, -0.1]
s0 = 1.0

[initial.n]
kind = "gaussian"
width = 0.3
amplitude = 1.0

[initial.c]
kind = "constant"
value = 1.0

[initial.u]
kind = "zero"

[time]
t_end = 1.0
cfl_safety = 0.8
report_interval = 0.02

[output]
dir = "out"
"#;

#[cfg(test)]
mod tests {
    use super::*;

    fn small(cells: usize) -> RunConfig {
        let mut c = default_config();
        c.grid.cells = vec![cells; 2];
        c
    }

    #[test]
    fn default_config_round_trips() {
        let c = default_config();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = default_config();
        c.time.cfl_safety = 1.5;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = default_config();
        c.initial.c = ScalarIc::Constant { value: 2.0 };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = default_config();
        c.model.sensitivity = SensitivityPair::Polynomial { chi: vec![1.0], f: vec![0.5, 1.0] };
        assert!(matches!(c.validate(), Err(Error::StructuralCondition(_))));
        assert!(matches!(RunConfig::from_toml("[grid]\ndim = 2\n"), Err(Error::Config(_))));
        let text = DEFAULT_CONFIG.replace("s0 = 1.0", "s0 = 1.0\nbogus = 3");
        assert!(RunConfig::from_toml(&text).is_err());
    }

    #[test]
    fn rest_state_dt_is_the_heat_limit() {
        let g = Grid::square(16, 1.0).unwrap();
        let mut params = ModelParams::new(2.0, 1.0, 0.1, vec![0.0, 0.0]);
        params.s0 = 0.0;
        // no bacteria, no consumption: only the heat limit is active
        let s = State::new(&g, 0.0, g.zeros(), g.zeros(), g.vector_zeros());
        let lim = stable_dt(&g, &s, &params, 0.5).unwrap();
        let h = g.dx()[0];
        assert!((lim.dt - 0.5 * h * h / 4.0).abs() < 1e-15);
        let g2 = Grid::square(32, 1.0).unwrap();
        let s2 = State::new(&g2, 0.0, g2.zeros(), g2.zeros(), g2.vector_zeros());
        let lim2 = stable_dt(&g2, &s2, &params, 0.5).unwrap();
        assert!((lim.dt / lim2.dt - 4.0).abs() < 1e-12);
    }

    #[test]
    fn steep_ramp_reduces_dt() {
        let g = Grid::square(16, 1.0).unwrap();
        let params = ModelParams::new(2.5, 1.0, 0.05, vec![0.0, 0.0]);
        let flat = State::new(&g, 0.0, ScalarField::constant(&g, 1.0), g.zeros(), g.vector_zeros());
        let ramp = State::new(&g, 0.0, g.scalar_from_fn(|x| 1.0 + 20.0 * x[0]), g.zeros(), g.vector_zeros());
        let a = stable_dt(&g, &flat, &params, 1.0).unwrap();
        let b = stable_dt(&g, &ramp, &params, 1.0).unwrap();
        assert!(b.dt < a.dt);
    }

    #[test]
    fn tiny_horizon_takes_one_step() {
        let mut c = small(8);
        c.time.t_end = 1e-9;
        let mut sim = Simulation::new(c).unwrap();
        sim.run_to_end().unwrap();
        assert_eq!(sim.steps, 1);
        assert_eq!(sim.reports.len(), 2);
        assert_eq!(sim.state.t, 1e-9);
    }

    #[test]
    fn reports_land_on_the_schedule() {
        let mut c = small(8);
        c.time.t_end = 0.1;
        c.time.report_interval = 0.025;
        let mut sim = Simulation::new(c).unwrap();
        sim.run_to_end().unwrap();
        let times: Vec<f64> = sim.reports.iter().map(|r| r.t).collect();
        assert_eq!(times.len(), 5);
        for (k, t) in times.iter().enumerate() {
            assert!((t - 0.025 * k as f64).abs() < 1e-15, "{times:?}");
        }
    }

    #[test]
    fn checkpoint_round_trip_is_lossless() {
        let mut c = small(8);
        c.time.t_end = 0.02;
        c.initial.u = VelocityIc::Vortex { amplitude: 0.3 };
        let mut sim = Simulation::new(c).unwrap();
        sim.run_to_end().unwrap();
        let cp = sim.checkpoint();
        let text = serde_json::to_string(&cp).unwrap();
        let back: Checkpoint = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cp);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(ExitStatus::from_error(&Error::Config("x".into())).code(), 4);
        assert_eq!(ExitStatus::from_error(&Error::BlowUp { step: 1, field: "n" }).code(), 3);
        assert_eq!(ExitStatus::InvariantViolation.code(), 2);
        let mut c = small(8);
        c.model.epsilon = 2.0;
        assert_eq!(run(c, false).status, ExitStatus::ConfigError);
    }
}
