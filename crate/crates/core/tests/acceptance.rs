//! Acceptance criteria 1–12, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always printed; exits nonzero if any fail.

mod common;

use std::time::Instant;

use chemoflow::audit::EnergyReport;
use chemoflow::driver::{default_config, Checkpoint, RunConfig, Simulation};
use chemoflow::exponents;
use chemoflow::grid::Grid;
use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// The default T = 1 run plus what later criteria reuse from it.
struct DefaultRun {
    seconds: f64,
    csv: String,
    reports: Vec<EnergyReport>,
    cumulative: [f64; 7],
    s0: f64,
    mid: Checkpoint,
    end: Checkpoint,
}

fn default_run() -> DefaultRun {
    let start = Instant::now();
    let mut sim = Simulation::new(default_config()).unwrap();
    let half = 0.5 * sim.config.time.t_end;
    let mut mid = None;
    while !sim.finished() {
        sim.step().unwrap();
        if mid.is_none() && (sim.state.t - half).abs() <= 1e-12 {
            mid = Some(sim.checkpoint());
        }
    }
    DefaultRun {
        seconds: start.elapsed().as_secs_f64(),
        csv: sim.csv(),
        reports: sim.reports.clone(),
        cumulative: sim.ledger.latest(),
        s0: sim.params.s0,
        mid: mid.expect("T/2 is a report time"),
        end: sim.checkpoint(),
    }
}

fn mass_and_max(run: &DefaultRun) -> (Outcome, Outcome) {
    let v = chemoflow::audit::check_mass_and_max(&run.reports, run.s0).unwrap();
    let c1 = outcome(
        v.mass_ok && run.seconds <= 60.0,
        format!("max relative mass drift {:.3e} (limit 1e-12), runtime {:.1} s (target 60 s)", v.max_relative_mass_drift, run.seconds),
    );
    let max_c = run.reports.iter().map(|r| r.max_c).fold(f64::MIN, f64::max);
    let c2 = outcome(
        v.max_c_ok && v.max_c_strictly_decreasing,
        format!(
            "sup max_c {max_c:.15} <= s0(1+1e-12) {}, strictly decreasing {}",
            v.max_c_ok, v.max_c_strictly_decreasing
        ),
    );
    (c1, c2)
}

fn decay_run(mut cfg: RunConfig) -> chemoflow::Result<(usize, chemoflow::audit::DecayVerdict)> {
    cfg.disable_flow = true;
    cfg.time.max_steps = Some(500);
    cfg.time.report_interval = 1e-3;
    let mut sim = Simulation::new(cfg)?;
    sim.run_to_end()?;
    let v = chemoflow::audit::check_energy_decay(&sim.reports)?;
    Ok((sim.reports.len(), v))
}

fn criterion3() -> Outcome {
    let (reports, v) = decay_run(default_config()).unwrap();
    outcome(v.pass, format!("{reports} reports over 500 steps, largest increase {:.3e}", v.max_increase))
}

fn growth_detail(verdicts: &[chemoflow::audit::GrowthVerdict]) -> String {
    verdicts
        .iter()
        .map(|g| format!("{} sup/median {:.4}", g.quantity, g.window_sup / g.window_median))
        .collect::<Vec<_>>()
        .join(", ")
}

fn criterion4(run: &DefaultRun) -> Outcome {
    let mut sim = Simulation::from_checkpoint(run.end.clone(), Some(2.0)).unwrap();
    sim.run_to_end().unwrap();
    let v = sim.verdicts().unwrap();
    let growth = v.growth.expect("enough reports");
    let pass = growth.iter().all(|g| g.pass) && v.ledger_nondecreasing;
    outcome(pass, format!("T = {}: {}; ledger nondecreasing {}", sim.state.t, growth_detail(&growth), v.ledger_nondecreasing))
}

fn criterion5() -> Outcome {
    let g = Grid::square(8, 1.0).unwrap();
    let (_, slopes) = heat_richardson(&g, &[1e-4, 5e-5, 2.5e-5, 1.25e-5], 11);
    let slopes_ok = slopes.iter().all(|s| (s - 2.0).abs() <= 0.2);
    let ratio = eigenmode_error(32, 0.05) / eigenmode_error(64, 0.05);
    let ratio_ok = (3.6..=4.4).contains(&ratio);
    outcome(
        slopes_ok && ratio_ok,
        format!(
            "one-step slopes [{}], eigenmode error ratio 32->64 {ratio:.4}",
            slopes.iter().map(|s| format!("{s:.4}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn criterion6() -> Outcome {
    let s = exponents::bootstrap_schedule(0.01).unwrap();
    let reference = (24.0f64 / 5.0).ln() / (100.0f64 / 81.0).ln();
    let d1_err = (s.delta1 - reference).abs();
    let mut m = 1.0;
    let mut rec_err = 0.0_f64;
    for k in 0..=20 {
        rec_err = rec_err.max((m - s.closed_form(k)).abs() / m.abs().max(1.0));
        m = s.next(m);
    }
    let gap = gap_identity_worst(2000, 7);
    let l = exponents::gradient_interpolation(2.0).unwrap();
    let pass = d1_err <= 1e-12
        && (s.delta1 - 7.44).abs() < 0.005
        && rec_err <= 1e-12
        && gap <= 1e-12
        && l.theta == 0.25
        && l.identity_residual.abs() <= 1e-12;
    outcome(
        pass,
        format!(
            "delta1(1/100) = {:.12} (error {d1_err:.1e}), recursion error {rec_err:.1e}, gap residual {gap:.1e}, theta(2) = {}, identity residual {:.1e}",
            s.delta1, l.theta, l.identity_residual
        ),
    )
}

fn criterion7() -> Outcome {
    let samples = f_eps_samples(100);
    let bad = f_eps_violations(&samples);
    outcome(bad == 0, format!("{} points x {} epsilons, {bad} violations", samples.len(), F_EPS_EPSILONS.len()))
}

fn criterion8() -> Outcome {
    let g = Grid::square(32, 1.0).unwrap();
    let h = helmholtz_checks(&g, 50, 0.05, 5);
    let (eig, lambdas) = yosida_eigen_consistency(&Grid::square(8, 1.0).unwrap(), 0.05, 3);
    let pass = h.idempotency <= 1e-10 && h.divergence_in_tol_units <= 100.0 && h.yosida_gain <= 1.0 + 1e-12 && eig <= 1e-8;
    outcome(
        pass,
        format!(
            "idempotency {:.1e}, divergence {:.2} x tol, max Yosida gain {:.15}, eigen-consistency {eig:.1e} (lambda {:.3}, {:.3}, {:.3})",
            h.idempotency, h.divergence_in_tol_units, h.yosida_gain, lambdas[0], lambdas[1], lambdas[2]
        ),
    )
}

fn criterion9() -> Outcome {
    let square = oracle_equivalence(&Grid::square(8, 1.0).unwrap(), 20, 1);
    let cube = oracle_equivalence(&Grid::cube(4, 1.0).unwrap(), 20, 2);
    let worst = square.worst().max(cube.worst());
    let adj = square.dense_adjoint.max(square.matrix_free_adjoint).max(cube.dense_adjoint).max(cube.matrix_free_adjoint);
    let names = square
        .operators
        .iter()
        .zip(&cube.operators)
        .map(|(a, b)| format!("{} {:.1e}", a.0, a.1.max(b.1)))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(worst <= 1e-13 && adj <= 1e-12, format!("{names}; adjointness {adj:.1e}"))
}

fn criterion10() -> Outcome {
    // snapshot spacing shrinks with dx so the time quadrature refines too
    let t_end = 0.25;
    let res: Vec<[f64; 3]> = [16usize, 32, 64].iter().map(|&n| weak_residuals(n, t_end, 0.01 * 16.0 / n as f64)).collect();
    let pass = (0..3).all(|e| res[1][e] < res[0][e] && res[2][e] < res[1][e]);
    let fmt = |e: usize| format!("{:.2e} > {:.2e} > {:.2e}", res[0][e], res[1][e], res[2][e]);
    outcome(pass, format!("n: {}; c: {}; u: {}", fmt(0), fmt(1), fmt(2)))
}

fn criterion11(run: &DefaultRun) -> Outcome {
    let again = {
        let mut sim = Simulation::new(default_config()).unwrap();
        sim.run_to_end().unwrap();
        sim.csv()
    };
    let identical = again == run.csv;

    // the checkpoint goes through its on-disk encoding
    let text = serde_json::to_string(&run.mid).unwrap();
    let cp: Checkpoint = serde_json::from_str(&text).unwrap();
    let lossless = cp == run.mid;
    let mut sim = Simulation::from_checkpoint(cp, None).unwrap();
    sim.run_to_end().unwrap();
    let a = run.reports.last().unwrap();
    let b = sim.reports.last().unwrap();
    let fields = |r: &EnergyReport| {
        [r.t, r.mass_n, r.min_n, r.max_c, r.e_nlogn, r.e_psi, r.e_kin, r.d_plap, r.d_plap_power, r.d_hess, r.d_quart, r.d_gradu, r.norm_u_103, r.norm_n_r]
    };
    let mut worst = 0.0_f64;
    for (x, y) in fields(a).iter().chain(&run.cumulative).zip(fields(b).iter().chain(&sim.ledger.latest())) {
        worst = worst.max((x - y).abs() / x.abs().max(1e-300));
    }
    outcome(
        identical && lossless && worst <= 1e-12 && sim.reports.len() == run.reports.len(),
        format!("repeat CSV identical {identical}, checkpoint lossless {lossless}, restart at T/2 max relative difference {worst:.1e}"),
    )
}

fn smoke_3d() -> RunConfig {
    RunConfig::from_toml(include_str!("../../../configs/smoke_3d.toml")).unwrap()
}

fn criterion12() -> Outcome {
    let start = Instant::now();
    let cfg = smoke_3d();
    let mut sim = Simulation::new(cfg.clone()).unwrap();
    let done = sim.run_to_end();
    let (decay_reports, decay) = decay_run(cfg).unwrap();
    let seconds = start.elapsed().as_secs_f64();
    let Ok(stats) = done else {
        return outcome(false, format!("run failed: {}", done.unwrap_err()));
    };
    let v = sim.verdicts().unwrap();
    let mm = v.mass_and_max.expect("reports");
    let growth = v.growth.expect("enough reports");
    let pass = mm.pass() && mm.max_c_strictly_decreasing && decay.pass && growth.iter().all(|g| g.pass) && seconds <= 300.0;
    outcome(
        pass,
        format!(
            "{} steps, mass drift {:.1e}, max_c ok {} decreasing {}, decay ({decay_reports} reports) {}, growth {}, runtime {seconds:.1} s",
            stats.steps,
            mm.max_relative_mass_drift,
            mm.max_c_ok,
            mm.max_c_strictly_decreasing,
            decay.pass,
            growth.iter().all(|g| g.pass)
        ),
    )
}

fn main() {
    // `cargo test -- --list` and filters are harmless no-ops here
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut failed = 0;
    let mut report = |id: usize, name: &str, o: Outcome| {
        println!("criterion {id:>2} {}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    };
    let run = default_run();
    let (c1, c2) = mass_and_max(&run);
    report(1, "mass conservation", c1);
    report(2, "maximum principle", c2);
    report(3, "energy decay without flow", criterion3());
    report(4, "linear growth of cumulative dissipation", criterion4(&run));
    report(5, "p = 2 heat reduction", criterion5());
    report(6, "exponent calculator", criterion6());
    report(7, "F_eps contract", criterion7());
    report(8, "Helmholtz and Yosida contracts", criterion8());
    report(9, "oracle equivalence", criterion9());
    report(10, "weak residual refinement", criterion10());
    report(11, "determinism and restart", criterion11(&run));
    report(12, "3D smoke", criterion12());
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
