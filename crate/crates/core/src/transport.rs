//! Explicit Euler update of the coupled (n, c, u) system.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowSolver;
use crate::grid::{Bc, Grid, ScalarField, VectorField};
use crate::model::{f_eps_unchecked, ModelParams};
use crate::ops;
use crate::par::map_interior;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub n: ScalarField,
    pub c: ScalarField,
    pub u: VectorField,
    pub pressure: ScalarField,
}

impl State {
    /// State from interior values; ghosts are filled here.
    pub fn new(grid: &Grid, t: f64, mut n: ScalarField, mut c: ScalarField, mut u: VectorField) -> Self {
        n.fill_ghosts(Bc::NeumannZero);
        c.fill_ghosts(Bc::NeumannZero);
        u.zero_wall_faces();
        u.fill_ghosts(Bc::DirichletZero);
        State { t, n, c, u, pressure: grid.zeros() }
    }

    pub fn mass(&self, grid: &Grid) -> f64 {
        self.n.sum() * grid.cell_volume()
    }
}

/// ∇·(D(∇n)∇n) − ∇·(n F_ε′(n) χ(c)∇c) − ∇·(u n).
pub fn n_tendency(grid: &Grid, state: &State, params: &ModelParams) -> Result<ScalarField> {
    let mut t = ops::plaplacian_div(grid, &state.n, params.p, params.epsilon)?;
    t.axpy(-1.0, &ops::chemotaxis_div(grid, &state.n, &state.c, params));
    t.axpy(1.0, &ops::advect_scalar(grid, &state.n, &state.u));
    Ok(t)
}

/// Δc − F_ε(n) f(c) − ∇·(u c).
pub fn c_tendency(grid: &Grid, state: &State, params: &ModelParams) -> ScalarField {
    let mut t = ops::laplacian(grid, &state.c);
    let (nd, cd) = (&state.n.data, &state.c.data);
    let eps = params.epsilon;
    let pair = &params.sensitivity;
    let layout = t.layout;
    let lap = std::mem::take(&mut t.data);
    let mut out = vec![0.0; lap.len()];
    map_interior(&layout, &mut out, |i, _| lap[i] - f_eps_unchecked(nd[i].max(0.0), eps) * pair.f(cd[i]));
    t.data = out;
    t.axpy(1.0, &ops::advect_scalar(grid, &state.c, &state.u));
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepInfo {
    pub yosida_iterations: usize,
    pub poisson_iterations: usize,
    /// max |∇·u| of the velocity that advected n and c.
    pub divergence_defect: f64,
}

/// Advances `state` by `dt`. With `flow` absent the velocity stays frozen.
pub fn step(
    grid: &Grid,
    state: &State,
    params: &ModelParams,
    dt: f64,
    flow: Option<&mut FlowSolver>,
    step_index: usize,
) -> Result<(State, StepInfo)> {
    let dn = n_tendency(grid, state, params)?;
    let dc = c_tendency(grid, state, params);
    let mut info = StepInfo {
        divergence_defect: ops::cell_divergence(grid, &state.u).max_abs(),
        ..Default::default()
    };

    let mut n = state.n.clone();
    n.axpy(dt, &dn);
    n.fill_ghosts(Bc::NeumannZero);
    let mut c = state.c.clone();
    c.axpy(dt, &dc);
    c.fill_ghosts(Bc::NeumannZero);

    let (u, pressure) = match flow {
        Some(flow) => {
            let r = flow.ns_step(&state.u, &state.n, params, dt)?;
            info.yosida_iterations = flow.last_yosida.iterations;
            info.poisson_iterations = flow.last_poisson.iterations;
            r
        }
        None => (state.u.clone(), state.pressure.clone()),
    };

    for (field, ok) in [("n", n.all_finite()), ("c", c.all_finite()), ("u", u.all_finite())] {
        if !ok {
            return Err(Error::BlowUp { step: step_index, field });
        }
    }
    Ok((State { t: state.t + dt, n, c, u, pressure }, info))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(g: &Grid, amp: f64, width: f64) -> ScalarField {
        let l = g.extents().to_vec();
        g.scalar_from_fn(|x| {
            let r2: f64 = (0..g.dim()).map(|d| (x[d] - 0.5 * l[d]).powi(2)).sum();
            amp * (-r2 / (width * width)).exp()
        })
    }

    #[test]
    fn equilibrium_is_fixed() {
        let g = Grid::square(8, 1.0).unwrap();
        let params = ModelParams::new(2.2, 1.0, 0.05, vec![0.0, 0.0]);
        let s = State::new(&g, 0.0, ScalarField::constant(&g, 0.7), g.zeros(), g.vector_zeros());
        let mut flow = FlowSolver::new(&g);
        let (s2, _) = step(&g, &s, &params, 1e-3, Some(&mut flow), 0).unwrap();
        for (a, b) in s.n.data.iter().zip(&s2.n.data) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(s2.c.max_abs(), 0.0);
        assert_eq!(s2.u.max_abs(), 0.0);
    }

    #[test]
    fn consumption_is_negative_at_uniform_oxygen() {
        let g = Grid::square(8, 1.0).unwrap();
        let params = ModelParams::new(2.2, 1.0, 0.05, vec![0.0, 0.0]);
        let n = gaussian(&g, 1.0, 0.3);
        let s = State::new(&g, 0.0, n.clone(), ScalarField::constant(&g, 1.0), g.vector_zeros());
        let dc = c_tendency(&g, &s, &params);
        crate::grid::for_each_point(&dc.layout, [0; 3], dc.layout.n, |i, _| {
            let expected = -f_eps_unchecked(n.data[i], 0.05);
            assert!((dc.data[i] - expected).abs() < 1e-14 && dc.data[i] < 0.0);
        });
        // c ≡ 0 is absorbing
        let s0 = State::new(&g, 0.0, n, g.zeros(), g.vector_zeros());
        assert_eq!(c_tendency(&g, &s0, &params).max_abs(), 0.0);
    }

    #[test]
    fn chemotaxis_off_leaves_pure_diffusion() {
        let g = Grid::square(10, 1.0).unwrap();
        let params = ModelParams::new(2.5, 1.0, 0.05, vec![0.0, 0.0]);
        let s = State::new(&g, 0.0, gaussian(&g, 2.0, 0.25), ScalarField::constant(&g, 0.4), g.vector_zeros());
        let a = n_tendency(&g, &s, &params).unwrap();
        let b = ops::plaplacian_div(&g, &s.n, 2.5, 0.05).unwrap();
        assert_eq!(a.interior(), b.interior());
    }

    #[test]
    fn single_step_conserves_mass_and_lowers_oxygen() {
        let g = Grid::square(16, 1.0).unwrap();
        let params = ModelParams::new(2.2, 1.0, 0.05, vec![0.0, -0.1]);
        let s = State::new(&g, 0.0, gaussian(&g, 1.0, 0.2), ScalarField::constant(&g, 1.0), g.vector_zeros());
        let mut flow = FlowSolver::new(&g);
        let (s2, _) = step(&g, &s, &params, 1e-4, Some(&mut flow), 0).unwrap();
        let (m0, m1) = (s.mass(&g), s2.mass(&g));
        assert!((m1 - m0).abs() <= 1e-12 * m0);
        assert!(s2.c.max() < 1.0);
    }

    #[test]
    fn non_finite_input_reports_blow_up() {
        let g = Grid::square(8, 1.0).unwrap();
        let params = ModelParams::new(2.2, 1.0, 0.05, vec![0.0, 0.0]);
        let mut n = ScalarField::constant(&g, 1.0);
        n.set([3, 3, 0], f64::NAN);
        let s = State::new(&g, 0.0, n, g.zeros(), g.vector_zeros());
        match step(&g, &s, &params, 1e-3, None, 17) {
            Err(Error::BlowUp { step: 17, field: "n" }) => {}
            other => panic!("expected blow-up, got {other:?}"),
        }
    }
}
