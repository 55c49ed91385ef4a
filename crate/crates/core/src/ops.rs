//! Staggered finite-difference operators. Every kernel expects ghosts to be
//! filled by the caller and writes interior (or face) values only.

use crate::error::{Error, Result};
use crate::grid::{Grid, Layout, ScalarField, VectorField};
use crate::model::{f_eps_prime_unchecked, ModelParams};
use crate::par::map_range;

/// Full-range bounds of face component `d` with the wall faces excluded.
fn interior_faces(l: &Layout, d: usize) -> ([usize; 3], [usize; 3]) {
    let mut lo = [0; 3];
    let mut hi = l.n;
    lo[d] = 1;
    hi[d] = l.n[d] - 1;
    (lo, hi)
}

/// (s_i − s_{i−1})/dx on every face, wall faces included.
pub fn face_gradient(grid: &Grid, s: &ScalarField) -> VectorField {
    let dx = grid.dx3();
    let sl = s.layout;
    let mut out = grid.vector_zeros();
    for (d, comp) in out.comps.iter_mut().enumerate() {
        let fl = comp.layout;
        let (st, inv) = (sl.stride[d], 1.0 / dx[d]);
        let sd = &s.data;
        map_range(&fl, &mut comp.data, [0; 3], fl.n, |_, p| {
            let r = sl.at(p);
            (sd[r] - sd[r - st]) * inv
        });
    }
    out
}

/// Σ_d (v_d(i+1) − v_d(i))/dx_d per cell.
pub fn cell_divergence(grid: &Grid, v: &VectorField) -> ScalarField {
    let dx = grid.dx3();
    let mut out = grid.zeros();
    let sl = out.layout;
    let layouts: Vec<Layout> = v.comps.iter().map(|c| c.layout).collect();
    map_range(&sl, &mut out.data, [0; 3], sl.n, |_, p| {
        let mut acc = 0.0;
        for (d, comp) in v.comps.iter().enumerate() {
            let f = layouts[d].at(p);
            acc += (comp.data[f + layouts[d].stride[d]] - comp.data[f]) / dx[d];
        }
        acc
    });
    out
}

/// Neumann cell Laplacian, div ∘ grad with zero boundary flux.
pub fn laplacian(grid: &Grid, s: &ScalarField) -> ScalarField {
    let dx = grid.dx3();
    let dim = grid.dim();
    let sl = s.layout;
    let mut out = grid.zeros();
    let sd = &s.data;
    map_range(&sl, &mut out.data, [0; 3], sl.n, |idx, p| {
        let mut acc = 0.0;
        for d in 0..dim {
            let st = sl.stride[d];
            let h2 = dx[d] * dx[d];
            // boundary faces carry no flux
            let right = if p[d] + 1 < sl.n[d] { sd[idx + st] - sd[idx] } else { 0.0 };
            let left = if p[d] > 0 { sd[idx] - sd[idx - st] } else { 0.0 };
            acc += (right - left) / h2;
        }
        acc
    });
    out
}

fn check_slow(p: f64) -> Result<()> {
    if p < 2.0 {
        Err(Error::FastDiffusion(p))
    } else {
        Ok(())
    }
}

/// |∇n|² on face component `d`: normal difference plus tangential centered
/// gradients averaged over the two adjacent cells.
#[inline(always)]
fn face_grad_sq(sd: &[f64], sl: &Layout, dx: &[f64; 3], dim: usize, d: usize, r: usize) -> (f64, f64) {
    let l = r - sl.stride[d];
    let gn = (sd[r] - sd[l]) / dx[d];
    let mut sq = gn * gn;
    for e in 0..dim {
        if e == d {
            continue;
        }
        let st = sl.stride[e];
        let gt = 0.25 * ((sd[r + st] - sd[r - st]) + (sd[l + st] - sd[l - st])) / dx[e];
        sq += gt * gt;
    }
    (gn, sq)
}

/// Face diffusivity (|∇n|² + ε)^{(p−2)/2}.
#[inline(always)]
fn diffusivity(sq: f64, p: f64, eps: f64) -> f64 {
    if p == 2.0 {
        1.0
    } else {
        (sq + eps).powf(0.5 * (p - 2.0))
    }
}

/// Regularized p-Laplacian fluxes (|∇n|² + ε)^{(p−2)/2} ∂n on interior
/// faces; wall faces carry zero flux.
pub fn plaplacian_flux(grid: &Grid, n: &ScalarField, p: f64, eps: f64) -> Result<VectorField> {
    check_slow(p)?;
    let dx = grid.dx3();
    let dim = grid.dim();
    let sl = n.layout;
    let sd = &n.data;
    let mut out = grid.vector_zeros();
    for (d, comp) in out.comps.iter_mut().enumerate() {
        let fl = comp.layout;
        let (lo, hi) = interior_faces(&fl, d);
        map_range(&fl, &mut comp.data, lo, hi, |_, q| {
            let (gn, sq) = face_grad_sq(sd, &sl, &dx, dim, d, sl.at(q));
            diffusivity(sq, p, eps) * gn
        });
    }
    Ok(out)
}

/// ∇·((|∇n|² + ε)^{(p−2)/2} ∇n) with zero normal flux.
pub fn plaplacian_div(grid: &Grid, n: &ScalarField, p: f64, eps: f64) -> Result<ScalarField> {
    if p == 2.0 {
        return Ok(laplacian(grid, n));
    }
    Ok(cell_divergence(grid, &plaplacian_flux(grid, n, p, eps)?))
}

/// Largest face diffusivity over interior faces (1 when there are none or p = 2).
pub fn max_face_diffusivity(grid: &Grid, n: &ScalarField, p: f64, eps: f64) -> Result<f64> {
    check_slow(p)?;
    if p == 2.0 {
        return Ok(1.0);
    }
    let dx = grid.dx3();
    let dim = grid.dim();
    let sl = n.layout;
    let mut max_sq: f64 = 0.0;
    for d in 0..dim {
        let fl = grid.face_layout(d);
        let (lo, hi) = interior_faces(&fl, d);
        crate::grid::for_each_point(&fl, lo, hi, |_, q| {
            let (_, sq) = face_grad_sq(&n.data, &sl, &dx, dim, d, sl.at(q));
            max_sq = max_sq.max(sq);
        });
    }
    // the exponent is nonnegative, so the largest gradient gives the largest diffusivity
    Ok(diffusivity(max_sq, p, eps))
}

/// Chemotactic fluxes n F_ε′(n) χ(c̄) ∂c with n upwinded along χ(c̄)∂c.
pub fn chemotaxis_flux(grid: &Grid, n: &ScalarField, c: &ScalarField, params: &ModelParams) -> VectorField {
    let dx = grid.dx3();
    let sl = n.layout;
    let (nd, cd) = (&n.data, &c.data);
    let eps = params.epsilon;
    let pair = &params.sensitivity;
    let mut out = grid.vector_zeros();
    for (d, comp) in out.comps.iter_mut().enumerate() {
        let fl = comp.layout;
        let (lo, hi) = interior_faces(&fl, d);
        let st = sl.stride[d];
        map_range(&fl, &mut comp.data, lo, hi, |_, q| {
            let r = sl.at(q);
            let l = r - st;
            let a = pair.chi(0.5 * (cd[l] + cd[r])) * (cd[r] - cd[l]) / dx[d];
            let donor = if a > 0.0 { nd[l] } else { nd[r] };
            a * donor * f_eps_prime_unchecked(donor, eps)
        });
    }
    out
}

/// ∇·(n F_ε′(n) χ(c) ∇c); enters the n-equation with a minus sign.
pub fn chemotaxis_div(grid: &Grid, n: &ScalarField, c: &ScalarField, params: &ModelParams) -> ScalarField {
    cell_divergence(grid, &chemotaxis_flux(grid, n, c, params))
}

/// Largest |χ(c̄)∂c| over interior faces, the chemotactic drift speed.
pub fn max_chemotactic_speed(grid: &Grid, c: &ScalarField, params: &ModelParams) -> Vec<f64> {
    let dx = grid.dx3();
    let sl = c.layout;
    (0..grid.dim())
        .map(|d| {
            let fl = grid.face_layout(d);
            let (lo, hi) = interior_faces(&fl, d);
            let mut m: f64 = 0.0;
            crate::grid::for_each_point(&fl, lo, hi, |_, q| {
                let r = sl.at(q);
                let l = r - sl.stride[d];
                let cd = &c.data;
                m = m.max((params.sensitivity.chi(0.5 * (cd[l] + cd[r])) * (cd[r] - cd[l]) / dx[d]).abs());
            });
            m
        })
        .collect()
}

/// −∇·(u s) in conservative form with first-order upwind face values.
pub fn advect_scalar(grid: &Grid, s: &ScalarField, u: &VectorField) -> ScalarField {
    let dx = grid.dx3();
    let sl = s.layout;
    let sd = &s.data;
    let mut flux = grid.vector_zeros();
    for (d, comp) in flux.comps.iter_mut().enumerate() {
        let fl = comp.layout;
        let ud = &u.comps[d].data;
        let st = sl.stride[d];
        map_range(&fl, &mut comp.data, [0; 3], fl.n, |f, q| {
            let r = sl.at(q);
            let v = ud[f];
            v * if v > 0.0 { sd[r - st] } else { sd[r] }
        });
    }
    let mut out = grid.zeros();
    let layouts: Vec<Layout> = flux.comps.iter().map(|c| c.layout).collect();
    map_range(&sl, &mut out.data, [0; 3], sl.n, |_, p| {
        let mut acc = 0.0;
        for (d, comp) in flux.comps.iter().enumerate() {
            let f = layouts[d].at(p);
            acc -= (comp.data[f + layouts[d].stride[d]] - comp.data[f]) / dx[d];
        }
        acc
    });
    out
}

/// Transport velocity component `e` interpolated to the faces of component `d`
/// (average of the four surrounding `e` faces).
#[inline(always)]
fn tangential_at(w: &ScalarField, d: usize, e: usize, q: [usize; 3]) -> f64 {
    let wl = w.layout;
    let base = {
        let mut b = q;
        b[d] -= 1;
        wl.at(b)
    };
    let (sd, se) = (wl.stride[d], wl.stride[e]);
    0.25 * (w.data[base] + w.data[base + sd] + w.data[base + se] + w.data[base + sd + se])
}

/// −(w·∇)u in convective form with first-order upwinding; zero on wall faces.
/// `u` must carry no-slip ghosts.
pub fn advect_velocity(grid: &Grid, u: &VectorField, w: &VectorField) -> VectorField {
    let dx = grid.dx3();
    let dim = grid.dim();
    let mut out = grid.vector_zeros();
    for (d, comp) in out.comps.iter_mut().enumerate() {
        let fl = comp.layout;
        let ud = &u.comps[d].data;
        let (lo, hi) = interior_faces(&fl, d);
        map_range(&fl, &mut comp.data, lo, hi, |f, q| {
            let mut acc = 0.0;
            for a in 0..dim {
                let wa = if a == d { w.comps[d].data[f] } else { tangential_at(&w.comps[a], d, a, q) };
                let st = fl.stride[a];
                let grad = if wa > 0.0 { ud[f] - ud[f - st] } else { ud[f + st] - ud[f] };
                acc -= wa * grad / dx[a];
            }
            acc
        });
    }
    out
}

/// Componentwise Laplacian of a no-slip velocity; zero on wall faces.
pub fn vector_laplacian(grid: &Grid, u: &VectorField) -> VectorField {
    let mut out = grid.vector_zeros();
    vector_laplacian_into(grid, u, &mut out);
    out
}

pub fn vector_laplacian_into(grid: &Grid, u: &VectorField, out: &mut VectorField) {
    let dx = grid.dx3();
    let dim = grid.dim();
    for (d, comp) in out.comps.iter_mut().enumerate() {
        let fl = comp.layout;
        let ud = &u.comps[d].data;
        let (lo, hi) = interior_faces(&fl, d);
        map_range(&fl, &mut comp.data, lo, hi, |f, _| {
            let mut acc = 0.0;
            for a in 0..dim {
                let st = fl.stride[a];
                acc += (ud[f + st] - 2.0 * ud[f] + ud[f - st]) / (dx[a] * dx[a]);
            }
            acc
        });
    }
}

/// Buoyancy n̄ ∇Φ with n̄ the arithmetic face mean, on every face including
/// walls (the wall values drop out once the caller imposes no-slip).
pub fn buoyancy(grid: &Grid, n: &ScalarField, params: &ModelParams) -> VectorField {
    let sl = n.layout;
    let nd = &n.data;
    let mut out = grid.vector_zeros();
    for (d, comp) in out.comps.iter_mut().enumerate() {
        let fl = comp.layout;
        let g = params.grad_phi(d);
        let st = sl.stride[d];
        map_range(&fl, &mut comp.data, [0; 3], fl.n, |_, q| {
            let r = sl.at(q);
            0.5 * (nd[r - st] + nd[r]) * g
        });
    }
    out
}
