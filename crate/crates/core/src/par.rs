//! Data-parallel loop helpers with a sequential fallback.
//!
//! Kernels write each output point from a pure function of the inputs, so the
//! result is bitwise identical for any thread count. Reductions stay
//! sequential in a fixed order and live with the callers.

use crate::grid::Layout;

/// Below this many points the sequential loop wins.
#[cfg(feature = "parallel")]
const PAR_THRESHOLD: usize = 1 << 14;

/// Writes `f(idx, [i, j, k])` into `out[idx]` for every point of `lo..hi`.
pub fn map_range<F>(layout: &Layout, out: &mut [f64], lo: [usize; 3], hi: [usize; 3], f: F)
where
    F: Fn(usize, [usize; 3]) -> f64 + Sync + Send,
{
    debug_assert_eq!(out.len(), layout.len);
    #[cfg(feature = "parallel")]
    {
        let count: usize = (0..3).map(|d| hi[d].saturating_sub(lo[d])).product();
        if count >= PAR_THRESHOLD {
            return map_range_par(layout, out, lo, hi, f);
        }
    }
    map_range_seq(layout, out, lo, hi, f)
}

pub fn map_interior<F>(layout: &Layout, out: &mut [f64], f: F)
where
    F: Fn(usize, [usize; 3]) -> f64 + Sync + Send,
{
    map_range(layout, out, [0; 3], layout.n, f)
}

fn map_range_seq<F>(layout: &Layout, out: &mut [f64], lo: [usize; 3], hi: [usize; 3], f: F)
where
    F: Fn(usize, [usize; 3]) -> f64,
{
    for k in lo[2]..hi[2] {
        for j in lo[1]..hi[1] {
            let base = layout.at([0, j, k]);
            for i in lo[0]..hi[0] {
                out[base + i] = f(base + i, [i, j, k]);
            }
        }
    }
}

#[cfg(feature = "parallel")]
fn map_range_par<F>(layout: &Layout, out: &mut [f64], lo: [usize; 3], hi: [usize; 3], f: F)
where
    F: Fn(usize, [usize; 3]) -> f64 + Sync + Send,
{
    use rayon::prelude::*;

    // Split along the outermost axis that has more than one plane.
    let axis = if layout.n[2] + 2 * layout.ghost[2] > 1 { 2 } else { 1 };
    let plane = layout.stride[axis];
    let g = layout.ghost[axis];
    out.par_chunks_mut(plane).enumerate().for_each(|(p, chunk)| {
        if p < g + lo[axis] || p >= g + hi[axis] {
            return;
        }
        let q = p - g;
        let offset = p * plane;
        let (jr, kr) = if axis == 2 { (lo[1]..hi[1], q..q + 1) } else { (q..q + 1, lo[2]..hi[2]) };
        for k in kr {
            for j in jr.clone() {
                let base = layout.at([0, j, k]);
                for i in lo[0]..hi[0] {
                    chunk[base + i - offset] = f(base + i, [i, j, k]);
                }
            }
        }
    });
}

/// Runs `f` on disjoint mutable chunks of `data` of length `chunk`.
pub fn for_each_chunk<F>(data: &mut [f64], chunk: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if data.len() >= PAR_THRESHOLD {
            data.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
            return;
        }
    }
    data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}
