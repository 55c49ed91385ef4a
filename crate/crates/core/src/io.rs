//! Field snapshots (raw little-endian f64 with a text header) and legacy VTK
//! export.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::audit::cell_velocity;
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::transport::State;

const MAGIC: &str = "CHEMOFLOW-SNAPSHOT 1";

/// A decoded snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub field: String,
    pub dims: [usize; 3],
    pub extents: [f64; 3],
    pub time: f64,
    pub values: Vec<f64>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

/// Writes `values` (x fastest) with its header.
pub fn write_snapshot(path: &Path, field: &str, dims: [usize; 3], extents: [f64; 3], time: f64, values: &[f64]) -> Result<()> {
    if dims.iter().product::<usize>() != values.len() {
        return Err(Error::Precondition(format!("{} values do not fill dims {dims:?}", values.len())));
    }
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let header = format!(
        "{MAGIC}\nfield {field}\ndims {} {} {}\nextents {:e} {:e} {:e}\ntime {:e}\ncount {}\nencoding f64-le\nend\n",
        dims[0],
        dims[1],
        dims[2],
        extents[0],
        extents[1],
        extents[2],
        time,
        values.len()
    );
    w.write_all(header.as_bytes()).map_err(|e| io_err(path, e))?;
    for v in values {
        w.write_all(&v.to_le_bytes()).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut r = BufReader::new(file);
    let mut line = String::new();
    let mut next = |r: &mut BufReader<File>| -> Result<String> {
        line.clear();
        r.read_line(&mut line).map_err(|e| io_err(path, e))?;
        Ok(line.trim_end().to_string())
    };
    if next(&mut r)? != MAGIC {
        return Err(io_err(path, "not a snapshot file"));
    }
    let mut snap = Snapshot { field: String::new(), dims: [1; 3], extents: [1.0; 3], time: 0.0, values: Vec::new() };
    let mut count = None;
    loop {
        let l = next(&mut r)?;
        let mut parts = l.split_whitespace();
        let key = parts.next().unwrap_or("");
        let rest: Vec<&str> = parts.collect();
        let bad = |what: &str| io_err(path, format!("malformed {what} line"));
        match key {
            "field" => snap.field = rest.join(" "),
            "dims" => {
                for (a, v) in rest.iter().enumerate().take(3) {
                    snap.dims[a] = v.parse().map_err(|_| bad("dims"))?;
                }
            }
            "extents" => {
                for (a, v) in rest.iter().enumerate().take(3) {
                    snap.extents[a] = v.parse().map_err(|_| bad("extents"))?;
                }
            }
            "time" => snap.time = rest.first().and_then(|v| v.parse().ok()).ok_or_else(|| bad("time"))?,
            "count" => count = Some(rest.first().and_then(|v| v.parse::<usize>().ok()).ok_or_else(|| bad("count"))?),
            "encoding" if rest.first() == Some(&"f64-le") => {}
            "end" => break,
            "" => return Err(io_err(path, "header ended early")),
            other => return Err(io_err(path, format!("unknown header key {other}"))),
        }
    }
    let count = count.ok_or_else(|| io_err(path, "missing count"))?;
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes).map_err(|e| io_err(path, e))?;
    snap.values = bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    Ok(snap)
}

fn padded<T: Copy>(v: &[T], fill: T) -> [T; 3] {
    let mut out = [fill; 3];
    out[..v.len()].copy_from_slice(v);
    out
}

/// Writes n, c and every velocity component (wall faces included) of `state`
/// into `dir` with file names `<field>_<index>.bin`.
pub fn write_state_snapshots(dir: &Path, grid: &Grid, state: &State, index: usize) -> Result<()> {
    let extents = padded(grid.extents(), 1.0);
    let dims = padded(grid.cells(), 1);
    let scalar = |name: &str, f: &ScalarField| -> Result<()> {
        write_snapshot(&dir.join(format!("{name}_{index:05}.bin")), name, dims, extents, state.t, &f.interior())
    };
    scalar("n", &state.n)?;
    scalar("c", &state.c)?;
    for (d, comp) in state.u.comps.iter().enumerate() {
        let name = format!("u{d}");
        let l = comp.layout;
        write_snapshot(&dir.join(format!("{name}_{index:05}.bin")), &name, l.n, extents, state.t, &comp.interior())?;
    }
    Ok(())
}

/// Legacy ASCII structured-points file with n, c and the cell-averaged velocity.
pub fn write_vtk(path: &Path, grid: &Grid, state: &State) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let dims = padded(grid.cells(), 1);
    let dx = padded(grid.dx(), 1.0);
    let count = grid.num_cells();
    let uc = cell_velocity(grid, &state.u);
    let mut text = format!(
        "# vtk DataFile Version 3.0\nchemoflow t={:e}\nASCII\nDATASET STRUCTURED_POINTS\nDIMENSIONS {} {} {}\nORIGIN {:e} {:e} {:e}\nSPACING {:e} {:e} {:e}\nPOINT_DATA {count}\n",
        state.t,
        dims[0],
        dims[1],
        dims[2],
        0.5 * dx[0],
        0.5 * dx[1],
        if grid.dim() == 3 { 0.5 * dx[2] } else { 0.0 },
        dx[0],
        dx[1],
        dx[2]
    );
    for (name, f) in [("n", &state.n), ("c", &state.c)] {
        text.push_str(&format!("SCALARS {name} double 1\nLOOKUP_TABLE default\n"));
        for v in f.interior() {
            text.push_str(&format!("{v:e}\n"));
        }
    }
    text.push_str("VECTORS u double\n");
    let comps: Vec<Vec<f64>> = uc.iter().map(|f| f.interior()).collect();
    for i in 0..count {
        let v: Vec<String> = (0..3).map(|d| format!("{:e}", comps.get(d).map_or(0.0, |c| c[i]))).collect();
        text.push_str(&v.join(" "));
        text.push('\n');
    }
    w.write_all(text.as_bytes()).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bin");
        let values: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin() / 3.0).collect();
        write_snapshot(&path, "n", [4, 3, 1], [2.0, 1.5, 1.0], 0.125, &values).unwrap();
        let s = read_snapshot(&path).unwrap();
        assert_eq!((s.field.as_str(), s.dims, s.extents, s.time), ("n", [4, 3, 1], [2.0, 1.5, 1.0], 0.125));
        assert_eq!(s.values, values);
    }

    #[test]
    fn state_snapshots_and_vtk() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::square(4, 1.0).unwrap();
        let n = g.scalar_from_fn(|x| x[0] + 2.0 * x[1]);
        let s = State::new(&g, 0.5, n.clone(), g.zeros(), g.vector_zeros());
        write_state_snapshots(dir.path(), &g, &s, 3).unwrap();
        let back = read_snapshot(&dir.path().join("n_00003.bin")).unwrap();
        assert_eq!(back.values, n.interior());
        assert_eq!(read_snapshot(&dir.path().join("u1_00003.bin")).unwrap().dims, [4, 5, 1]);
        write_vtk(&dir.path().join("s.vtk"), &g, &s).unwrap();
        let text = std::fs::read_to_string(dir.path().join("s.vtk")).unwrap();
        assert!(text.contains("DIMENSIONS 4 4 1") && text.contains("POINT_DATA 16"));
    }
}
