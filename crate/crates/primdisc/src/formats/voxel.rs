//! Run-length encoded voxel grid text format (`VOXRLE 1`).
//!
//! ```text
//! VOXRLE 1
//! resolution 50
//! origin -0.51 -0.51 -0.51
//! voxel_size 0.0204
//! runs 3
//! 1200 80 123720
//! ```
//!
//! Runs alternate empty/occupied starting with an empty run (possibly 0)
//! in linear index order `x + n * (y + n * z)` and must sum to `n³`. Run
//! values may be split over any number of lines.

use std::fmt::Write as _;

use primdisc_core::{Lattice, Vec3, VoxelGrid};

use crate::error::{FormatError, Result};

pub const MAGIC: &str = "VOXRLE 1";
const RUNS_PER_LINE: usize = 16;

pub fn write_voxels(grid: &VoxelGrid) -> String {
    let lat = grid.lattice();
    let runs = grid.to_runs();
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "resolution {}", lat.resolution);
    let _ = writeln!(s, "origin {:?} {:?} {:?}", lat.origin.x, lat.origin.y, lat.origin.z);
    let _ = writeln!(s, "voxel_size {:?}", lat.voxel_size);
    let _ = writeln!(s, "runs {}", runs.len());
    for chunk in runs.chunks(RUNS_PER_LINE) {
        let line: Vec<String> = chunk.iter().map(|r| r.to_string()).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    s
}

fn field<'a>(line: Option<(usize, &'a str)>, key: &str, count: usize) -> Result<(usize, Vec<&'a str>)> {
    let (ln, l) = line.ok_or_else(|| FormatError::parse(0, format!("missing '{key}' line")))?;
    let mut t = l.split_whitespace();
    if t.next() != Some(key) {
        return Err(FormatError::parse(ln, format!("expected '{key}'")));
    }
    let vals: Vec<&str> = t.collect();
    if vals.len() != count {
        return Err(FormatError::parse(ln, format!("'{key}' takes {count} value(s)")));
    }
    Ok((ln, vals))
}

fn num<T: std::str::FromStr>(tok: &str, ln: usize) -> Result<T> {
    tok.parse().map_err(|_| FormatError::parse(ln, format!("invalid number '{tok}'")))
}

pub fn parse_voxels(text: &str) -> Result<VoxelGrid> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, l)) if l == MAGIC => {}
        Some((ln, _)) => return Err(FormatError::parse(ln, format!("expected '{MAGIC}'"))),
        None => return Err(FormatError::parse(1, "empty voxel file")),
    }
    let (ln, r) = field(lines.next(), "resolution", 1)?;
    let resolution: usize = num(r[0], ln)?;
    let (ln, o) = field(lines.next(), "origin", 3)?;
    let origin = Vec3::new(num(o[0], ln)?, num(o[1], ln)?, num(o[2], ln)?);
    let (ln, v) = field(lines.next(), "voxel_size", 1)?;
    let voxel_size: f64 = num(v[0], ln)?;
    let (ln_runs, c) = field(lines.next(), "runs", 1)?;
    let count: usize = num(c[0], ln_runs)?;
    let mut runs = Vec::with_capacity(count);
    for (ln, l) in lines {
        for tok in l.split_whitespace() {
            runs.push(num::<u64>(tok, ln)?);
        }
    }
    if runs.len() != count {
        return Err(FormatError::parse(ln_runs, format!("expected {count} runs, found {}", runs.len())));
    }
    let lattice = Lattice::new(resolution, origin, voxel_size)?;
    let total: u64 = runs.iter().sum();
    if total != lattice.len() as u64 {
        return Err(FormatError::parse(ln_runs, format!("runs sum to {total}, expected {}", lattice.len())));
    }
    Ok(VoxelGrid::from_runs(lattice, &runs)?)
}
