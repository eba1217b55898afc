//! OFF and OBJ (vertex and face subset) mesh readers and writers.
//!
//! Polygonal faces are fan-triangulated around their first vertex.

use std::fmt::Write as _;
use std::path::Path;

use primdisc_core::mesh::LoadReport;
use primdisc_core::{TriangleMesh, Vec3};

use crate::error::{FormatError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<MeshFormat> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "off" => Some(MeshFormat::Off),
            "obj" => Some(MeshFormat::Obj),
            _ => None,
        }
    }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| FormatError::parse(line, format!("invalid number '{tok}'")))?;
    if !v.is_finite() {
        return Err(FormatError::parse(line, format!("non-finite number '{tok}'")));
    }
    Ok(v)
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse().map_err(|_| FormatError::parse(line, format!("invalid integer '{tok}'")))
}

fn fan(poly: &[u32], faces: &mut Vec<[u32; 3]>) {
    for k in 1..poly.len() - 1 {
        faces.push([poly[0], poly[k], poly[k + 1]]);
    }
}

fn finish(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Result<TriangleMesh> {
    if faces.is_empty() {
        return Err(primdisc_core::Error::EmptyMesh.into());
    }
    Ok(TriangleMesh::new(vertices, faces)?)
}

/// Parses OFF text. The counts may share the header line (`OFF8 12 0`), as
/// in some published datasets. `#` starts a comment.
pub fn parse_off(text: &str) -> Result<TriangleMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or_else(|| FormatError::parse(1, "missing OFF header"))?;
    let rest = header.strip_prefix("OFF").ok_or_else(|| FormatError::parse(hline, "header must start with OFF"))?;
    let counts_line = if rest.trim().is_empty() {
        lines.next().ok_or_else(|| FormatError::parse(hline, "missing counts line"))?
    } else {
        (hline, rest.trim())
    };
    let counts: Vec<&str> = counts_line.1.split_whitespace().collect();
    if counts.len() < 2 {
        return Err(FormatError::parse(counts_line.0, "counts line needs vertex and face counts"));
    }
    let nv = parse_usize(counts[0], counts_line.0)?;
    let nf = parse_usize(counts[1], counts_line.0)?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| FormatError::parse(counts_line.0, "too few vertex lines"))?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() < 3 {
            return Err(FormatError::parse(ln, "vertex needs three coordinates"));
        }
        vertices.push(Vec3::new(parse_f64(t[0], ln)?, parse_f64(t[1], ln)?, parse_f64(t[2], ln)?));
    }
    let mut faces = Vec::with_capacity(nf);
    let mut poly = Vec::new();
    for _ in 0..nf {
        let (ln, l) = lines.next().ok_or_else(|| FormatError::parse(counts_line.0, "too few face lines"))?;
        let t: Vec<&str> = l.split_whitespace().collect();
        let k = parse_usize(t.first().copied().unwrap_or(""), ln)?;
        if k < 3 || t.len() < k + 1 {
            return Err(FormatError::parse(ln, "face needs at least three indices"));
        }
        poly.clear();
        for tok in &t[1..=k] {
            let idx = parse_usize(tok, ln)?;
            if idx >= nv {
                return Err(FormatError::parse(ln, format!("face index {idx} out of range for {nv} vertices")));
            }
            poly.push(idx as u32);
        }
        fan(&poly, &mut faces);
    }
    finish(vertices, faces)
}

/// Parses the `v` and `f` records of OBJ text. Face corners may carry
/// texture and normal references (`3/1/2`); negative indices count from the
/// end. Other records are ignored.
pub fn parse_obj(text: &str) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut poly = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        let mut t = l.split_whitespace();
        match t.next() {
            Some("v") => {
                let c: Vec<&str> = t.collect();
                if c.len() < 3 {
                    return Err(FormatError::parse(ln, "vertex needs three coordinates"));
                }
                vertices.push(Vec3::new(parse_f64(c[0], ln)?, parse_f64(c[1], ln)?, parse_f64(c[2], ln)?));
            }
            Some("f") => {
                poly.clear();
                for corner in t {
                    let first = corner.split('/').next().unwrap_or("");
                    let idx: i64 =
                        first.parse().map_err(|_| FormatError::parse(ln, format!("invalid index '{first}'")))?;
                    let resolved = match idx {
                        0 => return Err(FormatError::parse(ln, "OBJ indices start at 1")),
                        i if i > 0 => i - 1,
                        i => vertices.len() as i64 + i,
                    };
                    if resolved < 0 || resolved as usize >= vertices.len() {
                        return Err(FormatError::parse(ln, format!("face index {idx} out of range")));
                    }
                    poly.push(resolved as u32);
                }
                if poly.len() < 3 {
                    return Err(FormatError::parse(ln, "face needs at least three indices"));
                }
                fan(&poly, &mut faces);
            }
            _ => {}
        }
    }
    finish(vertices, faces)
}

/// Reads a mesh, choosing the parser by file extension.
pub fn load_mesh(path: &Path) -> Result<(TriangleMesh, LoadReport)> {
    let format = MeshFormat::from_path(path)
        .ok_or_else(|| FormatError::UnsupportedFormat(path.display().to_string()))?;
    let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    let mesh = match format {
        MeshFormat::Off => parse_off(&text)?,
        MeshFormat::Obj => parse_obj(&text)?,
    };
    let report = mesh.report();
    Ok((mesh, report))
}

pub fn write_off(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "OFF\n{} {} 0", mesh.vertices().len(), mesh.faces().len());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{:?} {:?} {:?}", v.x, v.y, v.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

pub fn write_obj(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(s, "v {:?} {:?} {:?}", v.x, v.y, v.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}
