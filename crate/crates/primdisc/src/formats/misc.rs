//! Context bundles, depth images, descriptor files, CSV tables and the run
//! manifest.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use primdisc_core::eval::VoxelMetrics;
use primdisc_core::matching::ShapeDescriptor;
use primdisc_core::render::DepthView;
use primdisc_core::ShapeContext;

use crate::error::{FormatError, Result};

pub const CONTEXT_FORMAT: &str = "primdisc-context";
pub const CONTEXT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ContextBundle {
    format: String,
    version: u32,
    context: ShapeContext,
}

pub fn write_context(ctx: &ShapeContext) -> Result<String> {
    let bundle = ContextBundle { format: CONTEXT_FORMAT.into(), version: CONTEXT_VERSION, context: ctx.clone() };
    Ok(serde_json::to_string(&bundle)?)
}

pub fn parse_context(text: &str) -> Result<ShapeContext> {
    let bundle: ContextBundle = serde_json::from_str(text)?;
    if bundle.format != CONTEXT_FORMAT || bundle.version != CONTEXT_VERSION {
        return Err(FormatError::UnsupportedFormat(format!("{} v{}", bundle.format, bundle.version)));
    }
    bundle.context.validate()?;
    Ok(bundle.context)
}

/// Binary 16-bit PGM (`P5`, maxval 65535, big-endian). Misses are 0; a hit
/// of depth `d` is stored as `1 + round(d / scale * 65534)` where `scale`
/// is the largest depth, recorded in a `# depth_scale <scale>` comment.
pub fn write_depth_pgm(view: &DepthView) -> Vec<u8> {
    let scale = view.depth.iter().fold(0.0f64, |a, &d| a.max(d));
    let mut out = format!("P5\n# depth_scale {scale:?}\n{} {}\n65535\n", view.width, view.height).into_bytes();
    for &d in &view.depth {
        let v: u16 = if d > 0.0 && scale > 0.0 { 1 + (d / scale * 65534.0).round() as u16 } else { 0 };
        out.extend_from_slice(&v.to_be_bytes());
    }
    out
}

/// Inverse of [`write_depth_pgm`]: `(width, height, depths)`.
pub fn parse_depth_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>)> {
    let mut fields: Vec<String> = Vec::new();
    let mut scale = None;
    let mut pos = 0;
    while fields.len() < 4 {
        let end = bytes[pos..].iter().position(|&b| b == b'\n').ok_or_else(|| FormatError::parse(0, "truncated PGM header"))?;
        let line = std::str::from_utf8(&bytes[pos..pos + end]).map_err(|_| FormatError::parse(0, "non-ASCII PGM header"))?;
        pos += end + 1;
        if let Some(c) = line.strip_prefix('#') {
            if let Some(v) = c.trim().strip_prefix("depth_scale") {
                scale = Some(v.trim().parse::<f64>().map_err(|_| FormatError::parse(0, "invalid depth_scale"))?);
            }
            continue;
        }
        fields.extend(line.split_whitespace().map(String::from));
    }
    if fields[0] != "P5" || fields[3] != "65535" {
        return Err(FormatError::UnsupportedFormat("expected 16-bit binary PGM".into()));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| FormatError::parse(0, "invalid PGM size"));
    let (w, h) = (parse(&fields[1])?, parse(&fields[2])?);
    let data = &bytes[pos..];
    if data.len() != 2 * w * h {
        return Err(FormatError::parse(0, "PGM pixel data has the wrong length"));
    }
    let scale = scale.unwrap_or(1.0);
    let depth = data
        .chunks_exact(2)
        .map(|c| {
            let v = u16::from_be_bytes([c[0], c[1]]);
            if v == 0 {
                0.0
            } else {
                (v - 1) as f64 / 65534.0 * scale
            }
        })
        .collect();
    Ok((w, h, depth))
}

/// One descriptor per line: `shape_id v1 v2 … vD`. `#` starts a comment.
pub fn parse_features(text: &str) -> Result<Vec<ShapeDescriptor>> {
    let mut out: Vec<ShapeDescriptor> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut t = line.split_whitespace();
        let Some(id) = t.next() else { continue };
        let vector = t
            .map(|v| v.parse::<f64>().map_err(|_| FormatError::parse(ln, format!("invalid number '{v}'"))))
            .collect::<Result<Vec<f64>>>()?;
        if vector.is_empty() {
            return Err(FormatError::parse(ln, "descriptor has no values"));
        }
        if let Some(first) = out.first() {
            if first.vector.len() != vector.len() {
                return Err(FormatError::parse(ln, "descriptor length differs from the first line"));
            }
        }
        if out.iter().any(|d| d.shape_id == id) {
            return Err(FormatError::parse(ln, format!("duplicate shape id '{id}'")));
        }
        out.push(ShapeDescriptor { shape_id: id.into(), vector });
    }
    Ok(out)
}

pub fn write_features(descriptors: &[ShapeDescriptor]) -> String {
    let mut s = String::new();
    for d in descriptors {
        let _ = write!(s, "{}", d.shape_id);
        for v in &d.vector {
            let _ = write!(s, " {v:?}");
        }
        s.push('\n');
    }
    s
}

/// One row of the per-shape metrics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub shape_id: String,
    pub status: String,
    pub primitives: usize,
    pub recall: f64,
    pub precision: f64,
    pub accuracy: f64,
    pub f_measure: f64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl MetricsRow {
    pub fn new(shape_id: &str, status: &str, primitives: usize, m: &VoxelMetrics) -> MetricsRow {
        MetricsRow {
            shape_id: shape_id.into(),
            status: status.into(),
            primitives,
            recall: m.recall,
            precision: m.precision,
            accuracy: m.accuracy,
            f_measure: m.f_measure,
            tp: m.tp,
            fp: m.fp,
            fn_: m.fn_,
            tn: m.tn,
        }
    }
}

/// One row of the ablation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub configuration: String,
    /// Dropped cost names joined by `+`; empty for the full model.
    pub dropped: String,
    pub mean_recall: f64,
    pub shapes: usize,
}

pub fn write_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| FormatError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn parse_csv<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn features_round_trip() {
        let d = vec![
            ShapeDescriptor { shape_id: "a".into(), vector: vec![0.0, 0.5, 1.0] },
            ShapeDescriptor { shape_id: "b".into(), vector: vec![0.25, 0.125, 1.0 / 3.0] },
        ];
        assert_eq!(parse_features(&write_features(&d)).unwrap(), d);
        assert!(parse_features("a 1 2\nb 1\n").is_err());
        assert!(parse_features("a 1\na 2\n").is_err());
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![AblationRow { configuration: "w/o oc".into(), dropped: "oc".into(), mean_recall: 0.5, shapes: 3 }];
        assert_eq!(parse_csv::<AblationRow>(&write_csv(&rows).unwrap()).unwrap(), rows);
    }
}
