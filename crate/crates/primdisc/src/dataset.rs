//! Dataset directories and the run manifest.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use primdisc_core::{CrfWeights, PipelineConfig};

use crate::error::{FormatError, Result};
use crate::formats::mesh::MeshFormat;
use crate::formats::{load_mesh, write_file};
use crate::pipeline::{Selection, ShapeInput, ShapeStatus};

/// Mesh files (`.off`, `.obj`) directly inside `dir`, sorted by name.
pub fn mesh_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| FormatError::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| FormatError::io(dir, e))?.path();
        if path.is_file() && MeshFormat::from_path(&path).is_some() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Shape id of a mesh file: its file stem.
pub fn shape_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Loads every mesh of a dataset directory. Unreadable files are returned
/// separately with their error.
pub fn load_dataset(dir: &Path) -> Result<(Vec<ShapeInput>, Vec<(String, String)>)> {
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for path in mesh_files(dir)? {
        let id = shape_id(&path);
        match load_mesh(&path) {
            Ok((mesh, report)) => {
                if !report.degenerate_faces.is_empty() {
                    log::warn!("{id}: {} degenerate faces", report.degenerate_faces.len());
                }
                ok.push(ShapeInput { id, mesh });
            }
            Err(e) => {
                log::warn!("{id}: {e}");
                failed.push((id, e.to_string()));
            }
        }
    }
    Ok((ok, failed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeRecord {
    pub shape_id: String,
    pub status: ShapeStatus,
    pub primitives: usize,
    pub objective: f64,
    pub nodes: usize,
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub message: Option<String>,
}

impl ShapeRecord {
    pub fn from_selection(id: &str, s: &Selection) -> ShapeRecord {
        ShapeRecord {
            shape_id: id.into(),
            status: s.status,
            primitives: s.indices.len(),
            objective: s.objective,
            nodes: s.nodes,
            seconds: s.seconds,
            message: s.message.clone(),
        }
    }

    pub fn failed(id: &str, message: &str) -> ShapeRecord {
        ShapeRecord {
            shape_id: id.into(),
            status: ShapeStatus::Failed,
            primitives: 0,
            objective: 0.0,
            nodes: 0,
            seconds: 0.0,
            message: Some(message.into()),
        }
    }
}

/// Machine-readable record of one CLI run, written as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub command: String,
    pub arguments: Vec<String>,
    pub created_unix: u64,
    pub config: PipelineConfig,
    /// Weights used for solving (normalizers after calibration).
    pub effective_weights: CrfWeights,
    pub shapes: Vec<ShapeRecord>,
    pub outputs: Vec<String>,
    pub seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, config: &PipelineConfig) -> RunManifest {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            core_version: primdisc_core::VERSION.into(),
            command: command.into(),
            arguments: std::env::args().skip(1).collect(),
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            config: config.clone(),
            effective_weights: config.weights,
            shapes: Vec::new(),
            outputs: Vec::new(),
            seconds: 0.0,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, serde_json::to_string_pretty(self)?)
    }
}
