//! File formats. Layouts are described in `docs/formats.md`.

pub mod boxes;
pub mod lp;
pub mod mesh;
pub mod misc;
pub mod voxel;

pub use boxes::{parse_primitives, parse_proposals, write_primitives, write_proposals, write_wireframe};
pub use lp::{parse_lp, write_lp};
pub use mesh::{load_mesh, parse_obj, parse_off, write_obj, write_off};
pub use misc::{
    parse_context, parse_csv, parse_depth_pgm, parse_features, write_context, write_csv, write_depth_pgm,
    write_features, AblationRow, MetricsRow,
};
pub use voxel::{parse_voxels, write_voxels};

use std::path::Path;

use crate::error::{FormatError, Result};

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| FormatError::io(path, e))
}
