//! Matrix files with JSON sidecars.

use std::path::{Path, PathBuf};

use cbmor_core::geometry::Mesh;
use cbmor_core::io::{matrix_from_text, matrix_to_text};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Semantic labels of a persisted matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixMeta {
    /// `snapshots`, `basis` or `states`.
    pub kind: String,
    pub rows: usize,
    pub cols: usize,
    pub substructure: Option<usize>,
    pub mode_count: Option<usize>,
    #[serde(default)]
    pub singular_values: Vec<f64>,
    /// SHA-256 of the substructure mesh text the rows refer to.
    pub layout_hash: Option<String>,
}

/// SHA-256 of the mesh with coordinates taken relative to its bounding box corner and
/// rounded to `1e-9` of the diagonal, so translated copies of a mesh share the hash.
pub fn layout_hash(mesh: &Mesh) -> String {
    let (lo, hi) = mesh.bounding_box();
    let diag = (hi[0] - lo[0]).hypot(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
    let mut local = mesh.clone();
    for p in &mut local.nodes {
        for c in 0..2 {
            p[c] = ((p[c] - lo[c]) / diag * 1e9).round();
        }
    }
    Sha256::digest(local.to_text().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        }
    }
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>, meta: &MatrixMeta) -> CliResult<()> {
    write_text(path, &matrix_to_text(m))?;
    write_json(&meta_path(path), meta)
}

/// Reads a matrix and its sidecar, when there is one.
pub fn read_matrix(path: &Path) -> CliResult<(DMatrix<f64>, Option<MatrixMeta>)> {
    let m = matrix_from_text(&read_text(path)?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mp = meta_path(path);
    let meta = if mp.is_file() { Some(read_json(&mp)?) } else { None };
    Ok((m, meta))
}
