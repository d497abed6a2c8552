//! Result emission: per-frame metrics as CSV, field snapshots as JSON and
//! as grayscale sharpness heatmaps (plain PGM).
//!
//! Floats are printed in Rust's shortest round-trip form, so re-running the
//! same configuration and seed reproduces every output byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::estimation::sharpness;
use crate::geometry::SpatialLattice;
use crate::prediction::ProbabilityField;

use super::RunRecord;

/// Render the per-frame metrics table.
pub fn metrics_csv(record: &RunRecord) -> String {
    let mut out = String::from("frame,sharpness,confidence,peak_x,peak_y,mean_vx,mean_vy\n");
    for f in &record.frames {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            f.frame,
            f.sharpness,
            f.confidence,
            f.peak_pos[0],
            f.peak_pos[1],
            f.mean_velocity[0],
            f.mean_velocity[1]
        );
    }
    out
}

/// Render one snapshot as JSON: nested node -> channel activity arrays plus
/// enough geometry to interpret them.
pub fn snapshot_json(frame: usize, field: &ProbabilityField, lattice: &SpatialLattice) -> String {
    let alpha: Vec<serde_json::Value> = (0..field.n_nodes())
        .map(|node| serde_json::Value::from(field.node(node).to_vec()))
        .collect();
    let doc = serde_json::json!({
        "frame": frame,
        "time": field.time(),
        "width": lattice.width(),
        "height": lattice.height(),
        "n_channels": field.n_channels(),
        "alpha": alpha,
    });
    format!("{doc}\n")
}

/// Render a per-node sharpness heatmap as a plain (ASCII) PGM image. Rows
/// are written top-down, so lattice row 0 lands at the bottom of the image.
pub fn sharpness_pgm(field: &ProbabilityField, lattice: &SpatialLattice) -> Result<String> {
    let max = (field.n_channels() as f64).ln();
    let mut out = format!("P2\n{} {}\n255\n", lattice.width(), lattice.height());
    for row in (0..lattice.height()).rev() {
        let mut line = String::new();
        for col in 0..lattice.width() {
            let s = sharpness(field.node(lattice.index(col, row)))?;
            let pixel = ((s / max) * 255.0).round().clamp(0.0, 255.0) as u8;
            if !line.is_empty() {
                line.push(' ');
            }
            let _ = write!(line, "{pixel}");
        }
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

/// Write a run's outputs under a directory: `metrics.csv`, plus
/// `snapshot_<k>.json` and `sharpness_<k>.pgm` for each recorded snapshot.
/// Returns the paths written.
pub fn emit(record: &RunRecord, lattice: &SpatialLattice, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let csv_path = dir.join("metrics.csv");
    std::fs::write(&csv_path, metrics_csv(record)).map_err(|e| Error::io(&csv_path, e))?;
    written.push(csv_path);
    for (frame, field) in &record.snapshots {
        let json_path = dir.join(format!("snapshot_{frame}.json"));
        std::fs::write(&json_path, snapshot_json(*frame, field, lattice))
            .map_err(|e| Error::io(&json_path, e))?;
        written.push(json_path);
        let pgm_path = dir.join(format!("sharpness_{frame}.pgm"));
        std::fs::write(&pgm_path, sharpness_pgm(field, lattice)?)
            .map_err(|e| Error::io(&pgm_path, e))?;
        written.push(pgm_path);
    }
    Ok(written)
}
