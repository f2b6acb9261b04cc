use std::io::Write;

use serde::Serialize;

use super::geodesic::{GeodesicRecord, GeodesicStatus};
use crate::error::{GeometryError, Result};

fn io_error(e: impl std::fmt::Display) -> GeometryError {
    GeometryError::Manifest(format!("export failed: {e}"))
}

/// Writes the trajectory as CSV with columns `s, chart, x0.., v0..`.
pub fn write_trajectory_csv<W: Write>(record: &GeodesicRecord, out: W) -> Result<()> {
    let n = record.samples.first().map_or(0, |s| s.x.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["s".to_string(), "chart".to_string()];
    header.extend((0..n).map(|i| format!("x{i}")));
    header.extend((0..n).map(|i| format!("v{i}")));
    w.write_record(&header).map_err(io_error)?;
    for smp in &record.samples {
        let mut row = vec![format!("{:e}", smp.s), smp.chart.to_string()];
        row.extend(smp.x.iter().chain(&smp.v).map(|v| format!("{v:e}")));
        w.write_record(&row).map_err(io_error)?;
    }
    w.flush().map_err(io_error)
}

#[derive(Clone, Debug, Serialize)]
pub struct GeodesicSummary {
    pub status: GeodesicStatus,
    pub escape_parameter: Option<f64>,
    pub final_parameter: f64,
    pub max_residual: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub transitions_applied: usize,
}

impl From<&GeodesicRecord> for GeodesicSummary {
    fn from(r: &GeodesicRecord) -> Self {
        Self {
            status: r.status.clone(),
            escape_parameter: match r.status {
                GeodesicStatus::Escaped { s_star } => Some(s_star),
                _ => None,
            },
            final_parameter: r.final_sample().s,
            max_residual: r.max_residual,
            accepted_steps: r.accepted_steps,
            rejected_steps: r.rejected_steps,
            transitions_applied: r.transitions_applied,
        }
    }
}
