use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::io::to_canonical_json;

use super::runner::{CurvePoint, MseRow, PhaseCell, TableRow};
use super::spec::ExperimentSpec;

fn write_rows<W: Write, R: Serialize>(writer: W, rows: &[R], header: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_phase_csv<W: Write>(writer: W, cells: &[PhaseCell]) -> Result<()> {
    write_rows(writer, cells, &["gamma", "beta", "n", "m", "k", "s", "trials", "success_rate"])
}

pub fn write_curve_csv<W: Write>(writer: W, curve: &[CurvePoint]) -> Result<()> {
    write_rows(writer, curve, &["gamma", "beta_star"])
}

pub fn write_table_csv<W: Write>(writer: W, rows: &[TableRow]) -> Result<()> {
    write_rows(writer, rows, &["method", "s", "per_sensor_pct", "whole_network_pct"])
}

pub fn write_mse_csv<W: Write>(writer: W, rows: &[MseRow]) -> Result<()> {
    write_rows(writer, rows, &["method", "s", "mse", "trials"])
}

#[derive(Serialize)]
struct Manifest<'a> {
    spec: &'a ExperimentSpec,
    seed: u64,
    code_version: &'static str,
}

/// JSON record of what produced an experiment's CSV: the spec, its seed, and the
/// library version.
pub fn manifest_json(spec: &ExperimentSpec) -> Result<String> {
    to_canonical_json(&Manifest {
        spec,
        seed: spec.seed,
        code_version: env!("CARGO_PKG_VERSION"),
    })
}
