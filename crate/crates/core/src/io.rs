//! Canonical JSON encoding of problems and solver outputs.
//!
//! Reals are written with 17 significant digits (`{:.16e}`), which round-trips every
//! `f64` exactly and makes `save ∘ load ∘ save` byte-identical.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::model::{GroundTruth, OutlierModel, SensingProblem, SensorBlock, SolverOutput};
use crate::scalar::Real;

pub const SCHEMA_VERSION: u32 = 1;

/// JSON formatter that renders floats with 17 significant digits.
#[derive(Clone, Copy, Debug, Default)]
pub struct CanonicalFloatFormatter;

impl serde_json::ser::Formatter for CanonicalFloatFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Serializes any value with the canonical float formatting, followed by a newline.
pub fn to_canonical_json<S: Serialize + ?Sized>(value: &S) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, CanonicalFloatFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Validation(format!("serialization failed: {e}")))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

#[derive(Serialize, Deserialize)]
struct BlockDoc {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TruthDoc {
    x0: Vec<f64>,
    /// 0-based sensor indices.
    reliable_set: Vec<usize>,
    sigma: f64,
    outlier_model: OutlierModel,
}

#[derive(Serialize, Deserialize)]
struct ProblemDoc {
    #[serde(default)]
    schema_version: Option<u32>,
    n: usize,
    m: usize,
    k: usize,
    blocks: Vec<BlockDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    truth: Option<TruthDoc>,
}

#[derive(Serialize, Deserialize)]
struct OutputDoc {
    #[serde(default)]
    schema_version: Option<u32>,
    x_hat: Vec<f64>,
    #[serde(default)]
    u_hat: Option<Vec<Vec<f64>>>,
    residual_norms: Vec<f64>,
    cost_trace: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn to_f64s<T: Real>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}

fn from_f64s<T: Real>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::lit(x)).collect()
}

fn parse_error(input: &str, err: &serde_json::Error) -> Error {
    if err.is_data() {
        return Error::Validation(err.to_string());
    }
    let line_start: usize = input
        .split_inclusive('\n')
        .take(err.line().saturating_sub(1))
        .map(str::len)
        .sum();
    let offset = (line_start + err.column()).min(input.len());
    Error::Parse {
        offset,
        message: err.to_string(),
    }
}

fn check_version(v: Option<u32>) -> Result<()> {
    match v {
        Some(found) if found != SCHEMA_VERSION => Err(Error::SchemaVersion {
            found,
            expected: SCHEMA_VERSION,
        }),
        _ => Ok(()),
    }
}

/// Encodes a problem (and optionally its ground truth) as canonical JSON.
pub fn problem_to_json<T: Real>(problem: &SensingProblem<T>, truth: Option<&GroundTruth<T>>) -> Result<String> {
    let doc = ProblemDoc {
        schema_version: Some(SCHEMA_VERSION),
        n: problem.n(),
        m: problem.m(),
        k: problem.k(),
        blocks: problem
            .blocks()
            .iter()
            .map(|blk| BlockDoc {
                a: (0..blk.a.rows()).map(|i| to_f64s(blk.a.row(i))).collect(),
                b: to_f64s(&blk.b),
            })
            .collect(),
        truth: truth.map(|t| TruthDoc {
            x0: to_f64s(&t.x0),
            reliable_set: t.reliable_set.clone(),
            sigma: t.sigma.as_f64(),
            outlier_model: t.outlier_model,
        }),
    };
    to_canonical_json(&doc)
}

/// Decodes and validates a problem file.
pub fn problem_from_json<T: Real>(input: &str) -> Result<(SensingProblem<T>, Option<GroundTruth<T>>)> {
    let doc: ProblemDoc = serde_json::from_str(input).map_err(|e| parse_error(input, &e))?;
    check_version(doc.schema_version)?;
    if doc.k == 0 || doc.n == 0 || doc.m == 0 {
        return Err(Error::Validation(format!(
            "dimensions must be positive, got n={}, m={}, k={}",
            doc.n, doc.m, doc.k
        )));
    }
    if doc.blocks.len() != doc.k {
        return Err(Error::Validation(format!(
            "k={} but {} blocks are present",
            doc.k,
            doc.blocks.len()
        )));
    }
    let blocks = doc
        .blocks
        .iter()
        .enumerate()
        .map(|(i, blk)| {
            if blk.a.len() != doc.m || blk.b.len() != doc.m || blk.a.iter().any(|r| r.len() != doc.n) {
                return Err(Error::Validation(format!("block {i} does not have shape {}x{}", doc.m, doc.n)));
            }
            let rows: Vec<Vec<T>> = blk.a.iter().map(|r| from_f64s(r)).collect();
            SensorBlock::new(DenseMatrix::from_rows(&rows)?, from_f64s(&blk.b))
        })
        .collect::<Result<Vec<_>>>()?;
    let problem = SensingProblem::new(blocks)?;
    let truth = doc
        .truth
        .map(|t| {
            let truth = GroundTruth {
                x0: from_f64s(&t.x0),
                reliable_set: t.reliable_set,
                sigma: T::lit(t.sigma),
                outlier_model: t.outlier_model,
            };
            truth.validate(&problem).map(|_| truth)
        })
        .transpose()?;
    Ok((problem, truth))
}

pub fn output_to_json<T: Real>(output: &SolverOutput<T>) -> Result<String> {
    to_canonical_json(&OutputDoc {
        schema_version: Some(SCHEMA_VERSION),
        x_hat: to_f64s(&output.x_hat),
        u_hat: output.u_hat.as_ref().map(|u| u.iter().map(|ui| to_f64s(ui)).collect()),
        residual_norms: to_f64s(&output.residual_norms),
        cost_trace: to_f64s(&output.cost_trace),
        iterations: output.iterations,
        converged: output.converged,
    })
}

pub fn output_from_json<T: Real>(input: &str) -> Result<SolverOutput<T>> {
    let doc: OutputDoc = serde_json::from_str(input).map_err(|e| parse_error(input, &e))?;
    check_version(doc.schema_version)?;
    if doc.x_hat.iter().chain(&doc.residual_norms).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("solver output"));
    }
    Ok(SolverOutput {
        x_hat: from_f64s(&doc.x_hat),
        u_hat: doc.u_hat.map(|u| u.iter().map(|ui| from_f64s(ui)).collect()),
        residual_norms: from_f64s(&doc.residual_norms),
        cost_trace: from_f64s(&doc.cost_trace),
        iterations: doc.iterations,
        converged: doc.converged,
    })
}
