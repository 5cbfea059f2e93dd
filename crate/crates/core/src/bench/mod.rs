//! Error-curve benchmark on random Lasso and Group Lasso instances.

mod curves;
mod instance;

pub use curves::{
    identification_index, run_curves, traced_solve, CurveRun, ErrorCurves, MethodSummary, COLUMNS,
};
pub use instance::{
    generate_group_lasso, generate_lasso, generate_with, sample_data, DirectionKind,
    ExperimentSpec, Instance, ProblemKind, LAMBDA_ATTEMPTS, LAMBDA_GROWTH, ND_MARGIN,
    REFERENCE_TOL, STREAM_DIRECTION, STREAM_MATRIX, STREAM_TARGET,
};

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rate::{fit_linear_rate, RateReport};

/// Generates the instance of `spec` and runs all ten curves.
pub fn run_error_curves(spec: &ExperimentSpec) -> Result<CurveRun> {
    spec.validate()?;
    match spec.problem {
        ProblemKind::Lasso => run_curves(&generate_lasso(spec)?, spec.iters, spec.q),
        ProblemKind::GroupLasso => run_curves(&generate_group_lasso(spec)?, spec.iters, spec.q),
    }
}

/// CSV header line.
pub fn csv_header() -> String {
    std::iter::once("iter")
        .chain(COLUMNS)
        .collect::<Vec<_>>()
        .join(",")
}

/// Writes the curves as CSV: one row per iteration, 17 significant digits.
pub fn emit_csv(curves: &ErrorCurves, path: &Path) -> Result<()> {
    curves.validate()?;
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = std::io::BufWriter::new(File::create(path).map_err(io)?);
    write_csv(curves, &mut out).map_err(io)?;
    out.flush().map_err(io)
}

/// Writes the CSV to any sink.
pub fn write_csv(curves: &ErrorCurves, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{}", csv_header())?;
    for k in 0..curves.len() {
        write!(out, "{k}")?;
        for c in &curves.columns {
            write!(out, ",{:.16e}", c[k])?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads curves written by [`emit_csv`].
pub fn read_csv(path: &Path) -> Result<ErrorCurves> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let parse = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = rdr.headers().map_err(csv_err)?.clone();
    let expected: Vec<&str> = std::iter::once("iter").chain(COLUMNS).collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(parse(format!("unexpected header {:?}", header)));
    }
    let mut columns: [Vec<f64>; 10] = Default::default();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let iter: usize = rec[0]
            .parse()
            .map_err(|e| parse(format!("row {row}: bad iteration: {e}")))?;
        if iter != row {
            return Err(parse(format!("row {row}: iteration {iter} out of order")));
        }
        for (i, col) in columns.iter_mut().enumerate() {
            let v: f64 = rec[i + 1]
                .parse()
                .map_err(|e| parse(format!("row {row}, column {}: {e}", COLUMNS[i])))?;
            col.push(v);
        }
    }
    let curves = ErrorCurves { columns };
    curves.validate().map_err(|e| parse(e.to_string()))?;
    Ok(curves)
}

/// Rate fit of every column with the burn-in heuristic of
/// [`fit_linear_rate`].
pub fn rate_table(curves: &ErrorCurves, floor: f64) -> Vec<(&'static str, Result<RateReport>)> {
    COLUMNS
        .iter()
        .zip(&curves.columns)
        .map(|(name, c)| (*name, fit_linear_rate(c, floor)))
        .collect()
}
