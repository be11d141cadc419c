//! Per-step error tables.

use std::path::Path;

use super::data::TrustedData;
use super::loss::per_step_errors;
use crate::io::write_table;
use crate::linalg::SparseMatrix;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    pub times: Vec<f64>,
    pub errors: Vec<f64>,
}

impl ErrorTable {
    pub fn final_error(&self) -> f64 {
        *self.errors.last().expect("non-empty table")
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<Vec<f64>> = self.times.iter().zip(&self.errors).map(|(&t, &e)| vec![t, e]).collect();
        write_table(path, &["t", "error_percent"], &rows)
    }
}

/// Relative L2 error (percent) of `u1` against `data` at each step.
pub fn evaluate(mass: &SparseMatrix, u1: &[Vec<f64>], data: &TrustedData) -> Result<ErrorTable> {
    let errors = per_step_errors(mass, u1, data)?;
    let times = (1..=errors.len()).map(|n| n as f64 * data.tau()).collect();
    Ok(ErrorTable { times, errors })
}
