//! Sparse matrices and the linear solvers behind every implicit step.

pub mod banded;
pub mod sparse;

pub use banded::BandedLu;
pub use sparse::{bicgstab, conjugate_gradient, KrylovStats, SparseMatrix};

use serde::{Deserialize, Serialize};

use crate::Result;

/// How implicit systems are solved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SolverKind {
    /// Banded LU with partial pivoting.
    #[default]
    Direct,
    /// Jacobi-preconditioned BiCGStab; `max_iter` of 0 means `10 * n`.
    Bicgstab { tol: f64, max_iter: usize },
}

/// A system matrix prepared for repeated solves with `A` and `A^T`.
#[derive(Debug, Clone)]
pub enum PreparedSystem {
    Direct(BandedLu),
    Iterative { matrix: SparseMatrix, transpose: SparseMatrix, tol: f64, max_iter: usize },
}

impl PreparedSystem {
    pub fn new(matrix: SparseMatrix, kind: SolverKind) -> Result<Self> {
        Ok(match kind {
            SolverKind::Direct => PreparedSystem::Direct(BandedLu::factor(&matrix)?),
            SolverKind::Bicgstab { tol, max_iter } => {
                let max_iter = if max_iter == 0 { 10 * matrix.dim() } else { max_iter };
                let transpose = matrix.transpose();
                PreparedSystem::Iterative { matrix, transpose, tol, max_iter }
            }
        })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            PreparedSystem::Direct(lu) => Ok(lu.solve(b)),
            PreparedSystem::Iterative { matrix, tol, max_iter, .. } => Ok(bicgstab(matrix, b, *tol, *max_iter)?.0),
        }
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            PreparedSystem::Direct(lu) => Ok(lu.solve_transpose(b)),
            PreparedSystem::Iterative { transpose, tol, max_iter, .. } => {
                Ok(bicgstab(transpose, b, *tol, *max_iter)?.0)
            }
        }
    }
}
