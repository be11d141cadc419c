//! Numerical homogenization by local periodic cell problems.
//!
//! Each coarse block is treated as one period of a periodic medium. On the
//! block's fine cells (rescaled to the unit cell) we solve, for `j = 1, 2`,
//!
//! ```text
//! find N_j periodic, mean zero:  integral k (grad N_j + e_j) . grad v = 0  for all periodic v
//! ```
//!
//! with Q1 elements, and set `k*_ij = mean of k (delta_ij + d_i N_j)`.

use rayon::prelude::*;

use crate::fem::{average::kernel_to_nodes, Q1Element};
use crate::field::{ScalarCellField, Tensor2, TensorCellField};
use crate::grid::StructuredGrid;
use crate::linalg::{conjugate_gradient, SparseMatrix};
use crate::{Error, Result};

/// Relative residual for the cell-problem CG solves.
pub const CELL_TOLERANCE: f64 = 1e-12;

/// Correctors of one block on its periodic `n x m` node lattice
/// (node `(i, j)` at index `j * n + i`).
#[derive(Debug, Clone, PartialEq)]
pub struct CellProblemSolution {
    pub block: usize,
    pub nx: usize,
    pub ny: usize,
    pub correctors: [Vec<f64>; 2],
    pub iterations: [usize; 2],
}

/// Permeability of one block: `nx x ny` cells, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockKappa {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl BlockKappa {
    pub fn new(nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!("cell problems need at least 2x2 cells, got {nx}x{ny}")));
        }
        if values.len() != nx * ny {
            return Err(Error::Dimension(format!("{} values for {nx}x{ny} cells", values.len())));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidInput(format!("block permeability must be positive, cell {i} is {}", values[i])));
        }
        Ok(Self { nx, ny, values })
    }

    /// The fine cells of `block` on a refined grid.
    pub fn from_fine(fine: &StructuredGrid, kappa: &ScalarCellField, block: usize) -> Result<Self> {
        let r = fine.refinement().ok_or_else(|| Error::InvalidGrid("fine grid has no coarse parent".into()))?;
        let values = fine.block_cells(block)?.into_iter().map(|c| kappa.values()[c]).collect();
        Self::new(r.factor, r.factor, values)
    }

    fn periodic_nodes(&self, cell: usize) -> [usize; 4] {
        let (i, j) = (cell % self.nx, cell / self.nx);
        let (i1, j1) = ((i + 1) % self.nx, (j + 1) % self.ny);
        [j * self.nx + i, j * self.nx + i1, j1 * self.nx + i1, j1 * self.nx + i]
    }

    fn element(&self) -> Q1Element {
        Q1Element::new(1.0 / self.nx as f64, 1.0 / self.ny as f64)
    }
}

fn project_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

pub fn solve_cell_problem(block: usize, kappa: &BlockKappa) -> Result<CellProblemSolution> {
    let el = kappa.element();
    let n = kappa.nx * kappa.ny;
    let mut t = Vec::with_capacity(16 * n);
    let mut rhs = [vec![0.0; n], vec![0.0; n]];
    for c in 0..n {
        let nodes = kappa.periodic_nodes(c);
        let k = kappa.values[c];
        for q in 0..4 {
            for a in 0..4 {
                let ga = el.grad[q][a];
                for b in 0..4 {
                    let gb = el.grad[q][b];
                    t.push((nodes[a], nodes[b], el.w * k * (ga[0] * gb[0] + ga[1] * gb[1])));
                }
                rhs[0][nodes[a]] -= el.w * k * ga[0];
                rhs[1][nodes[a]] -= el.w * k * ga[1];
            }
        }
    }
    let a = SparseMatrix::from_triplets(n, t);
    let mut correctors = [Vec::new(), Vec::new()];
    let mut iterations = [0; 2];
    for j in 0..2 {
        let (mut x, stats) = conjugate_gradient(&a, &rhs[j], CELL_TOLERANCE, 20 * n + 100, Some(&project_mean))?;
        project_mean(&mut x);
        correctors[j] = x;
        iterations[j] = stats.iterations;
    }
    Ok(CellProblemSolution { block, nx: kappa.nx, ny: kappa.ny, correctors, iterations })
}

/// `k*_ij = mean of k (delta_ij + d_i N_j)` over the unit cell.
pub fn effective_tensor(kappa: &BlockKappa, sol: &CellProblemSolution) -> Result<Tensor2> {
    if (sol.nx, sol.ny) != (kappa.nx, kappa.ny) {
        return Err(Error::Dimension("correctors and block permeability differ in shape".into()));
    }
    let el = kappa.element();
    let mut k = [[0.0; 2]; 2];
    for c in 0..kappa.nx * kappa.ny {
        let nodes = kappa.periodic_nodes(c);
        let kc = kappa.values[c];
        for j in 0..2 {
            let local = [0, 1, 2, 3].map(|a| sol.correctors[j][nodes[a]]);
            for q in 0..4 {
                let g = el.gradient(q, &local);
                for i in 0..2 {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    k[i][j] += el.w * kc * (delta + g[i]);
                }
            }
        }
    }
    // the discrete tensor is symmetric up to solver tolerance
    let t = Tensor2::new(k[0][0], 0.5 * (k[0][1] + k[1][0]), k[1][1]);
    if !t.is_finite() || !t.is_spd() {
        return Err(Error::NotSpd(format!("effective tensor {t:?}")));
    }
    Ok(t)
}

/// Effective tensor of a single block.
pub fn homogenize_block(block: usize, kappa: &BlockKappa) -> Result<Tensor2> {
    let sol = solve_cell_problem(block, kappa)?;
    effective_tensor(kappa, &sol)
}

/// Per-block effective tensors of a fine field over its coarse parent grid.
/// Blocks are solved in parallel and merged in block order.
pub fn upscale(fine: &StructuredGrid, kappa: &ScalarCellField, coarse: &StructuredGrid) -> Result<TensorCellField> {
    if !fine.refines(coarse) {
        return Err(Error::InvalidGrid("fine grid does not refine the coarse grid".into()));
    }
    if !kappa.matches(fine) {
        return Err(Error::Dimension("permeability does not match the fine grid".into()));
    }
    let r = fine.refinement().expect("checked").factor;
    let tensors: Vec<Tensor2> = (0..coarse.cell_count())
        .into_par_iter()
        .map(|b| {
            let block = fine.block_cells(b).map(|cells| cells.iter().map(|&c| kappa.values()[c]).collect::<Vec<_>>());
            let run = || -> Result<Tensor2> {
                let values = block?;
                if r == 1 {
                    // a single cell is already homogeneous
                    return Ok(Tensor2::isotropic(values[0]));
                }
                homogenize_block(b, &BlockKappa::new(r, r, values)?)
            };
            run().map_err(|e| Error::Block { block: b, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    TensorCellField::new(coarse, tensors)
}

/// Nodal tensors by the fixed 2x2 averaging kernel; edge and corner nodes
/// average the cells that exist.
pub fn interpolate_to_nodes(grid: &StructuredGrid, field: &TensorCellField) -> Result<Vec<Tensor2>> {
    if !field.matches(grid) {
        return Err(Error::Dimension("tensor field does not match the grid".into()));
    }
    let comp = |f: fn(&Tensor2) -> f64| {
        let cells: Vec<f64> = field.values().iter().map(f).collect();
        kernel_to_nodes(grid, &cells, false)
    };
    let (a, b, c) = (comp(|t| t.k11), comp(|t| t.k12), comp(|t| t.k22));
    Ok((0..grid.node_count()).map(|n| Tensor2::new(a[n], b[n], c[n])).collect())
}
