//! Averaging fine-grid solutions over coarse blocks.

use crate::grid::StructuredGrid;
use crate::{Error, Result};

fn check(fine: &StructuredGrid, values: &[f64], coarse: &StructuredGrid) -> Result<()> {
    if !fine.refines(coarse) {
        return Err(Error::InvalidGrid(format!(
            "{}x{} grid is not a refinement of {}x{}",
            fine.nx(),
            fine.ny(),
            coarse.nx(),
            coarse.ny()
        )));
    }
    if values.len() != fine.node_count() {
        return Err(Error::Dimension(format!("{} values for {} fine nodes", values.len(), fine.node_count())));
    }
    Ok(())
}

/// Area-weighted block means of a fine nodal (bilinear) field, one per
/// coarse cell. The integral of a bilinear function over a cell is the
/// cell area times its corner average.
pub fn block_means(fine: &StructuredGrid, values: &[f64], coarse: &StructuredGrid) -> Result<Vec<f64>> {
    check(fine, values, coarse)?;
    let mut sums = vec![0.0; coarse.cell_count()];
    for c in 0..fine.cell_count() {
        let nodes = fine.cell_nodes(c);
        let avg = 0.25 * nodes.iter().map(|&n| values[n]).sum::<f64>();
        sums[fine.block_of(c)?] += avg;
    }
    let r = fine.refinement().expect("checked").factor;
    let cells = (r * r) as f64;
    Ok(sums.into_iter().map(|s| s / cells).collect())
}

/// Block means sampled at coarse nodes with the 2x2 averaging kernel
/// (existing neighbours only), then zeroed on the Dirichlet boundary.
pub fn coarse_average(fine: &StructuredGrid, values: &[f64], coarse: &StructuredGrid) -> Result<Vec<f64>> {
    let means = block_means(fine, values, coarse)?;
    Ok(kernel_to_nodes(coarse, &means, true))
}

pub fn coarse_average_series(fine: &StructuredGrid, steps: &[Vec<f64>], coarse: &StructuredGrid) -> Result<Vec<Vec<f64>>> {
    steps.iter().map(|s| coarse_average(fine, s, coarse)).collect()
}

/// Average of the cells touching each node.
pub(crate) fn kernel_to_nodes(grid: &StructuredGrid, cells: &[f64], zero_boundary: bool) -> Vec<f64> {
    let mut sum = vec![0.0; grid.node_count()];
    let mut count = vec![0u8; grid.node_count()];
    for c in 0..grid.cell_count() {
        for n in grid.cell_nodes(c) {
            sum[n] += cells[c];
            count[n] += 1;
        }
    }
    let mut out: Vec<f64> = sum.iter().zip(&count).map(|(s, &k)| s / k as f64).collect();
    if zero_boundary {
        for &b in grid.boundary_nodes() {
            out[b] = 0.0;
        }
    }
    out
}
