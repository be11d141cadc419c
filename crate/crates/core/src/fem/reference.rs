//! Single-continuum backward Euler, used for the fine-scale reference and
//! for the homogenization-only baseline.

use super::assembly::{assemble_exponential, assemble_mass, restrict_interior, to_full, to_interior};
use super::{Nonlinearity, Schedule, SolverSettings, TensorSource};
use crate::field::{ScalarCellField, Tensor2};
use crate::grid::StructuredGrid;
use crate::linalg::sparse::norm2;
use crate::linalg::{PreparedSystem, SparseMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct SingleSolution {
    /// Full nodal vectors at steps `1..=N`.
    pub steps: Vec<Vec<f64>>,
    pub newton_iterations: Vec<usize>,
}

fn check_source(grid: &StructuredGrid, src: TensorSource<'_>) -> Result<()> {
    let (vals, expected, what) = match src {
        TensorSource::Nodal(v) => (v, grid.node_count(), "nodal"),
        TensorSource::Cells(v) => (v, grid.cell_count(), "cell"),
    };
    if vals.len() != expected {
        return Err(Error::Dimension(format!("{} {what} tensors, expected {expected}", vals.len())));
    }
    if let Some(i) = vals.iter().position(|k| !k.is_finite() || !k.is_spd()) {
        return Err(Error::NotSpd(format!("{what} tensor {i}: {:?}", vals[i])));
    }
    Ok(())
}

/// Solve `M du/dt + A(u) u = F` from zero with zero Dirichlet data.
pub fn solve_single_continuum(
    grid: &StructuredGrid,
    kappa: TensorSource<'_>,
    load: &Schedule<Vec<f64>>,
    settings: SolverSettings,
) -> Result<SingleSolution> {
    check_source(grid, kappa)?;
    let steps = settings.stepping.steps;
    load.check_len(steps, "load")?;
    let tau = settings.stepping.tau;
    let mass = restrict_interior(&assemble_mass(grid), grid);
    let n_int = mass.dim();
    let beta = match settings.nonlinearity {
        Nonlinearity::Linear => 0.0,
        Nonlinearity::Exponential { beta } => beta,
    };
    let operator = |u: &[f64]| -> (SparseMatrix, SparseMatrix) {
        let (a, j) = assemble_exponential(grid, kappa, beta, &to_full(grid, u));
        let shift = |m: SparseMatrix| {
            let mut t: Vec<_> = mass.triplets().map(|(i, j, v)| (i, j, v / tau)).collect();
            t.extend(restrict_interior(&m, grid).triplets());
            SparseMatrix::from_triplets(n_int, t)
        };
        (shift(a), shift(j))
    };
    let mut u = vec![0.0; n_int];
    let mut out = Vec::with_capacity(steps);
    let mut iterations = Vec::new();
    let mut linear_system: Option<PreparedSystem> = None;
    for n in 1..=steps {
        let mut run = || -> Result<usize> {
            let f = load.at(n);
            if f.len() != grid.node_count() {
                return Err(Error::Dimension(format!("load has {} entries", f.len())));
            }
            let mu = mass.matvec(&u);
            let fi = to_interior(grid, f);
            let b: Vec<f64> = (0..n_int).map(|p| mu[p] / tau + fi[p]).collect();
            if settings.nonlinearity.is_linear() {
                if linear_system.is_none() {
                    linear_system = Some(PreparedSystem::new(operator(&u).0, settings.linear)?);
                }
                u = linear_system.as_ref().unwrap().solve(&b)?;
                if u.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("reference solution".into()));
                }
                return Ok(0);
            }
            let mut history = Vec::new();
            for it in 0..=settings.newton.max_iter {
                let (a, j) = operator(&u);
                let au = a.matvec(&u);
                let r: Vec<f64> = (0..n_int).map(|p| au[p] - b[p]).collect();
                let rn = norm2(&r);
                let abs_au = a.abs_matvec(&u);
                let scale = norm2(&abs_au.iter().zip(&b).map(|(x, y)| x + y.abs()).collect::<Vec<_>>());
                history.push(rn);
                if !rn.is_finite() {
                    return Err(Error::NonFinite(format!("newton residual at iteration {it}")));
                }
                if settings.newton.converged(rn, scale) {
                    return Ok(it);
                }
                if it == settings.newton.max_iter {
                    break;
                }
                let neg: Vec<f64> = r.iter().map(|v| -v).collect();
                let d = PreparedSystem::new(j, settings.linear)?.solve(&neg)?;
                for p in 0..n_int {
                    u[p] += d[p];
                }
            }
            Err(Error::Newton { iterations: settings.newton.max_iter, history })
        };
        let it = run().map_err(|e| e.at_step(n))?;
        if !settings.nonlinearity.is_linear() {
            iterations.push(it);
        }
        out.push(to_full(grid, &u));
    }
    Ok(SingleSolution { steps: out, newton_iterations: iterations })
}

/// Fine-grid reference with a cellwise scalar permeability.
pub fn solve_fine_reference(
    fine_grid: &StructuredGrid,
    fine_kappa: &ScalarCellField,
    load: &Schedule<Vec<f64>>,
    settings: SolverSettings,
) -> Result<SingleSolution> {
    if !fine_kappa.matches(fine_grid) {
        return Err(Error::Dimension("permeability does not match the fine grid".into()));
    }
    fine_kappa.ensure_positive()?;
    let tensors: Vec<Tensor2> = fine_kappa.values().iter().map(|&k| Tensor2::isotropic(k)).collect();
    solve_single_continuum(fine_grid, TensorSource::Cells(&tensors), load, settings)
}
