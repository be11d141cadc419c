//! Forward solve of the two-continuum model with fixed coefficients.
//! Shows how the transfer coefficient moves mass into the second continuum.

use mucor::fem::{assemble_mass, load_from_fn, DualModel, Schedule, SolverSettings};
use mucor::field::Tensor2;
use mucor::grid::StructuredGrid;

fn main() -> mucor::Result<()> {
    let grid = StructuredGrid::new(10, 10)?;
    let settings = SolverSettings::linear(0.1, 10)?;
    let kappa1 = vec![Tensor2::diag(4.0, 1.0); grid.node_count()];
    let load = Schedule::Constant(load_from_fn(&grid, |x, y| {
        10.0 * (-((x - 0.5).powi(2) + (y - 0.5).powi(2)) / 0.02).exp()
    }));
    let model = DualModel::new(&grid, settings, kappa1, &load, None)?;
    let mass = assemble_mass(&grid);
    let total = |u: &[f64]| mass.matvec(u).iter().sum::<f64>();

    for sigma in [0.0, 1.0, 10.0] {
        let k2 = Schedule::Constant(vec![Tensor2::isotropic(0.5); grid.node_count()]);
        let s = Schedule::Constant(vec![sigma; grid.node_count()]);
        let traj = model.solve(&k2, &s)?.trajectory;
        let n = traj.steps();
        println!(
            "sigma = {sigma:5.1}: integral u1 = {:.5}, integral u2 = {:.5} at t = {:.1}",
            total(traj.u1(n)),
            total(traj.u2(n)),
            traj.final_time()
        );
    }
    Ok(())
}
