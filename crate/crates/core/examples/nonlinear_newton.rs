//! Newton iterations for the exponential permeability k1 * exp(beta u1).

use mucor::fem::{point_load, DualModel, Nonlinearity, Schedule, SolverSettings};
use mucor::field::Tensor2;
use mucor::grid::StructuredGrid;

fn main() -> mucor::Result<()> {
    let grid = StructuredGrid::new(10, 10)?;
    let load = Schedule::Constant(point_load(&grid, 0.5, 0.5, 100.0)?);
    let kappa1: Vec<Tensor2> = grid
        .node_points()
        .iter()
        .map(|p| if (p[1] - 0.5).abs() < 0.1 { Tensor2::diag(500.0, 5.0) } else { Tensor2::isotropic(1.0) })
        .collect();
    let k2 = Schedule::Constant(vec![Tensor2::isotropic(0.1); grid.node_count()]);
    let sigma = Schedule::Constant(vec![5.0; grid.node_count()]);

    for beta in [0.0, 0.01, 0.5] {
        let settings = SolverSettings::linear(0.001, 10)?.with_nonlinearity(Nonlinearity::Exponential { beta });
        let sol = DualModel::new(&grid, settings, kappa1.clone(), &load, None)?.solve(&k2, &sigma)?;
        let last: Vec<String> = sol.newton_residuals.last().unwrap().iter().map(|r| format!("{r:.1e}")).collect();
        println!("beta = {beta:4}: iterations per step {:?}", sol.newton_iterations);
        println!("             last step residuals [{}]", last.join(", "));
    }
    Ok(())
}
