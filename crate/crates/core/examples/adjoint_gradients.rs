//! Discrete adjoint, continuous adjoint and finite-difference gradients on
//! the 3x3 gradient-check configuration.

use std::path::Path;

use mucor::experiment::{ExperimentConfig, Prepared};
use mucor::opt::{gradient_fd, max_relative_error, CorrectionNets, GradMode};

fn main() -> mucor::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/gradcheck_toy.json");
    let cfg = ExperimentConfig::load(&path)?;
    let prep = Prepared::new(&cfg)?;
    let problem = prep.problem(&cfg)?;
    let (ks, ss) = cfg.net_specs();
    let nets = CorrectionNets::new(&ks, &ss)?;
    let data = &prep.reference;

    let (loss, discrete) = problem.loss_and_gradient(&nets, data, GradMode::Discrete, cfg.training.fd_step)?;
    let (_, continuous) = problem.loss_and_gradient(&nets, data, GradMode::Continuous, cfg.training.fd_step)?;
    let fd = gradient_fd(
        |p| {
            let mut n = nets.clone();
            n.set_params(p)?;
            problem.loss(&n, data)
        },
        &nets.params(),
        cfg.training.fd_step,
    )?;
    println!("loss {loss:.6}%, {} parameters", discrete.len());
    println!("{:>4} {:>14} {:>14} {:>14}", "k", "discrete", "continuous", "fd");
    for k in (0..discrete.len()).step_by(4) {
        println!("{k:>4} {:>14.6e} {:>14.6e} {:>14.6e}", discrete[k], continuous[k], fd[k]);
    }
    println!("max rel err discrete vs fd:   {:.2e}", max_relative_error(&discrete, &fd, 1e-12));
    println!("max rel err continuous vs fd: {:.2e}", max_relative_error(&continuous, &fd, 1e-12));
    Ok(())
}
