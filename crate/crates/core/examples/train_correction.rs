//! Short training run on the Example-1 setup with smaller networks, then
//! the per-step error table against homogenization alone.
//!
//! cargo run --release --example train_correction -- [epochs]

use std::path::Path;

use mucor::experiment::{ExperimentConfig, Prepared};
use mucor::fem::assemble_mass;
use mucor::opt::{evaluate, train, CorrectionNets};

fn main() -> mucor::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/example1_linear.json");
    let mut cfg = ExperimentConfig::load(&path)?;
    cfg.training.epochs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1000);
    cfg.networks.hidden = 32;
    cfg.networks.depth = 3;
    cfg.training.adam.lr = 1e-3;

    let prep = Prepared::new(&cfg)?;
    let problem = prep.problem(&cfg)?;
    let (ks, ss) = cfg.net_specs();
    let mut nets = CorrectionNets::new(&ks, &ss)?;
    let report = train(&problem, &mut nets, &prep.reference, &cfg.training, |epoch, loss, _| {
        if epoch % 200 == 0 {
            println!("epoch {epoch:>6} loss {loss:.5}");
        }
        Ok(())
    })?;
    println!("{} epochs, {} skipped", report.history.len(), report.skipped);

    let mass = assemble_mass(&prep.coarse);
    let hom = evaluate(&mass, &prep.homogenized(&cfg)?, &prep.reference)?;
    let cor = evaluate(&mass, problem.solve(&nets)?.trajectory.u1_steps(), &prep.reference)?;
    println!("{:>5} {:>14} {:>14}", "t", "homogenized %", "corrected %");
    for k in 0..hom.times.len() {
        println!("{:>5.2} {:>14.4} {:>14.4}", hom.times[k], hom.errors[k], cor.errors[k]);
    }
    Ok(())
}
