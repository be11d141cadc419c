//! Every pipeline command on the small gradient-check configuration, then
//! a replay of the training manifest into a fresh directory.

use std::path::Path;

use mucor::experiment::{replay, run_pipeline, ExperimentConfig};

fn main() -> mucor::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/gradcheck_toy.json");
    let cfg = ExperimentConfig::load(&path)?;
    let tmp = tempfile::tempdir().expect("temporary directory");
    let dir = tmp.path();
    let out = dir.join("run");
    for m in run_pipeline(&cfg, &out)? {
        println!("{:<16} {:>3} outputs  {}", m.command, m.outputs.len(), m.summary);
    }
    let r = replay(&out.join("manifests/train.json"), &dir.join("replay"))?;
    println!("replayed {}: {} files identical", r.command, r.compared);
    Ok(())
}
