use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use mucor::experiment::{replay, run_command, Command, ExperimentConfig, Manifest};
use mucor::opt::GradMode;
use mucor::{Error, Result};

#[derive(Parser)]
#[command(name = "mucor", version, about = "Learned two-continuum correction of homogenized flow models")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overrides the config.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Seed, overrides every seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// discrete, continuous or fd.
    #[arg(long)]
    grad_mode: Option<GradMode>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate the fine permeability field.
    GenField(Common),
    /// Fine-scale reference solve averaged onto the coarse grid.
    Reference(Common),
    /// Effective tensors from cell problems.
    Homogenize(Common),
    /// Coarse forward solve, homogenized or with the trained correction.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        corrected: bool,
    },
    /// Train the correction networks.
    Train(Common),
    /// Relative errors against the reference.
    Eval(Common),
    /// Adjoint gradient against finite differences.
    Gradcheck(Common),
    /// Every stage from gen-field to eval.
    Pipeline(Common),
    /// Re-run a recorded command and compare output hashes.
    Replay {
        manifest: PathBuf,
        /// Where to re-run; defaults to a `replay` directory next to the original.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn config(c: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(&c.config)?;
    cfg.apply_overrides(c.seed, c.grad_mode)?;
    let out = c.output.clone().unwrap_or_else(|| cfg.output.dir.clone());
    Ok((cfg, out))
}

fn summary(m: &Manifest) -> serde_json::Value {
    json!({"command": m.command, "summary": m.summary, "wall_time_s": m.wall_time_s})
}

fn single(command: Command, c: &Common) -> Result<serde_json::Value> {
    let (cfg, out) = config(c)?;
    Ok(summary(&run_command(command, &cfg, &out)?))
}

fn run(cli: Cli) -> Result<serde_json::Value> {
    match cli.command {
        Cmd::GenField(c) => single(Command::GenField, &c),
        Cmd::Reference(c) => single(Command::Reference, &c),
        Cmd::Homogenize(c) => single(Command::Homogenize, &c),
        Cmd::Solve { common, corrected } => single(Command::Solve { corrected }, &common),
        Cmd::Train(c) => single(Command::Train, &c),
        Cmd::Eval(c) => single(Command::Eval, &c),
        Cmd::Gradcheck(c) => {
            let v = single(Command::Gradcheck, &c)?;
            eprintln!("max rel err {:.3e} <= {:.0e}", v["summary"]["max_rel_err"].as_f64().unwrap_or(f64::NAN), v["summary"]["tolerance"].as_f64().unwrap_or(f64::NAN));
            Ok(v)
        }
        Cmd::Pipeline(c) => {
            let (cfg, out) = config(&c)?;
            let mut all = Vec::new();
            for cmd in Command::pipeline() {
                let m = run_command(cmd, &cfg, &out)?;
                eprintln!("{} done in {:.1}s", m.command, m.wall_time_s);
                all.push(summary(&m));
            }
            Ok(serde_json::Value::Array(all))
        }
        Cmd::Replay { manifest, output } => {
            let target = output.unwrap_or_else(|| Manifest::output_dir(&manifest).join("replay"));
            let r = replay(&manifest, &target)?;
            Ok(json!({"command": r.command, "output_dir": r.output_dir, "files_compared": r.compared, "identical": true}))
        }
    }
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("MUCOR_THREADS") {
        let n: usize = v.parse().map_err(|_| Error::Config(format!("MUCOR_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(Error::Config("MUCOR_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match init_threads().and_then(|_| run(cli)) {
        Ok(v) => {
            println!("{v}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", json!({"error": e.kind(), "message": e.to_string()}));
            ExitCode::FAILURE
        }
    }
}
