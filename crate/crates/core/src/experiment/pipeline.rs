//! The experiment commands. Each reads its inputs from, and writes its
//! artifacts to, one output directory, then records a manifest.
//!
//! Layout of an output directory:
//!
//! ```text
//! field.csv            fine permeability            gen-field
//! reference/           coarse trusted data series   reference
//! kappa_star.csv       coarse effective tensors     homogenize
//! homogenized/         single-continuum solution    solve
//! nets/                trained networks             train
//! loss_history.csv     per-epoch loss               train
//! corrected/           two-continuum solution       solve --corrected
//! errors.csv           per-step relative errors     eval
//! gradcheck.json       gradient check report        gradcheck
//! manifests/<cmd>.json
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{load_vector, ExperimentConfig};
use super::manifest::{records, sha256_bytes, Manifest};
use crate::fem::{
    assemble_mass, coarse_average_series, solve_fine_reference, solve_single_continuum, DualModel, Schedule, TensorSource,
};
use crate::field::{generate_channel_field, ScalarCellField, Tensor2, TensorCellField};
use crate::grid::StructuredGrid;
use crate::homogenize::{interpolate_to_nodes, upscale};
use crate::io::{
    load_cell_field, load_dual_series, load_nodal_series, load_tensor_field, store_cell_field, store_dual_series,
    store_nodal_series, store_tensor_field, write_table,
};
use crate::neural::{load_checkpoint, save_checkpoint};
use crate::opt::{
    continuous_adjoint, evaluate, gradient_fd, max_relative_error, train, CorrectionNets, CorrectionProblem, GradMode,
    Provenance, TrustedData,
};
use crate::{Error, Result};

pub const FIELD_FILE: &str = "field.csv";
pub const REFERENCE_DIR: &str = "reference";
pub const KAPPA_STAR_FILE: &str = "kappa_star.csv";
pub const HOMOGENIZED_DIR: &str = "homogenized";
pub const CORRECTED_DIR: &str = "corrected";
pub const NETS_DIR: &str = "nets";
pub const KAPPA_NET_FILE: &str = "kappa_net.bin";
pub const SIGMA_NET_FILE: &str = "sigma_net.bin";
pub const LOSS_HISTORY_FILE: &str = "loss_history.csv";
pub const ERRORS_FILE: &str = "errors.csv";
pub const GRADCHECK_FILE: &str = "gradcheck.json";

/// Tolerance of the gradient check, components with `|g| > GRADCHECK_FLOOR`.
pub const GRADCHECK_TOLERANCE: f64 = 1e-5;
pub const GRADCHECK_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    GenField,
    Reference,
    Homogenize,
    Solve { corrected: bool },
    Train,
    Eval,
    Gradcheck,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenField => "gen-field",
            Command::Reference => "reference",
            Command::Homogenize => "homogenize",
            Command::Solve { corrected: false } => "solve",
            Command::Solve { corrected: true } => "solve-corrected",
            Command::Train => "train",
            Command::Eval => "eval",
            Command::Gradcheck => "gradcheck",
        }
    }

    /// The full pipeline in dependency order.
    pub fn pipeline() -> [Command; 7] {
        [
            Command::GenField,
            Command::Reference,
            Command::Homogenize,
            Command::Solve { corrected: false },
            Command::Train,
            Command::Solve { corrected: true },
            Command::Eval,
        ]
    }
}

struct Output {
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    summary: serde_json::Value,
}

/// Run one command and write its manifest.
pub fn run_command(command: Command, cfg: &ExperimentConfig, out: &Path) -> Result<Manifest> {
    cfg.validate()?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let start = Instant::now();
    let o = match command {
        Command::GenField => cmd_gen_field(cfg, out)?,
        Command::Reference => cmd_reference(cfg, out)?,
        Command::Homogenize => cmd_homogenize(cfg, out)?,
        Command::Solve { corrected } => cmd_solve(cfg, out, corrected)?,
        Command::Train => cmd_train(cfg, out)?,
        Command::Eval => cmd_eval(cfg, out)?,
        Command::Gradcheck => cmd_gradcheck(cfg, out)?,
    };
    let config_json = cfg.to_json();
    let manifest = Manifest {
        command: command.name().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: serde_json::from_str(&config_json).expect("valid json"),
        config_sha256: sha256_bytes(config_json.as_bytes()),
        options: serde_json::to_value(command).expect("serializable"),
        inputs: records(out, &o.inputs)?,
        outputs: records(out, &o.outputs)?,
        summary: o.summary,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    manifest.write(out)?;
    Ok(manifest)
}

/// Run every stage of the pipeline.
pub fn run_pipeline(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<Manifest>> {
    Command::pipeline().iter().map(|&c| run_command(c, cfg, out)).collect()
}

fn provenance(cfg: &ExperimentConfig) -> Provenance {
    Provenance {
        refinement: cfg.grid.refinement,
        field: serde_json::to_string(cfg.channel()).expect("serializable"),
        solver: serde_json::to_string(&cfg.physics).expect("serializable"),
        sampling: "full".into(),
    }
}

/// Everything upstream of training, computed in process.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub coarse: StructuredGrid,
    pub fine: StructuredGrid,
    pub field: ScalarCellField,
    pub kappa_star: TensorCellField,
    pub kappa_nodes: Vec<Tensor2>,
    pub reference: TrustedData,
}

impl Prepared {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let coarse = cfg.coarse_grid()?;
        let fine = cfg.fine_grid()?;
        let field = generate_channel_field(cfg.channel(), &fine)?;
        let kappa_star = upscale(&fine, &field, &coarse)?;
        let kappa_nodes = interpolate_to_nodes(&coarse, &kappa_star)?;
        let reference = reference_data(cfg, &fine, &field, &coarse)?;
        Ok(Self { coarse, fine, field, kappa_star, kappa_nodes, reference })
    }

    pub fn problem(&self, cfg: &ExperimentConfig) -> Result<CorrectionProblem> {
        corrected_problem(cfg, &self.coarse, self.kappa_nodes.clone())
    }

    /// Homogenization-only solution on the coarse grid.
    pub fn homogenized(&self, cfg: &ExperimentConfig) -> Result<Vec<Vec<f64>>> {
        homogenized_solution(cfg, &self.coarse, &self.kappa_nodes)
    }
}

fn reference_data(cfg: &ExperimentConfig, fine: &StructuredGrid, field: &ScalarCellField, coarse: &StructuredGrid) -> Result<TrustedData> {
    let settings = cfg.solver_settings()?;
    let load = load_vector(&cfg.physics.source, fine)?;
    let sol = solve_fine_reference(fine, field, &Schedule::Constant(load), settings)?;
    let avg = coarse_average_series(fine, &sol.steps, coarse)?;
    TrustedData::new(coarse, settings.stepping.tau, avg, provenance(cfg))
}

pub fn corrected_problem(cfg: &ExperimentConfig, coarse: &StructuredGrid, kappa_nodes: Vec<Tensor2>) -> Result<CorrectionProblem> {
    let load = load_vector(&cfg.physics.source, coarse)?;
    let model = DualModel::new(coarse, cfg.solver_settings()?, kappa_nodes, &Schedule::Constant(load), None)?;
    Ok(CorrectionProblem::new(model, !cfg.physics.nonlinearity.is_linear()))
}

fn homogenized_solution(cfg: &ExperimentConfig, coarse: &StructuredGrid, kappa_nodes: &[Tensor2]) -> Result<Vec<Vec<f64>>> {
    let load = load_vector(&cfg.physics.source, coarse)?;
    let sol = solve_single_continuum(coarse, TensorSource::Nodal(kappa_nodes), &Schedule::Constant(load), cfg.solver_settings()?)?;
    Ok(sol.steps)
}

fn require_dir(dir: PathBuf) -> Result<PathBuf> {
    if dir.is_dir() {
        Ok(dir)
    } else {
        Err(Error::MissingInput(dir))
    }
}

fn load_reference(cfg: &ExperimentConfig, out: &Path, coarse: &StructuredGrid) -> Result<TrustedData> {
    let dir = require_dir(out.join(REFERENCE_DIR))?;
    let (tau, values) = load_nodal_series(&dir, coarse)?;
    let steps = cfg.stepping()?.steps;
    if values.len() != steps {
        return Err(Error::Dimension(format!("{}: {} steps, config has {steps}", dir.display(), values.len())));
    }
    TrustedData::new(coarse, tau, values, provenance(cfg))
}

fn load_kappa_nodes(out: &Path, coarse: &StructuredGrid) -> Result<Vec<Tensor2>> {
    interpolate_to_nodes(coarse, &load_tensor_field(&out.join(KAPPA_STAR_FILE), coarse)?)
}

pub fn load_nets(dir: &Path) -> Result<CorrectionNets> {
    Ok(CorrectionNets { kappa: load_checkpoint(&dir.join(KAPPA_NET_FILE))?, sigma: load_checkpoint(&dir.join(SIGMA_NET_FILE))? })
}

pub fn save_nets(nets: &CorrectionNets, dir: &Path) -> Result<()> {
    save_checkpoint(&nets.kappa, &dir.join(KAPPA_NET_FILE))?;
    save_checkpoint(&nets.sigma, &dir.join(SIGMA_NET_FILE))
}

fn cmd_gen_field(cfg: &ExperimentConfig, out: &Path) -> Result<Output> {
    let fine = cfg.fine_grid()?;
    let field = generate_channel_field(cfg.channel(), &fine)?;
    let path = out.join(FIELD_FILE);
    store_cell_field(&field, &path)?;
    let high = field.values().iter().filter(|&&v| v == cfg.channel().channel).count();
    Ok(Output {
        inputs: vec![],
        outputs: vec![path],
        summary: json!({"cells": fine.cell_count(), "channel_fraction": high as f64 / fine.cell_count() as f64}),
    })
}

fn cmd_reference(cfg: &ExperimentConfig, out: &Path) -> Result<Output> {
    let fine = cfg.fine_grid()?;
    let coarse = cfg.coarse_grid()?;
    let field_path = out.join(FIELD_FILE);
    let field = load_cell_field(&field_path, &fine)?;
    let data = reference_data(cfg, &fine, &field, &coarse)?;
    let dir = out.join(REFERENCE_DIR);
    store_nodal_series(&dir, &coarse, data.tau(), data.all_values())?;
    Ok(Output { inputs: vec![field_path], outputs: vec![dir], summary: json!({"steps": data.steps()}) })
}

fn cmd_homogenize(cfg: &ExperimentConfig, out: &Path) -> Result<Output> {
    let fine = cfg.fine_grid()?;
    let coarse = cfg.coarse_grid()?;
    let field_path = out.join(FIELD_FILE);
    let field = load_cell_field(&field_path, &fine)?;
    let kappa = upscale(&fine, &field, &coarse)?;
    let path = out.join(KAPPA_STAR_FILE);
    store_tensor_field(&kappa, &path)?;
    let n = kappa.values().len() as f64;
    let mean = |f: fn(&Tensor2) -> f64| kappa.values().iter().map(f).sum::<f64>() / n;
    Ok(Output {
        inputs: vec![field_path],
        outputs: vec![path],
        summary: json!({"mean_k11": mean(|t| t.k11), "mean_k22": mean(|t| t.k22), "mean_k12": mean(|t| t.k12)}),
    })
}

fn cmd_solve(cfg: &ExperimentConfig, out: &Path, corrected: bool) -> Result<Output> {
    let coarse = cfg.coarse_grid()?;
    let kappa_path = out.join(KAPPA_STAR_FILE);
    let kappa_nodes = load_kappa_nodes(out, &coarse)?;
    let tau = cfg.stepping()?.tau;
    if !corrected {
        let steps = homogenized_solution(cfg, &coarse, &kappa_nodes)?;
        let dir = out.join(HOMOGENIZED_DIR);
        store_nodal_series(&dir, &coarse, tau, &steps)?;
        return Ok(Output { inputs: vec![kappa_path], outputs: vec![dir], summary: json!({"steps": steps.len()}) });
    }
    let nets_dir = out.join(NETS_DIR);
    let nets = load_nets(&nets_dir)?;
    let problem = corrected_problem(cfg, &coarse, kappa_nodes)?;
    let sol = problem.solve(&nets)?;
    let dir = out.join(CORRECTED_DIR);
    store_dual_series(&dir, &sol.trajectory)?;
    let max_newton = sol.newton_iterations.iter().copied().max();
    Ok(Output {
        inputs: [KAPPA_NET_FILE, SIGMA_NET_FILE]
            .iter()
            .flat_map(|f| {
                let bin = nets_dir.join(f);
                [bin.with_extension("json"), bin]
            })
            .chain(std::iter::once(kappa_path))
            .collect(),
        outputs: vec![dir],
        summary: json!({"steps": sol.trajectory.steps(), "max_newton_iterations": max_newton}),
    })
}

fn cmd_train(cfg: &ExperimentConfig, out: &Path) -> Result<Output> {
    let coarse = cfg.coarse_grid()?;
    let data = load_reference(cfg, out, &coarse)?;
    let problem = corrected_problem(cfg, &coarse, load_kappa_nodes(out, &coarse)?)?;
    let (ks, ss) = cfg.net_specs();
    let mut nets = CorrectionNets::new(&ks, &ss)?;
    let nets_dir = out.join(NETS_DIR);
    if nets_dir.exists() {
        fs::remove_dir_all(&nets_dir).map_err(|e| Error::io(&nets_dir, e))?;
    }
    let every = cfg.training.checkpoint_every;
    let report = train(&problem, &mut nets, &data, &cfg.training, |epoch, _, nets| {
        if every > 0 && epoch % every == 0 {
            save_nets(nets, &nets_dir.join(format!("epoch_{epoch:06}")))?;
        }
        Ok(())
    })?;
    save_nets(&nets, &nets_dir)?;
    let rows: Vec<Vec<f64>> = report.history.iter().enumerate().map(|(k, &l)| vec![(k + 1) as f64, l]).collect();
    let hist = out.join(LOSS_HISTORY_FILE);
    write_table(&hist, &["epoch", "loss_percent"], &rows)?;
    let sampled = data.sample(cfg.training.sampling, cfg.training.seed)?;
    let final_loss = problem.loss(&nets, &sampled)?;
    Ok(Output {
        inputs: vec![out.join(REFERENCE_DIR), out.join(KAPPA_STAR_FILE)],
        outputs: vec![nets_dir, hist],
        summary: json!({
            "epochs": cfg.training.epochs,
            "initial_loss": report.history.first(),
            "final_loss": final_loss,
            "skipped": report.skipped,
            "parameters": nets.param_count(),
        }),
    })
}

fn cmd_eval(cfg: &ExperimentConfig, out: &Path) -> Result<Output> {
    let coarse = cfg.coarse_grid()?;
    let data = load_reference(cfg, out, &coarse)?;
    let mass = assemble_mass(&coarse);
    let mut inputs = vec![out.join(REFERENCE_DIR)];
    let mut header = vec!["t"];
    let mut columns = Vec::new();
    let mut summary = serde_json::Map::new();
    let hom_dir = out.join(HOMOGENIZED_DIR);
    if hom_dir.is_dir() {
        let (_, steps) = load_nodal_series(&hom_dir, &coarse)?;
        let t = evaluate(&mass, &steps, &data)?;
        summary.insert("homogenized_final".into(), json!(t.final_error()));
        header.push("homogenized");
        columns.push(t);
        inputs.push(hom_dir.clone());
    }
    let cor_dir = out.join(CORRECTED_DIR);
    if cor_dir.is_dir() {
        let traj = load_dual_series(&cor_dir, &coarse)?;
        let t = evaluate(&mass, traj.u1_steps(), &data)?;
        summary.insert("corrected_final".into(), json!(t.final_error()));
        header.push("corrected");
        columns.push(t);
        inputs.push(cor_dir);
    }
    if columns.is_empty() {
        return Err(Error::MissingInput(hom_dir));
    }
    let rows: Vec<Vec<f64>> = (0..data.steps())
        .map(|k| std::iter::once(columns[0].times[k]).chain(columns.iter().map(|c| c.errors[k])).collect())
        .collect();
    let path = out.join(ERRORS_FILE);
    write_table(&path, &header, &rows)?;
    Ok(Output { inputs, outputs: vec![path], summary: serde_json::Value::Object(summary) })
}

/// Result of comparing adjoint gradients with central differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub parameters: usize,
    pub loss: f64,
    pub fd_step: f64,
    pub max_rel_err: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Cosine between the continuous-adjoint and discrete gradients (linear
    /// model only).
    pub continuous_cosine: Option<f64>,
}

/// Discrete-adjoint gradient against central differences on the
/// configured problem, computed entirely in process.
pub fn gradcheck(cfg: &ExperimentConfig) -> Result<GradcheckReport> {
    let prep = Prepared::new(cfg)?;
    let problem = prep.problem(cfg)?;
    let (ks, ss) = cfg.net_specs();
    let nets = CorrectionNets::new(&ks, &ss)?;
    let data = &prep.reference;
    let (loss, g) = problem.loss_and_gradient(&nets, data, GradMode::Discrete, cfg.training.fd_step)?;
    let fd = gradient_fd(
        |p| {
            let mut n = nets.clone();
            n.set_params(p)?;
            problem.loss(&n, data)
        },
        &nets.params(),
        cfg.training.fd_step,
    )?;
    let max_rel_err = max_relative_error(&g, &fd, GRADCHECK_FLOOR);
    let continuous_cosine = if cfg.physics.nonlinearity.is_linear() {
        let c = problem.coefficients(&nets)?;
        let traj = problem.model().solve(&c.kappa2, &c.sigma)?.trajectory;
        continuous_adjoint(problem.model(), &c.kappa2, &c.sigma, &traj, data)?;
        let (_, gc) = problem.loss_and_gradient(&nets, data, GradMode::Continuous, cfg.training.fd_step)?;
        let dot: f64 = gc.iter().zip(&g).map(|(a, b)| a * b).sum();
        let na = gc.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        Some(dot / (na * nb))
    } else {
        None
    };
    Ok(GradcheckReport {
        parameters: g.len(),
        loss,
        fd_step: cfg.training.fd_step,
        max_rel_err,
        tolerance: GRADCHECK_TOLERANCE,
        pass: max_rel_err <= GRADCHECK_TOLERANCE,
        continuous_cosine,
    })
}

fn cmd_gradcheck(cfg: &ExperimentConfig, out: &Path) -> Result<Output> {
    let report = gradcheck(cfg)?;
    let path = out.join(GRADCHECK_FILE);
    let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Json { path: path.clone(), source: e })?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    if !report.pass {
        return Err(Error::GradientCheck { max_rel_err: report.max_rel_err, tolerance: report.tolerance });
    }
    Ok(Output { inputs: vec![], outputs: vec![path], summary: serde_json::to_value(&report).expect("serializable") })
}

/// Outcome of a replay.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub command: String,
    pub output_dir: PathBuf,
    pub compared: usize,
}

/// Re-run the command recorded in `manifest_path` into `target`, copying
/// its recorded inputs first, and require every output to match its
/// recorded hash.
pub fn replay(manifest_path: &Path, target: &Path) -> Result<ReplayReport> {
    let m = Manifest::read(manifest_path)?;
    let source = Manifest::output_dir(manifest_path);
    let cfg: ExperimentConfig = serde_json::from_value(m.config.clone())
        .map_err(|e| Error::Json { path: manifest_path.to_path_buf(), source: e })?;
    let command: Command = serde_json::from_value(m.options.clone())
        .map_err(|e| Error::Json { path: manifest_path.to_path_buf(), source: e })?;
    if source.canonicalize().ok() == target.canonicalize().ok() && target.exists() {
        return Err(Error::Config("replay target must differ from the recorded output directory".into()));
    }
    for rec in &m.inputs {
        let from = source.join(&rec.path);
        let to = target.join(&rec.path);
        let got = super::manifest::sha256_file(&from)?;
        if got != rec.sha256 {
            return Err(Error::ReplayMismatch(format!("input {} changed since the recorded run", rec.path)));
        }
        if let Some(d) = to.parent() {
            fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
        }
        fs::copy(&from, &to).map_err(|e| Error::io(&to, e))?;
    }
    let again = run_command(command, &cfg, target)?;
    let mut diffs = Vec::new();
    if again.outputs.len() != m.outputs.len() {
        diffs.push(format!("{} outputs recorded, {} produced", m.outputs.len(), again.outputs.len()));
    }
    for (a, b) in m.outputs.iter().zip(&again.outputs) {
        if a != b {
            diffs.push(a.path.clone());
        }
    }
    if !diffs.is_empty() {
        return Err(Error::ReplayMismatch(diffs.join(", ")));
    }
    Ok(ReplayReport { command: m.command, output_dir: target.to_path_buf(), compared: m.outputs.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = r#"{
        "grid": {"nx": 3, "ny": 3, "refinement": 4},
        "time": {"final_time": 1.0, "tau": 0.5},
        "field": {"channel": {"background": 0.1, "channel": 1.0,
                  "strokes": [{"x0": 0.0, "y0": 0.5, "x1": 1.0, "y1": 0.5, "width": 0.25}]}},
        "physics": {"source": [{"kind": "constant", "value": 1.0}]},
        "networks": {"hidden": 4, "depth": 1},
        "training": {"epochs": 5, "adam": {"lr": 0.01}, "checkpoint_every": 2, "fd_step": 1e-5},
        "output": {"dir": "out"}
    }"#;

    fn cfg() -> ExperimentConfig {
        ExperimentConfig::from_json(TOY).unwrap()
    }

    #[test]
    fn pipeline_writes_every_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path();
        let ms = run_pipeline(&cfg(), out).unwrap();
        assert_eq!(ms.len(), 7);
        for f in [FIELD_FILE, KAPPA_STAR_FILE, LOSS_HISTORY_FILE, ERRORS_FILE, "nets/kappa_net.bin", "nets/epoch_000004/sigma_net.json"] {
            assert!(out.join(f).exists(), "{f}");
        }
        let text = fs::read_to_string(out.join(ERRORS_FILE)).unwrap();
        assert_eq!(text.lines().next().unwrap(), "t,homogenized,corrected");
        assert_eq!(text.lines().count(), 3);
        let hist = fs::read_to_string(out.join(LOSS_HISTORY_FILE)).unwrap();
        assert_eq!(hist.lines().count(), 6);
        for c in ["gen-field", "reference", "homogenize", "solve", "train", "solve-corrected", "eval"] {
            assert!(out.join("manifests").join(format!("{c}.json")).exists());
        }
    }

    #[test]
    fn replay_reproduces_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run");
        run_pipeline(&cfg(), &out).unwrap();
        for c in ["reference", "train", "solve-corrected", "eval"] {
            let r = replay(&out.join("manifests").join(format!("{c}.json")), &dir.path().join(format!("replay_{c}"))).unwrap();
            assert!(r.compared > 0);
        }
    }

    #[test]
    fn replay_detects_changed_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run");
        run_command(Command::GenField, &cfg(), &out).unwrap();
        run_command(Command::Homogenize, &cfg(), &out).unwrap();
        let mut text = fs::read_to_string(out.join(FIELD_FILE)).unwrap();
        text.push_str("# edited\n");
        fs::write(out.join(FIELD_FILE), text).unwrap();
        let r = replay(&out.join("manifests/homogenize.json"), &dir.path().join("again"));
        assert!(matches!(r, Err(Error::ReplayMismatch(_))));
    }

    #[test]
    fn missing_checkpoint_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path();
        run_command(Command::GenField, &cfg(), out).unwrap();
        run_command(Command::Homogenize, &cfg(), out).unwrap();
        match run_command(Command::Solve { corrected: true }, &cfg(), out) {
            Err(Error::MissingInput(p)) => assert!(p.to_string_lossy().contains("kappa_net")),
            other => panic!("{other:?}"),
        }
        match run_command(Command::Eval, &cfg(), out) {
            Err(Error::MissingInput(p)) => assert!(p.ends_with(REFERENCE_DIR)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gradcheck_passes_on_toy() {
        let r = gradcheck(&cfg()).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.parameters, 22 + 17);
        assert!(r.continuous_cosine.unwrap() > 0.0);
    }
}
