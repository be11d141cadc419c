//! File formats.
//!
//! Fields are CSV text with a header line `# grid <nx> <ny> <kind>` followed
//! by one line per grid row (y outer), values in 17 significant digits so a
//! store/load round trip is bit-exact. Kinds:
//!
//! - `cell`: `nx` values per line, `ny` lines
//! - `node`: `nx + 1` values per line, `ny + 1` lines
//! - `tensor`: `3 * nx` values per line (`k11, k12, k22` per cell)
//! - `dual`: `2 * (nx + 1)` values per line (`u1, u2` per node)
//!
//! Time series are directories with one snapshot file per step and an
//! `index.csv` listing `step,t,file`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::fem::DualTrajectory;
use crate::field::{NodalField, ScalarCellField, Tensor2, TensorCellField};
use crate::grid::StructuredGrid;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Cell,
    Node,
    Tensor,
    Dual,
}

impl FieldKind {
    fn as_str(self) -> &'static str {
        match self {
            FieldKind::Cell => "cell",
            FieldKind::Node => "node",
            FieldKind::Tensor => "tensor",
            FieldKind::Dual => "dual",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "cell" => FieldKind::Cell,
            "node" => FieldKind::Node,
            "tensor" => FieldKind::Tensor,
            "dual" => FieldKind::Dual,
            _ => return None,
        })
    }

    /// (values per line, line count)
    fn layout(self, nx: usize, ny: usize) -> (usize, usize) {
        match self {
            FieldKind::Cell => (nx, ny),
            FieldKind::Node => (nx + 1, ny + 1),
            FieldKind::Tensor => (3 * nx, ny),
            FieldKind::Dual => (2 * (nx + 1), ny + 1),
        }
    }
}

/// Float formatting used by every text output: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Raw contents of a field file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawField {
    pub nx: usize,
    pub ny: usize,
    pub kind: FieldKind,
    pub values: Vec<f64>,
}

pub fn write_raw(path: &Path, raw: &RawField) -> Result<()> {
    let (per_line, lines) = raw.kind.layout(raw.nx, raw.ny);
    if raw.values.len() != per_line * lines {
        return Err(Error::Dimension(format!(
            "{} field {}x{} needs {} values, got {}",
            raw.kind.as_str(),
            raw.nx,
            raw.ny,
            per_line * lines,
            raw.values.len()
        )));
    }
    let mut out = String::with_capacity(raw.values.len() * 25 + 64);
    let _ = writeln!(out, "# grid {} {} {}", raw.nx, raw.ny, raw.kind.as_str());
    for row in raw.values.chunks(per_line) {
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_raw(path: &Path) -> Result<RawField> {
    let text = fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingInput(path.to_path_buf())
        } else {
            Error::io(path, e)
        }
    })?;
    let perr = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| perr(1, "empty file".into()))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 5 || toks[0] != "#" || toks[1] != "grid" {
        return Err(perr(1, format!("bad header {header:?}, expected '# grid nx ny kind'")));
    }
    let nx: usize = toks[2].parse().map_err(|_| perr(1, format!("bad nx {:?}", toks[2])))?;
    let ny: usize = toks[3].parse().map_err(|_| perr(1, format!("bad ny {:?}", toks[3])))?;
    let kind = FieldKind::parse(toks[4]).ok_or_else(|| perr(1, format!("unknown kind {:?}", toks[4])))?;
    let (per_line, expected_lines) = kind.layout(nx, ny);
    let mut values = Vec::with_capacity(per_line * expected_lines);
    let mut count = 0;
    for (k, line) in lines.enumerate() {
        let lineno = k + 2;
        if line.trim().is_empty() {
            continue;
        }
        count += 1;
        let before = values.len();
        for tok in line.split(',') {
            let v: f64 = tok.trim().parse().map_err(|_| perr(lineno, format!("unparseable value {tok:?}")))?;
            if !v.is_finite() {
                return Err(perr(lineno, format!("non-finite value {tok:?}")));
            }
            values.push(v);
        }
        if values.len() - before != per_line {
            return Err(Error::Dimension(format!(
                "{}:{lineno}: expected {per_line} values, found {}",
                path.display(),
                values.len() - before
            )));
        }
    }
    if count != expected_lines {
        return Err(Error::Dimension(format!(
            "{}: expected {expected_lines} rows for a {nx}x{ny} {} field, found {count}",
            path.display(),
            kind.as_str()
        )));
    }
    Ok(RawField { nx, ny, kind, values })
}

fn read_checked(path: &Path, grid: &StructuredGrid, kind: FieldKind) -> Result<RawField> {
    let raw = read_raw(path)?;
    if raw.kind != kind {
        return Err(Error::Dimension(format!(
            "{}: expected a {} field, file holds {}",
            path.display(),
            kind.as_str(),
            raw.kind.as_str()
        )));
    }
    if (raw.nx, raw.ny) != (grid.nx(), grid.ny()) {
        return Err(Error::Dimension(format!(
            "{}: file grid {}x{} does not match {}x{}",
            path.display(),
            raw.nx,
            raw.ny,
            grid.nx(),
            grid.ny()
        )));
    }
    Ok(raw)
}

pub fn store_cell_field(field: &ScalarCellField, path: &Path) -> Result<()> {
    let (nx, ny) = field.shape();
    write_raw(path, &RawField { nx, ny, kind: FieldKind::Cell, values: field.values().to_vec() })
}

pub fn load_cell_field(path: &Path, grid: &StructuredGrid) -> Result<ScalarCellField> {
    let raw = read_checked(path, grid, FieldKind::Cell)?;
    ScalarCellField::new(grid, raw.values)
}

pub fn store_nodal_field(field: &NodalField, path: &Path) -> Result<()> {
    let (nx, ny) = field.shape();
    write_raw(path, &RawField { nx, ny, kind: FieldKind::Node, values: field.values().to_vec() })
}

pub fn load_nodal_field(path: &Path, grid: &StructuredGrid) -> Result<NodalField> {
    let raw = read_checked(path, grid, FieldKind::Node)?;
    NodalField::new(grid, raw.values)
}

pub fn store_tensor_field(field: &TensorCellField, path: &Path) -> Result<()> {
    let (nx, ny) = field.shape();
    let values = field.values().iter().flat_map(|t| [t.k11, t.k12, t.k22]).collect();
    write_raw(path, &RawField { nx, ny, kind: FieldKind::Tensor, values })
}

pub fn load_tensor_field(path: &Path, grid: &StructuredGrid) -> Result<TensorCellField> {
    let raw = read_checked(path, grid, FieldKind::Tensor)?;
    let tensors = raw.values.chunks(3).map(|c| Tensor2::new(c[0], c[1], c[2])).collect();
    TensorCellField::new(grid, tensors)
}

/// Any field file, dispatched on its declared kind.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedField {
    Cell(ScalarCellField),
    Node(NodalField),
    Tensor(TensorCellField),
}

pub fn load_field(path: &Path, grid: &StructuredGrid) -> Result<LoadedField> {
    let raw = read_raw(path)?;
    match raw.kind {
        FieldKind::Cell => load_cell_field(path, grid).map(LoadedField::Cell),
        FieldKind::Node => load_nodal_field(path, grid).map(LoadedField::Node),
        FieldKind::Tensor => load_tensor_field(path, grid).map(LoadedField::Tensor),
        FieldKind::Dual => Err(Error::InvalidInput(format!(
            "{} holds a dual snapshot; use load_dual_series",
            path.display()
        ))),
    }
}

pub const INDEX_FILE: &str = "index.csv";

fn snapshot_name(step: usize) -> String {
    format!("step_{step:04}.csv")
}

fn write_index(dir: &Path, tau: f64, steps: usize) -> Result<()> {
    let mut out = String::from("step,t,file\n");
    for n in 1..=steps {
        let _ = writeln!(out, "{n},{},{}", fmt_f64(n as f64 * tau), snapshot_name(n));
    }
    let path = dir.join(INDEX_FILE);
    fs::write(&path, out).map_err(|e| Error::io(path, e))
}

/// One entry of a time-series index.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub step: usize,
    pub t: f64,
    pub file: PathBuf,
}

pub fn read_index(dir: &Path) -> Result<Vec<IndexEntry>> {
    let path = dir.join(INDEX_FILE);
    let text = fs::read_to_string(&path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingInput(path.clone())
        } else {
            Error::io(&path, e)
        }
    })?;
    let perr = |line: usize, msg: String| Error::Parse { path: path.clone(), line, msg };
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(perr(k + 1, format!("expected step,t,file; got {line:?}")));
        }
        let step = parts[0].parse().map_err(|_| perr(k + 1, "bad step".into()))?;
        let t = parts[1].parse().map_err(|_| perr(k + 1, "bad time".into()))?;
        out.push(IndexEntry { step, t, file: dir.join(parts[2]) });
    }
    Ok(out)
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Store per-step scalar nodal vectors (steps 1..=N) as a time series.
pub fn store_nodal_series(dir: &Path, grid: &StructuredGrid, tau: f64, steps: &[Vec<f64>]) -> Result<()> {
    prepare_dir(dir)?;
    for (k, values) in steps.iter().enumerate() {
        let raw = RawField { nx: grid.nx(), ny: grid.ny(), kind: FieldKind::Node, values: values.clone() };
        write_raw(&dir.join(snapshot_name(k + 1)), &raw)?;
    }
    write_index(dir, tau, steps.len())
}

/// Load a scalar nodal time series; returns `(tau, per-step values)`.
pub fn load_nodal_series(dir: &Path, grid: &StructuredGrid) -> Result<(f64, Vec<Vec<f64>>)> {
    let index = read_index(dir)?;
    let tau = index.first().map(|e| e.t / e.step as f64).unwrap_or(0.0);
    let mut steps = Vec::with_capacity(index.len());
    for e in &index {
        steps.push(load_nodal_field(&e.file, grid)?.into_values());
    }
    Ok((tau, steps))
}

/// Store a dual trajectory, one `dual` snapshot per step.
pub fn store_dual_series(dir: &Path, traj: &DualTrajectory) -> Result<()> {
    prepare_dir(dir)?;
    let (nx, ny) = traj.shape();
    for n in 1..=traj.steps() {
        let values = traj.u1(n).iter().zip(traj.u2(n)).flat_map(|(&a, &b)| [a, b]).collect();
        write_raw(&dir.join(snapshot_name(n)), &RawField { nx, ny, kind: FieldKind::Dual, values })?;
    }
    write_index(dir, traj.tau(), traj.steps())
}

pub fn load_dual_series(dir: &Path, grid: &StructuredGrid) -> Result<DualTrajectory> {
    let index = read_index(dir)?;
    let tau = index.first().map(|e| e.t / e.step as f64).unwrap_or(0.0);
    let mut u1 = Vec::with_capacity(index.len());
    let mut u2 = Vec::with_capacity(index.len());
    for e in &index {
        let raw = read_checked(&e.file, grid, FieldKind::Dual)?;
        u1.push(raw.values.iter().step_by(2).copied().collect());
        u2.push(raw.values.iter().skip(1).step_by(2).copied().collect());
    }
    Ok(DualTrajectory::from_parts(grid, tau, u1, u2))
}

/// Write a small CSV table with a header row.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cell_field_round_trip_100x100() {
        let dir = tempfile::tempdir().unwrap();
        let g = StructuredGrid::new(100, 100).unwrap();
        let values: Vec<f64> = (0..g.cell_count()).map(|i| 1.0 + (i as f64).sin().abs() * 1e3 / 7.0).collect();
        let f = ScalarCellField::new(&g, values).unwrap();
        let p = dir.path().join("k.csv");
        store_cell_field(&f, &p).unwrap();
        assert_eq!(load_cell_field(&p, &g).unwrap(), f);
    }

    #[test]
    fn wrong_row_count_is_dimension_error() {
        let dir = tempfile::tempdir().unwrap();
        let small = StructuredGrid::new(100, 99).unwrap();
        let p = dir.path().join("k.csv");
        store_cell_field(&ScalarCellField::constant(&small, 1.0), &p).unwrap();
        // header claims 100x100 but only 99 rows are present
        let text = fs::read_to_string(&p).unwrap().replacen("# grid 100 99", "# grid 100 100", 1);
        fs::write(&p, text).unwrap();
        let g = StructuredGrid::new(100, 100).unwrap();
        assert!(matches!(load_cell_field(&p, &g), Err(Error::Dimension(_))));
    }

    #[test]
    fn grid_mismatch_is_dimension_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("k.csv");
        store_cell_field(&ScalarCellField::constant(&StructuredGrid::new(99, 100).unwrap(), 1.0), &p).unwrap();
        let g = StructuredGrid::new(100, 100).unwrap();
        assert!(matches!(load_cell_field(&p, &g), Err(Error::Dimension(_))));
    }

    #[test]
    fn constant_field_tokens_parse_to_one() {
        let dir = tempfile::tempdir().unwrap();
        let g = StructuredGrid::new(5, 4).unwrap();
        let p = dir.path().join("c.csv");
        store_cell_field(&ScalarCellField::constant(&g, 1.0), &p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# grid 5 4 cell"));
        for line in lines {
            for tok in line.split(',') {
                assert_eq!(tok.parse::<f64>().unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let g = StructuredGrid::new(2, 1).unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "# grid 2 1 cell\n1.0,abc\n").unwrap();
        assert!(matches!(load_cell_field(&p, &g), Err(Error::Parse { line: 2, .. })));
        fs::write(&p, "# grid 2 1 cell\n1.0,inf\n").unwrap();
        assert!(load_cell_field(&p, &g).is_err());
        assert!(matches!(load_cell_field(&dir.path().join("nope.csv"), &g), Err(Error::MissingInput(_))));
    }

    #[test]
    fn tensor_and_dispatch() {
        let dir = tempfile::tempdir().unwrap();
        let g = StructuredGrid::new(3, 2).unwrap();
        let t = TensorCellField::new(&g, (0..6).map(|i| Tensor2::new(2.0 + i as f64, 0.1, 3.0)).collect()).unwrap();
        let p = dir.path().join("t.csv");
        store_tensor_field(&t, &p).unwrap();
        assert_eq!(load_field(&p, &g).unwrap(), LoadedField::Tensor(t));
    }

    #[test]
    fn series_layout() {
        let dir = tempfile::tempdir().unwrap();
        let g = StructuredGrid::new(3, 3).unwrap();
        let steps: Vec<Vec<f64>> = (0..10).map(|k| vec![k as f64; g.node_count()]).collect();
        store_nodal_series(dir.path(), &g, 0.1, &steps).unwrap();
        let index = read_index(dir.path()).unwrap();
        assert_eq!(index.len(), 10);
        assert_eq!(index[0].t, 0.1);
        assert_eq!(index[9].t, 1.0);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 11);
        let (tau, back) = load_nodal_series(dir.path(), &g).unwrap();
        assert_eq!(tau, 0.1);
        assert_eq!(back, steps);
    }

    #[test]
    fn empty_series_has_only_index() {
        let dir = tempfile::tempdir().unwrap();
        let g = StructuredGrid::new(2, 2).unwrap();
        store_nodal_series(dir.path(), &g, 0.1, &[]).unwrap();
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(read_index(dir.path()).unwrap().is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn dual_series_round_trip(seed in any::<u64>(), steps in 0usize..5) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = StructuredGrid::new(4, 3).unwrap();
            let mut gen = || -> Vec<f64> { (0..g.node_count()).map(|_| rng.random_range(-1e3..1e3)).collect() };
            let u1: Vec<Vec<f64>> = (0..steps).map(|_| gen()).collect();
            let u2: Vec<Vec<f64>> = (0..steps).map(|_| gen()).collect();
            let traj = DualTrajectory::from_parts(&g, 0.25, u1, u2);
            let dir = tempfile::tempdir().unwrap();
            store_dual_series(dir.path(), &traj).unwrap();
            let back = load_dual_series(dir.path(), &g).unwrap();
            prop_assert_eq!(back.steps(), traj.steps());
            for n in 1..=steps {
                prop_assert_eq!(back.u1(n), traj.u1(n));
                prop_assert_eq!(back.u2(n), traj.u2(n));
            }
        }
    }
}
