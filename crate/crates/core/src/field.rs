//! Cell and nodal fields plus the channelized permeability generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::StructuredGrid;
use crate::{Error, Result};

/// Symmetric 2x2 tensor stored as `(k11, k12, k22)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Tensor2 {
    pub k11: f64,
    pub k12: f64,
    pub k22: f64,
}

impl Tensor2 {
    pub const fn new(k11: f64, k12: f64, k22: f64) -> Self {
        Self { k11, k12, k22 }
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        Self { k11: a, k12: 0.0, k22: b }
    }

    pub const fn isotropic(c: f64) -> Self {
        Self::diag(c, c)
    }

    pub fn det(&self) -> f64 {
        self.k11 * self.k22 - self.k12 * self.k12
    }

    pub fn is_spd(&self) -> bool {
        self.k11 > 0.0 && self.k22 > 0.0 && self.det() > 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.k11.is_finite() && self.k12.is_finite() && self.k22.is_finite()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(s * self.k11, s * self.k12, s * self.k22)
    }

    /// Tensor seen in coordinates with x and y swapped.
    pub fn swap_axes(&self) -> Self {
        Self::new(self.k22, self.k12, self.k11)
    }

    /// `a^T K b` for 2-vectors.
    #[inline]
    pub fn bilinear(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        a[0] * (self.k11 * b[0] + self.k12 * b[1]) + a[1] * (self.k12 * b[0] + self.k22 * b[1])
    }
}

impl std::ops::Add for Tensor2 {
    type Output = Tensor2;
    fn add(self, o: Tensor2) -> Tensor2 {
        Tensor2::new(self.k11 + o.k11, self.k12 + o.k12, self.k22 + o.k22)
    }
}

/// One scalar per cell (fine permeability, block values).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarCellField {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl ScalarCellField {
    pub fn new(grid: &StructuredGrid, values: Vec<f64>) -> Result<Self> {
        Self::from_shape(grid.nx(), grid.ny(), values)
    }

    pub fn from_shape(nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != nx * ny {
            return Err(Error::Dimension(format!(
                "cell field expects {} values for a {nx}x{ny} grid, got {}",
                nx * ny,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("cell {i}")));
        }
        Ok(Self { nx, ny, values })
    }

    pub fn constant(grid: &StructuredGrid, value: f64) -> Self {
        Self { nx: grid.nx(), ny: grid.ny(), values: vec![value; grid.cell_count()] }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn matches(&self, grid: &StructuredGrid) -> bool {
        self.shape() == (grid.nx(), grid.ny())
    }

    /// Checks the permeability invariant (strictly positive everywhere).
    pub fn ensure_positive(&self) -> Result<()> {
        match self.values.iter().position(|&v| v <= 0.0) {
            Some(i) => Err(Error::InvalidInput(format!("permeability must be > 0, cell {i} is {}", self.values[i]))),
            None => Ok(()),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { nx: self.nx, ny: self.ny, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Field with the x and y axes swapped.
    pub fn transpose(&self) -> Self {
        let mut values = vec![0.0; self.values.len()];
        for j in 0..self.ny {
            for i in 0..self.nx {
                values[i * self.ny + j] = self.values[j * self.nx + i];
            }
        }
        Self { nx: self.ny, ny: self.nx, values }
    }
}

/// One symmetric tensor per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorCellField {
    nx: usize,
    ny: usize,
    values: Vec<Tensor2>,
}

impl TensorCellField {
    pub fn new(grid: &StructuredGrid, values: Vec<Tensor2>) -> Result<Self> {
        Self::from_shape(grid.nx(), grid.ny(), values)
    }

    pub fn from_shape(nx: usize, ny: usize, values: Vec<Tensor2>) -> Result<Self> {
        if values.len() != nx * ny {
            return Err(Error::Dimension(format!(
                "tensor field expects {} cells, got {}",
                nx * ny,
                values.len()
            )));
        }
        for (i, t) in values.iter().enumerate() {
            if !t.is_finite() {
                return Err(Error::NonFinite(format!("tensor cell {i}")));
            }
            if !t.is_spd() {
                return Err(Error::NotSpd(format!("cell {i}: {t:?}")));
            }
        }
        Ok(Self { nx, ny, values })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn values(&self) -> &[Tensor2] {
        &self.values
    }

    pub fn matches(&self, grid: &StructuredGrid) -> bool {
        self.shape() == (grid.nx(), grid.ny())
    }
}

/// One scalar per node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl NodalField {
    pub fn new(grid: &StructuredGrid, values: Vec<f64>) -> Result<Self> {
        Self::from_shape(grid.nx(), grid.ny(), values)
    }

    pub fn from_shape(nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != (nx + 1) * (ny + 1) {
            return Err(Error::Dimension(format!(
                "nodal field expects {} values for a {nx}x{ny} grid, got {}",
                (nx + 1) * (ny + 1),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("node {i}")));
        }
        Ok(Self { nx, ny, values })
    }

    pub fn zeros(grid: &StructuredGrid) -> Self {
        Self { nx: grid.nx(), ny: grid.ny(), values: vec![0.0; grid.node_count()] }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn matches(&self, grid: &StructuredGrid) -> bool {
        self.shape() == (grid.nx(), grid.ny())
    }
}

/// A straight channel segment of finite width, in domain units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stroke {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub width: f64,
}

impl Stroke {
    fn contains(&self, px: f64, py: f64) -> bool {
        let (dx, dy) = (self.x1 - self.x0, self.y1 - self.y0);
        let len2 = dx * dx + dy * dy;
        let s = if len2 == 0.0 {
            0.0
        } else {
            (((px - self.x0) * dx + (py - self.y0) * dy) / len2).clamp(0.0, 1.0)
        };
        let (qx, qy) = (self.x0 + s * dx - px, self.y0 + s * dy - py);
        (qx * qx + qy * qy).sqrt() <= 0.5 * self.width
    }

    fn validate(&self, idx: usize) -> Result<()> {
        let inside = |v: f64| (0.0..=1.0).contains(&v);
        if !(inside(self.x0) && inside(self.y0) && inside(self.x1) && inside(self.y1)) {
            return Err(Error::InvalidInput(format!("stroke {idx} leaves the unit square")));
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::InvalidInput(format!("stroke {idx} has non-positive width")));
        }
        Ok(())
    }
}

/// Random extra strokes drawn from the spec's seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomStrokes {
    pub count: usize,
    pub min_width: f64,
    pub max_width: f64,
}

/// Description of a channelized (fractured) permeability field.
///
/// JSON form: `{"background": 1, "channel": 100, "strokes": [...], "seed": 7}`
/// with an optional `"random_strokes": {"count", "min_width", "max_width"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub background: f64,
    pub channel: f64,
    #[serde(default)]
    pub strokes: Vec<Stroke>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_strokes: Option<RandomStrokes>,
}

impl ChannelSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.background > 0.0 && self.channel >= self.background) {
            return Err(Error::InvalidInput(format!(
                "need channel >= background > 0, got channel={} background={}",
                self.channel, self.background
            )));
        }
        for (i, s) in self.strokes.iter().enumerate() {
            s.validate(i)?;
        }
        if let Some(r) = self.random_strokes {
            if !(r.min_width > 0.0 && r.max_width >= r.min_width) {
                return Err(Error::InvalidInput("random stroke widths must satisfy 0 < min <= max".into()));
            }
        }
        Ok(())
    }

    /// Explicit strokes followed by the seeded random ones.
    pub fn all_strokes(&self) -> Vec<Stroke> {
        let mut out = self.strokes.clone();
        if let Some(r) = self.random_strokes {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            for _ in 0..r.count {
                let width = if r.max_width > r.min_width {
                    rng.random_range(r.min_width..r.max_width)
                } else {
                    r.min_width
                };
                out.push(Stroke {
                    x0: rng.random_range(0.0..1.0),
                    y0: rng.random_range(0.0..1.0),
                    x1: rng.random_range(0.0..1.0),
                    y1: rng.random_range(0.0..1.0),
                    width,
                });
            }
        }
        out
    }
}

/// Rasterize a channel spec by cell-center membership.
pub fn generate_channel_field(spec: &ChannelSpec, grid: &StructuredGrid) -> Result<ScalarCellField> {
    spec.validate()?;
    let strokes = spec.all_strokes();
    let values = (0..grid.cell_count())
        .map(|c| {
            let (x, y) = grid.cell_center(c);
            if strokes.iter().any(|s| s.contains(x, y)) {
                spec.channel
            } else {
                spec.background
            }
        })
        .collect();
    ScalarCellField::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn horizontal(width: f64) -> ChannelSpec {
        ChannelSpec {
            background: 1.0,
            channel: 100.0,
            strokes: vec![Stroke { x0: 0.0, y0: 0.5, x1: 1.0, y1: 0.5, width }],
            seed: 0,
            random_strokes: None,
        }
    }

    #[test]
    fn horizontal_stroke_covers_its_area() {
        let g = StructuredGrid::new(100, 100).unwrap();
        let f = generate_channel_field(&horizontal(0.1), &g).unwrap();
        assert!(f.values().iter().all(|&v| v == 1.0 || v == 100.0));
        let frac = f.values().iter().filter(|&&v| v == 100.0).count() as f64 / g.cell_count() as f64;
        // stroke area is 0.1, one cell layer is 0.01
        assert!((frac - 0.1).abs() <= 0.01 + 1e-12, "fraction {frac}");
    }

    #[test]
    fn no_strokes_gives_background() {
        let g = StructuredGrid::new(8, 8).unwrap();
        let spec = ChannelSpec { strokes: vec![], ..horizontal(0.1) };
        let f = generate_channel_field(&spec, &g).unwrap();
        assert!(f.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn seeded_generation_is_deterministic() {
        let g = StructuredGrid::new(50, 50).unwrap();
        let spec = ChannelSpec {
            background: 1.0,
            channel: 500.0,
            strokes: vec![],
            seed: 42,
            random_strokes: Some(RandomStrokes { count: 6, min_width: 0.02, max_width: 0.05 }),
        };
        let a = generate_channel_field(&spec, &g).unwrap();
        let b = generate_channel_field(&spec, &g).unwrap();
        assert_eq!(a, b);
        assert!(a.values().iter().any(|&v| v == 500.0));
        let other = ChannelSpec { seed: 43, ..spec };
        assert_ne!(a, generate_channel_field(&other, &g).unwrap());
    }

    #[test]
    fn rejects_strokes_outside_domain() {
        let g = StructuredGrid::new(4, 4).unwrap();
        let mut spec = horizontal(0.1);
        spec.strokes[0].x1 = 1.5;
        assert!(generate_channel_field(&spec, &g).is_err());
        let spec = ChannelSpec { channel: 0.5, ..horizontal(0.1) };
        assert!(generate_channel_field(&spec, &g).is_err());
    }

    #[test]
    fn channel_spec_json_keys() {
        let json = r#"{"background":1,"channel":100,"strokes":[{"x0":0,"y0":0.5,"x1":1,"y1":0.5,"width":0.1}],"seed":3}"#;
        let spec: ChannelSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec, ChannelSpec { seed: 3, ..horizontal(0.1) });
    }

    #[test]
    fn field_shape_checks() {
        let g = StructuredGrid::new(3, 2).unwrap();
        assert!(ScalarCellField::new(&g, vec![1.0; 5]).is_err());
        assert!(ScalarCellField::new(&g, vec![f64::NAN; 6]).is_err());
        assert!(NodalField::new(&g, vec![0.0; 12]).is_ok());
        assert!(TensorCellField::new(&g, vec![Tensor2::new(1.0, 2.0, 1.0); 6]).is_err());
    }
}
