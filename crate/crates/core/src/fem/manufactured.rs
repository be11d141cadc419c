//! Manufactured solutions `u1 = u2 = g(t) sin(pi x) sin(pi y)` for
//! convergence studies of the dual-continuum stepper.
//!
//! With constant isotropic `k` in both continua the transfer term vanishes
//! and each continuum sees the source `(g'(t) + 2 pi^2 k g(t)) sin sin`.

use std::f64::consts::PI;

use super::{load_from_fn, DualModel, Schedule, SolverSettings};
use crate::field::Tensor2;
use crate::grid::StructuredGrid;
use crate::Result;

/// Time factor `g` of the manufactured solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeProfile {
    /// `g = t`. Backward Euler integrates this exactly in time.
    Linear,
    /// `g = t^2`.
    Quadratic,
}

impl TimeProfile {
    fn g(self, t: f64) -> f64 {
        match self {
            TimeProfile::Linear => t,
            TimeProfile::Quadratic => t * t,
        }
    }

    fn dg(self, t: f64) -> f64 {
        match self {
            TimeProfile::Linear => 1.0,
            TimeProfile::Quadratic => 2.0 * t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub profile: TimeProfile,
    pub kappa: f64,
    pub sigma: f64,
    pub final_time: f64,
}

impl Default for ManufacturedCase {
    fn default() -> Self {
        Self { profile: TimeProfile::Linear, kappa: 1.0, sigma: 1.0, final_time: 1.0 }
    }
}

impl ManufacturedCase {
    pub fn exact(&self, t: f64, x: f64, y: f64) -> f64 {
        self.profile.g(t) * (PI * x).sin() * (PI * y).sin()
    }

    /// Final-time L2 errors of `(u1, u2)` on an `n x n` grid with `steps` steps.
    pub fn errors(&self, n: usize, steps: usize) -> Result<(f64, f64)> {
        let grid = StructuredGrid::new(n, n)?;
        let tau = self.final_time / steps as f64;
        let settings = SolverSettings::linear(tau, steps)?;
        let loads: Vec<Vec<f64>> = (1..=steps)
            .map(|k| {
                let t = k as f64 * tau;
                let a = self.profile.dg(t) + 2.0 * PI * PI * self.kappa * self.profile.g(t);
                load_from_fn(&grid, |x, y| a * (PI * x).sin() * (PI * y).sin())
            })
            .collect();
        let load = Schedule::Steps(loads);
        let k = vec![Tensor2::isotropic(self.kappa); grid.node_count()];
        let model = DualModel::new(&grid, settings, k.clone(), &load, Some(&load))?;
        let sol = model.solve(&Schedule::Constant(k), &Schedule::Constant(vec![self.sigma; grid.node_count()]))?;
        let t = sol.trajectory;
        let tf = steps as f64 * tau;
        Ok((
            l2_error(&grid, t.u1(steps), |x, y| self.exact(tf, x, y)),
            l2_error(&grid, t.u2(steps), |x, y| self.exact(tf, x, y)),
        ))
    }
}

/// `||u_h - u||_L2` with 3x3 Gauss quadrature per cell.
pub fn l2_error(grid: &StructuredGrid, nodal: &[f64], exact: impl Fn(f64, f64) -> f64) -> f64 {
    let r = (0.6f64).sqrt() / 2.0;
    let pts = [0.5 - r, 0.5, 0.5 + r];
    let wts = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
    let area = grid.hx() * grid.hy();
    let mut sum = 0.0;
    for c in 0..grid.cell_count() {
        let nodes = grid.cell_nodes(c);
        let (x0, y0) = grid.node_coords(nodes[0]);
        let v = nodes.map(|n| nodal[n]);
        for (i, &s) in pts.iter().enumerate() {
            for (j, &t) in pts.iter().enumerate() {
                let uh = v[0] * (1.0 - s) * (1.0 - t) + v[1] * s * (1.0 - t) + v[2] * s * t + v[3] * (1.0 - s) * t;
                let e = uh - exact(x0 + s * grid.hx(), y0 + t * grid.hy());
                sum += wts[i] * wts[j] * area * e * e;
            }
        }
    }
    sum.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolant_error_is_second_order() {
        let f = |x: f64, y: f64| (PI * x).sin() * (PI * y).sin();
        let e: Vec<f64> = [8, 16]
            .iter()
            .map(|&n| {
                let g = StructuredGrid::new(n, n).unwrap();
                let v: Vec<f64> = (0..g.node_count()).map(|p| { let (x, y) = g.node_coords(p); f(x, y) }).collect();
                l2_error(&g, &v, f)
            })
            .collect();
        assert!((e[0] / e[1] - 4.0).abs() < 0.2, "{e:?}");
    }

    #[test]
    fn continua_agree() {
        let (e1, e2) = ManufacturedCase::default().errors(6, 4).unwrap();
        assert!((e1 - e2).abs() < 1e-12 * e1.max(1.0));
    }

    #[test]
    fn spatial_error_shrinks() {
        let c = ManufacturedCase::default();
        let a = c.errors(4, 5).unwrap().0;
        let b = c.errors(8, 5).unwrap().0;
        assert!(b < a / 3.0, "{a} {b}");
    }
}
