//! Coupled two-continuum backward-Euler stepping.
//!
//! Each step solves
//!
//! ```text
//! (M/tau + A1 + Ds M) u1 - Ds M u2 = M u1_prev / tau + F1
//! (M/tau + A2 + Ds M) u2 - Ds M u1 = M u2_prev / tau + F2
//! ```
//!
//! on interior nodes, with `Ds` the diagonal of nodal transfer coefficients.
//! Unknowns are interleaved per node as `[u1_p, u2_p]` so the coupled matrix
//! keeps the bandwidth of a single 9-point stencil (times two).

use super::assembly::{assemble_exponential, assemble_mass, assemble_stiffness, restrict_interior, to_full, to_interior};
use super::{DualTrajectory, Nonlinearity, Schedule, SolverSettings, TensorSource};
use crate::field::Tensor2;
use crate::grid::StructuredGrid;
use crate::linalg::sparse::norm2;
use crate::linalg::{PreparedSystem, SolverKind, SparseMatrix};
use crate::{Error, Result};

/// Coefficients and loads of the two-continuum model, all nodal.
///
/// Loads are integrated load vectors (`F_i = integral f psi_i`) over all
/// nodes; boundary entries are ignored.
#[derive(Debug, Clone)]
pub struct CoefficientFields {
    pub kappa1: Vec<Tensor2>,
    pub kappa2: Schedule<Vec<Tensor2>>,
    pub sigma: Schedule<Vec<f64>>,
    pub load: Schedule<Vec<f64>>,
    pub load2: Option<Schedule<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct DualSolution {
    pub trajectory: DualTrajectory,
    /// Newton updates taken per step (empty for the linear solver).
    pub newton_iterations: Vec<usize>,
    /// Residual norms per Newton iteration, per step.
    pub newton_residuals: Vec<Vec<f64>>,
}

/// The fixed part of the model (grid, first continuum, loads) with its
/// precomputed matrices. The second-continuum fields are passed per solve.
#[derive(Debug, Clone)]
pub struct DualModel {
    grid: StructuredGrid,
    settings: SolverSettings,
    kappa1: Vec<Tensor2>,
    mass: SparseMatrix,
    mass_int: SparseMatrix,
    a1_int: Option<SparseMatrix>,
    load_int: Schedule<Vec<f64>>,
    load2_int: Option<Schedule<Vec<f64>>>,
}

impl DualModel {
    pub fn new(
        grid: &StructuredGrid,
        settings: SolverSettings,
        kappa1: Vec<Tensor2>,
        load: &Schedule<Vec<f64>>,
        load2: Option<&Schedule<Vec<f64>>>,
    ) -> Result<Self> {
        let steps = settings.stepping.steps;
        load.check_len(steps, "load")?;
        let check = |v: &Vec<f64>| -> Result<Vec<f64>> {
            if v.len() != grid.node_count() {
                return Err(Error::Dimension(format!("load has {} entries for {} nodes", v.len(), grid.node_count())));
            }
            Ok(to_interior(grid, v))
        };
        let load_int = match load {
            Schedule::Constant(v) => Schedule::Constant(check(v)?),
            Schedule::Steps(vs) => Schedule::Steps(vs.iter().map(check).collect::<Result<_>>()?),
        };
        let load2_int = match load2 {
            None => None,
            Some(l) => {
                l.check_len(steps, "second load")?;
                Some(match l {
                    Schedule::Constant(v) => Schedule::Constant(check(v)?),
                    Schedule::Steps(vs) => Schedule::Steps(vs.iter().map(check).collect::<Result<_>>()?),
                })
            }
        };
        let a1 = assemble_stiffness(grid, &kappa1)?;
        let mass = assemble_mass(grid);
        let mass_int = restrict_interior(&mass, grid);
        let a1_int = settings.nonlinearity.is_linear().then(|| restrict_interior(&a1, grid));
        Ok(Self { grid: grid.clone(), settings, kappa1, mass, mass_int, a1_int, load_int, load2_int })
    }

    pub fn from_fields(grid: &StructuredGrid, settings: SolverSettings, coeffs: &CoefficientFields) -> Result<Self> {
        Self::new(grid, settings, coeffs.kappa1.clone(), &coeffs.load, coeffs.load2.as_ref())
    }

    pub fn grid(&self) -> &StructuredGrid {
        &self.grid
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    pub fn steps(&self) -> usize {
        self.settings.stepping.steps
    }

    pub fn tau(&self) -> f64 {
        self.settings.stepping.tau
    }

    /// Full mass matrix over all nodes.
    pub fn mass(&self) -> &SparseMatrix {
        &self.mass
    }

    pub fn mass_interior(&self) -> &SparseMatrix {
        &self.mass_int
    }

    pub fn kappa1(&self) -> &[Tensor2] {
        &self.kappa1
    }

    pub fn interior_len(&self) -> usize {
        self.mass_int.dim()
    }

    /// Second-continuum stiffness on interior nodes.
    pub fn stiffness2(&self, kappa2: &[Tensor2]) -> Result<SparseMatrix> {
        Ok(restrict_interior(&assemble_stiffness(&self.grid, kappa2)?, &self.grid))
    }

    /// First-continuum stiffness and its Jacobian at `u1` (interior values).
    fn stiffness1(&self, u1: &[f64]) -> (SparseMatrix, SparseMatrix) {
        match (self.settings.nonlinearity, &self.a1_int) {
            (Nonlinearity::Linear, Some(a)) => (a.clone(), a.clone()),
            (Nonlinearity::Exponential { beta }, _) => {
                let (a, j) = assemble_exponential(&self.grid, TensorSource::Nodal(&self.kappa1), beta, &to_full(&self.grid, u1));
                (restrict_interior(&a, &self.grid), restrict_interior(&j, &self.grid))
            }
            (Nonlinearity::Linear, None) => unreachable!("linear stiffness is precomputed"),
        }
    }

    fn sigma_interior(&self, sigma: &[f64]) -> Result<Vec<f64>> {
        if sigma.len() != self.grid.node_count() {
            return Err(Error::Dimension(format!("sigma has {} entries for {} nodes", sigma.len(), self.grid.node_count())));
        }
        if let Some(i) = sigma.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite(format!("sigma at node {i}")));
        }
        Ok(to_interior(&self.grid, sigma))
    }

    /// Interleaved coupled matrix for given first/second stiffness blocks.
    pub fn coupled_matrix(&self, a1: &SparseMatrix, a2: &SparseMatrix, sigma_int: &[f64]) -> SparseMatrix {
        let n = self.mass_int.dim();
        let inv_tau = 1.0 / self.tau();
        let mut t = Vec::with_capacity(4 * self.mass_int.nnz() + a1.nnz() + a2.nnz());
        for (i, j, m) in self.mass_int.triplets() {
            let s = sigma_int[i] * m;
            t.push((2 * i, 2 * j, m * inv_tau + s));
            t.push((2 * i, 2 * j + 1, -s));
            t.push((2 * i + 1, 2 * j, -s));
            t.push((2 * i + 1, 2 * j + 1, m * inv_tau + s));
        }
        for (i, j, a) in a1.triplets() {
            t.push((2 * i, 2 * j, a));
        }
        for (i, j, a) in a2.triplets() {
            t.push((2 * i + 1, 2 * j + 1, a));
        }
        SparseMatrix::from_triplets(2 * n, t)
    }

    /// `M/tau + A + Ds M` on interior nodes.
    fn block_matrix(&self, a: &SparseMatrix, sigma_int: &[f64]) -> SparseMatrix {
        let inv_tau = 1.0 / self.tau();
        let mut t: Vec<_> = self.mass_int.triplets().map(|(i, j, m)| (i, j, m * (inv_tau + sigma_int[i]))).collect();
        t.extend(a.triplets());
        SparseMatrix::from_triplets(self.mass_int.dim(), t)
    }

    fn load_at(&self, step: usize) -> (&[f64], Option<&[f64]>) {
        (self.load_int.at(step), self.load2_int.as_ref().map(|l| l.at(step).as_slice()))
    }

    /// Jacobian of step `n` at the stored state: the step matrix itself for
    /// the linear model, the full Newton matrix at the converged state
    /// otherwise.
    pub fn step_jacobian(
        &self,
        kappa2: &Schedule<Vec<Tensor2>>,
        sigma: &Schedule<Vec<f64>>,
        traj: &DualTrajectory,
        n: usize,
    ) -> Result<SparseMatrix> {
        let a2 = self.stiffness2(kappa2.at(n))?;
        let s = self.sigma_interior(sigma.at(n))?;
        let (_, j1) = self.stiffness1(&to_interior(&self.grid, traj.u1(n)));
        Ok(self.coupled_matrix(&j1, &a2, &s))
    }

    pub fn solve(&self, kappa2: &Schedule<Vec<Tensor2>>, sigma: &Schedule<Vec<f64>>) -> Result<DualSolution> {
        let steps = self.steps();
        kappa2.check_len(steps, "kappa2")?;
        sigma.check_len(steps, "sigma")?;
        match self.settings.nonlinearity {
            Nonlinearity::Linear => self.solve_linear(kappa2, sigma),
            Nonlinearity::Exponential { .. } => self.solve_newton(kappa2, sigma),
        }
    }

    fn solve_linear(&self, kappa2: &Schedule<Vec<Tensor2>>, sigma: &Schedule<Vec<f64>>) -> Result<DualSolution> {
        let n_int = self.interior_len();
        let inv_tau = 1.0 / self.tau();
        let fixed = kappa2.is_constant() && sigma.is_constant();
        let a1 = self.a1_int.as_ref().expect("linear stiffness");
        let mut system: Option<PreparedSystem> = None;
        let mut u1 = vec![0.0; n_int];
        let mut u2 = vec![0.0; n_int];
        let (mut out1, mut out2) = (Vec::with_capacity(self.steps()), Vec::with_capacity(self.steps()));
        for n in 1..=self.steps() {
            let mut run = || -> Result<()> {
                if system.is_none() || !fixed {
                    let a2 = self.stiffness2(kappa2.at(n))?;
                    let s = self.sigma_interior(sigma.at(n))?;
                    system = Some(PreparedSystem::new(self.coupled_matrix(a1, &a2, &s), self.settings.linear)?);
                }
                let mu1 = self.mass_int.matvec(&u1);
                let mu2 = self.mass_int.matvec(&u2);
                let (f1, f2) = self.load_at(n);
                let mut rhs = vec![0.0; 2 * n_int];
                for p in 0..n_int {
                    rhs[2 * p] = mu1[p] * inv_tau + f1[p];
                    rhs[2 * p + 1] = mu2[p] * inv_tau + f2.map_or(0.0, |f| f[p]);
                }
                let x = system.as_ref().unwrap().solve(&rhs)?;
                if let Some(i) = x.iter().position(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!("solution entry {i}")));
                }
                for p in 0..n_int {
                    u1[p] = x[2 * p];
                    u2[p] = x[2 * p + 1];
                }
                Ok(())
            };
            run().map_err(|e| e.at_step(n))?;
            out1.push(to_full(&self.grid, &u1));
            out2.push(to_full(&self.grid, &u2));
        }
        Ok(DualSolution {
            trajectory: DualTrajectory::from_parts(&self.grid, self.tau(), out1, out2),
            newton_iterations: Vec::new(),
            newton_residuals: Vec::new(),
        })
    }

    /// Partitioned Newton: for the current `u1` solve the linear `u2`
    /// equation, evaluate the residual of the whole step, then correct `u1`
    /// with the first-continuum Jacobian.
    fn solve_newton(&self, kappa2: &Schedule<Vec<Tensor2>>, sigma: &Schedule<Vec<f64>>) -> Result<DualSolution> {
        let n_int = self.interior_len();
        let inv_tau = 1.0 / self.tau();
        let newton = self.settings.newton;
        let mut u1 = vec![0.0; n_int];
        let mut u2 = vec![0.0; n_int];
        let (mut out1, mut out2) = (Vec::new(), Vec::new());
        let mut iterations = Vec::new();
        let mut residuals = Vec::new();
        for n in 1..=self.steps() {
            let mut run = || -> Result<(usize, Vec<f64>)> {
                let a2 = self.stiffness2(kappa2.at(n))?;
                let s = self.sigma_interior(sigma.at(n))?;
                let m2 = self.block_matrix(&a2, &s);
                let sys2 = PreparedSystem::new(m2.clone(), self.settings.linear)?;
                let (f1, f2) = self.load_at(n);
                let mu1 = self.mass_int.matvec(&u1);
                let mu2 = self.mass_int.matvec(&u2);
                let b1: Vec<f64> = (0..n_int).map(|p| mu1[p] * inv_tau + f1[p]).collect();
                let b2: Vec<f64> = (0..n_int).map(|p| mu2[p] * inv_tau + f2.map_or(0.0, |f| f[p])).collect();
                let mut history = Vec::new();
                for it in 0..=newton.max_iter {
                    let m_u1 = self.mass_int.matvec(&u1);
                    let rhs2: Vec<f64> = (0..n_int).map(|p| b2[p] + s[p] * m_u1[p]).collect();
                    u2 = sys2.solve(&rhs2)?;
                    let (a1, j1) = self.stiffness1(&u1);
                    let m1 = self.block_matrix(&a1, &s);
                    let m_u2 = self.mass_int.matvec(&u2);
                    let r1_lhs = m1.matvec(&u1);
                    let r1: Vec<f64> = (0..n_int).map(|p| r1_lhs[p] - s[p] * m_u2[p] - b1[p]).collect();
                    let r2_lhs = m2.matvec(&u2);
                    let r2: Vec<f64> = (0..n_int).map(|p| r2_lhs[p] - s[p] * m_u1[p] - b2[p]).collect();
                    let r = (norm2(&r1).powi(2) + norm2(&r2).powi(2)).sqrt();
                    let (s1, s2) = (m1.abs_matvec(&u1), m2.abs_matvec(&u2));
                    let scale = (0..n_int)
                        .map(|p| (s1[p] + b1[p].abs()).powi(2) + (s2[p] + b2[p].abs()).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    history.push(r);
                    if !r.is_finite() {
                        return Err(Error::NonFinite(format!("newton residual at iteration {it}")));
                    }
                    if newton.converged(r, scale) {
                        return Ok((it, history));
                    }
                    if it == newton.max_iter {
                        break;
                    }
                    let jac = self.block_matrix(&j1, &s);
                    let neg: Vec<f64> = r1.iter().map(|v| -v).collect();
                    let delta = PreparedSystem::new(jac, self.settings.linear)?.solve(&neg)?;
                    for p in 0..n_int {
                        u1[p] += delta[p];
                    }
                }
                Err(Error::Newton { iterations: newton.max_iter, history })
            };
            let (it, history) = run().map_err(|e| e.at_step(n))?;
            iterations.push(it);
            residuals.push(history);
            out1.push(to_full(&self.grid, &u1));
            out2.push(to_full(&self.grid, &u2));
        }
        Ok(DualSolution {
            trajectory: DualTrajectory::from_parts(&self.grid, self.tau(), out1, out2),
            newton_iterations: iterations,
            newton_residuals: residuals,
        })
    }
}

/// Linear two-continuum solve from a zero initial state.
pub fn solve_dual_linear(
    grid: &StructuredGrid,
    coeffs: &CoefficientFields,
    tau: f64,
    steps: usize,
) -> Result<DualTrajectory> {
    let settings = SolverSettings::linear(tau, steps)?;
    let model = DualModel::from_fields(grid, settings, coeffs)?;
    Ok(model.solve(&coeffs.kappa2, &coeffs.sigma)?.trajectory)
}

/// Two-continuum solve with `kappa1(x, u1) = kappa1(x) exp(beta u1)`.
pub fn solve_dual_nonlinear(
    grid: &StructuredGrid,
    coeffs: &CoefficientFields,
    tau: f64,
    steps: usize,
    beta: f64,
    newton: super::NewtonSettings,
) -> Result<DualSolution> {
    let mut settings = SolverSettings::linear(tau, steps)?.with_nonlinearity(Nonlinearity::exponential(beta));
    settings.newton = newton;
    let model = DualModel::from_fields(grid, settings, coeffs)?;
    model.solve(&coeffs.kappa2, &coeffs.sigma)
}

impl SolverSettings {
    pub fn with_linear_solver(mut self, kind: SolverKind) -> Self {
        self.linear = kind;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::reference::solve_single_continuum;
    use crate::fem::NewtonSettings;
    use approx::assert_abs_diff_eq;

    fn bump(grid: &StructuredGrid) -> Vec<f64> {
        let m = assemble_mass(grid);
        let f: Vec<f64> = grid.node_points().iter().map(|p| 1.0 + p[0] * (1.0 - p[1])).collect();
        m.matvec(&f)
    }

    fn fields(grid: &StructuredGrid, sigma: f64) -> CoefficientFields {
        let n = grid.node_count();
        CoefficientFields {
            kappa1: (0..n).map(|i| Tensor2::new(1.0 + (i % 3) as f64, 0.1, 2.0)).collect(),
            kappa2: Schedule::Constant((0..n).map(|i| Tensor2::diag(0.5 + (i % 5) as f64 * 0.1, 0.7)).collect()),
            sigma: Schedule::Constant((0..n).map(|i| sigma * (1.0 + 0.1 * (i % 4) as f64)).collect()),
            load: Schedule::Constant(bump(grid)),
            load2: None,
        }
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn zero_load_gives_zero() {
        let g = StructuredGrid::new(4, 4).unwrap();
        let mut c = fields(&g, 1.0);
        c.load = Schedule::Constant(vec![0.0; g.node_count()]);
        let t = solve_dual_linear(&g, &c, 0.1, 3).unwrap();
        assert_eq!(t.steps(), 3);
        for n in 1..=3 {
            assert!(t.u1(n).iter().chain(t.u2(n)).all(|&v| v == 0.0));
        }
    }

    #[test]
    fn ten_steps_recorded() {
        let g = StructuredGrid::new(3, 3).unwrap();
        let t = solve_dual_linear(&g, &fields(&g, 1.0), 0.1, 10).unwrap();
        assert_eq!(t.steps(), 10);
        assert_abs_diff_eq!(t.final_time(), 1.0, epsilon = 1e-12);
        for n in 1..=10 {
            for &b in g.boundary_nodes() {
                assert_eq!(t.u1(n)[b], 0.0);
                assert_eq!(t.u2(n)[b], 0.0);
            }
        }
    }

    #[test]
    fn no_transfer_decouples() {
        let g = StructuredGrid::new(5, 4).unwrap();
        let c = fields(&g, 0.0);
        let t = solve_dual_linear(&g, &c, 0.05, 4).unwrap();
        let single = solve_single_continuum(
            &g,
            TensorSource::Nodal(&c.kappa1),
            &c.load,
            SolverSettings::linear(0.05, 4).unwrap(),
        )
        .unwrap();
        for n in 1..=4 {
            assert!(max_diff(t.u1(n), &single.steps[n - 1]) < 1e-13);
            assert!(t.u2(n).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn swapping_continua_relabels_solution() {
        let g = StructuredGrid::new(4, 5).unwrap();
        let c = fields(&g, 2.0);
        let zero = Schedule::Constant(vec![0.0; g.node_count()]);
        let swapped = CoefficientFields {
            kappa1: c.kappa2.at(1).clone(),
            kappa2: Schedule::Constant(c.kappa1.clone()),
            sigma: c.sigma.clone(),
            load: zero,
            load2: Some(c.load.clone()),
        };
        let a = solve_dual_linear(&g, &c, 0.1, 3).unwrap();
        let b = solve_dual_linear(&g, &swapped, 0.1, 3).unwrap();
        for n in 1..=3 {
            assert!(max_diff(a.u1(n), b.u2(n)) < 1e-12);
            assert!(max_diff(a.u2(n), b.u1(n)) < 1e-12);
        }
    }

    #[test]
    fn energy_decays_without_source() {
        let g = StructuredGrid::new(6, 6).unwrap();
        let mut c = fields(&g, 0.0);
        c.sigma = Schedule::Constant(vec![3.0; g.node_count()]);
        let mut loads = vec![vec![0.0; g.node_count()]; 8];
        loads[0] = bump(&g);
        c.load = Schedule::Steps(loads);
        let t = solve_dual_linear(&g, &c, 0.05, 8).unwrap();
        let m = assemble_mass(&g);
        let energy = |n: usize| {
            let e = |u: &[f64]| crate::linalg::sparse::dot(u, &m.matvec(u));
            e(t.u1(n)) + e(t.u2(n))
        };
        for n in 2..8 {
            assert!(energy(n + 1) <= energy(n) * (1.0 + 1e-14), "step {n}");
        }
    }

    #[test]
    fn long_time_limit_is_steady_state() {
        let g = StructuredGrid::new(4, 4).unwrap();
        let c = fields(&g, 1.5);
        let t = solve_dual_linear(&g, &c, 2.0, 120).unwrap();
        let model = DualModel::from_fields(&g, SolverSettings::linear(1.0, 1).unwrap(), &c).unwrap();
        // steady operator: drop the mass/tau terms
        let a1 = model.a1_int.clone().unwrap();
        let a2 = model.stiffness2(c.kappa2.at(1)).unwrap();
        let s = to_interior(&g, c.sigma.at(1));
        let k = model.coupled_matrix(&a1, &a2, &s);
        let big_tau = k.triplets().map(|(i, j, v)| {
            let m = if i % 2 == j % 2 { model.mass_int.get(i / 2, j / 2) } else { 0.0 };
            (i, j, v - m / model.tau())
        });
        let steady = SparseMatrix::from_triplets(k.dim(), big_tau.collect());
        let f = to_interior(&g, c.load.at(1));
        let rhs: Vec<f64> = f.iter().flat_map(|&v| [v, 0.0]).collect();
        let x = crate::linalg::BandedLu::factor(&steady).unwrap().solve(&rhs);
        let u1 = to_interior(&g, t.u1(120));
        let u2 = to_interior(&g, t.u2(120));
        for p in 0..u1.len() {
            assert_abs_diff_eq!(u1[p], x[2 * p], epsilon = 1e-10);
            assert_abs_diff_eq!(u2[p], x[2 * p + 1], epsilon = 1e-10);
        }
    }

    #[test]
    fn newton_without_nonlinearity_matches_linear() {
        let g = StructuredGrid::new(5, 5).unwrap();
        let c = fields(&g, 1.0);
        let lin = solve_dual_linear(&g, &c, 0.1, 4).unwrap();
        let nl = solve_dual_nonlinear(&g, &c, 0.1, 4, 0.0, NewtonSettings::default()).unwrap();
        for n in 1..=4 {
            assert!(max_diff(lin.u1(n), nl.trajectory.u1(n)) < 1e-8);
            assert!(max_diff(lin.u2(n), nl.trajectory.u2(n)) < 1e-8);
        }
    }

    #[test]
    fn linear_uncoupled_newton_needs_one_update() {
        let g = StructuredGrid::new(5, 5).unwrap();
        let c = fields(&g, 0.0);
        let nl = solve_dual_nonlinear(&g, &c, 0.1, 3, 0.0, NewtonSettings::default()).unwrap();
        assert_eq!(nl.newton_iterations, vec![1, 1, 1]);
    }

    #[test]
    fn weak_nonlinearity_converges_quickly() {
        let g = StructuredGrid::new(6, 6).unwrap();
        let c = fields(&g, 1.0);
        let nl = solve_dual_nonlinear(&g, &c, 0.01, 5, 0.5, NewtonSettings::default()).unwrap();
        assert!(nl.newton_iterations.iter().all(|&k| k <= 5), "{:?}", nl.newton_iterations);
        for h in &nl.newton_residuals {
            assert!(*h.last().unwrap() < 1e-10);
        }
    }

    #[test]
    fn iterative_solver_agrees_with_direct() {
        let g = StructuredGrid::new(5, 4).unwrap();
        let c = fields(&g, 1.0);
        let direct = solve_dual_linear(&g, &c, 0.1, 3).unwrap();
        let settings = SolverSettings::linear(0.1, 3)
            .unwrap()
            .with_linear_solver(SolverKind::Bicgstab { tol: 1e-12, max_iter: 0 });
        let model = DualModel::from_fields(&g, settings, &c).unwrap();
        let it = model.solve(&c.kappa2, &c.sigma).unwrap().trajectory;
        for n in 1..=3 {
            assert!(max_diff(direct.u1(n), it.u1(n)) < 1e-9);
        }
    }

    #[test]
    fn step_failure_carries_index() {
        let g = StructuredGrid::new(3, 3).unwrap();
        let mut c = fields(&g, 1.0);
        let mut sig = vec![vec![1.0; g.node_count()]; 3];
        sig[1][5] = f64::NAN;
        c.sigma = Schedule::Steps(sig);
        match solve_dual_linear(&g, &c, 0.1, 3) {
            Err(Error::Step { step, .. }) => assert_eq!(step, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
