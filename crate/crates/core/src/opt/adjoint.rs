//! Backward-in-time adjoint solves and the coefficient cotangents they yield.
//!
//! Both routines return cotangents of the loss with respect to the nodal
//! second-continuum tensor entries and the nodal transfer coefficient at
//! every step. Pulling those back through the networks is left to the
//! caller.

use super::data::TrustedData;
use super::loss::{denominator, loss_and_cotangents};
use crate::fem::{stiffness_sensitivity, to_full, to_interior, DualModel, DualTrajectory, Schedule};
use crate::field::Tensor2;
use crate::linalg::PreparedSystem;
use crate::{Error, Result};

/// Per-step loss cotangents on nodal coefficients, steps `1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientCotangents {
    pub kappa2: Vec<Vec<[f64; 3]>>,
    pub sigma: Vec<Vec<f64>>,
}

impl CoefficientCotangents {
    pub fn zeros(steps: usize, nodes: usize) -> Self {
        Self { kappa2: vec![vec![[0.0; 3]; nodes]; steps], sigma: vec![vec![0.0; nodes]; steps] }
    }

    /// Sum over steps, for coefficients that do not change in time.
    pub fn summed(&self) -> (Vec<[f64; 3]>, Vec<f64>) {
        let nodes = self.sigma.first().map_or(0, Vec::len);
        let mut k = vec![[0.0; 3]; nodes];
        let mut s = vec![0.0; nodes];
        for (ks, ss) in self.kappa2.iter().zip(&self.sigma) {
            for i in 0..nodes {
                for c in 0..3 {
                    k[i][c] += ks[i][c];
                }
                s[i] += ss[i];
            }
        }
        (k, s)
    }
}

#[derive(Debug, Clone)]
pub struct AdjointResult {
    pub loss: f64,
    /// Adjoint states in the same layout as the forward trajectory.
    pub adjoint: DualTrajectory,
    pub cotangents: CoefficientCotangents,
}

fn check(model: &DualModel, traj: &DualTrajectory, data: &TrustedData) -> Result<()> {
    let g = model.grid();
    if traj.shape() != (g.nx(), g.ny()) || !data.matches(g) {
        return Err(Error::Dimension("trajectory, data and model grids differ".into()));
    }
    if traj.steps() != model.steps() || data.steps() != model.steps() {
        return Err(Error::Dimension(format!(
            "{} model steps, {} trajectory steps, {} data steps",
            model.steps(),
            traj.steps(),
            data.steps()
        )));
    }
    Ok(())
}

/// Accumulate `scale * d(a^T S_n x_n)/d(coefficients)` into step `n` of `out`,
/// where `a` is an adjoint pair and `x` the forward state (full nodal).
fn accumulate(model: &DualModel, a1: &[f64], a2: &[f64], u1: &[f64], u2: &[f64], scale: f64, k_out: &mut [[f64; 3]], s_out: &mut [f64]) {
    let grid = model.grid();
    let mut dk = vec![[0.0; 3]; grid.node_count()];
    stiffness_sensitivity(grid, a2, u2, &mut dk);
    for (o, d) in k_out.iter_mut().zip(&dk) {
        for c in 0..3 {
            o[c] += scale * d[c];
        }
    }
    let diff: Vec<f64> = u1.iter().zip(u2).map(|(a, b)| a - b).collect();
    let m_diff = model.mass().matvec(&diff);
    for &i in grid.interior_nodes() {
        s_out[i] += scale * (a1[i] - a2[i]) * m_diff[i];
    }
}

fn split(grid: &crate::grid::StructuredGrid, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len() / 2;
    let a: Vec<f64> = (0..n).map(|p| x[2 * p]).collect();
    let b: Vec<f64> = (0..n).map(|p| x[2 * p + 1]).collect();
    (to_full(grid, &a), to_full(grid, &b))
}

/// Exact gradient of the discrete loss through the backward-Euler scheme.
///
/// With `S_n` the Jacobian of step `n` at the converged state, solves
/// `S_n^T mu_n = dL/dx_n + (M/tau) mu_{n+1}` backward from `mu_{N+1} = 0`
/// and returns `dL/dc = -sum_n mu_n^T (dS_n/dc) x_n`.
pub fn discrete_adjoint(
    model: &DualModel,
    kappa2: &Schedule<Vec<Tensor2>>,
    sigma: &Schedule<Vec<f64>>,
    traj: &DualTrajectory,
    data: &TrustedData,
) -> Result<AdjointResult> {
    check(model, traj, data)?;
    let grid = model.grid();
    let steps = model.steps();
    let n_int = model.interior_len();
    let inv_tau = 1.0 / model.tau();
    let (loss, g) = loss_and_cotangents(model.mass(), traj.u1_steps(), data)?;
    let reuse = model.settings().nonlinearity.is_linear() && kappa2.is_constant() && sigma.is_constant();
    let mut system: Option<PreparedSystem> = None;
    let mut next = vec![0.0; 2 * n_int];
    let mut mu1 = vec![Vec::new(); steps];
    let mut mu2 = vec![Vec::new(); steps];
    let mut cot = CoefficientCotangents::zeros(steps, grid.node_count());
    for n in (1..=steps).rev() {
        let mut run = || -> Result<Vec<f64>> {
            if system.is_none() || !reuse {
                let jac = model.step_jacobian(kappa2, sigma, traj, n)?;
                system = Some(PreparedSystem::new(jac, model.settings().linear)?);
            }
            let gi = to_interior(grid, &g[n - 1]);
            let (n1, n2): (Vec<f64>, Vec<f64>) = (0..n_int).map(|p| (next[2 * p], next[2 * p + 1])).unzip();
            let m1 = model.mass_interior().matvec(&n1);
            let m2 = model.mass_interior().matvec(&n2);
            let mut rhs = vec![0.0; 2 * n_int];
            for p in 0..n_int {
                rhs[2 * p] = gi[p] + inv_tau * m1[p];
                rhs[2 * p + 1] = inv_tau * m2[p];
            }
            let mu = system.as_ref().unwrap().solve_transpose(&rhs)?;
            if let Some(i) = mu.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("adjoint entry {i}")));
            }
            Ok(mu)
        };
        let mu = run().map_err(|e| e.at_step(n))?;
        let (a1, a2) = split(grid, &mu);
        accumulate(model, &a1, &a2, traj.u1(n), traj.u2(n), -1.0, &mut cot.kappa2[n - 1], &mut cot.sigma[n - 1]);
        mu1[n - 1] = a1;
        mu2[n - 1] = a2;
        next = mu;
    }
    Ok(AdjointResult { loss, adjoint: DualTrajectory::from_parts(grid, model.tau(), mu1, mu2), cotangents: cot })
}

/// Gradient from the discretized continuous adjoint equation (linear model
/// only).
///
/// Marches `(M/tau + K) lam_k = M lam_{k+1} / tau - m M (m (u1_k - U_k))`
/// backward from `lam_N = 0` with the forward operator `K`, then applies
/// the rectangle rule over steps `1..N`. The scale `200 / D` converts the
/// time integral of the squared mismatch into the discrete percentage loss;
/// `t = 0` contributes nothing.
pub fn continuous_adjoint(
    model: &DualModel,
    kappa2: &Schedule<Vec<Tensor2>>,
    sigma: &Schedule<Vec<f64>>,
    traj: &DualTrajectory,
    data: &TrustedData,
) -> Result<AdjointResult> {
    if !model.settings().nonlinearity.is_linear() {
        return Err(Error::Config("the continuous adjoint is only available for the linear model".into()));
    }
    check(model, traj, data)?;
    let grid = model.grid();
    let steps = model.steps();
    let n_int = model.interior_len();
    let inv_tau = 1.0 / model.tau();
    let (loss, _) = loss_and_cotangents(model.mass(), traj.u1_steps(), data)?;
    let scale = 200.0 / denominator(model.mass(), data);
    let reuse = kappa2.is_constant() && sigma.is_constant();
    let mut system: Option<PreparedSystem> = None;
    let zero = vec![0.0; grid.node_count()];
    let mut lam1 = vec![zero.clone(); steps];
    let mut lam2 = vec![zero; steps];
    let mut next = vec![0.0; 2 * n_int];
    let mut cot = CoefficientCotangents::zeros(steps, grid.node_count());
    for k in (1..steps).rev() {
        let mut run = || -> Result<Vec<f64>> {
            if system.is_none() || !reuse {
                let op = model.step_jacobian(kappa2, sigma, traj, k)?;
                system = Some(PreparedSystem::new(op, model.settings().linear)?);
            }
            let mask = data.mask(k);
            let e: Vec<f64> = (0..grid.node_count())
                .map(|i| if mask[i] { traj.u1(k)[i] - data.values(k)[i] } else { 0.0 })
                .collect();
            let me = model.mass().matvec(&e);
            let src: Vec<f64> = me.iter().zip(mask).map(|(&v, &m)| if m { v } else { 0.0 }).collect();
            let src = to_interior(grid, &src);
            let (n1, n2): (Vec<f64>, Vec<f64>) = (0..n_int).map(|p| (next[2 * p], next[2 * p + 1])).unzip();
            let m1 = model.mass_interior().matvec(&n1);
            let m2 = model.mass_interior().matvec(&n2);
            let mut rhs = vec![0.0; 2 * n_int];
            for p in 0..n_int {
                rhs[2 * p] = inv_tau * m1[p] - src[p];
                rhs[2 * p + 1] = inv_tau * m2[p];
            }
            let lam = system.as_ref().unwrap().solve(&rhs)?;
            if let Some(i) = lam.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("adjoint entry {i}")));
            }
            Ok(lam)
        };
        let lam = run().map_err(|e| e.at_step(k))?;
        let (a1, a2) = split(grid, &lam);
        accumulate(model, &a1, &a2, traj.u1(k), traj.u2(k), scale, &mut cot.kappa2[k - 1], &mut cot.sigma[k - 1]);
        lam1[k - 1] = a1;
        lam2[k - 1] = a2;
        next = lam;
    }
    Ok(AdjointResult { loss, adjoint: DualTrajectory::from_parts(grid, model.tau(), lam1, lam2), cotangents: cot })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_mass, Nonlinearity, SolverSettings};
    use crate::grid::StructuredGrid;
    use crate::opt::data::Provenance;
    use crate::opt::loss::relative_l2_loss;

    struct Case {
        model: DualModel,
        kappa2: Vec<Tensor2>,
        sigma: Vec<f64>,
        data: TrustedData,
    }

    fn case(nx: usize, steps: usize, tau: f64, nl: Nonlinearity) -> Case {
        let grid = StructuredGrid::new(nx, nx).unwrap();
        let pts = grid.node_points();
        let mass = assemble_mass(&grid);
        let f: Vec<f64> = pts.iter().map(|p| 1.0 + 2.0 * p[0] + p[1] * p[1]).collect();
        let load = mass.matvec(&f).iter().map(|v| 10.0 * v).collect();
        let kappa1 = pts.iter().map(|p| Tensor2::diag(1.0 + p[0], 0.8 + p[1] * p[0])).collect();
        let settings = SolverSettings::linear(tau, steps).unwrap().with_nonlinearity(nl);
        let model = DualModel::new(&grid, settings, kappa1, &Schedule::Constant(load), None).unwrap();
        let kappa2: Vec<Tensor2> = pts.iter().map(|p| Tensor2::diag(0.3 + p[1], 0.5 + 0.5 * p[0])).collect();
        let sigma: Vec<f64> = pts.iter().map(|p| 2.0 + 3.0 * p[0] - p[1]).collect();
        // data from a slightly different model
        let k_true: Vec<Tensor2> = kappa2.iter().map(|k| k.scale(1.3)).collect();
        let s_true: Vec<f64> = sigma.iter().map(|s| s * 0.7 + 0.5).collect();
        let truth = model.solve(&Schedule::Constant(k_true), &Schedule::Constant(s_true)).unwrap().trajectory;
        let data = TrustedData::new(&grid, tau, truth.u1_steps().to_vec(), Provenance::default()).unwrap();
        Case { model, kappa2, sigma, data }
    }

    fn loss_at(c: &Case, kappa2: &[Tensor2], sigma: &[f64]) -> f64 {
        let t = c.model.solve(&Schedule::Constant(kappa2.to_vec()), &Schedule::Constant(sigma.to_vec())).unwrap().trajectory;
        relative_l2_loss(c.model.mass(), t.u1_steps(), &c.data).unwrap()
    }

    fn check_against_fd(c: &Case, grad: &(Vec<[f64; 3]>, Vec<f64>), rel: f64) {
        let h = 1e-6;
        let grid = c.model.grid();
        for &i in grid.interior_nodes().iter().step_by(2) {
            let mut sp = c.sigma.clone();
            let mut sm = c.sigma.clone();
            sp[i] += h;
            sm[i] -= h;
            let fd = (loss_at(c, &c.kappa2, &sp) - loss_at(c, &c.kappa2, &sm)) / (2.0 * h);
            assert!((fd - grad.1[i]).abs() <= rel * fd.abs().max(1e-6), "sigma {i}: fd {fd} vs {}", grad.1[i]);
            for comp in [0usize, 2] {
                let mut kp = c.kappa2.clone();
                let mut km = c.kappa2.clone();
                if comp == 0 {
                    kp[i].k11 += h;
                    km[i].k11 -= h;
                } else {
                    kp[i].k22 += h;
                    km[i].k22 -= h;
                }
                let fd = (loss_at(c, &kp, &c.sigma) - loss_at(c, &km, &c.sigma)) / (2.0 * h);
                let g = grad.0[i][comp];
                assert!((fd - g).abs() <= rel * fd.abs().max(1e-6), "kappa {i}/{comp}: fd {fd} vs {g}");
            }
        }
    }

    fn discrete(c: &Case) -> AdjointResult {
        let k = Schedule::Constant(c.kappa2.clone());
        let s = Schedule::Constant(c.sigma.clone());
        let t = c.model.solve(&k, &s).unwrap().trajectory;
        discrete_adjoint(&c.model, &k, &s, &t, &c.data).unwrap()
    }

    #[test]
    fn discrete_matches_finite_differences() {
        let c = case(4, 3, 0.1, Nonlinearity::Linear);
        let r = discrete(&c);
        check_against_fd(&c, &r.cotangents.summed(), 1e-6);
    }

    #[test]
    fn discrete_nonlinear_matches_finite_differences() {
        let c = case(3, 2, 0.1, Nonlinearity::exponential(0.5));
        let r = discrete(&c);
        check_against_fd(&c, &r.cotangents.summed(), 1e-5);
    }

    #[test]
    fn time_varying_coefficients() {
        let c = case(3, 3, 0.1, Nonlinearity::Linear);
        let ks: Vec<Vec<Tensor2>> = (0..3).map(|n| c.kappa2.iter().map(|k| k.scale(1.0 + 0.2 * n as f64)).collect()).collect();
        let ss: Vec<Vec<f64>> = (0..3).map(|n| c.sigma.iter().map(|s| s - n as f64).collect()).collect();
        let (k, s) = (Schedule::Steps(ks.clone()), Schedule::Steps(ss.clone()));
        let t = c.model.solve(&k, &s).unwrap().trajectory;
        let r = discrete_adjoint(&c.model, &k, &s, &t, &c.data).unwrap();
        let loss = |ss: &Vec<Vec<f64>>| {
            let t = c.model.solve(&k, &Schedule::Steps(ss.clone())).unwrap().trajectory;
            relative_l2_loss(c.model.mass(), t.u1_steps(), &c.data).unwrap()
        };
        let i = c.model.grid().node_index(1, 2);
        for n in 0..3 {
            let (mut p, mut m) = (ss.clone(), ss.clone());
            p[n][i] += 1e-6;
            m[n][i] -= 1e-6;
            let fd = (loss(&p) - loss(&m)) / 2e-6;
            assert!((fd - r.cotangents.sigma[n][i]).abs() < 1e-6 * fd.abs().max(1e-6));
        }
    }

    #[test]
    fn exact_fit_has_zero_adjoint() {
        let c = case(3, 2, 0.1, Nonlinearity::Linear);
        let k = Schedule::Constant(c.kappa2.clone());
        let s = Schedule::Constant(c.sigma.clone());
        let t = c.model.solve(&k, &s).unwrap().trajectory;
        let data = TrustedData::new(c.model.grid(), 0.1, t.u1_steps().to_vec(), Provenance::default()).unwrap();
        for r in [discrete_adjoint(&c.model, &k, &s, &t, &data).unwrap(), continuous_adjoint(&c.model, &k, &s, &t, &data).unwrap()] {
            assert_eq!(r.loss, 0.0);
            assert!(r.adjoint.u1_steps().iter().chain(r.adjoint.u2_steps()).flatten().all(|&v| v == 0.0));
            let (gk, gs) = r.cotangents.summed();
            assert!(gs.iter().all(|&v| v == 0.0) && gk.iter().flatten().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn zero_sigma_decouples_the_adjoint() {
        let mut c = case(3, 3, 0.1, Nonlinearity::Linear);
        c.sigma = vec![0.0; c.sigma.len()];
        let k = Schedule::Constant(c.kappa2.clone());
        let s = Schedule::Constant(c.sigma.clone());
        let t = c.model.solve(&k, &s).unwrap().trajectory;
        for r in [discrete_adjoint(&c.model, &k, &s, &t, &c.data).unwrap(), continuous_adjoint(&c.model, &k, &s, &t, &c.data).unwrap()] {
            assert!(r.adjoint.u2_steps().iter().flatten().all(|&v| v == 0.0));
            // u2 cannot reach the loss, so kappa2 has no influence
            assert!(r.cotangents.summed().0.iter().flatten().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn equal_states_kill_the_sigma_term() {
        let c = case(3, 2, 0.1, Nonlinearity::Linear);
        let k = Schedule::Constant(c.kappa2.clone());
        let s = Schedule::Constant(c.sigma.clone());
        let t = c.model.solve(&k, &s).unwrap().trajectory;
        let same = DualTrajectory::from_parts(c.model.grid(), 0.1, t.u1_steps().to_vec(), t.u1_steps().to_vec());
        let r = continuous_adjoint(&c.model, &k, &s, &same, &c.data).unwrap();
        assert!(r.cotangents.summed().1.iter().all(|&v| v == 0.0));
    }

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        d / (a.iter().map(|x| x * x).sum::<f64>().sqrt() * b.iter().map(|x| x * x).sum::<f64>().sqrt())
    }

    fn flat(g: &(Vec<[f64; 3]>, Vec<f64>)) -> Vec<f64> {
        g.0.iter().flat_map(|k| [k[0], k[2]]).chain(g.1.iter().copied()).collect()
    }

    #[test]
    fn continuous_approaches_discrete_as_tau_shrinks() {
        let mut gaps = Vec::new();
        for steps in [4usize, 8, 16, 32] {
            let c = case(3, steps, 0.4 / steps as f64, Nonlinearity::Linear);
            let k = Schedule::Constant(c.kappa2.clone());
            let s = Schedule::Constant(c.sigma.clone());
            let t = c.model.solve(&k, &s).unwrap().trajectory;
            let d = flat(&discrete_adjoint(&c.model, &k, &s, &t, &c.data).unwrap().cotangents.summed());
            let g = flat(&continuous_adjoint(&c.model, &k, &s, &t, &c.data).unwrap().cotangents.summed());
            assert!(cosine(&d, &g) > 0.9);
            let diff: f64 = d.iter().zip(&g).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            gaps.push(diff / d.iter().map(|x| x * x).sum::<f64>().sqrt());
        }
        for w in gaps.windows(2) {
            assert!(w[1] < w[0], "{gaps:?}");
        }
        assert!(gaps[3] < 0.5 * gaps[0], "{gaps:?}");
    }

    #[test]
    fn continuous_mode_rejects_nonlinear_models() {
        let c = case(3, 2, 0.1, Nonlinearity::exponential(0.1));
        let k = Schedule::Constant(c.kappa2.clone());
        let s = Schedule::Constant(c.sigma.clone());
        let t = c.model.solve(&k, &s).unwrap().trajectory;
        assert!(matches!(continuous_adjoint(&c.model, &k, &s, &t, &c.data), Err(Error::Config(_))));
    }
}
