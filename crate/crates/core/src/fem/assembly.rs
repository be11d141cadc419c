//! Q1 mass and stiffness assembly with 2x2 Gauss quadrature.
//!
//! Matrices are assembled over all nodes; [`restrict_interior`] removes the
//! Dirichlet rows and columns afterwards.

use crate::field::Tensor2;
use crate::grid::StructuredGrid;
use crate::linalg::SparseMatrix;
use crate::{Error, Result};

/// Bilinear element on an `hx x hy` rectangle, corners counter-clockwise
/// from the lower left, evaluated at the four Gauss points.
#[derive(Debug, Clone, Copy)]
pub struct Q1Element {
    /// Shape values `n[q][a]`.
    pub n: [[f64; 4]; 4],
    /// Physical gradients `grad[q][a] = [dN/dx, dN/dy]`.
    pub grad: [[[f64; 2]; 4]; 4],
    /// Quadrature weight (identical for all points).
    pub w: f64,
}

impl Q1Element {
    pub fn new(hx: f64, hy: f64) -> Self {
        let g = 0.5 / 3f64.sqrt();
        let pts = [(0.5 - g, 0.5 - g), (0.5 + g, 0.5 - g), (0.5 + g, 0.5 + g), (0.5 - g, 0.5 + g)];
        let mut n = [[0.0; 4]; 4];
        let mut grad = [[[0.0; 2]; 4]; 4];
        for (q, &(s, t)) in pts.iter().enumerate() {
            n[q] = [(1.0 - s) * (1.0 - t), s * (1.0 - t), s * t, (1.0 - s) * t];
            grad[q] = [
                [-(1.0 - t) / hx, -(1.0 - s) / hy],
                [(1.0 - t) / hx, -s / hy],
                [t / hx, s / hy],
                [-t / hx, (1.0 - s) / hy],
            ];
        }
        Self { n, grad, w: hx * hy / 4.0 }
    }

    pub fn for_grid(grid: &StructuredGrid) -> Self {
        Self::new(grid.hx(), grid.hy())
    }

    /// Interpolate nodal values of one element at point `q`.
    #[inline]
    pub fn value(&self, q: usize, local: &[f64; 4]) -> f64 {
        (0..4).map(|a| self.n[q][a] * local[a]).sum()
    }

    #[inline]
    pub fn gradient(&self, q: usize, local: &[f64; 4]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for a in 0..4 {
            g[0] += self.grad[q][a][0] * local[a];
            g[1] += self.grad[q][a][1] * local[a];
        }
        g
    }

    #[inline]
    pub fn tensor(&self, q: usize, local: &[Tensor2; 4]) -> Tensor2 {
        let mut t = Tensor2::default();
        for a in 0..4 {
            t = t + local[a].scale(self.n[q][a]);
        }
        t
    }
}

#[inline]
pub(crate) fn gather<T: Copy>(nodes: &[usize; 4], v: &[T]) -> [T; 4] {
    [v[nodes[0]], v[nodes[1]], v[nodes[2]], v[nodes[3]]]
}

fn scatter(t: &mut Vec<(usize, usize, f64)>, nodes: &[usize; 4], ke: &[[f64; 4]; 4]) {
    for a in 0..4 {
        for b in 0..4 {
            t.push((nodes[a], nodes[b], ke[a][b]));
        }
    }
}

pub fn assemble_mass(grid: &StructuredGrid) -> SparseMatrix {
    let el = Q1Element::for_grid(grid);
    let mut me = [[0.0; 4]; 4];
    for q in 0..4 {
        for a in 0..4 {
            for b in 0..4 {
                me[a][b] += el.w * el.n[q][a] * el.n[q][b];
            }
        }
    }
    let mut t = Vec::with_capacity(16 * grid.cell_count());
    for c in 0..grid.cell_count() {
        scatter(&mut t, &grid.cell_nodes(c), &me);
    }
    SparseMatrix::from_triplets(grid.node_count(), t)
}

fn check_tensors(values: &[Tensor2], what: &str) -> Result<()> {
    if let Some(i) = values.iter().position(|k| !k.is_finite() || !k.is_spd()) {
        return Err(Error::NotSpd(format!("{what} {i}: {:?}", values[i])));
    }
    Ok(())
}

/// Core loop: `kappa(cell, q)` gives the tensor at a quadrature point.
fn assemble_with(grid: &StructuredGrid, mut kappa: impl FnMut(usize, &[usize; 4], usize) -> Tensor2) -> SparseMatrix {
    let el = Q1Element::for_grid(grid);
    let mut t = Vec::with_capacity(16 * grid.cell_count());
    for c in 0..grid.cell_count() {
        let nodes = grid.cell_nodes(c);
        let mut ke = [[0.0; 4]; 4];
        for q in 0..4 {
            let k = kappa(c, &nodes, q).scale(el.w);
            for a in 0..4 {
                for b in a..4 {
                    ke[a][b] += k.bilinear(el.grad[q][a], el.grad[q][b]);
                }
            }
        }
        for a in 0..4 {
            for b in 0..a {
                ke[a][b] = ke[b][a];
            }
        }
        scatter(&mut t, &nodes, &ke);
    }
    SparseMatrix::from_triplets(grid.node_count(), t)
}

/// Stiffness matrix for nodal tensors interpolated bilinearly in each element.
pub fn assemble_stiffness(grid: &StructuredGrid, kappa: &[Tensor2]) -> Result<SparseMatrix> {
    if kappa.len() != grid.node_count() {
        return Err(Error::Dimension(format!("{} nodal tensors for {} nodes", kappa.len(), grid.node_count())));
    }
    check_tensors(kappa, "node")?;
    let el = Q1Element::for_grid(grid);
    Ok(assemble_with(grid, |_, nodes, q| el.tensor(q, &gather(nodes, kappa))))
}

/// Stiffness matrix for a coefficient constant on each cell.
pub fn assemble_stiffness_cells(grid: &StructuredGrid, kappa: &[Tensor2]) -> Result<SparseMatrix> {
    if kappa.len() != grid.cell_count() {
        return Err(Error::Dimension(format!("{} cell tensors for {} cells", kappa.len(), grid.cell_count())));
    }
    check_tensors(kappa, "cell")?;
    Ok(assemble_with(grid, |c, _, _| kappa[c]))
}

/// Where the base tensor of a nonlinear coefficient lives.
#[derive(Debug, Clone, Copy)]
pub enum TensorSource<'a> {
    Nodal(&'a [Tensor2]),
    Cells(&'a [Tensor2]),
}

/// Stiffness `A(u)` and Jacobian `d(A(u) u)/du` for the coefficient
/// `k(x) exp(beta u)`, with `u` interpolated at the quadrature points.
pub fn assemble_exponential(
    grid: &StructuredGrid,
    base: TensorSource<'_>,
    beta: f64,
    u: &[f64],
) -> (SparseMatrix, SparseMatrix) {
    let el = Q1Element::for_grid(grid);
    let mut ta = Vec::with_capacity(16 * grid.cell_count());
    let mut tj = Vec::with_capacity(16 * grid.cell_count());
    for c in 0..grid.cell_count() {
        let nodes = grid.cell_nodes(c);
        let ul = gather(&nodes, u);
        let mut ke = [[0.0; 4]; 4];
        let mut je = [[0.0; 4]; 4];
        for q in 0..4 {
            let k = match base {
                TensorSource::Nodal(v) => el.tensor(q, &gather(&nodes, v)),
                TensorSource::Cells(v) => v[c],
            };
            let g = (beta * el.value(q, &ul)).exp();
            let grad_u = el.gradient(q, &ul);
            for a in 0..4 {
                let flux = k.bilinear(el.grad[q][a], grad_u);
                for b in 0..4 {
                    let kab = el.w * g * k.bilinear(el.grad[q][a], el.grad[q][b]);
                    ke[a][b] += kab;
                    je[a][b] += kab + el.w * beta * g * el.n[q][b] * flux;
                }
            }
        }
        scatter(&mut ta, &nodes, &ke);
        scatter(&mut tj, &nodes, &je);
    }
    let n = grid.node_count();
    (SparseMatrix::from_triplets(n, ta), SparseMatrix::from_triplets(n, tj))
}

/// Derivative of `mu^T A(kappa) u` with respect to each nodal tensor entry
/// `[k11, k12, k22]`, for bilinearly interpolated nodal `kappa`.
pub fn stiffness_sensitivity(grid: &StructuredGrid, mu: &[f64], u: &[f64], out: &mut [[f64; 3]]) {
    let el = Q1Element::for_grid(grid);
    for c in 0..grid.cell_count() {
        let nodes = grid.cell_nodes(c);
        let ml = gather(&nodes, mu);
        if ml.iter().all(|&v| v == 0.0) {
            continue;
        }
        let ul = gather(&nodes, u);
        for q in 0..4 {
            let gm = el.gradient(q, &ml);
            let gu = el.gradient(q, &ul);
            let d = [gm[0] * gu[0], gm[0] * gu[1] + gm[1] * gu[0], gm[1] * gu[1]];
            for a in 0..4 {
                let s = el.w * el.n[q][a];
                let o = &mut out[nodes[a]];
                o[0] += s * d[0];
                o[1] += s * d[1];
                o[2] += s * d[2];
            }
        }
    }
}

/// Load vector `F_a = integral f psi_a` by Gauss quadrature on each element.
pub fn load_from_fn(grid: &StructuredGrid, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let el = Q1Element::for_grid(grid);
    let g = 0.5 / 3f64.sqrt();
    let pts = [(0.5 - g, 0.5 - g), (0.5 + g, 0.5 - g), (0.5 + g, 0.5 + g), (0.5 - g, 0.5 + g)];
    let mut out = vec![0.0; grid.node_count()];
    for c in 0..grid.cell_count() {
        let nodes = grid.cell_nodes(c);
        let (x0, y0) = grid.node_coords(nodes[0]);
        for (q, &(s, t)) in pts.iter().enumerate() {
            let v = el.w * f(x0 + s * grid.hx(), y0 + t * grid.hy());
            for a in 0..4 {
                out[nodes[a]] += v * el.n[q][a];
            }
        }
    }
    out
}

/// Load vector of a point source `amplitude * delta(x - p)`: `F_a = amplitude * psi_a(p)`.
pub fn point_load(grid: &StructuredGrid, x: f64, y: f64, amplitude: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err(Error::InvalidInput(format!("point source ({x}, {y}) outside the domain")));
    }
    let i = ((x / grid.hx()).floor() as usize).min(grid.nx() - 1);
    let j = ((y / grid.hy()).floor() as usize).min(grid.ny() - 1);
    let s = x / grid.hx() - i as f64;
    let t = y / grid.hy() - j as f64;
    let nodes = grid.cell_nodes(grid.cell_index(i, j));
    let shape = [(1.0 - s) * (1.0 - t), s * (1.0 - t), s * t, (1.0 - s) * t];
    let mut out = vec![0.0; grid.node_count()];
    for a in 0..4 {
        out[nodes[a]] += amplitude * shape[a];
    }
    Ok(out)
}

/// Keep only rows and columns of interior nodes, renumbered by interior position.
pub fn restrict_interior(a: &SparseMatrix, grid: &StructuredGrid) -> SparseMatrix {
    let mut t = Vec::with_capacity(a.nnz());
    for (i, j, v) in a.triplets() {
        if let (Some(p), Some(q)) = (grid.interior_position(i), grid.interior_position(j)) {
            t.push((p, q, v));
        }
    }
    SparseMatrix::from_triplets(grid.interior_nodes().len(), t)
}

/// Interior entries of a full nodal vector.
pub fn to_interior(grid: &StructuredGrid, full: &[f64]) -> Vec<f64> {
    grid.interior_nodes().iter().map(|&n| full[n]).collect()
}

/// Full nodal vector with zero boundary values.
pub fn to_full(grid: &StructuredGrid, interior: &[f64]) -> Vec<f64> {
    let mut full = vec![0.0; grid.node_count()];
    for (&n, &v) in grid.interior_nodes().iter().zip(interior) {
        full[n] = v;
    }
    full
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn iso(grid: &StructuredGrid, c: f64) -> Vec<Tensor2> {
        vec![Tensor2::isotropic(c); grid.node_count()]
    }

    #[test]
    fn mass_totals_area() {
        for (nx, ny) in [(1, 1), (3, 2), (10, 10), (7, 4)] {
            let g = StructuredGrid::new(nx, ny).unwrap();
            assert_abs_diff_eq!(assemble_mass(&g).total(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn mass_center_entry_two_by_two() {
        let g = StructuredGrid::new(2, 2).unwrap();
        let m = assemble_mass(&g);
        let c = g.node_index(1, 1);
        // four elements each contributing h^2/9 with h = 1/2
        assert_abs_diff_eq!(m.get(c, c), 4.0 * 0.25 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn unit_square_laplacian_element() {
        let g = StructuredGrid::new(1, 1).unwrap();
        let a = assemble_stiffness(&g, &iso(&g, 1.0)).unwrap();
        // corners 0,1 share an edge; 0,2 are diagonal
        for i in 0..4 {
            assert_abs_diff_eq!(a.get(i, i), 2.0 / 3.0, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(a.get(0, 1), -1.0 / 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(a.get(0, 2), -1.0 / 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(a.get(0, 3), -1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn element_matches_closed_form_oracle() {
        // exact integrals of bilinear gradients on an hx x hy rectangle
        let (hx, hy) = (0.3, 0.7);
        let el = Q1Element::new(hx, hy);
        let mut k = [[0.0; 4]; 4];
        for q in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    k[a][b] += el.w * (el.grad[q][a][0] * el.grad[q][b][0] + el.grad[q][a][1] * el.grad[q][b][1]);
                }
            }
        }
        let (rx, ry) = (hy / hx, hx / hy);
        assert_abs_diff_eq!(k[0][0], (rx + ry) / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(k[0][1], -rx / 3.0 + ry / 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(k[0][3], rx / 6.0 - ry / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(k[0][2], -(rx + ry) / 6.0, epsilon = 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn stiffness_kills_constants_and_is_linear(seed in any::<u64>(), c in 0.1f64..50.0) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = StructuredGrid::new(4, 3).unwrap();
            let k: Vec<Tensor2> = (0..g.node_count()).map(|_| {
                let a = rng.random_range(0.5..5.0);
                let b = rng.random_range(0.5..5.0);
                Tensor2::new(a, rng.random_range(-0.3..0.3), b)
            }).collect();
            let a = assemble_stiffness(&g, &k).unwrap();
            prop_assert!(a.is_symmetric(1e-14));
            for v in a.matvec(&vec![1.0; g.node_count()]) {
                prop_assert!(v.abs() < 1e-12);
            }
            let scaled: Vec<Tensor2> = k.iter().map(|t| t.scale(c)).collect();
            let ac = assemble_stiffness(&g, &scaled).unwrap();
            for (i, j, v) in a.triplets() {
                prop_assert!((ac.get(i, j) - c * v).abs() <= 1e-12 * (c * v).abs().max(1.0));
            }
        }

        #[test]
        fn sensitivity_matches_finite_differences(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = StructuredGrid::new(3, 3).unwrap();
            let n = g.node_count();
            let k: Vec<Tensor2> = (0..n).map(|_| Tensor2::new(rng.random_range(1.0..2.0), 0.1, rng.random_range(1.0..2.0))).collect();
            let mu: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut sens = vec![[0.0; 3]; n];
            stiffness_sensitivity(&g, &mu, &u, &mut sens);
            // the form is linear in kappa, so one-sided differences are exact
            let base = crate::linalg::sparse::dot(&mu, &assemble_stiffness(&g, &k).unwrap().matvec(&u));
            for node in [0, 5, 10] {
                for comp in 0..3 {
                    let mut kp = k.clone();
                    let h = 1e-3;
                    match comp { 0 => kp[node].k11 += h, 1 => kp[node].k12 += h, _ => kp[node].k22 += h }
                    let v = crate::linalg::sparse::dot(&mu, &assemble_stiffness(&g, &kp).unwrap().matvec(&u));
                    prop_assert!(((v - base) / h - sens[node][comp]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn cell_and_nodal_agree_for_constants() {
        let g = StructuredGrid::new(5, 4).unwrap();
        let t = Tensor2::new(2.0, 0.3, 1.5);
        let a = assemble_stiffness(&g, &vec![t; g.node_count()]).unwrap();
        let b = assemble_stiffness_cells(&g, &vec![t; g.cell_count()]).unwrap();
        for (i, j, v) in a.triplets() {
            assert_abs_diff_eq!(b.get(i, j), v, epsilon = 1e-13);
        }
    }

    #[test]
    fn exponential_jacobian_matches_finite_differences() {
        let g = StructuredGrid::new(4, 4).unwrap();
        let k = vec![Tensor2::diag(2.0, 3.0); g.cell_count()];
        let u: Vec<f64> = (0..g.node_count()).map(|i| (i as f64 * 0.7).sin()).collect();
        let beta = 0.5;
        let (a, j) = assemble_exponential(&g, TensorSource::Cells(&k), beta, &u);
        let r = |u: &[f64]| assemble_exponential(&g, TensorSource::Cells(&k), beta, u).0.matvec(u);
        let _ = a;
        let h = 1e-6;
        for col in [0, 7, 12] {
            let mut up = u.clone();
            let mut um = u.clone();
            up[col] += h;
            um[col] -= h;
            let (rp, rm) = (r(&up), r(&um));
            for row in 0..g.node_count() {
                assert_abs_diff_eq!((rp[row] - rm[row]) / (2.0 * h), j.get(row, col), epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn beta_zero_is_linear_stiffness() {
        let g = StructuredGrid::new(3, 3).unwrap();
        let k = vec![Tensor2::new(2.0, 0.2, 1.0); g.node_count()];
        let u = vec![0.3; g.node_count()];
        let (a, j) = assemble_exponential(&g, TensorSource::Nodal(&k), 0.0, &u);
        let lin = assemble_stiffness(&g, &k).unwrap();
        for (r, c, v) in lin.triplets() {
            assert_abs_diff_eq!(a.get(r, c), v, epsilon = 1e-14);
            assert_abs_diff_eq!(j.get(r, c), v, epsilon = 1e-14);
        }
    }

    #[test]
    fn loads_integrate_sources() {
        let g = StructuredGrid::new(6, 5).unwrap();
        let f = load_from_fn(&g, |_, _| 2.0);
        assert_abs_diff_eq!(f.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
        // bilinear sources are integrated exactly, so F = M f_nodal
        let lin = |x: f64, y: f64| 1.0 + x - 2.0 * y;
        let f = load_from_fn(&g, lin);
        let nodal: Vec<f64> = g.node_points().iter().map(|p| lin(p[0], p[1])).collect();
        let mf = assemble_mass(&g).matvec(&nodal);
        for (a, b) in f.iter().zip(&mf) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
        let p = point_load(&g, 0.5, 0.3, 3.0).unwrap();
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 3.0, epsilon = 1e-14);
        assert!(point_load(&g, 1.5, 0.3, 1.0).is_err());
    }

    #[test]
    fn rejects_indefinite_coefficient() {
        let g = StructuredGrid::new(2, 2).unwrap();
        let mut k = iso(&g, 1.0);
        k[3] = Tensor2::new(1.0, 2.0, 1.0);
        assert!(matches!(assemble_stiffness(&g, &k), Err(Error::NotSpd(_))));
    }
}
