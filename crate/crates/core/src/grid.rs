//! Uniform rectangular meshes on the unit square.
//!
//! Nodes and cells are numbered row-major with `y` as the outer index, so
//! node `(i, j)` has index `j * (nx + 1) + i` and cell `(i, j)` has index
//! `j * nx + i`. Every matrix and file dump in the crate relies on this
//! ordering.

use crate::{Error, Result};

/// Link from a refined grid back to the coarse grid it was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Refinement {
    pub coarse_nx: usize,
    pub coarse_ny: usize,
    pub factor: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredGrid {
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
    refinement: Option<Refinement>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    // node index -> position in `interior`, usize::MAX for boundary nodes
    interior_pos: Vec<usize>,
}

impl StructuredGrid {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidGrid(format!("cell counts must be positive, got {nx}x{ny}")));
        }
        Ok(Self::build(nx, ny, None))
    }

    fn build(nx: usize, ny: usize, refinement: Option<Refinement>) -> Self {
        let nodes = (nx + 1) * (ny + 1);
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        let mut interior_pos = vec![usize::MAX; nodes];
        for j in 0..=ny {
            for i in 0..=nx {
                let n = j * (nx + 1) + i;
                if i == 0 || j == 0 || i == nx || j == ny {
                    boundary.push(n);
                } else {
                    interior_pos[n] = interior.len();
                    interior.push(n);
                }
            }
        }
        Self {
            nx,
            ny,
            hx: 1.0 / nx as f64,
            hy: 1.0 / ny as f64,
            refinement,
            interior,
            boundary,
            interior_pos,
        }
    }

    /// Subdivide every cell into `factor x factor` cells.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidGrid("refinement factor must be >= 1".into()));
        }
        let r = Refinement { coarse_nx: self.nx, coarse_ny: self.ny, factor };
        Ok(Self::build(self.nx * factor, self.ny * factor, Some(r)))
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn hx(&self) -> f64 {
        self.hx
    }

    pub fn hy(&self) -> f64 {
        self.hy
    }

    pub fn refinement(&self) -> Option<Refinement> {
        self.refinement
    }

    pub fn node_count(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn node_ij(&self, node: usize) -> (usize, usize) {
        (node % (self.nx + 1), node / (self.nx + 1))
    }

    #[inline]
    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn cell_ij(&self, cell: usize) -> (usize, usize) {
        (cell % self.nx, cell / self.nx)
    }

    #[inline]
    pub fn node_coords(&self, node: usize) -> (f64, f64) {
        let (i, j) = self.node_ij(node);
        (i as f64 * self.hx, j as f64 * self.hy)
    }

    pub fn cell_center(&self, cell: usize) -> (f64, f64) {
        let (i, j) = self.cell_ij(cell);
        ((i as f64 + 0.5) * self.hx, (j as f64 + 0.5) * self.hy)
    }

    /// Corner nodes of a cell, counter-clockwise from the lower-left corner.
    #[inline]
    pub fn cell_nodes(&self, cell: usize) -> [usize; 4] {
        let (i, j) = self.cell_ij(cell);
        let n0 = self.node_index(i, j);
        let n3 = self.node_index(i, j + 1);
        [n0, n0 + 1, n3 + 1, n3]
    }

    pub fn is_boundary_node(&self, node: usize) -> bool {
        self.interior_pos[node] == usize::MAX
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary
    }

    /// Position of `node` among the interior (unknown) nodes.
    #[inline]
    pub fn interior_position(&self, node: usize) -> Option<usize> {
        let p = self.interior_pos[node];
        (p != usize::MAX).then_some(p)
    }

    /// Coordinates of every node, in node order.
    pub fn node_points(&self) -> Vec<[f64; 2]> {
        (0..self.node_count())
            .map(|n| {
                let (x, y) = self.node_coords(n);
                [x, y]
            })
            .collect()
    }

    /// Coarse block (cell index on the parent grid) containing a fine cell.
    pub fn block_of(&self, cell: usize) -> Result<usize> {
        let r = self.require_refinement()?;
        let (i, j) = self.cell_ij(cell);
        Ok((j / r.factor) * r.coarse_nx + i / r.factor)
    }

    /// Fine cells of a coarse block, row-major within the block.
    pub fn block_cells(&self, block: usize) -> Result<Vec<usize>> {
        let r = self.require_refinement()?;
        if block >= r.coarse_nx * r.coarse_ny {
            return Err(Error::Dimension(format!("block {block} out of range")));
        }
        let (bi, bj) = (block % r.coarse_nx, block / r.coarse_nx);
        let mut cells = Vec::with_capacity(r.factor * r.factor);
        for lj in 0..r.factor {
            for li in 0..r.factor {
                cells.push(self.cell_index(bi * r.factor + li, bj * r.factor + lj));
            }
        }
        Ok(cells)
    }

    /// Whether this grid was produced by refining `coarse`.
    pub fn refines(&self, coarse: &StructuredGrid) -> bool {
        matches!(self.refinement, Some(r) if r.coarse_nx == coarse.nx && r.coarse_ny == coarse.ny)
    }

    /// The parent grid, rebuilt from the refinement record.
    pub fn coarse_grid(&self) -> Result<StructuredGrid> {
        let r = self.require_refinement()?;
        StructuredGrid::new(r.coarse_nx, r.coarse_ny)
    }

    fn require_refinement(&self) -> Result<Refinement> {
        self.refinement
            .ok_or_else(|| Error::InvalidGrid("grid was not produced by refine()".into()))
    }
}
