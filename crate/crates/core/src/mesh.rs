//! Structured grid of unit square bilinear elements.
//!
//! Numbering follows the classic 88-line layout, 0-based:
//!
//! * node `(i, j)` (row `i` counted from the top, column `j` from the left)
//!   has index `j * (nely + 1) + i`, so nodes run top-to-bottom inside a
//!   column and columns run left-to-right;
//! * element `(r, c)` has index `c * nely + r`;
//! * node `k` owns displacement DOFs `2k` (x) and `2k + 1` (y) and pressure
//!   DOF `k`. In the 1-based MATLAB convention these are `2k-1`, `2k`, `k`.
//!
//! Local element node order is counter-clockwise starting at the bottom-left
//! corner: bottom-left, bottom-right, top-right, top-left. The y axis points
//! up, so "bottom" is the last row of nodes.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nelx: usize,
    pub nely: usize,
    pub nel: usize,
    pub nno: usize,
    /// Per-element displacement DOFs, local order (x, y) per node.
    pub udofs: Vec<[usize; 8]>,
    /// Per-element pressure DOFs (equal to node indices).
    pub pdofs: Vec<[usize; 4]>,
    /// Left edge nodes, top to bottom.
    pub lnode: Vec<usize>,
    /// Right edge nodes, top to bottom.
    pub rnode: Vec<usize>,
    /// Top edge nodes, left to right.
    pub tnode: Vec<usize>,
    /// Bottom edge nodes, left to right.
    pub bnode: Vec<usize>,
    /// Row-major `nely x nelx` element lookup: `elem_grid[r * nelx + c]`.
    pub elem_grid: Vec<usize>,
}

impl Mesh {
    pub fn new(nelx: usize, nely: usize) -> Result<Self> {
        if nelx == 0 || nely == 0 {
            return Err(Error::invalid(format!(
                "mesh dimensions must be positive, got {nelx} x {nely}"
            )));
        }
        let nel = nelx * nely;
        let nno = (nelx + 1) * (nely + 1);
        let col = nely + 1;

        let mut udofs = Vec::with_capacity(nel);
        let mut pdofs = Vec::with_capacity(nel);
        for c in 0..nelx {
            for r in 0..nely {
                let tl = c * col + r;
                let bl = tl + 1;
                let br = bl + col;
                let tr = tl + col;
                let nodes = [bl, br, tr, tl];
                let mut u = [0; 8];
                for (a, &n) in nodes.iter().enumerate() {
                    u[2 * a] = 2 * n;
                    u[2 * a + 1] = 2 * n + 1;
                }
                udofs.push(u);
                pdofs.push(nodes);
            }
        }

        let lnode = (0..=nely).collect();
        let rnode = (nelx * col..nno).collect();
        let tnode = (0..=nelx).map(|j| j * col).collect();
        let bnode = (0..=nelx).map(|j| j * col + nely).collect();

        let mut elem_grid = vec![0; nel];
        for r in 0..nely {
            for c in 0..nelx {
                elem_grid[r * nelx + c] = c * nely + r;
            }
        }

        Ok(Mesh {
            nelx,
            nely,
            nel,
            nno,
            udofs,
            pdofs,
            lnode,
            rnode,
            tnode,
            bnode,
            elem_grid,
        })
    }

    #[inline]
    pub fn ndof_u(&self) -> usize {
        2 * self.nno
    }

    /// Element index at grid row `r` (from the top) and column `c`.
    #[inline]
    pub fn elem(&self, r: usize, c: usize) -> usize {
        self.elem_grid[r * self.nelx + c]
    }

    /// Inverse of [`Mesh::elem`].
    #[inline]
    pub fn elem_position(&self, e: usize) -> (usize, usize) {
        (e % self.nely, e / self.nely)
    }

    /// Node index at node row `i` (from the top) and column `j`.
    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        j * (self.nely + 1) + i
    }

    #[inline]
    pub fn node_position(&self, k: usize) -> (usize, usize) {
        (k % (self.nely + 1), k / (self.nely + 1))
    }

    /// Physical coordinates of node `k`: x to the right, y up from the bottom edge.
    pub fn node_coords(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.node_position(k);
        (j as f64, (self.nely - i) as f64)
    }

    /// Every node on the outer boundary, ascending, without duplicates.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self
            .lnode
            .iter()
            .chain(&self.rnode)
            .chain(&self.tnode)
            .chain(&self.bnode)
            .copied()
            .collect();
        all.sort_unstable();
        all.dedup();
        all
    }
}
