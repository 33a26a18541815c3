//! Compressed-column storage, cached assembly patterns and the sparse
//! Cholesky wrapper used for both the flow and the elasticity solves.
//!
//! Sparsity patterns of every global matrix depend on the mesh only, so the
//! triplet-to-slot map and the symbolic factorization are computed once per
//! problem and reused each iteration.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Estimated 1-norm condition numbers above this are rejected.
pub const CONDITION_LIMIT: f64 = 1e15;

#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entry `(i, j)`, zero outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = (self.col_ptr[j], self.col_ptr[j + 1]);
        match self.row_idx[lo..hi].binary_search(&i) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for j in 0..self.ncols {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[k]] += self.values[k] * xj;
            }
        }
        y
    }

    /// `A^T x`.
    pub fn mul_transpose_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        (0..self.ncols)
            .map(|j| {
                (self.col_ptr[j]..self.col_ptr[j + 1])
                    .map(|k| self.values[k] * x[self.row_idx[k]])
                    .sum()
            })
            .collect()
    }

    /// Dense row-major copy, for tests and small problems.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for j in 0..self.ncols {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                d[self.row_idx[k]][j] += self.values[k];
            }
        }
        d
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.ncols)
            .map(|j| {
                self.values[self.col_ptr[j]..self.col_ptr[j + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    fn symbolic(&self) -> SymbolicSparseColMatRef<'_, usize> {
        SymbolicSparseColMatRef::new_checked(self.nrows, self.ncols, &self.col_ptr, None, &self.row_idx)
    }
}

/// Maps a fixed list of `(row, col)` triplets onto a deduplicated CSC
/// pattern. Duplicates are summed in triplet order, so assembly is
/// bit-deterministic.
#[derive(Debug, Clone)]
pub struct AssemblyPattern {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    slot: Vec<usize>,
    /// Slot of the transposed entry, present for square symmetric patterns.
    transpose: Option<Vec<usize>>,
}

impl AssemblyPattern {
    pub fn new(nrows: usize, ncols: usize, entries: &[(usize, usize)]) -> Self {
        let mut order: Vec<usize> = (0..entries.len()).collect();
        order.sort_by_key(|&k| (entries[k].1, entries[k].0));

        let mut col_ptr = vec![0; ncols + 1];
        let mut row_idx = Vec::new();
        let mut slot = vec![0; entries.len()];
        let mut last: Option<(usize, usize)> = None;
        for &k in &order {
            let (r, c) = entries[k];
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows} x {ncols}");
            if last != Some((r, c)) {
                row_idx.push(r);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
            slot[k] = row_idx.len() - 1;
        }
        for j in 0..ncols {
            col_ptr[j + 1] += col_ptr[j];
        }

        let mut pattern = AssemblyPattern {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            slot,
            transpose: None,
        };
        if nrows == ncols {
            pattern.transpose = pattern.transpose_slots();
        }
        pattern
    }

    fn transpose_slots(&self) -> Option<Vec<usize>> {
        let mut t = vec![0; self.row_idx.len()];
        for j in 0..self.ncols {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                let i = self.row_idx[k];
                let (lo, hi) = (self.col_ptr[i], self.col_ptr[i + 1]);
                let pos = self.row_idx[lo..hi].binary_search(&j).ok()?;
                t[k] = lo + pos;
            }
        }
        Some(t)
    }

    pub fn len(&self) -> usize {
        self.slot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slot.is_empty()
    }

    /// Sums `values[k]` (one per triplet) into the pattern.
    pub fn assemble(&self, values: &[f64]) -> CscMatrix {
        assert_eq!(values.len(), self.slot.len());
        let mut out = vec![0.0; self.row_idx.len()];
        for (&s, &v) in self.slot.iter().zip(values) {
            out[s] += v;
        }
        CscMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            col_ptr: self.col_ptr.clone(),
            row_idx: self.row_idx.clone(),
            values: out,
        }
    }

    /// Like [`AssemblyPattern::assemble`], followed by `(A + A^T) / 2`.
    pub fn assemble_symmetric(&self, values: &[f64]) -> CscMatrix {
        let mut m = self.assemble(values);
        let t = self
            .transpose
            .as_ref()
            .expect("symmetrization needs a square, structurally symmetric pattern");
        let raw = m.values.clone();
        for (k, v) in m.values.iter_mut().enumerate() {
            *v = 0.5 * (raw[k] + raw[t[k]]);
        }
        m
    }
}

/// Split of `0..n` into free and fixed indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub free: Vec<usize>,
    pub fixed: Vec<usize>,
    /// Position of each index inside `free`, `usize::MAX` when fixed.
    free_pos: Vec<usize>,
}

impl Partition {
    /// `fixed` may be unsorted; duplicates and out-of-range entries are errors.
    pub fn new(n: usize, fixed: &[usize]) -> Result<Self> {
        let mut is_fixed = vec![false; n];
        for &d in fixed {
            if d >= n {
                return Err(Error::invalid(format!("fixed index {d} out of range 0..{n}")));
            }
            if is_fixed[d] {
                return Err(Error::invalid(format!("fixed index {d} listed twice")));
            }
            is_fixed[d] = true;
        }
        let mut free = Vec::with_capacity(n - fixed.len());
        let mut fixed_sorted = Vec::with_capacity(fixed.len());
        let mut free_pos = vec![usize::MAX; n];
        for (i, &f) in is_fixed.iter().enumerate() {
            if f {
                fixed_sorted.push(i);
            } else {
                free_pos[i] = free.len();
                free.push(i);
            }
        }
        Ok(Partition {
            free,
            fixed: fixed_sorted,
            free_pos,
        })
    }

    pub fn len(&self) -> usize {
        self.free_pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.free_pos.is_empty()
    }

    pub fn is_free(&self, i: usize) -> bool {
        self.free_pos[i] != usize::MAX
    }

    pub fn gather_free(&self, v: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| v[i]).collect()
    }

    /// Full-length vector with `vf` on the free indices and `fill` elsewhere.
    pub fn scatter_free(&self, vf: &[f64], fill: &[f64]) -> Vec<f64> {
        let mut out = fill.to_vec();
        for (&i, &v) in self.free.iter().zip(vf) {
            out[i] = v;
        }
        out
    }
}

/// Extracts the sub-block `M[rows, cols]` of matrices sharing one pattern.
#[derive(Debug, Clone)]
pub struct BlockMap {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    src: Vec<usize>,
}

impl BlockMap {
    /// `rows` and `cols` must be ascending.
    pub fn new(template: &CscMatrix, rows: &[usize], cols: &[usize]) -> Self {
        let mut row_pos = vec![usize::MAX; template.nrows];
        for (p, &r) in rows.iter().enumerate() {
            row_pos[r] = p;
        }
        let mut col_ptr = Vec::with_capacity(cols.len() + 1);
        col_ptr.push(0);
        let mut row_idx = Vec::new();
        let mut src = Vec::new();
        for &c in cols {
            for k in template.col_ptr[c]..template.col_ptr[c + 1] {
                let p = row_pos[template.row_idx[k]];
                if p != usize::MAX {
                    row_idx.push(p);
                    src.push(k);
                }
            }
            col_ptr.push(row_idx.len());
        }
        BlockMap {
            nrows: rows.len(),
            ncols: cols.len(),
            col_ptr,
            row_idx,
            src,
        }
    }

    pub fn extract(&self, m: &CscMatrix) -> CscMatrix {
        CscMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            col_ptr: self.col_ptr.clone(),
            row_idx: self.row_idx.clone(),
            values: self.src.iter().map(|&k| m.values[k]).collect(),
        }
    }
}

/// Symbolic Cholesky analysis of one symmetric positive definite block.
#[derive(Debug, Clone)]
pub struct SpdSolver {
    symbolic: SymbolicLlt<usize>,
    n: usize,
    block: String,
}

impl SpdSolver {
    /// `block` names the matrix in error messages.
    pub fn new(pattern: &CscMatrix, block: &str) -> Result<Self> {
        if pattern.nrows != pattern.ncols {
            return Err(Error::invalid(format!("{block} is not square")));
        }
        let symbolic = SymbolicLlt::try_new(pattern.symbolic(), Side::Lower)
            .map_err(|e| Error::solver(block, format!("symbolic analysis failed: {e:?}")))?;
        Ok(SpdSolver {
            symbolic,
            n: pattern.nrows,
            block: block.to_string(),
        })
    }

    /// Numeric factorization; `m` must share the analysed pattern.
    pub fn factor(&self, m: &CscMatrix) -> Result<SpdFactor> {
        if m.nrows != self.n || m.ncols != self.n {
            return Err(Error::invalid(format!("{} has the wrong dimensions", self.block)));
        }
        if let Some(v) = m.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::solver(&self.block, format!("matrix contains {v}")));
        }
        let mat = SparseColMatRef::new(m.symbolic(), &m.values);
        let llt = Llt::try_new_with_symbolic(self.symbolic.clone(), mat, Side::Lower)
            .map_err(|e| Error::solver(&self.block, format!("not positive definite ({e:?})")))?;
        let mut f = SpdFactor {
            llt,
            n: self.n,
            block: self.block.clone(),
            condition: 0.0,
        };
        if self.n > 0 {
            f.condition = m.norm1() * f.inverse_norm1_estimate();
            if !(f.condition <= CONDITION_LIMIT) {
                return Err(Error::solver(
                    &self.block,
                    format!(
                        "estimated condition number {:.3e} exceeds {CONDITION_LIMIT:e}",
                        f.condition
                    ),
                ));
            }
        }
        Ok(f)
    }
}

pub struct SpdFactor {
    llt: Llt<usize, f64>,
    n: usize,
    block: String,
    condition: f64,
}

impl SpdFactor {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Estimated 1-norm condition number of the factored matrix.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n {
            return Err(Error::invalid(format!(
                "right-hand side of length {} for {} of order {}",
                rhs.len(),
                self.block,
                self.n
            )));
        }
        let x = self.solve_raw(rhs);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::solver(&self.block, "solution is not finite"));
        }
        Ok(x)
    }

    fn solve_raw(&self, rhs: &[f64]) -> Vec<f64> {
        let mut b = Mat::<f64>::from_fn(self.n, 1, |i, _| rhs[i]);
        self.llt.solve_in_place(b.as_mut());
        (0..self.n).map(|i| b[(i, 0)]).collect()
    }

    /// Hager's estimate of `||A^-1||_1` (A symmetric, so `A^-T = A^-1`).
    fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.n;
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0;
        for _ in 0..5 {
            let y = self.solve_raw(&x);
            let ynorm: f64 = y.iter().map(|v| v.abs()).sum();
            if !ynorm.is_finite() {
                return f64::INFINITY;
            }
            if ynorm <= est {
                break;
            }
            est = ynorm;
            let xi: Vec<f64> = y.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
            let z = self.solve_raw(&xi);
            let (jmax, zmax) = z.iter().enumerate().fold(
                (0, 0.0),
                |(bj, bz), (j, v)| if v.abs() > bz { (j, v.abs()) } else { (bj, bz) },
            );
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx {
                break;
            }
            x = vec![0.0; n];
            x[jmax] = 1.0;
        }
        est
    }
}
