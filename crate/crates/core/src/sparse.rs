//! Fixed-pattern sparse matrix and direct solver.

use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::prelude::*;
use faer::Col;

use crate::error::{Error, Result};

/// Compressed-column matrix whose pattern never changes after construction.
#[derive(Clone)]
pub struct CscMatrix {
    n: usize,
    symbolic: SymbolicSparseColMat<usize>,
    values: Vec<f64>,
    lu_symbolic: Option<SymbolicLu<usize>>,
}

impl std::fmt::Debug for CscMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CscMatrix")
            .field("n", &self.n)
            .field("nnz", &self.values.len())
            .finish()
    }
}

const REFINEMENT_STEPS: usize = 4;

impl CscMatrix {
    /// Builds the pattern from per-column row lists (need not be sorted).
    pub fn from_columns(n: usize, mut cols: Vec<Vec<usize>>) -> Self {
        assert_eq!(cols.len(), n);
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut rows = Vec::new();
        col_ptr.push(0);
        for c in cols.iter_mut() {
            c.sort_unstable();
            c.dedup();
            rows.extend_from_slice(c);
            col_ptr.push(rows.len());
        }
        let nnz = rows.len();
        let symbolic = SymbolicSparseColMat::new_checked(n, n, col_ptr, None, rows);
        CscMatrix {
            n,
            symbolic,
            values: vec![0.0; nnz],
            lu_symbolic: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        self.symbolic.col_ptr()
    }

    pub fn row_idx(&self) -> &[usize] {
        self.symbolic.row_idx()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Storage slot of entry (i, j), if it is in the pattern.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let cp = self.symbolic.col_ptr();
        let rows = &self.symbolic.row_idx()[cp[j]..cp[j + 1]];
        rows.binary_search(&i).ok().map(|k| cp[j] + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.values[p])
    }

    /// Adds a dense local block `m` (row-major, `dofs.len()` squared).
    /// Panics if an entry falls outside the pattern.
    pub fn add_block(&mut self, dofs: &[usize], m: &[f64]) {
        let k = dofs.len();
        debug_assert_eq!(m.len(), k * k);
        for (b, &j) in dofs.iter().enumerate() {
            for (a, &i) in dofs.iter().enumerate() {
                let v = m[a * k + b];
                if v != 0.0 {
                    let p = self
                        .position(i, j)
                        .unwrap_or_else(|| panic!("entry ({i}, {j}) outside sparsity pattern"));
                    self.values[p] += v;
                }
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        let cp = self.symbolic.col_ptr();
        let rows = self.symbolic.row_idx();
        for j in 0..self.n {
            let xj = x[j];
            for p in cp[j]..cp[j + 1] {
                y[rows[p]] += self.values[p] * xj;
            }
        }
        y
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.n, self.n);
        let cp = self.symbolic.col_ptr();
        let rows = self.symbolic.row_idx();
        for j in 0..self.n {
            for p in cp[j]..cp[j + 1] {
                d[(rows[p], j)] = self.values[p];
            }
        }
        d
    }

    /// Solves `A x = b` by sparse LU. The symbolic factorization is computed
    /// on first use and reused for every later numeric factorization. Rows
    /// and columns are equilibrated first: penalty and bulk entries differ
    /// by many orders of magnitude on graded meshes.
    pub fn solve(&mut self, b: &[f64]) -> Result<Vec<f64>> {
        if self.n == 0 {
            return Ok(Vec::new());
        }
        if self.lu_symbolic.is_none() {
            let sym = SymbolicLu::try_new(self.symbolic.as_ref())
                .map_err(|e| Error::LinearSolve(format!("symbolic factorization: {e:?}")))?;
            self.lu_symbolic = Some(sym);
        }
        let cp = self.symbolic.col_ptr();
        let ri = self.symbolic.row_idx();
        let mut row = vec![0.0f64; self.n];
        for (&i, v) in ri.iter().zip(&self.values) {
            row[i] = row[i].max(v.abs());
        }
        let row: Vec<f64> = row.iter().map(|&m| if m > 0.0 { 1.0 / m } else { 1.0 }).collect();
        let col: Vec<f64> = (0..self.n)
            .map(|j| {
                let m = (cp[j]..cp[j + 1])
                    .map(|k| (row[ri[k]] * self.values[k]).abs())
                    .fold(0.0, f64::max);
                if m > 0.0 { 1.0 / m } else { 1.0 }
            })
            .collect();
        let mut scaled = self.values.clone();
        for j in 0..self.n {
            for k in cp[j]..cp[j + 1] {
                scaled[k] *= row[ri[k]] * col[j];
            }
        }
        let sym = self.lu_symbolic.clone().expect("symbolic factorization present");
        let a = SparseColMatRef::new(self.symbolic.as_ref(), &scaled);
        let lu = Lu::try_new_with_symbolic(sym, a)
            .map_err(|e| Error::LinearSolve(format!("numeric factorization: {e:?}")))?;
        let mut x = Col::<f64>::from_fn(self.n, |i| row[i] * b[i]);
        lu.solve_in_place(x.as_mat_mut());
        let mut out: Vec<f64> = (0..self.n).map(|i| col[i] * x[i]).collect();
        // iterative refinement against the unscaled matrix
        let res_norm = |x: &[f64]| -> (Vec<f64>, f64) {
            let ax = self.mul_vec(x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let n = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            (r, n)
        };
        let (mut r, mut rn) = res_norm(&out);
        for _ in 0..REFINEMENT_STEPS {
            if !rn.is_finite() || rn == 0.0 {
                break;
            }
            let mut dx = Col::<f64>::from_fn(self.n, |i| row[i] * r[i]);
            lu.solve_in_place(dx.as_mat_mut());
            let cand: Vec<f64> = out.iter().enumerate().map(|(i, v)| v + col[i] * dx[i]).collect();
            let (r2, rn2) = res_norm(&cand);
            if !(rn2 < 0.5 * rn) {
                if rn2 < rn {
                    out = cand;
                }
                break;
            }
            out = cand;
            r = r2;
            rn = rn2;
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolve(
                "singular tangent matrix (non-finite solution)".into(),
            ));
        }
        Ok(out)
    }
}
