//! Compressed sparse row storage and an envelope (skyline) LDLᵀ factorization with
//! reverse Cuthill-McKee ordering.
//!
//! Finite element tangents of 2D structured meshes have small bandwidth after RCM
//! reordering, so a profile factorization is both fast and deterministic. The symbolic
//! part ([`EnvelopeLdl::analyze`]) only depends on the sparsity pattern and is reused
//! across Newton iterations.

use std::collections::VecDeque;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a zero-valued matrix from per-row column lists (sorted and deduplicated here).
    pub fn from_pattern(ncols: usize, rows: Vec<Vec<usize>>) -> Self {
        let nrows = rows.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            debug_assert!(r.last().map_or(true, |&c| c < ncols));
            col_idx.extend_from_slice(&r);
            row_ptr.push(col_idx.len());
        }
        let values = vec![0.0; col_idx.len()];
        Self { nrows, ncols, row_ptr, col_idx, values }
    }

    /// Sums duplicate entries in their input order, so the result is deterministic.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (i, j, v) = triplets[k];
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> Self {
        Self { nrows: n, ncols: n, row_ptr: (0..=n).collect(), col_idx: (0..n).collect(), values: vec![1.0; n] }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Storage position of entry `(i, j)`, if it is part of the pattern.
    pub fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        self.col_idx[start..self.row_ptr[i + 1]].binary_search(&j).ok().map(|k| start + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn same_pattern(&self, other: &CsrMatrix) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum()
            })
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// max |A_ij - A_ji| / max |A_ij|.
    pub fn symmetry_error(&self) -> f64 {
        let mut max_abs = 0.0f64;
        let mut max_diff = 0.0f64;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                max_abs = max_abs.max(v.abs());
                max_diff = max_diff.max((v - self.get(j, i)).abs());
            }
        }
        if max_abs == 0.0 {
            0.0
        } else {
            max_diff / max_abs
        }
    }

    /// Rows and columns selected by `keep` (old index -> new index), all others dropped.
    pub fn select(&self, keep: &[Option<usize>], n_new: usize) -> CsrMatrix {
        let mut rows = vec![Vec::new(); n_new];
        let mut vals = vec![Vec::new(); n_new];
        for i in 0..self.nrows {
            let Some(ni) = keep[i] else { continue };
            let (cols, v) = self.row(i);
            for (&j, &x) in cols.iter().zip(v) {
                if let Some(nj) = keep[j] {
                    rows[ni].push(nj);
                    vals[ni].push(x);
                }
            }
        }
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for (r, v) in rows.into_iter().zip(vals) {
            let mut idx: Vec<usize> = (0..r.len()).collect();
            idx.sort_by_key(|&k| r[k]);
            for k in idx {
                col_idx.push(r[k]);
                values.push(v[k]);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { nrows: n_new, ncols: n_new, row_ptr, col_idx, values }
    }
}

/// Reverse Cuthill-McKee ordering of a structurally symmetric matrix.
///
/// Returns `perm` with `perm[new] = old`. Each connected component starts from a
/// pseudo-peripheral node; neighbours are visited by increasing degree, ties by index.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let adj: Vec<Vec<usize>> = (0..n).map(|i| a.row(i).0.iter().copied().filter(|&j| j != i).collect()).collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();

    let bfs_levels = |start: usize, mask: &[bool]| -> Vec<Vec<usize>> {
        let mut seen = vec![false; n];
        let mut levels = vec![vec![start]];
        seen[start] = true;
        loop {
            let mut next = Vec::new();
            for &u in levels.last().unwrap() {
                for &v in &adj[u] {
                    if !seen[v] && !mask[v] {
                        seen[v] = true;
                        next.push(v);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            levels.push(next);
        }
        levels
    };

    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));

    for &seed in &by_degree {
        if placed[seed] {
            continue;
        }
        // pseudo-peripheral node (George-Liu)
        let mut start = seed;
        let mut levels = bfs_levels(start, &placed);
        loop {
            let last = levels.last().unwrap();
            let cand = *last.iter().min_by_key(|&&v| (degree[v], v)).unwrap();
            let cand_levels = bfs_levels(cand, &placed);
            if cand_levels.len() > levels.len() {
                start = cand;
                levels = cand_levels;
            } else {
                break;
            }
        }
        let mut queue = VecDeque::from([start]);
        placed[start] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nb: Vec<usize> = adj[u].iter().copied().filter(|&v| !placed[v]).collect();
            nb.sort_by_key(|&v| (degree[v], v));
            for v in nb {
                placed[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

/// Envelope LDLᵀ factorization of a symmetric matrix in a fill-reducing order.
#[derive(Debug, Clone)]
pub struct EnvelopeLdl {
    n: usize,
    perm: Vec<usize>,
    inv: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
    diag: Vec<f64>,
    factored: bool,
}

impl EnvelopeLdl {
    /// Symbolic analysis: RCM ordering and the envelope of the permuted lower triangle.
    pub fn analyze(a: &CsrMatrix) -> Self {
        let n = a.nrows();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for r in 0..n {
            for &c in a.row(r).0 {
                let (i, j) = (inv[r], inv[c]);
                let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                first[hi] = first[hi].min(lo);
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + (i - first[i]));
        }
        let len = start[n];
        Self { n, perm, inv, first, start, data: vec![0.0; len], diag: vec![0.0; n], factored: false }
    }

    /// Number of stored off-diagonal entries of the factor.
    pub fn profile_size(&self) -> usize {
        self.data.len()
    }

    /// Numeric factorization; `a` must have the pattern given to [`Self::analyze`]
    /// (or a subset of it).
    pub fn factor(&mut self, a: &CsrMatrix) -> Result<()> {
        if a.nrows() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "factor: matrix has {} rows, analysis has {}",
                a.nrows(),
                self.n
            )));
        }
        self.data.iter_mut().for_each(|x| *x = 0.0);
        self.diag.iter_mut().for_each(|x| *x = 0.0);
        for r in 0..self.n {
            let i = self.inv[r];
            let (cols, vals) = a.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let j = self.inv[c];
                if j < i {
                    if j < self.first[i] {
                        return Err(Error::DimensionMismatch("factor: entry outside analysed envelope".into()));
                    }
                    self.data[self.start[i] + j - self.first[i]] = v;
                } else if j == i {
                    self.diag[i] = v;
                }
            }
        }
        let scale = self.diag.iter().fold(0.0f64, |m, d| m.max(d.abs())).max(f64::MIN_POSITIVE);
        for i in 0..self.n {
            let fi = self.first[i];
            let (head, tail) = self.data.split_at_mut(self.start[i]);
            let row_i = &mut tail[..i - fi];
            // g_ij = a_ij - sum_k g_ik l_jk
            for j in fi..i {
                let fj = self.first[j];
                let k0 = fi.max(fj);
                let row_j = &head[self.start[j]..self.start[j] + (j - fj)];
                let s: f64 = row_i[k0 - fi..j - fi].iter().zip(&row_j[k0 - fj..j - fj]).map(|(g, l)| g * l).sum();
                row_i[j - fi] -= s;
            }
            let mut d = self.diag[i];
            for j in fi..i {
                let g = row_i[j - fi];
                let l = g / self.diag[j];
                d -= g * l;
                row_i[j - fi] = l;
            }
            if !(d.abs() > 1e-14 * scale) || !d.is_finite() {
                self.factored = false;
                return Err(Error::SingularSystem { row: self.perm[i], pivot: d });
            }
            self.diag[i] = d;
        }
        self.factored = true;
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert!(self.factored, "solve called before a successful factorization");
        let n = self.n;
        let mut y: Vec<f64> = (0..n).map(|i| b[self.perm[i]]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            let s: f64 = row.iter().zip(&y[fi..i]).map(|(l, x)| l * x).sum();
            y[i] -= s;
        }
        for i in 0..n {
            y[i] /= self.diag[i];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let yi = y[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            for (l, x) in row.iter().zip(&mut y[fi..i]) {
                *x -= l * yi;
            }
        }
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[self.perm[i]] = y[i];
        }
        x
    }
}
