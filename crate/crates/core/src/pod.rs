//! Proper orthogonal decomposition of displacement snapshots.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Displacement snapshots of one substructure, one column per converged state.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    n_rows: usize,
    data: Vec<f64>,
    /// `(sample id, load step)` of each column.
    pub provenance: Vec<(usize, usize)>,
}

impl SnapshotMatrix {
    pub fn new(n_rows: usize) -> Self {
        Self { n_rows, data: Vec::new(), provenance: Vec::new() }
    }

    pub fn push(&mut self, column: &[f64], sample: usize, step: usize) -> Result<()> {
        if column.len() != self.n_rows {
            return Err(Error::DimensionMismatch(format!(
                "snapshot has {} entries, expected {}",
                column.len(),
                self.n_rows
            )));
        }
        if column.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("snapshot contains non-finite values".into()));
        }
        self.data.extend_from_slice(column);
        self.provenance.push((sample, step));
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.provenance.len()
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.data[k * self.n_rows..(k + 1) * self.n_rows]
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.n_rows, self.n_cols(), &self.data)
    }
}

/// Leading left singular vectors of a snapshot matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PodBasis {
    /// `n x m`, orthonormal columns.
    pub modes: DMatrix<f64>,
    /// All singular values, descending.
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// Set when more modes were requested than the snapshot rank provides.
    pub truncated: bool,
}

impl PodBasis {
    pub fn n_modes(&self) -> usize {
        self.modes.ncols()
    }

    /// First `m` modes (at most all of them).
    pub fn leading(&self, m: usize) -> DMatrix<f64> {
        self.modes.columns(0, m.min(self.n_modes())).into_owned()
    }
}

/// Full thin SVD with descending singular values and the sign convention that the
/// largest-magnitude entry of every left singular vector is positive.
pub fn sorted_svd(s: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let k = s.nrows().min(s.ncols());
    if k == 0 {
        return (DMatrix::zeros(s.nrows(), 0), Vec::new());
    }
    let svd = s.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let mut modes = DMatrix::zeros(s.nrows(), k);
    let mut sigma = Vec::with_capacity(k);
    for (c, &o) in order.iter().enumerate() {
        let mut col = u.column(o).into_owned();
        let (mut best, mut idx) = (0.0, 0);
        for (i, v) in col.iter().enumerate() {
            if v.abs() > best {
                best = v.abs();
                idx = i;
            }
        }
        if col[idx] < 0.0 {
            col.neg_mut();
        }
        modes.set_column(c, &col);
        sigma.push(svd.singular_values[o]);
    }
    (modes, sigma)
}

/// Numerical rank from singular values: `sigma_k > max(n, l) * eps * sigma_1`.
pub fn numerical_rank(sigma: &[f64], n: usize, l: usize) -> usize {
    let first = sigma.first().copied().unwrap_or(0.0);
    if first <= 0.0 {
        return 0;
    }
    let tol = n.max(l) as f64 * f64::EPSILON * first;
    sigma.iter().filter(|&&s| s > tol).count()
}

/// Number of modes with `sigma_k / sigma_1 >= 1e-8`.
pub fn default_mode_count(sigma: &[f64]) -> usize {
    let first = sigma.first().copied().unwrap_or(0.0);
    if first <= 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s / first >= 1e-8).count()
}

/// POD basis with `m` modes. Requests beyond the numerical rank are cut to the rank and
/// flagged in [`PodBasis::truncated`].
pub fn compute_pod(snapshots: &SnapshotMatrix, m: usize) -> Result<PodBasis> {
    compute_pod_matrix(&snapshots.to_matrix(), m)
}

pub fn compute_pod_matrix(s: &DMatrix<f64>, m: usize) -> Result<PodBasis> {
    if m == 0 {
        return Err(Error::InvalidArgument("mode count must be at least 1".into()));
    }
    if s.ncols() == 0 || s.nrows() == 0 {
        return Err(Error::InvalidArgument("empty snapshot matrix".into()));
    }
    let (u, sigma) = sorted_svd(s);
    let rank = numerical_rank(&sigma, s.nrows(), s.ncols());
    if rank == 0 {
        return Err(Error::InvalidArgument("snapshot matrix is zero".into()));
    }
    let keep = m.min(rank);
    Ok(PodBasis { modes: u.columns(0, keep).into_owned(), singular_values: sigma, rank, truncated: m > rank })
}

/// Modified Gram-Schmidt with one re-orthogonalization pass. Columns whose norm falls
/// below `1e-10` of their original norm (or are zero) are dropped.
pub fn orthonormalize(a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut kept: Vec<nalgebra::DVector<f64>> = Vec::new();
    for c in 0..a.ncols() {
        let mut v = a.column(c).into_owned();
        let norm0 = v.norm();
        if norm0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &kept {
                let proj = q.dot(&v);
                v.axpy(-proj, q, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-10 * norm0 {
            kept.push(v / norm);
        }
    }
    let mut out = DMatrix::zeros(a.nrows(), kept.len());
    for (c, q) in kept.iter().enumerate() {
        out.set_column(c, q);
    }
    out
}

/// Rows `rows` of `psi`.
pub fn select_rows(psi: &DMatrix<f64>, rows: &[usize]) -> Result<DMatrix<f64>> {
    if let Some(&r) = rows.iter().find(|&&r| r >= psi.nrows()) {
        return Err(Error::InvalidArgument(format!("row {r} out of range for {} rows", psi.nrows())));
    }
    Ok(DMatrix::from_fn(rows.len(), psi.ncols(), |i, j| psi[(rows[i], j)]))
}

/// Splits a substructure basis into internal and contact blocks by row selection and
/// re-orthonormalizes each block. With `interface_reduction` off the contact block is the
/// identity.
pub fn split_basis(
    psi: &DMatrix<f64>,
    internal: &[usize],
    contact: &[usize],
    interface_reduction: bool,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let psi_i = orthonormalize(&select_rows(psi, internal)?);
    let psi_c = if interface_reduction {
        orthonormalize(&select_rows(psi, contact)?)
    } else {
        DMatrix::identity(contact.len(), contact.len())
    };
    Ok((psi_i, psi_c))
}
