//! Dense complex tensor-product linear algebra.
//!
//! Basis vectors of a multipartite space are flattened row-major: the
//! multi-index `(i_1, ..., i_p)` maps to `sum_k i_k * prod_{l > k} d_l`, so the
//! leftmost subsystem is the most significant. Subsystem indices in this crate
//! are zero-based.

use nalgebra::{DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Relative Hermiticity tolerance.
pub const EPS_HERM: f64 = 1e-10;
/// Default relative threshold below which an eigenvalue counts as zero.
pub const EPS_NEG: f64 = 1e-9;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Subsystem dimensions `d_1, ..., d_p` of a tensor-product space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct DimVec(Vec<usize>);

impl DimVec {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidDims("at least one subsystem is required".into()));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidDims(format!("zero subsystem dimension in {dims:?}")));
        }
        Ok(Self(dims))
    }

    pub fn single(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn pair(m: usize, n: usize) -> Result<Self> {
        Self::new(vec![m, n])
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Number of subsystems `p`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> usize {
        self.0.iter().product()
    }

    /// Flat-index stride of each subsystem.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.0.len()];
        for k in (0..self.0.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.0[k + 1];
        }
        strides
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.0.len()];
        for k in (0..self.0.len()).rev() {
            idx[k] = flat % self.0[k];
            flat /= self.0[k];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.0.len());
        idx.iter().zip(&self.0).fold(0, |acc, (&i, &d)| acc * d + i)
    }

    pub fn check_subsystem(&self, sub: usize) -> Result<()> {
        if sub >= self.0.len() {
            return Err(Error::InvalidSubsystem { index: sub, count: self.0.len() });
        }
        Ok(())
    }

    pub fn concat(&self, other: &DimVec) -> DimVec {
        DimVec(self.0.iter().chain(&other.0).copied().collect())
    }
}

impl TryFrom<Vec<usize>> for DimVec {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DimVec> for Vec<usize> {
    fn from(d: DimVec) -> Self {
        d.0
    }
}

impl std::fmt::Display for DimVec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A square complex matrix acting on a tensor-product space.
///
/// Most instances are Hermitian (states, witnesses, Choi matrices) but the
/// type does not enforce it; operations that need Hermiticity check it.
#[derive(Clone, Debug, PartialEq)]
pub struct HermOp {
    dims: DimVec,
    mat: CMat,
}

impl HermOp {
    pub fn new(dims: DimVec, mat: CMat) -> Result<Self> {
        let total = dims.total();
        if mat.nrows() != total || mat.ncols() != total {
            return Err(Error::DimensionMismatch {
                expected: total,
                got: if mat.nrows() != total { mat.nrows() } else { mat.ncols() },
            });
        }
        Ok(Self { dims, mat })
    }

    /// Wraps a square matrix as a single-subsystem operator.
    pub fn from_matrix(mat: CMat) -> Result<Self> {
        let n = mat.nrows();
        Self::new(DimVec::single(n)?, mat)
    }

    pub fn identity(dims: DimVec) -> Self {
        let n = dims.total();
        Self { dims, mat: CMat::identity(n, n) }
    }

    pub fn zeros(dims: DimVec) -> Self {
        let n = dims.total();
        Self { dims, mat: CMat::zeros(n, n) }
    }

    /// Rank-one projector `v v^†` (not normalized).
    pub fn outer(dims: DimVec, v: &CVec) -> Result<Self> {
        Self::new(dims, v * v.adjoint())
    }

    pub fn dims(&self) -> &DimVec {
        &self.dims
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn side(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn with_dims(self, dims: DimVec) -> Result<Self> {
        Self::new(dims, self.mat)
    }

    pub fn kron(&self, other: &HermOp) -> HermOp {
        HermOp { dims: self.dims.concat(&other.dims), mat: kron(&self.mat, &other.mat) }
    }

    pub fn scale(&self, s: f64) -> HermOp {
        HermOp { dims: self.dims.clone(), mat: &self.mat * C64::new(s, 0.0) }
    }

    pub fn adjoint(&self) -> HermOp {
        HermOp { dims: self.dims.clone(), mat: self.mat.adjoint() }
    }

    pub fn hermitian_residual(&self) -> f64 {
        hermitian_residual(&self.mat)
    }

    pub fn check_hermitian(&self) -> Result<()> {
        check_hermitian(&self.mat)
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<HermOp> {
        partial_trace(self, keep)
    }

    pub fn partial_transpose(&self, sub: usize) -> Result<HermOp> {
        partial_transpose(self, sub)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        herm_eigs(self)
    }

    pub fn inertia(&self, eps_neg: f64) -> Result<Inertia> {
        inertia(self, eps_neg)
    }
}

impl std::ops::Add for &HermOp {
    type Output = HermOp;

    fn add(self, rhs: &HermOp) -> HermOp {
        assert_eq!(self.dims, rhs.dims, "adding operators on different spaces");
        HermOp { dims: self.dims.clone(), mat: &self.mat + &rhs.mat }
    }
}

impl std::ops::Sub for &HermOp {
    type Output = HermOp;

    fn sub(self, rhs: &HermOp) -> HermOp {
        assert_eq!(self.dims, rhs.dims, "subtracting operators on different spaces");
        HermOp { dims: self.dims.clone(), mat: &self.mat - &rhs.mat }
    }
}

/// Wire form of a matrix: `{"dims":[..],"re":[[..]],"im":[[..]]}`, rows first.
#[derive(Serialize, Deserialize)]
struct MatrixJson {
    dims: Vec<usize>,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl Serialize for HermOp {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.side();
        let rows = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..n).map(|i| (0..n).map(|j| f(&self.mat[(i, j)])).collect()).collect()
        };
        MatrixJson { dims: self.dims.0.clone(), re: rows(|z| z.re), im: rows(|z| z.im) }
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HermOp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = MatrixJson::deserialize(deserializer)?;
        let dims = DimVec::new(raw.dims).map_err(D::Error::custom)?;
        let n = dims.total();
        if raw.re.len() != n || raw.im.len() != n {
            return Err(D::Error::custom(format!("expected {n} rows in `re` and `im`")));
        }
        let mut mat = CMat::zeros(n, n);
        for i in 0..n {
            if raw.re[i].len() != n || raw.im[i].len() != n {
                return Err(D::Error::custom(format!("row {i} does not have {n} entries")));
            }
            for j in 0..n {
                mat[(i, j)] = C64::new(raw.re[i][j], raw.im[i][j]);
            }
        }
        Ok(HermOp { dims, mat })
    }
}

/// Eigenvalue sign counts of a Hermitian matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inertia {
    pub n_neg: usize,
    pub n_zero: usize,
    pub n_pos: usize,
    /// Absolute threshold that separated zero from nonzero eigenvalues.
    pub tolerance: f64,
}

/// `(A ⊗ B)[(i,k),(j,l)] = A[i,j] B[k,l]`; works for rectangular factors.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn hermitian_residual(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Accepts `m` when `max|M - M^†| <= EPS_HERM * max(1, ||M||_op)`.
pub fn check_hermitian(m: &CMat) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
    }
    let residual = hermitian_residual(m);
    // max|entry| <= ||M||_op, so the cheap scale settles the common case.
    let cheap = EPS_HERM * m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if residual <= cheap {
        return Ok(());
    }
    let allowed = EPS_HERM * operator_norm(m).max(1.0);
    if residual <= allowed {
        Ok(())
    } else {
        Err(Error::NotHermitian { residual, allowed })
    }
}

/// Hermitian part `(M + M^†)/2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub fn partial_trace(m: &HermOp, keep: &[usize]) -> Result<HermOp> {
    let dims = m.dims();
    let p = dims.len();
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    for &k in &keep_sorted {
        dims.check_subsystem(k)?;
    }
    if keep_sorted.len() == p {
        return Ok(m.clone());
    }
    let traced: Vec<usize> = (0..p).filter(|k| !keep_sorted.contains(k)).collect();
    let kept_dims: Vec<usize> = keep_sorted.iter().map(|&k| dims.as_slice()[k]).collect();
    let out_dims = if kept_dims.is_empty() { DimVec::single(1)? } else { DimVec::new(kept_dims)? };
    let traced_dims = DimVec::new(traced.iter().map(|&k| dims.as_slice()[k]).collect())?;

    // Flat indices grouped by traced component, ordered by kept component.
    let n_keep = out_dims.total();
    let mut groups = vec![vec![0usize; n_keep]; traced_dims.total()];
    for flat in 0..dims.total() {
        let idx = dims.multi_index(flat);
        let k_idx: Vec<usize> = keep_sorted.iter().map(|&k| idx[k]).collect();
        let t_idx: Vec<usize> = traced.iter().map(|&k| idx[k]).collect();
        let kf = if k_idx.is_empty() { 0 } else { out_dims.flat_index(&k_idx) };
        groups[traced_dims.flat_index(&t_idx)][kf] = flat;
    }

    let src = m.matrix();
    let mut out = CMat::zeros(n_keep, n_keep);
    for group in &groups {
        for (r, &fr) in group.iter().enumerate() {
            for (c, &fc) in group.iter().enumerate() {
                out[(r, c)] += src[(fr, fc)];
            }
        }
    }
    HermOp::new(out_dims, out)
}

/// Transposes the `sub`-th tensor factor, leaving the others in place.
pub fn partial_transpose(m: &HermOp, sub: usize) -> Result<HermOp> {
    let dims = m.dims();
    dims.check_subsystem(sub)?;
    let stride = dims.strides()[sub];
    let d = dims.as_slice()[sub];
    let n = dims.total();
    let src = m.matrix();
    let mut out = CMat::zeros(n, n);
    for col in 0..n {
        let cc = (col / stride) % d;
        for row in 0..n {
            let rc = (row / stride) % d;
            let new_row = row - rc * stride + cc * stride;
            let new_col = col - cc * stride + rc * stride;
            out[(new_row, new_col)] = src[(row, col)];
        }
    }
    HermOp::new(dims.clone(), out)
}

/// Eigendecomposition of a Hermitian matrix, retried under diagonal shifts
/// when the QR sweep breaks down on exactly sparse input.
pub(crate) fn symmetric_eigen(h: CMat) -> Result<SymmetricEigen<C64, Dyn>> {
    let finite = |e: &SymmetricEigen<C64, Dyn>| e.eigenvalues.iter().all(|v| v.is_finite());
    let first = SymmetricEigen::new(h.clone());
    if finite(&first) {
        return Ok(first);
    }
    let n = h.nrows();
    let scale = h.iter().fold(0.0f64, |acc, z| acc.max(z.norm())).max(1.0);
    for s in [0.5, 0.37, 1.3] {
        let mut eig = SymmetricEigen::new(&h + CMat::identity(n, n) * C64::new(s * scale, 0.0));
        if finite(&eig) {
            eig.eigenvalues.iter_mut().for_each(|v| *v -= s * scale);
            return Ok(eig);
        }
    }
    Err(Error::NumericalFailure(format!("Hermitian eigensolver failed on a {n}x{n} matrix")))
}

/// Ascending eigenvalues and matching orthonormal eigenvectors (as columns).
pub fn herm_eigh(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    check_hermitian(m)?;
    let eig = symmetric_eigen(hermitian_part(m))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn herm_eigvals(m: &CMat) -> Result<Vec<f64>> {
    check_hermitian(m)?;
    let mut values: Vec<f64> = symmetric_eigen(hermitian_part(m))?.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

pub fn herm_eigs(m: &HermOp) -> Result<Vec<f64>> {
    herm_eigvals(m.matrix())
}

/// Counts eigenvalues below `-tau`, within `[-tau, tau]` and above `tau`, where
/// `tau = eps_neg * max(1, ||M||_op)`.
pub fn inertia_of_values(values: &[f64], eps_neg: f64) -> Inertia {
    let scale = values.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let tolerance = eps_neg * scale;
    let n_neg = values.iter().filter(|&&v| v < -tolerance).count();
    let n_pos = values.iter().filter(|&&v| v > tolerance).count();
    Inertia { n_neg, n_zero: values.len() - n_neg - n_pos, n_pos, tolerance }
}

pub fn inertia_mat(m: &CMat, eps_neg: f64) -> Result<Inertia> {
    Ok(inertia_of_values(&herm_eigvals(m)?, eps_neg))
}

pub fn inertia(m: &HermOp, eps_neg: f64) -> Result<Inertia> {
    inertia_mat(m.matrix(), eps_neg)
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    m.singular_values().iter().copied().collect()
}

/// Sum of singular values.
pub fn trace_norm(m: &CMat) -> f64 {
    singular_values(m).iter().sum()
}

/// Largest singular value.
pub fn operator_norm(m: &CMat) -> f64 {
    singular_values(m).into_iter().fold(0.0, f64::max)
}

/// Trace norm of a Hermitian matrix via its spectrum.
pub fn herm_trace_norm(m: &CMat) -> Result<f64> {
    Ok(herm_eigvals(m)?.iter().map(|v| v.abs()).sum())
}

/// Reads `a` row by row.
pub fn vec_row_major(a: &CMat) -> CVec {
    CVec::from_iterator(a.len(), (0..a.nrows()).flat_map(|i| (0..a.ncols()).map(move |j| a[(i, j)])))
}

/// Inverse of [`vec_row_major`].
pub fn unvec_row_major(v: &CVec, rows: usize, cols: usize) -> Result<CMat> {
    if v.len() != rows * cols {
        return Err(Error::DimensionMismatch { expected: rows * cols, got: v.len() });
    }
    Ok(CMat::from_fn(rows, cols, |i, j| v[i * cols + j]))
}

/// Orthonormal basis of `span(vectors)` by modified Gram–Schmidt with one
/// re-orthogonalization pass; directions with residual norm below
/// `rel_tol * max ||v||` are dropped.
pub fn orthonormalize(vectors: &[CVec], rel_tol: f64) -> Vec<CVec> {
    let scale = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut basis: Vec<CVec> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let coeff = q.dotc(&w);
                w -= q * coeff;
            }
        }
        let norm = w.norm();
        if norm > rel_tol * scale && norm > 0.0 {
            basis.push(w / C64::new(norm, 0.0));
        }
    }
    basis
}

/// Orthogonal projection onto the span of `vectors`.
pub fn projection_from_span(dims: DimVec, vectors: &[CVec]) -> Result<HermOp> {
    let total = dims.total();
    if let Some(v) = vectors.iter().find(|v| v.len() != total) {
        return Err(Error::DimensionMismatch { expected: total, got: v.len() });
    }
    let basis = orthonormalize(vectors, 1e-12);
    if basis.is_empty() {
        return Err(Error::InvalidArgument("the vectors span the zero subspace".into()));
    }
    let mut p = CMat::zeros(total, total);
    for q in &basis {
        p += q * q.adjoint();
    }
    HermOp::new(dims, p)
}

/// Matrix with independent standard complex Gaussian entries
/// (real and imaginary parts each `N(0, 1)`).
pub fn random_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

/// Random Hermitian matrix `(G + G^†)/2` with Gaussian `G`.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    hermitian_part(&random_gaussian(n, n, rng))
}

/// Standard basis matrix `E_ij` of size `rows x cols`.
pub fn basis_matrix(rows: usize, cols: usize, i: usize, j: usize) -> CMat {
    let mut e = CMat::zeros(rows, cols);
    e[(i, j)] = ONE;
    e
}

/// `Tr(A^† B)`.
pub fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Maximally entangled vector `(1/sqrt(n)) sum_j |j>|j>` on `C^n ⊗ C^n`.
pub fn max_entangled(n: usize) -> CVec {
    let mut v = CVec::zeros(n * n);
    let amp = C64::new(1.0 / (n as f64).sqrt(), 0.0);
    for j in 0..n {
        v[j * n + j] = amp;
    }
    v
}
