//! Primal-dual interior-point solver for block-diagonal complex Hermitian SDPs.
//!
//! Problems are posed in linear-matrix-inequality form
//!
//! ```text
//!   maximize    b^T y
//!   subject to  S = C - Σ_i y_i A_i ⪰ 0
//! ```
//!
//! with real `y` and Hermitian block-diagonal `C`, `A_i`. The paired problem is
//! `minimize <C, X>` subject to `<A_i, X> = b_i`, `X ⪰ 0`. Iterates follow the
//! HKM search direction with Mehrotra's predictor-corrector and an infeasible
//! starting point. Nonnegative scalar variables are modelled as `1 x 1` blocks.

use std::fmt;

use nalgebra::{Cholesky, DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::tensor::{hermitian_part, C64, CMat, ZERO};

/// Nonzero entries of a Hermitian matrix; both triangles are stored.
#[derive(Clone, Debug, Default)]
pub struct SparseHerm {
    pub entries: Vec<(usize, usize, C64)>,
}

impl SparseHerm {
    /// Keeps the entries of `m` whose modulus exceeds `drop_tol`.
    pub fn from_dense(m: &CMat, drop_tol: f64) -> Self {
        let mut entries = Vec::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let v = m[(r, c)];
                if v.norm() > drop_tol {
                    entries.push((r, c, v));
                }
            }
        }
        Self { entries }
    }

    pub fn push(&mut self, r: usize, c: usize, v: C64) {
        self.entries.push((r, c, v));
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    fn add_to(&self, target: &mut CMat, scale: f64) {
        for &(r, c, v) in &self.entries {
            target[(r, c)] += v * scale;
        }
    }

    /// `Re Tr(A Z)`.
    fn inner(&self, z: &CMat) -> f64 {
        self.entries.iter().map(|&(r, c, v)| (v * z[(c, r)]).re).sum()
    }

    fn frobenius(&self) -> f64 {
        self.entries.iter().map(|e| e.2.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// An SDP in LMI form; see the module docs.
#[derive(Clone, Debug)]
pub struct LmiProblem {
    pub block_sizes: Vec<usize>,
    pub c: Vec<CMat>,
    /// Coefficient matrix of each variable, as `(block, entries)` parts.
    pub a: Vec<Vec<(usize, SparseHerm)>>,
    pub b: Vec<f64>,
}

impl LmiProblem {
    pub fn new(block_sizes: Vec<usize>) -> Self {
        let c = block_sizes.iter().map(|&n| CMat::zeros(n, n)).collect();
        Self { block_sizes, c, a: Vec::new(), b: Vec::new() }
    }

    /// Adds a variable with objective coefficient `b_i`; returns its index.
    pub fn add_variable(&mut self, objective: f64, parts: Vec<(usize, SparseHerm)>) -> usize {
        self.a.push(parts);
        self.b.push(objective);
        self.a.len() - 1
    }

    pub fn num_variables(&self) -> usize {
        self.a.len()
    }

    /// `S(y) = C - Σ y_i A_i`, block by block.
    pub fn slack(&self, y: &[f64]) -> Vec<CMat> {
        let mut s = self.c.clone();
        for (yi, parts) in y.iter().zip(&self.a) {
            for (k, part) in parts {
                part.add_to(&mut s[*k], -yi);
            }
        }
        s
    }

    fn apply_a(&self, z: &[CMat]) -> DVector<f64> {
        DVector::from_iterator(
            self.a.len(),
            self.a.iter().map(|parts| parts.iter().map(|(k, p)| p.inner(&z[*k])).sum::<f64>()),
        )
    }

    fn apply_at(&self, y: &DVector<f64>) -> Vec<CMat> {
        let mut out: Vec<CMat> = self.block_sizes.iter().map(|&n| CMat::zeros(n, n)).collect();
        for (yi, parts) in y.iter().zip(&self.a) {
            for (k, part) in parts {
                part.add_to(&mut out[*k], *yi);
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

impl fmt::Display for SdpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SdpStatus::Optimal => "optimal",
            SdpStatus::Infeasible => "infeasible",
            SdpStatus::NumericalFailure => "numerical-failure",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    /// `||b - A(X)|| / (1 + ||b||)`.
    pub primal_residual: f64,
    /// `||C - S - A^T y||_F / (1 + ||C||_F)`.
    pub dual_residual: f64,
    /// `<X, S> / (1 + |<C,X>| + |b^T y|)`.
    pub relative_gap: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
}

impl fmt::Display for SolveStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "iterations={} primal_res={:.2e} dual_res={:.2e} gap={:.2e}",
            self.iterations, self.primal_residual, self.dual_residual, self.relative_gap
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpSettings {
    /// Target for the relative residuals and gap.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 150 }
    }
}

#[derive(Clone, Debug)]
pub struct LmiSolution {
    pub status: SdpStatus,
    pub y: Vec<f64>,
    /// Primal matrix variable, one entry per block.
    pub x: Vec<CMat>,
    /// Dual slack `S ≈ C - Σ y_i A_i`, one entry per block; always ⪰ 0.
    pub s: Vec<CMat>,
    pub stats: SolveStats,
}

impl LmiSolution {
    /// Objective `b^T y` of the LMI side.
    pub fn objective(&self) -> f64 {
        self.stats.dual_objective
    }
}

fn chol(m: &CMat) -> Option<Cholesky<C64, nalgebra::Dyn>> {
    Cholesky::new(hermitian_part(m))
}

/// Largest `α` with `X + α dX ⪰ 0` (infinite when `dX ⪰ 0`).
fn max_step(x_chol: &Cholesky<C64, nalgebra::Dyn>, dx: &CMat) -> f64 {
    let l = x_chol.l();
    let t = l.solve_lower_triangular(dx).expect("nonsingular factor");
    let w = l.solve_lower_triangular(&t.adjoint()).expect("nonsingular factor");
    let lmin = match crate::tensor::symmetric_eigen(hermitian_part(&w)) {
        Ok(eig) => eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min),
        Err(_) => return 0.0,
    };
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn inner_re(a: &CMat, b: &CMat) -> f64 {
    // Re Tr(A B) for Hermitian A, B.
    a.iter().zip(b.transpose().iter()).map(|(x, y)| (x * y).re).sum()
}

fn frob(blocks: &[CMat]) -> f64 {
    blocks.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

struct Workspace<'a> {
    problem: &'a LmiProblem,
    /// Variables touching each block, with their part in that block.
    by_block: Vec<Vec<(usize, &'a SparseHerm)>>,
}

impl<'a> Workspace<'a> {
    fn new(problem: &'a LmiProblem) -> Self {
        let mut by_block = vec![Vec::new(); problem.block_sizes.len()];
        for (i, parts) in problem.a.iter().enumerate() {
            for (k, part) in parts {
                by_block[*k].push((i, part));
            }
        }
        Self { problem, by_block }
    }

    /// HKM Schur complement `M_ij = Re Tr(A_i X A_j S^{-1})`.
    fn schur(&self, x: &[CMat], s_inv: &[CMat]) -> DMatrix<f64> {
        let m = self.problem.num_variables();
        let rows: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|i| {
                let mut row = vec![0.0; m];
                for (k, part) in &self.problem.a[i] {
                    let n = self.problem.block_sizes[*k];
                    let f = sandwich(part, &s_inv[*k], &x[*k], n);
                    for &(j, other) in &self.by_block[*k] {
                        row[j] += other.inner(&f);
                    }
                }
                row
            })
            .collect();
        let mut out = DMatrix::zeros(m, m);
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                out[(i, j)] = *v;
            }
        }
        (&out + out.transpose()) * 0.5
    }
}

/// `S^{-1} A X` for a sparse Hermitian `A`.
fn sandwich(a: &SparseHerm, s_inv: &CMat, x: &CMat, n: usize) -> CMat {
    if a.nnz() > 2 * n {
        let mut dense = CMat::zeros(n, n);
        a.add_to(&mut dense, 1.0);
        return s_inv * dense * x;
    }
    let mut f = CMat::zeros(n, n);
    for &(p, q, alpha) in &a.entries {
        for r in 0..n {
            let coeff = alpha * x[(q, r)];
            if coeff == ZERO {
                continue;
            }
            let col = s_inv.column(p);
            let mut target = f.column_mut(r);
            target.axpy(coeff, &col, C64::new(1.0, 0.0));
        }
    }
    f
}

struct Direction {
    dx: Vec<CMat>,
    dy: DVector<f64>,
    ds: Vec<CMat>,
}

pub fn solve(problem: &LmiProblem, settings: &SdpSettings) -> LmiSolution {
    let ws = Workspace::new(problem);
    let nb = problem.block_sizes.len();
    let n_total: usize = problem.block_sizes.iter().sum();
    let b = DVector::from_vec(problem.b.clone());
    let norm_b = b.norm();
    let norm_c = frob(&problem.c);

    // Infeasible start scaled to the data.
    let mut x = Vec::with_capacity(nb);
    let mut s = Vec::with_capacity(nb);
    for k in 0..nb {
        let n = problem.block_sizes[k];
        let nf = n as f64;
        let mut xi = 10f64.max(nf.sqrt());
        let mut eta = 10f64.max(nf.sqrt()).max(problem.c[k].norm());
        for (i, parts) in problem.a.iter().enumerate() {
            for (kk, part) in parts {
                if *kk == k {
                    let fa = part.frobenius();
                    xi = xi.max(nf * (1.0 + problem.b[i].abs()) / (1.0 + fa));
                    eta = eta.max(fa);
                }
            }
        }
        x.push(CMat::identity(n, n) * C64::new(xi, 0.0));
        s.push(CMat::identity(n, n) * C64::new(eta, 0.0));
    }
    let mut y = DVector::<f64>::zeros(problem.num_variables());

    let mut stats = SolveStats::default();
    let mut status = SdpStatus::NumericalFailure;
    let mut best: Option<(f64, Vec<CMat>, DVector<f64>, Vec<CMat>, SolveStats)> = None;

    for iter in 0..=settings.max_iter {
        let ax = problem.apply_a(&x);
        let rp = &b - &ax;
        let aty = problem.apply_at(&y);
        let rd: Vec<CMat> = (0..nb).map(|k| &problem.c[k] - &s[k] - &aty[k]).collect();
        let pobj: f64 = (0..nb).map(|k| inner_re(&problem.c[k], &x[k])).sum();
        let dobj = b.dot(&y);
        let xs: f64 = (0..nb).map(|k| inner_re(&x[k], &s[k])).sum();
        let mu = xs / n_total as f64;
        stats = SolveStats {
            iterations: iter,
            primal_residual: rp.norm() / (1.0 + norm_b),
            dual_residual: frob(&rd) / (1.0 + norm_c),
            relative_gap: xs.abs() / (1.0 + pobj.abs() + dobj.abs()),
            primal_objective: pobj,
            dual_objective: dobj,
        };
        let merit = stats.primal_residual.max(stats.dual_residual).max(stats.relative_gap);
        if best.as_ref().is_none_or(|b| merit < b.0) {
            best = Some((merit, x.clone(), y.clone(), s.clone(), stats));
        }
        if merit < settings.tol {
            status = SdpStatus::Optimal;
            break;
        }
        let scale = 1.0 + norm_b + norm_c;
        if frob(&x) > 1e12 * scale || y.norm() > 1e12 * scale {
            status = SdpStatus::Infeasible;
            break;
        }
        if iter == settings.max_iter {
            break;
        }

        let x_chol: Option<Vec<_>> = x.iter().map(chol).collect();
        let s_chol: Option<Vec<_>> = s.iter().map(chol).collect();
        let (Some(x_chol), Some(s_chol)) = (x_chol, s_chol) else {
            break;
        };
        let s_inv: Vec<CMat> = s_chol.iter().map(|c| hermitian_part(&c.inverse())).collect();
        let schur = ws.schur(&x, &s_inv);
        let Some(m_chol) = factor_schur(schur) else {
            break;
        };

        let direction = |rc: &[CMat]| -> Direction {
            let z: Vec<CMat> = (0..nb).map(|k| (&x[k] * &rd[k] - &rc[k]) * &s_inv[k]).collect();
            let rhs = &rp + problem.apply_a(&z);
            let dy = m_chol.solve(&rhs);
            let atdy = problem.apply_at(&dy);
            let ds: Vec<CMat> = (0..nb).map(|k| &rd[k] - &atdy[k]).collect();
            let dx: Vec<CMat> =
                (0..nb).map(|k| hermitian_part(&((&rc[k] - &x[k] * &ds[k]) * &s_inv[k]))).collect();
            Direction { dx, dy, ds }
        };
        let step_lengths = |d: &Direction| -> (f64, f64) {
            let ap = (0..nb).map(|k| max_step(&x_chol[k], &d.dx[k])).fold(f64::INFINITY, f64::min);
            let ad = (0..nb).map(|k| max_step(&s_chol[k], &d.ds[k])).fold(f64::INFINITY, f64::min);
            (ap, ad)
        };

        // Predictor.
        let rc_aff: Vec<CMat> = (0..nb).map(|k| -(&x[k] * &s[k])).collect();
        let pred = direction(&rc_aff);
        let (ap, ad) = step_lengths(&pred);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let xs_aff: f64 = (0..nb)
            .map(|k| {
                let xn = &x[k] + &pred.dx[k] * C64::new(ap, 0.0);
                let sn = &s[k] + &pred.ds[k] * C64::new(ad, 0.0);
                inner_re(&xn, &sn)
            })
            .sum();
        let expon = 1f64.max(3.0 * ap.min(ad).powi(2));
        let sigma = if xs > 0.0 { (xs_aff / xs).max(0.0).powf(expon).min(1.0) } else { 0.0 };

        // Corrector.
        let rc: Vec<CMat> = (0..nb)
            .map(|k| {
                let n = problem.block_sizes[k];
                CMat::identity(n, n) * C64::new(sigma * mu, 0.0) - &x[k] * &s[k] - &pred.dx[k] * &pred.ds[k]
            })
            .collect();
        let corr = direction(&rc);
        let (ap2, ad2) = step_lengths(&corr);
        let gamma = 0.9 + 0.09 * ap.min(ad);
        let ap2 = (gamma * ap2).min(1.0);
        let ad2 = (gamma * ad2).min(1.0);
        if ap2 < 1e-12 && ad2 < 1e-12 {
            break;
        }
        for k in 0..nb {
            x[k] = hermitian_part(&(&x[k] + &corr.dx[k] * C64::new(ap2, 0.0)));
            s[k] = hermitian_part(&(&s[k] + &corr.ds[k] * C64::new(ad2, 0.0)));
        }
        y += &corr.dy * ad2;
    }

    if status == SdpStatus::NumericalFailure {
        if let Some((_, bx, by, bs, bstats)) = best {
            x = bx;
            y = by;
            s = bs;
            stats = bstats;
        }
    }
    LmiSolution { status, y: y.iter().copied().collect(), x, s, stats }
}

/// Cholesky of the Schur complement, with growing diagonal regularization
/// when the factorization breaks down near the boundary.
fn factor_schur(m: DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    let diag_max = m.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some(c);
    }
    for scale in [1e-14, 1e-12, 1e-10] {
        let mut reg = m.clone();
        for i in 0..reg.nrows() {
            reg[(i, i)] += scale * diag_max;
        }
        if let Some(c) = Cholesky::new(reg) {
            return Some(c);
        }
    }
    None
}
