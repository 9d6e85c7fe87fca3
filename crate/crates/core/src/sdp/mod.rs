//! Semidefinite programs built on the interior-point solver: the diamond norm,
//! the subspace witness program and the finer-map feasibility test.

mod solver;

pub use solver::{solve, LmiProblem, LmiSolution, SdpSettings, SdpStatus, SolveStats, SparseHerm};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::HPMap;
use crate::tensor::{
    hermitian_part, inertia_mat, operator_norm, partial_transpose, C64, CMat, DimVec, HermOp, EPS_NEG,
};

/// Outcome of a conic solve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SdpResult {
    pub status: SdpStatus,
    pub objective: f64,
    /// Optimal matrix variables of the problem as posed.
    pub certificates: Vec<HermOp>,
    pub stats: SolveStats,
}

fn solver_error(sol: &LmiSolution, what: &str) -> Error {
    Error::Solver { status: sol.status.to_string(), detail: what.to_string(), stats: sol.stats }
}

/// Orthonormal Hermitian basis of `n x n` matrices, shifted by `offset` on
/// both axes: `E_kk`, `(E_kl + E_lk)/√2` and `i(E_kl - E_lk)/√2`.
fn herm_basis(n: usize, offset: usize) -> Vec<SparseHerm> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(n * n);
    for k in 0..n {
        for l in k..n {
            let (r, c) = (offset + k, offset + l);
            if k == l {
                out.push(SparseHerm { entries: vec![(r, r, C64::new(1.0, 0.0))] });
            } else {
                out.push(SparseHerm { entries: vec![(r, c, C64::new(h, 0.0)), (c, r, C64::new(h, 0.0))] });
                out.push(SparseHerm { entries: vec![(r, c, C64::new(0.0, h)), (c, r, C64::new(0.0, -h))] });
            }
        }
    }
    out
}

fn negated(a: &SparseHerm) -> SparseHerm {
    SparseHerm { entries: a.entries.iter().map(|&(r, c, v)| (r, c, -v)).collect() }
}

fn to_dense(a: &SparseHerm, n: usize, offset: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    for &(r, c, v) in &a.entries {
        m[(r - offset, c - offset)] += v;
    }
    m
}

/// Partial trace over the second factor of a sparse operator on `C^a ⊗ C^b`.
fn trace_out_second(a: &SparseHerm, b: usize, offset: usize) -> SparseHerm {
    let mut out = SparseHerm::default();
    for &(r, c, v) in &a.entries {
        let (r, c) = (r - offset, c - offset);
        if r % b == c % b {
            out.push(r / b, c / b, v);
        }
    }
    out
}

fn identity_sparse(n: usize, scale: f64) -> SparseHerm {
    SparseHerm { entries: (0..n).map(|i| (i, i, C64::new(scale, 0.0))).collect() }
}

fn assemble(basis: &[SparseHerm], coeffs: &[f64], n: usize, offset: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    for (b, y) in basis.iter().zip(coeffs) {
        for &(r, c, v) in &b.entries {
            m[(r - offset, c - offset)] += v * *y;
        }
    }
    m
}

/// Diamond norm of a Hermiticity-preserving map with default settings.
pub fn diamond_norm(map: &HPMap) -> Result<f64> {
    Ok(diamond_norm_with(map, &SdpSettings::default())?.objective)
}

/// Diamond norm through the two-sided block program
///
/// ```text
///   minimize ½(||Tr_out Y0|| + ||Tr_out Y1||)
///   subject to [[Y0, -J], [-J^†, Y1]] ⪰ 0.
/// ```
///
/// Because `J` is Hermitian, swapping `Y0` and `Y1` preserves feasibility and
/// the objective, so an optimum with `Y0 = Y1 = Y` exists. Conjugating the
/// block matrix by a Hadamard on the block index turns the constraint into
/// `Y - J ⪰ 0` and `Y + J ⪰ 0`, which is what is solved here. The
/// certificates are `Y0` and `Y1`.
pub fn diamond_norm_with(map: &HPMap, settings: &SdpSettings) -> Result<SdpResult> {
    let j = map.choi().matrix();
    let (a, b) = (map.n_in(), map.n_out());
    let n = a * b;
    if j.norm() == 0.0 {
        let y = HermOp::zeros(map.choi().dims().clone());
        return Ok(SdpResult {
            status: SdpStatus::Optimal,
            objective: 0.0,
            certificates: vec![y.clone(), y],
            stats: SolveStats::default(),
        });
    }
    // Blocks: Y - J, Y + J, t I - Tr_out Y.
    let mut p = LmiProblem::new(vec![n, n, a]);
    p.c[0] = -j.clone();
    p.c[1] = j.clone();
    let basis = herm_basis(n, 0);
    for e in &basis {
        let minus = negated(e);
        p.add_variable(0.0, vec![(0, minus.clone()), (1, minus), (2, trace_out_second(e, b, 0))]);
    }
    p.add_variable(-1.0, vec![(2, identity_sparse(a, -1.0))]);
    let sol = solve(&p, settings);
    if sol.status != SdpStatus::Optimal {
        return Err(solver_error(&sol, "diamond norm"));
    }
    let y = hermitian_part(&assemble(&basis, &sol.y[..basis.len()], n, 0));
    let y = HermOp::new(map.choi().dims().clone(), y)?;
    Ok(SdpResult {
        status: sol.status,
        objective: (-sol.objective()).max(0.0),
        certificates: vec![y.clone(), y],
        stats: sol.stats,
    })
}

/// The two-sided block program with independent `Y0`, `Y1`. Slower than
/// [`diamond_norm_with`] (twice the variables, one block of double size);
/// kept as a cross-check.
pub fn diamond_norm_two_sided(map: &HPMap, settings: &SdpSettings) -> Result<SdpResult> {
    let j = map.choi().matrix();
    let (a, b) = (map.n_in(), map.n_out());
    let n = a * b;
    // Blocks: [[Y0, -J], [-J, Y1]], t0 I - Tr_out Y0, t1 I - Tr_out Y1.
    let mut p = LmiProblem::new(vec![2 * n, a, a]);
    let mut c0 = CMat::zeros(2 * n, 2 * n);
    c0.view_mut((0, n), (n, n)).copy_from(&(-j));
    c0.view_mut((n, 0), (n, n)).copy_from(&(-j.adjoint()));
    p.c[0] = c0;
    let basis0 = herm_basis(n, 0);
    let basis1 = herm_basis(n, n);
    for e in &basis0 {
        p.add_variable(0.0, vec![(0, negated(e)), (1, trace_out_second(e, b, 0))]);
    }
    for e in &basis1 {
        p.add_variable(0.0, vec![(0, negated(e)), (2, trace_out_second(e, b, n))]);
    }
    p.add_variable(-0.5, vec![(1, identity_sparse(a, -1.0))]);
    p.add_variable(-0.5, vec![(2, identity_sparse(a, -1.0))]);
    let sol = solve(&p, settings);
    if sol.status != SdpStatus::Optimal {
        return Err(solver_error(&sol, "diamond norm"));
    }
    let k = basis0.len();
    let y0 = hermitian_part(&assemble(&basis0, &sol.y[..k], n, 0));
    let y1 = hermitian_part(&assemble(&basis1, &sol.y[k..2 * k], n, n));
    let dims = map.choi().dims().clone();
    Ok(SdpResult {
        status: sol.status,
        objective: (-sol.objective()).max(0.0),
        certificates: vec![HermOp::new(dims.clone(), y0)?, HermOp::new(dims, y1)?],
        stats: sol.stats,
    })
}

pub fn diamond_distance(a: &HPMap, b: &HPMap) -> Result<f64> {
    diamond_distance_with(a, b, &SdpSettings::default())
}

pub fn diamond_distance_with(a: &HPMap, b: &HPMap, settings: &SdpSettings) -> Result<f64> {
    Ok(diamond_norm_with(&a.combine(1.0, b, -1.0)?, settings)?.objective)
}

/// A linear map `Λ_j` feeding the witness program.
#[derive(Clone, Debug)]
pub enum LinearTransform {
    Identity,
    /// Partial transpose on a 0-based subsystem of the ambient dims.
    PartialTranspose { sub: usize },
    /// `I_m ⊗ Φ` for a map `Φ`.
    TensorIdentity { map: HPMap, m: usize },
}

impl LinearTransform {
    /// Side length of the input space given the ambient dims.
    fn input_side(&self, dims: &DimVec) -> Result<usize> {
        match self {
            LinearTransform::Identity => Ok(dims.total()),
            LinearTransform::PartialTranspose { sub } => {
                dims.check_subsystem(*sub)?;
                Ok(dims.total())
            }
            LinearTransform::TensorIdentity { map, m } => {
                if m * map.n_out() != dims.total() {
                    return Err(Error::DimensionMismatch { expected: dims.total(), got: m * map.n_out() });
                }
                Ok(m * map.n_in())
            }
        }
    }

    pub fn apply(&self, dims: &DimVec, x: &CMat) -> Result<CMat> {
        match self {
            LinearTransform::Identity => Ok(x.clone()),
            LinearTransform::PartialTranspose { sub } => {
                let op = HermOp::new(dims.clone(), hermitian_part(x))?;
                Ok(partial_transpose(&op, *sub)?.into_matrix())
            }
            LinearTransform::TensorIdentity { map, m } => map.tensor_with_identity_mat(*m, x),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessResult {
    pub c_opt: f64,
    /// `Σ_j Λ_j(X_j)`.
    pub witness: HermOp,
    /// The PSD matrices `X_j`, one per transform.
    pub components: Vec<HermOp>,
    pub neg_count: usize,
    pub stats: SolveStats,
}

impl WitnessResult {
    /// Whether `c_opt` clears 1 by the margin required to claim a witness.
    pub fn certifies(&self, tol: f64) -> bool {
        self.c_opt >= 1.0 + 10.0 * tol
    }
}

/// Maximizes `c` subject to `I - cP - Σ_j Λ_j(X_j) ⪰ 0` and `X_j ⪰ 0`.
pub fn subspace_witness_sdp(p: &HermOp, family: &[LinearTransform]) -> Result<WitnessResult> {
    subspace_witness_sdp_with(p, family, &SdpSettings::default())
}

pub fn subspace_witness_sdp_with(
    proj: &HermOp,
    family: &[LinearTransform],
    settings: &SdpSettings,
) -> Result<WitnessResult> {
    let dims = proj.dims().clone();
    let d = dims.total();
    let pm = proj.matrix();
    let scale = operator_norm(pm);
    if scale < 1e-12 {
        return Err(Error::InvalidArgument("projection is zero".into()));
    }
    if (pm * pm - pm).norm() > 1e-8 * (1.0 + pm.norm()) {
        return Err(Error::InvalidArgument("operator is not a projection".into()));
    }
    let sides: Vec<usize> = family.iter().map(|t| t.input_side(&dims)).collect::<Result<_>>()?;

    let mut blocks = vec![d];
    blocks.extend(&sides);
    let mut prob = LmiProblem::new(blocks);
    prob.c[0] = CMat::identity(d, d);
    prob.add_variable(1.0, vec![(0, SparseHerm::from_dense(pm, 1e-14))]);
    let mut bases = Vec::with_capacity(family.len());
    for (jdx, (t, &side)) in family.iter().zip(&sides).enumerate() {
        let basis = herm_basis(side, 0);
        for e in &basis {
            let image = t.apply(&dims, &to_dense(e, side, 0))?;
            prob.add_variable(0.0, vec![(0, SparseHerm::from_dense(&image, 1e-14)), (jdx + 1, negated(e))]);
        }
        bases.push(basis);
    }
    let sol = solve(&prob, settings);
    if sol.status != SdpStatus::Optimal {
        return Err(solver_error(&sol, "subspace witness program"));
    }

    let mut witness = CMat::zeros(d, d);
    let mut components = Vec::with_capacity(family.len());
    for (jdx, (t, &side)) in family.iter().zip(&sides).enumerate() {
        let x = hermitian_part(&sol.s[jdx + 1]);
        witness += t.apply(&dims, &x)?;
        let xdims = match t {
            LinearTransform::TensorIdentity { map, m } => DimVec::pair(*m, map.n_in())?,
            _ => dims.clone(),
        };
        debug_assert_eq!(xdims.total(), side);
        components.push(HermOp::new(xdims, x)?);
    }
    let witness = hermitian_part(&witness);
    let neg_count = inertia_mat(&witness, EPS_NEG)?.n_neg;
    Ok(WitnessResult {
        c_opt: sol.y[0],
        witness: HermOp::new(dims, witness)?,
        components,
        neg_count,
        stats: sol.stats,
    })
}

/// Turns a subspace certified by the witness program with family
/// `{I_m ⊗ Φ^*}` into a state `ρ` whose image `(I_m ⊗ Φ^*)(ρ)` has at least
/// `rank(P)` negative eigenvalues.
pub fn state_from_subspace(map: &HPMap, m: usize, p: &HermOp) -> Result<HermOp> {
    state_from_subspace_with(map, m, p, &SdpSettings::default())
}

pub fn state_from_subspace_with(map: &HPMap, m: usize, p: &HermOp, settings: &SdpSettings) -> Result<HermOp> {
    let family = [LinearTransform::TensorIdentity { map: map.adjoint(), m }];
    let res = subspace_witness_sdp_with(p, &family, settings)?;
    if !res.certifies(settings.tol) {
        return Err(Error::NotFound(format!(
            "subspace not certifiably non-positive for `{}` (c_opt = {:.9})",
            map.label(),
            res.c_opt
        )));
    }
    let x = res.components.into_iter().next().expect("one component");
    let tr = x.trace().re;
    Ok(x.scale(1.0 / tr))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FinerResult {
    pub feasible: bool,
    /// Best `c` found; meaningful when feasible.
    pub c: f64,
    /// `P = c J(Φ2) - J(Φ1)` when feasible.
    pub certificate: Option<HermOp>,
    /// Largest `t` with `c J(Φ2) - J(Φ1) ⪰ t I` over admissible `c`.
    pub margin: f64,
    pub c_max: f64,
    pub stats: SolveStats,
}

/// Decides whether `J(Φ1) = c J(Φ2) - P` for some `c > 0` and `P ⪰ 0`.
///
/// Solved as: maximize `t` subject to `c J(Φ2) - J(Φ1) - t I ⪰ 0` and
/// `0 ≤ c ≤ c_max`, with `c_max = 1e3 · max(1, ||J1|| / ||J2||)`.
pub fn finer_check(phi1: &HPMap, phi2: &HPMap) -> Result<FinerResult> {
    finer_check_with(phi1, phi2, &SdpSettings::default())
}

pub fn finer_check_with(phi1: &HPMap, phi2: &HPMap, settings: &SdpSettings) -> Result<FinerResult> {
    if phi1.n_in() != phi2.n_in() || phi1.n_out() != phi2.n_out() {
        return Err(Error::DimensionMismatch {
            expected: phi1.n_in() * phi1.n_out(),
            got: phi2.n_in() * phi2.n_out(),
        });
    }
    let j1 = phi1.choi().matrix();
    let j2 = phi2.choi().matrix();
    let n = j1.nrows();
    let n1 = operator_norm(j1);
    let n2 = operator_norm(j2);
    if n2 == 0.0 {
        return Err(Error::InvalidArgument("second map is zero".into()));
    }
    let c_max = 1e3 * (n1 / n2).max(1.0);

    let mut prob = LmiProblem::new(vec![n, 1, 1]);
    prob.c[0] = -j1.clone();
    prob.c[2][(0, 0)] = C64::new(c_max, 0.0);
    prob.add_variable(
        0.0,
        vec![
            (0, negated(&SparseHerm::from_dense(j2, 0.0))),
            (1, identity_sparse(1, -1.0)),
            (2, identity_sparse(1, 1.0)),
        ],
    );
    prob.add_variable(1.0, vec![(0, identity_sparse(n, 1.0))]);
    let sol = solve(&prob, settings);
    if sol.status != SdpStatus::Optimal {
        return Err(solver_error(&sol, "finer-map feasibility"));
    }
    let (c, t) = (sol.y[0], sol.y[1]);
    let feasible = t >= -1e-6 * n1.max(1.0) && c > 0.0;
    let certificate = if feasible {
        let pm = hermitian_part(&(j2 * C64::new(c, 0.0) - j1));
        Some(HermOp::new(phi1.choi().dims().clone(), pm)?)
    } else {
        None
    };
    Ok(FinerResult { feasible, c, certificate, margin: t, c_max, stats: sol.stats })
}
