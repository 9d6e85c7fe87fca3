//! Multipartite NPT subspaces built from level sets of multi-indices, their
//! explicit NPT certificates, decomposable witnesses, and two worked examples.

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::maps::{root_of_unity, HPMap};
use crate::sdp::{subspace_witness_sdp_with, LinearTransform, SdpSettings, WitnessResult};
use crate::tensor::{
    herm_eigvals, inertia_mat, partial_transpose, projection_from_span, random_gaussian, singular_values,
    unvec_row_major, vec_row_major, CMat, CVec, DimVec, HermOp, C64, EPS_NEG, ZERO,
};

/// Orthonormal vectors spanning a subspace of `C^{d_1} ⊗ ... ⊗ C^{d_p}`.
#[derive(Clone, Debug)]
pub struct SubspaceBasis {
    pub dims: DimVec,
    pub vectors: Vec<CVec>,
}

#[derive(Serialize, Deserialize)]
struct BasisJson {
    dims: DimVec,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl Serialize for SubspaceBasis {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BasisJson {
            dims: self.dims.clone(),
            re: self.vectors.iter().map(|v| v.iter().map(|z| z.re).collect()).collect(),
            im: self.vectors.iter().map(|v| v.iter().map(|z| z.im).collect()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SubspaceBasis {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = BasisJson::deserialize(d)?;
        if raw.re.len() != raw.im.len() {
            return Err(D::Error::custom("re and im hold different numbers of vectors"));
        }
        let total = raw.dims.total();
        let mut vectors = Vec::with_capacity(raw.re.len());
        for (re, im) in raw.re.iter().zip(&raw.im) {
            if re.len() != total || im.len() != total {
                return Err(D::Error::custom(format!("vector length must be {total}")));
            }
            vectors.push(CVec::from_iterator(total, re.iter().zip(im).map(|(a, b)| C64::new(*a, *b))));
        }
        Ok(Self { dims: raw.dims, vectors })
    }
}

impl SubspaceBasis {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// Orthogonal projection onto the span.
    pub fn projection(&self) -> Result<HermOp> {
        projection_from_span(self.dims.clone(), &self.vectors)
    }
}

/// Flat indices grouped by coordinate sum `s = 0, 1, ..., Σ(d_k - 1)`, each
/// group in increasing flat order.
pub fn levels(dims: &DimVec) -> Vec<Vec<usize>> {
    let max_level: usize = dims.as_slice().iter().map(|d| d - 1).sum();
    let mut out = vec![Vec::new(); max_level + 1];
    for flat in 0..dims.total() {
        let s: usize = dims.multi_index(flat).iter().sum();
        out[s].push(flat);
    }
    out
}

fn check_npt_dims(dims: &DimVec) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::InvalidDims(format!("need at least two subsystems, got {dims}")));
    }
    if dims.as_slice().iter().any(|&d| d < 2) {
        return Err(Error::InvalidDims(format!("every local dimension must be at least 2, got {dims}")));
    }
    Ok(())
}

/// `Π d_k - Σ d_k + p - 1`.
pub fn npt_subspace_dim(dims: &DimVec) -> usize {
    let d = dims.as_slice();
    d.iter().product::<usize>() + d.len() - 1 - d.iter().sum::<usize>()
}

/// Basis of the vectors whose entries sum to zero on every level.
///
/// Each level `I_s = {i_0 < i_1 < ...}` contributes the Helmert vectors
/// `(e_{i_0} + ... + e_{i_{t-1}} - t e_{i_t}) / sqrt(t(t+1))`.
pub fn npt_subspace_basis(dims: &DimVec) -> Result<SubspaceBasis> {
    check_npt_dims(dims)?;
    let total = dims.total();
    let mut vectors = Vec::with_capacity(npt_subspace_dim(dims));
    for level in levels(dims) {
        for t in 1..level.len() {
            let norm = ((t * (t + 1)) as f64).sqrt();
            let mut v = CVec::zeros(total);
            for &i in &level[..t] {
                v[i] = C64::new(1.0 / norm, 0.0);
            }
            v[level[t]] = C64::new(-(t as f64) / norm, 0.0);
            vectors.push(v);
        }
    }
    Ok(SubspaceBasis { dims: dims.clone(), vectors })
}

/// Whether every level sum of `v` vanishes up to `1e-10 ||v||`.
pub fn is_in_subspace(v: &CVec, dims: &DimVec) -> bool {
    if v.len() != dims.total() {
        return false;
    }
    let tol = 1e-10 * v.norm();
    levels(dims).iter().all(|level| level.iter().map(|&i| v[i]).sum::<C64>().norm() <= tol)
}

/// Explicit `2 x 2` principal submatrix of `T_k(ρ)` with negative determinant.
///
/// `subsystem` is 0-based and never the last subsystem.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NptCertificate {
    pub subsystem: usize,
    pub level: usize,
    pub i_prime: Vec<usize>,
    pub j_prime: Vec<usize>,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    /// Entries of `T_k(ρ)` at rows/columns `(a, b)`.
    pub submatrix: [[C64; 2]; 2],
    pub determinant: f64,
}

impl NptCertificate {
    /// Re-reads the submatrix from `T_k(ρ)` and checks the stored values.
    pub fn verify(&self, rho: &HermOp, tol: f64) -> Result<bool> {
        let t = partial_transpose(rho, self.subsystem)?;
        let dims = rho.dims();
        let (fa, fb) = (dims.flat_index(&self.a), dims.flat_index(&self.b));
        let m = t.matrix();
        let entries = [[m[(fa, fa)], m[(fa, fb)]], [m[(fb, fa)], m[(fb, fb)]]];
        let matches =
            (0..2).all(|r| (0..2).all(|c| (entries[r][c] - self.submatrix[r][c]).norm() <= tol));
        let det = (entries[0][0] * entries[1][1] - entries[0][1] * entries[1][0]).re;
        Ok(matches && det < 0.0)
    }
}

/// Builds an NPT certificate for a state supported on the level-sum-zero
/// subspace.
pub fn npt_certificate(rho: &HermOp) -> Result<NptCertificate> {
    let dims = rho.dims().clone();
    check_npt_dims(&dims)?;
    rho.check_hermitian()?;
    let m = rho.matrix();
    let tr = m.trace().re;
    if (tr - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidArgument(format!("state has trace {tr}, expected 1")));
    }
    let eigs = herm_eigvals(m)?;
    if eigs[0] < -1e-9 {
        return Err(Error::InvalidArgument(format!("state is not PSD (min eigenvalue {:.3e})", eigs[0])));
    }
    let lv = levels(&dims);
    // The complement of the subspace is spanned by the normalized level indicators.
    let leak: f64 = lv
        .iter()
        .map(|level| {
            let s: C64 = level.iter().flat_map(|&i| level.iter().map(move |&j| m[(i, j)])).sum();
            s.re / level.len() as f64
        })
        .sum();
    if leak > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "state is not supported on the NPT subspace (weight {leak:.3e} outside)"
        )));
    }

    let diag_tol = 1e-10;
    let (level, members) = lv
        .iter()
        .enumerate()
        .find(|(_, level)| level.iter().any(|&i| m[(i, i)].re > diag_tol))
        .ok_or_else(|| Error::InvalidArgument("state has no weight on any level".into()))?;

    // Level Gram matrix entries M_ij = Σ_a p_a conj(v_i) v_j = ρ_ji.
    let mut best = (0usize, 0usize, 0.0f64);
    for (x, &i) in members.iter().enumerate() {
        for &j in &members[x + 1..] {
            let g = m[(j, i)].norm();
            if g > best.2 {
                best = (i, j, g);
            }
        }
    }
    let tau = EPS_NEG;
    if best.2 <= tau * tau {
        return Err(Error::InvalidArgument("level Gram matrix has no usable off-diagonal entry".into()));
    }
    let p = dims.len();
    let mut ip = dims.multi_index(best.0);
    let mut jp = dims.multi_index(best.1);
    let position = |ip: &[usize], jp: &[usize]| (0..p - 1).find(|&k| ip[k] > jp[k]);
    let k = match position(&ip, &jp) {
        Some(k) => k,
        None => {
            std::mem::swap(&mut ip, &mut jp);
            position(&ip, &jp).ok_or_else(|| {
                Error::InvalidArgument("index pair admits no valid transposition subsystem".into())
            })?
        }
    };
    let mut a = ip.clone();
    a[k] = jp[k];
    let mut b = jp.clone();
    b[k] = ip[k];

    let t = partial_transpose(rho, k)?;
    let tm = t.matrix();
    let (fa, fb) = (dims.flat_index(&a), dims.flat_index(&b));
    let submatrix = [[tm[(fa, fa)], tm[(fa, fb)]], [tm[(fb, fa)], tm[(fb, fb)]]];
    let determinant = (submatrix[0][0] * submatrix[1][1] - submatrix[0][1] * submatrix[1][0]).re;
    Ok(NptCertificate { subsystem: k, level, i_prime: ip, j_prime: jp, a, b, submatrix, determinant })
}

/// Optimal decomposable witness for the NPT subspace, using partial
/// transposes on every subsystem but the last.
pub fn decomposable_witness(dims: &DimVec) -> Result<WitnessResult> {
    decomposable_witness_with(dims, &SdpSettings::default())
}

pub fn decomposable_witness_with(dims: &DimVec, settings: &SdpSettings) -> Result<WitnessResult> {
    let basis = npt_subspace_basis(dims)?;
    let proj = basis.projection()?;
    let family: Vec<_> = (0..dims.len() - 1).map(|sub| LinearTransform::PartialTranspose { sub }).collect();
    let res = subspace_witness_sdp_with(&proj, &family, settings)?;
    let expected = basis.dim();
    if !res.certifies(settings.tol) {
        return Err(Error::Solver {
            status: "optimal".into(),
            detail: format!("optimal c = {:.9} does not exceed 1", res.c_opt),
            stats: res.stats,
        });
    }
    if res.neg_count != expected {
        return Err(Error::Solver {
            status: "optimal".into(),
            detail: format!("witness has {} negative eigenvalues, expected {expected}", res.neg_count),
            stats: res.stats,
        });
    }
    Ok(res)
}

/// The explicit three-qubit decomposable witness `W = T_1(X_1) + T_2(X_2)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThreeQubitExample {
    pub x1: HermOp,
    pub x2: HermOp,
    pub witness: HermOp,
}

pub fn three_qubit_example() -> Result<ThreeQubitExample> {
    let dims = DimVec::new(vec![2, 2, 2])?;
    let ket = |terms: &[(usize, f64)]| {
        let mut v = CVec::zeros(8);
        for &(i, c) in terms {
            v[i] = C64::new(c, 0.0);
        }
        v
    };
    let v1 = ket(&[(0b001, 1.0), (0b010, 1.0), (0b111, 2.0)]);
    let v2 = ket(&[(0b001, 1.0), (0b100, 1.0), (0b111, 2.0)]);
    let w1 = ket(&[(0b110, 1.0), (0b101, 1.0), (0b000, 2.0)]);
    let w2 = ket(&[(0b110, 1.0), (0b011, 1.0), (0b000, 2.0)]);
    let x1 = HermOp::new(dims.clone(), &v1 * v1.adjoint() + &w1 * w1.adjoint())?;
    let x2 = HermOp::new(dims.clone(), &v2 * v2.adjoint() + &w2 * w2.adjoint())?;
    let witness = &partial_transpose(&x1, 0)? + &partial_transpose(&x2, 1)?;
    Ok(ThreeQubitExample { x1, x2, witness })
}

/// `Φ_c(X) = Tr(X) I - c Σ_i A_i X A_i^†` on `M_5` and the projection `P`
/// onto `span{vec(A_i)}`, so that `J(Φ_c) = I - cP`.
#[derive(Clone, Debug)]
pub struct KPositiveExample {
    pub map: HPMap,
    pub projection: HermOp,
}

/// The four Kraus operators `A_1, ..., A_4`.
pub fn k_positive_kraus() -> [CMat; 4] {
    let half = C64::new(0.5, 0.0);
    let r5 = C64::new(1.0 / 5f64.sqrt(), 0.0);
    let a1 = CMat::from_fn(5, 5, |r, c| if c == r + 1 { half } else { ZERO });
    let a2 = CMat::from_fn(5, 5, |r, c| if r == c + 1 { half } else { ZERO });
    let a3 = CMat::from_fn(5, 5, |r, c| if r == c { r5 } else { ZERO });
    let a4 = CMat::from_fn(5, 5, |r, c| if r == c { r5 * root_of_unity(r, 5) } else { ZERO });
    [a1, a2, a3, a4]
}

pub fn k_positive_example(c: f64) -> Result<KPositiveExample> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidArgument(format!("c must be positive, got {c}")));
    }
    let kraus = k_positive_kraus();
    let cc = C64::new(c, 0.0);
    let map = HPMap::from_fn(5, 5, Some(format!("k_positive:c={c}")), |x| {
        let omega = kraus.iter().fold(CMat::zeros(5, 5), |acc, a| acc + a * x * a.adjoint());
        CMat::identity(5, 5) * x.trace() - omega * cc
    })?;
    let vecs: Vec<CVec> = kraus.iter().map(vec_row_major).collect();
    let projection = projection_from_span(DimVec::pair(5, 5)?, &vecs)?;
    let expected = CMat::identity(25, 25) - projection.matrix() * cc;
    let err = crate::tensor::max_abs_diff(map.choi().matrix(), &expected);
    if err > 1e-12 {
        return Err(Error::InvalidArgument(format!("Choi matrix deviates from I - cP by {err:.3e}")));
    }
    Ok(KPositiveExample { map, projection })
}

/// Smallest Schmidt rank seen over random linear combinations of vectors in
/// `C^n ⊗ C^n` (each read as a row-major `n x n` matrix).
pub fn schmidt_rank_probe<R: Rng + ?Sized>(vectors: &[CVec], trials: usize, rng: &mut R) -> Result<usize> {
    let first = vectors.first().ok_or_else(|| Error::InvalidArgument("no vectors given".into()))?;
    let len = first.len();
    let n = (len as f64).sqrt().round() as usize;
    if n * n != len || vectors.iter().any(|v| v.len() != len) {
        return Err(Error::InvalidDims(format!("vectors must all have square length, got {len}")));
    }
    let mut best = n;
    for _ in 0..trials.max(1) {
        let coeffs = random_gaussian(vectors.len(), 1, rng);
        let v = vectors.iter().zip(coeffs.iter()).fold(CVec::zeros(len), |acc, (v, c)| acc + v * *c);
        let sv = singular_values(&unvec_row_major(&v, n, n)?);
        let smax = sv.iter().copied().fold(0.0, f64::max);
        let rank = sv.iter().filter(|&&s| s > 1e-8 * smax).count();
        best = best.min(rank);
    }
    Ok(best)
}

/// Inertia count of `T_k(ρ)`, a convenience for certificate cross-checks.
pub fn partial_transpose_neg_count(rho: &HermOp, sub: usize) -> Result<usize> {
    Ok(inertia_mat(partial_transpose(rho, sub)?.matrix(), EPS_NEG)?.n_neg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{hs_inner, inertia, ONE};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit(n: usize, i: usize) -> CVec {
        let mut v = CVec::zeros(n);
        v[i] = ONE;
        v
    }

    fn dv(d: &[usize]) -> DimVec {
        DimVec::new(d.to_vec()).unwrap()
    }

    #[test]
    fn two_qubit_subspace_is_singlet() {
        let b = npt_subspace_basis(&dv(&[2, 2])).unwrap();
        assert_eq!(b.dim(), 1);
        let v = &b.vectors[0];
        // v_00 = v_11 = 0 and v_01 = -v_10.
        assert!(v[0].norm() < 1e-15 && v[3].norm() < 1e-15);
        assert!((v[1] + v[2]).norm() < 1e-15);
        assert!((v[1].norm() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn subspace_dimensions() {
        assert_eq!(npt_subspace_basis(&dv(&[2, 2, 2])).unwrap().dim(), 4);
        assert_eq!(npt_subspace_basis(&dv(&[2, 3, 4])).unwrap().dim(), 17);
        assert!(npt_subspace_basis(&dv(&[1, 3])).is_err());
        assert!(npt_subspace_basis(&dv(&[4])).is_err());
    }

    #[test]
    fn basis_is_orthonormal_and_in_subspace() {
        let dims = dv(&[2, 3, 4]);
        let b = npt_subspace_basis(&dims).unwrap();
        for (x, u) in b.vectors.iter().enumerate() {
            assert!(is_in_subspace(u, &dims));
            for (y, v) in b.vectors.iter().enumerate() {
                let ip = u.dotc(v);
                let expected = if x == y { 1.0 } else { 0.0 };
                assert!((ip - C64::new(expected, 0.0)).norm() < 1e-12);
            }
        }
        assert!(!is_in_subspace(&unit(24, 0), &dims));
    }

    #[test]
    fn singlet_certificate() {
        let b = npt_subspace_basis(&dv(&[2, 2])).unwrap();
        let v = &b.vectors[0];
        let rho = HermOp::new(dv(&[2, 2]), v * v.adjoint()).unwrap();
        let cert = npt_certificate(&rho).unwrap();
        assert_eq!(cert.level, 1);
        assert_eq!(cert.subsystem, 0);
        assert_eq!(cert.i_prime, vec![1, 0]);
        assert_eq!(cert.j_prime, vec![0, 1]);
        assert_eq!(cert.a, vec![0, 0]);
        assert_eq!(cert.b, vec![1, 1]);
        assert!(cert.submatrix[0][0].norm() < 1e-15);
        assert!((cert.submatrix[0][1] - C64::new(-0.5, 0.0)).norm() < 1e-15);
        assert!((cert.determinant + 0.25).abs() < 1e-15);
        assert!(cert.verify(&rho, 1e-12).unwrap());
    }

    #[test]
    fn maximally_mixed_state_rejected() {
        let rho = HermOp::identity(dv(&[2, 2])).scale(0.25);
        assert!(npt_certificate(&rho).is_err());
    }

    #[test]
    fn three_qubit_witness_matches_printed_matrix() {
        let ex = three_qubit_example().unwrap();
        let printed: [[f64; 8]; 8] = [
            [8., 0., 0., 0., 0., 0., 0., 0.],
            [0., 2., 3., 0., 3., 0., 0., 0.],
            [0., 3., 1., 0., 4., 0., 0., 0.],
            [0., 0., 0., 1., 0., 4., 3., 0.],
            [0., 3., 4., 0., 1., 0., 0., 0.],
            [0., 0., 0., 4., 0., 1., 3., 0.],
            [0., 0., 0., 3., 0., 3., 2., 0.],
            [0., 0., 0., 0., 0., 0., 0., 8.],
        ];
        let w = ex.witness.matrix();
        for r in 0..8 {
            for c in 0..8 {
                assert_eq!(w[(r, c)], C64::new(printed[r][c], 0.0), "entry ({r},{c})");
            }
        }
        let eigs = herm_eigvals(w).unwrap();
        let expected = [-3., -3., -1., -1., 8., 8., 8., 8.];
        for (e, x) in eigs.iter().zip(expected) {
            assert!((e - x).abs() < 1e-10);
        }
        assert!((w.trace().re - 24.0).abs() < 1e-12);
    }

    #[test]
    fn k_positive_construction() {
        let kraus = k_positive_kraus();
        for i in 0..4 {
            for j in 0..4 {
                let ip = hs_inner(&kraus[i], &kraus[j]);
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip - C64::new(expected, 0.0)).norm() < 1e-14);
            }
        }
        let ex = k_positive_example(1.1).unwrap();
        assert_eq!(inertia(ex.map.choi(), EPS_NEG).unwrap().n_neg, 4);
        let ex = k_positive_example(1.0).unwrap();
        let inr = inertia(ex.map.choi(), EPS_NEG).unwrap();
        assert_eq!((inr.n_neg, inr.n_zero), (0, 4));
        assert!(k_positive_example(0.0).is_err());
    }

    #[test]
    fn schmidt_rank_probe_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vecs: Vec<CVec> = k_positive_kraus().iter().map(vec_row_major).collect();
        assert!(schmidt_rank_probe(&vecs, 2000, &mut rng).unwrap() >= 4);
        assert_eq!(schmidt_rank_probe(&vecs[2..3], 10, &mut rng).unwrap(), 5);
        assert_eq!(schmidt_rank_probe(&[unit(25, 0)], 10, &mut rng).unwrap(), 1);
    }
}
