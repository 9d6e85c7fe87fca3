//! Hermiticity-preserving linear maps stored as Choi matrices.
//!
//! The Choi matrix of `Φ: M_{n_in} -> M_{n_out}` is `J(Φ) = Σ_ij E_ij ⊗ Φ(E_ij)`
//! with the input factor first, so `Φ(X) = Tr_1[(X^T ⊗ I) J(Φ)]`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{
    basis_matrix, herm_eigvals, C64, CMat, DimVec, HermOp, ONE, ZERO,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapJson", into = "MapJson")]
pub struct HPMap {
    label: Option<String>,
    n_in: usize,
    n_out: usize,
    choi: HermOp,
    /// Largest `k` for which the map is known to be `k`-positive.
    positivity: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct MapJson {
    label: Option<String>,
    n_in: usize,
    n_out: usize,
    choi: HermOp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    positivity: Option<usize>,
}

impl TryFrom<MapJson> for HPMap {
    type Error = Error;

    fn try_from(raw: MapJson) -> Result<Self> {
        let mut map = HPMap::from_choi(raw.n_in, raw.n_out, raw.choi.into_matrix(), raw.label)?;
        map.positivity = raw.positivity;
        Ok(map)
    }
}

impl From<HPMap> for MapJson {
    fn from(m: HPMap) -> Self {
        MapJson { label: m.label, n_in: m.n_in, n_out: m.n_out, choi: m.choi, positivity: m.positivity }
    }
}

impl HPMap {
    /// Builds a map from its Choi matrix; fails unless the matrix is Hermitian.
    pub fn from_choi(n_in: usize, n_out: usize, choi: CMat, label: Option<String>) -> Result<Self> {
        if n_in == 0 || n_out == 0 {
            return Err(Error::InvalidDims("map dimensions must be positive".into()));
        }
        let dims = DimVec::pair(n_in, n_out)?;
        let choi = HermOp::new(dims, choi)?;
        choi.check_hermitian()?;
        Ok(Self { label, n_in, n_out, choi, positivity: None })
    }

    /// Builds the Choi matrix of `f` by evaluating it on every `E_ij`.
    pub fn from_fn<F>(n_in: usize, n_out: usize, label: Option<String>, f: F) -> Result<Self>
    where
        F: Fn(&CMat) -> CMat,
    {
        let mut choi = CMat::zeros(n_in * n_out, n_in * n_out);
        for i in 0..n_in {
            for j in 0..n_in {
                let img = f(&basis_matrix(n_in, n_in, i, j));
                if img.nrows() != n_out || img.ncols() != n_out {
                    return Err(Error::DimensionMismatch { expected: n_out, got: img.nrows() });
                }
                choi.view_mut((i * n_out, j * n_out), (n_out, n_out)).copy_from(&img);
            }
        }
        Self::from_choi(n_in, n_out, choi, label)
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or("custom")
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn choi(&self) -> &HermOp {
        &self.choi
    }

    pub fn positivity(&self) -> Option<usize> {
        self.positivity
    }

    /// Records a known positivity order (e.g. `1` for a positive map).
    pub fn with_positivity(mut self, k: Option<usize>) -> Self {
        self.positivity = k;
        self
    }

    /// Superoperator matrix `K` with `vec(Φ(X)) = K vec(X)` (row-major vec).
    fn superoperator(&self) -> CMat {
        let (a, b) = (self.n_in, self.n_out);
        let j = self.choi.matrix();
        CMat::from_fn(b * b, a * a, |row, col| {
            let (k, l) = (row / b, row % b);
            let (i, jj) = (col / a, col % a);
            j[(i * b + k, jj * b + l)]
        })
    }

    pub fn apply(&self, x: &CMat) -> Result<CMat> {
        if x.nrows() != self.n_in || x.ncols() != self.n_in {
            return Err(Error::DimensionMismatch { expected: self.n_in, got: x.nrows() });
        }
        let (a, b) = (self.n_in, self.n_out);
        let j = self.choi.matrix();
        let mut out = CMat::zeros(b, b);
        for i in 0..a {
            for jj in 0..a {
                let xij = x[(i, jj)];
                if xij == ZERO {
                    continue;
                }
                out += j.view((i * b, jj * b), (b, b)) * xij;
            }
        }
        Ok(out)
    }

    pub fn apply_op(&self, x: &HermOp) -> Result<HermOp> {
        HermOp::from_matrix(self.apply(x.matrix())?)
    }

    /// Action of `I_m ⊗ Φ` on a matrix of side `m * n_in`: every `n_in x n_in`
    /// block `ρ_ab` is replaced by `Φ(ρ_ab)`.
    pub fn tensor_with_identity_mat(&self, m: usize, rho: &CMat) -> Result<CMat> {
        if m == 0 {
            return Err(Error::InvalidArgument("m must be at least 1".into()));
        }
        let (a, b) = (self.n_in, self.n_out);
        if rho.nrows() != m * a || rho.ncols() != m * a {
            return Err(Error::DimensionMismatch { expected: m * a, got: rho.nrows() });
        }
        let blocks = CMat::from_fn(a * a, m * m, |row, col| {
            let (bi, bj) = (col / m, col % m);
            rho[(bi * a + row / a, bj * a + row % a)]
        });
        let images = self.superoperator() * blocks;
        Ok(CMat::from_fn(m * b, m * b, |r, c| {
            let (bi, bj) = (r / b, c / b);
            images[((r % b) * b + c % b, bi * m + bj)]
        }))
    }

    pub fn tensor_with_identity(&self, m: usize, rho: &HermOp) -> Result<HermOp> {
        let out = self.tensor_with_identity_mat(m, rho.matrix())?;
        HermOp::new(DimVec::pair(m, self.n_out)?, out)
    }

    /// The map `Φ^*` with `Tr(X^† Φ(Y)) = Tr(Φ^*(X)^† Y)`.
    pub fn adjoint(&self) -> HPMap {
        let (a, b) = (self.n_in, self.n_out);
        let j = self.choi.matrix();
        // J(Φ*)[(i,k),(j,l)] = conj(J(Φ)[(k,i),(l,j)]).
        let choi = CMat::from_fn(a * b, a * b, |r, c| {
            let (i, k) = (r / a, r % a);
            let (jj, l) = (c / a, c % a);
            j[(k * b + i, l * b + jj)].conj()
        });
        let label = match &self.label {
            Some(l) if l.ends_with('*') => Some(l.trim_end_matches('*').to_string()),
            Some(l) => Some(format!("{l}*")),
            None => None,
        };
        HPMap {
            label,
            n_in: b,
            n_out: a,
            choi: HermOp::new(DimVec::pair(b, a).expect("nonzero dims"), choi).expect("square"),
            positivity: self.positivity,
        }
    }

    /// `self ∘ inner`, i.e. `X -> self(inner(X))`.
    pub fn compose(&self, inner: &HPMap) -> Result<HPMap> {
        if inner.n_out != self.n_in {
            return Err(Error::DimensionMismatch { expected: self.n_in, got: inner.n_out });
        }
        let label = format!("({})∘({})", self.label(), inner.label());
        let mut out = HPMap::from_fn(inner.n_in, self.n_out, Some(label), |x| {
            self.apply(&inner.apply(x).expect("checked dims")).expect("checked dims")
        })?;
        out.positivity = match (self.positivity, inner.positivity) {
            (Some(a), Some(b)) => Some(a.min(b)),
            _ => None,
        };
        Ok(out)
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &HPMap, beta: f64) -> Result<HPMap> {
        if self.n_in != other.n_in || self.n_out != other.n_out {
            return Err(Error::DimensionMismatch { expected: self.n_in, got: other.n_in });
        }
        let choi = self.choi.matrix() * C64::new(alpha, 0.0) + other.choi.matrix() * C64::new(beta, 0.0);
        let label = format!("{alpha}·{} + {beta}·{}", self.label(), other.label());
        HPMap::from_choi(self.n_in, self.n_out, choi, Some(label))
    }

    pub fn scaled(&self, alpha: f64) -> HPMap {
        let choi = self.choi.matrix() * C64::new(alpha, 0.0);
        let positivity = if alpha >= 0.0 { self.positivity } else { None };
        HPMap::from_choi(self.n_in, self.n_out, choi, Some(format!("{alpha}·{}", self.label())))
            .expect("scaling preserves Hermiticity")
            .with_positivity(positivity)
    }

    /// `min_ρ Tr(Φ(ρ))` over density matrices, i.e. the least eigenvalue of `Φ^*(I)`.
    pub fn ell(&self) -> f64 {
        let image = self.adjoint().apply(&CMat::identity(self.n_out, self.n_out)).expect("square identity");
        herm_eigvals(&image).expect("adjoint of an HP map is HP")[0]
    }

    /// Completely positive iff `λ_min(J) >= -tol * ||J||_op`.
    pub fn is_completely_positive(&self, tol: f64) -> bool {
        let eigs = herm_eigvals(self.choi.matrix()).expect("Choi matrix is Hermitian");
        let scale = eigs.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        eigs[0] >= -tol * scale
    }
}

pub fn identity_map(n: usize) -> Result<HPMap> {
    Ok(HPMap::from_fn(n, n, Some(format!("identity:n={n}")), |x| x.clone())?.with_positivity(Some(n)))
}

pub fn zero_map(n: usize) -> Result<HPMap> {
    Ok(HPMap::from_fn(n, n, Some(format!("zero:n={n}")), |_| CMat::zeros(n, n))?.with_positivity(Some(n)))
}

pub fn transpose_map(n: usize) -> Result<HPMap> {
    Ok(HPMap::from_fn(n, n, Some(format!("transpose:n={n}")), |x| x.transpose())?.with_positivity(Some(1)))
}

/// Completely depolarizing map `X -> Tr(X) I / n`.
pub fn depolarizing(n: usize) -> Result<HPMap> {
    let scale = C64::new(1.0 / n.max(1) as f64, 0.0);
    Ok(HPMap::from_fn(n, n, Some(format!("depolarizing:n={n}")), |x| CMat::identity(n, n) * (x.trace() * scale))?
        .with_positivity(Some(n)))
}

/// `R_k(X) = k Tr(X) I - X`; `k` may be any real number.
pub fn reduction_map(n: usize, k: f64) -> Result<HPMap> {
    if !k.is_finite() {
        return Err(Error::InvalidArgument(format!("reduction parameter k = {k} is not finite")));
    }
    let kk = C64::new(k, 0.0);
    // R_k is floor(k)-positive; it is completely positive once k >= n.
    let positivity = if k >= 1.0 { Some((k.floor() as usize).min(n)) } else { None };
    Ok(HPMap::from_fn(n, n, Some(format!("reduction:n={n},k={k}")), |x| {
        CMat::identity(n, n) * (x.trace() * kk) - x
    })?
    .with_positivity(positivity))
}

/// The Choi map on `M_3`.
pub fn choi_map() -> Result<HPMap> {
    Ok(HPMap::from_fn(3, 3, Some("choi".into()), |x| {
        let mut y = -x.clone();
        y[(0, 0)] = x[(0, 0)] + x[(1, 1)];
        y[(1, 1)] = x[(1, 1)] + x[(2, 2)];
        y[(2, 2)] = x[(2, 2)] + x[(0, 0)];
        y
    })?
    .with_positivity(Some(1)))
}

/// The skew-symmetric unitary `diag([[0,1],[-1,0]], ...)` of even size `n`.
pub fn breuer_hall_unitary(n: usize) -> CMat {
    let mut u = CMat::zeros(n, n);
    for b in 0..n / 2 {
        u[(2 * b, 2 * b + 1)] = ONE;
        u[(2 * b + 1, 2 * b)] = -ONE;
    }
    u
}

/// `Φ_B(X) = Tr(X) I - X - U X^T U^†` for even `n >= 4`.
pub fn breuer_hall(n: usize) -> Result<HPMap> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("Breuer–Hall map needs an even n >= 4, got {n}")));
    }
    let u = breuer_hall_unitary(n);
    let u_adj = u.adjoint();
    Ok(HPMap::from_fn(n, n, Some(format!("breuer_hall:n={n}")), |x| {
        CMat::identity(n, n) * x.trace() - x - &u * x.transpose() * &u_adj
    })?
    .with_positivity(Some(1)))
}

/// Maps on `M_{2k}` whose composition breaks `ν_m(Φ∘Ψ) <= ν_m(Φ)`.
///
/// `psi` and `phi` are defined through their adjoints:
/// `Ψ^*(X) = I_k ⊗ X_2` and `Φ^*(X) = |0><0| ⊗ X_2^T`, where `X_2` is the
/// upper-left `2 x 2` block of `X`.
#[derive(Clone, Debug)]
pub struct CounterexamplePair {
    pub psi: HPMap,
    pub phi: HPMap,
}

impl CounterexamplePair {
    pub fn composite(&self) -> Result<HPMap> {
        Ok(self.phi.compose(&self.psi)?.with_label(format!("counterexample_composite:n={}", self.psi.n_in())))
    }
}

pub fn counterexample_pair(n: usize) -> Result<CounterexamplePair> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("counterexample maps need an even n >= 2, got {n}")));
    }
    let k = n / 2;
    let upper = |x: &CMat| x.view((0, 0), (2, 2)).into_owned();
    let psi_adj = HPMap::from_fn(n, n, None, |x| crate::tensor::kron(&CMat::identity(k, k), &upper(x)))?;
    let phi_adj = HPMap::from_fn(n, n, None, |x| {
        crate::tensor::kron(&basis_matrix(k, k, 0, 0), &upper(x).transpose())
    })?;
    Ok(CounterexamplePair {
        psi: psi_adj.adjoint().with_label(format!("counterexample_psi:n={n}")).with_positivity(Some(n)),
        phi: phi_adj.adjoint().with_label(format!("counterexample_phi:n={n}")).with_positivity(Some(1)),
    })
}

/// `name[:param=value,...]`, optionally suffixed with `*` for the adjoint.
#[derive(Clone, Debug, PartialEq)]
pub struct MapSpec {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub adjoint: bool,
}

impl MapSpec {
    pub fn parse(label: &str) -> Result<Self> {
        let label = label.trim();
        let (label, adjoint) = match label.strip_suffix('*') {
            Some(rest) => (rest, true),
            None => (label, false),
        };
        let (name, rest) = match label.split_once(':') {
            Some((n, r)) => (n, Some(r)),
            None => (label, None),
        };
        if name.is_empty() {
            return Err(Error::UnknownMap(label.to_string()));
        }
        let mut params = BTreeMap::new();
        if let Some(rest) = rest.filter(|r| !r.is_empty()) {
            for part in rest.split(',') {
                let (key, value) = part
                    .split_once('=')
                    .ok_or_else(|| Error::InvalidArgument(format!("malformed map parameter `{part}`")))?;
                let value: f64 = value
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("parameter `{key}` is not a number")))?;
                params.insert(key.trim().to_string(), value);
            }
        }
        Ok(Self { name: name.to_string(), params, adjoint })
    }

    fn get(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    fn get_usize(&self, key: &str, default: usize) -> Result<usize> {
        let v = self.get(key, default as f64);
        if v < 1.0 || v.fract() != 0.0 {
            return Err(Error::InvalidArgument(format!("parameter `{key}` must be a positive integer, got {v}")));
        }
        Ok(v as usize)
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        match self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::InvalidArgument(format!("map `{}` has no parameter `{k}`", self.name))),
            None => Ok(()),
        }
    }

    pub fn build(&self) -> Result<HPMap> {
        let map = match self.name.as_str() {
            "transpose" => {
                self.check_keys(&["n"])?;
                transpose_map(self.get_usize("n", 3)?)?
            }
            "reduction" => {
                self.check_keys(&["n", "k"])?;
                reduction_map(self.get_usize("n", 3)?, self.get("k", 1.0))?
            }
            "choi" => {
                self.check_keys(&[])?;
                choi_map()?
            }
            "breuer_hall" => {
                self.check_keys(&["n"])?;
                breuer_hall(self.get_usize("n", 4)?)?
            }
            "depolarizing" => {
                self.check_keys(&["n"])?;
                depolarizing(self.get_usize("n", 3)?)?
            }
            "identity" => {
                self.check_keys(&["n"])?;
                identity_map(self.get_usize("n", 3)?)?
            }
            "zero" => {
                self.check_keys(&["n"])?;
                zero_map(self.get_usize("n", 3)?)?
            }
            "counterexample_psi" | "counterexample_phi" | "counterexample_composite" => {
                self.check_keys(&["n"])?;
                let pair = counterexample_pair(self.get_usize("n", 4)?)?;
                match self.name.as_str() {
                    "counterexample_psi" => pair.psi,
                    "counterexample_phi" => pair.phi,
                    _ => pair.composite()?,
                }
            }
            "k_positive" => {
                self.check_keys(&["c"])?;
                crate::multipartite::k_positive_example(self.get("c", 1.1))?.map
            }
            _ => return Err(Error::UnknownMap(self.name.clone())),
        };
        Ok(if self.adjoint { map.adjoint() } else { map })
    }
}

/// Resolves a catalog label such as `"reduction:n=5,k=2"` or `"choi*"`.
pub fn catalog_map(label: &str) -> Result<HPMap> {
    MapSpec::parse(label)?.build()
}

/// Names accepted by [`catalog_map`].
pub const CATALOG_NAMES: &[&str] = &[
    "transpose",
    "reduction",
    "choi",
    "breuer_hall",
    "depolarizing",
    "identity",
    "zero",
    "counterexample_psi",
    "counterexample_phi",
    "counterexample_composite",
    "k_positive",
];

/// Clock-phase root of unity `exp(2πi t / n)`.
pub(crate) fn root_of_unity(t: usize, n: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * t as f64 / n as f64)
}

pub(crate) fn check_square_map(map: &HPMap) -> Result<usize> {
    if map.n_in() != map.n_out() {
        return Err(Error::InvalidArgument(format!(
            "map `{}` is not square ({} -> {})",
            map.label(),
            map.n_in(),
            map.n_out()
        )));
    }
    Ok(map.n_in())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{hs_inner, max_abs_diff, random_gaussian, random_hermitian, CVec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(v: &[f64]) -> CMat {
        CMat::from_diagonal(&CVec::from_iterator(v.len(), v.iter().map(|&x| C64::new(x, 0.0))))
    }

    #[test]
    fn choi_map_on_e11() {
        let phi = choi_map().unwrap();
        let out = phi.apply(&basis_matrix(3, 3, 0, 0)).unwrap();
        assert_eq!(out, diag(&[1.0, 0.0, 1.0]));
        let adj = phi.adjoint().apply(&basis_matrix(3, 3, 0, 0)).unwrap();
        assert_eq!(adj, diag(&[1.0, 1.0, 0.0]));
    }

    #[test]
    fn choi_map_adjoint_matches_printed_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let adj = choi_map().unwrap().adjoint();
        for _ in 0..10 {
            let x = random_gaussian(3, 3, &mut rng);
            let mut expected = -x.clone();
            expected[(0, 0)] = x[(0, 0)] + x[(2, 2)];
            expected[(1, 1)] = x[(1, 1)] + x[(0, 0)];
            expected[(2, 2)] = x[(2, 2)] + x[(1, 1)];
            assert!(max_abs_diff(&adj.apply(&x).unwrap(), &expected) < 1e-13);
        }
        let at_identity = adj.apply(&CMat::identity(3, 3)).unwrap();
        assert_eq!(at_identity, CMat::identity(3, 3) * C64::new(2.0, 0.0));
    }

    #[test]
    fn reduction_apply_matches_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let r1 = reduction_map(4, 1.0).unwrap();
        for _ in 0..50 {
            let x = random_gaussian(4, 4, &mut rng);
            let expected = CMat::identity(4, 4) * x.trace() - &x;
            assert!(max_abs_diff(&r1.apply(&x).unwrap(), &expected) <= 1e-12);
        }
    }

    #[test]
    fn identity_and_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let x = random_gaussian(3, 3, &mut rng);
        assert_eq!(identity_map(3).unwrap().apply(&x).unwrap(), x);
        let t = transpose_map(2).unwrap();
        let mut swap = CMat::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                swap[(i * 2 + j, j * 2 + i)] = ONE;
            }
        }
        assert_eq!(t.choi().matrix(), &swap);
        assert_eq!(t.adjoint().choi(), t.choi());
    }

    #[test]
    fn depolarizing_choi() {
        let d = depolarizing(3).unwrap();
        assert!(max_abs_diff(d.choi().matrix(), &(CMat::identity(9, 9) * C64::new(1.0 / 3.0, 0.0))) < 1e-15);
    }

    #[test]
    fn adjoint_duality_and_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let pair = counterexample_pair(4).unwrap();
        let maps = vec![
            choi_map().unwrap(),
            reduction_map(3, 1.5).unwrap(),
            breuer_hall(4).unwrap(),
            transpose_map(3).unwrap(),
            pair.psi.clone(),
            pair.phi.clone(),
            pair.composite().unwrap(),
        ];
        for map in &maps {
            let adj = map.adjoint();
            assert_eq!(&adj.adjoint().choi().matrix().clone(), map.choi().matrix());
            for _ in 0..20 {
                let x = random_hermitian(map.n_out(), &mut rng);
                let y = random_hermitian(map.n_in(), &mut rng);
                let lhs = hs_inner(&x, &map.apply(&y).unwrap());
                let rhs = hs_inner(&adj.apply(&x).unwrap(), &y);
                assert!((lhs - rhs).norm() < 1e-10, "{}", map.label());
            }
        }
    }

    #[test]
    fn reduction_is_self_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let r = reduction_map(3, 2.0).unwrap();
        let adj = r.adjoint();
        for _ in 0..10 {
            let x = random_gaussian(3, 3, &mut rng);
            assert!(max_abs_diff(&r.apply(&x).unwrap(), &adj.apply(&x).unwrap()) < 1e-13);
        }
    }

    #[test]
    fn tensor_with_identity_blockwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let (m, n, k) = (3, 2, 1.0);
        let r = reduction_map(n, k).unwrap();
        let rho = HermOp::new(DimVec::pair(m, n).unwrap(), random_hermitian(m * n, &mut rng)).unwrap();
        let out = r.tensor_with_identity(m, &rho).unwrap();
        // Oracle: k Tr_2(ρ) ⊗ I - ρ.
        let reduced = rho.partial_trace(&[0]).unwrap();
        let expected =
            crate::tensor::kron(reduced.matrix(), &CMat::identity(n, n)) * C64::new(k, 0.0) - rho.matrix();
        assert!(max_abs_diff(out.matrix(), &expected) < 1e-12);

        let t = transpose_map(3).unwrap();
        let rho = HermOp::new(DimVec::pair(3, 3).unwrap(), random_hermitian(9, &mut rng)).unwrap();
        assert_eq!(t.tensor_with_identity(3, &rho).unwrap(), rho.partial_transpose(1).unwrap());

        let x = random_gaussian(3, 3, &mut rng);
        let choi = choi_map().unwrap();
        assert!(max_abs_diff(&choi.tensor_with_identity_mat(1, &x).unwrap(), &choi.apply(&x).unwrap()) < 1e-14);
        assert!(choi.tensor_with_identity_mat(2, &x).is_err());
    }

    #[test]
    fn compose_matches_sequential_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let t = transpose_map(3).unwrap();
        let tt = t.compose(&t).unwrap();
        assert!(max_abs_diff(tt.choi().matrix(), identity_map(3).unwrap().choi().matrix()) < 1e-15);
        let c = choi_map().unwrap();
        assert!(max_abs_diff(c.compose(&identity_map(3).unwrap()).unwrap().choi().matrix(), c.choi().matrix()) < 1e-15);
        let r = reduction_map(3, 1.0).unwrap();
        let cr = c.compose(&r).unwrap();
        for _ in 0..10 {
            let x = random_gaussian(3, 3, &mut rng);
            let direct = c.apply(&r.apply(&x).unwrap()).unwrap();
            assert!(max_abs_diff(&cr.apply(&x).unwrap(), &direct) < 1e-10);
        }
        assert!(c.compose(&identity_map(2).unwrap()).is_err());
    }

    #[test]
    fn counterexample_composite_matches_hand_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        for n in [4, 6] {
            let k = n / 2;
            let pair = counterexample_pair(n).unwrap();
            let comp = pair.composite().unwrap();
            // Oracle from the adjoints: Ψ(Y) puts Σ_a Y_aa in the top-left 2x2
            // block and Φ(Y) puts Y_00^T there, so (Φ∘Ψ)(Y) = (Σ_a Y_aa)^T.
            let oracle = |y: &CMat| {
                let mut s = CMat::zeros(2, 2);
                for a in 0..k {
                    s += y.view((2 * a, 2 * a), (2, 2));
                }
                let mut out = CMat::zeros(n, n);
                out.view_mut((0, 0), (2, 2)).copy_from(&s.transpose());
                out
            };
            let e11 = basis_matrix(n, n, 0, 0);
            assert_eq!(comp.apply(&e11).unwrap(), e11);
            for _ in 0..5 {
                let y = random_gaussian(n, n, &mut rng);
                assert!(max_abs_diff(&comp.apply(&y).unwrap(), &oracle(&y)) < 1e-12);
            }
        }
    }

    #[test]
    fn breuer_hall_on_identity_and_parity() {
        let b = breuer_hall(4).unwrap();
        let out = b.apply(&CMat::identity(4, 4)).unwrap();
        assert!(max_abs_diff(&out, &(CMat::identity(4, 4) * C64::new(2.0, 0.0))) < 1e-14);
        assert!(breuer_hall(5).is_err());
        assert!(breuer_hall(2).is_err());
        let u = breuer_hall_unitary(6);
        assert_eq!(u.transpose(), -u.clone());
        assert!(max_abs_diff(&(&u * u.adjoint()), &CMat::identity(6, 6)) < 1e-15);
    }

    #[test]
    fn ell_values() {
        for n in [2, 3, 5] {
            for k in [1.0, 1.5, 2.0] {
                let r = reduction_map(n, k).unwrap();
                assert!((r.ell() - (k * n as f64 - 1.0)).abs() < 1e-12);
            }
        }
        assert!((choi_map().unwrap().ell() - 2.0).abs() < 1e-12);
        for n in [4, 6, 8] {
            assert!((breuer_hall(n).unwrap().ell() - (n as f64 - 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn complete_positivity() {
        assert!(identity_map(3).unwrap().is_completely_positive(1e-10));
        assert!(!transpose_map(2).unwrap().is_completely_positive(1e-10));
        assert!(!choi_map().unwrap().is_completely_positive(1e-10));
        for n in [4, 6] {
            let x = 2.0 * n as f64;
            let diff = depolarizing(n).unwrap().combine(x, &breuer_hall(n).unwrap(), -1.0).unwrap();
            assert!(diff.is_completely_positive(1e-10));
        }
    }

    #[test]
    fn catalog_maps_are_positive_on_random_pure_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let pair = counterexample_pair(4).unwrap();
        let maps = vec![
            choi_map().unwrap(),
            choi_map().unwrap().adjoint(),
            reduction_map(3, 1.0).unwrap(),
            breuer_hall(4).unwrap(),
            breuer_hall(6).unwrap(),
            transpose_map(3).unwrap(),
            depolarizing(3).unwrap(),
            pair.phi,
            pair.psi,
        ];
        for map in &maps {
            for _ in 0..500 {
                let v = random_gaussian(map.n_in(), 1, &mut rng);
                let v = &v / C64::new(v.norm(), 0.0);
                let out = map.apply(&(&v * v.adjoint())).unwrap();
                assert!(herm_eigvals(&out).unwrap()[0] >= -1e-10, "{}", map.label());
            }
        }
    }

    #[test]
    fn choi_round_trip_through_apply() {
        for map in [choi_map().unwrap(), breuer_hall(4).unwrap(), reduction_map(3, 0.7).unwrap()] {
            let rebuilt = HPMap::from_fn(map.n_in(), map.n_out(), None, |x| map.apply(x).unwrap()).unwrap();
            assert!(max_abs_diff(rebuilt.choi().matrix(), map.choi().matrix()) <= 1e-12);
        }
    }

    #[test]
    fn labels_parse_and_build() {
        let spec = MapSpec::parse("reduction:n=5,k=2").unwrap();
        assert_eq!(spec.name, "reduction");
        assert_eq!(spec.params["k"], 2.0);
        let r = catalog_map("reduction:n=5,k=2").unwrap();
        assert_eq!(r.n_in(), 5);
        assert_eq!(catalog_map("breuer_hall:n=6").unwrap().n_in(), 6);
        let adj = catalog_map("choi*").unwrap();
        assert!(max_abs_diff(adj.choi().matrix(), choi_map().unwrap().adjoint().choi().matrix()) < 1e-15);
        assert!(matches!(catalog_map("nope"), Err(Error::UnknownMap(_))));
        assert!(catalog_map("transpose:n=2.5").is_err());
        assert!(catalog_map("transpose:m=2").is_err());
        assert!(catalog_map("reduction:k").is_err());
    }

    #[test]
    fn map_json_round_trip() {
        let map = breuer_hall(4).unwrap();
        let json = serde_json::to_string(&map).unwrap();
        assert!(json.contains("\"label\":\"breuer_hall:n=4\""));
        assert!(json.contains("\"choi\":{\"dims\":[4,4]"));
        let back: HPMap = serde_json::from_str(&json).unwrap();
        assert_eq!(back, map);
    }
}
