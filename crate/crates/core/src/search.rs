//! Lower bounds on `ν_m(Φ^*)`: random sampling of states, the explicit
//! optimal states for the reduction family, block lifting to larger `m`, and
//! extraction of a non-positive subspace from a good state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{root_of_unity, HPMap};
use crate::multipartite::SubspaceBasis;
use crate::tensor::{herm_eigh, inertia_mat, random_gaussian, CMat, CVec, DimVec, HermOp, C64, EPS_NEG};

/// Hilbert–Schmidt-type random state `G G^† / Tr(G G^†)` with `G` a
/// `total x rank` complex Gaussian matrix.
pub fn random_density<R: Rng + ?Sized>(dims: &DimVec, rank: usize, rng: &mut R) -> Result<HermOp> {
    let total = dims.total();
    if rank < 1 || rank > total {
        return Err(Error::InvalidArgument(format!("rank {rank} must lie in 1..={total}")));
    }
    let g = random_gaussian(total, rank, rng);
    let mut rho = &g * g.adjoint();
    let tr = rho.trace().re;
    rho /= C64::new(tr, 0.0);
    HermOp::new(dims.clone(), crate::tensor::hermitian_part(&rho))
}

/// Number of negative eigenvalues of `(I_m ⊗ Φ)(ρ)`.
pub fn neg_count(map: &HPMap, m: usize, rho: &HermOp) -> Result<usize> {
    neg_count_mat(map, m, rho.matrix())
}

pub fn neg_count_mat(map: &HPMap, m: usize, rho: &CMat) -> Result<usize> {
    Ok(inertia_mat(&map.tensor_with_identity_mat(m, rho)?, EPS_NEG)?.n_neg)
}

/// Best state found by [`search_nu_lower`]. The count is an empirical
/// lower bound on `ν_m(Φ^*)`, never a certified upper bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchReport {
    pub map: String,
    pub m: usize,
    pub n: usize,
    pub trials: usize,
    pub ranks: Vec<usize>,
    pub seed: u64,
    pub best_neg_count: usize,
    pub best_trial: usize,
    pub best_state: HermOp,
    /// `histogram[c]` = number of trials with exactly `c` negative eigenvalues.
    pub histogram: Vec<usize>,
    pub kind: String,
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Samples `trials` random states on `C^m ⊗ C^{n_in}` and records the largest
/// negative-eigenvalue count of `(I_m ⊗ Φ)(ρ)`.
///
/// Trial `t` draws from its own ChaCha stream and uses rank
/// `ranks[t % ranks.len()]` (default: every rank `1..=mn` in turn), so the
/// report does not depend on `threads`. Ties keep the lowest trial index.
pub fn search_nu_lower(
    map: &HPMap,
    m: usize,
    trials: usize,
    ranks: Option<&[usize]>,
    seed: u64,
    threads: Option<usize>,
) -> Result<SearchReport> {
    if m == 0 || trials == 0 {
        return Err(Error::InvalidArgument("m and trials must be at least 1".into()));
    }
    let n = map.n_in();
    let dims = DimVec::pair(m, n)?;
    let total = dims.total();
    let ranks: Vec<usize> = match ranks {
        Some(r) if !r.is_empty() => r.to_vec(),
        _ => (1..=total).collect(),
    };
    if let Some(&bad) = ranks.iter().find(|&&r| r < 1 || r > total) {
        return Err(Error::InvalidArgument(format!("rank {bad} must lie in 1..={total}")));
    }
    let max_count = m * map.n_out();

    let run = || -> Result<(Vec<usize>, usize, usize)> {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(seed, t);
                let rho = random_density(&dims, ranks[t % ranks.len()], &mut rng)?;
                Ok((t, neg_count(map, m, &rho)?))
            })
            .try_fold(
                || (vec![0usize; max_count + 1], 0usize, usize::MAX),
                |(mut hist, best, best_t), r: Result<(usize, usize)>| {
                    let (t, c) = r?;
                    hist[c] += 1;
                    let better = c > best || (c == best && t < best_t);
                    Ok::<_, Error>(if better { (hist, c, t) } else { (hist, best, best_t) })
                },
            )
            .try_reduce(
                || (vec![0usize; max_count + 1], 0usize, usize::MAX),
                |(mut h1, b1, t1), (h2, b2, t2)| {
                    for (a, b) in h1.iter_mut().zip(&h2) {
                        *a += b;
                    }
                    let take_second = b2 > b1 || (b2 == b1 && t2 < t1);
                    Ok(if take_second { (h1, b2, t2) } else { (h1, b1, t1) })
                },
            )
    };
    let (histogram, best, best_trial) = match threads {
        Some(k) if k > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))?
            .install(run)?,
        _ => run()?,
    };
    let mut rng = trial_rng(seed, best_trial);
    let best_state = random_density(&dims, ranks[best_trial % ranks.len()], &mut rng)?;
    Ok(SearchReport {
        map: map.label().to_string(),
        m,
        n,
        trials,
        ranks,
        seed,
        best_neg_count: best,
        best_trial,
        best_state,
        histogram,
        kind: "observation".into(),
    })
}

/// `(1/r) Σ_{t=1}^r |u_t><u_t|` with clock-phased maximally entangled
/// vectors `|u_t> = m^{-1/2} Σ_j ω^{jt} |j>|j>`, `r = ⌈m/k⌉ - 1`.
/// Returns `None` when `r = 0`.
pub fn reduction_optimal_state(m: usize, n: usize, k: f64) -> Result<Option<HermOp>> {
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!("construction needs 1 <= m <= n, got m={m}, n={n}")));
    }
    if !(k >= 1.0) || !k.is_finite() {
        return Err(Error::InvalidArgument(format!("k must be at least 1, got {k}")));
    }
    let r = ((m as f64 / k).ceil() as usize).saturating_sub(1);
    if r == 0 {
        return Ok(None);
    }
    let dims = DimVec::pair(m, n)?;
    let norm = C64::new(1.0 / (m as f64).sqrt(), 0.0);
    let mut rho = CMat::zeros(m * n, m * n);
    for t in 1..=r {
        let mut u = CVec::zeros(m * n);
        for j in 0..m {
            u[j * n + j] = root_of_unity((j * t) % m, m) * norm;
        }
        rho += &u * u.adjoint();
    }
    rho /= C64::new(r as f64, 0.0);
    Ok(Some(HermOp::new(dims, rho)?))
}

/// `(1/k) Σ_i (P_i ⊗ I) ρ (P_i ⊗ I)^†` with `P_i |j> = |j + mi>`: `k` copies
/// of `ρ` on the diagonal of `C^{km} ⊗ C^n`.
pub fn block_lift_state(rho: &HermOp, k: usize) -> Result<HermOp> {
    let d = rho.dims().as_slice();
    if d.len() != 2 {
        return Err(Error::InvalidDims(format!("expected a bipartite state, got {}", rho.dims())));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let (m, n) = (d[0], d[1]);
    let side = m * n;
    let mut out = CMat::zeros(k * side, k * side);
    let scaled = rho.matrix() / C64::new(k as f64, 0.0);
    for i in 0..k {
        out.view_mut((i * side, i * side), (side, side)).copy_from(&scaled);
    }
    HermOp::new(DimVec::pair(k * m, n)?, out)
}

/// Eigenvectors of `(I_m ⊗ Φ^*)(ρ)` with negative eigenvalues; every state
/// supported on their span is sent to a non-PSD operator by `I_m ⊗ Φ`.
pub fn subspace_from_state(map: &HPMap, m: usize, rho: &HermOp) -> Result<SubspaceBasis> {
    let adj = map.adjoint();
    let image = adj.tensor_with_identity_mat(m, rho.matrix())?;
    let (vals, vecs) = herm_eigh(&image)?;
    let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let tau = EPS_NEG * scale;
    let vectors: Vec<CVec> =
        vals.iter().enumerate().filter(|(_, &v)| v < -tau).map(|(i, _)| vecs.column(i).into_owned()).collect();
    if vectors.is_empty() {
        return Err(Error::NotFound(format!(
            "(I_{m} ⊗ {}^*)(ρ) has no negative eigenvalues",
            map.label()
        )));
    }
    Ok(SubspaceBasis { dims: DimVec::pair(m, adj.n_out())?, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{identity_map, reduction_map, transpose_map};
    use crate::tensor::{herm_eigvals, max_entangled};

    fn psi_plus(n: usize) -> HermOp {
        let v = max_entangled(n);
        HermOp::new(DimVec::pair(n, n).unwrap(), &v * v.adjoint()).unwrap()
    }

    #[test]
    fn random_density_is_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dims = DimVec::pair(2, 3).unwrap();
        let full = random_density(&dims, 6, &mut rng).unwrap();
        let eigs = herm_eigvals(full.matrix()).unwrap();
        assert!(eigs[0] > 0.0);
        assert!((eigs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let pure = random_density(&dims, 1, &mut rng).unwrap();
        let eigs = herm_eigvals(pure.matrix()).unwrap();
        assert!((eigs[5] - 1.0).abs() < 1e-12 && eigs[4].abs() < 1e-12);
        assert!(random_density(&dims, 7, &mut rng).is_err());
    }

    #[test]
    fn neg_counts_on_maximally_entangled() {
        assert_eq!(neg_count(&transpose_map(3).unwrap(), 3, &psi_plus(3)).unwrap(), 3);
        assert_eq!(neg_count(&identity_map(3).unwrap(), 3, &psi_plus(3)).unwrap(), 0);
        // I/m - |ψ+><ψ+| has a single negative eigenvalue.
        for m in 2..=5 {
            assert_eq!(neg_count(&reduction_map(m, 1.0).unwrap(), m, &psi_plus(m)).unwrap(), 1);
        }
    }

    #[test]
    fn search_is_thread_independent() {
        let t = transpose_map(2).unwrap();
        let a = search_nu_lower(&t, 2, 300, None, 7, Some(1)).unwrap();
        let b = search_nu_lower(&t, 2, 300, None, 7, Some(4)).unwrap();
        assert_eq!(a.best_trial, b.best_trial);
        assert_eq!(a.histogram, b.histogram);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(a.best_neg_count >= 1);
        assert_eq!(neg_count(&t, 2, &a.best_state).unwrap(), a.best_neg_count);
        assert_eq!(a.histogram.iter().sum::<usize>(), 300);
    }

    #[test]
    fn identity_search_finds_nothing() {
        let r = search_nu_lower(&identity_map(3).unwrap(), 2, 100, None, 0, None).unwrap();
        assert_eq!(r.best_neg_count, 0);
        assert_eq!(r.best_trial, 0);
    }

    #[test]
    fn reduction_states() {
        let rho = reduction_optimal_state(4, 4, 1.0).unwrap().unwrap();
        assert_eq!(neg_count(&reduction_map(4, 1.0).unwrap(), 4, &rho).unwrap(), 3);
        let rho = reduction_optimal_state(5, 5, 2.0).unwrap().unwrap();
        assert_eq!(neg_count(&reduction_map(5, 2.0).unwrap(), 5, &rho).unwrap(), 2);
        assert!(reduction_optimal_state(2, 2, 2.0).unwrap().is_none());
        assert!(reduction_optimal_state(3, 2, 1.0).is_err());
    }

    #[test]
    fn block_lift_multiplies_counts() {
        let rho = psi_plus(2);
        assert_eq!(block_lift_state(&rho, 1).unwrap().matrix(), rho.matrix());
        let r1 = reduction_map(2, 1.0).unwrap();
        assert_eq!(neg_count(&r1, 6, &block_lift_state(&rho, 3).unwrap()).unwrap(), 3);
        let t = transpose_map(2).unwrap();
        assert_eq!(neg_count(&t, 4, &block_lift_state(&rho, 2).unwrap()).unwrap(), 2);
    }

    #[test]
    fn subspace_extraction() {
        let t = transpose_map(2).unwrap();
        let s = subspace_from_state(&t, 2, &psi_plus(2)).unwrap();
        assert_eq!(s.dim(), 1);
        let v = &s.vectors[0];
        assert!(v[0].norm() < 1e-12 && v[3].norm() < 1e-12);
        assert!((v[1] + v[2]).norm() < 1e-12);

        assert!(matches!(
            subspace_from_state(&identity_map(2).unwrap(), 2, &psi_plus(2)),
            Err(Error::NotFound(_))
        ));

        let rho = reduction_optimal_state(3, 3, 1.0).unwrap().unwrap();
        let s = subspace_from_state(&reduction_map(3, 1.0).unwrap(), 3, &rho).unwrap();
        assert_eq!(s.dim(), 2);
    }
}
