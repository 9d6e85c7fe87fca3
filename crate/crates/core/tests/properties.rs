use nonmp_core::maps::catalog_map;
use nonmp_core::search::{block_lift_state, neg_count, random_density};
use nonmp_core::tensor::{
    hs_inner, inertia_mat, max_abs_diff, partial_trace, partial_transpose, random_gaussian, random_hermitian,
    EPS_NEG,
};
use nonmp_core::{CMat, DimVec, HermOp, C64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MAPS: &[&str] = &[
    "transpose:n=2",
    "transpose:n=3",
    "reduction:n=3,k=1",
    "reduction:n=3,k=2",
    "choi",
    "choi*",
    "breuer_hall:n=4",
    "depolarizing:n=3",
    "identity:n=2",
    "counterexample_phi:n=4",
    "counterexample_composite:n=4",
    "k_positive:c=1.1",
];

fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=3, 1..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partial_transpose_is_an_involution(d in dims_strategy(), seed in any::<u64>(), sub_pick in 0usize..3) {
        let dims = DimVec::new(d).unwrap();
        let sub = sub_pick % dims.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = HermOp::new(dims.clone(), random_hermitian(dims.total(), &mut rng)).unwrap();
        let twice = partial_transpose(&partial_transpose(&h, sub).unwrap(), sub).unwrap();
        prop_assert_eq!(twice.matrix(), h.matrix());
    }

    #[test]
    fn partial_trace_preserves_trace(d in dims_strategy(), seed in any::<u64>(), mask in 0u8..8) {
        let dims = DimVec::new(d).unwrap();
        let keep: Vec<usize> = (0..dims.len()).filter(|i| mask & (1 << i) != 0).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = HermOp::new(dims.clone(), random_hermitian(dims.total(), &mut rng)).unwrap();
        let reduced = partial_trace(&h, &keep).unwrap();
        prop_assert!((reduced.trace() - h.trace()).norm() < 1e-10 * (1.0 + h.matrix().norm()));
    }

    #[test]
    fn adjoint_duality_for_catalog_maps(pick in 0usize..MAPS.len(), seed in any::<u64>()) {
        let map = catalog_map(MAPS[pick]).unwrap();
        let adj = map.adjoint();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_gaussian(map.n_in(), map.n_in(), &mut rng);
        let y = random_gaussian(map.n_out(), map.n_out(), &mut rng);
        let lhs = hs_inner(&y, &map.apply(&x).unwrap());
        let rhs = hs_inner(&adj.apply(&y).unwrap(), &x);
        prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()));
        prop_assert!(max_abs_diff(adj.adjoint().choi().matrix(), map.choi().matrix()) < 1e-14);
    }

    #[test]
    fn block_lift_multiplies_neg_count(pick in 0usize..MAPS.len(), seed in any::<u64>(), m in 1usize..=2, k in 1usize..=3) {
        let map = catalog_map(MAPS[pick]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = DimVec::pair(m, map.n_in()).unwrap();
        let rho = random_density(&dims, 1 + (seed as usize) % dims.total(), &mut rng).unwrap();
        let base = neg_count(&map, m, &rho).unwrap();
        let lifted = block_lift_state(&rho, k).unwrap();
        prop_assert_eq!(neg_count(&map, k * m, &lifted).unwrap(), k * base);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sylvester_congruence_preserves_inertia(n in 1usize..=8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Spectrum with well-separated signs so the count is unambiguous.
        let g = random_gaussian(n, n, &mut rng);
        let q = g.qr().q();
        let signs: Vec<f64> = (0..n).map(|i| match (seed >> i) % 3 { 0 => -1.0, 1 => 0.0, _ => 1.0 }).collect();
        let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(n, signs.iter().map(|&s| C64::new(s, 0.0))));
        let h = &q * d * q.adjoint();
        let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
        let a = random_gaussian(n, n, &mut rng) + CMat::identity(n, n) * C64::new(3.0, 0.0);
        let congruent = a.adjoint() * &h * &a;
        let congruent = (&congruent + congruent.adjoint()) * C64::new(0.5, 0.0);
        let before = inertia_mat(&h, 1e-8).unwrap();
        let after = inertia_mat(&congruent, 1e-8).unwrap();
        prop_assert_eq!((before.n_neg, before.n_zero, before.n_pos), (after.n_neg, after.n_zero, after.n_pos));
    }

    /// Normalizing the first marginal to `I/m` by a local congruence keeps
    /// the negative-eigenvalue count of `(I ⊗ Φ)(ρ)`.
    #[test]
    fn local_congruence_preserves_neg_count(pick in 0usize..MAPS.len(), seed in any::<u64>(), m in 1usize..=3) {
        let map = catalog_map(MAPS[pick]).unwrap();
        let n = map.n_in();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = DimVec::pair(m, n).unwrap();
        let rank = (1 + (seed as usize) % dims.total()).max(m);
        let rho = random_density(&dims, rank, &mut rng).unwrap();
        let marginal = partial_trace(&rho, &[0]).unwrap();
        let eig = marginal.matrix().clone().symmetric_eigen();
        prop_assume!(eig.eigenvalues.min() > 1e-6);
        let inv_sqrt = &eig.eigenvectors
            * CMat::from_diagonal(&eig.eigenvalues.map(|v| C64::new(1.0 / (v * m as f64).sqrt(), 0.0)))
            * eig.eigenvectors.adjoint();
        let local = nonmp_core::tensor::kron(&inv_sqrt, &CMat::identity(n, n));
        let mut sigma = local.adjoint() * rho.matrix() * &local;
        sigma = (&sigma + sigma.adjoint()) * C64::new(0.5, 0.0);
        let tr = sigma.trace().re;
        sigma /= C64::new(tr, 0.0);
        let sigma = HermOp::new(dims, sigma).unwrap();
        let new_marginal = partial_trace(&sigma, &[0]).unwrap();
        prop_assert!(max_abs_diff(new_marginal.matrix(), &(CMat::identity(m, m) / C64::new(m as f64, 0.0))) < 1e-9);

        let before = inertia_mat(&map.tensor_with_identity_mat(m, rho.matrix()).unwrap(), EPS_NEG).unwrap();
        let after = inertia_mat(&map.tensor_with_identity_mat(m, sigma.matrix()).unwrap(), EPS_NEG).unwrap();
        prop_assert_eq!(before.n_neg, after.n_neg);
    }
}
