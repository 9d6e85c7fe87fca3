use nonmp_core::maps::{choi_map, depolarizing, identity_map, transpose_map, HPMap};
use nonmp_core::multipartite::npt_subspace_basis;
use nonmp_core::sdp::{diamond_norm, finer_check, subspace_witness_sdp, LinearTransform};
use nonmp_core::search::random_density;
use nonmp_core::tensor::{orthonormalize, projection_from_span, random_gaussian, trace_norm};
use nonmp_core::{CMat, CVec, DimVec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn diamond_norm_dominates_state_lower_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let maps: Vec<HPMap> = vec![
        choi_map().unwrap(),
        transpose_map(3).unwrap(),
        depolarizing(3).unwrap().scaled(3.0).combine(1.0, &choi_map().unwrap(), -1.0).unwrap(),
    ];
    for map in &maps {
        let norm = diamond_norm(map).unwrap();
        let n = map.n_in();
        let dims = DimVec::pair(n, n).unwrap();
        for t in 0..100 {
            let rho = random_density(&dims, 1 + t % (n * n), &mut rng).unwrap();
            let lb = trace_norm(&map.tensor_with_identity_mat(n, rho.matrix()).unwrap());
            assert!(lb <= norm + 1e-8 * (1.0 + norm), "{}: {lb} > {norm}", map.label());
        }
    }
}

#[test]
fn removing_a_transform_never_raises_c() {
    let dims = DimVec::new(vec![2, 2, 2]).unwrap();
    let p = npt_subspace_basis(&dims).unwrap().projection().unwrap();
    let full = [LinearTransform::PartialTranspose { sub: 0 }, LinearTransform::PartialTranspose { sub: 1 }];
    let c_full = subspace_witness_sdp(&p, &full).unwrap().c_opt;
    for keep in 0..2 {
        let c_part = subspace_witness_sdp(&p, &full[keep..keep + 1]).unwrap().c_opt;
        assert!(c_part <= c_full + 1e-7, "{c_part} > {c_full}");
    }
}

#[test]
fn completely_positive_family_never_certifies() {
    // I ⊗ id^* is the identity, so the best c is exactly 1 for every P.
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let id = identity_map(2).unwrap();
    for rank in 1..=3 {
        for _ in 0..5 {
            let vecs: Vec<CVec> = (0..rank).map(|_| random_gaussian(4, 1, &mut rng).column(0).into_owned()).collect();
            let p = projection_from_span(DimVec::pair(2, 2).unwrap(), &orthonormalize(&vecs, 1e-12)).unwrap();
            let res = subspace_witness_sdp(&p, &[LinearTransform::TensorIdentity { map: id.adjoint(), m: 2 }]).unwrap();
            assert!(!res.certifies(1e-8), "c_opt = {}", res.c_opt);
            assert!((res.c_opt - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn transpose_subspace_gives_four_negatives() {
    let p = npt_subspace_basis(&DimVec::pair(3, 3).unwrap()).unwrap().projection().unwrap();
    let res = subspace_witness_sdp(&p, &[LinearTransform::PartialTranspose { sub: 0 }]).unwrap();
    assert!(res.certifies(1e-8));
    assert_eq!(res.neg_count, 4);
}

#[test]
fn state_from_subspace_for_transpose_three() {
    let t = transpose_map(3).unwrap();
    let p = npt_subspace_basis(&DimVec::pair(3, 3).unwrap()).unwrap().projection().unwrap();
    let rho = nonmp_core::sdp::state_from_subspace(&t, 3, &p).unwrap();
    let count = nonmp_core::search::neg_count(&t.adjoint(), 3, &rho).unwrap();
    assert!(count >= 4, "{count}");
}

#[test]
fn finer_than_after_subtracting_cp_part() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let phi2 = choi_map().unwrap();
    for _ in 0..5 {
        // A small CP map leaves Φ2 - Ψ positive since Φ_C(ρ) has trace 2.
        let k = random_gaussian(3, 3, &mut rng) * nonmp_core::C64::new(0.05, 0.0);
        let psi = HPMap::from_fn(3, 3, None, |x| &k * x * k.adjoint()).unwrap();
        let phi1 = phi2.combine(1.0, &psi, -1.0).unwrap();
        let r = finer_check(&phi1, &phi2).unwrap();
        assert!(r.feasible, "margin {}", r.margin);
        let p = r.certificate.unwrap();
        let eig = nonmp_core::tensor::herm_eigvals(p.matrix()).unwrap();
        assert!(eig[0] > -1e-6);
        let rebuilt: CMat = phi2.choi().matrix() * nonmp_core::C64::new(r.c, 0.0) - p.matrix();
        assert!(nonmp_core::tensor::max_abs_diff(&rebuilt, phi1.choi().matrix()) < 1e-9);
    }
}
