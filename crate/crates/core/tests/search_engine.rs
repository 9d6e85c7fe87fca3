use nonmp_core::maps::{reduction_map, transpose_map};
use nonmp_core::search::{neg_count, random_density, reduction_optimal_state, search_nu_lower, subspace_from_state};
use nonmp_core::tensor::random_gaussian;
use nonmp_core::{CMat, DimVec, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn random_density_mean_is_maximally_mixed() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let dims = DimVec::pair(2, 2).unwrap();
    let samples = 10_000;
    let mut acc = CMat::zeros(4, 4);
    let mut sq = CMat::zeros(4, 4);
    for t in 0..samples {
        let rho = random_density(&dims, 1 + t % 4, &mut rng).unwrap();
        acc += rho.matrix();
        sq += rho.matrix().map(|z| C64::new(z.norm_sqr(), 0.0));
    }
    let n = samples as f64;
    for r in 0..4 {
        for c in 0..4 {
            let mean = acc[(r, c)] / n;
            let expected = if r == c { 0.25 } else { 0.0 };
            let var = sq[(r, c)].re / n - mean.norm_sqr();
            let sigma = (var / n).sqrt();
            assert!((mean - C64::new(expected, 0.0)).norm() <= 3.0 * sigma * 2f64.sqrt() + 1e-12, "({r},{c})");
        }
    }
}

#[test]
fn transpose_search_finds_negativity() {
    let r = search_nu_lower(&transpose_map(2).unwrap(), 2, 10_000, None, 1, None).unwrap();
    assert!(r.best_neg_count >= 1);
    assert_eq!(neg_count(&transpose_map(2).unwrap(), 2, &r.best_state).unwrap(), r.best_neg_count);
    assert!((r.best_state.trace().re - 1.0).abs() < 1e-10);
}

#[test]
fn reduction_states_hit_the_formula() {
    for n in 1..=6 {
        for m in 1..=n {
            for k in [1.0, 2.0, 3.0] {
                let expected = ((m as f64 / k).ceil() as usize) - 1;
                let got = match reduction_optimal_state(m, n, k).unwrap() {
                    Some(rho) => neg_count(&reduction_map(n, k).unwrap(), m, &rho).unwrap(),
                    None => 0,
                };
                assert_eq!(got, expected, "m={m} n={n} k={k}");
            }
        }
    }
}

#[test]
fn extracted_subspace_is_non_positive() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cases = [(transpose_map(3).unwrap(), 3usize), (reduction_map(3, 1.0).unwrap(), 3)];
    for (map, m) in &cases {
        let rho = match map.label() {
            l if l.starts_with("reduction") => reduction_optimal_state(*m, 3, 1.0).unwrap().unwrap(),
            _ => {
                let v = nonmp_core::tensor::max_entangled(3);
                nonmp_core::HermOp::new(DimVec::pair(3, 3).unwrap(), &v * v.adjoint()).unwrap()
            }
        };
        let basis = subspace_from_state(map, *m, &rho).unwrap();
        let b = CMat::from_columns(&basis.vectors);
        for _ in 0..100 {
            let g = random_gaussian(basis.dim(), basis.dim(), &mut rng);
            let mut sigma = &b * &g * g.adjoint() * b.adjoint();
            let tr = sigma.trace();
            sigma /= tr;
            let image = map.tensor_with_identity_mat(*m, &sigma).unwrap();
            let val = (image * rho.matrix()).trace().re;
            assert!(val < 0.0, "{}: {val}", map.label());
        }
    }
}
