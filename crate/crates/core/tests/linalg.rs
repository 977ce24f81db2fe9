mod common;

use common::*;
use proptest::prelude::*;
use sepkit::linalg::*;
use sepkit::states::{antisym_vector, max_entangled, max_entangled_vector, random_density, random_product_pure};

fn shape(a: usize, b: usize) -> BipartiteShape {
    BipartiteShape::new(a, b).unwrap()
}

#[test]
fn tensor_basics_and_index_formula() {
    assert_close(&tensor(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2)), &ComplexMatrix::identity(4), 0.0);
    let t = tensor(&ComplexMatrix::diag_real(&[1.0, 0.0]), &ComplexMatrix::diag_real(&[0.0, 1.0]));
    assert_close(&t, &ComplexMatrix::diag_real(&[0.0, 1.0, 0.0, 0.0]), 0.0);
    for seed in 0..5 {
        let a = random_matrix(2 + seed as usize % 2, 3, seed);
        let b = random_matrix(3, 2 + seed as usize % 3, seed + 100);
        assert_close(&tensor(&a, &b), &naive_kron(&a, &b), 0.0);
    }
}

#[test]
fn permute_systems_against_einsum_oracle() {
    let a = hermitian(2, 1);
    let b = hermitian(3, 2);
    let ab = tensor(&a, &b);
    assert_close(&permute_systems(&ab, &[2, 3], &[0, 1]).unwrap(), &ab, 0.0);
    assert_close(&permute_systems(&ab, &[2, 3], &[1, 0]).unwrap(), &tensor(&b, &a), 0.0);

    let dims = [2, 3, 2, 2];
    for perm in [[0, 2, 1, 3], [3, 1, 0, 2], [1, 0, 3, 2]] {
        let m = random_matrix(24, 24, 7);
        let got = permute_systems(&m, &dims, &perm).unwrap();
        assert_close(&got, &einsum_permute(&m, &dims, &perm), 0.0);
        let back_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
        assert_close(&permute_systems(&got, &back_dims, &inverse_permutation(&perm)).unwrap(), &m, 0.0);
    }

    let phi = max_entangled(2).unwrap();
    let pp = tensor(phi.matrix(), phi.matrix());
    let regrouped = permute_systems(&pp, &[2, 2, 2, 2], &[0, 2, 1, 3]).unwrap();
    assert_close(&regrouped, &einsum_permute(&pp, &[2, 2, 2, 2], &[0, 2, 1, 3]), 0.0);
    assert!(psd_margin(&regrouped).unwrap() > -1e-12);
    assert!((regrouped.trace().re - 1.0).abs() < 1e-12);
    let rest = einsum_trace(&regrouped, &[2, 2, 2, 2], &[0, 1]);
    assert_close(&rest, &ComplexMatrix::identity(4).scale(0.25), 1e-12);
    assert!(matches!(permute_systems(&pp, &[2, 2, 2, 2], &[0, 0, 1, 2]), Err(sepkit::Error::InvalidPermutation(_))));
    assert!(permute_systems(&pp, &[2, 2, 3], &[0, 1, 2]).is_err());
}

#[test]
fn partial_trace_examples() {
    let ra = random_density(shape(2, 1), 3);
    let rb = random_density(shape(3, 1), 4);
    let prod = tensor(ra.matrix(), rb.matrix());
    assert_close(&partial_trace(&prod, shape(2, 3), Side::A).unwrap(), ra.matrix(), 1e-14);
    assert_close(&partial_trace(&prod, shape(2, 3), Side::B).unwrap(), rb.matrix(), 1e-14);
    for d in 2..=4 {
        let phi = max_entangled(d).unwrap();
        let id = ComplexMatrix::identity(d).scale(1.0 / d as f64);
        assert_close(&partial_trace(phi.matrix(), shape(d, d), Side::B).unwrap(), &id, 1e-14);
        let full = partial_trace(&ComplexMatrix::identity(d * d), shape(d, d), Side::A).unwrap();
        assert_close(&full, &ComplexMatrix::identity(d).scale(d as f64), 0.0);
    }
    let m = random_matrix(6, 6, 9);
    assert_close(&partial_trace(&m, shape(2, 3), Side::A).unwrap(), &einsum_trace(&m, &[2, 3], &[0]), 1e-13);
    assert_close(&partial_trace(&m, shape(2, 3), Side::B).unwrap(), &einsum_trace(&m, &[2, 3], &[1]), 1e-13);
    assert!(partial_trace(&m, shape(3, 3), Side::A).is_err());
}

#[test]
fn partial_transpose_examples() {
    let a = random_matrix(2, 2, 1);
    let b = random_matrix(3, 3, 2);
    let pt = partial_transpose(&tensor(&a, &b), shape(2, 3)).unwrap();
    assert_close(&pt, &tensor(&a, &b.transpose()), 1e-15);
    let diag = ComplexMatrix::diag_real(&[0.1, 0.2, 0.3, 0.4]);
    assert_close(&partial_transpose(&diag, shape(2, 2)).unwrap(), &diag, 0.0);
    for d in 2..=6 {
        let phi = max_entangled(d).unwrap();
        let ev = hermitian_eigenvalues(&phi.partial_transpose()).unwrap();
        assert!((ev.last().unwrap() + 1.0 / d as f64).abs() <= 1e-9, "d = {d}");
        assert!((psd_margin(&phi.partial_transpose()).unwrap() + 1.0 / d as f64).abs() <= 1e-9);
    }
}

#[test]
fn antisymmetric_vectors_are_negative_eigenvectors_of_transposed_maxent() {
    for d in 2..=6 {
        let ptm = max_entangled(d).unwrap().partial_transpose();
        for i in 0..d {
            for j in i + 1..d {
                let v = antisym_vector(i, j, d).unwrap();
                let w = ptm.mul_vec(&v);
                let err = w.iter().zip(&v).map(|(x, y)| (x + y.scale(1.0 / d as f64)).norm()).fold(0.0, f64::max);
                assert!(err <= 1e-9, "d={d} ({i},{j}) err {err:e}");
            }
        }
    }
}

#[test]
fn realign_matches_outer_product_of_vectorisations() {
    for seed in 0..4 {
        let m = random_matrix(2, 2, seed);
        let n = random_matrix(3, 3, seed + 50);
        let u = realign(&tensor(&m, &n), shape(2, 3)).unwrap();
        assert_close(&u, &outer_t(&vec_columns(&m), &vec_columns(&n)), 1e-14);
    }
    for seed in 0..5 {
        let p = random_product_pure(shape(2, 3), seed);
        let tn = trace_norm(&realign(p.matrix(), p.shape()).unwrap());
        let ra = p.reduced(Side::A);
        let rb = p.reduced(Side::B);
        let expected = norm(&vec_columns(&ra)) * norm(&vec_columns(&rb));
        assert!((tn - expected).abs() < 1e-10 && tn <= 1.0 + 1e-10);
    }
    for d in 2..=4 {
        let phi = max_entangled(d).unwrap();
        let sv = singular_values(&realign(phi.matrix(), phi.shape()).unwrap());
        assert_eq!(sv.len(), d * d);
        assert!(sv.iter().all(|s| (s - 1.0 / d as f64).abs() < 1e-10));
        assert!((sv.iter().sum::<f64>() - d as f64).abs() < 1e-9);
    }
}

#[test]
fn eigensolver_examples() {
    assert_eq!(hermitian_eigenvalues(&ComplexMatrix::diag_real(&[3.0, 1.0, 2.0])).unwrap(), vec![3.0, 2.0, 1.0]);
    let ev = hermitian_eigenvalues(max_entangled(2).unwrap().matrix()).unwrap();
    for (x, y) in ev.iter().zip([1.0, 0.0, 0.0, 0.0]) {
        assert!((x - y).abs() < 1e-12);
    }
    for seed in 0..10 {
        let d = 2 + seed as usize % 7;
        let h = hermitian(d, seed);
        let u = unitary(d, seed + 1000);
        let e1 = hermitian_eigenvalues(&h).unwrap();
        let e2 = hermitian_eigenvalues(&u.matmul(&h).matmul(&u.adjoint()).hermitian_part()).unwrap();
        for (a, b) in e1.iter().zip(&e2) {
            assert!((a - b).abs() <= 1e-9);
        }
        let eig = hermitian_eig(&h).unwrap();
        assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
        assert!(eig.reconstruct().max_abs_diff(&h) <= 1e-9 * h.max_abs());
    }
    let not_h = ComplexMatrix::from_real_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
    assert!(matches!(hermitian_eig(&not_h), Err(sepkit::Error::NotHermitian(_))));
}

#[test]
fn singular_values_examples() {
    assert_eq!(singular_values(&ComplexMatrix::identity(3)), vec![1.0; 3]);
    for seed in 0..6 {
        let m = random_matrix(3 + seed as usize % 2, 5, seed);
        let sv = singular_values(&m);
        let oracle: Vec<f64> =
            hermitian_eigenvalues(&m.adjoint().matmul(&m)).unwrap().iter().map(|x| x.max(0.0).sqrt()).collect();
        for (i, s) in sv.iter().enumerate() {
            assert!((s - oracle[i]).abs() < 1e-9, "{sv:?} vs {oracle:?}");
        }
        assert!((trace_norm(&m) - sv.iter().sum::<f64>()).abs() < 1e-12);
    }
    let u = vec![c(1.0, 0.0), c(0.0, 2.0)];
    let v = vec![c(3.0, 0.0), c(0.0, 0.0), c(4.0, -0.0)];
    let sv = singular_values(&ComplexMatrix::outer(&u, &v));
    assert!((sv[0] - 5.0f64.sqrt() * 5.0).abs() < 1e-12);
    assert!(sv[1..].iter().all(|s| s.abs() < 1e-12));
}

#[test]
fn trace_distance_and_fidelity_examples() {
    let rho = random_density(shape(2, 2), 1);
    assert!(trace_distance(&rho, &rho).unwrap().abs() < 1e-15);
    let zero = DensityMatrix::pure(&basis_vector(2, 0), shape(2, 1)).unwrap();
    let one = DensityMatrix::pure(&basis_vector(2, 1), shape(2, 1)).unwrap();
    assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-15);
    let mixed = DensityMatrix::maximally_mixed(shape(2, 2));
    let phi = max_entangled(2).unwrap();
    assert!((trace_distance(&phi, &mixed).unwrap() - 0.75).abs() < 1e-12);
    assert!(trace_distance(&phi, &random_density(shape(3, 1), 0)).is_err());

    let psi = max_entangled_vector(2).unwrap();
    assert!((pure_fidelity(&phi, &psi).unwrap() - 1.0).abs() < 1e-12);
    for d in 2..=4 {
        let mm = DensityMatrix::maximally_mixed(shape(d, d));
        let f = pure_fidelity(&mm, &max_entangled_vector(d).unwrap()).unwrap();
        assert!((f - 1.0 / d as f64).abs() < 1e-12);
    }
    assert!(pure_fidelity(&phi, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).is_err());
    // 1 - F <= D(sigma, psi) <= sqrt(1 - F^2) for the pure state psi.
    let pure_phi = DensityMatrix::pure(&psi, shape(2, 2)).unwrap();
    for seed in 0..50 {
        let s = random_density(shape(2, 2), seed);
        let f = pure_fidelity(&s, &psi).unwrap();
        let t = trace_distance(&s, &pure_phi).unwrap();
        assert!(1.0 - f <= t + 1e-12 && t <= (1.0 - f * f).sqrt() + 1e-12, "seed {seed}");
    }
}

#[test]
fn psd_margin_examples() {
    assert!((psd_margin(&ComplexMatrix::identity(3)).unwrap() - 1.0).abs() < 1e-15);
    let m = psd_margin(&max_entangled(2).unwrap().partial_transpose()).unwrap();
    assert!((m + 0.5).abs() < 1e-12);
    let nearly = ComplexMatrix::diag_real(&[1.0, -1e-12]);
    assert!(psd_margin(&nearly).unwrap() < 0.0);
    assert!(is_psd(&nearly).unwrap());
    assert!(!is_psd(&ComplexMatrix::diag_real(&[1.0, -1e-6])).unwrap());
}

#[test]
fn trace_distance_is_unitarily_invariant_and_contracts_under_partial_trace() {
    for seed in 0..100u64 {
        let s = shape(2, 3);
        let rho = random_density(s, 2 * seed);
        let sigma = random_density(s, 2 * seed + 1);
        let t = trace_distance(&rho, &sigma).unwrap();
        let u = unitary(6, seed + 7000);
        let tu = trace_distance(&rho.conjugate_by(&u), &sigma.conjugate_by(&u)).unwrap();
        assert!((t - tu).abs() < 1e-9);
        for side in [Side::A, Side::B] {
            let ra = rho.reduced_state(side);
            let sa = sigma.reduced_state(side);
            assert!(trace_distance(&ra, &sa).unwrap() <= t + 1e-12);
        }
    }
}

fn arb_hermitian(d: usize) -> impl Strategy<Value = ComplexMatrix> {
    any::<u64>().prop_map(move |s| hermitian(d, s))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partial_transpose_is_an_involution_commuting_with_trace_over_a(x in arb_hermitian(6)) {
        let s = shape(2, 3);
        let pt = partial_transpose(&x, s).unwrap();
        prop_assert!(partial_transpose(&pt, s).unwrap().max_abs_diff(&x) == 0.0);
        prop_assert!((pt.trace() - x.trace()).norm() < 1e-12);
        prop_assert!(pt.hermitian_deviation() < 1e-15);
        let lhs = partial_trace(&pt, s, Side::B).unwrap();
        let rhs = partial_trace(&x, s, Side::B).unwrap().transpose();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn partial_transpose_preserves_hilbert_schmidt_products(x in arb_hermitian(6), y in arb_hermitian(6)) {
        let s = shape(3, 2);
        let a = partial_transpose(&x, s).unwrap().trace_product(&partial_transpose(&y, s).unwrap());
        prop_assert!((a - x.trace_product(&y)).norm() < 1e-10);
    }

    #[test]
    fn realign_is_linear(x in arb_hermitian(6), y in arb_hermitian(6), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let s = shape(2, 3);
        let lhs = realign(&(&x.scale(a) + &y.scale(b)), s).unwrap();
        let rhs = &realign(&x, s).unwrap().scale(a) + &realign(&y, s).unwrap().scale(b);
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn eigenvalues_sum_to_trace(seed in any::<u64>(), d in 1usize..12) {
        let h = hermitian(d, seed);
        let s: f64 = hermitian_eigenvalues(&h).unwrap().iter().sum();
        prop_assert!((s - h.trace().re).abs() < 1e-9);
    }
}
