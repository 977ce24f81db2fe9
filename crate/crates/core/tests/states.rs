mod common;

use common::*;
use sepkit::criteria::{cross_norm_test, entropic_test, majorization_test, ppt_test, reduction_test, RenyiOrder};
use sepkit::io::{self, MatrixDocument, MatrixKind};
use sepkit::linalg::*;
use sepkit::spec::{parse_state_spec, StateSpec};
use sepkit::states::*;
use sepkit::Error;

fn shape(a: usize, b: usize) -> BipartiteShape {
    BipartiteShape::new(a, b).unwrap()
}

#[test]
fn maxent_entries_and_marginals() {
    let phi = max_entangled(2).unwrap();
    for r in 0..4 {
        for col in 0..4 {
            let expected = if [0, 3].contains(&r) && [0, 3].contains(&col) { 0.5 } else { 0.0 };
            assert_eq!(phi.matrix()[(r, col)], c(expected, 0.0), "({r},{col})");
        }
    }
    for d in 2..=5 {
        let phi = max_entangled(d).unwrap();
        assert_close(&phi.reduced(Side::A), &ComplexMatrix::identity(d).scale(1.0 / d as f64), 1e-14);
        assert!((pure_fidelity(&phi, &max_entangled_vector(d).unwrap()).unwrap() - 1.0).abs() < 1e-12);
        let ev = phi.eigenvalues();
        assert!((ev[0] - 1.0).abs() < 1e-12 && ev[1].abs() < 1e-12);
    }
    assert!(max_entangled(1).is_err());
}

#[test]
fn antisymmetric_vectors_are_orthonormal_and_orthogonal_to_symmetric_products() {
    for d in 2..=5 {
        let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect();
        for &(i, j) in &pairs {
            let v = antisym_vector(i, j, d).unwrap();
            for &(k, l) in &pairs {
                let w = antisym_vector(k, l, d).unwrap();
                let expected = if (i, j) == (k, l) { 1.0 } else { 0.0 };
                assert!((inner(&v, &w) - c(expected, 0.0)).norm() < 1e-14);
            }
            for seed in 0..5 {
                let a = sepkit::rng::random_unit_vector(d, &mut sepkit::rng::seeded(seed));
                assert!(inner(&v, &kron_vec(&a, &a)).norm() < 1e-12);
            }
        }
    }
    assert!(antisym_vector(1, 1, 3).is_err());
    assert!(antisym_vector(2, 1, 3).is_err());
    assert!(antisym_vector(0, 3, 3).is_err());
}

#[test]
fn segment_states() {
    let rho = random_density(shape(2, 2), 5);
    assert_close(segment_state(&rho, 0.0).unwrap().matrix(), rho.matrix(), 0.0);
    let mm = DensityMatrix::maximally_mixed(shape(2, 2));
    assert_close(segment_state(&mm, 1.0).unwrap().matrix(), max_entangled(2).unwrap().matrix(), 1e-15);
    // Partial-transpose spectrum of the isotropic family: (1-t)/4 + t/2 (x3), (1-t)/4 - t/2.
    for i in 0..=20 {
        let t = i as f64 / 20.0;
        let m = psd_margin(&segment_state(&mm, t).unwrap().partial_transpose()).unwrap();
        assert!((m - ((1.0 - t) / 4.0 - t / 2.0)).abs() < 1e-12);
        assert_eq!(ppt_test(&segment_state(&mm, t).unwrap()).unwrap().passed, t <= 1.0 / 3.0 + 1e-12);
    }
    assert!(segment_state(&mm, 1.5).is_err());
    assert!(segment_state(&random_density(shape(2, 3), 0), 0.5).is_err());
    for d in 2..=4 {
        assert!((isotropic_ppt_threshold(d) - 1.0 / (d as f64 + 1.0)).abs() < 1e-15);
    }
}

#[test]
fn tiles_state_is_ppt_rank_four() {
    let rho = tiles_upb_state();
    assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
    let ev = rho.eigenvalues();
    assert_eq!(ev.iter().filter(|&&x| x > 1e-10).count(), 4);
    assert!(psd_margin(&rho.partial_transpose()).unwrap() >= -1e-10);
    let vs = tiles_upb_vectors();
    for (i, v) in vs.iter().enumerate() {
        for (j, w) in vs.iter().enumerate() {
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!((inner(v, w) - c(expected, 0.0)).norm() < 1e-14);
        }
    }
}

#[test]
fn random_density_contract() {
    for seed in 0..100 {
        let r = random_density(shape(2, 2), seed);
        assert!((r.matrix().trace().re - 1.0).abs() < 1e-12);
        assert!(psd_margin(r.matrix()).unwrap() >= -1e-15);
    }
    assert_eq!(random_density(shape(3, 2), 42), random_density(shape(3, 2), 42));
    let mut mean = ComplexMatrix::zeros(2, 2);
    let n = 10_000;
    for seed in 0..n {
        mean += random_density(shape(2, 1), seed).matrix();
    }
    let mean = DensityMatrix::new(mean.scale(1.0 / n as f64), shape(2, 1)).unwrap();
    assert!(trace_distance(&mean, &DensityMatrix::maximally_mixed(shape(2, 1))).unwrap() < 0.05);
}

#[test]
fn random_separable_contract() {
    let p = random_product_pure(shape(2, 3), 1);
    assert!((p.eigenvalues()[0] - 1.0).abs() < 1e-12);
    for c in [
        ppt_test(&p).unwrap(),
        reduction_test(&p).unwrap(),
        entropic_test(&p, RenyiOrder::Two).unwrap(),
        entropic_test(&p, RenyiOrder::VonNeumann).unwrap(),
        majorization_test(&p).unwrap(),
        cross_norm_test(&p).unwrap(),
    ] {
        assert!(c.passed, "{c:?}");
    }
    for seed in 0..20 {
        let (rho, ens) = random_separable(shape(3, 2), 1 + seed as usize % 7, seed).unwrap();
        let mut m = ComplexMatrix::zeros(6, 6);
        for mem in ens.members() {
            m += &naive_kron(mem.a.matrix(), mem.b.matrix()).scale(mem.weight);
        }
        assert_close(rho.matrix(), &m, 1e-12);
        let w: f64 = ens.members().iter().map(|m| m.weight).sum();
        assert!((w - 1.0).abs() < 1e-12);
    }
    for seed in 0..20 {
        let (rho, _) = random_separable(shape(2, 2), 4, seed).unwrap();
        assert_eq!(rho.eigenvalues().iter().filter(|&&x| x > 1e-10).count(), 4, "seed {seed}");
    }
}

#[test]
fn tensor_powers() {
    let rho = random_density(shape(2, 3), 8);
    assert_close(tensor_power_bipartite(&rho, 1).unwrap().matrix(), rho.matrix(), 0.0);
    let ra = random_density(shape(2, 1), 1);
    let rb = random_density(shape(3, 1), 2);
    let prod = DensityMatrix::new(tensor(ra.matrix(), rb.matrix()), shape(2, 3)).unwrap();
    let sq = tensor_power_bipartite(&prod, 2).unwrap();
    let expected = naive_kron(&naive_kron(ra.matrix(), ra.matrix()), &naive_kron(rb.matrix(), rb.matrix()));
    assert_close(sq.matrix(), &expected, 1e-15);
    assert_eq!((sq.shape().dim_a, sq.shape().dim_b), (4, 9));

    let small = random_density(shape(2, 2), 3);
    let p3 = tensor_power_bipartite(&small, 3).unwrap();
    let p1 = tensor_power_bipartite(&small, 1).unwrap();
    let p2 = tensor_power_bipartite(&small, 2).unwrap();
    let joined = regrouped_product(&[&p1, &p2], dim_cap()).unwrap();
    assert_close(p3.matrix(), joined.matrix(), 1e-15);

    let t2 = tensor_power_bipartite(&tiles_upb_state(), 2).unwrap();
    assert!(psd_margin(&t2.partial_transpose()).unwrap() >= -1e-9);
    assert!(matches!(tensor_power_bipartite_capped(&small, 4, 100), Err(Error::CapExceeded { .. })));
    assert!(tensor_power_bipartite(&small, 0).is_err());
}

#[test]
fn file_documents_round_trip_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rho.json");
    for seed in 0..5 {
        let rho = random_density(shape(2, 3), seed);
        io::write_density(&path, &rho).unwrap();
        let back = parse_state_spec(&format!("file:{}", path.display())).unwrap().state;
        assert_eq!(back.shape(), rho.shape());
        for (a, b) in rho.matrix().as_slice().iter().zip(back.matrix().as_slice()) {
            assert_eq!((a.re.to_bits(), a.im.to_bits()), (b.re.to_bits(), b.im.to_bits()));
        }
    }
    let h = hermitian(3, 1);
    let doc = MatrixDocument::from_matrix(&h, MatrixKind::Hermitian, None).unwrap();
    let back = io::from_json_str(&io::to_json_string(&doc).unwrap()).unwrap().to_matrix().unwrap();
    assert_eq!(back, h);
    assert!(io::from_json_str(r#"{"kind":"density","re":[[1]],"im":[[0]],"extra":1}"#).is_err());
    let not_state = r#"{"kind":"density","dims":[1,2],"re":[[1,0],[0,1]],"im":[[0,0],[0,0]]}"#;
    assert!(matches!(io::from_json_str(not_state).unwrap().to_density(), Err(Error::InvalidState(_))));
}

#[test]
fn state_specs() {
    assert_close(parse_state_spec("maxent:2").unwrap().state.matrix(), max_entangled(2).unwrap().matrix(), 0.0);
    let near = parse_state_spec("isotropic:2:0.3333333").unwrap().state;
    let m = ppt_test(&near).unwrap().margin;
    assert!(m > 0.0 && m < 1e-7);
    assert_eq!(parse_state_spec("tiles").unwrap().state, tiles_upb_state());
    assert_eq!(parse_state_spec("random:2:3:9").unwrap().state, random_density(shape(2, 3), 9));
    let sep = parse_state_spec("sep:2:2:3:4").unwrap();
    assert!(sep.ensemble.is_some());
    assert_eq!(sep.spec, StateSpec::Separable { dim_a: 2, dim_b: 2, k: 3, seed: 4 });
    assert!(matches!(parse_state_spec("file:/nonexistent/rho.json"), Err(Error::Io(_))));
    assert!(matches!(parse_state_spec("maxent:1"), Err(Error::InvalidArgument(_))));
}
