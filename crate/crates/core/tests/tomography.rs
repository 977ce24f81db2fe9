mod common;

use common::*;
use sepkit::linalg::*;
use sepkit::states::{max_entangled, random_density, random_product_pure, Ensemble};
use sepkit::tomography::*;

fn shape(a: usize, b: usize) -> BipartiteShape {
    BipartiteShape::new(a, b).unwrap()
}

/// Hermitian basis of `d x d` matrices: diagonal units plus symmetric and
/// antisymmetric off-diagonal pairs.
fn hermitian_basis(d: usize) -> Vec<ComplexMatrix> {
    let mut out = Vec::new();
    for i in 0..d {
        for j in i..d {
            let mut re = ComplexMatrix::zeros(d, d);
            re[(i, j)] = c(1.0, 0.0);
            re[(j, i)] = c(1.0, 0.0);
            out.push(re);
            if i != j {
                let mut im = ComplexMatrix::zeros(d, d);
                im[(i, j)] = c(0.0, 1.0);
                im[(j, i)] = c(0.0, -1.0);
                out.push(im);
            }
        }
    }
    out
}

fn check_povm(povm: &Povm, tol: f64) {
    let d = povm.dim();
    assert_eq!(povm.len(), d * d);
    let mut sum = ComplexMatrix::zeros(d, d);
    for e in povm.elements() {
        assert!(psd_margin(e).unwrap() >= -1e-12);
        sum += e;
    }
    assert_close(&sum, &ComplexMatrix::identity(d), 1e-9);
    for (a, e) in povm.elements().iter().enumerate() {
        for (b, dual) in povm.duals().iter().enumerate() {
            let want = if a == b { 1.0 } else { 0.0 };
            assert!((e.trace_product(dual).re - want).abs() < tol, "Tr(M_{a} M*_{b})");
        }
    }
}

/// `sum_n Tr(X M_n) M_n*` written out directly.
fn oracle_frame(povm: &Povm, x: &ComplexMatrix) -> ComplexMatrix {
    let d = povm.dim();
    let mut out = ComplexMatrix::zeros(d, d);
    for (e, dual) in povm.elements().iter().zip(povm.duals()) {
        let mut coeff = c(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                coeff += x[(i, j)] * e[(j, i)];
            }
        }
        out += &dual.scale(coeff.re);
    }
    out
}

#[test]
fn ic_povm_invariants() {
    for d in [2, 3, 4] {
        for seed in [0, 11] {
            let povm = build_ic_povm(d, seed).unwrap();
            check_povm(&povm, 1e-8);
            let rho = random_density(shape(d, 1), seed + 100);
            let p = povm.probabilities(&rho).unwrap();
            assert!(p.iter().all(|&v| v >= 0.0));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
    assert!(build_ic_povm(1, 0).is_err());
    let a = build_ic_povm(3, 5).unwrap();
    let b = build_ic_povm(3, 5).unwrap();
    assert_eq!(a.elements(), b.elements());
}

#[test]
fn frame_identity_on_a_hermitian_basis() {
    for d in [2, 3] {
        let povm = build_ic_povm(d, 7).unwrap();
        let basis = hermitian_basis(d);
        assert_eq!(basis.len(), d * d);
        for x in &basis {
            assert_close(&povm.frame_map(x).unwrap(), x, 1e-8);
            assert_close(&oracle_frame(&povm, x), x, 1e-8);
        }
        let x = hermitian(d, 3);
        assert_close(&povm.frame_map(&x).unwrap(), &x, 1e-8);
    }
}

#[test]
fn product_povm_examples() {
    let pa = build_ic_povm(2, 1).unwrap();
    let pb = build_ic_povm(3, 2).unwrap();
    let p = product_povm(&pa, &pb);
    assert_eq!(p.len(), 4 * 9);
    assert_eq!(p.dim(), 6);
    check_povm(&p, 1e-8);
    for n in 0..pa.len() {
        for m in 0..pb.len() {
            let idx = n * pb.len() + m;
            assert_close(&p.elements()[idx], &naive_kron(&pa.elements()[n], &pb.elements()[m]), 1e-14);
            assert_close(&p.duals()[idx], &naive_kron(&pa.duals()[n], &pb.duals()[m]), 1e-14);
        }
    }

    // Exact probabilities reconstruct a product state, locally and globally.
    let ra = random_density(shape(2, 1), 8);
    let rb = random_density(shape(3, 1), 9);
    let rho = DensityMatrix::new(naive_kron(ra.matrix(), rb.matrix()), shape(2, 3)).unwrap();
    let probs = p.probabilities(&rho).unwrap();
    let local = p.reconstruct_from_probabilities(&probs).unwrap();
    assert_close(&local, rho.matrix(), 1e-8);
    let global = build_ic_povm(6, 3).unwrap();
    let via_global = global.reconstruct_from_probabilities(&global.probabilities(&rho).unwrap()).unwrap();
    assert_close(&via_global, &local, 1e-8);
}

#[test]
fn reconstruction_from_exact_probabilities() {
    for seed in 0..5 {
        let rho = random_density(shape(2, 2), seed);
        let povm = local_povm(&rho, seed).unwrap();
        let est = povm.reconstruct_from_probabilities(&povm.probabilities(&rho).unwrap()).unwrap();
        assert_close(&est, rho.matrix(), 1e-8);
    }
    let phi = max_entangled(2).unwrap();
    let povm = local_povm(&phi, 0).unwrap();
    assert!(povm.probabilities(&max_entangled(3).unwrap()).is_err());
    assert!(povm.reconstruct_from_probabilities(&[0.5, 0.5]).is_err());
}

#[test]
fn sampling_statistics() {
    let rho = random_density(shape(2, 2), 4);
    let povm = local_povm(&rho, 4).unwrap();
    let shots = 100_000u64;
    let counts = sample_outcomes(&rho, &povm, shots, 21).unwrap();
    assert_eq!(counts.counts.iter().sum::<u64>(), counts.total);
    assert_eq!(counts, sample_outcomes(&rho, &povm, shots, 21).unwrap());
    assert_ne!(counts, sample_outcomes(&rho, &povm, shots, 22).unwrap());
    let p = povm.probabilities(&rho).unwrap();
    for (r, pn) in counts.counts.iter().zip(&p) {
        let freq = *r as f64 / shots as f64;
        assert!((freq - pn).abs() <= 3.0 * (pn / shots as f64).sqrt(), "freq {freq} vs p {pn}");
    }
    assert!(sample_outcomes(&rho, &povm, 0, 0).is_err());
}

#[test]
fn reconstruct_examples() {
    let phi = max_entangled(2).unwrap();
    let povm = local_povm(&phi, 0).unwrap();
    let counts = sample_outcomes(&phi, &povm, 100_000, 1).unwrap();
    let est = reconstruct(&counts, &povm).unwrap();
    assert!(est.is_hermitian(1e-12));
    assert!((est.trace().re - 1.0).abs() < 1e-9);
    let dev = trace_norm(&(&est - phi.matrix()));
    assert!(dev <= 0.1, "deviation {dev}");

    let mut single = vec![0; povm.len()];
    single[5] = 3;
    let est = reconstruct(&OutcomeCounts { counts: single, total: 3 }, &povm).unwrap();
    assert_close(&est, &povm.duals()[5], 1e-15);
    assert!(reconstruct(&OutcomeCounts { counts: vec![1; povm.len()], total: 3 }, &povm).is_err());
}

#[test]
fn acceptance_trends() {
    let phi = max_entangled(2).unwrap();
    let mixed = DensityMatrix::maximally_mixed(shape(2, 2));
    let low = acceptance_probability(&phi, &phi, 10, 0.75, 200, 0).unwrap();
    let high = acceptance_probability(&phi, &phi, 150, 0.75, 200, 0).unwrap();
    assert!(high.probability > low.probability, "{} vs {}", high.probability, low.probability);
    assert!(high.std_error_bound <= 0.5 / (200f64).sqrt() + 1e-15);
    let far = acceptance_probability(&phi, &mixed, 150, 0.75, 200, 0).unwrap();
    assert!(far.probability <= 0.05, "far source accepted with {}", far.probability);

    let again = acceptance_probability(&phi, &phi, 10, 0.75, 200, 0).unwrap();
    assert_eq!(again.probability, low.probability);
}

#[test]
fn acceptance_is_monotone_in_eps() {
    let rho = random_density(shape(2, 2), 12);
    let povm = local_povm(&rho, 3).unwrap();
    let mut last = 0.0;
    for eps in [0.2, 0.4, 0.75, 1.0, 1.5, 2.0, 3.0, 6.0, 12.0] {
        let p = acceptance_with_povm(&povm, &rho, &rho, 20, eps, 150, 99).unwrap().probability;
        assert!(p >= last, "eps {eps}: {p} < {last}");
        last = p;
    }
    // The radius eps/2 exceeds any trace distance between states once eps >= 2,
    // but raw estimates may be non-physical, so only the trend is exact.
    assert!(last >= 0.9);
    assert!(acceptance_with_povm(&povm, &rho, &rho, 20, 0.0, 10, 0).is_err());
}

#[test]
fn mixture_acceptance_examples() {
    let phi = max_entangled(2).unwrap();
    let sep = random_product_pure(shape(2, 2), 3);
    let mixed = DensityMatrix::maximally_mixed(shape(2, 2));

    let single = Ensemble::new(vec![(1.0, phi.clone())]).unwrap();
    let direct = acceptance_probability(&phi, &phi, 30, 0.75, 100, 5).unwrap();
    assert_eq!(mixture_acceptance(&single, &phi, 30, 0.75, 100, 5).unwrap().probability, direct.probability);

    let first = Ensemble::new(vec![(1.0, phi.clone()), (0.0, mixed.clone())]).unwrap();
    assert_eq!(mixture_acceptance(&first, &phi, 30, 0.75, 100, 5).unwrap().probability, direct.probability);

    // All members eps-far from the target: the weighted value is the
    // average of the individual ones, hence no larger than the largest.
    assert!(trace_distance(&mixed, &phi).unwrap() >= 0.75);
    assert!(trace_distance(&sep, &phi).unwrap() >= 0.5);
    let far = Ensemble::uniform(vec![mixed.clone(), sep.clone()]).unwrap();
    let mix = mixture_acceptance(&far, &phi, 60, 0.75, 100, 5).unwrap();
    let povm = local_povm(&phi, 5).unwrap();
    let each = |s: &DensityMatrix| acceptance_with_povm(&povm, &phi, s, 60, 0.75, 100, 1).unwrap().probability;
    assert!(mix.probability <= each(&mixed).max(each(&sep)) + 0.1);
    assert!(mix.probability <= 0.2);
}

#[test]
fn separation_statistic_grows_with_n() {
    let phi = max_entangled(2).unwrap();
    let far = Ensemble::new(vec![(1.0, DensityMatrix::maximally_mixed(shape(2, 2)))]).unwrap();
    let stat = |n| {
        acceptance_probability(&phi, &phi, n, 0.75, 200, 2).unwrap().probability
            - mixture_acceptance(&far, &phi, n, 0.75, 200, 2).unwrap().probability
    };
    let (a, b) = (stat(10), stat(150));
    assert!(b >= a, "separation {a} -> {b}");
}
