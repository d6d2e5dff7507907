use pfp_core::coherence::{mu0_of_basis, DEFAULT_RANK_TOLERANCE};
use pfp_core::io::{parse_matrix, write_matrix};
use pfp_core::svd::singular_values;
use pfp_core::{
    c_coherence, gaussian_matrix, gram_schmidt, hmt_low_rank, mu0_coherence, pfp, prune_entries, spectral_norm,
    svd_oracle, CoherenceMode, DenseMatrix, MatrixFormat, PrivacyBudget, RngSeed, SketchParams,
};
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 100, ..ProptestConfig::default() }
}

fn gaussian(m: usize, n: usize, seed: u64) -> DenseMatrix {
    gaussian_matrix(m, n, 0.0, 1.0, RngSeed(seed)).unwrap()
}

fn low_rank(m: usize, n: usize, r: usize, seed: u64) -> DenseMatrix {
    gaussian(m, r, seed).matmul(&gaussian(r, n, seed ^ 0xabcd)).unwrap()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn weyl_perturbation(m in 1usize..=50, n in 1usize..=50, scale in 0.01f64..5.0, seed in any::<u64>()) {
        let a = gaussian(m, n, seed);
        let e = gaussian(m, n, seed.wrapping_add(1)).scale(scale);
        let sa = singular_values(&a).unwrap();
        let sae = singular_values(&a.add(&e).unwrap()).unwrap();
        let e_norm = spectral_norm(&e, 1000, RngSeed(seed));
        for (x, y) in sa.iter().zip(&sae) {
            prop_assert!((x - y).abs() <= e_norm + 1e-8, "|{x} - {y}| > {e_norm}");
        }
    }

    #[test]
    fn frobenius_submultiplicative(m in 1usize..=40, n in 1usize..=40, p in 1usize..=40, seed in any::<u64>()) {
        let a = gaussian(m, n, seed);
        let b = gaussian(n, p, seed.wrapping_add(7));
        let ab = a.matmul(&b).unwrap();
        prop_assert!(ab.frobenius_norm() <= a.frobenius_norm() * b.frobenius_norm() + 1e-10);
    }

    #[test]
    fn gram_schmidt_is_orthonormal(m in 1usize..=80, k in 1usize..=12, dup in any::<bool>(), seed in any::<u64>()) {
        let mut y = gaussian(m, k, seed);
        if dup && k >= 2 {
            // make the last column a combination of the first two
            let cols: Vec<Vec<f64>> = (0..k)
                .map(|j| if j == k - 1 { (0..m).map(|i| 2.0 * y.get(i, 0) - y.get(i, 1)).collect() } else { y.column(j) })
                .collect();
            y = DenseMatrix::from_columns(m, &cols);
        }
        let w = gram_schmidt(&y);
        prop_assert!(w.cols() <= k.min(m));
        prop_assert!(w.orthonormality_defect() <= 1e-10);
    }

    #[test]
    fn svd_invariants(m in 1usize..=64, n in 1usize..=64, seed in any::<u64>()) {
        let a = gaussian(m, n, seed);
        let f = svd_oracle(&a).unwrap();
        prop_assert!(f.singular_values.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(f.u.orthonormality_defect() <= 1e-10);
        prop_assert!(f.vt.transpose().orthonormality_defect() <= 1e-10);
        let rel = a.sub(&f.reconstruct()).unwrap().frobenius_norm() / a.frobenius_norm();
        prop_assert!(rel <= 1e-8);
    }

    #[test]
    fn coherence_relation(m in 8usize..=60, n in 8usize..=40, r in 1usize..=8, heavy in 1.0f64..20.0, seed in any::<u64>()) {
        let base = low_rank(m, n, r, seed);
        let a = DenseMatrix::from_fn(m, n, |i, j| if i == 0 { heavy * base.get(i, j) } else { base.get(i, j) });
        let c = c_coherence(&a).unwrap();
        let (mu0, used) = mu0_coherence(&a, DEFAULT_RANK_TOLERANCE).unwrap();
        prop_assert!(c <= (used as f64 * mu0).sqrt() + 1e-8);
        prop_assert!(c >= 1.0 - 1e-12 && c <= (m as f64).sqrt() + 1e-9);
    }

    #[test]
    fn mu0_of_orthonormal_basis_in_range(m in 2usize..=60, r in 1usize..=10, seed in any::<u64>()) {
        let u = gram_schmidt(&gaussian(m, r.min(m), seed));
        let mu0 = mu0_of_basis(&u);
        prop_assert!(mu0 >= 1.0 - 1e-10 && mu0 <= m as f64 + 1e-10);
    }

    #[test]
    fn sparse_vector_correlation(m in 4usize..=60, n in 2usize..=40, l in 1usize..=6, seed in any::<u64>()) {
        let a = gaussian(m, n, seed);
        let c = c_coherence(&a).unwrap();
        let l = l.min(m);
        let mut stream = RngSeed(seed).derive(5).stream();
        let mut support: Vec<usize> = (0..m).collect();
        for i in 0..l {
            let j = i + stream.below((m - i) as u64) as usize;
            support.swap(i, j);
        }
        let mut w = vec![0.0; m];
        for &i in &support[..l] {
            w[i] = stream.next_normal();
        }
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(norm > 0.0);
        let w = DenseMatrix::new(m, 1, w.iter().map(|v| v / norm).collect()).unwrap();
        let wa = w.t_matmul(&a).unwrap().frobenius_norm();
        prop_assert!(wa <= c * (l as f64).sqrt() * a.frobenius_norm() / (m as f64).sqrt() + 1e-8);
    }

    #[test]
    fn prune_is_idempotent_and_sparse(m in 1usize..=60, k in 1usize..=6, alpha in 0.01f64..=1.0, seed in any::<u64>()) {
        let w = gram_schmidt(&gaussian(m, k, seed));
        let once = prune_entries(&w, alpha).unwrap();
        prop_assert_eq!(&prune_entries(&once, alpha).unwrap(), &once);
        for j in 0..w.cols() {
            let zeroed = (0..m).filter(|&i| once.get(i, j) != w.get(i, j)).count();
            prop_assert!(zeroed as f64 <= (1.0 / (alpha * alpha)).floor());
        }
    }

    #[test]
    fn approximations_have_rank_at_most_k(m in 6usize..=30, n in 6usize..=30, seed in any::<u64>()) {
        let a = gaussian(m, n, seed);
        let params = SketchParams::new(2, 2, RngSeed(seed)).unwrap();
        let budget = PrivacyBudget::new(0.7, 1e-4).unwrap();
        let hmt = hmt_low_rank(&a, params).unwrap();
        let private = pfp(&a, params, budget, CoherenceMode::CCoherent, None).unwrap();
        let rr = pfp_core::rr_low_rank_baseline(&a, 4, budget, RngSeed(seed)).unwrap();
        for b in [&hmt.b, &private.b, &rr.b] {
            let s = singular_values(b).unwrap();
            let rank = s.iter().filter(|&&x| x > 1e-8 * s[0]).count();
            prop_assert!(rank <= 4);
        }
    }

    #[test]
    fn pfp_is_deterministic(seed in any::<u64>(), eps in 0.1f64..=1.0) {
        let a = gaussian(12, 20, seed);
        let params = SketchParams::new(2, 3, RngSeed(seed)).unwrap();
        let budget = PrivacyBudget::new(eps, 1e-5).unwrap();
        let x = pfp(&a, params, budget, CoherenceMode::CCoherent, None).unwrap();
        let y = pfp(&a, params, budget, CoherenceMode::CCoherent, None).unwrap();
        prop_assert_eq!(x.b, y.b);
    }

    #[test]
    fn dense_file_round_trip(values in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 1..40), cols in 1usize..=5) {
        let rows = values.len() / cols;
        prop_assume!(rows > 0);
        let a = DenseMatrix::new(rows, cols, values[..rows * cols].to_vec()).unwrap();
        let mut buf = Vec::new();
        write_matrix(&a, MatrixFormat::Dense, &mut buf).unwrap();
        let b = parse_matrix(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert!(a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
