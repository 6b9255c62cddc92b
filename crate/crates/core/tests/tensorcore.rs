use modcomm::laughlin::{semion_state, SphereLattice};
use modcomm::teststates::random_pure_state;
use modcomm::tensorcore::{
    entropy, partial_trace_pure, read_state_cache, schmidt, schmidt_values, tilde_state,
    write_state_cache, DEFAULT_CUTOFF,
};
use modcomm::{Basis, PureState, SiteSet};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use proptest::prelude::*;

/// Dense `2^|X| x 2^|rest|` coefficient matrix of `state` for the cut `mask`.
fn dense_matrix(dense: &[Complex64], n: usize, mask: SiteSet) -> DMatrix<Complex64> {
    let inside: Vec<usize> = mask.iter().collect();
    let outside: Vec<usize> = (0..n).filter(|&i| !mask.contains(i)).collect();
    let pack = |x: usize, pos: &[usize]| -> usize {
        pos.iter().enumerate().map(|(k, &p)| ((x >> p) & 1) << k).sum()
    };
    let mut m = DMatrix::zeros(1 << inside.len(), 1 << outside.len());
    for (x, amp) in dense.iter().enumerate() {
        m[(pack(x, &inside), pack(x, &outside))] = *amp;
    }
    m
}

fn coefficient_matrix(state: &PureState, mask: SiteSet) -> DMatrix<Complex64> {
    dense_matrix(&state.to_dense(), state.n_sites(), mask)
}

fn dense_schmidt(state: &PureState, mask: SiteSet) -> Vec<f64> {
    let mut sv: Vec<f64> = coefficient_matrix(state, mask)
        .singular_values()
        .iter()
        .copied()
        .filter(|&s| s > 1e-13)
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.retain(|&s| s > 1e-13);
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v
}

#[test]
fn sector_svd_matches_dense_svd() {
    for n in [2usize, 4, 6, 8] {
        for seed in 0..10 {
            for basis in [Basis::Full, Basis::Magnetization(0)] {
                let s = random_pure_state(n, basis, seed).unwrap();
                for bits in [0b1u32, 0b101, 0b0110, 0b1011, (1 << (n / 2)) - 1] {
                    let mask = SiteSet::from_bits(bits & ((1 << n) - 1));
                    if mask.is_empty() || mask.len() == n {
                        continue;
                    }
                    let got = sorted_desc(schmidt_values(&s, mask).unwrap());
                    let want = dense_schmidt(&s, mask);
                    assert_eq!(got.len(), want.len(), "n {n} mask {mask:?}");
                    for (g, w) in got.iter().zip(&want) {
                        assert!((g - w).abs() <= 1e-10);
                    }
                }
            }
        }
    }
}

#[test]
fn tilde_state_matches_dense_modular_hamiltonian() {
    for seed in 0..20 {
        let s = random_pure_state(6, Basis::Magnetization(0), seed).unwrap();
        let mask = SiteSet::from_sites([0, 2, 3]);
        let m = coefficient_matrix(&s, mask);
        let rho = &m * m.adjoint();
        let eig = SymmetricEigen::new(rho.clone());
        let k = DMatrix::from_fn(rho.nrows(), rho.nrows(), |i, j| {
            let v = eig.eigenvalues[i];
            if i == j && v > 1e-13 {
                Complex64::new(-v.ln(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let k = &eig.eigenvectors * k * eig.eigenvectors.adjoint();
        let want = &k * &m;

        let tilde = tilde_state(&s, mask, 1e-14).unwrap();
        let mut dense = vec![Complex64::new(0.0, 0.0); 1 << 6];
        for (c, a) in s.configs().iter().zip(tilde) {
            dense[*c as usize] = a;
        }
        let got = dense_matrix(&dense, 6, mask);
        assert!((&got - &want).iter().all(|d| d.norm() <= 1e-9), "seed {seed}");
    }
}

#[test]
fn entropy_is_symmetric_across_the_cut() {
    for seed in 0..30 {
        let s = random_pure_state(7, Basis::Full, seed).unwrap();
        let mask = SiteSet::from_sites([1, 4, 5]);
        let a = entropy(&s, mask).unwrap();
        let b = entropy(&s, mask.complement(7)).unwrap();
        assert!((a - b).abs() <= 1e-10);
        let rho = partial_trace_pure(&s, mask).unwrap();
        assert!((rho.entropy() - a).abs() <= 1e-10);
    }
}

#[test]
fn identity_reconstruction_returns_the_state() {
    for seed in 0..20 {
        let s = random_pure_state(8, Basis::Magnetization(0), seed).unwrap();
        let sd = schmidt(&s, SiteSet::from_sites([0, 3, 6]), 0.0).unwrap();
        let back = sd.reconstruct_with(|l| l);
        for (x, y) in back.iter().zip(s.amplitudes()) {
            assert!((x - y).norm() <= 1e-12);
        }
    }
}

#[test]
fn cache_round_trip_is_lossless() {
    let s = random_pure_state(8, Basis::Magnetization(0), 5).unwrap();
    let mut buf = Vec::new();
    write_state_cache(&s, &mut buf).unwrap();
    let t = read_state_cache(buf.as_slice()).unwrap();
    assert_eq!(s.basis(), t.basis());
    assert_eq!(s.amplitudes(), t.amplitudes());
    buf[0] ^= 0xff;
    assert!(read_state_cache(buf.as_slice()).is_err());
}

#[test]
fn semion_entropies_are_stable_under_cutoff() {
    let s = semion_state(&SphereLattice::golden(12).unwrap()).unwrap();
    for mask in [SiteSet::from_sites([0, 1, 2]), SiteSet::from_sites([3, 5, 7, 9, 11])] {
        let loose = schmidt(&s, mask, 1e-12).unwrap();
        let tight = schmidt(&s, mask, 1e-14).unwrap();
        let e = |sd: &modcomm::SchmidtData| modcomm::tensorcore::entanglement_entropy(sd);
        assert!((e(&loose) - e(&tight)).abs() <= 1e-9);
        let t1 = tilde_state(&s, mask, 1e-12).unwrap();
        let t2 = tilde_state(&s, mask, 1e-14).unwrap();
        let diff: f64 = t1.iter().zip(&t2).map(|(x, y)| (x - y).norm_sqr()).sum();
        assert!(diff.sqrt() <= 1e-9);
    }
}

#[test]
fn invalid_cuts_are_rejected() {
    let s = random_pure_state(4, Basis::Full, 0).unwrap();
    assert!(schmidt(&s, SiteSet::from_sites([5]), DEFAULT_CUTOFF).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn schmidt_weights_sum_to_one(seed in any::<u64>(), bits in 1u32..63) {
        let s = random_pure_state(6, Basis::Full, seed).unwrap();
        let v = schmidt_values(&s, SiteSet::from_bits(bits)).unwrap();
        let total: f64 = v.iter().map(|x| x * x).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(v.iter().all(|&x| x >= 0.0));
    }
}
