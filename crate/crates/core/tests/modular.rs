use std::f64::consts::LN_2;

use modcomm::modular::{
    cmi, modular_commutator_dm, modular_commutator_dm_complex, modular_commutator_pure,
    modular_flow_entropy_derivative, petz_defect, tilde_overlap,
};
use modcomm::teststates::{
    classical_state, ghz_state, markov_chain_state, random_dm, random_pure_state, real_gibbs_state,
    MarkovSpec,
};
use modcomm::{Basis, DensityMatrix, PureState, SiteSet};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use proptest::prelude::*;

const EPS: f64 = 1e-12;

fn sites<const K: usize>(s: [usize; K]) -> SiteSet {
    SiteSet::from_sites(s)
}

fn one(i: usize) -> SiteSet {
    SiteSet::from_sites([i])
}

/// Reduced density matrix of the qubits `keep` from a dense qubit operator, by explicit index loops.
fn reduce(rho: &DMatrix<Complex64>, n: usize, keep: &[usize]) -> DMatrix<Complex64> {
    let rest: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let place = |sub: usize, positions: &[usize]| -> usize {
        positions
            .iter()
            .enumerate()
            .map(|(k, &p)| ((sub >> k) & 1) << p)
            .sum()
    };
    let dk = 1 << keep.len();
    let mut out = DMatrix::zeros(dk, dk);
    for i in 0..dk {
        for j in 0..dk {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..1usize << rest.len() {
                acc += rho[(place(i, keep) | place(r, &rest), place(j, keep) | place(r, &rest))];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// `-ln` on eigenvalues above `EPS`, zero elsewhere.
fn neg_log(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = SymmetricEigen::new(m.clone());
    let d = DMatrix::from_fn(m.nrows(), m.nrows(), |i, j| {
        let v = eig.eigenvalues[i];
        if i == j && v > EPS {
            Complex64::new(-v.ln(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// `K ⊗ 1`, with `K` on the qubits `support` of an `n`-qubit register.
fn lift(k: &DMatrix<Complex64>, n: usize, support: &[usize]) -> DMatrix<Complex64> {
    let sub = |x: usize| -> usize {
        support
            .iter()
            .enumerate()
            .map(|(pos, &q)| ((x >> q) & 1) << pos)
            .sum()
    };
    let mask: usize = support.iter().map(|&q| 1 << q).sum();
    DMatrix::from_fn(1 << n, 1 << n, |i, j| {
        if i & !mask == j & !mask {
            k[(sub(i), sub(j))]
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// `i Tr(ρ [K_AB, K_BC])` for qubits `a, b, c` covering a 3-qubit register.
fn dense_j3(rho: &DMatrix<Complex64>) -> Complex64 {
    let k_ab = lift(&neg_log(&reduce(rho, 3, &[0, 1])), 3, &[0, 1]);
    let k_bc = lift(&neg_log(&reduce(rho, 3, &[1, 2])), 3, &[1, 2]);
    let comm = &k_ab * &k_bc - &k_bc * &k_ab;
    Complex64::new(0.0, 1.0) * (rho * comm).trace()
}

fn regions_222() -> (SiteSet, SiteSet, SiteSet) {
    (sites([0, 1]), sites([2, 3]), sites([4, 5]))
}

#[test]
fn pure_and_dm_agree_without_purifier() {
    let (a, b, c) = regions_222();
    for seed in 0..200 {
        let s = random_pure_state(6, Basis::Full, seed).unwrap();
        let jp = modular_commutator_pure(&s, a, b, c).unwrap();
        let rho = DensityMatrix::from_pure(&s).unwrap();
        let jd = modular_commutator_dm(&rho, a, b, c, EPS).unwrap();
        assert!((jp - jd).abs() <= 1e-8, "seed {seed}: {jp} vs {jd}");
    }
}

#[test]
fn pure_and_dm_agree_with_purifier() {
    let (a, b, c) = regions_222();
    let mut largest = 0.0f64;
    for seed in 0..100 {
        let s = random_pure_state(8, Basis::Full, 10_000 + seed).unwrap();
        let t = tilde_overlap(&s, a, b, c, EPS).unwrap();
        let rho = DensityMatrix::from_pure(&s).unwrap();
        let jd = modular_commutator_dm(&rho, a, b, c, EPS).unwrap();
        assert!((t.j - jd).abs() <= 1e-8, "seed {seed}: {} vs {jd}", t.j);
        assert!(t.j.abs() <= t.bound());
        largest = largest.max(jd.abs());
    }
    assert!(largest > 1e-3);
}

#[test]
fn sector_states_agree_with_oracle() {
    let (a, b, c) = (sites([0, 1]), sites([2]), sites([3, 4]));
    for seed in 0..50 {
        let s = random_pure_state(8, Basis::Magnetization(0), seed).unwrap();
        let jp = modular_commutator_pure(&s, a, b, c).unwrap();
        let rho = DensityMatrix::from_pure(&s).unwrap();
        let jd = modular_commutator_dm(&rho, a, b, c, EPS).unwrap();
        assert!((jp - jd).abs() <= 1e-8, "seed {seed}: {jp} vs {jd}");
    }
}

#[test]
fn dm_path_matches_independent_dense_trace() {
    for seed in 0..100 {
        let rho = random_dm(&[2, 2, 2], seed).unwrap();
        let got = modular_commutator_dm_complex(&rho, one(0), one(1), one(2), EPS).unwrap();
        let want = dense_j3(rho.matrix());
        assert!((got - want).norm() <= 1e-10, "seed {seed}: {got} vs {want}");
        assert!(got.im.abs() <= 1e-10);
    }
}

#[test]
fn commutator_is_antisymmetric() {
    for seed in 0..100 {
        let rho = random_dm(&[2, 2, 2, 2], 500 + seed).unwrap();
        let (a, b, c) = (one(0), sites([1, 2]), one(3));
        let j = modular_commutator_dm(&rho, a, b, c, EPS).unwrap();
        let k = modular_commutator_dm(&rho, c, b, a, EPS).unwrap();
        assert!((j + k).abs() <= 1e-10);
        let s = random_pure_state(7, Basis::Full, 900 + seed).unwrap();
        let (a, b, c) = (sites([0, 1]), sites([2, 3]), one(4));
        let jp = modular_commutator_pure(&s, a, b, c).unwrap();
        let kp = modular_commutator_pure(&s, c, b, a).unwrap();
        assert!((jp + kp).abs() <= 1e-10);
    }
}

#[test]
fn empty_regions_give_exact_zero() {
    let s = random_pure_state(6, Basis::Full, 1).unwrap();
    let rho = random_dm(&[2, 2, 2], 1).unwrap();
    let e = SiteSet::EMPTY;
    for (a, b, c) in [(e, one(1), one(2)), (one(0), e, one(2)), (one(0), one(1), e)] {
        assert_eq!(modular_commutator_pure(&s, a, b, c).unwrap(), 0.0);
        assert_eq!(modular_commutator_dm(&rho, a, b, c, EPS).unwrap(), 0.0);
    }
}

#[test]
fn time_reversal_flips_sign() {
    for seed in 0..100 {
        let rho = random_dm(&[2, 2, 2], 2000 + seed).unwrap();
        let j = modular_commutator_dm(&rho, one(0), one(1), one(2), EPS).unwrap();
        let jc = modular_commutator_dm(&rho.conj(), one(0), one(1), one(2), EPS).unwrap();
        assert!((j + jc).abs() <= 1e-10);
        let s = random_pure_state(6, Basis::Full, 3000 + seed).unwrap();
        let (a, b, c) = (one(0), sites([1, 2]), one(3));
        let jp = modular_commutator_pure(&s, a, b, c).unwrap();
        let jpc = modular_commutator_pure(&s.conj(), a, b, c).unwrap();
        assert!((jp + jpc).abs() <= 1e-10);
    }
}

#[test]
fn commutator_is_additive_under_tensor_products() {
    for seed in 0..100 {
        let rho = random_dm(&[2, 2, 2], 4000 + seed).unwrap();
        let lam = random_dm(&[2, 2, 2], 5000 + seed).unwrap();
        let both = rho.tensor(&lam);
        let j1 = modular_commutator_dm(&rho, one(0), one(1), one(2), EPS).unwrap();
        let j2 = modular_commutator_dm(&lam, one(0), one(1), one(2), EPS).unwrap();
        let j = modular_commutator_dm(&both, sites([0, 3]), sites([1, 4]), sites([2, 5]), EPS).unwrap();
        assert!((j - j1 - j2).abs() <= 1e-8, "seed {seed}");
    }
}

#[test]
fn pure_commutator_is_additive() {
    for seed in 0..20 {
        let s = random_pure_state(5, Basis::Full, 6000 + seed).unwrap();
        let t = random_pure_state(5, Basis::Full, 7000 + seed).unwrap();
        let (a, b, c) = (one(0), sites([1, 2]), one(3));
        let j1 = modular_commutator_pure(&s, a, b, c).unwrap();
        let j2 = modular_commutator_pure(&t, a, b, c).unwrap();
        let st = s.tensor(&t).unwrap();
        let shift = |x: SiteSet| SiteSet::from_bits(x.bits() << 5);
        let j = modular_commutator_pure(&st, a | shift(a), b | shift(b), c | shift(c)).unwrap();
        assert!((j - j1 - j2).abs() <= 1e-8);
    }
}

#[test]
fn markov_chains_have_no_commutator() {
    for seed in 0..100u64 {
        let spec = MarkovSpec {
            dim_a: 2 + (seed % 2) as usize,
            dim_b1: 2,
            dim_b2: 2 + (seed % 3 == 0) as usize,
            dim_c: 2,
            seed,
        };
        let rho = markov_chain_state(&spec).unwrap();
        let (a, b, c) = spec.regions();
        assert!(cmi(&rho, a, b, c).unwrap().abs() <= 1e-10, "seed {seed}");
        assert!(petz_defect(&rho, a, b, c, EPS).unwrap() <= 1e-8, "seed {seed}");
        assert!(modular_commutator_dm(&rho, a, b, c, EPS).unwrap().abs() <= 1e-8, "seed {seed}");
        assert!(modular_flow_entropy_derivative(&rho, a, b, c, 1e-3, EPS).unwrap().abs() <= 1e-8);
    }
}

#[test]
fn generic_states_violate_the_petz_identity() {
    for seed in 0..20 {
        let rho = random_dm(&[2, 2, 2, 2], 8000 + seed).unwrap();
        assert!(petz_defect(&rho, one(0), sites([1, 2]), one(3), EPS).unwrap() > 0.01);
    }
}

#[test]
fn real_gibbs_states_have_no_commutator() {
    for seed in 0..100 {
        let beta = 0.2 + (seed % 7) as f64 * 0.4;
        let rho = real_gibbs_state(3, beta, seed).unwrap();
        assert!(modular_commutator_dm(&rho, one(0), one(1), one(2), EPS).unwrap().abs() <= 1e-9);
    }
    let flat = real_gibbs_state(3, 0.0, 4).unwrap();
    assert!(modular_commutator_dm(&flat, one(0), one(1), one(2), EPS).unwrap().abs() <= 1e-12);
}

#[test]
fn real_pure_states_have_no_commutator() {
    let g = ghz_state(3).unwrap();
    assert_eq!(modular_commutator_pure(&g, one(0), one(1), one(2)).unwrap(), 0.0);
    let s = random_pure_state(6, Basis::Full, 77).unwrap();
    let re = PureState::from_fn(6, Basis::Full, |c| Complex64::new(s.amplitude(c).re, 0.0)).unwrap();
    assert!(modular_commutator_pure(&re, one(0), sites([1, 2]), one(3)).unwrap().abs() <= 1e-10);
}

#[test]
fn classical_states_have_exactly_zero_commutator() {
    let uniform = classical_state(&[2, 2, 2], &[0.125; 8]).unwrap();
    assert_eq!(modular_commutator_dm(&uniform, one(0), one(1), one(2), EPS).unwrap(), 0.0);
    let skewed = classical_state(&[2, 2, 2], &[0.3, 0.1, 0.05, 0.05, 0.2, 0.1, 0.1, 0.1]).unwrap();
    assert_eq!(modular_commutator_dm(&skewed, one(0), one(1), one(2), EPS).unwrap(), 0.0);
    assert_eq!(modular_flow_entropy_derivative(&skewed, one(0), one(1), one(2), 1e-3, EPS).unwrap(), 0.0);
    for config in [0b000000u32, 0b101101, 0b010011] {
        let s = PureState::basis_state(6, config).unwrap();
        assert_eq!(modular_commutator_pure(&s, one(0), sites([1, 2]), one(3)).unwrap(), 0.0);
    }
}

#[test]
fn product_across_a_cut_has_no_commutator() {
    for seed in 0..20 {
        let ra = random_dm(&[2], seed).unwrap();
        let rbc = random_dm(&[2, 2], 100 + seed).unwrap();
        let rho = ra.tensor(&rbc);
        assert!(modular_commutator_dm(&rho, one(0), one(1), one(2), EPS).unwrap().abs() <= 1e-10);
    }
}

#[test]
fn flow_derivative_converges_quadratically() {
    for seed in 0..10 {
        let rho = random_dm(&[2, 2, 2], 9000 + seed).unwrap();
        let (a, b, c) = (one(0), one(1), one(2));
        let j = modular_commutator_dm(&rho, a, b, c, EPS).unwrap();
        let d = |h: f64| modular_flow_entropy_derivative(&rho, a, b, c, h, EPS).unwrap();
        for h in [1e-2, 1e-3] {
            let (d1, d2, d4) = (d(h), d(h / 2.0), d(h / 4.0));
            let ratio = (d1 - d2) / (d2 - d4);
            assert!((ratio - 4.0).abs() <= 0.5, "seed {seed} h {h}: ratio {ratio}");
        }
        let (e2, e3) = ((d(1e-2) - j).abs(), (d(1e-3) - j).abs());
        let order = (e2 / e3).log10();
        assert!((order - 2.0).abs() < 0.2, "seed {seed}: order {order}");
        assert!(e3 <= 1e-5);
    }
}

#[test]
fn conditional_mutual_information_examples() {
    let g = ghz_state(3).unwrap();
    assert!((cmi(&g, one(0), one(1), one(2)).unwrap() - LN_2).abs() <= 1e-12);
    let prod = random_dm(&[2], 1)
        .unwrap()
        .tensor(&random_dm(&[2], 2).unwrap())
        .tensor(&random_dm(&[2], 3).unwrap());
    assert!(cmi(&prod, one(0), one(1), one(2)).unwrap().abs() <= 1e-12);
    assert!(cmi(&g, sites([0, 1]), one(1), one(2)).is_err());
}

#[test]
fn dm_oracle_rejects_invalid_input() {
    let rho = random_dm(&[2, 2, 2], 0).unwrap();
    assert!(modular_commutator_dm(&rho, sites([0, 1]), one(1), one(2), EPS).is_err());
    assert!(modular_flow_entropy_derivative(&rho, one(0), one(1), one(2), 0.0, EPS).is_err());
    let big = random_pure_state(10, Basis::Full, 0).unwrap();
    let err = modular_flow_entropy_derivative(
        &DensityMatrix::from_pure(&big).unwrap(),
        sites([0, 1, 2]),
        sites([3, 4, 5]),
        sites([6, 7, 8, 9]),
        1e-3,
        EPS,
    )
    .unwrap_err();
    assert!(err.is_resource());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn strong_subadditivity(seed in any::<u64>()) {
        let rho = random_dm(&[2, 2, 2, 2], seed).unwrap();
        prop_assert!(cmi(&rho, one(0), sites([1, 2]), one(3)).unwrap() >= -1e-9);
    }

    #[test]
    fn pure_commutator_is_bounded_and_antisymmetric(seed in any::<u64>(), split in 1usize..4) {
        let s = random_pure_state(7, Basis::Full, seed).unwrap();
        let a = SiteSet::from_sites(0..split);
        let b = SiteSet::from_sites(split..5);
        let c = one(5);
        let t = tilde_overlap(&s, a, b, c, EPS).unwrap();
        prop_assert!(t.j.abs() <= t.bound() + 1e-12);
        let r = tilde_overlap(&s, c, b, a, EPS).unwrap();
        prop_assert!((t.j + r.j).abs() <= 1e-10);
    }
}
