//! Small structured states that satisfy exact structural identities.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tensorcore::{
    check_dim, hermitian_eigen, Basis, DensityMatrix, PureState, SiteSet, SMALL_SYSTEM_DIM,
};

/// Deterministic generator for a test-state seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn complex_normal<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// Haar-random pure state over the given basis.
pub fn random_pure_state(n_sites: usize, basis: Basis, seed: u64) -> Result<PureState> {
    let mut rng = seeded_rng(seed);
    PureState::from_fn(n_sites, basis, |_| complex_normal(&mut rng))
}

/// Full-rank density matrix `G G† / Tr(G G†)` from a square complex Ginibre matrix.
pub fn random_dm(dims: &[usize], seed: u64) -> Result<DensityMatrix> {
    let d: usize = dims.iter().product();
    check_dim("random density matrix", d, SMALL_SYSTEM_DIM)?;
    let mut rng = seeded_rng(seed);
    let g = DMatrix::from_fn(d, d, |_, _| complex_normal(&mut rng));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(dims.to_vec(), m / Complex64::new(tr, 0.0))
}

/// Diagonal (classical) state with the given probabilities.
pub fn classical_state(dims: &[usize], probabilities: &[f64]) -> Result<DensityMatrix> {
    let d: usize = dims.iter().product();
    if probabilities.len() != d {
        return Err(Error::Validation(format!(
            "{} probabilities for dimension {d}",
            probabilities.len()
        )));
    }
    if probabilities.iter().any(|&p| p.is_nan() || p < 0.0 || !p.is_finite()) {
        return Err(Error::Validation("probabilities must be finite and nonnegative".into()));
    }
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Validation(format!("probabilities sum to {total}")));
    }
    let m = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            Complex64::new(probabilities[i], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    DensityMatrix::new(dims.to_vec(), m)
}

/// `(|0...0> + |1...1>)/√2`.
pub fn ghz_state(n_sites: usize) -> Result<PureState> {
    let all = SiteSet::full(n_sites).bits();
    PureState::from_fn(n_sites, Basis::Full, |c| {
        if c == 0 || c == all {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Dimensions of a quantum Markov chain `A - (B1 B2) - C`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MarkovSpec {
    pub dim_a: usize,
    pub dim_b1: usize,
    pub dim_b2: usize,
    pub dim_c: usize,
    pub seed: u64,
}

impl MarkovSpec {
    pub fn dims(&self) -> Vec<usize> {
        vec![self.dim_a, self.dim_b1, self.dim_b2, self.dim_c]
    }

    /// Subsystem sets `(A, B, C)` of the state built by [`markov_chain_state`].
    pub fn regions(&self) -> (SiteSet, SiteSet, SiteSet) {
        (
            SiteSet::from_sites([0]),
            SiteSet::from_sites([1, 2]),
            SiteSet::from_sites([3]),
        )
    }
}

/// `ρ_{A B1} ⊗ ρ_{B2 C}` on subsystems `[A, B1, B2, C]`; `I(A:C|B) = 0` exactly.
pub fn markov_chain_state(spec: &MarkovSpec) -> Result<DensityMatrix> {
    let dims = spec.dims();
    if dims.contains(&0) {
        return Err(Error::Validation(format!("Markov dims {dims:?} must be >= 1")));
    }
    check_dim("Markov chain state", dims.iter().product(), SMALL_SYSTEM_DIM)?;
    let left = random_dm(&[spec.dim_a, spec.dim_b1], spec.seed)?;
    let right = random_dm(&[spec.dim_b2, spec.dim_c], spec.seed ^ 0x9e37_79b9_7f4a_7c15)?;
    Ok(left.tensor(&right))
}

/// Gibbs state `e^{-βH}/Z` of a random real symmetric `H` on `n_sites` qubits.
///
/// The state has real entries in the product basis.
pub fn real_gibbs_state(n_sites: usize, beta: f64, seed: u64) -> Result<DensityMatrix> {
    if n_sites == 0 || n_sites > 4 {
        return Err(Error::Validation(format!("Gibbs states need 1..=4 sites, got {n_sites}")));
    }
    let d = 1usize << n_sites;
    let mut rng = seeded_rng(seed);
    let mut h = DMatrix::<Complex64>::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let x: f64 = rng.sample(StandardNormal);
            h[(i, j)] = Complex64::new(x, 0.0);
            h[(j, i)] = Complex64::new(x, 0.0);
        }
    }
    let (energies, vecs) = hermitian_eigen(&h);
    let ground = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = energies.iter().map(|&e| (-beta * (e - ground)).exp()).collect();
    let z: f64 = weights.iter().sum();
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::Normalization(format!("partition function {z} at beta {beta}")));
    }
    let mut scaled = vecs.clone();
    for (k, &w) in weights.iter().enumerate() {
        scaled.column_mut(k).scale_mut(w / z);
    }
    // The eigenvectors of a real symmetric matrix may carry complex phases;
    // these cancel in V diag V†, leaving rounding-level imaginary parts.
    let rho = (scaled * vecs.adjoint()).map(|z| Complex64::new(z.re, 0.0));
    DensityMatrix::new(vec![2; n_sites], rho)
}
