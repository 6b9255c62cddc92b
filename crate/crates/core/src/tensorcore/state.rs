use num_complex::Complex64;

use super::{masks_with_popcount, SiteSet, MAX_SITES};
use crate::error::{Error, Result};

/// Which computational-basis configurations a state is stored over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    /// All `2^n` configurations.
    Full,
    /// Configurations of fixed total magnetization `sum_i s_i`.
    Magnetization(i32),
}

impl Basis {
    /// Number of up spins in the sector, if the basis is a sector.
    pub fn up_count(self, n_sites: usize) -> Option<usize> {
        match self {
            Basis::Full => None,
            Basis::Magnetization(m) => {
                let twice = n_sites as i64 + m as i64;
                if twice < 0 || twice % 2 != 0 || twice as usize > 2 * n_sites {
                    None
                } else {
                    Some(twice as usize / 2)
                }
            }
        }
    }

    pub fn configurations(self, n_sites: usize) -> Result<Vec<u32>> {
        if n_sites == 0 || n_sites > MAX_SITES {
            return Err(Error::Validation(format!(
                "site count {n_sites} outside 1..={MAX_SITES}"
            )));
        }
        match self {
            Basis::Full => Ok((0..(1u32 << n_sites)).collect()),
            Basis::Magnetization(m) => {
                let k = self.up_count(n_sites).ok_or_else(|| {
                    Error::Validation(format!("magnetization {m} impossible on {n_sites} sites"))
                })?;
                Ok(masks_with_popcount(n_sites, k))
            }
        }
    }
}

/// A normalized pure state of `n` qubits.
#[derive(Clone, Debug)]
pub struct PureState {
    n_sites: usize,
    basis: Basis,
    configs: Vec<u32>,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Build a state from amplitudes listed in canonical configuration order,
    /// normalizing them.
    pub fn new(n_sites: usize, basis: Basis, amplitudes: Vec<Complex64>) -> Result<Self> {
        let configs = basis.configurations(n_sites)?;
        if configs.len() != amplitudes.len() {
            return Err(Error::Validation(format!(
                "expected {} amplitudes, got {}",
                configs.len(),
                amplitudes.len()
            )));
        }
        let mut state = PureState {
            n_sites,
            basis,
            configs,
            amplitudes,
        };
        state.normalize()?;
        Ok(state)
    }

    /// Build a state from a function of the configuration mask.
    pub fn from_fn(
        n_sites: usize,
        basis: Basis,
        mut f: impl FnMut(u32) -> Complex64,
    ) -> Result<Self> {
        let configs = basis.configurations(n_sites)?;
        let amplitudes = configs.iter().map(|&c| f(c)).collect();
        let mut state = PureState {
            n_sites,
            basis,
            configs,
            amplitudes,
        };
        state.normalize()?;
        Ok(state)
    }

    /// A single computational-basis configuration.
    pub fn basis_state(n_sites: usize, config: u32) -> Result<Self> {
        let m = 2 * config.count_ones() as i32 - n_sites as i32;
        Self::from_fn(n_sites, Basis::Magnetization(m), |c| {
            if c == config {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    fn normalize(&mut self) -> Result<()> {
        let norm_sq: f64 = self.amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !(norm_sq.is_finite() && norm_sq > 0.0) {
            return Err(Error::Normalization(format!("squared norm {norm_sq}")));
        }
        let inv = 1.0 / norm_sq.sqrt();
        for a in &mut self.amplitudes {
            *a *= inv;
        }
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn sites(&self) -> SiteSet {
        SiteSet::full(self.n_sites)
    }

    pub fn configs(&self) -> &[u32] {
        &self.configs
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    /// Amplitude of an arbitrary configuration (zero outside the stored basis).
    pub fn amplitude(&self, config: u32) -> Complex64 {
        match self.configs.binary_search(&config) {
            Ok(i) => self.amplitudes[i],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// The state over all `2^n` configurations, indexed by mask.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); 1usize << self.n_sites];
        for (&c, &a) in self.configs.iter().zip(&self.amplitudes) {
            out[c as usize] = a;
        }
        out
    }

    /// Entrywise complex conjugate (bosonic time reversal in this basis).
    pub fn conj(&self) -> PureState {
        PureState {
            amplitudes: self.amplitudes.iter().map(|a| a.conj()).collect(),
            ..self.clone()
        }
    }

    /// `self ⊗ other`, with the sites of `other` placed after those of `self`.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let n = self.n_sites + other.n_sites;
        let basis = match (self.basis, other.basis) {
            (Basis::Magnetization(a), Basis::Magnetization(b)) => Basis::Magnetization(a + b),
            _ => Basis::Full,
        };
        let low = SiteSet::full(self.n_sites).bits();
        let shift = self.n_sites;
        PureState::from_fn(n, basis, |c| {
            self.amplitude(c & low) * other.amplitude(c >> shift)
        })
    }

    /// Inner product `<self|other>`; both states must share a basis.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        assert_eq!(self.configs, other.configs, "states stored over different bases");
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_enumeration_is_increasing_and_complete() {
        let configs = Basis::Magnetization(0).configurations(6).unwrap();
        assert_eq!(configs.len(), 20);
        assert!(configs.windows(2).all(|w| w[0] < w[1]));
        assert!(configs.iter().all(|c| c.count_ones() == 3));
    }

    #[test]
    fn impossible_magnetization_is_rejected() {
        assert!(Basis::Magnetization(1).configurations(4).is_err());
        assert!(Basis::Magnetization(6).configurations(4).is_err());
    }

    #[test]
    fn normalization_contract() {
        let s = PureState::from_fn(4, Basis::Magnetization(0), |c| {
            Complex64::new(c as f64, 1.0)
        })
        .unwrap();
        let norm: f64 = s.amplitudes().iter().map(|a| a.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(PureState::from_fn(2, Basis::Full, |_| Complex64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn tensor_places_second_factor_on_high_sites() {
        let a = PureState::basis_state(2, 0b01).unwrap();
        let b = PureState::basis_state(2, 0b10).unwrap();
        let ab = a.tensor(&b).unwrap();
        assert_eq!(ab.basis(), Basis::Magnetization(0));
        assert!((ab.amplitude(0b1001).re - 1.0).abs() < 1e-15);
    }
}
