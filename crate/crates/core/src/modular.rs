//! Modular commutator `J(A,B,C) = i Tr(ρ [K_AB, K_BC])`, entropy combinations
//! and the per-sample record of the sphere experiment.
//!
//! For a pure state `J = -2 Im <ψ̃_AB|ψ̃_BC>` with `ψ̃_X = K_X |ψ>`. The
//! density-matrix path evaluates the trace directly and serves as an oracle.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laughlin::SphereLattice;
use crate::partition::{tetra_partition, RegionMasks, Rotation};
use crate::tensorcore::{
    check_dim, embed_operator, entanglement_entropy, entropy, hermitian_eigen, schmidt,
    tilde_weight, DensityMatrix, PureState, SiteSet, DEFAULT_CUTOFF, SMALL_SYSTEM_DIM,
};

/// Largest imaginary part tolerated in the density-matrix trace.
pub const REALNESS_TOL: f64 = 1e-10;

/// Largest `ABC` dimension accepted by the modular-flow derivative.
pub const FLOW_MAX_DIM: usize = 1 << 9;

fn check_regions(a: SiteSet, b: SiteSet, c: SiteSet, all: SiteSet) -> Result<()> {
    if !(a.is_disjoint(b) && b.is_disjoint(c) && a.is_disjoint(c)) {
        return Err(Error::Validation(format!(
            "regions overlap: A={a:?} B={b:?} C={c:?}"
        )));
    }
    let abc = a | b | c;
    if !abc.is_subset(all) {
        return Err(Error::Validation(format!(
            "regions {abc:?} exceed the available sites {all:?}"
        )));
    }
    Ok(())
}

/// Result of the pure-state evaluation, with the norms that bound it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TildeOverlap {
    pub j: f64,
    pub norm_ab: f64,
    pub norm_bc: f64,
}

impl TildeOverlap {
    /// `2 ‖ψ̃_AB‖ ‖ψ̃_BC‖`, an upper bound on `|J|`.
    pub fn bound(&self) -> f64 {
        2.0 * self.norm_ab * self.norm_bc
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn overlap(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// `J(A,B,C)` of a pure state; sites outside `A ∪ B ∪ C` purify.
pub fn modular_commutator_pure(state: &PureState, a: SiteSet, b: SiteSet, c: SiteSet) -> Result<f64> {
    Ok(tilde_overlap(state, a, b, c, DEFAULT_CUTOFF)?.j)
}

/// As [`modular_commutator_pure`], with the relative Schmidt cutoff exposed.
pub fn tilde_overlap(
    state: &PureState,
    a: SiteSet,
    b: SiteSet,
    c: SiteSet,
    cutoff: f64,
) -> Result<TildeOverlap> {
    check_regions(a, b, c, state.sites())?;
    if a.is_empty() || b.is_empty() || c.is_empty() {
        return Ok(TildeOverlap {
            j: 0.0,
            norm_ab: 0.0,
            norm_bc: 0.0,
        });
    }
    let ab = schmidt(state, a | b, cutoff)?.reconstruct_with(tilde_weight);
    let bc = schmidt(state, b | c, cutoff)?.reconstruct_with(tilde_weight);
    Ok(TildeOverlap {
        j: -2.0 * overlap(&ab, &bc).im,
        norm_ab: norm(&ab),
        norm_bc: norm(&bc),
    })
}

/// Reduce `rho` to `A ∪ B ∪ C` and return it with the regions re-indexed.
fn restrict(
    rho: &DensityMatrix,
    a: SiteSet,
    b: SiteSet,
    c: SiteSet,
) -> Result<(DensityMatrix, SiteSet, SiteSet, SiteSet)> {
    let abc = a | b | c;
    let r = rho.partial_trace(abc)?;
    Ok((r, a.relative_to(abc), b.relative_to(abc), c.relative_to(abc)))
}

/// `K_X ⊗ 1` on the subsystems of `rho`; zero for an empty region.
fn embedded_modular(rho: &DensityMatrix, x: SiteSet, cutoff: f64) -> Result<DMatrix<Complex64>> {
    if x.is_empty() {
        return Ok(DMatrix::zeros(rho.dim(), rho.dim()));
    }
    let k = rho.partial_trace(x)?.modular_hamiltonian(cutoff)?;
    Ok(embed_operator(&k, x, rho.subsystems(), rho.dims()))
}

/// `Tr(ρ M)` without forming the product.
fn trace_product(rho: &DMatrix<Complex64>, m: &DMatrix<Complex64>) -> Complex64 {
    rho.component_mul(&m.transpose()).sum()
}

/// `i Tr(ρ [K_AB, K_BC])` including its (rounding-level) imaginary part.
pub fn modular_commutator_dm_complex(
    rho: &DensityMatrix,
    a: SiteSet,
    b: SiteSet,
    c: SiteSet,
    cutoff: f64,
) -> Result<Complex64> {
    check_regions(a, b, c, rho.subsystems())?;
    check_dim("density matrix", rho.dim(), SMALL_SYSTEM_DIM)?;
    if a.is_empty() || b.is_empty() || c.is_empty() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let (r, a, b, c) = restrict(rho, a, b, c)?;
    let k_ab = embedded_modular(&r, a | b, cutoff)?;
    let k_bc = embedded_modular(&r, b | c, cutoff)?;
    let prod = &k_ab * &k_bc;
    let comm = &prod - prod.adjoint();
    Ok(Complex64::new(0.0, 1.0) * trace_product(r.matrix(), &comm))
}

/// `J(A,B,C)` of a density matrix over subsystems; `A ∪ B ∪ C` may be a proper subset.
pub fn modular_commutator_dm(
    rho: &DensityMatrix,
    a: SiteSet,
    b: SiteSet,
    c: SiteSet,
    cutoff: f64,
) -> Result<f64> {
    let z = modular_commutator_dm_complex(rho, a, b, c, cutoff)?;
    if z.im.abs() > REALNESS_TOL {
        return Err(Error::Invariant(format!(
            "modular commutator has imaginary part {:.3e}",
            z.im
        )));
    }
    Ok(z.re)
}

/// Frobenius norm of `K_AB + K_BC - K_B - K_ABC`, zero for a quantum Markov chain.
pub fn petz_defect(rho: &DensityMatrix, a: SiteSet, b: SiteSet, c: SiteSet, cutoff: f64) -> Result<f64> {
    check_regions(a, b, c, rho.subsystems())?;
    if (a | b | c).is_empty() {
        return Ok(0.0);
    }
    let (r, a, b, c) = restrict(rho, a, b, c)?;
    let total = embedded_modular(&r, a | b, cutoff)? + embedded_modular(&r, b | c, cutoff)?
        - embedded_modular(&r, b, cutoff)?
        - embedded_modular(&r, a | b | c, cutoff)?;
    Ok(total.norm())
}

/// Anything that can report the von Neumann entropy (nats) of a region.
pub trait EntropySource {
    fn sites(&self) -> SiteSet;
    fn region_entropy(&self, region: SiteSet) -> Result<f64>;
}

impl EntropySource for PureState {
    fn sites(&self) -> SiteSet {
        PureState::sites(self)
    }

    fn region_entropy(&self, region: SiteSet) -> Result<f64> {
        if !region.is_subset(PureState::sites(self)) {
            return Err(Error::Validation(format!("region {region:?} outside the state")));
        }
        if region.is_empty() || region == PureState::sites(self) {
            return Ok(0.0);
        }
        Ok(entropy(self, region)?.max(0.0))
    }
}

impl EntropySource for DensityMatrix {
    fn sites(&self) -> SiteSet {
        self.subsystems()
    }

    fn region_entropy(&self, region: SiteSet) -> Result<f64> {
        if region.is_empty() {
            return Ok(0.0);
        }
        Ok(self.partial_trace(region)?.entropy().max(0.0))
    }
}

/// `I(A:C|B) = S_AB + S_BC - S_B - S_ABC`.
pub fn cmi<S: EntropySource + ?Sized>(src: &S, a: SiteSet, b: SiteSet, c: SiteSet) -> Result<f64> {
    check_regions(a, b, c, src.sites())?;
    Ok(src.region_entropy(a | b)? + src.region_entropy(b | c)?
        - src.region_entropy(b)?
        - src.region_entropy(a | b | c)?)
}

/// The seven region entropies entering `γ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RegionEntropies {
    pub s_a: f64,
    pub s_b: f64,
    pub s_c: f64,
    pub s_ab: f64,
    pub s_bc: f64,
    pub s_ca: f64,
    pub s_abc: f64,
}

impl RegionEntropies {
    /// `S_AB + S_BC + S_CA - S_A - S_B - S_C - S_ABC`.
    pub fn gamma(&self) -> f64 {
        self.s_ab + self.s_bc + self.s_ca - self.s_a - self.s_b - self.s_c - self.s_abc
    }
}

pub fn region_entropies<S: EntropySource + ?Sized>(src: &S, m: &RegionMasks) -> Result<RegionEntropies> {
    check_regions(m.a, m.b, m.c, src.sites())?;
    Ok(RegionEntropies {
        s_a: src.region_entropy(m.a)?,
        s_b: src.region_entropy(m.b)?,
        s_c: src.region_entropy(m.c)?,
        s_ab: src.region_entropy(m.ab())?,
        s_bc: src.region_entropy(m.bc())?,
        s_ca: src.region_entropy(m.ca())?,
        s_abc: src.region_entropy(m.abc())?,
    })
}

/// Topological entanglement entropy `γ` of a pure state for a four-region assignment.
pub fn tee(state: &PureState, masks: &RegionMasks) -> Result<f64> {
    Ok(region_entropies(state, masks)?.gamma())
}

/// `e^{iKs} ρ e^{-iKs}` for Hermitian `K` given by its eigen-decomposition.
fn flow(
    rho: &DMatrix<Complex64>,
    vals: &[f64],
    vecs: &DMatrix<Complex64>,
    s: f64,
) -> DMatrix<Complex64> {
    let mut scaled = vecs.clone();
    for (k, &v) in vals.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, v * s);
        for z in scaled.column_mut(k).iter_mut() {
            *z *= phase;
        }
    }
    let u = scaled * vecs.adjoint();
    &u * rho * u.adjoint()
}

/// Central difference of `S(ρ_AB(s))` at `s = 0` under `ρ(s) = e^{iK_BC s} ρ e^{-iK_BC s}`.
///
/// With this orientation the derivative equals `+J(A,B,C)`.
pub fn modular_flow_entropy_derivative(
    rho: &DensityMatrix,
    a: SiteSet,
    b: SiteSet,
    c: SiteSet,
    h: f64,
    cutoff: f64,
) -> Result<f64> {
    check_regions(a, b, c, rho.subsystems())?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Validation(format!("step {h} must be positive")));
    }
    if (a | b).is_empty() || (b | c).is_empty() {
        return Ok(0.0);
    }
    let (r, a, b, c) = restrict(rho, a, b, c)?;
    check_dim("modular flow", r.dim(), FLOW_MAX_DIM)?;
    let (vals, vecs) = hermitian_eigen(&embedded_modular(&r, b | c, cutoff)?);
    let entropy_at = |s: f64| -> Result<f64> {
        let moved = DensityMatrix::from_parts(r.dims().to_vec(), flow(r.matrix(), &vals, &vecs, s));
        Ok(moved.partial_trace(a | b)?.entropy())
    };
    Ok((entropy_at(h)? - entropy_at(-h)?) / (2.0 * h))
}

/// Which sample of which run produced a [`ModularSample`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleMeta {
    pub sample_index: u64,
    pub seed: u64,
}

/// One random partition of the sphere lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModularSample {
    pub n: usize,
    pub sample_index: u64,
    pub seed: u64,
    pub rotation: [f64; 4],
    pub j: f64,
    pub gamma: f64,
    pub entropies: RegionEntropies,
    pub region_sizes: [usize; 4],
}

impl ModularSample {
    pub const CSV_HEADER: &'static str =
        "n,sample_index,seed,J,gamma,S_A,S_B,S_C,S_AB,S_BC,S_CA,S_ABC,size_A,size_B,size_C,size_D";

    /// One CSV line (no newline); floats use the shortest round-trip form.
    pub fn csv_row(&self) -> String {
        let e = &self.entropies;
        let [sa, sb, sc, sd] = self.region_sizes;
        format!(
            "{},{},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{},{},{},{}",
            self.n,
            self.sample_index,
            self.seed,
            self.j,
            self.gamma,
            e.s_a,
            e.s_b,
            e.s_c,
            e.s_ab,
            e.s_bc,
            e.s_ca,
            e.s_abc,
            sa,
            sb,
            sc,
            sd
        )
    }
}

/// `J` and the seven entropies for the regions of `masks`.
pub fn evaluate_regions(state: &PureState, masks: &RegionMasks) -> Result<(f64, RegionEntropies)> {
    let (a, b, c) = (masks.a, masks.b, masks.c);
    check_regions(a, b, c, state.sites())?;
    if a.is_empty() || b.is_empty() || c.is_empty() {
        return Ok((0.0, region_entropies(state, masks)?));
    }
    let ab = schmidt(state, a | b, DEFAULT_CUTOFF)?;
    let bc = schmidt(state, b | c, DEFAULT_CUTOFF)?;
    let j = -2.0 * overlap(&ab.reconstruct_with(tilde_weight), &bc.reconstruct_with(tilde_weight)).im;
    let entropies = RegionEntropies {
        s_a: state.region_entropy(a)?,
        s_b: state.region_entropy(b)?,
        s_c: state.region_entropy(c)?,
        s_ab: entanglement_entropy(&ab).max(0.0),
        s_bc: entanglement_entropy(&bc).max(0.0),
        s_ca: state.region_entropy(masks.ca())?,
        s_abc: state.region_entropy(masks.abc())?,
    };
    Ok((j, entropies))
}

/// Partition `lattice` with `rotation` and measure `J` and `γ` on `state`.
pub fn sample(
    state: &PureState,
    lattice: &SphereLattice,
    rotation: &Rotation,
    meta: SampleMeta,
) -> Result<ModularSample> {
    if lattice.len() != state.n_sites() {
        return Err(Error::Validation(format!(
            "lattice has {} sites, state has {}",
            lattice.len(),
            state.n_sites()
        )));
    }
    let assignment = tetra_partition(lattice, rotation);
    let masks = assignment.masks();
    let (j, entropies) = evaluate_regions(state, &masks)?;
    Ok(ModularSample {
        n: state.n_sites(),
        sample_index: meta.sample_index,
        seed: meta.seed,
        rotation: rotation.quaternion(),
        j,
        gamma: entropies.gamma(),
        entropies,
        region_sizes: assignment.sizes(),
    })
}

/// Effect of a small extra rotation on the partition and on `J`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeformationRecord {
    pub axis: [f64; 3],
    pub angle: f64,
    pub moved_sites: usize,
    pub j: f64,
    pub delta_j: f64,
}

/// Re-partition under `axis`/`angle` perturbations of `rotation` and report the change in `J`.
///
/// `J` is only approximately invariant at finite size; this is a diagnostic.
pub fn deformation_report(
    state: &PureState,
    lattice: &SphereLattice,
    rotation: &Rotation,
    axes: &[[f64; 3]],
    angle: f64,
) -> Result<Vec<DeformationRecord>> {
    let base = tetra_partition(lattice, rotation);
    let (j0, _) = evaluate_regions(state, &base.masks())?;
    axes.iter()
        .map(|&axis| {
            let turned = Rotation::from_axis_angle(axis, angle)?.compose(rotation);
            let assignment = tetra_partition(lattice, &turned);
            let moved_sites = assignment
                .labels()
                .iter()
                .zip(base.labels())
                .filter(|(x, y)| x != y)
                .count();
            let (j, _) = evaluate_regions(state, &assignment.masks())?;
            Ok(DeformationRecord {
                axis,
                angle,
                moved_sites,
                j,
                delta_j: j - j0,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::teststates::{ghz_state, random_dm, random_pure_state};
    use crate::tensorcore::Basis;
    use std::f64::consts::LN_2;

    fn one(i: usize) -> SiteSet {
        SiteSet::from_sites([i])
    }

    #[test]
    fn ghz_has_no_commutator_but_unit_cmi() {
        let g = ghz_state(3).unwrap();
        assert!(modular_commutator_pure(&g, one(0), one(1), one(2)).unwrap().abs() < 1e-14);
        assert!((cmi(&g, one(0), one(1), one(2)).unwrap() - LN_2).abs() < 1e-12);
    }

    #[test]
    fn overlapping_regions_are_rejected() {
        let s = random_pure_state(4, Basis::Full, 1).unwrap();
        let ab = SiteSet::from_sites([0, 1]);
        assert!(matches!(
            modular_commutator_pure(&s, ab, one(1), one(2)),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn empty_region_is_exactly_zero() {
        let s = random_pure_state(4, Basis::Full, 2).unwrap();
        assert_eq!(modular_commutator_pure(&s, SiteSet::EMPTY, one(1), one(2)).unwrap(), 0.0);
        let rho = random_dm(&[2, 2, 2], 3).unwrap();
        assert_eq!(modular_commutator_dm(&rho, one(0), SiteSet::EMPTY, one(2), 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn pure_and_dm_agree_on_random_state() {
        // two purifying sites; with A ∪ B ∪ C covering a pure state J vanishes
        let s = random_pure_state(8, Basis::Full, 5).unwrap();
        let (a, b, c) = (
            SiteSet::from_sites([0, 1]),
            SiteSet::from_sites([2, 3]),
            SiteSet::from_sites([4, 5]),
        );
        let jp = modular_commutator_pure(&s, a, b, c).unwrap();
        let rho = DensityMatrix::from_pure(&s).unwrap();
        let jd = modular_commutator_dm(&rho, a, b, c, 1e-12).unwrap();
        assert!((jp - jd).abs() < 1e-8, "{jp} vs {jd}");
        assert!(jp.abs() > 1e-6);
    }

    #[test]
    fn flow_derivative_tracks_commutator() {
        let rho = random_dm(&[2, 2, 2], 9).unwrap();
        let j = modular_commutator_dm(&rho, one(0), one(1), one(2), 1e-12).unwrap();
        let d = modular_flow_entropy_derivative(&rho, one(0), one(1), one(2), 1e-3, 1e-12).unwrap();
        assert!((d - j).abs() < 1e-5, "{d} vs {j}");
    }

    #[test]
    fn csv_row_has_sixteen_columns() {
        let s = ModularSample {
            n: 4,
            sample_index: 0,
            seed: 1,
            rotation: [1.0, 0.0, 0.0, 0.0],
            j: 0.5,
            gamma: 0.1,
            entropies: RegionEntropies::default(),
            region_sizes: [1, 1, 1, 1],
        };
        assert_eq!(s.csv_row().split(',').count(), 16);
        assert_eq!(ModularSample::CSV_HEADER.split(',').count(), 16);
        assert!(s.csv_row().starts_with("4,0,1,0.5,0.1,0.0,"));
    }
}
