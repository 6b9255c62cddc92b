use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::{extract_bits, PureState, SiteSet};
use crate::error::{Error, Result};

/// Default ceiling on the Hilbert-space dimension handled by dense density matrices.
pub const SMALL_SYSTEM_DIM: usize = 1 << 12;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

/// A density matrix over a tensor product of subsystems.
///
/// Basis index `i = sum_k digit_k * stride_k` with subsystem 0 least
/// significant, so for qubits the index equals the configuration mask.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validate and wrap a matrix: Hermitian, unit trace and positive semidefinite.
    pub fn new(dims: Vec<usize>, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dm = Self::from_parts_checked_shape(dims, matrix)?;
        let herm = hermitian_defect(&dm.matrix);
        if herm > HERMITIAN_TOL {
            return Err(Error::Validation(format!(
                "matrix is not Hermitian (defect {herm:.3e})"
            )));
        }
        let tr = dm.matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::Validation(format!("trace {tr} differs from 1")));
        }
        let dm = dm.symmetrized();
        let min_eig = dm.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOL {
            return Err(Error::Validation(format!(
                "matrix is not positive semidefinite (eigenvalue {min_eig:.3e})"
            )));
        }
        Ok(dm)
    }

    fn from_parts_checked_shape(dims: Vec<usize>, matrix: DMatrix<Complex64>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::Validation(format!("invalid subsystem dims {dims:?}")));
        }
        let total: usize = dims.iter().product();
        if matrix.nrows() != total || matrix.ncols() != total {
            return Err(Error::Validation(format!(
                "matrix is {}x{}, dims {dims:?} need {total}x{total}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(DensityMatrix { dims, matrix })
    }

    /// Wrap a matrix known to be a valid state (e.g. the output of a partial trace).
    pub(crate) fn from_parts(dims: Vec<usize>, matrix: DMatrix<Complex64>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), matrix.nrows());
        DensityMatrix { dims, matrix }.symmetrized()
    }

    fn symmetrized(mut self) -> Self {
        let adj = self.matrix.adjoint();
        self.matrix = (&self.matrix + adj) * Complex64::new(0.5, 0.0);
        self
    }

    /// `|ψ><ψ|` over `n` qubits.
    pub fn from_pure(state: &PureState) -> Result<Self> {
        let dim = 1usize << state.n_sites();
        check_dim("pure-state density matrix", dim, SMALL_SYSTEM_DIM)?;
        let v = nalgebra::DVector::from_vec(state.to_dense());
        let m = &v * v.adjoint();
        Ok(Self::from_parts(vec![2; state.n_sites()], m))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_subsystems(&self) -> usize {
        self.dims.len()
    }

    pub fn subsystems(&self) -> SiteSet {
        SiteSet::full(self.dims.len())
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect()
    }

    /// Von Neumann entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.eigenvalues()
            .into_iter()
            .filter(|&p| p > 0.0)
            .map(|p| -p * p.ln())
            .sum()
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> DensityMatrix {
        DensityMatrix {
            dims: self.dims.clone(),
            matrix: self.matrix.map(|z| z.conj()),
        }
    }

    /// `self ⊗ other`, with the subsystems of `other` appended after those of `self`.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        // With subsystem 0 least significant, appending `other` makes it the
        // slow index: full = other ⊗_kron self.
        let matrix = other.matrix.kronecker(&self.matrix);
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        DensityMatrix { dims, matrix }
    }

    /// `(1 - delta) ρ + delta I/d`.
    pub fn nudged(&self, delta: f64) -> DensityMatrix {
        let d = self.dim();
        let mut matrix = &self.matrix * Complex64::new(1.0 - delta, 0.0);
        for i in 0..d {
            matrix[(i, i)] += Complex64::new(delta / d as f64, 0.0);
        }
        DensityMatrix {
            dims: self.dims.clone(),
            matrix,
        }
    }

    /// Reduced state on the subsystems in `keep` (listed in increasing order).
    pub fn partial_trace(&self, keep: SiteSet) -> Result<DensityMatrix> {
        let all = self.subsystems();
        if keep.is_empty() || !keep.is_subset(all) {
            return Err(Error::Validation(format!(
                "cannot keep {keep:?} of {} subsystems",
                self.dims.len()
            )));
        }
        check_dim("partial trace input", self.dim(), SMALL_SYSTEM_DIM)?;
        if keep == all {
            return Ok(self.clone());
        }
        let keep_dims: Vec<usize> = keep.iter().map(|k| self.dims[k]).collect();
        let rest = keep.complement(self.dims.len());
        let split = MixedRadix::new(&self.dims);
        let keep_dim: usize = keep_dims.iter().product();
        // Group full indices by their traced-out part.
        let mut groups: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
        for i in 0..self.dim() {
            let (ik, ir) = split.split(i, keep, rest);
            groups.entry(ir).or_default().push((ik, i));
        }
        let mut out = DMatrix::<Complex64>::zeros(keep_dim, keep_dim);
        for members in groups.values() {
            for &(ik, i) in members {
                for &(jk, j) in members {
                    out[(ik, jk)] += self.matrix[(i, j)];
                }
            }
        }
        Ok(DensityMatrix::from_parts(keep_dims, out))
    }

    /// `-ln ρ` on the support `{eigenvalue > cutoff}`, zero elsewhere.
    pub fn modular_hamiltonian(&self, cutoff: f64) -> Result<DMatrix<Complex64>> {
        matrix_log_psd(&self.matrix, cutoff)
    }
}

/// Reduced density matrix of the qubits in `keep` from a pure state.
pub fn partial_trace_pure(state: &PureState, keep: SiteSet) -> Result<DensityMatrix> {
    let n = state.n_sites();
    if keep.is_empty() || !keep.is_subset(state.sites()) {
        return Err(Error::Validation(format!("cannot keep {keep:?} of {n} sites")));
    }
    let dim = 1usize << keep.len();
    check_dim("reduced density matrix", dim, SMALL_SYSTEM_DIM)?;
    let rest = keep.complement(n);
    let mut groups: BTreeMap<u32, Vec<(usize, Complex64)>> = BTreeMap::new();
    for (&c, &a) in state.configs().iter().zip(state.amplitudes()) {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        groups
            .entry(extract_bits(c, rest.bits()))
            .or_default()
            .push((extract_bits(c, keep.bits()) as usize, a));
    }
    let mut out = DMatrix::<Complex64>::zeros(dim, dim);
    for members in groups.values() {
        for &(i, a) in members {
            for &(j, b) in members {
                out[(i, j)] += a * b.conj();
            }
        }
    }
    Ok(DensityMatrix::from_parts(vec![2; keep.len()], out))
}

/// Eigen-decomposition of a Hermitian matrix: (eigenvalues, eigenvectors as columns).
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = SymmetricEigen::new(m.clone());
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// `-ln m` for a positive semidefinite Hermitian `m`, computed on the support
/// `{eigenvalue > cutoff}`; the result acts as zero on the complement.
pub fn matrix_log_psd(m: &DMatrix<Complex64>, cutoff: f64) -> Result<DMatrix<Complex64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Validation("matrix is not square".into()));
    }
    let scale = m.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
    let herm = hermitian_defect(m);
    if herm > HERMITIAN_TOL * scale {
        return Err(Error::Validation(format!(
            "matrix is not Hermitian (defect {herm:.3e})"
        )));
    }
    let n = m.nrows();
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == Complex64::new(0.0, 0.0)));
    if diagonal {
        // exact path: classical states keep exactly commuting logarithms
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            let v = m[(i, i)].re;
            if v < -PSD_TOL * scale {
                return Err(Error::Validation(format!(
                    "matrix is not positive semidefinite (eigenvalue {v:.3e})"
                )));
            }
            if v > cutoff {
                out[(i, i)] = Complex64::new(-v.ln(), 0.0);
            }
        }
        return Ok(out);
    }
    let (vals, vecs) = hermitian_eigen(m);
    if let Some(&neg) = vals.iter().find(|&&v| v < -PSD_TOL * scale) {
        return Err(Error::Validation(format!(
            "matrix is not positive semidefinite (eigenvalue {neg:.3e})"
        )));
    }
    let mut scaled = vecs.clone();
    for (k, &v) in vals.iter().enumerate() {
        let w = if v > cutoff { -v.ln() } else { 0.0 };
        scaled.column_mut(k).scale_mut(w);
    }
    Ok(scaled * vecs.adjoint())
}

/// Extend `op`, acting on the subsystems `op_sites`, by the identity to the
/// subsystems `target` (`op_sites ⊆ target`). `dims` lists every subsystem.
pub fn embed_operator(
    op: &DMatrix<Complex64>,
    op_sites: SiteSet,
    target: SiteSet,
    dims: &[usize],
) -> DMatrix<Complex64> {
    assert!(op_sites.is_subset(target), "operator support outside target");
    let target_dims: Vec<usize> = target.iter().map(|k| dims[k]).collect();
    let local_op = op_sites.relative_to(target);
    let local_rest = target.difference(op_sites).relative_to(target);
    let split = MixedRadix::new(&target_dims);
    let dim: usize = target_dims.iter().product();
    assert_eq!(
        op.nrows(),
        op_sites.iter().map(|k| dims[k]).product::<usize>(),
        "operator dimension does not match its support"
    );
    let parts: Vec<(usize, usize)> = (0..dim)
        .map(|i| split.split(i, local_op, local_rest))
        .collect();
    let mut out = DMatrix::<Complex64>::zeros(dim, dim);
    for (i, &(oi, ri)) in parts.iter().enumerate() {
        for (j, &(oj, rj)) in parts.iter().enumerate() {
            if ri == rj {
                out[(i, j)] = op[(oi, oj)];
            }
        }
    }
    out
}

pub(crate) fn check_dim(what: &'static str, dim: usize, limit: usize) -> Result<()> {
    if dim > limit {
        Err(Error::SizeLimit { what, dim, limit })
    } else {
        Ok(())
    }
}

fn hermitian_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Little-endian mixed-radix indexing over a list of subsystem dimensions.
struct MixedRadix {
    dims: Vec<usize>,
}

impl MixedRadix {
    fn new(dims: &[usize]) -> Self {
        MixedRadix {
            dims: dims.to_vec(),
        }
    }

    /// Split a full index into the sub-indices over subsystem sets `a` and `b`.
    fn split(&self, mut index: usize, a: SiteSet, b: SiteSet) -> (usize, usize) {
        let (mut ia, mut ib) = (0, 0);
        let (mut sa, mut sb) = (1, 1);
        for (k, &d) in self.dims.iter().enumerate() {
            let digit = index % d;
            index /= d;
            if a.contains(k) {
                ia += digit * sa;
                sa *= d;
            } else if b.contains(k) {
                ib += digit * sb;
                sb *= d;
            }
        }
        (ia, ib)
    }
}
