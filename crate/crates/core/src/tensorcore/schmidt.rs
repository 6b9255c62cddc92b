use nalgebra::{DMatrix, SVD};
use num_complex::Complex64;

use super::{colex_rank, extract_bits, BinomialTable, PureState, SiteSet};
use crate::error::{Error, Result};

/// Singular values at or below `DEFAULT_CUTOFF * largest` are discarded.
pub const DEFAULT_CUTOFF: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
struct Placement {
    block: u32,
    row: u32,
    col: u32,
}

/// Shape of one magnetization block of a reshaped state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockShape {
    /// Magnetization of the region, `None` when the state has no conserved sector.
    pub magnetization: Option<i32>,
    pub rows: usize,
    pub cols: usize,
}

/// Reshaping of a state into `region x complement` matrices.
///
/// For a state of fixed total magnetization the reshaped matrix is block
/// diagonal in the magnetization of the region; each block is indexed by the
/// colex rank of the region bits (rows) and of the complement bits (columns).
#[derive(Clone, Debug)]
pub struct Bipartition {
    n_sites: usize,
    mask: SiteSet,
    blocks: Vec<BlockShape>,
    placement: Vec<Placement>,
}

impl Bipartition {
    pub fn new(state: &PureState, mask: SiteSet) -> Result<Self> {
        let n = state.n_sites();
        let all = SiteSet::full(n);
        if mask.is_empty() {
            return Err(Error::InvalidBipartition("region is empty".into()));
        }
        if !mask.is_subset(all) {
            return Err(Error::InvalidBipartition(format!(
                "region {mask:?} exceeds {n} sites"
            )));
        }
        if mask == all {
            return Err(Error::InvalidBipartition("region is the whole system".into()));
        }
        let rest = mask.complement(n);
        let nx = mask.len();
        let ny = n - nx;
        let (blocks, placement) = match state.basis().up_count(n) {
            None => {
                let blocks = vec![BlockShape {
                    magnetization: None,
                    rows: 1 << nx,
                    cols: 1 << ny,
                }];
                let placement = state
                    .configs()
                    .iter()
                    .map(|&c| Placement {
                        block: 0,
                        row: extract_bits(c, mask.bits()),
                        col: extract_bits(c, rest.bits()),
                    })
                    .collect();
                (blocks, placement)
            }
            Some(k) => {
                let table = BinomialTable::new();
                let lo = k.saturating_sub(ny);
                let hi = nx.min(k);
                let blocks = (lo..=hi)
                    .map(|kx| BlockShape {
                        magnetization: Some(2 * kx as i32 - nx as i32),
                        rows: table.get(nx, kx),
                        cols: table.get(ny, k - kx),
                    })
                    .collect();
                let placement = state
                    .configs()
                    .iter()
                    .map(|&c| {
                        let x = extract_bits(c, mask.bits());
                        let y = extract_bits(c, rest.bits());
                        Placement {
                            block: (x.count_ones() as usize - lo) as u32,
                            row: colex_rank(x, &table) as u32,
                            col: colex_rank(y, &table) as u32,
                        }
                    })
                    .collect();
                (blocks, placement)
            }
        };
        Ok(Bipartition {
            n_sites: n,
            mask,
            blocks,
            placement,
        })
    }

    pub fn mask(&self) -> SiteSet {
        self.mask
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn blocks(&self) -> &[BlockShape] {
        &self.blocks
    }

    /// Reshape an amplitude vector (canonical order) into its block matrices.
    pub fn block_matrices(&self, amplitudes: &[Complex64]) -> Vec<DMatrix<Complex64>> {
        assert_eq!(amplitudes.len(), self.placement.len());
        let mut mats: Vec<DMatrix<Complex64>> = self
            .blocks
            .iter()
            .map(|b| DMatrix::zeros(b.rows, b.cols))
            .collect();
        for (p, &a) in self.placement.iter().zip(amplitudes) {
            mats[p.block as usize][(p.row as usize, p.col as usize)] = a;
        }
        mats
    }

    /// Inverse of [`Bipartition::block_matrices`].
    pub fn flatten(&self, mats: &[DMatrix<Complex64>]) -> Vec<Complex64> {
        self.placement
            .iter()
            .map(|p| mats[p.block as usize][(p.row as usize, p.col as usize)])
            .collect()
    }
}

/// Schmidt data of one magnetization block: `M = left * diag(values) * right`.
#[derive(Clone, Debug)]
pub struct SchmidtBlock {
    pub magnetization: Option<i32>,
    /// Retained singular values, descending.
    pub values: Vec<f64>,
    /// `rows x r` left singular vectors.
    pub left: DMatrix<Complex64>,
    /// `r x cols` conjugate-transposed right singular vectors.
    pub right: DMatrix<Complex64>,
}

#[derive(Clone, Debug)]
pub struct SchmidtData {
    partition: Bipartition,
    blocks: Vec<SchmidtBlock>,
    cutoff: f64,
}

impl SchmidtData {
    pub fn blocks(&self) -> &[SchmidtBlock] {
        &self.blocks
    }

    pub fn partition(&self) -> &Bipartition {
        &self.partition
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// All retained singular values, block by block.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.blocks.iter().flat_map(|b| b.values.iter().copied())
    }

    /// Rebuild `sum_k g(λ_k) |left_k>|right_k>` in canonical configuration order.
    pub fn reconstruct_with(&self, g: impl Fn(f64) -> f64) -> Vec<Complex64> {
        let mats: Vec<DMatrix<Complex64>> = self
            .partition
            .blocks
            .iter()
            .zip(&self.blocks)
            .map(|(shape, b)| {
                if b.values.is_empty() {
                    return DMatrix::zeros(shape.rows, shape.cols);
                }
                let mut scaled = b.left.clone();
                for (k, &v) in b.values.iter().enumerate() {
                    let w = g(v);
                    scaled.column_mut(k).scale_mut(w);
                }
                scaled * &b.right
            })
            .collect();
        self.partition.flatten(&mats)
    }
}

/// Schmidt decomposition of `state` across `mask | complement`, block by block.
///
/// Singular values `λ <= cutoff * λ_max` are dropped; `cutoff = 0` keeps every
/// strictly positive value.
pub fn schmidt(state: &PureState, mask: SiteSet, cutoff: f64) -> Result<SchmidtData> {
    if cutoff.is_nan() || cutoff < 0.0 {
        return Err(Error::Validation(format!("cutoff {cutoff} must be >= 0")));
    }
    let partition = Bipartition::new(state, mask)?;
    let mats = partition.block_matrices(state.amplitudes());
    let mut raw = Vec::with_capacity(mats.len());
    for (shape, m) in partition.blocks.iter().zip(mats) {
        if shape.rows == 0 || shape.cols == 0 {
            raw.push((
                shape.magnetization,
                Vec::new(),
                DMatrix::zeros(shape.rows, 0),
                DMatrix::zeros(0, shape.cols),
            ));
            continue;
        }
        let svd = SVD::new(m, true, true);
        let u = svd.u.expect("left vectors requested");
        let vt = svd.v_t.expect("right vectors requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
        let left = u.select_columns(order.iter());
        let right = vt.select_rows(order.iter());
        raw.push((shape.magnetization, values, left, right));
    }
    let largest = raw
        .iter()
        .flat_map(|r| r.1.iter().copied())
        .fold(0.0f64, f64::max);
    let threshold = cutoff * largest;
    let blocks = raw
        .into_iter()
        .map(|(magnetization, values, left, right)| {
            let keep = values.iter().take_while(|&&v| v > threshold && v > 0.0).count();
            SchmidtBlock {
                magnetization,
                values: values[..keep].to_vec(),
                left: left.columns(0, keep).into_owned(),
                right: right.rows(0, keep).into_owned(),
            }
        })
        .collect();
    Ok(SchmidtData {
        partition,
        blocks,
        cutoff,
    })
}

/// All singular values across `mask | complement` (no vectors), descending.
pub fn schmidt_values(state: &PureState, mask: SiteSet) -> Result<Vec<f64>> {
    let partition = Bipartition::new(state, mask)?;
    let mut values = Vec::new();
    for m in partition.block_matrices(state.amplitudes()) {
        if m.nrows() == 0 || m.ncols() == 0 {
            continue;
        }
        values.extend(SVD::new(m, false, false).singular_values.iter().copied());
    }
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// `-λ² ln λ²` with `0 ln 0 = 0`.
#[inline]
fn entropy_term(lambda: f64) -> f64 {
    let p = lambda * lambda;
    if p > 0.0 {
        -p * p.ln()
    } else {
        0.0
    }
}

/// Von Neumann entropy (nats) of the region described by `sd`.
pub fn entanglement_entropy(sd: &SchmidtData) -> f64 {
    sd.values().map(entropy_term).sum()
}

/// Entanglement entropy of `mask` in a pure state, from singular values only.
pub fn entropy(state: &PureState, mask: SiteSet) -> Result<f64> {
    Ok(schmidt_values(state, mask)?
        .into_iter()
        .map(entropy_term)
        .sum())
}

/// `-2 λ ln λ`, the Schmidt weight of `K_X |ψ>`.
#[inline]
pub(crate) fn tilde_weight(lambda: f64) -> f64 {
    if lambda > 0.0 {
        -2.0 * lambda * lambda.ln()
    } else {
        0.0
    }
}

/// `K_X |ψ>` with `K_X = -ln ρ_X`, as amplitudes in the state's canonical order.
pub fn tilde_state(state: &PureState, mask: SiteSet, cutoff: f64) -> Result<Vec<Complex64>> {
    Ok(schmidt(state, mask, cutoff)?.reconstruct_with(tilde_weight))
}
