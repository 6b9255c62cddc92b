//! Golden-angle sphere lattices and the lattice Laughlin (semion) state.
//!
//! Amplitudes are evaluated in integer-exponent form: for a zero-magnetization
//! configuration,
//!
//! ```text
//! log c(s) = -sum_{n<m, s_n != s_m} Log(z_n - z_m)
//! ```
//!
//! which differs from the half-integer-power product only by a
//! configuration-independent factor. A site projected to the point at
//! infinity contributes another configuration-independent factor and its
//! pairs are omitted.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::partition::Rotation;
use crate::tensorcore::{Basis, PureState};

/// Default ceiling on the number of lattice sites for state construction.
pub const DEFAULT_MAX_SITES: usize = 24;

/// `2π (1 - (√5 - 1)/2)`, about 137.5 degrees.
pub fn golden_angle() -> f64 {
    2.0 * PI * (1.0 - (5f64.sqrt() - 1.0) / 2.0)
}

/// Stereographic image of a sphere point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stereo {
    Finite(Complex64),
    /// The image of the south pole `θ = π`.
    Infinity,
}

impl Stereo {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            Stereo::Finite(z) => Some(z),
            Stereo::Infinity => None,
        }
    }
}

/// `z = sinθ / (1 + cosθ) · e^{iφ}`; exactly `θ = π` maps to infinity.
pub fn stereographic(theta: f64, phi: f64) -> Stereo {
    if theta >= PI {
        return Stereo::Infinity;
    }
    let r = theta.sin() / (1.0 + theta.cos());
    Stereo::Finite(Complex64::from_polar(r, phi))
}

/// `(θ_j, φ_j) = (arccos(1 - 2j/(n-1)), j φ_g mod 2π)` for `j = 0..n`.
pub fn golden_angles(n: usize) -> Result<Vec<(f64, f64)>> {
    if n < 2 {
        return Err(Error::Validation(format!("lattice needs n >= 2, got {n}")));
    }
    let g = golden_angle();
    Ok((0..n)
        .map(|j| {
            let theta = (1.0 - 2.0 * j as f64 / (n - 1) as f64).acos();
            let phi = (j as f64 * g).rem_euclid(2.0 * PI);
            (theta, phi)
        })
        .collect())
}

/// Points on the unit sphere with their stereographic images.
#[derive(Clone, Debug)]
pub struct SphereLattice {
    angles: Vec<(f64, f64)>,
    unit_vectors: Vec<[f64; 3]>,
    z: Vec<Stereo>,
}

impl SphereLattice {
    /// The golden-angle lattice of `n` sites (`n` even).
    pub fn golden(n: usize) -> Result<Self> {
        if !n.is_multiple_of(2) {
            return Err(Error::Parity(n));
        }
        Self::from_angles(golden_angles(n)?)
    }

    pub fn from_angles(angles: Vec<(f64, f64)>) -> Result<Self> {
        for &(theta, phi) in &angles {
            if !(0.0..=PI).contains(&theta) || !phi.is_finite() {
                return Err(Error::Validation(format!("invalid sphere point ({theta}, {phi})")));
            }
        }
        let unit_vectors = angles
            .iter()
            .map(|&(t, p)| [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()])
            .collect();
        let z = angles.iter().map(|&(t, p)| stereographic(t, p)).collect();
        let lattice = SphereLattice {
            angles,
            unit_vectors,
            z,
        };
        lattice.check_distinct()?;
        Ok(lattice)
    }

    fn from_unit_vectors(vectors: Vec<[f64; 3]>) -> Result<Self> {
        let angles = vectors
            .iter()
            .map(|v| {
                let theta = v[2].clamp(-1.0, 1.0).acos();
                let mut phi = v[1].atan2(v[0]);
                if phi < 0.0 {
                    phi += 2.0 * PI;
                }
                if phi >= 2.0 * PI {
                    phi -= 2.0 * PI;
                }
                (theta, phi + 0.0)
            })
            .collect::<Vec<_>>();
        let z = angles.iter().map(|&(t, p)| stereographic(t, p)).collect();
        let lattice = SphereLattice {
            angles,
            unit_vectors: vectors,
            z,
        };
        lattice.check_distinct()?;
        Ok(lattice)
    }

    fn check_distinct(&self) -> Result<()> {
        let infinite: Vec<usize> = (0..self.len()).filter(|&i| self.z[i] == Stereo::Infinity).collect();
        if infinite.len() > 1 {
            return Err(Error::DegenerateLattice(infinite[0], infinite[1]));
        }
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                if self.angular_distance(i, j) <= 0.0 {
                    return Err(Error::DegenerateLattice(i, j));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// `(θ, φ)` of every site.
    pub fn angles(&self) -> &[(f64, f64)] {
        &self.angles
    }

    pub fn unit_vectors(&self) -> &[[f64; 3]] {
        &self.unit_vectors
    }

    pub fn stereo(&self) -> &[Stereo] {
        &self.z
    }

    /// Great-circle distance between sites `i` and `j`.
    pub fn angular_distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.unit_vectors[i], self.unit_vectors[j]);
        let cross = [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ];
        let sin = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
        let cos = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        sin.atan2(cos)
    }

    pub fn min_angular_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                best = best.min(self.angular_distance(i, j));
            }
        }
        best
    }

    /// Rotate every site; site order is preserved.
    pub fn rotate(&self, rotation: &Rotation) -> Result<SphereLattice> {
        if *rotation == Rotation::IDENTITY {
            return Ok(self.clone());
        }
        Self::from_unit_vectors(self.unit_vectors.iter().map(|&v| rotation.rotate(v)).collect())
    }

    /// `{"n": .., "points": [[θ, φ], ..], "z": [[re, im] | "inf", ..]}`.
    pub fn to_json(&self) -> Value {
        let points: Vec<Value> = self.angles.iter().map(|&(t, p)| json!([t, p])).collect();
        let z: Vec<Value> = self
            .z
            .iter()
            .map(|s| match s {
                Stereo::Finite(z) => json!([z.re, z.im]),
                Stereo::Infinity => json!("inf"),
            })
            .collect();
        json!({ "n": self.len(), "points": points, "z": z })
    }

    /// Rebuild a lattice from the `points` of its JSON form.
    pub fn from_json(value: &Value) -> Result<Self> {
        let bad = |what: &str| Error::Format(format!("lattice JSON: {what}"));
        let n = value["n"].as_u64().ok_or_else(|| bad("missing n"))? as usize;
        let points = value["points"].as_array().ok_or_else(|| bad("missing points"))?;
        if points.len() != n {
            return Err(bad("point count differs from n"));
        }
        let angles = points
            .iter()
            .map(|p| match (p[0].as_f64(), p[1].as_f64()) {
                (Some(t), Some(f)) => Ok((t, f)),
                _ => Err(bad("point is not [theta, phi]")),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_angles(angles)
    }
}

/// Principal-log pair table `Log(z_i - z_j)` for `i < j`, `None` when a site is at infinity.
fn pair_logs(lattice: &SphereLattice) -> Result<Vec<Vec<Option<Complex64>>>> {
    let n = lattice.len();
    let mut table = vec![vec![None; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            if let (Stereo::Finite(a), Stereo::Finite(b)) = (lattice.z[i], lattice.z[j]) {
                let d = a - b;
                if d.norm() == 0.0 {
                    return Err(Error::DegenerateLattice(i, j));
                }
                table[i][j] = Some(d.ln());
            }
        }
    }
    Ok(table)
}

/// Logarithm of the (unnormalized) amplitude of `config`, up to a
/// configuration-independent constant; `None` outside the zero-magnetization sector.
pub fn log_amplitude(lattice: &SphereLattice, config: u32) -> Result<Option<Complex64>> {
    let n = lattice.len();
    if 2 * config.count_ones() as usize != n || (n < 32 && config >> n != 0) {
        return Ok(None);
    }
    let table = pair_logs(lattice)?;
    Ok(Some(sum_opposite_pairs(&table, config, n)))
}

#[inline]
fn sum_opposite_pairs(table: &[Vec<Option<Complex64>>], config: u32, n: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let si = config >> i & 1;
        for j in i + 1..n {
            if config >> j & 1 != si {
                if let Some(l) = table[i][j] {
                    acc -= l;
                }
            }
        }
    }
    acc
}

/// The normalized semion state on `lattice` (at most [`DEFAULT_MAX_SITES`] sites).
pub fn semion_state(lattice: &SphereLattice) -> Result<PureState> {
    semion_state_with_limit(lattice, DEFAULT_MAX_SITES)
}

pub fn semion_state_with_limit(lattice: &SphereLattice, max_sites: usize) -> Result<PureState> {
    let n = lattice.len();
    if !n.is_multiple_of(2) {
        return Err(Error::Parity(n));
    }
    if n > max_sites {
        return Err(Error::SizeLimit {
            what: "semion lattice sites",
            dim: n,
            limit: max_sites,
        });
    }
    let table = pair_logs(lattice)?;
    let basis = Basis::Magnetization(0);
    let configs = basis.configurations(n)?;
    let logs: Vec<Complex64> = configs
        .iter()
        .map(|&c| sum_opposite_pairs(&table, c, n))
        .collect();
    let shift = logs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    let amplitudes = logs.iter().map(|l| (l - shift).exp()).collect();
    PureState::new(n, basis, amplitudes)
}
