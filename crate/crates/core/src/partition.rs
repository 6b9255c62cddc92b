//! Random rotations and the tetrahedral four-region partition of a sphere lattice.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laughlin::SphereLattice;
use crate::tensorcore::SiteSet;

const QUATERNION_TOL: f64 = 1e-12;

/// A proper rotation stored as a unit quaternion `(w, x, y, z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    q: [f64; 4],
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation {
        q: [1.0, 0.0, 0.0, 0.0],
    };

    /// Quaternion must have unit norm to within `1e-12`.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (w * w + x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > QUATERNION_TOL {
            return Err(Error::Validation(format!(
                "rotation quaternion has norm {norm}"
            )));
        }
        Ok(Rotation { q: [w, x, y, z] })
    }

    /// Rotation by `angle` about `axis` (any nonzero length).
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Result<Self> {
        let len = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if len.is_nan() || len <= 0.0 || !len.is_finite() {
            return Err(Error::Validation("rotation axis must be nonzero".into()));
        }
        let (s, c) = (angle / 2.0).sin_cos();
        Ok(Rotation {
            q: [c, s * axis[0] / len, s * axis[1] / len, s * axis[2] / len],
        })
    }

    pub fn quaternion(&self) -> [f64; 4] {
        self.q
    }

    pub fn inverse(&self) -> Rotation {
        let [w, x, y, z] = self.q;
        Rotation { q: [w, -x, -y, -z] }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Rotation) -> Rotation {
        let [a1, b1, c1, d1] = self.q;
        let [a2, b2, c2, d2] = other.q;
        Rotation {
            q: [
                a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
                a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
                a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
                a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
            ],
        }
    }

    /// The 3x3 rotation matrix, row major.
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        let [w, x, y, z] = self.q;
        [
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ]
    }

    pub fn rotate(&self, v: [f64; 3]) -> [f64; 3] {
        let m = self.matrix();
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }
}

/// Haar-uniform rotation: a normalized quaternion of four standard normals.
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Rotation {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return Rotation {
                q: q.map(|v| v / norm),
            };
        }
    }
}

/// Independent generator for sample `index` under `master_seed`.
///
/// Streams depend only on the pair, never on scheduling order.
pub fn sample_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// The rotation used for sample `index`.
pub fn sample_rotation(master_seed: u64, index: u64) -> Rotation {
    random_rotation(&mut sample_rng(master_seed, index))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Region {
    A,
    B,
    C,
    D,
}

impl Region {
    pub const ALL: [Region; 4] = [Region::A, Region::B, Region::C, Region::D];

    pub fn letter(self) -> char {
        match self {
            Region::A => 'A',
            Region::B => 'B',
            Region::C => 'C',
            Region::D => 'D',
        }
    }

    pub fn from_letter(c: char) -> Option<Region> {
        match c {
            'A' => Some(Region::A),
            'B' => Some(Region::B),
            'C' => Some(Region::C),
            'D' => Some(Region::D),
            _ => None,
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Unrotated region centers, the vertices of a regular tetrahedron.
pub fn tetrahedron_centers() -> [[f64; 3]; 4] {
    let s = 1.0 / 3f64.sqrt();
    [[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]]
}

/// Region label of every lattice site.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionAssignment {
    labels: Vec<Region>,
}

impl RegionAssignment {
    pub fn from_labels(labels: Vec<Region>) -> Self {
        RegionAssignment { labels }
    }

    /// Parse a string such as `"ABDC"`.
    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| {
                Region::from_letter(c)
                    .ok_or_else(|| Error::Format(format!("unknown region label {c:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::from_labels)
    }

    pub fn labels(&self) -> &[Region] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label_string(&self) -> String {
        self.labels.iter().map(|r| r.letter()).collect()
    }

    /// Site counts of `[A, B, C, D]`.
    pub fn sizes(&self) -> [usize; 4] {
        let mut sizes = [0; 4];
        for &r in &self.labels {
            sizes[r as usize] += 1;
        }
        sizes
    }

    pub fn region(&self, region: Region) -> SiteSet {
        SiteSet::from_sites(
            self.labels
                .iter()
                .enumerate()
                .filter(|(_, &r)| r == region)
                .map(|(i, _)| i),
        )
    }

    pub fn masks(&self) -> RegionMasks {
        let [a, b, c, d] = Region::ALL.map(|r| self.region(r));
        RegionMasks { a, b, c, d }
    }
}

/// Site sets of the four regions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegionMasks {
    pub a: SiteSet,
    pub b: SiteSet,
    pub c: SiteSet,
    pub d: SiteSet,
}

impl RegionMasks {
    pub fn ab(&self) -> SiteSet {
        self.a | self.b
    }

    pub fn bc(&self) -> SiteSet {
        self.b | self.c
    }

    pub fn ca(&self) -> SiteSet {
        self.c | self.a
    }

    pub fn abc(&self) -> SiteSet {
        self.a | self.b | self.c
    }
}

/// Assign each site to the rotated tetrahedron center of largest dot product.
///
/// Exact ties go to the earlier label.
pub fn tetra_partition(lattice: &SphereLattice, rotation: &Rotation) -> RegionAssignment {
    let centers = tetrahedron_centers().map(|c| rotation.rotate(c));
    let labels = lattice
        .unit_vectors()
        .iter()
        .map(|v| {
            let mut best = 0;
            let mut best_dot = f64::NEG_INFINITY;
            for (k, c) in centers.iter().enumerate() {
                let dot = v[0] * c[0] + v[1] * c[1] + v[2] * c[2];
                if dot > best_dot {
                    best = k;
                    best_dot = dot;
                }
            }
            Region::ALL[best]
        })
        .collect();
    RegionAssignment { labels }
}

/// JSON form `{"rotation": [w, x, y, z], "labels": "ABDC..."}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssignmentRecord {
    pub rotation: [f64; 4],
    pub labels: String,
}

impl AssignmentRecord {
    pub fn new(rotation: &Rotation, assignment: &RegionAssignment) -> Self {
        AssignmentRecord {
            rotation: rotation.quaternion(),
            labels: assignment.label_string(),
        }
    }

    pub fn decode(&self) -> Result<(Rotation, RegionAssignment)> {
        let [w, x, y, z] = self.rotation;
        Ok((Rotation::new(w, x, y, z)?, RegionAssignment::parse(&self.labels)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: [f64; 3], b: [f64; 3]) -> bool {
        (0..3).all(|i| (a[i] - b[i]).abs() < 1e-14)
    }

    #[test]
    fn quarter_turn_about_z() {
        let r = Rotation::from_axis_angle([0.0, 0.0, 2.0], FRAC_PI_2).unwrap();
        assert!(close(r.rotate([1.0, 0.0, 0.0]), [0.0, 1.0, 0.0]));
        assert!(close(r.inverse().rotate(r.rotate([0.3, -0.2, 0.9])), [0.3, -0.2, 0.9]));
    }

    #[test]
    fn composition_applies_right_factor_first() {
        let rx = Rotation::from_axis_angle([1.0, 0.0, 0.0], FRAC_PI_2).unwrap();
        let rz = Rotation::from_axis_angle([0.0, 0.0, 1.0], FRAC_PI_2).unwrap();
        let v = [0.1, 0.7, -0.4];
        assert!(close(rz.compose(&rx).rotate(v), rz.rotate(rx.rotate(v))));
    }

    #[test]
    fn non_unit_quaternion_is_rejected() {
        assert!(Rotation::new(1.0, 1e-5, 0.0, 0.0).is_err());
        assert!(Rotation::new(0.0, 0.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn sample_streams_are_independent_of_order() {
        let a = sample_rotation(7, 3);
        let _ = sample_rotation(7, 2);
        assert_eq!(a, sample_rotation(7, 3));
        assert_ne!(a, sample_rotation(7, 4));
        assert_ne!(a, sample_rotation(8, 3));
    }

    #[test]
    fn centers_classify_themselves() {
        let c = tetrahedron_centers();
        for (k, v) in c.iter().enumerate() {
            let dots: Vec<f64> = c.iter().map(|w| v[0] * w[0] + v[1] * w[1] + v[2] * w[2]).collect();
            let best = (0..4).max_by(|&i, &j| dots[i].total_cmp(&dots[j])).unwrap();
            assert_eq!(best, k);
        }
    }

    #[test]
    fn labels_round_trip() {
        let a = RegionAssignment::parse("ABDCCA").unwrap();
        assert_eq!(a.sizes(), [2, 1, 2, 1]);
        assert_eq!(a.masks().ca(), SiteSet::from_sites([0, 3, 4, 5]));
        assert!(RegionAssignment::parse("ABX").is_err());
        let rec = AssignmentRecord::new(&Rotation::IDENTITY, &a);
        let json = serde_json::to_string(&rec).unwrap();
        assert_eq!(json, r#"{"rotation":[1.0,0.0,0.0,0.0],"labels":"ABDCCA"}"#);
        let back: AssignmentRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.decode().unwrap().1, a);
    }
}
