//! Exact modular-current calculus on hexagonal disks of the triangular lattice.
//!
//! Every vertex carries a local combination of face, edge and vertex modular
//! Hamiltonians. Commutators between two supports `S`, `T` are valued in units
//! of `J` by a combinatorial rule: zero unless both difference parts are
//! nonempty, the overlap is nonempty and some lattice edge joins `S∖T` to
//! `T∖S`; otherwise the orientation of the centroids of `(S∖T, S∩T, T∖S)`
//! gives `+1` (counterclockwise) or `-1`. The rule is reconstructed rather
//! than stated in closed form; it reproduces the boundary table, the `J/4`
//! edge current and conservation exactly.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// Axial coordinates `(q, r)`.
pub type Vertex = (i64, i64);

/// A face, edge or vertex, as a sorted vertex list.
pub type Support = Vec<Vertex>;

/// Axial neighbor offsets in counterclockwise order.
pub const NEIGHBORS: [(i64, i64); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

/// Integer plane coordinates `(X, Y) = (2q + r, r)`; the embedding is `(X, Y·√3)/2`.
pub fn plane(v: Vertex) -> (i64, i64) {
    (2 * v.0 + v.1, v.1)
}

/// Inverse of [`plane`]; `None` when `X + Y` is odd.
pub fn from_plane(x: i64, y: i64) -> Option<Vertex> {
    if (x - y).rem_euclid(2) != 0 {
        None
    } else {
        Some(((x - y) / 2, y))
    }
}

/// Hexagonal (axial) distance.
pub fn lattice_distance(a: Vertex, b: Vertex) -> i64 {
    let (dq, dr) = (a.0 - b.0, a.1 - b.1);
    dq.abs().max(dr.abs()).max((dq + dr).abs())
}

pub fn adjacent(a: Vertex, b: Vertex) -> bool {
    lattice_distance(a, b) == 1
}

fn shift(v: Vertex, d: (i64, i64)) -> Vertex {
    (v.0 + d.0, v.1 + d.1)
}

fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Clone, Debug)]
pub struct TriangularDisk {
    radius: i64,
    vertices: BTreeSet<Vertex>,
    boundary: BTreeSet<Vertex>,
    edges: BTreeSet<Support>,
    faces: BTreeSet<Support>,
}

impl TriangularDisk {
    /// The hexagonal disk of the given radius centered at the origin.
    pub fn new(radius: i64) -> Result<Self> {
        if radius < 2 {
            return Err(Error::Validation(format!(
                "disk radius {radius} is too small to have an interior (need >= 2)"
            )));
        }
        let vertices: BTreeSet<Vertex> = (-radius..=radius)
            .flat_map(|q| (-radius..=radius).map(move |r| (q, r)))
            .filter(|&(q, r)| (q + r).abs() <= radius)
            .collect();
        let boundary = vertices
            .iter()
            .copied()
            .filter(|&v| NEIGHBORS.iter().any(|&d| !vertices.contains(&shift(v, d))))
            .collect();
        let mut edges = BTreeSet::new();
        let mut faces = BTreeSet::new();
        for &v in &vertices {
            for i in 0..6 {
                let u = shift(v, NEIGHBORS[i]);
                if vertices.contains(&u) {
                    let mut e = vec![v, u];
                    e.sort();
                    edges.insert(e);
                }
                let w = shift(v, NEIGHBORS[(i + 1) % 6]);
                if vertices.contains(&u) && vertices.contains(&w) {
                    let mut f = vec![v, u, w];
                    f.sort();
                    faces.insert(f);
                }
            }
        }
        let disk = TriangularDisk {
            radius,
            vertices,
            boundary,
            edges,
            faces,
        };
        if disk.euler_characteristic() != 1 {
            return Err(Error::Invariant(format!(
                "disk of radius {radius} fails the Euler check"
            )));
        }
        Ok(disk)
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    pub fn vertices(&self) -> &BTreeSet<Vertex> {
        &self.vertices
    }

    pub fn boundary(&self) -> &BTreeSet<Vertex> {
        &self.boundary
    }

    pub fn interior(&self) -> BTreeSet<Vertex> {
        self.vertices.difference(&self.boundary).copied().collect()
    }

    pub fn edges(&self) -> &BTreeSet<Support> {
        &self.edges
    }

    pub fn faces(&self) -> &BTreeSet<Support> {
        &self.faces
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.vertices.contains(&v)
    }

    pub fn is_boundary(&self, v: Vertex) -> bool {
        self.boundary.contains(&v)
    }

    /// `V - E + F` over the faces inside the disk.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }
}

/// A vertex's local term: supports with nonzero exact coefficients.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LocalTerm {
    pub terms: BTreeMap<Support, BigRational>,
}

/// `⅓ Σ K_f − ½ Σ K_e + K_v` at interior vertices; at boundary vertices only
/// the faces inside the disk, the edges not joining two boundary vertices and no `K_v`.
pub fn local_terms(disk: &TriangularDisk) -> BTreeMap<Vertex, LocalTerm> {
    let third = rational(1, 3);
    let minus_half = rational(-1, 2);
    let mut out = BTreeMap::new();
    for &v in &disk.vertices {
        let mut terms = BTreeMap::new();
        for f in disk.faces.iter().filter(|f| f.contains(&v)) {
            terms.insert(f.clone(), third.clone());
        }
        for e in disk.edges.iter().filter(|e| e.contains(&v)) {
            if !e.iter().all(|&w| disk.is_boundary(w)) {
                terms.insert(e.clone(), minus_half.clone());
            }
        }
        if !disk.is_boundary(v) {
            terms.insert(vec![v], BigRational::one());
        }
        out.insert(v, LocalTerm { terms });
    }
    out
}

/// `Σ_v` of the local terms, merged by support (zero totals dropped).
pub fn summed_terms(terms: &BTreeMap<Vertex, LocalTerm>) -> BTreeMap<Support, BigRational> {
    let mut total: BTreeMap<Support, BigRational> = BTreeMap::new();
    for t in terms.values() {
        for (s, c) in &t.terms {
            *total.entry(s.clone()).or_insert_with(BigRational::zero) += c;
        }
    }
    total.retain(|_, c| !c.is_zero());
    total
}

/// Six times the centroid of `s` in plane coordinates (integral for `|s| ≤ 3`).
fn centroid6(s: &[Vertex]) -> (i64, i64) {
    let n = s.len() as i64;
    let (sx, sy) = s.iter().fold((0, 0), |(x, y), &v| {
        let (px, py) = plane(v);
        (x + px, y + py)
    });
    (sx * 6 / n, sy * 6 / n)
}

/// `i<[K_S, K_T]>` in units of `J`: `-1`, `0` or `+1`.
pub fn pair_value(s: &[Vertex], t: &[Vertex]) -> Result<i32> {
    let s_set: BTreeSet<Vertex> = s.iter().copied().collect();
    let t_set: BTreeSet<Vertex> = t.iter().copied().collect();
    if s_set.len() > 3 || t_set.len() > 3 || s_set.is_empty() || t_set.is_empty() {
        return Err(Error::Validation("supports must have 1 to 3 vertices".into()));
    }
    let only_s: Vec<Vertex> = s_set.difference(&t_set).copied().collect();
    let shared: Vec<Vertex> = s_set.intersection(&t_set).copied().collect();
    let only_t: Vec<Vertex> = t_set.difference(&s_set).copied().collect();
    if only_s.is_empty() || shared.is_empty() || only_t.is_empty() {
        return Ok(0);
    }
    if !only_s.iter().any(|&a| only_t.iter().any(|&c| adjacent(a, c))) {
        return Ok(0);
    }
    let (a, b, c) = (centroid6(&only_s), centroid6(&shared), centroid6(&only_t));
    // the √3/2 scale of the y axis is positive and does not change the sign
    let cross = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
    match cross.signum() {
        1 => Ok(1),
        -1 => Ok(-1),
        _ => Err(Error::Invariant(format!(
            "collinear centroids for supports {s:?} and {t:?}"
        ))),
    }
}

/// Local terms of a disk with memoized vertex-pair currents.
pub struct CurrentCalculus {
    disk: TriangularDisk,
    terms: BTreeMap<Vertex, LocalTerm>,
    cache: HashMap<(Vertex, Vertex), BigRational>,
}

impl CurrentCalculus {
    pub fn new(disk: TriangularDisk) -> Self {
        let terms = local_terms(&disk);
        CurrentCalculus {
            disk,
            terms,
            cache: HashMap::new(),
        }
    }

    pub fn disk(&self) -> &TriangularDisk {
        &self.disk
    }

    pub fn terms(&self) -> &BTreeMap<Vertex, LocalTerm> {
        &self.terms
    }

    /// Full double sum over the two local terms, without locality shortcuts.
    pub fn direct_current(&self, v: Vertex, u: Vertex) -> Result<BigRational> {
        self.check_pair(v, u)?;
        let mut total = BigRational::zero();
        for (s, cs) in &self.terms[&v].terms {
            for (t, ct) in &self.terms[&u].terms {
                match pair_value(s, t)? {
                    0 => {}
                    k => total += cs * ct * BigRational::from_integer(BigInt::from(k)),
                }
            }
        }
        Ok(total)
    }

    fn check_pair(&self, v: Vertex, u: Vertex) -> Result<()> {
        if v == u {
            return Err(Error::Validation(format!("current from {v:?} to itself")));
        }
        for w in [v, u] {
            if !self.disk.contains(w) {
                return Err(Error::Validation(format!("vertex {w:?} is outside the disk")));
            }
        }
        Ok(())
    }

    /// `f_vu = i<[K̃_v, K̃_u]>` in units of `J`.
    ///
    /// Local terms are supported within distance 1 of their vertex, so pairs
    /// farther apart than 2 share no vertex and vanish.
    pub fn current(&mut self, v: Vertex, u: Vertex) -> Result<BigRational> {
        self.check_pair(v, u)?;
        if lattice_distance(v, u) > 2 {
            return Ok(BigRational::zero());
        }
        if let Some(f) = self.cache.get(&(v, u)) {
            return Ok(f.clone());
        }
        let f = self.direct_current(v, u)?;
        self.cache.insert((u, v), -f.clone());
        self.cache.insert((v, u), f.clone());
        Ok(f)
    }

    /// `f(L, R) = Σ_{v∈L, u∈R} f_vu`.
    pub fn region_current(&mut self, l: &BTreeSet<Vertex>, r: &BTreeSet<Vertex>) -> Result<BigRational> {
        if !l.is_disjoint(r) {
            return Err(Error::Validation("regions overlap".into()));
        }
        if let Some(w) = l.iter().chain(r).find(|w| !self.disk.contains(**w)) {
            return Err(Error::Validation(format!("vertex {w:?} is outside the disk")));
        }
        let mut total = BigRational::zero();
        for &v in l {
            for &u in r {
                if lattice_distance(v, u) <= 2 {
                    total += self.current(v, u)?;
                }
            }
        }
        Ok(total)
    }

    /// Vertices `u` with `Σ_{v≠u} f_vu ≠ 0`.
    pub fn conservation_violations(&mut self) -> Result<Vec<Vertex>> {
        let vertices: Vec<Vertex> = self.disk.vertices.iter().copied().collect();
        let mut bad = Vec::new();
        for &u in &vertices {
            let mut total = BigRational::zero();
            for &v in &vertices {
                if v != u && lattice_distance(v, u) <= 2 {
                    total += self.current(v, u)?;
                }
            }
            if !total.is_zero() {
                bad.push(u);
            }
        }
        Ok(bad)
    }

    /// Nonzero `f_vu` with both vertices in the interior.
    pub fn bulk_violations(&mut self) -> Result<Vec<(Vertex, Vertex)>> {
        let interior: Vec<Vertex> = self.disk.interior().into_iter().collect();
        let mut bad = Vec::new();
        for &v in &interior {
            for &u in &interior {
                if v != u && !self.current(v, u)?.is_zero() {
                    bad.push((v, u));
                }
            }
        }
        Ok(bad)
    }

    /// The boundary table: currents among the labelled vertices near the bottom edge.
    pub fn boundary_table(&mut self) -> Result<BTreeMap<String, BigRational>> {
        let labels = BoundaryLabels::new(&self.disk)?;
        let mut out = BTreeMap::new();
        for (name, v, u) in labels.pairs() {
            out.insert(name.to_string(), self.current(v, u)?);
        }
        Ok(out)
    }

    /// `f(L, R)` for the canonical three-sector split; equals `1/4`.
    pub fn edge_current(&mut self) -> Result<BigRational> {
        let (l, r, _) = canonical_sectors(&self.disk);
        self.region_current(&l, &r)
    }
}

/// Named vertices on the bottom edge (`Y = -radius`) and the row above.
///
/// Bottom row: `b, a, x, y` at `X(a) - 2, X(a), X(a) + 2, X(a) + 4`;
/// second row: `c, z, w` at `X(a) - 1, X(a) + 1, X(a) + 3`. `a` sits just left of
/// the sector junction at `X = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryLabels {
    pub a: Vertex,
    pub b: Vertex,
    pub c: Vertex,
    pub x: Vertex,
    pub y: Vertex,
    pub z: Vertex,
    pub w: Vertex,
}

impl BoundaryLabels {
    pub fn new(disk: &TriangularDisk) -> Result<Self> {
        let r = disk.radius();
        if r < 3 {
            return Err(Error::Validation(format!(
                "boundary table needs radius >= 3, got {r}"
            )));
        }
        let xa = if r % 2 == 1 { -1 } else { -2 };
        let at = |x: i64, y: i64| -> Result<Vertex> {
            from_plane(x, y)
                .filter(|&v| disk.contains(v))
                .ok_or_else(|| Error::Invariant(format!("no vertex at plane point ({x}, {y})")))
        };
        Ok(BoundaryLabels {
            a: at(xa, -r)?,
            b: at(xa - 2, -r)?,
            x: at(xa + 2, -r)?,
            y: at(xa + 4, -r)?,
            c: at(xa - 1, -r + 1)?,
            z: at(xa + 1, -r + 1)?,
            w: at(xa + 3, -r + 1)?,
        })
    }

    pub fn pairs(&self) -> [(&'static str, Vertex, Vertex); 6] {
        [
            ("ax", self.a, self.x),
            ("ay", self.a, self.y),
            ("aw", self.a, self.w),
            ("bx", self.b, self.x),
            ("bz", self.b, self.z),
            ("cx", self.c, self.x),
        ]
    }
}

/// Three sectors meeting at the origin, split at angles 90°, 210° and 330°.
///
/// `L`: `X < 0` and `-3Y - X ≥ 0`; `R`: `X ≥ 0` and `3Y - X < 0`; `C`: the rest (with the origin).
pub fn canonical_sectors(disk: &TriangularDisk) -> (BTreeSet<Vertex>, BTreeSet<Vertex>, BTreeSet<Vertex>) {
    let mut l = BTreeSet::new();
    let mut r = BTreeSet::new();
    let mut c = BTreeSet::new();
    for &v in disk.vertices() {
        let (x, y) = plane(v);
        if x < 0 && -3 * y - x >= 0 {
            l.insert(v);
        } else if x >= 0 && 3 * y - x < 0 {
            r.insert(v);
        } else {
            c.insert(v);
        }
    }
    (l, r, c)
}

/// JSON summary of a disk's current calculus.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurrentReport {
    pub radius: i64,
    pub edge_current: String,
    /// Boundary pair currents keyed by pair label; serialized as `fig9`.
    #[serde(rename = "fig9")]
    pub boundary_table: BTreeMap<String, String>,
    pub conservation_violations: usize,
    pub bulk_violations: usize,
    pub rule: String,
}

pub fn current_report(radius: i64) -> Result<CurrentReport> {
    let mut calc = CurrentCalculus::new(TriangularDisk::new(radius)?);
    let edge = calc.edge_current()?;
    let boundary_table = if radius >= 3 {
        calc.boundary_table()?
            .into_iter()
            .map(|(k, v)| (k, v.to_string()))
            .collect()
    } else {
        BTreeMap::new()
    };
    Ok(CurrentReport {
        radius,
        edge_current: edge.to_string(),
        boundary_table,
        conservation_violations: calc.conservation_violations()?.len(),
        bulk_violations: calc.bulk_violations()?.len(),
        rule: "adjacency+orientation; certified by the boundary table, edge current and \
               conservation, other configurations rule-derived and uncertified"
            .into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_two_counts() {
        let d = TriangularDisk::new(2).unwrap();
        assert_eq!(d.vertices().len(), 19);
        assert_eq!(d.interior().len(), 7);
        assert_eq!(d.euler_characteristic(), 1);
        assert!(TriangularDisk::new(1).is_err());
    }

    #[test]
    fn interior_vertex_term() {
        let d = TriangularDisk::new(2).unwrap();
        let t = &local_terms(&d)[&(0, 0)];
        let count = |len: usize, c: BigRational| {
            t.terms.iter().filter(|(s, v)| s.len() == len && **v == c).count()
        };
        assert_eq!(count(3, rational(1, 3)), 6);
        assert_eq!(count(2, rational(-1, 2)), 6);
        assert_eq!(count(1, rational(1, 1)), 1);
        assert_eq!(t.terms.len(), 13);
    }

    #[test]
    fn plane_coordinates_round_trip() {
        for v in [(0, 0), (3, -2), (-1, 4)] {
            let (x, y) = plane(v);
            assert_eq!(from_plane(x, y), Some(v));
        }
        assert_eq!(from_plane(1, 0), None);
    }

    #[test]
    fn disjoint_and_nested_supports_vanish() {
        let f = vec![(0, 0), (0, 1), (1, 0)];
        assert_eq!(pair_value(&f, &[(3, 3), (3, 4), (4, 3)]).unwrap(), 0);
        assert_eq!(pair_value(&f, &[(0, 0), (1, 0)]).unwrap(), 0);
        assert_eq!(pair_value(&[(0, 0)], &f).unwrap(), 0);
    }

    #[test]
    fn self_current_is_rejected() {
        let mut c = CurrentCalculus::new(TriangularDisk::new(2).unwrap());
        assert!(c.current((0, 0), (0, 0)).is_err());
        assert!(c.current((0, 0), (9, 9)).is_err());
    }
}
