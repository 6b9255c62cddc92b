//! The invariant suite run by `modcomm check`.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use modcomm::current::{local_terms, summed_terms, CurrentCalculus, TriangularDisk, Vertex};
use modcomm::fitting::{fit, DataPoint, Dataset, FitOptions, Model};
use modcomm::modular::{
    cmi, modular_commutator_dm, modular_commutator_dm_complex, modular_commutator_pure,
    modular_flow_entropy_derivative, petz_defect, tilde_overlap,
};
use modcomm::teststates::{
    markov_chain_state, random_dm, random_pure_state, real_gibbs_state, seeded_rng, MarkovSpec,
};
use modcomm::{Basis, DensityMatrix, Result, SiteSet};

const CUTOFF: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Suite {
    pub name: String,
    pub passed: bool,
    pub seconds: f64,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub passed: bool,
    pub suites: Vec<Suite>,
}

fn one(i: usize) -> SiteSet {
    SiteSet::from_sites([i])
}

fn sites<const K: usize>(s: [usize; K]) -> SiteSet {
    SiteSet::from_sites(s)
}

/// Largest value of `f` over `count` seeds; errors count as failures.
fn worst(count: u64, f: impl Fn(u64) -> Result<f64>) -> std::result::Result<f64, String> {
    let mut w = 0.0f64;
    for seed in 0..count {
        let v = f(seed).map_err(|e| format!("seed {seed}: {e}"))?;
        if v.is_nan() {
            return Err(format!("seed {seed}: NaN"));
        }
        w = w.max(v);
    }
    Ok(w)
}

fn bounded(name: &str, count: u64, tol: f64, f: impl Fn(u64) -> Result<f64>) -> Check {
    match worst(count, f) {
        Ok(w) => Check {
            name: name.to_string(),
            passed: w <= tol,
            detail: format!("{count} instances, max deviation {w:.3e} (tolerance {tol:.0e})"),
        },
        Err(e) => Check {
            name: name.to_string(),
            passed: false,
            detail: e,
        },
    }
}

fn suite(name: &str, f: impl FnOnce() -> Vec<Check>) -> Suite {
    let start = Instant::now();
    let checks = f();
    Suite {
        name: name.to_string(),
        passed: checks.iter().all(|c| c.passed),
        seconds: start.elapsed().as_secs_f64(),
        checks,
    }
}

/// Pure-state and density-matrix commutators agree.
pub fn oracle_suite(instances: u64) -> Suite {
    suite("oracle equivalence", || {
        let (a, b, c) = (sites([0, 1]), sites([2, 3]), sites([4, 5]));
        vec![
            bounded("6 qubits, 2 sites per region", instances, 1e-8, |seed| {
                let s = random_pure_state(6, Basis::Full, seed)?;
                let rho = DensityMatrix::from_pure(&s)?;
                Ok((modular_commutator_pure(&s, a, b, c)? - modular_commutator_dm(&rho, a, b, c, CUTOFF)?).abs())
            }),
            bounded("8 qubits with a 2-site purifier", instances, 1e-8, |seed| {
                let s = random_pure_state(8, Basis::Full, 1_000_000 + seed)?;
                let rho = DensityMatrix::from_pure(&s)?;
                Ok((modular_commutator_pure(&s, a, b, c)? - modular_commutator_dm(&rho, a, b, c, CUTOFF)?).abs())
            }),
            bounded("bound |J| <= 2 |K_AB psi| |K_BC psi|", instances, 0.0, |seed| {
                let s = random_pure_state(8, Basis::Full, 2_000_000 + seed)?;
                let t = tilde_overlap(&s, a, b, c, CUTOFF)?;
                Ok((t.j.abs() - t.bound()).max(0.0))
            }),
        ]
    })
}

/// Realness, antisymmetry, empty regions, time reversal, additivity,
/// Markov vanishing, real Gibbs states, and the modular-flow derivative.
pub fn identity_suite(instances: u64) -> Suite {
    suite("identities", || {
        let (a, b, c) = (one(0), one(1), one(2));
        let mut checks = vec![
            bounded("realness", instances, 1e-10, |seed| {
                let rho = random_dm(&[2, 2, 2, 2], seed)?;
                Ok(modular_commutator_dm_complex(&rho, one(0), sites([1, 2]), one(3), CUTOFF)?.im.abs())
            }),
            bounded("antisymmetry", instances, 1e-10, |seed| {
                let rho = random_dm(&[2, 2, 2, 2], 100_000 + seed)?;
                let (a, b, c) = (one(0), sites([1, 2]), one(3));
                Ok((modular_commutator_dm(&rho, a, b, c, CUTOFF)? + modular_commutator_dm(&rho, c, b, a, CUTOFF)?).abs())
            }),
            bounded("empty regions", instances, 0.0, |seed| {
                let s = random_pure_state(6, Basis::Full, 200_000 + seed)?;
                let rho = random_dm(&[2, 2, 2], 200_000 + seed)?;
                let e = SiteSet::EMPTY;
                let mut w = 0.0f64;
                for (x, y, z) in [(e, b, c), (a, e, c), (a, b, e)] {
                    w = w
                        .max(modular_commutator_pure(&s, x, y, z)?.abs())
                        .max(modular_commutator_dm(&rho, x, y, z, CUTOFF)?.abs());
                }
                Ok(w)
            }),
            bounded("time reversal", instances, 1e-10, |seed| {
                let rho = random_dm(&[2, 2, 2], 300_000 + seed)?;
                Ok((modular_commutator_dm(&rho, a, b, c, CUTOFF)? + modular_commutator_dm(&rho.conj(), a, b, c, CUTOFF)?).abs())
            }),
            bounded("additivity", instances, 1e-8, |seed| {
                let rho = random_dm(&[2, 2, 2], 400_000 + seed)?;
                let lam = random_dm(&[2, 2, 2], 500_000 + seed)?;
                let j = modular_commutator_dm(&rho.tensor(&lam), sites([0, 3]), sites([1, 4]), sites([2, 5]), CUTOFF)?;
                Ok((j - modular_commutator_dm(&rho, a, b, c, CUTOFF)? - modular_commutator_dm(&lam, a, b, c, CUTOFF)?).abs())
            }),
        ];
        let markov = |seed: u64| -> Result<(DensityMatrix, SiteSet, SiteSet, SiteSet)> {
            let spec = MarkovSpec {
                dim_a: 2 + (seed % 2) as usize,
                dim_b1: 2,
                dim_b2: 2 + seed.is_multiple_of(3) as usize,
                dim_c: 2,
                seed: 600_000 + seed,
            };
            let (x, y, z) = spec.regions();
            Ok((markov_chain_state(&spec)?, x, y, z))
        };
        checks.push(bounded("Markov chains: J", instances, 1e-8, |seed| {
            let (rho, x, y, z) = markov(seed)?;
            Ok(modular_commutator_dm(&rho, x, y, z, CUTOFF)?.abs())
        }));
        checks.push(bounded("Markov chains: I(A:C|B)", instances, 1e-8, |seed| {
            let (rho, x, y, z) = markov(seed)?;
            Ok(cmi(&rho, x, y, z)?.abs())
        }));
        checks.push(bounded("Markov chains: Petz identity", instances, 1e-8, |seed| {
            let (rho, x, y, z) = markov(seed)?;
            petz_defect(&rho, x, y, z, CUTOFF)
        }));
        checks.push(bounded("real Gibbs states", instances, 1e-9, |seed| {
            let beta = 0.2 + (seed % 7) as f64 * 0.4;
            let rho = real_gibbs_state(3, beta, 700_000 + seed)?;
            Ok(modular_commutator_dm(&rho, a, b, c, CUTOFF)?.abs())
        }));
        checks.push(richardson_check(instances));
        checks
    })
}

/// Second differences of the central-difference derivative below this are
/// roundoff (about 1e-11 at h = 1e-3), so their ratio carries no information.
const RICHARDSON_FLOOR: f64 = 1e-10;

fn richardson_check(instances: u64) -> Check {
    let name = "modular flow derivative";
    let mut ratios = Vec::new();
    let mut orders = Vec::new();
    let mut unresolved = 0;
    for seed in 0..instances {
        let run = || -> Result<(Vec<f64>, usize, f64)> {
            let rho = random_dm(&[2, 2, 2], 800_000 + seed)?;
            let (a, b, c) = (one(0), one(1), one(2));
            let j = modular_commutator_dm(&rho, a, b, c, CUTOFF)?;
            let d = |h: f64| modular_flow_entropy_derivative(&rho, a, b, c, h, CUTOFF);
            let mut rs = Vec::new();
            let mut skipped = 0;
            for h in [1e-2, 1e-3] {
                let (d1, d2, d4) = (d(h)?, d(h / 2.0)?, d(h / 4.0)?);
                if (d2 - d4).abs() < RICHARDSON_FLOOR {
                    skipped += 1;
                } else {
                    rs.push((d1 - d2) / (d2 - d4));
                }
            }
            let order = ((d(1e-2)? - j).abs() / (d(1e-3)? - j).abs()).log10();
            Ok((rs, skipped, order))
        };
        match run() {
            Ok((rs, skipped, order)) => {
                ratios.extend(rs);
                unresolved += skipped;
                orders.push(order);
            }
            Err(e) => {
                return Check {
                    name: name.to_string(),
                    passed: false,
                    detail: format!("seed {seed}: {e}"),
                }
            }
        }
    }
    let rmin = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let rmax = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let omin = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let omax = orders.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let enough = ratios.len() * 10 >= 2 * instances as usize * 9;
    Check {
        name: name.to_string(),
        passed: enough
            && (rmin - 4.0).abs() <= 0.5
            && (rmax - 4.0).abs() <= 0.5
            && (omin - 2.0).abs() <= 0.2
            && (omax - 2.0).abs() <= 0.2,
        detail: format!(
            "{instances} states; Richardson ratios in [{rmin:.3}, {rmax:.3}] ({unresolved} of {} below the {RICHARDSON_FLOOR:.0e} roundoff floor), observed order in [{omin:.3}, {omax:.3}]",
            2 * instances
        ),
    }
}

const A_REF: f64 = -6.665;
const B_REF: f64 = 0.845;
const C_REF: f64 = 1.054;

fn reference_curve(n: f64) -> f64 {
    C_REF + A_REF * (-B_REF * n.sqrt()).exp()
}

fn synthetic(noise: impl Fn(usize) -> f64, sigma: f64) -> Result<Dataset> {
    Dataset::new(
        (12..=26)
            .step_by(2)
            .map(|n| DataPoint {
                n,
                mean: reference_curve(n as f64) + noise(n),
                stderr: sigma,
                count: 1000,
            })
            .collect(),
    )
}

/// Parameter recovery, analytic Jacobians, and interval coverage.
pub fn fitting_suite(coverage_trials: u64) -> Suite {
    suite("fitting", || {
        let mut checks = Vec::new();
        let recovery = (|| -> Result<(f64, bool)> {
            let ds = synthetic(|_| 0.0, 0.01)?;
            let f = fit(&ds, Model::Exponential { d: Some(0.5) }, None, &FitOptions::default())?;
            let dev = f
                .params
                .iter()
                .zip([A_REF, B_REF, C_REF])
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max);
            Ok((dev, f.converged))
        })();
        checks.push(match recovery {
            Ok((dev, conv)) => Check {
                name: "noiseless recovery".into(),
                passed: conv && dev <= 1e-6,
                detail: format!("max parameter deviation {dev:.3e}, converged {conv}"),
            },
            Err(e) => Check {
                name: "noiseless recovery".into(),
                passed: false,
                detail: e.to_string(),
            },
        });

        let mut rng = seeded_rng(4242);
        let mut jac = 0.0f64;
        for _ in 0..200 {
            let p = [rng.random_range(-8.0..8.0), rng.random_range(0.1..1.5), rng.random_range(-2.0..2.0), rng.random_range(0.3..0.8)];
            let x = rng.random_range(4.0..40.0);
            for (model, params) in [
                (Model::Exponential { d: None }, p.to_vec()),
                (Model::Power { b: None }, p[..3].to_vec()),
            ] {
                for (i, g) in model.gradient(&params, x).iter().enumerate() {
                    let h = 1e-6 * params[i].abs().max(1.0);
                    let mut hi = params.clone();
                    let mut lo = params.clone();
                    hi[i] += h;
                    lo[i] -= h;
                    let fd = (model.value(&hi, x) - model.value(&lo, x)) / (2.0 * h);
                    jac = jac.max((g - fd).abs() / g.abs().max(fd.abs()).max(1e-3));
                }
            }
        }
        checks.push(Check {
            name: "Jacobian vs finite differences".into(),
            passed: jac <= 1e-6,
            detail: format!("200 random points, max relative deviation {jac:.3e}"),
        });

        let sigma = 0.004;
        let normal = Normal::new(0.0, sigma).unwrap();
        let opts = FitOptions {
            trusted_weights: true,
            ..FitOptions::default()
        };
        let mut covered = 0;
        let mut failures = 0;
        for trial in 0..coverage_trials {
            let mut rng = seeded_rng(10_000 + trial);
            let noise: BTreeMap<usize, f64> = (12..=26).step_by(2).map(|n| (n, normal.sample(&mut rng))).collect();
            match synthetic(|n| noise[&n], sigma).and_then(|ds| fit(&ds, Model::Exponential { d: Some(0.5) }, None, &opts)) {
                Ok(f) if f.converged => {
                    if (f.extrapolated - C_REF).abs() <= 2.0 * f.extrapolated_stderr {
                        covered += 1;
                    }
                }
                _ => failures += 1,
            }
        }
        let need = (coverage_trials * 9).div_ceil(10);
        checks.push(Check {
            name: "coverage of the 2-sigma interval".into(),
            passed: failures == 0 && covered >= need,
            detail: format!("{covered}/{coverage_trials} covered, {failures} failed fits"),
        });
        checks
    })
}

fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn exact(name: &str, f: impl FnOnce() -> Result<std::result::Result<String, String>>) -> Check {
    let (passed, detail) = match f() {
        Ok(Ok(d)) => (true, d),
        Ok(Err(d)) => (false, d),
        Err(e) => (false, e.to_string()),
    };
    Check {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// Exact modular-current identities on triangular disks.
pub fn current_suite(partitions: u64) -> Suite {
    suite("modular current", || {
        let mut checks = Vec::new();
        let want: BTreeMap<String, BigRational> = [
            ("ax", rational(-5, 36)),
            ("ay", rational(1, 9)),
            ("aw", rational(1, 18)),
            ("bx", rational(1, 9)),
            ("bz", rational(1, 18)),
            ("cx", rational(1, 18)),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        for r in [3, 4] {
            checks.push(exact(&format!("boundary pair table, radius {r}"), || {
                let got = CurrentCalculus::new(TriangularDisk::new(r)?).boundary_table()?;
                Ok(if got == want { Ok(fmt_table(&got)) } else { Err(fmt_table(&got)) })
            }));
            checks.push(exact(&format!("edge current, radius {r}"), || {
                let f = CurrentCalculus::new(TriangularDisk::new(r)?).edge_current()?;
                Ok(if f == rational(1, 4) { Ok(f.to_string()) } else { Err(f.to_string()) })
            }));
            checks.push(exact(&format!("bulk currents, radius {r}"), || {
                let v = CurrentCalculus::new(TriangularDisk::new(r)?).bulk_violations()?;
                Ok(if v.is_empty() { Ok("all zero".into()) } else { Err(format!("{} nonzero pairs", v.len())) })
            }));
            checks.push(exact(&format!("conservation, radius {r}"), || {
                let v = CurrentCalculus::new(TriangularDisk::new(r)?).conservation_violations()?;
                Ok(if v.is_empty() { Ok("sum over v of f_vu = 0 for every u".into()) } else { Err(format!("violated at {v:?}")) })
            }));
            checks.push(exact(&format!("decomposition sum, radius {r}"), || {
                let disk = TriangularDisk::new(r)?;
                let got = summed_terms(&local_terms(&disk));
                let mut expect = BTreeMap::new();
                for f in disk.faces() {
                    expect.insert(f.clone(), BigRational::one());
                }
                for e in disk.edges() {
                    if !e.iter().all(|&w| disk.is_boundary(w)) {
                        expect.insert(e.clone(), -BigRational::one());
                    }
                }
                for v in disk.interior() {
                    expect.insert(vec![v], BigRational::one());
                }
                Ok(if got == expect { Ok(format!("{} supports", got.len())) } else { Err("coefficients differ".into()) })
            }));
        }
        checks.push(exact("region identities on random partitions", || {
            let disk = TriangularDisk::new(3)?;
            let mut calc = CurrentCalculus::new(disk.clone());
            let mut rng = seeded_rng(31337);
            for trial in 0..partitions {
                let mut parts: [BTreeSet<Vertex>; 3] = Default::default();
                for &v in disk.vertices() {
                    parts[rng.random_range(0..3)].insert(v);
                }
                let [l, r, c] = &parts;
                let lr = calc.region_current(l, r)?;
                let rest: BTreeSet<Vertex> = disk.vertices().difference(l).copied().collect();
                let (l1, l2): (BTreeSet<Vertex>, BTreeSet<Vertex>) = l.iter().partition(|v| (v.0 + v.1).rem_euclid(2) == 0);
                let ok = lr == calc.region_current(r, c)?
                    && lr == calc.region_current(c, l)?
                    && calc.region_current(l, &rest)?.is_zero()
                    && lr == calc.region_current(&l1, r)? + calc.region_current(&l2, r)?;
                if !ok {
                    return Ok(Err(format!("partition {trial} violates an identity")));
                }
            }
            Ok(Ok(format!("{partitions} partitions")))
        }));
        checks
    })
}

fn fmt_table(t: &BTreeMap<String, BigRational>) -> String {
    t.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
}

pub fn run_all(instances: u64) -> CheckReport {
    let suites = vec![
        oracle_suite(instances),
        identity_suite(instances),
        fitting_suite(instances),
        current_suite(20),
    ];
    CheckReport {
        passed: suites.iter().all(|s| s.passed),
        suites,
    }
}
