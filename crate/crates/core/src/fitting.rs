//! Weighted nonlinear least squares for finite-size extrapolation.
//!
//! Two ansatz families, `a x^{-b} + c` and `a e^{-b x^d} + c`, fitted by
//! Levenberg–Marquardt with an analytic Jacobian. The extrapolated value is `c`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One finite-size point: the sample mean at `n` and its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
    pub count: u64,
}

/// Rows with strictly increasing `n` and positive standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<DataPoint>", into = "Vec<DataPoint>")]
pub struct Dataset {
    rows: Vec<DataPoint>,
}

impl Dataset {
    pub fn new(rows: Vec<DataPoint>) -> Result<Self> {
        for (i, r) in rows.iter().enumerate() {
            if !(r.stderr > 0.0 && r.stderr.is_finite()) {
                return Err(Error::Validation(format!(
                    "row {i}: stderr {} must be positive and finite",
                    r.stderr
                )));
            }
            if !r.mean.is_finite() {
                return Err(Error::Validation(format!("row {i}: mean is not finite")));
            }
            if r.n == 0 {
                return Err(Error::Validation(format!("row {i}: n must be positive")));
            }
            if i > 0 && rows[i - 1].n >= r.n {
                return Err(Error::Validation(format!(
                    "row {i}: n must be strictly increasing"
                )));
            }
        }
        Ok(Dataset { rows })
    }

    pub fn rows(&self) -> &[DataPoint] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

impl TryFrom<Vec<DataPoint>> for Dataset {
    type Error = Error;
    fn try_from(rows: Vec<DataPoint>) -> Result<Self> {
        Dataset::new(rows)
    }
}

impl From<Dataset> for Vec<DataPoint> {
    fn from(ds: Dataset) -> Self {
        ds.rows
    }
}

/// Fit ansatz. A `Some` exponent is held fixed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Model {
    /// `a x^{-b} + c`
    Power { b: Option<f64> },
    /// `a e^{-b x^d} + c`
    Exponential { d: Option<f64> },
}

impl Model {
    pub fn id(&self) -> String {
        match *self {
            Model::Power { b: None } => "power".into(),
            Model::Power { b: Some(b) } => format!("power(b={b})"),
            Model::Exponential { d: None } => "exponential".into(),
            Model::Exponential { d: Some(d) } => format!("exponential(d={d})"),
        }
    }

    /// Names of the free parameters, in fit order.
    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            Model::Power { b: None } => &["a", "b", "c"],
            Model::Power { b: Some(_) } => &["a", "c"],
            Model::Exponential { d: None } => &["a", "b", "c", "d"],
            Model::Exponential { d: Some(_) } => &["a", "b", "c"],
        }
    }

    pub fn n_params(&self) -> usize {
        self.param_names().len()
    }

    /// Index of `c` among the free parameters.
    pub fn c_index(&self) -> usize {
        self.param_names().iter().position(|&p| p == "c").unwrap()
    }

    /// `(a, b, c, d)` with the fixed exponent filled in (`d` unused by the power law).
    fn expand(&self, p: &[f64]) -> (f64, f64, f64, f64) {
        match *self {
            Model::Power { b: None } => (p[0], p[1], p[2], 0.0),
            Model::Power { b: Some(b) } => (p[0], b, p[1], 0.0),
            Model::Exponential { d: None } => (p[0], p[1], p[2], p[3]),
            Model::Exponential { d: Some(d) } => (p[0], p[1], p[2], d),
        }
    }

    pub fn value(&self, p: &[f64], x: f64) -> f64 {
        let (a, b, c, d) = self.expand(p);
        match self {
            Model::Power { .. } => a * x.powf(-b) + c,
            Model::Exponential { .. } => a * (-b * x.powf(d)).exp() + c,
        }
    }

    /// Partial derivatives of [`Model::value`] with respect to the free parameters.
    pub fn gradient(&self, p: &[f64], x: f64) -> Vec<f64> {
        let (a, b, _, d) = self.expand(p);
        match *self {
            Model::Power { b: fixed } => {
                let xb = x.powf(-b);
                match fixed {
                    None => vec![xb, -a * xb * x.ln(), 1.0],
                    Some(_) => vec![xb, 1.0],
                }
            }
            Model::Exponential { d: fixed } => {
                let xd = x.powf(d);
                let e = (-b * xd).exp();
                let mut g = vec![e, -a * xd * e, 1.0];
                if fixed.is_none() {
                    g.push(-a * b * xd * x.ln() * e);
                }
                g
            }
        }
    }

    /// Starting point: `c` from the last mean, `a` from the first, `b = 1/√N_min`, `d = 0.5`.
    pub fn initial_guess(&self, ds: &Dataset) -> Vec<f64> {
        let rows = ds.rows();
        let c0 = rows[rows.len() - 1].mean;
        let a0 = rows[0].mean - c0;
        let b0 = 1.0 / (rows[0].n as f64).sqrt();
        match self {
            Model::Power { b: None } => vec![a0, b0, c0],
            Model::Power { b: Some(_) } => vec![a0, c0],
            Model::Exponential { d: None } => vec![a0, b0, c0, 0.5],
            Model::Exponential { d: Some(_) } => vec![a0, b0, c0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Converged when `‖Jᵀr‖_∞ ≤ gradient_tol · max(1, SSR)`, or when every
    /// column of `J` is orthogonal to `r` to within `gradient_tol` (cosine).
    pub gradient_tol: f64,
    pub initial_damping: f64,
    /// Use `σ² = 1` (known standard errors) instead of `SSR/(n-p)`.
    pub trusted_weights: bool,
    /// Fail with [`Error::RankDeficient`] instead of reporting infinite standard errors.
    pub strict_rank: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 500,
            gradient_tol: 1e-6,
            initial_damping: 1e-3,
            trusted_weights: false,
            strict_rank: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: String,
    pub param_names: Vec<String>,
    pub params: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub extrapolated: f64,
    pub extrapolated_stderr: f64,
    pub ssr: f64,
    pub converged: bool,
    pub rank_deficient: bool,
    pub iterations: usize,
    /// SSR after each accepted step, starting from the initial point.
    pub ssr_history: Vec<f64>,
}

struct Problem<'a> {
    model: Model,
    ds: &'a Dataset,
}

impl Problem<'_> {
    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.ds.len(),
            self.ds
                .rows()
                .iter()
                .map(|r| (self.model.value(p, r.n as f64) - r.mean) / r.stderr),
        )
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let k = self.model.n_params();
        let mut j = DMatrix::zeros(self.ds.len(), k);
        for (i, r) in self.ds.rows().iter().enumerate() {
            for (col, g) in self.model.gradient(p, r.n as f64).into_iter().enumerate() {
                j[(i, col)] = g / r.stderr;
            }
        }
        j
    }
}

fn ssr_of(r: &DVector<f64>) -> f64 {
    r.norm_squared()
}

fn is_stationary(jac: &DMatrix<f64>, r: &DVector<f64>, tol: f64) -> bool {
    let grad = jac.transpose() * r;
    let ssr = ssr_of(r);
    if grad.amax() <= tol * ssr.max(1.0) {
        return true;
    }
    let rn = ssr.sqrt();
    grad.iter().enumerate().all(|(j, g)| {
        let cn = jac.column(j).norm();
        cn == 0.0 || g.abs() <= tol * cn * rn
    })
}

/// Minimize `Σ ((f(N) - mean)/stderr)²` starting from `init` (or [`Model::initial_guess`]).
pub fn fit(ds: &Dataset, model: Model, init: Option<&[f64]>, opts: &FitOptions) -> Result<FitResult> {
    let k = model.n_params();
    if ds.len() < k + 1 {
        return Err(Error::Validation(format!(
            "{} needs at least {} rows, got {}",
            model.id(),
            k + 1,
            ds.len()
        )));
    }
    let mut p = match init {
        Some(v) if v.len() == k => v.to_vec(),
        Some(v) => {
            return Err(Error::Validation(format!(
                "{} takes {k} parameters, got {}",
                model.id(),
                v.len()
            )))
        }
        None => model.initial_guess(ds),
    };
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("initial parameters must be finite".into()));
    }
    let prob = Problem { model, ds };
    let mut r = prob.residuals(&p);
    let mut ssr = ssr_of(&r);
    if !ssr.is_finite() {
        return Err(Error::Validation("model is not finite at the initial point".into()));
    }
    let mut history = vec![ssr];
    let mut lambda = opts.initial_damping;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        let jac = prob.jacobian(&p);
        // iterate to the rounding floor; stationarity is judged afterwards
        if (jac.transpose() * &r).amax() <= f64::EPSILON * ssr.max(f64::MIN_POSITIVE).sqrt() {
            converged = true;
            break;
        }
        iterations += 1;
        let scaled = ScaledSvd::new(&jac);
        let mut accepted = false;
        while lambda < 1e20 {
            let step = scaled.damped_step(&r, lambda);
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let tr = prob.residuals(&trial);
            let tssr = ssr_of(&tr);
            if tssr.is_finite() && tssr < ssr {
                p = trial;
                r = tr;
                ssr = tssr;
                history.push(ssr);
                lambda = (lambda / 10.0).max(1e-15);
                accepted = true;
                break;
            }
            // no further decrease is representable
            if step.iter().zip(&p).all(|(s, v)| s.abs() <= 1e-15 * v.abs().max(1e-300)) {
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    if !converged {
        converged = is_stationary(&prob.jacobian(&p), &r, opts.gradient_tol);
    }

    let jac = prob.jacobian(&p);
    let (cov, deficient) = ScaledSvd::new(&jac).pseudo_inverse_normal();
    if deficient.iter().any(|&d| d) && opts.strict_rank {
        return Err(Error::RankDeficient);
    }
    let dof = ds.len() - k;
    let sigma2 = if opts.trusted_weights { 1.0 } else { ssr / dof as f64 };
    let cov = cov * sigma2;
    let stderrs: Vec<f64> = (0..k)
        .map(|i| {
            if deficient[i] {
                f64::INFINITY
            } else {
                cov[(i, i)].max(0.0).sqrt()
            }
        })
        .collect();
    let ci = model.c_index();
    Ok(FitResult {
        model: model.id(),
        param_names: model.param_names().iter().map(|s| s.to_string()).collect(),
        extrapolated: p[ci],
        extrapolated_stderr: stderrs[ci],
        params: p,
        stderrs,
        covariance: (0..k).map(|i| (0..k).map(|j| cov[(i, j)]).collect()).collect(),
        ssr,
        converged,
        rank_deficient: deficient.iter().any(|&d| d),
        iterations,
        ssr_history: history,
    })
}

/// SVD of the Jacobian with unit-norm columns, `J = U Σ Vᵀ S`.
///
/// Damping `λ·diag(JᵀJ)` becomes `λ·I` in the scaled coordinates, and the
/// normal matrix is never formed.
struct ScaledSvd {
    scale: Vec<f64>,
    u: DMatrix<f64>,
    sigma: DVector<f64>,
    v_t: DMatrix<f64>,
}

impl ScaledSvd {
    fn new(jac: &DMatrix<f64>) -> Self {
        let scale: Vec<f64> = (0..jac.ncols())
            .map(|j| {
                let n = jac.column(j).norm();
                if n > 0.0 {
                    n
                } else {
                    1.0
                }
            })
            .collect();
        let mut js = jac.clone();
        for (j, &s) in scale.iter().enumerate() {
            js.column_mut(j).scale_mut(1.0 / s);
        }
        let svd = js.svd(true, true);
        ScaledSvd {
            scale,
            u: svd.u.expect("u requested"),
            sigma: svd.singular_values,
            v_t: svd.v_t.expect("v_t requested"),
        }
    }

    /// Minimizer of `‖J δ + r‖² + λ ‖S δ‖²`.
    fn damped_step(&self, r: &DVector<f64>, lambda: f64) -> Vec<f64> {
        let ur = self.u.transpose() * r;
        let k = self.scale.len();
        let mut ds = DVector::zeros(k);
        for (i, &s) in self.sigma.iter().enumerate() {
            let w = -s / (s * s + lambda) * ur[i];
            ds += self.v_t.row(i).transpose() * w;
        }
        (0..k).map(|j| ds[j] / self.scale[j]).collect()
    }

    /// `(JᵀJ)⁺` and which parameters touch its null space.
    fn pseudo_inverse_normal(&self) -> (DMatrix<f64>, Vec<bool>) {
        let k = self.scale.len();
        let top = self.sigma.amax();
        let mut inv = DMatrix::zeros(k, k);
        let mut deficient = vec![false; k];
        for (i, &s) in self.sigma.iter().enumerate() {
            let v = self.v_t.row(i).transpose();
            if s > top * 1e-10 {
                inv += (&v * v.transpose()) / (s * s);
            } else {
                for j in 0..k {
                    if v[j].abs() > 1e-8 {
                        deficient[j] = true;
                    }
                }
            }
        }
        for i in 0..k {
            for j in 0..k {
                inv[(i, j)] /= self.scale[i] * self.scale[j];
            }
        }
        (inv, deficient)
    }
}

/// Family for [`scan_exponent`]: which exponent is held fixed at each grid point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Power,
    Exponential,
}

impl Family {
    pub fn with_exponent(self, e: f64) -> Model {
        match self {
            Family::Power => Model::Power { b: Some(e) },
            Family::Exponential => Model::Exponential { d: Some(e) },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub exponent: f64,
    pub fit: Option<FitResult>,
    pub error: Option<String>,
}

/// One fixed-exponent fit per grid value; failures are recorded, not raised.
pub fn scan_exponent(
    ds: &Dataset,
    family: Family,
    grid: &[f64],
    opts: &FitOptions,
) -> Result<Vec<ScanPoint>> {
    if grid.is_empty() {
        return Err(Error::Validation("exponent grid is empty".into()));
    }
    Ok(grid
        .iter()
        .map(|&e| match fit(ds, family.with_exponent(e), None, opts) {
            Ok(f) => ScanPoint {
                exponent: e,
                fit: Some(f),
                error: None,
            },
            Err(err) => ScanPoint {
                exponent: e,
                fit: None,
                error: Some(err.to_string()),
            },
        })
        .collect())
}
