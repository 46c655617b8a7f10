//! Weighted least-squares fitters with covariance-based uncertainties.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("x, y and yerr lengths differ")]
    LengthMismatch,
    #[error("uncertainties must be positive and finite")]
    BadUncertainty,
    #[error("power-law fit needs positive x and y")]
    NonPositive,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("fit did not converge (chi2_red {})", .best.chi2_red)]
    NoConvergence { best: Box<FitResult> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// One standard error per point.
    pub yerr: Vec<f64>,
    /// Shots behind each point; empty when not applicable.
    pub shots: Vec<u64>,
    pub meta: BTreeMap<String, String>,
}

impl Dataset {
    pub fn new(x: Vec<f64>, y: Vec<f64>, yerr: Vec<f64>) -> Result<Self, FitError> {
        if x.len() != y.len() || y.len() != yerr.len() {
            return Err(FitError::LengthMismatch);
        }
        if yerr.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(FitError::BadUncertainty);
        }
        Ok(Self { x, y, yerr, shots: Vec::new(), meta: BTreeMap::new() })
    }

    /// Success fractions with binomial errors.
    pub fn from_counts(x: Vec<f64>, successes: &[u64], shots: &[u64]) -> Result<Self, FitError> {
        if successes.len() != shots.len() {
            return Err(FitError::LengthMismatch);
        }
        let (y, yerr): (Vec<f64>, Vec<f64>) = successes.iter().zip(shots).map(|(&k, &n)| binomial(k, n)).unzip();
        let mut d = Self::new(x, y, yerr)?;
        d.shots = shots.to_vec();
        Ok(d)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn with_meta(mut self, key: &str, value: &str) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }
}

/// Fraction k/n and its standard error. At k = 0 or k = n the error uses
/// (k + 0.5)/(n + 1) so it never vanishes.
pub fn binomial(k: u64, n: u64) -> (f64, f64) {
    let nf = n.max(1) as f64;
    let p = k as f64 / nf;
    let pe = if k == 0 || k >= n { (k as f64 + 0.5) / (nf + 1.0) } else { p };
    (p, (pe * (1.0 - pe) / nf).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Model {
    /// A exp(-x/T)
    Exponential,
    /// A p^x + 0.5
    RbSurvival,
    /// A f^x
    Geometric,
    /// A exp(-2 (x - c)^2 / w^2) + B
    Gaussian,
    /// offset + C cos(N x + phase)
    Fringe { n: f64 },
    /// A x^(-alpha)
    PowerLaw,
    /// slope x + intercept
    Linear,
}

impl Model {
    pub fn names(&self) -> &'static [&'static str] {
        match self {
            Model::Exponential => &["amplitude", "decay"],
            Model::RbSurvival => &["amplitude", "p"],
            Model::Geometric => &["amplitude", "f"],
            Model::Gaussian => &["amplitude", "center", "waist", "offset"],
            Model::Fringe { .. } => &["contrast", "phase", "offset"],
            Model::PowerLaw => &["amplitude", "alpha"],
            Model::Linear => &["slope", "intercept"],
        }
    }

    pub fn eval(&self, x: f64, p: &[f64]) -> f64 {
        match self {
            Model::Exponential => p[0] * (-x / p[1]).exp(),
            Model::RbSurvival => p[0] * p[1].powf(x) + 0.5,
            Model::Geometric => p[0] * p[1].powf(x),
            Model::Gaussian => p[0] * (-2.0 * (x - p[1]).powi(2) / (p[2] * p[2])).exp() + p[3],
            Model::Fringe { n } => p[2] + p[0] * (n * x + p[1]).cos(),
            Model::PowerLaw => p[0] * x.powf(-p[1]),
            Model::Linear => p[0] * x + p[1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: Model,
    pub names: Vec<String>,
    pub params: Vec<f64>,
    /// 1 sigma statistical errors, sqrt of the covariance diagonal.
    pub errors: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub chi2_red: f64,
    pub converged: bool,
    /// Parametric-bootstrap standard deviations, when requested.
    pub bootstrap_errors: Option<Vec<f64>>,
}

impl FitResult {
    fn new(model: Model, params: Vec<f64>, cov: &DMatrix<f64>, chi2: f64, dof: usize, converged: bool) -> Self {
        let k = params.len();
        let covariance: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| 0.5 * (cov[(i, j)] + cov[(j, i)])).collect()).collect();
        let errors = (0..k).map(|i| covariance[i][i].max(0.0).sqrt()).collect();
        Self {
            model,
            names: model.names().iter().map(|s| s.to_string()).collect(),
            params,
            errors,
            covariance,
            chi2_red: if dof > 0 { chi2 / dof as f64 } else { 0.0 },
            converged,
            bootstrap_errors: None,
        }
    }

    /// (value, 1 sigma error) of a named parameter.
    pub fn get(&self, name: &str) -> Option<(f64, f64)> {
        let i = self.names.iter().position(|n| n == name)?;
        Some((self.params[i], self.errors[i]))
    }

    pub fn value(&self, name: &str) -> f64 {
        self.get(name).map(|v| v.0).unwrap_or(f64::NAN)
    }

    pub fn error(&self, name: &str) -> f64 {
        self.get(name).map(|v| v.1).unwrap_or(f64::NAN)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.model.eval(x, &self.params)
    }
}

fn check(ds: &Dataset, need: usize) -> Result<(), FitError> {
    if ds.x.len() != ds.y.len() || ds.y.len() != ds.yerr.len() {
        return Err(FitError::LengthMismatch);
    }
    if ds.yerr.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(FitError::BadUncertainty);
    }
    if ds.len() < need {
        return Err(FitError::TooFewPoints { need, got: ds.len() });
    }
    Ok(())
}

/// Weighted linear least squares for y = sum_k p_k g_k(x). Returns (p, cov, chi2).
fn linear_lsq(rows: &[Vec<f64>], y: &[f64], sigma: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>, f64), FitError> {
    let n = rows.len();
    let k = rows[0].len();
    let a = DMatrix::from_fn(n, k, |i, j| rows[i][j] / sigma[i]);
    let b = DVector::from_fn(n, |i, _| y[i] / sigma[i]);
    let ata = a.transpose() * &a;
    let cov = ata.clone().try_inverse().ok_or_else(|| FitError::Degenerate("singular normal matrix".into()))?;
    let p = &cov * (a.transpose() * &b);
    let chi2 = (&a * &p - b).norm_squared();
    Ok((p, cov, chi2))
}

struct Lm {
    params: Vec<f64>,
    cov: DMatrix<f64>,
    chi2: f64,
    converged: bool,
}

fn chi2_of(model: Model, ds: &Dataset, p: &[f64]) -> f64 {
    ds.x.iter().zip(&ds.y).zip(&ds.yerr).map(|((&x, &y), &s)| ((y - model.eval(x, p)) / s).powi(2)).sum()
}

fn jacobian(model: Model, ds: &Dataset, p: &[f64], scales: &[f64]) -> DMatrix<f64> {
    let k = p.len();
    DMatrix::from_fn(ds.len(), k, |i, j| {
        let h = 1e-6 * (p[j].abs() + scales[j]);
        let mut hi = p.to_vec();
        let mut lo = p.to_vec();
        hi[j] += h;
        lo[j] -= h;
        (model.eval(ds.x[i], &hi) - model.eval(ds.x[i], &lo)) / (2.0 * h * ds.yerr[i])
    })
}

/// Levenberg-Marquardt with a central-difference Jacobian. `scales` sets the
/// finite-difference step floor per parameter.
fn levenberg_marquardt(model: Model, ds: &Dataset, p0: Vec<f64>, scales: &[f64]) -> Lm {
    let k = p0.len();
    let mut p = p0;
    let mut chi2 = chi2_of(model, ds, &p);
    let mut lambda = 1e-3;
    let mut converged = false;
    for _ in 0..1000 {
        if chi2 < 1e-28 {
            converged = true;
            break;
        }
        let j = jacobian(model, ds, &p, scales);
        let r = DVector::from_fn(ds.len(), |i, _| (ds.y[i] - model.eval(ds.x[i], &p)) / ds.yerr[i]);
        let jtj = j.transpose() * &j;
        let g = j.transpose() * r;
        let mut improved = false;
        while lambda < 1e16 {
            let mut m = jtj.clone();
            for d in 0..k {
                m[(d, d)] += lambda * jtj[(d, d)].max(1e-300);
            }
            let Some(step) = m.lu().solve(&g) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let c = chi2_of(model, ds, &trial);
            if c.is_finite() && c <= chi2 {
                let small = step.iter().zip(&trial).zip(scales).all(|((s, t), sc)| s.abs() <= 1e-13 * (t.abs() + sc));
                let flat = chi2 - c <= 1e-15 * chi2.max(1e-300);
                p = trial;
                chi2 = c;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if small || flat {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // No downhill step at any damping: a minimum to working precision.
            converged = true;
        }
        if converged {
            break;
        }
    }
    let j = jacobian(model, ds, &p, scales);
    let jtj = j.transpose() * &j;
    let cov = jtj.clone().try_inverse().unwrap_or_else(|| {
        converged = false;
        DMatrix::from_element(k, k, f64::INFINITY)
    });
    Lm { params: p, cov, chi2, converged }
}

fn finish(model: Model, ds: &Dataset, lm: Lm) -> Result<FitResult, FitError> {
    let dof = ds.len().saturating_sub(lm.params.len());
    let fit = FitResult::new(model, lm.params, &lm.cov, lm.chi2, dof, lm.converged);
    if fit.converged && fit.params.iter().all(|v| v.is_finite()) {
        Ok(fit)
    } else {
        Err(FitError::NoConvergence { best: Box::new(fit) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayForm {
    /// A exp(-x/T)
    Exponential,
    /// A p^x + 0.5
    RbSurvival,
    /// A f^x
    Geometric,
}

/// Log-linear start values (amplitude, rate per unit x) from the positive points.
fn log_linear_guess(x: &[f64], y: &[f64], offset: f64) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).map(|(&a, &b)| (a, b - offset)).filter(|p| p.1 > 0.0).collect();
    if pts.len() < 2 {
        let a = pts.first().map(|p| p.1).unwrap_or(0.5);
        return (a, 0.0);
    }
    let rows: Vec<Vec<f64>> = pts.iter().map(|p| vec![p.0, 1.0]).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    match linear_lsq(&rows, &ly, &vec![1.0; pts.len()]) {
        Ok((p, _, _)) => (p[1].exp(), p[0]),
        Err(_) => (pts[0].1, 0.0),
    }
}

pub fn fit_decay(ds: &Dataset, form: DecayForm) -> Result<FitResult, FitError> {
    check(ds, 4)?;
    let span = ds.x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let (a0, slope) = log_linear_guess(&ds.x, &ds.y, if form == DecayForm::RbSurvival { 0.5 } else { 0.0 });
    let (model, p0, scales) = match form {
        DecayForm::Exponential => {
            let t0 = if slope < 0.0 { -1.0 / slope } else { 10.0 * span };
            (Model::Exponential, vec![a0, t0], vec![a0.abs().max(1e-12), span])
        }
        DecayForm::RbSurvival => (Model::RbSurvival, vec![a0.min(0.5), slope.min(0.0).exp()], vec![0.5, 1e-9]),
        DecayForm::Geometric => (Model::Geometric, vec![a0, slope.min(0.0).exp()], vec![a0.abs().max(1e-12), 1e-9]),
    };
    finish(model, ds, levenberg_marquardt(model, ds, p0, &scales))
}

pub fn fit_gaussian(ds: &Dataset) -> Result<FitResult, FitError> {
    check(ds, 5)?;
    let (imax, _) = ds.y.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let lo = ds.y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ds.y[imax];
    if !(hi > lo) {
        return Err(FitError::Degenerate("flat profile".into()));
    }
    let c = ds.x[imax];
    let (mut m0, mut m2) = (0.0, 0.0);
    for (&x, &y) in ds.x.iter().zip(&ds.y) {
        m0 += y - lo;
        m2 += (y - lo) * (x - c).powi(2);
    }
    let w = 2.0 * (m2 / m0).sqrt();
    let xs = ds.x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(w);
    let ys = hi - lo;
    let p0 = vec![ys, c, w, lo];
    let scales = [ys, xs, xs, ys];
    let mut fit = finish(Model::Gaussian, ds, levenberg_marquardt(Model::Gaussian, ds, p0, &scales))?;
    fit.params[2] = fit.params[2].abs();
    Ok(fit)
}

/// Sinusoid at fixed angular frequency `n`, solved as a linear problem in
/// the cosine and sine quadratures.
pub fn fit_fringe(ds: &Dataset, n: f64) -> Result<FitResult, FitError> {
    check(ds, 3)?;
    let rows: Vec<Vec<f64>> = ds.x.iter().map(|&x| vec![(n * x).cos(), (n * x).sin(), 1.0]).collect();
    let (q, cq, chi2) = linear_lsq(&rows, &ds.y, &ds.yerr)?;
    let (a, b) = (q[0], q[1]);
    let c = a.hypot(b);
    let phase = (-b).atan2(a);
    // Jacobian of (C, phase, offset) with respect to (a, b, offset).
    let (ua, ub) = if c > 1e-300 { (a / c, b / c) } else { (1.0, 0.0) };
    let c2 = (c * c).max(1e-300);
    let t = DMatrix::from_row_slice(3, 3, &[ua, ub, 0.0, b / c2, -a / c2, 0.0, 0.0, 0.0, 1.0]);
    let cov = &t * cq * t.transpose();
    let dof = ds.len().saturating_sub(3);
    Ok(FitResult::new(Model::Fringe { n }, vec![c, phase, q[2]], &cov, chi2, dof, true))
}

/// y = A x^(-alpha) by weighted regression of ln y on ln x.
pub fn fit_power_law(ds: &Dataset) -> Result<FitResult, FitError> {
    check(ds, 3)?;
    if ds.x.iter().chain(&ds.y).any(|v| !(*v > 0.0)) {
        return Err(FitError::NonPositive);
    }
    let rows: Vec<Vec<f64>> = ds.x.iter().map(|&x| vec![x.ln(), 1.0]).collect();
    let ly: Vec<f64> = ds.y.iter().map(|y| y.ln()).collect();
    let ls: Vec<f64> = ds.yerr.iter().zip(&ds.y).map(|(e, y)| e / y).collect();
    let (q, cq, chi2) = linear_lsq(&rows, &ly, &ls)?;
    let amp = q[1].exp();
    let t = DMatrix::from_row_slice(2, 2, &[0.0, amp, -1.0, 0.0]);
    let cov = &t * cq * t.transpose();
    Ok(FitResult::new(Model::PowerLaw, vec![amp, -q[0]], &cov, chi2, ds.len() - 2, true))
}

pub fn fit_linear(ds: &Dataset) -> Result<FitResult, FitError> {
    check(ds, 2)?;
    let rows: Vec<Vec<f64>> = ds.x.iter().map(|&x| vec![x, 1.0]).collect();
    let (q, cov, chi2) = linear_lsq(&rows, &ds.y, &ds.yerr)?;
    Ok(FitResult::new(Model::Linear, vec![q[0], q[1]], &cov, chi2, ds.len() - 2, true))
}

/// Parametric bootstrap: refits `resamples` synthetic datasets drawn around
/// the fitted curve and stores the parameter standard deviations in the fit.
pub fn bootstrap<F>(ds: &Dataset, fit: &mut FitResult, fitter: F, resamples: usize, seed: u64) -> Vec<f64>
where
    F: Fn(&Dataset) -> Result<FitResult, FitError>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = fit.params.len();
    let mut samples: Vec<Vec<f64>> = vec![Vec::with_capacity(resamples); k];
    for _ in 0..resamples {
        let mut d = ds.clone();
        for i in 0..d.len() {
            let z: f64 = StandardNormal.sample(&mut rng);
            d.y[i] = fit.eval(d.x[i]) + z * d.yerr[i];
        }
        if let Ok(f) = fitter(&d) {
            for (s, v) in samples.iter_mut().zip(&f.params) {
                s.push(*v);
            }
        }
    }
    let sd: Vec<f64> = samples
        .iter()
        .map(|s| {
            if s.len() < 2 {
                return f64::NAN;
            }
            let m = s.iter().sum::<f64>() / s.len() as f64;
            (s.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (s.len() - 1) as f64).sqrt()
        })
        .collect();
    fit.bootstrap_errors = Some(sd.clone());
    sd
}

pub const BOOTSTRAP_RESAMPLES: usize = 200;

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(model: Model, x: &[f64], p: &[f64]) -> Dataset {
        let y = x.iter().map(|&v| model.eval(v, p)).collect();
        Dataset::new(x.to_vec(), y, vec![0.01; x.len()]).unwrap()
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn binomial_edges_never_vanish() {
        assert_eq!(binomial(5, 10), (0.5, (0.025f64).sqrt()));
        let (p, e) = binomial(0, 100);
        assert_eq!(p, 0.0);
        assert!(e > 0.0);
        let (p, e) = binomial(100, 100);
        assert_eq!(p, 1.0);
        assert!(e > 0.0);
    }

    #[test]
    fn rb_survival_exact() {
        let x: Vec<f64> = [1.0, 5.0, 10.0, 20.0, 50.0, 100.0].to_vec();
        let f = fit_decay(&exact(Model::RbSurvival, &x, &[0.5, 0.99]), DecayForm::RbSurvival).unwrap();
        assert!(close(f.value("p"), 0.99, 1e-6) && close(f.value("amplitude"), 0.5, 1e-6), "{f:?}");
    }

    #[test]
    fn exponential_and_geometric_exact() {
        let x: Vec<f64> = (0..8).map(|i| i as f64 * 0.004).collect();
        let f = fit_decay(&exact(Model::Exponential, &x, &[0.97, 0.018]), DecayForm::Exponential).unwrap();
        assert!(close(f.value("decay"), 0.018, 1e-6), "{f:?}");
        let k: Vec<f64> = [1.0, 3.0, 5.0, 9.0, 15.0].to_vec();
        let g = fit_decay(&exact(Model::Geometric, &k, &[0.99, 0.9983]), DecayForm::Geometric).unwrap();
        assert!(close(g.value("f"), 0.9983, 1e-6), "{g:?}");
    }

    #[test]
    fn gaussian_exact_and_offset_free() {
        let x: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.2).collect();
        let f = fit_gaussian(&exact(Model::Gaussian, &x, &[0.9, 0.3, 0.81, 0.0])).unwrap();
        assert!(close(f.value("waist"), 0.81, 1e-6) && close(f.value("center"), 0.3, 1e-6), "{f:?}");
        assert!(f.value("offset").abs() < 1e-6);
    }

    #[test]
    fn fringe_cases() {
        let x: Vec<f64> = (0..24).map(|i| i as f64 * 2.0 * std::f64::consts::PI / 24.0).collect();
        let f = fit_fringe(&exact(Model::Fringe { n: 3.0 }, &x, &[1.0, 0.0, 0.0]), 3.0).unwrap();
        assert!((f.value("contrast") - 1.0).abs() < 1e-12);
        let flat = Dataset::new(x.clone(), vec![0.2; 24], vec![0.05; 24]).unwrap();
        let f = fit_fringe(&flat, 3.0).unwrap();
        assert!(f.value("contrast") < 1e-12 && (f.value("offset") - 0.2).abs() < 1e-12);
    }

    #[test]
    fn power_law_and_line_exact() {
        let w: Vec<f64> = [0.5, 0.8, 1.05, 1.5, 2.0].to_vec();
        let f = fit_power_law(&exact(Model::PowerLaw, &w, &[0.221, 1.7])).unwrap();
        assert!((f.value("alpha") - 1.7).abs() < 1e-9);
        let flat = Dataset::new(w.clone(), vec![1.0; 5], vec![0.1; 5]).unwrap();
        assert!(fit_power_law(&flat).unwrap().value("alpha").abs() < 1e-12);
        let l = fit_linear(&exact(Model::Linear, &w, &[3.1, -0.2])).unwrap();
        assert!(close(l.value("slope"), 3.1, 1e-12));
        assert!(matches!(fit_power_law(&exact(Model::Linear, &[-1.0, 1.0, 2.0], &[1.0, 0.0])), Err(FitError::NonPositive)));
    }

    #[test]
    fn input_checks() {
        assert!(matches!(Dataset::new(vec![1.0], vec![], vec![]), Err(FitError::LengthMismatch)));
        assert!(matches!(Dataset::new(vec![1.0], vec![1.0], vec![0.0]), Err(FitError::BadUncertainty)));
        let d = Dataset::new(vec![1.0, 2.0], vec![1.0, 1.0], vec![0.1, 0.1]).unwrap();
        assert!(matches!(fit_decay(&d, DecayForm::RbSurvival), Err(FitError::TooFewPoints { need: 4, got: 2 })));
    }

    #[test]
    fn bootstrap_agrees_with_covariance() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ds = Dataset::new(x.clone(), x.iter().map(|v| 2.0 * v + 1.0).collect(), vec![0.3; 10]).unwrap();
        let mut f = fit_linear(&ds).unwrap();
        let sd = bootstrap(&ds, &mut f, fit_linear, BOOTSTRAP_RESAMPLES, 4);
        assert!((sd[0] / f.errors[0] - 1.0).abs() < 0.2, "{sd:?} {:?}", f.errors);
        assert!(f.bootstrap_errors.is_some());
    }

    #[test]
    fn covariance_is_symmetric_psd() {
        let x: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.3).collect();
        let f = fit_gaussian(&exact(Model::Gaussian, &x, &[1.0, 0.1, 1.09, 0.02])).unwrap();
        let m = DMatrix::from_fn(4, 4, |i, j| f.covariance[i][j]);
        assert_eq!(m, m.transpose());
        assert!(m.symmetric_eigenvalues().iter().all(|&e| e >= -1e-18));
    }
}
