//! Linear and logistic regression with sandwich-robust standard errors,
//! the usual diagnostics, and predicted group means.

pub mod diagnostics;
pub mod linalg;
mod margins;
mod render;

use std::collections::HashSet;

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};
use crate::frame::Frame;
use linalg::{cholesky, cholesky_inverse, cholesky_solve, Matrix, Qr};

pub use diagnostics::NORMALITY_MIN_N;
pub use diagnostics::{
    breusch_pagan, cooks_distance, skew_kurt_normality, vif, BreuschPagan, CooksDistance,
    NormalityTest,
};
pub use margins::{predict_group_means, GroupMean, LinearPredictor};
pub use render::{render_text_table, stars, write_model_csv, ModelRow, MODEL_CSV_HEADER};

/// Name of the intercept term.
pub const CONSTANT: &str = "constant";

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub name: String,
    pub outcome: String,
    pub predictors: Vec<String>,
    pub robust: bool,
    /// Row ids left out of the fit.
    pub exclude_rows: Vec<String>,
    /// Use the t distribution with `n - k` degrees of freedom for OLS p-values.
    pub t_reference: bool,
}

impl ModelSpec {
    pub fn new(name: impl Into<String>, outcome: impl Into<String>, predictors: &[&str]) -> Self {
        ModelSpec {
            name: name.into(),
            outcome: outcome.into(),
            predictors: predictors.iter().map(|s| s.to_string()).collect(),
            robust: true,
            exclude_rows: Vec::new(),
            t_reference: false,
        }
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for p in &self.predictors {
            if !seen.insert(p.as_str()) {
                return Err(Error::Invalid(format!(
                    "model `{}`: predictor `{p}` listed twice",
                    self.name
                )));
            }
        }
        if seen.contains(self.outcome.as_str()) {
            return Err(Error::Invalid(format!(
                "model `{}`: outcome `{}` is also a predictor",
                self.name, self.outcome
            )));
        }
        Ok(())
    }

    /// Term names in design order: the constant, then the predictors.
    pub fn terms(&self) -> Vec<String> {
        std::iter::once(CONSTANT.to_string())
            .chain(self.predictors.iter().cloned())
            .collect()
    }
}

/// Rows dropped before fitting.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MissingReport {
    pub rows_total: usize,
    pub excluded_by_id: usize,
    pub dropped_missing: usize,
    /// Missing values per column among rows not excluded by id.
    pub per_column: Vec<(String, usize)>,
}

/// Complete-case design matrix with an intercept in column 0.
#[derive(Debug, Clone)]
pub(crate) struct Design {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub rows: Vec<usize>,
    pub missing: MissingReport,
}

pub(crate) fn build_design(data: &Frame, spec: &ModelSpec) -> Result<Design> {
    spec.validate()?;
    let outcome = data.column(&spec.outcome)?;
    let preds: Vec<&[Option<f64>]> = spec
        .predictors
        .iter()
        .map(|p| data.column(p))
        .collect::<Result<_>>()?;
    let excluded: HashSet<&str> = spec.exclude_rows.iter().map(String::as_str).collect();
    let mut missing = MissingReport {
        rows_total: data.len(),
        per_column: std::iter::once(&spec.outcome)
            .chain(&spec.predictors)
            .map(|c| (c.clone(), 0))
            .collect(),
        ..Default::default()
    };
    let mut rows = Vec::new();
    for i in 0..data.len() {
        if excluded.contains(data.ids()[i].as_str()) {
            missing.excluded_by_id += 1;
            continue;
        }
        let mut complete = true;
        for (slot, col) in missing
            .per_column
            .iter_mut()
            .zip(std::iter::once(&outcome).chain(&preds))
        {
            if col[i].is_none_or(|v| !v.is_finite()) {
                slot.1 += 1;
                complete = false;
            }
        }
        if complete {
            rows.push(i);
        } else {
            missing.dropped_missing += 1;
        }
    }
    let k = spec.predictors.len() + 1;
    let mut x = Matrix::zeros(rows.len(), k);
    for (r, &i) in rows.iter().enumerate() {
        x[(r, 0)] = 1.0;
        for (j, col) in preds.iter().enumerate() {
            x[(r, j + 1)] = col[i].expect("complete case");
        }
    }
    let y = rows
        .iter()
        .map(|&i| outcome[i].expect("complete case"))
        .collect();
    Ok(Design {
        x,
        y,
        rows,
        missing,
    })
}

fn rank_error(design: &Matrix, qr: &Qr, terms: &[String]) -> Error {
    let bad = qr.aliased[0];
    // which kept columns reproduce the aliased one
    let coefs = qr.solve(&design.column(bad));
    let scale = coefs.iter().fold(0.0f64, |m, c| m.max(c.abs())).max(1.0);
    let others = qr
        .kept
        .iter()
        .zip(&coefs)
        .filter(|(_, c)| c.abs() > 1e-8 * scale)
        .map(|(&j, _)| terms[j].clone())
        .collect();
    Error::RankDeficient {
        column: terms[bad].clone(),
        others,
    }
}

fn z_p_value(stat: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    2.0 * normal.sf(stat.abs())
}

fn t_p_value(stat: f64, df: f64) -> f64 {
    let t = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    2.0 * t.sf(stat.abs())
}

#[derive(Debug, Clone)]
pub struct OlsFit {
    pub spec: ModelSpec,
    /// Term names in design order (constant first).
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Reported standard errors (HC1 when `spec.robust`, classical otherwise).
    pub se: Vec<f64>,
    pub se_classical: Vec<f64>,
    pub se_robust: Vec<f64>,
    pub p_values: Vec<f64>,
    /// Covariance matrix behind `se`.
    pub cov: Matrix,
    pub r2: f64,
    pub n: usize,
    pub rss: f64,
    /// `rss / (n - k)`
    pub sigma2: f64,
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
    pub leverages: Vec<f64>,
    pub design: Matrix,
    /// Frame row index of each observation used.
    pub rows: Vec<usize>,
    /// Frame ids of the observations used.
    pub ids: Vec<String>,
    pub missing: MissingReport,
}

impl OlsFit {
    pub fn k(&self) -> usize {
        self.terms.len()
    }

    /// Residuals vanish to rounding error relative to the outcome's size.
    pub fn is_exact_fit(&self) -> bool {
        let size: f64 = self
            .fitted
            .iter()
            .zip(&self.residuals)
            .map(|(f, e)| (f + e).powi(2))
            .sum();
        self.rss <= 1e-24 * size.max(f64::MIN_POSITIVE)
    }

    pub fn coefficient(&self, term: &str) -> Option<f64> {
        self.terms
            .iter()
            .position(|t| t == term)
            .map(|i| self.coefficients[i])
    }
}

/// Ordinary least squares with listwise deletion. Standard errors are HC1
/// sandwich estimates when `spec.robust`, classical otherwise; p-values are
/// normal-approximation unless `spec.t_reference`.
pub fn ols_fit(data: &Frame, spec: &ModelSpec) -> Result<OlsFit> {
    let design = build_design(data, spec)?;
    let terms = spec.terms();
    let (n, k) = (design.x.rows(), design.x.cols());
    if n <= k {
        return Err(Error::TooFewObservations { n, k });
    }
    let qr = Qr::new(&design.x);
    if !qr.aliased.is_empty() {
        return Err(rank_error(&design.x, &qr, &terms));
    }
    let beta = qr.solve(&design.y);
    let fitted = design.x.mul_vec(&beta);
    let residuals: Vec<f64> = design.y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let mean_y = design.y.iter().sum::<f64>() / n as f64;
    let tss: f64 = design.y.iter().map(|y| (y - mean_y).powi(2)).sum();
    let r2 = if tss > 0.0 {
        (1.0 - rss / tss).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let df = (n - k) as f64;
    let sigma2 = rss / df;
    let xtx_inv = qr.xtx_inverse();

    let mut cov_classical = xtx_inv.clone();
    cov_classical.scale(sigma2);

    let mut meat = Matrix::zeros(k, k);
    for (i, e) in residuals.iter().enumerate() {
        let xi = design.x.row(i);
        let w = e * e;
        for a in 0..k {
            for b in 0..k {
                meat[(a, b)] += w * xi[a] * xi[b];
            }
        }
    }
    let mut cov_robust = xtx_inv.mul(&meat).mul(&xtx_inv);
    cov_robust.scale(n as f64 / df);

    let sqrt_diag = |m: &Matrix| m.diagonal().into_iter().map(f64::sqrt).collect::<Vec<_>>();
    let se_classical = sqrt_diag(&cov_classical);
    let se_robust = sqrt_diag(&cov_robust);
    let (cov, se) = if spec.robust {
        (cov_robust, se_robust.clone())
    } else {
        (cov_classical, se_classical.clone())
    };
    let p_values = beta
        .iter()
        .zip(&se)
        .map(|(b, s)| {
            let stat = b / s;
            if spec.t_reference {
                t_p_value(stat, df)
            } else {
                z_p_value(stat)
            }
        })
        .collect();
    let leverages = qr.leverages();
    let ids = design.rows.iter().map(|&i| data.ids()[i].clone()).collect();
    Ok(OlsFit {
        spec: spec.clone(),
        terms,
        coefficients: beta,
        se,
        se_classical,
        se_robust,
        p_values,
        cov,
        r2,
        n,
        rss,
        sigma2,
        residuals,
        fitted,
        leverages,
        design: design.x,
        rows: design.rows,
        ids,
        missing: design.missing,
    })
}

pub const LOGIT_TOLERANCE: f64 = 1e-8;
pub const LOGIT_MAX_ITERATIONS: usize = 100;
/// Linear-predictor magnitude at which an observation of a diverging fit
/// counts as perfectly predicted.
const SEPARATION_ETA: f64 = 20.0;

#[derive(Debug, Clone)]
pub struct LogitFit {
    pub spec: ModelSpec,
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    pub odds_ratios: Vec<f64>,
    /// Standard errors of the coefficients (robust when `spec.robust`).
    pub se: Vec<f64>,
    /// Delta-method standard errors of the odds ratios.
    pub se_odds_ratio: Vec<f64>,
    pub p_values: Vec<f64>,
    pub cov: Matrix,
    pub log_likelihood: f64,
    pub null_log_likelihood: f64,
    /// McFadden pseudo-R².
    pub pseudo_r2: f64,
    pub n: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Largest absolute score component at the reported estimate.
    pub max_gradient: f64,
    pub design: Matrix,
    pub rows: Vec<usize>,
    pub ids: Vec<String>,
    pub missing: MissingReport,
}

impl LogitFit {
    pub fn odds_ratio(&self, term: &str) -> Option<f64> {
        self.terms
            .iter()
            .position(|t| t == term)
            .map(|i| self.odds_ratios[i])
    }
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

fn log_likelihood(y: &[f64], eta: &[f64]) -> f64 {
    // log p = -log(1 + e^-eta), log(1-p) = -log(1 + e^eta)
    let log1pexp = |t: f64| {
        if t > 0.0 {
            t + (-t).exp().ln_1p()
        } else {
            t.exp().ln_1p()
        }
    };
    y.iter()
        .zip(eta)
        .map(|(&yi, &e)| {
            if yi > 0.5 {
                -log1pexp(-e)
            } else {
                -log1pexp(e)
            }
        })
        .sum()
}

fn score_and_hessian(x: &Matrix, y: &[f64], eta: &[f64]) -> (Vec<f64>, Matrix) {
    let k = x.cols();
    let mut g = vec![0.0; k];
    let mut h = Matrix::zeros(k, k);
    for (i, &e) in eta.iter().enumerate() {
        let p = sigmoid(e);
        let w = p * (1.0 - p);
        let r = y[i] - p;
        let xi = x.row(i);
        for a in 0..k {
            g[a] += r * xi[a];
            for b in 0..=a {
                h[(a, b)] += w * xi[a] * xi[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            h[(b, a)] = h[(a, b)];
        }
    }
    (g, h)
}

fn perfectly_predicted(y: &[f64], eta: &[f64]) -> usize {
    y.iter()
        .zip(eta)
        .filter(|(&yi, &e)| (yi > 0.5 && e > SEPARATION_ETA) || (yi < 0.5 && e < -SEPARATION_ETA))
        .count()
}

/// Logistic regression by Newton–Raphson with step halving.
pub fn logit_fit(data: &Frame, spec: &ModelSpec) -> Result<LogitFit> {
    let design = build_design(data, spec)?;
    let terms = spec.terms();
    let (n, k) = (design.x.rows(), design.x.cols());
    let y = &design.y;
    if let Some(bad) = y.iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(Error::Invalid(format!(
            "logit outcome `{}` must be 0/1, found {bad}",
            spec.outcome
        )));
    }
    let positives = y.iter().filter(|&&v| v == 1.0).count();
    if positives == 0 || positives == n {
        return Err(Error::Invalid(format!(
            "logit outcome `{}` needs both classes present",
            spec.outcome
        )));
    }
    if n <= k {
        return Err(Error::TooFewObservations { n, k });
    }
    let qr = Qr::new(&design.x);
    if !qr.aliased.is_empty() {
        return Err(rank_error(&design.x, &qr, &terms));
    }

    let x = &design.x;
    let mut beta = vec![0.0; k];
    let mut eta = vec![0.0; n];
    let mut ll = log_likelihood(y, &eta);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < LOGIT_MAX_ITERATIONS {
        iterations += 1;
        let (g, h) = score_and_hessian(x, y, &eta);
        let Some(l) = cholesky(&h) else {
            return Err(Error::Separation {
                perfectly_predicted: perfectly_predicted(y, &eta),
            });
        };
        let step = cholesky_solve(&l, &g);
        let mut scale = 1.0;
        let (mut next_beta, mut next_eta, mut next_ll);
        loop {
            next_beta = beta
                .iter()
                .zip(&step)
                .map(|(b, s)| b + scale * s)
                .collect::<Vec<_>>();
            next_eta = x.mul_vec(&next_beta);
            next_ll = log_likelihood(y, &next_eta);
            if next_ll >= ll - 1e-12 * ll.abs().max(1.0) || scale < 1e-10 {
                break;
            }
            scale *= 0.5;
        }
        let change = step.iter().map(|s| (s * scale).abs()).fold(0.0, f64::max);
        beta = next_beta;
        eta = next_eta;
        ll = next_ll;
        if change < LOGIT_TOLERANCE {
            converged = true;
            break;
        }
    }
    // Newton converges quadratically whenever the maximum exists. Under
    // separation the estimates instead drift along the separating direction
    // by a roughly constant step while those observations' fitted
    // probabilities run to 0 or 1. Extreme fitted probabilities at a
    // converged optimum are legitimate and not separation.
    if !converged {
        let separated = perfectly_predicted(y, &eta);
        if separated > 0 {
            return Err(Error::Separation {
                perfectly_predicted: separated,
            });
        }
        return Err(Error::NonConvergence { iterations });
    }

    let (g, h) = score_and_hessian(x, y, &eta);
    let max_gradient = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let l = cholesky(&h).ok_or(Error::Separation {
        perfectly_predicted: 0,
    })?;
    let h_inv = cholesky_inverse(&l);
    let cov = if spec.robust {
        let mut meat = Matrix::zeros(k, k);
        for i in 0..n {
            let r = y[i] - sigmoid(eta[i]);
            let xi = x.row(i);
            for a in 0..k {
                for b in 0..k {
                    meat[(a, b)] += r * r * xi[a] * xi[b];
                }
            }
        }
        let mut v = h_inv.mul(&meat).mul(&h_inv);
        v.scale(n as f64 / (n as f64 - 1.0));
        v
    } else {
        h_inv
    };
    let se: Vec<f64> = cov.diagonal().into_iter().map(f64::sqrt).collect();
    let odds_ratios: Vec<f64> = beta.iter().map(|b| b.exp()).collect();
    let se_odds_ratio = odds_ratios.iter().zip(&se).map(|(o, s)| o * s).collect();
    let p_values = beta
        .iter()
        .zip(&se)
        .map(|(b, s)| z_p_value(b / s))
        .collect();
    let ybar = positives as f64 / n as f64;
    let null_ll = n as f64 * (ybar * ybar.ln() + (1.0 - ybar) * (1.0 - ybar).ln());
    let pseudo_r2 = 1.0 - ll / null_ll;
    let ids = design.rows.iter().map(|&i| data.ids()[i].clone()).collect();
    Ok(LogitFit {
        spec: spec.clone(),
        terms,
        coefficients: beta,
        odds_ratios,
        se,
        se_odds_ratio,
        p_values,
        cov,
        log_likelihood: ll,
        null_log_likelihood: null_ll,
        pseudo_r2,
        n,
        converged,
        iterations,
        max_gradient,
        design: design.x,
        rows: design.rows,
        ids,
        missing: design.missing,
    })
}
