//! Average predictions by group, with delta-method intervals.

use super::linalg::{dot, Matrix};
use super::{sigmoid, LogitFit, OlsFit};
use crate::error::{Error, Result};
use crate::frame::Frame;

/// A fitted model whose predictions are a function of `x'β`.
pub trait LinearPredictor {
    fn predictors(&self) -> &[String];
    fn coefficients(&self) -> &[f64];
    fn covariance(&self) -> &Matrix;
    /// Whether predictions are on the probability scale.
    fn logistic(&self) -> bool;
}

impl LinearPredictor for OlsFit {
    fn predictors(&self) -> &[String] {
        &self.spec.predictors
    }
    fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }
    fn covariance(&self) -> &Matrix {
        &self.cov
    }
    fn logistic(&self) -> bool {
        false
    }
}

impl LinearPredictor for LogitFit {
    fn predictors(&self) -> &[String] {
        &self.spec.predictors
    }
    fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }
    fn covariance(&self) -> &Matrix {
        &self.cov
    }
    fn logistic(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupMean {
    pub group: f64,
    pub by: Option<f64>,
    pub n: usize,
    pub mean: f64,
    /// Delta-method standard error of the mean prediction.
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Mean model prediction within each level of the binary `group` column,
/// optionally split by the levels of `by`. Rows missing any predictor, the
/// group, or the by-variable are skipped; empty cells are omitted.
pub fn predict_group_means(
    fit: &dyn LinearPredictor,
    data: &Frame,
    group: &str,
    by: Option<&str>,
) -> Result<Vec<GroupMean>> {
    let g = data.column(group)?;
    let b = by.map(|c| data.column(c)).transpose()?;
    let preds: Vec<&[Option<f64>]> = fit
        .predictors()
        .iter()
        .map(|p| data.column(p))
        .collect::<Result<_>>()?;
    let beta = fit.coefficients();
    let k = beta.len();

    let mut cells: Vec<(Option<f64>, f64, Vec<usize>)> = Vec::new();
    for i in 0..data.len() {
        let Some(gv) = g[i] else { continue };
        if gv != 0.0 && gv != 1.0 {
            return Err(Error::Invalid(format!(
                "group column `{group}` must be 0/1, found {gv} for {}",
                data.ids()[i]
            )));
        }
        let bv = match b {
            Some(col) => match col[i] {
                Some(v) => Some(v),
                None => continue,
            },
            None => None,
        };
        if preds.iter().any(|c| c[i].is_none_or(|v| !v.is_finite())) {
            continue;
        }
        match cells.iter_mut().find(|(cb, cg, _)| *cg == gv && *cb == bv) {
            Some(cell) => cell.2.push(i),
            None => cells.push((bv, gv, vec![i])),
        }
    }
    cells.sort_by(|x, y| {
        let bx = x.0.unwrap_or(0.0);
        let by = y.0.unwrap_or(0.0);
        bx.total_cmp(&by).then(x.1.total_cmp(&y.1))
    });

    let mut out = Vec::with_capacity(cells.len());
    let mut x = vec![0.0; k];
    for (bv, gv, rows) in cells {
        let n = rows.len() as f64;
        let mut grad = vec![0.0; k];
        let mut mean = 0.0;
        for &i in &rows {
            x[0] = 1.0;
            for (j, c) in preds.iter().enumerate() {
                x[j + 1] = c[i].expect("complete row");
            }
            let eta = dot(&x, beta);
            let (pred, slope) = if fit.logistic() {
                let p = sigmoid(eta);
                (p, p * (1.0 - p))
            } else {
                (eta, 1.0)
            };
            mean += pred;
            for (gj, xj) in grad.iter_mut().zip(&x) {
                *gj += slope * xj;
            }
        }
        mean /= n;
        grad.iter_mut().for_each(|v| *v /= n);
        let se = fit.covariance().quad_form(&grad).max(0.0).sqrt();
        out.push(GroupMean {
            group: gv,
            by: bv,
            n: rows.len(),
            mean,
            se,
            ci_lo: mean - 1.96 * se,
            ci_hi: mean + 1.96 * se,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regress::{logit_fit, ols_fit, ModelSpec};

    fn frame(cols: &[(&str, Vec<f64>)]) -> Frame {
        let n = cols[0].1.len();
        let mut f = Frame::new((0..n).map(|i| format!("r{i}")).collect());
        for (name, v) in cols {
            f.add_dense(*name, v.clone()).unwrap();
        }
        f
    }

    #[test]
    fn noiseless_group_means() {
        let m = vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
        let x = vec![1.0, 2.0, 5.0, 3.0, 2.0, 7.0];
        let y: Vec<f64> = m
            .iter()
            .zip(&x)
            .map(|(m, x)| 1.0 + 3.0 * m + 0.5 * x)
            .collect();
        let f = frame(&[("m", m), ("x", x), ("y", y.clone())]);
        let fit = ols_fit(&f, &ModelSpec::new("o", "y", &["m", "x"])).unwrap();
        let g = predict_group_means(&fit, &f, "m", None).unwrap();
        assert_eq!(g.len(), 2);
        let m0 = (y[0] + y[2] + y[4]) / 3.0;
        let m1 = (y[1] + y[3] + y[5]) / 3.0;
        assert!((g[0].mean - m0).abs() < 1e-12 && g[0].group == 0.0);
        assert!((g[1].mean - m1).abs() < 1e-12 && g[1].n == 3);
    }

    #[test]
    fn intercept_only_shares_prediction() {
        let f = frame(&[
            ("m", vec![0.0, 1.0, 0.0, 1.0, 1.0]),
            ("y", vec![1.0, 4.0, 2.0, 0.0, 3.0]),
        ]);
        let fit = ols_fit(&f, &ModelSpec::new("o", "y", &[])).unwrap();
        let g = predict_group_means(&fit, &f, "m", None).unwrap();
        assert!((g[0].mean - g[1].mean).abs() < 1e-15);
        assert!((g[0].mean - 2.0).abs() < 1e-12);
    }

    #[test]
    fn by_levels_and_logit_scale() {
        let f = frame(&[
            ("m", vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0]),
            ("yr", vec![1.0, 1.0, 2.0, 2.0, 1.0, 2.0, 2.0, 1.0, 1.0, 2.0]),
            ("y", vec![0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]),
        ]);
        let fit = logit_fit(&f, &ModelSpec::new("l", "y", &["m"])).unwrap();
        let g = predict_group_means(&fit, &f, "m", Some("yr")).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!((g[0].by, g[0].group), (Some(1.0), 0.0));
        for cell in &g {
            assert!(cell.mean > 0.0 && cell.mean < 1.0);
            assert!(cell.ci_lo < cell.mean && cell.mean < cell.ci_hi);
        }
        // m = 1 predicted probability equals the observed share 3/4
        assert!((g[1].mean - 0.75).abs() < 1e-8);
        assert!(predict_group_means(&fit, &f, "yr", None).is_err());
    }
}
