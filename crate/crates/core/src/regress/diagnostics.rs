//! Post-fit diagnostics: collinearity, heteroscedasticity, influence, and
//! normality of a sample.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::linalg::{Matrix, Qr};
use super::OlsFit;
use crate::error::{Error, Result};
use crate::frame::Frame;

/// Auxiliary `1 - R²` at or below which a predictor is treated as an exact
/// linear combination of the others.
const COLLINEAR_TOL: f64 = 1e-12;

/// Residual sum of squares of `y` projected on the columns of `x`.
fn projection_rss(x: &Matrix, y: &[f64]) -> f64 {
    let qr = Qr::new(x);
    let fitted = x.select_columns(&qr.kept).mul_vec(&qr.solve(y));
    y.iter().zip(&fitted).map(|(a, b)| (a - b).powi(2)).sum()
}

fn centered_ss(y: &[f64]) -> f64 {
    let m = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - m).powi(2)).sum()
}

/// Variance inflation factor of each predictor, computed on the rows where
/// every listed predictor is defined. Exactly collinear predictors (including
/// constant ones) get `f64::INFINITY`.
pub fn vif(data: &Frame, predictors: &[&str]) -> Result<Vec<(String, f64)>> {
    if predictors.len() < 2 {
        return Err(Error::Invalid(
            "variance inflation needs at least two predictors".into(),
        ));
    }
    let cols: Vec<&[Option<f64>]> = predictors
        .iter()
        .map(|p| data.column(p))
        .collect::<Result<_>>()?;
    let rows: Vec<usize> = (0..data.len())
        .filter(|&i| cols.iter().all(|c| c[i].is_some_and(f64::is_finite)))
        .collect();
    let n = rows.len();
    if n <= predictors.len() {
        return Err(Error::TooFewObservations {
            n,
            k: predictors.len(),
        });
    }
    let values: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| rows.iter().map(|&i| c[i].unwrap()).collect())
        .collect();
    let mut out = Vec::with_capacity(predictors.len());
    for (j, name) in predictors.iter().enumerate() {
        let y = &values[j];
        let tss = centered_ss(y);
        let mut x = Matrix::zeros(n, predictors.len());
        for r in 0..n {
            x[(r, 0)] = 1.0;
            let mut c = 1;
            for (m, v) in values.iter().enumerate() {
                if m != j {
                    x[(r, c)] = v[r];
                    c += 1;
                }
            }
        }
        let v = if tss == 0.0 {
            f64::INFINITY
        } else {
            let tolerance = projection_rss(&x, y) / tss;
            if tolerance <= COLLINEAR_TOL {
                f64::INFINITY
            } else {
                1.0 / tolerance
            }
        };
        out.push((name.to_string(), v));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreuschPagan {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Breusch–Pagan LM test: `n · R²` from regressing the squared residuals on
/// the fitted model's design, against chi-square with one degree of freedom
/// per predictor.
pub fn breusch_pagan(fit: &OlsFit) -> Result<BreuschPagan> {
    if fit.is_exact_fit() {
        return Err(Error::Degenerate(
            "Breusch-Pagan: residuals are all zero (exact fit)".into(),
        ));
    }
    let e2: Vec<f64> = fit.residuals.iter().map(|e| e * e).collect();
    let tss = centered_ss(&e2);
    let r2 = if tss == 0.0 {
        0.0
    } else {
        (1.0 - projection_rss(&fit.design, &e2) / tss).clamp(0.0, 1.0)
    };
    let df = fit.k() - 1;
    let statistic = fit.n as f64 * r2;
    let p_value = if df == 0 {
        1.0
    } else {
        ChiSquared::new(df as f64)
            .expect("positive df")
            .sf(statistic)
    };
    Ok(BreuschPagan {
        statistic,
        df,
        p_value,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CooksDistance {
    /// One distance per observation used in the fit, in fit order.
    /// Observations with leverage 1 get `f64::INFINITY`.
    pub distances: Vec<f64>,
    pub cutoff: f64,
    /// Ids whose distance exceeds the cutoff, in fit order.
    pub flagged: Vec<String>,
}

/// Cook's distance for every observation. `cutoff` defaults to `4 / n`.
pub fn cooks_distance(fit: &OlsFit, cutoff: Option<f64>) -> Result<CooksDistance> {
    if fit.is_exact_fit() {
        return Err(Error::Degenerate(
            "Cook's distance: residual variance is zero (exact fit)".into(),
        ));
    }
    let denom = fit.k() as f64 * fit.sigma2;
    let distances: Vec<f64> = fit
        .residuals
        .iter()
        .zip(&fit.leverages)
        .map(|(e, &h)| {
            if h >= 1.0 - 1e-12 {
                f64::INFINITY
            } else {
                e * e / denom * h / (1.0 - h).powi(2)
            }
        })
        .collect();
    let cutoff = cutoff.unwrap_or(4.0 / fit.n as f64);
    let flagged = distances
        .iter()
        .zip(&fit.ids)
        .filter(|(d, _)| **d > cutoff)
        .map(|(_, id)| id.clone())
        .collect();
    Ok(CooksDistance {
        distances,
        cutoff,
        flagged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalityTest {
    pub n: usize,
    /// Sample skewness `m3 / m2^1.5`.
    pub skewness: f64,
    /// Sample kurtosis `m4 / m2²` (3 for a normal population).
    pub kurtosis: f64,
    pub z_skewness: f64,
    pub z_kurtosis: f64,
    /// `z_skewness² + z_kurtosis²`
    pub statistic: f64,
    pub p_value: f64,
}

pub const NORMALITY_MIN_N: usize = 20;

/// D'Agostino–Pearson omnibus test built from transformed skewness and
/// kurtosis z-scores, referred to chi-square with 2 degrees of freedom.
pub fn skew_kurt_normality(values: &[f64]) -> Result<NormalityTest> {
    let n = values.len();
    if n < NORMALITY_MIN_N {
        return Err(Error::TooFewObservations {
            n,
            k: NORMALITY_MIN_N,
        });
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    if m2 <= 0.0 || m2 <= 1e-28 * mean * mean {
        return Err(Error::Degenerate("normality test: constant sample".into()));
    }
    let skewness = m3 / m2.powf(1.5);
    let kurtosis = m4 / (m2 * m2);

    let y = skewness * ((nf + 1.0) * (nf + 3.0) / (6.0 * (nf - 2.0))).sqrt();
    let beta2 = 3.0 * (nf * nf + 27.0 * nf - 70.0) * (nf + 1.0) * (nf + 3.0)
        / ((nf - 2.0) * (nf + 5.0) * (nf + 7.0) * (nf + 9.0));
    let w2 = -1.0 + (2.0 * (beta2 - 1.0)).sqrt();
    let delta = 1.0 / (0.5 * w2.ln()).sqrt();
    let alpha = (2.0 / (w2 - 1.0)).sqrt();
    let z_skewness = delta * (y / alpha).asinh();

    let expected = 3.0 * (nf - 1.0) / (nf + 1.0);
    let variance =
        24.0 * nf * (nf - 2.0) * (nf - 3.0) / ((nf + 1.0).powi(2) * (nf + 3.0) * (nf + 5.0));
    let x = (kurtosis - expected) / variance.sqrt();
    let sqrt_beta1 = 6.0 * (nf * nf - 5.0 * nf + 2.0) / ((nf + 7.0) * (nf + 9.0))
        * (6.0 * (nf + 3.0) * (nf + 5.0) / (nf * (nf - 2.0) * (nf - 3.0))).sqrt();
    let a = 6.0
        + 8.0 / sqrt_beta1 * (2.0 / sqrt_beta1 + (1.0 + 4.0 / (sqrt_beta1 * sqrt_beta1)).sqrt());
    let tail = (1.0 - 2.0 / a) / (1.0 + x * (2.0 / (a - 4.0)).sqrt());
    let z_kurtosis = ((1.0 - 2.0 / (9.0 * a)) - tail.cbrt()) / (2.0 / (9.0 * a)).sqrt();

    let statistic = z_skewness * z_skewness + z_kurtosis * z_kurtosis;
    let p_value = ChiSquared::new(2.0).expect("df 2").sf(statistic);
    Ok(NormalityTest {
        n,
        skewness,
        kurtosis,
        z_skewness,
        z_kurtosis,
        statistic,
        p_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regress::{ols_fit, ModelSpec};

    fn frame(cols: &[(&str, Vec<f64>)]) -> Frame {
        let n = cols[0].1.len();
        let mut f = Frame::new((0..n).map(|i| format!("r{i}")).collect());
        for (name, v) in cols {
            f.add_dense(*name, v.clone()).unwrap();
        }
        f
    }

    #[test]
    fn vif_orthogonal_and_correlated() {
        let f = frame(&[
            ("a", vec![1.0, -1.0, 1.0, -1.0]),
            ("b", vec![1.0, 1.0, -1.0, -1.0]),
        ]);
        for (_, v) in vif(&f, &["a", "b"]).unwrap() {
            assert!((v - 1.0).abs() < 1e-12);
        }
        let f = frame(&[
            ("a", vec![1.0, 2.0, 3.0, 4.0]),
            ("b", vec![1.0, 2.0, 3.0, 4.0]),
            ("c", vec![0.0, 1.0, 0.0, 2.0]),
        ]);
        let v = vif(&f, &["a", "b", "c"]).unwrap();
        assert!(v[0].1.is_infinite() && v[1].1.is_infinite());
        assert!(v[2].1.is_finite());
        assert!(vif(&f, &["a"]).is_err());
    }

    #[test]
    fn breusch_pagan_exact_fit_is_degenerate() {
        let f = frame(&[
            ("x", vec![1.0, 2.0, 3.0, 4.0]),
            ("y", vec![3.0, 5.0, 7.0, 9.0]),
        ]);
        let fit = ols_fit(&f, &ModelSpec::new("m", "y", &["x"])).unwrap();
        assert!(matches!(breusch_pagan(&fit), Err(Error::Degenerate(_))));
        assert!(matches!(
            cooks_distance(&fit, None),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn cooks_flags_planted_outlier() {
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let mut y: Vec<f64> = x
            .iter()
            .map(|v| 1.0 + 0.5 * v + 0.1 * (v * 1.7).sin())
            .collect();
        y[13] += 25.0;
        let f = frame(&[("x", x), ("y", y)]);
        let fit = ols_fit(&f, &ModelSpec::new("m", "y", &["x"])).unwrap();
        let d = cooks_distance(&fit, None).unwrap();
        let argmax = (0..20)
            .max_by(|&a, &b| d.distances[a].total_cmp(&d.distances[b]))
            .unwrap();
        assert_eq!(argmax, 13);
        assert!(d.flagged.contains(&"r13".to_string()));
        assert_eq!(d.cutoff, 0.2);
    }

    #[test]
    fn normality_symmetric_sample() {
        let v: Vec<f64> = (-15..=15).map(f64::from).collect();
        let t = skew_kurt_normality(&v).unwrap();
        assert_eq!(t.skewness, 0.0);
        assert_eq!(t.z_skewness, 0.0);
        assert!(skew_kurt_normality(&[1.0; 30]).is_err());
        assert!(skew_kurt_normality(&v[..10]).is_err());
    }
}
