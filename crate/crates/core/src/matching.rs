//! Coarsened exact matching with 1:1 control selection and a
//! difference-in-means treatment effect.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::io::fmt_real;
use crate::summaries::percentile_sorted;

#[derive(Debug, Clone, PartialEq)]
pub enum Coarsening {
    /// Five bins split at the pooled 20/40/60/80th nearest-rank percentiles.
    Quintile,
    /// The raw value is the bin.
    Identity,
    /// Bins split at the given strictly increasing cutpoints.
    Cutpoints(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoarseningSpec {
    pub covariates: Vec<(String, Coarsening)>,
}

impl CoarseningSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, column: &str, how: Coarsening) -> Self {
        self.covariates.push((column.to_string(), how));
        self
    }

    /// Co-authors, pages, publication year, countries and the three country
    /// flags; `with_citations` adds log citations, for indicator outcomes.
    pub fn bibliometric_preset(with_citations: bool) -> Self {
        let mut s = CoarseningSpec::new()
            .with("n_authors", Coarsening::Quintile)
            .with("n_pages", Coarsening::Quintile)
            .with("year", Coarsening::Quintile)
            .with("n_countries", Coarsening::Quintile)
            .with("usa", Coarsening::Identity)
            .with("china", Coarsening::Identity)
            .with("eu28", Coarsening::Identity);
        if with_citations {
            s = s.with("log_citations", Coarsening::Quintile);
        }
        s
    }

    fn validate(&self) -> Result<()> {
        if self.covariates.is_empty() {
            return Err(Error::Invalid(
                "matching needs at least one covariate".into(),
            ));
        }
        let mut seen = HashSet::new();
        for (name, how) in &self.covariates {
            if !seen.insert(name) {
                return Err(Error::Invalid(format!("covariate `{name}` listed twice")));
            }
            if let Coarsening::Cutpoints(c) = how {
                if c.iter().any(|v| !v.is_finite()) || c.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Invalid(format!(
                        "cutpoints for `{name}` must be finite and strictly increasing"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Quintile cutpoints of a sample, duplicates removed.
pub fn quintile_cutpoints(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut cuts: Vec<f64> = [20.0, 40.0, 60.0, 80.0]
        .iter()
        .map(|&p| percentile_sorted(&sorted, p))
        .collect();
    cuts.dedup();
    cuts
}

/// Number of cutpoints strictly below `v`; a value equal to a cutpoint goes
/// to the lower bin.
fn bin(cuts: &[f64], v: f64) -> usize {
    cuts.partition_point(|&c| c < v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coarsened {
    /// Per frame row: the stratum signature, or `None` if a covariate is missing.
    pub signatures: Vec<Option<String>>,
    /// Per covariate, the cutpoints actually used (empty for identity).
    pub cutpoints: Vec<(String, Vec<f64>)>,
    pub missing: usize,
}

/// Codes each covariate and joins the codes into a `|`-separated signature.
/// Quintile cutpoints are taken over the rows where every covariate is defined.
pub fn coarsen(data: &Frame, spec: &CoarseningSpec) -> Result<Coarsened> {
    spec.validate()?;
    if data.is_empty() {
        return Err(Error::Invalid("cannot coarsen an empty table".into()));
    }
    let cols: Vec<&[Option<f64>]> = spec
        .covariates
        .iter()
        .map(|(c, _)| data.column(c))
        .collect::<Result<_>>()?;
    let complete: Vec<bool> = (0..data.len())
        .map(|i| cols.iter().all(|c| c[i].is_some_and(f64::is_finite)))
        .collect();
    let mut cutpoints = Vec::with_capacity(cols.len());
    for ((name, how), col) in spec.covariates.iter().zip(&cols) {
        let cuts = match how {
            Coarsening::Quintile => {
                let v: Vec<f64> = (0..data.len())
                    .filter(|&i| complete[i])
                    .map(|i| col[i].unwrap())
                    .collect();
                if v.is_empty() {
                    Vec::new()
                } else {
                    quintile_cutpoints(&v)
                }
            }
            Coarsening::Identity => Vec::new(),
            Coarsening::Cutpoints(c) => c.clone(),
        };
        cutpoints.push((name.clone(), cuts));
    }
    let signatures = (0..data.len())
        .map(|i| {
            complete[i].then(|| {
                spec.covariates
                    .iter()
                    .zip(&cols)
                    .zip(&cutpoints)
                    .map(|(((_, how), col), (_, cuts))| {
                        let v = col[i].unwrap();
                        match how {
                            Coarsening::Identity => fmt_real(v),
                            _ => bin(cuts, v).to_string(),
                        }
                    })
                    .collect::<Vec<_>>()
                    .join("|")
            })
        })
        .collect();
    Ok(Coarsened {
        signatures,
        cutpoints,
        missing: complete.iter().filter(|c| !**c).count(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pair {
    pub treated: String,
    pub control: String,
    pub signature: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stratum {
    pub signature: String,
    pub treated: usize,
    pub controls: usize,
    pub matched: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedSample {
    pub treatment: String,
    pub pairs: Vec<Pair>,
    pub unmatched_treated: Vec<String>,
    pub strata: Vec<Stratum>,
    /// Rows left out for a missing treatment or covariate value.
    pub excluded_missing: usize,
}

/// Exact matching on coarsened signatures. Within each stratum, treated units
/// (ascending id) are paired with controls drawn without replacement in a
/// seeded random order; treated units left over are reported unmatched.
pub fn cem_match(
    data: &Frame,
    treatment: &str,
    spec: &CoarseningSpec,
    seed: u64,
) -> Result<MatchedSample> {
    let t = data.column(treatment)?;
    let coarse = coarsen(data, spec)?;
    let mut strata: BTreeMap<&str, (Vec<&str>, Vec<&str>)> = BTreeMap::new();
    let mut excluded = 0;
    let (mut n_treated, mut n_control) = (0, 0);
    for ((tv, sig), id) in t.iter().zip(&coarse.signatures).zip(data.ids()) {
        let (Some(tv), Some(sig)) = (*tv, sig.as_deref()) else {
            excluded += 1;
            continue;
        };
        let cell = strata.entry(sig).or_default();
        let id = id.as_str();
        if tv == 1.0 {
            cell.0.push(id);
            n_treated += 1;
        } else if tv == 0.0 {
            cell.1.push(id);
            n_control += 1;
        } else {
            return Err(Error::Invalid(format!(
                "treatment `{treatment}` must be 0/1, found {tv} for {id}"
            )));
        }
    }
    if n_treated == 0 {
        return Err(Error::Invalid(format!("no treated units in `{treatment}`")));
    }
    if n_control == 0 {
        return Err(Error::Invalid(format!("no control units in `{treatment}`")));
    }
    if !strata.values().any(|(t, c)| !t.is_empty() && !c.is_empty()) {
        return Err(Error::Invalid(
            "no stratum contains both treated and control units".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    let mut unmatched = Vec::new();
    let mut report = Vec::with_capacity(strata.len());
    for (sig, (mut treated, mut controls)) in strata {
        treated.sort_unstable();
        controls.sort_unstable();
        if !treated.is_empty() {
            controls.shuffle(&mut rng);
        }
        let m = treated.len().min(controls.len());
        for (tr, co) in treated.iter().zip(&controls) {
            pairs.push(Pair {
                treated: tr.to_string(),
                control: co.to_string(),
                signature: sig.to_string(),
            });
        }
        unmatched.extend(treated[m..].iter().map(|s| s.to_string()));
        report.push(Stratum {
            signature: sig.to_string(),
            treated: treated.len(),
            controls: controls.len(),
            matched: m,
        });
    }
    pairs.sort_by(|a, b| a.treated.cmp(&b.treated));
    unmatched.sort();
    Ok(MatchedSample {
        treatment: treatment.to_string(),
        pairs,
        unmatched_treated: unmatched,
        strata: report,
        excluded_missing: excluded,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AteResult {
    pub outcome: String,
    pub ate: f64,
    /// Unequal-variance standard error; NaN with a single pair.
    pub se: f64,
    pub ci95: (f64, f64),
    /// Two-sided normal p-value for `ate = 0`.
    pub p_value: f64,
    /// Matched observations used: twice the surviving pairs.
    pub n: usize,
    /// Treated units paired.
    pub matched: usize,
    pub unmatched: usize,
    /// Pairs dropped because either side's outcome is undefined.
    pub dropped_pairs: usize,
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        f64::NAN
    };
    (m, var)
}

/// Difference in mean outcome between matched treated and matched controls.
pub fn ate(matched: &MatchedSample, data: &Frame, outcome: &str) -> Result<AteResult> {
    let y = data.column(outcome)?;
    let index: std::collections::HashMap<&str, usize> = data
        .ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let value = |id: &str| -> Result<Option<f64>> {
        let i = index
            .get(id)
            .ok_or_else(|| Error::UnknownPaper(id.to_string()))?;
        Ok(y[*i].filter(|v| v.is_finite()))
    };
    let (mut yt, mut yc) = (Vec::new(), Vec::new());
    let mut dropped = 0;
    for p in &matched.pairs {
        match (value(&p.treated)?, value(&p.control)?) {
            (Some(a), Some(b)) => {
                yt.push(a);
                yc.push(b);
            }
            _ => dropped += 1,
        }
    }
    if yt.is_empty() {
        return Err(Error::Degenerate(format!(
            "no matched pair has a defined `{outcome}`"
        )));
    }
    let (mt, vt) = mean_var(&yt);
    let (mc, vc) = mean_var(&yc);
    let k = yt.len() as f64;
    let ate = mt - mc;
    let se = (vt / k + vc / k).sqrt();
    let p_value = two_sided_p(ate, se);
    Ok(AteResult {
        outcome: outcome.to_string(),
        ate,
        se,
        ci95: (ate - 1.96 * se, ate + 1.96 * se),
        p_value,
        n: 2 * yt.len(),
        matched: matched.pairs.len(),
        unmatched: matched.unmatched_treated.len(),
        dropped_pairs: dropped,
    })
}

pub const PAIRS_HEADER: &str = "treated_id,control_id,stratum_signature";
/// Two-sided normal-approximation p-value of an estimate and its standard
/// error. A zero SE gives 1 for a zero estimate and 0 otherwise.
pub fn two_sided_p(estimate: f64, se: f64) -> f64 {
    if se > 0.0 {
        2.0 * Normal::new(0.0, 1.0)
            .expect("standard normal")
            .sf((estimate / se).abs())
    } else if se == 0.0 {
        if estimate == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        f64::NAN
    }
}

pub const ATE_HEADER: &str = "outcome,ate,se,ci_lo,ci_hi,n,matched,unmatched";

pub fn write_pairs(w: &mut dyn Write, m: &MatchedSample) -> std::io::Result<()> {
    writeln!(w, "{PAIRS_HEADER}")?;
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for p in &m.pairs {
        wtr.write_record([&p.treated, &p.control, &p.signature])?;
    }
    wtr.flush()
}

pub fn write_ate(w: &mut dyn Write, results: &[AteResult]) -> std::io::Result<()> {
    writeln!(w, "{ATE_HEADER}")?;
    for r in results {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.outcome,
            fmt_real(r.ate),
            fmt_real(r.se),
            fmt_real(r.ci95.0),
            fmt_real(r.ci95.1),
            r.n,
            r.matched,
            r.unmatched
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(cols: &[(&str, Vec<f64>)]) -> Frame {
        let n = cols[0].1.len();
        let mut f = Frame::new((0..n).map(|i| format!("u{i:02}")).collect());
        for (name, v) in cols {
            f.add_dense(*name, v.clone()).unwrap();
        }
        f
    }

    #[test]
    fn quintiles_of_one_to_ten() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(quintile_cutpoints(&v), vec![2.0, 4.0, 6.0, 8.0]);
        let f = frame(&[("x", v)]);
        let c = coarsen(&f, &CoarseningSpec::new().with("x", Coarsening::Quintile)).unwrap();
        let bins: Vec<&str> = c.signatures.iter().map(|s| s.as_deref().unwrap()).collect();
        assert_eq!(bins, ["0", "0", "1", "1", "2", "2", "3", "3", "4", "4"]);
    }

    #[test]
    fn constant_and_identity() {
        let f = frame(&[("x", vec![3.0; 5]), ("g", vec![1.0, 0.0, 2.5, 1.0, 0.0])]);
        let spec = CoarseningSpec::new()
            .with("x", Coarsening::Quintile)
            .with("g", Coarsening::Identity);
        let c = coarsen(&f, &spec).unwrap();
        assert_eq!(c.signatures[0].as_deref(), Some("0|1"));
        assert_eq!(c.signatures[2].as_deref(), Some("0|2.5"));
    }

    #[test]
    fn cutpoint_validation_and_missing() {
        let mut f = Frame::new(vec!["a".into(), "b".into()]);
        f.add_column("x", vec![Some(1.0), None]).unwrap();
        let bad = CoarseningSpec::new().with("x", Coarsening::Cutpoints(vec![2.0, 2.0]));
        assert!(coarsen(&f, &bad).is_err());
        let ok = CoarseningSpec::new().with("x", Coarsening::Cutpoints(vec![1.0, 2.0]));
        let c = coarsen(&f, &ok).unwrap();
        assert_eq!(c.signatures, vec![Some("0".to_string()), None]);
        assert_eq!(c.missing, 1);
        assert!(coarsen(&Frame::new(vec![]), &ok).is_err());
    }

    #[test]
    fn twin_and_lonely_treated() {
        let f = frame(&[
            ("t", vec![1.0, 0.0, 1.0, 0.0]),
            ("g", vec![1.0, 1.0, 2.0, 3.0]),
            ("y", vec![5.0, 3.0, 0.0, 0.0]),
        ]);
        let spec = CoarseningSpec::new().with("g", Coarsening::Identity);
        let m = cem_match(&f, "t", &spec, 7).unwrap();
        assert_eq!(m.pairs.len(), 1);
        assert_eq!(
            (m.pairs[0].treated.as_str(), m.pairs[0].control.as_str()),
            ("u00", "u01")
        );
        assert_eq!(m.unmatched_treated, ["u02"]);
        let a = ate(&m, &f, "y").unwrap();
        assert_eq!(a.ate, 2.0);
        assert_eq!(a.n, 2);
        assert_eq!((a.matched, a.unmatched), (1, 1));
    }

    #[test]
    fn constant_shift_and_determinism() {
        let n = 40;
        let g: Vec<f64> = (0..n).map(|i| (i % 4) as f64).collect();
        let t: Vec<f64> = (0..n).map(|i| ((i / 4) % 2) as f64).collect();
        let y: Vec<f64> = (0..n).map(|i| g[i] * 10.0 + 2.0 * t[i]).collect();
        let f = frame(&[("t", t), ("g", g), ("y", y)]);
        let spec = CoarseningSpec::new().with("g", Coarsening::Identity);
        let m = cem_match(&f, "t", &spec, 3).unwrap();
        assert_eq!(m, cem_match(&f, "t", &spec, 3).unwrap());
        assert_eq!(m.pairs.len(), 20);
        let used: HashSet<&str> = m.pairs.iter().map(|p| p.control.as_str()).collect();
        assert_eq!(used.len(), 20);
        let a = ate(&m, &f, "y").unwrap();
        assert!((a.ate - 2.0).abs() < 1e-12);
        assert!((a.ci95.0 + a.ci95.1 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn match_errors() {
        let spec = CoarseningSpec::new().with("g", Coarsening::Identity);
        let none = frame(&[("t", vec![0.0, 0.0]), ("g", vec![1.0, 1.0])]);
        assert!(cem_match(&none, "t", &spec, 1).is_err());
        let apart = frame(&[("t", vec![1.0, 0.0]), ("g", vec![1.0, 2.0])]);
        assert!(cem_match(&apart, "t", &spec, 1).is_err());
        assert!(matches!(
            cem_match(&apart, "nope", &spec, 1),
            Err(Error::UnknownColumn(_))
        ));
    }

    #[test]
    fn writers() {
        let f = frame(&[
            ("t", vec![1.0, 0.0]),
            ("g", vec![1.0, 1.0]),
            ("y", vec![2.0, 1.0]),
        ]);
        let m = cem_match(
            &f,
            "t",
            &CoarseningSpec::new().with("g", Coarsening::Identity),
            1,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_pairs(&mut buf, &m).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "treated_id,control_id,stratum_signature\nu00,u01,1\n"
        );
        let a = ate(&m, &f, "y").unwrap();
        let mut buf = Vec::new();
        write_ate(&mut buf, &[a]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("outcome,ate,se,ci_lo,ci_hi,n,matched,unmatched\ny,1,"));
    }
}
