//! Analysis stages on `indicators.csv` joined with the papers table:
//! summarize, regress, cem.

use std::collections::HashSet;
use std::path::Path;

use disrupt_core::frame::{analysis_frame, Frame};
use disrupt_core::indicators::IndicatorFile;
use disrupt_core::io::{fmt_opt, fmt_real};
use disrupt_core::matching::{ate, cem_match, write_ate, write_pairs, CoarseningSpec};
use disrupt_core::read_paper_table;
use disrupt_core::regress::{
    breusch_pagan, cooks_distance, logit_fit, ols_fit, predict_group_means, render_text_table,
    skew_kurt_normality, vif, write_model_csv, ModelRow, ModelSpec, OlsFit,
};
use disrupt_core::summaries::{
    histogram, milestone_annual_medians, timeline_svg, write_histograms, write_milestone_medians,
    write_percentiles, yearly_percentiles,
};

use crate::config::{Preset, RunConfig};
use crate::error::{CliError, CliResult};
use crate::stage::Staged;

/// Model name suffix for the with-controls family.
pub const CONTROLS_SUFFIX: &str = "+c";
/// Model name prefix for the logit family.
pub const LOGIT_PREFIX: &str = "logit:";
/// Diagnostics entry for a model that could not be fitted.
pub const NOT_ESTIMABLE: &str = "not_estimable";

fn load_frame(cfg: &RunConfig) -> CliResult<(IndicatorFile, Frame)> {
    let file = IndicatorFile::read(&cfg.indicators_path())?;
    let papers = read_paper_table(&cfg.papers, &cfg.load)?;
    let frame = analysis_frame(&file, &papers, cfg.reference_year)?;
    Ok((file, frame))
}

pub fn summarize(cfg: &RunConfig) -> CliResult<String> {
    let (file, frame) = load_frame(cfg)?;
    let columns: Vec<String> = match &cfg.columns {
        Some(c) => c.clone(),
        None => file
            .columns
            .iter()
            .filter(|c| !matches!(c.as_str(), "year" | "citations"))
            .cloned()
            .collect(),
    };
    let mut timelines = Vec::new();
    let mut milestones = Vec::new();
    let mut hists = Vec::new();
    for col in &columns {
        timelines.push(yearly_percentiles(&frame, col, &cfg.percentiles)?);
        milestones.push((col.clone(), milestone_annual_medians(&frame, col)?));
        hists.push(histogram(&frame, col, cfg.bins)?);
    }
    let mut out = Staged::new(&cfg.out)?;
    out.write("percentiles.csv", |w| write_percentiles(w, &timelines))?;
    out.write("milestone_medians.csv", |w| {
        write_milestone_medians(w, &milestones)
    })?;
    out.write("histograms.csv", |w| write_histograms(w, &hists))?;
    for (t, (_, m)) in timelines.iter().zip(&milestones) {
        out.write_str(
            &format!("timeline_{}.svg", t.indicator),
            &timeline_svg(t, m),
        )?;
    }
    out.commit()?;
    Ok(format!(
        "summarize: {} indicators over {} papers, {} years -> percentiles.csv, milestone_medians.csv, histograms.csv",
        columns.len(),
        frame.len(),
        timelines.iter().map(|t| t.rows.len()).max().unwrap_or(0)
    ))
}

fn read_ids(path: &Path) -> CliResult<Vec<String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::user(format!("{}: {e}", path.display())))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}

/// The configured model specs, in report order.
pub fn model_specs(cfg: &RunConfig, exclude: &[String]) -> Vec<(Preset, ModelSpec)> {
    let mut specs = Vec::new();
    for preset in [Preset::Milestone, Preset::Controls, Preset::Logit] {
        if !cfg.presets.contains(&preset) {
            continue;
        }
        for outcome in &cfg.outcomes {
            // indicator models hold citation impact fixed, as the matching does
            let mut controls: Vec<&str> = Vec::new();
            if outcome != "log_citations" && !cfg.controls.iter().any(|c| c == "log_citations") {
                controls.push("log_citations");
            }
            controls.extend(cfg.controls.iter().map(String::as_str));
            let mut spec = match preset {
                Preset::Milestone => {
                    ModelSpec::new(outcome.clone(), outcome.clone(), &["milestone"])
                }
                Preset::Controls => {
                    let preds: Vec<&str> = std::iter::once("milestone").chain(controls).collect();
                    ModelSpec::new(
                        format!("{outcome}{CONTROLS_SUFFIX}"),
                        outcome.clone(),
                        &preds,
                    )
                }
                // expert designations are modelled on the indicator alone; the
                // paper-level controls bear on the indicators, not on the experts
                Preset::Logit => ModelSpec::new(
                    format!("{LOGIT_PREFIX}{outcome}"),
                    "milestone",
                    &[outcome.as_str()],
                ),
            };
            spec.exclude_rows = exclude.to_vec();
            specs.push((preset, spec));
        }
    }
    specs
}

fn diagnostics(w: &mut Vec<[String; 5]>, fit: &OlsFit, frame: &Frame) {
    let model = &fit.spec.name;
    let mut row = |test: &str, stat: Option<f64>, p: Option<f64>, note: String| {
        w.push([model.clone(), test.into(), fmt_opt(stat), fmt_opt(p), note]);
    };
    match breusch_pagan(fit) {
        Ok(bp) => row(
            "breusch_pagan",
            Some(bp.statistic),
            Some(bp.p_value),
            format!("df={}", bp.df),
        ),
        Err(e) => row("breusch_pagan", None, None, e.to_string()),
    }
    match skew_kurt_normality(&fit.residuals) {
        Ok(t) => row(
            "residual_normality",
            Some(t.statistic),
            Some(t.p_value),
            String::new(),
        ),
        Err(e) => row("residual_normality", None, None, e.to_string()),
    }
    match cooks_distance(fit, None) {
        Ok(c) => {
            let max = c.distances.iter().copied().fold(0.0, f64::max);
            row(
                "cooks_flagged",
                Some(c.flagged.len() as f64),
                None,
                format!("cutoff={} max={}", fmt_real(c.cutoff), fmt_real(max)),
            );
        }
        Err(e) => row("cooks_flagged", None, None, e.to_string()),
    }
    if fit.spec.predictors.len() > 1 {
        let preds: Vec<&str> = fit.spec.predictors.iter().map(String::as_str).collect();
        let kept = frame.filter_rows(|i| fit.rows.binary_search(&i).is_ok());
        match vif(&kept, &preds) {
            Ok(v) => {
                for (name, value) in v {
                    row(&format!("vif:{name}"), Some(value), None, String::new());
                }
            }
            Err(e) => row("vif", None, None, e.to_string()),
        }
    }
}

pub fn regress(cfg: &RunConfig) -> CliResult<String> {
    let (_, frame) = load_frame(cfg)?;
    let exclude = match &cfg.exclude_ids {
        Some(path) => {
            let ids = read_ids(path)?;
            let known: HashSet<&str> = frame.ids().iter().map(String::as_str).collect();
            if let Some(bad) = ids.iter().find(|id| !known.contains(id.as_str())) {
                return Err(CliError::user(format!(
                    "{}: unknown paper id `{bad}`",
                    path.display()
                )));
            }
            ids
        }
        None => Vec::new(),
    };
    if cfg.presets.is_empty() || cfg.outcomes.is_empty() {
        return Err(CliError::user(
            "no models configured (empty `presets` or `outcomes`)",
        ));
    }

    let mut rows: Vec<ModelRow> = Vec::new();
    let mut diags: Vec<[String; 5]> = Vec::new();
    let mut margins: Vec<String> = Vec::new();
    let (mut n_ols, mut n_logit, mut skipped) = (0, 0, 0);
    for (preset, spec) in model_specs(cfg, &exclude) {
        let context =
            |e: disrupt_core::Error| CliError::user(format!("model `{}`: {e}", spec.name));
        if preset == Preset::Logit {
            // separation is a property of the data, not a failed run
            let fit = match logit_fit(&frame, &spec) {
                Ok(fit) => fit,
                Err(
                    e @ (disrupt_core::Error::Separation { .. }
                    | disrupt_core::Error::NonConvergence { .. }),
                ) => {
                    log::warn!("model `{}` not estimable: {e}", spec.name);
                    diags.push([
                        spec.name.clone(),
                        NOT_ESTIMABLE.into(),
                        String::new(),
                        String::new(),
                        e.to_string(),
                    ]);
                    skipped += 1;
                    continue;
                }
                Err(e) => return Err(context(e)),
            };
            if !fit.converged {
                log::warn!(
                    "model `{}` stopped after {} iterations",
                    spec.name,
                    fit.iterations
                );
            }
            rows.extend(fit.table_rows());
            n_logit += 1;
        } else {
            let fit = ols_fit(&frame, &spec).map_err(context)?;
            diagnostics(&mut diags, &fit, &frame);
            for g in predict_group_means(&fit, &frame, "milestone", None).map_err(context)? {
                margins.push(format!(
                    "{},{},{},{},{},{},{}",
                    spec.name,
                    fmt_real(g.group),
                    g.n,
                    fmt_real(g.mean),
                    fmt_real(g.se),
                    fmt_real(g.ci_lo),
                    fmt_real(g.ci_hi)
                ));
            }
            rows.extend(fit.table_rows());
            n_ols += 1;
        }
    }

    let mut out = Staged::new(&cfg.out)?;
    out.write("models.csv", |w| write_model_csv(w, &rows))?;
    let notes: Vec<(String, String)> = diags
        .iter()
        .filter(|d| d[1] == NOT_ESTIMABLE)
        .map(|d| (d[0].clone(), d[4].clone()))
        .collect();
    out.write_str("models.txt", &render_families(&rows, &notes))?;
    out.write("diagnostics.csv", |w| {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["model", "test", "statistic", "p", "note"])?;
        for d in &diags {
            wtr.write_record(d)?;
        }
        wtr.flush()
    })?;
    out.write("margins.csv", |w| {
        writeln!(w, "model,milestone,n,mean,se,ci_lo,ci_hi")?;
        margins.iter().try_for_each(|m| writeln!(w, "{m}"))
    })?;
    out.commit()?;
    Ok(format!(
        "regress: {n_ols} OLS and {n_logit} logit models ({skipped} not estimable) on {} papers ({} excluded) -> models.csv, models.txt",
        frame.len(),
        exclude.len()
    ))
}

/// Splits model rows into the three families, each rendered side by side
/// with outcome names as column headings, then any models that could not be
/// fitted.
pub fn render_families(rows: &[ModelRow], not_estimable: &[(String, String)]) -> String {
    let family = |r: &ModelRow| -> (usize, String) {
        if let Some(rest) = r.model.strip_prefix(LOGIT_PREFIX) {
            (2, rest.to_string())
        } else if let Some(rest) = r.model.strip_suffix(CONTROLS_SUFFIX) {
            (1, rest.to_string())
        } else {
            (0, r.model.clone())
        }
    };
    let titles = [
        "Milestone-only models (OLS, robust standard errors)",
        "Models with controls (OLS, robust standard errors)",
        "Logit of milestone on each indicator (odds ratios)",
    ];
    let mut text = String::new();
    for (k, title) in titles.iter().enumerate() {
        let part: Vec<ModelRow> = rows
            .iter()
            .filter_map(|r| {
                let (f, name) = family(r);
                (f == k).then(|| ModelRow {
                    model: name,
                    ..r.clone()
                })
            })
            .collect();
        if part.is_empty() {
            continue;
        }
        if !text.is_empty() {
            text.push('\n');
        }
        text.push_str(title);
        text.push('\n');
        text.push_str(&"-".repeat(title.len()));
        text.push('\n');
        text.push_str(&render_text_table(&part));
    }
    if !not_estimable.is_empty() {
        text.push_str("\nNot estimable:\n");
        for (model, why) in not_estimable {
            text.push_str(&format!("  {model}: {why}\n"));
        }
    }
    text
}

pub fn cem(cfg: &RunConfig) -> CliResult<String> {
    let (_, frame) = load_frame(cfg)?;
    let spec = CoarseningSpec::bibliometric_preset(cfg.match_citations);
    let matched = cem_match(&frame, "milestone", &spec, cfg.seed)?;
    let results = cfg
        .cem_outcomes
        .iter()
        .map(|o| {
            ate(&matched, &frame, o).map_err(|e| CliError::user(format!("outcome `{o}`: {e}")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut out = Staged::new(&cfg.out)?;
    out.write("pairs.csv", |w| write_pairs(w, &matched))?;
    out.write("ate.csv", |w| write_ate(w, &results))?;
    out.commit()?;
    let headline = results
        .iter()
        .map(|r| format!("{} {:.4} (p={:.3})", r.outcome, r.ate, r.p_value))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(format!(
        "cem: {} matched, {} unmatched, {} strata (seed {}); ATE {headline}",
        matched.pairs.len(),
        matched.unmatched_treated.len(),
        matched.strata.len(),
        cfg.seed
    ))
}
