//! Collates the model, matching and percentile outputs into `report.txt`.

use std::path::Path;

use disrupt_core::matching::two_sided_p;
use disrupt_core::regress::{stars, ModelRow};

use crate::analysis::{render_families, NOT_ESTIMABLE};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::stage::Staged;

type Table = (Vec<String>, Vec<Vec<String>>);

fn read_table(path: &Path, stage: &str) -> CliResult<Table> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| {
        CliError::user(format!(
            "{}: {e} (run `disrupt {stage}` first)",
            path.display()
        ))
    })?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::user(format!("{}: {e}", path.display())))?
        .iter()
        .map(String::from)
        .collect();
    let rows = rdr
        .records()
        .map(|r| r.map(|r| r.iter().map(String::from).collect()))
        .collect::<Result<Vec<Vec<String>>, _>>()
        .map_err(|e| CliError::user(format!("{}: {e}", path.display())))?;
    Ok((header, rows))
}

/// Field accessor that names the file and column on failure.
struct Cols<'a> {
    path: &'a Path,
    header: &'a [String],
}

impl Cols<'_> {
    fn index(&self, name: &str) -> CliResult<usize> {
        self.header.iter().position(|h| h == name).ok_or_else(|| {
            CliError::user(format!("{}: missing column `{name}`", self.path.display()))
        })
    }

    fn num(&self, row: &[String], name: &str) -> CliResult<f64> {
        let s = &row[self.index(name)?];
        s.parse().map_err(|_| {
            CliError::user(format!(
                "{}: column `{name}`: `{s}` is not a number",
                self.path.display()
            ))
        })
    }
}

fn model_rows(path: &Path) -> CliResult<Vec<ModelRow>> {
    let (header, rows) = read_table(path, "regress")?;
    let c = Cols {
        path,
        header: &header,
    };
    rows.iter()
        .map(|r| {
            Ok(ModelRow {
                model: r[c.index("model")?].clone(),
                term: r[c.index("term")?].clone(),
                estimate: c.num(r, "estimate")?,
                se: c.num(r, "se")?,
                p: c.num(r, "p")?,
                n: c.num(r, "n")? as usize,
                r2: c.num(r, "r2")?,
            })
        })
        .collect()
}

/// Left-aligned first column, right-aligned rest.
fn align(lines: &[Vec<String>]) -> String {
    let cols = lines.iter().map(Vec::len).max().unwrap_or(0);
    let width: Vec<usize> = (0..cols)
        .map(|j| {
            lines
                .iter()
                .filter_map(|l| l.get(j))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for l in lines {
        let cells: Vec<String> = l
            .iter()
            .enumerate()
            .map(|(j, s)| {
                if j == 0 {
                    format!("{s:<w$}", w = width[0])
                } else {
                    format!("{s:>w$}", w = width[j])
                }
            })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn ate_table(path: &Path) -> CliResult<String> {
    let (header, rows) = read_table(path, "cem")?;
    let c = Cols {
        path,
        header: &header,
    };
    let mut lines = vec![[
        "Outcome",
        "ATE",
        "SE",
        "95% CI",
        "p",
        "N",
        "Matched / unmatched",
    ]
    .map(String::from)
    .to_vec()];
    for r in &rows {
        let p = two_sided_p(c.num(r, "ate")?, c.num(r, "se")?);
        lines.push(vec![
            r[c.index("outcome")?].clone(),
            format!("{:.5}{}", c.num(r, "ate")?, stars(p)),
            format!("({:.5})", c.num(r, "se")?),
            format!("[{:.5}, {:.5}]", c.num(r, "ci_lo")?, c.num(r, "ci_hi")?),
            format!("{p:.5}"),
            r[c.index("n")?].clone(),
            format!("{} / {}", r[c.index("matched")?], r[c.index("unmatched")?]),
        ]);
    }
    Ok(align(&lines))
}

fn percentile_tables(path: &Path) -> CliResult<String> {
    let (header, rows) = read_table(path, "summarize")?;
    let c = Cols {
        path,
        header: &header,
    };
    let ind = c.index("indicator")?;
    let mut out = String::new();
    let mut names: Vec<&str> = Vec::new();
    for r in &rows {
        if !names.contains(&r[ind].as_str()) {
            names.push(&r[ind]);
        }
    }
    for name in names {
        let mut lines = vec![header[1..].to_vec()];
        for r in rows.iter().filter(|r| r[ind] == name) {
            let mut line = vec![r[1].clone(), r[2].clone()];
            for (j, cell) in r.iter().enumerate().skip(3) {
                let v = c.num(r, &header[j])?;
                debug_assert_eq!(cell.parse::<f64>().ok(), Some(v));
                line.push(format!("{v:.5}"));
            }
            lines.push(line);
        }
        out.push_str(&format!("\n{name}\n"));
        out.push_str(&align(&lines));
    }
    Ok(out)
}

fn section(text: &mut String, title: &str, body: &str) {
    text.push_str(&format!("\n{title}\n{}\n\n", "=".repeat(title.len())));
    text.push_str(body.trim_start_matches('\n'));
}

pub fn report(cfg: &RunConfig) -> CliResult<String> {
    let models = model_rows(&cfg.out.join("models.csv"))?;
    let diag_path = cfg.out.join("diagnostics.csv");
    let (diag_header, diag_rows) = read_table(&diag_path, "regress")?;
    let d = Cols {
        path: &diag_path,
        header: &diag_header,
    };
    let (model, test, note) = (d.index("model")?, d.index("test")?, d.index("note")?);
    let not_estimable: Vec<(String, String)> = diag_rows
        .iter()
        .filter(|r| r[test] == NOT_ESTIMABLE)
        .map(|r| (r[model].clone(), r[note].clone()))
        .collect();
    let ate = ate_table(&cfg.out.join("ate.csv"))?;
    let pct = percentile_tables(&cfg.out.join("percentiles.csv"))?;

    let n_models = {
        let mut m: Vec<&str> = models.iter().map(|r| r.model.as_str()).collect();
        m.dedup();
        m.len()
    };
    let mut text = String::from("Disruption indicators: validation report\n");
    section(
        &mut text,
        "Regression models",
        &render_families(&models, &not_estimable),
    );
    section(
        &mut text,
        "Matched-sample treatment effects of milestone status",
        &ate,
    );
    section(&mut text, "Indicator percentiles by publication year", &pct);

    let mut out = Staged::new(&cfg.out)?;
    out.write_str("report.txt", &text)?;
    let written = out.commit()?;
    Ok(format!(
        "report: {n_models} models, {} matched-sample effects, percentile tables -> {}",
        ate.lines().count().saturating_sub(1),
        written[0].display()
    ))
}
