//! Model output: a long CSV table and an aligned side-by-side text table.

use std::fmt::Write as _;
use std::io::Write;

use super::{LogitFit, OlsFit};
use crate::io::fmt_real;

pub const MODEL_CSV_HEADER: &str = "model,term,estimate,se,p,stars,n,r2";

/// Significance marker: `*` p < 0.05, `**` p < 0.01, `***` p < 0.001.
pub fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelRow {
    pub model: String,
    pub term: String,
    pub estimate: f64,
    pub se: f64,
    pub p: f64,
    pub n: usize,
    /// R² for OLS, McFadden pseudo-R² for logit.
    pub r2: f64,
}

impl OlsFit {
    pub fn table_rows(&self) -> Vec<ModelRow> {
        (0..self.terms.len())
            .map(|i| ModelRow {
                model: self.spec.name.clone(),
                term: self.terms[i].clone(),
                estimate: self.coefficients[i],
                se: self.se[i],
                p: self.p_values[i],
                n: self.n,
                r2: self.r2,
            })
            .collect()
    }
}

impl LogitFit {
    /// Rows on the odds-ratio scale; p-values test the coefficient against 0.
    pub fn table_rows(&self) -> Vec<ModelRow> {
        (0..self.terms.len())
            .map(|i| ModelRow {
                model: self.spec.name.clone(),
                term: self.terms[i].clone(),
                estimate: self.odds_ratios[i],
                se: self.se_odds_ratio[i],
                p: self.p_values[i],
                n: self.n,
                r2: self.pseudo_r2,
            })
            .collect()
    }
}

pub fn write_model_csv(w: &mut dyn Write, rows: &[ModelRow]) -> std::io::Result<()> {
    writeln!(w, "{MODEL_CSV_HEADER}")?;
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for r in rows {
        wtr.write_record([
            r.model.clone(),
            r.term.clone(),
            fmt_real(r.estimate),
            fmt_real(r.se),
            fmt_real(r.p),
            stars(r.p).to_string(),
            r.n.to_string(),
            fmt_real(r.r2),
        ])?;
    }
    wtr.flush()
}

/// Side-by-side layout: one column per model, one block per term with the
/// estimate and its standard error in parentheses, then N and R².
/// Models and terms appear in first-seen order.
pub fn render_text_table(rows: &[ModelRow]) -> String {
    let mut models: Vec<&str> = Vec::new();
    let mut terms: Vec<&str> = Vec::new();
    for r in rows {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
        if !terms.contains(&r.term.as_str()) {
            terms.push(&r.term);
        }
    }
    let cell = |m: &str, t: &str| rows.iter().find(|r| r.model == m && r.term == t);
    let summary = |m: &str| rows.iter().find(|r| r.model == m);

    let mut lines: Vec<Vec<String>> = Vec::new();
    lines.push(
        std::iter::once(String::new())
            .chain(models.iter().map(|m| m.to_string()))
            .collect(),
    );
    for t in &terms {
        let mut est = vec![t.to_string()];
        let mut se = vec![String::new()];
        for m in &models {
            match cell(m, t) {
                Some(r) => {
                    est.push(format!("{:.5}{}", r.estimate, stars(r.p)));
                    se.push(format!("({:.5})", r.se));
                }
                None => {
                    est.push(String::new());
                    se.push(String::new());
                }
            }
        }
        lines.push(est);
        lines.push(se);
    }
    let mut n_row = vec!["N".to_string()];
    let mut r2_row = vec!["R2".to_string()];
    for m in &models {
        let r = summary(m).expect("model has rows");
        n_row.push(r.n.to_string());
        r2_row.push(format!("{:.5}", r.r2));
    }
    lines.push(n_row);
    lines.push(r2_row);

    let widths: Vec<usize> = (0..=models.len())
        .map(|c| {
            lines
                .iter()
                .map(|l| l[c].chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    let rule = "-".repeat(widths.iter().sum::<usize>() + 2 * models.len());
    for (i, l) in lines.iter().enumerate() {
        if i == 1 || i == lines.len() - 2 {
            let _ = writeln!(out, "{rule}");
        }
        let mut line = format!("{:<w$}", l[0], w = widths[0]);
        for (c, v) in l.iter().enumerate().skip(1) {
            let _ = write!(line, "  {:>w$}", v, w = widths[c]);
        }
        let _ = writeln!(out, "{}", line.trim_end());
    }
    let _ = writeln!(out, "{rule}");
    let _ = writeln!(out, "* p < 0.05, ** p < 0.01, *** p < 0.001");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(model: &str, term: &str, estimate: f64, p: f64) -> ModelRow {
        ModelRow {
            model: model.into(),
            term: term.into(),
            estimate,
            se: 0.01234567,
            p,
            n: 44809,
            r2: 0.00097,
        }
    }

    #[test]
    fn star_thresholds() {
        assert_eq!(stars(0.0009), "***");
        assert_eq!(stars(0.001), "**");
        assert_eq!(stars(0.049), "*");
        assert_eq!(stars(0.05), "");
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_model_csv(&mut buf, &[row("di1", "milestone", 0.13206, 0.0001)]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(
            s,
            "model,term,estimate,se,p,stars,n,r2\ndi1,milestone,0.13206,0.01234567,0.0001,***,44809,0.00097\n"
        );
    }

    #[test]
    fn text_layout() {
        let rows = [
            row("di1", "constant", -0.5, 0.2),
            row("di1", "milestone", 0.13206, 0.0001),
            row("di5", "constant", 0.1, 0.02),
        ];
        let t = render_text_table(&rows);
        assert!(t.contains("0.13206***"));
        assert!(t.contains("(0.01235)"));
        assert!(t.contains("44809"));
        let header = t.lines().next().unwrap();
        assert!(header.contains("di1") && header.contains("di5"));
    }
}
