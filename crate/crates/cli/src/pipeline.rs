//! Corpus stages: generate, ingest, indicators, oracle-check.

use std::collections::HashMap;
use std::io::Write;
use std::time::Instant;

use disrupt_core::graph::PAPER_COLUMNS;
use disrupt_core::indicators::{IndicatorTable, RunReport};
use disrupt_core::synth::{generate_corpus, Oracle};
use disrupt_core::{compute_all, load_corpus, Corpus, PaperMeta};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::stage::Staged;

pub fn generate(cfg: &RunConfig) -> CliResult<String> {
    let corpus = generate_corpus(&cfg.generator)?;
    let mut out = Staged::new(&cfg.out)?;
    out.write("papers.csv", |w| corpus.write_papers(w))?;
    out.write("citations.csv", |w| corpus.write_citations(w))?;
    out.write_str("manifest.txt", &corpus.manifest())?;
    out.commit()?;
    Ok(format!(
        "generate: {} papers, {} citations, {} planted milestones (seed {}) -> {}",
        corpus.papers.len(),
        corpus.edge_count(),
        corpus.planted.len(),
        cfg.generator.seed,
        cfg.out.display()
    ))
}

fn write_papers(w: &mut dyn Write, corpus: &Corpus) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(PAPER_COLUMNS)?;
    let b = |v: bool| if v { "1" } else { "0" }.to_string();
    for n in 0..corpus.len() as u32 {
        let Some(m): Option<&PaperMeta> = corpus.meta(n) else {
            continue;
        };
        wtr.write_record([
            m.id.to_string(),
            m.year.to_string(),
            m.journal.clone(),
            m.doc_type.clone(),
            b(m.milestone),
            m.n_authors.to_string(),
            m.n_pages.to_string(),
            m.n_countries.to_string(),
            b(m.usa),
            b(m.china),
            b(m.eu28),
        ])?;
    }
    wtr.flush()
}

fn write_citations(w: &mut dyn Write, corpus: &Corpus) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["citing", "cited"])?;
    for n in 0..corpus.len() as u32 {
        for &r in corpus.refs(n) {
            wtr.write_record([corpus.id(n).as_str(), corpus.id(r).as_str()])?;
        }
    }
    wtr.flush()
}

/// Validates the input tables and writes them back normalised: filtered,
/// deduplicated, self-citations removed, comma-delimited.
pub fn ingest(cfg: &RunConfig) -> CliResult<String> {
    let (corpus, report) = load_corpus(&cfg.papers, &cfg.citations, &cfg.load)?;
    let mut out = Staged::new(&cfg.out)?;
    out.write("papers.csv", |w| write_papers(w, &corpus))?;
    out.write("citations.csv", |w| write_citations(w, &corpus))?;
    out.write_str("load_report.txt", &report.to_string())?;
    out.commit()?;
    Ok(format!(
        "ingest: {} papers ({} filtered), {} of {} citations kept, {} stubs -> {}",
        report.papers_read - report.papers_filtered,
        report.papers_filtered,
        report.edges_kept,
        report.edges_read,
        report.stubs_created,
        cfg.out.display()
    ))
}

pub fn indicators(cfg: &RunConfig) -> CliResult<String> {
    let (corpus, _) = load_corpus(&cfg.papers, &cfg.citations, &cfg.load)?;
    let start = Instant::now();
    let table = compute_all(&corpus, &cfg.indicators)?;
    log::info!("indicators computed in {:.2?}", start.elapsed());
    let path = cfg.indicators_path();
    let mut out = Staged::new(&cfg.out)?;
    out.write("indicators.csv", |w| table.write_csv(w))?;
    out.write_str("indicators_report.txt", &table.report.to_string())?;
    out.commit()?;
    Ok(format!(
        "indicators: {} focal papers in {} cohorts, {} edges, {:.2}s -> {}",
        table.report.focal_papers,
        table.report.cohorts,
        corpus.edge_count(),
        start.elapsed().as_secs_f64(),
        path.display()
    ))
}

/// Agreement of two rendered cells: identical text, or numbers equal to the
/// ten significant digits the tables carry.
fn cells_agree(a: &str, b: &str) -> bool {
    if a == b {
        return true;
    }
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => (x - y).abs() <= 1e-9 * x.abs().max(y.abs()),
        _ => false,
    }
}

fn parse_rows(text: &str) -> CliResult<(Vec<String>, Vec<Vec<String>>)> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| CliError::internal(e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    let rows = rdr
        .records()
        .map(|r| r.map(|r| r.iter().map(String::from).collect()))
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::internal(e.to_string()))?;
    Ok((header, rows))
}

/// Recomputes every indicator with the brute-force oracle and compares it
/// with `indicators.csv`. Any disagreement is an internal error.
pub fn oracle_check(cfg: &RunConfig) -> CliResult<String> {
    let (corpus, _) = load_corpus(&cfg.papers, &cfg.citations, &cfg.load)?;
    let oracle = Oracle::new(&corpus)?;
    let expected = IndicatorTable {
        thresholds: cfg.indicators.thresholds.clone(),
        dep_mode: cfg.indicators.dep_mode,
        records: oracle.table(&cfg.indicators),
        report: RunReport::default(),
    };
    let mut buf = Vec::new();
    expected
        .write_csv(&mut buf)
        .map_err(|e| CliError::internal(e.to_string()))?;
    let (want_header, want_rows) = parse_rows(&String::from_utf8_lossy(&buf))?;

    let path = cfg.indicators_path();
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::user(format!("{}: {e}", path.display())))?;
    let (got_header, got_rows) =
        parse_rows(&text).map_err(|e| CliError::user(format!("{}: {e}", path.display())))?;
    if got_header != want_header {
        return Err(CliError::user(format!(
            "{}: columns {:?} do not match the configured indicators {:?}",
            path.display(),
            got_header,
            want_header
        )));
    }

    let got: HashMap<&str, &Vec<String>> = got_rows.iter().map(|r| (r[0].as_str(), r)).collect();
    let mut mismatches = Vec::new();
    for want in &want_rows {
        let id = want[0].as_str();
        let Some(row) = got.get(id) else {
            mismatches.push(format!("{id}: missing from {}", path.display()));
            continue;
        };
        for (c, col) in want_header.iter().enumerate().skip(1) {
            if !cells_agree(&row[c], &want[c]) {
                mismatches.push(format!(
                    "{id}.{col}: engine `{}`, oracle `{}`",
                    row[c], want[c]
                ));
            }
        }
    }
    if got_rows.len() != want_rows.len() {
        mismatches.push(format!(
            "{} rows in {}, oracle has {}",
            got_rows.len(),
            path.display(),
            want_rows.len()
        ));
    }
    if !mismatches.is_empty() {
        for m in mismatches.iter().take(20) {
            eprintln!("mismatch: {m}");
        }
        return Err(CliError::internal(format!(
            "{} mismatches between {} and the oracle",
            mismatches.len(),
            path.display()
        )));
    }
    Ok(format!(
        "oracle-check: {} papers x {} columns, 0 mismatches",
        want_rows.len(),
        want_header.len() - 1
    ))
}

#[cfg(test)]
mod tests {
    use super::cells_agree;

    #[test]
    fn cell_agreement() {
        assert!(cells_agree("", ""));
        assert!(cells_agree("0.1234567891", "0.1234567891"));
        assert!(cells_agree("1.000000001", "1.000000001"));
        assert!(!cells_agree("0.25", "0.2500001"));
        assert!(!cells_agree("", "0"));
    }
}
