//! Column-oriented analysis table: one row per paper, numeric columns with
//! explicit missing values.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::PaperMeta;
use crate::indicators::{IndicatorFile, IndicatorTable};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Frame {
    ids: Vec<String>,
    names: Vec<String>,
    columns: Vec<Vec<Option<f64>>>,
}

impl Frame {
    pub fn new(ids: Vec<String>) -> Self {
        Frame {
            ids,
            names: Vec::new(),
            columns: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    pub fn add_column(&mut self, name: impl Into<String>, values: Vec<Option<f64>>) -> Result<()> {
        let name = name.into();
        if values.len() != self.ids.len() {
            return Err(Error::Invalid(format!(
                "column `{name}` has {} values for {} rows",
                values.len(),
                self.ids.len()
            )));
        }
        if self.has_column(&name) {
            return Err(Error::Invalid(format!("duplicate column `{name}`")));
        }
        self.names.push(name);
        self.columns.push(values);
        Ok(())
    }

    /// Convenience for fully observed columns.
    pub fn add_dense(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        self.add_column(name, values.into_iter().map(Some).collect())
    }

    pub fn column(&self, name: &str) -> Result<&[Option<f64>]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    /// Keeps only rows whose index satisfies `keep`.
    pub fn filter_rows(&self, keep: impl Fn(usize) -> bool) -> Frame {
        let rows: Vec<usize> = (0..self.len()).filter(|&i| keep(i)).collect();
        Frame {
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
            names: self.names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&i| c[i]).collect())
                .collect(),
        }
    }
}

/// Metadata-derived columns added to every analysis frame.
pub const META_COLUMNS: [&str; 8] = [
    "milestone",
    "years",
    "n_authors",
    "n_pages",
    "n_countries",
    "usa",
    "china",
    "eu28",
];

/// Joins an indicator table with paper metadata. `years` is the paper age
/// `reference_year - year`; the reference year defaults to the latest
/// publication year among the rows.
pub fn analysis_frame(
    indicators: &IndicatorFile,
    papers: &[PaperMeta],
    reference_year: Option<i32>,
) -> Result<Frame> {
    let by_id: HashMap<&str, &PaperMeta> = papers.iter().map(|m| (m.id.as_str(), m)).collect();
    let metas: Vec<&PaperMeta> = indicators
        .ids
        .iter()
        .map(|id| {
            by_id
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::UnknownPaper(id.clone()))
        })
        .collect::<Result<_>>()?;
    let mut frame = Frame::new(indicators.ids.clone());
    for (name, values) in indicators.columns.iter().zip(&indicators.values) {
        frame.add_column(name.clone(), values.clone())?;
    }
    let reference_year =
        reference_year.unwrap_or_else(|| metas.iter().map(|m| m.year).max().unwrap_or(0));
    type Derive = fn(&PaperMeta, i32) -> f64;
    let derived: [(&str, Derive); 8] = [
        ("milestone", |m, _| if m.milestone { 1.0 } else { 0.0 }),
        ("years", |m, r| (r - m.year) as f64),
        ("n_authors", |m, _| m.n_authors as f64),
        ("n_pages", |m, _| m.n_pages as f64),
        ("n_countries", |m, _| m.n_countries as f64),
        ("usa", |m, _| if m.usa { 1.0 } else { 0.0 }),
        ("china", |m, _| if m.china { 1.0 } else { 0.0 }),
        ("eu28", |m, _| if m.eu28 { 1.0 } else { 0.0 }),
    ];
    for (name, f) in derived {
        if frame.has_column(name) {
            continue;
        }
        frame.add_dense(name, metas.iter().map(|m| f(m, reference_year)).collect())?;
    }
    Ok(frame)
}

impl IndicatorTable {
    /// The numeric view of this table, as it would be read back from disk.
    pub fn to_file(&self) -> IndicatorFile {
        let columns: Vec<String> = self.columns().into_iter().skip(1).collect();
        let values = columns
            .iter()
            .map(|c| self.column(c).expect("own column"))
            .collect();
        IndicatorFile {
            columns,
            ids: self.records.iter().map(|r| r.id.clone()).collect(),
            values,
        }
    }
}
