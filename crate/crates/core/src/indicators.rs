//! The disruption-index family (DI_l over a focal paper's own references and
//! over its journal-year cohort's reference union) and the dependency
//! indicator DEP with its inversion.
//!
//! For a focal paper F and reference set R:
//!
//! * `n_i`: citers of F with no link into R
//! * `n_j`: citers of F with at least `l` links into R
//! * `n_k`: papers other than F that link into R but do not cite F
//!
//! and `DI_l = (n_i - n_j) / (n_i + n_j + n_k)`, undefined on a zero denominator.
//!
//! All counts for one reference set come out of a single sweep over the
//! in-edges of R: `links[p] = |refs(p) ∩ R|` is accumulated for every paper
//! that touches R, and every count is then read off that array. In cohort mode
//! the sweep is shared by all members of the cohort.

use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{Corpus, Node};
use crate::io::{self, fmt_opt, fmt_real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReferenceSet {
    /// The focal paper's own cited references.
    OwnReferences,
    /// The union of cited references over the focal paper's journal-year cohort.
    CohortUnion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DepMode {
    /// Links from citers into the focal references, averaged over citers.
    #[default]
    MeanPerCiter,
    /// Total number of such links.
    TotalLinks,
}

impl std::str::FromStr for DepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(DepMode::MeanPerCiter),
            "total" => Ok(DepMode::TotalLinks),
            other => Err(Error::Invalid(format!(
                "dep mode must be `mean` or `total`, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub n_i: u64,
    pub n_j: u64,
    pub n_k: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DisruptionCounts {
    pub n_i: u64,
    pub n_j: u64,
    pub n_k: u64,
    pub threshold: u32,
    pub mode: ReferenceSet,
}

impl DisruptionCounts {
    pub fn counts(&self) -> Counts {
        Counts {
            n_i: self.n_i,
            n_j: self.n_j,
            n_k: self.n_k,
        }
    }
}

/// `(n_i - n_j) / (n_i + n_j + n_k)`, or `None` when the denominator is zero.
pub fn disruption_index(counts: &DisruptionCounts) -> Option<f64> {
    di_value(counts.counts())
}

pub(crate) fn di_value(c: Counts) -> Option<f64> {
    let den = c.n_i + c.n_j + c.n_k;
    if den == 0 {
        None
    } else {
        Some((c.n_i as f64 - c.n_j as f64) / den as f64)
    }
}

/// Natural log of `count + 1`.
pub fn log_citations(count: u64) -> f64 {
    // count + 1 is exact in f64 for any realistic count
    (count as f64 + 1.0).ln()
}

/// Replaces every defined value `v` by `max + 1 - v`, where `max` is taken
/// over the defined values.
pub fn invert_dep(values: &[Option<f64>]) -> Result<Vec<Option<f64>>> {
    let max = values
        .iter()
        .flatten()
        .copied()
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
        .ok_or_else(|| Error::Degenerate("no defined DEP values to invert".into()))?;
    // subtracting first keeps every result >= 1 under rounding
    Ok(values.iter().map(|v| v.map(|v| (max - v) + 1.0)).collect())
}

/// Per-worker buffers sized to the corpus. `links` is all-zero between uses.
pub(crate) struct Scratch {
    links: Vec<u32>,
    touched: Vec<Node>,
    citer_mark: Vec<u32>,
    epoch: u32,
}

impl Scratch {
    pub(crate) fn new(n: usize) -> Self {
        Scratch {
            links: vec![0; n],
            touched: Vec::new(),
            citer_mark: vec![0; n],
            epoch: 0,
        }
    }

    /// Accumulates `links[p] = |refs(p) ∩ reference_set|` for every p touching the set.
    fn sweep(&mut self, corpus: &Corpus, reference_set: &[Node]) {
        for &r in reference_set {
            for &p in corpus.citers(r) {
                let slot = &mut self.links[p as usize];
                if *slot == 0 {
                    self.touched.push(p);
                }
                *slot += 1;
            }
        }
    }

    fn reset(&mut self) {
        for &p in &self.touched {
            self.links[p as usize] = 0;
        }
        self.touched.clear();
    }

    fn next_epoch(&mut self) -> u32 {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.citer_mark.fill(0);
            self.epoch = 1;
        }
        self.epoch
    }
}

/// Year bound shared by the citer set and the `n_k` population.
#[derive(Clone, Copy)]
struct Bound(Option<i32>);

impl Bound {
    fn new(corpus: &Corpus, focal: Node, window: Option<u32>) -> Self {
        Bound(window.map(|w| {
            corpus.year(focal).map_or(i32::MIN, |y| {
                y.saturating_add(w.min(i32::MAX as u32) as i32)
            })
        }))
    }

    #[inline]
    fn admits(self, corpus: &Corpus, p: Node) -> bool {
        match self.0 {
            None => true,
            Some(b) => corpus.year(p).is_some_and(|y| y <= b),
        }
    }
}

/// Everything one reference-set sweep yields for one focal paper.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct FocalCounts {
    pub citations: u64,
    /// One count triple per configured threshold.
    pub per_threshold: Vec<Counts>,
    /// Total links from (windowed) citers into the reference set.
    pub links: u64,
}

fn tally_citers(
    corpus: &Corpus,
    scratch: &Scratch,
    focal: Node,
    bound: Bound,
    thresholds: &[u32],
) -> (u64, u64, Vec<u64>, u64, u64) {
    let mut citations = 0;
    let mut n_i = 0;
    let mut n_j = vec![0u64; thresholds.len()];
    let mut links_total = 0;
    let mut linked_citers = 0;
    for &c in corpus.citers(focal) {
        if !bound.admits(corpus, c) {
            continue;
        }
        citations += 1;
        let links = scratch.links[c as usize];
        links_total += links as u64;
        if links == 0 {
            n_i += 1;
        } else {
            linked_citers += 1;
            for (slot, &l) in n_j.iter_mut().zip(thresholds) {
                if links >= l {
                    *slot += 1;
                }
            }
        }
    }
    (citations, n_i, n_j, links_total, linked_citers)
}

fn own_reference_counts(
    corpus: &Corpus,
    scratch: &mut Scratch,
    focal: Node,
    thresholds: &[u32],
    window: Option<u32>,
) -> FocalCounts {
    let bound = Bound::new(corpus, focal, window);
    scratch.sweep(corpus, corpus.refs(focal));
    let epoch = scratch.next_epoch();
    for &c in corpus.citers(focal) {
        scratch.citer_mark[c as usize] = epoch;
    }
    let n_k = scratch
        .touched
        .iter()
        .filter(|&&p| {
            p != focal && scratch.citer_mark[p as usize] != epoch && bound.admits(corpus, p)
        })
        .count() as u64;
    let (citations, n_i, n_j, links, _) = tally_citers(corpus, scratch, focal, bound, thresholds);
    scratch.reset();
    FocalCounts {
        citations,
        per_threshold: n_j
            .into_iter()
            .map(|n_j| Counts { n_i, n_j, n_k })
            .collect(),
        links,
    }
}

/// Cohort-mode counts for the requested members of one cohort, in input order.
fn cohort_counts(
    corpus: &Corpus,
    scratch: &mut Scratch,
    cohort: usize,
    members: &[Node],
    thresholds: &[u32],
    window: Option<u32>,
) -> Vec<Vec<Counts>> {
    let Some(&first) = members.first() else {
        return Vec::new();
    };
    // every member shares the cohort year, hence the bound
    let bound = Bound::new(corpus, first, window);
    scratch.sweep(corpus, corpus.cohort_union(cohort));
    let eligible_touched = scratch
        .touched
        .iter()
        .filter(|&&p| bound.admits(corpus, p))
        .count() as u64;
    let out = members
        .iter()
        .map(|&focal| {
            let (_, n_i, n_j, _, linked_citers) =
                tally_citers(corpus, scratch, focal, bound, thresholds);
            let focal_touches = u64::from(scratch.links[focal as usize] > 0);
            let n_k = eligible_touched - linked_citers - focal_touches;
            n_j.into_iter()
                .map(|n_j| Counts { n_i, n_j, n_k })
                .collect()
        })
        .collect();
    scratch.reset();
    out
}

/// Counts for one focal paper. Returns `Ok(None)` in cohort mode when the
/// focal paper has no journal/year (a stub), which leaves the index undefined.
pub fn disruption_counts(
    corpus: &Corpus,
    focal: &str,
    threshold: u32,
    mode: ReferenceSet,
    window: Option<u32>,
) -> Result<Option<DisruptionCounts>> {
    if threshold == 0 {
        return Err(Error::Invalid("link threshold must be at least 1".into()));
    }
    let node = corpus.require(focal)?;
    let mut scratch = Scratch::new(corpus.len());
    let counts = match mode {
        ReferenceSet::OwnReferences => {
            own_reference_counts(corpus, &mut scratch, node, &[threshold], window).per_threshold[0]
        }
        ReferenceSet::CohortUnion => {
            let Some(c) = corpus.cohort_of(node) else {
                return Ok(None);
            };
            cohort_counts(corpus, &mut scratch, c, &[node], &[threshold], window)[0][0]
        }
    };
    Ok(Some(DisruptionCounts {
        n_i: counts.n_i,
        n_j: counts.n_j,
        n_k: counts.n_k,
        threshold,
        mode,
    }))
}

/// DEP for one focal paper: links from its citers into its own references,
/// averaged over citers (undefined without citers) or summed.
pub fn dep(
    corpus: &Corpus,
    focal: &str,
    mode: DepMode,
    window: Option<u32>,
) -> Result<Option<f64>> {
    let node = corpus.require(focal)?;
    let mut scratch = Scratch::new(corpus.len());
    let fc = own_reference_counts(corpus, &mut scratch, node, &[], window);
    Ok(dep_value(fc.links, fc.citations, mode))
}

pub(crate) fn dep_value(links: u64, citers: u64, mode: DepMode) -> Option<f64> {
    match mode {
        DepMode::TotalLinks => Some(links as f64),
        DepMode::MeanPerCiter if citers == 0 => None,
        DepMode::MeanPerCiter => Some(links as f64 / citers as f64),
    }
}

/// Restricts which papers receive an indicator record. Stubs never do.
#[derive(Debug, Clone, Default)]
pub struct FocalFilter {
    pub doc_type: Option<String>,
    pub journal: Option<String>,
    pub min_year: Option<i32>,
    pub max_year: Option<i32>,
}

impl FocalFilter {
    pub fn admits(&self, corpus: &Corpus, n: Node) -> bool {
        let Some(m) = corpus.meta(n) else {
            return false;
        };
        self.doc_type.as_deref().is_none_or(|d| d == m.doc_type)
            && self
                .journal
                .as_deref()
                .is_none_or(|j| j.trim() == m.journal)
            && self.min_year.is_none_or(|y| m.year >= y)
            && self.max_year.is_none_or(|y| m.year <= y)
    }
}

#[derive(Debug, Clone)]
pub struct IndicatorConfig {
    /// Link thresholds `l`; defaults to `[1, 5]`.
    pub thresholds: Vec<u32>,
    pub dep_mode: DepMode,
    pub window: Option<u32>,
    pub focal: FocalFilter,
    /// Worker threads; 0 uses every available core, 1 runs sequentially.
    pub workers: usize,
}

impl Default for IndicatorConfig {
    fn default() -> Self {
        IndicatorConfig {
            thresholds: vec![1, 5],
            dep_mode: DepMode::MeanPerCiter,
            window: None,
            focal: FocalFilter::default(),
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorRecord {
    pub id: String,
    pub year: i32,
    pub citations: u64,
    pub log_citations: f64,
    /// Own-reference counts, one per threshold.
    pub counts: Vec<Counts>,
    /// Cohort-union counts, one per threshold.
    pub counts_n: Vec<Counts>,
    /// DI_l per threshold.
    pub di: Vec<Option<f64>>,
    /// DI_ln per threshold.
    pub di_n: Vec<Option<f64>>,
    pub dep_links: u64,
    pub dep: Option<f64>,
    pub dep_inverse: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunReport {
    pub focal_papers: usize,
    pub cohorts: usize,
    /// Undefined values per output column, in output column order.
    pub undefined: Vec<(String, usize)>,
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "focal_papers = {}", self.focal_papers)?;
        writeln!(f, "cohorts = {}", self.cohorts)?;
        for (col, n) in &self.undefined {
            writeln!(f, "undefined_{col} = {n}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorTable {
    pub thresholds: Vec<u32>,
    pub dep_mode: DepMode,
    pub records: Vec<IndicatorRecord>,
    pub report: RunReport,
}

fn validate(config: &IndicatorConfig) -> Result<()> {
    if config.thresholds.is_empty() || config.thresholds.contains(&0) {
        return Err(Error::Invalid(
            "thresholds must be a non-empty list of integers >= 1".into(),
        ));
    }
    let mut t = config.thresholds.clone();
    t.sort_unstable();
    t.dedup();
    if t.len() != config.thresholds.len() {
        return Err(Error::Invalid("thresholds must be distinct".into()));
    }
    Ok(())
}

/// Computes one record per focal paper, ascending by id.
pub fn compute_all(corpus: &Corpus, config: &IndicatorConfig) -> Result<IndicatorTable> {
    validate(config)?;
    let focal: Vec<Node> = (0..corpus.len() as Node)
        .filter(|&n| config.focal.admits(corpus, n))
        .collect();

    // cohorts holding at least one focal paper, with their focal members
    let mut by_cohort: Vec<Vec<Node>> = vec![Vec::new(); corpus.cohort_count()];
    for &n in &focal {
        if let Some(c) = corpus.cohort_of(n) {
            by_cohort[c].push(n);
        }
    }
    let cohorts: Vec<(usize, Vec<Node>)> = by_cohort
        .into_iter()
        .enumerate()
        .filter(|(_, m)| !m.is_empty())
        .collect();

    let thresholds = &config.thresholds;
    let window = config.window;
    let n = corpus.len();
    let own: Vec<FocalCounts> = exec::map_with_scratch(config.workers, n, &focal, |s, &f| {
        own_reference_counts(corpus, s, f, thresholds, window)
    });
    let cohort: Vec<Vec<Vec<Counts>>> =
        exec::map_with_scratch(config.workers, n, &cohorts, |s, (c, members)| {
            cohort_counts(corpus, s, *c, members, thresholds, window)
        });

    let mut counts_n: Vec<Option<Vec<Counts>>> = vec![None; n];
    for ((_, members), results) in cohorts.iter().zip(cohort) {
        for (&m, r) in members.iter().zip(results) {
            counts_n[m as usize] = Some(r);
        }
    }

    let mut records: Vec<IndicatorRecord> = focal
        .iter()
        .zip(own)
        .map(|(&f, fc)| {
            let cn = counts_n[f as usize].take().unwrap_or_default();
            IndicatorRecord {
                id: corpus.id(f).as_str().to_string(),
                year: corpus.year(f).expect("focal papers carry metadata"),
                citations: fc.citations,
                log_citations: log_citations(fc.citations),
                di: fc.per_threshold.iter().map(|&c| di_value(c)).collect(),
                di_n: cn.iter().map(|&c| di_value(c)).collect(),
                counts: fc.per_threshold,
                counts_n: cn,
                dep_links: fc.links,
                dep: dep_value(fc.links, fc.citations, config.dep_mode),
                dep_inverse: None,
            }
        })
        .collect();

    let deps: Vec<Option<f64>> = records.iter().map(|r| r.dep).collect();
    if let Ok(inv) = invert_dep(&deps) {
        for (r, v) in records.iter_mut().zip(inv) {
            r.dep_inverse = v;
        }
    }

    let mut table = IndicatorTable {
        thresholds: thresholds.clone(),
        dep_mode: config.dep_mode,
        records,
        report: RunReport {
            focal_papers: focal.len(),
            cohorts: cohorts.len(),
            undefined: Vec::new(),
        },
    };
    table.report.undefined = table
        .columns()
        .into_iter()
        .skip(4)
        .map(|c| {
            let missing = table
                .column(&c)
                .unwrap()
                .iter()
                .filter(|v| v.is_none())
                .count();
            (c, missing)
        })
        .collect();
    Ok(table)
}

impl IndicatorTable {
    /// Output column names: `id,year,citations,log_citations,di{l}..,di{l}n..,dep,dep_inverse`.
    pub fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = ["id", "year", "citations", "log_citations"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        cols.extend(self.thresholds.iter().map(|l| format!("di{l}")));
        cols.extend(self.thresholds.iter().map(|l| format!("di{l}n")));
        cols.push("dep".into());
        cols.push("dep_inverse".into());
        cols
    }

    /// Values of a numeric column by name.
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        type Pick = Box<dyn Fn(&IndicatorRecord) -> Option<f64>>;
        let pick: Pick = match name {
            "year" => Box::new(|r| Some(r.year as f64)),
            "citations" => Box::new(|r| Some(r.citations as f64)),
            "log_citations" => Box::new(|r| Some(r.log_citations)),
            "dep" => Box::new(|r| r.dep),
            "dep_inverse" => Box::new(|r| r.dep_inverse),
            other => {
                let rest = other.strip_prefix("di")?;
                let (num, normalized) = match rest.strip_suffix('n') {
                    Some(num) => (num, true),
                    None => (rest, false),
                };
                let l: u32 = num.parse().ok()?;
                let i = self.thresholds.iter().position(|&t| t == l)?;
                if normalized {
                    Box::new(move |r| r.di_n.get(i).copied().flatten())
                } else {
                    Box::new(move |r| r.di.get(i).copied().flatten())
                }
            }
        };
        Some(self.records.iter().map(pick).collect())
    }

    pub fn write_csv(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(w, "{}", self.columns().join(","))?;
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for r in &self.records {
            let mut row = vec![
                r.id.clone(),
                r.year.to_string(),
                r.citations.to_string(),
                fmt_real(r.log_citations),
            ];
            row.extend(r.di.iter().map(|v| fmt_opt(*v)));
            row.extend(r.di_n.iter().map(|v| fmt_opt(*v)));
            row.push(fmt_opt(r.dep));
            row.push(fmt_opt(r.dep_inverse));
            wtr.write_record(&row)?;
        }
        wtr.flush()
    }
}

/// An indicator table read back from disk: ids, and every numeric column by name.
#[derive(Debug, Clone)]
pub struct IndicatorFile {
    pub columns: Vec<String>,
    pub ids: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl IndicatorFile {
    pub fn read(path: &Path) -> Result<Self> {
        let mut rdr = io::csv_reader(path, b',')?;
        let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
        if headers.get(0) != Some("id") {
            return Err(Error::Header {
                path: path.into(),
                message: "first column must be `id`".into(),
            });
        }
        let columns: Vec<String> = headers.iter().skip(1).map(|s| s.to_string()).collect();
        for required in ["year", "citations", "log_citations"] {
            if !columns.iter().any(|c| c == required) {
                return Err(Error::Header {
                    path: path.into(),
                    message: format!("missing column `{required}`"),
                });
            }
        }
        let mut ids = Vec::new();
        let mut values = vec![Vec::new(); columns.len()];
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            let line = rec.position().map_or(0, |p| p.line());
            ids.push(rec.get(0).unwrap_or("").to_string());
            for (i, col) in columns.iter().enumerate() {
                let v = io::parse_opt(rec.get(i + 1).unwrap_or("")).map_err(|message| {
                    Error::Field {
                        path: path.into(),
                        line,
                        column: col.clone(),
                        message,
                    }
                })?;
                values[i].push(v);
            }
        }
        Ok(IndicatorFile {
            columns,
            ids,
            values,
        })
    }

    pub fn column(&self, name: &str) -> Option<&[Option<f64>]> {
        self.columns
            .iter()
            .position(|c| c == name)
            .map(|i| self.values[i].as_slice())
    }
}

mod exec {
    use super::Scratch;

    #[cfg(feature = "parallel")]
    pub(super) fn map_with_scratch<T, R, F>(workers: usize, n: usize, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&mut Scratch, &T) -> R + Sync,
    {
        use rayon::prelude::*;
        if workers == 1 || items.len() < 2 {
            return sequential(n, items, f);
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("failed to start worker pool");
        // a few chunks per worker for balance; one scratch per chunk
        let chunk = items.len().div_ceil(pool.current_num_threads() * 8).max(16);
        let parts: Vec<Vec<R>> = pool.install(|| {
            items
                .par_chunks(chunk)
                .map(|part| sequential(n, part, &f))
                .collect()
        });
        parts.into_iter().flatten().collect()
    }

    #[cfg(not(feature = "parallel"))]
    pub(super) fn map_with_scratch<T, R, F>(_workers: usize, n: usize, items: &[T], f: F) -> Vec<R>
    where
        F: Fn(&mut Scratch, &T) -> R,
    {
        sequential(n, items, f)
    }

    fn sequential<T, R, F>(n: usize, items: &[T], f: F) -> Vec<R>
    where
        F: Fn(&mut Scratch, &T) -> R,
    {
        let mut scratch = Scratch::new(n);
        items.iter().map(|item| f(&mut scratch, item)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::{g1, meta};
    use crate::graph::{LoadOptions, RawEdge};

    fn counts(c: &Corpus, f: &str, l: u32, mode: ReferenceSet) -> (u64, u64, u64) {
        let d = disruption_counts(c, f, l, mode, None).unwrap().unwrap();
        (d.n_i, d.n_j, d.n_k)
    }

    #[test]
    fn g1_counts_and_indices() {
        let c = g1();
        assert_eq!(counts(&c, "F", 1, ReferenceSet::OwnReferences), (1, 2, 1));
        assert_eq!(counts(&c, "F", 5, ReferenceSet::OwnReferences), (1, 0, 1));
        let d1 = disruption_counts(&c, "F", 1, ReferenceSet::OwnReferences, None)
            .unwrap()
            .unwrap();
        assert_eq!(disruption_index(&d1), Some(-0.25));
        let d5 = disruption_counts(&c, "F", 5, ReferenceSet::OwnReferences, None)
            .unwrap()
            .unwrap();
        assert_eq!(disruption_index(&d5), Some(0.5));
        assert_eq!(
            dep(&c, "F", DepMode::MeanPerCiter, None).unwrap(),
            Some(1.0)
        );
        assert_eq!(dep(&c, "F", DepMode::TotalLinks, None).unwrap(), Some(3.0));
    }

    #[test]
    fn zero_reference_focal_is_fully_disruptive() {
        let papers = ["F", "A", "B", "C"]
            .iter()
            .map(|i| meta(i, 2000, "J"))
            .collect();
        let edges = ["A", "B", "C"]
            .iter()
            .map(|a| RawEdge::new(*a, "F"))
            .collect();
        let (c, _) = Corpus::from_parts(papers, edges, &LoadOptions::default()).unwrap();
        let d = disruption_counts(&c, "F", 1, ReferenceSet::OwnReferences, None)
            .unwrap()
            .unwrap();
        assert_eq!((d.n_i, d.n_j, d.n_k), (3, 0, 0));
        assert_eq!(disruption_index(&d), Some(1.0));
    }

    #[test]
    fn isolated_paper_is_undefined() {
        let c = g1();
        let papers = vec![meta("X", 2000, "J")];
        let (iso, _) = Corpus::from_parts(papers, vec![], &LoadOptions::default()).unwrap();
        let d = disruption_counts(&iso, "X", 1, ReferenceSet::OwnReferences, None)
            .unwrap()
            .unwrap();
        assert_eq!(disruption_index(&d), None);
        assert_eq!(dep(&iso, "X", DepMode::MeanPerCiter, None).unwrap(), None);
        assert_eq!(
            dep(&iso, "X", DepMode::TotalLinks, None).unwrap(),
            Some(0.0)
        );
        assert!(disruption_counts(&c, "nope", 1, ReferenceSet::OwnReferences, None).is_err());
        assert!(disruption_counts(&c, "F", 0, ReferenceSet::OwnReferences, None).is_err());
    }

    #[test]
    fn cohort_mode_on_g1() {
        // every G1 paper shares one cohort, so the union is {R1, R2, F}
        let c = g1();
        let d = disruption_counts(&c, "F", 1, ReferenceSet::CohortUnion, None)
            .unwrap()
            .unwrap();
        // citers A (links: F) B (F,R1) D (F,R1,R2) all link into the union
        assert_eq!((d.n_i, d.n_j, d.n_k), (0, 3, 1));
    }

    #[test]
    fn invert_dep_examples() {
        let inv = invert_dep(&[Some(0.0), Some(1.0), Some(3.0), None]).unwrap();
        assert_eq!(inv, vec![Some(4.0), Some(3.0), Some(1.0), None]);
        assert_eq!(invert_dep(&[Some(7.5)]).unwrap(), vec![Some(1.0)]);
        assert!(invert_dep(&[None, None]).is_err());
    }

    #[test]
    fn log_citation_values() {
        assert_eq!(log_citations(0), 0.0);
        assert!((log_citations(74_187) - 11.214357691).abs() < 1e-9);
        assert!(log_citations(10) < log_citations(11));
    }

    #[test]
    fn compute_all_on_g1() {
        let c = g1();
        let t = compute_all(&c, &IndicatorConfig::default()).unwrap();
        assert_eq!(t.records.len(), 7);
        let ids: Vec<&str> = t.records.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["A", "B", "C", "D", "F", "R1", "R2"]);
        let f = &t.records[4];
        assert_eq!(f.di, vec![Some(-0.25), Some(0.5)]);
        assert_eq!(f.dep, Some(1.0));
        assert_eq!(f.citations, 3);
        assert_eq!(
            t.columns().join(","),
            "id,year,citations,log_citations,di1,di5,di1n,di5n,dep,dep_inverse"
        );
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\nF,2000,3,1.386294361,-0.25,0.5,"), "{text}");
    }

    #[test]
    fn empty_focal_filter_gives_empty_table() {
        let c = g1();
        let cfg = IndicatorConfig {
            focal: FocalFilter {
                journal: Some("Nope".into()),
                ..Default::default()
            },
            ..Default::default()
        };
        let t = compute_all(&c, &cfg).unwrap();
        assert!(t.records.is_empty());
    }

    #[test]
    fn bad_thresholds_rejected() {
        let c = g1();
        for th in [vec![], vec![0], vec![1, 1]] {
            let cfg = IndicatorConfig {
                thresholds: th,
                ..Default::default()
            };
            assert!(compute_all(&c, &cfg).is_err());
        }
    }
}
