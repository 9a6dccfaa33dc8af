//! Citation corpus: paper metadata plus a bidirectional, deduplicated citation
//! graph stored as two CSR arrays.
//!
//! Papers are indexed by their position in ascending id order, so every
//! adjacency list sorted by index is also sorted by id.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use log::warn;

use crate::error::{Error, Result};
use crate::io;

/// Dense paper index inside a [`Corpus`].
pub type Node = u32;

/// Opaque paper identifier as it appears in the input files.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PaperId(String);

impl PaperId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        let trimmed = id.trim();
        if trimmed.is_empty() {
            return Err(Error::Invalid("paper id must be non-empty".into()));
        }
        if trimmed.len() == id.len() {
            Ok(PaperId(id))
        } else {
            Ok(PaperId(trimmed.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PaperId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for PaperId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaperMeta {
    pub id: PaperId,
    pub year: i32,
    pub journal: String,
    pub doc_type: String,
    pub milestone: bool,
    pub n_authors: u32,
    pub n_pages: u32,
    pub n_countries: u32,
    pub usa: bool,
    pub china: bool,
    pub eu28: bool,
}

pub const PAPER_COLUMNS: [&str; 11] = [
    "id",
    "year",
    "journal",
    "doc_type",
    "milestone",
    "n_authors",
    "n_pages",
    "n_countries",
    "usa",
    "china",
    "eu28",
];

pub const CITATION_COLUMNS: [&str; 2] = ["citing", "cited"];

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub delimiter: u8,
    /// Unknown edge endpoints are an error when set; otherwise they become stub papers.
    pub strict: bool,
    /// Keep only papers of this document type; edges touching dropped papers are removed.
    pub doc_type: Option<String>,
    pub min_year: i32,
    pub max_year: i32,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            delimiter: b',',
            strict: true,
            doc_type: None,
            min_year: 1800,
            max_year: 2100,
        }
    }
}

/// Counts reported by [`load_corpus`] and [`Corpus::from_parts`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub papers_read: usize,
    pub papers_filtered: usize,
    pub edges_read: usize,
    pub edges_kept: usize,
    pub duplicate_edges: usize,
    pub self_loops: usize,
    pub edges_filtered: usize,
    pub unknown_endpoint_edges: usize,
    pub stubs_created: usize,
}

impl fmt::Display for LoadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "papers_read = {}", self.papers_read)?;
        writeln!(f, "papers_filtered = {}", self.papers_filtered)?;
        writeln!(f, "edges_read = {}", self.edges_read)?;
        writeln!(f, "edges_kept = {}", self.edges_kept)?;
        writeln!(f, "duplicate_edges = {}", self.duplicate_edges)?;
        writeln!(f, "self_loops = {}", self.self_loops)?;
        writeln!(f, "edges_filtered = {}", self.edges_filtered)?;
        writeln!(
            f,
            "unknown_endpoint_edges = {}",
            self.unknown_endpoint_edges
        )?;
        writeln!(f, "stubs_created = {}", self.stubs_created)
    }
}

/// One raw edge with the input line it came from (0 when built in memory).
#[derive(Debug, Clone)]
pub struct RawEdge {
    pub citing: String,
    pub cited: String,
    pub line: u64,
}

impl RawEdge {
    pub fn new(citing: impl Into<String>, cited: impl Into<String>) -> Self {
        RawEdge {
            citing: citing.into(),
            cited: cited.into(),
            line: 0,
        }
    }
}

#[derive(Debug)]
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<Node>,
}

impl Csr {
    fn row(&self, n: Node) -> &[Node] {
        let n = n as usize;
        &self.targets[self.offsets[n]..self.offsets[n + 1]]
    }
}

/// Journal-year cohort key. The journal is whitespace-trimmed and compared case-sensitively.
pub type CohortKey = (String, i32);

/// Immutable citation corpus.
#[derive(Debug)]
pub struct Corpus {
    ids: Vec<PaperId>,
    meta: Vec<Option<PaperMeta>>,
    index: HashMap<String, Node>,
    out: Csr,
    inc: Csr,
    cohort_keys: Vec<CohortKey>,
    cohort_members: Vec<Vec<Node>>,
    cohort_lookup: BTreeMap<CohortKey, usize>,
    paper_cohort: Vec<Option<u32>>,
    cohort_unions: Vec<OnceLock<Vec<Node>>>,
}

/// Loads and validates a corpus from a papers table and a citations table.
pub fn load_corpus(
    papers_path: &Path,
    citations_path: &Path,
    options: &LoadOptions,
) -> Result<(Corpus, LoadReport)> {
    let papers = read_papers(papers_path, options)?;
    let edges = read_citations(citations_path, options.delimiter)?;
    Corpus::build(papers, edges, options, (papers_path, citations_path))
}

/// Reads only the papers table, e.g. to join metadata onto indicator output.
/// Duplicate ids are rejected; the doc-type filter is applied.
pub fn read_paper_table(path: &Path, options: &LoadOptions) -> Result<Vec<PaperMeta>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (meta, line) in read_papers(path, options)? {
        if !seen.insert(meta.id.clone()) {
            return Err(Error::DuplicatePaper {
                path: path.into(),
                line,
                id: meta.id.to_string(),
            });
        }
        if options
            .doc_type
            .as_ref()
            .is_none_or(|d| *d == meta.doc_type)
        {
            out.push(meta);
        }
    }
    Ok(out)
}

fn header_positions<const N: usize>(
    path: &Path,
    headers: &csv::StringRecord,
    expected: [&str; N],
) -> Result<[usize; N]> {
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        let h = h.trim();
        if seen.insert(h, i).is_some() {
            return Err(Error::Header {
                path: path.into(),
                message: format!("duplicate column `{h}`"),
            });
        }
    }
    let mut pos = [0usize; N];
    for (slot, name) in pos.iter_mut().zip(expected) {
        *slot = *seen.get(name).ok_or_else(|| Error::Header {
            path: path.into(),
            message: format!("missing column `{name}`"),
        })?;
    }
    for h in seen.keys() {
        if !expected.contains(h) {
            warn!("{}: ignoring unexpected column `{h}`", path.display());
        }
    }
    Ok(pos)
}

fn read_papers(path: &Path, options: &LoadOptions) -> Result<Vec<(PaperMeta, u64)>> {
    let mut rdr = io::csv_reader(path, options.delimiter)?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let pos = header_positions(path, &headers, PAPER_COLUMNS)?;
    let mut out = Vec::new();
    let mut record = csv::StringRecord::new();
    while rdr
        .read_record(&mut record)
        .map_err(|e| Error::csv(path, e))?
    {
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(pos[i]).unwrap_or("").trim();
        let bad = |column: &str, message: String| Error::Field {
            path: path.into(),
            line,
            column: column.into(),
            message,
        };
        let id = PaperId::new(field(0)).map_err(|e| bad("id", e.to_string()))?;
        let year: i32 = field(1)
            .parse()
            .map_err(|_| bad("year", format!("unparseable year `{}`", field(1))))?;
        if year < options.min_year || year > options.max_year {
            return Err(bad(
                "year",
                format!(
                    "year {year} outside [{}, {}]",
                    options.min_year, options.max_year
                ),
            ));
        }
        let flag = |i: usize| -> Result<bool> {
            match field(i) {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(bad(
                    PAPER_COLUMNS[i],
                    format!("expected 0 or 1, got `{other}`"),
                )),
            }
        };
        let count = |i: usize| -> Result<u32> {
            field(i).parse().map_err(|_| {
                bad(
                    PAPER_COLUMNS[i],
                    format!("expected a non-negative integer, got `{}`", field(i)),
                )
            })
        };
        let meta = PaperMeta {
            id,
            year,
            journal: field(2).to_string(),
            doc_type: field(3).to_string(),
            milestone: flag(4)?,
            n_authors: count(5)?,
            n_pages: count(6)?,
            n_countries: count(7)?,
            usa: flag(8)?,
            china: flag(9)?,
            eu28: flag(10)?,
        };
        out.push((meta, line));
    }
    Ok(out)
}

fn read_citations(path: &Path, delimiter: u8) -> Result<Vec<RawEdge>> {
    let mut rdr = io::csv_reader(path, delimiter)?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let pos = header_positions(path, &headers, CITATION_COLUMNS)?;
    let mut out = Vec::new();
    let mut record = csv::StringRecord::new();
    while rdr
        .read_record(&mut record)
        .map_err(|e| Error::csv(path, e))?
    {
        let line = record.position().map_or(0, |p| p.line());
        let citing = record.get(pos[0]).unwrap_or("").trim();
        let cited = record.get(pos[1]).unwrap_or("").trim();
        for (column, v) in [("citing", citing), ("cited", cited)] {
            if v.is_empty() {
                return Err(Error::Field {
                    path: path.into(),
                    line,
                    column: column.into(),
                    message: "empty paper id".into(),
                });
            }
        }
        out.push(RawEdge {
            citing: citing.to_string(),
            cited: cited.to_string(),
            line,
        });
    }
    Ok(out)
}

impl Corpus {
    /// Builds a corpus from in-memory metadata rows and edges, applying the
    /// same validation as [`load_corpus`].
    pub fn from_parts(
        papers: Vec<PaperMeta>,
        edges: Vec<RawEdge>,
        options: &LoadOptions,
    ) -> Result<(Corpus, LoadReport)> {
        let papers = papers.into_iter().map(|m| (m, 0)).collect();
        let mem = Path::new("<memory>");
        Corpus::build(papers, edges, options, (mem, mem))
    }

    fn build(
        papers: Vec<(PaperMeta, u64)>,
        edges: Vec<RawEdge>,
        options: &LoadOptions,
        (paper_source, edge_source): (&Path, &Path),
    ) -> Result<(Corpus, LoadReport)> {
        let mut report = LoadReport {
            papers_read: papers.len(),
            edges_read: edges.len(),
            ..Default::default()
        };

        let mut by_id: HashMap<String, PaperMeta> = HashMap::with_capacity(papers.len());
        let mut filtered: std::collections::HashSet<String> = Default::default();
        for (mut meta, line) in papers {
            meta.journal = meta.journal.trim().to_string();
            let key = meta.id.as_str().to_string();
            if by_id.contains_key(&key) || filtered.contains(&key) {
                return Err(Error::DuplicatePaper {
                    path: paper_source.into(),
                    line,
                    id: key,
                });
            }
            if options
                .doc_type
                .as_deref()
                .is_some_and(|dt| dt != meta.doc_type)
            {
                report.papers_filtered += 1;
                filtered.insert(key);
                continue;
            }
            by_id.insert(key, meta);
        }

        // Resolve the node universe: metadata rows plus (lenient) stub endpoints.
        let mut kept_edges: Vec<(&str, &str)> = Vec::with_capacity(edges.len());
        let mut stub_ids: std::collections::BTreeSet<&str> = Default::default();
        for e in &edges {
            if e.citing == e.cited {
                report.self_loops += 1;
                continue;
            }
            if filtered.contains(&e.citing) || filtered.contains(&e.cited) {
                report.edges_filtered += 1;
                continue;
            }
            let missing = [&e.citing, &e.cited]
                .into_iter()
                .find(|id| !by_id.contains_key(id.as_str()));
            if let Some(unknown) = missing {
                if options.strict {
                    return Err(Error::UnknownEndpoint {
                        path: edge_source.into(),
                        line: e.line,
                        citing: e.citing.clone(),
                        cited: e.cited.clone(),
                        unknown: unknown.clone(),
                    });
                }
                report.unknown_endpoint_edges += 1;
                for id in [&e.citing, &e.cited] {
                    if !by_id.contains_key(id.as_str()) {
                        stub_ids.insert(id.as_str());
                    }
                }
            }
            kept_edges.push((e.citing.as_str(), e.cited.as_str()));
        }
        if report.self_loops > 0 {
            warn!("dropped {} self-citation edges", report.self_loops);
        }
        if report.unknown_endpoint_edges > 0 {
            warn!(
                "{} edges reference papers without metadata; created {} stub papers",
                report.unknown_endpoint_edges,
                stub_ids.len()
            );
        }
        report.stubs_created = stub_ids.len();

        let mut all_ids: Vec<String> = by_id
            .keys()
            .cloned()
            .chain(stub_ids.iter().map(|s| s.to_string()))
            .collect();
        all_ids.sort_unstable();
        let index: HashMap<String, Node> = all_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as Node))
            .collect();
        let n = all_ids.len();
        assert!(
            n < Node::MAX as usize,
            "corpus too large for 32-bit node ids"
        );

        let mut pairs: Vec<(Node, Node)> = kept_edges
            .iter()
            .map(|(a, b)| (index[*a], index[*b]))
            .collect();
        drop(stub_ids);
        drop(kept_edges);
        pairs.sort_unstable();
        let before = pairs.len();
        pairs.dedup();
        report.duplicate_edges = before - pairs.len();
        if report.duplicate_edges > 0 {
            warn!("dropped {} duplicate edges", report.duplicate_edges);
        }
        report.edges_kept = pairs.len();

        let (out, inc) = build_csr(n, &pairs);

        let mut meta: Vec<Option<PaperMeta>> = Vec::with_capacity(n);
        let mut ids = Vec::with_capacity(n);
        for id in all_ids {
            let m = by_id.remove(&id);
            ids.push(PaperId(id));
            meta.push(m);
        }

        let mut cohort_lookup: BTreeMap<CohortKey, Vec<Node>> = BTreeMap::new();
        for (i, m) in meta.iter().enumerate() {
            if let Some(m) = m {
                cohort_lookup
                    .entry((m.journal.clone(), m.year))
                    .or_default()
                    .push(i as Node);
            }
        }
        let mut paper_cohort = vec![None; n];
        let mut cohort_keys = Vec::with_capacity(cohort_lookup.len());
        let mut cohort_members = Vec::with_capacity(cohort_lookup.len());
        let mut lookup = BTreeMap::new();
        for (c, (key, members)) in cohort_lookup.into_iter().enumerate() {
            for &m in &members {
                paper_cohort[m as usize] = Some(c as u32);
            }
            lookup.insert(key.clone(), c);
            cohort_keys.push(key);
            cohort_members.push(members);
        }
        let cohort_unions = (0..cohort_keys.len()).map(|_| OnceLock::new()).collect();

        Ok((
            Corpus {
                ids,
                meta,
                index,
                out,
                inc,
                cohort_keys,
                cohort_members,
                cohort_lookup: lookup,
                paper_cohort,
                cohort_unions,
            },
            report,
        ))
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.out.targets.len()
    }

    pub fn node(&self, id: &str) -> Option<Node> {
        self.index.get(id).copied()
    }

    pub(crate) fn require(&self, id: &str) -> Result<Node> {
        self.node(id)
            .ok_or_else(|| Error::UnknownPaper(id.to_string()))
    }

    pub fn id(&self, n: Node) -> &PaperId {
        &self.ids[n as usize]
    }

    pub fn ids(&self) -> &[PaperId] {
        &self.ids
    }

    /// Metadata row; `None` for stub papers created from dangling references.
    pub fn meta(&self, n: Node) -> Option<&PaperMeta> {
        self.meta[n as usize].as_ref()
    }

    pub fn year(&self, n: Node) -> Option<i32> {
        self.meta[n as usize].as_ref().map(|m| m.year)
    }

    pub fn is_stub(&self, n: Node) -> bool {
        self.meta[n as usize].is_none()
    }

    /// Cited references of `n`, ascending.
    pub fn refs(&self, n: Node) -> &[Node] {
        self.out.row(n)
    }

    /// Papers citing `n`, ascending.
    pub fn citers(&self, n: Node) -> &[Node] {
        self.inc.row(n)
    }

    /// Citers of `n` published within `window` years of `n`. Without a window
    /// every citer counts; under a window, papers lacking a year never do.
    pub fn citers_within(&self, n: Node, window: Option<u32>) -> impl Iterator<Item = Node> + '_ {
        let bound = window.map(|w| {
            self.year(n)
                .map(|y| y.saturating_add(w.min(i32::MAX as u32) as i32))
        });
        self.citers(n)
            .iter()
            .copied()
            .filter(move |&c| match bound {
                None => true,
                Some(None) => false,
                Some(Some(b)) => self.year(c).is_some_and(|y| y <= b),
            })
    }

    pub fn cohort_of(&self, n: Node) -> Option<usize> {
        self.paper_cohort[n as usize].map(|c| c as usize)
    }

    pub fn cohort_count(&self) -> usize {
        self.cohort_keys.len()
    }

    pub fn cohort_key(&self, c: usize) -> &CohortKey {
        &self.cohort_keys[c]
    }

    pub fn cohort_members(&self, c: usize) -> &[Node] {
        &self.cohort_members[c]
    }

    /// Union of the cited references of every cohort member, ascending; computed once.
    pub fn cohort_union(&self, c: usize) -> &[Node] {
        self.cohort_unions[c].get_or_init(|| {
            let mut all: Vec<Node> = self.cohort_members[c]
                .iter()
                .flat_map(|&m| self.refs(m).iter().copied())
                .collect();
            all.sort_unstable();
            all.dedup();
            all
        })
    }

    fn to_ids(&self, nodes: impl IntoIterator<Item = Node>) -> Vec<&PaperId> {
        nodes.into_iter().map(|n| self.id(n)).collect()
    }

    pub fn cited_references(&self, focal: &str) -> Result<Vec<&PaperId>> {
        let n = self.require(focal)?;
        Ok(self.to_ids(self.refs(n).iter().copied()))
    }

    pub fn citing_papers(&self, focal: &str, window: Option<u32>) -> Result<Vec<&PaperId>> {
        let n = self.require(focal)?;
        Ok(self.to_ids(self.citers_within(n, window)))
    }

    pub fn citation_count(&self, focal: &str, window: Option<u32>) -> Result<usize> {
        let n = self.require(focal)?;
        Ok(self.citers_within(n, window).count())
    }

    pub fn cohort_reference_union(&self, journal: &str, year: i32) -> Result<Vec<&PaperId>> {
        let key = (journal.trim().to_string(), year);
        let c = *self
            .cohort_lookup
            .get(&key)
            .ok_or_else(|| Error::EmptyCohort {
                journal: key.0.clone(),
                year,
            })?;
        Ok(self.to_ids(self.cohort_union(c).iter().copied()))
    }

    /// Writes the metadata table in canonical form (ascending id, stubs omitted).
    pub fn write_papers(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(w, "{}", PAPER_COLUMNS.join(","))?;
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        let b = |v: bool| if v { "1" } else { "0" };
        for m in self.meta.iter().flatten() {
            wtr.write_record([
                m.id.as_str(),
                &m.year.to_string(),
                &m.journal,
                &m.doc_type,
                b(m.milestone),
                &m.n_authors.to_string(),
                &m.n_pages.to_string(),
                &m.n_countries.to_string(),
                b(m.usa),
                b(m.china),
                b(m.eu28),
            ])?;
        }
        wtr.flush()
    }

    /// Writes the edge list in canonical form (ascending citing, then cited).
    pub fn write_citations(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(w, "{}", CITATION_COLUMNS.join(","))?;
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for u in 0..self.len() as Node {
            for &v in self.refs(u) {
                wtr.write_record([self.id(u).as_str(), self.id(v).as_str()])?;
            }
        }
        wtr.flush()
    }
}

fn build_csr(n: usize, sorted: &[(Node, Node)]) -> (Csr, Csr) {
    let mut out_offsets = vec![0usize; n + 1];
    let mut in_offsets = vec![0usize; n + 1];
    for &(u, v) in sorted {
        out_offsets[u as usize + 1] += 1;
        in_offsets[v as usize + 1] += 1;
    }
    for i in 0..n {
        out_offsets[i + 1] += out_offsets[i];
        in_offsets[i + 1] += in_offsets[i];
    }
    let out_targets: Vec<Node> = sorted.iter().map(|&(_, v)| v).collect();
    let mut in_sources = vec![0 as Node; sorted.len()];
    let mut cursor = in_offsets.clone();
    // sources arrive in ascending order, so each in-row ends up sorted
    for &(u, v) in sorted {
        in_sources[cursor[v as usize]] = u;
        cursor[v as usize] += 1;
    }
    (
        Csr {
            offsets: out_offsets,
            targets: out_targets,
        },
        Csr {
            offsets: in_offsets,
            targets: in_sources,
        },
    )
}
