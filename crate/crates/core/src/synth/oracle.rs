//! Reference indicator implementation by literal enumeration.
//!
//! Each count is its own scan over every paper in the corpus, tested against
//! a flat set of `(citing, cited)` pairs. Nothing here shares code with the
//! indicator engine beyond reading the corpus.

use std::collections::{BTreeSet, HashSet};

use crate::error::{Error, Result};
use crate::graph::{Corpus, Node};
use crate::indicators::{Counts, DepMode, IndicatorConfig, IndicatorRecord};

pub const ORACLE_PAPER_LIMIT: usize = 10_000;

/// Flat edge relation plus metadata accessors.
pub struct Oracle<'a> {
    corpus: &'a Corpus,
    edges: HashSet<(Node, Node)>,
}

impl<'a> Oracle<'a> {
    pub fn new(corpus: &'a Corpus) -> Result<Self> {
        if corpus.len() > ORACLE_PAPER_LIMIT {
            return Err(Error::OracleGuard {
                papers: corpus.len(),
                limit: ORACLE_PAPER_LIMIT,
            });
        }
        let mut edges = HashSet::new();
        for u in 0..corpus.len() as Node {
            for &v in corpus.refs(u) {
                edges.insert((u, v));
            }
        }
        Ok(Oracle { corpus, edges })
    }

    fn cites(&self, a: Node, b: Node) -> bool {
        self.edges.contains(&(a, b))
    }

    fn papers(&self) -> impl Iterator<Item = Node> {
        0..self.corpus.len() as Node
    }

    fn references(&self, p: Node) -> BTreeSet<Node> {
        self.papers().filter(|&q| self.cites(p, q)).collect()
    }

    fn in_window(&self, focal: Node, p: Node, window: Option<u32>) -> bool {
        match window {
            None => true,
            Some(w) => match (self.corpus.year(focal), self.corpus.year(p)) {
                (Some(fy), Some(py)) => (py as i64) - (fy as i64) <= w as i64,
                _ => false,
            },
        }
    }

    fn links_into(&self, p: Node, set: &BTreeSet<Node>) -> u64 {
        set.iter().filter(|&&r| self.cites(p, r)).count() as u64
    }

    fn citers(&self, focal: Node, window: Option<u32>) -> Vec<Node> {
        self.papers()
            .filter(|&c| self.cites(c, focal) && self.in_window(focal, c, window))
            .collect()
    }

    /// Counts against an explicit reference set, by the verbatim definitions.
    pub fn counts(&self, focal: Node, set: &BTreeSet<Node>, l: u32, window: Option<u32>) -> Counts {
        let n_i = self
            .papers()
            .filter(|&c| self.cites(c, focal) && self.in_window(focal, c, window))
            .filter(|&c| self.links_into(c, set) == 0)
            .count() as u64;
        let n_j = self
            .papers()
            .filter(|&c| self.cites(c, focal) && self.in_window(focal, c, window))
            .filter(|&c| self.links_into(c, set) >= l as u64)
            .count() as u64;
        let n_k = self
            .papers()
            .filter(|&p| p != focal && !self.cites(p, focal) && self.in_window(focal, p, window))
            .filter(|&p| self.links_into(p, set) >= 1)
            .count() as u64;
        Counts { n_i, n_j, n_k }
    }

    fn cohort_union(&self, focal: Node) -> Option<BTreeSet<Node>> {
        let m = self.corpus.meta(focal)?;
        let mut union = BTreeSet::new();
        for p in self.papers() {
            if let Some(pm) = self.corpus.meta(p) {
                if pm.journal == m.journal && pm.year == m.year {
                    union.extend(self.references(p));
                }
            }
        }
        Some(union)
    }

    fn di(c: Counts) -> Option<f64> {
        let den = c.n_i + c.n_j + c.n_k;
        (den > 0).then(|| (c.n_i as f64 - c.n_j as f64) / den as f64)
    }

    /// Every field of the record except `dep_inverse`, which needs the whole table.
    pub fn record(&self, focal: Node, config: &IndicatorConfig) -> IndicatorRecord {
        let window = config.window;
        let own = self.references(focal);
        let cohort = self.cohort_union(focal).unwrap_or_default();
        let counts: Vec<Counts> = config
            .thresholds
            .iter()
            .map(|&l| self.counts(focal, &own, l, window))
            .collect();
        let counts_n: Vec<Counts> = config
            .thresholds
            .iter()
            .map(|&l| self.counts(focal, &cohort, l, window))
            .collect();
        let citers = self.citers(focal, window);
        let dep_links: u64 = citers.iter().map(|&c| self.links_into(c, &own)).sum();
        let dep = match config.dep_mode {
            DepMode::TotalLinks => Some(dep_links as f64),
            DepMode::MeanPerCiter => {
                (!citers.is_empty()).then(|| dep_links as f64 / citers.len() as f64)
            }
        };
        IndicatorRecord {
            id: self.corpus.id(focal).as_str().to_string(),
            year: self.corpus.year(focal).unwrap_or_default(),
            citations: citers.len() as u64,
            log_citations: (citers.len() as f64 + 1.0).ln(),
            di: counts.iter().map(|&c| Self::di(c)).collect(),
            di_n: counts_n.iter().map(|&c| Self::di(c)).collect(),
            counts,
            counts_n,
            dep_links,
            dep,
            dep_inverse: None,
        }
    }

    fn is_focal(&self, p: Node, config: &IndicatorConfig) -> bool {
        let Some(m) = self.corpus.meta(p) else {
            return false;
        };
        let f = &config.focal;
        f.doc_type.as_ref().is_none_or(|d| *d == m.doc_type)
            && f.journal.as_ref().is_none_or(|j| j.trim() == m.journal)
            && f.min_year.is_none_or(|y| m.year >= y)
            && f.max_year.is_none_or(|y| m.year <= y)
    }

    /// The full table, ascending by id, including the inverted DEP.
    pub fn table(&self, config: &IndicatorConfig) -> Vec<IndicatorRecord> {
        let mut records: Vec<IndicatorRecord> = self
            .papers()
            .filter(|&p| self.is_focal(p, config))
            .map(|p| self.record(p, config))
            .collect();
        let mut max: Option<f64> = None;
        for r in &records {
            if let Some(d) = r.dep {
                if max.is_none_or(|m| d > m) {
                    max = Some(d);
                }
            }
        }
        if let Some(max) = max {
            for r in &mut records {
                r.dep_inverse = r.dep.map(|d| max + 1.0 - d);
            }
        }
        records
    }
}

/// Brute-force record for one focal paper (`dep_inverse` left undefined).
pub fn brute_force_indicators(
    corpus: &Corpus,
    focal: &str,
    config: &IndicatorConfig,
) -> Result<IndicatorRecord> {
    let oracle = Oracle::new(corpus)?;
    let node = corpus
        .node(focal)
        .ok_or_else(|| Error::UnknownPaper(focal.to_string()))?;
    Ok(oracle.record(node, config))
}
