use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::graph::{Corpus, LoadOptions, PaperId, PaperMeta, RawEdge, PAPER_COLUMNS};
use crate::io;

pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.9)";
pub const GENERATOR_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attachment {
    /// Every earlier paper is equally likely to be cited.
    Uniform,
    /// Citation probability proportional to `in_degree + mean_out_degree`.
    Preferential,
}

impl std::str::FromStr for Attachment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Attachment::Uniform),
            "preferential" => Ok(Attachment::Preferential),
            other => Err(Error::Invalid(format!(
                "attachment must be `uniform` or `preferential`, got `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for Attachment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Attachment::Uniform => "uniform",
            Attachment::Preferential => "preferential",
        })
    }
}

#[derive(Debug, Clone)]
pub struct GeneratorParams {
    pub n_papers: usize,
    pub first_year: i32,
    pub last_year: i32,
    pub journals: usize,
    pub mean_out_degree: f64,
    pub attachment: Attachment,
    /// Papers rewired so that none of their citers cites any of their references;
    /// they are also flagged as milestones.
    pub planted_disruptive: usize,
    /// Attachment weight multiplier `exp(planted_effect)` for planted papers,
    /// which shifts their expected log citations by about `planted_effect`.
    pub planted_effect: f64,
    pub seed: u64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            n_papers: 1_000,
            first_year: 1980,
            last_year: 2019,
            journals: 4,
            mean_out_degree: 10.0,
            attachment: Attachment::Preferential,
            planted_disruptive: 20,
            planted_effect: 1.5,
            seed: 1,
        }
    }
}

/// A generated corpus held in memory, ready to write or index.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub params: GeneratorParams,
    pub papers: Vec<PaperMeta>,
    /// Cited references per paper, ascending paper index.
    pub refs: Vec<Vec<u32>>,
    pub planted: Vec<String>,
}

/// Cumulative-weight tree for weighted sampling over a growing prefix.
struct Fenwick {
    tree: Vec<f64>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick {
            tree: vec![0.0; n + 1],
        }
    }

    fn add(&mut self, i: usize, delta: f64) {
        let mut i = i + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    fn prefix(&self, end: usize) -> f64 {
        let mut i = end;
        let mut s = 0.0;
        while i > 0 {
            s += self.tree[i];
            i &= i - 1;
        }
        s
    }

    /// Smallest index whose inclusive prefix sum exceeds `target`.
    fn search(&self, mut target: f64) -> usize {
        let mut pos = 0;
        let mut step = (self.tree.len() - 1).next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}

fn validate(p: &GeneratorParams) -> Result<()> {
    if p.n_papers == 0 {
        return Err(Error::Invalid("n_papers must be at least 1".into()));
    }
    if p.last_year < p.first_year {
        return Err(Error::Invalid("last_year precedes first_year".into()));
    }
    if p.journals == 0 {
        return Err(Error::Invalid("journals must be at least 1".into()));
    }
    if !(p.mean_out_degree >= 0.0 && p.mean_out_degree.is_finite()) {
        return Err(Error::Invalid(
            "mean_out_degree must be a finite non-negative number".into(),
        ));
    }
    if !p.planted_effect.is_finite() {
        return Err(Error::Invalid("planted_effect must be finite".into()));
    }
    if p.planted_disruptive > p.n_papers {
        return Err(Error::Invalid(format!(
            "planted_disruptive ({}) exceeds n_papers ({})",
            p.planted_disruptive, p.n_papers
        )));
    }
    Ok(())
}

fn year_of(p: &GeneratorParams, i: usize) -> i32 {
    let span = (p.last_year - p.first_year + 1) as usize;
    p.first_year + (i * span / p.n_papers) as i32
}

/// Generates a seeded corpus. Papers are ordered by publication year and only
/// ever cite papers from strictly earlier years.
pub fn generate_corpus(params: &GeneratorParams) -> Result<SyntheticCorpus> {
    validate(params)?;
    let n = params.n_papers;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let years: Vec<i32> = (0..n).map(|i| year_of(params, i)).collect();
    // first index of each paper's year = number of strictly earlier papers
    let mut available = vec![0usize; n];
    for i in 1..n {
        available[i] = if years[i] == years[i - 1] {
            available[i - 1]
        } else {
            i
        };
    }
    let max_available = available.last().copied().unwrap_or(0);
    if params.mean_out_degree > max_available as f64 && params.mean_out_degree > 0.0 {
        return Err(Error::Invalid(format!(
            "mean_out_degree {} exceeds the {} papers that precede the final year",
            params.mean_out_degree, max_available
        )));
    }

    let candidates: Vec<usize> = (0..n)
        .filter(|&i| {
            available[i] > 0
                && years[i] <= params.first_year + (params.last_year - params.first_year) * 3 / 5
        })
        .collect();
    if params.planted_disruptive > candidates.len() {
        return Err(Error::Invalid(format!(
            "cannot plant {} disruptive papers: only {} papers have both earlier and later cohorts",
            params.planted_disruptive,
            candidates.len()
        )));
    }
    let mut shuffled = candidates;
    shuffled.shuffle(&mut rng);
    let mut is_planted = vec![false; n];
    for &i in &shuffled[..params.planted_disruptive] {
        is_planted[i] = true;
    }

    let width = n.to_string().len().max(4);
    let papers: Vec<PaperMeta> = (0..n)
        .map(|i| {
            let n_countries = match rng.random_range(0..20) {
                0 => 3,
                1..=5 => 2,
                _ => 1,
            };
            PaperMeta {
                id: PaperId::new(format!("P{i:0width$}")).expect("non-empty"),
                year: years[i],
                journal: format!("J{}", rng.random_range(0..params.journals) + 1),
                doc_type: "article".into(),
                milestone: is_planted[i],
                n_authors: 1 + Poisson::new(2.0).map_or(0, |d| d.sample(&mut rng) as u32),
                n_pages: [3, 4, 4, 4, 4, 5][rng.random_range(0..6)],
                n_countries,
                usa: rng.random_bool(0.45),
                china: rng.random_bool(0.05),
                eu28: rng.random_bool(0.35),
            }
        })
        .collect();

    let boost = params.planted_effect.exp();
    let base = |planted: bool| if planted { boost } else { 1.0 };
    let mut weights = Fenwick::new(n);
    for (i, &planted) in is_planted.iter().enumerate() {
        let w = match params.attachment {
            Attachment::Uniform => 1.0,
            Attachment::Preferential => params.mean_out_degree.max(1.0),
        };
        weights.add(i, w * base(planted));
    }
    let degree = (params.mean_out_degree > 0.0)
        .then(|| Poisson::new(params.mean_out_degree).expect("validated"));

    let mut refs: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut chosen = BTreeSet::new();
    for i in 0..n {
        let avail = available[i];
        if avail == 0 {
            continue;
        }
        let mut k = degree.as_ref().map_or(0, |d| d.sample(&mut rng) as usize);
        if is_planted[i] {
            k = k.max(1);
        }
        let k = k.min(avail);
        chosen.clear();
        let total = weights.prefix(avail);
        let mut attempts = 0;
        while chosen.len() < k && attempts < 64 * k {
            attempts += 1;
            let t = weights.search(rng.random::<f64>() * total).min(avail - 1);
            chosen.insert(t as u32);
        }
        // dense demands: finish with a scan from a random start
        let mut j = rng.random_range(0..avail);
        while chosen.len() < k {
            chosen.insert(j as u32);
            j = (j + 1) % avail;
        }
        if params.attachment == Attachment::Preferential {
            for &t in &chosen {
                weights.add(t as usize, base(is_planted[t as usize]));
            }
        }
        refs[i] = chosen.iter().copied().collect();
    }

    detach_planted(&mut refs, &is_planted, &available, &mut rng);

    let planted = (0..n)
        .filter(|&i| is_planted[i])
        .map(|i| papers[i].id.as_str().to_string())
        .collect();
    Ok(SyntheticCorpus {
        params: params.clone(),
        papers,
        refs,
        planted,
    })
}

/// Rewires edges so that no citer of a planted paper cites any of its
/// references, and no planted paper cites another.
fn detach_planted(
    refs: &mut [Vec<u32>],
    is_planted: &[bool],
    available: &[usize],
    rng: &mut ChaCha8Rng,
) {
    let n = refs.len();
    let planted: Vec<usize> = (0..n).filter(|&i| is_planted[i]).collect();
    if planted.is_empty() {
        return;
    }

    let pick =
        |rng: &mut ChaCha8Rng, own: &[u32], forbidden: &dyn Fn(u32) -> bool, avail: usize| {
            (0..256).find_map(|_| {
                let t = rng.random_range(0..avail) as u32;
                (!is_planted[t as usize] && !forbidden(t) && own.binary_search(&t).is_err())
                    .then_some(t)
            })
        };
    let rewire = |rng: &mut ChaCha8Rng,
                  list: &mut Vec<u32>,
                  drop: &[u32],
                  forbidden: &dyn Fn(u32) -> bool,
                  avail: usize| {
        let mut kept: Vec<u32> = list.iter().copied().filter(|t| !drop.contains(t)).collect();
        kept.sort_unstable();
        for _ in 0..drop.len() {
            if let Some(t) = pick(rng, &kept, forbidden, avail) {
                let pos = kept.binary_search(&t).unwrap_err();
                kept.insert(pos, t);
            }
        }
        *list = kept;
    };

    for &p in &planted {
        let drop: Vec<u32> = refs[p]
            .iter()
            .copied()
            .filter(|&t| is_planted[t as usize])
            .collect();
        if !drop.is_empty() {
            let mut list = std::mem::take(&mut refs[p]);
            rewire(rng, &mut list, &drop, &|_| false, available[p]);
            refs[p] = list;
        }
    }

    let mut citers: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (c, list) in refs.iter().enumerate() {
        for &t in list {
            if is_planted[t as usize] {
                citers[t as usize].push(c as u32);
            }
        }
    }
    for &p in &planted {
        let planted_refs = refs[p].clone();
        for &c in &citers[p] {
            let c = c as usize;
            let drop: Vec<u32> = refs[c]
                .iter()
                .copied()
                .filter(|t| planted_refs.binary_search(t).is_ok())
                .collect();
            if drop.is_empty() {
                continue;
            }
            // references of every planted paper that c cites stay off-limits
            let cited_planted: Vec<usize> = refs[c]
                .iter()
                .map(|&t| t as usize)
                .filter(|&t| is_planted[t])
                .collect();
            let forbidden = |t: u32| {
                cited_planted
                    .iter()
                    .any(|&q| refs[q].binary_search(&t).is_ok())
            };
            let mut list = refs[c].clone();
            rewire(rng, &mut list, &drop, &forbidden, available[c]);
            refs[c] = list;
        }
    }
}

impl SyntheticCorpus {
    pub fn edge_count(&self) -> usize {
        self.refs.iter().map(Vec::len).sum()
    }

    pub fn raw_edges(&self) -> Vec<RawEdge> {
        self.refs
            .iter()
            .enumerate()
            .flat_map(|(i, list)| {
                list.iter().map(move |&t| {
                    RawEdge::new(
                        self.papers[i].id.as_str(),
                        self.papers[t as usize].id.as_str(),
                    )
                })
            })
            .collect()
    }

    pub fn to_corpus(&self) -> Result<Corpus> {
        Ok(Corpus::from_parts(
            self.papers.clone(),
            self.raw_edges(),
            &LoadOptions::default(),
        )?
        .0)
    }

    pub fn manifest(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("generator", format!("disrupt-synth v{GENERATOR_VERSION}"));
        kv("rng", RNG_NAME.to_string());
        kv("seed", p.seed.to_string());
        kv("n_papers", p.n_papers.to_string());
        kv("first_year", p.first_year.to_string());
        kv("last_year", p.last_year.to_string());
        kv("journals", p.journals.to_string());
        kv("mean_out_degree", p.mean_out_degree.to_string());
        kv("attachment", p.attachment.to_string());
        kv("planted_disruptive", p.planted_disruptive.to_string());
        kv("planted_effect", p.planted_effect.to_string());
        kv("paper_count", self.papers.len().to_string());
        kv("edge_count", self.edge_count().to_string());
        kv("planted_ids", self.planted.join(","));
        s
    }

    /// Writes `papers.csv`, `citations.csv` and `manifest.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let emit =
            |name: &str, body: &dyn Fn(&mut dyn Write) -> std::io::Result<()>| -> Result<()> {
                let path = dir.join(name);
                let mut w = io::create_writer(&path)?;
                body(&mut w)
                    .and_then(|_| w.flush())
                    .map_err(|e| Error::io(&path, e))
            };
        emit("papers.csv", &|w| self.write_papers(w))?;
        emit("citations.csv", &|w| self.write_citations(w))?;
        emit("manifest.txt", &|w| w.write_all(self.manifest().as_bytes()))
    }

    pub fn write_papers(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(w, "{}", PAPER_COLUMNS.join(","))?;
        let b = |v: bool| u8::from(v);
        for m in &self.papers {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                m.id,
                m.year,
                m.journal,
                m.doc_type,
                b(m.milestone),
                m.n_authors,
                m.n_pages,
                m.n_countries,
                b(m.usa),
                b(m.china),
                b(m.eu28)
            )?;
        }
        Ok(())
    }

    pub fn write_citations(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(w, "citing,cited")?;
        for (i, list) in self.refs.iter().enumerate() {
            for &t in list {
                writeln!(w, "{},{}", self.papers[i].id, self.papers[t as usize].id)?;
            }
        }
        Ok(())
    }
}

/// Parses a `key = value` manifest.
pub fn read_manifest(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect())
}
