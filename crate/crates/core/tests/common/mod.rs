//! Shared fixtures and closed-form oracles for the integration tests.
//! The oracles use nalgebra's dense inverse and literal textbook formulas,
//! sharing nothing with the library's QR-based code.

#![allow(dead_code)]

use disrupt_core::frame::Frame;
use disrupt_core::graph::RawEdge;
use disrupt_core::{Corpus, LoadOptions, PaperId, PaperMeta};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

pub fn meta(id: &str, year: i32, journal: &str) -> PaperMeta {
    PaperMeta {
        id: PaperId::new(id).unwrap(),
        year,
        journal: journal.into(),
        doc_type: "article".into(),
        milestone: false,
        n_authors: 1,
        n_pages: 4,
        n_countries: 1,
        usa: false,
        china: false,
        eu28: false,
    }
}

pub fn corpus(papers: Vec<PaperMeta>, edges: &[(&str, &str)]) -> Corpus {
    let edges = edges.iter().map(|(a, b)| RawEdge::new(*a, *b)).collect();
    Corpus::from_parts(papers, edges, &LoadOptions::default())
        .unwrap()
        .0
}

/// The hand-worked graph: F cites R1, R2; A, B, D cite F; B, C, D cite R1;
/// D cites R2.
pub fn g1() -> Corpus {
    let papers = ["F", "R1", "R2", "A", "B", "C", "D"]
        .iter()
        .map(|id| meta(id, 2000, "J"))
        .collect();
    corpus(
        papers,
        &[
            ("F", "R1"),
            ("F", "R2"),
            ("A", "F"),
            ("B", "F"),
            ("B", "R1"),
            ("C", "R1"),
            ("D", "F"),
            ("D", "R1"),
            ("D", "R2"),
        ],
    )
}

/// Random small citation graph: up to `max_papers` papers over a few years
/// and journals, arbitrary directed edges with a random density.
pub fn random_graph(seed: u64, max_papers: usize) -> Corpus {
    let mut r = rng(seed);
    let n = r.random_range(1..=max_papers);
    let journals = r.random_range(1..=3);
    let years = r.random_range(1..=4);
    let papers: Vec<PaperMeta> = (0..n)
        .map(|i| {
            meta(
                &format!("p{i:02}"),
                2000 + r.random_range(0..years),
                &format!("J{}", r.random_range(0..journals)),
            )
        })
        .collect();
    let density = r.random_range(0.02..0.3);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && r.random_bool(density) {
                edges.push(RawEdge::new(format!("p{a:02}"), format!("p{b:02}")));
            }
        }
    }
    Corpus::from_parts(papers, edges, &LoadOptions::default())
        .unwrap()
        .0
}

pub fn frame(cols: &[(&str, Vec<f64>)]) -> Frame {
    let n = cols[0].1.len();
    let mut f = Frame::new((0..n).map(|i| format!("r{i:04}")).collect());
    for (name, v) in cols {
        f.add_dense(*name, v.clone()).unwrap();
    }
    f
}

/// Design with a leading column of ones.
pub fn design(cols: &[&[f64]]) -> DMatrix<f64> {
    let n = cols[0].len();
    DMatrix::from_fn(
        n,
        cols.len() + 1,
        |i, j| if j == 0 { 1.0 } else { cols[j - 1][i] },
    )
}

#[derive(Debug)]
pub struct OlsOracle {
    pub beta: Vec<f64>,
    pub se_classical: Vec<f64>,
    pub se_hc1: Vec<f64>,
    pub r2: f64,
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
}

/// Normal equations and the explicit HC1 sandwich
/// `n/(n-k) (X'X)^-1 (Σ e_i² x_i x_i') (X'X)^-1`.
pub fn ols_oracle(x: &DMatrix<f64>, y: &[f64]) -> OlsOracle {
    let (n, k) = x.shape();
    let y = DVector::from_column_slice(y);
    let xtx_inv = (x.transpose() * x).try_inverse().expect("invertible X'X");
    let beta = &xtx_inv * x.transpose() * &y;
    let fitted = x * &beta;
    let e = &y - &fitted;
    let rss = e.dot(&e);
    let s2 = rss / (n - k) as f64;
    let mut meat = DMatrix::zeros(k, k);
    for i in 0..n {
        let xi = x.row(i).transpose();
        meat += &xi * xi.transpose() * (e[i] * e[i]);
    }
    let hc1 = &xtx_inv * meat * &xtx_inv * (n as f64 / (n - k) as f64);
    let ybar = y.mean();
    let tss: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    OlsOracle {
        beta: beta.iter().copied().collect(),
        se_classical: (0..k).map(|j| (s2 * xtx_inv[(j, j)]).sqrt()).collect(),
        se_hc1: (0..k).map(|j| hc1[(j, j)].sqrt()).collect(),
        r2: 1.0 - rss / tss,
        residuals: e.iter().copied().collect(),
        fitted: fitted.iter().copied().collect(),
    }
}

/// Cook's distance by definition: refit without each row and measure the
/// shift of all fitted values, `Σ_j (ŷ_j − ŷ_j(i))² / (k s²)`.
pub fn cooks_leave_one_out(x: &DMatrix<f64>, y: &[f64]) -> Vec<f64> {
    let (n, k) = x.shape();
    let full = ols_oracle(x, y);
    let s2 = full.residuals.iter().map(|e| e * e).sum::<f64>() / (n - k) as f64;
    (0..n)
        .map(|i| {
            let keep: Vec<usize> = (0..n).filter(|&r| r != i).collect();
            let xs = x.select_rows(&keep);
            let ys: Vec<f64> = keep.iter().map(|&r| y[r]).collect();
            let xtx_inv = (xs.transpose() * &xs).try_inverse().unwrap();
            let b = xtx_inv * xs.transpose() * DVector::from_vec(ys);
            let shifted = x * b;
            full.fitted
                .iter()
                .zip(shifted.iter())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                / (k as f64 * s2)
        })
        .collect()
}

/// `R²` of `y` on `x` (which includes the intercept column).
pub fn r_squared(x: &DMatrix<f64>, y: &[f64]) -> f64 {
    ols_oracle(x, y).r2
}

/// Nearest-rank percentile by sorting and indexing with integer arithmetic
/// (`p` a whole percent).
pub fn percentile_oracle(values: &[f64], p: u32) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    let rank = (p as usize * n).div_ceil(100).max(1);
    v[rank - 1]
}

pub fn median_oracle(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Peak resident set size of this process in bytes, if the platform reports it.
pub fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}
