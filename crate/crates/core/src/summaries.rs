//! Descriptive outputs: per-year percentile timelines, annual medians over
//! milestone papers, histograms, and an SVG timeline chart.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::io::fmt_real;

pub const DEFAULT_PERCENTILES: [f64; 2] = [90.0, 99.0];

/// 1-based nearest rank `ceil(p/100 · n)`, clamped to `1..=n`. Products that
/// land on an integer up to rounding error are not bumped to the next rank.
pub fn nearest_rank(p: f64, n: usize) -> usize {
    let x = p * n as f64 / 100.0;
    let r = x.round();
    let rank = if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r
    } else {
        x.ceil()
    };
    (rank as usize).clamp(1, n.max(1))
}

/// Nearest-rank percentile of an ascending slice.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    sorted[nearest_rank(p, sorted.len()) - 1]
}

/// Median of an ascending slice; midpoint of the central pair for even length.
pub fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct YearRow {
    pub year: i32,
    pub n: usize,
    pub median: f64,
    /// One value per requested percentile.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct YearlyPercentiles {
    pub indicator: String,
    pub percentiles: Vec<f64>,
    pub rows: Vec<YearRow>,
}

fn year_of(v: Option<f64>) -> Option<i32> {
    v.filter(|y| y.fract() == 0.0).map(|y| y as i32)
}

/// Defined values of `indicator` grouped by the frame's `year` column, each
/// group sorted ascending. Rows with `keep(i) == false` are skipped.
fn by_year(
    data: &Frame,
    indicator: &str,
    keep: impl Fn(usize) -> bool,
) -> Result<BTreeMap<i32, Vec<f64>>> {
    let values = data.column(indicator)?;
    let years = data.column("year")?;
    let mut groups: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for i in 0..data.len() {
        if !keep(i) {
            continue;
        }
        if let (Some(y), Some(v)) = (year_of(years[i]), values[i]) {
            if v.is_finite() {
                groups.entry(y).or_default().push(v);
            }
        }
    }
    for g in groups.values_mut() {
        g.sort_by(f64::total_cmp);
    }
    Ok(groups)
}

/// Median plus nearest-rank percentiles of `indicator` per publication year.
/// Undefined values are left out; years with no defined value are absent.
pub fn yearly_percentiles(
    data: &Frame,
    indicator: &str,
    percentiles: &[f64],
) -> Result<YearlyPercentiles> {
    if let Some(p) = percentiles.iter().find(|p| !(**p > 0.0 && **p < 100.0)) {
        return Err(Error::Invalid(format!("percentile {p} outside (0, 100)")));
    }
    let rows = by_year(data, indicator, |_| true)?
        .into_iter()
        .map(|(year, v)| YearRow {
            year,
            n: v.len(),
            median: median_sorted(&v),
            values: percentiles
                .iter()
                .map(|&p| percentile_sorted(&v, p))
                .collect(),
        })
        .collect();
    Ok(YearlyPercentiles {
        indicator: indicator.to_string(),
        percentiles: percentiles.to_vec(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilestoneMedian {
    pub year: i32,
    pub n_milestone: usize,
    pub median: f64,
}

/// Median of `indicator` over milestone papers (`milestone == 1`), per year.
pub fn milestone_annual_medians(data: &Frame, indicator: &str) -> Result<Vec<MilestoneMedian>> {
    let flag = data.column("milestone")?;
    Ok(by_year(data, indicator, |i| flag[i] == Some(1.0))?
        .into_iter()
        .map(|(year, v)| MilestoneMedian {
            year,
            n_milestone: v.len(),
            median: median_sorted(&v),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramSummary {
    pub indicator: String,
    /// `bins + 1` edges from min to max.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub mean: f64,
    /// Sample standard deviation (0 for a single value).
    pub sd: f64,
    pub n: usize,
}

/// Equal-width histogram over `[min, max]`; the last bin is closed.
pub fn histogram(data: &Frame, indicator: &str, bins: usize) -> Result<HistogramSummary> {
    if bins == 0 {
        return Err(Error::Invalid("histogram needs at least one bin".into()));
    }
    let values: Vec<f64> = data
        .column(indicator)?
        .iter()
        .flatten()
        .copied()
        .filter(|v| v.is_finite())
        .collect();
    if values.is_empty() {
        return Err(Error::Invalid(format!(
            "indicator `{indicator}` has no defined values"
        )));
    }
    let n = values.len();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (max - min) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| min + i as f64 * width).collect();
    edges.push(max);
    let mut counts = vec![0; bins];
    for &v in &values {
        let b = if width > 0.0 {
            (((v - min) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[b] += 1;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(HistogramSummary {
        indicator: indicator.to_string(),
        edges,
        counts,
        mean,
        sd,
        n,
    })
}

fn pct_label(p: f64) -> String {
    format!("p{}", fmt_real(p))
}

pub fn percentile_header(percentiles: &[f64]) -> String {
    let mut h = "indicator,year,n,median".to_string();
    for &p in percentiles {
        h.push(',');
        h.push_str(&pct_label(p));
    }
    h
}

/// Writes several indicators' timelines under one header. All must share
/// the same percentile list.
pub fn write_percentiles(w: &mut dyn Write, tables: &[YearlyPercentiles]) -> std::io::Result<()> {
    let ps = tables
        .first()
        .map_or(&DEFAULT_PERCENTILES[..], |t| &t.percentiles);
    writeln!(w, "{}", percentile_header(ps))?;
    for t in tables {
        assert_eq!(t.percentiles, ps, "mixed percentile lists");
        for r in &t.rows {
            write!(
                w,
                "{},{},{},{}",
                t.indicator,
                r.year,
                r.n,
                fmt_real(r.median)
            )?;
            for v in &r.values {
                write!(w, ",{}", fmt_real(*v))?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

pub const MILESTONE_HEADER: &str = "indicator,year,n_milestone,median";

pub fn write_milestone_medians(
    w: &mut dyn Write,
    tables: &[(String, Vec<MilestoneMedian>)],
) -> std::io::Result<()> {
    writeln!(w, "{MILESTONE_HEADER}")?;
    for (name, rows) in tables {
        for r in rows {
            writeln!(
                w,
                "{name},{},{},{}",
                r.year,
                r.n_milestone,
                fmt_real(r.median)
            )?;
        }
    }
    Ok(())
}

pub const HISTOGRAM_HEADER: &str = "indicator,bin,lo,hi,count,n,mean,sd";

pub fn write_histograms(w: &mut dyn Write, hists: &[HistogramSummary]) -> std::io::Result<()> {
    writeln!(w, "{HISTOGRAM_HEADER}")?;
    for h in hists {
        for (b, c) in h.counts.iter().enumerate() {
            writeln!(
                w,
                "{},{b},{},{},{c},{},{},{}",
                h.indicator,
                fmt_real(h.edges[b]),
                fmt_real(h.edges[b + 1]),
                h.n,
                fmt_real(h.mean),
                fmt_real(h.sd)
            )?;
        }
    }
    Ok(())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Self-contained SVG: median and percentile lines over the years, with
/// milestone medians as markers.
pub fn timeline_svg(table: &YearlyPercentiles, milestones: &[MilestoneMedian]) -> String {
    const W: f64 = 720.0;
    const H: f64 = 400.0;
    const PAD: f64 = 50.0;
    let years = table
        .rows
        .iter()
        .map(|r| r.year)
        .chain(milestones.iter().map(|m| m.year));
    let (y0, y1) = years.fold((i32::MAX, i32::MIN), |(a, b), y| (a.min(y), b.max(y)));
    let values = table
        .rows
        .iter()
        .flat_map(|r| std::iter::once(r.median).chain(r.values.iter().copied()))
        .chain(milestones.iter().map(|m| m.median));
    let (v0, v1) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(&table.indicator)
    );
    if y0 > y1 {
        s.push_str("</svg>\n");
        return s;
    }
    let span_y = (y1 - y0).max(1) as f64;
    let span_v = if v1 > v0 { v1 - v0 } else { 1.0 };
    let px = |year: i32| PAD + (year - y0) as f64 / span_y * (W - 2.0 * PAD);
    let py = |v: f64| H - PAD - (v - v0) / span_v * (H - 2.0 * PAD);

    let _ = writeln!(
        s,
        r#"<path d="M{PAD} {} H{} M{PAD} {} V{}" stroke="black" fill="none"/>"#,
        H - PAD,
        W - PAD,
        H - PAD,
        PAD
    );
    for (label, year) in [(y0, y0), (y1, y1)] {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{label}</text>"#,
            px(year),
            H - PAD + 16.0
        );
    }
    for v in [v0, v1] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
            PAD - 4.0,
            py(v) + 4.0,
            fmt_real(v)
        );
    }

    let palette = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b"];
    let mut series: Vec<(String, Vec<(i32, f64)>)> = vec![(
        "median".into(),
        table.rows.iter().map(|r| (r.year, r.median)).collect(),
    )];
    for (k, &p) in table.percentiles.iter().enumerate() {
        series.push((
            pct_label(p),
            table.rows.iter().map(|r| (r.year, r.values[k])).collect(),
        ));
    }
    for (k, (label, pts)) in series.iter().enumerate() {
        let color = palette[k % palette.len()];
        let d: Vec<String> = pts
            .iter()
            .map(|&(y, v)| format!("{:.1},{:.1}", px(y), py(v)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" stroke="{color}" stroke-width="1.5" fill="none"/>"#,
            d.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{label}</text>"#,
            W - PAD + 4.0,
            PAD + 14.0 * k as f64
        );
    }
    for m in milestones {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.1}" cy="{:.1}" r="3.5" fill="#d62728"><title>{} milestone median {}</title></circle>"##,
            px(m.year),
            py(m.median),
            m.year,
            fmt_real(m.median)
        );
    }
    let _ = writeln!(
        s,
        r##"<text x="{}" y="{}" fill="#d62728">milestones</text>"##,
        W - PAD + 4.0,
        PAD + 14.0 * series.len() as f64
    );
    s.push_str("</svg>\n");
    s
}
