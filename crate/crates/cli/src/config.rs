//! Run configuration: an INI file merged with same-named command-line flags.
//!
//! Keys live in fixed sections; a flag `--dep-mode` overrides key `dep_mode`
//! wherever the file put it. An empty value (`window =`) means "unset".

use std::collections::HashMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use disrupt_core::indicators::FocalFilter;
use disrupt_core::synth::{Attachment, GeneratorParams};
use disrupt_core::{DepMode, IndicatorConfig, LoadOptions};

use crate::error::{CliError, CliResult};

/// Section of every recognised key. Keys outside any section go to `general`.
pub const KEYS: &[(&str, &str)] = &[
    ("general", "out"),
    ("general", "seed"),
    ("input", "papers"),
    ("input", "citations"),
    ("input", "delimiter"),
    ("input", "strict"),
    ("input", "doc_type"),
    ("indicators", "thresholds"),
    ("indicators", "dep_mode"),
    ("indicators", "window"),
    ("indicators", "workers"),
    ("indicators", "journal"),
    ("indicators", "min_year"),
    ("indicators", "max_year"),
    ("summarize", "percentiles"),
    ("summarize", "bins"),
    ("summarize", "columns"),
    ("regress", "outcomes"),
    ("regress", "controls"),
    ("regress", "presets"),
    ("regress", "exclude_ids"),
    ("regress", "reference_year"),
    ("cem", "cem_outcomes"),
    ("cem", "match_citations"),
    ("generate", "n_papers"),
    ("generate", "first_year"),
    ("generate", "last_year"),
    ("generate", "journals"),
    ("generate", "mean_out_degree"),
    ("generate", "attachment"),
    ("generate", "planted_disruptive"),
    ("generate", "planted_effect"),
];

/// Flags shared by every subcommand; each one overrides the config key of the same name.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// Config file (`key = value` lines under `[section]` headers)
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Output directory [default: out]
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<String>,
    /// Seed for matching and corpus generation [default: 1]
    #[arg(long, global = true)]
    pub seed: Option<String>,

    /// Papers table [default: <out>/papers.csv]
    #[arg(long, global = true, value_name = "FILE")]
    pub papers: Option<String>,
    /// Citations table [default: <out>/citations.csv]
    #[arg(long, global = true, value_name = "FILE")]
    pub citations: Option<String>,
    /// Field delimiter of the input tables [default: ,]
    #[arg(long, global = true)]
    pub delimiter: Option<String>,
    /// Reject edges to unknown papers instead of creating stubs [default: true]
    #[arg(long, global = true)]
    pub strict: Option<String>,
    /// Keep only papers of this document type
    #[arg(long, global = true)]
    pub doc_type: Option<String>,

    /// Link thresholds for the disruption indices [default: 1,5]
    #[arg(long, global = true)]
    pub thresholds: Option<String>,
    /// DEP variant: mean or total [default: mean]
    #[arg(long, global = true)]
    pub dep_mode: Option<String>,
    /// Citation window in years after publication [default: none]
    #[arg(long, global = true)]
    pub window: Option<String>,
    /// Worker threads for indicators; 0 = all cores, 1 = sequential [default: 0]
    #[arg(long, global = true)]
    pub workers: Option<String>,
    /// Restrict focal papers to one journal
    #[arg(long, global = true)]
    pub journal: Option<String>,
    /// Earliest focal publication year
    #[arg(long, global = true)]
    pub min_year: Option<String>,
    /// Latest focal publication year
    #[arg(long, global = true)]
    pub max_year: Option<String>,

    /// Percentiles reported per year besides the median [default: 90,99]
    #[arg(long, global = true)]
    pub percentiles: Option<String>,
    /// Histogram bins [default: 20]
    #[arg(long, global = true)]
    pub bins: Option<String>,
    /// Indicator columns to summarise [default: all]
    #[arg(long, global = true)]
    pub columns: Option<String>,

    /// Regression outcomes [default: di1,di5,di1n,di5n,dep_inverse,log_citations]
    #[arg(long, global = true)]
    pub outcomes: Option<String>,
    /// Control variables [default: years,n_authors,n_pages,n_countries,usa,china,eu28]
    #[arg(long, global = true)]
    pub controls: Option<String>,
    /// Model families: milestone, controls, logit [default: all three]
    #[arg(long, global = true)]
    pub presets: Option<String>,
    /// File of paper ids (one per line) left out of every model
    #[arg(long, global = true, value_name = "FILE")]
    pub exclude_ids: Option<String>,
    /// Year that paper age is measured from [default: latest year]
    #[arg(long, global = true)]
    pub reference_year: Option<String>,

    /// Outcomes compared across matched pairs [default: di1,di5,di1n,di5n,dep_inverse]
    #[arg(long, global = true)]
    pub cem_outcomes: Option<String>,
    /// Also match on log citations [default: true]
    #[arg(long, global = true)]
    pub match_citations: Option<String>,

    /// Generated papers [default: 1000]
    #[arg(long, global = true)]
    pub n_papers: Option<String>,
    /// First generated publication year [default: 1980]
    #[arg(long, global = true)]
    pub first_year: Option<String>,
    /// Last generated publication year [default: 2019]
    #[arg(long, global = true)]
    pub last_year: Option<String>,
    /// Generated journals [default: 4]
    #[arg(long, global = true)]
    pub journals: Option<String>,
    /// Mean references per generated paper [default: 10]
    #[arg(long, global = true)]
    pub mean_out_degree: Option<String>,
    /// uniform or preferential [default: preferential]
    #[arg(long, global = true)]
    pub attachment: Option<String>,
    /// Planted disruptive milestone papers [default: 20]
    #[arg(long, global = true)]
    pub planted_disruptive: Option<String>,
    /// Log attachment boost of planted papers [default: 1.5]
    #[arg(long, global = true)]
    pub planted_effect: Option<String>,
}

impl Overrides {
    fn pairs(&self) -> [(&'static str, &Option<String>); 32] {
        [
            ("out", &self.out),
            ("seed", &self.seed),
            ("papers", &self.papers),
            ("citations", &self.citations),
            ("delimiter", &self.delimiter),
            ("strict", &self.strict),
            ("doc_type", &self.doc_type),
            ("thresholds", &self.thresholds),
            ("dep_mode", &self.dep_mode),
            ("window", &self.window),
            ("workers", &self.workers),
            ("journal", &self.journal),
            ("min_year", &self.min_year),
            ("max_year", &self.max_year),
            ("percentiles", &self.percentiles),
            ("bins", &self.bins),
            ("columns", &self.columns),
            ("outcomes", &self.outcomes),
            ("controls", &self.controls),
            ("presets", &self.presets),
            ("exclude_ids", &self.exclude_ids),
            ("reference_year", &self.reference_year),
            ("cem_outcomes", &self.cem_outcomes),
            ("match_citations", &self.match_citations),
            ("n_papers", &self.n_papers),
            ("first_year", &self.first_year),
            ("last_year", &self.last_year),
            ("journals", &self.journals),
            ("mean_out_degree", &self.mean_out_degree),
            ("attachment", &self.attachment),
            ("planted_disruptive", &self.planted_disruptive),
            ("planted_effect", &self.planted_effect),
        ]
    }
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    /// Where the value came from, for error messages.
    origin: String,
}

/// Raw merged key/value settings.
#[derive(Debug, Default)]
pub struct Settings {
    entries: HashMap<&'static str, Entry>,
}

fn known_key(key: &str) -> Option<(&'static str, &'static str)> {
    KEYS.iter().copied().find(|(_, k)| *k == key)
}

impl Settings {
    pub fn load(overrides: &Overrides) -> CliResult<Settings> {
        let mut settings = Settings::default();
        if let Some(path) = &overrides.config {
            settings.read_file(path)?;
        }
        for (key, value) in overrides.pairs() {
            if let Some(v) = value {
                let flag = format!("--{}", key.replace('_', "-"));
                settings.entries.insert(
                    key,
                    Entry {
                        value: v.clone(),
                        origin: format!("flag `{flag}`"),
                    },
                );
            }
        }
        Ok(settings)
    }

    fn read_file(&mut self, path: &Path) -> CliResult<()> {
        let ini = ini::Ini::load_from_file(path)
            .map_err(|e| CliError::user(format!("{}: {e}", path.display())))?;
        for (section, props) in ini.iter() {
            let section = section.unwrap_or("general");
            for (key, value) in props.iter() {
                let Some((home, key)) = known_key(key) else {
                    return Err(CliError::user(format!(
                        "{}: [{section}] unknown key `{key}`",
                        path.display()
                    )));
                };
                if home != section {
                    return Err(CliError::user(format!(
                        "{}: key `{key}` belongs in section [{home}], not [{section}]",
                        path.display()
                    )));
                }
                self.entries.insert(
                    key,
                    Entry {
                        value: value.to_string(),
                        origin: format!("{} [{section}] {key}", path.display()),
                    },
                );
            }
        }
        Ok(())
    }

    fn entry(&self, key: &str) -> Option<&Entry> {
        debug_assert!(known_key(key).is_some(), "unregistered key {key}");
        self.entries.get(key).filter(|e| !e.value.trim().is_empty())
    }

    pub fn string(&self, key: &str) -> Option<String> {
        self.entry(key).map(|e| e.value.trim().to_string())
    }

    pub fn parse<T>(&self, key: &str) -> CliResult<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.entry(key)
            .map(|e| {
                e.value
                    .trim()
                    .parse::<T>()
                    .map_err(|err| invalid(e, &e.value, err))
            })
            .transpose()
    }

    pub fn list<T>(&self, key: &str) -> CliResult<Option<Vec<T>>>
    where
        T: FromStr,
        T::Err: Display,
    {
        let Some(e) = self.entry(key) else {
            return Ok(None);
        };
        e.value
            .split(',')
            .map(|item| {
                let item = item.trim();
                if item.is_empty() {
                    return Err(invalid(e, &e.value, "empty list item"));
                }
                item.parse::<T>().map_err(|err| invalid(e, item, err))
            })
            .collect::<CliResult<Vec<T>>>()
            .map(Some)
    }

    pub fn flag(&self, key: &str) -> CliResult<Option<bool>> {
        let Some(e) = self.entry(key) else {
            return Ok(None);
        };
        match e.value.trim().to_ascii_lowercase().as_str() {
            "true" | "yes" | "1" => Ok(Some(true)),
            "false" | "no" | "0" => Ok(Some(false)),
            _ => Err(invalid(e, &e.value, "expected true or false")),
        }
    }
}

fn invalid(e: &Entry, value: &str, why: impl Display) -> CliError {
    CliError::user(format!(
        "{}: invalid value `{}`: {why}",
        e.origin,
        value.trim()
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Outcome on the milestone indicator alone.
    Milestone,
    /// Milestone plus controls.
    Controls,
    /// Logit of milestone on the indicator alone.
    Logit,
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "milestone" => Ok(Preset::Milestone),
            "controls" => Ok(Preset::Controls),
            "logit" => Ok(Preset::Logit),
            _ => Err("expected milestone, controls or logit".into()),
        }
    }
}

pub const DEFAULT_OUTCOMES: [&str; 6] =
    ["di1", "di5", "di1n", "di5n", "dep_inverse", "log_citations"];
pub const DEFAULT_CONTROLS: [&str; 7] = [
    "years",
    "n_authors",
    "n_pages",
    "n_countries",
    "usa",
    "china",
    "eu28",
];

/// Typed configuration for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub out: PathBuf,
    pub seed: u64,
    pub papers: PathBuf,
    pub citations: PathBuf,
    pub load: LoadOptions,
    pub indicators: IndicatorConfig,
    pub percentiles: Vec<f64>,
    pub bins: usize,
    pub columns: Option<Vec<String>>,
    pub outcomes: Vec<String>,
    pub controls: Vec<String>,
    pub presets: Vec<Preset>,
    pub exclude_ids: Option<PathBuf>,
    pub reference_year: Option<i32>,
    pub cem_outcomes: Vec<String>,
    pub match_citations: bool,
    pub generator: GeneratorParams,
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

impl RunConfig {
    pub fn resolve(s: &Settings) -> CliResult<RunConfig> {
        let out = PathBuf::from(s.string("out").unwrap_or_else(|| "out".into()));
        let seed = s.parse("seed")?.unwrap_or(1);

        let mut load = LoadOptions::default();
        if let Some(d) = s.entry("delimiter") {
            let raw = d.value.trim();
            load.delimiter = match raw {
                "tab" | "\\t" => b'\t',
                _ if raw.len() == 1 => raw.as_bytes()[0],
                _ => return Err(invalid(d, raw, "expected a single character or `tab`")),
            };
        }
        if let Some(strict) = s.flag("strict")? {
            load.strict = strict;
        }
        load.doc_type = s.string("doc_type");

        let mut indicators = IndicatorConfig::default();
        if let Some(t) = s.list("thresholds")? {
            indicators.thresholds = t;
        }
        if let Some(e) = s.entry("dep_mode") {
            indicators.dep_mode = e
                .value
                .trim()
                .parse::<DepMode>()
                .map_err(|err| invalid(e, &e.value, err))?;
        }
        indicators.window = s.parse("window")?;
        if let Some(w) = s.parse("workers")? {
            indicators.workers = w;
        }
        indicators.focal = FocalFilter {
            doc_type: load.doc_type.clone(),
            journal: s.string("journal"),
            min_year: s.parse("min_year")?,
            max_year: s.parse("max_year")?,
        };

        let mut generator = GeneratorParams {
            seed,
            ..GeneratorParams::default()
        };
        macro_rules! gen_key {
            ($($field:ident),*) => {
                $(if let Some(v) = s.parse(stringify!($field))? {
                    generator.$field = v;
                })*
            };
        }
        gen_key!(
            n_papers,
            first_year,
            last_year,
            journals,
            mean_out_degree,
            planted_disruptive,
            planted_effect
        );
        if let Some(e) = s.entry("attachment") {
            generator.attachment = e
                .value
                .trim()
                .parse::<Attachment>()
                .map_err(|err| invalid(e, &e.value, err))?;
        }

        let bins = s.parse("bins")?.unwrap_or(20);
        if bins == 0 {
            return Err(CliError::user("`bins` must be at least 1"));
        }

        Ok(RunConfig {
            papers: s
                .string("papers")
                .map_or_else(|| out.join("papers.csv"), PathBuf::from),
            citations: s
                .string("citations")
                .map_or_else(|| out.join("citations.csv"), PathBuf::from),
            out,
            seed,
            load,
            indicators,
            percentiles: s.list("percentiles")?.unwrap_or_else(|| vec![90.0, 99.0]),
            bins,
            columns: s.list("columns")?,
            outcomes: s
                .list("outcomes")?
                .unwrap_or_else(|| strings(&DEFAULT_OUTCOMES)),
            controls: s
                .list("controls")?
                .unwrap_or_else(|| strings(&DEFAULT_CONTROLS)),
            presets: s
                .list("presets")?
                .unwrap_or_else(|| vec![Preset::Milestone, Preset::Controls, Preset::Logit]),
            exclude_ids: s.string("exclude_ids").map(PathBuf::from),
            reference_year: s.parse("reference_year")?,
            cem_outcomes: s
                .list("cem_outcomes")?
                .unwrap_or_else(|| strings(&DEFAULT_OUTCOMES[..5])),
            match_citations: s.flag("match_citations")?.unwrap_or(true),
            generator,
        })
    }

    /// `indicators.csv` inside the output directory.
    pub fn indicators_path(&self) -> PathBuf {
        self.out.join("indicators.csv")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn settings(file: &str, flags: Overrides) -> CliResult<Settings> {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(file.as_bytes()).unwrap();
        Settings::load(&Overrides {
            config: Some(f.path().to_path_buf()),
            ..flags
        })
    }

    #[test]
    fn file_then_flags() {
        let s = settings(
            "out = results\n[indicators]\nwindow = 5\ndep_mode = total\nthresholds = 1, 3\n",
            Overrides {
                window: Some("10".into()),
                ..Default::default()
            },
        )
        .unwrap();
        let c = RunConfig::resolve(&s).unwrap();
        assert_eq!(c.out, PathBuf::from("results"));
        assert_eq!(c.papers, PathBuf::from("results/papers.csv"));
        assert_eq!(c.indicators.window, Some(10));
        assert_eq!(c.indicators.dep_mode, DepMode::TotalLinks);
        assert_eq!(c.indicators.thresholds, [1, 3]);
        assert_eq!(c.presets.len(), 3);
    }

    #[test]
    fn empty_value_unsets() {
        let s = settings("[indicators]\nwindow =\n", Overrides::default()).unwrap();
        assert_eq!(RunConfig::resolve(&s).unwrap().indicators.window, None);
    }

    #[test]
    fn errors_name_their_origin() {
        let err = settings("[indicators]\nbogus = 1\n", Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("unknown key `bogus`"), "{err}");

        let err = settings("[regress]\nwindow = 1\n", Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("[indicators]"), "{err}");

        let s = settings("[indicators]\nwindow = soon\n", Overrides::default()).unwrap();
        let err = RunConfig::resolve(&s).unwrap_err().to_string();
        assert!(err.contains("window") && err.contains("soon"), "{err}");

        let flags = Overrides {
            dep_mode: Some("median".into()),
            ..Default::default()
        };
        let s = settings("", flags).unwrap();
        let err = RunConfig::resolve(&s).unwrap_err().to_string();
        assert!(
            err.contains("--dep-mode") && err.contains("median"),
            "{err}"
        );
    }

    #[test]
    fn every_flag_is_a_key() {
        for (key, _) in Overrides::default().pairs() {
            assert!(known_key(key).is_some(), "{key}");
        }
        assert_eq!(Overrides::default().pairs().len(), KEYS.len());
    }
}
