//! Citation-graph analytics: the disruption-index family and DEP, per-year
//! percentile summaries, OLS/logit models with robust standard errors and
//! diagnostics, and coarsened exact matching.

pub mod error;
pub mod frame;
pub mod graph;
pub mod indicators;
pub mod io;
pub mod matching;
pub mod regress;
pub mod summaries;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{
    load_corpus, read_paper_table, Corpus, LoadOptions, LoadReport, PaperId, PaperMeta,
};
pub use indicators::{
    compute_all, DepMode, IndicatorConfig, IndicatorRecord, IndicatorTable, ReferenceSet,
};
