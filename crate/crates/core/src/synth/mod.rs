//! Seeded synthetic citation corpora and the brute-force indicator oracle
//! used to check the indicator engine.

mod generator;
pub mod oracle;

pub use generator::{
    generate_corpus, read_manifest, Attachment, GeneratorParams, SyntheticCorpus,
    GENERATOR_VERSION, RNG_NAME,
};
pub use oracle::{brute_force_indicators, Oracle, ORACLE_PAPER_LIMIT};
