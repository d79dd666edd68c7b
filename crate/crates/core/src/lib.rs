//! Newspaper-based dengue surveillance.
//!
//! The pipeline runs in five stages, each in its own module:
//!
//! - [`corpus`]: ingest line-delimited news records, normalize Bengali text,
//!   geotag articles against a gazetteer and compute per-year corpus statistics.
//! - [`topics`]: seed-guided LDA (collapsed Gibbs sampling with boosted
//!   priors on seed words) that proposes keyword expansions per seed set.
//! - [`hitl`]: the human-in-the-loop protocol: versioned keyword lexicon,
//!   cosine/Jaccard baseline scoring, the annotation queue and majority voting.
//! - [`classify`]: keyword-restricted count features and three classifiers
//!   (multinomial naive Bayes, KNN, linear SVM) with holdout evaluation.
//! - [`analytics`]: monthly regional aggregation, Pearson correlation against
//!   official case counts, intervention-gap ranking and the Dhaka
//!   city-corporation comparison.
//!
//! [`workspace`] persists all of the above in a data directory and
//! [`reports`] builds the payloads shared by the command line and HTTP API.

pub mod analytics;
pub mod classify;
pub mod corpus;
pub mod defaults;
pub mod hitl;
pub mod labels;
pub mod region;
pub mod reports;
pub mod synth;
pub mod topics;
pub mod workspace;

mod jsonl;

pub use analytics::{
    AggregateReport, CaseRecord, CaseSource, CityCorpComparison, CorrelationResult, GapReport,
    Level, RegionAggregate, YearMonth,
};
pub use classify::{ClassifierModel, EvalReport, FeatureSpace, FeatureVector, ModelKind};
pub use corpus::{CorpusStats, Gazetteer, NewsRecord, Normalizer, Stopwords, TokenizedDoc};
pub use hitl::{BaselineScore, HitlSession, KeywordLexicon, LabeledDoc};
pub use labels::{CoiLink, Label};
pub use region::{Division, RegionRef};
pub use topics::{LdaConfig, SeedSet, TopicModel};
pub use workspace::Workspace;

/// Errors surfaced by any stage of the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
    #[error(transparent)]
    Topics(#[from] topics::TopicError),
    #[error(transparent)]
    Hitl(#[from] hitl::HitlError),
    #[error(transparent)]
    Classify(#[from] classify::ClassifyError),
    #[error(transparent)]
    Analytics(#[from] analytics::AnalyticsError),
    #[error(transparent)]
    Workspace(#[from] workspace::WorkspaceError),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
