//! On-disk layout of a pipeline data directory.
//!
//! ```text
//! config.toml        pipeline settings
//! corpus.jsonl       ingested news records
//! tokens.jsonl       normalized documents
//! geotags.jsonl      gazetteer attribution per document
//! gazetteer.csv      place names
//! stopwords.txt      one stopword per line
//! citycorp.csv       Dhaka thana to city corporation
//! lexicon.jsonl      keyword lexicon, one row per token
//! labeled.jsonl      annotated documents
//! session.json       annotation session state
//! topic_model.json   fitted seeded LDA
//! models/<name>.json trained classifiers
//! predictions.jsonl  classifier output for unlabeled documents
//! cases.csv          official case counts
//! ```
//!
//! Every write goes through a temp file and a rename. `session.json` is
//! written last and is the commit point for lexicon and label changes.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::analytics::{ingest_cases, write_cases, CaseRecord, CityCorpMapping, ClassifiedDoc, SourcePrecedence, DEFAULT_GAP_THRESHOLD};
use crate::classify::{ClassifierModel, ModelKind, ModelSpec, SplitConfig, SvmHyper, SvmMode};
use crate::corpus::{CorpusStore, DateRange, Gazetteer, Normalizer, Stopwords, TokenizedDoc, TokenizerConfig};
use crate::hitl::{HitlConfig, HitlSession, KeywordLexicon, LabeledDoc, LexiconRow, SessionState};
use crate::jsonl;
use crate::labels::Label;
use crate::region::RegionRef;
use crate::topics::{LdaConfig, LdaConfigFile, ModelFile, TopicModel};
use crate::defaults;

#[derive(Debug, thiserror::Error)]
pub enum WorkspaceError {
    #[error("{0} is not an initialized data directory (run `init` first)")]
    NotInitialized(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("corrupt store {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("{0}")]
    Missing(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> WorkspaceError + '_ {
    move |source| WorkspaceError::Io { path: path.to_path_buf(), source }
}

fn corrupt(path: &Path, message: impl ToString) -> WorkspaceError {
    WorkspaceError::Corrupt { path: path.to_path_buf(), message: message.to_string() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSettings {
    pub from: NaiveDate,
    pub to: NaiveDate,
    pub tokenizer: TokenizerConfig,
}

impl Default for CorpusSettings {
    fn default() -> Self {
        let r = DateRange::default();
        CorpusSettings { from: r.from, to: r.to, tokenizer: TokenizerConfig::default() }
    }
}

impl CorpusSettings {
    pub fn range(&self) -> DateRange {
        DateRange { from: self.from, to: self.to }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifySettings {
    pub split_seed: u64,
    pub train_ratio: f64,
    pub mnb_smoothing: f64,
    pub knn_k: usize,
    pub svm: SvmHyper,
    pub svm_mode: SvmMode,
}

impl Default for ClassifySettings {
    fn default() -> Self {
        let split = SplitConfig::default();
        ClassifySettings {
            split_seed: split.split_seed,
            train_ratio: split.train_ratio,
            mnb_smoothing: 1.0,
            knn_k: 5,
            svm: SvmHyper::default(),
            svm_mode: SvmMode::Ovr,
        }
    }
}

impl ClassifySettings {
    pub fn split(&self) -> SplitConfig {
        SplitConfig { train_ratio: self.train_ratio, split_seed: self.split_seed }
    }

    pub fn spec(&self, kind: ModelKind) -> ModelSpec {
        match kind {
            ModelKind::Mnb => ModelSpec::Mnb { smoothing: self.mnb_smoothing },
            ModelKind::Knn => ModelSpec::Knn { k: self.knn_k },
            ModelKind::Svm => ModelSpec::Svm { hyper: self.svm, mode: self.svm_mode },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticsSettings {
    pub gap_threshold: f64,
    pub source_precedence: SourcePrecedence,
}

impl Default for AnalyticsSettings {
    fn default() -> Self {
        AnalyticsSettings { gap_threshold: DEFAULT_GAP_THRESHOLD, source_precedence: SourcePrecedence::default() }
    }
}

/// Contents of `config.toml`. Every section and field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkspaceConfig {
    pub corpus: CorpusSettings,
    pub lda: LdaConfigFile,
    pub hitl: HitlConfig,
    pub classify: ClassifySettings,
    pub analytics: AnalyticsSettings,
}

impl WorkspaceConfig {
    pub fn lda(&self) -> LdaConfig {
        self.lda.clone().resolve()
    }

    pub fn normalizer(&self) -> Normalizer {
        Normalizer::new(self.corpus.tokenizer.clone())
    }
}

/// Gazetteer attribution of one document; `None` when no place matched.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeotagRow {
    pub doc_id: String,
    pub region: Option<RegionRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub doc_id: String,
    pub label: Label,
    pub model: String,
}

/// A data directory.
#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub const CONFIG: &'static str = "config.toml";
    pub const CORPUS: &'static str = "corpus.jsonl";
    pub const TOKENS: &'static str = "tokens.jsonl";
    pub const GEOTAGS: &'static str = "geotags.jsonl";
    pub const GAZETTEER: &'static str = "gazetteer.csv";
    pub const STOPWORDS: &'static str = "stopwords.txt";
    pub const CITYCORP: &'static str = "citycorp.csv";
    pub const LEXICON: &'static str = "lexicon.jsonl";
    pub const LABELED: &'static str = "labeled.jsonl";
    pub const SESSION: &'static str = "session.json";
    pub const TOPIC_MODEL: &'static str = "topic_model.json";
    pub const MODELS: &'static str = "models";
    pub const PREDICTIONS: &'static str = "predictions.jsonl";
    pub const CASES: &'static str = "cases.csv";

    /// Creates the directory and writes the bundled reference files and a
    /// default config. Existing files are left alone.
    pub fn init(root: impl Into<PathBuf>) -> Result<Workspace, WorkspaceError> {
        let ws = Workspace { root: root.into() };
        fs::create_dir_all(ws.root.join(Self::MODELS)).map_err(io_err(&ws.root))?;
        let config = toml::to_string_pretty(&WorkspaceConfig::default()).expect("default config serializes");
        let files: [(&str, &str); 4] = [
            (Self::GAZETTEER, defaults::GAZETTEER),
            (Self::STOPWORDS, defaults::STOPWORDS),
            (Self::CITYCORP, defaults::CITY_CORPORATIONS),
            (Self::CONFIG, &config),
        ];
        for (name, content) in files {
            let path = ws.path(name);
            if !path.exists() {
                jsonl::write_atomic(&path, |f| f.write_all(content.as_bytes())).map_err(io_err(&path))?;
            }
        }
        if !ws.path(Self::SESSION).exists() {
            let config = ws.config()?;
            let session = HitlSession::new(KeywordLexicon::standard(), config.hitl).map_err(|e| corrupt(&ws.path(Self::CONFIG), e))?;
            ws.save_session(&session)?;
        }
        Ok(ws)
    }

    pub fn open(root: impl Into<PathBuf>) -> Result<Workspace, WorkspaceError> {
        let ws = Workspace { root: root.into() };
        if !ws.path(Self::CONFIG).is_file() {
            return Err(WorkspaceError::NotInitialized(ws.root));
        }
        Ok(ws)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn write_text(&self, name: &str, text: &str) -> Result<(), WorkspaceError> {
        let path = self.path(name);
        jsonl::write_atomic(&path, |f| f.write_all(text.as_bytes())).map_err(io_err(&path))
    }

    fn read_text(&self, name: &str) -> Result<String, WorkspaceError> {
        let path = self.path(name);
        fs::read_to_string(&path).map_err(io_err(&path))
    }

    fn read_jsonl<T: serde::de::DeserializeOwned>(&self, name: &str) -> Result<Vec<T>, WorkspaceError> {
        let path = self.path(name);
        if !path.exists() {
            return Ok(Vec::new());
        }
        jsonl::read_all(&path).map_err(|m| corrupt(&path, m))
    }

    fn write_jsonl<T: Serialize>(&self, name: &str, items: &[T]) -> Result<(), WorkspaceError> {
        let path = self.path(name);
        jsonl::write_all(&path, items).map_err(io_err(&path))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), WorkspaceError> {
        let text = serde_json::to_string_pretty(value).expect("store types serialize");
        self.write_text(name, &(text + "\n"))
    }

    fn read_json<T: serde::de::DeserializeOwned>(&self, name: &str) -> Result<Option<T>, WorkspaceError> {
        let path = self.path(name);
        if !path.exists() {
            return Ok(None);
        }
        let text = self.read_text(name)?;
        serde_json::from_str(&text).map(Some).map_err(|e| corrupt(&path, e))
    }

    pub fn config(&self) -> Result<WorkspaceConfig, WorkspaceError> {
        let path = self.path(Self::CONFIG);
        toml::from_str(&self.read_text(Self::CONFIG)?).map_err(|e| corrupt(&path, e))
    }

    pub fn save_config(&self, config: &WorkspaceConfig) -> Result<(), WorkspaceError> {
        self.write_text(Self::CONFIG, &toml::to_string_pretty(config).expect("config serializes"))
    }

    pub fn gazetteer(&self) -> Result<Gazetteer, WorkspaceError> {
        let path = self.path(Self::GAZETTEER);
        let file = fs::File::open(&path).map_err(io_err(&path))?;
        Gazetteer::from_reader(file, self.config()?.normalizer()).map_err(|e| corrupt(&path, e))
    }

    pub fn stopwords(&self) -> Result<Stopwords, WorkspaceError> {
        let path = self.path(Self::STOPWORDS);
        let file = fs::File::open(&path).map_err(io_err(&path))?;
        Stopwords::from_reader(BufReader::new(file), &self.config()?.normalizer()).map_err(io_err(&path))
    }

    pub fn citycorp(&self) -> Result<CityCorpMapping, WorkspaceError> {
        let path = self.path(Self::CITYCORP);
        let file = fs::File::open(&path).map_err(io_err(&path))?;
        CityCorpMapping::from_reader(file).map_err(|e| corrupt(&path, e))
    }

    /// The stored corpus. Records are re-validated on load; any failure means
    /// the file was edited by hand and is reported as corrupt.
    pub fn corpus(&self) -> Result<CorpusStore, WorkspaceError> {
        let path = self.path(Self::CORPUS);
        let mut store = CorpusStore::new();
        if !path.exists() {
            return Ok(store);
        }
        let file = fs::File::open(&path).map_err(io_err(&path))?;
        let report = store
            .ingest_reader(BufReader::new(file), &self.config()?.corpus.range(), None)
            .map_err(|e| corrupt(&path, e))?;
        if let Some(r) = report.rejects.first() {
            return Err(corrupt(&path, format!("line {}: {}", r.line, r.reason)));
        }
        Ok(store)
    }

    pub fn save_corpus(&self, store: &CorpusStore) -> Result<(), WorkspaceError> {
        let path = self.path(Self::CORPUS);
        jsonl::write_atomic(&path, |f| store.export(f)).map_err(io_err(&path))
    }

    pub fn tokens(&self) -> Result<Vec<TokenizedDoc>, WorkspaceError> {
        self.read_jsonl(Self::TOKENS)
    }

    pub fn save_tokens(&self, docs: &[TokenizedDoc]) -> Result<(), WorkspaceError> {
        #[derive(Serialize)]
        struct Row<'a> {
            doc_id: &'a str,
            tokens: &'a [String],
        }
        let rows: Vec<Row> = docs.iter().map(|d| Row { doc_id: &d.doc_id, tokens: &d.tokens }).collect();
        self.write_jsonl(Self::TOKENS, &rows)
    }

    pub fn geotags(&self) -> Result<Vec<GeotagRow>, WorkspaceError> {
        self.read_jsonl(Self::GEOTAGS)
    }

    pub fn save_geotags(&self, rows: &[GeotagRow]) -> Result<(), WorkspaceError> {
        self.write_jsonl(Self::GEOTAGS, rows)
    }

    pub fn session(&self) -> Result<HitlSession, WorkspaceError> {
        let spath = self.path(Self::SESSION);
        let state: SessionState = self.read_json(Self::SESSION)?.ok_or_else(|| WorkspaceError::NotInitialized(self.root.clone()))?;
        let lpath = self.path(Self::LEXICON);
        let rows: Vec<LexiconRow> = self.read_jsonl(Self::LEXICON)?;
        // rows beyond the committed version belong to an interrupted write
        let rows: Vec<LexiconRow> = rows.into_iter().filter(|r| r.version <= state.lexicon_version).collect();
        let lexicon = KeywordLexicon::from_rows(&rows, state.lexicon_version).map_err(|e| corrupt(&lpath, e))?;
        let labeled: Vec<LabeledDoc> = self.read_jsonl(Self::LABELED)?;
        HitlSession::from_parts(lexicon, labeled, state).map_err(|e| corrupt(&spath, e))
    }

    pub fn save_session(&self, session: &HitlSession) -> Result<(), WorkspaceError> {
        self.write_jsonl(Self::LEXICON, &session.lexicon().rows())?;
        let labeled: Vec<&LabeledDoc> = session.labeled().collect();
        self.write_jsonl(Self::LABELED, &labeled)?;
        self.write_json(Self::SESSION, &session.state())
    }

    pub fn topic_model(&self) -> Result<TopicModel, WorkspaceError> {
        let path = self.path(Self::TOPIC_MODEL);
        let file: ModelFile = self
            .read_json(Self::TOPIC_MODEL)?
            .ok_or_else(|| WorkspaceError::Missing("no topic model yet (run `topics fit`)".into()))?;
        TopicModel::from_file(file).map_err(|e| corrupt(&path, e))
    }

    pub fn save_topic_model(&self, model: &TopicModel) -> Result<(), WorkspaceError> {
        self.write_json(Self::TOPIC_MODEL, &model.to_file())
    }

    fn model_name(name: &str) -> String {
        format!("{}/{name}.json", Self::MODELS)
    }

    pub fn model(&self, name: &str) -> Result<ClassifierModel, WorkspaceError> {
        let rel = Self::model_name(name);
        let path = self.path(&rel);
        let model: ClassifierModel = self
            .read_json(&rel)?
            .ok_or_else(|| WorkspaceError::Missing(format!("no trained model `{name}` (run `classify train`)")))?;
        model.check().map_err(|e| corrupt(&path, e))?;
        Ok(model)
    }

    pub fn save_model(&self, name: &str, model: &ClassifierModel) -> Result<(), WorkspaceError> {
        let dir = self.path(Self::MODELS);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        self.write_json(&Self::model_name(name), model)
    }

    pub fn predictions(&self) -> Result<Vec<Prediction>, WorkspaceError> {
        self.read_jsonl(Self::PREDICTIONS)
    }

    pub fn save_predictions(&self, rows: &[Prediction]) -> Result<(), WorkspaceError> {
        self.write_jsonl(Self::PREDICTIONS, rows)
    }

    /// Stored case records. Every row must validate.
    pub fn cases(&self) -> Result<Vec<CaseRecord>, WorkspaceError> {
        let path = self.path(Self::CASES);
        if !path.exists() {
            return Ok(Vec::new());
        }
        let file = fs::File::open(&path).map_err(io_err(&path))?;
        let report = ingest_cases(file, &self.gazetteer()?, &[]).map_err(|e| corrupt(&path, e))?;
        if let Some(r) = report.rejects.first() {
            return Err(corrupt(&path, format!("line {}: {}", r.line, r.reason)));
        }
        Ok(report.accepted)
    }

    pub fn save_cases(&self, records: &[CaseRecord]) -> Result<(), WorkspaceError> {
        let path = self.path(Self::CASES);
        jsonl::write_atomic(&path, |f| write_cases(f, records).map_err(io::Error::other)).map_err(io_err(&path))
    }

    /// Documents with a class, for the analytics stage. A human label wins
    /// over a prediction; the record's own region wins over the geotag.
    pub fn classified_docs(&self) -> Result<Vec<ClassifiedDoc>, WorkspaceError> {
        let corpus = self.corpus()?;
        let session = self.session()?;
        Ok(classified_docs(&corpus, &self.geotags()?, &session, &self.predictions()?))
    }
}

/// See [`Workspace::classified_docs`].
pub fn classified_docs(
    corpus: &CorpusStore,
    geotags: &[GeotagRow],
    session: &HitlSession,
    predictions: &[Prediction],
) -> Vec<ClassifiedDoc> {
    let tags: BTreeMap<&str, &RegionRef> =
        geotags.iter().filter_map(|g| g.region.as_ref().map(|r| (g.doc_id.as_str(), r))).collect();
    let predicted: BTreeMap<&str, Label> = predictions.iter().map(|p| (p.doc_id.as_str(), p.label)).collect();
    corpus
        .records()
        .filter_map(|r| {
            let label = session.labeled_doc(&r.id).map(|d| d.label).or_else(|| predicted.get(r.id.as_str()).copied())?;
            let region = r.region.clone().or_else(|| tags.get(r.id.as_str()).map(|g| (*g).clone()));
            Some(ClassifiedDoc { doc_id: r.id.clone(), published_on: r.published_on, region, label })
        })
        .collect()
}
