//! Report payloads shared by the command line and the HTTP API. Both front
//! ends call these functions on the same [`Snapshot`], which is what makes
//! their outputs identical.

use std::collections::{BTreeMap, BTreeSet};

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use crate::analytics::{
    aggregate, compare_city_corporations, correlate, gap_rank, monthly_series, resolve_cases, AggregateQuery,
    AggregateReport, CaseRecord, CityCorpComparison, CityCorpMapping, ClassifiedDoc, CorrelationResult, GapReport,
    Level, NewsKind, PeriodRange, RegionFilter, YearMonth,
};
use crate::corpus::{stats, CorpusStats, CorpusStore, Normalizer, Stopwords, TokenizedDoc};
use crate::hitl::{HitlProgress, HitlSession, LexiconRow, QueuedDoc};
use crate::workspace::{classified_docs, GeotagRow, Prediction, Workspace, WorkspaceConfig};
use crate::{Error, Result};

/// Everything the read endpoints need, loaded once.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub config: WorkspaceConfig,
    pub corpus: CorpusStore,
    pub tokens: BTreeMap<String, TokenizedDoc>,
    pub geotags: Vec<GeotagRow>,
    pub session: HitlSession,
    pub predictions: Vec<Prediction>,
    /// After source precedence has been applied.
    pub cases: Vec<CaseRecord>,
    pub citycorp: CityCorpMapping,
    pub classified: Vec<ClassifiedDoc>,
    normalizer: Normalizer,
    stopwords: Stopwords,
}

impl Snapshot {
    pub fn load(ws: &Workspace) -> Result<Snapshot> {
        let config = ws.config()?;
        let corpus = ws.corpus()?;
        let tokens = ws.tokens()?.into_iter().map(|d| (d.doc_id.clone(), d)).collect();
        let geotags = ws.geotags()?;
        let session = ws.session()?;
        let predictions = ws.predictions()?;
        let cases = resolve_cases(&ws.cases()?, &config.analytics.source_precedence);
        let citycorp = ws.citycorp()?;
        let classified = classified_docs(&corpus, &geotags, &session, &predictions);
        let normalizer = config.normalizer();
        let stopwords = ws.stopwords()?;
        Ok(Snapshot {
            config,
            corpus,
            tokens,
            geotags,
            session,
            predictions,
            cases,
            citycorp,
            classified,
            normalizer,
            stopwords,
        })
    }

    /// Replaces the session and recomputes what depends on it.
    pub fn with_session(mut self, session: HitlSession) -> Snapshot {
        self.classified = classified_docs(&self.corpus, &self.geotags, &session, &self.predictions);
        self.session = session;
        self
    }

    /// Stored tokens for a record, or a fresh normalization when the corpus
    /// has not been normalized yet.
    fn tokens_of(&self, id: &str) -> TokenizedDoc {
        match self.tokens.get(id) {
            Some(t) => t.clone(),
            None => {
                let r = self.corpus.get(id).expect("id taken from the corpus");
                self.normalizer.normalize(r, &self.stopwords)
            }
        }
    }
}

fn parse_period(s: Option<&str>) -> Result<Option<YearMonth>> {
    s.filter(|s| !s.is_empty()).map(|s| s.parse().map_err(Error::from)).transpose()
}

fn range(from: Option<&str>, to: Option<&str>) -> Result<PeriodRange> {
    Ok(PeriodRange::new(parse_period(from)?, parse_period(to)?)?)
}

/// Corpus statistics for one year, or for every year present when `year`
/// is absent.
pub fn stats_report(snap: &Snapshot, year: Option<i32>) -> Vec<CorpusStats> {
    let keywords = snap.session.lexicon().union();
    let years: BTreeSet<i32> = match year {
        Some(y) => BTreeSet::from([y]),
        None => snap.corpus.records().map(|r| r.published_on.year()).collect(),
    };
    let pairs: Vec<_> = snap.corpus.records().map(|r| (r, snap.tokens_of(&r.id))).collect();
    years.into_iter().map(|y| stats(pairs.iter().map(|(r, t)| (*r, t)), y, &keywords)).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregateParams {
    pub level: Option<String>,
    pub region: Option<String>,
    pub from: Option<String>,
    pub to: Option<String>,
    /// `period=YYYY-MM` is shorthand for `from = to = period`.
    pub period: Option<String>,
    pub limit: Option<usize>,
    pub offset: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregatePage {
    #[serde(flatten)]
    pub report: AggregateReport,
    pub total_rows: usize,
    pub offset: usize,
    pub limit: Option<usize>,
}

pub fn aggregate_report(snap: &Snapshot, p: &AggregateParams) -> Result<AggregatePage> {
    let level: Level = p.level.as_deref().unwrap_or("country").parse().map_err(Error::Invalid)?;
    let (from, to) = match p.period.as_deref() {
        Some(period) => (Some(period), Some(period)),
        None => (p.from.as_deref(), p.to.as_deref()),
    };
    let query = AggregateQuery { region: RegionFilter::parse(p.region.as_deref().unwrap_or(""))?, range: range(from, to)? };
    let mut report = aggregate(&snap.classified, &snap.cases, level, &query)?;
    let total_rows = report.rows.len();
    let offset = p.offset.unwrap_or(0);
    report.rows = report.rows.into_iter().skip(offset).take(p.limit.unwrap_or(usize::MAX)).collect();
    Ok(AggregatePage { report, total_rows, offset, limit: p.limit })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrelationParams {
    pub region: Option<String>,
    pub lag: Option<i32>,
    pub kind: Option<String>,
    pub from: Option<String>,
    pub to: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub region: String,
    pub kind: NewsKind,
    #[serde(flatten)]
    pub result: CorrelationResult,
}

/// Monthly news against monthly cases for one region (the whole country by
/// default). Ungeotagged news only counts toward the country series.
pub fn correlation_report(snap: &Snapshot, p: &CorrelationParams) -> Result<CorrelationReport> {
    let filter = RegionFilter::parse(p.region.as_deref().unwrap_or(""))?;
    let level = match &filter {
        None => Level::Country,
        Some(RegionFilter::Division(_)) => Level::Division,
        Some(RegionFilter::District(_)) => Level::District,
    };
    let kind: NewsKind = p.kind.as_deref().unwrap_or("all").parse().map_err(Error::Invalid)?;
    let region = match &filter {
        None => "Bangladesh".to_string(),
        Some(RegionFilter::Division(d)) => d.to_string(),
        Some(RegionFilter::District(d)) => d.clone(),
    };
    let query = AggregateQuery { region: filter, range: range(p.from.as_deref(), p.to.as_deref())? };
    let rows = aggregate(&snap.classified, &snap.cases, level, &query)?.rows;
    let (news, cases) = monthly_series(&rows, kind);
    let result = correlate(&news, &cases, p.lag.unwrap_or(0))?;
    Ok(CorrelationReport { region, kind, result })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GapParams {
    pub from: Option<String>,
    pub to: Option<String>,
    pub threshold: Option<f64>,
}

pub fn gap_report(snap: &Snapshot, p: &GapParams) -> Result<GapReport> {
    let r = range(p.from.as_deref(), p.to.as_deref())?;
    let query = AggregateQuery { region: None, range: r };
    let rows = aggregate(&snap.classified, &snap.cases, Level::District, &query)?.rows;
    Ok(gap_rank(&rows, r, p.threshold.unwrap_or(snap.config.analytics.gap_threshold))?)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CityCorpParams {
    pub from: Option<String>,
    pub to: Option<String>,
}

pub fn citycorp_report(snap: &Snapshot, p: &CityCorpParams) -> Result<CityCorpComparison> {
    let query = AggregateQuery {
        region: Some(RegionFilter::District("Dhaka".into())),
        range: range(p.from.as_deref(), p.to.as_deref())?,
    };
    let rows = aggregate(&snap.classified, &snap.cases, Level::Thana, &query)?.rows;
    Ok(compare_city_corporations(&rows, &snap.citycorp))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconReport {
    pub version: u32,
    pub current_version: u32,
    pub terminated: bool,
    pub disease: Vec<String>,
    pub intervention: Vec<String>,
    pub rows: Vec<LexiconRow>,
    /// Candidates awaiting review, per seed set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pending_candidates: Option<BTreeMap<crate::labels::CoiLink, Vec<String>>>,
}

/// The lexicon as of `version` (default: current).
pub fn lexicon_report(snap: &Snapshot, version: Option<u32>) -> Result<LexiconReport> {
    let current = snap.session.lexicon();
    if let Some(v) = version.filter(|v| *v > current.version()) {
        return Err(Error::Invalid(format!("lexicon version {v} does not exist (current is {})", current.version())));
    }
    let lex = current.snapshot(version.unwrap_or(current.version()));
    Ok(LexiconReport {
        version: lex.version(),
        current_version: current.version(),
        terminated: snap.session.is_terminated(),
        disease: lex.disease_keywords().into_iter().collect(),
        intervention: lex.intervention_keywords().into_iter().collect(),
        rows: lex.rows(),
        pending_candidates: snap.session.pending_candidates().cloned(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueItem {
    #[serde(flatten)]
    pub doc: QueuedDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    /// Lexicon tokens present in the document, for highlighting.
    pub hits: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueReport {
    pub progress: HitlProgress,
    pub total: usize,
    pub offset: usize,
    pub limit: Option<usize>,
    pub items: Vec<QueueItem>,
}

/// The annotation queue in review order.
pub fn queue_report(snap: &Snapshot, limit: Option<usize>, offset: Option<usize>) -> QueueReport {
    let offset = offset.unwrap_or(0);
    let lex = snap.session.lexicon();
    let pending = snap.session.pending_docs();
    let items = pending
        .iter()
        .skip(offset)
        .take(limit.unwrap_or(usize::MAX))
        .map(|q| {
            let record = snap.corpus.get(&q.doc_id);
            let hits = match record {
                Some(_) => snap.tokens_of(&q.doc_id).token_set().filter(|t| lex.contains(t)).map(str::to_string).collect(),
                None => Vec::new(),
            };
            QueueItem { doc: q.clone(), title: record.map(|r| r.title.clone()), hits }
        })
        .collect();
    QueueReport { progress: snap.session.progress(), total: pending.len(), offset, limit, items }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub documents: usize,
    pub labeled: usize,
    pub lexicon_version: u32,
}

pub fn health(snap: &Snapshot) -> Health {
    Health {
        status: "ok".into(),
        documents: snap.corpus.len(),
        labeled: snap.session.labeled().count(),
        lexicon_version: snap.session.iteration(),
    }
}
