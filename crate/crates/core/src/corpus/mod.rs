//! News records: ingestion, text normalization, geotagging and corpus statistics.

mod geotag;
mod normalize;
mod stats;

use std::fmt;
use std::io::{self, BufRead, Write};

use chrono::NaiveDate;
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

pub use geotag::{geotag, Gazetteer, GazetteerEntry, GazetteerError};
pub use normalize::{Normalizer, ScriptRange, Stopwords, TokenizedDoc, TokenizerConfig};
pub use stats::{dengue_related, render_percent, stats, CorpusStats};

use crate::region::RegionRef;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read corpus file: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Gazetteer(#[from] GazetteerError),
}

/// One crawled article.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewsRecord {
    pub id: String,
    pub url: String,
    pub source_domain: String,
    pub published_on: NaiveDate,
    pub title: String,
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionRef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub from: NaiveDate,
    pub to: NaiveDate,
}

impl DateRange {
    pub fn contains(&self, d: NaiveDate) -> bool {
        self.from <= d && d <= self.to
    }
}

impl Default for DateRange {
    /// January 2017 through July 2020, the span of the crawl archive.
    fn default() -> Self {
        DateRange {
            from: NaiveDate::from_ymd_opt(2017, 1, 1).unwrap(),
            to: NaiveDate::from_ymd_opt(2020, 7, 31).unwrap(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum RejectReason {
    Malformed(String),
    DuplicateId(String),
    DateOutOfRange(NaiveDate),
    EmptyTitle,
    InvalidRegion(String),
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::Malformed(e) => write!(f, "malformed record: {e}"),
            RejectReason::DuplicateId(id) => write!(f, "duplicate id `{id}`"),
            RejectReason::DateOutOfRange(d) => write!(f, "published_on {d} outside accepted range"),
            RejectReason::EmptyTitle => f.write_str("empty title"),
            RejectReason::InvalidRegion(e) => write!(f, "invalid region: {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub line: usize,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub accepted: usize,
    pub rejects: Vec<Reject>,
}

/// In-memory corpus keyed by record id, in ingestion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusStore {
    records: IndexMap<String, NewsRecord>,
}

impl CorpusStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&NewsRecord> {
        self.records.get(id)
    }

    pub fn records(&self) -> impl Iterator<Item = &NewsRecord> {
        self.records.values()
    }

    /// Validates and inserts one record.
    pub fn insert(
        &mut self,
        record: NewsRecord,
        range: &DateRange,
        gazetteer: Option<&Gazetteer>,
    ) -> Result<(), RejectReason> {
        if self.records.contains_key(&record.id) {
            return Err(RejectReason::DuplicateId(record.id));
        }
        if record.title.trim().is_empty() {
            return Err(RejectReason::EmptyTitle);
        }
        if !range.contains(record.published_on) {
            return Err(RejectReason::DateOutOfRange(record.published_on));
        }
        let mut record = record;
        if let Some(region) = record.region.take() {
            let region = region.canonicalized();
            region
                .validate_shape()
                .map_err(|e| RejectReason::InvalidRegion(e.to_string()))?;
            if let Some(g) = gazetteer {
                g.validate(&region)
                    .map_err(|e| RejectReason::InvalidRegion(e.to_string()))?;
            }
            record.region = Some(region);
        }
        self.records.insert(record.id.clone(), record);
        Ok(())
    }

    /// Ingests a line-delimited stream. Bad lines are collected as rejects
    /// with their line number; only I/O failure aborts.
    pub fn ingest_reader(
        &mut self,
        reader: impl BufRead,
        range: &DateRange,
        gazetteer: Option<&Gazetteer>,
    ) -> Result<IngestReport, CorpusError> {
        let mut report = IngestReport::default();
        for (line, parsed) in crate::jsonl::read_lines::<NewsRecord>(reader)? {
            let outcome = parsed
                .map_err(|e| RejectReason::Malformed(e.to_string()))
                .and_then(|record| self.insert(record, range, gazetteer));
            match outcome {
                Ok(()) => report.accepted += 1,
                Err(reason) => report.rejects.push(Reject { line, reason }),
            }
        }
        Ok(report)
    }

    /// Writes the store in the same line-delimited format `ingest_reader` reads.
    pub fn export(&self, writer: impl Write) -> io::Result<()> {
        let records: Vec<&NewsRecord> = self.records.values().collect();
        crate::jsonl::write_to(writer, &records)
    }
}
