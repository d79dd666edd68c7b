use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::corpus::Gazetteer;
use crate::region::{Division, RegionRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseSource {
    #[serde(rename = "IEDCR")]
    Iedcr,
    #[serde(rename = "a2i")]
    A2i,
    #[serde(rename = "fixture")]
    Fixture,
}

impl CaseSource {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseSource::Iedcr => "IEDCR",
            CaseSource::A2i => "a2i",
            CaseSource::Fixture => "fixture",
        }
    }
}

impl fmt::Display for CaseSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseSource {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "iedcr" => Ok(CaseSource::Iedcr),
            "a2i" => Ok(CaseSource::A2i),
            "fixture" => Ok(CaseSource::Fixture),
            other => Err(format!("unknown case source `{other}`")),
        }
    }
}

/// Official daily case count for one region from one source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub date: NaiveDate,
    pub region: RegionRef,
    pub cases: u64,
    pub source: CaseSource,
}

/// Which source wins when several report the same (date, region).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourcePrecedence(pub Vec<CaseSource>);

impl Default for SourcePrecedence {
    fn default() -> Self {
        SourcePrecedence(vec![CaseSource::Iedcr, CaseSource::A2i, CaseSource::Fixture])
    }
}

impl SourcePrecedence {
    fn rank(&self, s: CaseSource) -> usize {
        self.0.iter().position(|x| *x == s).unwrap_or(self.0.len())
    }
}

/// Keeps one record per (date, region): the one whose source ranks first.
pub fn resolve_cases(records: &[CaseRecord], precedence: &SourcePrecedence) -> Vec<CaseRecord> {
    let mut best: BTreeMap<(NaiveDate, &RegionRef), &CaseRecord> = BTreeMap::new();
    for r in records {
        best.entry((r.date, &r.region))
            .and_modify(|cur| {
                if precedence.rank(r.source) < precedence.rank(cur.source) {
                    *cur = r;
                }
            })
            .or_insert(r);
    }
    best.into_values().cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseReject {
    /// 1-based file line, counting the header as line 1.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseIngestReport {
    pub accepted: Vec<CaseRecord>,
    pub rejects: Vec<CaseReject>,
}

#[derive(Debug, Deserialize)]
struct CaseRow {
    date: String,
    #[serde(default)]
    division: String,
    district: String,
    #[serde(default)]
    thana: Option<String>,
    cases: String,
    #[serde(default)]
    source: Option<String>,
}

/// Reads a case CSV with columns `date, division, district, cases, source`
/// (plus an optional `thana`). Bad rows are reported with their line number;
/// a row repeating an earlier (date, region, source) is rejected.
pub fn ingest_cases(
    reader: impl Read,
    gazetteer: &Gazetteer,
    existing: &[CaseRecord],
) -> Result<CaseIngestReport, super::AnalyticsError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| super::AnalyticsError::CaseFile(e.to_string()))?.clone();
    for col in ["date", "district", "cases"] {
        if !headers.iter().any(|h| h == col) {
            return Err(super::AnalyticsError::CaseFile(format!("missing column `{col}`")));
        }
    }
    let mut seen: BTreeSet<(NaiveDate, RegionRef, CaseSource)> =
        existing.iter().map(|r| (r.date, r.region.clone(), r.source)).collect();
    let mut report = CaseIngestReport::default();
    for (i, row) in rdr.deserialize::<CaseRow>().enumerate() {
        let line = i + 2;
        match row.map_err(|e| e.to_string()).and_then(|r| parse_row(r, gazetteer)) {
            Ok(rec) => {
                if seen.insert((rec.date, rec.region.clone(), rec.source)) {
                    report.accepted.push(rec);
                } else {
                    report.rejects.push(CaseReject {
                        line,
                        reason: format!("duplicate record for {} {} from {}", rec.date, rec.region, rec.source),
                    });
                }
            }
            Err(reason) => report.rejects.push(CaseReject { line, reason }),
        }
    }
    Ok(report)
}

fn parse_row(row: CaseRow, gazetteer: &Gazetteer) -> Result<CaseRecord, String> {
    let date = NaiveDate::parse_from_str(&row.date, "%Y-%m-%d").map_err(|e| format!("bad date `{}`: {e}", row.date))?;
    let cases: i64 = row.cases.parse().map_err(|_| format!("bad case count `{}`", row.cases))?;
    if cases < 0 {
        return Err(format!("negative case count {cases}"));
    }
    let mut region = match row.thana.as_deref().filter(|t| !t.is_empty()) {
        Some(t) => RegionRef::thana(&row.district, t),
        None => RegionRef::district(&row.district),
    }
    .map_err(|e| e.to_string())?;
    if !row.division.is_empty() {
        let claimed: Division = row.division.parse().map_err(|e: crate::region::ParseDivisionError| e.to_string())?;
        if claimed != region.division {
            return Err(format!("district {} is not in division {claimed}", region.district));
        }
    }
    gazetteer.validate(&region).map_err(|e| e.to_string())?;
    if let Some(t) = &region.thana {
        // adopt the gazetteer's spelling
        let canonical = gazetteer.thanas_of(&region.district).find(|g| g.eq_ignore_ascii_case(t)).map(str::to_string);
        region.thana = canonical;
    }
    let source = match row.source.as_deref().filter(|s| !s.is_empty()) {
        Some(s) => s.parse()?,
        None => CaseSource::Fixture,
    };
    Ok(CaseRecord { date, region, cases: cases as u64, source })
}

/// Writes records in the same CSV layout [`ingest_cases`] reads.
pub fn write_cases(writer: impl std::io::Write, records: &[CaseRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "division", "district", "thana", "cases", "source"])?;
    for r in records {
        let date = r.date.to_string();
        let cases = r.cases.to_string();
        w.write_record([
            date.as_str(),
            r.region.division.as_str(),
            &r.region.district,
            r.region.thana.as_deref().unwrap_or(""),
            &cases,
            r.source.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
