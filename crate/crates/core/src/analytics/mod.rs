//! Monthly regional aggregation of classified news against official case
//! counts, correlation, gap ranking and the Dhaka city-corporation split.

mod cases;
mod citycorp;
mod correlate;
mod gaps;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::labels::Label;
use crate::region::{canonical_district, Division, RegionError, RegionRef};

pub use cases::{ingest_cases, resolve_cases, write_cases, CaseIngestReport, CaseReject, CaseRecord, CaseSource, SourcePrecedence};
pub use citycorp::{compare_city_corporations, CityCorpComparison, CityCorpMapping, CityCorpRow, CorpTotals, Corporation};
pub use correlate::{correlate, monthly_series, pearson, CorrelationResult, NewsKind};
pub use gaps::{gap_rank, GapReport, GapRow, DEFAULT_GAP_THRESHOLD};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalyticsError {
    #[error("thana-level aggregation is only available inside Dhaka and Chattogram divisions (requested {0})")]
    UnsupportedGranularity(String),
    #[error("unknown region `{0}`")]
    UnknownRegion(String),
    #[error("bad period `{0}` (expected YYYY-MM)")]
    BadPeriod(String),
    #[error("period range is empty: {from} is after {to}")]
    EmptyRange { from: YearMonth, to: YearMonth },
    #[error("correlation needs at least 3 aligned periods, got {0}")]
    TooFewPoints(usize),
    #[error("every district has zero counts in the selected period")]
    AllZeroPeriod,
    #[error("gap ranking needs at least 2 districts with data, got {0}")]
    TooFewDistricts(usize),
    #[error("case file: {0}")]
    CaseFile(String),
    #[error("city corporation mapping: {0}")]
    Mapping(String),
    #[error(transparent)]
    Region(#[from] RegionError),
}

/// A calendar month, written `YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self, AnalyticsError> {
        if !(1..=12).contains(&month) {
            return Err(AnalyticsError::BadPeriod(format!("{year}-{month}")));
        }
        Ok(YearMonth { year, month })
    }

    pub fn of(date: NaiveDate) -> Self {
        YearMonth { year: date.year(), month: date.month() }
    }

    /// Shifts by `months`, forwards or backwards.
    pub fn offset(self, months: i32) -> Self {
        let idx = self.year * 12 + self.month as i32 - 1 + months;
        YearMonth { year: idx.div_euclid(12), month: (idx.rem_euclid(12) + 1) as u32 }
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = AnalyticsError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AnalyticsError::BadPeriod(s.to_string());
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        YearMonth::new(y.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?).map_err(|_| bad())
    }
}

impl TryFrom<String> for YearMonth {
    type Error = AnalyticsError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<YearMonth> for String {
    fn from(ym: YearMonth) -> String {
        ym.to_string()
    }
}

/// Inclusive month range; either end may be open.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodRange {
    pub from: Option<YearMonth>,
    pub to: Option<YearMonth>,
}

impl PeriodRange {
    pub fn new(from: Option<YearMonth>, to: Option<YearMonth>) -> Result<Self, AnalyticsError> {
        if let (Some(f), Some(t)) = (from, to) {
            if f > t {
                return Err(AnalyticsError::EmptyRange { from: f, to: t });
            }
        }
        Ok(PeriodRange { from, to })
    }

    pub fn single(p: YearMonth) -> Self {
        PeriodRange { from: Some(p), to: Some(p) }
    }

    pub fn contains(&self, p: YearMonth) -> bool {
        self.from.is_none_or(|f| p >= f) && self.to.is_none_or(|t| p <= t)
    }
}

/// A classified and geotagged news document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifiedDoc {
    pub doc_id: String,
    pub published_on: NaiveDate,
    #[serde(default)]
    pub region: Option<RegionRef>,
    pub label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Country,
    Division,
    District,
    Thana,
}

impl FromStr for Level {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "country" => Ok(Level::Country),
            "division" => Ok(Level::Division),
            "district" => Ok(Level::District),
            "thana" => Ok(Level::Thana),
            _ => Err(format!("unknown level `{s}` (expected country, division, district or thana)")),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Country => "country",
            Level::Division => "division",
            Level::District => "district",
            Level::Thana => "thana",
        })
    }
}

/// Region key of an aggregate row. Coarser levels leave the finer fields empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RegionKey {
    pub level: Level,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub division: Option<Division>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub district: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thana: Option<String>,
}

impl RegionKey {
    pub fn country() -> Self {
        RegionKey { level: Level::Country, division: None, district: None, thana: None }
    }

    /// The key of `region` at `level`, or `None` when the region is too
    /// coarse (a district-only region has no thana key).
    pub fn at(region: &RegionRef, level: Level) -> Option<Self> {
        let mut key = RegionKey::country();
        key.level = level;
        if level >= Level::Division {
            key.division = Some(region.division);
        }
        if level >= Level::District {
            key.district = Some(region.district.clone());
        }
        if level == Level::Thana {
            key.thana = Some(region.thana.clone()?);
        }
        Some(key)
    }

    pub fn name(&self) -> String {
        match self.level {
            Level::Country => "Bangladesh".into(),
            Level::Division => self.division.map(|d| d.to_string()).unwrap_or_default(),
            Level::District => self.district.clone().unwrap_or_default(),
            Level::Thana => format!("{}/{}", self.district.as_deref().unwrap_or(""), self.thana.as_deref().unwrap_or("")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionAggregate {
    pub region: RegionKey,
    pub period: YearMonth,
    pub disease_news: u64,
    pub intervention_news: u64,
    pub official_cases: u64,
}

impl RegionAggregate {
    pub fn news(&self) -> u64 {
        self.disease_news + self.intervention_news
    }
}

/// Restricts an aggregation to one region subtree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionFilter {
    Division(Division),
    District(String),
}

impl RegionFilter {
    /// Parses a division or district name; `"Bangladesh"`/`"country"` means no filter.
    pub fn parse(s: &str) -> Result<Option<Self>, AnalyticsError> {
        let t = s.trim();
        if t.is_empty() || t.eq_ignore_ascii_case("country") || t.eq_ignore_ascii_case("bangladesh") {
            return Ok(None);
        }
        // A few names are both division and district; the division wins.
        if let Ok(d) = t.parse::<Division>() {
            return Ok(Some(RegionFilter::Division(d)));
        }
        canonical_district(t)
            .map(|d| Some(RegionFilter::District(d.to_string())))
            .ok_or_else(|| AnalyticsError::UnknownRegion(s.to_string()))
    }

    fn division(&self) -> Division {
        match self {
            RegionFilter::Division(d) => *d,
            RegionFilter::District(d) => crate::region::division_of(d).expect("canonical district"),
        }
    }

    fn matches(&self, region: &RegionRef) -> bool {
        match self {
            RegionFilter::Division(d) => region.division == *d,
            RegionFilter::District(d) => region.district == *d,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregateQuery {
    pub region: Option<RegionFilter>,
    pub range: PeriodRange,
}

/// Unattributed news per month: counted at country level only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unattributed {
    pub period: YearMonth,
    pub disease_news: u64,
    pub intervention_news: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub level: Level,
    pub rows: Vec<RegionAggregate>,
    /// Documents in range without a region at the requested level. At country
    /// level these are already inside `rows`; elsewhere they are excluded.
    pub unattributed: Vec<Unattributed>,
    pub unattributed_total: u64,
}

/// Counts classified news and official cases per region and month.
///
/// Rows exist only for (region, month) pairs with at least one news item or
/// case, ordered by region then month. Country totals include every
/// document; documents without a region at a finer level are reported under
/// `unattributed` instead of being imputed.
pub fn aggregate(
    docs: &[ClassifiedDoc],
    cases: &[CaseRecord],
    level: Level,
    query: &AggregateQuery,
) -> Result<AggregateReport, AnalyticsError> {
    if level == Level::Thana {
        if let Some(f) = &query.region {
            if !f.division().has_thanas() {
                return Err(AnalyticsError::UnsupportedGranularity(match f {
                    RegionFilter::Division(d) => d.to_string(),
                    RegionFilter::District(d) => d.clone(),
                }));
            }
        }
    }
    let keep_region = |r: &RegionRef| {
        query.region.as_ref().is_none_or(|f| f.matches(r)) && (level != Level::Thana || r.division.has_thanas())
    };

    let mut cells: BTreeMap<(RegionKey, YearMonth), [u64; 3]> = BTreeMap::new();
    let mut unattributed: BTreeMap<YearMonth, [u64; 2]> = BTreeMap::new();
    for doc in docs {
        let period = YearMonth::of(doc.published_on);
        if !query.range.contains(period) {
            continue;
        }
        let key = match &doc.region {
            None => None,
            Some(r) if !keep_region(r) => continue,
            Some(r) => RegionKey::at(r, level),
        };
        let key = if level == Level::Country && query.region.is_none() { Some(RegionKey::country()) } else { key };
        if doc.region.is_none() || key.is_none() {
            unattributed.entry(period).or_default()[doc.label.index()] += 1;
        }
        if let Some(k) = key {
            cells.entry((k, period)).or_default()[doc.label.index()] += 1;
        }
    }
    for case in cases {
        let period = YearMonth::of(case.date);
        if !query.range.contains(period) || !keep_region(&case.region) {
            continue;
        }
        let key = if level == Level::Country { Some(RegionKey::country()) } else { RegionKey::at(&case.region, level) };
        if let Some(k) = key {
            cells.entry((k, period)).or_default()[2] += case.cases;
        }
    }

    let rows = cells
        .into_iter()
        .map(|((region, period), [d, i, c])| RegionAggregate {
            region,
            period,
            disease_news: d,
            intervention_news: i,
            official_cases: c,
        })
        .collect();
    let unattributed: Vec<Unattributed> = unattributed
        .into_iter()
        .map(|(period, [d, i])| Unattributed { period, disease_news: d, intervention_news: i })
        .collect();
    let unattributed_total = unattributed.iter().map(|u| u.disease_news + u.intervention_news).sum();
    Ok(AggregateReport { level, rows, unattributed, unattributed_total })
}
