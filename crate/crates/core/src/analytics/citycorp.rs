use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{AnalyticsError, Level, RegionAggregate, YearMonth};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Corporation {
    #[serde(rename = "DNCC")]
    Dncc,
    #[serde(rename = "DSCC")]
    Dscc,
}

impl Corporation {
    pub const ALL: [Corporation; 2] = [Corporation::Dncc, Corporation::Dscc];
}

impl fmt::Display for Corporation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Corporation::Dncc => "DNCC",
            Corporation::Dscc => "DSCC",
        })
    }
}

/// Dhaka thana to city corporation, with a content hash as its version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CityCorpMapping {
    pub version: String,
    pub thanas: BTreeMap<String, Corporation>,
}

#[derive(Deserialize)]
struct MappingRow {
    thana: String,
    corporation: String,
}

impl CityCorpMapping {
    pub fn new(thanas: BTreeMap<String, Corporation>) -> Self {
        let mut h = Sha256::new();
        for (t, c) in &thanas {
            h.update(format!("{t},{c}\n").as_bytes());
        }
        let version = hex::encode(&h.finalize()[..8]);
        CityCorpMapping { version, thanas }
    }

    /// Reads `thana,corporation` rows. A thana listed under both
    /// corporations is an error.
    pub fn from_reader(reader: impl Read) -> Result<Self, AnalyticsError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut thanas = BTreeMap::new();
        for (i, row) in rdr.deserialize::<MappingRow>().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| AnalyticsError::Mapping(format!("line {line}: {e}")))?;
            let corp = match row.corporation.to_ascii_uppercase().as_str() {
                "DNCC" => Corporation::Dncc,
                "DSCC" => Corporation::Dscc,
                other => return Err(AnalyticsError::Mapping(format!("line {line}: unknown corporation `{other}`"))),
            };
            if let Some(prev) = thanas.insert(row.thana.clone(), corp) {
                if prev != corp {
                    return Err(AnalyticsError::Mapping(format!("line {line}: {} mapped to both {prev} and {corp}", row.thana)));
                }
            }
        }
        Ok(CityCorpMapping::new(thanas))
    }

    pub fn corporation_of(&self, thana: &str) -> Option<Corporation> {
        self.thanas.get(thana).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityCorpRow {
    pub corporation: Corporation,
    pub period: YearMonth,
    pub disease_news: u64,
    pub intervention_news: u64,
    pub official_cases: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpTotals {
    pub disease_news: u64,
    pub intervention_news: u64,
    pub official_cases: u64,
    /// Disease news per intervention news item; absent without intervention news.
    pub disease_intervention_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityCorpComparison {
    pub mapping_version: String,
    pub rows: Vec<CityCorpRow>,
    pub totals: BTreeMap<Corporation, CorpTotals>,
    /// Dhaka-district thanas that appear in the data but not in the mapping.
    pub unmapped: Vec<String>,
}

/// Sums Dhaka-district thana aggregates per corporation and month. Both
/// corporations always appear in `totals`.
pub fn compare_city_corporations(rows: &[RegionAggregate], mapping: &CityCorpMapping) -> CityCorpComparison {
    let mut cells: BTreeMap<(Corporation, YearMonth), [u64; 3]> = BTreeMap::new();
    let mut unmapped = BTreeSet::new();
    for r in rows {
        if r.region.level != Level::Thana || r.region.district.as_deref() != Some("Dhaka") {
            continue;
        }
        let Some(thana) = r.region.thana.as_deref() else { continue };
        let Some(corp) = mapping.corporation_of(thana) else {
            unmapped.insert(thana.to_string());
            continue;
        };
        let c = cells.entry((corp, r.period)).or_default();
        c[0] += r.disease_news;
        c[1] += r.intervention_news;
        c[2] += r.official_cases;
    }
    let mut totals: BTreeMap<Corporation, CorpTotals> = Corporation::ALL.iter().map(|&c| (c, CorpTotals::default())).collect();
    let rows = cells
        .into_iter()
        .map(|((corporation, period), [d, i, c])| {
            let t = totals.get_mut(&corporation).expect("both corporations present");
            t.disease_news += d;
            t.intervention_news += i;
            t.official_cases += c;
            CityCorpRow { corporation, period, disease_news: d, intervention_news: i, official_cases: c }
        })
        .collect();
    for t in totals.values_mut() {
        t.disease_intervention_ratio = (t.intervention_news > 0).then(|| t.disease_news as f64 / t.intervention_news as f64);
    }
    CityCorpComparison { mapping_version: mapping.version.clone(), rows, totals, unmapped: unmapped.into_iter().collect() }
}
