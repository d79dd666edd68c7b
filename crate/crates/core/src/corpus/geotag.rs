use std::collections::{HashMap, HashSet};
use std::io::Read;

use serde::Deserialize;

use super::{NewsRecord, Normalizer};
use crate::region::{canonical_district, Division, RegionError, RegionRef};

#[derive(Debug, thiserror::Error)]
pub enum GazetteerError {
    #[error("gazetteer row {line}: {message}")]
    Row { line: usize, message: String },
    #[error("gazetteer row {line}: {source}")]
    Region { line: usize, source: RegionError },
    #[error("gazetteer row {line}: thana `{thana}` listed twice for district `{district}`")]
    DuplicateThana { line: usize, district: String, thana: String },
}

#[derive(Debug, Deserialize)]
struct GazetteerRow {
    division: String,
    district: String,
    #[serde(default)]
    thana: String,
    #[serde(default)]
    aliases: String,
}

/// One place: a district (no thana) or a thana within a district.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GazetteerEntry {
    pub region: RegionRef,
    /// Each alias as a normalized token sequence.
    pub aliases: Vec<Vec<String>>,
}

impl GazetteerEntry {
    pub fn is_thana(&self) -> bool {
        self.region.thana.is_some()
    }
}

/// Place-name table used for geotagging, in file order.
#[derive(Debug, Clone)]
pub struct Gazetteer {
    entries: Vec<GazetteerEntry>,
    normalizer: Normalizer,
    by_first_token: HashMap<String, Vec<(usize, usize)>>,
}

impl Gazetteer {
    /// Reads a CSV with columns `division,district,thana,aliases`. Aliases are
    /// semicolon separated; a row without aliases matches on its own name.
    pub fn from_reader(reader: impl Read, normalizer: Normalizer) -> Result<Self, GazetteerError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut entries: Vec<GazetteerEntry> = Vec::new();
        let mut thanas = HashSet::new();
        for (i, row) in rdr.deserialize::<GazetteerRow>().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| GazetteerError::Row { line, message: e.to_string() })?;
            let division: Division = row
                .division
                .parse()
                .map_err(|e: crate::region::ParseDivisionError| GazetteerError::Row { line, message: e.to_string() })?;
            let district = canonical_district(&row.district)
                .ok_or_else(|| GazetteerError::Region { line, source: RegionError::UnknownDistrict(row.district.clone()) })?;
            let region = RegionRef {
                division,
                district: district.to_string(),
                thana: (!row.thana.is_empty()).then(|| row.thana.clone()),
            };
            region.validate_shape().map_err(|source| GazetteerError::Region { line, source })?;
            if let Some(t) = &region.thana {
                if !thanas.insert((district, t.to_lowercase())) {
                    return Err(GazetteerError::DuplicateThana {
                        line,
                        district: district.to_string(),
                        thana: t.clone(),
                    });
                }
            }
            let name = region.thana.clone().unwrap_or_else(|| district.to_string());
            let mut aliases: Vec<Vec<String>> = Vec::new();
            for alias in row.aliases.split(';').chain(std::iter::once(name.as_str())) {
                let toks = normalizer.tokenize(alias);
                if !toks.is_empty() && !aliases.contains(&toks) {
                    aliases.push(toks);
                }
            }
            entries.push(GazetteerEntry { region, aliases });
        }
        let mut by_first_token: HashMap<String, Vec<(usize, usize)>> = HashMap::new();
        for (ei, e) in entries.iter().enumerate() {
            for (ai, alias) in e.aliases.iter().enumerate() {
                by_first_token.entry(alias[0].clone()).or_default().push((ei, ai));
            }
        }
        Ok(Gazetteer { entries, normalizer, by_first_token })
    }

    /// The bundled gazetteer.
    pub fn standard() -> Self {
        Self::from_reader(crate::defaults::GAZETTEER.as_bytes(), Normalizer::default()).expect("bundled gazetteer parses")
    }

    pub fn entries(&self) -> &[GazetteerEntry] {
        &self.entries
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    pub fn thanas_of<'a>(&'a self, district: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.entries
            .iter()
            .filter(move |e| e.region.district == district)
            .filter_map(|e| e.region.thana.as_deref())
    }

    /// Checks thana membership in addition to the division/district shape.
    pub fn validate(&self, region: &RegionRef) -> Result<(), RegionError> {
        region.validate_shape()?;
        if let Some(thana) = &region.thana {
            if !self.thanas_of(&region.district).any(|t| t.eq_ignore_ascii_case(thana)) {
                return Err(RegionError::UnknownThana {
                    district: region.district.clone(),
                    thana: thana.clone(),
                });
            }
        }
        Ok(())
    }

    /// Mentions per entry in a token stream. Each start position counts once
    /// per entry even when several of its aliases match there.
    fn mention_counts(&self, tokens: &[String]) -> Vec<usize> {
        let mut counts = vec![0usize; self.entries.len()];
        let mut seen = Vec::new();
        for i in 0..tokens.len() {
            let Some(cands) = self.by_first_token.get(&tokens[i]) else {
                continue;
            };
            seen.clear();
            for &(ei, ai) in cands {
                let alias = &self.entries[ei].aliases[ai];
                if tokens[i..].starts_with(alias) && !seen.contains(&ei) {
                    seen.push(ei);
                    counts[ei] += 1;
                }
            }
        }
        counts
    }

    fn pick(&self, counts: &[usize]) -> Option<RegionRef> {
        // Highest count, earliest row on ties.
        let best = |filter: &dyn Fn(&GazetteerEntry) -> bool| {
            counts
                .iter()
                .enumerate()
                .filter(|(i, c)| **c > 0 && filter(&self.entries[*i]))
                .max_by(|(ia, ca), (ib, cb)| ca.cmp(cb).then(ib.cmp(ia)))
                .map(|(i, _)| i)
        };
        let winner = best(&|_| true)?;
        let entry = &self.entries[winner];
        if entry.is_thana() {
            return Some(entry.region.clone());
        }
        let district = entry.region.district.clone();
        let refined = best(&|e| e.is_thana() && e.region.district == district);
        Some(self.entries[refined.unwrap_or(winner)].region.clone())
    }
}

/// Most specific region named by the record. The title is searched first and
/// the body only when the title names no place; within a scope the most
/// mentioned entry wins, ties going to the earlier gazetteer row. A winning
/// district is refined to its most mentioned thana in the same scope.
pub fn geotag(record: &NewsRecord, gazetteer: &Gazetteer) -> Option<RegionRef> {
    [&record.title, &record.body].into_iter().find_map(|text| {
        let tokens = gazetteer.normalizer.tokenize(text);
        gazetteer.pick(&gazetteer.mention_counts(&tokens))
    })
}
