//! Reference data shipped with the crate.

use std::collections::BTreeMap;

use crate::labels::CoiLink;
use crate::topics::SeedSet;

/// Chain-of-infection seed words, 35 in total across the six links.
pub const SEEDS_JSON: &str = include_str!("../fixtures/seeds.json");
/// All 64 districts plus the Dhaka and Chattogram city thanas.
pub const GAZETTEER: &str = include_str!("../fixtures/gazetteer.csv");
pub const STOPWORDS: &str = include_str!("../fixtures/stopwords_bn.txt");
/// Dhaka thana to city corporation (DNCC/DSCC).
pub const CITY_CORPORATIONS: &str = include_str!("../fixtures/citycorp.csv");

/// Parses a seed file: a JSON object from link name to word list.
pub fn parse_seeds(json: &str) -> Result<Vec<SeedSet>, serde_json::Error> {
    let raw: BTreeMap<CoiLink, Vec<String>> = serde_json::from_str(json)?;
    Ok(CoiLink::ALL
        .into_iter()
        .map(|link| SeedSet {
            set_id: link,
            words: raw.get(&link).cloned().unwrap_or_default(),
        })
        .collect())
}

pub fn seed_sets() -> Vec<SeedSet> {
    parse_seeds(SEEDS_JSON).expect("bundled seed file parses")
}
