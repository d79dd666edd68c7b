use std::collections::BTreeSet;

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use super::{NewsRecord, TokenizedDoc};

/// Per-year crawl volume versus dengue-related volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub year: i32,
    pub total_crawled: u64,
    pub dengue_related: u64,
    /// `dengue_related / total_crawled`, unrounded; absent when nothing was crawled.
    pub percentage: Option<f64>,
    /// Percent with two decimals, rounded half-up; `"n/a"` for an empty year.
    pub rendered: String,
}

impl CorpusStats {
    pub fn from_counts(year: i32, total_crawled: u64, dengue_related: u64) -> Self {
        let percentage = (total_crawled > 0).then(|| dengue_related as f64 / total_crawled as f64);
        CorpusStats {
            year,
            total_crawled,
            dengue_related,
            percentage,
            rendered: render_percent(dengue_related, total_crawled),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.total_crawled == 0
    }
}

/// Renders `num / den` as a percentage with two decimals, rounding half-up.
/// Works in exact integer arithmetic so boundary cases never drift.
pub fn render_percent(num: u64, den: u64) -> String {
    if den == 0 {
        return "n/a".to_string();
    }
    // hundredths of a percent = num * 10_000 / den, rounded half-up
    let scaled = (num as u128 * 10_000 * 2 + den as u128) / (den as u128 * 2);
    format!("{}.{:02}%", scaled / 100, scaled % 100)
}

/// A record is dengue related when its token set meets the lexicon union.
pub fn dengue_related(doc: &TokenizedDoc, keywords: &BTreeSet<String>) -> bool {
    doc.token_set().any(|t| keywords.contains(t))
}

/// Statistics over the records published in `year`. A year with no records
/// yields an empty result rather than a division by zero.
pub fn stats<'a>(
    docs: impl IntoIterator<Item = (&'a NewsRecord, &'a TokenizedDoc)>,
    year: i32,
    keywords: &BTreeSet<String>,
) -> CorpusStats {
    let (mut total, mut related) = (0u64, 0u64);
    for (record, doc) in docs {
        if record.published_on.year() != year {
            continue;
        }
        total += 1;
        if dengue_related(doc, keywords) {
            related += 1;
        }
    }
    CorpusStats::from_counts(year, total, related)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crawl_volume_rows() {
        assert_eq!(render_percent(2262, 1_114_701), "0.20%");
        assert_eq!(render_percent(35_796, 1_754_361), "2.04%");
        assert_eq!(render_percent(0, 100), "0.00%");
    }

    #[test]
    fn half_up_at_boundary() {
        assert_eq!(render_percent(1, 800), "0.13%"); // 0.125% exactly
        assert_eq!(render_percent(1, 3), "33.33%");
        assert_eq!(render_percent(2, 3), "66.67%");
        assert_eq!(render_percent(5, 5), "100.00%");
    }

    #[test]
    fn empty_year() {
        let s = CorpusStats::from_counts(2016, 0, 0);
        assert!(s.is_empty());
        assert_eq!(s.percentage, None);
        assert_eq!(s.rendered, "n/a");
    }
}
