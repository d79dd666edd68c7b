use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AnalyticsError, Level, PeriodRange, RegionAggregate};
use crate::region::Division;

/// One percentage point.
pub const DEFAULT_GAP_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub division: Division,
    pub district: String,
    pub cases: u64,
    pub disease_news: u64,
    pub intervention_news: u64,
    pub case_share: f64,
    pub disease_share: f64,
    pub intervention_share: f64,
    /// `case_share - intervention_share`.
    pub gap_score: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub range: PeriodRange,
    pub threshold: f64,
    /// Districts by gap score, largest first; equal scores in name order.
    pub rows: Vec<GapRow>,
}

impl GapReport {
    pub fn flagged(&self) -> impl Iterator<Item = &GapRow> {
        self.rows.iter().filter(|r| r.flagged)
    }
}

/// Ranks districts by how far their share of official cases exceeds their
/// share of intervention news. Input rows must be district-level; they are
/// summed over all months inside `range`. A share column whose total is zero
/// is reported as all zeros.
pub fn gap_rank(rows: &[RegionAggregate], range: PeriodRange, threshold: f64) -> Result<GapReport, AnalyticsError> {
    let mut totals: BTreeMap<(String, Division), [u64; 3]> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.region.level == Level::District && range.contains(r.period)) {
        let (Some(district), Some(division)) = (&r.region.district, r.region.division) else {
            continue;
        };
        let t = totals.entry((district.clone(), division)).or_default();
        t[0] += r.official_cases;
        t[1] += r.disease_news;
        t[2] += r.intervention_news;
    }
    totals.retain(|_, t| t.iter().any(|&x| x > 0));
    if totals.is_empty() {
        return Err(AnalyticsError::AllZeroPeriod);
    }
    if totals.len() < 2 {
        return Err(AnalyticsError::TooFewDistricts(totals.len()));
    }
    let sums: [u64; 3] = totals.values().fold([0; 3], |acc, t| [acc[0] + t[0], acc[1] + t[1], acc[2] + t[2]]);
    let share = |x: u64, col: usize| if sums[col] == 0 { 0.0 } else { x as f64 / sums[col] as f64 };

    let mut out: Vec<GapRow> = totals
        .into_iter()
        .map(|((district, division), [c, d, i])| {
            let case_share = share(c, 0);
            let intervention_share = share(i, 2);
            let gap_score = case_share - intervention_share;
            GapRow {
                division,
                district,
                cases: c,
                disease_news: d,
                intervention_news: i,
                case_share,
                disease_share: share(d, 1),
                intervention_share,
                gap_score,
                flagged: gap_score > threshold,
            }
        })
        .collect();
    out.sort_by(|a, b| b.gap_score.total_cmp(&a.gap_score).then_with(|| a.district.cmp(&b.district)));
    Ok(GapReport { range, threshold, rows: out })
}
