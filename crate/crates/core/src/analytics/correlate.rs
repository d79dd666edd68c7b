use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AnalyticsError, YearMonth};

/// Which news counts form the news series.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NewsKind {
    #[default]
    All,
    Disease,
    Intervention,
}

impl std::str::FromStr for NewsKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "all" => Ok(NewsKind::All),
            "disease" => Ok(NewsKind::Disease),
            "intervention" => Ok(NewsKind::Intervention),
            _ => Err(format!("unknown news kind `{s}` (expected all, disease or intervention)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    /// Pearson r, absent when either series has zero variance.
    pub r: Option<f64>,
    pub n: usize,
    pub lag: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub undefined_reason: Option<String>,
    /// Aligned points as (case period, news, cases).
    pub points: Vec<(YearMonth, f64, f64)>,
}

/// Pearson product-moment correlation. `None` when either series is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "series lengths differ");
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Correlates monthly news against monthly cases. With lag `L` the news of
/// month `m` is paired with the cases of month `m + L`. Months missing from
/// one series are dropped.
pub fn correlate(
    news: &BTreeMap<YearMonth, f64>,
    cases: &BTreeMap<YearMonth, f64>,
    lag: i32,
) -> Result<CorrelationResult, AnalyticsError> {
    let points: Vec<(YearMonth, f64, f64)> = news
        .iter()
        .filter_map(|(m, &n)| {
            let target = m.offset(lag);
            cases.get(&target).map(|&c| (target, n, c))
        })
        .collect();
    if points.len() < 3 {
        return Err(AnalyticsError::TooFewPoints(points.len()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.1).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.2).collect();
    let r = pearson(&xs, &ys);
    let undefined_reason = r.is_none().then(|| {
        let which = if xs.iter().all(|x| *x == xs[0]) { "news" } else { "case" };
        format!("{which} series has zero variance over the aligned periods")
    });
    Ok(CorrelationResult { r, n: points.len(), lag, undefined_reason, points })
}

/// News and case series of aggregate rows belonging to a single region.
/// Every row contributes to both series, zeros included.
pub fn monthly_series(
    rows: &[super::RegionAggregate],
    kind: NewsKind,
) -> (BTreeMap<YearMonth, f64>, BTreeMap<YearMonth, f64>) {
    let mut news = BTreeMap::new();
    let mut cases = BTreeMap::new();
    for r in rows {
        let n = match kind {
            NewsKind::All => r.news(),
            NewsKind::Disease => r.disease_news,
            NewsKind::Intervention => r.intervention_news,
        };
        *news.entry(r.period).or_insert(0.0) += n as f64;
        *cases.entry(r.period).or_insert(0.0) += r.official_cases as f64;
    }
    (news, cases)
}
