//! Metric-versus-human validation statistics over pairwise comparisons.
//!
//! For every diagnostic a lower value is better, so a metric prefers the side
//! with the smaller value.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("statistic undefined: {0}")]
    Undefined(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("pair {0:?} has no votes")]
    NoVotes(String),
    #[error("pair {0:?} has a non-finite metric value")]
    NonFinite(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// One A/B comparison: metric values for both sides and annotator votes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonPair {
    pub pair_id: String,
    pub metric: String,
    #[serde(rename = "m_A")]
    pub m_a: f64,
    #[serde(rename = "m_B")]
    pub m_b: f64,
    #[serde(rename = "votes_A")]
    pub votes_a: u32,
    #[serde(rename = "votes_B")]
    pub votes_b: u32,
}

impl ComparisonPair {
    pub fn validate(&self) -> Result<(), StatsError> {
        if self.votes_a + self.votes_b == 0 {
            return Err(StatsError::NoVotes(self.pair_id.clone()));
        }
        if !self.m_a.is_finite() || !self.m_b.is_finite() {
            return Err(StatsError::NonFinite(self.pair_id.clone()));
        }
        Ok(())
    }
}

/// Agreement with tie bookkeeping. Pairs with equal metric values or equal
/// votes are excluded from the ratio and counted separately.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Agreement {
    pub agreement: f64,
    pub agreed: usize,
    pub counted: usize,
    pub metric_ties: usize,
    pub vote_ties: usize,
}

/// Fraction of decided pairs where the lower-metric side wins the human
/// majority.
pub fn agreement(pairs: &[ComparisonPair]) -> Result<Agreement, StatsError> {
    let (mut agreed, mut counted, mut metric_ties, mut vote_ties) = (0, 0, 0, 0);
    for p in pairs {
        p.validate()?;
        if p.votes_a == p.votes_b {
            vote_ties += 1;
            continue;
        }
        if p.m_a == p.m_b {
            metric_ties += 1;
            continue;
        }
        counted += 1;
        if (p.m_a < p.m_b) == (p.votes_a > p.votes_b) {
            agreed += 1;
        }
    }
    if counted == 0 {
        return Err(StatsError::Undefined("no pair with a strict metric and vote preference".into()));
    }
    Ok(Agreement {
        agreement: agreed as f64 / counted as f64,
        agreed,
        counted,
        metric_ties,
        vote_ties,
    })
}

/// `(|m(A) - m(B)|, |#A / (#A + #B) - 0.5|)`.
pub fn margins(p: &ComparisonPair) -> Result<(f64, f64), StatsError> {
    p.validate()?;
    let total = (p.votes_a + p.votes_b) as f64;
    Ok(((p.m_a - p.m_b).abs(), (p.votes_a as f64 / total - 0.5).abs()))
}

/// 1-based ranks; tied values share the average of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rho: Pearson correlation of the average ranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::Undefined(format!("{} observations, at least 2 required", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::Undefined("non-finite observation".into()));
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (da, db) = (a - mean, b - mean);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::Undefined("zero rank variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Reads a pair file with columns `pair_id, metric, m_A, m_B, votes_A, votes_B`.
pub fn read_pairs_csv(reader: impl Read) -> Result<Vec<ComparisonPair>, StatsError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut pairs = Vec::new();
    for rec in rdr.deserialize() {
        let p: ComparisonPair = rec?;
        p.validate()?;
        pairs.push(p);
    }
    Ok(pairs)
}

/// Keeps, per metric, the pairs whose metric gap `|m(A) - m(B)|` is in the
/// top `fraction` (rounded up, at least one pair). Order within a metric
/// follows the input; ties at the cut favor earlier pairs.
pub fn top_gap_filter(pairs: &[ComparisonPair], fraction: f64) -> Vec<ComparisonPair> {
    let mut by_metric: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, p) in pairs.iter().enumerate() {
        by_metric.entry(&p.metric).or_default().push(i);
    }
    let mut keep = vec![false; pairs.len()];
    for idx in by_metric.values() {
        let k = ((idx.len() as f64 * fraction.clamp(0.0, 1.0)).ceil() as usize).clamp(1, idx.len());
        let mut sorted = idx.clone();
        let gap = |i: usize| (pairs[i].m_a - pairs[i].m_b).abs();
        sorted.sort_by(|&a, &b| gap(b).total_cmp(&gap(a)).then(a.cmp(&b)));
        for &i in &sorted[..k] {
            keep[i] = true;
        }
    }
    pairs
        .iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then(|| p.clone()))
        .collect()
}

/// Per-metric validation summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricValidation {
    pub metric: String,
    pub pairs: usize,
    pub agreement: Option<Agreement>,
    /// Spearman correlation between metric and vote margins.
    pub spearman_rho: Option<f64>,
}

/// Agreement and margin correlation for every metric in the pair list.
/// Statistics that are undefined for a metric are reported as `None`.
pub fn validate_pairs(pairs: &[ComparisonPair]) -> Result<Vec<MetricValidation>, StatsError> {
    let mut by_metric: BTreeMap<&str, Vec<ComparisonPair>> = BTreeMap::new();
    for p in pairs {
        p.validate()?;
        by_metric.entry(&p.metric).or_default().push(p.clone());
    }
    let mut out = Vec::with_capacity(by_metric.len());
    for (metric, group) in by_metric {
        let (dm, dh): (Vec<f64>, Vec<f64>) = group.iter().map(|p| margins(p).expect("validated")).unzip();
        out.push(MetricValidation {
            metric: metric.to_string(),
            pairs: group.len(),
            agreement: agreement(&group).ok(),
            spearman_rho: spearman_rho(&dm, &dh).ok(),
        });
    }
    Ok(out)
}
