use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rank of a positive among negatives, ties split at the midpoint:
/// `1 + #{s > pos} + ⌊#{s = pos} / 2⌋`.
pub fn rank_positive(score_pos: f64, scores_neg: &[f64]) -> Result<usize> {
    if !score_pos.is_finite() {
        return Err(Error::Numeric(format!("positive score {score_pos}")));
    }
    let mut greater = 0;
    let mut equal = 0;
    for &s in scores_neg {
        if !s.is_finite() {
            return Err(Error::Numeric(format!("negative score {s}")));
        }
        if s > score_pos {
            greater += 1;
        } else if s == score_pos {
            equal += 1;
        }
    }
    Ok(1 + greater + equal / 2)
}

/// Ranks of many positives against one negative pool, via a sorted copy of
/// the pool; identical to calling [`rank_positive`] per positive.
pub fn rank_all(scores_pos: &[f64], scores_neg: &[f64]) -> Result<Vec<usize>> {
    if let Some(s) = scores_neg.iter().find(|s| !s.is_finite()) {
        return Err(Error::Numeric(format!("negative score {s}")));
    }
    let mut sorted = scores_neg.to_vec();
    sorted.sort_by(f64::total_cmp);
    scores_pos
        .iter()
        .map(|&p| {
            if !p.is_finite() {
                return Err(Error::Numeric(format!("positive score {p}")));
            }
            let below = sorted.partition_point(|&s| s < p);
            let not_above = sorted.partition_point(|&s| s <= p);
            let greater = sorted.len() - not_above;
            Ok(1 + greater + (not_above - below) / 2)
        })
        .collect()
}

pub fn mrr(ranks: &[usize]) -> Result<f64> {
    if ranks.is_empty() {
        return Err(Error::Config("MRR of an empty rank list".into()));
    }
    Ok(ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / ranks.len() as f64)
}

pub fn hr_at_k(ranks: &[usize], k: usize) -> Result<f64> {
    if ranks.is_empty() {
        return Err(Error::Config("HR@K of an empty rank list".into()));
    }
    if k == 0 {
        return Err(Error::Config("HR@K needs K >= 1".into()));
    }
    Ok(ranks.iter().filter(|&&r| r <= k).count() as f64 / ranks.len() as f64)
}

/// `mrr` or `hr@K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MetricSpec {
    Mrr,
    HitRate(usize),
}

impl MetricSpec {
    pub fn compute(self, ranks: &[usize]) -> Result<f64> {
        match self {
            MetricSpec::Mrr => mrr(ranks),
            MetricSpec::HitRate(k) => hr_at_k(ranks, k),
        }
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricSpec::Mrr => write!(f, "mrr"),
            MetricSpec::HitRate(k) => write!(f, "hr@{k}"),
        }
    }
}

impl FromStr for MetricSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "mrr" {
            return Ok(MetricSpec::Mrr);
        }
        let k = lower
            .strip_prefix("hr@")
            .or_else(|| lower.strip_prefix("hits@"))
            .and_then(|k| k.parse::<usize>().ok())
            .filter(|&k| k >= 1)
            .ok_or_else(|| Error::Config(format!("unknown metric `{s}` (expected mrr or hr@K)")))?;
        Ok(MetricSpec::HitRate(k))
    }
}

impl TryFrom<String> for MetricSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MetricSpec> for String {
    fn from(m: MetricSpec) -> String {
        m.to_string()
    }
}
