use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pair identifier as it appears in match-statistics files (number or string).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PairId {
    Number(u64),
    Text(String),
}

impl fmt::Display for PairId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairId::Number(n) => write!(f, "{n}"),
            PairId::Text(s) => f.write_str(s),
        }
    }
}

/// Counts for one image pair: `p` putative correspondences, `f` inliers,
/// and the covisible keypoint counts of each image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchStats {
    pub pair_id: PairId,
    pub p: u64,
    pub f: u64,
    pub n_left: u64,
    pub n_right: u64,
}

impl MatchStats {
    fn validate(&self) -> Result<()> {
        let bad = |detail: &str| Error::InvalidEntry {
            pair_id: self.pair_id.to_string(),
            detail: detail.to_string(),
        };
        if self.p == 0 {
            return Err(bad("p (putative correspondences) is zero"));
        }
        if self.n_left == 0 || self.n_right == 0 {
            return Err(bad("covisible keypoint count is zero"));
        }
        if self.f > self.p {
            return Err(bad("more inliers than putative correspondences"));
        }
        Ok(())
    }
}

/// Putative matching ratio, matching score and precision, as fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchingMetrics {
    pub pmr: f64,
    pub ms: f64,
    pub precision: f64,
    pub pairs: usize,
}

/// Sums after sorting so the result is independent of input order.
fn ordered_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

pub fn matching_metrics(stats: &[MatchStats]) -> Result<MatchingMetrics> {
    if stats.is_empty() {
        return Err(Error::invalid("no image pairs to aggregate"));
    }
    for s in stats {
        s.validate()?;
    }
    let ratio = |num: u64, den: u64| num as f64 / den as f64;
    let pmr_terms = stats
        .iter()
        .map(|s| ratio(s.p, s.n_left) + ratio(s.p, s.n_right))
        .collect();
    let ms_terms = stats
        .iter()
        .map(|s| ratio(s.f, s.n_left) + ratio(s.f, s.n_right))
        .collect();
    let p_terms = stats.iter().map(|s| ratio(s.f, s.p)).collect();
    let n = stats.len() as f64;
    Ok(MatchingMetrics {
        pmr: ordered_sum(pmr_terms) / (2.0 * n),
        ms: ordered_sum(ms_terms) / (2.0 * n),
        precision: ordered_sum(p_terms) / n,
        pairs: stats.len(),
    })
}
