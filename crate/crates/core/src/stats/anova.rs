use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{check_finite, kahan_sum, sum_sq_dev, StatsError};

/// Named groups of values, ordered by group name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedSample {
    groups: BTreeMap<String, Vec<f64>>,
}

impl GroupedSample {
    pub fn new<I, S>(groups: I) -> Result<Self, StatsError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut out = BTreeMap::new();
        for (name, values) in groups {
            let name = name.into();
            if values.is_empty() {
                return Err(StatsError::EmptyGroup(name));
            }
            check_finite(&values)?;
            if out.contains_key(&name) {
                return Err(StatsError::DuplicateGroup(name));
            }
            out.insert(name, values);
        }
        Ok(Self { groups: out })
    }

    pub fn groups(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.groups.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn total_count(&self) -> usize {
        self.groups.values().map(Vec::len).sum()
    }

    fn pooled_sorted(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.groups.values().flatten().copied().collect();
        all.sort_by(f64::total_cmp);
        all
    }
}

/// Partition of the total sum of squares into within- and between-group parts.
///
/// These are sums of squares, not mean squares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceDecomposition {
    pub within_ss: f64,
    pub between_ss: f64,
    pub total_ss: f64,
    /// `1 - between/within` as a fraction; `None` when `within_ss` is zero.
    pub pct_reduction: Option<f64>,
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn variance_decomposition(sample: &GroupedSample) -> Result<VarianceDecomposition, StatsError> {
    if sample.len() < 2 {
        return Err(StatsError::TooFewGroups {
            required: 2,
            actual: sample.len(),
        });
    }
    let pooled = sample.pooled_sorted();
    let grand_mean = kahan_sum(pooled.iter().copied()) / pooled.len() as f64;

    let mut within = Vec::with_capacity(sample.len());
    let mut between = Vec::with_capacity(sample.len());
    for (_, values) in sample.groups() {
        let v = sorted(values);
        let m = kahan_sum(v.iter().copied()) / v.len() as f64;
        within.push(sum_sq_dev(&v, m));
        between.push(v.len() as f64 * (m - grand_mean) * (m - grand_mean));
    }
    let within_ss = kahan_sum(within);
    let between_ss = kahan_sum(between);
    Ok(VarianceDecomposition {
        within_ss,
        between_ss,
        total_ss: sum_sq_dev(&pooled, grand_mean),
        pct_reduction: (within_ss > 0.0).then(|| 1.0 - between_ss / within_ss),
    })
}
