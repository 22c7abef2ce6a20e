//! Correctness-partitioned aggregation, percentile-bootstrap tests for the
//! coverage differential and its support/contradict asymmetry, and
//! confusion matrices.
//!
//! Resample `b` draws from its own ChaCha stream (`seed`, stream `b`), so a
//! result depends only on the data, the seed and the resample count, never on
//! how many threads computed it.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coverage::CoverageRecord;
use crate::exec::Execution;
use crate::matching::Matcher;

pub const MIN_RESAMPLES: usize = 1000;
pub const DEFAULT_RESAMPLES: usize = 10_000;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("at least {MIN_RESAMPLES} resamples required, got {0}")]
    TooFewResamples(usize),
    #[error("label {0:?} is not in the label order")]
    UnknownLabel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Match,
    Mismatch,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Match => "match",
            Condition::Mismatch => "mismatch",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    SupportCov,
    ContradictCov,
}

impl Field {
    pub fn get(self, r: &CoverageRecord) -> Option<f64> {
        match self {
            Field::SupportCov => r.support_cov,
            Field::ContradictCov => r.contradict_cov,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    DeltaSupport,
    DeltaContradict,
    /// `DeltaSupport - DeltaContradict` on the same resampled instances.
    Asymmetry,
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Statistic::DeltaSupport => "delta_support",
            Statistic::DeltaContradict => "delta_contradict",
            Statistic::Asymmetry => "asymmetry",
        })
    }
}

/// Mean coverage of one (condition, matcher) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub dataset: String,
    pub condition: Condition,
    pub matcher: Matcher,
    pub mean_support_cov: Option<f64>,
    pub mean_contradict_cov: Option<f64>,
    pub n: usize,
    pub n_absent_support: usize,
    pub n_absent_contradict: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub statistic: Statistic,
    pub matcher: Matcher,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_resamples: usize,
    /// Resamples in which some group had no usable values; left out of the
    /// percentiles.
    pub n_degenerate: usize,
    pub seed: u64,
    /// The 95% interval excludes zero.
    pub significant: bool,
    /// Fraction of usable resamples with a positive statistic. Reported in
    /// place of a p-value.
    pub side_proportion: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupMean {
    pub mean: Option<f64>,
    pub n_used: usize,
    pub n_absent: usize,
}

/// Splits records by the `correct` flag, preserving order.
pub fn partition(records: &[CoverageRecord]) -> (Vec<&CoverageRecord>, Vec<&CoverageRecord>) {
    records.iter().partition(|r| r.correct)
}

/// Mean over present values; absent values are counted, not averaged.
pub fn group_mean<'a>(
    group: impl IntoIterator<Item = &'a CoverageRecord>,
    field: Field,
) -> GroupMean {
    let (mut sum, mut n_used, mut n_absent) = (0.0, 0usize, 0usize);
    for r in group {
        match field.get(r) {
            Some(v) => {
                sum += v;
                n_used += 1;
            }
            None => n_absent += 1,
        }
    }
    GroupMean {
        mean: (n_used > 0).then(|| sum / n_used as f64),
        n_used,
        n_absent,
    }
}

/// One summary per (condition, matcher), matchers in their natural order.
pub fn summarize(
    dataset: &str,
    records: &[CoverageRecord],
    matchers: &[Matcher],
) -> Vec<GroupSummary> {
    let mut matchers = matchers.to_vec();
    matchers.sort();
    matchers.dedup();
    let mut out = Vec::new();
    for condition in [Condition::Match, Condition::Mismatch] {
        for &m in &matchers {
            let group: Vec<&CoverageRecord> = records
                .iter()
                .filter(|r| r.matcher == m && r.correct == (condition == Condition::Match))
                .collect();
            let s = group_mean(group.iter().copied(), Field::SupportCov);
            let c = group_mean(group.iter().copied(), Field::ContradictCov);
            out.push(GroupSummary {
                dataset: dataset.to_string(),
                condition,
                matcher: m,
                mean_support_cov: s.mean,
                mean_contradict_cov: c.mean,
                n: group.len(),
                n_absent_support: s.n_absent,
                n_absent_contradict: c.n_absent,
            });
        }
    }
    out
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Linear-interpolated percentile of sorted data, `q` in [0, 100].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let rank = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64)
    }
}

fn resample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn finish(
    statistic: Statistic,
    matcher: Matcher,
    estimate: f64,
    draws: Vec<Option<f64>>,
    n_resamples: usize,
    seed: u64,
) -> Result<BootstrapResult, StatsError> {
    let mut values: Vec<f64> = draws.into_iter().flatten().collect();
    let n_degenerate = n_resamples - values.len();
    if values.is_empty() {
        return Err(StatsError::InsufficientData(
            "every resample was degenerate".into(),
        ));
    }
    values.sort_by(f64::total_cmp);
    let ci_low = percentile(&values, 2.5);
    let ci_high = percentile(&values, 97.5);
    let positive = values.iter().filter(|v| **v > 0.0).count();
    Ok(BootstrapResult {
        statistic,
        matcher,
        estimate,
        ci_low,
        ci_high,
        n_resamples,
        n_degenerate,
        seed,
        significant: ci_low > 0.0 || ci_high < 0.0,
        side_proportion: positive as f64 / values.len() as f64,
    })
}

/// Percentile bootstrap for `mean(matched) - mean(mismatched)` over plain
/// values. Each group is resampled with replacement at its own size.
pub fn bootstrap_delta_values(
    matched: &[f64],
    mismatched: &[f64],
    statistic: Statistic,
    matcher: Matcher,
    n_resamples: usize,
    seed: u64,
    exec: Execution,
) -> Result<BootstrapResult, StatsError> {
    if n_resamples < MIN_RESAMPLES {
        return Err(StatsError::TooFewResamples(n_resamples));
    }
    if matched.is_empty() || mismatched.is_empty() {
        return Err(StatsError::InsufficientData(format!(
            "match group has {} usable values, mismatch group {}",
            matched.len(),
            mismatched.len()
        )));
    }
    let estimate = mean(matched) - mean(mismatched);
    let draws = exec.map_range(n_resamples, |b| {
        let mut rng = resample_rng(seed, b);
        let m: f64 = (0..matched.len())
            .map(|_| matched[rng.gen_range(0..matched.len())])
            .sum::<f64>()
            / matched.len() as f64;
        let mm: f64 = (0..mismatched.len())
            .map(|_| mismatched[rng.gen_range(0..mismatched.len())])
            .sum::<f64>()
            / mismatched.len() as f64;
        Some(m - mm)
    });
    finish(statistic, matcher, estimate, draws, n_resamples, seed)
}

fn present(group: &[&CoverageRecord], field: Field) -> Vec<f64> {
    group.iter().filter_map(|r| field.get(r)).collect()
}

fn matcher_of(a: &[&CoverageRecord], b: &[&CoverageRecord]) -> Matcher {
    a.iter()
        .chain(b)
        .next()
        .map_or(Matcher::Token, |r| r.matcher)
}

/// Δ for one field: absent values are excluded before resampling.
pub fn bootstrap_delta(
    matched: &[&CoverageRecord],
    mismatched: &[&CoverageRecord],
    field: Field,
    n_resamples: usize,
    seed: u64,
    exec: Execution,
) -> Result<BootstrapResult, StatsError> {
    let statistic = match field {
        Field::SupportCov => Statistic::DeltaSupport,
        Field::ContradictCov => Statistic::DeltaContradict,
    };
    bootstrap_delta_values(
        &present(matched, field),
        &present(mismatched, field),
        statistic,
        matcher_of(matched, mismatched),
        n_resamples,
        seed,
        exec,
    )
}

fn mean_present<'a>(
    records: impl Iterator<Item = &'a CoverageRecord>,
    field: Field,
) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in records.filter_map(|r| field.get(r)) {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

fn asymmetry(matched: &[&CoverageRecord], mismatched: &[&CoverageRecord]) -> Option<f64> {
    let ds = mean_present(matched.iter().copied(), Field::SupportCov)?
        - mean_present(mismatched.iter().copied(), Field::SupportCov)?;
    let dc = mean_present(matched.iter().copied(), Field::ContradictCov)?
        - mean_present(mismatched.iter().copied(), Field::ContradictCov)?;
    Some(ds - dc)
}

/// Δ* = Δ_support − Δ_contradict. Whole instances are resampled, so each
/// resample uses the same draws for both fields.
pub fn bootstrap_asymmetry(
    matched: &[&CoverageRecord],
    mismatched: &[&CoverageRecord],
    n_resamples: usize,
    seed: u64,
    exec: Execution,
) -> Result<BootstrapResult, StatsError> {
    if n_resamples < MIN_RESAMPLES {
        return Err(StatsError::TooFewResamples(n_resamples));
    }
    for field in [Field::SupportCov, Field::ContradictCov] {
        let (a, b) = (
            present(matched, field).len(),
            present(mismatched, field).len(),
        );
        if a == 0 || b == 0 {
            return Err(StatsError::InsufficientData(format!(
                "asymmetry: {field:?} has {a} match and {b} mismatch values"
            )));
        }
    }
    let matcher = matcher_of(matched, mismatched);
    let estimate = asymmetry(matched, mismatched).expect("both groups checked non-empty");
    let draws = exec.map_range(n_resamples, |b| {
        let mut rng = resample_rng(seed, b);
        let m: Vec<&CoverageRecord> = (0..matched.len())
            .map(|_| matched[rng.gen_range(0..matched.len())])
            .collect();
        let mm: Vec<&CoverageRecord> = (0..mismatched.len())
            .map(|_| mismatched[rng.gen_range(0..mismatched.len())])
            .collect();
        asymmetry(&m, &mm)
    });
    finish(
        Statistic::Asymmetry,
        matcher,
        estimate,
        draws,
        n_resamples,
        seed,
    )
}

/// Δ_support, Δ_contradict and Δ* for every matcher present in `records`.
/// Statistics without enough data are skipped and reported in the second
/// return value.
pub fn bootstrap_all(
    records: &[CoverageRecord],
    matchers: &[Matcher],
    n_resamples: usize,
    seed: u64,
    exec: Execution,
) -> Result<(Vec<BootstrapResult>, Vec<String>), StatsError> {
    if n_resamples < MIN_RESAMPLES {
        return Err(StatsError::TooFewResamples(n_resamples));
    }
    let mut matchers = matchers.to_vec();
    matchers.sort();
    matchers.dedup();
    let mut results = Vec::new();
    let mut skipped = Vec::new();
    for m in matchers {
        let of_matcher: Vec<CoverageRecord> =
            records.iter().filter(|r| r.matcher == m).cloned().collect();
        let (matched, mismatched) = partition(&of_matcher);
        let attempts = [
            bootstrap_delta(
                &matched,
                &mismatched,
                Field::SupportCov,
                n_resamples,
                seed,
                exec,
            ),
            bootstrap_delta(
                &matched,
                &mismatched,
                Field::ContradictCov,
                n_resamples,
                seed,
                exec,
            ),
            bootstrap_asymmetry(&matched, &mismatched, n_resamples, seed, exec),
        ];
        for (stat, r) in [
            Statistic::DeltaSupport,
            Statistic::DeltaContradict,
            Statistic::Asymmetry,
        ]
        .into_iter()
        .zip(attempts)
        {
            match r {
                Ok(mut r) => {
                    r.matcher = m;
                    results.push(r);
                }
                Err(StatsError::InsufficientData(why)) => {
                    skipped.push(format!("{m}/{stat}: {why}"))
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok((results, skipped))
}

/// Gold (rows) x predicted (columns) counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> Option<f64> {
        let t = self.total();
        (t > 0).then(|| self.trace() as f64 / t as f64)
    }

    pub fn max_count(&self) -> u64 {
        self.counts.iter().flatten().copied().max().unwrap_or(0)
    }
}

/// Counts (gold, predicted) pairs. Parse failures must be filtered out
/// beforehand.
pub fn confusion<'a>(
    pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    labels: &[String],
) -> Result<ConfusionMatrix, StatsError> {
    let idx = |l: &str| {
        labels
            .iter()
            .position(|x| x == l)
            .ok_or_else(|| StatsError::UnknownLabel(l.to_string()))
    };
    let mut counts = vec![vec![0u64; labels.len()]; labels.len()];
    for (gold, pred) in pairs {
        counts[idx(gold)?][idx(pred)?] += 1;
    }
    Ok(ConfusionMatrix {
        labels: labels.to_vec(),
        counts,
    })
}
