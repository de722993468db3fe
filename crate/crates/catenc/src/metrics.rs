//! Evaluation metrics for imbalanced binary classification.
//!
//! `pr_auc` is average precision over the ranked scores: tied scores form a
//! single cut block, and each block contributes its recall increment times
//! the precision at the block's end. Threshold metrics classify
//! `score ≥ threshold` as positive and use the 0/0 → 0 convention.

use crate::error::{Error, Result};

/// The four reported metrics, in reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricName {
    PrAuc,
    Precision,
    Recall,
    F1,
}

impl MetricName {
    pub const ALL: [MetricName; 4] =
        [MetricName::PrAuc, MetricName::Precision, MetricName::Recall, MetricName::F1];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricName::PrAuc => "pr_auc",
            MetricName::Precision => "precision",
            MetricName::Recall => "recall",
            MetricName::F1 => "f1",
        }
    }
}

impl std::fmt::Display for MetricName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Confusion counts and derived metrics at one score threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdMetrics {
    pub threshold: f64,
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Full evaluation of one scored validation set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub pr_auc: f64,
    pub at_threshold: ThresholdMetrics,
}

impl MetricsReport {
    pub fn metric(&self, name: MetricName) -> f64 {
        match name {
            MetricName::PrAuc => self.pr_auc,
            MetricName::Precision => self.at_threshold.precision,
            MetricName::Recall => self.at_threshold.recall,
            MetricName::F1 => self.at_threshold.f1,
        }
    }
}

fn check_scored(scores: &[f64], labels: &[u8]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} scores against {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    for (row, &score) in scores.iter().enumerate() {
        if score.is_nan() {
            return Err(Error::UndefinedMetric(format!("score at row {row} is NaN")));
        }
    }
    if let Some(row) = labels.iter().position(|&t| t > 1) {
        return Err(Error::Parse {
            row: Some(row),
            message: format!("label must be 0 or 1, found {}", labels[row]),
        });
    }
    Ok(())
}

/// Area under the precision-recall curve, as average precision.
///
/// Requires at least one positive label; a set with none has no recall
/// axis and yields [`Error::UndefinedMetric`].
pub fn pr_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_scored(scores, labels)?;
    let total_pos = labels.iter().filter(|&&t| t == 1).count();
    if total_pos == 0 {
        return Err(Error::UndefinedMetric("no positive labels".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut auc = 0.0;
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0usize;
    while i < order.len() {
        // One block of tied scores = one cut of the curve.
        let mut j = i;
        let mut block_pos = 0usize;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            block_pos += usize::from(labels[order[j]] == 1);
            j += 1;
        }
        tp += block_pos;
        fp += (j - i) - block_pos;
        if block_pos > 0 {
            let precision = tp as f64 / (tp + fp) as f64;
            auc += (block_pos as f64 / total_pos as f64) * precision;
        }
        i = j;
    }
    Ok(auc)
}

/// Precision, recall and F1 with `score ≥ threshold` classified positive.
pub fn prf1(scores: &[f64], labels: &[u8], threshold: f64) -> Result<ThresholdMetrics> {
    check_scored(scores, labels)?;
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (&score, &label) in scores.iter().zip(labels) {
        match (score >= threshold, label == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let ratio = |num: usize, denom: usize| if denom == 0 { 0.0 } else { num as f64 / denom as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(ThresholdMetrics {
        threshold,
        true_pos: tp,
        false_pos: fp,
        true_neg: tn,
        false_neg: fn_,
        precision,
        recall,
        f1,
    })
}

/// [`pr_auc`] and [`prf1`] over the same scored set.
pub fn evaluate(scores: &[f64], labels: &[u8], threshold: f64) -> Result<MetricsReport> {
    Ok(MetricsReport {
        pr_auc: pr_auc(scores, labels)?,
        at_threshold: prf1(scores, labels, threshold)?,
    })
}

/// Relative change in percent: `100 · (candidate − baseline) / baseline`.
pub fn percent_delta(candidate: f64, baseline: f64) -> Result<f64> {
    if baseline == 0.0 || !baseline.is_finite() || !candidate.is_finite() {
        return Err(Error::UndefinedMetric(format!(
            "percent delta of {candidate} against baseline {baseline}"
        )));
    }
    Ok(100.0 * (candidate - baseline) / baseline)
}

/// Renders a percent delta as a signed whole percent, e.g. `+10%`, `-50%`,
/// `+0%`. Rounding is half away from zero.
pub fn format_percent(delta: f64) -> String {
    format!("{:+}%", delta.round() as i64)
}
