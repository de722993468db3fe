//! Split search over binned numeric and raw categorical features.
//!
//! Gain for cutting a node into L/R is
//! `G_L²/(H_L+λ₂) + G_R²/(H_R+λ₂) − G²/(H+λ₂)`; a split is kept only when
//! its gain is strictly positive. Numeric candidates are the bin
//! boundaries, with the missing-value direction chosen by gain.
//! Categorical candidates are the K−1 prefixes of the categories sorted by
//! `G_i/(H_i+λ₂)` (ties by code), the optimal grouping of a sorted
//! sequence under constant hessians.

use super::binning::{bin_feature, BinnedFeature, MISSING_BIN};
use super::{GbdtParams, GradHess};

/// How one branch routes rows.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitKind {
    /// Left iff `value < threshold`; missing values follow `default_left`.
    NumericThreshold { threshold: f64, default_left: bool },
    /// Left iff the code is in `left`, right iff in `right`; codes absent
    /// from both (unseen at training time) follow `default_left`. Both
    /// sides are nonempty and sorted ascending.
    CategorySet { left: Vec<u32>, right: Vec<u32>, default_left: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitRule {
    pub feature: usize,
    pub kind: SplitKind,
}

/// Best split of one node on one feature, before the cross-feature argmax.
#[derive(Debug, Clone)]
pub(crate) struct FoundSplit {
    pub gain: f64,
    pub feature: usize,
    pub kind: SplitKind,
}

fn gain_term(g: f64, h: f64, lambda: f64) -> f64 {
    let denom = h + lambda;
    if denom <= 0.0 {
        0.0
    } else {
        g * g / denom
    }
}

/// Newton-optimal leaf weight `−G/(H+λ₂)`.
pub(crate) fn leaf_value(g: f64, h: f64, lambda: f64) -> f64 {
    let denom = h + lambda;
    if denom <= 0.0 {
        0.0
    } else {
        -g / denom
    }
}

#[derive(Clone, Copy, Default)]
struct Acc {
    g: f64,
    h: f64,
    count: usize,
}

impl Acc {
    fn add(&mut self, g: f64, h: f64) {
        self.g += g;
        self.h += h;
        self.count += 1;
    }
}

/// Scans the bin boundaries of one binned feature at one node.
pub(crate) fn numeric_scan(
    feature: &BinnedFeature,
    gh: &GradHess,
    rows: &[u32],
    params: &GbdtParams,
) -> Option<FoundSplit> {
    let n_bins = feature.n_bins();
    if n_bins < 2 {
        return None;
    }
    let mut hist = vec![Acc::default(); n_bins];
    let mut missing = Acc::default();
    let mut total = Acc::default();
    for &r in rows {
        let r = r as usize;
        let (g, h) = (gh.g[r], gh.h[r]);
        total.add(g, h);
        match feature.bins[r] {
            MISSING_BIN => missing.add(g, h),
            bin => hist[bin as usize].add(g, h),
        }
    }

    let lambda = params.lambda_l2;
    let msl = params.min_samples_leaf;
    let parent = gain_term(total.g, total.h, lambda);
    let mut best_gain = 0.0;
    let mut best: Option<(usize, bool)> = None;
    let mut left = Acc::default();
    for (boundary, bin) in hist[..n_bins - 1].iter().enumerate() {
        left.g += bin.g;
        left.h += bin.h;
        left.count += bin.count;
        // Route missing right, then left; on equal gain the first wins.
        for default_left in [false, true] {
            let (lg, lh, lc) = if default_left {
                (left.g + missing.g, left.h + missing.h, left.count + missing.count)
            } else {
                (left.g, left.h, left.count)
            };
            let rc = total.count - lc;
            if lc < msl || rc < msl {
                continue;
            }
            let gain =
                gain_term(lg, lh, lambda) + gain_term(total.g - lg, total.h - lh, lambda) - parent;
            if gain > best_gain {
                best_gain = gain;
                best = Some((boundary, default_left));
            }
        }
    }
    best.map(|(boundary, default_left)| FoundSplit {
        gain: best_gain,
        feature: 0,
        kind: SplitKind::NumericThreshold { threshold: feature.cuts[boundary], default_left },
    })
}

/// Sorts the categories present at the node by `G_i/(H_i+λ₂)` and scans
/// prefix cuts of that order.
pub(crate) fn categorical_scan(
    codes: &[u32],
    n_categories: usize,
    gh: &GradHess,
    rows: &[u32],
    params: &GbdtParams,
) -> Option<FoundSplit> {
    let mut acc = vec![Acc::default(); n_categories];
    let mut total = Acc::default();
    for &r in rows {
        let r = r as usize;
        let (g, h) = (gh.g[r], gh.h[r]);
        total.add(g, h);
        acc[codes[r] as usize].add(g, h);
    }
    let lambda = params.lambda_l2;
    let mut present: Vec<u32> = (0..n_categories as u32)
        .filter(|&c| acc[c as usize].count > 0)
        .collect();
    if present.len() < 2 {
        return None;
    }
    present.sort_by(|&a, &b| {
        let ra = acc[a as usize].g / (acc[a as usize].h + lambda);
        let rb = acc[b as usize].g / (acc[b as usize].h + lambda);
        ra.total_cmp(&rb).then(a.cmp(&b))
    });

    let msl = params.min_samples_leaf;
    let parent = gain_term(total.g, total.h, lambda);
    let mut best_gain = 0.0;
    let mut best: Option<(usize, f64)> = None;
    let mut left = Acc::default();
    for cut in 1..present.len() {
        let a = acc[present[cut - 1] as usize];
        left.g += a.g;
        left.h += a.h;
        left.count += a.count;
        if left.count < msl || total.count - left.count < msl {
            continue;
        }
        let gain = gain_term(left.g, left.h, lambda)
            + gain_term(total.g - left.g, total.h - left.h, lambda)
            - parent;
        if gain > best_gain {
            best_gain = gain;
            best = Some((cut, left.h));
        }
    }
    best.map(|(cut, left_h)| {
        let mut left: Vec<u32> = present[..cut].to_vec();
        let mut right: Vec<u32> = present[cut..].to_vec();
        left.sort_unstable();
        right.sort_unstable();
        // Unseen codes follow the heavier (by hessian mass) side.
        let default_left = left_h > total.h - left_h;
        FoundSplit {
            gain: best_gain,
            feature: 0,
            kind: SplitKind::CategorySet { left, right, default_left },
        }
    })
}

/// Best split across all features, ties resolved to the lowest feature
/// index so parallel and serial searches agree.
pub(crate) fn best_split(
    prepared: &[super::PreparedFeature],
    gh: &GradHess,
    rows: &[u32],
    params: &GbdtParams,
) -> Option<FoundSplit> {
    let mut best: Option<FoundSplit> = None;
    for (index, feature) in prepared.iter().enumerate() {
        let found = match feature {
            super::PreparedFeature::Binned(b) => numeric_scan(b, gh, rows, params),
            super::PreparedFeature::Cats { codes, n_categories } => {
                categorical_scan(codes, *n_categories, gh, rows, params)
            }
        };
        if let Some(mut found) = found {
            found.feature = index;
            if best.as_ref().is_none_or(|b| found.gain > b.gain) {
                best = Some(found);
            }
        }
    }
    best
}

fn all_rows(n: usize) -> Vec<u32> {
    (0..n as u32).collect()
}

/// Standalone numeric split search over a whole column, feature index 0.
pub fn find_split_numeric(
    values: &[f64],
    gh: &GradHess,
    params: &GbdtParams,
) -> Option<(SplitRule, f64)> {
    if values.len() != gh.g.len() || gh.g.len() != gh.h.len() {
        return None;
    }
    let binned = bin_feature(values, params.max_bins);
    numeric_scan(&binned, gh, &all_rows(values.len()), params)
        .map(|f| (SplitRule { feature: 0, kind: f.kind }, f.gain))
}

/// Standalone builtin categorical split search over a whole column,
/// feature index 0.
pub fn find_split_categorical_builtin(
    codes: &[u32],
    n_categories: usize,
    gh: &GradHess,
    params: &GbdtParams,
) -> Option<(SplitRule, f64)> {
    if codes.len() != gh.g.len()
        || gh.g.len() != gh.h.len()
        || codes.iter().any(|&c| c as usize >= n_categories)
    {
        return None;
    }
    categorical_scan(codes, n_categories, gh, &all_rows(codes.len()), params)
        .map(|f| (SplitRule { feature: 0, kind: f.kind }, f.gain))
}
