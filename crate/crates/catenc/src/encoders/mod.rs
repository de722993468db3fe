//! Supervised categorical encoders.
//!
//! Five target-statistics kinds replace category `i` with a blend
//! `S_i = λ_i · p_i + (1 − λ_i) · p_prior` of the category's training
//! positive rate `p_i` and the global prior, differing only in how the
//! reliability weight `λ_i` is chosen; the sixth is a weight-of-evidence
//! log-odds score. Fitting reads training rows only. Transform maps by
//! label, so a held-out column with its own dictionary is encoded
//! consistently, and labels unseen at fit time receive a fallback value.

mod store;

pub use store::{load_encoder, save_encoder};

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Per-category positive/total counts over a training column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub n: u64,
    pub n_pos: u64,
}

/// Counts per category plus the training-set totals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryStats {
    counts: Vec<Tally>,
    n_train: u64,
    n_pos: u64,
}

impl CategoryStats {
    /// Tallies a coded column against binary labels in one pass.
    pub fn compute(codes: &[u32], n_categories: usize, target: &[u8]) -> Result<Self> {
        if codes.len() != target.len() {
            return Err(Error::Shape(format!(
                "column has {} rows, target has {}",
                codes.len(),
                target.len()
            )));
        }
        if codes.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut counts = vec![Tally::default(); n_categories];
        for (row, (&code, &t)) in codes.iter().zip(target).enumerate() {
            if code as usize >= n_categories {
                return Err(Error::Shape(format!(
                    "code {code} out of range for {n_categories} categories"
                )));
            }
            if t > 1 {
                return Err(Error::Parse {
                    row: Some(row),
                    message: format!("target must be 0 or 1, found {t}"),
                });
            }
            let tally = &mut counts[code as usize];
            tally.n += 1;
            tally.n_pos += u64::from(t);
        }
        Ok(CategoryStats {
            counts,
            n_train: codes.len() as u64,
            n_pos: target.iter().map(|&t| u64::from(t)).sum(),
        })
    }

    pub fn n_categories(&self) -> usize {
        self.counts.len()
    }

    pub fn n_train(&self) -> u64 {
        self.n_train
    }

    pub fn n_pos(&self) -> u64 {
        self.n_pos
    }

    pub fn n_neg(&self) -> u64 {
        self.n_train - self.n_pos
    }

    pub fn tally(&self, code: u32) -> Tally {
        self.counts[code as usize]
    }

    /// Global positive rate of the training set.
    pub fn prior(&self) -> f64 {
        self.n_pos as f64 / self.n_train as f64
    }

    /// Categories with at least one training row, in code order.
    pub fn present(&self) -> impl Iterator<Item = (u32, Tally)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, t)| t.n > 0)
            .map(|(c, &t)| (c as u32, t))
    }
}

/// Positive rate of one tally.
fn rate(t: Tally) -> f64 {
    t.n_pos as f64 / t.n as f64
}

/// `λ·rate + (1−λ)·prior`, clamped so float rounding can never push the
/// result outside the closed interval the real-valued blend lives in.
fn blend(lambda: f64, rate: f64, prior: f64) -> f64 {
    let value = lambda * rate + (1.0 - lambda) * prior;
    value.clamp(rate.min(prior), rate.max(prior))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderKind {
    Target,
    MEstimate,
    CatboostOrdered,
    Pozzolo,
    JamesStein,
    Woe,
}

impl EncoderKind {
    pub const ALL: [EncoderKind; 6] = [
        EncoderKind::Target,
        EncoderKind::MEstimate,
        EncoderKind::CatboostOrdered,
        EncoderKind::Pozzolo,
        EncoderKind::JamesStein,
        EncoderKind::Woe,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EncoderKind::Target => "target",
            EncoderKind::MEstimate => "m_estimate",
            EncoderKind::CatboostOrdered => "catboost_ordered",
            EncoderKind::Pozzolo => "pozzolo",
            EncoderKind::JamesStein => "james_stein",
            EncoderKind::Woe => "woe",
        }
    }
}

impl std::fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EncoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EncoderKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown encoder kind {s:?}; expected one of target, m_estimate, \
                     catboost_ordered, pozzolo, james_stein, woe"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PozzoloVariant {
    /// Min-max scaled relative frequency.
    Lambda1,
    /// Log-scaled relative frequency, clamped to [0, 1].
    Lambda2,
}

impl PozzoloVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            PozzoloVariant::Lambda1 => "lambda1",
            PozzoloVariant::Lambda2 => "lambda2",
        }
    }
}

impl std::str::FromStr for PozzoloVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lambda1" => Ok(PozzoloVariant::Lambda1),
            "lambda2" => Ok(PozzoloVariant::Lambda2),
            other => Err(Error::Config(format!(
                "unknown pozzolo variant {other:?}; expected lambda1 or lambda2"
            ))),
        }
    }
}

/// Hyperparameters for any encoder kind, with per-kind defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    /// `target`: count at which λ reaches 1/2.
    pub k: f64,
    /// `target`: sigmoid steepness; must be > 0.
    pub f: f64,
    /// `m_estimate` and `catboost_ordered`: prior weight in
    /// pseudo-observations; must be ≥ 0.
    pub m: f64,
    /// `pozzolo`: which frequency scaling to use for λ.
    pub variant: PozzoloVariant,
    /// `woe`: count added to both class cells; must be ≥ 0.
    pub gamma: f64,
    /// `pozzolo` lambda2: guard added inside both logarithms; must be > 0.
    pub epsilon: f64,
    /// `catboost_ordered`: seed for the row permutation.
    pub permutation_seed: u64,
}

impl EncoderConfig {
    pub fn new(kind: EncoderKind) -> Self {
        EncoderConfig {
            kind,
            k: 1.0,
            f: 1.0,
            m: 1.0,
            variant: PozzoloVariant::Lambda1,
            gamma: 0.5,
            epsilon: 1e-9,
            permutation_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.k.is_finite() {
            return Err(Error::Config(format!("k must be finite, got {}", self.k)));
        }
        if !(self.f.is_finite() && self.f > 0.0) {
            return Err(Error::Config(format!("f must be > 0, got {}", self.f)));
        }
        if !(self.m.is_finite() && self.m >= 0.0) {
            return Err(Error::Config(format!("m must be ≥ 0, got {}", self.m)));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::Config(format!("gamma must be ≥ 0, got {}", self.gamma)));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// Hyperparameters recorded alongside a fitted mapping.
#[derive(Debug, Clone, PartialEq)]
pub enum FitParams {
    Target { k: f64, f: f64 },
    MEstimate { m: f64 },
    CatboostOrdered { m: f64, permutation_seed: u64 },
    Pozzolo { variant: PozzoloVariant, epsilon: f64 },
    JamesStein,
    Woe { gamma: f64 },
}

impl FitParams {
    pub fn kind(&self) -> EncoderKind {
        match self {
            FitParams::Target { .. } => EncoderKind::Target,
            FitParams::MEstimate { .. } => EncoderKind::MEstimate,
            FitParams::CatboostOrdered { .. } => EncoderKind::CatboostOrdered,
            FitParams::Pozzolo { .. } => EncoderKind::Pozzolo,
            FitParams::JamesStein => EncoderKind::JamesStein,
            FitParams::Woe { .. } => EncoderKind::Woe,
        }
    }
}

/// An immutable label → value mapping learned on training rows.
///
/// The mapping covers every category present in the fitting data; labels
/// outside it transform to `fallback`.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedEncoder {
    params: FitParams,
    mapping: BTreeMap<String, f64>,
    prior: f64,
    fallback: f64,
}

impl FittedEncoder {
    pub fn kind(&self) -> EncoderKind {
        self.params.kind()
    }

    pub fn params(&self) -> &FitParams {
        &self.params
    }

    pub fn mapping(&self) -> &BTreeMap<String, f64> {
        &self.mapping
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }

    pub fn fallback(&self) -> f64 {
        self.fallback
    }

    /// Encoded value for one label; `fallback` if the label was not seen
    /// at fit time.
    pub fn value_for(&self, label: &str) -> f64 {
        self.mapping.get(label).copied().unwrap_or(self.fallback)
    }

    /// Encodes a coded column whose dictionary is `labels`. Codes outside
    /// the dictionary and labels absent from the mapping both yield
    /// `fallback`. Total and deterministic.
    pub fn transform(&self, codes: &[u32], labels: &[String]) -> Vec<f64> {
        let by_code: Vec<f64> = labels.iter().map(|l| self.value_for(l)).collect();
        codes
            .iter()
            .map(|&c| by_code.get(c as usize).copied().unwrap_or(self.fallback))
            .collect()
    }

    pub fn transform_column(&self, column: &crate::data::CatColumn) -> Vec<f64> {
        self.transform(&column.codes, &column.labels)
    }
}

/// Per-training-row values from the ordered (prefix) scheme, plus the
/// full-statistics encoder used for held-out columns.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedEncoding {
    /// One value per training row, indexed by row (not permutation position).
    pub values: Vec<f64>,
    /// The row permutation the prefixes were taken in.
    pub permutation: Vec<u32>,
    /// M-estimate over the full training statistics, for transform.
    pub encoder: FittedEncoder,
}

/// Builds the label-keyed mapping over present categories.
fn label_mapping(
    stats: &CategoryStats,
    labels: &[String],
    mut value: impl FnMut(u32, Tally) -> f64,
) -> Result<BTreeMap<String, f64>> {
    if labels.len() != stats.n_categories() {
        return Err(Error::Shape(format!(
            "dictionary has {} labels, statistics cover {} categories",
            labels.len(),
            stats.n_categories()
        )));
    }
    let mut mapping = BTreeMap::new();
    for (code, tally) in stats.present() {
        let label = &labels[code as usize];
        if mapping.insert(label.clone(), value(code, tally)).is_some() {
            return Err(Error::Schema(format!("duplicate label {label:?} in dictionary")));
        }
    }
    if mapping.is_empty() {
        return Err(Error::Config("statistics contain no categories".into()));
    }
    Ok(mapping)
}

/// Sigmoid-weighted blend: `λ(n) = 1 / (1 + e^{−(n − k)/f})`.
pub fn fit_target(stats: &CategoryStats, labels: &[String], k: f64, f: f64) -> Result<FittedEncoder> {
    if !k.is_finite() {
        return Err(Error::Config(format!("k must be finite, got {k}")));
    }
    if !(f.is_finite() && f > 0.0) {
        return Err(Error::Config(format!("f must be > 0, got {f}")));
    }
    let prior = stats.prior();
    let mapping = label_mapping(stats, labels, |_, tally| {
        let lambda = 1.0 / (1.0 + (-(tally.n as f64 - k) / f).exp());
        blend(lambda, rate(tally), prior)
    })?;
    Ok(FittedEncoder { params: FitParams::Target { k, f }, mapping, prior, fallback: prior })
}

/// Additive smoothing with `m` pseudo-observations of the prior:
/// `S_i = (n_i⁺ + p_prior · m) / (n_i + m)`.
pub fn fit_m_estimate(stats: &CategoryStats, labels: &[String], m: f64) -> Result<FittedEncoder> {
    if !(m.is_finite() && m >= 0.0) {
        return Err(Error::Config(format!("m must be ≥ 0, got {m}")));
    }
    let prior = stats.prior();
    let mapping = label_mapping(stats, labels, |_, tally| m_estimate_value(tally, m, prior))?;
    Ok(FittedEncoder { params: FitParams::MEstimate { m }, mapping, prior, fallback: prior })
}

fn m_estimate_value(tally: Tally, m: f64, prior: f64) -> f64 {
    if tally.n == 0 {
        // Nothing observed: the formula gives the prior for m > 0 and has
        // it as the m → 0⁺ limit.
        return prior;
    }
    let value = (tally.n_pos as f64 + prior * m) / (tally.n as f64 + m);
    // Keep rounding inside the interval the real-valued ratio lives in.
    let rate = rate(tally);
    value.clamp(rate.min(prior), rate.max(prior))
}

/// Shrinkage weighted by squared standard errors:
/// `λ_i = var(p_prior) / (var(p_i) + var(p_prior))` with Bernoulli
/// variances `p(1−p)/n`; λ is 1 when both variances vanish.
pub fn fit_james_stein(stats: &CategoryStats, labels: &[String]) -> Result<FittedEncoder> {
    if stats.n_train() < 2 {
        return Err(Error::Config(format!(
            "james_stein needs at least 2 training rows, got {}",
            stats.n_train()
        )));
    }
    let prior = stats.prior();
    let var_prior = prior * (1.0 - prior) / stats.n_train() as f64;
    let mapping = label_mapping(stats, labels, |_, tally| {
        let p = rate(tally);
        let var_cat = p * (1.0 - p) / tally.n as f64;
        let denom = var_cat + var_prior;
        let lambda = if denom == 0.0 { 1.0 } else { var_prior / denom };
        blend(lambda, p, prior)
    })?;
    Ok(FittedEncoder { params: FitParams::JamesStein, mapping, prior, fallback: prior })
}

/// Frequency-scaled blends: `α_i = n_i / n_train`, λ from min-max scaling
/// (`lambda1`) or a ratio of guarded logarithms (`lambda2`), clamped to
/// [0, 1]. When all present categories are equally frequent, λ = 1/2.
pub fn fit_pozzolo(
    stats: &CategoryStats,
    labels: &[String],
    variant: PozzoloVariant,
    epsilon: f64,
) -> Result<FittedEncoder> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Config(format!("epsilon must be > 0, got {epsilon}")));
    }
    let prior = stats.prior();
    let n_train = stats.n_train() as f64;
    let mut alpha_min = f64::INFINITY;
    let mut alpha_max = f64::NEG_INFINITY;
    for (_, tally) in stats.present() {
        let alpha = tally.n as f64 / n_train;
        alpha_min = alpha_min.min(alpha);
        alpha_max = alpha_max.max(alpha);
    }
    if alpha_max.is_infinite() {
        return Err(Error::Config("statistics contain no categories".into()));
    }
    let range = alpha_max - alpha_min;
    let mapping = label_mapping(stats, labels, |_, tally| {
        let alpha = tally.n as f64 / n_train;
        let lambda = if range == 0.0 {
            0.5
        } else {
            match variant {
                PozzoloVariant::Lambda1 => (alpha - alpha_min) / range,
                PozzoloVariant::Lambda2 => {
                    let num = (alpha - alpha_min + epsilon).ln();
                    let denom = (range + epsilon).ln();
                    if num == denom {
                        1.0
                    } else {
                        num / denom
                    }
                }
            }
        };
        blend(lambda.clamp(0.0, 1.0), rate(tally), prior)
    })?;
    Ok(FittedEncoder {
        params: FitParams::Pozzolo { variant, epsilon },
        mapping,
        prior,
        fallback: prior,
    })
}

/// Weight of evidence: `S_i = ln(((n_i⁻ + γ)/(n⁻ + 2γ)) / ((n_i⁺ + γ)/(n⁺ + 2γ)))`,
/// the log ratio of the category's regularized share of negatives to its
/// share of positives. With `γ = 0` every present category must have both
/// a positive and a negative row.
pub fn fit_woe(stats: &CategoryStats, labels: &[String], gamma: f64) -> Result<FittedEncoder> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::Config(format!("gamma must be ≥ 0, got {gamma}")));
    }
    let n_pos = stats.n_pos() as f64;
    let n_neg = stats.n_neg() as f64;
    if gamma == 0.0 {
        for (code, tally) in stats.present() {
            if tally.n_pos == 0 || tally.n_pos == tally.n {
                return Err(Error::DivisionByZero {
                    category: labels
                        .get(code as usize)
                        .cloned()
                        .unwrap_or_else(|| code.to_string()),
                });
            }
        }
    }
    let mapping = label_mapping(stats, labels, |_, tally| {
        let pos_share = (tally.n_pos as f64 + gamma) / (n_pos + 2.0 * gamma);
        let neg_share = ((tally.n - tally.n_pos) as f64 + gamma) / (n_neg + 2.0 * gamma);
        (neg_share / pos_share).ln()
    })?;
    // The formula's own value at an all-zero tally.
    let fallback = ((n_pos + 2.0 * gamma) / (n_neg + 2.0 * gamma)).ln();
    Ok(FittedEncoder {
        params: FitParams::Woe { gamma },
        mapping,
        prior: stats.prior(),
        fallback,
    })
}

fn check_permutation(permutation: &[u32], n_rows: usize) -> Result<()> {
    if permutation.len() != n_rows {
        return Err(Error::Shape(format!(
            "permutation has {} entries, column has {n_rows} rows",
            permutation.len()
        )));
    }
    let mut seen = vec![false; n_rows];
    for &p in permutation {
        if p as usize >= n_rows || seen[p as usize] {
            return Err(Error::Shape(format!("not a permutation of 0..{n_rows}")));
        }
        seen[p as usize] = true;
    }
    Ok(())
}

/// Prefix target statistics in permutation order with an explicitly held
/// prior: row `t`'s value uses only rows strictly before `t` in the
/// permutation. Exposed so leakage checks can pin `prior` while labels
/// change.
pub fn ordered_values_with_prior(
    codes: &[u32],
    n_categories: usize,
    target: &[u8],
    permutation: &[u32],
    m: f64,
    prior: f64,
) -> Result<Vec<f64>> {
    if codes.len() != target.len() {
        return Err(Error::Shape(format!(
            "column has {} rows, target has {}",
            codes.len(),
            target.len()
        )));
    }
    if !(m.is_finite() && m >= 0.0) {
        return Err(Error::Config(format!("m must be ≥ 0, got {m}")));
    }
    check_permutation(permutation, codes.len())?;
    let mut tallies = vec![Tally::default(); n_categories];
    let mut values = vec![0.0; codes.len()];
    for &row in permutation {
        let row = row as usize;
        let code = codes[row] as usize;
        if code >= n_categories {
            return Err(Error::Shape(format!(
                "code {code} out of range for {n_categories} categories"
            )));
        }
        values[row] = m_estimate_value(tallies[code], m, prior);
        tallies[code].n += 1;
        tallies[code].n_pos += u64::from(target[row]);
    }
    Ok(values)
}

fn ordered_fit(
    codes: &[u32],
    labels: &[String],
    target: &[u8],
    m: f64,
    permutation: Vec<u32>,
    permutation_seed: u64,
) -> Result<OrderedEncoding> {
    let stats = CategoryStats::compute(codes, labels.len(), target)?;
    let prior = stats.prior();
    let values =
        ordered_values_with_prior(codes, labels.len(), target, &permutation, m, prior)?;
    let mapping = label_mapping(&stats, labels, |_, tally| m_estimate_value(tally, m, prior))?;
    let encoder = FittedEncoder {
        params: FitParams::CatboostOrdered { m, permutation_seed },
        mapping,
        prior,
        fallback: prior,
    };
    Ok(OrderedEncoding { values, permutation, encoder })
}

/// Ordered target statistics: draws one row permutation from `seed`,
/// encodes each training row from its prefix, and returns an M-estimate
/// over the full statistics for held-out transforms.
pub fn fit_catboost_ordered(
    codes: &[u32],
    labels: &[String],
    target: &[u8],
    m: f64,
    seed: u64,
) -> Result<OrderedEncoding> {
    let mut permutation: Vec<u32> = (0..codes.len() as u32).collect();
    permutation.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    ordered_fit(codes, labels, target, m, permutation, seed)
}

/// [`fit_catboost_ordered`] with a caller-supplied permutation. The stored
/// `permutation_seed` is 0, as the ordering was given directly.
pub fn fit_catboost_ordered_with_permutation(
    codes: &[u32],
    labels: &[String],
    target: &[u8],
    m: f64,
    permutation: Vec<u32>,
) -> Result<OrderedEncoding> {
    ordered_fit(codes, labels, target, m, permutation, 0)
}

/// Fits one configuration on a training column and returns the per-row
/// training values plus the encoder for held-out transforms. For the
/// ordered kind the training values come from the permutation prefixes;
/// for every other kind they are `transform` of the fitting column.
pub fn fit_column(
    config: &EncoderConfig,
    codes: &[u32],
    labels: &[String],
    target: &[u8],
) -> Result<(Vec<f64>, FittedEncoder)> {
    config.validate()?;
    if config.kind == EncoderKind::CatboostOrdered {
        let ordered =
            fit_catboost_ordered(codes, labels, target, config.m, config.permutation_seed)?;
        return Ok((ordered.values, ordered.encoder));
    }
    let stats = CategoryStats::compute(codes, labels.len(), target)?;
    let encoder = match config.kind {
        EncoderKind::Target => fit_target(&stats, labels, config.k, config.f)?,
        EncoderKind::MEstimate => fit_m_estimate(&stats, labels, config.m)?,
        EncoderKind::Pozzolo => fit_pozzolo(&stats, labels, config.variant, config.epsilon)?,
        EncoderKind::JamesStein => fit_james_stein(&stats, labels)?,
        EncoderKind::Woe => fit_woe(&stats, labels, config.gamma)?,
        EncoderKind::CatboostOrdered => unreachable!("handled above"),
    };
    let values = encoder.transform(codes, labels);
    Ok((values, encoder))
}
