//! Deterministic generator of imbalanced fraud-like tabular data.
//!
//! Categorical features draw their codes from a Zipf distribution, so a few
//! categories dominate and a long tail stays rare. At seed time every
//! category of every categorical feature receives a fixed log-odds offset
//! drawn from `Normal(0, signal_strength)`; each row's fraud probability is
//!
//! ```text
//! p = sigmoid(logit(base_fraud_rate) + Σ offsets + 0.5·signal_strength·Σ vₖ)
//! ```
//!
//! where `vₖ ~ Normal(0, 1)` is the informative component of numeric
//! feature k, emitted as `vₖ + Normal(0, noise_numeric)`. With
//! `signal_strength = 0` every offset and numeric contribution vanishes and
//! the label is a pure `Bernoulli(base_fraud_rate)` draw.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Zipf};

use crate::data::{CatColumn, ColumnKind, ColumnSchema, Dataset, Schema};
use crate::error::{Error, Result};
use crate::gbdt::sigmoid;
use crate::textfmt::{format_f64, push_header};

/// Generator settings. `cardinalities` must list one entry per categorical
/// feature; the default layout mirrors a payment dataset where one column
/// (a merchant-category-like code) has hundreds of values.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_rows: usize,
    pub n_categorical: usize,
    pub n_numeric: usize,
    pub cardinalities: Vec<usize>,
    pub zipf_exponent: f64,
    pub base_fraud_rate: f64,
    /// Standard deviation of the per-category log-odds offsets; also scales
    /// the numeric features' contribution (at half weight).
    pub signal_strength: f64,
    pub noise_numeric: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_rows: 10_000,
            n_categorical: 8,
            n_numeric: 2,
            cardinalities: vec![400, 50, 20, 12, 8, 6, 4, 2],
            zipf_exponent: 1.2,
            base_fraud_rate: 0.005,
            signal_strength: 1.0,
            noise_numeric: 1.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_rows == 0 {
            return Err(Error::Config("n_rows must be at least 1".into()));
        }
        if self.n_categorical + self.n_numeric == 0 {
            return Err(Error::Config("at least one feature column is required".into()));
        }
        if self.cardinalities.len() != self.n_categorical {
            return Err(Error::Config(format!(
                "{} cardinalities for {} categorical features",
                self.cardinalities.len(),
                self.n_categorical
            )));
        }
        if let Some(&bad) = self.cardinalities.iter().find(|&&c| c < 2) {
            return Err(Error::Config(format!("cardinalities must be ≥ 2, got {bad}")));
        }
        if let Some(&bad) = self.cardinalities.iter().find(|&&c| c > u32::MAX as usize) {
            return Err(Error::Config(format!("cardinality {bad} does not fit a code")));
        }
        if !(self.base_fraud_rate > 0.0 && self.base_fraud_rate < 1.0) {
            return Err(Error::Config(format!(
                "base_fraud_rate must be in (0, 1), got {}",
                self.base_fraud_rate
            )));
        }
        for (name, value) in [
            ("zipf_exponent", self.zipf_exponent),
            ("signal_strength", self.signal_strength),
            ("noise_numeric", self.noise_numeric),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be finite and non-negative, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// The schema of generated datasets: `cat_0..`, `num_0..`, `label`.
    pub fn schema(&self) -> Schema {
        let mut columns = Vec::with_capacity(self.n_categorical + self.n_numeric + 1);
        for index in 0..self.n_categorical {
            columns.push(ColumnSchema::new(format!("cat_{index}"), ColumnKind::Categorical));
        }
        for index in 0..self.n_numeric {
            columns.push(ColumnSchema::new(format!("num_{index}"), ColumnKind::Numeric));
        }
        columns.push(ColumnSchema::new("label", ColumnKind::Target));
        Schema::new(columns).expect("generated names are unique and reserved-character-free")
    }
}

/// What the generator knows that a model must recover: the per-category
/// log-odds offsets, plus the exact mean and variance of the label draw for
/// concentration checks. Diagnostics only — nothing downstream reads it.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// `offsets[f][c]` is the log-odds offset of category `c` of `cat_f`.
    pub offsets: Vec<Vec<f64>>,
    /// Coefficient applied to each numeric informative component.
    pub numeric_coefficient: f64,
    /// Σ over rows of the fraud probability.
    pub probability_sum: f64,
    /// Σ over rows of p(1−p).
    pub bernoulli_variance_sum: f64,
}

impl GroundTruth {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        push_header(&mut out, "synth_truth");
        out.push_str(&format!("numeric_coefficient: {}\n", format_f64(self.numeric_coefficient)));
        out.push_str(&format!("probability_sum: {}\n", format_f64(self.probability_sum)));
        out.push_str(&format!(
            "bernoulli_variance_sum: {}\n",
            format_f64(self.bernoulli_variance_sum)
        ));
        out.push_str(&format!("features: {}\n", self.offsets.len()));
        for (index, offsets) in self.offsets.iter().enumerate() {
            out.push_str(&format!("feature: cat_{index}\n"));
            out.push_str(&format!("categories: {}\n", offsets.len()));
            for (code, offset) in offsets.iter().enumerate() {
                out.push_str(&format!("v{code}\t{}\n", format_f64(*offset)));
            }
        }
        out
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Generates a dataset; see [`generate_with_truth`].
pub fn generate(config: &SynthConfig) -> Result<Dataset> {
    generate_with_truth(config).map(|(dataset, _)| dataset)
}

/// Generates a dataset plus its ground truth, fully determined by the
/// config (including the seed).
pub fn generate_with_truth(config: &SynthConfig) -> Result<(Dataset, GroundTruth)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let standard_normal = Normal::new(0.0, 1.0).expect("valid parameters");

    // Seed-time draws: one offset per category per feature.
    let offsets: Vec<Vec<f64>> = config
        .cardinalities
        .iter()
        .map(|&cardinality| {
            (0..cardinality)
                .map(|_| {
                    if config.signal_strength == 0.0 {
                        0.0
                    } else {
                        config.signal_strength * standard_normal.sample(&mut rng)
                    }
                })
                .collect()
        })
        .collect();

    let zipfs: Vec<Zipf<f64>> = config
        .cardinalities
        .iter()
        .map(|&cardinality| {
            Zipf::new(cardinality as u64, config.zipf_exponent).expect("validated parameters")
        })
        .collect();
    let numeric_coefficient = 0.5 * config.signal_strength;
    let base_logit = (config.base_fraud_rate / (1.0 - config.base_fraud_rate)).ln();

    let mut cat_codes: Vec<Vec<u32>> = vec![Vec::with_capacity(config.n_rows); config.n_categorical];
    let mut num_values: Vec<Vec<f64>> = vec![Vec::with_capacity(config.n_rows); config.n_numeric];
    let mut target = Vec::with_capacity(config.n_rows);
    let mut probability_sum = 0.0;
    let mut bernoulli_variance_sum = 0.0;
    for _ in 0..config.n_rows {
        let mut logit = base_logit;
        for (feature, zipf) in zipfs.iter().enumerate() {
            let code = zipf.sample(&mut rng) as u32 - 1; // ranks are 1-based
            logit += offsets[feature][code as usize];
            cat_codes[feature].push(code);
        }
        for values in &mut num_values {
            let informative: f64 = standard_normal.sample(&mut rng);
            let noise = if config.noise_numeric == 0.0 {
                0.0
            } else {
                config.noise_numeric * standard_normal.sample(&mut rng)
            };
            logit += numeric_coefficient * informative;
            values.push(informative + noise);
        }
        let p = sigmoid(logit);
        probability_sum += p;
        bernoulli_variance_sum += p * (1.0 - p);
        target.push(u8::from(rng.gen::<f64>() < p));
    }

    let cat = cat_codes
        .into_iter()
        .zip(&config.cardinalities)
        .map(|(codes, &cardinality)| CatColumn {
            codes,
            labels: (0..cardinality).map(|code| format!("v{code}")).collect(),
        })
        .collect();
    let dataset = Dataset::from_parts(config.schema(), cat, num_values, target)?;
    let truth =
        GroundTruth { offsets, numeric_coefficient, probability_sum, bernoulli_variance_sum };
    Ok((dataset, truth))
}
