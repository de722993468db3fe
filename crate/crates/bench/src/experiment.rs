//! Experiment driver. One cell per (setting × seed): fit any encoders on
//! the training half only, train one GBDT, score the validation half.
//!
//! Validation labels are consumed exclusively by the metrics at the very
//! end of a cell — encoders see training codes and training labels, the
//! learner sees the training matrix, and the validation transform uses
//! only the fitted mappings.
//!
//! Per-seed variation: a synthetic source is regenerated with the
//! experiment seed, a shuffled split shifts its shuffle seed by the
//! experiment seed, and the learner and ordered-TS permutation seeds are
//! the experiment seed plus fixed offsets.

use std::fs;

use anyhow::{Context, Result};
use catenc::data::{load_csv, split, Dataset, Schema, SplitSpec};
use catenc::encoders::{fit_column, FittedEncoder};
use catenc::gbdt::{
    fit, BoostedModel, CategoricalMode, Feature, FeatureMatrix, GbdtParams,
};
use catenc::metrics::{evaluate, MetricsReport};
use catenc::synth;

use crate::config::{DataSource, ExperimentConfig, Setting, SettingMode};
use crate::report::{BenchReport, RawCell};

/// Added to the experiment seed for the learner's seed.
pub const GBDT_SEED_OFFSET: u64 = 1;

/// Added to the experiment seed for the ordered-TS permutation seed.
pub const PERMUTATION_SEED_OFFSET: u64 = 2;

/// Everything produced by one (setting, seed) cell.
pub struct Cell {
    /// One fitted encoder per categorical column, in column order; empty
    /// for the raw-codes settings.
    pub encoders: Vec<(String, FittedEncoder)>,
    pub model: BoostedModel,
    /// Validation scores, row-aligned with the validation set.
    pub scores: Vec<f64>,
    pub metrics: MetricsReport,
}

fn raw_features(ds: &Dataset) -> Vec<Feature> {
    let mut features = Vec::with_capacity(ds.n_categorical() + ds.n_numeric());
    for at in 0..ds.n_categorical() {
        let column = ds.categorical(at);
        features.push(Feature::Categorical {
            codes: column.codes.clone(),
            n_categories: column.labels.len(),
        });
    }
    for at in 0..ds.n_numeric() {
        features.push(Feature::Numeric(ds.numeric(at).to_vec()));
    }
    features
}

type BuiltMatrices =
    (FeatureMatrix, FeatureMatrix, Vec<(String, FittedEncoder)>, CategoricalMode);

/// Builds the train and validation matrices for one setting. Encoded
/// settings replace every categorical column with the encoder's numeric
/// output; raw settings pass codes through under the setting's mode.
fn build_matrices(
    setting: &Setting,
    seed: u64,
    train: &Dataset,
    val: &Dataset,
) -> Result<BuiltMatrices> {
    match &setting.mode {
        SettingMode::RawCodes(mode) => Ok((
            FeatureMatrix::new(raw_features(train))?,
            FeatureMatrix::new(raw_features(val))?,
            Vec::new(),
            *mode,
        )),
        SettingMode::Encoded(config) => {
            let mut config = config.clone();
            config.permutation_seed = seed.wrapping_add(PERMUTATION_SEED_OFFSET);
            let n_features = train.n_categorical() + train.n_numeric();
            let mut train_features = Vec::with_capacity(n_features);
            let mut val_features = Vec::with_capacity(n_features);
            let mut encoders = Vec::with_capacity(train.n_categorical());
            for at in 0..train.n_categorical() {
                let name = train.categorical_name(at).to_string();
                let column = train.categorical(at);
                let (values, encoder) =
                    fit_column(&config, &column.codes, &column.labels, train.target())
                        .with_context(|| format!("fitting column {name:?}"))?;
                train_features.push(Feature::Numeric(values));
                val_features.push(Feature::Numeric(
                    encoder.transform_column(val.categorical(at)),
                ));
                encoders.push((name, encoder));
            }
            for at in 0..train.n_numeric() {
                train_features.push(Feature::Numeric(train.numeric(at).to_vec()));
                val_features.push(Feature::Numeric(val.numeric(at).to_vec()));
            }
            // No categorical features remain, so the mode is inert; the
            // stored model still needs a concrete one.
            Ok((
                FeatureMatrix::new(train_features)?,
                FeatureMatrix::new(val_features)?,
                encoders,
                CategoricalMode::CodesAsNumeric,
            ))
        }
    }
}

/// Runs one cell: fit the setting on `train`, train the learner, score
/// `val` and evaluate at `threshold`.
pub fn run_cell(
    setting: &Setting,
    seed: u64,
    train: &Dataset,
    val: &Dataset,
    gbdt: &GbdtParams,
    threshold: f64,
) -> Result<Cell> {
    let (train_matrix, val_matrix, encoders, mode) =
        build_matrices(setting, seed, train, val)?;
    let mut params = gbdt.clone();
    params.categorical_mode = mode;
    params.seed = seed.wrapping_add(GBDT_SEED_OFFSET);
    let model = fit(&train_matrix, &train.target_f64(), &params)?;
    let scores = model.predict(&val_matrix)?;
    let metrics = evaluate(&scores, val.target(), threshold)?;
    Ok(Cell { encoders, model, scores, metrics })
}

fn load_csv_source(
    path: &std::path::Path,
    schema: &std::path::Path,
    options: &catenc::data::CsvOptions,
) -> Result<Dataset> {
    let schema_text = fs::read_to_string(schema)
        .with_context(|| format!("cannot read schema {}", schema.display()))?;
    let schema = Schema::parse(&schema_text)
        .with_context(|| format!("in schema {}", schema.display()))?;
    load_csv(path, &schema, options).with_context(|| format!("loading {}", path.display()))
}

/// Runs every (setting × seed) cell and collects the metric values into a
/// report. Deterministic for a fixed config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<BenchReport> {
    let loaded = match &cfg.data {
        DataSource::Csv { path, schema, options } => {
            Some(load_csv_source(path, schema, options)?)
        }
        DataSource::Synthetic(_) => None,
    };

    let mut cells = Vec::with_capacity(cfg.seeds.len() * cfg.settings.len());
    for &seed in &cfg.seeds {
        let generated;
        let ds = match &cfg.data {
            DataSource::Synthetic(synth_cfg) => {
                let synth_cfg = synth::SynthConfig { seed, ..synth_cfg.clone() };
                generated = synth::generate(&synth_cfg)
                    .with_context(|| format!("generating data for seed {seed}"))?;
                &generated
            }
            DataSource::Csv { .. } => loaded.as_ref().expect("loaded above"),
        };
        let spec = SplitSpec { seed: cfg.split.seed.wrapping_add(seed), ..cfg.split };
        let (train, val) =
            split(ds, &spec).with_context(|| format!("splitting for seed {seed}"))?;
        for setting in &cfg.settings {
            let cell = run_cell(setting, seed, &train, &val, &cfg.gbdt, cfg.threshold)
                .with_context(|| format!("setting {:?}, seed {seed}", setting.name))?;
            cells.push(RawCell::new(&setting.name, seed, &cell.metrics));
        }
    }

    let names = cfg.settings.iter().map(|s| s.name.clone()).collect();
    BenchReport::new(names, cfg.seeds.clone(), cfg.threshold, cells)
}
