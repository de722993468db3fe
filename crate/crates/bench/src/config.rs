//! Experiment configuration: a TOML file describing one multi-seed encoder
//! comparison, parsed into a validated plan.
//!
//! The file has five sections. `[data]` names the source (`synthetic`
//! generator parameters, or a `csv` path plus schema). `[split]`, `[gbdt]`
//! and `[experiment]` override defaults field by field. `[[settings]]`
//! lists the encoder settings to compare; when absent, the full default
//! lineup is used. The `none` baseline (raw codes fed as numbers) is always
//! included, listed or not.
//!
//! One `[gbdt]` block serves every setting: the learner's hyperparameters
//! are shared so that differences between rows come from the encoding
//! alone. Per-seed variation enters through the generator seed, the shuffle
//! seed and the seeds derived in the experiment driver.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use catenc::data::{CsvOptions, SplitMode, SplitSpec};
use catenc::encoders::{EncoderConfig, EncoderKind, PozzoloVariant};
use catenc::gbdt::{CategoricalMode, GbdtParams, Loss};
use catenc::synth::SynthConfig;
use serde::Deserialize;

/// Name of the implicit raw-codes baseline setting.
pub const BASELINE_SETTING: &str = "none";

/// Name of the builtin categorical-splits setting.
pub const BUILTIN_SETTING: &str = "builtin";

/// Where one experiment's rows come from.
#[derive(Debug, Clone)]
pub enum DataSource {
    /// Generated fresh for every experiment seed; the stored `seed` field
    /// is a placeholder and is replaced by the experiment seed.
    Synthetic(SynthConfig),
    /// Loaded once and shared across seeds.
    Csv { path: PathBuf, schema: PathBuf, options: CsvOptions },
}

/// How one comparison row turns categories into model input.
#[derive(Debug, Clone, PartialEq)]
pub enum SettingMode {
    /// Raw codes handed to the learner under the given categorical mode.
    RawCodes(CategoricalMode),
    /// Categorical columns replaced by fitted encoder outputs.
    Encoded(EncoderConfig),
}

/// One named comparison row.
#[derive(Debug, Clone, PartialEq)]
pub struct Setting {
    pub name: String,
    pub mode: SettingMode,
}

impl Setting {
    fn raw(name: &str, mode: CategoricalMode) -> Setting {
        Setting { name: name.into(), mode: SettingMode::RawCodes(mode) }
    }

    fn encoded(config: EncoderConfig) -> Setting {
        let name = match config.kind {
            EncoderKind::Pozzolo => format!("pozzolo_{}", config.variant.as_str()),
            kind => kind.as_str().to_string(),
        };
        Setting { name, mode: SettingMode::Encoded(config) }
    }
}

/// A validated experiment plan.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub split: SplitSpec,
    /// Shared across all settings; `categorical_mode` and `seed` are
    /// overwritten per cell by the driver.
    pub gbdt: GbdtParams,
    pub settings: Vec<Setting>,
    pub seeds: Vec<u64>,
    pub threshold: f64,
    /// Machine-readable report destination; `None` prints only.
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// The full default lineup: both raw-code baselines plus every encoder
    /// kind at default hyperparameters.
    pub fn default_settings() -> Vec<Setting> {
        let mut settings = vec![
            Setting::raw(BASELINE_SETTING, CategoricalMode::CodesAsNumeric),
            Setting::raw(BUILTIN_SETTING, CategoricalMode::BuiltinSorted),
        ];
        for kind in EncoderKind::ALL {
            settings.push(Setting::encoded(EncoderConfig::new(kind)));
        }
        settings
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).context("invalid experiment config")?;
        file.build()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_toml(text.as_str())
            .with_context(|| format!("in config {}", path.display()))
    }
}

/// Default sidecar schema path for a CSV: the data path plus `.schema`.
pub fn default_schema_path(data: &Path) -> PathBuf {
    PathBuf::from(format!("{}.schema", data.display()))
}

/// Parses a single-character CSV delimiter flag.
pub fn parse_delimiter(text: &str) -> Result<u8> {
    match text.as_bytes() {
        [byte] => Ok(*byte),
        _ => bail!("delimiter must be a single byte, got {text:?}"),
    }
}

/// Parses a `sequential` / `shuffled` split mode name.
pub fn parse_split_mode(text: &str) -> Result<SplitMode> {
    match text {
        "sequential" => Ok(SplitMode::Sequential),
        "shuffled" => Ok(SplitMode::Shuffled),
        other => bail!("unknown split mode {other:?}; expected sequential or shuffled"),
    }
}

// ---------------------------------------------------------------------------
// Raw file shape.

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    data: DataSection,
    #[serde(default)]
    split: SplitSection,
    #[serde(default)]
    gbdt: GbdtSection,
    #[serde(default)]
    experiment: ExperimentSection,
    #[serde(default)]
    settings: Vec<SettingSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DataSection {
    /// `synthetic` or `csv`.
    source: String,
    n_rows: Option<usize>,
    n_categorical: Option<usize>,
    n_numeric: Option<usize>,
    cardinalities: Option<Vec<usize>>,
    zipf_exponent: Option<f64>,
    base_fraud_rate: Option<f64>,
    signal_strength: Option<f64>,
    noise_numeric: Option<f64>,
    path: Option<PathBuf>,
    schema: Option<PathBuf>,
    has_header: Option<bool>,
    delimiter: Option<String>,
    missing: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SplitSection {
    train_fraction: Option<f64>,
    mode: Option<String>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GbdtSection {
    n_rounds: Option<usize>,
    learning_rate: Option<f64>,
    max_depth: Option<usize>,
    min_samples_leaf: Option<usize>,
    loss: Option<String>,
    lambda_l2: Option<f64>,
    max_bins: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentSection {
    seeds: Option<Vec<u64>>,
    threshold: Option<f64>,
    output: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SettingSection {
    kind: String,
    k: Option<f64>,
    f: Option<f64>,
    m: Option<f64>,
    variant: Option<String>,
    gamma: Option<f64>,
    epsilon: Option<f64>,
}

impl ConfigFile {
    fn build(self) -> Result<ExperimentConfig> {
        let data = self.data.build()?;
        let split = self.split.build()?;
        let gbdt = self.gbdt.build()?;

        let mut settings = if self.settings.is_empty() {
            ExperimentConfig::default_settings()
        } else {
            self.settings
                .into_iter()
                .map(SettingSection::build)
                .collect::<Result<Vec<_>>>()?
        };
        if !settings.iter().any(|s| s.name == BASELINE_SETTING) {
            settings.insert(0, Setting::raw(BASELINE_SETTING, CategoricalMode::CodesAsNumeric));
        }
        for pair in 0..settings.len() {
            if settings[pair + 1..].iter().any(|s| s.name == settings[pair].name) {
                bail!("setting {:?} is listed more than once", settings[pair].name);
            }
        }

        let seeds = self.experiment.seeds.unwrap_or_else(|| (0..10).collect());
        if seeds.is_empty() {
            bail!("experiment needs at least one seed");
        }
        for pair in 0..seeds.len() {
            if seeds[pair + 1..].contains(&seeds[pair]) {
                bail!("seed {} is listed more than once", seeds[pair]);
            }
        }

        let threshold = self.experiment.threshold.unwrap_or(0.5);
        if !threshold.is_finite() {
            bail!("threshold must be finite, got {threshold}");
        }

        Ok(ExperimentConfig {
            data,
            split,
            gbdt,
            settings,
            seeds,
            threshold,
            output: self.experiment.output,
        })
    }
}

impl DataSection {
    fn build(self) -> Result<DataSource> {
        match self.source.as_str() {
            "synthetic" => {
                self.reject_csv_fields()?;
                let defaults = SynthConfig::default();
                let config = SynthConfig {
                    n_rows: self.n_rows.unwrap_or(defaults.n_rows),
                    n_categorical: self.n_categorical.unwrap_or(defaults.n_categorical),
                    n_numeric: self.n_numeric.unwrap_or(defaults.n_numeric),
                    cardinalities: self.cardinalities.unwrap_or(defaults.cardinalities),
                    zipf_exponent: self.zipf_exponent.unwrap_or(defaults.zipf_exponent),
                    base_fraud_rate: self.base_fraud_rate.unwrap_or(defaults.base_fraud_rate),
                    signal_strength: self.signal_strength.unwrap_or(defaults.signal_strength),
                    noise_numeric: self.noise_numeric.unwrap_or(defaults.noise_numeric),
                    seed: 0,
                };
                config.validate()?;
                Ok(DataSource::Synthetic(config))
            }
            "csv" => {
                self.reject_synth_fields()?;
                let path = self
                    .path
                    .ok_or_else(|| anyhow!("csv source needs a path field"))?;
                let schema = self.schema.unwrap_or_else(|| default_schema_path(&path));
                let options = CsvOptions {
                    delimiter: match &self.delimiter {
                        Some(text) => parse_delimiter(text)?,
                        None => b',',
                    },
                    has_header: self.has_header.unwrap_or(true),
                    missing: self.missing.unwrap_or_default(),
                };
                Ok(DataSource::Csv { path, schema, options })
            }
            other => bail!("unknown data source {other:?}; expected synthetic or csv"),
        }
    }

    fn reject_csv_fields(&self) -> Result<()> {
        let offenders = [
            ("path", self.path.is_some()),
            ("schema", self.schema.is_some()),
            ("has_header", self.has_header.is_some()),
            ("delimiter", self.delimiter.is_some()),
            ("missing", self.missing.is_some()),
        ];
        reject_fields("synthetic", &offenders)
    }

    fn reject_synth_fields(&self) -> Result<()> {
        let offenders = [
            ("n_rows", self.n_rows.is_some()),
            ("n_categorical", self.n_categorical.is_some()),
            ("n_numeric", self.n_numeric.is_some()),
            ("cardinalities", self.cardinalities.is_some()),
            ("zipf_exponent", self.zipf_exponent.is_some()),
            ("base_fraud_rate", self.base_fraud_rate.is_some()),
            ("signal_strength", self.signal_strength.is_some()),
            ("noise_numeric", self.noise_numeric.is_some()),
        ];
        reject_fields("csv", &offenders)
    }
}

fn reject_fields(source: &str, offenders: &[(&str, bool)]) -> Result<()> {
    for (name, set) in offenders {
        if *set {
            bail!("{source} data source does not take the {name} field");
        }
    }
    Ok(())
}

impl SplitSection {
    fn build(self) -> Result<SplitSpec> {
        let defaults = SplitSpec::default();
        Ok(SplitSpec {
            train_fraction: self.train_fraction.unwrap_or(defaults.train_fraction),
            mode: match &self.mode {
                Some(text) => parse_split_mode(text)?,
                None => defaults.mode,
            },
            seed: self.seed.unwrap_or(defaults.seed),
        })
    }
}

impl GbdtSection {
    fn build(self) -> Result<GbdtParams> {
        let defaults = GbdtParams::default();
        let params = GbdtParams {
            n_rounds: self.n_rounds.unwrap_or(defaults.n_rounds),
            learning_rate: self.learning_rate.unwrap_or(defaults.learning_rate),
            max_depth: self.max_depth.unwrap_or(defaults.max_depth),
            min_samples_leaf: self.min_samples_leaf.unwrap_or(defaults.min_samples_leaf),
            loss: match &self.loss {
                Some(text) => text.parse::<Loss>()?,
                None => defaults.loss,
            },
            lambda_l2: self.lambda_l2.unwrap_or(defaults.lambda_l2),
            max_bins: self.max_bins.unwrap_or(defaults.max_bins),
            categorical_mode: defaults.categorical_mode,
            seed: defaults.seed,
        };
        params.validate()?;
        Ok(params)
    }
}

impl SettingSection {
    fn build(self) -> Result<Setting> {
        let SettingSection { kind, k, f, m, variant, gamma, epsilon } = self;
        if kind == BASELINE_SETTING || kind == BUILTIN_SETTING {
            let extras = [
                ("k", k.is_some()),
                ("f", f.is_some()),
                ("m", m.is_some()),
                ("variant", variant.is_some()),
                ("gamma", gamma.is_some()),
                ("epsilon", epsilon.is_some()),
            ];
            for (name, set) in extras {
                if set {
                    bail!("setting {kind:?} does not take the {name} field");
                }
            }
            let mode = if kind == BASELINE_SETTING {
                CategoricalMode::CodesAsNumeric
            } else {
                CategoricalMode::BuiltinSorted
            };
            return Ok(Setting::raw(&kind, mode));
        }

        let encoder_kind: EncoderKind = kind.parse().map_err(|_| {
            anyhow!(
                "unknown setting kind {kind:?}; expected none, builtin, target, \
                 m_estimate, catboost_ordered, pozzolo, james_stein or woe"
            )
        })?;
        let mut config = EncoderConfig::new(encoder_kind);
        if let Some(k) = k {
            config.k = k;
        }
        if let Some(f) = f {
            config.f = f;
        }
        if let Some(m) = m {
            config.m = m;
        }
        if let Some(text) = &variant {
            config.variant = text.parse::<PozzoloVariant>()?;
        }
        if let Some(gamma) = gamma {
            config.gamma = gamma;
        }
        if let Some(epsilon) = epsilon {
            config.epsilon = epsilon;
        }
        config.validate()?;
        Ok(Setting::encoded(config))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_synthetic_config_gets_all_defaults() {
        let cfg = ExperimentConfig::from_toml("[data]\nsource = \"synthetic\"\n").unwrap();
        let DataSource::Synthetic(synth) = &cfg.data else {
            panic!("expected a synthetic source");
        };
        assert_eq!(synth.n_rows, 10_000);
        assert_eq!(cfg.seeds, (0..10).collect::<Vec<u64>>());
        assert_eq!(cfg.threshold, 0.5);
        assert_eq!(cfg.settings.len(), 8);
        assert_eq!(cfg.settings[0].name, "none");
        assert_eq!(cfg.settings[1].name, "builtin");
        assert_eq!(cfg.settings[5].name, "pozzolo_lambda1");
        assert_eq!(cfg.split, SplitSpec::default());
        assert!(cfg.output.is_none());
    }

    #[test]
    fn explicit_settings_get_the_baseline_prepended() {
        let text = "\
[data]
source = \"synthetic\"

[[settings]]
kind = \"woe\"
gamma = 1.5
";
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.settings.len(), 2);
        assert_eq!(cfg.settings[0].name, "none");
        let SettingMode::Encoded(enc) = &cfg.settings[1].mode else {
            panic!("expected an encoded setting");
        };
        assert_eq!(enc.gamma, 1.5);
    }

    #[test]
    fn csv_source_and_overrides() {
        let text = "\
[data]
source = \"csv\"
path = \"rows.csv\"
delimiter = \";\"

[split]
mode = \"shuffled\"
seed = 7

[gbdt]
n_rounds = 3

[experiment]
seeds = [4, 5]
threshold = 0.25
output = \"report.csv\"
";
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        let DataSource::Csv { path, schema, options } = &cfg.data else {
            panic!("expected a csv source");
        };
        assert_eq!(path, &PathBuf::from("rows.csv"));
        assert_eq!(schema, &PathBuf::from("rows.csv.schema"));
        assert_eq!(options.delimiter, b';');
        assert_eq!(cfg.split.mode, SplitMode::Shuffled);
        assert_eq!(cfg.split.seed, 7);
        assert_eq!(cfg.gbdt.n_rounds, 3);
        assert_eq!(cfg.seeds, vec![4, 5]);
        assert_eq!(cfg.threshold, 0.25);
        assert_eq!(cfg.output, Some(PathBuf::from("report.csv")));
    }

    #[test]
    fn bad_configs_are_rejected_with_a_reason() {
        let cases = [
            ("[data]\nsource = \"parquet\"\n", "unknown data source"),
            ("[data]\nsource = \"csv\"\n", "needs a path"),
            ("[data]\nsource = \"synthetic\"\npath = \"x.csv\"\n", "does not take"),
            ("[data]\nsource = \"csv\"\npath = \"x.csv\"\nn_rows = 5\n", "does not take"),
            (
                "[data]\nsource = \"csv\"\npath = \"x.csv\"\ndelimiter = \"ab\"\n",
                "single byte",
            ),
            ("[data]\nsource = \"synthetic\"\n[experiment]\nseeds = []\n", "at least one seed"),
            (
                "[data]\nsource = \"synthetic\"\n[experiment]\nseeds = [1, 1]\n",
                "more than once",
            ),
            (
                "[data]\nsource = \"synthetic\"\n[[settings]]\nkind = \"woe\"\n\
                 [[settings]]\nkind = \"woe\"\n",
                "more than once",
            ),
            ("[data]\nsource = \"synthetic\"\n[[settings]]\nkind = \"onehot\"\n", "unknown setting"),
            (
                "[data]\nsource = \"synthetic\"\n[[settings]]\nkind = \"builtin\"\nm = 2.0\n",
                "does not take",
            ),
            ("[data]\nsource = \"synthetic\"\n[split]\nmode = \"random\"\n", "unknown split mode"),
            ("[data]\nsource = \"synthetic\"\n[gbdt]\nloss = \"hinge\"\n", "unknown loss"),
            ("[data]\nsource = \"synthetic\"\n[gbdt]\nn_rounds = 0\n", "n_rounds"),
            ("[data]\nsource = \"synthetic\"\nbase_fraud_rate = 1.5\n", "base_fraud_rate"),
            ("[data]\nsource = \"synthetic\"\ntypo_field = 1\n", "typo_field"),
        ];
        for (text, needle) in cases {
            let err = match ExperimentConfig::from_toml(text) {
                Err(err) => format!("{err:#}"),
                Ok(_) => panic!("config should be rejected: {text}"),
            };
            assert!(err.contains(needle), "error {err:?} should mention {needle:?}");
        }
    }

    #[test]
    fn two_pozzolo_variants_coexist() {
        let text = "\
[data]
source = \"synthetic\"

[[settings]]
kind = \"pozzolo\"
variant = \"lambda1\"

[[settings]]
kind = \"pozzolo\"
variant = \"lambda2\"
";
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        let names: Vec<&str> = cfg.settings.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["none", "pozzolo_lambda1", "pozzolo_lambda2"]);
    }
}
