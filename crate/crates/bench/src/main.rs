//! `bench`: synthetic data generation, encoder fitting, model training and
//! evaluation, and full multi-seed encoder comparisons.

use std::collections::HashMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use catenc::data::{
    load_csv, write_csv, ColumnKind, ColumnSchema, CsvOptions, Dataset, Schema,
};
use catenc::encoders::{fit_column, save_encoder, EncoderConfig, EncoderKind, FittedEncoder};
use catenc::gbdt::{fit, load_model, save_model, CategoricalMode, GbdtParams, Loss};
use catenc::metrics::{evaluate, MetricName};
use catenc::synth::{generate_with_truth, SynthConfig};
use catenc::textfmt::format_f64;
use catenc_bench::columns::ModelColumns;
use catenc_bench::config::{default_schema_path, ExperimentConfig};
use catenc_bench::experiment::run_experiment;

#[derive(Parser)]
#[command(
    name = "bench",
    version,
    about = "Categorical-encoding comparison harness: synthetic data, six \
             encoders, a small GBDT and multi-seed percent-delta reports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the multi-seed encoder comparison described by a config file.
    Run(RunArgs),
    /// Generate a synthetic imbalanced dataset: CSV, schema sidecar and a
    /// ground-truth file of the per-category offsets.
    Gen(GenArgs),
    /// Fit encoders on one CSV's training labels and apply them to another.
    Encode(EncodeArgs),
    /// Train a model on a CSV and store it with its column list.
    Train(TrainArgs),
    /// Score a CSV with a stored model and print metrics.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Table,
    Csv,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's decision threshold.
    #[arg(long)]
    threshold: Option<f64>,
    /// Override the config's seed list, e.g. `0,1,2`.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// What to print on stdout.
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,
    /// Override the config's machine-readable report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Schema sidecar path (default: `<out>.schema`).
    #[arg(long)]
    schema_out: Option<PathBuf>,
    /// Ground-truth offsets path (default: `<out>.truth`).
    #[arg(long)]
    truth_out: Option<PathBuf>,
    #[arg(long, default_value_t = SynthConfig::default().n_rows)]
    rows: usize,
    /// Number of categorical features.
    #[arg(long, default_value_t = SynthConfig::default().n_categorical)]
    cats: usize,
    /// Number of numeric features.
    #[arg(long, default_value_t = SynthConfig::default().n_numeric)]
    nums: usize,
    /// Category count per categorical feature, e.g. `400,50,20,12`.
    #[arg(long, value_delimiter = ',')]
    cardinalities: Option<Vec<usize>>,
    #[arg(long, default_value_t = SynthConfig::default().zipf_exponent)]
    zipf: f64,
    #[arg(long, default_value_t = SynthConfig::default().base_fraud_rate)]
    base_rate: f64,
    #[arg(long, default_value_t = SynthConfig::default().signal_strength)]
    signal: f64,
    #[arg(long, default_value_t = SynthConfig::default().noise_numeric)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EncodeArgs {
    /// Encoder kind: target, m_estimate, catboost_ordered, pozzolo,
    /// james_stein or woe.
    #[arg(long)]
    encoder: String,
    /// Training CSV the encoders are fitted on.
    #[arg(long)]
    fit: PathBuf,
    /// Schema for both CSVs (default: `<fit>.schema`).
    #[arg(long)]
    schema: Option<PathBuf>,
    /// CSV to transform with the fitted encoders.
    #[arg(long)]
    apply: Option<PathBuf>,
    /// Where to write the transformed CSV; its schema goes to
    /// `<out>.schema` (default: CSV to stdout, no schema file).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to store the fitted encoders. With --column the path is used
    /// as-is; otherwise one `<path>.<column>.enc` file per column.
    #[arg(long)]
    save_encoder: Option<PathBuf>,
    /// Encode only this column (default: every categorical column).
    #[arg(long)]
    column: Option<String>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    f: Option<f64>,
    #[arg(long)]
    m: Option<f64>,
    /// Pozzolo λ variant: lambda1 or lambda2.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    permutation_seed: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    /// Training CSV.
    #[arg(long)]
    data: PathBuf,
    /// Schema path (default: `<data>.schema`).
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Where to write the model; its column list goes to
    /// `<model-out>.columns`.
    #[arg(long)]
    model_out: PathBuf,
    /// Raw categorical handling: builtin_sorted or codes_as_numeric.
    #[arg(long, default_value = "builtin_sorted")]
    mode: String,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    min_samples_leaf: Option<usize>,
    /// Training loss: logistic or squared_error.
    #[arg(long)]
    loss: Option<String>,
    #[arg(long)]
    lambda_l2: Option<f64>,
    #[arg(long)]
    max_bins: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    /// CSV to score; must include the target column.
    #[arg(long)]
    data: PathBuf,
    /// Schema path (default: `<data>.schema`).
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Stored model path.
    #[arg(long)]
    model: PathBuf,
    /// Column list path (default: `<model>.columns`).
    #[arg(long)]
    columns: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Gen(args) => gen(args),
        Command::Encode(args) => encode(args),
        Command::Train(args) => train(args),
        Command::Eval(args) => eval(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_schema(path: &Path) -> Result<Schema> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read schema {}", path.display()))?;
    Schema::parse(&text).with_context(|| format!("in schema {}", path.display()))
}

fn load_dataset(data: &Path, schema: &Option<PathBuf>) -> Result<Dataset> {
    let schema_path = schema.clone().unwrap_or_else(|| default_schema_path(data));
    let schema = load_schema(&schema_path)?;
    load_csv(data, &schema, &CsvOptions::default())
        .with_context(|| format!("loading {}", data.display()))
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(threshold) = args.threshold {
        if !threshold.is_finite() {
            bail!("threshold must be finite, got {threshold}");
        }
        cfg.threshold = threshold;
    }
    if let Some(seeds) = args.seeds {
        for at in 0..seeds.len() {
            if seeds[at + 1..].contains(&seeds[at]) {
                bail!("seed {} is listed more than once", seeds[at]);
            }
        }
        cfg.seeds = seeds;
    }
    if args.out.is_some() {
        cfg.output = args.out;
    }

    let report = run_experiment(&cfg)?;
    if let Some(path) = &cfg.output {
        fs::write(path, report.to_csv())
            .with_context(|| format!("cannot write report {}", path.display()))?;
    }
    match args.format {
        OutputFormat::Table => print!("{}", report.to_table()),
        OutputFormat::Csv => print!("{}", report.to_csv()),
    }
    Ok(())
}

fn gen(args: GenArgs) -> Result<()> {
    let defaults = SynthConfig::default();
    let config = SynthConfig {
        n_rows: args.rows,
        n_categorical: args.cats,
        n_numeric: args.nums,
        cardinalities: args.cardinalities.unwrap_or(defaults.cardinalities),
        zipf_exponent: args.zipf,
        base_fraud_rate: args.base_rate,
        signal_strength: args.signal,
        noise_numeric: args.noise,
        seed: args.seed,
    };
    let (ds, truth) = generate_with_truth(&config)?;
    write_csv(&ds, &args.out, &CsvOptions::default())
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    let schema_path = args.schema_out.unwrap_or_else(|| default_schema_path(&args.out));
    fs::write(&schema_path, ds.schema().render())
        .with_context(|| format!("cannot write {}", schema_path.display()))?;
    let truth_path = args
        .truth_out
        .unwrap_or_else(|| PathBuf::from(format!("{}.truth", args.out.display())));
    truth.save(&truth_path)?;
    let positives = ds.target().iter().filter(|&&t| t == 1).count();
    println!(
        "wrote {} rows ({} positives) to {}; schema at {}, truth at {}",
        ds.n_rows(),
        positives,
        args.out.display(),
        schema_path.display(),
        truth_path.display()
    );
    Ok(())
}

/// Replaces the fitted categorical columns of `ds` with their encoded
/// numeric values, keeping names and column order.
fn encode_dataset(ds: &Dataset, encoders: &[(String, FittedEncoder)]) -> Result<Dataset> {
    let by_name: HashMap<&str, &FittedEncoder> =
        encoders.iter().map(|(name, enc)| (name.as_str(), enc)).collect();
    let columns = ds
        .schema()
        .columns()
        .iter()
        .map(|col| {
            let encoded =
                col.kind == ColumnKind::Categorical && by_name.contains_key(col.name.as_str());
            let kind = if encoded { ColumnKind::Numeric } else { col.kind };
            ColumnSchema::new(col.name.clone(), kind)
        })
        .collect();
    let schema = Schema::new(columns)?;

    let mut cat = Vec::new();
    let mut num = Vec::new();
    for col in schema.columns() {
        match col.kind {
            ColumnKind::Target => {}
            ColumnKind::Categorical => {
                let at = ds.categorical_index(&col.name).expect("kind unchanged");
                cat.push(ds.categorical(at).clone());
            }
            ColumnKind::Numeric => {
                if let Some(encoder) = by_name.get(col.name.as_str()) {
                    let at = ds.categorical_index(&col.name).expect("was categorical");
                    num.push(encoder.transform_column(ds.categorical(at)));
                } else {
                    let at = (0..ds.n_numeric())
                        .find(|&i| ds.numeric_name(i) == col.name)
                        .expect("kind unchanged");
                    num.push(ds.numeric(at).to_vec());
                }
            }
        }
    }
    Ok(Dataset::from_parts(schema, cat, num, ds.target().to_vec())?)
}

fn encode(args: EncodeArgs) -> Result<()> {
    let kind: EncoderKind = args.encoder.parse()?;
    let mut config = EncoderConfig::new(kind);
    if let Some(k) = args.k {
        config.k = k;
    }
    if let Some(f) = args.f {
        config.f = f;
    }
    if let Some(m) = args.m {
        config.m = m;
    }
    if let Some(variant) = &args.variant {
        config.variant = variant.parse()?;
    }
    if let Some(gamma) = args.gamma {
        config.gamma = gamma;
    }
    if let Some(epsilon) = args.epsilon {
        config.epsilon = epsilon;
    }
    if let Some(seed) = args.permutation_seed {
        config.permutation_seed = seed;
    }
    config.validate()?;

    let train = load_dataset(&args.fit, &args.schema)?;
    let column_ids: Vec<usize> = match &args.column {
        Some(name) => vec![train
            .categorical_index(name)
            .ok_or_else(|| anyhow!("no categorical column named {name:?}"))?],
        None => (0..train.n_categorical()).collect(),
    };
    if column_ids.is_empty() {
        bail!("{} has no categorical columns", args.fit.display());
    }

    let mut encoders = Vec::with_capacity(column_ids.len());
    for &at in &column_ids {
        let name = train.categorical_name(at).to_string();
        let column = train.categorical(at);
        let (_, encoder) = fit_column(&config, &column.codes, &column.labels, train.target())
            .with_context(|| format!("fitting column {name:?}"))?;
        encoders.push((name, encoder));
    }

    if let Some(stem) = &args.save_encoder {
        if args.column.is_some() {
            save_encoder(&encoders[0].1, stem)?;
        } else {
            for (name, encoder) in &encoders {
                let path = PathBuf::from(format!("{}.{name}.enc", stem.display()));
                save_encoder(encoder, &path)?;
            }
        }
    }

    if let Some(apply) = &args.apply {
        let schema_path =
            args.schema.clone().unwrap_or_else(|| default_schema_path(&args.fit));
        let schema = load_schema(&schema_path)?;
        let data = load_csv(apply, &schema, &CsvOptions::default())
            .with_context(|| format!("loading {}", apply.display()))?;
        let encoded = encode_dataset(&data, &encoders)?;
        match &args.out {
            Some(path) => {
                write_csv(&encoded, path, &CsvOptions::default())
                    .with_context(|| format!("cannot write {}", path.display()))?;
                let schema_out = default_schema_path(path);
                fs::write(&schema_out, encoded.schema().render())
                    .with_context(|| format!("cannot write {}", schema_out.display()))?;
            }
            None => {
                let mut buffer = Vec::new();
                catenc::data::render_csv(&encoded, &mut buffer, &CsvOptions::default())?;
                std::io::stdout().write_all(&buffer)?;
            }
        }
    } else if args.out.is_some() {
        bail!("--out needs --apply");
    }
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let data = load_dataset(&args.data, &args.schema)?;
    let defaults = GbdtParams::default();
    let params = GbdtParams {
        n_rounds: args.rounds.unwrap_or(defaults.n_rounds),
        learning_rate: args.learning_rate.unwrap_or(defaults.learning_rate),
        max_depth: args.max_depth.unwrap_or(defaults.max_depth),
        min_samples_leaf: args.min_samples_leaf.unwrap_or(defaults.min_samples_leaf),
        loss: match &args.loss {
            Some(text) => text.parse::<Loss>()?,
            None => defaults.loss,
        },
        lambda_l2: args.lambda_l2.unwrap_or(defaults.lambda_l2),
        max_bins: args.max_bins.unwrap_or(defaults.max_bins),
        categorical_mode: args.mode.parse::<CategoricalMode>()?,
        seed: defaults.seed,
    };
    let columns = ModelColumns::from_dataset(&data);
    let matrix = columns.matrix(&data)?;
    let model = fit(&matrix, &data.target_f64(), &params)?;
    save_model(&model, &args.model_out)?;
    let columns_path = PathBuf::from(format!("{}.columns", args.model_out.display()));
    columns.save(&columns_path)?;
    println!(
        "trained {} rounds on {} rows; model at {}, columns at {}",
        params.n_rounds,
        data.n_rows(),
        args.model_out.display(),
        columns_path.display()
    );
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    if !args.threshold.is_finite() {
        bail!("threshold must be finite, got {}", args.threshold);
    }
    let data = load_dataset(&args.data, &args.schema)?;
    let model = load_model(&args.model)?;
    let columns_path = args
        .columns
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.columns", args.model.display())));
    let columns = ModelColumns::load(&columns_path)?;
    let matrix = columns.matrix(&data)?;
    let scores = model.predict(&matrix)?;
    let report = evaluate(&scores, data.target(), args.threshold)?;
    match args.format {
        OutputFormat::Table => {
            for name in MetricName::ALL {
                println!("{name}: {}", format_f64(report.metric(name)));
            }
            let at = report.at_threshold;
            println!(
                "confusion at {}: tp={} fp={} tn={} fn={}",
                format_f64(at.threshold),
                at.true_pos,
                at.false_pos,
                at.true_neg,
                at.false_neg
            );
        }
        OutputFormat::Csv => {
            println!("metric,value");
            for name in MetricName::ALL {
                println!("{name},{}", format_f64(report.metric(name)));
            }
        }
    }
    Ok(())
}
