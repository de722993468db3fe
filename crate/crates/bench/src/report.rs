//! Benchmark report: per-seed raw metric values plus per-setting means,
//! standard deviations and percent deltas against the `none` baseline.
//!
//! The machine-readable form is a five-column CSV
//! (`section,setting,seed,metric,value`) holding one `meta` row for the
//! threshold, one `raw` row per (setting, seed, metric) and aggregate rows
//! per (setting, metric). Values use shortest round-trip float formatting,
//! so parsing the emitted CSV reproduces every number bit for bit. The
//! parser accepts exactly the canonical emitted layout.

use anyhow::{anyhow, bail, Context, Result};
use catenc::metrics::{format_percent, percent_delta, MetricName, MetricsReport};
use catenc::textfmt::{format_f64, parse_f64, parse_u64};

use crate::config::BASELINE_SETTING;

pub const CSV_HEADER: &str = "section,setting,seed,metric,value";

fn index_of(name: MetricName) -> usize {
    match name {
        MetricName::PrAuc => 0,
        MetricName::Precision => 1,
        MetricName::Recall => 2,
        MetricName::F1 => 3,
    }
}

/// The four metric values of one (setting, seed) cell, in
/// [`MetricName::ALL`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCell {
    pub setting: String,
    pub seed: u64,
    pub values: [f64; 4],
}

impl RawCell {
    pub fn new(setting: &str, seed: u64, metrics: &MetricsReport) -> RawCell {
        RawCell {
            setting: setting.to_string(),
            seed,
            values: MetricName::ALL.map(|name| metrics.metric(name)),
        }
    }

    pub fn value(&self, name: MetricName) -> f64 {
        self.values[index_of(name)]
    }
}

/// All cells of one experiment, ordered setting-major then seed-minor.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    settings: Vec<String>,
    seeds: Vec<u64>,
    threshold: f64,
    cells: Vec<RawCell>,
}

impl BenchReport {
    /// Assembles a report, reordering `cells` into (setting index, seed
    /// index) order. Every configured pair must appear exactly once.
    pub fn new(
        settings: Vec<String>,
        seeds: Vec<u64>,
        threshold: f64,
        cells: Vec<RawCell>,
    ) -> Result<BenchReport> {
        if !settings.iter().any(|s| s == BASELINE_SETTING) {
            bail!("report needs the {BASELINE_SETTING:?} baseline setting");
        }
        for at in 0..settings.len() {
            if settings[at + 1..].contains(&settings[at]) {
                bail!("setting {:?} appears more than once", settings[at]);
            }
        }
        for at in 0..seeds.len() {
            if seeds[at + 1..].contains(&seeds[at]) {
                bail!("seed {} appears more than once", seeds[at]);
            }
        }
        let mut slots: Vec<Option<RawCell>> = vec![None; settings.len() * seeds.len()];
        for cell in cells {
            let setting = settings
                .iter()
                .position(|s| *s == cell.setting)
                .ok_or_else(|| anyhow!("cell names unknown setting {:?}", cell.setting))?;
            let seed = seeds
                .iter()
                .position(|s| *s == cell.seed)
                .ok_or_else(|| anyhow!("cell names unknown seed {}", cell.seed))?;
            let at = setting * seeds.len() + seed;
            if slots[at].is_some() {
                bail!("duplicate cell for setting {:?}, seed {}", cell.setting, cell.seed);
            }
            slots[at] = Some(cell);
        }
        let cells = slots
            .into_iter()
            .enumerate()
            .map(|(at, slot)| {
                slot.ok_or_else(|| {
                    anyhow!(
                        "missing cell for setting {:?}, seed {}",
                        settings[at / seeds.len()],
                        seeds[at % seeds.len()]
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BenchReport { settings, seeds, threshold, cells })
    }

    pub fn settings(&self) -> &[String] {
        &self.settings
    }

    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn cells(&self) -> &[RawCell] {
        &self.cells
    }

    pub fn cell(&self, setting: &str, seed: u64) -> Option<&RawCell> {
        let at = self.settings.iter().position(|s| s == setting)?
            * self.seeds.len()
            + self.seeds.iter().position(|&s| s == seed)?;
        Some(&self.cells[at])
    }

    fn setting_cells(&self, setting: &str) -> Option<&[RawCell]> {
        let at = self.settings.iter().position(|s| s == setting)? * self.seeds.len();
        Some(&self.cells[at..at + self.seeds.len()])
    }

    /// Mean of one metric over the setting's seeds.
    pub fn mean(&self, setting: &str, name: MetricName) -> Option<f64> {
        let cells = self.setting_cells(setting)?;
        Some(cells.iter().map(|c| c.value(name)).sum::<f64>() / cells.len() as f64)
    }

    /// Population standard deviation of one metric over the setting's seeds.
    pub fn stddev(&self, setting: &str, name: MetricName) -> Option<f64> {
        let cells = self.setting_cells(setting)?;
        let mean = self.mean(setting, name)?;
        let var = cells.iter().map(|c| (c.value(name) - mean).powi(2)).sum::<f64>()
            / cells.len() as f64;
        Some(var.sqrt())
    }

    /// Percent delta of the setting's mean against the baseline mean.
    /// The baseline compares against itself and is `0` by construction;
    /// `None` when the setting is unknown or the delta is undefined
    /// (zero or non-finite baseline).
    pub fn delta_pct(&self, setting: &str, name: MetricName) -> Option<f64> {
        if setting == BASELINE_SETTING {
            self.setting_cells(setting)?;
            return Some(0.0);
        }
        let candidate = self.mean(setting, name)?;
        let baseline = self.mean(BASELINE_SETTING, name)?;
        percent_delta(candidate, baseline).ok()
    }

    /// Canonical machine-readable CSV. Full precision; bit-exact to parse.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_HEADER);
        out.push('\n');
        out.push_str(&format!("meta,,,threshold,{}\n", format_f64(self.threshold)));
        for cell in &self.cells {
            for name in MetricName::ALL {
                out.push_str(&format!(
                    "raw,{},{},{},{}\n",
                    cell.setting,
                    cell.seed,
                    name,
                    format_f64(cell.value(name))
                ));
            }
        }
        for setting in &self.settings {
            for name in MetricName::ALL {
                let mean = self.mean(setting, name).expect("setting is known");
                out.push_str(&format!("mean,{setting},,{name},{}\n", format_f64(mean)));
            }
            for name in MetricName::ALL {
                let std = self.stddev(setting, name).expect("setting is known");
                out.push_str(&format!("std,{setting},,{name},{}\n", format_f64(std)));
            }
            for name in MetricName::ALL {
                if let Some(delta) = self.delta_pct(setting, name) {
                    out.push_str(&format!(
                        "delta_pct,{setting},,{name},{}\n",
                        format_f64(delta)
                    ));
                }
            }
        }
        out
    }

    /// Parses a CSV produced by [`BenchReport::to_csv`]. The raw section
    /// rebuilds the report; the input must then match the canonical form
    /// byte for byte, which checks every aggregate row against a fresh
    /// computation.
    pub fn from_csv(text: &str) -> Result<BenchReport> {
        let mut lines = text.lines().enumerate();
        let header = lines.next().map(|(_, l)| l).unwrap_or_default();
        if header != CSV_HEADER {
            bail!("line 1: expected header {CSV_HEADER:?}, got {header:?}");
        }

        let mut threshold: Option<f64> = None;
        let mut settings: Vec<String> = Vec::new();
        let mut seeds: Vec<u64> = Vec::new();
        let mut cells: Vec<RawCell> = Vec::new();
        for (at, line) in lines {
            let line_no = at + 1;
            let fields: Vec<&str> = line.split(',').collect();
            let [section, setting, seed, metric, value] = fields[..] else {
                bail!("line {line_no}: expected 5 fields, got {}", fields.len());
            };
            match section {
                "meta" => {
                    if metric != "threshold" || threshold.is_some() {
                        bail!("line {line_no}: unexpected meta row");
                    }
                    threshold = Some(
                        parse_f64(value).with_context(|| format!("line {line_no}"))?,
                    );
                }
                "raw" => {
                    let seed =
                        parse_u64(seed).with_context(|| format!("line {line_no}"))?;
                    let value =
                        parse_f64(value).with_context(|| format!("line {line_no}"))?;
                    let column = MetricName::ALL
                        .into_iter()
                        .find(|name| name.as_str() == metric)
                        .ok_or_else(|| anyhow!("line {line_no}: unknown metric {metric:?}"))?;
                    if !settings.iter().any(|s| s == setting) {
                        settings.push(setting.to_string());
                    }
                    if settings.len() == 1 && !seeds.contains(&seed) {
                        seeds.push(seed);
                    }
                    let column = index_of(column);
                    let last = cells.last_mut().filter(|c| {
                        c.setting == setting && c.seed == seed
                    });
                    match last {
                        Some(cell) if column > 0 => cell.values[column] = value,
                        _ if column == 0 => cells.push(RawCell {
                            setting: setting.to_string(),
                            seed,
                            values: [value, 0.0, 0.0, 0.0],
                        }),
                        _ => bail!("line {line_no}: raw metrics out of order"),
                    }
                }
                "mean" | "std" | "delta_pct" => {}
                other => bail!("line {line_no}: unknown section {other:?}"),
            }
        }

        let threshold = threshold.ok_or_else(|| anyhow!("missing meta threshold row"))?;
        let report = BenchReport::new(settings, seeds, threshold, cells)?;
        if report.to_csv() != text {
            bail!("csv is not in canonical form or its aggregates disagree with the raw rows");
        }
        Ok(report)
    }

    /// Human-readable comparison table: one row per setting, percent
    /// deltas per metric, `n/a` where the delta is undefined.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "percent change vs {BASELINE_SETTING} over {} seed(s), threshold {}\n\n",
            self.seeds.len(),
            format_f64(self.threshold)
        );
        let mut rows: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["setting".to_string()];
        header.extend(MetricName::ALL.iter().map(|name| name.to_string()));
        rows.push(header);
        for setting in &self.settings {
            let mut row = vec![setting.clone()];
            for name in MetricName::ALL {
                row.push(match self.delta_pct(setting, name) {
                    Some(delta) => format_percent(delta),
                    None => "n/a".to_string(),
                });
            }
            rows.push(row);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|col| rows.iter().map(|row| row[col].len()).max().unwrap_or(0))
            .collect();
        for row in &rows {
            let mut line = format!("{:<width$}", row[0], width = widths[0]);
            for (text, width) in row[1..].iter().zip(&widths[1..]) {
                line.push_str(&format!("  {text:>width$}"));
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }
}
