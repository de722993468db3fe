//! Sidecar format listing the dataset columns a stored model consumes, in
//! feature order, with each categorical column's training dictionary.
//!
//! `eval` can then rebuild the exact feature matrix from any CSV sharing
//! the schema: labels are remapped into training codes, and a label the
//! training data never contained gets the one-past-the-end code, which no
//! stored split set can match, so such rows follow each branch's default
//! arm.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use catenc::data::Dataset;
use catenc::gbdt::{Feature, FeatureMatrix};
use catenc::textfmt::{escape, parse_usize, push_header, unescape, LineReader};

pub const KIND: &str = "model_columns";

/// One input column, in the order the model's features were built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSpec {
    Numeric { name: String },
    Categorical { name: String, dictionary: Vec<String> },
}

impl ColumnSpec {
    pub fn name(&self) -> &str {
        match self {
            ColumnSpec::Numeric { name } => name,
            ColumnSpec::Categorical { name, .. } => name,
        }
    }
}

/// The column list stored next to a model file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelColumns {
    pub columns: Vec<ColumnSpec>,
}

impl ModelColumns {
    /// Captures a dataset's columns in feature order: categorical columns
    /// first, then numeric, matching how training matrices are assembled.
    pub fn from_dataset(ds: &Dataset) -> ModelColumns {
        let mut columns = Vec::with_capacity(ds.n_categorical() + ds.n_numeric());
        for at in 0..ds.n_categorical() {
            columns.push(ColumnSpec::Categorical {
                name: ds.categorical_name(at).to_string(),
                dictionary: ds.categorical(at).labels.clone(),
            });
        }
        for at in 0..ds.n_numeric() {
            columns.push(ColumnSpec::Numeric { name: ds.numeric_name(at).to_string() });
        }
        ModelColumns { columns }
    }

    /// Builds the model's feature matrix from a dataset sharing the
    /// training schema. Categorical codes are remapped through the stored
    /// dictionary; unseen labels get code `dictionary.len()`.
    pub fn matrix(&self, ds: &Dataset) -> Result<FeatureMatrix> {
        let mut features = Vec::with_capacity(self.columns.len());
        for spec in &self.columns {
            match spec {
                ColumnSpec::Numeric { name } => {
                    let at = (0..ds.n_numeric())
                        .find(|&i| ds.numeric_name(i) == name)
                        .ok_or_else(|| anyhow!("no numeric column named {name:?}"))?;
                    features.push(Feature::Numeric(ds.numeric(at).to_vec()));
                }
                ColumnSpec::Categorical { name, dictionary } => {
                    let at = ds
                        .categorical_index(name)
                        .ok_or_else(|| anyhow!("no categorical column named {name:?}"))?;
                    let column = ds.categorical(at);
                    let remap: HashMap<&str, u32> = dictionary
                        .iter()
                        .enumerate()
                        .map(|(code, label)| (label.as_str(), code as u32))
                        .collect();
                    let unseen = dictionary.len() as u32;
                    let codes = column
                        .codes
                        .iter()
                        .map(|&code| {
                            remap
                                .get(column.labels[code as usize].as_str())
                                .copied()
                                .unwrap_or(unseen)
                        })
                        .collect();
                    features.push(Feature::Categorical {
                        codes,
                        n_categories: dictionary.len() + 1,
                    });
                }
            }
        }
        Ok(FeatureMatrix::new(features)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        push_header(&mut out, KIND);
        out.push_str(&format!("columns: {}\n", self.columns.len()));
        for spec in &self.columns {
            match spec {
                ColumnSpec::Numeric { name } => {
                    out.push_str(&format!("column: numeric\t{}\n", escape(name)));
                }
                ColumnSpec::Categorical { name, dictionary } => {
                    out.push_str(&format!("column: categorical\t{}\n", escape(name)));
                    out.push_str(&format!("labels: {}\n", dictionary.len()));
                    for label in dictionary {
                        out.push_str(&format!("label: {}\n", escape(label)));
                    }
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<ModelColumns> {
        let mut lines = LineReader::new(text);
        lines.expect_header(KIND)?;
        let n_columns = parse_usize(lines.expect_key("columns")?)?;
        let mut columns = Vec::with_capacity(n_columns);
        for _ in 0..n_columns {
            let value = lines.expect_key("column")?;
            let Some((kind, name)) = value.split_once('\t') else {
                bail!("line {}: column wants `kind\\tname`, got {value:?}", lines.line_no());
            };
            let name = unescape(name)?;
            match kind {
                "numeric" => columns.push(ColumnSpec::Numeric { name }),
                "categorical" => {
                    let n_labels = parse_usize(lines.expect_key("labels")?)?;
                    let mut dictionary = Vec::with_capacity(n_labels);
                    for _ in 0..n_labels {
                        dictionary.push(unescape(lines.expect_key("label")?)?);
                    }
                    columns.push(ColumnSpec::Categorical { name, dictionary });
                }
                other => {
                    bail!("line {}: unknown column kind {other:?}", lines.line_no())
                }
            }
        }
        lines.expect_end()?;
        if columns.is_empty() {
            bail!("column list is empty");
        }
        Ok(ModelColumns { columns })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ModelColumns> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        Self::from_text(&text).with_context(|| format!("in {}", path.display()))
    }
}
