//! Column schemas, in-memory datasets and CSV I/O.
//!
//! Categorical cells are interned into dense `u32` codes in order of first
//! appearance; the per-column dictionary maps codes back to labels. Missing
//! categorical cells become the reserved [`MISSING_LABEL`] category, missing
//! numeric cells become `NaN`. The target column must hold `0` or `1`.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::textfmt;

/// Reserved label assigned to missing categorical cells.
pub const MISSING_LABEL: &str = "⟨missing⟩";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Categorical,
    Numeric,
    Target,
}

impl ColumnKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnKind::Categorical => "categorical",
            ColumnKind::Numeric => "numeric",
            ColumnKind::Target => "target",
        }
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ColumnKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "categorical" => Ok(ColumnKind::Categorical),
            "numeric" => Ok(ColumnKind::Numeric),
            "target" => Ok(ColumnKind::Target),
            other => Err(Error::Schema(format!("unknown column kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
}

impl ColumnSchema {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        ColumnSchema { name: name.into(), kind }
    }
}

/// A validated column list: unique, non-empty names and exactly one target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    columns: Vec<ColumnSchema>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSchema>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Schema("schema has no columns".into()));
        }
        let mut seen = HashSet::new();
        let mut targets = 0usize;
        for col in &columns {
            if col.name.is_empty() {
                return Err(Error::Schema("column name is empty".into()));
            }
            if col.name.contains([':', ',', '\n', '\r']) {
                return Err(Error::Schema(format!(
                    "column name {:?} contains a reserved character",
                    col.name
                )));
            }
            if !seen.insert(col.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column name {:?}", col.name)));
            }
            if col.kind == ColumnKind::Target {
                targets += 1;
            }
        }
        if targets != 1 {
            return Err(Error::Schema(format!(
                "schema must declare exactly one target column, found {targets}"
            )));
        }
        Ok(Schema { columns })
    }

    /// Parses `name:kind` entries separated by newlines or commas.
    /// Lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut columns = Vec::new();
        for part in text.split(['\n', ',']) {
            let part = part.trim();
            if part.is_empty() || part.starts_with('#') {
                continue;
            }
            let (name, kind) = part.split_once(':').ok_or_else(|| {
                Error::Schema(format!("expected \"name:kind\", found {part:?}"))
            })?;
            columns.push(ColumnSchema::new(name.trim(), kind.trim().parse::<ColumnKind>()?));
        }
        Schema::new(columns)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for col in &self.columns {
            out.push_str(&col.name);
            out.push(':');
            out.push_str(col.kind.as_str());
            out.push('\n');
        }
        out
    }

    pub fn columns(&self) -> &[ColumnSchema] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn target_name(&self) -> &str {
        self.columns
            .iter()
            .find(|c| c.kind == ColumnKind::Target)
            .map(|c| c.name.as_str())
            .expect("validated schema has a target")
    }

    fn names_of(&self, kind: ColumnKind) -> impl Iterator<Item = &str> {
        self.columns.iter().filter(move |c| c.kind == kind).map(|c| c.name.as_str())
    }
}

/// One interned categorical column: dense codes plus the label dictionary.
///
/// Codes index into `labels`; the dictionary may contain labels that no row
/// currently uses (e.g. after a split).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatColumn {
    pub codes: Vec<u32>,
    pub labels: Vec<String>,
}

/// A fixed-schema table of categorical, numeric and target columns.
#[derive(Debug, Clone)]
pub struct Dataset {
    schema: Schema,
    n_rows: usize,
    cat: Vec<CatColumn>,
    num: Vec<Vec<f64>>,
    target: Vec<u8>,
}

impl Dataset {
    /// Assembles a dataset from pre-built columns, in schema order per kind.
    pub fn from_parts(
        schema: Schema,
        cat: Vec<CatColumn>,
        num: Vec<Vec<f64>>,
        target: Vec<u8>,
    ) -> Result<Self> {
        let want_cat = schema.names_of(ColumnKind::Categorical).count();
        let want_num = schema.names_of(ColumnKind::Numeric).count();
        if cat.len() != want_cat || num.len() != want_num {
            return Err(Error::Shape(format!(
                "schema declares {want_cat} categorical and {want_num} numeric columns, \
                 got {} and {}",
                cat.len(),
                num.len()
            )));
        }
        let n_rows = target.len();
        if n_rows == 0 {
            return Err(Error::EmptyInput);
        }
        for col in &cat {
            if col.codes.len() != n_rows {
                return Err(Error::Shape(format!(
                    "categorical column has {} rows, target has {n_rows}",
                    col.codes.len()
                )));
            }
            if let Some(bad) = col.codes.iter().find(|&&c| c as usize >= col.labels.len()) {
                return Err(Error::Shape(format!(
                    "code {bad} out of range for a dictionary of {} labels",
                    col.labels.len()
                )));
            }
        }
        for col in &num {
            if col.len() != n_rows {
                return Err(Error::Shape(format!(
                    "numeric column has {} rows, target has {n_rows}",
                    col.len()
                )));
            }
        }
        if let Some(bad) = target.iter().find(|&&t| t > 1) {
            return Err(Error::Parse {
                row: None,
                message: format!("target must be 0 or 1, found {bad}"),
            });
        }
        Ok(Dataset { schema, n_rows, cat, num, target })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn target(&self) -> &[u8] {
        &self.target
    }

    pub fn target_f64(&self) -> Vec<f64> {
        self.target.iter().map(|&t| f64::from(t)).collect()
    }

    pub fn n_categorical(&self) -> usize {
        self.cat.len()
    }

    pub fn n_numeric(&self) -> usize {
        self.num.len()
    }

    pub fn categorical(&self, index: usize) -> &CatColumn {
        &self.cat[index]
    }

    pub fn numeric(&self, index: usize) -> &[f64] {
        &self.num[index]
    }

    pub fn categorical_name(&self, index: usize) -> &str {
        self.schema.names_of(ColumnKind::Categorical).nth(index).expect("index in range")
    }

    pub fn numeric_name(&self, index: usize) -> &str {
        self.schema.names_of(ColumnKind::Numeric).nth(index).expect("index in range")
    }

    pub fn categorical_index(&self, name: &str) -> Option<usize> {
        self.schema.names_of(ColumnKind::Categorical).position(|n| n == name)
    }

    /// Gathers the given rows into a new dataset. Dictionaries are carried
    /// over unchanged so codes stay aligned across the pieces.
    fn take_rows(&self, rows: &[usize]) -> Dataset {
        let cat = self
            .cat
            .iter()
            .map(|col| CatColumn {
                codes: rows.iter().map(|&r| col.codes[r]).collect(),
                labels: col.labels.clone(),
            })
            .collect();
        let num = self
            .num
            .iter()
            .map(|col| rows.iter().map(|&r| col[r]).collect())
            .collect();
        let target = rows.iter().map(|&r| self.target[r]).collect();
        Dataset { schema: self.schema.clone(), n_rows: rows.len(), cat, num, target }
    }
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        // NaN cells compare by bit pattern so round-trip checks can use `==`.
        self.schema == other.schema
            && self.target == other.target
            && self.cat == other.cat
            && self.num.len() == other.num.len()
            && self.num.iter().zip(&other.num).all(|(a, b)| {
                a.len() == b.len()
                    && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub has_header: bool,
    /// Cell content treated as missing (exact match, both kinds of column).
    pub missing: String,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions { delimiter: b',', has_header: true, missing: String::new() }
    }
}

fn csv_error(row: Option<usize>, err: csv::Error) -> Error {
    if err.is_io_error() {
        if let csv::ErrorKind::Io(io_err) = err.into_kind() {
            return Error::Io(io_err);
        }
        unreachable!("is_io_error implies an Io kind");
    }
    Error::Parse { row, message: err.to_string() }
}

enum ColBuilder {
    Cat { codes: Vec<u32>, labels: Vec<String>, index: HashMap<String, u32> },
    Num(Vec<f64>),
    Target(Vec<u8>),
}

impl ColBuilder {
    fn new(kind: ColumnKind) -> Self {
        match kind {
            ColumnKind::Categorical => {
                ColBuilder::Cat { codes: Vec::new(), labels: Vec::new(), index: HashMap::new() }
            }
            ColumnKind::Numeric => ColBuilder::Num(Vec::new()),
            ColumnKind::Target => ColBuilder::Target(Vec::new()),
        }
    }

    fn push(&mut self, cell: &str, name: &str, row: usize, options: &CsvOptions) -> Result<()> {
        let missing = cell == options.missing;
        match self {
            ColBuilder::Cat { codes, labels, index } => {
                let label = if missing { MISSING_LABEL } else { cell };
                let code = match index.get(label) {
                    Some(&code) => code,
                    None => {
                        let code = labels.len() as u32;
                        labels.push(label.to_string());
                        index.insert(label.to_string(), code);
                        code
                    }
                };
                codes.push(code);
            }
            ColBuilder::Num(values) => {
                if missing {
                    values.push(f64::NAN);
                } else {
                    let v = cell.trim().parse::<f64>().map_err(|_| Error::Parse {
                        row: Some(row),
                        message: format!("column {name:?}: expected a number, found {cell:?}"),
                    })?;
                    values.push(v);
                }
            }
            ColBuilder::Target(values) => match cell.trim() {
                "0" => values.push(0),
                "1" => values.push(1),
                other => {
                    return Err(Error::Parse {
                        row: Some(row),
                        message: format!("column {name:?}: target must be 0 or 1, found {other:?}"),
                    });
                }
            },
        }
        Ok(())
    }
}

/// Reads a delimited file against a declared schema.
///
/// With a header, columns are located by name and extra file columns are
/// ignored; a declared column absent from the header is a schema error.
/// Without a header, the first `schema.len()` fields map to the schema in
/// order.
pub fn read_csv<R: io::Read>(reader: R, schema: &Schema, options: &CsvOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .flexible(false)
        .from_reader(reader);
    let mut records = rdr.records();

    let positions: Vec<usize> = if options.has_header {
        let header = match records.next() {
            None => return Err(Error::EmptyInput),
            Some(rec) => rec.map_err(|e| csv_error(None, e))?,
        };
        schema
            .columns()
            .iter()
            .map(|col| {
                header.iter().position(|h| h == col.name).ok_or_else(|| {
                    Error::Schema(format!("CSV header lacks declared column {:?}", col.name))
                })
            })
            .collect::<Result<_>>()?
    } else {
        (0..schema.len()).collect()
    };

    let mut builders: Vec<ColBuilder> =
        schema.columns().iter().map(|c| ColBuilder::new(c.kind)).collect();
    let mut row = 0usize;
    for rec in records {
        let rec = rec.map_err(|e| csv_error(Some(row), e))?;
        for ((col, builder), &pos) in schema.columns().iter().zip(&mut builders).zip(&positions) {
            let cell = rec.get(pos).ok_or_else(|| Error::Parse {
                row: Some(row),
                message: format!(
                    "record has {} fields, column {:?} expected at field {pos}",
                    rec.len(),
                    col.name
                ),
            })?;
            builder.push(cell, &col.name, row, options)?;
        }
        row += 1;
    }
    if row == 0 {
        return Err(Error::EmptyInput);
    }

    let mut cat = Vec::new();
    let mut num = Vec::new();
    let mut target = Vec::new();
    for builder in builders {
        match builder {
            ColBuilder::Cat { codes, labels, .. } => cat.push(CatColumn { codes, labels }),
            ColBuilder::Num(values) => num.push(values),
            ColBuilder::Target(values) => target = values,
        }
    }
    Dataset::from_parts(schema.clone(), cat, num, target)
}

pub fn load_csv(path: &Path, schema: &Schema, options: &CsvOptions) -> Result<Dataset> {
    read_csv(fs::File::open(path)?, schema, options)
}

/// Writes a dataset back to delimited text. Missing numeric cells and
/// categorical labels equal to the missing token are written as the token,
/// so they read back as missing.
pub fn render_csv<W: io::Write>(ds: &Dataset, writer: W, options: &CsvOptions) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().delimiter(options.delimiter).from_writer(writer);
    if options.has_header {
        let names: Vec<&str> = ds.schema.columns().iter().map(|c| c.name.as_str()).collect();
        wtr.write_record(&names).map_err(|e| csv_error(None, e))?;
    }
    let mut record: Vec<String> = Vec::with_capacity(ds.schema.len());
    for row in 0..ds.n_rows {
        record.clear();
        let (mut ci, mut ni) = (0usize, 0usize);
        for col in ds.schema.columns() {
            match col.kind {
                ColumnKind::Categorical => {
                    let c = &ds.cat[ci];
                    record.push(c.labels[c.codes[row] as usize].clone());
                    ci += 1;
                }
                ColumnKind::Numeric => {
                    let v = ds.num[ni][row];
                    record.push(if v.is_nan() {
                        options.missing.clone()
                    } else {
                        textfmt::format_f64(v)
                    });
                    ni += 1;
                }
                ColumnKind::Target => record.push(ds.target[row].to_string()),
            }
        }
        wtr.write_record(&record).map_err(|e| csv_error(Some(row), e))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_csv(ds: &Dataset, path: &Path, options: &CsvOptions) -> Result<()> {
    let mut buf = Vec::new();
    render_csv(ds, &mut buf, options)?;
    fs::write(path, buf)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// Cut the rows in file order: a temporal split when rows are ordered
    /// in time.
    Sequential,
    /// Permute the rows with a seeded shuffle before cutting.
    Shuffled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub mode: SplitMode,
    /// Shuffle seed; ignored in sequential mode.
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { train_fraction: 2.0 / 3.0, mode: SplitMode::Sequential, seed: 0 }
    }
}

/// Splits a dataset into train and validation parts of
/// `round(train_fraction * n)` and the remaining rows.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::Split(format!(
            "train_fraction must lie strictly between 0 and 1, got {}",
            spec.train_fraction
        )));
    }
    let n = ds.n_rows();
    let k = (spec.train_fraction * n as f64).round() as usize;
    if k == 0 || k >= n {
        return Err(Error::Split(format!(
            "train_fraction {} of {n} rows leaves one side empty",
            spec.train_fraction
        )));
    }
    let order: Vec<usize> = match spec.mode {
        SplitMode::Sequential => (0..n).collect(),
        SplitMode::Shuffled => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
            order
        }
    };
    Ok((ds.take_rows(&order[..k]), ds.take_rows(&order[k..])))
}
