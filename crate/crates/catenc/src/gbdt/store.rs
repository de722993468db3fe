//! Plain-text persistence for boosted models.
//!
//! The file carries the model header, the feature kinds, then each tree's
//! nodes in pre-order, one per line, closed by an `end` line:
//!
//! ```text
//! version: 1
//! kind: gbdt_model
//! loss: logistic
//! base_score: -0.5
//! learning_rate: 0.1
//! categorical_mode: builtin_sorted
//! features: 2
//! feature: numeric
//! feature: categorical
//! trees: 1
//! tree: 0
//! branch feature=1 left=0,2 right=1 default=left
//! leaf value=0.25
//! leaf value=-0.125
//! end
//! ```
//!
//! Floats use the shortest representation that round-trips, so a fitted
//! model and its reloaded copy produce identical predictions and identical
//! files.

use std::fs;
use std::path::Path;

use super::split::{SplitKind, SplitRule};
use super::tree::{Node, Tree};
use super::{BoostedModel, CategoricalMode, FeatureKind, Loss};
use crate::error::{Error, Result};
use crate::textfmt::{format_f64, parse_f64, parse_usize, push_header, LineReader};

const KIND: &str = "gbdt_model";
const MAX_PARSE_DEPTH: usize = 64;

fn push_node(out: &mut String, nodes: &[Node], at: usize) {
    match &nodes[at] {
        Node::Leaf { value } => {
            out.push_str("leaf value=");
            out.push_str(&format_f64(*value));
            out.push('\n');
        }
        Node::Branch { rule, left, right } => {
            match &rule.kind {
                SplitKind::NumericThreshold { threshold, default_left } => {
                    out.push_str(&format!(
                        "branch feature={} threshold={} default={}\n",
                        rule.feature,
                        format_f64(*threshold),
                        if *default_left { "left" } else { "right" },
                    ));
                }
                SplitKind::CategorySet { left, right, default_left } => {
                    let join = |codes: &[u32]| {
                        codes.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
                    };
                    out.push_str(&format!(
                        "branch feature={} left={} right={} default={}\n",
                        rule.feature,
                        join(left),
                        join(right),
                        if *default_left { "left" } else { "right" },
                    ));
                }
            }
            push_node(out, nodes, *left as usize);
            push_node(out, nodes, *right as usize);
        }
    }
}

impl BoostedModel {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        push_header(&mut out, KIND);
        out.push_str(&format!("loss: {}\n", self.loss.as_str()));
        out.push_str(&format!("base_score: {}\n", format_f64(self.base_score)));
        out.push_str(&format!("learning_rate: {}\n", format_f64(self.learning_rate)));
        out.push_str(&format!("categorical_mode: {}\n", self.categorical_mode.as_str()));
        out.push_str(&format!("features: {}\n", self.feature_kinds.len()));
        for kind in &self.feature_kinds {
            out.push_str(&format!("feature: {}\n", kind.as_str()));
        }
        out.push_str(&format!("trees: {}\n", self.trees.len()));
        for (index, tree) in self.trees.iter().enumerate() {
            out.push_str(&format!("tree: {index}\n"));
            push_node(&mut out, &tree.nodes, 0);
            out.push_str("end\n");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut reader = LineReader::new(text);
        reader.expect_header(KIND)?;
        let loss: Loss = reader.expect_key("loss")?.parse()?;
        let base_score = parse_f64(reader.expect_key("base_score")?)?;
        let learning_rate = parse_f64(reader.expect_key("learning_rate")?)?;
        let categorical_mode: CategoricalMode =
            reader.expect_key("categorical_mode")?.parse()?;
        if !base_score.is_finite() {
            return Err(Error::Format(format!("base_score must be finite, got {base_score}")));
        }
        if !(learning_rate > 0.0 && learning_rate <= 1.0) {
            return Err(Error::Format(format!(
                "learning_rate must be in (0, 1], got {learning_rate}"
            )));
        }

        let n_features = parse_usize(reader.expect_key("features")?)?;
        if n_features == 0 {
            return Err(Error::Format("a model needs at least one feature".into()));
        }
        let mut feature_kinds = Vec::with_capacity(n_features);
        for _ in 0..n_features {
            feature_kinds.push(match reader.expect_key("feature")? {
                "numeric" => FeatureKind::Numeric,
                "categorical" => FeatureKind::Categorical,
                other => {
                    return Err(Error::Format(format!("unknown feature kind {other:?}")))
                }
            });
        }

        let n_trees = parse_usize(reader.expect_key("trees")?)?;
        let mut trees = Vec::with_capacity(n_trees);
        for index in 0..n_trees {
            let label = reader.expect_key("tree")?;
            if parse_usize(label)? != index {
                return Err(Error::Format(format!(
                    "expected tree {index}, found tree {label}"
                )));
            }
            let mut nodes = Vec::new();
            parse_node(&mut reader, &mut nodes, &feature_kinds, categorical_mode, 0)?;
            let line = reader.next_line()?;
            if line != "end" {
                return Err(Error::Format(format!(
                    "line {}: expected \"end\" after tree {index}, found {line:?}",
                    reader.line_no()
                )));
            }
            trees.push(Tree { nodes });
        }
        reader.expect_end()?;
        Ok(BoostedModel {
            base_score,
            learning_rate,
            loss,
            categorical_mode,
            feature_kinds,
            trees,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        BoostedModel::from_text(&fs::read_to_string(path)?)
    }
}

/// Reads one node line plus, for branches, both subtrees; returns the
/// node's index within `nodes` (pre-order layout).
fn parse_node(
    reader: &mut LineReader,
    nodes: &mut Vec<Node>,
    feature_kinds: &[FeatureKind],
    mode: CategoricalMode,
    depth: usize,
) -> Result<u32> {
    if depth > MAX_PARSE_DEPTH {
        return Err(Error::Format(format!("tree deeper than {MAX_PARSE_DEPTH} levels")));
    }
    let line_no = reader.line_no() + 1;
    let line = reader.next_line()?;
    let bad = |message: String| Error::Format(format!("line {line_no}: {message}"));
    let mut words = line.split(' ');
    let id = nodes.len() as u32;
    match words.next() {
        Some("leaf") => {
            let value = parse_f64(field(words.next(), "value").map_err(&bad)?)?;
            if words.next().is_some() {
                return Err(bad("trailing fields after leaf value".into()));
            }
            nodes.push(Node::Leaf { value });
        }
        Some("branch") => {
            let feature = parse_usize(field(words.next(), "feature").map_err(&bad)?)?;
            let Some(kind) = feature_kinds.get(feature) else {
                return Err(bad(format!("feature {feature} is out of range")));
            };
            let second = words.next().ok_or_else(|| bad("truncated branch".into()))?;
            let rule_kind = if let Ok(threshold) = field(Some(second), "threshold") {
                if *kind == FeatureKind::Categorical && mode == CategoricalMode::BuiltinSorted {
                    return Err(bad(format!(
                        "threshold rule on categorical feature {feature} under builtin_sorted"
                    )));
                }
                let threshold = parse_f64(threshold)?;
                if !threshold.is_finite() {
                    return Err(bad(format!("threshold must be finite, got {threshold}")));
                }
                let default_left =
                    parse_default(field(words.next(), "default").map_err(&bad)?).map_err(&bad)?;
                SplitKind::NumericThreshold { threshold, default_left }
            } else {
                if *kind != FeatureKind::Categorical {
                    return Err(bad(format!("set rule on numeric feature {feature}")));
                }
                let left = parse_codes(field(Some(second), "left").map_err(&bad)?).map_err(&bad)?;
                let right =
                    parse_codes(field(words.next(), "right").map_err(&bad)?).map_err(&bad)?;
                if let Some(dup) = left.iter().find(|c| right.binary_search(c).is_ok()) {
                    return Err(bad(format!("code {dup} appears on both sides")));
                }
                let default_left =
                    parse_default(field(words.next(), "default").map_err(&bad)?).map_err(&bad)?;
                SplitKind::CategorySet { left, right, default_left }
            };
            if words.next().is_some() {
                return Err(bad("trailing fields after branch".into()));
            }
            nodes.push(Node::Branch {
                rule: SplitRule { feature, kind: rule_kind },
                left: 0,
                right: 0,
            });
            let left = parse_node(reader, nodes, feature_kinds, mode, depth + 1)?;
            let right = parse_node(reader, nodes, feature_kinds, mode, depth + 1)?;
            let Node::Branch { left: lf, right: rf, .. } = &mut nodes[id as usize] else {
                unreachable!();
            };
            *lf = left;
            *rf = right;
        }
        other => return Err(bad(format!("expected leaf or branch, found {other:?}"))),
    }
    Ok(id)
}

fn field<'a>(word: Option<&'a str>, name: &str) -> std::result::Result<&'a str, String> {
    let word = word.ok_or_else(|| format!("missing {name}= field"))?;
    match word.split_once('=') {
        Some((key, value)) if key == name => Ok(value),
        _ => Err(format!("expected {name}= field, found {word:?}")),
    }
}

fn parse_default(value: &str) -> std::result::Result<bool, String> {
    match value {
        "left" => Ok(true),
        "right" => Ok(false),
        other => Err(format!("default must be left or right, found {other:?}")),
    }
}

fn parse_codes(value: &str) -> std::result::Result<Vec<u32>, String> {
    let mut codes = Vec::new();
    for part in value.split(',') {
        let code: u32 =
            part.parse().map_err(|_| format!("bad category code {part:?}"))?;
        if codes.last().is_some_and(|&last| last >= code) {
            return Err(format!("category codes must be strictly increasing at {code}"));
        }
        codes.push(code);
    }
    Ok(codes)
}

/// Writes a fitted model to `path` in the versioned text format.
pub fn save_model(model: &BoostedModel, path: &Path) -> Result<()> {
    model.save(path)
}

/// Reads a model written by [`save_model`].
pub fn load_model(path: &Path) -> Result<BoostedModel> {
    BoostedModel::load(path)
}
