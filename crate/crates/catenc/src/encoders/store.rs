//! Versioned text persistence for fitted encoders.
//!
//! Layout: a `version`/`kind` preamble, the encoder kind and its
//! hyperparameters as `key: value` lines, then one `label<TAB>value` row
//! per mapped category in label order. Labels are escaped, values use
//! shortest-round-trip decimals, so files are byte-stable and loads are
//! bit-exact.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{EncoderKind, FitParams, FittedEncoder};
use crate::error::{Error, Result};
use crate::textfmt::{self, LineReader};

fn push_kv_f64(out: &mut String, key: &str, value: f64) {
    out.push_str(key);
    out.push_str(": ");
    out.push_str(&textfmt::format_f64(value));
    out.push('\n');
}

impl FittedEncoder {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        textfmt::push_header(&mut out, "encoder");
        out.push_str("encoder: ");
        out.push_str(self.kind().as_str());
        out.push('\n');
        match &self.params {
            FitParams::Target { k, f } => {
                push_kv_f64(&mut out, "k", *k);
                push_kv_f64(&mut out, "f", *f);
            }
            FitParams::MEstimate { m } => push_kv_f64(&mut out, "m", *m),
            FitParams::CatboostOrdered { m, permutation_seed } => {
                push_kv_f64(&mut out, "m", *m);
                out.push_str("permutation_seed: ");
                out.push_str(&permutation_seed.to_string());
                out.push('\n');
            }
            FitParams::Pozzolo { variant, epsilon } => {
                out.push_str("variant: ");
                out.push_str(variant.as_str());
                out.push('\n');
                push_kv_f64(&mut out, "epsilon", *epsilon);
            }
            FitParams::JamesStein => {}
            FitParams::Woe { gamma } => push_kv_f64(&mut out, "gamma", *gamma),
        }
        push_kv_f64(&mut out, "prior", self.prior);
        push_kv_f64(&mut out, "fallback", self.fallback);
        out.push_str("categories: ");
        out.push_str(&self.mapping.len().to_string());
        out.push('\n');
        for (label, value) in &self.mapping {
            out.push_str(&textfmt::escape(label));
            out.push('\t');
            out.push_str(&textfmt::format_f64(*value));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = LineReader::new(text);
        r.expect_header("encoder")?;
        let kind_name = r.expect_key("encoder")?;
        let kind = kind_name
            .parse::<EncoderKind>()
            .map_err(|_| Error::Format(format!("unknown encoder kind {kind_name:?}")))?;
        let params = match kind {
            EncoderKind::Target => FitParams::Target {
                k: textfmt::parse_f64(r.expect_key("k")?)?,
                f: textfmt::parse_f64(r.expect_key("f")?)?,
            },
            EncoderKind::MEstimate => {
                FitParams::MEstimate { m: textfmt::parse_f64(r.expect_key("m")?)? }
            }
            EncoderKind::CatboostOrdered => FitParams::CatboostOrdered {
                m: textfmt::parse_f64(r.expect_key("m")?)?,
                permutation_seed: textfmt::parse_u64(r.expect_key("permutation_seed")?)?,
            },
            EncoderKind::Pozzolo => {
                let variant_name = r.expect_key("variant")?;
                FitParams::Pozzolo {
                    variant: variant_name.parse().map_err(|_| {
                        Error::Format(format!("unknown pozzolo variant {variant_name:?}"))
                    })?,
                    epsilon: textfmt::parse_f64(r.expect_key("epsilon")?)?,
                }
            }
            EncoderKind::JamesStein => FitParams::JamesStein,
            EncoderKind::Woe => {
                FitParams::Woe { gamma: textfmt::parse_f64(r.expect_key("gamma")?)? }
            }
        };
        let prior = textfmt::parse_f64(r.expect_key("prior")?)?;
        let fallback = textfmt::parse_f64(r.expect_key("fallback")?)?;
        let n_categories = textfmt::parse_usize(r.expect_key("categories")?)?;
        if n_categories == 0 {
            return Err(Error::Format("encoder maps no categories".into()));
        }
        let mut mapping = BTreeMap::new();
        for _ in 0..n_categories {
            let line = r.next_line()?;
            let (label, value) = line.split_once('\t').ok_or_else(|| {
                Error::Format(format!("line {}: expected label<TAB>value", r.line_no()))
            })?;
            let label = textfmt::unescape(label)?;
            let value = textfmt::parse_f64(value)?;
            if mapping.insert(label, value).is_some() {
                return Err(Error::Format(format!(
                    "line {}: duplicate category label",
                    r.line_no()
                )));
            }
        }
        r.expect_end()?;
        Ok(FittedEncoder { params, mapping, prior, fallback })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

pub fn save_encoder(enc: &FittedEncoder, path: &Path) -> Result<()> {
    enc.save(path)
}

pub fn load_encoder(path: &Path) -> Result<FittedEncoder> {
    FittedEncoder::load(path)
}
