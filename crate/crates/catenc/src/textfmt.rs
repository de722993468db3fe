//! Line-oriented key/value state files.
//!
//! Encoders and models persist to a small versioned text format: one
//! `key: value` pair per line, followed by optional tab-separated table
//! rows. Floats are written with the shortest representation that parses
//! back to the identical bit pattern, so save/load round-trips are exact
//! and repeated saves of the same value are byte-identical.

use crate::error::{Error, Result};

/// Escapes a label so it survives a tab-separated, line-oriented file.
pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            _ => out.push(ch),
        }
    }
    out
}

/// Inverse of [`escape`]. Rejects dangling or unknown escape sequences.
pub fn unescape(s: &str) -> Result<String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(ch) = chars.next() {
        if ch != '\\' {
            out.push(ch);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => {
                return Err(Error::Format(format!("unknown escape sequence \\{other}")));
            }
            None => return Err(Error::Format("dangling escape at end of field".into())),
        }
    }
    Ok(out)
}

/// Formats a float with the shortest digits that round-trip via `FromStr`.
pub fn format_f64(v: f64) -> String {
    format!("{v}")
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Format(format!("expected a float, found {s:?}")))
}

pub fn parse_usize(s: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| Error::Format(format!("expected an unsigned integer, found {s:?}")))
}

pub fn parse_u64(s: &str) -> Result<u64> {
    s.trim()
        .parse::<u64>()
        .map_err(|_| Error::Format(format!("expected an unsigned integer, found {s:?}")))
}

/// Sequential reader over the lines of a state file.
pub struct LineReader<'a> {
    lines: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> LineReader<'a> {
    pub fn new(text: &'a str) -> Self {
        LineReader { lines: text.lines(), line_no: 0 }
    }

    /// Returns the next line, or a format error if the file ended early.
    pub fn next_line(&mut self) -> Result<&'a str> {
        self.line_no += 1;
        self.lines
            .next()
            .ok_or_else(|| Error::Format(format!("unexpected end of file at line {}", self.line_no)))
    }

    pub fn line_no(&self) -> usize {
        self.line_no
    }

    /// Reads a `key: value` line and returns the value, checking the key.
    pub fn expect_key(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next_line()?;
        let (found, value) = line
            .split_once(": ")
            .ok_or_else(|| Error::Format(format!("line {}: expected \"{key}: ...\"", self.line_no)))?;
        if found != key {
            return Err(Error::Format(format!(
                "line {}: expected key {key:?}, found {found:?}",
                self.line_no
            )));
        }
        Ok(value)
    }

    /// Checks the `version: 1` / `kind: ...` preamble shared by all state files.
    pub fn expect_header(&mut self, kind: &str) -> Result<()> {
        let version = self.expect_key("version")?;
        if version != "1" {
            return Err(Error::Format(format!("unknown state file version {version:?}")));
        }
        let found = self.expect_key("kind")?;
        if found != kind {
            return Err(Error::Format(format!(
                "expected a {kind:?} state file, found kind {found:?}"
            )));
        }
        Ok(())
    }

    /// Asserts that the file has no content left.
    pub fn expect_end(&mut self) -> Result<()> {
        match self.lines.next() {
            None => Ok(()),
            Some(extra) => Err(Error::Format(format!(
                "trailing content at line {}: {extra:?}",
                self.line_no + 1
            ))),
        }
    }
}

pub const HEADER_VERSION: &str = "version: 1";

pub fn push_header(out: &mut String, kind: &str) {
    out.push_str(HEADER_VERSION);
    out.push('\n');
    out.push_str("kind: ");
    out.push_str(kind);
    out.push('\n');
}
