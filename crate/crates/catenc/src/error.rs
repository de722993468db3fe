use std::fmt;
use std::io;

/// Errors produced by dataset handling, encoder fitting, model training and
/// metric evaluation.
#[derive(Debug)]
pub enum Error {
    /// A column schema is inconsistent with itself or with the data it is
    /// applied to (duplicate names, missing target, header mismatch, ...).
    Schema(String),
    /// A cell or a state-file line could not be parsed. `row` is the
    /// zero-based data-row index when the failure came from a data file.
    Parse { row: Option<usize>, message: String },
    /// An input that must contain at least one row was empty.
    EmptyInput,
    /// A split specification cannot be satisfied by the given dataset.
    Split(String),
    /// Two slices that must have matching lengths (or a required minimum
    /// length) do not.
    Shape(String),
    /// A hyperparameter is outside its valid range.
    Config(String),
    /// An exact weight-of-evidence computation hit an empty class cell for
    /// the named category.
    DivisionByZero { category: String },
    /// A state file has an unknown version or a malformed structure.
    Format(String),
    /// The target column is unusable for the requested loss (e.g. a single
    /// class under logistic loss).
    DegenerateTarget(String),
    /// A metric has no defined value for the given inputs (no positive
    /// labels, zero baseline, ...).
    UndefinedMetric(String),
    /// An underlying I/O operation failed.
    Io(io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Schema(msg) => write!(f, "schema error: {msg}"),
            Error::Parse { row: Some(row), message } => {
                write!(f, "parse error at data row {row}: {message}")
            }
            Error::Parse { row: None, message } => write!(f, "parse error: {message}"),
            Error::EmptyInput => write!(f, "input contains no data rows"),
            Error::Split(msg) => write!(f, "split error: {msg}"),
            Error::Shape(msg) => write!(f, "shape error: {msg}"),
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::DivisionByZero { category } => write!(
                f,
                "division by zero: category {category:?} has an empty class cell and no smoothing"
            ),
            Error::Format(msg) => write!(f, "format error: {msg}"),
            Error::DegenerateTarget(msg) => write!(f, "degenerate target: {msg}"),
            Error::UndefinedMetric(msg) => write!(f, "undefined metric: {msg}"),
            Error::Io(err) => write!(f, "io error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<io::Error> for Error {
    fn from(err: io::Error) -> Self {
        Error::Io(err)
    }
}

pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_includes_row_index() {
        let err = Error::Parse { row: Some(41), message: "bad target \"2\"".into() };
        assert_eq!(err.to_string(), "parse error at data row 41: bad target \"2\"");
    }

    #[test]
    fn division_by_zero_names_the_category() {
        let err = Error::DivisionByZero { category: "grocery".into() };
        assert!(err.to_string().contains("\"grocery\""));
    }

    #[test]
    fn io_error_exposes_source() {
        let err = Error::from(io::Error::new(io::ErrorKind::NotFound, "gone"));
        assert!(std::error::Error::source(&err).is_some());
    }
}
