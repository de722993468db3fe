//! Losses, their first and second derivatives, and base scores.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    SquaredError,
    Logistic,
}

impl Loss {
    pub fn as_str(self) -> &'static str {
        match self {
            Loss::SquaredError => "squared_error",
            Loss::Logistic => "logistic",
        }
    }
}

impl std::fmt::Display for Loss {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared_error" => Ok(Loss::SquaredError),
            "logistic" => Ok(Loss::Logistic),
            other => Err(Error::Config(format!(
                "unknown loss {other:?}; expected squared_error or logistic"
            ))),
        }
    }
}

/// Numerically stable `1 / (1 + e^{-x})`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Per-row gradients and hessians of a loss at the current raw scores.
#[derive(Debug, Clone, PartialEq)]
pub struct GradHess {
    pub g: Vec<f64>,
    pub h: Vec<f64>,
}

/// Per-row derivatives w.r.t. the raw score; the 1/n factor of the mean
/// loss is dropped (absorbed by the learning rate). Squared error
/// `½(raw − y)²`: `g = raw − y`, `h = 1`. Logistic: `g = σ(raw) − y`,
/// `h = σ(raw)(1 − σ(raw))`.
pub fn grad_hess(loss: Loss, y: &[f64], raw: &[f64]) -> Result<GradHess> {
    if y.len() != raw.len() {
        return Err(Error::Shape(format!("{} labels against {} scores", y.len(), raw.len())));
    }
    let mut g = Vec::with_capacity(y.len());
    let mut h = Vec::with_capacity(y.len());
    match loss {
        Loss::SquaredError => {
            for (&yi, &ri) in y.iter().zip(raw) {
                g.push(ri - yi);
                h.push(1.0);
            }
        }
        Loss::Logistic => {
            for (&yi, &ri) in y.iter().zip(raw) {
                let p = sigmoid(ri);
                g.push(p - yi);
                h.push(p * (1.0 - p));
            }
        }
    }
    Ok(GradHess { g, h })
}

/// Mean training loss at the given raw scores.
pub fn loss_value(loss: Loss, y: &[f64], raw: &[f64]) -> Result<f64> {
    if y.len() != raw.len() {
        return Err(Error::Shape(format!("{} labels against {} scores", y.len(), raw.len())));
    }
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    let total: f64 = match loss {
        Loss::SquaredError => {
            y.iter().zip(raw).map(|(&yi, &ri)| 0.5 * (ri - yi) * (ri - yi)).sum()
        }
        // −[y ln p + (1−y) ln(1−p)] = softplus(raw) − y·raw
        Loss::Logistic => y.iter().zip(raw).map(|(&yi, &ri)| softplus(ri) - yi * ri).sum(),
    };
    Ok(total / y.len() as f64)
}

/// Constant starting score: the target mean, or its log-odds for logistic.
pub fn base_score(loss: Loss, y: &[f64]) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    match loss {
        Loss::SquaredError => Ok(mean),
        Loss::Logistic => {
            if mean <= 0.0 || mean >= 1.0 {
                return Err(Error::DegenerateTarget(format!(
                    "logistic loss needs both classes in the target, positive rate is {mean}"
                )));
            }
            Ok((mean / (1.0 - mean)).ln())
        }
    }
}
