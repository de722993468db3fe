//! A small gradient-boosted decision tree learner with second-order
//! (Newton) updates.
//!
//! Each round fits one regression tree to the per-row gradients and
//! hessians of the loss at the current raw scores, then adds the tree's
//! output scaled by the learning rate. Leaf weights are the Newton step
//! `−G/(H+λ₂)`. Numeric features are quantile-binned once up front;
//! categorical features either keep their raw codes and receive set-based
//! splits ([`CategoricalMode::BuiltinSorted`]) or are coerced to numeric
//! values and threshold-split like any other column
//! ([`CategoricalMode::CodesAsNumeric`]).

mod binning;
mod loss;
mod split;
mod store;
mod tree;

pub use loss::{base_score, grad_hess, loss_value, sigmoid, GradHess, Loss};
pub use split::{find_split_categorical_builtin, find_split_numeric, SplitKind, SplitRule};
pub use store::{load_model, save_model};
pub use tree::{Node, Tree};

use crate::error::{Error, Result};
use binning::bin_feature;
use tree::grow_tree;

/// How categorical features enter the tree grower.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CategoricalMode {
    /// Treat the integer code of each category as a numeric value.
    CodesAsNumeric,
    /// Native set-based splits over categories, found by sorting the
    /// categories present at a node by their gradient statistics.
    BuiltinSorted,
}

impl CategoricalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CategoricalMode::CodesAsNumeric => "codes_as_numeric",
            CategoricalMode::BuiltinSorted => "builtin_sorted",
        }
    }
}

impl std::fmt::Display for CategoricalMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CategoricalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "codes_as_numeric" => Ok(CategoricalMode::CodesAsNumeric),
            "builtin_sorted" => Ok(CategoricalMode::BuiltinSorted),
            other => Err(Error::Config(format!("unknown categorical mode {other:?}"))),
        }
    }
}

/// The type of one input column, as the model sees it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Numeric => "numeric",
            FeatureKind::Categorical => "categorical",
        }
    }
}

/// One input column. Missing numeric values are NaN; categorical codes
/// must be below `n_categories`.
#[derive(Debug, Clone, PartialEq)]
pub enum Feature {
    Numeric(Vec<f64>),
    Categorical { codes: Vec<u32>, n_categories: usize },
}

impl Feature {
    fn len(&self) -> usize {
        match self {
            Feature::Numeric(values) => values.len(),
            Feature::Categorical { codes, .. } => codes.len(),
        }
    }

    fn kind(&self) -> FeatureKind {
        match self {
            Feature::Numeric(_) => FeatureKind::Numeric,
            Feature::Categorical { .. } => FeatureKind::Categorical,
        }
    }
}

/// A column-major design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub(crate) features: Vec<Feature>,
    n_rows: usize,
}

impl FeatureMatrix {
    pub fn new(features: Vec<Feature>) -> Result<Self> {
        let Some(first) = features.first() else {
            return Err(Error::Shape("a feature matrix needs at least one feature".into()));
        };
        let n_rows = first.len();
        for (index, feature) in features.iter().enumerate() {
            if feature.len() != n_rows {
                return Err(Error::Shape(format!(
                    "feature {index} has {} rows, feature 0 has {n_rows}",
                    feature.len()
                )));
            }
            if let Feature::Categorical { codes, n_categories } = feature {
                if let Some(&bad) = codes.iter().find(|&&c| c as usize >= *n_categories) {
                    return Err(Error::Shape(format!(
                        "feature {index} has code {bad} but only {n_categories} categories"
                    )));
                }
            }
        }
        Ok(FeatureMatrix { features, n_rows })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn feature(&self, index: usize) -> &Feature {
        &self.features[index]
    }

    pub fn feature_kinds(&self) -> Vec<FeatureKind> {
        self.features.iter().map(Feature::kind).collect()
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GbdtParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub loss: Loss,
    pub lambda_l2: f64,
    pub max_bins: usize,
    pub categorical_mode: CategoricalMode,
    /// Reserved for stochastic extensions; training is deterministic and
    /// ignores it.
    pub seed: u64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            n_rounds: 100,
            learning_rate: 0.1,
            max_depth: 6,
            min_samples_leaf: 20,
            loss: Loss::Logistic,
            lambda_l2: 1.0,
            max_bins: 255,
            categorical_mode: CategoricalMode::BuiltinSorted,
            seed: 0,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_rounds == 0 {
            return Err(Error::Config("n_rounds must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Config(format!(
                "learning_rate must be in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if self.max_depth == 0 || self.max_depth > 60 {
            return Err(Error::Config(format!(
                "max_depth must be in 1..=60, got {}",
                self.max_depth
            )));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::Config("min_samples_leaf must be at least 1".into()));
        }
        if !(self.lambda_l2 >= 0.0 && self.lambda_l2.is_finite()) {
            return Err(Error::Config(format!(
                "lambda_l2 must be finite and non-negative, got {}",
                self.lambda_l2
            )));
        }
        if self.max_bins < 2 || self.max_bins > u16::MAX as usize - 1 {
            return Err(Error::Config(format!(
                "max_bins must be in 2..=65534, got {}",
                self.max_bins
            )));
        }
        Ok(())
    }
}

/// A feature readied for split search: binned numerics (including coerced
/// codes) or raw categorical codes.
pub(crate) enum PreparedFeature {
    Binned(binning::BinnedFeature),
    Cats { codes: Vec<u32>, n_categories: usize },
}

pub(crate) fn prepare(matrix: &FeatureMatrix, params: &GbdtParams) -> Vec<PreparedFeature> {
    matrix
        .features
        .iter()
        .map(|feature| match feature {
            Feature::Numeric(values) => PreparedFeature::Binned(bin_feature(values, params.max_bins)),
            Feature::Categorical { codes, n_categories } => match params.categorical_mode {
                CategoricalMode::BuiltinSorted => {
                    PreparedFeature::Cats { codes: codes.clone(), n_categories: *n_categories }
                }
                CategoricalMode::CodesAsNumeric => {
                    let values: Vec<f64> = codes.iter().map(|&c| c as f64).collect();
                    PreparedFeature::Binned(bin_feature(&values, params.max_bins))
                }
            },
        })
        .collect()
}

/// A fitted boosted-tree model.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostedModel {
    pub(crate) base_score: f64,
    pub(crate) learning_rate: f64,
    pub(crate) loss: Loss,
    pub(crate) categorical_mode: CategoricalMode,
    pub(crate) feature_kinds: Vec<FeatureKind>,
    pub(crate) trees: Vec<Tree>,
}

impl BoostedModel {
    pub fn base_score(&self) -> f64 {
        self.base_score
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn loss(&self) -> Loss {
        self.loss
    }

    pub fn categorical_mode(&self) -> CategoricalMode {
        self.categorical_mode
    }

    pub fn feature_kinds(&self) -> &[FeatureKind] {
        &self.feature_kinds
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    fn check_features(&self, matrix: &FeatureMatrix) -> Result<()> {
        if matrix.n_features() != self.feature_kinds.len() {
            return Err(Error::Schema(format!(
                "model expects {} features, matrix has {}",
                self.feature_kinds.len(),
                matrix.n_features()
            )));
        }
        for (index, feature) in matrix.features.iter().enumerate() {
            if feature.kind() != self.feature_kinds[index] {
                return Err(Error::Schema(format!(
                    "feature {index} is {}, model expects {}",
                    feature.kind().as_str(),
                    self.feature_kinds[index].as_str()
                )));
            }
        }
        Ok(())
    }

    /// Raw (pre-link) scores: `base + η · Σ tree(x)`.
    pub fn predict_raw(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
        self.check_features(matrix)?;
        let mut raw = vec![self.base_score; matrix.n_rows()];
        for tree in &self.trees {
            for (row, out) in raw.iter_mut().enumerate() {
                *out += self.learning_rate * tree.predict_row(matrix, row);
            }
        }
        Ok(raw)
    }

    /// Scores on the response scale: probabilities for logistic loss, the
    /// raw scores unchanged for squared error.
    pub fn predict(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
        let mut raw = self.predict_raw(matrix)?;
        if self.loss == Loss::Logistic {
            for v in &mut raw {
                *v = sigmoid(*v);
            }
        }
        Ok(raw)
    }
}

fn check_training_input(matrix: &FeatureMatrix, y: &[f64], params: &GbdtParams) -> Result<()> {
    params.validate()?;
    if matrix.n_rows() == 0 {
        return Err(Error::EmptyInput);
    }
    if matrix.n_rows() > u32::MAX as usize {
        return Err(Error::Shape(format!("too many rows: {}", matrix.n_rows())));
    }
    if y.len() != matrix.n_rows() {
        return Err(Error::Shape(format!(
            "target has {} rows, features have {}",
            y.len(),
            matrix.n_rows()
        )));
    }
    if params.loss == Loss::Logistic {
        if let Some(bad) = y.iter().find(|&&v| v != 0.0 && v != 1.0) {
            return Err(Error::Config(format!(
                "logistic loss requires 0/1 targets, found {bad}"
            )));
        }
    }
    if let Some(bad) = y.iter().find(|&&v| !v.is_finite()) {
        return Err(Error::Config(format!("targets must be finite, found {bad}")));
    }
    Ok(())
}

/// Fits a boosted-tree model.
pub fn fit(matrix: &FeatureMatrix, y: &[f64], params: &GbdtParams) -> Result<BoostedModel> {
    fit_with_history(matrix, y, params).map(|(model, _)| model)
}

/// Fits a model and records the mean training loss before boosting and
/// after every round, so `history.len() == n_rounds + 1`.
pub fn fit_with_history(
    matrix: &FeatureMatrix,
    y: &[f64],
    params: &GbdtParams,
) -> Result<(BoostedModel, Vec<f64>)> {
    check_training_input(matrix, y, params)?;
    let base = base_score(params.loss, y)?;
    let prepared = prepare(matrix, params);
    let mut raw = vec![base; matrix.n_rows()];
    let mut history = Vec::with_capacity(params.n_rounds + 1);
    history.push(loss_value(params.loss, y, &raw)?);

    let mut model = BoostedModel {
        base_score: base,
        learning_rate: params.learning_rate,
        loss: params.loss,
        categorical_mode: params.categorical_mode,
        feature_kinds: matrix.feature_kinds(),
        trees: Vec::with_capacity(params.n_rounds),
    };
    for _ in 0..params.n_rounds {
        let gh = grad_hess(params.loss, y, &raw)?;
        let tree = grow_tree(&prepared, &gh, params);
        for (row, out) in raw.iter_mut().enumerate() {
            *out += params.learning_rate * tree.predict_row(matrix, row);
        }
        history.push(loss_value(params.loss, y, &raw)?);
        model.trees.push(tree);
    }
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numeric_matrix(values: Vec<f64>) -> FeatureMatrix {
        FeatureMatrix::new(vec![Feature::Numeric(values)]).unwrap()
    }

    #[test]
    fn params_validation_rejects_bad_settings() {
        let cases: Vec<GbdtParams> = vec![
            GbdtParams { n_rounds: 0, ..GbdtParams::default() },
            GbdtParams { learning_rate: 0.0, ..GbdtParams::default() },
            GbdtParams { learning_rate: 1.5, ..GbdtParams::default() },
            GbdtParams { learning_rate: f64::NAN, ..GbdtParams::default() },
            GbdtParams { max_depth: 0, ..GbdtParams::default() },
            GbdtParams { max_depth: 61, ..GbdtParams::default() },
            GbdtParams { min_samples_leaf: 0, ..GbdtParams::default() },
            GbdtParams { lambda_l2: -1.0, ..GbdtParams::default() },
            GbdtParams { lambda_l2: f64::INFINITY, ..GbdtParams::default() },
            GbdtParams { max_bins: 1, ..GbdtParams::default() },
            GbdtParams { max_bins: 70_000, ..GbdtParams::default() },
        ];
        for params in cases {
            assert!(
                matches!(params.validate(), Err(crate::Error::Config(_))),
                "accepted {params:?}"
            );
        }
        GbdtParams::default().validate().unwrap();
    }

    #[test]
    fn matrix_construction_checks_shapes_and_codes() {
        assert!(matches!(FeatureMatrix::new(vec![]), Err(crate::Error::Shape(_))));
        let uneven = FeatureMatrix::new(vec![
            Feature::Numeric(vec![1.0, 2.0]),
            Feature::Numeric(vec![1.0]),
        ]);
        assert!(matches!(uneven, Err(crate::Error::Shape(_))));
        let bad_code =
            FeatureMatrix::new(vec![Feature::Categorical { codes: vec![0, 3], n_categories: 3 }]);
        assert!(matches!(bad_code, Err(crate::Error::Shape(_))));
    }

    #[test]
    fn one_round_full_step_interpolates_distinct_rows() {
        let values: Vec<f64> = (0..8).map(|v| f64::from(v) * 1.5 - 3.0).collect();
        let y = vec![0.25, -1.0, 2.0, 0.5, 0.125, -0.75, 1.5, 3.0];
        let params = GbdtParams {
            n_rounds: 1,
            learning_rate: 1.0,
            // Deep enough that depth never binds: greedy growth can be
            // lopsided, so 8 rows may need more than ⌈log₂ 8⌉ levels.
            max_depth: 20,
            min_samples_leaf: 1,
            loss: Loss::SquaredError,
            lambda_l2: 0.0,
            ..GbdtParams::default()
        };
        let matrix = numeric_matrix(values);
        let model = fit(&matrix, &y, &params).unwrap();
        let out = model.predict(&matrix).unwrap();
        for (got, want) in out.iter().zip(&y) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn training_loss_never_increases() {
        let values: Vec<f64> = (0..40).map(|v| f64::from(v % 13) * 0.3).collect();
        let y: Vec<f64> = values.iter().map(|&v| f64::from(u8::from(v > 1.7))).collect();
        for loss in [Loss::Logistic, Loss::SquaredError] {
            let params = GbdtParams {
                n_rounds: 50,
                min_samples_leaf: 2,
                loss,
                ..GbdtParams::default()
            };
            let matrix = numeric_matrix(values.clone());
            let (_, history) = fit_with_history(&matrix, &y, &params).unwrap();
            assert_eq!(history.len(), 51);
            for pair in history.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-12, "{} -> {}", pair[0], pair[1]);
            }
        }
    }

    #[test]
    fn logistic_fit_separates_and_stays_in_unit_interval() {
        let values: Vec<f64> = (0..30).map(f64::from).collect();
        let y: Vec<f64> = (0..30).map(|v| f64::from(u8::from(v >= 15))).collect();
        let params = GbdtParams {
            n_rounds: 60,
            min_samples_leaf: 3,
            ..GbdtParams::default()
        };
        let matrix = numeric_matrix(values);
        let model = fit(&matrix, &y, &params).unwrap();
        let probs = model.predict(&matrix).unwrap();
        for (row, p) in probs.iter().enumerate() {
            assert!(*p > 0.0 && *p < 1.0);
            if row < 15 {
                assert!(*p < 0.2, "row {row}: {p}");
            } else {
                assert!(*p > 0.8, "row {row}: {p}");
            }
        }
    }

    #[test]
    fn single_class_target_is_rejected() {
        let matrix = numeric_matrix(vec![1.0, 2.0, 3.0]);
        let err = fit(&matrix, &[1.0, 1.0, 1.0], &GbdtParams::default()).unwrap_err();
        assert!(matches!(err, crate::Error::DegenerateTarget(_)), "{err}");
    }

    #[test]
    fn logistic_rejects_fractional_targets() {
        let matrix = numeric_matrix(vec![1.0, 2.0, 3.0]);
        let err = fit(&matrix, &[0.0, 0.5, 1.0], &GbdtParams::default()).unwrap_err();
        assert!(matches!(err, crate::Error::Config(_)), "{err}");
    }

    #[test]
    fn predict_rejects_mismatched_features() {
        let matrix = numeric_matrix(vec![0.0, 1.0, 2.0, 3.0]);
        let y = vec![0.0, 0.0, 1.0, 1.0];
        let params = GbdtParams {
            n_rounds: 2,
            min_samples_leaf: 1,
            ..GbdtParams::default()
        };
        let model = fit(&matrix, &y, &params).unwrap();
        let wrong_kind = FeatureMatrix::new(vec![Feature::Categorical {
            codes: vec![0, 1],
            n_categories: 2,
        }])
        .unwrap();
        assert!(matches!(model.predict(&wrong_kind), Err(crate::Error::Schema(_))));
        let wrong_count = FeatureMatrix::new(vec![
            Feature::Numeric(vec![0.0]),
            Feature::Numeric(vec![0.0]),
        ])
        .unwrap();
        assert!(matches!(model.predict(&wrong_count), Err(crate::Error::Schema(_))));
    }

    #[test]
    fn unseen_category_follows_the_heavier_side() {
        // Category 0 carries ten rows, category 1 two: the fitted split
        // defaults left, so an unseen code predicts like category 0.
        let mut codes = vec![0u32; 10];
        codes.extend([1, 1]);
        let mut y = vec![1.0; 10];
        y.extend([0.0, 0.0]);
        let train =
            FeatureMatrix::new(vec![Feature::Categorical { codes, n_categories: 2 }]).unwrap();
        let params = GbdtParams {
            n_rounds: 1,
            learning_rate: 1.0,
            max_depth: 1,
            min_samples_leaf: 1,
            loss: Loss::SquaredError,
            lambda_l2: 0.0,
            ..GbdtParams::default()
        };
        let model = fit(&train, &y, &params).unwrap();
        let probe = FeatureMatrix::new(vec![Feature::Categorical {
            codes: vec![0, 1, 2],
            n_categories: 3,
        }])
        .unwrap();
        let out = model.predict(&probe).unwrap();
        assert!((out[0] - 1.0).abs() < 1e-12);
        assert!(out[1].abs() < 1e-12);
        assert_eq!(out[2], out[0], "unseen code shares the heavy leaf");
    }

    #[test]
    fn codes_as_numeric_splits_categories_on_code_order() {
        // Codes 0..4 with targets tied to code parity cannot separate on a
        // single threshold, but monotone-by-code targets can.
        let codes: Vec<u32> = (0..20).map(|v| v % 5).collect();
        let y: Vec<f64> = codes.iter().map(|&c| f64::from(u8::from(c >= 3))).collect();
        let matrix = FeatureMatrix::new(vec![Feature::Categorical {
            codes,
            n_categories: 5,
        }])
        .unwrap();
        let params = GbdtParams {
            n_rounds: 1,
            learning_rate: 1.0,
            max_depth: 1,
            min_samples_leaf: 1,
            loss: Loss::SquaredError,
            lambda_l2: 0.0,
            categorical_mode: CategoricalMode::CodesAsNumeric,
            ..GbdtParams::default()
        };
        let model = fit(&matrix, &y, &params).unwrap();
        let out = model.predict(&matrix).unwrap();
        for (got, want) in out.iter().zip(&y) {
            assert!((got - want).abs() < 1e-12);
        }
        // The single tree must be a numeric-threshold stump.
        match &model.trees()[0].nodes[0] {
            Node::Branch { rule, .. } => {
                assert!(matches!(rule.kind, SplitKind::NumericThreshold { .. }))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mode_names_round_trip() {
        for mode in [CategoricalMode::CodesAsNumeric, CategoricalMode::BuiltinSorted] {
            assert_eq!(mode.as_str().parse::<CategoricalMode>().unwrap(), mode);
        }
        assert!("onehot".parse::<CategoricalMode>().is_err());
    }
}
