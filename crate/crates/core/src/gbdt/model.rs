use serde::{Deserialize, Serialize};

use super::threshold::best_threshold;
use super::tree::{grow_tree, ColumnData, RegressionTree};
use super::{FeatureRow, GbdtHyperParams, Regularization};
use crate::error::{Error, Result};

/// Margins are clamped here when converted to probabilities so outputs stay inside (0, 1).
const MARGIN_LIMIT: f64 = 30.0;

pub fn sigmoid(margin: f64) -> f64 {
    1.0 / (1.0 + (-margin.clamp(-MARGIN_LIMIT, MARGIN_LIMIT)).exp())
}

fn raw_sigmoid(margin: f64) -> f64 {
    1.0 / (1.0 + (-margin).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub hyperparams: GbdtHyperParams,
    pub n_features: usize,
    /// Log-odds of the training positive rate.
    pub base_score: f64,
    pub learning_rate: f64,
    pub threshold: f64,
    pub trees: Vec<RegressionTree>,
}

impl GbdtModel {
    pub fn margin_dense(&self, row: &[f64]) -> f64 {
        self.base_score
            + self
                .trees
                .iter()
                .map(|t| self.learning_rate * t.predict(row))
                .sum::<f64>()
    }

    pub fn predict_dense(&self, row: &[f64]) -> f64 {
        sigmoid(self.margin_dense(row))
    }

    pub fn predict_proba(&self, x: &[Option<f64>]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::FeatureSchemaMismatch {
                expected: format!("{} features", self.n_features),
                actual: format!("{} features", x.len()),
            });
        }
        Ok(self.predict_dense(&densify(x)))
    }

    pub fn truncated(&self, rounds: usize) -> Self {
        let mut m = self.clone();
        m.trees.truncate(rounds);
        m.hyperparams.num_round = rounds;
        m
    }
}

pub(crate) fn densify(x: &[Option<f64>]) -> Vec<f64> {
    x.iter().map(|v| v.unwrap_or(f64::NAN)).collect()
}

/// Validates and densifies a feature matrix.
pub(crate) fn dense_matrix(x: &[FeatureRow]) -> Result<(Vec<Vec<f64>>, usize)> {
    let n_features = x.first().map_or(0, Vec::len);
    let mut rows = Vec::with_capacity(x.len());
    for (i, row) in x.iter().enumerate() {
        if row.len() != n_features {
            return Err(Error::Training(format!(
                "row {i} has {} features, expected {n_features}",
                row.len()
            )));
        }
        if row.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Training(format!(
                "row {i} has a non-finite feature; encode missing values as None"
            )));
        }
        rows.push(densify(row));
    }
    Ok((rows, n_features))
}

fn check_labels(y: &[bool], n_rows: usize) -> Result<()> {
    if n_rows != y.len() {
        return Err(Error::Training(format!(
            "{n_rows} feature rows but {} labels",
            y.len()
        )));
    }
    if n_rows < 2 {
        return Err(Error::Training("need at least two examples".into()));
    }
    let pos = y.iter().filter(|&&v| v).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::Training("labels contain a single class".into()));
    }
    Ok(())
}

fn row_order(a: &(Vec<f64>, bool), b: &(Vec<f64>, bool)) -> std::cmp::Ordering {
    for (x, y) in a.0.iter().zip(&b.0) {
        // NaN (missing) sorts after every value under total_cmp for positive NaN.
        let o = x.total_cmp(y);
        if o.is_ne() {
            return o;
        }
    }
    a.1.cmp(&b.1)
}

/// Checkpoint callback: called after round `r` (1-based) with the model so far.
pub(crate) type Checkpoint<'a> = dyn FnMut(usize, &GbdtModel) + 'a;

/// Logistic-loss boosting on dense rows.
///
/// Rows are put into a canonical order first so the result does not depend
/// on how the caller ordered the examples.
pub(crate) fn boost(
    rows: Vec<Vec<f64>>,
    y: &[bool],
    n_features: usize,
    hp: &GbdtHyperParams,
    reg: &Regularization,
    mut checkpoint: Option<&mut Checkpoint<'_>>,
) -> Result<GbdtModel> {
    check_labels(y, rows.len())?;
    hp.validate()?;
    let mut paired: Vec<(Vec<f64>, bool)> = rows.into_iter().zip(y.iter().copied()).collect();
    paired.sort_by(row_order);
    let labels: Vec<f64> = paired.iter().map(|(_, l)| if *l { 1.0 } else { 0.0 }).collect();
    let rows: Vec<Vec<f64>> = paired.into_iter().map(|(r, _)| r).collect();

    let n = rows.len();
    let positives = labels.iter().sum::<f64>();
    let rate = positives / n as f64;
    let base_score = (rate / (1.0 - rate)).ln();
    let data = ColumnData::new(&rows, n_features);

    let mut model = GbdtModel {
        hyperparams: hp.clone(),
        n_features,
        base_score,
        learning_rate: hp.learning_rate,
        threshold: 0.5,
        trees: Vec::with_capacity(hp.num_round),
    };
    let mut margins = vec![base_score; n];
    let mut g = vec![0.0; n];
    let mut h = vec![0.0; n];
    for round in 1..=hp.num_round {
        for i in 0..n {
            let p = raw_sigmoid(margins[i]);
            g[i] = p - labels[i];
            h[i] = p * (1.0 - p);
        }
        let (tree, leaf_weights) = grow_tree(&data, &g, &h, hp.max_depth, reg);
        for (m, w) in margins.iter_mut().zip(&leaf_weights) {
            *m += hp.learning_rate * w;
        }
        model.trees.push(tree);
        if let Some(cb) = checkpoint.as_deref_mut() {
            cb(round, &model);
        }
    }
    Ok(model)
}

/// Trains a boosted-tree binary classifier with logistic loss.
pub fn train_gbdt(
    x: &[FeatureRow],
    y: &[bool],
    hp: &GbdtHyperParams,
    reg: &Regularization,
) -> Result<GbdtModel> {
    if x.is_empty() {
        return Err(Error::Training("empty training data".into()));
    }
    let (rows, n_features) = dense_matrix(x)?;
    boost(rows, y, n_features, hp, reg, None)
}

/// Mean logistic loss of `model` on the given rows.
pub fn log_loss(model: &GbdtModel, x: &[FeatureRow], y: &[bool]) -> f64 {
    let total: f64 = x
        .iter()
        .zip(y)
        .map(|(row, &label)| {
            let m = model.margin_dense(&densify(row));
            // log(1 + e^m) - y m, written stably.
            let softplus = if m > 0.0 {
                m + (-m).exp().ln_1p()
            } else {
                m.exp().ln_1p()
            };
            softplus - if label { m } else { 0.0 }
        })
        .sum();
    total / x.len() as f64
}

/// F1-maximizing threshold of `model` on a validation set; 0.5 when degenerate.
pub fn default_threshold(model: &GbdtModel, x_val: &[FeatureRow], y_val: &[bool]) -> f64 {
    let scores: Vec<f64> = x_val
        .iter()
        .map(|row| model.predict_dense(&densify(row)))
        .collect();
    best_threshold(&scores, y_val).0
}
