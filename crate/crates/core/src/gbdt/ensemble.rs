use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::model::{boost, dense_matrix, densify, GbdtModel};
use super::threshold::best_threshold;
use super::{FeatureRow, GbdtHyperParams, Regularization};
use crate::error::{Error, Result};
use crate::features::FeatureSchema;
use crate::seed;

pub const ENSEMBLE_SIZE: usize = 16;
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMember {
    #[serde(flatten)]
    pub model: GbdtModel,
    /// F1 on this member's validation fold at its threshold.
    pub validation_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub seed: u64,
    pub n_examples: usize,
    /// (positives, negatives) per fold.
    pub class_counts: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub format_version: u32,
    pub feature_schema: FeatureSchema,
    pub folds: FoldSummary,
    pub members: Vec<EnsembleMember>,
    #[serde(default)]
    pub provenance: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsemblePrediction {
    pub score: f64,
    pub votes: usize,
    pub decision: bool,
}

impl EnsembleModel {
    pub fn n_features(&self) -> usize {
        self.feature_schema.names.len()
    }

    fn check_row(&self, x: &[Option<f64>]) -> Result<Vec<f64>> {
        if x.len() != self.n_features() {
            return Err(Error::FeatureSchemaMismatch {
                expected: format!("{} features", self.n_features()),
                actual: format!("{} features", x.len()),
            });
        }
        Ok(densify(x))
    }

    pub(crate) fn predict_dense(&self, row: &[f64], threshold: Option<f64>) -> EnsemblePrediction {
        let probs: Vec<f64> = self.members.iter().map(|m| m.model.predict_dense(row)).collect();
        let score = probs.iter().sum::<f64>() / probs.len() as f64;
        let votes = probs
            .iter()
            .zip(&self.members)
            .filter(|(p, m)| **p >= m.model.threshold)
            .count();
        let decision = match threshold {
            Some(t) => score >= t,
            None => 2 * votes > self.members.len(),
        };
        EnsemblePrediction {
            score,
            votes,
            decision,
        }
    }

    /// Mean member probability and strict-majority vote.
    pub fn predict(&self, x: &[Option<f64>]) -> Result<EnsemblePrediction> {
        Ok(self.predict_dense(&self.check_row(x)?, None))
    }

    /// Like [`predict`](Self::predict), but the decision thresholds the mean score instead.
    pub fn predict_with_threshold(
        &self,
        x: &[Option<f64>],
        threshold: Option<f64>,
    ) -> Result<EnsemblePrediction> {
        Ok(self.predict_dense(&self.check_row(x)?, threshold))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Short content hash of the serialized model.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model = Self::from_json(&text).map_err(|e| Error::json(path, e))?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "{}: unsupported model format {}",
                path.display(),
                model.format_version
            )));
        }
        if model.members.is_empty() {
            return Err(Error::Data(format!("{}: model has no members", path.display())));
        }
        Ok(model)
    }
}

/// Fold index of every example under the ensemble's stratified partition.
pub fn fold_assignment(y: &[bool], seed_value: u64) -> Vec<usize> {
    stratified_folds(y, ENSEMBLE_SIZE, seed_value)
}

fn stratified_folds(y: &[bool], k: usize, seed_value: u64) -> Vec<usize> {
    let mut rng = seed::rng(seed_value, seed::FOLDS);
    let mut pos: Vec<usize> = (0..y.len()).filter(|&i| y[i]).collect();
    let mut neg: Vec<usize> = (0..y.len()).filter(|&i| !y[i]).collect();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut fold = vec![0; y.len()];
    for (slot, &i) in pos.iter().chain(&neg).enumerate() {
        fold[i] = slot % k;
    }
    fold
}

struct FoldResult {
    model: GbdtModel,
    f1: f64,
}

fn fit_fold(
    rows: &[Vec<f64>],
    y: &[bool],
    fold: &[usize],
    k: usize,
    n_features: usize,
    grid: &[GbdtHyperParams],
    reg: &Regularization,
) -> Result<FoldResult> {
    let (mut train_x, mut train_y, mut val_x, mut val_y) = (vec![], vec![], vec![], vec![]);
    for (i, row) in rows.iter().enumerate() {
        if fold[i] == k {
            val_x.push(row.clone());
            val_y.push(y[i]);
        } else {
            train_x.push(row.clone());
            train_y.push(y[i]);
        }
    }

    // Boosting is deterministic, so a model with fewer rounds is a prefix of
    // one with more: each (learning rate, depth) pair is trained once to its
    // largest round count and scored at every requested count.
    // (learning rate, depth, [(grid index, rounds)])
    type Group = (f64, usize, Vec<(usize, usize)>);
    let mut groups: Vec<Group> = Vec::new();
    for (gi, hp) in grid.iter().enumerate() {
        match groups
            .iter_mut()
            .find(|(lr, d, _)| *lr == hp.learning_rate && *d == hp.max_depth)
        {
            Some(group) => group.2.push((gi, hp.num_round)),
            None => groups.push((hp.learning_rate, hp.max_depth, vec![(gi, hp.num_round)])),
        }
    }

    // (f1, grid index, model with threshold)
    let mut best: Option<(f64, usize, GbdtModel)> = None;
    for (lr, depth, points) in &groups {
        let max_rounds = points.iter().map(|p| p.1).max().unwrap_or(0);
        let hp = GbdtHyperParams::new(*lr, *depth, max_rounds);
        let mut scored: Vec<(usize, usize, f64, f64)> = Vec::new();
        let mut on_round = |round: usize, model: &GbdtModel| {
            for &(gi, rounds) in points.iter().filter(|p| p.1 == round) {
                let scores: Vec<f64> = val_x
                    .iter()
                    .map(|r| model.predict_dense(r))
                    .collect();
                let (t, f1) = best_threshold(&scores, &val_y);
                scored.push((gi, rounds, t, f1));
            }
        };
        let full = boost(
            train_x.clone(),
            &train_y,
            n_features,
            &hp,
            reg,
            Some(&mut on_round),
        )?;
        for (gi, rounds, t, f1) in scored {
            let better = match &best {
                None => true,
                Some((bf, bi, _)) => f1 > *bf || (f1 == *bf && gi < *bi),
            };
            if better {
                let mut m = full.truncated(rounds);
                m.threshold = t;
                best = Some((f1, gi, m));
            }
        }
    }
    let (f1, _, model) = best.ok_or_else(|| Error::Training("empty hyperparameter grid".into()))?;
    Ok(FoldResult { model, f1 })
}

/// Trains the 16-member fold ensemble.
pub fn train_ensemble(
    x: &[FeatureRow],
    y: &[bool],
    schema: FeatureSchema,
    grid: &[GbdtHyperParams],
    reg: &Regularization,
    seed_value: u64,
) -> Result<EnsembleModel> {
    if grid.is_empty() {
        return Err(Error::Config("hyperparameter grid is empty".into()));
    }
    for hp in grid {
        hp.validate()?;
    }
    if x.len() != y.len() {
        return Err(Error::Training(format!(
            "{} feature rows but {} labels",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 * ENSEMBLE_SIZE {
        return Err(Error::Training(format!(
            "need at least {} examples, got {}",
            2 * ENSEMBLE_SIZE,
            x.len()
        )));
    }
    let (rows, n_features) = dense_matrix(x)?;
    if n_features != schema.names.len() {
        return Err(Error::FeatureSchemaMismatch {
            expected: format!("{} features", schema.names.len()),
            actual: format!("{n_features} features"),
        });
    }

    let fold = stratified_folds(y, ENSEMBLE_SIZE, seed_value);
    let mut class_counts = vec![(0usize, 0usize); ENSEMBLE_SIZE];
    for (i, &f) in fold.iter().enumerate() {
        if y[i] {
            class_counts[f].0 += 1;
        } else {
            class_counts[f].1 += 1;
        }
    }
    if let Some(k) = class_counts.iter().position(|&(p, n)| p == 0 || n == 0) {
        return Err(Error::Training(format!(
            "fold {k} lacks one class after stratification ({} positives, {} negatives overall); \
             each class needs at least {ENSEMBLE_SIZE} examples",
            y.iter().filter(|&&v| v).count(),
            y.iter().filter(|&&v| !v).count()
        )));
    }

    let results: Vec<Result<FoldResult>> = (0..ENSEMBLE_SIZE)
        .into_par_iter()
        .map(|k| fit_fold(&rows, y, &fold, k, n_features, grid, reg))
        .collect();
    let members = results
        .into_iter()
        .map(|r| {
            r.map(|fr| EnsembleMember {
                model: fr.model,
                validation_f1: fr.f1,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(EnsembleModel {
        format_version: MODEL_FORMAT_VERSION,
        feature_schema: schema,
        folds: FoldSummary {
            seed: seed_value,
            n_examples: x.len(),
            class_counts,
        },
        members,
        provenance: serde_json::Value::Null,
    })
}
