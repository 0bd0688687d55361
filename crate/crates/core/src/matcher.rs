//! Column profiling, pair features, scoring and pair selection.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{PipelineConfig, Provenance};
use crate::embedding::{cosine, Embedder, Embedding};
use crate::error::{Error, Result};
use crate::features::{FeatureSchema, HybridFeature, FEATURE_SCHEMA_VERSION};
use crate::gbdt::{EnsembleModel, FeatureRow};
use crate::name_features::name_features_from;
use crate::schema::{detect_column_type, Column, DataTypeLabel, Schema};
use crate::tagging::{tag_match, TaggedColumn, Tagger};
use crate::value_features::{normalized_difference, value_embedding, ColumnValueFeatures};

/// Everything about one column that pair features need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnProfile {
    pub name: String,
    pub label: DataTypeLabel,
    pub value_features: ColumnValueFeatures,
    pub name_embedding: Embedding,
    pub value_embedding: Embedding,
    pub tag: TaggedColumn,
    /// Feature layout version plus the embedder identity.
    pub feature_version: String,
}

/// Builds column profiles, caching them by column content.
pub struct Profiler {
    embedder: Embedder,
    tagger: Tagger,
    seed: u64,
    version: String,
    cache: Mutex<HashMap<String, ColumnProfile>>,
    profiled: AtomicUsize,
}

impl Profiler {
    pub fn new(embedder: Embedder, tagger: Tagger, seed: u64) -> Self {
        let version = format!("v{FEATURE_SCHEMA_VERSION}:{}", embedder.describe());
        Self {
            embedder,
            tagger,
            seed,
            version,
            cache: Mutex::new(HashMap::new()),
            profiled: AtomicUsize::new(0),
        }
    }

    pub fn from_config(config: &PipelineConfig) -> Result<Self> {
        let embedder = Embedder::from_config(&config.embedder)?;
        let tagger = Tagger::new(&config.tagger, config.seed)?;
        Ok(Self::new(embedder, tagger, config.seed))
    }

    pub fn embedder(&self) -> &Embedder {
        &self.embedder
    }

    pub fn tagger(&self) -> &Tagger {
        &self.tagger
    }

    pub fn feature_version(&self) -> &str {
        &self.version
    }

    /// Number of columns profiled from scratch (cache misses).
    pub fn profiled_columns(&self) -> usize {
        self.profiled.load(Ordering::Relaxed)
    }

    fn content_hash(&self, col: &Column) -> String {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(col.name.as_bytes());
        h.update([0xff]);
        for v in &col.values {
            h.update(v.as_bytes());
            h.update([0]);
        }
        hex::encode(h.finalize())
    }

    pub fn profile_column(&self, col: &Column) -> Result<ColumnProfile> {
        let key = self.content_hash(col);
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let with_context = |e: Error| match e {
            Error::Provider(msg) => Error::Provider(format!("column `{}`: {msg}", col.name)),
            other => other,
        };
        let label = detect_column_type(col);
        let name_embedding = self.embedder.embed(&col.name).map_err(with_context)?;
        let value_embedding =
            value_embedding(&self.embedder, col, label, self.seed).map_err(with_context)?;
        let profile = ColumnProfile {
            name: col.name.clone(),
            label,
            value_features: ColumnValueFeatures::compute(col, label),
            name_embedding,
            value_embedding,
            tag: self.tagger.tag_column(col, label),
            feature_version: self.version.clone(),
        };
        self.profiled.fetch_add(1, Ordering::Relaxed);
        self.cache.lock().unwrap().insert(key, profile.clone());
        Ok(profile)
    }

    pub fn profile_schema(&self, schema: &Schema) -> Result<Vec<ColumnProfile>> {
        // One provider batch for all uncached names.
        let names: Vec<&str> = schema.columns.iter().map(|c| c.name.as_str()).collect();
        self.embedder.embed_many(&names)?;
        schema.columns.iter().map(|c| self.profile_column(c)).collect()
    }
}

/// `[ls; lv; cos_value; h]` for one column pair.
pub fn hybrid_features(pa: &ColumnProfile, pb: &ColumnProfile, epsilon: f64) -> Result<HybridFeature> {
    if pa.feature_version != pb.feature_version {
        return Err(Error::FeatureSchemaMismatch {
            expected: pa.feature_version.clone(),
            actual: pb.feature_version.clone(),
        });
    }
    let ls = name_features_from(&pa.name, &pb.name, &pa.name_embedding, &pb.name_embedding)?;
    let lv = normalized_difference(&pa.value_features.to_vec(), &pb.value_features.to_vec(), epsilon);
    let cos_value = cosine(&pa.value_embedding, &pb.value_embedding)?;
    let h = tag_match(&pa.tag.tag, &pb.tag.tag);
    HybridFeature::assemble(&ls, &lv, cos_value, &h)
}

/// Masked feature rows for every cross pair, row-major over (left, right).
pub fn pair_rows(
    left: &[ColumnProfile],
    right: &[ColumnProfile],
    schema: &FeatureSchema,
    epsilon: f64,
) -> Result<Vec<FeatureRow>> {
    left.par_iter()
        .flat_map_iter(|a| right.iter().map(move |b| (a, b)))
        .map(|(a, b)| Ok(schema.mask(&hybrid_features(a, b, epsilon)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub left_col: usize,
    pub right_col: usize,
    pub left_name: String,
    pub right_name: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub left: String,
    pub right: String,
    pub score_matrix: Vec<Vec<f64>>,
    /// Pairs the decision rule accepted, before selection.
    pub candidates: usize,
    pub pairs: Vec<MatchedPair>,
    pub provenance: Provenance,
}

/// Greedy one-to-one selection: highest score first, ties to lower `i` then lower `j`.
pub fn select_one_to_one(candidates: &[(usize, usize, f64)]) -> Vec<(usize, usize, f64)> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let mut used_i = std::collections::BTreeSet::new();
    let mut used_j = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for (i, j, s) in sorted {
        if !used_i.contains(&i) && !used_j.contains(&j) {
            used_i.insert(i);
            used_j.insert(j);
            out.push((i, j, s));
        }
    }
    out
}

/// Candidates in many-to-many mode: every accepted pair, by score then index.
fn select_all(candidates: &[(usize, usize, f64)]) -> Vec<(usize, usize, f64)> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    sorted
}

/// Checks that the model can score features produced under `config`.
pub fn check_compatible(model: &EnsembleModel, config: &PipelineConfig) -> Result<()> {
    model.feature_schema.verify()?;
    if !config.drop.is_empty() && config.drop != model.feature_schema.dropped {
        return Err(Error::FeatureSchemaMismatch {
            expected: model.feature_schema.hash.clone(),
            actual: config.feature_schema().hash,
        });
    }
    if model.members.is_empty() {
        return Err(Error::Data("model has no members".into()));
    }
    Ok(())
}

pub fn provenance(config: &PipelineConfig, profiler: &Profiler, model: Option<&EnsembleModel>) -> Provenance {
    let schema_hash = model
        .map(|m| m.feature_schema.hash.clone())
        .unwrap_or_else(|| config.feature_schema().hash);
    Provenance {
        seed: config.seed,
        embedder: profiler.embedder().describe(),
        tagger: format!("{:?}", profiler.tagger().kind()).to_lowercase(),
        feature_schema_hash: schema_hash,
        model_hash: model.map(EnsembleModel::content_hash),
        config: config.snapshot(),
    }
}

/// Scores every cross pair and selects matches.
pub fn match_schemas(
    src: &Schema,
    tgt: &Schema,
    model: &EnsembleModel,
    config: &PipelineConfig,
    profiler: &Profiler,
) -> Result<MatchResult> {
    if src.is_empty() || tgt.is_empty() {
        return Err(Error::Data("cannot match an empty schema".into()));
    }
    check_compatible(model, config)?;
    let left = profiler.profile_schema(src)?;
    let right = profiler.profile_schema(tgt)?;
    let rows = pair_rows(&left, &right, &model.feature_schema, config.epsilon)?;
    let n2 = right.len();
    let predictions = rows
        .par_iter()
        .map(|r| model.predict_with_threshold(r, config.threshold))
        .collect::<Result<Vec<_>>>()?;

    let score_matrix: Vec<Vec<f64>> = predictions
        .chunks(n2)
        .map(|row| row.iter().map(|p| p.score).collect())
        .collect();
    let candidates: Vec<(usize, usize, f64)> = predictions
        .iter()
        .enumerate()
        .filter(|(_, p)| p.decision)
        .map(|(k, p)| (k / n2, k % n2, p.score))
        .collect();
    let selected = if config.assignment {
        select_one_to_one(&candidates)
    } else {
        select_all(&candidates)
    };
    let pairs = selected
        .into_iter()
        .map(|(i, j, score)| MatchedPair {
            left_col: i,
            right_col: j,
            left_name: left[i].name.clone(),
            right_name: right[j].name.clone(),
            score,
        })
        .collect();
    Ok(MatchResult {
        left: src.name.clone(),
        right: tgt.name.clone(),
        score_matrix,
        candidates: candidates.len(),
        pairs,
        provenance: provenance(config, profiler, Some(model)),
    })
}
