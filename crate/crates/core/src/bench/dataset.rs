//! Gold mappings, dataset manifests, training-set assembly and evaluation.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{auc, pair_counts, Counts};
use crate::config::{PipelineConfig, Provenance};
use crate::error::{Error, Result};
use crate::features::FeatureSchema;
use crate::gbdt::{train_ensemble, EnsembleModel, FeatureRow};
use crate::matcher::{match_schemas, pair_rows, provenance, MatchResult, Profiler};
use crate::schema::{load_csv, Schema};

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// One matched column pair, by name with an index fallback.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldPair {
    pub left: String,
    pub right: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GoldMapping {
    pub pairs: Vec<GoldPair>,
    pub many_to_many: bool,
}

fn resolve(schema: &Schema, name: &str, index: Option<usize>) -> Option<usize> {
    let hits: Vec<usize> = schema
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| c.name == name)
        .map(|(i, _)| i)
        .collect();
    match (hits.as_slice(), index) {
        ([only], _) => Some(*only),
        (_, Some(i)) if i < schema.len() => Some(i),
        _ => None,
    }
}

impl GoldMapping {
    /// Writes one JSON object per line.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for p in &self.pairs {
            out.push_str(&serde_json::to_string(p).expect("gold pair serializes"));
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read_jsonl(path: &Path, many_to_many: bool) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut pairs = Vec::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let g: GoldPair = serde_json::from_str(&line).map_err(|e| {
                Error::Data(format!("{}: line {}: {e}", path.display(), n + 1))
            })?;
            pairs.push(g);
        }
        Ok(Self { pairs, many_to_many })
    }

    /// Index pairs against concrete schemas; names win when unambiguous.
    pub fn resolve(&self, left: &Schema, right: &Schema) -> Result<BTreeSet<(usize, usize)>> {
        let mut out = BTreeSet::new();
        let (mut seen_l, mut seen_r) = (BTreeSet::new(), BTreeSet::new());
        for p in &self.pairs {
            let i = resolve(left, &p.left, p.left_index).ok_or_else(|| {
                Error::Data(format!("gold column `{}` not found in `{}`", p.left, left.name))
            })?;
            let j = resolve(right, &p.right, p.right_index).ok_or_else(|| {
                Error::Data(format!("gold column `{}` not found in `{}`", p.right, right.name))
            })?;
            if !self.many_to_many && (!seen_l.insert(i) || !seen_r.insert(j)) {
                return Err(Error::Data(format!(
                    "gold mapping repeats a column (`{}` / `{}`) but is not flagged many-to-many",
                    p.left, p.right
                )));
            }
            out.insert((i, j));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub left: PathBuf,
    pub right: PathBuf,
    pub gold: PathBuf,
    #[serde(default)]
    pub many_to_many: bool,
}

/// Table pairs with gold mappings; relative paths resolve against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: DatasetManifest =
            serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        for entry in &manifest.entries {
            for p in [&entry.left, &entry.right, &entry.gold] {
                let full = manifest.path(p);
                if !full.is_file() {
                    return Err(Error::Data(format!(
                        "{}: referenced file {} does not exist",
                        path.display(),
                        full.display()
                    )));
                }
            }
        }
        if manifest.entries.is_empty() {
            return Err(Error::Data(format!("{}: manifest has no entries", path.display())));
        }
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

/// Left table, right table and resolved gold pairs.
pub type LoadedEntry = (Schema, Schema, BTreeSet<(usize, usize)>);

/// Both tables of an entry, loaded under the configured row cap, and the resolved gold set.
pub fn load_entry(
    manifest: &DatasetManifest,
    entry: &ManifestEntry,
    config: &PipelineConfig,
) -> Result<LoadedEntry> {
    let left = load_csv(&manifest.path(&entry.left), config.row_cap, config.seed)?;
    let right = load_csv(&manifest.path(&entry.right), config.row_cap, config.seed)?;
    let gold = GoldMapping::read_jsonl(&manifest.path(&entry.gold), entry.many_to_many)?;
    let gold = gold.resolve(&left, &right)?;
    Ok((left, right, gold))
}

/// Feature rows and labels for every cross pair of one table pair.
pub fn pair_examples(
    profiler: &Profiler,
    left: &Schema,
    right: &Schema,
    gold: &BTreeSet<(usize, usize)>,
    schema: &FeatureSchema,
    epsilon: f64,
) -> Result<(Vec<FeatureRow>, Vec<bool>)> {
    let lp = profiler.profile_schema(left)?;
    let rp = profiler.profile_schema(right)?;
    let rows = pair_rows(&lp, &rp, schema, epsilon)?;
    let labels = (0..lp.len())
        .flat_map(|i| (0..rp.len()).map(move |j| (i, j)))
        .map(|ij| gold.contains(&ij))
        .collect();
    Ok((rows, labels))
}

/// Training examples from every manifest entry, in entry order.
pub fn training_set(
    manifest: &DatasetManifest,
    config: &PipelineConfig,
    profiler: &Profiler,
) -> Result<(Vec<FeatureRow>, Vec<bool>)> {
    let schema = config.feature_schema();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for entry in &manifest.entries {
        let (left, right, gold) = load_entry(manifest, entry, config)?;
        let (rows, labels) = pair_examples(profiler, &left, &right, &gold, &schema, config.epsilon)?;
        x.extend(rows);
        y.extend(labels);
    }
    Ok((x, y))
}

/// Trains the ensemble on a manifest of labeled table pairs.
pub fn train_model(
    manifest: &DatasetManifest,
    config: &PipelineConfig,
    profiler: &Profiler,
) -> Result<EnsembleModel> {
    config.validate()?;
    let (x, y) = training_set(manifest, config, profiler)?;
    log::info!(
        "training on {} pairs ({} positive) from {} table pairs",
        y.len(),
        y.iter().filter(|&&v| v).count(),
        manifest.entries.len()
    );
    let mut model = train_ensemble(
        &x,
        &y,
        config.feature_schema(),
        &config.search_grid(),
        &config.regularization,
        config.seed,
    )?;
    model.provenance = serde_json::to_value(provenance(config, profiler, None))
        .expect("provenance serializes");
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEval {
    pub f1: f64,
    pub auc: Option<f64>,
    pub counts: Counts,
}

/// F1 of the reported pairs against gold and AUC of the full score matrix.
pub fn evaluate_pair(result: &MatchResult, gold: &BTreeSet<(usize, usize)>) -> Result<PairEval> {
    let n1 = result.score_matrix.len();
    let n2 = result.score_matrix.first().map_or(0, Vec::len);
    if let Some(&(i, j)) = gold.iter().find(|&&(i, j)| i >= n1 || j >= n2) {
        return Err(Error::Data(format!(
            "gold pair ({i}, {j}) is outside the {n1}x{n2} score matrix"
        )));
    }
    let predicted: BTreeSet<(usize, usize)> =
        result.pairs.iter().map(|p| (p.left_col, p.right_col)).collect();
    let counts = pair_counts(&predicted, gold);
    let mut scores = Vec::with_capacity(n1 * n2);
    let mut labels = Vec::with_capacity(n1 * n2);
    for (i, row) in result.score_matrix.iter().enumerate() {
        for (j, &s) in row.iter().enumerate() {
            scores.push(s);
            labels.push(gold.contains(&(i, j)));
        }
    }
    Ok(PairEval {
        f1: counts.f1(),
        auc: auc(&scores, &labels),
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub left: PathBuf,
    pub right: PathBuf,
    pub n_left: usize,
    pub n_right: usize,
    pub n_gold: usize,
    pub f1: f64,
    pub auc: Option<f64>,
    #[serde(flatten)]
    pub counts: Counts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryFailure {
    pub entry: usize,
    pub left: PathBuf,
    pub right: PathBuf,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub macro_f1: f64,
    pub macro_auc: Option<f64>,
    /// Pairs left out of the AUC mean because their gold set was empty or full.
    pub auc_skipped: usize,
    pub partial: bool,
    pub pairs: Vec<PairReport>,
    pub failures: Vec<EntryFailure>,
    pub provenance: Provenance,
}

/// Unweighted mean, summed in sorted order so entry order cannot change the bits.
fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(v.iter().sum::<f64>() / v.len() as f64)
}

/// Matches every manifest entry and macro-averages the per-pair metrics.
pub fn evaluate_dataset(
    manifest: &DatasetManifest,
    model: &EnsembleModel,
    config: &PipelineConfig,
    profiler: &Profiler,
) -> Result<EvalReport> {
    config.validate()?;
    let outcomes: Vec<Result<PairReport>> = manifest
        .entries
        .par_iter()
        .map(|entry| {
            let (left, right, gold) = load_entry(manifest, entry, config)?;
            let result = match_schemas(&left, &right, model, config, profiler)?;
            let eval = evaluate_pair(&result, &gold)?;
            Ok(PairReport {
                left: entry.left.clone(),
                right: entry.right.clone(),
                n_left: left.len(),
                n_right: right.len(),
                n_gold: gold.len(),
                f1: eval.f1,
                auc: eval.auc,
                counts: eval.counts,
            })
        })
        .collect();

    let mut pairs = Vec::new();
    let mut failures = Vec::new();
    for (k, (outcome, entry)) in outcomes.into_iter().zip(&manifest.entries).enumerate() {
        match outcome {
            Ok(r) => pairs.push(r),
            // Provider outages abort the run rather than silently shrinking it.
            Err(e @ Error::Provider(_)) => return Err(e),
            Err(e) => {
                log::warn!("entry {k} ({}) failed: {e}", entry.left.display());
                failures.push(EntryFailure {
                    entry: k,
                    left: entry.left.clone(),
                    right: entry.right.clone(),
                    error: e.to_string(),
                });
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::Data("every manifest entry failed".into()));
    }
    let f1s: Vec<f64> = pairs.iter().map(|p| p.f1).collect();
    let aucs: Vec<f64> = pairs.iter().filter_map(|p| p.auc).collect();
    Ok(EvalReport {
        format_version: REPORT_FORMAT_VERSION,
        macro_f1: mean(&f1s).unwrap_or(0.0),
        macro_auc: mean(&aucs),
        auc_skipped: pairs.len() - aucs.len(),
        partial: !failures.is_empty(),
        pairs,
        failures,
        provenance: provenance(config, profiler, Some(model)),
    })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_json().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::Column;

    fn schema(names: &[&str]) -> Schema {
        Schema::new(
            "s",
            names.iter().map(|n| Column::from_strs(n, &["x"])).collect(),
        )
        .unwrap()
    }

    #[test]
    fn gold_resolves_by_name_then_index() {
        let left = schema(&["a", "b", "b"]);
        let right = schema(&["x", "y"]);
        let gold = GoldMapping {
            pairs: vec![
                GoldPair { left: "a".into(), right: "y".into(), left_index: Some(9), right_index: Some(9) },
                GoldPair { left: "b".into(), right: "x".into(), left_index: Some(2), right_index: Some(0) },
            ],
            many_to_many: false,
        };
        let r = gold.resolve(&left, &right).unwrap();
        assert_eq!(r, [(0, 1), (2, 0)].into());
    }

    #[test]
    fn duplicates_need_many_to_many() {
        let left = schema(&["a", "b"]);
        let right = schema(&["x"]);
        let mut gold = GoldMapping {
            pairs: vec![
                GoldPair { left: "a".into(), right: "x".into(), left_index: Some(0), right_index: Some(0) },
                GoldPair { left: "b".into(), right: "x".into(), left_index: Some(1), right_index: Some(0) },
            ],
            many_to_many: false,
        };
        assert!(gold.resolve(&left, &right).is_err());
        gold.many_to_many = true;
        assert_eq!(gold.resolve(&left, &right).unwrap().len(), 2);
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gold.jsonl");
        let gold = GoldMapping {
            pairs: vec![GoldPair { left: "a".into(), right: "b".into(), left_index: Some(0), right_index: Some(3) }],
            many_to_many: false,
        };
        gold.write_jsonl(&path).unwrap();
        assert_eq!(GoldMapping::read_jsonl(&path, false).unwrap(), gold);
        std::fs::write(&path, "{\"left\":\"a\",\"right\":\"b\"}\n").unwrap();
        let g = GoldMapping::read_jsonl(&path, false).unwrap();
        assert_eq!(g.pairs[0].left_index, None);
    }

    #[test]
    fn macro_mean() {
        assert_eq!(mean(&[1.0, 0.0]), Some(0.5));
        assert_eq!(mean(&[]), None);
    }
}
