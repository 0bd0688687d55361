//! Layout of the hybrid pair feature and ablation masks over it.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gbdt::FeatureRow;
use crate::name_features::NameFeatureVector;
use crate::tagging::TagMatchScore;
use crate::value_features::{
    CHARACTER_RANGE, LENGTH_RANGE, NUMERIC_RANGE, TYPE_RANGE, VALUE_FEATURE_LEN,
    VALUE_FEATURE_NAMES,
};

pub const FEATURE_SCHEMA_VERSION: u32 = 1;

const LS_LEN: usize = 5;
const LV_START: usize = LS_LEN;
pub const COS_VALUE_INDEX: usize = LV_START + VALUE_FEATURE_LEN;
const H_START: usize = COS_VALUE_INDEX + 1;
pub const HYBRID_LEN: usize = H_START + 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    NameRule,
    NameEmbedding,
    DataType,
    Length,
    Numerical,
    Character,
    ValueEmbedding,
    Tag,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::NameRule,
        Family::NameEmbedding,
        Family::DataType,
        Family::Length,
        Family::Numerical,
        Family::Character,
        Family::ValueEmbedding,
        Family::Tag,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::NameRule => "name_rule",
            Family::NameEmbedding => "name_embedding",
            Family::DataType => "data_type",
            Family::Length => "length",
            Family::Numerical => "numerical",
            Family::Character => "character",
            Family::ValueEmbedding => "value_embedding",
            Family::Tag => "tag",
        }
    }

    /// Positions of this family inside the hybrid feature.
    pub fn indices(self) -> Range<usize> {
        let lv = |r: Range<usize>| LV_START + r.start..LV_START + r.end;
        match self {
            Family::NameEmbedding => 0..1,
            Family::NameRule => 1..LS_LEN,
            Family::DataType => lv(TYPE_RANGE),
            Family::Length => lv(LENGTH_RANGE),
            Family::Numerical => lv(NUMERIC_RANGE),
            Family::Character => lv(CHARACTER_RANGE),
            Family::ValueEmbedding => COS_VALUE_INDEX..COS_VALUE_INDEX + 1,
            Family::Tag => H_START..HYBRID_LEN,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s.trim())
            .ok_or_else(|| {
                let known: Vec<&str> = Family::ALL.iter().map(|f| f.as_str()).collect();
                Error::Config(format!(
                    "unknown feature family `{s}` (expected one of {})",
                    known.join(", ")
                ))
            })
    }
}

/// Parses a comma-separated family list; the empty string is the empty set.
pub fn parse_families(list: &str) -> Result<BTreeSet<Family>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

pub fn feature_names() -> Vec<String> {
    let mut names: Vec<String> = NameFeatureVector::NAMES.iter().map(|s| s.to_string()).collect();
    names.extend(VALUE_FEATURE_NAMES.iter().map(|n| format!("lv_{n}")));
    names.push("cos_value".into());
    names.extend(TagMatchScore::NAMES.iter().map(|s| s.to_string()));
    names
}

/// Ordered feature names, the dropped families, and a hash over both.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub version: u32,
    pub names: Vec<String>,
    pub dropped: BTreeSet<Family>,
    pub hash: String,
}

impl FeatureSchema {
    pub fn new(dropped: BTreeSet<Family>) -> Self {
        let names = feature_names();
        let hash = schema_hash(FEATURE_SCHEMA_VERSION, &names, &dropped);
        Self {
            version: FEATURE_SCHEMA_VERSION,
            names,
            dropped,
            hash,
        }
    }

    pub fn full() -> Self {
        Self::new(BTreeSet::new())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Hash recomputed from content; differs from `hash` if the file was edited.
    pub fn verify(&self) -> Result<()> {
        let expected = schema_hash(self.version, &self.names, &self.dropped);
        if expected != self.hash || self.names != feature_names() {
            return Err(Error::FeatureSchemaMismatch {
                expected: FeatureSchema::new(self.dropped.clone()).hash,
                actual: self.hash.clone(),
            });
        }
        Ok(())
    }

    /// Marks every feature of a dropped family as missing.
    pub fn mask(&self, features: &HybridFeature) -> FeatureRow {
        let mut row: FeatureRow = features.values.iter().map(|&v| Some(v)).collect();
        for family in &self.dropped {
            for i in family.indices() {
                row[i] = None;
            }
        }
        row
    }
}

impl Default for FeatureSchema {
    fn default() -> Self {
        Self::full()
    }
}

fn schema_hash(version: u32, names: &[String], dropped: &BTreeSet<Family>) -> String {
    let mut hasher = Sha256::new();
    hasher.update(version.to_le_bytes());
    for n in names {
        hasher.update(n.as_bytes());
        hasher.update([0]);
    }
    hasher.update(b"dropped");
    for f in dropped {
        hasher.update(f.as_str().as_bytes());
        hasher.update([0]);
    }
    hex::encode(&hasher.finalize()[..8])
}

/// Feature schema with `drop` added to the already-dropped families.
pub fn ablate(schema: &FeatureSchema, drop: &BTreeSet<Family>) -> FeatureSchema {
    let mut dropped = schema.dropped.clone();
    dropped.extend(drop.iter().copied());
    FeatureSchema::new(dropped)
}

/// The concatenated pair feature `[ls; lv; cos_value; h]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridFeature {
    pub values: Vec<f64>,
}

impl HybridFeature {
    pub fn assemble(
        ls: &NameFeatureVector,
        lv: &[f64],
        cos_value: f64,
        h: &TagMatchScore,
    ) -> Result<Self> {
        if lv.len() != VALUE_FEATURE_LEN {
            return Err(Error::DimensionMismatch {
                expected: VALUE_FEATURE_LEN,
                actual: lv.len(),
            });
        }
        let mut values = Vec::with_capacity(HYBRID_LEN);
        values.extend(ls.to_array());
        values.extend_from_slice(lv);
        values.push(cos_value);
        values.extend(h.to_array());
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("feature {i} is not finite")));
        }
        Ok(Self { values })
    }

    pub fn ls(&self) -> &[f64] {
        &self.values[..LS_LEN]
    }

    pub fn lv(&self) -> &[f64] {
        &self.values[LV_START..COS_VALUE_INDEX]
    }

    pub fn cos_value(&self) -> f64 {
        self.values[COS_VALUE_INDEX]
    }

    pub fn h(&self) -> &[f64] {
        &self.values[H_START..]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_tile_the_vector() {
        let mut seen = [0; HYBRID_LEN];
        for f in Family::ALL {
            for i in f.indices() {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
        assert_eq!(feature_names().len(), HYBRID_LEN);
        assert_eq!(HYBRID_LEN, 34);
    }

    #[test]
    fn ablation_changes_hash() {
        let full = FeatureSchema::full();
        let same = ablate(&full, &BTreeSet::new());
        assert_eq!(full, same);
        let no_tag = ablate(&full, &parse_families("tag").unwrap());
        assert_ne!(full.hash, no_tag.hash);
        assert!(no_tag.verify().is_ok());
        assert!(parse_families("tags").is_err());
        assert_eq!(parse_families("").unwrap().len(), 0);
    }

    #[test]
    fn mask_marks_missing() {
        let hf = HybridFeature {
            values: (0..HYBRID_LEN).map(|i| i as f64).collect(),
        };
        let schema = FeatureSchema::new(parse_families("tag,value_embedding").unwrap());
        let row = schema.mask(&hf);
        assert_eq!(row[COS_VALUE_INDEX], None);
        assert_eq!(row[HYBRID_LEN - 1], None);
        assert_eq!(row[0], Some(0.0));
        assert_eq!(row.iter().filter(|v| v.is_none()).count(), 3);
    }
}
