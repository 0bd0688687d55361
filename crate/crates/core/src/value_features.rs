//! Per-column value statistics and their pairwise normalized difference.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::embedding::{Embedder, Embedding};
use crate::error::Result;
use crate::schema::{
    detect_column_type, parse_number, sample_text_values, Column, DataTypeLabel,
    DEFAULT_TEXT_SAMPLE,
};

pub const DEFAULT_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TypeOneHot {
    pub url: f64,
    pub numeric: f64,
    pub date: f64,
    pub string: f64,
}

impl TypeOneHot {
    pub fn from_label(label: DataTypeLabel) -> Self {
        let mut t = Self::default();
        match label {
            DataTypeLabel::Url => t.url = 1.0,
            DataTypeLabel::Numeric => t.numeric = 1.0,
            DataTypeLabel::Date => t.date = 1.0,
            DataTypeLabel::String => t.string = 1.0,
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LengthFeatures {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub variance: f64,
    pub cv: f64,
    pub unique_length_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NumericFeatures {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub variance: f64,
    pub cv: f64,
    pub unique_ratio: f64,
    pub numeric_present: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CharacterFeatures {
    pub whitespace_mean: f64,
    pub whitespace_cv: f64,
    pub punctuation_mean: f64,
    pub punctuation_cv: f64,
    pub special_mean: f64,
    pub special_cv: f64,
    pub numeric_char_mean: f64,
    pub numeric_char_cv: f64,
    pub text_present: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ColumnValueFeatures {
    pub type_onehot: TypeOneHot,
    pub length: LengthFeatures,
    pub numeric: NumericFeatures,
    pub character: CharacterFeatures,
}

pub const VALUE_FEATURE_LEN: usize = 26;

/// Serialization order of [`ColumnValueFeatures::to_vec`].
pub const VALUE_FEATURE_NAMES: [&str; VALUE_FEATURE_LEN] = [
    "type_url",
    "type_numeric",
    "type_date",
    "type_string",
    "length_mean",
    "length_min",
    "length_max",
    "length_variance",
    "length_cv",
    "length_unique_length_ratio",
    "numeric_mean",
    "numeric_min",
    "numeric_max",
    "numeric_variance",
    "numeric_cv",
    "numeric_unique_ratio",
    "numeric_present",
    "character_whitespace_mean",
    "character_whitespace_cv",
    "character_punctuation_mean",
    "character_punctuation_cv",
    "character_special_mean",
    "character_special_cv",
    "character_numeric_char_mean",
    "character_numeric_char_cv",
    "character_text_present",
];

/// Index ranges of each family inside the serialized vector.
pub const TYPE_RANGE: std::ops::Range<usize> = 0..4;
pub const LENGTH_RANGE: std::ops::Range<usize> = 4..10;
pub const NUMERIC_RANGE: std::ops::Range<usize> = 10..17;
pub const CHARACTER_RANGE: std::ops::Range<usize> = 17..26;

impl ColumnValueFeatures {
    pub fn compute(col: &Column, label: DataTypeLabel) -> Self {
        Self {
            type_onehot: TypeOneHot::from_label(label),
            length: length_features(col),
            numeric: numeric_features(col, label),
            character: character_features(col, label),
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let t = &self.type_onehot;
        let l = &self.length;
        let n = &self.numeric;
        let c = &self.character;
        vec![
            t.url,
            t.numeric,
            t.date,
            t.string,
            l.mean,
            l.min,
            l.max,
            l.variance,
            l.cv,
            l.unique_length_ratio,
            n.mean,
            n.min,
            n.max,
            n.variance,
            n.cv,
            n.unique_ratio,
            n.numeric_present,
            c.whitespace_mean,
            c.whitespace_cv,
            c.punctuation_mean,
            c.punctuation_cv,
            c.special_mean,
            c.special_cv,
            c.numeric_char_mean,
            c.numeric_char_cv,
            c.text_present,
        ]
    }
}

/// Population mean and variance; (0, 0) for an empty slice.
fn mean_var(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

fn cv(mean: f64, var: f64) -> f64 {
    if mean == 0.0 {
        0.0
    } else {
        var.sqrt() / mean.abs()
    }
}

fn min_max(xs: &[f64]) -> (f64, f64) {
    xs.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

pub fn length_features(col: &Column) -> LengthFeatures {
    let lengths: Vec<usize> = col.non_empty().map(|v| v.chars().count()).collect();
    if lengths.is_empty() {
        return LengthFeatures::default();
    }
    let xs: Vec<f64> = lengths.iter().map(|&l| l as f64).collect();
    let (mean, variance) = mean_var(&xs);
    let (min, max) = min_max(&xs);
    let distinct: HashSet<usize> = lengths.iter().copied().collect();
    LengthFeatures {
        mean,
        min,
        max,
        variance,
        cv: cv(mean, variance),
        unique_length_ratio: distinct.len() as f64 / lengths.len() as f64,
    }
}

/// Zeros with `numeric_present = 0` unless the column is NUMERIC.
pub fn numeric_features(col: &Column, label: DataTypeLabel) -> NumericFeatures {
    if label != DataTypeLabel::Numeric {
        return NumericFeatures::default();
    }
    let xs: Vec<f64> = col
        .non_empty()
        .filter_map(parse_number)
        .map(|p| p.value)
        .collect();
    let mut out = NumericFeatures {
        numeric_present: 1.0,
        ..Default::default()
    };
    if xs.is_empty() {
        return out;
    }
    let (mean, variance) = mean_var(&xs);
    let (min, max) = min_max(&xs);
    // +0.0 folds -0.0 into the same bit pattern.
    let distinct: HashSet<u64> = xs.iter().map(|x| (x + 0.0).to_bits()).collect();
    out.mean = mean;
    out.min = min;
    out.max = max;
    out.variance = variance;
    out.cv = cv(mean, variance);
    out.unique_ratio = distinct.len() as f64 / xs.len() as f64;
    out
}

/// Per-cell character class ratios: whitespace, ASCII punctuation, other symbols, digits.
pub fn char_ratios(cell: &str) -> [f64; 4] {
    let mut counts = [0usize; 4];
    let mut total = 0usize;
    for c in cell.chars() {
        total += 1;
        if c.is_whitespace() {
            counts[0] += 1;
        } else if c.is_ascii_punctuation() {
            counts[1] += 1;
        } else if !c.is_alphanumeric() {
            counts[2] += 1;
        } else if c.is_numeric() {
            counts[3] += 1;
        }
    }
    if total == 0 {
        return [0.0; 4];
    }
    counts.map(|n| n as f64 / total as f64)
}

/// Zeros with `text_present = 0` for NUMERIC columns.
pub fn character_features(col: &Column, label: DataTypeLabel) -> CharacterFeatures {
    if label == DataTypeLabel::Numeric {
        return CharacterFeatures::default();
    }
    let ratios: Vec<[f64; 4]> = col.non_empty().map(char_ratios).collect();
    let stat = |k: usize| {
        let xs: Vec<f64> = ratios.iter().map(|r| r[k]).collect();
        let (m, v) = mean_var(&xs);
        (m, cv(m, v))
    };
    let (whitespace_mean, whitespace_cv) = stat(0);
    let (punctuation_mean, punctuation_cv) = stat(1);
    let (special_mean, special_cv) = stat(2);
    let (numeric_char_mean, numeric_char_cv) = stat(3);
    CharacterFeatures {
        whitespace_mean,
        whitespace_cv,
        punctuation_mean,
        punctuation_cv,
        special_mean,
        special_cv,
        numeric_char_mean,
        numeric_char_cv,
        text_present: 1.0,
    }
}

pub fn column_value_features(col: &Column) -> ColumnValueFeatures {
    ColumnValueFeatures::compute(col, detect_column_type(col))
}

/// Elementwise `|a - b| / (|a| + |b| + eps)`.
pub fn value_pair(fa: &ColumnValueFeatures, fb: &ColumnValueFeatures, eps: f64) -> Vec<f64> {
    normalized_difference(&fa.to_vec(), &fb.to_vec(), eps)
}

/// Largest `f64` below one.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Always in `[0, 1)` for finite inputs and `eps > 0`, even where the quotient rounds up to 1.
pub fn normalized_difference(a: &[f64], b: &[f64], eps: f64) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let (d, s) = ((x - y).abs(), x.abs() + y.abs());
            let r = if d.is_finite() && s.is_finite() {
                d / (s + eps)
            } else {
                (x / 2.0 - y / 2.0).abs() / (x.abs() / 2.0 + y.abs() / 2.0 + eps / 2.0)
            };
            r.min(BELOW_ONE)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValuePairFeatures {
    pub lv: Vec<f64>,
    pub cos_value: f64,
}

/// Mean embedding of up to 20 sampled cells; the zero vector for NUMERIC columns.
pub fn value_embedding(
    embedder: &Embedder,
    col: &Column,
    label: DataTypeLabel,
    seed: u64,
) -> Result<Embedding> {
    if label == DataTypeLabel::Numeric {
        return Ok(Embedding::zeros(embedder.dim()?));
    }
    embedder.embed_value_set(&sample_text_values(col, DEFAULT_TEXT_SAMPLE, seed))
}
