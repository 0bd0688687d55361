//! Labeled table pairs cut from a single table.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{GoldMapping, GoldPair};
use super::lexicon::synonyms;
use crate::error::{Error, Result};
use crate::name_features::tokenize_name;
use crate::schema::{Column, Schema};
use crate::seed;

pub const MIN_COLUMNS: usize = 4;
pub const MIN_ROWS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FabricationMode {
    Unionable,
    ViewUnionable,
    Joinable,
    SemJoinable,
}

impl FabricationMode {
    pub const ALL: [FabricationMode; 4] = [
        FabricationMode::Unionable,
        FabricationMode::ViewUnionable,
        FabricationMode::Joinable,
        FabricationMode::SemJoinable,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FabricationMode::Unionable => "unionable",
            FabricationMode::ViewUnionable => "view_unionable",
            FabricationMode::Joinable => "joinable",
            FabricationMode::SemJoinable => "sem_joinable",
        }
    }
}

impl fmt::Display for FabricationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FabricationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().replace('-', "_");
        FabricationMode::ALL
            .into_iter()
            .find(|m| m.as_str() == norm)
            .ok_or_else(|| Error::Config(format!("unknown fabrication mode `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NameNoise {
    Synonym,
    Shuffle,
    Mask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FabricationParams {
    /// Fraction of each side's rows that also appear on the other side.
    pub row_overlap: f64,
    /// Fraction of the columns present on both sides.
    pub col_overlap: f64,
    /// Probability that a shared column is renamed on the right side.
    pub noise: f64,
    pub noise_ops: Vec<NameNoise>,
    /// Per-cell probability of a character swap or drop on the right side.
    pub value_typo_rate: f64,
}

impl Default for FabricationParams {
    fn default() -> Self {
        Self {
            row_overlap: 0.5,
            col_overlap: 0.5,
            noise: 0.0,
            noise_ops: vec![NameNoise::Synonym, NameNoise::Shuffle, NameNoise::Mask],
            value_typo_rate: 0.0,
        }
    }
}

impl FabricationParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("row overlap", self.row_overlap),
            ("column overlap", self.col_overlap),
            ("noise", self.noise),
            ("value typo rate", self.value_typo_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.noise > 0.0 && self.noise_ops.is_empty() {
            return Err(Error::Config("name noise needs at least one operation".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FabricatedPair {
    pub left: Schema,
    pub right: Schema,
    pub gold: GoldMapping,
}

/// Row indices for the two sides; `overlap` of each side is shared.
fn split_rows(n: usize, overlap: f64, rng: &mut ChaCha8Rng) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let per_side = ((n as f64) / (2.0 - overlap)).floor() as usize;
    let shared = ((overlap * per_side as f64).round() as usize).min(n);
    let own = (per_side.saturating_sub(shared)).min((n - shared) / 2);
    if shared + own < 2 {
        return Err(Error::Data(format!(
            "{n} rows are too few for a {:.0}% row overlap",
            overlap * 100.0
        )));
    }
    let mut left: Vec<usize> = perm[..shared + own].to_vec();
    let mut right: Vec<usize> = perm[..shared]
        .iter()
        .chain(&perm[shared + own..shared + 2 * own])
        .copied()
        .collect();
    left.sort_unstable();
    right.shuffle(rng);
    Ok((left, right))
}

/// Shared columns plus the remaining columns dealt alternately to each side.
fn split_columns(
    n: usize,
    shared_count: usize,
    must_share: Option<usize>,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let mut pool: Vec<usize> = (0..n).filter(|&c| Some(c) != must_share).collect();
    pool.shuffle(rng);
    let mut shared: Vec<usize> = must_share.into_iter().collect();
    while shared.len() < shared_count {
        shared.push(pool.remove(0));
    }
    let (mut only_left, mut only_right) = (Vec::new(), Vec::new());
    for (k, c) in pool.into_iter().enumerate() {
        if k % 2 == 0 {
            only_left.push(c);
        } else {
            only_right.push(c);
        }
    }
    shared.sort_unstable();
    (shared, only_left, only_right)
}

/// The column with the most distinct values, as a join key.
fn key_column(table: &Schema) -> usize {
    let mut best = (0, 0);
    for (i, c) in table.columns.iter().enumerate() {
        let mut v: Vec<&str> = c.values.iter().map(String::as_str).collect();
        v.sort_unstable();
        v.dedup();
        if v.len() > best.1 {
            best = (i, v.len());
        }
    }
    best.0
}

fn pick(rows: &[usize], col: &Column) -> Vec<String> {
    rows.iter().map(|&r| col.values.get(r).cloned().unwrap_or_default()).collect()
}

fn noised_name(name: &str, right_index: usize, ops: &[NameNoise], rng: &mut ChaCha8Rng) -> String {
    let tokens = tokenize_name(name);
    let applicable: Vec<NameNoise> = ops
        .iter()
        .copied()
        .filter(|op| match op {
            NameNoise::Synonym => tokens.iter().any(|t| !synonyms(t).is_empty()),
            NameNoise::Shuffle => tokens.len() >= 2,
            NameNoise::Mask => true,
        })
        .collect();
    let Some(&op) = applicable.choose(rng) else {
        return name.to_owned();
    };
    match op {
        NameNoise::Mask => format!("col{right_index}"),
        NameNoise::Shuffle => {
            let mut t = tokens;
            let original = t.clone();
            for _ in 0..4 {
                t.shuffle(rng);
                if t != original {
                    break;
                }
            }
            t.join("_")
        }
        NameNoise::Synonym => tokens
            .iter()
            .map(|t| {
                let s = synonyms(t);
                s.choose(rng).map_or_else(|| t.clone(), |w| w.to_string())
            })
            .collect::<Vec<_>>()
            .join("_"),
    }
}

/// Swaps two adjacent characters or drops one.
pub fn inject_typo(cell: &str, rng: &mut ChaCha8Rng) -> String {
    let mut chars: Vec<char> = cell.chars().collect();
    if chars.is_empty() {
        return String::new();
    }
    if chars.len() >= 2 && rng.gen_bool(0.5) {
        let i = rng.gen_range(0..chars.len() - 1);
        chars.swap(i, i + 1);
    } else {
        chars.remove(rng.gen_range(0..chars.len()));
    }
    chars.into_iter().collect()
}

/// Cuts a labeled pair of tables out of `table`.
pub fn fabricate(
    table: &Schema,
    mode: FabricationMode,
    params: &FabricationParams,
    seed_value: u64,
) -> Result<FabricatedPair> {
    params.validate()?;
    let n_cols = table.len();
    let n_rows = table.row_count();
    if n_cols < MIN_COLUMNS || n_rows < MIN_ROWS {
        return Err(Error::Data(format!(
            "table `{}` has {n_cols} columns and {n_rows} rows; fabrication needs at least \
             {MIN_COLUMNS} columns and {MIN_ROWS} rows",
            table.name
        )));
    }
    let mut rng = seed::rng(seed_value, seed::FABRICATION);

    let row_overlap = match mode {
        FabricationMode::ViewUnionable => 0.0,
        _ => params.row_overlap,
    };
    let (left_rows, right_rows) = split_rows(n_rows, row_overlap, &mut rng)?;

    let (shared, only_left, only_right) = match mode {
        FabricationMode::Unionable => ((0..n_cols).collect(), vec![], vec![]),
        FabricationMode::ViewUnionable => {
            let k = (params.col_overlap * n_cols as f64).round() as usize;
            split_columns(n_cols, k.min(n_cols - 2), None, &mut rng)
        }
        FabricationMode::Joinable | FabricationMode::SemJoinable => {
            let k = ((params.col_overlap * n_cols as f64).round() as usize).clamp(1, n_cols);
            split_columns(n_cols, k, Some(key_column(table)), &mut rng)
        }
    };

    let mut left_cols: Vec<usize> = shared.iter().chain(&only_left).copied().collect();
    left_cols.sort_unstable();
    let mut right_cols: Vec<usize> = shared.iter().chain(&only_right).copied().collect();
    right_cols.shuffle(&mut rng);

    let left_columns: Vec<Column> = left_cols
        .iter()
        .map(|&c| Column::new(table.columns[c].name.clone(), pick(&left_rows, &table.columns[c])))
        .collect();
    let mut right_columns: Vec<Column> = right_cols
        .iter()
        .map(|&c| Column::new(table.columns[c].name.clone(), pick(&right_rows, &table.columns[c])))
        .collect();

    if mode == FabricationMode::SemJoinable && params.noise > 0.0 {
        for (j, &c) in right_cols.iter().enumerate() {
            if shared.contains(&c) && rng.gen_bool(params.noise) {
                right_columns[j].name =
                    noised_name(&table.columns[c].name, j, &params.noise_ops, &mut rng);
            }
        }
    }
    if params.value_typo_rate > 0.0 {
        for col in &mut right_columns {
            for cell in &mut col.values {
                if !cell.is_empty() && rng.gen_bool(params.value_typo_rate) {
                    *cell = inject_typo(cell, &mut rng);
                }
            }
        }
    }

    let mut pairs = Vec::new();
    for (i, &c) in left_cols.iter().enumerate() {
        if let Some(j) = right_cols.iter().position(|&rc| rc == c) {
            pairs.push(GoldPair {
                left: left_columns[i].name.clone(),
                right: right_columns[j].name.clone(),
                left_index: Some(i),
                right_index: Some(j),
            });
        }
    }
    let left = Schema::new(format!("{}_{}_left", table.name, mode), left_columns)?;
    let right = Schema::new(format!("{}_{}_right", table.name, mode), right_columns)?;
    Ok(FabricatedPair {
        left,
        right,
        gold: GoldMapping {
            pairs,
            many_to_many: false,
        },
    })
}
