//! Schema matching over tabular data.
//!
//! Each column is profiled into a type label, value statistics, name and
//! value embeddings and a semantic tag. Every cross pair of columns becomes a
//! hybrid feature vector, a boosted-tree ensemble scores it, and a greedy
//! selection turns the score matrix into matched pairs.
//!
//! ```no_run
//! use smutf_core::{load_csv, match_schemas, EnsembleModel, PipelineConfig, Profiler};
//! # fn main() -> smutf_core::Result<()> {
//! let config = PipelineConfig::default();
//! let profiler = Profiler::from_config(&config)?;
//! let model = EnsembleModel::load("model.json".as_ref())?;
//! let left = load_csv("a.csv".as_ref(), config.row_cap, config.seed)?;
//! let right = load_csv("b.csv".as_ref(), config.row_cap, config.seed)?;
//! let result = match_schemas(&left, &right, &model, &config, &profiler)?;
//! for p in &result.pairs {
//!     println!("{} -> {} ({:.3})", p.left_name, p.right_name, p.score);
//! }
//! # Ok(())
//! # }
//! ```

pub mod bench;
pub mod config;
pub mod embedding;
pub mod error;
pub mod features;
pub mod gbdt;
mod http;
pub mod matcher;
pub mod name_features;
pub mod schema;
pub mod seed;
pub mod tagging;
pub mod value_features;

pub use config::{PipelineConfig, Provenance};
pub use embedding::{Embedder, Embedding, EmbeddingProviderConfig, ProviderKind};
pub use error::{Error, ErrorKind, Result};
pub use features::{Family, FeatureSchema, HybridFeature};
pub use gbdt::{EnsembleModel, GbdtHyperParams, GbdtModel, GridMode};
pub use matcher::{hybrid_features, match_schemas, ColumnProfile, MatchResult, MatchedPair, Profiler};
pub use schema::{load_csv, Column, DataTypeLabel, Schema};
pub use tagging::{HxlTag, TaggerConfig, TaggerKind};
