//! Benchmark harness: fabricated table pairs, gold mappings and evaluation.

mod dataset;
mod fabricate;
mod lexicon;
mod metrics;

pub use dataset::{
    evaluate_dataset, evaluate_pair, load_entry, pair_examples, train_model, training_set,
    DatasetManifest, EntryFailure, EvalReport, GoldMapping, GoldPair, LoadedEntry, ManifestEntry,
    PairEval,
    PairReport, REPORT_FORMAT_VERSION,
};
pub use fabricate::{
    fabricate, inject_typo, FabricatedPair, FabricationMode, FabricationParams, NameNoise,
    MIN_COLUMNS, MIN_ROWS,
};
pub use lexicon::synonyms;
pub use metrics::{auc, pair_counts, Counts};
