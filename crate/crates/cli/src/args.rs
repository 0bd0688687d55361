use std::path::PathBuf;
use std::sync::LazyLock;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub static VERSION: LazyLock<String> = LazyLock::new(|| {
    format!(
        "{} (model format {}, report format {}, feature schema {})",
        env!("CARGO_PKG_VERSION"),
        smutf_core::gbdt::MODEL_FORMAT_VERSION,
        smutf_core::bench::REPORT_FORMAT_VERSION,
        smutf_core::features::FEATURE_SCHEMA_VERSION,
    )
});

#[derive(Debug, Parser)]
#[command(name = "smutf", version = VERSION.as_str(), about = "Match columns across tabular schemas")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmbedderArg {
    Hashed,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaggerArg {
    Rule,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridArg {
    Full,
    Fast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Unionable,
    ViewUnionable,
    Joinable,
    SemJoinable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    Synonym,
    Shuffle,
    Mask,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML config file; flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Rows sampled per table
    #[arg(long = "rows", global = true, value_name = "N")]
    pub row_cap: Option<usize>,

    /// Worker threads (default: all cores)
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    #[arg(long, global = true, value_enum)]
    pub embedder: Option<EmbedderArg>,

    #[arg(long, global = true, value_name = "N")]
    pub embed_dim: Option<usize>,

    #[arg(long, global = true, value_name = "URL")]
    pub embed_endpoint: Option<String>,

    #[arg(long, global = true, value_name = "NAME")]
    pub embed_model: Option<String>,

    #[arg(long, global = true, value_enum)]
    pub tagger: Option<TaggerArg>,

    /// Chat-completion endpoint for the llm tagger
    #[arg(long, global = true, value_name = "URL")]
    pub endpoint: Option<String>,

    #[arg(long, global = true, value_name = "NAME")]
    pub llm_model: Option<String>,

    /// Denominator guard in value-feature differences
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,

    /// Log progress to standard error (repeat for more)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Args)]
pub struct OutArg {
    /// Output file (default: standard output)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecisionArgs {
    /// Threshold the mean ensemble score instead of member votes
    #[arg(long)]
    pub threshold: Option<f64>,

    /// Report every positive pair instead of a one-to-one matching
    #[arg(long)]
    pub no_assignment: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tag every column of a table
    Tag {
        #[arg(long, value_name = "CSV")]
        input: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Print hybrid pair features for two tables
    Features {
        #[arg(long, value_name = "CSV")]
        left: PathBuf,
        #[arg(long, value_name = "CSV")]
        right: PathBuf,
        /// Feature families to mask, comma separated
        #[arg(long, value_name = "FAMILIES")]
        drop: Option<String>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Train the ensemble on labeled table pairs
    Train {
        /// Manifest of training table pairs
        #[arg(long, value_name = "JSON")]
        pairs: PathBuf,
        #[arg(long, value_enum)]
        grid: Option<GridArg>,
        /// Search only this many seeded grid points
        #[arg(long, value_name = "N")]
        budget: Option<usize>,
        /// Feature families to mask, comma separated
        #[arg(long, value_name = "FAMILIES")]
        drop: Option<String>,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Match the columns of two tables
    Match {
        #[arg(long, value_name = "CSV")]
        left: PathBuf,
        #[arg(long, value_name = "CSV")]
        right: PathBuf,
        #[arg(long, value_name = "JSON")]
        model: PathBuf,
        #[command(flatten)]
        decision: DecisionArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Evaluate a model on a manifest of table pairs
    Eval {
        #[arg(long, value_name = "JSON")]
        manifest: PathBuf,
        #[arg(long, value_name = "JSON")]
        model: PathBuf,
        #[command(flatten)]
        decision: DecisionArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Cut labeled table pairs out of one table
    ///
    /// Pairs are added to DIR/manifest.json, which is created if missing.
    Fabricate {
        #[arg(long, value_name = "CSV")]
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Percent of each side's rows shared with the other side
        #[arg(long, default_value_t = 50.0)]
        row_overlap: f64,
        /// Percent of columns present on both sides
        #[arg(long, default_value_t = 50.0)]
        col_overlap: f64,
        /// Probability of renaming a shared column (sem_joinable)
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, value_enum, value_delimiter = ',', value_name = "OPS")]
        noise_ops: Vec<NoiseArg>,
        /// Per-cell typo probability on the right side
        #[arg(long, default_value_t = 0.0)]
        typo_rate: f64,
        /// Number of pairs to cut, each with its own seed
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
    /// Train and evaluate with feature families removed
    Ablate {
        /// Manifest of training table pairs
        #[arg(long, value_name = "JSON")]
        pairs: PathBuf,
        /// Manifest of evaluation table pairs
        #[arg(long, value_name = "JSON")]
        manifest: PathBuf,
        /// One ablation per flag, families comma separated (default: each family alone)
        #[arg(long, value_name = "FAMILIES")]
        drop: Vec<String>,
        #[arg(long, value_enum)]
        grid: Option<GridArg>,
        #[arg(long, value_name = "N")]
        budget: Option<usize>,
        #[command(flatten)]
        out: OutArg,
    },
}
