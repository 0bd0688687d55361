//! The `smutf` command line tool.
//!
//! [`run`] parses arguments, executes one subcommand and returns the process
//! exit code: 0 on success, 1 for usage errors, 2 for data errors and 3 for
//! embedding or LLM provider failures. Logs go to standard error; results go
//! to `--out` files or standard output as JSON.

mod args;

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::Serialize;
use serde_json::json;

use smutf_core::bench::{
    evaluate_dataset, fabricate, train_model, DatasetManifest, FabricationMode, FabricationParams,
    ManifestEntry, NameNoise, REPORT_FORMAT_VERSION,
};
use smutf_core::features::{parse_families, Family};
use smutf_core::matcher::{pair_rows, provenance};
use smutf_core::schema::detect_column_type;
use smutf_core::tagging::Tagger;
use smutf_core::{
    load_csv, match_schemas, EnsembleModel, Error, ErrorKind, GridMode, PipelineConfig, Profiler,
    ProviderKind, Result, TaggerKind,
};

pub use args::VERSION;
use args::{
    Cli, Command, DecisionArgs, EmbedderArg, GlobalArgs, GridArg, ModeArg, NoiseArg, TaggerArg,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_PROVIDER: i32 = 3;

pub fn exit_code(kind: ErrorKind) -> i32 {
    match kind {
        ErrorKind::Usage => EXIT_USAGE,
        ErrorKind::Data => EXIT_DATA,
        ErrorKind::Provider => EXIT_PROVIDER,
    }
}

/// Runs the tool on `argv` (including the program name) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.global.verbose);
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(e.kind())
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .try_init();
}

fn execute(cli: Cli) -> Result<()> {
    let mut config = base_config(&cli.global)?;
    apply_command_overrides(&mut config, &cli.command)?;
    config.validate()?;
    let threads = config.jobs.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| dispatch(cli.command, &config))
}

/// Defaults, then the config file, then global flags.
fn base_config(g: &GlobalArgs) -> Result<PipelineConfig> {
    let mut c = match &g.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(v) = g.seed {
        c.seed = v;
    }
    if let Some(v) = g.row_cap {
        c.row_cap = v;
    }
    if let Some(v) = g.jobs {
        c.jobs = Some(v);
    }
    if let Some(v) = g.epsilon {
        c.epsilon = v;
    }
    if let Some(e) = g.embedder {
        c.embedder.kind = match e {
            EmbedderArg::Hashed => ProviderKind::HashedNgram,
            EmbedderArg::Remote => ProviderKind::Remote,
        };
    }
    if let Some(v) = g.embed_dim {
        c.embedder.dim = v;
    }
    if let Some(v) = &g.embed_endpoint {
        c.embedder.endpoint_url = Some(v.clone());
    }
    if let Some(v) = &g.embed_model {
        c.embedder.model_name = v.clone();
    }
    if let Some(t) = g.tagger {
        c.tagger.kind = match t {
            TaggerArg::Rule => TaggerKind::Rule,
            TaggerArg::Llm => TaggerKind::Llm,
        };
    }
    if let Some(v) = &g.endpoint {
        c.tagger.endpoint_url = Some(v.clone());
    }
    if let Some(v) = &g.llm_model {
        c.tagger.model_name = v.clone();
    }
    Ok(c)
}

fn grid_mode(g: GridArg) -> GridMode {
    match g {
        GridArg::Full => GridMode::Full,
        GridArg::Fast => GridMode::Fast,
    }
}

fn apply_decision(c: &mut PipelineConfig, d: &DecisionArgs) {
    if d.threshold.is_some() {
        c.threshold = d.threshold;
    }
    if d.no_assignment {
        c.assignment = false;
    }
}

fn apply_command_overrides(c: &mut PipelineConfig, cmd: &Command) -> Result<()> {
    match cmd {
        Command::Features { drop, .. } => {
            if let Some(d) = drop {
                c.drop = parse_families(d)?;
            }
        }
        Command::Train {
            grid, budget, drop, ..
        } => {
            if let Some(g) = grid {
                c.grid = grid_mode(*g);
            }
            if budget.is_some() {
                c.budget = *budget;
            }
            if let Some(d) = drop {
                c.drop = parse_families(d)?;
            }
        }
        Command::Ablate { grid, budget, .. } => {
            if let Some(g) = grid {
                c.grid = grid_mode(*g);
            }
            if budget.is_some() {
                c.budget = *budget;
            }
        }
        Command::Match { decision, .. } | Command::Eval { decision, .. } => {
            apply_decision(c, decision)
        }
        Command::Tag { .. } | Command::Fabricate { .. } => {}
    }
    Ok(())
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("output serializes");
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dispatch(cmd: Command, config: &PipelineConfig) -> Result<()> {
    match cmd {
        Command::Tag { input, out } => tag(&input, config, out.out.as_deref()),
        Command::Features {
            left, right, out, ..
        } => features(&left, &right, config, out.out.as_deref()),
        Command::Train { pairs, out, .. } => train(&pairs, &out, config),
        Command::Match {
            left,
            right,
            model,
            out,
            ..
        } => {
            let model = EnsembleModel::load(&model)?;
            let profiler = Profiler::from_config(config)?;
            let l = load_csv(&left, config.row_cap, config.seed)?;
            let r = load_csv(&right, config.row_cap, config.seed)?;
            let result = match_schemas(&l, &r, &model, config, &profiler)?;
            write_json(&result, out.out.as_deref())
        }
        Command::Eval {
            manifest,
            model,
            out,
            ..
        } => {
            let model = EnsembleModel::load(&model)?;
            let manifest = DatasetManifest::load(&manifest)?;
            let profiler = Profiler::from_config(config)?;
            let report = evaluate_dataset(&manifest, &model, config, &profiler)?;
            log::info!("macro F1 {:.4}", report.macro_f1);
            write_json(&report, out.out.as_deref())
        }
        Command::Fabricate {
            input,
            mode,
            row_overlap,
            col_overlap,
            noise,
            noise_ops,
            typo_rate,
            count,
            out_dir,
        } => {
            let params = FabricationParams {
                row_overlap: percent(row_overlap, "row overlap")?,
                col_overlap: percent(col_overlap, "column overlap")?,
                noise,
                noise_ops: if noise_ops.is_empty() {
                    FabricationParams::default().noise_ops
                } else {
                    noise_ops.into_iter().map(noise_op).collect()
                },
                value_typo_rate: typo_rate,
            };
            fabricate_cmd(&input, fabrication_mode(mode), &params, count, &out_dir, config)
        }
        Command::Ablate {
            pairs,
            manifest,
            drop,
            out,
            ..
        } => ablate(&pairs, &manifest, &drop, config, out.out.as_deref()),
    }
}

fn percent(v: f64, what: &str) -> Result<f64> {
    if !(0.0..=100.0).contains(&v) {
        return Err(Error::Config(format!("{what} is a percentage, got {v}")));
    }
    Ok(v / 100.0)
}

fn noise_op(n: NoiseArg) -> NameNoise {
    match n {
        NoiseArg::Synonym => NameNoise::Synonym,
        NoiseArg::Shuffle => NameNoise::Shuffle,
        NoiseArg::Mask => NameNoise::Mask,
    }
}

fn fabrication_mode(m: ModeArg) -> FabricationMode {
    match m {
        ModeArg::Unionable => FabricationMode::Unionable,
        ModeArg::ViewUnionable => FabricationMode::ViewUnionable,
        ModeArg::Joinable => FabricationMode::Joinable,
        ModeArg::SemJoinable => FabricationMode::SemJoinable,
    }
}

fn tag(input: &Path, config: &PipelineConfig, out: Option<&Path>) -> Result<()> {
    let schema = load_csv(input, config.row_cap, config.seed)?;
    let tagger = Tagger::new(&config.tagger, config.seed)?;
    let labels: Vec<_> = schema.columns.iter().map(detect_column_type).collect();
    let cols: Vec<_> = schema.columns.iter().zip(labels.iter().copied()).collect();
    let tags = tagger.tag_columns(&cols);
    let columns: Vec<_> = schema
        .columns
        .iter()
        .zip(&labels)
        .zip(&tags)
        .enumerate()
        .map(|(i, ((c, l), t))| {
            json!({
                "index": i,
                "column": c.name,
                "type": l,
                "tag": t.tag,
                "provenance": t.provenance,
            })
        })
        .collect();
    write_json(
        &json!({
            "table": schema.name,
            "columns": columns,
            "config": config.snapshot(),
        }),
        out,
    )
}

fn features(left: &Path, right: &Path, config: &PipelineConfig, out: Option<&Path>) -> Result<()> {
    let l = load_csv(left, config.row_cap, config.seed)?;
    let r = load_csv(right, config.row_cap, config.seed)?;
    let profiler = Profiler::from_config(config)?;
    let lp = profiler.profile_schema(&l)?;
    let rp = profiler.profile_schema(&r)?;
    let schema = config.feature_schema();
    let rows = pair_rows(&lp, &rp, &schema, config.epsilon)?;
    let pairs: Vec<_> = rows
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let (i, j) = (k / rp.len(), k % rp.len());
            json!({
                "left_col": i,
                "right_col": j,
                "left_name": lp[i].name,
                "right_name": rp[j].name,
                "features": row,
            })
        })
        .collect();
    write_json(
        &json!({
            "feature_names": schema.names,
            "feature_schema": schema,
            "pairs": pairs,
            "provenance": provenance(config, &profiler, None),
        }),
        out,
    )
}

fn train(pairs: &Path, out: &Path, config: &PipelineConfig) -> Result<()> {
    let manifest = DatasetManifest::load(pairs)?;
    let profiler = Profiler::from_config(config)?;
    let model = train_model(&manifest, config, &profiler)?;
    model.save(out)?;
    log::info!("wrote {} (hash {})", out.display(), model.content_hash());
    Ok(())
}

fn fabricate_cmd(
    input: &Path,
    mode: FabricationMode,
    params: &FabricationParams,
    count: usize,
    out_dir: &Path,
    config: &PipelineConfig,
) -> Result<()> {
    if count == 0 {
        return Err(Error::Config("count must be at least 1".into()));
    }
    // Fabrication sees the whole table, not a row sample.
    let table = load_csv(input, usize::MAX, config.seed)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io {
        path: out_dir.to_path_buf(),
        source: e,
    })?;
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "table".into());
    let mut entries = Vec::new();
    for k in 0..count {
        let pair = fabricate(&table, mode, params, config.seed.wrapping_add(k as u64))?;
        let base = format!("{stem}_{mode}_{k}");
        let left = PathBuf::from(format!("{base}_left.csv"));
        let right = PathBuf::from(format!("{base}_right.csv"));
        let gold = PathBuf::from(format!("{base}_gold.jsonl"));
        pair.left.write_csv(&out_dir.join(&left))?;
        pair.right.write_csv(&out_dir.join(&right))?;
        pair.gold.write_jsonl(&out_dir.join(&gold))?;
        entries.push(ManifestEntry {
            left,
            right,
            gold,
            many_to_many: false,
        });
    }
    let manifest_path = out_dir.join("manifest.json");
    let mut manifest = if manifest_path.exists() {
        DatasetManifest::load(&manifest_path)?
    } else {
        DatasetManifest {
            entries: Vec::new(),
            base_dir: out_dir.to_path_buf(),
        }
    };
    manifest.entries.retain(|e| !entries.iter().any(|n| n.left == e.left));
    manifest.entries.extend(entries);
    manifest.save(&manifest_path)
}

fn ablate(
    pairs: &Path,
    manifest: &Path,
    drops: &[String],
    config: &PipelineConfig,
    out: Option<&Path>,
) -> Result<()> {
    let train_set = DatasetManifest::load(pairs)?;
    let eval_set = DatasetManifest::load(manifest)?;
    let mut variants: Vec<BTreeSet<Family>> = vec![BTreeSet::new()];
    if drops.is_empty() {
        variants.extend(Family::ALL.iter().map(|f| BTreeSet::from([*f])));
    } else {
        for d in drops {
            variants.push(parse_families(d)?);
        }
    }
    let profiler = Profiler::from_config(config)?;
    let mut rows = Vec::new();
    let mut full_f1 = None;
    for dropped in variants {
        let mut c = config.clone();
        c.drop = dropped.clone();
        let model = train_model(&train_set, &c, &profiler)?;
        let report = evaluate_dataset(&eval_set, &model, &c, &profiler)?;
        let base = *full_f1.get_or_insert(report.macro_f1);
        let name = if dropped.is_empty() {
            "full".to_string()
        } else {
            let names: Vec<&str> = dropped.iter().map(|f| f.as_str()).collect();
            format!("without {}", names.join("+"))
        };
        log::info!("{name}: macro F1 {:.4}", report.macro_f1);
        rows.push(json!({
            "name": name,
            "dropped": dropped,
            "feature_schema_hash": model.feature_schema.hash,
            "macro_f1": report.macro_f1,
            "macro_auc": report.macro_auc,
            "delta_f1": report.macro_f1 - base,
            "partial": report.partial,
        }));
    }
    write_json(
        &json!({
            "format_version": REPORT_FORMAT_VERSION,
            "variants": rows,
            "provenance": provenance(config, &profiler, None),
        }),
        out,
    )
}
