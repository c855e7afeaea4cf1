//! Batch command-line frontend.
//!
//! Exit codes: 0 on success, 2 for usage and input problems (bad flags,
//! missing or malformed input files, configs violating preconditions), 1
//! for runtime failures (training errors, output I/O). Reports go to
//! stdout, diagnostics to stderr.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read};
use std::path::{Path, PathBuf};
use std::process;

use clap::{Parser, Subcommand, ValueEnum};

use nerkit::corpus::{read_conll, write_conll, ColumnSpec, Document};
use nerkit::eval::{benchmark, mention_f1};
use nerkit::features::Category;
use nerkit::pipeline::{tag_corpus, train_pipeline, LinkerMode, ModelBundle, PipelineConfig};
use nerkit::resources::{
    compile_gazetteers, compile_link_prob, compile_name_stats, compile_type_prob,
    load_resources, parse_gazetteer_spec, parse_kb, save_resources, KnowledgeResources,
    RuleTagger,
};

#[derive(Parser)]
#[command(
    name = "nerkit",
    version,
    about = "Knowledge-augmented named-entity recognition toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReportFormat {
    Text,
    Tsv,
}

#[derive(Subcommand)]
enum Command {
    /// Compile knowledge resources from raw TSV inputs into a resource
    /// directory
    CompileResources {
        /// Name list, one entity name per line
        #[arg(long)]
        names: PathBuf,
        /// KB type rows: entity TAB type
        #[arg(long)]
        kb: PathBuf,
        /// Alias rows: entity TAB surface form
        #[arg(long)]
        aliases: PathBuf,
        /// Link-annotated corpus rows: document TAB token TAB 0|1
        #[arg(long)]
        links: PathBuf,
        /// Gazetteer spec rows: name TAB comma-separated types
        #[arg(long)]
        gaz_spec: Option<PathBuf>,
        /// Output resource directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model bundle
    Train {
        /// Gold-annotated CoNLL corpus (token, POS, label)
        #[arg(long)]
        corpus: PathBuf,
        /// Plain-text key-value run configuration
        #[arg(long)]
        config: PathBuf,
        /// Resource directory (overrides the config's `resources` key)
        #[arg(long)]
        resources: Option<PathBuf>,
        /// Output bundle directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Tag a corpus with a trained bundle
    Tag {
        /// Bundle directory produced by `train`
        #[arg(long)]
        model: PathBuf,
        /// Input CoNLL corpus (label column optional)
        #[arg(long)]
        input: PathBuf,
        /// Output CoNLL file with predicted labels
        #[arg(long)]
        output: PathBuf,
        /// Resource directory (required from the name category upward)
        #[arg(long)]
        resources: Option<PathBuf>,
    },
    /// Score predictions against gold annotations
    Eval {
        /// Gold CoNLL file
        #[arg(long)]
        gold: PathBuf,
        /// Predicted CoNLL file (same document order)
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
    },
    /// Time tagging per category over a corpus
    Bench {
        /// Bundle directories, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        models: Vec<PathBuf>,
        /// CoNLL corpus to tag
        #[arg(long)]
        corpus: PathBuf,
        /// Resource directory
        #[arg(long)]
        resources: Option<PathBuf>,
        /// Timed repetitions (median reported; a warm-up pass is excluded)
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

type CliResult = Result<(), Failure>;

fn usage(msg: impl ToString) -> Failure {
    Failure::Usage(msg.to_string())
}

fn runtime(msg: impl ToString) -> Failure {
    Failure::Runtime(msg.to_string())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::CompileResources {
            names,
            kb,
            aliases,
            links,
            gaz_spec,
            out,
        } => compile_resources(&names, &kb, &aliases, &links, gaz_spec.as_deref(), &out),
        Command::Train {
            corpus,
            config,
            resources,
            out,
        } => train_command(&corpus, &config, resources.as_deref(), &out),
        Command::Tag {
            model,
            input,
            output,
            resources,
        } => tag_command(&model, &input, &output, resources.as_deref()),
        Command::Eval { gold, pred, format } => eval_command(&gold, &pred, format),
        Command::Bench {
            models,
            corpus,
            resources,
            reps,
            format,
        } => bench_command(&models, &corpus, resources.as_deref(), reps, format),
    };
    match result {
        Ok(()) => {}
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            process::exit(2);
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            process::exit(1);
        }
    }
}

fn open_input(path: &Path) -> Result<BufReader<File>, Failure> {
    if !path.is_file() {
        return Err(usage(format!("no such file: {}", path.display())));
    }
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read_input(path: &Path) -> Result<String, Failure> {
    let mut text = String::new();
    open_input(path)?
        .read_to_string(&mut text)
        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok(text)
}

fn compile_resources(
    names: &Path,
    kb: &Path,
    aliases: &Path,
    links: &Path,
    gaz_spec: Option<&Path>,
    out: &Path,
) -> CliResult {
    let tagger = RuleTagger::new();
    let name_stats = compile_name_stats(open_input(names)?, &tagger).map_err(usage)?;
    let dump = parse_kb(open_input(kb)?, open_input(aliases)?).map_err(usage)?;
    let spec = match gaz_spec {
        Some(path) => parse_gazetteer_spec(open_input(path)?).map_err(usage)?,
        None => Vec::new(),
    };
    let gazetteers = compile_gazetteers(&dump, &spec).map_err(usage)?;
    let link_prob = compile_link_prob(open_input(links)?).map_err(usage)?;
    let type_prob = compile_type_prob(&dump).map_err(usage)?;
    let resources = KnowledgeResources {
        name_stats,
        gazetteers,
        link_prob,
        type_prob,
        aliases: dump.alias_dictionary(),
    };
    save_resources(&resources, out).map_err(runtime)?;
    log::info!(
        "compiled {} gazetteers and {} entities into {}",
        resources.gazetteers.len(),
        resources.aliases.len(),
        out.display()
    );
    Ok(())
}

/// Parses the plain-text key-value run configuration; unknown keys are
/// rejected and defaults match the library's.
fn parse_run_config(text: &str) -> Result<(PipelineConfig, Option<PathBuf>), String> {
    let mut config = PipelineConfig::new(Category::Agnostic);
    let mut resources = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value", i + 1))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |what: &str| format!("config line {}: bad {what} {value:?}", i + 1);
        match key {
            "category" => {
                config.features.category =
                    Category::parse(value).ok_or_else(|| bad("category"))?
            }
            "window_word" => {
                config.features.window_word = value.parse().map_err(|_| bad("window_word"))?
            }
            "window_presence" => {
                config.features.window_presence =
                    value.parse().map_err(|_| bad("window_presence"))?
            }
            "use_pos" => config.features.use_pos = value.parse().map_err(|_| bad("use_pos"))?,
            "l1_coefficient" => {
                config.train.l1_coefficient =
                    value.parse().map_err(|_| bad("l1_coefficient"))?
            }
            "max_iterations" => {
                config.train.max_iterations =
                    value.parse().map_err(|_| bad("max_iterations"))?
            }
            "convergence_tolerance" => {
                config.train.convergence_tolerance =
                    value.parse().map_err(|_| bad("convergence_tolerance"))?
            }
            "memory" => config.train.memory = value.parse().map_err(|_| bad("memory"))?,
            "linker_mode" => {
                config.linker_mode = LinkerMode::parse(value).ok_or_else(|| bad("linker_mode"))?
            }
            "resources" => resources = Some(PathBuf::from(value)),
            other => return Err(format!("config line {}: unknown key {other:?}", i + 1)),
        }
    }
    Ok((config, resources))
}

fn load_resources_dir(dir: &Path) -> Result<KnowledgeResources, Failure> {
    if !dir.is_dir() {
        return Err(usage(format!("no such resources directory: {}", dir.display())));
    }
    load_resources(dir).map_err(usage)
}

fn read_corpus(path: &Path, spec: ColumnSpec) -> Result<Vec<Document>, Failure> {
    read_conll(open_input(path)?, spec).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn train_command(
    corpus_path: &Path,
    config_path: &Path,
    resources_flag: Option<&Path>,
    out: &Path,
) -> CliResult {
    let (config, resources_key) = parse_run_config(&read_input(config_path)?).map_err(usage)?;
    let resources_dir = resources_flag.map(Path::to_path_buf).or(resources_key);
    let resources = match &resources_dir {
        Some(dir) => Some(load_resources_dir(dir)?),
        None => {
            if config.features.category >= Category::Name {
                return Err(usage(format!(
                    "category {} requires a resources directory (--resources or the config's `resources` key)",
                    config.features.category
                )));
            }
            None
        }
    };
    let corpus = read_corpus(corpus_path, ColumnSpec::normalized())?;
    let bundle = train_pipeline(&corpus, &config, resources.as_ref()).map_err(runtime)?;
    bundle.save(out).map_err(runtime)?;
    log::info!(
        "trained {} bundle ({} nonzero first-pass weights) into {}",
        bundle.category(),
        bundle.first_pass().nonzero_weight_count(),
        out.display()
    );
    Ok(())
}

/// Reads a corpus whose label column may be absent (sniffed from the first
/// token line).
fn read_corpus_maybe_unlabeled(path: &Path) -> Result<Vec<Document>, Failure> {
    let text = read_input(path)?;
    let has_labels = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with("-DOCSTART-"))
        .is_some_and(|l| l.split_whitespace().count() >= 3);
    let spec = if has_labels {
        ColumnSpec::normalized()
    } else {
        ColumnSpec {
            token: 0,
            pos: Some(1),
            label: None,
        }
    };
    read_conll(text.as_bytes(), spec).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn tag_command(
    model: &Path,
    input: &Path,
    output: &Path,
    resources_dir: Option<&Path>,
) -> CliResult {
    let bundle = ModelBundle::load(model).map_err(usage)?;
    if bundle.needs_resources() && resources_dir.is_none() {
        return Err(usage(format!(
            "bundle category {} requires --resources <dir>",
            bundle.category()
        )));
    }
    let resources = match resources_dir {
        Some(dir) => Some(load_resources_dir(dir)?),
        None => None,
    };
    let corpus = read_corpus_maybe_unlabeled(input)?;
    let predictions = tag_corpus(&bundle, &corpus, resources.as_ref()).map_err(runtime)?;
    let tagged: Vec<Document> = corpus
        .iter()
        .map(|doc| {
            Document::new(
                doc.id(),
                doc.sentences().to_vec(),
                Some(predictions[doc.id()].clone()),
            )
            .expect("decoded spans are in bounds")
        })
        .collect();
    let mut writer = BufWriter::new(
        File::create(output).map_err(|e| runtime(format!("{}: {e}", output.display())))?,
    );
    write_conll(&mut writer, &tagged, bundle.scheme()).map_err(runtime)?;
    Ok(())
}

fn eval_command(gold: &Path, pred: &Path, format: ReportFormat) -> CliResult {
    let gold_docs = read_corpus(gold, ColumnSpec::normalized())?;
    let pred_docs = read_corpus(pred, ColumnSpec::normalized())?;
    let predictions: BTreeMap<String, Vec<_>> = pred_docs
        .iter()
        .map(|d| {
            (
                d.id().to_string(),
                d.gold_mentions().unwrap_or(&[]).to_vec(),
            )
        })
        .collect();
    let report = mention_f1(&gold_docs, &predictions).map_err(usage)?;
    match format {
        ReportFormat::Text => print!("{}", report.render_text()),
        ReportFormat::Tsv => print!("{}", report.render_tsv()),
    }
    Ok(())
}

fn bench_command(
    models: &[PathBuf],
    corpus_path: &Path,
    resources_dir: Option<&Path>,
    reps: usize,
    format: ReportFormat,
) -> CliResult {
    let mut bundles = Vec::with_capacity(models.len());
    for dir in models {
        bundles.push(ModelBundle::load(dir).map_err(usage)?);
    }
    if bundles.iter().any(ModelBundle::needs_resources) && resources_dir.is_none() {
        return Err(usage("one of the bundles requires --resources <dir>"));
    }
    let resources = match resources_dir {
        Some(dir) => Some(load_resources_dir(dir)?),
        None => None,
    };
    let corpus = read_corpus_maybe_unlabeled(corpus_path)?;
    if corpus.is_empty() {
        return Err(usage(format!("{}: corpus is empty", corpus_path.display())));
    }
    if reps < 3 {
        return Err(usage(format!("--reps must be at least 3, got {reps}")));
    }
    let refs: Vec<&ModelBundle> = bundles.iter().collect();
    let report = benchmark(&refs, &corpus, resources.as_ref(), reps).map_err(runtime)?;
    match format {
        ReportFormat::Text => print!("{}", report.render_text()),
        ReportFormat::Tsv => print!("{}", report.render_tsv()),
    }
    Ok(())
}
