mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dualsynth::tokenizer::SpecialPairing;

use config::Layer;

/// Exit status per failure category.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Other = 1,
    Usage = 2,
    Io = 3,
    Config = 4,
    Data = 5,
}

impl Category {
    fn label(self) -> &'static str {
        match self {
            Category::Other => "error",
            Category::Usage => "usage",
            Category::Io => "io",
            Category::Config => "config",
            Category::Data => "data",
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub category: Category,
    pub error: anyhow::Error,
}

pub type Outcome<T = ()> = Result<T, Failure>;

/// Tags an error with its category.
pub trait Categorize<T> {
    fn or_fail(self, category: Category) -> Outcome<T>;
}

impl<T, E: Into<anyhow::Error>> Categorize<T> for Result<T, E> {
    fn or_fail(self, category: Category) -> Outcome<T> {
        self.map_err(|e| Failure {
            category,
            error: e.into(),
        })
    }
}

pub fn fail<T>(category: Category, msg: impl std::fmt::Display) -> Outcome<T> {
    Err(Failure {
        category,
        error: anyhow::anyhow!("{msg}"),
    })
}

#[derive(Debug, Parser)]
#[command(
    name = "dualsynth",
    version,
    about = "Molecule fragmentation, dual-task instruction datasets and prediction scoring"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every subcommand. Each also reads `DUALSYNTH_<KEY>`.
#[derive(Debug, Args)]
struct GlobalArgs {
    /// `key = value` settings file, lowest precedence.
    #[arg(long, global = true, env = "DUALSYNTH_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, global = true, env = "DUALSYNTH_SEED")]
    seed: Option<u64>,
    /// Average SMILES length for the fragment cap; derived from data when unset.
    #[arg(long, global = true, env = "DUALSYNTH_K")]
    k: Option<usize>,
    /// Elasticity of the fragment cap.
    #[arg(long, global = true, env = "DUALSYNTH_ALPHA")]
    alpha: Option<f64>,
    /// Records per output shard.
    #[arg(long = "shards", global = true, env = "DUALSYNTH_SHARD_SIZE")]
    shard_size: Option<usize>,
    #[arg(long, global = true, env = "DUALSYNTH_OUT")]
    out: Option<PathBuf>,
    /// Vocabulary file (`id<TAB>class<TAB>token`).
    #[arg(long, global = true, env = "DUALSYNTH_VOCAB")]
    vocab: Option<PathBuf>,
    /// Functional-group list used to build the vocabulary.
    #[arg(long, global = true, env = "DUALSYNTH_GROUPS")]
    groups: Option<PathBuf>,
    /// Instruction template file.
    #[arg(long, global = true, env = "DUALSYNTH_TEMPLATES")]
    templates: Option<PathBuf>,
    /// Score fingerprint similarity of invalid pairs as 0 instead of skipping.
    #[arg(long, global = true, env = "DUALSYNTH_INVALID_AS_ZERO", num_args = 0..=1, default_missing_value = "true")]
    invalid_as_zero: Option<bool>,
    /// Which begin/end specials frame molecules and fragment sets.
    #[arg(long, global = true, env = "DUALSYNTH_SPECIAL_PAIRING", value_parser = parse_pairing)]
    special_pairing: Option<SpecialPairing>,
}

fn parse_pairing(s: &str) -> Result<SpecialPairing, String> {
    s.parse()
}

impl GlobalArgs {
    fn layer(&self) -> Layer {
        Layer {
            seed: self.seed,
            k: self.k,
            alpha: self.alpha,
            shard_size: self.shard_size,
            out: self.out.clone(),
            vocab: self.vocab.clone(),
            groups: self.groups.clone(),
            templates: self.templates.clone(),
            invalid_as_zero: self.invalid_as_zero,
            special_pairing: self.special_pairing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Auto,
    Molecule,
    Fragments,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Deduplicate and filter a corpus into a molecule library (TSV).
    Preprocess {
        /// SMILES file, first whitespace field per line; `-` for stdin.
        corpus: PathBuf,
    },
    /// Fragment one SMILES or every line of a file and print the cap used.
    Fragment {
        /// A SMILES string, or a path to a file of them.
        input: String,
    },
    /// Emit JSONL instruction shards and a manifest.
    Build {
        /// Library TSV from `preprocess`.
        #[arg(long)]
        library: Option<PathBuf>,
        /// Reactions TSV: reactants, product, reaction type.
        #[arg(long)]
        reactions: Option<PathBuf>,
    },
    /// Print token ids (or tokens) for SMILES text.
    Tokenize {
        /// SMILES text, or `-` to tokenize stdin line by line.
        text: String,
        #[arg(long, value_enum, default_value = "auto")]
        kind: KindArg,
        /// Print token strings instead of ids.
        #[arg(long)]
        tokens: bool,
    },
    /// Write the vocabulary file.
    Vocab,
    /// Score predictions against references.
    Eval {
        /// One prediction per line; extra tab-separated candidates are
        /// ranked alternatives. With a JSONL reference, lines are
        /// `id<TAB>candidates...`.
        preds: PathBuf,
        /// One reference per line, or a dataset JSONL file.
        refs: PathBuf,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Fragment-count and weight histograms of a built dataset.
    Stats {
        /// Output directory of `build`, or JSONL files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

fn run(cli: Cli) -> Outcome {
    let file = match &cli.global.config {
        Some(p) => Layer::load(p).or_fail(Category::Config)?,
        None => Layer::default(),
    };
    let settings = file.overlay(cli.global.layer()).resolve();
    match cli.command {
        Command::Preprocess { corpus } => commands::preprocess(&settings, &corpus),
        Command::Fragment { input } => commands::fragment(&settings, &input),
        Command::Build { library, reactions } => commands::build(&settings, library.as_deref(), reactions.as_deref()),
        Command::Tokenize { text, kind, tokens } => commands::tokenize(&settings, &text, kind, tokens),
        Command::Vocab => commands::vocab(&settings),
        Command::Eval { preds, refs, json } => commands::eval(&settings, &preds, &refs, json),
        Command::Stats { inputs, json } => commands::stats(&inputs, json),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { Category::Usage as u8 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error[{}]: {:#}", f.category.label(), f.error);
            ExitCode::from(f.category as u8)
        }
    }
}
