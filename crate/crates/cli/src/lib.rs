//! The `cwb` command line: dataset synthesis, model training and
//! evaluation, reports, the HTTP service and backend utilities.

mod commands;
pub mod config;
mod fixtures;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cwb_core::Execution;

use crate::config::FileConfig;

/// An error caused by the invocation or its inputs (exit code 1).
/// Anything else that escapes a command is internal (exit code 2).
#[derive(Debug)]
pub struct UserError(pub String);

impl UserError {
    pub fn new(msg: impl Into<String>) -> Self {
        UserError(msg.into())
    }
}

impl fmt::Display for UserError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UserError {}

pub(crate) fn user(e: impl fmt::Display) -> anyhow::Error {
    UserError(e.to_string()).into()
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cwb", version, about = "Code-word detection toolkit")]
pub struct Cli {
    /// Seed for every random choice (default 0)
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Settings file, TOML or JSON; flags override it
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Run on one thread
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build labeled datasets
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Train a detector on a dataset directory
    Train(TrainArgs),
    /// Score a split with a trained model and write its metric report
    Eval(EvalArgs),
    /// Print the results table for stored runs
    Report(ReportArgs),
    /// Run the HTTP service
    Serve(ServeArgs),
    /// Talk to a transformer backend
    #[command(subcommand)]
    Backend(BackendCommand),
    /// Write small synthetic inputs for demos and tests
    #[command(subcommand)]
    Fixture(FixtureCommand),
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Email-style detection dataset: first nouns replaced by lexicon nouns
    Enron(EnronArgs),
    /// Comment dataset: drug terms replaced by their code words
    Reddit(RedditArgs),
}

#[derive(Debug, Args)]
pub struct EnronArgs {
    /// Source documents, one JSON object per line
    #[arg(long, value_name = "JSONL")]
    pub corpus: PathBuf,
    /// Replacement nouns, one per line
    #[arg(long, value_name = "TXT")]
    pub nouns: PathBuf,
    /// Output directory for train/val/test JSONL
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Use the small 2000/500/500 configuration as the base
    #[arg(long)]
    pub desk: bool,
    #[arg(long)]
    pub train_size: Option<usize>,
    #[arg(long)]
    pub val_size: Option<usize>,
    #[arg(long)]
    pub test_size: Option<usize>,
    /// Positives in the test split
    #[arg(long)]
    pub test_positives: Option<usize>,
    /// Shortest sentence kept, in words
    #[arg(long)]
    pub min_len: Option<usize>,
    /// Longest sentence kept, in words
    #[arg(long)]
    pub max_len: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RedditArgs {
    /// Comments, one JSON object per line; comments mentioning a target
    /// term feed the positive class unless --drug-comments is given
    #[arg(long, value_name = "JSONL")]
    pub comments: PathBuf,
    /// Separate source for the positive class
    #[arg(long, value_name = "JSONL")]
    pub drug_comments: Option<PathBuf>,
    /// Target-to-code-word table, two tab-separated columns
    #[arg(long, value_name = "TSV")]
    pub codewords: PathBuf,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Samples per class (default 600)
    #[arg(long)]
    pub per_class: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Bow,
    Tfidf,
    Rnn,
    Backend,
    Random,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Bow => "bow",
            ModelKind::Tfidf => "tfidf",
            ModelKind::Rnn => "rnn",
            ModelKind::Backend => "backend",
            ModelKind::Random => "random",
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// Dataset directory holding train.jsonl and val.jsonl
    #[arg(long, value_name = "DIR")]
    pub data: PathBuf,
    /// Where to write the model
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Word vectors for rnn, in text format; trained from the training
    /// split when absent
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
    /// Largest n-gram for bow/tfidf (default 3)
    #[arg(long)]
    pub ngram_max: Option<usize>,
    /// Minimum document frequency for bow/tfidf (default 3)
    #[arg(long)]
    pub min_doc_freq: Option<u32>,
    /// Epoch budget
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Learning rate for rnn
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Hidden size for rnn
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Backend endpoint: tcp://host:port or exec:program args
    #[arg(long, env = "CWB_BACKEND")]
    pub backend: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model file written by `train`
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    /// Labeled split, one JSON sample per line
    #[arg(long, value_name = "JSONL")]
    pub split: PathBuf,
    /// Report path; `.json` gets the full report, anything else TSV
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
    /// Also store the run (report plus predictions) in this data directory
    #[arg(long, env = "CWB_DATA_DIR", value_name = "DIR")]
    pub data_dir: Option<PathBuf>,
    /// Id for the stored run
    #[arg(long)]
    pub run_id: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Table,
    Tsv,
    Json,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Stored run id; repeat for several rows
    #[arg(long = "run", required = true)]
    pub runs: Vec<String>,
    #[arg(long, env = "CWB_DATA_DIR", value_name = "DIR")]
    pub data_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Listen address (default 127.0.0.1)
    #[arg(long)]
    pub host: Option<String>,
    /// Listen port (default 8080; 0 picks a free port)
    #[arg(long, env = "CWB_PORT")]
    pub port: Option<u16>,
    /// Storage directory for matrices and runs
    #[arg(long, env = "CWB_DATA_DIR", value_name = "DIR")]
    pub data_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum BackendCommand {
    /// Check that the backend answers
    Ping {
        /// tcp://host:port or exec:program args
        #[arg(long, env = "CWB_BACKEND")]
        endpoint: Option<String>,
    },
    /// Run the built-in stub backend on stdin/stdout, or on TCP with --tcp
    Stub {
        /// Listen on an ephemeral local port and print its address
        #[arg(long)]
        tcp: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum FixtureCommand {
    /// Synthetic email corpus (JSONL) plus a replacement noun list
    Enron {
        /// Minimum number of sentences to generate
        #[arg(long, default_value_t = 10_000)]
        sentences: usize,
        #[arg(long, value_name = "JSONL")]
        out: PathBuf,
        /// Also write the replacement nouns here
        #[arg(long, value_name = "TXT")]
        nouns: Option<PathBuf>,
    },
    /// Synthetic comment dump (JSONL) plus the drug code-word table
    Reddit {
        /// General comments
        #[arg(long, default_value_t = 2_000)]
        general: usize,
        /// Drug-related comments
        #[arg(long, default_value_t = 2_000)]
        drug: usize,
        #[arg(long, value_name = "JSONL")]
        out: PathBuf,
        /// Also write the code-word table here
        #[arg(long, value_name = "TSV")]
        codewords: Option<PathBuf>,
    },
    /// Word vectors trained on a synthetic general-domain corpus
    Embeddings {
        #[arg(long, default_value_t = 50)]
        dim: usize,
        #[arg(long, default_value_t = 40_000)]
        sentences: usize,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
}

/// Settings shared by every command after merging flags and the file.
pub struct Context {
    pub seed: u64,
    pub execution: Execution,
    pub file: FileConfig,
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USER } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let code = if e.chain().any(|c| c.is::<UserError>()) { EXIT_USER } else { EXIT_INTERNAL };
            eprintln!("error: {e:#}");
            code
        }
    }
}

pub fn execute(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let sequential = cli.sequential || file.sequential.unwrap_or(false);
    let ctx = Context {
        seed: cli.seed.or(file.seed).unwrap_or(0),
        execution: if sequential { Execution::Sequential } else { Execution::Parallel },
        file,
    };
    match cli.command {
        Command::Synth(SynthCommand::Enron(a)) => commands::synth_enron(&ctx, a),
        Command::Synth(SynthCommand::Reddit(a)) => commands::synth_reddit(&ctx, a),
        Command::Train(a) => commands::train(&ctx, a),
        Command::Eval(a) => commands::eval(&ctx, a),
        Command::Report(a) => commands::report(&ctx, a),
        Command::Serve(a) => commands::serve(&ctx, a),
        Command::Backend(BackendCommand::Ping { endpoint }) => commands::backend_ping(&ctx, endpoint),
        Command::Backend(BackendCommand::Stub { tcp }) => commands::backend_stub(tcp),
        Command::Fixture(f) => fixtures::run(&ctx, f),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["cwb", "--help"]), EXIT_OK);
        assert_eq!(run(["cwb", "synth", "enron", "--help"]), EXIT_OK);
        assert_eq!(run(["cwb", "--bogus"]), EXIT_USER);
        assert_eq!(run(["cwb", "train", "--model", "svm", "--data", "d", "--out", "m"]), EXIT_USER);
        assert_eq!(
            run([
                "cwb",
                "synth",
                "enron",
                "--corpus",
                "/nonexistent/c.jsonl",
                "--nouns",
                "/nonexistent/n",
                "--out",
                "/tmp/x"
            ]),
            EXIT_USER
        );
    }
}
