use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

/// Newspaper-based dengue surveillance: corpus, keyword expansion,
/// annotation, classification and regional analytics.
#[derive(Debug, Parser)]
#[command(name = "dengue", version, about)]
struct Cli {
    /// Data directory holding every store.
    #[arg(long, short = 'd', global = true, env = "DENGUE_DATA_DIR", default_value = "data")]
    data: PathBuf,
    /// Pretty-print JSON output.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create a data directory with the bundled gazetteer, stopwords, seeds and config.
    Init,
    /// Add line-delimited news records to the corpus.
    Ingest {
        file: PathBuf,
    },
    /// Tokenize and geotag the corpus.
    Normalize {
        /// Replace the stopword list before normalizing.
        #[arg(long)]
        stopwords: Option<PathBuf>,
    },
    /// Per-year share of dengue-related articles.
    Stats {
        #[arg(long)]
        year: Option<i32>,
        /// Print the JSON payload instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Store summary.
    Status,
    #[command(subcommand)]
    Topics(TopicsCmd),
    #[command(subcommand)]
    Hitl(HitlCmd),
    #[command(subcommand)]
    Classify(ClassifyCmd),
    #[command(subcommand)]
    Analytics(AnalyticsCmd),
    /// Run the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
enum TopicsCmd {
    /// Fit seeded LDA on the normalized corpus with the current lexicon's seed sets.
    Fit {
        /// TOML file with LDA settings; overrides the `[lda]` section of the config.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Most probable words of one topic.
    TopWords {
        #[arg(long)]
        topic: usize,
        #[arg(short, default_value_t = 10)]
        n: usize,
    },
    /// Stage the top-n unseen words of each seeded topic for review.
    Propose {
        #[arg(short, default_value_t = 10)]
        n: usize,
    },
}

#[derive(Debug, Subcommand)]
enum HitlCmd {
    /// Score every document against the lexicon and queue those over the threshold.
    Score,
    /// Documents awaiting votes, best first.
    Queue {
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        offset: Option<usize>,
    },
    /// Record the annotators' votes for one document.
    Vote {
        doc_id: String,
        #[arg(required = true, num_args = 1..)]
        votes: Vec<String>,
    },
    /// Accept or reject the staged keyword candidates. Without any decision
    /// flags the staged candidates are printed and nothing changes.
    Review {
        /// Accept a candidate, optionally into another set: `word` or `word=set`.
        #[arg(long)]
        accept: Vec<String>,
        /// Reject a candidate (candidates without a decision are rejected too).
        #[arg(long)]
        reject: Vec<String>,
        /// JSON object from word to decision, as sent to the API.
        #[arg(long, conflicts_with_all = ["accept", "reject"])]
        decisions: Option<PathBuf>,
    },
    /// The keyword lexicon, at its current or an earlier version.
    Lexicon {
        #[arg(long)]
        version: Option<u32>,
    },
    /// Write the labeled dataset as JSON lines.
    Export {
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum ClassifyCmd {
    /// Summarize the keyword feature space over the corpus.
    Featurize,
    /// Train on every labeled document and save the model.
    Train {
        #[arg(long, value_parser = parse_kind)]
        kind: dengue_core::ModelKind,
    },
    /// Stratified holdout evaluation of all three models.
    Eval {
        #[arg(long)]
        split_seed: Option<u64>,
        /// Repeat over several seeds and summarize.
        #[arg(long, num_args = 1.., conflicts_with = "split_seed")]
        seeds: Vec<u64>,
    },
    /// Predict unlabeled documents in a slice of months.
    Predict {
        /// `all`, or `FROM..TO` in YYYY-MM with either end optional.
        #[arg(default_value = "all")]
        slice: String,
        /// Model file name under models/ (default: svm-ovr).
        #[arg(long, default_value = "svm-ovr")]
        model: String,
    },
}

#[derive(Debug, Args)]
struct AggregateArgs {
    #[arg(long, default_value = "country")]
    level: String,
    #[arg(long)]
    region: Option<String>,
    #[arg(long)]
    from: Option<String>,
    #[arg(long)]
    to: Option<String>,
    #[arg(long, conflicts_with_all = ["from", "to"])]
    period: Option<String>,
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long)]
    offset: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum AnalyticsCmd {
    /// Monthly news and case counts per region.
    Aggregate(AggregateArgs),
    /// Pearson correlation between monthly news and cases.
    Correlate {
        #[arg(long)]
        region: Option<String>,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        lag: i32,
        /// all, disease or intervention.
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to: Option<String>,
    },
    /// Districts whose case share exceeds their intervention-news share.
    Gaps {
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to: Option<String>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Dhaka North against Dhaka South.
    Citycorp {
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to: Option<String>,
    },
    /// Add official case counts from a CSV file.
    IngestCases {
        file: PathBuf,
    },
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// TOML service config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured bind address.
    #[arg(long)]
    bind: Option<std::net::SocketAddr>,
    #[arg(long)]
    read_only: bool,
}

fn parse_kind(s: &str) -> Result<dengue_core::ModelKind, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
