use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "procstory", version, about = "Tiered procedural story reasoning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write a checkpoint.
    Train(TrainArgs),
    /// Extract participants and annotate attribute states with a completion service.
    Label(LabelArgs),
    /// Produce additional story pairs.
    Augment(AugmentArgs),
    /// Score a checkpoint in-domain and on zero-shot tasks.
    Evaluate(EvaluateArgs),
    /// Write the physical participants of each story.
    ExtractParticipants(ExtractArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    StoryCentric,
    ParticipantCentric,
    SentenceCentric,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Checkpoint directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long, value_enum)]
    pub regime: Option<RegimeArg>,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    #[command(flatten)]
    pub common: Common,
    /// JSONL of `{"id", "sentences"}` records.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Stop after participant extraction.
    #[arg(long)]
    pub participants_only: bool,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct IoArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[command(subcommand)]
    pub strategy: Strategy,
}

#[derive(Debug, Subcommand)]
pub enum Strategy {
    /// Replace non-human participants with their direct hypernym.
    Abstract(IoArgs),
    /// Insert adjectives and adverbs outside participant phrases.
    Insert(IoArgs),
    /// Label raw external story pairs.
    External(IoArgs),
    /// Stratified sample of a typed corpus.
    Sample(SampleArgs),
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Joint,
    Single,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Annotated test pairs scored for accuracy, consistency and verifiability.
    #[arg(long)]
    pub in_domain: Option<PathBuf>,
    /// Multiple-choice task file; repeat for several tasks.
    #[arg(long)]
    pub zero_shot: Vec<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub io: IoArgs,
}
