//! Flag grammar. Every numeric flag is optional so the config file can
//! supply it; see [`crate::config`] for the merge.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use heart_core::anchors::TokenRole;

#[derive(Debug, Parser)]
#[command(
    name = "heart",
    version,
    about = "Directional statistics and geodesic edits over text-encoder embeddings",
    long_about = "Directional statistics and geodesic edits over text-encoder embeddings.\n\n\
        Sequences are HEMB1 files; models, anchors and attribute directions are JSON \
        model documents. Exit status is 0 on success, 1 on a validation error and 2 \
        on an I/O error."
)]
pub struct Cli {
    /// TOML file with default settings; flags on the command line win
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit vMF, moVMF and Kent to a set of directions and report BIC
    Fit(FitArgs),
    /// Fit a concept anchor at one token role from a pool of sequences
    Anchor(AnchorArgs),
    /// Attribute direction between two anchors of the same concept
    AttrDir(AttrDirArgs),
    /// Replace a subject concept by geodesic interpolation between anchors
    EditSubject(EditSubjectArgs),
    /// Walk along an attribute direction
    EditAttribute(EditAttributeArgs),
    /// Geometry probes
    #[command(subcommand)]
    Probe(ProbeCommand),
    /// Draw synthetic directions into an HEMB file
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Denoising step at which an edited embedding is injected
    Schedule(ScheduleArgs),
}

/// Sequence files given directly or through a manifest.
#[derive(Debug, Args)]
pub struct Inputs {
    /// HEMB files
    #[arg(value_name = "HEMB")]
    pub inputs: Vec<PathBuf>,

    /// Text file listing HEMB files, one per line, relative to its own directory
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
}

fn role(s: &str) -> Result<TokenRole, String> {
    s.parse()
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub inputs: Inputs,

    /// Fit one role embedding per sequence instead of every non-special row
    #[arg(long, value_parser = role, value_name = "subject|eot|pad")]
    pub role: Option<TokenRole>,

    /// Number of moVMF components [default: 2]
    #[arg(short = 'K', long)]
    pub components: Option<usize>,

    /// Seed for the moVMF initialization [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, value_enum, default_value = "json")]
    pub format: ReportFormat,

    /// Concept column of the CSV report
    #[arg(long, default_value = "")]
    pub concept: String,

    /// Encoder column of the CSV report
    #[arg(long, default_value = "")]
    pub encoder: String,

    /// Report file; stdout when omitted
    #[arg(short, long)]
    pub output: Option<PathBuf>,

    /// Also write the winning model as a model document
    #[arg(long, value_name = "FILE")]
    pub model_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnchorArgs {
    #[command(flatten)]
    pub inputs: Inputs,

    #[arg(long)]
    pub concept: String,

    #[arg(long, value_parser = role, default_value = "subject", value_name = "subject|eot|pad")]
    pub role: TokenRole,

    /// Model document; stdout when omitted
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AttrDirArgs {
    /// Anchor of the negative pole (e.g. "young person")
    #[arg(long, value_name = "FILE")]
    pub negative: PathBuf,

    /// Anchor of the positive pole (e.g. "old person")
    #[arg(long, value_name = "FILE")]
    pub positive: PathBuf,

    /// Base concept the attribute applies to
    #[arg(long)]
    pub concept: String,

    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// Edit-plan overrides.
#[derive(Debug, Default, Args)]
pub struct PlanArgs {
    /// Edit strength; 0 is the identity [default: 1]
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,

    /// Angular decay scale of contamination weights, radians [default: 0.5]
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<f64>,

    /// Fraction of denoising steps before injection [default: 0.1]
    #[arg(long, allow_hyphen_values = true)]
    pub inject_fraction: Option<f64>,

    /// Explicit weight for one position, as POS=W; repeatable
    #[arg(long = "weight", value_name = "POS=W")]
    pub weights: Vec<String>,

    /// Edit the EOT row [default: true]
    #[arg(long, num_args = 0..=1, require_equals = true, default_missing_value = "true", value_name = "BOOL")]
    pub edit_eot: Option<bool>,

    /// Edit PAD rows [default: true]
    #[arg(long, num_args = 0..=1, require_equals = true, default_missing_value = "true", value_name = "BOOL")]
    pub edit_pad: Option<bool>,

    /// Edit rows between the subject and EOT [default: true]
    #[arg(long, num_args = 0..=1, require_equals = true, default_missing_value = "true", value_name = "BOOL")]
    pub propagate_downstream: Option<bool>,

    /// Edit rows between BOS and the subject [default: false]
    #[arg(long, num_args = 0..=1, require_equals = true, default_missing_value = "true", value_name = "BOOL")]
    pub propagate_upstream: Option<bool>,

    /// Strength used on the EOT row instead of lambda times its weight
    #[arg(long, allow_hyphen_values = true)]
    pub eot_strength: Option<f64>,

    /// Strength used on PAD rows instead of lambda times their weight
    #[arg(long, allow_hyphen_values = true)]
    pub pad_strength: Option<f64>,

    /// Edit the subject row only
    #[arg(long)]
    pub local: bool,
}

#[derive(Debug, Args)]
pub struct EditSubjectArgs {
    #[arg(short, long)]
    pub input: PathBuf,

    /// Edited HEMB file
    #[arg(short, long)]
    pub output: PathBuf,

    /// Per-token angle CSV; stdout when omitted
    #[arg(long, value_name = "FILE")]
    pub angles: Option<PathBuf>,

    /// Source subject anchor (model document)
    #[arg(long, value_name = "FILE")]
    pub source: PathBuf,

    /// Target subject anchor
    #[arg(long, value_name = "FILE")]
    pub target: PathBuf,

    #[arg(long, value_name = "FILE", requires = "eot_target")]
    pub eot_source: Option<PathBuf>,

    #[arg(long, value_name = "FILE", requires = "eot_source")]
    pub eot_target: Option<PathBuf>,

    #[arg(long, value_name = "FILE", requires = "pad_target")]
    pub pad_source: Option<PathBuf>,

    #[arg(long, value_name = "FILE", requires = "pad_source")]
    pub pad_target: Option<PathBuf>,

    #[command(flatten)]
    pub plan: PlanArgs,
}

#[derive(Debug, Args)]
pub struct EditAttributeArgs {
    #[arg(short, long)]
    pub input: PathBuf,

    #[arg(short, long)]
    pub output: PathBuf,

    #[arg(long, value_name = "FILE")]
    pub angles: Option<PathBuf>,

    /// Attribute direction (model document)
    #[arg(long, value_name = "FILE")]
    pub direction: PathBuf,

    /// Use the angle between the two anchors as lambda
    #[arg(long, conflicts_with = "lambda")]
    pub to_target: bool,

    #[command(flatten)]
    pub plan: PlanArgs,
}

#[derive(Debug, Subcommand)]
pub enum ProbeCommand {
    /// Coefficient of variation of token norms
    Thinness(ThinnessArgs),
    /// Angular and linear nearest neighbours in a vocabulary
    Nn(NnArgs),
    /// Per-token angle between two encodings of a prompt pair
    Contamination(ContaminationArgs),
    /// Copies of a sequence with every row rescaled
    Magnitude(MagnitudeArgs),
}

#[derive(Debug, Args)]
pub struct ThinnessArgs {
    #[command(flatten)]
    pub inputs: Inputs,

    /// Count BOS, EOT and PAD rows too
    #[arg(long)]
    pub include_special: bool,

    #[arg(long, default_value = "")]
    pub encoder: String,

    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NnArgs {
    /// HEMB whose tokens name its rows
    #[arg(long, value_name = "HEMB")]
    pub vocab: PathBuf,

    /// Query by vocabulary token
    #[arg(long, conflicts_with = "query")]
    pub query_token: Option<String>,

    /// Query by row of another HEMB file
    #[arg(long, value_name = "HEMB", requires = "row")]
    pub query: Option<PathBuf>,

    #[arg(long)]
    pub row: Option<usize>,

    /// Neighbours per ranking [default: 10]
    #[arg(short)]
    pub k: Option<usize>,

    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ContaminationArgs {
    /// Encoding of the first prompt
    pub a: PathBuf,

    /// Encoding of the second prompt
    pub b: PathBuf,

    #[arg(short, long)]
    pub output: Option<PathBuf>,

    /// Region means as JSON
    #[arg(long, value_name = "FILE")]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MagnitudeArgs {
    #[arg(short, long)]
    pub input: PathBuf,

    /// Comma-separated factors [default: 0.5,0.75,1,1.25,1.5,2]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub scales: Option<Vec<f64>>,

    /// One HEMB per scale is written here as STEM.xSCALE.hemb
    #[arg(long, value_name = "DIR")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// von Mises-Fisher draws around the first basis vector
    Vmf(SynthArgs),
    /// Kent draws with mean e1 and axes e2, e3
    Kent(SynthKentArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 16)]
    pub dim: usize,

    #[arg(long, default_value_t = 50.0, allow_hyphen_values = true)]
    pub kappa: f64,

    #[arg(short = 'n', long, default_value_t = 5000)]
    pub count: usize,

    /// [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(short, long)]
    pub output: PathBuf,

    /// Also write the generating model as a model document
    #[arg(long, value_name = "FILE")]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthKentArgs {
    #[command(flatten)]
    pub common: SynthArgs,

    /// β/κ, in [0, 0.5)
    #[arg(long, default_value_t = 0.2, allow_hyphen_values = true)]
    pub beta_ratio: f64,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    /// Denoising steps of the sampler [default: 30]
    #[arg(long)]
    pub total_steps: Option<usize>,

    #[arg(long, allow_hyphen_values = true)]
    pub inject_fraction: Option<f64>,
}
