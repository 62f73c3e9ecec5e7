use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Author citation potential: compute P, I, R profiles and their grouped
/// statistics.
#[derive(Debug, Parser)]
#[command(name = "citepot", version, about)]
pub struct Cli {
    #[command(flatten)]
    pub shared: SharedArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute per-author profiles from events and an impact table.
    Compute,
    /// Group summaries, pooled summaries and variance decomposition.
    Summarize(VarArgs),
    /// Per-group correlation matrices with significance marks.
    Correlate(CorrelateArgs),
    /// Figure data: box plots, scatter pairs, ordered dimensions.
    Report(ReportArgs),
}

/// Flags accepted by every subcommand. Unset values fall back to the
/// config file, then to built-in defaults.
#[derive(Debug, Default, Args)]
pub struct SharedArgs {
    /// Events file (author_id,group,kind,journal,year,count).
    #[arg(long, global = true)]
    pub events: Option<PathBuf>,
    /// Impact table (journal,year,indicator,value).
    #[arg(long, global = true)]
    pub impacts: Option<PathBuf>,
    /// Scalar metrics (author_id,papers,cites,h).
    #[arg(long, global = true)]
    pub scalars: Option<PathBuf>,
    /// Precomputed profiles; used instead of events + impacts when given.
    #[arg(long, global = true)]
    pub profiles: Option<PathBuf>,
    /// Output directory. Overrides CITEPOT_OUT.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Target window as START:END.
    #[arg(long, global = true)]
    pub window: Option<String>,
    /// Indicator family; repeatable.
    #[arg(long = "family", global = true)]
    pub families: Vec<String>,
    /// strict, drop or nearest:K.
    #[arg(long, global = true)]
    pub missing: Option<String>,
    /// strict or open-references.
    #[arg(long = "window-policy", global = true)]
    pub window_policy: Option<String>,
    /// Stop at the first author that fails.
    #[arg(long = "fail-fast", global = true)]
    pub fail_fast: bool,
    /// Worker threads for per-author computation (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Prefix of report file names.
    #[arg(long, global = true)]
    pub dataset: Option<String>,
    /// Treat event/scalar inconsistencies as errors instead of warnings.
    #[arg(long, global = true)]
    pub strict_validation: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Text,
}

impl OutputFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
            OutputFormat::Text => "txt",
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct VarArgs {
    /// Variable (profiles column key, e.g. pi_sjr); repeatable. Default: all.
    #[arg(long = "var")]
    pub vars: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Pearson,
    Spearman,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[arg(long, value_enum, default_value = "pearson")]
    pub method: MethodArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureArg {
    Boxplot,
    Scatter,
    Ordered,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Figure kind; repeatable. Default: all three.
    #[arg(long = "kind", value_enum)]
    pub kinds: Vec<FigureArg>,
    /// Box-plot variables; repeatable. Default: all.
    #[arg(long = "var")]
    pub vars: Vec<String>,
    /// Scatter x variable (default p_<first family>).
    #[arg(long)]
    pub x: Option<String>,
    /// Scatter y variable (default i_<first family>).
    #[arg(long)]
    pub y: Option<String>,
    /// Also write one SVG box plot per variable.
    #[arg(long)]
    pub svg: bool,
}
