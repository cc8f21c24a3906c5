use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "swedge",
    version,
    about = "Power for two-treatment stepped wedge designs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Standard errors and power at a single parameter point
    Power(PowerArgs),
    /// Power over a grid of within-period correlations
    Sweep(SweepArgs),
    /// Sweep several designs side by side with power differences
    Compare(CompareArgs),
    /// List built-in designs, or print one in design-file format
    Catalog(CatalogArgs),
    /// Check a design for disallowed condition transitions
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Cs,
    Cohort,
    Nex,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "cs")]
    pub model: Model,
    /// Cluster-period size
    #[arg(long = "n", value_name = "N")]
    pub n: u32,
    /// Cluster autocorrelation for the nested exchangeable model (rho_a = cac * rho_w)
    #[arg(long, conflicts_with = "rho_a")]
    pub cac: Option<f64>,
    #[arg(long)]
    pub rho_a: Option<f64>,
    /// Individual autocorrelation for the cohort model
    #[arg(long)]
    pub pi: Option<f64>,
}

#[derive(Args)]
pub struct RawArgs {
    #[arg(long)]
    pub sigma_alpha_sq: Option<f64>,
    #[arg(long)]
    pub sigma_psi_sq: Option<f64>,
    #[arg(long)]
    pub sigma_nu_sq: Option<f64>,
    #[arg(long)]
    pub sigma_e_sq: Option<f64>,
}

impl RawArgs {
    pub fn any(&self) -> bool {
        self.sigma_alpha_sq.is_some()
            || self.sigma_psi_sq.is_some()
            || self.sigma_nu_sq.is_some()
            || self.sigma_e_sq.is_some()
    }
}

#[derive(Args)]
pub struct EffectArgs {
    /// Effect sizes for theta1 [theta2 [theta3]]; a single value applies to every effect
    #[arg(long, num_args = 1..=3, value_name = "DELTA")]
    pub delta: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// LABEL:w1,w2[,w3]:EFFECT, e.g. diff:1,-1:0.4
    #[arg(long, value_name = "SPEC")]
    pub contrast: Vec<String>,
    /// Drop the interaction column and estimate additive main effects
    #[arg(long)]
    pub additive: bool,
    /// Accept designs with contamination-prone transitions
    #[arg(long)]
    pub permissive: bool,
}

#[derive(Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
    /// Write to a file instead of stdout
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct PowerArgs {
    /// Catalog id or design file
    #[arg(long)]
    pub design: String,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub rho_w: Option<f64>,
    #[command(flatten)]
    pub raw: RawArgs,
    #[command(flatten)]
    pub effects: EffectArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub design: String,
    #[command(flatten)]
    pub model: ModelArgs,
    /// start:stop:step or a comma-separated list [default: 0.001:0.3:0.001]
    #[arg(long)]
    pub rho_grid: Option<String>,
    #[command(flatten)]
    pub effects: EffectArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct CompareArgs {
    /// Two or more catalog ids or design files; the first is the baseline
    #[arg(long, num_args = 1.., required = true)]
    pub design: Vec<String>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub rho_grid: Option<String>,
    #[command(flatten)]
    pub effects: EffectArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct CatalogArgs {
    /// Design to print; lists all designs when omitted
    pub id: Option<String>,
    #[arg(long)]
    pub json: bool,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub design: String,
    #[arg(long)]
    pub permissive: bool,
}
