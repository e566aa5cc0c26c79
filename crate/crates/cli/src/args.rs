use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use anidil_core::equivalence::{GENERATOR_TOL, LOG_MAGNITUDE_TOL};
use anidil_core::expansive::DEFAULT_SEED;
use anidil_core::linalg::Tolerances;

#[derive(Parser, Debug)]
#[command(name = "anidil", version, about = "Anisotropic dilations, dilation groups and parabolic kernels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write the run report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Add wall-clock timing to the report (makes it non-reproducible).
    #[arg(long, global = true)]
    pub timing: bool,

    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TolArgs {
    /// Relative eigenvalue clustering tolerance.
    #[arg(long = "tol-cluster", global = true, default_value_t = Tolerances::default().cluster)]
    pub cluster: f64,
    /// Relative singular-value threshold for numerical rank.
    #[arg(long = "tol-rank", global = true, default_value_t = Tolerances::default().rank)]
    pub rank: f64,
    /// Relative grouping tolerance for defective eigenvalues.
    #[arg(long = "tol-jordan", global = true, default_value_t = Tolerances::default().jordan_cluster)]
    pub jordan: f64,
    /// Bound on the generator distance for plain equivalence.
    #[arg(long = "tol-generator", global = true, default_value_t = GENERATOR_TOL)]
    pub generator: f64,
    /// Bound on log-magnitude mismatch for equivalence up to linear maps.
    #[arg(long = "tol-magnitude", global = true, default_value_t = LOG_MAGNITUDE_TOL)]
    pub magnitude: f64,
}

impl TolArgs {
    pub fn spectral(&self) -> Tolerances {
        Tolerances {
            cluster: self.cluster,
            rank: self.rank,
            jordan_cluster: self.jordan,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Expansivity, spectrum and Jordan signature of a matrix.
    Analyze(MatrixArg),
    /// Trace-one generator, norm-inducing forms and residuals.
    Generator(GeneratorArgs),
    /// Compare two dilations.
    Equiv(EquivArgs),
    /// Canonical representative of the linear-equivalence class.
    Classify(MatrixArg),
    /// List the partitions of n.
    Partitions(PartitionArgs),
    /// Evolve a field under a parabolic kernel.
    Evolve(EvolveArgs),
    /// Maximal functions of a field.
    Maximal(MaximalArgs),
    /// Off-diagonal decay probe for two disjointly supported fields.
    Probe(ProbeArgs),
}

#[derive(Args, Debug)]
pub struct MatrixArg {
    /// Matrix document (JSON).
    #[arg(long = "in")]
    pub input: PathBuf,
}

#[derive(Args, Debug)]
pub struct GeneratorArgs {
    #[command(flatten)]
    pub matrix: MatrixArg,
    /// Also sample the quasi-triangle constant.
    #[arg(long)]
    pub verify: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquivMode {
    Plain,
    #[value(alias = "up-to-linear")]
    Linear,
}

#[derive(Args, Debug)]
pub struct EquivArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long = "in2")]
    pub input2: PathBuf,
    #[arg(long, value_enum, default_value_t = EquivMode::Plain)]
    pub mode: EquivMode,
    /// Horizon of the brute-force witness in plain mode (0 disables it).
    #[arg(long = "K", default_value_t = 100)]
    pub horizon: u32,
}

#[derive(Args, Debug)]
pub struct PartitionArgs {
    pub n: usize,
}

/// How `--in` is read by the field commands.
#[derive(Args, Debug, Clone)]
pub struct GroupArgs {
    /// Matrix document; a dilation unless `--generator` is given.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Read `--in` as a generator `P` instead of a dilation `A`.
    #[arg(long = "generator")]
    pub as_generator: bool,
}

/// Input field, or a Gaussian bump synthesized on an `N^n` grid of side `L`.
#[derive(Args, Debug, Clone)]
pub struct FieldArgs {
    /// Field file (binary format).
    #[arg(long = "in2")]
    pub field: Option<PathBuf>,
    /// Grid points per axis for the synthesized bump.
    #[arg(long = "N", default_value_t = 256)]
    pub size: usize,
    /// Side of the periodic box for the synthesized bump.
    #[arg(long = "L", default_value_t = 16.0)]
    pub length: f64,
    /// Width of the synthesized bump `exp(-pi |x|^2 / w^2)`.
    #[arg(long, default_value_t = 1.0)]
    pub width: f64,
    /// Dimension of the synthesized bump when no matrix fixes it.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
}

#[derive(Args, Debug)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub group: GroupArgs,
    #[command(flatten)]
    pub field: FieldArgs,
    /// One of gaussian-B, quasinorm, product-poisson.
    #[arg(long, default_value = "gaussian-B")]
    pub kernel: String,
    /// Comma-separated kernel times.
    #[arg(long = "t", value_delimiter = ',', default_value = "1")]
    pub t: Vec<f64>,
    /// Write the evolved fields to `<prefix>.<i>.field`.
    #[arg(long = "field-out")]
    pub field_out: Option<PathBuf>,
    /// Also write CSV exports next to the field files.
    #[arg(long)]
    pub csv: bool,
    /// Report the PDE residual and the semigroup defect.
    #[arg(long)]
    pub verify: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaximalMode {
    /// Discrete radial maximal function.
    Radial,
    /// Discrete non-tangential maximal function.
    Nontangential,
    /// Parabolic non-tangential maximal function.
    Parabolic,
}

#[derive(Args, Debug)]
pub struct MaximalArgs {
    #[command(flatten)]
    pub group: GroupArgs,
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long, value_enum, default_value_t = MaximalMode::Parabolic)]
    pub mode: MaximalMode,
    /// Parabolic scales (comma-separated).
    #[arg(long = "t", value_delimiter = ',', default_value = "0.25,0.5,1,2,4")]
    pub t: Vec<f64>,
    /// Lowest power of the dilation in the discrete modes.
    #[arg(long = "k-min", default_value_t = -2, allow_hyphen_values = true)]
    pub k_min: i32,
    /// Highest power of the dilation in the discrete modes.
    #[arg(long = "k-max", default_value_t = 2, allow_hyphen_values = true)]
    pub k_max: i32,
    /// Cone aperture; 0 reduces the non-tangential modes to the radial one.
    #[arg(long, default_value_t = 1.0)]
    pub aperture: f64,
    /// Width of the isotropic Gaussian test function.
    #[arg(long = "phi-width", default_value_t = 0.5)]
    pub phi_width: f64,
    /// Exponent for the reported `L^p` quasi-norms.
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Re-run on a doubled t-grid and report the relative change.
    #[arg(long)]
    pub refine: bool,
    /// Write the maximal function to `<prefix>.0.field`.
    #[arg(long = "field-out")]
    pub field_out: Option<PathBuf>,
    /// Also write a CSV export next to the field file.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Args, Debug)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub group: GroupArgs,
    /// First field.
    #[arg(long = "in2")]
    pub field1: PathBuf,
    /// Second field.
    #[arg(long = "in3")]
    pub field2: PathBuf,
    /// One of gaussian-B, quasinorm, product-poisson.
    #[arg(long, default_value = "gaussian-B")]
    pub kernel: String,
    /// Comma-separated kernel times.
    #[arg(long = "t", value_delimiter = ',', default_value = "0.25,0.5,1,2")]
    pub t: Vec<f64>,
}
