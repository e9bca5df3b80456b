//! Command-line definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use saatrace::certify::BoundFamily;
use saatrace::family::Lipschitz;

#[derive(Debug, Parser)]
#[command(name = "saatrace", version, about = "Certified sample-average trace minimization")]
pub struct Cli {
    /// TOML manifest of flag values; command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Upper limit on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, short, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a sampling-amount certificate.
    #[command(args_override_self = true)]
    Certify(CertifyArgs),
    /// Hutchinson estimate of a trace from a fixed sample bank.
    #[command(args_override_self = true)]
    Estimate(EstimateArgs),
    /// Sample-average minimization over a finite space or a sphere.
    #[command(args_override_self = true)]
    Optimize(OptimizeArgs),
    /// Monte Carlo validation of a sampling amount.
    #[command(args_override_self = true)]
    Validate(ValidateArgs),
    /// Exact estimator distribution by enumeration of all sign patterns.
    #[command(args_override_self = true)]
    Oracle(OracleArgs),
    /// D-optimal sensor placement.
    #[command(args_override_self = true)]
    Oed(OedArgs),
    /// Hyperparameter estimation for a linear Gaussian model.
    #[command(args_override_self = true)]
    Hyper(HyperArgs),
}

/// Comma-separated coordinates, parsed as one value so a later flag
/// replaces the whole list.
#[derive(Debug, Clone, PartialEq)]
pub struct Coords(pub Vec<f64>);

fn parse_coords(s: &str) -> Result<Coords, String> {
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| format!("bad number '{t}'")))
        .collect::<Result<_, _>>()
        .map(Coords)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Paths(pub Vec<PathBuf>);

fn parse_paths(s: &str) -> Result<Paths, String> {
    Ok(Paths(s.split(',').map(|t| PathBuf::from(t.trim())).collect()))
}

fn parse_bound(s: &str) -> Result<BoundFamily, String> {
    s.parse().map_err(|e: saatrace::Error| e.to_string())
}

/// `l2=..,lf=..,lm=..`; user-supplied constants count as certified.
fn parse_lipschitz(s: &str) -> Result<Lipschitz, String> {
    let mut lip = Lipschitz {
        certified: true,
        ..Lipschitz::default()
    };
    for part in s.split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got '{part}'"))?;
        let v: f64 = v.trim().parse().map_err(|_| format!("bad number '{v}'"))?;
        if v < 0.0 || !v.is_finite() {
            return Err(format!("Lipschitz constant {k} must be finite and nonnegative"));
        }
        match k.trim() {
            "l2" => lip.l2 = Some(v),
            "lf" => lip.lf = Some(v),
            "lm" => lip.lm = Some(v),
            other => return Err(format!("unknown Lipschitz key '{other}'")),
        }
    }
    Ok(lip)
}

/// Accuracy target and bound selection shared by commands that derive `N`.
#[derive(Debug, Clone, Args)]
pub struct BoundArgs {
    /// Bound family id, e.g. finite-hoeffding or sphere-mixed.
    #[arg(long, value_parser = parse_bound)]
    pub bound: Option<BoundFamily>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Absolute constant of the sphere chaining bounds.
    #[arg(long)]
    pub const_c: Option<f64>,
    /// Constant multiplying the Dudley integrals for chaining surrogates.
    #[arg(long)]
    pub const_dudley: Option<f64>,
    /// User-supplied chaining surrogate for the M-norm metric.
    #[arg(long)]
    pub gamma2_dm: Option<f64>,
    #[arg(long)]
    pub gamma2_df: Option<f64>,
    #[arg(long)]
    pub gamma1_d2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyKind {
    /// Affine family with dense random coefficients.
    SyntheticDense,
    /// Affine family with a dominant diagonal.
    SyntheticDiagdom,
    /// One matrix per point, indexed `0..n`.
    List,
    /// D-optimal design family from `--g` and `--k`.
    Oed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpaceKind {
    Finite,
    Sphere,
}

/// A matrix family and its parameter space.
#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyKind>,
    /// Matrix dimension of a synthetic family.
    #[arg(long)]
    pub m: Option<usize>,
    /// Parameter dimension of a synthetic family or sphere.
    #[arg(long = "K")]
    pub k_dim: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub family_seed: u64,
    /// Offdiagonal scale of a synthetic family.
    #[arg(long)]
    pub family_scale: Option<f64>,
    /// Matrix Market files of a list family, comma separated.
    #[arg(long, value_parser = parse_paths)]
    pub matrices: Option<Paths>,
    /// Matrix Market file of the OED forward operator.
    #[arg(long)]
    pub g: Option<PathBuf>,
    /// Number of sensors of an OED design.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    pub space: Option<SpaceKind>,
    /// CSV of finite-space points, one per row.
    #[arg(long)]
    pub space_file: Option<PathBuf>,
    /// Sphere radius.
    #[arg(long = "B")]
    pub b: Option<f64>,
    /// Sphere center, comma separated; the origin when absent.
    #[arg(long, value_parser = parse_coords, allow_hyphen_values = true)]
    pub center: Option<Coords>,
    /// Net scale; defaults to the certificate's η or B/8.
    #[arg(long)]
    pub net_eta: Option<f64>,
    /// Lipschitz constants `l2=..,lf=..,lm=..` overriding the family's own.
    #[arg(long, value_parser = parse_lipschitz)]
    pub lipschitz: Option<Lipschitz>,
    /// Random pairs used when Lipschitz constants must be estimated.
    #[arg(long, default_value_t = 200)]
    pub lipschitz_pairs: usize,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub bound: BoundArgs,
    #[arg(long)]
    pub alpha_m: Option<f64>,
    #[arg(long)]
    pub alpha_f: Option<f64>,
    #[arg(long = "alpha-2")]
    pub alpha_2: Option<f64>,
    /// Compute the offdiagonal masses and dimensions from the problem flags.
    #[arg(long)]
    pub from_family: bool,
    /// Cardinality of a finite space.
    #[arg(long)]
    pub card: Option<u64>,
    /// Natural log of the cardinality, for spaces too large to count.
    #[arg(long, conflicts_with = "card")]
    pub ln_card: Option<f64>,
    /// Re-evaluate a certificate JSON file and check that N is reproduced.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["from_family", "eps", "delta"])]
    pub replay: Option<PathBuf>,
    #[command(flatten)]
    pub problem: ProblemArgs,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Matrix Market file of the matrix whose trace is estimated.
    #[arg(long, required_unless_present = "theta")]
    pub matrix: Option<PathBuf>,
    /// Evaluate the problem family at this point instead of reading a matrix.
    #[arg(long, value_parser = parse_coords, allow_hyphen_values = true, conflicts_with = "matrix")]
    pub theta: Option<Coords>,
    #[arg(long, required_unless_present = "bank")]
    pub n: Option<usize>,
    #[arg(long, required_unless_present = "bank")]
    pub seed: Option<u64>,
    /// Read the sample bank from an RBNK file instead of drawing it.
    #[arg(long, conflicts_with_all = ["n", "seed"])]
    pub bank: Option<PathBuf>,
    /// Write the sample bank to an RBNK file.
    #[arg(long)]
    pub bank_out: Option<PathBuf>,
    #[command(flatten)]
    pub problem: ProblemArgs,
}

/// Sample amount: explicit `--n` or a certificate via `--bound`.
#[derive(Debug, Clone, Args)]
pub struct SamplingArgs {
    #[arg(long, conflicts_with = "bound")]
    pub n: Option<usize>,
    #[command(flatten)]
    pub bound: BoundArgs,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long, required = true)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Pattern-search rounds after the net sweep.
    #[arg(long, default_value_t = 30)]
    pub refine: usize,
    /// Write the sample bank to an RBNK file.
    #[arg(long)]
    pub bank_out: Option<PathBuf>,
    /// Write the net to a CSV file with a JSON header line.
    #[arg(long)]
    pub net_out: Option<PathBuf>,
    #[command(flatten)]
    pub problem: ProblemArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Master seed; trial j uses a seed derived from (seed, j).
    #[arg(long, required = true)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 30)]
    pub refine: usize,
    /// Write the per-trial CSV log here.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[command(flatten)]
    pub problem: ProblemArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Deviations at which exact tails and tail bounds are reported (JSON only).
    #[arg(long, value_parser = parse_coords)]
    pub t: Option<Coords>,
}

#[derive(Debug, Args)]
pub struct OedArgs {
    /// Matrix Market file of G (parameter dimension × candidate sensors).
    #[arg(long)]
    pub g: PathBuf,
    #[arg(long)]
    pub k: usize,
    /// Also report the greedy design.
    #[arg(long)]
    pub greedy: bool,
    /// Seed for the sample-average solve; without it only exact results are reported.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Validation trials run after the solve.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long, default_value_t = saatrace::applications::DEFAULT_DESIGN_CAP)]
    pub design_cap: u64,
}

#[derive(Debug, Args)]
pub struct HyperArgs {
    /// Matrix Market file of the forward operator F (data × parameters).
    #[arg(long)]
    pub forward: PathBuf,
    /// Vector file of the data d.
    #[arg(long)]
    pub data: PathBuf,
    /// Matrix Market file of the prior covariance Γ₀.
    #[arg(long)]
    pub gamma0: PathBuf,
    /// Vector file of the prior mean μ₀.
    #[arg(long)]
    pub mu0: PathBuf,
    #[arg(long)]
    pub sigma: f64,
    /// Lower limit on the prior scale θ₁.
    #[arg(long)]
    pub theta_min: f64,
    #[arg(long = "B")]
    pub b: f64,
    #[arg(long, value_parser = parse_coords, allow_hyphen_values = true)]
    pub center: Coords,
    #[arg(long)]
    pub net_eta: Option<f64>,
    #[arg(long, default_value_t = 30)]
    pub refine: usize,
    #[arg(long, required = true)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long, value_parser = parse_lipschitz)]
    pub lipschitz: Option<Lipschitz>,
    #[arg(long, default_value_t = 200)]
    pub lipschitz_pairs: usize,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub log: Option<PathBuf>,
}
