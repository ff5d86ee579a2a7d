use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "polydisk",
    version,
    about = "Spectra, Schatten norms and decay bounds of composition operators on the Hardy space of the infinite polydisk",
    long_about = "Spectra, Schatten norms and decay bounds of composition operators on the \
Hardy space of the infinite polydisk.\n\n\
A diagonal symbol φ(z) = (λ_j z_j) is described by a weight spec: \
list:l1,l2,..., geometric:rho=R, linear:beta=B (λ_j = e^{-βj}) or tower:alpha=A \
(λ_j = exp(-e^{j^α})).\n\n\
Data goes to stdout as CSV unless --csv or --json names a file. Exit status is 0 on \
success, 1 on domain, resource or failed checks, 2 on usage errors."
)]
pub struct Cli {
    /// Write the CSV table to this file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub csv: Option<PathBuf>,

    /// Write the full report as JSON to this file.
    #[arg(long, global = true, value_name = "PATH")]
    pub json: Option<PathBuf>,

    /// Run manifest path (default: next to the first output file).
    #[arg(long, global = true, value_name = "PATH")]
    pub manifest: Option<PathBuf>,

    /// Seed for randomized checks (ChaCha8 stream seeded from a u64).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Suppress the summary and warnings on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Non-increasing rearrangement of the eigenvalues λ^α of a diagonal
    /// composition operator, i.e. its approximation numbers a_n.
    ///
    /// Rows: n, log_value = log(1/a_n), a_n, witness multi-index α.
    Rearrange(RearrangeArgs),

    /// Schatten class membership via the Euler product
    /// Σ a_n^p = ∏_j (1 − λ_j^p)^{-1}, checked against stream partial sums.
    Schatten(SchattenArgs),

    /// Decay bounds for approximation numbers.
    #[command(subcommand)]
    Bounds(BoundsCommand),

    /// Finite sections of one-variable composition operators.
    #[command(subcommand)]
    Matrix(MatrixCommand),
}

#[derive(Debug, Args, Serialize)]
pub struct RearrangeArgs {
    /// Weight spec, e.g. linear:beta=1.
    #[arg(long)]
    pub weights: String,

    /// Number of terms.
    #[arg(long)]
    pub take: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct SchattenArgs {
    #[arg(long)]
    pub weights: String,

    /// Schatten exponent p > 0.
    #[arg(long)]
    pub p: f64,

    /// Number of stream terms in the partial sum.
    #[arg(long = "N", default_value_t = 5000)]
    pub n: u64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundsCommand {
    /// Dedekind eta bound η(e^{-r}) ≤ e^{D/r}, D = π²/6, optimized at
    /// r = 2D/log N: a_N ≤ exp(−log²N / (4D)) for λ_j = e^{-j}.
    ///
    /// a_N is computed exactly as e^{-k} from cumulative partition counts.
    Linear(LinearArgs),

    /// Infimum bound a_N ≤ inf_{x>1} exp[x(log F(1/x) − log N)] with
    /// F(r) = ∏_j (1 − λ_j^r)^{-1}, minimized by doubling and golden section.
    General(GeneralArgs),

    /// Sup-Schatten decay profile a_N ≤ C exp(−c e^{b (log N)^δ}) with
    /// δ = α/(α+1) for A_n = e^{n^α}; C = b = 1 and c is fitted.
    Supscha(SupschaArgs),

    /// Partial sums Σ_{2≤n≤N} 1/log^p(1/a_n), which diverge for symbols
    /// of truly infinite-dimensional type.
    Diverge(DivergeArgs),

    /// Term-by-term check of the lattice lower bound
    /// Σ α_j A_j ≤ (Σ α_j²)(Σ A_j²) behind that divergence, over {1..M}^{2p}.
    Cruci(CruciArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct LinearArgs {
    /// Comma-separated list of N.
    #[arg(long = "N", value_delimiter = ',', required = true)]
    pub n: Vec<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct GeneralArgs {
    #[arg(long)]
    pub weights: String,

    /// Comma-separated list of N.
    #[arg(long = "N", value_delimiter = ',', required = true)]
    pub n: Vec<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct SupschaArgs {
    /// Exponent α ∈ (0, 1] of A_n = e^{n^α}.
    #[arg(long)]
    pub alpha: f64,

    /// Comma-separated list of N ≥ 3.
    #[arg(long = "N-list", alias = "N", value_delimiter = ',', required = true)]
    pub n_list: Vec<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct DivergeArgs {
    #[arg(long)]
    pub weights: String,

    #[arg(long)]
    pub p: f64,

    #[arg(long = "N")]
    pub n: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct CruciArgs {
    #[arg(long)]
    pub weights: String,

    /// Positive integer p; the box has dimension q = 2p.
    #[arg(long)]
    pub p: u32,

    /// Box side M.
    #[arg(long = "M")]
    pub m: u32,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixCommand {
    /// Section of C_φ for φ(z) = sz + c on z^0..z^m, with the Weyl
    /// inequality ∏_{j≤n}|λ_j| ≤ ∏_{j≤n} a_j and |λ_{2n}|² ≤ a_1 a_n.
    ///
    /// Without --svd or --weyl the matrix itself is written, row-major,
    /// complex entries as re+imi. --random K checks K seeded draws instead.
    Affine(AffineArgs),

    /// Schechter's tensor-spectrum inclusion σ(T₁ ⊗ T₂) ⊂ σ(T₁)·σ(T₂)
    /// for the commuting pair T₁ ⊗ I, I ⊗ T₂.
    ///
    /// Operator specs: affine:s=S,c=C,m=M | diag:z1,z2,... | identity:D |
    /// moebius:u=U,m=M. --random K draws K triangular pairs instead.
    Kron(KronArgs),

    /// Norm bound ‖C_φ‖ ≤ √((1+|φ(0)|)/(1−|φ(0)|)) on sections of an
    /// affine symbol.
    Normbound(NormboundArgs),

    /// Spectrum of a compact diagonal composition operator: the points λ^α,
    /// largest first, and the accumulation point 0.
    Spectrum(SpectrumArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct AffineArgs {
    /// Complex s, e.g. 0.5 or 0.3+0.1i.
    #[arg(long, allow_hyphen_values = true, required_unless_present = "random")]
    pub s: Option<String>,

    #[arg(long, allow_hyphen_values = true, required_unless_present = "random")]
    pub c: Option<String>,

    /// Truncation degree.
    #[arg(long, required_unless_present = "random")]
    pub m: Option<usize>,

    /// Write singular values and eigenvalues instead of the matrix.
    #[arg(long, conflicts_with_all = ["weyl", "random"])]
    pub svd: bool,

    /// Weyl checks for n = 1..=N.
    #[arg(long, value_name = "N", conflicts_with = "random")]
    pub weyl: Option<usize>,

    /// Check K seeded random admissible symbols at every n.
    #[arg(long, value_name = "K", conflicts_with_all = ["s", "c", "m"])]
    pub random: Option<usize>,

    /// Largest degree for --random draws.
    #[arg(long, default_value_t = 20)]
    pub m_max: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct KronArgs {
    #[arg(long, required_unless_present = "random")]
    pub spec1: Option<String>,

    #[arg(long, required_unless_present = "random")]
    pub spec2: Option<String>,

    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,

    /// Check K seeded random triangular pairs.
    #[arg(long, value_name = "K", conflicts_with_all = ["spec1", "spec2"])]
    pub random: Option<usize>,

    /// Largest factor dimension for --random draws.
    #[arg(long, default_value_t = 8)]
    pub max_dim: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct NormboundArgs {
    #[arg(long, allow_hyphen_values = true, required_unless_present = "random")]
    pub s: Option<String>,

    #[arg(long, allow_hyphen_values = true, required_unless_present = "random")]
    pub c: Option<String>,

    /// Comma-separated truncation degrees.
    #[arg(long, value_delimiter = ',', default_value = "40")]
    pub m: Vec<usize>,

    /// Check K seeded random admissible symbols.
    #[arg(long, value_name = "K", conflicts_with_all = ["s", "c"])]
    pub random: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub weights: String,

    #[arg(long)]
    pub take: usize,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Rearrange(_) => "rearrange",
            Command::Schatten(_) => "schatten",
            Command::Bounds(b) => match b {
                BoundsCommand::Linear(_) => "bounds linear",
                BoundsCommand::General(_) => "bounds general",
                BoundsCommand::Supscha(_) => "bounds supscha",
                BoundsCommand::Diverge(_) => "bounds diverge",
                BoundsCommand::Cruci(_) => "bounds cruci",
            },
            Command::Matrix(m) => match m {
                MatrixCommand::Affine(_) => "matrix affine",
                MatrixCommand::Kron(_) => "matrix kron",
                MatrixCommand::Normbound(_) => "matrix normbound",
                MatrixCommand::Spectrum(_) => "matrix spectrum",
            },
        }
    }
}
