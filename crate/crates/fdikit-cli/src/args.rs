//! Command-line arguments.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "fdikit", version, about = "Fault detection and isolation filter synthesis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Write the JSON result to this file.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Seed for all randomized choices.
    #[arg(long, env = "FDIKIT_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Rank tolerance (0 selects a default).
    #[arg(long, default_value_t = 0.0)]
    pub tol: f64,
}

#[derive(Debug, Args, Clone)]
pub struct FdArgs {
    /// Threshold for structural fault sensitivity.
    #[arg(long = "fd-tol", default_value_t = 1e-4)]
    pub fdtol: f64,
    /// Threshold for strong fault sensitivity.
    #[arg(long = "fd-gain-tol", default_value_t = 1e-2)]
    pub fdgaintol: f64,
    /// Frequencies for strong sensitivity tests (comma separated).
    #[arg(long = "fd-freq", value_delimiter = ',', allow_negative_numbers = true)]
    pub fdfreq: Vec<f64>,
    /// Stability degree of the filter poles.
    #[arg(long, allow_negative_numbers = true)]
    pub sdeg: Option<f64>,
}

#[derive(Debug, Args, Clone)]
pub struct SynArgs {
    #[command(flatten)]
    pub fd: FdArgs,
    /// Number of residual outputs.
    #[arg(long)]
    pub rdim: Option<usize>,
    /// Stability margin of the filter poles.
    #[arg(long, allow_negative_numbers = true)]
    pub smarg: Option<f64>,
    /// Filter poles to assign, for example `-1` or `-2+3i`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub poles: Vec<String>,
    /// Use the nullspace basis (false selects the observer basis).
    #[arg(long, action = clap::ArgAction::Set, default_value_t = true)]
    pub nullspace: bool,
    /// Search for least-order filters.
    #[arg(long, action = clap::ArgAction::Set, default_value_t = true)]
    pub minimal: bool,
    /// Design matrix file (a matrix, or a list for banks).
    #[arg(long)]
    pub hdesign: Option<PathBuf>,
    /// Second design matrix file (noise attenuation step).
    #[arg(long)]
    pub hdesign2: Option<PathBuf>,
    /// Structure matrix file for isolation.
    #[arg(long)]
    pub sfdi: Option<PathBuf>,
    /// Fault columns to detect.
    #[arg(long = "fd-select", value_delimiter = ',')]
    pub fdselect: Option<Vec<usize>>,
    /// Admissible condition number of the updating factors.
    #[arg(long, default_value_t = 1e4)]
    pub tcond: f64,
    /// Target noise gain of the approximate synthesis.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Solve the exact problem with the noise ignored.
    #[arg(long)]
    pub exact: bool,
    /// Test frequency for admissibility, `re` or `re+imi`.
    #[arg(long, allow_hyphen_values = true)]
    pub freq: Option<String>,
    /// Non-standard problem option (only 1 is supported).
    #[arg(long, default_value_t = 1)]
    pub nonstd: u32,
    /// Reference model file (emmsyn).
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Diagonal normalization of the updating factor (emmsyn).
    #[arg(long, value_enum, default_value_t = NormArg::Gain)]
    pub normalize: NormArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NormArg {
    Gain,
    Dcgain,
    Infnorm,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DistArg {
    Nugap,
    #[value(name = "inf")]
    Hinf,
    #[value(name = "2")]
    H2,
}

#[derive(Debug, Args, Clone)]
pub struct MdArgs {
    /// Components (rows) to evaluate (comma separated).
    #[arg(long = "md-select", value_delimiter = ',')]
    pub mdselect: Option<Vec<usize>>,
    /// Frequency grid; peak values over the grid replace the norms.
    #[arg(long = "md-freq", value_delimiter = ',')]
    pub mdfreq: Vec<f64>,
    /// Include the disturbance inputs.
    #[arg(long)]
    pub cdinp: bool,
    /// Rank used for the relative distance.
    #[arg(long = "md-index", default_value_t = 3)]
    pub mdindex: usize,
}

#[derive(Debug, Args, Clone)]
pub struct MdSynArgs {
    #[command(flatten)]
    pub md: MdArgs,
    #[arg(long = "md-tol", default_value_t = 1e-4)]
    pub mdtol: f64,
    #[arg(long = "md-gain-tol", default_value_t = 1e-2)]
    pub mdgaintol: f64,
    #[arg(long)]
    pub rdim: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub sdeg: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub smarg: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub poles: Vec<String>,
    #[arg(long, action = clap::ArgAction::Set, default_value_t = true)]
    pub nullspace: bool,
    #[arg(long, action = clap::ArgAction::Set, default_value_t = true)]
    pub minimal: bool,
    /// Strong detectability test on the frequency grid.
    #[arg(long)]
    pub emdtest: bool,
    /// Design matrices, one per component (`null` for the default).
    #[arg(long)]
    pub hdesign: Option<PathBuf>,
    /// Scale each row so that its smallest off-diagonal gain is one.
    #[arg(long)]
    pub normalize: bool,
    #[arg(long, allow_hyphen_values = true)]
    pub freq: Option<String>,
    /// Non-standard problem option (only 1 is supported).
    #[arg(long, default_value_t = 1)]
    pub nonstd: u32,
    /// Regularization parameter (accepted, not used).
    #[arg(long)]
    pub epsreg: Option<f64>,
    /// Zero stability degree (accepted, not used).
    #[arg(long, allow_negative_numbers = true)]
    pub sdegzer: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Measure {
    Fscond,
    F2ngap,
    Mmperf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NormSel {
    #[value(name = "inf")]
    Hinf,
    #[value(name = "2")]
    H2,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Achievable weak (or strong, with --fd-freq) structure matrix.
    Genspec {
        model: String,
        #[command(flatten)]
        fd: FdArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Feasibility and least orders of the rows of a structure matrix.
    Chkspec {
        model: String,
        #[arg(long)]
        sfdi: PathBuf,
        #[command(flatten)]
        fd: FdArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Weak structure matrix of an internal form.
    Tspec {
        model: String,
        #[arg(long = "fd-tol", default_value_t = 1e-4)]
        fdtol: f64,
        #[arg(long = "fd-freq", value_delimiter = ',')]
        fdfreq: Vec<f64>,
        /// One row per output group (or per bank member).
        #[arg(long)]
        block: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Strong structure matrix and gains of an internal form.
    Sspec {
        model: String,
        #[arg(long = "fd-gain-tol", default_value_t = 1e-2)]
        fdgaintol: f64,
        #[arg(long = "fd-freq", value_delimiter = ',')]
        fdfreq: Vec<f64>,
        #[arg(long)]
        block: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Exact fault detection filter.
    Efdsyn {
        model: String,
        #[command(flatten)]
        syn: SynArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Exact fault detection and isolation filter bank.
    Efdisyn {
        model: String,
        #[command(flatten)]
        syn: SynArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Approximate fault detection filter.
    Afdsyn {
        model: String,
        #[command(flatten)]
        syn: SynArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Approximate fault detection and isolation filter bank.
    Afdisyn {
        model: String,
        #[command(flatten)]
        syn: SynArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Exact model matching filter (needs --reference).
    Emmsyn {
        model: String,
        #[command(flatten)]
        syn: SynArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Exact model detection filter bank.
    Emdsyn {
        models: String,
        #[command(flatten)]
        syn: MdSynArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Approximate model detection filter bank.
    Amdsyn {
        models: String,
        #[command(flatten)]
        syn: MdSynArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Pairwise distances between component models.
    Mddist {
        models: String,
        #[arg(long, value_enum, default_value_t = DistArg::Nugap)]
        distance: DistArg,
        #[command(flatten)]
        md: MdArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Distances from a model to every component and the closest one.
    Mddist2c {
        models: String,
        model: String,
        #[arg(long, value_enum, default_value_t = DistArg::Nugap)]
        distance: DistArg,
        #[command(flatten)]
        md: MdArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Performance of a filter bank (synthesis output or internal form).
    Perf {
        filters: PathBuf,
        #[arg(long, value_enum, default_value_t = Measure::Fscond)]
        measure: Measure,
        #[arg(long, value_enum, default_value_t = NormSel::Hinf)]
        norm: NormSel,
        #[arg(long = "fd-freq", value_delimiter = ',')]
        fdfreq: Vec<f64>,
        #[arg(long)]
        sfdi: Option<PathBuf>,
        /// Reference models, one per bank member (mmperf).
        #[arg(long)]
        reference: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Gains of the internal forms of a model detection bank.
    Mdperf {
        bank: PathBuf,
        #[command(flatten)]
        md: MdArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Best matching component of a model detection bank for a model.
    Mdmatch {
        bank: PathBuf,
        model: String,
        #[command(flatten)]
        md: MdArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Noise gaps of a model detection bank.
    Mdgap {
        bank: PathBuf,
        #[arg(long = "md-freq", value_delimiter = ',')]
        mdfreq: Vec<f64>,
        #[arg(long)]
        cdinp: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Writes a built-in benchmark (yuan, unstable_plant, noisy_plant, actuator_plant,
    /// aircraft_grid) as a model file; standard output when -o is absent.
    Export {
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// Simulates residuals and evaluation signals; writes CSV.
    Simulate {
        model: String,
        /// Filter bank (synthesis output).
        #[arg(long)]
        filters: PathBuf,
        /// Final time.
        #[arg(long, default_value_t = 10.0)]
        tf: f64,
        /// Sampling step (the model sample time for discrete models).
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        /// Input signal `COL=KIND:AMP[:FREQ][@T0]`; COL is an index or `group.index`,
        /// KIND is step, square, sine or noise.
        #[arg(long = "signal")]
        signals: Vec<String>,
        #[arg(long, default_value_t = 0.9)]
        alpha: f64,
        #[arg(long, default_value_t = 0.1)]
        beta: f64,
        #[arg(long = "lowpass", default_value_t = 10.0)]
        gamma: f64,
        /// Decision thresholds, one per filter (or a single value for all).
        #[arg(long, value_delimiter = ',')]
        threshold: Vec<f64>,
        /// CSV file (standard output when absent).
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}
