use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "sbc-lab",
    version,
    about = "Compute, classify and count S-balanced configurations of the n-body problem"
)]
pub struct Cli {
    /// JSON run configuration; command-line flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads (falls back to SBC_LAB_THREADS, then to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Problem description shared by the numerical subcommands.
#[derive(Debug, Clone, Default, Args)]
pub struct ProblemArgs {
    /// Number of bodies (equal unit masses unless --masses is given).
    #[arg(long)]
    pub n: Option<usize>,
    /// Ambient dimension.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub masses: Option<Vec<f64>>,
    /// Weights: a single leading weight, the leading d-1 weights, or all d.
    #[arg(long = "s", value_delimiter = ',')]
    pub s: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub restarts: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Poincaré polynomial coefficients, optionally with the identity suite.
    Coeffs {
        n: usize,
        /// Run the exact identity suite for every n up to this value.
        #[arg(long, value_name = "N_MAX")]
        identities: Option<usize>,
        /// Also evaluate the j-fold iterated logarithmic integral up to n.
        #[arg(long, value_name = "J")]
        integral: Option<usize>,
        #[arg(long, default_value_t = 1e-10)]
        quad_tol: f64,
    },
    /// Lower bounds on the number of solutions.
    Bounds {
        n: usize,
        d: Option<usize>,
        /// Equal-mass planar regime: below_eta1, between or above_etak.
        #[arg(long)]
        regime: Option<String>,
    },
    /// Betti numbers of the collision-free sphere modulo rotations (d = 4 quotient).
    Betti { n: usize },
    /// Enumerate the collinear solutions on the coordinate axes.
    Collinear {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Include the critical weights of every ordering.
        #[arg(long)]
        thresholds: bool,
    },
    /// Random-restart census of solutions.
    Census {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Also start searches along unstable directions of collinear solutions.
        #[arg(long)]
        saddle_follow: bool,
        /// Record wall-clock time in the report.
        #[arg(long)]
        timing: bool,
    },
    /// Follow one census solution along a straight path of weights.
    Continue {
        #[arg(long, value_name = "FILE")]
        census: PathBuf,
        /// Solution id in the census report.
        #[arg(long)]
        id: usize,
        /// Target weights, given like --s.
        #[arg(long, value_delimiter = ',', required = true)]
        to: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        steps: usize,
    },
    /// Integrate the gradient flow of the normalized potential.
    Flow {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Start from this configuration document instead of a random point.
        #[arg(long, value_name = "FILE")]
        start: Option<PathBuf>,
        #[arg(long = "T", default_value_t = 10.0)]
        t_end: f64,
        /// Stop once the collinearity angle drops below this (degrees).
        #[arg(long)]
        angle_stop: Option<f64>,
    },
    /// Check that the collinearity angle decreases along the flow.
    Check45 {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Number of seeds drawn inside the cone.
        #[arg(long, default_value_t = 100)]
        seeds: usize,
        #[arg(long, default_value_t = 45.0)]
        max_angle: f64,
        #[arg(long, default_value_t = 50.0)]
        t_max: f64,
    },
    /// Lift a planar solution to a relative equilibrium in four dimensions.
    Orbit {
        /// Census report to take the solution from; a census is run otherwise.
        #[arg(long, value_name = "FILE")]
        census: Option<PathBuf>,
        #[arg(long, alias = "id", default_value_t = 0)]
        census_id: usize,
        #[command(flatten)]
        problem: ProblemArgs,
        /// Sampling horizon; defaults to the period, or 2π/ω₂ when there is none.
        #[arg(long = "T")]
        t_end: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = sbc_core::equilibria::DEFAULT_RATIONAL_TOL)]
        rational_tol: f64,
        #[arg(long, default_value_t = sbc_core::equilibria::DEFAULT_MAX_DEN)]
        max_den: u64,
    },
    /// Morse-inequality check of a census report.
    MorseCheck { census: PathBuf },
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub res: Option<f64>,
    pub null: Option<f64>,
    pub col: Option<f64>,
    pub com: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub masses: Option<Vec<f64>>,
    pub s_values: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub restarts: Option<usize>,
    pub tolerances: ToleranceOverrides,
    pub output: OutputSpec,
}

pub const CONFIG_SCHEMA: &str = r#"run configuration (all fields optional):
{
  "n": 3, "d": 2, "masses": [1, 1, 1], "s_values": [1.5],
  "seed": 7, "restarts": 2000,
  "tolerances": {"res": 1e-10, "null": 1e-6, "col": 1e-8, "com": 1e-12},
  "output": {"path": "report.json", "format": "json"}
}"#;
