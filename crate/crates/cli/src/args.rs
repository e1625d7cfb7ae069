use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "posgain", version, about = "Gain analysis, synthesis and robust analysis of linear positive systems")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Margin used to close strict inequalities.
    #[arg(long, global = true, default_value_t = 1e-7)]
    pub epsilon: f64,
    /// Lower bound imposed on every Lyapunov weight.
    #[arg(long = "lambda-floor", global = true, default_value_t = 1e-6)]
    pub lambda_floor: f64,
    /// Grid points per parameter for the independent robust check (0 skips it).
    #[arg(long, global = true, default_value_t = 101)]
    pub grid: usize,
    /// Seed for commands that draw random instances.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the LP that was solved to this path.
    #[arg(long = "dump-lp", global = true)]
    pub dump_lp: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Structured,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    L1,
    Linf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormArg {
    Full,
    Reduced,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Table2,
    Table3,
    Table4,
    Table5,
    Ex72,
    Delay,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Positivity and stability report for a system file.
    Check {
        file: PathBuf,
        /// Structural tolerance for the positivity classification.
        #[arg(long, default_value_t = 0.0)]
        tol: f64,
    },
    /// L1 or L∞ gain of a system file.
    Gain {
        file: PathBuf,
        #[arg(long, value_enum)]
        norm: NormArg,
    },
    /// State-feedback synthesis with an L∞ bound.
    Synth {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = NormArg::Linf)]
        norm: NormArg,
        /// Document holding a `zero_pattern` list.
        #[arg(long)]
        zeros: Option<PathBuf>,
        /// Document holding `K_lower` and `K_upper`.
        #[arg(long)]
        bounds: Option<PathBuf>,
    },
    /// Robust gain of a polynomial system or LFT document.
    RobustGain {
        file: PathBuf,
        #[arg(long, value_enum)]
        norm: NormArg,
        #[command(flatten)]
        relax: RelaxOpts,
        /// Treat an affine polynomial system as a vertex family.
        #[arg(long)]
        vertices: bool,
    },
    /// Robust state-feedback synthesis for a polynomial system document.
    RobustSynth {
        file: PathBuf,
        #[command(flatten)]
        relax: RelaxOpts,
        #[arg(long)]
        zeros: Option<PathBuf>,
        #[arg(long)]
        bounds: Option<PathBuf>,
    },
    /// Recompute one of the shipped worked examples.
    Reproduce {
        #[arg(value_enum)]
        experiment: Experiment,
        /// Random instances for table2 and delay.
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[command(flatten)]
        relax: RelaxOpts,
    },
}

#[derive(Args, Debug, Clone)]
pub struct RelaxOpts {
    /// `const`, `poly:<d>`, `saturated` or `saturated:<d>`.
    #[arg(long, default_value = "saturated")]
    pub scaling: String,
    /// Handelman product degree; defaults to the program degree plus two.
    #[arg(long)]
    pub degree: Option<u32>,
    #[arg(long, value_enum, default_value_t = FormArg::Full)]
    pub form: FormArg,
}
