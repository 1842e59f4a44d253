use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use biphoton_lab::commands::{
    cmd_hierarchy, cmd_kcbs_demo, cmd_sweep, cmd_table1, cmd_thresholds, cmd_tomo_demo, CmdError,
};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "biphoton-lab",
    about = "Numerical laboratory for polarization-biphoton contextuality witnesses"
)]
struct Cli {
    /// RNG seed; every output is byte-stable for a fixed seed.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Write output to a file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep a decoherence channel and report both witness maxima per noise level.
    Sweep {
        /// Channel kind: dephasing, two-field, or isotropic.
        #[arg(long)]
        channel: String,
        /// Initial state (psi-hv, psi-pm, psi-rl, "2,0", "0,2"); defaults per channel.
        #[arg(long)]
        state: Option<String>,
        /// Number of grid points over [0, p_max].
        #[arg(long, default_value_t = 51)]
        steps: usize,
    },
    /// Locate the noise levels where each witness drops to its classical bound.
    Thresholds {
        #[arg(long)]
        channel: String,
        #[arg(long)]
        state: Option<String>,
        /// Bisection tolerance on the noise parameter.
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
    /// Evaluate the pentagon witness on a test state with a known singlet admixture.
    KcbsDemo {
        /// Evaluation path: "protocol" (direct counts) or "dm" (tomography).
        #[arg(long, default_value = "protocol")]
        method: String,
        /// Singlet population injected into the otherwise ideal state.
        #[arg(long, default_value_t = 0.0)]
        singlet_fraction: f64,
        /// Pairs per setting (protocol) or exposure per setting (dm).
        #[arg(long, default_value_t = 100_000)]
        pairs: u64,
    },
    /// Sample random two-photon states and check that every pentagon violation
    /// is accompanied by a CHSH violation.
    Hierarchy {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Wave-plate angles compiling the five canonical pentagon projections.
    Table1,
    /// Simulate tomography of a (possibly decohered) state and reconstruct it.
    TomoDemo {
        #[arg(long)]
        state: Option<String>,
        /// Channel with explicit probability, e.g. "dephasing:0.2".
        #[arg(long)]
        channel: Option<String>,
        #[arg(long, default_value_t = 100_000)]
        exposure: u64,
    },
}

fn run(cli: &Cli) -> Result<String, CmdError> {
    match &cli.command {
        Command::Sweep {
            channel,
            state,
            steps,
        } => cmd_sweep(channel, state.as_deref(), *steps, cli.seed),
        Command::Thresholds {
            channel,
            state,
            tol,
        } => cmd_thresholds(channel, state.as_deref(), *tol, cli.seed),
        Command::KcbsDemo {
            method,
            singlet_fraction,
            pairs,
        } => cmd_kcbs_demo(method, *singlet_fraction, *pairs, cli.seed),
        Command::Hierarchy { samples } => cmd_hierarchy(*samples, cli.seed),
        Command::Table1 => cmd_table1(cli.seed),
        Command::TomoDemo {
            state,
            channel,
            exposure,
        } => cmd_tomo_demo(state.as_deref(), channel.as_deref(), *exposure, cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match run(&cli) {
        Ok(t) => t,
        Err(e @ CmdError::Precondition(_)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e @ CmdError::Io(_)) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(3);
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(text.as_bytes()).is_err() {
                return ExitCode::from(3);
            }
        }
    }
    ExitCode::SUCCESS
}
