use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use rydfac::config::load_config;
use rydfac::sweep::{emit_csv, run_sweep, ControlMode, Engine, PointResult};
use rydfac::BasisMode;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BasisArg {
    Full,
    Blockade,
}

/// Steady-state Rydberg population of an ensemble with and without a
/// nearby control atom.
#[derive(Parser, Debug)]
#[command(version)]
struct Args {
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Hilbert-space truncation, overriding the configuration.
    #[arg(long, value_enum)]
    basis: Option<BasisArg>,
    /// Only simulate the ensemble without the control atom.
    #[arg(long)]
    no_control: bool,
    /// Integrate the master equation instead of sampling trajectories.
    #[arg(long)]
    oracle: bool,
}

fn describe(p: &PointResult) -> String {
    let fmt = |o: Option<rydfac::sweep::SettingOutcome>| match o {
        Some(o) => format!(
            "{:.4} ± {:.4}{}",
            o.steady.f_r,
            o.steady.stderr,
            if o.steady.converged { "" } else { " (unconverged)" }
        ),
        None => "-".into(),
    };
    let note = if p.below_blockade_radius { "  [r0 < R_b]" } else { "" };
    format!("param {}: with {}  without {}{note}", p.param, fmt(p.with_control), fmt(p.without_control))
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut spec = match load_config(&args.config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(seed) = args.seed {
        spec.base.seed = seed;
    }
    if let Some(b) = args.basis {
        spec.base.basis_mode = match b {
            BasisArg::Full => BasisMode::Full,
            BasisArg::Blockade => BasisMode::BlockadeConstrained,
        };
    }
    if args.no_control {
        spec.control = ControlMode::Without;
    }
    if args.oracle {
        spec.engine = Engine::Oracle;
    }
    if args.workers == 0 {
        eprintln!("error: --workers must be at least 1");
        return ExitCode::from(1);
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(args.workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(1);
        }
    };

    let result = match pool.install(|| run_sweep(&spec, |p| eprintln!("{}", describe(p)))) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = emit_csv(&result, &args.out) {
        eprintln!("error: cannot write {}: {e}", args.out.display());
        return ExitCode::from(1);
    }
    if result.all_converged() {
        ExitCode::SUCCESS
    } else {
        eprintln!("warning: some points did not converge within {}× the horizon", 1u32 << spec.max_doublings);
        ExitCode::from(2)
    }
}
