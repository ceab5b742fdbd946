//! flexlab: analyzes, extends, and certifies infinitesimal flexes of
//! bar-joint frameworks and sampled parametric surfaces.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use flexlab_core::TolerancePolicy;

mod commands;
mod io;
mod report;

#[derive(Parser)]
#[command(
    name = "flexlab",
    version,
    about = "Flex analysis for bar-joint frameworks and sampled surfaces",
    long_about = "Computes first-order flex and stress spaces of bar-joint frameworks, \
extends flexes order by order with stress obstruction certificates, validates curves of \
nonrigid configurations and differentiates their flex families into second-order \
extensions, and evaluates the flex equations on sampled surface grids.\n\n\
Inputs are JSON files or compiled-in examples addressed as builtin:<name>.\n\
Exit codes: 0 success, 2 parse error, 3 bad flex input, 4 invalid curve, \
5 bad surface grid, 6 continuation failure."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Input file, or builtin:<name>
    input: String,
    /// Emit the machine-readable JSON report instead of text
    #[arg(long)]
    json: bool,
    /// Override the tolerance policy as rel:abs (default 1e-10:1e-13)
    #[arg(long, value_parser = parse_tol)]
    tol: Option<(f64, f64)>,
}

#[derive(Subcommand)]
enum Command {
    /// First-order flex space, stresses, and rigidity classification
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Certify ranks and dimensions with exact rational arithmetic
        #[arg(long)]
        exact: bool,
    },
    /// Extend a first-order flex order by order, reporting obstructions
    Extend {
        #[command(flatten)]
        common: Common,
        /// Target jet order
        #[arg(long, default_value_t = 2)]
        order: usize,
        /// Index into the nontrivial flex basis
        #[arg(long, default_value_t = 0, conflicts_with = "flex_field")]
        flex: usize,
        /// Read the first-order flex from a field file instead
        #[arg(long)]
        flex_field: Option<PathBuf>,
    },
    /// Validate a configuration curve and extract its second-order extension
    TangentExtend {
        #[command(flatten)]
        common: Common,
        /// Write the (stencil width, residual) table as CSV
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Evaluate per-order residuals of the jet attached to a surface grid
    Surface {
        #[command(flatten)]
        common: Common,
        /// Highest order to check (default: all attached orders)
        #[arg(long)]
        order: Option<usize>,
        /// Dump the interior-node residual arrays as CSV
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Continue a finite motion along a flex and emit it as a curve file
    MakeCurve {
        #[command(flatten)]
        common: Common,
        /// Index into the nontrivial flex basis
        #[arg(long, default_value_t = 0, conflicts_with = "flex_field")]
        flex: usize,
        /// Read the first-order flex from a field file instead
        #[arg(long)]
        flex_field: Option<PathBuf>,
        /// Steps in each parameter direction
        #[arg(long, default_value_t = 5)]
        steps: usize,
        /// Parameter step size
        #[arg(long, default_value_t = 1e-3)]
        h: f64,
        /// Write the curve here (default: stdout)
        #[arg(long, required_if_eq("json", "true"))]
        out: Option<PathBuf>,
    },
}

fn parse_tol(s: &str) -> Result<(f64, f64), String> {
    let (rel, abs) = s
        .split_once(':')
        .ok_or_else(|| "expected rel:abs, e.g. 1e-10:1e-13".to_string())?;
    let rel: f64 = rel.parse().map_err(|e| format!("bad rel tolerance: {e}"))?;
    let abs: f64 = abs.parse().map_err(|e| format!("bad abs tolerance: {e}"))?;
    if !(rel > 0.0 && abs > 0.0) {
        return Err("tolerances must be positive".to_string());
    }
    Ok((rel, abs))
}

fn policy_from(tol: Option<(f64, f64)>) -> TolerancePolicy {
    match tol {
        Some((rel, abs)) => TolerancePolicy::with_tols(rel, abs),
        None => TolerancePolicy::default(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze { common, exact } => {
            let policy = policy_from(common.tol);
            commands::cmd_analyze(&common.input, &policy, *exact, common.json)
        }
        Command::Extend {
            common,
            order,
            flex,
            flex_field,
        } => {
            let policy = policy_from(common.tol);
            commands::cmd_extend(
                &common.input,
                *order,
                *flex,
                flex_field.as_ref(),
                &policy,
                common.json,
            )
        }
        Command::TangentExtend { common, csv } => {
            let policy = policy_from(common.tol);
            commands::cmd_tangent_extend(&common.input, &policy, common.json, csv.as_ref())
        }
        Command::Surface { common, order, csv } => {
            let policy = policy_from(common.tol);
            commands::cmd_surface(&common.input, *order, &policy, common.json, csv.as_ref())
        }
        Command::MakeCurve {
            common,
            flex,
            flex_field,
            steps,
            h,
            out,
        } => {
            let policy = policy_from(common.tol);
            commands::cmd_make_curve(
                &common.input,
                *flex,
                flex_field.as_ref(),
                *steps,
                *h,
                out.as_ref(),
                &policy,
                common.json,
            )
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code as u8)
        }
    }
}
