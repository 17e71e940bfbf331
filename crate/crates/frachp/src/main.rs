use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use frachp::commands::{self, Integrand, IntegralSpec};
use frachp::config::AlphaSpec;
use frachp::{CliError, CliResult, Overrides, RunSpec};

#[derive(Parser)]
#[command(name = "frachp", version, about = "Stochastic fractional Hamilton-Pontryagin simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one sample path and its noise-free counterpart.
    Simulate(RunArgs),
    /// Integrate `ensemble_size` independent paths and summarize them.
    Ensemble(RunArgs),
    /// Estimate the strong order over the configured step ladder.
    Convergence(RunArgs),
    /// Check that integrated paths are critical points of the discrete action.
    ActionCheck(RunArgs),
    /// Evaluate a generalized left fractional integral.
    Integral(IntegralArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long)]
    no_plots: bool,
}

impl RunArgs {
    fn load(&self) -> CliResult<RunSpec> {
        let mut spec = RunSpec::load(&self.config)?;
        Overrides {
            out: self.out.clone(),
            seed: self.seed,
            no_plots: self.no_plots,
        }
        .apply(&mut spec);
        Ok(spec)
    }
}

#[derive(Args)]
struct IntegralArgs {
    /// TOML file with the same keys as the flags; flags take precedence.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Constant order, or a0 of the affine profile α(z) = a0 + a1·z.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, requires = "alpha")]
    alpha_slope: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    t0: Option<f64>,
    /// Upper limit, also the observer time of the weight.
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, value_enum)]
    f: Option<Integrand>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    max_level: Option<u32>,
}

impl IntegralArgs {
    fn spec(&self) -> CliResult<IntegralSpec> {
        let base = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                Some(IntegralSpec::from_toml_str(&text)?)
            }
            None => None,
        };
        let alpha = match (self.alpha, self.alpha_slope) {
            (Some(a0), Some(a1)) => Some(AlphaSpec::Affine { a0, a1 }),
            (Some(a), None) => Some(AlphaSpec::Constant(a)),
            _ => None,
        };
        let alpha = alpha
            .or(base.map(|b| b.alpha))
            .ok_or_else(|| CliError::Config("`alpha`: required".into()))?;
        let t = self
            .t
            .or(base.map(|b| b.t))
            .ok_or_else(|| CliError::Config("`t`: required".into()))?;
        Ok(IntegralSpec {
            alpha,
            rho: self.rho.or(base.map(|b| b.rho)).unwrap_or(0.0),
            t0: self.t0.or(base.map(|b| b.t0)).unwrap_or(0.0),
            t,
            f: self.f.or(base.map(|b| b.f)).unwrap_or(Integrand::One),
            rel_tol: self.rel_tol.or(base.and_then(|b| b.rel_tol)),
            max_level: self.max_level.or(base.and_then(|b| b.max_level)),
        })
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(args) => {
            let out = commands::simulate(&args.load()?)?;
            println!("wrote {} ({} rows)", out.trajectory.display(), out.rows);
            println!("wrote {}", out.deterministic.display());
            for p in &out.plots {
                println!("wrote {}", p.display());
            }
        }
        Command::Ensemble(args) => {
            let out = commands::ensemble(&args.load()?)?;
            println!("wrote {} paths", out.paths.len());
            println!("wrote {}", out.summary_path.display());
        }
        Command::Convergence(args) => {
            let table = commands::convergence(&args.load()?)?;
            println!("{:>14} {:>14} {:>8}", "h", "strong error", "order");
            for row in &table.rows {
                let order = row.order.map(|o| format!("{o:.3}")).unwrap_or_default();
                println!("{:>14.6e} {:>14.6e} {order:>8}", row.h, row.error);
            }
            println!(
                "fitted order {:.3}, band [{}, {}], reference step {:e}",
                table.fitted_order, table.band[0], table.band[1], table.reference_h
            );
            if !table.in_band() {
                return Err(CliError::Check(format!("fitted order {:.3} is outside the band", table.fitted_order)));
            }
        }
        Command::ActionCheck(args) => {
            let report = commands::action_check(&args.load()?)?;
            println!("{:>14} {:>8} {:>14} {:>8}", "h", "steps", "max |dA|", "ratio");
            for (i, level) in report.levels.iter().enumerate() {
                let ratio = i.checked_sub(1).map(|j| format!("{:.3}", report.ratios[j])).unwrap_or_default();
                println!(
                    "{:>14.6e} {:>8} {:>14.6e} {ratio:>8}",
                    level.h, level.steps, level.max_abs_differential
                );
            }
            println!("{}", if report.pass { "PASS" } else { "FAIL" });
            if !report.pass {
                return Err(CliError::Check("refinement ratios below the threshold".into()));
            }
        }
        Command::Integral(args) => {
            let q = commands::integral(&args.spec()?)?;
            println!("value {:.16e}", q.value);
            println!("error estimate {:.3e} ({} cells)", q.error_estimate, q.cells);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("frachp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
