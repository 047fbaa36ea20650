use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chemosim::harness::{
    effective_workers, load_run_config, load_sweep_config, run_experiment, run_sweep, status_exit_code, sweep_csv, write_outputs,
};
use chemosim::plot::{parse_series_csv, traces_svg};
use chemosim::potential::{CdConvention, Normalization};
use chemosim::regimes::{classify, ModelParams, DEFAULT_CLASSIFY_TOL};
use chemosim::variational::{estimate_constants, lane_emden_ball, lane_emden_solve, EstimationBudget};
use chemosim::{Error, Result};

#[derive(Parser)]
#[command(name = "chemosim", version, about = "Radial two-species chemotaxis simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation from a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write traces.svg.
        #[arg(long)]
        svg: bool,
    },
    /// Classify an exponent pair.
    Classify {
        #[arg(long)]
        m1: f64,
        #[arg(long)]
        m2: f64,
        #[arg(long, default_value_t = 3)]
        d: i64,
        #[arg(long, default_value_t = DEFAULT_CLASSIFY_TOL)]
        tol: f64,
    },
    /// Run a parameter sweep and write sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the sharp constants and critical masses.
    Constants {
        #[arg(long, default_value_t = 3)]
        d: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 400)]
        samples: usize,
        #[arg(long = "c-d", default_value = "newtonian", value_parser = parse_convention)]
        c_d: CdConvention,
        /// Write constants.json here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a Lane-Emden problem and print its summary.
    LaneEmden {
        #[arg(long, default_value_t = 3)]
        d: i64,
        #[arg(long)]
        power: f64,
        #[arg(long, default_value_t = 1.0)]
        coeff: f64,
        #[arg(long, default_value_t = 1.0, conflicts_with = "radius")]
        zeta0: f64,
        /// Solve for the central value giving this first zero.
        #[arg(long)]
        radius: Option<f64>,
        /// Write the profile table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render traces.svg from a diagnostics CSV.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_convention(s: &str) -> std::result::Result<CdConvention, String> {
    match s {
        "newtonian" => Ok(CdConvention::Newtonian),
        "surface_area" => Ok(CdConvention::SurfaceArea),
        other => other
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite() && *v > 0.0)
            .map(CdConvention::Custom)
            .ok_or_else(|| format!("expected newtonian, surface_area or a positive number, got `{other}`")),
    }
}

fn emit(json: &serde_json::Value, out: Option<&PathBuf>) -> Result<()> {
    let text = serde_json::to_string_pretty(json)? + "\n";
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Simulate { config, out, seed, svg } => {
            let mut cfg = load_run_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let dir = out.unwrap_or_else(|| cfg.outputs.clone());
            let exp = run_experiment(&cfg)?;
            write_outputs(&cfg, &exp, &dir, svg)?;
            log::info!(
                "{} at t={:e} after {} steps",
                exp.outcome.status.as_str(),
                exp.outcome.t_final,
                exp.steps
            );
            println!("{}", exp.outcome.status.as_str());
            Ok(status_exit_code(exp.outcome.status))
        }
        Command::Classify { m1, m2, d, tol } => {
            let params = ModelParams::new(d, m1, m2)?;
            let r = classify(&params, tol);
            emit(
                &serde_json::json!({
                    "d": d, "m1": m1, "m2": m2,
                    "tag": r.tag.as_str(), "slack1": r.slack1, "slack2": r.slack2,
                }),
                None,
            )?;
            Ok(0)
        }
        Command::Sweep { config, out } => {
            let sweep = load_sweep_config(&config)?;
            let dir = out.unwrap_or_else(|| sweep.base.outputs.clone());
            let rows = run_sweep(&sweep)?;
            std::fs::create_dir_all(&dir)?;
            std::fs::write(dir.join("sweep.csv"), sweep_csv(&rows))?;
            let failed = rows.iter().filter(|r| r.status == "Failed").count();
            log::info!("{} runs, {failed} failed", rows.len());
            Ok(if failed == rows.len() { 1 } else { 0 })
        }
        Command::Constants { d, seed, samples, c_d, out } => {
            let norm = Normalization::new(
                u32::try_from(d).map_err(|_| Error::InvalidDimension(d))?,
                c_d,
            );
            let budget = EstimationBudget { samples, ..EstimationBudget::default() };
            let est = estimate_constants(d, &norm, seed, budget)?;
            emit(&serde_json::to_value(&est)?, out.as_ref())?;
            Ok(0)
        }
        Command::LaneEmden { d, power, coeff, zeta0, radius, out } => {
            let le = match radius {
                Some(r) => lane_emden_ball(d, power, coeff, r)?,
                None => lane_emden_solve(d, power, coeff, Some(zeta0))?,
            };
            emit(
                &serde_json::json!({
                    "d": le.d, "exponent": le.exponent, "coefficient": le.coefficient,
                    "zeta0": le.zeta0, "first_zero": le.first_zero,
                    "boundary_slope": le.boundary_slope, "source_mass": le.source_mass,
                    "energy_integral": le.energy_integral,
                }),
                None,
            )?;
            if let Some(p) = out {
                let mut csv = String::from("r,zeta,slope\n");
                for s in &le.table {
                    csv.push_str(&format!("{:e},{:e},{:e}\n", s.r, s.zeta, s.slope));
                }
                std::fs::write(p, csv)?;
            }
            Ok(0)
        }
        Command::Plot { csv, out } => {
            let series = parse_series_csv(&std::fs::read_to_string(csv)?)?;
            std::fs::write(out, traces_svg(&series))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if std::env::var_os("CHEMOSIM_THREADS").is_some() {
        let n = effective_workers(usize::MAX);
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool: {e}");
        }
    }
    // exit 2 is reserved for detected blow-up, so usage errors map to 1
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
