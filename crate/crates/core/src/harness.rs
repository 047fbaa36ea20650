//! Run and sweep configurations, experiment execution and persistence.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::energy::{diagnostics, DiagnosticsRecord, DiagnosticsSeries};
use crate::error::{Error, Result};
use crate::field::{Grading, RadialGrid, SystemState};
use crate::initdata::{
    build_state, check_blowup_condition, compact_polynomial_amplitude, iota_exponents, ConditionReport, InitialDataSpec,
};
use crate::potential::{CdConvention, Normalization};
use crate::regimes::{classify, ModelParams, DEFAULT_CLASSIFY_TOL};
use crate::stepper::{run, RunOutcome, RunStatus, SolverConfig};

pub const MIN_CELLS: usize = 16;
pub const MAX_CELLS: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(default)]
    pub grading: Grading,
}

impl GridConfig {
    pub fn build(&self, d: u32) -> Result<RadialGrid> {
        if !(MIN_CELLS..=MAX_CELLS).contains(&self.n) {
            return Err(Error::Config(format!(
                "grid.N={} must lie in [{MIN_CELLS}, {MAX_CELLS}]",
                self.n
            )));
        }
        RadialGrid::with_grading(d, self.n, self.radius, self.grading)
    }
}

fn default_outputs() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ModelParams,
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub init_u: InitialDataSpec,
    pub init_w: InitialDataSpec,
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Constant multiplying `H` in energies and thresholds.
    #[serde(default)]
    pub c_d: CdConvention,
    /// Critical mass used for the threshold at the intersection point.
    #[serde(default, rename = "M_c", skip_serializing_if = "Option::is_none")]
    pub critical_mass: Option<f64>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.build(self.params.d())?;
        self.solver.validate()?;
        self.init_u.validate()?;
        self.init_w.validate()?;
        Ok(())
    }

    pub fn normalization(&self) -> Normalization {
        Normalization::new(self.params.d(), self.c_d)
    }
}

fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let parsed = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Config(format!(
            "line {} column {} at `{}`: {}",
            inner.line(),
            inner.column(),
            path,
            inner
        ))
    })?;
    Ok(parsed)
}

pub fn parse_run_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = parse_json(text)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    parse_run_config(&std::fs::read_to_string(path)?)
}

/// Swept values; the Cartesian product is visited in the order
/// m1, m2, M1, M2 with M2 varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    pub m1: Vec<f64>,
    pub m2: Vec<f64>,
    #[serde(rename = "M1")]
    pub mass_u: Vec<f64>,
    #[serde(rename = "M2")]
    pub mass_w: Vec<f64>,
}

fn default_workers() -> usize {
    1
}

fn default_max_runs() -> usize {
    4096
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axes: SweepAxes,
    pub base: RunConfig,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_max_runs")]
    pub max_runs: usize,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let a = &self.axes;
        for (name, axis) in [("m1", &a.m1), ("m2", &a.m2), ("M1", &a.mass_u), ("M2", &a.mass_w)] {
            if axis.is_empty() {
                return Err(Error::Config(format!("sweep axis {name} is empty")));
            }
            if let Some(v) = axis.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                return Err(Error::Config(format!("sweep axis {name} holds {v}, must be positive")));
            }
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        let total = self.len();
        if total > self.max_runs {
            return Err(Error::Config(format!(
                "sweep has {total} runs, above max_runs={}",
                self.max_runs
            )));
        }
        self.base.grid.build(self.base.params.d())?;
        self.base.solver.validate()
    }

    pub fn len(&self) -> usize {
        let a = &self.axes;
        a.m1.len() * a.m2.len() * a.mass_u.len() * a.mass_w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Axis values of the `index`-th point.
    pub fn point(&self, index: usize) -> SweepPoint {
        let a = &self.axes;
        let mut rest = index;
        let i4 = rest % a.mass_w.len();
        rest /= a.mass_w.len();
        let i3 = rest % a.mass_u.len();
        rest /= a.mass_u.len();
        let i2 = rest % a.m2.len();
        rest /= a.m2.len();
        SweepPoint {
            m1: a.m1[rest],
            m2: a.m2[i2],
            mass_u: a.mass_u[i3],
            mass_w: a.mass_w[i4],
        }
    }
}

pub fn parse_sweep_config(text: &str) -> Result<SweepConfig> {
    let cfg: SweepConfig = parse_json(text)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_sweep_config(path: &Path) -> Result<SweepConfig> {
    parse_sweep_config(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub m1: f64,
    pub m2: f64,
    pub mass_u: f64,
    pub mass_w: f64,
}

/// Replaces the mass of a parametric initial datum.
pub fn with_mass(spec: &InitialDataSpec, mass: f64, params: &ModelParams, first: bool) -> Result<InitialDataSpec> {
    Ok(match *spec {
        InitialDataSpec::CompactPolynomial { support, iota, .. } => {
            let iota = match iota {
                Some(i) => i,
                None => {
                    let (i1, i2) = iota_exponents(params)?;
                    if first {
                        i1
                    } else {
                        i2
                    }
                }
            };
            InitialDataSpec::CompactPolynomial {
                amplitude: compact_polynomial_amplitude(params.d(), mass, support, iota),
                support,
                iota: Some(iota),
            }
        }
        InitialDataSpec::Gaussian { t, .. } => InitialDataSpec::Gaussian { mass, t },
        InitialDataSpec::LaneEmdenMinimizer { radius, .. } => InitialDataSpec::LaneEmdenMinimizer { mass, radius },
        InitialDataSpec::Table { .. } => {
            return Err(Error::Config("table data cannot be rescaled to a swept mass".into()));
        }
    })
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub outcome: RunOutcome,
    pub series: DiagnosticsSeries,
    pub condition: ConditionReport,
    pub steps: u64,
    pub wall_seconds: f64,
}

/// Initial state of a run with its condition report and first diagnostics.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub state: SystemState,
    pub condition: ConditionReport,
    pub initial: DiagnosticsRecord,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let params = cfg.params;
    let grid = Arc::new(cfg.grid.build(params.d())?);
    let state = build_state(&cfg.init_u, &cfg.init_w, &grid, &params)?;
    let norm = cfg.normalization();
    let condition = check_blowup_condition(&state.u, &state.w, &params, &norm, cfg.critical_mass)?;
    let initial = diagnostics(&state, &params, &norm)?;
    Ok(Prepared {
        state,
        condition,
        initial,
    })
}

pub fn run_prepared(cfg: &RunConfig, prep: Prepared) -> Result<Experiment> {
    let start = Instant::now();
    let res = run(&prep.state, &cfg.params, &cfg.solver, &cfg.normalization())?;
    Ok(Experiment {
        outcome: res.outcome,
        series: res.series,
        condition: prep.condition,
        steps: res.steps,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn run_experiment(cfg: &RunConfig) -> Result<Experiment> {
    run_prepared(cfg, prepare(cfg)?)
}

#[derive(Debug, Clone, Serialize)]
#[allow(non_snake_case)]
pub struct RunSummary<'a> {
    pub status: &'static str,
    pub t_final: f64,
    pub trigger: Option<&'a str>,
    pub simultaneous: bool,
    pub steps: u64,
    pub regime: &'static str,
    pub F0: f64,
    pub G0: f64,
    pub condition: &'a ConditionReport,
    pub seed: u64,
    pub wall_seconds: f64,
    pub finished_unix: u64,
}

impl<'a> RunSummary<'a> {
    pub fn new(cfg: &RunConfig, exp: &'a Experiment) -> Self {
        let first = exp.series.first();
        Self {
            status: exp.outcome.status.as_str(),
            t_final: exp.outcome.t_final,
            trigger: exp.outcome.trigger.as_deref(),
            simultaneous: exp.outcome.simultaneous,
            steps: exp.steps,
            regime: classify(&cfg.params, DEFAULT_CLASSIFY_TOL).tag.as_str(),
            F0: first.map_or(f64::NAN, |r| r.F),
            G0: first.map_or(f64::NAN, |r| r.G),
            condition: &exp.condition,
            seed: cfg.seed,
            wall_seconds: exp.wall_seconds,
            finished_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        }
    }
}

/// Writes `series.csv`, `summary.json` and optionally `traces.svg`.
pub fn write_outputs(cfg: &RunConfig, exp: &Experiment, dir: &Path, svg: bool) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    exp.series.write_csv(&dir.join("series.csv"))?;
    let summary = RunSummary::new(cfg, exp);
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    if svg {
        std::fs::write(dir.join("traces.svg"), crate::plot::traces_svg(&exp.series))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
#[allow(non_snake_case)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub regime: &'static str,
    pub status: String,
    pub t_final: f64,
    pub F0: f64,
    pub G0: f64,
    pub margin: f64,
}

pub const SWEEP_HEADER: &str = "m1,m2,M1,M2,regime,status,t_final,F0,G0,margin";

impl SweepRow {
    pub fn csv_row(&self) -> String {
        let p = &self.point;
        format!(
            "{},{},{},{},{},{},{:e},{:e},{:e},{:e}",
            p.m1, p.m2, p.mass_u, p.mass_w, self.regime, self.status, self.t_final, self.F0, self.G0, self.margin
        )
    }
}

fn point_config(sweep: &SweepConfig, point: &SweepPoint) -> Result<RunConfig> {
    let mut cfg = sweep.base.clone();
    cfg.params = ModelParams::new(cfg.params.d() as i64, point.m1, point.m2)?;
    cfg.init_u = with_mass(&cfg.init_u, point.mass_u, &cfg.params, true)?;
    cfg.init_w = with_mass(&cfg.init_w, point.mass_w, &cfg.params, false)?;
    Ok(cfg)
}

fn sweep_point(sweep: &SweepConfig, index: usize) -> SweepRow {
    let point = sweep.point(index);
    let regime = ModelParams::new(sweep.base.params.d() as i64, point.m1, point.m2)
        .map(|p| classify(&p, DEFAULT_CLASSIFY_TOL).tag.as_str())
        .unwrap_or("Invalid");
    let mut row = SweepRow {
        point,
        regime,
        status: "Failed".into(),
        t_final: f64::NAN,
        F0: f64::NAN,
        G0: f64::NAN,
        margin: f64::NAN,
    };
    let prepared = point_config(sweep, &point).and_then(|cfg| prepare(&cfg).map(|p| (cfg, p)));
    let (cfg, prep) = match prepared {
        Ok(x) => x,
        Err(e) => {
            log::warn!("sweep point {point:?} failed: {e}");
            return row;
        }
    };
    row.F0 = prep.initial.F;
    row.G0 = prep.initial.G;
    row.margin = prep.condition.margin;
    match run_prepared(&cfg, prep) {
        Ok(exp) => {
            row.status = exp.outcome.status.as_str().to_string();
            row.t_final = exp.outcome.t_final;
        }
        Err(e) => log::warn!("sweep point {point:?} failed: {e}"),
    }
    row
}

/// Worker count after applying the `CHEMOSIM_THREADS` cap.
pub fn effective_workers(requested: usize) -> usize {
    let cap = std::env::var("CHEMOSIM_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|v| *v > 0);
    match cap {
        Some(c) => requested.min(c),
        None => requested,
    }
    .max(1)
}

/// Runs every point; rows come back in axes order.
pub fn run_sweep(sweep: &SweepConfig) -> Result<Vec<SweepRow>> {
    sweep.validate()?;
    let total = sweep.len();
    let workers = effective_workers(sweep.workers).min(total);
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, SweepRow)>();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= total {
                    break;
                }
                if tx.send((i, sweep_point(sweep, i))).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);
    let mut rows: Vec<(usize, SweepRow)> = rx.into_iter().collect();
    rows.sort_by_key(|(i, _)| *i);
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

pub fn status_exit_code(status: RunStatus) -> i32 {
    match status {
        RunStatus::ReachedHorizon => 0,
        RunStatus::BlowUpDetected => 2,
        RunStatus::StepFloorHit => 3,
    }
}
