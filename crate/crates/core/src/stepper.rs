//! Explicit finite-volume integrator with upwind drift, adaptive time step
//! and concentration detection.

use serde::{Deserialize, Serialize};

use crate::energy::{diagnostics, DiagnosticsRecord, DiagnosticsSeries};
use crate::error::{Error, Result};
use crate::field::{RadialField, RadialGrid, SystemState};
use crate::potential::{potential_slopes, Normalization};
use crate::regimes::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub cfl: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub t_end: f64,
    pub linf_factor: f64,
    pub norm_factor: f64,
    pub record_every: u64,
    /// Step budget; exhausting it is a numerical failure.
    pub max_steps: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.0,
            cfl: 0.45,
            dt_min: 1e-14,
            dt_max: 1e-2,
            t_end: 1.0,
            linf_factor: 100.0,
            norm_factor: 2.0,
            record_every: 10,
            max_steps: 50_000_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSolver(msg));
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon={} must be finite and >= 0", self.epsilon));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl={} must lie in (0, 1]", self.cfl));
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_max && self.dt_max.is_finite()) {
            return bad(format!(
                "time step bounds must satisfy 0 < dt_min <= dt_max (got {}, {})",
                self.dt_min, self.dt_max
            ));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end={} must be finite and >= 0", self.t_end));
        }
        if !(self.linf_factor > 1.0) || !(self.norm_factor > 1.0) {
            return bad("blow-up factors must exceed 1".into());
        }
        if self.record_every == 0 || self.max_steps == 0 {
            return bad("record_every and max_steps must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    ReachedHorizon,
    BlowUpDetected,
    StepFloorHit,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::ReachedHorizon => "ReachedHorizon",
            RunStatus::BlowUpDetected => "BlowUpDetected",
            RunStatus::StepFloorHit => "StepFloorHit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub t_final: f64,
    pub trigger: Option<String>,
    pub simultaneous: bool,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub outcome: RunOutcome,
    pub series: DiagnosticsSeries,
    pub final_state: SystemState,
    pub steps: u64,
}

/// Face fluxes and the positivity-limited step of one species.
struct SpeciesRates {
    flux: Vec<f64>,
    dt_limit: f64,
}

fn species_rates(grid: &RadialGrid, f: &[f64], m: f64, eps: f64, slopes: &[f64]) -> SpeciesRates {
    let n = f.len();
    let c = grid.centers();
    let a = grid.face_areas();
    let vol = grid.volumes();
    // (f+eps)^{m-1}; the m-th power follows by one multiplication
    let lower: Vec<f64> = f.iter().map(|x| (x + eps).powf(m - 1.0)).collect();
    let mut flux = vec![0.0; n + 1];
    let mut out_rate = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let (l, r) = (f[i], f[i + 1]);
        let h = c[i + 1] - c[i];
        let vel = slopes[i + 1];
        let up = if vel > 0.0 { l } else { r };
        let diff = ((r + eps) * lower[i + 1] - (l + eps) * lower[i]) / h;
        flux[i + 1] = a[i + 1] * (up * vel - diff);
        let diffusivity = m * lower[i].max(lower[i + 1]);
        let coupling = a[i + 1] * diffusivity / h;
        out_rate[i] += coupling + a[i + 1] * vel.max(0.0);
        out_rate[i + 1] += coupling + a[i + 1] * (-vel).max(0.0);
    }
    let dt_limit = out_rate
        .iter()
        .zip(vol)
        .filter(|(r, _)| **r > 0.0)
        .map(|(r, v)| v / r)
        .fold(f64::INFINITY, f64::min);
    SpeciesRates { flux, dt_limit }
}

struct Rates {
    u: SpeciesRates,
    w: SpeciesRates,
}

impl Rates {
    fn new(state: &SystemState, params: &ModelParams, config: &SolverConfig) -> Self {
        let grid = state.grid();
        let dv = potential_slopes(&state.w);
        let dz = potential_slopes(&state.u);
        Self {
            u: species_rates(grid, state.u.values(), params.m1(), config.epsilon, &dv),
            w: species_rates(grid, state.w.values(), params.m2(), config.epsilon, &dz),
        }
    }

    /// Unclipped stable step.
    fn raw_dt(&self, cfl: f64) -> f64 {
        cfl * self.u.dt_limit.min(self.w.dt_limit)
    }
}

fn apply(f: &RadialField, flux: &[f64], dt: f64, t: f64) -> Result<RadialField> {
    let grid = f.grid();
    let vol = grid.volumes();
    let old = f.values();
    let scale = f.linf();
    let mut next = Vec::with_capacity(old.len());
    for i in 0..old.len() {
        let mut x = old[i] - dt / vol[i] * (flux[i + 1] - flux[i]);
        if !x.is_finite() {
            return Err(Error::NumericalFailure {
                what: format!("non-finite value in cell {i}"),
                t_last: t,
            });
        }
        if x < 0.0 {
            // cancellation in a vanishing cell
            if x > -1e-13 * scale {
                x = 0.0;
            } else {
                return Err(Error::Positivity { cell: i, value: x, t });
            }
        }
        next.push(x);
    }
    RadialField::new(grid.clone(), next)
}

fn check_dt(dt: f64, config: &SolverConfig) -> Result<()> {
    if !(dt > 0.0 && dt <= config.dt_max * (1.0 + 1e-12)) {
        return Err(Error::InvalidSolver(format!(
            "dt={dt} outside (0, dt_max={}]",
            config.dt_max
        )));
    }
    Ok(())
}

fn advance(state: &SystemState, rates: &Rates, dt: f64) -> Result<SystemState> {
    let u = apply(&state.u, &rates.u.flux, dt, state.t)?;
    let w = apply(&state.w, &rates.w.flux, dt, state.t)?;
    SystemState::new(u, w, state.t + dt)
}

/// One explicit Euler step of length `dt`.
pub fn step(state: &SystemState, params: &ModelParams, config: &SolverConfig, dt: f64) -> Result<SystemState> {
    check_dt(dt, config)?;
    advance(state, &Rates::new(state, params, config), dt)
}

/// Stable step from the per-cell positivity bound, clipped to `dt_max`.
/// A bound below `dt_min` is returned as is so the caller can detect the
/// step floor.
pub fn adaptive_dt(state: &SystemState, params: &ModelParams, config: &SolverConfig) -> f64 {
    Rates::new(state, params, config).raw_dt(config.cfl).min(config.dt_max)
}

pub fn run(init: &SystemState, params: &ModelParams, config: &SolverConfig, norm: &Normalization) -> Result<RunResult> {
    config.validate()?;
    let t0 = init.t;
    let t_end = t0 + config.t_end;
    let first = diagnostics(init, params, norm)?;
    let mut series = DiagnosticsSeries::default();
    series.push(first);
    let mut state = init.clone();
    let mut steps: u64 = 0;
    let mut last_recorded = 0u64;

    let finish = |status, trigger, simultaneous, state: SystemState, mut series: DiagnosticsSeries, steps, recorded: bool| -> Result<RunResult> {
        if !recorded {
            series.push(diagnostics(&state, params, norm)?);
        }
        Ok(RunResult {
            outcome: RunOutcome {
                status,
                t_final: state.t,
                trigger,
                simultaneous,
            },
            series,
            final_state: state,
            steps,
        })
    };

    loop {
        if state.t >= t_end {
            let recorded = last_recorded == steps;
            return finish(RunStatus::ReachedHorizon, None, false, state, series, steps, recorded);
        }
        let rates = Rates::new(&state, params, config);
        let raw = rates.raw_dt(config.cfl);
        if raw < 10.0 * config.dt_min {
            if let Some((trigger, simultaneous)) = concentration(&state, &first, params, config, raw) {
                let recorded = last_recorded == steps;
                return finish(RunStatus::BlowUpDetected, Some(trigger), simultaneous, state, series, steps, recorded);
            }
        }
        if raw < config.dt_min {
            let trigger = format!("stable dt {raw:e} below dt_min {:e}", config.dt_min);
            let recorded = last_recorded == steps;
            return finish(RunStatus::StepFloorHit, Some(trigger), false, state, series, steps, recorded);
        }
        if steps >= config.max_steps {
            return Err(Error::NumericalFailure {
                what: format!("step budget of {} exhausted", config.max_steps),
                t_last: state.t,
            });
        }
        let dt = raw.min(config.dt_max).min(t_end - state.t);
        let mut next = advance(&state, &rates, dt)?;
        if t_end - next.t <= 1e-14 * t_end.abs().max(1.0) {
            next.t = t_end;
        }
        state = next;
        steps += 1;
        if steps % config.record_every == 0 {
            series.push(diagnostics(&state, params, norm)?);
            last_recorded = steps;
        }
    }
}

/// Blow-up trigger: `L^∞` growth beyond `linf_factor` with a collapsed step.
fn concentration(
    state: &SystemState,
    first: &DiagnosticsRecord,
    params: &ModelParams,
    config: &SolverConfig,
    dt: f64,
) -> Option<(String, bool)> {
    let (lu, lw) = (state.u.linf(), state.w.linf());
    let grown_u = lu > config.linf_factor * first.linf_u;
    let grown_w = lw > config.linf_factor * first.linf_w;
    if !(grown_u || grown_w) {
        return None;
    }
    let nu = state.u.power_integral(params.m1()).powf(1.0 / params.m1());
    let nw = state.w.power_integral(params.m2()).powf(1.0 / params.m2());
    let simultaneous = nu > config.norm_factor * first.norm_u_m1 && nw > config.norm_factor * first.norm_w_m2;
    let which = match (grown_u, grown_w) {
        (true, true) => "linf_u and linf_w",
        (true, false) => "linf_u",
        _ => "linf_w",
    };
    Some((
        format!(
            "{which} exceeded {}x initial value with dt {dt:e} < 10*dt_min",
            config.linf_factor
        ),
        simultaneous,
    ))
}
