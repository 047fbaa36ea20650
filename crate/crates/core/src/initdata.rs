//! Initial data families and the blow-up sufficient conditions.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::energy::{free_energy, virial_g};
use crate::error::{Error, Result};
use crate::field::{unit_sphere_area, RadialField, RadialGrid, SystemState};
use crate::potential::Normalization;
use crate::regimes::{classify, ModelParams, RegimeTag, DEFAULT_CLASSIFY_TOL};
use crate::variational::{critical_lane_emden, minimizer_profile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", deny_unknown_fields)]
pub enum InitialDataSpec {
    /// `A (1 - |x|^d / a^d)_+^iota`; `iota` defaults to the blow-up
    /// construction exponent of the species.
    CompactPolynomial {
        #[serde(rename = "A")]
        amplitude: f64,
        #[serde(rename = "a")]
        support: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        iota: Option<f64>,
    },
    /// Heat kernel of mass `M` at time `t`.
    Gaussian {
        #[serde(rename = "M")]
        mass: f64,
        t: f64,
    },
    /// Lane-Emden extremal of mass `M` supported on the ball of radius `R0`.
    LaneEmdenMinimizer {
        #[serde(rename = "M")]
        mass: f64,
        #[serde(rename = "R0")]
        radius: f64,
    },
    /// Field CSV file, remapped conservatively when its grid differs.
    Table { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Species {
    U,
    W,
}

impl InitialDataSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |what: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::OutOfRange {
                    what,
                    value: v,
                    lo: 0.0,
                    hi: f64::INFINITY,
                })
            }
        };
        match *self {
            InitialDataSpec::CompactPolynomial { amplitude, support, iota } => {
                positive("A", amplitude)?;
                positive("a", support)?;
                if let Some(i) = iota {
                    positive("iota", i)?;
                }
            }
            InitialDataSpec::Gaussian { mass, t } => {
                positive("M", mass)?;
                positive("t", t)?;
            }
            InitialDataSpec::LaneEmdenMinimizer { mass, radius } => {
                positive("M", mass)?;
                positive("R0", radius)?;
            }
            InitialDataSpec::Table { .. } => {}
        }
        Ok(())
    }

    /// Closed-form mass where one exists.
    pub fn analytic_mass(&self, params: &ModelParams, species: Species) -> Result<Option<f64>> {
        Ok(match *self {
            InitialDataSpec::CompactPolynomial { amplitude, support, iota } => {
                let iota = resolve_iota(iota, params, species)?;
                Some(compact_polynomial_power_integral(params.d(), amplitude, support, iota, 1.0))
            }
            InitialDataSpec::Gaussian { mass, .. } | InitialDataSpec::LaneEmdenMinimizer { mass, .. } => Some(mass),
            InitialDataSpec::Table { .. } => None,
        })
    }
}

/// `(ι1, ι2) = (2 m2, 2 m1) / ((m1 + m2 - m1 m2) d)`.
pub fn iota_exponents(params: &ModelParams) -> Result<(f64, f64)> {
    let defect = params.scaling_defect();
    if !(defect > 0.0) {
        return Err(Error::ConstructionUndefined(format!(
            "m1 + m2 - m1 m2 = {defect} must be positive"
        )));
    }
    let den = defect * params.dim();
    Ok((2.0 * params.m2() / den, 2.0 * params.m1() / den))
}

fn resolve_iota(iota: Option<f64>, params: &ModelParams, species: Species) -> Result<f64> {
    match iota {
        Some(i) => Ok(i),
        None => {
            let (i1, i2) = iota_exponents(params)?;
            Ok(match species {
                Species::U => i1,
                Species::W => i2,
            })
        }
    }
}

/// `∫ (A (1 - |x|^d/a^d)_+^ι)^p dx = A^p σ a^d / (d (1 + ι p))`.
pub fn compact_polynomial_power_integral(d: u32, amplitude: f64, support: f64, iota: f64, p: f64) -> f64 {
    let df = d as f64;
    amplitude.powf(p) * unit_sphere_area(d) * support.powf(df) / (df * (1.0 + iota * p))
}

/// Amplitude giving the compact polynomial the prescribed mass.
pub fn compact_polynomial_amplitude(d: u32, mass: f64, support: f64, iota: f64) -> f64 {
    mass / compact_polynomial_power_integral(d, 1.0, support, iota, 1.0)
}

/// Per-cell quadrature of `profile^p` in the radial measure, without the
/// cell-averaging step. Used to check the amplitude identities.
pub fn profile_power_integral(spec: &InitialDataSpec, params: &ModelParams, species: Species, grid: &RadialGrid, p: f64) -> Result<f64> {
    let InitialDataSpec::CompactPolynomial { amplitude, support, iota } = *spec else {
        return Err(Error::ConstructionUndefined("power quadrature is defined for compact polynomials".into()));
    };
    let iota = resolve_iota(iota, params, species)?;
    let d = grid.dim();
    let sigma = grid.sphere_area();
    let f = |r: f64| {
        let base = (1.0 - (r / support).powf(d)).max(0.0);
        (amplitude * base.powf(iota)).powf(p) * sigma * r.powf(d - 1.0)
    };
    let e = grid.edges();
    Ok((0..grid.len())
        .map(|i| crate::quadrature::gauss5_split(&f, e[i], e[i + 1], &[support], 1))
        .sum())
}

pub fn build(spec: &InitialDataSpec, grid: &Arc<RadialGrid>, params: &ModelParams, species: Species) -> Result<RadialField> {
    spec.validate()?;
    let radius = grid.radius();
    let d = grid.dim();
    match spec {
        &InitialDataSpec::CompactPolynomial { amplitude, support, iota } => {
            if support > radius * (1.0 + 1e-12) {
                return Err(Error::Truncation { support, radius });
            }
            let iota = resolve_iota(iota, params, species)?;
            RadialField::from_profile(
                grid.clone(),
                |r| amplitude * (1.0 - (r / support).powf(d)).max(0.0).powf(iota),
                &[support],
            )
        }
        &InitialDataSpec::Gaussian { mass, t } => {
            let reach = 10.0 * t.sqrt();
            if reach > radius * (1.0 + 1e-12) {
                return Err(Error::Truncation { support: reach, radius });
            }
            let norm = mass / (4.0 * std::f64::consts::PI * t).powf(d / 2.0);
            RadialField::from_profile(grid.clone(), |r| norm * (-r * r / (4.0 * t)).exp(), &[])
        }
        &InitialDataSpec::LaneEmdenMinimizer { mass, radius: r0 } => {
            let le = critical_lane_emden(grid.d() as i64)?;
            minimizer_profile(&le, grid, mass, r0)
        }
        InitialDataSpec::Table { path } => {
            let f = RadialField::read_csv(path)?;
            if f.grid().d() != grid.d() {
                return Err(Error::InvalidField(format!(
                    "table dimension {} differs from grid dimension {}",
                    f.grid().d(),
                    grid.d()
                )));
            }
            if f.grid().same_as(grid) {
                RadialField::new(grid.clone(), f.into_values())
            } else {
                f.remap(grid.clone())
            }
        }
    }
}

pub fn build_state(u: &InitialDataSpec, w: &InitialDataSpec, grid: &Arc<RadialGrid>, params: &ModelParams) -> Result<SystemState> {
    SystemState::new(build(u, grid, params, Species::U)?, build(w, grid, params, Species::W)?, 0.0)
}

/// `N0 = (d/c_d)^{2-2/d} / (2^{1+2/d} (d-2)) · (1+ι1)(1+ι2)`.
pub fn blowup_number_n0(params: &ModelParams, c_d: f64) -> Result<f64> {
    let (i1, i2) = iota_exponents(params)?;
    let d = params.dim();
    Ok((d / c_d).powf(2.0 - 2.0 / d) / (2f64.powf(1.0 + 2.0 / d) * (d - 2.0)) * (1.0 + i1) * (1.0 + i2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdCase {
    /// `m1 m2 + 2 max(m1,m2)/d <= m1 + m2 < m1 m2 + 2 m1 m2/d`: threshold `N0`.
    Single,
    /// `m1 + m2 >= m1 m2 + 2 m1 m2 / d`: threshold `2 N0`.
    Doubled,
    /// Equal masses compared with the critical mass at the intersection point.
    CriticalMass,
    /// Subcritical pair: no sufficient condition applies.
    NotApplicable,
}

pub fn threshold_case(params: &ModelParams) -> ThresholdCase {
    let regime = classify(params, DEFAULT_CLASSIFY_TOL);
    if regime.tag == RegimeTag::Subcritical {
        return ThresholdCase::NotApplicable;
    }
    let (m1, m2, d) = (params.m1(), params.m2(), params.dim());
    if m1 + m2 >= m1 * m2 + 2.0 * m1 * m2 / d {
        ThresholdCase::Doubled
    } else {
        ThresholdCase::Single
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub regime: RegimeTag,
    pub case: ThresholdCase,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub satisfied: bool,
    /// What produced the threshold and under which `c_d` convention.
    pub rhs_source: String,
    pub convention: String,
    pub f0: f64,
    pub g0: f64,
}

/// `(∫u^{1/ι1})^{ι1} (∫w^{1/ι2})^{ι2} / ((∫u^{1/ι1})^{ι1 m1} + (∫w^{1/ι2})^{ι2 m2})`.
pub fn condition_lhs(u0: &RadialField, w0: &RadialField, params: &ModelParams) -> Result<f64> {
    let (i1, i2) = iota_exponents(params)?;
    let x = u0.power_integral(1.0 / i1).powf(i1);
    let y = w0.power_integral(1.0 / i2).powf(i2);
    let den = x.powf(params.m1()) + y.powf(params.m2());
    Ok(if den == 0.0 { 0.0 } else { x * y / den })
}

/// Evaluates the blow-up sufficient condition for `(u0, w0)`. At the
/// intersection point the threshold is `M_c^{2/d}/2` when `critical_mass`
/// is supplied.
pub fn check_blowup_condition(
    u0: &RadialField,
    w0: &RadialField,
    params: &ModelParams,
    norm: &Normalization,
    critical_mass: Option<f64>,
) -> Result<ConditionReport> {
    let regime = classify(params, DEFAULT_CLASSIFY_TOL).tag;
    let state = SystemState::new(u0.clone(), w0.clone(), 0.0)?;
    let f0 = free_energy(&state, params, norm)?;
    let g0 = virial_g(&state, params, norm)?;
    let convention = norm.convention.label();
    let mut case = threshold_case(params);
    let lhs = match iota_exponents(params) {
        Ok(_) => condition_lhs(u0, w0, params)?,
        Err(_) => f64::NAN,
    };
    let (rhs, rhs_source) = match case {
        ThresholdCase::NotApplicable => (f64::NAN, "subcritical: no threshold".to_string()),
        _ if regime == RegimeTag::CriticalI && critical_mass.is_some() => {
            case = ThresholdCase::CriticalMass;
            let mc = critical_mass.unwrap();
            (mc.powf(2.0 / params.dim()) / 2.0, format!("M_c^(2/d)/2 with M_c={mc}"))
        }
        ThresholdCase::Single => (blowup_number_n0(params, norm.c_d())?, "N0".to_string()),
        _ => (2.0 * blowup_number_n0(params, norm.c_d())?, "2*N0".to_string()),
    };
    let margin = if rhs.is_finite() && rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(ConditionReport {
        regime,
        case,
        lhs,
        rhs,
        margin,
        satisfied: margin > 1.0,
        rhs_source,
        convention,
        f0,
        g0,
    })
}

/// Compact-polynomial pair with common support `a` whose condition
/// left-hand side equals `margin` times the threshold. The pair is balanced
/// so both terms of the denominator are equal.
///
/// The volume identity `∫(1 - |x|^d/a^d)_+ dx = σ a^d/(2d)` uses the true
/// sphere area whatever the `c_d` convention.
pub fn blowup_pair(params: &ModelParams, support: f64, margin: f64, norm: &Normalization) -> Result<(InitialDataSpec, InitialDataSpec)> {
    if !(margin > 0.0 && support > 0.0) {
        return Err(Error::ConstructionUndefined(format!(
            "margin={margin} and support={support} must be positive"
        )));
    }
    let threshold = match threshold_case(params) {
        ThresholdCase::NotApplicable => {
            return Err(Error::ConstructionUndefined("subcritical exponents".into()));
        }
        ThresholdCase::Doubled => 2.0 * blowup_number_n0(params, norm.c_d())?,
        _ => blowup_number_n0(params, norm.c_d())?,
    };
    let (i1, i2) = iota_exponents(params)?;
    let (m1, m2) = (params.m1(), params.m2());
    let d = params.dim();
    let k = 2.0 * d / unit_sphere_area(params.d());
    let e = params.scaling_defect() / m2;
    let x = (2.0 * margin * threshold).powf(1.0 / e);
    let y = x.powf(m1 / m2);
    let a_amp = x * k.powf(i1) * support.powf(-d * i1);
    let b_amp = y * k.powf(i2) * support.powf(-d * i2);
    Ok((
        InitialDataSpec::CompactPolynomial {
            amplitude: a_amp,
            support,
            iota: Some(i1),
        },
        InitialDataSpec::CompactPolynomial {
            amplitude: b_amp,
            support,
            iota: Some(i2),
        },
    ))
}

/// Compact polynomials with prescribed masses on a common support.
pub fn compact_pair_with_masses(params: &ModelParams, support: f64, m_u: f64, m_w: f64) -> Result<(InitialDataSpec, InitialDataSpec)> {
    let (i1, i2) = iota_exponents(params)?;
    let mk = |mass: f64, iota: f64| InitialDataSpec::CompactPolynomial {
        amplitude: compact_polynomial_amplitude(params.d(), mass, support, iota),
        support,
        iota: Some(iota),
    };
    Ok((mk(m_u, i1), mk(m_w, i2)))
}
