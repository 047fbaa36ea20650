//! Lane-Emden profiles, sharp interaction constants, critical masses and
//! functional-inequality probes.

use std::sync::Arc;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{unit_sphere_area, RadialField, RadialGrid};
use crate::potential::{interaction_energy, newtonian_constant, Normalization};
use crate::regimes::{critical_exponent, l1_partner, validate_dimension, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneEmdenSample {
    pub r: f64,
    pub zeta: f64,
    pub slope: f64,
}

/// Solution of `ζ'' + (d-1)/r ζ' + coefficient·ζ^exponent = 0`,
/// `ζ(0) = zeta0`, `ζ'(0) = 0`, up to its first zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneEmdenProfile {
    pub d: u32,
    pub exponent: f64,
    pub coefficient: f64,
    pub zeta0: f64,
    pub first_zero: f64,
    /// `ζ'` at the first zero.
    pub boundary_slope: f64,
    /// `∫_{B} ζ^exponent dx` over the ball bounded by the first zero.
    pub source_mass: f64,
    /// `∫_{B} ζ^{exponent+1} dx`.
    pub energy_integral: f64,
    pub table: Vec<LaneEmdenSample>,
}

impl LaneEmdenProfile {
    /// Cubic Hermite interpolation of the table; zero past the first zero.
    pub fn value_at(&self, r: f64) -> f64 {
        if r >= self.first_zero {
            return 0.0;
        }
        let r = r.max(0.0);
        let t = &self.table;
        if r <= t[0].r {
            // quadratic series near the centre
            let c = self.coefficient * self.zeta0.powf(self.exponent);
            return self.zeta0 - c * r * r / (2.0 * self.d as f64);
        }
        let k = t.partition_point(|s| s.r <= r).min(t.len() - 1).max(1);
        let (a, b) = (&t[k - 1], &t[k]);
        let h = b.r - a.r;
        let s = (r - a.r) / h;
        let (s2, s3) = (s * s, s * s * s);
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * a.zeta
            + (s3 - 2.0 * s2 + s) * h * a.slope
            + (-2.0 * s3 + 3.0 * s2) * b.zeta
            + (s3 - s2) * h * b.slope;
        v.max(0.0)
    }
}

const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

type State = [f64; 4];

struct LaneEmdenOde {
    dm1: f64,
    dm1_int: f64,
    power: f64,
    coeff: f64,
}

impl LaneEmdenOde {
    fn rhs(&self, r: f64, y: &State) -> State {
        let z = y[0].max(0.0);
        let zp = z.powf(self.power);
        let w = r.powf(self.dm1_int);
        [y[1], -self.dm1 / r * y[1] - self.coeff * zp, zp * w, zp * z * w]
    }

    /// One Dormand-Prince step: fifth-order solution and error estimate.
    fn step(&self, r: f64, y: &State, h: f64) -> (State, State) {
        let mut k = [[0.0; 4]; 7];
        for s in 0..7 {
            let mut ys = *y;
            for (j, kj) in k.iter().enumerate().take(s) {
                for c in 0..4 {
                    ys[c] += h * DP_A[s][j] * kj[c];
                }
            }
            k[s] = self.rhs(r + DP_C[s] * h, &ys);
        }
        let mut y5 = *y;
        let mut err = [0.0; 4];
        for s in 0..7 {
            for c in 0..4 {
                y5[c] += h * DP_B5[s] * k[s][c];
                err[c] += h * (DP_B5[s] - DP_B4[s]) * k[s][c];
            }
        }
        (y5, err)
    }
}

fn check_lane_emden_args(d: i64, power: f64, coeff: f64) -> Result<u32> {
    let d = validate_dimension(d)?;
    if !(power > 1.0 && power.is_finite()) {
        return Err(Error::OutOfRange {
            what: "power",
            value: power,
            lo: 1.0,
            hi: f64::INFINITY,
        });
    }
    if !(coeff > 0.0 && coeff.is_finite()) {
        return Err(Error::OutOfRange {
            what: "coeff",
            value: coeff,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    Ok(d)
}

/// Shooting from `ζ(0) = zeta0` until the first zero or `r_max`.
pub fn lane_emden_shoot(d: i64, power: f64, coeff: f64, zeta0: f64, r_max: f64) -> Result<LaneEmdenProfile> {
    let du = check_lane_emden_args(d, power, coeff)?;
    if !(zeta0 > 0.0 && zeta0.is_finite()) {
        return Err(Error::OutOfRange {
            what: "zeta0",
            value: zeta0,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let df = du as f64;
    let ode = LaneEmdenOde {
        dm1: df - 1.0,
        dm1_int: df - 1.0,
        power,
        coeff,
    };
    let sigma = unit_sphere_area(du);
    let length = 1.0 / (coeff * zeta0.powf(power - 1.0)).sqrt();
    let r0 = 1e-6 * length;
    let c0 = coeff * zeta0.powf(power);
    let mut r = r0;
    let mut y: State = [
        zeta0 - c0 * r0 * r0 / (2.0 * df),
        -c0 * r0 / df,
        zeta0.powf(power) * r0.powf(df) / df,
        zeta0.powf(power + 1.0) * r0.powf(df) / df,
    ];
    let scale = [zeta0, zeta0 / length];
    let (rtol, atol) = (1e-12, 1e-14);
    let h_max = length / 64.0;
    let mut h = 1e-3 * length;
    let mut table = vec![LaneEmdenSample {
        r,
        zeta: y[0],
        slope: y[1],
    }];
    let mut steps = 0usize;
    loop {
        if r >= r_max {
            return Err(Error::NoZero { r_max });
        }
        steps += 1;
        if steps > 5_000_000 {
            return Err(Error::NoZero { r_max: r });
        }
        h = h.min(h_max).min(r_max - r).max(1e-14 * length);
        let (yn, err) = ode.step(r, &y, h);
        let mut e: f64 = 0.0;
        for c in 0..2 {
            let tol = atol * scale[c] + rtol * y[c].abs().max(yn[c].abs());
            e = e.max(err[c].abs() / tol);
        }
        if e > 1.0 {
            h *= (0.9 * e.powf(-0.2)).max(0.2);
            continue;
        }
        if yn[0] <= 0.0 {
            // locate the crossing by secant iteration on the step length
            let (mut lo, mut hi) = (0.0, h);
            let (mut f_lo, mut f_hi) = (y[0], yn[0]);
            let mut best = (h, yn);
            for _ in 0..200 {
                let s = if f_lo != f_hi {
                    (lo - f_lo * (hi - lo) / (f_hi - f_lo)).clamp(lo + 0.01 * (hi - lo), hi - 0.01 * (hi - lo))
                } else {
                    0.5 * (lo + hi)
                };
                let (ys, _) = ode.step(r, &y, s);
                best = (s, ys);
                if ys[0].abs() <= 1e-15 * zeta0 || hi - lo <= 1e-15 * (r + hi) {
                    break;
                }
                if ys[0] > 0.0 {
                    lo = s;
                    f_lo = ys[0];
                } else {
                    hi = s;
                    f_hi = ys[0];
                }
            }
            let (s, ys) = best;
            let rz = r + s;
            table.push(LaneEmdenSample {
                r: rz,
                zeta: 0.0,
                slope: ys[1],
            });
            return Ok(LaneEmdenProfile {
                d: du,
                exponent: power,
                coefficient: coeff,
                zeta0,
                first_zero: rz,
                boundary_slope: ys[1],
                source_mass: sigma * ys[2],
                energy_integral: sigma * ys[3],
                table,
            });
        }
        r += h;
        y = yn;
        table.push(LaneEmdenSample {
            r,
            zeta: y[0],
            slope: y[1],
        });
        h *= (0.9 * e.max(1e-10).powf(-0.2)).min(5.0);
    }
}

/// Boundary-value mode: the central value whose first zero is `radius`.
pub fn lane_emden_ball(d: i64, power: f64, coeff: f64, radius: f64) -> Result<LaneEmdenProfile> {
    check_lane_emden_args(d, power, coeff)?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::OutOfRange {
            what: "radius",
            value: radius,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let unit = lane_emden_shoot(d, power, coeff, 1.0, 1e4 / coeff.sqrt())?;
    // first zero scales as zeta0^{-(power-1)/2}
    let guess = (unit.first_zero / radius).powf(2.0 / (power - 1.0));
    let zero_of = |z0: f64| -> Result<f64> {
        let length = 1.0 / (coeff * z0.powf(power - 1.0)).sqrt();
        Ok(lane_emden_shoot(d, power, coeff, z0, 1e4 * length)?.first_zero - radius)
    };
    let (mut lo, mut hi) = (0.9 * guess, 1.1 * guess);
    let (mut g_lo, g_hi) = (zero_of(lo)?, zero_of(hi)?);
    if !(g_lo > 0.0 && g_hi < 0.0) {
        return Err(Error::NumericalFailure {
            what: "lane-emden bracket".into(),
            t_last: 0.0,
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let g = zero_of(mid)?;
        if g == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if (g > 0.0) == (g_lo > 0.0) {
            lo = mid;
            g_lo = g;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let z0 = 0.5 * (lo + hi);
    let length = 1.0 / (coeff * z0.powf(power - 1.0)).sqrt();
    lane_emden_shoot(d, power, coeff, z0, 1e4 * length)
}

/// Given `zeta0` shoot, otherwise solve on the
/// unit ball.
pub fn lane_emden_solve(d: i64, power: f64, coeff: f64, zeta0: Option<f64>) -> Result<LaneEmdenProfile> {
    match zeta0 {
        Some(z0) => {
            let length = 1.0 / (coeff * z0.powf(power - 1.0)).sqrt();
            lane_emden_shoot(d, power, coeff, z0, 1e4 * length)
        }
        None => lane_emden_ball(d, power, coeff, 1.0),
    }
}

/// The unit-ball profile behind the extremal at the intersection point:
/// exponent `1/(m_c-1) = d/(d-2)`, coefficient `(m_c-1)/m_c`.
pub fn critical_lane_emden(d: i64) -> Result<LaneEmdenProfile> {
    let mc = critical_exponent(d)?;
    lane_emden_ball(d, 1.0 / (mc - 1.0), (mc - 1.0) / mc, 1.0)
}

/// `ζ(r/R0)^{d/(d-2)} / R0^d` on the grid, rescaled to mass `mass`.
pub fn minimizer_profile(le: &LaneEmdenProfile, grid: &Arc<RadialGrid>, mass: f64, r0: f64) -> Result<RadialField> {
    if !(mass > 0.0 && r0 > 0.0) {
        return Err(Error::InvalidField(format!("mass={mass} and R0={r0} must be positive")));
    }
    if r0 > grid.radius() * (1.0 + 1e-12) {
        return Err(Error::Truncation {
            support: r0,
            radius: grid.radius(),
        });
    }
    let p = le.exponent;
    let d = grid.dim();
    let scale = le.first_zero;
    let f = RadialField::from_profile(
        grid.clone(),
        |r| le.value_at(r / r0 * scale).powf(p) / r0.powf(d),
        &[r0],
    )?;
    let m = f.mass();
    f.scaled(mass / m)
}

/// `H[f,f] / (‖f‖_1^{2/d} ‖f‖_{m_c}^{m_c})`.
pub fn critical_ratio(f: &RadialField) -> Result<f64> {
    let d = f.grid().dim();
    let mc = 2.0 - 2.0 / d;
    let den = f.mass().powf(2.0 / d) * f.power_integral(mc);
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(interaction_energy(f, f)? / den)
}

/// `|H[f,g]| / (‖f‖_{m1} ‖g‖_1^{2/d} ‖g‖_{m2}^{1-2/d})`, the normalized
/// ratio on the first critical curve.
pub fn l1_ratio(f: &RadialField, g: &RadialField, params: &ModelParams) -> Result<f64> {
    let d = params.dim();
    let den = f.lp_norm(params.m1())? * g.mass().powf(2.0 / d) * g.lp_norm(params.m2())?.powf(1.0 - 2.0 / d);
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(interaction_energy(f, g)?.abs() / den)
}

/// `|H[f,g]| / (‖f‖_1^{2/d} ‖f‖_{m1}^{1-2/d} ‖g‖_{m2})` on the second curve.
pub fn l2_ratio(f: &RadialField, g: &RadialField, params: &ModelParams) -> Result<f64> {
    let d = params.dim();
    let den = f.mass().powf(2.0 / d) * f.lp_norm(params.m1())?.powf(1.0 - 2.0 / d) * g.lp_norm(params.m2())?;
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(interaction_energy(f, g)?.abs() / den)
}

/// Grid-free value of the critical ratio at the Lane-Emden extremal.
///
/// With `f = ζ^p` on the unit ball the potential inside is `ζ/c + κM`,
/// so `H = J/(κc) + M^2` where `J = ∫ζ^{p+1}` and `M = ∫ζ^p`.
pub fn lane_emden_ratio(le: &LaneEmdenProfile) -> f64 {
    let d = le.d as f64;
    let kappa = newtonian_constant(le.d);
    let m = le.source_mass;
    let j = le.energy_integral;
    // the extremal lives on the ball of radius first_zero; the ratio is
    // dilation invariant
    let radius = le.first_zero;
    let h = j / (kappa * le.coefficient) + m * m / radius.powf(d - 2.0);
    h / (m.powf(2.0 / d) * j)
}

/// Parametric radial shapes used by the stochastic searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TrialProfile {
    Gaussian { width: f64 },
    Compact { radius: f64, q: f64, iota: f64 },
    Mixture { w1: f64, w2: f64, weight: f64 },
    Shell { center: f64, width: f64 },
    LanePerturbed { radius: f64, delta: f64, k: f64 },
}

impl TrialProfile {
    /// Draws a shape whose support or bulk fits inside `extent`.
    pub fn sample<R: RngExt>(rng: &mut R, extent: f64) -> Self {
        match rng.random_range(0..5u32) {
            0 => TrialProfile::Gaussian {
                width: extent * rng.random_range(0.03..0.2),
            },
            1 => TrialProfile::Compact {
                radius: extent * rng.random_range(0.1..0.6),
                q: rng.random_range(0.5..6.0),
                iota: rng.random_range(0.3..4.0),
            },
            2 => TrialProfile::Mixture {
                w1: extent * rng.random_range(0.02..0.1),
                w2: extent * rng.random_range(0.05..0.2),
                weight: rng.random_range(0.01..2.0),
            },
            3 => TrialProfile::Shell {
                center: extent * rng.random_range(0.05..0.4),
                width: extent * rng.random_range(0.02..0.15),
            },
            _ => TrialProfile::LanePerturbed {
                radius: extent * rng.random_range(0.1..0.6),
                delta: rng.random_range(0.1..0.5),
                k: rng.random_range(0.5..4.0),
            },
        }
    }

    pub fn value(&self, r: f64, le: &LaneEmdenProfile) -> f64 {
        match *self {
            TrialProfile::Gaussian { width } => (-(r / width).powi(2)).exp(),
            TrialProfile::Compact { radius, q, iota } => (1.0 - (r / radius).powf(q)).max(0.0).powf(iota),
            TrialProfile::Mixture { w1, w2, weight } => (-(r / w1).powi(2)).exp() + weight * (-(r / w2).powi(2)).exp(),
            TrialProfile::Shell { center, width } => (-((r - center) / width).powi(2)).exp(),
            TrialProfile::LanePerturbed { radius, delta, k } => {
                let s = r / radius;
                if s >= 1.0 {
                    0.0
                } else {
                    le.value_at(s * le.first_zero).powf(le.exponent) * (1.0 + delta * (k * std::f64::consts::PI * s).cos())
                }
            }
        }
    }

    fn breakpoint(&self) -> Option<f64> {
        match *self {
            TrialProfile::Compact { radius, .. } | TrialProfile::LanePerturbed { radius, .. } => Some(radius),
            _ => None,
        }
    }

    pub fn to_field(&self, grid: &Arc<RadialGrid>, le: &LaneEmdenProfile) -> Result<RadialField> {
        let bp: Vec<f64> = self.breakpoint().into_iter().collect();
        RadialField::from_profile(grid.clone(), |r| self.value(r, le), &bp)
    }
}

fn sample_profiles(seed: u64, count: usize, extent: f64) -> Vec<TrialProfile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| TrialProfile::sample(&mut rng, extent)).collect()
}

/// Deterministic random trial fields for sup-property checks.
pub fn random_trial_fields(grid: &Arc<RadialGrid>, le: &LaneEmdenProfile, seed: u64, count: usize) -> Result<Vec<RadialField>> {
    sample_profiles(seed, count, grid.radius())
        .iter()
        .map(|p| p.to_field(grid, le))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcEstimate {
    /// Returned estimate: the larger of the extremal and search values.
    pub value: f64,
    /// Grid-free ratio of the Lane-Emden extremal.
    pub extremal: f64,
    /// Ratio of the extremal's cell-averaged representation.
    pub extremal_on_grid: f64,
    pub search_max: f64,
    pub best_trial: Option<TrialProfile>,
    pub samples: usize,
    pub seed: u64,
}

/// Estimates `C_c = sup H[f,f] / (‖f‖_1^{2/d} ‖f‖_{m_c}^{m_c})`.
pub fn estimate_cc(d: i64, grid: &Arc<RadialGrid>, seed: u64, samples: usize) -> Result<CcEstimate> {
    let le = critical_lane_emden(d)?;
    let extremal = lane_emden_ratio(&le);
    let r0 = 0.5 * grid.radius();
    let on_grid = critical_ratio(&minimizer_profile(&le, grid, 1.0, r0)?)?;
    let trials = sample_profiles(seed, samples, grid.radius());
    let scored: Vec<(f64, usize)> = trials
        .par_iter()
        .enumerate()
        .map(|(i, p)| Ok((critical_ratio(&p.to_field(grid, &le)?)?, i)))
        .collect::<Result<Vec<_>>>()?;
    let best = scored.iter().copied().fold((0.0, usize::MAX), |a, b| if b.0 > a.0 { b } else { a });
    Ok(CcEstimate {
        value: extremal.max(best.0),
        extremal,
        extremal_on_grid: on_grid,
        search_max: best.0,
        best_trial: trials.get(best.1).copied(),
        samples,
        seed,
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum CurveRatio {
    L1,
    L2,
}

/// Lower bound of the sup of the normalized ratio on one critical curve by
/// sampling independent product families `(f, g)`.
pub fn estimate_curve_constant(
    params: &ModelParams,
    which: CurveRatio,
    grid: &Arc<RadialGrid>,
    seed: u64,
    samples: usize,
) -> Result<f64> {
    let le = critical_lane_emden(params.d() as i64)?;
    let fs = sample_profiles(seed, samples, grid.radius());
    let gs = sample_profiles(seed.wrapping_add(0x9e37_79b9_7f4a_7c15), samples, grid.radius());
    let values = fs
        .par_iter()
        .zip(gs.par_iter())
        .map(|(pf, pg)| {
            let f = pf.to_field(grid, &le)?;
            let g = pg.to_field(grid, &le)?;
            match which {
                CurveRatio::L1 => l1_ratio(&f, &g, params),
                CurveRatio::L2 => l2_ratio(&f, &g, params),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(values.into_iter().fold(0.0, f64::max))
}

/// Default sample points: the midpoint of the admissible `m1` range on the
/// first curve and its mirror on the second.
pub fn default_curve_points(d: i64) -> Result<(ModelParams, ModelParams)> {
    let mc = critical_exponent(d)?;
    let m1 = 0.5 * (mc + d as f64 / 2.0);
    let on_l1 = ModelParams::new(d, m1, l1_partner(m1, d)?)?;
    Ok((on_l1, on_l1.swapped()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct ConstantEstimates {
    pub d: u32,
    pub C_c: Option<f64>,
    pub C_star_L1: Option<f64>,
    pub C_star_L2: Option<f64>,
    pub M_c: Option<f64>,
    pub M_1c: Option<f64>,
    pub M_2c: Option<f64>,
    pub c_d_convention: String,
    pub seed: u64,
    pub l1_point: Option<(f64, f64)>,
    pub l2_point: Option<(f64, f64)>,
    pub methods: Vec<String>,
}

impl ConstantEstimates {
    pub fn empty(d: u32, norm: &Normalization, seed: u64) -> Self {
        Self {
            d,
            C_c: None,
            C_star_L1: None,
            C_star_L2: None,
            M_c: None,
            M_1c: None,
            M_2c: None,
            c_d_convention: norm.convention.label(),
            seed,
            l1_point: None,
            l2_point: None,
            methods: Vec::new(),
        }
    }
}

/// `M_c = (2 / (c_d C_c (m_c-1)))^{d/2}`.
pub fn critical_mass_point(d: f64, c_d: f64, cc: f64) -> f64 {
    let mc = 2.0 - 2.0 / d;
    (2.0 / (c_d * cc * (mc - 1.0))).powf(d / 2.0)
}

/// Mass threshold on a critical curve from its sup constant.
/// `first` is the exponent paired with the `L^{m}` factor of the function
/// whose mass is thresholded.
fn curve_mass(d: f64, c_d: f64, constant: f64, thresholded: f64, other: f64) -> f64 {
    (c_d * constant).powf(-d / 2.0)
        * (thresholded / (thresholded - 1.0)).powf(d / 2.0)
        * (other - 1.0).powf(-d * (thresholded - 1.0) / (2.0 * thresholded))
}

/// Fills `M_c`, `M_1c` and `M_2c` from whichever constants are present.
pub fn critical_masses(mut est: ConstantEstimates, norm: &Normalization) -> Result<ConstantEstimates> {
    let d = est.d as f64;
    let c_d = norm.c_d();
    let mut any = false;
    if let Some(cc) = est.C_c {
        est.M_c = Some(critical_mass_point(d, c_d, cc));
        any = true;
    }
    if let (Some(c), Some((m1, m2))) = (est.C_star_L2, est.l2_point) {
        est.M_1c = Some(curve_mass(d, c_d, c, m2, m1));
        any = true;
    }
    if let (Some(c), Some((m1, m2))) = (est.C_star_L1, est.l1_point) {
        est.M_2c = Some(curve_mass(d, c_d, c, m1, m2));
        any = true;
    }
    if !any {
        return Err(Error::MissingConstant("C_c, C_star_L1 or C_star_L2"));
    }
    Ok(est)
}

#[derive(Debug, Clone, Copy)]
pub struct EstimationBudget {
    pub n: usize,
    pub extent: f64,
    pub samples: usize,
}

impl Default for EstimationBudget {
    fn default() -> Self {
        Self {
            n: 1024,
            extent: 4.0,
            samples: 400,
        }
    }
}

/// Runs all estimators on a uniform grid and fills the critical masses.
pub fn estimate_constants(d: i64, norm: &Normalization, seed: u64, budget: EstimationBudget) -> Result<ConstantEstimates> {
    let du = validate_dimension(d)?;
    let grid = Arc::new(RadialGrid::uniform(du, budget.n, budget.extent)?);
    let cc = estimate_cc(d, &grid, seed, budget.samples)?;
    let (l1, l2) = default_curve_points(d)?;
    let c1 = estimate_curve_constant(&l1, CurveRatio::L1, &grid, seed ^ 0x11, budget.samples)?;
    let c2 = estimate_curve_constant(&l2, CurveRatio::L2, &grid, seed ^ 0x22, budget.samples)?;
    let mut est = ConstantEstimates::empty(du, norm, seed);
    est.C_c = Some(cc.value);
    est.C_star_L1 = Some(c1);
    est.C_star_L2 = Some(c2);
    est.l1_point = Some((l1.m1(), l1.m2()));
    est.l2_point = Some((l2.m1(), l2.m2()));
    est.methods = vec![
        format!(
            "C_c: max of Lane-Emden extremal ratio and {} sampled radial profiles",
            budget.samples
        ),
        format!("C_star_L1: sup over {} sampled product pairs at (m1,m2)=({:.6},{:.6}); lower bound", budget.samples, l1.m1(), l1.m2()),
        format!("C_star_L2: sup over {} sampled product pairs at (m1,m2)=({:.6},{:.6}); lower bound", budget.samples, l2.m1(), l2.m2()),
    ];
    critical_masses(est, norm)
}

/// Normalized Cauchy-Schwarz slack `1 - H[f,g] / sqrt(H[f,f] H[g,g])`.
pub fn cauchy_schwarz_slack(f: &RadialField, g: &RadialField) -> Result<f64> {
    let hfg = interaction_energy(f, g)?;
    let bound = (interaction_energy(f, f)? * interaction_energy(g, g)?).sqrt();
    if bound == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 - hfg / bound)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub applicable: bool,
    pub reason: Option<String>,
    pub lhs: f64,
    pub constant: f64,
    pub etas: Vec<f64>,
    pub rhs: Vec<f64>,
    pub min_slack: f64,
}

/// Interpolation weight `θ` with `((d+2)m - d)/(m d) = θ + (1-θ)/m2`.
pub fn interpolation_theta(d: f64, m: f64, m2: f64) -> f64 {
    let target = ((d + 2.0) * m - d) / (m * d);
    (target - 1.0 / m2) / (1.0 - 1.0 / m2)
}

fn probe_hypothesis(params: &ModelParams) -> Option<String> {
    let (d, m, m2) = (params.dim(), params.m1(), params.m2());
    if m >= d / 2.0 {
        return Some(format!("m1={m} must be below d/2"));
    }
    if m * m2 + 2.0 * m * m2 / d < m + m2 {
        return Some("m1 m2 + 2 m1 m2/d must be >= m1 + m2".into());
    }
    None
}

/// `|H[f,g]| / (‖f‖_{m1} ‖g‖_1^θ ‖g‖_{m2}^{1-θ})`.
pub fn young_ratio(f: &RadialField, g: &RadialField, params: &ModelParams) -> Result<f64> {
    let theta = interpolation_theta(params.dim(), params.m1(), params.m2());
    let den = f.lp_norm(params.m1())? * g.mass().powf(theta) * g.lp_norm(params.m2())?.powf(1.0 - theta);
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(interaction_energy(f, g)?.abs() / den)
}

/// Sampled lower bound of the interpolated HLS constant, including the
/// probed pairs themselves.
pub fn estimate_young_constant(
    params: &ModelParams,
    grid: &Arc<RadialGrid>,
    seed: u64,
    samples: usize,
    extra: &[(&RadialField, &RadialField)],
) -> Result<f64> {
    let le = critical_lane_emden(params.d() as i64)?;
    let fs = sample_profiles(seed, samples, grid.radius());
    let gs = sample_profiles(seed.wrapping_add(1), samples, grid.radius());
    let sampled = fs
        .par_iter()
        .zip(gs.par_iter())
        .map(|(pf, pg)| young_ratio(&pf.to_field(grid, &le)?, &pg.to_field(grid, &le)?, params))
        .collect::<Result<Vec<f64>>>()?;
    let mut best = sampled.into_iter().fold(0.0, f64::max);
    for (f, g) in extra {
        best = best.max(young_ratio(f, g, params)?);
    }
    Ok(best)
}

/// Evaluates `|H[f,g]| <= η‖f‖_m^m + C(η) (C_HLS ‖g‖_1^θ ‖g‖_{m2}^{1-θ})^{m/(m-1)}`
/// with the optimal Young constant `C(η) = (m-1)/m (mη)^{-1/(m-1)}`.
pub fn inequality_probe(f: &RadialField, g: &RadialField, params: &ModelParams, constant: f64, etas: &[f64]) -> Result<ProbeReport> {
    if let Some(reason) = probe_hypothesis(params) {
        return Ok(ProbeReport {
            applicable: false,
            reason: Some(reason),
            lhs: f64::NAN,
            constant,
            etas: etas.to_vec(),
            rhs: Vec::new(),
            min_slack: f64::NAN,
        });
    }
    let m = params.m1();
    let theta = interpolation_theta(params.dim(), m, params.m2());
    let lhs = interaction_energy(f, g)?.abs();
    let fm = f.power_integral(m);
    let x = constant * g.mass().powf(theta) * g.lp_norm(params.m2())?.powf(1.0 - theta);
    let rhs: Vec<f64> = etas
        .iter()
        .map(|&eta| eta * fm + (m - 1.0) / m * (m * eta).powf(-1.0 / (m - 1.0)) * x.powf(m / (m - 1.0)))
        .collect();
    let min_slack = rhs.iter().map(|r| r - lhs).fold(f64::INFINITY, f64::min);
    Ok(ProbeReport {
        applicable: true,
        reason: None,
        lhs,
        constant,
        etas: etas.to_vec(),
        rhs,
        min_slack: if etas.is_empty() { 0.0 } else { min_slack },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::free_energy;
    use crate::field::SystemState;

    /// Independent fixed-step classical RK4 on the same ODE.
    fn rk4_first_zero(power: f64, coeff: f64, h: f64) -> f64 {
        let f = |r: f64, z: f64, p: f64| (p, -2.0 / r * p - coeff * z.max(0.0).powf(power));
        let mut r = h;
        let mut z = 1.0 - coeff * h * h / 6.0;
        let mut p = -coeff * h / 3.0;
        loop {
            let (k1z, k1p) = f(r, z, p);
            let (k2z, k2p) = f(r + h / 2.0, z + h / 2.0 * k1z, p + h / 2.0 * k1p);
            let (k3z, k3p) = f(r + h / 2.0, z + h / 2.0 * k2z, p + h / 2.0 * k2p);
            let (k4z, k4p) = f(r + h, z + h * k3z, p + h * k3p);
            let zn = z + h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
            let pn = p + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            if zn <= 0.0 {
                return r + h * z / (z - zn);
            }
            r += h;
            z = zn;
            p = pn;
        }
    }

    #[test]
    fn index_three_first_zero() {
        let le = lane_emden_shoot(3, 3.0, 1.0, 1.0, 100.0).unwrap();
        assert!((le.first_zero - 6.896_848_619).abs() < 1e-6, "{}", le.first_zero);
        let oracle = rk4_first_zero(3.0, 1.0, 1e-4);
        assert!((le.first_zero - oracle).abs() < 1e-5);
        // ξ1^2 |θ'(ξ1)| for n = 3
        assert!((le.first_zero.powi(2) * le.boundary_slope.abs() - 2.01824).abs() < 1e-4);
    }

    #[test]
    fn index_one_closed_form() {
        // power 1 is excluded, but a power close to one approaches sin(r)/r
        let le = lane_emden_shoot(3, 1.0 + 1e-9, 1.0, 1.0, 100.0).unwrap();
        assert!((le.first_zero - std::f64::consts::PI).abs() < 1e-6);
    }

    #[test]
    fn unit_ball_mode() {
        let le = lane_emden_ball(3, 3.0, 0.25, 1.0).unwrap();
        let shoot = lane_emden_shoot(3, 3.0, 1.0, 1.0, 100.0).unwrap();
        assert!((le.first_zero - 1.0).abs() < 1e-10);
        assert!((le.zeta0 - 2.0 * shoot.first_zero).abs() < 1e-6);
        let residual = le.value_at(1.0 - 1e-15).abs();
        assert!(residual < 1e-8 * le.zeta0);
    }

    #[test]
    fn scaling_symmetry() {
        // ζ(r) = α θ(β r) with β^2 = c α^{p-1}
        let base = lane_emden_shoot(4, 1.7, 1.0, 1.0, 1e3).unwrap();
        let (alpha, c) = (3.0f64, 0.4f64);
        let scaled = lane_emden_shoot(4, 1.7, c, alpha, 1e3).unwrap();
        let beta = (c * alpha.powf(0.7)).sqrt();
        assert!((scaled.first_zero * beta - base.first_zero).abs() < 1e-8 * base.first_zero);
    }

    #[test]
    fn supercritical_power_has_no_zero() {
        // the Emden-Fowler power (d+2)/(d-2) = 5 decays without a zero
        assert!(matches!(
            lane_emden_shoot(3, 5.0, 1.0, 1.0, 50.0),
            Err(Error::NoZero { .. })
        ));
        assert!(lane_emden_shoot(2, 3.0, 1.0, 1.0, 50.0).is_err());
        assert!(lane_emden_shoot(3, 1.0, 1.0, 1.0, 50.0).is_err());
    }

    #[test]
    fn profile_is_decreasing() {
        let le = critical_lane_emden(3).unwrap();
        let vals: Vec<f64> = (0..=200).map(|i| le.value_at(i as f64 / 200.0)).collect();
        assert!(vals.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(le.value_at(1.5), 0.0);
    }

    #[test]
    fn minimizer_mass_and_support() {
        let le = critical_lane_emden(3).unwrap();
        let g = Arc::new(RadialGrid::uniform(3, 512, 2.0).unwrap());
        let f = minimizer_profile(&le, &g, 1.0, 1.0).unwrap();
        assert!((f.mass() - 1.0).abs() < 1e-12);
        let outside = g.locate(1.0 + 1e-9).unwrap();
        assert!(f.values()[outside..].iter().all(|v| *v == 0.0));
        assert!(f.values().windows(2).all(|w| w[1] <= w[0]));
        assert!(minimizer_profile(&le, &g, 1.0, 3.0).is_err());
    }

    #[test]
    fn extremal_mass_matches_formula() {
        // ζ^p is an exact steady state; its mass must equal the threshold
        // built from the ratio with the Newtonian constant
        for d in [3i64, 4, 5] {
            let le = critical_lane_emden(d).unwrap();
            let cc = lane_emden_ratio(&le);
            let kappa = newtonian_constant(d as u32);
            let mc = critical_mass_point(d as f64, kappa, cc);
            let sigma = unit_sphere_area(d as u32);
            let from_flux = -sigma * le.boundary_slope / le.coefficient;
            assert!((mc - le.source_mass).abs() < 1e-8 * mc, "d={d}");
            assert!((from_flux - le.source_mass).abs() < 1e-8 * mc, "d={d}");
        }
    }

    #[test]
    fn grid_ratio_approaches_extremal() {
        let le = critical_lane_emden(3).unwrap();
        let exact = lane_emden_ratio(&le);
        let mut prev = f64::INFINITY;
        for n in [256, 512, 1024] {
            let g = Arc::new(RadialGrid::uniform(3, n, 2.0).unwrap());
            let r = critical_ratio(&minimizer_profile(&le, &g, 1.0, 2.0).unwrap()).unwrap();
            let err = (r - exact).abs() / exact;
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn ratio_invariances_at_point_i() {
        let le = critical_lane_emden(3).unwrap();
        let g = Arc::new(RadialGrid::uniform(3, 1024, 4.0).unwrap());
        let base = RadialField::from_profile(g.clone(), |r| (-(r / 0.5).powi(2)).exp(), &[]).unwrap();
        let r0 = critical_ratio(&base).unwrap();
        assert!((critical_ratio(&base.scaled(7.0).unwrap()).unwrap() - r0).abs() < 1e-12 * r0);
        // λ^d f(λx) with λ = 2
        let dil = RadialField::from_profile(g.clone(), |r| 8.0 * (-(2.0 * r / 0.5).powi(2)).exp(), &[]).unwrap();
        assert!((critical_ratio(&dil).unwrap() - r0).abs() < 1e-4 * r0);
        // extremal dominates a Gaussian
        assert!(lane_emden_ratio(&le) > r0);
    }

    #[test]
    fn mass_formula_identities() {
        let d = 3.0;
        let c_d = 0.7;
        let cc = 2.0 / (c_d * (1.0 / 3.0));
        assert!((critical_mass_point(d, c_d, cc) - 1.0).abs() < 1e-14);
        let a = critical_mass_point(d, c_d, 1.3);
        let b = critical_mass_point(d, c_d, 2.6);
        assert!((a / b - 2f64.powf(1.5)).abs() < 1e-12);
        // independent evaluation at d = 3
        let expect = (2.0f64 / (c_d * 1.3 / 3.0)).powf(1.5);
        assert!((a - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn masses_need_constants() {
        let n = Normalization::newtonian(3);
        let est = ConstantEstimates::empty(3, &n, 0);
        assert!(matches!(critical_masses(est, &n), Err(Error::MissingConstant(_))));
    }

    #[test]
    fn cc_estimate_dominates_samples() {
        let g = Arc::new(RadialGrid::uniform(3, 512, 4.0).unwrap());
        let est = estimate_cc(3, &g, 7, 64).unwrap();
        assert!(est.value >= est.extremal);
        assert!(est.extremal >= est.search_max);
        let le = critical_lane_emden(3).unwrap();
        for f in random_trial_fields(&g, &le, 99, 40).unwrap() {
            assert!(est.value >= critical_ratio(&f).unwrap() - 1e-9);
        }
    }

    #[test]
    fn cauchy_schwarz_equality_for_multiples() {
        let g = Arc::new(RadialGrid::uniform(3, 256, 3.0).unwrap());
        let f = RadialField::from_profile(g.clone(), |r| (1.0 - r).max(0.0), &[1.0]).unwrap();
        assert!(cauchy_schwarz_slack(&f, &f.scaled(3.5).unwrap()).unwrap().abs() < 1e-10);
        let h = RadialField::from_profile(g, |r| (-r * r).exp(), &[]).unwrap();
        assert!(cauchy_schwarz_slack(&f, &h).unwrap() > 0.0);
    }

    #[test]
    fn probe_on_zero_and_inapplicable() {
        let g = Arc::new(RadialGrid::uniform(3, 64, 2.0).unwrap());
        let z = RadialField::zeros(g.clone());
        let p = ModelParams::new(3, 1.4, 1.4).unwrap();
        let rep = inequality_probe(&z, &z, &p, 1.0, &[0.1, 1.0]).unwrap();
        assert!(rep.applicable);
        assert_eq!(rep.lhs, 0.0);
        assert_eq!(rep.min_slack, 0.0);
        let bad = ModelParams::new(3, 1.6, 1.6).unwrap();
        assert!(!inequality_probe(&z, &z, &bad, 1.0, &[1.0]).unwrap().applicable);
    }

    #[test]
    fn theta_solves_interpolation_relation() {
        let (d, m, m2) = (3.0, 1.4, 1.3);
        let th = interpolation_theta(d, m, m2);
        assert!((th + (1.0 - th) / m2 - ((d + 2.0) * m - d) / (m * d)).abs() < 1e-15);
    }

    #[test]
    fn extremal_pair_has_zero_energy() {
        let le = critical_lane_emden(3).unwrap();
        let g = Arc::new(RadialGrid::uniform(3, 2048, 1.0).unwrap());
        let mc = le.source_mass;
        let f = minimizer_profile(&le, &g, mc, 1.0).unwrap();
        let p = ModelParams::critical_point(3).unwrap();
        let s = SystemState::new(f.clone(), f.clone(), 0.0).unwrap();
        let e = free_energy(&s, &p, &Normalization::newtonian(3)).unwrap();
        let scale = 3.0 * f.power_integral(4.0 / 3.0);
        assert!(e.abs() <= 1e-3 * scale, "F={e}, scale={scale}");
    }
}
