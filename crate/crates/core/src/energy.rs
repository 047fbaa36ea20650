//! Free energy, dissipation, second moment and virial rate.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::{RadialField, SystemState};
use crate::potential::{interaction_energy, potential_slopes, Normalization};
use crate::regimes::ModelParams;

pub const CSV_HEADER: &str = "t,mass_u,mass_w,norm_u_m1,norm_w_m2,linf_u,linf_w,F,I,G,D";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass_u: f64,
    pub mass_w: f64,
    pub norm_u_m1: f64,
    pub norm_w_m2: f64,
    pub linf_u: f64,
    pub linf_w: f64,
    pub F: f64,
    pub I: f64,
    pub G: f64,
    pub D: f64,
}

impl DiagnosticsRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.t,
            self.mass_u,
            self.mass_w,
            self.norm_u_m1,
            self.norm_w_m2,
            self.linf_u,
            self.linf_w,
            self.F,
            self.I,
            self.G,
            self.D
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticsSeries {
    pub records: Vec<DiagnosticsRecord>,
}

impl DiagnosticsSeries {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn first(&self) -> Option<&DiagnosticsRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&DiagnosticsRecord> {
        self.records.last()
    }

    pub fn push(&mut self, rec: DiagnosticsRecord) {
        self.records.push(rec);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(out, "{}", r.csv_row());
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(self.to_csv().as_bytes())?;
        f.flush()?;
        Ok(())
    }

    /// Central differences of `I` at interior samples, paired with `G`
    /// there: `(t_k, dI/dt, G_k)`.
    pub fn virial_pairs(&self) -> Vec<(f64, f64, f64)> {
        self.records
            .windows(3)
            .filter_map(|w| {
                let (a, b, c) = (&w[0], &w[1], &w[2]);
                let (h0, h1) = (b.t - a.t, c.t - b.t);
                if h0 <= 0.0 || h1 <= 0.0 {
                    return None;
                }
                // second-order on nonuniform spacing
                let di = (h0 * h0 * (c.I - b.I) + h1 * h1 * (b.I - a.I)) / (h0 * h1 * (h0 + h1));
                Some((b.t, di, b.G))
            })
            .collect()
    }
}

/// `F = ∫u^{m1}/(m1-1) + ∫w^{m2}/(m2-1) - c_d H[u,w]`.
pub fn free_energy(state: &SystemState, params: &ModelParams, norm: &Normalization) -> Result<f64> {
    let h = interaction_energy(&state.u, &state.w)?;
    Ok(free_energy_parts(
        state.u.power_integral(params.m1()),
        state.w.power_integral(params.m2()),
        h,
        params,
        norm,
    ))
}

fn free_energy_parts(pu: f64, pw: f64, h: f64, params: &ModelParams, norm: &Normalization) -> f64 {
    pu / (params.m1() - 1.0) + pw / (params.m2() - 1.0) - norm.c_d() * h
}

/// `G = 2d∫u^{m1} + 2d∫w^{m2} - 2 c_d (d-2) H[u,w]`.
pub fn virial_g(state: &SystemState, params: &ModelParams, norm: &Normalization) -> Result<f64> {
    let h = interaction_energy(&state.u, &state.w)?;
    Ok(virial_parts(
        state.u.power_integral(params.m1()),
        state.w.power_integral(params.m2()),
        h,
        params,
        norm,
    ))
}

fn virial_parts(pu: f64, pw: f64, h: f64, params: &ModelParams, norm: &Normalization) -> f64 {
    let d = params.dim();
    2.0 * d * (pu + pw) - 2.0 * norm.c_d() * (d - 2.0) * h
}

/// Combined second moment `∫|x|^2 (u + w)`.
pub fn second_moment(state: &SystemState) -> f64 {
    state.u.second_moment() + state.w.second_moment()
}

/// Face-discretized `∫ f |∇(m/(m-1) f^{m-1}) - ∇φ|^2` for one species
/// moving in the potential slopes `dphi`.
pub fn species_dissipation(f: &RadialField, m: f64, dphi: &[f64]) -> f64 {
    let g = f.grid();
    let c = g.centers();
    let a = g.face_areas();
    let vals = f.values();
    let pressure = |x: f64| m / (m - 1.0) * x.powf(m - 1.0);
    let mut total = 0.0;
    for i in 0..vals.len().saturating_sub(1) {
        let (l, r) = (vals[i], vals[i + 1]);
        if l == 0.0 && r == 0.0 {
            continue;
        }
        let (pl, pr) = (pressure(l), pressure(r));
        let mobility = if pl == pr {
            l
        } else {
            (r.powf(m) - l.powf(m)) / (pr - pl)
        };
        let h = c[i + 1] - c[i];
        let slope = (pr - pl) / h - dphi[i + 1];
        total += a[i + 1] * h * mobility * slope * slope;
    }
    total
}

/// Entropy production of both species; the `c_d` convention does not enter
/// because the potentials are the exact Newtonian ones driving the flow.
pub fn dissipation(state: &SystemState, params: &ModelParams) -> f64 {
    let dv = potential_slopes(&state.w);
    let dz = potential_slopes(&state.u);
    species_dissipation(&state.u, params.m1(), &dv) + species_dissipation(&state.w, params.m2(), &dz)
}

pub fn diagnostics(state: &SystemState, params: &ModelParams, norm: &Normalization) -> Result<DiagnosticsRecord> {
    let (m1, m2) = (params.m1(), params.m2());
    let pu = state.u.power_integral(m1);
    let pw = state.w.power_integral(m2);
    let h = interaction_energy(&state.u, &state.w)?;
    Ok(DiagnosticsRecord {
        t: state.t,
        mass_u: state.u.mass(),
        mass_w: state.w.mass(),
        norm_u_m1: pu.powf(1.0 / m1),
        norm_w_m2: pw.powf(1.0 / m2),
        linf_u: state.u.linf(),
        linf_w: state.w.linf(),
        F: free_energy_parts(pu, pw, h, params, norm),
        I: second_moment(state),
        G: virial_parts(pu, pw, h, params, norm),
        D: dissipation(state, params),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::RadialGrid;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn heat_pair(grid: &Arc<RadialGrid>, m1: f64, m2: f64, t: f64) -> SystemState {
        let kernel = move |mass: f64| move |r: f64| mass / (4.0 * PI * t).powf(1.5) * (-r * r / (4.0 * t)).exp();
        let u = RadialField::from_profile(grid.clone(), kernel(m1), &[]).unwrap();
        let w = RadialField::from_profile(grid.clone(), kernel(m2), &[]).unwrap();
        SystemState::new(u, w, 0.0).unwrap()
    }

    #[test]
    fn zero_state_is_zero() {
        let g = Arc::new(RadialGrid::uniform(3, 32, 1.0).unwrap());
        let s = SystemState::new(RadialField::zeros(g.clone()), RadialField::zeros(g), 0.0).unwrap();
        let p = ModelParams::new(3, 1.5, 1.5).unwrap();
        let n = Normalization::newtonian(3);
        assert_eq!(free_energy(&s, &p, &n).unwrap(), 0.0);
        assert_eq!(virial_g(&s, &p, &n).unwrap(), 0.0);
        assert_eq!(dissipation(&s, &p), 0.0);
    }

    #[test]
    fn virial_equals_energy_multiple_at_point_i() {
        let p = ModelParams::critical_point(3).unwrap();
        let n = Normalization::newtonian(3);
        let g = Arc::new(RadialGrid::uniform(3, 256, 6.0).unwrap());
        let s = heat_pair(&g, 3.0, 5.0, 0.3);
        let f = free_energy(&s, &p, &n).unwrap();
        let gg = virial_g(&s, &p, &n).unwrap();
        assert!((gg - 2.0 * f).abs() <= 1e-10 * (gg.abs() + 1.0));
    }

    #[test]
    fn heat_pair_energy_tends_to_zero() {
        let p = ModelParams::new(3, 1.5, 1.5).unwrap();
        let n = Normalization::newtonian(3);
        let mut prev = f64::INFINITY;
        for t in [1.0f64, 10.0, 100.0] {
            let g = Arc::new(RadialGrid::uniform(3, 1024, 12.0 * t.sqrt()).unwrap());
            let f = free_energy(&heat_pair(&g, 1.0, 1.0, t), &p, &n).unwrap().abs();
            assert!(f < prev);
            prev = f;
        }
        assert!(prev < 1e-2);
    }

    #[test]
    fn pure_diffusion_dissipation_is_chain_rule() {
        // summation by parts: D equals -dF/dt of the semi-discrete diffusion
        let m = 2.0;
        let g = Arc::new(RadialGrid::uniform(3, 200, 2.0).unwrap());
        let u = RadialField::from_profile(g.clone(), |r| (1.0 - r * r).max(0.0), &[1.0]).unwrap();
        let vals = u.values();
        let c = g.centers();
        let a = g.face_areas();
        let mut flux = vec![0.0; vals.len() + 1];
        for i in 0..vals.len() - 1 {
            flux[i + 1] = -a[i + 1] * (vals[i + 1].powf(m) - vals[i].powf(m)) / (c[i + 1] - c[i]);
        }
        let dfdt: f64 = (0..vals.len())
            .map(|i| m / (m - 1.0) * vals[i].powf(m - 1.0) * -(flux[i + 1] - flux[i]))
            .sum();
        let zero = vec![0.0; vals.len() + 1];
        let d = species_dissipation(&u, m, &zero);
        assert!(d > 0.0);
        assert!((d + dfdt).abs() < 1e-10 * d);
    }

    #[test]
    fn csv_layout() {
        let mut s = DiagnosticsSeries::default();
        s.push(DiagnosticsRecord {
            t: 0.0,
            mass_u: 1.0,
            mass_w: 2.0,
            norm_u_m1: 0.0,
            norm_w_m2: 0.0,
            linf_u: 0.0,
            linf_w: 0.0,
            F: -1.5,
            I: 0.0,
            G: 0.0,
            D: 0.0,
        });
        let text = s.to_csv();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(row.len(), 11);
        assert_eq!(row[7], -1.5);
    }

    #[test]
    fn central_difference_is_exact_for_quadratics() {
        let mut s = DiagnosticsSeries::default();
        for t in [0.0, 0.1, 0.25, 0.3] {
            s.push(DiagnosticsRecord {
                t,
                mass_u: 0.0,
                mass_w: 0.0,
                norm_u_m1: 0.0,
                norm_w_m2: 0.0,
                linf_u: 0.0,
                linf_w: 0.0,
                F: 0.0,
                I: 3.0 * t * t - t + 2.0,
                G: 0.0,
                D: 0.0,
            });
        }
        for (t, di, _) in s.virial_pairs() {
            assert!((di - (6.0 * t - 1.0)).abs() < 1e-12);
        }
    }
}
