//! Radial Newtonian potentials and the interaction energy.
//!
//! For a radial source `f` the solution of `-Δφ = f` decaying at infinity
//! is determined by the enclosed mass `E(r)`: `φ'(r) = -E(r) / (σ r^{d-1})`.
//! Inside a cell the piecewise-constant source makes `E` a polynomial in
//! `r^d`, so potentials and interaction energies are integrated in closed
//! form; the exterior of the grid is closed with the monopole tail.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{unit_sphere_area, RadialField, RadialGrid};

/// Newtonian constant `1 / ((d-2) σ_{d-1})` making `-Δ(K*w) = w`.
pub fn newtonian_constant(d: u32) -> f64 {
    1.0 / ((d as f64 - 2.0) * unit_sphere_area(d))
}

/// Which constant multiplies `H` in the energy, the virial rate and the
/// blow-up thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CdConvention {
    /// `1 / ((d-2) σ_{d-1})`, consistent with the dynamics.
    #[default]
    Newtonian,
    /// `σ_{d-1}`, the surface area of the unit sphere.
    SurfaceArea,
    Custom(f64),
}

impl CdConvention {
    pub fn label(&self) -> String {
        match self {
            CdConvention::Newtonian => "newtonian".into(),
            CdConvention::SurfaceArea => "surface_area".into(),
            CdConvention::Custom(c) => format!("custom({c})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub kappa_d: f64,
    pub c_d_value: f64,
    pub convention: CdConvention,
}

impl Normalization {
    pub fn new(d: u32, convention: CdConvention) -> Self {
        let kappa_d = newtonian_constant(d);
        let c_d_value = match convention {
            CdConvention::Newtonian => kappa_d,
            CdConvention::SurfaceArea => unit_sphere_area(d),
            CdConvention::Custom(c) => c,
        };
        Self {
            kappa_d,
            c_d_value,
            convention,
        }
    }

    pub fn newtonian(d: u32) -> Self {
        Self::new(d, CdConvention::Newtonian)
    }

    /// Constant used in formulas written with `c_d`.
    pub fn c_d(&self) -> f64 {
        self.c_d_value
    }
}

/// Potential of a radial source: cell averages `v`, edge values and the
/// radial slope at every edge.
#[derive(Debug, Clone)]
pub struct PotentialField {
    grid: Arc<RadialGrid>,
    pub v: Vec<f64>,
    pub dv: Vec<f64>,
    edge_values: Vec<f64>,
    source: Vec<f64>,
    enclosed: Vec<f64>,
}

impl PotentialField {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn edge_values(&self) -> &[f64] {
        &self.edge_values
    }

    /// Pointwise potential at `0 <= r`, including the exterior tail.
    pub fn value_at(&self, r: f64) -> Result<f64> {
        let g = &self.grid;
        let d = g.dim();
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::OutOfRange {
                what: "r",
                value: r,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        let radius = g.radius();
        let mass = *self.enclosed.last().unwrap();
        if r >= radius {
            return Ok(mass * newtonian_constant(g.d()) / r.powf(d - 2.0));
        }
        let i = g.locate(r).unwrap();
        let (a, b) = (g.edges()[i], g.edges()[i + 1]);
        let f = self.source[i];
        let alpha = self.enclosed[i] - f * g.sphere_area() * a.powf(d) / d;
        let mut v = self.edge_values[i + 1] + f * (b * b - r * r) / (2.0 * d);
        if alpha != 0.0 {
            v += alpha / g.sphere_area() * (r.powf(2.0 - d) - b.powf(2.0 - d)) / (d - 2.0);
        }
        Ok(v)
    }
}

/// `∫_{|x|<=r} f dx` with partial-cell quadrature.
pub fn enclosed_mass(f: &RadialField, r: f64) -> Result<f64> {
    let g = f.grid();
    let i = g.locate(r).ok_or(Error::OutOfRange {
        what: "r",
        value: r,
        lo: 0.0,
        hi: g.radius(),
    })?;
    let base: f64 = f.values()[..i]
        .iter()
        .zip(&g.volumes()[..i])
        .map(|(v, vol)| v * vol)
        .sum();
    let partial = g.ball_volume(r) - g.ball_volume(g.edges()[i]);
    Ok(base + f.values()[i] * partial.max(0.0))
}

/// `φ'` at every edge for `-Δφ = f`.
pub fn potential_slopes(f: &RadialField) -> Vec<f64> {
    let enclosed = f.enclosed_masses();
    let areas = f.grid().face_areas();
    enclosed
        .iter()
        .zip(areas)
        .map(|(e, a)| if *a > 0.0 { -e / a } else { 0.0 })
        .collect()
}

pub fn solve_potential(f: &RadialField) -> PotentialField {
    let g = f.grid().clone();
    let n = g.len();
    let d = g.dim();
    let sigma = g.sphere_area();
    let enclosed = f.enclosed_masses();
    let edges = g.edges();
    let dv = potential_slopes(f);

    let mut edge_values = vec![0.0; n + 1];
    edge_values[n] = enclosed[n] * newtonian_constant(g.d()) / g.radius().powf(d - 2.0);
    let mut v = vec![0.0; n];
    for i in (0..n).rev() {
        let (a, b) = (edges[i], edges[i + 1]);
        let fi = f.values()[i];
        let alpha = enclosed[i] - fi * sigma * a.powf(d) / d;
        let vb = edge_values[i + 1];
        let mut va = vb + fi * (b * b - a * a) / (2.0 * d);
        // constant part of v(s) on the cell, then the s-dependent corrections
        let mut avg = vb + fi * b * b / (2.0 * d) - fi * g.moment_weights()[i] / (2.0 * d * g.volumes()[i]);
        if alpha != 0.0 {
            va += alpha / sigma * (a.powf(2.0 - d) - b.powf(2.0 - d)) / (d - 2.0);
            avg += -alpha / sigma * b.powf(2.0 - d) / (d - 2.0)
                + alpha * (b * b - a * a) / (2.0 * (d - 2.0) * g.volumes()[i]);
        }
        edge_values[i] = va;
        v[i] = avg;
    }
    PotentialField {
        grid: g,
        v,
        dv,
        edge_values,
        source: f.values().to_vec(),
        enclosed,
    }
}

/// `H[f,g] = ∬ f(x) g(y) / |x-y|^{d-2} dx dy`, evaluated exactly for the
/// piecewise-constant fields as `(d-2) σ ∫ E_f E_g / (σ r^{d-1}) dr` plus
/// the exterior monopole contribution.
pub fn interaction_energy(f: &RadialField, g: &RadialField) -> Result<f64> {
    if !f.grid().same_as(g.grid()) {
        return Err(Error::GridMismatch);
    }
    let grid = f.grid();
    let d = grid.dim();
    let sigma = grid.sphere_area();
    let edges = grid.edges();
    let (fv, gv) = (f.values(), g.values());
    let mut ef = 0.0;
    let mut eg = 0.0;
    let mut total = 0.0;
    for i in 0..grid.len() {
        let (a, b) = (edges[i], edges[i + 1]);
        let ad = a.powf(d);
        let bf = fv[i] * sigma / d;
        let bg = gv[i] * sigma / d;
        let af = ef - bf * ad;
        let ag = eg - bg * ad;
        let mut cell = (af * bg + ag * bf) * (b * b - a * a) / 2.0
            + bf * bg * (b.powf(d + 2.0) - a.powf(d + 2.0)) / (d + 2.0);
        if a > 0.0 {
            cell += af * ag * (a.powf(2.0 - d) - b.powf(2.0 - d)) / (d - 2.0);
        }
        total += cell;
        ef += fv[i] * grid.volumes()[i];
        eg += gv[i] * grid.volumes()[i];
    }
    Ok(total * (d - 2.0) + ef * eg / grid.radius().powf(d - 2.0))
}
