//! Truncated radial discretization of R^d and nonnegative cell-averaged
//! density fields.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regimes::{scaling_map, validate_dimension, ModelParams};

/// Surface area of the unit sphere `S^{d-1}`, `2 pi^{d/2} / Gamma(d/2)`.
pub fn unit_sphere_area(d: u32) -> f64 {
    use std::f64::consts::PI;
    // Gamma(d/2) by the recurrence from Gamma(1) or Gamma(1/2).
    let (mut gamma, mut x) = if d % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    let target = d as f64 / 2.0;
    while x < target - 1e-12 {
        gamma *= x;
        x += 1.0;
    }
    2.0 * PI.powf(target) / gamma
}

/// Cell-width law of a radial grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Grading {
    #[default]
    Uniform,
    /// Widths grow by `ratio` from the origin outward.
    Geometric { ratio: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    d: u32,
    sphere: f64,
    edges: Vec<f64>,
    centers: Vec<f64>,
    volumes: Vec<f64>,
    moment_weights: Vec<f64>,
    face_areas: Vec<f64>,
}

impl RadialGrid {
    pub fn uniform(d: u32, n: usize, radius: f64) -> Result<Self> {
        if n == 0 || !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "need n >= 1 and R > 0, got n={n}, R={radius}"
            )));
        }
        let h = radius / n as f64;
        let mut edges: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
        edges[n] = radius;
        Self::from_edges(d, edges)
    }

    pub fn geometric(d: u32, n: usize, radius: f64, ratio: f64) -> Result<Self> {
        if !(ratio.is_finite() && ratio >= 1.0) {
            return Err(Error::InvalidGrid(format!("grading ratio {ratio} must be >= 1")));
        }
        if ratio == 1.0 {
            return Self::uniform(d, n, radius);
        }
        if n == 0 || !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "need n >= 1 and R > 0, got n={n}, R={radius}"
            )));
        }
        let h0 = radius * (ratio - 1.0) / (ratio.powi(n as i32) - 1.0);
        let mut edges = Vec::with_capacity(n + 1);
        edges.push(0.0);
        let mut width = h0;
        let mut r = 0.0;
        for _ in 0..n {
            r += width;
            edges.push(r);
            width *= ratio;
        }
        edges[n] = radius;
        Self::from_edges(d, edges)
    }

    pub fn with_grading(d: u32, n: usize, radius: f64, grading: Grading) -> Result<Self> {
        match grading {
            Grading::Uniform => Self::uniform(d, n, radius),
            Grading::Geometric { ratio } => Self::geometric(d, n, radius, ratio),
        }
    }

    pub fn from_edges(d: u32, edges: Vec<f64>) -> Result<Self> {
        validate_dimension(d as i64)?;
        if edges.len() < 2 {
            return Err(Error::InvalidGrid("need at least one cell".into()));
        }
        if edges[0] != 0.0 {
            return Err(Error::InvalidGrid(format!("first edge must be 0, got {}", edges[0])));
        }
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidGrid("non-finite edge".into()));
        }
        if let Some(i) = edges.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "edges not strictly increasing at index {}",
                i + 1
            )));
        }
        let sphere = unit_sphere_area(d);
        let df = d as f64;
        let pow = |r: f64, k: f64| r.powf(k);
        let centers = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let volumes: Vec<f64> = edges
            .windows(2)
            .map(|w| sphere * (pow(w[1], df) - pow(w[0], df)) / df)
            .collect();
        if volumes.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidGrid("cell volume underflow".into()));
        }
        let moment_weights = edges
            .windows(2)
            .map(|w| sphere * (pow(w[1], df + 2.0) - pow(w[0], df + 2.0)) / (df + 2.0))
            .collect();
        let face_areas = edges.iter().map(|&r| sphere * pow(r, df - 1.0)).collect();
        Ok(Self {
            d,
            sphere,
            edges,
            centers,
            volumes,
            moment_weights,
            face_areas,
        })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn dim(&self) -> f64 {
        self.d as f64
    }

    pub fn len(&self) -> usize {
        self.volumes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.volumes.is_empty()
    }

    pub fn radius(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    pub fn sphere_area(&self) -> f64 {
        self.sphere
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    /// `sigma * (r_{i+1}^{d+2} - r_i^{d+2}) / (d+2)`, the shell integral of `|x|^2`.
    pub fn moment_weights(&self) -> &[f64] {
        &self.moment_weights
    }

    /// `sigma * r^{d-1}` at every edge.
    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    pub fn width(&self, i: usize) -> f64 {
        self.edges[i + 1] - self.edges[i]
    }

    pub fn min_width(&self) -> f64 {
        (0..self.len()).map(|i| self.width(i)).fold(f64::INFINITY, f64::min)
    }

    /// Volume of the ball of radius `r`.
    pub fn ball_volume(&self, r: f64) -> f64 {
        self.sphere * r.powf(self.dim()) / self.dim()
    }

    /// Index of the cell containing `r` (the last cell for `r = R`).
    pub fn locate(&self, r: f64) -> Option<usize> {
        if !(r >= 0.0 && r <= self.radius()) {
            return None;
        }
        let idx = self.edges.partition_point(|&e| e <= r);
        Some(idx.saturating_sub(1).min(self.len() - 1))
    }

    /// Same grid with every edge multiplied by `factor`.
    pub fn dilated(&self, factor: f64) -> Result<Self> {
        Self::from_edges(self.d, self.edges.iter().map(|e| e * factor).collect())
    }

    pub fn same_as(&self, other: &RadialGrid) -> bool {
        self.d == other.d && self.edges == other.edges
    }
}

/// Nonnegative cell averages on a shared grid.
#[derive(Debug, Clone)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl PartialEq for RadialField {
    fn eq(&self, other: &Self) -> bool {
        self.grid.same_as(&other.grid) && self.values == other.values
    }
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "{} values for {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidField(format!(
                "cell {i} holds {} (must be finite and >= 0)",
                values[i]
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    /// Cell averages of `profile(r)` by Gauss quadrature in the radial
    /// measure; `breakpoints` are radii where the profile has a kink.
    pub fn from_profile<F: Fn(f64) -> f64>(
        grid: Arc<RadialGrid>,
        profile: F,
        breakpoints: &[f64],
    ) -> Result<Self> {
        let sphere = grid.sphere_area();
        let dm1 = grid.dim() - 1.0;
        let weighted = |r: f64| profile(r) * sphere * r.powf(dm1);
        let values = (0..grid.len())
            .map(|i| {
                let (a, b) = (grid.edges()[i], grid.edges()[i + 1]);
                let integral = crate::quadrature::gauss5_split(&weighted, a, b, breakpoints, 1);
                (integral / grid.volumes()[i]).max(0.0)
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn mass(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.volumes())
            .map(|(v, vol)| v * vol)
            .sum()
    }

    /// `int f^p dx` for any `p > 0`.
    pub fn power_integral(&self, p: f64) -> f64 {
        self.values
            .iter()
            .zip(self.grid.volumes())
            .filter(|(v, _)| **v > 0.0)
            .map(|(v, vol)| v.powf(p) * vol)
            .sum()
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::InvalidExponent(p));
        }
        if p.is_infinite() {
            return Ok(self.linf());
        }
        Ok(self.power_integral(p).powf(1.0 / p))
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn second_moment(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.moment_weights())
            .map(|(v, w)| v * w)
            .sum()
    }

    /// Mass enclosed by each edge, `E[0] = 0`, `E[N] = mass`.
    pub fn enclosed_masses(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.values.len() + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for (v, vol) in self.values.iter().zip(self.grid.volumes()) {
            acc += v * vol;
            out.push(acc);
        }
        out
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|v| v * c).collect())
    }

    pub fn l1_distance(&self, other: &RadialField) -> Result<f64> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(self.grid.volumes())
            .map(|((a, b), vol)| (a - b).abs() * vol)
            .sum())
    }

    /// Conservative transfer of the piecewise-constant density onto `target`.
    /// Mass beyond the target radius is dropped.
    pub fn remap(&self, target: Arc<RadialGrid>) -> Result<Self> {
        if target.d() != self.grid.d() {
            return Err(Error::GridMismatch);
        }
        if target.same_as(&self.grid) {
            return Self::new(target, self.values.clone());
        }
        let df = target.dim();
        let sphere = target.sphere_area();
        let src = self.grid.edges();
        let mut values = vec![0.0; target.len()];
        let mut i = 0;
        for (j, out) in values.iter_mut().enumerate() {
            let (lo, hi) = (target.edges()[j], target.edges()[j + 1]);
            while i < self.values.len() && src[i + 1] <= lo {
                i += 1;
            }
            let mut k = i;
            let mut mass = 0.0;
            while k < self.values.len() && src[k] < hi {
                let a = src[k].max(lo);
                let b = src[k + 1].min(hi);
                if b > a {
                    mass += self.values[k] * sphere * (b.powf(df) - a.powf(df)) / df;
                }
                k += 1;
            }
            *out = mass / target.volumes()[j];
        }
        Self::new(target, values)
    }

    /// Two-column CSV: cell-center radius and value, with a `# d= R= N=` header.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(32 * self.values.len());
        let _ = writeln!(
            s,
            "# d={} R={:e} N={}",
            self.grid.d(),
            self.grid.radius(),
            self.values.len()
        );
        for (c, v) in self.grid.centers().iter().zip(&self.values) {
            let _ = writeln!(s, "{c:e},{v:e}");
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        parse_field_csv(&text)
    }
}

fn parse_header(line: &str) -> Result<(u32, f64, usize)> {
    let err = |msg: String| Error::Parse { line: 1, msg };
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| err("header must start with '#'".into()))?;
    let (mut d, mut r, mut n) = (None, None, None);
    for token in body.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| err(format!("malformed header token '{token}'")))?;
        match key {
            "d" => d = value.parse::<i64>().ok(),
            "R" => r = value.parse::<f64>().ok(),
            "N" => n = value.parse::<usize>().ok(),
            _ => return Err(err(format!("unknown header key '{key}'"))),
        }
    }
    let d = d.ok_or_else(|| err("missing or invalid d".into()))?;
    let d = validate_dimension(d).map_err(|e| err(e.to_string()))?;
    let r = r
        .filter(|r| r.is_finite() && *r > 0.0)
        .ok_or_else(|| err("missing or invalid R".into()))?;
    let n = n
        .filter(|n| *n >= 1)
        .ok_or_else(|| err("missing or invalid N".into()))?;
    Ok((d, r, n))
}

/// Parse the two-column field format. Cell edges are reconstructed from the
/// centers (midpoints) and checked against the declared radius.
pub fn parse_field_csv(text: &str) -> Result<RadialField> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty input".into(),
    })?;
    let (d, radius, n) = parse_header(header.trim())?;
    let mut centers = Vec::with_capacity(n.min(1 << 20));
    let mut values = Vec::with_capacity(n.min(1 << 20));
    for (idx, line) in lines {
        let lineno = idx + 1;
        let perr = |msg: String| Error::Parse { line: lineno, msg };
        if centers.len() == n {
            return Err(perr(format!("more than N={n} data rows")));
        }
        let mut cols = line.split(',').map(str::trim);
        let c: f64 = cols
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| perr("bad radius column".into()))?;
        let v: f64 = cols
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| perr("bad value column".into()))?;
        if cols.next().is_some() {
            return Err(perr("expected exactly two columns".into()));
        }
        if !(c.is_finite() && c > 0.0 && c < radius) {
            return Err(perr(format!("radius {c} outside (0, R)")));
        }
        if !(v.is_finite() && v >= 0.0) {
            return Err(perr(format!("value {v} must be finite and >= 0")));
        }
        if let Some(&prev) = centers.last() {
            if c <= prev {
                return Err(perr("radii must be strictly increasing".into()));
            }
        }
        centers.push(c);
        values.push(v);
    }
    if centers.len() != n {
        return Err(Error::Parse {
            line: text.lines().count(),
            msg: format!("expected N={n} rows, found {}", centers.len()),
        });
    }
    let mut edges = Vec::with_capacity(n + 1);
    edges.push(0.0);
    for c in &centers {
        let last = *edges.last().unwrap();
        edges.push(2.0 * c - last);
    }
    let tol = 1e-6 * radius;
    let last = edges[n];
    if (last - radius).abs() > tol {
        return Err(Error::Parse {
            line: 1,
            msg: format!("centers imply outer radius {last}, header says {radius}"),
        });
    }
    edges[n] = radius;
    let grid = RadialGrid::from_edges(d, edges).map_err(|e| Error::Parse {
        line: 1,
        msg: e.to_string(),
    })?;
    RadialField::new(Arc::new(grid), values)
}

/// The pair `(u, w)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub u: RadialField,
    pub w: RadialField,
    pub t: f64,
}

impl SystemState {
    pub fn new(u: RadialField, w: RadialField, t: f64) -> Result<Self> {
        if !(Arc::ptr_eq(u.grid(), w.grid()) || u.grid().same_as(w.grid())) {
            return Err(Error::GridMismatch);
        }
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidField(format!("time {t} must be finite and >= 0")));
        }
        Ok(Self { u, w, t })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.u.grid()
    }
}

/// Discrete realization of the scaling family on a dilated grid.
///
/// Edges are divided by `lambda^beta` and values multiplied by the amplitude
/// exponents, so masses change by exactly the factors of [`scaling_map`].
/// State time maps with the `u` clock, `t -> t / lambda^m1`.
pub fn rescale(state: &SystemState, lambda: f64, params: &ModelParams) -> Result<SystemState> {
    let s = scaling_map(params, lambda)?;
    if lambda == 1.0 {
        return Ok(state.clone());
    }
    let grid = Arc::new(state.grid().dilated(lambda.powf(-s.beta))?);
    let au = lambda.powf(s.u_amplitude);
    let aw = lambda.powf(s.w_amplitude);
    let u = RadialField::new(grid.clone(), state.u.values().iter().map(|v| v * au).collect())?;
    let w = RadialField::new(grid, state.w.values().iter().map(|v| v * aw).collect())?;
    SystemState::new(u, w, state.t / lambda.powf(s.u_time))
}
