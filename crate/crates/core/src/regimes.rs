//! Model parameters, critical-exponent algebra and regime classification.
//!
//! The exponent plane `(m1, m2)` is split by the two curves
//! `L1: m1*m2 + 2*m1/d = m1 + m2` and `L2: m1*m2 + 2*m2/d = m1 + m2`,
//! which meet at `I = (m_c, m_c)` with `m_c = 2 - 2/d`. Above either curve
//! the pair is subcritical, below both it is supercritical.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance on the slacks when classifying a parameter pair.
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-12;

/// Dimension and diffusion exponents of the two-species system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    d: u32,
    m1: f64,
    m2: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    d: i64,
    m1: f64,
    m2: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        ModelParams::new(raw.d, raw.m1, raw.m2)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams {
            d: p.d as i64,
            m1: p.m1,
            m2: p.m2,
        }
    }
}

impl ModelParams {
    pub fn new(d: i64, m1: f64, m2: f64) -> Result<Self> {
        let d = validate_dimension(d)?;
        for (name, value) in [("m1", m1), ("m2", m2)] {
            if !(value.is_finite() && value > 1.0) {
                return Err(Error::InvalidDiffusionExponent { name, value });
            }
        }
        Ok(Self { d, m1, m2 })
    }

    /// Both exponents at the intersection point `I`.
    pub fn critical_point(d: i64) -> Result<Self> {
        let mc = critical_exponent(d)?;
        Self::new(d, mc, mc)
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn dim(&self) -> f64 {
        self.d as f64
    }

    pub fn m1(&self) -> f64 {
        self.m1
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    pub fn with_exponents(&self, m1: f64, m2: f64) -> Result<Self> {
        Self::new(self.d as i64, m1, m2)
    }

    pub fn swapped(&self) -> Self {
        Self {
            d: self.d,
            m1: self.m2,
            m2: self.m1,
        }
    }

    pub fn critical_exponent(&self) -> f64 {
        2.0 - 2.0 / self.dim()
    }

    /// `m1 + m2 - m1*m2`, the quantity driving the scaling space exponent
    /// and the blow-up construction exponents.
    pub fn scaling_defect(&self) -> f64 {
        self.m1 + self.m2 - self.m1 * self.m2
    }

    /// Space exponent of the scaling family.
    pub fn beta(&self) -> f64 {
        0.5 * self.scaling_defect()
    }

    /// Signed distances to the two critical curves.
    pub fn slacks(&self) -> (f64, f64) {
        let d = self.dim();
        let prod = self.m1 * self.m2;
        let sum = self.m1 + self.m2;
        (prod + 2.0 * self.m1 / d - sum, prod + 2.0 * self.m2 / d - sum)
    }
}

pub(crate) fn validate_dimension(d: i64) -> Result<u32> {
    if d < 3 || d > 64 {
        return Err(Error::InvalidDimension(d));
    }
    Ok(d as u32)
}

/// `m_c = 2 - 2/d`.
pub fn critical_exponent(d: i64) -> Result<f64> {
    let d = validate_dimension(d)?;
    Ok(2.0 - 2.0 / d as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeTag {
    Subcritical,
    Supercritical,
    CriticalL1,
    CriticalL2,
    CriticalI,
}

impl RegimeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeTag::Subcritical => "Subcritical",
            RegimeTag::Supercritical => "Supercritical",
            RegimeTag::CriticalL1 => "CriticalL1",
            RegimeTag::CriticalL2 => "CriticalL2",
            RegimeTag::CriticalI => "CriticalI",
        }
    }

    pub fn is_critical(&self) -> bool {
        matches!(
            self,
            RegimeTag::CriticalL1 | RegimeTag::CriticalL2 | RegimeTag::CriticalI
        )
    }

    /// Tag after exchanging the roles of the two species.
    pub fn mirrored(&self) -> Self {
        match self {
            RegimeTag::CriticalL1 => RegimeTag::CriticalL2,
            RegimeTag::CriticalL2 => RegimeTag::CriticalL1,
            other => *other,
        }
    }
}

impl std::fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub tag: RegimeTag,
    pub slack1: f64,
    pub slack2: f64,
}

pub fn classify(params: &ModelParams, tol: f64) -> Regime {
    let (s1, s2) = params.slacks();
    let tag = if s1.max(s2) > tol {
        RegimeTag::Subcritical
    } else {
        match (s1.abs() <= tol, s2.abs() <= tol) {
            (true, true) => RegimeTag::CriticalI,
            (true, false) => RegimeTag::CriticalL1,
            (false, true) => RegimeTag::CriticalL2,
            (false, false) => RegimeTag::Supercritical,
        }
    };
    Regime {
        tag,
        slack1: s1,
        slack2: s2,
    }
}

/// The `m2` that puts `(m1, m2)` exactly on `L1`.
pub fn l1_partner(m1: f64, d: i64) -> Result<f64> {
    let mc = critical_exponent(d)?;
    let df = d as f64;
    let hi = df / 2.0;
    if !(m1 >= mc - 1e-12 && m1 < hi) {
        return Err(Error::OutOfRange {
            what: "m1",
            value: m1,
            lo: mc,
            hi,
        });
    }
    Ok(m1 * (1.0 - 2.0 / df) / (m1 - 1.0))
}

/// The `m1` that puts `(m1, m2)` exactly on `L2`.
pub fn l2_partner(m2: f64, d: i64) -> Result<f64> {
    l1_partner(m2, d)
}

/// Exponents of the family
/// `u_l(x,t) = l^m2 u(l^beta x, l^m1 t)`, `w_l(x,t) = l^m1 w(l^beta x, l^m2 t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingExponents {
    pub lambda: f64,
    pub beta: f64,
    pub u_amplitude: f64,
    pub u_time: f64,
    pub w_amplitude: f64,
    pub w_time: f64,
    /// Mass of `u_l` is `lambda^mass_u_exponent` times the mass of `u`.
    pub mass_u_exponent: f64,
    pub mass_w_exponent: f64,
    pub mass_factor_u: f64,
    pub mass_factor_w: f64,
    /// The two time exponents coincide only when `m1 == m2`.
    pub common_time: bool,
}

pub fn scaling_map(params: &ModelParams, lambda: f64) -> Result<ScalingExponents> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidScale(lambda));
    }
    let beta = params.beta();
    let bd = beta * params.dim();
    let mass_u_exponent = params.m2 - bd;
    let mass_w_exponent = params.m1 - bd;
    Ok(ScalingExponents {
        lambda,
        beta,
        u_amplitude: params.m2,
        u_time: params.m1,
        w_amplitude: params.m1,
        w_time: params.m2,
        mass_u_exponent,
        mass_w_exponent,
        mass_factor_u: lambda.powf(mass_u_exponent),
        mass_factor_w: lambda.powf(mass_w_exponent),
        common_time: params.m1 == params.m2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(d: i64, m1: f64, m2: f64) -> ModelParams {
        ModelParams::new(d, m1, m2).unwrap()
    }

    #[test]
    fn critical_exponent_values() {
        assert!((critical_exponent(3).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!((critical_exponent(4).unwrap() - 1.5).abs() < 1e-15);
        assert!((critical_exponent(6).unwrap() - 5.0 / 3.0).abs() < 1e-15);
        assert!(matches!(critical_exponent(2), Err(Error::InvalidDimension(2))));
    }

    #[test]
    fn params_reject_bad_input() {
        assert!(ModelParams::new(3, 1.0, 1.5).is_err());
        assert!(ModelParams::new(3, 1.5, f64::NAN).is_err());
        assert!(ModelParams::new(2, 1.5, 1.5).is_err());
    }

    #[test]
    fn classify_examples() {
        let mc = 4.0 / 3.0;
        assert_eq!(classify(&p(3, mc, mc), DEFAULT_CLASSIFY_TOL).tag, RegimeTag::CriticalI);

        let r = classify(&p(3, 1.4, 7.0 / 6.0), 1e-12);
        assert_eq!(r.tag, RegimeTag::CriticalL1);
        assert!(r.slack1.abs() < 1e-12 && r.slack2 < 0.0);

        let r = classify(&p(3, 1.1, 1.1), 1e-12);
        assert_eq!(r.tag, RegimeTag::Supercritical);
        // 1.21 + 2.2/3 = 1.94333.. against 2.2
        assert!((r.slack1 - (1.21 + 2.2 / 3.0 - 2.2)).abs() < 1e-15);

        let r = classify(&p(3, 1.5, 1.5), 1e-12);
        assert_eq!(r.tag, RegimeTag::Subcritical);
        assert!((r.slack1 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn l1_partner_examples() {
        assert!((l1_partner(1.4, 3).unwrap() - 7.0 / 6.0).abs() < 1e-14);
        assert!((l1_partner(4.0 / 3.0, 3).unwrap() - 4.0 / 3.0).abs() < 1e-14);
        assert!((l1_partner(1.45, 3).unwrap() - 29.0 / 27.0).abs() < 1e-14);
        assert!(l1_partner(1.5, 3).is_err());
        assert!(l1_partner(1.2, 3).is_err());
    }

    #[test]
    fn scaling_mass_factors() {
        let mc = 4.0 / 3.0;
        let s = scaling_map(&p(3, mc, mc), 2.0).unwrap();
        assert!((s.mass_factor_u - 1.0).abs() < 1e-14);
        assert!((s.mass_factor_w - 1.0).abs() < 1e-14);

        let s = scaling_map(&p(3, 1.5, 1.2), 1.0).unwrap();
        assert_eq!(s.mass_factor_u, 1.0);
        assert_eq!(s.mass_factor_w, 1.0);

        let m2 = l1_partner(1.4, 3).unwrap();
        for lambda in [0.1, 2.0, 37.0] {
            let s = scaling_map(&p(3, 1.4, m2), lambda).unwrap();
            assert!(s.mass_w_exponent.abs() < 1e-14);
            assert!((s.mass_factor_w - 1.0).abs() < 1e-12);
        }
        assert!(matches!(
            scaling_map(&p(3, 1.5, 1.5), 0.0),
            Err(Error::InvalidScale(_))
        ));
    }

    #[test]
    fn params_json_roundtrip_and_validation() {
        let params = p(4, 1.6, 1.25);
        let s = serde_json::to_string(&params).unwrap();
        let back: ModelParams = serde_json::from_str(&s).unwrap();
        assert_eq!(back, params);
        assert!(serde_json::from_str::<ModelParams>(r#"{"d":2,"m1":1.5,"m2":1.5}"#).is_err());
        assert!(serde_json::from_str::<ModelParams>(r#"{"d":3,"m1":0.5,"m2":1.5}"#).is_err());
    }
}
