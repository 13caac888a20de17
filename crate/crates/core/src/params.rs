//! Problem parameters and the critical exponents derived from them.
//!
//! Everything downstream consults [`ProblemParams`] and [`CriticalExponents`]:
//! the scaling exponent `p_c = n·p − 2c`, the critical Sobolev index `s_c` and
//! the threshold exponent `sigma` that couples energy and mass.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance used to decide whether `p_c` sits exactly on one of the
/// two critical lines.
const CRITICAL_LINE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("dimension n = {0} is below 3")]
    DimensionTooSmall(u32),
    #[error("dispersion exponent b = {b} outside (2 - n, 2) = ({lo}, 2)")]
    DispersionOutOfRange { b: f64, lo: f64 },
    #[error("nonlinearity weight c = {c} below b - 2 = {min}")]
    WeightBelowRange { c: f64, min: f64 },
    #[error("nonlinearity power p = {0} must be positive")]
    NonPositivePower(f64),
    #[error("scaling exponent p_c = {p_c} outside (0, (2-b)(p+2)] = (0, {max}]")]
    ScalingExponentOutOfRange { p_c: f64, max: f64 },
    #[error("frequency omega = {0} must be positive")]
    NonPositiveFrequency(f64),
    #[error("parameter {0} is not finite")]
    NonFinite(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub n: u32,
    pub b: f64,
    pub c: f64,
    pub p: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Criticality {
    MassSubcritical,
    MassCritical,
    Intercritical,
    EnergyCritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalExponents {
    pub p_c: f64,
    pub s_c: f64,
    /// Threshold exponent; only defined when `p_c > 4 − 2b`.
    pub sigma: Option<f64>,
    /// `sigma` evaluated through `s_c`, kept for the two-route cross-check.
    pub sigma_via_sc: Option<f64>,
    pub criticality: Criticality,
}

impl ProblemParams {
    pub fn new(n: u32, b: f64, c: f64, p: f64, omega: f64) -> Self {
        Self { n, b, c, p, omega }
    }

    pub fn with_omega(&self, omega: f64) -> Self {
        Self { omega, ..*self }
    }

    pub fn dim(&self) -> f64 {
        f64::from(self.n)
    }

    /// `2 − b`, the order of the dispersion.
    pub fn order(&self) -> f64 {
        2.0 - self.b
    }

    pub fn p_c(&self) -> f64 {
        self.dim() * self.p - 2.0 * self.c
    }

    /// `(2−b)(p+2)`, the energy-critical value of `p_c`.
    pub fn energy_critical_pc(&self) -> f64 {
        self.order() * (self.p + 2.0)
    }

    /// `2(2−b)`, the mass-critical value of `p_c`.
    pub fn mass_critical_pc(&self) -> f64 {
        2.0 * self.order()
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        for (name, v) in [("b", self.b), ("c", self.c), ("p", self.p), ("omega", self.omega)] {
            if !v.is_finite() {
                return Err(ParamError::NonFinite(name));
            }
        }
        if self.n < 3 {
            return Err(ParamError::DimensionTooSmall(self.n));
        }
        let lo = 2.0 - self.dim();
        if !(self.b > lo && self.b < 2.0) {
            return Err(ParamError::DispersionOutOfRange { b: self.b, lo });
        }
        if self.c < self.b - 2.0 {
            return Err(ParamError::WeightBelowRange { c: self.c, min: self.b - 2.0 });
        }
        if self.p <= 0.0 {
            return Err(ParamError::NonPositivePower(self.p));
        }
        let (p_c, max) = (self.p_c(), self.energy_critical_pc());
        if !(p_c > 0.0 && p_c <= max * (1.0 + CRITICAL_LINE_TOL)) {
            return Err(ParamError::ScalingExponentOutOfRange { p_c, max });
        }
        if self.omega <= 0.0 {
            return Err(ParamError::NonPositiveFrequency(self.omega));
        }
        Ok(())
    }

    pub fn exponents(&self) -> Result<CriticalExponents, ParamError> {
        derive_exponents(self)
    }
}

fn on_line(x: f64, line: f64) -> bool {
    (x - line).abs() <= CRITICAL_LINE_TOL * line.abs().max(1.0)
}

pub fn derive_exponents(params: &ProblemParams) -> Result<CriticalExponents, ParamError> {
    params.validate()?;
    let n = params.dim();
    let order = params.order();
    let p_c = params.p_c();
    let s_c = n / 2.0 - (order + params.c) / params.p;

    let criticality = if on_line(p_c, params.mass_critical_pc()) {
        Criticality::MassCritical
    } else if on_line(p_c, params.energy_critical_pc()) {
        Criticality::EnergyCritical
    } else if p_c < params.mass_critical_pc() {
        Criticality::MassSubcritical
    } else {
        Criticality::Intercritical
    };

    let (sigma, sigma_via_sc) = if p_c > params.mass_critical_pc() && criticality != Criticality::MassCritical {
        let via_pc = (params.energy_critical_pc() - p_c) / (p_c - 4.0 + 2.0 * params.b);
        let via_sc = (order - 2.0 * s_c) / (2.0 * s_c);
        (Some(via_pc), Some(via_sc))
    } else {
        (None, None)
    };

    Ok(CriticalExponents { p_c, s_c, sigma, sigma_via_sc, criticality })
}

/// Hypothesis of the sharp radial Gagliardo–Nirenberg inequality.
pub fn validate_gn_window(params: &ProblemParams) -> bool {
    let p_c = params.p_c();
    let upper = params.energy_critical_pc();
    let (b, c) = (params.b, params.c);
    if b - 2.0 <= c && c <= 0.0 {
        -2.0 * c < p_c && p_c < upper
    } else if c > 0.0 {
        params.order() * params.p / 2.0 < p_c && p_c < upper
    } else {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn cubic_three_dimensional() {
        let e = derive_exponents(&ProblemParams::new(3, 0.0, 0.0, 2.0, 1.0)).unwrap();
        assert_eq!(e.p_c, 6.0);
        assert_eq!(e.s_c, 0.5);
        assert_eq!(e.sigma, Some(1.0));
        assert_eq!(e.criticality, Criticality::Intercritical);
    }

    #[test]
    fn mass_critical_has_no_sigma() {
        let e = derive_exponents(&ProblemParams::new(3, 0.0, 0.0, 4.0 / 3.0, 1.0)).unwrap();
        assert!((e.p_c - 4.0).abs() < 1e-14);
        assert!(e.s_c.abs() < 1e-14);
        assert_eq!(e.sigma, None);
        assert_eq!(e.criticality, Criticality::MassCritical);
    }

    #[test]
    fn negative_b_and_c() {
        // p_c = 6 + 1 = 7, s_c = 3/2 - 2/2 = 1/2, sigma = (10 - 7)/(7 - 5) = 3/2
        let e = derive_exponents(&ProblemParams::new(3, -0.5, -0.5, 2.0, 1.0)).unwrap();
        assert_eq!(e.p_c, 7.0);
        assert!(rel(e.s_c, 0.5) < 1e-15);
        assert!(rel(e.sigma.unwrap(), 1.5) < 1e-15);
        assert!(rel(e.sigma_via_sc.unwrap(), 1.5) < 1e-15);
        assert_eq!(e.criticality, Criticality::Intercritical);
    }

    #[test]
    fn energy_critical_and_subcritical_labels() {
        let e = derive_exponents(&ProblemParams::new(3, 0.0, 0.0, 4.0, 1.0)).unwrap();
        assert_eq!(e.criticality, Criticality::EnergyCritical);
        let e = derive_exponents(&ProblemParams::new(3, 0.0, 0.0, 1.0, 1.0)).unwrap();
        assert_eq!(e.criticality, Criticality::MassSubcritical);
        assert_eq!(e.sigma, None);
    }

    #[test]
    fn rejects_violations() {
        use ParamError::*;
        let bad = |p: ProblemParams| derive_exponents(&p).unwrap_err();
        assert!(matches!(bad(ProblemParams::new(2, 0.0, 0.0, 2.0, 1.0)), DimensionTooSmall(2)));
        assert!(matches!(bad(ProblemParams::new(3, -1.0, 0.0, 2.0, 1.0)), DispersionOutOfRange { .. }));
        assert!(matches!(bad(ProblemParams::new(3, 2.0, 0.0, 2.0, 1.0)), DispersionOutOfRange { .. }));
        assert!(matches!(bad(ProblemParams::new(3, 0.0, -2.5, 2.0, 1.0)), WeightBelowRange { .. }));
        assert!(matches!(bad(ProblemParams::new(3, 0.0, 0.0, 0.0, 1.0)), NonPositivePower(_)));
        assert!(matches!(bad(ProblemParams::new(3, 0.0, 0.0, 5.0, 1.0)), ScalingExponentOutOfRange { .. }));
        assert!(matches!(bad(ProblemParams::new(3, 0.0, 2.0, 1.0, 1.0)), ScalingExponentOutOfRange { .. }));
        assert!(matches!(bad(ProblemParams::new(3, 0.0, 0.0, 2.0, 0.0)), NonPositiveFrequency(_)));
        assert!(matches!(bad(ProblemParams::new(3, f64::NAN, 0.0, 2.0, 1.0)), NonFinite("b")));
    }

    #[test]
    fn gn_window() {
        assert!(validate_gn_window(&ProblemParams::new(3, 0.0, 0.0, 2.0, 1.0)));
        assert!(!validate_gn_window(&ProblemParams::new(3, 0.0, 0.0, 4.0, 1.0)));
        // (2-b)p/2 = 2.5 < p_c = 4 < 10
        assert!(validate_gn_window(&ProblemParams::new(3, -0.5, 1.0, 2.0, 1.0)));
        // c > 0 with p_c below (2-b)p/2
        assert!(!validate_gn_window(&ProblemParams::new(3, 0.0, 1.2, 1.0, 1.0)));
    }

    fn admissible() -> impl Strategy<Value = ProblemParams> {
        (3u32..7, 0.0f64..1.0, 0.0f64..1.0, 0.05f64..6.0).prop_filter_map("admissible", |(n, tb, tc, p)| {
            let lo = 2.0 - f64::from(n);
            let b = lo + (2.0 - lo) * (0.01 + 0.98 * tb);
            let c = (b - 2.0) + 4.0 * tc;
            let params = ProblemParams::new(n, b, c, p, 1.0);
            params.validate().ok().map(|_| params)
        })
    }

    proptest! {
        #[test]
        fn sigma_routes_agree(params in admissible()) {
            let e = derive_exponents(&params).unwrap();
            if let (Some(a), Some(b)) = (e.sigma, e.sigma_via_sc) {
                prop_assert!(rel(a, b) < 1e-12 || (a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }

        #[test]
        fn labels_partition_range(params in admissible()) {
            let e = derive_exponents(&params).unwrap();
            let p_c = e.p_c;
            let lo = params.mass_critical_pc();
            let hi = params.energy_critical_pc();
            let expected = match e.criticality {
                Criticality::MassCritical => on_line(p_c, lo),
                Criticality::EnergyCritical => on_line(p_c, hi),
                Criticality::MassSubcritical => p_c < lo,
                Criticality::Intercritical => p_c > lo && p_c < hi,
            };
            prop_assert!(expected);
        }

        #[test]
        fn derivation_is_deterministic(params in admissible()) {
            let a = derive_exponents(&params).unwrap();
            let b = derive_exponents(&params).unwrap();
            prop_assert_eq!(a.p_c.to_bits(), b.p_c.to_bits());
            prop_assert_eq!(a.s_c.to_bits(), b.s_c.to_bits());
            prop_assert_eq!(a.sigma.map(f64::to_bits), b.sigma.map(f64::to_bits));
        }
    }
}
