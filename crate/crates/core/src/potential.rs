//! Closed family of radial potentials with exact radial derivatives, and
//! machine-checkable versions of the four structural assumptions on `V`.
//!
//! The assumptions, in terms of radial quantities `rV'` and `r²V''`:
//!
//! * (I)   `V ≥ 0` and `rV' + (2−b)V ≥ 0`
//! * (II)  `rV' ∈ L^{n/2}(|x|^{−nb/2} dx)`
//! * (III) `rV' ≤ 0`
//! * (IV)  `r²V'' ≤ −(3−b) rV'`

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::sphere_area;
use crate::params::ProblemParams;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PotentialError {
    #[error("potential amplitude a = {0} must be non-negative")]
    NegativeAmplitude(f64),
    #[error("inverse-power exponent s = {0} must be positive")]
    NonPositiveExponent(f64),
    #[error("radius r = {0} must be positive")]
    NonPositiveRadius(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PotentialSpec {
    Zero,
    /// `V(r) = a r^{−s}`
    InversePower { a: f64, s: f64 },
    /// `V(r) = a (1 + r²)^{−s/2}`
    SmoothBump { a: f64, s: f64 },
    /// `V(r) = a (1 + e^{−r²})`
    ConstPlusGaussian { a: f64 },
}

/// `(V, rV', r²V'')` at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialSample {
    pub v: f64,
    pub r_dv: f64,
    pub r2_d2v: f64,
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<(), PotentialError> {
        match *self {
            PotentialSpec::Zero => Ok(()),
            PotentialSpec::InversePower { a, s } => {
                if !(a >= 0.0) {
                    return Err(PotentialError::NegativeAmplitude(a));
                }
                if !(s > 0.0) {
                    return Err(PotentialError::NonPositiveExponent(s));
                }
                Ok(())
            }
            PotentialSpec::SmoothBump { a, .. } | PotentialSpec::ConstPlusGaussian { a } => {
                if !(a >= 0.0) {
                    return Err(PotentialError::NegativeAmplitude(a));
                }
                Ok(())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            PotentialSpec::Zero => true,
            PotentialSpec::InversePower { a, .. }
            | PotentialSpec::SmoothBump { a, .. }
            | PotentialSpec::ConstPlusGaussian { a } => a == 0.0,
        }
    }

    /// Exact closed-form `(V, rV', r²V'')`.
    pub fn eval(&self, r: f64) -> Result<RadialSample, PotentialError> {
        if !(r > 0.0) {
            return Err(PotentialError::NonPositiveRadius(r));
        }
        Ok(self.eval_unchecked(r))
    }

    pub(crate) fn eval_unchecked(&self, r: f64) -> RadialSample {
        match *self {
            PotentialSpec::Zero => RadialSample { v: 0.0, r_dv: 0.0, r2_d2v: 0.0 },
            PotentialSpec::InversePower { a, s } => {
                let v = a * r.powf(-s);
                RadialSample { v, r_dv: -s * v, r2_d2v: s * (s + 1.0) * v }
            }
            PotentialSpec::SmoothBump { a, s } => {
                let r2 = r * r;
                let base = 1.0 + r2;
                let v = a * base.powf(-s / 2.0);
                let r_dv = -s * r2 * v / base;
                let r2_d2v = -s * r2 * v * (1.0 - (s + 1.0) * r2) / (base * base);
                RadialSample { v, r_dv, r2_d2v }
            }
            PotentialSpec::ConstPlusGaussian { a } => {
                let r2 = r * r;
                let g = (-r2).exp();
                RadialSample { v: a * (1.0 + g), r_dv: -2.0 * a * r2 * g, r2_d2v: a * g * (4.0 * r2 * r2 - 2.0 * r2) }
            }
        }
    }

    /// Power-law exponents `e` with `|rV'| ~ r^e` as `r → 0` and `r → ∞`.
    /// `None` means `rV'` vanishes identically or faster than any power.
    fn rdv_exponents(&self) -> (Option<f64>, Option<f64>) {
        if self.is_zero() {
            return (None, None);
        }
        match *self {
            PotentialSpec::Zero => (None, None),
            PotentialSpec::InversePower { s, .. } => (Some(-s), Some(-s)),
            PotentialSpec::SmoothBump { s, .. } => (Some(2.0), Some(-s)),
            PotentialSpec::ConstPlusGaussian { .. } => (Some(2.0), None),
        }
    }
}

pub fn eval_potential(spec: &PotentialSpec, r: f64) -> Result<(f64, f64, f64), PotentialError> {
    let s = spec.eval(r)?;
    Ok((s.v, s.r_dv, s.r2_d2v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails { witness_radius: f64, violation: f64 },
    Borderline,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }
}

/// Integrability evidence behind the verdict on assumption (II).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityEvidence {
    /// Exponent of the radial integrand `|rV'|^{n/2} r^{−nb/2} r^{n−1}` near 0.
    pub origin_exponent: Option<f64>,
    /// Same exponent for `r → ∞`.
    pub tail_exponent: Option<f64>,
    /// Trapezoidal value of the integral over the sampled radii.
    pub sampled_integral: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct AssumptionReport {
    pub holds_I: Verdict,
    pub holds_II: Verdict,
    pub holds_III: Verdict,
    pub holds_IV: Verdict,
    pub omega1: f64,
    pub integrability: IntegrabilityEvidence,
}

impl AssumptionReport {
    pub fn all_hold(&self) -> bool {
        self.holds_I.holds() && self.holds_II.holds() && self.holds_III.holds() && self.holds_IV.holds()
    }
}

/// `count` log-spaced radii on `[r_min, r_max]`.
pub fn log_radii(r_min: f64, r_max: f64, count: usize) -> Vec<f64> {
    let (lo, hi) = (r_min.ln(), r_max.ln());
    let last = (count.max(2) - 1) as f64;
    let mut r: Vec<f64> = (0..count.max(2)).map(|i| (lo + (hi - lo) * i as f64 / last).exp()).collect();
    r[0] = r_min;
    *r.last_mut().unwrap() = r_max;
    r
}

pub fn default_radii() -> Vec<f64> {
    log_radii(1e-6, 1e6, 2048)
}

fn tolerance(v: f64) -> f64 {
    1e-12 * (1.0 + v.abs())
}

/// Scans `samples` for the largest violation of `slack(r) ≥ −tol(r)`.
fn pointwise(samples: &[(f64, RadialSample)], slack: impl Fn(&RadialSample) -> f64) -> Verdict {
    let mut worst: Option<(f64, f64)> = None;
    for (r, s) in samples {
        let tol = tolerance(s.v);
        let sl = slack(s);
        if sl < -tol {
            let excess = -sl;
            if worst.is_none_or(|(_, w)| excess > w) {
                worst = Some((*r, excess));
            }
        }
    }
    match worst {
        Some((r, w)) => Verdict::Fails { witness_radius: r, violation: w },
        None => Verdict::Holds,
    }
}

pub fn check_assumptions(spec: &PotentialSpec, params: &ProblemParams, radii: &[f64]) -> AssumptionReport {
    let b = params.b;
    let n = params.dim();
    let samples: Vec<(f64, RadialSample)> = radii
        .iter()
        .filter(|r| **r > 0.0)
        .map(|&r| (r, spec.eval_unchecked(r)))
        .collect();

    let holds_i = {
        let nonneg = pointwise(&samples, |s| s.v);
        if nonneg.holds() {
            pointwise(&samples, |s| s.r_dv + (2.0 - b) * s.v)
        } else {
            nonneg
        }
    };
    let holds_iii = pointwise(&samples, |s| -s.r_dv);
    let holds_iv = pointwise(&samples, |s| -(3.0 - b) * s.r_dv - s.r2_d2v);

    // (II): sampled quadrature plus exact power-law behaviour at both ends.
    let integrand = |r: f64, s: &RadialSample| s.r_dv.abs().powf(n / 2.0) * r.powf(-n * b / 2.0 + n - 1.0);
    let sampled_integral = sphere_area(params.n)
        * samples
            .windows(2)
            .map(|w| {
                let (r0, s0) = &w[0];
                let (r1, s1) = &w[1];
                0.5 * (integrand(*r0, s0) + integrand(*r1, s1)) * (r1 - r0)
            })
            .sum::<f64>();
    let (e0, e_inf) = spec.rdv_exponents();
    let to_integrand = |e: f64| e * n / 2.0 - n * b / 2.0 + n - 1.0;
    let origin_exponent = e0.map(to_integrand);
    let tail_exponent = e_inf.map(to_integrand);
    let r_lo = samples.first().map_or(0.0, |s| s.0);
    let r_hi = samples.last().map_or(0.0, |s| s.0);
    let holds_ii = if tail_exponent.is_some_and(|e| e >= -1.0) {
        Verdict::Fails { witness_radius: r_hi, violation: tail_exponent.unwrap() + 1.0 }
    } else if origin_exponent.is_some_and(|e| e <= -1.0) {
        Verdict::Fails { witness_radius: r_lo, violation: -1.0 - origin_exponent.unwrap() }
    } else if sampled_integral.is_finite() {
        Verdict::Holds
    } else {
        Verdict::Borderline
    };

    let inf = samples
        .iter()
        .map(|(_, s)| (2.0 - b) * s.v + s.r_dv)
        .fold(f64::INFINITY, f64::min);
    let omega1 = if inf.is_finite() { -0.5 * inf + 0.0 } else { 0.0 };

    AssumptionReport {
        holds_I: holds_i,
        holds_II: holds_ii,
        holds_III: holds_iii,
        holds_IV: holds_iv,
        omega1,
        integrability: IntegrabilityEvidence { origin_exponent, tail_exponent, sampled_integral },
    }
}
