//! Scalar functionals of a radial field and the scaling transforms they are
//! differentiated along.
//!
//! Notation for the building blocks, all evaluated by grid quadrature:
//!
//! ```text
//! G = ‖∇u‖²_{b,2}      W = ∫ V |u|²       X = ∫ (x·∇V) |u|²
//! N = ‖u‖^{p+2}_{c,p+2} M = ‖u‖²_2
//! ```
//!
//! Energy `E = (G + W)/2 − N/(p+2)`, action `S = E + ωM/2`, and the scaling
//! derivative `K^{α,β}` in closed form.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::grid::{DiscreteOperator, RadialField, RadialGrid};
use crate::params::{CriticalExponents, Criticality, ParamError, ProblemParams};
use crate::potential::PotentialSpec;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FunctionalError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("grid carries (n, b) = ({grid_n}, {grid_b}) but parameters have ({n}, {b})")]
    GridMismatch { grid_n: u32, grid_b: f64, n: u32, b: f64 },
    #[error("field lives on a different grid than the model")]
    FieldGridMismatch,
    #[error("weight |x|^c with c + n = {0} <= 0 is not integrable at the origin")]
    IntegrabilityBreach(f64),
    #[error("term {0} evaluated to a non-finite value")]
    NonFinite(&'static str),
    #[error("rescaling drops tail mass {lost:e} of total {mass:e}")]
    TailTruncated { lost: f64, mass: f64 },
    #[error("operation requires intercritical parameters, got {0:?}")]
    NotIntercritical(Criticality),
    #[error("peak location must be positive, got {0}")]
    BadPeak(f64),
}

/// Every monitored functional of one field. Field names are the JSON keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalReport {
    pub mass: f64,
    pub energy: f64,
    pub virial: f64,
    pub action: f64,
    pub nehari: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "grad_norm_V")]
    pub grad_norm_v: f64,
    pub potential_energy: f64,
    pub nonlinear_term: f64,
    #[serde(rename = "xgradV_term")]
    pub xgrad_v_term: f64,
    /// `‖∇u‖²_{b,2}` without the potential part.
    #[serde(skip)]
    pub gradient_sq: f64,
}

/// Parameters, potential and grid bundled with the node samples every
/// functional needs.
#[derive(Debug, Clone)]
pub struct Model {
    pub params: ProblemParams,
    pub exponents: CriticalExponents,
    pub potential: PotentialSpec,
    pub grid: Arc<RadialGrid>,
    pub operator: DiscreteOperator,
    weight_c: Vec<f64>,
    r_dv: Vec<f64>,
    variance_weight: Vec<f64>,
}

impl Model {
    pub fn new(params: ProblemParams, potential: PotentialSpec, grid: Arc<RadialGrid>) -> Result<Self, FunctionalError> {
        let exponents = params.exponents()?;
        if grid.n != params.n || grid.b != params.b {
            return Err(FunctionalError::GridMismatch { grid_n: grid.n, grid_b: grid.b, n: params.n, b: params.b });
        }
        if params.c + params.dim() <= 0.0 {
            return Err(FunctionalError::IntegrabilityBreach(params.c + params.dim()));
        }
        let samples: Vec<_> = grid.nodes.iter().map(|&r| potential.eval_unchecked(r)).collect();
        let operator = DiscreteOperator::with_potential(grid.clone(), samples.iter().map(|s| s.v).collect());
        let r_dv = samples.iter().map(|s| s.r_dv).collect();
        let weight_c = grid.power(params.c);
        let variance_weight = grid.power(2.0 - params.b);
        Ok(Self { params, exponents, potential, grid, operator, weight_c, r_dv, variance_weight })
    }

    /// Same model at another frequency.
    pub fn with_omega(&self, omega: f64) -> Result<Self, FunctionalError> {
        let params = self.params.with_omega(omega);
        params.validate()?;
        Ok(Self { params, ..self.clone() })
    }

    pub fn weight_c(&self) -> &[f64] {
        &self.weight_c
    }

    fn check(&self, u: &RadialField) -> Result<(), FunctionalError> {
        if u.same_grid_as(&self.grid) {
            Ok(())
        } else {
            Err(FunctionalError::FieldGridMismatch)
        }
    }

    fn weighted_sum(&self, w: &[f64], u: &RadialField, f: impl Fn(f64) -> f64) -> f64 {
        self.grid.measure.iter().zip(w).zip(&u.values).map(|((mu, w), v)| mu * w * f(v.norm_sqr())).sum()
    }

    pub fn nonlinear_term(&self, u: &RadialField) -> f64 {
        let half = (self.params.p + 2.0) / 2.0;
        self.weighted_sum(&self.weight_c, u, |m2| if m2 == 0.0 { 0.0 } else { m2.powf(half) })
    }

    pub fn potential_energy(&self, u: &RadialField) -> f64 {
        self.weighted_sum(&self.operator.potential, u, |m2| m2)
    }

    pub fn xgradv_term(&self, u: &RadialField) -> f64 {
        self.weighted_sum(&self.r_dv, u, |m2| m2)
    }

    /// `‖u‖²_{2−b,2}`.
    pub fn variance(&self, u: &RadialField) -> f64 {
        self.weighted_sum(&self.variance_weight, u, |m2| m2)
    }

    pub fn evaluate(&self, u: &RadialField) -> Result<FunctionalReport, FunctionalError> {
        self.check(u)?;
        let ProblemParams { p, omega, .. } = self.params;
        let order = self.params.order();
        let p_c = self.exponents.p_c;
        let mass = u.mass();
        let gradient_sq = u.gradient_norm_sq();
        let potential_energy = self.potential_energy(u);
        let nonlinear_term = self.nonlinear_term(u);
        let xgrad_v_term = self.xgradv_term(u);
        for (name, v) in [
            ("mass", mass),
            ("gradient", gradient_sq),
            ("potential_energy", potential_energy),
            ("nonlinear_term", nonlinear_term),
            ("xgradV_term", xgrad_v_term),
        ] {
            if !v.is_finite() {
                return Err(FunctionalError::NonFinite(name));
            }
        }
        let h1 = gradient_sq + potential_energy;
        let energy = 0.5 * h1 - nonlinear_term / (p + 2.0);
        let action = energy + 0.5 * omega * mass;
        let virial = gradient_sq - xgrad_v_term / order - p_c * nonlinear_term / (order * (p + 2.0));
        let l = h1 + omega * mass;
        let nehari = l - nonlinear_term;
        Ok(FunctionalReport {
            mass,
            energy,
            virial,
            action,
            nehari,
            l,
            grad_norm_v: h1.sqrt(),
            potential_energy,
            nonlinear_term,
            xgrad_v_term,
            gradient_sq,
        })
    }

    pub fn action(&self, u: &RadialField) -> Result<f64, FunctionalError> {
        Ok(self.evaluate(u)?.action)
    }

    /// Closed form of `d/dλ S(e^{αλ} u(e^{βλ} ·))` at `λ = 0`.
    pub fn k_functional(&self, u: &RadialField, alpha: f64, beta: f64) -> Result<f64, FunctionalError> {
        let rep = self.evaluate(u)?;
        Ok(k_from_report(&rep, &self.params, alpha, beta))
    }

    /// Sharp-GN quotient `N / (G^{p_c/(2(2−b))} M^{((2−b)(p+2)−p_c)/(2(2−b))})`.
    pub fn gn_ratio(&self, u: &RadialField) -> Result<f64, FunctionalError> {
        self.check(u)?;
        let order = self.params.order();
        let p_c = self.exponents.p_c;
        let g = u.gradient_norm_sq();
        let m = u.mass();
        let n = self.nonlinear_term(u);
        let ratio = n / (g.powf(p_c / (2.0 * order)) * m.powf((self.params.energy_critical_pc() - p_c) / (2.0 * order)));
        if ratio.is_finite() {
            Ok(ratio)
        } else {
            Err(FunctionalError::NonFinite("gn_ratio"))
        }
    }
}

trait SameGrid {
    fn same_grid_as(&self, grid: &Arc<RadialGrid>) -> bool;
}

impl SameGrid for RadialField {
    fn same_grid_as(&self, grid: &Arc<RadialGrid>) -> bool {
        Arc::ptr_eq(&self.grid, grid) || *self.grid == **grid
    }
}

/// `K^{α,β}` assembled from the pieces of an already evaluated report.
pub fn k_from_report(rep: &FunctionalReport, params: &ProblemParams, alpha: f64, beta: f64) -> f64 {
    let n = params.dim();
    let (b, c, p, omega) = (params.b, params.c, params.p, params.omega);
    0.5 * (2.0 * alpha + (2.0 - b - n) * beta) * rep.gradient_sq
        + 0.5 * (2.0 * alpha - n * beta) * (rep.potential_energy + omega * rep.mass)
        - 0.5 * beta * rep.xgrad_v_term
        - (alpha * (p + 2.0) - (n + c) * beta) / (p + 2.0) * rep.nonlinear_term
}

pub fn evaluate_all(u: &RadialField, params: &ProblemParams, spec: &PotentialSpec) -> Result<FunctionalReport, FunctionalError> {
    Model::new(*params, *spec, u.grid.clone())?.evaluate(u)
}

pub fn k_functional(
    u: &RadialField,
    alpha: f64,
    beta: f64,
    params: &ProblemParams,
    spec: &PotentialSpec,
) -> Result<f64, FunctionalError> {
    Model::new(*params, *spec, u.grid.clone())?.k_functional(u, alpha, beta)
}

/// `e^{αλ} u(e^{βλ} r)` on the same grid, zero beyond `r_max`.
pub fn scale_alpha_beta(u: &RadialField, alpha: f64, beta: f64, lambda: f64) -> Result<RadialField, FunctionalError> {
    if lambda == 0.0 {
        return Ok(u.clone());
    }
    let stretch = (beta * lambda).exp();
    let amplitude = (alpha * lambda).exp();
    if stretch < 1.0 {
        let g = &u.grid;
        let cut = stretch * g.r_max;
        let lost: f64 = g
            .nodes
            .iter()
            .zip(&g.measure)
            .zip(&u.values)
            .filter(|((r, _), _)| **r > cut)
            .map(|((_, mu), v)| mu * v.norm_sqr())
            .sum();
        let mass = u.mass();
        if lost > 1e-10 * mass {
            return Err(FunctionalError::TailTruncated { lost, mass });
        }
    }
    Ok(u.resample(&u.grid, stretch, amplitude))
}

/// `λ^{(2−b+c)/p} u(λ r)`, the time-zero slice of the equation's scaling.
pub fn scale_soliton(u: &RadialField, lambda: f64, params: &ProblemParams) -> Result<RadialField, FunctionalError> {
    let alpha = (params.order() + params.c) / params.p;
    scale_alpha_beta(u, alpha, 1.0, lambda.ln())
}

fn require_intercritical(params: &ProblemParams) -> Result<CriticalExponents, FunctionalError> {
    let e = params.exponents()?;
    if e.criticality == Criticality::Intercritical {
        Ok(e)
    } else {
        Err(FunctionalError::NotIntercritical(e.criticality))
    }
}

/// `f(x) = x²/2 − ((2−b)/p_c) α^{2 − p_c/(2−b)} x^{p_c/(2−b)}`, maximal at `x = α`.
pub fn threshold_function(x: f64, params: &ProblemParams, peak: f64) -> Result<f64, FunctionalError> {
    let e = require_intercritical(params)?;
    if !(peak > 0.0) {
        return Err(FunctionalError::BadPeak(peak));
    }
    let k = e.p_c / params.order();
    Ok(0.5 * x * x - peak.powf(2.0 - k) * x.powf(k) / k)
}

/// `f(α) = ((p_c − 2(2−b))/(2 p_c)) α²`.
pub fn threshold_peak_value(params: &ProblemParams, peak: f64) -> Result<f64, FunctionalError> {
    let e = require_intercritical(params)?;
    Ok((e.p_c - params.mass_critical_pc()) / (2.0 * e.p_c) * peak * peak)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;
    use num_complex::Complex64;

    fn setup(params: ProblemParams, cells: usize) -> Model {
        let grid = RadialGrid::build(params.n, params.b, 30.0, cells, 2.0).unwrap();
        Model::new(params, PotentialSpec::Zero, grid).unwrap()
    }

    fn gaussian(m: &Model, amp: f64) -> RadialField {
        RadialField::from_real_fn(m.grid.clone(), |r| amp * (-r * r / 2.0).exp())
    }

    #[test]
    fn zero_field_has_zero_functionals() {
        let m = setup(ProblemParams::new(3, 0.0, 0.0, 2.0, 1.0), 256);
        let rep = m.evaluate(&RadialField::zeros(m.grid.clone())).unwrap();
        for v in [rep.mass, rep.energy, rep.virial, rep.action, rep.nehari, rep.l, rep.nonlinear_term] {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn report_identities() {
        let params = ProblemParams::new(3, -0.5, -0.5, 2.0, 0.7);
        let grid = RadialGrid::build(3, -0.5, 30.0, 1024, 2.0).unwrap();
        let m = Model::new(params, PotentialSpec::SmoothBump { a: 0.8, s: 1.0 }, grid).unwrap();
        let u = RadialField::from_fn(m.grid.clone(), |r| Complex64::new(1.2, 0.3) * (1.0 + r) * (-r * r / 3.0).exp());
        let rep = m.evaluate(&u).unwrap();
        let tol = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
        let g = rep.grad_norm_v.powi(2);
        assert!(tol(rep.energy, g / 2.0 - rep.nonlinear_term / 4.0));
        assert!(tol(rep.action, rep.energy + 0.35 * rep.mass));
        let (order, p_c) = (2.5, 7.0);
        assert!(tol(rep.virial, rep.gradient_sq - rep.xgrad_v_term / order - p_c * rep.nonlinear_term / (order * 4.0)));
        assert!(tol(rep.virial, m.k_functional(&u, 3.0, 2.0).unwrap() / order));
        assert_eq!(m.k_functional(&u, 1.0, 0.0).unwrap(), rep.nehari);
    }

    #[test]
    fn json_uses_listed_names() {
        let m = setup(ProblemParams::new(3, 0.0, 0.0, 2.0, 1.0), 128);
        let rep = m.evaluate(&gaussian(&m, 1.0)).unwrap();
        let js = serde_json::to_value(rep).unwrap();
        let mut keys: Vec<_> = js.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "L", "action", "energy", "grad_norm_V", "mass", "nehari", "nonlinear_term", "potential_energy", "virial",
                "xgradV_term"
            ]
        );
    }

    #[test]
    fn l2_invariant_scaling_preserves_mass() {
        // the sampled rescaling commutes with the midpoint quadrature only to O(h²)
        let g = RadialGrid::build(3, 0.0, 15.0, 32768, 2.0).unwrap();
        let m = Model::new(ProblemParams::new(3, 0.0, 0.0, 2.0, 1.0), PotentialSpec::Zero, g).unwrap();
        let u = gaussian(&m, 1.0);
        assert_eq!(scale_alpha_beta(&u, 1.5, 1.0, 0.0).unwrap(), u);
        for lambda in [-0.3, 0.2, 0.5] {
            let s = scale_alpha_beta(&u, 1.5, 1.0, lambda).unwrap();
            assert!((s.mass() - u.mass()).abs() < 1e-8 * u.mass(), "lambda {lambda}");
        }
    }

    #[test]
    fn gradient_scales_with_closed_form_factor() {
        let params = ProblemParams::new(3, -0.5, 0.0, 2.0, 1.0);
        let m = setup(params, 4096);
        let u = gaussian(&m, 1.0);
        let (alpha, beta, lambda) = (3.0, 2.0, 0.1);
        let s = scale_alpha_beta(&u, alpha, beta, lambda).unwrap();
        let factor = ((2.0 * alpha + (2.0 - params.b - 3.0) * beta) * lambda).exp();
        let ratio = s.gradient_norm_sq() / u.gradient_norm_sq();
        assert!((ratio / factor - 1.0).abs() < 1e-5, "{ratio} vs {factor}");
    }

    #[test]
    fn soliton_scaling() {
        let params = ProblemParams::new(3, 0.0, 0.0, 2.0, 1.0);
        let m = setup(params, 4096);
        let u = gaussian(&m, 1.0);
        assert_eq!(scale_soliton(&u, 1.0, &params).unwrap(), u);
        let s = scale_soliton(&u, 2.0, &params).unwrap();
        let ratio = (s.gradient_norm_sq() / u.gradient_norm_sq()).sqrt();
        assert!((ratio - 2f64.sqrt()).abs() < 1e-6 * 2f64.sqrt(), "{ratio}");

        let mc = ProblemParams::new(3, 0.0, 0.0, 4.0 / 3.0, 1.0);
        let g = RadialGrid::build(3, 0.0, 15.0, 32768, 2.0).unwrap();
        let u = RadialField::from_real_fn(g, |r| (-r * r / 2.0).exp());
        for lambda in [0.5, 2.0] {
            let s = scale_soliton(&u, lambda, &mc).unwrap();
            assert!((s.mass() - u.mass()).abs() < 1e-8 * u.mass());
        }
    }

    #[test]
    fn truncation_is_flagged() {
        let m = setup(ProblemParams::new(3, 0.0, 0.0, 2.0, 1.0), 512);
        let wide = RadialField::from_real_fn(m.grid.clone(), |r| (-r / 10.0).exp());
        assert!(matches!(scale_alpha_beta(&wide, 1.5, 1.0, -0.5), Err(FunctionalError::TailTruncated { .. })));
    }

    #[test]
    fn threshold_function_shape() {
        let params = ProblemParams::new(3, 0.0, 0.0, 2.0, 1.0);
        let peak = 1.7;
        assert_eq!(threshold_function(0.0, &params, peak).unwrap(), 0.0);
        let fa = threshold_function(peak, &params, peak).unwrap();
        assert!((fa - threshold_peak_value(&params, peak).unwrap()).abs() < 1e-14);
        let h = 1e-5;
        let d = (threshold_function(peak + h, &params, peak).unwrap() - threshold_function(peak - h, &params, peak).unwrap())
            / (2.0 * h);
        assert!(d.abs() < 1e-8 * peak);
        let mc = ProblemParams::new(3, 0.0, 0.0, 4.0 / 3.0, 1.0);
        assert!(matches!(threshold_function(1.0, &mc, 1.0), Err(FunctionalError::NotIntercritical(_))));
    }

    #[test]
    fn rejects_mismatched_grid_and_bad_weight() {
        let grid = RadialGrid::build(3, 0.0, 10.0, 64, 2.0).unwrap();
        assert!(matches!(
            Model::new(ProblemParams::new(3, -0.5, 0.0, 2.0, 1.0), PotentialSpec::Zero, grid.clone()),
            Err(FunctionalError::GridMismatch { .. })
        ));
        let m = Model::new(ProblemParams::new(3, 0.0, 0.0, 2.0, 1.0), PotentialSpec::Zero, grid).unwrap();
        let other = RadialGrid::build(3, 0.0, 10.0, 65, 2.0).unwrap();
        assert!(matches!(m.evaluate(&RadialField::zeros(other)), Err(FunctionalError::FieldGridMismatch)));
    }
}
