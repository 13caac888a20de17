//! Ground states of `∇·(|x|^b ∇Q) − ωQ + |x|^c Q^{p+1} = 0`.
//!
//! The production route is Petviashvili iteration on the finite-volume
//! operator; an independent shooting-and-bisection integration of the radial
//! ODE serves as the oracle. Both feed the Pohozaev residuals and the
//! threshold constants used by the classifier.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::functionals::{FunctionalError, FunctionalReport, Model};
use crate::grid::{GridError, RadialField, RadialGrid};
use crate::params::{Criticality, ParamError, ProblemParams};
use crate::potential::PotentialSpec;

#[derive(Debug, Error)]
pub enum GroundStateError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("ground states are not computed at the energy-critical endpoint")]
    EnergyCritical,
    #[error("parameters fall outside the sharp Gagliardo-Nirenberg window")]
    OutsideGnWindow,
    #[error("initial guess must be strictly positive at every node")]
    NonPositiveGuess,
    #[error("no convergence after {iterations} iterations (residual {residual:e}): {reason}")]
    NonConvergence { iterations: usize, residual: f64, reason: &'static str },
    #[error("<(A+w)Q, Q> = {0:e} is not positive")]
    IndefiniteOperator(f64),
    #[error("no sign-change/decay bracket for q0 in [{lo}, {hi}]")]
    BracketNotFound { lo: f64, hi: f64 },
    #[error("thresholds need {expected}, got {got:?}")]
    CriticalityMismatch { expected: &'static str, got: Criticality },
    #[error("thresholds are defined from the omega = 1 ground state, got omega = {0}")]
    WrongFrequency(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// `‖Q₁‖₂`
    pub mass_threshold: f64,
    /// `‖∇Q₁‖_{b,2} ‖Q₁‖₂^σ`
    pub grad_mass: Option<f64>,
    /// `E_b(Q₁) M(Q₁)^σ`, evaluated directly.
    pub em_sigma: Option<f64>,
    /// `((p_c − 2(2−b))/(2p_c)) · grad_mass²`
    pub em_sigma_closed_form: Option<f64>,
    /// `S_{1,0}(Q₁)`
    pub action: f64,
    /// `((2−b)(p+2)/p_c) (‖∇Q‖‖Q‖^σ)^{2 − p_c/(2−b)}`
    pub c_gn_closed_form: Option<f64>,
    /// GN quotient evaluated on the profile.
    pub c_gn_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub profile: RadialField,
    pub omega: f64,
    pub residual: f64,
    pub pohozaev_res: (f64, f64),
    /// `C_GN` from the mass of `Q_ω` and `ω`.
    pub c_gn: f64,
    pub m_omega: f64,
    /// Final Petviashvili stabilizing factor.
    pub stabilizer: f64,
    pub iterations: usize,
    pub report: FunctionalReport,
    pub thresholds: Option<Thresholds>,
}

#[derive(Debug, Clone, Copy)]
pub struct PetviashviliOptions {
    pub max_iterations: usize,
    pub change_tol: f64,
    pub residual_tol: f64,
    pub stabilizer_tol: f64,
}

impl Default for PetviashviliOptions {
    fn default() -> Self {
        Self { max_iterations: 10_000, change_tol: 1e-12, residual_tol: 1e-8, stabilizer_tol: 1e-10 }
    }
}

fn check_admissible(params: &ProblemParams) -> Result<(), GroundStateError> {
    let e = params.exponents()?;
    if e.criticality == Criticality::EnergyCritical {
        return Err(GroundStateError::EnergyCritical);
    }
    if !crate::params::validate_gn_window(params) {
        return Err(GroundStateError::OutsideGnWindow);
    }
    Ok(())
}

pub fn default_guess(grid: &Arc<RadialGrid>) -> RadialField {
    RadialField::from_real_fn(grid.clone(), |r| (-r * r / 2.0).exp())
}

/// `((A+ω)Q − r^c Q^{p+1})` in the `μ` norm, relative to `‖Q‖_μ`.
fn fixed_point_residual(model: &Model, q: &[f64], omega: f64) -> f64 {
    let grid = &model.grid;
    let op = &model.operator;
    let p = model.params.p;
    let n = q.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        let mut stiff = (op.diag[i] + omega * grid.measure[i]) * q[i];
        if i > 0 {
            stiff += op.off[i - 1] * q[i - 1];
        }
        if i + 1 < n {
            stiff += op.off[i] * q[i + 1];
        }
        let mu = grid.measure[i];
        let r = stiff - mu * model.weight_c()[i] * q[i].abs().powf(p) * q[i];
        num += r * r / mu;
        den += mu * q[i] * q[i];
    }
    (num / den).sqrt()
}

pub fn petviashvili_solve(
    params: &ProblemParams,
    grid: &Arc<RadialGrid>,
    guess: Option<&RadialField>,
) -> Result<GroundState, GroundStateError> {
    petviashvili_solve_with(params, grid, guess, PetviashviliOptions::default())
}

pub fn petviashvili_solve_with(
    params: &ProblemParams,
    grid: &Arc<RadialGrid>,
    guess: Option<&RadialField>,
    opts: PetviashviliOptions,
) -> Result<GroundState, GroundStateError> {
    check_admissible(params)?;
    let model = Model::new(*params, PotentialSpec::Zero, grid.clone())?;
    let omega = params.omega;
    let p = params.p;
    let gamma = (p + 1.0) / p;
    let mu = &grid.measure;
    let wc = model.weight_c().to_vec();

    let start = guess.cloned().unwrap_or_else(|| default_guess(grid));
    if start.values.len() != grid.len() {
        return Err(GridError::LengthMismatch { expected: grid.len(), got: start.values.len() }.into());
    }
    if start.values.iter().any(|v| !(v.re > 0.0)) {
        return Err(GroundStateError::NonPositiveGuess);
    }
    let mut q: Vec<f64> = start.values.iter().map(|v| v.re).collect();
    let lu = model.operator.shifted_factor(omega)?;
    let stiff_form = |q: &[f64]| -> f64 {
        let n = q.len();
        (0..n)
            .map(|i| {
                let mut s = (model.operator.diag[i] + omega * mu[i]) * q[i];
                if i > 0 {
                    s += model.operator.off[i - 1] * q[i - 1];
                }
                if i + 1 < n {
                    s += model.operator.off[i] * q[i + 1];
                }
                s * q[i]
            })
            .sum()
    };

    let mut residual = f64::INFINITY;
    let mut stabilizer = f64::NAN;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        let mut rhs: Vec<f64> = q.iter().zip(&wc).zip(mu).map(|((v, w), m)| m * w * v.abs().powf(p) * v).collect();
        let num = stiff_form(&q);
        if !(num > 0.0) {
            return Err(GroundStateError::IndefiniteOperator(num));
        }
        let den: f64 = rhs.iter().zip(&q).map(|(r, v)| r * v).sum();
        stabilizer = num / den;
        lu.solve_in_place(&mut rhs).map_err(GridError::from)?;
        let scale = stabilizer.powf(gamma);
        let mut diff = 0.0;
        let mut norm = 0.0;
        for ((old, new), m) in q.iter_mut().zip(&rhs).zip(mu) {
            let v = scale * new;
            diff += m * (v - *old) * (v - *old);
            norm += m * v * v;
            *old = v;
        }
        if !norm.is_finite() || norm == 0.0 {
            return Err(GroundStateError::NonConvergence { iterations, residual, reason: "iterate degenerated" });
        }
        let change = (diff / norm).sqrt();
        residual = fixed_point_residual(&model, &q, omega);
        if residual < opts.residual_tol && (stabilizer - 1.0).abs() < opts.stabilizer_tol {
            converged = true;
            break;
        }
        // stagnation counts as convergence: on fine meshes the residual
        // bottoms out near the tolerance from rounding in the solve
        if change < opts.change_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(GroundStateError::NonConvergence { iterations, residual, reason: "iteration budget exhausted" });
    }
    if q.iter().any(|v| !(*v > 0.0)) {
        return Err(GroundStateError::NonConvergence { iterations, residual, reason: "profile changed sign" });
    }
    let peak = q.iter().enumerate().fold(0, |best, (i, v)| if *v > q[best] { i } else { best });
    if q[peak..].windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-10)) {
        return Err(GroundStateError::NonConvergence { iterations, residual, reason: "profile not decreasing beyond its peak" });
    }

    let profile = RadialField::from_real_fn(grid.clone(), |_| 0.0);
    let profile = RadialField { values: q.iter().map(|v| num_complex::Complex64::new(*v, 0.0)).collect(), ..profile };
    finish(model, profile, residual, stabilizer, iterations)
}

fn finish(
    model: Model,
    profile: RadialField,
    residual: f64,
    stabilizer: f64,
    iterations: usize,
) -> Result<GroundState, GroundStateError> {
    let params = model.params;
    let report = model.evaluate(&profile)?;
    let pohozaev_res = pohozaev_from_report(&report, &params);
    let c_gn = c_gn_from_mass(&params, report.mass);
    let mut gs = GroundState {
        profile,
        omega: params.omega,
        residual,
        pohozaev_res,
        c_gn,
        m_omega: report.action,
        stabilizer,
        iterations,
        report,
        thresholds: None,
    };
    if params.omega == 1.0 {
        gs.thresholds = derive_thresholds_with(&gs, &model).ok();
    }
    Ok(gs)
}

/// `C_GN = (ω p_c/((2−b)(p+2) − p_c))^{1 − p_c/(2(2−b))} (2−b)(p+2) / (p_c ‖Q_ω‖^p)`.
pub fn c_gn_from_mass(params: &ProblemParams, mass: f64) -> f64 {
    let order = params.order();
    let p_c = params.p_c();
    let d = params.energy_critical_pc() - p_c;
    (params.omega * p_c / d).powf(1.0 - p_c / (2.0 * order)) * params.energy_critical_pc() / (p_c * mass.powf(params.p / 2.0))
}

fn pohozaev_from_report(rep: &FunctionalReport, params: &ProblemParams) -> (f64, f64) {
    let d = params.energy_critical_pc() - params.p_c();
    let m = rep.mass;
    let via_nonlinear = d / (params.energy_critical_pc() * params.omega) * rep.nonlinear_term;
    let via_gradient = d / (params.omega * params.p_c()) * rep.gradient_sq;
    ((m - via_nonlinear).abs() / m, (m - via_gradient).abs() / m)
}

/// Relative defects of the two Pohozaev identities for `gs.profile`.
pub fn pohozaev_residuals(gs: &GroundState, params: &ProblemParams) -> Result<(f64, f64), GroundStateError> {
    let model = Model::new(params.with_omega(gs.omega), PotentialSpec::Zero, gs.profile.grid.clone())?;
    let rep = model.evaluate(&gs.profile)?;
    Ok(pohozaev_from_report(&rep, &model.params))
}

pub fn derive_thresholds(gs: &GroundState, params: &ProblemParams) -> Result<Thresholds, GroundStateError> {
    let model = Model::new(params.with_omega(gs.omega), PotentialSpec::Zero, gs.profile.grid.clone())?;
    derive_thresholds_with(gs, &model)
}

fn derive_thresholds_with(gs: &GroundState, model: &Model) -> Result<Thresholds, GroundStateError> {
    if gs.omega != 1.0 {
        return Err(GroundStateError::WrongFrequency(gs.omega));
    }
    let params = &model.params;
    let e = &model.exponents;
    let rep = model.evaluate(&gs.profile)?;
    let mass_threshold = rep.mass.sqrt();
    let c_gn_ratio = model.gn_ratio(&gs.profile)?;
    let mut out = Thresholds {
        mass_threshold,
        grad_mass: None,
        em_sigma: None,
        em_sigma_closed_form: None,
        action: rep.action,
        c_gn_closed_form: None,
        c_gn_ratio,
    };
    match e.criticality {
        Criticality::MassCritical => Ok(out),
        Criticality::Intercritical => {
            let sigma = e.sigma.expect("intercritical parameters define sigma");
            let grad_mass = rep.gradient_sq.sqrt() * mass_threshold.powf(sigma);
            out.grad_mass = Some(grad_mass);
            out.em_sigma = Some(rep.energy * rep.mass.powf(sigma));
            out.em_sigma_closed_form = Some((e.p_c - params.mass_critical_pc()) / (2.0 * e.p_c) * grad_mass * grad_mass);
            out.c_gn_closed_form =
                Some(params.energy_critical_pc() / e.p_c * grad_mass.powf(2.0 - e.p_c / params.order()));
            Ok(out)
        }
        other => Err(GroundStateError::CriticalityMismatch { expected: "mass-critical or intercritical", got: other }),
    }
}

/// `ω^{(2−b+c)/((2−b)p)} Q₁(ω^{1/(2−b)} r)` sampled on the profile's grid.
pub fn rescale_profile(q1: &RadialField, params: &ProblemParams, omega: f64) -> RadialField {
    let order = params.order();
    let amplitude = omega.powf((order + params.c) / (order * params.p));
    q1.resample(&q1.grid, omega.powf(1.0 / order), amplitude)
}

/// `S_{ω,0}(Q_ω) = ω^{((2−b)(p+2)−p_c)/((2−b)p)} S_{1,0}(Q₁)`
pub fn action_scaling_exponent(params: &ProblemParams) -> f64 {
    (params.energy_critical_pc() - params.p_c()) / (params.order() * params.p)
}

// ---------------------------------------------------------------------------
// Shooting oracle

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShotOutcome {
    /// Profile crossed zero at this radius: centre value too large.
    Crossing(f64),
    /// Profile turned back up while positive: centre value too small.
    Regrowth(f64),
    /// Reached the end of the interval without either event.
    Undecided,
}

#[derive(Debug, Clone, Copy)]
pub struct ShootingOptions {
    pub r0: f64,
    pub tolerance: f64,
    pub bracket: (f64, f64),
    pub max_step: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self { r0: 1e-6, tolerance: 1e-14, bracket: (1e-3, 1e3), max_step: 2e-3 }
    }
}

#[derive(Debug, Clone)]
pub struct ShotProfile {
    pub profile: RadialField,
    /// Centre value `Q(0)` at the final bracket.
    pub center: f64,
    /// Radius beyond which the trajectory left the ground state and the
    /// profile is set to zero.
    pub separation_radius: f64,
    pub bracket: (f64, f64),
}

#[derive(Debug, Clone, Copy)]
struct Ode {
    k: f64,
    b: f64,
    c: f64,
    p: f64,
    omega: f64,
    n: f64,
}

impl Ode {
    fn new(params: &ProblemParams) -> Self {
        Self { k: params.dim() - 1.0 + params.b, b: params.b, c: params.c, p: params.p, omega: params.omega, n: params.dim() }
    }

    fn rhs(&self, r: f64, q: f64, dq: f64) -> (f64, f64) {
        let source = -self.omega * q + r.powf(self.c) * q.abs().powf(self.p) * q;
        (dq, -self.k / r * dq - r.powf(-self.b) * source)
    }

    /// Two-term expansion `q0 + ω q0 r^{2−b}/((2−b)n) − q0^{p+1} r^{2−b+c}/((2−b+c)(n+c))`.
    fn series(&self, q0: f64, r: f64) -> (f64, f64) {
        let e1 = 2.0 - self.b;
        let e2 = 2.0 - self.b + self.c;
        let a1 = self.omega * q0 / (e1 * self.n);
        let a2 = -q0.powf(self.p + 1.0) / (e2 * (self.n + self.c));
        (q0 + a1 * r.powf(e1) + a2 * r.powf(e2), a1 * e1 * r.powf(e1 - 1.0) + a2 * e2 * r.powf(e2 - 1.0))
    }

    fn rk4(&self, r: f64, h: f64, q: f64, dq: f64) -> (f64, f64) {
        let (k1q, k1d) = self.rhs(r, q, dq);
        let (k2q, k2d) = self.rhs(r + 0.5 * h, q + 0.5 * h * k1q, dq + 0.5 * h * k1d);
        let (k3q, k3d) = self.rhs(r + 0.5 * h, q + 0.5 * h * k2q, dq + 0.5 * h * k2d);
        let (k4q, k4d) = self.rhs(r + h, q + h * k3q, dq + h * k3d);
        (q + h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q), dq + h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d))
    }
}

/// Integrates outward from `r0` and classifies the shot. Returns the
/// trajectory `(r, Q, Q')` up to the deciding event.
pub fn shoot(params: &ProblemParams, q0: f64, r0: f64, r_end: f64, max_step: f64) -> (ShotOutcome, Vec<(f64, f64, f64)>) {
    let ode = Ode::new(params);
    let (mut q, mut dq) = ode.series(q0, r0);
    let mut r = r0;
    let mut traj = vec![(r, q, dq)];
    if dq > 0.0 {
        return (ShotOutcome::Regrowth(r), traj);
    }
    while r < r_end {
        let h = (0.02 * r).min(max_step).min(r_end - r);
        let (nq, nd) = ode.rk4(r, h, q, dq);
        r += h;
        q = nq;
        dq = nd;
        traj.push((r, q, dq));
        if q <= 0.0 {
            return (ShotOutcome::Crossing(r), traj);
        }
        if dq > 0.0 {
            return (ShotOutcome::Regrowth(r), traj);
        }
    }
    (ShotOutcome::Undecided, traj)
}

fn hermite(traj: &[(f64, f64, f64)], r: f64) -> Option<f64> {
    let k = traj.partition_point(|t| t.0 <= r);
    if k == 0 || k >= traj.len() {
        return None;
    }
    let (x0, y0, d0) = traj[k - 1];
    let (x1, y1, d1) = traj[k];
    let h = x1 - x0;
    let t = (r - x0) / h;
    let (t2, t3) = (t * t, t * t * t);
    Some((2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * d1)
}

pub fn shooting_solve(params: &ProblemParams, grid: &Arc<RadialGrid>, tolerance: f64) -> Result<ShotProfile, GroundStateError> {
    shooting_solve_with(params, grid, ShootingOptions { tolerance, ..ShootingOptions::default() })
}

pub fn shooting_solve_with(
    params: &ProblemParams,
    grid: &Arc<RadialGrid>,
    opts: ShootingOptions,
) -> Result<ShotProfile, GroundStateError> {
    check_admissible(params)?;
    let r_end = grid.r_max;
    let run = |q0: f64| shoot(params, q0, opts.r0, r_end, opts.max_step);
    let (mut lo, mut hi) = opts.bracket;
    let not_found = GroundStateError::BracketNotFound { lo, hi };
    if !matches!(run(lo).0, ShotOutcome::Regrowth(_)) || !matches!(run(hi).0, ShotOutcome::Crossing(_)) {
        return Err(not_found);
    }
    while (hi - lo) > opts.tolerance.max(4.0 * f64::EPSILON) * hi {
        let mid = (lo * hi).sqrt();
        if !(mid > lo && mid < hi) {
            break;
        }
        let (outcome, traj) = run(mid);
        match outcome {
            ShotOutcome::Crossing(_) => hi = mid,
            ShotOutcome::Regrowth(_) => lo = mid,
            ShotOutcome::Undecided => {
                let tail = traj.last().map_or(f64::INFINITY, |t| t.1);
                if tail < 1e-6 * mid {
                    // decayed all the way to r_max: as good as an exact shot
                    lo = mid;
                    hi = mid;
                } else {
                    // stalled without decaying (e.g. the constant solution)
                    lo = mid;
                }
            }
        }
    }
    let (outcome, traj) = run(lo);
    let separation_radius = match outcome {
        ShotOutcome::Regrowth(r) | ShotOutcome::Crossing(r) => r,
        ShotOutcome::Undecided => r_end,
    };
    // stop at the last point where the profile was still decreasing
    let usable: Vec<_> = traj.iter().copied().filter(|t| t.0 < separation_radius && t.2 <= 0.0).collect();
    let ode = Ode::new(params);
    let values = grid
        .nodes
        .iter()
        .map(|&r| {
            let v = if r < opts.r0 { ode.series(lo, r).0 } else { hermite(&usable, r).unwrap_or(0.0) };
            num_complex::Complex64::new(v, 0.0)
        })
        .collect();
    let profile = RadialField::new(grid.clone(), values)?;
    Ok(ShotProfile { profile, center: lo, separation_radius, bracket: (lo, hi) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_for(params: &ProblemParams, cells: usize) -> Arc<RadialGrid> {
        RadialGrid::build(params.n, params.b, 30.0, cells, 2.0).unwrap()
    }

    #[test]
    fn rejects_inadmissible_parameters() {
        let ec = ProblemParams::new(3, 0.0, 0.0, 4.0, 1.0);
        assert!(matches!(petviashvili_solve(&ec, &grid_for(&ec, 64), None), Err(GroundStateError::EnergyCritical)));
        // c > 0 but p_c below (2-b)p/2
        let out = ProblemParams::new(3, 0.0, 1.2, 1.0, 1.0);
        assert!(matches!(petviashvili_solve(&out, &grid_for(&out, 64), None), Err(GroundStateError::OutsideGnWindow)));
    }

    #[test]
    fn rejects_non_positive_guess() {
        let params = ProblemParams::new(3, 0.0, 0.0, 2.0, 1.0);
        let g = grid_for(&params, 256);
        let guess = RadialField::from_real_fn(g.clone(), |r| (1.0 - r) * (-r * r).exp());
        assert!(matches!(petviashvili_solve(&params, &g, Some(&guess)), Err(GroundStateError::NonPositiveGuess)));
    }

    #[test]
    fn iteration_budget_exhaustion_is_reported() {
        let params = ProblemParams::new(3, 0.0, 0.0, 2.0, 1.0);
        let g = grid_for(&params, 512);
        let opts = PetviashviliOptions { max_iterations: 3, ..Default::default() };
        assert!(matches!(
            petviashvili_solve_with(&params, &g, None, opts),
            Err(GroundStateError::NonConvergence { iterations: 3, .. })
        ));
    }

    #[test]
    fn cubic_ground_state_invariants() {
        let params = ProblemParams::new(3, 0.0, 0.0, 2.0, 1.0);
        let g = grid_for(&params, 2048);
        let gs = petviashvili_solve(&params, &g, None).unwrap();
        assert!(gs.residual < 1e-8);
        assert!((gs.stabilizer - 1.0).abs() < 1e-10);
        assert!(gs.pohozaev_res.0 < 1e-4 && gs.pohozaev_res.1 < 1e-4, "{:?}", gs.pohozaev_res);
        assert!(gs.m_omega > 0.0);
        assert!(gs.report.nehari.abs() < 1e-6 * gs.report.l);
        let th = gs.thresholds.unwrap();
        assert!((th.mass_threshold - gs.report.mass.sqrt()).abs() == 0.0);
        let (r1, r2) = pohozaev_residuals(&gs, &params).unwrap();
        assert_eq!((r1, r2), gs.pohozaev_res);
    }

    #[test]
    fn perturbed_profile_fails_pohozaev() {
        let params = ProblemParams::new(3, 0.0, 0.0, 2.0, 1.0);
        let g = grid_for(&params, 1024);
        let mut gs = petviashvili_solve(&params, &g, None).unwrap();
        let bump = RadialField::from_real_fn(g.clone(), |r| 0.1 * (-r * r / 2.0).exp());
        gs.profile = gs.profile.add(&bump).unwrap();
        let (r1, r2) = pohozaev_residuals(&gs, &params).unwrap();
        assert!(r1 > 1e-2 && r2 > 1e-2, "{r1} {r2}");
    }

    #[test]
    fn shot_dichotomy_at_bracket_ends() {
        let params = ProblemParams::new(3, 0.0, 0.0, 2.0, 1.0);
        assert!(matches!(shoot(&params, 1e-3, 1e-6, 30.0, 2e-3).0, ShotOutcome::Regrowth(_)));
        assert!(matches!(shoot(&params, 1e3, 1e-6, 30.0, 2e-3).0, ShotOutcome::Crossing(_)));
        assert!(matches!(shoot(&params, 3.0, 1e-6, 30.0, 2e-3).0, ShotOutcome::Regrowth(_)));
        assert!(matches!(shoot(&params, 6.0, 1e-6, 30.0, 2e-3).0, ShotOutcome::Crossing(_)));
    }

    #[test]
    fn shooting_start_is_insensitive_to_r0() {
        for params in [ProblemParams::new(3, 0.0, 0.0, 2.0, 1.0), ProblemParams::new(3, -0.5, -0.6, 1.5, 1.0)] {
            let g = grid_for(&params, 256);
            let a = shooting_solve_with(&params, &g, ShootingOptions::default()).unwrap();
            let b = shooting_solve_with(&params, &g, ShootingOptions { r0: 5e-7, ..Default::default() }).unwrap();
            assert!((a.center - b.center).abs() < 1e-8 * a.center, "{} {}", a.center, b.center);
        }
    }

    #[test]
    fn bracket_failure() {
        let params = ProblemParams::new(3, 0.0, 0.0, 2.0, 1.0);
        let g = grid_for(&params, 64);
        let opts = ShootingOptions { bracket: (10.0, 1e3), ..Default::default() };
        assert!(matches!(shooting_solve_with(&params, &g, opts), Err(GroundStateError::BracketNotFound { .. })));
    }
}
