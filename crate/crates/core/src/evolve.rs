//! Time integration by Strang splitting: exact nonlinear phase rotations
//! around a Cayley step for the linear part. Both pieces are unitary in the
//! `μ` inner product, so mass is conserved to rounding.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::functionals::{k_from_report, FunctionalError, Model};
use crate::grid::{GridError, RadialField};
use crate::linalg::Tridiagonal;
use crate::params::ProblemParams;
use crate::potential::PotentialSpec;

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error("invalid evolution config: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("field became non-finite at t = {0}")]
    NonFinite(f64),
    #[error("virial check needs at least 3 samples, trace has {0}")]
    InsufficientSamples(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolutionConfig {
    pub dt0: f64,
    pub t_end: f64,
    /// Diagnostics every this many steps.
    pub sample_every: usize,
    /// Gradient growth factor that arms the blow-up trigger.
    pub blowup_factor: f64,
    pub dt_min: f64,
    pub adaptive: bool,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self { dt0: 1e-3, t_end: 1.0, sample_every: 10, blowup_factor: 100.0, dt_min: 1e-9, adaptive: true }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), EvolveError> {
        if !(self.dt_min > 0.0) {
            return Err(EvolveError::Config("dt_min must be positive"));
        }
        if !(self.dt0 > self.dt_min) {
            return Err(EvolveError::Config("dt0 must exceed dt_min"));
        }
        if !(self.blowup_factor > 1.0) {
            return Err(EvolveError::Config("blowup_factor must exceed 1"));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(EvolveError::Config("t_end must be positive and finite"));
        }
        if self.sample_every == 0 {
            return Err(EvolveError::Config("sample_every must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Event {
    BlowupTriggered { t: f64, grad_ratio: f64 },
    Completed { t: f64 },
    StepFloorHit { t: f64, dt: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    /// `‖∇u‖_{b,2}`
    pub grad_norm: f64,
    pub virial: f64,
    pub k_n2: f64,
    pub variance: f64,
    pub nehari: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    pub grad_norm: Vec<f64>,
    pub virial: Vec<f64>,
    pub k_n2: Vec<f64>,
    pub variance: Vec<f64>,
    pub nehari: Vec<f64>,
    pub events: Vec<Event>,
    pub steps: usize,
    /// Largest `|u|` seen in the outermost cell; reflection off `r_max`
    /// shows up here first.
    pub max_edge_amplitude: f64,
    /// Largest nonlinear phase `dt·r^c|u|^p` taken in one step. Values of
    /// order one mean the splitting no longer resolves the nonlinear
    /// frequency (typical near the origin when `c < 0`).
    pub max_phase_step: f64,
}

impl EvolutionTrace {
    fn push(&mut self, s: &Sample) {
        self.times.push(s.t);
        self.mass.push(s.mass);
        self.energy.push(s.energy);
        self.grad_norm.push(s.grad_norm);
        self.virial.push(s.virial);
        self.k_n2.push(s.k_n2);
        self.variance.push(s.variance);
        self.nehari.push(s.nehari);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn blowup_time(&self) -> Option<f64> {
        self.events.iter().find_map(|e| match e {
            Event::BlowupTriggered { t, .. } => Some(*t),
            _ => None,
        })
    }

    pub fn completed(&self) -> bool {
        self.events.iter().any(|e| matches!(e, Event::Completed { .. }))
    }

    pub fn max_mass_drift(&self) -> f64 {
        let m0 = self.mass[0];
        self.mass.iter().map(|m| (m - m0).abs() / m0).fold(0.0, f64::max)
    }

    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        self.energy.iter().map(|e| (e - e0).abs() / e0.abs()).fold(0.0, f64::max)
    }

    pub fn grad_growth(&self) -> f64 {
        self.grad_norm.iter().copied().fold(0.0, f64::max) / self.grad_norm[0]
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,mass,energy,grad_norm,P,K_n2,variance,nehari")?;
        for k in 0..self.len() {
            writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                self.times[k],
                self.mass[k],
                self.energy[k],
                self.grad_norm[k],
                self.virial[k],
                self.k_n2[k],
                self.variance[k],
                self.nehari[k]
            )?;
        }
        Ok(())
    }

    /// Events plus run statistics, the JSON companion of the CSV.
    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "events": self.events,
            "steps": self.steps,
            "samples": self.len(),
            "max_edge_amplitude": self.max_edge_amplitude,
            "max_phase_step": self.max_phase_step,
            "max_mass_drift": if self.is_empty() { 0.0 } else { self.max_mass_drift() },
        })
    }
}

/// Reusable propagator for one model; refactors the Cayley matrix only when
/// the step size changes.
pub struct Stepper<'a> {
    model: &'a Model,
    dt: f64,
    factor: Option<Tridiagonal<Complex64>>,
    work: Vec<Complex64>,
}

impl<'a> Stepper<'a> {
    pub fn new(model: &'a Model) -> Self {
        Self { model, dt: f64::NAN, factor: None, work: Vec::new() }
    }

    fn nonlinear_phase(&self, u: &mut [Complex64], tau: f64) -> f64 {
        let p = self.model.params.p;
        let mut largest = 0.0f64;
        for (v, w) in u.iter_mut().zip(self.model.weight_c()) {
            let m2 = v.norm_sqr();
            if m2 > 0.0 {
                let phase = tau * w * m2.powf(p / 2.0);
                largest = largest.max(phase.abs());
                *v *= Complex64::from_polar(1.0, phase);
            }
        }
        largest
    }

    /// One Strang step of size `dt` (negative `dt` runs backwards). Returns
    /// the largest nonlinear phase applied.
    pub fn step(&mut self, u: &mut [Complex64], dt: f64) -> Result<f64, EvolveError> {
        let z = Complex64::new(0.0, 0.5 * dt);
        if self.factor.is_none() || self.dt != dt {
            self.factor = Some(self.model.operator.complex_shifted_factor(z)?);
            self.dt = dt;
        }
        let first = self.nonlinear_phase(u, 0.5 * dt);
        self.work = self.model.operator.complex_shifted_apply(-z, u);
        self.factor.as_ref().unwrap().solve_in_place(&mut self.work).map_err(GridError::from)?;
        u.copy_from_slice(&self.work);
        Ok(first + self.nonlinear_phase(u, 0.5 * dt))
    }
}

pub fn step(u: &RadialField, dt: f64, params: &ProblemParams, spec: &PotentialSpec) -> Result<RadialField, EvolveError> {
    let model = Model::new(*params, *spec, u.grid.clone())?;
    let mut out = u.clone();
    Stepper::new(&model).step(&mut out.values, dt)?;
    Ok(out)
}

fn sample(model: &Model, u: &RadialField, t: f64) -> Result<Sample, EvolveError> {
    let rep = model.evaluate(u)?;
    let n = model.params.dim();
    Ok(Sample {
        t,
        mass: rep.mass,
        energy: rep.energy,
        grad_norm: rep.gradient_sq.sqrt(),
        virial: rep.virial,
        k_n2: k_from_report(&rep, &model.params, n, 2.0),
        variance: model.variance(u),
        nehari: rep.nehari,
    })
}

/// Second derivative of the interpolating parabola through three samples.
fn second_difference(t: [f64; 3], y: [f64; 3]) -> f64 {
    let h1 = t[1] - t[0];
    let h2 = t[2] - t[1];
    2.0 * ((y[2] - y[1]) / h2 - (y[1] - y[0]) / h1) / (h1 + h2)
}

/// Variance second differences over the last `window` samples are all
/// negative (needs at least three samples).
fn trailing_concave(trace: &EvolutionTrace, window: usize) -> bool {
    let n = trace.len();
    if n < 3 {
        return false;
    }
    let start = n.saturating_sub(window);
    (start..n - 2).all(|k| {
        let t = [trace.times[k], trace.times[k + 1], trace.times[k + 2]];
        let y = [trace.variance[k], trace.variance[k + 1], trace.variance[k + 2]];
        second_difference(t, y) < 0.0
    })
}

pub fn evolve(
    u0: &RadialField,
    cfg: &EvolutionConfig,
    params: &ProblemParams,
    spec: &PotentialSpec,
) -> Result<EvolutionTrace, EvolveError> {
    let model = Model::new(*params, *spec, u0.grid.clone())?;
    evolve_model(u0, cfg, &model, |_, _| {})
}

/// Runs the flow, calling `observer` with every recorded sample and the
/// field at that time.
pub fn evolve_model(
    u0: &RadialField,
    cfg: &EvolutionConfig,
    model: &Model,
    mut observer: impl FnMut(&Sample, &RadialField),
) -> Result<EvolutionTrace, EvolveError> {
    cfg.validate()?;
    if !u0.is_finite() {
        return Err(EvolveError::NonFinite(0.0));
    }
    let mut trace = EvolutionTrace::default();
    let mut u = u0.clone();
    let last = u.len() - 1;
    let first = sample(model, &u, 0.0)?;
    observer(&first, &u);
    trace.push(&first);
    trace.max_edge_amplitude = u.values[last].norm();
    let g0 = first.grad_norm * first.grad_norm;
    let trigger = cfg.blowup_factor * first.grad_norm;
    let mut stepper = Stepper::new(model);
    let mut t = 0.0;
    let mut since_sample = 0;
    let mut grad_sq = g0;
    let total_fixed = (cfg.t_end / cfg.dt0).round() as usize;

    loop {
        let mut dt = if cfg.adaptive && grad_sq > 0.0 && g0 > 0.0 { cfg.dt0 * (g0 / grad_sq).min(1.0) } else { cfg.dt0 };
        if dt < cfg.dt_min {
            let s = sample(model, &u, t)?;
            if trace.times.last() != Some(&t) {
                observer(&s, &u);
                trace.push(&s);
            }
            trace.events.push(Event::StepFloorHit { t, dt });
            break;
        }
        let remaining = cfg.t_end - t;
        if !cfg.adaptive {
            // uniform steps land exactly on multiples of dt0
            dt = cfg.dt0;
        } else if dt >= remaining {
            dt = remaining;
        }
        let phase = stepper.step(&mut u.values, dt)?;
        trace.max_phase_step = trace.max_phase_step.max(phase);
        trace.steps += 1;
        since_sample += 1;
        t = if cfg.adaptive { t + dt } else { trace.steps as f64 * cfg.dt0 };
        if !u.is_finite() {
            return Err(EvolveError::NonFinite(t));
        }
        trace.max_edge_amplitude = trace.max_edge_amplitude.max(u.values[last].norm());
        grad_sq = u.gradient_norm_sq();
        let done = if cfg.adaptive { cfg.t_end - t <= 1e-12 * cfg.t_end } else { trace.steps >= total_fixed };
        let armed = grad_sq.sqrt() >= trigger;
        if since_sample >= cfg.sample_every || done || armed {
            since_sample = 0;
            let s = sample(model, &u, t)?;
            observer(&s, &u);
            trace.push(&s);
            if armed && trailing_concave(&trace, 10) {
                trace.events.push(Event::BlowupTriggered { t, grad_ratio: s.grad_norm / first.grad_norm });
                break;
            }
        }
        if done {
            trace.events.push(Event::Completed { t });
            break;
        }
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VirialDefect {
    pub max_defect: f64,
    pub at_time: f64,
    pub floor: f64,
}

/// Fraction of `2(2−b)²‖∇u₀‖²` used as the floor of the defect denominator.
pub const VIRIAL_FLOOR_FRACTION: f64 = 1e-2;

/// Compares second differences of `‖u‖²_{2−b,2}` with `2(2−b)² P` at every
/// interior sample.
pub fn virial_check(trace: &EvolutionTrace, params: &ProblemParams) -> Result<VirialDefect, EvolveError> {
    virial_check_floor(trace, params, None)
}

pub fn virial_check_floor(
    trace: &EvolutionTrace,
    params: &ProblemParams,
    floor: Option<f64>,
) -> Result<VirialDefect, EvolveError> {
    let n = trace.len();
    if n < 3 {
        return Err(EvolveError::InsufficientSamples(n));
    }
    let c = 2.0 * params.order() * params.order();
    let floor = floor.unwrap_or(VIRIAL_FLOOR_FRACTION * c * trace.grad_norm[0] * trace.grad_norm[0]);
    let mut worst = VirialDefect { max_defect: 0.0, at_time: trace.times[1], floor };
    for k in 1..n - 1 {
        let d2 = second_difference(
            [trace.times[k - 1], trace.times[k], trace.times[k + 1]],
            [trace.variance[k - 1], trace.variance[k], trace.variance[k + 1]],
        );
        let rhs = c * trace.virial[k];
        let defect = (d2 - rhs).abs() / rhs.abs().max(floor);
        if defect > worst.max_defect {
            worst.max_defect = defect;
            worst.at_time = trace.times[k];
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(b: f64, cells: usize) -> Model {
        let params = ProblemParams::new(3, b, 0.0, 2.0, 1.0);
        let g = RadialGrid::build(3, b, 30.0, cells, 2.0).unwrap();
        Model::new(params, PotentialSpec::Zero, g).unwrap()
    }

    #[test]
    fn zero_stays_zero() {
        let m = model(0.0, 128);
        let u = RadialField::zeros(m.grid.clone());
        let v = step(&u, 1e-2, &m.params, &m.potential).unwrap();
        assert!(v.values.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn unitary_and_reversible() {
        let m = model(-0.5, 512);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let values = m
                .grid
                .nodes
                .iter()
                .map(|r| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * (-r * r / 4.0).exp())
                .collect();
            let u = RadialField::new(m.grid.clone(), values).unwrap();
            let mut stepper = Stepper::new(&m);
            let mut v = u.clone();
            stepper.step(&mut v.values, 1e-2).unwrap();
            assert!((v.mass() - u.mass()).abs() < 1e-13 * u.mass());
            stepper.step(&mut v.values, -1e-2).unwrap();
            let err = v.values.iter().zip(&u.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-12 * u.sup_norm(), "{err}");
        }
    }

    #[test]
    fn config_validation() {
        let bad = EvolutionConfig { dt0: 1e-10, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = EvolutionConfig { blowup_factor: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(EvolutionConfig::default().validate().is_ok());
    }

    #[test]
    fn gaussian_run_records_every_series() {
        let m = model(0.0, 512);
        let u = RadialField::from_real_fn(m.grid.clone(), |r| 0.5 * (-r * r / 2.0).exp());
        let cfg = EvolutionConfig { dt0: 1e-2, t_end: 0.5, sample_every: 5, adaptive: false, ..Default::default() };
        let trace = evolve(&u, &cfg, &m.params, &m.potential).unwrap();
        assert_eq!(trace.steps, 50);
        assert_eq!(trace.len(), 11);
        assert!(trace.completed());
        assert!((trace.times.last().unwrap() - 0.5).abs() < 1e-15);
        assert!(trace.max_mass_drift() < 1e-12);
        let mut csv = Vec::new();
        trace.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("t,mass,energy,grad_norm,P,K_n2,variance,nehari\n"));
        assert_eq!(text.lines().count(), 12);
        let d = virial_check(&trace, &m.params).unwrap();
        assert!(d.max_defect.is_finite());
    }

    #[test]
    fn virial_check_needs_three_samples() {
        let m = model(0.0, 64);
        let mut trace = EvolutionTrace::default();
        trace.push(&Sample { t: 0.0, mass: 1.0, energy: 0.0, grad_norm: 1.0, virial: 0.0, k_n2: 0.0, variance: 1.0, nehari: 0.0 });
        assert!(matches!(virial_check(&trace, &m.params), Err(EvolveError::InsufficientSamples(1))));
    }

    #[test]
    fn second_difference_is_exact_on_parabolas() {
        let f = |t: f64| 3.0 * t * t - t + 2.0;
        let t = [0.1, 0.25, 0.7];
        assert!((second_difference(t, t.map(f)) - 6.0).abs() < 1e-12);
    }
}
