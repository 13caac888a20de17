//! The acceptance suite: each criterion returns its measured values next to
//! the tolerances they are held to.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::classify::{self, Outcome};
use crate::evolve::{evolve_model, virial_check, EvolutionConfig, EvolutionTrace};
use crate::functionals::{k_from_report, scale_alpha_beta, scale_soliton, Model};
use crate::grid::{RadialField, RadialGrid};
use crate::groundstate::{
    action_scaling_exponent, petviashvili_solve, rescale_profile, shooting_solve, shooting_solve_with, GroundState,
    ShootingOptions,
};
use crate::params::ProblemParams;
use crate::potential::{check_assumptions, default_radii, PotentialSpec, Verdict};

/// The three elliptic fixtures `(n, b, c, p)` at `ω = 1`.
pub const ELLIPTIC_FIXTURES: [(u32, f64, f64, f64); 3] = [(3, 0.0, 0.0, 2.0), (3, -0.5, -0.5, 2.0), (4, -1.0, -1.0, 2.5)];
/// Mass-critical and intercritical dichotomy fixtures.
pub const MASS_CRITICAL: (u32, f64, f64, f64) = (3, 0.0, 0.0, 4.0 / 3.0);
pub const INTERCRITICAL: (u32, f64, f64, f64) = (3, 0.0, 0.0, 2.0);
/// Admissible for the blow-up half of the sets route: `c ≤ b < 0`,
/// `p_c = 5.7 ≤ 2c(2−b)/b = 6`.
pub const N_MINUS: (u32, f64, f64, f64) = (3, -0.5, -0.6, 1.5);
pub const N_MINUS_AMPLITUDE: f64 = 1.3;

/// Acceptance mesh.
pub const R_MAX: f64 = 30.0;
pub const CELLS: usize = 4096;
pub const GRADING: f64 = 2.0;
/// Mesh for the two-way threshold identities, which are discretization
/// limited at `O(N^{-2})`.
pub const FINE_CELLS: usize = 16384;

pub fn fixture_params(f: (u32, f64, f64, f64)) -> ProblemParams {
    ProblemParams::new(f.0, f.1, f.2, f.3, 1.0)
}

pub fn fixture_grid(params: &ProblemParams, cells: usize) -> Arc<RadialGrid> {
    RadialGrid::build(params.n, params.b, R_MAX, cells, GRADING).expect("fixture grid")
}

/// Uniform mesh for the `N⁻` flow. With `c < 0` the nonlinear phase
/// `r^c |u|^p` is singular, and on a graded mesh the innermost cells make the
/// splitting error explode long before any collapse.
pub fn n_minus_grid() -> Arc<RadialGrid> {
    RadialGrid::build(N_MINUS.0, N_MINUS.1, 15.0, CELLS, 1.0).expect("fixture grid")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Bound {
    Below(f64),
    AtLeast(f64),
    Within(f64, f64),
    Flag,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: Bound,
    pub passed: bool,
}

impl Check {
    pub fn below(name: impl Into<String>, measured: f64, tol: f64) -> Self {
        Self { name: name.into(), measured, bound: Bound::Below(tol), passed: measured < tol }
    }

    pub fn at_least(name: impl Into<String>, measured: f64, min: f64) -> Self {
        Self { name: name.into(), measured, bound: Bound::AtLeast(min), passed: measured >= min }
    }

    pub fn within(name: impl Into<String>, measured: f64, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), measured, bound: Bound::Within(lo, hi), passed: measured >= lo && measured <= hi }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self { name: name.into(), measured: if ok { 1.0 } else { 0.0 }, bound: Bound::Flag, passed: ok }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "ok  " } else { "FAIL" };
        match self.bound {
            Bound::Below(t) => write!(f, "{tag} {}: {:.3e} < {:.1e}", self.name, self.measured, t),
            Bound::AtLeast(t) => write!(f, "{tag} {}: {:.3e} >= {:.3e}", self.name, self.measured, t),
            Bound::Within(lo, hi) => write!(f, "{tag} {}: {:.4} in [{lo}, {hi}]", self.name, self.measured),
            Bound::Flag => write!(f, "{tag} {}", self.name),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub checks: Vec<Check>,
    pub error: Option<String>,
    pub seconds: f64,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        self.error.is_none() && !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn summary_line(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        match &self.error {
            Some(e) => format!("{status} criterion {:>2}: {} (error: {e})", self.id, self.title),
            None => format!(
                "{status} criterion {:>2}: {} ({} checks, {failed} failed, {:.1}s)",
                self.id,
                self.title,
                self.checks.len(),
                self.seconds
            ),
        }
    }
}

type Outcomes = Result<Vec<Check>, String>;

fn err<E: fmt::Display>(e: E) -> String {
    e.to_string()
}

fn label(p: &ProblemParams) -> String {
    format!("(n={}, b={}, c={}, p={:.4})", p.n, p.b, p.c, p.p)
}

fn solve(params: &ProblemParams, cells: usize) -> Result<GroundState, String> {
    petviashvili_solve(params, &fixture_grid(params, cells), None).map_err(err)
}

fn rel_linf(a: &RadialField, b: &RadialField) -> f64 {
    let d = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    d / a.sup_norm()
}

pub const TITLES: [&str; 12] = [
    "Pohozaev identities",
    "Petviashvili vs shooting oracle",
    "critical-point annihilation of K",
    "K as the derivative of S along scalings",
    "sharp Gagliardo-Nirenberg constant",
    "conservation of mass and energy",
    "virial identity",
    "standing wave",
    "global/blow-up dichotomy",
    "frequency scaling and optimal frequency",
    "potential assumption checker",
    "N- flow invariance",
];

pub fn run_criterion(id: u8) -> CriterionReport {
    let start = Instant::now();
    let result = match id {
        1 => pohozaev(),
        2 => oracle(),
        3 => annihilation(),
        4 => k_derivative(),
        5 => sharp_gn(),
        6 => conservation(),
        7 => virial(),
        8 => standing_wave(),
        9 => dichotomy(),
        10 => frequency(),
        11 => assumptions(),
        12 => n_minus(),
        _ => Err(format!("no criterion {id}")),
    };
    let title = TITLES.get((id as usize).wrapping_sub(1)).copied().unwrap_or("unknown");
    let seconds = start.elapsed().as_secs_f64();
    match result {
        Ok(checks) => CriterionReport { id, title, checks, error: None, seconds },
        Err(e) => CriterionReport { id, title, checks: Vec::new(), error: Some(e), seconds },
    }
}

/// All criteria, in order, run concurrently.
pub fn run_all() -> Vec<CriterionReport> {
    (1..=12u8).into_par_iter().map(run_criterion).collect()
}

fn pohozaev() -> Outcomes {
    let mut out = Vec::new();
    for f in ELLIPTIC_FIXTURES {
        let params = fixture_params(f);
        let l = label(&params);
        let mut res = Vec::new();
        for cells in [2048, 4096, 8192] {
            let t = Instant::now();
            let gs = solve(&params, cells)?;
            if cells == CELLS {
                out.push(Check::below(format!("{l} solve seconds at N={cells}"), t.elapsed().as_secs_f64(), 10.0));
                out.push(Check::below(format!("{l} res1 at N={cells}"), gs.pohozaev_res.0, 1e-4));
                out.push(Check::below(format!("{l} res2 at N={cells}"), gs.pohozaev_res.1, 1e-4));
                out.push(Check::below(format!("{l} fixed-point residual"), gs.residual, 1e-8));
                out.push(Check::below(format!("{l} |M_k - 1|"), (gs.stabilizer - 1.0).abs(), 1e-10));
                out.push(Check::flag(format!("{l} m_omega > 0"), gs.m_omega > 0.0));
            }
            res.push(gs.pohozaev_res);
        }
        for k in 0..2 {
            let (n0, n1) = (2048 << k, 4096 << k);
            out.push(Check::at_least(format!("{l} res1 shrink N={n0}->{n1}"), res[k].0 / res[k + 1].0, 3.5));
            out.push(Check::at_least(format!("{l} res2 shrink N={n0}->{n1}"), res[k].1 / res[k + 1].1, 3.5));
        }
    }
    Ok(out)
}

fn oracle() -> Outcomes {
    let mut out = Vec::new();
    for f in ELLIPTIC_FIXTURES {
        let params = fixture_params(f);
        let l = label(&params);
        let grid = fixture_grid(&params, CELLS);
        let gs = petviashvili_solve(&params, &grid, None).map_err(err)?;
        let shot = shooting_solve(&params, &grid, 1e-14).map_err(err)?;
        out.push(Check::below(format!("{l} relative L-inf profile gap"), rel_linf(&gs.profile, &shot.profile), 1e-3));
        let center = gs.profile.values[0].re;
        out.push(Check::below(format!("{l} centre value gap"), (center - shot.center).abs() / shot.center, 1e-3));
        out.push(Check::below(format!("{l} mass gap"), (gs.report.mass - shot.profile.mass()).abs() / gs.report.mass, 1e-3));
        let half = shooting_solve_with(&params, &grid, ShootingOptions { r0: 5e-7, ..Default::default() }).map_err(err)?;
        out.push(Check::below(format!("{l} q0 change under r0 halving"), (half.center - shot.center).abs() / shot.center, 1e-8));
    }
    Ok(out)
}

pub const K_PAIRS: fn(u32) -> [(f64, f64); 4] = |n| [(1.0, 0.0), (n as f64, 2.0), (2.0, 1.0), (3.0, 1.0)];

fn annihilation() -> Outcomes {
    let mut out = Vec::new();
    for f in ELLIPTIC_FIXTURES {
        let params = fixture_params(f);
        let gs = solve(&params, CELLS)?;
        for (a, b) in K_PAIRS(params.n) {
            let k = k_from_report(&gs.report, &params, a, b);
            out.push(Check::below(format!("{} |K^({a},{b})(Q)|/L(Q)", label(&params)), k.abs() / gs.report.l, 1e-4));
        }
        out.push(Check::below(
            format!("{} |P(Q)|/grad_sq(Q)", label(&params)),
            gs.report.virial.abs() / gs.report.gradient_sq,
            1e-4,
        ));
    }
    Ok(out)
}

/// Sum of two or three complex Gaussian bumps with random widths, centres
/// and phases.
pub fn random_field(grid: &Arc<RadialGrid>, rng: &mut ChaCha8Rng) -> RadialField {
    let terms: Vec<(Complex64, f64, f64)> = (0..rng.gen_range(2..=3))
        .map(|_| {
            let amp = Complex64::from_polar(rng.gen_range(0.3..1.5), rng.gen_range(0.0..std::f64::consts::TAU));
            (amp, rng.gen_range(0.0..2.0), rng.gen_range(0.6..1.8))
        })
        .collect();
    RadialField::from_fn(grid.clone(), |r| {
        terms.iter().map(|(a, c, w)| a * (-((r - c) / w).powi(2) / 2.0).exp()).sum()
    })
}

/// Central difference of `S` along `e^{αλ} u(e^{βλ} ·)`.
pub fn fd_derivative(model: &Model, u: &RadialField, alpha: f64, beta: f64, h: f64) -> Result<f64, String> {
    let plus = scale_alpha_beta(u, alpha, beta, h).map_err(err)?;
    let minus = scale_alpha_beta(u, alpha, beta, -h).map_err(err)?;
    Ok((model.action(&plus).map_err(err)? - model.action(&minus).map_err(err)?) / (2.0 * h))
}

fn k_derivative() -> Outcomes {
    let params = fixture_params(ELLIPTIC_FIXTURES[1]);
    let grid = fixture_grid(&params, FINE_CELLS);
    let zero = Model::new(params, PotentialSpec::Zero, grid.clone()).map_err(err)?;
    let bump = Model::new(params, PotentialSpec::SmoothBump { a: 1.0, s: 3.0 }, grid.clone()).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst_richardson = 0.0f64;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..20 {
        let model = if i < 10 { &zero } else { &bump };
        let u = random_field(&grid, &mut rng);
        for (a, b) in K_PAIRS(params.n) {
            let k = model.k_functional(&u, a, b).map_err(err)?;
            let d1 = fd_derivative(model, &u, a, b, 1e-3)?;
            let d2 = fd_derivative(model, &u, a, b, 5e-4)?;
            let extrapolated = (4.0 * d2 - d1) / 3.0;
            worst_richardson = worst_richardson.max((extrapolated - k).abs() / k.abs());
            // where truncation is visible above interpolation noise it must be O(h²)
            if (d1 - k).abs() > 1e-5 * k.abs() {
                let ratio = (d1 - k) / (d2 - k);
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
        }
    }
    let mut out = vec![Check::below("worst relative gap of the h, h/2 Richardson value, 20 fields x 4 pairs", worst_richardson, 1e-5)];
    if lo.is_finite() {
        out.push(Check::within("smallest raw error ratio under h halving", lo, 3.5, 4.5));
        out.push(Check::within("largest raw error ratio under h halving", hi, 3.5, 4.5));
    }
    Ok(out)
}

fn sharp_gn() -> Outcomes {
    let mut out = Vec::new();
    for f in ELLIPTIC_FIXTURES {
        let params = fixture_params(f);
        let l = label(&params);
        let grid = fixture_grid(&params, FINE_CELLS);
        let gs = petviashvili_solve(&params, &grid, None).map_err(err)?;
        let th = gs.thresholds.ok_or("no thresholds at omega = 1")?;
        let closed = th.c_gn_closed_form.ok_or("closed-form C_GN needs sigma")?;
        out.push(Check::below(format!("{l} R(Q) vs closed-form C_GN"), (th.c_gn_ratio - closed).abs() / closed, 1e-6));
        // goes through ‖Q‖^p, so it inherits the O(N^{-2}) mass quadrature error
        out.push(Check::below(format!("{l} R(Q) vs mass form of C_GN"), (th.c_gn_ratio - gs.c_gn).abs() / gs.c_gn, 1e-5));
        let em = th.em_sigma.unwrap();
        let em_closed = th.em_sigma_closed_form.unwrap();
        out.push(Check::below(format!("{l} E M^sigma two-way"), (em - em_closed).abs() / em_closed.abs(), 1e-6));
        let model = Model::new(params, PotentialSpec::Zero, grid.clone()).map_err(err)?;
        let mut rng = ChaCha8Rng::seed_from_u64(5 + params.n as u64);
        let q_sup = gs.profile.sup_norm();
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..100 {
            // unit-height bump relative to Q, ε = 1e-3
            let (c, w) = (rng.gen_range(0.0..4.0), rng.gen_range(0.3..2.0));
            let eps = 1e-3 * q_sup * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let g = RadialField::from_real_fn(grid.clone(), |r| eps * (-((r - c) / w).powi(2)).exp());
            let r = model.gn_ratio(&gs.profile.add(&g).map_err(err)?).map_err(err)?;
            worst = worst.max(r / th.c_gn_ratio - 1.0);
        }
        out.push(Check::below(format!("{l} max R(Q+eg)/R(Q) - 1 over 100 perturbations"), worst, 1e-6));
    }
    Ok(out)
}

fn gaussian(grid: &Arc<RadialGrid>, amp: f64) -> RadialField {
    RadialField::from_real_fn(grid.clone(), |r| amp * (-r * r / 2.0).exp())
}

fn run(model: &Model, u0: &RadialField, cfg: EvolutionConfig) -> Result<EvolutionTrace, String> {
    evolve_model(u0, &cfg, model, |_, _| {}).map_err(err)
}

fn fixed(dt0: f64, t_end: f64, sample_every: usize) -> EvolutionConfig {
    EvolutionConfig { dt0, t_end, sample_every, adaptive: false, ..Default::default() }
}

fn conservation() -> Outcomes {
    let mut out = Vec::new();
    for b in [0.0, -0.5] {
        let params = ProblemParams::new(3, b, 0.0, 2.0, 1.0);
        let grid = fixture_grid(&params, CELLS);
        let model = Model::new(params, PotentialSpec::Zero, grid.clone()).map_err(err)?;
        let u0 = gaussian(&grid, 1.0);
        let traces: Vec<EvolutionTrace> =
            [1e-3, 5e-4].par_iter().map(|dt| run(&model, &u0, fixed(*dt, 1.0, 1))).collect::<Result<_, _>>()?;
        for (tr, dt) in traces.iter().zip(["1e-3", "5e-4"]) {
            out.push(Check::below(format!("b={b} mass drift, dt={dt}"), tr.max_mass_drift(), 1e-12));
        }
        out.push(Check::below(format!("b={b} energy drift over [0,1], dt=1e-3"), traces[0].max_energy_drift(), 1e-6));
        out.push(Check::within(
            format!("b={b} energy drift ratio under dt halving"),
            traces[0].max_energy_drift() / traces[1].max_energy_drift(),
            3.5,
            4.5,
        ));
    }
    // a potential and a singular weight, mass only
    let params = ProblemParams::new(3, -0.5, -0.5, 2.0, 1.0);
    let grid = fixture_grid(&params, CELLS);
    let model = Model::new(params, PotentialSpec::InversePower { a: 0.5, s: 1.0 }, grid.clone()).map_err(err)?;
    let tr = run(&model, &gaussian(&grid, 0.8), fixed(1e-3, 1.0, 10))?;
    out.push(Check::below("b=-0.5, c=-0.5, V=0.5/r mass drift", tr.max_mass_drift(), 1e-12));
    Ok(out)
}

fn virial() -> Outcomes {
    let mut out = Vec::new();
    for (b, tol) in [(0.0, 1e-2), (-0.5, 2e-2)] {
        let params = ProblemParams::new(3, b, 0.0, 2.0, 1.0);
        let grid = fixture_grid(&params, CELLS);
        let model = Model::new(params, PotentialSpec::Zero, grid.clone()).map_err(err)?;
        let tr = run(&model, &gaussian(&grid, 1.0), fixed(1e-4, 1.0, 100))?;
        let d = virial_check(&tr, &params).map_err(err)?;
        out.push(Check::below(format!("b={b} virial defect (spacing 1e-2, dt 1e-4)"), d.max_defect, tol));
        out.push(Check::below(format!("b={b} mass drift"), tr.max_mass_drift(), 1e-12));
    }
    Ok(out)
}

/// Standing waves with `b = c = 0`. Intercritical ground states are
/// orbitally unstable, so their runs amplify the `O(dt²)` splitting error
/// exponentially; with `c < 0` the nonlinear frequency is unbounded at the
/// origin. Neither measures the scheme, so both are left out.
pub const STANDING_WAVES: [(u32, f64, f64, f64); 2] = [MASS_CRITICAL, (3, 0.0, 0.0, 1.0)];

fn standing_wave() -> Outcomes {
    let mut out = Vec::new();
    for f in STANDING_WAVES {
        let params = fixture_params(f);
        let l = label(&params);
        let grid = fixture_grid(&params, CELLS);
        let gs = petviashvili_solve(&params, &grid, None).map_err(err)?;
        let model = Model::new(params, PotentialSpec::Zero, grid.clone()).map_err(err)?;
        let q = gs.profile.clone();
        let q_sup = q.sup_norm();
        let mut modulus_gap = 0.0f64;
        let mut virial_max = 0.0f64;
        let tr = evolve_model(&q, &fixed(1e-3, 1.0, 10), &model, |s, u| {
            let gap = u.values.iter().zip(&q.values).map(|(a, b)| (a.norm() - b.re).abs()).fold(0.0, f64::max);
            modulus_gap = modulus_gap.max(gap / q_sup);
            virial_max = virial_max.max(s.virial.abs());
        })
        .map_err(err)?;
        let d = virial_check(&tr, &params).map_err(err)?;
        out.push(Check::below(format!("{l} sup_t | |u(t)| - Q |_inf / |Q|_inf"), modulus_gap, 1e-3));
        out.push(Check::below(format!("{l} sup_t |P(u(t))| / grad_sq(Q)"), virial_max / gs.report.gradient_sq, 1e-3));
        out.push(Check::below(format!("{l} virial defect against floor"), d.max_defect, 1e-2));
        out.push(Check::below(format!("{l} mass drift"), tr.max_mass_drift(), 1e-12));
        out.push(Check::flag(format!("{l} run completed"), tr.completed()));
    }
    Ok(out)
}

/// Trailing variance second differences of a trace, oldest first.
pub fn trailing_second_differences(tr: &EvolutionTrace, window: usize) -> Vec<f64> {
    let n = tr.len();
    let start = n.saturating_sub(window);
    (start..n.saturating_sub(2))
        .map(|k| {
            let (t0, t1, t2) = (tr.times[k], tr.times[k + 1], tr.times[k + 2]);
            let (y0, y1, y2) = (tr.variance[k], tr.variance[k + 1], tr.variance[k + 2]);
            2.0 * ((y2 - y1) / (t2 - t1) - (y1 - y0) / (t1 - t0)) / (t2 - t0)
        })
        .collect()
}

fn dichotomy() -> Outcomes {
    let mut out = Vec::new();
    let radii = default_radii();
    // (fixture, alpha, expected verdict, entry id, evolution step)
    let cases = [
        (MASS_CRITICAL, 0.9, Outcome::GlobalCandidate, "mass_critical_threshold", 1e-3),
        (MASS_CRITICAL, 1.2, Outcome::BlowupCandidate, "mass_critical_threshold", 1e-3),
        (MASS_CRITICAL, 1.0, Outcome::Undetermined, "mass_critical_threshold", 0.0),
        (INTERCRITICAL, 0.5, Outcome::GlobalCandidate, "intercritical_threshold", 1e-3),
        (INTERCRITICAL, 1.5, Outcome::BlowupCandidate, "intercritical_threshold", 1e-4),
        (INTERCRITICAL, 1.0, Outcome::Undetermined, "intercritical_threshold", 0.0),
    ];
    let results: Vec<Result<Vec<Check>, String>> = cases
        .par_iter()
        .map(|&(f, alpha, expected, id, dt0)| {
            let params = fixture_params(f);
            let grid = fixture_grid(&params, CELLS);
            let gs = petviashvili_solve(&params, &grid, None).map_err(err)?;
            let th = gs.thresholds.ok_or("missing thresholds")?;
            let model = Model::new(params, PotentialSpec::Zero, grid.clone()).map_err(err)?;
            let report = check_assumptions(&PotentialSpec::Zero, &params, &radii);
            let u0 = gs.profile.scaled_real(alpha);
            let cls = classify::classify_all(&u0, &model, &report, &th, None).map_err(err)?;
            let entry = cls.get(id).ok_or("missing entry")?;
            let l = format!("{} alpha={alpha}", label(&params));
            let mut checks = vec![Check::flag(format!("{l} verdict {:?} (expected {expected:?})", entry.verdict), entry.verdict == expected)];
            if dt0 == 0.0 {
                return Ok(checks);
            }
            let cfg = EvolutionConfig { dt0, t_end: 5.0, sample_every: 10, adaptive: true, ..Default::default() };
            let tr = run(&model, &u0, cfg)?;
            checks.push(Check::below(format!("{l} mass drift"), tr.max_mass_drift(), 1e-12));
            match expected {
                Outcome::GlobalCandidate => {
                    checks.push(Check::flag(format!("{l} completes t in [0,5]"), tr.completed()));
                    checks.push(Check::below(format!("{l} gradient growth"), tr.grad_growth(), 2.0));
                }
                _ => {
                    checks.push(Check::flag(format!("{l} blow-up trigger at t={:?}", tr.blowup_time()), tr.blowup_time().is_some()));
                    let d2 = trailing_second_differences(&tr, 10);
                    let worst = d2.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    checks.push(Check::flag(
                        format!("{l} trailing variance second differences negative (max {worst:.3e})"),
                        !d2.is_empty() && worst < 0.0,
                    ));
                }
            }
            Ok(checks)
        })
        .collect();
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// Scaled, amplified and perturbed copies of `Q₁` for the equivalence tests.
pub fn constructed_data(q1: &RadialField, params: &ProblemParams, rng: &mut ChaCha8Rng) -> Result<RadialField, String> {
    let alpha = rng.gen_range(0.3..1.6);
    let lambda = rng.gen_range(0.7..1.4);
    let base = scale_soliton(q1, lambda, params).map_err(err)?.scaled_real(alpha);
    // an oscillatory bump raises the kinetic energy without much mass
    let (amp, k) = (rng.gen_range(0.0..1.0), rng.gen_range(1.0..6.0));
    let bump = RadialField::from_real_fn(q1.grid.clone(), |r| amp * (k * r).cos() * (-r * r).exp());
    base.add(&bump).map_err(err)
}

fn frequency() -> Outcomes {
    let mut out = Vec::new();
    for f in [INTERCRITICAL, N_MINUS] {
        let params = fixture_params(f);
        let l = label(&params);
        let grid = fixture_grid(&params, CELLS);
        let gs1 = petviashvili_solve(&params, &grid, None).map_err(err)?;
        let th = gs1.thresholds.ok_or("missing thresholds")?;
        let kappa = action_scaling_exponent(&params);
        for omega in [0.5, 2.0] {
            let gs = petviashvili_solve(&params.with_omega(omega), &grid, None).map_err(err)?;
            let predicted = omega.powf(kappa) * th.action;
            out.push(Check::below(format!("{l} S(Q_w) scaling at w={omega}"), (gs.m_omega - predicted).abs() / predicted, 1e-3));
        }
        let gs2 = petviashvili_solve(&params.with_omega(2.0), &grid, None).map_err(err)?;
        out.push(Check::below(
            format!("{l} Q_2 direct vs rescaled Q_1 (L-inf)"),
            rel_linf(&gs2.profile, &rescale_profile(&gs1.profile, &params, 2.0)),
            1e-3,
        ));
        let shot4 = shooting_solve(&params.with_omega(4.0), &grid, 1e-14).map_err(err)?;
        out.push(Check::below(
            format!("{l} shooting at w=4 vs rescaled Q_1 (L-inf)"),
            rel_linf(&shot4.profile, &rescale_profile(&gs1.profile, &params, 4.0)),
            1e-3,
        ));

        let model = Model::new(params, PotentialSpec::Zero, grid.clone()).map_err(err)?;
        let mut rng = ChaCha8Rng::seed_from_u64(10 + params.n as u64 + (100.0 * -params.c) as u64);
        let mut disagreements = 0;
        let mut bands = 0;
        let mut worst_stationarity = 0.0f64;
        let mut below = 0;
        for _ in 0..20 {
            let u0 = constructed_data(&gs1.profile, &params, &mut rng)?;
            let fr = classify::optimal_frequency(&u0, &model, &th).map_err(err)?;
            if fr.band {
                bands += 1;
            } else if !fr.agree {
                disagreements += 1;
            }
            if fr.em_below == Some(true) {
                below += 1;
            }
            let rep = model.evaluate(&u0).map_err(err)?;
            let d = 1e-4 * fr.omega0;
            let slope = (classify::frequency_gap(&model, &rep, &th, fr.omega0 + d)
                - classify::frequency_gap(&model, &rep, &th, fr.omega0 - d))
                / (2.0 * d);
            worst_stationarity = worst_stationarity.max(slope.abs() / (fr.f_omega0.abs() / fr.omega0));
        }
        out.push(Check::below(format!("{l} equivalence disagreements on 20 data sets ({bands} in band)"), disagreements as f64, 0.5));
        out.push(Check::flag(format!("{l} data sets on both sides of the threshold ({below} below)"), below > 0 && below < 20 - bands));
        out.push(Check::below(format!("{l} |f'(w0)| / (|f(w0)|/w0)"), worst_stationarity, 1e-6));
    }
    Ok(out)
}

fn assumptions() -> Outcomes {
    let radii = default_radii();
    let mut out = Vec::new();
    for b in [0.0, -0.5] {
        let params = ProblemParams::new(3, b, 0.0, 2.0, 1.0);
        let rep = check_assumptions(&PotentialSpec::Zero, &params, &radii);
        out.push(Check::flag(format!("b={b} zero potential: (I)-(IV) hold"), rep.all_hold()));
        out.push(Check::flag(format!("b={b} zero potential: omega1 = 0"), rep.omega1 == 0.0));
    }
    let b = -0.5;
    let params = ProblemParams::new(3, b, 0.0, 2.0, 1.0);
    let rep = check_assumptions(&PotentialSpec::InversePower { a: 1.0, s: 2.0 - b }, &params, &radii);
    let tail_witness = matches!(rep.holds_II, Verdict::Fails { witness_radius, .. } if witness_radius >= radii[radii.len() - 1]);
    out.push(Check::flag("inverse power s=2-b: (II) fails at the outermost radius", tail_witness));
    out.push(Check::flag("inverse power s=2-b: tail exponent -1", rep.integrability.tail_exponent == Some(-1.0)));
    out.push(Check::flag("inverse power s=2-b: (I), (III), (IV) hold", rep.holds_I.holds() && rep.holds_III.holds() && rep.holds_IV.holds()));
    for b in [0.0, -0.5] {
        let params = ProblemParams::new(3, b, 0.0, 2.0, 1.0);
        let rep = check_assumptions(&PotentialSpec::ConstPlusGaussian { a: 1.0 }, &params, &radii);
        let witness = match rep.holds_IV {
            Verdict::Fails { witness_radius, .. } => witness_radius,
            _ => f64::NAN,
        };
        out.push(Check::flag(format!("b={b} const+gaussian: (IV) fails with a witness"), witness.is_finite()));
        if witness.is_finite() {
            out.push(Check::at_least(format!("b={b} const+gaussian: witness r^2"), witness * witness, 2.0 - b / 2.0));
        }
        out.push(Check::flag(format!("b={b} const+gaussian: (I), (II), (III) hold"), rep.holds_I.holds() && rep.holds_II.holds() && rep.holds_III.holds()));
    }
    Ok(out)
}

fn n_minus() -> Outcomes {
    let params = fixture_params(N_MINUS);
    let grid = n_minus_grid();
    let gs = petviashvili_solve(&params, &grid, None).map_err(err)?;
    let model = Model::new(params, PotentialSpec::Zero, grid.clone()).map_err(err)?;
    let report = check_assumptions(&PotentialSpec::Zero, &params, &default_radii());
    let u0 = gs.profile.scaled_real(N_MINUS_AMPLITUDE);
    let entry = classify::classify_sets(&u0, &model, &report, gs.m_omega, params.omega).map_err(err)?;
    let rep = model.evaluate(&u0).map_err(err)?;
    let k0 = k_from_report(&rep, &params, params.dim(), 2.0);
    let gap = -2.0 * params.order() * (gs.m_omega - rep.action);
    let cfg = EvolutionConfig { dt0: 1e-3, t_end: 5.0, sample_every: 10, adaptive: true, ..Default::default() };
    let tr = run(&model, &u0, cfg)?;
    let k_max = tr.k_n2.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(vec![
        Check::flag(format!("sets verdict {:?} is BlowupCandidate", entry.verdict), entry.verdict == Outcome::BlowupCandidate),
        Check::below("S(u0) - m", rep.action - gs.m_omega, 0.0),
        Check::below("gap bound K(u0) - (-2(2-b)(m - S(u0)))", k0 - gap, 0.0),
        Check::below(format!("max K^(n,2)(u(t)) over {} samples", tr.len()), k_max, 0.0),
        Check::flag(format!("blow-up trigger at t={:?}", tr.blowup_time()), tr.blowup_time().is_some()),
        Check::below("mass drift", tr.max_mass_drift(), 1e-12),
    ])
}
