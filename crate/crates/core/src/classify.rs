//! Per-theorem verdicts for concrete initial data.
//!
//! Every strict inequality is evaluated with a relative dead-band; values
//! inside the band are never taken as evidence either way.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::functionals::{k_from_report, FunctionalError, FunctionalReport, Model};
use crate::grid::RadialField;
use crate::groundstate::{action_scaling_exponent, Thresholds};
use crate::params::{Criticality, ParamError};
use crate::potential::AssumptionReport;

pub const DEAD_BAND: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("{0} requires intercritical parameters, got {1:?}")]
    Criticality(&'static str, Criticality),
    #[error("thresholds lack {0}")]
    MissingThreshold(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    GlobalCandidate,
    BlowupCandidate,
    NotApplicable,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">")]
    Above,
    #[serde(rename = "~")]
    Band,
}

/// `lhs` against `rhs`, inside the band when the gap is below
/// `DEAD_BAND · max(|lhs|, |rhs|, scale)`.
pub fn compare(lhs: f64, rhs: f64, scale: f64) -> Relation {
    let tol = DEAD_BAND * lhs.abs().max(rhs.abs()).max(scale.abs());
    if lhs < rhs - tol {
        Relation::Below
    } else if lhs > rhs + tol {
        Relation::Above
    } else {
        Relation::Band
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub relation: Relation,
}

impl Evidence {
    fn new(name: &'static str, lhs: f64, rhs: f64, scale: f64) -> Self {
        Self { name, lhs, rhs, relation: compare(lhs, rhs, scale) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Entry {
    pub id: &'static str,
    pub assumptions: BTreeMap<&'static str, bool>,
    pub verdict: Outcome,
    pub evidence: Vec<Evidence>,
    pub near_boundary: bool,
    pub notes: Vec<String>,
}

impl Entry {
    fn new(id: &'static str) -> Self {
        Self { id, assumptions: BTreeMap::new(), verdict: Outcome::Undetermined, evidence: Vec::new(), near_boundary: false, notes: Vec::new() }
    }

    fn gate(&mut self, key: &'static str, holds: bool) {
        self.assumptions.insert(key, holds);
    }

    fn gates_hold(&self) -> bool {
        self.assumptions.values().all(|v| *v)
    }

    fn push(&mut self, e: Evidence) -> Relation {
        let rel = e.relation;
        if rel == Relation::Band {
            self.near_boundary = true;
        }
        self.evidence.push(e);
        rel
    }

    fn not_applicable(mut self, why: impl Into<String>) -> Self {
        self.verdict = Outcome::NotApplicable;
        self.notes.push(why.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub entries: Vec<Entry>,
}

impl Classification {
    pub fn get(&self, id: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

fn common_ranges(entry: &mut Entry, model: &Model) {
    let p = &model.params;
    entry.gate("n_ge_3", p.n >= 3);
    entry.gate("b_range", 2.0 - p.dim() < p.b && p.b <= 0.0);
    entry.gate("c_ge_b_minus_2", p.c >= p.b - 2.0);
    entry.gate("radial", true);
}

fn finite_variance(model: &Model, u0: &RadialField) -> bool {
    model.variance(u0).is_finite()
}

/// Mass-critical dichotomy: small mass is global, negative energy with
/// finite variance blows up.
pub fn classify_mass_critical(u0: &RadialField, model: &Model, assumptions: &AssumptionReport, th: &Thresholds) -> Result<Entry, ClassifyError> {
    let mut entry = Entry::new("mass_critical_threshold");
    let crit = model.exponents.criticality;
    entry.gate("mass_critical", crit == Criticality::MassCritical);
    common_ranges(&mut entry, model);
    entry.gate("I", assumptions.holds_I.holds());
    if !entry.gates_hold() {
        return Ok(entry.not_applicable("gating assumptions fail"));
    }
    let rep = model.evaluate(u0)?;
    let fv = finite_variance(model, u0);
    entry.gate("finite_variance", fv);
    let mass = entry.push(Evidence::new("mass_norm_vs_ground_state", rep.mass.sqrt(), th.mass_threshold, 0.0));
    let energy = entry.push(Evidence::new("energy_vs_zero", rep.energy, 0.0, rep.grad_norm_v * rep.grad_norm_v));
    entry.verdict = if mass == Relation::Below {
        Outcome::GlobalCandidate
    } else if energy == Relation::Below && fv {
        Outcome::BlowupCandidate
    } else {
        Outcome::Undetermined
    };
    Ok(entry)
}

fn products(model: &Model, rep: &FunctionalReport) -> Result<(f64, f64), ClassifyError> {
    let sigma = model.exponents.sigma.ok_or(ClassifyError::Criticality("sigma", model.exponents.criticality))?;
    Ok((rep.energy * rep.mass.powf(sigma), rep.grad_norm_v * rep.mass.sqrt().powf(sigma)))
}

/// Intercritical thresholds driven by `E M^σ` and `‖u‖_{Ḣ¹_{b,V}} ‖u‖₂^σ`.
pub fn classify_intercritical(u0: &RadialField, model: &Model, assumptions: &AssumptionReport, th: &Thresholds) -> Result<Entry, ClassifyError> {
    let mut entry = Entry::new("intercritical_threshold");
    let crit = model.exponents.criticality;
    entry.gate("intercritical", crit == Criticality::Intercritical);
    common_ranges(&mut entry, model);
    entry.gate("I", assumptions.holds_I.holds());
    entry.gate("II", assumptions.holds_II.holds());
    if !entry.gates_hold() {
        return Ok(entry.not_applicable("gating assumptions fail"));
    }
    let em_sigma = th.em_sigma.ok_or(ClassifyError::MissingThreshold("em_sigma"))?;
    let grad_mass = th.grad_mass.ok_or(ClassifyError::MissingThreshold("grad_mass"))?;
    let rep = model.evaluate(u0)?;
    let (em, gm) = products(model, &rep)?;
    let fv = finite_variance(model, u0);
    let energy = entry.push(Evidence::new("energy_mass_sigma", em, em_sigma, 0.0));
    let gradient = entry.push(Evidence::new("gradient_mass_sigma", gm, grad_mass, 0.0));
    entry.verdict = match (energy, gradient) {
        (Relation::Below, Relation::Below) => Outcome::GlobalCandidate,
        (Relation::Below, Relation::Above) => {
            entry.notes.push(if fv {
                "finite-variance branch applies".to_string()
            } else {
                "finite-variance branch unavailable".to_string()
            });
            let p_lt_4 = model.params.p < 4.0;
            entry.notes.push(format!("radial branch {} (p < 4: {p_lt_4})", if p_lt_4 { "applies" } else { "excluded" }));
            if fv || p_lt_4 {
                Outcome::BlowupCandidate
            } else {
                Outcome::Undetermined
            }
        }
        _ => Outcome::Undetermined,
    };
    Ok(entry)
}

fn sets_gates(entry: &mut Entry, model: &Model, assumptions: &AssumptionReport) {
    let p = &model.params;
    entry.gate("intercritical", model.exponents.criticality == Criticality::Intercritical);
    entry.gate("n_ge_3", p.n >= 3);
    entry.gate("b_range", 2.0 - p.dim() < p.b && p.b < 2.0);
    entry.gate("c_range", p.b - 2.0 < p.c && p.c <= 0.0);
    entry.gate("I", assumptions.holds_I.holds());
    entry.gate("II", assumptions.holds_II.holds());
    entry.gate("III", assumptions.holds_III.holds());
    entry.gate("IV", assumptions.holds_IV.holds());
}

/// Extra restrictions for the blow-up half: `c ≤ b ≤ 0`, `b < 0` and
/// `p_c ≤ 2c(2−b)/b`.
fn blowup_restrictions(model: &Model) -> (bool, Option<String>) {
    let p = &model.params;
    if !(p.c <= p.b && p.b <= 0.0) {
        return (false, Some("requires c <= b <= 0".into()));
    }
    if p.b >= 0.0 {
        return (false, Some("p_c bound needs b < 0; b = 0 is not covered".into()));
    }
    let bound = 2.0 * p.c * p.order() / p.b;
    if p.p_c() <= bound * (1.0 + 1e-12) {
        (true, None)
    } else {
        (false, Some(format!("p_c = {} exceeds 2c(2-b)/b = {bound}", p.p_c())))
    }
}

/// Membership of `u0` in `N^±` at frequency `omega`, given the ground-state
/// action `m_omega = S_{ω,0}(Q_ω)`.
pub fn classify_sets(
    u0: &RadialField,
    model: &Model,
    assumptions: &AssumptionReport,
    m_omega: f64,
    omega: f64,
) -> Result<Entry, ClassifyError> {
    let mut entry = Entry::new("action_sets");
    sets_gates(&mut entry, model, assumptions);
    entry.gate("omega_positive", omega > 0.0);
    if !entry.gates_hold() {
        return Ok(entry.not_applicable("gating assumptions fail"));
    }
    let at = model.with_omega(omega)?;
    let rep = at.evaluate(u0)?;
    let n = at.params.dim();
    let k = k_from_report(&rep, &at.params, n, 2.0);
    let action = entry.push(Evidence::new("action_vs_ground_state", rep.action, m_omega, 0.0));
    if action != Relation::Below {
        return Ok(entry.not_applicable("action not below the ground-state level"));
    }
    let sign = entry.push(Evidence::new("k_n2_vs_zero", k, 0.0, rep.l));
    entry.verdict = match sign {
        Relation::Above => {
            entry.notes.push("member of N+".into());
            Outcome::GlobalCandidate
        }
        Relation::Band => Outcome::Undetermined,
        Relation::Below => {
            entry.notes.push("member of N-".into());
            let gap = -2.0 * at.params.order() * (m_omega - rep.action);
            entry.push(Evidence::new("gap_bound", k, gap, 0.0));
            let (ok, why) = blowup_restrictions(model);
            entry.gate("blowup_restrictions", ok);
            if let Some(why) = why {
                entry.notes.push(why);
            }
            if ok {
                entry.notes.push("finite-time blow-up or gradient growth along t_n -> infinity".into());
                Outcome::BlowupCandidate
            } else {
                // membership is known, but the blow-up statement does not cover it
                Outcome::NotApplicable
            }
        }
    };
    Ok(entry)
}

/// `S_{ω,0}(Q_ω)` from the `ω = 1` action through the exact scaling law.
pub fn ground_state_action(model: &Model, th: &Thresholds, omega: f64) -> f64 {
    omega.powf(action_scaling_exponent(&model.params)) * th.action
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyReport {
    pub omega0: f64,
    pub f_omega0: f64,
    /// `f(ω₀) > 0`, `None` inside the dead-band.
    pub f_positive: Option<bool>,
    /// `E M^σ < em_sigma`, `None` inside the dead-band.
    pub em_below: Option<bool>,
    /// Both sides decided and equal.
    pub agree: bool,
    pub band: bool,
}

/// `f(ω) = ω^κ S_{1,0}(Q₁) − S_{ω,V}(u0)`.
pub fn frequency_gap(model: &Model, rep: &FunctionalReport, th: &Thresholds, omega: f64) -> f64 {
    ground_state_action(model, th, omega) - rep.energy - 0.5 * omega * rep.mass
}

pub fn optimal_frequency(u0: &RadialField, model: &Model, th: &Thresholds) -> Result<FrequencyReport, ClassifyError> {
    let crit = model.exponents.criticality;
    if crit != Criticality::Intercritical {
        return Err(ClassifyError::Criticality("optimal_frequency", crit));
    }
    let em_sigma = th.em_sigma.ok_or(ClassifyError::MissingThreshold("em_sigma"))?;
    let p = &model.params;
    let (order, p_c) = (p.order(), p.p_c());
    let rep = model.evaluate(u0)?;
    let base = order * p.p / (2.0 * p.energy_critical_pc() - 2.0 * p_c) * rep.mass / th.action;
    let omega0 = base.powf(order * p.p / (2.0 * order - p_c));
    let f = frequency_gap(model, &rep, th, omega0);
    let scale = 0.5 * omega0 * rep.mass + rep.energy.abs();
    let f_positive = match compare(f, 0.0, scale) {
        Relation::Above => Some(true),
        Relation::Below => Some(false),
        Relation::Band => None,
    };
    let (em, _) = products(model, &rep)?;
    let em_below = match compare(em, em_sigma, 0.0) {
        Relation::Below => Some(true),
        Relation::Above => Some(false),
        Relation::Band => None,
    };
    let band = f_positive.is_none() || em_below.is_none();
    Ok(FrequencyReport { omega0, f_omega0: f, f_positive, em_below, agree: !band && f_positive == em_below, band })
}

/// Frequency-free blow-up criterion: `E M^σ` below and gradient product
/// above the ground-state values, under the restrictions of the sets route.
pub fn classify_frequency_optimized(
    u0: &RadialField,
    model: &Model,
    assumptions: &AssumptionReport,
    th: &Thresholds,
) -> Result<Entry, ClassifyError> {
    let mut entry = Entry::new("frequency_optimized");
    sets_gates(&mut entry, model, assumptions);
    let (ok, why) = if model.exponents.criticality == Criticality::Intercritical { blowup_restrictions(model) } else { (false, None) };
    entry.gate("blowup_restrictions", ok);
    if let Some(why) = why {
        entry.notes.push(why);
    }
    if !entry.gates_hold() {
        return Ok(entry.not_applicable("gating assumptions fail"));
    }
    let em_sigma = th.em_sigma.ok_or(ClassifyError::MissingThreshold("em_sigma"))?;
    let grad_mass = th.grad_mass.ok_or(ClassifyError::MissingThreshold("grad_mass"))?;
    let rep = model.evaluate(u0)?;
    let (em, gm) = products(model, &rep)?;
    let energy = entry.push(Evidence::new("energy_mass_sigma", em, em_sigma, 0.0));
    let gradient = entry.push(Evidence::new("gradient_mass_sigma", gm, grad_mass, 0.0));
    let freq = optimal_frequency(u0, model, th)?;
    entry.evidence.push(Evidence::new("frequency_gap_at_omega0", freq.f_omega0, 0.0, 0.5 * freq.omega0 * rep.mass));
    entry.verdict = if energy == Relation::Below && gradient == Relation::Above {
        entry.notes.push(format!("omega0 = {}", freq.omega0));
        Outcome::BlowupCandidate
    } else {
        Outcome::Undetermined
    };
    Ok(entry)
}

/// All four entries; the sets route runs at `omega` (default `ω₀`).
pub fn classify_all(
    u0: &RadialField,
    model: &Model,
    assumptions: &AssumptionReport,
    th: &Thresholds,
    omega: Option<f64>,
) -> Result<Classification, ClassifyError> {
    let mut entries = vec![classify_mass_critical(u0, model, assumptions, th)?, classify_intercritical(u0, model, assumptions, th)?];
    if model.exponents.criticality == Criticality::Intercritical {
        let omega = match omega {
            Some(w) => w,
            None => optimal_frequency(u0, model, th)?.omega0,
        };
        entries.push(classify_sets(u0, model, assumptions, ground_state_action(model, th, omega), omega)?);
        entries.push(classify_frequency_optimized(u0, model, assumptions, th)?);
    } else {
        entries.push(Entry::new("action_sets").not_applicable("requires intercritical parameters"));
        entries.push(Entry::new("frequency_optimized").not_applicable("requires intercritical parameters"));
    }
    Ok(Classification { entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dead_band() {
        assert_eq!(compare(1.0, 2.0, 0.0), Relation::Below);
        assert_eq!(compare(2.0, 1.0, 0.0), Relation::Above);
        assert_eq!(compare(1.0, 1.0 + 1e-7, 0.0), Relation::Band);
        assert_eq!(compare(1e-9, 0.0, 1.0), Relation::Band);
        assert_eq!(compare(-1e-3, 0.0, 1.0), Relation::Below);
        assert_eq!(compare(0.0, 0.0, 0.0), Relation::Band);
    }

    #[test]
    fn evidence_serializes_both_sides() {
        let e = Evidence::new("x", 1.0, 2.0, 0.0);
        let v = serde_json::to_value(&e).unwrap();
        assert_eq!(v["lhs"], 1.0);
        assert_eq!(v["rhs"], 2.0);
        assert_eq!(v["relation"], "<");
    }
}
