//! Scalar objectives over a simulated outcome. All are maximized.

use alloc::vec::Vec;

use super::sim::{simulate, SimOutcome};
use super::spec::{decode_schedule, AquiferSpec, CaseSpec, EconSpec, ObjectiveId};
use crate::error::Result;
use crate::math::pow;

/// `Σ_t |Q_inj(t) − Q_inj(t−1) − Q_prod(t)| / t` over reporting periods,
/// with `Q_inj(0)` the first injection target.
fn stability_sum(outcome: &SimOutcome, with_recycling: bool) -> f64 {
    let mut prev = outcome.first_inj_target;
    let mut total = 0.0;
    for (i, (q_inj, q_prod)) in outcome.reported_rates().into_iter().enumerate() {
        let recycled = if with_recycling { q_prod } else { 0.0 };
        total += (q_inj - prev - recycled).abs() / (i + 1) as f64;
        prev = q_inj;
    }
    total
}

/// Injection stability penalizing recycled CO2; 1 at best.
pub fn objective_recycling(outcome: &SimOutcome) -> f64 {
    1.0 / (1.0 + stability_sum(outcome, true))
}

/// Trapped (residual + dissolved) over mobile CO2 at the end of the horizon.
pub fn objective_f1(outcome: &SimOutcome) -> f64 {
    let (m, r, d) = outcome.final_masses();
    if m + r + d <= 0.0 {
        return 0.0;
    }
    (r + d) / m.max(outcome.mobile_floor)
}

/// Net stored CO2, Tscf.
pub fn objective_f2(outcome: &SimOutcome) -> f64 {
    outcome.steps.iter().map(|s| s.q_stored() * outcome.dt_days).sum::<f64>() * 1e6 / 1e12
}

/// Injection stability; 1 exactly when injection never changes.
pub fn objective_f3(outcome: &SimOutcome) -> f64 {
    1.0 / (1.0 + stability_sum(outcome, false))
}

/// Discounted storage revenue minus injection and brine costs, €.
pub fn objective_f4_npv(outcome: &SimOutcome, econ: &EconSpec) -> f64 {
    let co2 = 1e6 * econ.co2_tonne_per_scf;
    let brine = 1e3 * econ.brine_tonne_per_stb;
    outcome
        .steps
        .iter()
        .map(|s| {
            let cash = econ.c_storage * s.q_stored() * co2 - econ.c_injection * s.q_inj * co2
                - econ.c_production * s.q_brine * brine;
            outcome.dt_days * cash / pow(1.0 + econ.discount_rate, s.day / 365.0)
        })
        .sum()
}

pub fn objective_value(id: ObjectiveId, outcome: &SimOutcome, econ: &EconSpec) -> f64 {
    match id {
        ObjectiveId::Recycling => objective_recycling(outcome),
        ObjectiveId::F1 => objective_f1(outcome),
        ObjectiveId::F2 => objective_f2(outcome),
        ObjectiveId::F3 => objective_f3(outcome),
        ObjectiveId::F4 => objective_f4_npv(outcome, econ),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveVector {
    pub ids: Vec<ObjectiveId>,
    pub values: Vec<f64>,
}

impl ObjectiveVector {
    pub fn get(&self, id: ObjectiveId) -> Option<f64> {
        self.ids.iter().position(|&i| i == id).map(|k| self.values[k])
    }
}

/// Decode, simulate and score the case's objective set.
pub fn evaluate_case(x: &[f64], case: &CaseSpec, aquifer: &AquiferSpec, econ: &EconSpec) -> Result<ObjectiveVector> {
    let schedule = decode_schedule(x, case)?;
    let outcome = simulate(&schedule, aquifer, case)?;
    Ok(score(&outcome, case, econ))
}

pub fn score(outcome: &SimOutcome, case: &CaseSpec, econ: &EconSpec) -> ObjectiveVector {
    ObjectiveVector {
        ids: case.objectives.clone(),
        values: case
            .objectives
            .iter()
            .map(|&id| objective_value(id, outcome, econ))
            .collect(),
    }
}
