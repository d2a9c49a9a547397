//! Single-tank material balance with injectivity, breakthrough and trapping.

use alloc::vec::Vec;

use super::spec::{AquiferSpec, CaseSpec, WellSchedule};
#[cfg(test)]
use super::spec::group_schedule;
use crate::error::{dim_mismatch, invalid, Result};

/// Rates averaged over one substep ending at `day`; masses at its end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimStep {
    pub day: f64,
    /// MMscf/day
    pub q_inj: f64,
    /// MMscf/day
    pub q_co2_prod: f64,
    /// Mstb/day
    pub q_brine: f64,
    pub pressure: f64,
    /// Surface scf of CO2.
    pub m_mobile: f64,
    pub m_residual: f64,
    pub m_dissolved: f64,
}

impl SimStep {
    pub fn q_stored(&self) -> f64 {
        self.q_inj - self.q_co2_prod
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub steps: Vec<SimStep>,
    pub dt_days: f64,
    /// Substeps per reporting period of the stability objectives.
    pub substeps_per_report: usize,
    /// Injection target of the first control step.
    pub first_inj_target: f64,
    /// Mass scale below which mobile CO2 counts as none, scf.
    pub mobile_floor: f64,
}

impl SimOutcome {
    pub fn final_masses(&self) -> (f64, f64, f64) {
        self.steps
            .last()
            .map_or((0.0, 0.0, 0.0), |s| (s.m_mobile, s.m_residual, s.m_dissolved))
    }

    /// `(Q_inj, Q_prod)` averaged over each reporting period, MMscf/day.
    pub fn reported_rates(&self) -> Vec<(f64, f64)> {
        let k = self.substeps_per_report.max(1);
        self.steps
            .chunks(k)
            .map(|c| {
                let n = c.len() as f64;
                (
                    c.iter().map(|s| s.q_inj).sum::<f64>() / n,
                    c.iter().map(|s| s.q_co2_prod).sum::<f64>() / n,
                )
            })
            .collect()
    }
}

/// Explicit time stepping over the case horizon.
pub fn simulate(schedule: &WellSchedule, aquifer: &AquiferSpec, case: &CaseSpec) -> Result<SimOutcome> {
    schedule.validate()?;
    aquifer.validate()?;
    if schedule.n_steps() != case.n_control_steps {
        return Err(dim_mismatch("schedule control steps", case.n_control_steps, schedule.n_steps()));
    }
    if schedule.prod_targets.len() != case.n_producers {
        return Err(dim_mismatch("schedule producers", case.n_producers, schedule.prod_targets.len()));
    }
    let dt = aquifer.substep_days;
    let n_sub = libm::round(case.horizon_days / dt) as usize;
    let per_report = libm::round(case.step_days / dt) as usize;
    if n_sub == 0 || per_report == 0 {
        return Err(invalid("substep longer than the reporting step"));
    }
    let pv = aquifer.pore_volume();
    let bg = aquifer.gas_fvf;
    let bw = aquifer.water_fvf;
    // Psi per reservoir cf of net voidage.
    let dp_per_rcf = 1.0 / (aquifer.total_compressibility * pv);
    // Surface MMscf/day of CO2 carried by 1 Mstb/day of fully gas-cut flow.
    let gas_per_water = 1e3 * bw / bg / 1e6;
    let sol_cap = aquifer.solubility_cap();
    let ctrl_days = case.control_days();

    let mut p = aquifer.initial_pressure;
    let (mut mm, mut mr, mut md) = (0.0f64, 0.0f64, 0.0f64);
    let mut steps = Vec::with_capacity(n_sub);
    let mut w = alloc::vec![0.0; case.n_producers];
    for n in 0..n_sub {
        let t0 = n as f64 * dt;
        let c = ((t0 / ctrl_days) as usize).min(case.n_control_steps - 1);
        let q_inj = schedule.inj_target[c].min(aquifer.injectivity_index * (aquifer.max_pressure - p).max(0.0));

        let s = mm * bg / pv;
        let excess = (s - aquifer.breakthrough_onset).max(0.0) / aquifer.breakthrough_scale;
        let g = aquifer.max_gas_cut * (excess * excess).min(1.0);
        let drawdown = aquifer.productivity_index * (p - aquifer.min_producer_pressure).max(0.0);
        let mut q_gas = 0.0;
        for j in 0..case.n_producers {
            w[j] = schedule.prod_targets[j][c].min(drawdown);
            let qg = g * w[j] * gas_per_water;
            let cap = schedule.gas_caps[j][c];
            if qg > cap {
                w[j] *= cap / qg;
                q_gas += cap;
            } else {
                q_gas += qg;
            }
        }
        let q_brine: f64 = w.iter().sum();

        let available = mm + q_inj * 1e6 * dt;
        let mut produced = q_gas * 1e6 * dt;
        if produced > available {
            produced = available;
            q_gas = available / (1e6 * dt);
        }
        mm = available - produced;
        let res = (aquifer.residual_rate * dt * mm).min(mm);
        let dis = (aquifer.dissolution_rate * dt * mm).min(sol_cap - md).min(mm - res).max(0.0);
        mm -= res + dis;
        mr += res;
        md += dis;

        p += (q_inj * 1e6 * bg - q_brine * 1e3 * bw) * dt * dp_per_rcf;
        p = p.clamp(0.0, aquifer.max_pressure);
        steps.push(SimStep {
            day: t0 + dt,
            q_inj,
            q_co2_prod: q_gas,
            q_brine,
            pressure: p,
            m_mobile: mm,
            m_residual: mr,
            m_dissolved: md,
        });
    }
    Ok(SimOutcome {
        steps,
        dt_days: dt,
        substeps_per_report: per_report,
        first_inj_target: schedule.inj_target[0],
        mobile_floor: 1e-6 * pv / bg,
    })
}
