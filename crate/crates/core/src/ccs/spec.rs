//! Static inputs of the tank proxy: aquifer, economics, case layouts and the
//! decoded well schedule.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{dim_mismatch, invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AquiferSpec {
    /// Bulk rock volume, cf.
    pub bulk_volume: f64,
    pub porosity: f64,
    /// psi
    pub initial_pressure: f64,
    pub max_pressure: f64,
    pub min_producer_pressure: f64,
    /// 1/psi
    pub total_compressibility: f64,
    /// MMscf/day per psi of headroom below `max_pressure`.
    pub injectivity_index: f64,
    /// Mstb/day per psi of drawdown above `min_producer_pressure`, per well.
    pub productivity_index: f64,
    /// Reservoir cf per surface scf of CO2.
    pub gas_fvf: f64,
    /// Reservoir cf per stb of brine.
    pub water_fvf: f64,
    pub breakthrough_onset: f64,
    pub breakthrough_scale: f64,
    pub max_gas_cut: f64,
    /// 1/day
    pub dissolution_rate: f64,
    pub residual_rate: f64,
    /// Dissolved CO2 cap as a share of the water-in-place reservoir volume.
    pub solubility_cap_fraction: f64,
    /// stb
    pub water_in_place: f64,
    pub substep_days: f64,
}

impl Default for AquiferSpec {
    fn default() -> Self {
        Self {
            bulk_volume: 2.4e11,
            porosity: 0.25,
            initial_pressure: 5000.0,
            max_pressure: 9000.0,
            min_producer_pressure: 2500.0,
            total_compressibility: 6e-6,
            injectivity_index: 0.1,
            productivity_index: 0.05,
            gas_fvf: 0.0035,
            water_fvf: 5.615,
            breakthrough_onset: 0.05,
            breakthrough_scale: 0.02,
            max_gas_cut: 1.0,
            dissolution_rate: 5e-5,
            residual_rate: 2e-5,
            solubility_cap_fraction: 0.05,
            water_in_place: 1.7e9,
            substep_days: 10.0,
        }
    }
}

impl AquiferSpec {
    /// Reservoir cf.
    pub fn pore_volume(&self) -> f64 {
        self.bulk_volume * self.porosity
    }

    /// Largest dissolved amount, surface scf of CO2.
    pub fn solubility_cap(&self) -> f64 {
        self.solubility_cap_fraction * self.water_in_place * self.water_fvf / self.gas_fvf
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("bulk_volume", self.bulk_volume),
            ("porosity", self.porosity),
            ("total_compressibility", self.total_compressibility),
            ("gas_fvf", self.gas_fvf),
            ("water_fvf", self.water_fvf),
            ("breakthrough_scale", self.breakthrough_scale),
            ("substep_days", self.substep_days),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(alloc::format!("aquifer.{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("injectivity_index", self.injectivity_index),
            ("productivity_index", self.productivity_index),
            ("max_gas_cut", self.max_gas_cut),
            ("dissolution_rate", self.dissolution_rate),
            ("residual_rate", self.residual_rate),
            ("solubility_cap_fraction", self.solubility_cap_fraction),
            ("water_in_place", self.water_in_place),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(alloc::format!("aquifer.{name} must be >= 0, got {v}")));
            }
        }
        if !(self.breakthrough_onset > 0.0 && self.breakthrough_onset < 1.0) {
            return Err(invalid("aquifer.breakthrough_onset must lie in (0, 1)"));
        }
        if !(self.max_pressure > self.initial_pressure && self.initial_pressure > self.min_producer_pressure) {
            return Err(invalid(
                "aquifer pressures must satisfy max_pressure > initial_pressure > min_producer_pressure",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct EconSpec {
    /// €/tonne stored
    pub c_storage: f64,
    /// €/tonne injected
    pub c_injection: f64,
    /// €/tonne of brine produced
    pub c_production: f64,
    /// per year
    pub discount_rate: f64,
    pub co2_tonne_per_scf: f64,
    pub brine_tonne_per_stb: f64,
}

impl Default for EconSpec {
    fn default() -> Self {
        Self {
            c_storage: 30.0,
            c_injection: 6.2,
            c_production: 2.7,
            discount_rate: 0.0142,
            co2_tonne_per_scf: 0.0526e-3,
            brine_tonne_per_stb: 0.1654,
        }
    }
}

impl EconSpec {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.c_storage,
            self.c_injection,
            self.c_production,
            self.discount_rate,
            self.co2_tonne_per_scf,
            self.brine_tonne_per_stb,
        ];
        if all.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(invalid("economic constants must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum CaseId {
    C1v1,
    C1v2,
    C2,
}

impl CaseId {
    pub const ALL: [CaseId; 3] = [CaseId::C1v1, CaseId::C1v2, CaseId::C2];

    pub fn name(self) -> &'static str {
        match self {
            CaseId::C1v1 => "c1v1",
            CaseId::C1v2 => "c1v2",
            CaseId::C2 => "c2",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name().eq_ignore_ascii_case(s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectiveId {
    /// Injection-stability score penalizing recycled CO2.
    Recycling,
    /// Trapped over mobile CO2.
    F1,
    /// Net stored CO2, Tscf.
    F2,
    /// Injection-stability score.
    F3,
    /// NPV, €.
    F4,
}

impl ObjectiveId {
    pub fn name(self) -> &'static str {
        match self {
            ObjectiveId::Recycling => "f_recycle",
            ObjectiveId::F1 => "f1",
            ObjectiveId::F2 => "f2",
            ObjectiveId::F3 => "f3",
            ObjectiveId::F4 => "f4",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            ObjectiveId::Recycling | ObjectiveId::F3 => "1/(MMscf/day)",
            ObjectiveId::F1 => "-",
            ObjectiveId::F2 => "Tscf",
            ObjectiveId::F4 => "EUR",
        }
    }
}

pub const C1_INJECTION: f64 = 170.0;
pub const MAX_WATER_RATE: f64 = 100.0;
pub const MAX_GAS_CAP: f64 = 8.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CaseSpec {
    pub id: CaseId,
    pub n_producers: usize,
    pub n_control_steps: usize,
    /// Reporting resolution of the stability objectives.
    pub step_days: f64,
    pub horizon_days: f64,
    /// Injection target range; equal ends mean a fixed target.
    pub injection_bounds: (f64, f64),
    pub objectives: Vec<ObjectiveId>,
}

impl CaseSpec {
    pub fn new(id: CaseId) -> Self {
        let (n_producers, n_control_steps, injection_bounds, objectives) = match id {
            CaseId::C1v1 => (8, 1, (C1_INJECTION, C1_INJECTION), vec![ObjectiveId::Recycling]),
            CaseId::C1v2 => (8, 1, (170.0, 200.0), vec![ObjectiveId::Recycling, ObjectiveId::F2]),
            CaseId::C2 => (
                3,
                160,
                (150.0, 190.0),
                vec![ObjectiveId::F1, ObjectiveId::F2, ObjectiveId::F3, ObjectiveId::F4],
            ),
        };
        Self {
            id,
            n_producers,
            n_control_steps,
            step_days: 90.0,
            horizon_days: 160.0 * 90.0,
            injection_bounds,
            objectives,
        }
    }

    fn injection_is_variable(&self) -> bool {
        self.injection_bounds.0 != self.injection_bounds.1
    }

    /// Layout: optional injection target, then production targets and then
    /// gas caps, each producer-major (`j · n_control_steps + t`).
    pub fn dim(&self) -> usize {
        usize::from(self.injection_is_variable()) + 2 * self.n_producers * self.n_control_steps
    }

    /// `(lo, hi)` of every decision variable.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let block = self.n_producers * self.n_control_steps;
        let mut b = Vec::with_capacity(self.dim());
        if self.injection_is_variable() {
            b.push(self.injection_bounds);
        }
        b.extend(core::iter::repeat_n((0.0, MAX_WATER_RATE), block));
        b.extend(core::iter::repeat_n((0.0, MAX_GAS_CAP), block));
        b
    }

    pub fn control_days(&self) -> f64 {
        self.horizon_days / self.n_control_steps as f64
    }
}

/// Targets per control step.
#[derive(Debug, Clone, PartialEq)]
pub struct WellSchedule {
    /// MMscf/day, one per control step.
    pub inj_target: Vec<f64>,
    /// Mstb/day, `[producer][step]`.
    pub prod_targets: Vec<Vec<f64>>,
    /// MMscf/day of produced CO2 allowed, `[producer][step]`.
    pub gas_caps: Vec<Vec<f64>>,
}

impl WellSchedule {
    /// Same targets for every step.
    pub fn constant(n_steps: usize, inj: f64, prod: &[f64], caps: &[f64]) -> Self {
        Self {
            inj_target: vec![inj; n_steps],
            prod_targets: prod.iter().map(|&w| vec![w; n_steps]).collect(),
            gas_caps: caps.iter().map(|&c| vec![c; n_steps]).collect(),
        }
    }

    pub fn n_steps(&self) -> usize {
        self.inj_target.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_steps();
        if n == 0 {
            return Err(invalid("a schedule needs at least one control step"));
        }
        if self.prod_targets.len() != self.gas_caps.len() {
            return Err(dim_mismatch("gas cap producers", self.prod_targets.len(), self.gas_caps.len()));
        }
        for row in self.prod_targets.iter().chain(&self.gas_caps) {
            if row.len() != n {
                return Err(dim_mismatch("schedule steps", n, row.len()));
            }
        }
        let all = self
            .inj_target
            .iter()
            .chain(self.prod_targets.iter().flatten())
            .chain(self.gas_caps.iter().flatten());
        for v in all {
            if !(*v >= 0.0 && v.is_finite()) {
                return Err(invalid("schedule rates must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

/// Reference operation: constant injection at `inj` with producers sharing
/// the voidage-balancing brine rate equally and gas caps at their upper bound.
pub fn group_schedule(case: &CaseSpec, aquifer: &AquiferSpec, inj: f64) -> WellSchedule {
    let share = inj * 1e6 * aquifer.gas_fvf / (aquifer.water_fvf * 1e3) / case.n_producers as f64;
    WellSchedule::constant(
        case.n_control_steps,
        inj,
        &vec![share; case.n_producers],
        &vec![MAX_GAS_CAP; case.n_producers],
    )
}

/// Affine map from the unit cube onto the case's variable ranges.
pub fn decode_schedule(x: &[f64], case: &CaseSpec) -> Result<WellSchedule> {
    if x.len() != case.dim() {
        return Err(dim_mismatch("decision vector", case.dim(), x.len()));
    }
    if let Some(v) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::OutOfDomain(alloc::format!("decision value {v} outside [0, 1]")));
    }
    let bounds = case.bounds();
    let val: Vec<f64> = x.iter().zip(&bounds).map(|(u, (lo, hi))| lo + u * (hi - lo)).collect();
    let (inj, rest) = if case.injection_is_variable() {
        (val[0], &val[1..])
    } else {
        (case.injection_bounds.0, &val[..])
    };
    let n = case.n_control_steps;
    let block = case.n_producers * n;
    let rows = |s: &[f64]| s.chunks(n).map(<[f64]>::to_vec).collect::<Vec<_>>();
    Ok(WellSchedule {
        inj_target: vec![inj; n],
        prod_targets: rows(&rest[..block]),
        gas_caps: rows(&rest[block..]),
    })
}
