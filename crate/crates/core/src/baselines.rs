//! Comparison schemes: equal energy split, local computing only and full offloading.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dual_solver::{solve, SolveOptions, SolveReport};
use crate::error::SolveError;
use crate::model::{weighted_rate, Allocation, Instance, Modes};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeId {
    Proposed,
    EqualEnergy,
    LocalOnly,
    FullOffload,
}

impl SchemeId {
    pub const ALL: [SchemeId; 4] = [
        SchemeId::Proposed,
        SchemeId::EqualEnergy,
        SchemeId::LocalOnly,
        SchemeId::FullOffload,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeId::Proposed => "proposed",
            SchemeId::EqualEnergy => "equal_energy",
            SchemeId::LocalOnly => "local_only",
            SchemeId::FullOffload => "full_offload",
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        SchemeId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| format!("unknown scheme `{s}` (expected proposed, equal_energy, local_only or full_offload)"))
    }
}

/// Energy arriving for each slot is split in half between the two modes and
/// spent within that slot. E_{k,0} counts as the first slot's arrival.
pub fn equal_energy(instance: &Instance) -> Allocation {
    let cfg = &instance.config;
    let mut alloc = Allocation::zeros(instance.num_users(), instance.num_slots());
    for k in 0..instance.num_users() {
        let local = cfg.local_model(k);
        for (n, arrival) in instance.arrivals(k).into_iter().enumerate() {
            let half = 0.5 * arrival;
            alloc.local_bits[k][n] = local.bits(half);
            alloc.offload_bits[k][n] = cfg.offload_model(instance.profiles.h[k][n]).bits(half);
        }
    }
    alloc
}

/// The optimum with offloading disabled.
pub fn local_only(instance: &Instance, options: &SolveOptions) -> Result<SolveReport, SolveError> {
    solve(
        instance,
        &SolveOptions {
            modes: Modes::LOCAL_ONLY,
            ..options.clone()
        },
    )
}

/// The optimum with local computing disabled.
pub fn full_offload(
    instance: &Instance,
    options: &SolveOptions,
) -> Result<SolveReport, SolveError> {
    solve(
        instance,
        &SolveOptions {
            modes: Modes::OFFLOAD_ONLY,
            ..options.clone()
        },
    )
}

/// Result of running one scheme on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeOutcome {
    pub scheme: SchemeId,
    pub allocation: Allocation,
    pub objective: f64,
    /// Always true for the equal-energy split.
    pub converged: bool,
    /// Dual upper bound for the optimizing schemes.
    pub dual_value: Option<f64>,
}

pub fn run_scheme(
    instance: &Instance,
    scheme: SchemeId,
    options: &SolveOptions,
) -> Result<SchemeOutcome, SolveError> {
    let report = match scheme {
        SchemeId::EqualEnergy => {
            instance.validate()?;
            let allocation = equal_energy(instance);
            return Ok(SchemeOutcome {
                scheme,
                objective: weighted_rate(&allocation, &instance.config.weights)?,
                allocation,
                converged: true,
                dual_value: None,
            });
        }
        SchemeId::Proposed => solve(instance, options)?,
        SchemeId::LocalOnly => local_only(instance, options)?,
        SchemeId::FullOffload => full_offload(instance, options)?,
    };
    Ok(SchemeOutcome {
        scheme,
        objective: report.primal_value,
        allocation: report.allocation,
        converged: report.converged,
        dual_value: Some(report.dual_value),
    })
}
