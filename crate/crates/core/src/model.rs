//! System model: parameters, per-slot energy costs of local computing and
//! offloading, the energy-causality constraints and the weighted objective.
//!
//! All quantities are SI: Joules, seconds, Hz, Watts and dimensionless power
//! gains. Bits are real-valued throughout.

use std::f64::consts::LN_2;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Default tolerance (Joules) below which a negative slack still counts as feasible.
pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-9;

/// Static parameters shared by every instance of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub num_users: usize,
    pub num_slots: usize,
    /// Slot length τ = T/N in seconds.
    pub slot_seconds: f64,
    pub bandwidth_hz: f64,
    /// Receiver noise power σ0² at the access point, in Watts.
    pub noise_power_w: f64,
    /// Per-user computation weight ω_k.
    pub weights: Vec<f64>,
    /// Per-user effective switched capacitance γ_k.
    pub capacitance: Vec<f64>,
    /// Per-user CPU cycles needed per task input-bit, C_k.
    pub cycles_per_bit: Vec<u32>,
    /// Per-user battery content before the first arrival, E_{k,0}.
    pub initial_energy_j: Vec<f64>,
}

impl SystemConfig {
    /// A configuration where every user shares the same constants.
    #[allow(clippy::too_many_arguments)]
    pub fn homogeneous(
        num_users: usize,
        num_slots: usize,
        slot_seconds: f64,
        bandwidth_hz: f64,
        noise_power_w: f64,
        weight: f64,
        capacitance: f64,
        cycles_per_bit: u32,
        initial_energy_j: f64,
    ) -> Self {
        Self {
            num_users,
            num_slots,
            slot_seconds,
            bandwidth_hz,
            noise_power_w,
            weights: vec![weight; num_users],
            capacitance: vec![capacitance; num_users],
            cycles_per_bit: vec![cycles_per_bit; num_users],
            initial_energy_j: vec![initial_energy_j; num_users],
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.num_users == 0 {
            return Err(param("num_users", "must be at least 1"));
        }
        if self.num_slots == 0 {
            return Err(param("num_slots", "must be at least 1"));
        }
        positive("slot_seconds", self.slot_seconds)?;
        positive("bandwidth_hz", self.bandwidth_hz)?;
        positive("noise_power_w", self.noise_power_w)?;
        let k = self.num_users;
        check_len("weights", self.weights.len(), k)?;
        check_len("capacitance", self.capacitance.len(), k)?;
        check_len("cycles_per_bit", self.cycles_per_bit.len(), k)?;
        check_len("initial_energy_j", self.initial_energy_j.len(), k)?;
        for &w in &self.weights {
            positive("weights", w)?;
        }
        for &g in &self.capacitance {
            positive("capacitance", g)?;
        }
        if self.cycles_per_bit.contains(&0) {
            return Err(param("cycles_per_bit", "must be a positive integer"));
        }
        for &e in &self.initial_energy_j {
            if !(e.is_finite() && e >= 0.0) {
                return Err(param(
                    "initial_energy_j",
                    format!("{e} is not a finite value >= 0"),
                ));
            }
        }
        Ok(())
    }

    /// Local-computing energy model of user `k`.
    pub fn local_model(&self, k: usize) -> LocalModel {
        LocalModel::new(
            self.capacitance[k],
            self.cycles_per_bit[k],
            self.slot_seconds,
        )
    }

    /// Offloading energy model of user `k` under channel power gain `gain`.
    pub fn offload_model(&self, gain: f64) -> OffloadModel {
        OffloadModel::new(
            gain,
            self.slot_seconds,
            self.bandwidth_hz,
            self.noise_power_w,
        )
    }
}

fn param(name: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::Parameter {
        name,
        reason: reason.into(),
    }
}

fn positive(name: &'static str, v: f64) -> Result<(), ModelError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(param(name, format!("{v} is not a finite positive value")))
    }
}

fn check_len(what: &'static str, found: usize, expected: usize) -> Result<(), ModelError> {
    if found == expected {
        Ok(())
    } else {
        Err(ModelError::Shape {
            what,
            found,
            expected,
        })
    }
}

/// Channel (CSI) and energy-arrival (ESI) profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profiles {
    /// Channel power gain h[k][n], K×N.
    pub h: Vec<Vec<f64>>,
    /// Harvested energy E[k][n] for n = 1..N−1, stored K×(N−1).
    /// Entry `harvest[k][j]` arrives with slot j+1 and is first usable in slot j+2.
    pub harvest: Vec<Vec<f64>>,
}

/// A complete offline problem: configuration plus the known CSI/ESI profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub config: SystemConfig,
    pub profiles: Profiles,
}

impl Instance {
    pub fn new(
        config: SystemConfig,
        h: Vec<Vec<f64>>,
        harvest: Vec<Vec<f64>>,
    ) -> Result<Self, ModelError> {
        let inst = Self {
            config,
            profiles: Profiles { h, harvest },
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.config.validate()?;
        let (k, n) = (self.num_users(), self.num_slots());
        check_len("h (users)", self.profiles.h.len(), k)?;
        check_len("harvest (users)", self.profiles.harvest.len(), k)?;
        for row in &self.profiles.h {
            check_len("h (slots)", row.len(), n)?;
            for &g in row {
                positive("h", g)?;
            }
        }
        for row in &self.profiles.harvest {
            check_len("harvest (slots)", row.len(), n - 1)?;
            for &e in row {
                if !(e.is_finite() && e >= 0.0) {
                    return Err(param("harvest", format!("{e} is not a finite value >= 0")));
                }
            }
        }
        Ok(())
    }

    pub fn num_users(&self) -> usize {
        self.config.num_users
    }

    pub fn num_slots(&self) -> usize {
        self.config.num_slots
    }

    pub fn from_json_str(text: &str) -> Result<Self, ModelError> {
        let inst: Self =
            serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text).map_err(|e| match e {
            ModelError::Parse(m) => ModelError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    /// Energy that becomes usable at each slot: E_{k,0} at the first slot,
    /// then E_{k,n-1} at slot n.
    pub fn arrivals(&self, k: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_slots());
        out.push(self.config.initial_energy_j[k]);
        out.extend_from_slice(&self.profiles.harvest[k]);
        out
    }

    /// Cumulative energy available through each slot (right-hand side of the
    /// causality constraints).
    pub fn available_energy(&self, k: usize) -> Vec<f64> {
        let mut acc = 0.0;
        self.arrivals(k)
            .into_iter()
            .map(|a| {
                acc += a;
                acc
            })
            .collect()
    }

    pub fn total_available(&self, k: usize) -> f64 {
        self.config.initial_energy_j[k] + self.profiles.harvest[k].iter().sum::<f64>()
    }

    /// Energy spent by user `k` in slot `n` for the given bit counts.
    pub fn slot_energy(&self, k: usize, n: usize, local_bits: f64, offload_bits: f64) -> f64 {
        self.config.local_model(k).energy(local_bits)
            + self
                .config
                .offload_model(self.profiles.h[k][n])
                .energy(offload_bits)
    }

    /// A single-user instance holding user `k` only.
    pub fn user(&self, k: usize) -> Instance {
        let c = &self.config;
        Instance {
            config: SystemConfig {
                num_users: 1,
                num_slots: c.num_slots,
                slot_seconds: c.slot_seconds,
                bandwidth_hz: c.bandwidth_hz,
                noise_power_w: c.noise_power_w,
                weights: vec![c.weights[k]],
                capacitance: vec![c.capacitance[k]],
                cycles_per_bit: vec![c.cycles_per_bit[k]],
                initial_energy_j: vec![c.initial_energy_j[k]],
            },
            profiles: Profiles {
                h: vec![self.profiles.h[k].clone()],
                harvest: vec![self.profiles.harvest[k].clone()],
            },
        }
    }
}

/// DVFS local computing: E = γ C³ ℓ³ / τ².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalModel {
    /// γ C³ / τ², Joules per bit³.
    pub coeff: f64,
}

impl LocalModel {
    pub fn new(capacitance: f64, cycles_per_bit: u32, slot_seconds: f64) -> Self {
        let c = cycles_per_bit as f64;
        Self {
            coeff: capacitance * c * c * c / (slot_seconds * slot_seconds),
        }
    }

    pub fn energy(&self, bits: f64) -> f64 {
        self.coeff * bits * bits * bits
    }

    pub fn bits(&self, energy: f64) -> f64 {
        (energy / self.coeff).cbrt()
    }

    /// dE/dℓ.
    pub fn marginal_energy(&self, bits: f64) -> f64 {
        3.0 * self.coeff * bits * bits
    }
}

/// Uplink offloading at Shannon rate: E = (σ0² τ / h)(2^{ℓ/(τB)} − 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffloadModel {
    /// σ0² τ / h, Joules.
    pub scale: f64,
    /// τ B, bits per doubling of the received SNR term.
    pub bits_per_doubling: f64,
}

impl OffloadModel {
    pub fn new(gain: f64, slot_seconds: f64, bandwidth_hz: f64, noise_power_w: f64) -> Self {
        Self {
            scale: noise_power_w * slot_seconds / gain,
            bits_per_doubling: slot_seconds * bandwidth_hz,
        }
    }

    pub fn energy(&self, bits: f64) -> f64 {
        self.scale * (LN_2 * bits / self.bits_per_doubling).exp_m1()
    }

    pub fn bits(&self, energy: f64) -> f64 {
        self.bits_per_doubling * (energy / self.scale).ln_1p() / LN_2
    }

    /// dE/dℓ.
    pub fn marginal_energy(&self, bits: f64) -> f64 {
        self.scale * LN_2 / self.bits_per_doubling * (LN_2 * bits / self.bits_per_doubling).exp()
    }
}

fn nonneg(name: &'static str, v: f64) -> Result<(), ModelError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ModelError::Domain(format!(
            "{name} = {v} must be finite and >= 0"
        )))
    }
}

fn strictly_positive(name: &'static str, v: f64) -> Result<(), ModelError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ModelError::Domain(format!(
            "{name} = {v} must be finite and > 0"
        )))
    }
}

/// Energy (J) spent computing `bits` locally within one slot.
pub fn local_energy(
    bits: f64,
    capacitance: f64,
    cycles_per_bit: u32,
    slot_seconds: f64,
) -> Result<f64, ModelError> {
    nonneg("bits", bits)?;
    strictly_positive("capacitance", capacitance)?;
    strictly_positive("cycles_per_bit", cycles_per_bit as f64)?;
    strictly_positive("slot_seconds", slot_seconds)?;
    Ok(LocalModel::new(capacitance, cycles_per_bit, slot_seconds).energy(bits))
}

/// Energy (J) spent offloading `bits` within one slot.
pub fn offload_energy(
    bits: f64,
    gain: f64,
    slot_seconds: f64,
    bandwidth_hz: f64,
    noise_power_w: f64,
) -> Result<f64, ModelError> {
    nonneg("bits", bits)?;
    strictly_positive("gain", gain)?;
    strictly_positive("slot_seconds", slot_seconds)?;
    strictly_positive("bandwidth_hz", bandwidth_hz)?;
    strictly_positive("noise_power_w", noise_power_w)?;
    Ok(OffloadModel::new(gain, slot_seconds, bandwidth_hz, noise_power_w).energy(bits))
}

/// Bits computable locally in one slot with `energy` Joules.
pub fn local_bits_from_energy(
    energy: f64,
    capacitance: f64,
    cycles_per_bit: u32,
    slot_seconds: f64,
) -> Result<f64, ModelError> {
    nonneg("energy", energy)?;
    strictly_positive("capacitance", capacitance)?;
    strictly_positive("cycles_per_bit", cycles_per_bit as f64)?;
    strictly_positive("slot_seconds", slot_seconds)?;
    Ok(LocalModel::new(capacitance, cycles_per_bit, slot_seconds).bits(energy))
}

/// Bits offloadable in one slot with `energy` Joules.
pub fn offload_bits_from_energy(
    energy: f64,
    gain: f64,
    slot_seconds: f64,
    bandwidth_hz: f64,
    noise_power_w: f64,
) -> Result<f64, ModelError> {
    nonneg("energy", energy)?;
    strictly_positive("gain", gain)?;
    strictly_positive("slot_seconds", slot_seconds)?;
    strictly_positive("bandwidth_hz", bandwidth_hz)?;
    strictly_positive("noise_power_w", noise_power_w)?;
    Ok(OffloadModel::new(gain, slot_seconds, bandwidth_hz, noise_power_w).bits(energy))
}

/// Which execution modes may carry bits. Baselines disable one of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Modes {
    pub local: bool,
    pub offload: bool,
}

impl Modes {
    pub const BOTH: Modes = Modes {
        local: true,
        offload: true,
    };
    pub const LOCAL_ONLY: Modes = Modes {
        local: true,
        offload: false,
    };
    pub const OFFLOAD_ONLY: Modes = Modes {
        local: false,
        offload: true,
    };
}

impl Default for Modes {
    fn default() -> Self {
        Modes::BOTH
    }
}

/// Decision variables: bits computed locally and bits offloaded, per user and slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub local_bits: Vec<Vec<f64>>,
    pub offload_bits: Vec<Vec<f64>>,
}

impl Allocation {
    pub fn zeros(num_users: usize, num_slots: usize) -> Self {
        Self {
            local_bits: vec![vec![0.0; num_slots]; num_users],
            offload_bits: vec![vec![0.0; num_slots]; num_users],
        }
    }

    pub fn num_users(&self) -> usize {
        self.local_bits.len()
    }

    pub fn num_slots(&self) -> usize {
        self.local_bits.first().map_or(0, Vec::len)
    }

    pub fn check_shape(&self, num_users: usize, num_slots: usize) -> Result<(), ModelError> {
        check_len("local_bits (users)", self.local_bits.len(), num_users)?;
        check_len("offload_bits (users)", self.offload_bits.len(), num_users)?;
        for (l, o) in self.local_bits.iter().zip(&self.offload_bits) {
            check_len("local_bits (slots)", l.len(), num_slots)?;
            check_len("offload_bits (slots)", o.len(), num_slots)?;
        }
        Ok(())
    }

    /// Whether every entry is finite and non-negative.
    pub fn is_valid(&self) -> bool {
        self.local_bits
            .iter()
            .chain(&self.offload_bits)
            .flatten()
            .all(|&b| b.is_finite() && b >= 0.0)
    }

    /// Uplink transmit power p = E_off / τ, in Watts.
    pub fn transmit_power(&self, instance: &Instance) -> Vec<Vec<f64>> {
        let tau = instance.config.slot_seconds;
        self.offload_bits
            .iter()
            .enumerate()
            .map(|(k, row)| {
                row.iter()
                    .enumerate()
                    .map(|(n, &b)| {
                        instance
                            .config
                            .offload_model(instance.profiles.h[k][n])
                            .energy(b)
                            / tau
                    })
                    .collect()
            })
            .collect()
    }

    /// Uplink rate r = ℓ_off / τ, in bits/s.
    pub fn offload_rate(&self, slot_seconds: f64) -> Vec<Vec<f64>> {
        self.offload_bits
            .iter()
            .map(|row| row.iter().map(|b| b / slot_seconds).collect())
            .collect()
    }

    /// Per-slot energy use of every user.
    pub fn slot_energy(&self, instance: &Instance) -> Vec<Vec<f64>> {
        (0..self.num_users())
            .map(|k| {
                (0..self.num_slots())
                    .map(|n| {
                        instance.slot_energy(k, n, self.local_bits[k][n], self.offload_bits[k][n])
                    })
                    .collect()
            })
            .collect()
    }
}

/// Per-constraint slack of the energy-causality constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// Available minus consumed cumulative energy at each (k, n), in Joules.
    pub slack: Vec<Vec<f64>>,
    pub feasible: bool,
    /// Largest constraint violation in Joules (0 when no slack is negative).
    pub worst_violation: f64,
}

pub fn causality_slack(
    instance: &Instance,
    allocation: &Allocation,
) -> Result<FeasibilityReport, ModelError> {
    causality_slack_with_tol(instance, allocation, DEFAULT_FEASIBILITY_TOL)
}

pub fn causality_slack_with_tol(
    instance: &Instance,
    allocation: &Allocation,
    tol: f64,
) -> Result<FeasibilityReport, ModelError> {
    allocation.check_shape(instance.num_users(), instance.num_slots())?;
    let mut slack = Vec::with_capacity(instance.num_users());
    let mut worst: f64 = 0.0;
    for k in 0..instance.num_users() {
        let row = user_slack(
            instance,
            k,
            &allocation.local_bits[k],
            &allocation.offload_bits[k],
        );
        for &s in &row {
            worst = worst.max(-s);
        }
        slack.push(row);
    }
    let valid = allocation.is_valid();
    Ok(FeasibilityReport {
        slack,
        feasible: valid && worst <= tol,
        worst_violation: worst,
    })
}

/// Slack row of one user.
pub(crate) fn user_slack(
    instance: &Instance,
    k: usize,
    local: &[f64],
    offload: &[f64],
) -> Vec<f64> {
    let mut available = instance.config.initial_energy_j[k];
    let mut used = 0.0;
    let mut out = Vec::with_capacity(local.len());
    for n in 0..local.len() {
        if n > 0 {
            available += instance.profiles.harvest[k][n - 1];
        }
        used += instance.slot_energy(k, n, local[n], offload[n]);
        out.push(available - used);
    }
    out
}

/// Objective: Σ_k Σ_n ω_k (ℓ_loc + ℓ_off).
pub fn weighted_rate(allocation: &Allocation, weights: &[f64]) -> Result<f64, ModelError> {
    check_len("weights", weights.len(), allocation.num_users())?;
    allocation.check_shape(weights.len(), allocation.num_slots())?;
    Ok(weights
        .iter()
        .enumerate()
        .map(|(k, w)| w * user_bits(allocation, k))
        .sum())
}

pub(crate) fn user_bits(allocation: &Allocation, k: usize) -> f64 {
    allocation.local_bits[k].iter().sum::<f64>() + allocation.offload_bits[k].iter().sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small_instance() -> Instance {
        let cfg = SystemConfig::homogeneous(2, 3, 0.02, 2e6, 1e-9, 1.0, 1e-28, 500, 0.3);
        Instance::new(
            cfg,
            vec![vec![1e-9, 2e-9, 3e-9], vec![5e-10; 3]],
            vec![vec![0.5, 0.25], vec![0.0, 1.0]],
        )
        .unwrap()
    }

    #[test]
    fn local_energy_examples() {
        assert_eq!(local_energy(0.0, 1e-28, 500, 0.01).unwrap(), 0.0);
        assert_relative_eq!(
            local_energy(1000.0, 1e-28, 500, 0.01).unwrap(),
            1.25e-7,
            max_relative = 1e-12
        );
        let e1 = local_energy(123.0, 2e-27, 700, 0.05).unwrap();
        let e2 = local_energy(246.0, 2e-27, 700, 0.05).unwrap();
        assert_relative_eq!(e2, 8.0 * e1, max_relative = 1e-12);
    }

    #[test]
    fn local_energy_matches_integrated_power() {
        // Each of the Cℓ cycles costs γ f² with f = Cℓ/τ.
        let (gamma, c, tau, bits) = (1e-28, 500u32, 0.01, 1000.0);
        let freq = c as f64 * bits / tau;
        let cycles = c as f64 * bits;
        let steps = 10_000;
        let per_step = cycles / steps as f64;
        let integrated: f64 = (0..steps).map(|_| gamma * freq * freq * per_step).sum();
        assert_relative_eq!(integrated, 1.25e-7, max_relative = 1e-9);
    }

    #[test]
    fn offload_energy_examples() {
        assert_eq!(offload_energy(0.0, 1e-7, 0.01, 2e6, 1e-9).unwrap(), 0.0);
        assert_relative_eq!(
            offload_energy(2e4, 1e-7, 0.01, 2e6, 1e-9).unwrap(),
            1e-4,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            offload_bits_from_energy(1e-4, 1e-7, 0.01, 2e6, 1e-9).unwrap(),
            2e4,
            max_relative = 1e-12
        );
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(local_bits_from_energy(0.0, 1e-28, 500, 0.01).unwrap(), 0.0);
        assert_relative_eq!(
            local_bits_from_energy(1.25e-7, 1e-28, 500, 0.01).unwrap(),
            1000.0,
            max_relative = 1e-12
        );
        assert_eq!(
            offload_bits_from_energy(0.0, 1e-7, 0.01, 2e6, 1e-9).unwrap(),
            0.0
        );
        let lo = offload_bits_from_energy(1e-3, 1e-8, 0.01, 2e6, 1e-9).unwrap();
        let more_e = offload_bits_from_energy(2e-3, 1e-8, 0.01, 2e6, 1e-9).unwrap();
        let more_h = offload_bits_from_energy(1e-3, 2e-8, 0.01, 2e6, 1e-9).unwrap();
        assert!(more_e > lo && more_h > lo);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            local_energy(-1.0, 1e-28, 500, 0.01),
            Err(ModelError::Domain(_))
        ));
        assert!(local_energy(1.0, 0.0, 500, 0.01).is_err());
        assert!(local_energy(1.0, 1e-28, 0, 0.01).is_err());
        assert!(offload_energy(1.0, -1e-7, 0.01, 2e6, 1e-9).is_err());
        assert!(local_bits_from_energy(-1e-3, 1e-28, 500, 0.01).is_err());
        assert!(offload_bits_from_energy(-1e-3, 1e-7, 0.01, 2e6, 1e-9).is_err());
    }

    #[test]
    fn zero_allocation_slack_is_available_energy() {
        let inst = small_instance();
        let rep = causality_slack(&inst, &Allocation::zeros(2, 3)).unwrap();
        assert!(rep.feasible);
        assert_eq!(rep.slack[0], vec![0.3, 0.8, 1.05]);
        assert_eq!(rep.slack[1], vec![0.3, 0.3, 1.3]);
        assert_eq!(rep.worst_violation, 0.0);
    }

    #[test]
    fn no_energy_means_infeasible() {
        let cfg = SystemConfig::homogeneous(1, 1, 0.02, 2e6, 1e-9, 1.0, 1e-28, 500, 0.0);
        let inst = Instance::new(cfg, vec![vec![1e-9]], vec![vec![]]).unwrap();
        let mut a = Allocation::zeros(1, 1);
        a.local_bits[0][0] = 1e5;
        let rep = causality_slack(&inst, &a).unwrap();
        assert!(!rep.feasible);
        assert!(rep.worst_violation > 0.0);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let inst = small_instance();
        assert!(matches!(
            causality_slack(&inst, &Allocation::zeros(2, 2)),
            Err(ModelError::Shape { .. })
        ));
        assert!(weighted_rate(&Allocation::zeros(2, 3), &[1.0]).is_err());
    }

    #[test]
    fn weighted_rate_examples() {
        let mut a = Allocation::zeros(2, 3);
        assert_eq!(weighted_rate(&a, &[1.0, 1.0]).unwrap(), 0.0);
        a.local_bits[0] = vec![1.0, 2.0, 3.0];
        a.offload_bits[1] = vec![4.0, 5.0, 6.0];
        assert_eq!(weighted_rate(&a, &[1.0, 1.0]).unwrap(), 21.0);
        assert_eq!(weighted_rate(&a, &[3.0, 3.0]).unwrap(), 63.0);
        assert_eq!(weighted_rate(&a, &[2.0, 0.5]).unwrap(), 12.0 + 7.5);
    }

    #[test]
    fn instance_validation() {
        let cfg = SystemConfig::homogeneous(1, 2, 0.02, 2e6, 1e-9, 1.0, 1e-28, 500, 0.3);
        assert!(Instance::new(cfg.clone(), vec![vec![1e-9, 0.0]], vec![vec![0.1]]).is_err());
        assert!(Instance::new(cfg.clone(), vec![vec![1e-9, 1e-9]], vec![vec![-0.1]]).is_err());
        assert!(Instance::new(cfg.clone(), vec![vec![1e-9, 1e-9]], vec![vec![0.1, 0.2]]).is_err());
        let mut bad = cfg;
        bad.weights = vec![];
        assert!(bad.validate().is_err());
    }

    #[test]
    fn json_round_trip_and_parse_errors() {
        let inst = small_instance();
        let back = Instance::from_json_str(&inst.to_json_pretty()).unwrap();
        assert_eq!(back, inst);
        let err = Instance::from_json_str("{\n \"config\": 3\n}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn derived_quantities() {
        let inst = small_instance();
        let mut a = Allocation::zeros(2, 3);
        a.offload_bits[0][1] = 4e4;
        let p = a.transmit_power(&inst);
        let e = offload_energy(4e4, 2e-9, 0.02, 2e6, 1e-9).unwrap();
        assert_relative_eq!(p[0][1], e / 0.02, max_relative = 1e-12);
        assert_eq!(a.offload_rate(0.02)[0][1], 2e6);
        assert_eq!(inst.available_energy(1), vec![0.3, 0.3, 1.3]);
        assert_eq!(inst.total_available(0), 1.05);
    }
}
