//! Lagrange-dual solution of the offline weighted computation-rate problem.
//!
//! Dualizing the energy-causality constraints with multipliers μ_{k,n} ≥ 0
//! splits the Lagrangian into 2KN scalar concave problems whose maximizers
//! have closed forms in terms of the tail sums M_{k,n} = Σ_{j≥n} μ_{k,j}:
//!
//! ```text
//! ℓ_loc = sqrt(ω τ² / (3 M γ C³))
//! ℓ_off = max(0, τB log2(ω B h / (M σ0² ln 2)))
//! ```
//!
//! The dual function is minimized by projected subgradient steps
//! μ ← max(0, μ − η g) where g is the causality slack of the induced
//! allocation. Users never interact, so every user is solved on its own.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::SolveError;
pub use crate::model::Modes;
use crate::model::{
    causality_slack_with_tol, weighted_rate, Allocation, FeasibilityReport, Instance, LocalModel,
    OffloadModel, DEFAULT_FEASIBILITY_TOL,
};

/// Price assigned to slots that have no energy at all; drives their bits to zero.
/// Iterations without a relative dual improvement of `eps` before an adaptive
/// step is halved.
const STALL_WINDOW: usize = 200;

const BLOCKING_PRICE: f64 = 1e300;

/// Lagrange multipliers and their cached tail sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DualStateWire", into = "DualStateWire")]
pub struct DualState {
    mu: Vec<Vec<f64>>,
    tail: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct DualStateWire {
    mu: Vec<Vec<f64>>,
}

impl TryFrom<DualStateWire> for DualState {
    type Error = String;
    fn try_from(w: DualStateWire) -> Result<Self, String> {
        DualState::new(w.mu).map_err(|e| e.to_string())
    }
}

impl From<DualState> for DualStateWire {
    fn from(d: DualState) -> Self {
        DualStateWire { mu: d.mu }
    }
}

impl DualState {
    /// Builds a dual state; every multiplier must be finite and non-negative.
    pub fn new(mu: Vec<Vec<f64>>) -> Result<Self, SolveError> {
        for (k, row) in mu.iter().enumerate() {
            for (n, &m) in row.iter().enumerate() {
                if !(m.is_finite() && m >= 0.0) {
                    return Err(SolveError::InvalidDual {
                        user: k,
                        slot: n,
                        value: m,
                    });
                }
            }
        }
        let tail = mu.iter().map(|row| tail_sums(row)).collect();
        Ok(Self { mu, tail })
    }

    pub fn uniform(num_users: usize, num_slots: usize, value: f64) -> Result<Self, SolveError> {
        Self::new(vec![vec![value; num_slots]; num_users])
    }

    pub fn mu(&self) -> &[Vec<f64>] {
        &self.mu
    }

    /// M[k][n] = Σ_{j ≥ n} μ[k][j].
    pub fn tail_sums(&self) -> &[Vec<f64>] {
        &self.tail
    }

    fn check(&self, instance: &Instance) -> Result<(), SolveError> {
        let (kk, nn) = (instance.num_users(), instance.num_slots());
        if self.mu.len() != kk || self.mu.iter().any(|r| r.len() != nn) {
            return Err(SolveError::Options(format!(
                "dual state shape does not match a {kk}x{nn} instance"
            )));
        }
        for (k, row) in self.tail.iter().enumerate() {
            for (n, &m) in row.iter().enumerate() {
                if m <= 0.0 {
                    return Err(SolveError::InvalidDual {
                        user: k,
                        slot: n,
                        value: m,
                    });
                }
            }
        }
        Ok(())
    }
}

fn tail_sums(mu: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; mu.len()];
    let mut acc = 0.0;
    for n in (0..mu.len()).rev() {
        acc += mu[n];
        out[n] = acc;
    }
    out
}

/// Step-size schedule for the multiplier update.
///
/// `Diminishing` and `Constant` steps are expressed in units of the user's
/// natural scale `μ⁽⁰⁾ / E_avail`, so `eta0 = 1` means "move μ by its own
/// magnitude when the gradient equals the whole energy budget".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StepRule {
    /// η⁽q⁾ = η₀ / q.
    Diminishing { eta0: f64 },
    /// η⁽q⁾ = η.
    Constant { eta: f64 },
    /// η⁽q⁾ = η·2^(−s), where s counts the stretches of iterations without
    /// a relative dual improvement of `eps`.
    Adaptive { eta: f64 },
    /// η⁽q⁾ = γ (G⁽q⁾ − P_best) / ‖g⁽q⁾‖², with P_best the best feasible primal value found.
    Polyak { gamma: f64 },
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::Adaptive { eta: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    /// Relative change of the dual value below which iteration stops.
    pub eps: f64,
    /// Relative duality gap below which iteration stops early.
    pub gap_tol: f64,
    pub max_iters: usize,
    pub step: StepRule,
    /// Floor on μ[k][N] as a fraction of the smallest price that keeps slot N
    /// alone within the user's total energy.
    pub floor_factor: f64,
    pub modes: Modes,
    pub feasibility_tol: f64,
    /// Feasible-primal extraction period (iterations) for the gap test.
    pub check_every: usize,
    pub record_trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            eps: 1e-13,
            gap_tol: 1e-9,
            max_iters: 100_000,
            step: StepRule::default(),
            floor_factor: 0.5,
            modes: Modes::BOTH,
            feasibility_tol: DEFAULT_FEASIBILITY_TOL,
            check_every: 50,
            record_trace: false,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |m: &str| Err(SolveError::Options(m.to_string()));
        if self.eps.is_nan() || self.eps < 0.0 {
            return bad("eps must be >= 0");
        }
        if self.gap_tol.is_nan() || self.gap_tol < 0.0 {
            return bad("gap_tol must be >= 0");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be >= 1");
        }
        if !(self.floor_factor > 0.0 && self.floor_factor < 1.0) {
            return bad("floor_factor must lie in (0, 1)");
        }
        if self.check_every == 0 {
            return bad("check_every must be >= 1");
        }
        if !self.modes.local && !self.modes.offload {
            return bad("at least one execution mode must be enabled");
        }
        let step_ok = match self.step {
            StepRule::Diminishing { eta0 } => eta0 > 0.0 && eta0.is_finite(),
            StepRule::Constant { eta } | StepRule::Adaptive { eta } => eta > 0.0 && eta.is_finite(),
            StepRule::Polyak { gamma } => gamma > 0.0 && gamma < 2.0,
        };
        if !step_ok {
            return bad("step size must be positive (Polyak gamma in (0, 2))");
        }
        Ok(())
    }
}

/// Outcome of one user's dual solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserReport {
    pub primal_value: f64,
    pub dual_value: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dual_trace: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Feasible allocation (repaired primal recovery).
    pub allocation: Allocation,
    pub primal_value: f64,
    /// Best (smallest) dual value; an upper bound on the optimum.
    pub dual_value: f64,
    pub relative_gap: f64,
    /// Largest per-user iteration count.
    pub iterations: usize,
    pub converged: bool,
    /// Objective of the closed-form recovery at the final multipliers, before repair.
    pub unrepaired_value: f64,
    /// Worst causality violation of that unrepaired point, in Joules.
    pub unrepaired_violation: f64,
    pub dual: DualState,
    pub feasibility: FeasibilityReport,
    /// Per-slot energy use of the reported allocation.
    pub slot_energy: Vec<Vec<f64>>,
    pub users: Vec<UserReport>,
}

impl SolveReport {
    /// Copy without the per-iteration dual traces.
    pub fn without_traces(&self) -> SolveReport {
        let mut r = self.clone();
        for u in &mut r.users {
            u.dual_trace = None;
        }
        r
    }
}

/// ℓ_loc maximizing ω ℓ − M E_loc(ℓ).
pub fn local_bits_at_price(weight: f64, local: &LocalModel, price: f64) -> f64 {
    (weight / (3.0 * price * local.coeff)).sqrt()
}

/// ℓ_off maximizing ω ℓ − M E_off(ℓ) over ℓ ≥ 0.
pub fn offload_bits_at_price(weight: f64, link: &OffloadModel, price: f64) -> f64 {
    // ω B h / (M σ0² ln 2) written with τB and σ0²τ/h.
    let ratio = weight * link.bits_per_doubling / (price * link.scale * LN_2);
    if ratio <= 1.0 {
        0.0
    } else {
        link.bits_per_doubling * ratio.log2()
    }
}

/// Closed-form maximizer of the Lagrangian for the given multipliers.
pub fn primal_from_dual(instance: &Instance, dual: &DualState) -> Result<Allocation, SolveError> {
    primal_from_dual_with_modes(instance, dual, Modes::BOTH)
}

pub fn primal_from_dual_with_modes(
    instance: &Instance,
    dual: &DualState,
    modes: Modes,
) -> Result<Allocation, SolveError> {
    instance.validate()?;
    dual.check(instance)?;
    let mut alloc = Allocation::zeros(instance.num_users(), instance.num_slots());
    for k in 0..instance.num_users() {
        let p = UserProblem::new(instance, k, modes);
        for n in 0..instance.num_slots() {
            let (l, o) = p.bits_at_price(n, dual.tail[k][n]);
            alloc.local_bits[k][n] = l;
            alloc.offload_bits[k][n] = o;
        }
    }
    Ok(alloc)
}

/// Dual function value: the Lagrangian maximized over non-negative bits.
pub fn dual_function(instance: &Instance, dual: &DualState) -> Result<f64, SolveError> {
    dual_function_with_modes(instance, dual, Modes::BOTH)
}

pub fn dual_function_with_modes(
    instance: &Instance,
    dual: &DualState,
    modes: Modes,
) -> Result<f64, SolveError> {
    instance.validate()?;
    dual.check(instance)?;
    Ok((0..instance.num_users())
        .map(|k| {
            let p = UserProblem::new(instance, k, modes);
            p.evaluate(&dual.mu[k], &dual.tail[k]).value
        })
        .sum())
}

/// Gradient of the dual function: the causality slack of the induced allocation.
pub fn dual_gradient(instance: &Instance, dual: &DualState) -> Result<Vec<Vec<f64>>, SolveError> {
    dual_gradient_with_modes(instance, dual, Modes::BOTH)
}

pub fn dual_gradient_with_modes(
    instance: &Instance,
    dual: &DualState,
    modes: Modes,
) -> Result<Vec<Vec<f64>>, SolveError> {
    instance.validate()?;
    dual.check(instance)?;
    Ok((0..instance.num_users())
        .map(|k| {
            let p = UserProblem::new(instance, k, modes);
            p.evaluate(&dual.mu[k], &dual.tail[k]).gradient
        })
        .collect())
}

/// The partial Lagrangian at an arbitrary allocation: weighted bits plus the
/// multiplier-weighted causality slacks.
pub fn lagrangian(
    instance: &Instance,
    allocation: &Allocation,
    dual: &DualState,
) -> Result<f64, SolveError> {
    dual.check(instance)?;
    let rep = causality_slack_with_tol(instance, allocation, f64::INFINITY)?;
    let rate = weighted_rate(allocation, &instance.config.weights)?;
    let penalty: f64 = dual
        .mu
        .iter()
        .zip(&rep.slack)
        .flat_map(|(m, s)| m.iter().zip(s).map(|(a, b)| a * b))
        .sum();
    Ok(rate + penalty)
}

/// (dual − primal) / max(1, dual).
pub fn duality_gap(report: &SolveReport) -> f64 {
    relative_gap(report.dual_value, report.primal_value)
}

fn relative_gap(dual: f64, primal: f64) -> f64 {
    (dual - primal) / dual.max(1.0)
}

/// Makes any non-negative allocation causal by scaling bits down.
///
/// Slots are visited in order; when the cumulative energy at slot n exceeds
/// what is available, the bits of slot n are scaled by the largest common
/// factor that restores the constraint. If that scaling would push a slot
/// below its predecessor where the input had them ordered, the two are merged
/// and rescaled together, so non-decreasing input rows stay non-decreasing.
/// The output never exceeds the input entrywise.
pub fn feasibility_repair(
    instance: &Instance,
    allocation: &Allocation,
) -> Result<Allocation, SolveError> {
    instance.validate()?;
    allocation.check_shape(instance.num_users(), instance.num_slots())?;
    if !allocation.is_valid() {
        return Err(SolveError::Options(
            "allocation entries must be finite and >= 0".into(),
        ));
    }
    let mut out = allocation.clone();
    for k in 0..instance.num_users() {
        let p = UserProblem::new(instance, k, Modes::BOTH);
        p.repair(&mut out.local_bits[k], &mut out.offload_bits[k]);
    }
    Ok(out)
}

/// Runs the projected subgradient method on every user and extracts a
/// feasible allocation.
pub fn solve(instance: &Instance, options: &SolveOptions) -> Result<SolveReport, SolveError> {
    instance.validate()?;
    options.validate()?;
    let kk = instance.num_users();

    let solve_one = |k: usize| UserProblem::new(instance, k, options.modes).solve(options);
    #[cfg(feature = "parallel")]
    let outcomes: Vec<UserOutcome> = {
        use rayon::prelude::*;
        (0..kk).into_par_iter().map(solve_one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<UserOutcome> = (0..kk).map(solve_one).collect();

    let nn = instance.num_slots();
    let mut allocation = Allocation::zeros(kk, nn);
    let mut unrepaired = Allocation::zeros(kk, nn);
    let mut mu = Vec::with_capacity(kk);
    let mut users = Vec::with_capacity(kk);
    for (k, o) in outcomes.into_iter().enumerate() {
        allocation.local_bits[k] = o.local;
        allocation.offload_bits[k] = o.offload;
        unrepaired.local_bits[k] = o.raw_local;
        unrepaired.offload_bits[k] = o.raw_offload;
        mu.push(o.mu);
        users.push(o.report);
    }
    let primal_value: f64 = users.iter().map(|u| u.primal_value).sum();
    let dual_value: f64 = users.iter().map(|u| u.dual_value).sum();
    let feasibility = causality_slack_with_tol(instance, &allocation, options.feasibility_tol)?;
    let raw_feas = causality_slack_with_tol(instance, &unrepaired, f64::INFINITY)?;
    Ok(SolveReport {
        slot_energy: allocation.slot_energy(instance),
        unrepaired_value: weighted_rate(&unrepaired, &instance.config.weights)?,
        unrepaired_violation: raw_feas.worst_violation,
        allocation,
        primal_value,
        dual_value,
        relative_gap: relative_gap(dual_value, primal_value),
        iterations: users.iter().map(|u| u.iterations).max().unwrap_or(0),
        converged: users.iter().all(|u| u.converged),
        dual: DualState::new(mu)?,
        feasibility,
        users,
    })
}

struct UserOutcome {
    local: Vec<f64>,
    offload: Vec<f64>,
    raw_local: Vec<f64>,
    raw_offload: Vec<f64>,
    mu: Vec<f64>,
    report: UserReport,
}

struct Evaluation {
    value: f64,
    gradient: Vec<f64>,
    local: Vec<f64>,
    offload: Vec<f64>,
}

/// One user's slice of the problem.
struct UserProblem {
    weight: f64,
    local: LocalModel,
    links: Vec<OffloadModel>,
    available: Vec<f64>,
    modes: Modes,
}

impl UserProblem {
    fn new(instance: &Instance, k: usize, modes: Modes) -> Self {
        let cfg = &instance.config;
        Self {
            weight: cfg.weights[k],
            local: cfg.local_model(k),
            links: instance.profiles.h[k]
                .iter()
                .map(|&g| cfg.offload_model(g))
                .collect(),
            available: instance.available_energy(k),
            modes,
        }
    }

    fn slots(&self) -> usize {
        self.available.len()
    }

    fn bits_at_price(&self, n: usize, price: f64) -> (f64, f64) {
        let l = if self.modes.local {
            local_bits_at_price(self.weight, &self.local, price)
        } else {
            0.0
        };
        let o = if self.modes.offload {
            offload_bits_at_price(self.weight, &self.links[n], price)
        } else {
            0.0
        };
        (l, o)
    }

    fn energy(&self, n: usize, local: f64, offload: f64) -> f64 {
        self.local.energy(local) + self.links[n].energy(offload)
    }

    fn energy_at_price(&self, n: usize, price: f64) -> f64 {
        let (l, o) = self.bits_at_price(n, price);
        self.energy(n, l, o)
    }

    /// Dual value, gradient and maximizer for multipliers `mu` with tails `tail`.
    fn evaluate(&self, mu: &[f64], tail: &[f64]) -> Evaluation {
        let n_slots = self.slots();
        let mut local = vec![0.0; n_slots];
        let mut offload = vec![0.0; n_slots];
        let mut gradient = vec![0.0; n_slots];
        let mut value = 0.0;
        let mut used = 0.0;
        for n in 0..n_slots {
            let (l, o) = self.bits_at_price(n, tail[n]);
            let e = self.energy(n, l, o);
            local[n] = l;
            offload[n] = o;
            // Tail-sum regrouping of the Lagrangian; μ·A vanishes on blocked slots.
            value += self.weight * (l + o) - tail[n] * e;
            if self.available[n] > 0.0 {
                value += mu[n] * self.available[n];
            }
            used += e;
            gradient[n] = self.available[n] - used;
        }
        Evaluation {
            value,
            gradient,
            local,
            offload,
        }
    }

    /// See [`feasibility_repair`].
    fn repair(&self, local: &mut [f64], offload: &mut [f64]) {
        let n_slots = self.slots();
        let orig_l = local.to_vec();
        let orig_o = offload.to_vec();
        let mut theta = vec![1.0; n_slots];
        // Start slot of the scaled group each slot belongs to.
        let mut group = (0..n_slots).collect::<Vec<_>>();
        let mut used_before = 0.0;
        let mut prefix = Vec::with_capacity(n_slots + 1);
        prefix.push(0.0);
        for n in 0..n_slots {
            let e = self.energy(n, local[n], offload[n]);
            if used_before + e > self.available[n] {
                let mut start = n;
                loop {
                    let base = prefix[start];
                    let budget = self.available[n];
                    let fits = |t: f64| {
                        let mut s = base;
                        for j in start..=n {
                            s += self.energy(j, t * orig_l[j], t * orig_o[j]);
                        }
                        s <= budget
                    };
                    let t = bisect_largest(fits);
                    let merge = start > 0 && {
                        let j = start - 1;
                        let broken = |a: &[f64]| a[j] <= a[start] && theta[j] * a[j] > t * a[start];
                        broken(&orig_l) || broken(&orig_o)
                    };
                    if merge {
                        start = group[start - 1];
                        continue;
                    }
                    for j in start..=n {
                        theta[j] = t;
                        group[j] = start;
                        local[j] = t * orig_l[j];
                        offload[j] = t * orig_o[j];
                    }
                    break;
                }
                // Recompute the prefix over the rescaled group.
                prefix.truncate(start + 1);
                let mut acc = prefix[start];
                for j in start..n {
                    acc += self.energy(j, local[j], offload[j]);
                    prefix.push(acc);
                }
                used_before = acc;
            }
            used_before += self.energy(n, local[n], offload[n]);
            prefix.push(used_before);
        }
    }

    /// Spends any slack left at the last slot there, split at a common price.
    fn top_up_last(&self, local: &mut [f64], offload: &mut [f64]) {
        let last = self.slots() - 1;
        let used: f64 = (0..=last)
            .map(|n| self.energy(n, local[n], offload[n]))
            .sum();
        let slack = self.available[last] - used;
        if slack <= 0.0 {
            return;
        }
        let current = self.energy(last, local[last], offload[last]);
        let target = current + slack;
        let price = self.price_for_energy(last, target);
        let (l, o) = self.bits_at_price(last, price);
        if l >= local[last] && o >= offload[last] {
            local[last] = l;
            offload[last] = o;
        }
    }

    /// Smallest price whose slot-n allocation uses at most `target` Joules.
    fn price_for_energy(&self, n: usize, target: f64) -> f64 {
        price_bisect(|m| self.energy_at_price(n, m), target)
    }

    /// Uniform μ whose induced allocation over the unblocked slots uses the whole budget.
    fn initial_multiplier(&self, start: usize, total: f64) -> f64 {
        let m = self.slots() - start;
        price_bisect(
            |mu| {
                (start..self.slots())
                    .map(|n| self.energy_at_price(n, (self.slots() - n) as f64 * mu))
                    .sum::<f64>()
            },
            total,
        )
        .max(f64::MIN_POSITIVE * m as f64)
    }

    fn solve(&self, opts: &SolveOptions) -> UserOutcome {
        let n_slots = self.slots();
        let total = self.available[n_slots - 1];
        let start = self.available.iter().position(|&a| a > 0.0);
        let Some(start) = start else {
            // No energy ever: everything is zero and the dual infimum 0 is
            // approached as μ[N] grows without bound.
            let mut mu = vec![0.0; n_slots];
            mu[n_slots - 1] = BLOCKING_PRICE;
            return UserOutcome {
                local: vec![0.0; n_slots],
                offload: vec![0.0; n_slots],
                raw_local: vec![0.0; n_slots],
                raw_offload: vec![0.0; n_slots],
                mu,
                report: UserReport {
                    primal_value: 0.0,
                    dual_value: 0.0,
                    iterations: 0,
                    converged: true,
                    dual_trace: opts.record_trace.then(Vec::new),
                },
            };
        };

        let mu0 = self.initial_multiplier(start, total);
        let floor = opts.floor_factor * self.price_for_energy(n_slots - 1, total);
        // Natural step unit: multiplier magnitude per Joule of slack.
        let unit = mu0 / total;

        let mut mu = vec![0.0; n_slots];
        for m in mu.iter_mut().skip(start) {
            *m = mu0;
        }
        mu[n_slots - 1] = mu[n_slots - 1].max(floor);
        if start > 0 {
            mu[start - 1] = BLOCKING_PRICE;
        }

        let mut best_dual = f64::INFINITY;
        let mut best_mu = mu.clone();
        let mut best_primal = f64::NEG_INFINITY;
        let mut best_alloc = (vec![0.0; n_slots], vec![0.0; n_slots]);
        let mut prev_dual: Option<f64> = None;
        let mut trace = opts.record_trace.then(Vec::new);
        let mut converged = false;
        let mut iterations = 0;
        let mut shrink = 1.0;
        let mut since_best = 0;

        for q in 1..=opts.max_iters {
            iterations = q;
            let tail = tail_sums(&mu);
            let ev = self.evaluate(&mu, &tail);
            if let Some(t) = trace.as_mut() {
                t.push(ev.value);
            }
            if ev.value < best_dual {
                if ev.value < best_dual * (1.0 - opts.eps) {
                    since_best = 0;
                }
                best_dual = ev.value;
                best_mu.clone_from(&mu);
            }
            since_best += 1;
            if since_best >= STALL_WINDOW {
                shrink *= 0.5;
                since_best = 0;
            }
            let polyak = matches!(opts.step, StepRule::Polyak { .. });
            if polyak || q == 1 || q % opts.check_every == 0 {
                let (l, o, v) = self.extract(ev.local.clone(), ev.offload.clone());
                if v > best_primal {
                    best_primal = v;
                    best_alloc = (l, o);
                }
                if relative_gap(best_dual, best_primal) < opts.gap_tol {
                    converged = true;
                    break;
                }
            }
            if let Some(prev) = prev_dual {
                if ((ev.value - prev) / ev.value).abs() < opts.eps {
                    converged = true;
                    break;
                }
            }
            prev_dual = Some(ev.value);

            let eta = match opts.step {
                StepRule::Diminishing { eta0 } => eta0 * unit / q as f64,
                StepRule::Constant { eta } => eta * unit,
                StepRule::Adaptive { eta } => eta * unit * shrink,
                StepRule::Polyak { gamma } => {
                    let norm2: f64 = ev.gradient[start..].iter().map(|g| g * g).sum();
                    if norm2 == 0.0 {
                        converged = true;
                        break;
                    }
                    gamma * (ev.value - best_primal).max(0.0) / norm2
                }
            };
            for (m, g) in mu[start..].iter_mut().zip(&ev.gradient[start..]) {
                *m = (*m - eta * g).max(0.0);
            }
            mu[n_slots - 1] = mu[n_slots - 1].max(floor);
        }

        // Recover from the best multipliers and keep the better feasible point.
        let tail = tail_sums(&best_mu);
        let ev = self.evaluate(&best_mu, &tail);
        let (raw_local, raw_offload) = (ev.local.clone(), ev.offload.clone());
        let (l, o, v) = self.extract(ev.local, ev.offload);
        if v >= best_primal {
            best_primal = v;
            best_alloc = (l, o);
        }
        UserOutcome {
            local: best_alloc.0,
            offload: best_alloc.1,
            raw_local,
            raw_offload,
            mu: best_mu,
            report: UserReport {
                primal_value: best_primal,
                dual_value: best_dual,
                iterations,
                converged,
                dual_trace: trace,
            },
        }
    }

    /// Repair, spend leftover energy at the last slot, and score.
    fn extract(&self, mut local: Vec<f64>, mut offload: Vec<f64>) -> (Vec<f64>, Vec<f64>, f64) {
        // Slots with no energy yet cannot carry bits.
        for n in 0..self.slots() {
            if self.available[n] <= 0.0 {
                local[n] = 0.0;
                offload[n] = 0.0;
            }
        }
        self.repair(&mut local, &mut offload);
        self.top_up_last(&mut local, &mut offload);
        let v = self.weight * (local.iter().sum::<f64>() + offload.iter().sum::<f64>());
        (local, offload, v)
    }
}

/// Largest t in [0, 1] with `fits(t)`, assuming `fits` is monotone and `fits(0)`.
fn bisect_largest(fits: impl Fn(f64) -> bool) -> f64 {
    if fits(1.0) {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Smallest price m > 0 with `energy(m) <= target` for a decreasing `energy`.
fn price_bisect(energy: impl Fn(f64) -> f64, target: f64) -> f64 {
    let mut hi = 1.0;
    while energy(hi) > target {
        hi *= 16.0;
        if !hi.is_finite() {
            return BLOCKING_PRICE;
        }
    }
    let mut lo = hi;
    while energy(lo) <= target && lo > 1e-300 {
        lo /= 16.0;
    }
    if energy(lo) <= target {
        return lo;
    }
    // energy(lo) > target >= energy(hi); bisect in log space.
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if energy(mid) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
