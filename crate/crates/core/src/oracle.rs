//! Independent ground-truth solvers for verification.
//!
//! Nothing here touches the dual machinery: both solvers work directly on the
//! primal problem through [`crate::model`] only.

use serde::{Deserialize, Serialize};

use crate::error::SolveError;
use crate::model::{
    causality_slack_with_tol, weighted_rate, Allocation, Instance, LocalModel, Modes, OffloadModel,
    DEFAULT_FEASIBILITY_TOL,
};

/// Largest number of (user, slot) pairs the grid search accepts.
pub const GRID_MAX_PAIRS: usize = 4;
const GRID_ROUNDS: usize = 3;
const GRID_SHRINK: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    Grid,
    ProjectedGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub allocation: Allocation,
    pub objective: f64,
    pub method: OracleMethod,
    /// Grid: points per axis. Projected gradient: iterations used (max over users).
    pub resolution: usize,
    /// Number of candidate points (grid) or objective evaluations (gradient).
    pub evaluations: u64,
}

/// Exhaustive search over a refined grid of bit allocations.
///
/// Each axis spans `[0, bits affordable with all energy available by that slot]`.
/// After the first pass the grid is re-centred on the incumbent and shrunk by a
/// factor of 4, three times.
pub fn grid_search(
    instance: &Instance,
    points_per_axis: usize,
) -> Result<OracleResult, SolveError> {
    grid_search_with_modes(instance, points_per_axis, Modes::BOTH)
}

pub fn grid_search_with_modes(
    instance: &Instance,
    points_per_axis: usize,
    modes: Modes,
) -> Result<OracleResult, SolveError> {
    instance.validate()?;
    let pairs = instance.num_users() * instance.num_slots();
    if pairs > GRID_MAX_PAIRS {
        return Err(SolveError::TooLarge {
            dims: 2 * pairs,
            limit: 2 * GRID_MAX_PAIRS,
        });
    }
    if points_per_axis < 2 {
        return Err(SolveError::Options("points_per_axis must be >= 2".into()));
    }
    let mut alloc = Allocation::zeros(instance.num_users(), instance.num_slots());
    let mut evaluations = 0;
    // The objective and the constraints separate over users, so the joint grid
    // optimum is the per-user optima side by side.
    for k in 0..instance.num_users() {
        let user = UserGrid::new(instance, k, modes);
        let (best, evals) = user.search(points_per_axis);
        evaluations += evals;
        let n = instance.num_slots();
        alloc.local_bits[k] = best[..n].to_vec();
        alloc.offload_bits[k] = best[n..].to_vec();
    }
    Ok(OracleResult {
        objective: weighted_rate(&alloc, &instance.config.weights)?,
        allocation: alloc,
        method: OracleMethod::Grid,
        resolution: points_per_axis,
        evaluations,
    })
}

struct UserGrid {
    weight: f64,
    local: LocalModel,
    links: Vec<OffloadModel>,
    available: Vec<f64>,
    /// Per-axis upper bounds: local slots then offload slots.
    upper: Vec<f64>,
}

impl UserGrid {
    fn new(instance: &Instance, k: usize, modes: Modes) -> Self {
        let cfg = &instance.config;
        let local = cfg.local_model(k);
        let links: Vec<OffloadModel> = instance.profiles.h[k]
            .iter()
            .map(|&g| cfg.offload_model(g))
            .collect();
        let available = instance.available_energy(k);
        let mut upper: Vec<f64> = available
            .iter()
            .map(|&a| if modes.local { local.bits(a) } else { 0.0 })
            .collect();
        upper.extend(
            available
                .iter()
                .zip(&links)
                .map(|(&a, l)| if modes.offload { l.bits(a) } else { 0.0 }),
        );
        Self {
            weight: cfg.weights[k],
            local,
            links,
            available,
            upper,
        }
    }

    fn search(&self, points: usize) -> (Vec<f64>, u64) {
        let dims = self.upper.len();
        let mut lo = vec![0.0; dims];
        let mut hi = self.upper.clone();
        let mut best = vec![0.0; dims];
        let mut best_val = 0.0;
        let mut evals = 0;
        for round in 0..=GRID_ROUNDS {
            if round > 0 {
                for d in 0..dims {
                    let half = (hi[d] - lo[d]) / (2.0 * GRID_SHRINK);
                    lo[d] = (best[d] - half).max(0.0);
                    hi[d] = (best[d] + half).min(self.upper[d]);
                }
            }
            let axes: Vec<Vec<f64>> = (0..dims)
                .map(|d| {
                    if hi[d] <= lo[d] {
                        vec![lo[d]]
                    } else {
                        (0..points)
                            .map(|i| lo[d] + (hi[d] - lo[d]) * i as f64 / (points - 1) as f64)
                            .collect()
                    }
                })
                .collect();
            let mut point = vec![0.0; dims];
            self.descend(
                0,
                0.0,
                &axes,
                &mut point,
                &mut best,
                &mut best_val,
                &mut evals,
            );
        }
        (best, evals)
    }

    /// Depth-first enumeration slot by slot; a prefix that already violates
    /// causality is infeasible for every completion, so it is skipped.
    #[allow(clippy::too_many_arguments)]
    fn descend(
        &self,
        slot: usize,
        used: f64,
        axes: &[Vec<f64>],
        point: &mut [f64],
        best: &mut [f64],
        best_val: &mut f64,
        evals: &mut u64,
    ) {
        let n = self.available.len();
        if slot == n {
            *evals += 1;
            let v = self.weight * point.iter().sum::<f64>();
            if v > *best_val {
                *best_val = v;
                best.copy_from_slice(point);
            }
            return;
        }
        for &l in &axes[slot] {
            let el = self.local.energy(l);
            if used + el > self.available[slot] {
                break;
            }
            for &o in &axes[n + slot] {
                let e = used + el + self.links[slot].energy(o);
                if e > self.available[slot] {
                    break;
                }
                point[slot] = l;
                point[n + slot] = o;
                self.descend(slot + 1, e, axes, point, best, best_val, evals);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GradientOptions {
    pub max_iters: usize,
    /// Stop when the relative objective improvement over one iteration stays below this.
    pub rel_tol: f64,
    pub modes: Modes,
}

impl Default for GradientOptions {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            rel_tol: 1e-12,
            modes: Modes::BOTH,
        }
    }
}

/// Projected gradient ascent on the primal.
///
/// The iteration runs on per-slot energies rather than bits: there the
/// causality constraints are linear (prefix sums bounded by available energy)
/// and the objective, bits as a function of energy, is concave. Each step is
/// followed by the exact Euclidean projection onto that polytope with a
/// backtracking step size.
pub fn projected_gradient(
    instance: &Instance,
    options: &GradientOptions,
) -> Result<OracleResult, SolveError> {
    instance.validate()?;
    if !options.modes.local && !options.modes.offload {
        return Err(SolveError::Options(
            "at least one execution mode must be enabled".into(),
        ));
    }
    let (kk, nn) = (instance.num_users(), instance.num_slots());
    let mut alloc = Allocation::zeros(kk, nn);
    let mut max_iters = 0;
    let mut evaluations = 0;
    for k in 0..kk {
        let user = EnergyProblem::new(instance, k, options.modes);
        let (x, iters, evals) = user.maximize(options);
        max_iters = max_iters.max(iters);
        evaluations += evals;
        for n in 0..nn {
            alloc.local_bits[k][n] = user.local.bits(x[n]);
            alloc.offload_bits[k][n] = user.links[n].bits(x[nn + n]);
        }
    }
    Ok(OracleResult {
        objective: weighted_rate(&alloc, &instance.config.weights)?,
        allocation: alloc,
        method: OracleMethod::ProjectedGradient,
        resolution: max_iters,
        evaluations,
    })
}

struct EnergyProblem {
    weight: f64,
    local: LocalModel,
    links: Vec<OffloadModel>,
    available: Vec<f64>,
    modes: Modes,
}

impl EnergyProblem {
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

    fn objective(&self, x: &[f64]) -> f64 {
        let n = self.available.len();
        (0..n)
            .map(|j| self.local.bits(x[j]) + self.links[j].bits(x[n + j]))
            .sum::<f64>()
            * self.weight
    }

    fn gradient(&self, x: &[f64], floor: f64) -> Vec<f64> {
        let n = self.available.len();
        let mut g = vec![0.0; 2 * n];
        for j in 0..n {
            if self.modes.local {
                // d/dx (x / c)^{1/3}
                let xl = x[j].max(floor);
                g[j] = self.weight * self.local.bits(xl) / (3.0 * xl);
            }
            if self.modes.offload {
                let link = &self.links[j];
                g[n + j] = self.weight * link.bits_per_doubling
                    / (std::f64::consts::LN_2 * (link.scale + x[n + j]));
            }
        }
        g
    }

    fn project(&self, y: &[f64]) -> Vec<f64> {
        let n = self.available.len();
        let mut x = project_prefix_polytope(y, &self.available, self.modes);
        // Remove round-off overshoot.
        let mut used = 0.0;
        for j in 0..n {
            let t = x[j] + x[n + j];
            if used + t > self.available[j] {
                let room = (self.available[j] - used).max(0.0);
                let s = if t > 0.0 { room / t } else { 0.0 };
                x[j] *= s;
                x[n + j] *= s;
            }
            used += x[j] + x[n + j];
        }
        x
    }

    fn maximize(&self, opts: &GradientOptions) -> (Vec<f64>, usize, u64) {
        let n = self.available.len();
        let total = self.available[n - 1];
        if total <= 0.0 {
            return (vec![0.0; 2 * n], 0, 0);
        }
        let floor = 1e-12 * total;
        // Start from spending each arrival in its own slot, split between the enabled modes.
        let mut x = vec![0.0; 2 * n];
        let mut prev = 0.0;
        for j in 0..n {
            let arrival = self.available[j] - prev;
            prev = self.available[j];
            match (self.modes.local, self.modes.offload) {
                (true, true) => {
                    x[j] = arrival / 2.0;
                    x[n + j] = arrival / 2.0;
                }
                (true, false) => x[j] = arrival,
                _ => x[n + j] = arrival,
            }
        }
        x = self.project(&x);
        let mut fx = self.objective(&x);
        let mut evals = 1u64;
        let mut alpha = total * total / fx.max(1.0);
        let mut quiet = 0;
        let mut iters = 0;
        for it in 1..=opts.max_iters {
            iters = it;
            let g = self.gradient(&x, floor);
            let mut accepted = None;
            for _ in 0..60 {
                let y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + alpha * b).collect();
                let z = self.project(&y);
                let fz = self.objective(&z);
                evals += 1;
                let lin: f64 = z
                    .iter()
                    .zip(&x)
                    .zip(&g)
                    .map(|((a, b), c)| (a - b) * c)
                    .sum();
                let dist2: f64 = z.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
                if fz >= fx + lin - dist2 / (2.0 * alpha) && fz >= fx {
                    accepted = Some((z, fz));
                    break;
                }
                alpha *= 0.5;
            }
            let Some((z, fz)) = accepted else { break };
            let gain = (fz - fx) / fx.max(1.0);
            x = z;
            fx = fz;
            alpha *= 2.0;
            if gain < opts.rel_tol {
                quiet += 1;
                if quiet >= 20 {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        (x, iters, evals)
    }
}

/// Euclidean projection of `y` (local energies then offload energies) onto
/// {x ≥ 0, disabled modes 0, Σ_{j≤n}(x_loc,j + x_off,j) ≤ available[n]}.
///
/// Solved through its dual: x = (y − Λ)⁺ with Λ_j = Σ_{n≥j} λ_n, maximized by
/// cyclic exact coordinate ascent over the λ_n.
fn project_prefix_polytope(y: &[f64], available: &[f64], modes: Modes) -> Vec<f64> {
    let n = available.len();
    let yl: Vec<f64> = (0..n)
        .map(|j| if modes.local { y[j] } else { f64::NEG_INFINITY })
        .collect();
    let yo: Vec<f64> = (0..n)
        .map(|j| {
            if modes.offload {
                y[n + j]
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let mut lambda = vec![0.0; n];
    let used_through = |lambda: &[f64], upto: usize, extra: f64| -> f64 {
        let mut tail: f64 = lambda[upto..].iter().sum::<f64>() + extra;
        let mut s = 0.0;
        for j in (0..=upto).rev() {
            if j < upto {
                tail += lambda[j];
            }
            s += (yl[j] - tail).max(0.0) + (yo[j] - tail).max(0.0);
        }
        s
    };
    let scale = available[n - 1].max(f64::MIN_POSITIVE);
    for _sweep in 0..10_000 {
        let mut change: f64 = 0.0;
        for m in 0..n {
            let old = lambda[m];
            lambda[m] = 0.0;
            let new = if used_through(&lambda, m, 0.0) <= available[m] {
                0.0
            } else {
                // Decreasing piecewise-linear in the extra shift; bisect.
                let mut hi = 1.0_f64.max(old);
                while used_through(&lambda, m, hi) > available[m] {
                    hi *= 2.0;
                }
                let mut lo = 0.0;
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if used_through(&lambda, m, mid) > available[m] {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            };
            lambda[m] = new;
            change = change.max((new - old).abs());
        }
        if change <= 1e-15 * scale {
            break;
        }
    }
    let mut x = vec![0.0; 2 * n];
    let mut tail = 0.0;
    for j in (0..n).rev() {
        tail += lambda[j];
        x[j] = (yl[j] - tail).max(0.0);
        x[n + j] = (yo[j] - tail).max(0.0);
    }
    x
}

/// Worst normalized violation of the optimality conditions at (allocation, μ).
///
/// Takes the maximum over slots of: stationarity residuals of the per-slot
/// Lagrangian terms relative to ω_k, complementary slackness μ·|slack| relative
/// to the Lagrangian value, and negative slack relative to the user's energy.
/// Slots with no energy available yet are forced to zero and skipped.
pub fn kkt_residual(
    instance: &Instance,
    allocation: &Allocation,
    mu: &[Vec<f64>],
) -> Result<f64, SolveError> {
    kkt_residual_with_modes(instance, allocation, mu, Modes::BOTH)
}

#[allow(clippy::needless_range_loop)]
pub fn kkt_residual_with_modes(
    instance: &Instance,
    allocation: &Allocation,
    mu: &[Vec<f64>],
    modes: Modes,
) -> Result<f64, SolveError> {
    instance.validate()?;
    let (kk, nn) = (instance.num_users(), instance.num_slots());
    allocation.check_shape(kk, nn)?;
    if mu.len() != kk || mu.iter().any(|r| r.len() != nn) {
        return Err(SolveError::Options(
            "multiplier array shape mismatch".into(),
        ));
    }
    let rep = causality_slack_with_tol(instance, allocation, f64::INFINITY)?;
    let objective = weighted_rate(allocation, &instance.config.weights)?;
    let lagrangian = objective
        + mu.iter()
            .zip(&rep.slack)
            .flat_map(|(m, s)| m.iter().zip(s).map(|(a, b)| a * b))
            .sum::<f64>();
    let norm = lagrangian.abs().max(1.0);
    let cfg = &instance.config;
    let mut worst: f64 = 0.0;
    for k in 0..kk {
        let w = cfg.weights[k];
        let local = cfg.local_model(k);
        let available = instance.available_energy(k);
        let total = available[nn - 1];
        let mut price = 0.0;
        let mut prices = vec![0.0; nn];
        for n in (0..nn).rev() {
            price += mu[k][n];
            prices[n] = price;
        }
        for n in 0..nn {
            let slack = rep.slack[k][n];
            if total > 0.0 {
                worst = worst.max((-slack).max(0.0) / total);
            }
            if available[n] <= 0.0 {
                continue;
            }
            worst = worst.max(mu[k][n] * slack.abs() / norm);
            let m = prices[n];
            if modes.local {
                let l = allocation.local_bits[k][n];
                let r = w - m * local.marginal_energy(l);
                worst = worst.max(if l > 0.0 { r.abs() } else { r.max(0.0) } / w);
            }
            if modes.offload {
                let link = cfg.offload_model(instance.profiles.h[k][n]);
                let o = allocation.offload_bits[k][n];
                let r = w - m * link.marginal_energy(o);
                worst = worst.max(if o > 0.0 { r.abs() } else { r.max(0.0) } / w);
            }
        }
    }
    Ok(worst)
}

/// The partial Lagrangian written out term by term, without regrouping:
/// Σ ω(ℓ_loc + ℓ_off) + Σ_n μ_n (E_0 + Σ_{j<n} E_j − Σ_{j≤n} E_loc,j − Σ_{j≤n} E_off,j).
#[allow(clippy::needless_range_loop)]
pub fn lagrangian_unregrouped(
    instance: &Instance,
    allocation: &Allocation,
    mu: &[Vec<f64>],
) -> Result<f64, SolveError> {
    instance.validate()?;
    let (kk, nn) = (instance.num_users(), instance.num_slots());
    allocation.check_shape(kk, nn)?;
    let cfg = &instance.config;
    let mut total = 0.0;
    for k in 0..kk {
        for n in 0..nn {
            total += cfg.weights[k] * (allocation.local_bits[k][n] + allocation.offload_bits[k][n]);
        }
    }
    for k in 0..kk {
        let local = cfg.local_model(k);
        for n in 0..nn {
            let mut term = cfg.initial_energy_j[k];
            for j in 0..n {
                term += instance.profiles.harvest[k][j];
            }
            for j in 0..=n {
                term -= local.energy(allocation.local_bits[k][j]);
            }
            for j in 0..=n {
                term -= cfg
                    .offload_model(instance.profiles.h[k][j])
                    .energy(allocation.offload_bits[k][j]);
            }
            total += mu[k][n] * term;
        }
    }
    Ok(total)
}

/// Convenience: whether an oracle result is feasible at the default tolerance.
pub fn is_feasible(instance: &Instance, result: &OracleResult) -> bool {
    causality_slack_with_tol(instance, &result.allocation, DEFAULT_FEASIBILITY_TOL)
        .map(|r| r.feasible)
        .unwrap_or(false)
}
