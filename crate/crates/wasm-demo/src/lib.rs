//! Browser bindings. Every export takes plain numbers and returns a JSON string;
//! the `*_json` functions hold the logic so they can be tested natively.

use ehmec::baselines::{run_scheme, SchemeId};
use ehmec::dual_solver::{solve, SolveOptions, StepRule};
use ehmec::experiments::{generate_instance, run_sweep, GenParams, SweepSpec, SweptParam};
use ehmec::model::Instance;
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_USERS: usize = 20;
const MAX_SLOTS: usize = 60;
const MAX_TRACE_ITERS: usize = 20_000;

fn check_size(users: usize, slots: usize) -> Result<(), String> {
    if users == 0 || users > MAX_USERS {
        return Err(format!("users must lie in 1..={MAX_USERS}"));
    }
    if slots == 0 || slots > MAX_SLOTS {
        return Err(format!("slots must lie in 1..={MAX_SLOTS}"));
    }
    Ok(())
}

fn instance(seed: u64, users: usize, slots: usize, tau: f64) -> Result<Instance, String> {
    check_size(users, slots)?;
    generate_instance(
        &GenParams {
            seed,
            ..Default::default()
        },
        users,
        slots,
        tau,
    )
    .map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct UserProfile {
    /// Channel gain over the deterministic pathloss, per slot.
    fading: Vec<f64>,
    arrivals: Vec<f64>,
    available: Vec<f64>,
}

#[derive(Serialize)]
struct SchemeView {
    scheme: SchemeId,
    objective: f64,
    converged: bool,
    local_bits: Vec<Vec<f64>>,
    offload_bits: Vec<Vec<f64>>,
    /// Cumulative energy spent through each slot.
    spent: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct CompareView {
    users: Vec<UserProfile>,
    schemes: Vec<SchemeView>,
}

pub fn compare_json(seed: u64, users: usize, slots: usize, tau: f64) -> Result<String, String> {
    let inst = instance(seed, users, slots, tau)?;
    let pl = GenParams::default().pathloss();
    let profiles = (0..users)
        .map(|k| UserProfile {
            fading: inst.profiles.h[k].iter().map(|h| h / pl).collect(),
            arrivals: inst.arrivals(k),
            available: inst.available_energy(k),
        })
        .collect();
    let opts = SolveOptions::default();
    let mut schemes = Vec::new();
    for id in SchemeId::ALL {
        let out = run_scheme(&inst, id, &opts).map_err(|e| e.to_string())?;
        let spent = out
            .allocation
            .slot_energy(&inst)
            .into_iter()
            .map(|row| {
                row.iter()
                    .scan(0.0, |acc, e| {
                        *acc += e;
                        Some(*acc)
                    })
                    .collect()
            })
            .collect();
        schemes.push(SchemeView {
            scheme: id,
            objective: out.objective,
            converged: out.converged,
            local_bits: out.allocation.local_bits,
            offload_bits: out.allocation.offload_bits,
            spent,
        });
    }
    Ok(serde_json::to_string(&CompareView {
        users: profiles,
        schemes,
    })
    .expect("serializable"))
}

#[derive(Serialize)]
struct TraceView {
    dual: Vec<f64>,
    primal_value: f64,
    dual_value: f64,
    iterations: usize,
    converged: bool,
}

pub fn trace_json(
    seed: u64,
    slots: usize,
    tau: f64,
    rule: &str,
    step: f64,
    max_iters: usize,
) -> Result<String, String> {
    let inst = instance(seed, 1, slots, tau)?;
    let step = match rule {
        "adaptive" => StepRule::Adaptive { eta: step },
        "constant" => StepRule::Constant { eta: step },
        "diminishing" => StepRule::Diminishing { eta0: step },
        "polyak" => StepRule::Polyak { gamma: step },
        other => return Err(format!("unknown step rule `{other}`")),
    };
    let opts = SolveOptions {
        step,
        max_iters: max_iters.clamp(1, MAX_TRACE_ITERS),
        record_trace: true,
        ..Default::default()
    };
    let r = solve(&inst, &opts).map_err(|e| e.to_string())?;
    let user = r.users.into_iter().next().expect("one user");
    Ok(serde_json::to_string(&TraceView {
        dual: user.dual_trace.unwrap_or_default(),
        primal_value: r.primal_value,
        dual_value: r.dual_value,
        iterations: r.iterations,
        converged: r.converged,
    })
    .expect("serializable"))
}

#[derive(Serialize)]
struct SweepView {
    tau: Vec<f64>,
    series: Vec<(SchemeId, Vec<f64>)>,
}

pub fn tau_sweep_json(
    seed: u64,
    users: usize,
    slots: usize,
    trials: usize,
) -> Result<String, String> {
    check_size(users, slots)?;
    if trials == 0 || trials > 50 {
        return Err("trials must lie in 1..=50".into());
    }
    let tau: Vec<f64> = (1..=10).map(|i| i as f64 / 100.0).collect();
    let mut spec = SweepSpec::new(SweptParam::SlotSeconds, tau.clone(), trials);
    spec.num_users = users;
    spec.num_slots = slots;
    let r = run_sweep(
        &spec,
        &GenParams {
            seed,
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let series = SchemeId::ALL.iter().map(|&id| (id, r.means(id))).collect();
    Ok(serde_json::to_string(&SweepView { tau, series }).expect("serializable"))
}

/// All four schemes on one random instance, with per-slot allocations.
#[wasm_bindgen]
pub fn compare_schemes(seed: u32, users: usize, slots: usize, tau: f64) -> Result<String, JsError> {
    compare_json(seed.into(), users, slots, tau).map_err(|e| JsError::new(&e))
}

/// Dual value per iteration for a single-user instance.
#[wasm_bindgen]
pub fn dual_trace(
    seed: u32,
    slots: usize,
    tau: f64,
    rule: &str,
    step: f64,
    max_iters: usize,
) -> Result<String, JsError> {
    trace_json(seed.into(), slots, tau, rule, step, max_iters).map_err(|e| JsError::new(&e))
}

/// Mean objective per scheme for τ = 0.01, ..., 0.1 s.
#[wasm_bindgen]
pub fn tau_sweep(seed: u32, users: usize, slots: usize, trials: usize) -> Result<String, JsError> {
    tau_sweep_json(seed.into(), users, slots, trials).map_err(|e| JsError::new(&e))
}
