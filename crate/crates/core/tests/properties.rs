use ehmec::baselines::{equal_energy, run_scheme, SchemeId};
use ehmec::dual_solver::{
    dual_function, feasibility_repair, primal_from_dual, solve, DualState, SolveOptions,
};
use ehmec::experiments::{generate_instance, GenParams};
use ehmec::model::{
    causality_slack, local_bits_from_energy, local_energy, offload_bits_from_energy,
    offload_energy, weighted_rate, Allocation, Instance,
};
use proptest::prelude::*;

const TAU: f64 = 0.02;
const B: f64 = 2e6;
const NOISE: f64 = 1e-9;

fn instance(seed: u64, k: usize, n: usize) -> Instance {
    generate_instance(
        &GenParams {
            seed,
            ..Default::default()
        },
        k,
        n,
        TAU,
    )
    .unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn local_roundtrip(e in 1e-12f64..10.0, tau in 1e-3f64..1.0, c in 100u32..2000) {
        let bits = local_bits_from_energy(e, 1e-28, c, tau).unwrap();
        prop_assert!(rel(local_energy(bits, 1e-28, c, tau).unwrap(), e) <= 1e-9);
    }

    #[test]
    fn offload_roundtrip(e in 1e-12f64..10.0, tau in 1e-3f64..1.0, g in 1e-13f64..1e-7) {
        let bits = offload_bits_from_energy(e, g, tau, B, NOISE).unwrap();
        prop_assert!(rel(offload_energy(bits, g, tau, B, NOISE).unwrap(), e) <= 1e-9);
    }

    #[test]
    fn energies_convex_and_increasing(a in 0.0f64..1e6, b in 0.0f64..1e6, g in 1e-12f64..1e-8) {
        let mid = 0.5 * (a + b);
        let loc = |x: f64| local_energy(x, 1e-28, 500, TAU).unwrap();
        let off = |x: f64| offload_energy(x, g, TAU, B, NOISE).unwrap();
        for f in [&loc as &dyn Fn(f64) -> f64, &off] {
            prop_assert!(f(mid) <= 0.5 * (f(a) + f(b)) * (1.0 + 1e-12) + 1e-300);
            if a < b {
                prop_assert!(f(a) <= f(b));
            }
        }
    }

    #[test]
    fn slack_telescopes(seed in 0u64..1000, n in 1usize..8, scale in 0.0f64..3.0) {
        let inst = instance(seed, 2, n);
        let mut alloc = equal_energy(&inst);
        for row in alloc.local_bits.iter_mut().chain(alloc.offload_bits.iter_mut()) {
            row.iter_mut().for_each(|b| *b *= scale);
        }
        let slack = causality_slack(&inst, &alloc).unwrap().slack;
        let energy = alloc.slot_energy(&inst);
        for k in 0..2 {
            let arrivals = inst.arrivals(k);
            prop_assert!((slack[k][0] - (arrivals[0] - energy[k][0])).abs() <= 1e-12);
            for j in 1..n {
                let step = slack[k][j] - slack[k][j - 1];
                prop_assert!((step - (arrivals[j] - energy[k][j])).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn objective_is_linear(seed in 0u64..1000, c in 1e-3f64..1e3) {
        let inst = instance(seed, 3, 4);
        let alloc = equal_energy(&inst);
        let w = inst.config.weights.clone();
        let scaled: Vec<f64> = w.iter().map(|x| x * c).collect();
        let base = weighted_rate(&alloc, &w).unwrap();
        prop_assert!(rel(weighted_rate(&alloc, &scaled).unwrap(), c * base) <= 1e-12);
        let doubled = Allocation {
            local_bits: alloc.local_bits.iter().map(|r| r.iter().map(|x| 2.0 * x).collect()).collect(),
            offload_bits: alloc.offload_bits.iter().map(|r| r.iter().map(|x| 2.0 * x).collect()).collect(),
        };
        prop_assert!(rel(weighted_rate(&doubled, &w).unwrap(), 2.0 * base) <= 1e-12);
    }

    #[test]
    fn tails_ordered_and_weak_duality(seed in 0u64..1000, mu in prop::collection::vec(0.0f64..1e7, 5)) {
        let inst = instance(seed, 1, 5);
        let mut mu = mu;
        mu[4] += 1.0;
        let dual = DualState::new(vec![mu]).unwrap();
        let tails = &dual.tail_sums()[0];
        prop_assert!(tails.windows(2).all(|w| w[0] >= w[1]) && tails[4] > 0.0);
        let g = dual_function(&inst, &dual).unwrap();
        let feasible = weighted_rate(&equal_energy(&inst), &inst.config.weights).unwrap();
        prop_assert!(g >= feasible - 1e-9 * g);
    }

    #[test]
    fn repair_is_feasible_and_pointwise_smaller(seed in 0u64..1000, mu in prop::collection::vec(1e2f64..1e7, 4)) {
        let inst = instance(seed, 1, 4);
        let dual = DualState::new(vec![mu]).unwrap();
        let raw = primal_from_dual(&inst, &dual).unwrap();
        let fixed = feasibility_repair(&inst, &raw).unwrap();
        prop_assert!(causality_slack(&inst, &fixed).unwrap().feasible);
        for (a, b) in fixed.local_bits[0].iter().zip(&raw.local_bits[0]) {
            prop_assert!(a <= b);
        }
        for (a, b) in fixed.offload_bits[0].iter().zip(&raw.offload_bits[0]) {
            prop_assert!(a <= b);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn proposed_dominates_and_all_feasible(seed in 0u64..10_000, k in 1usize..4, n in 1usize..7) {
        let inst = instance(seed, k, n);
        let opts = SolveOptions::default();
        let proposed = run_scheme(&inst, SchemeId::Proposed, &opts).unwrap();
        let dual = proposed.dual_value.unwrap();
        for id in SchemeId::ALL {
            let out = run_scheme(&inst, id, &opts).unwrap();
            prop_assert!(causality_slack(&inst, &out.allocation).unwrap().feasible, "{id}");
            prop_assert!(out.objective <= dual * (1.0 + 1e-9), "{id}");
            prop_assert!(proposed.objective >= out.objective - 1e-3 * dual, "{id}");
        }
    }

    #[test]
    fn final_slot_is_tight(seed in 0u64..10_000, k in 1usize..4, n in 1usize..9) {
        let inst = instance(seed, k, n);
        let r = solve(&inst, &SolveOptions::default()).unwrap();
        prop_assume!(r.converged);
        for u in 0..k {
            let total = inst.total_available(u);
            let last = r.feasibility.slack[u][n - 1];
            prop_assert!(last.abs() <= (1e-6 * total).max(1e-12), "user {u}: slack {last} of {total}");
        }
    }

    #[test]
    fn constant_gain_allocations_are_monotone(seed in 0u64..10_000, n in 2usize..10) {
        let mut inst = instance(seed, 2, n);
        for row in &mut inst.profiles.h {
            let h0 = row[0];
            row.iter_mut().for_each(|h| *h = h0);
        }
        let r = solve(&inst, &SolveOptions::default()).unwrap();
        for rows in [&r.allocation.local_bits, &r.allocation.offload_bits] {
            for row in rows {
                for w in row.windows(2) {
                    prop_assert!(w[0] <= w[1] + 1e-9 * w[1], "{row:?}");
                }
            }
        }
    }

    #[test]
    fn generated_instances_are_valid_and_deterministic(seed in any::<u64>(), k in 1usize..6, n in 1usize..12) {
        let a = instance(seed, k, n);
        prop_assert!(a.validate().is_ok());
        prop_assert!(a.profiles.h.iter().flatten().all(|&h| h > 0.0 && h.is_finite()));
        prop_assert!(a.profiles.harvest.iter().flatten().all(|&e| (0.0..=1.0).contains(&e)));
        prop_assert_eq!(a, instance(seed, k, n));
    }

    #[test]
    fn users_are_separable(seed in 0u64..10_000, n in 1usize..6) {
        let inst = instance(seed, 3, n);
        let opts = SolveOptions::default();
        let joint = solve(&inst, &opts).unwrap();
        for k in 0..3 {
            let alone = solve(&inst.user(k), &opts).unwrap();
            prop_assert_eq!(&alone.allocation.local_bits[0], &joint.allocation.local_bits[k]);
            prop_assert_eq!(&alone.allocation.offload_bits[0], &joint.allocation.offload_bits[k]);
        }
    }
}
