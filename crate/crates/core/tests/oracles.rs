use ehmec::baselines::{full_offload, local_only};
use ehmec::dual_solver::{solve, SolveOptions};
use ehmec::experiments::{generate_instance, GenParams};
use ehmec::model::{Instance, Modes, SystemConfig};
use ehmec::oracle::{
    grid_search, grid_search_with_modes, lagrangian_unregrouped, projected_gradient,
    GradientOptions,
};

fn fixture() -> Instance {
    let cfg = SystemConfig::homogeneous(1, 2, 0.02, 2e6, 1e-9, 1.0, 1e-28, 500, 0.3);
    Instance::new(cfg, vec![vec![2.795e-10; 2]], vec![vec![0.5]]).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

#[test]
fn fixture_golden_value() {
    let inst = fixture();
    let grid = grid_search(&inst, 21).unwrap();
    let solved = solve(&inst, &SolveOptions::default()).unwrap();
    // Recorded from the first grid run; the solver value is the sharper one.
    assert!(rel(grid.objective, 5.259433e5) < 1e-6, "{}", grid.objective);
    assert!(
        rel(solved.primal_value, 5.25954e5) < 1e-6,
        "{}",
        solved.primal_value
    );
    assert!(rel(solved.primal_value, grid.objective) < 5e-3);
    assert!(grid.objective <= solved.dual_value * (1.0 + 1e-12));
}

#[test]
fn restricted_grids_match_single_mode_baselines() {
    let opts = SolveOptions::default();
    for seed in 1..=5 {
        let inst = generate_instance(
            &GenParams {
                seed,
                ..Default::default()
            },
            1,
            2,
            0.02,
        )
        .unwrap();
        let lo = local_only(&inst, &opts).unwrap();
        let g = grid_search_with_modes(&inst, 21, Modes::LOCAL_ONLY).unwrap();
        assert!(
            rel(lo.primal_value, g.objective) < 5e-3,
            "seed {seed}: {} vs {}",
            lo.primal_value,
            g.objective
        );
        let fo = full_offload(&inst, &opts).unwrap();
        let g = grid_search_with_modes(&inst, 21, Modes::OFFLOAD_ONLY).unwrap();
        assert!(
            rel(fo.primal_value, g.objective) < 5e-3,
            "seed {seed}: {} vs {}",
            fo.primal_value,
            g.objective
        );
    }
}

#[test]
fn local_only_matches_closed_form_with_one_slot() {
    // One slot: spend everything locally, ℓ = (E τ² / (γ C³))^{1/3}.
    let cfg = SystemConfig::homogeneous(1, 1, 0.02, 2e6, 1e-9, 1.0, 1e-28, 500, 0.3);
    let inst = Instance::new(cfg, vec![vec![2.795e-10]], vec![vec![]]).unwrap();
    let expect = (0.3_f64 * 4e-4 / (1e-28 * 1.25e8)).cbrt();
    let r = local_only(&inst, &SolveOptions::default()).unwrap();
    assert!(
        rel(r.primal_value, expect) < 1e-9,
        "{} vs {expect}",
        r.primal_value
    );
    let g = grid_search_with_modes(&inst, 41, Modes::LOCAL_ONLY).unwrap();
    assert!(rel(g.objective, expect) < 5e-3);
}

#[test]
fn projected_gradient_agrees_and_respects_dual_bound() {
    for seed in 0..10 {
        let inst = generate_instance(
            &GenParams {
                seed: 300 + seed,
                ..Default::default()
            },
            3,
            8,
            0.02,
        )
        .unwrap();
        let r = solve(&inst, &SolveOptions::default()).unwrap();
        let pg = projected_gradient(&inst, &GradientOptions::default()).unwrap();
        assert!(pg.objective <= r.dual_value * (1.0 + 1e-9));
        assert!(rel(pg.objective, r.primal_value) < 1e-3, "seed {seed}");
    }
}

#[test]
fn dual_value_matches_unregrouped_lagrangian() {
    let inst = generate_instance(
        &GenParams {
            seed: 77,
            ..Default::default()
        },
        2,
        5,
        0.02,
    )
    .unwrap();
    let r = solve(&inst, &SolveOptions::default()).unwrap();
    let raw = ehmec::dual_solver::primal_from_dual(&inst, &r.dual).unwrap();
    let direct = lagrangian_unregrouped(&inst, &raw, r.dual.mu()).unwrap();
    let g = ehmec::dual_solver::dual_function(&inst, &r.dual).unwrap();
    assert!((direct - g).abs() <= 1e-12 * g.abs(), "{direct} vs {g}");
}
