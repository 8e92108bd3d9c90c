//! Branch-and-bound behavior: reference matching, determinism, bound
//! soundness, and warm-start pruning.

use conic::testgen::{brute_force_misocp, random_misocp};
use conic::{
    solve_misocp, ClarabelBackend, ConicProgram, LinExpr, MisocpSettings, SolveStatus,
};

fn backend() -> ClarabelBackend {
    ClarabelBackend::default()
}

fn tight_settings() -> MisocpSettings {
    MisocpSettings {
        rel_gap: 1e-9,
        ..MisocpSettings::default()
    }
}

// min x₁ + x₂ over binaries with x₁ + x₂ ≥ 1.5: the relaxation gives 1.5,
// the integer optimum is 2.
#[test]
fn covers_fractional_relaxation() {
    let mut p = ConicProgram::new();
    let a = p.add_binary("a").unwrap();
    let b = p.add_binary("b").unwrap();
    p.add_ge(LinExpr::var(a) + LinExpr::var(b), 1.5).unwrap();
    p.set_objective(LinExpr::var(a) + LinExpr::var(b)).unwrap();
    let sol = solve_misocp(&p, &backend(), None, &tight_settings()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.objective - 2.0).abs() <= 1e-6);
    // Both binaries must land on exactly integral values after polishing.
    for v in [a, b] {
        let x = sol.value(v);
        assert!((x - x.round()).abs() <= 1e-6);
    }
}

#[test]
fn no_binaries_degenerates_to_continuous() {
    let mut p = ConicProgram::new();
    let x = p.add_var("x", 0.0, 5.0).unwrap();
    p.add_ge(LinExpr::var(x), 1.0).unwrap();
    p.set_objective(LinExpr::var(x)).unwrap();
    let sol = solve_misocp(&p, &backend(), None, &MisocpSettings::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.objective - 1.0).abs() <= 1e-7);
    assert_eq!(sol.stats.nodes, 1);
}

#[test]
fn infeasible_integer_program_is_reported() {
    let mut p = ConicProgram::new();
    let a = p.add_binary("a").unwrap();
    let b = p.add_binary("b").unwrap();
    // a + b = 0.5 has no binary solution (and no relaxed corner is cut off,
    // so the search has to prove it through child infeasibility).
    p.add_eq(LinExpr::var(a) + LinExpr::var(b), 0.5).unwrap();
    p.set_objective(LinExpr::var(a)).unwrap();
    let sol = solve_misocp(&p, &backend(), None, &tight_settings()).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
}

// The search must agree with full enumeration on a batch of random feasible
// programs, and its reported bound must never exceed the true optimum.
#[test]
fn matches_enumeration_on_random_programs() {
    let be = backend();
    for seed in 0..12u64 {
        let p = random_misocp(1000 + seed, 6, 2);
        let reference = brute_force_misocp(&p, &be).unwrap();
        let sol = solve_misocp(&p, &be, None, &tight_settings()).unwrap();
        let truth = reference.expect("generator builds feasible programs");
        assert_eq!(sol.status, SolveStatus::Optimal, "seed {seed}");
        assert!(
            (sol.objective - truth).abs() <= 1e-6,
            "seed {seed}: search {} vs enumeration {}",
            sol.objective,
            truth
        );
        assert!(sol.bound <= truth + 1e-6, "seed {seed}: unsound bound");
        assert!(p.max_violation(&sol.values) <= 1e-6, "seed {seed}");
    }
}

#[test]
fn identical_runs_are_bit_identical() {
    let be = backend();
    for seed in [7u64, 77, 777] {
        let p = random_misocp(seed, 5, 2);
        let a = solve_misocp(&p, &be, None, &tight_settings()).unwrap();
        let b = solve_misocp(&p, &be, None, &tight_settings()).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.stats.nodes, b.stats.nodes);
        assert_eq!(a.values, b.values);
        assert_eq!(a.objective, b.objective);
    }
}

// Seeding the search with the eventual optimum can only prune: the warm run
// must not visit more nodes than the cold run.
#[test]
fn warm_start_never_expands_the_tree() {
    let be = backend();
    for seed in 0..8u64 {
        let p = random_misocp(2000 + seed, 6, 2);
        let cold = solve_misocp(&p, &be, None, &tight_settings()).unwrap();
        assert_eq!(cold.status, SolveStatus::Optimal);
        let warm = solve_misocp(&p, &be, Some(&cold.values), &tight_settings()).unwrap();
        assert_eq!(warm.status, SolveStatus::Optimal);
        assert!(
            (warm.objective - cold.objective).abs() <= 1e-6,
            "seed {seed}"
        );
        assert!(
            warm.stats.nodes <= cold.stats.nodes,
            "seed {seed}: warm {} > cold {}",
            warm.stats.nodes,
            cold.stats.nodes
        );
    }
}

// With a generous gap the reported bound must still bracket the incumbent:
// bound ≤ objective, objective − bound within the tolerance used.
#[test]
fn gap_tolerance_is_honored() {
    let be = backend();
    let settings = MisocpSettings {
        rel_gap: 5e-2,
        ..MisocpSettings::default()
    };
    for seed in 0..6u64 {
        let p = random_misocp(3000 + seed, 6, 2);
        let sol = solve_misocp(&p, &be, None, &settings).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal, "seed {seed}");
        assert!(sol.bound <= sol.objective + 1e-9);
        assert!(sol.objective - sol.bound <= settings.rel_gap * sol.objective.abs().max(1.0) + 1e-9);
    }
}
