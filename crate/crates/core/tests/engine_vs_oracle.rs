//! End-to-end equivalence of the optimized engine against the brute-force
//! reference simulator on random circuits, including semantic preservation
//! of planning under every ablation configuration.

use stv_core::circuit::Circuit;
use stv_core::exec::{simulate, standard_ablation_configs, ExecConfig};
use stv_core::oracle::{compare_states, oracle_run};
use stv_core::planner::{build_plan, Pass, PlanOptions};
use stv_core::testgen::random_circuit;

fn check(circuit: &Circuit, cfg: &ExecConfig, tol: f64, what: &str) {
    let (sv, _) = simulate(circuit, cfg).expect("simulate");
    let want = oracle_run(circuit).expect("oracle");
    let cmp = compare_states(&want, &sv).expect("compare");
    assert!(
        cmp.max_delta <= tol,
        "{what}: max delta {} at index {}",
        cmp.max_delta,
        cmp.worst_index
    );
}

#[test]
fn random_circuits_match_oracle() {
    for seed in 0..60u64 {
        let n = 2 + (seed % 11) as u32; // 2..=12
        let depth = 5 + (seed * 7 % 36) as u32; // 5..=40
        let circuit = random_circuit(n, depth, seed);
        check(
            &circuit,
            &ExecConfig::default(),
            1e-5,
            &format!("seed {seed} n {n} depth {depth}"),
        );
    }
}

#[test]
fn plans_preserve_semantics_under_every_config() {
    for seed in [3u64, 17, 40] {
        let circuit = random_circuit(9, 30, seed);
        for (name, cfg) in standard_ablation_configs(&ExecConfig::default()) {
            check(&circuit, &cfg, 1e-5, &format!("seed {seed} config {name}"));
        }
    }
}

#[test]
fn multithreaded_runs_match_oracle_and_each_other() {
    let circuit = random_circuit(11, 30, 99);
    let (base, _) = simulate(&circuit, &ExecConfig { workers: 1, ..Default::default() }).unwrap();
    for workers in [2usize, 8] {
        let (sv, _) = simulate(&circuit, &ExecConfig { workers, ..Default::default() }).unwrap();
        assert_eq!(base.amps(), sv.amps(), "workers {workers}");
    }
    let want = oracle_run(&circuit).unwrap();
    assert!(compare_states(&want, &base).unwrap().max_delta <= 1e-5);
}

#[test]
fn gate_conservation_on_random_circuits() {
    for seed in 0..25u64 {
        let circuit = random_circuit(8, 25, 1000 + seed);
        for opts in [
            PlanOptions::default(),
            PlanOptions { pairing: false, ..Default::default() },
            PlanOptions { diag_fusion: false, ..Default::default() },
        ] {
            let plan = build_plan(&circuit, &opts);
            assert_eq!(
                plan.consumed_gates(),
                plan.total_gates,
                "seed {seed} opts {opts:?}"
            );
        }
    }
}

#[test]
fn boundary_override_preserves_semantics() {
    let circuit = random_circuit(8, 24, 7);
    for boundary in [1u32, 3, 5, 8] {
        let cfg = ExecConfig { boundary: Some(boundary), ..Default::default() };
        check(&circuit, &cfg, 1e-5, &format!("boundary {boundary}"));
    }
}

#[test]
fn deep_circuit_exercises_flush() {
    // Depth large enough that p crosses the default flush threshold.
    let circuit = random_circuit(6, 400, 5);
    let cfg = ExecConfig { debug_checks: true, ..Default::default() };
    check(&circuit, &cfg, 1e-4, "deep flush circuit");
}

#[test]
fn plan_dump_is_stable_and_complete() {
    let circuit = random_circuit(10, 30, 12);
    let plan = build_plan(&circuit, &PlanOptions::default());
    assert_eq!(plan.dump(), build_plan(&circuit, &PlanOptions::default()).dump());
    // every pass appears in the dump
    let dump = plan.dump();
    for (i, _) in plan.passes.iter().enumerate() {
        assert!(dump.contains(&format!("pass {i}:")), "missing pass {i}");
    }
    let diag_passes = plan
        .passes
        .iter()
        .filter(|p| matches!(p, Pass::Diagonal(_)))
        .count();
    assert!(diag_passes > 0, "random circuit should have diagonal work");
}
