//! Plan execution: a configurable worker pool, per-pass profiling, and
//! ablation switches.
//!
//! Passes are barriers; within a pass, workers own statically assigned
//! disjoint regions (no work stealing), and every kernel update is either
//! elementwise-exact or region-disjoint, so results are bit-identical for
//! any worker count.

use std::ops::Range;
use std::time::Instant;

use thiserror::Error;

use crate::circuit::{Circuit, GateAction, GateQubits};
use crate::kernels::{dense, diagonal, KernelOptions, ScaleDelta};
use crate::planner::{
    build_plan, GenericPass, InitKind, Pass, PassCategory, PlanOptions, RtPass, SimulationPlan,
};
use crate::state::{AmpsView, StateError, StateVector};

#[derive(Debug, Error)]
pub enum ExecError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error("non-finite amplitude at index {index} after pass {pass}")]
    NonFinite { pass: usize, index: u64 },
    #[error("ablation mismatch: config `{name}` deviates from baseline by {max_delta}")]
    AblationMismatch { name: String, max_delta: f64 },
    #[error("unknown optimization name `{0}`")]
    UnknownOpt(String),
}

/// Optimizations that can be switched off one by one. Disabling any of them
/// must not change simulation results beyond 1e-6 per amplitude.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DisabledOpts {
    pub diag_fusion: bool,
    pub pairing: bool,
    pub recursive_transform: bool,
    pub aligned_lanes: bool,
    pub gray_codes: bool,
}

pub const OPT_NAMES: [&str; 5] = [
    "diag_fusion",
    "pairing",
    "recursive_transform",
    "aligned_lanes",
    "gray_codes",
];

impl DisabledOpts {
    pub fn none() -> DisabledOpts {
        DisabledOpts::default()
    }

    pub fn all() -> DisabledOpts {
        DisabledOpts {
            diag_fusion: true,
            pairing: true,
            recursive_transform: true,
            aligned_lanes: true,
            gray_codes: true,
        }
    }

    pub fn disable(&mut self, name: &str) -> Result<(), ExecError> {
        match name {
            "diag_fusion" => self.diag_fusion = true,
            "pairing" => self.pairing = true,
            "recursive_transform" => self.recursive_transform = true,
            "aligned_lanes" => self.aligned_lanes = true,
            "gray_codes" => self.gray_codes = true,
            "all" => *self = DisabledOpts::all(),
            other => return Err(ExecError::UnknownOpt(other.to_string())),
        }
        Ok(())
    }

    /// Parse a comma-separated list of optimization names to disable.
    pub fn parse(list: &str) -> Result<DisabledOpts, ExecError> {
        let mut opts = DisabledOpts::none();
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            opts.disable(name)?;
        }
        Ok(opts)
    }
}

#[derive(Clone, Debug)]
pub struct ExecConfig {
    pub workers: usize,
    pub flush_threshold: u32,
    pub disabled: DisabledOpts,
    pub boundary: Option<u32>,
    /// Check for NaN/Inf at pass boundaries.
    pub debug_checks: bool,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig {
            workers: 1,
            flush_threshold: crate::state::DEFAULT_FLUSH_THRESHOLD,
            disabled: DisabledOpts::none(),
            boundary: None,
            debug_checks: false,
        }
    }
}

impl ExecConfig {
    pub fn plan_options(&self) -> PlanOptions {
        PlanOptions {
            diag_fusion: !self.disabled.diag_fusion,
            pairing: !self.disabled.pairing,
            recursive_transform: !self.disabled.recursive_transform,
            boundary: self.boundary,
        }
    }

    fn kernel_options(&self) -> KernelOptions {
        KernelOptions {
            aligned_lanes: !self.disabled.aligned_lanes,
            gray_codes: !self.disabled.gray_codes,
        }
    }
}

/// Wall time and gate count of one executed pass.
#[derive(Clone, Debug)]
pub struct PassProfile {
    pub category: PassCategory,
    pub gates: u64,
    pub seconds: f64,
}

/// Aggregate per-pass profiles into one row per category, in first-seen
/// order.
pub fn aggregate_profile(profiles: &[PassProfile]) -> Vec<PassProfile> {
    let mut rows: Vec<PassProfile> = Vec::new();
    for p in profiles {
        match rows.iter_mut().find(|r| r.category == p.category) {
            Some(row) => {
                row.gates += p.gates;
                row.seconds += p.seconds;
            }
            None => rows.push(p.clone()),
        }
    }
    rows
}

/// Render the profile as a text table: category, gate count, % runtime,
/// seconds.
pub fn profile_table(profiles: &[PassProfile]) -> String {
    let rows = aggregate_profile(profiles);
    let total: f64 = rows.iter().map(|r| r.seconds).sum();
    let mut out = String::new();
    out.push_str(&format!(
        "{:<28} {:>8} {:>9} {:>12}\n",
        "category", "gates", "% time", "seconds"
    ));
    for r in &rows {
        let pct = if total > 0.0 { 100.0 * r.seconds / total } else { 0.0 };
        out.push_str(&format!(
            "{:<28} {:>8} {:>8.2}% {:>12.6}\n",
            r.category.to_string(),
            r.gates,
            pct,
            r.seconds
        ));
    }
    out.push_str(&format!("{:<28} {:>8} {:>9} {:>12.6}\n", "total", "", "", total));
    out
}

/// Static split of `total` items into per-worker ranges, each a multiple of
/// `align` items (except possibly the last).
fn worker_ranges(total: u64, workers: usize, align: u64) -> Vec<Range<u64>> {
    debug_assert!(align.is_power_of_two());
    let blocks = total.div_ceil(align);
    let workers = (workers as u64).min(blocks).max(1);
    let per = blocks.div_ceil(workers);
    let mut out = Vec::new();
    let mut start = 0u64;
    while start < total {
        let end = (start + per * align).min(total);
        out.push(start..end);
        start = end;
    }
    out
}

/// Run `job` over the ranges on the worker pool. Jobs must touch disjoint
/// amplitude sets per range.
fn par_for<F>(workers: usize, total: u64, align: u64, job: F)
where
    F: Fn(Range<u64>) + Sync,
{
    // Small states skip thread spawn; results are identical either way
    // because every kernel update is elementwise-exact per amplitude.
    if workers <= 1 || total < (1 << 14) {
        job(0..total);
        return;
    }
    let ranges = worker_ranges(total, workers, align);
    std::thread::scope(|scope| {
        for range in ranges {
            scope.spawn(|| job(range));
        }
    });
}

fn execute_diagonal(
    view: AmpsView,
    pass: &crate::planner::DiagonalPass,
    plan: &SimulationPlan,
    workers: usize,
    kopts: &KernelOptions,
) -> ScaleDelta {
    let n = plan.num_qubits;
    let chunk_bits = plan.boundary.max(3).min(n);
    let chunk = 1u64 << chunk_bits;
    par_for(workers, 1u64 << n, chunk, |range| {
        diagonal::apply_diagonal_chunks(view, pass, range, chunk_bits, kopts);
    });
    diagonal::diagonal_pass_scale(pass)
}

fn execute_paired(
    view: AmpsView,
    pass: &crate::planner::PairedGatePass,
    n: u32,
    workers: usize,
    kopts: &KernelOptions,
) -> ScaleDelta {
    let mut delta = ScaleDelta::ZERO;
    for op in &pass.ops {
        let sets = dense::op_set_count(op, n);
        par_for(workers, sets, 4, |t_range| {
            dense::sweep_op(view, 0, op, t_range, kopts.aligned_lanes);
        });
        delta += ScaleDelta::from_matrix(&op.matrix);
    }
    delta
}

/// Parallel recursive transform: gates on the most significant qubits are
/// applied by direct partitioned sweeps over the whole array; once a chunk
/// split is possible, whole recursion subtrees go to different workers.
fn execute_transform(
    view: AmpsView,
    rt: &RtPass,
    n: u32,
    workers: usize,
    kopts: &KernelOptions,
) -> ScaleDelta {
    let mut masks =
        dense::RtMasks { x: rt.x_mask.0, y: rt.y_mask.0, h: rt.h_mask.0 };
    let mut delta = ScaleDelta::ZERO;
    loop {
        let all = masks.all();
        if all == 0 {
            return delta;
        }
        let top = 63 - all.leading_zeros();
        if top != n - 1 {
            break;
        }
        let op = dense::take_top_op(&mut masks);
        let sets = dense::op_set_count(&op, n);
        par_for(workers, sets, 4, |t_range| {
            dense::sweep_op(view, 0, &op, t_range, kopts.aligned_lanes);
        });
        delta += ScaleDelta::from_matrix(&op.matrix);
    }

    let all = masks.all();
    let top = 63 - all.leading_zeros();
    let chunk_bits = top + 1;
    let n_chunks = 1u64 << (n - chunk_bits);
    let chunk_deltas = std::sync::Mutex::new(Vec::<ScaleDelta>::new());
    par_for(workers, n_chunks, 1, |chunks| {
        let mut local: Option<ScaleDelta> = None;
        for c in chunks {
            let d = dense::rt_serial(
                view,
                c << chunk_bits,
                chunk_bits,
                masks,
                kopts.aligned_lanes,
                None,
            );
            match local {
                Some(prev) => debug_assert_eq!(prev, d),
                None => local = Some(d),
            }
        }
        if let Some(d) = local {
            chunk_deltas.lock().unwrap().push(d);
        }
    });
    let deltas = chunk_deltas.into_inner().unwrap();
    if let Some(first) = deltas.first() {
        debug_assert!(deltas.iter().all(|d| d == first), "chunk deltas must agree");
        delta += *first;
    }
    delta
}

fn execute_generic(view: AmpsView, gp: &GenericPass, n: u32, workers: usize) {
    // The baseline path applies the physical matrix with plain complex
    // floating-point arithmetic and no scale bookkeeping; it still respects
    // the worker count (thread parallelism is not an ablated feature).
    use crate::circuit::{bit_position, OctantPhase};
    let octant_phases: [(f32, f32); 8] = std::array::from_fn(|k| {
        let v = OctantPhase::new(k as u8).value();
        (v.re as f32, v.im as f32)
    });
    match (&gp.action, gp.gate.qubits) {
        (GateAction::Dense(m), GateQubits::One(q)) => {
            let e = dense::reconstruct_f32_pub(m);
            let bit = bit_position(n, q);
            par_for(workers, 1u64 << (n - 1), 4, |t_range| {
                dense::sweep_1q_dense(view, bit, &e, t_range);
            });
        }
        (GateAction::Dense(m), GateQubits::Two(a, b)) => {
            let e = dense::reconstruct_f32_pub(m);
            let ba = bit_position(n, a);
            let bb = bit_position(n, b);
            par_for(workers, 1u64 << (n - 2), 4, |t_range| {
                dense::sweep_2q_dense(view, ba, bb, &e, t_range);
            });
        }
        (GateAction::Diagonal(d), GateQubits::One(q)) => {
            debug_assert_eq!(d.octants[0], 0);
            let masks = [(1u64 << bit_position(n, q), d.octants[1]), (0, 0)];
            par_for(workers, 1u64 << n, 8, |range| {
                dense::sweep_diag_dense(view, &masks, &octant_phases, range);
            });
        }
        (GateAction::Diagonal(d), GateQubits::Two(a, b)) => {
            // After rewriting, the only two-qubit diagonal gate is CZ:
            // a phase on the joint-ones subspace.
            debug_assert_eq!(&d.octants[..3], &[0, 0, 0]);
            let mask = (1u64 << bit_position(n, a)) | (1u64 << bit_position(n, b));
            let masks = [(mask, d.octants[3]), (0, 0)];
            par_for(workers, 1u64 << n, 8, |range| {
                dense::sweep_diag_dense(view, &masks, &octant_phases, range);
            });
        }
    }
}

/// Execute a simulation plan. Returns the final state and one profile entry
/// per executed pass (including init and rescaling passes).
pub fn run(plan: &SimulationPlan, cfg: &ExecConfig) -> Result<(StateVector, Vec<PassProfile>), ExecError> {
    let n = plan.num_qubits;
    let kopts = cfg.kernel_options();
    let workers = cfg.workers.max(1);
    let mut profiles = Vec::with_capacity(plan.passes.len() + 2);

    let t0 = Instant::now();
    let mut sv = match plan.init {
        InitKind::Basis => StateVector::init_basis(n)?,
        InitKind::Superposition { h_bits, .. } => {
            StateVector::init_superposition_masked(n, h_bits.0)?
        }
    };
    profiles.push(PassProfile {
        category: PassCategory::InitialH,
        gates: plan.init.gate_count(),
        seconds: t0.elapsed().as_secs_f64(),
    });

    for (pi, pass) in plan.passes.iter().enumerate() {
        let t0 = Instant::now();
        let delta = match pass {
            Pass::Diagonal(dp) => execute_diagonal(sv.view(), dp, plan, workers, &kopts),
            Pass::PairedGates(pp) => execute_paired(sv.view(), pp, n, workers, &kopts),
            Pass::RecursiveTransform(rt) => execute_transform(sv.view(), rt, n, workers, &kopts),
            Pass::Generic(gp) => {
                execute_generic(sv.view(), gp, n, workers);
                ScaleDelta::ZERO
            }
        };
        sv.scale.add_rt2(delta.rt2);
        sv.scale.add_i(delta.i);
        profiles.push(PassProfile {
            category: pass.category(),
            gates: pass.gate_count(),
            seconds: t0.elapsed().as_secs_f64(),
        });

        let t0 = Instant::now();
        if sv.flush_scale(cfg.flush_threshold) {
            profiles.push(PassProfile {
                category: PassCategory::Rescale,
                gates: 0,
                seconds: t0.elapsed().as_secs_f64(),
            });
        }
        if cfg.debug_checks {
            if let Some(index) = sv.find_non_finite() {
                return Err(ExecError::NonFinite { pass: pi, index });
            }
        }
    }
    Ok((sv, profiles))
}

/// Plan and run a circuit under one configuration.
pub fn simulate(circuit: &Circuit, cfg: &ExecConfig) -> Result<(StateVector, Vec<PassProfile>), ExecError> {
    let plan = build_plan(circuit, &cfg.plan_options());
    run(&plan, cfg)
}

/// One row of an ablation table.
#[derive(Clone, Debug)]
pub struct AblationRow {
    pub name: String,
    pub seconds: f64,
    /// Max per-amplitude |delta| against the first configuration.
    pub max_delta: f64,
    pub profiles: Vec<PassProfile>,
}

/// The standard ablation matrix: everything on, each optimization off one by
/// one, then everything off.
pub fn standard_ablation_configs(base: &ExecConfig) -> Vec<(String, ExecConfig)> {
    let mut configs = vec![("all_on".to_string(), ExecConfig {
        disabled: DisabledOpts::none(),
        ..base.clone()
    })];
    for name in OPT_NAMES {
        let mut d = DisabledOpts::none();
        d.disable(name).expect("static name");
        configs.push((format!("no_{name}"), ExecConfig { disabled: d, ..base.clone() }));
    }
    configs.push(("all_off".to_string(), ExecConfig {
        disabled: DisabledOpts::all(),
        ..base.clone()
    }));
    configs
}

/// Run one configuration per row, checking that every configuration produces
/// the same final state as the first (per-amplitude |delta| <= 1e-5); a
/// mismatch is a hard failure.
pub fn ablation_report(
    circuit: &Circuit,
    configs: &[(String, ExecConfig)],
) -> Result<Vec<AblationRow>, ExecError> {
    let mut rows: Vec<AblationRow> = Vec::new();
    let mut baseline: Option<StateVector> = None;
    for (name, cfg) in configs {
        let t0 = Instant::now();
        let (sv, profiles) = simulate(circuit, cfg)?;
        let seconds = t0.elapsed().as_secs_f64();
        let max_delta = match &baseline {
            None => 0.0,
            Some(base) => {
                let mut max_delta = 0f64;
                for j in 0..base.len() {
                    let a = base.read_amplitude(j).expect("in range");
                    let b = sv.read_amplitude(j).expect("in range");
                    let d = (a - b).norm();
                    if d > max_delta {
                        max_delta = d;
                    }
                }
                max_delta
            }
        };
        if max_delta > 1e-5 {
            return Err(ExecError::AblationMismatch { name: name.clone(), max_delta });
        }
        if baseline.is_none() {
            baseline = Some(sv);
        }
        rows.push(AblationRow { name: name.clone(), seconds, max_delta, profiles });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn fig7() -> Circuit {
        Circuit::parse(concat!(
            "4\n",
            "0 h 0\n0 h 1\n0 h 2\n0 h 3\n",
            "1 cz 0 1\n1 t 2\n",
            "2 t 0\n2 cz 2 3\n",
            "3 x_1_2 0\n3 t 1\n3 x_1_2 2\n3 t 3\n",
            "4 x_1_2 1\n4 y_1_2 2\n",
            "5 y_1_2 1\n5 y_1_2 3\n",
            "6 h 0\n6 h 1\n6 h 2\n6 h 3\n",
        ))
        .unwrap()
    }

    #[test]
    fn run_matches_oracle_on_reference_circuit() {
        let c = fig7();
        let (sv, profiles) = simulate(&c, &ExecConfig::default()).unwrap();
        let want = oracle::oracle_run(&c).unwrap();
        let cmp = oracle::compare_states(&want, &sv).unwrap();
        assert!(cmp.max_delta <= 1e-6, "max delta {}", cmp.max_delta);
        // Profile conservation: category gate counts sum to the
        // post-rewrite gate count.
        let total: u64 = profiles.iter().map(|p| p.gates).sum();
        assert_eq!(total, 20);
    }

    #[test]
    fn workers_produce_bit_identical_states() {
        let c = fig7();
        let (base, _) = simulate(&c, &ExecConfig { workers: 1, ..Default::default() }).unwrap();
        for workers in [2usize, 4, 8] {
            let (sv, _) =
                simulate(&c, &ExecConfig { workers, ..Default::default() }).unwrap();
            assert_eq!(sv.amps(), base.amps(), "workers {workers}");
            assert_eq!(sv.scale, base.scale);
        }
    }

    #[test]
    fn every_single_disabled_opt_matches(){
        let c = fig7();
        let (base, _) = simulate(&c, &ExecConfig::default()).unwrap();
        for name in OPT_NAMES {
            let mut disabled = DisabledOpts::none();
            disabled.disable(name).unwrap();
            let (sv, _) = simulate(&c, &ExecConfig { disabled, ..Default::default() }).unwrap();
            for j in 0..base.len() {
                let a = base.read_amplitude(j).unwrap();
                let b = sv.read_amplitude(j).unwrap();
                assert!((a - b).norm() <= 1e-6, "opt {name} index {j}");
            }
        }
    }

    #[test]
    fn ablation_report_runs_and_agrees() {
        let c = fig7();
        let configs = standard_ablation_configs(&ExecConfig::default());
        let rows = ablation_report(&c, &configs).unwrap();
        assert_eq!(rows.len(), 7);
        assert!(rows.iter().all(|r| r.max_delta <= 1e-5));
    }

    #[test]
    fn parse_disabled_opts() {
        let d = DisabledOpts::parse("aligned_lanes, gray_codes").unwrap();
        assert!(d.aligned_lanes && d.gray_codes && !d.pairing);
        assert!(DisabledOpts::parse("frobnicate").is_err());
        assert_eq!(DisabledOpts::parse("all").unwrap(), DisabledOpts::all());
    }

    #[test]
    fn flush_triggers_between_passes() {
        // Alternating H and T on one qubit: the T gates obstruct
        // clustering and coalescing, so every H pass bumps p by one. With a
        // low threshold the executor must flush and still match the oracle.
        let mut text = String::from("1\n");
        for cycle in 0..30 {
            text.push_str(&format!("{} h 0\n{} t 0\n", 2 * cycle, 2 * cycle + 1));
        }
        let c = Circuit::parse(&text).unwrap();
        let cfg = ExecConfig { flush_threshold: 8, debug_checks: true, ..Default::default() };
        let (sv, profiles) = simulate(&c, &cfg).unwrap();
        assert!(profiles.iter().any(|p| p.category == PassCategory::Rescale));
        let want = oracle::oracle_run(&c).unwrap();
        let cmp = oracle::compare_states(&want, &sv).unwrap();
        assert!(cmp.max_delta <= 1e-5, "max delta {}", cmp.max_delta);
    }

    #[test]
    fn worker_ranges_are_aligned_and_cover() {
        let ranges = worker_ranges(1 << 10, 8, 8);
        assert_eq!(ranges.first().unwrap().start, 0);
        assert_eq!(ranges.last().unwrap().end, 1 << 10);
        for w in ranges.windows(2) {
            assert_eq!(w[0].end, w[1].start);
            assert_eq!(w[0].start % 8, 0);
        }
    }
}
