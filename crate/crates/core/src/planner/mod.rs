//! Circuit preprocessing: cluster gates of a kind by reordering, encode
//! clusters as bitmasks, pair and coalesce one-qubit gates, and schedule the
//! result as a simulation plan.
//!
//! Planning runs once, single-threaded, before simulation; the resulting
//! [`SimulationPlan`] is immutable and shareable.

mod encode;
mod reorder;

use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

use crate::circuit::{
    bit_position, dense_matrix, gate_matrix, Circuit, Gate, GateAction, GateCounts, GateKind,
    GateQubits, Qubit, ScaledGaussianMatrix,
};

pub use encode::{coalesce_adjacent, encode_cz_masks, encode_t_layers, pair_one_qubit_gates};
pub use reorder::{cluster_by_reordering, commutes, flatten, Cluster};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("duplicate CZ pair ({0}, {1}) within one cluster")]
    DuplicateCzPair(Qubit, Qubit),
    #[error("gate qubit {q} out of range for {n} qubits")]
    QubitOutOfRange { q: Qubit, n: u32 },
}

/// Bitset over amplitude-index bit positions: bit `b` is set iff the qubit at
/// bit position `b` participates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct QubitMask(pub u64);

impl QubitMask {
    pub const EMPTY: QubitMask = QubitMask(0);

    pub fn single(bit: u32) -> QubitMask {
        QubitMask(1u64 << bit)
    }

    pub fn set(&mut self, bit: u32) {
        self.0 |= 1u64 << bit;
    }

    pub fn contains(&self, bit: u32) -> bool {
        self.0 & (1u64 << bit) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn count(&self) -> u32 {
        self.0.count_ones()
    }

    /// Binary rendering, bit n-1 leftmost (qubit 0 first).
    pub fn to_binary(&self, n: u32) -> String {
        (0..n)
            .rev()
            .map(|b| if self.contains(b) { '1' } else { '0' })
            .collect()
    }
}

/// One layer of T gates: a single bitmask cannot encode two T gates on one
/// qubit, so repeated gates go to later layers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TLayer {
    pub mask: QubitMask,
}

/// A cluster of CZ gates encoded as one bitmask per qubit: the mask at bit
/// position `b` holds the partner bit positions of every CZ acting on the
/// qubit at `b`. Symmetric, with an empty diagonal; total set bits equal
/// twice the gate count.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CzCluster {
    masks: Vec<u64>,
    gate_count: u64,
}

impl CzCluster {
    pub fn empty(n: u32) -> CzCluster {
        CzCluster { masks: vec![0; n as usize], gate_count: 0 }
    }

    #[inline]
    pub fn mask_for_bit(&self, bit: u32) -> u64 {
        if (bit as usize) < self.masks.len() {
            self.masks[bit as usize]
        } else {
            0
        }
    }

    pub fn is_empty(&self) -> bool {
        self.gate_count == 0
    }

    pub fn gate_count(&self) -> u64 {
        self.gate_count
    }

    pub fn num_bits(&self) -> u32 {
        self.masks.len() as u32
    }
}

/// Amplitude-bit targets of a paired (or unpaired) one-qubit op.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairTargets {
    Single { bit: u32 },
    Pair { hi: u32, lo: u32 },
}

impl PairTargets {
    pub fn bit_mask(&self) -> u64 {
        match *self {
            PairTargets::Single { bit } => 1u64 << bit,
            PairTargets::Pair { hi, lo } => (1u64 << hi) | (1u64 << lo),
        }
    }

    pub fn max_bit(&self) -> u32 {
        match *self {
            PairTargets::Single { bit } => bit,
            PairTargets::Pair { hi, .. } => hi,
        }
    }
}

/// Kernel selector for a paired-gate op. Named forms get handwritten
/// multiply-free dataflows; everything else runs the generic Gaussian kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelForm {
    HxH,
    XxX,
    YxY,
    XxY,
    YxX,
    SingleH,
    SingleX,
    SingleY,
    SingleNot,
    Gauss,
}

/// One effective one-qubit-gate pair (or single), possibly a coalesced
/// product, with its exact combined matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairedGateOp {
    pub targets: PairTargets,
    pub matrix: ScaledGaussianMatrix,
    pub kernel: KernelForm,
    /// Number of original circuit gates this op consumes (bookkeeping).
    pub source_gates: u64,
}

/// Profile category, mirroring the runtime profiling rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PassCategory {
    InitialH,
    FusedDiagonal,
    LowPairs,
    Singles,
    HighNonDiagonal,
    FinalH,
    Generic,
    Rescale,
}

impl fmt::Display for PassCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PassCategory::InitialH => "initial H",
            PassCategory::FusedDiagonal => "CZ & T, low 1q (fused)",
            PassCategory::LowPairs => "low 1q pairs",
            PassCategory::Singles => "single 1q gates",
            PassCategory::HighNonDiagonal => "high X & Y & H",
            PassCategory::FinalH => "final H",
            PassCategory::Generic => "generic per-gate",
            PassCategory::Rescale => "rescaling",
        };
        f.write_str(s)
    }
}

/// A whole diagonal cluster (CZ masks + T layers) applied in one linear
/// memory pass, optionally fused with low-qubit one-qubit ops that are
/// applied per cache-sized chunk while it is resident.
#[derive(Clone, Debug)]
pub struct DiagonalPass {
    pub cz: CzCluster,
    pub t_layers: Vec<TLayer>,
    pub fused_low: Vec<PairedGateOp>,
    pub diag_gate_count: u64,
}

#[derive(Clone, Debug)]
pub struct PairedGatePass {
    pub ops: Vec<PairedGateOp>,
    pub category: PassCategory,
}

/// One layer of non-diagonal one-qubit gates on the high qubits, applied by
/// the recursive cache-blocked transform. Masks are pairwise disjoint.
#[derive(Clone, Copy, Debug)]
pub struct RtPass {
    pub x_mask: QubitMask,
    pub y_mask: QubitMask,
    pub h_mask: QubitMask,
    pub category: PassCategory,
}

impl RtPass {
    pub fn gate_count(&self) -> u64 {
        u64::from(self.x_mask.count() + self.y_mask.count() + self.h_mask.count())
    }
}

/// Fallback: one gate applied through the generic dense kernels.
#[derive(Clone, Copy, Debug)]
pub struct GenericPass {
    pub gate: Gate,
    pub action: GateAction,
}

#[derive(Clone, Debug)]
pub enum Pass {
    Diagonal(DiagonalPass),
    PairedGates(PairedGatePass),
    RecursiveTransform(RtPass),
    Generic(GenericPass),
}

impl Pass {
    pub fn gate_count(&self) -> u64 {
        match self {
            Pass::Diagonal(p) => {
                p.diag_gate_count + p.fused_low.iter().map(|op| op.source_gates).sum::<u64>()
            }
            Pass::PairedGates(p) => p.ops.iter().map(|op| op.source_gates).sum(),
            Pass::RecursiveTransform(p) => p.gate_count(),
            Pass::Generic(_) => 1,
        }
    }

    pub fn category(&self) -> PassCategory {
        match self {
            Pass::Diagonal(_) => PassCategory::FusedDiagonal,
            Pass::PairedGates(p) => p.category,
            Pass::RecursiveTransform(p) => p.category,
            Pass::Generic(_) => PassCategory::Generic,
        }
    }
}

/// How the initial state is prepared. A leading cluster of H gates is
/// replaced by initializing the state directly into a superposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitKind {
    Basis,
    Superposition { h_bits: QubitMask, gate_count: u64 },
}

impl InitKind {
    pub fn gate_count(&self) -> u64 {
        match self {
            InitKind::Basis => 0,
            InitKind::Superposition { gate_count, .. } => *gate_count,
        }
    }
}

/// Planner switches (all on by default). With fusion, pairing and the
/// recursive transform all disabled the planner emits the per-gate baseline
/// plan.
#[derive(Clone, Copy, Debug)]
pub struct PlanOptions {
    pub diag_fusion: bool,
    pub pairing: bool,
    pub recursive_transform: bool,
    /// Bit-position boundary between low and high qubits; default ceil(n/2).
    pub boundary: Option<u32>,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            diag_fusion: true,
            pairing: true,
            recursive_transform: true,
            boundary: None,
        }
    }
}

/// Ordered pass schedule; executing it is functionally equal to executing the
/// original gate list.
#[derive(Clone, Debug)]
pub struct SimulationPlan {
    pub num_qubits: u32,
    pub boundary: u32,
    pub init: InitKind,
    pub passes: Vec<Pass>,
    /// Gate count after CNOT/P/Z rewrites; passes + init consume exactly this
    /// many gates.
    pub total_gates: u64,
    /// Counts of the original (pre-rewrite) circuit.
    pub source_counts: GateCounts,
}

impl SimulationPlan {
    /// Gates consumed across init and all passes (must equal `total_gates`).
    pub fn consumed_gates(&self) -> u64 {
        self.init.gate_count() + self.passes.iter().map(Pass::gate_count).sum::<u64>()
    }

    /// Stable text listing of the plan with masks in binary.
    pub fn dump(&self) -> String {
        let n = self.num_qubits;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "plan qubits={} boundary={} gates={} (source all={} 2q={} t={})",
            n,
            self.boundary,
            self.total_gates,
            self.source_counts.all,
            self.source_counts.two_qubit,
            self.source_counts.t
        );
        match self.init {
            InitKind::Basis => {
                let _ = writeln!(out, "init basis");
            }
            InitKind::Superposition { h_bits, gate_count } => {
                let _ = writeln!(
                    out,
                    "init superposition h_bits={} gates={}",
                    h_bits.to_binary(n),
                    gate_count
                );
            }
        }
        for (i, pass) in self.passes.iter().enumerate() {
            match pass {
                Pass::Diagonal(p) => {
                    let _ = writeln!(
                        out,
                        "pass {i}: diagonal gates={} t_layers={} fused_ops={}",
                        p.diag_gate_count,
                        p.t_layers.len(),
                        p.fused_low.len()
                    );
                    for q in 0..n {
                        let m = p.cz.mask_for_bit(bit_position(n, q as Qubit));
                        if m != 0 {
                            let _ = writeln!(out, "  cz m{q} = {}", QubitMask(m).to_binary(n));
                        }
                    }
                    for (l, layer) in p.t_layers.iter().enumerate() {
                        let _ = writeln!(out, "  t layer {l} = {}", layer.mask.to_binary(n));
                    }
                    for op in &p.fused_low {
                        let _ = writeln!(out, "  fused {}", describe_op(op, n));
                    }
                }
                Pass::PairedGates(p) => {
                    let _ = writeln!(out, "pass {i}: paired [{}]", p.category);
                    for op in &p.ops {
                        let _ = writeln!(out, "  {}", describe_op(op, n));
                    }
                }
                Pass::RecursiveTransform(p) => {
                    let _ = writeln!(
                        out,
                        "pass {i}: transform x={} y={} h={} [{}]",
                        p.x_mask.to_binary(n),
                        p.y_mask.to_binary(n),
                        p.h_mask.to_binary(n),
                        p.category
                    );
                }
                Pass::Generic(p) => {
                    let _ = writeln!(out, "pass {i}: generic {}", p.gate);
                }
            }
        }
        out
    }
}

fn describe_op(op: &PairedGateOp, _n: u32) -> String {
    let targets = match op.targets {
        PairTargets::Single { bit } => format!("bit {bit}"),
        PairTargets::Pair { hi, lo } => format!("bits ({hi},{lo})"),
    };
    format!(
        "{:?} {} rt2={} i={} gates={}",
        op.kernel, targets, op.matrix.rt2_exp, op.matrix.i_exp, op.source_gates
    )
}

/// Rewrite a circuit onto the kernel gate set: CNOT becomes H-CZ-H on the
/// target qubit, P becomes T^2 and Z becomes T^4.
pub fn rewrite_for_kernels(circuit: &Circuit) -> Circuit {
    let mut gates = Vec::with_capacity(circuit.gates.len());
    for g in &circuit.gates {
        match (g.kind, g.qubits) {
            (GateKind::Cnot, GateQubits::Two(control, target)) => {
                gates.push(Gate::one(GateKind::H, target, g.cycle));
                gates.push(Gate::two(GateKind::Cz, control, target, g.cycle));
                gates.push(Gate::one(GateKind::H, target, g.cycle));
            }
            (GateKind::P, GateQubits::One(q)) => {
                for _ in 0..2 {
                    gates.push(Gate::one(GateKind::T, q, g.cycle));
                }
            }
            (GateKind::Z, GateQubits::One(q)) => {
                for _ in 0..4 {
                    gates.push(Gate::one(GateKind::T, q, g.cycle));
                }
            }
            _ => gates.push(*g),
        }
    }
    Circuit { num_qubits: circuit.num_qubits, gates }
}

/// Build a one-qubit op (matrix plus kernel selector) acting on an amplitude
/// bit position.
pub(crate) fn make_single_op_bit(kind: GateKind, bit: u32) -> PairedGateOp {
    let kernel = match kind {
        GateKind::H => KernelForm::SingleH,
        GateKind::XHalf => KernelForm::SingleX,
        GateKind::YHalf => KernelForm::SingleY,
        GateKind::Not => KernelForm::SingleNot,
        _ => KernelForm::Gauss,
    };
    PairedGateOp {
        targets: PairTargets::Single { bit },
        matrix: dense_matrix(kind),
        kernel,
        source_gates: 1,
    }
}

pub(crate) fn make_single_op(n: u32, kind: GateKind, q: Qubit) -> PairedGateOp {
    make_single_op_bit(kind, bit_position(n, q))
}

/// Build the 4x4 op for two one-qubit gates applied jointly: the gate on the
/// more significant amplitude bit is the left Kronecker factor.
pub(crate) fn make_pair_op_bits(
    hi_kind: GateKind,
    hi: u32,
    lo_kind: GateKind,
    lo: u32,
) -> Option<PairedGateOp> {
    debug_assert!(hi > lo);
    let matrix = dense_matrix(hi_kind).kron(&dense_matrix(lo_kind))?;
    let kernel = match (hi_kind, lo_kind) {
        (GateKind::H, GateKind::H) => KernelForm::HxH,
        (GateKind::XHalf, GateKind::XHalf) => KernelForm::XxX,
        (GateKind::YHalf, GateKind::YHalf) => KernelForm::YxY,
        (GateKind::XHalf, GateKind::YHalf) => KernelForm::XxY,
        (GateKind::YHalf, GateKind::XHalf) => KernelForm::YxX,
        _ => KernelForm::Gauss,
    };
    Some(PairedGateOp {
        targets: PairTargets::Pair { hi, lo },
        matrix,
        kernel,
        source_gates: 2,
    })
}

pub(crate) fn make_pair_op(
    n: u32,
    a: (GateKind, Qubit),
    b: (GateKind, Qubit),
) -> Option<PairedGateOp> {
    let pa = bit_position(n, a.1);
    let pb = bit_position(n, b.1);
    debug_assert_ne!(pa, pb);
    if pa > pb {
        make_pair_op_bits(a.0, pa, b.0, pb)
    } else {
        make_pair_op_bits(b.0, pb, a.0, pa)
    }
}

/// Append `op` to `ops`, coalescing with an earlier op on the identical
/// qubit set when no op in between touches those qubits and the product
/// still has an exact representation. Identity products stay in the list
/// for gate bookkeeping but the kernels skip their memory work.
fn push_op_coalescing(ops: &mut Vec<PairedGateOp>, op: PairedGateOp, coalesce: bool) {
    if coalesce {
        for i in (0..ops.len()).rev() {
            let prev = ops[i];
            if prev.targets == op.targets {
                if let Some(merged) = coalesce_adjacent(&prev, &op) {
                    ops[i] = merged;
                    return;
                }
                break;
            }
            if prev.targets.bit_mask() & op.targets.bit_mask() != 0 {
                break;
            }
        }
    }
    ops.push(op);
}

/// Transform a circuit into a simulation plan.
pub fn build_plan(circuit: &Circuit, opts: &PlanOptions) -> SimulationPlan {
    let n = circuit.num_qubits;
    let source_counts = circuit.gate_counts();
    let rewritten = rewrite_for_kernels(circuit);
    let total_gates = rewritten.gates.len() as u64;

    // Baseline mode: every gate applied one by one through generic kernels.
    if !opts.diag_fusion && !opts.pairing && !opts.recursive_transform {
        let passes = rewritten
            .gates
            .iter()
            .map(|g| Pass::Generic(GenericPass { gate: *g, action: gate_matrix(g.kind) }))
            .collect();
        return SimulationPlan {
            num_qubits: n,
            boundary: opts.boundary.unwrap_or(n.div_ceil(2)).min(n),
            init: InitKind::Basis,
            passes,
            total_gates,
            source_counts,
        };
    }

    let boundary = opts.boundary.unwrap_or(n.div_ceil(2)).min(n);
    let clusters = cluster_by_reordering(&rewritten);

    let mut init = InitKind::Basis;
    let mut start = 0;
    if let Some(first) = clusters.first() {
        if first.kind == GateKind::H {
            // Every gate in a leading H cluster is the first gate on its
            // qubit, so the cluster folds into state initialization -- but
            // only when no qubit repeats (repeated leading Hs cancel in
            // pairs and are left to the regular pass machinery).
            let mut h_bits = QubitMask::EMPTY;
            let mut distinct = true;
            for g in &first.gates {
                let bit = bit_position(n, g.qubits.first());
                if h_bits.contains(bit) {
                    distinct = false;
                    break;
                }
                h_bits.set(bit);
            }
            if distinct {
                init = InitKind::Superposition { h_bits, gate_count: first.gates.len() as u64 };
                start = 1;
            }
        }
    }

    let mut passes: Vec<Pass> = Vec::new();
    let mut fusable_diag = false;
    let mut ci = start;
    while ci < clusters.len() {
        if clusters[ci].kind.is_diagonal() {
            let mut cz_gates: Vec<Gate> = Vec::new();
            let mut t_gates: Vec<Gate> = Vec::new();
            while ci < clusters.len() && clusters[ci].kind.is_diagonal() {
                for g in &clusters[ci].gates {
                    match g.kind {
                        GateKind::Cz => cz_gates.push(*g),
                        GateKind::T => t_gates.push(*g),
                        _ => unreachable!("diagonal cluster holds only T/CZ after rewrite"),
                    }
                }
                ci += 1;
            }
            if opts.diag_fusion {
                fusable_diag = emit_fused_diag(&mut passes, n, &cz_gates, &t_gates);
            } else {
                // Per-gate diagonal application: one memory pass per gate.
                for g in &cz_gates {
                    let cz = encode_cz_masks(n, std::slice::from_ref(g))
                        .expect("single CZ cannot duplicate");
                    passes.push(Pass::Diagonal(DiagonalPass {
                        cz,
                        t_layers: Vec::new(),
                        fused_low: Vec::new(),
                        diag_gate_count: 1,
                    }));
                }
                for g in &t_gates {
                    let layers = encode_t_layers(n, std::slice::from_ref(g));
                    passes.push(Pass::Diagonal(DiagonalPass {
                        cz: CzCluster::empty(n),
                        t_layers: layers,
                        fused_low: Vec::new(),
                        diag_gate_count: 1,
                    }));
                }
                fusable_diag = false;
            }
        } else {
            let mut block: Vec<Gate> = Vec::new();
            let mut all_h = true;
            while ci < clusters.len() && !clusters[ci].kind.is_diagonal() {
                all_h &= clusters[ci].kind == GateKind::H;
                block.extend(clusters[ci].gates.iter().copied());
                ci += 1;
            }
            let final_h = all_h && ci == clusters.len();
            process_block(&mut passes, n, boundary, opts, &block, fusable_diag, final_h);
            fusable_diag = false;
        }
    }

    SimulationPlan {
        num_qubits: n,
        boundary,
        init,
        passes,
        total_gates,
        source_counts,
    }
}

/// Emit fused diagonal passes for a run of diagonal clusters, splitting the
/// CZ list whenever a pair repeats (the per-qubit mask encoding cannot
/// represent multiplicity). Returns whether a pass was emitted (making it a
/// fusion target for a following low-qubit block).
fn emit_fused_diag(passes: &mut Vec<Pass>, n: u32, cz_gates: &[Gate], t_gates: &[Gate]) -> bool {
    let mut batches: Vec<Vec<Gate>> = Vec::new();
    let mut current: Vec<Gate> = Vec::new();
    let mut seen: std::collections::HashSet<(Qubit, Qubit)> = std::collections::HashSet::new();
    for g in cz_gates {
        let GateQubits::Two(a, b) = g.qubits else { unreachable!() };
        if !seen.insert((a, b)) {
            batches.push(std::mem::take(&mut current));
            seen.clear();
            seen.insert((a, b));
        }
        current.push(*g);
    }
    if !current.is_empty() || batches.is_empty() {
        batches.push(current);
    }

    let t_layers = encode_t_layers(n, t_gates);
    let mut emitted = false;
    for (bi, batch) in batches.iter().enumerate() {
        let layers = if bi == 0 { t_layers.clone() } else { Vec::new() };
        if batch.is_empty() && layers.is_empty() {
            continue;
        }
        let cz = encode_cz_masks(n, batch).expect("batches are duplicate-free");
        passes.push(Pass::Diagonal(DiagonalPass {
            cz,
            t_layers: layers,
            fused_low: Vec::new(),
            diag_gate_count: batch.len() as u64 + if bi == 0 { t_gates.len() as u64 } else { 0 },
        }));
        emitted = true;
    }
    emitted
}

/// Plan a block of adjacent non-diagonal one-qubit clusters: layer the block
/// by per-qubit order, split each layer at the low/high boundary, pair the
/// low gates (fusing them into a directly preceding diagonal pass when
/// possible) and send high layers to the recursive transform.
fn process_block(
    passes: &mut Vec<Pass>,
    n: u32,
    boundary: u32,
    opts: &PlanOptions,
    block: &[Gate],
    fuse_into_diag: bool,
    final_h: bool,
) {
    // Greedy layering: a gate goes to the first layer after every earlier
    // gate on its qubit. Within a layer all qubits are distinct.
    let mut watermark = vec![0usize; n as usize];
    let mut layers: Vec<Vec<(GateKind, Qubit)>> = Vec::new();
    for g in block {
        let q = g.qubits.first();
        let l = watermark[q as usize];
        if layers.len() <= l {
            layers.push(Vec::new());
        }
        layers[l].push((g.kind, q));
        watermark[q as usize] = l + 1;
    }

    let mut low_ops: Vec<PairedGateOp> = Vec::new();
    let mut high_passes: Vec<Pass> = Vec::new();
    let high_category = if final_h { PassCategory::FinalH } else { PassCategory::HighNonDiagonal };

    for layer in &layers {
        let (low, high): (Vec<_>, Vec<_>) = layer
            .iter()
            .copied()
            .partition(|&(_, q)| bit_position(n, q) < boundary);

        let (pairs, singles) = pair_one_qubit_gates(n, &low, opts.pairing);
        for op in pairs.into_iter().chain(singles) {
            push_op_coalescing(&mut low_ops, op, opts.pairing);
        }

        if high.is_empty() {
            continue;
        }
        if opts.recursive_transform {
            let mut x_mask = QubitMask::EMPTY;
            let mut y_mask = QubitMask::EMPTY;
            let mut h_mask = QubitMask::EMPTY;
            let mut nots: Vec<(GateKind, Qubit)> = Vec::new();
            for &(kind, q) in &high {
                let bit = bit_position(n, q);
                match kind {
                    GateKind::XHalf => x_mask.set(bit),
                    GateKind::YHalf => y_mask.set(bit),
                    GateKind::H => h_mask.set(bit),
                    GateKind::Not => nots.push((kind, q)),
                    _ => unreachable!("non-diagonal block holds 1q gates only"),
                }
            }
            if !(x_mask.is_empty() && y_mask.is_empty() && h_mask.is_empty()) {
                high_passes.push(Pass::RecursiveTransform(RtPass {
                    x_mask,
                    y_mask,
                    h_mask,
                    category: high_category,
                }));
            }
            if !nots.is_empty() {
                let (pairs, singles) = pair_one_qubit_gates(n, &nots, opts.pairing);
                let ops: Vec<_> = pairs.into_iter().chain(singles).collect();
                high_passes.push(Pass::PairedGates(PairedGatePass {
                    ops,
                    category: high_category,
                }));
            }
        } else {
            let (pairs, singles) = pair_one_qubit_gates(n, &high, opts.pairing);
            let ops: Vec<_> = pairs.into_iter().chain(singles).collect();
            if !ops.is_empty() {
                high_passes.push(Pass::PairedGates(PairedGatePass {
                    ops,
                    category: high_category,
                }));
            }
        }
    }

    if !low_ops.is_empty() {
        let fused = fuse_into_diag
            && opts.diag_fusion
            && matches!(passes.last(), Some(Pass::Diagonal(_)));
        if fused {
            let Some(Pass::Diagonal(dp)) = passes.last_mut() else { unreachable!() };
            for op in low_ops {
                push_op_coalescing(&mut dp.fused_low, op, opts.pairing);
            }
        } else {
            let all_single = low_ops
                .iter()
                .all(|op| matches!(op.targets, PairTargets::Single { .. }));
            let category = if final_h {
                PassCategory::FinalH
            } else if all_single {
                PassCategory::Singles
            } else {
                PassCategory::LowPairs
            };
            passes.push(Pass::PairedGates(PairedGatePass { ops: low_ops, category }));
        }
    }
    passes.extend(high_passes);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::GateKind::*;

    fn fig7_circuit() -> Circuit {
        // 4-qubit depth 1+4+1 circuit whose clusters are the canonical
        // reordering example.
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
    fn rewrite_cnot_p_z() {
        let c = Circuit::parse("2\n0 cnot 0 1\n1 p 0\n2 z 1").unwrap();
        let r = rewrite_for_kernels(&c);
        let kinds: Vec<GateKind> = r.gates.iter().map(|g| g.kind).collect();
        assert_eq!(kinds, vec![H, Cz, H, T, T, T, T, T, T]);
        // CNOT's H gates land on the target qubit.
        assert_eq!(r.gates[0].qubits, GateQubits::One(1));
        assert_eq!(r.gates[2].qubits, GateQubits::One(1));
        assert!(r.validate().is_ok());
    }

    #[test]
    fn plan_consumes_every_gate() {
        let c = fig7_circuit();
        for opts in [
            PlanOptions::default(),
            PlanOptions { diag_fusion: false, ..Default::default() },
            PlanOptions { pairing: false, ..Default::default() },
            PlanOptions { recursive_transform: false, ..Default::default() },
            PlanOptions {
                diag_fusion: false,
                pairing: false,
                recursive_transform: false,
                boundary: None,
            },
        ] {
            let plan = build_plan(&c, &opts);
            assert_eq!(
                plan.consumed_gates(),
                plan.total_gates,
                "gate conservation with {opts:?}"
            );
        }
    }

    #[test]
    fn plan_fig7_shape() {
        let c = fig7_circuit();
        let plan = build_plan(&c, &PlanOptions::default());
        // Leading H layer folds into superposition init.
        assert!(matches!(plan.init, InitKind::Superposition { gate_count: 4, .. }));
        // First pass fuses both CZ gates, one T layer, and the low X/Y ops.
        let Pass::Diagonal(dp) = &plan.passes[0] else {
            panic!("first pass should be diagonal: {}", plan.dump())
        };
        assert_eq!(dp.cz.gate_count(), 2);
        assert_eq!(dp.t_layers.len(), 1);
        assert_eq!(dp.t_layers[0].mask.to_binary(4), "1111");
        assert!(!dp.fused_low.is_empty());
        // Some recursive-transform work on the high qubits exists.
        assert!(plan
            .passes
            .iter()
            .any(|p| matches!(p, Pass::RecursiveTransform(_))));
    }

    #[test]
    fn all_diagonal_circuit_single_pass() {
        let c = Circuit::parse("3\n0 t 0\n0 cz 1 2\n1 t 1\n2 cz 0 1\n3 t 0").unwrap();
        let plan = build_plan(&c, &PlanOptions::default());
        assert_eq!(plan.passes.len(), 1);
        let Pass::Diagonal(dp) = &plan.passes[0] else { panic!() };
        assert_eq!(dp.cz.gate_count(), 2);
        // Two T gates on qubit 0 need two layers.
        assert_eq!(dp.t_layers.len(), 2);
    }

    #[test]
    fn duplicate_cz_pairs_split_passes() {
        let c = Circuit::parse("2\n0 cz 0 1\n1 cz 0 1").unwrap();
        let plan = build_plan(&c, &PlanOptions::default());
        let diag_passes: Vec<_> = plan
            .passes
            .iter()
            .filter(|p| matches!(p, Pass::Diagonal(_)))
            .collect();
        assert_eq!(diag_passes.len(), 2);
        assert_eq!(plan.consumed_gates(), plan.total_gates);
    }

    #[test]
    fn generic_mode_emits_per_gate_passes() {
        let c = fig7_circuit();
        let opts = PlanOptions {
            diag_fusion: false,
            pairing: false,
            recursive_transform: false,
            boundary: None,
        };
        let plan = build_plan(&c, &opts);
        assert_eq!(plan.init, InitKind::Basis);
        assert_eq!(plan.passes.len() as u64, plan.total_gates);
        assert!(plan.passes.iter().all(|p| matches!(p, Pass::Generic(_))));
    }

    #[test]
    fn coalesce_identity_is_skippable() {
        let mut ops = Vec::new();
        let h2 = make_pair_op(4, (H, 2), (H, 3)).unwrap();
        push_op_coalescing(&mut ops, h2, true);
        push_op_coalescing(&mut ops, h2, true);
        // H(x)H twice merges to the identity: one op, no kernel work, all
        // four source gates accounted for.
        assert_eq!(ops.len(), 1);
        assert!(ops[0].matrix.is_scaled_identity());
        assert_eq!(ops[0].matrix.i_exp, 0);
        assert_eq!(ops[0].source_gates, 4);
    }

    #[test]
    fn coalesce_merges_across_untouched_ops() {
        let mut ops = Vec::new();
        let yy = make_pair_op(4, (YHalf, 2), (YHalf, 3)).unwrap();
        let other = make_pair_op(4, (XHalf, 0), (XHalf, 1)).unwrap();
        let hh = make_pair_op(4, (H, 2), (H, 3)).unwrap();
        push_op_coalescing(&mut ops, yy, true);
        push_op_coalescing(&mut ops, other, true);
        push_op_coalescing(&mut ops, hh, true);
        // (H(x)H) after (Y(x)Y) coalesces into one op even with an op on
        // other qubits in between.
        assert_eq!(ops.len(), 2);
        assert_eq!(ops[0].source_gates, 4);
    }

    #[test]
    fn plan_dump_stable() {
        let c = fig7_circuit();
        let a = build_plan(&c, &PlanOptions::default()).dump();
        let b = build_plan(&c, &PlanOptions::default()).dump();
        assert_eq!(a, b);
        assert!(a.contains("init superposition"));
    }
}
