//! Non-diagonal gate kernels: generic 1q/2q application with bit-trick index
//! iteration, multiply-free paired-gate kernels operating on aligned lanes,
//! and the recursive cache-blocked transform for high-qubit clusters.

use std::ops::Range;

use crate::circuit::{bit_position, Gaussian, GateKind, Qubit, ScaledGaussianMatrix};
use crate::planner::{
    make_pair_op_bits, make_single_op_bit, PairTargets, PairedGateOp, KernelForm, QubitMask,
};
use crate::state::{AmpsView, StateVector};

use super::{KernelOptions, ScaleDelta};

// ---------------------------------------------------------------------------
// Complex scalar and lane primitives. Everything here is adds, subtracts,
// component swaps and sign flips; these are exact in f32, so the scalar and
// lane paths produce bit-identical results.

type C = (f32, f32);

#[inline(always)]
fn c_add(a: C, b: C) -> C {
    (a.0 + b.0, a.1 + b.1)
}

#[inline(always)]
fn c_sub(a: C, b: C) -> C {
    (a.0 - b.0, a.1 - b.1)
}

/// Multiply by i: swap components, negate the new real part.
#[inline(always)]
fn c_mul_i(a: C) -> C {
    (-a.1, a.0)
}

/// Multiply by a small Gaussian integer without floating-point multiplies.
#[inline(always)]
fn gmul(g: Gaussian, z: C) -> C {
    match (g.re, g.im) {
        (0, 0) => (0.0, 0.0),
        (1, 0) => z,
        (-1, 0) => (-z.0, -z.1),
        (0, 1) => (-z.1, z.0),
        (0, -1) => (z.1, -z.0),
        (1, 1) => (z.0 - z.1, z.0 + z.1),
        (1, -1) => (z.0 + z.1, z.1 - z.0),
        (-1, 1) => (-z.0 - z.1, z.0 - z.1),
        (-1, -1) => (z.1 - z.0, -z.0 - z.1),
        _ => unreachable!("non-normalized Gaussian entry"),
    }
}

/// One 256-bit block: 4 complex amplitudes as 8 interleaved floats.
#[derive(Clone, Copy)]
pub(crate) struct Lane(pub [f32; 8]);

impl Lane {
    #[inline(always)]
    fn add(self, o: Lane) -> Lane {
        let mut r = [0f32; 8];
        for k in 0..8 {
            r[k] = self.0[k] + o.0[k];
        }
        Lane(r)
    }

    #[inline(always)]
    fn sub(self, o: Lane) -> Lane {
        let mut r = [0f32; 8];
        for k in 0..8 {
            r[k] = self.0[k] - o.0[k];
        }
        Lane(r)
    }

    /// Per-amplitude multiply by i: permute re/im pairs, flip the new re.
    #[inline(always)]
    fn mul_i(self) -> Lane {
        let a = self.0;
        Lane([-a[1], a[0], -a[3], a[2], -a[5], a[4], -a[7], a[6]])
    }

    #[inline(always)]
    fn neg(self) -> Lane {
        let mut r = [0f32; 8];
        for k in 0..8 {
            r[k] = -self.0[k];
        }
        Lane(r)
    }

    #[inline(always)]
    fn zero() -> Lane {
        Lane([0f32; 8])
    }
}

#[inline(always)]
fn gmul_lane(g: Gaussian, z: Lane) -> Lane {
    match (g.re, g.im) {
        (0, 0) => Lane::zero(),
        (1, 0) => z,
        (-1, 0) => z.neg(),
        (0, 1) => z.mul_i(),
        (0, -1) => z.mul_i().neg(),
        (1, 1) => z.add(z.mul_i()),
        (1, -1) => z.sub(z.mul_i()),
        (-1, 1) => z.mul_i().sub(z),
        (-1, -1) => z.neg().sub(z.mul_i()),
        _ => unreachable!("non-normalized Gaussian entry"),
    }
}

// ---------------------------------------------------------------------------
// Index arithmetic.

/// Insert a zero bit at position `p`, shifting higher bits up.
#[inline(always)]
fn insert_zero_bit(x: u64, p: u32) -> u64 {
    let low = x & ((1u64 << p) - 1);
    ((x >> p) << (p + 1)) | low
}

/// Spread a compact set id over the index space, leaving bit `p` clear.
#[inline(always)]
pub(crate) fn spread1(t: u64, p: u32) -> u64 {
    insert_zero_bit(t, p)
}

/// Spread a compact set id, leaving bits `lo < hi` clear.
#[inline(always)]
pub(crate) fn spread2(t: u64, lo: u32, hi: u32) -> u64 {
    debug_assert!(lo < hi);
    insert_zero_bit(insert_zero_bit(t, lo), hi)
}

/// First set of amplitude indices a gate on the masked bit positions acts
/// upon (set id 0), built by doubling from the least significant gate bit:
/// each processed bit appends the current list shifted by that bit's offset.
/// Indices come out strictly increasing: position `k` in the set carries the
/// bits of `k` spread over the mask (low bit of `k` onto the lowest gate
/// bit).
pub fn first_index_set(gate_bitmask: u64) -> Vec<u64> {
    let mut idxs: Vec<u64> = vec![0];
    let mut mask = gate_bitmask;
    while mask != 0 {
        let b = mask.trailing_zeros();
        mask &= mask - 1;
        let offset = 1u64 << b;
        let shifted: Vec<u64> = idxs.iter().map(|&x| x + offset).collect();
        idxs.extend(shifted);
    }
    idxs
}

// ---------------------------------------------------------------------------
// Pair and single multiply-free dataflows.
//
// The 4x4 forms act on amplitude quads (a0, a1, a2, a3) ordered by
// (hi bit, lo bit) = (0,0), (0,1), (1,0), (1,1); the gate on the more
// significant bit is the left Kronecker factor.

trait PairDataflow {
    fn apply4(&self, a: [C; 4]) -> [C; 4];
    fn apply4_lane(&self, a: [Lane; 4]) -> [Lane; 4];
}

trait SingleDataflow {
    fn apply2(&self, a: [C; 2]) -> [C; 2];
    fn apply2_lane(&self, a: [Lane; 2]) -> [Lane; 2];
}

/// H' (x) H': a +/-1 butterfly.
struct HxHOp;

impl PairDataflow for HxHOp {
    #[inline(always)]
    fn apply4(&self, a: [C; 4]) -> [C; 4] {
        let s01 = c_add(a[0], a[1]);
        let d01 = c_sub(a[0], a[1]);
        let s23 = c_add(a[2], a[3]);
        let d23 = c_sub(a[2], a[3]);
        [c_add(s01, s23), c_add(d01, d23), c_sub(s01, s23), c_sub(d01, d23)]
    }

    #[inline(always)]
    fn apply4_lane(&self, a: [Lane; 4]) -> [Lane; 4] {
        let s01 = a[0].add(a[1]);
        let d01 = a[0].sub(a[1]);
        let s23 = a[2].add(a[3]);
        let d23 = a[2].sub(a[3]);
        [s01.add(s23), d01.add(d23), s01.sub(s23), d01.sub(d23)]
    }
}

/// X1/2' (x) X1/2' with the shared factor 2 extracted:
/// [[i,1,1,-i],[1,i,-i,1],[1,-i,i,1],[-i,1,1,i]].
struct XxXOp;

impl PairDataflow for XxXOp {
    #[inline(always)]
    fn apply4(&self, a: [C; 4]) -> [C; 4] {
        let t0 = c_add(a[0], a[3]);
        let t1 = c_add(a[1], a[2]);
        let t2 = c_mul_i(c_sub(a[0], a[3]));
        let t3 = c_mul_i(c_sub(a[1], a[2]));
        [c_add(t1, t2), c_add(t0, t3), c_sub(t0, t3), c_sub(t1, t2)]
    }

    #[inline(always)]
    fn apply4_lane(&self, a: [Lane; 4]) -> [Lane; 4] {
        let t0 = a[0].add(a[3]);
        let t1 = a[1].add(a[2]);
        let t2 = a[0].sub(a[3]).mul_i();
        let t3 = a[1].sub(a[2]).mul_i();
        [t1.add(t2), t0.add(t3), t0.sub(t3), t1.sub(t2)]
    }
}

/// Y1/2' (x) Y1/2' with the shared 2i extracted (the i goes to the global
/// phase): [[1,1,1,1],[-1,1,-1,1],[-1,-1,1,1],[1,-1,-1,1]].
struct YxYOp;

impl PairDataflow for YxYOp {
    #[inline(always)]
    fn apply4(&self, a: [C; 4]) -> [C; 4] {
        let s01 = c_add(a[0], a[1]);
        let d10 = c_sub(a[1], a[0]);
        let s23 = c_add(a[2], a[3]);
        let d32 = c_sub(a[3], a[2]);
        [c_add(s01, s23), c_add(d10, d32), c_sub(s23, s01), c_sub(d32, d10)]
    }

    #[inline(always)]
    fn apply4_lane(&self, a: [Lane; 4]) -> [Lane; 4] {
        let s01 = a[0].add(a[1]);
        let d10 = a[1].sub(a[0]);
        let s23 = a[2].add(a[3]);
        let d32 = a[3].sub(a[2]);
        [s01.add(s23), d10.add(d32), s23.sub(s01), d32.sub(d10)]
    }
}

/// X1/2' (x) Y1/2' / 2: [[i,i,1,1],[-i,i,-1,1],[1,1,i,i],[-1,1,-i,i]].
struct XxYOp;

impl PairDataflow for XxYOp {
    #[inline(always)]
    fn apply4(&self, a: [C; 4]) -> [C; 4] {
        let s01 = c_add(a[0], a[1]);
        let d10 = c_sub(a[1], a[0]);
        let s23 = c_add(a[2], a[3]);
        let d32 = c_sub(a[3], a[2]);
        [
            c_add(c_mul_i(s01), s23),
            c_add(c_mul_i(d10), d32),
            c_add(s01, c_mul_i(s23)),
            c_add(d10, c_mul_i(d32)),
        ]
    }

    #[inline(always)]
    fn apply4_lane(&self, a: [Lane; 4]) -> [Lane; 4] {
        let s01 = a[0].add(a[1]);
        let d10 = a[1].sub(a[0]);
        let s23 = a[2].add(a[3]);
        let d32 = a[3].sub(a[2]);
        [
            s01.mul_i().add(s23),
            d10.mul_i().add(d32),
            s01.add(s23.mul_i()),
            d10.add(d32.mul_i()),
        ]
    }
}

/// Y1/2' (x) X1/2' / 2: [[i,1,i,1],[1,i,1,i],[-i,-1,i,1],[-1,-i,1,i]].
struct YxXOp;

impl PairDataflow for YxXOp {
    #[inline(always)]
    fn apply4(&self, a: [C; 4]) -> [C; 4] {
        let s02 = c_add(a[0], a[2]);
        let s13 = c_add(a[1], a[3]);
        let d20 = c_sub(a[2], a[0]);
        let d31 = c_sub(a[3], a[1]);
        [
            c_add(c_mul_i(s02), s13),
            c_add(s02, c_mul_i(s13)),
            c_add(c_mul_i(d20), d31),
            c_add(d20, c_mul_i(d31)),
        ]
    }

    #[inline(always)]
    fn apply4_lane(&self, a: [Lane; 4]) -> [Lane; 4] {
        let s02 = a[0].add(a[2]);
        let s13 = a[1].add(a[3]);
        let d20 = a[2].sub(a[0]);
        let d31 = a[3].sub(a[1]);
        [
            s02.mul_i().add(s13),
            s02.add(s13.mul_i()),
            d20.mul_i().add(d31),
            d20.add(d31.mul_i()),
        ]
    }
}

/// Generic Gaussian 4x4 (coalesced products, NOT pairs, mixed H/X/Y pairs):
/// still multiply-free, entry by entry.
struct Gauss4Op<'a>(&'a ScaledGaussianMatrix);

impl PairDataflow for Gauss4Op<'_> {
    #[inline(always)]
    fn apply4(&self, a: [C; 4]) -> [C; 4] {
        let mut out = [(0f32, 0f32); 4];
        for (r, slot) in out.iter_mut().enumerate() {
            let mut acc = (0f32, 0f32);
            for (c, &av) in a.iter().enumerate() {
                let g = self.0.entry(r, c);
                if !g.is_zero() {
                    acc = c_add(acc, gmul(g, av));
                }
            }
            *slot = acc;
        }
        out
    }

    #[inline(always)]
    fn apply4_lane(&self, a: [Lane; 4]) -> [Lane; 4] {
        let mut out = [Lane::zero(); 4];
        for (r, slot) in out.iter_mut().enumerate() {
            let mut acc = Lane::zero();
            for (c, &av) in a.iter().enumerate() {
                let g = self.0.entry(r, c);
                if !g.is_zero() {
                    acc = acc.add(gmul_lane(g, av));
                }
            }
            *slot = acc;
        }
        out
    }
}

/// H': out = (a0 + a1, a0 - a1).
struct HOp;

impl SingleDataflow for HOp {
    #[inline(always)]
    fn apply2(&self, a: [C; 2]) -> [C; 2] {
        [c_add(a[0], a[1]), c_sub(a[0], a[1])]
    }

    #[inline(always)]
    fn apply2_lane(&self, a: [Lane; 2]) -> [Lane; 2] {
        [a[0].add(a[1]), a[0].sub(a[1])]
    }
}

/// X1/2': (1+i)a0 + (1-i)a1 = s + i d with s = a0+a1, d = a0-a1.
struct XOp;

impl SingleDataflow for XOp {
    #[inline(always)]
    fn apply2(&self, a: [C; 2]) -> [C; 2] {
        let s = c_add(a[0], a[1]);
        let d = c_sub(a[0], a[1]);
        [c_add(s, c_mul_i(d)), c_sub(s, c_mul_i(d))]
    }

    #[inline(always)]
    fn apply2_lane(&self, a: [Lane; 2]) -> [Lane; 2] {
        let s = a[0].add(a[1]);
        let d = a[0].sub(a[1]).mul_i();
        [s.add(d), s.sub(d)]
    }
}

/// Y1/2': ((1+i)(a0+a1), (1+i)(a1-a0)).
struct YOp;

impl SingleDataflow for YOp {
    #[inline(always)]
    fn apply2(&self, a: [C; 2]) -> [C; 2] {
        let s = c_add(a[0], a[1]);
        let d = c_sub(a[1], a[0]);
        [c_add(s, c_mul_i(s)), c_add(d, c_mul_i(d))]
    }

    #[inline(always)]
    fn apply2_lane(&self, a: [Lane; 2]) -> [Lane; 2] {
        let s = a[0].add(a[1]);
        let d = a[1].sub(a[0]);
        [s.add(s.mul_i()), d.add(d.mul_i())]
    }
}

struct NotOp;

impl SingleDataflow for NotOp {
    #[inline(always)]
    fn apply2(&self, a: [C; 2]) -> [C; 2] {
        [a[1], a[0]]
    }

    #[inline(always)]
    fn apply2_lane(&self, a: [Lane; 2]) -> [Lane; 2] {
        [a[1], a[0]]
    }
}

struct Gauss2Op<'a>(&'a ScaledGaussianMatrix);

impl SingleDataflow for Gauss2Op<'_> {
    #[inline(always)]
    fn apply2(&self, a: [C; 2]) -> [C; 2] {
        let mut out = [(0f32, 0f32); 2];
        for (r, slot) in out.iter_mut().enumerate() {
            let mut acc = (0f32, 0f32);
            for (c, &av) in a.iter().enumerate() {
                let g = self.0.entry(r, c);
                if !g.is_zero() {
                    acc = c_add(acc, gmul(g, av));
                }
            }
            *slot = acc;
        }
        out
    }

    #[inline(always)]
    fn apply2_lane(&self, a: [Lane; 2]) -> [Lane; 2] {
        let mut out = [Lane::zero(); 2];
        for (r, slot) in out.iter_mut().enumerate() {
            let mut acc = Lane::zero();
            for (c, &av) in a.iter().enumerate() {
                let g = self.0.entry(r, c);
                if !g.is_zero() {
                    acc = acc.add(gmul_lane(g, av));
                }
            }
            *slot = acc;
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Sweep drivers. A sweep applies one op to every index set whose compact set
// id lies in `t_range`, within the region starting at `region_offset`.
// Callers guarantee that concurrent sweeps receive disjoint t ranges.

fn run_pair_sweep<O: PairDataflow>(
    view: AmpsView,
    region_offset: u64,
    hi: u32,
    lo: u32,
    op: &O,
    t_range: Range<u64>,
    lanes: bool,
) {
    let oh = 1u64 << hi;
    let ol = 1u64 << lo;
    let mut t = t_range.start;
    // Lane path: four consecutive set ids share contiguous 4-amplitude
    // blocks whenever both gate bits sit above the lane (bits 0 and 1).
    if lanes && lo >= 2 {
        debug_assert_eq!(t_range.start % 4, 0);
        while t + 4 <= t_range.end {
            let base = region_offset + spread2(t, lo, hi);
            // SAFETY: set ids in t_range are exclusive to this sweep and the
            // four block addresses are in range and pairwise disjoint.
            unsafe {
                let a = [
                    Lane(view.load_lane(base)),
                    Lane(view.load_lane(base + ol)),
                    Lane(view.load_lane(base + oh)),
                    Lane(view.load_lane(base + oh + ol)),
                ];
                let r = op.apply4_lane(a);
                view.store_lane(base, r[0].0);
                view.store_lane(base + ol, r[1].0);
                view.store_lane(base + oh, r[2].0);
                view.store_lane(base + oh + ol, r[3].0);
            }
            t += 4;
        }
    }
    while t < t_range.end {
        let base = region_offset + spread2(t, lo, hi);
        // SAFETY: as above; scalar tail.
        unsafe {
            let a = [
                view.load(base),
                view.load(base + ol),
                view.load(base + oh),
                view.load(base + oh + ol),
            ];
            let r = op.apply4(a);
            view.store(base, r[0].0, r[0].1);
            view.store(base + ol, r[1].0, r[1].1);
            view.store(base + oh, r[2].0, r[2].1);
            view.store(base + oh + ol, r[3].0, r[3].1);
        }
        t += 1;
    }
}

fn run_single_sweep<O: SingleDataflow>(
    view: AmpsView,
    region_offset: u64,
    bit: u32,
    op: &O,
    t_range: Range<u64>,
    lanes: bool,
) {
    let ob = 1u64 << bit;
    let mut t = t_range.start;
    if lanes && bit >= 2 {
        debug_assert_eq!(t_range.start % 4, 0);
        while t + 4 <= t_range.end {
            let base = region_offset + spread1(t, bit);
            // SAFETY: disjoint set ids; addresses in range.
            unsafe {
                let a = [Lane(view.load_lane(base)), Lane(view.load_lane(base + ob))];
                let r = op.apply2_lane(a);
                view.store_lane(base, r[0].0);
                view.store_lane(base + ob, r[1].0);
            }
            t += 4;
        }
    }
    while t < t_range.end {
        let base = region_offset + spread1(t, bit);
        // SAFETY: as above.
        unsafe {
            let a = [view.load(base), view.load(base + ob)];
            let r = op.apply2(a);
            view.store(base, r[0].0, r[0].1);
            view.store(base + ob, r[1].0, r[1].1);
        }
        t += 1;
    }
}

/// Apply one paired/single op to the set ids in `t_range` of the region at
/// `region_offset`. Returns the op's scale contribution (to be applied once
/// per full traversal, not per sub-range).
pub(crate) fn sweep_op(
    view: AmpsView,
    region_offset: u64,
    op: &PairedGateOp,
    t_range: Range<u64>,
    lanes: bool,
) {
    if op.matrix.is_scaled_identity() {
        return; // global-phase-only op; scale handled by the caller
    }
    match op.targets {
        PairTargets::Pair { hi, lo } => match op.kernel {
            KernelForm::HxH => run_pair_sweep(view, region_offset, hi, lo, &HxHOp, t_range, lanes),
            KernelForm::XxX => run_pair_sweep(view, region_offset, hi, lo, &XxXOp, t_range, lanes),
            KernelForm::YxY => run_pair_sweep(view, region_offset, hi, lo, &YxYOp, t_range, lanes),
            KernelForm::XxY => run_pair_sweep(view, region_offset, hi, lo, &XxYOp, t_range, lanes),
            KernelForm::YxX => run_pair_sweep(view, region_offset, hi, lo, &YxXOp, t_range, lanes),
            _ => run_pair_sweep(
                view,
                region_offset,
                hi,
                lo,
                &Gauss4Op(&op.matrix),
                t_range,
                lanes,
            ),
        },
        PairTargets::Single { bit } => match op.kernel {
            KernelForm::SingleH => {
                run_single_sweep(view, region_offset, bit, &HOp, t_range, lanes)
            }
            KernelForm::SingleX => {
                run_single_sweep(view, region_offset, bit, &XOp, t_range, lanes)
            }
            KernelForm::SingleY => {
                run_single_sweep(view, region_offset, bit, &YOp, t_range, lanes)
            }
            KernelForm::SingleNot => {
                run_single_sweep(view, region_offset, bit, &NotOp, t_range, lanes)
            }
            _ => run_single_sweep(
                view,
                region_offset,
                bit,
                &Gauss2Op(&op.matrix),
                t_range,
                lanes,
            ),
        },
    }
}

/// Number of index sets (compact set ids) the op has within a region of
/// `region_bits` bits.
pub(crate) fn op_set_count(op: &PairedGateOp, region_bits: u32) -> u64 {
    match op.targets {
        PairTargets::Single { .. } => 1u64 << (region_bits - 1),
        PairTargets::Pair { .. } => 1u64 << (region_bits - 2),
    }
}

/// Apply a paired-gate op to the whole state, single-threaded, updating the
/// global scale.
pub fn apply_pair_kernel(sv: &mut StateVector, op: &PairedGateOp, opts: &KernelOptions) {
    let n = sv.num_qubits();
    let sets = op_set_count(op, n);
    let view = sv.view();
    sweep_op(view, 0, op, 0..sets, opts.aligned_lanes);
    sv.scale.add_rt2(op.matrix.rt2_exp);
    sv.scale.add_i(op.matrix.i_exp);
}

// ---------------------------------------------------------------------------
// Generic dense kernels (the universal fallback and test reference). These
// use plain floating-point complex arithmetic with the physical matrix, the
// way an unoptimized simulator applies gates one by one.

fn reconstruct_f32(m: &ScaledGaussianMatrix) -> [[C; 4]; 4] {
    let mut out = [[(0f32, 0f32); 4]; 4];
    let d = m.dim as usize;
    for (r, row) in out.iter_mut().enumerate().take(d) {
        for (c, cell) in row.iter_mut().enumerate().take(d) {
            let v = m.reconstruct(r, c);
            *cell = (v.re as f32, v.im as f32);
        }
    }
    out
}

#[inline(always)]
fn c_mul(a: C, b: C) -> C {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

/// Apply a generic one-qubit gate with the block-skip iteration: blocks
/// where the gate bit is set are skipped by adding the offending bits.
pub fn apply_1q_generic(sv: &mut StateVector, target: Qubit, m: &ScaledGaussianMatrix) {
    let n = sv.num_qubits();
    let bit = 1u64 << bit_position(n, target);
    let size = sv.len();
    let e = reconstruct_f32(m);
    let amps = sv.amps_mut();
    let mut idx: u64 = 0;
    while idx < size {
        if idx & bit == 0 {
            let j0 = (idx as usize) * 2;
            let j1 = ((idx | bit) as usize) * 2;
            let a = (amps[j0], amps[j0 + 1]);
            let b = (amps[j1], amps[j1 + 1]);
            let r0 = c_add(c_mul(e[0][0], a), c_mul(e[0][1], b));
            let r1 = c_add(c_mul(e[1][0], a), c_mul(e[1][1], b));
            amps[j0] = r0.0;
            amps[j0 + 1] = r0.1;
            amps[j1] = r1.0;
            amps[j1 + 1] = r1.1;
            idx += 1;
        } else {
            idx += idx & bit;
        }
    }
}

/// Apply a generic two-qubit gate. The 4x4 matrix basis is
/// (first qubit bit, second qubit bit); index sets are the first set
/// (set id 0) shifted by each valid set id, skipping blocks where a gate bit
/// is set.
pub fn apply_2q_generic(sv: &mut StateVector, qa: Qubit, qb: Qubit, m: &ScaledGaussianMatrix) {
    let n = sv.num_qubits();
    let ba = 1u64 << bit_position(n, qa);
    let bb = 1u64 << bit_position(n, qb);
    let gate_bitmask = ba | bb;
    let size = sv.len();
    let e = reconstruct_f32(m);
    let amps = sv.amps_mut();
    let num_sets = size / 4;
    let mut done: u64 = 0;
    let mut idx: u64 = 0;
    while done < num_sets {
        if idx & gate_bitmask == 0 {
            let set = [idx, idx | bb, idx | ba, idx | ba | bb];
            let mut v = [(0f32, 0f32); 4];
            for (k, &j) in set.iter().enumerate() {
                v[k] = (amps[(j as usize) * 2], amps[(j as usize) * 2 + 1]);
            }
            for (r, &j) in set.iter().enumerate() {
                let mut acc = (0f32, 0f32);
                for (c, &av) in v.iter().enumerate() {
                    acc = c_add(acc, c_mul(e[r][c], av));
                }
                amps[(j as usize) * 2] = acc.0;
                amps[(j as usize) * 2 + 1] = acc.1;
            }
            done += 1;
            idx += 1;
        } else {
            idx += idx & gate_bitmask;
        }
    }
}

/// Parallel worker sweep for a generic dense one-qubit gate (floating-point
/// complex arithmetic, physical matrix).
pub(crate) fn sweep_1q_dense(view: AmpsView, bit: u32, e: &[[C; 4]; 4], t_range: Range<u64>) {
    let ob = 1u64 << bit;
    for t in t_range {
        let base = spread1(t, bit);
        // SAFETY: disjoint set ids per worker.
        unsafe {
            let a = view.load(base);
            let b = view.load(base + ob);
            let r0 = c_add(c_mul(e[0][0], a), c_mul(e[0][1], b));
            let r1 = c_add(c_mul(e[1][0], a), c_mul(e[1][1], b));
            view.store(base, r0.0, r0.1);
            view.store(base + ob, r1.0, r1.1);
        }
    }
}

/// Parallel worker sweep for a generic dense two-qubit gate; `ba` is the bit
/// of the first (matrix-significant) qubit.
pub(crate) fn sweep_2q_dense(
    view: AmpsView,
    ba: u32,
    bb: u32,
    e: &[[C; 4]; 4],
    t_range: Range<u64>,
) {
    let oa = 1u64 << ba;
    let ob = 1u64 << bb;
    let (lo, hi) = if ba < bb { (ba, bb) } else { (bb, ba) };
    for t in t_range {
        let base = spread2(t, lo, hi);
        let set = [base, base + ob, base + oa, base + oa + ob];
        // SAFETY: disjoint set ids per worker.
        unsafe {
            let mut v = [(0f32, 0f32); 4];
            for (k, &j) in set.iter().enumerate() {
                v[k] = view.load(j);
            }
            for (r, &j) in set.iter().enumerate() {
                let mut acc = (0f32, 0f32);
                for (c, &av) in v.iter().enumerate() {
                    acc = c_add(acc, c_mul(e[r][c], av));
                }
                view.store(j, acc.0, acc.1);
            }
        }
    }
}

/// Parallel worker sweep for generic diagonal gates: multiply each amplitude
/// in `range` by its numeric phase.
pub(crate) fn sweep_diag_dense(
    view: AmpsView,
    masks: &[(u64, u8); 2],
    phases: &[C; 8],
    range: Range<u64>,
) {
    for j in range {
        let mut k = 0u8;
        for &(mask, oct) in masks {
            if j & mask == mask {
                k = (k + oct) & 7;
            }
        }
        if k != 0 {
            // SAFETY: disjoint index ranges per worker.
            unsafe {
                let z = view.load(j);
                let r = c_mul(phases[k as usize], z);
                view.store(j, r.0, r.1);
            }
        }
    }
}

pub(crate) fn reconstruct_f32_pub(m: &ScaledGaussianMatrix) -> [[C; 4]; 4] {
    reconstruct_f32(m)
}

/// Generic diagonal application: multiply amplitudes by the numeric phases.
pub fn apply_1q_diag_generic(sv: &mut StateVector, target: Qubit, octants: [u8; 2]) {
    let n = sv.num_qubits();
    let bit = 1u64 << bit_position(n, target);
    let phases: Vec<C> = octants
        .iter()
        .map(|&k| {
            let v = crate::circuit::OctantPhase::new(k).value();
            (v.re as f32, v.im as f32)
        })
        .collect();
    let amps = sv.amps_mut();
    for j in 0..(1u64 << n) {
        let sel = usize::from(j & bit != 0);
        let p = phases[sel];
        let j2 = (j as usize) * 2;
        let z = (amps[j2], amps[j2 + 1]);
        let r = c_mul(p, z);
        amps[j2] = r.0;
        amps[j2 + 1] = r.1;
    }
}

pub fn apply_2q_diag_generic(sv: &mut StateVector, qa: Qubit, qb: Qubit, octants: [u8; 4]) {
    let n = sv.num_qubits();
    let ba = 1u64 << bit_position(n, qa);
    let bb = 1u64 << bit_position(n, qb);
    let phases: Vec<C> = octants
        .iter()
        .map(|&k| {
            let v = crate::circuit::OctantPhase::new(k).value();
            (v.re as f32, v.im as f32)
        })
        .collect();
    let amps = sv.amps_mut();
    for j in 0..(1u64 << n) {
        let sel = usize::from(j & ba != 0) * 2 + usize::from(j & bb != 0);
        let p = phases[sel];
        let j2 = (j as usize) * 2;
        let z = (amps[j2], amps[j2 + 1]);
        let r = c_mul(p, z);
        amps[j2] = r.0;
        amps[j2 + 1] = r.1;
    }
}

// ---------------------------------------------------------------------------
// Recursive cache-blocked transform.

/// Disjoint per-kind masks of one transform layer, in amplitude bit space.
#[derive(Clone, Copy, Debug)]
pub(crate) struct RtMasks {
    pub x: u64,
    pub y: u64,
    pub h: u64,
}

impl RtMasks {
    pub fn all(&self) -> u64 {
        self.x | self.y | self.h
    }

    pub fn kind_at(&self, bit: u32) -> GateKind {
        let b = 1u64 << bit;
        if self.x & b != 0 {
            GateKind::XHalf
        } else if self.y & b != 0 {
            GateKind::YHalf
        } else {
            debug_assert!(self.h & b != 0);
            GateKind::H
        }
    }

    pub fn clear(&mut self, bit: u32) {
        let b = !(1u64 << bit);
        self.x &= b;
        self.y &= b;
        self.h &= b;
    }
}

/// Take the (up to) two most significant remaining gates as one op.
pub(crate) fn take_top_op(masks: &mut RtMasks) -> PairedGateOp {
    let all = masks.all();
    debug_assert_ne!(all, 0);
    let top = 63 - all.leading_zeros();
    let rest = all & !(1u64 << top);
    if rest != 0 {
        let second = 63 - rest.leading_zeros();
        let op = make_pair_op_bits(masks.kind_at(top), top, masks.kind_at(second), second)
            .expect("H/X/Y pairs always have exact products");
        masks.clear(top);
        masks.clear(second);
        op
    } else {
        let op = make_single_op_bit(masks.kind_at(top), top);
        masks.clear(top);
        op
    }
}

/// Serial recursive transform over a power-of-two region.
///
/// Gates on the region's most significant bit are applied first (paired with
/// the next most significant gate); the region is then split into the
/// smallest chunks that still contain the most significant remaining gate,
/// and each chunk is processed recursively, applying all its pending gates
/// while it is cache-resident. Every chunk contributes an identical scale
/// delta, which is returned once.
pub(crate) fn rt_serial(
    view: AmpsView,
    region_offset: u64,
    region_bits: u32,
    masks: RtMasks,
    lanes: bool,
    force_chunk: Option<u32>,
) -> ScaleDelta {
    let mut masks = masks;
    let mut delta = ScaleDelta::ZERO;
    loop {
        let all = masks.all();
        if all == 0 {
            return delta;
        }
        let top = 63 - all.leading_zeros();
        if top == region_bits - 1 {
            let op = take_top_op(&mut masks);
            let sets = op_set_count(&op, region_bits);
            sweep_op(view, region_offset, &op, 0..sets, lanes);
            delta += ScaleDelta::from_matrix(&op.matrix);
            continue;
        }

        let chunk_bits = match force_chunk {
            Some(k) => k.clamp(top + 1, region_bits - 1),
            None => top + 1,
        };
        let n_chunks = 1u64 << (region_bits - chunk_bits);
        let mut child: Option<ScaleDelta> = None;
        for c in 0..n_chunks {
            let d = rt_serial(
                view,
                region_offset + (c << chunk_bits),
                chunk_bits,
                masks,
                lanes,
                force_chunk,
            );
            match child {
                Some(prev) => debug_assert_eq!(prev, d, "chunk scale deltas must agree"),
                None => child = Some(d),
            }
        }
        return delta + child.unwrap_or(ScaleDelta::ZERO);
    }
}

/// Apply one transform layer to the whole state, single-threaded, updating
/// the global scale. `force_chunk` overrides the chunk size choice (debug).
pub fn recursive_transform(
    sv: &mut StateVector,
    x_mask: QubitMask,
    y_mask: QubitMask,
    h_mask: QubitMask,
    opts: &KernelOptions,
    force_chunk: Option<u32>,
) {
    debug_assert_eq!(x_mask.0 & y_mask.0, 0);
    debug_assert_eq!(x_mask.0 & h_mask.0, 0);
    debug_assert_eq!(y_mask.0 & h_mask.0, 0);
    let n = sv.num_qubits();
    let masks = RtMasks { x: x_mask.0, y: y_mask.0, h: h_mask.0 };
    let view = sv.view();
    let delta = rt_serial(view, 0, n, masks, opts.aligned_lanes, force_chunk);
    sv.scale.add_rt2(delta.rt2);
    sv.scale.add_i(delta.i);
}
