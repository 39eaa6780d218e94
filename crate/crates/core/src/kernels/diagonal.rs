//! Diagonal-cluster kernels: whole clusters of CZ and T gates (plus fused
//! low-qubit one-qubit ops) applied in one linear pass over the amplitudes.
//!
//! For each amplitude index j the combined phase is a single octant
//! `w^k, w = exp(i pi/4)`: T layers contribute `popcount(mask & j)` per
//! layer, and the CZ cluster contributes a sign that is folded in as
//! `k += 4`. Even octants are applied with negations and component swaps
//! only; odd octants use one component rotation plus a scalar multiply by
//! `1/sqrt(2)` (a global counter cannot carry a per-amplitude factor).

use std::ops::Range;

use crate::planner::{CzCluster, DiagonalPass, TLayer};
use crate::state::{AmpsView, StateVector};

use super::{dense, KernelOptions, ScaleDelta};

/// Reflected Gray code: `k ^ (k >> 1)`.
#[inline]
pub fn gray_code(k: u64) -> u64 {
    k ^ (k >> 1)
}

/// Combined T-phase octant at amplitude index j:
/// `sum over layers of popcount(mask & j), mod 8`.
#[inline]
pub fn t_phase_octant(t_layers: &[TLayer], j: u64) -> u8 {
    let mut total: u32 = 0;
    for layer in t_layers {
        total += (layer.mask.0 & j).count_ones();
    }
    (total & 7) as u8
}

/// Half-count of the CZ cluster at index j: every active gate is counted
/// twice, once from each endpoint qubit.
#[inline]
fn cz_half_count(cz: &CzCluster, j: u64) -> u32 {
    let mut bits = j;
    let mut count: u32 = 0;
    while bits != 0 {
        let b = bits.trailing_zeros();
        bits &= bits - 1;
        count += (cz.mask_for_bit(b) & j).count_ones();
    }
    count
}

/// True iff the cluster contributes a -1 phase at index j (odd number of
/// active CZ gates; the half-count counts each twice, so test bit 1).
#[inline]
pub fn cz_sign_negative(cz: &CzCluster, j: u64) -> bool {
    cz_half_count(cz, j) & 2 != 0
}

// Reflected Gray walk over the 8 indices of an aligned block, starting at
// the block base (low bits 000): visits low bits 0,1,3,2,6,7,5,4; entry k
// flips low bit WALK[k-1].
const GRAY_WALK: [u32; 7] = [0, 1, 0, 2, 0, 1, 0];

/// Sign mask for one aligned 8-amplitude block: bit r is set iff the CZ
/// cluster negates amplitude `8*block_idx + r`.
///
/// The sign state at the block base is computed from the block index alone;
/// within the block it is updated incrementally along a reflected Gray walk
/// (one parity instruction per step, since consecutive codewords differ in
/// one bit).
pub fn cz_signs_for_block(cz: &CzCluster, block_idx: u64) -> u8 {
    let base = block_idx * 8;
    let mut negate = (cz_half_count(cz, base) & 2) != 0;
    let mut signs: u8 = u8::from(negate);
    let mut j = base;
    for &bit in &GRAY_WALK {
        j ^= 1u64 << bit;
        // Toggling bit b changes the active-gate parity by
        // parity(mask_b & j); the mask never contains b itself.
        negate ^= (cz.mask_for_bit(bit) & j).count_ones() & 1 == 1;
        if negate {
            signs |= 1 << (j & 7);
        }
    }
    signs
}

/// Multiply one amplitude by `w^k`. Even k uses swaps and negations only;
/// odd k rotates by (1+i) and scales both components by `1/sqrt(2)`.
#[inline(always)]
fn apply_octant(re: f32, im: f32, k: u8) -> (f32, f32) {
    const R: f32 = std::f32::consts::FRAC_1_SQRT_2;
    match k {
        1 => ((re - im) * R, (re + im) * R),
        2 => (-im, re),
        3 => ((-re - im) * R, (re - im) * R),
        4 => (-re, -im),
        5 => ((im - re) * R, (-re - im) * R),
        6 => (im, -re),
        7 => ((re + im) * R, (im - re) * R),
        _ => (re, im),
    }
}

/// Apply the phase portion of a diagonal pass to the amplitudes in `range`
/// (multiples of 8, or the whole array for n < 3). Amplitudes whose combined
/// phase is +1 are not written back.
fn apply_phases(view: AmpsView, pass: &DiagonalPass, range: Range<u64>, gray: bool) {
    let have_cz = !pass.cz.is_empty();
    let have_t = !pass.t_layers.is_empty();
    if !have_cz && !have_t {
        return;
    }
    let start_block = range.start / 8;
    let end_block = range.end.div_ceil(8);
    for block in start_block..end_block {
        let sign_bits: u8 = if !have_cz {
            0
        } else if gray {
            cz_signs_for_block(&pass.cz, block)
        } else {
            let mut bits = 0u8;
            for r in 0..8u64 {
                let j = block * 8 + r;
                if j < range.end && cz_sign_negative(&pass.cz, j) {
                    bits |= 1 << r;
                }
            }
            bits
        };
        let base = block * 8;
        let top = (base + 8).min(range.end);
        for j in base..top {
            let r = (j - base) as u8;
            let mut k = if have_t { t_phase_octant(&pass.t_layers, j) } else { 0 };
            if sign_bits & (1 << r) != 0 {
                k = (k + 4) & 7;
            }
            if k != 0 {
                // SAFETY: j lies in this worker's exclusive range.
                unsafe {
                    let (re, im) = view.load(j);
                    let (re, im) = apply_octant(re, im, k);
                    view.store(j, re, im);
                }
            }
        }
    }
}

/// Apply a diagonal pass over one worker's amplitude range: per cache-sized
/// chunk, apply the aggregated phases, then run each fused low-qubit op
/// while the chunk is resident.
///
/// `range` must be aligned to `1 << chunk_bits` amplitudes (the full array
/// when n is small); every fused op acts strictly below `chunk_bits`.
pub(crate) fn apply_diagonal_chunks(
    view: AmpsView,
    pass: &DiagonalPass,
    range: Range<u64>,
    chunk_bits: u32,
    opts: &KernelOptions,
) {
    let chunk = 1u64 << chunk_bits;
    debug_assert_eq!(range.start % chunk, 0);
    let mut offset = range.start;
    while offset < range.end {
        let top = (offset + chunk).min(range.end);
        apply_phases(view, pass, offset..top, opts.gray_codes);
        for op in &pass.fused_low {
            debug_assert!(op.targets.max_bit() < chunk_bits);
            let sets = dense::op_set_count(op, chunk_bits);
            dense::sweep_op(view, offset, op, 0..sets, opts.aligned_lanes);
        }
        offset = top;
    }
}

/// Scale contribution of a diagonal pass (from its fused ops only; the phase
/// kernel is scale-neutral). Applied once per pass, not per chunk.
pub(crate) fn diagonal_pass_scale(pass: &DiagonalPass) -> ScaleDelta {
    let mut delta = ScaleDelta::ZERO;
    for op in &pass.fused_low {
        delta += ScaleDelta::from_matrix(&op.matrix);
    }
    delta
}

/// Apply a whole diagonal pass single-threaded, updating the global scale.
pub fn apply_diagonal_pass(
    sv: &mut StateVector,
    pass: &DiagonalPass,
    boundary: u32,
    opts: &KernelOptions,
) {
    let n = sv.num_qubits();
    let chunk_bits = boundary.max(3).min(n);
    let len = sv.len();
    let view = sv.view();
    apply_diagonal_chunks(view, pass, 0..len, chunk_bits, opts);
    let delta = diagonal_pass_scale(pass);
    sv.scale.add_rt2(delta.rt2);
    sv.scale.add_i(delta.i);
}
