//! State-vector storage and the carried global scale.
//!
//! Amplitudes are interleaved 32-bit (re, im) pairs in a 64-byte-aligned
//! buffer. The physical state equals the stored array times
//! `(1/sqrt(2))^p * i^s`; the integer counters (`p`, `s`) let kernels avoid
//! per-amplitude floating-point multiplies and are flushed back into the
//! array once `p` grows past a threshold.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuit::OctantPhase;

/// Largest supported qubit count (indices fit a u64 with headroom).
pub const MAX_QUBITS: u32 = 36;

/// Flush `p` during execution once it exceeds 100, i.e. when
/// `p >= DEFAULT_FLUSH_THRESHOLD`.
pub const DEFAULT_FLUSH_THRESHOLD: u32 = 101;

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("qubit count {0} outside supported range 1..={MAX_QUBITS}")]
    BadQubitCount(u32),
    #[error("failed to allocate state vector for {0} qubits")]
    Allocation(u32),
    #[error("amplitude index {index} out of range for {n} qubits")]
    IndexOutOfRange { index: u64, n: u32 },
    #[error("norm {norm} too far from 1 for measurement sampling")]
    NormCheck { norm: f64 },
}

/// Global scale: physical state = stored * (1/sqrt(2))^p * i^s.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ScaleState {
    pub p: u32,
    pub s: u8,
}

impl ScaleState {
    pub fn add_rt2(&mut self, e: u32) {
        self.p += e;
    }

    pub fn add_i(&mut self, s: u8) {
        self.s = (self.s + s) & 3;
    }

    /// `(1/sqrt(2))^p * i^s` evaluated in 64-bit precision.
    pub fn factor(&self) -> Complex64 {
        let half_powers = (self.p / 2) as i32;
        let mut f = 2f64.powi(-half_powers);
        if self.p % 2 == 1 {
            f *= std::f64::consts::FRAC_1_SQRT_2;
        }
        OctantPhase::new(self.s * 2).value() * f
    }
}

// One L1 cache line: 8 complex amplitudes. Backing the buffer with these
// keeps the float data 64-byte aligned for the lane kernels.
#[derive(Clone, Copy)]
#[repr(C, align(64))]
struct CacheLine([f32; 16]);

const FLOATS_PER_LINE: usize = 16;

/// 2^n complex amplitudes plus the global scale.
#[derive(Clone)]
pub struct StateVector {
    num_qubits: u32,
    lines: Vec<CacheLine>,
    pub scale: ScaleState,
}

impl StateVector {
    fn alloc(n: u32) -> Result<StateVector, StateError> {
        if n == 0 || n > MAX_QUBITS {
            return Err(StateError::BadQubitCount(n));
        }
        let floats = 1usize << (n + 1);
        let n_lines = floats.div_ceil(FLOATS_PER_LINE);
        let mut lines: Vec<CacheLine> = Vec::new();
        lines
            .try_reserve_exact(n_lines)
            .map_err(|_| StateError::Allocation(n))?;
        lines.resize(n_lines, CacheLine([0.0; FLOATS_PER_LINE]));
        Ok(StateVector { num_qubits: n, lines, scale: ScaleState::default() })
    }

    /// `|0...0>`: amplitude 0 is 1, everything else 0.
    pub fn init_basis(n: u32) -> Result<StateVector, StateError> {
        let mut sv = Self::alloc(n)?;
        sv.amps_mut()[0] = 1.0;
        Ok(sv)
    }

    /// Full superposition `H^(x)n |0...0>`: all stored amplitudes 1, p = n.
    pub fn init_superposition(n: u32) -> Result<StateVector, StateError> {
        let mask = if n == 64 { !0 } else { (1u64 << n) - 1 };
        Self::init_superposition_masked(n, mask)
    }

    /// Superposition over the amplitude-index bits in `h_bits` (a leading
    /// layer of H gates on those qubits): stored amplitude j is 1 when all
    /// bits of j outside `h_bits` are 0; p = popcount(h_bits).
    pub fn init_superposition_masked(n: u32, h_bits: u64) -> Result<StateVector, StateError> {
        let mut sv = Self::alloc(n)?;
        let amps = sv.amps_mut();
        // Iterate subsets of h_bits directly: j = (j - h_bits) & h_bits.
        let mut j: u64 = 0;
        loop {
            amps[(j as usize) * 2] = 1.0;
            if j == h_bits {
                break;
            }
            j = (j.wrapping_sub(h_bits)) & h_bits;
        }
        sv.scale.p = h_bits.count_ones();
        Ok(sv)
    }

    pub fn num_qubits(&self) -> u32 {
        self.num_qubits
    }

    /// Number of amplitudes, `2^n`.
    pub fn len(&self) -> u64 {
        1u64 << self.num_qubits
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Interleaved (re, im) pairs; `amps()[2j]` is Re(alpha_j).
    pub fn amps(&self) -> &[f32] {
        let floats = 1usize << (self.num_qubits + 1);
        // SAFETY: lines is a live allocation of at least `floats` f32s.
        unsafe { std::slice::from_raw_parts(self.lines.as_ptr().cast::<f32>(), floats) }
    }

    pub fn amps_mut(&mut self) -> &mut [f32] {
        let floats = 1usize << (self.num_qubits + 1);
        // SAFETY: as above, and we hold &mut self.
        unsafe { std::slice::from_raw_parts_mut(self.lines.as_mut_ptr().cast::<f32>(), floats) }
    }

    /// Raw view for worker threads operating on disjoint index sets.
    pub(crate) fn view(&mut self) -> AmpsView {
        AmpsView { ptr: self.lines.as_mut_ptr().cast::<f32>(), num_amps: self.len() }
    }

    /// `alpha_j` with the global scale folded in, in 64-bit components.
    pub fn read_amplitude(&self, j: u64) -> Result<Complex64, StateError> {
        if j >= self.len() {
            return Err(StateError::IndexOutOfRange { index: j, n: self.num_qubits });
        }
        let amps = self.amps();
        let raw = Complex64::new(
            f64::from(amps[(j as usize) * 2]),
            f64::from(amps[(j as usize) * 2 + 1]),
        );
        Ok(raw * self.scale.factor())
    }

    /// Multiply the stored array by `(1/sqrt(2))^p * i^s` (computed in 64-bit
    /// precision, then rounded) and reset the counters, if `p >= threshold`.
    /// Returns whether a flush happened.
    pub fn flush_scale(&mut self, threshold: u32) -> bool {
        if self.scale.p < threshold {
            return false;
        }
        self.force_flush();
        true
    }

    /// Unconditional flush of both counters into the amplitudes.
    pub fn force_flush(&mut self) {
        let p = self.scale.p;
        let s = self.scale.s;
        let half_powers = (p / 2) as i32;
        let mut factor = 2f64.powi(-half_powers);
        if p % 2 == 1 {
            factor *= std::f64::consts::FRAC_1_SQRT_2;
        }
        for pair in self.amps_mut().chunks_exact_mut(2) {
            let re = f64::from(pair[0]) * factor;
            let im = f64::from(pair[1]) * factor;
            // i^s rotation is exact: swaps and sign flips only.
            let (re, im) = match s {
                0 => (re, im),
                1 => (-im, re),
                2 => (-re, -im),
                _ => (im, -re),
            };
            pair[0] = re as f32;
            pair[1] = im as f32;
        }
        self.scale = ScaleState::default();
    }

    /// Physical squared norm `(1/sqrt(2))^(2p) * sum(re^2 + im^2)`,
    /// accumulated in 64-bit precision with a fixed-shape pairwise tree
    /// reduction. Deterministic for fixed input regardless of worker count.
    pub fn norm(&self) -> f64 {
        let sum = sum_squares_tree(self.amps());
        sum * 2f64.powi(-(self.scale.p as i32))
    }

    /// Squared norm accumulated with an error-free two-value (Neumaier)
    /// running sum. Used by accuracy checks on adversarial inputs.
    pub fn norm_compensated(&self) -> f64 {
        sum_squares_compensated(self.amps()) * 2f64.powi(-(self.scale.p as i32))
    }

    /// First non-finite amplitude, if any (pass-boundary debug check).
    pub fn find_non_finite(&self) -> Option<u64> {
        self.amps()
            .iter()
            .position(|v| !v.is_finite())
            .map(|pos| (pos / 2) as u64)
    }

    /// Draw `shots` i.i.d. samples from |alpha_j|^2 (renormalized),
    /// deterministically for a given seed. Requires |norm - 1| <= 1e-3.
    pub fn sample_measurement(&self, seed: u64, shots: usize) -> Result<Vec<u64>, StateError> {
        let norm = self.norm();
        if (norm - 1.0).abs() > 1e-3 {
            return Err(StateError::NormCheck { norm });
        }
        if shots == 0 {
            return Ok(Vec::new());
        }
        let amps = self.amps();
        // Two-level search: cumulative block weights, then a scan inside the
        // chosen block. Unnormalized f32^2 weights are fine: we sample
        // uniformly in [0, total).
        let block_amps: usize = 1 << self.num_qubits.min(12).max(1);
        let n_blocks = (self.len() as usize).div_ceil(block_amps);
        let mut cum = Vec::with_capacity(n_blocks);
        let mut total = 0f64;
        for b in 0..n_blocks {
            let lo = b * block_amps * 2;
            let hi = ((b + 1) * block_amps * 2).min(amps.len());
            let mut s = 0f64;
            for pair in amps[lo..hi].chunks_exact(2) {
                s += f64::from(pair[0]) * f64::from(pair[0])
                    + f64::from(pair[1]) * f64::from(pair[1]);
            }
            total += s;
            cum.push(total);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(shots);
        for _ in 0..shots {
            let target = rng.random::<f64>() * total;
            let block = cum.partition_point(|&c| c <= target).min(n_blocks - 1);
            let mut acc = if block == 0 { 0.0 } else { cum[block - 1] };
            let start = (block * block_amps) as u64;
            let end = ((block + 1) * block_amps as usize) as u64;
            let end = end.min(self.len());
            let mut chosen = end - 1;
            for j in start..end {
                let re = f64::from(amps[(j as usize) * 2]);
                let im = f64::from(amps[(j as usize) * 2 + 1]);
                acc += re * re + im * im;
                if acc > target {
                    chosen = j;
                    break;
                }
            }
            out.push(chosen);
        }
        Ok(out)
    }
}

/// Format an amplitude index as an n-bit string, qubit 0 first.
pub fn format_bitstring(n: u32, j: u64) -> String {
    (0..n)
        .map(|q| {
            let bit = (j >> (n - 1 - q)) & 1;
            if bit == 1 { '1' } else { '0' }
        })
        .collect()
}

/// One amplitude dump line: `<bitstring> <re> <im>` with 9 significant
/// digits, scale folded in.
pub fn dump_line(sv: &StateVector, j: u64) -> Result<String, StateError> {
    let a = sv.read_amplitude(j)?;
    Ok(format!(
        "{} {:.8e} {:.8e}",
        format_bitstring(sv.num_qubits(), j),
        a.re,
        a.im
    ))
}

const TREE_BLOCK_AMPS: usize = 4096;

/// Fixed-shape pairwise (tree) reduction of sum(re^2 + im^2) over interleaved
/// pairs, with 64-bit accumulation inside 4096-amplitude leaf blocks.
fn sum_squares_tree(amps: &[f32]) -> f64 {
    let block_floats = TREE_BLOCK_AMPS * 2;
    if amps.len() <= block_floats {
        let mut s = 0f64;
        for v in amps {
            s += f64::from(*v) * f64::from(*v);
        }
        return s;
    }
    let n_blocks = amps.len().div_ceil(block_floats);
    let mid = (n_blocks / 2) * block_floats;
    sum_squares_tree(&amps[..mid]) + sum_squares_tree(&amps[mid..])
}

/// Error-free two-value accumulation (Neumaier variant of Kahan summation).
fn sum_squares_compensated(amps: &[f32]) -> f64 {
    let mut sum = 0f64;
    let mut comp = 0f64;
    for v in amps {
        let x = f64::from(*v) * f64::from(*v);
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Raw pointer view of the amplitude array for worker threads.
///
/// Safety contract: every concurrent user must touch a disjoint set of
/// amplitude indices. All accesses go through raw pointers (no &mut aliasing).
#[derive(Clone, Copy)]
pub(crate) struct AmpsView {
    ptr: *mut f32,
    num_amps: u64,
}

unsafe impl Send for AmpsView {}
unsafe impl Sync for AmpsView {}

impl AmpsView {
    /// # Safety
    /// `j < num_amps` and no concurrent writer of amplitude `j`.
    #[inline]
    pub unsafe fn load(&self, j: u64) -> (f32, f32) {
        debug_assert!(j < self.num_amps);
        let p = self.ptr.add((j as usize) * 2);
        (p.read(), p.add(1).read())
    }

    /// # Safety
    /// `j < num_amps` and exclusive access to amplitude `j`.
    #[inline]
    pub unsafe fn store(&self, j: u64, re: f32, im: f32) {
        debug_assert!(j < self.num_amps);
        let p = self.ptr.add((j as usize) * 2);
        p.write(re);
        p.add(1).write(im);
    }

    /// Load 4 consecutive amplitudes starting at `j` as 8 interleaved floats.
    ///
    /// # Safety
    /// `j + 4 <= num_amps` and exclusive access to those amplitudes.
    #[inline]
    pub unsafe fn load_lane(&self, j: u64) -> [f32; 8] {
        debug_assert!(j + 4 <= self.num_amps);
        let mut out = [0f32; 8];
        std::ptr::copy_nonoverlapping(self.ptr.add((j as usize) * 2), out.as_mut_ptr(), 8);
        out
    }

    /// # Safety
    /// As [`Self::load_lane`].
    #[inline]
    pub unsafe fn store_lane(&self, j: u64, lane: [f32; 8]) {
        debug_assert!(j + 4 <= self.num_amps);
        std::ptr::copy_nonoverlapping(lane.as_ptr(), self.ptr.add((j as usize) * 2), 8);
    }
}
