//! State-vector kernels: bitmask-driven diagonal passes and multiply-free
//! dense (non-diagonal) gate application.

pub mod dense;
pub mod diagonal;

/// Scale contribution of applied kernels, folded into the global
/// [`crate::state::ScaleState`] once per pass by the executor.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ScaleDelta {
    pub rt2: u32,
    pub i: u8,
}

impl ScaleDelta {
    pub const ZERO: ScaleDelta = ScaleDelta { rt2: 0, i: 0 };

    pub fn from_matrix(m: &crate::circuit::ScaledGaussianMatrix) -> ScaleDelta {
        ScaleDelta { rt2: m.rt2_exp, i: m.i_exp }
    }
}

impl std::ops::Add for ScaleDelta {
    type Output = ScaleDelta;

    fn add(self, rhs: ScaleDelta) -> ScaleDelta {
        ScaleDelta { rt2: self.rt2 + rhs.rt2, i: (self.i + rhs.i) & 3 }
    }
}

impl std::ops::AddAssign for ScaleDelta {
    fn add_assign(&mut self, rhs: ScaleDelta) {
        *self = *self + rhs;
    }
}

/// Kernel-level switches (ablation).
#[derive(Clone, Copy, Debug)]
pub struct KernelOptions {
    /// Process eligible sweeps in 4-amplitude aligned lanes.
    pub aligned_lanes: bool,
    /// Evaluate CZ sign state incrementally with Gray codes inside each
    /// 8-amplitude block (otherwise per index from scratch).
    pub gray_codes: bool,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions { aligned_lanes: true, gray_codes: true }
    }
}
