//! Brute-force reference simulator.
//!
//! 64-bit complex amplitudes, one gate at a time in input order, full numeric
//! matrices, no clustering, no scale extraction, no bit tricks beyond testing
//! index bits. Deliberately shares no kernel or gate-arithmetic code with the
//! optimized engine so the two have independent failure modes.

use num_complex::Complex64;
use thiserror::Error;

use crate::circuit::{bit_position, Circuit, Gate, GateKind, GateQubits};
use crate::state::StateVector;

/// Memory guard: 2^24 amplitudes * 16 bytes = 256 MiB.
pub const ORACLE_MAX_QUBITS: u32 = 24;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("oracle supports at most {ORACLE_MAX_QUBITS} qubits, got {0}")]
    TooManyQubits(u32),
    #[error("circuit has no qubits")]
    NoQubits,
    #[error("state dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Numeric 2x2 matrix of a one-qubit gate kind.
fn matrix_1q(kind: GateKind) -> [[Complex64; 2]; 2] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    match kind {
        GateKind::H => [[c(r, 0.0), c(r, 0.0)], [c(r, 0.0), c(-r, 0.0)]],
        GateKind::T => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(r, r)]],
        GateKind::P => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 1.0)]],
        GateKind::Z => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
        GateKind::Not => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
        GateKind::XHalf => [
            [c(0.5, 0.5), c(0.5, -0.5)],
            [c(0.5, -0.5), c(0.5, 0.5)],
        ],
        GateKind::YHalf => [
            [c(0.5, 0.5), c(0.5, 0.5)],
            [c(-0.5, -0.5), c(0.5, 0.5)],
        ],
        _ => unreachable!("two-qubit kind in matrix_1q"),
    }
}

/// Numeric 4x4 matrix of a two-qubit gate kind, basis (first qubit, second
/// qubit); for `cnot` the first qubit is the control.
fn matrix_2q(kind: GateKind) -> [[Complex64; 4]; 4] {
    let o = c(1.0, 0.0);
    let z = c(0.0, 0.0);
    match kind {
        GateKind::Cz => [
            [o, z, z, z],
            [z, o, z, z],
            [z, z, o, z],
            [z, z, z, -o],
        ],
        GateKind::Cnot => [
            [o, z, z, z],
            [z, o, z, z],
            [z, z, z, o],
            [z, z, o, z],
        ],
        _ => unreachable!("one-qubit kind in matrix_2q"),
    }
}

fn apply_gate(state: &mut [Complex64], n: u32, gate: &Gate) {
    match gate.qubits {
        GateQubits::One(q) => {
            let m = matrix_1q(gate.kind);
            let bit = 1u64 << bit_position(n, q);
            for j in 0..state.len() as u64 {
                if j & bit == 0 {
                    let a = state[j as usize];
                    let b = state[(j | bit) as usize];
                    state[j as usize] = m[0][0] * a + m[0][1] * b;
                    state[(j | bit) as usize] = m[1][0] * a + m[1][1] * b;
                }
            }
        }
        GateQubits::Two(qa, qb) => {
            let m = matrix_2q(gate.kind);
            let ba = 1u64 << bit_position(n, qa);
            let bb = 1u64 << bit_position(n, qb);
            for j in 0..state.len() as u64 {
                if j & ba == 0 && j & bb == 0 {
                    let idx = [j, j | bb, j | ba, j | ba | bb];
                    let v: Vec<Complex64> = idx.iter().map(|&i| state[i as usize]).collect();
                    for (r, &i) in idx.iter().enumerate() {
                        state[i as usize] =
                            m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2] + m[r][3] * v[3];
                    }
                }
            }
        }
    }
}

/// Run the circuit on `|0...0>` with gates applied strictly in input order.
pub fn oracle_run(circuit: &Circuit) -> Result<Vec<Complex64>, OracleError> {
    oracle_run_from(circuit, None)
}

/// As [`oracle_run`] but starting from a caller-supplied state.
pub fn oracle_run_from(
    circuit: &Circuit,
    initial: Option<Vec<Complex64>>,
) -> Result<Vec<Complex64>, OracleError> {
    let n = circuit.num_qubits;
    if n == 0 {
        return Err(OracleError::NoQubits);
    }
    if n > ORACLE_MAX_QUBITS {
        return Err(OracleError::TooManyQubits(n));
    }
    let dim = 1usize << n;
    let mut state = match initial {
        Some(s) => {
            if s.len() != dim {
                return Err(OracleError::DimensionMismatch(s.len(), dim));
            }
            s
        }
        None => {
            let mut s = vec![c(0.0, 0.0); dim];
            s[0] = c(1.0, 0.0);
            s
        }
    };
    for gate in &circuit.gates {
        apply_gate(&mut state, n, gate);
    }
    Ok(state)
}

/// Result of comparing two states amplitude by amplitude.
#[derive(Clone, Copy, Debug)]
pub struct StateComparison {
    pub max_delta: f64,
    pub worst_index: u64,
}

impl StateComparison {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_delta <= tol
    }
}

/// Max per-amplitude |delta| between a reference state and the engine state
/// (engine amplitudes evaluated via `read_amplitude`, scale folded in; global
/// phase is tracked exactly on both sides, so no phase-modding).
pub fn compare_states(
    reference: &[Complex64],
    engine: &StateVector,
) -> Result<StateComparison, OracleError> {
    if reference.len() as u64 != engine.len() {
        return Err(OracleError::DimensionMismatch(
            reference.len(),
            engine.len() as usize,
        ));
    }
    let mut max_delta = 0f64;
    let mut worst_index = 0u64;
    for (j, want) in reference.iter().enumerate() {
        let got = engine.read_amplitude(j as u64).expect("index in range");
        let d = (got - want).norm();
        if d > max_delta {
            max_delta = d;
            worst_index = j as u64;
        }
    }
    Ok(StateComparison { max_delta, worst_index })
}

/// Max |delta| between two dense 64-bit states.
pub fn compare_dense(a: &[Complex64], b: &[Complex64]) -> Result<StateComparison, OracleError> {
    if a.len() != b.len() {
        return Err(OracleError::DimensionMismatch(a.len(), b.len()));
    }
    let mut max_delta = 0f64;
    let mut worst_index = 0u64;
    for (j, (x, y)) in a.iter().zip(b.iter()).enumerate() {
        let d = (x - y).norm();
        if d > max_delta {
            max_delta = d;
            worst_index = j as u64;
        }
    }
    Ok(StateComparison { max_delta, worst_index })
}
