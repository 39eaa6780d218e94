//! High-performance Schrodinger state-vector simulation of quantum circuits
//! over the gate set {H, T, X1/2, Y1/2, Z, P, NOT, CZ, CNOT}.
//!
//! The engine clusters gates of a kind by commutation-respecting reordering,
//! simulates whole diagonal clusters in one bitmask-driven memory pass,
//! applies non-diagonal one-qubit gates in multiply-free pairs, and uses a
//! recursive cache-blocked transform for gates on the most significant
//! qubits. A brute-force 64-bit reference simulator ([`oracle`]) validates
//! every optimized path.
//!
//! Amplitudes are stored as interleaved 32-bit (re, im) pairs; global
//! `1/sqrt(2)` and `i` factors are carried in integer counters so that most
//! kernels run without floating-point multiplication.

pub mod circuit;
pub mod exec;
pub mod kernels;
pub mod oracle;
pub mod planner;
pub mod state;
pub mod testgen;
