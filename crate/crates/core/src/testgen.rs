//! Deterministic random-circuit generation over the full gate set.
//! Support utilities for tests, verification and benchmarks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, Gate, GateKind, Qubit};

const KINDS: [GateKind; 9] = [
    GateKind::H,
    GateKind::T,
    GateKind::Z,
    GateKind::P,
    GateKind::Not,
    GateKind::XHalf,
    GateKind::YHalf,
    GateKind::Cz,
    GateKind::Cnot,
];

/// A random circuit of `depth` cycles on `n` qubits, drawing uniformly from
/// the full gate set (including CNOT, P and Z). Each cycle places gates on
/// randomly chosen disjoint qubits. Deterministic for a given seed.
pub fn random_circuit(n: u32, depth: u32, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gates = Vec::new();
    for cycle in 0..depth {
        let mut free: Vec<Qubit> = (0..n as Qubit).collect();
        // Fisher-Yates shuffle so gate targets are uniform.
        for i in (1..free.len()).rev() {
            let j = rng.random_range(0..=i);
            free.swap(i, j);
        }
        let placements = rng.random_range(1..=(n as usize).div_ceil(2));
        for _ in 0..placements {
            if free.is_empty() {
                break;
            }
            let kind = KINDS[rng.random_range(0..KINDS.len())];
            if kind.num_qubits() == 2 {
                if free.len() < 2 {
                    continue;
                }
                let a = free.pop().unwrap();
                let b = free.pop().unwrap();
                gates.push(Gate::two(kind, a, b, cycle));
            } else {
                let q = free.pop().unwrap();
                gates.push(Gate::one(kind, q, cycle));
            }
        }
    }
    Circuit { num_qubits: n, gates }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_circuits_are_valid_and_deterministic() {
        for seed in 0..10 {
            let c = random_circuit(6, 25, seed);
            assert!(c.validate().is_ok(), "seed {seed}");
            assert_eq!(c.gates, random_circuit(6, 25, seed).gates);
            assert!(!c.gates.is_empty());
        }
    }
}
