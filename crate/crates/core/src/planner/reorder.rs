//! Gate clustering by reordering.
//!
//! Scans the topologically ordered gate list and pulls gates of the seed's
//! kind forward whenever commutation allows, so that same-kind gates become
//! adjacent and can be simulated as one batch.

use crate::circuit::{Circuit, Gate, GateKind};

/// True iff the two gates can be swapped without changing circuit semantics:
/// they act on disjoint qubits, or both are diagonal.
pub fn commutes(a: &Gate, b: &Gate) -> bool {
    !a.shares_qubit(b) || (a.kind.is_diagonal() && b.kind.is_diagonal())
}

/// A maximal reordered run of same-kind gates.
#[derive(Clone, Debug)]
pub struct Cluster {
    pub kind: GateKind,
    pub gates: Vec<Gate>,
}

/// Cluster gates of a kind by reordering. Every gate lands in exactly one
/// cluster (single-gate clusters are allowed), and the concatenation of the
/// clusters in order is a valid topological order with identical semantics.
///
/// For each unclustered seed gate, the scan designates every qubit as
/// unobstructed (initially) or obstructed, then walks the remaining gates:
///
///   1. a gate of the seed's kind with all qubits unobstructed is pulled
///      into the cluster; with any qubit obstructed, all of its qubits are
///      marked obstructed (deliberately pessimistic, as published);
///   2. a different-kind gate that same-kind gates can always be reordered
///      past (both kinds diagonal) changes no designations;
///   3. any other gate marks all of its qubits obstructed, because a
///      same-kind gate sharing one of those qubits could not slide past it.
///
/// The scan stops when every qubit is obstructed or the list is exhausted.
pub fn cluster_by_reordering(circuit: &Circuit) -> Vec<Cluster> {
    let n = circuit.num_qubits;
    let all_qubits: u64 = if n >= 64 { !0 } else { (1u64 << n) - 1 };
    let mut rest: Vec<Gate> = circuit.gates.clone();
    let mut clusters: Vec<Cluster> = Vec::new();

    while !rest.is_empty() {
        let seed = rest.remove(0);
        let kind = seed.kind;
        let seed_diag = kind.is_diagonal();
        let mut gates = vec![seed];
        let mut obstructed: u64 = 0;

        let mut i = 0;
        while i < rest.len() && obstructed != all_qubits {
            let g = rest[i];
            if g.kind == kind {
                if g.qubit_index_mask() & obstructed == 0 {
                    gates.push(rest.remove(i));
                    continue;
                }
                obstructed |= g.qubit_index_mask();
            } else if !(seed_diag && g.kind.is_diagonal()) {
                obstructed |= g.qubit_index_mask();
            }
            i += 1;
        }
        clusters.push(Cluster { kind, gates });
    }
    clusters
}

/// Flatten clusters back into a gate list (the reordered circuit).
pub fn flatten(clusters: &[Cluster]) -> Vec<Gate> {
    clusters
        .iter()
        .flat_map(|c| c.gates.iter().copied())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::GateKind::*;
    use crate::circuit::Qubit;

    fn shape(clusters: &[Cluster]) -> Vec<(GateKind, usize)> {
        clusters.iter().map(|c| (c.kind, c.gates.len())).collect()
    }

    #[test]
    fn commutes_cases() {
        let cz = Gate::two(Cz, 0, 1, 0);
        let t1 = Gate::one(T, 1, 1);
        assert!(commutes(&cz, &t1), "diagonal gates always commute");

        let h0 = Gate::one(H, 0, 0);
        let t_other = Gate::one(T, 1, 0);
        assert!(commutes(&h0, &t_other), "disjoint qubits commute");

        let t0 = Gate::one(T, 0, 0);
        assert!(!commutes(&h0, &t0), "H and T on one qubit do not commute");
    }

    #[test]
    fn clusters_reference_circuit() {
        // The depth 1+4+1 reordering example: expected clusters are
        // H x4, CZ x2, T x4, X1/2 x3, Y1/2 x3, H x4.
        let c = Circuit::parse(concat!(
            "4\n",
            "0 h 0\n0 h 1\n0 h 2\n0 h 3\n",
            "1 cz 0 1\n1 t 2\n",
            "2 t 0\n2 cz 2 3\n",
            "3 x_1_2 0\n3 t 1\n3 x_1_2 2\n3 t 3\n",
            "4 x_1_2 1\n4 y_1_2 2\n",
            "5 y_1_2 1\n5 y_1_2 3\n",
            "6 h 0\n6 h 1\n6 h 2\n6 h 3\n",
        ))
        .unwrap();
        let clusters = cluster_by_reordering(&c);
        assert_eq!(
            shape(&clusters),
            vec![(H, 4), (Cz, 2), (T, 4), (XHalf, 3), (YHalf, 3), (H, 4)]
        );
    }

    #[test]
    fn interleaved_diagonals_form_one_cluster_per_kind() {
        let c = Circuit::parse("3\n0 t 0\n0 cz 1 2\n1 t 1\n1 cz 0 1\n2 t 2\n3 cz 0 2").unwrap();
        let clusters = cluster_by_reordering(&c);
        assert_eq!(shape(&clusters), vec![(T, 3), (Cz, 3)]);
    }

    #[test]
    fn obstruction_blocks_merging() {
        // H(0), T(0), H(0): the T on the shared qubit obstructs it, so the
        // two H gates cannot merge.
        let c = Circuit::parse("1\n0 h 0\n1 t 0\n2 h 0").unwrap();
        let clusters = cluster_by_reordering(&c);
        assert_eq!(shape(&clusters), vec![(H, 1), (T, 1), (H, 1)]);
    }

    #[test]
    fn no_pull_across_blocking_gate_on_other_qubit() {
        // Seed T(0); H(1) blocks qubit 1, so T(1) must not be pulled past it.
        let c = Circuit::parse("2\n0 t 0\n1 h 1\n2 t 1").unwrap();
        let clusters = cluster_by_reordering(&c);
        assert_eq!(shape(&clusters), vec![(T, 1), (H, 1), (T, 1)]);
    }

    fn assert_valid_reorder(original: &Circuit) {
        let clusters = cluster_by_reordering(original);
        let reordered = flatten(&clusters);
        assert_eq!(reordered.len(), original.gates.len());

        // Multiset equality.
        let mut a = original.gates.clone();
        let mut b = reordered.clone();
        let key = |g: &Gate| format!("{g}");
        a.sort_by_key(key);
        b.sort_by_key(key);
        assert_eq!(a, b);

        // Replay the permutation: any pair whose relative order flipped must
        // commute, which also implies the result stays topologically valid.
        let mut pos_of = std::collections::HashMap::new();
        // Tag duplicate gates by occurrence index so the permutation is
        // well-defined.
        let mut seen = std::collections::HashMap::new();
        for (i, g) in reordered.iter().enumerate() {
            let occ = seen.entry(format!("{g}")).or_insert(0usize);
            pos_of.insert((format!("{g}"), *occ), i);
            *occ += 1;
        }
        let mut seen2 = std::collections::HashMap::new();
        let orig_pos: Vec<usize> = original
            .gates
            .iter()
            .map(|g| {
                let occ = seen2.entry(format!("{g}")).or_insert(0usize);
                let p = pos_of[&(format!("{g}"), *occ)];
                *occ += 1;
                p
            })
            .collect();
        for i in 0..original.gates.len() {
            for j in (i + 1)..original.gates.len() {
                if orig_pos[i] > orig_pos[j] {
                    assert!(
                        commutes(&original.gates[i], &original.gates[j]),
                        "swapped non-commuting gates {} and {}",
                        original.gates[i],
                        original.gates[j]
                    );
                }
            }
        }
    }

    #[test]
    fn reordering_never_swaps_noncommuting_gates() {
        // Deterministic pseudo-random circuits over the full gate set.
        let kinds = [H, T, Z, P, Not, XHalf, YHalf, Cz, Cnot];
        let mut s: u64 = 0xDEADBEEF;
        let mut next = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            s
        };
        for case in 0..40 {
            let n = 2 + (next() % 5) as u32;
            let mut gates = Vec::new();
            for cycle in 0..(10 + next() % 30) as u32 {
                let kind = kinds[(next() % 9) as usize];
                let a = (next() % u64::from(n)) as Qubit;
                if kind.num_qubits() == 2 {
                    let mut b = (next() % u64::from(n)) as Qubit;
                    if b == a {
                        b = ((u32::from(b) + 1) % n) as Qubit;
                    }
                    gates.push(Gate::two(kind, a, b, cycle));
                } else {
                    gates.push(Gate::one(kind, a, cycle));
                }
            }
            let c = Circuit { num_qubits: n, gates };
            assert!(c.validate().is_ok(), "case {case}");
            assert_valid_reorder(&c);
        }
    }
}
