//! Property tests over randomized circuits and clusters.

use proptest::prelude::*;

use stv_core::circuit::{Circuit, Gate, GateKind, Qubit};
use stv_core::kernels::diagonal::{cz_sign_negative, cz_signs_for_block, t_phase_octant};
use stv_core::planner::{
    cluster_by_reordering, commutes, encode_cz_masks, encode_t_layers, flatten,
};

fn arb_kind() -> impl Strategy<Value = GateKind> {
    prop_oneof![
        Just(GateKind::H),
        Just(GateKind::T),
        Just(GateKind::Z),
        Just(GateKind::P),
        Just(GateKind::Not),
        Just(GateKind::XHalf),
        Just(GateKind::YHalf),
        Just(GateKind::Cz),
        Just(GateKind::Cnot),
    ]
}

prop_compose! {
    fn arb_circuit(max_qubits: u32, max_depth: u32)
        (n in 1..=max_qubits)
        (n in Just(n), specs in prop::collection::vec((arb_kind(), 0u32..64, 0u32..64), 0..max_depth as usize))
        -> Circuit
    {
        let mut gates = Vec::new();
        for (cycle, (kind, qa, qb)) in specs.into_iter().enumerate() {
            let a = (qa % n) as Qubit;
            if kind.num_qubits() == 2 {
                if n < 2 { continue; }
                let mut b = (qb % n) as Qubit;
                if b == a { b = ((u32::from(b) + 1) % n) as Qubit; }
                gates.push(Gate::two(kind, a, b, cycle as u32));
            } else {
                gates.push(Gate::one(kind, a, cycle as u32));
            }
        }
        Circuit { num_qubits: n, gates }
    }
}

proptest! {
    #[test]
    fn parse_of_serialize_roundtrips(c in arb_circuit(8, 40)) {
        prop_assert!(c.validate().is_ok());
        let reparsed = Circuit::parse(&c.to_text()).unwrap();
        prop_assert_eq!(reparsed, c);
    }

    #[test]
    fn reordering_is_topologically_valid(c in arb_circuit(6, 30)) {
        let clusters = cluster_by_reordering(&c);
        let reordered = flatten(&clusters);
        prop_assert_eq!(reordered.len(), c.gates.len());

        // Pairwise check over shared-qubit gates: original relative order of
        // non-commuting gates must be preserved.
        let find_positions = |gates: &[Gate]| {
            let mut seen = std::collections::HashMap::new();
            gates.iter().map(|g| {
                let occ = seen.entry(format!("{g}")).or_insert(0usize);
                let key = (format!("{g}"), *occ);
                *occ += 1;
                key
            }).collect::<Vec<_>>()
        };
        let orig_keys = find_positions(&c.gates);
        let reord_keys = find_positions(&reordered);
        let pos: std::collections::HashMap<_, _> =
            reord_keys.iter().cloned().zip(0usize..).collect();
        for i in 0..c.gates.len() {
            for j in (i + 1)..c.gates.len() {
                if pos[&orig_keys[i]] > pos[&orig_keys[j]] {
                    prop_assert!(
                        commutes(&c.gates[i], &c.gates[j]),
                        "swapped non-commuting {} and {}", c.gates[i], c.gates[j]
                    );
                }
            }
        }
    }

    #[test]
    fn block_signs_equal_naive(
        n in 3u32..=12,
        pairs in prop::collection::vec((0u32..64, 0u32..64), 0..14),
        probe in 0u64..1 << 12,
    ) {
        let mut used = std::collections::HashSet::new();
        let mut gates = Vec::new();
        for (a, b) in pairs {
            let a = (a % n) as Qubit;
            let mut b = (b % n) as Qubit;
            if a == b { b = ((u32::from(b) + 1) % n) as Qubit; }
            if used.insert((a.min(b), a.max(b))) {
                gates.push(Gate::two(GateKind::Cz, a, b, 0));
            }
        }
        let cz = encode_cz_masks(n, &gates).unwrap();
        let block = probe % (1u64 << n) / 8;
        let fast = cz_signs_for_block(&cz, block);
        for r in 0..8u64 {
            let j = block * 8 + r;
            prop_assert_eq!(fast >> r & 1 == 1, cz_sign_negative(&cz, j));
        }
    }

    #[test]
    fn t_layer_union_preserves_multiset(
        n in 1u32..=10,
        qubits in prop::collection::vec(0u32..64, 0..24),
    ) {
        let gates: Vec<Gate> = qubits.iter()
            .map(|&q| Gate::one(GateKind::T, (q % n) as Qubit, 0))
            .collect();
        let layers = encode_t_layers(n, &gates);
        // per-qubit multiplicity is preserved
        for q in 0..n {
            let bit = n - 1 - q;
            let want = gates.iter()
                .filter(|g| u32::from(g.qubits.first()) == q)
                .count() as u32;
            let got = layers.iter().filter(|l| l.mask.contains(bit)).count() as u32;
            prop_assert_eq!(got, want, "qubit {}", q);
        }
        // octant aggregation equals direct per-gate count mod 8
        for j in 0..(1u64 << n) {
            let direct: u32 = gates.iter()
                .map(|g| (j >> (n - 1 - u32::from(g.qubits.first())) & 1) as u32)
                .sum();
            prop_assert_eq!(u32::from(t_phase_octant(&layers, j)), direct % 8);
        }
    }
}
