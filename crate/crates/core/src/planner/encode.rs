//! Bitmask encodings of diagonal clusters and pairing/coalescing of
//! non-diagonal one-qubit gates.

use crate::circuit::{bit_position, Gate, GateKind, GateQubits, Qubit};

use super::{
    make_pair_op, make_single_op, CzCluster, PairedGateOp, PlanError, QubitMask, TLayer,
};

/// Encode a cluster of CZ gates as one bitmask per qubit. Errors when the
/// same pair appears twice (the encoding cannot represent multiplicity);
/// the planner splits such clusters instead.
pub fn encode_cz_masks(n: u32, cz_gates: &[Gate]) -> Result<CzCluster, PlanError> {
    let mut masks = vec![0u64; n as usize];
    for g in cz_gates {
        debug_assert_eq!(g.kind, GateKind::Cz);
        let GateQubits::Two(a, b) = g.qubits else {
            unreachable!("CZ is a two-qubit gate")
        };
        for q in [a, b] {
            if u32::from(q) >= n {
                return Err(PlanError::QubitOutOfRange { q, n });
            }
        }
        let pa = bit_position(n, a) as usize;
        let pb = bit_position(n, b) as usize;
        if masks[pa] & (1u64 << pb) != 0 {
            return Err(PlanError::DuplicateCzPair(a, b));
        }
        masks[pa] |= 1u64 << pb;
        masks[pb] |= 1u64 << pa;
    }
    Ok(CzCluster { masks, gate_count: cz_gates.len() as u64 })
}

/// Greedy first-fit layering of T gates: each gate goes to the first layer
/// whose bit for its qubit is clear. The union of the layers multiset-equals
/// the input.
pub fn encode_t_layers(n: u32, t_gates: &[Gate]) -> Vec<TLayer> {
    let mut layers: Vec<TLayer> = Vec::new();
    for g in t_gates {
        debug_assert_eq!(g.kind, GateKind::T);
        let bit = bit_position(n, g.qubits.first());
        match layers.iter_mut().find(|l| !l.mask.contains(bit)) {
            Some(layer) => layer.mask.set(bit),
            None => layers.push(TLayer { mask: QubitMask::single(bit) }),
        }
    }
    layers
}

/// Pair one-qubit non-diagonal gates within a layer. Gates of each blend
/// group (X1/2 with Y1/2 blended; H; NOT) are sorted by the amplitude bit
/// they act on and paired adjacently from the least significant bit up, so
/// pairs act on qubits as close as possible; an odd count leaves the
/// highest-bit gate unpaired. With `pairing` disabled, everything comes back
/// as singles in layer order.
pub fn pair_one_qubit_gates(
    n: u32,
    layer: &[(GateKind, Qubit)],
    pairing: bool,
) -> (Vec<PairedGateOp>, Vec<PairedGateOp>) {
    if !pairing {
        let singles = layer
            .iter()
            .map(|&(kind, q)| make_single_op(n, kind, q))
            .collect();
        return (Vec::new(), singles);
    }

    let mut pairs = Vec::new();
    let mut singles = Vec::new();
    let groups: [&[GateKind]; 3] = [
        &[GateKind::XHalf, GateKind::YHalf],
        &[GateKind::H],
        &[GateKind::Not],
    ];
    for group in groups {
        let mut members: Vec<(GateKind, Qubit)> = layer
            .iter()
            .copied()
            .filter(|(kind, _)| group.contains(kind))
            .collect();
        members.sort_by_key(|&(_, q)| bit_position(n, q));
        let mut it = members.chunks_exact(2);
        for pair in &mut it {
            match make_pair_op(n, pair[0], pair[1]) {
                Some(op) => pairs.push(op),
                None => {
                    singles.push(make_single_op(n, pair[0].0, pair[0].1));
                    singles.push(make_single_op(n, pair[1].0, pair[1].1));
                }
            }
        }
        for &(kind, q) in it.remainder() {
            singles.push(make_single_op(n, kind, q));
        }
    }
    (pairs, singles)
}

/// Merge two ops on identical qubit sets in adjacent passes into their
/// product, when it still has an exact scaled-Gaussian representation.
/// `first` is applied before `second`.
pub fn coalesce_adjacent(first: &PairedGateOp, second: &PairedGateOp) -> Option<PairedGateOp> {
    if first.targets != second.targets {
        return None;
    }
    let matrix = second.matrix.product(&first.matrix)?;
    Some(PairedGateOp {
        targets: first.targets,
        matrix,
        kernel: super::KernelForm::Gauss,
        source_gates: first.source_gates + second.source_gates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::GateKind::*;
    use crate::planner::{KernelForm, PairTargets};

    #[test]
    fn cz_masks_complete_graph() {
        // Six CZ gates coupling all pairs of four qubits.
        let mut gates = Vec::new();
        for a in 0..4u16 {
            for b in (a + 1)..4 {
                gates.push(Gate::two(Cz, a, b, 0));
            }
        }
        let cz = encode_cz_masks(4, &gates).unwrap();
        // The partner mask at each bit position covers every other bit:
        // m0=1110, m1=1101, m2=1011, m3=0111.
        let per_bit: Vec<String> = (0..4)
            .map(|b| QubitMask(cz.mask_for_bit(b)).to_binary(4))
            .collect();
        assert_eq!(per_bit, vec!["1110", "1101", "1011", "0111"]);
        // Exactly twelve nonzero bits total across the bitmasks.
        let total: u32 = (0..4).map(|b| cz.mask_for_bit(b).count_ones()).sum();
        assert_eq!(total, 12);
        assert_eq!(cz.gate_count(), 6);
    }

    #[test]
    fn cz_masks_single_gate() {
        let cz = encode_cz_masks(3, &[Gate::two(Cz, 0, 1, 0)]).unwrap();
        let per_qubit: Vec<String> = (0..3)
            .map(|q| QubitMask(cz.mask_for_bit(bit_position(3, q))).to_binary(3))
            .collect();
        assert_eq!(per_qubit, vec!["010", "100", "000"]);
    }

    #[test]
    fn cz_masks_empty_and_duplicate() {
        let cz = encode_cz_masks(3, &[]).unwrap();
        assert!(cz.is_empty());
        assert!((0..3).all(|b| cz.mask_for_bit(b) == 0));

        let dup = [Gate::two(Cz, 0, 1, 0), Gate::two(Cz, 1, 0, 1)];
        assert_eq!(
            encode_cz_masks(3, &dup).unwrap_err(),
            PlanError::DuplicateCzPair(0, 1)
        );
    }

    #[test]
    fn t_layers_greedy() {
        let n = 4;
        let gates: Vec<Gate> = (0..4u16).map(|q| Gate::one(T, q, 0)).collect();
        let layers = encode_t_layers(n, &gates);
        assert_eq!(layers.len(), 1);
        assert_eq!(layers[0].mask.to_binary(n), "1111");

        let two_on_same = [Gate::one(T, 0, 0), Gate::one(T, 0, 1)];
        let layers = encode_t_layers(n, &two_on_same);
        assert_eq!(layers.len(), 2);
        assert_eq!(layers[0].mask.to_binary(n), "1000");
        assert_eq!(layers[1].mask.to_binary(n), "1000");

        assert!(encode_t_layers(n, &[]).is_empty());
    }

    #[test]
    fn pairing_by_bit_proximity() {
        // X1/2 on qubits 0,1,2 of n=4: qubits 1 and 2 sit on the two lowest
        // participating bits and pair up; qubit 0 (highest bit) is left over.
        let layer = [(XHalf, 0u16), (XHalf, 1), (XHalf, 2)];
        let (pairs, singles) = pair_one_qubit_gates(4, &layer, true);
        assert_eq!(pairs.len(), 1);
        assert_eq!(singles.len(), 1);
        assert_eq!(
            pairs[0].targets,
            PairTargets::Pair { hi: bit_position(4, 1), lo: bit_position(4, 2) }
        );
        assert_eq!(singles[0].targets, PairTargets::Single { bit: bit_position(4, 0) });

        // A single H pairs with nothing.
        let (pairs, singles) = pair_one_qubit_gates(4, &[(H, 3)], true);
        assert!(pairs.is_empty());
        assert_eq!(singles.len(), 1);
    }

    #[test]
    fn blended_xy_pair() {
        let layer = [(XHalf, 0u16), (YHalf, 1)];
        let (pairs, singles) = pair_one_qubit_gates(2, &layer, true);
        assert!(singles.is_empty());
        assert_eq!(pairs.len(), 1);
        // Qubit 0 is the high amplitude bit, so the combined matrix is
        // X1/2' (x) Y1/2'.
        assert_eq!(pairs[0].kernel, KernelForm::XxY);
    }

    #[test]
    fn pairing_disabled_yields_singles() {
        let layer = [(XHalf, 0u16), (XHalf, 1), (H, 2)];
        let (pairs, singles) = pair_one_qubit_gates(4, &layer, false);
        assert!(pairs.is_empty());
        assert_eq!(singles.len(), 3);
    }

    #[test]
    fn coalesce_yy_then_hh_is_diagonal() {
        // (Y1/2 (x) Y1/2)(H (x) H) = (Y1/2 H (x) Y1/2 H), which is diagonal.
        let hh = make_pair_op(2, (H, 0), (H, 1)).unwrap();
        let yy = make_pair_op(2, (YHalf, 0), (YHalf, 1)).unwrap();
        let merged = coalesce_adjacent(&hh, &yy).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                if r != c {
                    assert!(merged.matrix.entry(r, c).is_zero(), "off-diagonal at {r},{c}");
                }
            }
        }
        assert_eq!(merged.source_gates, 4);
    }

    #[test]
    fn coalesce_single_x_then_h() {
        let x = make_single_op(1, XHalf, 0);
        let h = make_single_op(1, H, 0);
        let merged = coalesce_adjacent(&x, &h).unwrap();
        // H' X' = 2 [[1,1],[i,-i]], so one extraction leaves rt2_exp = 1.
        assert_eq!(merged.matrix.rt2_exp, 1);
        assert_eq!(merged.source_gates, 2);
    }

    #[test]
    fn coalesce_requires_same_targets() {
        let a = make_single_op(2, H, 0);
        let b = make_single_op(2, H, 1);
        assert!(coalesce_adjacent(&a, &b).is_none());
    }
}
