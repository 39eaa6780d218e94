//! Random grid-circuit generator in the style of the Google random-circuit
//! benchmarks: an initial cycle of Hadamards, alternating staggered CZ
//! patterns on a planar grid, one-qubit gates (first T, then alternating
//! X1/2 / Y1/2) on qubits that just finished a CZ, and a final Hadamard
//! cycle. Deterministic for a given seed.

use anyhow::{bail, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, PartialEq)]
enum OneQ {
    None,
    T,
    X,
    Y,
}

fn cz_pairs(rows: u32, cols: u32, pattern: u32) -> Vec<(u32, u32)> {
    let q = |r: u32, c: u32| r * cols + c;
    let mut pairs = Vec::new();
    if pattern < 4 {
        // Horizontal pairs (r, c)-(r, c+1): start column depends on the
        // pattern and row parity, stepping by 4.
        for r in 0..rows {
            let mut c = (pattern + 2 * (r % 2)) % 4;
            while c + 1 < cols {
                pairs.push((q(r, c), q(r, c + 1)));
                c += 4;
            }
        }
    } else {
        // Vertical pairs (r, c)-(r+1, c), staggered by column.
        let p = pattern - 4;
        for c in 0..cols {
            let mut r = (p + 2 * (c % 2)) % 4;
            while r + 1 < rows {
                pairs.push((q(r, c), q(r + 1, c)));
                r += 4;
            }
        }
    }
    pairs
}

/// Generate an n = rows*cols qubit circuit of depth 1 + depth + 1.
pub fn grid_circuit(rows: u32, cols: u32, depth: u32, seed: u64) -> Result<String> {
    let n = rows * cols;
    if n == 0 {
        bail!("grid must have at least one qubit");
    }
    if n > 36 {
        bail!("grid of {n} qubits exceeds the supported maximum of 36");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    out.push_str(&format!("{n}\n"));
    for q in 0..n {
        out.push_str(&format!("0 h {q}\n"));
    }

    let mut last_1q = vec![OneQ::None; n as usize];
    let mut had_cz_prev = vec![false; n as usize];
    for cycle in 1..=depth {
        let pairs = cz_pairs(rows, cols, (cycle - 1) % 8);
        let mut in_cz = vec![false; n as usize];
        for &(a, b) in &pairs {
            out.push_str(&format!("{cycle} cz {a} {b}\n"));
            in_cz[a as usize] = true;
            in_cz[b as usize] = true;
        }
        for q in 0..n {
            if in_cz[q as usize] || !had_cz_prev[q as usize] {
                continue;
            }
            // First one-qubit gate on a qubit is T; afterwards draw from
            // {T, X1/2, Y1/2} minus the previous gate on that qubit.
            let gate = match last_1q[q as usize] {
                OneQ::None => OneQ::T,
                prev => {
                    let candidates: [OneQ; 2] = match prev {
                        OneQ::T => [OneQ::X, OneQ::Y],
                        OneQ::X => [OneQ::T, OneQ::Y],
                        OneQ::Y => [OneQ::T, OneQ::X],
                        OneQ::None => unreachable!(),
                    };
                    candidates[usize::from(rng.random::<bool>())]
                }
            };
            let name = match gate {
                OneQ::T => "t",
                OneQ::X => "x_1_2",
                OneQ::Y => "y_1_2",
                OneQ::None => unreachable!(),
            };
            out.push_str(&format!("{cycle} {name} {q}\n"));
            last_1q[q as usize] = gate;
        }
        for q in 0..n {
            had_cz_prev[q as usize] = in_cz[q as usize];
        }
    }
    for q in 0..n {
        out.push_str(&format!("{} h {q}\n", depth + 1));
    }
    Ok(out)
}
