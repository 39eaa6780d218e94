//! Circuit representation: the supported gate set, the grid-circuit text
//! format, and exact gate arithmetic (phase octants and scaled
//! Gaussian-integer matrices).
//!
//! # Qubit indexing convention
//!
//! Qubit `q` of an `n`-qubit circuit addresses bit position `n - 1 - q` of an
//! amplitude index: qubit 0 is the *most* significant bit. Every module in
//! this crate shares this convention. The benchmark file format does not fix
//! an endianness itself; the MSB convention here matches the shift arithmetic
//! used by the index-iteration kernels.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

/// Qubit index within a circuit.
pub type Qubit = u16;

/// Bit position of qubit `q` inside an amplitude index of an `n`-qubit state.
#[inline]
pub fn bit_position(num_qubits: u32, q: Qubit) -> u32 {
    num_qubits - 1 - u32::from(q)
}

/// The supported gate set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    H,
    T,
    Z,
    P,
    /// Pauli X; named `x` in circuit files.
    Not,
    XHalf,
    YHalf,
    Cz,
    Cnot,
}

impl GateKind {
    /// Gate name as it appears in circuit files.
    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::T => "t",
            GateKind::Z => "z",
            GateKind::P => "p",
            GateKind::Not => "x",
            GateKind::XHalf => "x_1_2",
            GateKind::YHalf => "y_1_2",
            GateKind::Cz => "cz",
            GateKind::Cnot => "cnot",
        }
    }

    pub fn from_name(name: &str) -> Option<GateKind> {
        Some(match name {
            "h" => GateKind::H,
            "t" => GateKind::T,
            "z" => GateKind::Z,
            "p" => GateKind::P,
            "x" => GateKind::Not,
            "x_1_2" => GateKind::XHalf,
            "y_1_2" => GateKind::YHalf,
            "cz" => GateKind::Cz,
            "cnot" => GateKind::Cnot,
            _ => return None,
        })
    }

    /// Diagonal gates multiply each amplitude by a phase without mixing.
    pub fn is_diagonal(self) -> bool {
        matches!(self, GateKind::T | GateKind::Z | GateKind::P | GateKind::Cz)
    }

    pub fn num_qubits(self) -> usize {
        match self {
            GateKind::Cz | GateKind::Cnot => 2,
            _ => 1,
        }
    }

    /// Exponent e such that the physical gate equals `(1/sqrt(2))^e` times its
    /// Gaussian-integer matrix (0 for gates with integer entries).
    pub fn rt2_exp(self) -> u32 {
        match self {
            GateKind::H => 1,
            GateKind::XHalf | GateKind::YHalf => 2,
            _ => 0,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Target qubits of a gate, in file order. For `cnot` the first qubit is the
/// control. `cz` is qubit-symmetric and is stored with qubits sorted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateQubits {
    One(Qubit),
    Two(Qubit, Qubit),
}

impl GateQubits {
    pub fn first(&self) -> Qubit {
        match *self {
            GateQubits::One(q) | GateQubits::Two(q, _) => q,
        }
    }

    pub fn second(&self) -> Option<Qubit> {
        match *self {
            GateQubits::One(_) => None,
            GateQubits::Two(_, q) => Some(q),
        }
    }
}

/// One circuit gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: GateQubits,
    /// Cycle number from the input file.
    pub cycle: u32,
}

impl Gate {
    pub fn one(kind: GateKind, q: Qubit, cycle: u32) -> Gate {
        debug_assert_eq!(kind.num_qubits(), 1);
        Gate { kind, qubits: GateQubits::One(q), cycle }
    }

    pub fn two(kind: GateKind, a: Qubit, b: Qubit, cycle: u32) -> Gate {
        debug_assert_eq!(kind.num_qubits(), 2);
        // CZ is qubit-symmetric; keep a canonical order.
        let (a, b) = if kind == GateKind::Cz && a > b { (b, a) } else { (a, b) };
        Gate { kind, qubits: GateQubits::Two(a, b), cycle }
    }

    pub fn qubit_list(&self) -> Vec<Qubit> {
        match self.qubits {
            GateQubits::One(q) => vec![q],
            GateQubits::Two(a, b) => vec![a, b],
        }
    }

    /// Bitmask over *qubit indices* (not amplitude bit positions).
    pub fn qubit_index_mask(&self) -> u64 {
        match self.qubits {
            GateQubits::One(q) => 1u64 << q,
            GateQubits::Two(a, b) => (1u64 << a) | (1u64 << b),
        }
    }

    pub fn shares_qubit(&self, other: &Gate) -> bool {
        self.qubit_index_mask() & other.qubit_index_mask() != 0
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.cycle, self.kind)?;
        for q in self.qubit_list() {
            write!(f, " {q}")?;
        }
        Ok(())
    }
}

/// A parsed circuit: qubit count plus a topologically ordered gate list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    pub num_qubits: u32,
    pub gates: Vec<Gate>,
}

/// Gate statistics used for bookkeeping checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GateCounts {
    pub all: u64,
    pub two_qubit: u64,
    pub t: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: malformed line: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: unknown gate name `{name}`")]
    UnknownGate { line: usize, name: String },
    #[error("line {line}: qubit index {q} out of range for {n} qubits")]
    QubitOutOfRange { line: usize, q: u64, n: u32 },
    #[error("line {line}: duplicate qubit in gate")]
    DuplicateQubit { line: usize },
    #[error("line {line}: gate `{name}` expects {expected} qubit(s), got {got}")]
    WrongArity { line: usize, name: String, expected: usize, got: usize },
    #[error("missing qubit-count header line")]
    MissingHeader,
    #[error("line {line}: invalid qubit count `{text}`")]
    BadQubitCount { line: usize, text: String },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum Violation {
    #[error("circuit must have at least one qubit")]
    NoQubits,
    #[error("gate {index}: qubit {q} out of range for {n} qubits")]
    QubitOutOfRange { index: usize, q: Qubit, n: u32 },
    #[error("gate {index}: duplicate qubit within gate")]
    DuplicateQubit { index: usize },
    #[error("gate {index}: cz qubits not sorted")]
    CzUnsorted { index: usize },
    #[error("gate {index}: cycle {cycle} precedes cycle {prev} on shared qubit {q}")]
    OrderViolation { index: usize, cycle: u32, prev: u32, q: Qubit },
}

impl Circuit {
    /// Parse the grid-circuit text format: the first non-comment line holds
    /// the qubit count; each following non-empty line is
    /// `<cycle> <gate> <q0> [<q1>]`. `#` starts a comment. Gates are sorted
    /// stably by cycle on load.
    pub fn parse(text: &str) -> Result<Circuit, ParseError> {
        let mut num_qubits: Option<u32> = None;
        let mut gates: Vec<Gate> = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }

            let n = match num_qubits {
                None => {
                    let n: u32 = line.parse().map_err(|_| ParseError::BadQubitCount {
                        line: line_no,
                        text: line.to_string(),
                    })?;
                    if n == 0 {
                        return Err(ParseError::BadQubitCount {
                            line: line_no,
                            text: line.to_string(),
                        });
                    }
                    num_qubits = Some(n);
                    continue;
                }
                Some(n) => n,
            };

            let mut parts = line.split_whitespace();
            let cycle: u32 = parts
                .next()
                .ok_or_else(|| ParseError::Malformed {
                    line: line_no,
                    reason: "missing cycle".into(),
                })?
                .parse()
                .map_err(|_| ParseError::Malformed {
                    line: line_no,
                    reason: "invalid cycle number".into(),
                })?;
            let name = parts.next().ok_or_else(|| ParseError::Malformed {
                line: line_no,
                reason: "missing gate name".into(),
            })?;
            let kind = GateKind::from_name(name).ok_or_else(|| ParseError::UnknownGate {
                line: line_no,
                name: name.to_string(),
            })?;

            let mut qubits: Vec<u64> = Vec::with_capacity(2);
            for tok in parts {
                let q: u64 = tok.parse().map_err(|_| ParseError::Malformed {
                    line: line_no,
                    reason: format!("invalid qubit index `{tok}`"),
                })?;
                qubits.push(q);
            }
            if qubits.len() != kind.num_qubits() {
                return Err(ParseError::WrongArity {
                    line: line_no,
                    name: name.to_string(),
                    expected: kind.num_qubits(),
                    got: qubits.len(),
                });
            }
            for &q in &qubits {
                if q >= u64::from(n) {
                    return Err(ParseError::QubitOutOfRange { line: line_no, q, n });
                }
            }
            if qubits.len() == 2 && qubits[0] == qubits[1] {
                return Err(ParseError::DuplicateQubit { line: line_no });
            }

            let gate = if qubits.len() == 1 {
                Gate::one(kind, qubits[0] as Qubit, cycle)
            } else {
                Gate::two(kind, qubits[0] as Qubit, qubits[1] as Qubit, cycle)
            };
            gates.push(gate);
        }

        let num_qubits = num_qubits.ok_or(ParseError::MissingHeader)?;
        gates.sort_by_key(|g| g.cycle);
        Ok(Circuit { num_qubits, gates })
    }

    /// Serialize back to the text format. `parse(to_text(c)) == c` for valid
    /// circuits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{}\n", self.num_qubits));
        for g in &self.gates {
            out.push_str(&format!("{g}\n"));
        }
        out
    }

    /// Check all `Gate`/`Circuit` invariants, returning every violation.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut errs = Vec::new();
        if self.num_qubits == 0 {
            errs.push(Violation::NoQubits);
        }
        let mut last_cycle: Vec<Option<u32>> = vec![None; self.num_qubits as usize];
        for (index, g) in self.gates.iter().enumerate() {
            let qs = g.qubit_list();
            let mut in_range = true;
            for &q in &qs {
                if u32::from(q) >= self.num_qubits {
                    errs.push(Violation::QubitOutOfRange { index, q, n: self.num_qubits });
                    in_range = false;
                }
            }
            if qs.len() == 2 {
                if qs[0] == qs[1] {
                    errs.push(Violation::DuplicateQubit { index });
                }
                if g.kind == GateKind::Cz && qs[0] > qs[1] {
                    errs.push(Violation::CzUnsorted { index });
                }
            }
            if !in_range {
                continue;
            }
            for &q in &qs {
                let slot = &mut last_cycle[q as usize];
                if let Some(prev) = *slot {
                    if g.cycle < prev {
                        errs.push(Violation::OrderViolation {
                            index,
                            cycle: g.cycle,
                            prev,
                            q,
                        });
                    }
                }
                *slot = Some((*slot).unwrap_or(0).max(g.cycle));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    pub fn gate_counts(&self) -> GateCounts {
        let mut counts = GateCounts { all: 0, two_qubit: 0, t: 0 };
        for g in &self.gates {
            counts.all += 1;
            if g.kind.num_qubits() == 2 {
                counts.two_qubit += 1;
            }
            if g.kind == GateKind::T {
                counts.t += 1;
            }
        }
        counts
    }
}

/// Phase octant k, representing `w^k` with `w = exp(i*pi/4)`. Composition is
/// addition mod 8 (`T^8 = I`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct OctantPhase(u8);

impl OctantPhase {
    pub fn new(k: u8) -> OctantPhase {
        OctantPhase(k & 7)
    }

    pub fn k(self) -> u8 {
        self.0
    }

    pub fn compose(self, other: OctantPhase) -> OctantPhase {
        OctantPhase((self.0 + other.0) & 7)
    }

    /// Numeric value `exp(i*k*pi/4)` in 64-bit components.
    pub fn value(self) -> Complex64 {
        let theta = f64::from(self.0) * std::f64::consts::FRAC_PI_4;
        Complex64::new(theta.cos(), theta.sin())
    }
}

/// A Gaussian integer with components restricted to {-1, 0, 1}.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Gaussian {
    pub re: i8,
    pub im: i8,
}

impl Gaussian {
    pub const ZERO: Gaussian = Gaussian { re: 0, im: 0 };
    pub const ONE: Gaussian = Gaussian { re: 1, im: 0 };

    pub fn new(re: i8, im: i8) -> Gaussian {
        Gaussian { re, im }
    }

    pub fn is_zero(self) -> bool {
        self.re == 0 && self.im == 0
    }

    pub fn value(self) -> Complex64 {
        Complex64::new(f64::from(self.re), f64::from(self.im))
    }
}

/// Exact multiply-free representation of a gate (or gate-product) matrix:
/// the physical matrix equals `(1/sqrt(2))^rt2_exp * i^i_exp * entries`,
/// with every entry a Gaussian integer with components in {-1, 0, 1}.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScaledGaussianMatrix {
    pub dim: u8,
    entries: [Gaussian; 16],
    pub rt2_exp: u32,
    pub i_exp: u8,
}

impl ScaledGaussianMatrix {
    pub fn new2(rows: [[Gaussian; 2]; 2], rt2_exp: u32, i_exp: u8) -> ScaledGaussianMatrix {
        let mut entries = [Gaussian::ZERO; 16];
        for r in 0..2 {
            for c in 0..2 {
                entries[r * 2 + c] = rows[r][c];
            }
        }
        ScaledGaussianMatrix { dim: 2, entries, rt2_exp, i_exp: i_exp & 3 }
    }

    pub fn new4(rows: [[Gaussian; 4]; 4], rt2_exp: u32, i_exp: u8) -> ScaledGaussianMatrix {
        let mut entries = [Gaussian::ZERO; 16];
        for r in 0..4 {
            for c in 0..4 {
                entries[r * 4 + c] = rows[r][c];
            }
        }
        ScaledGaussianMatrix { dim: 4, entries, rt2_exp, i_exp: i_exp & 3 }
    }

    #[inline]
    pub fn entry(&self, r: usize, c: usize) -> Gaussian {
        self.entries[r * self.dim as usize + c]
    }

    /// Physical matrix entry in 64-bit components, all factors folded in.
    pub fn reconstruct(&self, r: usize, c: usize) -> Complex64 {
        let scale = std::f64::consts::FRAC_1_SQRT_2.powi(self.rt2_exp as i32);
        let phase = OctantPhase::new(self.i_exp * 2).value();
        self.entry(r, c).value() * scale * phase
    }

    pub fn is_identity_entries(&self) -> bool {
        let d = self.dim as usize;
        for r in 0..d {
            for c in 0..d {
                let want = if r == c { Gaussian::ONE } else { Gaussian::ZERO };
                if self.entry(r, c) != want {
                    return false;
                }
            }
        }
        true
    }

    /// True when the op is the identity up to global phase bookkeeping.
    pub fn is_scaled_identity(&self) -> bool {
        self.rt2_exp == 0 && self.is_identity_entries()
    }

    /// Matrix product `self * rhs` (both factors applied to a state as
    /// `self` after `rhs`), renormalized back to {-1, 0, 1} components.
    /// Returns `None` when the product has no such representation.
    pub fn product(&self, rhs: &ScaledGaussianMatrix) -> Option<ScaledGaussianMatrix> {
        if self.dim != rhs.dim {
            return None;
        }
        let d = self.dim as usize;
        let mut wide = [[(0i32, 0i32); 4]; 4];
        for r in 0..d {
            for c in 0..d {
                let mut acc = (0i32, 0i32);
                for k in 0..d {
                    let a = self.entry(r, k);
                    let b = rhs.entry(k, c);
                    // (a.re + i a.im)(b.re + i b.im)
                    acc.0 += i32::from(a.re) * i32::from(b.re) - i32::from(a.im) * i32::from(b.im);
                    acc.1 += i32::from(a.re) * i32::from(b.im) + i32::from(a.im) * i32::from(b.re);
                }
                wide[r][c] = acc;
            }
        }
        normalize_wide(d, wide, self.rt2_exp + rhs.rt2_exp, self.i_exp + rhs.i_exp)
    }

    /// Kronecker product `self (x) rhs` of two 2x2 matrices, renormalized.
    pub fn kron(&self, rhs: &ScaledGaussianMatrix) -> Option<ScaledGaussianMatrix> {
        if self.dim != 2 || rhs.dim != 2 {
            return None;
        }
        let mut wide = [[(0i32, 0i32); 4]; 4];
        for ra in 0..2 {
            for ca in 0..2 {
                for rb in 0..2 {
                    for cb in 0..2 {
                        let a = self.entry(ra, ca);
                        let b = rhs.entry(rb, cb);
                        wide[ra * 2 + rb][ca * 2 + cb] = (
                            i32::from(a.re) * i32::from(b.re) - i32::from(a.im) * i32::from(b.im),
                            i32::from(a.re) * i32::from(b.im) + i32::from(a.im) * i32::from(b.re),
                        );
                    }
                }
            }
        }
        normalize_wide(4, wide, self.rt2_exp + rhs.rt2_exp, self.i_exp + rhs.i_exp)
    }
}

/// Reduce wide integer entries to {-1, 0, 1} components by extracting common
/// factors of 2 (worth `(1/sqrt(2))^2` each) and a shared global `i`.
fn normalize_wide(
    d: usize,
    mut wide: [[(i32, i32); 4]; 4],
    mut rt2_exp: u32,
    i_exp: u8,
) -> Option<ScaledGaussianMatrix> {
    let mut i_exp = u32::from(i_exp);
    loop {
        let mut all_even = true;
        let mut all_zero = true;
        for r in 0..d {
            for c in 0..d {
                let (re, im) = wide[r][c];
                if re != 0 || im != 0 {
                    all_zero = false;
                }
                if re % 2 != 0 || im % 2 != 0 {
                    all_even = false;
                }
            }
        }
        if all_zero || !all_even || rt2_exp < 2 {
            break;
        }
        for row in wide.iter_mut().take(d) {
            for cell in row.iter_mut().take(d) {
                cell.0 /= 2;
                cell.1 /= 2;
            }
        }
        rt2_exp -= 2;
    }
    // Extract a shared global i while every nonzero entry is pure imaginary.
    for _ in 0..3 {
        let all_pure_imag = (0..d).all(|r| (0..d).all(|c| wide[r][c].0 == 0));
        let any_nonzero = (0..d).any(|r| (0..d).any(|c| wide[r][c].1 != 0));
        if !all_pure_imag || !any_nonzero {
            break;
        }
        for row in wide.iter_mut().take(d) {
            for cell in row.iter_mut().take(d) {
                // z = i * z'  =>  z' = -i * z = (im, -re)
                *cell = (cell.1, -cell.0);
            }
        }
        i_exp += 1;
    }

    let mut entries = [Gaussian::ZERO; 16];
    for r in 0..d {
        for c in 0..d {
            let (re, im) = wide[r][c];
            if !(-1..=1).contains(&re) || !(-1..=1).contains(&im) {
                return None;
            }
            entries[r * d + c] = Gaussian::new(re as i8, im as i8);
        }
    }
    Some(ScaledGaussianMatrix {
        dim: d as u8,
        entries,
        rt2_exp,
        i_exp: (i_exp & 3) as u8,
    })
}

/// Exact diagonal of a diagonal gate: per-basis-state phase octants.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OctantDiagonal {
    pub dim: u8,
    pub octants: [u8; 4],
}

/// Exact arithmetic form of one gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateAction {
    Diagonal(OctantDiagonal),
    Dense(ScaledGaussianMatrix),
}

const G0: Gaussian = Gaussian { re: 0, im: 0 };
const G1: Gaussian = Gaussian { re: 1, im: 0 };
const GN1: Gaussian = Gaussian { re: -1, im: 0 };
const G1I: Gaussian = Gaussian { re: 1, im: 1 };
const G1NI: Gaussian = Gaussian { re: 1, im: -1 };
const GN1NI: Gaussian = Gaussian { re: -1, im: -1 };

/// Exact matrix (or phase diagonal) of a gate kind. Diagonal kinds return a
/// per-entry octant diagonal; non-diagonal kinds return their matrix with
/// leading `1/sqrt(2)` factors extracted.
pub fn gate_matrix(kind: GateKind) -> GateAction {
    match kind {
        GateKind::T => GateAction::Diagonal(OctantDiagonal { dim: 2, octants: [0, 1, 0, 0] }),
        GateKind::P => GateAction::Diagonal(OctantDiagonal { dim: 2, octants: [0, 2, 0, 0] }),
        GateKind::Z => GateAction::Diagonal(OctantDiagonal { dim: 2, octants: [0, 4, 0, 0] }),
        GateKind::Cz => GateAction::Diagonal(OctantDiagonal { dim: 4, octants: [0, 0, 0, 4] }),
        GateKind::H => GateAction::Dense(ScaledGaussianMatrix::new2([[G1, G1], [G1, GN1]], 1, 0)),
        GateKind::Not => GateAction::Dense(ScaledGaussianMatrix::new2([[G0, G1], [G1, G0]], 0, 0)),
        GateKind::XHalf => {
            GateAction::Dense(ScaledGaussianMatrix::new2([[G1I, G1NI], [G1NI, G1I]], 2, 0))
        }
        GateKind::YHalf => {
            GateAction::Dense(ScaledGaussianMatrix::new2([[G1I, G1I], [GN1NI, G1I]], 2, 0))
        }
        GateKind::Cnot => GateAction::Dense(ScaledGaussianMatrix::new4(
            [
                [G1, G0, G0, G0],
                [G0, G1, G0, G0],
                [G0, G0, G0, G1],
                [G0, G0, G1, G0],
            ],
            0,
            0,
        )),
    }
}

/// Dense Gaussian matrix for a non-diagonal kind; panics on diagonal kinds.
pub fn dense_matrix(kind: GateKind) -> ScaledGaussianMatrix {
    match gate_matrix(kind) {
        GateAction::Dense(m) => m,
        GateAction::Diagonal(_) => panic!("dense_matrix called on diagonal gate {kind}"),
    }
}

/// Numeric gate matrix in 64-bit components (for checks and tests).
pub fn numeric_matrix(kind: GateKind) -> Vec<Vec<Complex64>> {
    match gate_matrix(kind) {
        GateAction::Dense(m) => {
            let d = m.dim as usize;
            (0..d)
                .map(|r| (0..d).map(|c| m.reconstruct(r, c)).collect())
                .collect()
        }
        GateAction::Diagonal(diag) => {
            let d = diag.dim as usize;
            (0..d)
                .map(|r| {
                    (0..d)
                        .map(|c| {
                            if r == c {
                                OctantPhase::new(diag.octants[r]).value()
                            } else {
                                Complex64::new(0.0, 0.0)
                            }
                        })
                        .collect()
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_basic() {
        let c = Circuit::parse("2\n0 h 0\n0 h 1\n1 cz 0 1").unwrap();
        assert_eq!(c.num_qubits, 2);
        assert_eq!(
            c.gates,
            vec![
                Gate::one(GateKind::H, 0, 0),
                Gate::one(GateKind::H, 1, 0),
                Gate::two(GateKind::Cz, 0, 1, 1),
            ]
        );
    }

    #[test]
    fn parse_repeated_gate_across_cycles() {
        let c = Circuit::parse("1\n0 t 0\n1 t 0").unwrap();
        assert_eq!(c.num_qubits, 1);
        assert_eq!(c.gates.len(), 2);
        assert!(c.gates.iter().all(|g| g.kind == GateKind::T));
        assert_eq!((c.gates[0].cycle, c.gates[1].cycle), (0, 1));
    }

    #[test]
    fn parse_duplicate_qubit() {
        let err = Circuit::parse("2\n0 cz 0 0").unwrap_err();
        assert_eq!(err, ParseError::DuplicateQubit { line: 2 });
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            Circuit::parse("2\n0 frob 0").unwrap_err(),
            ParseError::UnknownGate { line: 2, .. }
        ));
        assert!(matches!(
            Circuit::parse("2\n0 h 5").unwrap_err(),
            ParseError::QubitOutOfRange { line: 2, q: 5, n: 2 }
        ));
        assert!(matches!(
            Circuit::parse("2\n0 cz 0").unwrap_err(),
            ParseError::WrongArity { line: 2, .. }
        ));
        assert!(matches!(
            Circuit::parse("nope\n0 h 0").unwrap_err(),
            ParseError::BadQubitCount { line: 1, .. }
        ));
        assert!(matches!(Circuit::parse("# nothing\n").unwrap_err(), ParseError::MissingHeader));
    }

    #[test]
    fn parse_sorts_by_cycle_stably() {
        let c = Circuit::parse("2\n1 t 0\n0 h 0\n1 t 1").unwrap();
        let kinds: Vec<_> = c.gates.iter().map(|g| (g.cycle, g.kind)).collect();
        assert_eq!(kinds, vec![(0, GateKind::H), (1, GateKind::T), (1, GateKind::T)]);
    }

    #[test]
    fn parse_comments_and_blanks() {
        let c = Circuit::parse("# header\n\n3\n0 h 0 # trailing\n# mid\n0 t 2\n").unwrap();
        assert_eq!(c.num_qubits, 3);
        assert_eq!(c.gates.len(), 2);
    }

    #[test]
    fn roundtrip() {
        let text = "3\n0 h 0\n0 h 1\n1 cz 1 2\n2 x_1_2 0\n2 cnot 1 2\n3 y_1_2 1\n";
        let c = Circuit::parse(text).unwrap();
        assert_eq!(Circuit::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn validate_ok_and_errors() {
        let c = Circuit::parse("2\n0 h 0\n0 h 1\n1 cz 0 1").unwrap();
        assert!(c.validate().is_ok());

        let bad = Circuit {
            num_qubits: 3,
            gates: vec![Gate::one(GateKind::H, 5, 0)],
        };
        assert!(matches!(
            bad.validate().unwrap_err()[0],
            Violation::QubitOutOfRange { q: 5, .. }
        ));

        // later cycle listed before an earlier cycle on a shared qubit
        let out_of_order = Circuit {
            num_qubits: 1,
            gates: vec![Gate::one(GateKind::T, 0, 1), Gate::one(GateKind::H, 0, 0)],
        };
        assert!(matches!(
            out_of_order.validate().unwrap_err()[0],
            Violation::OrderViolation { .. }
        ));
    }

    #[test]
    fn gate_matrix_paper_values() {
        // H = (1/sqrt(2)) [[1,1],[1,-1]]
        let h = dense_matrix(GateKind::H);
        assert_eq!(h.rt2_exp, 1);
        assert_eq!(h.i_exp, 0);
        assert_eq!(h.entry(0, 0), G1);
        assert_eq!(h.entry(1, 1), GN1);

        // T = diag(1, exp(i pi/4))
        let GateAction::Diagonal(t) = gate_matrix(GateKind::T) else { panic!() };
        assert_eq!(&t.octants[..2], &[0, 1]);

        // X^(1/2) = (1/2) [[1+i, 1-i], [1-i, 1+i]]
        let x = dense_matrix(GateKind::XHalf);
        assert_eq!(x.rt2_exp, 2);
        assert_eq!(x.entry(0, 0), G1I);
        assert_eq!(x.entry(0, 1), G1NI);
    }

    fn mat_mul(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        let n = a.len();
        (0..n)
            .map(|r| {
                (0..n)
                    .map(|c| (0..n).map(|k| a[r][k] * b[k][c]).sum())
                    .collect()
            })
            .collect()
    }

    #[test]
    fn all_gate_matrices_unitary() {
        for kind in [
            GateKind::H,
            GateKind::T,
            GateKind::Z,
            GateKind::P,
            GateKind::Not,
            GateKind::XHalf,
            GateKind::YHalf,
            GateKind::Cz,
            GateKind::Cnot,
        ] {
            let m = numeric_matrix(kind);
            let d = m.len();
            for r in 0..d {
                for c in 0..d {
                    let dot: Complex64 = (0..d).map(|k| m[k][r].conj() * m[k][c]).sum();
                    let want = if r == c { 1.0 } else { 0.0 };
                    assert!(
                        (dot - want).norm() < 1e-6,
                        "{kind}: U^H U [{r}][{c}] = {dot}"
                    );
                }
            }
        }
    }

    #[test]
    fn cnot_equals_h_cz_h() {
        // (I (x) H) CNOT (I (x) H) = CZ, so CNOT = (I (x) H) CZ (I (x) H).
        let h = numeric_matrix(GateKind::H);
        let eye = vec![
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        ];
        let mut ih = vec![vec![Complex64::new(0.0, 0.0); 4]; 4];
        for ra in 0..2 {
            for ca in 0..2 {
                for rb in 0..2 {
                    for cb in 0..2 {
                        ih[ra * 2 + rb][ca * 2 + cb] = eye[ra][ca] * h[rb][cb];
                    }
                }
            }
        }
        let cz = numeric_matrix(GateKind::Cz);
        let got = mat_mul(&mat_mul(&ih, &cz), &ih);
        let cnot = numeric_matrix(GateKind::Cnot);
        for r in 0..4 {
            for c in 0..4 {
                assert!((got[r][c] - cnot[r][c]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn octant_phase_composition() {
        let a = OctantPhase::new(5);
        let b = OctantPhase::new(6);
        assert_eq!(a.compose(b).k(), 3);
        assert!((OctantPhase::new(2).value() - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn gaussian_product_normalization() {
        // H' * H' = 2 I  ->  identity with all factors extracted.
        let h = dense_matrix(GateKind::H);
        let p = h.product(&h).unwrap();
        assert!(p.is_scaled_identity());
        assert_eq!(p.i_exp, 0);

        // X' * X' = 4 NOT -> plain NOT.
        let x = dense_matrix(GateKind::XHalf);
        let xx = x.product(&x).unwrap();
        assert_eq!(xx.rt2_exp, 0);
        assert_eq!(xx.entry(0, 1), G1);
        assert_eq!(xx.entry(0, 0), G0);

        // Y' * Y' = 4i [[0,1],[-1,0]] -> global i extracted.
        let y = dense_matrix(GateKind::YHalf);
        let yy = y.product(&y).unwrap();
        assert_eq!(yy.rt2_exp, 0);
        assert_eq!(yy.i_exp, 1);
        assert_eq!(yy.entry(0, 1), G1);
        assert_eq!(yy.entry(1, 0), GN1);
    }

    #[test]
    fn kron_pairs_match_reconstruction() {
        // Spot-check H'(x)H' and X'(x)X' against numeric Kronecker products.
        for (a, b) in [
            (GateKind::H, GateKind::H),
            (GateKind::XHalf, GateKind::XHalf),
            (GateKind::YHalf, GateKind::YHalf),
            (GateKind::XHalf, GateKind::YHalf),
            (GateKind::H, GateKind::XHalf),
        ] {
            let ma = dense_matrix(a);
            let mb = dense_matrix(b);
            let k = ma.kron(&mb).unwrap();
            let na = numeric_matrix(a);
            let nb = numeric_matrix(b);
            for r in 0..4 {
                for c in 0..4 {
                    let want = na[r / 2][c / 2] * nb[r % 2][c % 2];
                    assert!(
                        (k.reconstruct(r, c) - want).norm() < 1e-12,
                        "{a}(x){b} [{r}][{c}]"
                    );
                }
            }
        }
    }
}
