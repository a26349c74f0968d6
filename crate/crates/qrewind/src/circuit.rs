// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Circuit representation over the {H, X, CCX} gate set, with a plain
//! one-directive-per-line text format.
//!
//! The three gates are each self-inverse, so inverting a circuit is just
//! reversing the gate list. Witness wires are ordinary qubits flagged in
//! metadata; a concrete witness is burned in by prepending NOT gates on
//! the wires whose bit is 1.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CircuitError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("qubit index {index} out of range for width {width}")]
    IndexOutOfRange { index: usize, width: usize },
    #[error("ccx indices must be pairwise distinct, got {0} {1} {2}")]
    CcxIndicesClash(usize, usize, usize),
    #[error("witness string length {got} does not match witness wire count {expected}")]
    WitnessLength { expected: usize, got: usize },
    #[error("witness bits must be '0' or '1', found {0:?}")]
    WitnessChar(char),
    #[error("duplicate witness qubit {0}")]
    DuplicateWitness(usize),
}

/// A single gate. All three kinds square to the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gate {
    H(usize),
    X(usize),
    CCX(usize, usize, usize),
}

impl Gate {
    pub fn qubits(&self) -> impl Iterator<Item = usize> {
        let (a, rest) = match *self {
            Gate::H(q) | Gate::X(q) => (q, None),
            Gate::CCX(c1, c2, t) => (c1, Some([c2, t])),
        };
        std::iter::once(a).chain(rest.into_iter().flatten())
    }

    fn check(&self, width: usize) -> Result<(), CircuitError> {
        if let Gate::CCX(c1, c2, t) = *self {
            if c1 == c2 || c1 == t || c2 == t {
                return Err(CircuitError::CcxIndicesClash(c1, c2, t));
            }
        }
        for q in self.qubits() {
            if q >= width {
                return Err(CircuitError::IndexOutOfRange { index: q, width });
            }
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::H(q) => write!(f, "h {q}"),
            Gate::X(q) => write!(f, "x {q}"),
            Gate::CCX(c1, c2, t) => write!(f, "ccx {c1} {c2} {t}"),
        }
    }
}

/// An ordered gate list on `width` wires plus verifier metadata: which wire
/// is the output, which wires take the witness, and which wires are
/// internal ancillas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    width: usize,
    gates: Vec<Gate>,
    output_qubit: Option<usize>,
    witness_qubits: Vec<usize>,
    ancilla_qubits: BTreeSet<usize>,
}

impl Circuit {
    pub fn new(width: usize) -> Self {
        Circuit {
            width,
            gates: Vec::new(),
            output_qubit: None,
            witness_qubits: Vec::new(),
            ancilla_qubits: BTreeSet::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn output_qubit(&self) -> Option<usize> {
        self.output_qubit
    }

    pub fn witness_qubits(&self) -> &[usize] {
        &self.witness_qubits
    }

    pub fn ancilla_qubits(&self) -> &BTreeSet<usize> {
        &self.ancilla_qubits
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), CircuitError> {
        gate.check(self.width)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend_gates(
        &mut self,
        gates: impl IntoIterator<Item = Gate>,
    ) -> Result<(), CircuitError> {
        for g in gates {
            self.push(g)?;
        }
        Ok(())
    }

    pub fn set_output(&mut self, qubit: usize) -> Result<(), CircuitError> {
        if qubit >= self.width {
            return Err(CircuitError::IndexOutOfRange {
                index: qubit,
                width: self.width,
            });
        }
        self.output_qubit = Some(qubit);
        Ok(())
    }

    pub fn set_witness(&mut self, qubits: Vec<usize>) -> Result<(), CircuitError> {
        let mut seen = BTreeSet::new();
        for &q in &qubits {
            if q >= self.width {
                return Err(CircuitError::IndexOutOfRange {
                    index: q,
                    width: self.width,
                });
            }
            if !seen.insert(q) {
                return Err(CircuitError::DuplicateWitness(q));
            }
        }
        self.witness_qubits = qubits;
        Ok(())
    }

    pub fn set_ancillas(&mut self, qubits: impl IntoIterator<Item = usize>) {
        self.ancilla_qubits = qubits.into_iter().collect();
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    pub fn hadamard_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g, Gate::H(_)))
            .count()
    }

    /// Reversed gate list; gates stay as they are because each is its own
    /// inverse. Metadata carries over unchanged.
    pub fn inverse(&self) -> Circuit {
        let mut inv = self.clone();
        inv.gates.reverse();
        inv
    }

    /// Burns a concrete witness into the circuit: a NOT is prepended on
    /// each witness wire whose bit is 1, so running the result on all-zero
    /// input behaves like running the template on |w⟩.
    pub fn hardcode_witness(&self, w: &str) -> Result<Circuit, CircuitError> {
        let bits = parse_witness_bits(w)?;
        if bits.len() != self.witness_qubits.len() {
            return Err(CircuitError::WitnessLength {
                expected: self.witness_qubits.len(),
                got: bits.len(),
            });
        }
        let mut out = self.clone();
        let prefix: Vec<Gate> = self
            .witness_qubits
            .iter()
            .zip(&bits)
            .filter(|&(_, &b)| b)
            .map(|(&q, _)| Gate::X(q))
            .collect();
        out.gates.splice(0..0, prefix);
        Ok(out)
    }

    /// Parses the text format. One directive per line, `#` to end of line
    /// is a comment, qubit indices 0-based:
    ///
    /// ```text
    /// qubits <n>
    /// h <q> | x <q> | ccx <c1> <c2> <t>
    /// output <q>
    /// witness <q1> <q2> ...
    /// ```
    pub fn parse(text: &str) -> Result<Circuit, CircuitError> {
        let mut circuit: Option<Circuit> = None;
        let mut saw_output = false;
        let mut saw_witness = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let err = |msg: String| CircuitError::Parse { line, msg };
            let at_line = |e: CircuitError| match e {
                CircuitError::Parse { .. } => e,
                other => CircuitError::Parse {
                    line,
                    msg: other.to_string(),
                },
            };
            let body = raw.split('#').next().unwrap_or("");
            let mut tokens = body.split_whitespace();
            let Some(directive) = tokens.next() else {
                continue;
            };
            let mut args = Vec::new();
            for t in tokens {
                let v: usize = t
                    .parse()
                    .map_err(|_| err(format!("expected a nonnegative integer, found {t:?}")))?;
                args.push(v);
            }
            let arity = |want: usize| -> Result<(), CircuitError> {
                if args.len() != want {
                    Err(err(format!(
                        "directive {directive:?} takes {want} argument(s), found {}",
                        args.len()
                    )))
                } else {
                    Ok(())
                }
            };
            if directive == "qubits" {
                arity(1)?;
                if circuit.is_some() {
                    return Err(err("duplicate `qubits` directive".into()));
                }
                circuit = Some(Circuit::new(args[0]));
                continue;
            }
            let c = circuit
                .as_mut()
                .ok_or_else(|| err(format!("{directive:?} before `qubits` directive")))?;
            match directive {
                "h" => {
                    arity(1)?;
                    c.push(Gate::H(args[0])).map_err(at_line)?;
                }
                "x" => {
                    arity(1)?;
                    c.push(Gate::X(args[0])).map_err(at_line)?;
                }
                "ccx" => {
                    arity(3)?;
                    c.push(Gate::CCX(args[0], args[1], args[2])).map_err(at_line)?;
                }
                "output" => {
                    arity(1)?;
                    if saw_output {
                        return Err(err("duplicate `output` directive".into()));
                    }
                    saw_output = true;
                    c.set_output(args[0]).map_err(at_line)?;
                }
                "witness" => {
                    if saw_witness {
                        return Err(err("duplicate `witness` directive".into()));
                    }
                    saw_witness = true;
                    c.set_witness(args).map_err(at_line)?;
                }
                other => {
                    return Err(err(format!("unknown directive {other:?}")));
                }
            }
        }
        circuit.ok_or(CircuitError::Parse {
            line: text.lines().count().max(1),
            msg: "missing `qubits` directive".into(),
        })
    }

    /// Emits the text format; `parse` of the result reconstructs the
    /// circuit exactly (ancilla metadata is internal and not serialized).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("qubits {}\n", self.width));
        for g in &self.gates {
            out.push_str(&format!("{g}\n"));
        }
        if let Some(q) = self.output_qubit {
            out.push_str(&format!("output {q}\n"));
        }
        if !self.witness_qubits.is_empty() {
            out.push_str("witness");
            for q in &self.witness_qubits {
                out.push_str(&format!(" {q}"));
            }
            out.push('\n');
        }
        out
    }
}

pub fn parse_witness_bits(w: &str) -> Result<Vec<bool>, CircuitError> {
    w.chars()
        .map(|ch| match ch {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(CircuitError::WitnessChar(other)),
        })
        .collect()
}

/// Wire assignment for transformed verifiers: coin qubit B, output copy O,
/// the original verifier's workspace R, the counter register S, and a
/// shared ancilla pool. Laid out contiguously in that order, so the ranges
/// are disjoint and cover the width by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterLayout {
    n_r: usize,
    l: usize,
    n_anc: usize,
}

impl RegisterLayout {
    pub fn new(n_r: usize, l: usize, n_anc: usize) -> Self {
        RegisterLayout { n_r, l, n_anc }
    }

    pub fn b(&self) -> usize {
        0
    }

    pub fn o(&self) -> usize {
        1
    }

    pub fn r(&self) -> Range<usize> {
        2..2 + self.n_r
    }

    /// Wire carrying the original circuit's qubit `i`.
    pub fn r_qubit(&self, i: usize) -> usize {
        debug_assert!(i < self.n_r);
        2 + i
    }

    pub fn s(&self) -> Range<usize> {
        let base = 2 + self.n_r;
        base..base + self.l
    }

    /// Counter bit `i`, 0 = most significant.
    pub fn s_qubit(&self, i: usize) -> usize {
        debug_assert!(i < self.l);
        2 + self.n_r + i
    }

    pub fn anc(&self) -> Range<usize> {
        let base = 2 + self.n_r + self.l;
        base..base + self.n_anc
    }

    pub fn width(&self) -> usize {
        2 + self.n_r + self.l + self.n_anc
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn l(&self) -> usize {
        self.l
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn template() -> Circuit {
        let mut c = Circuit::new(4);
        c.extend_gates([Gate::H(0), Gate::X(1), Gate::CCX(0, 1, 2)])
            .unwrap();
        c.set_output(2).unwrap();
        c.set_witness(vec![0, 1]).unwrap();
        c
    }

    #[test]
    fn counts() {
        let c = template();
        assert_eq!(c.gate_count(), 3);
        assert_eq!(c.hadamard_count(), 1);
        assert_eq!(Circuit::new(2).gate_count(), 0);
        assert_eq!(Circuit::new(2).hadamard_count(), 0);
    }

    #[test]
    fn inverse_reverses_and_is_involution() {
        let c = template();
        let inv = c.inverse();
        assert_eq!(inv.gates(), &[Gate::CCX(0, 1, 2), Gate::X(1), Gate::H(0)]);
        assert_eq!(inv.inverse(), c);
        assert_eq!(Circuit::new(3).inverse().gates(), &[]);
    }

    #[test]
    fn hardcode_witness_prepends_x_per_one_bit() {
        let c = template();
        let zero = c.hardcode_witness("00").unwrap();
        assert_eq!(zero.gates(), c.gates());

        let ten = c.hardcode_witness("10").unwrap();
        assert_eq!(ten.gates()[0], Gate::X(0));
        assert_eq!(&ten.gates()[1..], c.gates());
        assert_eq!(ten.gate_count(), c.gate_count() + 1);

        let mut c3 = Circuit::new(3);
        c3.set_witness(vec![0, 1, 2]).unwrap();
        let all = c3.hardcode_witness("111").unwrap();
        assert_eq!(all.gates(), &[Gate::X(0), Gate::X(1), Gate::X(2)]);
    }

    #[test]
    fn hardcode_witness_rejects_bad_input() {
        let c = template();
        assert_eq!(
            c.hardcode_witness("0"),
            Err(CircuitError::WitnessLength {
                expected: 2,
                got: 1
            })
        );
        assert_eq!(c.hardcode_witness("0x"), Err(CircuitError::WitnessChar('x')));
    }

    #[test]
    fn gate_validation() {
        let mut c = Circuit::new(3);
        assert_eq!(
            c.push(Gate::H(3)),
            Err(CircuitError::IndexOutOfRange { index: 3, width: 3 })
        );
        assert_eq!(
            c.push(Gate::CCX(0, 0, 1)),
            Err(CircuitError::CcxIndicesClash(0, 0, 1))
        );
        assert_eq!(
            c.set_witness(vec![1, 1]),
            Err(CircuitError::DuplicateWitness(1))
        );
    }

    #[test]
    fn parse_round_trip_golden() {
        let text = "\
# toy verifier
qubits 4

h 0      # coin
x 1
ccx 0 1 2
output 2
witness 0 1
";
        let c = Circuit::parse(text).unwrap();
        assert_eq!(c, template());
        let c2 = Circuit::parse(&c.to_text()).unwrap();
        assert_eq!(c2, c);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = |text: &str| Circuit::parse(text).unwrap_err();

        match bad("qubits 2\nfoo 1\n") {
            CircuitError::Parse { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("unknown directive"), "{msg}");
            }
            e => panic!("unexpected {e:?}"),
        }
        match bad("qubits 2\nh 5\n") {
            CircuitError::Parse { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("out of range"), "{msg}");
            }
            e => panic!("unexpected {e:?}"),
        }
        match bad("qubits 3\noutput 0\noutput 1\n") {
            CircuitError::Parse { line, msg } => {
                assert_eq!(line, 3);
                assert!(msg.contains("duplicate `output`"), "{msg}");
            }
            e => panic!("unexpected {e:?}"),
        }
        match bad("h 0\n") {
            CircuitError::Parse { line, msg } => {
                assert_eq!(line, 1);
                assert!(msg.contains("before `qubits`"), "{msg}");
            }
            e => panic!("unexpected {e:?}"),
        }
        match bad("qubits 2\nccx 0 1\n") {
            CircuitError::Parse { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("3 argument"), "{msg}");
            }
            e => panic!("unexpected {e:?}"),
        }
        match bad("# nothing\n") {
            CircuitError::Parse { msg, .. } => assert!(msg.contains("missing `qubits`"), "{msg}"),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn layout_ranges_disjoint_and_cover() {
        let layout = RegisterLayout::new(3, 2, 4);
        assert_eq!(layout.width(), 11);
        let mut seen = vec![false; layout.width()];
        let mut mark = |q: usize| {
            assert!(!seen[q], "wire {q} assigned twice");
            seen[q] = true;
        };
        mark(layout.b());
        mark(layout.o());
        layout.r().for_each(&mut mark);
        layout.s().for_each(&mut mark);
        layout.anc().for_each(&mut mark);
        assert!(seen.iter().all(|&s| s));
        assert_eq!(layout.r_qubit(0), 2);
        assert_eq!(layout.s_qubit(0), 5);
        assert_eq!(layout.anc().start, 7);
    }

    fn arb_gate(width: usize) -> impl Strategy<Value = Gate> {
        prop_oneof![
            (0..width).prop_map(Gate::H),
            (0..width).prop_map(Gate::X),
            (0..width, 0..width, 0..width)
                .prop_filter("distinct", |(a, b, c)| a != b && a != c && b != c)
                .prop_map(|(a, b, c)| Gate::CCX(a, b, c)),
        ]
    }

    proptest! {
        #[test]
        fn text_round_trip(width in 3usize..10,
                           gates in prop::collection::vec(arb_gate(3), 0..20),
                           output in prop::option::of(0usize..3),
                           witness in prop::collection::btree_set(0usize..3, 0..3)) {
            let mut c = Circuit::new(width);
            c.extend_gates(gates).unwrap();
            if let Some(q) = output {
                c.set_output(q).unwrap();
            }
            c.set_witness(witness.into_iter().collect()).unwrap();
            let parsed = Circuit::parse(&c.to_text()).unwrap();
            prop_assert_eq!(parsed, c);
        }

        #[test]
        fn inverse_involution(gates in prop::collection::vec(arb_gate(5), 0..30)) {
            let mut c = Circuit::new(5);
            c.extend_gates(gates).unwrap();
            prop_assert_eq!(c.inverse().inverse(), c);
        }
    }
}
