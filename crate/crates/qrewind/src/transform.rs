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

//! The perfect-completeness transformation.
//!
//! Given a verifier circuit V with its classical witness burned in, a
//! count claim k and a threshold c, this module builds the rewinding
//! protocol: a coin qubit B selects between running V (checking its
//! output) and preparing a uniform l-bit counter (checking counter > k),
//! the combined success bit lands in O, and a measure / invert / reflect /
//! repeat sequence turns first-try probability p into exactly
//! p + 4p(1-p)². When k equals the verifier's exact acceptance numerator,
//! p = 1/2 and the protocol accepts with probability 1.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amp::{Dyadic, Rational};
use crate::circuit::{Circuit, CircuitError, Gate, RegisterLayout};
use crate::gadgets::{
    self, compile_phase_flip_all_zero, comparator_patterns, GadgetError, Polarity,
};
use crate::sim::{BoolExpr, Protocol, SimError, Step, Verdict};

/// Label of the first output measurement in the transformed protocol.
pub const LABEL_O1: &str = "o1";
/// Label of the second (post-rewind) output measurement.
pub const LABEL_O2: &str = "o2";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("verifier circuit declares no output qubit")]
    MissingOutput,
    #[error("verifier circuit has zero width")]
    ZeroWidth,
    #[error("count claim {k} outside [1, 2^{l}]")]
    KOutOfRange { k: u64, l: usize },
    #[error("threshold {0} outside [0, 1]")]
    ThresholdOutOfRange(Rational),
    #[error("transformed circuit needs {width} qubits, exact simulation caps at 64")]
    TooWide { width: usize },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Gadget(#[from] GadgetError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Verdict of the classical pre-check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step1 {
    Proceed,
    Reject,
}

/// `step1_check`: reject exactly when k/2^l < c, by cross-multiplication.
pub fn step1_check(k: u64, l: usize, c: &Rational) -> Step1 {
    if Dyadic::new(k, l as u32) < *c {
        Step1::Reject
    } else {
        Step1::Proceed
    }
}

/// How the counter width l is derived from the hardcoded verifier.
///
/// The acceptance probability's exact denominator exponent is at most the
/// Hadamard count, so `HadamardCount` is the tight choice; `GateCount`
/// uses the full circuit size, which is never smaller. Either way l is
/// clamped to at least 1 so the counter register exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LMode {
    #[default]
    #[serde(rename = "hadamard")]
    HadamardCount,
    #[serde(rename = "gatecount")]
    GateCount,
}

pub fn compute_l(hardcoded: &Circuit, mode: LMode) -> usize {
    let count = match mode {
        LMode::HadamardCount => hardcoded.hadamard_count(),
        LMode::GateCount => hardcoded.gate_count(),
    };
    count.max(1)
}

/// Resolved inputs of one transformation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformParams {
    pub l: usize,
    pub c: Rational,
    pub k: u64,
    pub w: String,
}

impl TransformParams {
    pub fn validate(&self) -> Result<(), TransformError> {
        check_k(self.k, self.l)?;
        if self.c.is_negative() || self.c > Rational::one() {
            return Err(TransformError::ThresholdOutOfRange(self.c.clone()));
        }
        Ok(())
    }
}

fn check_k(k: u64, l: usize) -> Result<(), TransformError> {
    if k >= 1 && (l >= 64 || u128::from(k) <= 1u128 << l) {
        Ok(())
    } else {
        Err(TransformError::KOutOfRange { k, l })
    }
}

/// The assembled construction: wire plan, the core unitary Q, and the
/// measured protocol around it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformedProtocol {
    pub params: TransformParams,
    pub layout: RegisterLayout,
    pub q_circuit: Circuit,
    pub protocol: Protocol,
}

/// Sizes the wire plan for a verifier of width `n_r` and counter width
/// `l`. The ancilla pool covers the hungriest gadget: the all-zero
/// reflection over B, O, R, S needs one flag plus a Toffoli chain through
/// n_r + l ancillas, which dominates every comparator pattern.
pub fn plan_layout(n_r: usize, l: usize) -> RegisterLayout {
    RegisterLayout::new(n_r, l, n_r + l + 1)
}

/// `build_q`: the Step-2 unitary. Coin B and counter S go uniform, V runs
/// relocated on R, then O collects the two success cases: B = 0 with V's
/// output set, or B = 1 with the counter exceeding k.
pub fn build_q(
    v: &Circuit,
    k: u64,
    layout: &RegisterLayout,
) -> Result<Circuit, TransformError> {
    let l = layout.l();
    check_k(k, l)?;
    if v.width() == 0 {
        return Err(TransformError::ZeroWidth);
    }
    let out = v.output_qubit().ok_or(TransformError::MissingOutput)?;
    debug_assert!(v.width() <= layout.n_r());

    let mut q = Circuit::new(layout.width());
    q.push(Gate::H(layout.b()))?;
    for s in layout.s() {
        q.push(Gate::H(s))?;
    }
    for g in v.gates() {
        q.push(relocate(g, layout))?;
    }
    let pool: Vec<usize> = layout.anc().collect();
    // O ⊕= (B = 0) ∧ (V's output = 1)
    q.extend_gates(gadgets::compile_mcx(
        &[
            (layout.b(), Polarity::Negative),
            (layout.r_qubit(out), Polarity::Positive),
        ],
        layout.o(),
        &pool,
    )?)?;
    // O ⊕= (B = 1) ∧ (counter > k): B folds into each pattern as one more
    // positive control instead of conjugating the whole comparator
    for pattern in comparator_patterns(l, k)? {
        let mut controls = vec![(layout.b(), Polarity::Positive)];
        controls.extend(
            pattern
                .into_iter()
                .map(|(i, pol)| (layout.s_qubit(i), pol)),
        );
        q.extend_gates(gadgets::compile_mcx(&controls, layout.o(), &pool)?)?;
    }
    q.set_output(layout.o())?;
    q.set_ancillas(layout.anc());
    Ok(q)
}

fn relocate(g: &Gate, layout: &RegisterLayout) -> Gate {
    match *g {
        Gate::H(q) => Gate::H(layout.r_qubit(q)),
        Gate::X(q) => Gate::X(layout.r_qubit(q)),
        Gate::CCX(c1, c2, t) => {
            Gate::CCX(layout.r_qubit(c1), layout.r_qubit(c2), layout.r_qubit(t))
        }
    }
}

/// `build_protocol`: hardcodes the witness, derives l, and assembles the
/// full measured protocol. The classical pre-check is folded in as a
/// constant first decision, so a failing check yields an always-reject
/// protocol with no quantum steps executed.
pub fn build_protocol(
    v_template: &Circuit,
    w: &str,
    k: u64,
    c: &Rational,
    l_mode: LMode,
) -> Result<TransformedProtocol, TransformError> {
    if v_template.width() == 0 {
        return Err(TransformError::ZeroWidth);
    }
    if v_template.output_qubit().is_none() {
        return Err(TransformError::MissingOutput);
    }
    let hardcoded = v_template.hardcode_witness(w)?;
    let l = compute_l(&hardcoded, l_mode);
    let params = TransformParams {
        l,
        c: c.clone(),
        k,
        w: w.to_string(),
    };
    params.validate()?;

    let layout = plan_layout(hardcoded.width(), l);
    if layout.width() > 64 {
        return Err(TransformError::TooWide {
            width: layout.width(),
        });
    }
    let q_circuit = build_q(&hardcoded, k, &layout)?;
    let q_inverse = q_circuit.inverse();

    let reflect_qubits: Vec<usize> = (0..layout.s().end).collect();
    let pool: Vec<usize> = layout.anc().collect();
    let (flag, mcx_anc) = pool.split_first().expect("pool is never empty");
    let mut reflect = Circuit::new(layout.width());
    reflect.extend_gates(compile_phase_flip_all_zero(
        &reflect_qubits,
        *flag,
        mcx_anc,
    )?)?;

    let rejected = step1_check(k, l, c) == Step1::Reject;
    let protocol = Protocol::new(
        layout.width(),
        vec![
            Step::Decision {
                condition: BoolExpr::Const(rejected),
                if_true: Verdict::Reject,
                if_false: Verdict::Continue,
            },
            Step::Unitary(q_circuit.clone()),
            Step::Measure {
                qubit: layout.o(),
                label: LABEL_O1.into(),
            },
            Step::Decision {
                condition: BoolExpr::label(LABEL_O1),
                if_true: Verdict::Accept,
                if_false: Verdict::Continue,
            },
            Step::Unitary(q_inverse),
            Step::Unitary(reflect),
            Step::Unitary(q_circuit.clone()),
            Step::Measure {
                qubit: layout.o(),
                label: LABEL_O2.into(),
            },
            Step::Decision {
                condition: BoolExpr::label(LABEL_O2),
                if_true: Verdict::Accept,
                if_false: Verdict::Reject,
            },
        ],
    )?;

    Ok(TransformedProtocol {
        params,
        layout,
        q_circuit,
        protocol,
    })
}
