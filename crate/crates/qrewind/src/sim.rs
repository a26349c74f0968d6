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

//! Exact sparse state-vector simulation, plus two measurement semantics
//! that must agree: branch enumeration over sub-normalized states, and
//! compilation of a measured protocol into one unitary circuit with a
//! verdict qubit.
//!
//! A state is a map from basis index to integer numerator together with a
//! single shared exponent t, the amplitude being numerator/√2^t. Gates
//! never renormalize, so Σ numerator² / 2^t is conserved exactly; for a
//! projected branch that quantity is the branch probability itself, which
//! is how the whole analysis avoids irrational factors like 1/√(1-p).

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num::bigint::BigInt;
use num::traits::Zero;
use thiserror::Error;

use crate::amp::{Amp, Dyadic};
use crate::circuit::{Circuit, Gate};
use crate::gadgets::{self, GadgetError, Polarity};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("state width {0} not in [1, 64]")]
    WidthOutOfRange(usize),
    #[error("gate touches qubit {index}, state width is {width}")]
    GateOutOfRange { index: usize, width: usize },
    #[error("basis index {index} needs more than {width} qubits")]
    BasisOutOfRange { index: u64, width: usize },
    #[error("operation requires a normalized state, found norm² = {0}")]
    Unnormalized(Dyadic),
    #[error("state widths differ: {0} vs {1}")]
    WidthMismatch(usize, usize),
    #[error("cannot add states with half-exponents of different parity: {0} vs {1}")]
    AddParityMismatch(u32, u32),
    #[error("circuit width {circuit} does not fit protocol width {protocol}")]
    SegmentWidthMismatch { circuit: usize, protocol: usize },
    #[error("duplicate measurement label {0:?}")]
    DuplicateLabel(String),
    #[error("condition references label {0:?} before any measurement defines it")]
    UnknownLabel(String),
    #[error("gadget compilation failed: {0}")]
    Gadget(#[from] GadgetError),
    #[error("circuit construction failed: {0}")]
    Circuit(#[from] crate::circuit::CircuitError),
}

/// Sparse exact state on `width` qubits. Bit `i` of a basis index is the
/// value of qubit `i`.
#[derive(Debug, Clone)]
pub struct StateVector {
    width: usize,
    half_exp: u32,
    entries: HashMap<u64, BigInt>,
    // support can only grow through H gates; this tracks an upper bound
    // exponent for a cheap per-gate sparsity assertion
    h_bound: u32,
}

impl PartialEq for StateVector {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.half_exp == other.half_exp
            && self.entries == other.entries
    }
}

impl Eq for StateVector {}

/// `init_state`: the all-zero computational basis state.
pub fn init_state(width: usize) -> Result<StateVector, SimError> {
    StateVector::basis_state(width, 0)
}

impl StateVector {
    pub fn basis_state(width: usize, index: u64) -> Result<StateVector, SimError> {
        if width == 0 || width > 64 {
            return Err(SimError::WidthOutOfRange(width));
        }
        if width < 64 && index >> width != 0 {
            return Err(SimError::BasisOutOfRange { index, width });
        }
        let mut entries = HashMap::new();
        entries.insert(index, BigInt::from(1));
        Ok(StateVector {
            width,
            half_exp: 0,
            entries,
            h_bound: 0,
        })
    }

    /// A state with no support. Useful as an accumulator for sums.
    pub fn empty(width: usize) -> Result<StateVector, SimError> {
        let mut s = StateVector::basis_state(width, 0)?;
        s.entries.clear();
        s.h_bound = width as u32;
        Ok(s)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn half_exp(&self) -> u32 {
        self.half_exp
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Exact amplitude at one basis index.
    pub fn amplitude(&self, index: u64) -> Amp {
        match self.entries.get(&index) {
            Some(num) => Amp::new(num.clone(), self.half_exp),
            None => Amp::zero(),
        }
    }

    /// Entries sorted by basis index, for deterministic output.
    pub fn sorted_entries(&self) -> Vec<(u64, BigInt)> {
        let mut v: Vec<(u64, BigInt)> = self
            .entries
            .iter()
            .map(|(&k, n)| (k, n.clone()))
            .collect();
        v.sort_unstable_by_key(|&(k, _)| k);
        v
    }

    fn sum_sq(&self) -> BigInt {
        self.entries.values().map(|n| n * n).sum()
    }

    /// Σ numerator² / 2^t. Equals 1 for full states; for a projected
    /// branch it is the probability of the path that produced it.
    pub fn norm_sq(&self) -> Dyadic {
        Dyadic::new(self.sum_sq(), self.half_exp)
    }

    /// `apply_gate`: one gate, in place, exactly.
    pub fn apply_gate(&mut self, gate: &Gate) -> Result<(), SimError> {
        for q in gate.qubits() {
            if q >= self.width {
                return Err(SimError::GateOutOfRange {
                    index: q,
                    width: self.width,
                });
            }
        }
        match *gate {
            Gate::X(q) => {
                let bit = 1u64 << q;
                let mut next = HashMap::with_capacity(self.entries.len());
                for (k, v) in self.entries.drain() {
                    next.insert(k ^ bit, v);
                }
                self.entries = next;
            }
            Gate::CCX(c1, c2, t) => {
                let (b1, b2, bt) = (1u64 << c1, 1u64 << c2, 1u64 << t);
                let mut next = HashMap::with_capacity(self.entries.len());
                for (k, v) in self.entries.drain() {
                    let k = if k & b1 != 0 && k & b2 != 0 { k ^ bt } else { k };
                    next.insert(k, v);
                }
                self.entries = next;
            }
            Gate::H(q) => {
                let bit = 1u64 << q;
                let mut next: HashMap<u64, BigInt> =
                    HashMap::with_capacity(self.entries.len() * 2);
                for (k, v) in self.entries.drain() {
                    if k & bit == 0 {
                        add_num(&mut next, k, v.clone());
                        add_num(&mut next, k | bit, v);
                    } else {
                        add_num(&mut next, k & !bit, v.clone());
                        add_num(&mut next, k, -v);
                    }
                }
                next.retain(|_, v| !v.is_zero());
                self.entries = next;
                self.half_exp += 1;
                self.h_bound = self.h_bound.saturating_add(1);
            }
        }
        let bound = self.h_bound.min(self.width as u32);
        debug_assert!(
            bound >= 64 || self.entries.len() as u64 <= 1u64 << bound,
            "support {} exceeds 2^{}",
            self.entries.len(),
            bound
        );
        Ok(())
    }

    /// Like `apply_gate` but re-verifies exact norm conservation around the
    /// single gate. For tests; segment-level checks cover production use.
    pub fn apply_gate_checked(&mut self, gate: &Gate) -> Result<(), SimError> {
        let before = self.sum_sq();
        let t_before = self.half_exp;
        self.apply_gate(gate)?;
        let shifted = before << (self.half_exp - t_before);
        assert_eq!(shifted, self.sum_sq(), "gate {gate} broke unitarity");
        Ok(())
    }

    /// All gates of a circuit in order. In debug builds, verifies that the
    /// segment as a whole conserved Σ num² / 2^t exactly.
    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<(), SimError> {
        if circuit.width() > self.width {
            return Err(SimError::SegmentWidthMismatch {
                circuit: circuit.width(),
                protocol: self.width,
            });
        }
        #[cfg(debug_assertions)]
        let (sum_before, t_before) = (self.sum_sq(), self.half_exp);
        for g in circuit.gates() {
            self.apply_gate(g)?;
        }
        #[cfg(debug_assertions)]
        {
            let shifted = sum_before << (self.half_exp - t_before);
            debug_assert_eq!(shifted, self.sum_sq(), "segment broke unitarity");
        }
        Ok(())
    }

    /// `measure_prob`: exact probability of reading 1 on `qubit`.
    /// Defined for full states only; projected branches carry their
    /// probability in `norm_sq` instead.
    pub fn measure_prob(&self, qubit: usize) -> Result<Dyadic, SimError> {
        if qubit >= self.width {
            return Err(SimError::GateOutOfRange {
                index: qubit,
                width: self.width,
            });
        }
        let norm = self.norm_sq();
        if !norm.is_one() {
            return Err(SimError::Unnormalized(norm));
        }
        let bit = 1u64 << qubit;
        let sum: BigInt = self
            .entries
            .iter()
            .filter(|(&k, _)| k & bit != 0)
            .map(|(_, n)| n * n)
            .sum();
        Ok(Dyadic::new(sum, self.half_exp))
    }

    /// `branch_measure`: projects onto outcome 0 and outcome 1 without
    /// renormalizing. Probabilities are absolute (relative to norm 1), so
    /// on a sub-normalized parent they sum to the parent's norm².
    pub fn branch_measure(&self, qubit: usize) -> (BranchOutcome, BranchOutcome) {
        let bit = 1u64 << qubit;
        let mut zero = self.clone();
        let mut one = self.clone();
        zero.entries.retain(|&k, _| k & bit == 0);
        one.entries.retain(|&k, _| k & bit != 0);
        (
            BranchOutcome {
                probability: zero.norm_sq(),
                post_state: zero,
            },
            BranchOutcome {
                probability: one.norm_sq(),
                post_state: one,
            },
        )
    }

    /// Divides all numerators by 2 and t by 2 while possible, emptying the
    /// exponent when nothing is stored. Gate application skips this; call
    /// it before comparing or reporting states.
    pub fn canonical_reduce(&mut self) {
        if self.entries.is_empty() {
            self.half_exp = 0;
            return;
        }
        while self.half_exp >= 2 && self.entries.values().all(|n| !n.bit(0)) {
            for n in self.entries.values_mut() {
                *n /= 2;
            }
            self.half_exp -= 2;
        }
    }

    pub fn canonicalized(&self) -> StateVector {
        let mut s = self.clone();
        s.canonical_reduce();
        s
    }

    /// Multiplies every amplitude by an exact dyadic scalar.
    pub fn scale_dyadic(&self, c: &Dyadic) -> StateVector {
        let mut out = self.clone();
        if c.is_zero() {
            out.entries.clear();
            return out;
        }
        for n in out.entries.values_mut() {
            *n *= c.num();
        }
        out.half_exp += 2 * c.exp();
        out
    }

    /// Multiplies every amplitude by an exact `m/√2^t` scalar.
    pub fn scale_amp(&self, c: &Amp) -> StateVector {
        let mut out = self.clone();
        if c.is_zero() {
            out.entries.clear();
            return out;
        }
        for n in out.entries.values_mut() {
            *n *= c.num();
        }
        out.half_exp += c.half_exp();
        out
    }

    pub fn negate(&self) -> StateVector {
        let mut out = self.clone();
        for n in out.entries.values_mut() {
            *n = -std::mem::take(n);
        }
        out
    }

    /// Exact vector sum. Fails when the half-exponent parities differ,
    /// mirroring scalar amplitude addition.
    pub fn checked_add(&self, other: &StateVector) -> Result<StateVector, SimError> {
        if self.width != other.width {
            return Err(SimError::WidthMismatch(self.width, other.width));
        }
        if self.is_empty() {
            return Ok(other.clone());
        }
        if other.is_empty() {
            return Ok(self.clone());
        }
        if self.half_exp % 2 != other.half_exp % 2 {
            return Err(SimError::AddParityMismatch(self.half_exp, other.half_exp));
        }
        let target = self.half_exp.max(other.half_exp);
        let mut entries = HashMap::with_capacity(self.entries.len() + other.entries.len());
        for (s, shift) in [
            (self, (target - self.half_exp) / 2),
            (other, (target - other.half_exp) / 2),
        ] {
            for (&k, n) in &s.entries {
                add_num(&mut entries, k, n << shift);
            }
        }
        entries.retain(|_, v| !v.is_zero());
        Ok(StateVector {
            width: self.width,
            half_exp: target,
            entries,
            h_bound: self.width as u32,
        })
    }
}

fn add_num(map: &mut HashMap<u64, BigInt>, key: u64, value: BigInt) {
    use std::collections::hash_map::Entry;
    match map.entry(key) {
        Entry::Occupied(mut e) => *e.get_mut() += value,
        Entry::Vacant(e) => {
            e.insert(value);
        }
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let reduced = self.canonicalized();
        if reduced.is_empty() {
            return write!(f, "0");
        }
        for (i, (k, n)) in reduced.sorted_entries().into_iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({n}/\u{221a}2^{})|{k:0w$b}\u{27e9}", reduced.half_exp, w = reduced.width)?;
        }
        Ok(())
    }
}

/// One projective branch: its absolute probability and the unrenormalized
/// post-measurement state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchOutcome {
    pub probability: Dyadic,
    pub post_state: StateVector,
}

/// What a classical decision does with the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject,
    Continue,
}

/// Boolean formula over measurement labels. Classical control in a
/// protocol is restricted to these by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoolExpr {
    Const(bool),
    Label(String),
    Not(Box<BoolExpr>),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
}

impl BoolExpr {
    pub fn label(name: &str) -> BoolExpr {
        BoolExpr::Label(name.to_string())
    }

    pub fn not(e: BoolExpr) -> BoolExpr {
        BoolExpr::Not(Box::new(e))
    }

    pub fn and(a: BoolExpr, b: BoolExpr) -> BoolExpr {
        BoolExpr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: BoolExpr, b: BoolExpr) -> BoolExpr {
        BoolExpr::Or(Box::new(a), Box::new(b))
    }

    pub fn eval(&self, labels: &BTreeMap<String, bool>) -> Result<bool, SimError> {
        Ok(match self {
            BoolExpr::Const(b) => *b,
            BoolExpr::Label(name) => *labels
                .get(name)
                .ok_or_else(|| SimError::UnknownLabel(name.clone()))?,
            BoolExpr::Not(e) => !e.eval(labels)?,
            BoolExpr::And(a, b) => a.eval(labels)? && b.eval(labels)?,
            BoolExpr::Or(a, b) => a.eval(labels)? || b.eval(labels)?,
        })
    }

    fn labels_used(&self, out: &mut Vec<String>) {
        match self {
            BoolExpr::Const(_) => {}
            BoolExpr::Label(name) => out.push(name.clone()),
            BoolExpr::Not(e) => e.labels_used(out),
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
                a.labels_used(out);
                b.labels_used(out);
            }
        }
    }

    /// Constant folding and double-negation removal; keeps the formula
    /// small before gate compilation.
    fn simplified(&self) -> BoolExpr {
        match self {
            BoolExpr::Const(_) | BoolExpr::Label(_) => self.clone(),
            BoolExpr::Not(e) => match e.simplified() {
                BoolExpr::Const(b) => BoolExpr::Const(!b),
                BoolExpr::Not(inner) => *inner,
                other => BoolExpr::not(other),
            },
            BoolExpr::And(a, b) => match (a.simplified(), b.simplified()) {
                (BoolExpr::Const(false), _) | (_, BoolExpr::Const(false)) => {
                    BoolExpr::Const(false)
                }
                (BoolExpr::Const(true), x) | (x, BoolExpr::Const(true)) => x,
                (x, y) => BoolExpr::and(x, y),
            },
            BoolExpr::Or(a, b) => match (a.simplified(), b.simplified()) {
                (BoolExpr::Const(true), _) | (_, BoolExpr::Const(true)) => BoolExpr::Const(true),
                (BoolExpr::Const(false), x) | (x, BoolExpr::Const(false)) => x,
                (x, y) => BoolExpr::or(x, y),
            },
        }
    }
}

/// One protocol step. A run that falls off the end of the step list
/// rejects: acceptance always comes from an explicit decision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Unitary(Circuit),
    Measure { qubit: usize, label: String },
    Decision {
        condition: BoolExpr,
        if_true: Verdict,
        if_false: Verdict,
    },
}

/// A measured protocol: quantum segments interleaved with single-qubit
/// measurements and classical decisions over their recorded outcomes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Protocol {
    pub width: usize,
    pub steps: Vec<Step>,
}

impl Protocol {
    pub fn new(width: usize, steps: Vec<Step>) -> Result<Protocol, SimError> {
        let p = Protocol { width, steps };
        p.validate()?;
        Ok(p)
    }

    /// Labels unique, decisions only look backwards, segments fit the
    /// declared width.
    pub fn validate(&self) -> Result<(), SimError> {
        if self.width == 0 || self.width > 64 {
            return Err(SimError::WidthOutOfRange(self.width));
        }
        let mut defined: Vec<String> = Vec::new();
        for step in &self.steps {
            match step {
                Step::Unitary(c) => {
                    if c.width() > self.width {
                        return Err(SimError::SegmentWidthMismatch {
                            circuit: c.width(),
                            protocol: self.width,
                        });
                    }
                }
                Step::Measure { qubit, label } => {
                    if *qubit >= self.width {
                        return Err(SimError::GateOutOfRange {
                            index: *qubit,
                            width: self.width,
                        });
                    }
                    if defined.iter().any(|l| l == label) {
                        return Err(SimError::DuplicateLabel(label.clone()));
                    }
                    defined.push(label.clone());
                }
                Step::Decision { condition, .. } => {
                    let mut used = Vec::new();
                    condition.labels_used(&mut used);
                    for l in used {
                        if !defined.contains(&l) {
                            return Err(SimError::UnknownLabel(l));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn measurement_labels(&self) -> Vec<String> {
        self.steps
            .iter()
            .filter_map(|s| match s {
                Step::Measure { label, .. } => Some(label.clone()),
                _ => None,
            })
            .collect()
    }
}

/// Exact result of branch-enumerating a protocol from the all-zero state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolRun {
    pub p_accept: Dyadic,
    pub p_reject: Dyadic,
    /// For each measurement label, the absolute probability that it reads 1.
    pub label_marginals: BTreeMap<String, Dyadic>,
}

/// `run_protocol`: executes every measurement branch exactly, carrying
/// sub-normalized states, and returns the verdict distribution plus the
/// marginal of each recorded outcome.
pub fn run_protocol(protocol: &Protocol) -> Result<ProtocolRun, SimError> {
    protocol.validate()?;
    let mut run = ProtocolRun {
        p_accept: Dyadic::zero(),
        p_reject: Dyadic::zero(),
        label_marginals: protocol
            .measurement_labels()
            .into_iter()
            .map(|l| (l, Dyadic::zero()))
            .collect(),
    };
    let state = init_state(protocol.width)?;
    walk(protocol, 0, state, BTreeMap::new(), &mut run)?;
    debug_assert!(
        &run.p_accept + &run.p_reject == Dyadic::one(),
        "verdict probabilities must sum to 1"
    );
    Ok(run)
}

fn walk(
    protocol: &Protocol,
    from: usize,
    mut state: StateVector,
    labels: BTreeMap<String, bool>,
    run: &mut ProtocolRun,
) -> Result<(), SimError> {
    for (idx, step) in protocol.steps.iter().enumerate().skip(from) {
        match step {
            Step::Unitary(c) => state.apply_circuit(c)?,
            Step::Measure { qubit, label } => {
                let (zero, one) = state.branch_measure(*qubit);
                let marginal = run
                    .label_marginals
                    .get_mut(label)
                    .expect("validated label");
                *marginal = &*marginal + &one.probability;
                for (branch, value) in [(one, true), (zero, false)] {
                    if branch.post_state.is_empty() {
                        continue;
                    }
                    let mut branch_labels = labels.clone();
                    branch_labels.insert(label.clone(), value);
                    walk(protocol, idx + 1, branch.post_state, branch_labels, run)?;
                }
                return Ok(());
            }
            Step::Decision {
                condition,
                if_true,
                if_false,
            } => {
                let verdict = if condition.eval(&labels)? {
                    *if_true
                } else {
                    *if_false
                };
                match verdict {
                    Verdict::Accept => {
                        run.p_accept = &run.p_accept + &state.norm_sq();
                        return Ok(());
                    }
                    Verdict::Reject => {
                        run.p_reject = &run.p_reject + &state.norm_sq();
                        return Ok(());
                    }
                    Verdict::Continue => {}
                }
            }
        }
    }
    run.p_reject = &run.p_reject + &state.norm_sq();
    Ok(())
}

/// The acceptance condition of a protocol as one Boolean formula over its
/// measurement labels: the union over decisions of "reached this decision
/// and it accepted".
fn acceptance_formula(protocol: &Protocol) -> BoolExpr {
    let mut reach = BoolExpr::Const(true);
    let mut accept = BoolExpr::Const(false);
    for step in &protocol.steps {
        if let Step::Decision {
            condition,
            if_true,
            if_false,
        } = step
        {
            let here_true = BoolExpr::and(reach.clone(), condition.clone());
            let here_false = BoolExpr::and(reach.clone(), BoolExpr::not(condition.clone()));
            let mut next_reach = BoolExpr::Const(false);
            for (verdict, cond) in [(if_true, here_true), (if_false, here_false)] {
                match verdict {
                    Verdict::Accept => accept = BoolExpr::or(accept, cond),
                    Verdict::Reject => {}
                    Verdict::Continue => next_reach = BoolExpr::or(next_reach, cond),
                }
            }
            reach = next_reach;
        }
    }
    accept.simplified()
}

/// Stack allocator over a contiguous scratch range; tracks the high-water
/// mark so the final circuit width is known only after emission.
struct ScratchPool {
    base: usize,
    sp: usize,
    high: usize,
}

impl ScratchPool {
    fn new(base: usize) -> Self {
        ScratchPool { base, sp: 0, high: 0 }
    }

    fn alloc(&mut self) -> usize {
        let q = self.base + self.sp;
        self.sp += 1;
        self.high = self.high.max(self.sp);
        q
    }

    fn alloc_n(&mut self, n: usize) -> Vec<usize> {
        (0..n).map(|_| self.alloc()).collect()
    }

    fn free(&mut self, n: usize) {
        debug_assert!(self.sp >= n);
        self.sp -= n;
    }
}

/// Flips `target` exactly when the pattern of record qubits matches,
/// spending scratch only for the gadget's internal chain.
fn emit_pattern_flip(
    controls: &[(usize, Polarity)],
    target: usize,
    pool: &mut ScratchPool,
    gates: &mut Vec<Gate>,
) -> Result<(), SimError> {
    let n = gadgets::mcx_ancillas_needed(controls.len());
    let anc = pool.alloc_n(n);
    gates.extend(gadgets::compile_mcx(controls, target, &anc)?);
    pool.free(n);
    Ok(())
}

fn as_literal(e: &BoolExpr) -> Option<(&str, Polarity)> {
    match e {
        BoolExpr::Label(name) => Some((name, Polarity::Positive)),
        BoolExpr::Not(inner) => match inner.as_ref() {
            BoolExpr::Label(name) => Some((name, Polarity::Negative)),
            _ => None,
        },
        _ => None,
    }
}

fn flatten<'a>(e: &'a BoolExpr, conj: bool, out: &mut Vec<&'a BoolExpr>) {
    match (conj, e) {
        (true, BoolExpr::And(a, b)) | (false, BoolExpr::Or(a, b)) => {
            flatten(a, conj, out);
            flatten(b, conj, out);
        }
        _ => out.push(e),
    }
}

/// All-literal conjunction over record wires, deduplicated; `None` when a
/// term is not a literal, `Some(None)` when the conjunction is
/// contradictory and never fires.
fn literal_conjunction(
    terms: &[&BoolExpr],
    records: &BTreeMap<String, usize>,
    negate: bool,
) -> Option<Option<Vec<(usize, Polarity)>>> {
    let mut controls: Vec<(usize, Polarity)> = Vec::new();
    for t in terms {
        let (name, mut pol) = as_literal(t)?;
        if negate {
            pol = match pol {
                Polarity::Positive => Polarity::Negative,
                Polarity::Negative => Polarity::Positive,
            };
        }
        let wire = *records.get(name).expect("validated label");
        match controls.iter().find(|&&(w, _)| w == wire) {
            Some(&(_, existing)) if existing == pol => {}
            Some(_) => return Some(None),
            None => controls.push((wire, pol)),
        }
    }
    Some(Some(controls))
}

/// Emits gates that XOR the value of `expr` into `target`, restoring all
/// scratch. Every emitted gate is X or CCX, so the inverse of any emitted
/// block is the reversed block.
fn emit_formula(
    expr: &BoolExpr,
    target: usize,
    records: &BTreeMap<String, usize>,
    pool: &mut ScratchPool,
    gates: &mut Vec<Gate>,
) -> Result<(), SimError> {
    match expr {
        BoolExpr::Const(false) => Ok(()),
        BoolExpr::Const(true) => {
            gates.push(Gate::X(target));
            Ok(())
        }
        BoolExpr::Label(_) => {
            let (name, pol) = as_literal(expr).expect("label is a literal");
            let wire = *records.get(name).expect("validated label");
            emit_pattern_flip(&[(wire, pol)], target, pool, gates)
        }
        BoolExpr::Not(inner) => {
            emit_formula(inner, target, records, pool, gates)?;
            gates.push(Gate::X(target));
            Ok(())
        }
        BoolExpr::And(_, _) | BoolExpr::Or(_, _) => {
            let conj = matches!(expr, BoolExpr::And(_, _));
            let mut terms = Vec::new();
            flatten(expr, conj, &mut terms);
            // conjunction of literals is one multi-controlled flip; a
            // disjunction becomes one by De Morgan plus a final X
            if let Some(maybe_controls) = literal_conjunction(&terms, records, !conj) {
                match maybe_controls {
                    Some(controls) if conj => {
                        return emit_pattern_flip(&controls, target, pool, gates);
                    }
                    Some(controls) => {
                        emit_pattern_flip(&controls, target, pool, gates)?;
                        gates.push(Gate::X(target));
                        return Ok(());
                    }
                    None if conj => return Ok(()),
                    None => {
                        gates.push(Gate::X(target));
                        return Ok(());
                    }
                }
            }
            // general case: evaluate both sides into scratch, combine with
            // one Toffoli, then uncompute by reversal
            let (a, b) = match expr {
                BoolExpr::And(a, b) | BoolExpr::Or(a, b) => (a, b),
                _ => unreachable!(),
            };
            let s1 = pool.alloc();
            let s2 = pool.alloc();
            let mut side = Vec::new();
            emit_formula(a, s1, records, pool, &mut side)?;
            emit_formula(b, s2, records, pool, &mut side)?;
            if !conj {
                side.push(Gate::X(s1));
                side.push(Gate::X(s2));
            }
            gates.extend(side.iter().cloned());
            gates.push(Gate::CCX(s1, s2, target));
            if !conj {
                gates.push(Gate::X(target));
            }
            gates.extend(side.into_iter().rev());
            pool.free(2);
            Ok(())
        }
    }
}

/// `defer_measurements`: compiles a measured protocol into one unitary
/// circuit. Each measurement becomes a copy of the measured qubit onto a
/// fresh record wire, conditional segments run unconditionally, and the
/// acceptance formula is evaluated into a verdict wire marked as the
/// circuit's output. Measuring that wire reproduces the branching
/// semantics' acceptance probability exactly.
///
/// Wire layout: original protocol wires, then one record wire per
/// measurement in protocol order, then the verdict, then shared scratch
/// (flagged as ancillas, all restored to zero).
pub fn defer_measurements(protocol: &Protocol) -> Result<Circuit, SimError> {
    protocol.validate()?;
    let labels = protocol.measurement_labels();
    let records: BTreeMap<String, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.clone(), protocol.width + i))
        .collect();
    let verdict = protocol.width + labels.len();
    let mut pool = ScratchPool::new(verdict + 1);
    let mut gates: Vec<Gate> = Vec::new();

    for step in &protocol.steps {
        match step {
            Step::Unitary(c) => gates.extend(c.gates().iter().cloned()),
            Step::Measure { qubit, label } => {
                let record = records[label];
                emit_pattern_flip(
                    &[(*qubit, Polarity::Positive)],
                    record,
                    &mut pool,
                    &mut gates,
                )?;
            }
            Step::Decision { .. } => {}
        }
    }
    let formula = acceptance_formula(protocol);
    emit_formula(&formula, verdict, &records, &mut pool, &mut gates)?;

    let mut circuit = Circuit::new(verdict + 1 + pool.high);
    circuit.extend_gates(gates)?;
    circuit.set_output(verdict)?;
    circuit.set_ancillas(verdict + 1..verdict + 1 + pool.high);
    Ok(circuit)
}

/// Acceptance probability under the deferred semantics: compile, run the
/// single circuit, measure the verdict wire. Must equal
/// `run_protocol(...).p_accept` exactly on every protocol.
pub fn deferred_acceptance_prob(protocol: &Protocol) -> Result<Dyadic, SimError> {
    let circuit = defer_measurements(protocol)?;
    let mut s = init_state(circuit.width())?;
    s.apply_circuit(&circuit)?;
    let verdict = circuit
        .output_qubit()
        .expect("deferred circuit always sets a verdict output");
    s.measure_prob(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn h_circuit(width: usize, qubits: &[usize]) -> Circuit {
        let mut c = Circuit::new(width);
        for &q in qubits {
            c.push(Gate::H(q)).unwrap();
        }
        c
    }

    #[test]
    fn init_state_examples() {
        let s = init_state(3).unwrap();
        assert_eq!(s.sorted_entries(), vec![(0, BigInt::from(1))]);
        assert_eq!(s.half_exp(), 0);
        assert_eq!(s.norm_sq(), Dyadic::one());
        assert_eq!(s.measure_prob(1).unwrap(), Dyadic::zero());
        assert!(init_state(0).is_err());
        assert!(init_state(65).is_err());
    }

    #[test]
    fn hadamard_examples() {
        let mut s = init_state(1).unwrap();
        s.apply_gate_checked(&Gate::H(0)).unwrap();
        assert_eq!(
            s.sorted_entries(),
            vec![(0, BigInt::from(1)), (1, BigInt::from(1))]
        );
        assert_eq!(s.half_exp(), 1);

        s.apply_gate_checked(&Gate::H(0)).unwrap();
        assert_eq!(s.sorted_entries(), vec![(0, BigInt::from(2))]);
        assert_eq!(s.half_exp(), 2);
        assert_eq!(s.norm_sq(), Dyadic::one());
        let reduced = s.canonicalized();
        assert_eq!(reduced.sorted_entries(), vec![(0, BigInt::from(1))]);
        assert_eq!(reduced.half_exp(), 0);
    }

    #[test]
    fn toffoli_example() {
        let mut s = StateVector::basis_state(3, 0b011).unwrap();
        s.apply_gate_checked(&Gate::CCX(0, 1, 2)).unwrap();
        assert_eq!(s.sorted_entries(), vec![(0b111, BigInt::from(1))]);
    }

    #[test]
    fn measure_prob_examples() {
        let mut s = init_state(1).unwrap();
        s.apply_gate(&Gate::H(0)).unwrap();
        assert_eq!(s.measure_prob(0).unwrap(), Dyadic::one_half());

        let mut s = init_state(3).unwrap();
        s.apply_circuit(&{
            let mut c = h_circuit(3, &[0, 1]);
            c.push(Gate::CCX(0, 1, 2)).unwrap();
            c
        })
        .unwrap();
        assert_eq!(s.measure_prob(2).unwrap(), Dyadic::new(1, 2));
    }

    #[test]
    fn measure_prob_rejects_subnormalized() {
        let mut s = init_state(1).unwrap();
        s.apply_gate(&Gate::H(0)).unwrap();
        let (zero, _) = s.branch_measure(0);
        assert!(matches!(
            zero.post_state.measure_prob(0),
            Err(SimError::Unnormalized(_))
        ));
    }

    #[test]
    fn branch_measure_examples() {
        let mut s = init_state(1).unwrap();
        s.apply_gate(&Gate::H(0)).unwrap();
        let (zero, one) = s.branch_measure(0);
        assert_eq!(zero.probability, Dyadic::one_half());
        assert_eq!(one.probability, Dyadic::one_half());
        assert_eq!(zero.post_state.sorted_entries(), vec![(0, BigInt::from(1))]);
        assert_eq!(one.post_state.sorted_entries(), vec![(1, BigInt::from(1))]);

        let basis_one = StateVector::basis_state(1, 1).unwrap();
        let (zero, one) = basis_one.branch_measure(0);
        assert!(zero.post_state.is_empty());
        assert_eq!(zero.probability, Dyadic::zero());
        assert_eq!(one.probability, Dyadic::one());
    }

    #[test]
    fn branch_probabilities_sum_to_parent_norm() {
        // 2-qubit uniform state with one entry projected away:
        // norm² = 3/4 at t = 2, and the two branches split it exactly
        let mut s = init_state(2).unwrap();
        s.apply_circuit(&h_circuit(2, &[0, 1])).unwrap();
        let mut three = s.clone();
        three.entries.remove(&0b11);
        assert_eq!(three.norm_sq(), Dyadic::new(3, 2));
        let (zero, one) = three.branch_measure(1);
        assert_eq!(&zero.probability + &one.probability, Dyadic::new(3, 2));
        assert_eq!(zero.probability, Dyadic::new(1, 1));
        assert_eq!(one.probability, Dyadic::new(1, 2));
    }

    #[test]
    fn circuit_then_inverse_is_identity_on_all_basis_states() {
        // independent involution oracle for circuit inversion
        let gates = [
            Gate::H(0),
            Gate::CCX(0, 1, 2),
            Gate::X(1),
            Gate::H(2),
            Gate::CCX(2, 0, 3),
            Gate::H(3),
        ];
        let mut c = Circuit::new(4);
        c.extend_gates(gates).unwrap();
        let inv = c.inverse();
        for basis in 0u64..16 {
            let mut s = StateVector::basis_state(4, basis).unwrap();
            s.apply_circuit(&c).unwrap();
            s.apply_circuit(&inv).unwrap();
            let expected = StateVector::basis_state(4, basis).unwrap();
            assert_eq!(s.canonicalized(), expected.canonicalized(), "basis {basis}");
        }
    }

    #[test]
    fn state_algebra() {
        let mut plus = init_state(1).unwrap();
        plus.apply_gate(&Gate::H(0)).unwrap();
        let minus = {
            let mut s = StateVector::basis_state(1, 1).unwrap();
            s.apply_gate(&Gate::H(0)).unwrap();
            s
        };
        // (|+⟩ + |−⟩)/√2 scaled by nothing: sum has only |0⟩ with num 2, t 1
        let sum = plus.checked_add(&minus).unwrap();
        assert_eq!(sum.sorted_entries(), vec![(0, BigInt::from(2))]);
        let direct = init_state(1).unwrap().scale_amp(&Amp::new(2, 1));
        assert_eq!(sum.canonicalized(), direct.canonicalized());

        let neg = plus.negate().checked_add(&plus).unwrap();
        assert!(neg.is_empty());

        let scaled = plus.scale_dyadic(&Dyadic::new(3, 1));
        assert_eq!(scaled.norm_sq(), Dyadic::new(9, 2));

        let parity_clash = init_state(1).unwrap().checked_add(&plus);
        assert!(matches!(parity_clash, Err(SimError::AddParityMismatch(0, 1))));
    }

    #[test]
    fn run_protocol_accept_iff_one() {
        let p = Protocol::new(
            1,
            vec![
                Step::Unitary(h_circuit(1, &[0])),
                Step::Measure {
                    qubit: 0,
                    label: "b".into(),
                },
                Step::Decision {
                    condition: BoolExpr::label("b"),
                    if_true: Verdict::Accept,
                    if_false: Verdict::Reject,
                },
            ],
        )
        .unwrap();
        let run = run_protocol(&p).unwrap();
        assert_eq!(run.p_accept, Dyadic::one_half());
        assert_eq!(run.p_reject, Dyadic::one_half());
        assert_eq!(run.label_marginals["b"], Dyadic::one_half());
    }

    #[test]
    fn run_protocol_unconditional_accept() {
        let p = Protocol::new(
            1,
            vec![Step::Decision {
                condition: BoolExpr::Const(true),
                if_true: Verdict::Accept,
                if_false: Verdict::Reject,
            }],
        )
        .unwrap();
        assert_eq!(run_protocol(&p).unwrap().p_accept, Dyadic::one());
    }

    #[test]
    fn run_protocol_fallthrough_rejects() {
        let p = Protocol::new(1, vec![Step::Unitary(h_circuit(1, &[0]))]).unwrap();
        let run = run_protocol(&p).unwrap();
        assert_eq!(run.p_accept, Dyadic::zero());
        assert_eq!(run.p_reject, Dyadic::one());
    }

    #[test]
    fn protocol_validation_errors() {
        let dup = Protocol::new(
            1,
            vec![
                Step::Measure { qubit: 0, label: "b".into() },
                Step::Measure { qubit: 0, label: "b".into() },
            ],
        );
        assert!(matches!(dup, Err(SimError::DuplicateLabel(_))));

        let fwd = Protocol::new(
            1,
            vec![
                Step::Decision {
                    condition: BoolExpr::label("later"),
                    if_true: Verdict::Accept,
                    if_false: Verdict::Reject,
                },
                Step::Measure { qubit: 0, label: "later".into() },
            ],
        );
        assert!(matches!(fwd, Err(SimError::UnknownLabel(_))));
    }

    fn verdict_prob(circuit: &Circuit) -> Dyadic {
        let mut s = init_state(circuit.width()).unwrap();
        s.apply_circuit(circuit).unwrap();
        s.measure_prob(circuit.output_qubit().unwrap()).unwrap()
    }

    #[test]
    fn defer_single_measurement_copies_to_verdict() {
        let p = Protocol::new(
            1,
            vec![
                Step::Unitary(h_circuit(1, &[0])),
                Step::Measure { qubit: 0, label: "b".into() },
                Step::Decision {
                    condition: BoolExpr::label("b"),
                    if_true: Verdict::Accept,
                    if_false: Verdict::Reject,
                },
            ],
        )
        .unwrap();
        let c = defer_measurements(&p).unwrap();
        assert_eq!(verdict_prob(&c), Dyadic::one_half());
        // verdict tracks the measured qubit exactly: joint state never has
        // them disagreeing
        let mut s = init_state(c.width()).unwrap();
        s.apply_circuit(&c).unwrap();
        let v = c.output_qubit().unwrap();
        for (k, _) in s.sorted_entries() {
            assert_eq!((k >> v) & 1, k & 1, "verdict diverged from source");
        }
    }

    #[test]
    fn defer_two_measurement_and_uses_one_ccx() {
        let p = Protocol::new(
            2,
            vec![
                Step::Unitary(h_circuit(2, &[0, 1])),
                Step::Measure { qubit: 0, label: "b1".into() },
                Step::Measure { qubit: 1, label: "b2".into() },
                Step::Decision {
                    condition: BoolExpr::and(BoolExpr::label("b1"), BoolExpr::label("b2")),
                    if_true: Verdict::Accept,
                    if_false: Verdict::Reject,
                },
            ],
        )
        .unwrap();
        let c = defer_measurements(&p).unwrap();
        let verdict = c.output_qubit().unwrap();
        let touching: Vec<&Gate> = c
            .gates()
            .iter()
            .filter(|g| g.qubits().any(|q| q == verdict))
            .collect();
        assert_eq!(touching, vec![&Gate::CCX(2, 3, verdict)]);
        assert_eq!(verdict_prob(&c), Dyadic::new(1, 2));
        assert_eq!(run_protocol(&p).unwrap().p_accept, Dyadic::new(1, 2));
    }

    #[test]
    fn defer_scratch_left_clean() {
        let p = Protocol::new(
            2,
            vec![
                Step::Unitary(h_circuit(2, &[0, 1])),
                Step::Measure { qubit: 0, label: "b1".into() },
                Step::Decision {
                    condition: BoolExpr::label("b1"),
                    if_true: Verdict::Accept,
                    if_false: Verdict::Continue,
                },
                Step::Unitary(h_circuit(2, &[0])),
                Step::Measure { qubit: 1, label: "b2".into() },
                Step::Decision {
                    condition: BoolExpr::or(
                        BoolExpr::label("b1"),
                        BoolExpr::and(
                            BoolExpr::not(BoolExpr::label("b1")),
                            BoolExpr::label("b2"),
                        ),
                    ),
                    if_true: Verdict::Accept,
                    if_false: Verdict::Reject,
                },
            ],
        )
        .unwrap();
        let c = defer_measurements(&p).unwrap();
        let mut s = init_state(c.width()).unwrap();
        s.apply_circuit(&c).unwrap();
        for (k, _) in s.sorted_entries() {
            for &a in c.ancilla_qubits() {
                assert_eq!((k >> a) & 1, 0, "scratch wire {a} dirty in {k:b}");
            }
        }
        assert_eq!(verdict_prob(&c), run_protocol(&p).unwrap().p_accept);
    }

    /// Random small protocols: branching and deferred semantics agree.
    fn arb_gate(width: usize) -> impl Strategy<Value = Gate> {
        prop_oneof![
            (0..width).prop_map(Gate::H),
            (0..width).prop_map(Gate::X),
            (0..width, 0..width, 0..width)
                .prop_filter("distinct", |(a, b, c)| a != b && a != c && b != c)
                .prop_map(|(a, b, c)| Gate::CCX(a, b, c)),
        ]
    }

    fn arb_condition(labels: Vec<String>) -> impl Strategy<Value = BoolExpr> {
        let leaf = prop_oneof![
            any::<bool>().prop_map(BoolExpr::Const),
            prop::sample::select(labels).prop_map(BoolExpr::Label),
        ];
        leaf.prop_recursive(3, 12, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(BoolExpr::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| BoolExpr::and(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| BoolExpr::or(a, b)),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn deferred_matches_branching(
            seg1 in prop::collection::vec(arb_gate(3), 0..6),
            seg2 in prop::collection::vec(arb_gate(3), 0..6),
            q1 in 0usize..3,
            q2 in 0usize..3,
            cond1 in arb_condition(vec!["m1".into()]),
            cond2 in arb_condition(vec!["m1".into(), "m2".into()]),
        ) {
            let mut c1 = Circuit::new(3);
            c1.extend_gates(seg1).unwrap();
            let mut c2 = Circuit::new(3);
            c2.extend_gates(seg2).unwrap();
            let p = Protocol::new(3, vec![
                Step::Unitary(c1),
                Step::Measure { qubit: q1, label: "m1".into() },
                Step::Decision { condition: cond1, if_true: Verdict::Accept, if_false: Verdict::Continue },
                Step::Unitary(c2),
                Step::Measure { qubit: q2, label: "m2".into() },
                Step::Decision { condition: cond2, if_true: Verdict::Accept, if_false: Verdict::Reject },
            ]).unwrap();
            let branching = run_protocol(&p).unwrap();
            let deferred = defer_measurements(&p).unwrap();
            prop_assert_eq!(branching.p_accept, verdict_prob(&deferred));
        }

        #[test]
        fn unitarity_random_circuits(gates in prop::collection::vec(arb_gate(4), 0..25)) {
            let mut s = init_state(4).unwrap();
            let h_count = gates.iter().filter(|g| matches!(g, Gate::H(_))).count() as u32;
            for g in &gates {
                s.apply_gate_checked(g).unwrap();
            }
            prop_assert_eq!(s.norm_sq(), Dyadic::one());
            prop_assert!(s.support_size() as u64 <= 1u64 << h_count.min(4));
        }
    }
}
