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

//! Reversible gadget compilers lowering protocol constructs to {X, CCX}
//! (plus exactly two H gates for the phase flip).
//!
//! Every gadget follows compute, use, uncompute discipline: ancillas that
//! enter as |0⟩ leave as |0⟩ on every input, which keeps them shareable
//! across gadgets and keeps garbage from entangling with the registers
//! that matter.

use crate::circuit::Gate;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GadgetError {
    #[error("gadget needs {needed} clean ancilla(s), only {available} supplied")]
    InsufficientAncillas { needed: usize, available: usize },
    #[error("qubit {0} appears twice in a gadget footprint")]
    DuplicateQubit(usize),
    #[error("comparison constant {k} outside [1, 2^{l}]")]
    KOutOfRange { k: u64, l: usize },
}

/// Control sense for a multi-controlled gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

/// Clean ancillas required by [`compile_mcx`] for the given control count.
///
/// The V-chain takes n-2 for n >= 2. A single control still costs one
/// ancilla: a controlled NOT cannot be built from {X, CCX} on two wires
/// alone, so it is realized as CCX against an ancilla forced to 1.
pub fn mcx_ancillas_needed(n_controls: usize) -> usize {
    match n_controls {
        0 => 0,
        1 => 1,
        n => n - 2,
    }
}

fn check_distinct(qubits: impl IntoIterator<Item = usize>) -> Result<(), GadgetError> {
    let mut seen = std::collections::BTreeSet::new();
    for q in qubits {
        if !seen.insert(q) {
            return Err(GadgetError::DuplicateQubit(q));
        }
    }
    Ok(())
}

/// Compiles X-on-`target` conditioned on every control matching its
/// polarity, using a compute/uncompute chain of Toffolis through the
/// supplied clean ancillas. Negative polarity is realized by conjugating
/// that control wire with X around the whole block, so all wires outside
/// `target` are restored exactly.
pub fn compile_mcx(
    controls: &[(usize, Polarity)],
    target: usize,
    ancillas: &[usize],
) -> Result<Vec<Gate>, GadgetError> {
    let needed = mcx_ancillas_needed(controls.len());
    if ancillas.len() < needed {
        return Err(GadgetError::InsufficientAncillas {
            needed,
            available: ancillas.len(),
        });
    }
    let anc = &ancillas[..needed];
    check_distinct(
        controls
            .iter()
            .map(|&(q, _)| q)
            .chain([target])
            .chain(anc.iter().copied()),
    )?;

    let c: Vec<usize> = controls.iter().map(|&(q, _)| q).collect();
    let core = match c.len() {
        0 => vec![Gate::X(target)],
        1 => vec![
            Gate::X(anc[0]),
            Gate::CCX(c[0], anc[0], target),
            Gate::X(anc[0]),
        ],
        2 => vec![Gate::CCX(c[0], c[1], target)],
        n => {
            let mut compute = vec![Gate::CCX(c[0], c[1], anc[0])];
            for j in 2..n - 1 {
                compute.push(Gate::CCX(anc[j - 2], c[j], anc[j - 1]));
            }
            let mut gates = compute.clone();
            gates.push(Gate::CCX(anc[n - 3], c[n - 1], target));
            gates.extend(compute.into_iter().rev());
            gates
        }
    };

    let flips: Vec<Gate> = controls
        .iter()
        .filter(|&&(_, p)| p == Polarity::Negative)
        .map(|&(q, _)| Gate::X(q))
        .collect();
    let mut gates = flips.clone();
    gates.extend(core);
    gates.extend(flips);
    Ok(gates)
}

/// Control patterns over counter bits (0 = most significant) whose union
/// fires exactly when the register's encoded integer exceeds `k`.
///
/// The register encodes int(b)+1, so the test is int(b) > k-1. Writing
/// K = k-1 in l bits, the disjoint first-divergence decomposition gives
/// one pattern per zero bit of K: match K strictly above that position,
/// then demand a 1 where K has its 0.
pub fn comparator_patterns(
    l: usize,
    k: u64,
) -> Result<Vec<Vec<(usize, Polarity)>>, GadgetError> {
    check_k_range(l, k)?;
    let kk = k - 1;
    let bit = |i: usize| {
        let shift = l - 1 - i;
        if shift >= 64 {
            false
        } else {
            (kk >> shift) & 1 == 1
        }
    };
    let mut patterns = Vec::new();
    for i in 0..l {
        if bit(i) {
            continue;
        }
        let mut pattern: Vec<(usize, Polarity)> = (0..i)
            .map(|j| {
                (
                    j,
                    if bit(j) {
                        Polarity::Positive
                    } else {
                        Polarity::Negative
                    },
                )
            })
            .collect();
        pattern.push((i, Polarity::Positive));
        patterns.push(pattern);
    }
    Ok(patterns)
}

fn check_k_range(l: usize, k: u64) -> Result<(), GadgetError> {
    let in_range = k >= 1 && (l >= 64 || u128::from(k) <= 1u128 << l);
    if in_range {
        Ok(())
    } else {
        Err(GadgetError::KOutOfRange { k, l })
    }
}

/// Worst-case clean-ancilla demand across the comparator's patterns.
pub fn comparator_ancillas_needed(l: usize, k: u64) -> Result<usize, GadgetError> {
    Ok(comparator_patterns(l, k)?
        .iter()
        .map(|p| mcx_ancillas_needed(p.len()))
        .max()
        .unwrap_or(0))
}

/// Flips `target` exactly when `s_register`, read as an integer in
/// [1, 2^l] (most significant bit first, value = binary + 1), is greater
/// than the compile-time constant `k`. The patterns are mutually
/// exclusive, so at most one of the component multi-controlled flips
/// fires on any basis state.
pub fn compile_comparator_gt_const(
    s_register: &[usize],
    k: u64,
    target: usize,
    ancillas: &[usize],
) -> Result<Vec<Gate>, GadgetError> {
    let patterns = comparator_patterns(s_register.len(), k)?;
    let mut gates = Vec::new();
    for pattern in patterns {
        let controls: Vec<(usize, Polarity)> = pattern
            .into_iter()
            .map(|(i, p)| (s_register[i], p))
            .collect();
        gates.extend(compile_mcx(&controls, target, ancillas)?);
    }
    Ok(gates)
}

/// Multiplies the state by -1 exactly on the all-zero subspace of
/// `qubits`, identity elsewhere. The flag ancilla is driven to
/// (|0⟩-|1⟩)/√2 by NOT then Hadamard, picks up the phase through an
/// all-negative multi-controlled NOT, and is returned to |0⟩.
pub fn compile_phase_flip_all_zero(
    qubits: &[usize],
    flag_ancilla: usize,
    mcx_ancillas: &[usize],
) -> Result<Vec<Gate>, GadgetError> {
    check_distinct(
        qubits
            .iter()
            .copied()
            .chain([flag_ancilla])
            .chain(mcx_ancillas.iter().copied()),
    )?;
    let controls: Vec<(usize, Polarity)> = qubits
        .iter()
        .map(|&q| (q, Polarity::Negative))
        .collect();
    let mut gates = vec![Gate::X(flag_ancilla), Gate::H(flag_ancilla)];
    gates.extend(compile_mcx(&controls, flag_ancilla, mcx_ancillas)?);
    gates.push(Gate::H(flag_ancilla));
    gates.push(Gate::X(flag_ancilla));
    Ok(gates)
}
