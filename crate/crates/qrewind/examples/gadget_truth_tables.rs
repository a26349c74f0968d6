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

//! The reversible building blocks: multi-controlled X with mixed
//! polarities, the greater-than comparator, and the all-zero phase flip.
//!
//! ```bash
//! cargo run -p qrewind --example gadget_truth_tables
//! ```

use qrewind::gadgets::{
    compile_comparator_gt_const, compile_mcx, compile_phase_flip_all_zero, comparator_patterns,
    Polarity,
};
use qrewind::sim::StateVector;

fn run_on_basis(width: usize, basis: u64, gates: &[qrewind::circuit::Gate]) -> u64 {
    let mut state = StateVector::basis_state(width, basis).unwrap();
    for gate in gates {
        state.apply_gate(gate).unwrap();
    }
    let entries = state.sorted_entries();
    assert_eq!(entries.len(), 1, "classical gates permute basis states");
    entries[0].0
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // X on wire 2 controlled on wire 0 set and wire 1 clear. Wires 3 and
    // 4 are work ancillas; the table shows they always come back to 0.
    let controls = [(0, Polarity::Positive), (1, Polarity::Negative)];
    let mcx = compile_mcx(&controls, 2, &[3, 4])?;
    println!("mcx(+0, -1 -> 2), {} gates:", mcx.len());
    for basis in 0..8u64 {
        let out = run_on_basis(5, basis, &mcx);
        assert_eq!(out >> 3, 0, "ancillas restored");
        let fired = out != basis;
        println!(
            "  |{basis:03b}> -> |{out:03b}>{}",
            if fired { "  target flipped" } else { "" }
        );
    }

    // The comparator flips its target exactly when the value register
    // plus one exceeds k. Each pattern handles one zero bit of k - 1, so
    // the patterns are mutually exclusive.
    let l = 3;
    let k = 5;
    println!();
    println!("comparator: flip when value+1 > {k} on {l} wires");
    for pattern in comparator_patterns(l, k)? {
        let desc: Vec<String> = pattern
            .iter()
            .map(|(wire, pol)| match pol {
                Polarity::Positive => format!("+{wire}"),
                Polarity::Negative => format!("-{wire}"),
            })
            .collect();
        println!("  pattern [{}]", desc.join(", "));
    }
    let comparator = compile_comparator_gt_const(&[0, 1, 2], k, 3, &[4, 5])?;
    let mut flipped = Vec::new();
    for value in 0..8u64 {
        // The register reads big-endian: wire 0 holds the value's most
        // significant bit, so the basis index reverses the bits.
        let basis = ((value >> 2) & 1) | (value & 2) | ((value & 1) << 2);
        let out = run_on_basis(6, basis, &comparator);
        if out != basis {
            flipped.push(value + 1);
        }
    }
    println!("  fires for value+1 in {flipped:?}");
    assert_eq!(flipped, vec![6, 7, 8]);

    // The phase flip multiplies |00> by -1 and leaves the other basis
    // states alone; conjugating an X-flagged control with two Hadamards
    // turns a bit flip into the sign.
    let phase = compile_phase_flip_all_zero(&[0, 1], 2, &[3, 4])?;
    let h_count = phase
        .iter()
        .filter(|g| matches!(g, qrewind::circuit::Gate::H(_)))
        .count();
    println!();
    println!("all-zero phase flip on 2 wires: {} gates, {h_count} Hadamards", phase.len());
    for basis in 0..4u64 {
        let mut state = StateVector::basis_state(5, basis)?;
        for gate in &phase {
            state.apply_gate(gate)?;
        }
        let state = state.canonicalized();
        let amp = state.amplitude(basis);
        println!("  |{basis:02b}> -> {amp} * |{basis:02b}>");
    }
    Ok(())
}
