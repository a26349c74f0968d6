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

//! Parse a circuit file, run it exactly, and inspect the sparse state.
//!
//! ```bash
//! cargo run -p qrewind --example simulate_circuit
//! ```

use qrewind::circuit::Circuit;
use qrewind::sim::init_state;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/circuits/quarter_verifier.qc"
    );
    let text = std::fs::read_to_string(path)?;
    let circuit = Circuit::parse(&text)?;
    println!(
        "loaded {} wires, {} gates ({} Hadamard)",
        circuit.width(),
        circuit.gate_count(),
        circuit.hadamard_count()
    );

    let mut state = init_state(circuit.width())?;
    state.apply_circuit(&circuit)?;

    // Amplitudes are integer multiples of 1/sqrt(2)^t; the basis index
    // prints with wire 0 as the least significant bit.
    println!("final state, {} of 8 basis states occupied:", state.support_size());
    for (basis, num) in state.sorted_entries() {
        println!("  |{basis:03b}>  {num}/sqrt(2)^{}", state.half_exp());
    }

    let out = circuit.output_qubit().expect("file declares an output");
    let p1 = state.measure_prob(out)?;
    println!("P(output = 1) = {p1} exactly ({:.6} approx)", p1.to_f64());

    // Branching keeps both projections sub-normalized: their squared
    // norms are the path probabilities and they sum to 1.
    let (zero, one) = state.branch_measure(out);
    println!(
        "branch norms: P0 = {}, P1 = {}",
        zero.probability, one.probability
    );
    assert_eq!(&zero.probability + &one.probability, state.norm_sq());

    // Undoing the circuit restores |000> exactly: every gate is its own
    // inverse, so the reversed gate list is the inverse circuit.
    let mut back = state.clone();
    back.apply_circuit(&circuit.inverse())?;
    assert_eq!(back.canonicalized(), init_state(circuit.width())?);
    println!("inverse circuit returns the state to |000> exactly");
    Ok(())
}
