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

//! The headline identity: an honest prover makes the transformed
//! protocol accept with probability exactly 1, not 1 minus epsilon.
//!
//! ```bash
//! cargo run -p qrewind --example perfect_completeness
//! ```

use qrewind::amp::{Dyadic, Rational};
use qrewind::analysis::exact_acceptance_prob;
use qrewind::circuit::Circuit;
use qrewind::sim::run_protocol;
use qrewind::transform::{build_protocol, LMode, LABEL_O1};

fn circuits_dir() -> &'static str {
    concat!(env!("CARGO_MANIFEST_DIR"), "/circuits")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let c = Rational::from_ratio(2, 3)?;

    for (file, witness) in [
        ("and_verifier.qc", "11"),
        ("majority_verifier.qc", "110"),
        ("majority_verifier.qc", "111"),
    ] {
        let text = std::fs::read_to_string(format!("{}/{file}", circuits_dir()))?;
        let verifier = Circuit::parse(&text)?;

        // The honest count is the verifier's own acceptance probability
        // scaled up to the l-bit grid.
        let p_v = exact_acceptance_prob(&verifier, witness)?;
        let hardcoded = verifier.hardcode_witness(witness)?;
        let l = qrewind::transform::compute_l(&hardcoded, LMode::HadamardCount);
        let k_honest = u64::try_from(&p_v.numerator_at_exp(l as u32).unwrap())?;

        let tp = build_protocol(&verifier, witness, k_honest, &c, LMode::HadamardCount)?;
        let run = run_protocol(&tp.protocol)?;

        println!("{file} with witness {witness}:");
        println!("  p_v = {p_v}, l = {l}, honest k = {k_honest}");
        println!(
            "  protocol: {} wires, core unitary {} gates",
            tp.layout.width(),
            tp.q_circuit.gate_count()
        );
        println!(
            "  first test lands on 1/2 exactly: P = {}",
            run.label_marginals[LABEL_O1]
        );
        println!("  P(accept) = {}  <- exact, no epsilon", run.p_accept);
        assert_eq!(run.p_accept, Dyadic::one());
        assert_eq!(run.label_marginals[LABEL_O1], Dyadic::one_half());
        println!();
    }

    println!("all honest runs accept with certainty");
    Ok(())
}
