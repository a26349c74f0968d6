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

//! Two semantics, one distribution: branching on each intermediate
//! measurement agrees exactly with compiling the whole protocol into a
//! single unitary whose final wire carries the verdict.
//!
//! ```bash
//! cargo run -p qrewind --example deferred_vs_branching
//! ```

use qrewind::amp::Rational;
use qrewind::circuit::Circuit;
use qrewind::sim::{defer_measurements, deferred_acceptance_prob, run_protocol};
use qrewind::transform::{build_protocol, LMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/circuits/coin_and_verifier.qc"
    );
    let verifier = Circuit::parse(&std::fs::read_to_string(path)?)?;
    let c = Rational::from_ratio(1, 2)?;

    // Honest claim k = 1 at p_v = 1/2, plus a dishonest overstatement.
    for k in [1u64, 2] {
        let tp = build_protocol(&verifier, "1", k, &c, LMode::HadamardCount)?;

        let branching = run_protocol(&tp.protocol)?;
        let deferred = deferred_acceptance_prob(&tp.protocol)?;

        let compiled = defer_measurements(&tp.protocol)?;
        println!("claim k = {k}:");
        println!(
            "  branching run over {} wires, 2 intermediate measurements",
            tp.protocol.width
        );
        println!(
            "  compiled unitary: {} wires ({} fresh), {} gates, verdict on wire {}",
            compiled.width(),
            compiled.width() - tp.protocol.width,
            compiled.gate_count(),
            compiled.output_qubit().unwrap()
        );
        println!("  P(accept) branching: {}", branching.p_accept);
        println!("  P(accept) deferred:  {deferred}");
        assert_eq!(branching.p_accept, deferred);
        println!();
    }

    println!("identical exact rationals under both semantics");
    Ok(())
}
