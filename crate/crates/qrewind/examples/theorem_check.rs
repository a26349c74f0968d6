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

//! End to end over whole instances: classify against the (c, s) promise,
//! certify perfect completeness on yes instances and the acceptance
//! ceiling on no instances.
//!
//! ```bash
//! cargo run -p qrewind --example theorem_check
//! ```

use qrewind::amp::Rational;
use qrewind::analysis::{soundness_bound, verify_theorem, Classification};
use qrewind::circuit::Circuit;
use qrewind::transform::LMode;

fn circuits_dir() -> &'static str {
    concat!(env!("CARGO_MANIFEST_DIR"), "/circuits")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let c = Rational::from_ratio(2, 3)?;
    let s = Rational::from_ratio(1, 3)?;

    // The ceiling a cheating prover can reach after the transformation:
    // 1/2 (1 - g)(1 + (1 + g)^2) at gap g = c - s, exactly 25/27 here.
    println!("soundness ceiling at (2/3, 1/3): {}", soundness_bound(&c, &s)?);
    println!(
        "soundness ceiling at (1/2, 1/4): {}",
        soundness_bound(&Rational::from_ratio(1, 2)?, &Rational::from_ratio(1, 4)?)?
    );
    println!();

    for file in [
        "majority_verifier.qc",
        "empty_verifier.qc",
        "h_verifier.qc",
    ] {
        let text = std::fs::read_to_string(format!("{}/{file}", circuits_dir()))?;
        let verifier = Circuit::parse(&text)?;
        let m = verifier.witness_qubits().len();
        let report = verify_theorem(&verifier, m, &c, &s, LMode::HadamardCount)?;

        println!("{file} ({m} witness bits):");
        match report.classification {
            Classification::Yes => {
                for check in &report.completeness {
                    println!(
                        "  yes instance; witness {} at honest k = {}: p_acc = {} ({})",
                        check.w,
                        check.k,
                        check.p_acc,
                        if check.pass { "PASS" } else { "FAIL" }
                    );
                }
            }
            Classification::No => {
                let sound = report.soundness.as_ref().expect("no instance certifies");
                println!(
                    "  no instance; best dishonest claim reaches {} <= {} ({})",
                    sound
                        .max_p_acc
                        .as_ref()
                        .map_or_else(|| "-".to_string(), ToString::to_string),
                    sound.ceiling,
                    if sound.pass { "PASS" } else { "FAIL" }
                );
            }
            Classification::PromiseViolating => {
                println!("  promise violated: no certificate applies");
            }
        }
        println!(
            "  every simulated row matched the closed forms: {}",
            report.formula_consistent
        );
        println!("  verdict: {:?}", report.verdict);
        println!();
    }
    Ok(())
}
