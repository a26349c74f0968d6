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

//! What a lying prover can get: sweep every count claim k and compare
//! the simulated probabilities against the closed-form predictions.
//!
//! ```bash
//! cargo run -p qrewind --example dishonest_sweep
//! ```

use qrewind::amp::Rational;
use qrewind::analysis::witness_report;
use qrewind::circuit::Circuit;
use qrewind::transform::LMode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/circuits/quarter_verifier.qc"
    );
    let verifier = Circuit::parse(&std::fs::read_to_string(path)?)?;

    // c = 1/4 keeps every claim alive so the whole curve is visible.
    let c = Rational::from_ratio(1, 4)?;
    let report = witness_report(&verifier, "", &c, LMode::HadamardCount)?;

    println!(
        "verifier accepts with p_v = {} (k_v = {} on the 2^{} grid)",
        report.p_v, report.k_v, report.l
    );
    println!();
    println!("  k  p measured  p predicted  p_acc measured  p_acc predicted   approx");
    for row in &report.rows {
        let p = row
            .p_measured
            .as_ref()
            .map_or_else(|| "-".to_string(), ToString::to_string);
        println!(
            "  {}  {:<10}  {:<11}  {:<14}  {:<15}  {:.6}",
            row.k,
            p,
            row.p_predicted.to_string(),
            row.p_acc_measured.to_string(),
            row.p_acc_predicted.to_string(),
            row.p_acc_measured.to_f64()
        );
        assert!(row.equal, "simulation must match the formulas");
    }

    println!();
    println!("overstating k drags the first test below 1/2 and the");
    println!("rewind then misses: only k = k_v reaches certainty, and");
    println!("every row agrees with p = 1/2 - (k - k_v)/2^(l+1) and");
    println!("p_acc = p + 4p(1-p)^2 exactly");
    Ok(())
}
