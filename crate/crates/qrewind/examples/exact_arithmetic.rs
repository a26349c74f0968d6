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

//! The three exact number types and why floating point is not enough.
//!
//! ```bash
//! cargo run -p qrewind --example exact_arithmetic
//! ```

use num::BigInt;
use qrewind::amp::{Amp, Dyadic, Rational};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Amplitudes live in Z[1/sqrt(2)]: an integer numerator over sqrt(2)^t.
    let h = Amp::inv_sqrt2();
    println!("Hadamard amplitude:        {h}");
    println!("squared:                   {}", &h * &h);
    println!("norm contribution:         {}", h.norm_sq());

    // Canonicalization halves the numerator while the exponent drops by
    // two, so exponent parity never changes and sums stay well-typed.
    let raw = Amp::new(BigInt::from(4), 4);
    println!("4/sqrt(2)^4 canonicalized: {raw}");

    // Numerators over mismatched parity cannot be added exactly; the sum
    // 1/sqrt(2) + 1/2 leaves the ring, and the API says so instead of
    // rounding.
    let err = Amp::new(BigInt::from(1), 1)
        .checked_add(&Amp::new(BigInt::from(1), 2))
        .unwrap_err();
    println!("1/sqrt(2) + 1/2:           error: {err}");

    // Probabilities are dyadic rationals. Exact comparison still sees a
    // difference of 2^-53 that f64 rounds away.
    let tiny = &Dyadic::one() + &Dyadic::new(BigInt::from(1), 53);
    println!();
    println!("1 + 2^-53 exactly:         {tiny}");
    println!("as f64:                    {}", tiny.to_f64());
    println!("exact > 1:                 {}", tiny > Dyadic::one());
    #[allow(clippy::float_cmp)]
    {
        println!("f64 > 1.0:                 {}", tiny.to_f64() > 1.0);
    }

    // Thresholds arrive as arbitrary rationals; comparisons against
    // dyadics cross-multiply, so 5/8 < 2/3 < 3/4 holds exactly.
    let c = Rational::from_ratio(2, 3)?;
    let below = Dyadic::new(BigInt::from(5), 3);
    let above = Dyadic::new(BigInt::from(3), 2);
    println!();
    println!("5/8 < 2/3:                 {}", below < c);
    println!("3/4 > 2/3:                 {}", above > c);

    assert!(tiny > Dyadic::one());
    assert!(below < c && above > c);
    Ok(())
}
