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

//! Exact simulation and transformation of classical-witness quantum
//! verifiers over the {H, X, CCX} gate set.
//!
//! Everything is integer arithmetic end to end: amplitudes are
//! `m / sqrt(2)^t`, probabilities are dyadic rationals, and thresholds are
//! arbitrary rationals, so every acceptance probability the library reports
//! is an identity, not an estimate. On that base the `transform` module
//! rebuilds a verifier into a protocol that accepts honest claims with
//! probability exactly 1, and `analysis` checks the construction's
//! probability laws instance by instance.
//!
//! ## Examples
//!
//! The `examples/` directory is the guided tour; each file is a runnable
//! walk through one capability:
//!
//! - **`exact_arithmetic`** - the amplitude ring, dyadic probabilities,
//!   and rational thresholds
//! - **`simulate_circuit`** - parse a circuit file, inspect the sparse
//!   state, measure and branch
//! - **`gadget_truth_tables`** - multi-controlled X, the comparator, and
//!   the all-zero phase flip
//! - **`perfect_completeness`** - honest claims accept with probability
//!   exactly 1
//! - **`dishonest_sweep`** - every count claim k against the closed-form
//!   predictions
//! - **`deferred_vs_branching`** - two measurement semantics, identical
//!   verdict distributions
//! - **`theorem_check`** - classify whole instances and certify
//!   completeness and soundness
//!
//! ```bash
//! cargo run -p qrewind --example exact_arithmetic
//! cargo run -p qrewind --example simulate_circuit
//! cargo run -p qrewind --example gadget_truth_tables
//! cargo run -p qrewind --example perfect_completeness
//! cargo run -p qrewind --example dishonest_sweep
//! cargo run -p qrewind --example deferred_vs_branching
//! cargo run -p qrewind --example theorem_check
//! ```
//!
//! The same capabilities are scriptable through the thin `qrewind` binary
//! (`prob`, `transform`, `verify`, `sweep`); see the `cli` module.

pub mod amp;
pub mod analysis;
pub mod circuit;
pub mod cli;
pub mod gadgets;
pub mod sim;
pub mod transform;
