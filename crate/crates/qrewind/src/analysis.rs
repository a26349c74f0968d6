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

//! Closed-form predictions, the brute-force witness oracle, and
//! report-level verification that simulated probabilities match them.
//!
//! The predictions: the first measurement succeeds with
//! p = 1/2 - (k - k_v)/2^(l+1) where k_v is the verifier's exact
//! acceptance numerator at scale 2^l, total acceptance is
//! f(p) = p + 4p(1-p)², and any dishonest strategy against thresholds
//! (c, s) is capped by (1-(c-s))(1+(1+c-s)²)/2. Every row of a report
//! compares an exact simulated value with the matching formula value.

use num::bigint::BigInt;
use serde::Serialize;
use thiserror::Error;

use crate::amp::{AmpError, Dyadic, Rational};
use crate::circuit::{Circuit, CircuitError};
use crate::sim::{init_state, run_protocol, SimError};
use crate::transform::{
    build_protocol, compute_l, step1_check, LMode, Step1, TransformError, LABEL_O1,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("soundness threshold {s} not strictly below completeness threshold {c}")]
    GapViolation { c: Rational, s: Rational },
    #[error("threshold {0} outside [0, 1]")]
    ThresholdOutOfRange(Rational),
    #[error("witness length {m} exceeds enumeration bound {max}")]
    WitnessTooLong { m: usize, max: usize },
    #[error("circuit declares {expected} witness wires, sweep asked for {got}")]
    WitnessArityMismatch { expected: usize, got: usize },
    #[error("verifier circuit declares no output qubit")]
    MissingOutput,
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Amp(#[from] AmpError),
}

/// Largest witness arity the brute-force oracle will enumerate.
pub const MAX_BRUTE_FORCE_M: usize = 16;

/// `exact_acceptance_prob`: burn in the witness, run the verifier on the
/// all-zero state, read off P(output = 1) exactly.
pub fn exact_acceptance_prob(v_template: &Circuit, w: &str) -> Result<Dyadic, AnalysisError> {
    let hardcoded = v_template.hardcode_witness(w)?;
    let out = hardcoded.output_qubit().ok_or(AnalysisError::MissingOutput)?;
    let mut state = init_state(hardcoded.width().max(1))?;
    state.apply_circuit(&hardcoded)?;
    Ok(state.measure_prob(out)?)
}

/// `predicted_p`: the first-measurement success probability
/// 1/2 - (k - k_v)/2^(l+1), exact for every count claim k.
pub fn predicted_p(k: u64, k_v: u64, l: usize) -> Dyadic {
    Dyadic::one_half() - Dyadic::new(BigInt::from(k) - BigInt::from(k_v), l as u32 + 1)
}

/// `p_acc_formula`: total acceptance f(p) = p + 4p(1-p)² in exact dyadic
/// arithmetic. f(1/2) = 1.
pub fn p_acc_formula(p: &Dyadic) -> Dyadic {
    let q = &Dyadic::one() - p;
    p + &(&(&Dyadic::from_int(4) * p) * &(&q * &q))
}

/// f over the rationals, for probabilities like 1/3 that are not dyadic.
pub fn p_acc_formula_rat(p: &Rational) -> Rational {
    let q = &Rational::one() - p;
    p + &(&(&Rational::from_int(4) * p) * &(&q * &q))
}

/// `soundness_bound`: the dishonest-acceptance ceiling
/// (1-(c-s))(1+(1+c-s)²)/2 for thresholds 0 ≤ s < c ≤ 1. Always below 1
/// when the gap is positive.
pub fn soundness_bound(c: &Rational, s: &Rational) -> Result<Rational, AnalysisError> {
    for t in [c, s] {
        if t.is_negative() || *t > Rational::one() {
            return Err(AnalysisError::ThresholdOutOfRange(t.clone()));
        }
    }
    if s >= c {
        return Err(AnalysisError::GapViolation {
            c: c.clone(),
            s: s.clone(),
        });
    }
    let g = c - s;
    let one = Rational::one();
    let one_plus_g = &one + &g;
    let half = Rational::from_ratio(1, 2).expect("2 != 0");
    Ok(&(&half * &(&one - &g)) * &(&one + &(&one_plus_g * &one_plus_g)))
}

/// Validated threshold pair with its precomputed ceiling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundParams {
    pub c: Rational,
    pub s: Rational,
    pub s_prime: Rational,
}

impl BoundParams {
    pub fn new(c: Rational, s: Rational) -> Result<BoundParams, AnalysisError> {
        let s_prime = soundness_bound(&c, &s)?;
        Ok(BoundParams { c, s, s_prime })
    }
}

/// `f_monotone_check`: f nondecreasing across the dyadic grid
/// {0, 1/2^e, 2/2^e, ...} up to 1/2, and f(1/2) = 1, all exact.
pub fn f_monotone_check(grid_exp: u32) -> bool {
    let half_idx = 1u64 << (grid_exp - 1);
    let mut prev = p_acc_formula(&Dyadic::zero());
    for i in 1..=half_idx {
        let here = p_acc_formula(&Dyadic::new(i, grid_exp));
        if here < prev {
            return false;
        }
        prev = here;
    }
    p_acc_formula(&Dyadic::one_half()) == Dyadic::one()
}

/// `brute_force_best_witness`: exhaustive maximum of the verifier's
/// acceptance probability over all 2^m witnesses, ties broken toward the
/// lexicographically smallest string.
pub fn brute_force_best_witness(
    v_template: &Circuit,
    m: usize,
) -> Result<(String, Dyadic), AnalysisError> {
    if m != v_template.witness_qubits().len() {
        return Err(AnalysisError::WitnessArityMismatch {
            expected: v_template.witness_qubits().len(),
            got: m,
        });
    }
    if m > MAX_BRUTE_FORCE_M {
        return Err(AnalysisError::WitnessTooLong {
            m,
            max: MAX_BRUTE_FORCE_M,
        });
    }
    let mut best: Option<(String, Dyadic)> = None;
    for bits in 0u64..1 << m {
        let w = witness_string(bits, m);
        let p = exact_acceptance_prob(v_template, &w)?;
        // strict improvement only: lexicographic order of fixed-length
        // bit strings is enumeration order
        if best.as_ref().is_none_or(|(_, b)| p > *b) {
            best = Some((w, p));
        }
    }
    Ok(best.expect("at least the empty witness"))
}

fn witness_string(bits: u64, m: usize) -> String {
    (0..m)
        .map(|i| {
            if bits >> (m - 1 - i) & 1 == 1 {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

/// One count claim k against one witness: simulated probabilities next to
/// their formula values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KRow {
    pub k: u64,
    pub step1_pass: bool,
    /// First-measurement marginal; absent when the pre-check rejects and
    /// the quantum steps never run.
    pub p_measured: Option<Dyadic>,
    pub p_predicted: Dyadic,
    pub p_acc_measured: Dyadic,
    pub p_acc_predicted: Dyadic,
    pub equal: bool,
}

/// Full k-sweep for one witness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WitnessReport {
    pub w: String,
    pub l: usize,
    /// Exact verifier acceptance probability, canonical form.
    pub p_v: Dyadic,
    /// Its numerator rescaled to denominator 2^l.
    pub k_v: String,
    pub rows: Vec<KRow>,
}

/// `witness_report`: simulate the transformed protocol for every
/// k in [1, 2^l] under one witness and compare against the formulas.
pub fn witness_report(
    v_template: &Circuit,
    w: &str,
    c: &Rational,
    l_mode: LMode,
) -> Result<WitnessReport, AnalysisError> {
    let hardcoded = v_template.hardcode_witness(w)?;
    let l = compute_l(&hardcoded, l_mode);
    let p_v = exact_acceptance_prob(v_template, w)?;
    let k_v_big = p_v
        .numerator_at_exp(l as u32)
        .expect("denominator exponent bounded by hadamard count");
    let k_v = u64::try_from(&k_v_big).expect("numerator fits at desk scale");

    let mut rows = Vec::with_capacity(1 << l);
    for k in 1..=(1u64 << l) {
        let p_predicted = predicted_p(k, k_v, l);
        let pass = step1_check(k, l, c) == Step1::Proceed;
        let tp = build_protocol(v_template, w, k, c, l_mode)?;
        let run = run_protocol(&tp.protocol)?;
        let (p_measured, p_acc_predicted, equal) = if pass {
            let p_m = run.label_marginals[LABEL_O1].clone();
            let p_acc_pred = p_acc_formula(&p_predicted);
            let equal = p_m == p_predicted && run.p_accept == p_acc_pred;
            (Some(p_m), p_acc_pred, equal)
        } else {
            let p_acc_pred = Dyadic::zero();
            (None, p_acc_pred.clone(), run.p_accept == p_acc_pred)
        };
        rows.push(KRow {
            k,
            step1_pass: pass,
            p_measured,
            p_predicted,
            p_acc_measured: run.p_accept.clone(),
            p_acc_predicted,
            equal,
        });
    }
    Ok(WitnessReport {
        w: w.to_string(),
        l,
        p_v,
        k_v: k_v_big.to_string(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Yes,
    No,
    PromiseViolating,
}

/// Perfect-completeness certificate for one qualifying witness: the
/// honest count claim must accept with probability exactly 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompletenessCheck {
    pub w: String,
    pub k: u64,
    pub p_acc: Dyadic,
    pub pass: bool,
}

/// Soundness certificate: the best dishonest (w, k) stays at or below the
/// ceiling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SoundnessCheck {
    pub ceiling: Rational,
    pub max_p_acc: Option<Dyadic>,
    pub max_w: Option<String>,
    pub max_k: Option<u64>,
    pub pass: bool,
}

/// `verify_theorem` output: everything measured, everything predicted,
/// and the verdicts where the promise makes verdicts meaningful.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InstanceReport {
    pub schema_version: u32,
    pub l_mode: LMode,
    pub bounds: BoundParams,
    pub classification: Classification,
    pub witnesses: Vec<WitnessReport>,
    /// Simulated value equals formula value in every row.
    pub formula_consistent: bool,
    pub completeness: Vec<CompletenessCheck>,
    pub soundness: Option<SoundnessCheck>,
    /// Some(true/false) for promise-satisfying instances, None otherwise.
    pub verdict: Option<bool>,
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// `verify_theorem`: sweep all witnesses and count claims, classify the
/// instance against (c, s), and certify perfect completeness on yes
/// instances or the acceptance ceiling on no instances.
pub fn verify_theorem(
    v_template: &Circuit,
    m: usize,
    c: &Rational,
    s: &Rational,
    l_mode: LMode,
) -> Result<InstanceReport, AnalysisError> {
    let bounds = BoundParams::new(c.clone(), s.clone())?;
    if m != v_template.witness_qubits().len() {
        return Err(AnalysisError::WitnessArityMismatch {
            expected: v_template.witness_qubits().len(),
            got: m,
        });
    }
    if m > MAX_BRUTE_FORCE_M {
        return Err(AnalysisError::WitnessTooLong {
            m,
            max: MAX_BRUTE_FORCE_M,
        });
    }

    let mut witnesses = Vec::with_capacity(1 << m);
    for bits in 0u64..1 << m {
        let w = witness_string(bits, m);
        witnesses.push(witness_report(v_template, &w, c, l_mode)?);
    }
    let formula_consistent = witnesses
        .iter()
        .all(|wr| wr.rows.iter().all(|r| r.equal));

    let any_complete = witnesses.iter().any(|wr| wr.p_v >= *c);
    let all_sound = witnesses.iter().all(|wr| wr.p_v <= *s);
    let classification = if any_complete {
        Classification::Yes
    } else if all_sound {
        Classification::No
    } else {
        Classification::PromiseViolating
    };

    let mut completeness = Vec::new();
    let mut soundness = None;
    let verdict = match classification {
        Classification::Yes => {
            for wr in &witnesses {
                if wr.p_v < *c {
                    continue;
                }
                let k: u64 = wr.k_v.parse().expect("k_v printed from u64");
                let row = &wr.rows[k as usize - 1];
                debug_assert_eq!(row.k, k);
                completeness.push(CompletenessCheck {
                    w: wr.w.clone(),
                    k,
                    p_acc: row.p_acc_measured.clone(),
                    pass: row.p_acc_measured == Dyadic::one(),
                });
            }
            Some(completeness.iter().all(|cc| cc.pass) && formula_consistent)
        }
        Classification::No => {
            let mut max: Option<(&WitnessReport, &KRow)> = None;
            for wr in &witnesses {
                for row in wr.rows.iter().filter(|r| r.step1_pass) {
                    if max
                        .as_ref()
                        .is_none_or(|(_, best)| row.p_acc_measured > best.p_acc_measured)
                    {
                        max = Some((wr, row));
                    }
                }
            }
            let pass = max.as_ref().is_none_or(|(_, row)| {
                row.p_acc_measured.to_rational() <= bounds.s_prime
            });
            soundness = Some(SoundnessCheck {
                ceiling: bounds.s_prime.clone(),
                max_p_acc: max.map(|(_, r)| r.p_acc_measured.clone()),
                max_w: max.map(|(wr, _)| wr.w.clone()),
                max_k: max.map(|(_, r)| r.k),
                pass,
            });
            Some(pass && formula_consistent)
        }
        Classification::PromiseViolating => None,
    };

    Ok(InstanceReport {
        schema_version: REPORT_SCHEMA_VERSION,
        l_mode,
        bounds,
        classification,
        witnesses,
        formula_consistent,
        completeness,
        soundness,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d).unwrap()
    }

    fn dy(n: i64, e: u32) -> Dyadic {
        Dyadic::new(n, e)
    }

    fn h_verifier() -> Circuit {
        let mut c = Circuit::new(1);
        c.push(Gate::H(0)).unwrap();
        c.set_output(0).unwrap();
        c
    }

    fn x_verifier() -> Circuit {
        let mut c = Circuit::new(1);
        c.push(Gate::X(0)).unwrap();
        c.set_output(0).unwrap();
        c
    }

    fn and_verifier() -> Circuit {
        let mut c = Circuit::new(3);
        c.push(Gate::CCX(0, 1, 2)).unwrap();
        c.set_output(2).unwrap();
        c.set_witness(vec![0, 1]).unwrap();
        c
    }

    fn empty_verifier() -> Circuit {
        let mut c = Circuit::new(1);
        c.set_output(0).unwrap();
        c
    }

    fn quarter_verifier() -> Circuit {
        let mut c = Circuit::new(3);
        c.extend_gates([Gate::H(0), Gate::H(1), Gate::CCX(0, 1, 2)])
            .unwrap();
        c.set_output(2).unwrap();
        c
    }

    #[test]
    fn exact_acceptance_prob_examples() {
        assert_eq!(exact_acceptance_prob(&h_verifier(), "").unwrap(), dy(1, 1));
        assert_eq!(exact_acceptance_prob(&x_verifier(), "").unwrap(), Dyadic::one());
        assert_eq!(
            exact_acceptance_prob(&and_verifier(), "11").unwrap(),
            Dyadic::one()
        );
        assert_eq!(
            exact_acceptance_prob(&and_verifier(), "10").unwrap(),
            Dyadic::zero()
        );
    }

    #[test]
    fn predicted_p_examples() {
        assert_eq!(predicted_p(1, 1, 1), Dyadic::one_half());
        assert_eq!(predicted_p(7, 7, 5), Dyadic::one_half());
        assert_eq!(predicted_p(4, 1, 2), dy(1, 3));
        assert_eq!(predicted_p(4, 0, 2), Dyadic::zero());
        // k below the true count pushes p above 1/2
        assert_eq!(predicted_p(1, 2, 1), dy(3, 2));
    }

    #[test]
    fn predicted_p_matches_simulation() {
        // quarter verifier at l=2: k=4 must measure exactly 1/8
        let wr = witness_report(
            &quarter_verifier(),
            "",
            &Rational::zero(),
            LMode::HadamardCount,
        )
        .unwrap();
        assert_eq!(wr.l, 2);
        let row = &wr.rows[3];
        assert_eq!(row.k, 4);
        assert_eq!(row.p_measured.as_ref().unwrap(), &dy(1, 3));
        assert_eq!(row.p_predicted, dy(1, 3));
    }

    #[test]
    fn predicted_p_strictly_decreasing_in_k() {
        let l = 6;
        for k_v in [0u64, 1, 17, 64] {
            for k in 1..(1u64 << l) {
                let step = &predicted_p(k, k_v, l) - &predicted_p(k + 1, k_v, l);
                assert_eq!(step, Dyadic::new(1, l as u32 + 1));
            }
        }
    }

    #[test]
    fn p_acc_formula_examples() {
        assert_eq!(p_acc_formula(&Dyadic::one_half()), Dyadic::one());
        assert_eq!(p_acc_formula(&Dyadic::zero()), Dyadic::zero());
        assert_eq!(p_acc_formula_rat(&rat(1, 3)), rat(25, 27));
        assert_eq!(p_acc_formula(&Dyadic::one()), Dyadic::one());
        // dyadic and rational paths agree
        let p = dy(3, 3);
        assert_eq!(p_acc_formula(&p).to_rational(), p_acc_formula_rat(&rat(3, 8)));
    }

    #[test]
    fn soundness_bound_examples() {
        assert_eq!(soundness_bound(&rat(2, 3), &rat(1, 3)).unwrap(), rat(25, 27));
        assert_eq!(soundness_bound(&Rational::one(), &Rational::zero()).unwrap(), Rational::zero());
        assert_eq!(
            soundness_bound(&rat(1, 2), &rat(1, 4)).unwrap(),
            rat(123, 128)
        );
    }

    #[test]
    fn soundness_bound_rejects_bad_thresholds() {
        assert!(matches!(
            soundness_bound(&rat(1, 3), &rat(2, 3)),
            Err(AnalysisError::GapViolation { .. })
        ));
        assert!(matches!(
            soundness_bound(&rat(1, 2), &rat(1, 2)),
            Err(AnalysisError::GapViolation { .. })
        ));
        assert!(matches!(
            soundness_bound(&rat(3, 2), &rat(1, 3)),
            Err(AnalysisError::ThresholdOutOfRange(_))
        ));
    }

    proptest! {
        #[test]
        fn soundness_bound_below_one(cn in 1i64..40, cd in 1i64..40, sn in 0i64..40, sd in 1i64..40) {
            let c = rat(cn.min(cd), cd);
            let s = rat(sn.min(sd), sd);
            prop_assume!(s < c);
            let bound = soundness_bound(&c, &s).unwrap();
            prop_assert!(bound < Rational::one());
            // independent derivation: 1 - g²(1+g)/2 with g = c - s
            let g = &c - &s;
            let alt = &Rational::one()
                - &(&(&(&g * &g) * &(&Rational::one() + &g)) * &rat(1, 2));
            prop_assert_eq!(bound, alt);
        }
    }

    #[test]
    fn f_monotone_on_grid() {
        assert!(f_monotone_check(10));
        assert!(f_monotone_check(1));
        assert!(p_acc_formula(&Dyadic::zero()) <= p_acc_formula(&Dyadic::one_half()));
    }

    #[test]
    fn brute_force_examples() {
        let (w, p) = brute_force_best_witness(&and_verifier(), 2).unwrap();
        assert_eq!((w.as_str(), p), ("11", Dyadic::one()));

        // all witnesses tie at zero: lexicographically smallest wins
        let mut ignore = Circuit::new(3);
        ignore.set_output(2).unwrap();
        ignore.set_witness(vec![0, 1]).unwrap();
        let (w, p) = brute_force_best_witness(&ignore, 2).unwrap();
        assert_eq!((w.as_str(), p), ("00", Dyadic::zero()));

        // witness ignored entirely, ties at 1/2
        let mut coin = Circuit::new(2);
        coin.push(Gate::H(1)).unwrap();
        coin.set_output(1).unwrap();
        coin.set_witness(vec![0]).unwrap();
        let (w, p) = brute_force_best_witness(&coin, 1).unwrap();
        assert_eq!((w.as_str(), p), ("0", dy(1, 1)));
    }

    #[test]
    fn brute_force_errors() {
        assert!(matches!(
            brute_force_best_witness(&and_verifier(), 3),
            Err(AnalysisError::WitnessArityMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn verify_theorem_yes_instance() {
        let report = verify_theorem(&and_verifier(), 2, &rat(2, 3), &rat(1, 3), LMode::HadamardCount)
            .unwrap();
        assert_eq!(report.classification, Classification::Yes);
        assert!(report.formula_consistent);
        assert_eq!(report.completeness.len(), 1);
        let cc = &report.completeness[0];
        assert_eq!(cc.w, "11");
        assert_eq!(cc.p_acc, Dyadic::one());
        assert!(cc.pass);
        assert_eq!(report.verdict, Some(true));
    }

    #[test]
    fn verify_theorem_no_instance() {
        let report = verify_theorem(&empty_verifier(), 0, &rat(2, 3), &rat(1, 3), LMode::HadamardCount)
            .unwrap();
        assert_eq!(report.classification, Classification::No);
        let sc = report.soundness.as_ref().unwrap();
        assert_eq!(sc.ceiling, rat(25, 27));
        assert!(sc.pass);
        assert_eq!(report.verdict, Some(true));
    }

    #[test]
    fn verify_theorem_promise_violation() {
        let report = verify_theorem(&h_verifier(), 0, &rat(2, 3), &rat(1, 3), LMode::HadamardCount)
            .unwrap();
        assert_eq!(report.classification, Classification::PromiseViolating);
        assert!(report.completeness.is_empty());
        assert!(report.soundness.is_none());
        assert_eq!(report.verdict, None);
        // raw data still present
        assert_eq!(report.witnesses.len(), 1);
    }

    #[test]
    fn overstating_k_breaks_certainty() {
        // dishonest count claims above the true numerator strictly lose
        let wr = witness_report(&quarter_verifier(), "", &Rational::zero(), LMode::HadamardCount)
            .unwrap();
        let k_v: u64 = wr.k_v.parse().unwrap();
        for row in &wr.rows {
            if row.k > k_v {
                assert!(row.p_acc_measured < Dyadic::one(), "k={}", row.k);
                assert!(*row.p_measured.as_ref().unwrap() < Dyadic::one_half());
            }
        }
    }

    #[test]
    fn report_serialization_deterministic() {
        let build = || {
            verify_theorem(&and_verifier(), 2, &rat(2, 3), &rat(1, 3), LMode::HadamardCount)
                .unwrap()
        };
        let a = serde_json::to_string_pretty(&build()).unwrap();
        let b = serde_json::to_string_pretty(&build()).unwrap();
        assert_eq!(a, b);
        // probabilities appear as exact strings
        assert!(a.contains("\"1/2^0\""));
        assert!(a.contains("\"25/27\""));
    }
}
