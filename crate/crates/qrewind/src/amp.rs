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

//! Exact arithmetic for the amplitude ring of the {H, X, CCX} gate set.
//!
//! Amplitudes produced by Hadamard, NOT and Toffoli gates acting on
//! computational basis states are always of the form `m / sqrt(2)^t` with
//! integer `m`, so a pair of an arbitrary-precision integer and a
//! half-power-of-two exponent represents them with zero rounding error.
//! Squared norms and measurement probabilities land in the dyadic
//! rationals `m / 2^e`, and externally supplied thresholds may be
//! arbitrary rationals; all three types compare exactly against each
//! other via integer cross-multiplication.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AmpError {
    /// Adding `m/sqrt(2)^s` to `n/sqrt(2)^t` with `s != t (mod 2)` cannot
    /// stay inside the ring; hitting this means a simulator bug upstream.
    #[error("half-exponent parity mismatch in amplitude addition: {0} vs {1}")]
    ParityMismatch(u32, u32),
    #[error("zero denominator in rational")]
    ZeroDenominator,
    #[error("malformed rational literal {0:?}, expected \"num/den\" or \"num\"")]
    BadRationalLiteral(String),
}

/// An exact real amplitude `num / sqrt(2)^half_exp`.
///
/// Canonical form: `half_exp < 2` or `num` odd (and zero is `(0, 0)`), so
/// every value has exactly one representation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Amp {
    num: BigInt,
    half_exp: u32,
}

impl Amp {
    pub fn new(num: impl Into<BigInt>, half_exp: u32) -> Self {
        let mut amp = Amp {
            num: num.into(),
            half_exp,
        };
        amp.canonicalize();
        amp
    }

    pub fn zero() -> Self {
        Amp {
            num: BigInt::zero(),
            half_exp: 0,
        }
    }

    pub fn one() -> Self {
        Amp {
            num: BigInt::one(),
            half_exp: 0,
        }
    }

    /// `1 / sqrt(2)`, the Hadamard coefficient.
    pub fn inv_sqrt2() -> Self {
        Amp {
            num: BigInt::one(),
            half_exp: 1,
        }
    }

    pub fn num(&self) -> &BigInt {
        &self.num
    }

    pub fn half_exp(&self) -> u32 {
        self.half_exp
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn canonicalize(&mut self) {
        if self.num.is_zero() {
            self.half_exp = 0;
            return;
        }
        while self.half_exp >= 2 && self.num.is_even() {
            self.num /= 2;
            self.half_exp -= 2;
        }
    }

    /// Exact addition. Fails when the half-exponent parities differ, since
    /// `a/sqrt(2)^s + b/sqrt(2)^t` with `s`, `t` of different parity has no
    /// representation in the ring.
    pub fn checked_add(&self, other: &Amp) -> Result<Amp, AmpError> {
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.half_exp % 2 != other.half_exp % 2 {
            return Err(AmpError::ParityMismatch(self.half_exp, other.half_exp));
        }
        let target = self.half_exp.max(other.half_exp);
        let lhs = &self.num << ((target - self.half_exp) / 2);
        let rhs = &other.num << ((target - other.half_exp) / 2);
        Ok(Amp::new(lhs + rhs, target))
    }

    /// Squared magnitude `num^2 / 2^half_exp` as an exact dyadic rational.
    pub fn norm_sq(&self) -> Dyadic {
        Dyadic::new(&self.num * &self.num, self.half_exp)
    }

    /// Floating-point approximation, for display only.
    pub fn to_f64(&self) -> f64 {
        self.num.to_f64().unwrap_or(f64::NAN) * 2f64.powf(-(self.half_exp as f64) / 2.0)
    }
}

impl Mul for &Amp {
    type Output = Amp;
    fn mul(self, rhs: &Amp) -> Amp {
        Amp::new(&self.num * &rhs.num, self.half_exp + rhs.half_exp)
    }
}

impl Mul for Amp {
    type Output = Amp;
    fn mul(self, rhs: Amp) -> Amp {
        &self * &rhs
    }
}

impl Neg for &Amp {
    type Output = Amp;
    fn neg(self) -> Amp {
        Amp {
            num: -&self.num,
            half_exp: self.half_exp,
        }
    }
}

impl Neg for Amp {
    type Output = Amp;
    fn neg(self) -> Amp {
        Amp {
            num: -self.num,
            half_exp: self.half_exp,
        }
    }
}

impl fmt::Display for Amp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/\u{221a}2^{}", self.num, self.half_exp)
    }
}

/// An exact dyadic rational `num / 2^exp`.
///
/// Canonical form: `num` odd or `exp = 0`, with zero represented as `(0, 0)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: BigInt,
    exp: u32,
}

impl Dyadic {
    pub fn new(num: impl Into<BigInt>, exp: u32) -> Self {
        let mut d = Dyadic {
            num: num.into(),
            exp,
        };
        d.canonicalize();
        d
    }

    pub fn zero() -> Self {
        Dyadic {
            num: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn one() -> Self {
        Dyadic {
            num: BigInt::one(),
            exp: 0,
        }
    }

    pub fn one_half() -> Self {
        Dyadic {
            num: BigInt::one(),
            exp: 1,
        }
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Dyadic {
            num: n.into(),
            exp: 0,
        }
    }

    pub fn num(&self) -> &BigInt {
        &self.num
    }

    pub fn exp(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.exp == 0 && self.num.is_one()
    }

    pub fn is_negative(&self) -> bool {
        self.num.is_negative()
    }

    fn canonicalize(&mut self) {
        if self.num.is_zero() {
            self.exp = 0;
            return;
        }
        while self.exp > 0 && self.num.is_even() {
            self.num /= 2;
            self.exp -= 1;
        }
    }

    /// Numerator after rescaling to denominator `2^exp`; `None` when the
    /// value is not representable over that denominator.
    pub fn numerator_at_exp(&self, exp: u32) -> Option<BigInt> {
        if exp < self.exp {
            return None;
        }
        Some(&self.num << (exp - self.exp))
    }

    pub fn to_rational(&self) -> Rational {
        Rational::from_ratio(self.num.clone(), BigInt::one() << self.exp)
            .expect("power of two denominator is nonzero")
    }

    /// Floating-point approximation, for display only.
    pub fn to_f64(&self) -> f64 {
        self.num.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-(self.exp as i32))
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        let exp = self.exp.max(rhs.exp);
        let lhs = &self.num << (exp - self.exp);
        let r = &rhs.num << (exp - rhs.exp);
        Dyadic::new(lhs + r, exp)
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        self + &(-rhs)
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        Dyadic::new(&self.num * &rhs.num, self.exp + rhs.exp)
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            num: -&self.num,
            exp: self.exp,
        }
    }
}

macro_rules! forward_owned_binop {
    ($trait:ident, $method:ident, $t:ty) => {
        impl $trait for $t {
            type Output = $t;
            fn $method(self, rhs: $t) -> $t {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&$t> for $t {
            type Output = $t;
            fn $method(self, rhs: &$t) -> $t {
                (&self).$method(rhs)
            }
        }
    };
}

forward_owned_binop!(Add, add, Dyadic);
forward_owned_binop!(Sub, sub, Dyadic);
forward_owned_binop!(Mul, mul, Dyadic);

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        -&self
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let exp = self.exp.max(other.exp);
        let lhs = &self.num << (exp - self.exp);
        let rhs = &other.num << (exp - other.exp);
        lhs.cmp(&rhs)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.num, self.exp)
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// An exact rational in lowest terms with positive denominator. Thresholds
/// like `c = 2/3` are not dyadic, so they live here; dyadics embed
/// losslessly for comparison.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    pub fn from_ratio(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Result<Self, AmpError> {
        let den = den.into();
        if den.is_zero() {
            return Err(AmpError::ZeroDenominator);
        }
        Ok(Rational(BigRational::new(num.into(), den)))
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn num(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn den(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    /// Smallest integer `>= self`.
    pub fn ceil_int(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    /// Floating-point approximation, for display only.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl Add for &Rational {
    type Output = Rational;
    fn add(self, rhs: &Rational) -> Rational {
        Rational(&self.0 + &rhs.0)
    }
}

impl Sub for &Rational {
    type Output = Rational;
    fn sub(self, rhs: &Rational) -> Rational {
        Rational(&self.0 - &rhs.0)
    }
}

impl Mul for &Rational {
    type Output = Rational;
    fn mul(self, rhs: &Rational) -> Rational {
        Rational(&self.0 * &rhs.0)
    }
}

forward_owned_binop!(Add, add, Rational);
forward_owned_binop!(Sub, sub, Rational);
forward_owned_binop!(Mul, mul, Rational);

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl From<&Dyadic> for Rational {
    fn from(d: &Dyadic) -> Rational {
        d.to_rational()
    }
}

impl PartialEq<Rational> for Dyadic {
    fn eq(&self, other: &Rational) -> bool {
        self.to_rational() == *other
    }
}

impl PartialEq<Dyadic> for Rational {
    fn eq(&self, other: &Dyadic) -> bool {
        *self == other.to_rational()
    }
}

impl PartialOrd<Rational> for Dyadic {
    /// Exact three-way comparison of `num/2^exp` against `p/q` by integer
    /// cross-multiplication.
    fn partial_cmp(&self, other: &Rational) -> Option<Ordering> {
        let lhs = &self.num * other.den();
        let rhs = other.num() * (BigInt::one() << self.exp);
        Some(lhs.cmp(&rhs))
    }
}

impl PartialOrd<Dyadic> for Rational {
    fn partial_cmp(&self, other: &Dyadic) -> Option<Ordering> {
        other.partial_cmp(self).map(Ordering::reverse)
    }
}

impl FromStr for Rational {
    type Err = AmpError;

    /// Parses `"num/den"` or a bare integer `"num"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AmpError::BadRationalLiteral(s.to_string());
        match s.split_once('/') {
            Some((n, d)) => {
                let num = BigInt::from_str(n.trim()).map_err(|_| bad())?;
                let den = BigInt::from_str(d.trim()).map_err(|_| bad())?;
                if den.is_zero() {
                    return Err(AmpError::ZeroDenominator);
                }
                Rational::from_ratio(num, den)
            }
            None => {
                let num = BigInt::from_str(s.trim()).map_err(|_| bad())?;
                Ok(Rational::from_int(num))
            }
        }
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

trait EvenOdd {
    fn is_even(&self) -> bool;
}

impl EvenOdd for BigInt {
    fn is_even(&self) -> bool {
        !self.bit(0)
    }
}
