//! Configurable-precision decimal floating point on top of `BigInt`.
//!
//! A value is `mant * 10^exp10` with the mantissa normalized to exactly
//! `prec` significant decimal digits (round half away from zero). Every
//! operation is correct to within one ulp of the result precision, which is
//! all the series oracles need; this is a numeric fallback, not an IEEE
//! implementation.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// Default working precision in significant decimal digits.
///
/// Order-50 series with coefficients down to 1e-45 need around 60 guard
/// digits for a decisive closed-form comparison; 128 leaves headroom.
pub const DEFAULT_PRECISION: u32 = 128;

#[derive(Clone, PartialEq, Eq)]
pub struct BigFloat {
    mant: BigInt,
    exp10: i64,
    prec: u32,
}

fn digits10(n: &BigInt) -> i64 {
    if n.is_zero() {
        return 0;
    }
    n.magnitude().to_string().len() as i64
}

/// `n / d` rounded half away from zero.
fn div_round(n: &BigInt, d: &BigInt) -> BigInt {
    let (q, r) = n.div_rem(d);
    if (&r * 2u8).magnitude() >= d.magnitude() {
        if (n.sign() == Sign::Minus) ^ (d.sign() == Sign::Minus) {
            q - 1
        } else {
            q + 1
        }
    } else {
        q
    }
}

fn pow10(e: u32) -> BigInt {
    BigInt::from(10u8).pow(e)
}

impl BigFloat {
    pub fn zero(prec: u32) -> Self {
        BigFloat { mant: BigInt::zero(), exp10: 0, prec }
    }

    pub fn one(prec: u32) -> Self {
        Self::from_i64(1, prec)
    }

    pub fn from_i64(n: i64, prec: u32) -> Self {
        Self::raw(BigInt::from(n), 0, prec)
    }

    pub fn from_bigint(n: &BigInt, prec: u32) -> Self {
        Self::raw(n.clone(), 0, prec)
    }

    pub fn from_rational(r: &BigRational, prec: u32) -> Self {
        if r.is_zero() {
            return Self::zero(prec);
        }
        let g = prec as i64 + 4 + digits10(r.denom()) - digits10(r.numer());
        if g >= 0 {
            let scaled = r.numer() * pow10(g as u32);
            Self::raw(div_round(&scaled, r.denom()), -g, prec)
        } else {
            let scaled = r.denom() * pow10((-g) as u32);
            Self::raw(div_round(r.numer(), &scaled), -g, prec)
        }
    }

    fn raw(mant: BigInt, exp10: i64, prec: u32) -> Self {
        let mut v = BigFloat { mant, exp10, prec };
        v.normalize();
        v
    }

    fn normalize(&mut self) {
        if self.mant.is_zero() {
            self.exp10 = 0;
            return;
        }
        let d = digits10(&self.mant);
        let target = self.prec as i64;
        if d > target {
            let shift = (d - target) as u32;
            self.mant = div_round(&self.mant, &pow10(shift));
            self.exp10 += shift as i64;
            // rounding can carry into one extra digit (999.. -> 1000..)
            if digits10(&self.mant) > target {
                self.mant = div_round(&self.mant, &BigInt::from(10));
                self.exp10 += 1;
            }
        } else if d < target {
            let shift = (target - d) as u32;
            self.mant *= pow10(shift);
            self.exp10 -= shift as i64;
        }
        if self.mant.is_zero() {
            self.exp10 = 0;
        }
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    /// Re-round to a different precision.
    pub fn with_prec(&self, prec: u32) -> Self {
        Self::raw(self.mant.clone(), self.exp10, prec)
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }

    /// Exponent e with |value| in [10^e, 10^(e+1)), i.e. of the leading digit.
    pub fn magnitude_exp(&self) -> Option<i64> {
        (!self.is_zero()).then(|| self.exp10 + digits10(&self.mant) - 1)
    }

    /// Leading significant digit (1..=9).
    pub fn leading_digit(&self) -> Option<u8> {
        if self.is_zero() {
            return None;
        }
        let s = self.mant.magnitude().to_string();
        Some(s.as_bytes()[0] - b'0')
    }

    pub fn abs(&self) -> Self {
        BigFloat { mant: self.mant.abs(), exp10: self.exp10, prec: self.prec }
    }

    pub fn neg(&self) -> Self {
        BigFloat { mant: -(&self.mant), exp10: self.exp10, prec: self.prec }
    }

    pub fn add(&self, other: &Self) -> Self {
        let prec = self.prec.max(other.prec);
        if self.is_zero() {
            return other.with_prec(prec);
        }
        if other.is_zero() {
            return self.with_prec(prec);
        }
        let ma = self.magnitude_exp().unwrap();
        let mb = other.magnitude_exp().unwrap();
        // a dwarfs b (or vice versa): the sum rounds to the larger operand
        if ma - mb > prec as i64 + 2 {
            return self.with_prec(prec);
        }
        if mb - ma > prec as i64 + 2 {
            return other.with_prec(prec);
        }
        let (lo, hi) = if self.exp10 <= other.exp10 { (self, other) } else { (other, self) };
        let shift = (hi.exp10 - lo.exp10) as u32;
        let mant = &lo.mant + &hi.mant * pow10(shift);
        Self::raw(mant, lo.exp10, prec)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let prec = self.prec.max(other.prec);
        Self::raw(&self.mant * &other.mant, self.exp10 + other.exp10, prec)
    }

    pub fn mul_i64(&self, k: i64) -> Self {
        Self::raw(&self.mant * BigInt::from(k), self.exp10, self.prec)
    }

    pub fn div_i64(&self, k: i64) -> Self {
        assert!(k != 0, "division by zero");
        let scale = self.prec + 4;
        let scaled = &self.mant * pow10(scale);
        Self::raw(div_round(&scaled, &BigInt::from(k)), self.exp10 - scale as i64, self.prec)
    }

    pub fn div(&self, other: &Self) -> Self {
        assert!(!other.is_zero(), "division by zero");
        let prec = self.prec.max(other.prec);
        if self.is_zero() {
            return Self::zero(prec);
        }
        let scale = prec + 4;
        let scaled = &self.mant * pow10(scale);
        Self::raw(
            div_round(&scaled, &other.mant),
            self.exp10 - other.exp10 - scale as i64,
            prec,
        )
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut acc = Self::one(self.prec);
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Floor-style square root of a nonnegative value, correct to 1 ulp.
    pub fn sqrt(&self) -> Self {
        assert!(!self.is_negative(), "sqrt of negative value");
        if self.is_zero() {
            return self.clone();
        }
        let d = digits10(&self.mant);
        let mut shift = (2 * self.prec as i64 + 4 - d).max(0);
        if (self.exp10 - shift) % 2 != 0 {
            shift += 1;
        }
        let n = &self.mant * pow10(shift as u32);
        Self::raw(n.sqrt(), (self.exp10 - shift) / 2, self.prec)
    }

    pub fn cmp_value(&self, other: &Self) -> Ordering {
        let d = self.sub(other);
        if d.is_zero() {
            Ordering::Equal
        } else if d.is_negative() {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }

    pub fn to_f64(&self) -> f64 {
        let m = self.mant.to_f64().unwrap_or(f64::NAN);
        m * 10f64.powi(self.exp10.clamp(-400, 400) as i32)
    }

    /// Scientific notation with `sig` significant digits, e.g. `-1.1e-44`.
    pub fn format_sci(&self, sig: u32) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let sig = sig.max(1);
        let rounded = self.with_prec(sig);
        let digits = rounded.mant.magnitude().to_string();
        let digits = &digits[..(sig as usize).min(digits.len())];
        let exp = rounded.magnitude_exp().unwrap();
        let sign = if rounded.is_negative() { "-" } else { "" };
        let trimmed = digits.trim_end_matches('0');
        let trimmed = if trimmed.is_empty() { "0" } else { trimmed };
        if trimmed.len() == 1 {
            format!("{sign}{trimmed}e{exp}")
        } else {
            format!("{sign}{}.{}e{exp}", &trimmed[..1], &trimmed[1..])
        }
    }

    // ------------------------------------------------------------ functions

    /// Taylor sine; intended for |x| < 4 (all uses here are within one period).
    pub fn sin(&self) -> Self {
        let w = self.prec + 10;
        let x = self.with_prec(w);
        let x2 = x.mul(&x);
        let mut term = x.clone();
        let mut sum = x.clone();
        let cutoff = match x.magnitude_exp() {
            Some(m) => m - w as i64 - 4,
            None => return Self::zero(self.prec),
        };
        let mut k: i64 = 0;
        loop {
            k += 1;
            term = term.mul(&x2).div_i64((2 * k) * (2 * k + 1)).neg();
            if term.is_zero() || term.magnitude_exp().unwrap() < cutoff {
                break;
            }
            sum = sum.add(&term);
        }
        sum.with_prec(self.prec)
    }

    /// Taylor arcsine; converges for |x| < 1, meant for |x| <= 1/2.
    pub fn arcsin(&self) -> Self {
        let w = self.prec + 10;
        let x = self.with_prec(w);
        let x2 = x.mul(&x);
        let mut term = x.clone();
        let mut sum = x.clone();
        let cutoff = match x.magnitude_exp() {
            Some(m) => m - w as i64 - 4,
            None => return Self::zero(self.prec),
        };
        let mut k: i64 = 0;
        loop {
            // term_{k+1} = term_k * x^2 * (2k+1)^2 / ((2k+2)(2k+3))
            term = term
                .mul(&x2)
                .mul_i64((2 * k + 1) * (2 * k + 1))
                .div_i64((2 * k + 2) * (2 * k + 3));
            k += 1;
            if term.is_zero() || term.magnitude_exp().unwrap() < cutoff {
                break;
            }
            sum = sum.add(&term);
        }
        sum.with_prec(self.prec)
    }

    /// pi via Machin's formula with integer arithmetic.
    pub fn pi(prec: u32) -> Self {
        let g = prec + 12;
        let atan_inv = |n: i64| -> BigInt {
            let n2 = BigInt::from(n) * BigInt::from(n);
            let mut power = pow10(g) / BigInt::from(n);
            let mut total = power.clone();
            let mut k: i64 = 1;
            loop {
                power = &power / &n2;
                if power.is_zero() {
                    break;
                }
                let term = &power / BigInt::from(2 * k + 1);
                if k % 2 == 1 {
                    total -= term;
                } else {
                    total += term;
                }
                k += 1;
            }
            total
        };
        let pi_scaled = atan_inv(5) * 16 - atan_inv(239) * 4;
        Self::raw(pi_scaled, -(g as i64), prec)
    }
}

impl fmt::Display for BigFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.format_sci(self.prec))
    }
}

impl fmt::Debug for BigFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.format_sci(12))
    }
}
