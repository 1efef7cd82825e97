//! Exact arithmetic in a single quadratic extension Q(sqrt(q)).

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::bigfloat::BigFloat;
use super::factor::squarefree_core;
use super::NumberError;

/// A number `rat + rad * sqrt(radicand)` with rational `rat`, `rad` and a
/// square-free integer `radicand`.
///
/// Canonical form: `radicand == 1` exactly when `rad == 0` (purely rational
/// values carry the marker radicand 1). The radicand may be negative, which
/// encodes pure-imaginary radicals; such values have no real float image.
/// Two values are equal iff all three components are equal.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QuadExt {
    rat: BigRational,
    rad: BigRational,
    radicand: BigInt,
}

impl QuadExt {
    /// Build `rat + rad*sqrt(radicand)`, normalizing the radicand to its
    /// square-free core (square factors move into `rad`).
    pub fn new(rat: BigRational, rad: BigRational, radicand: BigInt) -> Self {
        if rad.is_zero() {
            return Self::from_rational(rat);
        }
        assert!(!radicand.is_zero(), "radicand must be nonzero");
        let (k, m) = squarefree_core(&radicand);
        let rad = rad * BigRational::from(k);
        if m.is_one() {
            Self::from_rational(rat + rad)
        } else {
            QuadExt { rat, rad, radicand: m }
        }
    }

    pub fn from_rational(rat: BigRational) -> Self {
        QuadExt { rat, rad: BigRational::zero(), radicand: BigInt::one() }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(BigRational::from(BigInt::from(n)))
    }

    /// `n/d` as an exact rational value.
    pub fn ratio(n: i64, d: i64) -> Self {
        Self::from_rational(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    /// `(n/d) * sqrt(q)`.
    pub fn radical(n: i64, d: i64, q: i64) -> Self {
        Self::new(
            BigRational::zero(),
            BigRational::new(BigInt::from(n), BigInt::from(d)),
            BigInt::from(q),
        )
    }

    /// The exact square root of a rational: `v` with `v^2 == s`.
    ///
    /// The radicand of the result is the square-free core of `s`; perfect
    /// squares come back purely rational. `s` may be zero or negative.
    pub fn rational_sqrt(s: &BigRational) -> Self {
        if s.is_zero() {
            return Self::zero();
        }
        // sqrt(n/d) = sqrt(n*d)/d
        let nd = s.numer() * s.denom();
        let (k, m) = squarefree_core(&nd);
        let coeff = BigRational::new(k, s.denom().clone());
        if m.is_one() {
            Self::from_rational(coeff)
        } else {
            QuadExt { rat: BigRational::zero(), rad: coeff, radicand: m }
        }
    }

    /// The square root of a QuadExt that happens to be rational; a value with
    /// a nonzero radical part would need a field tower.
    pub fn sqrt(&self) -> Result<Self, NumberError> {
        if self.rad.is_zero() {
            Ok(Self::rational_sqrt(&self.rat))
        } else {
            Err(NumberError::IncompatibleRadicands(self.radicand.clone(), BigInt::from(-1)))
        }
    }

    pub fn zero() -> Self {
        Self::from_rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Self::from_rational(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.rat.is_zero() && self.rad.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.rad.is_zero() && self.rat.is_one()
    }

    pub fn is_rational(&self) -> bool {
        self.rad.is_zero()
    }

    /// The rational part (the whole value when `is_rational`).
    pub fn rational_part(&self) -> &BigRational {
        &self.rat
    }

    /// Coefficient of `sqrt(radicand)`.
    pub fn radical_part(&self) -> &BigRational {
        &self.rad
    }

    pub fn radicand(&self) -> &BigInt {
        &self.radicand
    }

    /// Whole value as a rational, if it is one.
    pub fn as_rational(&self) -> Option<&BigRational> {
        self.rad.is_zero().then_some(&self.rat)
    }

    /// True if the value is an integer.
    pub fn is_integer(&self) -> bool {
        self.rad.is_zero() && self.rat.is_integer()
    }

    /// The shared radicand for an operation, or an error for a genuine mix.
    fn unify(&self, other: &Self) -> Result<BigInt, NumberError> {
        if self.rad.is_zero() {
            Ok(other.radicand.clone())
        } else if other.rad.is_zero() || self.radicand == other.radicand {
            Ok(self.radicand.clone())
        } else {
            Err(NumberError::IncompatibleRadicands(
                self.radicand.clone(),
                other.radicand.clone(),
            ))
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, NumberError> {
        let radicand = self.unify(other)?;
        Ok(Self::new(&self.rat + &other.rat, &self.rad + &other.rad, radicand))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, NumberError> {
        let radicand = self.unify(other)?;
        Ok(Self::new(&self.rat - &other.rat, &self.rad - &other.rad, radicand))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, NumberError> {
        let radicand = self.unify(other)?;
        let q = BigRational::from(radicand.clone());
        // (a + b s)(c + d s) = ac + bd q + (ad + bc) s
        let rat = &self.rat * &other.rat + &self.rad * &other.rad * &q;
        let rad = &self.rat * &other.rad + &self.rad * &other.rat;
        Ok(Self::new(rat, rad, radicand))
    }

    /// Conjugate-based exact inversion: `(a + b s)^-1 = (a - b s)/(a^2 - q b^2)`.
    pub fn checked_inv(&self) -> Result<Self, NumberError> {
        if self.is_zero() {
            return Err(NumberError::DivisionByZero);
        }
        let q = BigRational::from(self.radicand.clone());
        let norm = &self.rat * &self.rat - &self.rad * &self.rad * &q;
        // norm == 0 would mean radicand is a rational square, excluded by canonical form
        debug_assert!(!norm.is_zero());
        Ok(Self::new(&self.rat / &norm, -(&self.rad) / &norm, self.radicand.clone()))
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, NumberError> {
        self.checked_mul(&other.checked_inv()?)
    }

    /// Integer power; negative exponents invert (error on zero base).
    pub fn checked_pow(&self, n: i64) -> Result<Self, NumberError> {
        let base = if n < 0 { self.checked_inv()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.checked_mul(&sq)?;
            }
            e >>= 1;
            if e > 0 {
                sq = sq.checked_mul(&sq)?;
            }
        }
        Ok(acc)
    }

    pub fn pow(&self, n: i64) -> Self {
        self.checked_pow(n).expect("pow failed")
    }

    /// Exact decimal image; errors on a negative radicand.
    pub fn to_bigfloat(&self, prec: u32) -> Result<BigFloat, NumberError> {
        if self.rad.is_zero() {
            return Ok(BigFloat::from_rational(&self.rat, prec));
        }
        if self.radicand.is_negative() {
            return Err(NumberError::ComplexValue(self.radicand.clone()));
        }
        let root = BigFloat::from_bigint(&self.radicand, prec + 4).sqrt();
        let rad = BigFloat::from_rational(&self.rad, prec + 4);
        let rat = BigFloat::from_rational(&self.rat, prec + 4);
        Ok(rat.add(&rad.mul(&root)).with_prec(prec))
    }
}

impl Default for QuadExt {
    fn default() -> Self {
        Self::zero()
    }
}

impl From<BigRational> for QuadExt {
    fn from(r: BigRational) -> Self {
        Self::from_rational(r)
    }
}

impl From<i64> for QuadExt {
    fn from(n: i64) -> Self {
        Self::from_int(n)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait for &QuadExt {
            type Output = QuadExt;
            fn $method(self, rhs: &QuadExt) -> QuadExt {
                self.$checked(rhs).expect(concat!("QuadExt ", stringify!($method)))
            }
        }
        impl $trait for QuadExt {
            type Output = QuadExt;
            fn $method(self, rhs: QuadExt) -> QuadExt {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&QuadExt> for QuadExt {
            type Output = QuadExt;
            fn $method(self, rhs: &QuadExt) -> QuadExt {
                (&self).$method(rhs)
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);
forward_binop!(Div, div, checked_div);

impl Neg for &QuadExt {
    type Output = QuadExt;
    fn neg(self) -> QuadExt {
        QuadExt {
            rat: -(&self.rat),
            rad: -(&self.rad),
            radicand: self.radicand.clone(),
        }
    }
}

impl Neg for QuadExt {
    type Output = QuadExt;
    fn neg(self) -> QuadExt {
        -(&self)
    }
}

impl AddAssign<&QuadExt> for QuadExt {
    fn add_assign(&mut self, rhs: &QuadExt) {
        *self = (&*self) + rhs;
    }
}

impl SubAssign<&QuadExt> for QuadExt {
    fn sub_assign(&mut self, rhs: &QuadExt) {
        *self = (&*self) - rhs;
    }
}

impl MulAssign<&QuadExt> for QuadExt {
    fn mul_assign(&mut self, rhs: &QuadExt) {
        *self = (&*self) * rhs;
    }
}

impl fmt::Display for QuadExt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rad.is_zero() {
            return write!(f, "{}", self.rat);
        }
        let radical = |f: &mut fmt::Formatter<'_>, rad: &BigRational| -> fmt::Result {
            if rad.is_one() {
                write!(f, "sqrt({})", self.radicand)
            } else if *rad == -BigRational::one() {
                write!(f, "-sqrt({})", self.radicand)
            } else {
                write!(f, "{}*sqrt({})", rad, self.radicand)
            }
        };
        if self.rat.is_zero() {
            radical(f, &self.rad)
        } else if self.rad.is_negative() {
            write!(f, "{} - ", self.rat)?;
            radical(f, &-(&self.rad))
        } else {
            write!(f, "{} + ", self.rat)?;
            radical(f, &self.rad)
        }
    }
}

impl fmt::Debug for QuadExt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for QuadExt {
    type Err = NumberError;

    /// Parses the exact token forms used in reports: `-1819/663552`,
    /// `25/16*sqrt(2)`, `1 + sqrt(2)`, `5 - 1/2*sqrt(-13)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(NumberError::Syntax("empty number".into()));
        }
        // split into signed terms at top level (not inside parens)
        let bytes = s.as_bytes();
        let mut terms: Vec<(i32, &str)> = Vec::new();
        let mut depth = 0usize;
        let mut start = 0usize;
        let mut sign = 1i32;
        let mut seen_content = false;
        for (i, &b) in bytes.iter().enumerate() {
            match b {
                b'(' => {
                    depth += 1;
                    seen_content = true;
                }
                b')' => {
                    depth = depth
                        .checked_sub(1)
                        .ok_or_else(|| NumberError::Syntax(format!("unbalanced parens in {s:?}")))?;
                }
                b'+' | b'-' if depth == 0 => {
                    if seen_content {
                        terms.push((sign, s[start..i].trim()));
                        sign = if b == b'-' { -1 } else { 1 };
                        start = i + 1;
                    } else if b == b'-' {
                        sign = -sign;
                        start = i + 1;
                    } else {
                        start = i + 1;
                    }
                }
                b if !b.is_ascii_whitespace() => seen_content = true,
                _ => {}
            }
        }
        if depth != 0 {
            return Err(NumberError::Syntax(format!("unbalanced parens in {s:?}")));
        }
        terms.push((sign, s[start..].trim()));

        let mut acc = QuadExt::zero();
        for (sg, term) in terms {
            if term.is_empty() {
                return Err(NumberError::Syntax(format!("empty term in {s:?}")));
            }
            let v = parse_term(term)?;
            let v = if sg < 0 { -v } else { v };
            acc = acc.checked_add(&v)?;
        }
        Ok(acc)
    }
}

fn parse_rational(s: &str) -> Result<BigRational, NumberError> {
    BigRational::from_str(s.trim())
        .map_err(|e| NumberError::Syntax(format!("bad rational {s:?}: {e}")))
}

fn parse_term(term: &str) -> Result<QuadExt, NumberError> {
    if let Some(idx) = term.find("sqrt") {
        let (coeff_part, sqrt_part) = term.split_at(idx);
        let inner = sqrt_part
            .strip_prefix("sqrt")
            .and_then(|r| r.trim().strip_prefix('('))
            .and_then(|r| r.trim_end().strip_suffix(')'))
            .ok_or_else(|| NumberError::Syntax(format!("malformed sqrt in {term:?}")))?;
        let radicand = parse_rational(inner)?;
        let coeff_part = coeff_part.trim().trim_end_matches('*').trim();
        let coeff = if coeff_part.is_empty() {
            BigRational::one()
        } else {
            parse_rational(coeff_part)?
        };
        let root = QuadExt::rational_sqrt(&radicand);
        Ok(QuadExt::from_rational(coeff).checked_mul(&root)?)
    } else {
        Ok(QuadExt::from_rational(parse_rational(term)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> QuadExt {
        s.parse().unwrap()
    }

    #[test]
    fn sqrt_extracts_square_factors() {
        // 1250/256 -> (25/16) sqrt(2)
        let v = QuadExt::rational_sqrt(&BigRational::new(BigInt::from(1250), BigInt::from(256)));
        assert_eq!(v, QuadExt::radical(25, 16, 2));
        assert_eq!(
            v.checked_mul(&v).unwrap(),
            QuadExt::ratio(1250, 256)
        );
    }

    #[test]
    fn sqrt_of_zero_and_squares() {
        assert!(QuadExt::rational_sqrt(&BigRational::zero()).is_zero());
        let v = QuadExt::rational_sqrt(&BigRational::new(BigInt::from(9), BigInt::from(4)));
        assert_eq!(v, QuadExt::ratio(3, 2));
    }

    #[test]
    fn sqrt_negative_paper_value() {
        // -8125/23936 -> (25/2992) sqrt(-4862); same value as (25/8) sqrt(-13/374)
        let s = BigRational::new(BigInt::from(-8125), BigInt::from(23936));
        let v = QuadExt::rational_sqrt(&s);
        assert_eq!(v, QuadExt::radical(25, 2992, -4862));
        assert_eq!(v.checked_mul(&v).unwrap().as_rational(), Some(&s));
    }

    #[test]
    fn conjugate_inverse() {
        // (1 + sqrt2)^-1 = -1 + sqrt2
        let v = q("1 + sqrt(2)");
        assert_eq!(v.checked_inv().unwrap(), q("-1 + sqrt(2)"));
    }

    #[test]
    fn paper_coefficient_squares() {
        // (25 sqrt2/16)^2 = 625/128
        let a = QuadExt::radical(25, 16, 2);
        assert_eq!(a.pow(2), QuadExt::ratio(625, 128));
        // (5 sqrt2/32)^2 * 4 = 25/128
        let b = QuadExt::radical(5, 32, 2);
        assert_eq!(b.pow(2) * QuadExt::from_int(4), QuadExt::ratio(25, 128));
    }

    #[test]
    fn mixing_radicands_is_an_error() {
        let a = QuadExt::radical(1, 1, 2);
        let b = QuadExt::radical(1, 1, 3);
        assert!(matches!(
            a.checked_add(&b),
            Err(NumberError::IncompatibleRadicands(_, _))
        ));
        // rational values are compatible with anything
        assert_eq!(a.checked_add(&QuadExt::one()).unwrap(), q("1 + sqrt(2)"));
    }

    #[test]
    fn division_by_zero() {
        assert!(matches!(
            QuadExt::one().checked_div(&QuadExt::zero()),
            Err(NumberError::DivisionByZero)
        ));
    }

    #[test]
    fn display_round_trip() {
        for s in [
            "-1819/663552",
            "25/16*sqrt(2)",
            "-25/16*sqrt(2)",
            "1 + sqrt(2)",
            "5/2 - 1/10*sqrt(1345)",
            "0",
            "sqrt(-4862)",
        ] {
            let v = q(s);
            assert_eq!(format!("{v}"), s, "canonical form of {s}");
            assert_eq!(q(&format!("{v}")), v);
        }
    }

    #[test]
    fn parse_normalizes() {
        assert_eq!(q("sqrt(8)"), q("2*sqrt(2)"));
        assert_eq!(q("sqrt(4)"), QuadExt::from_int(2));
        assert_eq!(q("sqrt(-13/374)"), QuadExt::radical(1, 374, -4862));
        assert_eq!(q("3205/3981312*sqrt(2)"), QuadExt::radical(3205, 3981312, 2));
    }

    #[test]
    fn negative_radicand_has_no_float() {
        let v = QuadExt::radical(1, 1, -2);
        assert!(matches!(v.to_bigfloat(32), Err(NumberError::ComplexValue(_))));
    }
}
