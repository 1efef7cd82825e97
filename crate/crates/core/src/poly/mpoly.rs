//! Sparse multivariate polynomials over `QuadExt` in indexed unknowns.
//!
//! Unknowns are plain `usize` ids; what they mean (leading coefficients,
//! series parameters) is the caller's business. The term map is kept free of
//! zero coefficients and zero exponents.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::exactnum::{NumberError, QuadExt};

/// A monomial: sorted `(unknown id, exponent)` pairs, exponents nonzero.
///
/// Ordering is lexicographic in the exponent vector with lower ids weighing
/// more, which is multiplication-compatible (needed for exact division).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Mono(Vec<(usize, u32)>);

impl Mono {
    pub fn unit() -> Self {
        Mono(Vec::new())
    }

    pub fn var(id: usize) -> Self {
        Mono(vec![(id, 1)])
    }

    pub fn is_unit(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponent(&self, id: usize) -> u32 {
        self.0
            .iter()
            .find_map(|&(v, e)| (v == id).then_some(e))
            .unwrap_or(0)
    }

    pub fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&(v, _)| v)
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out: BTreeMap<usize, u32> = self.0.iter().copied().collect();
        for &(v, e) in &other.0 {
            *out.entry(v).or_insert(0) += e;
        }
        Mono(out.into_iter().collect())
    }

    pub fn divides(&self, other: &Self) -> bool {
        self.0.iter().all(|&(v, e)| other.exponent(v) >= e)
    }

    /// `other / self`; caller must check `divides` first.
    pub fn div(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for &(v, e) in &other.0 {
            let rest = e - self.exponent(v);
            if rest > 0 {
                out.push((v, rest));
            }
        }
        Mono(out)
    }

    /// Componentwise minimum (gcd of monomials).
    pub fn gcd(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for &(v, e) in &self.0 {
            let m = e.min(other.exponent(v));
            if m > 0 {
                out.push((v, m));
            }
        }
        Mono(out)
    }
}

impl Ord for Mono {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let vars: BTreeSet<usize> = self.vars().chain(other.vars()).collect();
        for v in vars {
            match self.exponent(v).cmp(&other.exponent(v)) {
                std::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        std::cmp::Ordering::Equal
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse multivariate polynomial with `QuadExt` coefficients.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct MPoly {
    terms: BTreeMap<Mono, QuadExt>,
}

impl MPoly {
    pub fn zero() -> Self {
        MPoly { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(QuadExt::one())
    }

    pub fn constant(c: QuadExt) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Mono::unit(), c);
        }
        MPoly { terms }
    }

    pub fn var(id: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Mono::var(id), QuadExt::one());
        MPoly { terms }
    }

    pub fn term(c: QuadExt, m: Mono) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        MPoly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &QuadExt)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// The constant value if no unknowns appear.
    pub fn as_constant(&self) -> Option<QuadExt> {
        match self.terms.len() {
            0 => Some(QuadExt::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_unit().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    /// All unknown ids that occur.
    pub fn vars(&self) -> BTreeSet<usize> {
        self.terms.keys().flat_map(|m| m.vars()).collect()
    }

    pub fn degree_in(&self, id: usize) -> u32 {
        self.terms.keys().map(|m| m.exponent(id)).max().unwrap_or(0)
    }

    fn insert(&mut self, m: Mono, c: QuadExt) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get() + &c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        MPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, c: &QuadExt) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        MPoly {
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = MPoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.insert(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn leading_term(&self) -> Option<(&Mono, &QuadExt)> {
        self.terms.iter().next_back()
    }

    /// Replace one unknown by an exact value.
    pub fn substitute(&self, id: usize, value: &QuadExt) -> Self {
        self.substitute_checked(id, value)
            .expect("substitute: incompatible radicands")
    }

    /// Like [`substitute`](Self::substitute) but None when the value lives in
    /// a different quadratic extension than the coefficients.
    pub fn substitute_checked(&self, id: usize, value: &QuadExt) -> Option<Self> {
        let mut out = MPoly::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(id);
            if e == 0 {
                out.insert(m.clone(), c.clone());
            } else {
                let rest = Mono(m.0.iter().copied().filter(|&(v, _)| v != id).collect());
                let scaled = c.checked_mul(&value.checked_pow(e as i64).ok()?).ok()?;
                out.insert(rest, scaled);
            }
        }
        Some(out)
    }

    /// Evaluate with values for every occurring unknown.
    pub fn eval(&self, values: &dyn Fn(usize) -> Option<QuadExt>) -> Result<QuadExt, NumberError> {
        let mut acc = QuadExt::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for &(v, e) in &m.0 {
                let val = values(v).ok_or_else(|| {
                    NumberError::Syntax(format!("no value for unknown #{v}"))
                })?;
                t = t.checked_mul(&val.checked_pow(e as i64)?)?;
            }
            acc = acc.checked_add(&t)?;
        }
        Ok(acc)
    }

    /// View as univariate in `id`: ascending coefficients, or None if other
    /// unknowns appear.
    pub fn as_univariate(&self, id: usize) -> Option<Vec<QuadExt>> {
        let mut coeffs = vec![QuadExt::zero(); self.degree_in(id) as usize + 1];
        for (m, c) in &self.terms {
            if m.vars().any(|v| v != id) {
                return None;
            }
            coeffs[m.exponent(id) as usize] = c.clone();
        }
        Some(coeffs)
    }

    /// Largest monomial dividing every term, and the quotient.
    pub fn monomial_content(&self) -> (Mono, Self) {
        let mut content: Option<Mono> = None;
        for m in self.terms.keys() {
            content = Some(match content {
                None => m.clone(),
                Some(c) => c.gcd(m),
            });
        }
        let content = content.unwrap_or_else(Mono::unit);
        if content.is_unit() {
            return (content, self.clone());
        }
        let quotient = MPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (content.div(m), c.clone()))
                .collect(),
        };
        (content, quotient)
    }

    /// Exact division; None when `self` is not a polynomial multiple of `d`.
    pub fn div_exact(&self, d: &Self) -> Option<Self> {
        assert!(!d.is_zero(), "division by zero polynomial");
        let (dm, dc) = d.leading_term().map(|(m, c)| (m.clone(), c.clone())).unwrap();
        let mut rem = self.clone();
        let mut quot = MPoly::zero();
        while let Some((rm, rc)) = rem.leading_term().map(|(m, c)| (m.clone(), c.clone())) {
            if !dm.divides(&rm) {
                return None;
            }
            let t = MPoly::term(&rc / &dc, dm.div(&rm));
            quot = quot.add(&t);
            rem = rem.sub(&t.mul(d));
        }
        Some(quot)
    }

    /// Render with a caller-supplied unknown namer; terms in a fixed order.
    pub fn display_with(&self, namer: &dyn Fn(usize) -> String) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let mono = m
                .0
                .iter()
                .map(|&(v, e)| {
                    if e == 1 {
                        namer(v)
                    } else {
                        format!("{}^{}", namer(v), e)
                    }
                })
                .collect::<Vec<_>>()
                .join("*");
            let coeff = format!("{c}");
            let (sign, coeff_abs) = match coeff.strip_prefix('-') {
                // only safe to strip when the whole coefficient is negated
                Some(rest) if !rest.contains(" + ") && !rest.contains(" - ") => {
                    ("-", rest.to_string())
                }
                _ => ("+", coeff),
            };
            if i == 0 {
                if sign == "-" {
                    out.push('-');
                }
            } else {
                out.push_str(if sign == "-" { " - " } else { " + " });
            }
            let needs_parens = coeff_abs.contains('+') || coeff_abs.contains(" - ");
            let coeff_abs = if needs_parens {
                format!("({coeff_abs})")
            } else {
                coeff_abs
            };
            if mono.is_empty() {
                out.push_str(&coeff_abs);
            } else if coeff_abs == "1" {
                out.push_str(&mono);
            } else {
                out.push_str(&coeff_abs);
                out.push('*');
                out.push_str(&mono);
            }
        }
        out
    }
}

impl fmt::Debug for MPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_with(&|v| format!("u{v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(n: i64, d: i64) -> QuadExt {
        QuadExt::ratio(n, d)
    }

    #[test]
    fn arithmetic_and_substitution() {
        // p = (u0 + 2)(u0 - 2) = u0^2 - 4
        let u0 = MPoly::var(0);
        let p = u0.add(&MPoly::constant(c(2, 1))).mul(&u0.sub(&MPoly::constant(c(2, 1))));
        assert_eq!(p.degree_in(0), 2);
        assert_eq!(p.substitute(0, &c(3, 1)).as_constant(), Some(c(5, 1)));
        assert!(p.substitute(0, &c(2, 1)).is_zero());
    }

    #[test]
    fn exact_division() {
        // (u0^2 - u1^2) / (u0 - u1) = u0 + u1
        let u0 = MPoly::var(0);
        let u1 = MPoly::var(1);
        let num = u0.mul(&u0).sub(&u1.mul(&u1));
        let den = u0.sub(&u1);
        let q = num.div_exact(&den).unwrap();
        assert_eq!(q, u0.add(&u1));
        // non-multiple
        assert!(num.add(&MPoly::one()).div_exact(&den).is_none());
    }

    #[test]
    fn monomial_content() {
        // u0^2*u1 + u0^3 -> content u0^2, quotient u1 + u0
        let p = MPoly::term(QuadExt::one(), Mono(vec![(0, 2), (1, 1)]))
            .add(&MPoly::term(QuadExt::one(), Mono(vec![(0, 3)])));
        let (content, q) = p.monomial_content();
        assert_eq!(content, Mono(vec![(0, 2)]));
        assert_eq!(q, MPoly::var(1).add(&MPoly::var(0)));
    }

    #[test]
    fn univariate_view() {
        let p = MPoly::var(2).pow(2).scale(&c(3, 1)).add(&MPoly::constant(c(-1, 2)));
        assert_eq!(
            p.as_univariate(2),
            Some(vec![c(-1, 2), c(0, 1), c(3, 1)])
        );
        assert_eq!(p.add(&MPoly::var(1)).as_univariate(2), None);
    }

    #[test]
    fn display_readable() {
        let p = MPoly::constant(QuadExt::ratio(21845, 47775744))
            .add(&MPoly::var(0).scale(&QuadExt::radical(-1, 6, 2)));
        assert_eq!(
            p.display_with(&|_| "cz1".to_string()),
            "-1/6*sqrt(2)*cz1 + 21845/47775744"
        );
    }
}
