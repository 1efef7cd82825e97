//! Exact root extraction for univariate polynomials over `QuadExt`.
//!
//! Strategy: strip zero roots, peel rational roots (rational root theorem),
//! then finish quadratics in the quadratic extension and handle higher even
//! polynomials through the `s = x^2` substitution. Whatever resists stays in
//! an explicit remainder for the caller's numeric fallback.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::exactnum::{factorize, QuadExt};

use super::rpoly::RPoly;

/// Result of exact root hunting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExactRoots {
    /// Every root found exactly (with multiplicity, in discovery order).
    Complete(Vec<QuadExt>),
    /// Some factor resisted exact solving.
    Partial { found: Vec<QuadExt>, remainder: RPoly },
}

impl ExactRoots {
    pub fn roots(&self) -> &[QuadExt] {
        match self {
            ExactRoots::Complete(r) => r,
            ExactRoots::Partial { found, .. } => found,
        }
    }

    pub fn is_complete(&self) -> bool {
        matches!(self, ExactRoots::Complete(_))
    }
}

/// Find roots of `p` exactly where possible. Nonconstant `p` expected.
pub fn exact_roots(p: &RPoly) -> ExactRoots {
    let mut work = p.clone();
    let mut found = Vec::new();

    // zero roots
    while !work.is_zero() && work.coeff(0).is_zero() && work.degree().unwrap_or(0) >= 1 {
        work = RPoly::new(work.coeffs()[1..].to_vec());
        found.push(QuadExt::zero());
    }

    // rational roots when all coefficients are rational
    if work.degree().unwrap_or(0) >= 1 {
        if let Some(int_coeffs) = integer_coefficients(&work) {
            for root in rational_root_candidates(&int_coeffs) {
                let r = QuadExt::from_rational(root);
                while work.degree().unwrap_or(0) >= 1 && work.eval(&r).is_zero() {
                    let (q, rem) = work.div_rem(&RPoly::linear_root(&r));
                    debug_assert!(rem.is_zero());
                    work = q;
                    found.push(r.clone());
                }
            }
        }
    }

    finish(work, found)
}

fn finish(work: RPoly, mut found: Vec<QuadExt>) -> ExactRoots {
    match work.degree() {
        None | Some(0) => return ExactRoots::Complete(found),
        Some(1) => {
            let c0 = work.coeff(0);
            let c1 = work.coeff(1);
            match c0.checked_div(&c1) {
                Ok(v) => {
                    found.push(-v);
                    return ExactRoots::Complete(found);
                }
                Err(_) => return ExactRoots::Partial { found, remainder: work },
            }
        }
        Some(2) => {
            if let Some(pair) = solve_quadratic(&work) {
                found.extend(pair);
                return ExactRoots::Complete(found);
            }
            return ExactRoots::Partial { found, remainder: work };
        }
        _ => {}
    }

    // even polynomial: roots come in +/- pairs of sqrt(s-roots)
    if let Some(even) = work.even_part() {
        match exact_roots(&even) {
            ExactRoots::Complete(s_roots) => {
                let mut work = work;
                let mut pending = Vec::new();
                for s in s_roots {
                    if let Some(sr) = s.as_rational() {
                        let u = QuadExt::rational_sqrt(sr);
                        // deflate by x^2 - s to stay inside one extension
                        let q = RPoly::new(vec![-&s, QuadExt::zero(), QuadExt::one()]);
                        let (quot, rem) = work.div_rem(&q);
                        debug_assert!(rem.is_zero());
                        work = quot;
                        pending.push(u.clone());
                        pending.push(-u);
                    }
                }
                found.extend(pending);
                if work.degree().unwrap_or(0) == 0 {
                    return ExactRoots::Complete(found);
                }
                return ExactRoots::Partial { found, remainder: work };
            }
            ExactRoots::Partial { .. } => {
                return ExactRoots::Partial { found, remainder: work }
            }
        }
    }

    ExactRoots::Partial { found, remainder: work }
}

/// Quadratic formula inside one quadratic extension; None when the roots
/// would need a field tower.
fn solve_quadratic(p: &RPoly) -> Option<[QuadExt; 2]> {
    let (c, b, a) = (p.coeff(0), p.coeff(1), p.coeff(2));
    let disc = &b * &b - &(&a * &c * &QuadExt::from_int(4));
    let sqrt_disc = disc.sqrt().ok()?;
    let two_a = &a * &QuadExt::from_int(2);
    let r1 = (sqrt_disc.checked_sub(&b).ok()?).checked_div(&two_a).ok()?;
    let r2 = ((-&sqrt_disc).checked_sub(&b).ok()?).checked_div(&two_a).ok()?;
    Some([r1, r2])
}

/// Clear denominators and content; None when some coefficient is irrational.
fn integer_coefficients(p: &RPoly) -> Option<Vec<BigInt>> {
    let rationals: Option<Vec<&BigRational>> =
        p.coeffs().iter().map(|c| c.as_rational()).collect();
    let rationals = rationals?;
    let mut lcm = BigInt::one();
    for r in &rationals {
        lcm = lcm.lcm(r.denom());
    }
    let ints: Vec<BigInt> = rationals
        .iter()
        .map(|r| r.numer() * (&lcm / r.denom()))
        .collect();
    let mut gcd = BigInt::zero();
    for c in &ints {
        gcd = gcd.gcd(c);
    }
    if gcd.is_zero() || gcd.is_one() {
        Some(ints)
    } else {
        Some(ints.iter().map(|c| c / &gcd).collect())
    }
}

/// Candidate rational roots ±p/q with p | constant, q | leading.
/// Empty when the factorizations are incomplete or the divisor sets explode.
fn rational_root_candidates(coeffs: &[BigInt]) -> Vec<BigRational> {
    const DIVISOR_CAP: usize = 4096;
    let c0 = &coeffs[0];
    let cn = coeffs.last().unwrap();
    debug_assert!(!c0.is_zero());
    let Some(ps) = divisors(c0, DIVISOR_CAP) else { return Vec::new() };
    let Some(qs) = divisors(cn, DIVISOR_CAP) else { return Vec::new() };
    let mut out = Vec::new();
    for p in &ps {
        for q in &qs {
            let r = BigRational::new(p.clone(), q.clone());
            let neg = -&r;
            if !out.contains(&r) {
                out.push(r);
            }
            if !out.contains(&neg) {
                out.push(neg);
            }
        }
    }
    out
}

fn divisors(n: &BigInt, cap: usize) -> Option<Vec<BigInt>> {
    let factors = complete_factorization(n)?;
    let mut divs = vec![BigInt::one()];
    for (p, e) in factors {
        let mut next = Vec::with_capacity(divs.len() * (e as usize + 1));
        let mut pk = BigInt::one();
        for _ in 0..=e {
            for d in &divs {
                next.push(d * &pk);
            }
            pk *= &p;
        }
        divs = next;
        if divs.len() > cap {
            return None;
        }
    }
    Some(divs)
}

fn complete_factorization(n: &BigInt) -> Option<std::collections::BTreeMap<BigInt, u32>> {
    factorize(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> QuadExt {
        QuadExt::from_int(n)
    }

    fn poly(cs: &[i64]) -> RPoly {
        RPoly::new(cs.iter().map(|&n| q(n)).collect())
    }

    #[test]
    fn rational_quartic() {
        // r(r-4)(r-6)(r+1) = r^4 - 9r^3 + 14r^2 + 24r
        let p = poly(&[0, 24, 14, -9, 1]);
        let roots = exact_roots(&p);
        assert!(roots.is_complete());
        let mut rs: Vec<_> = roots.roots().to_vec();
        rs.sort_by_key(|r| r.rational_part().clone());
        assert_eq!(rs, vec![q(-1), q(0), q(4), q(6)]);
    }

    #[test]
    fn irrational_quadratic() {
        // 5r^2 - 25r - 36: roots 5/2 ± sqrt(1345)/10
        let p = poly(&[-36, -25, 5]);
        let roots = exact_roots(&p);
        assert!(roots.is_complete());
        let expect: QuadExt = "5/2 + 1/10*sqrt(1345)".parse().unwrap();
        assert!(roots.roots().contains(&expect));
    }

    #[test]
    fn complex_quadratic() {
        // r^2 - 5r + 18: disc = -47
        let p = poly(&[18, -5, 1]);
        let roots = exact_roots(&p);
        assert!(roots.is_complete());
        for r in roots.roots() {
            assert!(r.radicand().is_negative());
            assert!(p.eval(r).is_zero());
        }
    }

    #[test]
    fn even_sextic_from_compatibility() {
        // u^2 (128u^2 - 625)(23936u^2 + 8125)
        let a = poly(&[0, 0, 1]);
        let b = poly(&[-625, 0, 128]);
        let c = poly(&[8125, 0, 23936]);
        let p = a.mul(&b).mul(&c);
        let roots = exact_roots(&p);
        assert!(roots.is_complete());
        let rs = roots.roots();
        assert_eq!(rs.len(), 6);
        assert!(rs.contains(&QuadExt::radical(25, 16, 2)));
        assert!(rs.contains(&QuadExt::radical(-25, 16, 2)));
        assert!(rs.contains(&QuadExt::radical(25, 2992, -4862)));
        assert!(rs.contains(&QuadExt::radical(-25, 2992, -4862)));
        assert_eq!(rs.iter().filter(|r| r.is_zero()).count(), 2);
    }

    #[test]
    fn cubic_resists() {
        // r^3 - 2 has no rational root and is not even
        let p = poly(&[-2, 0, 0, 1]);
        match exact_roots(&p) {
            ExactRoots::Partial { found, remainder } => {
                assert!(found.is_empty());
                assert_eq!(remainder.degree(), Some(3));
            }
            ExactRoots::Complete(_) => panic!("cubic should not resolve"),
        }
    }
}
