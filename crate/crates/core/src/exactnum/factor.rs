//! Square-free core extraction for radicand normalization.
//!
//! `n = k^2 * m` with `m` square-free. Factoring is trial division up to a
//! bound followed by Pollard rho; a composite that resists both stays inside
//! `m` unfactored, which keeps sqrt exact (k^2 * m == n always holds) at the
//! cost of a possibly non-minimal radicand.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Default trial-division bound.
pub const TRIAL_DIVISION_BOUND: u64 = 1_000_000;

/// Split `n` as `(k, m)` with `n = k^2 * m` and `m` square-free (best effort).
///
/// `m` keeps the sign of `n`. `n` must be nonzero.
pub fn squarefree_core(n: &BigInt) -> (BigInt, BigInt) {
    squarefree_core_with_bound(n, TRIAL_DIVISION_BOUND)
}

/// Like [`squarefree_core`] with an explicit trial-division bound.
pub fn squarefree_core_with_bound(n: &BigInt, bound: u64) -> (BigInt, BigInt) {
    assert!(!n.is_zero(), "squarefree core of zero is undefined");
    let negative = n.is_negative();
    let (factors, _) = factor_map(n.abs(), bound);
    let mut square = BigInt::one();
    let mut core = BigInt::one();
    for (p, e) in factors {
        if e >= 2 {
            square *= p.pow(e / 2);
        }
        if e % 2 == 1 {
            core *= p;
        }
    }
    if negative {
        core = -core;
    }
    (square, core)
}

/// Full factorization into probable primes; None when some composite residue
/// resisted both trial division and rho.
pub fn factorize(n: &BigInt) -> Option<BTreeMap<BigInt, u32>> {
    if n.is_zero() {
        return None;
    }
    let (factors, complete) = factor_map(n.abs(), TRIAL_DIVISION_BOUND);
    complete.then_some(factors)
}

fn factor_map(n_abs: BigInt, bound: u64) -> (BTreeMap<BigInt, u32>, bool) {
    let mut rem = n_abs;
    let mut complete = true;
    let mut factors: BTreeMap<BigInt, u32> = BTreeMap::new();

    // trial division
    let mut p: u64 = 2;
    while p <= bound {
        let pb = BigInt::from(p);
        if (&pb * &pb) > rem {
            break;
        }
        let mut e = 0u32;
        loop {
            let (q, r) = rem.div_rem(&pb);
            if r.is_zero() {
                rem = q;
                e += 1;
            } else {
                break;
            }
        }
        if e > 0 {
            factors.insert(pb, e);
        }
        p = if p == 2 { 3 } else { p + 2 };
    }

    // whatever remains is prime, a perfect square, rho territory, or a residue
    let mut stack = vec![(rem, 1u32)];
    while let Some((m, mult)) = stack.pop() {
        if m.is_one() {
            continue;
        }
        let r = m.sqrt();
        if &r * &r == m {
            stack.push((r, mult * 2));
            continue;
        }
        if is_probable_prime(&m) {
            *factors.entry(m).or_insert(0) += mult;
            continue;
        }
        match pollard_rho(&m) {
            Some(d) => {
                let q = &m / &d;
                stack.push((d, mult));
                stack.push((q, mult));
            }
            None => {
                // unfactored residue: lands in the core, exactness preserved
                complete = false;
                *factors.entry(m).or_insert(0) += mult;
            }
        }
    }
    (factors, complete)
}

/// Miller-Rabin with a fixed witness set; deterministic below 3.3e24.
pub fn is_probable_prime(n: &BigInt) -> bool {
    if let Some(small) = n.to_u64() {
        if small < 2 {
            return false;
        }
        for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31] {
            if small == p {
                return true;
            }
            if small % p == 0 {
                return false;
            }
        }
    }
    let two = BigInt::from(2);
    if n < &two {
        return false;
    }
    if n.is_even() {
        return *n == two;
    }
    let n_minus_1: BigInt = n - BigInt::one();
    let mut d = n_minus_1.clone();
    let mut s = 0u32;
    while d.is_even() {
        d >>= 1;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let ab = BigInt::from(a);
        if &ab >= n {
            continue;
        }
        let mut x = ab.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Brent-style Pollard rho. Returns a nontrivial factor, or None on failure.
fn pollard_rho(n: &BigInt) -> Option<BigInt> {
    for c in 1u64..32 {
        let cb = BigInt::from(c);
        let f = |x: &BigInt| (x * x + &cb) % n;
        let mut x = BigInt::from(2);
        let mut y = x.clone();
        let mut d = BigInt::one();
        let mut iter = 0u64;
        while d.is_one() {
            x = f(&x);
            y = f(&f(&y));
            let diff = if x > y { &x - &y } else { &y - &x };
            if diff.is_zero() {
                break; // cycle without factor; retry with a different c
            }
            d = diff.gcd(n);
            iter += 1;
            if iter > 1_000_000 {
                return None;
            }
        }
        if !d.is_one() && &d != n {
            return Some(d);
        }
    }
    None
}
