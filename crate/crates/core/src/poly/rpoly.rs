//! Dense univariate polynomials over `QuadExt`, plus the variant whose
//! coefficients still contain unknowns (for resonance matrices built from
//! balances with arbitrary leading coefficients).

use std::fmt;

use crate::exactnum::QuadExt;

use super::mpoly::MPoly;

/// Univariate polynomial, ascending coefficients, last entry nonzero.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct RPoly {
    coeffs: Vec<QuadExt>,
}

impl RPoly {
    pub fn new(mut coeffs: Vec<QuadExt>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        RPoly { coeffs }
    }

    pub fn zero() -> Self {
        RPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(QuadExt::one())
    }

    pub fn constant(c: QuadExt) -> Self {
        Self::new(vec![c])
    }

    pub fn x() -> Self {
        Self::new(vec![QuadExt::zero(), QuadExt::one()])
    }

    pub fn monomial(c: QuadExt, deg: usize) -> Self {
        let mut coeffs = vec![QuadExt::zero(); deg + 1];
        coeffs[deg] = c;
        Self::new(coeffs)
    }

    /// x - r
    pub fn linear_root(r: &QuadExt) -> Self {
        Self::new(vec![-r, QuadExt::one()])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// None for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, i: usize) -> QuadExt {
        self.coeffs.get(i).cloned().unwrap_or_else(QuadExt::zero)
    }

    pub fn coeffs(&self) -> &[QuadExt] {
        &self.coeffs
    }

    pub fn leading(&self) -> Option<&QuadExt> {
        self.coeffs.last()
    }

    pub fn eval(&self, x: &QuadExt) -> QuadExt {
        let mut acc = QuadExt::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * &QuadExt::from_int(i as i64))
            .collect();
        Self::new(coeffs)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i) + other.coeff(i)).collect();
        Self::new(coeffs)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        RPoly { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    pub fn scale(&self, k: &QuadExt) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        RPoly { coeffs: self.coeffs.iter().map(|c| c * k).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![QuadExt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += &(a * b);
            }
        }
        Self::new(coeffs)
    }

    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        assert!(!divisor.is_zero(), "division by zero polynomial");
        let dd = divisor.degree().unwrap();
        let lead = divisor.leading().unwrap();
        let mut rem = self.clone();
        let mut quot = vec![QuadExt::zero(); self.coeffs.len().saturating_sub(dd)];
        while let Some(rd) = rem.degree() {
            if rd < dd {
                break;
            }
            let factor = rem.leading().unwrap() / lead;
            let shift = rd - dd;
            quot[shift] = factor.clone();
            let mut coeffs = rem.coeffs;
            for (i, c) in divisor.coeffs.iter().enumerate() {
                coeffs[shift + i] -= &(c * &factor);
            }
            rem = Self::new(coeffs);
        }
        (Self::new(quot), rem)
    }

    pub fn monic(&self) -> Self {
        match self.leading() {
            None => Self::zero(),
            Some(l) if l.is_one() => self.clone(),
            Some(l) => {
                let inv = QuadExt::one() / l;
                self.scale(&inv)
            }
        }
    }

    /// Monic gcd by the Euclidean algorithm.
    pub fn gcd(&self, other: &Self) -> Self {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r.monic(); // normalize to keep coefficient growth in check
        }
        a.monic()
    }

    /// Yun square-free decomposition: returns `(factor, multiplicity)` with
    /// `self = lead * prod factor_i^mult_i`, factors monic and square-free.
    pub fn squarefree_decomposition(&self) -> Vec<(Self, u32)> {
        let Some(deg) = self.degree() else { return Vec::new() };
        if deg == 0 {
            return Vec::new();
        }
        let f = self.monic();
        let fp = f.derivative();
        let g = f.gcd(&fp);
        if g.degree() == Some(0) {
            return vec![(f, 1)];
        }
        let mut out = Vec::new();
        let (mut c, _) = f.div_rem(&g);
        let (fp_over_g, _) = fp.div_rem(&g);
        let mut d = fp_over_g.sub(&c.derivative());
        let mut i = 1u32;
        while c.degree().unwrap_or(0) > 0 {
            let a = c.gcd(&d);
            if a.degree().unwrap_or(0) > 0 {
                out.push((a.clone(), i));
            }
            let (c_next, _) = c.div_rem(&a);
            let (d_over_a, _) = d.div_rem(&a);
            d = d_over_a.sub(&c_next.derivative());
            c = c_next;
            i += 1;
        }
        out
    }

    /// True if only even powers occur.
    pub fn is_even_poly(&self) -> bool {
        self.coeffs
            .iter()
            .enumerate()
            .all(|(i, c)| i % 2 == 0 || c.is_zero())
    }

    /// For an even polynomial p(x) = q(x^2), return q.
    pub fn even_part(&self) -> Option<Self> {
        if !self.is_even_poly() {
            return None;
        }
        Some(Self::new(
            self.coeffs.iter().step_by(2).cloned().collect(),
        ))
    }

    pub fn display_var(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let cs = format!("{c}");
            let body = if i == 0 {
                cs
            } else {
                let var_pow = if i == 1 { var.to_string() } else { format!("{var}^{i}") };
                if c.is_one() {
                    var_pow
                } else if cs == "-1" {
                    format!("-{var_pow}")
                } else if cs.contains(" + ") || cs.contains(" - ") {
                    format!("({cs})*{var_pow}")
                } else {
                    format!("{cs}*{var_pow}")
                }
            };
            parts.push(body);
        }
        let mut out = parts[0].clone();
        for p in &parts[1..] {
            if let Some(rest) = p.strip_prefix('-') {
                out.push_str(" - ");
                out.push_str(rest);
            } else {
                out.push_str(" + ");
                out.push_str(p);
            }
        }
        out
    }
}

impl fmt::Debug for RPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_var("r"))
    }
}

/// Univariate polynomial in r whose coefficients may contain unknowns.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct RMPoly {
    coeffs: Vec<MPoly>,
}

impl RMPoly {
    pub fn new(mut coeffs: Vec<MPoly>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        RMPoly { coeffs }
    }

    pub fn zero() -> Self {
        RMPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: MPoly) -> Self {
        Self::new(vec![c])
    }

    /// Lift a plain univariate polynomial.
    pub fn from_rpoly(p: &RPoly) -> Self {
        Self::new(p.coeffs().iter().map(|c| MPoly::constant(c.clone())).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, i: usize) -> MPoly {
        self.coeffs.get(i).cloned().unwrap_or_else(MPoly::zero)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|i| self.coeff(i).add(&other.coeff(i))).collect())
    }

    pub fn neg(&self) -> Self {
        RMPoly { coeffs: self.coeffs.iter().map(|c| c.neg()).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![MPoly::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] = coeffs[i + j].add(&a.mul(b));
            }
        }
        Self::new(coeffs)
    }

    pub fn scale(&self, m: &MPoly) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.mul(m)).collect())
    }

    /// Evaluate the r variable at an exact value.
    pub fn eval_r(&self, r: &QuadExt) -> MPoly {
        let mut acc = MPoly::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(&MPoly::constant(r.clone())).add(c);
        }
        acc
    }

    /// Plain polynomial if no unknowns occur in any coefficient.
    pub fn as_rpoly(&self) -> Option<RPoly> {
        let coeffs: Option<Vec<QuadExt>> =
            self.coeffs.iter().map(|c| c.as_constant()).collect();
        coeffs.map(RPoly::new)
    }

    pub fn display_with(&self, var: &str, namer: &dyn Fn(usize) -> String) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let cs = c.display_with(namer);
            let body = if i == 0 {
                cs
            } else {
                let var_pow = if i == 1 { var.to_string() } else { format!("{var}^{i}") };
                if cs == "1" {
                    var_pow
                } else if cs.contains(" + ") || cs.contains(" - ") {
                    format!("({cs})*{var_pow}")
                } else {
                    format!("{cs}*{var_pow}")
                }
            };
            parts.push(body);
        }
        parts.join(" + ").replace("+ -", "- ")
    }
}

impl fmt::Debug for RMPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_with("r", &|v| format!("u{v}")))
    }
}
