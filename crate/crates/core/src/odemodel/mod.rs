//! Polynomial ODE systems in jet variables.
//!
//! An equation is stored in implicit form `P = 0` where `P` is a sparse
//! polynomial in jet variables (a dependent variable or one of its time
//! derivatives). Implicit form matters: the squaring substitution produces
//! equations like `z'' z - z'^2/2 + ... = 0` that are not polynomially
//! solvable for the top derivative.

mod parser;

pub use parser::ParseError;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::exactnum::QuadExt;

/// A dependent variable or one of its derivatives: `vars[var]` differentiated
/// `order` times.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct JetVar {
    pub var: usize,
    pub order: u32,
}

impl JetVar {
    pub fn new(var: usize, order: u32) -> Self {
        JetVar { var, order }
    }
}

/// Product of jet-variable powers; sorted, exponents nonzero.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct JetMono(Vec<(JetVar, u32)>);

impl JetMono {
    pub fn unit() -> Self {
        JetMono(Vec::new())
    }

    pub fn of(v: JetVar) -> Self {
        JetMono(vec![(v, 1)])
    }

    pub fn from_pairs(mut pairs: Vec<(JetVar, u32)>) -> Self {
        pairs.retain(|&(_, e)| e > 0);
        pairs.sort();
        let mut merged: Vec<(JetVar, u32)> = Vec::with_capacity(pairs.len());
        for (v, e) in pairs {
            if let Some(last) = merged.last_mut() {
                if last.0 == v {
                    last.1 += e;
                    continue;
                }
            }
            merged.push((v, e));
        }
        JetMono(merged)
    }

    pub fn factors(&self) -> &[(JetVar, u32)] {
        &self.0
    }

    pub fn is_unit(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut pairs = self.0.clone();
        pairs.extend_from_slice(&other.0);
        Self::from_pairs(pairs)
    }

    pub fn exponent(&self, v: JetVar) -> u32 {
        self.0
            .iter()
            .find_map(|&(jv, e)| (jv == v).then_some(e))
            .unwrap_or(0)
    }

    /// Total degree in all derivatives of variable `var`.
    pub fn degree_in_var(&self, var: usize) -> u32 {
        self.0
            .iter()
            .filter(|(jv, _)| jv.var == var)
            .map(|&(_, e)| e)
            .sum()
    }
}

/// Sparse polynomial in jet variables over `QuadExt`.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct JetPolynomial {
    terms: BTreeMap<JetMono, QuadExt>,
}

impl JetPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: QuadExt) -> Self {
        let mut p = Self::zero();
        p.insert(JetMono::unit(), c);
        p
    }

    pub fn jet(v: JetVar) -> Self {
        let mut p = Self::zero();
        p.insert(JetMono::of(v), QuadExt::one());
        p
    }

    pub fn term(c: QuadExt, m: JetMono) -> Self {
        let mut p = Self::zero();
        p.insert(m, c);
        p
    }

    fn insert(&mut self, m: JetMono, c: QuadExt) {
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

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in canonical (monomial) order.
    pub fn terms(&self) -> impl Iterator<Item = (&JetMono, &QuadExt)> {
        self.terms.iter()
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
        JetPolynomial {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, k: &QuadExt) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        JetPolynomial {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.insert(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::constant(QuadExt::one());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Highest derivative order of `var` occurring anywhere.
    pub fn max_order(&self, var: usize) -> Option<u32> {
        self.terms
            .keys()
            .flat_map(|m| m.factors().iter())
            .filter(|(jv, _)| jv.var == var)
            .map(|(jv, _)| jv.order)
            .max()
    }

    pub fn contains_jet(&self, v: JetVar) -> bool {
        self.terms.keys().any(|m| m.exponent(v) > 0)
    }

    /// Render with variable names; `'` marks derivatives. Terms print with
    /// higher derivatives first, then in descending monomial order.
    pub fn display(&self, vars: &[String]) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut ordered: Vec<(&JetMono, &QuadExt)> = self.terms.iter().collect();
        ordered.sort_by_key(|(m, _)| {
            std::cmp::Reverse((
                m.factors().iter().map(|(jv, _)| jv.order).max().unwrap_or(0),
                (*m).clone(),
            ))
        });
        let mut parts: Vec<String> = Vec::new();
        for (m, c) in ordered {
            let mut factors = m.factors().to_vec();
            factors.sort_by_key(|&(jv, _)| (std::cmp::Reverse(jv.order), jv.var));
            let mono = factors
                .iter()
                .map(|&(jv, e)| {
                    let primes = "'".repeat(jv.order as usize);
                    let base = format!("{}{}", vars[jv.var], primes);
                    if e == 1 {
                        base
                    } else {
                        format!("{base}^{e}")
                    }
                })
                .collect::<Vec<_>>()
                .join("*");
            let cs = format!("{c}");
            let body = if m.is_unit() {
                if cs.contains(" + ") || cs.contains(" - ") {
                    format!("({cs})")
                } else {
                    cs
                }
            } else if c.is_one() {
                mono
            } else if cs == "-1" {
                format!("-{mono}")
            } else if cs.contains(" + ") || cs.contains(" - ") {
                format!("({cs})*{mono}")
            } else {
                format!("{cs}*{mono}")
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

impl fmt::Debug for JetPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..8).map(|i| format!("x{i}")).collect();
        write!(f, "{}", self.display(&names))
    }
}

/// Errors from system construction and transformation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("equation {0} does not contain the highest derivative of its variable {1}")]
    MissingOwnerDerivative(usize, String),
    #[error("system has {eqs} equations for {vars} variables")]
    CountMismatch { eqs: usize, vars: usize },
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("cannot square {var}: {reason}")]
    SquareForm { var: String, reason: String },
}

/// A polynomial ODE system: one implicit equation `P_i = 0` per variable,
/// where `P_i` contains the highest derivative of `vars[i]`.
#[derive(Clone, PartialEq, Eq)]
pub struct PolyODESystem {
    vars: Vec<String>,
    eqs: Vec<JetPolynomial>,
    params: BTreeMap<String, QuadExt>,
}

impl PolyODESystem {
    pub fn new(
        vars: Vec<String>,
        eqs: Vec<JetPolynomial>,
        params: BTreeMap<String, QuadExt>,
    ) -> Result<Self, ModelError> {
        if vars.len() != eqs.len() {
            return Err(ModelError::CountMismatch { eqs: eqs.len(), vars: vars.len() });
        }
        let sys = PolyODESystem { vars, eqs, params };
        for (i, eq) in sys.eqs.iter().enumerate() {
            let top = sys.max_order(i).unwrap_or(0);
            if !eq.contains_jet(JetVar::new(i, top)) {
                return Err(ModelError::MissingOwnerDerivative(i, sys.vars[i].clone()));
            }
        }
        Ok(sys)
    }

    /// Construct without the owner-derivative validation (simplified systems
    /// produced by the balance stage may drop non-leading terms).
    pub(crate) fn new_unchecked(
        vars: Vec<String>,
        eqs: Vec<JetPolynomial>,
        params: BTreeMap<String, QuadExt>,
    ) -> Self {
        PolyODESystem { vars, eqs, params }
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn var_names(&self) -> &[String] {
        &self.vars
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    pub fn equations(&self) -> &[JetPolynomial] {
        &self.eqs
    }

    pub fn params(&self) -> &BTreeMap<String, QuadExt> {
        &self.params
    }

    /// Highest derivative order of variable `v` across the whole system.
    pub fn max_order(&self, v: usize) -> Option<u32> {
        self.eqs.iter().filter_map(|eq| eq.max_order(v)).max()
    }

    /// Parse a system from the `vars x,y; ...;` text format.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        parser::parse_system(text)
    }

    /// Render back to the text format (canonical term order).
    pub fn to_text(&self) -> String {
        let mut out = format!("vars {};", self.vars.join(", "));
        for eq in &self.eqs {
            out.push_str(&format!(" {} = 0;", eq.display(&self.vars)));
        }
        out
    }

    /// The generalized Henon-Heiles system
    /// `x'' = -lambda x - 2xy`, `y'' = -y - x^2 + C y^2`.
    pub fn henon_heiles(lambda: QuadExt, c: QuadExt) -> Self {
        let x = |o| JetVar::new(0, o);
        let y = |o| JetVar::new(1, o);
        // implicit: x'' + lambda x + 2 x y = 0
        let eq_x = JetPolynomial::jet(x(2))
            .add(&JetPolynomial::term(lambda.clone(), JetMono::of(x(0))))
            .add(&JetPolynomial::term(
                QuadExt::from_int(2),
                JetMono::from_pairs(vec![(x(0), 1), (y(0), 1)]),
            ));
        // implicit: y'' + y + x^2 - C y^2 = 0
        let eq_y = JetPolynomial::jet(y(2))
            .add(&JetPolynomial::jet(y(0)))
            .add(&JetPolynomial::term(
                QuadExt::one(),
                JetMono::from_pairs(vec![(x(0), 2)]),
            ))
            .add(&JetPolynomial::term(
                -&c,
                JetMono::from_pairs(vec![(y(0), 2)]),
            ));
        let mut params = BTreeMap::new();
        params.insert("lambda".to_string(), lambda);
        params.insert("C".to_string(), c);
        PolyODESystem {
            vars: vec!["x".to_string(), "y".to_string()],
            eqs: vec![eq_x, eq_y],
            params,
        }
    }

    /// The Henon-Heiles system after the `z = x^2` substitution.
    pub fn henon_heiles_squared(lambda: QuadExt, c: QuadExt) -> Self {
        Self::henon_heiles(lambda, c)
            .square_substitute("x")
            .expect("x-equation of Henon-Heiles is always squarable")
    }

    /// Replace `var` by `z = var^2`.
    ///
    /// Requires the owner equation in the shape `A*var'' + var*Q = 0` with
    /// scalar `A` and `Q` free of derivatives of `var` and even in `var`, and
    /// every other equation even in `var` with no `var` derivatives. Uses the
    /// identity `z'' z = z'^2/2 + 2 z (var * var'')`.
    pub fn square_substitute(&self, var: &str) -> Result<Self, ModelError> {
        let v = self
            .var_index(var)
            .ok_or_else(|| ModelError::UnknownVariable(var.to_string()))?;
        let err = |reason: &str| ModelError::SquareForm {
            var: var.to_string(),
            reason: reason.to_string(),
        };

        // split owner equation into A * var'' + var * Q
        let owner = &self.eqs[v];
        let vtop = JetVar::new(v, 2);
        let v0 = JetVar::new(v, 0);
        let mut a: Option<QuadExt> = None;
        let mut q_over_var = JetPolynomial::zero();
        for (m, c) in owner.terms() {
            if m.exponent(vtop) > 0 {
                if m.factors().len() != 1 || m.exponent(vtop) != 1 {
                    return Err(err("second derivative enters nonlinearly"));
                }
                if a.is_some() {
                    return Err(err("multiple top-derivative terms"));
                }
                a = Some(c.clone());
            } else {
                let e0 = m.exponent(v0);
                if m.factors().iter().any(|(jv, _)| jv.var == v && jv.order > 0) {
                    return Err(err("derivative of the variable appears outside var''"));
                }
                if e0 == 0 {
                    return Err(err("term not divisible by the variable"));
                }
                if (e0 - 1) % 2 != 0 {
                    return Err(err("quotient has an odd power of the variable"));
                }
                // divide by var, then var^(2k) -> z^k later
                let mut pairs: Vec<(JetVar, u32)> = m
                    .factors()
                    .iter()
                    .copied()
                    .filter(|&(jv, _)| jv != v0)
                    .collect();
                if e0 > 1 {
                    pairs.push((v0, e0 - 1));
                }
                q_over_var = q_over_var.add(&JetPolynomial::term(
                    c.clone(),
                    JetMono::from_pairs(pairs),
                ));
            }
        }
        let a = a.ok_or_else(|| err("no var'' term"))?;

        // pick a fresh name for the squared variable
        let mut new_name = "z".to_string();
        let mut counter = 1;
        while self.vars.iter().enumerate().any(|(i, n)| i != v && *n == new_name) {
            counter += 1;
            new_name = format!("z{counter}");
        }
        let mut vars = self.vars.clone();
        vars[v] = new_name;

        let map_even = |p: &JetPolynomial, ctx: &str| -> Result<JetPolynomial, ModelError> {
            let mut out = JetPolynomial::zero();
            for (m, c) in p.terms() {
                let mut pairs = Vec::new();
                for &(jv, e) in m.factors() {
                    if jv.var == v {
                        if jv.order > 0 {
                            return Err(err(&format!("derivative of the variable in {ctx}")));
                        }
                        if e % 2 != 0 {
                            return Err(err(&format!("odd power of the variable in {ctx}")));
                        }
                        pairs.push((v0, e / 2));
                    } else {
                        pairs.push((jv, e));
                    }
                }
                out = out.add(&JetPolynomial::term(c.clone(), JetMono::from_pairs(pairs)));
            }
            Ok(out)
        };

        // z'' z - z'^2/2 + (2/A) z^2 * Q[var^2 -> z] = 0
        let q_z = map_even(&q_over_var, "the owner equation")?;
        let z0 = JetMono::of(v0);
        let z1 = JetVar::new(v, 1);
        let z2 = JetVar::new(v, 2);
        let zz = JetPolynomial::term(
            QuadExt::one(),
            JetMono::from_pairs(vec![(z2, 1), (v0, 1)]),
        );
        let zt2 = JetPolynomial::term(QuadExt::ratio(-1, 2), JetMono::from_pairs(vec![(z1, 2)]));
        let z_sq = JetPolynomial::term(QuadExt::one(), z0.mul(&z0));
        let two_over_a = QuadExt::from_int(2) / &a;
        let new_owner = zz.add(&zt2).add(&z_sq.mul(&q_z).scale(&two_over_a));

        let mut eqs = Vec::with_capacity(self.eqs.len());
        for (i, eq) in self.eqs.iter().enumerate() {
            if i == v {
                eqs.push(new_owner.clone());
            } else {
                eqs.push(map_even(eq, "another equation")?);
            }
        }
        PolyODESystem::new(vars, eqs, self.params.clone())
    }
}

impl fmt::Debug for PolyODESystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> QuadExt {
        QuadExt::from_int(n)
    }

    #[test]
    fn henon_heiles_shape() {
        let sys = PolyODESystem::henon_heiles(q(1), q(1));
        assert_eq!(sys.num_vars(), 2);
        assert_eq!(sys.max_order(0), Some(2));
        assert_eq!(
            sys.to_text(),
            "vars x, y; x'' + 2*x*y + x = 0; y'' - y^2 + y + x^2 = 0;"
        );
    }

    #[test]
    fn squared_system_matches_hand_derivation() {
        // z'' z = z'^2/2 - 2 lam z^2 - 4 z^2 y ; y'' = -y - z + C y^2
        let lam = QuadExt::ratio(1, 9);
        let sys = PolyODESystem::henon_heiles_squared(lam.clone(), QuadExt::ratio(-16, 5));
        assert_eq!(sys.var_names(), &["z".to_string(), "y".to_string()]);
        let z2z = JetMono::from_pairs(vec![(JetVar::new(0, 2), 1), (JetVar::new(0, 0), 1)]);
        let eq1 = &sys.equations()[0];
        let mut expected = JetPolynomial::term(QuadExt::one(), z2z);
        expected = expected.add(&JetPolynomial::term(
            QuadExt::ratio(-1, 2),
            JetMono::from_pairs(vec![(JetVar::new(0, 1), 2)]),
        ));
        expected = expected.add(&JetPolynomial::term(
            lam.clone() * QuadExt::from_int(2),
            JetMono::from_pairs(vec![(JetVar::new(0, 0), 2)]),
        ));
        expected = expected.add(&JetPolynomial::term(
            QuadExt::from_int(4),
            JetMono::from_pairs(vec![(JetVar::new(0, 0), 2), (JetVar::new(1, 0), 1)]),
        ));
        assert_eq!(eq1, &expected);
        // second equation: y'' + y + z + 16/5 y^2
        let eq2 = &sys.equations()[1];
        assert!(eq2.contains_jet(JetVar::new(0, 0)));
        assert_eq!(eq2.num_terms(), 4);
    }

    #[test]
    fn generic_square_substitution() {
        // x'' = x, y'' = x^2  ->  z'' z = z'^2/2 + 2 z^2, y'' = z
        let sys = PolyODESystem::parse("vars x, y; x'' = x; y'' = x^2;").unwrap();
        let sq = sys.square_substitute("x").unwrap();
        assert_eq!(
            sq.to_text(),
            "vars z, y; z''*z - 1/2*z'^2 - 2*z^2 = 0; y'' - z = 0;"
        );
    }

    #[test]
    fn square_substitute_rejects_odd_occurrences() {
        let sys = PolyODESystem::henon_heiles(q(1), q(1));
        // y appears linearly in the x-equation
        let e = sys.square_substitute("y").unwrap_err();
        assert!(matches!(e, ModelError::SquareForm { .. }));
    }

    #[test]
    fn owner_derivative_validation() {
        let bad = PolyODESystem::new(
            vec!["u".into()],
            vec![JetPolynomial::jet(JetVar::new(0, 0))],
            BTreeMap::new(),
        );
        assert!(bad.is_ok()); // max order 0, owner term present
        let sys = PolyODESystem::parse("vars u; u'' = 0;").unwrap();
        assert_eq!(sys.max_order(0), Some(2));
    }
}
