//! Dominant-balance enumeration: which leading exponents and coefficients can
//! make two or more terms of each equation cancel near a movable singularity.
//!
//! Exponent tuples come from a rational grid (denominators 1 or 2); for each
//! tuple the minimal-exponent terms of every equation form the leading subset
//! and the coefficients must solve the leading-order algebraic system. A
//! coefficient whose equation collapses identically is arbitrary; solutions
//! with a vanishing component are discarded (they belong to a different
//! exponent tuple). Leading systems outside the supported solve patterns are
//! reported unresolved rather than dropped.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::exactnum::QuadExt;
use crate::odemodel::{JetMono, JetPolynomial, PolyODESystem};
use crate::poly::{exact_roots, ExactRoots, MPoly, Mono, RPoly};

/// Resolved leading coefficient of one variable.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum LeadingCoeff {
    Value(QuadExt),
    /// The leading-order equation left this coefficient free.
    Arbitrary,
    /// Only present in unresolved candidates.
    Unknown,
}

impl LeadingCoeff {
    pub fn value(&self) -> Option<&QuadExt> {
        match self {
            LeadingCoeff::Value(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CandidateStatus {
    Resolved,
    /// Solver could not reduce the leading system; reason attached.
    Unresolved(String),
}

/// One dominant behavior: exponents, leading coefficients, leading terms.
#[derive(Clone, PartialEq, Debug)]
pub struct BalanceCandidate {
    /// Per-variable leading exponent (denominator 1 or 2).
    pub exponents: Vec<BigRational>,
    /// Per-variable leading coefficient.
    pub coefficients: Vec<LeadingCoeff>,
    /// Per-equation indices (into the canonical term order) of the terms that
    /// achieve the minimal exponent.
    pub leading_sets: Vec<Vec<usize>>,
    pub status: CandidateStatus,
}

impl BalanceCandidate {
    /// True when all exponents are integers (the series recursion needs this).
    pub fn integer_exponents(&self) -> bool {
        self.exponents.iter().all(|p| p.is_integer())
    }

    pub fn is_resolved(&self) -> bool {
        matches!(self.status, CandidateStatus::Resolved)
    }

    /// Render like `x ~ (3*sqrt(3)) t^-2, y ~ (-3) t^-2`.
    pub fn display(&self, vars: &[String]) -> String {
        let parts: Vec<String> = self
            .exponents
            .iter()
            .zip(&self.coefficients)
            .zip(vars)
            .map(|((p, c), v)| {
                let coeff = match c {
                    LeadingCoeff::Value(q) => format!("{q}"),
                    LeadingCoeff::Arbitrary => "arbitrary".to_string(),
                    LeadingCoeff::Unknown => "?".to_string(),
                };
                format!("{v} ~ ({coeff}) t^{p}")
            })
            .collect();
        parts.join(", ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BalanceError {
    #[error("denominator bound must be 1 or 2, got {0}")]
    BadDenominatorBound(u32),
    #[error("empty exponent range")]
    EmptyRange,
}

/// Falling factorial `p (p-1) ... (p-d+1)` as an exact rational.
pub(crate) fn falling_factorial(p: &BigRational, d: u32) -> BigRational {
    let mut acc = BigRational::one();
    for i in 0..d {
        acc *= p - BigRational::from_integer(i.into());
    }
    acc
}

/// Exponent of `t` contributed by a monomial under `x_v ~ a_v t^(p_v)`.
fn mono_exponent(m: &JetMono, p: &[BigRational]) -> BigRational {
    let mut acc = BigRational::zero();
    for &(jv, e) in m.factors() {
        let contrib = &p[jv.var] - BigRational::from_integer(jv.order.into());
        acc += contrib * BigRational::from_integer(e.into());
    }
    acc
}

/// Leading subsets and leading exponents of every equation at exponents `p`.
pub(crate) fn leading_subsets(
    system: &PolyODESystem,
    p: &[BigRational],
) -> (Vec<Vec<usize>>, Vec<BigRational>) {
    let mut sets = Vec::with_capacity(system.equations().len());
    let mut mus = Vec::with_capacity(system.equations().len());
    for eq in system.equations() {
        let exps: Vec<BigRational> = eq.terms().map(|(m, _)| mono_exponent(m, p)).collect();
        let mu = exps.iter().min().cloned().expect("nonempty equation");
        let set = exps
            .iter()
            .enumerate()
            .filter_map(|(i, e)| (*e == mu).then_some(i))
            .collect();
        sets.push(set);
        mus.push(mu);
    }
    (sets, mus)
}

/// The leading-order algebraic system: one polynomial in the unknown leading
/// coefficients (unknown id = variable index) per equation.
fn leading_system(system: &PolyODESystem, p: &[BigRational], sets: &[Vec<usize>]) -> Vec<MPoly> {
    system
        .equations()
        .iter()
        .zip(sets)
        .map(|(eq, set)| {
            let mut acc = MPoly::zero();
            for (idx, (m, c)) in eq.terms().enumerate() {
                if !set.contains(&idx) {
                    continue;
                }
                let mut coeff = c.clone();
                let mut mono = MPoly::one();
                for &(jv, e) in m.factors() {
                    let ff = falling_factorial(&p[jv.var], jv.order);
                    coeff = coeff * QuadExt::from_rational(ff).pow(e as i64);
                    mono = mono.mul(&MPoly::var(jv.var).pow(e));
                }
                acc = acc.add(&mono.scale(&coeff));
            }
            acc
        })
        .collect()
}

/// Find all dominant behaviors with exponents on the given grid.
pub fn find_balances(
    system: &PolyODESystem,
    range: (BigRational, BigRational),
    denominator_bound: u32,
) -> Result<Vec<BalanceCandidate>, BalanceError> {
    if !(1..=2).contains(&denominator_bound) {
        return Err(BalanceError::BadDenominatorBound(denominator_bound));
    }
    let (lo, hi) = range;
    if lo > hi {
        return Err(BalanceError::EmptyRange);
    }
    let step = BigRational::new(1.into(), denominator_bound.into());
    let mut grid = Vec::new();
    let mut v = lo.clone();
    // align the walk so exact multiples of the step are hit
    let offset = (&lo / &step).ceil() * &step - &lo;
    v += offset;
    while v <= hi {
        grid.push(v.clone());
        v += step.clone();
    }
    if grid.is_empty() {
        return Err(BalanceError::EmptyRange);
    }

    let n = system.num_vars();
    let mut out: Vec<BalanceCandidate> = Vec::new();
    let mut tuple = vec![grid[0].clone(); n];
    enumerate_tuples(&grid, &mut tuple, 0, &mut |p| {
        // a movable singularity needs a negative exponent somewhere
        if !p.iter().any(|e| e.is_negative()) {
            return;
        }
        let (sets, _) = leading_subsets(system, p);
        let eqs = leading_system(system, p, &sets);
        match solve_leading_system(&eqs, n) {
            SolveOutcome::Solutions(sols) => {
                for coeffs in sols {
                    let cand = BalanceCandidate {
                        exponents: p.to_vec(),
                        coefficients: coeffs,
                        leading_sets: sets.clone(),
                        status: CandidateStatus::Resolved,
                    };
                    if !out.contains(&cand) {
                        out.push(cand);
                    }
                }
            }
            SolveOutcome::Unresolved(reason) => {
                out.push(BalanceCandidate {
                    exponents: p.to_vec(),
                    coefficients: vec![LeadingCoeff::Unknown; n],
                    leading_sets: sets.clone(),
                    status: CandidateStatus::Unresolved(reason),
                });
            }
            SolveOutcome::NoSolution => {}
        }
    });
    Ok(out)
}

/// `find_balances` with the default grid: exponents in [-5, -1/2], halves.
pub fn find_balances_default(
    system: &PolyODESystem,
) -> Result<Vec<BalanceCandidate>, BalanceError> {
    find_balances(
        system,
        (
            BigRational::from_integer((-5).into()),
            BigRational::new((-1).into(), 2.into()),
        ),
        2,
    )
}

fn enumerate_tuples(
    grid: &[BigRational],
    tuple: &mut Vec<BigRational>,
    at: usize,
    f: &mut impl FnMut(&[BigRational]),
) {
    if at == tuple.len() {
        f(tuple);
        return;
    }
    for g in grid {
        tuple[at] = g.clone();
        enumerate_tuples(grid, tuple, at + 1, f);
    }
}

/// The simplified system retaining only each equation's leading terms.
pub fn leading_terms(system: &PolyODESystem, candidate: &BalanceCandidate) -> PolyODESystem {
    let eqs = system
        .equations()
        .iter()
        .zip(&candidate.leading_sets)
        .map(|(eq, set)| {
            let mut acc = JetPolynomial::zero();
            for (idx, (m, c)) in eq.terms().enumerate() {
                if set.contains(&idx) {
                    acc = acc.add(&JetPolynomial::term(c.clone(), m.clone()));
                }
            }
            acc
        })
        .collect();
    PolyODESystem::new_unchecked(system.var_names().to_vec(), eqs, system.params().clone())
}

enum SolveOutcome {
    Solutions(Vec<Vec<LeadingCoeff>>),
    Unresolved(String),
    NoSolution,
}

/// Solve the leading-coefficient system.
///
/// Supported patterns (everything the two-variable balances need): equations
/// that become univariate after removing monomial content, and equations
/// linear in one unknown (eliminated by substitution). Zero components are
/// discarded: a vanishing leading coefficient means the variable actually has
/// a different exponent, which the grid covers elsewhere.
fn solve_leading_system(eqs: &[MPoly], n: usize) -> SolveOutcome {
    struct Frame {
        pending: Vec<MPoly>,
        assigned: Vec<Option<QuadExt>>,
    }
    let mut stack = vec![Frame { pending: eqs.to_vec(), assigned: vec![None; n] }];
    let mut solutions: Vec<Vec<LeadingCoeff>> = Vec::new();
    let mut guard = 0usize;

    'frames: while let Some(frame) = stack.pop() {
        guard += 1;
        if guard > 10_000 {
            return SolveOutcome::Unresolved("leading system solve did not terminate".into());
        }
        // simplify: strip monomial content, drop zero equations, detect dead ends
        let mut simplified = Vec::new();
        for eq in &frame.pending {
            let (_, eq) = eq.monomial_content();
            if let Some(c) = eq.as_constant() {
                if c.is_zero() {
                    continue;
                }
                continue 'frames; // unsatisfiable branch
            }
            simplified.push(eq);
        }
        if simplified.is_empty() {
            let coeffs: Vec<LeadingCoeff> = frame
                .assigned
                .iter()
                .map(|a| match a {
                    Some(v) => LeadingCoeff::Value(v.clone()),
                    None => LeadingCoeff::Arbitrary,
                })
                .collect();
            if !solutions.contains(&coeffs) {
                solutions.push(coeffs);
            }
            continue;
        }

        // univariate equation: branch over its exact roots
        if let Some((i, u, coeffs)) = simplified.iter().enumerate().find_map(|(i, eq)| {
            let vars = eq.vars();
            if vars.len() != 1 {
                return None;
            }
            let u = *vars.iter().next().unwrap();
            eq.as_univariate(u).map(|c| (i, u, c))
        }) {
            let poly = RPoly::new(coeffs);
            let mut roots = Vec::new();
            for (factor, _) in poly.squarefree_decomposition() {
                match exact_roots(&factor) {
                    ExactRoots::Complete(rs) => roots.extend(rs),
                    ExactRoots::Partial { .. } => {
                        return SolveOutcome::Unresolved(format!(
                            "leading equation {} = 0 has roots outside one quadratic extension",
                            poly.display_var("a")
                        ))
                    }
                }
            }
            for root in roots {
                if root.is_zero() {
                    continue; // zero leading coefficient: wrong exponent tuple
                }
                let mut next =
                    Frame { pending: Vec::new(), assigned: frame.assigned.clone() };
                next.assigned[u] = Some(root.clone());
                let mut dead = false;
                for (j, eq) in simplified.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    match eq.substitute_checked(u, &root) {
                        Some(s) => next.pending.push(s),
                        None => {
                            dead = true; // incompatible radicands: unsupported
                            break;
                        }
                    }
                }
                if !dead {
                    stack.push(next);
                }
            }
            continue;
        }

        // linear-in-one-unknown elimination
        let mut progressed = false;
        'outer: for (i, eq) in simplified.iter().enumerate() {
            for u in eq.vars() {
                if eq.degree_in(u) != 1 {
                    continue;
                }
                // eq = c1 * u + c0
                let mut c1 = MPoly::zero();
                let mut c0 = MPoly::zero();
                for (m, c) in eq.terms() {
                    if m.exponent(u) == 1 {
                        let rest = Mono::var(u).div(m);
                        c1 = c1.add(&MPoly::term(c.clone(), rest));
                    } else {
                        c0 = c0.add(&MPoly::term(c.clone(), m.clone()));
                    }
                }
                let Some(c1v) = c1.as_constant() else { continue };
                if c1v.is_zero() {
                    continue;
                }
                let value = c0.scale(&(-(QuadExt::one() / &c1v)));
                let Some(vc) = value.as_constant() else { continue };
                if vc.is_zero() {
                    // u = 0: dead branch by the zero-coefficient policy
                    continue 'frames;
                }
                let mut next =
                    Frame { pending: Vec::new(), assigned: frame.assigned.clone() };
                next.assigned[u] = Some(vc.clone());
                for (j, other) in simplified.iter().enumerate() {
                    if j != i {
                        match other.substitute_checked(u, &vc) {
                            Some(s) => next.pending.push(s),
                            None => continue 'outer,
                        }
                    }
                }
                stack.push(next);
                progressed = true;
                break 'outer;
            }
        }
        if progressed {
            continue;
        }

        return SolveOutcome::Unresolved(
            "leading-coefficient system outside supported solve patterns".to_string(),
        );
    }

    if solutions.is_empty() {
        SolveOutcome::NoSolution
    } else {
        SolveOutcome::Solutions(solutions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::odemodel::PolyODESystem;

    fn rat(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn hh(lam_n: i64, lam_d: i64, c_n: i64, c_d: i64) -> PolyODESystem {
        PolyODESystem::henon_heiles(QuadExt::ratio(lam_n, lam_d), QuadExt::ratio(c_n, c_d))
    }

    fn resolved(cands: &[BalanceCandidate]) -> Vec<&BalanceCandidate> {
        cands.iter().filter(|c| c.is_resolved()).collect()
    }

    #[test]
    fn original_henon_heiles_case1_only() {
        // C=1: a1 = ±3 sqrt(3), a2 = -3 at exponents (-2,-2); no Case 2 on the grid
        let cands = find_balances_default(&hh(1, 1, 1, 1)).unwrap();
        let res = resolved(&cands);
        assert_eq!(res.len(), 2);
        for c in &res {
            assert_eq!(c.exponents, vec![rat(-2), rat(-2)]);
            assert_eq!(c.coefficients[1], LeadingCoeff::Value(QuadExt::from_int(-3)));
        }
        let a1s: Vec<_> = res
            .iter()
            .map(|c| c.coefficients[0].value().unwrap().clone())
            .collect();
        assert!(a1s.contains(&QuadExt::radical(3, 1, 3)));
        assert!(a1s.contains(&QuadExt::radical(-3, 1, 3)));
    }

    #[test]
    fn paper_study_system_includes_case2() {
        let cands = find_balances_default(&hh(1, 9, -16, 5)).unwrap();
        let res = resolved(&cands);
        assert_eq!(res.len(), 3);
        let case2: Vec<_> = res
            .iter()
            .filter(|c| c.exponents == vec![BigRational::new((-3).into(), 2.into()), rat(-2)])
            .collect();
        assert_eq!(case2.len(), 1);
        assert_eq!(case2[0].coefficients[0], LeadingCoeff::Arbitrary);
        assert_eq!(
            case2[0].coefficients[1],
            LeadingCoeff::Value(QuadExt::ratio(-15, 8))
        );
        // Case-1 candidates: a1^2 = 9(C+2) = -54/5, a2 = -3
        let case1: Vec<_> = res
            .iter()
            .filter(|c| c.exponents == vec![rat(-2), rat(-2)])
            .collect();
        assert_eq!(case1.len(), 2);
        for c in &case1 {
            let a1 = c.coefficients[0].value().unwrap();
            assert_eq!(a1.pow(2), QuadExt::ratio(-54, 5), "a1^2 = 9(C+2) at C=-16/5");
            assert_eq!(c.coefficients[1], LeadingCoeff::Value(QuadExt::from_int(-3)));
        }
    }

    #[test]
    fn squared_system_balances() {
        // system (7): z ~ -54/5 t^-4, y ~ -3 t^-2 and z ~ arbitrary t^-3, y ~ -15/8 t^-2
        let sys =
            PolyODESystem::henon_heiles_squared(QuadExt::ratio(1, 9), QuadExt::ratio(-16, 5));
        let cands = find_balances_default(&sys).unwrap();
        let res = resolved(&cands);
        assert_eq!(res.len(), 2);
        let case1 = res
            .iter()
            .find(|c| c.exponents == vec![rat(-4), rat(-2)])
            .expect("case-1 image");
        assert_eq!(case1.coefficients[0], LeadingCoeff::Value(QuadExt::ratio(-54, 5)));
        assert_eq!(case1.coefficients[1], LeadingCoeff::Value(QuadExt::from_int(-3)));
        let case2 = res
            .iter()
            .find(|c| c.exponents == vec![rat(-3), rat(-2)])
            .expect("case-2 image");
        assert_eq!(case2.coefficients[0], LeadingCoeff::Arbitrary);
        assert_eq!(case2.coefficients[1], LeadingCoeff::Value(QuadExt::ratio(-15, 8)));
    }

    #[test]
    fn case1_formula_across_c_values() {
        for (cn, cd) in [(1i64, 1i64), (-1, 1), (-2, 1), (-6, 1), (-16, 5)] {
            let cands = find_balances_default(&hh(1, 1, cn, cd)).unwrap();
            let expect_sq = QuadExt::ratio(9 * (cn + 2 * cd), cd);
            let case1: Vec<_> = cands
                .iter()
                .filter(|c| c.is_resolved() && c.exponents == vec![rat(-2), rat(-2)])
                .collect();
            if expect_sq.is_zero() {
                // C = -2: the leading coefficient a1 would vanish
                assert!(case1.is_empty());
                continue;
            }
            assert_eq!(case1.len(), 2, "C={cn}/{cd}");
            for c in case1 {
                assert_eq!(c.coefficients[0].value().unwrap().pow(2), expect_sq);
                assert_eq!(c.coefficients[1], LeadingCoeff::Value(QuadExt::from_int(-3)));
            }
        }
    }

    #[test]
    fn case2_exponent_formula() {
        // alpha solves alpha(alpha-1) = -2 a2, a2 = 6/C: alpha = (1 ± sqrt(1-48/C))/2
        for (cn, cd, alpha_n, alpha_d) in
            [(-6i64, 1i64, -1i64, 1i64), (-16, 1, -1, 2), (-16, 5, -3, 2)]
        {
            let cands = find_balances_default(&hh(1, 1, cn, cd)).unwrap();
            let alpha = BigRational::new(alpha_n.into(), alpha_d.into());
            let case2: Vec<_> = cands
                .iter()
                .filter(|c| {
                    c.is_resolved()
                        && c.exponents == vec![alpha.clone(), rat(-2)]
                        && c.coefficients[0] == LeadingCoeff::Arbitrary
                })
                .collect();
            assert_eq!(case2.len(), 1, "C={cn}/{cd}");
            assert_eq!(
                case2[0].coefficients[1],
                LeadingCoeff::Value(QuadExt::ratio(6 * cd, cn))
            );
        }
    }

    #[test]
    fn trivial_single_term_equation() {
        // u'' = 0 balances only at u ~ t^0, t^1, both off the default grid
        let sys = PolyODESystem::parse("vars u; u'' = 0;").unwrap();
        let cands = find_balances_default(&sys).unwrap();
        assert!(resolved(&cands).is_empty());
    }

    #[test]
    fn weierstrass_model() {
        // u'' = 6u^2: u ~ 1 * t^-2
        let sys = PolyODESystem::parse("vars u; u'' = 6*u^2;").unwrap();
        let cands = find_balances_default(&sys).unwrap();
        let res = resolved(&cands);
        assert_eq!(res.len(), 1);
        assert_eq!(res[0].exponents, vec![rat(-2)]);
        assert_eq!(res[0].coefficients[0], LeadingCoeff::Value(QuadExt::from_int(1)));
    }

    #[test]
    fn denominator_bound_one_hides_case2() {
        let cands = find_balances(
            &hh(1, 9, -16, 5),
            (rat(-5), BigRational::new((-1).into(), 2.into())),
            1,
        )
        .unwrap();
        assert!(resolved(&cands)
            .iter()
            .all(|c| c.exponents.iter().all(|p| p.is_integer())));
        assert!(matches!(
            find_balances(&hh(1, 1, 1, 1), (rat(-5), rat(-1)), 3),
            Err(BalanceError::BadDenominatorBound(3))
        ));
    }

    #[test]
    fn leading_terms_of_squared_system() {
        let sys =
            PolyODESystem::henon_heiles_squared(QuadExt::ratio(1, 9), QuadExt::ratio(-16, 5));
        let cands = find_balances_default(&sys).unwrap();
        let case2 = cands
            .iter()
            .find(|c| c.is_resolved() && c.exponents[0] == rat(-3))
            .unwrap();
        let simplified = leading_terms(&sys, case2);
        assert_eq!(
            simplified.to_text(),
            "vars z, y; z''*z - 1/2*z'^2 + 4*z^2*y = 0; y'' + 16/5*y^2 = 0;"
        );
        let case1 = cands
            .iter()
            .find(|c| c.is_resolved() && c.exponents[0] == rat(-4))
            .unwrap();
        let simplified1 = leading_terms(&sys, case1);
        assert_eq!(
            simplified1.to_text(),
            "vars z, y; z''*z - 1/2*z'^2 + 4*z^2*y = 0; y'' + 16/5*y^2 + z = 0;"
        );
        // single-term equations pass through unchanged
        let trivial = PolyODESystem::parse("vars u; u'' = 0;").unwrap();
        let cand = BalanceCandidate {
            exponents: vec![rat(1)],
            coefficients: vec![LeadingCoeff::Arbitrary],
            leading_sets: vec![vec![0]],
            status: CandidateStatus::Resolved,
        };
        assert_eq!(leading_terms(&trivial, &cand).equations(), trivial.equations());
    }
}
