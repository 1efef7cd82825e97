//! Resonances: the linear-algebraic structure controlling where arbitrary
//! constants can enter the Laurent expansion.
//!
//! Perturbing a dominant balance `x_j ~ a_j t^(p_j)` by `b_j t^(p_j + r)` and
//! keeping the leading order of the simplified system gives a linear system
//! `Q(r) b = 0`. Its determinant's roots are the resonances; `r = -1` is
//! always among them (it moves the singularity location). Root classification
//! drives the integrability verdict.

use std::fmt;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::balance::{falling_factorial, BalanceCandidate, LeadingCoeff};
use crate::exactnum::{BigFloat, QuadExt};
use crate::odemodel::PolyODESystem;
use crate::poly::{exact_roots, ExactRoots, MPoly, RMPoly, RPoly};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResonanceError {
    #[error("determinant is identically zero (degenerate candidate)")]
    DegenerateDeterminant,
    #[error("candidate has unresolved leading coefficients")]
    UnresolvedCandidate,
}

/// Exact or numeric root value.
#[derive(Clone, PartialEq, Debug)]
pub enum RootValue {
    Exact(QuadExt),
    Approx { re: BigFloat, im: BigFloat },
}

impl fmt::Display for RootValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RootValue::Exact(q) => write!(f, "{q}"),
            RootValue::Approx { re, im } => {
                if im.is_zero() {
                    write!(f, "~{}", re.format_sci(20))
                } else {
                    write!(f, "~{} + {}i", re.format_sci(20), im.format_sci(20))
                }
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RootClass {
    Integer,
    RationalNonInteger,
    Irrational,
    Complex,
}

impl fmt::Display for RootClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RootClass::Integer => "INTEGER",
            RootClass::RationalNonInteger => "RATIONAL_NONINT",
            RootClass::Irrational => "IRRATIONAL",
            RootClass::Complex => "COMPLEX",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct ResonanceRoot {
    pub value: RootValue,
    pub class: RootClass,
    pub multiplicity: u32,
}

impl ResonanceRoot {
    /// The root as an integer when it is one.
    pub fn as_integer(&self) -> Option<i64> {
        match &self.value {
            RootValue::Exact(q) if q.is_integer() => q.rational_part().to_integer().to_i64(),
            _ => None,
        }
    }
}

/// Level-2 analysis of one balance candidate.
#[derive(Clone, Debug)]
pub struct ResonanceReport {
    /// Q(r): entry (i, j) is the coefficient of `b_j` in equation `i`.
    pub matrix: Vec<Vec<RMPoly>>,
    /// det Q(r) with any arbitrary-coefficient monomial content removed.
    pub det: RPoly,
    /// Display form of the removed content (e.g. `a1`), if any.
    pub det_content: Option<String>,
    pub roots: Vec<ResonanceRoot>,
    /// Whether r = -1 is among the roots (it must be, for a movable pole).
    pub has_minus_one: bool,
    /// Analysis-level failure description, if the report is incomplete.
    pub unresolved: Option<String>,
}

/// Build Q(r) from the simplified system and its balance.
///
/// Arbitrary leading coefficients stay symbolic: unknown id = variable index.
pub fn resonance_matrix(
    simplified: &PolyODESystem,
    candidate: &BalanceCandidate,
) -> Result<Vec<Vec<RMPoly>>, ResonanceError> {
    let n = simplified.num_vars();
    let p = &candidate.exponents;
    let a: Vec<MPoly> = candidate
        .coefficients
        .iter()
        .enumerate()
        .map(|(v, c)| match c {
            LeadingCoeff::Value(q) => Ok(MPoly::constant(q.clone())),
            LeadingCoeff::Arbitrary => Ok(MPoly::var(v)),
            LeadingCoeff::Unknown => Err(ResonanceError::UnresolvedCandidate),
        })
        .collect::<Result<_, _>>()?;

    let mut q = vec![vec![RMPoly::zero(); n]; n];
    for (i, eq) in simplified.equations().iter().enumerate() {
        for (m, c) in eq.terms() {
            // factor data: (jet, exponent, a_v * ff(p_v, order) as MPoly)
            let factors: Vec<_> = m
                .factors()
                .iter()
                .map(|&(jv, e)| {
                    let ff = falling_factorial(&p[jv.var], jv.order);
                    let base = a[jv.var].scale(&QuadExt::from_rational(ff));
                    (jv, e, base)
                })
                .collect();
            for (fi, &(jv, e, ref base)) in factors.iter().enumerate() {
                // d/d b_v of base^e, other factors untouched
                let mut rest = MPoly::constant(c.clone() * QuadExt::from_int(e as i64));
                rest = rest.mul(&base.pow(e - 1));
                for (fj, &(_, e2, ref base2)) in factors.iter().enumerate() {
                    if fj != fi {
                        rest = rest.mul(&base2.pow(e2));
                    }
                }
                let ffr = falling_factorial_poly(&p[jv.var], jv.order);
                let contrib = RMPoly::from_rpoly(&ffr).scale(&rest);
                q[i][jv.var] = q[i][jv.var].add(&contrib);
            }
        }
    }
    Ok(q)
}

/// `(r + p)(r + p - 1)...(r + p - d + 1)` as a polynomial in r.
fn falling_factorial_poly(p: &BigRational, d: u32) -> RPoly {
    let mut acc = RPoly::one();
    for i in 0..d {
        let shift = p - BigRational::from_integer(i.into());
        acc = acc.mul(&RPoly::new(vec![
            QuadExt::from_rational(shift),
            QuadExt::one(),
        ]));
    }
    acc
}

/// Cofactor-expansion determinant.
pub fn det_matrix(m: &[Vec<RMPoly>]) -> RMPoly {
    let n = m.len();
    if n == 0 {
        return RMPoly::constant(MPoly::one());
    }
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = RMPoly::zero();
    for (j, entry) in m[0].iter().enumerate() {
        if entry.is_zero() {
            continue;
        }
        let minor: Vec<Vec<RMPoly>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter_map(|(k, e)| (k != j).then(|| e.clone()))
                    .collect()
            })
            .collect();
        let cof = entry.mul(&det_matrix(&minor));
        acc = if j % 2 == 0 { acc.add(&cof) } else { acc.sub(&cof) };
    }
    acc
}

/// Strip the arbitrary-coefficient monomial content from a determinant.
///
/// An arbitrary leading coefficient is nonzero by definition, so a common
/// monomial factor in it does not move the roots. Returns the plain
/// polynomial and the removed content, or None when parameters remain.
pub fn det_without_content(det: &RMPoly) -> Option<(RPoly, Option<String>)> {
    if let Some(plain) = det.as_rpoly() {
        return Some((plain, None));
    }
    let deg = det.degree()?;
    let mut content: Option<crate::poly::Mono> = None;
    for i in 0..=deg {
        let c = det.coeff(i);
        if c.is_zero() {
            continue;
        }
        let (m, _) = c.monomial_content();
        content = Some(match content {
            None => m,
            Some(g) => g.gcd(&m),
        });
    }
    let content = content?;
    if content.is_unit() {
        return None;
    }
    let divisor = MPoly::term(QuadExt::one(), content.clone());
    let mut coeffs = Vec::with_capacity(deg + 1);
    for i in 0..=deg {
        let c = det.coeff(i);
        if c.is_zero() {
            coeffs.push(QuadExt::zero());
            continue;
        }
        let q = c.div_exact(&divisor)?;
        coeffs.push(q.as_constant()?);
    }
    let display =
        MPoly::term(QuadExt::one(), content).display_with(&|v| format!("a{}", v + 1));
    Some((RPoly::new(coeffs), Some(display)))
}

/// Classify the roots of a determinant polynomial.
///
/// Rational roots are extracted exactly, quadratic leftovers solved in the
/// quadratic extension, anything higher falls back to numeric root finding at
/// precision `prec`. Multiplicities come from the square-free decomposition.
pub fn resonance_roots(det: &RPoly, prec: u32) -> Result<Vec<ResonanceRoot>, ResonanceError> {
    if det.is_zero() {
        return Err(ResonanceError::DegenerateDeterminant);
    }
    let mut out: Vec<ResonanceRoot> = Vec::new();
    for (factor, mult) in det.squarefree_decomposition() {
        match exact_roots(&factor) {
            ExactRoots::Complete(roots) => {
                for r in roots {
                    out.push(classify_exact(r, mult));
                }
            }
            ExactRoots::Partial { found, remainder } => {
                for r in found {
                    out.push(classify_exact(r, mult));
                }
                for root in numeric::all_roots(&remainder, prec) {
                    out.push(classify_numeric(det, root, mult, prec));
                }
            }
        }
    }
    out.sort_by(|x, y| {
        sort_key(&x.value)
            .partial_cmp(&sort_key(&y.value))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(out)
}

fn sort_key(v: &RootValue) -> (f64, f64) {
    match v {
        RootValue::Exact(q) => {
            let re = q.rational_part().to_f64().unwrap_or(0.0);
            let rad = q.radicand().to_f64().unwrap_or(0.0);
            let radpart = q.radical_part().to_f64().unwrap_or(0.0);
            if rad >= 0.0 {
                (re + radpart * rad.sqrt(), 0.0)
            } else {
                (re, radpart * (-rad).sqrt())
            }
        }
        RootValue::Approx { re, im } => (re.to_f64(), im.to_f64()),
    }
}

fn classify_exact(r: QuadExt, mult: u32) -> ResonanceRoot {
    let class = if r.is_rational() {
        if r.is_integer() {
            RootClass::Integer
        } else {
            RootClass::RationalNonInteger
        }
    } else if r.radicand().is_negative() {
        RootClass::Complex
    } else {
        RootClass::Irrational
    };
    ResonanceRoot { value: RootValue::Exact(r), class, multiplicity: mult }
}

fn classify_numeric(det: &RPoly, root: numeric::Complex, mult: u32, prec: u32) -> ResonanceRoot {
    let tol_exp = -((prec / 2) as i64);
    let im_small =
        root.im.is_zero() || root.im.magnitude_exp().is_some_and(|m| m < tol_exp);
    if im_small {
        // near an integer? re-verify exactly at that integer
        if let Some(k) = nearest_integer(&root.re) {
            let close = root
                .re
                .sub(&BigFloat::from_i64(k, root.re.prec()))
                .abs()
                .magnitude_exp()
                .is_none_or(|m| m < tol_exp);
            if close && det.eval(&QuadExt::from_int(k)).is_zero() {
                return classify_exact(QuadExt::from_int(k), mult);
            }
        }
        ResonanceRoot {
            value: RootValue::Approx { re: root.re.clone(), im: BigFloat::zero(prec) },
            class: RootClass::Irrational,
            multiplicity: mult,
        }
    } else {
        ResonanceRoot {
            value: RootValue::Approx { re: root.re, im: root.im },
            class: RootClass::Complex,
            multiplicity: mult,
        }
    }
}

fn nearest_integer(x: &BigFloat) -> Option<i64> {
    let f = x.to_f64();
    if !f.is_finite() || f.abs() > 1e15 {
        return None;
    }
    Some(f.round() as i64)
}

/// Full level-2 analysis of one candidate: simplified system, Q(r), det, roots.
pub fn analyze(system: &PolyODESystem, candidate: &BalanceCandidate, prec: u32) -> ResonanceReport {
    let simplified = crate::balance::leading_terms(system, candidate);
    let matrix = match resonance_matrix(&simplified, candidate) {
        Ok(m) => m,
        Err(e) => {
            return ResonanceReport {
                matrix: Vec::new(),
                det: RPoly::zero(),
                det_content: None,
                roots: Vec::new(),
                has_minus_one: false,
                unresolved: Some(e.to_string()),
            }
        }
    };
    let det_m = det_matrix(&matrix);
    let Some((det, det_content)) = det_without_content(&det_m) else {
        return ResonanceReport {
            matrix,
            det: RPoly::zero(),
            det_content: None,
            roots: Vec::new(),
            has_minus_one: false,
            unresolved: Some(
                "determinant retains arbitrary coefficients beyond a monomial factor".into(),
            ),
        };
    };
    let has_minus_one = !det.is_zero() && det.eval(&QuadExt::from_int(-1)).is_zero();
    match resonance_roots(&det, prec) {
        Ok(roots) => {
            ResonanceReport { matrix, det, det_content, roots, has_minus_one, unresolved: None }
        }
        Err(e) => ResonanceReport {
            matrix,
            det,
            det_content,
            roots: Vec::new(),
            has_minus_one,
            unresolved: Some(e.to_string()),
        },
    }
}

/// Painleve-test verdict levels.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum VerdictStatus {
    /// All exponents and resonances integral, all compatibility conditions met.
    Passes,
    /// Rational structure only: some exponent or resonance is a non-integer
    /// rational (single-valuedness up to a root substitution).
    Weak,
    /// Irrational or complex resonances, or a failed compatibility condition.
    Fails,
}

impl fmt::Display for VerdictStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            VerdictStatus::Passes => "PASSES",
            VerdictStatus::Weak => "WEAK",
            VerdictStatus::Fails => "FAILS",
        };
        write!(f, "{s}")
    }
}

/// One reason feeding the verdict.
#[derive(Clone, PartialEq, Debug)]
pub enum Diagnostic {
    IrrationalResonance { candidate: usize, root: String },
    ComplexResonance { candidate: usize, root: String },
    FractionalResonance { candidate: usize, root: String },
    FractionalExponent { candidate: usize, variable: String, exponent: String },
    /// Level-3 compatibility failed: logarithms required at this step.
    CompatibilityViolation { candidate: usize, branch: String, step: u32 },
    UnresolvedCandidate { candidate: usize, reason: String },
    UnresolvedBranch { candidate: usize, branch: String, reason: String },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::IrrationalResonance { candidate, root } => {
                write!(f, "candidate {candidate}: irrational resonance {root}")
            }
            Diagnostic::ComplexResonance { candidate, root } => {
                write!(f, "candidate {candidate}: complex resonance {root}")
            }
            Diagnostic::FractionalResonance { candidate, root } => {
                write!(f, "candidate {candidate}: non-integer rational resonance {root}")
            }
            Diagnostic::FractionalExponent { candidate, variable, exponent } => {
                write!(
                    f,
                    "candidate {candidate}: fractional leading exponent {variable} ~ t^{exponent}"
                )
            }
            Diagnostic::CompatibilityViolation { candidate, branch, step } => {
                write!(
                    f,
                    "candidate {candidate} branch {branch}: compatibility fails at step {step} (logarithms required)"
                )
            }
            Diagnostic::UnresolvedCandidate { candidate, reason } => {
                write!(f, "candidate {candidate}: analysis incomplete: {reason}")
            }
            Diagnostic::UnresolvedBranch { candidate, branch, reason } => {
                write!(
                    f,
                    "candidate {candidate} branch {branch}: expansion incomplete: {reason}"
                )
            }
        }
    }
}

/// Aggregated Painleve verdict over all balance candidates.
#[derive(Clone, Debug)]
pub struct PainleveVerdict {
    pub status: VerdictStatus,
    pub reasons: Vec<Diagnostic>,
}

impl PainleveVerdict {
    /// True when some candidate or branch could not be fully analyzed (the
    /// verdict is then a statement about what was resolved).
    pub fn has_analysis_failures(&self) -> bool {
        self.reasons.iter().any(|d| {
            matches!(
                d,
                Diagnostic::UnresolvedCandidate { .. } | Diagnostic::UnresolvedBranch { .. }
            )
        })
    }
}

/// Render the full verdict: level-2 reports plus level-3 compatibility checks
/// on every integer candidate. A single bad candidate forces FAILS.
pub fn classify(
    system: &PolyODESystem,
    candidates: &[crate::balance::BalanceCandidate],
    prec: u32,
) -> PainleveVerdict {
    classify_with_reports(system, candidates, prec).0
}

/// Like [`classify`], also returning the per-candidate resonance reports
/// (index-aligned with `candidates`).
pub fn classify_with_reports(
    system: &PolyODESystem,
    candidates: &[crate::balance::BalanceCandidate],
    prec: u32,
) -> (PainleveVerdict, Vec<ResonanceReport>) {
    use crate::balance::CandidateStatus;
    use crate::series::{expand, BranchStatus, ExpandMode};

    let mut reasons = Vec::new();
    let mut reports = Vec::with_capacity(candidates.len());

    for (ci, cand) in candidates.iter().enumerate() {
        if let CandidateStatus::Unresolved(reason) = &cand.status {
            reasons.push(Diagnostic::UnresolvedCandidate {
                candidate: ci,
                reason: reason.clone(),
            });
            reports.push(analyze(system, cand, prec));
            continue;
        }
        for (v, p) in cand.exponents.iter().enumerate() {
            if !p.is_integer() {
                reasons.push(Diagnostic::FractionalExponent {
                    candidate: ci,
                    variable: system.var_names()[v].clone(),
                    exponent: p.to_string(),
                });
            }
        }
        let report = analyze(system, cand, prec);
        if let Some(reason) = &report.unresolved {
            reasons.push(Diagnostic::UnresolvedCandidate {
                candidate: ci,
                reason: reason.clone(),
            });
        }
        for root in &report.roots {
            let rendered = root.value.to_string();
            match root.class {
                RootClass::Irrational => reasons.push(Diagnostic::IrrationalResonance {
                    candidate: ci,
                    root: rendered,
                }),
                RootClass::Complex => reasons.push(Diagnostic::ComplexResonance {
                    candidate: ci,
                    root: rendered,
                }),
                RootClass::RationalNonInteger => {
                    reasons.push(Diagnostic::FractionalResonance {
                        candidate: ci,
                        root: rendered,
                    })
                }
                RootClass::Integer => {}
            }
        }

        // level 3 on integer candidates: run the recursion through the
        // largest positive integer resonance and watch for log obstructions
        if cand.integer_exponents() && report.unresolved.is_none() {
            let max_res = report
                .roots
                .iter()
                .filter_map(|r| r.as_integer())
                .filter(|k| *k > 0)
                .max();
            if let Some(order) = max_res {
                match expand(
                    system,
                    cand,
                    order as u32,
                    ExpandMode::Symbolic,
                    &std::collections::BTreeMap::new(),
                ) {
                    Ok(branches) => {
                        for b in branches {
                            match &b.status {
                                BranchStatus::Complete => {}
                                BranchStatus::LogRequired { step } => {
                                    reasons.push(Diagnostic::CompatibilityViolation {
                                        candidate: ci,
                                        branch: b.branch_id.clone(),
                                        step: *step,
                                    })
                                }
                                BranchStatus::Unresolved { reason, .. } => {
                                    reasons.push(Diagnostic::UnresolvedBranch {
                                        candidate: ci,
                                        branch: b.branch_id.clone(),
                                        reason: reason.clone(),
                                    })
                                }
                            }
                        }
                    }
                    Err(e) => reasons.push(Diagnostic::UnresolvedBranch {
                        candidate: ci,
                        branch: String::new(),
                        reason: e.to_string(),
                    }),
                }
            }
        }
        reports.push(report);
    }

    let fails = reasons.iter().any(|d| {
        matches!(
            d,
            Diagnostic::IrrationalResonance { .. }
                | Diagnostic::ComplexResonance { .. }
                | Diagnostic::CompatibilityViolation { .. }
        )
    });
    let weak = reasons.iter().any(|d| {
        matches!(
            d,
            Diagnostic::FractionalResonance { .. } | Diagnostic::FractionalExponent { .. }
        )
    });
    let status = if fails {
        VerdictStatus::Fails
    } else if weak {
        VerdictStatus::Weak
    } else {
        VerdictStatus::Passes
    };
    (PainleveVerdict { status, reasons }, reports)
}

mod numeric {
    //! Durand-Kerner root finding over complex decimal floats.

    use crate::exactnum::{BigFloat, QuadExt};
    use crate::poly::RPoly;
    use num_traits::{Signed, Zero};

    #[derive(Clone, Debug)]
    pub struct Complex {
        pub re: BigFloat,
        pub im: BigFloat,
    }

    impl Complex {
        fn zero(prec: u32) -> Self {
            Complex { re: BigFloat::zero(prec), im: BigFloat::zero(prec) }
        }

        fn add(&self, o: &Self) -> Self {
            Complex { re: self.re.add(&o.re), im: self.im.add(&o.im) }
        }

        fn sub(&self, o: &Self) -> Self {
            Complex { re: self.re.sub(&o.re), im: self.im.sub(&o.im) }
        }

        fn mul(&self, o: &Self) -> Self {
            Complex {
                re: self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
                im: self.re.mul(&o.im).add(&self.im.mul(&o.re)),
            }
        }

        fn div(&self, o: &Self) -> Self {
            let d = o.re.mul(&o.re).add(&o.im.mul(&o.im));
            let num = self.mul(&Complex { re: o.re.clone(), im: o.im.neg() });
            Complex { re: num.re.div(&d), im: num.im.div(&d) }
        }

        fn abs_sq(&self) -> BigFloat {
            self.re.mul(&self.re).add(&self.im.mul(&self.im))
        }
    }

    fn quad_to_complex(q: &QuadExt, prec: u32) -> Complex {
        let re = BigFloat::from_rational(q.rational_part(), prec);
        if q.radical_part().is_zero() {
            return Complex { re, im: BigFloat::zero(prec) };
        }
        let rad = BigFloat::from_rational(q.radical_part(), prec);
        let core = BigFloat::from_bigint(&q.radicand().abs(), prec).sqrt();
        if q.radicand().is_negative() {
            Complex { re, im: rad.mul(&core) }
        } else {
            Complex { re: re.add(&rad.mul(&core)), im: BigFloat::zero(prec) }
        }
    }

    /// All complex roots of `p` (assumed square-free), Durand-Kerner.
    pub fn all_roots(p: &RPoly, prec: u32) -> Vec<Complex> {
        let Some(n) = p.degree() else { return Vec::new() };
        if n == 0 {
            return Vec::new();
        }
        let w = prec + 16;
        let coeffs: Vec<Complex> = p.coeffs().iter().map(|c| quad_to_complex(c, w)).collect();
        let lead = coeffs.last().unwrap().clone();
        let monic: Vec<Complex> = coeffs.iter().map(|c| c.div(&lead)).collect();
        let eval = |x: &Complex| -> Complex {
            let mut acc = Complex::zero(w);
            for c in monic.iter().rev() {
                acc = acc.mul(x).add(c);
            }
            acc
        };
        // spiral start points
        let seed = Complex {
            re: BigFloat::from_rational(
                &num_rational::BigRational::new(2.into(), 5.into()),
                w,
            ),
            im: BigFloat::from_rational(
                &num_rational::BigRational::new(9.into(), 10.into()),
                w,
            ),
        };
        let mut xs: Vec<Complex> = Vec::with_capacity(n);
        let mut cur = Complex { re: BigFloat::one(w), im: BigFloat::zero(w) };
        for _ in 0..n {
            cur = cur.mul(&seed);
            xs.push(cur.clone());
        }
        let tol_exp = -2 * (prec as i64 - 12);
        for _ in 0..500 {
            let mut max_delta_exp = i64::MIN;
            for i in 0..n {
                let mut denom = Complex { re: BigFloat::one(w), im: BigFloat::zero(w) };
                for j in 0..n {
                    if i != j {
                        denom = denom.mul(&xs[i].sub(&xs[j]));
                    }
                }
                let delta = eval(&xs[i]).div(&denom);
                if let Some(m) = delta.abs_sq().magnitude_exp() {
                    max_delta_exp = max_delta_exp.max(m);
                }
                xs[i] = xs[i].sub(&delta);
            }
            if max_delta_exp < tol_exp {
                break;
            }
        }
        xs.into_iter()
            .map(|x| Complex { re: x.re.with_prec(prec), im: x.im.with_prec(prec) })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balance::{find_balances_default, CandidateStatus};

    fn hh(lam_n: i64, lam_d: i64, c_n: i64, c_d: i64) -> PolyODESystem {
        PolyODESystem::henon_heiles(QuadExt::ratio(lam_n, lam_d), QuadExt::ratio(c_n, c_d))
    }

    fn case_at(cands: &[BalanceCandidate], p0_num: i64, p0_den: i64) -> Vec<&BalanceCandidate> {
        let target = BigRational::new(p0_num.into(), p0_den.into());
        cands
            .iter()
            .filter(|c| c.is_resolved() && c.exponents[0] == target)
            .collect()
    }

    fn root_set(report: &ResonanceReport) -> Vec<QuadExt> {
        report
            .roots
            .iter()
            .map(|r| match &r.value {
                RootValue::Exact(q) => q.clone(),
                RootValue::Approx { .. } => panic!("expected exact roots"),
            })
            .collect()
    }

    #[test]
    fn case2_roots_on_squared_system() {
        // system (7) Case-2 image: det = a1 * r(r-4)(r-6)(r+1), roots {-1,0,4,6}
        let sys =
            PolyODESystem::henon_heiles_squared(QuadExt::ratio(1, 9), QuadExt::ratio(-16, 5));
        let cands = find_balances_default(&sys).unwrap();
        let binding = case_at(&cands, -3, 1);
        let case2 = binding[0];
        let report = analyze(&sys, case2, 64);
        assert!(report.unresolved.is_none());
        assert_eq!(report.det_content.as_deref(), Some("a1"));
        assert!(report.has_minus_one);
        let roots = root_set(&report);
        assert_eq!(
            roots,
            vec![
                QuadExt::from_int(-1),
                QuadExt::from_int(0),
                QuadExt::from_int(4),
                QuadExt::from_int(6)
            ]
        );
        assert!(report.roots.iter().all(|r| r.class == RootClass::Integer));
    }

    #[test]
    fn case1_roots_on_squared_system() {
        // (8.1): roots {-1, 6, 5/2 ± sqrt(1345)/10}, det degree 4
        let sys =
            PolyODESystem::henon_heiles_squared(QuadExt::ratio(1, 9), QuadExt::ratio(-16, 5));
        let cands = find_balances_default(&sys).unwrap();
        let binding = case_at(&cands, -4, 1);
        let case1 = binding[0];
        let report = analyze(&sys, case1, 64);
        assert_eq!(report.det.degree(), Some(4));
        let roots = root_set(&report);
        assert!(roots.contains(&QuadExt::from_int(-1)));
        assert!(roots.contains(&QuadExt::from_int(6)));
        let irr: QuadExt = "5/2 + 1/10*sqrt(1345)".parse().unwrap();
        let irr_conj: QuadExt = "5/2 - 1/10*sqrt(1345)".parse().unwrap();
        assert!(roots.contains(&irr));
        assert!(roots.contains(&irr_conj));
        let n_irr = report.roots.iter().filter(|r| r.class == RootClass::Irrational).count();
        assert_eq!(n_irr, 2);
    }

    #[test]
    fn case1_roots_match_formula_for_random_c() {
        // roots {-1, 6, 5/2 ± sqrt(1-24(1+C))/2} as exact values, 20 rational C
        let cs: Vec<(i64, i64)> = (1..=20).map(|k| (-(3 * k + 1), k)).collect();
        for (cn, cd) in cs {
            let sys = hh(1, 1, cn, cd);
            let cands = find_balances_default(&sys).unwrap();
            let case1 = case_at(&cands, -2, 1);
            assert_eq!(case1.len(), 2, "C={cn}/{cd}");
            let report = analyze(&sys, case1[0], 64);
            assert!(report.unresolved.is_none());
            assert!(report.has_minus_one, "det(-1)=0 must hold");
            let disc = BigRational::new((cd - 24 * (cd + cn)).into(), cd.into());
            let half_sqrt = QuadExt::rational_sqrt(&disc)
                .checked_div(&QuadExt::from_int(2))
                .unwrap();
            let r3 = QuadExt::ratio(5, 2) + &half_sqrt;
            let r4 = QuadExt::ratio(5, 2) - &half_sqrt;
            let roots = root_set(&report);
            for expect in [QuadExt::from_int(-1), QuadExt::from_int(6), r3, r4] {
                assert!(roots.contains(&expect), "C={cn}/{cd} missing {expect}");
            }
            // Vieta: sum of roots = -(coeff of r^3)/(coeff of r^4)
            let sum = roots.iter().fold(QuadExt::zero(), |acc, r| acc + r);
            let vieta = -(report.det.coeff(3) / report.det.coeff(4));
            assert_eq!(sum, vieta);
        }
    }

    #[test]
    fn trivial_linear_equation() {
        // u'' = 0 with u ~ c t^1: roots {-1, 0}
        let sys = PolyODESystem::parse("vars u; u'' = 0;").unwrap();
        let cand = BalanceCandidate {
            exponents: vec![BigRational::from_integer(1.into())],
            coefficients: vec![LeadingCoeff::Arbitrary],
            leading_sets: vec![vec![0]],
            status: CandidateStatus::Resolved,
        };
        let report = analyze(&sys, &cand, 64);
        assert!(report.unresolved.is_none());
        let roots = root_set(&report);
        assert_eq!(roots, vec![QuadExt::from_int(-1), QuadExt::from_int(0)]);
    }

    #[test]
    fn weierstrass_roots() {
        let sys = PolyODESystem::parse("vars u; u'' = 6*u^2;").unwrap();
        let cands = find_balances_default(&sys).unwrap();
        let cand = cands.iter().find(|c| c.is_resolved()).unwrap();
        let report = analyze(&sys, cand, 64);
        let roots = root_set(&report);
        assert_eq!(roots, vec![QuadExt::from_int(-1), QuadExt::from_int(6)]);
    }

    #[test]
    fn numeric_fallback_on_cubic() {
        // (r-1)(r^3 - 2): rational root 1 exact; cubic numeric
        let p = RPoly::new(vec![
            QuadExt::from_int(-2),
            QuadExt::from_int(0),
            QuadExt::from_int(0),
            QuadExt::from_int(1),
        ]);
        let full = p.mul(&RPoly::linear_root(&QuadExt::from_int(1)));
        let roots = resonance_roots(&full, 48).unwrap();
        assert_eq!(roots.len(), 4);
        let n_complex = roots.iter().filter(|r| r.class == RootClass::Complex).count();
        let n_irr = roots.iter().filter(|r| r.class == RootClass::Irrational).count();
        let n_int = roots.iter().filter(|r| r.class == RootClass::Integer).count();
        assert_eq!((n_int, n_irr, n_complex), (1, 1, 2));
        // the irrational root is cbrt(2) to high accuracy
        let irr = roots.iter().find(|r| r.class == RootClass::Irrational).unwrap();
        if let RootValue::Approx { re, .. } = &irr.value {
            let cube = re.mul(re).mul(re);
            let err = cube.sub(&BigFloat::from_i64(2, 48)).abs();
            assert!(err.magnitude_exp().is_none_or(|m| m < -35), "cbrt accuracy");
        } else {
            panic!("expected numeric root");
        }
    }

    #[test]
    fn degenerate_determinant_is_an_error() {
        assert!(matches!(
            resonance_roots(&RPoly::zero(), 32),
            Err(ResonanceError::DegenerateDeterminant)
        ));
    }

    #[test]
    fn multiplicity_via_gcd() {
        // (r-3)^2 (r+1)
        let p = RPoly::linear_root(&QuadExt::from_int(3));
        let full = p.mul(&p).mul(&RPoly::linear_root(&QuadExt::from_int(-1)));
        let roots = resonance_roots(&full, 32).unwrap();
        let r3 = roots
            .iter()
            .find(|r| r.value == RootValue::Exact(QuadExt::from_int(3)))
            .unwrap();
        assert_eq!(r3.multiplicity, 2);
    }

    fn verdict_of(lam: (i64, i64), c: (i64, i64)) -> PainleveVerdict {
        let sys = hh(lam.0, lam.1, c.0, c.1);
        let cands = find_balances_default(&sys).unwrap();
        classify(&sys, &cands, 64)
    }

    #[test]
    fn integrable_case_i_passes() {
        let v = verdict_of((1, 1), (-1, 1));
        assert_eq!(v.status, VerdictStatus::Passes);
        assert!(!v.has_analysis_failures());
    }

    #[test]
    fn integrable_case_ii_passes_for_any_lambda() {
        for lam in [(1i64, 1i64), (1, 2)] {
            let v = verdict_of(lam, (-6, 1));
            assert_eq!(v.status, VerdictStatus::Passes, "lambda={lam:?}");
        }
    }

    #[test]
    fn integrable_case_iii_is_weak() {
        let v = verdict_of((1, 16), (-16, 1));
        assert_eq!(v.status, VerdictStatus::Weak);
        // the weak flag comes from the fractional Case-2 exponent
        assert!(v
            .reasons
            .iter()
            .any(|d| matches!(d, Diagnostic::FractionalExponent { .. })));
        assert!(!v
            .reasons
            .iter()
            .any(|d| matches!(d, Diagnostic::CompatibilityViolation { .. })));
    }

    #[test]
    fn paper_system_fails_with_irrational_diagnostic() {
        let v = verdict_of((1, 9), (-16, 5));
        assert_eq!(v.status, VerdictStatus::Fails);
        assert!(v
            .reasons
            .iter()
            .any(|d| matches!(d, Diagnostic::IrrationalResonance { .. })));
    }

    #[test]
    fn original_chaotic_case_fails_complex() {
        let v = verdict_of((1, 1), (1, 1));
        assert_eq!(v.status, VerdictStatus::Fails);
        assert!(v
            .reasons
            .iter()
            .any(|d| matches!(d, Diagnostic::ComplexResonance { .. })));
    }
}
