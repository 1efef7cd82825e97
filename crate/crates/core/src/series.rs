//! Level-3 recursion: formal Laurent-series solutions with free parameters.
//!
//! Substituting `x_v = sum_j c_{v,j} t^(p_v + j)` into the full system turns
//! each order `j` into a linear step system `Q(j) u + R_j = 0`, where `Q` is
//! the resonance matrix of the balance and `R_j` collects products of earlier
//! coefficients. At nonresonant steps the system solves exactly; where
//! `det Q(j) = 0` the elimination leaves free directions (new parameters) and
//! consistency constraints. A constraint univariate in one earlier parameter
//! is solved exactly and the expansion branches over its roots; an
//! unsatisfiable constraint means logarithms would be required and the branch
//! is marked accordingly.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::balance::{falling_factorial, leading_subsets, BalanceCandidate, LeadingCoeff};
use crate::exactnum::QuadExt;
use crate::odemodel::PolyODESystem;
use crate::poly::{exact_roots, ExactRoots, MPoly, RMPoly, RPoly};
use crate::resonance::{det_matrix, resonance_matrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("expansion needs integer leading exponents (square the variable first)")]
    FractionalExponents,
    #[error("candidate has unresolved leading coefficients")]
    UnresolvedCandidate,
    #[error("no value supplied for free parameter {0}")]
    MissingParameter(String),
    #[error("supplied parameter {0} does not occur in any branch")]
    UnknownParameter(String),
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("step {0} is not a resonance (det Q is nonzero there)")]
    NotResonant(u32),
    #[error("power {0} outside the expanded range")]
    OutOfRange(i64),
    #[error("order must be at least 1")]
    ZeroOrder,
}

/// Expansion mode: keep free parameters symbolic, or substitute values the
/// moment each parameter is born.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ExpandMode {
    Symbolic,
    Evaluated,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ParamState {
    Free,
    Fixed(QuadExt),
}

/// One entry of the parameter registry.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ParamInfo {
    pub name: String,
    pub variable: usize,
    /// Recursion step where the parameter was born (det Q(step) = 0).
    pub step: u32,
    pub state: ParamState,
    pub(crate) id: usize,
}

/// How a constraint at a degenerate step was handled.
#[derive(Clone, PartialEq, Debug)]
pub enum ConstraintResolution {
    SatisfiedIdentically,
    /// Followed from an earlier deferred constraint (deferred mode only).
    ReducedByEarlier,
    /// The expansion branched on `param = root`.
    Branched { param: String, root: QuadExt },
    /// Nonzero residue with nothing to absorb it: logarithms required.
    LogRequired,
    Unresolved(String),
    /// Recorded without resolution (deferred mode).
    Deferred,
}

#[derive(Clone, PartialEq, Debug)]
pub struct ConstraintRecord {
    pub step: u32,
    /// The constraint polynomial (render with [`LaurentSolution::render`]).
    pub constraint: MPoly,
    pub resolution: ConstraintResolution,
}

#[derive(Clone, PartialEq, Debug)]
pub enum BranchStatus {
    Complete,
    /// A compatibility condition failed: the balance needs log terms.
    LogRequired { step: u32 },
    /// A constraint or step solve fell outside the supported patterns.
    Unresolved { step: u32, reason: String },
}

/// The linear system of one recursion step: `matrix * u + rhs = 0`, where
/// `u` are the step coefficients and `rhs` depends only on earlier ones.
#[derive(Clone, Debug)]
pub struct StepSystem {
    pub step: u32,
    pub matrix: Vec<Vec<MPoly>>,
    pub rhs: Vec<MPoly>,
}

/// One branch of the formal Laurent-series solution.
#[derive(Clone, Debug)]
pub struct LaurentSolution {
    vars: Vec<String>,
    exponents: Vec<i64>,
    /// `coeffs[v][j]` is the coefficient of `t^(exponents[v] + j)`.
    coeffs: Vec<Vec<MPoly>>,
    registry: Vec<ParamInfo>,
    pub constraints: Vec<ConstraintRecord>,
    pub status: BranchStatus,
    /// Canonical branch label, e.g. `a1=25/16*sqrt(2)`.
    pub branch_id: String,
    order: u32,
}

impl LaurentSolution {
    pub fn var_names(&self) -> &[String] {
        &self.vars
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn exponents(&self) -> &[i64] {
        &self.exponents
    }

    pub fn starting_exponent(&self, variable: &str) -> Option<i64> {
        self.var_index(variable).map(|v| self.exponents[v])
    }

    fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    /// Exact coefficient of `t^power` of `variable` as a parameter polynomial.
    pub fn coefficient(&self, variable: &str, power: i64) -> Result<&MPoly, SeriesError> {
        let v = self
            .var_index(variable)
            .ok_or_else(|| SeriesError::UnknownVariable(variable.to_string()))?;
        let j = power - self.exponents[v];
        if j < 0 || j >= self.coeffs[v].len() as i64 {
            return Err(SeriesError::OutOfRange(power));
        }
        Ok(&self.coeffs[v][j as usize])
    }

    pub(crate) fn coefficient_by_index(&self, v: usize, j: usize) -> &MPoly {
        &self.coeffs[v][j]
    }

    /// The free parameters, in registration order.
    pub fn free_parameters(&self) -> Vec<&ParamInfo> {
        self.registry
            .iter()
            .filter(|p| p.state == ParamState::Free)
            .collect()
    }

    /// Every parameter ever registered, including constraint-fixed ones.
    pub fn all_parameters(&self) -> &[ParamInfo] {
        &self.registry
    }

    fn param_by_id(&self, id: usize) -> Option<&ParamInfo> {
        self.registry.iter().find(|p| p.id == id)
    }

    /// Render a parameter polynomial with this branch's parameter names.
    pub fn render(&self, poly: &MPoly) -> String {
        poly.display_with(&|id| {
            self.param_by_id(id)
                .map(|p| p.name.clone())
                .unwrap_or_else(|| format!("p{id}"))
        })
    }

    /// Substitute values for the free parameters into every coefficient of
    /// power at most `upto`; exact arithmetic throughout.
    pub fn evaluate_coefficients(
        &self,
        values: &BTreeMap<String, QuadExt>,
        upto: i64,
    ) -> Result<BTreeMap<(usize, i64), QuadExt>, SeriesError> {
        for name in values.keys() {
            if !self.registry.iter().any(|p| &p.name == name) {
                return Err(SeriesError::UnknownParameter(name.clone()));
            }
        }
        let lookup = |id: usize| -> Option<QuadExt> {
            let info = self.param_by_id(id)?;
            match &info.state {
                ParamState::Fixed(v) => Some(v.clone()),
                ParamState::Free => values.get(&info.name).cloned(),
            }
        };
        let mut out = BTreeMap::new();
        for (v, coeffs) in self.coeffs.iter().enumerate() {
            for (j, poly) in coeffs.iter().enumerate() {
                let power = self.exponents[v] + j as i64;
                if power > upto {
                    break;
                }
                let value = poly.eval(&lookup).map_err(|_| {
                    let missing = poly
                        .vars()
                        .into_iter()
                        .find(|id| lookup(*id).is_none())
                        .and_then(|id| self.param_by_id(id))
                        .map(|p| p.name.clone())
                        .unwrap_or_default();
                    SeriesError::MissingParameter(missing)
                })?;
                out.insert((v, power), value);
            }
        }
        Ok(out)
    }

    /// Ordered `(power, coefficient)` pairs for one variable.
    pub fn series_terms(&self, variable: &str) -> Option<Vec<(i64, &MPoly)>> {
        let v = self.var_index(variable)?;
        Some(
            self.coeffs[v]
                .iter()
                .enumerate()
                .map(|(j, c)| (self.exponents[v] + j as i64, c))
                .collect(),
        )
    }
}

impl fmt::Display for LaurentSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (v, name) in self.vars.iter().enumerate() {
            let mut line = format!("{name} =");
            let mut first = true;
            for (j, c) in self.coeffs[v].iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let power = self.exponents[v] + j as i64;
                let cs = self.render(c);
                let (neg, body) = match cs.strip_prefix('-') {
                    Some(rest) if !rest.contains(" + ") && !rest.contains(" - ") => {
                        (true, rest.to_string())
                    }
                    _ => (false, cs),
                };
                let body = if body.contains(" + ") || body.contains(" - ") {
                    format!("({body})")
                } else {
                    body
                };
                let term = match power {
                    0 => body,
                    1 => format!("{body}*t"),
                    _ => format!("{body}*t^{power}"),
                };
                if first {
                    line.push(' ');
                    if neg {
                        line.push('-');
                    }
                    line.push_str(&term);
                    first = false;
                } else {
                    line.push_str(if neg { " - " } else { " + " });
                    line.push_str(&term);
                }
            }
            if first {
                line.push_str(" 0");
            }
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// Raw view of a degenerate step before resolution.
#[derive(Clone, Debug)]
pub struct CompatibilityReport {
    pub step: u32,
    /// `Q(step) u + R = 0` rows as polynomials in the parameters and this
    /// step's unknown coefficients, which are named like the parameters they
    /// would become (`cy2` for the y-coefficient of t^2 at step 4).
    pub rows: Vec<MPoly>,
    pub step_system: StepSystem,
    /// Constraints after elimination, reduced modulo earlier deferred ones.
    pub constraints: Vec<MPoly>,
    /// Unknowns of this step left free by the elimination.
    pub free_unknowns: Vec<String>,
    /// id -> name table for rendering the polynomials above.
    pub names: Vec<(usize, String)>,
}

impl CompatibilityReport {
    pub fn render(&self, poly: &MPoly) -> String {
        poly.display_with(&|id| {
            self.names
                .iter()
                .find(|(i, _)| *i == id)
                .map(|(_, n)| n.clone())
                .unwrap_or_else(|| format!("p{id}"))
        })
    }

    pub fn id_of(&self, name: &str) -> Option<usize> {
        self.names.iter().find(|(_, n)| n == name).map(|(i, _)| *i)
    }
}

// ---------------------------------------------------------------- expansion

#[derive(Clone)]
struct Expansion {
    vars: Vec<String>,
    p: Vec<i64>,
    mu: Vec<i64>,
    /// Per equation: (coefficient, factors (var, order, exponent), base exponent).
    eq_terms: Vec<Vec<(QuadExt, Vec<(usize, u32, u32)>, i64)>>,
    qmat: Vec<Vec<RMPoly>>,
    coeffs: Vec<Vec<MPoly>>,
    registry: Vec<ParamInfo>,
    constraints: Vec<ConstraintRecord>,
    status: BranchStatus,
    branch_path: Vec<String>,
    next_id: usize,
    mode: ExpandMode,
    values: BTreeMap<String, QuadExt>,
    defer: bool,
    /// Radicand of this branch's quadratic extension (1 while still rational).
    field: num_bigint::BigInt,
}

impl Expansion {
    fn new(
        system: &PolyODESystem,
        candidate: &BalanceCandidate,
        mode: ExpandMode,
        values: BTreeMap<String, QuadExt>,
        defer: bool,
    ) -> Result<Self, SeriesError> {
        if !candidate.integer_exponents() {
            return Err(SeriesError::FractionalExponents);
        }
        let n = system.num_vars();
        let p: Vec<i64> = candidate
            .exponents
            .iter()
            .map(|e| e.to_integer().to_i64().expect("exponent fits in i64"))
            .collect();
        let (_, mus) = leading_subsets(system, &candidate.exponents);
        let mu: Vec<i64> = mus
            .iter()
            .map(|m| m.to_integer().to_i64().expect("exponent fits in i64"))
            .collect();
        let simplified = crate::balance::leading_terms(system, candidate);
        let qmat = resonance_matrix(&simplified, candidate)
            .map_err(|_| SeriesError::UnresolvedCandidate)?;

        let mut registry = Vec::new();
        let mut coeffs = Vec::with_capacity(n);
        for (v, c) in candidate.coefficients.iter().enumerate() {
            match c {
                LeadingCoeff::Value(q) => coeffs.push(vec![MPoly::constant(q.clone())]),
                LeadingCoeff::Arbitrary => {
                    // unknown id = variable index, matching resonance_matrix
                    registry.push(ParamInfo {
                        name: format!("a{}", v + 1),
                        variable: v,
                        step: 0,
                        state: ParamState::Free,
                        id: v,
                    });
                    coeffs.push(vec![MPoly::var(v)]);
                }
                LeadingCoeff::Unknown => return Err(SeriesError::UnresolvedCandidate),
            }
        }

        let eq_terms = system
            .equations()
            .iter()
            .map(|eq| {
                eq.terms()
                    .map(|(m, c)| {
                        let factors: Vec<(usize, u32, u32)> = m
                            .factors()
                            .iter()
                            .map(|&(jv, e)| (jv.var, jv.order, e))
                            .collect();
                        let base: i64 = factors
                            .iter()
                            .map(|&(v, d, e)| (p[v] - d as i64) * e as i64)
                            .sum();
                        (c.clone(), factors, base)
                    })
                    .collect()
            })
            .collect();

        // ambient field: any radicand already present in the system or balance
        let mut field = num_bigint::BigInt::from(1);
        let mut absorb = |q: &QuadExt| {
            if !q.is_rational() {
                field = q.radicand().clone();
            }
        };
        for eq in system.equations() {
            for (_, c) in eq.terms() {
                absorb(c);
            }
        }
        for c in &candidate.coefficients {
            if let LeadingCoeff::Value(v) = c {
                absorb(v);
            }
        }

        Ok(Expansion {
            vars: system.var_names().to_vec(),
            p,
            mu,
            eq_terms,
            qmat,
            coeffs,
            registry,
            constraints: Vec::new(),
            status: BranchStatus::Complete,
            branch_path: Vec::new(),
            next_id: n,
            mode,
            values,
            defer,
            field,
        })
    }

    /// Try to place `value` inside this branch's field, widening a still-
    /// rational field if needed. False on a genuine radicand clash.
    fn adopt_value(&mut self, value: &QuadExt) -> bool {
        use num_traits::One;
        if value.is_rational() {
            return true;
        }
        if self.field.is_one() {
            self.field = value.radicand().clone();
            return true;
        }
        &self.field == value.radicand()
    }

    /// Coefficient of `t^(mu_i + j)` of equation `i` over the coefficients
    /// known so far; step-j unknowns contribute nothing because they do not
    /// exist in `coeffs` yet.
    fn rhs_at(&self, i: usize, j: i64) -> MPoly {
        let mut acc = MPoly::zero();
        for (c, factors, base) in &self.eq_terms[i] {
            let need = self.mu[i] + j - base;
            if need < 0 {
                continue;
            }
            let items: Vec<(usize, u32)> = factors
                .iter()
                .flat_map(|&(v, d, e)| std::iter::repeat((v, d)).take(e as usize))
                .collect();
            self.convolve(&items, 0, need, &MPoly::constant(c.clone()), &mut acc);
        }
        acc
    }

    fn convolve(
        &self,
        items: &[(usize, u32)],
        at: usize,
        left: i64,
        partial: &MPoly,
        acc: &mut MPoly,
    ) {
        if at == items.len() {
            if left == 0 {
                *acc = acc.add(partial);
            }
            return;
        }
        let (v, d) = items[at];
        let last = at == items.len() - 1;
        let hi = left.min(self.coeffs[v].len() as i64 - 1);
        for k in 0..=hi {
            if last && k != left {
                continue;
            }
            let coeff = &self.coeffs[v][k as usize];
            if coeff.is_zero() {
                continue;
            }
            let ff = falling_factorial(
                &num_rational::BigRational::from_integer((self.p[v] + k).into()),
                d,
            );
            if ff.is_zero() {
                continue;
            }
            let next = partial.mul(&coeff.scale(&QuadExt::from_rational(ff)));
            self.convolve(items, at + 1, left - k, &next, acc);
        }
    }

    /// Q(j), with any constraint-fixed parameters substituted.
    fn step_matrix(&self, j: i64) -> Vec<Vec<MPoly>> {
        let n = self.p.len();
        let mut m = vec![vec![MPoly::zero(); n]; n];
        for (i, row) in self.qmat.iter().enumerate() {
            for (v, entry) in row.iter().enumerate() {
                let mut e = entry.eval_r(&QuadExt::from_int(j));
                for info in &self.registry {
                    if let ParamState::Fixed(val) = &info.state {
                        e = e.substitute(info.id, val);
                    }
                }
                m[i][v] = e;
            }
        }
        m
    }

    /// Substitute `id := value` into all stored state. False when the value
    /// lives in a different quadratic extension than this branch.
    fn substitute_everywhere(&mut self, id: usize, value: &QuadExt) -> bool {
        let mut new_coeffs = Vec::with_capacity(self.coeffs.len());
        for per_var in &self.coeffs {
            let mut row = Vec::with_capacity(per_var.len());
            for c in per_var {
                match c.substitute_checked(id, value) {
                    Some(s) => row.push(s),
                    None => return false,
                }
            }
            new_coeffs.push(row);
        }
        let mut new_constraints = self.constraints.clone();
        for rec in &mut new_constraints {
            match rec.constraint.substitute_checked(id, value) {
                Some(s) => rec.constraint = s,
                None => return false,
            }
        }
        self.coeffs = new_coeffs;
        self.constraints = new_constraints;
        true
    }

    /// Register the parameter born at (variable, step), always symbolic;
    /// Evaluated-mode values are applied per branch after the step resolves.
    fn new_param(&mut self, variable: usize, step: u32) -> MPoly {
        let power = self.p[variable] + step as i64;
        let name = format!("c{}{}", self.vars[variable], power);
        let id = self.next_id;
        self.next_id += 1;
        self.registry.push(ParamInfo {
            name,
            variable,
            step,
            state: ParamState::Free,
            id,
        });
        MPoly::var(id)
    }

    /// Evaluated mode: fix freshly-born parameters to their supplied values
    /// where the value is compatible with this branch's field; incompatible
    /// values leave the parameter symbolic here.
    fn apply_values(&mut self, born: &[usize]) {
        if self.mode != ExpandMode::Evaluated {
            return;
        }
        for &id in born {
            let Some(info) = self.registry.iter().find(|p| p.id == id) else { continue };
            let Some(value) = self.values.get(&info.name).cloned() else { continue };
            if self.adopt_value(&value) && self.substitute_everywhere(id, &value) {
                for info in self.registry.iter_mut() {
                    if info.id == id {
                        info.state = ParamState::Fixed(value.clone());
                    }
                }
            }
        }
    }

    fn param_name(&self, id: usize) -> Option<String> {
        self.registry.iter().find(|p| p.id == id).map(|p| p.name.clone())
    }

    /// Substitute all constraint-fixed parameter values; None on a field
    /// mismatch (possible only with user-supplied values in exotic systems).
    fn substitute_fixed(&self, poly: &MPoly) -> Option<MPoly> {
        let mut out = poly.clone();
        for info in &self.registry {
            if let ParamState::Fixed(val) = &info.state {
                out = out.substitute_checked(info.id, val)?;
            }
        }
        Some(out)
    }

    fn finish(self, order: u32) -> LaurentSolution {
        LaurentSolution {
            vars: self.vars,
            exponents: self.p,
            coeffs: self.coeffs,
            registry: self.registry,
            constraints: self.constraints,
            status: self.status,
            branch_id: if self.branch_path.is_empty() {
                "main".to_string()
            } else {
                self.branch_path.join(";")
            },
            order,
        }
    }
}

// ------------------------------------------------------------- elimination

struct Eliminated {
    /// Solved value per column (free columns get the provided unknowns).
    solution: Option<Vec<MPoly>>,
    free_cols: Vec<usize>,
    constraints: Vec<MPoly>,
    failure: Option<String>,
}

/// Fraction-free Gaussian elimination of `matrix * u + rhs = 0` over the
/// parameter-polynomial ring.
fn eliminate(matrix: &[Vec<MPoly>], rhs: &[MPoly], free_unknowns: &[MPoly]) -> Eliminated {
    let n = matrix.len();
    let mut rows: Vec<(Vec<MPoly>, MPoly)> = matrix
        .iter()
        .zip(rhs)
        .map(|(r, b)| (r.clone(), b.clone()))
        .collect();
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; n];
    let mut used_rows = vec![false; n];

    for col in 0..n {
        // prefer constant pivots, then single-term ones
        let mut best: Option<(usize, u8)> = None;
        for (ri, row) in rows.iter().enumerate() {
            if used_rows[ri] || row.0[col].is_zero() {
                continue;
            }
            let rank = if row.0[col].is_constant() {
                0
            } else if row.0[col].num_terms() == 1 {
                1
            } else {
                2
            };
            if best.is_none_or(|(_, r)| rank < r) {
                best = Some((ri, rank));
            }
        }
        let Some((pr, _)) = best else { continue };
        used_rows[pr] = true;
        pivot_of_col[col] = Some(pr);
        let pivot = rows[pr].0[col].clone();
        let prow = rows[pr].clone();
        for (ri, row) in rows.iter_mut().enumerate() {
            if ri == pr || row.0[col].is_zero() {
                continue;
            }
            let factor = row.0[col].clone();
            for c in 0..n {
                row.0[c] = row.0[c].mul(&pivot).sub(&prow.0[c].mul(&factor));
            }
            row.1 = row.1.mul(&pivot).sub(&prow.1.mul(&factor));
        }
    }

    let mut constraints = Vec::new();
    for (ri, row) in rows.iter().enumerate() {
        if used_rows[ri] {
            continue;
        }
        debug_assert!(row.0.iter().all(|c| c.is_zero()));
        if !row.1.is_zero() {
            constraints.push(row.1.clone());
        }
    }

    let free_cols: Vec<usize> = (0..n).filter(|c| pivot_of_col[*c].is_none()).collect();

    let mut solution: Vec<Option<MPoly>> = vec![None; n];
    for (slot, col) in free_cols.iter().enumerate() {
        solution[*col] = Some(free_unknowns[slot].clone());
    }
    for col in (0..n).rev() {
        let Some(pr) = pivot_of_col[col] else { continue };
        let (ref coeffs, ref b) = rows[pr];
        // pivot * u_col + sum coeff * u_other + b = 0
        let mut residue = b.clone();
        for (c, coeff) in coeffs.iter().enumerate() {
            if c == col || coeff.is_zero() {
                continue;
            }
            let uc = solution[c].clone().expect("later columns already resolved");
            residue = residue.add(&coeff.mul(&uc));
        }
        match residue.neg().div_exact(&coeffs[col]) {
            Some(q) => solution[col] = Some(q),
            None => {
                return Eliminated {
                    solution: None,
                    free_cols,
                    constraints,
                    failure: Some(
                        "step solution is not polynomial in the parameters".to_string(),
                    ),
                }
            }
        }
    }

    Eliminated {
        solution: Some(solution.into_iter().map(|s| s.unwrap()).collect()),
        free_cols,
        constraints,
        failure: None,
    }
}

/// Strip monomial content in the always-nonzero parameters (arbitrary leading
/// coefficients have ids below the variable count and are nonzero by
/// definition); content in later parameters must stay (they may be zero).
fn strip_leading_content(c: &MPoly, n_vars: usize) -> MPoly {
    let (content, _) = c.monomial_content();
    let mut divisor = MPoly::one();
    let mut any = false;
    for v in content.vars() {
        if v < n_vars {
            divisor = divisor.mul(&MPoly::var(v).pow(content.exponent(v)));
            any = true;
        }
    }
    if !any {
        return c.clone();
    }
    c.div_exact(&divisor).unwrap_or_else(|| c.clone())
}

/// Canonical branching order for constraint roots: rationals first
/// (ascending), then real radicals (smaller radicand first, + before -), then
/// complex radicals in the same pattern.
fn root_order_key(q: &QuadExt) -> (u8, f64, i8, f64) {
    if q.is_rational() {
        (0, 0.0, 0, q.rational_part().to_f64().unwrap_or(0.0))
    } else {
        let neg = q.radicand().is_negative();
        let sign = if q.radical_part().is_negative() { 1 } else { 0 };
        (
            if neg { 2 } else { 1 },
            q.radicand().to_f64().unwrap_or(0.0).abs(),
            sign,
            q.rational_part().to_f64().unwrap_or(0.0),
        )
    }
}

/// Expand the Laurent series of `candidate` through `order` recursion steps.
///
/// Returns one solution per branch, in canonical branch order. `params` is
/// consulted in Evaluated mode only.
pub fn expand(
    system: &PolyODESystem,
    candidate: &BalanceCandidate,
    order: u32,
    mode: ExpandMode,
    params: &BTreeMap<String, QuadExt>,
) -> Result<Vec<LaurentSolution>, SeriesError> {
    if order == 0 {
        return Err(SeriesError::ZeroOrder);
    }
    let root = Expansion::new(system, candidate, mode, params.clone(), false)?;
    let done = run_expansion(root, order);
    if mode == ExpandMode::Evaluated {
        for key in params.keys() {
            let known = done.iter().any(|b| b.registry.iter().any(|p| &p.name == key));
            if !known {
                return Err(SeriesError::UnknownParameter(key.clone()));
            }
        }
    }
    Ok(done.into_iter().map(|e| e.finish(order)).collect())
}

fn run_expansion(root: Expansion, order: u32) -> Vec<Expansion> {
    let mut wave = vec![root];
    for j in 1..=order as i64 {
        let mut next_wave = Vec::with_capacity(wave.len());
        for exp in wave {
            if exp.status != BranchStatus::Complete {
                // halted branches stop growing but are still reported
                next_wave.push(exp);
                continue;
            }
            next_wave.extend(advance(exp, j));
        }
        wave = next_wave;
    }
    wave
}

/// Run one recursion step, possibly branching.
fn advance(mut exp: Expansion, j: i64) -> Vec<Expansion> {
    let n = exp.p.len();
    let matrix = exp.step_matrix(j);
    let rhs: Vec<MPoly> = (0..n).map(|i| exp.rhs_at(i, j)).collect();

    let det = {
        let rm: Vec<Vec<RMPoly>> = matrix
            .iter()
            .map(|row| row.iter().map(|e| RMPoly::constant(e.clone())).collect())
            .collect();
        det_matrix(&rm)
    };

    if !det.is_zero() {
        // regular step: unique solution
        let el = eliminate(&matrix, &rhs, &[]);
        match (el.solution, el.failure) {
            (Some(sol), None) => {
                for (v, s) in sol.into_iter().enumerate() {
                    exp.coeffs[v].push(s);
                }
            }
            (_, failure) => {
                exp.status = BranchStatus::Unresolved {
                    step: j as u32,
                    reason: failure.unwrap_or_else(|| "step solve failed".to_string()),
                };
            }
        }
        return vec![exp];
    }

    // resonance step: discover free directions first
    let probe = eliminate(&matrix, &rhs, &vec![MPoly::zero(); n]);
    let first_born = exp.next_id;
    let unknowns: Vec<MPoly> = probe
        .free_cols
        .iter()
        .map(|col| exp.new_param(*col, j as u32))
        .collect();
    let born: Vec<usize> = (first_born..exp.next_id).collect();
    let el = eliminate(&matrix, &rhs, &unknowns);

    let mut raw_constraints: Vec<MPoly> = el
        .constraints
        .iter()
        .map(|c| strip_leading_content(c, n))
        .collect();
    raw_constraints.dedup();

    if exp.defer {
        for c in &raw_constraints {
            let resolution = if c.is_zero() {
                ConstraintResolution::SatisfiedIdentically
            } else if reduce_modulo_earlier(c, &exp.constraints) {
                ConstraintResolution::ReducedByEarlier
            } else {
                ConstraintResolution::Deferred
            };
            exp.constraints.push(ConstraintRecord {
                step: j as u32,
                constraint: c.clone(),
                resolution,
            });
        }
        return store_step(exp, el, j);
    }

    // resolve constraints, branching where needed
    let mut branches = vec![exp];
    for c in raw_constraints {
        let mut next = Vec::new();
        for mut b in branches {
            let Some(cur) = b.substitute_fixed(&c) else {
                let reason = "parameter value outside this branch's field".to_string();
                b.status = BranchStatus::Unresolved { step: j as u32, reason };
                next.push(b);
                continue;
            };
            if cur.is_zero() {
                b.constraints.push(ConstraintRecord {
                    step: j as u32,
                    constraint: cur,
                    resolution: ConstraintResolution::SatisfiedIdentically,
                });
                next.push(b);
                continue;
            }
            if cur.is_constant() {
                b.constraints.push(ConstraintRecord {
                    step: j as u32,
                    constraint: cur,
                    resolution: ConstraintResolution::LogRequired,
                });
                b.status = BranchStatus::LogRequired { step: j as u32 };
                next.push(b);
                continue;
            }
            let free_vars = cur.vars();
            if free_vars.len() != 1 {
                let reason = "constraint involves several parameters".to_string();
                b.constraints.push(ConstraintRecord {
                    step: j as u32,
                    constraint: cur,
                    resolution: ConstraintResolution::Unresolved(reason.clone()),
                });
                b.status = BranchStatus::Unresolved { step: j as u32, reason };
                next.push(b);
                continue;
            }
            let id = *free_vars.iter().next().unwrap();
            let poly = RPoly::new(cur.as_univariate(id).expect("single unknown"));
            let mut roots = Vec::new();
            let mut blocked = None;
            for (factor, _) in poly.squarefree_decomposition() {
                match exact_roots(&factor) {
                    ExactRoots::Complete(rs) => roots.extend(rs),
                    ExactRoots::Partial { .. } => {
                        blocked =
                            Some("constraint roots leave one quadratic extension".to_string());
                    }
                }
            }
            if let Some(reason) = blocked {
                b.constraints.push(ConstraintRecord {
                    step: j as u32,
                    constraint: cur,
                    resolution: ConstraintResolution::Unresolved(reason.clone()),
                });
                b.status = BranchStatus::Unresolved { step: j as u32, reason };
                next.push(b);
                continue;
            }
            if id < n {
                // zero is excluded for arbitrary leading coefficients
                roots.retain(|r| !r.is_zero());
            }
            roots.sort_by(|x, y| {
                root_order_key(x)
                    .partial_cmp(&root_order_key(y))
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
            roots.dedup();
            if roots.is_empty() {
                b.constraints.push(ConstraintRecord {
                    step: j as u32,
                    constraint: cur,
                    resolution: ConstraintResolution::LogRequired,
                });
                b.status = BranchStatus::LogRequired { step: j as u32 };
                next.push(b);
                continue;
            }
            let pname = b.param_name(id).unwrap_or_else(|| format!("p{id}"));
            for root in roots {
                let mut child = b.clone();
                if !child.adopt_value(&root) || !child.substitute_everywhere(id, &root) {
                    child.status = BranchStatus::Unresolved {
                        step: j as u32,
                        reason: "constraint root outside this branch's field".to_string(),
                    };
                    next.push(child);
                    continue;
                }
                for info in child.registry.iter_mut() {
                    if info.id == id {
                        info.state = ParamState::Fixed(root.clone());
                    }
                }
                child.constraints.push(ConstraintRecord {
                    step: j as u32,
                    constraint: cur.clone(),
                    resolution: ConstraintResolution::Branched {
                        param: pname.clone(),
                        root: root.clone(),
                    },
                });
                child.branch_path.push(format!("{pname}={root}"));
                next.push(child);
            }
        }
        branches = next;
    }

    // push the step coefficients into every branch, then apply values
    let mut out = Vec::new();
    for mut b in branches {
        match (&el.solution, &el.failure) {
            (Some(sol), None) => {
                let mut ok = true;
                for (v, s) in sol.iter().enumerate() {
                    match b.substitute_fixed(s) {
                        Some(c) => b.coeffs[v].push(c),
                        None => {
                            ok = false;
                            b.coeffs[v].push(s.clone());
                        }
                    }
                }
                if !ok && b.status == BranchStatus::Complete {
                    b.status = BranchStatus::Unresolved {
                        step: j as u32,
                        reason: "parameter value outside this branch's field".to_string(),
                    };
                }
                b.apply_values(&born);
            }
            (_, failure) => {
                if b.status == BranchStatus::Complete {
                    b.status = BranchStatus::Unresolved {
                        step: j as u32,
                        reason: failure
                            .clone()
                            .unwrap_or_else(|| "step solve failed".to_string()),
                    };
                }
            }
        }
        out.push(b);
    }
    out
}

fn store_step(mut exp: Expansion, el: Eliminated, j: i64) -> Vec<Expansion> {
    match (el.solution, el.failure) {
        (Some(sol), None) => {
            for (v, s) in sol.into_iter().enumerate() {
                exp.coeffs[v].push(s);
            }
        }
        (_, failure) => {
            exp.status = BranchStatus::Unresolved {
                step: j as u32,
                reason: failure.unwrap_or_else(|| "step solve failed".to_string()),
            };
        }
    }
    vec![exp]
}

fn reduce_modulo_earlier(c: &MPoly, earlier: &[ConstraintRecord]) -> bool {
    if c.is_zero() {
        return false;
    }
    earlier
        .iter()
        .filter(|rec| !rec.constraint.is_zero())
        .any(|rec| c.div_exact(&rec.constraint).is_some())
}

/// The raw step system and constraint set at a resonance step.
///
/// Runs a deferred expansion to `step - 1` (earlier degenerate steps register
/// parameters and log constraints without branching), then reports `Q(step)`,
/// `R_step`, the eliminated constraints (reduced modulo earlier deferred
/// ones) and the free unknowns. Errors when `det Q(step)` is nonzero.
pub fn compatibility_system(
    system: &PolyODESystem,
    candidate: &BalanceCandidate,
    step: u32,
) -> Result<CompatibilityReport, SeriesError> {
    if step == 0 {
        return Err(SeriesError::ZeroOrder);
    }
    let root = Expansion::new(system, candidate, ExpandMode::Symbolic, BTreeMap::new(), true)?;
    let mut wave = if step > 1 {
        run_expansion(root, step - 1)
    } else {
        vec![root]
    };
    let mut exp = wave.pop().expect("deferred expansion never branches");
    if let BranchStatus::Unresolved { step: s, .. } = &exp.status {
        return Err(SeriesError::NotResonant(*s));
    }

    let j = step as i64;
    let n = exp.p.len();
    let matrix = exp.step_matrix(j);
    let rhs: Vec<MPoly> = (0..n).map(|i| exp.rhs_at(i, j)).collect();
    let det = {
        let rm: Vec<Vec<RMPoly>> = matrix
            .iter()
            .map(|row| row.iter().map(|e| RMPoly::constant(e.clone())).collect())
            .collect();
        det_matrix(&rm)
    };
    if !det.is_zero() {
        return Err(SeriesError::NotResonant(step));
    }

    // name this step's unknowns like the parameters they would become
    let mut names: Vec<(usize, String)> =
        exp.registry.iter().map(|p| (p.id, p.name.clone())).collect();
    let mut unknown_ids = Vec::with_capacity(n);
    for v in 0..n {
        let id = exp.next_id;
        exp.next_id += 1;
        names.push((id, format!("c{}{}", exp.vars[v], exp.p[v] + j)));
        unknown_ids.push(id);
    }
    let rows: Vec<MPoly> = (0..n)
        .map(|i| {
            let mut acc = rhs[i].clone();
            for v in 0..n {
                acc = acc.add(&matrix[i][v].mul(&MPoly::var(unknown_ids[v])));
            }
            acc
        })
        .collect();

    let probe = eliminate(&matrix, &rhs, &vec![MPoly::zero(); n]);
    let free_unknowns: Vec<String> = probe
        .free_cols
        .iter()
        .map(|v| format!("c{}{}", exp.vars[*v], exp.p[*v] + j))
        .collect();
    let mut constraints = Vec::new();
    for c in &probe.constraints {
        let c = strip_leading_content(c, n);
        if c.is_zero() || reduce_modulo_earlier(&c, &exp.constraints) {
            continue;
        }
        if !constraints.contains(&c) {
            constraints.push(c);
        }
    }

    Ok(CompatibilityReport {
        step,
        rows,
        step_system: StepSystem { step, matrix, rhs },
        constraints,
        free_unknowns,
        names,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balance::find_balances_default;
    use num_rational::BigRational;

    fn hh7() -> PolyODESystem {
        PolyODESystem::henon_heiles_squared(QuadExt::ratio(1, 9), QuadExt::ratio(-16, 5))
    }

    fn case2_candidate(sys: &PolyODESystem) -> BalanceCandidate {
        find_balances_default(sys)
            .unwrap()
            .into_iter()
            .find(|c| {
                c.is_resolved() && c.exponents[0] == BigRational::from_integer((-3).into())
            })
            .expect("case-2 balance")
    }

    fn q(s: &str) -> QuadExt {
        s.parse().unwrap()
    }

    #[test]
    fn weierstrass_expansion_has_one_free_parameter() {
        let sys = PolyODESystem::parse("vars u; u'' = 6*u^2;").unwrap();
        let cands = find_balances_default(&sys).unwrap();
        let cand = cands.iter().find(|c| c.is_resolved()).unwrap();
        let sols = expand(&sys, cand, 6, ExpandMode::Symbolic, &BTreeMap::new()).unwrap();
        assert_eq!(sols.len(), 1);
        let sol = &sols[0];
        assert_eq!(sol.status, BranchStatus::Complete);
        // all coefficients vanish except u_0 = 1 and the free parameter at r=6
        for j in 1..=5 {
            assert!(sol.coefficient("u", -2 + j).unwrap().is_zero(), "j={j}");
        }
        let free = sol.free_parameters();
        assert_eq!(free.len(), 1);
        assert_eq!(free[0].name, "cu4");
        assert_eq!(free[0].step, 6);
        assert_eq!(sol.coefficient("u", 4).unwrap(), &MPoly::var(free[0].id));
    }

    #[test]
    fn branch_structure_at_lambda_one_ninth() {
        let sys = hh7();
        let cand = case2_candidate(&sys);
        let sols = expand(&sys, &cand, 7, ExpandMode::Symbolic, &BTreeMap::new()).unwrap();
        // four branches: a1 = ±25sqrt2/16, a1 = ±25/2992 sqrt(-4862)
        assert_eq!(sols.len(), 4);
        assert!(sols.iter().all(|s| s.status == BranchStatus::Complete));
        assert_eq!(sols[0].branch_id, "a1=25/16*sqrt(2)");
        assert_eq!(sols[1].branch_id, "a1=-25/16*sqrt(2)");
        assert_eq!(sols[2].branch_id, "a1=25/2992*sqrt(-4862)");
        assert_eq!(sols[3].branch_id, "a1=-25/2992*sqrt(-4862)");
        // three-parameter family: t0 (implicit) + cz1 + cy4
        for s in &sols {
            let free = s.free_parameters();
            let names: Vec<&str> = free.iter().map(|p| p.name.as_str()).collect();
            assert_eq!(names, vec!["cz1", "cy4"]);
            assert_eq!(free[0].step, 4);
            assert_eq!(free[1].step, 6);
        }
    }

    #[test]
    fn printed_series_coefficients_branch_plus() {
        let sys = hh7();
        let cand = case2_candidate(&sys);
        let sols = expand(&sys, &cand, 7, ExpandMode::Symbolic, &BTreeMap::new()).unwrap();
        let s = &sols[0];
        let cz1 = s.free_parameters()[0].id;
        let cy4 = s.free_parameters()[1].id;

        // z-series: 25sqrt2/16 t^-3 + 125/192 t^-2 + 25sqrt2/768 t^-1 + 1625/82944
        //           + cz1 t + (21845/47775744 - sqrt2/6 cz1) t^2 + ...
        let checks_z: Vec<(i64, MPoly)> = vec![
            (-3, MPoly::constant(q("25/16*sqrt(2)"))),
            (-2, MPoly::constant(q("125/192"))),
            (-1, MPoly::constant(q("25/768*sqrt(2)"))),
            (0, MPoly::constant(q("1625/82944"))),
            (1, MPoly::var(cz1)),
            (
                2,
                MPoly::constant(q("21845/47775744"))
                    .add(&MPoly::var(cz1).scale(&q("-1/6*sqrt(2)"))),
            ),
            (
                3,
                MPoly::constant(q("437425/9172942848*sqrt(2)"))
                    .add(&MPoly::var(cy4).scale(&q("-25/48*sqrt(2)")))
                    .add(&MPoly::var(cz1).scale(&q("-191/3456"))),
            ),
        ];
        for (power, expect) in checks_z {
            assert_eq!(
                s.coefficient("z", power).unwrap(),
                &expect,
                "z coefficient at t^{power}"
            );
        }

        // y-series: -15/8 t^-2 + 5sqrt2/32 t^-1 - 205/2304 + 115sqrt2/13824 t
        //           - 1819/663552 t^2 + (1673sqrt2/11943936 + cz1/6) t^3 + cy4 t^4
        //           + (1044461sqrt2/220150628352 - 19/9216 cz1 - 23sqrt2/384 cy4) t^5
        let checks_y: Vec<(i64, MPoly)> = vec![
            (-2, MPoly::constant(q("-15/8"))),
            (-1, MPoly::constant(q("5/32*sqrt(2)"))),
            (0, MPoly::constant(q("-205/2304"))),
            (1, MPoly::constant(q("115/13824*sqrt(2)"))),
            (2, MPoly::constant(q("-1819/663552"))),
            (
                3,
                MPoly::constant(q("1673/11943936*sqrt(2)"))
                    .add(&MPoly::var(cz1).scale(&q("1/6"))),
            ),
            (4, MPoly::var(cy4)),
            (
                5,
                MPoly::constant(q("1044461/220150628352*sqrt(2)"))
                    .add(&MPoly::var(cz1).scale(&q("-19/9216")))
                    .add(&MPoly::var(cy4).scale(&q("-23/384*sqrt(2)"))),
            ),
        ];
        for (power, expect) in checks_y {
            assert_eq!(
                s.coefficient("y", power).unwrap(),
                &expect,
                "y coefficient at t^{power}"
            );
        }
    }

    #[test]
    fn mirror_branch_symmetry() {
        // branch 1 equals branch 0 under t -> -t: cz_j flips for even j,
        // cy_j flips for odd j (sqrt2-bearing coefficients flip, rational stay)
        let sys = hh7();
        let cand = case2_candidate(&sys);
        let sols = expand(&sys, &cand, 5, ExpandMode::Symbolic, &BTreeMap::new()).unwrap();
        let (plus, minus) = (&sols[0], &sols[1]);
        for j in 0..=5i64 {
            let zp = plus.coefficient("z", -3 + j).unwrap();
            let zm = minus.coefficient("z", -3 + j).unwrap();
            let yp = plus.coefficient("y", -2 + j).unwrap();
            let ym = minus.coefficient("y", -2 + j).unwrap();
            // parameter-free coefficients only (params have their own flip)
            if zp.is_constant() && zm.is_constant() {
                if j % 2 == 0 {
                    assert_eq!(zm.as_constant().unwrap(), -zp.as_constant().unwrap());
                } else {
                    assert_eq!(zm, zp);
                }
            }
            if yp.is_constant() && ym.is_constant() {
                if j % 2 == 1 {
                    assert_eq!(ym.as_constant().unwrap(), -yp.as_constant().unwrap());
                } else {
                    assert_eq!(ym, yp);
                }
            }
        }
    }

    #[test]
    fn complex_branch_cy2() {
        let sys = hh7();
        let cand = case2_candidate(&sys);
        let sols = expand(&sys, &cand, 4, ExpandMode::Symbolic, &BTreeMap::new()).unwrap();
        // branches 2 and 3: a1^2 = -8125/23936, cy2 = -8700683/1364926464
        for s in &sols[2..4] {
            let a1 = s
                .all_parameters()
                .iter()
                .find(|p| p.name == "a1")
                .unwrap();
            let ParamState::Fixed(v) = &a1.state else { panic!("a1 fixed") };
            assert_eq!(v.pow(2), QuadExt::ratio(-8125, 23936));
            assert_eq!(
                s.coefficient("y", 2).unwrap(),
                &MPoly::constant(QuadExt::ratio(-8700683, 1364926464))
            );
        }
    }

    #[test]
    fn evaluated_mode_matches_symbolic_substitution() {
        let sys = hh7();
        let cand = case2_candidate(&sys);
        let mut params = BTreeMap::new();
        params.insert("cz1".to_string(), q("3205/3981312*sqrt(2)"));
        params.insert("cy4".to_string(), q("-858455/12039487488"));
        let eval = expand(&sys, &cand, 20, ExpandMode::Evaluated, &params).unwrap();
        let symb = expand(&sys, &cand, 20, ExpandMode::Symbolic, &BTreeMap::new()).unwrap();
        let se = &symb[0];
        let expected = se.evaluate_coefficients(&params, 17).unwrap();
        let got = eval[0].evaluate_coefficients(&BTreeMap::new(), 17).unwrap();
        assert_eq!(expected, got);
        assert!(got.len() > 30);
    }

    #[test]
    fn compatibility_rows_reproduce_paper_system() {
        // step 4 rows, scaled, are exactly the lambda = 1/9 instance of the
        // printed compatibility system in a1 and cy2 (cz1 absent)
        let sys = hh7();
        let cand = case2_candidate(&sys);
        let rep = compatibility_system(&sys, &cand, 4).unwrap();
        assert_eq!(rep.rows.len(), 2);
        assert_eq!(rep.free_unknowns, vec!["cz1".to_string()]);
        let a1 = rep.id_of("a1").unwrap();
        let cy2 = rep.id_of("cy2").unwrap();
        let cz1 = rep.id_of("cz1").unwrap();
        for row in &rep.rows {
            assert_eq!(row.degree_in(cz1), 0, "cz1 must not appear");
        }
        // paper system at lambda = 1/9:
        //   557056 a^6 - 3132000 a^4 + (864000000 cy2 + 13140625/3) a^2 = 0
        //   818176 a^4 - 3153750 a^2 - 810000000 cy2 - 6328125 = 0
        let a = |e: u32| MPoly::var(a1).pow(e);
        let eq1 = a(6)
            .scale(&QuadExt::from_int(557056))
            .add(&a(4).scale(&QuadExt::from_int(-3132000)))
            .add(
                &a(2).mul(
                    &MPoly::var(cy2)
                        .scale(&QuadExt::from_int(864000000))
                        .add(&MPoly::constant(QuadExt::ratio(13140625, 3))),
                ),
            );
        let eq2 = a(4)
            .scale(&QuadExt::from_int(818176))
            .add(&a(2).scale(&QuadExt::from_int(-3153750)))
            .add(&MPoly::var(cy2).scale(&QuadExt::from_int(-810000000)))
            .add(&MPoly::constant(QuadExt::from_int(-6328125)));
        // find per-row scale factors against the two expected equations
        let matches = |row: &MPoly, target: &MPoly| -> bool {
            // row * k == target for a rational k
            if row.is_zero() || target.is_zero() {
                return false;
            }
            let (m, c) = row.leading_term().unwrap();
            let (tm, tc) = target.leading_term().unwrap();
            if m != tm {
                return false;
            }
            let k = tc / c;
            row.scale(&k) == *target
        };
        assert!(
            rep.rows.iter().any(|r| matches(r, &eq1)),
            "first paper row missing"
        );
        assert!(
            rep.rows.iter().any(|r| matches(r, &eq2)),
            "second paper row missing"
        );
        // constraint solutions: a1 = ±25sqrt2/16 with cy2 = -1819/663552,
        // a1^2 = -8125/23936 with cy2 = -8700683/1364926464
        assert_eq!(rep.constraints.len(), 1);
    }

    #[test]
    fn compatibility_step6_is_one_linear_equation() {
        let sys = hh7();
        let cand = case2_candidate(&sys);
        let rep = compatibility_system(&sys, &cand, 6).unwrap();
        // second row reduces to a multiple of the deferred step-4 constraint
        assert!(rep.constraints.is_empty());
        assert_eq!(rep.free_unknowns, vec!["cy4".to_string()]);
    }

    #[test]
    fn compatibility_guard_on_nonresonant_step() {
        let sys = hh7();
        let cand = case2_candidate(&sys);
        assert!(matches!(
            compatibility_system(&sys, &cand, 2),
            Err(SeriesError::NotResonant(2))
        ));
    }

    #[test]
    fn coefficient_out_of_range() {
        let sys = hh7();
        let cand = case2_candidate(&sys);
        let sols = expand(&sys, &cand, 4, ExpandMode::Symbolic, &BTreeMap::new()).unwrap();
        assert!(matches!(
            sols[0].coefficient("z", 100),
            Err(SeriesError::OutOfRange(100))
        ));
        assert!(matches!(
            sols[0].coefficient("w", 0),
            Err(SeriesError::UnknownVariable(_))
        ));
    }

    #[test]
    fn fractional_candidate_rejected() {
        let sys = PolyODESystem::henon_heiles(QuadExt::ratio(1, 9), QuadExt::ratio(-16, 5));
        let cands = find_balances_default(&sys).unwrap();
        let half = cands
            .iter()
            .find(|c| c.is_resolved() && !c.integer_exponents())
            .expect("alpha = -3/2 candidate");
        assert!(matches!(
            expand(&sys, half, 5, ExpandMode::Symbolic, &BTreeMap::new()),
            Err(SeriesError::FractionalExponents)
        ));
    }

    #[test]
    fn unknown_parameter_rejected() {
        let sys = hh7();
        let cand = case2_candidate(&sys);
        let mut params = BTreeMap::new();
        params.insert("nope".to_string(), QuadExt::zero());
        assert!(matches!(
            expand(&sys, &cand, 5, ExpandMode::Evaluated, &params),
            Err(SeriesError::UnknownParameter(_))
        ));
    }

    #[test]
    fn integrable_case_compatibility_passes() {
        // (lambda, C) = (1, -1), Case 1: resonances {2, 3, 6}, all free
        let sys = PolyODESystem::henon_heiles(QuadExt::from_int(1), QuadExt::from_int(-1));
        let cands = find_balances_default(&sys).unwrap();
        let cand = cands
            .iter()
            .find(|c| {
                c.is_resolved()
                    && c.coefficients[0] == LeadingCoeff::Value(QuadExt::from_int(3))
            })
            .unwrap();
        let sols = expand(&sys, cand, 6, ExpandMode::Symbolic, &BTreeMap::new()).unwrap();
        assert_eq!(sols.len(), 1);
        let s = &sols[0];
        assert_eq!(s.status, BranchStatus::Complete);
        let steps: Vec<u32> = s.free_parameters().iter().map(|p| p.step).collect();
        assert_eq!(steps, vec![2, 3, 6]);
    }

    #[test]
    fn gaussian_leading_coefficient_branch() {
        // (lambda, C) = (1, -6) Case 1: a1 = ±6i, expansion over Q(sqrt(-1))
        let sys = PolyODESystem::henon_heiles(QuadExt::from_int(1), QuadExt::from_int(-6));
        let cands = find_balances_default(&sys).unwrap();
        let cand = cands
            .iter()
            .find(|c| {
                c.is_resolved()
                    && c.exponents[0] == BigRational::from_integer((-2).into())
                    && c.coefficients[0]
                        .value()
                        .is_some_and(|v| v == &QuadExt::radical(6, 1, -1))
            })
            .expect("a1 = 6i candidate");
        let sols = expand(&sys, cand, 8, ExpandMode::Symbolic, &BTreeMap::new()).unwrap();
        assert_eq!(sols.len(), 1);
        assert_eq!(sols[0].status, BranchStatus::Complete);
        let steps: Vec<u32> = sols[0].free_parameters().iter().map(|p| p.step).collect();
        assert_eq!(steps, vec![6, 8]);
    }
}
