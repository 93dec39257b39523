//! Counting points of the parameter varieties `V(Q, E, q)` as polynomials in `q`.
//!
//! The solver handles the shapes of system the engine produces: products of
//! nonzero parameters, equations linear in some variable with a unit
//! coefficient, and affine relations between free parameters. Anything else is
//! reported as unresolved rather than guessed.

use std::cell::{Cell, RefCell};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use dashmap::DashSet;
use num_bigint::BigInt;
use num_integer_like::gcd_abs;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::algdata::{Param, ParameterSystem, DEFAULT_ENUMERATION_CAP};
use crate::field::Field;
use crate::polyring::{CountPoly, Monomial, ParamPoly, TMode};

/// A count that may differ in finitely many characteristics.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharCount {
    /// Valid in every characteristic not listed in `special`.
    pub generic: CountPoly,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub special: BTreeMap<u64, CountPoly>,
}

impl CharCount {
    pub fn uniform(poly: CountPoly) -> Self {
        CharCount {
            generic: poly,
            special: BTreeMap::new(),
        }
    }

    pub fn at_characteristic(&self, p: u64) -> &CountPoly {
        self.special.get(&p).unwrap_or(&self.generic)
    }

    pub fn is_uniform(&self) -> bool {
        self.special.is_empty()
    }
}

/// Outcome of [`count_solutions`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CountResult {
    /// `|V(Q, E, q)|` as a polynomial in `q` (no `t` terms).
    Counted(CountPoly),
    /// The count is a polynomial in `q` within each characteristic, but not
    /// the same one for all.
    ByCharacteristic(CharCount),
    /// The system resisted the solver; carries `(Q, E)` verbatim.
    Unresolved(ParameterSystem),
}

impl CountResult {
    pub fn counted(&self) -> Option<&CountPoly> {
        match self {
            CountResult::Counted(p) => Some(p),
            _ => None,
        }
    }

    pub fn char_count(&self) -> Option<CharCount> {
        match self {
            CountResult::Counted(p) => Some(CharCount::uniform(p.clone())),
            CountResult::ByCharacteristic(c) => Some(c.clone()),
            CountResult::Unresolved(_) => None,
        }
    }
}

#[derive(Clone, Debug)]
struct Sys {
    vars: BTreeSet<Param>,
    nonzero: BTreeSet<Param>,
    eqs: Vec<ParamPoly>,
}

impl Sys {
    fn from_system(s: &ParameterSystem) -> Self {
        Sys {
            vars: s.params().into_iter().collect(),
            nonzero: s.nonzero().clone(),
            eqs: s.equations().to_vec(),
        }
    }

    fn to_system(&self, like: &ParameterSystem) -> ParameterSystem {
        let params = like
            .params_map()
            .iter()
            .filter(|(p, _)| self.vars.contains(p))
            .map(|(p, n)| (*p, n.clone()))
            .collect();
        ParameterSystem::from_parts(params, self.nonzero.clone(), self.eqs.clone())
    }

    fn is_nz(&self, p: Param) -> bool {
        self.nonzero.contains(&p)
    }

    fn set_zero(&self, a: Param) -> Sys {
        let mut out = self.clone();
        out.vars.remove(&a);
        out.nonzero.remove(&a);
        out.eqs = self.eqs.iter().map(|e| e.set_zero(a)).collect();
        out
    }
}

/// Why simplification stopped.
enum Simplified {
    Contradiction,
    CharDependent,
    Ok(Sys),
}

fn monomial_from_exponents(exps: &[(Param, u32)]) -> Monomial {
    Monomial::product(
        exps.iter()
            .flat_map(|&(p, e)| std::iter::repeat_n(p, e as usize)),
    )
}

/// Divides `e` by the largest monomial in nonzero variables dividing every
/// term, and by the sign of its leading term.
fn strip_unit_factors(e: &ParamPoly, nonzero: &BTreeSet<Param>) -> ParamPoly {
    let mut common: Option<Vec<(Param, u32)>> = None;
    for (m, _) in e.terms() {
        let here: Vec<(Param, u32)> = m
            .factors()
            .iter()
            .copied()
            .filter(|(p, _)| nonzero.contains(p))
            .collect();
        common = Some(match common {
            None => here,
            Some(c) => c
                .into_iter()
                .filter_map(|(p, ce)| {
                    let d = m.degree_in(p);
                    (d > 0).then_some((p, ce.min(d)))
                })
                .collect(),
        });
    }
    let common = common.unwrap_or_default();
    if common.is_empty() {
        return e.normalized_sign();
    }
    let mut out = ParamPoly::zero();
    for (m, c) in e.terms() {
        let rest: Vec<(Param, u32)> = m
            .factors()
            .iter()
            .map(|&(p, ex)| {
                let sub = common.iter().find(|(q, _)| *q == p).map_or(0, |&(_, k)| k);
                (p, ex - sub)
            })
            .filter(|&(_, ex)| ex > 0)
            .collect();
        out.add_term(monomial_from_exponents(&rest), c.clone());
    }
    out.normalized_sign()
}

fn content(e: &ParamPoly) -> BigInt {
    e.terms().fold(BigInt::zero(), |g, (_, c)| gcd_abs(&g, c))
}

/// Normalises equations and substitutes variables forced to zero by a
/// single-variable monomial equation.
fn simplify(mut s: Sys, ctx: &Ctx) -> Simplified {
    loop {
        let mut eqs: Vec<ParamPoly> = Vec::with_capacity(s.eqs.len());
        let mut forced = None;
        for e in &s.eqs {
            let e = ctx.reduce(e);
            if e.is_zero() {
                continue;
            }
            let mut e = strip_unit_factors(&e, &s.nonzero);
            if let Some(c) = e.as_constant() {
                return if ctx.is_unit(&c) {
                    Simplified::Contradiction
                } else {
                    Simplified::CharDependent
                };
            }
            let g = content(&e);
            if !g.is_one() {
                if !ctx.is_unit(&g) {
                    return Simplified::CharDependent;
                }
                let mut divided = ParamPoly::zero();
                for (m, c) in e.terms() {
                    divided.add_term(m.clone(), c / &g);
                }
                e = divided;
            }
            if let Some((m, _)) = e.as_monomial() {
                // unit * product of possibly-zero variables
                if m.factors().len() == 1 && forced.is_none() {
                    forced = Some(m.factors()[0].0);
                }
            }
            eqs.push(e);
        }
        eqs.sort();
        eqs.dedup();
        s.eqs = eqs;
        match forced {
            Some(a) => s = s.set_zero(a),
            None => return Simplified::Ok(s),
        }
    }
}

/// A variable `x` with `e = m x + r`, `m = +-(product of nonzero variables)`
/// and `x` not in `m` or `r`.
struct Linear {
    eq_index: usize,
    x: Param,
    m: ParamPoly,
    r: ParamPoly,
}

/// All unit-coefficient linear occurrences, best first: free `x` before
/// nonzero `x`, then short equations, then rarely used variables.
fn linear_candidates(s: &Sys, ctx: &Ctx) -> Vec<Linear> {
    let mut found = Vec::new();
    for (i, e) in s.eqs.iter().enumerate() {
        for x in e.vars() {
            if e.degree_in(x) != 1 {
                continue;
            }
            let coeffs = e.coefficients_in(x);
            let m = &coeffs[1];
            let Some((mono, c)) = m.as_monomial() else {
                continue;
            };
            if !ctx.is_unit(c) || !mono.vars().all(|p| s.is_nz(p)) {
                continue;
            }
            let occurrences = s.eqs.iter().filter(|f| f.contains(x)).count();
            let rank = (s.is_nz(x), e.num_terms(), occurrences, i, x);
            found.push((
                rank,
                Linear {
                    eq_index: i,
                    x,
                    m: m.clone(),
                    r: coeffs[0].clone(),
                },
            ));
        }
    }
    found.sort_by_key(|a| a.0);
    found.into_iter().map(|(_, l)| l).collect()
}

/// Substitutes `x = -r/m` into `f`, clearing the unit denominator: returns
/// `m^d f(-r/m)` with `d = deg_x f`.
fn substitute_linear(f: &ParamPoly, x: Param, m: &ParamPoly, r: &ParamPoly) -> ParamPoly {
    let d = f.degree_in(x);
    if d == 0 {
        return f.clone();
    }
    let coeffs = f.coefficients_in(x);
    let neg_r = -r;
    let mut out = ParamPoly::zero();
    let mut r_pow = ParamPoly::constant(1);
    for (j, c) in coeffs.iter().enumerate() {
        if !c.is_zero() {
            let mut m_pow = ParamPoly::constant(1);
            for _ in 0..(d as usize - j) {
                m_pow = &m_pow * m;
            }
            out = &out + &(&(c * &r_pow) * &m_pow);
        }
        r_pow = &r_pow * &neg_r;
    }
    out
}

/// Removes `x` using equation `l`, returning the systems whose counts give the
/// answer: `Ok(s)` for a single equivalent system, `Err((s, t))` when the
/// count is `|s| - |t|` (inclusion-exclusion on the nonvanishing of `x`).
fn eliminate(s: &Sys, l: &Linear, ctx: &Ctx) -> Option<Result<Sys, (Sys, Sys)>> {
    let mut rest = s.clone();
    rest.eqs.remove(l.eq_index);
    rest.eqs = rest
        .eqs
        .iter()
        .map(|f| substitute_linear(f, l.x, &l.m, &l.r))
        .collect();
    rest.vars.remove(&l.x);
    let x_nonzero = rest.nonzero.remove(&l.x);
    if !x_nonzero {
        return Some(Ok(rest));
    }
    // x = -r/m must be nonzero
    if l.r.is_zero() {
        return None;
    }
    if let Some((mono, c)) = l.r.as_monomial() {
        if ctx.is_unit(c) {
            for p in mono.vars() {
                rest.nonzero.insert(p);
            }
            return Some(Ok(rest));
        }
    }
    let mut vanishing = rest.clone();
    vanishing.eqs.push(l.r.clone());
    Some(Err((rest, vanishing)))
}

/// Equations `m x + r` with `x` absent from `m` and `r`, where `m` is not a
/// constant, best first by the number of terms in `m`.
fn general_linear_candidates(s: &Sys) -> Vec<Linear> {
    let mut found = Vec::new();
    for (i, e) in s.eqs.iter().enumerate() {
        for x in e.vars() {
            if e.degree_in(x) != 1 {
                continue;
            }
            let coeffs = e.coefficients_in(x);
            let m = &coeffs[1];
            if m.as_constant().is_some() {
                continue;
            }
            let rank = (m.num_terms(), e.num_terms(), i, x);
            found.push((
                rank,
                Linear {
                    eq_index: i,
                    x,
                    m: m.clone(),
                    r: coeffs[0].clone(),
                },
            ));
        }
    }
    found.sort_by_key(|a| a.0);
    found.into_iter().map(|(_, l)| l).collect()
}

/// Splits on whether the coefficient `m` of `l` vanishes. Where it does, the
/// equation becomes `m = r = 0`; elsewhere `x = -r/m` and the condition
/// `m != 0` (and `r != 0` for nonzero `x`) is handled by inclusion-exclusion.
fn split_on_coefficient(s: &Sys, l: &Linear, budget: u32, ctx: &Ctx) -> Option<CountPoly> {
    let mut degenerate = s.clone();
    degenerate.eqs.remove(l.eq_index);
    degenerate.eqs.push(l.m.clone());
    degenerate.eqs.push(l.r.clone());
    let mut total = count_rec(degenerate, budget, ctx)?;

    let mut rest = s.clone();
    rest.eqs.remove(l.eq_index);
    rest.eqs = rest
        .eqs
        .iter()
        .map(|f| substitute_linear(f, l.x, &l.m, &l.r))
        .collect();
    rest.vars.remove(&l.x);
    let x_nonzero = rest.nonzero.remove(&l.x);
    let with = |extra: &[&ParamPoly]| {
        let mut t = rest.clone();
        t.eqs.extend(extra.iter().map(|&e| e.clone()));
        t
    };
    total = &total + &count_rec(rest.clone(), budget, ctx)?;
    total = &total - &count_rec(with(&[&l.m]), budget, ctx)?;
    if x_nonzero {
        total = &total - &count_rec(with(&[&l.r]), budget, ctx)?;
        total = &total + &count_rec(with(&[&l.m, &l.r]), budget, ctx)?;
    }
    Some(total)
}

/// Bound on nested coefficient splits along one branch.
const SPLIT_BUDGET: u32 = 12;

/// Alternatives tried at each node when a choice leads to a system the solver
/// cannot count (typically a constant like `2a` that only vanishes in one
/// characteristic, although the full count does not depend on it).
const MAX_ALTERNATIVES: usize = 4;

/// Bound on recursive calls for one top-level count.
const WORK_LIMIT: u64 = 500_000;

/// Solver state for one count: the arithmetic being assumed and a work meter.
///
/// With `modulus: None` every nonzero integer constant is treated as a unit
/// and the primes involved are recorded; the count is then valid in every
/// characteristic outside that set. With `Some(p)` coefficients are reduced
/// mod `p` and the count is exact in characteristic `p`.
struct Ctx {
    modulus: Option<u64>,
    strict: bool,
    work: Cell<u64>,
    primes: RefCell<BTreeSet<u64>>,
    memo: RefCell<HashMap<SysKey, Option<CountPoly>>>,
}

type SysKey = (Vec<Param>, Vec<Param>, Vec<ParamPoly>);

impl Ctx {
    fn new(modulus: Option<u64>) -> Self {
        Ctx {
            modulus,
            strict: false,
            work: Cell::new(0),
            primes: RefCell::new(BTreeSet::new()),
            memo: RefCell::new(HashMap::new()),
        }
    }

    /// Only `+-1` count as units; no assumption on the characteristic.
    fn strict() -> Self {
        Ctx {
            strict: true,
            ..Ctx::new(None)
        }
    }

    fn tick(&self) -> bool {
        let n = self.work.get() + 1;
        self.work.set(n);
        n <= WORK_LIMIT
    }

    fn is_unit(&self, c: &BigInt) -> bool {
        if self.strict {
            return c.abs().is_one();
        }
        match self.modulus {
            Some(p) => !(c % BigInt::from(p)).is_zero(),
            None => {
                if c.is_zero() {
                    return false;
                }
                let mut primes = self.primes.borrow_mut();
                for f in prime_factors(c) {
                    primes.insert(f);
                }
                true
            }
        }
    }

    /// Coefficients reduced to `(-p/2, p/2]` in characteristic `p`.
    fn reduce(&self, e: &ParamPoly) -> ParamPoly {
        let Some(p) = self.modulus else {
            return e.clone();
        };
        let p = BigInt::from(p);
        let half = &p / 2;
        let mut out = ParamPoly::zero();
        for (m, c) in e.terms() {
            let mut r = ((c % &p) + &p) % &p;
            if r > half {
                r -= &p;
            }
            if !r.is_zero() {
                out.add_term(m.clone(), r);
            }
        }
        out
    }
}

fn prime_factors(c: &BigInt) -> Vec<u64> {
    let mut n: u64 = match c.abs().try_into() {
        Ok(n) => n,
        // too large to factor cheaply: such constants never occur in practice
        Err(_) => return vec![u64::MAX],
    };
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn count_eliminated(core: &Sys, l: &Linear, budget: u32, ctx: &Ctx) -> Option<CountPoly> {
    match eliminate(core, l, ctx) {
        None => Some(CountPoly::zero()),
        Some(Ok(next)) => count_rec(next, budget, ctx),
        Some(Err((all, vanishing))) => {
            Some(&count_rec(all, budget, ctx)? - &count_rec(vanishing, budget, ctx)?)
        }
    }
}

fn count_case_split(core: &Sys, a: Param, budget: u32, ctx: &Ctx) -> Option<CountPoly> {
    let zero = core.set_zero(a);
    let mut nonzero = core.clone();
    nonzero.nonzero.insert(a);
    Some(&count_rec(zero, budget, ctx)? + &count_rec(nonzero, budget, ctx)?)
}

fn count_rec(s: Sys, budget: u32, ctx: &Ctx) -> Option<CountPoly> {
    if !ctx.tick() {
        return None;
    }
    let s = match simplify(s, ctx) {
        Simplified::Contradiction => return Some(CountPoly::zero()),
        Simplified::CharDependent => return None,
        Simplified::Ok(s) => s,
    };
    let mut used = BTreeSet::new();
    for e in &s.eqs {
        used.extend(e.vars());
    }
    let mut free = 0u32;
    let mut units = 0u32;
    for &p in &s.vars {
        if !used.contains(&p) {
            if s.is_nz(p) {
                units += 1;
            } else {
                free += 1;
            }
        }
    }
    let factor = &CountPoly::q_pow(free) * &CountPoly::q_minus_one_pow(units);
    if s.eqs.is_empty() {
        return Some(factor);
    }
    let core = Sys {
        vars: used.clone(),
        nonzero: s.nonzero.intersection(&used).copied().collect(),
        eqs: s.eqs,
    };
    let key = (
        core.vars.iter().copied().collect(),
        core.nonzero.iter().copied().collect(),
        core.eqs.clone(),
    );
    if let Some(known) = ctx.memo.borrow().get(&key) {
        return Some(&factor * known.as_ref()?);
    }
    let inner = count_core(&core, budget, ctx);
    ctx.memo.borrow_mut().insert(key, inner.clone());
    Some(&factor * &inner?)
}

fn count_core(core: &Sys, budget: u32, ctx: &Ctx) -> Option<CountPoly> {
    let linear = linear_candidates(core, ctx);
    if !linear.is_empty() {
        linear
            .iter()
            .take(MAX_ALTERNATIVES)
            .find_map(|l| count_eliminated(core, l, budget, ctx))
    } else {
        let splits: Vec<Param> = core
            .vars
            .iter()
            .copied()
            .filter(|p| !core.is_nz(*p))
            .collect();
        if !splits.is_empty() {
            splits
                .iter()
                .take(MAX_ALTERNATIVES)
                .find_map(|&a| count_case_split(core, a, budget, ctx))
        } else if budget > 0 {
            general_linear_candidates(core)
                .iter()
                .take(MAX_ALTERNATIVES)
                .find_map(|l| split_on_coefficient(core, l, budget - 1, ctx))
        } else {
            None
        }
    }
}

/// Counts generically, then once in each characteristic whose primes the
/// generic count had to assume invertible.
fn count_all_characteristics(system: &ParameterSystem) -> Option<CharCount> {
    let generic = Ctx::new(None);
    let poly = count_rec(Sys::from_system(system), SPLIT_BUDGET, &generic)?;
    let mut special = BTreeMap::new();
    for prime in generic.primes.into_inner() {
        if prime == u64::MAX {
            return None;
        }
        let here = count_rec(
            Sys::from_system(system),
            SPLIT_BUDGET,
            &Ctx::new(Some(prime)),
        )?;
        if here != poly {
            special.insert(prime, here);
        }
    }
    Some(CharCount {
        generic: poly,
        special,
    })
}

/// `|V(Q, E, q)|` as a polynomial in `q` (one per exceptional characteristic
/// if needed), or the system itself if the solver cannot express it.
pub fn count_solutions(system: &ParameterSystem) -> CountResult {
    match count_all_characteristics(system) {
        Some(c) => {
            audit(system, &c);
            if c.special.is_empty() {
                CountResult::Counted(c.generic)
            } else {
                CountResult::ByCharacteristic(c)
            }
        }
        None => CountResult::Unresolved(system.clone()),
    }
}

/// One exact elimination step: removes a variable occurring linearly with a
/// unit coefficient. Returns `None` when no such step preserves the count as a
/// single system.
pub fn eliminate_linear(system: &ParameterSystem) -> Option<ParameterSystem> {
    let s = Sys::from_system(system);
    let ctx = Ctx::strict();
    let l = linear_candidates(&s, &ctx).into_iter().next()?;
    match eliminate(&s, &l, &ctx) {
        Some(Ok(next)) => Some(next.to_system(system)),
        _ => None,
    }
}

// Soundness audit --------------------------------------------------------

static AUDIT_ENABLED: AtomicBool = AtomicBool::new(cfg!(debug_assertions));
static AUDIT_CHECKED: AtomicU64 = AtomicU64::new(0);
static AUDIT_VIOLATIONS: AtomicU64 = AtomicU64::new(0);
static AUDIT_SKIPPED: AtomicU64 = AtomicU64::new(0);

fn audit_seen() -> &'static DashSet<Vec<i64>> {
    static SEEN: std::sync::OnceLock<DashSet<Vec<i64>>> = std::sync::OnceLock::new();
    SEEN.get_or_init(DashSet::new)
}

/// Counters of the enumeration cross-check applied to every counted result.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AuditStats {
    /// Distinct systems compared against enumeration at `q = 2, 3, 4, 5`.
    pub checked: u64,
    pub violations: u64,
    /// Counted systems with too many parameters to enumerate.
    pub skipped: u64,
}

pub fn audit_stats() -> AuditStats {
    AuditStats {
        checked: AUDIT_CHECKED.load(Ordering::Relaxed),
        violations: AUDIT_VIOLATIONS.load(Ordering::Relaxed),
        skipped: AUDIT_SKIPPED.load(Ordering::Relaxed),
    }
}

/// Turns the enumeration cross-check on or off (on by default in debug builds).
pub fn set_audit(enabled: bool) {
    AUDIT_ENABLED.store(enabled, Ordering::Relaxed);
}

pub fn audit_enabled() -> bool {
    AUDIT_ENABLED.load(Ordering::Relaxed)
}

fn system_key(system: &ParameterSystem) -> Vec<i64> {
    let mut data = crate::algdata::AlgebraicData::with_basis(Vec::<String>::new());
    for p in system.params() {
        data.add_param(&system.param_name(p));
    }
    // parameters are numbered identically, so restrictions carry over
    for &p in system.nonzero() {
        data.add_nonzero(p);
    }
    for e in system.equations() {
        data.add_equation(e.clone());
    }
    data.canonical_key()
}

/// Compares a counted polynomial with exhaustive enumeration.
pub fn check_against_enumeration(system: &ParameterSystem, poly: &CountPoly) -> Result<(), String> {
    check_char_count(system, &CharCount::uniform(poly.clone()))
}

/// Like [`check_against_enumeration`], using the polynomial for each field's
/// characteristic.
pub fn check_char_count(system: &ParameterSystem, count: &CharCount) -> Result<(), String> {
    for q in [2u32, 3, 4, 5] {
        let field = Field::new(q).expect("supported field");
        let actual = system
            .count_by_enumeration(&field, DEFAULT_ENUMERATION_CAP)
            .map_err(|e| e.to_string())?;
        let poly = count.at_characteristic(field.characteristic() as u64);
        let predicted = poly.eval(q as i64, TMode::Sum);
        if predicted != BigInt::from(actual) {
            return Err(format!(
                "{system:?}: polynomial {poly} gives {predicted} at q={q}, enumeration gives {actual}"
            ));
        }
    }
    Ok(())
}

fn audit(system: &ParameterSystem, count: &CharCount) {
    if !audit_enabled() {
        return;
    }
    if system.len() > DEFAULT_ENUMERATION_CAP {
        AUDIT_SKIPPED.fetch_add(1, Ordering::Relaxed);
        return;
    }
    if !audit_seen().insert(system_key(system)) {
        return;
    }
    AUDIT_CHECKED.fetch_add(1, Ordering::Relaxed);
    if let Err(msg) = check_char_count(system, count) {
        AUDIT_VIOLATIONS.fetch_add(1, Ordering::Relaxed);
        debug_assert!(false, "solution count mismatch: {msg}");
    }
}

mod num_integer_like {
    use num_bigint::BigInt;
    use num_traits::{Signed, Zero};

    pub fn gcd_abs(a: &BigInt, b: &BigInt) -> BigInt {
        let (mut a, mut b) = (a.abs(), b.abs());
        while !b.is_zero() {
            let r = &a % &b;
            a = b;
            b = r;
        }
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn poly(s: &str) -> CountPoly {
        CountPoly::parse_q(s).unwrap()
    }

    fn v(p: Param) -> ParamPoly {
        ParamPoly::var(p)
    }

    #[test]
    fn spec_examples() {
        let empty = ParameterSystem::new();
        assert_eq!(
            count_solutions(&empty),
            CountResult::Counted(CountPoly::one())
        );

        let mut s = ParameterSystem::new();
        let a = s.add_param("a");
        let _b = s.add_param("b");
        s.add_nonzero(a);
        assert_eq!(count_solutions(&s), CountResult::Counted(poly("q^2 - q")));

        let mut s = ParameterSystem::new();
        let a = s.add_param("a");
        let b = s.add_param("b");
        let c = s.add_param("c");
        s.add_nonzero(a);
        s.add_equation(&(&v(a) * &v(b)) - &v(c));
        let r = count_solutions(&s);
        assert_eq!(r, CountResult::Counted(poly("q^2 - q")));
        check_against_enumeration(&s, r.counted().unwrap()).unwrap();
    }

    #[test]
    fn division_equation_is_eliminated() {
        // c d - p u = 0 with c != 0
        let mut s = ParameterSystem::new();
        let c = s.add_param("c");
        let d = s.add_param("d");
        let p = s.add_param("p");
        let u = s.add_param("u");
        s.add_nonzero(c);
        s.add_nonzero(p);
        s.add_equation(&(&v(c) * &v(d)) - &(&v(p) * &v(u)));
        let e = eliminate_linear(&s).unwrap();
        assert_eq!(e.len(), 3);
        assert!(e.equations().is_empty());
        assert!(!e.params().contains(&d));
        let r = count_solutions(&s);
        check_against_enumeration(&s, r.counted().unwrap()).unwrap();
    }

    #[test]
    fn quadratic_only_makes_no_progress() {
        let mut s = ParameterSystem::new();
        let x = s.add_param("x");
        s.add_equation(&(&v(x) * &v(x)) - &ParamPoly::constant(1));
        assert!(eliminate_linear(&s).is_none());
        // x^2 = 1 has 1 or 2 solutions depending on the characteristic
        assert!(matches!(count_solutions(&s), CountResult::Unresolved(_)));
    }

    #[test]
    fn products_of_binomials_in_nonzero_variables() {
        // (a b + c d)(a b - c e) = 0
        let mut s = ParameterSystem::new();
        let [a, b, c, d, e] = ["a", "b", "c", "d", "e"].map(|n| s.add_param(n));
        for p in [a, b, c, d, e] {
            s.add_nonzero(p);
        }
        let ab = &v(a) * &v(b);
        let f = &(&ab + &(&v(c) * &v(d))) * &(&ab - &(&v(c) * &v(e)));
        s.add_equation(f);
        let r = count_solutions(&s);
        check_against_enumeration(&s, r.counted().expect("factored system")).unwrap();

        // (x - a b)(y + a b) = 0 with x, y free
        let mut s = ParameterSystem::new();
        let [a, b, x, y] = ["a", "b", "x", "y"].map(|n| s.add_param(n));
        s.add_nonzero(a);
        s.add_nonzero(b);
        let ab = &v(a) * &v(b);
        s.add_equation(&(&v(x) - &ab) * &(&v(y) + &ab));
        let r = count_solutions(&s);
        check_against_enumeration(&s, r.counted().expect("factored system")).unwrap();
    }

    #[test]
    fn simple_substitution() {
        let mut s = ParameterSystem::new();
        let x = s.add_param("x");
        let y = s.add_param("y");
        s.add_equation(&v(x) - &v(y));
        let e = eliminate_linear(&s).unwrap();
        assert_eq!(e.len(), 1);
        assert!(e.equations().is_empty());
        assert_eq!(count_solutions(&s), CountResult::Counted(CountPoly::q()));
    }

    #[test]
    fn contradictions_count_zero() {
        let mut s = ParameterSystem::new();
        let a = s.add_param("a");
        let b = s.add_param("b");
        s.add_nonzero(a);
        s.add_nonzero(b);
        s.add_equation(&v(a) * &v(b));
        assert_eq!(count_solutions(&s), CountResult::Counted(CountPoly::zero()));

        let mut s = ParameterSystem::new();
        s.add_equation(ParamPoly::constant(1));
        assert_eq!(count_solutions(&s), CountResult::Counted(CountPoly::zero()));
    }

    #[test]
    fn nonzero_variable_with_binomial_value() {
        // x = a + b with x, a nonzero: inclusion-exclusion
        let mut s = ParameterSystem::new();
        let x = s.add_param("x");
        let a = s.add_param("a");
        let b = s.add_param("b");
        s.add_nonzero(x);
        s.add_nonzero(a);
        s.add_equation(&(&v(x) - &v(a)) - &v(b));
        let r = count_solutions(&s);
        assert_eq!(r, CountResult::Counted(poly("q^2 - 2q + 1")));
        check_against_enumeration(&s, r.counted().unwrap()).unwrap();
    }

    #[test]
    fn case_split_on_product() {
        // x y = 0 over free x, y: 2q - 1 solutions
        let mut s = ParameterSystem::new();
        let x = s.add_param("x");
        let y = s.add_param("y");
        s.add_equation(&v(x) * &v(y));
        assert_eq!(count_solutions(&s), CountResult::Counted(poly("2q - 1")));
    }

    #[test]
    fn characteristic_dependent_constant() {
        let mut s = ParameterSystem::new();
        let x = s.add_param("x");
        s.add_equation(&(&ParamPoly::constant(2) * &v(x)) - &ParamPoly::constant(1));
        let expected = CharCount {
            generic: poly("1"),
            special: [(2, CountPoly::zero())].into(),
        };
        assert_eq!(
            count_solutions(&s),
            CountResult::ByCharacteristic(expected.clone())
        );
        check_char_count(&s, &expected).unwrap();

        // x + y = 0, x - y = 0 over nonzero x, y: only in characteristic 2
        let mut s = ParameterSystem::new();
        let x = s.add_param("x");
        let y = s.add_param("y");
        s.add_nonzero(x);
        s.add_nonzero(y);
        s.add_equation(&v(x) + &v(y));
        s.add_equation(&v(x) - &v(y));
        let r = count_solutions(&s).char_count().unwrap();
        assert_eq!(r.generic, CountPoly::zero());
        assert_eq!(r.at_characteristic(2), &poly("q - 1"));
        check_char_count(&s, &r).unwrap();
    }

    /// Random systems in the shapes the engine produces.
    fn arb_system() -> impl Strategy<Value = ParameterSystem> {
        let term = (
            prop::sample::subsequence((0u32..5).collect::<Vec<_>>(), 0..=3),
            prop_oneof![Just(1i64), Just(-1i64)],
        );
        let eq = prop::collection::vec(term, 1..=3);
        (
            prop::collection::vec(any::<bool>(), 5),
            prop::collection::vec(eq, 0..=3),
        )
            .prop_map(|(nz, eqs)| {
                let mut s = ParameterSystem::new();
                let ps: Vec<Param> = (0..5).map(|i| s.add_param(&format!("a{i}"))).collect();
                for (i, &flag) in nz.iter().enumerate() {
                    if flag {
                        s.add_nonzero(ps[i]);
                    }
                }
                for terms in eqs {
                    let mut e = ParamPoly::zero();
                    for (vars, c) in terms {
                        let m: Vec<Param> = vars.into_iter().map(|i| ps[i as usize]).collect();
                        e = &e + &(&ParamPoly::constant(c) * &ParamPoly::product_of(&m));
                    }
                    s.add_equation(e);
                }
                s
            })
    }

    fn renamed(s: &ParameterSystem, perm: &[u32]) -> ParameterSystem {
        let mut out = ParameterSystem::new();
        let n = s.len();
        let fresh: Vec<Param> = (0..n).map(|i| out.add_param(&format!("b{i}"))).collect();
        let map = |p: Param| fresh[perm[p.0 as usize] as usize];
        for &p in s.nonzero() {
            out.add_nonzero(map(p));
        }
        for e in s.equations() {
            out.add_equation(e.rename(map));
        }
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn counted_results_match_enumeration(s in arb_system()) {
            if let CountResult::Counted(p) = count_solutions(&s) {
                prop_assert!(p.is_t_free());
                check_against_enumeration(&s, &p).map_err(TestCaseError::fail)?;
            }
        }

        #[test]
        fn elimination_order_does_not_change_count(
            s in arb_system(),
            perm in Just((0u32..5).collect::<Vec<_>>()).prop_shuffle(),
        ) {
            let a = count_solutions(&s);
            let b = count_solutions(&renamed(&s, &perm));
            if let (CountResult::Counted(x), CountResult::Counted(y)) = (a, b) {
                prop_assert_eq!(x, y);
            }
        }

        #[test]
        fn eliminate_linear_preserves_count(s in arb_system()) {
            if let Some(e) = eliminate_linear(&s) {
                let f = Field::new(3).unwrap();
                prop_assert_eq!(
                    s.count_by_enumeration(&f, 8).unwrap(),
                    e.count_by_enumeration(&f, 8).unwrap()
                );
            }
        }
    }
}
