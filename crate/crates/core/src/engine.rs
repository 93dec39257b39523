//! The recursive contraction engine.
//!
//! [`Engine::general`] categorises all characters of a family of algebra
//! groups; [`Engine::type_b`] categorises the characters nontrivial on
//! `1 + <z>` for an annihilating basis vector `z`. Both return a
//! [`Categorisation`]: a resolved generating polynomial in `q` and `t` (the
//! coefficient of `q^i t^e` counts characters of degree `q^e`), plus records
//! for whatever could not be resolved.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use dashmap::DashMap;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::algdata::{AlgebraicData, Param, ParameterSystem};
use crate::error::{CoreError, Result};
use crate::polyring::{CountPoly, Monomial, ParamPoly};
use crate::solcount::{count_solutions, CharCount, CountResult};

/// A family of AC-pairs left for later: all characters of the encoded
/// algebras, or only those nontrivial on `1 + <z>`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyRef {
    AllIrr { data: AlgebraicData },
    IrrAtZ { data: AlgebraicData, z: usize },
}

impl FamilyRef {
    pub fn data(&self) -> &AlgebraicData {
        match self {
            FamilyRef::AllIrr { data } | FamilyRef::IrrAtZ { data, .. } => data,
        }
    }
}

/// A family with multiplicity `(q-1)^k q^l` and degree shift `t^m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyRecord {
    pub family: FamilyRef,
    pub k: u32,
    pub l: u32,
    pub m: u32,
}

/// An uncounted leaf: `(q-1)^u q^v |V(Q, E, q)|` characters of degree `q^e`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnresolvedCount {
    pub system: ParameterSystem,
    pub u: u32,
    pub v: u32,
    pub e: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Categorisation {
    pub resolved: CountPoly,
    /// `p -> c`: in characteristic `p` the resolved part is `resolved + c`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub corrections: BTreeMap<u64, CountPoly>,
    pub unresolved_counts: Vec<UnresolvedCount>,
    pub families: Vec<FamilyRecord>,
}

impl Categorisation {
    pub fn resolved(poly: CountPoly) -> Self {
        Self {
            resolved: poly,
            ..Self::default()
        }
    }

    /// A resolved part that may depend on the characteristic.
    pub fn resolved_by_characteristic(count: &CharCount) -> Self {
        let mut out = Self::resolved(count.generic.clone());
        for (&p, c) in &count.special {
            add_correction(&mut out.corrections, p, &(c - &count.generic));
        }
        out
    }

    pub fn family(family: FamilyRef) -> Self {
        Self {
            families: vec![FamilyRecord {
                family,
                k: 0,
                l: 0,
                m: 0,
            }],
            ..Self::default()
        }
    }

    /// Multiplies counts by `(q-1)^k q^l` and degrees by `t^m`.
    pub fn scale(&self, k: u32, l: u32, m: u32) -> Categorisation {
        Categorisation {
            resolved: self.resolved.scale(k, l, m),
            corrections: self
                .corrections
                .iter()
                .map(|(&p, c)| (p, c.scale(k, l, m)))
                .collect(),
            unresolved_counts: self
                .unresolved_counts
                .iter()
                .map(|u| UnresolvedCount {
                    system: u.system.clone(),
                    u: u.u + k,
                    v: u.v + l,
                    e: u.e + m,
                })
                .collect(),
            families: self
                .families
                .iter()
                .map(|f| FamilyRecord {
                    family: f.family.clone(),
                    k: f.k + k,
                    l: f.l + l,
                    m: f.m + m,
                })
                .collect(),
        }
    }

    /// Sums resolved parts and concatenates records.
    pub fn aggregate<'a>(parts: impl IntoIterator<Item = &'a Categorisation>) -> Categorisation {
        let mut out = Categorisation::default();
        for p in parts {
            out.resolved += &p.resolved;
            for (&prime, c) in &p.corrections {
                add_correction(&mut out.corrections, prime, c);
            }
            out.unresolved_counts
                .extend(p.unresolved_counts.iter().cloned());
            out.families.extend(p.families.iter().cloned());
        }
        out
    }

    pub fn is_fully_resolved(&self) -> bool {
        self.unresolved_counts.is_empty() && self.families.is_empty()
    }

    /// The resolved part in characteristic `p`.
    pub fn resolved_at_characteristic(&self, p: u64) -> CountPoly {
        match self.corrections.get(&p) {
            Some(c) => &self.resolved + c,
            None => self.resolved.clone(),
        }
    }
}

fn add_correction(map: &mut BTreeMap<u64, CountPoly>, p: u64, c: &CountPoly) {
    let entry = map.entry(p).or_default();
    *entry += c;
    if entry.is_zero() {
        map.remove(&p);
    }
}

/// Knobs for an engine run.
#[derive(Clone, Debug)]
pub struct EngineConfig {
    /// Recursion depth after which the current input is emitted as a family.
    pub max_depth: usize,
    /// Evaluate independent branches on the rayon pool.
    pub parallel: bool,
    pub memoize: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            max_depth: 10_000,
            parallel: true,
            memoize: true,
        }
    }
}

/// Counters for one engine.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EngineStats {
    pub general_calls: u64,
    pub type_b_calls: u64,
    pub memo_hits: u64,
    pub leaves: u64,
    pub step1: u64,
    pub step2: u64,
    pub step3: u64,
    pub step4: u64,
    pub budget_exhausted: u64,
}

#[derive(Default)]
struct Counters {
    general_calls: AtomicU64,
    type_b_calls: AtomicU64,
    memo_hits: AtomicU64,
    leaves: AtomicU64,
    step1: AtomicU64,
    step2: AtomicU64,
    step3: AtomicU64,
    step4: AtomicU64,
    budget_exhausted: AtomicU64,
}

fn bump(c: &AtomicU64) {
    c.fetch_add(1, Ordering::Relaxed);
}

type MemoKey = (Vec<i64>, Option<u16>);

/// A contraction engine with its memo tables. Cached categorisations are
/// self-contained, so one engine can be shared across many inputs.
pub struct Engine {
    config: EngineConfig,
    memo: DashMap<MemoKey, Arc<Categorisation>>,
    counters: Counters,
}

impl Default for Engine {
    fn default() -> Self {
        Self::new(EngineConfig::default())
    }
}

impl fmt::Debug for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Engine")
            .field("config", &self.config)
            .field("memo_entries", &self.memo.len())
            .finish()
    }
}

/// A witness for a Type B contraction of `z`, found by Step 2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step2Witness {
    pub y: usize,
}

/// A witness for a Type A contraction, found by Step 3: quotient by
/// `<w - b_w z : w in ws>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step3Witness {
    pub y: usize,
    pub ws: Vec<usize>,
}

impl Engine {
    pub fn new(config: EngineConfig) -> Self {
        Self {
            config,
            memo: DashMap::new(),
            counters: Counters::default(),
        }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn stats(&self) -> EngineStats {
        let c = &self.counters;
        let l = |a: &AtomicU64| a.load(Ordering::Relaxed);
        EngineStats {
            general_calls: l(&c.general_calls),
            type_b_calls: l(&c.type_b_calls),
            memo_hits: l(&c.memo_hits),
            leaves: l(&c.leaves),
            step1: l(&c.step1),
            step2: l(&c.step2),
            step3: l(&c.step3),
            step4: l(&c.step4),
            budget_exhausted: l(&c.budget_exhausted),
        }
    }

    fn join<A, B>(&self, a: impl FnOnce() -> A + Send, b: impl FnOnce() -> B + Send) -> (A, B)
    where
        A: Send,
        B: Send,
    {
        if self.config.parallel {
            rayon::join(a, b)
        } else {
            (a(), b())
        }
    }

    fn map_cases(
        &self,
        cases: Vec<AlgebraicData>,
        f: impl Fn(&AlgebraicData) -> Result<Categorisation> + Sync + Send,
    ) -> Result<Vec<Categorisation>> {
        if self.config.parallel && cases.len() > 1 {
            use rayon::prelude::*;
            cases.par_iter().map(f).collect()
        } else {
            cases.iter().map(f).collect()
        }
    }

    fn memoized(
        &self,
        key: MemoKey,
        compute: impl FnOnce() -> Result<Categorisation>,
    ) -> Result<Categorisation> {
        if !self.config.memoize {
            return compute();
        }
        if let Some(hit) = self.memo.get(&key) {
            bump(&self.counters.memo_hits);
            return Ok((**hit).clone());
        }
        let value = compute()?;
        self.memo.insert(key, Arc::new(value.clone()));
        Ok(value)
    }

    /// Categorises `Irr(A)`. `A` must satisfy the nonzero condition.
    pub fn general(&self, a: &AlgebraicData) -> Result<Categorisation> {
        a.validate()?;
        if !a.satisfies_nonzero_condition() {
            return Err(CoreError::MalformedData(
                "a structure constant uses a parameter without an inequation".into(),
            ));
        }
        self.general_rec(a, 0)
    }

    /// Categorises `Irr(A, z)` for an annihilating basis vector `z`.
    pub fn type_b(&self, a: &AlgebraicData, z: usize) -> Result<Categorisation> {
        a.validate()?;
        if !a.satisfies_nonzero_condition() {
            return Err(CoreError::MalformedData(
                "a structure constant uses a parameter without an inequation".into(),
            ));
        }
        if z >= a.dim() || !a.annihilates(z) {
            return Err(CoreError::MalformedData(format!(
                "basis vector {z} does not annihilate the algebra"
            )));
        }
        self.type_b_rec(a, z, 0)
    }

    fn general_rec(&self, a: &AlgebraicData, depth: usize) -> Result<Categorisation> {
        bump(&self.counters.general_calls);
        // isolated basis vectors split off as direct factors (F_q, +)
        let isolated = isolated_vectors(a, None);
        if !isolated.is_empty() {
            let rest = a.remove_basis_set(&isolated);
            return Ok(self
                .general_rec(&rest, depth)?
                .scale(0, isolated.len() as u32, 0));
        }
        if a.is_zero_multiplication() {
            bump(&self.counters.leaves);
            return Ok(leaf(a));
        }
        if depth >= self.config.max_depth {
            bump(&self.counters.budget_exhausted);
            return Ok(Categorisation::family(FamilyRef::AllIrr {
                data: a.clone(),
            }));
        }
        self.memoized((a.canonical_key(), None), || {
            let z = choose_z(a);
            let without = a.remove_basis(z);
            let (o1, o2) = self.join(
                || self.general_rec(&without, depth + 1),
                || self.type_b_rec(a, z, depth + 1),
            );
            Ok(Categorisation::aggregate([&o1?, &o2?]))
        })
    }

    fn type_b_rec(&self, a: &AlgebraicData, z: usize, depth: usize) -> Result<Categorisation> {
        bump(&self.counters.type_b_calls);
        let isolated = isolated_vectors(a, Some(z));
        if !isolated.is_empty() {
            let rest = a.remove_basis_set(&isolated);
            let z_new = z - isolated.iter().filter(|&&i| i < z).count();
            return Ok(self
                .type_b_rec(&rest, z_new, depth)?
                .scale(0, isolated.len() as u32, 0));
        }
        // Step 1: z is a direct summand
        if !a.is_hit(z) {
            bump(&self.counters.step1);
            return Ok(self
                .general_rec(&a.remove_basis(z), depth + 1)?
                .scale(1, 0, 0));
        }
        if depth >= self.config.max_depth {
            bump(&self.counters.budget_exhausted);
            return Ok(Categorisation::family(FamilyRef::IrrAtZ {
                data: a.clone(),
                z,
            }));
        }
        self.memoized((a.canonical_key(), Some(z as u16)), || {
            if let Some(w) = find_step2_witness(a, z) {
                bump(&self.counters.step2);
                let (contracted, z_new) = step2_contract(a, z, &w)?;
                let cases = contracted.split_into_cases();
                let parts = self.map_cases(cases, |c| self.type_b_rec(c, z_new, depth + 1))?;
                return Ok(Categorisation::aggregate(&parts).scale(0, 0, 1));
            }
            if let Some(w) = find_step3_witness(a, z) {
                bump(&self.counters.step3);
                let (contracted, z_new) = step3_contract(a, z, &w)?;
                let cases = contracted.split_into_cases();
                let parts = self.map_cases(cases, |c| self.type_b_rec(c, z_new, depth + 1))?;
                return Ok(Categorisation::aggregate(&parts));
            }
            bump(&self.counters.step4);
            Ok(Categorisation::family(FamilyRef::IrrAtZ {
                data: a.clone(),
                z,
            }))
        })
    }
}

/// `q^{|B|} |V(Q, E, q)|` for data with zero multiplication.
fn leaf(a: &AlgebraicData) -> Categorisation {
    let system = a.parameter_system();
    match count_solutions(&system) {
        CountResult::Counted(p) => Categorisation::resolved(p.scale(0, a.dim() as u32, 0)),
        CountResult::ByCharacteristic(c) => {
            Categorisation::resolved_by_characteristic(&c).scale(0, a.dim() as u32, 0)
        }
        CountResult::Unresolved(system) => Categorisation {
            unresolved_counts: vec![UnresolvedCount {
                system,
                u: 0,
                v: a.dim() as u32,
                e: 0,
            }],
            ..Categorisation::default()
        },
    }
}

/// Basis vectors (other than `keep`) that occur in no product at all.
fn isolated_vectors(a: &AlgebraicData, keep: Option<usize>) -> Vec<usize> {
    let mut used = vec![false; a.dim()];
    for (x, y, w, _) in a.products() {
        used[x] = true;
        used[y] = true;
        used[w] = true;
    }
    (0..a.dim())
        .filter(|&i| !used[i] && Some(i) != keep)
        .collect()
}

/// The basis vector split off by `General`: the last annihilating vector that
/// is hit by some product, or the last annihilating vector if none is hit.
pub fn choose_z(a: &AlgebraicData) -> usize {
    let n = a.dim();
    let mut hit = vec![false; n];
    let mut acts = vec![false; n];
    for (x, y, w, _) in a.products() {
        acts[x] = true;
        acts[y] = true;
        hit[w] = true;
    }
    (0..n)
        .rev()
        .find(|&i| !acts[i] && hit[i])
        .or_else(|| (0..n).rev().find(|&i| !acts[i]))
        .expect("a nilpotent algebra has an annihilating basis vector")
}

/// Step 2 search: `y` with `Jy = 0` and `0 != yJ <= <z>`.
pub fn find_step2_witness(a: &AlgebraicData, z: usize) -> Option<Step2Witness> {
    let n = a.dim();
    let mut right_acts = vec![false; n];
    let mut left_other = vec![false; n];
    let mut left_z = vec![false; n];
    for (x, y, w, _) in a.products() {
        right_acts[y] = true;
        if w == z {
            left_z[x] = true;
        } else {
            left_other[x] = true;
        }
    }
    (0..n)
        .find(|&y| !right_acts[y] && left_z[y] && !left_other[y])
        .map(|y| Step2Witness { y })
}

/// Step 3 search: `y` with `Jy = 0` and `yJ` inside the annihilator span `M`;
/// `L` is the set of annihilators hit by `yJ`. Prefers `z in L`, then the
/// smallest `L`, then the earliest `y`. Requires `L` to contain a vector other
/// than `z`, since otherwise the quotient makes no progress.
pub fn find_step3_witness(a: &AlgebraicData, z: usize) -> Option<Step3Witness> {
    let n = a.dim();
    let annihilator: Vec<bool> = (0..n).map(|v| a.annihilates(v)).collect();
    let mut right_acts = vec![false; n];
    let mut targets: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (x, y, w, _) in a.products() {
        right_acts[y] = true;
        targets[x].push(w);
    }
    let mut best: Option<((bool, usize, usize), Step3Witness)> = None;
    for y in 0..n {
        if right_acts[y] || targets[y].iter().any(|&w| !annihilator[w]) {
            continue;
        }
        let mut l = targets[y].clone();
        l.sort_unstable();
        l.dedup();
        let has_z = l.contains(&z);
        let ws: Vec<usize> = l.iter().copied().filter(|&w| w != z).collect();
        if ws.is_empty() {
            continue;
        }
        let rank = (!has_z, l.len(), y);
        if best.as_ref().is_none_or(|(r, _)| rank < *r) {
            best = Some((rank, Step3Witness { y, ws }));
        }
    }
    best.map(|(_, w)| w)
}

/// Turns a structure-constant polynomial into a parameter set, introducing a
/// fresh parameter with a defining equation when it is not a plain product.
fn encode_constant(data: &mut AlgebraicData, d: &ParamPoly) -> Option<Vec<Param>> {
    if d.is_zero() {
        return None;
    }
    if let Some((m, c)) = d.as_monomial() {
        if c.is_one() && m.is_squarefree() {
            return Some(m.vars().collect());
        }
    }
    let fresh = data.fresh_param("d");
    data.add_equation(&ParamPoly::var(fresh) - d);
    Some(vec![fresh])
}

/// Like [`encode_constant`] for `d / c` with `c` a product of nonzero
/// parameters: exact monomial division when possible, otherwise a fresh
/// parameter `e` with `e c = d`.
fn encode_quotient(data: &mut AlgebraicData, d: &ParamPoly, c: &[Param]) -> Option<Vec<Param>> {
    if d.is_zero() {
        return None;
    }
    if let Some(q) = divide_by_product(d, c) {
        return encode_constant(data, &q);
    }
    let fresh = data.fresh_param("d");
    data.add_equation(&(&ParamPoly::var(fresh) * &ParamPoly::product_of(c)) - d);
    Some(vec![fresh])
}

fn divide_by_product(d: &ParamPoly, c: &[Param]) -> Option<ParamPoly> {
    let mut out = ParamPoly::zero();
    for (m, coeff) in d.terms() {
        let mut m = m.clone();
        for &p in c {
            let (rest, e) = m.without(p);
            if e == 0 {
                return None;
            }
            m = rest.mul(&Monomial::product(std::iter::repeat_n(p, e as usize - 1)));
        }
        out.add_term(m, coeff.clone());
    }
    Some(out)
}

/// Builds `C_J(y)/<y>` for a Step 2 witness. Returns the new data and the new
/// position of `z`.
pub fn step2_contract(
    a: &AlgebraicData,
    z: usize,
    w: &Step2Witness,
) -> Result<(AlgebraicData, usize)> {
    let y = w.y;
    let n = a.dim();
    let witness_ok = y < n
        && y != z
        && a.products().all(|(_, v, _, _)| v != y)
        && a.products().all(|(u, _, t, _)| u != y || t == z)
        && a.products().any(|(u, _, t, _)| u == y && t == z);
    if !witness_ok {
        return Err(CoreError::BadWitness(format!(
            "{} does not satisfy Jy = 0 and 0 != yJ <= <{}>",
            a.basis_name(y.min(n - 1)),
            a.basis_name(z)
        )));
    }
    let xs: Vec<usize> = (0..n).filter(|&x| a.product(y, x, z).is_some()).collect();
    let k = xs.len();
    let xk = xs[k - 1];
    let c: Vec<ParamPoly> = xs.iter().map(|&x| a.product_poly(y, x, z)).collect();
    let ck_set: Vec<Param> = a.product(y, xk, z).expect("x_k is hit").to_vec();

    // new basis: x_i -> x'_i in place, y and x_k removed
    let mut names = Vec::with_capacity(n - 2);
    let mut image: Vec<Option<usize>> = vec![None; n];
    for old in 0..n {
        if old == y || old == xk {
            continue;
        }
        image[old] = Some(names.len());
        if xs.contains(&old) {
            names.push(format!("{}'", a.basis_name(old)));
        } else {
            names.push(a.basis_name(old).to_string());
        }
    }
    let x_index: BTreeMap<usize, usize> = xs.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    let is_prime = |old: usize| x_index.get(&old).is_some_and(|&i| i + 1 < k);

    // the new vectors whose expansion contains an old vector, with coefficient:
    // b in B^- -> b; x_i -> c_k x'_i; x_k -> -c_i x'_i for each i < k
    let expansion = |old: usize| -> Vec<(usize, ParamPoly)> {
        if old == y {
            Vec::new()
        } else if old == xk {
            (0..k - 1)
                .map(|i| (image[xs[i]].expect("kept"), -&c[i]))
                .collect()
        } else if is_prime(old) {
            vec![(image[old].expect("kept"), c[k - 1].clone())]
        } else {
            vec![(image[old].expect("kept"), ParamPoly::constant(1))]
        }
    };

    // accumulate u'v' in old coordinates, dropping the y and x_k components
    let mut acc: BTreeMap<(usize, usize, usize), ParamPoly> = BTreeMap::new();
    for (u, v, t, f) in a.products() {
        if t == y || t == xk {
            continue;
        }
        let p = ParamPoly::product_of(f);
        for (nu, cu) in expansion(u) {
            for (nv, cv) in expansion(v) {
                let term = &(&cu * &cv) * &p;
                let e = acc.entry((nu, nv, t)).or_insert_with(ParamPoly::zero);
                *e = &*e + &term;
            }
        }
    }

    let mut out = a.with_same_parameters(&names);
    for ((nu, nv, t), d) in acc {
        let target = image[t].expect("target kept");
        let factors = if is_prime(t) {
            encode_quotient(&mut out, &d, &ck_set)
        } else {
            encode_constant(&mut out, &d)
        };
        if let Some(f) = factors {
            out.set_product(nu, nv, target, f);
        }
    }
    debug_assert!(out.validate().is_ok(), "{:?}", out.validate());
    Ok((out, image[z].expect("z kept")))
}

/// Builds `J/<w_i - b_i z>` with fresh free parameters `b_i`, with `z`
/// renamed `z'` and moved to the end of the basis. Returns the new data and
/// the position of `z'`.
pub fn step3_contract(
    a: &AlgebraicData,
    z: usize,
    w: &Step3Witness,
) -> Result<(AlgebraicData, usize)> {
    let n = a.dim();
    if w.ws.is_empty() || w.ws.iter().any(|&x| x >= n || x == z || !a.annihilates(x)) {
        return Err(CoreError::BadWitness(
            "the quotient needs at least one annihilating vector besides z".into(),
        ));
    }
    let mut names = Vec::with_capacity(n);
    let mut image: Vec<Option<usize>> = vec![None; n];
    for old in 0..n {
        if old == z || w.ws.contains(&old) {
            continue;
        }
        image[old] = Some(names.len());
        names.push(a.basis_name(old).to_string());
    }
    let z_new = names.len();
    names.push(format!("{}'", a.basis_name(z)));

    let mut out = a.with_same_parameters(&names);
    let bs: BTreeMap<usize, Param> = w.ws.iter().map(|&x| (x, out.fresh_param("b"))).collect();
    let mut into_z: BTreeMap<(usize, usize), ParamPoly> = BTreeMap::new();
    for (u, v, t, f) in a.products() {
        let (nu, nv) = (
            image[u].expect("factor kept"),
            image[v].expect("factor kept"),
        );
        if let Some(nt) = image[t] {
            out.set_product(nu, nv, nt, f.to_vec());
        } else {
            let mut p = ParamPoly::product_of(f);
            if let Some(&b) = bs.get(&t) {
                p = &p * &ParamPoly::var(b);
            }
            let e = into_z.entry((nu, nv)).or_insert_with(ParamPoly::zero);
            *e = &*e + &p;
        }
    }
    for ((nu, nv), d) in into_z {
        if let Some(f) = encode_constant(&mut out, &d) {
            out.set_product(nu, nv, z_new, f);
        }
    }
    debug_assert!(out.validate().is_ok(), "{:?}", out.validate());
    Ok((out, z_new))
}

/// An exceptional family counted in closed form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExceptionalFamily {
    pub core: AlgebraicData,
    pub z: usize,
    pub k: u32,
    pub l: u32,
    pub m: u32,
    /// Number of characters, a polynomial in `q`.
    pub total_count: CountPoly,
    /// Characters in the family have degree `q^degree_shift`.
    pub degree_shift: u32,
}

/// The numbers of irreducible characters by degree, extracted from a
/// categorisation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedTable {
    pub n: Option<usize>,
    /// `e -> N_e(q)`: characters of degree `q^e`; zero entries are omitted.
    pub entries: BTreeMap<u32, CountPoly>,
    pub exceptional: Vec<ExceptionalFamily>,
    /// `p -> (e -> c)`: in characteristic `p`, `N_e(q)` is `entries[e] + c`.
    /// Empty when the table is the same in every characteristic.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub corrections: BTreeMap<u64, BTreeMap<u32, CountPoly>>,
    /// Families whose restrictions admit no substitution.
    pub dropped_families: usize,
    pub unresolved_counts: Vec<UnresolvedCount>,
}

impl ResolvedTable {
    pub fn is_complete(&self) -> bool {
        self.unresolved_counts.is_empty()
    }

    /// Whether one table serves every characteristic.
    pub fn is_uniform(&self) -> bool {
        self.corrections.is_empty()
    }

    /// The entries in characteristic `p`.
    pub fn entries_at_characteristic(&self, p: u64) -> BTreeMap<u32, CountPoly> {
        let mut out = self.entries.clone();
        if let Some(delta) = self.corrections.get(&p) {
            for (&e, c) in delta {
                *out.entry(e).or_default() += c;
            }
        }
        out.retain(|_, c| !c.is_zero());
        out
    }

    /// `sum_e N_e(q) q^{2e}` as a polynomial in `q`.
    pub fn degree_weighted_total(&self) -> CountPoly {
        let mut out = CountPoly::zero();
        for (&e, p) in &self.entries {
            out += &p.scale(0, 2 * e, 0);
        }
        out
    }

    /// `sum_e N_e(q)`.
    pub fn total(&self) -> CountPoly {
        let mut out = CountPoly::zero();
        for p in self.entries.values() {
            out += p;
        }
        out
    }

    /// The table as a single polynomial in `q` and `t`.
    pub fn as_poly(&self) -> CountPoly {
        CountPoly::from_t_coefficients(self.entries.iter().map(|(&e, p)| (e, p)))
    }
}

/// `{y, z}` with `y^2 = c z` (`c` a nonzero product) and nothing else: the
/// algebra `x F_q[x]/(x^3)`, with `q(q-1)` characters nontrivial on `1 + <z>`,
/// all linear.
fn is_cyclic_core(family: &FamilyRef) -> bool {
    let FamilyRef::IrrAtZ { data, z } = family else {
        return false;
    };
    data.dim() == 2
        && *z == 1
        && data.num_products() == 1
        && data.product(0, 0, 1).is_some()
        && data.satisfies_nonzero_condition()
}

/// Extracts the character-degree table, counting recognised families in
/// closed form and dropping families with no substitutions.
pub fn resolve(o: &Categorisation, n: Option<usize>) -> Result<ResolvedTable> {
    let mut entries: BTreeMap<u32, CountPoly> = o.resolved.t_coefficients();
    let mut corrections: BTreeMap<u64, BTreeMap<u32, CountPoly>> = o
        .corrections
        .iter()
        .map(|(&p, c)| (p, c.t_coefficients()))
        .collect();
    let mut exceptional = Vec::new();
    let mut dropped = 0;
    for f in &o.families {
        let system = f.family.data().parameter_system();
        let count = count_solutions(&system).char_count();
        if let Some(c) = &count {
            if c.generic.is_zero() && c.special.values().all(CountPoly::is_zero) {
                dropped += 1;
                continue;
            }
        }
        if !is_cyclic_core(&f.family) {
            return Err(CoreError::UnknownCore(format!("{:?}", f.family.data())));
        }
        let Some(c) = count else {
            return Err(CoreError::UnknownCore(format!(
                "family restrictions could not be counted: {system:?}"
            )));
        };
        let per_member = &CountPoly::q() * &CountPoly::q_minus_one_pow(1);
        let member_total = |count: &CountPoly| (count * &per_member).scale(f.k, f.l, 0);
        let total = member_total(&c.generic);
        *entries.entry(f.m).or_default() += &total;
        for (&p, special) in &c.special {
            let delta = &member_total(special) - &total;
            *corrections.entry(p).or_default().entry(f.m).or_default() += &delta;
        }
        let FamilyRef::IrrAtZ { data, z } = &f.family else {
            unreachable!("checked by is_cyclic_core")
        };
        exceptional.push(ExceptionalFamily {
            core: data.clone(),
            z: *z,
            k: f.k,
            l: f.l,
            m: f.m,
            total_count: total,
            degree_shift: f.m,
        });
    }
    entries.retain(|_, p| !p.is_zero());
    for delta in corrections.values_mut() {
        delta.retain(|_, p| !p.is_zero());
    }
    corrections.retain(|_, d| !d.is_empty());
    exceptional.sort_by_key(|e| serde_json::to_string(e).unwrap_or_default());
    Ok(ResolvedTable {
        n,
        entries,
        exceptional,
        corrections,
        dropped_families: dropped,
        unresolved_counts: o.unresolved_counts.clone(),
    })
}

/// Sorts records into a canonical order so reports do not depend on
/// evaluation order.
pub fn canonicalize(o: &mut Categorisation) {
    o.families
        .sort_by_cached_key(|f| serde_json::to_string(f).unwrap_or_default());
    o.unresolved_counts
        .sort_by_cached_key(|u| serde_json::to_string(u).unwrap_or_default());
}

/// `general` with a fresh default engine.
pub fn general(a: &AlgebraicData) -> Result<Categorisation> {
    Engine::default().general(a)
}

/// `type_b` with a fresh default engine.
pub fn type_b(a: &AlgebraicData, z: usize) -> Result<Categorisation> {
    Engine::default().type_b(a, z)
}
