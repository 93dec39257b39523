//! Pattern algebras `T_{C,R}(q)`: posets, closures, antichains, the stabiliser
//! algebras `M_E`, and the recursive categorisation of `Irr(T_{C,R})` built on
//! them.
//!
//! Internally a poset on `n <= 64` elements is stored as successor bitmasks
//! over `0..n`, relabelled so that `(i, j)` in the relation implies `i < j`.

use std::collections::{BTreeMap, BTreeSet};

use dashmap::DashMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algdata::AlgebraicData;
use crate::engine::{Categorisation, Engine};
use crate::error::{CoreError, Result};
use crate::polyring::CountPoly;

const MAX_ELEMENTS: usize = 64;

fn bit(i: usize) -> u64 {
    1 << i
}

fn members(mask: u64) -> impl Iterator<Item = usize> {
    (0..MAX_ELEMENTS).filter(move |&i| mask & bit(i) != 0)
}

fn mask_of(items: impl IntoIterator<Item = usize>) -> u64 {
    items.into_iter().fold(0, |m, i| m | bit(i))
}

/// A finite set with a strict partial order. Elements are indexed `0..len()`
/// in a linear extension of the order; `labels` keeps the caller's names.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Poset {
    labels: Vec<String>,
    succ: Vec<u64>,
}

/// JSON form: `{"elems": [...], "rel": [[a, b], ...]}` with `a < b`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PosetSpec {
    pub elems: Vec<serde_json::Value>,
    pub rel: Vec<(serde_json::Value, serde_json::Value)>,
}

fn label_of(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl Poset {
    /// Checks that `rel` is irreflexive and transitive on `0..labels.len()`,
    /// then reindexes along a linear extension that keeps the given order of
    /// `labels` wherever the relation allows.
    pub fn new(labels: Vec<String>, rel: &[(usize, usize)]) -> Result<Self> {
        let n = labels.len();
        if n > MAX_ELEMENTS {
            return Err(CoreError::TooLarge(format!("poset with {n} elements")));
        }
        let mut succ = vec![0u64; n];
        for &(a, b) in rel {
            if a >= n || b >= n {
                return Err(CoreError::InvalidPoset(format!(
                    "pair ({a}, {b}) out of range"
                )));
            }
            if a == b {
                return Err(CoreError::InvalidPoset(format!(
                    "relation is not irreflexive at {}",
                    labels[a]
                )));
            }
            succ[a] |= bit(b);
        }
        for a in 0..n {
            for b in members(succ[a]) {
                if succ[b] & !succ[a] != 0 {
                    let c = members(succ[b] & !succ[a]).next().unwrap();
                    return Err(CoreError::InvalidPoset(format!(
                        "relation is not transitive: {} < {} < {}",
                        labels[a], labels[b], labels[c]
                    )));
                }
            }
        }
        // stable topological order (irreflexive + transitive means acyclic)
        let mut order = Vec::with_capacity(n);
        let mut placed = 0u64;
        while order.len() < n {
            let next = (0..n)
                .find(|&i| {
                    placed & bit(i) == 0
                        && (0..n).all(|j| placed & bit(j) != 0 || succ[j] & bit(i) == 0)
                })
                .expect("acyclic");
            placed |= bit(next);
            order.push(next);
        }
        let mut position = vec![0; n];
        for (p, &i) in order.iter().enumerate() {
            position[i] = p;
        }
        let relabelled = order
            .iter()
            .map(|&i| mask_of(members(succ[i]).map(|j| position[j])))
            .collect();
        Ok(Poset {
            labels: order.iter().map(|&i| labels[i].clone()).collect(),
            succ: relabelled,
        })
    }

    /// The chain `1 < 2 < ... < n`.
    pub fn chain(n: usize) -> Self {
        Poset {
            labels: (1..=n).map(|i| i.to_string()).collect(),
            succ: (0..n).map(|i| mask_of(i + 1..n)).collect(),
        }
    }

    /// The poset on `0..n` with the given pairs, labelled `1..=n`.
    pub fn from_pairs(n: usize, rel: &[(usize, usize)]) -> Result<Self> {
        Poset::new((1..=n).map(|i| i.to_string()).collect(), rel)
    }

    pub fn from_spec(spec: &PosetSpec) -> Result<Self> {
        let labels: Vec<String> = spec.elems.iter().map(label_of).collect();
        let index = |v: &serde_json::Value| {
            let l = label_of(v);
            labels
                .iter()
                .position(|x| *x == l)
                .ok_or_else(|| CoreError::InvalidPoset(format!("unknown element {l}")))
        };
        let rel = spec
            .rel
            .iter()
            .map(|(a, b)| Ok((index(a)?, index(b)?)))
            .collect::<Result<Vec<_>>>()?;
        Poset::new(labels, &rel)
    }

    pub fn to_spec(&self) -> PosetSpec {
        let v = |i: usize| serde_json::Value::String(self.labels[i].clone());
        PosetSpec {
            elems: (0..self.len()).map(v).collect(),
            rel: self
                .relation()
                .into_iter()
                .map(|(a, b)| (v(a), v(b)))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn less(&self, a: usize, b: usize) -> bool {
        self.succ[a] & bit(b) != 0
    }

    /// The pairs of the order, sorted.
    pub fn relation(&self) -> BTreeSet<(usize, usize)> {
        (0..self.len())
            .flat_map(|a| members(self.succ[a]).map(move |b| (a, b)))
            .collect()
    }

    fn shape(&self) -> Shape {
        Shape {
            succ: self.succ.clone(),
        }
    }
}

/// Maximal elements of `e` and its downward closure `{c : c in e or c < d for
/// some d in e}`.
pub fn top_and_closure(e: &BTreeSet<usize>, p: &Poset) -> (BTreeSet<usize>, BTreeSet<usize>) {
    let e_mask = mask_of(e.iter().copied());
    let (top, closure) = top_and_closure_mask(e_mask, &p.succ);
    (members(top).collect(), members(closure).collect())
}

fn top_and_closure_mask(e: u64, succ: &[u64]) -> (u64, u64) {
    let mut top = 0;
    let mut closure = e;
    for c in 0..succ.len() {
        if succ[c] & e != 0 {
            closure |= bit(c);
        }
    }
    for d in members(e) {
        if succ[d] & e == 0 {
            top |= bit(d);
        }
    }
    (top, closure)
}

/// `{(k, l) : k < l in total, and rel + (k, l) is transitive}`, where `total`
/// lists the elements in increasing order and `rel` is a strict partial order
/// contained in it.
pub fn normal_closure(rel: &BTreeSet<(usize, usize)>, total: &[usize]) -> BTreeSet<(usize, usize)> {
    let n = total.iter().copied().max().map_or(0, |m| m + 1);
    let mut succ = vec![0u64; n];
    for &(a, b) in rel {
        succ[a] |= bit(b);
    }
    let rank: BTreeMap<usize, usize> = total.iter().enumerate().map(|(r, &c)| (c, r)).collect();
    let out = normal_closure_mask(&succ, mask_of(total.iter().copied()), |a, b| {
        rank[&a] < rank[&b]
    });
    let closed: BTreeSet<(usize, usize)> = (0..n)
        .flat_map(|a| members(out[a]).map(move |b| (a, b)))
        .collect();
    debug_assert!(is_transitive(&closed));
    closed
}

fn is_transitive(rel: &BTreeSet<(usize, usize)>) -> bool {
    rel.iter().all(|&(a, b)| {
        rel.range((b, 0)..(b + 1, 0))
            .all(|&(_, c)| rel.contains(&(a, c)))
    })
}

/// Normal closure on the elements of `within`: `(k, l)` is kept when
/// `k` precedes `l`, every predecessor of `k` precedes `l` and every successor
/// of `l` succeeds `k`.
fn normal_closure_mask(
    succ: &[u64],
    within: u64,
    precedes: impl Fn(usize, usize) -> bool,
) -> Vec<u64> {
    let n = succ.len();
    let pred: Vec<u64> = (0..n)
        .map(|b| mask_of((0..n).filter(|&a| within & bit(a) != 0 && succ[a] & bit(b) != 0)))
        .collect();
    let mut out = vec![0u64; n];
    for k in members(within) {
        for l in members(within) {
            if k != l
                && precedes(k, l)
                && pred[k] & !pred[l] == 0
                && succ[l] & within & !succ[k] == 0
            {
                out[k] |= bit(l);
            }
        }
    }
    out
}

/// A total order on `within` extending `succ` and maximising the size of the
/// normal closure: `(k, l)` can be in the closure only if `pred(k)` is inside
/// `pred(l)` and `succ(l)` inside `succ(k)`, and sorting by
/// `|pred| - |succ|` puts every such `k` before `l`.
fn best_total_order(succ: &[u64], within: u64) -> Vec<usize> {
    let n = succ.len();
    let mut order: Vec<usize> = members(within).collect();
    let key = |c: usize| {
        let preds = (0..n)
            .filter(|&a| within & bit(a) != 0 && succ[a] & bit(c) != 0)
            .count() as i64;
        let succs = (succ[c] & within).count_ones() as i64;
        (preds - succs, c)
    };
    order.sort_by_key(|&c| key(c));
    order
}

/// All antichains of `rel` restricted to `d`, including the empty one, in
/// lexicographic order of their sorted member lists.
pub fn antichains(d: &[usize], rel: &BTreeSet<(usize, usize)>) -> Vec<Vec<usize>> {
    let n = d.iter().copied().max().map_or(0, |m| m + 1);
    let mut comparable = vec![0u64; n];
    for &(a, b) in rel {
        if a < n && b < n {
            comparable[a] |= bit(b);
            comparable[b] |= bit(a);
        }
    }
    let mut out: Vec<Vec<usize>> = antichain_masks(mask_of(d.iter().copied()), &comparable)
        .into_iter()
        .map(|m| members(m).collect())
        .collect();
    out.sort();
    out
}

fn antichain_masks(within: u64, comparable: &[u64]) -> Vec<u64> {
    let mut out = vec![0u64];
    for c in members(within) {
        let extended: Vec<u64> = out
            .iter()
            .filter(|&&a| a & comparable[c] == 0)
            .map(|&a| a | bit(c))
            .collect();
        out.extend(extended);
    }
    out
}

/// Internal poset representation: successor masks on `0..n` with every pair
/// increasing.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Shape {
    succ: Vec<u64>,
}

impl Shape {
    fn len(&self) -> usize {
        self.succ.len()
    }

    fn is_discrete(&self) -> bool {
        self.succ.iter().all(|&s| s == 0)
    }

    /// Drops element `c`, renumbering the rest in order.
    fn remove(&self, c: usize) -> Shape {
        let squeeze = |m: u64| {
            let low = m & (bit(c) - 1);
            let high = (m >> (c + 1)) << c;
            low | high
        };
        Shape {
            succ: (0..self.len())
                .filter(|&i| i != c)
                .map(|i| squeeze(self.succ[i]))
                .collect(),
        }
    }

    fn first_minimal(&self) -> usize {
        (0..self.len())
            .find(|&c| self.succ.iter().all(|&s| s & bit(c) == 0))
            .expect("nonempty poset has a minimal element")
    }
}

fn pair_name(i: usize, j: usize) -> String {
    format!("e{}_{}", i + 1, j + 1)
}

/// Parameter-free data for `T_{C,R}`: basis `e_ij` for `(i, j)` in `R`,
/// ordered by row descending then column ascending, with `e_ij e_jk = e_ik`.
pub fn encode_pattern(p: &Poset) -> AlgebraicData {
    encode_shape(&p.shape())
}

fn encode_shape(s: &Shape) -> AlgebraicData {
    let n = s.len();
    let mut pairs = Vec::new();
    for i in (0..n).rev() {
        for j in members(s.succ[i]) {
            pairs.push((i, j));
        }
    }
    let index: BTreeMap<(usize, usize), usize> =
        pairs.iter().enumerate().map(|(k, &p)| (p, k)).collect();
    let mut a = AlgebraicData::with_basis(pairs.iter().map(|&(i, j)| pair_name(i, j)));
    for (x, &(i, j)) in pairs.iter().enumerate() {
        for l in members(s.succ[j]) {
            let y = index[&(j, l)];
            a.set_product(x, y, index[&(i, l)], vec![]);
        }
    }
    a
}

/// Basis vectors of `M_E` for a two-element antichain `{k, l}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum StabVector {
    E(usize, usize),
    F(usize),
}

/// Data for the stabiliser algebra `M_E` of `u_E` in `L = T_{B,P}`, where
/// `B = C - {c0}` and `E` is an antichain of the successors of `c0`. Basis
/// indices refer to the elements of `p`.
pub fn stabilizer_data(p: &Poset, c0: usize, e: &[usize]) -> Result<AlgebraicData> {
    stabilizer_shape(&p.shape(), c0, mask_of(e.iter().copied()))
}

fn stabilizer_shape(s: &Shape, c0: usize, e: u64) -> Result<AlgebraicData> {
    let n = s.len();
    let d = s.succ[c0];
    if e & !d != 0 {
        return Err(CoreError::InvalidPoset(
            "antichain must lie above c0".into(),
        ));
    }
    // L = T_{B,P}: drop every pair starting at c0 (c0 is minimal)
    let mut l_succ = s.succ.clone();
    l_succ[c0] = 0;
    match e.count_ones() {
        0 => Ok(encode_shape(&Shape { succ: l_succ })),
        1 => {
            for (i, m) in l_succ.iter_mut().enumerate() {
                if d & bit(i) != 0 {
                    *m &= !e;
                }
            }
            Ok(encode_shape(&Shape { succ: l_succ }))
        }
        2 => {
            let mut it = members(e);
            let (k, l) = (it.next().unwrap(), it.next().unwrap());
            let mut basis = Vec::new();
            for i in (0..n).rev() {
                for j in members(l_succ[i]) {
                    if d & bit(i) == 0 || (j != k && j != l) {
                        basis.push(StabVector::E(i, j));
                    }
                }
                if d & bit(i) != 0 && l_succ[i] & e == e {
                    basis.push(StabVector::F(i));
                }
            }
            let key = |v: &StabVector| match *v {
                StabVector::E(i, j) => (std::cmp::Reverse(i), j),
                StabVector::F(i) => (std::cmp::Reverse(i), k.min(l)),
            };
            basis.sort_by_key(key);
            let index: BTreeMap<StabVector, usize> =
                basis.iter().enumerate().map(|(x, &v)| (v, x)).collect();
            let at = |v: StabVector| {
                index.get(&v).copied().ok_or_else(|| {
                    CoreError::MalformedData(format!("stabiliser product leaves the basis: {v:?}"))
                })
            };
            let names = basis.iter().map(|v| match *v {
                StabVector::E(i, j) => pair_name(i, j),
                StabVector::F(i) => format!("f{}", i + 1),
            });
            let mut a = AlgebraicData::with_basis(names);
            for (x, &u) in basis.iter().enumerate() {
                for (y, &v) in basis.iter().enumerate() {
                    let targets: Vec<StabVector> = match (u, v) {
                        (StabVector::E(i, j), StabVector::E(r, m)) if j == r => {
                            vec![StabVector::E(i, m)]
                        }
                        (StabVector::E(i, j), StabVector::F(m)) if j == m => {
                            if d & bit(i) != 0 {
                                vec![StabVector::F(i)]
                            } else {
                                vec![StabVector::E(i, k), StabVector::E(i, l)]
                            }
                        }
                        (StabVector::F(m), StabVector::E(i, j)) if i == k || i == l => {
                            vec![StabVector::E(m, j)]
                        }
                        _ => vec![],
                    };
                    for t in targets {
                        a.set_product(x, y, at(t)?, vec![]);
                    }
                }
            }
            Ok(a)
        }
        size => Err(CoreError::UnsupportedAntichain(size as usize)),
    }
}

/// Counters for a pattern run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternStats {
    pub calls: u64,
    pub memo_hits: u64,
    pub general_fallbacks: u64,
    pub stabilizer_runs: u64,
}

/// Recursive categorisation of `Irr(T_{C,R})` by orbits of `1 + L` on the
/// characters of `1 + K`, handing stabilisers of two-element antichains (and
/// posets with larger antichains) to the contraction engine.
pub struct PatternEngine {
    engine: Engine,
    memo: DashMap<Shape, Categorisation>,
    calls: std::sync::atomic::AtomicU64,
    memo_hits: std::sync::atomic::AtomicU64,
    general_fallbacks: std::sync::atomic::AtomicU64,
    stabilizer_runs: std::sync::atomic::AtomicU64,
}

impl Default for PatternEngine {
    fn default() -> Self {
        Self::new(Engine::default())
    }
}

impl PatternEngine {
    pub fn new(engine: Engine) -> Self {
        PatternEngine {
            engine,
            memo: DashMap::new(),
            calls: Default::default(),
            memo_hits: Default::default(),
            general_fallbacks: Default::default(),
            stabilizer_runs: Default::default(),
        }
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn stats(&self) -> PatternStats {
        use std::sync::atomic::Ordering::Relaxed;
        PatternStats {
            calls: self.calls.load(Relaxed),
            memo_hits: self.memo_hits.load(Relaxed),
            general_fallbacks: self.general_fallbacks.load(Relaxed),
            stabilizer_runs: self.stabilizer_runs.load(Relaxed),
        }
    }

    pub fn run(&self, p: &Poset) -> Result<Categorisation> {
        self.run_shape(&p.shape())
    }

    fn run_shape(&self, s: &Shape) -> Result<Categorisation> {
        use std::sync::atomic::Ordering::Relaxed;
        self.calls.fetch_add(1, Relaxed);
        if let Some(hit) = self.memo.get(s) {
            self.memo_hits.fetch_add(1, Relaxed);
            return Ok(hit.clone());
        }
        let out = self.compute(s)?;
        self.memo.insert(s.clone(), out.clone());
        Ok(out)
    }

    fn compute(&self, s: &Shape) -> Result<Categorisation> {
        use std::sync::atomic::Ordering::Relaxed;
        // T_{C,0} is the zero algebra: one (trivial) character
        if s.is_discrete() {
            return Ok(Categorisation::resolved(CountPoly::one()));
        }
        let c0 = s.first_minimal();
        let d = s.succ[c0];
        let all = mask_of(0..s.len());
        let b = all & !bit(c0);
        // P on B is s without c0's pairs; R' = R on D
        let mut p_succ = s.succ.clone();
        p_succ[c0] = 0;
        let total = best_total_order(&p_succ, b);
        let mut rank = vec![0; s.len()];
        for (r, &c) in total.iter().enumerate() {
            rank[c] = r;
        }
        let p_bar = normal_closure_mask(&p_succ, b, |x, y| rank[x] < rank[y]);
        let restrict = |m: &[u64]| -> Vec<u64> {
            (0..s.len())
                .map(|i| if d & bit(i) != 0 { m[i] & d } else { 0 })
                .collect()
        };
        let r_prime = restrict(&s.succ);
        let p_bar_prime = restrict(&p_bar);
        let comparable: Vec<u64> = (0..s.len())
            .map(|i| {
                p_bar_prime[i] | mask_of((0..s.len()).filter(|&j| p_bar_prime[j] & bit(i) != 0))
            })
            .collect();
        let mut chains = antichain_masks(d, &comparable);
        chains.sort_by_key(|&m| members(m).collect::<Vec<_>>());
        if chains.iter().any(|m| m.count_ones() >= 3) {
            self.general_fallbacks.fetch_add(1, Relaxed);
            return self.engine.general(&encode_shape(s));
        }
        let parts = chains
            .par_iter()
            .map(|&e| {
                let (_, closure_bar) = top_and_closure_mask(e, &p_bar_prime);
                let (_, closure_r) = top_and_closure_mask(e, &r_prime);
                let k = e.count_ones();
                let l = (closure_bar & !closure_r).count_ones();
                let m = (closure_r & !e).count_ones();
                let inner = match k {
                    0 => self.run_shape(
                        &Shape {
                            succ: p_succ.clone(),
                        }
                        .remove(c0),
                    )?,
                    1 => {
                        let mut succ = p_succ.clone();
                        for (i, x) in succ.iter_mut().enumerate() {
                            if d & bit(i) != 0 {
                                *x &= !e;
                            }
                        }
                        self.run_shape(&Shape { succ }.remove(c0))?
                    }
                    _ => {
                        self.stabilizer_runs.fetch_add(1, Relaxed);
                        self.engine.general(&stabilizer_shape(s, c0, e)?)?
                    }
                };
                Ok(inner.scale(k, l, m))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Categorisation::aggregate(&parts))
    }
}

/// [`PatternEngine::run`] with a fresh default engine.
pub fn pattern_algebra(p: &Poset) -> Result<Categorisation> {
    PatternEngine::default().run(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{general, resolve};
    use crate::field::Field;
    use crate::oracle::pattern_orbit_size;
    use proptest::prelude::*;

    fn set(items: &[usize]) -> BTreeSet<usize> {
        items.iter().copied().collect()
    }

    fn rel(pairs: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
        pairs.iter().copied().collect()
    }

    fn poly(s: &str) -> CountPoly {
        CountPoly::parse_q(s).unwrap()
    }

    #[test]
    fn top_and_closure_examples() {
        let chain = Poset::chain(3);
        assert_eq!(
            top_and_closure(&set(&[0, 1]), &chain),
            (set(&[1]), set(&[0, 1]))
        );
        assert_eq!(top_and_closure(&set(&[]), &chain), (set(&[]), set(&[])));
        let vee = Poset::from_pairs(3, &[(0, 2), (1, 2)]).unwrap();
        assert_eq!(
            top_and_closure(&set(&[2]), &vee),
            (set(&[2]), set(&[0, 1, 2]))
        );
    }

    #[test]
    fn normal_closure_examples() {
        let total = [0, 1, 2];
        let full = rel(&[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(normal_closure(&full, &total), full);
        assert_eq!(normal_closure(&rel(&[(0, 2)]), &total), full);
        assert_eq!(normal_closure(&rel(&[]), &total), full);
        // 0 < 1 only: (1, 2) would need 0 < 2
        assert_eq!(
            normal_closure(&rel(&[(0, 1)]), &total),
            rel(&[(0, 1), (0, 2)])
        );
    }

    #[test]
    fn antichain_examples() {
        let chain = rel(&[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(
            antichains(&[0, 1, 2], &chain),
            vec![vec![], vec![0], vec![1], vec![2]]
        );
        assert_eq!(
            antichains(&[0, 1], &rel(&[])),
            vec![vec![], vec![0], vec![0, 1], vec![1]]
        );
        assert_eq!(antichains(&[], &rel(&[])), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn poset_validation() {
        assert!(matches!(
            Poset::from_pairs(2, &[(0, 0)]),
            Err(CoreError::InvalidPoset(_))
        ));
        assert!(matches!(
            Poset::from_pairs(3, &[(0, 1), (1, 2)]),
            Err(CoreError::InvalidPoset(_))
        ));
        assert!(matches!(
            Poset::from_pairs(2, &[(0, 5)]),
            Err(CoreError::InvalidPoset(_))
        ));
        // labels are reordered along a linear extension
        let p = Poset::new(vec!["b".into(), "a".into()], &[(1, 0)]).unwrap();
        assert_eq!(p.labels(), ["a", "b"]);
        assert!(p.less(0, 1));
        let spec: PosetSpec =
            serde_json::from_str(r#"{"elems":[1,2,3],"rel":[[1,3],[2,3]]}"#).unwrap();
        let q = Poset::from_spec(&spec).unwrap();
        assert_eq!(q.relation(), rel(&[(0, 2), (1, 2)]));
        assert_eq!(Poset::from_spec(&q.to_spec()).unwrap(), q);
    }

    #[test]
    fn encode_chains() {
        let t2 = encode_pattern(&Poset::chain(2));
        assert_eq!((t2.dim(), t2.num_products()), (1, 0));
        let t3 = encode_pattern(&Poset::chain(3));
        assert_eq!(
            t3.basis_names().collect::<Vec<_>>(),
            ["e2_3", "e1_2", "e1_3"]
        );
        assert_eq!(
            t3.products()
                .map(|(x, y, z, _)| (x, y, z))
                .collect::<Vec<_>>(),
            [(1, 0, 2)]
        );
        for n in 1..8 {
            let t = encode_pattern(&Poset::chain(n));
            assert_eq!(t.dim(), n * (n - 1) / 2);
            t.validate().unwrap();
        }
    }

    #[test]
    fn stabilizer_small_cases() {
        let chain = Poset::chain(4);
        // E = {3} on a chain: no products land in column 3 from D
        let m = stabilizer_data(&chain, 0, &[3]).unwrap();
        assert_eq!(m.basis_names().collect::<Vec<_>>(), ["e2_3"]);
        assert_eq!(m.num_products(), 0);
        let l = stabilizer_data(&chain, 0, &[]).unwrap();
        assert_eq!(
            l,
            encode_pattern(&Poset::chain(4)).remove_basis_set(&[3, 4, 5])
        );
        let flat = Poset::from_pairs(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        assert!(matches!(
            stabilizer_data(&flat, 0, &[1, 2, 3]),
            Err(CoreError::UnsupportedAntichain(3))
        ));
    }

    type Matrix = Vec<Vec<u8>>;

    fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
        let n = a.len();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).fold(0, |s, k| s ^ (a[i][k] & b[k][j])))
                    .collect()
            })
            .collect()
    }

    /// Checks `M_E` against `Ann_L(u_E)` over `F_2`: the basis vectors are the
    /// stated matrices, they lie in the annihilator, span a space of the right
    /// dimension, and multiply according to the structure constants.
    fn check_stabilizer_over_f2(p: &Poset, c0: usize, e: &[usize]) {
        let n = p.len();
        let data = stabilizer_data(p, c0, e).unwrap();
        data.validate().unwrap();
        let d: Vec<usize> = (0..n).filter(|&j| p.less(c0, j)).collect();
        let parse = |name: &str| -> Matrix {
            let mut m = vec![vec![0u8; n]; n];
            if let Some(rest) = name.strip_prefix('f') {
                let i: usize = rest.parse::<usize>().unwrap() - 1;
                for &k in e {
                    m[i][k] = 1;
                }
            } else {
                let (i, j) = name[1..].split_once('_').unwrap();
                m[i.parse::<usize>().unwrap() - 1][j.parse::<usize>().unwrap() - 1] = 1;
            }
            m
        };
        let basis: Vec<Matrix> = data.basis_names().map(parse).collect();
        let annihilates = |m: &Matrix| {
            d.iter()
                .all(|&i| e.iter().fold(0, |s, &k| s ^ m[i][k]) == 0)
        };
        let in_l =
            |m: &Matrix| (0..n).all(|i| (0..n).all(|j| m[i][j] == 0 || (i != c0 && p.less(i, j))));
        for m in &basis {
            assert!(in_l(m) && annihilates(m));
        }
        // |Ann_L(u_E)| over F_2 by enumeration of L
        let l_pairs: Vec<(usize, usize)> =
            p.relation().into_iter().filter(|&(i, _)| i != c0).collect();
        let mut ann = 0u64;
        for bits in 0u64..1 << l_pairs.len() {
            let mut m = vec![vec![0u8; n]; n];
            for (b, &(i, j)) in l_pairs.iter().enumerate() {
                m[i][j] = ((bits >> b) & 1) as u8;
            }
            if annihilates(&m) {
                ann += 1;
            }
        }
        assert_eq!(ann, 1 << basis.len(), "dimension of the annihilator");
        for (x, a) in basis.iter().enumerate() {
            for (y, b) in basis.iter().enumerate() {
                let mut expected = vec![vec![0u8; n]; n];
                for (px, py, z, _) in data.products() {
                    if (px, py) == (x, y) {
                        for i in 0..n {
                            for j in 0..n {
                                expected[i][j] ^= basis[z][i][j];
                            }
                        }
                    }
                }
                assert_eq!(
                    matmul(a, b),
                    expected,
                    "product of basis vectors {x} and {y}"
                );
            }
        }
    }

    #[test]
    fn stabilizers_match_annihilators_over_f2() {
        // c0 below two incomparable tops with a shared predecessor
        let p = Poset::from_pairs(5, &[(0, 1), (0, 2), (0, 3), (0, 4), (1, 3), (1, 4), (2, 3)])
            .unwrap();
        check_stabilizer_over_f2(&p, 0, &[3, 4]);
        check_stabilizer_over_f2(&p, 0, &[2, 4]);
        check_stabilizer_over_f2(&p, 0, &[4]);
        check_stabilizer_over_f2(&p, 0, &[]);
        // elements outside D feeding into the antichain
        let q = Poset::from_pairs(
            6,
            &[
                (0, 3),
                (0, 4),
                (0, 5),
                (1, 2),
                (1, 3),
                (1, 4),
                (1, 5),
                (2, 4),
                (2, 5),
                (3, 4),
                (3, 5),
            ],
        )
        .unwrap();
        check_stabilizer_over_f2(&q, 0, &[4, 5]);
        check_stabilizer_over_f2(&q, 1, &[4, 5]);
        check_stabilizer_over_f2(&q, 1, &[2, 3]);
    }

    #[test]
    fn pattern_algebra_small() {
        let discrete = Poset::from_pairs(4, &[]).unwrap();
        assert_eq!(
            pattern_algebra(&discrete).unwrap(),
            Categorisation::resolved(CountPoly::one())
        );
        let t3 = pattern_algebra(&Poset::chain(3)).unwrap();
        assert_eq!(
            t3.resolved,
            &poly("q^2") + &CountPoly::q_minus_one_pow(1).scale(0, 0, 1)
        );
        assert!(t3.is_fully_resolved());
    }

    #[test]
    fn chains_agree_with_general() {
        for n in 1..=8 {
            let chain = Poset::chain(n);
            let a = resolve(&pattern_algebra(&chain).unwrap(), Some(n)).unwrap();
            let b = resolve(&general(&encode_pattern(&chain)).unwrap(), Some(n)).unwrap();
            assert_eq!(a, b, "n = {n}");
        }
    }

    fn arb_poset(max: usize) -> impl Strategy<Value = Poset> {
        (1..=max).prop_flat_map(|n| {
            prop::collection::vec(any::<bool>(), n * n).prop_map(move |bits| {
                // random DAG on 0..n, then transitive closure
                let mut succ = vec![0u64; n];
                for i in 0..n {
                    for j in i + 1..n {
                        if bits[i * n + j] {
                            succ[i] |= bit(j);
                        }
                    }
                }
                for i in (0..n).rev() {
                    for j in members(succ[i]) {
                        succ[i] |= succ[j];
                    }
                }
                let pairs: Vec<(usize, usize)> = (0..n)
                    .flat_map(|i| members(succ[i]).map(move |j| (i, j)))
                    .collect();
                Poset::from_pairs(n, &pairs).unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn normal_closure_is_transitive_and_contains_rel(p in arb_poset(7)) {
            let total: Vec<usize> = (0..p.len()).collect();
            let closed = normal_closure(&p.relation(), &total);
            prop_assert!(is_transitive(&closed));
            prop_assert!(p.relation().is_subset(&closed));
        }

        #[test]
        fn best_order_maximises_closure(p in arb_poset(6)) {
            let all = mask_of(0..p.len());
            let best = best_total_order(&p.succ, all);
            let size = |order: &[usize]| {
                let mut rank = vec![0; p.len()];
                for (r, &c) in order.iter().enumerate() { rank[c] = r; }
                normal_closure_mask(&p.succ, all, |a, b| rank[a] < rank[b]).iter().map(|m| m.count_ones()).sum::<u32>()
            };
            let best_size = size(&best);
            // every linear extension, by brute force
            let mut order: Vec<usize> = (0..p.len()).collect();
            let mut max = 0;
            permute(&mut order, 0, &mut |o| {
                let extends = (0..o.len()).all(|i| (i + 1..o.len()).all(|j| !p.less(o[j], o[i])));
                if extends { max = max.max(size(o)); }
            });
            prop_assert_eq!(best_size, max);
        }

        #[test]
        fn antichain_counts(n in 0usize..8) {
            let chain: BTreeSet<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
            let d: Vec<usize> = (0..n).collect();
            prop_assert_eq!(antichains(&d, &chain).len(), n + 1);
            prop_assert_eq!(antichains(&d, &BTreeSet::new()).len(), 1 << n);
        }

        #[test]
        fn orbit_sizes_follow_the_closure(p in arb_poset(5), q in prop_oneof![Just(2u32), Just(3u32)], raw in prop::collection::vec(0u32..3, 5)) {
            let field = Field::new(q).unwrap();
            let u: Vec<crate::field::Fq> = raw[..p.len()].iter().map(|&c| (c % q) as crate::field::Fq).collect();
            let supp: BTreeSet<usize> = (0..p.len()).filter(|&i| u[i] != 0).collect();
            let (top, closure) = top_and_closure(&supp, &p);
            let rel: Vec<(usize, usize)> = p.relation().into_iter().collect();
            let orbit = pattern_orbit_size(p.len(), &rel, &u, &field).unwrap();
            prop_assert_eq!(orbit, (q as u64).pow(closure.difference(&top).count() as u32));
        }

        #[test]
        fn random_stabilizers_match_annihilators(p in arb_poset(6), pick in any::<prop::sample::Index>()) {
            let d: Vec<usize> = members(p.succ[0]).collect();
            let closed = d.iter().flat_map(|&a| d.iter().map(move |&b| (a, b))).filter(|&(a, b)| p.less(a, b)).collect();
            let small: Vec<Vec<usize>> = antichains(&d, &closed).into_iter().filter(|e| e.len() <= 2).collect();
            let e = pick.get(&small);
            check_stabilizer_over_f2(&p, 0, e);
        }

        #[test]
        fn random_posets_agree_with_general(p in arb_poset(6)) {
            let a = resolve(&pattern_algebra(&p).unwrap(), None).unwrap();
            let b = resolve(&general(&encode_pattern(&p)).unwrap(), None).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == v.len() {
            f(v);
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            permute(v, k + 1, f);
            v.swap(k, i);
        }
    }
}
