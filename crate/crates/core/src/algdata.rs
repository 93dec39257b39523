//! Parametrised families of nilpotent algebras.
//!
//! An [`AlgebraicData`] value `(Q, E, B, R)` holds a set of parameter symbols
//! `Q`, restrictions `E` on them, an ordered basis `B`, and structure constants
//! `R`: for each triple `(x, y, z)` of basis positions either zero or a set of
//! parameters whose product is the coefficient of `z` in `xy`. Whenever
//! `R(x, y, z)` is nonzero, `z` comes strictly after `x` and `y`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::field::{Field, Fq};
use crate::polyring::{Monomial, ParamPoly};

/// An interned parameter symbol.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct Param(pub u32);

/// A restriction on parameter values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Restriction {
    NonZero(Param),
    /// `poly = 0`.
    Equation(ParamPoly),
}

/// A substitution `Q -> F_q`.
pub type Substitution = BTreeMap<Param, Fq>;

/// Default cap on `|Q|` for exhaustive substitution enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 8;

#[derive(Clone, PartialEq, Eq)]
pub struct AlgebraicData {
    params: BTreeMap<Param, Arc<str>>,
    nonzero: BTreeSet<Param>,
    equations: Vec<ParamPoly>,
    basis: Vec<Arc<str>>,
    products: BTreeMap<(u16, u16, u16), Vec<Param>>,
}

impl AlgebraicData {
    /// Data with the given basis names, no parameters and zero multiplication.
    pub fn with_basis<S: AsRef<str>>(names: impl IntoIterator<Item = S>) -> Self {
        Self {
            params: BTreeMap::new(),
            nonzero: BTreeSet::new(),
            equations: Vec::new(),
            basis: names.into_iter().map(|s| Arc::from(s.as_ref())).collect(),
            products: BTreeMap::new(),
        }
    }

    /// Data with the same parameters and restrictions, a new basis and zero
    /// multiplication.
    pub fn with_same_parameters<S: AsRef<str>>(&self, names: impl IntoIterator<Item = S>) -> Self {
        Self {
            params: self.params.clone(),
            nonzero: self.nonzero.clone(),
            equations: self.equations.clone(),
            basis: names.into_iter().map(|s| Arc::from(s.as_ref())).collect(),
            products: BTreeMap::new(),
        }
    }

    /// Adds a parameter with the given display name.
    pub fn add_param(&mut self, name: &str) -> Param {
        let p = self.next_param_id();
        self.params.insert(p, Arc::from(name));
        p
    }

    /// Adds a parameter with a generated name `<prefix><id>`.
    pub fn fresh_param(&mut self, prefix: &str) -> Param {
        let p = self.next_param_id();
        self.params.insert(p, Arc::from(format!("{prefix}{}", p.0)));
        p
    }

    fn next_param_id(&self) -> Param {
        Param(self.params.keys().next_back().map_or(0, |p| p.0 + 1))
    }

    pub fn add_restriction(&mut self, r: Restriction) {
        match r {
            Restriction::NonZero(p) => {
                self.nonzero.insert(p);
            }
            Restriction::Equation(poly) => self.push_equation(poly),
        }
    }

    pub fn add_nonzero(&mut self, p: Param) {
        self.nonzero.insert(p);
    }

    pub fn add_equation(&mut self, poly: ParamPoly) {
        self.push_equation(poly);
    }

    fn push_equation(&mut self, poly: ParamPoly) {
        if poly.is_zero() {
            return;
        }
        let poly = poly.normalized_sign();
        if let Err(pos) = self.equations.binary_search(&poly) {
            self.equations.insert(pos, poly);
        }
    }

    /// Sets `R(x, y, z)`; an empty factor list means the coefficient is 1.
    pub fn set_product(&mut self, x: usize, y: usize, z: usize, mut factors: Vec<Param>) {
        factors.sort_unstable();
        factors.dedup();
        self.products
            .insert((x as u16, y as u16, z as u16), factors);
    }

    pub fn clear_product(&mut self, x: usize, y: usize, z: usize) {
        self.products.remove(&(x as u16, y as u16, z as u16));
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis_name(&self, i: usize) -> &str {
        &self.basis[i]
    }

    pub fn basis_names(&self) -> impl Iterator<Item = &str> {
        self.basis.iter().map(|s| s.as_ref())
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.basis.iter().position(|b| b.as_ref() == name)
    }

    pub fn params(&self) -> impl Iterator<Item = Param> + '_ {
        self.params.keys().copied()
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn param_name(&self, p: Param) -> String {
        self.params
            .get(&p)
            .map(|s| s.to_string())
            .unwrap_or_else(|| format!("?{}", p.0))
    }

    pub fn nonzero(&self) -> &BTreeSet<Param> {
        &self.nonzero
    }

    pub fn equations(&self) -> &[ParamPoly] {
        &self.equations
    }

    pub fn restrictions(&self) -> Vec<Restriction> {
        self.nonzero
            .iter()
            .map(|&p| Restriction::NonZero(p))
            .chain(self.equations.iter().cloned().map(Restriction::Equation))
            .collect()
    }

    /// `R(x, y, z)`, or `None` for zero.
    pub fn product(&self, x: usize, y: usize, z: usize) -> Option<&[Param]> {
        self.products
            .get(&(x as u16, y as u16, z as u16))
            .map(|v| v.as_slice())
    }

    /// All nonzero structure constants `(x, y, z, factors)` in lexicographic order.
    pub fn products(&self) -> impl Iterator<Item = (usize, usize, usize, &[Param])> {
        self.products
            .iter()
            .map(|(&(x, y, z), f)| (x as usize, y as usize, z as usize, f.as_slice()))
    }

    pub fn num_products(&self) -> usize {
        self.products.len()
    }

    pub fn is_zero_multiplication(&self) -> bool {
        self.products.is_empty()
    }

    /// `P(x, y, z)`: the structure constant as a polynomial.
    pub fn product_poly(&self, x: usize, y: usize, z: usize) -> ParamPoly {
        match self.product(x, y, z) {
            None => ParamPoly::zero(),
            Some(f) => ParamPoly::product_of(f),
        }
    }

    /// Checks the ordering condition and that all symbols are declared.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        for (x, y, z, f) in self.products() {
            if x >= n || y >= n || z >= n {
                return Err(CoreError::MalformedData(format!(
                    "product ({x},{y},{z}) refers to a basis position outside 0..{n}"
                )));
            }
            if z <= x || z <= y {
                return Err(CoreError::MalformedData(format!(
                    "{}*{} has a component along {}, which does not come after both factors",
                    self.basis[x], self.basis[y], self.basis[z]
                )));
            }
            for p in f {
                if !self.params.contains_key(p) {
                    return Err(CoreError::MalformedData(format!(
                        "structure constant of {}*{} -> {} uses undeclared parameter {}",
                        self.basis[x], self.basis[y], self.basis[z], p.0
                    )));
                }
            }
        }
        for p in &self.nonzero {
            if !self.params.contains_key(p) {
                return Err(CoreError::MalformedData(format!(
                    "inequation refers to undeclared parameter {}",
                    p.0
                )));
            }
        }
        for eq in &self.equations {
            for p in eq.vars() {
                if !self.params.contains_key(&p) {
                    return Err(CoreError::MalformedData(format!(
                        "equation refers to undeclared parameter {}",
                        p.0
                    )));
                }
            }
        }
        let mut seen = BTreeSet::new();
        for b in &self.basis {
            if !seen.insert(b.as_ref()) {
                return Err(CoreError::MalformedData(format!(
                    "duplicate basis name {b}"
                )));
            }
        }
        Ok(())
    }

    /// A parameter used in a structure constant without a matching inequation,
    /// i.e. a witness that the nonzero condition fails.
    pub fn nonzero_violation(&self) -> Option<Param> {
        self.products
            .values()
            .flat_map(|f| f.iter())
            .find(|p| !self.nonzero.contains(p))
            .copied()
    }

    /// Every parameter in a structure constant carries an inequation.
    pub fn satisfies_nonzero_condition(&self) -> bool {
        self.nonzero_violation().is_none()
    }

    /// `x` is killed on both sides: `R(x, u, .) = R(u, x, .) = 0` for all `u`.
    pub fn annihilates(&self, x: usize) -> bool {
        !self
            .products
            .keys()
            .any(|&(a, b, _)| a as usize == x || b as usize == x)
    }

    /// Some product has a component along `z`.
    pub fn is_hit(&self, z: usize) -> bool {
        self.products.keys().any(|&(_, _, c)| c as usize == z)
    }

    /// Removes basis vector `i`, dropping every structure constant that
    /// involves it.
    pub fn remove_basis(&self, i: usize) -> AlgebraicData {
        self.remove_basis_set(&[i])
    }

    /// Removes several basis vectors at once.
    pub fn remove_basis_set(&self, drop: &[usize]) -> AlgebraicData {
        let n = self.dim();
        let mut keep = vec![true; n];
        for &d in drop {
            keep[d] = false;
        }
        let mut new_index = vec![u16::MAX; n];
        let mut basis = Vec::with_capacity(n);
        for i in 0..n {
            if keep[i] {
                new_index[i] = basis.len() as u16;
                basis.push(self.basis[i].clone());
            }
        }
        let products = self
            .products
            .iter()
            .filter(|(&(x, y, z), _)| keep[x as usize] && keep[y as usize] && keep[z as usize])
            .map(|(&(x, y, z), f)| {
                (
                    (
                        new_index[x as usize],
                        new_index[y as usize],
                        new_index[z as usize],
                    ),
                    f.clone(),
                )
            })
            .collect();
        AlgebraicData {
            params: self.params.clone(),
            nonzero: self.nonzero.clone(),
            equations: self.equations.clone(),
            basis,
            products,
        }
    }

    /// Sets parameter `a` to zero: structure constants containing it vanish,
    /// monomials containing it are dropped, and `a` leaves `Q`.
    pub fn set_param_zero(&self, a: Param) -> AlgebraicData {
        let mut out = self.clone();
        out.products.retain(|_, f| !f.contains(&a));
        out.nonzero.remove(&a);
        out.params.remove(&a);
        let eqs = std::mem::take(&mut out.equations);
        for e in eqs {
            out.push_equation(e.set_zero(a));
        }
        out
    }

    /// Normalises the restriction set. Returns `None` when the restrictions
    /// are visibly contradictory (an equation `c = 0` with `c = +-1`, or a
    /// monomial `+-prod a_i = 0` with every `a_i` nonzero). Parameters forced
    /// to zero by a monomial equation are substituted.
    pub fn simplify_restrictions(&self) -> Option<AlgebraicData> {
        let mut cur = self.clone();
        loop {
            let mut forced = None;
            for eq in &cur.equations {
                if let Some((m, c)) = eq.as_monomial() {
                    if !c.abs().is_one() {
                        continue;
                    }
                    let free: Vec<Param> = m.vars().filter(|p| !cur.nonzero.contains(p)).collect();
                    match free.len() {
                        0 => return None,
                        1 => {
                            forced = Some(free[0]);
                            break;
                        }
                        _ => {}
                    }
                }
            }
            match forced {
                Some(a) => cur = cur.set_param_zero(a),
                None => return Some(cur),
            }
        }
    }

    /// Splits the family by the vanishing of parameters until every parameter
    /// in a structure constant carries an inequation. Cases whose restrictions
    /// become visibly contradictory are dropped.
    pub fn split_into_cases(&self) -> Vec<AlgebraicData> {
        let mut out = Vec::new();
        self.split_rec(&mut out);
        out
    }

    fn split_rec(&self, out: &mut Vec<AlgebraicData>) {
        let Some(a) = self.nonzero_violation() else {
            out.push(self.clone());
            return;
        };
        let mut with_nonzero = self.clone();
        with_nonzero.nonzero.insert(a);
        if let Some(d) = with_nonzero.simplify_restrictions() {
            d.split_rec(out);
        }
        if let Some(d) = self.set_param_zero(a).simplify_restrictions() {
            d.split_rec(out);
        }
    }

    fn check_substitution(&self, h: &Substitution, field: &Field) -> Result<()> {
        for p in self.params.keys() {
            if !h.contains_key(p) {
                return Err(CoreError::BadSubstitution(format!(
                    "no value for parameter {}",
                    self.param_name(*p)
                )));
            }
        }
        for p in &self.nonzero {
            if h[p] == 0 {
                return Err(CoreError::BadSubstitution(format!(
                    "{} = 0 violates {} != 0",
                    self.param_name(*p),
                    self.param_name(*p)
                )));
            }
        }
        for eq in &self.equations {
            if eval_poly(eq, h, field) != 0 {
                return Err(CoreError::BadSubstitution(format!(
                    "equation {} = 0 fails",
                    eq.fmt_with(&|p| self.param_name(p))
                )));
            }
        }
        Ok(())
    }

    /// The algebra `J(A, h)` over `F_q`, with associativity checked exhaustively.
    pub fn instantiate(&self, h: &Substitution, field: &Field) -> Result<ConcreteAlgebra> {
        self.check_substitution(h, field)?;
        let n = self.dim();
        let mut table = vec![0 as Fq; n * n * n];
        for (x, y, z, f) in self.products() {
            let c = f.iter().fold(1 as Fq, |acc, p| field.mul(acc, h[p]));
            table[(x * n + y) * n + z] = c;
        }
        ConcreteAlgebra::new(field.clone(), n, table)
    }

    /// All substitutions in `V(Q, E, q)`, by exhaustive enumeration.
    pub fn enumerate_substitutions(&self, field: &Field, cap: usize) -> Result<Vec<Substitution>> {
        enumerate_solutions(
            &self.params.keys().copied().collect::<Vec<_>>(),
            &self.nonzero,
            &self.equations,
            field,
            cap,
        )
    }

    /// A key identifying the data up to renaming of parameters. Equal keys
    /// imply isomorphic data; the converse need not hold.
    pub fn canonical_key(&self) -> Vec<i64> {
        let mut rename: HashMap<Param, u32> = HashMap::new();
        let mut next = 0u32;
        let mut visit = |p: Param, rename: &mut HashMap<Param, u32>| {
            rename.entry(p).or_insert_with(|| {
                next += 1;
                next - 1
            });
        };
        for f in self.products.values() {
            for &p in f {
                visit(p, &mut rename);
            }
        }
        for eq in &self.equations {
            for p in eq.vars() {
                visit(p, &mut rename);
            }
        }
        for &p in &self.nonzero {
            visit(p, &mut rename);
        }
        let unused = self
            .params
            .keys()
            .filter(|p| !rename.contains_key(p))
            .count();

        let mut key = Vec::with_capacity(8 + 5 * self.products.len());
        key.push(self.dim() as i64);
        key.push(self.products.len() as i64);
        for (&(x, y, z), f) in &self.products {
            key.push(x as i64);
            key.push(y as i64);
            key.push(z as i64);
            let mut ps: Vec<u32> = f.iter().map(|p| rename[p]).collect();
            ps.sort_unstable();
            key.push(ps.len() as i64);
            key.extend(ps.into_iter().map(|v| v as i64));
        }
        let mut nz: Vec<u32> = self.nonzero.iter().map(|p| rename[p]).collect();
        nz.sort_unstable();
        key.push(-1);
        key.extend(nz.into_iter().map(|v| v as i64));
        key.push(-2);
        key.push(unused as i64);
        let mut eqs: Vec<ParamPoly> = self
            .equations
            .iter()
            .map(|e| e.rename(|p| Param(rename[&p])).normalized_sign())
            .collect();
        eqs.sort();
        for e in eqs {
            key.push(-3);
            for (m, c) in e.terms() {
                key.push(-4);
                key.push(c.to_i64().unwrap_or(i64::MIN));
                for &(p, ex) in m.factors() {
                    key.push(p.0 as i64);
                    key.push(ex as i64);
                }
            }
        }
        key
    }

    /// Keeps only the parameter declarations (and restrictions), dropping the
    /// algebra. Useful for counting records.
    pub fn parameter_system(&self) -> ParameterSystem {
        ParameterSystem {
            params: self.params.clone(),
            nonzero: self.nonzero.clone(),
            equations: self.equations.clone(),
        }
    }
}

/// A parameter set with its restrictions, detached from any algebra:
/// the `(Q, E)` part of algebraic data.
#[derive(Clone, PartialEq, Eq)]
pub struct ParameterSystem {
    params: BTreeMap<Param, Arc<str>>,
    nonzero: BTreeSet<Param>,
    equations: Vec<ParamPoly>,
}

impl ParameterSystem {
    pub fn new() -> Self {
        Self {
            params: BTreeMap::new(),
            nonzero: BTreeSet::new(),
            equations: Vec::new(),
        }
    }

    pub fn add_param(&mut self, name: &str) -> Param {
        let p = Param(self.params.keys().next_back().map_or(0, |p| p.0 + 1));
        self.params.insert(p, Arc::from(name));
        p
    }

    pub fn add_nonzero(&mut self, p: Param) {
        self.nonzero.insert(p);
    }

    pub fn add_equation(&mut self, e: ParamPoly) {
        if e.is_zero() {
            return;
        }
        let e = e.normalized_sign();
        if !self.equations.contains(&e) {
            self.equations.push(e);
            self.equations.sort();
        }
    }

    pub fn params(&self) -> Vec<Param> {
        self.params.keys().copied().collect()
    }

    pub fn param_name(&self, p: Param) -> String {
        self.params
            .get(&p)
            .map(|s| s.to_string())
            .unwrap_or_else(|| format!("?{}", p.0))
    }

    pub fn nonzero(&self) -> &BTreeSet<Param> {
        &self.nonzero
    }

    pub fn equations(&self) -> &[ParamPoly] {
        &self.equations
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn enumerate(&self, field: &Field, cap: usize) -> Result<Vec<Substitution>> {
        enumerate_solutions(&self.params(), &self.nonzero, &self.equations, field, cap)
    }

    /// `|V(Q, E, q)|` by enumeration.
    pub fn count_by_enumeration(&self, field: &Field, cap: usize) -> Result<u64> {
        Ok(self.enumerate(field, cap)?.len() as u64)
    }

    pub fn restrictions(&self) -> Vec<Restriction> {
        self.nonzero
            .iter()
            .map(|&p| Restriction::NonZero(p))
            .chain(self.equations.iter().cloned().map(Restriction::Equation))
            .collect()
    }

    pub(crate) fn from_parts(
        params: BTreeMap<Param, Arc<str>>,
        nonzero: BTreeSet<Param>,
        equations: Vec<ParamPoly>,
    ) -> Self {
        let mut s = Self {
            params,
            nonzero,
            equations: Vec::new(),
        };
        for e in equations {
            s.add_equation(e);
        }
        s
    }

    pub(crate) fn params_map(&self) -> &BTreeMap<Param, Arc<str>> {
        &self.params
    }
}

impl Default for ParameterSystem {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for ParameterSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |p: Param| self.param_name(p);
        write!(f, "Q={{")?;
        let names: Vec<String> = self.params.values().map(|s| s.to_string()).collect();
        write!(f, "{}}}", names.join(","))?;
        write!(f, " E={{")?;
        let mut parts: Vec<String> = self
            .nonzero
            .iter()
            .map(|&p| format!("{}!=0", name(p)))
            .collect();
        parts.extend(
            self.equations
                .iter()
                .map(|e| format!("{}=0", e.fmt_with(&name))),
        );
        write!(f, "{}}}", parts.join(", "))
    }
}

fn eval_poly(e: &ParamPoly, h: &Substitution, field: &Field) -> Fq {
    e.eval_with(
        |p| h[&p],
        |c| field.from_int(c),
        |a, b| field.add(a, b),
        |a, b| field.mul(a, b),
        0,
    )
}

fn enumerate_solutions(
    params: &[Param],
    nonzero: &BTreeSet<Param>,
    equations: &[ParamPoly],
    field: &Field,
    cap: usize,
) -> Result<Vec<Substitution>> {
    if params.len() > cap {
        return Err(CoreError::TooLarge(format!(
            "{} parameters exceed the enumeration cap {cap}",
            params.len()
        )));
    }
    let q = field.order() as usize;
    let total = q.pow(params.len() as u32);
    let mut out = Vec::new();
    let mut h: Substitution = params.iter().map(|&p| (p, 0)).collect();
    'outer: for idx in 0..total {
        let mut r = idx;
        for &p in params {
            let v = (r % q) as Fq;
            r /= q;
            if v == 0 && nonzero.contains(&p) {
                continue 'outer;
            }
            h.insert(p, v);
        }
        if equations.iter().all(|e| eval_poly(e, &h, field) == 0) {
            out.push(h.clone());
        }
    }
    Ok(out)
}

impl fmt::Debug for AlgebraicData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:?}", self.parameter_system())?;
        let names: Vec<&str> = self.basis.iter().map(|s| s.as_ref()).collect();
        writeln!(f, "B=[{}]", names.join(" < "))?;
        for (x, y, z, fs) in self.products() {
            let fnames: Vec<String> = fs.iter().map(|&p| self.param_name(p)).collect();
            writeln!(
                f,
                "  {}*{} -> {} [{}]",
                self.basis[x],
                self.basis[y],
                self.basis[z],
                fnames.join("*")
            )?;
        }
        Ok(())
    }
}

/// A nilpotent algebra over a small field, given by its full multiplication
/// table: `table[(i*dim + j)*dim + k]` is the coefficient of `e_k` in `e_i e_j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConcreteAlgebra {
    field: Field,
    dim: usize,
    table: Vec<Fq>,
}

impl ConcreteAlgebra {
    /// Builds the algebra, checking strict upper-triangularity and
    /// associativity on all basis triples.
    pub fn new(field: Field, dim: usize, table: Vec<Fq>) -> Result<Self> {
        assert_eq!(table.len(), dim * dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..=i.max(j).min(dim - 1) {
                    if table[(i * dim + j) * dim + k] != 0 {
                        return Err(CoreError::MalformedData(format!(
                            "e{i}*e{j} has a component along e{k}"
                        )));
                    }
                }
            }
        }
        let alg = Self { field, dim, table };
        for i in 0..dim {
            for j in 0..dim {
                let ij = alg.mul_basis(i, j);
                for k in 0..dim {
                    let left = alg.mul_vec_basis(&ij, k);
                    let jk = alg.mul_basis(j, k);
                    let right = alg.mul_basis_vec(i, &jk);
                    if left != right {
                        return Err(CoreError::NotAssociative(format!(
                            "(e{i} e{j}) e{k} != e{i} (e{j} e{k})"
                        )));
                    }
                }
            }
        }
        Ok(alg)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeff(&self, i: usize, j: usize, k: usize) -> Fq {
        self.table[(i * self.dim + j) * self.dim + k]
    }

    fn mul_basis(&self, i: usize, j: usize) -> Vec<Fq> {
        let n = self.dim;
        self.table[(i * n + j) * n..(i * n + j + 1) * n].to_vec()
    }

    fn mul_vec_basis(&self, v: &[Fq], k: usize) -> Vec<Fq> {
        let mut e = vec![0; self.dim];
        e[k] = 1;
        self.mul(v, &e)
    }

    fn mul_basis_vec(&self, i: usize, v: &[Fq]) -> Vec<Fq> {
        let mut e = vec![0; self.dim];
        e[i] = 1;
        self.mul(&e, v)
    }

    /// The algebra product of two coordinate vectors.
    pub fn mul(&self, a: &[Fq], b: &[Fq]) -> Vec<Fq> {
        let n = self.dim;
        let f = &self.field;
        let mut out = vec![0; n];
        for i in 0..n {
            if a[i] == 0 {
                continue;
            }
            for j in 0..n {
                if b[j] == 0 {
                    continue;
                }
                let s = f.mul(a[i], b[j]);
                let row = &self.table[(i * n + j) * n..(i * n + j + 1) * n];
                for k in (i.max(j) + 1)..n {
                    if row[k] != 0 {
                        out[k] = f.add(out[k], f.mul(s, row[k]));
                    }
                }
            }
        }
        out
    }

    /// Basis vector `k` annihilates the algebra on both sides.
    pub fn is_annihilator(&self, k: usize) -> bool {
        (0..self.dim)
            .all(|i| (0..self.dim).all(|j| self.coeff(k, i, j) == 0 && self.coeff(i, k, j) == 0))
    }

    /// The quotient by the span of basis vector `k` (which must be an ideal,
    /// e.g. an annihilator): drops coordinate `k`.
    pub fn quotient_by_basis(&self, k: usize) -> ConcreteAlgebra {
        let n = self.dim;
        let keep: Vec<usize> = (0..n).filter(|&i| i != k).collect();
        let m = keep.len();
        let mut table = vec![0; m * m * m];
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                for (c, &l) in keep.iter().enumerate() {
                    table[(a * m + b) * m + c] = self.coeff(i, j, l);
                }
            }
        }
        ConcreteAlgebra {
            field: self.field.clone(),
            dim: m,
            table,
        }
    }

    /// Applies a permutation of basis vectors: new basis vector `perm[i]` is
    /// old basis vector `i`. Does not re-check triangularity.
    pub fn permuted(&self, perm: &[usize]) -> ConcreteAlgebra {
        let n = self.dim;
        let mut table = vec![0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    table[(perm[i] * n + perm[j]) * n + perm[k]] = self.coeff(i, j, k);
                }
            }
        }
        ConcreteAlgebra {
            field: self.field.clone(),
            dim: n,
            table,
        }
    }
}

// JSON format -------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TermJson {
    coeff: i64,
    monomial: Vec<(String, u32)>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RestrictionJson {
    Nonzero(String),
    Equation(Vec<TermJson>),
}

#[derive(Serialize, Deserialize)]
struct ProductJson {
    x: String,
    y: String,
    z: String,
    factors: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct AlgebraicDataJson {
    params: Vec<String>,
    restrictions: Vec<RestrictionJson>,
    basis: Vec<String>,
    products: Vec<ProductJson>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct ParameterSystemJson {
    params: Vec<String>,
    restrictions: Vec<RestrictionJson>,
}

fn restriction_to_json(r: &Restriction, name: &dyn Fn(Param) -> String) -> RestrictionJson {
    match r {
        Restriction::NonZero(p) => RestrictionJson::Nonzero(name(*p)),
        Restriction::Equation(e) => RestrictionJson::Equation(
            e.terms()
                .map(|(m, c)| TermJson {
                    coeff: c.to_i64().expect("equation coefficient fits in i64"),
                    monomial: m.factors().iter().map(|&(p, ex)| (name(p), ex)).collect(),
                })
                .collect(),
        ),
    }
}

fn restriction_from_json(
    r: RestrictionJson,
    lookup: &dyn Fn(&str) -> std::result::Result<Param, String>,
) -> std::result::Result<Restriction, String> {
    Ok(match r {
        RestrictionJson::Nonzero(n) => Restriction::NonZero(lookup(&n)?),
        RestrictionJson::Equation(terms) => {
            let mut poly = ParamPoly::zero();
            for t in terms {
                let mut m = Monomial::one();
                for (n, ex) in t.monomial {
                    let p = lookup(&n)?;
                    for _ in 0..ex {
                        m = m.mul(&Monomial::var(p));
                    }
                }
                poly.add_term(m, BigInt::from(t.coeff));
            }
            Restriction::Equation(poly)
        }
    })
}

impl Serialize for AlgebraicData {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let name = |p: Param| self.param_name(p);
        AlgebraicDataJson {
            params: self.params.values().map(|s| s.to_string()).collect(),
            restrictions: self
                .restrictions()
                .iter()
                .map(|r| restriction_to_json(r, &name))
                .collect(),
            basis: self.basis.iter().map(|s| s.to_string()).collect(),
            products: self
                .products()
                .map(|(x, y, z, f)| ProductJson {
                    x: self.basis[x].to_string(),
                    y: self.basis[y].to_string(),
                    z: self.basis[z].to_string(),
                    factors: f.iter().map(|&p| name(p)).collect(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AlgebraicData {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let raw = AlgebraicDataJson::deserialize(d)?;
        let mut data = AlgebraicData::with_basis(&raw.basis);
        let mut by_name = HashMap::new();
        for n in &raw.params {
            if by_name.contains_key(n) {
                return Err(D::Error::custom(format!("duplicate parameter {n}")));
            }
            by_name.insert(n.clone(), data.add_param(n));
        }
        let lookup = |n: &str| {
            by_name
                .get(n)
                .copied()
                .ok_or_else(|| format!("unknown parameter {n}"))
        };
        for r in raw.restrictions {
            data.add_restriction(restriction_from_json(r, &lookup).map_err(D::Error::custom)?);
        }
        for p in raw.products {
            let pos = |n: &str| {
                data.position(n)
                    .ok_or_else(|| D::Error::custom(format!("unknown basis element {n}")))
            };
            let (x, y, z) = (pos(&p.x)?, pos(&p.y)?, pos(&p.z)?);
            let factors = p
                .factors
                .iter()
                .map(|n| lookup(n))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(D::Error::custom)?;
            data.set_product(x, y, z, factors);
        }
        data.validate().map_err(D::Error::custom)?;
        Ok(data)
    }
}

impl Serialize for ParameterSystem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let name = |p: Param| self.param_name(p);
        ParameterSystemJson {
            params: self.params.values().map(|s| s.to_string()).collect(),
            restrictions: self
                .restrictions()
                .iter()
                .map(|r| restriction_to_json(r, &name))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ParameterSystem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let raw = ParameterSystemJson::deserialize(d)?;
        let mut sys = ParameterSystem::new();
        let mut by_name = HashMap::new();
        for n in &raw.params {
            by_name.insert(n.clone(), sys.add_param(n));
        }
        let lookup = |n: &str| {
            by_name
                .get(n)
                .copied()
                .ok_or_else(|| format!("unknown parameter {n}"))
        };
        for r in raw.restrictions {
            match restriction_from_json(r, &lookup).map_err(D::Error::custom)? {
                Restriction::NonZero(p) => sys.add_nonzero(p),
                Restriction::Equation(e) => sys.add_equation(e),
            }
        }
        Ok(sys)
    }
}

/// Integer lift of a field element used when pinning a parameter to a value
/// by an equation: 0, 1, and -1 are units or zero in every characteristic.
pub fn unit_lift(v: Fq, field: &Field) -> Option<i64> {
    if v == 0 {
        Some(0)
    } else if v == 1 {
        Some(1)
    } else if field.add(v, 1) == 0 {
        Some(-1)
    } else {
        None
    }
}

impl AlgebraicData {
    /// The member of the family at substitution `h`, encoded as data whose
    /// parameters are pinned by equations `a - h(a) = 0`. Only values with a
    /// unit lift (0, 1, -1) are supported.
    pub fn specialize(&self, h: &Substitution, field: &Field) -> Result<AlgebraicData> {
        self.check_substitution(h, field)?;
        let mut out = self.clone();
        for (&p, &v) in h {
            let lift = unit_lift(v, field).ok_or_else(|| {
                CoreError::BadSubstitution(format!(
                    "value {v} of {} has no unit lift",
                    self.param_name(p)
                ))
            })?;
            if lift == 0 {
                out = out.set_param_zero(p);
            } else {
                out.add_equation(&ParamPoly::var(p) - &ParamPoly::constant(lift));
            }
        }
        Ok(out)
    }
}

/// Convenience: a signed integer as a field element.
pub fn int_to_field(n: i64, field: &Field) -> Fq {
    field.from_int(&BigInt::from(n))
}

#[allow(dead_code)]
fn is_unit(c: &BigInt) -> bool {
    c.abs().is_one() && !c.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `T_3`: e12 < e23 < e13 with e12 * e23 = e13.
    fn t3() -> AlgebraicData {
        let mut a = AlgebraicData::with_basis(["e12", "e23", "e13"]);
        a.set_product(0, 1, 2, vec![]);
        a
    }

    #[test]
    fn validate_examples() {
        assert!(t3().validate().is_ok());

        let mut bad = AlgebraicData::with_basis(["e12", "e23", "e13"]);
        bad.set_product(2, 0, 1, vec![]);
        assert!(matches!(bad.validate(), Err(CoreError::MalformedData(_))));

        let mut unknown = t3();
        unknown.set_product(0, 1, 2, vec![Param(0)]);
        assert!(matches!(
            unknown.validate(),
            Err(CoreError::MalformedData(_))
        ));
    }

    #[test]
    fn split_examples() {
        // already fine
        let mut a = t3();
        let p = a.add_param("a");
        a.set_product(0, 1, 2, vec![p]);
        a.add_nonzero(p);
        assert_eq!(a.split_into_cases(), vec![a.clone()]);

        // one unrestricted parameter
        let mut b = t3();
        let p = b.add_param("a");
        b.set_product(0, 1, 2, vec![p]);
        let cases = b.split_into_cases();
        assert_eq!(cases.len(), 2);
        assert!(cases[0].nonzero().contains(&p));
        assert_eq!(cases[0].num_products(), 1);
        assert_eq!(cases[1].num_params(), 0);
        assert!(cases[1].is_zero_multiplication());
        assert!(cases.iter().all(|c| c.satisfies_nonzero_condition()));
    }

    fn two_param_data() -> AlgebraicData {
        let mut d = AlgebraicData::with_basis(["u", "v", "w", "x", "y"]);
        let a = d.add_param("a");
        let b = d.add_param("b");
        d.set_product(0, 1, 3, vec![a]);
        d.set_product(1, 2, 4, vec![b]);
        d
    }

    #[test]
    fn split_partitions_substitutions() {
        let d = two_param_data();
        assert!(d.validate().is_ok());
        let cases = d.split_into_cases();
        assert_eq!(cases.len(), 4);
        for q in [2, 3, 4, 5] {
            let f = Field::new(q).unwrap();
            let total = d.enumerate_substitutions(&f, 8).unwrap().len();
            let parts: usize = cases
                .iter()
                .map(|c| c.enumerate_substitutions(&f, 8).unwrap().len())
                .sum();
            assert_eq!(total, parts, "q={q}");
        }
    }

    #[test]
    fn instantiate_examples() {
        let f2 = Field::new(2).unwrap();
        let alg = t3().instantiate(&Substitution::new(), &f2).unwrap();
        assert_eq!(alg.dim(), 3);
        assert_eq!(alg.coeff(0, 1, 2), 1);
        assert_eq!(alg.coeff(1, 0, 2), 0);

        // y^2 = a z: x F_2[x]/(x^3)
        let mut core = AlgebraicData::with_basis(["y", "z"]);
        let a = core.add_param("a");
        core.add_nonzero(a);
        core.set_product(0, 0, 1, vec![a]);
        let h: Substitution = [(a, 1)].into_iter().collect();
        let k = core.instantiate(&h, &f2).unwrap();
        assert_eq!(k.mul(&[1, 0], &[1, 0]), vec![0, 1]);
        assert_eq!(k.mul(&[1, 1], &[0, 1]), vec![0, 0]);

        let bad: Substitution = [(a, 0)].into_iter().collect();
        assert!(matches!(
            core.instantiate(&bad, &f2),
            Err(CoreError::BadSubstitution(_))
        ));
    }

    #[test]
    fn non_associative_table_is_rejected() {
        // e0 e1 = e2, e2 e3 = e4, but e1 e3 = 0 and e0 e? = 0: (e0 e1) e3 = e4 != 0 = e0 (e1 e3)
        let mut d = AlgebraicData::with_basis(["a", "b", "c", "d", "e"]);
        d.set_product(0, 1, 2, vec![]);
        d.set_product(2, 3, 4, vec![]);
        let f = Field::new(2).unwrap();
        assert!(matches!(
            d.instantiate(&Substitution::new(), &f),
            Err(CoreError::NotAssociative(_))
        ));
    }

    #[test]
    fn enumerate_examples() {
        let f3 = Field::new(3).unwrap();
        let mut d = AlgebraicData::with_basis(Vec::<String>::new());
        assert_eq!(d.enumerate_substitutions(&f3, 8).unwrap().len(), 1);
        let a = d.add_param("a");
        d.add_nonzero(a);
        let sols = d.enumerate_substitutions(&f3, 8).unwrap();
        assert_eq!(sols.len(), 2);
        assert!(sols.iter().all(|h| h[&a] != 0));

        let mut e = AlgebraicData::with_basis(Vec::<String>::new());
        let a = e.add_param("a");
        let b = e.add_param("b");
        e.add_equation(&(&ParamPoly::var(a) * &ParamPoly::var(b)) - &ParamPoly::constant(1));
        let sols = e.enumerate_substitutions(&f3, 8).unwrap();
        let pairs: Vec<(Fq, Fq)> = sols.iter().map(|h| (h[&a], h[&b])).collect();
        assert_eq!(pairs, vec![(1, 1), (2, 2)]);

        let mut big = AlgebraicData::with_basis(Vec::<String>::new());
        for i in 0..9 {
            big.add_param(&format!("p{i}"));
        }
        assert!(matches!(
            big.enumerate_substitutions(&f3, 8),
            Err(CoreError::TooLarge(_))
        ));
    }

    #[test]
    fn instantiated_algebras_are_nilpotent() {
        let d = two_param_data();
        for q in [2, 3] {
            let f = Field::new(q).unwrap();
            for h in d.enumerate_substitutions(&f, 8).unwrap() {
                let alg = d.instantiate(&h, &f).unwrap();
                // any product of dim+1 elements vanishes
                let n = alg.dim();
                let all_ones = vec![1; n];
                let mut acc = all_ones.clone();
                for _ in 0..n {
                    acc = alg.mul(&acc, &all_ones);
                }
                assert!(acc.iter().all(|&c| c == 0));
            }
        }
    }

    #[test]
    fn json_round_trip_and_shape() {
        let mut d = two_param_data();
        let a = Param(0);
        d.add_nonzero(a);
        d.add_equation(&(&ParamPoly::var(a) * &ParamPoly::var(Param(1))) - &ParamPoly::constant(1));
        let s = serde_json::to_value(&d).unwrap();
        assert_eq!(s["params"], serde_json::json!(["a", "b"]));
        assert_eq!(s["restrictions"][0], serde_json::json!({"nonzero": "a"}));
        assert_eq!(
            s["products"][0],
            serde_json::json!({"x": "u", "y": "v", "z": "x", "factors": ["a"]})
        );
        let back: AlgebraicData = serde_json::from_value(s).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn canonical_key_ignores_renaming() {
        let mut d1 = AlgebraicData::with_basis(["x", "y", "z"]);
        let _unused = d1.add_param("u");
        let a = d1.add_param("a");
        d1.add_nonzero(a);
        d1.set_product(0, 1, 2, vec![a]);
        let mut d2 = AlgebraicData::with_basis(["p", "q", "r"]);
        let b = d2.add_param("b");
        let _unused = d2.add_param("v");
        d2.add_nonzero(b);
        d2.set_product(0, 1, 2, vec![b]);
        assert_eq!(d1.canonical_key(), d2.canonical_key());
        d2.add_nonzero(Param(1));
        assert_ne!(d1.canonical_key(), d2.canonical_key());
    }

    #[test]
    fn simplify_detects_contradiction_and_forced_zero() {
        let mut d = AlgebraicData::with_basis(["x", "y", "z"]);
        let a = d.add_param("a");
        let b = d.add_param("b");
        d.add_nonzero(a);
        d.set_product(0, 1, 2, vec![b]);
        d.add_equation(&ParamPoly::var(a) * &ParamPoly::var(b));
        let s = d.simplify_restrictions().unwrap();
        assert!(s.is_zero_multiplication());
        assert_eq!(s.num_params(), 1);

        let mut c = AlgebraicData::with_basis(["x"]);
        let a = c.add_param("a");
        c.add_nonzero(a);
        c.add_equation(ParamPoly::var(a));
        assert!(c.simplify_restrictions().is_none());
    }
}
