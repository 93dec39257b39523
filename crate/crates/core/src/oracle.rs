//! Brute-force ground truth for small instances: conjugacy classes of explicit
//! algebra groups `1 + J` over `F_q`, and orbits of pattern groups on vectors.
//!
//! Nothing here uses the contraction machinery, so it can check it.

use num_bigint::BigInt;
use serde::Serialize;

use crate::algdata::{AlgebraicData, ConcreteAlgebra, Substitution, DEFAULT_ENUMERATION_CAP};
use crate::engine::{Categorisation, Engine, FamilyRef};
use crate::error::{CoreError, Result};
use crate::field::{Field, Fq};
use crate::polyring::{CountPoly, TMode};

/// Default cap on the group order for class counting.
pub const DEFAULT_MAX_ORDER: u64 = 1_000_000;

/// Group order and class counts of `1 + J`, and of `1 + J/<z>` when asked for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassCountReport {
    pub group_order: u64,
    pub class_count: u64,
    pub quotient_class_count: Option<u64>,
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi as usize] = lo;
        true
    }
}

fn group_order(q: u32, dim: usize, max_order: u64) -> Result<u64> {
    let mut n: u64 = 1;
    for _ in 0..dim {
        n = n.saturating_mul(q as u64);
        if n > max_order {
            return Err(CoreError::TooLarge(format!(
                "group of order {q}^{dim} exceeds the cap {max_order}"
            )));
        }
    }
    Ok(n)
}

/// `dim x dim` matrices acting on coordinate vectors, stored row-major.
type Matrix = Vec<Fq>;

fn apply(m: &Matrix, f: &Field, x: &[Fq], out: &mut [Fq]) {
    let n = x.len();
    for (i, o) in out.iter_mut().enumerate() {
        let row = &m[i * n..(i + 1) * n];
        let mut s = 0;
        for j in 0..n {
            if row[j] != 0 && x[j] != 0 {
                s = f.add(s, f.mul(row[j], x[j]));
            }
        }
        *o = s;
    }
}

/// The matrix of `x -> g^{-1} x g` for `g = 1 + a`.
fn conjugation_matrix(alg: &ConcreteAlgebra, a: &[Fq]) -> Matrix {
    let n = alg.dim();
    let f = alg.field();
    // w = (1 + a)^{-1} - 1 = sum_{k >= 1} (-a)^k
    let neg_a: Vec<Fq> = a.iter().map(|&c| f.neg(c)).collect();
    let mut w = neg_a.clone();
    let mut power = neg_a.clone();
    loop {
        power = alg.mul(&power, &neg_a);
        if power.iter().all(|&c| c == 0) {
            break;
        }
        w = w.iter().zip(&power).map(|(&x, &y)| f.add(x, y)).collect();
    }
    let mut m = vec![0; n * n];
    for j in 0..n {
        let mut e = vec![0; n];
        e[j] = 1;
        // (1 + w) e (1 + a) = e + e a + w e + w e a
        let ea = alg.mul(&e, a);
        let y: Vec<Fq> = e.iter().zip(&ea).map(|(&x, &z)| f.add(x, z)).collect();
        let wy = alg.mul(&w, &y);
        for i in 0..n {
            m[i * n + j] = f.add(y[i], wy[i]);
        }
    }
    m
}

fn decode(mut idx: u64, q: u64, out: &mut [Fq]) {
    for c in out.iter_mut() {
        *c = (idx % q) as Fq;
        idx /= q;
    }
}

fn encode(x: &[Fq], q: u64) -> u64 {
    x.iter().rev().fold(0, |acc, &c| acc * q + c as u64)
}

/// Number of conjugacy classes of `1 + J`, with the default order cap.
pub fn class_count(alg: &ConcreteAlgebra) -> Result<u64> {
    class_count_capped(alg, DEFAULT_MAX_ORDER)
}

/// Number of conjugacy classes of `1 + J`. The group is generated by the
/// elements `1 + c b_i` (`c` nonzero, `b_i` a basis vector), so orbits of these
/// generators under conjugation are the classes.
pub fn class_count_capped(alg: &ConcreteAlgebra, max_order: u64) -> Result<u64> {
    let f = alg.field();
    let q = f.order();
    let n = alg.dim();
    let order = group_order(q, n, max_order)?;
    let mut gens = Vec::new();
    for i in 0..n {
        for c in 1..q as Fq {
            let mut a = vec![0; n];
            a[i] = c;
            let m = conjugation_matrix(alg, &a);
            let identity = (0..n).all(|r| (0..n).all(|s| m[r * n + s] == (r == s) as Fq));
            if !identity {
                gens.push(m);
            }
        }
    }
    let mut uf = UnionFind::new(order as usize);
    let mut classes = order;
    let mut x = vec![0; n];
    let mut y = vec![0; n];
    for idx in 0..order {
        decode(idx, q as u64, &mut x);
        for m in &gens {
            apply(m, f, &x, &mut y);
            if uf.union(idx as u32, encode(&y, q as u64) as u32) {
                classes -= 1;
            }
        }
    }
    Ok(classes)
}

/// `|Irr(1 + J, <z>)| = k(1 + J) - k(1 + J/<z>)` for an annihilating basis
/// vector `z`.
pub fn irr_count_at_z(alg: &ConcreteAlgebra, z: usize) -> Result<u64> {
    let r = class_report(alg, Some(z))?;
    Ok(r.class_count - r.quotient_class_count.unwrap_or(0))
}

/// Class counts of `1 + J` and optionally of `1 + J/<z>`.
pub fn class_report(alg: &ConcreteAlgebra, z: Option<usize>) -> Result<ClassCountReport> {
    let quotient_class_count = match z {
        None => None,
        Some(z) => {
            if z >= alg.dim() || !alg.is_annihilator(z) {
                return Err(CoreError::NotCentralIdeal(format!(
                    "basis vector {z} does not annihilate the algebra"
                )));
            }
            Some(class_count(&alg.quotient_by_basis(z))?)
        }
    };
    Ok(ClassCountReport {
        group_order: group_order(alg.field().order(), alg.dim(), u64::MAX)?,
        class_count: class_count(alg)?,
        quotient_class_count,
    })
}

/// The algebra of strictly upper triangular `n x n` matrices over `F_q`, with
/// basis `e_ij` (`i < j`) ordered by `j - i`, then by `i`.
pub fn unitriangular_algebra(n: usize, field: &Field) -> Result<ConcreteAlgebra> {
    let mut basis = Vec::new();
    for d in 1..n {
        for i in 0..n - d {
            basis.push((i, i + d));
        }
    }
    let m = basis.len();
    let pos = |i: usize, j: usize| basis.iter().position(|&b| b == (i, j));
    let mut table = vec![0; m * m * m];
    for (a, &(i, j)) in basis.iter().enumerate() {
        for (b, &(k, l)) in basis.iter().enumerate() {
            if j == k {
                let c = pos(i, l).expect("i < l");
                table[(a * m + b) * m + c] = 1;
            }
        }
    }
    ConcreteAlgebra::new(field.clone(), m, table)
}

/// Size of the orbit of the column vector `u` (indexed by `0..n`) under left
/// multiplication by the group `1 + T_{C,R}(q)`, where `rel` lists the pairs
/// `(i, j)` of the strict partial order `R` on `C = 0..n`.
pub fn pattern_orbit_size(
    n: usize,
    rel: &[(usize, usize)],
    u: &[Fq],
    field: &Field,
) -> Result<u64> {
    let q = field.order() as u64;
    let total = group_order(field.order(), n, DEFAULT_MAX_ORDER)?;
    let mut seen = vec![false; total as usize];
    let start = encode(u, q);
    seen[start as usize] = true;
    let mut stack = vec![start];
    let mut count = 1;
    let mut v = vec![0; n];
    while let Some(idx) = stack.pop() {
        decode(idx, q, &mut v);
        for &(i, j) in rel {
            for c in 1..field.order() as Fq {
                // (1 + c e_ij) v changes coordinate i by c v_j
                let mut w = v.clone();
                w[i] = field.add(w[i], field.mul(c, v[j]));
                let k = encode(&w, q);
                if !seen[k as usize] {
                    seen[k as usize] = true;
                    count += 1;
                    stack.push(k);
                }
            }
        }
    }
    Ok(count)
}

/// Which characters a categorisation is supposed to describe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Subject {
    /// `Irr(1 + J)`.
    All,
    /// `Irr(1 + J, <z>)`.
    AtZ(usize),
}

/// One identity compared at one field: `expected` comes from class counts and
/// group orders, `actual` from the categorisation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityCheck {
    pub instance: String,
    pub q: u32,
    /// `"count"` (`t := 1`) or `"degrees"` (`t^e := q^(2e)`).
    pub identity: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub substitution: Option<String>,
    pub expected: String,
    pub actual: String,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<IdentityCheck>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &IdentityCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
    }
}

/// Oracle totals over all substitutions: the number of characters in the
/// subject and the sum of their squared degrees.
fn oracle_totals(
    a: &AlgebraicData,
    subject: Subject,
    field: &Field,
    subs: &[Substitution],
) -> Result<(BigInt, BigInt)> {
    let mut count = BigInt::from(0);
    let mut weighted = BigInt::from(0);
    for h in subs {
        let (c, w) = oracle_at(a, subject, field, h)?;
        count += c;
        weighted += w;
    }
    Ok((count, weighted))
}

fn oracle_at(
    a: &AlgebraicData,
    subject: Subject,
    field: &Field,
    h: &Substitution,
) -> Result<(u64, u64)> {
    let alg = a.instantiate(h, field)?;
    let order = group_order(field.order(), alg.dim(), DEFAULT_MAX_ORDER)?;
    Ok(match subject {
        Subject::All => (class_count(&alg)?, order),
        Subject::AtZ(z) => (
            irr_count_at_z(&alg, z)?,
            order - order / field.order() as u64,
        ),
    })
}

/// Evaluates a categorisation at `F_q`: resolved part in the field's
/// characteristic, unresolved counts by enumeration, families by the oracle.
fn evaluate(o: &Categorisation, field: &Field) -> Result<(BigInt, BigInt)> {
    let q0 = field.order() as i64;
    let resolved = o.resolved_at_characteristic(field.characteristic() as u64);
    let mut count = resolved.eval(q0, TMode::Sum);
    let mut weighted = resolved.eval(q0, TMode::WeightQ2e);
    for u in &o.unresolved_counts {
        let v = u
            .system
            .count_by_enumeration(field, DEFAULT_ENUMERATION_CAP)?;
        let c = CountPoly::monomial(v, 0, u.e).scale(u.u, u.v, 0);
        count += c.eval(q0, TMode::Sum);
        weighted += c.eval(q0, TMode::WeightQ2e);
    }
    for f in &o.families {
        let data = f.family.data();
        let subject = match f.family {
            FamilyRef::AllIrr { .. } => Subject::All,
            FamilyRef::IrrAtZ { z, .. } => Subject::AtZ(z),
        };
        let subs = data.enumerate_substitutions(field, DEFAULT_ENUMERATION_CAP)?;
        let (c, w) = oracle_totals(data, subject, field, &subs)?;
        let scale = CountPoly::one().scale(f.k, f.l, f.m);
        count += c * scale.eval(q0, TMode::Sum);
        weighted += w * scale.eval(q0, TMode::WeightQ2e);
    }
    Ok((count, weighted))
}

fn compare(
    instance: &str,
    field: &Field,
    substitution: Option<String>,
    expected: (BigInt, BigInt),
    actual: (BigInt, BigInt),
) -> Vec<IdentityCheck> {
    [
        ("count", expected.0, actual.0),
        ("degrees", expected.1, actual.1),
    ]
    .into_iter()
    .map(|(identity, e, a)| IdentityCheck {
        instance: instance.to_string(),
        q: field.order(),
        identity,
        substitution: substitution.clone(),
        pass: e == a,
        expected: e.to_string(),
        actual: a.to_string(),
    })
    .collect()
}

fn describe(a: &AlgebraicData, h: &Substitution) -> String {
    let parts: Vec<String> = h
        .iter()
        .map(|(&p, v)| format!("{}={v}", a.param_name(p)))
        .collect();
    format!("{{{}}}", parts.join(", "))
}

/// Checks that `o` describes `subject` for the family `a` over `F_q0`: the
/// number of characters and the sum of their squared degrees, summed over
/// all substitutions, must match class counts and group orders.
pub fn verify_categorisation(
    instance: &str,
    a: &AlgebraicData,
    subject: Subject,
    o: &Categorisation,
    q0: u32,
) -> Result<VerificationReport> {
    let field = Field::new(q0)?;
    let subs = a.enumerate_substitutions(&field, DEFAULT_ENUMERATION_CAP)?;
    let expected = oracle_totals(a, subject, &field, &subs)?;
    let actual = evaluate(o, &field)?;
    Ok(VerificationReport {
        checks: compare(instance, &field, None, expected, actual),
    })
}

/// Runs the engine on each member of the family separately (parameters
/// pinned to their values) and checks each result against the oracle, so a
/// failure names the offending substitution. Falls back to the summed check
/// when a value cannot be pinned.
pub fn verify_engine_per_substitution(
    engine: &Engine,
    instance: &str,
    a: &AlgebraicData,
    subject: Subject,
    q0: u32,
) -> Result<VerificationReport> {
    let field = Field::new(q0)?;
    let subs = a.enumerate_substitutions(&field, DEFAULT_ENUMERATION_CAP)?;
    let mut report = VerificationReport::default();
    for h in &subs {
        let pinned = match a.specialize(h, &field) {
            Ok(p) => p,
            Err(CoreError::BadSubstitution(_)) => {
                let o = run(engine, a, subject)?;
                return verify_categorisation(instance, a, subject, &o, q0);
            }
            Err(e) => return Err(e),
        };
        let o = run(engine, &pinned, subject)?;
        let (c, w) = oracle_at(a, subject, &field, h)?;
        let actual = evaluate(&o, &field)?;
        report.checks.extend(compare(
            instance,
            &field,
            Some(describe(a, h)),
            (BigInt::from(c), BigInt::from(w)),
            actual,
        ));
    }
    Ok(report)
}

fn run(engine: &Engine, a: &AlgebraicData, subject: Subject) -> Result<Categorisation> {
    match subject {
        Subject::All => engine.general(a),
        Subject::AtZ(z) => engine.type_b(a, z),
    }
}
