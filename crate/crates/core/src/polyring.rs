//! Exact integer polynomials.
//!
//! [`CountPoly`] lives in `Z[q, t]`: the coefficient of `t^e` is a polynomial
//! in `q` counting characters of degree `q^e`. [`ParamPoly`] is a sparse
//! multivariate polynomial over the parameter symbols of a restriction system.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::algdata::Param;

/// How the `t` variable is substituted by [`CountPoly::eval`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TMode {
    /// `t := 1`, i.e. count characters irrespective of degree.
    Sum,
    /// `t^e := q0^(2e)`, i.e. the sum of squared degrees.
    WeightQ2e,
    /// `t := v`.
    AtT(i64),
}

/// A polynomial in `Z[q, t]` stored as a sparse map `(deg_q, deg_t) -> coeff`.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct CountPoly {
    terms: BTreeMap<(u32, u32), BigInt>,
}

impl CountPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(1, 0, 0)
    }

    pub fn q() -> Self {
        Self::monomial(1, 1, 0)
    }

    pub fn t() -> Self {
        Self::monomial(1, 0, 1)
    }

    /// `c * q^dq * t^dt`.
    pub fn monomial(c: impl Into<BigInt>, dq: u32, dt: u32) -> Self {
        let mut p = Self::zero();
        p.add_term(dq, dt, c.into());
        p
    }

    /// `q^k`.
    pub fn q_pow(k: u32) -> Self {
        Self::monomial(1, k, 0)
    }

    /// `(q - 1)^k`, expanded.
    pub fn q_minus_one_pow(k: u32) -> Self {
        let mut p = Self::zero();
        let mut binom = BigInt::one();
        for i in 0..=k {
            // term C(k,i) q^(k-i) (-1)^i
            let c = if i % 2 == 0 {
                binom.clone()
            } else {
                -binom.clone()
            };
            p.add_term(k - i, 0, c);
            binom = binom * BigInt::from(k - i) / BigInt::from(i + 1);
        }
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = ((u32, u32), BigInt)>) -> Self {
        let mut p = Self::zero();
        for ((dq, dt), c) in terms {
            p.add_term(dq, dt, c);
        }
        p
    }

    /// Builds `sum_e coeffs[e](q) t^e` from univariate polynomials in `q`.
    pub fn from_t_coefficients<'a>(rows: impl IntoIterator<Item = (u32, &'a CountPoly)>) -> Self {
        let mut p = Self::zero();
        for (e, row) in rows {
            for (&(dq, _), c) in &row.terms {
                p.add_term(dq, e, c.clone());
            }
        }
        p
    }

    pub fn add_term(&mut self, dq: u32, dt: u32, c: BigInt) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry((dq, dt)) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, u32, &BigInt)> {
        self.terms.iter().map(|(&(dq, dt), c)| (dq, dt, c))
    }

    pub fn coeff(&self, dq: u32, dt: u32) -> BigInt {
        self.terms.get(&(dq, dt)).cloned().unwrap_or_default()
    }

    pub fn max_t_degree(&self) -> Option<u32> {
        self.terms.keys().map(|&(_, dt)| dt).max()
    }

    pub fn max_q_degree(&self) -> Option<u32> {
        self.terms.keys().map(|&(dq, _)| dq).max()
    }

    /// True if no term involves `t`.
    pub fn is_t_free(&self) -> bool {
        self.terms.keys().all(|&(_, dt)| dt == 0)
    }

    /// The coefficient of `t^e`, as a polynomial in `q` alone.
    pub fn t_coefficient(&self, e: u32) -> CountPoly {
        Self::from_terms(
            self.terms
                .iter()
                .filter(|(&(_, dt), _)| dt == e)
                .map(|(&(dq, _), c)| ((dq, 0), c.clone())),
        )
    }

    /// Every nonzero `t`-coefficient, in increasing `e`.
    pub fn t_coefficients(&self) -> BTreeMap<u32, CountPoly> {
        let mut out: BTreeMap<u32, CountPoly> = BTreeMap::new();
        for (&(dq, dt), c) in &self.terms {
            out.entry(dt).or_default().add_term(dq, 0, c.clone());
        }
        out
    }

    /// Multiplies by `(q-1)^k q^l t^m`.
    pub fn scale(&self, k: u32, l: u32, m: u32) -> CountPoly {
        if self.is_zero() {
            return Self::zero();
        }
        let shifted = Self::from_terms(
            self.terms
                .iter()
                .map(|(&(dq, dt), c)| ((dq + l, dt + m), c.clone())),
        );
        if k == 0 {
            shifted
        } else {
            &shifted * &Self::q_minus_one_pow(k)
        }
    }

    pub fn eval(&self, q0: i64, mode: TMode) -> BigInt {
        let q0b = BigInt::from(q0);
        let mut total = BigInt::zero();
        for (&(dq, dt), c) in &self.terms {
            let qpart = num_traits::pow(q0b.clone(), dq as usize);
            let tpart = match mode {
                TMode::Sum => BigInt::one(),
                TMode::WeightQ2e => num_traits::pow(q0b.clone(), 2 * dt as usize),
                TMode::AtT(v) => num_traits::pow(BigInt::from(v), dt as usize),
            };
            total += c * qpart * tpart;
        }
        total
    }

    /// Substitutes `q := q + shift` in a `t`-free polynomial (used for the
    /// `N(t+1)` nonnegativity check, where the variable is renamed).
    pub fn shift_q(&self, shift: i64) -> CountPoly {
        let mut out = Self::zero();
        let base = &Self::q() + &Self::monomial(shift, 0, 0);
        for (&(dq, dt), c) in &self.terms {
            let mut pw = Self::one();
            for _ in 0..dq {
                pw = &pw * &base;
            }
            for (&(pq, _), pc) in &pw.terms {
                out.add_term(pq, dt, pc * c);
            }
        }
        out
    }

    /// Parses a univariate polynomial in `q`, e.g. `7q^9 - 6q^8 - q^7` or
    /// `q^{12} + 3q - 1`. Whitespace and `*` are ignored.
    pub fn parse_q(s: &str) -> Result<CountPoly, String> {
        let cleaned: String = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '*' && *c != '{' && *c != '}')
            .collect();
        if cleaned.is_empty() || cleaned == "0" {
            return Ok(Self::zero());
        }
        let mut out = Self::zero();
        let bytes = cleaned.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let mut sign = BigInt::one();
            if bytes[i] == b'+' || bytes[i] == b'-' {
                if bytes[i] == b'-' {
                    sign = -sign;
                }
                i += 1;
            }
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let coeff: BigInt = if i > start {
                cleaned[start..i].parse().map_err(|e| format!("{e}"))?
            } else {
                BigInt::one()
            };
            let mut deg = 0u32;
            if i < bytes.len() && bytes[i] == b'q' {
                i += 1;
                deg = 1;
                if i < bytes.len() && bytes[i] == b'^' {
                    i += 1;
                    let ds = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    deg = cleaned[ds..i]
                        .parse()
                        .map_err(|_| format!("bad exponent in {s:?}"))?;
                }
            } else if i == start {
                return Err(format!("unexpected character at {i} in {s:?}"));
            }
            out.add_term(deg, 0, sign * coeff);
        }
        Ok(out)
    }

    fn fmt_q_part(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (idx, (&(dq, _), c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if idx == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            let show_coeff = !abs.is_one() || dq == 0;
            if show_coeff {
                write!(f, "{abs}")?;
            }
            match dq {
                0 => {}
                1 => write!(f, "q")?,
                d => write!(f, "q^{d}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Display for CountPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_t_free() {
            return self.fmt_q_part(f);
        }
        let rows = self.t_coefficients();
        for (idx, (e, row)) in rows.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            write!(f, "(")?;
            row.fmt_q_part(f)?;
            write!(f, ")")?;
            match e {
                0 => {}
                1 => write!(f, "t")?,
                e => write!(f, "t^{e}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for CountPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CountPoly({self})")
    }
}

impl<'a> Add<&'a CountPoly> for &'a CountPoly {
    type Output = CountPoly;
    fn add(self, rhs: &CountPoly) -> CountPoly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl AddAssign<&CountPoly> for CountPoly {
    fn add_assign(&mut self, rhs: &CountPoly) {
        for (&(dq, dt), c) in &rhs.terms {
            self.add_term(dq, dt, c.clone());
        }
    }
}

impl<'a> Sub<&'a CountPoly> for &'a CountPoly {
    type Output = CountPoly;
    fn sub(self, rhs: &CountPoly) -> CountPoly {
        let mut out = self.clone();
        for (&(dq, dt), c) in &rhs.terms {
            out.add_term(dq, dt, -c.clone());
        }
        out
    }
}

impl Neg for &CountPoly {
    type Output = CountPoly;
    fn neg(self) -> CountPoly {
        CountPoly::from_terms(self.terms.iter().map(|(&k, c)| (k, -c.clone())))
    }
}

impl<'a> Mul<&'a CountPoly> for &'a CountPoly {
    type Output = CountPoly;
    fn mul(self, rhs: &CountPoly) -> CountPoly {
        let mut out = CountPoly::zero();
        for (&(aq, at), ac) in &self.terms {
            for (&(bq, bt), bc) in &rhs.terms {
                out.add_term(aq + bq, at + bt, ac * bc);
            }
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    q: u32,
    t: u32,
    c: BigIntJson,
}

/// Integers serialise as JSON numbers when they fit in `i64`, otherwise as
/// decimal strings.
#[derive(Clone, Debug)]
struct BigIntJson(BigInt);

impl Serialize for BigIntJson {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0.to_i64() {
            Some(v) => s.serialize_i64(v),
            None => s.serialize_str(&self.0.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for BigIntJson {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match v {
            serde_json::Value::Number(n) => n
                .as_i64()
                .map(|x| BigIntJson(BigInt::from(x)))
                .ok_or_else(|| D::Error::custom("coefficient is not an integer")),
            serde_json::Value::String(s) => s
                .parse()
                .map(BigIntJson)
                .map_err(|_| D::Error::custom("bad integer string")),
            _ => Err(D::Error::custom("expected integer coefficient")),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CountPolyJson {
    terms: Vec<TermJson>,
}

impl Serialize for CountPoly {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        CountPolyJson {
            terms: self
                .terms
                .iter()
                .map(|(&(q, t), c)| TermJson {
                    q,
                    t,
                    c: BigIntJson(c.clone()),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CountPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = CountPolyJson::deserialize(d)?;
        Ok(CountPoly::from_terms(
            raw.terms.into_iter().map(|t| ((t.q, t.t), t.c.0)),
        ))
    }
}

/// A monomial in parameter symbols: sorted `(symbol, exponent)` pairs with
/// positive exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(Param, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Self(Vec::new())
    }

    pub fn var(p: Param) -> Self {
        Self(vec![(p, 1)])
    }

    /// Product of the given symbols (with repetition allowed).
    pub fn product<I: IntoIterator<Item = Param>>(it: I) -> Self {
        let mut m = Self::one();
        for p in it {
            m = m.mul(&Self::var(p));
        }
        m
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(Param, u32)] {
        &self.0
    }

    pub fn degree_in(&self, p: Param) -> u32 {
        self.0
            .iter()
            .find(|(s, _)| *s == p)
            .map(|&(_, e)| e)
            .unwrap_or(0)
    }

    pub fn contains(&self, p: Param) -> bool {
        self.degree_in(p) > 0
    }

    /// True if every exponent is one.
    pub fn is_squarefree(&self) -> bool {
        self.0.iter().all(|&(_, e)| e == 1)
    }

    pub fn vars(&self) -> impl Iterator<Item = Param> + '_ {
        self.0.iter().map(|&(p, _)| p)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a, ea) = self.0[i];
            let (b, eb) = other.0[j];
            match a.cmp(&b) {
                std::cmp::Ordering::Less => {
                    out.push((a, ea));
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push((b, eb));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a, ea + eb));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// Removes `p` entirely, returning its exponent.
    pub fn without(&self, p: Param) -> (Monomial, u32) {
        let e = self.degree_in(p);
        (
            Monomial(self.0.iter().copied().filter(|&(s, _)| s != p).collect()),
            e,
        )
    }

    /// Renames symbols; the map must be injective on this monomial.
    pub fn rename(&self, f: impl Fn(Param) -> Param) -> Monomial {
        let mut v: Vec<(Param, u32)> = self.0.iter().map(|&(p, e)| (f(p), e)).collect();
        v.sort_unstable();
        Monomial(v)
    }
}

/// A sparse polynomial with integer coefficients in parameter symbols.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamPoly {
    terms: BTreeMap<Monomial, BigInt>,
}

impl ParamPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        Self::term(c, Monomial::one())
    }

    pub fn var(p: Param) -> Self {
        Self::term(1, Monomial::var(p))
    }

    pub fn term(c: impl Into<BigInt>, m: Monomial) -> Self {
        let mut out = Self::zero();
        out.add_term(m, c.into());
        out
    }

    /// The product of a set of symbols (`1` for the empty set).
    pub fn product_of(params: &[Param]) -> Self {
        Self::term(1, Monomial::product(params.iter().copied()))
    }

    pub fn add_term(&mut self, m: Monomial, c: BigInt) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigInt)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// The constant value if the polynomial has no variables.
    pub fn as_constant(&self) -> Option<BigInt> {
        match self.terms.len() {
            0 => Some(BigInt::zero()),
            1 => self
                .terms
                .iter()
                .next()
                .filter(|(m, _)| m.is_one())
                .map(|(_, c)| c.clone()),
            _ => None,
        }
    }

    /// The single term if the polynomial is a monomial.
    pub fn as_monomial(&self) -> Option<(&Monomial, &BigInt)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    pub fn contains(&self, p: Param) -> bool {
        self.terms.keys().any(|m| m.contains(p))
    }

    pub fn degree_in(&self, p: Param) -> u32 {
        self.terms.keys().map(|m| m.degree_in(p)).max().unwrap_or(0)
    }

    /// All symbols occurring in the polynomial, sorted.
    pub fn vars(&self) -> Vec<Param> {
        let mut v: Vec<Param> = self.terms.keys().flat_map(|m| m.vars()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Splits into coefficients of powers of `p`: `self = sum_j out[j] * p^j`.
    pub fn coefficients_in(&self, p: Param) -> Vec<ParamPoly> {
        let deg = self.degree_in(p) as usize;
        let mut out = vec![ParamPoly::zero(); deg + 1];
        for (m, c) in &self.terms {
            let (rest, e) = m.without(p);
            out[e as usize].add_term(rest, c.clone());
        }
        out
    }

    /// Sets `p := 0`.
    pub fn set_zero(&self, p: Param) -> ParamPoly {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            if !m.contains(p) {
                out.add_term(m.clone(), c.clone());
            }
        }
        out
    }

    /// Substitutes `p := value`.
    pub fn substitute(&self, p: Param, value: &ParamPoly) -> ParamPoly {
        if !self.contains(p) {
            return self.clone();
        }
        let coeffs = self.coefficients_in(p);
        // Horner in `value`.
        let mut acc = ParamPoly::zero();
        for c in coeffs.iter().rev() {
            acc = &(&acc * value) + c;
        }
        acc
    }

    pub fn rename(&self, f: impl Fn(Param) -> Param) -> ParamPoly {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            out.add_term(m.rename(&f), c.clone());
        }
        out
    }

    /// Normalises sign so that the leading coefficient is positive; the zero
    /// set is unchanged.
    pub fn normalized_sign(&self) -> ParamPoly {
        match self.terms.iter().next_back() {
            Some((_, c)) if c.is_negative() => -self,
            _ => self.clone(),
        }
    }

    /// Evaluates with symbol values supplied by `value`, reducing integer
    /// coefficients through `from_int` into the target ring.
    pub fn eval_with<T: Copy>(
        &self,
        value: impl Fn(Param) -> T,
        from_int: impl Fn(&BigInt) -> T,
        add: impl Fn(T, T) -> T,
        mul: impl Fn(T, T) -> T,
        zero: T,
    ) -> T {
        let mut acc = zero;
        for (m, c) in &self.terms {
            let mut t = from_int(c);
            for &(p, e) in m.factors() {
                let v = value(p);
                for _ in 0..e {
                    t = mul(t, v);
                }
            }
            acc = add(acc, t);
        }
        acc
    }

    pub fn fmt_with(&self, name: &dyn Fn(Param) -> String) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut s = String::new();
        for (idx, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if idx == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let mut parts = Vec::new();
            if !abs.is_one() || m.is_one() {
                parts.push(abs.to_string());
            }
            for &(p, e) in m.factors() {
                if e == 1 {
                    parts.push(name(p));
                } else {
                    parts.push(format!("{}^{}", name(p), e));
                }
            }
            s.push_str(&parts.join("*"));
        }
        s
    }
}

impl fmt::Debug for ParamPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.fmt_with(&|p| format!("p{}", p.0)))
    }
}

impl<'a> Add<&'a ParamPoly> for &'a ParamPoly {
    type Output = ParamPoly;
    fn add(self, rhs: &ParamPoly) -> ParamPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl<'a> Sub<&'a ParamPoly> for &'a ParamPoly {
    type Output = ParamPoly;
    fn sub(self, rhs: &ParamPoly) -> ParamPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Neg for &ParamPoly {
    type Output = ParamPoly;
    fn neg(self) -> ParamPoly {
        let mut out = ParamPoly::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl<'a> Mul<&'a ParamPoly> for &'a ParamPoly {
    type Output = ParamPoly;
    fn mul(self, rhs: &ParamPoly) -> ParamPoly {
        let mut out = ParamPoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}
