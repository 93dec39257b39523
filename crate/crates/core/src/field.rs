//! Small finite fields `F_q`, `q in {2, 3, 4, 5}`, with precomputed tables.
//!
//! `F_4` is `F_2[x]/(x^2 + x + 1)`; an element `a + b x` is stored as `a | (b << 1)`.

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::error::CoreError;

/// An element of a [`Field`], in `0..q`.
pub type Fq = u8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Field {
    q: u8,
    p: u8,
    add: Vec<Fq>,
    mul: Vec<Fq>,
    neg: Vec<Fq>,
    inv: Vec<Fq>,
}

impl Field {
    pub fn new(q: u32) -> Result<Self, CoreError> {
        let (q, p) = match q {
            2 => (2u8, 2u8),
            3 => (3, 3),
            4 => (4, 2),
            5 => (5, 5),
            other => return Err(CoreError::UnsupportedField(other)),
        };
        let n = q as usize;
        let mut add = vec![0; n * n];
        let mut mul = vec![0; n * n];
        for a in 0..q {
            for b in 0..q {
                let (s, m) = if q == 4 {
                    (a ^ b, gf4_mul(a, b))
                } else {
                    ((a + b) % q, (a * b) % q)
                };
                add[a as usize * n + b as usize] = s;
                mul[a as usize * n + b as usize] = m;
            }
        }
        let mut neg = vec![0; n];
        let mut inv = vec![0; n];
        for a in 0..q {
            for b in 0..q {
                if add[a as usize * n + b as usize] == 0 {
                    neg[a as usize] = b;
                }
                if mul[a as usize * n + b as usize] == 1 {
                    inv[a as usize] = b;
                }
            }
        }
        Ok(Self {
            q,
            p,
            add,
            mul,
            neg,
            inv,
        })
    }

    pub fn order(&self) -> u32 {
        self.q as u32
    }

    pub fn characteristic(&self) -> u32 {
        self.p as u32
    }

    #[inline]
    pub fn add(&self, a: Fq, b: Fq) -> Fq {
        self.add[a as usize * self.q as usize + b as usize]
    }

    #[inline]
    pub fn mul(&self, a: Fq, b: Fq) -> Fq {
        self.mul[a as usize * self.q as usize + b as usize]
    }

    #[inline]
    pub fn neg(&self, a: Fq) -> Fq {
        self.neg[a as usize]
    }

    #[inline]
    pub fn sub(&self, a: Fq, b: Fq) -> Fq {
        self.add(a, self.neg(b))
    }

    /// Multiplicative inverse; `inv(0)` is 0.
    #[inline]
    pub fn inv(&self, a: Fq) -> Fq {
        self.inv[a as usize]
    }

    pub fn elements(&self) -> impl Iterator<Item = Fq> {
        0..self.q
    }

    /// The image of an integer under `Z -> F_q`.
    pub fn from_int(&self, n: &BigInt) -> Fq {
        let r = (n % BigInt::from(self.p)).to_i64().unwrap_or(0);
        r.rem_euclid(self.p as i64) as Fq
    }
}

fn gf4_mul(a: u8, b: u8) -> u8 {
    // carry-less product, reduced by x^2 = x + 1
    let mut r = 0u8;
    for i in 0..2 {
        if b >> i & 1 == 1 {
            r ^= a << i;
        }
    }
    if r & 4 != 0 {
        r ^= 0b111;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_axioms_hold() {
        for q in [2, 3, 4, 5] {
            let f = Field::new(q).unwrap();
            for a in f.elements() {
                assert_eq!(f.add(a, f.neg(a)), 0);
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a)), 1, "q={q} a={a}");
                }
                for b in f.elements() {
                    for c in f.elements() {
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn gf4_is_not_z4() {
        let f = Field::new(4).unwrap();
        assert_eq!(f.characteristic(), 2);
        assert_eq!(f.add(1, 1), 0);
        // x * x = x + 1
        assert_eq!(f.mul(2, 2), 3);
        assert_eq!(f.from_int(&BigInt::from(3)), 1);
    }

    #[test]
    fn unsupported_order() {
        assert!(Field::new(7).is_err());
    }
}
