//! Randomised and exhaustive verification suites built on the brute-force
//! oracle.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unichar_core::oracle::{
    class_count, pattern_orbit_size, unitriangular_algebra, verify_engine_per_substitution,
    IdentityCheck, Subject, VerificationReport,
};
use unichar_core::patterns::top_and_closure;
use unichar_core::{
    AlgebraicData, CoreError, Engine, EngineConfig, Field, Fq, Param, ParamPoly, Poset, TMode,
};

use crate::compute::compute_unitriangular;

/// Random valid algebraic data with `dim <= max_dim` and at most
/// `max_params` parameters. Structure constants are random products of
/// parameters; every associator coefficient that is not identically zero is
/// added as an equation, so every substitution gives an associative algebra.
/// Candidates with no substitution over `F_3` are redrawn, as are
/// candidates that are not associative for any substitution.
pub fn random_algebraic_data<R: Rng>(
    rng: &mut R,
    max_dim: usize,
    max_params: usize,
) -> AlgebraicData {
    let dim = rng.gen_range(1..=max_dim);
    let f3 = Field::new(3).expect("F_3");
    loop {
        let Some(a) = try_random_data(rng, dim, max_params) else {
            continue;
        };
        if a.enumerate_substitutions(&f3, 8)
            .is_ok_and(|s| !s.is_empty())
        {
            return a;
        }
    }
}

fn try_random_data<R: Rng>(rng: &mut R, dim: usize, max_params: usize) -> Option<AlgebraicData> {
    let density = 1.2 / dim as f64;
    let mut a = AlgebraicData::with_basis((1..=dim).map(|i| format!("b{i}")));
    let params: Vec<Param> = ["a", "b"][..rng.gen_range(0..=max_params.min(2))]
        .iter()
        .map(|name| a.add_param(name))
        .collect();
    for z in 0..dim {
        for x in 0..z {
            for y in 0..z {
                if rng.gen_bool(density.min(0.6)) {
                    let mut factors = Vec::new();
                    for &p in &params {
                        let exponent = match rng.gen_range(0..10) {
                            0..=3 => 0,
                            4..=8 => 1,
                            _ => 2,
                        };
                        factors.extend(std::iter::repeat_n(p, exponent));
                    }
                    for &p in &factors {
                        a.add_nonzero(p);
                    }
                    a.set_product(x, y, z, factors);
                }
            }
        }
    }
    for x in 0..dim {
        for y in 0..dim {
            for u in 0..dim {
                for w in 0..dim {
                    let mut assoc = ParamPoly::zero();
                    for v in 0..dim {
                        assoc = &assoc + &(&a.product_poly(x, y, v) * &a.product_poly(v, u, w));
                        assoc = &assoc - &(&a.product_poly(y, u, v) * &a.product_poly(x, v, w));
                    }
                    match assoc.as_constant() {
                        Some(c) if c == 0.into() => {}
                        // not associative for any substitution
                        Some(_) => return None,
                        None => a.add_equation(assoc),
                    }
                }
            }
        }
    }
    if params.len() == 2 && rng.gen_bool(0.3) {
        let (p, q) = (ParamPoly::var(params[0]), ParamPoly::var(params[1]));
        let extra = match rng.gen_range(0..3) {
            0 => &p - &q,
            1 => &p + &q,
            _ => &(&p * &q) - &ParamPoly::constant(1),
        };
        a.add_equation(extra);
    }
    a.validate().ok()?;
    Some(a)
}

/// Checks the type-B contraction on `instances` random data of dimension at
/// most 5 with at most 2 parameters: for each substitution, the characters
/// nontrivial on `1 + <z>` number `k(1+J) - k(1+J/<z>)` and their squared
/// degrees sum to `q^dim - q^(dim-1)`.
pub fn type_b_suite(
    seed: u64,
    instances: usize,
    qs: &[u32],
) -> Result<VerificationReport, CoreError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let engine = Engine::new(EngineConfig::default());
    let mut report = VerificationReport::default();
    for i in 0..instances {
        let a = random_algebraic_data(&mut rng, 5, 2);
        let candidates: Vec<usize> = (0..a.dim()).filter(|&z| a.annihilates(z)).collect();
        let z = *candidates
            .choose(&mut rng)
            .expect("the last basis vector annihilates");
        let name = format!("random #{i} (seed {seed}), z = {}", a.basis_name(z));
        for &q in qs {
            report.extend(verify_engine_per_substitution(
                &engine,
                &name,
                &a,
                Subject::AtZ(z),
                q,
            )?);
        }
    }
    Ok(report)
}

/// The same check for `general`: all characters of each member.
pub fn general_suite(
    seed: u64,
    instances: usize,
    qs: &[u32],
) -> Result<VerificationReport, CoreError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let engine = Engine::new(EngineConfig::default());
    let mut report = VerificationReport::default();
    for i in 0..instances {
        let a = random_algebraic_data(&mut rng, 5, 2);
        let name = format!("random #{i} (seed {seed})");
        for &q in qs {
            report.extend(verify_engine_per_substitution(
                &engine,
                &name,
                &a,
                Subject::All,
                q,
            )?);
        }
    }
    Ok(report)
}

/// For `n <= max_n`: `sum_e N_{n,e}(q)` against the class count of `U_n(q)`,
/// and the sum of squared degrees against `|U_n(q)|`. Groups above the
/// oracle's size cap are skipped.
pub fn unitriangular_suite(max_n: usize, qs: &[u32]) -> Result<VerificationReport, CoreError> {
    let mut report = VerificationReport::default();
    for n in 1..=max_n {
        let table = compute_unitriangular(n, EngineConfig::default())?.table;
        for &q in qs {
            let field = Field::new(q)?;
            let k = match unitriangular_algebra(n, &field).and_then(|g| class_count(&g)) {
                Ok(k) => k,
                Err(CoreError::TooLarge(_)) => continue,
                Err(e) => return Err(e),
            };
            let entries = table.entries_at_characteristic(field.characteristic() as u64);
            let count: num_bigint::BigInt =
                entries.values().map(|p| p.eval(q as i64, TMode::Sum)).sum();
            let weighted: num_bigint::BigInt = entries
                .iter()
                .map(|(&e, p)| {
                    p.eval(q as i64, TMode::Sum) * num_bigint::BigInt::from(q).pow(2 * e)
                })
                .sum();
            let order = num_bigint::BigInt::from(q).pow((n * (n - 1) / 2) as u32);
            for (identity, expected, actual) in [
                ("count", num_bigint::BigInt::from(k), count),
                ("degrees", order, weighted),
            ] {
                report.checks.push(IdentityCheck {
                    instance: format!("U_{n}"),
                    q,
                    identity,
                    substitution: None,
                    pass: expected == actual,
                    expected: expected.to_string(),
                    actual: actual.to_string(),
                });
            }
        }
    }
    Ok(report)
}

/// A random poset on at most `max` elements.
pub fn random_poset<R: Rng>(rng: &mut R, max: usize) -> Poset {
    let n = rng.gen_range(1..=max);
    let mut less = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            less[i][j] = rng.gen_bool(0.4);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if less[i][k] && less[k][j] {
                    less[i][j] = true;
                }
            }
        }
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| less[i][j])
        .collect();
    Poset::from_pairs(n, &pairs).expect("transitive closure of a DAG is a poset")
}

/// Orbits of the pattern group on vectors: for `instances` random posets on
/// at most 5 elements and random vectors `u`, the orbit of `u` has size
/// `q^{|closure(E) \ E|}` with `E` the maximal elements of the support.
pub fn orbit_suite(
    seed: u64,
    instances: usize,
    qs: &[u32],
) -> Result<VerificationReport, CoreError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = VerificationReport::default();
    for i in 0..instances {
        let p = random_poset(&mut rng, 5);
        let q = *qs.choose(&mut rng).expect("at least one field");
        let field = Field::new(q)?;
        let u: Vec<Fq> = (0..p.len()).map(|_| rng.gen_range(0..q) as Fq).collect();
        let support = (0..p.len()).filter(|&i| u[i] != 0).collect();
        let (top, closure) = top_and_closure(&support, &p);
        let rel: Vec<(usize, usize)> = p.relation().into_iter().collect();
        let orbit = pattern_orbit_size(p.len(), &rel, &u, &field)?;
        let expected = (q as u64).pow(closure.difference(&top).count() as u32);
        report.checks.push(IdentityCheck {
            instance: format!("orbit #{i} (seed {seed}): {:?}, u = {u:?}", rel),
            q,
            identity: "orbit size",
            substitution: None,
            pass: orbit == expected,
            expected: expected.to_string(),
            actual: orbit.to_string(),
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use unichar_core::Field;

    #[test]
    fn random_data_is_associative_everywhere() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let a = random_algebraic_data(&mut rng, 5, 2);
            assert!(a.satisfies_nonzero_condition());
            for q in [2, 3, 4] {
                let field = Field::new(q).unwrap();
                for h in a.enumerate_substitutions(&field, 8).unwrap() {
                    a.instantiate(&h, &field).unwrap();
                }
            }
        }
    }

    #[test]
    fn suites_are_seeded() {
        let a = type_b_suite(3, 5, &[2]).unwrap();
        let b = type_b_suite(3, 5, &[2]).unwrap();
        assert_eq!(a, b);
        assert!(a.passed());
    }

    #[test]
    fn general_on_random_data() {
        let r = general_suite(11, 60, &[2, 3]).unwrap();
        assert!(r.passed(), "{:?}", r.failures().next());
    }

    #[test]
    fn small_unitriangular_groups() {
        let r = unitriangular_suite(4, &[2, 3, 4, 5]).unwrap();
        assert!(r.passed());
        assert_eq!(r.checks.len(), 4 * 4 * 2);
    }
}
