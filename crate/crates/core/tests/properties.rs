//! Randomised checks of the engine against the brute-force oracle.

use proptest::prelude::*;
use unichar_core::engine::canonicalize;
use unichar_core::oracle::{verify_categorisation, Subject};
use unichar_core::patterns::encode_pattern;
use unichar_core::{AlgebraicData, Engine, EngineConfig, Field, ParamPoly, Poset, Substitution};

/// Data with products only from the first `bottom` basis vectors into the
/// rest, so every member is associative. Structure constants are products of
/// up to two parameters, which may or may not carry inequations.
fn arb_layered() -> impl Strategy<Value = AlgebraicData> {
    (2usize..=5, 0usize..=2)
        .prop_flat_map(|(dim, params)| {
            let bottom = 1..dim;
            (
                Just(dim),
                Just(params),
                bottom,
                prop::collection::vec((0u8..4, 0u8..4), dim * dim * dim),
                0u8..6,
                any::<bool>(),
            )
        })
        .prop_map(|(dim, nparams, bottom, choices, eq, mark)| {
            let mut a = AlgebraicData::with_basis((1..=dim).map(|i| format!("b{i}")));
            let ps: Vec<_> = ["a", "b"][..nparams]
                .iter()
                .map(|n| a.add_param(n))
                .collect();
            for x in 0..bottom {
                for y in 0..bottom {
                    for z in bottom..dim {
                        let (kind, extra) = choices[(x * dim + y) * dim + z];
                        if kind == 0 {
                            continue;
                        }
                        let mut f = Vec::new();
                        if nparams > 0 && kind >= 2 {
                            f.push(ps[(extra as usize) % nparams]);
                        }
                        if nparams > 1 && kind == 3 {
                            f.push(ps[1]);
                        }
                        a.set_product(x, y, z, f);
                    }
                }
            }
            if mark && nparams > 0 {
                a.add_nonzero(ps[0]);
            }
            if nparams == 2 {
                let (p, q) = (ParamPoly::var(ps[0]), ParamPoly::var(ps[1]));
                match eq {
                    0 => a.add_equation(&p - &q),
                    1 => a.add_equation(&(&p * &q) - &ParamPoly::constant(1)),
                    2 => a.add_equation(&p + &q),
                    _ => {}
                }
            }
            a
        })
}

fn tables(a: &AlgebraicData, field: &Field) -> Vec<Vec<u8>> {
    let mut out: Vec<Vec<u8>> = a
        .enumerate_substitutions(field, 8)
        .unwrap()
        .iter()
        .map(|h: &Substitution| {
            let alg = a.instantiate(h, field).unwrap();
            let n = alg.dim();
            (0..n * n * n)
                .map(|i| alg.coeff(i / (n * n), i / n % n, i % n))
                .collect()
        })
        .collect();
    out.sort();
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn case_split_partitions_the_members(a in arb_layered()) {
        let cases = a.split_into_cases();
        prop_assert!(cases.iter().all(|c| c.satisfies_nonzero_condition()));
        for q in [2, 3] {
            let f = Field::new(q).unwrap();
            let mut split: Vec<Vec<u8>> = cases.iter().flat_map(|c| tables(c, &f)).collect();
            split.sort();
            prop_assert_eq!(split, tables(&a, &f));
        }
    }

    #[test]
    fn categorisations_match_class_counts(a in arb_layered()) {
        let engine = Engine::default();
        for case in a.split_into_cases() {
            let o = engine.general(&case).unwrap();
            for q in [2, 3] {
                let r = verify_categorisation("general", &case, Subject::All, &o, q).unwrap();
                prop_assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
            }
            for z in (0..case.dim()).filter(|&z| case.annihilates(z)) {
                let o = engine.type_b(&case, z).unwrap();
                for q in [2, 3] {
                    let r = verify_categorisation("type_b", &case, Subject::AtZ(z), &o, q).unwrap();
                    prop_assert!(r.passed(), "z = {}: {:?}", z, r.failures().collect::<Vec<_>>());
                }
            }
        }
    }

    #[test]
    fn runs_are_reproducible(a in arb_layered()) {
        for case in a.split_into_cases() {
            let mut first = Engine::default().general(&case).unwrap();
            let serial = Engine::new(EngineConfig { parallel: false, memoize: false, ..EngineConfig::default() });
            let mut second = serial.general(&case).unwrap();
            canonicalize(&mut first);
            canonicalize(&mut second);
            prop_assert_eq!(first, second);
        }
    }

    #[test]
    fn pattern_algebras_are_nilpotent(pairs in prop::collection::vec((0usize..5, 0usize..5), 0..8), word in prop::collection::vec(0usize..16, 16)) {
        // transitive closure of a random relation going upwards
        let mut less = [[false; 5]; 5];
        for (i, j) in pairs {
            if i < j {
                less[i][j] = true;
            }
        }
        for k in 0..5 {
            for i in 0..5 {
                for j in 0..5 {
                    less[i][j] |= less[i][k] && less[k][j];
                }
            }
        }
        let rel: Vec<_> = (0..5).flat_map(|i| (0..5).map(move |j| (i, j))).filter(|&(i, j)| less[i][j]).collect();
        let data = encode_pattern(&Poset::from_pairs(5, &rel).unwrap());
        prop_assume!(data.dim() > 0);
        let f = Field::new(3).unwrap();
        let alg = data.instantiate(&Substitution::new(), &f).unwrap();
        let n = alg.dim();
        let basis = |i: usize| (0..n).map(|k| (k == i) as u8).collect::<Vec<u8>>();
        let mut prod = basis(word[0] % n);
        for &w in &word[1..=n] {
            prod = alg.mul(&prod, &basis(w % n));
        }
        prop_assert!(prod.iter().all(|&c| c == 0));
    }
}

#[test]
fn unitriangular_categorisations_match_class_counts() {
    for n in 1..=4 {
        let data = encode_pattern(&Poset::chain(n));
        let o = Engine::default().general(&data).unwrap();
        for q in [2, 3, 4, 5] {
            if n == 4 && q > 3 {
                continue;
            }
            let r = verify_categorisation(&format!("T_{n}"), &data, Subject::All, &o, q).unwrap();
            assert!(r.passed(), "n = {n}, q = {q}: {:?}", r.checks);
        }
    }
}
