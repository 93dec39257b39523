//! Formal identities every table for `U_n(q)` must satisfy.

use std::collections::BTreeMap;

use num_traits::Signed;
use serde::Serialize;
use unichar_core::{CountPoly, ResolvedTable};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityOutcome {
    pub n: usize,
    /// `None` for the generic table, `Some(p)` for characteristic `p`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub characteristic: Option<u64>,
    pub identity: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Checks, for the table of `U_n(q)`:
/// `sum_e N_e(q) q^{2e} = q^{n(n-1)/2}`, `N_0(q) = q^{n-1}`, and that every
/// `N_e(t+1)` has nonnegative coefficients.
pub fn check_entries(
    n: usize,
    characteristic: Option<u64>,
    entries: &BTreeMap<u32, CountPoly>,
) -> Vec<IdentityOutcome> {
    let outcome = |identity, pass, detail: String| IdentityOutcome {
        n,
        characteristic,
        identity,
        pass,
        detail,
    };
    let mut weighted = CountPoly::zero();
    for (&e, p) in entries {
        weighted += &p.scale(0, 2 * e, 0);
    }
    let order = CountPoly::q_pow((n * (n - 1) / 2) as u32);
    let linear = CountPoly::q_pow(n as u32 - 1);
    let n0 = entries.get(&0).cloned().unwrap_or_default();
    let negative: Vec<String> = entries
        .iter()
        .filter(|(_, p)| p.shift_q(1).terms().any(|(_, _, c)| c.is_negative()))
        .map(|(e, p)| format!("N_{e}(t+1) = {}", p.shift_q(1)))
        .collect();
    vec![
        outcome(
            "sum of squared degrees",
            weighted == order,
            format!("sum_e N_e(q) q^(2e) = {weighted}, group order {order}"),
        ),
        outcome(
            "linear characters",
            n0 == linear,
            format!("N_0(q) = {n0}, expected {linear}"),
        ),
        outcome(
            "nonnegative in t = q - 1",
            negative.is_empty(),
            if negative.is_empty() {
                format!("{} rows checked", entries.len())
            } else {
                negative.join("; ")
            },
        ),
    ]
}

/// [`check_entries`] on the generic table and on every characteristic with
/// its own correction.
pub fn check_table(n: usize, table: &ResolvedTable) -> Vec<IdentityOutcome> {
    let mut out = check_entries(n, None, &table.entries);
    for &p in table.corrections.keys() {
        out.extend(check_entries(
            n,
            Some(p),
            &table.entries_at_characteristic(p),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[(u32, &str)]) -> BTreeMap<u32, CountPoly> {
        rows.iter()
            .map(|&(e, p)| (e, CountPoly::parse_q(p).unwrap()))
            .collect()
    }

    #[test]
    fn u3_identities() {
        let t = table(&[(0, "q^2"), (1, "q - 1")]);
        assert!(check_entries(3, None, &t).iter().all(|o| o.pass));
    }

    #[test]
    fn broken_tables_fail() {
        let t = table(&[(0, "q^2"), (1, "q")]);
        let out = check_entries(3, None, &t);
        assert!(!out[0].pass && out[1].pass && out[2].pass);
        // q - 2 = t - 1
        let t = table(&[(0, "q^2"), (1, "q - 2"), (2, "1")]);
        assert!(!check_entries(3, None, &t)[2].pass);
    }

    #[test]
    fn golden_tables_satisfy_the_identities() {
        for n in crate::golden::GOLDEN_NS {
            let t = crate::golden::load(n, None).unwrap();
            for o in check_entries(n, None, &t) {
                assert!(o.pass, "n = {n}: {}: {}", o.identity, o.detail);
            }
        }
    }
}
