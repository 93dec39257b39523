//! The published tables of `N_{n,e}(q)` for `10 <= n <= 13`, and comparison
//! against computed tables.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;
use unichar_core::CountPoly;

/// `n` values with a published table.
pub const GOLDEN_NS: [usize; 4] = [10, 11, 12, 13];

#[derive(Debug, Error)]
pub enum GoldenError {
    #[error("no golden table for n = {0}")]
    GoldenMissing(usize),
    #[error("golden table for n = {n}, line {line}: {msg}")]
    Parse { n: usize, line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn embedded(n: usize) -> Option<&'static str> {
    match n {
        10 => Some(include_str!("../data/published/n10.tsv")),
        11 => Some(include_str!("../data/published/n11.tsv")),
        12 => Some(include_str!("../data/published/n12.tsv")),
        13 => Some(include_str!("../data/published/n13.tsv")),
        _ => None,
    }
}

/// Parses `e<TAB>poly` lines; `#` starts a comment.
pub fn parse(n: usize, text: &str) -> Result<BTreeMap<u32, CountPoly>, GoldenError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| GoldenError::Parse {
            n,
            line: i + 1,
            msg,
        };
        let (e, poly) = line
            .split_once('\t')
            .ok_or_else(|| err("expected e<TAB>poly".into()))?;
        let e: u32 = e
            .trim()
            .parse()
            .map_err(|_| err(format!("bad degree {e:?}")))?;
        let poly = CountPoly::parse_q(poly).map_err(err)?;
        if out.insert(e, poly).is_some() {
            return Err(err(format!("duplicate row for e = {e}")));
        }
    }
    Ok(out)
}

/// The table for `n`, from `dir/n{n}.tsv` if given, else the copy built in.
pub fn load(n: usize, dir: Option<&Path>) -> Result<BTreeMap<u32, CountPoly>, GoldenError> {
    match dir {
        Some(dir) => {
            let path = dir.join(format!("n{n}.tsv"));
            if !path.exists() {
                return Err(GoldenError::GoldenMissing(n));
            }
            parse(n, &std::fs::read_to_string(path)?)
        }
        None => parse(n, embedded(n).ok_or(GoldenError::GoldenMissing(n))?),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub n: usize,
    pub e: u32,
    pub expected: CountPoly,
    pub actual: CountPoly,
}

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "N_{{{},{}}}: expected {}, computed {}",
            self.n, self.e, self.expected, self.actual
        )
    }
}

/// Every `e` where the two tables differ, missing rows counting as zero.
pub fn compare(
    n: usize,
    golden: &BTreeMap<u32, CountPoly>,
    computed: &BTreeMap<u32, CountPoly>,
) -> Vec<Mismatch> {
    let zero = CountPoly::zero();
    let degrees: std::collections::BTreeSet<u32> =
        golden.keys().chain(computed.keys()).copied().collect();
    degrees
        .into_iter()
        .filter_map(|e| {
            let expected = golden.get(&e).unwrap_or(&zero);
            let actual = computed.get(&e).unwrap_or(&zero);
            (expected != actual).then(|| Mismatch {
                n,
                e,
                expected: expected.clone(),
                actual: actual.clone(),
            })
        })
        .collect()
}
