//! Report formats for a computed table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use unichar_core::{AlgebraicData, CountPoly, ResolvedTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Latex,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Row {
    pub e: u32,
    pub poly: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyRow {
    pub core: AlgebraicData,
    pub z: usize,
    pub k: u32,
    pub l: u32,
    pub m: u32,
    /// Characters in the family, all of degree `q^m`.
    pub count: String,
}

/// The JSON report. Timings and counters are left out so that identical
/// inputs give byte-identical reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub table: Vec<Row>,
    /// Characteristic `p` -> rows that differ in characteristic `p`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub by_characteristic: BTreeMap<u64, Vec<Row>>,
    pub families: Vec<FamilyRow>,
    pub dropped_families: usize,
    pub unresolved_counts: usize,
}

fn rows(entries: &BTreeMap<u32, CountPoly>) -> Vec<Row> {
    entries
        .iter()
        .map(|(&e, p)| Row {
            e,
            poly: p.to_string(),
        })
        .collect()
}

impl Report {
    pub fn new(table: &ResolvedTable) -> Self {
        let by_characteristic = table
            .corrections
            .keys()
            .map(|&p| {
                let at_p = table.entries_at_characteristic(p);
                let changed = at_p
                    .into_iter()
                    .chain(table.entries.keys().map(|&e| (e, CountPoly::zero())))
                    .filter(|(e, c)| table.entries.get(e).cloned().unwrap_or_default() != *c)
                    .collect::<BTreeMap<_, _>>();
                (p, rows(&changed))
            })
            .collect();
        Report {
            n: table.n,
            table: rows(&table.entries),
            by_characteristic,
            families: table
                .exceptional
                .iter()
                .map(|f| FamilyRow {
                    core: f.core.clone(),
                    z: f.z,
                    k: f.k,
                    l: f.l,
                    m: f.m,
                    count: f.total_count.to_string(),
                })
                .collect(),
            dropped_families: table.dropped_families,
            unresolved_counts: table.unresolved_counts.len(),
        }
    }
}

pub fn render(table: &ResolvedTable, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s =
                serde_json::to_string_pretty(&Report::new(table)).expect("report serialises");
            s.push('\n');
            s
        }
        Format::Csv => render_csv(table),
        Format::Latex => render_latex(table),
    }
}

fn render_csv(table: &ResolvedTable) -> String {
    let mut out = String::from("e,poly\n");
    for (e, p) in &table.entries {
        let _ = writeln!(out, "{e},{p}");
    }
    out
}

/// `q^12` becomes `q^{12}`.
pub fn latex_poly(p: &CountPoly) -> String {
    let mut out = String::new();
    let text = p.to_string();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        out.push(c);
        if c == '^' {
            out.push('{');
            while let Some(d) = chars.next_if(char::is_ascii_digit) {
                out.push(d);
            }
            out.push('}');
        }
    }
    out
}

fn render_latex(table: &ResolvedTable) -> String {
    let title = match table.n {
        Some(n) => format!("$n = {n}$"),
        None => "pattern group".to_string(),
    };
    let mut out = String::new();
    let _ = writeln!(out, "% {title}");
    out.push_str("\\begin{longtable}{r|l}\n");
    out.push_str("$e$ & $N_{n,e}(q)$ \\\\\n\\hline\n");
    for (e, p) in &table.entries {
        let _ = writeln!(out, "{e} & ${}$ \\\\", latex_poly(p));
    }
    out.push_str("\\end{longtable}\n");
    out
}
