use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use unichar::cache::{Cache, CACHE_ENV};
use unichar::compute::{compute_poset, compute_unitriangular, Computation};
use unichar::report::{render, Format};
use unichar::{exit, golden, identities, suites};
use unichar_core::oracle::VerificationReport;
use unichar_core::{CoreError, EngineConfig, Poset, PosetSpec, ResolvedTable};

#[derive(Parser)]
#[command(
    name = "unichar",
    version,
    about = "Count irreducible characters of unitriangular and pattern groups by degree"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for cached tables.
    #[arg(long, global = true, env = CACHE_ENV)]
    cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the table N_e(q) for U_n(q) or a pattern group.
    Compute {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Write the table here instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[command(flatten)]
        budget: Budget,
        /// Print run statistics to stderr.
        #[arg(long)]
        stats: bool,
    },
    /// Compare computed tables with the published ones for n = 10..13.
    Regress {
        #[arg(long, value_delimiter = ',', default_values_t = golden::GOLDEN_NS)]
        n: Vec<usize>,
        /// Read n{n}.tsv from this directory instead of the built-in tables.
        #[arg(long)]
        golden_dir: Option<PathBuf>,
        #[command(flatten)]
        budget: Budget,
    },
    /// Check formal identities on the tables for n = 1..=max_n.
    Identities {
        #[arg(long, default_value_t = 13)]
        max_n: usize,
        #[command(flatten)]
        budget: Budget,
    },
    /// Run brute-force verification suites.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        /// Largest n for the unitriangular suite.
        #[arg(long, default_value_t = 5)]
        max_n: usize,
        /// Field orders for the oracle.
        #[arg(long, value_delimiter = ',', default_values_t = vec![2, 3])]
        q: Vec<u32>,
        /// Random instances per randomised suite.
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the raw family and unresolved records of a run as JSON.
    DumpFamilies {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        budget: Budget,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Input {
    /// Compute for U_n(q).
    #[arg(long)]
    n: Option<usize>,
    /// Compute for the pattern group of a poset given as JSON
    /// {"elems": [...], "rel": [[a, b], ...]}.
    #[arg(long)]
    poset: Option<PathBuf>,
}

#[derive(Args)]
struct Budget {
    /// Recursion depth after which inputs are left as families.
    #[arg(long, default_value_t = 10_000)]
    max_depth: usize,
    /// Ignore and do not write the cache.
    #[arg(long)]
    no_cache: bool,
}

impl Budget {
    fn config(&self) -> EngineConfig {
        EngineConfig {
            max_depth: self.max_depth,
            ..EngineConfig::default()
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Unitriangular,
    TypeB,
    General,
    Orbits,
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            let unresolved = e
                .downcast_ref::<CoreError>()
                .is_some_and(|c| matches!(c, CoreError::UnknownCore(_)));
            ExitCode::from(if unresolved {
                exit::UNRESOLVED
            } else {
                exit::CHECK_FAILED
            } as u8)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let cache = cli.cache_dir.clone().map(Cache::new);
    match cli.command {
        Command::Compute {
            input,
            format,
            output,
            budget,
            stats,
        } => {
            let table = table_for(&input, &budget, cache.as_ref(), stats)?;
            let text = render(&table, format);
            match output {
                Some(path) => std::fs::write(&path, text)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => print_stdout(text.trim_end())?,
            }
            Ok(if table.is_complete() {
                exit::OK
            } else {
                exit::UNRESOLVED
            })
        }
        Command::Regress {
            n,
            golden_dir,
            budget,
        } => {
            let mut code = exit::OK;
            for n in n {
                let expected = golden::load(n, golden_dir.as_deref())?;
                let table = unitriangular(n, &budget, cache.as_ref(), false)?;
                let mismatches = golden::compare(n, &expected, &table.entries);
                match mismatches.first() {
                    None => println!("n = {n}: ok ({} rows)", expected.len()),
                    Some(m) => {
                        println!("n = {n}: {} mismatches, first: {m}", mismatches.len());
                        code = exit::REGRESSION_MISMATCH;
                    }
                }
                if !table.is_uniform() {
                    println!(
                        "n = {n}: note: table depends on the characteristic {:?}",
                        table.corrections.keys()
                    );
                }
            }
            Ok(code)
        }
        Command::Identities { max_n, budget } => {
            let mut code = exit::OK;
            for n in 1..=max_n {
                let table = unitriangular(n, &budget, cache.as_ref(), false)?;
                for o in identities::check_table(n, &table) {
                    let at = o
                        .characteristic
                        .map(|p| format!(" (characteristic {p})"))
                        .unwrap_or_default();
                    println!(
                        "n = {n}{at}: {}: {} ({})",
                        o.identity,
                        if o.pass { "ok" } else { "FAIL" },
                        o.detail
                    );
                    if !o.pass {
                        code = exit::CHECK_FAILED;
                    }
                }
            }
            Ok(code)
        }
        Command::Verify {
            suite,
            max_n,
            q,
            instances,
            seed,
        } => {
            if let Some(bad) = q.iter().find(|q| ![2, 3, 4, 5].contains(*q)) {
                bail!("unsupported field order {bad}: the oracle handles 2, 3, 4 and 5");
            }
            let mut report = VerificationReport::default();
            let wants = |s| suite == s || suite == Suite::All;
            if wants(Suite::Unitriangular) {
                report.extend(suites::unitriangular_suite(max_n, &q)?);
            }
            if wants(Suite::TypeB) {
                report.extend(suites::type_b_suite(seed, instances, &q)?);
            }
            if wants(Suite::General) {
                report.extend(suites::general_suite(seed, instances, &q)?);
            }
            if wants(Suite::Orbits) {
                report.extend(suites::orbit_suite(seed, instances, &q)?);
            }
            print_stdout(&serde_json::to_string_pretty(&report.checks)?)?;
            let failed = report.failures().count();
            eprintln!("{} checks, {failed} failed", report.checks.len());
            Ok(if failed == 0 {
                exit::OK
            } else {
                exit::CHECK_FAILED
            })
        }
        Command::DumpFamilies { input, budget } => {
            let c = run_input(&input, &budget, false)?;
            let dump = serde_json::json!({
                "families": c.categorisation.families,
                "unresolved_counts": c.categorisation.unresolved_counts,
            });
            print_stdout(&serde_json::to_string_pretty(&dump)?)?;
            Ok(if c.categorisation.unresolved_counts.is_empty() {
                exit::OK
            } else {
                exit::UNRESOLVED
            })
        }
    }
}

/// Writes `text` and a newline; a closed pipe is not an error.
fn print_stdout(text: &str) -> std::io::Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => other,
    }
}

fn read_poset(path: &PathBuf) -> anyhow::Result<Poset> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec: PosetSpec =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(Poset::from_spec(&spec)?)
}

fn run_input(input: &Input, budget: &Budget, stats: bool) -> anyhow::Result<Computation> {
    let c = match (&input.n, &input.poset) {
        (Some(n), _) => {
            if *n == 0 {
                bail!("n must be at least 1");
            }
            compute_unitriangular(*n, budget.config())?
        }
        (None, Some(path)) => compute_poset(&read_poset(path)?, budget.config())?,
        (None, None) => bail!("either --n or --poset is required"),
    };
    if stats {
        eprintln!(
            "elapsed {:.3}s\nengine {:?}\npatterns {:?}\nexceptional families {}, dropped {}",
            c.elapsed.as_secs_f64(),
            c.engine_stats,
            c.pattern_stats,
            c.table.exceptional.len(),
            c.table.dropped_families
        );
    }
    Ok(c)
}

fn table_for(
    input: &Input,
    budget: &Budget,
    cache: Option<&Cache>,
    stats: bool,
) -> anyhow::Result<ResolvedTable> {
    match input.n {
        Some(n) => unitriangular(n, budget, cache, stats),
        None => Ok(run_input(input, budget, stats)?.table),
    }
}

/// The table for `U_n`, from the cache when possible.
fn unitriangular(
    n: usize,
    budget: &Budget,
    cache: Option<&Cache>,
    stats: bool,
) -> anyhow::Result<ResolvedTable> {
    let cache = cache.filter(|_| !budget.no_cache);
    if let Some(table) = cache.and_then(|c| c.load(n)) {
        return Ok(table);
    }
    let input = Input {
        n: Some(n),
        poset: None,
    };
    let table = run_input(&input, budget, stats)?.table;
    if let Some(c) = cache {
        if table.is_complete() {
            c.store(n, &table)
                .with_context(|| format!("writing cache in {}", c.dir().display()))?;
        }
    }
    Ok(table)
}
