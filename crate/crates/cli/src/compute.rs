//! Running the pattern engine on a poset and extracting the degree table.

use std::time::{Duration, Instant};

use unichar_core::engine::EngineStats;
use unichar_core::patterns::PatternStats;
use unichar_core::{
    resolve, Categorisation, Engine, EngineConfig, PatternEngine, Poset, ResolvedTable,
};

/// A finished run: the table plus what it took to get there.
#[derive(Clone, Debug)]
pub struct Computation {
    pub table: ResolvedTable,
    pub categorisation: Categorisation,
    pub engine_stats: EngineStats,
    pub pattern_stats: PatternStats,
    pub elapsed: Duration,
}

pub fn compute_poset(p: &Poset, config: EngineConfig) -> unichar_core::Result<Computation> {
    let start = Instant::now();
    let engine = PatternEngine::new(Engine::new(config));
    let mut categorisation = engine.run(p)?;
    unichar_core::engine::canonicalize(&mut categorisation);
    let n = p.relation().len() == p.len() * p.len().saturating_sub(1) / 2;
    let table = resolve(&categorisation, n.then_some(p.len()))?;
    Ok(Computation {
        table,
        categorisation,
        engine_stats: engine.engine().stats(),
        pattern_stats: engine.stats(),
        elapsed: start.elapsed(),
    })
}

/// The table for `U_n(q)`.
pub fn compute_unitriangular(n: usize, config: EngineConfig) -> unichar_core::Result<Computation> {
    compute_poset(&Poset::chain(n), config)
}
