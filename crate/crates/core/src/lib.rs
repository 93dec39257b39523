//! Counting irreducible characters of unitriangular groups by degree.
//!
//! The engine works with parametrised families of nilpotent algebras
//! ([`AlgebraicData`]) and reduces them by two kinds of contraction until only
//! zero algebras, counted by solving polynomial systems over `F_q`, remain.

#![allow(clippy::needless_range_loop)]

pub mod algdata;
pub mod engine;
pub mod error;
pub mod field;
pub mod oracle;
pub mod patterns;
pub mod polyring;
pub mod solcount;

pub use algdata::{
    AlgebraicData, ConcreteAlgebra, Param, ParameterSystem, Restriction, Substitution,
};
pub use engine::{
    general, resolve, type_b, Categorisation, Engine, EngineConfig, FamilyRecord, FamilyRef,
    ResolvedTable,
};
pub use error::{CoreError, Result};
pub use field::{Field, Fq};
pub use patterns::{pattern_algebra, PatternEngine, Poset, PosetSpec};
pub use polyring::{CountPoly, Monomial, ParamPoly, TMode};
pub use solcount::{count_solutions, CharCount, CountResult};
