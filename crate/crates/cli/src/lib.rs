//! Driver for the character-counting engine: tables of `N_{n,e}(q)` for
//! `U_n(q)` and pattern groups, regression against the published tables,
//! formal identities, and brute-force verification suites.

#![allow(clippy::needless_range_loop)]

pub mod cache;
pub mod compute;
pub mod golden;
pub mod identities;
pub mod report;
pub mod suites;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// A requested check (identities, verification) failed.
    pub const CHECK_FAILED: i32 = 1;
    /// Unresolved counts or unrecognised families remain.
    pub const UNRESOLVED: i32 = 2;
    pub const REGRESSION_MISMATCH: i32 = 3;
}
