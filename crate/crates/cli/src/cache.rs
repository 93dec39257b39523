//! On-disk cache of computed tables, keyed by `n`.

use std::fs;
use std::path::{Path, PathBuf};

use unichar_core::ResolvedTable;

/// Environment variable naming the cache directory.
pub const CACHE_ENV: &str = "UNICHAR_CACHE_DIR";

#[derive(Clone, Debug)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// The cache named by `UNICHAR_CACHE_DIR`, if set.
    pub fn from_env() -> Option<Self> {
        std::env::var_os(CACHE_ENV)
            .filter(|v| !v.is_empty())
            .map(Self::new)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, n: usize) -> PathBuf {
        self.dir
            .join(format!("u{n}-{}.json", env!("CARGO_PKG_VERSION")))
    }

    /// A cached table for `U_n`, ignoring unreadable or stale files.
    pub fn load(&self, n: usize) -> Option<ResolvedTable> {
        let text = fs::read_to_string(self.path(n)).ok()?;
        let table: ResolvedTable = serde_json::from_str(&text).ok()?;
        (table.n == Some(n)).then_some(table)
    }

    pub fn store(&self, n: usize, table: &ResolvedTable) -> std::io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let tmp = self.path(n).with_extension("tmp");
        fs::write(&tmp, serde_json::to_vec(table)?)?;
        fs::rename(tmp, self.path(n))
    }
}
