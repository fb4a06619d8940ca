//! Small interned identifiers shared across the crate.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Interned shared-memory location (atomic or non-atomic).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LocId(pub u32);

/// Thread index; threads are numbered left to right starting at 0 ("t1").
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ThreadId(pub u32);

/// Thread-local register, interned per thread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegId(pub u32);

/// Runtime values are signed 64-bit integers.
pub type Value = i64;

/// Source position of an instruction in the litmus source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

impl ThreadId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl LocId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}
