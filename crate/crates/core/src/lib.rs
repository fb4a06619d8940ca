//! A weak-memory robustness sanitizer and litmus harness.
//!
//! Small concurrent programs run under sequential consistency with
//! location-clock instrumentation that detects robustness violations against
//! an RC20-style memory model, plus a vector-clock race detector for
//! non-atomic accesses. Every verdict can be cross-validated against a
//! brute-force execution-graph oracle.

pub mod bm;
pub mod clocks;
pub mod clocksem;
pub mod graph;
pub mod ids;
pub mod interp;
pub mod lang;
pub mod lc;
pub mod oracle;
pub mod race;
