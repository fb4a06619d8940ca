//! The litmus-test DSL: AST, parser, pretty-printer, and the per-thread
//! transition semantics shared by the interpreter and the oracle.

pub mod ast;
pub mod exec;
pub mod parse;
pub mod pretty;

pub use ast::{eval, BinOp, EvalError, Expr, Inst, LocInfo, Mode, Program, Thread};
pub use exec::{
    advance, commit_silent, flatten, pending, AccessDesc, AccessEffect, CheckKind, DoneReason,
    ExecError, FlatOp, FlatThread, Pending, ThreadState,
};
pub use parse::{parse, ParseError, SC_FENCE_NAME};
pub use pretty::pretty;
