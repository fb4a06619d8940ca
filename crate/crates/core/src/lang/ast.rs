//! Litmus-test AST: threads of instructions over declared atomic and
//! non-atomic locations.

use crate::clocks::CriticalPairs;
use crate::ids::{LocId, Pos, RegId, ThreadId, Value};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Access mode (memory ordering). `Na` marks non-atomic accesses; atomics
/// use the other four. The ordering is rlx ⊑ acq ⊑ acqrel and
/// rlx ⊑ rel ⊑ acqrel; `Na` is incomparable with the atomic modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Na,
    Rlx,
    Acq,
    Rel,
    AcqRel,
}

impl Mode {
    pub fn at_least_acq(self) -> bool {
        matches!(self, Mode::Acq | Mode::AcqRel)
    }

    pub fn at_least_rel(self) -> bool {
        matches!(self, Mode::Rel | Mode::AcqRel)
    }

    /// The acquire half of a mode, used for the read event of a failed CAS.
    pub fn read_half(self) -> Mode {
        match self {
            Mode::AcqRel | Mode::Acq => Mode::Acq,
            Mode::Rel | Mode::Rlx => Mode::Rlx,
            Mode::Na => Mode::Na,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Na => "na",
            Mode::Rlx => "rlx",
            Mode::Acq => "acq",
            Mode::Rel => "rel",
            Mode::AcqRel => "acqrel",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Eq,
    Ne,
    Lt,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
        }
    }
}

/// Expressions over registers and constants. Comparisons yield 0/1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Const(Value),
    Reg(RegId),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Inst {
    Store {
        loc: LocId,
        value: Expr,
        mode: Mode,
        pos: Pos,
    },
    Load {
        reg: RegId,
        loc: LocId,
        mode: Mode,
        pos: Pos,
    },
    Fadd {
        reg: RegId,
        loc: LocId,
        addend: Expr,
        mode: Mode,
        pos: Pos,
    },
    CasWeak {
        reg: RegId,
        loc: LocId,
        expected: Value,
        desired: Expr,
        mode: Mode,
        pos: Pos,
    },
    CasStrong {
        reg: RegId,
        loc: LocId,
        expected: Value,
        desired: Expr,
        mode: Mode,
        pos: Pos,
    },
    Bcas {
        loc: LocId,
        expected: Value,
        desired: Expr,
        mode: Mode,
        pos: Pos,
    },
    Wait {
        loc: LocId,
        expected: Value,
        pos: Pos,
    },
    Fence {
        mode: Mode,
        pos: Pos,
    },
    NaStore {
        loc: LocId,
        value: Expr,
        pos: Pos,
    },
    NaLoad {
        reg: RegId,
        loc: LocId,
        pos: Pos,
    },
    Local {
        reg: RegId,
        value: Expr,
        pos: Pos,
    },
    If {
        cond: Expr,
        then_body: Vec<Inst>,
        else_body: Vec<Inst>,
        pos: Pos,
    },
    While {
        cond: Expr,
        body: Vec<Inst>,
        pos: Pos,
    },
    Skip {
        pos: Pos,
    },
}

impl Inst {
    pub fn pos(&self) -> Pos {
        match self {
            Inst::Store { pos, .. }
            | Inst::Load { pos, .. }
            | Inst::Fadd { pos, .. }
            | Inst::CasWeak { pos, .. }
            | Inst::CasStrong { pos, .. }
            | Inst::Bcas { pos, .. }
            | Inst::Wait { pos, .. }
            | Inst::Fence { pos, .. }
            | Inst::NaStore { pos, .. }
            | Inst::NaLoad { pos, .. }
            | Inst::Local { pos, .. }
            | Inst::If { pos, .. }
            | Inst::While { pos, .. }
            | Inst::Skip { pos } => *pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocInfo {
    pub name: String,
    pub atomic: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Thread {
    pub name: String,
    pub body: Vec<Inst>,
    /// Register names in interning order; index = RegId.
    pub regs: Vec<String>,
}

/// A parsed litmus program. Thread ids are assigned left to right; all
/// locations start at 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub locs: Vec<LocInfo>,
    pub threads: Vec<Thread>,
    /// Distinguished location backing desugared sc fences, if any.
    pub sc_loc: Option<LocId>,
}

impl Program {
    pub fn n_threads(&self) -> usize {
        self.threads.len()
    }

    pub fn n_locs(&self) -> usize {
        self.locs.len()
    }

    pub fn loc_name(&self, loc: LocId) -> &str {
        &self.locs[loc.index()].name
    }

    pub fn is_atomic(&self, loc: LocId) -> bool {
        self.locs[loc.index()].atomic
    }

    pub fn thread_name(&self, tid: ThreadId) -> &str {
        &self.threads[tid.index()].name
    }

    pub fn atomic_locs(&self) -> impl Iterator<Item = LocId> + '_ {
        (0..self.locs.len() as u32)
            .map(LocId)
            .filter(|l| self.is_atomic(*l))
    }

    pub fn na_locs(&self) -> impl Iterator<Item = LocId> + '_ {
        (0..self.locs.len() as u32)
            .map(LocId)
            .filter(|l| !self.is_atomic(*l))
    }

    /// The critical (location, value) pairs: one per wait, BCAS, and strong
    /// CAS expected value in the program.
    pub fn critical_pairs(&self) -> CriticalPairs {
        let mut pairs = Vec::new();
        for thread in &self.threads {
            collect_pairs(&thread.body, &mut pairs);
        }
        CriticalPairs::from_pairs(pairs)
    }
}

fn collect_pairs(body: &[Inst], out: &mut Vec<(LocId, Value)>) {
    for inst in body {
        match inst {
            Inst::Wait { loc, expected, .. }
            | Inst::Bcas { loc, expected, .. }
            | Inst::CasStrong { loc, expected, .. } => out.push((*loc, *expected)),
            Inst::If {
                then_body,
                else_body,
                ..
            } => {
                collect_pairs(then_body, out);
                collect_pairs(else_body, out);
            }
            Inst::While { body, .. } => collect_pairs(body, out),
            _ => {}
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("register {name} read before assignment")]
    UndefinedRegister { name: String },
}

/// Evaluate an expression over a thread's register file.
pub fn eval(expr: &Expr, regs: &[Option<Value>], names: &[String]) -> Result<Value, EvalError> {
    match expr {
        Expr::Const(v) => Ok(*v),
        Expr::Reg(r) => regs[r.0 as usize].ok_or_else(|| EvalError::UndefinedRegister {
            name: names[r.0 as usize].clone(),
        }),
        Expr::Bin(op, a, b) => {
            let a = eval(a, regs, names)?;
            let b = eval(b, regs, names)?;
            Ok(match op {
                BinOp::Add => a.wrapping_add(b),
                BinOp::Sub => a.wrapping_sub(b),
                BinOp::Eq => (a == b) as Value,
                BinOp::Ne => (a != b) as Value,
                BinOp::Lt => (a < b) as Value,
            })
        }
    }
}
