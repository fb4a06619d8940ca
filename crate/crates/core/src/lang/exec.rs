//! Memory-model-independent per-thread transition semantics.
//!
//! Each thread is compiled to a flat op sequence with explicit jumps;
//! `pending` inspects the next step against a memory snapshot without
//! committing it. Blocking (wait/BCAS) is a function of the current memory
//! value; a blocked thread is simply not schedulable until enabled.

use super::ast::*;
use crate::ids::{LocId, Pos, RegId, Value};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExecError {
    #[error("{pos}: {source}")]
    Eval {
        pos: Pos,
        #[source]
        source: EvalError,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FlatOp {
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
    Skip {
        pos: Pos,
    },
    /// Condition evaluation of an `if` or `while`; jumps when false.
    Branch {
        cond: Expr,
        jump_if_false: usize,
        loop_id: Option<u32>,
        pos: Pos,
    },
    /// Back-edge or if-exit; not a schedulable step.
    Jump {
        target: usize,
    },
}

impl FlatOp {
    pub fn pos(&self) -> Option<Pos> {
        match self {
            FlatOp::Store { pos, .. }
            | FlatOp::Load { pos, .. }
            | FlatOp::Fadd { pos, .. }
            | FlatOp::CasWeak { pos, .. }
            | FlatOp::CasStrong { pos, .. }
            | FlatOp::Bcas { pos, .. }
            | FlatOp::Wait { pos, .. }
            | FlatOp::Fence { pos, .. }
            | FlatOp::NaStore { pos, .. }
            | FlatOp::NaLoad { pos, .. }
            | FlatOp::Local { pos, .. }
            | FlatOp::Skip { pos }
            | FlatOp::Branch { pos, .. } => Some(*pos),
            FlatOp::Jump { .. } => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlatThread {
    pub ops: Vec<FlatOp>,
    pub n_regs: usize,
    pub n_loops: usize,
}

pub fn flatten(thread: &Thread) -> FlatThread {
    let mut ops = Vec::new();
    let mut n_loops = 0;
    flatten_block(&thread.body, &mut ops, &mut n_loops);
    FlatThread {
        ops,
        n_regs: thread.regs.len(),
        n_loops: n_loops as usize,
    }
}

fn flatten_block(body: &[Inst], ops: &mut Vec<FlatOp>, n_loops: &mut u32) {
    for inst in body {
        match inst {
            Inst::Store {
                loc,
                value,
                mode,
                pos,
            } => ops.push(FlatOp::Store {
                loc: *loc,
                value: value.clone(),
                mode: *mode,
                pos: *pos,
            }),
            Inst::Load {
                reg,
                loc,
                mode,
                pos,
            } => ops.push(FlatOp::Load {
                reg: *reg,
                loc: *loc,
                mode: *mode,
                pos: *pos,
            }),
            Inst::Fadd {
                reg,
                loc,
                addend,
                mode,
                pos,
            } => ops.push(FlatOp::Fadd {
                reg: *reg,
                loc: *loc,
                addend: addend.clone(),
                mode: *mode,
                pos: *pos,
            }),
            Inst::CasWeak {
                reg,
                loc,
                expected,
                desired,
                mode,
                pos,
            } => ops.push(FlatOp::CasWeak {
                reg: *reg,
                loc: *loc,
                expected: *expected,
                desired: desired.clone(),
                mode: *mode,
                pos: *pos,
            }),
            Inst::CasStrong {
                reg,
                loc,
                expected,
                desired,
                mode,
                pos,
            } => ops.push(FlatOp::CasStrong {
                reg: *reg,
                loc: *loc,
                expected: *expected,
                desired: desired.clone(),
                mode: *mode,
                pos: *pos,
            }),
            Inst::Bcas {
                loc,
                expected,
                desired,
                mode,
                pos,
            } => ops.push(FlatOp::Bcas {
                loc: *loc,
                expected: *expected,
                desired: desired.clone(),
                mode: *mode,
                pos: *pos,
            }),
            Inst::Wait { loc, expected, pos } => ops.push(FlatOp::Wait {
                loc: *loc,
                expected: *expected,
                pos: *pos,
            }),
            Inst::Fence { mode, pos } => ops.push(FlatOp::Fence {
                mode: *mode,
                pos: *pos,
            }),
            Inst::NaStore { loc, value, pos } => ops.push(FlatOp::NaStore {
                loc: *loc,
                value: value.clone(),
                pos: *pos,
            }),
            Inst::NaLoad { reg, loc, pos } => ops.push(FlatOp::NaLoad {
                reg: *reg,
                loc: *loc,
                pos: *pos,
            }),
            Inst::Local { reg, value, pos } => ops.push(FlatOp::Local {
                reg: *reg,
                value: value.clone(),
                pos: *pos,
            }),
            Inst::Skip { pos } => ops.push(FlatOp::Skip { pos: *pos }),
            Inst::If {
                cond,
                then_body,
                else_body,
                pos,
            } => {
                let branch_at = ops.len();
                ops.push(FlatOp::Branch {
                    cond: cond.clone(),
                    jump_if_false: 0,
                    loop_id: None,
                    pos: *pos,
                });
                flatten_block(then_body, ops, n_loops);
                if else_body.is_empty() {
                    let end = ops.len();
                    patch_branch(ops, branch_at, end);
                } else {
                    let jump_at = ops.len();
                    ops.push(FlatOp::Jump { target: 0 });
                    let else_start = ops.len();
                    patch_branch(ops, branch_at, else_start);
                    flatten_block(else_body, ops, n_loops);
                    let end = ops.len();
                    ops[jump_at] = FlatOp::Jump { target: end };
                }
            }
            Inst::While { cond, body, pos } => {
                let head = ops.len();
                let loop_id = *n_loops;
                *n_loops += 1;
                ops.push(FlatOp::Branch {
                    cond: cond.clone(),
                    jump_if_false: 0,
                    loop_id: Some(loop_id),
                    pos: *pos,
                });
                flatten_block(body, ops, n_loops);
                ops.push(FlatOp::Jump { target: head });
                let end = ops.len();
                patch_branch(ops, head, end);
            }
        }
    }
}

fn patch_branch(ops: &mut [FlatOp], at: usize, target: usize) {
    if let FlatOp::Branch { jump_if_false, .. } = &mut ops[at] {
        *jump_if_false = target;
    }
}

/// Why a thread made it to the end of its op sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoneReason {
    Completed,
    /// A while loop exceeded the unroll bound; a note, not an error.
    BoundExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreadState {
    pub pc: usize,
    pub regs: Vec<Option<Value>>,
    pub loop_counts: Vec<u32>,
    pub done: Option<DoneReason>,
}

impl ThreadState {
    pub fn new(flat: &FlatThread) -> Self {
        let mut st = ThreadState {
            pc: 0,
            regs: vec![None; flat.n_regs],
            loop_counts: vec![0; flat.n_loops],
            done: None,
        };
        st.normalize(flat);
        st
    }

    fn normalize(&mut self, flat: &FlatThread) {
        loop {
            if self.pc >= flat.ops.len() {
                self.done.get_or_insert(DoneReason::Completed);
                return;
            }
            match flat.ops[self.pc] {
                FlatOp::Jump { target } => self.pc = target,
                _ => return,
            }
        }
    }
}

/// The committed effect of an atomic or non-atomic memory access.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessEffect {
    Read,
    Write(Value),
    Rmw { read: Value, write: Value },
}

impl AccessEffect {
    pub fn is_write(self) -> bool {
        !matches!(self, AccessEffect::Read)
    }
}

/// Which robustness check guards the access.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    /// Plain loads and weak CAS.
    Read,
    /// Plain stores and FADD.
    Write,
    Wait(Value),
    Bcas(Value),
    StrongCas(Value),
    /// Non-atomic accesses; guarded by the race detector instead.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccessDesc {
    pub loc: LocId,
    pub atomic: bool,
    pub mode: Mode,
    pub effect: AccessEffect,
    pub check: CheckKind,
    pub kind_name: &'static str,
    pub reg: Option<RegId>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pending {
    Finished(DoneReason),
    /// Local step, skip, or branch-condition evaluation.
    Silent {
        pos: Pos,
    },
    Fence {
        mode: Mode,
        pos: Pos,
    },
    /// A committable memory access.
    Access(AccessDesc),
    /// A wait/BCAS whose expected value is not in memory.
    Blocked(AccessDesc),
}

/// Inspect the next step of a thread under the given memory snapshot.
pub fn pending(
    flat: &FlatThread,
    st: &ThreadState,
    memory: &[Value],
    reg_names: &[String],
) -> Result<Pending, ExecError> {
    if let Some(reason) = st.done {
        return Ok(Pending::Finished(reason));
    }
    let ev = |e: &Expr, pos: Pos| {
        eval(e, &st.regs, reg_names).map_err(|source| ExecError::Eval { pos, source })
    };
    let op = &flat.ops[st.pc];
    Ok(match op {
        FlatOp::Local { pos, .. } | FlatOp::Skip { pos } | FlatOp::Branch { pos, .. } => {
            Pending::Silent { pos: *pos }
        }
        FlatOp::Fence { mode, pos } => Pending::Fence {
            mode: *mode,
            pos: *pos,
        },
        FlatOp::Store {
            loc,
            value,
            mode,
            pos,
        } => Pending::Access(AccessDesc {
            loc: *loc,
            atomic: true,
            mode: *mode,
            effect: AccessEffect::Write(ev(value, *pos)?),
            check: CheckKind::Write,
            kind_name: "store",
            reg: None,
            pos: *pos,
        }),
        FlatOp::Load {
            reg,
            loc,
            mode,
            pos,
        } => Pending::Access(AccessDesc {
            loc: *loc,
            atomic: true,
            mode: *mode,
            effect: AccessEffect::Read,
            check: CheckKind::Read,
            kind_name: "load",
            reg: Some(*reg),
            pos: *pos,
        }),
        FlatOp::Fadd {
            reg,
            loc,
            addend,
            mode,
            pos,
        } => {
            let read = memory[loc.index()];
            Pending::Access(AccessDesc {
                loc: *loc,
                atomic: true,
                mode: *mode,
                effect: AccessEffect::Rmw {
                    read,
                    write: read.wrapping_add(ev(addend, *pos)?),
                },
                check: CheckKind::Write,
                kind_name: "fadd",
                reg: Some(*reg),
                pos: *pos,
            })
        }
        FlatOp::CasWeak {
            reg,
            loc,
            expected,
            desired,
            mode,
            pos,
        } => {
            let read = memory[loc.index()];
            // Under SC simulation a weak CAS fails only on value mismatch;
            // spurious failure is accounted for by the read-side check.
            let (effect, mode) = if read == *expected {
                (
                    AccessEffect::Rmw {
                        read,
                        write: ev(desired, *pos)?,
                    },
                    *mode,
                )
            } else {
                (AccessEffect::Read, mode.read_half())
            };
            Pending::Access(AccessDesc {
                loc: *loc,
                atomic: true,
                mode,
                effect,
                check: CheckKind::Read,
                kind_name: "cas_weak",
                reg: Some(*reg),
                pos: *pos,
            })
        }
        FlatOp::CasStrong {
            reg,
            loc,
            expected,
            desired,
            mode,
            pos,
        } => {
            let read = memory[loc.index()];
            let (effect, mode) = if read == *expected {
                (
                    AccessEffect::Rmw {
                        read,
                        write: ev(desired, *pos)?,
                    },
                    *mode,
                )
            } else {
                (AccessEffect::Read, mode.read_half())
            };
            Pending::Access(AccessDesc {
                loc: *loc,
                atomic: true,
                mode,
                effect,
                check: CheckKind::StrongCas(*expected),
                kind_name: "cas_strong",
                reg: Some(*reg),
                pos: *pos,
            })
        }
        FlatOp::Bcas {
            loc,
            expected,
            desired,
            mode,
            pos,
        } => {
            let read = memory[loc.index()];
            let desc = AccessDesc {
                loc: *loc,
                atomic: true,
                mode: *mode,
                effect: AccessEffect::Rmw {
                    read,
                    write: if read == *expected {
                        ev(desired, *pos)?
                    } else {
                        read
                    },
                },
                check: CheckKind::Bcas(*expected),
                kind_name: "bcas",
                reg: None,
                pos: *pos,
            };
            if read == *expected {
                Pending::Access(desc)
            } else {
                Pending::Blocked(desc)
            }
        }
        FlatOp::Wait { loc, expected, pos } => {
            let desc = AccessDesc {
                loc: *loc,
                atomic: true,
                mode: Mode::Acq,
                effect: AccessEffect::Read,
                check: CheckKind::Wait(*expected),
                kind_name: "wait",
                reg: None,
                pos: *pos,
            };
            if memory[loc.index()] == *expected {
                Pending::Access(desc)
            } else {
                Pending::Blocked(desc)
            }
        }
        FlatOp::NaStore { loc, value, pos } => Pending::Access(AccessDesc {
            loc: *loc,
            atomic: false,
            mode: Mode::Na,
            effect: AccessEffect::Write(ev(value, *pos)?),
            check: CheckKind::None,
            kind_name: "na-store",
            reg: None,
            pos: *pos,
        }),
        FlatOp::NaLoad { reg, loc, pos } => Pending::Access(AccessDesc {
            loc: *loc,
            atomic: false,
            mode: Mode::Na,
            effect: AccessEffect::Read,
            check: CheckKind::None,
            kind_name: "na-load",
            reg: Some(*reg),
            pos: *pos,
        }),
        FlatOp::Jump { .. } => unreachable!("pc never rests on a jump"),
    })
}

/// Commit a silent step (local assignment, skip, or branch), advancing the pc.
pub fn commit_silent(
    flat: &FlatThread,
    st: &mut ThreadState,
    loop_bound: u32,
    reg_names: &[String],
) -> Result<(), ExecError> {
    match &flat.ops[st.pc] {
        FlatOp::Local { reg, value, pos } => {
            let v = eval(value, &st.regs, reg_names)
                .map_err(|source| ExecError::Eval { pos: *pos, source })?;
            st.regs[reg.0 as usize] = Some(v);
            st.pc += 1;
        }
        FlatOp::Skip { .. } => st.pc += 1,
        FlatOp::Branch {
            cond,
            jump_if_false,
            loop_id,
            pos,
        } => {
            let v = eval(cond, &st.regs, reg_names)
                .map_err(|source| ExecError::Eval { pos: *pos, source })?;
            if v != 0 {
                if let Some(id) = loop_id {
                    let count = &mut st.loop_counts[*id as usize];
                    *count += 1;
                    if *count > loop_bound {
                        st.done = Some(DoneReason::BoundExhausted);
                        return Ok(());
                    }
                }
                st.pc += 1;
            } else {
                st.pc = *jump_if_false;
            }
        }
        other => unreachable!("commit_silent on {other:?}"),
    }
    st.normalize(flat);
    Ok(())
}

/// Advance past a committed access or fence.
pub fn advance(flat: &FlatThread, st: &mut ThreadState) {
    st.pc += 1;
    st.normalize(flat);
}
