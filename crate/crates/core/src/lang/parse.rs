//! Parser for the litmus DSL.
//!
//! Grammar (informal):
//! ```text
//! program   := decl* thread+
//! decl      := ("atomic" | "nonatomic") ident ("," ident)* ";"
//! thread    := "thread" ident "{" stmt* "}"
//! stmt      := ident "." "store" "(" expr "," mode ")" ";"
//!            | reg "=" ident "." "load" "(" mode ")" ";"
//!            | reg "=" "fadd" "(" ident "," expr "," mode ")" ";"
//!            | reg "=" "cas_weak" "(" ident "," const "," expr "," mode ")" ";"
//!            | reg "=" "cas_strong" "(" ident "," const "," expr "," mode ")" ";"
//!            | "bcas" "(" ident "," const "," expr "," mode ")" ";"
//!            | "wait" "(" ident "," const ")" ";"
//!            | "fence" "(" fmode ")" ";"
//!            | ident "=" expr ";"     // na store / na load / local assign
//!            | "if" "(" expr ")" block ("else" block)?
//!            | "while" "(" expr ")" block
//!            | "skip" ";"
//! ```
//! Registers are thread-local identifiers beginning with `r`. Line comments
//! start with `//`.
//!
//! An `sc` fence is desugared here into the three-instruction sequence
//! `fence(acq); fadd(_, $sc, 0, acqrel); fence(rel)` over a distinguished
//! location `$sc` that no program text can name.

use super::ast::*;
use crate::ids::{LocId, Pos, RegId, Value};
use std::collections::HashMap;
use thiserror::Error;

/// Internal name of the sc-fence backing location and scratch register.
pub const SC_FENCE_NAME: &str = "$sc";

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{pos}: {msg}")]
pub struct ParseError {
    pub pos: Pos,
    pub msg: String,
}

const KEYWORDS: &[&str] = &[
    "atomic",
    "nonatomic",
    "thread",
    "store",
    "load",
    "fadd",
    "cas_weak",
    "cas_strong",
    "bcas",
    "wait",
    "fence",
    "if",
    "else",
    "while",
    "skip",
    "rlx",
    "acq",
    "rel",
    "acqrel",
    "sc",
];

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(Value),
    Sym(&'static str),
    Eof,
}

struct Lexer<'a> {
    src: &'a [u8],
    at: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            at: 0,
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> u8 {
        let c = self.src[self.at];
        self.at += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.at).copied()
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'/') if self.src.get(self.at + 1) == Some(&b'/') => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn next(&mut self) -> Result<(Tok, Pos), ParseError> {
        self.skip_trivia();
        let pos = Pos {
            line: self.line,
            col: self.col,
        };
        let Some(c) = self.peek() else {
            return Ok((Tok::Eof, pos));
        };
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.at;
            while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                self.bump();
            }
            let text = std::str::from_utf8(&self.src[start..self.at])
                .unwrap()
                .to_string();
            return Ok((Tok::Ident(text), pos));
        }
        if c.is_ascii_digit() {
            let start = self.at;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.bump();
            }
            let text = std::str::from_utf8(&self.src[start..self.at]).unwrap();
            let v: Value = text.parse().map_err(|_| ParseError {
                pos,
                msg: format!("integer literal out of range: {text}"),
            })?;
            return Ok((Tok::Int(v), pos));
        }
        let two: &[u8] = &self.src[self.at..(self.at + 2).min(self.src.len())];
        for sym in ["==", "!="] {
            if two == sym.as_bytes() {
                self.bump();
                self.bump();
                return Ok((Tok::Sym(sym), pos));
            }
        }
        let sym = match c {
            b'.' => ".",
            b',' => ",",
            b';' => ";",
            b'(' => "(",
            b')' => ")",
            b'{' => "{",
            b'}' => "}",
            b'=' => "=",
            b'<' => "<",
            b'+' => "+",
            b'-' => "-",
            _ => {
                return Err(ParseError {
                    pos,
                    msg: format!("unexpected character {:?}", c as char),
                })
            }
        };
        self.bump();
        Ok((Tok::Sym(sym), pos))
    }
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    locs: Vec<LocInfo>,
    loc_ids: HashMap<String, LocId>,
    sc_loc: Option<LocId>,
    // per-thread register interning
    regs: Vec<String>,
    reg_ids: HashMap<String, RegId>,
}

pub fn parse(src: &str) -> Result<Program, ParseError> {
    let mut lexer = Lexer::new(src);
    let mut toks = Vec::new();
    loop {
        let t = lexer.next()?;
        let done = t.0 == Tok::Eof;
        toks.push(t);
        if done {
            break;
        }
    }
    let mut p = Parser {
        toks,
        at: 0,
        locs: Vec::new(),
        loc_ids: HashMap::new(),
        sc_loc: None,
        regs: Vec::new(),
        reg_ids: HashMap::new(),
    };
    p.program()
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, pos: Pos, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            pos,
            msg: msg.into(),
        })
    }

    fn expect_sym(&mut self, sym: &str) -> Result<Pos, ParseError> {
        let (t, pos) = self.bump();
        match t {
            Tok::Sym(s) if s == sym => Ok(pos),
            other => self.err(pos, format!("expected {sym:?}, found {}", describe(&other))),
        }
    }

    fn expect_ident(&mut self) -> Result<(String, Pos), ParseError> {
        let (t, pos) = self.bump();
        match t {
            Tok::Ident(s) => Ok((s, pos)),
            other => self.err(
                pos,
                format!("expected identifier, found {}", describe(&other)),
            ),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        while self.at_keyword("atomic") || self.at_keyword("nonatomic") {
            self.decl()?;
        }
        let mut threads: Vec<Thread> = Vec::new();
        while self.at_keyword("thread") {
            let pos = self.pos();
            let thread = self.thread()?;
            if threads.iter().any(|t| t.name == thread.name) {
                return self.err(pos, format!("thread `{}` declared twice", thread.name));
            }
            threads.push(thread);
        }
        let pos = self.pos();
        if *self.peek() != Tok::Eof {
            return self.err(
                pos,
                format!("expected `thread`, found {}", describe(self.peek())),
            );
        }
        if threads.is_empty() {
            return self.err(pos, "program has no threads");
        }
        Ok(Program {
            locs: std::mem::take(&mut self.locs),
            threads,
            sc_loc: self.sc_loc,
        })
    }

    fn decl(&mut self) -> Result<(), ParseError> {
        let (kw, _) = self.expect_ident()?;
        let atomic = kw == "atomic";
        loop {
            let (name, pos) = self.expect_ident()?;
            if KEYWORDS.contains(&name.as_str()) {
                return self.err(
                    pos,
                    format!("`{name}` is a keyword and cannot name a location"),
                );
            }
            if name.starts_with('r') {
                return self.err(
                    pos,
                    format!("location `{name}` may not begin with `r` (reserved for registers)"),
                );
            }
            if self.loc_ids.contains_key(&name) {
                return self.err(pos, format!("location `{name}` declared twice"));
            }
            let id = LocId(self.locs.len() as u32);
            self.loc_ids.insert(name.clone(), id);
            self.locs.push(LocInfo { name, atomic });
            match self.peek() {
                Tok::Sym(",") => {
                    self.bump();
                }
                _ => break,
            }
        }
        self.expect_sym(";")?;
        Ok(())
    }

    fn thread(&mut self) -> Result<Thread, ParseError> {
        self.bump(); // `thread`
        let (name, _) = self.expect_ident()?;
        self.regs.clear();
        self.reg_ids.clear();
        let body = self.block()?;
        Ok(Thread {
            name,
            body,
            regs: std::mem::take(&mut self.regs),
        })
    }

    fn block(&mut self) -> Result<Vec<Inst>, ParseError> {
        self.expect_sym("{")?;
        let mut body = Vec::new();
        while *self.peek() != Tok::Sym("}") {
            if *self.peek() == Tok::Eof {
                return self.err(self.pos(), "unexpected end of input inside block");
            }
            self.stmt(&mut body)?;
        }
        self.bump(); // `}`
        Ok(body)
    }

    fn intern_reg(&mut self, name: &str) -> RegId {
        if let Some(id) = self.reg_ids.get(name) {
            return *id;
        }
        let id = RegId(self.regs.len() as u32);
        self.regs.push(name.to_string());
        self.reg_ids.insert(name.to_string(), id);
        id
    }

    fn lookup_loc(&self, name: &str, pos: Pos) -> Result<LocId, ParseError> {
        self.loc_ids.get(name).copied().ok_or_else(|| ParseError {
            pos,
            msg: format!("undeclared location `{name}`"),
        })
    }

    fn sc_fence_loc(&mut self) -> LocId {
        *self.sc_loc.get_or_insert_with(|| {
            let id = LocId(self.locs.len() as u32);
            self.locs.push(LocInfo {
                name: SC_FENCE_NAME.to_string(),
                atomic: true,
            });
            id
        })
    }

    fn stmt(&mut self, out: &mut Vec<Inst>) -> Result<(), ParseError> {
        let pos = self.pos();
        if self.eat_keyword("skip") {
            self.expect_sym(";")?;
            out.push(Inst::Skip { pos });
            return Ok(());
        }
        if self.eat_keyword("fence") {
            self.expect_sym("(")?;
            let (mode_name, mpos) = self.expect_ident()?;
            self.expect_sym(")")?;
            self.expect_sym(";")?;
            if mode_name == "sc" {
                let loc = self.sc_fence_loc();
                let reg = self.intern_reg(SC_FENCE_NAME);
                out.push(Inst::Fence {
                    mode: Mode::Acq,
                    pos,
                });
                out.push(Inst::Fadd {
                    reg,
                    loc,
                    addend: Expr::Const(0),
                    mode: Mode::AcqRel,
                    pos,
                });
                out.push(Inst::Fence {
                    mode: Mode::Rel,
                    pos,
                });
            } else {
                let mode = self.mode_from(&mode_name, mpos)?;
                if !mode.at_least_acq() && !mode.at_least_rel() {
                    return self.err(mpos, "fence mode must be acq, rel, acqrel, or sc");
                }
                out.push(Inst::Fence { mode, pos });
            }
            return Ok(());
        }
        if self.eat_keyword("wait") {
            self.expect_sym("(")?;
            let (loc_name, lpos) = self.expect_ident()?;
            let loc = self.atomic_loc(&loc_name, lpos)?;
            self.expect_sym(",")?;
            let expected = self.const_value()?;
            self.expect_sym(")")?;
            self.expect_sym(";")?;
            out.push(Inst::Wait { loc, expected, pos });
            return Ok(());
        }
        if self.eat_keyword("bcas") {
            self.expect_sym("(")?;
            let (loc_name, lpos) = self.expect_ident()?;
            let loc = self.atomic_loc(&loc_name, lpos)?;
            self.expect_sym(",")?;
            let expected = self.const_value()?;
            self.expect_sym(",")?;
            let desired = self.expr()?;
            self.expect_sym(",")?;
            let mode = self.mode()?;
            self.expect_sym(")")?;
            self.expect_sym(";")?;
            out.push(Inst::Bcas {
                loc,
                expected,
                desired,
                mode,
                pos,
            });
            return Ok(());
        }
        if self.at_keyword("if") {
            self.bump();
            self.expect_sym("(")?;
            let cond = self.expr()?;
            self.expect_sym(")")?;
            let then_body = self.block()?;
            let else_body = if self.eat_keyword("else") {
                self.block()?
            } else {
                Vec::new()
            };
            out.push(Inst::If {
                cond,
                then_body,
                else_body,
                pos,
            });
            return Ok(());
        }
        if self.at_keyword("while") {
            self.bump();
            self.expect_sym("(")?;
            let cond = self.expr()?;
            self.expect_sym(")")?;
            let body = self.block()?;
            out.push(Inst::While { cond, body, pos });
            return Ok(());
        }

        let (head, head_pos) = self.expect_ident()?;
        if KEYWORDS.contains(&head.as_str()) {
            return self.err(head_pos, format!("unexpected keyword `{head}`"));
        }
        if *self.peek() == Tok::Sym(".") {
            // loc.store(expr, mode);
            self.bump();
            let (op, op_pos) = self.expect_ident()?;
            if op != "store" {
                return self.err(op_pos, format!("expected `store`, found `{op}`"));
            }
            let loc = self.atomic_loc(&head, head_pos)?;
            self.expect_sym("(")?;
            let value = self.expr()?;
            self.expect_sym(",")?;
            let (mode_name, mpos) = self.expect_ident()?;
            let mode = self.mode_from(&mode_name, mpos)?;
            if mode.at_least_acq() {
                return self.err(mpos, format!("stores never carry acq (got `{mode_name}`)"));
            }
            self.expect_sym(")")?;
            self.expect_sym(";")?;
            out.push(Inst::Store {
                loc,
                value,
                mode,
                pos,
            });
            return Ok(());
        }
        self.expect_sym("=")?;
        if head.starts_with('r') {
            let reg = self.intern_reg(&head);
            // reg = loc.load(mode); | reg = fadd/cas(...); | reg = naloc; | reg = expr;
            if let Tok::Ident(rhs) = self.peek().clone() {
                match rhs.as_str() {
                    "fadd" | "cas_weak" | "cas_strong" => {
                        self.bump();
                        self.expect_sym("(")?;
                        let (loc_name, lpos) = self.expect_ident()?;
                        let loc = self.atomic_loc(&loc_name, lpos)?;
                        self.expect_sym(",")?;
                        if rhs == "fadd" {
                            let addend = self.expr()?;
                            self.expect_sym(",")?;
                            let mode = self.mode()?;
                            self.expect_sym(")")?;
                            self.expect_sym(";")?;
                            out.push(Inst::Fadd {
                                reg,
                                loc,
                                addend,
                                mode,
                                pos,
                            });
                        } else {
                            let expected = self.const_value()?;
                            self.expect_sym(",")?;
                            let desired = self.expr()?;
                            self.expect_sym(",")?;
                            let mode = self.mode()?;
                            self.expect_sym(")")?;
                            self.expect_sym(";")?;
                            if rhs == "cas_weak" {
                                out.push(Inst::CasWeak {
                                    reg,
                                    loc,
                                    expected,
                                    desired,
                                    mode,
                                    pos,
                                });
                            } else {
                                out.push(Inst::CasStrong {
                                    reg,
                                    loc,
                                    expected,
                                    desired,
                                    mode,
                                    pos,
                                });
                            }
                        }
                        return Ok(());
                    }
                    _ => {}
                }
                if self.loc_ids.contains_key(&rhs) {
                    let loc = self.loc_ids[&rhs];
                    if self.is_load_call() {
                        // reg = loc.load(mode);
                        self.bump(); // loc
                        self.bump(); // .
                        self.bump(); // load
                        self.expect_sym("(")?;
                        let (mode_name, mpos) = self.expect_ident()?;
                        let mode = self.mode_from(&mode_name, mpos)?;
                        if mode.at_least_rel() {
                            return self
                                .err(mpos, format!("loads never carry rel (got `{mode_name}`)"));
                        }
                        self.expect_sym(")")?;
                        self.expect_sym(";")?;
                        if !self.locs[loc.index()].atomic {
                            return self.err(
                                head_pos,
                                format!("`{rhs}` is non-atomic; read it with `{head} = {rhs};`"),
                            );
                        }
                        out.push(Inst::Load {
                            reg,
                            loc,
                            mode,
                            pos,
                        });
                        return Ok(());
                    }
                    // reg = naloc;
                    let lpos = self.pos();
                    self.bump();
                    self.expect_sym(";")?;
                    if self.locs[loc.index()].atomic {
                        return self.err(
                            lpos,
                            format!("atomic location `{rhs}` must be read with `.load(mode)`"),
                        );
                    }
                    out.push(Inst::NaLoad { reg, loc, pos });
                    return Ok(());
                }
            }
            let value = self.expr()?;
            self.expect_sym(";")?;
            out.push(Inst::Local { reg, value, pos });
            return Ok(());
        }
        // ident = expr;  (non-atomic store)
        let loc = self.lookup_loc(&head, head_pos)?;
        if self.locs[loc.index()].atomic {
            return self.err(
                head_pos,
                format!("atomic location `{head}` must be written with `.store(value, mode)`"),
            );
        }
        let value = self.expr()?;
        self.expect_sym(";")?;
        out.push(Inst::NaStore { loc, value, pos });
        Ok(())
    }

    /// Look ahead for `ident . load` starting at the current token.
    fn is_load_call(&self) -> bool {
        matches!(
            self.toks.get(self.at + 1).map(|t| &t.0),
            Some(Tok::Sym("."))
        ) && matches!(self.toks.get(self.at + 2).map(|t| &t.0), Some(Tok::Ident(s)) if s == "load")
    }

    fn atomic_loc(&self, name: &str, pos: Pos) -> Result<LocId, ParseError> {
        let loc = self.lookup_loc(name, pos)?;
        if !self.locs[loc.index()].atomic {
            return self.err(pos, format!("`{name}` is declared non-atomic"));
        }
        Ok(loc)
    }

    fn mode(&mut self) -> Result<Mode, ParseError> {
        let (name, pos) = self.expect_ident()?;
        self.mode_from(&name, pos)
    }

    fn mode_from(&self, name: &str, pos: Pos) -> Result<Mode, ParseError> {
        match name {
            "rlx" => Ok(Mode::Rlx),
            "acq" => Ok(Mode::Acq),
            "rel" => Ok(Mode::Rel),
            "acqrel" => Ok(Mode::AcqRel),
            "sc" => self.err(pos, "sc is only valid as a fence mode"),
            other => self.err(pos, format!("unknown access mode `{other}`")),
        }
    }

    fn const_value(&mut self) -> Result<Value, ParseError> {
        let negative = *self.peek() == Tok::Sym("-");
        if negative {
            self.bump();
        }
        let (t, pos) = self.bump();
        match t {
            Tok::Int(v) => Ok(if negative { -v } else { v }),
            other => self.err(
                pos,
                format!(
                    "expected a constant expected-value, found {}",
                    describe(&other)
                ),
            ),
        }
    }

    // expr := cmp; cmp := add (("==" | "!=" | "<") add)?; add := prim (("+"|"-") prim)*
    fn expr(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.add_expr()?;
        let op = match self.peek() {
            Tok::Sym("==") => Some(BinOp::Eq),
            Tok::Sym("!=") => Some(BinOp::Ne),
            Tok::Sym("<") => Some(BinOp::Lt),
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let rhs = self.add_expr()?;
            return Ok(Expr::Bin(op, Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn add_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.prim_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("+") => BinOp::Add,
                Tok::Sym("-") => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.prim_expr()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn prim_expr(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.bump().0 {
            Tok::Int(v) => Ok(Expr::Const(v)),
            Tok::Sym("-") => match self.bump().0 {
                Tok::Int(v) => Ok(Expr::Const(-v)),
                other => self.err(
                    pos,
                    format!("expected integer after `-`, found {}", describe(&other)),
                ),
            },
            Tok::Sym("(") => {
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if self.loc_ids.contains_key(&name) {
                    return self.err(
                        pos,
                        format!("location `{name}` cannot appear inside an expression"),
                    );
                }
                if !name.starts_with('r') {
                    return self.err(
                        pos,
                        format!("unknown register `{name}` (registers begin with `r`)"),
                    );
                }
                Ok(Expr::Reg(self.intern_reg(&name)))
            }
            other => self.err(
                pos,
                format!("expected expression, found {}", describe(&other)),
            ),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(v) => format!("`{v}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SB: &str = "\
atomic x1, x2;
thread t1 { x1.store(1, rel); r1 = x2.load(acq); }
thread t2 { x2.store(1, rel); r2 = x1.load(acq); }
";

    #[test]
    fn parses_sb() {
        let p = parse(SB).unwrap();
        assert_eq!(p.n_threads(), 2);
        assert_eq!(p.threads[0].body.len(), 2);
        assert_eq!(p.threads[1].body.len(), 2);
        let atomics: Vec<_> = p.atomic_locs().collect();
        assert_eq!(atomics.len(), 2);
    }

    #[test]
    fn parses_single_sc_fence() {
        let p = parse("thread t1 { fence(sc); }").unwrap();
        assert_eq!(p.threads.len(), 1);
        // desugared into fence(acq); fadd; fence(rel)
        assert_eq!(p.threads[0].body.len(), 3);
        assert!(p.sc_loc.is_some());
        assert!(matches!(
            p.threads[0].body[0],
            Inst::Fence {
                mode: Mode::Acq,
                ..
            }
        ));
        assert!(matches!(
            p.threads[0].body[1],
            Inst::Fadd {
                mode: Mode::AcqRel,
                ..
            }
        ));
        assert!(matches!(
            p.threads[0].body[2],
            Inst::Fence {
                mode: Mode::Rel,
                ..
            }
        ));
    }

    #[test]
    fn rejects_rel_load() {
        let err = parse("atomic x;\nthread t1 { r1 = x.load(rel); }").unwrap_err();
        assert!(err.msg.contains("loads never carry rel"), "{err}");
        let err = parse("atomic x;\nthread t1 { r1 = x.load(acqrel); }").unwrap_err();
        assert!(err.msg.contains("loads never carry rel"), "{err}");
    }

    #[test]
    fn rejects_acq_store() {
        let err = parse("atomic x;\nthread t1 { x.store(1, acq); }").unwrap_err();
        assert!(err.msg.contains("stores never carry acq"), "{err}");
    }

    #[test]
    fn rejects_non_constant_wait() {
        let err = parse("atomic x;\nthread t1 { wait(x, r1); }").unwrap_err();
        assert!(err.msg.contains("constant"), "{err}");
    }

    #[test]
    fn critical_pairs_from_sources() {
        let p = parse(
            "atomic x1, x2;
             thread t1 { r1 = cas_strong(x1, 0, 1, acqrel); }
             thread t2 { wait(x1, 1); bcas(x2, 0, 5, acqrel); }",
        )
        .unwrap();
        let pairs = p.critical_pairs();
        let got: Vec<_> = pairs.iter().collect();
        assert_eq!(got.len(), 3);
        assert!(pairs.contains(LocId(0), 0));
        assert!(pairs.contains(LocId(0), 1));
        assert!(pairs.contains(LocId(1), 0));
    }

    #[test]
    fn na_load_and_store_forms() {
        let p = parse(
            "atomic x; nonatomic d;
             thread t1 { d = 1; x.store(1, rel); }
             thread t2 { r1 = x.load(acq); if (r1 == 1) { r2 = d; } }",
        )
        .unwrap();
        assert!(matches!(p.threads[0].body[0], Inst::NaStore { .. }));
        let Inst::If { then_body, .. } = &p.threads[1].body[1] else {
            panic!()
        };
        assert!(matches!(then_body[0], Inst::NaLoad { .. }));
    }

    #[test]
    fn rejects_duplicate_thread_names() {
        let err = parse("thread t1 { skip; }\nthread t1 { skip; }").unwrap_err();
        assert!(err.msg.contains("declared twice"), "{err}");
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse("atomic x;\nthread t1 { x.store(1 rel); }").unwrap_err();
        assert_eq!(err.pos.line, 2);
    }
}
