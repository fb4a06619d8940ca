//! Pretty-printer for litmus programs. `parse(pretty(parse(s)))` yields the
//! same AST as `parse(s)`; the desugared sc-fence triple is folded back into
//! `fence(sc);` so the output stays within the surface grammar.

use super::ast::*;
use crate::ids::LocId;
use std::fmt::Write;

pub fn pretty(program: &Program) -> String {
    let mut out = String::new();
    let atomics: Vec<&str> = program
        .atomic_locs()
        .filter(|l| Some(*l) != program.sc_loc)
        .map(|l| program.loc_name(l))
        .collect();
    if !atomics.is_empty() {
        let _ = writeln!(out, "atomic {};", atomics.join(", "));
    }
    let nas: Vec<&str> = program.na_locs().map(|l| program.loc_name(l)).collect();
    if !nas.is_empty() {
        let _ = writeln!(out, "nonatomic {};", nas.join(", "));
    }
    for thread in &program.threads {
        let _ = writeln!(out, "thread {} {{", thread.name);
        print_block(&mut out, program, thread, &thread.body, 1);
        let _ = writeln!(out, "}}");
    }
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn print_block(out: &mut String, p: &Program, t: &Thread, body: &[Inst], depth: usize) {
    let mut i = 0;
    while i < body.len() {
        if let Some(skip) = try_sc_fence(p, body, i) {
            indent(out, depth);
            out.push_str("fence(sc);\n");
            i += skip;
            continue;
        }
        indent(out, depth);
        print_inst(out, p, t, &body[i], depth);
        i += 1;
    }
}

/// Recognize the desugared `fence(acq); fadd($sc); fence(rel)` triple.
fn try_sc_fence(p: &Program, body: &[Inst], i: usize) -> Option<usize> {
    let sc_loc = p.sc_loc?;
    match (body.get(i), body.get(i + 1), body.get(i + 2)) {
        (
            Some(Inst::Fence {
                mode: Mode::Acq, ..
            }),
            Some(Inst::Fadd {
                loc,
                mode: Mode::AcqRel,
                ..
            }),
            Some(Inst::Fence {
                mode: Mode::Rel, ..
            }),
        ) if *loc == sc_loc => Some(3),
        _ => None,
    }
}

fn print_inst(out: &mut String, p: &Program, t: &Thread, inst: &Inst, depth: usize) {
    let loc = |l: &LocId| p.loc_name(*l);
    let reg = |r: &crate::ids::RegId| t.regs[r.0 as usize].as_str();
    match inst {
        Inst::Store {
            loc: l,
            value,
            mode,
            ..
        } => {
            let _ = writeln!(out, "{}.store({}, {});", loc(l), expr_str(value, t), mode);
        }
        Inst::Load {
            reg: r,
            loc: l,
            mode,
            ..
        } => {
            let _ = writeln!(out, "{} = {}.load({});", reg(r), loc(l), mode);
        }
        Inst::Fadd {
            reg: r,
            loc: l,
            addend,
            mode,
            ..
        } => {
            let _ = writeln!(
                out,
                "{} = fadd({}, {}, {});",
                reg(r),
                loc(l),
                expr_str(addend, t),
                mode
            );
        }
        Inst::CasWeak {
            reg: r,
            loc: l,
            expected,
            desired,
            mode,
            ..
        } => {
            let _ = writeln!(
                out,
                "{} = cas_weak({}, {}, {}, {});",
                reg(r),
                loc(l),
                expected,
                expr_str(desired, t),
                mode
            );
        }
        Inst::CasStrong {
            reg: r,
            loc: l,
            expected,
            desired,
            mode,
            ..
        } => {
            let _ = writeln!(
                out,
                "{} = cas_strong({}, {}, {}, {});",
                reg(r),
                loc(l),
                expected,
                expr_str(desired, t),
                mode
            );
        }
        Inst::Bcas {
            loc: l,
            expected,
            desired,
            mode,
            ..
        } => {
            let _ = writeln!(
                out,
                "bcas({}, {}, {}, {});",
                loc(l),
                expected,
                expr_str(desired, t),
                mode
            );
        }
        Inst::Wait {
            loc: l, expected, ..
        } => {
            let _ = writeln!(out, "wait({}, {});", loc(l), expected);
        }
        Inst::Fence { mode, .. } => {
            let _ = writeln!(out, "fence({mode});");
        }
        Inst::NaStore { loc: l, value, .. } => {
            let _ = writeln!(out, "{} = {};", loc(l), expr_str(value, t));
        }
        Inst::NaLoad { reg: r, loc: l, .. } => {
            let _ = writeln!(out, "{} = {};", reg(r), loc(l));
        }
        Inst::Local { reg: r, value, .. } => {
            let _ = writeln!(out, "{} = {};", reg(r), expr_str(value, t));
        }
        Inst::If {
            cond,
            then_body,
            else_body,
            ..
        } => {
            let _ = writeln!(out, "if ({}) {{", expr_str(cond, t));
            print_block(out, p, t, then_body, depth + 1);
            indent(out, depth);
            if else_body.is_empty() {
                let _ = writeln!(out, "}}");
            } else {
                let _ = writeln!(out, "}} else {{");
                print_block(out, p, t, else_body, depth + 1);
                indent(out, depth);
                let _ = writeln!(out, "}}");
            }
        }
        Inst::While { cond, body, .. } => {
            let _ = writeln!(out, "while ({}) {{", expr_str(cond, t));
            print_block(out, p, t, body, depth + 1);
            indent(out, depth);
            let _ = writeln!(out, "}}");
        }
        Inst::Skip { .. } => {
            let _ = writeln!(out, "skip;");
        }
    }
}

fn expr_str(e: &Expr, t: &Thread) -> String {
    match e {
        Expr::Const(v) => v.to_string(),
        Expr::Reg(r) => t.regs[r.0 as usize].clone(),
        Expr::Bin(op, a, b) => {
            let a = match **a {
                Expr::Bin(..) => format!("({})", expr_str(a, t)),
                _ => expr_str(a, t),
            };
            let b = match **b {
                Expr::Bin(..) => format!("({})", expr_str(b, t)),
                _ => expr_str(b, t),
            };
            format!("{} {} {}", a, op.symbol(), b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse::parse;
    use super::*;

    fn strip_pos(p: &Program) -> String {
        // compare via pretty text: positions differ after round-trip
        pretty(p)
    }

    #[test]
    fn round_trip_is_identity() {
        let srcs = [
            "atomic x1, x2;\nthread t1 { x1.store(1, rel); r1 = x2.load(acq); }\nthread t2 { x2.store(1, rel); r2 = x1.load(acq); }",
            "atomic x; nonatomic d;\nthread t1 { d = 1; fence(sc); x.store(1, rlx); }\nthread t2 { r1 = x.load(rlx); if (r1 == 1) { r2 = d; } else { skip; } }",
            "atomic x;\nthread t1 { r1 = 0; while (r1 < 3) { r1 = r1 + 1; r2 = fadd(x, 1, acqrel); } }",
            "atomic f;\nthread t1 { wait(f, 1); bcas(f, 1, 2, acqrel); r1 = cas_strong(f, 2, 3, rlx); }",
        ];
        for src in srcs {
            let p1 = parse(src).unwrap();
            let text = pretty(&p1);
            let p2 = parse(&text).unwrap();
            assert_eq!(
                strip_pos(&p1),
                strip_pos(&p2),
                "round trip changed:\n{text}"
            );
            // structural identity up to source positions
            assert_eq!(p1.locs, p2.locs);
            assert_eq!(p1.threads.len(), p2.threads.len());
        }
    }
}
