//! Property tests for the DSL front end: pretty-printing any generated
//! program and reparsing it yields the same AST (up to source positions,
//! which the printer legitimately reassigns).

use proptest::prelude::*;
use wmrobust::lang::{parse, pretty, Inst, Program};

#[derive(Debug, Clone)]
enum GenStmt {
    Store(u8, i64, bool),
    Load(u8, u8, bool),
    Fadd(u8, u8, i64, u8),
    CasWeak(u8, u8, i64, i64, u8),
    CasStrong(u8, u8, i64, i64, u8),
    Bcas(u8, i64, i64, u8),
    Wait(u8, i64),
    Fence(u8),
    NaStore(i64),
    NaLoad(u8),
    Local(u8, i64, i64, u8),
    IfSkip(u8, i64, bool),
    WhileBump(u8, i64),
    Skip,
}

fn arb_stmt() -> impl Strategy<Value = GenStmt> {
    prop_oneof![
        (0u8..2, -3i64..6, any::<bool>()).prop_map(|(l, v, rel)| GenStmt::Store(l, v, rel)),
        (0u8..4, 0u8..2, any::<bool>()).prop_map(|(r, l, acq)| GenStmt::Load(r, l, acq)),
        (0u8..4, 0u8..2, -2i64..4, 0u8..4).prop_map(|(r, l, v, m)| GenStmt::Fadd(r, l, v, m)),
        (0u8..4, 0u8..2, -2i64..4, -2i64..4, 0u8..4)
            .prop_map(|(r, l, e, d, m)| GenStmt::CasWeak(r, l, e, d, m)),
        (0u8..4, 0u8..2, -2i64..4, -2i64..4, 0u8..4)
            .prop_map(|(r, l, e, d, m)| GenStmt::CasStrong(r, l, e, d, m)),
        (0u8..2, -2i64..4, -2i64..4, 0u8..4).prop_map(|(l, e, d, m)| GenStmt::Bcas(l, e, d, m)),
        (0u8..2, -2i64..4).prop_map(|(l, v)| GenStmt::Wait(l, v)),
        (0u8..4).prop_map(GenStmt::Fence),
        (-3i64..6).prop_map(GenStmt::NaStore),
        (0u8..4).prop_map(GenStmt::NaLoad),
        (0u8..4, -3i64..6, -3i64..6, 0u8..5).prop_map(|(r, a, b, op)| GenStmt::Local(r, a, b, op)),
        (0u8..4, -2i64..4, any::<bool>()).prop_map(|(r, v, e)| GenStmt::IfSkip(r, v, e)),
        (0u8..4, -2i64..4).prop_map(|(r, v)| GenStmt::WhileBump(r, v)),
        Just(GenStmt::Skip),
    ]
}

fn render(stmts: &[GenStmt]) -> String {
    let loc = |l: u8| if l == 0 { "x1" } else { "x2" };
    let mode4 = |m: u8| ["rlx", "acq", "rel", "acqrel"][m as usize % 4];
    let fmode = |m: u8| ["acq", "rel", "acqrel", "sc"][m as usize % 4];
    let op = |o: u8| ["+", "-", "==", "!=", "<"][o as usize % 5];
    let mut out = String::new();
    for s in stmts {
        let line = match s {
            GenStmt::Store(l, v, rel) => {
                format!(
                    "{}.store({v}, {});",
                    loc(*l),
                    if *rel { "rel" } else { "rlx" }
                )
            }
            GenStmt::Load(r, l, acq) => {
                format!(
                    "r{r} = {}.load({});",
                    loc(*l),
                    if *acq { "acq" } else { "rlx" }
                )
            }
            GenStmt::Fadd(r, l, v, m) => format!("r{r} = fadd({}, {v}, {});", loc(*l), mode4(*m)),
            GenStmt::CasWeak(r, l, e, d, m) => {
                format!("r{r} = cas_weak({}, {e}, {d}, {});", loc(*l), mode4(*m))
            }
            GenStmt::CasStrong(r, l, e, d, m) => {
                format!("r{r} = cas_strong({}, {e}, {d}, {});", loc(*l), mode4(*m))
            }
            GenStmt::Bcas(l, e, d, m) => format!("bcas({}, {e}, {d}, {});", loc(*l), mode4(*m)),
            GenStmt::Wait(l, v) => format!("wait({}, {v});", loc(*l)),
            GenStmt::Fence(m) => format!("fence({});", fmode(*m)),
            GenStmt::NaStore(v) => format!("d = {v};"),
            GenStmt::NaLoad(r) => format!("r{r} = d;"),
            GenStmt::Local(r, a, b, o) => format!("r{r} = {a} {} ({b});", op(*o)),
            GenStmt::IfSkip(r, v, has_else) => {
                if *has_else {
                    format!("r{r} = {v}; if (r{r} == {v}) {{ skip; }} else {{ r{r} = 0; }}")
                } else {
                    format!("r{r} = {v}; if (r{r} != {v}) {{ skip; }}")
                }
            }
            GenStmt::WhileBump(r, v) => {
                format!("r{r} = 0; while (r{r} < {v}) {{ r{r} = r{r} + 1; }}")
            }
            GenStmt::Skip => "skip;".to_string(),
        };
        out.push_str(&line);
        out.push(' ');
    }
    out
}

/// Strip source positions by comparing the pretty form, then compare the
/// structural parts that the printer must preserve exactly.
fn same_modulo_pos(a: &Program, b: &Program) -> bool {
    if a.locs != b.locs || a.threads.len() != b.threads.len() {
        return false;
    }
    fn same_body(a: &[Inst], b: &[Inst]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| same_inst(x, y))
    }
    fn same_inst(a: &Inst, b: &Inst) -> bool {
        use Inst::*;
        match (a, b) {
            (
                If {
                    cond: c1,
                    then_body: t1,
                    else_body: e1,
                    ..
                },
                If {
                    cond: c2,
                    then_body: t2,
                    else_body: e2,
                    ..
                },
            ) => c1 == c2 && same_body(t1, t2) && same_body(e1, e2),
            (
                While {
                    cond: c1, body: b1, ..
                },
                While {
                    cond: c2, body: b2, ..
                },
            ) => c1 == c2 && same_body(b1, b2),
            (x, y) => {
                let mut x = x.clone();
                let mut y = y.clone();
                set_pos(&mut x);
                set_pos(&mut y);
                x == y
            }
        }
    }
    fn set_pos(i: &mut Inst) {
        let zero = wmrobust::ids::Pos { line: 0, col: 0 };
        match i {
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
            | Inst::Skip { pos } => *pos = zero,
        }
    }
    a.threads
        .iter()
        .zip(&b.threads)
        .all(|(x, y)| x.name == y.name && x.regs == y.regs && same_body(&x.body, &y.body))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn pretty_then_parse_is_identity(
        t1 in proptest::collection::vec(arb_stmt(), 0..6),
        t2 in proptest::collection::vec(arb_stmt(), 0..6),
    ) {
        let src = format!(
            "atomic x1, x2;\nnonatomic d;\nthread t1 {{ {} }}\nthread t2 {{ {} }}\n",
            render(&t1),
            render(&t2)
        );
        let p1 = parse(&src).unwrap_or_else(|e| panic!("{src}\n{e}"));
        let text = pretty(&p1);
        let p2 = parse(&text).unwrap_or_else(|e| panic!("pretty output must reparse:\n{text}\n{e}"));
        prop_assert!(same_modulo_pos(&p1, &p2), "round trip changed the AST:\n{src}\n-----\n{text}");
        // pretty is a fixpoint after one round
        prop_assert_eq!(pretty(&p2), text);
    }
}
