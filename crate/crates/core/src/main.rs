//! Command-line front end: seeded sanitizer batches, exhaustive exploration,
//! the brute-force robustness oracle, race-focused reports, deterministic
//! replay with monitor-state dumps, and consistency checks for serialized
//! graphs.

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use wmrobust::graph::{
    check_consistency_rc20, check_consistency_sc, ExecutionGraph, GraphJson, Verdict,
};
use wmrobust::interp::{self, Compiled, Options, TraceStep};
use wmrobust::lang;
use wmrobust::oracle::{self, OracleLimits, Robustness};
use wmrobust::race::RaceReport;

const EXIT_CLEAN: u8 = 0;
const EXIT_FINDINGS: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "wmrobust",
    version,
    about = "Weak-memory robustness sanitizer and litmus harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Seeded-random sanitizer batch over one litmus program.
    Run {
        file: PathBuf,
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        /// Base seed; defaults to $WMROBUST_SEED or 0.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 16)]
        loop_bound: u32,
        /// Also run the boolean-matrix baseline (release/acquire fragment only).
        #[arg(long)]
        bm: bool,
        #[arg(long)]
        continue_on_violation: bool,
        #[arg(long)]
        json: bool,
    },
    /// Exhaustive location-clock analysis over all interleavings.
    Explore {
        file: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        depth_cap: u64,
        #[arg(long, default_value_t = 16)]
        loop_bound: u32,
        #[arg(long)]
        json: bool,
    },
    /// Brute-force robustness verdict with a witness graph.
    Oracle {
        file: PathBuf,
        /// Loop unroll bound for the candidate enumeration.
        #[arg(long, default_value_t = 16)]
        bound: u32,
        #[arg(long)]
        json: bool,
    },
    /// Race-focused report (seeded batch or exhaustive).
    Race {
        file: PathBuf,
        #[arg(long, conflicts_with = "exhaustive")]
        seeds: Option<u64>,
        #[arg(long)]
        exhaustive: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 16)]
        loop_bound: u32,
        #[arg(long)]
        json: bool,
    },
    /// Deterministic replay of a recorded trace with per-step clock dumps.
    Replay {
        file: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        bm: bool,
        #[arg(long, default_value_t = 16)]
        loop_bound: u32,
        #[arg(long)]
        json: bool,
    },
    /// Consistency verdict for a serialized execution graph.
    CheckGraph {
        file: PathBuf,
        #[arg(long, value_enum)]
        model: Model,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Rc20,
    Sc,
}

fn main() -> ExitCode {
    // die quietly when stdout is a closed pipe (e.g. piped into head)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn env_seed() -> u64 {
    std::env::var("WMROBUST_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0)
}

fn load_program(path: &PathBuf) -> Result<Compiled, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let program = lang::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(Compiled::new(program))
}

fn print_schedule(schedule: &[TraceStep]) -> String {
    schedule
        .iter()
        .map(|s| match &s.event {
            Some(e) => format!("{}@{} {e}", s.thread, s.pc),
            None => format!("{}@{} .", s.thread, s.pc),
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn print_violation(v: &interp::Violation) {
    println!(
        "robustness violation [{}/{}]: thread {} about to {} {} (line {})",
        v.engine, v.kind, v.thread, v.access, v.loc, v.source_line
    );
    if let (Some(hb), Some(sc)) = (v.hb_ts, v.sc_ts) {
        println!("  hb view {hb} vs sc view {sc}");
    }
    match (v.stale_write_event, v.stale_write_line) {
        (Some(e), Some(line)) => println!("  stale write: event {e} (line {line})"),
        (Some(e), None) => println!("  stale write: event {e} (initialization)"),
        _ => {}
    }
    println!("  schedule: {}", print_schedule(&v.schedule));
}

fn print_race(r: &RaceReport) {
    let tag = if r.conditional {
        " (conditional on robustness findings)"
    } else {
        ""
    };
    println!("data race on {}{tag}:", r.loc);
    println!(
        "  {} by {} at line {}",
        r.access1.kind, r.access1.thread, r.access1.line
    );
    println!(
        "  {} by {} at line {}",
        r.access2.kind, r.access2.thread, r.access2.line
    );
}

fn print_graph(g: &ExecutionGraph) {
    println!("events:");
    for (i, e) in g.events.iter().enumerate() {
        let who = match e.tid {
            Some(t) => format!("t{}#{}", t.0 + 1, e.serial),
            None => "init".to_string(),
        };
        let label = match e.label {
            wmrobust::graph::Label::R { mode, loc, val } => {
                format!("R {} {} {}", g.loc_names[loc.index()], val, mode)
            }
            wmrobust::graph::Label::W { mode, loc, val } => {
                format!("W {} {} {}", g.loc_names[loc.index()], val, mode)
            }
            wmrobust::graph::Label::Rmw {
                mode,
                loc,
                val_r,
                val_w,
            } => {
                format!(
                    "U {} {}->{} {}",
                    g.loc_names[loc.index()],
                    val_r,
                    val_w,
                    mode
                )
            }
            wmrobust::graph::Label::F { mode } => format!("F {mode}"),
        };
        println!("  {i}: [{who}] {label}");
    }
    let rf: Vec<String> =
        g.rf.iter()
            .enumerate()
            .filter_map(|(r, w)| w.map(|w| format!("{w}->{r}")))
            .collect();
    println!(
        "rf: {}",
        if rf.is_empty() {
            "(none)".into()
        } else {
            rf.join(", ")
        }
    );
    for (l, order) in g.mo.iter().enumerate() {
        if order.len() > 1 {
            let chain: Vec<String> = order.iter().map(|e| e.to_string()).collect();
            println!("mo[{}]: {}", g.loc_names[l], chain.join(" -> "));
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, String> {
    match cli.command {
        Command::Run {
            file,
            seeds,
            seed,
            loop_bound,
            bm,
            continue_on_violation,
            json,
        } => {
            let c = load_program(&file)?;
            let opts = Options {
                loop_bound,
                bm,
                continue_on_violation,
                ..Options::default()
            };
            let base = seed.unwrap_or_else(env_seed);
            let batch = interp::run_many(&c, seeds, base, &opts).map_err(|e| e.to_string())?;
            let findings = !batch.violations.is_empty() || !batch.races.is_empty();
            if json {
                println!("{}", serde_json::to_string_pretty(&batch).unwrap());
            } else {
                println!(
                    "{} runs, {} with robustness violations, {} with races",
                    batch.total_runs, batch.runs_with_violations, batch.runs_with_races
                );
                for v in &batch.violations {
                    println!("--- first hit at iteration {} ---", v.first_hit);
                    print_violation(&v.violation);
                }
                for r in &batch.races {
                    println!("--- first hit at iteration {} ---", r.first_hit);
                    print_race(&r.race);
                }
                if !findings {
                    println!("no findings");
                }
            }
            Ok(if findings { EXIT_FINDINGS } else { EXIT_CLEAN })
        }
        Command::Explore {
            file,
            depth_cap,
            loop_bound,
            json,
        } => {
            let c = load_program(&file)?;
            let opts = Options {
                loop_bound,
                ..Options::default()
            };
            let out = interp::explore(&c, depth_cap, &opts).map_err(|e| e.to_string())?;
            if json {
                println!("{}", serde_json::to_string_pretty(&out).unwrap());
            } else {
                println!(
                    "{} schedules explored ({} nodes, {} deadlocks)",
                    out.schedules, out.nodes, out.deadlocks
                );
                for v in &out.violations {
                    print_violation(v);
                }
                for r in &out.races {
                    print_race(r);
                }
                if out.clean() && !out.inconclusive {
                    println!("clean in all schedules");
                }
                if out.inconclusive {
                    println!("inconclusive: budget or depth cap exhausted");
                }
            }
            if out.inconclusive && out.clean() {
                Ok(EXIT_INCONCLUSIVE)
            } else if out.clean() {
                Ok(EXIT_CLEAN)
            } else {
                Ok(EXIT_FINDINGS)
            }
        }
        Command::Oracle { file, bound, json } => {
            let c = load_program(&file)?;
            let verdict = oracle::is_robust(&c, bound, &OracleLimits::default());
            match verdict {
                Robustness::Robust { candidates } => {
                    if json {
                        println!(
                            "{}",
                            serde_json::json!({"verdict": "robust", "candidates": candidates})
                        );
                    } else {
                        println!("robust ({candidates} candidate graphs checked)");
                    }
                    Ok(EXIT_CLEAN)
                }
                Robustness::NonRobust { witness, .. } => {
                    if json {
                        println!(
                            "{}",
                            serde_json::json!({
                                "verdict": "nonRobust",
                                "witness": serde_json::to_value(witness.to_json()).unwrap()
                            })
                        );
                    } else {
                        println!("non-robust; witness graph (RC20-consistent, SC-inconsistent):");
                        print_graph(&witness);
                    }
                    Ok(EXIT_FINDINGS)
                }
                Robustness::Inconclusive { reason } => {
                    if json {
                        println!(
                            "{}",
                            serde_json::json!({"verdict": "inconclusive", "reason": reason})
                        );
                    } else {
                        println!("inconclusive: {reason}");
                    }
                    Ok(EXIT_INCONCLUSIVE)
                }
            }
        }
        Command::Race {
            file,
            seeds,
            exhaustive,
            seed,
            loop_bound,
            json,
        } => {
            let c = load_program(&file)?;
            let opts = Options {
                loop_bound,
                continue_on_violation: true,
                ..Options::default()
            };
            let races: Vec<RaceReport> = if exhaustive {
                let out = interp::explore(&c, 100_000, &opts).map_err(|e| e.to_string())?;
                out.races
            } else {
                let n = seeds.ok_or("race needs --seeds N or --exhaustive")?;
                let base = seed.unwrap_or_else(env_seed);
                let batch = interp::run_many(&c, n, base, &opts).map_err(|e| e.to_string())?;
                batch.races.into_iter().map(|r| r.race).collect()
            };
            if json {
                println!("{}", serde_json::to_string_pretty(&races).unwrap());
            } else if races.is_empty() {
                println!("no races");
            } else {
                for r in &races {
                    print_race(r);
                }
            }
            Ok(if races.is_empty() {
                EXIT_CLEAN
            } else {
                EXIT_FINDINGS
            })
        }
        Command::Replay {
            file,
            trace,
            bm,
            loop_bound,
            json,
        } => {
            let c = load_program(&file)?;
            let text = std::fs::read_to_string(&trace)
                .map_err(|e| format!("cannot read {}: {e}", trace.display()))?;
            let steps: Vec<TraceStep> =
                serde_json::from_str(&text).map_err(|e| format!("bad trace: {e}"))?;
            let idxs = interp::trace_to_steps(&c, &steps).map_err(|e| e.to_string())?;
            let opts = Options {
                loop_bound,
                bm,
                continue_on_violation: true,
                ..Options::default()
            };
            let (out, dumps) = interp::replay(&c, &idxs, &opts).map_err(|e| e.to_string())?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&serde_json::json!({
                        "steps": dumps,
                        "outcome": out,
                    }))
                    .unwrap()
                );
            } else {
                for d in &dumps {
                    println!(
                        "step {} [{}] {}",
                        d.step,
                        d.thread,
                        d.event.as_deref().unwrap_or(".")
                    );
                    if let Some(lc) = &d.lc {
                        println!("{}", serde_json::to_string(&lc).unwrap());
                    }
                    if let Some(bm) = &d.bm {
                        println!("{}", serde_json::to_string(&bm).unwrap());
                    }
                }
                for v in &out.violations {
                    print_violation(v);
                }
            }
            Ok(if out.violations.is_empty() && out.races.is_empty() {
                EXIT_CLEAN
            } else {
                EXIT_FINDINGS
            })
        }
        Command::CheckGraph { file, model, json } => {
            let text = std::fs::read_to_string(&file)
                .map_err(|e| format!("cannot read {}: {e}", file.display()))?;
            let gj: GraphJson =
                serde_json::from_str(&text).map_err(|e| format!("bad graph json: {e}"))?;
            let g = ExecutionGraph::from_json(&gj).map_err(|e| e.to_string())?;
            let (consistent, detail) = match model {
                Model::Rc20 => match check_consistency_rc20(&g) {
                    Verdict::Consistent => (true, None),
                    Verdict::Violated(ax) => (false, Some(format!("{ax:?}"))),
                },
                Model::Sc => (check_consistency_sc(&g), None),
            };
            if json {
                println!(
                    "{}",
                    serde_json::json!({
                        "model": match model { Model::Rc20 => "rc20", Model::Sc => "sc" },
                        "verdict": if consistent { "consistent" } else { "inconsistent" },
                        "axiom": detail,
                    })
                );
            } else {
                match (&detail, consistent) {
                    (_, true) => println!("consistent"),
                    (Some(ax), false) => println!("inconsistent (violates {ax})"),
                    (None, false) => println!("inconsistent"),
                }
            }
            Ok(if consistent {
                EXIT_CLEAN
            } else {
                EXIT_FINDINGS
            })
        }
    }
}
