use std::fmt::Write as _;
use std::io::Read as _;

use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;
use serde_json::json;
use sparsecount::clause::Vars;
use sparsecount::count::exact_weights;
use sparsecount::optimize::{optimize, partial_dominating_set, OptMode, OptResult, PdsAnswer, PdsMode};
use sparsecount::oracle::{eval, instability_witness, Assignment};
use sparsecount::qe::{check_sentence, parse_rational, Answer, DUMMY};
use sparsecount::structure::{augment, orient, Provenance};
use sparsecount::{load_graph, parse_query, Error, Formula, LabeledGraph};

use crate::config::RunConfig;
use crate::{bench, Command, Format, Mode, OracleCommand, QueryArg, TermArgs};

pub const EXIT_TRUE: u8 = 0;
pub const EXIT_FALSE: u8 = 1;
pub const EXIT_UNKNOWN: u8 = 2;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_OPTIMIZER: u8 = 65;
pub const EXIT_NO_INPUT: u8 = 66;
pub const EXIT_INTERNAL: u8 = 70;

pub struct Output {
    pub code: u8,
    pub stdout: String,
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

type Outcome = Result<Output, Failure>;

fn input_error(e: Error) -> Failure {
    let code = match e {
        Error::Budget(_) | Error::Invariant(_) => EXIT_INTERNAL,
        _ => EXIT_USAGE,
    };
    Failure { code, message: e.to_string() }
}

fn optimizer_error(e: Error) -> Failure {
    Failure { code: EXIT_OPTIMIZER, message: e.to_string() }
}

fn read_source(path: &str) -> Result<String, Failure> {
    let fail = |e: std::io::Error| Failure { code: EXIT_NO_INPUT, message: format!("{path}: {e}") };
    if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(fail)?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(fail)
    }
}

fn read_graph(path: &str) -> Result<LabeledGraph, Failure> {
    load_graph(&read_source(path)?).map_err(|e| Failure { code: EXIT_USAGE, message: format!("{path}: {e}") })
}

fn read_query(q: &QueryArg) -> Result<Formula, Failure> {
    let text = match (&q.query, &q.query_file) {
        (Some(t), _) => t.clone(),
        (None, Some(p)) => read_source(&p.to_string_lossy())?,
        (None, None) => return Err(Failure { code: EXIT_USAGE, message: "no query given".into() }),
    };
    parse_query(&text).map_err(input_error)
}

fn json_line(v: &impl Serialize) -> String {
    serde_json::to_string(v).expect("output records serialize") + "\n"
}

fn decided(b: bool) -> u8 {
    if b {
        EXIT_TRUE
    } else {
        EXIT_FALSE
    }
}

pub fn run(cmd: &Command, cfg: &RunConfig) -> Outcome {
    match cmd {
        Command::Check { graph, query } => check(&read_graph(graph)?, &read_query(query)?, cfg),
        Command::Count { term, tuple, weights } => count(term, tuple.as_deref(), *weights, cfg),
        Command::Optimize { term, mode } => optimize_cmd(term, *mode, cfg),
        Command::Pds { graph, k, threshold } => pds(&read_graph(graph)?, *k, *threshold, cfg),
        Command::Oracle { command } => oracle(command, cfg),
        Command::Augment { graph, rounds } => augment_cmd(&read_graph(graph)?, *rounds, cfg),
        Command::Bench { family, sizes, query, repetitions, degree } => {
            let f = parse_query(query).map_err(input_error)?;
            let spec = bench::BenchSpec { family: *family, sizes, query: &f, repetitions: *repetitions, degree: *degree };
            let stdout = bench::run(&spec, cfg).map_err(input_error)?;
            Ok(Output { code: 0, stdout })
        }
    }
}

fn check(g: &LabeledGraph, f: &Formula, cfg: &RunConfig) -> Outcome {
    let report = check_sentence(g, f, &cfg.epsilon).map_err(input_error)?;
    let code = match report.answer {
        Answer::True => EXIT_TRUE,
        Answer::False => EXIT_FALSE,
        Answer::Unknown => EXIT_UNKNOWN,
    };
    let stdout = match cfg.format {
        Format::Human => format!("{}\n", report.answer),
        Format::Json => json_line(&report),
    };
    Ok(Output { code, stdout })
}

/// The body and the tuple variables of a counting term.
fn term_vars(t: &TermArgs) -> Result<(Formula, Vec<String>), Failure> {
    let body = read_query(&t.query)?;
    let xs = match &t.vars {
        Some(v) => v.clone(),
        None => body.free_vars().iter().filter(|v| ***v != *t.var).map(|v| v.to_string()).collect(),
    };
    Ok((body, xs))
}

fn all_tuples(n: usize, k: usize) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out.into_iter().flat_map(|t| (0..n as u32).map(move |v| [t.clone(), vec![v]].concat())).collect();
    }
    out
}

#[derive(Serialize)]
struct CountRow {
    tuple: Vec<u32>,
    count: i64,
}

fn count(t: &TermArgs, tuple: Option<&[u32]>, show_weights: bool, cfg: &RunConfig) -> Outcome {
    let g = read_graph(&t.graph)?;
    let (body, xs) = term_vars(t)?;
    let n = g.vertex_count();
    let usage = |m: String| Failure { code: EXIT_USAGE, message: m };
    if n == 0 {
        return Err(usage("counting needs a nonempty graph".into()));
    }
    if let Some(tu) = tuple {
        if tu.len() != xs.len() {
            return Err(usage(format!("--tuple has {} entries for variables {xs:?}", tu.len())));
        }
        if let Some(v) = tu.iter().find(|&&v| v as usize >= n) {
            return Err(usage(format!("vertex {v} out of range for {n} vertices")));
        }
    }
    for v in body.free_vars() {
        if *v != *t.var && !xs.iter().any(|x| **x == *v) {
            return Err(input_error(Error::UnboundVariable(v.to_string())));
        }
    }
    let names: Vec<&str> = if xs.is_empty() { vec![DUMMY] } else { xs.iter().map(String::as_str).collect() };
    let (d, w) = exact_weights(&orient(&g), &body, &Vars::new(&t.var, &names)).map_err(input_error)?;
    if show_weights {
        return Ok(Output { code: 0, stdout: w.to_csv() });
    }
    let tuples = match tuple {
        Some(tu) => vec![tu.to_vec()],
        None => all_tuples(n, xs.len()),
    };
    let rows: Vec<CountRow> = tuples
        .into_iter()
        .map(|tu| {
            let at = if xs.is_empty() { vec![0] } else { tu.clone() };
            CountRow { count: w.sum_at(&d.structure, &at), tuple: tu }
        })
        .collect();
    let stdout = match cfg.format {
        Format::Json => json_line(&json!({ "var": t.var, "vars": xs, "rows": rows })),
        Format::Human => {
            let mut out = String::new();
            for x in &xs {
                out += x;
                out.push(',');
            }
            writeln!(out, "#{}", t.var).unwrap();
            for r in rows {
                for v in &r.tuple {
                    write!(out, "{v},").unwrap();
                }
                writeln!(out, "{}", r.count).unwrap();
            }
            out
        }
    };
    Ok(Output { code: 0, stdout })
}

fn show_opt(r: &OptResult, fmt: Format) -> String {
    match fmt {
        Format::Json => json_line(r),
        Format::Human => {
            let t: Vec<String> = r.tuple.iter().map(u32::to_string).collect();
            format!("tuple: {}\nvalue: {}\n", t.join(" "), r.value)
        }
    }
}

fn optimize_cmd(t: &TermArgs, mode: Mode, cfg: &RunConfig) -> Outcome {
    let g = read_graph(&t.graph)?;
    let (body, xs) = term_vars(t)?;
    let xs: Vec<&str> = xs.iter().map(String::as_str).collect();
    let mode = match mode {
        Mode::Min => OptMode::Min,
        Mode::Max => OptMode::Max,
    };
    let r = optimize(&g, &body, &t.var, &xs, mode).map_err(optimizer_error)?;
    Ok(Output { code: 0, stdout: show_opt(&r, cfg.format) })
}

fn pds(g: &LabeledGraph, k: usize, threshold: Option<u64>, cfg: &RunConfig) -> Outcome {
    let mode = threshold.map_or(PdsMode::MaxCoverage, PdsMode::Threshold);
    match partial_dominating_set(g, k, mode).map_err(optimizer_error)? {
        PdsAnswer::Best(r) => Ok(Output { code: 0, stdout: show_opt(&r, cfg.format) }),
        PdsAnswer::Threshold(b) => {
            let stdout = match cfg.format {
                Format::Json => json_line(&json!({ "answer": b })),
                Format::Human => format!("{}\n", u8::from(b)),
            };
            Ok(Output { code: decided(b), stdout })
        }
    }
}

fn oracle(cmd: &OracleCommand, cfg: &RunConfig) -> Outcome {
    match cmd {
        OracleCommand::Eval { graph, query } => {
            let (g, f) = (read_graph(graph)?, read_query(query)?);
            if !f.is_sentence() {
                return Err(usage_free(&f));
            }
            let b = eval(&f, &g, &Assignment::new()).map_err(input_error)?;
            let stdout = match cfg.format {
                Format::Json => json_line(&json!({ "answer": b })),
                Format::Human => format!("{}\n", u8::from(b)),
            };
            Ok(Output { code: decided(b), stdout })
        }
        OracleCommand::Witness { graph, query, lambda } => {
            let (g, f) = (read_graph(graph)?, read_query(query)?);
            let lambda = match lambda {
                Some(l) => parse_rational(l).map_err(input_error)?,
                None => BigRational::one() + &cfg.epsilon,
            };
            let w = instability_witness(&f, &g, &lambda, cfg.oracle_cap).map_err(input_error)?;
            let stdout = match (cfg.format, &w) {
                (Format::Json, w) => json_line(&json!({
                    "lambda": lambda.to_string(),
                    "witness": w.as_ref().map(|w| json!({
                        "satisfied": w.satisfied.to_string(),
                        "unsatisfied": w.unsatisfied.to_string(),
                    })),
                })),
                (Format::Human, None) => "stable\n".into(),
                (Format::Human, Some(w)) => format!("unstable\nsatisfied: {}\nunsatisfied: {}\n", w.satisfied, w.unsatisfied),
            };
            Ok(Output { code: 0, stdout })
        }
    }
}

fn usage_free(f: &Formula) -> Failure {
    let free: Vec<String> = f.free_vars().iter().map(|v| v.to_string()).collect();
    Failure { code: EXIT_USAGE, message: format!("not a sentence; free variables: {}", free.join(", ")) }
}

#[derive(Serialize)]
struct AugmentRow {
    round: usize,
    functions: usize,
    transitive: usize,
    fraternal: usize,
    max_indegree: usize,
    arcs: usize,
}

fn augment_cmd(g: &LabeledGraph, rounds: usize, cfg: &RunConfig) -> Outcome {
    let mut s = orient(g);
    let mut rows = Vec::new();
    for round in 0..=rounds {
        if round > 0 {
            s = augment(&s);
        }
        let of = |p: Provenance| s.provenance_counts().into_iter().find(|(q, _)| *q == p).map_or(0, |(_, c)| c);
        rows.push(AugmentRow {
            round,
            functions: s.signature().fn_count(),
            transitive: of(Provenance::Transitive),
            fraternal: of(Provenance::Fraternal),
            max_indegree: s.indegree(),
            arcs: s.proper_arcs().len(),
        });
    }
    let stdout = match cfg.format {
        Format::Json => json_line(&rows),
        Format::Human => {
            let mut out = String::from("round functions transitive fraternal max_indegree arcs\n");
            for r in rows {
                writeln!(out, "{} {} {} {} {} {}", r.round, r.functions, r.transitive, r.fraternal, r.max_indegree, r.arcs)
                    .unwrap();
            }
            out
        }
    };
    Ok(Output { code: 0, stdout })
}
