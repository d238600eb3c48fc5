//! Benchmark program generators and the benchmark runner.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::algebra::{Mode, Outcome};
use crate::engine::{solve, EngineConfig};
use crate::parser::{parse_program, parse_query};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{edges} edges do not fit in a simple graph on {nodes} nodes")]
    TooManyEdges { nodes: usize, edges: usize },
    #[error("a graph needs at least one node")]
    NoNodes,
    #[error("sequence length must be at least 1")]
    EmptySequence,
    #[error("bad range {0:?}; expected start:end or start:end:step")]
    BadRange(String),
    #[error("unknown {what} {value:?}")]
    Unknown { what: &'static str, value: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A generated program with the goal to ask of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generated {
    pub program: String,
    pub goal: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqKind {
    Random,
    Repeat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HmmEncoding {
    /// State history and state sequence carried as arguments.
    Naive,
    /// Only the current state and the remaining output.
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathProgram {
    /// `path(X,Y) :- path(X,Z), edge(Z,Y).`
    LeftRecursive,
    /// `path(X,Y) :- edge(X,Z), path(Z,Y).`
    RightRecursive,
    /// Right recursion over simple paths only, with a visited list.
    Visited,
}

macro_rules! named_enum {
    ($ty:ident, $what:literal, $($name:literal => $variant:ident),+) => {
        impl FromStr for $ty {
            type Err = BenchError;
            fn from_str(s: &str) -> Result<Self, BenchError> {
                match s {
                    $($name => Ok($ty::$variant),)+
                    _ => Err(BenchError::Unknown { what: $what, value: s.to_string() }),
                }
            }
        }

        impl $ty {
            pub fn name(self) -> &'static str {
                match self {
                    $($ty::$variant => $name,)+
                }
            }
        }
    };
}

named_enum!(SeqKind, "sequence kind", "random" => Random, "repeat" => Repeat);
named_enum!(HmmEncoding, "encoding", "naive" => Naive, "reduced" => Reduced);
named_enum!(PathProgram, "path program", "left" => LeftRecursive, "right" => RightRecursive, "visited" => Visited);
named_enum!(Suite, "suite", "hmm" => Hmm, "graph" => Graph);

const SYMBOLS: [&str; 4] = ["a", "c", "g", "t"];

const HMM_MODEL: &str = "\
succ(q1,q1,S):1/3 ; succ(q1,q2,S):1/3 ; succ(q1,end,S):1/3.
succ(q2,q1,S):1/3 ; succ(q2,q2,S):1/3 ; succ(q2,end,S):1/3.
out(q1,a,S):1/4 ; out(q1,c,S):1/4 ; out(q1,g,S):1/4 ; out(q1,t,S):1/4.
out(q2,a,S):1/4 ; out(q2,c,S):1/4 ; out(q2,g,S):1/4 ; out(q2,t,S):1/4.
";

/// The output sequence of an HMM benchmark.
pub fn hmm_sequence(length: usize, kind: SeqKind, seed: u64) -> Vec<&'static str> {
    match kind {
        SeqKind::Repeat => (0..length).map(|i| SYMBOLS[i % 4]).collect(),
        SeqKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..length).map(|_| *SYMBOLS.choose(&mut rng).expect("nonempty")).collect()
        }
    }
}

/// The two-state HMM with uniform transitions and emissions, and the goal
/// `hmm([...])` for a sequence of `length` symbols.
///
/// In the reduced encoding the last argument of `succ/3` and `out/3` is the
/// remaining output, which identifies the time step. This keeps every
/// answer ground and gives each step its own random variables.
pub fn gen_hmm(length: usize, kind: SeqKind, encoding: HmmEncoding, seed: u64) -> Result<Generated, BenchError> {
    if length == 0 {
        return Err(BenchError::EmptySequence);
    }
    let mut program = String::new();
    match encoding {
        HmmEncoding::Naive => program.push_str(
            "hmm(O) :- hmm1(_,O).\n\
             hmm1(S,O) :- hmm(q1,[],S,O).\n\
             hmm(end,S,S,[]).\n\
             hmm(Q,S0,S,[L|O]) :- Q \\= end, succ(Q,Q1,S0), out(Q,L,S0), hmm(Q1,[Q|S0],S,O).\n",
        ),
        HmmEncoding::Reduced => program.push_str(
            "hmm(O) :- hmm(q1,O).\n\
             hmm(end,[]).\n\
             hmm(Q,[L|O]) :- Q \\= end, succ(Q,Q1,[L|O]), out(Q,L,[L|O]), hmm(Q1,O).\n",
        ),
    }
    program.push_str(HMM_MODEL);
    let goal = format!("hmm([{}])", hmm_sequence(length, kind, seed).join(","));
    Ok(Generated { program, goal })
}

/// Closed-form `P(hmm(seq))` for the uniform model: each of the
/// `2^(n-1)` state paths has probability `(1/3 * 1/4)^n`.
pub fn hmm_closed_form(length: usize) -> f64 {
    let n = length as i32;
    2f64.powi(n - 1) / 12f64.powi(n)
}

/// A weighted directed edge; the weight is `thousandths / 1000`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub thousandths: u32,
}

impl Edge {
    pub fn weight(&self) -> f64 {
        f64::from(self.thousandths) / 1000.0
    }
}

/// `edges` distinct directed edges without self-loops, weights uniform in
/// `{0.001, ..., 1}`.
pub fn random_graph(nodes: usize, edges: usize, seed: u64) -> Result<Vec<Edge>, BenchError> {
    if nodes == 0 {
        return Err(BenchError::NoNodes);
    }
    if edges > nodes * (nodes - 1) {
        return Err(BenchError::TooManyEdges { nodes, edges });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(edges);
    while out.len() < edges {
        let from = rng.gen_range(0..nodes);
        let to = rng.gen_range(0..nodes);
        if from != to && seen.insert((from, to)) {
            out.push(Edge {
                from,
                to,
                thousandths: rng.gen_range(1..=1000),
            });
        }
    }
    Ok(out)
}

/// A random DAG: edges only go from lower to higher node numbers.
pub fn random_dag(nodes: usize, edges: usize, seed: u64) -> Result<Vec<Edge>, BenchError> {
    if nodes == 0 {
        return Err(BenchError::NoNodes);
    }
    if edges > nodes * (nodes - 1) / 2 {
        return Err(BenchError::TooManyEdges { nodes, edges });
    }
    let mut g = random_graph(nodes, edges.min(nodes * (nodes - 1) / 2), seed)?;
    // orient each edge forward, then drop the duplicates that creates
    let mut seen = BTreeSet::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for e in &mut g {
        if e.from > e.to {
            std::mem::swap(&mut e.from, &mut e.to);
        }
    }
    g.retain(|e| seen.insert((e.from, e.to)));
    while g.len() < edges {
        let a = rng.gen_range(0..nodes);
        let b = rng.gen_range(0..nodes);
        let (from, to) = (a.min(b), a.max(b));
        if from != to && seen.insert((from, to)) {
            g.push(Edge {
                from,
                to,
                thousandths: rng.gen_range(1..=1000),
            });
        }
    }
    Ok(g)
}

pub fn node_name(i: usize) -> String {
    format!("n{i}")
}

/// Decimal text of a weight in thousandths, as written into programs.
pub fn weight_text(thousandths: u32) -> String {
    if thousandths >= 1000 {
        "1.0".to_string()
    } else {
        format!("0.{thousandths:03}")
    }
}

/// Path clauses plus one annotated `edge/2` fact per edge.
pub fn graph_program(edges: &[Edge], program: PathProgram) -> String {
    let mut out = String::new();
    out.push_str(match program {
        PathProgram::LeftRecursive => "path(X,X).\npath(X,Y) :- path(X,Z), edge(Z,Y).\n",
        PathProgram::RightRecursive => "path(X,X).\npath(X,Y) :- edge(X,Z), path(Z,Y).\n",
        PathProgram::Visited => {
            "path(X,Y) :- walk(X,Y,[X]).\n\
             walk(X,X,V).\n\
             walk(X,Y,V) :- edge(X,Z), nonmember(Z,V), walk(Z,Y,[Z|V]).\n\
             nonmember(X,[]).\n\
             nonmember(X,[H|T]) :- X \\= H, nonmember(X,T).\n"
        }
    });
    for e in edges {
        let _ = writeln!(
            out,
            "edge({},{}):{}.",
            node_name(e.from),
            node_name(e.to),
            weight_text(e.thousandths)
        );
    }
    out
}

/// A random graph program asking for a path from the first node to the
/// last.
pub fn gen_graph(nodes: usize, edges: usize, seed: u64, program: PathProgram) -> Result<Generated, BenchError> {
    let g = random_graph(nodes, edges, seed)?;
    Ok(Generated {
        program: graph_program(&g, program),
        goal: format!("path({},{})", node_name(0), node_name(nodes - 1)),
    })
}

/// Node count used for a graph benchmark with `edges` edges when none is
/// given: average out-degree about four.
pub fn default_nodes(edges: usize) -> usize {
    (edges / 4).max(4)
}

/// Parses `start:end[:step]`, inclusive.
pub fn parse_range(text: &str) -> Result<Vec<usize>, BenchError> {
    let bad = || BenchError::BadRange(text.to_string());
    let parts: Vec<usize> = text
        .split(':')
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    let (start, end, step) = match parts[..] {
        [s, e] => (s, e, 1),
        [s, e, st] if st > 0 => (s, e, st),
        _ => return Err(bad()),
    };
    if start > end {
        return Err(bad());
    }
    Ok((start..=end).step_by(step).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Hmm,
    Graph,
}

/// Diagram size at which a benchmark run is recorded as out of memory.
pub const BENCH_NODE_LIMIT: usize = 10_000_000;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub suite: Suite,
    pub modes: Vec<Mode>,
    pub params: Vec<usize>,
    pub seed: u64,
    pub timeout: Duration,
    pub jobs: usize,
    pub seq_kind: SeqKind,
    pub encoding: HmmEncoding,
    pub path_program: PathProgram,
    /// Fixed node count for graphs; `None` scales with the edge count.
    pub nodes: Option<usize>,
    pub engine: EngineConfig,
}

impl BenchConfig {
    pub fn new(suite: Suite, modes: Vec<Mode>, params: Vec<usize>) -> Self {
        BenchConfig {
            suite,
            modes,
            params,
            seed: 0,
            timeout: Duration::from_secs(300),
            jobs: 1,
            seq_kind: SeqKind::Random,
            encoding: HmmEncoding::Reduced,
            path_program: PathProgram::LeftRecursive,
            nodes: None,
            engine: EngineConfig {
                bdd_node_limit: Some(BENCH_NODE_LIMIT),
                ..EngineConfig::default()
            },
        }
    }

    pub fn generate(&self, param: usize) -> Result<Generated, BenchError> {
        match self.suite {
            Suite::Hmm => gen_hmm(param, self.seq_kind, self.encoding, self.seed),
            Suite::Graph => {
                let nodes = self.nodes.unwrap_or_else(|| default_nodes(param));
                gen_graph(nodes, param, self.seed, self.path_program)
            }
        }
    }
}

/// One row of benchmark output.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub suite: Suite,
    pub param: usize,
    pub mode: Mode,
    pub seed: u64,
    /// Empty unless the run succeeded.
    pub value: String,
    pub time_s: f64,
    /// `ok` or the error kind.
    pub status: String,
}

impl BenchResult {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Value text that round-trips: shortest exact decimal for reals.
pub fn value_text(o: &Outcome) -> String {
    match o {
        Outcome::Count(c) => c.to_string(),
        other => format!("{}", other.as_f64()),
    }
}

/// Runs one configuration.
pub fn run_one(cfg: &BenchConfig, param: usize, mode: Mode) -> BenchResult {
    let mut row = BenchResult {
        suite: cfg.suite,
        param,
        mode,
        seed: cfg.seed,
        value: String::new(),
        time_s: 0.0,
        status: "ok".to_string(),
    };
    let generated = match cfg.generate(param) {
        Ok(g) => g,
        Err(e) => {
            row.status = format!("GenError: {e}");
            return row;
        }
    };
    let program = match parse_program(&generated.program, mode.parse_mode()) {
        Ok(p) => p,
        Err(e) => {
            row.status = format!("ParseError: {e}");
            return row;
        }
    };
    let goal = parse_query(&generated.goal).expect("generated goals parse");
    let engine = EngineConfig {
        timeout: Some(cfg.timeout),
        ..cfg.engine.clone()
    };
    let start = Instant::now();
    let result = solve(&program, mode, &goal, &engine);
    row.time_s = start.elapsed().as_secs_f64();
    match result {
        Ok(sol) => {
            row.value = sol.answers.first().map(|a| value_text(&a.value)).unwrap_or_default();
        }
        Err(e) => row.status = e.kind().to_string(),
    }
    row
}

/// Runs every (parameter, mode) pair, `jobs` at a time. Rows come back in
/// request order whatever the scheduling.
pub fn run_bench(cfg: &BenchConfig) -> Vec<BenchResult> {
    let tasks: Vec<(usize, Mode)> = cfg
        .params
        .iter()
        .flat_map(|&p| cfg.modes.iter().map(move |&m| (p, m)))
        .collect();
    let next = AtomicUsize::new(0);
    let rows: Mutex<Vec<Option<BenchResult>>> = Mutex::new(vec![None; tasks.len()]);
    std::thread::scope(|s| {
        for _ in 0..cfg.jobs.clamp(1, tasks.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(param, mode)) = tasks.get(i) else {
                    break;
                };
                let row = run_one(cfg, param, mode);
                rows.lock().expect("no worker panics while holding the lock")[i] = Some(row);
            });
        }
    });
    rows.into_inner()
        .expect("workers joined")
        .into_iter()
        .map(|r| r.expect("every task ran"))
        .collect()
}

pub const CSV_HEADER: [&str; 7] = ["suite", "param", "mode", "seed", "value", "time_s", "status"];

pub fn write_csv<W: io::Write>(rows: &[BenchResult], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.suite.name(),
            &r.param.to_string(),
            r.mode.name(),
            &r.seed.to_string(),
            &r.value,
            &format!("{:.6}", r.time_s),
            &r.status,
        ])?;
    }
    w.flush()?;
    Ok(())
}
