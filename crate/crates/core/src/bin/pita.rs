use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use pita::algebra::Mode;
use pita::bench::{self, BenchConfig, HmmEncoding, PathProgram, SeqKind, Suite};
use pita::transform::pita_transform;
use pita::{parse_program, parse_query, solve, EngineConfig, Outcome};

/// Uncertainty queries over annotated logic programs.
#[derive(Parser)]
#[command(name = "pita", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Answer a goal against a program file.
    Query(QueryArgs),
    /// Run a benchmark suite and write CSV.
    Bench(BenchArgs),
    /// Write a generated benchmark program.
    Gen(GenArgs),
}

#[derive(Args)]
struct QueryArgs {
    /// prob, ind-exc, count, viterbi or poss
    #[arg(short, long)]
    mode: Mode,
    #[arg(short, long)]
    program: PathBuf,
    /// The goal, or `@FILE` to read it from a file.
    #[arg(short, long)]
    goal: String,
    /// Print the instrumented clauses first.
    #[arg(long)]
    dump_transform: bool,
    /// Write the answer's BDD as Graphviz dot (prob mode).
    #[arg(long, value_name = "PATH")]
    dump_bdd: Option<PathBuf>,
    #[arg(long, value_name = "SECS")]
    timeout: Option<f64>,
    #[arg(long)]
    step_limit: Option<u64>,
    /// Print table and answer counters to stderr.
    #[arg(long)]
    stats: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// hmm or graph
    suite: Suite,
    #[arg(long, value_delimiter = ',', required = true)]
    modes: Vec<Mode>,
    /// Sequence lengths or edge counts, `start:end[:step]`.
    #[arg(long)]
    range: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 300.0, value_name = "SECS")]
    timeout: f64,
    #[arg(short, long, default_value_t = 1)]
    jobs: usize,
    /// hmm: random or repeat
    #[arg(long, default_value = "random")]
    kind: SeqKind,
    /// hmm: naive or reduced
    #[arg(long, default_value = "reduced")]
    encoding: HmmEncoding,
    /// graph: left, right or visited
    #[arg(long, default_value = "left")]
    path: PathProgram,
    /// graph: node count (default: a quarter of the edges)
    #[arg(long)]
    nodes: Option<usize>,
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    suite: GenSuite,
}

#[derive(Subcommand)]
enum GenSuite {
    Hmm {
        #[arg(long)]
        length: usize,
        #[arg(long, default_value = "random")]
        kind: SeqKind,
        #[arg(long, default_value = "reduced")]
        encoding: HmmEncoding,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    Graph {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        edges: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "left")]
        path: PathProgram,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Usage, parse and I/O failures exit 1; evaluation failures exit 2.
enum Failure {
    Input(String),
    Engine(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Query(a) => query(a),
        Command::Bench(a) => run_bench(a),
        Command::Gen(a) => gen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Engine(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn input<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> Failure + '_ {
    move |e| Failure::Input(format!("{context}: {e}"))
}

fn seconds(s: f64) -> Result<Duration, Failure> {
    Duration::try_from_secs_f64(s).map_err(input("timeout"))
}

fn query(a: QueryArgs) -> Result<(), Failure> {
    let path = a.program.display().to_string();
    let text = fs::read_to_string(&a.program).map_err(input(&path))?;
    let program = parse_program(&text, a.mode.parse_mode()).map_err(input(&path))?;
    let goal_text = match a.goal.strip_prefix('@') {
        Some(file) => fs::read_to_string(file).map_err(input(file))?,
        None => a.goal.clone(),
    };
    let goal = parse_query(goal_text.trim()).map_err(input("goal"))?;
    if a.dump_bdd.is_some() && a.mode != Mode::Prob {
        return Err(Failure::Input("--dump-bdd needs prob mode".into()));
    }
    let stdout = io::stdout();
    let mut out = stdout.lock();
    if a.dump_transform {
        for c in program.clauses() {
            for ic in pita_transform(c, a.mode.flavor()) {
                writeln!(out, "{ic}").map_err(input("stdout"))?;
            }
        }
        writeln!(out).map_err(input("stdout"))?;
    }
    let config = EngineConfig {
        timeout: a.timeout.map(seconds).transpose()?,
        step_limit: a.step_limit,
        want_dot: a.dump_bdd.is_some(),
        ..EngineConfig::default()
    };
    let solution = solve(&program, a.mode, &goal, &config)
        .map_err(|e| Failure::Engine(format!("{}: {e}", e.kind())))?;
    for ans in &solution.answers {
        match &ans.value {
            Outcome::Viterbi { explanation, .. } => {
                let expl = match explanation {
                    Some(cs) => {
                        let items: Vec<String> = cs.iter().map(|c| c.to_string()).collect();
                        format!("[{}]", items.join(","))
                    }
                    None => "null".to_string(),
                };
                writeln!(out, "{}\t{}\t{}", ans.atom, ans.value, expl)
            }
            v => writeln!(out, "{}\t{}", ans.atom, v),
        }
        .map_err(input("stdout"))?;
    }
    if let (Some(path), Some(dot)) = (&a.dump_bdd, &solution.bdd_dot) {
        fs::write(path, dot).map_err(input(&path.display().to_string()))?;
    }
    if a.stats {
        let s = &solution.stats;
        eprintln!(
            "tables {} answers {} passes {} steps {} random vars {} terms {}",
            s.tables_created, s.answers, s.passes, s.steps, s.random_vars, s.terms
        );
    }
    Ok(())
}

fn run_bench(a: BenchArgs) -> Result<(), Failure> {
    let params = bench::parse_range(&a.range).map_err(input("range"))?;
    let mut cfg = BenchConfig::new(a.suite, a.modes, params);
    cfg.seed = a.seed;
    cfg.timeout = seconds(a.timeout)?;
    cfg.jobs = a.jobs;
    cfg.seq_kind = a.kind;
    cfg.encoding = a.encoding;
    cfg.path_program = a.path;
    cfg.nodes = a.nodes;
    let rows = bench::run_bench(&cfg);
    match &a.output {
        Some(p) => {
            let f = fs::File::create(p).map_err(input(&p.display().to_string()))?;
            bench::write_csv(&rows, f).map_err(input("csv"))?;
        }
        None => bench::write_csv(&rows, io::stdout().lock()).map_err(input("csv"))?,
    }
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        return Err(Failure::Engine(format!("{failed} of {} configurations failed", rows.len())));
    }
    Ok(())
}

fn gen(a: GenArgs) -> Result<(), Failure> {
    let (generated, output) = match a.suite {
        GenSuite::Hmm {
            length,
            kind,
            encoding,
            seed,
            output,
        } => (bench::gen_hmm(length, kind, encoding, seed), output),
        GenSuite::Graph {
            nodes,
            edges,
            seed,
            path,
            output,
        } => (bench::gen_graph(nodes, edges, seed, path), output),
    };
    let g = generated.map_err(input("gen"))?;
    let text = format!("% goal: {}\n{}", g.goal, g.program);
    match output {
        Some(p) => {
            fs::write(&p, text).map_err(input(&p.display().to_string()))?;
            println!("{}", g.goal);
        }
        None => print!("{text}"),
    }
    Ok(())
}
