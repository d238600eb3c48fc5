//! Goal-directed tabled evaluation of instrumented clauses.
//!
//! Every predicate is tabled. A table is keyed by the variant of its call
//! and maps ground answer tuples to algebra values, joined with `or` as
//! derivations arrive. Tables are completed one strongly connected
//! component of the dynamic call graph at a time: acyclic components take
//! a single pass, cyclic ones are iterated to a fixpoint when the algebra's
//! `or` is idempotent and rejected otherwise.

mod terms;

use std::collections::{HashMap, HashSet};
use std::hash::Hash;
use std::rc::Rc;
use std::sync::Arc;
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use thiserror::Error;

use crate::algebra::{
    Algebra, AlgebraError, Count, EqualitySite, GroundingId, IndExc, Mode, Outcome, Poss, Prob,
    Viterbi,
};
use crate::ast::{grounding_key, Atom, Literal, Program, RuleId, Term};
use crate::bdd::{BddError, MvVar};
use crate::transform::{pita_transform, EqualitySource, InstrumentedClause, Step};

pub use terms::{Node, Sym, TermId, TermStore};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("negative call {0} depends on an incomplete subgoal (program is not stratified)")]
    NotStratified(String),
    #[error("fixpoint did not converge within {0} rounds")]
    NonConvergent(u64),
    #[error("answer {0} is not ground (unsafe clause)")]
    NonGroundAnswer(String),
    #[error("clause {rule} has non-ground variables {key} when selecting a head")]
    NonGroundKey { rule: RuleId, key: String },
    #[error("negative call {0} is not ground")]
    NonGroundNegation(String),
    #[error("program has recursive subgoal cycles through {0}; {1} mode requires an acyclic call graph")]
    CyclicNonIdempotent(String, Mode),
    #[error("contribution counted twice for {0}")]
    DuplicateContribution(String),
    #[error("negation is not available in {0} mode")]
    NegationUnsupported(Mode),
    #[error("negation is not available in poss mode")]
    NegationInPossMode,
    #[error("possibilistic clauses have exactly one head (clause {0})")]
    AnnotatedMultiHeadInPossMode(RuleId),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("step limit of {0} exceeded")]
    StepLimit(u64),
    #[error("timed out after {0:?}")]
    Timeout(Duration),
    #[error("subgoals nest too deeply for the evaluation stack ({0} bytes); raise the stack size")]
    DepthLimit(usize),
    #[error("evaluation thread failed: {0}")]
    Panicked(String),
}

impl EngineError {
    /// Short machine-readable name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            EngineError::NotStratified(_) => "NotStratified",
            EngineError::NonConvergent(_) => "NonConvergent",
            EngineError::NonGroundAnswer(_) => "NonGroundAnswer",
            EngineError::NonGroundKey { .. } => "NonGroundKey",
            EngineError::NonGroundNegation(_) => "NonGroundNegation",
            EngineError::CyclicNonIdempotent(..) => "CyclicNonIdempotent",
            EngineError::DuplicateContribution(_) => "DuplicateContribution",
            EngineError::NegationUnsupported(_) => "NegationUnsupported",
            EngineError::NegationInPossMode => "NegationInPossMode",
            EngineError::AnnotatedMultiHeadInPossMode(_) => "AnnotatedMultiHeadInPossMode",
            EngineError::Algebra(AlgebraError::Bdd(BddError::NodeLimit(_))) => "NodeLimit",
            EngineError::Algebra(_) => "AlgebraError",
            EngineError::StepLimit(_) => "StepLimit",
            EngineError::Timeout(_) => "Timeout",
            EngineError::DepthLimit(_) => "DepthLimit",
            EngineError::Panicked(_) => "Panicked",
        }
    }
}

/// Evaluation stops with `DepthLimit` when less stack than this is left.
const STACK_RESERVE: usize = 1 << 20;

#[derive(Debug, Clone)]
pub struct EngineConfig {
    /// Cap on fixpoint rounds for one component.
    pub max_rounds: u64,
    /// Cap on executed clause steps.
    pub step_limit: Option<u64>,
    pub timeout: Option<Duration>,
    pub bdd_node_limit: Option<usize>,
    /// Stack size of the evaluation thread.
    pub stack_size: usize,
    /// Render the first answer's diagram (prob mode only).
    pub want_dot: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            max_rounds: 1_000_000,
            step_limit: None,
            timeout: None,
            bdd_node_limit: None,
            stack_size: 2 << 30,
            want_dot: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stats {
    pub tables_created: u64,
    pub answers: u64,
    pub passes: u64,
    pub fixpoint_rounds: u64,
    pub steps: u64,
    pub random_vars: u64,
    pub terms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Answer {
    pub atom: Atom,
    pub value: Outcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub answers: Vec<Answer>,
    pub stats: Stats,
    pub bdd_dot: Option<String>,
}

/// Map from (rule, grounding) to random variable; lookup-or-create.
#[derive(Debug, Clone)]
pub struct VarStore<K> {
    map: HashMap<(RuleId, K), MvVar>,
}

impl<K> Default for VarStore<K> {
    fn default() -> Self {
        VarStore {
            map: HashMap::new(),
        }
    }
}

impl<K: Hash + Eq> VarStore<K> {
    pub fn new() -> Self {
        VarStore::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn lookup_or_create<E>(
        &mut self,
        rule: RuleId,
        key: K,
        create: impl FnOnce() -> Result<MvVar, E>,
    ) -> Result<MvVar, E> {
        use std::collections::hash_map::Entry;
        match self.map.entry((rule, key)) {
            Entry::Occupied(e) => Ok(*e.get()),
            Entry::Vacant(e) => Ok(*e.insert(create()?)),
        }
    }
}

/// The variable of clause `rule` for the ground instantiation `vc`.
pub fn get_var_n<A: Algebra>(
    store: &mut VarStore<String>,
    alg: &mut A,
    rule: RuleId,
    vc: &[Term],
    probs: &[f64],
) -> Result<MvVar, EngineError> {
    let key = grounding_key(vc).map_err(|e| EngineError::NonGroundKey { rule, key: e.0 })?;
    store.lookup_or_create(rule, key, || alg.add_var(probs).map_err(EngineError::from))
}

/// Evaluates `goal` against `program` in the given mode, on a dedicated
/// thread with `config.stack_size` bytes of stack.
pub fn solve(
    program: &Program,
    mode: Mode,
    goal: &Atom,
    config: &EngineConfig,
) -> Result<Solution, EngineError> {
    std::thread::scope(|s| {
        let handle = std::thread::Builder::new()
            .name("pita-solve".into())
            .stack_size(config.stack_size)
            .spawn_scoped(s, || solve_on_current_thread(program, mode, goal, config))
            .map_err(|e| EngineError::Panicked(e.to_string()))?;
        handle.join().unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".to_string());
            Err(EngineError::Panicked(msg))
        })
    })
}

/// Like [`solve`] but on the calling thread, which must have enough stack
/// for the recursion depth of the query.
pub fn solve_on_current_thread(
    program: &Program,
    mode: Mode,
    goal: &Atom,
    config: &EngineConfig,
) -> Result<Solution, EngineError> {
    let result = match mode {
        Mode::Prob => {
            let deadline = config.timeout.map(|t| Instant::now() + t);
            let alg = Prob::new(config.bdd_node_limit).with_deadline(deadline);
            run(alg, program, goal, config)
        }
        Mode::IndExc => run(IndExc, program, goal, config),
        Mode::Count => run(Count, program, goal, config),
        Mode::Viterbi => run(Viterbi, program, goal, config),
        Mode::Poss => run(Poss, program, goal, config),
    };
    match (result, config.timeout) {
        (Err(EngineError::Algebra(AlgebraError::Bdd(BddError::Deadline))), Some(t)) => Err(EngineError::Timeout(t)),
        (r, _) => r,
    }
}

fn run<A: Algebra>(
    alg: A,
    program: &Program,
    goal: &Atom,
    config: &EngineConfig,
) -> Result<Solution, EngineError> {
    check_program(&alg, program)?;
    let mut engine = Engine::new(alg, program, config);
    engine.query(goal)
}

fn check_program<A: Algebra>(alg: &A, program: &Program) -> Result<(), EngineError> {
    let mode = alg.mode();
    for c in program.clauses() {
        if mode == Mode::Poss && c.heads.len() > 1 {
            return Err(EngineError::AnnotatedMultiHeadInPossMode(c.id));
        }
        if !alg.supports_negation() && c.body.iter().any(|l| matches!(l, Literal::Neg(_))) {
            return Err(if mode == Mode::Poss {
                EngineError::NegationInPossMode
            } else {
                EngineError::NegationUnsupported(mode)
            });
        }
    }
    Ok(())
}

type PredId = u32;
type TableId = u32;

#[derive(Debug)]
enum CStep {
    One(u32),
    CallPos { pred: PredId, args: Box<[TermId]>, out: u32 },
    CallNeg { pred: PredId, args: Box<[TermId]>, out: u32 },
    Unify(TermId, TermId),
    NotUnify(TermId, TermId),
    And { left: u32, right: u32, out: u32 },
    GetVar { out: u32 },
    Equality { var: Option<u32>, head: usize, out: u32 },
}

#[derive(Debug)]
struct Compiled {
    rule: RuleId,
    head_args: Box<[TermId]>,
    steps: Vec<CStep>,
    result: u32,
    slots: u32,
    nvars: u32,
    probs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Evaluating,
    Complete,
}

struct AnswerEntry<V> {
    args: Rc<[TermId]>,
    value: V,
}

struct Table<V> {
    pred: PredId,
    args: Rc<[TermId]>,
    goal_vars: u32,
    status: Status,
    index: u32,
    low: u32,
    consumed_incomplete: bool,
    answers: Rc<Vec<AnswerEntry<V>>>,
}

struct Frame<V> {
    cells: Vec<Option<TermId>>,
    trail: Vec<u32>,
    base: u32,
    values: Vec<Option<V>>,
    mvars: Vec<Option<MvVar>>,
    combo: Vec<(TableId, u32)>,
}

impl<V> Frame<V> {
    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let c = self.trail.pop().expect("trail entry");
            self.cells[c as usize] = None;
        }
    }
}

struct Accum<V> {
    entries: IndexMap<Rc<[TermId]>, V>,
    log: HashSet<(u32, Vec<(TableId, u32)>)>,
}

enum Deref {
    Unbound(u32),
    Bound(TermId),
}

struct Engine<'p, A: Algebra> {
    alg: A,
    config: &'p EngineConfig,
    store: TermStore,
    preds: Vec<(Arc<str>, usize)>,
    pred_index: HashMap<(Arc<str>, usize), PredId>,
    clauses: Rc<Vec<Compiled>>,
    by_pred: Vec<Vec<u32>>,
    tables: Vec<Table<A::Value>>,
    table_index: HashMap<(PredId, Rc<[TermId]>), TableId>,
    stack: Vec<TableId>,
    next_dfs: u32,
    vars: VarStore<Box<[TermId]>>,
    groundings: indexmap::IndexSet<Box<[TermId]>>,
    stats: Stats,
    started: Instant,
}

impl<'p, A: Algebra> Engine<'p, A> {
    fn new(alg: A, program: &'p Program, config: &'p EngineConfig) -> Self {
        let mut e = Engine {
            alg,
            config,
            store: TermStore::new(),
            preds: Vec::new(),
            pred_index: HashMap::new(),
            clauses: Rc::new(Vec::new()),
            by_pred: Vec::new(),
            tables: Vec::new(),
            table_index: HashMap::new(),
            stack: Vec::new(),
            next_dfs: 0,
            vars: VarStore::new(),
            groundings: indexmap::IndexSet::new(),
            stats: Stats::default(),
            started: Instant::now(),
        };
        let flavor = e.alg.flavor();
        let mut compiled = Vec::new();
        for clause in program.clauses() {
            for ic in pita_transform(clause, flavor) {
                let c = e.compile(&ic);
                let pred = e.pred(&ic.head.predicate, ic.head.arity());
                e.by_pred[pred as usize].push(compiled.len() as u32);
                compiled.push(c);
            }
        }
        e.clauses = Rc::new(compiled);
        e
    }

    fn pred(&mut self, name: &Arc<str>, arity: usize) -> PredId {
        let key = (Arc::clone(name), arity);
        if let Some(&p) = self.pred_index.get(&key) {
            return p;
        }
        let p = self.preds.len() as PredId;
        self.preds.push(key.clone());
        self.pred_index.insert(key, p);
        self.by_pred.push(Vec::new());
        p
    }

    fn template(&mut self, t: &Term) -> TermId {
        self.store.from_ast(t, &mut |v| Node::ClauseVar(v.0))
    }

    fn templates(&mut self, ts: &[Term]) -> Box<[TermId]> {
        ts.iter().map(|t| self.template(t)).collect()
    }

    fn compile(&mut self, ic: &InstrumentedClause) -> Compiled {
        let head_args = self.templates(&ic.head.args);
        let steps = ic
            .steps
            .iter()
            .map(|s| match s {
                Step::One { out } => CStep::One(out.0),
                Step::CallPos { atom, out } => CStep::CallPos {
                    pred: self.pred(&atom.predicate, atom.arity()),
                    args: self.templates(&atom.args),
                    out: out.0,
                },
                Step::CallNeg { atom, out } => CStep::CallNeg {
                    pred: self.pred(&atom.predicate, atom.arity()),
                    args: self.templates(&atom.args),
                    out: out.0,
                },
                Step::Unify(l, r) => CStep::Unify(self.template(l), self.template(r)),
                Step::NotUnify(l, r) => CStep::NotUnify(self.template(l), self.template(r)),
                Step::And { left, right, out } => CStep::And {
                    left: left.0,
                    right: right.0,
                    out: out.0,
                },
                Step::GetVar { out, .. } => CStep::GetVar { out: out.0 },
                Step::Equality { source, head, out } => CStep::Equality {
                    var: match source {
                        EqualitySource::Var(v) => Some(v.0),
                        EqualitySource::Probs(_) => None,
                    },
                    head: *head,
                    out: out.0,
                },
            })
            .collect();
        Compiled {
            rule: ic.rule,
            head_args,
            steps,
            result: ic.result.0,
            slots: ic.slot_count,
            nvars: ic.var_names.len() as u32,
            probs: ic.probs.iter().map(|a| a.value()).collect(),
        }
    }

    fn query(&mut self, goal: &Atom) -> Result<Solution, EngineError> {
        let pred = self.pred(&goal.predicate, goal.arity());
        let mut seen: Vec<crate::ast::Var> = Vec::new();
        let args: Rc<[TermId]> = goal
            .args
            .iter()
            .map(|t| {
                self.store.from_ast(t, &mut |v| {
                    let k = seen.iter().position(|w| *w == v).unwrap_or_else(|| {
                        seen.push(v);
                        seen.len() - 1
                    });
                    Node::GoalVar(k as u32)
                })
            })
            .collect();
        let t = self.table(pred, args, seen.len() as u32);
        if self.is_new(t) {
            self.eval(t)?;
        }
        let answers = Rc::clone(&self.tables[t as usize].answers);
        let mut out = Vec::with_capacity(answers.len());
        let mut dot = None;
        let groundings = std::mem::take(&mut self.groundings);
        let lookup = |g: GroundingId| -> Vec<Term> {
            groundings
                .get_index(g.0 as usize)
                .map(|ts| ts.iter().map(|t| self.store.to_ast(*t)).collect())
                .unwrap_or_default()
        };
        for a in answers.iter() {
            if self.config.want_dot && dot.is_none() {
                dot = self.alg.to_dot(&a.value);
            }
            let atom = Atom {
                predicate: Arc::clone(&goal.predicate),
                args: a.args.iter().map(|t| self.store.to_ast(*t)).collect(),
            };
            out.push(Answer {
                atom,
                value: self.alg.ret_prob(&a.value, &lookup),
            });
        }
        if out.is_empty() && goal.is_ground() {
            let zero = self.alg.zero();
            if self.config.want_dot {
                dot = self.alg.to_dot(&zero);
            }
            out.push(Answer {
                atom: goal.clone(),
                value: self.alg.ret_prob(&zero, &lookup),
            });
        }
        self.stats.terms = self.store.len() as u64;
        Ok(Solution {
            answers: out,
            stats: self.stats.clone(),
            bdd_dot: dot,
        })
    }

    fn table(&mut self, pred: PredId, args: Rc<[TermId]>, goal_vars: u32) -> TableId {
        if let Some(&t) = self.table_index.get(&(pred, Rc::clone(&args))) {
            return t;
        }
        let t = self.tables.len() as TableId;
        self.tables.push(Table {
            pred,
            args: Rc::clone(&args),
            goal_vars,
            status: Status::Evaluating,
            index: u32::MAX,
            low: u32::MAX,
            consumed_incomplete: false,
            answers: Rc::new(Vec::new()),
        });
        self.table_index.insert((pred, args), t);
        self.stats.tables_created += 1;
        t
    }

    fn is_new(&self, t: TableId) -> bool {
        self.tables[t as usize].index == u32::MAX
    }

    fn describe(&self, t: TableId) -> String {
        let table = &self.tables[t as usize];
        let (name, _) = &self.preds[table.pred as usize];
        let atom = Atom {
            predicate: Arc::clone(name),
            args: table.args.iter().map(|a| self.store.to_ast(*a)).collect(),
        };
        let mut s = atom.to_string();
        if s.len() > 200 {
            let mut cut = 200;
            while !s.is_char_boundary(cut) {
                cut -= 1;
            }
            s.truncate(cut);
            s.push_str("...");
        }
        s
    }

    /// Tarjan-style evaluation of a fresh table.
    fn eval(&mut self, t: TableId) -> Result<(), EngineError> {
        if stacker::remaining_stack().is_some_and(|r| r < STACK_RESERVE) {
            return Err(EngineError::DepthLimit(self.config.stack_size));
        }
        let idx = self.next_dfs;
        self.next_dfs += 1;
        {
            let table = &mut self.tables[t as usize];
            table.index = idx;
            table.low = idx;
            table.status = Status::Evaluating;
        }
        let pos = self.stack.len();
        self.stack.push(t);
        self.run_pass(t)?;
        if self.tables[t as usize].low < idx {
            return Ok(());
        }
        let trivial = self.stack.len() == pos + 1 && !self.tables[t as usize].consumed_incomplete;
        if !trivial {
            if !self.alg.idempotent_or() {
                return Err(EngineError::CyclicNonIdempotent(self.describe(t), self.alg.mode()));
            }
            let mut rounds = 0u64;
            loop {
                rounds += 1;
                self.stats.fixpoint_rounds += 1;
                if rounds > self.config.max_rounds {
                    return Err(EngineError::NonConvergent(self.config.max_rounds));
                }
                let mut changed = false;
                let mut i = pos;
                while i < self.stack.len() {
                    let m = self.stack[i];
                    changed |= self.run_pass(m)?;
                    i += 1;
                }
                let low = self.stack[pos..]
                    .iter()
                    .map(|m| self.tables[*m as usize].low)
                    .min()
                    .unwrap_or(idx);
                if low < idx {
                    // linked below this component: the enclosing leader
                    // iterates over everything instead
                    self.tables[t as usize].low = low;
                    return Ok(());
                }
                if !changed {
                    break;
                }
            }
        }
        for m in self.stack.drain(pos..) {
            self.tables[m as usize].status = Status::Complete;
        }
        Ok(())
    }

    /// Recomputes a table from its clauses and commits the result. Returns
    /// whether any answer changed.
    fn run_pass(&mut self, t: TableId) -> Result<bool, EngineError> {
        self.stats.passes += 1;
        let clauses = Rc::clone(&self.clauses);
        let (pred, args, goal_vars) = {
            let table = &self.tables[t as usize];
            (table.pred, Rc::clone(&table.args), table.goal_vars)
        };
        let mut acc = Accum {
            entries: IndexMap::new(),
            log: HashSet::new(),
        };
        let ids = self.by_pred[pred as usize].clone();
        for ci in ids {
            let cl = &clauses[ci as usize];
            let mut fr = Frame {
                cells: vec![None; (goal_vars + cl.nvars) as usize],
                trail: Vec::new(),
                base: goal_vars,
                values: vec![None; cl.slots as usize],
                mvars: vec![None; cl.slots as usize],
                combo: Vec::new(),
            };
            let mut ok = true;
            for (h, a) in cl.head_args.iter().zip(args.iter()) {
                if !self.unify(&mut fr, *h, *a) {
                    ok = false;
                    break;
                }
            }
            if ok {
                self.exec(t, ci, cl, 0, &mut fr, &mut acc)?;
            }
        }
        let old = Rc::clone(&self.tables[t as usize].answers);
        let changed = old.len() != acc.entries.len()
            || old.iter().any(|e| match acc.entries.get(&e.args) {
                Some(v) => !self.alg.same(v, &e.value),
                None => true,
            });
        self.stats.answers += acc.entries.len().saturating_sub(old.len()) as u64;
        let committed = acc
            .entries
            .into_iter()
            .map(|(args, value)| AnswerEntry { args, value })
            .collect();
        self.tables[t as usize].answers = Rc::new(committed);
        Ok(changed)
    }

    fn tick(&mut self) -> Result<(), EngineError> {
        self.stats.steps += 1;
        if let Some(limit) = self.config.step_limit {
            if self.stats.steps > limit {
                return Err(EngineError::StepLimit(limit));
            }
        }
        if self.stats.steps & 0x3ff == 0 {
            if let Some(timeout) = self.config.timeout {
                if self.started.elapsed() > timeout {
                    return Err(EngineError::Timeout(timeout));
                }
            }
        }
        Ok(())
    }

    fn exec(
        &mut self,
        t: TableId,
        ci: u32,
        cl: &Compiled,
        pc: usize,
        fr: &mut Frame<A::Value>,
        acc: &mut Accum<A::Value>,
    ) -> Result<(), EngineError> {
        let mark = fr.trail.len();
        let r = self.exec_inner(t, ci, cl, pc, fr, acc);
        fr.undo(mark);
        r
    }

    fn exec_inner(
        &mut self,
        t: TableId,
        ci: u32,
        cl: &Compiled,
        mut pc: usize,
        fr: &mut Frame<A::Value>,
        acc: &mut Accum<A::Value>,
    ) -> Result<(), EngineError> {
        while pc < cl.steps.len() {
            self.tick()?;
            match &cl.steps[pc] {
                CStep::One(out) => fr.values[*out as usize] = Some(self.alg.one()),
                CStep::And { left, right, out } => {
                    let l = fr.values[*left as usize].as_ref().expect("slot written");
                    let r = fr.values[*right as usize].as_ref().expect("slot written");
                    let v = self.alg.and(l, r)?;
                    fr.values[*out as usize] = Some(v);
                }
                CStep::Unify(l, r) => {
                    if !self.unify(fr, *l, *r) {
                        return Ok(());
                    }
                }
                CStep::NotUnify(l, r) => {
                    let m = fr.trail.len();
                    let unifiable = self.unify(fr, *l, *r);
                    fr.undo(m);
                    if unifiable {
                        return Ok(());
                    }
                }
                CStep::GetVar { out } => {
                    let key = self.grounding(cl, fr)?;
                    let probs = &cl.probs;
                    let alg = &mut self.alg;
                    let var = self
                        .vars
                        .lookup_or_create(cl.rule, key, || alg.add_var(probs))?;
                    self.stats.random_vars = self.vars.len() as u64;
                    fr.mvars[*out as usize] = Some(var);
                }
                CStep::Equality { var, head, out } => {
                    let var = var.and_then(|slot| fr.mvars[slot as usize]);
                    let grounding = if self.alg.needs_grounding() {
                        let key = self.grounding(cl, fr)?;
                        let (idx, _) = self.groundings.insert_full(key);
                        Some(GroundingId(idx as u32))
                    } else {
                        None
                    };
                    let site = EqualitySite {
                        rule: cl.rule,
                        head: *head,
                        probs: &cl.probs,
                        var,
                        grounding,
                    };
                    let v = self.alg.equality(&site)?;
                    fr.values[*out as usize] = Some(v);
                }
                CStep::CallNeg { pred, args, out } => {
                    let mut map = Vec::new();
                    let call: Rc<[TermId]> =
                        args.iter().map(|a| self.canon(fr, *a, &mut map)).collect();
                    let u = self.table(*pred, Rc::clone(&call), map.len() as u32);
                    if !map.is_empty() {
                        return Err(EngineError::NonGroundNegation(self.describe(u)));
                    }
                    if self.is_new(u) {
                        self.eval(u)?;
                    }
                    if self.tables[u as usize].status != Status::Complete {
                        self.note_incomplete(t, u);
                        return Err(EngineError::NotStratified(self.describe(u)));
                    }
                    let answers = Rc::clone(&self.tables[u as usize].answers);
                    let v = match answers.first() {
                        Some(a) => self.alg.not(&a.value)?,
                        None => self.alg.one(),
                    };
                    fr.values[*out as usize] = Some(v);
                }
                CStep::CallPos { pred, args, out } => {
                    let mut map = Vec::new();
                    let call: Rc<[TermId]> =
                        args.iter().map(|a| self.canon(fr, *a, &mut map)).collect();
                    let u = self.table(*pred, call, map.len() as u32);
                    if self.is_new(u) {
                        self.eval(u)?;
                    }
                    if self.tables[u as usize].status != Status::Complete {
                        self.note_incomplete(t, u);
                    }
                    let answers = Rc::clone(&self.tables[u as usize].answers);
                    for (i, a) in answers.iter().enumerate() {
                        let m = fr.trail.len();
                        let mut ok = true;
                        for (x, y) in args.iter().zip(a.args.iter()) {
                            if !self.unify(fr, *x, *y) {
                                ok = false;
                                break;
                            }
                        }
                        if ok {
                            fr.values[*out as usize] = Some(a.value.clone());
                            fr.combo.push((u, i as u32));
                            let r = self.exec(t, ci, cl, pc + 1, fr, acc);
                            fr.combo.pop();
                            r?;
                        }
                        fr.undo(m);
                    }
                    return Ok(());
                }
            }
            pc += 1;
        }
        self.emit(t, ci, cl, fr, acc)
    }

    fn note_incomplete(&mut self, t: TableId, u: TableId) {
        let (u_low, u_index) = {
            let table = &self.tables[u as usize];
            (table.low, table.index)
        };
        let on_stack_low = u_low.min(u_index);
        let table = &mut self.tables[t as usize];
        table.low = table.low.min(on_stack_low);
        table.consumed_incomplete = true;
    }

    fn emit(
        &mut self,
        t: TableId,
        ci: u32,
        cl: &Compiled,
        fr: &mut Frame<A::Value>,
        acc: &mut Accum<A::Value>,
    ) -> Result<(), EngineError> {
        let args = Rc::clone(&self.tables[t as usize].args);
        let mut map = Vec::new();
        let tuple: Rc<[TermId]> = args.iter().map(|a| self.canon(fr, *a, &mut map)).collect();
        if !map.is_empty() {
            let (name, _) = &self.preds[self.tables[t as usize].pred as usize];
            let atom = Atom {
                predicate: Arc::clone(name),
                args: tuple.iter().map(|a| self.store.to_ast(*a)).collect(),
            };
            return Err(EngineError::NonGroundAnswer(atom.to_string()));
        }
        if !acc.log.insert((ci, fr.combo.clone())) {
            return Err(EngineError::DuplicateContribution(self.describe(t)));
        }
        let delta = fr.values[cl.result as usize].clone().expect("result slot written");
        let joined = match acc.entries.get(&tuple) {
            Some(old) => self.alg.or(old, &delta)?,
            None => {
                let zero = self.alg.zero();
                self.alg.or(&zero, &delta)?
            }
        };
        acc.entries.insert(tuple, joined);
        Ok(())
    }

    /// Ground values of the clause variables, in order.
    fn grounding(&mut self, cl: &Compiled, fr: &Frame<A::Value>) -> Result<Box<[TermId]>, EngineError> {
        let mut map = Vec::new();
        let mut key = Vec::with_capacity(cl.nvars as usize);
        for i in 0..cl.nvars {
            let v = self.store.intern(Node::ClauseVar(i));
            key.push(self.canon(fr, v, &mut map));
        }
        if !map.is_empty() {
            let shown: Vec<String> = key.iter().map(|k| self.store.to_ast(*k).to_string()).collect();
            return Err(EngineError::NonGroundKey {
                rule: cl.rule,
                key: shown.join(","),
            });
        }
        Ok(key.into_boxed_slice())
    }

    fn deref(&self, fr: &Frame<A::Value>, mut t: TermId) -> Deref {
        loop {
            let cell = match self.store.node(t) {
                Node::ClauseVar(i) => fr.base + i,
                Node::GoalVar(j) => *j,
                _ => return Deref::Bound(t),
            };
            match fr.cells[cell as usize] {
                Some(next) => t = next,
                None => return Deref::Unbound(cell),
            }
        }
    }

    fn cell_term(&mut self, fr: &Frame<A::Value>, cell: u32) -> TermId {
        if cell < fr.base {
            self.store.intern(Node::GoalVar(cell))
        } else {
            self.store.intern(Node::ClauseVar(cell - fr.base))
        }
    }

    /// Fully dereferenced copy of `t`; unbound cells become goal variables
    /// numbered by first occurrence, as recorded in `map`.
    fn canon(&mut self, fr: &Frame<A::Value>, t: TermId, map: &mut Vec<u32>) -> TermId {
        if self.store.is_ground(t) {
            return t;
        }
        match self.deref(fr, t) {
            Deref::Unbound(cell) => {
                let k = match map.iter().position(|c| *c == cell) {
                    Some(k) => k,
                    None => {
                        map.push(cell);
                        map.len() - 1
                    }
                };
                self.store.intern(Node::GoalVar(k as u32))
            }
            Deref::Bound(b) => {
                if self.store.is_ground(b) {
                    return b;
                }
                let Node::Struct(f, args) = self.store.node(b).clone() else {
                    unreachable!("non-ground non-variable is a structure")
                };
                let args: Box<[TermId]> = args.iter().map(|a| self.canon(fr, *a, map)).collect();
                self.store.intern(Node::Struct(f, args))
            }
        }
    }

    fn occurs(&self, fr: &Frame<A::Value>, cell: u32, t: TermId) -> bool {
        let mut stack = vec![t];
        while let Some(t) = stack.pop() {
            if self.store.is_ground(t) {
                continue;
            }
            match self.deref(fr, t) {
                Deref::Unbound(c) => {
                    if c == cell {
                        return true;
                    }
                }
                Deref::Bound(b) => {
                    if let Node::Struct(_, args) = self.store.node(b) {
                        stack.extend(args.iter().copied());
                    }
                }
            }
        }
        false
    }

    fn bind(fr: &mut Frame<A::Value>, cell: u32, t: TermId) {
        fr.cells[cell as usize] = Some(t);
        fr.trail.push(cell);
    }

    /// Unification with occurs check. Bindings are trailed; the caller
    /// undoes them on failure.
    fn unify(&mut self, fr: &mut Frame<A::Value>, a: TermId, b: TermId) -> bool {
        let mut work = vec![(a, b)];
        while let Some((a, b)) = work.pop() {
            if a == b && self.store.is_ground(a) {
                continue;
            }
            match (self.deref(fr, a), self.deref(fr, b)) {
                (Deref::Unbound(x), Deref::Unbound(y)) => {
                    if x != y {
                        let ty = self.cell_term(fr, y);
                        Self::bind(fr, x, ty);
                    }
                }
                (Deref::Unbound(x), Deref::Bound(t)) | (Deref::Bound(t), Deref::Unbound(x)) => {
                    if !self.store.is_ground(t) && self.occurs(fr, x, t) {
                        return false;
                    }
                    Self::bind(fr, x, t);
                }
                (Deref::Bound(x), Deref::Bound(y)) => {
                    if x == y {
                        // identical ids; only variables inside can differ,
                        // and those are the same cells
                        continue;
                    }
                    if self.store.is_ground(x) && self.store.is_ground(y) {
                        return false;
                    }
                    match (self.store.node(x), self.store.node(y)) {
                        (Node::Struct(f, xs), Node::Struct(g, ys)) if f == g && xs.len() == ys.len() => {
                            work.extend(xs.iter().copied().zip(ys.iter().copied()));
                        }
                        _ => return false,
                    }
                }
            }
        }
        true
    }
}
