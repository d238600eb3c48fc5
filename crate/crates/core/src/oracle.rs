//! Reference semantics by brute force. A program is grounded goal-first
//! into its relevant ground instances, then every world is enumerated and
//! its model computed. Slow and simple on purpose: this is what the engine
//! is tested against.

use std::collections::{HashMap, HashSet};
use std::fmt;

use indexmap::{IndexMap, IndexSet};
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use thiserror::Error;

use crate::ast::{
    apply_subst, apply_subst_atom, unify, unify_args, AnnotatedClause, Atom, AtomicChoice,
    CompositeChoice, Literal, Program, RuleId, Selection, Subst, Term, Var,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("unsafe clause {rule}: variable {var} is unbound when {at}")]
    Unsafe { rule: RuleId, var: String, at: &'static str },
    #[error("{instances} probabilistic ground clauses give {worlds} worlds, over the limit")]
    TooManyWorlds { instances: usize, worlds: String },
    #[error("grounding exceeded {0} tables, answers and instances")]
    TooLarge(usize),
    #[error("negation through recursion at {0}")]
    NotStratified(String),
    #[error("query {0} is not ground")]
    NonGroundQuery(String),
    #[error("explanations need a positive program; {0} is negated")]
    Negation(String),
    #[error("derivations of {0} are cyclic")]
    Cyclic(String),
    #[error("more than {0} derivations")]
    TooManyDerivations(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct OracleLimits {
    pub max_instances: usize,
    pub max_worlds: u64,
    pub max_groundings: usize,
    pub max_derivations: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_instances: 20,
            max_worlds: 1 << 22,
            max_groundings: 200_000,
            max_derivations: 10_000,
        }
    }
}

/// One ground instance of a clause. Atom fields index into
/// [`GroundProgram::atoms`].
#[derive(Debug, Clone)]
pub struct GroundInstance {
    pub rule: RuleId,
    pub grounding: Vec<Term>,
    pub heads: Vec<usize>,
    pub pos: Vec<usize>,
    pub neg: Vec<usize>,
    /// Head probabilities, implicit null last. Empty for deterministic
    /// clauses.
    pub probs: Vec<f64>,
}

impl GroundInstance {
    pub fn is_probabilistic(&self) -> bool {
        !self.probs.is_empty()
    }
}

/// The relevant grounding of a program with respect to some calls.
#[derive(Debug, Clone)]
pub struct GroundProgram {
    atoms: IndexSet<Atom>,
    instances: Vec<GroundInstance>,
    scc: Vec<usize>,
    /// Per atom, the instances having it as a head, with the head position.
    defs: Vec<Vec<(usize, usize)>>,
    /// Answers per call, keyed by the call's variant form.
    calls: IndexMap<Atom, IndexSet<Atom>>,
}

/// Worlds of a ground program: every total selection with its probability.
pub struct Worlds<'a> {
    program: &'a GroundProgram,
    prob: Vec<usize>,
    counter: Vec<usize>,
    done: bool,
}

impl Iterator for Worlds<'_> {
    type Item = (Selection, f64);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut sel = CompositeChoice::new();
        let mut p = 1.0;
        for (k, &i) in self.prob.iter().enumerate() {
            let inst = &self.program.instances[i];
            let value = self.counter[k];
            p *= inst.probs[value];
            sel.insert(AtomicChoice {
                rule: inst.rule,
                grounding: inst.grounding.clone(),
                head: value + 1,
            })
            .expect("one choice per instance");
        }
        self.done = !advance(&mut self.counter, |k| {
            self.program.instances[self.prob[k]].probs.len()
        });
        Some((sel, p))
    }
}

/// Mixed-radix increment; false once every digit has wrapped.
fn advance(counter: &mut [usize], radix: impl Fn(usize) -> usize) -> bool {
    for k in 0..counter.len() {
        counter[k] += 1;
        if counter[k] < radix(k) {
            return true;
        }
        counter[k] = 0;
    }
    false
}

/// Renames variables to `Var(0..)` in order of first occurrence.
fn variant(a: &Atom) -> Atom {
    let mut vars = Vec::new();
    a.collect_vars(&mut vars);
    let mut seen = Vec::new();
    for v in vars {
        if !seen.contains(&v) {
            seen.push(v);
        }
    }
    let s = Subst::from_pairs(
        seen.into_iter()
            .enumerate()
            .map(|(i, v)| (v, Term::var(i as u32))),
    );
    apply_subst_atom(a, &s)
}

fn offset_subst(n: usize, base: u32) -> Subst {
    Subst::from_pairs((0..n as u32).map(|i| (Var(i), Term::var(base + i))))
}

/// `s` extended by the idempotent unifier `sigma` of terms already under `s`.
fn compose(s: &Subst, sigma: &Subst) -> Subst {
    let mut out = Subst::from_pairs(s.iter().map(|(v, t)| (*v, apply_subst(t, sigma))));
    for (v, t) in sigma.iter() {
        out.insert(*v, t.clone());
    }
    out
}

fn max_var(a: &Atom) -> u32 {
    let mut vars = Vec::new();
    a.collect_vars(&mut vars);
    vars.iter().map(|v| v.0 + 1).max().unwrap_or(0)
}

struct Grounder<'p> {
    program: &'p Program,
    limit: usize,
    tables: IndexMap<Atom, IndexSet<Atom>>,
    instances: IndexMap<(RuleId, Vec<Term>), GroundInstanceRaw>,
    changed: bool,
}

struct GroundInstanceRaw {
    heads: Vec<Atom>,
    pos: Vec<Atom>,
    neg: Vec<Atom>,
}

impl Grounder<'_> {
    fn size(&self) -> usize {
        self.tables.len() + self.instances.len() + self.tables.values().map(IndexSet::len).sum::<usize>()
    }

    fn table(&mut self, call: &Atom) -> Result<Vec<Atom>, OracleError> {
        let key = variant(call);
        if let Some(answers) = self.tables.get(&key) {
            return Ok(answers.iter().cloned().collect());
        }
        if self.size() >= self.limit {
            return Err(OracleError::TooLarge(self.limit));
        }
        self.tables.insert(key, IndexSet::new());
        self.changed = true;
        Ok(Vec::new())
    }

    fn resolve(&mut self, call: &Atom) -> Result<(), OracleError> {
        let base = max_var(call);
        for clause in self.program.clauses() {
            let rename = offset_subst(clause.var_names.len(), base);
            for head in &clause.heads {
                if head.atom.predicate != call.predicate || head.atom.arity() != call.arity() {
                    continue;
                }
                let h = apply_subst_atom(&head.atom, &rename);
                if let Some(s) = unify_args(&h.args, &call.args) {
                    self.body(clause, &rename, call, 0, s)?;
                }
            }
        }
        Ok(())
    }

    fn unbound(clause: &AnnotatedClause, rename: &Subst, s: &Subst, at: &'static str) -> OracleError {
        let var = clause
            .vars()
            .into_iter()
            .find(|v| !apply_subst(&apply_subst(&Term::Var(*v), rename), s).is_ground())
            .map(|v| clause.var_names[v.0 as usize].clone())
            .unwrap_or_default();
        OracleError::Unsafe {
            rule: clause.id,
            var,
            at,
        }
    }

    fn body(
        &mut self,
        clause: &AnnotatedClause,
        rename: &Subst,
        call: &Atom,
        i: usize,
        s: Subst,
    ) -> Result<(), OracleError> {
        let Some(lit) = clause.body.get(i) else {
            return self.finish(clause, rename, call, &s);
        };
        let under = |t: &Term| apply_subst(&apply_subst(t, rename), &s);
        match lit {
            Literal::Pos(a) => {
                let goal = Atom {
                    predicate: a.predicate.clone(),
                    args: a.args.iter().map(under).collect(),
                };
                for ans in self.table(&goal)? {
                    if let Some(sigma) = unify_args(&goal.args, &ans.args) {
                        self.body(clause, rename, call, i + 1, compose(&s, &sigma))?;
                    }
                }
                Ok(())
            }
            Literal::Neg(a) => {
                let goal = Atom {
                    predicate: a.predicate.clone(),
                    args: a.args.iter().map(under).collect(),
                };
                if !goal.is_ground() {
                    return Err(Self::unbound(clause, rename, &s, "negating"));
                }
                self.table(&goal)?;
                self.body(clause, rename, call, i + 1, s)
            }
            Literal::Unify(l, r) => match unify(&under(l), &under(r)) {
                Some(sigma) => self.body(clause, rename, call, i + 1, compose(&s, &sigma)),
                None => Ok(()),
            },
            Literal::NotUnify(l, r) => match unify(&under(l), &under(r)) {
                Some(_) => Ok(()),
                None => self.body(clause, rename, call, i + 1, s),
            },
        }
    }

    fn finish(
        &mut self,
        clause: &AnnotatedClause,
        rename: &Subst,
        call: &Atom,
        s: &Subst,
    ) -> Result<(), OracleError> {
        let grounding: Vec<Term> = clause
            .vars()
            .into_iter()
            .map(|v| apply_subst(&apply_subst(&Term::Var(v), rename), s))
            .collect();
        if grounding.iter().any(|t| !t.is_ground()) {
            return Err(Self::unbound(clause, rename, s, "grounding the clause"));
        }
        let full = Subst::from_pairs(clause.vars().into_iter().zip(grounding.iter().cloned()));
        let answer = apply_subst_atom(call, s);
        debug_assert!(answer.is_ground());
        let key = (clause.id, grounding);
        if !self.instances.contains_key(&key) {
            if self.size() >= self.limit {
                return Err(OracleError::TooLarge(self.limit));
            }
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for lit in &clause.body {
                match lit {
                    Literal::Pos(a) => pos.push(apply_subst_atom(a, &full)),
                    Literal::Neg(a) => neg.push(apply_subst_atom(a, &full)),
                    Literal::Unify(..) | Literal::NotUnify(..) => {}
                }
            }
            let heads = clause.heads.iter().map(|h| apply_subst_atom(&h.atom, &full)).collect();
            self.instances.insert(key, GroundInstanceRaw { heads, pos, neg });
            self.changed = true;
        }
        let entry = self.tables.get_mut(&variant(call)).expect("caller is tabled");
        if entry.insert(answer) {
            self.changed = true;
        }
        Ok(())
    }
}

/// Grounds the part of `program` relevant to `seeds`.
pub fn ground(program: &Program, seeds: &[Atom], limits: &OracleLimits) -> Result<GroundProgram, OracleError> {
    let mut g = Grounder {
        program,
        limit: limits.max_groundings,
        tables: IndexMap::new(),
        instances: IndexMap::new(),
        changed: true,
    };
    for s in seeds {
        g.table(s)?;
    }
    while g.changed {
        g.changed = false;
        let mut t = 0;
        while t < g.tables.len() {
            let call = g.tables.get_index(t).expect("in range").0.clone();
            g.resolve(&call)?;
            t += 1;
        }
    }

    let mut atoms: IndexSet<Atom> = IndexSet::new();
    let mut instances = Vec::with_capacity(g.instances.len());
    for ((rule, grounding), raw) in g.instances {
        let mut idx = |a: Atom| atoms.insert_full(a).0;
        let heads = raw.heads.into_iter().map(&mut idx).collect();
        let pos = raw.pos.into_iter().map(&mut idx).collect();
        let neg = raw.neg.into_iter().map(&mut idx).collect();
        let clause = program.clause(rule).expect("instance of a program clause");
        let probs = if clause.is_deterministic() {
            Vec::new()
        } else {
            clause.probabilities()
        };
        instances.push(GroundInstance {
            rule,
            grounding,
            heads,
            pos,
            neg,
            probs,
        });
    }
    for answers in g.tables.values() {
        for a in answers {
            atoms.insert(a.clone());
        }
    }

    let mut defs = vec![Vec::new(); atoms.len()];
    let mut graph: DiGraph<(), bool> = DiGraph::new();
    let nodes: Vec<NodeIndex> = (0..atoms.len()).map(|_| graph.add_node(())).collect();
    for (i, inst) in instances.iter().enumerate() {
        for (j, &h) in inst.heads.iter().enumerate() {
            defs[h].push((i, j));
            for &b in &inst.pos {
                graph.add_edge(nodes[h], nodes[b], true);
            }
            for &b in &inst.neg {
                graph.add_edge(nodes[h], nodes[b], false);
            }
        }
    }
    // dependencies come first in tarjan's order when edges point from head to body
    let mut scc = vec![0; atoms.len()];
    for (k, comp) in tarjan_scc(&graph).into_iter().enumerate() {
        for n in comp {
            scc[n.index()] = k;
        }
    }
    for e in graph.edge_indices() {
        let (h, b) = graph.edge_endpoints(e).expect("edge exists");
        if !graph[e] && scc[h.index()] == scc[b.index()] {
            return Err(OracleError::NotStratified(atoms[h.index()].to_string()));
        }
    }

    Ok(GroundProgram {
        atoms,
        instances,
        scc,
        defs,
        calls: g.tables,
    })
}

/// The most general call of every predicate defined in the program.
fn general_calls(program: &Program) -> Vec<Atom> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for c in program.clauses() {
        for h in &c.heads {
            if seen.insert((h.atom.predicate.clone(), h.atom.arity())) {
                let args = (0..h.atom.arity() as u32).map(Term::var).collect();
                out.push(Atom {
                    predicate: h.atom.predicate.clone(),
                    args,
                });
            }
        }
    }
    out
}

impl GroundProgram {
    pub fn atoms(&self) -> &IndexSet<Atom> {
        &self.atoms
    }

    pub fn instances(&self) -> &[GroundInstance] {
        &self.instances
    }

    /// Ground atoms derivable in some world that match `goal`, in the order
    /// they were found.
    pub fn answers(&self, goal: &Atom) -> Vec<Atom> {
        match self.calls.get(&variant(goal)) {
            Some(found) => found.iter().cloned().collect(),
            None => Vec::new(),
        }
    }

    /// Probabilistic instances, in grounding order.
    fn probabilistic(&self) -> Vec<usize> {
        (0..self.instances.len()).filter(|&i| self.instances[i].is_probabilistic()).collect()
    }

    fn check_size(&self, prob: &[usize], limits: &OracleLimits) -> Result<(), OracleError> {
        let worlds = prob
            .iter()
            .try_fold(1u64, |acc, &i| acc.checked_mul(self.instances[i].probs.len() as u64));
        match worlds {
            Some(w) if prob.len() <= limits.max_instances && w <= limits.max_worlds => Ok(()),
            w => Err(OracleError::TooManyWorlds {
                instances: prob.len(),
                worlds: w.map_or_else(|| "too many".to_string(), |w| w.to_string()),
            }),
        }
    }

    pub fn worlds(&self, limits: &OracleLimits) -> Result<Worlds<'_>, OracleError> {
        let prob = self.probabilistic();
        self.check_size(&prob, limits)?;
        let counter = vec![0; prob.len()];
        Ok(Worlds {
            program: self,
            prob,
            counter,
            done: false,
        })
    }

    /// Atoms `q` depends on, positively or negatively.
    fn support(&self, q: usize) -> Vec<bool> {
        let mut seen = vec![false; self.atoms.len()];
        let mut stack = vec![q];
        seen[q] = true;
        while let Some(a) = stack.pop() {
            for &(i, _) in &self.defs[a] {
                let inst = &self.instances[i];
                for &b in inst.pos.iter().chain(&inst.neg) {
                    if !seen[b] {
                        seen[b] = true;
                        stack.push(b);
                    }
                }
            }
        }
        seen
    }

    /// Sum of the probabilities of the worlds whose model contains `q`.
    pub fn query_prob(&self, q: &Atom, limits: &OracleLimits) -> Result<f64, OracleError> {
        if !q.is_ground() {
            return Err(OracleError::NonGroundQuery(q.to_string()));
        }
        let Some(qi) = self.atoms.get_index_of(q) else {
            return Ok(0.0);
        };
        let relevant = self.support(qi);

        // ground rules per stratum; a rule fires in a world only if its
        // instance chose this head there
        struct Rule<'a> {
            head: usize,
            pos: &'a [usize],
            neg: &'a [usize],
            when: Option<(usize, usize)>,
        }
        let mut prob_index: HashMap<usize, usize> = HashMap::new();
        let mut prob = Vec::new();
        let mut strata: IndexMap<usize, Vec<Rule<'_>>> = IndexMap::new();
        for (i, inst) in self.instances.iter().enumerate() {
            for (j, &h) in inst.heads.iter().enumerate() {
                if !relevant[h] {
                    continue;
                }
                let when = if inst.is_probabilistic() {
                    let k = *prob_index.entry(i).or_insert_with(|| {
                        prob.push(i);
                        prob.len() - 1
                    });
                    Some((k, j))
                } else {
                    None
                };
                strata.entry(self.scc[h]).or_default().push(Rule {
                    head: h,
                    pos: &inst.pos,
                    neg: &inst.neg,
                    when,
                });
            }
        }
        self.check_size(&prob, limits)?;
        strata.sort_keys();

        let mut counter = vec![0usize; prob.len()];
        let mut truth = vec![false; self.atoms.len()];
        let mut total = Neumaier::default();
        loop {
            truth.iter_mut().for_each(|t| *t = false);
            for rules in strata.values() {
                let mut changed = true;
                while changed {
                    changed = false;
                    for r in rules {
                        if truth[r.head] || r.when.is_some_and(|(k, j)| counter[k] != j) {
                            continue;
                        }
                        if r.pos.iter().all(|&b| truth[b]) && r.neg.iter().all(|&b| !truth[b]) {
                            truth[r.head] = true;
                            changed = true;
                        }
                    }
                }
            }
            if truth[qi] {
                let p: f64 = prob
                    .iter()
                    .zip(&counter)
                    .map(|(&i, &v)| self.instances[i].probs[v])
                    .product();
                total.add(p);
            }
            if !advance(&mut counter, |k| self.instances[prob[k]].probs.len()) {
                break;
            }
        }
        Ok(total.sum())
    }

    /// Every derivation of `q`, each as the list of atomic choices it uses
    /// (with repeats, in proof order). Positive, acyclic programs only.
    pub fn derivations(&self, q: &Atom, limits: &OracleLimits) -> Result<Vec<Vec<AtomicChoice>>, OracleError> {
        let Some(qi) = self.atoms.get_index_of(q) else {
            return Ok(Vec::new());
        };
        let mut memo: HashMap<usize, Vec<Vec<(usize, usize)>>> = HashMap::new();
        let mut on_path = vec![false; self.atoms.len()];
        let raw = self.derive(qi, &mut memo, &mut on_path, limits.max_derivations)?;
        Ok(raw
            .into_iter()
            .map(|d| {
                d.into_iter()
                    .map(|(i, j)| AtomicChoice {
                        rule: self.instances[i].rule,
                        grounding: self.instances[i].grounding.clone(),
                        head: j + 1,
                    })
                    .collect()
            })
            .collect())
    }

    fn derive(
        &self,
        a: usize,
        memo: &mut HashMap<usize, Vec<Vec<(usize, usize)>>>,
        on_path: &mut [bool],
        limit: usize,
    ) -> Result<Vec<Vec<(usize, usize)>>, OracleError> {
        if let Some(d) = memo.get(&a) {
            return Ok(d.clone());
        }
        if on_path[a] {
            return Err(OracleError::Cyclic(self.atoms[a].to_string()));
        }
        on_path[a] = true;
        let mut out = Vec::new();
        for &(i, j) in &self.defs[a] {
            let inst = &self.instances[i];
            if let Some(&n) = inst.neg.first() {
                return Err(OracleError::Negation(self.atoms[n].to_string()));
            }
            let mut partial: Vec<Vec<(usize, usize)>> = if inst.is_probabilistic() {
                vec![vec![(i, j)]]
            } else {
                vec![Vec::new()]
            };
            for &b in &inst.pos {
                let sub = self.derive(b, memo, on_path, limit)?;
                let mut next = Vec::new();
                for p in &partial {
                    for s in &sub {
                        if next.len() >= limit {
                            return Err(OracleError::TooManyDerivations(limit));
                        }
                        let mut d = p.clone();
                        d.extend_from_slice(s);
                        next.push(d);
                    }
                }
                partial = next;
            }
            out.extend(partial);
            if out.len() > limit {
                return Err(OracleError::TooManyDerivations(limit));
            }
        }
        on_path[a] = false;
        memo.insert(a, out.clone());
        Ok(out)
    }
}

/// The most probable consistent explanation of a query.
#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub probability: f64,
    pub choices: CompositeChoice,
}

impl fmt::Display for Explanation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.choices.iter().map(|c| c.to_string()).collect();
        write!(f, "[{}] {}", items.join(","), self.probability)
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn sum(&self) -> f64 {
        self.sum + self.comp
    }
}

/// All worlds of a program whose relevant grounding is finite.
pub fn enumerate_worlds(program: &Program, limits: &OracleLimits) -> Result<Vec<(Selection, f64)>, OracleError> {
    let g = ground(program, &general_calls(program), limits)?;
    Ok(g.worlds(limits)?.collect())
}

pub fn oracle_query_prob(program: &Program, q: &Atom) -> Result<f64, OracleError> {
    let limits = OracleLimits::default();
    ground(program, std::slice::from_ref(q), &limits)?.query_prob(q, &limits)
}

/// Probability of every ground instance of `goal` that is true in some world.
pub fn oracle_answers(program: &Program, goal: &Atom, limits: &OracleLimits) -> Result<Vec<(Atom, f64)>, OracleError> {
    let g = ground(program, std::slice::from_ref(goal), limits)?;
    g.answers(goal)
        .into_iter()
        .map(|a| {
            let p = g.query_prob(&a, limits)?;
            Ok((a, p))
        })
        .collect()
}

/// Best explanation over the consistent derivations of `q`; `None` when
/// every derivation is inconsistent or there is none.
pub fn oracle_best_explanation(program: &Program, q: &Atom) -> Result<Option<Explanation>, OracleError> {
    let limits = OracleLimits::default();
    let g = ground(program, std::slice::from_ref(q), &limits)?;
    let mut best: Option<Explanation> = None;
    for d in g.derivations(q, &limits)? {
        let mut set = CompositeChoice::new();
        if d.into_iter().try_for_each(|c| set.insert(c)).is_err() {
            continue;
        }
        let p = set.probability(program).expect("choices come from the program");
        if best.as_ref().is_none_or(|b| p > b.probability) {
            best = Some(Explanation {
                probability: p,
                choices: set,
            });
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_program, parse_query, ParseMode};

    fn prog(text: &str) -> Program {
        parse_program(text, ParseMode::Lpad).unwrap()
    }

    fn prob(text: &str, q: &str) -> f64 {
        oracle_query_prob(&prog(text), &parse_query(q).unwrap()).unwrap()
    }

    const MARKOV: &str = "s(0,1):1/3 ; s(0,2):1/3 ; s(0,3):1/3.\n\
        s(1,1):1/3 ; s(1,2):1/3 ; s(1,3):1/3 :- s(0,1).\n\
        s(1,1):0.2 ; s(1,2):0.2 ; s(1,3):0.6 :- s(0,2).\n";

    #[test]
    fn markov_worlds() {
        let worlds = enumerate_worlds(&prog(MARKOV), &OracleLimits::default()).unwrap();
        assert_eq!(worlds.len(), 27);
        let total: f64 = worlds.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!((prob(MARKOV, "s(1,1)") - 8.0 / 45.0).abs() < 1e-12);
    }

    #[test]
    fn small_worlds() {
        let w = enumerate_worlds(&prog("a:0.3."), &OracleLimits::default()).unwrap();
        let ps: Vec<f64> = w.iter().map(|(_, p)| *p).collect();
        assert_eq!(ps.len(), 2);
        assert!((ps[0] - 0.3).abs() < 1e-15 && (ps[1] - 0.7).abs() < 1e-15);
        let w = enumerate_worlds(&prog("a. b :- a."), &OracleLimits::default()).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].1, 1.0);
    }

    #[test]
    fn query_probabilities() {
        assert!((prob("q :- a. q :- b. a:0.2. b:0.4.", "q") - 0.52).abs() < 1e-12);
        assert_eq!(prob("p :- a, b. a:0.3 ; b:0.4.", "p"), 0.0);
        assert!((prob("q :- a, b. a :- c. b :- c. c:0.2.", "q") - 0.2).abs() < 1e-12);
        assert!((prob("q :- \\+ a. a:0.2.", "q") - 0.8).abs() < 1e-12);
        assert_eq!(prob("q :- \\+ b.", "q"), 1.0);
        assert_eq!(prob("a:0.5.", "zzz"), 0.0);
    }

    #[test]
    fn rejects_bad_programs() {
        let p = prog("p :- \\+ p.");
        let q = parse_query("p").unwrap();
        assert!(matches!(oracle_query_prob(&p, &q), Err(OracleError::NotStratified(_))));
        let p = prog("p(X) :- \\+ q(X). q(a).");
        let q = parse_query("p(a)").unwrap();
        assert!(oracle_query_prob(&p, &q).is_ok());
        let q = parse_query("p(X)").unwrap();
        assert!(matches!(
            ground(&p, &[q], &OracleLimits::default()),
            Err(OracleError::Unsafe { .. })
        ));
        let text: String = (0..21).map(|i| format!("a{i}:0.5.\nq :- a{i}.\n")).collect();
        let q = parse_query("q").unwrap();
        assert!(matches!(
            oracle_query_prob(&prog(&text), &q),
            Err(OracleError::TooManyWorlds { .. })
        ));
    }

    #[test]
    fn recursion_through_lists() {
        let text = "hmm(O) :- hmm(q1, O).\n\
            hmm(end, []).\n\
            hmm(Q, [L|O]) :- Q \\= end, next(Q, Q1, [L|O]), emit(Q, L, [L|O]), hmm(Q1, O).\n\
            next(Q, q1, S):1/3 ; next(Q, q2, S):1/3 ; next(Q, end, S):1/3.\n\
            emit(Q, a, S):1/4 ; emit(Q, c, S):1/4 ; emit(Q, g, S):1/4 ; emit(Q, t, S):1/4.\n";
        for (seq, n) in [("[a]", 1), ("[a,c]", 2), ("[a,c,g]", 3)] {
            let p = prob(text, &format!("hmm({seq})"));
            let expected = 2f64.powi(n - 1) / 12f64.powi(n);
            assert!((p - expected).abs() <= 1e-9 * expected, "{seq}: {p}");
        }
    }

    #[test]
    fn cyclic_paths_ground_finitely() {
        let text = "path(X,Y) :- edge(X,Y). path(X,Y) :- edge(X,Z), path(Z,Y).\n\
            edge(a,b):0.5. edge(b,a):0.5. edge(b,c):0.5.";
        let p = prob(text, "path(a,c)");
        assert!((p - 0.25).abs() < 1e-12);
        let answers = oracle_answers(&prog(text), &parse_query("path(a,X)").unwrap(), &OracleLimits::default()).unwrap();
        assert_eq!(answers.len(), 3);
    }

    #[test]
    fn best_explanations() {
        let p = prog("q :- a. q :- b, c. a:0.3. b:0.8. c:0.5.");
        let e = oracle_best_explanation(&p, &parse_query("q").unwrap()).unwrap().unwrap();
        assert!((e.probability - 0.4).abs() < 1e-15);
        assert_eq!(e.choices.len(), 2);
        let p = prog("p :- a, b. a:0.3 ; b:0.4.");
        assert!(oracle_best_explanation(&p, &parse_query("p").unwrap()).unwrap().is_none());
        let p = prog("q :- a, b. a :- c. b :- c. c:0.2.");
        let e = oracle_best_explanation(&p, &parse_query("q").unwrap()).unwrap().unwrap();
        assert!((e.probability - 0.2).abs() < 1e-15);
        let d = ground(&p, &[parse_query("q").unwrap()], &OracleLimits::default())
            .unwrap()
            .derivations(&parse_query("q").unwrap(), &OracleLimits::default())
            .unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].len(), 2);
    }
}
