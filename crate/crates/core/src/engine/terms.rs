//! Hash-consed term store. Structurally equal terms share one id, so
//! variant checks and ground equality are id comparisons.

use std::collections::HashMap;
use std::sync::Arc;

use ordered_float::OrderedFloat;

use crate::ast::{Term, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sym(u32);

/// A stored term. Variables are frame-relative: `ClauseVar(i)` is the
/// `i`-th variable of the running clause, `GoalVar(j)` the `j`-th variable
/// of the subgoal being resolved.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    ClauseVar(u32),
    GoalVar(u32),
    Int(i64),
    Float(u64),
    Struct(Sym, Box<[TermId]>),
}

#[derive(Debug, Default)]
pub struct TermStore {
    nodes: Vec<Node>,
    ground: Vec<bool>,
    index: HashMap<Node, TermId>,
    syms: Vec<Arc<str>>,
    sym_index: HashMap<Arc<str>, Sym>,
}

impl TermStore {
    pub fn new() -> Self {
        TermStore::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn sym(&mut self, name: &Arc<str>) -> Sym {
        if let Some(&s) = self.sym_index.get(name) {
            return s;
        }
        let s = Sym(self.syms.len() as u32);
        self.syms.push(Arc::clone(name));
        self.sym_index.insert(Arc::clone(name), s);
        s
    }

    pub fn sym_name(&self, s: Sym) -> &Arc<str> {
        &self.syms[s.0 as usize]
    }

    pub fn intern(&mut self, node: Node) -> TermId {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        let ground = match &node {
            Node::ClauseVar(_) | Node::GoalVar(_) => false,
            Node::Int(_) | Node::Float(_) => true,
            Node::Struct(_, args) => args.iter().all(|a| self.ground[a.0 as usize]),
        };
        let id = TermId(self.nodes.len() as u32);
        self.nodes.push(node.clone());
        self.ground.push(ground);
        self.index.insert(node, id);
        id
    }

    pub fn node(&self, id: TermId) -> &Node {
        &self.nodes[id.0 as usize]
    }

    pub fn is_ground(&self, id: TermId) -> bool {
        self.ground[id.0 as usize]
    }

    pub fn constant(&mut self, name: &str) -> TermId {
        let s = self.sym(&Arc::from(name));
        self.intern(Node::Struct(s, Box::new([])))
    }

    /// Interns an AST term; variables are mapped through `var`.
    pub fn from_ast(&mut self, t: &Term, var: &mut dyn FnMut(Var) -> Node) -> TermId {
        enum Job<'a> {
            Visit(&'a Term),
            Build(Sym, usize),
        }
        let mut jobs = vec![Job::Visit(t)];
        let mut out: Vec<TermId> = Vec::new();
        while let Some(job) = jobs.pop() {
            match job {
                Job::Visit(Term::Var(v)) => {
                    let n = var(*v);
                    out.push(self.intern(n));
                }
                Job::Visit(Term::Int(i)) => out.push(self.intern(Node::Int(*i))),
                Job::Visit(Term::Float(x)) => out.push(self.intern(Node::Float(x.0.to_bits()))),
                Job::Visit(Term::Compound(f, args)) => {
                    let s = self.sym(f);
                    jobs.push(Job::Build(s, args.len()));
                    jobs.extend(args.iter().rev().map(Job::Visit));
                }
                Job::Build(s, n) => {
                    let args: Box<[TermId]> = out.split_off(out.len() - n).into_boxed_slice();
                    out.push(self.intern(Node::Struct(s, args)));
                }
            }
        }
        out.pop().expect("one term built")
    }

    /// Converts back to an AST term; frame variables become `Var`s with
    /// their frame index.
    pub fn to_ast(&self, id: TermId) -> Term {
        enum Job {
            Visit(TermId),
            Build(Sym, usize),
        }
        let mut jobs = vec![Job::Visit(id)];
        let mut out: Vec<Term> = Vec::new();
        while let Some(job) = jobs.pop() {
            match job {
                Job::Visit(t) => match self.node(t) {
                    Node::ClauseVar(i) | Node::GoalVar(i) => out.push(Term::Var(Var(*i))),
                    Node::Int(i) => out.push(Term::Int(*i)),
                    Node::Float(bits) => out.push(Term::Float(OrderedFloat(f64::from_bits(*bits)))),
                    Node::Struct(s, args) => {
                        jobs.push(Job::Build(*s, args.len()));
                        jobs.extend(args.iter().rev().map(|a| Job::Visit(*a)));
                    }
                },
                Job::Build(s, n) => {
                    let args = out.split_off(out.len() - n);
                    out.push(Term::Compound(Arc::clone(self.sym_name(s)), args));
                }
            }
        }
        out.pop().expect("one term built")
    }
}
