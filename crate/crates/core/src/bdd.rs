//! Reduced ordered binary decision diagrams over independent Boolean
//! variables, with multi-valued variables encoded as chains of Boolean ones.
//!
//! Variables are ordered by creation. There are no complement edges, so two
//! handles denote the same function exactly when they are equal.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use thiserror::Error;

static NEXT_MANAGER: AtomicU64 = AtomicU64::new(1);

/// Probability mass below which the remainder of a distribution is treated
/// as empty.
const TAIL_EPSILON: f64 = 1e-12;
const SUM_EPSILON: f64 = 1e-9;

const ZERO: u32 = 0;
const ONE: u32 = 1;
const TERMINAL_LEVEL: u32 = u32::MAX;

/// Operation caches are dropped once they hold this many entries.
const CACHE_CAP: usize = 1 << 22;
/// Apply steps between deadline checks.
const DEADLINE_STRIDE: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BddError {
    #[error("bad distribution: {0}")]
    BadDistribution(String),
    #[error("unknown multi-valued variable {0}")]
    UnknownVar(u32),
    #[error("value {value} out of range 1..={count}")]
    ValueOutOfRange { value: usize, count: usize },
    #[error("handles belong to different managers")]
    ManagerMismatch,
    #[error("node limit of {0} exceeded")]
    NodeLimit(usize),
    #[error("deadline passed during a diagram operation")]
    Deadline,
}

/// Identifier of a multi-valued random variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MvVar(pub u32);

/// A node of a particular manager.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BddHandle {
    manager: u64,
    node: u32,
}

impl BddHandle {
    pub fn node_index(self) -> u32 {
        self.node
    }

    pub fn is_zero(self) -> bool {
        self.node == ZERO
    }

    pub fn is_one(self) -> bool {
        self.node == ONE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Node {
    level: u32,
    low: u32,
    high: u32,
}

#[derive(Debug, Clone)]
struct MvInfo {
    levels: Vec<u32>,
    probs: Vec<f64>,
}

#[derive(Debug)]
pub struct BddManager {
    id: u64,
    nodes: Vec<Node>,
    unique: HashMap<Node, u32>,
    and_cache: HashMap<(u32, u32), u32>,
    or_cache: HashMap<(u32, u32), u32>,
    not_cache: HashMap<u32, u32>,
    level_probs: Vec<f64>,
    vars: Vec<MvInfo>,
    node_limit: Option<usize>,
    deadline: Option<Instant>,
    work: u64,
}

impl Default for BddManager {
    fn default() -> Self {
        BddManager::new()
    }
}

impl BddManager {
    pub fn new() -> Self {
        let terminal = |v| Node {
            level: TERMINAL_LEVEL,
            low: v,
            high: v,
        };
        BddManager {
            id: NEXT_MANAGER.fetch_add(1, Ordering::Relaxed),
            nodes: vec![terminal(ZERO), terminal(ONE)],
            unique: HashMap::new(),
            and_cache: HashMap::new(),
            or_cache: HashMap::new(),
            not_cache: HashMap::new(),
            level_probs: Vec::new(),
            vars: Vec::new(),
            node_limit: None,
            deadline: None,
            work: 0,
        }
    }

    /// Fails operations that would grow the node store beyond `limit`.
    pub fn with_node_limit(mut self, limit: Option<usize>) -> Self {
        self.node_limit = limit;
        self
    }

    /// Fails long operations with [`BddError::Deadline`] once `deadline`
    /// has passed.
    pub fn with_deadline(mut self, deadline: Option<Instant>) -> Self {
        self.deadline = deadline;
        self
    }

    /// Counts one step of an apply operation; checks the deadline and the
    /// cache size now and then.
    fn step(&mut self) -> Result<(), BddError> {
        self.work += 1;
        if self.work % DEADLINE_STRIDE == 0 {
            if self.deadline.is_some_and(|d| Instant::now() > d) {
                return Err(BddError::Deadline);
            }
            if self.and_cache.len() + self.or_cache.len() + self.not_cache.len() > CACHE_CAP {
                self.and_cache.clear();
                self.or_cache.clear();
                self.not_cache.clear();
            }
        }
        Ok(())
    }

    fn handle(&self, node: u32) -> BddHandle {
        BddHandle {
            manager: self.id,
            node,
        }
    }

    fn check(&self, h: BddHandle) -> Result<u32, BddError> {
        if h.manager == self.id {
            Ok(h.node)
        } else {
            Err(BddError::ManagerMismatch)
        }
    }

    pub fn zero(&self) -> BddHandle {
        self.handle(ZERO)
    }

    pub fn one(&self) -> BddHandle {
        self.handle(ONE)
    }

    /// Number of nodes, terminals included.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of Boolean variables.
    pub fn level_count(&self) -> usize {
        self.level_probs.len()
    }

    pub fn level_probability(&self, level: u32) -> f64 {
        self.level_probs[level as usize]
    }

    /// Adds a Boolean variable with the given probability of being true.
    pub fn add_boolean(&mut self, p: f64) -> u32 {
        self.level_probs.push(p.clamp(0.0, 1.0));
        (self.level_probs.len() - 1) as u32
    }

    /// Single-variable function `x_level`.
    pub fn literal(&mut self, level: u32) -> Result<BddHandle, BddError> {
        let n = self.mk(level, ZERO, ONE)?;
        Ok(self.handle(n))
    }

    /// Registers a multi-valued variable whose `i`-th value has probability
    /// `probs[i]`, as a chain of `probs.len() - 1` Boolean variables.
    pub fn add_var(&mut self, probs: &[f64]) -> Result<MvVar, BddError> {
        if probs.len() < 2 {
            return Err(BddError::BadDistribution(format!(
                "needs at least two values, got {}",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(BddError::BadDistribution(format!("entry {p} is not a probability")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_EPSILON {
            return Err(BddError::BadDistribution(format!("entries sum to {sum}")));
        }
        let mut remaining = 1.0;
        let levels = probs[..probs.len() - 1]
            .iter()
            .map(|&p| {
                let conditional = if remaining < TAIL_EPSILON { 0.0 } else { p / remaining };
                remaining -= p;
                self.add_boolean(conditional)
            })
            .collect();
        self.vars.push(MvInfo {
            levels,
            probs: probs.to_vec(),
        });
        Ok(MvVar((self.vars.len() - 1) as u32))
    }

    /// Number of values of a multi-valued variable.
    pub fn value_count(&self, v: MvVar) -> Result<usize, BddError> {
        self.vars
            .get(v.0 as usize)
            .map(|info| info.probs.len())
            .ok_or(BddError::UnknownVar(v.0))
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    /// The function "variable `v` takes value `value`" (1-based).
    pub fn equality(&mut self, v: MvVar, value: usize) -> Result<BddHandle, BddError> {
        let info = self.vars.get(v.0 as usize).ok_or(BddError::UnknownVar(v.0))?;
        let count = info.probs.len();
        if value == 0 || value > count {
            return Err(BddError::ValueOutOfRange { value, count });
        }
        let levels = info.levels[..value.min(count - 1)].to_vec();
        let mut cur = ONE;
        for (j, &level) in levels.iter().enumerate().rev() {
            cur = if j + 1 == value {
                self.mk(level, ZERO, cur)?
            } else {
                self.mk(level, cur, ZERO)?
            };
        }
        Ok(self.handle(cur))
    }

    fn mk(&mut self, level: u32, low: u32, high: u32) -> Result<u32, BddError> {
        if low == high {
            return Ok(low);
        }
        let node = Node { level, low, high };
        if let Some(&n) = self.unique.get(&node) {
            return Ok(n);
        }
        if let Some(limit) = self.node_limit {
            if self.nodes.len() >= limit {
                return Err(BddError::NodeLimit(limit));
            }
        }
        let n = self.nodes.len() as u32;
        self.nodes.push(node);
        self.unique.insert(node, n);
        Ok(n)
    }

    fn cofactors(&self, n: u32, level: u32) -> (u32, u32) {
        let node = self.nodes[n as usize];
        if node.level == level {
            (node.low, node.high)
        } else {
            (n, n)
        }
    }

    pub fn and(&mut self, a: BddHandle, b: BddHandle) -> Result<BddHandle, BddError> {
        let (x, y) = (self.check(a)?, self.check(b)?);
        let n = self.apply_and(x, y)?;
        Ok(self.handle(n))
    }

    pub fn or(&mut self, a: BddHandle, b: BddHandle) -> Result<BddHandle, BddError> {
        let (x, y) = (self.check(a)?, self.check(b)?);
        let n = self.apply_or(x, y)?;
        Ok(self.handle(n))
    }

    pub fn not(&mut self, a: BddHandle) -> Result<BddHandle, BddError> {
        let x = self.check(a)?;
        let n = self.apply_not(x)?;
        Ok(self.handle(n))
    }

    fn apply_and(&mut self, x: u32, y: u32) -> Result<u32, BddError> {
        if x == ZERO || y == ZERO {
            return Ok(ZERO);
        }
        if x == ONE || x == y {
            return Ok(y);
        }
        if y == ONE {
            return Ok(x);
        }
        let key = (x.min(y), x.max(y));
        if let Some(&r) = self.and_cache.get(&key) {
            return Ok(r);
        }
        self.step()?;
        let level = self.nodes[x as usize].level.min(self.nodes[y as usize].level);
        let (xl, xh) = self.cofactors(x, level);
        let (yl, yh) = self.cofactors(y, level);
        let low = self.apply_and(xl, yl)?;
        let high = self.apply_and(xh, yh)?;
        let r = self.mk(level, low, high)?;
        self.and_cache.insert(key, r);
        Ok(r)
    }

    fn apply_or(&mut self, x: u32, y: u32) -> Result<u32, BddError> {
        if x == ONE || y == ONE {
            return Ok(ONE);
        }
        if x == ZERO || x == y {
            return Ok(y);
        }
        if y == ZERO {
            return Ok(x);
        }
        let key = (x.min(y), x.max(y));
        if let Some(&r) = self.or_cache.get(&key) {
            return Ok(r);
        }
        self.step()?;
        let level = self.nodes[x as usize].level.min(self.nodes[y as usize].level);
        let (xl, xh) = self.cofactors(x, level);
        let (yl, yh) = self.cofactors(y, level);
        let low = self.apply_or(xl, yl)?;
        let high = self.apply_or(xh, yh)?;
        let r = self.mk(level, low, high)?;
        self.or_cache.insert(key, r);
        Ok(r)
    }

    fn apply_not(&mut self, x: u32) -> Result<u32, BddError> {
        match x {
            ZERO => return Ok(ONE),
            ONE => return Ok(ZERO),
            _ => {}
        }
        if let Some(&r) = self.not_cache.get(&x) {
            return Ok(r);
        }
        self.step()?;
        let node = self.nodes[x as usize];
        let low = self.apply_not(node.low)?;
        let high = self.apply_not(node.high)?;
        let r = self.mk(node.level, low, high)?;
        self.not_cache.insert(x, r);
        self.not_cache.insert(r, x);
        Ok(r)
    }

    /// Probability that the function is true, by dynamic programming over
    /// the nodes reachable from `h`.
    pub fn ret_prob(&self, h: BddHandle) -> Result<f64, BddError> {
        let root = self.check(h)?;
        let mut memo: HashMap<u32, f64> = HashMap::new();
        memo.insert(ZERO, 0.0);
        memo.insert(ONE, 1.0);
        let mut stack = vec![root];
        while let Some(&n) = stack.last() {
            if memo.contains_key(&n) {
                stack.pop();
                continue;
            }
            let node = self.nodes[n as usize];
            match (memo.get(&node.low), memo.get(&node.high)) {
                (Some(&lo), Some(&hi)) => {
                    let p = self.level_probs[node.level as usize];
                    memo.insert(n, p * hi + (1.0 - p) * lo);
                    stack.pop();
                }
                (lo, hi) => {
                    if hi.is_none() {
                        stack.push(node.high);
                    }
                    if lo.is_none() {
                        stack.push(node.low);
                    }
                }
            }
        }
        Ok(memo[&root].clamp(0.0, 1.0))
    }

    /// Evaluates the function under a total assignment indexed by level.
    pub fn eval(&self, h: BddHandle, assignment: &[bool]) -> Result<bool, BddError> {
        let mut n = self.check(h)?;
        while n > ONE {
            let node = self.nodes[n as usize];
            n = if assignment[node.level as usize] {
                node.high
            } else {
                node.low
            };
        }
        Ok(n == ONE)
    }

    /// Graphviz rendering of the diagram rooted at `h`. Nodes are labelled
    /// with their Boolean variable index and its probability; dashed edges
    /// are the false branches.
    pub fn to_dot(&self, h: BddHandle) -> Result<String, BddError> {
        let root = self.check(h)?;
        let mut out = String::from("digraph bdd {\n");
        out.push_str("  0 [shape=box,label=\"0\"];\n  1 [shape=box,label=\"1\"];\n");
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            if n <= ONE || !seen.insert(n) {
                continue;
            }
            let node = self.nodes[n as usize];
            let p = self.level_probs[node.level as usize];
            let _ = writeln!(out, "  {n} [label=\"x{} ({p})\"];", node.level);
            let _ = writeln!(out, "  {n} -> {} [style=dashed];", node.low);
            let _ = writeln!(out, "  {n} -> {};", node.high);
            stack.push(node.low);
            stack.push(node.high);
        }
        out.push_str("}\n");
        Ok(out)
    }
}
