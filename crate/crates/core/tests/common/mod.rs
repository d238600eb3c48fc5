//! Random programs and brute-force graph answers shared by the test targets.

#![allow(dead_code)]

use std::collections::BTreeSet;

use pita::ast::{Atom, Program};
use pita::bench::{weight_text, Edge};
use pita::oracle::{ground, OracleLimits};
use pita::{parse_program, parse_query, ParseMode};
use rand::seq::SliceRandom;
use rand::Rng;

const CONSTANTS: [&str; 2] = ["a", "b"];
const VARS: [&str; 2] = ["X", "Y"];

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_clauses: usize,
    pub negation: bool,
    /// Positive bodies only mention lower predicates.
    pub acyclic: bool,
    pub max_ground_instances: usize,
}

impl Default for Shape {
    fn default() -> Self {
        Shape {
            max_clauses: 6,
            negation: true,
            acyclic: false,
            max_ground_instances: 12,
        }
    }
}

pub struct RandomProgram {
    pub text: String,
    pub program: Program,
    /// Every ground atom of the Herbrand base.
    pub atoms: Vec<Atom>,
}

fn atom_text(pred: usize, arity: usize, arg: &str) -> String {
    if arity == 0 {
        format!("p{pred}")
    } else {
        format!("p{pred}({arg})")
    }
}

/// `k` annotations in tenths summing to at most one.
fn annotations<R: Rng>(rng: &mut R, k: usize) -> Vec<u32> {
    let total = rng.gen_range(k as u32..=10);
    let mut cuts: Vec<u32> = (1..total).collect::<Vec<_>>();
    cuts.shuffle(rng);
    let mut cuts: Vec<u32> = cuts.into_iter().take(k - 1).collect();
    cuts.sort_unstable();
    let mut prev = 0;
    let mut out = Vec::with_capacity(k);
    for c in cuts.into_iter().chain(std::iter::once(total)) {
        out.push(c - prev);
        prev = c;
    }
    out
}

fn tenths(t: u32) -> String {
    if t >= 10 {
        "1.0".into()
    } else {
        format!("0.{t}")
    }
}

fn clause<R: Rng>(rng: &mut R, arity: &[usize], fact: bool, shape: &Shape) -> Option<String> {
    let n = arity.len();
    let k = rng.gen_range(1..=3);
    let mut heads: Vec<usize> = (0..k).map(|_| rng.gen_range(0..n)).collect();
    let low = *heads.iter().min()?;
    let fact = fact || (shape.acyclic && low == 0);

    let mut body = Vec::new();
    let mut bound: Vec<&str> = Vec::new();
    if !fact {
        for _ in 0..rng.gen_range(1..=2) {
            let p = if shape.acyclic {
                rng.gen_range(0..low)
            } else {
                rng.gen_range(0..=low)
            };
            let arg = if rng.gen_bool(0.8) {
                VARS[rng.gen_range(0..2)]
            } else {
                CONSTANTS[rng.gen_range(0..2)]
            };
            if arity[p] == 1 && VARS.contains(&arg) && !bound.contains(&arg) {
                bound.push(arg);
            }
            body.push(atom_text(p, arity[p], arg));
        }
        if shape.negation && low > 0 && rng.gen_bool(0.35) {
            let p = rng.gen_range(0..low);
            let arg = pick_arg(rng, &bound);
            body.push(format!("\\+ {}", atom_text(p, arity[p], arg)));
        }
    }

    let mut texts = BTreeSet::new();
    let mut head_texts = Vec::new();
    heads.sort_unstable();
    for h in heads {
        let arg = pick_arg(rng, &bound);
        let t = atom_text(h, arity[h], arg);
        if texts.insert(t.clone()) {
            head_texts.push(t);
        }
    }
    let ann = annotations(rng, head_texts.len());
    let deterministic = head_texts.len() == 1 && ann[0] == 10 && rng.gen_bool(0.5);
    let head = if deterministic {
        head_texts[0].clone()
    } else {
        head_texts
            .iter()
            .zip(&ann)
            .map(|(h, a)| format!("{h}:{}", tenths(*a)))
            .collect::<Vec<_>>()
            .join(" ; ")
    };
    Some(if body.is_empty() {
        format!("{head}.")
    } else {
        format!("{head} :- {}.", body.join(", "))
    })
}

fn pick_arg<'a, R: Rng>(rng: &mut R, bound: &[&'a str]) -> &'a str {
    if !bound.is_empty() && rng.gen_bool(0.7) {
        bound[rng.gen_range(0..bound.len())]
    } else {
        CONSTANTS[rng.gen_range(0..2)]
    }
}

/// Draws programs until one fits `shape` and grounds within its limits.
pub fn random_lpad<R: Rng>(rng: &mut R, shape: &Shape) -> RandomProgram {
    loop {
        let preds = rng.gen_range(2..=4);
        let arity: Vec<usize> = (0..preds).map(|_| usize::from(rng.gen_bool(0.7))).collect();
        let clauses = rng.gen_range(2..=shape.max_clauses);
        let facts = rng.gen_range(1..=clauses.min(3));
        let text: String = (0..clauses)
            .filter_map(|i| clause(rng, &arity, i < facts, shape))
            .map(|c| c + "\n")
            .collect();
        let Ok(program) = parse_program(&text, ParseMode::Lpad) else {
            continue;
        };
        let atoms: Vec<Atom> = (0..preds)
            .flat_map(|p| {
                let a = arity[p];
                let args: &[&str] = if a == 0 { &["_"] } else { &CONSTANTS };
                args.iter()
                    .map(move |c| parse_query(&atom_text(p, a, c)).expect("well formed"))
                    .collect::<Vec<_>>()
            })
            .collect();
        let limits = OracleLimits::default();
        match ground(&program, &atoms, &limits) {
            Ok(g) if g.instances().len() <= shape.max_ground_instances => {
                return RandomProgram { text, program, atoms }
            }
            _ => continue,
        }
    }
}

/// Parsed weight of an edge, exactly as the engine reads it.
pub fn edge_weight(e: &Edge) -> f64 {
    weight_text(e.thousandths).parse().expect("decimal")
}

fn simple_paths(edges: &[Edge], at: usize, to: usize, seen: &mut Vec<bool>, visit: &mut dyn FnMut(&[usize])) {
    fn go(edges: &[Edge], at: usize, to: usize, seen: &mut Vec<bool>, path: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if at == to {
            visit(path);
            return;
        }
        for (i, e) in edges.iter().enumerate() {
            if e.from == at && !seen[e.to] {
                seen[e.to] = true;
                path.push(i);
                go(edges, e.to, to, seen, path, visit);
                path.pop();
                seen[e.to] = false;
            }
        }
    }
    seen[at] = true;
    go(edges, at, to, seen, &mut Vec::new(), visit);
}

/// Max over simple paths of the min edge weight; 1 for the empty path.
pub fn brute_necessity(nodes: usize, edges: &[Edge], from: usize, to: usize) -> f64 {
    let mut best = 0.0f64;
    simple_paths(edges, from, to, &mut vec![false; nodes], &mut |p| {
        let w = p.iter().map(|&i| edge_weight(&edges[i])).fold(1.0, f64::min);
        best = best.max(w);
    });
    best
}

pub fn brute_path_count(nodes: usize, edges: &[Edge], from: usize, to: usize) -> u64 {
    let mut n = 0;
    simple_paths(edges, from, to, &mut vec![false; nodes], &mut |_| n += 1);
    n
}

/// Whether some cycle is reachable from `from`.
pub fn reaches_cycle(nodes: usize, edges: &[Edge], from: usize) -> bool {
    // 0 unvisited, 1 on stack, 2 done
    fn dfs(edges: &[Edge], v: usize, state: &mut [u8]) -> bool {
        state[v] = 1;
        for e in edges.iter().filter(|e| e.from == v) {
            if state[e.to] == 1 || (state[e.to] == 0 && dfs(edges, e.to, state)) {
                return true;
            }
        }
        state[v] = 2;
        false
    }
    dfs(edges, from, &mut vec![0; nodes])
}

/// Whether no derivation of any atom uses the same ground clause twice.
/// Acyclic positive programs only.
pub fn derivations_use_clauses_once(rp: &RandomProgram) -> bool {
    let limits = OracleLimits::default();
    let Ok(g) = ground(&rp.program, &rp.atoms, &limits) else {
        return false;
    };
    rp.atoms.iter().all(|q| match g.derivations(q, &limits) {
        Ok(ds) => ds.iter().all(|d| {
            let mut keys: Vec<_> = d.iter().map(|c| (c.rule, c.grounding.clone())).collect();
            let n = keys.len();
            keys.sort();
            keys.dedup();
            keys.len() == n
        }),
        Err(_) => false,
    })
}
