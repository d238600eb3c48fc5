//! Clause instrumentation: every clause becomes one instruction list per
//! explicit head, threading an uncertainty value through the body.

use std::fmt;

use crate::ast::{Annotation, AnnotatedClause, Atom, Literal, RuleId, Term, Var};

/// Which instrumentation schema to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flavor {
    /// Random variables are looked up per clause grounding.
    General,
    /// The annotation list is used directly; no variable lookup.
    Simplified,
}

/// Index of a value register in an instrumented clause.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slot(pub u32);

/// First argument of an equality step.
#[derive(Debug, Clone, PartialEq)]
pub enum EqualitySource {
    /// A random variable produced by a previous `GetVar`.
    Var(Slot),
    /// The clause's annotations, null included.
    Probs(Vec<Annotation>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    /// `one(out)`
    One { out: Slot },
    /// Tabled call of a positive literal; `out` receives the answer value.
    CallPos { atom: Atom, out: Slot },
    /// `(call(A) -> not(DN, out) ; one(out))`
    CallNeg { atom: Atom, out: Slot },
    /// Built-in `=`. Produces no value.
    Unify(Term, Term),
    /// Built-in `\=`. Produces no value.
    NotUnify(Term, Term),
    /// `and(left, right, out)`
    And { left: Slot, right: Slot, out: Slot },
    /// `get_var_n(rule, vc, probs, out)`
    GetVar {
        rule: RuleId,
        vc: Vec<Var>,
        probs: Vec<Annotation>,
        out: Slot,
    },
    /// `equality(source, head, out)`
    Equality {
        source: EqualitySource,
        head: usize,
        out: Slot,
    },
}

impl Step {
    /// Slots read by the step.
    pub fn reads(&self) -> Vec<Slot> {
        match self {
            Step::And { left, right, .. } => vec![*left, *right],
            Step::Equality {
                source: EqualitySource::Var(v),
                ..
            } => vec![*v],
            _ => Vec::new(),
        }
    }

    /// Slot written by the step, if any.
    pub fn writes(&self) -> Option<Slot> {
        match self {
            Step::One { out }
            | Step::CallPos { out, .. }
            | Step::CallNeg { out, .. }
            | Step::And { out, .. }
            | Step::GetVar { out, .. }
            | Step::Equality { out, .. } => Some(*out),
            Step::Unify(..) | Step::NotUnify(..) => None,
        }
    }
}

/// A clause specialised to one of its heads, as an instruction list.
#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentedClause {
    pub rule: RuleId,
    /// 1-based index of the head this clause derives.
    pub head_index: usize,
    pub head: Atom,
    pub steps: Vec<Step>,
    /// Slot holding the value of the derived head.
    pub result: Slot,
    pub slot_count: u32,
    /// The clause's variables in first-occurrence order.
    pub vc: Vec<Var>,
    pub var_names: Vec<String>,
    /// Annotations of all heads, null included.
    pub probs: Vec<Annotation>,
}

struct SlotAlloc(u32);

impl SlotAlloc {
    fn fresh(&mut self) -> Slot {
        let s = Slot(self.0);
        self.0 += 1;
        s
    }
}

/// Instruments `clause` with the given flavor. Produces one clause per
/// explicit head; the implicit null head yields nothing.
pub fn pita_transform(clause: &AnnotatedClause, flavor: Flavor) -> Vec<InstrumentedClause> {
    let mut probs: Vec<Annotation> = clause.heads.iter().map(|h| h.annotation.clone()).collect();
    if let Some(n) = &clause.null {
        probs.push(n.clone());
    }
    let vc = clause.vars();
    let deterministic = clause.is_deterministic();

    clause
        .heads
        .iter()
        .enumerate()
        .map(|(i, head)| {
            let mut slots = SlotAlloc(0);
            let mut steps = Vec::with_capacity(2 * clause.body.len() + 4);
            let mut acc = slots.fresh();
            steps.push(Step::One { out: acc });
            for lit in &clause.body {
                let d = match lit {
                    Literal::Pos(a) => {
                        let out = slots.fresh();
                        steps.push(Step::CallPos {
                            atom: a.clone(),
                            out,
                        });
                        out
                    }
                    Literal::Neg(a) => {
                        let out = slots.fresh();
                        steps.push(Step::CallNeg {
                            atom: a.clone(),
                            out,
                        });
                        out
                    }
                    Literal::Unify(l, r) => {
                        steps.push(Step::Unify(l.clone(), r.clone()));
                        continue;
                    }
                    Literal::NotUnify(l, r) => {
                        steps.push(Step::NotUnify(l.clone(), r.clone()));
                        continue;
                    }
                };
                let out = slots.fresh();
                steps.push(Step::And {
                    left: acc,
                    right: d,
                    out,
                });
                acc = out;
            }
            if !deterministic {
                let source = match flavor {
                    Flavor::General => {
                        let var = slots.fresh();
                        steps.push(Step::GetVar {
                            rule: clause.id,
                            vc: vc.clone(),
                            probs: probs.clone(),
                            out: var,
                        });
                        EqualitySource::Var(var)
                    }
                    Flavor::Simplified => EqualitySource::Probs(probs.clone()),
                };
                let dd = slots.fresh();
                steps.push(Step::Equality {
                    source,
                    head: i + 1,
                    out: dd,
                });
                let out = slots.fresh();
                steps.push(Step::And {
                    left: acc,
                    right: dd,
                    out,
                });
                acc = out;
            }
            InstrumentedClause {
                rule: clause.id,
                head_index: i + 1,
                head: head.atom.clone(),
                steps,
                result: acc,
                slot_count: slots.0,
                vc: vc.clone(),
                var_names: clause.var_names.clone(),
                probs: probs.clone(),
            }
        })
        .collect()
}

/// Appends the value argument to a goal: `p(t1..tn)` becomes
/// `p(t1..tn, D)` where `D` is `var`.
pub fn add_d_arg(goal: &Atom, var: Var) -> Atom {
    let mut args = goal.args.clone();
    args.push(Term::Var(var));
    Atom {
        predicate: goal.predicate.clone(),
        args,
    }
}

impl InstrumentedClause {
    fn slot_name(&self, s: Slot) -> String {
        // Slot 0 is DD0; call outputs read as D_j, the rest as DD_j.
        if s == self.result {
            return "D".to_string();
        }
        let mut calls = 0;
        let mut ands = 0;
        for step in &self.steps {
            match step {
                Step::One { out } if *out == s => return "DD0".to_string(),
                Step::CallPos { out, .. } | Step::CallNeg { out, .. } => {
                    calls += 1;
                    if *out == s {
                        return format!("D{calls}");
                    }
                }
                Step::And { out, .. } => {
                    ands += 1;
                    if *out == s {
                        return format!("DD{ands}");
                    }
                }
                Step::GetVar { out, .. } if *out == s => return "Var".to_string(),
                Step::Equality { out, .. } if *out == s => return "DD".to_string(),
                _ => {}
            }
        }
        format!("S{}", s.0)
    }

    fn fresh_name(&self, base: &str) -> String {
        let mut name = base.to_string();
        while self.var_names.iter().any(|n| *n == name) {
            name.push('_');
        }
        name
    }
}

fn annotation_list(probs: &[Annotation]) -> String {
    let items: Vec<String> = probs.iter().map(|a| a.to_string()).collect();
    format!("[{}]", items.join(","))
}

impl fmt::Display for InstrumentedClause {
    /// Pseudo-Prolog rendering for debugging output.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = &self.var_names;
        let slot = |s: Slot| self.fresh_name(&self.slot_name(s));
        let with_d = |a: &Atom, d: &str| -> String {
            let shown = a.display(names).to_string();
            if a.args.is_empty() {
                format!("{shown}({d})")
            } else {
                format!("{},{d})", &shown[..shown.len() - 1])
            }
        };
        write!(f, "{} :- ", with_d(&self.head, &slot(self.result)))?;
        let parts: Vec<String> = self
            .steps
            .iter()
            .map(|step| match step {
                Step::One { out } => format!("one({})", slot(*out)),
                Step::CallPos { atom, out } => with_d(atom, &slot(*out)),
                Step::CallNeg { atom, out } => {
                    let dn = self.fresh_name("DN");
                    let d = slot(*out);
                    format!("({} -> not({dn},{d}) ; one({d}))", with_d(atom, &dn))
                }
                Step::Unify(l, r) => format!("{} = {}", l.display(names), r.display(names)),
                Step::NotUnify(l, r) => format!("{} \\= {}", l.display(names), r.display(names)),
                Step::And { left, right, out } => {
                    format!("and({},{},{})", slot(*left), slot(*right), slot(*out))
                }
                Step::GetVar {
                    rule,
                    vc,
                    probs,
                    out,
                } => {
                    let vs: Vec<String> =
                        vc.iter().map(|v| Term::Var(*v).display(names).to_string()).collect();
                    format!(
                        "get_var_n({rule},[{}],{},{})",
                        vs.join(","),
                        annotation_list(probs),
                        slot(*out)
                    )
                }
                Step::Equality { source, head, out } => {
                    let src = match source {
                        EqualitySource::Var(v) => slot(*v),
                        EqualitySource::Probs(p) => annotation_list(p),
                    };
                    format!("equality({src},{head},{})", slot(*out))
                }
            })
            .collect();
        write!(f, "{}.", parts.join(", "))
    }
}
