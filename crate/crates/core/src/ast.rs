//! First-order syntax: terms, atoms, literals, annotated clauses and programs,
//! together with unification, substitution and the choice structures used to
//! describe worlds.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use ordered_float::OrderedFloat;
use thiserror::Error;

/// Tolerance on annotation sums.
pub const ANNOTATION_EPSILON: f64 = 1e-9;

/// Functor of the list constructor.
pub const LIST_CONS: &str = ".";
/// The empty list constant.
pub const LIST_NIL: &str = "[]";

/// A clause-local variable, identified by its index in first-occurrence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub u32);

/// A first-order term. Constants are zero-arity compounds.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    Int(i64),
    Float(OrderedFloat<f64>),
    Compound(Arc<str>, Vec<Term>),
}

impl Term {
    pub fn var(index: u32) -> Self {
        Term::Var(Var(index))
    }

    pub fn constant(name: &str) -> Self {
        Term::Compound(Arc::from(name), Vec::new())
    }

    pub fn compound(functor: &str, args: Vec<Term>) -> Self {
        Term::Compound(Arc::from(functor), args)
    }

    pub fn float(value: f64) -> Self {
        Term::Float(OrderedFloat(value))
    }

    pub fn nil() -> Self {
        Term::constant(LIST_NIL)
    }

    /// Builds `[items | tail]` out of `'.'/2` cells.
    pub fn list_with_tail(items: Vec<Term>, tail: Term) -> Self {
        let cons: Arc<str> = Arc::from(LIST_CONS);
        items
            .into_iter()
            .rev()
            .fold(tail, |acc, item| Term::Compound(Arc::clone(&cons), vec![item, acc]))
    }

    pub fn list(items: Vec<Term>) -> Self {
        Term::list_with_tail(items, Term::nil())
    }

    pub fn is_ground(&self) -> bool {
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            match t {
                Term::Var(_) => return false,
                Term::Compound(_, args) => stack.extend(args.iter()),
                _ => {}
            }
        }
        true
    }

    /// Appends the variables of the term to `out` in first-occurrence order,
    /// skipping ones already present.
    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            match t {
                Term::Var(v) => {
                    if !out.contains(v) {
                        out.push(*v);
                    }
                }
                Term::Compound(_, args) => stack.extend(args.iter().rev()),
                _ => {}
            }
        }
    }

    /// Splits a (possibly partial) list into its elements and its tail.
    /// Returns `None` when the term is not a list cell or `[]`.
    pub fn as_list(&self) -> Option<(Vec<&Term>, &Term)> {
        let mut items = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                Term::Compound(f, args) if &**f == LIST_CONS && args.len() == 2 => {
                    items.push(&args[0]);
                    cur = &args[1];
                }
                _ => break,
            }
        }
        if items.is_empty() && !is_nil(cur) {
            return None;
        }
        Some((items, cur))
    }

    pub fn occurs(&self, v: Var) -> bool {
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            match t {
                Term::Var(w) if *w == v => return true,
                Term::Compound(_, args) => stack.extend(args.iter()),
                _ => {}
            }
        }
        false
    }

    /// Display adaptor that prints variables with the given names.
    pub fn display<'a>(&'a self, names: &'a [String]) -> TermDisplay<'a> {
        TermDisplay {
            term: self,
            names: Some(names),
        }
    }
}

impl Drop for Term {
    // Long lists nest deeply; drop them without recursion.
    fn drop(&mut self) {
        let Term::Compound(_, args) = self else { return };
        if args.iter().all(|a| !matches!(a, Term::Compound(_, xs) if !xs.is_empty())) {
            return;
        }
        let mut stack = std::mem::take(args);
        while let Some(mut t) = stack.pop() {
            if let Term::Compound(_, xs) = &mut t {
                stack.append(xs);
            }
        }
    }
}

fn is_nil(t: &Term) -> bool {
    matches!(t, Term::Compound(f, args) if &**f == LIST_NIL && args.is_empty())
}

/// Prints a term in canonical prefix notation with list sugar and quoting.
pub struct TermDisplay<'a> {
    term: &'a Term,
    names: Option<&'a [String]>,
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        TermDisplay {
            term: self,
            names: None,
        }
        .fmt(f)
    }
}

impl fmt::Display for TermDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self.term, self.names)
    }
}

fn write_var(f: &mut fmt::Formatter<'_>, v: Var, names: Option<&[String]>) -> fmt::Result {
    match names.and_then(|n| n.get(v.0 as usize)) {
        Some(name) => f.write_str(name),
        None => write!(f, "_V{}", v.0),
    }
}

fn write_term(f: &mut fmt::Formatter<'_>, t: &Term, names: Option<&[String]>) -> fmt::Result {
    match t {
        Term::Var(v) => write_var(f, *v, names),
        Term::Int(i) => write!(f, "{i}"),
        Term::Float(x) => write_float(f, x.0),
        Term::Compound(functor, args) => {
            if &**functor == LIST_CONS && args.len() == 2 {
                if let Some((items, tail)) = t.as_list() {
                    f.write_str("[")?;
                    for (i, item) in items.iter().enumerate() {
                        if i > 0 {
                            f.write_str(",")?;
                        }
                        write_term(f, item, names)?;
                    }
                    if !is_nil(tail) {
                        f.write_str("|")?;
                        write_term(f, tail, names)?;
                    }
                    return f.write_str("]");
                }
            }
            write_atom_name(f, functor)?;
            if !args.is_empty() {
                f.write_str("(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write_term(f, a, names)?;
                }
                f.write_str(")")?;
            }
            Ok(())
        }
    }
}

fn write_float(f: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    // `{:?}` is the shortest round-tripping form and always contains a `.`,
    // an exponent, or is a non-finite marker.
    let s = format!("{x:?}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        f.write_str(&s)
    } else {
        write!(f, "{s}.0")
    }
}

/// Whether an atom name can be printed without quotes.
pub fn is_plain_atom(name: &str) -> bool {
    if name == LIST_NIL {
        return true;
    }
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => chars.all(|c| c.is_ascii_alphanumeric() || c == '_'),
        _ => false,
    }
}

pub(crate) fn write_atom_name(f: &mut impl fmt::Write, name: &str) -> fmt::Result {
    if is_plain_atom(name) {
        return f.write_str(name);
    }
    f.write_char('\'')?;
    for c in name.chars() {
        match c {
            '\'' => f.write_str("\\'")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            _ => f.write_char(c)?,
        }
    }
    f.write_char('\'')
}

/// An atom `p(t1, ..., tn)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: Arc<str>,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: &str, args: Vec<Term>) -> Self {
        Atom {
            predicate: Arc::from(predicate),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        for a in &self.args {
            a.collect_vars(out);
        }
    }

    pub fn to_term(&self) -> Term {
        Term::Compound(Arc::clone(&self.predicate), self.args.clone())
    }

    /// Interprets a callable term as an atom.
    pub fn from_term(mut t: Term) -> Option<Self> {
        match &mut t {
            Term::Compound(predicate, args) => Some(Atom {
                predicate: Arc::clone(predicate),
                args: std::mem::take(args),
            }),
            _ => None,
        }
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> AtomDisplay<'a> {
        AtomDisplay {
            atom: self,
            names: Some(names),
        }
    }
}

pub struct AtomDisplay<'a> {
    atom: &'a Atom,
    names: Option<&'a [String]>,
}

impl fmt::Display for AtomDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_atom_name(f, &self.atom.predicate)?;
        if !self.atom.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.atom.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write_term(f, a, self.names)?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        AtomDisplay {
            atom: self,
            names: None,
        }
        .fmt(f)
    }
}

/// A body literal. `=` and `\=` are the only built-ins.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Literal {
    Pos(Atom),
    Neg(Atom),
    Unify(Term, Term),
    NotUnify(Term, Term),
}

impl Literal {
    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => a.collect_vars(out),
            Literal::Unify(l, r) | Literal::NotUnify(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> LiteralDisplay<'a> {
        LiteralDisplay { lit: self, names }
    }
}

pub struct LiteralDisplay<'a> {
    lit: &'a Literal,
    names: &'a [String],
}

impl fmt::Display for LiteralDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.lit {
            Literal::Pos(a) => write!(f, "{}", a.display(self.names)),
            Literal::Neg(a) => write!(f, "\\+ {}", a.display(self.names)),
            Literal::Unify(l, r) => write!(f, "{} = {}", l.display(self.names), r.display(self.names)),
            Literal::NotUnify(l, r) => {
                write!(f, "{} \\= {}", l.display(self.names), r.display(self.names))
            }
        }
    }
}

/// A head annotation kept as an exact rational, with its nearest `f64`.
#[derive(Debug, Clone)]
pub struct Annotation {
    exact: BigRational,
    value: f64,
}

impl Annotation {
    pub fn from_ratio(numer: i64, denom: i64) -> Self {
        Annotation::from_exact(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn one() -> Self {
        Annotation::from_exact(BigRational::one())
    }

    /// Builds an annotation from an exact rational; the float value is the
    /// correctly rounded quotient whenever numerator and denominator are
    /// exactly representable.
    pub fn from_exact(exact: BigRational) -> Self {
        const EXACT_LIMIT: i64 = 1 << 53;
        let value = match (exact.numer().to_i64(), exact.denom().to_i64()) {
            (Some(n), Some(d)) if n.abs() <= EXACT_LIMIT && d <= EXACT_LIMIT => n as f64 / d as f64,
            _ => exact.to_f64().unwrap_or(f64::NAN),
        };
        Annotation { exact, value }
    }

    /// Builds an annotation from decimal text and its exact rational value;
    /// the float value comes from parsing the text, which is correctly
    /// rounded.
    pub fn from_decimal(text: &str, exact: BigRational) -> Self {
        let value = text.parse::<f64>().unwrap_or_else(|_| exact.to_f64().unwrap_or(f64::NAN));
        Annotation { exact, value }
    }

    pub fn exact(&self) -> &BigRational {
        &self.exact
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn is_one(&self) -> bool {
        self.exact.is_one()
    }
}

impl PartialEq for Annotation {
    fn eq(&self, other: &Self) -> bool {
        self.exact == other.exact
    }
}

impl Eq for Annotation {}

impl fmt::Display for Annotation {
    /// Terminating decimals print as decimals, everything else as `n/d`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let numer = self.exact.numer();
        let denom = self.exact.denom();
        if denom.is_one() {
            return write!(f, "{numer}");
        }
        let mut d = denom.clone();
        let two = BigInt::from(2);
        let five = BigInt::from(5);
        let (mut twos, mut fives) = (0u32, 0u32);
        while (&d % &two).is_zero() {
            d /= &two;
            twos += 1;
        }
        while (&d % &five).is_zero() {
            d /= &five;
            fives += 1;
        }
        if !d.is_one() {
            return write!(f, "{numer}/{denom}");
        }
        let digits = twos.max(fives);
        let scaled = numer * BigInt::from(10).pow(digits) / denom;
        let sign = if scaled.is_negative() { "-" } else { "" };
        let mut s = scaled.abs().to_string();
        while s.len() <= digits as usize {
            s.insert(0, '0');
        }
        let split = s.len() - digits as usize;
        write!(f, "{sign}{}.{}", &s[..split], &s[split..])
    }
}

/// One annotated head `atom : annotation`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Head {
    pub atom: Atom,
    pub annotation: Annotation,
}

/// Position of a clause in its program, counting from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RuleId(pub usize);

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClauseError {
    #[error("a clause needs at least one head")]
    NoHeads,
    #[error("annotation {0} is outside (0, 1]")]
    AnnotationOutOfRange(String),
    #[error("annotations sum to {0}, which exceeds 1")]
    AnnotationSumExceedsOne(String),
}

/// A clause `h1:a1 ; ... ; hn:an :- body.` Variables are numbered in
/// first-occurrence order (heads, then body), so `vars()` is `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedClause {
    pub id: RuleId,
    pub heads: Vec<Head>,
    /// Mass of the implicit `null` head; present only when the explicit
    /// annotations sum to less than one.
    pub null: Option<Annotation>,
    pub body: Vec<Literal>,
    pub var_names: Vec<String>,
}

impl AnnotatedClause {
    pub fn new(
        id: RuleId,
        heads: Vec<Head>,
        body: Vec<Literal>,
        var_names: Vec<String>,
    ) -> Result<Self, ClauseError> {
        if heads.is_empty() {
            return Err(ClauseError::NoHeads);
        }
        let mut sum = BigRational::zero();
        for h in &heads {
            let a = h.annotation.exact();
            if !a.is_positive() || a > &BigRational::one() {
                return Err(ClauseError::AnnotationOutOfRange(h.annotation.to_string()));
            }
            sum += a;
        }
        let eps = epsilon();
        let one = BigRational::one();
        if sum > &one + &eps {
            return Err(ClauseError::AnnotationSumExceedsOne(Annotation::from_exact(sum).to_string()));
        }
        let null = if sum < &one - &eps {
            Some(Annotation::from_exact(one - sum))
        } else {
            None
        };
        Ok(AnnotatedClause {
            id,
            heads,
            null,
            body,
            var_names,
        })
    }

    /// The clause's variables in first-occurrence order.
    pub fn vars(&self) -> Vec<Var> {
        (0..self.var_names.len() as u32).map(Var).collect()
    }

    /// A single head with annotation one: no random variable is involved.
    pub fn is_deterministic(&self) -> bool {
        self.heads.len() == 1 && self.null.is_none() && self.heads[0].annotation.is_one()
    }

    /// Head probabilities followed by the implicit null mass, if any.
    pub fn probabilities(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self.heads.iter().map(|h| h.annotation.value()).collect();
        if let Some(n) = &self.null {
            p.push(n.value());
        }
        p
    }

    /// Number of values of the clause's random variable, null included.
    pub fn value_count(&self) -> usize {
        self.heads.len() + usize::from(self.null.is_some())
    }

    /// Annotation of head `index` (1-based); `heads.len() + 1` is null.
    pub fn annotation(&self, index: usize) -> Option<&Annotation> {
        if index >= 1 && index <= self.heads.len() {
            Some(&self.heads[index - 1].annotation)
        } else if index == self.heads.len() + 1 {
            self.null.as_ref()
        } else {
            None
        }
    }

    pub fn has_negation(&self) -> bool {
        self.body.iter().any(|l| matches!(l, Literal::Neg(_)))
    }
}

fn epsilon() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(1_000_000_000u64))
}

impl fmt::Display for AnnotatedClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = &self.var_names;
        for (i, h) in self.heads.iter().enumerate() {
            if i > 0 {
                f.write_str(" ; ")?;
            }
            write!(f, "{}", h.atom.display(names))?;
            if !(self.heads.len() == 1 && h.annotation.is_one()) {
                write!(f, ":{}", h.annotation)?;
            }
        }
        if !self.body.is_empty() {
            f.write_str(" :- ")?;
            for (i, l) in self.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}", l.display(names))?;
            }
        }
        f.write_str(".")
    }
}

/// Predicate indicator `name/arity`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredicateKey {
    pub name: Arc<str>,
    pub arity: usize,
}

impl fmt::Display for PredicateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_atom_name(f, &self.name)?;
        write!(f, "/{}", self.arity)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("rule ids must be dense from 1; clause at position {position} has id {id}")]
pub struct RuleIdError {
    pub position: usize,
    pub id: usize,
}

/// An annotated program. Rule ids equal clause positions counting from 1.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    clauses: Vec<AnnotatedClause>,
    tabled: BTreeSet<PredicateKey>,
}

impl Program {
    pub fn new(
        clauses: Vec<AnnotatedClause>,
        tabled: BTreeSet<PredicateKey>,
    ) -> Result<Self, RuleIdError> {
        for (i, c) in clauses.iter().enumerate() {
            if c.id.0 != i + 1 {
                return Err(RuleIdError {
                    position: i + 1,
                    id: c.id.0,
                });
            }
        }
        Ok(Program { clauses, tabled })
    }

    pub fn clauses(&self) -> &[AnnotatedClause] {
        &self.clauses
    }

    pub fn clause(&self, id: RuleId) -> Option<&AnnotatedClause> {
        id.0.checked_sub(1).and_then(|i| self.clauses.get(i))
    }

    /// Predicates named in `:- table` directives. Every predicate is tabled
    /// during evaluation regardless; these are kept as hints.
    pub fn tabled(&self) -> &BTreeSet<PredicateKey> {
        &self.tabled
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.tabled {
            writeln!(f, ":- table {t}.")?;
        }
        for c in &self.clauses {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// A substitution from variables to terms.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Subst(BTreeMap<Var, Term>);

impl Subst {
    pub fn new() -> Self {
        Subst::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Var, Term)>) -> Self {
        Subst(pairs.into_iter().collect())
    }

    pub fn get(&self, v: Var) -> Option<&Term> {
        self.0.get(&v)
    }

    pub fn insert(&mut self, v: Var, t: Term) {
        self.0.insert(v, t);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.0.iter()
    }

    /// Follows variable bindings until an unbound variable or a non-variable.
    fn walk<'a>(&'a self, mut t: &'a Term) -> &'a Term {
        while let Term::Var(v) = t {
            match self.0.get(v) {
                Some(next) => t = next,
                None => break,
            }
        }
        t
    }

    /// Fully resolves `t` through the (triangular) bindings.
    fn resolve(&self, t: &Term) -> Term {
        match self.walk(t) {
            Term::Compound(f, args) => {
                Term::Compound(Arc::clone(f), args.iter().map(|a| self.resolve(a)).collect())
            }
            other => other.clone(),
        }
    }

    fn occurs(&self, v: Var, t: &Term) -> bool {
        match self.walk(t) {
            Term::Var(w) => *w == v,
            Term::Compound(_, args) => args.iter().any(|a| self.occurs(v, a)),
            _ => false,
        }
    }
}

/// Simultaneous substitution, one pass: bound variables are replaced by
/// their images without re-walking the images.
pub fn apply_subst(t: &Term, s: &Subst) -> Term {
    match t {
        Term::Var(v) => s.get(*v).cloned().unwrap_or_else(|| t.clone()),
        Term::Compound(f, args) => {
            Term::Compound(Arc::clone(f), args.iter().map(|a| apply_subst(a, s)).collect())
        }
        _ => t.clone(),
    }
}

pub fn apply_subst_atom(a: &Atom, s: &Subst) -> Atom {
    Atom {
        predicate: Arc::clone(&a.predicate),
        args: a.args.iter().map(|t| apply_subst(t, s)).collect(),
    }
}

/// Most general unifier with occurs check. The returned substitution is
/// idempotent. Callers standardize the terms apart.
pub fn unify(t1: &Term, t2: &Term) -> Option<Subst> {
    let mut s = Subst::new();
    if unify_into(&mut s, t1, t2) {
        Some(solved_form(s))
    } else {
        None
    }
}

/// Unifies argument lists pairwise.
pub fn unify_args(a: &[Term], b: &[Term]) -> Option<Subst> {
    if a.len() != b.len() {
        return None;
    }
    let mut s = Subst::new();
    for (x, y) in a.iter().zip(b) {
        if !unify_into(&mut s, x, y) {
            return None;
        }
    }
    Some(solved_form(s))
}

fn solved_form(s: Subst) -> Subst {
    let resolved = s.0.keys().map(|v| (*v, s.resolve(&Term::Var(*v)))).collect();
    Subst(resolved)
}

fn unify_into(s: &mut Subst, t1: &Term, t2: &Term) -> bool {
    let mut work = vec![(t1.clone(), t2.clone())];
    while let Some((a, b)) = work.pop() {
        let a = s.walk(&a).clone();
        let b = s.walk(&b).clone();
        match (&a, &b) {
            (Term::Var(x), Term::Var(y)) if x == y => {}
            (Term::Var(x), _) => {
                if s.occurs(*x, &b) {
                    return false;
                }
                s.insert(*x, b);
            }
            (_, Term::Var(y)) => {
                if s.occurs(*y, &a) {
                    return false;
                }
                s.insert(*y, a);
            }
            (Term::Compound(f, xs), Term::Compound(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    return false;
                }
                work.extend(xs.iter().cloned().zip(ys.iter().cloned()));
            }
            _ => {
                if a != b {
                    return false;
                }
            }
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("grounding key contains the non-ground term {0}")]
pub struct NonGroundKey(pub String);

/// Canonical text of a ground variable list, used to identify a clause
/// grounding. Equal ground lists give equal keys and distinct lists give
/// distinct keys.
pub fn grounding_key(vc: &[Term]) -> Result<String, NonGroundKey> {
    let mut out = String::new();
    for (i, t) in vc.iter().enumerate() {
        if !t.is_ground() {
            return Err(NonGroundKey(t.to_string()));
        }
        if i > 0 {
            out.push(',');
        }
        out.push_str(&t.to_string());
    }
    Ok(out)
}

/// Selection of head `head` (1-based; `heads + 1` is null) for the grounding
/// `grounding` of clause `rule`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomicChoice {
    pub rule: RuleId,
    pub grounding: Vec<Term>,
    pub head: usize,
}

impl fmt::Display for AtomicChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},[", self.rule)?;
        for (i, t) in self.grounding.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, "],{})", self.head)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("atomic choice {0} conflicts with an existing choice for the same grounding")]
pub struct InconsistentChoice(pub String);

/// A consistent set of atomic choices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CompositeChoice {
    choices: BTreeMap<(RuleId, Vec<Term>), usize>,
}

impl CompositeChoice {
    pub fn new() -> Self {
        CompositeChoice::default()
    }

    /// Adds a choice; re-adding an identical choice is a no-op.
    pub fn insert(&mut self, c: AtomicChoice) -> Result<(), InconsistentChoice> {
        let key = (c.rule, c.grounding.clone());
        match self.choices.get(&key) {
            Some(&h) if h != c.head => Err(InconsistentChoice(c.to_string())),
            Some(_) => Ok(()),
            None => {
                self.choices.insert(key, c.head);
                Ok(())
            }
        }
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = AtomicChoice> + '_ {
        self.choices.iter().map(|((rule, g), head)| AtomicChoice {
            rule: *rule,
            grounding: g.clone(),
            head: *head,
        })
    }

    /// Product of the annotations of the chosen heads.
    pub fn probability(&self, program: &Program) -> Option<f64> {
        let mut p = 1.0;
        for ((rule, _), head) in &self.choices {
            p *= program.clause(*rule)?.annotation(*head)?.value();
        }
        Some(p)
    }
}

/// A total composite choice: one atomic choice per probabilistic ground
/// clause. Identifies a world.
pub type Selection = CompositeChoice;

#[cfg(test)]
mod tests {
    use super::*;

    fn a(name: &str) -> Term {
        Term::constant(name)
    }

    fn x() -> Term {
        Term::var(0)
    }

    fn y() -> Term {
        Term::var(1)
    }

    #[test]
    fn unify_variable_with_constant() {
        let s = unify(&x(), &a("a")).unwrap();
        assert_eq!(s, Subst::from_pairs([(Var(0), a("a"))]));
    }

    #[test]
    fn unify_decomposes_compounds() {
        let l = Term::compound("f", vec![x(), a("b")]);
        let r = Term::compound("f", vec![a("a"), y()]);
        let s = unify(&l, &r).unwrap();
        assert_eq!(s, Subst::from_pairs([(Var(0), a("a")), (Var(1), a("b"))]));
    }

    #[test]
    fn unify_occurs_check_fails() {
        assert!(unify(&x(), &Term::compound("f", vec![x()])).is_none());
    }

    #[test]
    fn unify_result_is_idempotent() {
        // f(X, Y) = f(Y, g(Z)) gives X -> g(Z), Y -> g(Z)
        let z = Term::var(2);
        let l = Term::compound("f", vec![x(), y()]);
        let r = Term::compound("f", vec![y(), Term::compound("g", vec![z.clone()])]);
        let s = unify(&l, &r).unwrap();
        let once = apply_subst(&l, &s);
        assert_eq!(apply_subst(&once, &s), once);
        assert_eq!(once, Term::compound("f", vec![Term::compound("g", vec![z.clone()]); 2]));
    }

    #[test]
    fn unify_clash_and_number_mismatch() {
        assert!(unify(&a("a"), &a("b")).is_none());
        assert!(unify(&Term::Int(1), &Term::float(1.0)).is_none());
        assert!(unify(&Term::compound("f", vec![x()]), &Term::compound("f", vec![x(), x()])).is_none());
    }

    #[test]
    fn apply_subst_examples() {
        let s = Subst::from_pairs([(Var(0), a("a"))]);
        let p = Term::compound("p", vec![x(), y()]);
        assert_eq!(apply_subst(&p, &s), Term::compound("p", vec![a("a"), y()]));
        assert_eq!(apply_subst(&p, &Subst::new()), p);

        // single pass, no re-walk
        let s = Subst::from_pairs([(Var(0), Term::compound("f", vec![y()])), (Var(1), a("b"))]);
        let g = Term::compound("g", vec![x()]);
        assert_eq!(apply_subst(&g, &s), Term::compound("g", vec![Term::compound("f", vec![y()])]));
    }

    #[test]
    fn grounding_key_examples() {
        let key = grounding_key(&[a("a"), Term::compound("f", vec![a("b")])]).unwrap();
        assert_eq!(key, "a,f(b)");
        assert_eq!(grounding_key(&[]).unwrap(), "");
        assert!(grounding_key(&[x()]).is_err());
    }

    #[test]
    fn grounding_key_distinguishes_numbers_and_quoted_atoms() {
        let k1 = grounding_key(&[Term::Int(1)]).unwrap();
        let k2 = grounding_key(&[Term::float(1.0)]).unwrap();
        let k3 = grounding_key(&[a("1")]).unwrap();
        assert_ne!(k1, k2);
        assert_ne!(k1, k3);
        let k4 = grounding_key(&[a("a,b")]).unwrap();
        let k5 = grounding_key(&[a("a"), a("b")]).unwrap();
        assert_ne!(k4, k5);
    }

    #[test]
    fn list_display_uses_sugar() {
        let l = Term::list(vec![a("a"), a("c")]);
        assert_eq!(l.to_string(), "[a,c]");
        let partial = Term::list_with_tail(vec![a("a")], x());
        assert_eq!(partial.display(&["T".to_string()]).to_string(), "[a|T]");
        assert_eq!(Term::nil().to_string(), "[]");
    }

    #[test]
    fn annotation_display() {
        assert_eq!(Annotation::from_ratio(1, 3).to_string(), "1/3");
        assert_eq!(Annotation::from_ratio(3, 10).to_string(), "0.3");
        assert_eq!(Annotation::from_ratio(1, 1).to_string(), "1");
        assert_eq!(Annotation::from_ratio(1, 16).to_string(), "0.0625");
    }

    #[test]
    fn clause_null_head_and_range_checks() {
        let head = |n: i64, d: i64| Head {
            atom: Atom::new("a", vec![]),
            annotation: Annotation::from_ratio(n, d),
        };
        let c = AnnotatedClause::new(RuleId(1), vec![head(3, 10)], vec![], vec![]).unwrap();
        assert_eq!(c.null, Some(Annotation::from_ratio(7, 10)));
        assert_eq!(c.probabilities(), vec![0.3, 0.7]);

        let thirds = vec![head(1, 3), head(1, 3), head(1, 3)];
        let c = AnnotatedClause::new(RuleId(1), thirds, vec![], vec![]).unwrap();
        assert!(c.null.is_none());

        assert!(AnnotatedClause::new(RuleId(1), vec![head(0, 1)], vec![], vec![]).is_err());
        assert!(AnnotatedClause::new(RuleId(1), vec![head(3, 5), head(3, 5)], vec![], vec![]).is_err());
    }

    #[test]
    fn composite_choice_consistency() {
        let mut k = CompositeChoice::new();
        let c = |h| AtomicChoice {
            rule: RuleId(2),
            grounding: vec![],
            head: h,
        };
        k.insert(c(1)).unwrap();
        k.insert(c(1)).unwrap();
        assert!(k.insert(c(2)).is_err());
        assert_eq!(k.len(), 1);
    }
}
