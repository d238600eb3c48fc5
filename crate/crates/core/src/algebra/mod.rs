//! Uncertainty algebras: the operations the instrumented clauses call.

mod count;
mod indexc;
mod poss;
mod prob;
mod viterbi;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use thiserror::Error;

use crate::ast::{AtomicChoice, RuleId, Term};
use crate::bdd::{BddError, MvVar};
use crate::parser::ParseMode;
use crate::transform::Flavor;

pub use count::Count;
pub use indexc::IndExc;
pub use poss::Poss;
pub use prob::Prob;
pub use viterbi::{Choice, Viterbi, VitValue};

/// The five supported algebras.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Prob,
    IndExc,
    Count,
    Viterbi,
    Poss,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::Prob, Mode::IndExc, Mode::Count, Mode::Viterbi, Mode::Poss];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Prob => "prob",
            Mode::IndExc => "ind-exc",
            Mode::Count => "count",
            Mode::Viterbi => "viterbi",
            Mode::Poss => "poss",
        }
    }

    pub fn flavor(self) -> Flavor {
        match self {
            Mode::Prob => Flavor::General,
            _ => Flavor::Simplified,
        }
    }

    /// How program text for this mode is read.
    pub fn parse_mode(self) -> ParseMode {
        match self {
            Mode::Poss => ParseMode::Possibilistic,
            _ => ParseMode::Lpad,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown mode {0:?} (expected prob, ind-exc, count, viterbi or poss)")]
pub struct UnknownMode(pub String);

impl FromStr for Mode {
    type Err = UnknownMode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| UnknownMode(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error(transparent)]
    Bdd(#[from] BddError),
    #[error("negation is not available in {0} mode")]
    NegationUnsupported(Mode),
    #[error("negation is not available in poss mode")]
    NegationInPossMode,
    #[error("cannot negate a count of {0}")]
    CountNegation(String),
    #[error("head index {head} out of range for {len} annotations")]
    EqualityIndex { head: usize, len: usize },
    #[error("equality in {0} mode needs a random variable")]
    MissingVar(Mode),
    #[error("{0} mode does not create random variables")]
    NoRandomVariables(Mode),
}

/// Identifier of a clause grounding recorded by the engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundingId(pub u32);

/// Everything an `equality` step can see.
#[derive(Debug, Clone, Copy)]
pub struct EqualitySite<'a> {
    pub rule: RuleId,
    /// 1-based head index.
    pub head: usize,
    /// Annotations of all heads, null included.
    pub probs: &'a [f64],
    /// Random variable from `get_var_n`, in the general flavor.
    pub var: Option<MvVar>,
    /// Ground clause variables, when the algebra asks for them.
    pub grounding: Option<GroundingId>,
}

impl EqualitySite<'_> {
    pub(crate) fn prob(&self) -> Result<f64, AlgebraError> {
        self.head
            .checked_sub(1)
            .and_then(|i| self.probs.get(i))
            .copied()
            .ok_or(AlgebraError::EqualityIndex {
                head: self.head,
                len: self.probs.len(),
            })
    }
}

/// Final result for one answer.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Probability(f64),
    Count(BigUint),
    Viterbi {
        probability: f64,
        /// `None` when the goal has no derivation.
        explanation: Option<Vec<AtomicChoice>>,
    },
    Necessity(f64),
}

impl Outcome {
    /// The numeric value; counts are converted to floating point.
    pub fn as_f64(&self) -> f64 {
        match self {
            Outcome::Probability(p) | Outcome::Necessity(p) => *p,
            Outcome::Viterbi { probability, .. } => *probability,
            Outcome::Count(c) => num_traits::ToPrimitive::to_f64(c).unwrap_or(f64::INFINITY),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Count(c) => write!(f, "{c}"),
            other => f.write_str(&crate::format::general(other.as_f64())),
        }
    }
}

/// Resolves grounding ids to their ground clause variables.
pub type GroundingLookup<'a> = &'a dyn Fn(GroundingId) -> Vec<Term>;

/// An uncertainty algebra. Values form a commutative monoid under `or`
/// with identity `zero`, and a monoid under `and` with identity `one`.
pub trait Algebra {
    type Value: Clone + fmt::Debug;

    fn mode(&self) -> Mode;

    fn flavor(&self) -> Flavor {
        self.mode().flavor()
    }

    /// `or(x, x) = x`; recursive call cycles are evaluated to a fixpoint
    /// only under idempotent joins.
    fn idempotent_or(&self) -> bool;

    fn supports_negation(&self) -> bool;

    /// Whether equality steps need the clause grounding.
    fn needs_grounding(&self) -> bool {
        false
    }

    fn zero(&mut self) -> Self::Value;
    fn one(&mut self) -> Self::Value;
    fn and(&mut self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value, AlgebraError>;
    fn or(&mut self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value, AlgebraError>;
    fn not(&mut self, a: &Self::Value) -> Result<Self::Value, AlgebraError>;

    /// Creates a random variable with the given distribution.
    fn add_var(&mut self, probs: &[f64]) -> Result<MvVar, AlgebraError> {
        let _ = probs;
        Err(AlgebraError::NoRandomVariables(self.mode()))
    }

    fn equality(&mut self, site: &EqualitySite<'_>) -> Result<Self::Value, AlgebraError>;

    fn ret_prob(&mut self, v: &Self::Value, groundings: GroundingLookup<'_>) -> Outcome;

    /// Whether two values are indistinguishable for fixpoint detection.
    fn same(&self, a: &Self::Value, b: &Self::Value) -> bool;

    /// Graphviz rendering of a value, where that makes sense.
    fn to_dot(&self, v: &Self::Value) -> Option<String> {
        let _ = v;
        None
    }
}

#[cfg(test)]
pub(crate) mod laws {
    //! Generic checks of the algebra contract, shared by every instance.

    use super::*;

    pub fn identity<A: Algebra>(alg: &mut A, x: &A::Value) {
        let zero = alg.zero();
        let one = alg.one();
        let l = alg.or(&zero, x).unwrap();
        assert!(alg.same(&l, x), "or(zero, x) != x for {x:?}");
        let r = alg.and(&one, x).unwrap();
        assert!(alg.same(&r, x), "and(one, x) != x for {x:?}");
    }

    pub fn idempotence<A: Algebra>(alg: &mut A, x: &A::Value) -> bool {
        let xx = alg.or(x, x).unwrap();
        alg.same(&xx, x)
    }

    #[test]
    fn mode_names_round_trip() {
        for m in Mode::ALL {
            assert_eq!(m.name().parse::<Mode>().unwrap(), m);
        }
        assert!("bogus".parse::<Mode>().is_err());
    }
}
