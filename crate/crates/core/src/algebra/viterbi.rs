//! Most probable explanation: values pair an explanation with its
//! probability; disjunction keeps the more probable side.

use std::fmt;
use std::rc::Rc;

use super::{Algebra, AlgebraError, EqualitySite, GroundingId, GroundingLookup, Mode, Outcome};
use crate::ast::{AtomicChoice, RuleId};

/// One atomic choice as recorded during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Choice {
    pub rule: RuleId,
    pub grounding: GroundingId,
    pub head: usize,
}

/// Explanations are ropes so that `and` appends in constant time.
#[derive(Debug)]
enum Rope {
    Leaf(Choice, f64),
    Cat(Rc<Rope>, Rc<Rope>),
}

#[derive(Clone)]
pub struct VitValue {
    probability: f64,
    /// `None` is the null explanation of the zero value; `Some(None)` is
    /// the empty explanation.
    explanation: Option<Option<Rc<Rope>>>,
}

impl VitValue {
    pub fn probability(&self) -> f64 {
        self.probability
    }

    pub fn is_null(&self) -> bool {
        self.explanation.is_none()
    }

    /// The explanation as a flat list, or `None` for the null explanation.
    pub fn choices(&self) -> Option<Vec<Choice>> {
        Some(self.leaves()?.into_iter().map(|(c, _)| c).collect())
    }

    /// Product of the choice probabilities taken left to right. Equal to
    /// [`probability`](Self::probability) up to rounding; this is the
    /// figure a replay of the explanation reproduces.
    pub fn replayed_probability(&self) -> f64 {
        match self.leaves() {
            None => 0.0,
            Some(ls) => ls.iter().fold(1.0, |acc, (_, p)| acc * p),
        }
    }

    fn leaves(&self) -> Option<Vec<(Choice, f64)>> {
        let rope = self.explanation.as_ref()?;
        let mut out = Vec::new();
        let mut stack: Vec<&Rope> = rope.iter().map(|r| &**r).collect();
        while let Some(r) = stack.pop() {
            match r {
                Rope::Leaf(c, p) => out.push((*c, *p)),
                Rope::Cat(a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
            }
        }
        Some(out)
    }
}

impl PartialEq for VitValue {
    fn eq(&self, other: &Self) -> bool {
        self.probability == other.probability && self.choices() == other.choices()
    }
}

impl fmt::Debug for VitValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.choices() {
            None => write!(f, "e(null,{})", self.probability),
            Some(cs) => {
                let items: Vec<String> = cs
                    .iter()
                    .map(|c| format!("({},#{},{})", c.rule, c.grounding.0, c.head))
                    .collect();
                write!(f, "e([{}],{})", items.join(","), self.probability)
            }
        }
    }
}

#[derive(Debug, Default, Clone)]
pub struct Viterbi;

impl Viterbi {
    /// A value made of a single atomic choice.
    pub fn leaf(choice: Choice, probability: f64) -> VitValue {
        VitValue {
            probability,
            explanation: Some(Some(Rc::new(Rope::Leaf(choice, probability)))),
        }
    }
}

impl Algebra for Viterbi {
    type Value = VitValue;

    fn mode(&self) -> Mode {
        Mode::Viterbi
    }

    fn idempotent_or(&self) -> bool {
        true
    }

    fn supports_negation(&self) -> bool {
        false
    }

    fn needs_grounding(&self) -> bool {
        true
    }

    fn zero(&mut self) -> VitValue {
        VitValue {
            probability: 0.0,
            explanation: None,
        }
    }

    fn one(&mut self) -> VitValue {
        VitValue {
            probability: 1.0,
            explanation: Some(None),
        }
    }

    fn and(&mut self, a: &VitValue, b: &VitValue) -> Result<VitValue, AlgebraError> {
        let explanation = match (&a.explanation, &b.explanation) {
            (Some(x), Some(y)) => Some(match (x, y) {
                (None, r) | (r, None) => r.clone(),
                (Some(l), Some(r)) => Some(Rc::new(Rope::Cat(Rc::clone(l), Rc::clone(r)))),
            }),
            // a conjunction with the null explanation has probability zero
            _ => None,
        };
        Ok(VitValue {
            probability: a.probability * b.probability,
            explanation,
        })
    }

    /// Keeps the first argument on ties.
    fn or(&mut self, a: &VitValue, b: &VitValue) -> Result<VitValue, AlgebraError> {
        Ok(if a.probability >= b.probability && !(a.is_null() && !b.is_null()) {
            a.clone()
        } else {
            b.clone()
        })
    }

    fn not(&mut self, _: &VitValue) -> Result<VitValue, AlgebraError> {
        Err(AlgebraError::NegationUnsupported(Mode::Viterbi))
    }

    fn equality(&mut self, site: &EqualitySite<'_>) -> Result<VitValue, AlgebraError> {
        let p = site.prob()?;
        let choice = Choice {
            rule: site.rule,
            grounding: site.grounding.unwrap_or(GroundingId(u32::MAX)),
            head: site.head,
        };
        Ok(Viterbi::leaf(choice, p))
    }

    fn ret_prob(&mut self, v: &VitValue, groundings: GroundingLookup<'_>) -> Outcome {
        Outcome::Viterbi {
            probability: v.replayed_probability(),
            explanation: v.choices().map(|cs| {
                cs.into_iter()
                    .map(|c| AtomicChoice {
                        rule: c.rule,
                        grounding: groundings(c.grounding),
                        head: c.head,
                    })
                    .collect()
            }),
        }
    }

    fn same(&self, a: &VitValue, b: &VitValue) -> bool {
        a.probability == b.probability && a.is_null() == b.is_null()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::laws;

    fn leaf(rule: usize, p: f64) -> VitValue {
        Viterbi::leaf(
            Choice {
                rule: RuleId(rule),
                grounding: GroundingId(0),
                head: 1,
            },
            p,
        )
    }

    #[test]
    fn or_keeps_the_first_on_ties() {
        let mut v = Viterbi;
        let (e1, e2) = (leaf(1, 0.5), leaf(2, 0.5));
        assert_eq!(v.or(&e1, &e2).unwrap(), e1);
        let e3 = leaf(3, 0.3);
        let e4 = leaf(4, 0.2);
        assert_eq!(v.or(&e4, &e3).unwrap(), e3);
    }

    #[test]
    fn and_multiplies_and_appends() {
        let mut v = Viterbi;
        let ab = v.and(&leaf(1, 0.5), &leaf(2, 0.25)).unwrap();
        assert_eq!(ab.probability(), 0.125);
        assert_eq!(ab.replayed_probability(), 0.125);
        let rules: Vec<usize> = ab.choices().unwrap().iter().map(|c| c.rule.0).collect();
        assert_eq!(rules, vec![1, 2]);
        let one = v.one();
        assert_eq!(v.and(&one, &ab).unwrap(), ab);
        let zero = v.zero();
        assert!(v.and(&zero, &ab).unwrap().is_null());
    }

    #[test]
    fn laws_hold() {
        let mut v = Viterbi;
        for x in [leaf(1, 0.3), v.one(), v.zero()] {
            laws::identity(&mut v, &x);
            assert!(laws::idempotence(&mut v, &x));
        }
    }

    #[test]
    fn long_explanations_flatten_without_recursion() {
        // dropping a deep rope recurses; build and drop it on a thread with room
        std::thread::Builder::new()
            .stack_size(256 << 20)
            .spawn(|| {
                let mut v = Viterbi;
                let mut acc = v.one();
                for i in 0..200_000 {
                    acc = v.and(&acc, &leaf(i, 1.0)).unwrap();
                }
                assert_eq!(acc.choices().unwrap().len(), 200_000);
            })
            .unwrap()
            .join()
            .unwrap();
    }
}
