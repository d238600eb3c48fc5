//! Necessity degrees: min over conjunctions, max over alternatives.

use super::{Algebra, AlgebraError, EqualitySite, GroundingLookup, Mode, Outcome};

#[derive(Debug, Default, Clone)]
pub struct Poss;

impl Algebra for Poss {
    type Value = f64;

    fn mode(&self) -> Mode {
        Mode::Poss
    }

    fn idempotent_or(&self) -> bool {
        true
    }

    fn supports_negation(&self) -> bool {
        false
    }

    fn zero(&mut self) -> f64 {
        0.0
    }

    fn one(&mut self) -> f64 {
        1.0
    }

    fn and(&mut self, a: &f64, b: &f64) -> Result<f64, AlgebraError> {
        Ok(a.min(*b))
    }

    fn or(&mut self, a: &f64, b: &f64) -> Result<f64, AlgebraError> {
        Ok(a.max(*b))
    }

    fn not(&mut self, _: &f64) -> Result<f64, AlgebraError> {
        Err(AlgebraError::NegationInPossMode)
    }

    /// The necessity bound is the first annotation, whatever the head.
    fn equality(&mut self, site: &EqualitySite<'_>) -> Result<f64, AlgebraError> {
        site.probs.first().copied().ok_or(AlgebraError::EqualityIndex {
            head: site.head,
            len: 0,
        })
    }

    fn ret_prob(&mut self, v: &f64, _: GroundingLookup<'_>) -> Outcome {
        Outcome::Necessity(*v)
    }

    fn same(&self, a: &f64, b: &f64) -> bool {
        a == b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::laws;
    use crate::ast::RuleId;

    #[test]
    fn max_min() {
        let mut p = Poss;
        assert_eq!(p.or(&0.2, &0.3).unwrap(), 0.3);
        assert_eq!(p.and(&0.3, &0.8).unwrap(), 0.3);
        assert_eq!(p.not(&0.3), Err(AlgebraError::NegationInPossMode));
        let site = EqualitySite {
            rule: RuleId(1),
            head: 1,
            probs: &[0.3, 0.7],
            var: None,
            grounding: None,
        };
        assert_eq!(p.equality(&site).unwrap(), 0.3);
        for x in [0.0, 0.4, 1.0] {
            laws::identity(&mut p, &x);
            assert!(laws::idempotence(&mut p, &x));
        }
    }
}
