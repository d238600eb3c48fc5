//! Exact probability through binary decision diagrams.

use super::{Algebra, AlgebraError, EqualitySite, GroundingLookup, Mode, Outcome};
use crate::bdd::{BddHandle, BddManager, MvVar};

#[derive(Debug, Default)]
pub struct Prob {
    manager: BddManager,
}

impl Prob {
    pub fn new(node_limit: Option<usize>) -> Self {
        Prob {
            manager: BddManager::new().with_node_limit(node_limit),
        }
    }

    /// A manager that also gives up on diagram operations after `deadline`.
    pub fn with_deadline(self, deadline: Option<std::time::Instant>) -> Self {
        Prob {
            manager: self.manager.with_deadline(deadline),
        }
    }

    pub fn manager(&self) -> &BddManager {
        &self.manager
    }

    pub fn manager_mut(&mut self) -> &mut BddManager {
        &mut self.manager
    }
}

impl Algebra for Prob {
    type Value = BddHandle;

    fn mode(&self) -> Mode {
        Mode::Prob
    }

    fn idempotent_or(&self) -> bool {
        true
    }

    fn supports_negation(&self) -> bool {
        true
    }

    fn zero(&mut self) -> BddHandle {
        self.manager.zero()
    }

    fn one(&mut self) -> BddHandle {
        self.manager.one()
    }

    fn and(&mut self, a: &BddHandle, b: &BddHandle) -> Result<BddHandle, AlgebraError> {
        Ok(self.manager.and(*a, *b)?)
    }

    fn or(&mut self, a: &BddHandle, b: &BddHandle) -> Result<BddHandle, AlgebraError> {
        Ok(self.manager.or(*a, *b)?)
    }

    fn not(&mut self, a: &BddHandle) -> Result<BddHandle, AlgebraError> {
        Ok(self.manager.not(*a)?)
    }

    fn add_var(&mut self, probs: &[f64]) -> Result<MvVar, AlgebraError> {
        Ok(self.manager.add_var(probs)?)
    }

    fn equality(&mut self, site: &EqualitySite<'_>) -> Result<BddHandle, AlgebraError> {
        let var = site.var.ok_or(AlgebraError::MissingVar(Mode::Prob))?;
        Ok(self.manager.equality(var, site.head)?)
    }

    fn ret_prob(&mut self, v: &BddHandle, _: GroundingLookup<'_>) -> Outcome {
        Outcome::Probability(self.manager.ret_prob(*v).unwrap_or(f64::NAN))
    }

    fn same(&self, a: &BddHandle, b: &BddHandle) -> bool {
        a == b
    }

    fn to_dot(&self, v: &BddHandle) -> Option<String> {
        self.manager.to_dot(*v).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::laws;
    use crate::ast::RuleId;

    fn site(var: MvVar, head: usize) -> EqualitySite<'static> {
        EqualitySite {
            rule: RuleId(1),
            head,
            probs: &[],
            var: Some(var),
            grounding: None,
        }
    }

    #[test]
    fn excluded_middle() {
        let mut p = Prob::default();
        let v = p.add_var(&[0.3, 0.7]).unwrap();
        let e = p.equality(&site(v, 1)).unwrap();
        let ne = p.not(&e).unwrap();
        let all = p.or(&e, &ne).unwrap();
        assert_eq!(p.ret_prob(&all, &|_| Vec::new()), Outcome::Probability(1.0));
        laws::identity(&mut p, &e);
        assert!(laws::idempotence(&mut p, &e));
    }

    #[test]
    fn equality_without_variable_is_an_error() {
        let mut p = Prob::default();
        let bad = EqualitySite {
            rule: RuleId(1),
            head: 1,
            probs: &[0.5, 0.5],
            var: None,
            grounding: None,
        };
        assert_eq!(p.equality(&bad), Err(AlgebraError::MissingVar(Mode::Prob)));
    }
}
