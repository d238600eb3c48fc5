//! Probability under independence and exclusiveness: conjunction is
//! product and disjunction is sum.

use super::{Algebra, AlgebraError, EqualitySite, GroundingLookup, Mode, Outcome};

#[derive(Debug, Default, Clone)]
pub struct IndExc;

impl Algebra for IndExc {
    type Value = f64;

    fn mode(&self) -> Mode {
        Mode::IndExc
    }

    fn idempotent_or(&self) -> bool {
        false
    }

    fn supports_negation(&self) -> bool {
        true
    }

    fn zero(&mut self) -> f64 {
        0.0
    }

    fn one(&mut self) -> f64 {
        1.0
    }

    fn and(&mut self, a: &f64, b: &f64) -> Result<f64, AlgebraError> {
        Ok(a * b)
    }

    fn or(&mut self, a: &f64, b: &f64) -> Result<f64, AlgebraError> {
        Ok(a + b)
    }

    fn not(&mut self, a: &f64) -> Result<f64, AlgebraError> {
        Ok(1.0 - a)
    }

    fn equality(&mut self, site: &EqualitySite<'_>) -> Result<f64, AlgebraError> {
        site.prob()
    }

    fn ret_prob(&mut self, v: &f64, _: GroundingLookup<'_>) -> Outcome {
        Outcome::Probability(*v)
    }

    fn same(&self, a: &f64, b: &f64) -> bool {
        a == b
    }
}
