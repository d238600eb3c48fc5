//! Number of explanations, as an arbitrary-precision integer.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::{Algebra, AlgebraError, EqualitySite, GroundingLookup, Mode, Outcome};

#[derive(Debug, Default, Clone)]
pub struct Count;

impl Algebra for Count {
    type Value = BigUint;

    fn mode(&self) -> Mode {
        Mode::Count
    }

    fn idempotent_or(&self) -> bool {
        false
    }

    fn supports_negation(&self) -> bool {
        true
    }

    fn zero(&mut self) -> BigUint {
        BigUint::zero()
    }

    fn one(&mut self) -> BigUint {
        BigUint::one()
    }

    fn and(&mut self, a: &BigUint, b: &BigUint) -> Result<BigUint, AlgebraError> {
        Ok(a * b)
    }

    fn or(&mut self, a: &BigUint, b: &BigUint) -> Result<BigUint, AlgebraError> {
        Ok(a + b)
    }

    /// `1 - n`, defined for counts of zero and one only.
    fn not(&mut self, a: &BigUint) -> Result<BigUint, AlgebraError> {
        if a.is_zero() {
            Ok(BigUint::one())
        } else if a.is_one() {
            Ok(BigUint::zero())
        } else {
            Err(AlgebraError::CountNegation(a.to_string()))
        }
    }

    fn equality(&mut self, _: &EqualitySite<'_>) -> Result<BigUint, AlgebraError> {
        Ok(BigUint::one())
    }

    fn ret_prob(&mut self, v: &BigUint, _: GroundingLookup<'_>) -> Outcome {
        Outcome::Count(v.clone())
    }

    fn same(&self, a: &BigUint, b: &BigUint) -> bool {
        a == b
    }
}
