//! Holomorphic quotients that do not vanish at a base point.

use super::gauss::GaussRat;
use super::poly::BiPoly;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SmoothUnit {
    pub numerator: BiPoly,
    pub denominator: BiPoly,
    pub base_point: Vec<GaussRat>,
}

impl SmoothUnit {
    pub fn new(numerator: BiPoly, denominator: BiPoly, base_point: Vec<GaussRat>) -> Result<Self> {
        if !numerator.is_holomorphic() || !denominator.is_holomorphic() {
            return Err(Error::Argument("unit parts must be holomorphic".into()));
        }
        if base_point.len() != denominator.arity() || numerator.arity() != denominator.arity() {
            return Err(Error::Argument("unit arity mismatch".into()));
        }
        if denominator.eval_exact(&base_point).is_zero() {
            return Err(Error::Argument("unit denominator vanishes at the base point".into()));
        }
        Ok(SmoothUnit { numerator, denominator, base_point })
    }

    pub fn one(k: usize) -> Self {
        SmoothUnit {
            numerator: BiPoly::one(k),
            denominator: BiPoly::one(k),
            base_point: vec![GaussRat::zero(); k],
        }
    }

    pub fn value_at_base(&self) -> GaussRat {
        &self.numerator.eval_exact(&self.base_point) / &self.denominator.eval_exact(&self.base_point)
    }

    /// A unit in the strict sense: also nonzero at the base point.
    pub fn is_invertible(&self) -> bool {
        !self.numerator.eval_exact(&self.base_point).is_zero()
    }
}
