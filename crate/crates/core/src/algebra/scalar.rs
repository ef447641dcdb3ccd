//! Exact numbers of the form `c * (2 pi i)^p` and formal sums of them.
//!
//! The constant `2 pi i` is written `tau` in text form.

use super::gauss::GaussRat;
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Serialize, Serializer};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Scalar {
    pub value: GaussRat,
    pub tau_power: i32,
}

impl Scalar {
    pub fn new(value: GaussRat, tau_power: i32) -> Self {
        Scalar { value, tau_power }
    }

    pub fn from_gauss(value: GaussRat) -> Self {
        Scalar { value, tau_power: 0 }
    }

    pub fn tau_pow(p: i32) -> Self {
        Scalar { value: GaussRat::one(), tau_power: p }
    }

    pub fn one() -> Self {
        Scalar::tau_pow(0)
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn mul(&self, o: &Scalar) -> Scalar {
        Scalar { value: &self.value * &o.value, tau_power: self.tau_power + o.tau_power }
    }

    pub fn neg(&self) -> Scalar {
        Scalar { value: -&self.value, tau_power: self.tau_power }
    }

    pub fn inv(&self) -> Option<Scalar> {
        Some(Scalar { value: self.value.inv()?, tau_power: -self.tau_power })
    }

    pub fn to_c64(&self) -> Complex64 {
        self.value.to_c64() * tau_c64().powi(self.tau_power)
    }
}

pub fn tau_c64() -> Complex64 {
    Complex64::new(0.0, 2.0 * std::f64::consts::PI)
}

fn write_term(f: &mut fmt::Formatter<'_>, c: &GaussRat, p: i32) -> fmt::Result {
    if p == 0 {
        return write!(f, "{c}");
    }
    let tau = if p == 1 { "tau".to_string() } else { format!("tau^{p}") };
    if c.is_one() {
        write!(f, "{tau}")
    } else if (-c).is_one() {
        write!(f, "-{tau}")
    } else {
        write!(f, "{c}*{tau}")
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, &self.value, self.tau_power)
    }
}

/// Finite formal sum `sum_p c_p * tau^p`; zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct ScalarSum {
    terms: BTreeMap<i32, GaussRat>,
}

impl ScalarSum {
    pub fn zero() -> Self {
        ScalarSum::default()
    }

    pub fn from_scalar(s: &Scalar) -> Self {
        let mut r = ScalarSum::zero();
        r.add_scalar(s);
        r
    }

    pub fn from_gauss(c: GaussRat) -> Self {
        ScalarSum::from_scalar(&Scalar::from_gauss(c))
    }

    pub fn from_int(n: i64) -> Self {
        ScalarSum::from_gauss(GaussRat::from_int(n))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, &GaussRat)> {
        self.terms.iter().map(|(p, c)| (*p, c))
    }

    pub fn coeff(&self, p: i32) -> GaussRat {
        self.terms.get(&p).cloned().unwrap_or_else(GaussRat::zero)
    }

    pub fn add_scalar(&mut self, s: &Scalar) {
        if s.is_zero() {
            return;
        }
        let e = self.terms.entry(s.tau_power).or_insert_with(GaussRat::zero);
        *e += &s.value;
        if e.is_zero() {
            self.terms.remove(&s.tau_power);
        }
    }

    pub fn add(&self, o: &ScalarSum) -> ScalarSum {
        let mut r = self.clone();
        for (p, c) in &o.terms {
            r.add_scalar(&Scalar::new(c.clone(), *p));
        }
        r
    }

    pub fn sub(&self, o: &ScalarSum) -> ScalarSum {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> ScalarSum {
        ScalarSum { terms: self.terms.iter().map(|(p, c)| (*p, -c)).collect() }
    }

    pub fn mul(&self, o: &ScalarSum) -> ScalarSum {
        let mut r = ScalarSum::zero();
        for (p, c) in &self.terms {
            for (q, d) in &o.terms {
                r.add_scalar(&Scalar::new(c * d, p + q));
            }
        }
        r
    }

    pub fn mul_scalar(&self, s: &Scalar) -> ScalarSum {
        self.mul(&ScalarSum::from_scalar(s))
    }

    /// Single-term sums only.
    pub fn as_scalar(&self) -> Option<Scalar> {
        match self.terms.len() {
            0 => Some(Scalar::new(GaussRat::zero(), 0)),
            1 => {
                let (p, c) = self.terms.iter().next().unwrap();
                Some(Scalar::new(c.clone(), *p))
            }
            _ => None,
        }
    }

    pub fn inv(&self) -> Option<ScalarSum> {
        let s = self.as_scalar()?;
        Some(ScalarSum::from_scalar(&s.inv()?))
    }

    pub fn to_c64(&self) -> Complex64 {
        self.terms
            .iter()
            .map(|(p, c)| c.to_c64() * tau_c64().powi(*p))
            .sum()
    }
}

impl fmt::Display for ScalarSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (p, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write_term(f, c, *p)?;
        }
        Ok(())
    }
}

impl FromStr for ScalarSum {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let e = super::text::parse_expr(s)?;
        super::text::to_scalar_sum(&e)
    }
}

impl FromStr for Scalar {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let sum: ScalarSum = s.parse()?;
        sum.as_scalar()
            .ok_or_else(|| Error::Argument(format!("`{s}` mixes powers of tau")))
    }
}

impl Serialize for ScalarSum {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_powers_combine() {
        let a = Scalar::new(GaussRat::from_ratio(1, 2), 1);
        let b = Scalar::new(GaussRat::from_int(4), 2);
        assert_eq!(a.mul(&b), Scalar::new(GaussRat::from_int(2), 3));
    }

    #[test]
    fn display_forms() {
        let mut s = ScalarSum::zero();
        s.add_scalar(&Scalar::new(GaussRat::from_int(2), 2));
        s.add_scalar(&Scalar::new(-GaussRat::one(), -1));
        s.add_scalar(&Scalar::new(GaussRat::new((1, 2).into_rat(), (3, 1).into_rat()), 0));
        assert_eq!(s.to_string(), "-tau^-1 + (1/2+3*i) + 2*tau^2");
    }

    trait IntoRat {
        fn into_rat(self) -> num_rational::BigRational;
    }
    impl IntoRat for (i64, i64) {
        fn into_rat(self) -> num_rational::BigRational {
            num_rational::BigRational::new(self.0.into(), self.1.into())
        }
    }

    #[test]
    fn numeric_value() {
        let s = ScalarSum::from_scalar(&Scalar::tau_pow(2));
        let v = s.to_c64();
        assert!((v.re + 4.0 * std::f64::consts::PI.powi(2)).abs() < 1e-12);
    }
}
