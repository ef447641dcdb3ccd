//! Exact Gaussian rationals `a + b·i` with `a, b ∈ ℚ`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct GaussRat {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussRat {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussRat { re, im }
    }

    pub fn from_int(n: i64) -> Self {
        GaussRat::new(BigRational::from_integer(BigInt::from(n)), BigRational::zero())
    }

    pub fn from_ratio(p: i64, q: i64) -> Self {
        GaussRat::new(
            BigRational::new(BigInt::from(p), BigInt::from(q)),
            BigRational::zero(),
        )
    }

    pub fn from_rational(r: BigRational) -> Self {
        GaussRat::new(r, BigRational::zero())
    }

    pub fn i() -> Self {
        GaussRat::new(BigRational::zero(), BigRational::one())
    }

    pub fn zero() -> Self {
        GaussRat::new(BigRational::zero(), BigRational::zero())
    }

    pub fn one() -> Self {
        GaussRat::from_int(1)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussRat::new(self.re.clone(), -self.im.clone())
    }

    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = self.norm_sqr();
        Some(GaussRat::new(&self.re / &n, -&self.im / &n))
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = GaussRat::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    /// The integer value if this is a real integer.
    pub fn as_integer(&self) -> Option<BigInt> {
        if self.im.is_zero() && self.re.is_integer() {
            Some(self.re.to_integer())
        } else {
            None
        }
    }
}

impl Default for GaussRat {
    fn default() -> Self {
        GaussRat::zero()
    }
}

fn fmt_rat(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Canonical text: `3/2`, `-1/4*i`, `(3/2-1/4*i)`. Parenthesized when both parts are nonzero.
impl fmt::Display for GaussRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", fmt_rat(&self.re)),
            (true, false) => {
                if self.im.is_one() {
                    write!(f, "i")
                } else if (-self.im.clone()).is_one() {
                    write!(f, "-i")
                } else {
                    write!(f, "{}*i", fmt_rat(&self.im))
                }
            }
            (false, false) => {
                let sign = if self.im.is_negative() { '-' } else { '+' };
                let abs = self.im.abs();
                if abs.is_one() {
                    write!(f, "({}{}i)", fmt_rat(&self.re), sign)
                } else {
                    write!(f, "({}{}{}*i)", fmt_rat(&self.re), sign, fmt_rat(&abs))
                }
            }
        }
    }
}

impl<'a> Add<&'a GaussRat> for &'a GaussRat {
    type Output = GaussRat;
    fn add(self, o: &GaussRat) -> GaussRat {
        GaussRat::new(&self.re + &o.re, &self.im + &o.im)
    }
}

impl<'a> Sub<&'a GaussRat> for &'a GaussRat {
    type Output = GaussRat;
    fn sub(self, o: &GaussRat) -> GaussRat {
        GaussRat::new(&self.re - &o.re, &self.im - &o.im)
    }
}

impl<'a> Mul<&'a GaussRat> for &'a GaussRat {
    type Output = GaussRat;
    fn mul(self, o: &GaussRat) -> GaussRat {
        GaussRat::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }
}

impl<'a> Div<&'a GaussRat> for &'a GaussRat {
    type Output = GaussRat;
    fn div(self, o: &GaussRat) -> GaussRat {
        self * &o.inv().expect("division by zero Gaussian rational")
    }
}

impl Add for GaussRat {
    type Output = GaussRat;
    fn add(self, o: GaussRat) -> GaussRat {
        &self + &o
    }
}

impl Sub for GaussRat {
    type Output = GaussRat;
    fn sub(self, o: GaussRat) -> GaussRat {
        &self - &o
    }
}

impl Mul for GaussRat {
    type Output = GaussRat;
    fn mul(self, o: GaussRat) -> GaussRat {
        &self * &o
    }
}

impl Div for GaussRat {
    type Output = GaussRat;
    fn div(self, o: GaussRat) -> GaussRat {
        &self / &o
    }
}

impl Neg for GaussRat {
    type Output = GaussRat;
    fn neg(self) -> GaussRat {
        GaussRat::new(-self.re, -self.im)
    }
}

impl<'a> Neg for &'a GaussRat {
    type Output = GaussRat;
    fn neg(self) -> GaussRat {
        GaussRat::new(-self.re.clone(), -self.im.clone())
    }
}

impl AddAssign<&GaussRat> for GaussRat {
    fn add_assign(&mut self, o: &GaussRat) {
        self.re += &o.re;
        self.im += &o.im;
    }
}

impl SubAssign<&GaussRat> for GaussRat {
    fn sub_assign(&mut self, o: &GaussRat) {
        self.re -= &o.re;
        self.im -= &o.im;
    }
}

impl MulAssign<&GaussRat> for GaussRat {
    fn mul_assign(&mut self, o: &GaussRat) {
        *self = &*self * o;
    }
}

impl From<i64> for GaussRat {
    fn from(n: i64) -> Self {
        GaussRat::from_int(n)
    }
}
