//! Exact arithmetic in Q(sqrt q).

use alloc::format;
use alloc::string::String;
use core::fmt;
use core::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// `rat + surd * sqrt(q)`.
///
/// The binary operators panic when the two operands disagree on `q`;
/// use the `try_*` methods when that can legitimately happen.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Scalar {
    rat: BigRational,
    surd: BigRational,
    q: u32,
}

fn prime_power(q: u32) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let mut p = 2;
    while p * p <= q && !q.is_multiple_of(p) {
        p += 1;
    }
    if !q.is_multiple_of(p) {
        return Some((q, 1));
    }
    let (mut m, mut k) = (q, 0);
    while m % p == 0 {
        m /= p;
        k += 1;
    }
    (m == 1).then_some((p, k))
}

/// Checks that `q` is a prime power that is not a perfect square.
pub fn check_ground(q: u32) -> Result<(u32, u32)> {
    match prime_power(q) {
        Some((p, k)) if k % 2 == 1 => Ok((p, k)),
        _ => Err(Error::BadGround(q)),
    }
}

impl Scalar {
    pub fn new(q: u32, rat: BigRational, surd: BigRational) -> Result<Self> {
        check_ground(q)?;
        Ok(Scalar { rat, surd, q })
    }

    pub(crate) fn raw(q: u32, rat: BigRational, surd: BigRational) -> Self {
        Scalar { rat, surd, q }
    }

    pub fn zero(q: u32) -> Self {
        Self::raw(q, BigRational::zero(), BigRational::zero())
    }

    pub fn one(q: u32) -> Self {
        Self::from_int(q, 1)
    }

    pub fn from_int(q: u32, n: i64) -> Self {
        Self::raw(q, BigRational::from_integer(BigInt::from(n)), BigRational::zero())
    }

    pub fn from_bigint(q: u32, n: BigInt) -> Self {
        Self::raw(q, BigRational::from_integer(n), BigRational::zero())
    }

    pub fn from_ratio(q: u32, num: i64, den: i64) -> Self {
        Self::raw(
            q,
            BigRational::new(BigInt::from(num), BigInt::from(den)),
            BigRational::zero(),
        )
    }

    pub fn from_rational(q: u32, r: BigRational) -> Self {
        Self::raw(q, r, BigRational::zero())
    }

    pub fn ground_q(&self) -> u32 {
        self.q
    }

    pub fn rat_part(&self) -> &BigRational {
        &self.rat
    }

    pub fn surd_part(&self) -> &BigRational {
        &self.surd
    }

    pub fn is_zero(&self) -> bool {
        self.rat.is_zero() && self.surd.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.rat.is_one() && self.surd.is_zero()
    }

    /// `sqrt(q)`.
    pub fn v(q: u32) -> Self {
        Self::raw(q, BigRational::zero(), BigRational::one())
    }

    /// `sqrt(q)^k`.
    pub fn v_power(q: u32, k: i64) -> Self {
        let e = k.unsigned_abs();
        let half = BigInt::from(q).pow((e / 2) as u32);
        let mag = if e.is_multiple_of(2) {
            Self::from_bigint(q, half)
        } else {
            Self::raw(q, BigRational::zero(), BigRational::from_integer(half))
        };
        if k >= 0 {
            mag
        } else {
            mag.inv().expect("nonzero power")
        }
    }

    /// `q^k` as a rational scalar.
    pub fn q_power(q: u32, k: i64) -> Self {
        Self::v_power(q, 2 * k)
    }

    /// The quantum integer `[m]` at `v = sqrt(q)`.
    pub fn quantum_int(q: u32, m: i64) -> Self {
        let num = &Self::v_power(q, m) - &Self::v_power(q, -m);
        let den = &Self::v(q) - &Self::v_power(q, -1);
        &num / &den
    }

    /// `prod_{i=1..l} (1 - q^{i d})`.
    pub fn n_factor(q: u32, l: u32, d: u32) -> Self {
        let mut acc = BigInt::one();
        for i in 1..=l {
            acc *= BigInt::one() - BigInt::from(q).pow(i * d);
        }
        Self::from_bigint(q, acc)
    }

    fn same(&self, o: &Self) -> Result<()> {
        if self.q == o.q {
            Ok(())
        } else {
            Err(Error::MismatchedGround(self.q, o.q))
        }
    }

    pub fn try_add(&self, o: &Self) -> Result<Self> {
        self.same(o)?;
        Ok(Self::raw(self.q, &self.rat + &o.rat, &self.surd + &o.surd))
    }

    pub fn try_sub(&self, o: &Self) -> Result<Self> {
        self.same(o)?;
        Ok(Self::raw(self.q, &self.rat - &o.rat, &self.surd - &o.surd))
    }

    pub fn try_mul(&self, o: &Self) -> Result<Self> {
        self.same(o)?;
        let qq = BigRational::from_integer(BigInt::from(self.q));
        let rat = &self.rat * &o.rat + &self.surd * &o.surd * qq;
        let surd = &self.rat * &o.surd + &self.surd * &o.rat;
        Ok(Self::raw(self.q, rat, surd))
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let qq = BigRational::from_integer(BigInt::from(self.q));
        let norm = &self.rat * &self.rat - &self.surd * &self.surd * qq;
        Ok(Self::raw(self.q, &self.rat / &norm, -(&self.surd / &norm)))
    }

    pub fn try_div(&self, o: &Self) -> Result<Self> {
        self.same(o)?;
        self.try_mul(&o.inv()?)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(self.q);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn scale_int(&self, n: i64) -> Self {
        let f = BigRational::from_integer(BigInt::from(n));
        Self::raw(self.q, &self.rat * &f, &self.surd * &f)
    }
}

fn fmt_rat(r: &BigRational) -> String {
    if r.is_integer() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.rat.is_zero(), self.surd.is_zero()) {
            (true, true) => write!(f, "0"),
            (false, true) => write!(f, "{}", fmt_rat(&self.rat)),
            (true, false) => write!(f, "{}*sqrt({})", fmt_rat(&self.surd), self.q),
            (false, false) => {
                if self.surd.is_negative() {
                    write!(f, "{} - {}*sqrt({})", fmt_rat(&self.rat), fmt_rat(&-self.surd.clone()), self.q)
                } else {
                    write!(f, "{} + {}*sqrt({})", fmt_rat(&self.rat), fmt_rat(&self.surd), self.q)
                }
            }
        }
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $try:ident) => {
        impl $tr<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $m(self, o: &Scalar) -> Scalar {
                self.$try(o).expect("scalar arithmetic")
            }
        }
        impl $tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, o: Scalar) -> Scalar {
                (&self).$try(&o).expect("scalar arithmetic")
            }
        }
        impl $tr<&Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, o: &Scalar) -> Scalar {
                (&self).$try(o).expect("scalar arithmetic")
            }
        }
    };
}

binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);
binop!(Div, div, try_div);

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, o: &Scalar) {
        assert_eq!(self.q, o.q, "mismatched ground_q");
        self.rat += &o.rat;
        self.surd += &o.surd;
    }
}

impl SubAssign<&Scalar> for Scalar {
    fn sub_assign(&mut self, o: &Scalar) {
        assert_eq!(self.q, o.q, "mismatched ground_q");
        self.rat -= &o.rat;
        self.surd -= &o.surd;
    }
}

impl MulAssign<&Scalar> for Scalar {
    fn mul_assign(&mut self, o: &Scalar) {
        *self = &*self * o;
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar::raw(self.q, -self.rat, -self.surd)
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar::raw(self.q, -self.rat.clone(), -self.surd.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basics() {
        let v = Scalar::v(3);
        assert_eq!(&v * &v, Scalar::from_int(3, 3));
        assert!(Scalar::new(4, BigRational::zero(), BigRational::zero()).is_err());
        assert!(check_ground(8).is_ok());
        assert!(check_ground(6).is_err());
        assert_eq!(Scalar::v_power(3, -2), Scalar::from_ratio(3, 1, 3));
        assert_eq!(Scalar::v_power(3, 0), Scalar::one(3));
    }

    #[test]
    fn rationalize() {
        // (s - 1/s) * s = q - 1, so 1/(s - 1/s) = s/(q-1)
        let s = Scalar::v(2);
        let d = &s - &Scalar::v_power(2, -1);
        assert_eq!(&d * &s, Scalar::from_int(2, 1));
        assert_eq!(Scalar::one(2) / d, Scalar::v(2));
    }

    #[test]
    fn quantum_ints() {
        assert_eq!(Scalar::quantum_int(2, 1), Scalar::one(2));
        assert!(Scalar::quantum_int(2, 0).is_zero());
        let expect = Scalar::raw(2, BigRational::zero(), BigRational::new(3.into(), 2.into()));
        assert_eq!(Scalar::quantum_int(2, 2), expect);
        for m in -10..=10 {
            assert_eq!(Scalar::quantum_int(5, -m), -Scalar::quantum_int(5, m));
        }
    }

    #[test]
    fn n_factors() {
        assert_eq!(Scalar::n_factor(2, 0, 1), Scalar::one(2));
        assert_eq!(Scalar::n_factor(2, 2, 1), Scalar::from_int(2, 3));
        assert_eq!(Scalar::n_factor(2, 1, 2), Scalar::from_int(2, -3));
    }

    #[test]
    fn mismatch() {
        assert_eq!(
            Scalar::one(2).try_add(&Scalar::one(3)),
            Err(Error::MismatchedGround(2, 3))
        );
        assert_eq!(Scalar::zero(2).inv(), Err(Error::DivisionByZero));
    }

    #[test]
    fn render() {
        let x = Scalar::from_ratio(2, 1, 2) - Scalar::v(2).scale_int(3);
        assert_eq!(alloc::format!("{}", x), "1/2 - 3*sqrt(2)");
    }
}
