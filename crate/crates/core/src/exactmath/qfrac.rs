//! Formal fractions of Laurent polynomials in `q`.
//!
//! The graphical-calculus maps introduce denominators `[2]` and
//! `q^-1 + q^-3` only, so a full rational-function field is unnecessary.
//! Values are kept in a normal form num/den where the denominator is a
//! primitive polynomial with nonzero constant term and positive leading
//! coefficient (a power of `q^2 + 1` in all reachable cases).

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_traits::{One, Zero};

use super::{LaurentPoly, Rat};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QFrac {
    num: LaurentPoly,
    den: LaurentPoly,
}

impl QFrac {
    pub fn new(num: LaurentPoly, den: LaurentPoly) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let mut f = QFrac { num, den };
        f.reduce();
        f
    }

    pub fn from_poly(p: LaurentPoly) -> Self {
        QFrac {
            num: p,
            den: LaurentPoly::one(),
        }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_poly(LaurentPoly::from_int(n))
    }

    pub fn q_pow(k: i64) -> Self {
        Self::from_poly(LaurentPoly::q_pow(k))
    }

    pub fn numer(&self) -> &LaurentPoly {
        &self.num
    }

    pub fn denom(&self) -> &LaurentPoly {
        &self.den
    }

    fn reduce(&mut self) {
        if self.num.is_zero() {
            self.den = LaurentPoly::one();
            return;
        }
        let g = self.num.gcd(&self.den);
        if !g.is_one() {
            self.num = self.num.div_exact(&g).expect("gcd divides numerator");
            self.den = self.den.div_exact(&g).expect("gcd divides denominator");
        }
        // Normalize the denominator: min exponent 0, primitive, positive
        // leading coefficient. Unit and scalar factors move to the numerator.
        let norm = self.den.normalize_primitive();
        let unit = self.den.div_exact(&norm).expect("normalization is a unit multiple");
        // unit = c * q^k for a rational c != 0
        let k = unit.min_exp().expect("unit is nonzero");
        let c = unit.coeff(k);
        debug_assert_eq!(unit, LaurentPoly::monomial(k, c.clone()));
        self.num = self.num.shift(-k).scale(&(Rat::one() / c));
        self.den = norm;
    }

    /// Value at `q = 1`; `None` when the denominator vanishes there.
    pub fn eval_at_one(&self) -> Option<Rat> {
        let d = self.den.eval_at_one();
        if d.is_zero() {
            return None;
        }
        Some(self.num.eval_at_one() / d)
    }

    /// True when the denominator is a power of `q^2 + 1` (the normalized
    /// form of both `[2]` and `q^-1 + q^-3`), including the trivial power.
    pub fn denominator_is_q2_plus_one_power(&self) -> bool {
        let base = LaurentPoly::q_pow(2) + LaurentPoly::one();
        let mut d = self.den.clone();
        while !d.is_one() {
            match d.div_exact(&base) {
                Some(q) => d = q,
                None => return false,
            }
        }
        true
    }

    pub fn recip(&self) -> QFrac {
        assert!(!self.num.is_zero(), "division by zero");
        QFrac::new(self.den.clone(), self.num.clone())
    }

    pub fn div(&self, other: &QFrac) -> QFrac {
        self * &other.recip()
    }
}

impl Zero for QFrac {
    fn zero() -> Self {
        Self::from_poly(LaurentPoly::zero_poly())
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}

impl One for QFrac {
    fn one() -> Self {
        Self::from_int(1)
    }
}

impl Add<&QFrac> for &QFrac {
    type Output = QFrac;
    fn add(self, rhs: &QFrac) -> QFrac {
        QFrac::new(
            &(&self.num * &rhs.den) + &(&rhs.num * &self.den),
            &self.den * &rhs.den,
        )
    }
}

impl Add for QFrac {
    type Output = QFrac;
    fn add(self, rhs: QFrac) -> QFrac {
        &self + &rhs
    }
}

impl AddAssign for QFrac {
    fn add_assign(&mut self, rhs: QFrac) {
        *self = &*self + &rhs;
    }
}

impl Sub<&QFrac> for &QFrac {
    type Output = QFrac;
    fn sub(self, rhs: &QFrac) -> QFrac {
        QFrac::new(
            &(&self.num * &rhs.den) - &(&rhs.num * &self.den),
            &self.den * &rhs.den,
        )
    }
}

impl Sub for QFrac {
    type Output = QFrac;
    fn sub(self, rhs: QFrac) -> QFrac {
        &self - &rhs
    }
}

impl SubAssign for QFrac {
    fn sub_assign(&mut self, rhs: QFrac) {
        *self = &*self - &rhs;
    }
}

impl Mul<&QFrac> for &QFrac {
    type Output = QFrac;
    fn mul(self, rhs: &QFrac) -> QFrac {
        QFrac::new(&self.num * &rhs.num, &self.den * &rhs.den)
    }
}

impl Mul for QFrac {
    type Output = QFrac;
    fn mul(self, rhs: QFrac) -> QFrac {
        &self * &rhs
    }
}

impl MulAssign for QFrac {
    fn mul_assign(&mut self, rhs: QFrac) {
        *self = &*self * &rhs;
    }
}

impl Neg for QFrac {
    type Output = QFrac;
    fn neg(self) -> QFrac {
        QFrac {
            num: -self.num,
            den: self.den,
        }
    }
}

impl Neg for &QFrac {
    type Output = QFrac;
    fn neg(self) -> QFrac {
        -self.clone()
    }
}

impl fmt::Display for QFrac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

impl fmt::Debug for QFrac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::{qint, rat};

    #[test]
    fn fraction_normal_form_clears_units() {
        // (q^-1 + q^-3) = q^-3 (q^2 + 1): the normalized denominator is the
        // polynomial part, with the unit pushed into the numerator.
        let a = QFrac::new(
            LaurentPoly::one(),
            LaurentPoly::q_pow(-1) + LaurentPoly::q_pow(-3),
        );
        let b = QFrac::new(LaurentPoly::q_pow(3), LaurentPoly::q_pow(2) + LaurentPoly::one());
        assert_eq!(a, b);
        assert!(a.denominator_is_q2_plus_one_power());
    }

    #[test]
    fn arithmetic_cancels() {
        let half = QFrac::new(LaurentPoly::one(), qint(2));
        let sum = &half + &half;
        // 2/[2] is not a polynomial, but [2] * (1/[2]) is 1.
        let prod = QFrac::from_poly(qint(2)) * half.clone();
        assert_eq!(prod, QFrac::one());
        assert_eq!(sum.eval_at_one().unwrap(), rat(1));
        assert_eq!((&sum - &sum).eval_at_one().unwrap(), rat(0));
    }

    #[test]
    fn eval_at_one_of_fraction() {
        let f = QFrac::new(
            LaurentPoly::q_pow(2) - LaurentPoly::q_pow(-2),
            LaurentPoly::q_pow(1) - LaurentPoly::q_pow(-1),
        );
        // (q^2 - q^-2)/(q - q^-1) = [2], which is 2 at q = 1.
        assert_eq!(f, QFrac::from_poly(qint(2)));
        assert_eq!(f.eval_at_one().unwrap(), rat(2));
    }
}
