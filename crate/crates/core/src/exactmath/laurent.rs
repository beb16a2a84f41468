//! Laurent polynomials in `q` with rational coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_traits::{One, Zero};

use super::{format_rat, Rat};

/// A Laurent polynomial in `q` over the rationals. Zero coefficients are
/// never stored; the zero polynomial is the empty map.
#[derive(Clone, PartialEq, Eq, Default, Hash, PartialOrd, Ord)]
pub struct LaurentPoly {
    coeffs: BTreeMap<i64, Rat>,
}

impl LaurentPoly {
    pub fn zero_poly() -> Self {
        LaurentPoly {
            coeffs: BTreeMap::new(),
        }
    }

    /// The monomial `c * q^k`.
    pub fn monomial(k: i64, c: Rat) -> Self {
        let mut coeffs = BTreeMap::new();
        if !c.is_zero() {
            coeffs.insert(k, c);
        }
        LaurentPoly { coeffs }
    }

    pub fn constant(c: Rat) -> Self {
        Self::monomial(0, c)
    }

    pub fn from_int(n: i64) -> Self {
        Self::constant(super::rat(n))
    }

    /// `q^k`.
    pub fn q_pow(k: i64) -> Self {
        Self::monomial(k, super::rat(1))
    }

    pub fn coeff(&self, k: i64) -> Rat {
        self.coeffs.get(&k).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&i64, &Rat)> {
        self.coeffs.iter()
    }

    pub fn min_exp(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    fn insert_add(coeffs: &mut BTreeMap<i64, Rat>, k: i64, c: &Rat) {
        if c.is_zero() {
            return;
        }
        match coeffs.get_mut(&k) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    coeffs.remove(&k);
                }
            }
            None => {
                coeffs.insert(k, c.clone());
            }
        }
    }

    /// Sum of all coefficients, i.e. the value at `q = 1`.
    pub fn eval_at_one(&self) -> Rat {
        let mut s = Rat::zero();
        for c in self.coeffs.values() {
            s += c;
        }
        s
    }

    /// The bar involution `q -> q^-1`.
    pub fn bar(&self) -> Self {
        LaurentPoly {
            coeffs: self.coeffs.iter().map(|(k, c)| (-k, c.clone())).collect(),
        }
    }

    /// Multiplies by `q^k`.
    pub fn shift(&self, k: i64) -> Self {
        LaurentPoly {
            coeffs: self.coeffs.iter().map(|(e, c)| (e + k, c.clone())).collect(),
        }
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return Self::zero_poly();
        }
        LaurentPoly {
            coeffs: self.coeffs.iter().map(|(k, v)| (*k, v * c)).collect(),
        }
    }

    /// Exact division; returns `None` when `self` is not divisible by `d`.
    pub fn div_exact(&self, d: &LaurentPoly) -> Option<LaurentPoly> {
        assert!(!d.is_zero(), "division by zero Laurent polynomial");
        if self.is_zero() {
            return Some(Self::zero_poly());
        }
        // Long division from the top; exponent bookkeeping handles the
        // Laurent shift.
        let mut rem = self.clone();
        let mut quo = LaurentPoly::zero_poly();
        let d_top = d.max_exp().unwrap();
        let d_lead = d.coeff(d_top);
        let quo_min = self.min_exp().unwrap() - d.min_exp().unwrap();
        while !rem.is_zero() {
            let r_top = rem.max_exp().unwrap();
            let k = r_top - d_top;
            if k < quo_min {
                return None;
            }
            let c = rem.coeff(r_top) / &d_lead;
            let term = LaurentPoly::monomial(k, c);
            rem -= &term * d;
            quo += term;
        }
        Some(quo)
    }

    /// Content-free polynomial gcd, normalized to have min exponent 0 and
    /// primitive integer coefficients with positive leading coefficient.
    pub fn gcd(&self, other: &LaurentPoly) -> LaurentPoly {
        let mut a = self.normalize_primitive();
        let mut b = other.normalize_primitive();
        while !b.is_zero() {
            let r = a.pseudo_rem(&b);
            a = b;
            b = r.normalize_primitive();
        }
        a
    }

    /// Remainder of polynomial division (coefficients rational, exponents
    /// shifted so both are honest polynomials).
    fn pseudo_rem(&self, d: &LaurentPoly) -> LaurentPoly {
        if self.is_zero() {
            return Self::zero_poly();
        }
        let mut rem = self.shift(-self.min_exp().unwrap());
        let d = d.shift(-d.min_exp().unwrap());
        let d_top = d.max_exp().unwrap();
        let d_lead = d.coeff(d_top);
        while !rem.is_zero() {
            let r_top = rem.max_exp().unwrap();
            if r_top < d_top {
                break;
            }
            let c = rem.coeff(r_top) / &d_lead;
            rem -= LaurentPoly::monomial(r_top - d_top, c) * &d;
        }
        rem
    }

    /// Shifts min exponent to 0 and scales to a primitive integer polynomial
    /// with positive leading coefficient. Zero maps to zero.
    pub fn normalize_primitive(&self) -> LaurentPoly {
        if self.is_zero() {
            return Self::zero_poly();
        }
        let shifted = self.shift(-self.min_exp().unwrap());
        let vals: Vec<Rat> = shifted.coeffs.values().cloned().collect();
        let ints = super::normalize_vector(&vals);
        // normalize_vector fixes the sign of the FIRST nonzero entry; we want
        // the leading (top exponent) coefficient positive instead.
        let mut coeffs: BTreeMap<i64, Rat> = shifted
            .coeffs
            .keys()
            .zip(ints)
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| (*k, Rat::from_integer(c)))
            .collect();
        if let Some(top) = coeffs.keys().next_back().copied() {
            if coeffs[&top] < Rat::zero() {
                for v in coeffs.values_mut() {
                    *v = -v.clone();
                }
            }
        }
        LaurentPoly { coeffs }
    }
}

/// The quantum integer `[m] = (q^m - q^-m)/(q - q^-1)`.
pub fn qint(m: i64) -> LaurentPoly {
    if m == 0 {
        return LaurentPoly::zero_poly();
    }
    if m < 0 {
        return -qint(-m);
    }
    let mut coeffs = BTreeMap::new();
    let mut k = m - 1;
    while k >= 1 - m {
        coeffs.insert(k, super::rat(1));
        k -= 2;
    }
    LaurentPoly { coeffs }
}

/// The quantum factorial `[k]! = [1][2]...[k]`, with `[0]! = 1`.
pub fn qfact(k: u32) -> LaurentPoly {
    let mut p = LaurentPoly::one();
    for i in 1..=k {
        p *= qint(i as i64);
    }
    p
}

impl Zero for LaurentPoly {
    fn zero() -> Self {
        Self::zero_poly()
    }
    fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
}

impl One for LaurentPoly {
    fn one() -> Self {
        Self::from_int(1)
    }
}

impl AddAssign<&LaurentPoly> for LaurentPoly {
    fn add_assign(&mut self, rhs: &LaurentPoly) {
        for (k, c) in &rhs.coeffs {
            Self::insert_add(&mut self.coeffs, *k, c);
        }
    }
}

impl AddAssign for LaurentPoly {
    fn add_assign(&mut self, rhs: LaurentPoly) {
        *self += &rhs;
    }
}

impl Add for LaurentPoly {
    type Output = LaurentPoly;
    fn add(mut self, rhs: LaurentPoly) -> LaurentPoly {
        self += &rhs;
        self
    }
}

impl Add<&LaurentPoly> for &LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl SubAssign<&LaurentPoly> for LaurentPoly {
    fn sub_assign(&mut self, rhs: &LaurentPoly) {
        for (k, c) in &rhs.coeffs {
            Self::insert_add(&mut self.coeffs, *k, &-c.clone());
        }
    }
}

impl SubAssign for LaurentPoly {
    fn sub_assign(&mut self, rhs: LaurentPoly) {
        *self -= &rhs;
    }
}

impl Sub for LaurentPoly {
    type Output = LaurentPoly;
    fn sub(mut self, rhs: LaurentPoly) -> LaurentPoly {
        self -= &rhs;
        self
    }
}

impl Sub<&LaurentPoly> for &LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Neg for LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        LaurentPoly {
            coeffs: self.coeffs.into_iter().map(|(k, c)| (k, -c)).collect(),
        }
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        -self.clone()
    }
}

impl Mul<&LaurentPoly> for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut coeffs = BTreeMap::new();
        for (ka, ca) in &self.coeffs {
            for (kb, cb) in &rhs.coeffs {
                LaurentPoly::insert_add(&mut coeffs, ka + kb, &(ca * cb));
            }
        }
        LaurentPoly { coeffs }
    }
}

impl Mul for LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, rhs: LaurentPoly) -> LaurentPoly {
        &self * &rhs
    }
}

impl Mul<&LaurentPoly> for LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        &self * rhs
    }
}

impl MulAssign for LaurentPoly {
    fn mul_assign(&mut self, rhs: LaurentPoly) {
        *self = &*self * &rhs;
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().rev() {
            let cs = format_rat(c);
            let (sign, mag) = match cs.strip_prefix('-') {
                Some(m) => ("-", m.to_string()),
                None => ("+", cs),
            };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
                first = false;
            } else {
                write!(f, " {} ", sign)?;
            }
            match (*k, mag.as_str()) {
                (0, m) => write!(f, "{}", m)?,
                (1, "1") => write!(f, "q")?,
                (1, m) => write!(f, "{}*q", m)?,
                (e, "1") => write!(f, "q^{}", e)?,
                (e, m) => write!(f, "{}*q^{}", m, e)?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::rat;

    #[test]
    fn qint_small_values() {
        assert_eq!(qint(1), LaurentPoly::one());
        assert!(qint(0).is_zero());
        // [2] = q + q^-1, checked against the defining quotient.
        let num = LaurentPoly::q_pow(2) - LaurentPoly::q_pow(-2);
        let den = LaurentPoly::q_pow(1) - LaurentPoly::q_pow(-1);
        assert_eq!(num.div_exact(&den).unwrap(), qint(2));
        assert_eq!(qint(2), LaurentPoly::q_pow(1) + LaurentPoly::q_pow(-1));
        assert_eq!(qint(-3), -qint(3));
    }

    #[test]
    fn qint_agrees_with_defining_quotient() {
        for m in 1..12 {
            let num = LaurentPoly::q_pow(m) - LaurentPoly::q_pow(-m);
            let den = LaurentPoly::q_pow(1) - LaurentPoly::q_pow(-1);
            assert_eq!(num.div_exact(&den).unwrap(), qint(m));
        }
    }

    #[test]
    fn qfact_small_values() {
        assert_eq!(qfact(0), LaurentPoly::one());
        assert_eq!(qfact(2), qint(2));
        assert_eq!(qfact(3), qint(2) * qint(3));
    }

    #[test]
    fn eval_at_one_counts() {
        for m in 0..10 {
            assert_eq!(qint(m).eval_at_one(), rat(m));
        }
        let p = LaurentPoly::q_pow(-1) + LaurentPoly::q_pow(-3);
        assert_eq!(p.eval_at_one(), rat(2));
        assert_eq!(LaurentPoly::zero_poly().eval_at_one(), rat(0));
    }

    #[test]
    fn qint_is_bar_invariant() {
        for m in 0..10 {
            assert_eq!(qint(m).bar(), qint(m));
        }
    }

    #[test]
    fn gcd_reduces_common_factor() {
        let a = qint(2) * qint(3);
        let b = qint(2) * qint(4);
        let g = a.gcd(&b);
        // [2] divides [4], while [3] is coprime to both; the gcd is [2] up
        // to normalization.
        assert!(a.div_exact(&g).is_some());
        assert!(b.div_exact(&g).is_some());
        assert!(g.div_exact(&qint(2).normalize_primitive()).is_some());
        assert!(qint(2).div_exact(&g.shift(-1)).is_some());
    }
}
