//! Exact scalar arithmetic and exact sparse linear algebra.
//!
//! Everything here is computed over the rationals (or the Laurent ring
//! `Q[q, q^-1]` and its fraction normal forms) with no floating point and no
//! modular shortcuts in reported results. The linear algebra is fraction-free
//! (Bareiss-style) so that intermediate entries stay integral.

mod laurent;
mod matrix;
mod qfrac;

pub use laurent::{qfact, qint, LaurentPoly};
pub use matrix::{solve_in_span, BasisSolver, ExactMatrix, IntEchelon, ModEchelon, SpanSolution};
pub use qfrac::QFrac;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Arbitrary-precision rational, always reduced with positive denominator.
pub type Rat = BigRational;

/// Shorthand for an integer rational.
pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Shorthand for the fraction `n/d`.
pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Formats a rational as `p/q`, omitting `/1`.
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses the `p/q` string form accepted by [`format_rat`].
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    match s.split_once('/') {
        None => s.parse::<BigInt>().ok().map(Rat::from_integer),
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                None
            } else {
                Some(Rat::new(p, q))
            }
        }
    }
}

/// Clears denominators and content: returns the unique primitive integer
/// vector proportional to `v` whose first nonzero entry is positive, or all
/// zeros. Used to put rational vectors in a canonical comparable form.
pub fn normalize_vector(v: &[Rat]) -> Vec<BigInt> {
    use num_integer::Integer;
    let mut lcm = BigInt::one();
    for x in v {
        lcm = lcm.lcm(x.denom());
    }
    let mut ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    let mut content = BigInt::zero();
    for x in &ints {
        content = content.gcd(x);
    }
    if content.is_zero() {
        return ints;
    }
    let flip = ints
        .iter()
        .find(|x| !x.is_zero())
        .map(|x| x.is_negative())
        .unwrap_or(false);
    if flip {
        content = -content;
    }
    for x in &mut ints {
        *x /= &content;
    }
    ints
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rat_string_round_trip() {
        assert_eq!(format_rat(&ratio(3, 6)), "1/2");
        assert_eq!(format_rat(&rat(-7)), "-7");
        assert_eq!(parse_rat("22/7").unwrap(), ratio(22, 7));
        assert_eq!(parse_rat("-5").unwrap(), rat(-5));
        assert!(parse_rat("1/0").is_none());
    }

    #[test]
    fn normalize_vector_is_primitive_and_sign_fixed() {
        let v = vec![ratio(-2, 3), ratio(4, 3), rat(0)];
        let n = normalize_vector(&v);
        assert_eq!(n, vec![BigInt::from(1), BigInt::from(-2), BigInt::from(0)]);
    }
}
