//! Exact similarity values.

use num::{BigInt, BigRational, Integer, One, ToPrimitive};

pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn frac(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// `Some(v)` when `r` is an integer that fits in an `i64`.
pub fn to_i64(r: &Rational) -> Option<i64> {
    if r.is_integer() {
        r.to_integer().to_i64()
    } else {
        None
    }
}

/// Integer value of a nonnegative whole rational, used for star sizes.
pub fn to_count(r: &Rational) -> Option<usize> {
    if r.is_integer() {
        r.to_integer().to_usize()
    } else {
        None
    }
}

/// Least common denominator of `values`, if it fits in an `i64`. Multiplying
/// every value by it yields integers.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Option<i64> {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()))
        .to_i64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_and_parse_round_trip() {
        assert_eq!(frac(14, 4).to_string(), "7/2");
        assert_eq!(int(-3).to_string(), "-3");
        assert_eq!("6/4".parse::<Rational>().unwrap(), frac(3, 2));
        assert_eq!(to_i64(&frac(8, 2)), Some(4));
        assert_eq!(to_i64(&frac(1, 2)), None);
        assert_eq!(common_denominator(&[frac(1, 4), int(3), frac(5, 6)]), Some(12));
        assert_eq!(common_denominator(&[]), Some(1));
    }
}
