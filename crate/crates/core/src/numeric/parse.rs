use num_bigint::BigInt;
use num_traits::Zero;

use super::Rational;
use crate::error::{Error, Result};

/// Parses `"p/q"`, integers and decimals (with optional exponent) exactly.
pub fn parse_rational(literal: &str) -> Result<Rational> {
    let fail = |reason: &str| Error::Parse {
        literal: literal.to_string(),
        reason: reason.to_string(),
    };
    let s = literal.trim();
    if s.is_empty() {
        return Err(fail("empty literal"));
    }
    if let Some((p, q)) = s.split_once('/') {
        let num = parse_decimal(p.trim()).ok_or_else(|| fail("bad numerator"))?;
        let den = parse_decimal(q.trim()).ok_or_else(|| fail("bad denominator"))?;
        if den.is_zero() {
            return Err(fail("zero denominator"));
        }
        return Ok(num / den);
    }
    parse_decimal(s).ok_or_else(|| fail("not a decimal or p/q literal"))
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (neg, body) = match s.as_bytes().first()? {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (mantissa, exp) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(digits.parse::<BigInt>().ok()?);
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10u8);
    let factor = num_traits::pow(ten, scale.unsigned_abs() as usize);
    if scale >= 0 {
        value *= Rational::from_integer(factor);
    } else {
        value /= Rational::from_integer(factor);
    }
    if neg {
        value = -value;
    }
    Some(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Scalar;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("23/260").unwrap(), q(23, 260));
        assert_eq!(parse_rational("0.1").unwrap(), q(1, 10));
        assert_eq!(parse_rational("-1.25").unwrap(), q(-5, 4));
        assert_eq!(parse_rational("3").unwrap(), q(3, 1));
        assert_eq!(parse_rational("1e-3").unwrap(), q(1, 1000));
        assert_eq!(parse_rational("2.5E2").unwrap(), q(250, 1));
        assert_eq!(parse_rational(".5").unwrap(), q(1, 2));
        assert_eq!(parse_rational("6/-8").unwrap(), q(-3, 4));
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "abc", "1/0", "1..2", "1/", "--1", "nan", "1e"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }
}
