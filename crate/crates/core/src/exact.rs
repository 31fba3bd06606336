//! Rational helpers: parsing, sign, and float rendering for output layers.

use std::cmp::Ordering;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always in lowest terms with a positive denominator.
pub type ExactRational = BigRational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(value: &ExactRational) -> Sign {
        match value.numer().sign() {
            num_bigint::Sign::Minus => Sign::Negative,
            num_bigint::Sign::NoSign => Sign::Zero,
            num_bigint::Sign::Plus => Sign::Positive,
        }
    }

    pub fn is_negative(self) -> bool {
        self == Sign::Negative
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sign::Negative => "negative",
            Sign::Zero => "zero",
            Sign::Positive => "positive",
        }
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn int(n: i64) -> ExactRational {
    ExactRational::from_integer(BigInt::from(n))
}

pub fn ratio(numer: i64, denom: i64) -> ExactRational {
    ExactRational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn from_bigint(n: BigInt) -> ExactRational {
    ExactRational::from_integer(n)
}

/// Parses `"3"`, `"-3/4"` or a plain decimal such as `"0.25"` (converted exactly).
pub fn parse_rational(text: &str) -> Result<ExactRational> {
    let s = text.trim();
    if s.is_empty() {
        return Err(Error::ParseRational(text.to_string()));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if s.contains('/') {
            return Err(Error::ParseRational(text.to_string()));
        }
        let negative = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches(['-', '+']), frac);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::ParseRational(text.to_string()));
        }
        let numer = BigInt::from_str(&digits).map_err(|_| Error::ParseRational(text.to_string()))?;
        let denom = num_traits::pow(BigInt::from(10), frac.len());
        let value = ExactRational::new(numer, denom);
        return Ok(if negative { -value } else { value });
    }
    let value =
        ExactRational::from_str(s).map_err(|_| Error::ParseRational(text.to_string()))?;
    Ok(value)
}

/// Comma-separated list of rationals, e.g. `"1/2,1/4"`.
pub fn parse_rational_list(text: &str) -> Result<Vec<ExactRational>> {
    text.split(',').map(parse_rational).collect()
}

/// `"num/den"`, or just `"num"` for integers.
pub fn format_rational(value: &ExactRational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn to_f64(value: &ExactRational) -> f64 {
    value.to_f64().unwrap_or_else(|| {
        if value.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Scientific notation with 17 significant digits.
pub fn format_float(value: f64) -> String {
    format!("{value:.16e}")
}

pub fn pow(base: &ExactRational, exp: u32) -> ExactRational {
    num_traits::pow(base.clone(), exp as usize)
}

pub fn cmp_zero(value: &ExactRational) -> Ordering {
    value.numer().cmp(&BigInt::zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("1/2").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational(" -6/8 ").unwrap(), ratio(-3, 4));
        assert_eq!(parse_rational("0.25").unwrap(), ratio(1, 4));
        assert_eq!(parse_rational("-1.5").unwrap(), ratio(-3, 2));
        assert_eq!(parse_rational("7").unwrap(), int(7));
        assert!(parse_rational("").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1.2/3").is_err());
    }

    #[test]
    fn formatting() {
        assert_eq!(format_rational(&ratio(2, 4)), "1/2");
        assert_eq!(format_rational(&int(-3)), "-3");
        assert_eq!(format_float(0.5), "5.0000000000000000e-1");
        assert_eq!(Sign::of(&ratio(-1, 3)), Sign::Negative);
        assert_eq!(Sign::of(&int(0)), Sign::Zero);
    }
}
