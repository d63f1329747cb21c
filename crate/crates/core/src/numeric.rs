//! Exact rational parsing and fixed-precision float helpers.

use rug::float::Round;
use rug::ops::{AddAssignRound, DivAssignRound, MulAssignRound, Pow, SubAssignRound};
use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};

/// Default working precision in mantissa bits.
pub const DEFAULT_PRECISION: u32 = 256;

/// Parses `"p/q"`, an integer, or a decimal with optional exponent into an
/// exact rational. Decimals are converted exactly: `"0.1"` is `1/10`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty number".into()));
    }
    if let Some((num, den)) = s.split_once('/') {
        let num = parse_rational(num)?;
        let den = parse_rational(den)?;
        if den == 0 {
            return Err(Error::Parse(format!("zero denominator in {text:?}")));
        }
        return Ok(num / den);
    }

    let (negative, body) = match s.as_bytes()[0] {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(pos) => {
            let exp: i64 = body[pos + 1..]
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent in {text:?}")))?;
            (&body[..pos], exp)
        }
        None => (body, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(Error::Parse(format!("no digits in {text:?}")));
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(Error::Parse(format!("not a number: {text:?}")));
    }
    let digits = format!("{int_part}{frac_part}");
    let digits = if digits.is_empty() { "0".to_string() } else { digits };
    let mut value = Rational::from(
        Integer::from_str_radix(&digits, 10).map_err(|e| Error::Parse(e.to_string()))?,
    );
    let shift = exponent - frac_part.len() as i64;
    let ten = Integer::from(10);
    if shift >= 0 {
        value *= Rational::from(ten.pow(shift as u32));
    } else {
        value /= Rational::from(ten.pow((-shift) as u32));
    }
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Parses a JSON scalar (number or string) into an exact rational.
pub fn rational_from_json(value: &serde_json::Value) -> Result<Rational> {
    match value {
        serde_json::Value::String(s) => parse_rational(s),
        // Number's Display is the shortest round-trip form, e.g. "2.1".
        serde_json::Value::Number(n) => parse_rational(&n.to_string()),
        other => Err(Error::Parse(format!("expected a number, got {other}"))),
    }
}

pub fn parse_float(text: &str, prec: u32) -> Result<Float> {
    Ok(Float::with_val(prec, &parse_rational(text)?))
}

/// Exact rational value of a finite float.
pub fn float_to_rational(x: &Float) -> Rational {
    x.to_rational().expect("finite float")
}

/// Fixed-point decimal string with exactly `digits` digits after the point,
/// rounded half away from zero from the exact binary value.
pub fn decimal_string(x: &Float, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x.is_sign_negative() { "-inf".into() } else { "inf".into() };
    }
    rational_decimal_string(&float_to_rational(x), digits)
}

pub fn rational_decimal_string(x: &Rational, digits: usize) -> String {
    let scale = Integer::from(10).pow(digits as u32);
    let scaled = Rational::from(x * &scale);
    let negative = scaled < 0;
    let mut abs = scaled.abs();
    abs += Rational::from((1, 2));
    let int = abs.floor().into_numer_denom().0;
    let mut text = int.to_string();
    if digits > 0 {
        if text.len() <= digits {
            text = format!("{}{}", "0".repeat(digits + 1 - text.len()), text);
        }
        text.insert(text.len() - digits, '.');
    }
    if negative && int != 0 {
        text.insert(0, '-');
    }
    text
}

/// Number of decimal digits after the point in a decimal literal.
pub fn decimal_places(text: &str) -> usize {
    let s = text.trim();
    let mantissa = s.split(['e', 'E']).next().unwrap_or(s);
    mantissa.split_once('.').map_or(0, |(_, f)| f.len())
}

/// Significant decimal digits in a decimal literal, leading zeros excluded.
pub fn significant_digits(text: &str) -> usize {
    let s = text.trim();
    let mantissa = s.split(['e', 'E']).next().unwrap_or(s);
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    digits.trim_start_matches('0').len().max(1)
}

/// `(13 - 3*sqrt(17)) / 4`, rounded toward zero so a strict comparison
/// against it stays sound.
pub fn alpha_threshold(prec: u32) -> Float {
    let mut root = Float::with_val_round(prec, 17, Round::Up).0;
    root.sqrt_round(Round::Up);
    root.mul_assign_round(3, Round::Up);
    let mut t = Float::with_val(prec, 13);
    t.sub_assign_round(&root, Round::Down);
    t.div_assign_round(4, Round::Down);
    t
}

/// `x * (1 + 2^-slack_bits)` rounded up; used to pad norms that were
/// computed with round-to-nearest before they enter a certificate.
pub fn pad_up(x: &Float, slack_bits: u32) -> Float {
    let mut eps = Float::with_val(x.prec(), 1);
    eps >>= slack_bits;
    eps += 1;
    let mut out = Float::with_val(x.prec(), x);
    out.mul_assign_round(&eps, Round::Up);
    out
}

pub fn float(prec: u32, v: f64) -> Float {
    Float::with_val(prec, v)
}

pub fn rat_to_float(prec: u32, r: &Rational) -> Float {
    Float::with_val(prec, r)
}

/// Sum with rounding up; inputs are assumed nonnegative.
pub fn sum_up(prec: u32, terms: &[Float]) -> Float {
    let mut s = Float::with_val(prec, 0);
    for t in terms {
        s.add_assign_round(t, Round::Up);
    }
    s
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64()
}
