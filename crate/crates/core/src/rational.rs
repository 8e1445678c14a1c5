//! Exact rational helpers and the two text renderings used in reports.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rational = BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: usize) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `num/den` in lowest terms; integers still carry `/1`.
pub fn fraction(value: &Rational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

const SIG_DIGITS: u32 = 6;

/// Decimal rendering with six significant digits.
///
/// Values that are exact within six significant digits print without
/// trailing zeros (`0.375`, `81`); everything else is rounded half-up and
/// keeps all six digits (`0.393690`).
pub fn decimal(value: &Rational) -> String {
    if value.is_zero() {
        return "0".to_string();
    }
    let sign = if value.is_negative() { "-" } else { "" };
    let v = value.abs();
    let ten = BigInt::from(10);

    // exponent e with 10^e <= v < 10^(e+1)
    let mut e: i64 = 0;
    let mut scaled = v.clone();
    while scaled >= Rational::from_integer(ten.clone()) {
        scaled /= Rational::from_integer(ten.clone());
        e += 1;
    }
    while scaled < Rational::one() {
        scaled *= Rational::from_integer(ten.clone());
        e -= 1;
    }

    // digits = round(v * 10^(SIG-1-e))
    let shift = SIG_DIGITS as i64 - 1 - e;
    let factor = Rational::from_integer(num_traits::pow(ten.clone(), shift.unsigned_abs() as usize));
    let m = if shift >= 0 { &v * &factor } else { &v / &factor };
    let exact = m.is_integer();
    let (q, r) = m.numer().div_rem(m.denom());
    let mut digits = if BigInt::from(2) * r >= *m.denom() { q + 1 } else { q };
    let mut shift = shift;
    if digits == num_traits::pow(ten.clone(), SIG_DIGITS as usize) {
        digits /= &ten;
        shift -= 1;
    }

    let mut text = digits.to_string();
    let body = if shift <= 0 {
        text.push_str(&"0".repeat(shift.unsigned_abs() as usize));
        text
    } else {
        let shift = shift as usize;
        if text.len() <= shift {
            text = format!("{}{}", "0".repeat(shift - text.len() + 1), text);
        }
        let (int_part, frac_part) = text.split_at(text.len() - shift);
        let mut frac_part = frac_part.to_string();
        if exact {
            while frac_part.ends_with('0') {
                frac_part.pop();
            }
        }
        if frac_part.is_empty() {
            int_part.to_string()
        } else {
            format!("{int_part}.{frac_part}")
        }
    };
    format!("{sign}{body}")
}

/// Lossy conversion for plotting and quick comparisons only.
pub fn to_f64(value: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    value.to_f64().unwrap_or(f64::NAN)
}
