//! IEEE-754 hexadecimal float strings (`0x1.5bf0a8b145769p+1`).
//!
//! Formatting emits the shortest mantissa that still carries every bit, so
//! `parse(&format(x))` is the identity on the bit pattern for every finite
//! value, signed zeros and subnormals included.

const MANTISSA_BITS: u32 = 52;
const EXP_BIAS: i64 = 1023;

pub fn format(value: f64) -> String {
    if value.is_nan() {
        return "nan".to_string();
    }
    if value.is_infinite() {
        return if value > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let bits = value.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let biased = ((bits >> MANTISSA_BITS) & 0x7ff) as i64;
    let mantissa = bits & ((1u64 << MANTISSA_BITS) - 1);

    if biased == 0 && mantissa == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if biased == 0 {
        (0, 1 - EXP_BIAS)
    } else {
        (1, biased - EXP_BIAS)
    };
    let mut digits = format!("{mantissa:013x}");
    while digits.ends_with('0') {
        digits.pop();
    }
    let exp_sign = if exp < 0 { '-' } else { '+' };
    if digits.is_empty() {
        format!("{sign}0x{lead}p{exp_sign}{}", exp.abs())
    } else {
        format!("{sign}0x{lead}.{digits}p{exp_sign}{}", exp.abs())
    }
}

/// Parses strings produced by [`format`]. Only the canonical layout is
/// accepted: optional `-`, `0x`, a `0`/`1` lead digit, up to 13 fraction
/// digits, and a binary exponent.
pub fn parse(text: &str) -> Option<f64> {
    match text {
        "nan" => return Some(f64::NAN),
        "inf" => return Some(f64::INFINITY),
        "-inf" => return Some(f64::NEG_INFINITY),
        _ => {}
    }
    let (negative, rest) = match text.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, text),
    };
    let rest = rest.strip_prefix("0x")?;
    let (mant_part, exp_part) = rest.split_once('p')?;
    let exp: i64 = exp_part.parse().ok()?;
    let (lead, frac) = match mant_part.split_once('.') {
        Some((l, f)) => (l, f),
        None => (mant_part, ""),
    };
    if frac.len() > 13 || frac.is_empty() && mant_part.contains('.') {
        return None;
    }
    let lead = match lead {
        "0" => 0u64,
        "1" => 1u64,
        _ => return None,
    };
    let mut mantissa = 0u64;
    for ch in frac.chars() {
        mantissa = (mantissa << 4) | ch.to_digit(16)? as u64;
    }
    mantissa <<= 4 * (13 - frac.len() as u32);

    let sign_bit = (negative as u64) << 63;
    let bits = if lead == 0 {
        if mantissa == 0 && exp == 0 {
            sign_bit
        } else if exp == 1 - EXP_BIAS {
            sign_bit | mantissa
        } else {
            return None;
        }
    } else {
        let biased = exp + EXP_BIAS;
        if !(1..=2046).contains(&biased) {
            return None;
        }
        sign_bit | ((biased as u64) << MANTISSA_BITS) | mantissa
    };
    Some(f64::from_bits(bits))
}
