//! Exact decimal fixed point with twelve fractional digits.

use alloc::string::String;
use core::fmt;
use core::str::FromStr;

const SCALE: i128 = 1_000_000_000_000;
const DIGITS: usize = 12;
/// Largest magnitude accepted from floating point input.
const F64_LIMIT: f64 = 1e15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Fixed(i128);

impl Fixed {
    pub const ZERO: Fixed = Fixed(0);

    pub const fn from_units(units: i128) -> Self {
        Fixed(units)
    }

    /// Raw count of `1e-12` units.
    pub const fn units(self) -> i128 {
        self.0
    }

    /// Nearest representable value, ties away from zero.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() || !(-F64_LIMIT..=F64_LIMIT).contains(&x) {
            return None;
        }
        let scaled = x * SCALE as f64;
        let units = if scaled >= 0.0 { (scaled + 0.5) as i128 } else { (scaled - 0.5) as i128 };
        Some(Fixed(units))
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }

    /// `floor((a + b) / 2)` in units.
    pub fn midpoint(a: Fixed, b: Fixed) -> Fixed {
        Fixed((a.0 + b.0).div_euclid(2))
    }

    /// `floor(sum / len)` in units; `None` for an empty slice.
    pub fn mean(values: &[Fixed]) -> Option<Fixed> {
        if values.is_empty() {
            return None;
        }
        let sum: i128 = values.iter().map(|v| v.0).sum();
        Some(Fixed(sum.div_euclid(values.len() as i128)))
    }
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let scale = SCALE as u128;
        write!(f, "{sign}{}.{:0width$}", abs / scale, abs % scale, width = DIGITS)
    }
}

impl FromStr for Fixed {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || alloc::format!("malformed decimal `{s}`");
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int, frac) = match body.split_once('.') {
            Some((i, f)) => (i, Some(f)),
            None => (body, None),
        };
        let digits = |p: &str| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit());
        let frac = match frac {
            Some(f) if !digits(f) => return Err(bad()),
            Some(f) => f,
            None => "",
        };
        if !digits(int) || frac.len() > DIGITS || int.len() > 24 {
            return Err(bad());
        }
        let mut units: i128 = int.parse::<i128>().map_err(|_| bad())? * SCALE;
        let mut place = SCALE / 10;
        for b in frac.bytes() {
            units += (b - b'0') as i128 * place;
            place /= 10;
        }
        Ok(Fixed(if negative { -units } else { units }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn formats_with_twelve_digits() {
        assert_eq!(Fixed::from_f64(0.5).unwrap().to_string(), "0.500000000000");
        assert_eq!(Fixed::from_f64(-2.25).unwrap().to_string(), "-2.250000000000");
        assert_eq!(Fixed::from_f64(1000.0).unwrap().to_string(), "1000.000000000000");
        assert_eq!(Fixed::from_units(-1).to_string(), "-0.000000000001");
    }

    #[test]
    fn parses_and_rejects() {
        assert_eq!("0.3".parse::<Fixed>().unwrap(), Fixed::from_f64(0.3).unwrap());
        assert_eq!("-0.000000000001".parse::<Fixed>().unwrap(), Fixed::from_units(-1));
        assert_eq!("7".parse::<Fixed>().unwrap().to_f64(), 7.0);
        for bad in ["", "-", "1.", ".5", "1.0000000000001", "1e3", "0x1", "1.2.3"] {
            assert!(bad.parse::<Fixed>().is_err(), "{bad}");
        }
    }

    #[test]
    fn short_decimals_survive_the_float_round_trip() {
        for x in [0.0, 0.3, 0.1, 0.25, 1.0, -0.7, 123.456] {
            assert_eq!(Fixed::from_f64(x).unwrap().to_f64(), x);
        }
        assert!(Fixed::from_f64(f64::NAN).is_none());
        assert!(Fixed::from_f64(1e300).is_none());
    }

    #[test]
    fn midpoint_and_mean_floor() {
        let a = Fixed::from_units(1);
        let b = Fixed::from_units(4);
        assert_eq!(Fixed::midpoint(a, b), Fixed::from_units(2));
        assert_eq!(Fixed::midpoint(Fixed::from_units(-1), Fixed::ZERO), Fixed::from_units(-1));
        assert_eq!(Fixed::mean(&[a, b, b]), Some(Fixed::from_units(3)));
        assert_eq!(Fixed::mean(&[]), None);
    }
}
