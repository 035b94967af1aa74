//! Lengths with unit suffixes (`nm`, `um`/`µm`, `mm`, `m`), normalized to
//! meters.

use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse length {input:?}: {reason}")]
pub struct UnitError {
    pub input: String,
    pub reason: &'static str,
}

/// A length in meters.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Length(pub f64);

impl Length {
    pub fn meters(self) -> f64 {
        self.0
    }
}

const SUFFIXES: [(&str, f64); 6] = [("nm", 1e-9), ("um", 1e-6), ("µm", 1e-6), ("μm", 1e-6), ("mm", 1e-3), ("m", 1.0)];

/// Parses `"82.5um"`, `"661 mm"`, `"0.5"` (bare numbers are meters).
pub fn parse_length(input: &str) -> Result<f64, UnitError> {
    let text = input.trim();
    let err = |reason| UnitError { input: input.to_string(), reason };
    let (number, scale) = SUFFIXES
        .iter()
        .find_map(|&(suffix, scale)| text.strip_suffix(suffix).map(|n| (n.trim_end(), scale)))
        .unwrap_or((text, 1.0));
    if number.is_empty() {
        return Err(err("missing number"));
    }
    let value: f64 = number.parse().map_err(|_| err("expected a number with optional nm/um/mm/m suffix"))?;
    if !value.is_finite() {
        return Err(err("not finite"));
    }
    Ok(value * scale)
}

impl FromStr for Length {
    type Err = UnitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_length(s).map(Length)
    }
}

impl<'de> Deserialize<'de> for Length {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct LengthVisitor;

        impl Visitor<'_> for LengthVisitor {
            type Value = Length;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a length such as \"82.5um\" or a number of meters")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Length, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Length, E> {
                Ok(Length(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Length, E> {
                Ok(Length(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Length, E> {
                Ok(Length(v as f64))
            }
        }

        deserializer.deserialize_any(LengthVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffixes() {
        assert_eq!(parse_length("808nm").unwrap(), 808e-9);
        assert_eq!(parse_length("82.5um").unwrap(), 82.5e-6);
        assert_eq!(parse_length("82.5 µm").unwrap(), 82.5e-6);
        assert_eq!(parse_length("661mm").unwrap(), 0.661);
        assert_eq!(parse_length("-6 mm").unwrap(), -6e-3);
        assert_eq!(parse_length("1m").unwrap(), 1.0);
        assert_eq!(parse_length("0.25").unwrap(), 0.25);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_length("mm").is_err());
        assert!(parse_length("12 furlongs").is_err());
        assert!(parse_length("").is_err());
        assert!(parse_length("inf m").is_err());
    }
}
