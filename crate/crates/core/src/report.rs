//! Serialization helpers shared by every report type.
//!
//! Numbers are written at 12 significant digits and infinities as the strings
//! `"inf"` / `"-inf"`, so reports diff cleanly and never contain `null`.

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

/// Significant digits used for every serialized number.
pub const SIG_DIGITS: usize = 12;

/// Rounds `x` to [`SIG_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

/// An extended real ready for serialization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtReal(pub f64);

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let x = self.0;
        if x == f64::INFINITY {
            serializer.serialize_str("inf")
        } else if x == f64::NEG_INFINITY {
            serializer.serialize_str("-inf")
        } else if x.is_nan() {
            serializer.serialize_str("nan")
        } else {
            serializer.serialize_f64(round_sig(x))
        }
    }
}

pub fn ext<S: Serializer>(x: &f64, serializer: S) -> Result<S::Ok, S::Error> {
    ExtReal(*x).serialize(serializer)
}

pub fn ext_vec<S: Serializer>(values: &[f64], serializer: S) -> Result<S::Ok, S::Error> {
    let mut seq = serializer.serialize_seq(Some(values.len()))?;
    for &v in values {
        seq.serialize_element(&ExtReal(v))?;
    }
    seq.end()
}

pub fn ext_opt<S: Serializer>(value: &Option<f64>, serializer: S) -> Result<S::Ok, S::Error> {
    match value {
        Some(v) => serializer.serialize_some(&ExtReal(*v)),
        None => serializer.serialize_none(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[allow(clippy::approx_constant)]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round_sig(std::f64::consts::LN_2), 0.693147180560);
        assert_eq!(round_sig(0.0), 0.0);
        assert_eq!(round_sig(-1234.56789012345), -1234.56789012);
    }
}
