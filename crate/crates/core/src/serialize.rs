//! Text encoding of real numbers shared by the JSON artifacts and the CSV
//! writer.
//!
//! Reals are written as decimal strings with 17 significant digits, which is
//! enough for an `f64` to round-trip exactly. Infinities use the sentinels
//! `inf` / `-inf` (a reliability threshold of `+inf` means "accept every
//! detection").

use crate::num::Real;
use crate::{Error, Result};

/// Formats a real as a decimal string that parses back to the same `f64`.
pub fn fmt_real<T: Real>(x: T) -> String {
    let x = x.to_f64_lossy();
    if x.is_nan() {
        "nan".to_string()
    } else if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Inverse of [`fmt_real`]; also accepts plain decimal literals so that
/// hand-edited files keep working.
pub fn parse_real_str<T: Real>(text: &str) -> Result<T> {
    let value = match text.trim() {
        "inf" | "+inf" => f64::INFINITY,
        "-inf" => f64::NEG_INFINITY,
        "nan" => f64::NAN,
        other => other
            .parse::<f64>()
            .map_err(|_| Error::parse(format!("not a real number: {other:?}")))?,
    };
    Ok(T::from_f64_lossy(value))
}

/// A real as a JSON string value.
pub(crate) fn real_value<T: Real>(x: T) -> serde_json::Value {
    serde_json::Value::String(fmt_real(x))
}

/// Parses a JSON value produced by [`real_value`].
pub(crate) fn parse_real<T: Real>(value: &serde_json::Value) -> Result<T> {
    match value {
        serde_json::Value::String(s) => parse_real_str(s),
        // Tolerate plain JSON numbers in hand-written inputs.
        serde_json::Value::Number(n) => Ok(T::from_f64_lossy(
            n.as_f64().ok_or_else(|| Error::parse("JSON number out of range"))?,
        )),
        other => Err(Error::parse(format!("expected a real number, got {other}"))),
    }
}

/// Fetches a required field from a JSON object.
pub(crate) fn json_get<'a>(
    value: &'a serde_json::Value,
    key: &str,
) -> Result<&'a serde_json::Value> {
    value.get(key).ok_or_else(|| Error::parse(format!("missing field {key:?}")))
}
