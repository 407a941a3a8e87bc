//! Number formatting shared by CSV, key=value and JSON output.

use std::str::FromStr;

use serde_json::{Number, Value};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn f17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Rewrites every non-integer number in `v` with 17 significant digits.
pub fn json17(v: Value) -> Value {
    match v {
        Value::Number(n) if n.as_u64().is_none() && n.as_i64().is_none() => match n.as_f64() {
            Some(x) if x.is_finite() => Value::Number(Number::from_str(&f17(x)).expect("valid JSON number")),
            _ => Value::Number(n),
        },
        Value::Array(a) => Value::Array(a.into_iter().map(json17).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, json17(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with 17-digit floats and a trailing newline.
pub fn to_json17<T: serde::Serialize>(value: &T) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(&json17(serde_json::to_value(value)?))?;
    s.push('\n');
    Ok(s)
}
