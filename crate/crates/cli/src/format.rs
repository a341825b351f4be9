//! Reproducible number formatting and report serialization.

use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const SIGNIFICANT_DIGITS: i32 = 12;

/// Fixed-point decimal with 12 significant digits and trailing zeros removed.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (SIGNIFICANT_DIGITS - 1 - magnitude).clamp(0, 60) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            let rounded: f64 = fmt_num(x).parse().unwrap_or(x);
            serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_value).collect()),
        // serde_json's default map is ordered by key.
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with sorted keys and every float rounded to 12 significant digits.
pub fn to_canonical_json<T: Serialize>(value: &T) -> CliResult<String> {
    let v = serde_json::to_value(value).map_err(|e| CliError::Invariant(format!("report does not serialize: {e}")))?;
    let mut text = serde_json::to_string_pretty(&round_value(v))
        .map_err(|e| CliError::Invariant(format!("report does not serialize: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// CSV text from a header and pre-formatted rows.
pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> CliResult<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let invariant = |e: csv::Error| CliError::Invariant(format!("csv: {e}"));
    w.write_record(header).map_err(invariant)?;
    for row in rows {
        w.write_record(row).map_err(invariant)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Invariant(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Invariant(format!("csv: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(0.1 + 0.2), "0.3");
        assert_eq!(fmt_num(std::f64::consts::PI), "3.14159265359");
        assert_eq!(fmt_num(-0.000123456789012345), "-0.000123456789012");
        assert_eq!(fmt_num(123456.7890123456), "123456.789012");
        assert_eq!(fmt_num(-1e-30), "-0.000000000000000000000000000001");
    }

    #[test]
    fn json_keys_are_sorted() {
        #[derive(Serialize)]
        struct R {
            zeta: f64,
            alpha: f64,
        }
        let text = to_canonical_json(&R { zeta: 1.0 / 3.0, alpha: 2.0 }).unwrap();
        assert!(text.find("alpha").unwrap() < text.find("zeta").unwrap());
        assert!(text.contains("0.333333333333"));
        assert!(!text.contains("0.3333333333333"));
    }
}
