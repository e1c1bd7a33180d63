//! Number formatting and CSV/JSON rendering.

use serde_json::{Map, Number, Value};
use udrd::RdPoint;

pub const CURVE_HEADER: &str = "D,alpha,R_perp,R_shannon,rate_loss,units";

/// `%.12g`: 12 significant digits, trailing zeros removed.
pub fn sig12(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// The value a reader of the printed text recovers.
pub fn rounded(v: f64) -> f64 {
    sig12(v).parse().unwrap_or(v)
}

/// Replaces every floating-point number with its 12-digit rounding.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|f| Number::from_f64(rounded(f)))
            .map(Value::Number)
            .unwrap_or(Value::Null),
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

pub fn curve_csv(points: &[RdPoint]) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            sig12(p.distortion),
            sig12(p.alpha),
            sig12(p.rate_perp),
            sig12(p.rate_shannon),
            sig12(p.rate_loss),
            p.units.as_str()
        ));
    }
    out
}

fn curve_record(p: &RdPoint) -> Value {
    let mut m = Map::new();
    for (k, v) in [
        ("D", p.distortion),
        ("alpha", p.alpha),
        ("R_perp", p.rate_perp),
        ("R_shannon", p.rate_shannon),
        ("rate_loss", p.rate_loss),
    ] {
        m.insert(
            k.into(),
            Number::from_f64(rounded(v)).map_or(Value::Null, Value::Number),
        );
    }
    m.insert("units".into(), Value::String(p.units.as_str().into()));
    Value::Object(m)
}

/// A single point renders as an object, a sweep as an array.
pub fn curve_json(points: &[RdPoint], single: bool) -> String {
    let value = if single && points.len() == 1 {
        curve_record(&points[0])
    } else {
        Value::Array(points.iter().map(curve_record).collect())
    };
    let mut s = serde_json::to_string_pretty(&value).expect("serializable");
    s.push('\n');
    s
}
