//! Machine-readable reports with canonical key order and `%.12e` floats.

use std::io;

use qwm_core::numerics::CMatrix;
use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::{json, Map, Value};

use crate::manifest::{extended_value, matrix_value, SCHEMA_VERSION};

/// `+∞` as `"inf"`; NaN as `null`.
pub fn float(x: f64) -> Value {
    if x.is_nan() {
        Value::Null
    } else {
        extended_value(x)
    }
}

pub fn matrix(m: &CMatrix) -> Value {
    matrix_value(m)
}

/// C-style `%.12e`: twelve fractional digits and a signed two-digit exponent.
pub fn format_sci(x: f64) -> String {
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

struct SciFormatter;

impl Formatter for SciFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_sci(value).as_bytes())
    }
}

/// A flat JSON object tagged with the schema version and the command name.
#[derive(Debug, Clone)]
pub struct Report {
    fields: Map<String, Value>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut fields = Map::new();
        fields.insert("schema_version".into(), json!(SCHEMA_VERSION));
        fields.insert("kind".into(), json!("report"));
        fields.insert("command".into(), json!(command));
        Self { fields }
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("report values are serializable");
        self.fields.insert(key.into(), v);
    }

    pub fn set_float(&mut self, key: &str, x: f64) {
        self.fields.insert(key.into(), float(x));
    }

    pub fn set_floats(&mut self, key: &str, xs: &[f64]) {
        self.fields.insert(key.into(), Value::Array(xs.iter().map(|&x| float(x)).collect()));
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.fields.get(key)
    }

    /// Sorted keys, `%.12e` floats, trailing newline.
    pub fn render(&self) -> String {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
        Value::Object(self.fields.clone()).serialize(&mut ser).expect("in-memory write");
        let mut s = String::from_utf8(buf).expect("JSON is UTF-8");
        s.push('\n');
        s
    }
}
