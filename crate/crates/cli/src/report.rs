//! Text and JSON rendering of command results.

use serde_json::{Map, Value};

/// Decimal string with 17 significant digits.
pub fn num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

pub fn count(n: usize) -> Value {
    Value::String(n.to_string())
}

pub fn float(v: f64) -> Value {
    Value::String(num(v))
}

pub fn floats(vs: &[f64]) -> Value {
    Value::Array(vs.iter().map(|v| float(*v)).collect())
}

/// Short form used in text output.
pub fn short(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v:.3e}")
    }
}

/// Result of one command: human lines, machine data and the overall verdict.
#[derive(Debug)]
pub struct Report {
    pub command: &'static str,
    pub lines: Vec<String>,
    pub data: Map<String, Value>,
    pub passed: bool,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Report { command, lines: Vec::new(), data: Map::new(), passed: true }
    }

    pub fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    pub fn set(&mut self, key: &str, v: impl Into<Value>) {
        self.data.insert(key.into(), v.into());
    }

    /// Record a named check.
    pub fn check(&mut self, ok: bool) {
        self.passed &= ok;
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            out.push_str(l);
            out.push('\n');
        }
        out.push_str(if self.passed { "result: pass\n" } else { "result: FAIL\n" });
        out
    }

    pub fn json(&self) -> String {
        let mut data = self.data.clone();
        data.insert("command".into(), self.command.into());
        data.insert("passed".into(), self.passed.into());
        let mut s = serde_json::to_string_pretty(&Value::Object(data)).expect("serializable");
        s.push('\n');
        s
    }
}
