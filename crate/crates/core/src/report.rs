//! Deterministic report emission. `Rep` is a tiny JSON tree whose writer
//! prints every float with 17 significant digits and spells out non-finite
//! values (`"inf"`, `"-inf"`, `"nan"`), so identical inputs produce
//! byte-identical output.

/// One checked inequality inside a report.
#[derive(Debug, Clone)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    /// False when the check is reported but not enforced (e.g. an upper
    /// bound evaluated against a non-exhaustive Cheeger estimate).
    pub enforced: bool,
}

impl Assertion {
    /// lhs <= rhs + tol, recorded with slack = rhs - lhs.
    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let passed = lhs <= rhs + tol || (lhs.is_infinite() && rhs.is_infinite() && lhs == rhs);
        Assertion { name: name.into(), passed, lhs, rhs, slack: rhs - lhs, enforced: true }
    }

    /// |lhs - rhs| <= tol.
    pub fn close(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let diff = (lhs - rhs).abs();
        Assertion {
            name: name.into(),
            passed: diff <= tol,
            lhs,
            rhs,
            slack: tol - diff,
            enforced: true,
        }
    }

    pub fn holds(name: impl Into<String>, passed: bool, lhs: f64, rhs: f64) -> Self {
        Assertion { name: name.into(), passed, lhs, rhs, slack: rhs - lhs, enforced: true }
    }

    pub fn reported_only(mut self) -> Self {
        self.enforced = false;
        self
    }

    pub fn to_rep(&self) -> Rep {
        Rep::map([
            ("name", Rep::Str(self.name.clone())),
            ("passed", Rep::Bool(self.passed)),
            ("lhs", Rep::Num(self.lhs)),
            ("rhs", Rep::Num(self.rhs)),
            ("slack", Rep::Num(self.slack)),
            ("enforced", Rep::Bool(self.enforced)),
        ])
    }
}

/// Whether all enforced assertions pass.
pub fn all_enforced_pass(assertions: &[Assertion]) -> bool {
    assertions.iter().all(|a| a.passed || !a.enforced)
}

/// Report value tree with deterministic serialization.
#[derive(Debug, Clone, PartialEq)]
pub enum Rep {
    Null,
    Bool(bool),
    Num(f64),
    Int(i64),
    Str(String),
    List(Vec<Rep>),
    Map(Vec<(String, Rep)>),
}

impl Rep {
    pub fn map<const N: usize>(entries: [(&str, Rep); N]) -> Rep {
        Rep::Map(entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }

    pub fn from_pairs(entries: Vec<(String, Rep)>) -> Rep {
        Rep::Map(entries)
    }

    pub fn nums(values: &[f64]) -> Rep {
        Rep::List(values.iter().map(|&v| Rep::Num(v)).collect())
    }

    pub fn strs(values: &[String]) -> Rep {
        Rep::List(values.iter().map(|v| Rep::Str(v.clone())).collect())
    }

    pub fn push(&mut self, key: &str, value: Rep) {
        if let Rep::Map(entries) = self {
            entries.push((key.to_string(), value));
        } else {
            panic!("push on non-map report node");
        }
    }

    pub fn to_json(&self) -> String {
        let mut out = String::new();
        self.write(&mut out);
        out
    }

    pub fn to_json_pretty(&self) -> String {
        let mut out = String::new();
        self.write_pretty(&mut out, 0);
        out.push('\n');
        out
    }

    fn write(&self, out: &mut String) {
        match self {
            Rep::Null => out.push_str("null"),
            Rep::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Rep::Num(x) => out.push_str(&float_repr(*x)),
            Rep::Int(i) => out.push_str(&i.to_string()),
            Rep::Str(s) => write_escaped(s, out),
            Rep::List(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    item.write(out);
                }
                out.push(']');
            }
            Rep::Map(entries) => {
                out.push('{');
                for (i, (k, v)) in entries.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    write_escaped(k, out);
                    out.push(':');
                    v.write(out);
                }
                out.push('}');
            }
        }
    }

    fn write_pretty(&self, out: &mut String, indent: usize) {
        let pad = |out: &mut String, n: usize| {
            for _ in 0..n {
                out.push_str("  ");
            }
        };
        match self {
            Rep::List(items) if !items.is_empty() => {
                out.push_str("[\n");
                for (i, item) in items.iter().enumerate() {
                    pad(out, indent + 1);
                    item.write_pretty(out, indent + 1);
                    if i + 1 < items.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                pad(out, indent);
                out.push(']');
            }
            Rep::Map(entries) if !entries.is_empty() => {
                out.push_str("{\n");
                for (i, (k, v)) in entries.iter().enumerate() {
                    pad(out, indent + 1);
                    write_escaped(k, out);
                    out.push_str(": ");
                    v.write_pretty(out, indent + 1);
                    if i + 1 < entries.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                pad(out, indent);
                out.push('}');
            }
            other => other.write(out),
        }
    }
}

/// 17 significant digits; non-finite values become quoted strings.
pub fn float_repr(x: f64) -> String {
    if x.is_nan() {
        "\"nan\"".to_string()
    } else if x == f64::INFINITY {
        "\"inf\"".to_string()
    } else if x == f64::NEG_INFINITY {
        "\"-inf\"".to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn write_escaped(s: &str, out: &mut String) {
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
}
