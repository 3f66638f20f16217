//! Run reports: a small TOML document with a schema tag, fixed section and
//! key order, and floats printed with 17 significant digits, so a report is
//! byte-stable for fixed inputs.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hermitian::SparseHermitian;

pub const SCHEMA: &str = "cheblcu-report/1";

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Int(v as i64)
    }
}

impl From<u32> for Value {
    fn from(v: u32) -> Self {
        Value::Int(v as i64)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Str(v.to_owned())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Str(v)
    }
}

fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if c.is_control() => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl Value {
    fn render(&self) -> String {
        match self {
            Value::Int(v) => v.to_string(),
            Value::Float(v) => format_float(*v),
            Value::Bool(v) => v.to_string(),
            Value::Str(s) => escape(s),
        }
    }
}

/// A verified inequality: `measured` compared with `limit`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub limit: f64,
    /// `true` when the check is `measured ≥ limit`, otherwise `measured ≤ limit`.
    pub lower_bound: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            passed: measured <= limit,
            measured,
            limit,
            lower_bound: false,
        }
    }

    pub fn at_least(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            passed: measured >= limit,
            measured,
            limit,
            lower_bound: true,
        }
    }

    /// Distance from the limit on the passing side; negative when violated.
    pub fn slack(&self) -> f64 {
        if self.lower_bound {
            self.measured - self.limit
        } else {
            self.limit - self.measured
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Section {
    name: String,
    fields: Vec<(String, Value)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    command: String,
    sections: Vec<Section>,
    checks: Vec<Check>,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            sections: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    /// Starts a new section; later [`Report::field`] calls fill it.
    pub fn section(&mut self, name: impl Into<String>) -> &mut Self {
        self.sections.push(Section {
            name: name.into(),
            fields: Vec::new(),
        });
        self
    }

    pub fn field(&mut self, key: impl Into<String>, value: impl Into<Value>) -> &mut Self {
        if self.sections.is_empty() {
            self.section("run");
        }
        let section = self.sections.last_mut().expect("section exists");
        section.fields.push((key.into(), value.into()));
        self
    }

    pub fn check(&mut self, check: Check) -> &mut Self {
        self.checks.push(check);
        self
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&Value> {
        self.sections
            .iter()
            .filter(|s| s.name == section)
            .flat_map(|s| s.fields.iter())
            .find(|(k, _)| k == key)
            .map(|(_, v)| v)
    }

    /// Rejects reports carrying non-finite numbers.
    pub fn validate(&self) -> Result<()> {
        for s in &self.sections {
            for (k, v) in &s.fields {
                if let Value::Float(x) = v {
                    if !x.is_finite() {
                        return Err(Error::Numerical {
                            message: format!("report field {}.{k} is not finite", s.name),
                            residual: *x,
                        });
                    }
                }
            }
        }
        for c in &self.checks {
            if !(c.measured.is_finite() && c.limit.is_finite()) {
                return Err(Error::Numerical {
                    message: format!("check {} has a non-finite value", c.name),
                    residual: c.measured,
                });
            }
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "schema = {}", escape(SCHEMA));
        let _ = writeln!(out, "command = {}", escape(&self.command));
        let _ = writeln!(out, "passed = {}", self.passed());
        for s in &self.sections {
            let _ = writeln!(out, "\n[{}]", s.name);
            for (k, v) in &s.fields {
                let _ = writeln!(out, "{k} = {}", v.render());
            }
        }
        if !self.checks.is_empty() {
            out.push_str("\n[checks]\n");
            for c in &self.checks {
                let _ = writeln!(
                    out,
                    "{} = {{ passed = {}, measured = {}, limit = {}, slack = {} }}",
                    c.name,
                    c.passed,
                    format_float(c.measured),
                    format_float(c.limit),
                    format_float(c.slack()),
                );
            }
        }
        out
    }
}

/// SHA-256 of a canonical text form of the matrix (dimension, declared
/// sparsity, then every stored entry in row order).
pub fn matrix_hash(m: &SparseHermitian) -> String {
    let mut canon = format!("{} {}\n", m.dim(), m.sparsity());
    for j in 0..m.dim() {
        for &(k, v) in m.row(j) {
            let _ = writeln!(canon, "{j} {k} {} {}", format_float(v.re), format_float(v.im));
        }
    }
    let digest = Sha256::digest(canon.as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}
