//! Report model and its text, JSON and CSV renderings.

use std::fmt::Write as _;

use crb_core::CrbValue;
use serde::{Deserialize, Serialize};

use crate::config::OutputFormat;

/// Largest log-value whose linear value is printed as a number.
pub const LINEAR_LIMIT: f64 = 700.0;

/// Significant digits in text output.
pub const TEXT_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub quantity: String,
    pub value: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

impl Quantity {
    /// A positive quantity known through its logarithm.
    pub fn from_log(name: impl Into<String>, log_value: f64) -> Self {
        let value = if log_value > LINEAR_LIMIT {
            Value::Text("overflow".into())
        } else {
            Value::Number(log_value.exp())
        };
        Quantity {
            quantity: name.into(),
            value,
            log_value: Some(log_value),
            std_error: None,
        }
    }

    pub fn crb(c: &CrbValue) -> Self {
        Self::from_log(c.name(), c.log_value)
    }

    pub fn number(name: impl Into<String>, value: f64) -> Self {
        Quantity {
            quantity: name.into(),
            value: Value::Number(value),
            log_value: None,
            std_error: None,
        }
    }

    pub fn text(name: impl Into<String>, value: impl Into<String>) -> Self {
        Quantity {
            quantity: name.into(),
            value: Value::Text(value.into()),
            log_value: None,
            std_error: None,
        }
    }

    pub fn with_std_error(mut self, se: f64) -> Self {
        self.std_error = Some(se);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    pub quantities: Vec<Quantity>,
}

impl Report {
    pub fn new(command: &str, model: String) -> Self {
        Report {
            command: command.into(),
            model,
            seed: None,
            trials: None,
            quantities: Vec::new(),
        }
    }

    pub fn push(&mut self, q: Quantity) {
        self.quantities.push(q);
    }

    pub fn get(&self, name: &str) -> Option<&Quantity> {
        self.quantities.iter().find(|q| q.quantity == name)
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Text => self.to_text(),
            OutputFormat::Json => self.to_json(),
            OutputFormat::Csv => self.to_csv(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "crb {}: {}", self.command, self.model);
        if let Some(seed) = self.seed {
            let _ = write!(out, "seed {seed}");
            if let Some(t) = self.trials {
                let _ = write!(out, ", {t} trials");
            }
            out.push('\n');
        }
        let with_se = self.quantities.iter().any(|q| q.std_error.is_some());
        let width = self.quantities.iter().map(|q| q.quantity.len()).max().unwrap_or(0).max(8);
        let _ = write!(out, "{:<width$}  {:>19}  {:>19}", "quantity", "log_value", "value");
        if with_se {
            let _ = write!(out, "  {:>19}", "std_error");
        }
        out.push('\n');
        for q in &self.quantities {
            let log = q.log_value.map_or_else(|| "-".to_string(), sig);
            let value = match &q.value {
                Value::Number(v) => sig(*v),
                Value::Text(t) => t.clone(),
            };
            let _ = write!(out, "{:<width$}  {log:>19}  {value:>19}", q.quantity);
            if with_se {
                let se = q.std_error.map_or_else(|| "-".to_string(), sig);
                let _ = write!(out, "  {se:>19}");
            }
            out.push('\n');
        }
        out
    }

    /// One row per quantity; standard errors get their own `SE(...)` rows.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["quantity", "value", "log_value"]).expect("in-memory write");
        for q in &self.quantities {
            let value = match &q.value {
                Value::Number(v) => v.to_string(),
                Value::Text(t) => t.clone(),
            };
            let log = q.log_value.map(|l| l.to_string()).unwrap_or_default();
            w.write_record([q.quantity.as_str(), &value, &log]).expect("in-memory write");
            if let Some(se) = q.std_error {
                w.write_record([format!("SE({})", q.quantity), se.to_string(), String::new()])
                    .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

/// `x` rounded to [`TEXT_DIGITS`] significant digits, in exponent form.
pub fn sig(x: f64) -> String {
    // -0.0 prints as "-0e0"
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{:.*e}", TEXT_DIGITS - 1, x)
}
