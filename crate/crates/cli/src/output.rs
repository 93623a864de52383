//! One result, three renderings.

use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// A command's result: the JSON envelope pieces plus a CSV table and a text
/// rendering.
pub struct Output {
    pub command: &'static str,
    pub modulus: Option<String>,
    pub params: Value,
    pub result: Value,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub text: String,
}

impl Output {
    pub fn new(command: &'static str, result: impl Serialize) -> Self {
        Output {
            command,
            modulus: None,
            params: json!({}),
            result: serde_json::to_value(result).expect("serializable result"),
            header: Vec::new(),
            rows: Vec::new(),
            text: String::new(),
        }
    }

    pub fn modulus(mut self, m: impl ToString) -> Self {
        self.modulus = Some(m.to_string());
        self
    }

    pub fn params(mut self, p: Value) -> Self {
        self.params = p;
        self
    }

    pub fn table<S: ToString>(mut self, header: &[&str], rows: Vec<Vec<S>>) -> Self {
        self.header = header.iter().map(|h| h.to_string()).collect();
        self.rows = rows
            .into_iter()
            .map(|r| r.into_iter().map(|c| c.to_string()).collect())
            .collect();
        self
    }

    pub fn text(mut self, t: impl Into<String>) -> Self {
        self.text = t.into();
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let v = json!({
                    "command": self.command,
                    "modulus": self.modulus,
                    "params": self.params,
                    "result": self.result,
                });
                serde_json::to_string_pretty(&v).expect("json") + "\n"
            }
            Format::Csv => {
                let mut out = String::new();
                out.push_str(&csv_line(&self.header));
                for r in &self.rows {
                    out.push_str(&csv_line(r));
                }
                out
            }
            Format::Text => {
                let mut t = self.text.clone();
                if !t.ends_with('\n') {
                    t.push('\n');
                }
                t
            }
        }
    }
}

fn csv_line(cells: &[String]) -> String {
    let quoted: Vec<String> = cells
        .iter()
        .map(|c| {
            if c.contains([',', '"', '\n']) {
                format!("\"{}\"", c.replace('"', "\"\""))
            } else {
                c.clone()
            }
        })
        .collect();
    quoted.join(",") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_commas() {
        assert_eq!(csv_line(&["a".into(), "b,c".into()]), "a,\"b,c\"\n");
    }

    #[test]
    fn json_envelope_keys() {
        let o = Output::new("factor", json!({"x": 1})).modulus("6");
        let v: Value = serde_json::from_str(&o.render(Format::Json)).unwrap();
        let mut keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        keys.sort();
        assert_eq!(keys, ["command", "modulus", "params", "result"]);
    }
}
