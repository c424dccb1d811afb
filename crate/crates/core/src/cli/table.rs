//! Row buffers rendered as CSV or JSON.

use std::fmt::Write as _;

use crate::format::sig17;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(usize),
    Real(f64),
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Debug)]
pub struct Table {
    pub command: String,
    /// Ordered key/value pairs for the metadata line.
    pub meta: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

fn json_string(text: &str) -> String {
    serde_json::to_string(text).expect("strings always serialize")
}

impl Table {
    pub fn new(command: &str, columns: Vec<&'static str>) -> Self {
        Self {
            command: command.to_string(),
            meta: Vec::new(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.meta.push((key.to_string(), value.into()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# xychain {} command={}", env!("CARGO_PKG_VERSION"), self.command);
        for (k, v) in &self.meta {
            let _ = write!(out, " {k}={v}");
        }
        out.push('\n');
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row
                .iter()
                .map(|cell| match cell {
                    Cell::Int(v) => v.to_string(),
                    Cell::Real(v) => sig17(*v),
                    Cell::Text(s) => csv_field(s),
                })
                .collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut out = String::from("{\"meta\": {");
        let _ = write!(
            out,
            "\"version\": {}, \"command\": {}",
            json_string(env!("CARGO_PKG_VERSION")),
            json_string(&self.command)
        );
        for (k, v) in &self.meta {
            let _ = write!(out, ", {}: {}", json_string(k), json_string(v));
        }
        out.push_str("}, \"rows\": [");
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            out.push('{');
            for (j, (name, cell)) in self.columns.iter().zip(row).enumerate() {
                if j > 0 {
                    out.push_str(", ");
                }
                let value = match cell {
                    Cell::Int(v) => v.to_string(),
                    Cell::Real(v) if v.is_finite() => sig17(*v),
                    Cell::Real(_) => "null".to_string(),
                    Cell::Text(s) => json_string(s),
                };
                let _ = write!(out, "{}: {value}", json_string(name));
            }
            out.push('}');
        }
        out.push_str("]}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new("demo", vec!["N", "F", "variant"]);
        t.meta("n", "4,5");
        t.push(vec![4.into(), 0.5.into(), "eq6".into()]);
        t.push(vec![5.into(), f64::NAN.into(), "a,b".into()]);
        t
    }

    #[test]
    fn csv_layout() {
        let csv = sample().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# xychain ") && lines[0].ends_with("command=demo n=4,5"));
        assert_eq!(lines[1], "N,F,variant");
        assert_eq!(lines[2], "4,0.50000000000000000,eq6");
        assert_eq!(lines[3], "5,nan,\"a,b\"");
    }

    #[test]
    fn json_parses_back() {
        let json = sample().to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["meta"]["command"], "demo");
        assert_eq!(v["rows"][0]["F"], 0.5);
        assert!(v["rows"][1]["F"].is_null());
        assert_eq!(v["rows"][1]["variant"], "a,b");
    }
}
