//! JSON Lines and aligned-table output.

use std::io::{self, Write};

use serde_json::{Map, Value};

pub type Record = Map<String, Value>;

pub struct Output {
    pretty: bool,
}

impl Output {
    pub fn new(pretty: bool) -> Self {
        Self { pretty }
    }

    pub fn is_pretty(&self) -> bool {
        self.pretty
    }

    /// Prints records as JSON Lines, or as one table when pretty.
    pub fn records(&self, records: &[Record]) {
        if records.is_empty() {
            return;
        }
        let mut out = io::stdout().lock();
        if self.pretty {
            let _ = out.write_all(render_table(records).as_bytes());
        } else {
            for r in records {
                let _ = writeln!(out, "{}", Value::Object(r.clone()));
            }
        }
    }

    pub fn line(&self, text: &str) {
        println!("{text}");
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if !n.is_i64() && !n.is_u64() => format!("{x:.7}"),
            _ => n.to_string(),
        },
        Value::Array(items) => items.iter().map(cell).collect::<Vec<_>>().join(" "),
        other => other.to_string(),
    }
}

/// Columns are the union of keys in first-seen order.
pub fn render_table(records: &[Record]) -> String {
    let mut columns: Vec<&String> = Vec::new();
    for r in records {
        for k in r.keys() {
            if !columns.contains(&k) {
                columns.push(k);
            }
        }
    }
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| columns.iter().map(|c| r.get(*c).map(cell).unwrap_or_default()).collect())
        .collect();
    let widths: Vec<usize> = columns
        .iter()
        .enumerate()
        .map(|(i, c)| rows.iter().map(|r| r[i].len()).chain([c.len()]).max().unwrap_or(0))
        .collect();
    let mut text = String::new();
    let mut push_row = |cells: Vec<&str>| {
        let line: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        text.push_str(line.join("  ").trim_end());
        text.push('\n');
    };
    push_row(columns.iter().map(|c| c.as_str()).collect());
    push_row(widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>().iter().map(String::as_str).collect());
    for r in &rows {
        push_row(r.iter().map(String::as_str).collect());
    }
    text
}

/// Builds a record from `key => value` pairs.
#[macro_export]
macro_rules! record {
    ($($key:expr => $value:expr),* $(,)?) => {{
        let mut r = $crate::output::Record::new();
        $(r.insert($key.to_string(), serde_json::json!($value));)*
        r
    }};
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_alignment() {
        let rows = vec![record!("label" => "B_1", "v" => 0.5), record!("label" => "long_name", "w" => 3)];
        let text = render_table(&rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "label      v          w");
        assert_eq!(lines[2], "B_1        0.5000000");
        assert_eq!(lines[3], "long_name             3");
    }
}
