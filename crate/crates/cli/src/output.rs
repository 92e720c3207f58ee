use serde_json::Value;
use std::io::Write;

use crate::args::Format;

/// Writes to stdout; a closed pipe (e.g. `ves ... | head`) is not an error.
pub fn print_out(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

pub fn emit(report: &Value, format: Format) {
    match format {
        Format::Json => print_out(&format!("{}\n", serde_json::to_string_pretty(report).expect("serializable"))),
        Format::Table => {
            let mut rows = Vec::new();
            flatten("", report, &mut rows);
            let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
            let text: String = rows.into_iter().map(|(k, v)| format!("{k:<width$}  {v}\n")).collect();
            print_out(&text);
        }
    }
}

/// `a.b.c  value` rows for nested objects; arrays of scalars stay inline.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&key(k), v, out);
            }
        }
        Value::Array(items) if items.iter().any(|i| i.is_object() || i.is_array()) => {
            for (n, item) in items.iter().enumerate() {
                flatten(&key(&n.to_string()), item, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}
