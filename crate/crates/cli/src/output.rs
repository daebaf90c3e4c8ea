use std::io::{self, Write};

use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    /// One JSON object per line.
    #[default]
    Json,
    /// Tab-separated values with a header row.
    Tsv,
}

/// Line-oriented record writer.
pub struct Sink<W: Write> {
    out: W,
    format: Format,
    header: Option<Vec<String>>,
}

impl<W: Write> Sink<W> {
    pub fn new(out: W, format: Format) -> Self {
        Sink { out, format, header: None }
    }

    pub fn emit(&mut self, record: Value) -> io::Result<()> {
        match self.format {
            Format::Json => writeln!(self.out, "{record}"),
            Format::Tsv => self.emit_tsv(record),
        }
    }

    /// Writes a JSON line verbatim; used when a value does not fit a JSON
    /// number in [`Value`].
    pub fn emit_raw_json(&mut self, key: &str, digits: &str) -> io::Result<()> {
        match self.format {
            Format::Json => writeln!(self.out, "{{\"{key}\":{digits}}}"),
            Format::Tsv => {
                self.emit_tsv(Value::Object(Map::from_iter([(key.to_string(), Value::String(digits.into()))])))
            }
        }
    }

    fn emit_tsv(&mut self, record: Value) -> io::Result<()> {
        let Value::Object(fields) = record else {
            return writeln!(self.out, "{}", cell(&record));
        };
        let keys: Vec<String> = fields.keys().cloned().collect();
        if self.header.as_ref() != Some(&keys) {
            writeln!(self.out, "{}", keys.join("\t"))?;
            self.header = Some(keys);
        }
        let row: Vec<String> = fields.values().map(cell).collect();
        writeln!(self.out, "{}", row.join("\t"))
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(items) if items.iter().all(|i| !i.is_array() && !i.is_object()) => {
            items.iter().map(cell).collect::<Vec<_>>().join(",")
        }
        other => other.to_string(),
    }
}
