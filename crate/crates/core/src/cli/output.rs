use std::io::Write;

use serde_json::{json, Map, Value as Json};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Missing,
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Num(v)
    }
}

impl From<Option<f64>> for Value {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Value::Missing, Value::Num)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl Value {
    fn csv(&self) -> String {
        match self {
            // 12 significant digits
            Value::Num(v) => format!("{v:.11e}"),
            Value::Int(v) => v.to_string(),
            Value::Bool(v) => v.to_string(),
            Value::Text(s) => s.clone(),
            Value::Missing => String::new(),
        }
    }

    fn json(&self) -> Json {
        match self {
            Value::Num(v) if v.is_finite() => {
                // round-trip through the CSV text so both outputs agree
                Json::from(format!("{v:.11e}").parse::<f64>().unwrap_or(*v))
            }
            Value::Num(_) | Value::Missing => Json::Null,
            Value::Int(v) => Json::from(*v),
            Value::Bool(v) => Json::from(*v),
            Value::Text(s) => Json::from(s.clone()),
        }
    }
}

/// Rows with a fixed column schema.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the schema");
        self.rows.push(row);
    }

    pub fn get(&self, row: usize, column: &str) -> Option<&Value> {
        let k = self.columns.iter().position(|c| *c == column)?;
        self.rows.get(row).map(|r| &r[k])
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(&self.columns).map_err(err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Value::csv)).map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self, metadata: &Metadata) -> Json {
        let rows: Vec<Json> = self
            .rows
            .iter()
            .map(|r| {
                let mut m = Map::new();
                for (c, v) in self.columns.iter().zip(r) {
                    m.insert((*c).to_string(), v.json());
                }
                Json::Object(m)
            })
            .collect();
        json!({
            "metadata": metadata.to_json(),
            "columns": self.columns,
            "rows": rows,
        })
    }

    pub fn write_json<W: Write>(&self, mut out: W, metadata: &Metadata) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, &self.to_json(metadata)).map_err(|e| Error::Io(e.into()))?;
        writeln!(out)?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Metadata {
    pub command: &'static str,
    pub seed: u64,
    pub extra: Vec<(&'static str, Json)>,
}

impl Metadata {
    pub fn new(command: &'static str, seed: u64) -> Self {
        Self {
            command,
            seed,
            extra: Vec::new(),
        }
    }

    pub fn with(mut self, key: &'static str, value: Json) -> Self {
        self.extra.push((key, value));
        self
    }

    /// Unix seconds; `SOURCE_DATE_EPOCH` wins so outputs can be reproduced byte for byte.
    fn timestamp() -> u64 {
        std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .unwrap_or_else(|| {
                std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map_or(0, |d| d.as_secs())
            })
    }

    fn to_json(&self) -> Json {
        let mut m = Map::new();
        m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        m.insert("command".into(), json!(self.command));
        m.insert("seed".into(), json!(self.seed));
        m.insert("timestamp".into(), json!(Self::timestamp()));
        m.insert("units".into(), json!("rates in units of kappa"));
        for (k, v) in &self.extra {
            m.insert((*k).to_string(), v.clone());
        }
        Json::Object(m)
    }
}
