//! Report assembly and serialisation.

use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{Map, Value};
use std::io;

/// One flat-ish record of named fields, in insertion order.
#[derive(Debug, Clone, Default)]
pub struct Record {
    fields: Map<String, Value>,
    nonfinite: Vec<String>,
}

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    fn track(&mut self, key: &str, xs: &[f64]) {
        if xs.iter().any(|x| !x.is_finite()) {
            self.nonfinite.push(key.to_string());
        }
    }

    pub fn num(&mut self, key: &str, x: f64) -> &mut Self {
        self.track(key, &[x]);
        self.fields.insert(key.into(), Value::from(x));
        self
    }

    /// `None` becomes null, for quantities that are undefined at a point.
    pub fn opt(&mut self, key: &str, x: Option<f64>) -> &mut Self {
        match x {
            Some(x) => self.num(key, x),
            None => {
                self.fields.insert(key.into(), Value::Null);
                self
            }
        }
    }

    pub fn nums(&mut self, key: &str, xs: &[f64]) -> &mut Self {
        self.track(key, xs);
        self.fields
            .insert(key.into(), xs.iter().copied().map(Value::from).collect());
        self
    }

    pub fn rows<R: AsRef<[f64]>>(&mut self, key: &str, rows: &[R]) -> &mut Self {
        for r in rows {
            self.track(key, r.as_ref());
        }
        let value = rows
            .iter()
            .map(|r| r.as_ref().iter().copied().map(Value::from).collect::<Value>())
            .collect();
        self.fields.insert(key.into(), value);
        self
    }

    pub fn int(&mut self, key: &str, n: u64) -> &mut Self {
        self.fields.insert(key.into(), Value::from(n));
        self
    }

    pub fn flag(&mut self, key: &str, b: bool) -> &mut Self {
        self.fields.insert(key.into(), Value::from(b));
        self
    }

    pub fn text(&mut self, key: &str, s: &str) -> &mut Self {
        self.fields.insert(key.into(), Value::from(s));
        self
    }

    pub fn value(&mut self, key: &str, v: Value) -> &mut Self {
        self.fields.insert(key.into(), v);
        self
    }

    pub fn nonfinite(&self) -> &[String] {
        &self.nonfinite
    }

    pub fn into_value(self) -> Value {
        Value::Object(self.fields)
    }

    fn flatten_into(&self, out: &mut Vec<(String, String)>) {
        for (k, v) in &self.fields {
            flatten(k, v, out);
        }
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                flatten(&format!("{prefix}_{i}"), item, out);
            }
        }
        Value::Object(map) => {
            for (k, item) in map {
                flatten(&format!("{prefix}_{k}"), item, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::Number(n) => out.push((prefix.to_string(), fixed(n.as_f64().unwrap_or(f64::NAN), n))),
        Value::Bool(b) => out.push((prefix.to_string(), b.to_string())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
    }
}

fn fixed(x: f64, n: &serde_json::Number) -> String {
    if n.is_f64() {
        format!("{x:.16e}")
    } else {
        n.to_string()
    }
}

/// An invariant checked over the whole run.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    /// Largest observed value of the checked quantity, where there is one.
    pub worst: Option<f64>,
    pub threshold: Option<f64>,
    pub pass: bool,
}

impl Check {
    /// Passes when every value is at most `threshold`.
    pub fn at_most(name: &'static str, values: impl IntoIterator<Item = f64>, threshold: f64) -> Check {
        let worst = values.into_iter().fold(0.0, f64::max);
        Check {
            name,
            worst: Some(worst),
            threshold: Some(threshold),
            pass: worst <= threshold,
        }
    }

    pub fn all(name: &'static str, flags: impl IntoIterator<Item = bool>) -> Check {
        Check {
            name,
            worst: None,
            threshold: None,
            pass: flags.into_iter().all(|b| b),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub spec: String,
    pub header: Record,
    pub summary: Record,
    pub checks: Vec<Check>,
    pub records: Vec<Record>,
}

impl Report {
    pub fn new(command: &'static str, spec: &str) -> Report {
        Report {
            command,
            spec: spec.to_string(),
            header: Record::new(),
            summary: Record::new(),
            checks: Vec::new(),
            records: Vec::new(),
        }
    }

    /// Field names holding NaN or infinities, prefixed by their record.
    pub fn nonfinite_fields(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .summary
            .nonfinite()
            .iter()
            .map(|k| format!("summary.{k}"))
            .collect();
        for (i, r) in self.records.iter().enumerate() {
            out.extend(r.nonfinite().iter().map(|k| format!("records[{i}].{k}")));
        }
        out
    }

    fn all_checks(&self) -> Vec<Check> {
        let mut checks = self.checks.clone();
        checks.push(Check::all("finite", [self.nonfinite_fields().is_empty()]));
        checks
    }

    pub fn pass(&self) -> bool {
        self.all_checks().iter().all(|c| c.pass)
    }

    pub fn failed_checks(&self) -> Vec<&'static str> {
        self.all_checks().iter().filter(|c| !c.pass).map(|c| c.name).collect()
    }

    pub fn to_value(&self) -> Value {
        let mut doc = Map::new();
        doc.insert("command".into(), Value::from(self.command));
        doc.insert("spec".into(), Value::from(self.spec.as_str()));
        for (k, v) in &self.header.fields {
            doc.insert(k.clone(), v.clone());
        }
        doc.insert("pass".into(), Value::from(self.pass()));
        let checks = self
            .all_checks()
            .iter()
            .map(|c| {
                let mut r = Record::new();
                r.text("name", c.name).flag("pass", c.pass);
                if let Some(w) = c.worst {
                    r.value("worst", Value::from(w));
                }
                if let Some(t) = c.threshold {
                    r.num("threshold", t);
                }
                r.into_value()
            })
            .collect();
        doc.insert("checks".into(), checks);
        doc.insert("summary".into(), self.summary.clone().into_value());
        doc.insert(
            "records".into(),
            self.records.iter().map(|r| r.clone().into_value()).collect(),
        );
        Value::Object(doc)
    }

    pub fn write_json<W: io::Write>(&self, out: W) -> io::Result<()> {
        let mut ser = serde_json::Serializer::with_formatter(out, Fixed(PrettyFormatter::with_indent(b"  ")));
        serde::Serialize::serialize(&self.to_value(), &mut ser).map_err(io::Error::other)?;
        let mut out = ser.into_inner();
        out.write_all(b"\n")
    }

    /// One row per record; nested arrays become `key_i_j` columns.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let rows: Vec<Vec<(String, String)>> = self
            .records
            .iter()
            .map(|r| {
                let mut row = Vec::new();
                r.flatten_into(&mut row);
                row
            })
            .collect();
        if let Some(first) = rows.first() {
            w.write_record(first.iter().map(|(k, _)| k.as_str()))?;
        }
        for row in &rows {
            w.write_record(row.iter().map(|(_, v)| v.as_str()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Pretty JSON with every float written with 17 significant digits.
struct Fixed<'a>(PrettyFormatter<'a>);

impl Formatter for Fixed<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}
