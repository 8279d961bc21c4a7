use std::collections::BTreeMap;
use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Quadrature,
    ClosedForm,
    Bound,
    MonteCarlo,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Quadrature => "quadrature",
            Provenance::ClosedForm => "closed_form",
            Provenance::Bound => "bound",
            Provenance::MonteCarlo => "monte_carlo",
        }
    }
}

/// One emitted result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub command: String,
    pub inputs: BTreeMap<String, Value>,
    pub value: f64,
    pub std_err: Option<f64>,
    pub provenance: Provenance,
    pub flags: BTreeMap<String, Value>,
}

impl Record {
    pub fn new(command: &str, value: f64, provenance: Provenance) -> Self {
        Record {
            command: command.to_string(),
            inputs: BTreeMap::new(),
            value,
            std_err: None,
            provenance,
            flags: BTreeMap::new(),
        }
    }

    pub fn input(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.inputs.insert(key.to_string(), value.into());
        self
    }

    pub fn flag(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.flags.insert(key.to_string(), value.into());
        self
    }

    pub fn std_err(mut self, std_err: f64) -> Self {
        self.std_err = Some(std_err);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Human,
}

/// Compact JSON with every float written as `d.dddddddddddddddde±x`
/// (17 significant digits).
struct Fixed17;

impl Formatter for Fixed17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", fixed17(value))
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

fn fixed17(value: f64) -> String {
    format!("{value:.16e}")
}

pub fn to_json<S: Serialize>(value: &S) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Fixed17);
    value
        .serialize(&mut ser)
        .expect("records serialize to JSON");
    String::from_utf8(out).expect("JSON is UTF-8")
}

/// `x` with 6 significant digits.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.5e}")
    }
}

fn human_value(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => sig6(n.as_f64().unwrap_or(f64::NAN)),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn human_map(map: &BTreeMap<String, Value>) -> String {
    map.iter()
        .map(|(k, v)| format!("{k}={}", human_value(v)))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn render(records: &[Record], format: Format) -> String {
    match format {
        Format::Json => {
            let mut out = String::new();
            for r in records {
                out.push_str(&to_json(r));
                out.push('\n');
            }
            out
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["command", "inputs", "value", "std_err", "provenance", "flags"])
                .expect("in-memory CSV");
            for r in records {
                w.write_record([
                    r.command.clone(),
                    to_json(&r.inputs),
                    fixed17(r.value),
                    r.std_err.map(fixed17).unwrap_or_default(),
                    r.provenance.as_str().to_string(),
                    to_json(&r.flags),
                ])
                .expect("in-memory CSV");
            }
            String::from_utf8(w.into_inner().expect("in-memory CSV")).expect("CSV is UTF-8")
        }
        Format::Human => {
            let mut out = String::new();
            for r in records {
                let err = r.std_err.map(|e| format!(" +/- {}", sig6(e))).unwrap_or_default();
                out.push_str(&format!(
                    "{}: {}{err} [{}]\n  inputs: {}\n",
                    r.command,
                    sig6(r.value),
                    r.provenance.as_str(),
                    human_map(&r.inputs)
                ));
                if !r.flags.is_empty() {
                    out.push_str(&format!("  flags: {}\n", human_map(&r.flags)));
                }
            }
            out
        }
    }
}
