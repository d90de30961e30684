//! Versioned JSON reports.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

pub const SCHEMA: &str = "ncbmo-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub measured: f64,
    pub bound: Option<f64>,
    pub units: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    /// Passes iff `measured <= bound`.
    pub fn at_most(name: &str, measured: f64, bound: f64, units: &str) -> Self {
        Check {
            name: name.into(),
            status: if measured <= bound { Status::Pass } else { Status::Fail },
            measured,
            bound: Some(bound),
            units: units.into(),
            note: None,
        }
    }

    /// Passes iff `measured >= bound`.
    pub fn at_least(name: &str, measured: f64, bound: f64, units: &str) -> Self {
        Check {
            status: if measured >= bound { Status::Pass } else { Status::Fail },
            ..Self::at_most(name, measured, bound, units)
        }
    }

    /// A reported value without a bound.
    pub fn info(name: &str, measured: f64, units: &str) -> Self {
        Check {
            name: name.into(),
            status: if measured.is_finite() { Status::Pass } else { Status::Fail },
            measured,
            bound: None,
            units: units.into(),
            note: None,
        }
    }

    pub fn failed(name: &str, note: String) -> Self {
        Check {
            name: name.into(),
            status: Status::Fail,
            measured: f64::NAN,
            bound: None,
            units: String::new(),
            note: Some(note),
        }
    }

    /// Downgrades a failure to a warning.
    pub fn soft(mut self) -> Self {
        if self.status == Status::Fail {
            self.status = Status::Warn;
        }
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub schema: &'static str,
    pub tool: String,
    pub suite: String,
    pub parameters: Value,
    pub checks: Vec<Check>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

impl CheckReport {
    pub fn new(suite: &str, parameters: Value, checks: Vec<Check>, result: Option<Value>) -> Self {
        let status = if checks.iter().any(|c| c.status == Status::Fail) {
            Status::Fail
        } else if checks.iter().any(|c| c.status == Status::Warn) {
            Status::Warn
        } else {
            Status::Pass
        };
        CheckReport {
            schema: SCHEMA,
            tool: format!("ncbmo {}", env!("CARGO_PKG_VERSION")),
            suite: suite.into(),
            parameters,
            checks,
            status,
            result,
            wall_clock_seconds: None,
        }
    }

    pub fn to_json(&self) -> String {
        to_json_string(self)
    }
}

/// Pretty printer that writes every float with 17 significant digits.
struct Sig17<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
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

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Sig17(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser).expect("report serializes");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON is UTF-8")
}
