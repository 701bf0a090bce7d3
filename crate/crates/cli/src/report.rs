use std::io::Write;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Info,
}

impl Status {
    pub fn of(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Info => "info",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Record {
    pub name: String,
    pub params: Value,
    pub status: Status,
    pub result: Value,
    pub millis: f64,
}

/// Runs one check; an error becomes a failed record.
pub fn timed<E: std::fmt::Display>(
    name: &str,
    params: Value,
    f: impl FnOnce() -> Result<(Status, Value), E>,
) -> Record {
    let start = Instant::now();
    let (status, result) = match f() {
        Ok(r) => r,
        Err(e) => (Status::Fail, json!({ "error": e.to_string() })),
    };
    Record {
        name: name.to_string(),
        params,
        status,
        result,
        millis: start.elapsed().as_secs_f64() * 1e3,
    }
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub info: usize,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub config: Value,
    pub records: Vec<Record>,
    pub summary: Summary,
    pub ok: bool,
}

impl Report {
    pub fn new(command: &str, config: Value, records: Vec<Record>) -> Self {
        let count = |s: Status| records.iter().filter(|r| r.status == s).count();
        let summary = Summary {
            pass: count(Status::Pass),
            fail: count(Status::Fail),
            info: count(Status::Info),
        };
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            config,
            ok: summary.fail == 0,
            summary,
            records,
        }
    }

    pub fn write_json(&self, out: impl Write) -> serde_json::Result<()> {
        let mut out = out;
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out).map_err(serde_json::Error::io)
    }

    pub fn write_csv(&self, out: impl Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "schema_version",
            "name",
            "status",
            "params",
            "result",
            "millis",
        ])?;
        for r in &self.records {
            w.write_record([
                SCHEMA_VERSION.to_string(),
                r.name.clone(),
                r.status.as_str().to_string(),
                r.params.to_string(),
                r.result.to_string(),
                format!("{:.3}", r.millis),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
