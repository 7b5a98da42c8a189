//! Report envelope and the JSON / CSV writers.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use kslab_core::Check;
use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    ReportedOnly,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub status: Status,
    pub measured: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl CheckRow {
    pub fn from_check(c: &Check) -> Self {
        Self {
            name: c.name.clone(),
            status: if c.pass { Status::Pass } else { Status::Fail },
            measured: c.measured,
            target: Some(c.target),
            error: Some(c.rel_err),
            tolerance: Some(c.tolerance),
        }
    }

    /// `measured <= limit`.
    pub fn at_most(name: &str, measured: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            status: if measured <= limit { Status::Pass } else { Status::Fail },
            measured,
            target: None,
            error: None,
            tolerance: Some(limit),
        }
    }

    /// `measured >= limit`.
    pub fn at_least(name: &str, measured: f64, limit: f64) -> Self {
        Self {
            status: if measured >= limit { Status::Pass } else { Status::Fail },
            ..Self::at_most(name, measured, limit)
        }
    }

    /// `lo < measured < hi`; the interval is carried as target ± tolerance.
    pub fn inside(name: &str, measured: f64, lo: f64, hi: f64) -> Self {
        let mid = 0.5 * (lo + hi);
        Self {
            name: name.into(),
            status: if measured > lo && measured < hi {
                Status::Pass
            } else {
                Status::Fail
            },
            measured,
            target: Some(mid),
            error: Some((measured - mid).abs()),
            tolerance: Some(0.5 * (hi - lo)),
        }
    }

    pub fn reported(name: &str, measured: f64) -> Self {
        Self {
            name: name.into(),
            status: Status::ReportedOnly,
            measured,
            target: None,
            error: None,
            tolerance: None,
        }
    }

    pub fn prefixed(mut self, prefix: &str) -> Self {
        self.name = format!("{prefix}: {}", self.name);
        self
    }
}

/// Flat numeric table for CSV output.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

pub struct Report {
    pub result: Value,
    pub checks: Vec<CheckRow>,
    /// `None` when the command has no tabular form.
    pub table: Option<Table>,
}

#[derive(Serialize)]
pub struct Envelope<'a> {
    tool_version: &'static str,
    command: &'a str,
    config_echo: &'a Map<String, Value>,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
    checks_failed: usize,
    checks: &'a [CheckRow],
    result: &'a Value,
}

static NULL: Value = Value::Null;

/// The JSON artifact; it carries no timestamp so repeated runs are byte-identical.
pub fn envelope<'a>(
    command: &'a str,
    echo: &'a Map<String, Value>,
    outcome: Result<&'a Report, &'a str>,
) -> Envelope<'a> {
    match outcome {
        Ok(rep) => Envelope {
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            config_echo: echo,
            status: "ok",
            error: None,
            checks_failed: rep.checks.iter().filter(|c| c.status == Status::Fail).count(),
            checks: &rep.checks,
            result: &rep.result,
        },
        Err(msg) => Envelope {
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            config_echo: echo,
            status: "numerical-failure",
            error: Some(msg),
            checks_failed: 0,
            checks: &[],
            result: &NULL,
        },
    }
}

fn sink(out: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout().lock()),
    })
}

pub fn write_json(out: Option<&Path>, env: &Envelope) -> anyhow::Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, env)?;
    writeln!(w)?;
    Ok(())
}

pub fn write_csv(out: Option<&Path>, table: &Option<Table>) -> anyhow::Result<()> {
    let table = table.as_ref().context("this command has no CSV form")?;
    let mut w = csv::Writer::from_writer(sink(out)?);
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
