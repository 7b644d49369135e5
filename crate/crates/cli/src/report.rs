//! Report records, tables and their JSON form.

use crate::config::{Task, Tolerances};
use serde::{Deserialize, Deserializer, Serialize};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Le,
    Lt,
    Ge,
    Gt,
}

impl Relation {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Relation::Le => value <= threshold,
            Relation::Lt => value < threshold,
            Relation::Ge => value >= threshold,
            Relation::Gt => value > threshold,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        }
    }
}

/// JSON has no NaN; serde_json writes it as `null`, read back here.
fn nan_from_null<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

fn rows_nan_from_null<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
    let rows = Vec::<Vec<Option<f64>>>::deserialize(d)?;
    Ok(rows
        .into_iter()
        .map(|r| r.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect())
        .collect())
}

/// One pass/fail judgement together with the threshold it was judged against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    #[serde(deserialize_with = "nan_from_null")]
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub passed: bool,
}

impl Assertion {
    /// NaN values never pass.
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, threshold: f64) -> Self {
        Assertion {
            name: name.into(),
            value,
            relation,
            threshold,
            passed: relation.holds(value, threshold),
        }
    }

    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Assertion::new(name, value, Relation::Le, threshold)
    }
}

/// A rectangular numeric table, exported as CSV by `emit-plotdata`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub id: String,
    pub columns: Vec<String>,
    #[serde(deserialize_with = "rows_nan_from_null")]
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(id: impl Into<String>, columns: &[&str]) -> Self {
        Table {
            id: id.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Comma-separated values with a header line; numbers in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Passed,
    Failed,
    /// The computation itself failed; counts as a numerical failure.
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task: Task,
    pub status: TaskStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub assertions: Vec<Assertion>,
    pub data: serde_json::Value,
    /// Wall-clock time, present only for non-deterministic runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
    /// Moved into [`Report::tables`] when the report is assembled.
    #[serde(skip)]
    pub tables: Vec<Table>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub divpair_version: String,
    pub cli_version: String,
    /// SHA-256 of the canonical JSON form of the configuration.
    pub config_sha256: String,
    /// SHA-256 of the canonical JSON form of every radius schedule in use.
    pub schedule_sha256: String,
    pub tolerance_scale: f64,
    /// Thresholds after scaling.
    pub tolerances: Tolerances,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub scenario: String,
    pub description: String,
    pub metadata: Metadata,
    pub records: Vec<TaskRecord>,
    pub tables: Vec<Table>,
    pub passed: bool,
    /// One line per failed assertion or failed task.
    pub failures: Vec<String>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn table(&self, id: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.id == id)
    }

    pub fn record(&self, task: Task) -> Option<&TaskRecord> {
        self.records.iter().find(|r| r.task == task)
    }

    pub fn assertion(&self, task: Task, name: &str) -> Option<&Assertion> {
        self.record(task)?
            .assertions
            .iter()
            .find(|a| a.name == name)
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PlotError {
    #[error("unknown table `{id}`; available: {}", available.join(", "))]
    UnknownTable { id: String, available: Vec<String> },
}

/// CSV text of the table `id` of `report`.
pub fn emit_plotdata(report: &Report, id: &str) -> Result<String, PlotError> {
    report
        .table(id)
        .map(Table::to_csv)
        .ok_or_else(|| PlotError::UnknownTable {
            id: id.to_string(),
            available: report.tables.iter().map(|t| t.id.clone()).collect(),
        })
}
