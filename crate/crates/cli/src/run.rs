//! Running a scenario and assembling its report.

use crate::config::{ScenarioConfig, Task};
use crate::report::{Metadata, Report, TaskRecord, TaskStatus, REPORT_SCHEMA_VERSION};
use crate::tasks::run_task;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::time::Instant;

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn canonical<T: serde::Serialize>(v: &T) -> Vec<u8> {
    // serde_json::Value keeps object keys sorted
    let value = serde_json::to_value(v).expect("configs always serialize");
    serde_json::to_vec(&value).expect("values always serialize")
}

/// Runs every task of `cfg` with tolerances multiplied by `tolerance_scale`.
///
/// Tasks run in parallel; records come back in the canonical task order, so the
/// report does not depend on the thread count.
pub fn run_scenario(cfg: &ScenarioConfig, tolerance_scale: f64) -> Report {
    let tol = cfg.tolerances.scaled(tolerance_scale);
    let tasks = cfg.tasks();
    let records: Vec<TaskRecord> = tasks
        .par_iter()
        .map(|&task| {
            let start = Instant::now();
            let result = run_task(task, cfg, &tol);
            let seconds = (!cfg.deterministic).then(|| start.elapsed().as_secs_f64());
            (task, result, seconds)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .map(|(task, result, seconds)| match result {
            Ok(o) => {
                let passed = o.assertions.iter().all(|a| a.passed);
                TaskRecord {
                    task,
                    status: if passed {
                        TaskStatus::Passed
                    } else {
                        TaskStatus::Failed
                    },
                    error: None,
                    assertions: o.assertions,
                    data: o.data,
                    seconds,
                    tables: o.tables,
                }
            }
            Err(e) => TaskRecord {
                task,
                status: TaskStatus::Error,
                error: Some(e),
                assertions: Vec::new(),
                data: serde_json::Value::Null,
                seconds,
                tables: Vec::new(),
            },
        })
        .collect();
    assemble(cfg, tolerance_scale, tol, records)
}

fn assemble(
    cfg: &ScenarioConfig,
    tolerance_scale: f64,
    tol: crate::config::Tolerances,
    mut records: Vec<TaskRecord>,
) -> Report {
    let mut failures = Vec::new();
    let mut tables = Vec::new();
    for r in &mut records {
        if let Some(e) = &r.error {
            failures.push(format!("{}: {e}", r.task.name()));
        }
        for a in r.assertions.iter().filter(|a| !a.passed) {
            failures.push(format!(
                "{}.{}: {:e} not {} {:e}",
                r.task.name(),
                a.name,
                a.value,
                a.relation.symbol(),
                a.threshold
            ));
        }
        tables.append(&mut r.tables);
    }
    let schedules = (
        &cfg.schedules,
        cfg.tasks()
            .contains(&Task::Tangent)
            .then_some(&cfg.tangent.radii),
    );
    Report {
        schema_version: REPORT_SCHEMA_VERSION,
        scenario: cfg.name.clone(),
        description: cfg.description.clone(),
        metadata: Metadata {
            divpair_version: divpair::VERSION.to_string(),
            cli_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: sha256_hex(&canonical(cfg)),
            schedule_sha256: sha256_hex(&canonical(&schedules)),
            tolerance_scale,
            tolerances: tol,
        },
        passed: failures.is_empty(),
        records,
        tables,
        failures,
    }
}
