use clap::{Parser, Subcommand};
use divpair_cli::{emit_plotdata, gallery, run_scenario, Report, ScenarioConfig};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const OUT_ENV: &str = "DIVPAIR_OUT";

#[derive(Parser)]
#[command(
    name = "divpair",
    version,
    about = "Verify divergence-measure pairings against closed-form oracles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its report and tables.
    Run {
        /// Scenario configuration file (JSON).
        #[arg(
            long,
            conflicts_with = "scenario",
            required_unless_present = "scenario"
        )]
        config: Option<PathBuf>,
        /// Name of a bundled scenario.
        #[arg(long)]
        scenario: Option<String>,
        /// Output directory.
        #[arg(long, env = OUT_ENV)]
        out: Option<PathBuf>,
        /// Worker threads; defaults to the number of cores.
        #[arg(long)]
        jobs: Option<usize>,
        /// Multiplies every tolerance.
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
    },
    /// List the bundled scenarios.
    ListScenarios,
    /// Print one table of a report as CSV.
    EmitPlotdata {
        /// Path of a report.json.
        #[arg(long)]
        report: PathBuf,
        /// Table id, e.g. `traces.p0.halfball_plus`.
        #[arg(long)]
        table: String,
        /// Write to this file instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Numerical(String),
    Config(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            scenario,
            out,
            jobs,
            tolerance_scale,
        } => run(config, scenario, out, jobs, tolerance_scale),
        Command::ListScenarios => {
            for (name, src) in gallery::SCENARIOS {
                let description = ScenarioConfig::parse(src, name)
                    .map(|c| c.description)
                    .unwrap_or_default();
                println!("{name:<20} {description}");
            }
            Ok(())
        }
        Command::EmitPlotdata { report, table, out } => plotdata(&report, &table, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Numerical(m)) => {
            eprintln!("{m}");
            ExitCode::from(1)
        }
        Err(Failure::Config(m)) => {
            eprintln!("{m}");
            ExitCode::from(2)
        }
    }
}

fn run(
    config: Option<PathBuf>,
    scenario: Option<String>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
    tolerance_scale: f64,
) -> Result<(), Failure> {
    if !(tolerance_scale > 0.0 && tolerance_scale.is_finite()) {
        return Err(Failure::Config(format!(
            "--tolerance-scale must be positive, got {tolerance_scale}"
        )));
    }
    let cfg = match (config, scenario) {
        (Some(path), _) => {
            let src = fs::read_to_string(&path).map_err(|e| {
                Failure::Config(format!("{}:1:1: cannot read: {e}", path.display()))
            })?;
            ScenarioConfig::parse(&src, &path.display().to_string())
        }
        (None, Some(name)) => {
            let src = gallery::source(&name).ok_or_else(|| {
                Failure::Config(format!(
                    "unknown scenario `{name}`; available: {}",
                    gallery::names().collect::<Vec<_>>().join(", ")
                ))
            })?;
            ScenarioConfig::parse(src, &name)
        }
        (None, None) => unreachable!("clap requires one of --config and --scenario"),
    }
    .map_err(|e| Failure::Config(e.to_string()))?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        pool = pool.num_threads(n.max(1));
    }
    let pool = pool
        .build()
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    let report = pool.install(|| run_scenario(&cfg, tolerance_scale));

    let base = out
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("divpair-out"));
    let dir = base.join(&cfg.name);
    write_report(&report, &dir, cfg.output.tables)
        .map_err(|e| Failure::Numerical(format!("{}: {e}", dir.display())))?;

    for r in &report.records {
        let passed = r.assertions.iter().filter(|a| a.passed).count();
        println!(
            "{:<12} {:?} ({passed}/{} assertions)",
            r.task.name(),
            r.status,
            r.assertions.len()
        );
    }
    println!("report: {}", dir.join("report.json").display());
    if report.passed {
        println!("PASS {}", report.scenario);
        Ok(())
    } else {
        Err(Failure::Numerical(format!(
            "FAIL {}\n{}",
            report.scenario,
            report.failures.join("\n")
        )))
    }
}

fn write_report(report: &Report, dir: &Path, tables: bool) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), report.to_json())?;
    if tables {
        let tdir = dir.join("tables");
        fs::create_dir_all(&tdir)?;
        for t in &report.tables {
            fs::write(tdir.join(format!("{}.csv", t.id)), t.to_csv())?;
        }
    }
    Ok(())
}

fn plotdata(report: &Path, table: &str, out: Option<&Path>) -> Result<(), Failure> {
    let src = fs::read_to_string(report)
        .map_err(|e| Failure::Config(format!("{}: {e}", report.display())))?;
    let report = Report::from_json(&src).map_err(|e| {
        Failure::Config(format!(
            "{}:{}:{}: {e}",
            report.display(),
            e.line(),
            e.column()
        ))
    })?;
    let csv = emit_plotdata(&report, table).map_err(|e| Failure::Config(e.to_string()))?;
    match out {
        Some(p) => {
            fs::write(p, csv).map_err(|e| Failure::Numerical(format!("{}: {e}", p.display())))
        }
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}
