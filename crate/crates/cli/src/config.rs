//! Scenario configuration: parsing, defaults and validation.

use divpair::cantorlab::MAX_DEPTH;
use divpair::geometry::FinitePerimeterSet;
use divpair::measures::TestFunction;
use divpair::pairing::{GaussGreenVariant, TraceMethod, TraceSettings};
use divpair::scenes::{BVFunction, DMField};
use divpair::traces::RadiusSchedule;
use divpair::Vec2;
use serde::{Deserialize, Serialize};
use std::fmt;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Traces,
    Pairing,
    GaussGreen,
    Coarea,
    Cantor,
    Tangent,
    All,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Traces => "traces",
            Task::Pairing => "pairing",
            Task::GaussGreen => "gauss-green",
            Task::Coarea => "coarea",
            Task::Cantor => "cantor",
            Task::Tangent => "tangent",
            Task::All => "all",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TaskList {
    One(Task),
    Many(Vec<Task>),
}

impl TaskList {
    pub fn as_slice(&self) -> &[Task] {
        match self {
            TaskList::One(t) => std::slice::from_ref(t),
            TaskList::Many(v) => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub field: DMField,
    pub u: BVFunction,
    /// Open set the pairing is restricted to; whole plane when absent.
    #[serde(default)]
    pub domain: Option<FinitePerimeterSet>,
}

/// Where density samples are taken.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    Explicit(Vec<Vec2>),
    /// Equally spaced in arc length along the jump set of `u`.
    JumpSamples {
        jump_samples: usize,
    },
}

impl Default for PointSpec {
    fn default() -> Self {
        PointSpec::JumpSamples { jump_samples: 8 }
    }
}

fn half() -> f64 {
    0.5
}

fn all_methods() -> Vec<TraceMethod> {
    vec![
        TraceMethod::Analytic,
        TraceMethod::Halfball,
        TraceMethod::Cylinder,
    ]
}

fn ledger_methods() -> Vec<TraceMethod> {
    vec![TraceMethod::Analytic, TraceMethod::Halfball]
}

fn both_variants() -> Vec<GaussGreenVariant> {
    vec![GaussGreenVariant::Interior, GaussGreenVariant::Closure]
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TracesParams {
    #[serde(default)]
    pub points: PointSpec,
    #[serde(default = "half")]
    pub lambda: f64,
    #[serde(default = "all_methods")]
    pub methods: Vec<TraceMethod>,
    /// Known value of the cylinder double limit at every point.
    #[serde(default)]
    pub expected_cylinder: Option<f64>,
    #[serde(default = "yes")]
    pub jump_identity: bool,
}

impl Default for TracesParams {
    fn default() -> Self {
        TracesParams {
            points: PointSpec::default(),
            lambda: 0.5,
            methods: all_methods(),
            expected_cylinder: None,
            jump_identity: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairingParams {
    /// Defaults to the standard nine-function suite.
    #[serde(default)]
    pub tests: Option<Vec<TestFunction>>,
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Known values of the pairing against each test function.
    #[serde(default)]
    pub expected: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussGreenParams {
    /// Defaults to the scene domain.
    #[serde(default)]
    pub sets: Option<Vec<FinitePerimeterSet>>,
    #[serde(default = "both_variants")]
    pub variants: Vec<GaussGreenVariant>,
    #[serde(default = "ledger_methods")]
    pub methods: Vec<TraceMethod>,
    /// Also check the identity for `A χ_Ω` on this `Ω`.
    #[serde(default)]
    pub zero_extension: Option<FinitePerimeterSet>,
}

impl Default for GaussGreenParams {
    fn default() -> Self {
        GaussGreenParams {
            sets: None,
            variants: both_variants(),
            methods: ledger_methods(),
            zero_extension: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoareaParams {
    /// Defaults to the scene domain.
    #[serde(default)]
    pub window: Option<FinitePerimeterSet>,
}

fn blowup_radii() -> RadiusSchedule {
    RadiusSchedule {
        r0: 0.2,
        ratio: 0.5,
        count: 10,
    }
}

fn one() -> f64 {
    1.0
}

fn four() -> usize {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TangentParams {
    /// Defaults to the first jump sample.
    #[serde(default)]
    pub point: Option<Vec2>,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "blowup_radii")]
    pub radii: RadiusSchedule,
    /// Number of finest radii over which the gap must decrease.
    #[serde(default = "four")]
    pub tail: usize,
}

impl Default for TangentParams {
    fn default() -> Self {
        TangentParams {
            point: None,
            alpha: 1.0,
            radii: blowup_radii(),
            tail: 4,
        }
    }
}

fn fourteen() -> u32 {
    14
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CantorParams {
    pub lambdas: Vec<f64>,
    #[serde(default = "fourteen")]
    pub depth: u32,
    /// First generation used in the box-counting fit.
    #[serde(default = "four_u32")]
    pub first_fit_depth: u32,
    /// Binary address of the point where densities of `E_λ` are sampled.
    #[serde(default)]
    pub density_address: Option<Vec<u8>>,
    /// Number of shifted blocks of the divergence-free field to check.
    #[serde(default)]
    pub field_blocks: Option<u32>,
}

fn four_u32() -> u32 {
    4
}

macro_rules! tolerances {
    ($($name:ident = $default:expr, $doc:literal;)*) => {
        /// Pass/fail thresholds; every one is scaled by `--tolerance-scale`.
        #[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct Tolerances {
            $(
                #[doc = $doc]
                pub $name: f64,
            )*
        }

        impl Default for Tolerances {
            fn default() -> Self {
                Tolerances { $($name: $default),* }
            }
        }

        impl Tolerances {
            pub fn entries(&self) -> Vec<(&'static str, f64)> {
                vec![$((stringify!($name), self.$name)),*]
            }

            pub fn scaled(&self, s: f64) -> Self {
                Tolerances { $($name: self.$name * s),* }
            }
        }
    };
}

tolerances! {
    halfball = 1e-4, "Half-ball densities against analytic ones.";
    cylinder = 1e-3, "Cylinder double limits against their expected value.";
    jump_identity = 1e-5, "Relative residual of the trace-jump identity.";
    collinearity = 1e-9, "Affinity of the λ-density and the λ = 1/2 consistency.";
    pairing = 1e-5, "Distributional against analytic pairing.";
    expected = 1e-3, "Pairings against configured values.";
    gauss_green_analytic = 1e-6, "Ledger residual with analytic traces.";
    gauss_green_numeric = 1e-4, "Ledger residual with half-ball or cylinder traces.";
    coarea = 1e-9, "Relative residual of the coarea disintegration.";
    transfer = 1e-9, "Density against the density of the level set through the same point.";
    dimension = 0.05, "Box dimension against log 2 / log(2 / (1 - λ)).";
    div_free = 1e-10, "Distributional divergence of the construction field.";
    tangent = 1e-3, "Final weak-* gap of the blow-up.";
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory, overridden by `--out` and the environment.
    #[serde(default)]
    pub dir: Option<String>,
    /// Also write every table as CSV next to the report.
    #[serde(default = "yes")]
    pub tables: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            tables: true,
        }
    }
}

fn version() -> u32 {
    CONFIG_SCHEMA_VERSION
}

fn quadrature_tol() -> f64 {
    1e-10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "version")]
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub scene: Option<SceneConfig>,
    pub task: TaskList,
    #[serde(default)]
    pub schedules: TraceSettings,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Absolute tolerance handed to adaptive quadrature.
    #[serde(default = "quadrature_tol")]
    pub quadrature_tol: f64,
    #[serde(default)]
    pub traces: TracesParams,
    #[serde(default)]
    pub pairing: PairingParams,
    #[serde(default)]
    pub gauss_green: GaussGreenParams,
    #[serde(default)]
    pub coarea: CoareaParams,
    #[serde(default)]
    pub tangent: TangentParams,
    #[serde(default)]
    pub cantor: Option<CantorParams>,
    #[serde(default)]
    pub output: OutputConfig,
    /// Leave wall-clock timings out of the report so that reruns are byte-identical.
    #[serde(default = "yes")]
    pub deterministic: bool,
}

/// A configuration problem anchored to a line of its source.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub source_name: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}: {}",
            self.source_name, self.line, self.column, self.message
        )
    }
}

impl std::error::Error for ConfigError {}

/// `(line, column)` of the dotted key path in `src`, both 1-based: each segment is
/// searched for after the previous one. Falls back to the deepest segment found.
fn locate(src: &str, path: &str) -> (usize, usize) {
    let mut from = 0;
    for seg in path.split('.') {
        match src[from..].find(&format!("\"{seg}\"")) {
            Some(i) => from += i,
            None => break,
        }
    }
    let line = src[..from].matches('\n').count() + 1;
    let column = from - src[..from].rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

fn tol_path(name: &str) -> String {
    format!("tolerances.{name}")
}

impl ScenarioConfig {
    /// Parses and validates; `source_name` labels diagnostics.
    pub fn parse(src: &str, source_name: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = serde_json::from_str(src).map_err(|e| ConfigError {
            source_name: source_name.to_string(),
            line: e.line().max(1),
            column: e.column().max(1),
            message: e
                .to_string()
                .split(" at line ")
                .next()
                .unwrap_or_default()
                .to_string(),
        })?;
        cfg.validate().map_err(|(key, message)| {
            let (line, column) = locate(src, &key);
            ConfigError {
                source_name: source_name.to_string(),
                line,
                column,
                message,
            }
        })?;
        Ok(cfg)
    }

    /// The requested tasks with `all` expanded, in canonical order.
    pub fn tasks(&self) -> Vec<Task> {
        let mut out: Vec<Task> = Vec::new();
        for &t in self.task.as_slice() {
            if t == Task::All {
                if let Some(scene) = &self.scene {
                    out.extend([Task::Traces, Task::Pairing, Task::GaussGreen, Task::Coarea]);
                    if !scene.u.jump_set().is_empty() {
                        out.push(Task::Tangent);
                    }
                }
                if self.cantor.is_some() {
                    out.push(Task::Cantor);
                }
            } else {
                out.push(t);
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// First offending key and a message.
    fn validate(&self) -> Result<(), (String, String)> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err((
                "schema_version".to_string(),
                format!(
                    "unsupported schema version {}, expected {CONFIG_SCHEMA_VERSION}",
                    self.schema_version
                ),
            ));
        }
        if self.name.trim().is_empty() {
            return Err(("name".to_string(), "scenario name must not be empty".into()));
        }
        let tasks = self.tasks();
        if tasks.is_empty() {
            return Err(("task".to_string(), "no task to run".into()));
        }
        for (name, v) in self.tolerances.entries() {
            if !(v > 0.0 && v.is_finite()) {
                return Err((
                    tol_path(name),
                    format!("tolerance `{name}` must be positive, got {v}"),
                ));
            }
        }
        if !(self.quadrature_tol > 0.0 && self.quadrature_tol.is_finite()) {
            return Err((
                "quadrature_tol".to_string(),
                "quadrature_tol must be positive".into(),
            ));
        }
        self.schedules
            .halfball
            .validate()
            .map_err(|e| ("schedules.halfball".to_string(), e.to_string()))?;
        self.schedules
            .cylinder
            .validate()
            .map_err(|e| ("schedules.cylinder".to_string(), e.to_string()))?;
        let needs_scene = tasks.iter().any(|t| *t != Task::Cantor);
        if needs_scene && self.scene.is_none() {
            return Err(("task".to_string(), "these tasks need a `scene`".into()));
        }
        if tasks.contains(&Task::Cantor) {
            let c = self.cantor.as_ref().ok_or((
                "task".to_string(),
                "the cantor task needs a `cantor` section".to_string(),
            ))?;
            if c.lambdas.is_empty() {
                return Err((
                    "cantor.lambdas".to_string(),
                    "at least one λ is required".into(),
                ));
            }
            if let Some(l) = c.lambdas.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
                return Err((
                    "cantor.lambdas".to_string(),
                    format!("λ must lie in (0, 1), got {l}"),
                ));
            }
            if c.depth > MAX_DEPTH {
                return Err((
                    "cantor.depth".to_string(),
                    format!("depth {} exceeds {MAX_DEPTH}", c.depth),
                ));
            }
            if c.depth < c.first_fit_depth + 3 {
                return Err((
                    "cantor.first_fit_depth".to_string(),
                    "the box-counting fit needs at least 4 depths".into(),
                ));
            }
            if let Some(a) = &c.density_address {
                if a.len() > c.depth as usize || a.iter().any(|b| *b > 1) {
                    return Err((
                        "cantor.density_address".to_string(),
                        "address must be binary and no longer than depth".into(),
                    ));
                }
            }
            if let Some(m) = c.field_blocks {
                if !(1..=8).contains(&m) {
                    return Err((
                        "cantor.field_blocks".to_string(),
                        format!("field_blocks must lie in 1..=8, got {m}"),
                    ));
                }
            }
        }
        let l = self.traces.lambda;
        if !l.is_finite() {
            return Err(("traces.lambda".to_string(), "λ must be finite".into()));
        }
        match &self.traces.points {
            PointSpec::Explicit(p) if p.is_empty() && tasks.contains(&Task::Traces) => {
                return Err(("traces.points".to_string(), "no sample points".into()))
            }
            PointSpec::JumpSamples { jump_samples: 0 } if tasks.contains(&Task::Traces) => {
                return Err((
                    "traces.jump_samples".to_string(),
                    "jump_samples must be positive".into(),
                ))
            }
            _ => {}
        }
        if let Some(tests) = &self.pairing.tests {
            if tests.is_empty() {
                return Err(("pairing.tests".to_string(), "no test functions".into()));
            }
            if let Some(e) = &self.pairing.expected {
                if e.len() != tests.len() {
                    return Err((
                        "pairing.expected".to_string(),
                        format!("{} expected values for {} tests", e.len(), tests.len()),
                    ));
                }
            }
        } else if let Some(e) = &self.pairing.expected {
            if e.len() != divpair::measures::default_suite().len() {
                return Err((
                    "pairing.expected".to_string(),
                    "one expected value per test function is required".into(),
                ));
            }
        }
        if tasks.contains(&Task::GaussGreen) {
            let has_sets = self
                .gauss_green
                .sets
                .as_ref()
                .is_some_and(|s| !s.is_empty());
            let has_domain = self.scene.as_ref().is_some_and(|s| s.domain.is_some());
            if !has_sets && !has_domain {
                return Err((
                    "gauss_green".to_string(),
                    "gauss-green needs `sets` or a scene `domain`".into(),
                ));
            }
        }
        if tasks.contains(&Task::Coarea) {
            let window = self
                .coarea
                .window
                .as_ref()
                .or(self.scene.as_ref().and_then(|s| s.domain.as_ref()));
            match window {
                Some(w) if w.bounds().is_some() => {}
                _ => {
                    return Err((
                        "coarea".to_string(),
                        "coarea needs a bounded `window` or scene `domain`".into(),
                    ))
                }
            }
        }
        if tasks.contains(&Task::Tangent) {
            self.tangent
                .radii
                .validate()
                .map_err(|e| ("tangent.radii".to_string(), e.to_string()))?;
            if self.tangent.tail < 2 || self.tangent.tail > self.tangent.radii.count {
                return Err((
                    "tangent.tail".to_string(),
                    "tail must lie between 2 and the number of radii".into(),
                ));
            }
        }
        Ok(())
    }
}
