//! JSON experiment configuration and its validation.
//!
//! Parsing rejects unknown fields and reports the offending path; semantic
//! validation runs before any compute and reports paths the same way.

use std::fmt;
use std::path::{Path, PathBuf};

use logsense_core::diagnostics::{builtin_nonnegative_family, TestFunction, ABSOLUTE_TOLERANCE};
use logsense_core::oracles::{EnsembleSpec, RieszCheck};
use logsense_core::params::{select_exponents, ModelParams, DEFAULT_N2_CAP};
use logsense_core::simulator::{InitialData, RunConfig, SchemeConfig, SimState};
use logsense_core::{Grid64, ModelParams64, SimState64};
use serde::{Deserialize, Serialize};

/// Validation failure tied to a dotted field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "config.{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

type Checked = Result<(), ConfigError>;

fn require(ok: bool, path: &str, message: impl FnOnce() -> String) -> Checked {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::new(path, message()))
    }
}

fn join(prefix: &str, field: &str) -> String {
    if prefix.is_empty() {
        field.to_string()
    } else {
        format!("{prefix}.{field}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    Params,
    EntropyCheck,
    EpsStudy,
    RefineStudy,
    Oracle,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Params => "params",
            Mode::EntropyCheck => "entropy-check",
            Mode::EpsStudy => "eps-study",
            Mode::RefineStudy => "refine-study",
            Mode::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Top-level document. Each mode reads the sections it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// If present, must agree with the mode given on the command line.
    #[serde(default)]
    pub mode: Option<Mode>,
    /// Master seed; replaces every oracle seed when set.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub simulation: Option<SimulationConfig>,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub params: Option<ParamsConfig>,
    #[serde(default)]
    pub eps_study: Option<EpsStudyConfig>,
    #[serde(default)]
    pub refine_study: Option<RefineStudyConfig>,
    #[serde(default)]
    pub oracle: Option<OracleConfig>,
}

/// Explicit exponents; `r` defaults to `1 + p/2` and `s` to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exponents {
    pub p: f64,
    pub q: f64,
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default = "one")]
    pub s: f64,
}

fn one() -> f64 {
    1.0
}

fn default_margin() -> f64 {
    0.1
}

fn default_n2_cap() -> f64 {
    DEFAULT_N2_CAP
}

fn default_sample_count() -> usize {
    200
}

/// One regularized run: grid, parameters, initial data, horizon and sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub cells: Vec<usize>,
    pub extents: Vec<f64>,
    pub chi: f64,
    /// Defaults to the number of axes.
    #[serde(default)]
    pub n: Option<usize>,
    pub eps: f64,
    /// When absent, `(p, q, r)` come from the exponent selector.
    #[serde(default)]
    pub exponents: Option<Exponents>,
    #[serde(default = "default_margin")]
    pub exponent_margin: f64,
    #[serde(default = "default_n2_cap")]
    pub n2_cap: f64,
    pub initial_data: InitialData,
    pub t_final: f64,
    /// Explicit sample times in `(0, T]`; overrides `sample_count`.
    #[serde(default)]
    pub sample_times: Vec<f64>,
    /// Number of uniform samples on `(0, T]`.
    #[serde(default = "default_sample_count")]
    pub sample_count: usize,
    /// Additionally sample every `k`-th accepted step.
    #[serde(default)]
    pub observe_every: Option<usize>,
    #[serde(default)]
    pub scheme: SchemeConfig<f64>,
    #[serde(default)]
    pub fixed_dt: Option<f64>,
    /// Fixed step `dt_per_h2 · h²`; takes precedence over `fixed_dt`.
    #[serde(default)]
    pub dt_per_h2: Option<f64>,
    /// Write a binary dump of `u` and `v` at every `k`-th sample.
    #[serde(default)]
    pub dump_every: Option<usize>,
}

impl SimulationConfig {
    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn validate(&self, prefix: &str) -> Checked {
        let p = |f: &str| join(prefix, f);
        let dim = self.cells.len();
        require((1..=3).contains(&dim), &p("cells"), || format!("expected 1 to 3 axes, got {dim}"))?;
        require(self.extents.len() == dim, &p("extents"), || {
            format!("has {} entries for {dim} axes", self.extents.len())
        })?;
        require(self.extents.iter().all(|e| e.is_finite() && *e > 0.0), &p("extents"), || {
            "entries must be positive".into()
        })?;
        if let Some(n) = self.n {
            require(n == dim, &p("n"), || format!("n = {n} does not match {dim} axes"))?;
        }
        require(self.chi.is_finite() && self.chi > 0.0, &p("chi"), || "must be positive".into())?;
        require((0.0..1.0).contains(&self.eps), &p("eps"), || "must lie in [0, 1)".into())?;
        require(self.t_final.is_finite() && self.t_final >= 0.0, &p("t_final"), || {
            "must be a nonnegative number".into()
        })?;
        require(self.exponent_margin > 0.0 && self.exponent_margin < 1.0, &p("exponent_margin"), || {
            "must lie in (0, 1)".into()
        })?;
        require(self.n2_cap.is_finite() && self.n2_cap > 1.0, &p("n2_cap"), || "must exceed 1".into())?;
        require(self.sample_count >= 1, &p("sample_count"), || "must be at least 1".into())?;
        let mut last = 0.0;
        for (i, &t) in self.sample_times.iter().enumerate() {
            require(t > last && t <= self.t_final, &p(&format!("sample_times[{i}]")), || {
                format!("{t} must be increasing within (0, t_final]")
            })?;
            last = t;
        }
        if let Some(k) = self.observe_every {
            require(k >= 1, &p("observe_every"), || "must be at least 1".into())?;
        }
        if let Some(k) = self.dump_every {
            require(k >= 1, &p("dump_every"), || "must be at least 1".into())?;
        }
        require(self.scheme.safety > 0.0 && self.scheme.safety <= 1.0, &p("scheme.safety"), || {
            "must lie in (0, 1]".into()
        })?;
        require(self.scheme.v_floor > 0.0, &p("scheme.v_floor"), || "must be positive".into())?;
        if let Some(dt) = self.fixed_dt {
            require(dt.is_finite() && dt > 0.0, &p("fixed_dt"), || "must be positive".into())?;
        }
        if let Some(c) = self.dt_per_h2 {
            require(c.is_finite() && c > 0.0, &p("dt_per_h2"), || "must be positive".into())?;
        }
        self.initial_data
            .u
            .validate(dim)
            .map_err(|e| ConfigError::new(p("initial_data.u"), e.to_string()))?;
        self.initial_data
            .v
            .validate(dim)
            .map_err(|e| ConfigError::new(p("initial_data.v"), e.to_string()))?;
        require(self.initial_data.v_floor > 0.0, &p("initial_data.v_floor"), || "must be positive".into())?;
        self.grid().map_err(|e| ConfigError::new(p("cells"), e.to_string()))?;
        self.params().map_err(|e| ConfigError::new(p("exponents"), e.to_string()))?;
        Ok(())
    }

    pub fn grid(&self) -> logsense_core::Result<Grid64> {
        Grid64::new(&self.cells, &self.extents)
    }

    /// Model parameters with exponents from the config or the selector.
    pub fn params(&self) -> logsense_core::Result<ModelParams64> {
        let n = self.n.unwrap_or(self.dim());
        let base = ModelParams::new(self.chi, n, self.eps);
        let params = match self.exponents {
            Some(Exponents { p, q, r: Some(r), s }) => base.with_exponents(p, q, r).with_s(s),
            // Midpoint of the admissible range (1, p + 1).
            Some(Exponents { p, q, r: None, s }) => base.with_exponents(p, q, 1.0 + 0.5 * p).with_s(s),
            None => {
                if n < 2 {
                    return Err(logsense_core::Error::Precondition(
                        "explicit exponents are required for n = 1".into(),
                    ));
                }
                let c = select_exponents(self.chi, n, self.exponent_margin, self.n2_cap)?;
                base.with_exponents(c.p, c.q, c.r)
            }
        };
        params.validate_for_entropy()?;
        Ok(params)
    }

    /// The step size implied by `dt_per_h2` or `fixed_dt`, if any.
    pub fn step_size(&self) -> logsense_core::Result<Option<f64>> {
        if let Some(c) = self.dt_per_h2 {
            let h = self.grid()?.min_spacing();
            return Ok(Some(c * h * h));
        }
        Ok(self.fixed_dt)
    }

    pub fn resolved_sample_times(&self) -> Vec<f64> {
        if !self.sample_times.is_empty() {
            return self.sample_times.clone();
        }
        if self.t_final == 0.0 {
            return Vec::new();
        }
        RunConfig::<f64>::default()
            .uniform_samples(self.t_final, self.sample_count)
            .sample_times
    }

    pub fn run_config(&self) -> logsense_core::Result<RunConfig<f64>> {
        Ok(RunConfig {
            scheme: self.scheme.clone(),
            sample_times: self.resolved_sample_times(),
            fixed_dt: self.step_size()?,
            observe_every: self.observe_every,
        })
    }

    pub fn initial_state(&self) -> logsense_core::Result<SimState64> {
        let state: SimState<f64> = self.initial_data.build(self.grid()?, self.params()?)?;
        Ok(state)
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        Self { eps, ..self.clone() }
    }

    /// The same run on a grid refined by `factor` along every axis.
    pub fn refined(&self, factor: usize) -> Self {
        Self { cells: self.cells.iter().map(|c| c * factor).collect(), ..self.clone() }
    }
}

fn default_dual_count() -> usize {
    4
}

fn default_tolerance() -> f64 {
    ABSOLUTE_TOLERANCE
}

/// Test functions and tolerances for the weak-form checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Defaults to the built-in nonnegative family.
    #[serde(default)]
    pub test_functions: Option<Vec<TestFunction>>,
    /// Number of boundary-vanishing bumps in the dual-norm family.
    #[serde(default = "default_dual_count")]
    pub dual_count: usize,
    /// Absolute part of every tolerance; the measured discretization estimate is added.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            test_functions: None,
            dual_count: default_dual_count(),
            tolerance: default_tolerance(),
        }
    }
}

impl DiagnosticsConfig {
    pub fn family(&self, sim: &SimulationConfig) -> Vec<TestFunction> {
        match &self.test_functions {
            Some(f) => f.clone(),
            None => builtin_nonnegative_family(&sim.extents, sim.t_final),
        }
    }

    pub fn validate(&self, sim: &SimulationConfig) -> Checked {
        require(self.tolerance >= 0.0, "diagnostics.tolerance", || "must be nonnegative".into())?;
        let grid = sim.grid().map_err(|e| ConfigError::new("simulation.cells", e.to_string()))?;
        for (i, f) in self.family(sim).iter().enumerate() {
            let path = format!("diagnostics.test_functions[{i}]");
            f.temporal.validate().map_err(|e| ConfigError::new(&path, e.to_string()))?;
            f.spatial.sample(grid).map_err(|e| ConfigError::new(&path, e.to_string()))?;
        }
        Ok(())
    }
}

fn default_points() -> usize {
    200
}

fn default_bruteforce_grid() -> usize {
    1_000_000
}

/// Exponent algebra for one `(χ, n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub chi: f64,
    pub n: usize,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default = "default_n2_cap")]
    pub n2_cap: f64,
    /// Rows of the exported `p`-grid.
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_bruteforce_grid")]
    pub bruteforce_grid: usize,
}

impl ParamsConfig {
    pub fn validate(&self) -> Checked {
        require(self.chi.is_finite() && self.chi > 0.0, "params.chi", || "must be positive".into())?;
        require(self.n >= 2, "params.n", || "must be at least 2".into())?;
        require(self.margin > 0.0 && self.margin < 1.0, "params.margin", || "must lie in (0, 1)".into())?;
        require(self.n2_cap > 1.0, "params.n2_cap", || "must exceed 1".into())?;
        require(self.points >= 2, "params.points", || "must be at least 2".into())?;
        require(self.bruteforce_grid >= 1000, "params.bruteforce_grid", || "must be at least 1000".into())
    }
}

fn default_slack() -> f64 {
    1.2
}

fn default_study_samples() -> usize {
    200
}

/// ε-ladder on top of the `simulation` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsStudyConfig {
    pub ladder: Vec<f64>,
    /// Allowed growth factor between consecutive differences.
    #[serde(default = "default_slack")]
    pub slack: f64,
    /// Number of matched times at which fields are compared.
    #[serde(default = "default_study_samples")]
    pub study_samples: usize,
}

impl EpsStudyConfig {
    pub fn validate(&self) -> Checked {
        require(!self.ladder.is_empty(), "eps_study.ladder", || "must not be empty".into())?;
        for (i, w) in self.ladder.windows(2).enumerate() {
            require(w[1] < w[0], &format!("eps_study.ladder[{}]", i + 1), || {
                "ladder must be strictly decreasing".into()
            })?;
        }
        for (i, &e) in self.ladder.iter().enumerate() {
            require((0.0..1.0).contains(&e), &format!("eps_study.ladder[{i}]"), || "must lie in [0, 1)".into())?;
        }
        require(self.slack >= 1.0, "eps_study.slack", || "must be at least 1".into())?;
        require(self.study_samples >= 1, "eps_study.study_samples", || "must be at least 1".into())
    }
}

fn default_levels() -> usize {
    3
}

fn default_refine_every() -> usize {
    2
}

fn default_min_order() -> f64 {
    1.5
}

/// Refinement triple `(h, h/2, h/4)` of the `simulation` section with `dt = c·h²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefineStudyConfig {
    #[serde(default = "default_levels")]
    pub levels: usize,
    pub dt_per_h2: f64,
    /// Sample every `k`-th step so the sampling gap shrinks with `h²`.
    #[serde(default = "default_refine_every")]
    pub observe_every: usize,
    /// Test functions for the entropy residual; `φ ≡ 1` is always included.
    #[serde(default)]
    pub test_functions: Vec<TestFunction>,
    #[serde(default = "default_min_order")]
    pub min_order: f64,
}

impl RefineStudyConfig {
    pub fn validate(&self, sim: &SimulationConfig) -> Checked {
        require(self.levels >= 2, "refine_study.levels", || "must be at least 2".into())?;
        require(self.dt_per_h2 > 0.0, "refine_study.dt_per_h2", || "must be positive".into())?;
        require(self.observe_every >= 1, "refine_study.observe_every", || "must be at least 1".into())?;
        let grid = sim.grid().map_err(|e| ConfigError::new("simulation.cells", e.to_string()))?;
        for (i, f) in self.test_functions.iter().enumerate() {
            let path = format!("refine_study.test_functions[{i}]");
            f.temporal.validate().map_err(|e| ConfigError::new(&path, e.to_string()))?;
            f.spatial.sample(grid).map_err(|e| ConfigError::new(&path, e.to_string()))?;
        }
        let finest = sim.refined(1 << (self.levels - 1));
        finest.grid().map_err(|e| ConfigError::new("refine_study.levels", e.to_string()))?;
        Ok(())
    }
}

fn default_ode_cases() -> usize {
    100
}

fn default_trials() -> usize {
    1000
}

fn default_power_levels() -> Vec<usize> {
    vec![64, 128, 256]
}

fn default_power_r() -> f64 {
    1.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeSuiteConfig {
    #[serde(default = "default_ode_cases")]
    pub cases: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SquareCompletionConfig {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerIdentityConfig {
    /// Cells per axis of the 2D unit-square grids.
    #[serde(default = "default_power_levels")]
    pub levels: Vec<usize>,
    #[serde(default = "default_power_r")]
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub cells: Vec<usize>,
    pub extents: Vec<f64>,
    #[serde(default)]
    pub ensemble: EnsembleSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanPoincareConfig {
    pub cells: Vec<usize>,
    pub extents: Vec<f64>,
    #[serde(default)]
    pub ensemble: EnsembleSpec,
    #[serde(default = "one")]
    pub p: f64,
    #[serde(default)]
    pub riesz: Option<RieszCheck>,
}

/// Selection of standalone oracles; absent sections are skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default)]
    pub ode: Option<OdeSuiteConfig>,
    #[serde(default)]
    pub square_completion: Option<SquareCompletionConfig>,
    #[serde(default)]
    pub power_identities: Option<PowerIdentityConfig>,
    #[serde(default)]
    pub log_poincare: Option<EnsembleConfig>,
    #[serde(default)]
    pub mean_poincare: Option<MeanPoincareConfig>,
}

fn check_grid(cells: &[usize], extents: &[f64], path: &str) -> Checked {
    Grid64::new(cells, extents).map(|_| ()).map_err(|e| ConfigError::new(path, e.to_string()))
}

impl OracleConfig {
    pub fn validate(&self) -> Checked {
        if let Some(p) = &self.power_identities {
            require(p.levels.len() >= 2, "oracle.power_identities.levels", || "need at least two levels".into())?;
            require(p.r > 0.0, "oracle.power_identities.r", || "must be positive".into())?;
            for w in p.levels.windows(2) {
                require(w[1] > w[0] && w[0] >= 4, "oracle.power_identities.levels", || {
                    "must be increasing and at least 4".into()
                })?;
            }
        }
        if let Some(c) = &self.log_poincare {
            check_grid(&c.cells, &c.extents, "oracle.log_poincare.cells")?;
            c.ensemble
                .validate()
                .map_err(|e| ConfigError::new("oracle.log_poincare.ensemble", e.to_string()))?;
        }
        if let Some(c) = &self.mean_poincare {
            check_grid(&c.cells, &c.extents, "oracle.mean_poincare.cells")?;
            c.ensemble
                .validate()
                .map_err(|e| ConfigError::new("oracle.mean_poincare.ensemble", e.to_string()))?;
            require(c.p >= 1.0, "oracle.mean_poincare.p", || "must be at least 1".into())?;
        }
        Ok(())
    }
}

impl ExperimentConfig {
    /// Parses JSON, rejecting unknown fields with their path.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." { String::new() } else { path };
            ConfigError::new(path, e.into_inner().to_string())
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn simulation(&self) -> Result<&SimulationConfig, ConfigError> {
        self.simulation
            .as_ref()
            .ok_or_else(|| ConfigError::new("simulation", "section is required for this mode"))
    }

    /// Checks that `mode` finds every section it needs, all with valid contents.
    pub fn validate(&self, mode: Mode) -> Checked {
        if let Some(m) = self.mode {
            require(m == mode, "mode", || format!("config says {m}, command line says {mode}"))?;
        }
        match mode {
            Mode::Simulate | Mode::EntropyCheck => {
                let sim = self.simulation()?;
                sim.validate("simulation")?;
                self.diagnostics.validate(sim)
            }
            Mode::Params => self
                .params
                .as_ref()
                .ok_or_else(|| ConfigError::new("params", "section is required for this mode"))?
                .validate(),
            Mode::EpsStudy => {
                let sim = self.simulation()?;
                sim.validate("simulation")?;
                self.diagnostics.validate(sim)?;
                self.eps_study
                    .as_ref()
                    .ok_or_else(|| ConfigError::new("eps_study", "section is required for this mode"))?
                    .validate()
            }
            Mode::RefineStudy => {
                let sim = self.simulation()?;
                sim.validate("simulation")?;
                self.refine_study
                    .as_ref()
                    .ok_or_else(|| ConfigError::new("refine_study", "section is required for this mode"))?
                    .validate(sim)
            }
            Mode::Oracle => self
                .oracle
                .as_ref()
                .ok_or_else(|| ConfigError::new("oracle", "section is required for this mode"))?
                .validate(),
        }
    }
}
