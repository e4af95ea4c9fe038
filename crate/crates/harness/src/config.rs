//! Experiment configuration: flat TOML with dotted keys.
//!
//! ```toml
//! experiment.kind = "mass-sweep"
//! grid.dim = 1
//! grid.cells = [128]
//! model.p = 2.0
//! model.theta = 0.5
//! solver.t_end = 15.0
//! experiment.masses = [0.01, 0.02, 0.05, 0.1]
//! ```
//!
//! Omitted keys take documented defaults, and [`ExperimentConfig::echo`]
//! writes the fully resolved configuration back out in a canonical order.

use crate::error::{HarnessError, Result};
use kssim_core::model::neumann_lambda1;
use kssim_core::{Grid, KsError, ModelParams, Scheme, SnapshotPolicy, SolverConfig};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use toml::Value;

const KNOWN_KEYS: &[&str] = &[
    "experiment.kind",
    "experiment.masses",
    "experiment.epsilons",
    "experiment.p_list",
    "experiment.theta_list",
    "experiment.amplitudes",
    "experiment.levels",
    "grid.dim",
    "grid.lengths",
    "grid.cells",
    "model.chi",
    "model.p",
    "model.theta",
    "model.epsilon",
    "solver.scheme",
    "solver.cfl",
    "solver.dt_max",
    "solver.t_end",
    "solver.sample_every",
    "solver.linear_tol",
    "solver.snapshot_every",
    "solver.max_steps",
    "init.type",
    "init.mass",
    "init.amplitude",
    "init.width",
    "init.modes",
    "init.seed",
    "init.signal",
    "analysis.t1",
    "analysis.t_floor",
    "analysis.q_list",
    "analysis.r_list",
    "output.dir",
];

pub const DEFAULT_CHI: f64 = 1.0;
pub const DEFAULT_AMPLITUDE: f64 = 0.5;
pub const DEFAULT_WIDTH: f64 = 0.1;
pub const DEFAULT_MODES: usize = 4;
pub const DEFAULT_LEVELS: usize = 3;
pub const DEFAULT_OUTPUT_DIR: &str = "kssim-out";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Single,
    MassSweep,
    RegimeAtlas,
    EpsilonStudy,
    RefinementStudy,
    VariationStability,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Single,
        ExperimentKind::MassSweep,
        ExperimentKind::RegimeAtlas,
        ExperimentKind::EpsilonStudy,
        ExperimentKind::RefinementStudy,
        ExperimentKind::VariationStability,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Single => "single",
            ExperimentKind::MassSweep => "mass-sweep",
            ExperimentKind::RegimeAtlas => "regime-atlas",
            ExperimentKind::EpsilonStudy => "epsilon-study",
            ExperimentKind::RefinementStudy => "refinement-study",
            ExperimentKind::VariationStability => "variation-stability",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub dim: usize,
    pub lengths: Vec<f64>,
    pub cells: Vec<usize>,
}

impl GridSpec {
    pub fn build(&self) -> kssim_core::Result<Grid<f64>> {
        Grid::new(self.dim, &self.lengths, &self.cells)
    }

    /// Same box with every cell count multiplied by `2^level`.
    pub fn refined(&self, level: usize) -> GridSpec {
        GridSpec {
            dim: self.dim,
            lengths: self.lengths.clone(),
            cells: self.cells.iter().map(|&c| c << level).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelSpec {
    pub chi: f64,
    pub p: f64,
    pub theta: f64,
    pub epsilon: f64,
}

impl ModelSpec {
    pub fn params(&self) -> kssim_core::Result<ModelParams<f64>> {
        ModelParams::new(self.chi, self.p, self.theta, self.epsilon)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverSpec {
    pub scheme: Scheme,
    pub cfl: f64,
    pub dt_max: f64,
    pub t_end: f64,
    pub sample_every: f64,
    pub linear_tol: f64,
    pub snapshot_every: Option<f64>,
    pub max_steps: Option<usize>,
}

impl SolverSpec {
    pub fn config(&self) -> SolverConfig<f64> {
        let mut cfg = SolverConfig::new(self.t_end, self.sample_every);
        cfg.scheme = self.scheme;
        cfg.cfl = self.cfl;
        cfg.dt_max = self.dt_max;
        cfg.linear_tol = self.linear_tol;
        cfg.snapshots = match self.snapshot_every {
            Some(dt) => SnapshotPolicy::Every(dt),
            None => SnapshotPolicy::None,
        };
        cfg.max_steps = self.max_steps;
        cfg
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitShape {
    Constant,
    /// `1 + δ Π cos(π x_a / L_a)`.
    CosineBump { amplitude: f64 },
    /// Gaussian centered at the origin corner.
    GaussianBump { width: f64 },
    /// `1 + δ Σ a_k φ_k / Σ|a_k|` over low cosine modes with seeded coefficients.
    RandomSmooth { amplitude: f64, modes: usize, seed: u64 },
}

impl InitShape {
    pub fn type_name(&self) -> &'static str {
        match self {
            InitShape::Constant => "constant",
            InitShape::CosineBump { .. } => "cosine-bump",
            InitShape::GaussianBump { .. } => "gaussian-bump",
            InitShape::RandomSmooth { .. } => "random-smooth",
        }
    }
}

/// How `v0` is derived from `u0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignalInit {
    /// `v0 = u0^θ`.
    Power,
    /// `v0 ≡ ū^θ`.
    Mean,
    Zero,
}

impl SignalInit {
    pub fn as_str(&self) -> &'static str {
        match self {
            SignalInit::Power => "power",
            SignalInit::Mean => "mean",
            SignalInit::Zero => "zero",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitSpec {
    pub shape: InitShape,
    /// Target `∫u0`; mass sweeps take masses from the experiment list instead.
    pub mass: Option<f64>,
    pub signal: SignalInit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisSpec {
    pub t1: f64,
    pub t_floor: f64,
    pub q_list: Vec<f64>,
    pub r_list: Vec<f64>,
}

/// Lists that drive multi-run experiments. Only the lists used by the
/// configured kind may be set.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SweepSpec {
    pub masses: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub p_list: Vec<f64>,
    pub theta_list: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub levels: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub grid: GridSpec,
    pub model: ModelSpec,
    pub solver: SolverSpec,
    pub init: InitSpec,
    pub analysis: AnalysisSpec,
    pub sweep: SweepSpec,
    pub output_dir: PathBuf,
}

struct Keys {
    map: BTreeMap<String, Value>,
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(HarnessError::config(key, format!("expected a number, got {}", v.type_str()))),
    }
}

fn as_usize(key: &str, v: &Value) -> Result<usize> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(HarnessError::config(key, format!("expected a non-negative integer, got {v}"))),
    }
}

impl Keys {
    fn take(&mut self, key: &str) -> Option<Value> {
        self.map.remove(key)
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key).map(|v| as_f64(key, &v)).transpose()
    }

    fn req_f64(&mut self, key: &str) -> Result<f64> {
        self.f64(key)?
            .ok_or_else(|| HarnessError::config(key, "required key is missing"))
    }

    fn usize(&mut self, key: &str) -> Result<Option<usize>> {
        self.take(key).map(|v| as_usize(key, &v)).transpose()
    }

    fn string(&mut self, key: &str) -> Result<Option<String>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(HarnessError::config(key, format!("expected a string, got {}", v.type_str()))),
        }
    }

    fn f64_list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Array(a)) => a.iter().map(|v| as_f64(key, v)).collect::<Result<_>>().map(Some),
            Some(v) => Ok(Some(vec![as_f64(key, &v)?])),
        }
    }

    fn usize_list(&mut self, key: &str) -> Result<Option<Vec<usize>>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Array(a)) => a.iter().map(|v| as_usize(key, v)).collect::<Result<_>>().map(Some),
            Some(v) => Ok(Some(vec![as_usize(key, &v)?])),
        }
    }
}

fn model_error(prefix: &str, e: KsError) -> HarnessError {
    match e {
        KsError::ParameterOutOfRange { name, value, reason } => {
            HarnessError::config(&format!("{prefix}{name}"), format!("{reason} (got {value})"))
        }
        other => HarnessError::config(prefix.trim_end_matches('.'), other.to_string()),
    }
}

fn check_positive(key: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(HarnessError::config(key, format!("must be positive and finite (got {x})")))
    }
}

fn forbid(key: &str, set: bool, why: &str) -> Result<()> {
    if set {
        Err(HarnessError::config(key, format!("not used {why}")))
    } else {
        Ok(())
    }
}

/// Parses and validates a configuration, filling defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| HarnessError::Syntax(e.to_string()))?;
    let mut map = BTreeMap::new();
    flatten("", &table, &mut map);
    if let Some(unknown) = map.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
        return Err(HarnessError::config(unknown, "unknown key"));
    }
    let mut keys = Keys { map };

    let kind = match keys.string("experiment.kind")? {
        None => ExperimentKind::Single,
        Some(s) => ExperimentKind::parse(&s).ok_or_else(|| {
            let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.as_str()).collect();
            HarnessError::config("experiment.kind", format!("unknown kind {s:?}; expected one of {names:?}"))
        })?,
    };

    // Grid.
    let dim = keys
        .usize("grid.dim")?
        .ok_or_else(|| HarnessError::config("grid.dim", "required key is missing"))?;
    if !(1..=2).contains(&dim) {
        return Err(HarnessError::config("grid.dim", format!("must be 1 or 2 (got {dim})")));
    }
    let mut cells = keys
        .usize_list("grid.cells")?
        .ok_or_else(|| HarnessError::config("grid.cells", "required key is missing"))?;
    if cells.len() == 1 && dim == 2 {
        cells.push(cells[0]);
    }
    let lengths = keys.f64_list("grid.lengths")?.unwrap_or_else(|| vec![1.0; dim]);
    let grid = GridSpec { dim, lengths, cells };
    let built = grid.build().map_err(|e| {
        let key = match e {
            KsError::NonPositiveLength { .. } => "grid.lengths",
            _ => "grid.cells",
        };
        HarnessError::config(key, e.to_string())
    })?;
    if grid.lengths.len() != dim {
        return Err(HarnessError::config("grid.lengths", format!("expected {dim} entries")));
    }
    if grid.cells.len() != dim {
        return Err(HarnessError::config("grid.cells", format!("expected {dim} entries")));
    }
    let lambda1 = neumann_lambda1(&built);

    // Model.
    let model = ModelSpec {
        chi: keys.f64("model.chi")?.unwrap_or(DEFAULT_CHI),
        p: keys.req_f64("model.p")?,
        theta: keys.req_f64("model.theta")?,
        epsilon: keys.f64("model.epsilon")?.unwrap_or(0.0),
    };

    // Solver.
    let scheme = match keys.string("solver.scheme")?.as_deref() {
        None | Some("imex") => Scheme::Imex,
        Some("explicit") => Scheme::FullyExplicit,
        Some(other) => {
            return Err(HarnessError::config(
                "solver.scheme",
                format!("expected \"imex\" or \"explicit\", got {other:?}"),
            ))
        }
    };
    let t_end = keys.req_f64("solver.t_end")?;
    check_positive("solver.t_end", t_end)?;
    let sample_every = keys
        .f64("solver.sample_every")?
        .unwrap_or_else(|| (0.1 / lambda1).min(t_end / 10.0));
    let solver = SolverSpec {
        scheme,
        cfl: keys.f64("solver.cfl")?.unwrap_or(SolverConfig::<f64>::DEFAULT_CFL),
        dt_max: keys.f64("solver.dt_max")?.unwrap_or(SolverConfig::<f64>::DEFAULT_DT_MAX),
        t_end,
        sample_every,
        linear_tol: keys
            .f64("solver.linear_tol")?
            .unwrap_or(SolverConfig::<f64>::DEFAULT_LINEAR_TOL),
        snapshot_every: keys.f64("solver.snapshot_every")?,
        max_steps: keys.usize("solver.max_steps")?,
    };
    solver.config().validate().map_err(|e| model_error("solver.", e))?;

    // Initial data.
    let type_name = keys.string("init.type")?.unwrap_or_else(|| "cosine-bump".to_string());
    let amplitude = keys.f64("init.amplitude")?;
    let width = keys.f64("init.width")?;
    let modes = keys.usize("init.modes")?;
    let seed = keys.take("init.seed");
    let shape = match type_name.as_str() {
        "constant" => InitShape::Constant,
        "cosine-bump" => InitShape::CosineBump {
            amplitude: amplitude.unwrap_or(DEFAULT_AMPLITUDE),
        },
        "gaussian-bump" => InitShape::GaussianBump {
            width: width.unwrap_or(DEFAULT_WIDTH),
        },
        "random-smooth" => {
            let seed = match seed.as_ref() {
                None => 0,
                Some(Value::Integer(i)) if *i >= 0 => *i as u64,
                Some(v) => return Err(HarnessError::config("init.seed", format!("expected a non-negative integer, got {v}"))),
            };
            InitShape::RandomSmooth {
                amplitude: amplitude.unwrap_or(DEFAULT_AMPLITUDE),
                modes: modes.unwrap_or(DEFAULT_MODES),
                seed,
            }
        }
        other => {
            return Err(HarnessError::config(
                "init.type",
                format!("expected constant, cosine-bump, gaussian-bump or random-smooth, got {other:?}"),
            ))
        }
    };
    let why = format!("by init.type = {type_name:?}");
    forbid(
        "init.amplitude",
        amplitude.is_some() && !matches!(shape, InitShape::CosineBump { .. } | InitShape::RandomSmooth { .. }),
        &why,
    )?;
    forbid("init.width", width.is_some() && !matches!(shape, InitShape::GaussianBump { .. }), &why)?;
    forbid("init.modes", modes.is_some() && !matches!(shape, InitShape::RandomSmooth { .. }), &why)?;
    forbid("init.seed", seed.is_some() && !matches!(shape, InitShape::RandomSmooth { .. }), &why)?;
    match shape {
        InitShape::CosineBump { amplitude } | InitShape::RandomSmooth { amplitude, .. } => {
            if !(0.0..=1.0).contains(&amplitude) {
                return Err(HarnessError::config(
                    "init.amplitude",
                    format!("must lie in [0, 1] to keep u0 >= 0 (got {amplitude})"),
                ));
            }
        }
        InitShape::GaussianBump { width } => check_positive("init.width", width)?,
        InitShape::Constant => {}
    }
    if let InitShape::RandomSmooth { modes: 0, .. } = shape {
        return Err(HarnessError::config("init.modes", "must be at least 1"));
    }
    let signal = match keys.string("init.signal")?.as_deref() {
        None | Some("power") => SignalInit::Power,
        Some("mean") => SignalInit::Mean,
        Some("zero") => SignalInit::Zero,
        Some(other) => {
            return Err(HarnessError::config(
                "init.signal",
                format!("expected power, mean or zero, got {other:?}"),
            ))
        }
    };
    let mass = keys.f64("init.mass")?;
    if let Some(m) = mass {
        check_positive("init.mass", m)?;
    }
    let init = InitSpec { shape, mass, signal };

    // Analysis.
    let t1 = match keys.f64("analysis.t1")? {
        Some(t1) => t1,
        None => {
            let t1 = 10.0 / lambda1;
            if t1 >= t_end {
                return Err(HarnessError::config(
                    "analysis.t1",
                    format!("default 10/lambda1 = {t1} is not below solver.t_end = {t_end}; set it explicitly"),
                ));
            }
            t1
        }
    };
    if !(t1 >= 0.0 && t1 < t_end) {
        return Err(HarnessError::config(
            "analysis.t1",
            format!("must lie in [0, solver.t_end) (got {t1})"),
        ));
    }
    let t_floor = keys.f64("analysis.t_floor")?.unwrap_or(t1);
    if !(t_floor >= 0.0 && t_floor <= t_end) {
        return Err(HarnessError::config("analysis.t_floor", format!("must lie in [0, solver.t_end] (got {t_floor})")));
    }
    let q_list = keys.f64_list("analysis.q_list")?.unwrap_or_else(|| vec![2.0]);
    let r_list = keys.f64_list("analysis.r_list")?.unwrap_or_else(|| vec![2.0]);
    for (key, list) in [("analysis.q_list", &q_list), ("analysis.r_list", &r_list)] {
        if let Some(&q) = list.iter().find(|&&q| q.is_nan() || q < 1.0) {
            return Err(HarnessError::config(key, format!("norm exponents must be >= 1 (got {q})")));
        }
    }
    let analysis = AnalysisSpec {
        t1,
        t_floor,
        q_list,
        r_list,
    };

    // Sweep lists.
    let masses = keys.f64_list("experiment.masses")?;
    let epsilons = keys.f64_list("experiment.epsilons")?;
    let p_list = keys.f64_list("experiment.p_list")?;
    let theta_list = keys.f64_list("experiment.theta_list")?;
    let amplitudes = keys.f64_list("experiment.amplitudes")?;
    let levels = keys.usize("experiment.levels")?;
    let why = format!("by experiment.kind = {:?}", kind.as_str());
    use ExperimentKind as K;
    forbid("experiment.masses", masses.is_some() && kind != K::MassSweep, &why)?;
    forbid("experiment.epsilons", epsilons.is_some() && kind != K::EpsilonStudy, &why)?;
    forbid("experiment.p_list", p_list.is_some() && kind != K::RegimeAtlas, &why)?;
    forbid("experiment.theta_list", theta_list.is_some() && kind != K::RegimeAtlas, &why)?;
    forbid("experiment.amplitudes", amplitudes.is_some() && kind != K::VariationStability, &why)?;
    forbid("experiment.levels", levels.is_some() && kind != K::RefinementStudy, &why)?;

    let sweep = SweepSpec {
        masses: masses.unwrap_or_default(),
        epsilons: epsilons.unwrap_or_default(),
        p_list: p_list.unwrap_or_default(),
        theta_list: theta_list.unwrap_or_default(),
        amplitudes: amplitudes.unwrap_or_default(),
        levels: if kind == K::RefinementStudy {
            levels.unwrap_or(DEFAULT_LEVELS)
        } else {
            0
        },
    };

    let output_dir = PathBuf::from(
        keys.string("output.dir")?
            .unwrap_or_else(|| DEFAULT_OUTPUT_DIR.to_string()),
    );
    debug_assert!(keys.map.is_empty(), "unconsumed keys: {:?}", keys.map.keys());

    let cfg = ExperimentConfig {
        kind,
        grid,
        model,
        solver,
        init,
        analysis,
        sweep,
        output_dir,
    };
    cfg.validate_kind()?;
    Ok(cfg)
}

impl ExperimentConfig {
    fn validate_kind(&self) -> Result<()> {
        let sweep = &self.sweep;
        let need_mass = || {
            self.init
                .mass
                .map(|_| ())
                .ok_or_else(|| HarnessError::config("init.mass", "required key is missing"))
        };
        match self.kind {
            ExperimentKind::Single => {
                need_mass()?;
                self.model.params().map_err(|e| model_error("model.", e))?;
            }
            ExperimentKind::MassSweep => {
                if sweep.masses.len() < 3 {
                    return Err(HarnessError::config(
                        "experiment.masses",
                        "a mass sweep needs at least three masses for the power-law fit",
                    ));
                }
                for &m in &sweep.masses {
                    check_positive("experiment.masses", m)?;
                }
                self.model.params().map_err(|e| model_error("model.", e))?;
            }
            ExperimentKind::RegimeAtlas => {
                need_mass()?;
                if sweep.p_list.is_empty() || sweep.theta_list.is_empty() {
                    let key = if sweep.p_list.is_empty() {
                        "experiment.p_list"
                    } else {
                        "experiment.theta_list"
                    };
                    return Err(HarnessError::config(key, "an atlas needs non-empty p and theta lists"));
                }
                for &p in &sweep.p_list {
                    for &theta in &sweep.theta_list {
                        ModelSpec { p, theta, ..self.model }.params().map_err(|e| match e {
                            KsError::ParameterOutOfRange { name: "p", value, reason } => {
                                HarnessError::config("experiment.p_list", format!("{reason} (got {value})"))
                            }
                            KsError::ParameterOutOfRange {
                                name: "theta",
                                value,
                                reason,
                            } => HarnessError::config("experiment.theta_list", format!("{reason} (got {value})")),
                            other => model_error("model.", other),
                        })?;
                    }
                }
            }
            ExperimentKind::EpsilonStudy => {
                need_mass()?;
                if sweep.epsilons.len() < 2 {
                    return Err(HarnessError::config("experiment.epsilons", "need at least two values"));
                }
                if !sweep.epsilons.windows(2).all(|w| w[1] < w[0]) {
                    return Err(HarnessError::config("experiment.epsilons", "values must decrease strictly"));
                }
                for &epsilon in &sweep.epsilons {
                    ModelSpec { epsilon, ..self.model }.params().map_err(|e| match e {
                        KsError::ParameterOutOfRange { value, reason, .. } => {
                            HarnessError::config("experiment.epsilons", format!("{reason} (got {value})"))
                        }
                        other => model_error("model.", other),
                    })?;
                }
            }
            ExperimentKind::RefinementStudy => {
                need_mass()?;
                self.model.params().map_err(|e| model_error("model.", e))?;
                if sweep.levels < 2 {
                    return Err(HarnessError::config("experiment.levels", "need at least two levels"));
                }
                if self.solver.snapshot_every.is_some() {
                    return Err(HarnessError::config(
                        "solver.snapshot_every",
                        "refinement studies snapshot every step",
                    ));
                }
            }
            ExperimentKind::VariationStability => {
                need_mass()?;
                self.model.params().map_err(|e| model_error("model.", e))?;
                if sweep.amplitudes.is_empty() {
                    return Err(HarnessError::config("experiment.amplitudes", "need at least one amplitude"));
                }
                if let Some(&a) = sweep.amplitudes.iter().find(|a| !(0.0..=1.0).contains(*a)) {
                    return Err(HarnessError::config(
                        "experiment.amplitudes",
                        format!("must lie in [0, 1] (got {a})"),
                    ));
                }
                if !matches!(self.init.shape, InitShape::CosineBump { .. }) {
                    return Err(HarnessError::config(
                        "init.type",
                        "variation-stability perturbs with cosine-bump data",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn lambda1(&self) -> f64 {
        self.grid.build().map(|g| neumann_lambda1(&g)).unwrap_or(f64::NAN)
    }

    /// Fully resolved configuration in canonical key order; parsing it yields `self` again.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut line = |key: &str, value: String| {
            let _ = writeln!(out, "{key} = {value}");
        };
        line("experiment.kind", quote(self.kind.as_str()));
        let sweep = &self.sweep;
        match self.kind {
            ExperimentKind::MassSweep => line("experiment.masses", float_list(&sweep.masses)),
            ExperimentKind::EpsilonStudy => line("experiment.epsilons", float_list(&sweep.epsilons)),
            ExperimentKind::RegimeAtlas => {
                line("experiment.p_list", float_list(&sweep.p_list));
                line("experiment.theta_list", float_list(&sweep.theta_list));
            }
            ExperimentKind::VariationStability => line("experiment.amplitudes", float_list(&sweep.amplitudes)),
            ExperimentKind::RefinementStudy => line("experiment.levels", sweep.levels.to_string()),
            ExperimentKind::Single => {}
        }
        line("grid.dim", self.grid.dim.to_string());
        line("grid.lengths", float_list(&self.grid.lengths));
        line(
            "grid.cells",
            format!(
                "[{}]",
                self.grid.cells.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")
            ),
        );
        line("model.chi", fmt_f64(self.model.chi));
        line("model.p", fmt_f64(self.model.p));
        line("model.theta", fmt_f64(self.model.theta));
        line("model.epsilon", fmt_f64(self.model.epsilon));
        let s = &self.solver;
        line("solver.scheme", quote(s.scheme.as_str()));
        line("solver.cfl", fmt_f64(s.cfl));
        line("solver.dt_max", fmt_f64(s.dt_max));
        line("solver.t_end", fmt_f64(s.t_end));
        line("solver.sample_every", fmt_f64(s.sample_every));
        line("solver.linear_tol", fmt_f64(s.linear_tol));
        if let Some(x) = s.snapshot_every {
            line("solver.snapshot_every", fmt_f64(x));
        }
        if let Some(n) = s.max_steps {
            line("solver.max_steps", n.to_string());
        }
        line("init.type", quote(self.init.shape.type_name()));
        if let Some(m) = self.init.mass {
            line("init.mass", fmt_f64(m));
        }
        match self.init.shape {
            InitShape::Constant => {}
            InitShape::CosineBump { amplitude } => line("init.amplitude", fmt_f64(amplitude)),
            InitShape::GaussianBump { width } => line("init.width", fmt_f64(width)),
            InitShape::RandomSmooth { amplitude, modes, seed } => {
                line("init.amplitude", fmt_f64(amplitude));
                line("init.modes", modes.to_string());
                line("init.seed", seed.to_string());
            }
        }
        line("init.signal", quote(self.init.signal.as_str()));
        line("analysis.t1", fmt_f64(self.analysis.t1));
        line("analysis.t_floor", fmt_f64(self.analysis.t_floor));
        line("analysis.q_list", float_list(&self.analysis.q_list));
        line("analysis.r_list", float_list(&self.analysis.r_list));
        line("output.dir", quote(&self.output_dir.to_string_lossy()));
        out
    }
}

fn quote(s: &str) -> String {
    Value::String(s.to_string()).to_string()
}

/// Shortest round-trip decimal form; `inf`, `-inf` and `nan` as TOML spells them.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:?}")
    }
}

fn float_list(xs: &[f64]) -> String {
    format!("[{}]", xs.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const MINIMAL: &str = r#"
grid.dim = 1
grid.cells = [64]
model.p = 2.0
model.theta = 0.5
solver.t_end = 2.0
init.mass = 0.1
"#;

    fn key_of(e: HarnessError) -> String {
        match e {
            HarnessError::Config { key, .. } => key,
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Single);
        assert_eq!(cfg.solver.cfl, 0.5);
        assert_eq!(cfg.solver.dt_max, 1e-4);
        assert!((cfg.analysis.t1 - 10.0 / (PI * PI)).abs() < 1e-15);
        assert_eq!(cfg.analysis.t_floor, cfg.analysis.t1);
        assert_eq!(cfg.init.shape, InitShape::CosineBump { amplitude: 0.5 });
        assert_eq!(cfg.init.signal, SignalInit::Power);
        assert_eq!(cfg.grid.lengths, vec![1.0]);
        assert!((cfg.solver.sample_every - 0.1 / (PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn echo_round_trips() {
        let texts = [
            MINIMAL.to_string(),
            r#"
experiment.kind = "mass-sweep"
experiment.masses = [0.01, 0.02, 0.05, 0.1]
grid.dim = 2
grid.cells = 16
grid.lengths = [1.0, 2.0]
model.p = 1.5
model.theta = 0.3
model.epsilon = 1e-4
solver.t_end = 1.5
analysis.t1 = 0.5
analysis.q_list = [1.5, inf]
init.type = "random-smooth"
init.seed = 42
"#
            .to_string(),
        ];
        for text in texts {
            let cfg = parse_config(&text).unwrap();
            let echo = cfg.echo();
            let again = parse_config(&echo).unwrap();
            assert_eq!(again, cfg);
            assert_eq!(again.echo(), echo);
        }
    }

    #[test]
    fn nested_tables_are_equivalent() {
        let nested = r#"
[grid]
dim = 1
cells = [64]
[model]
p = 2.0
theta = 0.5
[solver]
t_end = 2.0
[init]
mass = 0.1
"#;
        assert_eq!(parse_config(nested).unwrap(), parse_config(MINIMAL).unwrap());
    }

    #[test]
    fn theta_above_one_rejected() {
        let text = MINIMAL.replace("model.theta = 0.5", "model.theta = 1.5");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("(0, 1]"), "{err}");
        assert_eq!(key_of(err), "model.theta");
    }

    #[test]
    fn p_below_two_needs_epsilon() {
        let text = MINIMAL.replace("model.p = 2.0", "model.p = 1.5");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("p < 2"), "{err}");
        assert_eq!(key_of(err), "model.epsilon");
        assert_eq!(err_code(&text), 2);
    }

    fn err_code(text: &str) -> i32 {
        parse_config(text).unwrap_err().exit_code()
    }

    #[test]
    fn unknown_and_misplaced_keys_name_their_path() {
        let err = parse_config(&format!("{MINIMAL}\nmodel.kappa = 1.0\n")).unwrap_err();
        assert_eq!(key_of(err), "model.kappa");
        let err = parse_config(&format!("{MINIMAL}\ninit.width = 0.2\n")).unwrap_err();
        assert_eq!(key_of(err), "init.width");
        let err = parse_config(&format!("{MINIMAL}\nexperiment.masses = [0.1]\n")).unwrap_err();
        assert_eq!(key_of(err), "experiment.masses");
        let err = parse_config(&MINIMAL.replace("grid.cells = [64]", "grid.cells = [2]")).unwrap_err();
        assert_eq!(key_of(err), "grid.cells");
        let err = parse_config(&MINIMAL.replace("solver.t_end = 2.0", "solver.t_end = 0.5")).unwrap_err();
        assert_eq!(key_of(err), "analysis.t1");
        assert!(matches!(parse_config("grid.dim = "), Err(HarnessError::Syntax(_))));
    }

    #[test]
    fn amplitude_must_keep_density_nonnegative() {
        let err = parse_config(&format!("{MINIMAL}\ninit.amplitude = 1.5\n")).unwrap_err();
        assert_eq!(key_of(err), "init.amplitude");
    }

    #[test]
    fn sweep_lists_validated() {
        let base = MINIMAL.replace("init.mass = 0.1", "");
        let err = parse_config(&format!("{base}\nexperiment.kind = \"mass-sweep\"\nexperiment.masses = [0.1, 0.2]\n"))
            .unwrap_err();
        assert_eq!(key_of(err), "experiment.masses");
        let text = format!("{MINIMAL}\nexperiment.kind = \"epsilon-study\"\nexperiment.epsilons = [1e-3, 1e-2]\n");
        assert_eq!(key_of(parse_config(&text).unwrap_err()), "experiment.epsilons");
        let text = format!("{MINIMAL}\nexperiment.kind = \"regime-atlas\"\nexperiment.p_list = [2.0, 3.0]\nexperiment.theta_list = [0.5, 1.2]\n");
        assert_eq!(key_of(parse_config(&text).unwrap_err()), "experiment.theta_list");
    }
}
