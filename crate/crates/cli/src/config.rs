//! Experiment configuration files.
//!
//! A config is a flat JSON object. Only `kind` is always required; the
//! remaining keys have defaults or are required by particular kinds. Unknown
//! keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use mems_core::evolution::{Forcing, Mode, ModelParams};
use mems_core::{Grid1D, Grid2D, MembraneState};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Evolve,
    Steady,
    Continuation,
    Pullin,
    LimitStudy,
    Validate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSpec {
    Quasilinear,
    Linearized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Zero,
    Parabola {
        depth: f64,
    },
    /// Two-column CSV `x,u` with a header row, one row per grid node.
    CustomCsv {
        path: PathBuf,
    },
}

/// The raw file contents, before defaults and validation.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: String,
    eps: Option<f64>,
    lambda: Option<f64>,
    mode: Option<ModeSpec>,
    dt: Option<f64>,
    max_time: Option<f64>,
    touchdown_floor: Option<f64>,
    equilibrium_tol: Option<f64>,
    store_every: Option<usize>,
    record_energy: Option<bool>,
    n_x: Option<usize>,
    n_eta: Option<usize>,
    initial: Option<InitialCondition>,
    output_dir: Option<PathBuf>,
    seed: Option<u64>,
    require_survival: Option<bool>,
    newton_tol: Option<f64>,
    lambda_max: Option<f64>,
    dlambda: Option<f64>,
    eps_list: Option<Vec<f64>>,
    dump_profiles: Option<bool>,
    tol_lambda: Option<f64>,
    n_pullin: Option<usize>,
    tau: Option<f64>,
}

/// A validated experiment description.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub eps: f64,
    pub lambda: f64,
    pub mode: ModeSpec,
    pub dt: f64,
    pub max_time: f64,
    pub touchdown_floor: f64,
    pub equilibrium_tol: f64,
    pub store_every: usize,
    pub record_energy: bool,
    pub n_x: usize,
    pub n_eta: usize,
    pub initial: InitialCondition,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Turn touchdown before the horizon into a failure (exit code 4).
    pub require_survival: bool,
    pub newton_tol: f64,
    pub lambda_max: f64,
    pub dlambda: f64,
    /// Aspect ratios for `continuation` (defaults to `[eps]`) and
    /// `limit-study` (defaults to `[0.2, 0.1, 0.05]`).
    pub eps_list: Vec<f64>,
    pub dump_profiles: bool,
    pub tol_lambda: f64,
    pub n_pullin: usize,
    pub tau: f64,
}

pub const DEFAULT_N: usize = 128;
pub const DEFAULT_DT: f64 = 1e-3;
const MIN_NODES: usize = 8;

pub fn parse_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::invalid("config", format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text, path)
}

/// Parses config text; `origin` names the source in error messages and
/// anchors relative paths.
pub fn parse_config_str(text: &str, origin: &Path) -> CliResult<ExperimentConfig> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: origin.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let base = origin.parent().unwrap_or(Path::new("."));
    validate(raw, base)
}

fn parse_kind(s: &str) -> CliResult<Kind> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|_| {
        CliError::invalid(
            "kind",
            format!("unknown kind `{s}`, expected one of evolve, steady, continuation, pullin, limit-study, validate"),
        )
    })
}

fn positive(field: &'static str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::invalid(
            field,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

fn require(field: &'static str, v: Option<f64>, kind: Kind) -> CliResult<f64> {
    v.ok_or_else(|| CliError::invalid(field, format!("required for kind {kind:?}")))
}

fn validate(raw: RawConfig, base: &Path) -> CliResult<ExperimentConfig> {
    let kind = parse_kind(&raw.kind)?;
    let needs_eps = matches!(kind, Kind::Evolve | Kind::Steady | Kind::Continuation);
    let needs_lambda = matches!(kind, Kind::Evolve | Kind::Steady | Kind::LimitStudy);

    let eps = match raw.eps {
        Some(e) => positive("eps", e)?,
        None if needs_eps && raw.eps_list.is_none() => return Err(CliError::invalid("eps", "required")),
        None => 0.1,
    };
    let lambda = if needs_lambda {
        require("lambda", raw.lambda, kind)?
    } else {
        raw.lambda.unwrap_or(0.0)
    };
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(CliError::invalid(
            "lambda",
            format!("must be nonnegative, got {lambda}"),
        ));
    }

    let dt = positive("dt", raw.dt.unwrap_or(DEFAULT_DT))?;
    let max_time = positive("max_time", raw.max_time.unwrap_or(10.0))?;
    let touchdown_floor = raw.touchdown_floor.unwrap_or(0.05);
    if !(touchdown_floor > 0.0 && touchdown_floor < 1.0) {
        return Err(CliError::invalid("touchdown_floor", "must lie in (0, 1)"));
    }
    let equilibrium_tol = raw.equilibrium_tol.unwrap_or(1e-9);
    if equilibrium_tol.is_nan() || equilibrium_tol < 0.0 {
        return Err(CliError::invalid("equilibrium_tol", "must be nonnegative"));
    }
    let store_every = raw.store_every.unwrap_or(1);
    if store_every == 0 {
        return Err(CliError::invalid("store_every", "must be at least 1"));
    }

    let n_x = raw.n_x.unwrap_or(DEFAULT_N);
    let n_eta = raw.n_eta.unwrap_or(DEFAULT_N);
    if n_x < MIN_NODES {
        return Err(CliError::invalid("n_x", format!("must be at least {MIN_NODES}")));
    }
    if n_eta < MIN_NODES {
        return Err(CliError::invalid("n_eta", format!("must be at least {MIN_NODES}")));
    }

    let initial = match raw.initial.unwrap_or(InitialCondition::Zero) {
        InitialCondition::Parabola { depth } if !(0.0..1.0).contains(&depth) => {
            return Err(CliError::invalid(
                "initial.depth",
                format!("must lie in [0, 1), got {depth}"),
            ));
        }
        InitialCondition::CustomCsv { path } => {
            let path = if path.is_relative() { base.join(path) } else { path };
            if !path.is_file() {
                return Err(CliError::invalid(
                    "initial.path",
                    format!("{} does not exist", path.display()),
                ));
            }
            InitialCondition::CustomCsv { path }
        }
        other => other,
    };

    let eps_list = match raw.eps_list {
        Some(list) => {
            if list.is_empty() {
                return Err(CliError::invalid("eps_list", "must not be empty"));
            }
            for &e in &list {
                positive("eps_list", e)?;
            }
            list
        }
        None if kind == Kind::LimitStudy => vec![0.2, 0.1, 0.05],
        None => vec![eps],
    };
    if kind == Kind::LimitStudy && eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CliError::invalid("eps_list", "must be strictly decreasing"));
    }

    let n_pullin = raw.n_pullin.unwrap_or(2000);
    if n_pullin < MIN_NODES {
        return Err(CliError::invalid("n_pullin", format!("must be at least {MIN_NODES}")));
    }

    Ok(ExperimentConfig {
        kind,
        eps,
        lambda,
        mode: raw.mode.unwrap_or(ModeSpec::Quasilinear),
        dt,
        max_time,
        touchdown_floor,
        equilibrium_tol,
        store_every,
        record_energy: raw.record_energy.unwrap_or(false),
        n_x,
        n_eta,
        initial,
        output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("out")),
        seed: raw.seed.unwrap_or(0),
        require_survival: raw.require_survival.unwrap_or(false),
        newton_tol: positive("newton_tol", raw.newton_tol.unwrap_or(1e-10))?,
        lambda_max: positive("lambda_max", raw.lambda_max.unwrap_or(2.0))?,
        dlambda: positive("dlambda", raw.dlambda.unwrap_or(0.05))?,
        eps_list,
        dump_profiles: raw.dump_profiles.unwrap_or(false),
        tol_lambda: positive("tol_lambda", raw.tol_lambda.unwrap_or(1e-4))?,
        n_pullin,
        tau: positive("tau", raw.tau.unwrap_or(1.0))?,
    })
}

impl ExperimentConfig {
    pub fn grid(&self) -> CliResult<Grid2D> {
        Grid2D::with_cells(self.n_x, self.n_eta).map_err(CliError::solver("grid"))
    }

    pub fn params(&self, eps: f64) -> ModelParams {
        ModelParams {
            eps,
            lambda: self.lambda,
            mode: match self.mode {
                ModeSpec::Quasilinear => Mode::Quasilinear,
                ModeSpec::Linearized => Mode::Linearized,
            },
            forcing: Forcing::Electrostatic,
            dt: self.dt,
            touchdown_floor: self.touchdown_floor,
            equilibrium_tol: self.equilibrium_tol,
            max_time: self.max_time,
            store_every: self.store_every,
            record_energy: self.record_energy,
        }
    }

    pub fn initial_state(&self, grid: &Grid1D) -> CliResult<MembraneState> {
        match &self.initial {
            InitialCondition::Zero => Ok(MembraneState::zero(grid.clone())),
            InitialCondition::Parabola { depth } => Ok(MembraneState::parabola(grid.clone(), *depth)),
            InitialCondition::CustomCsv { path } => crate::output::read_profile(path, grid),
        }
    }
}
