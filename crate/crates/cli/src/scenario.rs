//! Scenario files: JSON, versioned, unknown keys rejected.

use std::path::Path;

use fpcs_core::{make_path, PathSpec, PerturbationPath, PwlPotential, SchedulingScenario};
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub system: SystemSpec,
    #[serde(default)]
    pub initial_state: Option<Vec<f64>>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub perturbation: Option<PerturbationSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub gamma_override: Option<f64>,
}

/// Either explicit `pieces` (with optional `lambda`) or a `maxweight` block.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default)]
    pub pieces: Option<Vec<Piece>>,
    #[serde(default)]
    pub lambda: Option<Vec<f64>>,
    #[serde(default)]
    pub maxweight: Option<SchedulingScenario>,
}

/// One affine piece `-μᵀx + b`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Piece {
    pub mu: Vec<f64>,
    pub b: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub kind: String,
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub active_tol: Option<f64>,
    pub subset_budget: Option<u64>,
    pub gamma_samples: Option<usize>,
    pub one_dim_kappa: Option<f64>,
}

/// A parsed scenario with the system already built.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub name: String,
    pub text: String,
    pub scenario: Scenario,
    pub phi: PwlPotential,
}

impl Loaded {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_str(&path.display().to_string(), &text)
    }

    pub fn from_str(name: &str, text: &str) -> Result<Self, CliError> {
        let scenario: Scenario = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let suffix = format!(" at line {} column {}", e.line(), e.column());
            let msg = msg.strip_suffix(&suffix).unwrap_or(&msg);
            CliError::Schema(format!("{name}:{}:{}: {msg}", e.line(), e.column()))
        })?;
        let fail = |key: &str, msg: String| CliError::Schema(format!("{name}:{}: {msg}", line_of(text, key)));
        if scenario.version != SCHEMA_VERSION {
            return Err(fail(
                "version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", scenario.version),
            ));
        }
        let sys = &scenario.system;
        let mut phi = match (&sys.pieces, &sys.maxweight) {
            (Some(pieces), None) => {
                if pieces.is_empty() {
                    return Err(fail("pieces", "pieces must not be empty".into()));
                }
                let n = pieces[0].mu.len();
                if n == 0 {
                    return Err(fail("mu", "drift vectors must not be empty".into()));
                }
                if let Some(k) = pieces.iter().position(|p| p.mu.len() != n) {
                    return Err(fail(
                        "pieces",
                        format!("piece {k} has dimension {} but piece 0 has {n}", pieces[k].mu.len()),
                    ));
                }
                let list = pieces.iter().map(|p| (p.mu.clone(), p.b)).collect();
                PwlPotential::new(n, list, sys.lambda.clone()).map_err(|e| fail("pieces", e.to_string()))?
            }
            (None, Some(mw)) => {
                if sys.lambda.is_some() {
                    return Err(fail("lambda", "put lambda inside the maxweight block".into()));
                }
                mw.to_fpcs().map_err(|e| fail("maxweight", e.to_string()))?
            }
            (Some(_), Some(_)) => {
                return Err(fail("system", "system needs exactly one of pieces or maxweight".into()))
            }
            (None, None) => return Err(fail("system", "system needs one of pieces or maxweight".into())),
        };
        let n = phi.dim;
        if let Some(tol) = scenario.tolerances.active_tol {
            if !(tol.is_finite() && tol >= 0.0) {
                return Err(fail("active_tol", "active_tol must be finite and nonnegative".into()));
            }
            phi.active_tol = tol;
        }
        if let Some(x0) = &scenario.initial_state {
            if x0.len() != n {
                return Err(fail(
                    "initial_state",
                    format!("initial_state has dimension {} but the system has {n}", x0.len()),
                ));
            }
        }
        if let Some(h) = scenario.horizon {
            if !(h.is_finite() && h >= 0.0) {
                return Err(fail("horizon", "horizon must be finite and nonnegative".into()));
            }
        }
        if let Some(g) = scenario.gamma_override {
            if !(g.is_finite() && g >= 1.0) {
                return Err(fail("gamma_override", "gamma_override must be finite and >= 1".into()));
            }
        }
        let loaded = Loaded {
            name: name.to_string(),
            text: text.to_string(),
            scenario,
            phi,
        };
        if loaded.scenario.perturbation.is_some() {
            loaded.path_spec()?;
        }
        Ok(loaded)
    }

    pub fn schema_error(&self, key: &str, msg: impl std::fmt::Display) -> CliError {
        CliError::Schema(format!("{}:{}: {msg}", self.name, line_of(&self.text, key)))
    }

    pub fn initial_state(&self) -> Result<Vec<f64>, CliError> {
        self.scenario
            .initial_state
            .clone()
            .ok_or_else(|| self.schema_error("system", "initial_state is required for this command"))
    }

    pub fn horizon(&self) -> Result<f64, CliError> {
        self.scenario
            .horizon
            .ok_or_else(|| self.schema_error("system", "horizon is required for this command"))
    }

    /// The perturbation family, if any.
    pub fn path_spec(&self) -> Result<Option<PathSpec>, CliError> {
        let Some(p) = &self.scenario.perturbation else {
            return Ok(None);
        };
        if p.kind == "none" {
            return Ok(None);
        }
        let mut obj = p.params.clone();
        obj.insert("kind".into(), Value::String(p.kind.clone()));
        serde_json::from_value(Value::Object(obj))
            .map(Some)
            .map_err(|e| self.schema_error("perturbation", format!("perturbation: {e}")))
    }

    /// One realization of the perturbation, validated against the horizon.
    pub fn path(&self, seed: u64) -> Result<PerturbationPath, CliError> {
        let n = self.phi.dim;
        let Some(spec) = self.path_spec()? else {
            return Ok(PerturbationPath::zero(n));
        };
        let u = make_path(&spec, n, seed).map_err(|e| self.schema_error("perturbation", e))?;
        if let (Some(t), Some(h)) = (u.last_time(), self.scenario.horizon) {
            if t > h {
                return Err(self.schema_error(
                    "perturbation",
                    format!("perturbation jumps at t = {t}, beyond the horizon {h}"),
                ));
            }
        }
        Ok(u)
    }

    pub fn perturbation_seed(&self) -> u64 {
        self.scenario.perturbation.as_ref().map_or(0, |p| p.seed)
    }
}

/// 1-based line of the first occurrence of `"key"`, or 1.
fn line_of(text: &str, key: &str) -> usize {
    let needle = format!("\"{key}\"");
    text.find(&needle)
        .map(|pos| text[..pos].matches('\n').count() + 1)
        .unwrap_or(1)
}
