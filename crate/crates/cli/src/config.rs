//! Scenario files: a JSON document describing one system, one initial state
//! and the checks to run.
//!
//! ```json
//! {
//!   "system": { "form": "conservative", "N": "u^(-2)/2" },
//!   "initial": { "t0": 0, "x": 1, "y": 1, "vx": 0, "vy": 0 },
//!   "t_end": 5,
//!   "method": "dp54",
//!   "tolerance": 1e-10,
//!   "sample_interval": 0.05,
//!   "invariants": ["H", "I0", "I2", "I3"]
//! }
//! ```

use std::path::Path;

use serde::Deserialize;

use ermakov_core::integrate::Control;
use ermakov_core::invariants::Invariant;
use ermakov_core::{parse_expression, CartesianState, Expression, SystemSpec};

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase", deny_unknown_fields)]
pub enum SystemConfig {
    General {
        f: String,
        g: String,
    },
    Normalized {
        #[serde(rename = "F")]
        f: String,
        #[serde(rename = "G")]
        g: String,
    },
    Conservative {
        #[serde(rename = "N")]
        n: String,
    },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub t0: f64,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Rk4,
    Dp54,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradientKvConfig {
    pub b1: f64,
    pub b2: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionConfig {
    pub rho0: f64,
    #[serde(default)]
    pub rhodot0: f64,
}

/// Pass/fail thresholds; every field has a default.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Checks {
    /// Relative drift of the requested invariants.
    pub drift: f64,
    /// Radial and angular residuals of the closed-form solution.
    pub analytic: f64,
    /// Residual of the Noether conditions on the sample grid.
    pub noether: f64,
    /// Relative drift of the integrals built from passing conditions.
    pub noether_drift: f64,
    /// Largest state difference between the two reduction routes.
    pub two_path: f64,
    /// Largest `I0` difference between the two frames.
    pub frame: f64,
}

impl Default for Checks {
    fn default() -> Self {
        Checks {
            drift: 1e-7,
            analytic: 1e-6,
            noether: 1e-8,
            noether_drift: 1e-6,
            two_path: 1e-7,
            frame: 1e-9,
        }
    }
}

/// The document as written.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub system: SystemConfig,
    #[serde(default)]
    pub omega: Option<String>,
    pub initial: InitialConfig,
    pub t_end: f64,
    pub method: MethodName,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default)]
    pub sample_interval: Option<f64>,
    #[serde(default)]
    pub invariants: Vec<String>,
    #[serde(default)]
    pub gradient_kv: Option<GradientKvConfig>,
    #[serde(default)]
    pub reduction: Option<ReductionConfig>,
    #[serde(default)]
    pub checks: Checks,
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: SystemSpec,
    pub initial: CartesianState,
    pub t_end: f64,
    pub control: Control,
    pub invariants: Vec<Invariant>,
    pub gradient_kv: Option<(f64, f64)>,
    pub reduction: Option<ReductionConfig>,
    pub checks: Checks,
}

fn expression(field: &str, src: &str, var: &str) -> Result<Expression, CliError> {
    parse_expression(src, var).map_err(|e| CliError::Config(format!("{field}: {e}")))
}

fn positive(field: &str, value: f64) -> Result<f64, CliError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(CliError::Config(format!(
            "{field} must be positive and finite, got {value}"
        )))
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<Scenario, CliError> {
        let spec = match &self.system {
            SystemConfig::General { f, g } => SystemSpec::general(
                expression("system.f", f, "v")?,
                expression("system.g", g, "v")?,
            ),
            SystemConfig::Normalized { f, g } => SystemSpec::normalized(
                expression("system.F", f, "u")?,
                expression("system.G", g, "u")?,
            ),
            SystemConfig::Conservative { n } => {
                SystemSpec::conservative(expression("system.N", n, "u")?)
            }
        };
        let omega = self
            .omega
            .as_deref()
            .map(|src| expression("omega", src, "t"))
            .transpose()?;
        let spec = spec.with_omega(omega);

        let i = self.initial;
        if ![i.t0, i.x, i.y, i.vx, i.vy, self.t_end]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(CliError::Config(
                "initial state and t_end must be finite".into(),
            ));
        }
        if !(self.t_end > i.t0) {
            return Err(CliError::Config(format!(
                "t_end ({}) must exceed initial.t0 ({})",
                self.t_end, i.t0
            )));
        }

        let mut control = match self.method {
            MethodName::Dp54 => {
                if self.step.is_some() {
                    return Err(CliError::Config(
                        "`step` applies to rk4; use `tolerance` with dp54".into(),
                    ));
                }
                Control::dp54(positive("tolerance", self.tolerance.unwrap_or(1e-10))?)
            }
            MethodName::Rk4 => {
                if self.tolerance.is_some() {
                    return Err(CliError::Config(
                        "`tolerance` applies to dp54; use `step` with rk4".into(),
                    ));
                }
                let step = self
                    .step
                    .ok_or_else(|| CliError::Config("rk4 needs `step`".into()))?;
                Control::rk4(positive("step", step)?)
            }
        };
        if let Some(dt) = self.sample_interval {
            control = control.with_sample_interval(positive("sample_interval", dt)?);
        }

        let invariants = self
            .invariants
            .iter()
            .map(|name| {
                name.parse::<Invariant>()
                    .map_err(|e| CliError::Config(format!("invariants: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;

        if let Some(r) = self.reduction {
            if r.rho0 == 0.0 || !r.rho0.is_finite() || !r.rhodot0.is_finite() {
                return Err(CliError::Config(format!(
                    "reduction.rho0 must be finite and nonzero, got {}",
                    r.rho0
                )));
            }
        }

        let c = self.checks;
        for (name, v) in [
            ("checks.drift", c.drift),
            ("checks.analytic", c.analytic),
            ("checks.noether", c.noether),
            ("checks.noether_drift", c.noether_drift),
            ("checks.two_path", c.two_path),
            ("checks.frame", c.frame),
        ] {
            positive(name, v)?;
        }

        Ok(Scenario {
            spec,
            initial: CartesianState::new(i.t0, i.x, i.y, i.vx, i.vy),
            t_end: self.t_end,
            control,
            invariants,
            gradient_kv: self.gradient_kv.map(|kv| (kv.b1, kv.b2)),
            reduction: self.reduction,
            checks: self.checks,
        })
    }
}

/// Reads, parses and validates a scenario file.
pub fn load(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    ScenarioConfig::from_json(&text)?.validate()
}
