//! Scenario and sweep configuration files.
//!
//! One TOML file per experiment. Unknown keys are rejected so that typos
//! fail loudly instead of silently running defaults.

use crate::error::CliError;
use painleve::compliance::{Compliance, ComplianceParams};
use painleve::contact::{BodyParams, ClassicalRod};
use painleve::hybrid::{HybridState, IntegrationConfig};
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodySection {
    pub alpha: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplianceSection {
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default = "default_law")]
    pub law: String,
}

fn default_law() -> String {
    "linear".to_string()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub y: f64,
    pub w: f64,
    pub theta: f64,
    pub phi: f64,
    pub v: f64,
    #[serde(default)]
    pub x: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationSection {
    pub t_end: f64,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
    /// Stop early when the rod rises through this height.
    #[serde(default)]
    pub section_y_up: Option<f64>,
}

fn default_rtol() -> f64 {
    1e-9
}

fn default_atol() -> f64 {
    1e-12
}

impl IntegrationSection {
    fn config(&self, tol_override: Option<f64>) -> IntegrationConfig {
        let mut cfg = IntegrationConfig {
            rtol: self.rtol,
            atol: self.atol,
            section_y_up: self.section_y_up,
            ..Default::default()
        };
        if let Some(tol) = tol_override {
            cfg.rtol = tol;
            cfg.atol = tol * 1e-3;
        }
        cfg
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_samples")]
    pub samples: usize,
}

// hand-written so that an absent [output] section gets the same sample count
// as an empty one
impl Default for OutputSection {
    fn default() -> Self {
        Self {
            samples: default_samples(),
        }
    }
}

fn default_samples() -> usize {
    2001
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub body: BodySection,
    pub compliance: ComplianceSection,
    pub initial: InitialSection,
    pub integration: IntegrationSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl ScenarioConfig {
    pub fn body(&self) -> Result<ClassicalRod, CliError> {
        Ok(ClassicalRod::new(BodyParams::new(
            self.body.alpha,
            self.body.mu,
        )?))
    }

    pub fn compliance(&self) -> Result<Compliance, CliError> {
        if self.compliance.law != "linear" {
            return Err(CliError::Config(format!(
                "unknown compliance law {:?}; only \"linear\" is bundled",
                self.compliance.law
            )));
        }
        Ok(Compliance::linear(ComplianceParams::new(
            self.compliance.epsilon,
            self.compliance.delta,
        )?))
    }

    pub fn initial(&self) -> HybridState {
        HybridState {
            t: 0.0,
            y: self.initial.y,
            w: self.initial.w,
            theta: self.initial.theta,
            phi: self.initial.phi,
            v: self.initial.v,
            x: self.initial.x,
        }
    }

    pub fn integration(&self, tol_override: Option<f64>) -> IntegrationConfig {
        self.integration.config(tol_override)
    }
}

/// Which quantity a restitution sweep walks over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Theta,
    Delta,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub kind: SweepKind,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    /// Fixed damping for a theta sweep.
    #[serde(default)]
    pub delta: Option<f64>,
    /// Fixed inclination for a delta sweep.
    #[serde(default)]
    pub theta0: Option<f64>,
    /// Logarithmic spacing (delta sweeps only).
    #[serde(default)]
    pub log: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub body: BodySection,
    pub sweep: SweepSection,
}

impl SweepConfig {
    pub fn body(&self) -> Result<ClassicalRod, CliError> {
        Ok(ClassicalRod::new(BodyParams::new(
            self.body.alpha,
            self.body.mu,
        )?))
    }

    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        let s = &self.sweep;
        if s.count == 0 {
            return Err(CliError::Config("sweep count must be positive".into()));
        }
        if s.count == 1 {
            return Ok(vec![s.start]);
        }
        if !(s.stop > s.start) {
            return Err(CliError::Config(
                "sweep stop must exceed start".into(),
            ));
        }
        if s.log {
            if s.kind != SweepKind::Delta {
                return Err(CliError::Config(
                    "log spacing only applies to delta sweeps".into(),
                ));
            }
            if !(s.start > 0.0) {
                return Err(CliError::Config(
                    "log-spaced sweeps need a positive start".into(),
                ));
            }
            let (a, b) = (s.start.ln(), s.stop.ln());
            return Ok((0..s.count)
                .map(|i| (a + (b - a) * i as f64 / (s.count - 1) as f64).exp())
                .collect());
        }
        Ok((0..s.count)
            .map(|i| s.start + (s.stop - s.start) * i as f64 / (s.count - 1) as f64)
            .collect())
    }
}

/// Two-rod release experiment: both rods are launched so that one grazes the
/// surface and the other, released a hair lower, strikes it.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoRodConfig {
    pub body: BodySection,
    pub compliance: ComplianceSection,
    pub grazing: GrazingSection,
    pub integration: IntegrationSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// The flight is specified by the state it should graze with, not by its
/// initial condition; the release state is recovered in closed form.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrazingSection {
    pub theta: f64,
    pub phi: f64,
    pub v: f64,
    /// Time of flight from release to the grazing point.
    pub time: f64,
    /// Clearance of the upper rod above the surface at closest approach.
    pub lift: f64,
    /// Initial vertical offset between the two rods.
    pub separation: f64,
}

impl TwoRodConfig {
    pub fn body(&self) -> Result<ClassicalRod, CliError> {
        Ok(ClassicalRod::new(BodyParams::new(
            self.body.alpha,
            self.body.mu,
        )?))
    }

    pub fn compliance(&self) -> Result<Compliance, CliError> {
        if self.compliance.law != "linear" {
            return Err(CliError::Config(format!(
                "unknown compliance law {:?}; only \"linear\" is bundled",
                self.compliance.law
            )));
        }
        Ok(Compliance::linear(ComplianceParams::new(
            self.compliance.epsilon,
            self.compliance.delta,
        )?))
    }

    pub fn integration(&self, tol_override: Option<f64>) -> IntegrationConfig {
        self.integration.config(tol_override)
    }

    /// Free-flight state `time` before the grazing point, integrated
    /// backwards exactly: with phi constant in flight,
    /// theta(t) = theta0 + phi t, v' = -phi^2 cos(theta), w' = -1 +
    /// phi^2 sin(theta), y' = w all integrate in closed form.
    pub fn release_state(&self) -> HybridState {
        let g = &self.grazing;
        let (ts, te) = (g.theta - g.phi * g.time, g.theta);
        let v0 = g.v + g.phi * (te.sin() - ts.sin());
        let w0 = g.time + g.phi * (te.cos() - ts.cos());
        // y(t*) = y0 + w0 t - t^2/2 - (sin theta(t) - sin theta0) + phi t cos theta0
        let y0 = -(w0 * g.time - 0.5 * g.time * g.time - (te.sin() - ts.sin())
            + g.phi * g.time * ts.cos());
        HybridState {
            t: 0.0,
            y: y0,
            w: w0,
            theta: ts,
            phi: g.phi,
            v: v0,
            x: 0.0,
        }
    }
}

pub fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("cannot parse {}: {e}", path.display())))
}
