//! Scenario files: a JSON description of one experiment (system, network,
//! delays, history, integration settings and declared expectations), plus
//! the pipelines that run, validate and sweep them.

mod corpus;
mod run;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{VerificationSettings, DEFAULT_RAZUMIKHIN_SLACK};
use crate::delays::{DelayKind, DelayProfile};
use crate::history::HistoryFunction;
use crate::integrator::IntegrationConfig;
use crate::network::{build_system_matrices, ConsensusNetwork, Link};
use crate::systems::SystemRhs;

pub use corpus::builtin_corpus;
pub use run::{
    run_corpus, run_scenario, sweep_scenario, sweep_setup, validate_scenario, write_outputs,
    write_sweep, Check,
    CorpusRow, CorpusSummary, RunOutcome,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error("cannot parse scenario: {0}")]
    Parse(String),
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("numerical failure: {0}")]
    Numeric(#[from] crate::Error),
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
}

impl ScenarioError {
    fn invalid(field: impl Into<String>, message: impl ToString) -> Self {
        Self::Invalid {
            field: field.into(),
            message: message.to_string(),
        }
    }

    pub(crate) fn io(path: &Path, err: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

pub type ScenarioResult<T> = std::result::Result<T, ScenarioError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub n: usize,
    pub system: SystemSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub links: Vec<LinkSpec>,
    pub profiles: Vec<ProfileSpec>,
    pub history: HistorySpec,
    pub integration: IntegrationSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default, skip_serializing_if = "Expectations::is_empty")]
    pub expect: Expectations,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Linear {},
    Cubic {},
    /// `x' = -m x + sum_k x(t - tau_k(t))`, scalar; `m` is the profile count.
    Neutral {},
    /// Odd power `2p + 1` applied componentwise.
    OddPower { power: u32 },
}

/// One-based: agent `from` uses the delayed state of agent `to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
    pub delay: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<f64>,
}

impl ProfileSpec {
    pub fn builtin(kind: DelayKind, h: f64) -> Self {
        Self {
            kind: kind.name().into(),
            h: Some(h),
            samples: None,
            tail: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HistorySpec {
    /// `span` defaults to the largest delay bound.
    Constant {
        value: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        span: Option<f64>,
    },
    /// `phi(theta) = a + b theta`.
    Affine {
        a: Vec<f64>,
        b: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        span: Option<f64>,
    },
    Sampled { samples: Vec<(f64, Vec<f64>)> },
}

fn default_iters() -> usize {
    10
}
fn default_fp_tol() -> f64 {
    1e-12
}
fn default_record() -> usize {
    1
}
fn default_conv_tol() -> f64 {
    1e-3
}
fn default_slack() -> f64 {
    DEFAULT_RAZUMIKHIN_SLACK
}
fn default_series() -> usize {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationSpec {
    pub step: f64,
    pub t_end: f64,
    #[serde(default)]
    pub t0: f64,
    #[serde(default = "default_iters")]
    pub max_fixed_point_iters: usize,
    #[serde(default = "default_fp_tol")]
    pub fixed_point_tol: f64,
    #[serde(default = "default_record")]
    pub record_every: usize,
}

impl IntegrationSpec {
    pub fn new(step: f64, t_end: f64) -> Self {
        Self {
            step,
            t_end,
            t0: 0.0,
            max_fixed_point_iters: default_iters(),
            fixed_point_tol: default_fp_tol(),
            record_every: default_record(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    #[serde(default = "default_conv_tol")]
    pub convergence_tol: f64,
    #[serde(default = "default_slack")]
    pub razumikhin_slack: f64,
    /// Defaults to the largest delay bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    #[serde(default = "default_series")]
    pub series_points: usize,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        Self {
            convergence_tol: default_conv_tol(),
            razumikhin_slack: default_slack(),
            window: None,
            series_points: default_series(),
        }
    }
}

/// Declared outcomes; a run passes iff every declared entry holds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    /// Reference consensus value; the prediction is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_decay_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conservation_drift_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub razumikhin_violations_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub krasovskii_increase_max: Option<f64>,
}

impl Expectations {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

/// A scenario compiled into the objects the integrator and the analyses use.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub sys: SystemRhs,
    pub profiles: Vec<DelayProfile>,
    pub history: HistoryFunction,
    pub cfg: IntegrationConfig,
    pub settings: VerificationSettings,
}

impl Scenario {
    pub fn from_json(text: &str) -> ScenarioResult<Self> {
        serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    pub fn from_path(path: &Path) -> ScenarioResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| ScenarioError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenarios always serialize");
        s.push('\n');
        s
    }

    /// Coarser-step variant: step replaced, declared tolerances relaxed 10x.
    pub fn with_step(&self, step: f64) -> Self {
        let mut s = self.clone();
        s.integration.step = step;
        s.analysis.convergence_tol *= 10.0;
        s.analysis.razumikhin_slack *= 10.0;
        let e = &mut s.expect;
        for tol in [
            &mut e.alpha_tol,
            &mut e.conservation_drift_max,
            &mut e.krasovskii_increase_max,
        ] {
            if let Some(v) = tol {
                *v *= 10.0;
            }
        }
        s
    }

    pub fn build_profiles(&self) -> ScenarioResult<Vec<DelayProfile>> {
        if self.profiles.is_empty() {
            return Err(ScenarioError::invalid("profiles", "at least one delay profile is required"));
        }
        self.profiles
            .iter()
            .enumerate()
            .map(|(k, p)| build_profile(k, p))
            .collect()
    }

    pub fn build_system(&self, profiles: &[DelayProfile]) -> ScenarioResult<SystemRhs> {
        if self.n == 0 {
            return Err(ScenarioError::invalid("n", "dimension must be positive"));
        }
        if let SystemSpec::Neutral {} = self.system {
            if self.n != 1 {
                return Err(ScenarioError::invalid("n", "the neutral system is scalar; n must be 1"));
            }
            if !self.links.is_empty() {
                return Err(ScenarioError::invalid("links", "the neutral system takes no links"));
            }
            return SystemRhs::scalar_neutral(profiles.len()).map_err(|e| ScenarioError::invalid("system", e));
        }
        let net = self.network(profiles)?;
        let mats = build_system_matrices(&net).map_err(|e| ScenarioError::invalid("links", e))?;
        Ok(match self.system {
            SystemSpec::Linear {} => SystemRhs::linear(mats),
            SystemSpec::Cubic {} => SystemRhs::cubic(mats),
            SystemSpec::OddPower { power } => {
                SystemRhs::odd_power(mats, power).map_err(|e| ScenarioError::invalid("system.power", e))?
            }
            SystemSpec::Neutral {} => unreachable!(),
        })
    }

    pub fn network(&self, profiles: &[DelayProfile]) -> ScenarioResult<ConsensusNetwork> {
        let mut links = Vec::with_capacity(self.links.len());
        for (idx, l) in self.links.iter().enumerate() {
            if l.from == 0 || l.to == 0 || l.delay == 0 {
                return Err(ScenarioError::invalid(
                    format!("links[{idx}]"),
                    "agent and delay indices are 1-based",
                ));
            }
            links.push(Link {
                agent: l.from - 1,
                neighbor: l.to - 1,
                weight: l.weight,
                delay: l.delay - 1,
            });
        }
        Ok(ConsensusNetwork::new(self.n, links, profiles.to_vec()))
    }

    /// Largest delay bound over all profiles.
    pub fn reach(profiles: &[DelayProfile]) -> f64 {
        profiles.iter().map(DelayProfile::bound).fold(0.0, f64::max)
    }

    pub fn build_history(&self, reach: f64) -> ScenarioResult<HistoryFunction> {
        let check_dim = |field: &str, v: &[f64]| {
            if v.len() == self.n {
                Ok(())
            } else {
                Err(ScenarioError::invalid(
                    field,
                    format!("expected {} components, got {}", self.n, v.len()),
                ))
            }
        };
        let span_or = |span: Option<f64>| span.unwrap_or(reach);
        let built = match &self.history {
            HistorySpec::Constant { value, span } => {
                check_dim("history.value", value)?;
                HistoryFunction::constant(value.clone(), span_or(*span))
            }
            HistorySpec::Affine { a, b, span } => {
                check_dim("history.a", a)?;
                check_dim("history.b", b)?;
                HistoryFunction::affine(a.clone(), b.clone(), span_or(*span))
            }
            HistorySpec::Sampled { samples } => {
                for (i, (_, v)) in samples.iter().enumerate() {
                    check_dim(&format!("history.samples[{i}]"), v)?;
                }
                HistoryFunction::sampled(samples.clone())
            }
        };
        built.map_err(|e| ScenarioError::invalid("history", e))
    }

    pub fn integration_config(&self) -> ScenarioResult<IntegrationConfig> {
        let i = &self.integration;
        let cfg = IntegrationConfig {
            t0: i.t0,
            step: i.step,
            t_end: i.t_end,
            max_fixed_point_iters: i.max_fixed_point_iters,
            fixed_point_tol: i.fixed_point_tol,
            record_every: i.record_every.max(1),
        };
        cfg.validate().map_err(|e| ScenarioError::invalid("integration", e))?;
        Ok(cfg)
    }

    pub fn settings(&self, reach: f64) -> ScenarioResult<VerificationSettings> {
        let a = &self.analysis;
        if !(a.convergence_tol > 0.0) {
            return Err(ScenarioError::invalid("analysis.convergence_tol", "must be positive"));
        }
        if !(a.razumikhin_slack >= 0.0) {
            return Err(ScenarioError::invalid("analysis.razumikhin_slack", "must be nonnegative"));
        }
        let window = a.window.unwrap_or(reach.max(self.integration.step));
        if !(window > 0.0) {
            return Err(ScenarioError::invalid("analysis.window", "must be positive"));
        }
        Ok(VerificationSettings {
            convergence_tol: a.convergence_tol,
            razumikhin_slack: a.razumikhin_slack,
            window,
            series_points: a.series_points.max(1),
        })
    }

    /// Builds everything and enforces the run preconditions: every delay has
    /// a limit and the history covers the largest delay bound.
    pub fn prepare(&self) -> ScenarioResult<Prepared> {
        let profiles = self.build_profiles()?;
        for (k, p) in profiles.iter().enumerate() {
            p.limit().map_err(|e| ScenarioError::invalid(format!("profiles[{k}].tail"), e))?;
        }
        let sys = self.build_system(&profiles)?;
        let reach = Self::reach(&profiles);
        let history = self.build_history(reach)?;
        if history.span() < reach {
            return Err(ScenarioError::invalid(
                "history",
                format!("covers [-{}, 0] but delays reach back {reach}", history.span()),
            ));
        }
        Ok(Prepared {
            cfg: self.integration_config()?,
            settings: self.settings(reach)?,
            sys,
            profiles,
            history,
        })
    }
}

fn build_profile(k: usize, p: &ProfileSpec) -> ScenarioResult<DelayProfile> {
    let field = |name: &str| format!("profiles[{k}].{name}");
    let kind = DelayKind::from_name(&p.kind)
        .ok_or_else(|| ScenarioError::invalid(field("kind"), format!("unknown delay kind `{}`", p.kind)))?;
    if kind == DelayKind::Table {
        if p.h.is_some() {
            return Err(ScenarioError::invalid(field("h"), "table profiles take samples, not h"));
        }
        let samples = p
            .samples
            .clone()
            .ok_or_else(|| ScenarioError::invalid(field("samples"), "table profiles need samples"))?;
        return DelayProfile::table(samples, p.tail).map_err(|e| ScenarioError::invalid(field("samples"), e));
    }
    if p.samples.is_some() || p.tail.is_some() {
        return Err(ScenarioError::invalid(
            field("samples"),
            "samples and tail apply to table profiles only",
        ));
    }
    let h = p
        .h
        .ok_or_else(|| ScenarioError::invalid(field("h"), "built-in profiles need h"))?;
    DelayProfile::builtin(kind, h).map_err(|e| ScenarioError::invalid(field("h"), e))
}
