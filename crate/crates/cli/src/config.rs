//! Scenario files.
//!
//! A scenario is a TOML document with flat sections. Parsing rejects unknown
//! keys; re-serialising a parsed scenario gives its normal form, and the
//! SHA-256 of the normal form is the config hash stamped on every output.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use capsule_core::averaged::AveragedParams;
use capsule_core::integrator::{IntegratorOptions, DEFAULT_EVENT_TOLERANCE};
use capsule_core::model::{FullState, NondimParams, PhysicalParams};
use capsule_core::slowflow::{SlowFlowParams, SlowFlowState};
use capsule_core::sweep::ReducedModel;
use num_complex::Complex64;

/// Problems with the scenario itself, as opposed to the physics it describes.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("sections [{0}] and [{1}] are mutually exclusive")]
    Exclusive(&'static str, &'static str),
    #[error("missing `{key}` in [{section}]")]
    Missing {
        section: &'static str,
        key: &'static str,
    },
    #[error("config is for mode `{found}`, not `{requested}`")]
    ModeMismatch { found: Mode, requested: Mode },
    #[error("{0}")]
    Invalid(String),
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    Slowflow,
    Averaged,
    FixedPoints,
    Sweep,
    Compare,
    Plot,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Simulate => "simulate",
            Mode::Slowflow => "slowflow",
            Mode::Averaged => "averaged",
            Mode::FixedPoints => "fixed-points",
            Mode::Sweep => "sweep",
            Mode::Compare => "compare",
            Mode::Plot => "plot",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nondim: Option<NondimSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<CaseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slowflow: Option<SlowflowSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub averaged: Option<AveragedSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

/// Dimensional parameters, SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct PhysicalSection {
    pub M: f64,
    pub m: f64,
    pub l: f64,
    pub g: f64,
    pub A0: f64,
    pub Omega: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct NondimSection {
    pub epsilon: f64,
    pub omega: f64,
    pub A: f64,
    pub zeta: f64,
    pub mu1: f64,
    pub mu2: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default)]
    pub x: f64,
    #[serde(default)]
    pub v: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default)]
    pub theta_dot: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_event: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_splitting: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReducedChoice {
    Auto,
    Oscillatory,
    Rotatory,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduced: Option<ReducedChoice>,
}

/// Rescaled slow-flow parameters. Keys left out are derived from the
/// parameter block when one is present.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct SlowflowSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub P: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_re: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_im: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub D: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct AveragedSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub A: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Bifurcation,
    Region,
    Rotatory,
    Scaling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct SweepSection {
    pub kind: SweepKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub P_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub P_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub P_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify_sigmas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify_epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slow_horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub empirical: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_horizon: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

pub const DEFAULT_OUTPUT_DIR: &str = "out";
pub const DEFAULT_SLOW_T_END: f64 = 100.0;
pub const DEFAULT_SLOW_DT: f64 = 0.01;
pub const DEFAULT_AVERAGED_T_END: f64 = 1500.0;
pub const DEFAULT_AVERAGED_DT: f64 = 0.05;
pub const DEFAULT_SLOW_EPSILON: f64 = 0.01;
pub const DEFAULT_VERIFY_THETA0: f64 = 0.1;
pub const DEFAULT_SLOW_HORIZON: f64 = 30.0;

pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig =
        toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    if cfg.physical.is_some() && cfg.nondim.is_some() {
        return Err(ConfigError::Exclusive("physical", "nondim"));
    }
    if let Some(a) = &cfg.averaged {
        if a.omega.is_some() && a.eta.is_some() {
            return Err(ConfigError::Invalid(
                "[averaged] takes either `omega` or `eta`, not both".into(),
            ));
        }
    }
    Ok(cfg)
}

fn missing(section: &'static str, key: &'static str) -> ConfigError {
    ConfigError::Missing { section, key }
}

fn domain(e: capsule_core::Error) -> anyhow::Error {
    anyhow::Error::new(e)
}

impl ScenarioConfig {
    pub fn to_normal_form(&self) -> String {
        toml::to_string(self).expect("scenario always serialises")
    }

    /// Hex SHA-256 of the normal form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_normal_form().as_bytes()))
    }

    pub fn check_mode(&self, requested: Mode) -> Result<()> {
        let same_input = |a: Mode, b: Mode| {
            a == b
                || matches!(
                    (a, b),
                    (Mode::Simulate, Mode::Compare) | (Mode::Compare, Mode::Simulate)
                )
        };
        match self.mode {
            Some(found) if !same_input(found, requested) => {
                Err(ConfigError::ModeMismatch { found, requested })
            }
            _ => Ok(()),
        }
    }

    pub fn output_dir(&self) -> String {
        self.output
            .as_ref()
            .and_then(|o| o.dir.clone())
            .unwrap_or_else(|| DEFAULT_OUTPUT_DIR.to_string())
    }

    /// Full-model parameters from whichever block is present.
    pub fn nondim(&self) -> anyhow::Result<Option<NondimParams>> {
        if let Some(n) = &self.nondim {
            let p = NondimParams {
                epsilon: n.epsilon,
                omega: n.omega,
                forcing_amp: n.A,
                zeta: n.zeta,
                mu_forward: n.mu1,
                mu_backward: n.mu2,
            };
            p.validate().map_err(domain)?;
            return Ok(Some(p));
        }
        if let Some(ph) = &self.physical {
            let p = PhysicalParams {
                capsule_mass: ph.M,
                pendulum_mass: ph.m,
                pendulum_length: ph.l,
                gravity: ph.g,
                base_amplitude: ph.A0,
                base_frequency: ph.Omega,
                damping_forward: ph.lambda1,
                damping_backward: ph.lambda2,
                hinge_damping: ph.c,
            };
            return Ok(Some(p.nondimensionalize().map_err(domain)?));
        }
        Ok(None)
    }

    pub fn require_nondim(&self) -> anyhow::Result<NondimParams> {
        self.nondim()?.ok_or_else(|| {
            ConfigError::Invalid("one of [physical] or [nondim] is required".into()).into()
        })
    }

    pub fn initial_state(&self) -> Result<FullState> {
        let i = self.initial.unwrap_or_default();
        let theta = i.theta.ok_or(missing("initial", "theta"))?;
        Ok(FullState::new(i.x, i.v, theta, i.theta_dot))
    }

    /// Full-model integrator settings; `dt` defaults to 1/200 of the forcing period.
    pub fn integrator_options(&self, omega: f64, default_t_end: f64) -> IntegratorOptions {
        let s = self.integrator.unwrap_or_default();
        let mut opts = IntegratorOptions::for_forcing(omega, s.t_end.unwrap_or(default_t_end));
        if let Some(dt) = s.dt {
            opts.dt = dt;
        }
        opts.tol_event = s.tol_event.unwrap_or(DEFAULT_EVENT_TOLERANCE);
        if let Some(k) = s.sample_every {
            opts.sample_every = k;
        }
        if let Some(on) = s.event_splitting {
            opts.event_splitting = on;
        }
        opts
    }

    pub fn reduced_choice(&self) -> ReducedChoice {
        self.case
            .as_ref()
            .and_then(|c| c.reduced)
            .unwrap_or(ReducedChoice::Auto)
    }

    pub fn case_id(&self) -> String {
        self.case
            .as_ref()
            .and_then(|c| c.id.clone())
            .unwrap_or_else(|| "scenario".to_string())
    }

    pub fn slowflow_params(&self) -> anyhow::Result<SlowFlowParams> {
        let s = self.slowflow.unwrap_or_default();
        let base = self
            .nondim()?
            .map(|n| capsule_core::slowflow::to_slowflow_params(&n))
            .transpose()
            .map_err(domain)?;
        let pick = |v: Option<f64>, from_base: Option<f64>, key| {
            v.or(from_base).ok_or(missing("slowflow", key))
        };
        let p = SlowFlowParams {
            p: pick(s.P, base.map(|b| b.p), "P")?,
            xi: pick(s.xi, base.map(|b| b.xi), "xi")?,
            sigma: pick(s.sigma, base.map(|b| b.sigma), "sigma")?,
            mu_forward: pick(s.mu1, base.map(|b| b.mu_forward), "mu1")?,
            mu_backward: pick(s.mu2, base.map(|b| b.mu_backward), "mu2")?,
            epsilon: s
                .epsilon
                .or(base.map(|b| b.epsilon))
                .unwrap_or(DEFAULT_SLOW_EPSILON),
        };
        p.validate().map_err(domain)?;
        Ok(p)
    }

    /// Slow-flow start: explicit `phi_re`, `phi_im`, `D`, else the release in [initial].
    pub fn slowflow_initial(&self, epsilon: f64) -> Result<SlowFlowState> {
        let s = self.slowflow.unwrap_or_default();
        if s.phi_re.is_some() || s.phi_im.is_some() {
            return Ok(SlowFlowState::new(
                Complex64::new(s.phi_re.unwrap_or(0.0), s.phi_im.unwrap_or(0.0)),
                s.D.unwrap_or(0.0),
            ));
        }
        let release = self.initial_state()?;
        let mut state = capsule_core::sweep::slowflow_initial_state(&release, epsilon);
        state.drift = s.D.unwrap_or(0.0);
        Ok(state)
    }

    pub fn slowflow_options(&self) -> IntegratorOptions {
        let s = self.slowflow.unwrap_or_default();
        IntegratorOptions::new(
            s.dt.unwrap_or(DEFAULT_SLOW_DT),
            s.t_end.unwrap_or(DEFAULT_SLOW_T_END),
        )
    }

    pub fn averaged_params(&self) -> anyhow::Result<AveragedParams> {
        let s = self.averaged.unwrap_or_default();
        let base = self.nondim()?;
        let pick = |v: Option<f64>, from_base: Option<f64>, key| {
            v.or(from_base).ok_or(missing("averaged", key))
        };
        let mut p = AveragedParams {
            forcing_amp: pick(s.A, base.map(|b| b.forcing_amp), "A")?,
            zeta: pick(s.zeta, base.map(|b| b.zeta), "zeta")?,
            omega: 0.0,
            mu_forward: pick(s.mu1, base.map(|b| b.mu_forward), "mu1")?,
            mu_backward: pick(s.mu2, base.map(|b| b.mu_backward), "mu2")?,
            epsilon: pick(s.epsilon, base.map(|b| b.epsilon), "epsilon")?,
        };
        p = match s.eta {
            Some(eta) => p.with_eta(eta),
            None => AveragedParams {
                omega: pick(s.omega, base.map(|b| b.omega), "omega")?,
                ..p
            },
        };
        p.validate().map_err(domain)?;
        Ok(p)
    }

    pub fn averaged_options(&self) -> IntegratorOptions {
        let s = self.averaged.unwrap_or_default();
        IntegratorOptions::new(
            s.dt.unwrap_or(DEFAULT_AVERAGED_DT),
            s.t_end.unwrap_or(DEFAULT_AVERAGED_T_END),
        )
    }

    pub fn sweep(&self) -> Result<&SweepSection> {
        self.sweep
            .as_ref()
            .ok_or_else(|| ConfigError::Invalid("[sweep] section is required".into()))
    }
}

/// Reduced model for a case when `[case] reduced` is `auto`: rotatory runs are
/// compared against the averaged flow, everything else against the slow flow.
pub fn resolve_reduced(choice: ReducedChoice, rotating: bool) -> ReducedModel {
    match choice {
        ReducedChoice::Oscillatory => ReducedModel::Oscillatory,
        ReducedChoice::Rotatory => ReducedModel::Rotatory,
        ReducedChoice::Auto if rotating => ReducedModel::Rotatory,
        ReducedChoice::Auto => ReducedModel::Oscillatory,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CASE2: &str = r#"
mode = "simulate"

[nondim]
epsilon = 0.01
omega = 2
A = 0.08
zeta = 0.01
mu1 = 0.01
mu2 = 0.02

[initial]
theta = 0.001
"#;

    #[test]
    fn case2_parses() {
        let cfg = parse_config(CASE2).unwrap();
        let p = cfg.require_nondim().unwrap();
        assert_eq!(p.omega, 2.0);
        assert_eq!(p.forcing_amp, 0.08);
        assert_eq!(p.mu_backward, 0.02);
        let s = cfg.initial_state().unwrap();
        assert_eq!((s.x, s.v, s.theta, s.theta_dot), (0.0, 0.0, 0.001, 0.0));
    }

    #[test]
    fn empty_initial_needs_theta() {
        let cfg = parse_config("[initial]\n").unwrap();
        let err = cfg.initial_state().unwrap_err();
        assert!(err.to_string().contains("theta"), "{err}");
    }

    #[test]
    fn both_blocks_rejected() {
        let text = format!(
            "{CASE2}\n[physical]\nM = 1\nm = 0.1\nl = 0.1\ng = 9.81\nA0 = 0.01\nOmega = 10\nlambda1 = 1\nlambda2 = 2\nc = 0.01\n"
        );
        assert!(matches!(
            parse_config(&text),
            Err(ConfigError::Exclusive("physical", "nondim"))
        ));
    }

    #[test]
    fn unknown_key_rejected() {
        let err = parse_config("[nondim]\nepsilon = 0.01\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn syntax_error_has_line() {
        let err = parse_config("[nondim]\nepsilon = = 1\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn normal_form_is_idempotent() {
        let cfg = parse_config(CASE2).unwrap();
        let once = cfg.to_normal_form();
        let again = parse_config(&once).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_normal_form(), once);
        assert_eq!(again.hash(), cfg.hash());
    }

    #[test]
    fn hash_tracks_content() {
        let a = parse_config(CASE2).unwrap();
        let b = parse_config(&CASE2.replace("0.08", "0.09")).unwrap();
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn slowflow_derived_from_nondim() {
        let cfg = parse_config(CASE2).unwrap();
        let p = cfg.slowflow_params().unwrap();
        assert!((p.p - 8.0).abs() < 1e-12);
        assert!((p.xi - 1.0).abs() < 1e-12);
        assert!(p.sigma.abs() < 1e-12);
    }

    #[test]
    fn slowflow_requires_keys_without_block() {
        let cfg = parse_config("[slowflow]\nP = 8\nxi = 1\n").unwrap();
        let err = cfg.slowflow_params().unwrap_err();
        assert!(err.to_string().contains("sigma"), "{err}");
    }

    #[test]
    fn averaged_eta_sets_omega() {
        let cfg = parse_config(
            "[averaged]\nA = 8\nzeta = 1\neta = 2\nmu1 = 0.01\nmu2 = 0.02\nepsilon = 0.01\n",
        )
        .unwrap();
        let p = cfg.averaged_params().unwrap();
        assert!((p.omega - 2.0).abs() < 1e-15);
    }

    #[test]
    fn mode_mismatch() {
        let cfg = parse_config(CASE2).unwrap();
        assert!(cfg.check_mode(Mode::Simulate).is_ok());
        assert!(cfg.check_mode(Mode::Compare).is_ok());
        assert!(cfg.check_mode(Mode::Sweep).is_err());
    }
}
