//! Averaged model of the (1:1) rotatory resonance.
//!
//! The pendulum is written as `θ = ωt + ϑ` with a slowly varying phase. After
//! averaging over one forcing period the phase obeys a damped motion in the
//! tilted potential `U(ϑ) = ζωϑ + (A/2)cosϑ`, and the capsule velocity splits
//! into a zero-mean oscillation `ũ = −εB cos(ωt + φ_a)` plus a drift `D_a`
//! whose evolution is the rectified damping force averaged over `ũ`.
//! Phase locking needs minima of `U`, which exist iff `η = A/(2ζω) ≥ 1`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{check_positive, Error, Result};
use crate::integrator::{integrate, IntegratorOptions, OdeSystem, Side, Trajectory};
use crate::model::NondimParams;
use crate::roots::bisect;
use crate::stability::Stability;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedParams {
    /// Forcing amplitude `A`, O(1).
    pub forcing_amp: f64,
    /// Hinge damping `ζ`, O(1).
    pub zeta: f64,
    pub omega: f64,
    /// Forward damping `μ1/ε`.
    pub mu_forward: f64,
    /// Backward damping `μ2/ε`.
    pub mu_backward: f64,
    pub epsilon: f64,
}

impl AveragedParams {
    pub fn validate(&self) -> Result<()> {
        check_positive("A", self.forcing_amp)?;
        check_positive("zeta", self.zeta)?;
        check_positive("omega", self.omega)?;
        check_positive("mu1", self.mu_forward)?;
        check_positive("mu2", self.mu_backward)?;
        check_positive("epsilon", self.epsilon)?;
        Ok(())
    }

    /// Ratio of the oscillatory to the monotone part of the potential.
    pub fn eta(&self) -> f64 {
        self.forcing_amp / (2.0 * self.zeta * self.omega)
    }

    /// Same parameters with `ω = A/(2ζη)`.
    pub fn with_eta(mut self, eta: f64) -> Self {
        self.omega = self.forcing_amp / (2.0 * self.zeta * eta);
        self
    }

    pub fn to_nondim(&self) -> NondimParams {
        NondimParams {
            epsilon: self.epsilon,
            omega: self.omega,
            forcing_amp: self.forcing_amp,
            zeta: self.zeta,
            mu_forward: self.epsilon * self.mu_forward,
            mu_backward: self.epsilon * self.mu_backward,
        }
    }
}

pub fn to_averaged_params(p: &NondimParams) -> Result<AveragedParams> {
    check_positive("epsilon", p.epsilon)?;
    Ok(AveragedParams {
        forcing_amp: p.forcing_amp,
        zeta: p.zeta,
        omega: p.omega,
        mu_forward: p.mu_forward / p.epsilon,
        mu_backward: p.mu_backward / p.epsilon,
        epsilon: p.epsilon,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AveragedState {
    /// Averaged resonance phase `ϑ_a`, unwrapped.
    pub phase: f64,
    /// `ϑ'_a`.
    pub phase_rate: f64,
    /// Averaged capsule velocity `D_a`.
    pub drift: f64,
}

impl AveragedState {
    pub fn new(phase: f64, phase_rate: f64, drift: f64) -> Self {
        Self {
            phase,
            phase_rate,
            drift,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.phase, self.phase_rate, self.drift]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// `ϑ''_a = −ζ(ω + ϑ'_a) + (A/2) sin ϑ_a`.
pub fn phase_rhs(s: &AveragedState, p: &AveragedParams) -> f64 {
    -p.zeta * (p.omega + s.phase_rate) + 0.5 * p.forcing_amp * s.phase.sin()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potential {
    pub value: f64,
    /// `dU/dϑ`.
    pub slope: f64,
}

pub fn potential(phase: f64, p: &AveragedParams) -> Potential {
    let tilt = p.zeta * p.omega;
    let half_a = 0.5 * p.forcing_amp;
    Potential {
        value: tilt * phase + half_a * phase.cos(),
        slope: tilt - half_a * phase.sin(),
    }
}

/// Whether `U` has critical points, i.e. whether phase locking is possible.
pub fn has_phase_locking(p: &AveragedParams) -> bool {
    p.eta() >= 1.0
}

/// Amplitude and phase of the oscillatory velocity component `ũ = −εB cos(ωt + φ_a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscComponent {
    pub amplitude: f64,
    pub phase: f64,
}

impl OscComponent {
    /// `ũ(t)` with the coefficients frozen.
    pub fn velocity(&self, t: f64, p: &AveragedParams) -> f64 {
        -p.epsilon * self.amplitude * (p.omega * t + self.phase).cos()
    }
}

/// `B` alone; defined for every state, including `ω + ϑ'_a = 0`.
pub fn osc_amplitude(s: &AveragedState, p: &AveragedParams) -> f64 {
    let rate = p.omega + s.phase_rate;
    let lag = p.zeta * rate - 0.5 * p.forcing_amp * s.phase.sin();
    (rate.powi(4) + lag * lag).sqrt() / p.omega
}

pub fn osc_component(s: &AveragedState, p: &AveragedParams) -> Result<OscComponent> {
    let rate = p.omega + s.phase_rate;
    if rate == 0.0 {
        return Err(Error::DegenerateRotation);
    }
    let lag = p.zeta * rate - 0.5 * p.forcing_amp * s.phase.sin();
    Ok(OscComponent {
        amplitude: osc_amplitude(s, p),
        phase: s.phase + (lag / (rate * rate)).atan(),
    })
}

/// Averaged drift equation
///
/// ```text
/// D'_a = −(ε/π)[(μ1−μ2)(D_a arcsin(D_a/εB) + √((εB)² − D_a²)) + (π/2)(μ1+μ2)D_a]
/// ```
///
/// for `|D_a| < εB`, and the non-switching limits `−εμ1 D_a`, `−εμ2 D_a` outside.
pub fn drift_rhs(drift: f64, amplitude_b: f64, p: &AveragedParams) -> f64 {
    let band = p.epsilon * amplitude_b;
    let (m1, m2) = (p.mu_forward, p.mu_backward);
    if drift >= band && drift > 0.0 {
        return -p.epsilon * m1 * drift;
    }
    if drift <= -band {
        return -p.epsilon * m2 * drift;
    }
    -p.epsilon / PI * drift_residual(drift, band, m1, m2)
}

/// Left-hand side of the stationary drift equation for oscillation amplitude `band = εB`.
fn drift_residual(drift: f64, band: f64, m1: f64, m2: f64) -> f64 {
    let ratio = (drift / band).clamp(-1.0, 1.0);
    (m1 - m2) * (drift * ratio.asin() + (band * band - drift * drift).max(0.0).sqrt())
        + 0.5 * PI * (m1 + m2) * drift
}

/// Coupled averaged flow in `(ϑ_a, ϑ'_a, D_a)`.
#[derive(Debug, Clone, Copy)]
pub struct AveragedSystem {
    pub params: AveragedParams,
}

impl OdeSystem<3> for AveragedSystem {
    fn derivative(&self, _t: f64, y: &[f64; 3], _side: Side) -> [f64; 3] {
        let s = AveragedState::from_array(*y);
        let b = osc_amplitude(&s, &self.params);
        [
            s.phase_rate,
            phase_rhs(&s, &self.params),
            drift_rhs(s.drift, b, &self.params),
        ]
    }
}

pub fn integrate_averaged(
    ic: AveragedState,
    p: &AveragedParams,
    opts: &IntegratorOptions,
) -> Result<Trajectory<3>> {
    p.validate()?;
    integrate(&AveragedSystem { params: *p }, 0.0, ic.to_array(), opts)
}

/// A phase-locked stationary state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint11 {
    /// Family index `n`: `ϑ = arcsin(1/η) + nπ` for even `n`, `nπ − arcsin(1/η)` for odd `n`.
    pub family: i64,
    pub phase: f64,
    pub drift: f64,
    /// Stationary `B`, equal to `ω`.
    pub amplitude_b: f64,
    pub stability: Stability,
}

/// Stationary phase of family `n`, or `None` below the locking threshold.
pub fn stationary_phase(family: i64, p: &AveragedParams) -> Option<f64> {
    let ratio = 2.0 * p.zeta * p.omega / p.forcing_amp;
    if ratio > 1.0 {
        return None;
    }
    let base = ratio.asin();
    let n = family as f64;
    Some(if family.rem_euclid(2) == 0 {
        base + n * PI
    } else {
        n * PI - base
    })
}

/// Stationary drift: the root of the averaged drift equation with `B = ω`.
/// Positive for `μ2 > μ1`, negative for `μ1 > μ2`, zero for symmetric damping.
pub fn stationary_drift(p: &AveragedParams) -> Result<f64> {
    p.validate()?;
    let band = p.epsilon * p.omega;
    let (m1, m2) = (p.mu_forward, p.mu_backward);
    if m1 == m2 {
        return Ok(0.0);
    }
    let f = |d: f64| drift_residual(d, band, m1, m2);
    if m2 > m1 {
        bisect(f, 0.0, band, 1e-12 * band)
    } else {
        bisect(f, -band, 0.0, 1e-12 * band)
    }
}

/// Phase-locked states of the two families `n = 0` (maximum of `U`) and
/// `n = 1` (minimum of `U`). Empty below `η = 1`; at `η = 1` both families
/// coincide at `π/2` and a single marginal point is returned.
pub fn fixed_points(p: &AveragedParams) -> Result<Vec<FixedPoint11>> {
    p.validate()?;
    if !has_phase_locking(p) {
        return Ok(Vec::new());
    }
    let drift = stationary_drift(p)?;
    let point = |family: i64, stability| FixedPoint11 {
        family,
        phase: stationary_phase(family, p).expect("locking checked above"),
        drift,
        amplitude_b: p.omega,
        stability,
    };
    if 2.0 * p.zeta * p.omega == p.forcing_amp {
        return Ok(vec![point(0, Stability::Marginal)]);
    }
    Ok(vec![
        point(0, Stability::Saddle),
        point(1, Stability::Stable),
    ])
}

/// Averaged-model initial state for a pendulum released at `(θ0, θ'0)` with
/// the capsule at rest: `D_a(0)` cancels `ũ(0)`.
///
/// A pendulum released from rest has `ω + ϑ'_a = 0`; the velocity phase is
/// then taken in its limit `ϑ_a ± π/2`. The error is reserved for the case
/// where the oscillatory component vanishes and its phase is undefined.
pub fn map_initial_conditions(
    theta0: f64,
    theta_dot0: f64,
    p: &AveragedParams,
) -> Result<AveragedState> {
    p.validate()?;
    let mut s = AveragedState::new(theta0, theta_dot0 - p.omega, 0.0);
    let rate = p.omega + s.phase_rate;
    let lag = p.zeta * rate - 0.5 * p.forcing_amp * s.phase.sin();
    if rate == 0.0 && lag == 0.0 {
        return Err(Error::DegenerateRotation);
    }
    let phase = s.phase + lag.atan2(rate * rate);
    s.drift = p.epsilon * osc_amplitude(&s, p) * phase.cos();
    Ok(s)
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(angle: f64) -> f64 {
    angle.rem_euclid(2.0 * PI)
}

/// Distance between two angles on the circle.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    d.min(2.0 * PI - d)
}
