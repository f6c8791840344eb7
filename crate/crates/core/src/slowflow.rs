//! Reduced model near the (2:1) principal parametric resonance.
//!
//! With `A = εP`, `ζ = εξ`, `μ_i = εμ̂_i`, `ω = 2 + εσ`, `θ ≈ √ε Θ` and
//! `x' ≈ ε^{3/2} s`, the pendulum is described by a complex amplitude `φ` and
//! the capsule by a velocity drift `D`, both evolving on the slow time
//! `t1 = εt`:
//!
//! ```text
//! φ' = (i/2)(1−σ)φ + (i/4)P φ̄ − (i/16)|φ|²φ − (ξ/2)φ
//! D' = −d0(|φ|, D)
//! ```
//!
//! `d0` is the mean of the rectified damping force `μ(s)s` with
//! `s = D − |φ|cosψ` over one fast cycle.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{check_positive, Error, Result};
use crate::integrator::{integrate, IntegratorOptions, OdeSystem, Side, Trajectory};
use crate::model::NondimParams;
use crate::roots::bisect;
use crate::stability::{eigenvalues_2x2, Stability};

/// Rescaled O(1) parameters of the slow flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlowFlowParams {
    /// Forcing `P = A/ε`.
    pub p: f64,
    /// Hinge damping `ξ = ζ/ε`.
    pub xi: f64,
    /// Detuning `σ = (ω − 2)/ε`.
    pub sigma: f64,
    /// Forward damping `μ1/ε`.
    pub mu_forward: f64,
    /// Backward damping `μ2/ε`.
    pub mu_backward: f64,
    /// Mass ratio, kept for reconstructing full-model quantities.
    pub epsilon: f64,
}

impl SlowFlowParams {
    pub fn validate(&self) -> Result<()> {
        check_positive("P", self.p)?;
        check_positive("xi", self.xi)?;
        check_positive("mu1", self.mu_forward)?;
        check_positive("mu2", self.mu_backward)?;
        check_positive("epsilon", self.epsilon)?;
        if !self.sigma.is_finite() {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: self.sigma,
                reason: "must be finite",
            });
        }
        Ok(())
    }

    /// Full-model parameters realising these rescaled values at `self.epsilon`.
    pub fn to_nondim(&self) -> NondimParams {
        let e = self.epsilon;
        NondimParams {
            epsilon: e,
            omega: 2.0 + e * self.sigma,
            forcing_amp: e * self.p,
            zeta: e * self.xi,
            mu_forward: e * self.mu_forward,
            mu_backward: e * self.mu_backward,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }
}

pub fn to_slowflow_params(p: &NondimParams) -> Result<SlowFlowParams> {
    check_positive("epsilon", p.epsilon)?;
    let e = p.epsilon;
    Ok(SlowFlowParams {
        p: p.forcing_amp / e,
        xi: p.zeta / e,
        sigma: (p.omega - 2.0) / e,
        mu_forward: p.mu_forward / e,
        mu_backward: p.mu_backward / e,
        epsilon: e,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlowFlowState {
    pub phi: Complex64,
    pub drift: f64,
}

impl SlowFlowState {
    pub fn new(phi: Complex64, drift: f64) -> Self {
        Self { phi, drift }
    }

    pub fn amplitude(&self) -> f64 {
        self.phi.norm()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.phi.re, self.phi.im, self.drift]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(Complex64::new(a[0], a[1]), a[2])
    }
}

/// Mean, first sine and first cosine Fourier coefficients of the rectified damping force.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierCoeffs {
    pub d0: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Mean damping force over one cycle of `s = D − |φ|cosψ`.
///
/// Inside the band `|D| ≤ |φ|` the velocity changes sign twice per cycle;
/// outside it never does and the force is simply `μ1 D` or `μ2 D`.
pub fn fourier_d0(amplitude: f64, drift: f64, mu_forward: f64, mu_backward: f64) -> f64 {
    if drift > amplitude {
        return mu_forward * drift;
    }
    if drift < -amplitude || amplitude == 0.0 {
        return if drift > 0.0 {
            mu_forward * drift
        } else {
            mu_backward * drift
        };
    }
    let root = (amplitude * amplitude - drift * drift).max(0.0).sqrt();
    let angle = (drift / amplitude).clamp(-1.0, 1.0).acos();
    ((mu_forward - mu_backward) * root
        + drift * ((mu_backward - mu_forward) * angle + PI * mu_forward))
        / PI
}

/// `∂d0/∂D`, which is `(μ1(π − α) + μ2 α)/π` with `α = arccos(D/|φ|)` inside
/// the band (the square-root terms cancel).
pub fn fourier_d0_slope(amplitude: f64, drift: f64, mu_forward: f64, mu_backward: f64) -> f64 {
    if amplitude == 0.0 || drift.abs() >= amplitude {
        return if drift > 0.0 { mu_forward } else { mu_backward };
    }
    let angle = (drift / amplitude).acos();
    (mu_forward * (PI - angle) + mu_backward * angle) / PI
}

/// First cosine harmonic as printed in the closed form of the appendix:
///
/// ```text
/// d2 = [D(μ2−μ1)√(|φ|²−D²) + |φ|²(2μ1−μ2)arccos(D/|φ|) − 2π|φ|²μ1] / (π|φ|)
/// ```
///
/// This expression does not agree with the harmonic integral it is meant to
/// represent; [`compare_d2`] reports both. The slow flow never uses `d2`.
pub fn fourier_d2(amplitude: f64, drift: f64, mu_forward: f64, mu_backward: f64) -> Result<f64> {
    if !(amplitude > 0.0) {
        return Err(Error::InvalidParameter {
            name: "amplitude",
            value: amplitude,
            reason: "d2 requires a strictly positive amplitude",
        });
    }
    if drift.abs() > amplitude {
        return Err(Error::Domain(format!(
            "d2 closed form requires |D| <= |phi| (D = {drift}, |phi| = {amplitude})"
        )));
    }
    let a2 = amplitude * amplitude;
    let root = (a2 - drift * drift).max(0.0).sqrt();
    let angle = (drift / amplitude).acos();
    Ok(
        (drift * (mu_backward - mu_forward) * root + a2 * (2.0 * mu_forward - mu_backward) * angle
            - 2.0 * PI * a2 * mu_forward)
            / (amplitude * PI),
    )
}

/// Fourier coefficients of `μ(s)s`, `s = D − |φ|cosψ`, by composite quadrature
/// split at the switching angles so that each panel is smooth.
pub fn harmonic_quadrature(
    amplitude: f64,
    drift: f64,
    mu_forward: f64,
    mu_backward: f64,
    nodes_per_panel: usize,
) -> FourierCoeffs {
    let force = |psi: f64| {
        let s = drift - amplitude * psi.cos();
        if s > 0.0 {
            mu_forward * s
        } else {
            mu_backward * s
        }
    };
    let mut breaks = vec![0.0, 2.0 * PI];
    if amplitude > 0.0 && drift.abs() < amplitude {
        let a = (drift / amplitude).acos();
        breaks = vec![-a, a, 2.0 * PI - a];
    }
    let (gl_x, gl_w) = gauss_legendre_8();
    let mut acc = [0.0; 3];
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let width = (hi - lo) / nodes_per_panel as f64;
        for k in 0..nodes_per_panel {
            let c = lo + (k as f64 + 0.5) * width;
            for (x, wt) in gl_x.iter().zip(gl_w.iter()) {
                let psi = c + 0.5 * width * x;
                let f = force(psi) * wt * 0.5 * width;
                acc[0] += f;
                acc[1] += f * psi.sin();
                acc[2] += f * psi.cos();
            }
        }
    }
    FourierCoeffs {
        d0: acc[0] / (2.0 * PI),
        d1: acc[1] / PI,
        d2: acc[2] / PI,
    }
}

fn gauss_legendre_8() -> ([f64; 8], [f64; 8]) {
    let x = [
        -0.960_289_856_497_536_3,
        -0.796_666_477_413_626_7,
        -0.525_532_409_916_329_0,
        -0.183_434_642_495_649_8,
        0.183_434_642_495_649_8,
        0.525_532_409_916_329_0,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_3,
    ];
    let w = [
        0.101_228_536_290_376_3,
        0.222_381_034_453_374_5,
        0.313_706_645_877_887_3,
        0.362_683_783_378_362_0,
        0.362_683_783_378_362_0,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    (x, w)
}

/// The printed `d2` next to its quadrature value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct D2Comparison {
    pub printed: f64,
    pub quadrature: f64,
    pub discrepancy: f64,
}

pub fn compare_d2(
    amplitude: f64,
    drift: f64,
    mu_forward: f64,
    mu_backward: f64,
) -> Result<D2Comparison> {
    let printed = fourier_d2(amplitude, drift, mu_forward, mu_backward)?;
    let quadrature = harmonic_quadrature(amplitude, drift, mu_forward, mu_backward, 64).d2;
    Ok(D2Comparison {
        printed,
        quadrature,
        discrepancy: printed - quadrature,
    })
}

/// Right-hand side of the slow flow; returns `(φ', D')` packed as a state.
pub fn slowflow_rhs(state: &SlowFlowState, p: &SlowFlowParams) -> SlowFlowState {
    let phi = state.phi;
    let i = Complex64::i();
    let amp2 = phi.norm_sqr();
    let dphi = i * 0.5 * (1.0 - p.sigma) * phi + i * 0.25 * p.p * phi.conj()
        - i * (amp2 / 16.0) * phi
        - 0.5 * p.xi * phi;
    let dd = -fourier_d0(phi.norm(), state.drift, p.mu_forward, p.mu_backward);
    SlowFlowState::new(dphi, dd)
}

/// The slow flow as an ODE in `(Re φ, Im φ, D)`.
#[derive(Debug, Clone, Copy)]
pub struct SlowFlowSystem {
    pub params: SlowFlowParams,
}

impl OdeSystem<3> for SlowFlowSystem {
    fn derivative(&self, _t: f64, y: &[f64; 3], _side: Side) -> [f64; 3] {
        slowflow_rhs(&SlowFlowState::from_array(*y), &self.params).to_array()
    }
}

/// Integrates the slow flow in slow time `t1`.
pub fn integrate_slowflow(
    ic: SlowFlowState,
    params: &SlowFlowParams,
    opts: &IntegratorOptions,
) -> Result<Trajectory<3>> {
    params.validate()?;
    integrate(
        &SlowFlowSystem { params: *params },
        0.0,
        ic.to_array(),
        opts,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BranchId {
    /// Trivial state `|φ0| = 0`.
    Phi0,
    /// Upper nontrivial branch, born at `σ_B1`.
    Phi1,
    /// Lower nontrivial branch, born at `σ_B2`.
    Phi2,
}

impl BranchId {
    pub fn index(self) -> usize {
        match self {
            BranchId::Phi0 => 0,
            BranchId::Phi1 => 1,
            BranchId::Phi2 => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeBranch {
    pub branch: BranchId,
    pub amplitude: f64,
    pub exists: bool,
}

/// Steady amplitudes of the three branches. Nonexistent branches carry `NaN`.
pub fn amplitude_branches(p: &SlowFlowParams) -> [AmplitudeBranch; 3] {
    let trivial = AmplitudeBranch {
        branch: BranchId::Phi0,
        amplitude: 0.0,
        exists: true,
    };
    let absent = |branch| AmplitudeBranch {
        branch,
        amplitude: f64::NAN,
        exists: false,
    };
    if !(p.p > 2.0 * p.xi) {
        return [trivial, absent(BranchId::Phi1), absent(BranchId::Phi2)];
    }
    let root = (p.p * p.p - 4.0 * p.xi * p.xi).sqrt();
    let branch = |id, sign: f64| {
        let sq = 8.0 * (1.0 - p.sigma) + sign * 4.0 * root;
        if sq >= 0.0 {
            AmplitudeBranch {
                branch: id,
                amplitude: sq.sqrt(),
                exists: true,
            }
        } else {
            absent(id)
        }
    };
    [
        trivial,
        branch(BranchId::Phi1, 1.0),
        branch(BranchId::Phi2, -1.0),
    ]
}

/// Bifurcation points `(σ_B1, σ_B2)`; `None` when `P ≤ 2ξ`.
pub fn bifurcation_sigmas(p: f64, xi: f64) -> Option<(f64, f64)> {
    if !(p >= 2.0 * xi) {
        return None;
    }
    let half = 0.5 * (p * p - 4.0 * xi * xi).sqrt();
    Some((1.0 + half, 1.0 - half))
}

/// Steady drift on a branch of amplitude `|φ|`: the root of `d0(|φ|, D) = 0`.
///
/// The residual is homogeneous of degree one, so the root is found for
/// `r = D/|φ|` on the unit interval and scaled back. With `μ2 > μ1` the root
/// lies in `(0, |φ|)`, with `μ1 > μ2` in `(−|φ|, 0)`.
pub fn solve_drift(amplitude: f64, mu_forward: f64, mu_backward: f64) -> Result<f64> {
    check_positive("mu1", mu_forward)?;
    check_positive("mu2", mu_backward)?;
    if !(amplitude >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "amplitude",
            value: amplitude,
            reason: "must be non-negative",
        });
    }
    if amplitude == 0.0 || mu_forward == mu_backward {
        return Ok(0.0);
    }
    let residual = |r: f64| fourier_d0(1.0, r, mu_forward, mu_backward);
    let r = if mu_backward > mu_forward {
        bisect(residual, 0.0, 1.0, 0.0)?
    } else {
        bisect(residual, -1.0, 0.0, 0.0)?
    };
    Ok(amplitude * r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    /// Only the trivial state is stable.
    I,
    /// The progressive state is the unique attractor.
    II,
    /// Trivial and progressive states are both stable.
    III,
}

impl Region {
    pub fn label(self) -> &'static str {
        match self {
            Region::I => "I",
            Region::II => "II",
            Region::III => "III",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Region::I => 1,
            Region::II => 2,
            Region::III => 3,
        }
    }
}

pub fn classify_region(p: f64, sigma: f64, xi: f64) -> Region {
    match bifurcation_sigmas(p, xi) {
        None => Region::I,
        Some(_) if p <= 2.0 * xi => Region::I,
        Some((b1, _)) if sigma > b1 => Region::I,
        Some((_, b2)) if sigma > b2 => Region::II,
        Some(_) => Region::III,
    }
}

/// A steady state of the slow flow together with its linear stability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint21 {
    pub branch: BranchId,
    pub amplitude: f64,
    /// `arg φ` of the representative with phase in `(−π/2, π/2]`; `φ → −φ` is also a fixed point.
    pub phase: f64,
    pub drift: f64,
    pub stability: Stability,
    /// Eigenvalues of the φ-plane Jacobian in `(Re φ, Im φ)`.
    pub eigenvalues: [Complex64; 2],
    /// Eigenvalue along `D`.
    pub drift_eigenvalue: f64,
}

impl FixedPoint21 {
    pub fn state(&self) -> SlowFlowState {
        SlowFlowState::new(
            Complex64::from_polar(self.amplitude, self.phase),
            self.drift,
        )
    }
}

/// Phase of a nontrivial fixed point with amplitude `a`.
///
/// Dividing the φ equation by `φ = a e^{iδ}` gives
/// `e^{−2iδ} = −[2(1−σ) − a²/4 + 2iξ]/P`.
pub fn fixed_point_phase(amplitude: f64, p: &SlowFlowParams) -> f64 {
    let w = Complex64::new(
        -(2.0 * (1.0 - p.sigma) - amplitude * amplitude / 4.0),
        -2.0 * p.xi,
    ) / p.p;
    -0.5 * w.arg()
}

/// Largest component of the slow-flow residual at `state`.
pub fn fixed_point_residual(state: &SlowFlowState, p: &SlowFlowParams) -> f64 {
    let r = slowflow_rhs(state, p);
    r.phi.re.abs().max(r.phi.im.abs()).max(r.drift.abs())
}

/// Residual above which a point is not accepted for stability analysis.
pub const FIXED_POINT_TOLERANCE: f64 = 1e-8;
const JACOBIAN_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub stability: Stability,
    pub eigenvalues: [Complex64; 2],
    pub drift_eigenvalue: f64,
}

/// Linear stability of a fixed point. The φ-plane Jacobian is taken by central
/// differences; the drift direction decouples with eigenvalue `−∂d0/∂D`.
pub fn classify_stability(state: &SlowFlowState, p: &SlowFlowParams) -> Result<StabilityReport> {
    let residual = fixed_point_residual(state, p);
    if !(residual < FIXED_POINT_TOLERANCE) {
        return Err(Error::NotAFixedPoint(residual));
    }
    let f = |re: f64, im: f64| {
        slowflow_rhs(&SlowFlowState::new(Complex64::new(re, im), state.drift), p).phi
    };
    let (u, v) = (state.phi.re, state.phi.im);
    let h = JACOBIAN_STEP;
    let du = (f(u + h, v) - f(u - h, v)) / (2.0 * h);
    let dv = (f(u, v + h) - f(u, v - h)) / (2.0 * h);
    let eigenvalues = eigenvalues_2x2(du.re, dv.re, du.im, dv.im);
    let drift_eigenvalue =
        -fourier_d0_slope(state.amplitude(), state.drift, p.mu_forward, p.mu_backward);
    let all = [
        eigenvalues[0],
        eigenvalues[1],
        Complex64::new(drift_eigenvalue, 0.0),
    ];
    Ok(StabilityReport {
        stability: Stability::from_eigenvalues(&all),
        eigenvalues,
        drift_eigenvalue,
    })
}

/// All existing fixed points with drift and stability.
pub fn fixed_points(p: &SlowFlowParams) -> Result<Vec<FixedPoint21>> {
    p.validate()?;
    let mut out = Vec::with_capacity(3);
    for b in amplitude_branches(p).into_iter().filter(|b| b.exists) {
        let (phase, drift) = if b.amplitude > 0.0 {
            (
                fixed_point_phase(b.amplitude, p),
                solve_drift(b.amplitude, p.mu_forward, p.mu_backward)?,
            )
        } else {
            (0.0, 0.0)
        };
        let state = SlowFlowState::new(Complex64::from_polar(b.amplitude, phase), drift);
        let report = classify_stability(&state, p)?;
        out.push(FixedPoint21 {
            branch: b.branch,
            amplitude: b.amplitude,
            phase,
            drift,
            stability: report.stability,
            eigenvalues: report.eigenvalues,
            drift_eigenvalue: report.drift_eigenvalue,
        });
    }
    Ok(out)
}

/// Full-model envelopes reconstructed from a slow-flow state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    /// Fast time `t = t1/ε`.
    pub time: f64,
    /// Pendulum amplitude `√ε|φ|`.
    pub theta_amplitude: f64,
    /// Upper velocity envelope `ε^{3/2}(D + |φ|)`.
    pub velocity_upper: f64,
    /// Lower velocity envelope `ε^{3/2}(D − |φ|)`.
    pub velocity_lower: f64,
    /// Mean velocity `ε^{3/2}D`.
    pub velocity_mean: f64,
}

pub fn envelope_at(slow_time: f64, state: &SlowFlowState, epsilon: f64) -> Envelope {
    let scale = epsilon.powf(1.5);
    let amp = state.amplitude();
    Envelope {
        time: slow_time / epsilon,
        theta_amplitude: epsilon.sqrt() * amp,
        velocity_upper: scale * (state.drift + amp),
        velocity_lower: scale * (state.drift - amp),
        velocity_mean: scale * state.drift,
    }
}

/// Envelopes along a slow-flow trajectory (sampled in slow time).
pub fn reconstruct_envelopes(traj: &Trajectory<3>, epsilon: f64) -> Vec<Envelope> {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t1, s)| envelope_at(t1, &SlowFlowState::from_array(*s), epsilon))
        .collect()
}

/// Mean capsule velocity `ε^{3/2}D` predicted by a slow-flow drift.
pub fn mean_velocity(drift: f64, epsilon: f64) -> f64 {
    epsilon.powf(1.5) * drift
}
