//! Capsule-pendulum model: parameters, state and the full equations of motion.
//!
//! In nondimensional form the capsule position `x` and pendulum angle `θ` obey
//!
//! ```text
//! x'' + ε cosθ θ'' − ε θ'² sinθ = −μ(x') x'
//! x'' cosθ + θ'' + (1 − A cos ωt) sinθ = −ζ θ'
//! ```
//!
//! with `μ(x') = μ1` for `x' > 0` and `μ2` for `x' ≤ 0`. The system is implicit in
//! the accelerations and is resolved here by a closed-form 2×2 solve.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{check_positive, Error, Result};
use crate::integrator::{OdeSystem, Side};

/// Dimensional parameters of the capsule, pendulum, base excitation and damping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Capsule mass `M` [kg].
    pub capsule_mass: f64,
    /// Pendulum tip mass `m` [kg].
    pub pendulum_mass: f64,
    /// Pendulum length `l` [m].
    pub pendulum_length: f64,
    /// Gravitational acceleration `g` [m/s²].
    pub gravity: f64,
    /// Vertical base amplitude `A0` [m].
    pub base_amplitude: f64,
    /// Base angular frequency `Ω` [rad/s].
    pub base_frequency: f64,
    /// Viscous damping for forward capsule motion `λ1` [N·s/m].
    pub damping_forward: f64,
    /// Viscous damping for backward capsule motion `λ2` [N·s/m].
    pub damping_backward: f64,
    /// Hinge damping `c` [N·m·s].
    pub hinge_damping: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        check_positive("capsule_mass", self.capsule_mass)?;
        check_positive("pendulum_mass", self.pendulum_mass)?;
        check_positive("pendulum_length", self.pendulum_length)?;
        check_positive("gravity", self.gravity)?;
        check_positive("base_amplitude", self.base_amplitude)?;
        check_positive("base_frequency", self.base_frequency)?;
        check_positive("damping_forward", self.damping_forward)?;
        check_positive("damping_backward", self.damping_backward)?;
        check_positive("hinge_damping", self.hinge_damping)?;
        if self.pendulum_mass >= self.capsule_mass {
            return Err(Error::InvalidParameter {
                name: "pendulum_mass",
                value: self.pendulum_mass,
                reason: "must be smaller than the capsule mass",
            });
        }
        Ok(())
    }

    /// Natural frequency `Ω_s = √(g/l)` used as the time scale.
    pub fn time_scale(&self) -> f64 {
        (self.gravity / self.pendulum_length).sqrt()
    }

    /// Maps to the dimensionless groups of the nondimensional equations.
    pub fn nondimensionalize(&self) -> Result<NondimParams> {
        self.validate()?;
        let total_mass = self.capsule_mass + self.pendulum_mass;
        let omega_s = self.time_scale();
        let inv_omega_s = (self.pendulum_length / self.gravity).sqrt();
        let params = NondimParams {
            epsilon: self.pendulum_mass / total_mass,
            omega: self.base_frequency / omega_s,
            forcing_amp: self.base_frequency.powi(2) * self.base_amplitude / self.gravity,
            zeta: self.hinge_damping / (self.pendulum_mass * self.pendulum_length.powi(2))
                * inv_omega_s,
            mu_forward: inv_omega_s * self.damping_forward / total_mass,
            mu_backward: inv_omega_s * self.damping_backward / total_mass,
        };
        params.validate()?;
        Ok(params)
    }
}

/// Dimensionless parameters of the full model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NondimParams {
    /// Mass ratio `ε = m/(M+m)`.
    pub epsilon: f64,
    /// Forcing frequency `ω = Ω/Ω_s`.
    pub omega: f64,
    /// Forcing amplitude `A = Ω²A0/g`.
    pub forcing_amp: f64,
    /// Hinge damping `ζ`.
    pub zeta: f64,
    /// Forward capsule damping `μ1`.
    pub mu_forward: f64,
    /// Backward capsule damping `μ2`.
    pub mu_backward: f64,
}

impl NondimParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                value: self.epsilon,
                reason: "must lie in (0, 1)",
            });
        }
        check_positive("omega", self.omega)?;
        check_positive("forcing_amp", self.forcing_amp)?;
        if !(self.zeta.is_finite() && self.zeta >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "zeta",
                value: self.zeta,
                reason: "must be finite and non-negative",
            });
        }
        check_positive("mu_forward", self.mu_forward)?;
        check_positive("mu_backward", self.mu_backward)?;
        Ok(())
    }

    pub fn forcing_period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    /// Inverse of [`PhysicalParams::nondimensionalize`] given the three reference
    /// scales `M`, `l` and `g` that the dimensionless groups do not fix.
    pub fn redimensionalize(
        &self,
        capsule_mass: f64,
        pendulum_length: f64,
        gravity: f64,
    ) -> Result<PhysicalParams> {
        self.validate()?;
        check_positive("capsule_mass", capsule_mass)?;
        check_positive("pendulum_length", pendulum_length)?;
        check_positive("gravity", gravity)?;
        let pendulum_mass = self.epsilon * capsule_mass / (1.0 - self.epsilon);
        let total_mass = capsule_mass + pendulum_mass;
        let omega_s = (gravity / pendulum_length).sqrt();
        let base_frequency = self.omega * omega_s;
        Ok(PhysicalParams {
            capsule_mass,
            pendulum_mass,
            pendulum_length,
            gravity,
            base_amplitude: self.forcing_amp * gravity / base_frequency.powi(2),
            base_frequency,
            damping_forward: self.mu_forward * total_mass * omega_s,
            damping_backward: self.mu_backward * total_mass * omega_s,
            hinge_damping: self.zeta * pendulum_mass * pendulum_length.powi(2) * omega_s,
        })
    }
}

/// Which side of the damping law is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DampingBranch {
    /// `v > 0`, coefficient `μ1`.
    Forward,
    /// `v ≤ 0`, coefficient `μ2`.
    Backward,
}

impl DampingBranch {
    pub fn from_velocity(v: f64) -> Self {
        if v > 0.0 {
            DampingBranch::Forward
        } else {
            DampingBranch::Backward
        }
    }

    pub fn coefficient(self, mu_forward: f64, mu_backward: f64) -> f64 {
        match self {
            DampingBranch::Forward => mu_forward,
            DampingBranch::Backward => mu_backward,
        }
    }
}

impl From<Side> for DampingBranch {
    fn from(side: Side) -> Self {
        match side {
            Side::Positive => DampingBranch::Forward,
            Side::NonPositive => DampingBranch::Backward,
        }
    }
}

/// Sign-switching damping coefficient; `v = 0` belongs to the backward branch.
pub fn damping_coefficient(v: f64, mu_forward: f64, mu_backward: f64) -> f64 {
    DampingBranch::from_velocity(v).coefficient(mu_forward, mu_backward)
}

/// State of the full model. `theta` is kept unwrapped so rotations can be counted.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FullState {
    pub x: f64,
    pub v: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

impl FullState {
    pub fn new(x: f64, v: f64, theta: f64, theta_dot: f64) -> Self {
        Self {
            x,
            v,
            theta,
            theta_dot,
        }
    }

    /// Capsule at rest at the origin, pendulum released from `theta` with rate `theta_dot`.
    pub fn at_rest(theta: f64, theta_dot: f64) -> Self {
        Self::new(0.0, 0.0, theta, theta_dot)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.v, self.theta, self.theta_dot]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|c| c.is_finite())
    }

    /// Reflection `(x, v, θ, θ') → (−x, −v, −θ, −θ')`.
    pub fn reflected(self) -> Self {
        Self::new(-self.x, -self.v, -self.theta, -self.theta_dot)
    }
}

/// Time derivative of `(x, v, θ, θ')` with the damping branch selected by the sign of `v`.
pub fn rhs_full(state: &FullState, t: f64, params: &NondimParams) -> Result<FullState> {
    let det = 1.0 - params.epsilon * state.theta.cos().powi(2);
    if !(det > 0.0) {
        return Err(Error::SingularMassMatrix(det));
    }
    let branch = DampingBranch::from_velocity(state.v);
    Ok(FullState::from_array(rhs_full_branch(
        &state.to_array(),
        t,
        params,
        branch,
    )))
}

/// Derivative with the damping branch held fixed. Used by the integrator so
/// the coefficient does not change inside a sub-step.
#[inline]
pub fn rhs_full_branch(
    y: &[f64; 4],
    t: f64,
    params: &NondimParams,
    branch: DampingBranch,
) -> [f64; 4] {
    let [_, v, theta, theta_dot] = *y;
    let (s, c) = theta.sin_cos();
    let eps = params.epsilon;
    let mu = branch.coefficient(params.mu_forward, params.mu_backward);

    // [[1, εc], [c, 1]] (x'', θ'') = (r1, r2)
    let r1 = eps * theta_dot * theta_dot * s - mu * v;
    let r2 = -(1.0 - params.forcing_amp * (params.omega * t).cos()) * s - params.zeta * theta_dot;
    let det = 1.0 - eps * c * c;
    let x_acc = (r1 - eps * c * r2) / det;
    let theta_acc = (r2 - c * r1) / det;
    [v, x_acc, theta_dot, theta_acc]
}

/// The full model as an ODE system whose switching function is the capsule velocity.
#[derive(Debug, Clone, Copy)]
pub struct FullModel {
    pub params: NondimParams,
}

impl FullModel {
    pub fn new(params: NondimParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }
}

impl OdeSystem<4> for FullModel {
    fn derivative(&self, t: f64, y: &[f64; 4], side: Side) -> [f64; 4] {
        rhs_full_branch(y, t, &self.params, side.into())
    }

    fn switching_function(&self, y: &[f64; 4]) -> Option<f64> {
        Some(y[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn case2() -> NondimParams {
        NondimParams {
            epsilon: 0.01,
            omega: 2.0,
            forcing_amp: 0.08,
            zeta: 0.01,
            mu_forward: 0.01,
            mu_backward: 0.02,
        }
    }

    #[test]
    fn nondimensionalize_hand_inverted_example() {
        // l = g numerically so the time scale is 1; the other inputs were chosen
        // by inverting the dimensionless groups for (0.01, 2, 0.08, 0.01, 0.01, 0.02).
        let g = 9.81;
        let p = PhysicalParams {
            capsule_mass: 99.0,
            pendulum_mass: 1.0,
            pendulum_length: g,
            gravity: g,
            base_amplitude: 0.08 * g / 4.0,
            base_frequency: 2.0,
            damping_forward: 0.01 * 100.0,
            damping_backward: 0.02 * 100.0,
            hinge_damping: 0.01 * 1.0 * g * g,
        };
        let n = p.nondimensionalize().unwrap();
        assert_relative_eq!(n.epsilon, 0.01, max_relative = 1e-14);
        assert_relative_eq!(n.omega, 2.0, max_relative = 1e-14);
        assert_relative_eq!(n.forcing_amp, 0.08, max_relative = 1e-14);
        assert_relative_eq!(n.zeta, 0.01, max_relative = 1e-14);
        assert_relative_eq!(n.mu_forward, 0.01, max_relative = 1e-14);
        assert_relative_eq!(n.mu_backward, 0.02, max_relative = 1e-14);
        assert_eq!(p.time_scale(), 1.0);
    }

    #[test]
    fn vanishing_pendulum_mass_gives_vanishing_epsilon() {
        let mut p = case2().redimensionalize(10.0, 0.5, 9.81).unwrap();
        for m in [1e-3, 1e-6, 1e-9] {
            p.pendulum_mass = m;
            let n = p.nondimensionalize().unwrap();
            assert!(n.epsilon < m / 10.0 * 1.0000001);
        }
    }

    #[test]
    fn nondimensionalize_rejects_bad_input() {
        let mut p = case2().redimensionalize(10.0, 0.5, 9.81).unwrap();
        p.hinge_damping = 0.0;
        assert!(matches!(
            p.nondimensionalize(),
            Err(Error::InvalidParameter {
                name: "hinge_damping",
                ..
            })
        ));
        let mut p = case2().redimensionalize(10.0, 0.5, 9.81).unwrap();
        p.pendulum_mass = 20.0;
        assert!(p.nondimensionalize().is_err());
    }

    #[test]
    fn redimensionalize_round_trip() {
        let n = case2();
        let p = n.redimensionalize(3.0, 0.7, 9.81).unwrap();
        let back = p.nondimensionalize().unwrap();
        assert_relative_eq!(back.epsilon, n.epsilon, max_relative = 1e-12);
        assert_relative_eq!(back.omega, n.omega, max_relative = 1e-12);
        assert_relative_eq!(back.forcing_amp, n.forcing_amp, max_relative = 1e-12);
        assert_relative_eq!(back.zeta, n.zeta, max_relative = 1e-12);
        assert_relative_eq!(back.mu_forward, n.mu_forward, max_relative = 1e-12);
        assert_relative_eq!(back.mu_backward, n.mu_backward, max_relative = 1e-12);
    }

    #[test]
    fn damping_law_boundary() {
        assert_eq!(damping_coefficient(0.3, 0.01, 0.02), 0.01);
        assert_eq!(damping_coefficient(0.0, 0.01, 0.02), 0.02);
        assert_eq!(damping_coefficient(-1e-300, 0.01, 0.02), 0.02);
        for v in [-2.0, -0.0, 0.0, 1e-12, 5.0] {
            assert_eq!(damping_coefficient(v, 0.7, 0.7), 0.7);
        }
    }

    #[test]
    fn equilibrium_has_zero_acceleration() {
        let d = rhs_full(&FullState::default(), 0.0, &case2()).unwrap();
        assert_eq!(d, FullState::default());
    }

    #[test]
    fn horizontal_pendulum_feels_unit_gravity_torque() {
        let p = case2();
        // cos(ωt) = 0 at ωt = π/2
        let t = PI / (2.0 * p.omega);
        let d = rhs_full(&FullState::at_rest(PI / 2.0, 0.0), t, &p).unwrap();
        assert!(d.v.abs() < 1e-15);
        assert_relative_eq!(d.theta_dot, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn singular_mass_matrix_is_reported() {
        let mut p = case2();
        p.epsilon = 1.0;
        assert!(matches!(
            rhs_full(&FullState::default(), 0.0, &p),
            Err(Error::SingularMassMatrix(_))
        ));
    }
}
