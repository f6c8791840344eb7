//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use capsule_core::integrator::{OdeSystem, Side};
use capsule_core::model::{rhs_full_branch, DampingBranch, NondimParams};

/// Composite Simpson rule with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Rectified damping force `μ(s)s` for `s = D − a cosψ`.
fn force(psi: f64, a: f64, d: f64, mu1: f64, mu2: f64) -> f64 {
    let s = d - a * psi.cos();
    if s > 0.0 {
        mu1 * s
    } else {
        mu2 * s
    }
}

/// Panels of `[0, 2π]` on which the force is smooth.
fn smooth_panels(a: f64, d: f64) -> Vec<(f64, f64)> {
    if a > 0.0 && d.abs() < a {
        let c = (d / a).acos();
        vec![(0.0, c), (c, 2.0 * PI - c), (2.0 * PI - c, 2.0 * PI)]
    } else {
        vec![(0.0, 2.0 * PI)]
    }
}

/// `(1/2π)∮ μ(s)s dψ` by panelled Simpson quadrature.
pub fn d0_oracle(a: f64, d: f64, mu1: f64, mu2: f64) -> f64 {
    smooth_panels(a, d)
        .into_iter()
        .map(|(lo, hi)| simpson(|p| force(p, a, d, mu1, mu2), lo, hi, 2000))
        .sum::<f64>()
        / (2.0 * PI)
}

/// `(1/π)∮ μ(s)s sinψ dψ`.
pub fn d1_oracle(a: f64, d: f64, mu1: f64, mu2: f64) -> f64 {
    smooth_panels(a, d)
        .into_iter()
        .map(|(lo, hi)| simpson(|p| force(p, a, d, mu1, mu2) * p.sin(), lo, hi, 2000))
        .sum::<f64>()
        / PI
}

/// `(1/π)∮ μ(s)s cosψ dψ`.
pub fn d2_oracle(a: f64, d: f64, mu1: f64, mu2: f64) -> f64 {
    smooth_panels(a, d)
        .into_iter()
        .map(|(lo, hi)| simpson(|p| force(p, a, d, mu1, mu2) * p.cos(), lo, hi, 2000))
        .sum::<f64>()
        / PI
}

/// Residuals of the two equations of motion, written in their raw coupled form,
/// at a state `(x, v, θ, θ')` with accelerations `(x'', θ'')`.
pub fn full_model_residual(y: [f64; 4], acc: [f64; 2], t: f64, p: &NondimParams) -> [f64; 2] {
    let [_, v, th, thd] = y;
    let [xdd, thdd] = acc;
    let mu = if v > 0.0 { p.mu_forward } else { p.mu_backward };
    let capsule = xdd + p.epsilon * (th.cos() * thdd - th.sin() * thd * thd) + mu * v;
    let pendulum = thdd
        + th.cos() * xdd
        + (1.0 - p.forcing_amp * (p.omega * t).cos()) * th.sin()
        + p.zeta * thd;
    [capsule, pendulum]
}

/// Full model augmented with the accumulated damping work `W' = μ(v)v`.
pub struct WithDampingWork(pub NondimParams);

impl OdeSystem<5> for WithDampingWork {
    fn derivative(&self, t: f64, y: &[f64; 5], side: Side) -> [f64; 5] {
        let s = [y[0], y[1], y[2], y[3]];
        let branch = DampingBranch::from(side);
        let d = rhs_full_branch(&s, t, &self.0, branch);
        let mu = branch.coefficient(self.0.mu_forward, self.0.mu_backward);
        [d[0], d[1], d[2], d[3], mu * y[1]]
    }

    fn switching_function(&self, y: &[f64; 5]) -> Option<f64> {
        Some(y[1])
    }
}

pub fn case2_params() -> NondimParams {
    NondimParams {
        epsilon: 0.01,
        omega: 2.0,
        forcing_amp: 0.08,
        zeta: 0.01,
        mu_forward: 0.01,
        mu_backward: 0.02,
    }
}

pub fn rotatory_params() -> NondimParams {
    NondimParams {
        forcing_amp: 8.0,
        zeta: 1.0,
        ..case2_params()
    }
}
