//! Case studies, parameter sweeps and full-model versus reduced-model comparisons.
//!
//! Every grid point and case run is independent. Work is spread over a
//! [`WorkerPool`] and results are gathered back in grid order, so the output
//! does not depend on the number of workers.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::averaged::{self, AveragedParams, FixedPoint11};
use crate::error::{check_positive, Error, Result};
use crate::integrator::{integrate, series_stats, IntegratorOptions, SeriesStats, Trajectory};
use crate::model::{FullModel, FullState, NondimParams};
use crate::slowflow::{self, BranchId, Region, SlowFlowParams, SlowFlowState};
use crate::stability::Stability;

/// Integration horizon for oscillatory cases.
pub const OSCILLATORY_HORIZON: f64 = 3000.0;
/// Integration horizon for rotatory cases.
pub const ROTATORY_HORIZON: f64 = 1500.0;

/// Tail `|mean v|` below which the capsule counts as stopped.
pub const TRIVIAL_VELOCITY: f64 = 1e-4;
/// Tail pendulum half-range below which the pendulum counts as at rest.
pub const TRIVIAL_THETA: f64 = 1e-2;
/// Relative band around `±ω` for the tail mean of `θ'` in a rotatory state.
pub const ROTATION_BAND: f64 = 0.1;

/// Pendulum releases used to probe bistability.
pub const PROBE_THETAS: [f64; 2] = [0.1, 2.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Trivial,
    Progressive,
    Rotatory,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::Trivial => "trivial",
            Regime::Progressive => "progressive",
            Regime::Rotatory => "rotatory",
        }
    }
}

/// Tail statistics of a full-model run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailStats {
    pub velocity: SeriesStats,
    pub theta: SeriesStats,
    pub theta_rate: SeriesStats,
    /// Net pendulum turns over the tail, signed.
    pub rotations: f64,
}

pub fn tail_stats(traj: &Trajectory<4>, discard: f64) -> Result<TailStats> {
    let theta = series_stats(traj, 2, discard)?;
    let start = ((discard * traj.len() as f64).floor() as usize).min(traj.len() - 1);
    let turns = (traj.final_state[2] - traj.states[start][2]) / (2.0 * PI);
    Ok(TailStats {
        velocity: series_stats(traj, 1, discard)?,
        theta,
        theta_rate: series_stats(traj, 3, discard)?,
        rotations: turns,
    })
}

/// Regime from tail statistics. Rotation is tested first.
pub fn classify_regime(stats: &TailStats, omega: f64) -> Regime {
    let rate = stats.theta_rate.mean;
    if (rate.abs() - omega).abs() <= ROTATION_BAND * omega {
        Regime::Rotatory
    } else if stats.velocity.mean.abs() < TRIVIAL_VELOCITY && stats.theta.amplitude < TRIVIAL_THETA
    {
        Regime::Trivial
    } else {
        Regime::Progressive
    }
}

/// Which reduced model supplies the prediction for a case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReducedModel {
    Oscillatory,
    Rotatory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub id: String,
    pub params: NondimParams,
    pub initial: FullState,
    pub horizon: f64,
    pub reduced: ReducedModel,
}

impl CaseSpec {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        check_positive("horizon", self.horizon)?;
        if !self.initial.is_finite() {
            return Err(Error::Domain("initial state must be finite".into()));
        }
        Ok(())
    }

    fn oscillatory(id: &str, forcing_amp: f64, omega: f64, theta0: f64) -> Self {
        Self {
            id: id.into(),
            params: NondimParams {
                epsilon: 0.01,
                omega,
                forcing_amp,
                zeta: 0.01,
                mu_forward: 0.01,
                mu_backward: 0.02,
            },
            initial: FullState::at_rest(theta0, 0.0),
            horizon: OSCILLATORY_HORIZON,
            reduced: ReducedModel::Oscillatory,
        }
    }

    /// Weak forcing below threshold: everything stops.
    pub fn case1() -> Self {
        Self::oscillatory("case1", 0.01, 2.0, 2.0)
    }

    /// Exact (2:1) tuning: progressive motion from a tiny release.
    pub fn case2() -> Self {
        Self::oscillatory("case2", 0.08, 2.0, 0.001)
    }

    /// Bistable detuning, large release: progressive motion.
    pub fn case3() -> Self {
        Self::oscillatory("case3", 0.08, 1.94, 2.0)
    }

    /// Bistable detuning, moderate release: everything stops.
    pub fn case4() -> Self {
        Self::oscillatory("case4", 0.08, 1.94, 0.5)
    }

    /// Strong forcing near (1:1) resonance with the pendulum released from rest at `θ = 2`.
    pub fn rotatory() -> Self {
        Self {
            id: "rotatory".into(),
            params: NondimParams {
                epsilon: 0.01,
                omega: 2.0,
                forcing_amp: 8.0,
                zeta: 1.0,
                mu_forward: 0.01,
                mu_backward: 0.02,
            },
            initial: FullState::at_rest(2.0, 0.0),
            horizon: ROTATORY_HORIZON,
            reduced: ReducedModel::Rotatory,
        }
    }

    pub fn presets() -> Vec<Self> {
        vec![
            Self::case1(),
            Self::case2(),
            Self::case3(),
            Self::case4(),
            Self::rotatory(),
        ]
    }

    pub fn preset(id: &str) -> Option<Self> {
        Self::presets().into_iter().find(|c| c.id == id)
    }
}

/// Reduced-model prediction of the steady mean capsule velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub mean_velocity: f64,
    /// Slow-flow branch reached, for oscillatory cases.
    pub branch: Option<BranchId>,
    /// Whether the averaged phase locked, for rotatory cases.
    pub locked: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub id: String,
    pub regime: Regime,
    pub mean_velocity: f64,
    pub velocity_amplitude: f64,
    pub theta_amplitude: f64,
    pub mean_theta_rate: f64,
    pub rotations: f64,
    /// Means of `v` over the third and fourth quarters agree to 5%
    /// (of the larger of the mean and the trivial-velocity threshold).
    pub converged: bool,
    pub prediction: Option<Prediction>,
    pub absolute_error: Option<f64>,
    pub relative_error: Option<f64>,
}

impl ComparisonReport {
    pub fn predicted_velocity(&self) -> Option<f64> {
        self.prediction.map(|p| p.mean_velocity)
    }
}

/// Full-model trajectory of a case with default integrator settings.
pub fn simulate_case(spec: &CaseSpec) -> Result<Trajectory<4>> {
    spec.validate()?;
    let model = FullModel::new(spec.params)?;
    let opts = IntegratorOptions::for_forcing(spec.params.omega, spec.horizon);
    integrate(&model, 0.0, spec.initial.to_array(), &opts)
}

fn window_mean(values: &[f64], from: f64, to: f64) -> f64 {
    let n = values.len();
    let a = (from * n as f64) as usize;
    let b = ((to * n as f64) as usize).max(a + 1).min(n);
    values[a..b].iter().sum::<f64>() / (b - a) as f64
}

fn settled(traj: &Trajectory<4>) -> bool {
    let v = traj.component(1);
    let third = window_mean(&v, 0.5, 0.75);
    let fourth = window_mean(&v, 0.75, 1.0);
    (third - fourth).abs() <= 0.05 * fourth.abs().max(TRIVIAL_VELOCITY)
}

/// Runs the full model, classifies the regime and compares with the reduced model.
pub fn run_case(spec: &CaseSpec) -> Result<ComparisonReport> {
    let traj = simulate_case(spec)?;
    report_from_trajectory(spec, &traj)
}

pub fn report_from_trajectory(spec: &CaseSpec, traj: &Trajectory<4>) -> Result<ComparisonReport> {
    let stats = tail_stats(traj, crate::integrator::DEFAULT_DISCARD)?;
    let regime = classify_regime(&stats, spec.params.omega);
    let prediction = match spec.reduced {
        ReducedModel::Oscillatory => predict_oscillatory(spec, regime)?,
        ReducedModel::Rotatory => predict_rotatory(spec)?,
    };
    let mean = stats.velocity.mean;
    let absolute_error = prediction.map(|p| (mean - p.mean_velocity).abs());
    let relative_error = prediction.and_then(|p| {
        (p.mean_velocity != 0.0).then(|| (mean - p.mean_velocity).abs() / p.mean_velocity.abs())
    });
    Ok(ComparisonReport {
        id: spec.id.clone(),
        regime,
        mean_velocity: mean,
        velocity_amplitude: stats.velocity.amplitude,
        theta_amplitude: stats.theta.amplitude,
        mean_theta_rate: stats.theta_rate.mean,
        rotations: stats.rotations,
        converged: settled(traj),
        prediction,
        absolute_error,
        relative_error,
    })
}

/// Slow-flow state matching a full-model release: `φ(0) = (θ'(0) + iθ(0))/√ε`.
pub fn slowflow_initial_state(initial: &FullState, epsilon: f64) -> SlowFlowState {
    let scale = epsilon.sqrt();
    SlowFlowState::new(
        Complex64::new(initial.theta_dot / scale, initial.theta / scale),
        0.0,
    )
}

/// `ε^{3/2}D` of the slow-flow state matching the observed regime: the trivial
/// point for a stopped capsule, otherwise the stable nontrivial branch.
/// `None` when the slow flow has no such branch.
fn predict_oscillatory(spec: &CaseSpec, regime: Regime) -> Result<Option<Prediction>> {
    let p = slowflow::to_slowflow_params(&spec.params)?;
    let points = slowflow::fixed_points(&p)?;
    let fp = match regime {
        Regime::Trivial => points.iter().find(|f| f.branch == BranchId::Phi0),
        _ => points
            .iter()
            .filter(|f| f.branch != BranchId::Phi0 && f.stability.is_stable())
            .max_by(|a, b| a.amplitude.total_cmp(&b.amplitude)),
    };
    Ok(fp.map(|fp| Prediction {
        mean_velocity: slowflow::mean_velocity(fp.drift, p.epsilon),
        branch: Some(fp.branch),
        locked: None,
    }))
}

/// Integrates the averaged model from the mapped release. If the phase locks
/// the prediction is `D_ss`; otherwise it is the tail mean of `D_a`.
fn predict_rotatory(spec: &CaseSpec) -> Result<Option<Prediction>> {
    let p = averaged::to_averaged_params(&spec.params)?;
    let ic = averaged::map_initial_conditions(spec.initial.theta, spec.initial.theta_dot, &p)?;
    let opts = IntegratorOptions::for_forcing(p.omega, spec.horizon);
    let traj = averaged::integrate_averaged(ic, &p, &opts)?;
    let rate = series_stats(&traj, 1, crate::integrator::DEFAULT_DISCARD)?;
    let locked = rate.mean.abs() < ROTATION_BAND * p.omega;
    let mean_velocity = if locked {
        averaged::stationary_drift(&p)?
    } else {
        series_stats(&traj, 2, crate::integrator::DEFAULT_DISCARD)?.mean
    };
    Ok(Some(Prediction {
        mean_velocity,
        branch: None,
        locked: Some(locked),
    }))
}

/// Evenly spaced sweep axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(name: &str, min: f64, max: f64, count: usize) -> Result<Self> {
        let axis = Self {
            name: name.into(),
            min,
            max,
            count,
        };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::InvalidParameter {
                name: "count",
                value: self.count as f64,
                reason: "an axis needs at least two points",
            });
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(Error::Domain(format!(
                "axis `{}` needs finite bounds with min < max",
                self.name
            )));
        }
        Ok(())
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            return self.max;
        }
        self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }
}

/// Rectangular grid of results, row-major with the first axis outermost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid<T> {
    pub axes: Vec<Axis>,
    pub points: Vec<T>,
}

impl<T> SweepGrid<T> {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.count).collect()
    }

    pub fn get(&self, index: &[usize]) -> Option<&T> {
        if index.len() != self.axes.len() {
            return None;
        }
        let mut flat = 0;
        for (i, axis) in index.iter().zip(&self.axes) {
            if *i >= axis.count {
                return None;
            }
            flat = flat * axis.count + i;
        }
        self.points.get(flat)
    }
}

/// Fixed-size thread pool; results keep input order.
pub struct WorkerPool {
    pool: rayon::ThreadPool,
}

impl WorkerPool {
    /// `workers = 0` lets the pool pick the number of available cores.
    pub fn new(workers: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    pub fn map<I, R, F>(&self, items: Vec<I>, f: F) -> Result<Vec<R>>
    where
        I: Send,
        R: Send,
        F: Fn(I) -> Result<R> + Sync + Send,
    {
        self.pool
            .install(|| items.into_par_iter().map(f).collect::<Result<Vec<R>>>())
    }
}

impl Default for WorkerPool {
    fn default() -> Self {
        Self::new(0).expect("default worker pool")
    }
}

/// Analytic branch data at one detuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRow {
    pub sigma: f64,
    pub region: Region,
    /// Indexed by branch; `None` where the branch does not exist.
    pub branches: [Option<BranchPoint>; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub amplitude: f64,
    pub drift: f64,
    pub stability: Stability,
}

/// Full-model check at a single detuning, expressed in slow-flow units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerificationPoint {
    pub sigma: f64,
    pub epsilon: f64,
    pub regime: Regime,
    /// Tail mean velocity divided by `ε^{3/2}`.
    pub drift: f64,
    /// Tail pendulum half-range divided by `√ε`.
    pub amplitude: f64,
}

/// Where and how to overlay full-model runs on a branch diagram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub sigmas: Vec<f64>,
    pub epsilon: f64,
    pub theta0: f64,
    /// Horizon in slow time; the full model runs to `horizon/ε`.
    pub slow_horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationDiagram {
    pub grid: SweepGrid<BranchRow>,
    pub sigma_b: Option<(f64, f64)>,
    pub verification: Vec<VerificationPoint>,
}

fn branch_row(p: &SlowFlowParams) -> Result<BranchRow> {
    let mut branches = [None; 3];
    for fp in slowflow::fixed_points(p)? {
        branches[fp.branch.index()] = Some(BranchPoint {
            amplitude: fp.amplitude,
            drift: fp.drift,
            stability: fp.stability,
        });
    }
    Ok(BranchRow {
        sigma: p.sigma,
        region: slowflow::classify_region(p.p, p.sigma, p.xi),
        branches,
    })
}

/// Branch amplitudes, drifts and stability over a detuning axis, with optional
/// full-model runs at selected detunings. `base.sigma` is ignored.
pub fn bifurcation_sweep_21(
    base: &SlowFlowParams,
    sigma: &Axis,
    verification: Option<&Verification>,
    pool: &WorkerPool,
) -> Result<BifurcationDiagram> {
    base.validate()?;
    sigma.validate()?;
    let points = pool.map(sigma.values(), |s| branch_row(&base.with_sigma(s)))?;
    let verification = match verification {
        None => Vec::new(),
        Some(v) => {
            check_positive("epsilon", v.epsilon)?;
            check_positive("slow_horizon", v.slow_horizon)?;
            pool.map(v.sigmas.clone(), |s| {
                verify_point(
                    &base.with_sigma(s).with_epsilon(v.epsilon),
                    v.theta0,
                    v.slow_horizon,
                )
            })?
        }
    };
    Ok(BifurcationDiagram {
        grid: SweepGrid {
            axes: vec![sigma.clone()],
            points,
        },
        sigma_b: slowflow::bifurcation_sigmas(base.p, base.xi),
        verification,
    })
}

fn verify_point(p: &SlowFlowParams, theta0: f64, slow_horizon: f64) -> Result<VerificationPoint> {
    let spec = CaseSpec {
        id: String::new(),
        params: p.to_nondim(),
        initial: FullState::at_rest(theta0, 0.0),
        horizon: slow_horizon / p.epsilon,
        reduced: ReducedModel::Oscillatory,
    };
    let traj = simulate_case(&spec)?;
    let stats = tail_stats(&traj, crate::integrator::DEFAULT_DISCARD)?;
    Ok(VerificationPoint {
        sigma: p.sigma,
        epsilon: p.epsilon,
        regime: classify_regime(&stats, spec.params.omega),
        drift: stats.velocity.mean / p.epsilon.powf(1.5),
        amplitude: stats.theta.amplitude / p.epsilon.sqrt(),
    })
}

/// Settings for classifying grid points by direct simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalProbe {
    pub epsilon: f64,
    pub horizon: f64,
}

impl Default for EmpiricalProbe {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            horizon: OSCILLATORY_HORIZON,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionPoint {
    pub p: f64,
    pub sigma: f64,
    pub region: Region,
    pub empirical: Option<Region>,
    /// Euclidean distance in the `(P, σ)` plane to the nearest boundary curve.
    pub boundary_distance: f64,
}

/// Region label from the two probe outcomes: both stopped is I, both moving
/// is II, and a split is III.
pub fn region_from_probes(small: Regime, large: Regime) -> Region {
    match (small == Regime::Trivial, large == Regime::Trivial) {
        (true, true) => Region::I,
        (false, false) => Region::II,
        _ => Region::III,
    }
}

pub fn empirical_region(p: &SlowFlowParams, probe: &EmpiricalProbe) -> Result<Region> {
    let params = p.with_epsilon(probe.epsilon).to_nondim();
    let mut regimes = [Regime::Trivial; 2];
    for (slot, theta0) in regimes.iter_mut().zip(PROBE_THETAS) {
        let spec = CaseSpec {
            id: String::new(),
            params,
            initial: FullState::at_rest(theta0, 0.0),
            horizon: probe.horizon,
            reduced: ReducedModel::Oscillatory,
        };
        let traj = simulate_case(&spec)?;
        *slot = classify_regime(
            &tail_stats(&traj, crate::integrator::DEFAULT_DISCARD)?,
            params.omega,
        );
    }
    Ok(region_from_probes(regimes[0], regimes[1]))
}

/// Distance from `(p, sigma)` to the curves `σ = 1 ± ½√(P² − 4ξ²)`.
pub fn boundary_distance(p: f64, sigma: f64, xi: f64, p_max: f64) -> f64 {
    const SAMPLES: usize = 4000;
    let lo = 2.0 * xi;
    let hi = p_max.max(p) + 1.0;
    let mut best = f64::INFINITY;
    for k in 0..=SAMPLES {
        let q = lo + (hi - lo) * k as f64 / SAMPLES as f64;
        let half = 0.5 * (q * q - 4.0 * xi * xi).max(0.0).sqrt();
        for s in [1.0 + half, 1.0 - half] {
            best = best.min((q - p).hypot(s - sigma));
        }
    }
    best
}

/// Region labels on a `(P, σ)` grid, optionally confirmed by simulation.
/// `base.p` and `base.sigma` are ignored.
pub fn region_map(
    base: &SlowFlowParams,
    p_axis: &Axis,
    sigma_axis: &Axis,
    probe: Option<&EmpiricalProbe>,
    pool: &WorkerPool,
) -> Result<SweepGrid<RegionPoint>> {
    base.validate()?;
    p_axis.validate()?;
    sigma_axis.validate()?;
    if let Some(probe) = probe {
        check_positive("epsilon", probe.epsilon)?;
        check_positive("horizon", probe.horizon)?;
    }
    let mut cells = Vec::with_capacity(p_axis.count * sigma_axis.count);
    for p in p_axis.values() {
        for sigma in sigma_axis.values() {
            cells.push((p, sigma));
        }
    }
    let points = pool.map(cells, |(p, sigma)| {
        let params = SlowFlowParams { p, sigma, ..*base };
        Ok(RegionPoint {
            p,
            sigma,
            region: slowflow::classify_region(p, sigma, base.xi),
            empirical: probe.map(|pr| empirical_region(&params, pr)).transpose()?,
            boundary_distance: boundary_distance(p, sigma, base.xi, p_axis.max),
        })
    })?;
    Ok(SweepGrid {
        axes: vec![p_axis.clone(), sigma_axis.clone()],
        points,
    })
}

/// Phase-locked states at one value of `η`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotatoryPoint {
    pub eta: f64,
    pub omega: f64,
    pub families: Vec<FixedPoint11>,
    /// Stationary drift, present when phase locking exists.
    pub drift: Option<f64>,
}

/// Averaged fixed points over an `η` axis with `ω = A/(2ζη)`.
pub fn rotatory_sweep_11(
    base: &AveragedParams,
    eta: &Axis,
    pool: &WorkerPool,
) -> Result<SweepGrid<RotatoryPoint>> {
    base.validate()?;
    eta.validate()?;
    check_positive("eta", eta.min)?;
    let points = pool.map(eta.values(), |e| {
        let p = base.with_eta(e);
        let families = averaged::fixed_points(&p)?;
        let drift = families.first().map(|f| f.drift);
        Ok(RotatoryPoint {
            eta: e,
            omega: p.omega,
            families,
            drift,
        })
    })?;
    Ok(SweepGrid {
        axes: vec![eta.clone()],
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub epsilon: f64,
    pub mean_velocity: f64,
    pub predicted_velocity: f64,
    pub absolute_error: f64,
    pub relative_error: f64,
    pub regime: Regime,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub points: Vec<ScalingPoint>,
    /// Least-squares slope of `log|error|` against `log ε`.
    pub slope: Option<f64>,
    /// Ratio of the first error to the last.
    pub ratio: Option<f64>,
}

/// Full model against `ε^{3/2}D` for each `ε`, holding the rescaled parameters
/// fixed. Each run lasts `slow_horizon/ε` from a release at `θ0`.
pub fn error_scaling(
    base: &SlowFlowParams,
    epsilons: &[f64],
    theta0: f64,
    slow_horizon: f64,
    pool: &WorkerPool,
) -> Result<ScalingReport> {
    base.validate()?;
    check_positive("slow_horizon", slow_horizon)?;
    for &e in epsilons {
        check_positive("epsilon", e)?;
    }
    let points = pool.map(epsilons.to_vec(), |e| {
        let p = base.with_epsilon(e);
        let spec = CaseSpec {
            id: format!("eps={e}"),
            params: p.to_nondim(),
            initial: FullState::at_rest(theta0, 0.0),
            horizon: slow_horizon / e,
            reduced: ReducedModel::Oscillatory,
        };
        let r = run_case(&spec)?;
        let predicted = r.predicted_velocity().unwrap_or(0.0);
        let absolute_error = (r.mean_velocity - predicted).abs();
        Ok(ScalingPoint {
            epsilon: e,
            mean_velocity: r.mean_velocity,
            predicted_velocity: predicted,
            absolute_error,
            relative_error: r.relative_error.unwrap_or(f64::NAN),
            regime: r.regime,
            converged: r.converged,
        })
    })?;
    let fit: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.relative_error > 0.0)
        .map(|p| (p.epsilon.ln(), p.relative_error.ln()))
        .collect();
    let slope = log_slope(&fit);
    let ratio = match (points.first(), points.last()) {
        (Some(a), Some(b)) if points.len() >= 2 && b.relative_error > 0.0 => {
            Some(a.relative_error / b.relative_error)
        }
        _ => None,
    };
    Ok(ScalingReport {
        points,
        slope,
        ratio,
    })
}

fn log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationDirection {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionRun {
    pub initial_rate: f64,
    pub mean_velocity: f64,
    pub mean_theta_rate: f64,
    /// Direction of sustained rotation; `None` when no rotation was captured.
    pub direction: Option<RotationDirection>,
}

impl DirectionRun {
    pub fn captured(&self) -> bool {
        self.direction.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryReport {
    pub positive_start: DirectionRun,
    pub negative_start: DirectionRun,
    /// `mean v` of the `+ω` release minus that of the `−ω` release.
    pub difference: f64,
}

impl AsymmetryReport {
    pub fn all_captured(&self) -> bool {
        self.positive_start.captured() && self.negative_start.captured()
    }
}

/// Two full-model releases from `θ = 0` with `θ'(0) = ±ω`. The direction
/// actually sustained is reported, which need not match the initial spin.
pub fn clockwise_asymmetry_probe(p: &NondimParams, horizon: f64) -> Result<AsymmetryReport> {
    p.validate()?;
    let eta = p.forcing_amp / (2.0 * p.zeta * p.omega);
    if !(eta > 1.0) {
        return Err(Error::InvalidParameter {
            name: "eta",
            value: eta,
            reason: "rotation probe needs eta > 1",
        });
    }
    let run = |rate: f64| -> Result<DirectionRun> {
        let spec = CaseSpec {
            id: String::new(),
            params: *p,
            initial: FullState::at_rest(0.0, rate),
            horizon,
            reduced: ReducedModel::Rotatory,
        };
        let traj = simulate_case(&spec)?;
        let stats = tail_stats(&traj, crate::integrator::DEFAULT_DISCARD)?;
        let direction = (classify_regime(&stats, p.omega) == Regime::Rotatory).then(|| {
            if stats.theta_rate.mean > 0.0 {
                RotationDirection::Positive
            } else {
                RotationDirection::Negative
            }
        });
        Ok(DirectionRun {
            initial_rate: rate,
            mean_velocity: stats.velocity.mean,
            mean_theta_rate: stats.theta_rate.mean,
            direction,
        })
    };
    let positive_start = run(p.omega)?;
    let negative_start = run(-p.omega)?;
    Ok(AsymmetryReport {
        positive_start,
        negative_start,
        difference: positive_start.mean_velocity - negative_start.mean_velocity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(v: f64, theta_amp: f64, rate: f64) -> TailStats {
        let s = |mean, amplitude| SeriesStats {
            mean,
            amplitude,
            discard: 0.5,
        };
        TailStats {
            velocity: s(v, 0.0),
            theta: s(0.0, theta_amp),
            theta_rate: s(rate, 0.0),
            rotations: 0.0,
        }
    }

    #[test]
    fn regime_thresholds() {
        assert_eq!(
            classify_regime(&stats(5e-5, 5e-3, 0.0), 2.0),
            Regime::Trivial
        );
        assert_eq!(
            classify_regime(&stats(2e-4, 5e-3, 0.0), 2.0),
            Regime::Progressive
        );
        assert_eq!(
            classify_regime(&stats(5e-5, 0.5, 0.0), 2.0),
            Regime::Progressive
        );
        assert_eq!(
            classify_regime(&stats(4e-3, 0.5, 1.85), 2.0),
            Regime::Rotatory
        );
        assert_eq!(
            classify_regime(&stats(4e-3, 0.5, -2.15), 2.0),
            Regime::Rotatory
        );
        assert_eq!(
            classify_regime(&stats(4e-3, 0.5, 1.7), 2.0),
            Regime::Progressive
        );
    }

    #[test]
    fn probes_to_regions() {
        use Regime::*;
        assert_eq!(region_from_probes(Trivial, Trivial), Region::I);
        assert_eq!(region_from_probes(Progressive, Progressive), Region::II);
        assert_eq!(region_from_probes(Trivial, Progressive), Region::III);
        assert_eq!(region_from_probes(Rotatory, Trivial), Region::III);
    }

    #[test]
    fn axis_values_hit_both_ends() {
        let a = Axis::new("sigma", -8.0, 6.0, 15).unwrap();
        let v = a.values();
        assert_eq!(v[0], -8.0);
        assert_eq!(v[14], 6.0);
        assert_eq!(v[8], 0.0);
        assert!(Axis::new("sigma", 0.0, 1.0, 1).is_err());
        assert!(Axis::new("sigma", 1.0, 0.0, 3).is_err());
    }

    #[test]
    fn grid_indexing_is_row_major() {
        let g = SweepGrid {
            axes: vec![
                Axis::new("a", 0.0, 1.0, 2).unwrap(),
                Axis::new("b", 0.0, 1.0, 3).unwrap(),
            ],
            points: (0..6).collect::<Vec<_>>(),
        };
        assert_eq!(g.get(&[1, 2]), Some(&5));
        assert_eq!(g.get(&[0, 1]), Some(&1));
        assert_eq!(g.get(&[2, 0]), None);
        assert_eq!(g.shape(), vec![2, 3]);
    }

    #[test]
    fn pool_preserves_order() {
        let pool = WorkerPool::new(4).unwrap();
        let out = pool.map((0..100).collect(), |i: i32| Ok(i * i)).unwrap();
        assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>());
        let err = pool.map(vec![1, 2, 3], |i: i32| {
            if i == 2 {
                Err(Error::Domain("boom".into()))
            } else {
                Ok(i)
            }
        });
        assert!(err.is_err());
    }

    #[test]
    fn slowflow_release_mapping() {
        let s = slowflow_initial_state(&FullState::at_rest(0.5, 0.0), 0.01);
        assert!((s.phi.im - 5.0).abs() < 1e-12);
        assert_eq!(s.phi.re, 0.0);
        assert_eq!(s.drift, 0.0);
    }

    #[test]
    fn boundary_distance_on_and_off_curve() {
        let (b1, b2) = slowflow::bifurcation_sigmas(8.0, 1.0).unwrap();
        assert!(boundary_distance(8.0, b1, 1.0, 10.0) < 1e-2);
        assert!(boundary_distance(8.0, b2, 1.0, 10.0) < 1e-2);
        assert!(boundary_distance(8.0, 1.0, 1.0, 10.0) > 1.0);
    }

    #[test]
    fn presets_are_valid() {
        for c in CaseSpec::presets() {
            c.validate().unwrap();
        }
        assert_eq!(CaseSpec::preset("case3").unwrap().params.omega, 1.94);
        assert!(CaseSpec::preset("nope").is_none());
    }

    #[test]
    fn log_slope_of_a_power_law() {
        let pts: Vec<(f64, f64)> = [0.01f64, 0.005, 0.0025]
            .iter()
            .map(|&e| (e.ln(), (3.0 * e).ln()))
            .collect();
        assert!((log_slope(&pts).unwrap() - 1.0).abs() < 1e-12);
        assert!(log_slope(&pts[..1]).is_none());
    }
}
