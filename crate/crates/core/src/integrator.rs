//! Fixed-step RK4 integration with event splitting at a switching surface, and
//! post-processing of sampled trajectories.
//!
//! Systems with a discontinuous right-hand side expose a scalar switching
//! function. The integrator freezes the active side for each sub-step and,
//! whenever the switching function changes sign over a step, locates the
//! crossing by bisection on the sub-step length and splits the step there.
//! The step grid itself is never shifted, so samples stay on `t0 + k·dt`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Side of the switching surface. Zero belongs to [`Side::NonPositive`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Positive,
    NonPositive,
}

impl Side {
    pub fn of(value: f64) -> Self {
        if value > 0.0 {
            Side::Positive
        } else {
            Side::NonPositive
        }
    }
}

/// A first-order system `y' = f(t, y)` of fixed dimension `N`.
pub trait OdeSystem<const N: usize> {
    /// Right-hand side with the switching side held fixed.
    fn derivative(&self, t: f64, y: &[f64; N], side: Side) -> [f64; N];

    /// Scalar whose sign selects the active branch. Smooth systems return `None`.
    fn switching_function(&self, _y: &[f64; N]) -> Option<f64> {
        None
    }
}

/// Adapter turning a closure into a smooth [`OdeSystem`].
pub struct Smooth<F>(pub F);

impl<F, const N: usize> OdeSystem<N> for Smooth<F>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    fn derivative(&self, t: f64, y: &[f64; N], _side: Side) -> [f64; N] {
        (self.0)(t, y)
    }
}

/// Steps per forcing period used by [`IntegratorOptions::for_forcing`].
pub const DEFAULT_STEPS_PER_PERIOD: usize = 200;
/// Samples stored per forcing period used by [`IntegratorOptions::for_forcing`].
pub const DEFAULT_SAMPLES_PER_PERIOD: usize = 20;
pub const DEFAULT_EVENT_TOLERANCE: f64 = 1e-10;
/// Safety cap on the number of events handled within a single step.
const MAX_EVENTS_PER_STEP: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    /// Upper bound on the step; the actual step divides `t_end` evenly.
    pub dt: f64,
    /// Integration horizon measured from the initial time.
    pub t_end: f64,
    /// Width of the bisection bracket on the crossing time.
    pub tol_event: f64,
    /// Store one sample every `sample_every` steps.
    pub sample_every: usize,
    /// Split steps at sign changes of the switching function.
    pub event_splitting: bool,
    /// Forcing period, if any, carried into the trajectory for period-aware statistics.
    pub forcing_period: Option<f64>,
}

impl IntegratorOptions {
    /// Defaults tied to a forcing frequency: 200 steps and 20 samples per period.
    pub fn for_forcing(omega: f64, t_end: f64) -> Self {
        let period = 2.0 * PI / omega;
        Self {
            dt: period / DEFAULT_STEPS_PER_PERIOD as f64,
            t_end,
            tol_event: DEFAULT_EVENT_TOLERANCE,
            sample_every: DEFAULT_STEPS_PER_PERIOD / DEFAULT_SAMPLES_PER_PERIOD,
            event_splitting: true,
            forcing_period: Some(period),
        }
    }

    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            tol_event: DEFAULT_EVENT_TOLERANCE,
            sample_every: 1,
            event_splitting: true,
            forcing_period: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, value| Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and strictly positive",
        };
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(bad("dt", self.dt));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(bad("t_end", self.t_end));
        }
        if !(self.tol_event > 0.0) {
            return Err(bad("tol_event", self.tol_event));
        }
        if self.sample_every == 0 {
            return Err(bad("sample_every", 0.0));
        }
        Ok(())
    }

    /// Number of steps and the step actually used.
    pub fn step_plan(&self) -> (usize, f64) {
        let n = (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize;
        (n, self.t_end / n as f64)
    }
}

/// Time-sampled solution with a constant sample interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<const N: usize> {
    pub times: Vec<f64>,
    #[serde(with = "state_vec")]
    pub states: Vec<[f64; N]>,
    pub sample_interval: f64,
    pub forcing_period: Option<f64>,
    /// State at the end of the horizon, which need not fall on a sample.
    #[serde(with = "state_arr")]
    pub final_state: [f64; N],
    pub final_time: f64,
}

mod state_vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, const N: usize>(
        v: &[[f64; N]],
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = v.iter().map(|r| r.to_vec()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const N: usize>(
        d: D,
    ) -> Result<Vec<[f64; N]>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        rows.into_iter()
            .map(|r| {
                r.try_into()
                    .map_err(|_| serde::de::Error::custom("state row has wrong length"))
            })
            .collect()
    }
}

mod state_arr {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, const N: usize>(v: &[f64; N], s: S) -> Result<S::Ok, S::Error> {
        v.to_vec().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const N: usize>(
        d: D,
    ) -> Result<[f64; N], D::Error> {
        let row: Vec<f64> = Vec::deserialize(d)?;
        row.try_into()
            .map_err(|_| serde::de::Error::custom("state row has wrong length"))
    }
}

impl<const N: usize> Trajectory<N> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn component(&self, index: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[index]).collect()
    }

    pub fn span(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, k: &[f64; N]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += h * k[i];
    }
    out
}

/// One classical RK4 step. With `frozen = Some(side)` every stage uses that
/// side; with `None` each stage picks its side from its own state.
pub fn rk4_step<S, const N: usize>(
    system: &S,
    t: f64,
    y: &[f64; N],
    h: f64,
    frozen: Option<Side>,
) -> [f64; N]
where
    S: OdeSystem<N> + ?Sized,
{
    let side = |y: &[f64; N]| match frozen {
        Some(s) => s,
        None => system
            .switching_function(y)
            .map(Side::of)
            .unwrap_or(Side::Positive),
    };
    let k1 = system.derivative(t, y, side(y));
    let y2 = axpy(y, 0.5 * h, &k1);
    let k2 = system.derivative(t + 0.5 * h, &y2, side(&y2));
    let y3 = axpy(y, 0.5 * h, &k2);
    let k3 = system.derivative(t + 0.5 * h, &y3, side(&y3));
    let y4 = axpy(y, h, &k3);
    let k4 = system.derivative(t + h, &y4, side(&y4));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn side_of<S, const N: usize>(system: &S, y: &[f64; N]) -> Option<Side>
where
    S: OdeSystem<N> + ?Sized,
{
    system.switching_function(y).map(Side::of)
}

/// Advances one grid step of length `h`, splitting at every switching event.
fn event_step<S, const N: usize>(system: &S, t: f64, y: &[f64; N], h: f64, tol: f64) -> [f64; N]
where
    S: OdeSystem<N> + ?Sized,
{
    let Some(mut side) = side_of(system, y) else {
        return rk4_step(system, t, y, h, Some(Side::Positive));
    };
    let mut state = *y;
    let mut time = t;
    let end = t + h;
    for _ in 0..MAX_EVENTS_PER_STEP {
        let remaining = end - time;
        if remaining <= 0.0 {
            return state;
        }
        let trial = rk4_step(system, time, &state, remaining, Some(side));
        if side_of(system, &trial) == Some(side) {
            return trial;
        }
        // bracket the crossing on the sub-step length; `hi` is always past it
        let (mut lo, mut hi) = (0.0, remaining);
        let mut past = trial;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let probe = rk4_step(system, time, &state, mid, Some(side));
            if side_of(system, &probe) == Some(side) {
                lo = mid;
            } else {
                hi = mid;
                past = probe;
            }
        }
        state = past;
        time += hi;
        side = side_of(system, &state).unwrap_or(side);
    }
    // chattering: finish the step on the current side
    let remaining = end - time;
    if remaining > 0.0 {
        rk4_step(system, time, &state, remaining, Some(side))
    } else {
        state
    }
}

/// Integrates from `(t0, ic)` over `opts.t_end`.
pub fn integrate<S, const N: usize>(
    system: &S,
    t0: f64,
    ic: [f64; N],
    opts: &IntegratorOptions,
) -> Result<Trajectory<N>>
where
    S: OdeSystem<N> + ?Sized,
{
    opts.validate()?;
    if ic.iter().any(|c| !c.is_finite()) {
        return Err(Error::Divergence { last_time: t0 });
    }
    let (n_steps, h) = opts.step_plan();
    let capacity = n_steps / opts.sample_every + 1;
    let mut times = Vec::with_capacity(capacity);
    let mut states = Vec::with_capacity(capacity);
    times.push(t0);
    states.push(ic);

    let mut y = ic;
    for k in 0..n_steps {
        let t = t0 + k as f64 * h;
        let next = if opts.event_splitting {
            event_step(system, t, &y, h, opts.tol_event)
        } else {
            rk4_step(system, t, &y, h, None)
        };
        if next.iter().any(|c| !c.is_finite()) {
            return Err(Error::Divergence { last_time: t });
        }
        y = next;
        if (k + 1) % opts.sample_every == 0 {
            times.push(t0 + (k + 1) as f64 * h);
            states.push(y);
        }
    }
    Ok(Trajectory {
        times,
        states,
        sample_interval: h * opts.sample_every as f64,
        forcing_period: opts.forcing_period,
        final_state: y,
        final_time: t0 + opts.t_end,
    })
}

/// Centered moving average of one state component over `window`.
///
/// The result is aligned with the samples; entries whose window does not fit
/// inside the trajectory are `None`. An even number of sample intervals per
/// window uses the trapezoid rule, an odd number the centered rectangle rule;
/// both are exact for harmonics of the window length.
pub fn running_average<const N: usize>(
    traj: &Trajectory<N>,
    component: usize,
    window: f64,
) -> Result<Vec<Option<f64>>> {
    if !(window > 0.0) {
        return Err(Error::InvalidParameter {
            name: "window",
            value: window,
            reason: "must be strictly positive",
        });
    }
    if window > traj.span() {
        return Err(Error::Domain(format!(
            "averaging window {window} exceeds trajectory span {}",
            traj.span()
        )));
    }
    let values = traj.component(component);
    let n = values.len();
    let intervals = ((window / traj.sample_interval).round() as usize).max(1);
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in &values {
        prefix.push(prefix.last().unwrap() + v);
    }
    let sum = |a: usize, b: usize| prefix[b + 1] - prefix[a];

    let mut out = vec![None; n];
    if intervals % 2 == 0 {
        let half = intervals / 2;
        for i in half..n.saturating_sub(half) {
            let (a, b) = (i - half, i + half);
            let s = sum(a, b) - 0.5 * (values[a] + values[b]);
            out[i] = Some(s / intervals as f64);
        }
    } else {
        let half = (intervals - 1) / 2;
        for i in half..n.saturating_sub(half) {
            out[i] = Some(sum(i - half, i + half) / intervals as f64);
        }
    }
    Ok(out)
}

/// Default fraction of the trajectory discarded as transient.
pub const DEFAULT_DISCARD: f64 = 0.5;

/// Steady-state summary of one component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub mean: f64,
    /// Half the peak-to-trough excursion over the retained tail.
    pub amplitude: f64,
    pub discard: f64,
}

/// Mean and amplitude of one component over the tail left after discarding
/// the leading `discard` fraction. When the trajectory carries a forcing
/// period, the tail is trimmed to a whole number of periods ending at the last
/// sample and the mean uses the trapezoid rule.
pub fn series_stats<const N: usize>(
    traj: &Trajectory<N>,
    component: usize,
    discard: f64,
) -> Result<SeriesStats> {
    if !(0.0..1.0).contains(&discard) {
        return Err(Error::InvalidParameter {
            name: "discard",
            value: discard,
            reason: "must lie in [0, 1)",
        });
    }
    let n = traj.len();
    let mut start = (discard * n as f64).floor() as usize;
    if start + 1 >= n {
        return Err(Error::Domain("steady-state tail is empty".into()));
    }
    let values = traj.component(component);

    let mut trapezoid = false;
    if let Some(period) = traj.forcing_period {
        let per = period / traj.sample_interval;
        let rounded = per.round();
        if rounded >= 1.0 && (per - rounded).abs() < 1e-6 {
            let per = rounded as usize;
            let whole = (n - 1 - start) / per;
            if whole >= 1 {
                start = n - 1 - whole * per;
                trapezoid = true;
            }
        }
    }
    let tail = &values[start..];
    let mean = if trapezoid {
        let m = tail.len() - 1;
        let inner: f64 = tail.iter().sum::<f64>() - 0.5 * (tail[0] + tail[m]);
        inner / m as f64
    } else {
        tail.iter().sum::<f64>() / tail.len() as f64
    };
    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    Ok(SeriesStats {
        mean,
        amplitude: 0.5 * (hi - lo),
        discard,
    })
}

/// Steady-state statistics of the capsule velocity of a full-model trajectory.
pub fn mean_steady_velocity(traj: &Trajectory<4>, discard: f64) -> Result<SeriesStats> {
    series_stats(traj, 1, discard)
}
