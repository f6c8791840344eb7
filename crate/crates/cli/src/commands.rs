//! One function per subcommand. Each reads a parsed scenario, runs the core
//! library and writes its tables, plots and summary into the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Map, Value};

use capsule_core::averaged::{self, AveragedParams, AveragedState};
use capsule_core::integrator::{integrate, running_average, DEFAULT_DISCARD};
use capsule_core::model::FullModel;
use capsule_core::slowflow::{self, BranchId, FixedPoint21, SlowFlowParams, SlowFlowState};
use capsule_core::stability::Stability;
use capsule_core::sweep::{
    self, Axis, CaseSpec, ComparisonReport, EmpiricalProbe, Regime, Verification, WorkerPool,
    OSCILLATORY_HORIZON,
};

use crate::config::{resolve_reduced, ConfigError, Mode, ScenarioConfig, SweepKind};
use crate::svg::{emit_svg, Plot, Raster, Series, Style, PALETTE};
use crate::table::{emit_csv, read_csv, Cell, ResultTable};

pub struct RunContext {
    pub out_dir: PathBuf,
    pub hash: String,
    pub mode: Mode,
    pub workers: usize,
}

impl RunContext {
    pub fn new(cfg: &ScenarioConfig, mode: Mode, out: Option<&Path>, workers: usize) -> Self {
        Self {
            out_dir: out
                .map(Path::to_path_buf)
                .unwrap_or_else(|| PathBuf::from(cfg.output_dir())),
            hash: cfg.hash(),
            mode,
            workers,
        }
    }

    fn provenance(&self) -> Vec<(String, String)> {
        vec![
            ("config_hash".into(), self.hash.clone()),
            ("capsule-core".into(), capsule_core::VERSION.into()),
            ("capsule-cli".into(), env!("CARGO_PKG_VERSION").into()),
            ("mode".into(), self.mode.to_string()),
        ]
    }

    fn table(&self, columns: &[&str]) -> ResultTable {
        ResultTable::new(columns).with_provenance(&self.provenance())
    }

    fn plot(&self, title: &str, x_label: &str, y_label: &str) -> Plot {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            provenance: self.provenance(),
            ..Plot::default()
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn prepare(&self) -> Result<()> {
        fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("cannot create output directory {}", self.out_dir.display()))
    }

    fn write_csv(&self, name: &str, t: &ResultTable, written: &mut Vec<PathBuf>) -> Result<()> {
        let path = self.path(name);
        emit_csv(t, &path)?;
        written.push(path);
        Ok(())
    }

    fn write_svg(&self, name: &str, p: &Plot, written: &mut Vec<PathBuf>) -> Result<()> {
        let path = self.path(name);
        emit_svg(p, &path)?;
        written.push(path);
        Ok(())
    }

    /// Summary with the four headline keys always present (null when the mode
    /// has no such quantity) plus mode-specific extras.
    fn write_summary(
        &self,
        headline: Headline,
        extra: Map<String, Value>,
        written: &mut Vec<PathBuf>,
    ) -> Result<()> {
        let mut m = Map::new();
        m.insert("regime".into(), json!(headline.regime));
        m.insert("mean_velocity".into(), json!(headline.mean_velocity));
        m.insert(
            "predicted_velocity".into(),
            json!(headline.predicted_velocity),
        );
        m.insert("relative_error".into(), json!(headline.relative_error));
        m.insert("config_hash".into(), json!(self.hash));
        m.insert("mode".into(), json!(self.mode.to_string()));
        m.extend(extra);
        let path = self.path("summary.json");
        let text = serde_json::to_string_pretty(&Value::Object(m))? + "\n";
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        written.push(path);
        Ok(())
    }
}

#[derive(Default)]
struct Headline {
    regime: Option<String>,
    mean_velocity: Option<f64>,
    predicted_velocity: Option<f64>,
    relative_error: Option<f64>,
}

fn nan_or(x: Option<f64>) -> Cell {
    Cell::Num(x.unwrap_or(f64::NAN))
}

fn branch_label(b: BranchId) -> &'static str {
    match b {
        BranchId::Phi0 => "phi0",
        BranchId::Phi1 => "phi1",
        BranchId::Phi2 => "phi2",
    }
}

pub fn run(cfg: &ScenarioConfig, ctx: &RunContext) -> Result<Vec<PathBuf>> {
    cfg.check_mode(ctx.mode)?;
    ctx.prepare()?;
    let mut written = Vec::new();
    match ctx.mode {
        Mode::Simulate => simulate(cfg, ctx, false, &mut written)?,
        Mode::Compare => simulate(cfg, ctx, true, &mut written)?,
        Mode::Slowflow => slowflow_run(cfg, ctx, &mut written)?,
        Mode::Averaged => averaged_run(cfg, ctx, &mut written)?,
        Mode::FixedPoints => fixed_points(cfg, ctx, &mut written)?,
        Mode::Sweep => sweep_run(cfg, ctx, &mut written)?,
        Mode::Plot => {
            return Err(ConfigError::Invalid("plot takes a CSV, not a scenario".into()).into())
        }
    }
    Ok(written)
}

fn simulate(
    cfg: &ScenarioConfig,
    ctx: &RunContext,
    compare: bool,
    written: &mut Vec<PathBuf>,
) -> Result<()> {
    let params = cfg.require_nondim()?;
    let initial = cfg.initial_state()?;
    let opts = cfg.integrator_options(params.omega, OSCILLATORY_HORIZON);
    let model = FullModel::new(params)?;
    let traj = integrate(&model, 0.0, initial.to_array(), &opts)?;

    let stats = sweep::tail_stats(&traj, DEFAULT_DISCARD)?;
    let regime = sweep::classify_regime(&stats, params.omega);
    let spec = CaseSpec {
        id: cfg.case_id(),
        params,
        initial,
        horizon: opts.t_end,
        reduced: resolve_reduced(cfg.reduced_choice(), regime == Regime::Rotatory),
    };
    let report = sweep::report_from_trajectory(&spec, &traj)?;
    let avg = running_average(&traj, 1, params.forcing_period())?;

    let mut plot = ctx.plot(&format!("{}: capsule velocity", spec.id), "t", "v");
    plot.series.push(Series::new(
        "v",
        traj.times
            .iter()
            .zip(&traj.states)
            .map(|(&t, s)| (t, s[1]))
            .collect(),
        Style::Line,
        PALETTE[0],
    ));
    plot.series.push(Series::new(
        "running average",
        traj.times
            .iter()
            .zip(&avg)
            .map(|(&t, a)| (t, a.unwrap_or(f64::NAN)))
            .collect(),
        Style::Line,
        PALETTE[5],
    ));

    if compare {
        let predicted = report.predicted_velocity();
        let mut t = ctx.table(&["t", "v", "v_running_avg", "v_predicted"]);
        for ((&time, s), a) in traj.times.iter().zip(&traj.states).zip(&avg) {
            t.push(vec![
                time.into(),
                s[1].into(),
                nan_or(*a),
                nan_or(predicted),
            ]);
        }
        ctx.write_csv("comparison.csv", &t, written)?;
        if let Some(pv) = predicted {
            plot.series.push(Series::new(
                "reduced model",
                vec![(0.0, pv), (opts.t_end, pv)],
                Style::Dashed,
                PALETTE[1],
            ));
        }
        ctx.write_svg("comparison.svg", &plot, written)?;
    } else {
        let mut t = ctx.table(&["t", "x", "v", "theta", "theta_dot", "v_running_avg"]);
        for ((&time, s), a) in traj.times.iter().zip(&traj.states).zip(&avg) {
            t.push(vec![
                time.into(),
                s[0].into(),
                s[1].into(),
                s[2].into(),
                s[3].into(),
                nan_or(*a),
            ]);
        }
        ctx.write_csv("trajectory.csv", &t, written)?;
        ctx.write_svg("trajectory.svg", &plot, written)?;
    }

    ctx.write_summary(headline_of(&report), report_extras(&report, &spec), written)
}

fn headline_of(r: &ComparisonReport) -> Headline {
    Headline {
        regime: Some(r.regime.label().into()),
        mean_velocity: Some(r.mean_velocity),
        predicted_velocity: r.predicted_velocity(),
        relative_error: r.relative_error,
    }
}

fn report_extras(r: &ComparisonReport, spec: &CaseSpec) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("case".into(), json!(r.id));
    m.insert("absolute_error".into(), json!(r.absolute_error));
    m.insert("velocity_amplitude".into(), json!(r.velocity_amplitude));
    m.insert("theta_amplitude".into(), json!(r.theta_amplitude));
    m.insert("mean_theta_rate".into(), json!(r.mean_theta_rate));
    m.insert("rotations".into(), json!(r.rotations));
    m.insert("converged".into(), json!(r.converged));
    m.insert("reduced_model".into(), json!(spec.reduced));
    m.insert("horizon".into(), json!(spec.horizon));
    if let Some(p) = &r.prediction {
        m.insert("branch".into(), json!(p.branch.map(branch_label)));
        m.insert("locked".into(), json!(p.locked));
    }
    m
}

fn slowflow_run(cfg: &ScenarioConfig, ctx: &RunContext, written: &mut Vec<PathBuf>) -> Result<()> {
    let p = cfg.slowflow_params()?;
    let ic = cfg.slowflow_initial(p.epsilon)?;
    let traj = slowflow::integrate_slowflow(ic, &p, &cfg.slowflow_options())?;
    let env = slowflow::reconstruct_envelopes(&traj, p.epsilon);

    let mut t = ctx.table(&[
        "t1",
        "phi_re",
        "phi_im",
        "amplitude",
        "D",
        "t",
        "theta_amplitude",
        "v_upper",
        "v_lower",
        "v_mean",
    ]);
    for ((&t1, s), e) in traj.times.iter().zip(&traj.states).zip(&env) {
        let amp = SlowFlowState::from_array(*s).amplitude();
        t.push(vec![
            t1.into(),
            s[0].into(),
            s[1].into(),
            amp.into(),
            s[2].into(),
            e.time.into(),
            e.theta_amplitude.into(),
            e.velocity_upper.into(),
            e.velocity_lower.into(),
            e.velocity_mean.into(),
        ]);
    }
    ctx.write_csv("slowflow.csv", &t, written)?;

    let mut plot = ctx.plot("slow flow", "t1", "|phi|, D");
    let col = |k: usize| -> Vec<(f64, f64)> {
        traj.times
            .iter()
            .zip(&traj.states)
            .map(|(&t, s)| (t, s[k]))
            .collect()
    };
    plot.series.push(Series::new(
        "|phi|",
        traj.times
            .iter()
            .zip(&traj.states)
            .map(|(&t, s)| (t, SlowFlowState::from_array(*s).amplitude()))
            .collect(),
        Style::Line,
        PALETTE[0],
    ));
    plot.series
        .push(Series::new("D", col(2), Style::Line, PALETTE[1]));
    ctx.write_svg("slowflow.svg", &plot, written)?;

    let last = SlowFlowState::from_array(traj.final_state);
    let fps = slowflow::fixed_points(&p)?;
    let nearest = fps.iter().min_by(|a, b| {
        let d = |f: &FixedPoint21| (f.amplitude - last.amplitude()).hypot(f.drift - last.drift);
        d(a).total_cmp(&d(b))
    });
    let regime = if last.amplitude() < 1e-6 {
        Regime::Trivial
    } else {
        Regime::Progressive
    };
    let mut extra = Map::new();
    extra.insert("final_amplitude".into(), json!(last.amplitude()));
    extra.insert("final_drift".into(), json!(last.drift));
    extra.insert(
        "nearest_branch".into(),
        json!(nearest.map(|f| branch_label(f.branch))),
    );
    extra.insert(
        "region".into(),
        json!(slowflow::classify_region(p.p, p.sigma, p.xi).label()),
    );
    extra.insert("params".into(), json!(p));
    let head = Headline {
        regime: Some(regime.label().into()),
        mean_velocity: Some(slowflow::mean_velocity(last.drift, p.epsilon)),
        predicted_velocity: nearest.map(|f| slowflow::mean_velocity(f.drift, p.epsilon)),
        relative_error: None,
    };
    ctx.write_summary(head, extra, written)
}

fn averaged_run(cfg: &ScenarioConfig, ctx: &RunContext, written: &mut Vec<PathBuf>) -> Result<()> {
    let p = cfg.averaged_params()?;
    let release = cfg.initial_state()?;
    let ic = averaged::map_initial_conditions(release.theta, release.theta_dot, &p)?;
    let traj = averaged::integrate_averaged(ic, &p, &cfg.averaged_options())?;

    let mut t = ctx.table(&["t", "phase", "phase_rate", "D", "B"]);
    for (&time, s) in traj.times.iter().zip(&traj.states) {
        let b = averaged::osc_amplitude(&AveragedState::from_array(*s), &p);
        t.push(vec![
            time.into(),
            s[0].into(),
            s[1].into(),
            s[2].into(),
            b.into(),
        ]);
    }
    ctx.write_csv("averaged.csv", &t, written)?;

    let mut plot = ctx.plot("averaged flow: drift", "t", "D");
    plot.series.push(Series::new(
        "D",
        traj.times
            .iter()
            .zip(&traj.states)
            .map(|(&t, s)| (t, s[2]))
            .collect(),
        Style::Line,
        PALETTE[0],
    ));
    let locked = averaged::has_phase_locking(&p);
    let d_ss = if locked {
        Some(averaged::stationary_drift(&p)?)
    } else {
        None
    };
    if let Some(d) = d_ss {
        plot.series.push(Series::new(
            "stationary drift",
            vec![(0.0, d), (*traj.times.last().unwrap_or(&0.0), d)],
            Style::Dashed,
            PALETTE[1],
        ));
    }
    ctx.write_svg("averaged.svg", &plot, written)?;

    let rate = capsule_core::integrator::series_stats(&traj, 1, DEFAULT_DISCARD)?;
    let captured = rate.mean.abs() < sweep::ROTATION_BAND * p.omega;
    let final_drift = traj.final_state[2];
    let mut extra = Map::new();
    extra.insert("eta".into(), json!(p.eta()));
    extra.insert("locked".into(), json!(captured));
    extra.insert("fixed_points".into(), fixed_points_11_json(&p)?);
    extra.insert("final_state".into(), json!(traj.final_state));
    extra.insert("params".into(), json!(p));
    let head = Headline {
        regime: Some(if captured { "rotatory" } else { "unlocked" }.into()),
        mean_velocity: Some(final_drift),
        predicted_velocity: d_ss,
        relative_error: d_ss
            .filter(|d| captured && *d != 0.0)
            .map(|d| (final_drift - d).abs() / d.abs()),
    };
    ctx.write_summary(head, extra, written)
}

fn fixed_points_11_json(p: &AveragedParams) -> Result<Value> {
    let fps = averaged::fixed_points(p)?;
    Ok(Value::Array(
        fps.iter()
            .map(|f| {
                json!({
                    "family": f.family,
                    "phase": f.phase,
                    "drift": f.drift,
                    "B": f.amplitude_b,
                    "stability": f.stability.label(),
                })
            })
            .collect(),
    ))
}

fn fixed_points(cfg: &ScenarioConfig, ctx: &RunContext, written: &mut Vec<PathBuf>) -> Result<()> {
    let p = cfg.slowflow_params()?;
    let fps = slowflow::fixed_points(&p)?;
    let mut t = ctx.table(&[
        "branch",
        "amplitude",
        "phase",
        "D",
        "stability",
        "eig1_re",
        "eig1_im",
        "eig2_re",
        "eig2_im",
        "drift_eigenvalue",
        "residual",
        "mean_velocity",
    ]);
    for f in &fps {
        t.push(vec![
            branch_label(f.branch).into(),
            f.amplitude.into(),
            f.phase.into(),
            f.drift.into(),
            f.stability.label().into(),
            f.eigenvalues[0].re.into(),
            f.eigenvalues[0].im.into(),
            f.eigenvalues[1].re.into(),
            f.eigenvalues[1].im.into(),
            f.drift_eigenvalue.into(),
            slowflow::fixed_point_residual(&f.state(), &p).into(),
            slowflow::mean_velocity(f.drift, p.epsilon).into(),
        ]);
    }
    ctx.write_csv("fixed_points.csv", &t, written)?;

    let sigma_b = slowflow::bifurcation_sigmas(p.p, p.xi);
    let mut extra = Map::new();
    extra.insert("sigma_B1".into(), json!(sigma_b.map(|s| s.0)));
    extra.insert("sigma_B2".into(), json!(sigma_b.map(|s| s.1)));
    extra.insert(
        "region".into(),
        json!(slowflow::classify_region(p.p, p.sigma, p.xi).label()),
    );
    extra.insert(
        "branches".into(),
        Value::Array(
            fps.iter()
                .map(|f| {
                    json!({
                        "branch": branch_label(f.branch),
                        "amplitude": f.amplitude,
                        "D": f.drift,
                        "stability": f.stability.label(),
                    })
                })
                .collect(),
        ),
    );
    extra.insert("params".into(), json!(p));
    if cfg.averaged.is_some() {
        let ap = cfg.averaged_params()?;
        let mut t = ctx.table(&["family", "phase", "D", "B", "stability"]);
        for f in averaged::fixed_points(&ap)? {
            t.push(vec![
                (f.family as f64).into(),
                f.phase.into(),
                f.drift.into(),
                f.amplitude_b.into(),
                f.stability.label().into(),
            ]);
        }
        ctx.write_csv("rotatory_fixed_points.csv", &t, written)?;
        extra.insert("eta".into(), json!(ap.eta()));
        extra.insert("rotatory_fixed_points".into(), fixed_points_11_json(&ap)?);
    }
    let best = fps
        .iter()
        .filter(|f| f.stability.is_stable())
        .max_by(|a, b| a.amplitude.total_cmp(&b.amplitude));
    let head = Headline {
        predicted_velocity: best.map(|f| slowflow::mean_velocity(f.drift, p.epsilon)),
        ..Headline::default()
    };
    ctx.write_summary(head, extra, written)
}

fn axis(
    name: &str,
    min: Option<f64>,
    max: Option<f64>,
    count: Option<usize>,
    d: (f64, f64, usize),
) -> Result<Axis> {
    Ok(Axis::new(
        name,
        min.unwrap_or(d.0),
        max.unwrap_or(d.1),
        count.unwrap_or(d.2),
    )?)
}

/// Slow-flow base for sweeps: the swept keys need no value of their own.
fn sweep_base(cfg: &ScenarioConfig, p0: f64, sigma0: f64) -> Result<SlowFlowParams> {
    let mut c = cfg.clone();
    let mut sf = c.slowflow.unwrap_or_default();
    if c.nondim.is_none() && c.physical.is_none() {
        sf.P.get_or_insert(p0);
        sf.sigma.get_or_insert(sigma0);
    }
    c.slowflow = Some(sf);
    c.slowflow_params()
}

fn stability_style(s: Stability) -> Style {
    if s.is_stable() {
        Style::Line
    } else {
        Style::Dashed
    }
}

/// Splits `(x, y, stability)` samples into solid stable and dashed unstable
/// runs. Neighbouring runs share their joining sample so curves stay connected.
fn stability_runs(
    points: &[(f64, f64, Stability)],
    color: &str,
    named: &mut [bool; 2],
) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    let mut current: Option<(bool, Vec<(f64, f64)>)> = None;
    let mut flush = |run: Option<(bool, Vec<(f64, f64)>)>, out: &mut Vec<Series>| {
        if let Some((stable, pts)) = run {
            let slot = usize::from(!stable);
            let name = if named[slot] {
                ""
            } else {
                named[slot] = true;
                if stable {
                    "stable"
                } else {
                    "unstable"
                }
            };
            let style = stability_style(if stable {
                Stability::Stable
            } else {
                Stability::Saddle
            });
            out.push(Series::new(name, pts, style, color));
        }
    };
    for &(x, y, s) in points {
        if !(x.is_finite() && y.is_finite()) {
            flush(current.take(), &mut out);
            continue;
        }
        let stable = s.is_stable();
        match &mut current {
            Some((st, pts)) if *st == stable => pts.push((x, y)),
            Some((_, pts)) => {
                let joint = *pts.last().unwrap();
                flush(current.take(), &mut out);
                current = Some((stable, vec![joint, (x, y)]));
            }
            None => current = Some((stable, vec![(x, y)])),
        }
    }
    flush(current.take(), &mut out);
    out
}

fn sweep_run(cfg: &ScenarioConfig, ctx: &RunContext, written: &mut Vec<PathBuf>) -> Result<()> {
    let s = cfg.sweep()?.clone();
    let pool = WorkerPool::new(ctx.workers)?;
    let mut extra = Map::new();
    extra.insert("kind".into(), json!(s.kind));
    extra.insert("workers".into(), json!(pool.workers()));
    let mut head = Headline::default();
    match s.kind {
        SweepKind::Bifurcation => {
            let base = sweep_base(cfg, 8.0, 0.0)?;
            let sigma = axis(
                "sigma",
                s.sigma_min,
                s.sigma_max,
                s.sigma_count,
                (-8.0, 8.0, 161),
            )?;
            let verification = s.verify_sigmas.clone().map(|sigmas| Verification {
                sigmas,
                epsilon: s.verify_epsilon.unwrap_or(base.epsilon),
                theta0: s.theta0.unwrap_or(crate::config::DEFAULT_VERIFY_THETA0),
                slow_horizon: s
                    .slow_horizon
                    .unwrap_or(crate::config::DEFAULT_SLOW_HORIZON),
            });
            let diagram = sweep::bifurcation_sweep_21(&base, &sigma, verification.as_ref(), &pool)?;

            let mut t = ctx.table(&[
                "sigma",
                "region",
                "amp_phi0",
                "D_phi0",
                "stability_phi0",
                "amp_phi1",
                "D_phi1",
                "stability_phi1",
                "amp_phi2",
                "D_phi2",
                "stability_phi2",
            ]);
            for row in &diagram.grid.points {
                let mut cells: Vec<Cell> = vec![row.sigma.into(), row.region.label().into()];
                for b in &row.branches {
                    match b {
                        Some(bp) => cells.extend([
                            bp.amplitude.into(),
                            bp.drift.into(),
                            bp.stability.label().into(),
                        ]),
                        None => cells.extend([f64::NAN.into(), f64::NAN.into(), "".into()]),
                    }
                }
                t.push(cells);
            }
            ctx.write_csv("bifurcation.csv", &t, written)?;

            let mut v = ctx.table(&["sigma", "epsilon", "regime", "D", "amplitude"]);
            for vp in &diagram.verification {
                v.push(vec![
                    vp.sigma.into(),
                    vp.epsilon.into(),
                    vp.regime.label().into(),
                    vp.drift.into(),
                    vp.amplitude.into(),
                ]);
            }
            ctx.write_csv("verification.csv", &v, written)?;

            let mut plot = ctx.plot("branch amplitudes", "sigma", "|phi|");
            let mut named = [false; 2];
            for k in 0..3 {
                let pts: Vec<(f64, f64, Stability)> = diagram
                    .grid
                    .points
                    .iter()
                    .map(|r| match r.branches[k] {
                        Some(b) => (r.sigma, b.amplitude, b.stability),
                        None => (f64::NAN, f64::NAN, Stability::Saddle),
                    })
                    .collect();
                plot.series
                    .extend(stability_runs(&pts, PALETTE[5], &mut named));
            }
            if !diagram.verification.is_empty() {
                plot.series.push(Series::new(
                    "full model",
                    diagram
                        .verification
                        .iter()
                        .map(|v| (v.sigma, v.amplitude))
                        .collect(),
                    Style::Scatter,
                    PALETTE[1],
                ));
            }
            ctx.write_svg("bifurcation.svg", &plot, written)?;
            extra.insert("sigma_B1".into(), json!(diagram.sigma_b.map(|b| b.0)));
            extra.insert("sigma_B2".into(), json!(diagram.sigma_b.map(|b| b.1)));
            extra.insert("rows".into(), json!(diagram.grid.points.len()));
            extra.insert("params".into(), json!(base));
        }
        SweepKind::Region => {
            let base = sweep_base(cfg, 8.0, 0.0)?;
            let p_axis = axis("P", s.P_min, s.P_max, s.P_count, (0.5, 10.0, 20))?;
            let sigma = axis(
                "sigma",
                s.sigma_min,
                s.sigma_max,
                s.sigma_count,
                (-8.0, 8.0, 20),
            )?;
            let probe = s.empirical.unwrap_or(false).then(|| {
                let d = EmpiricalProbe::default();
                EmpiricalProbe {
                    epsilon: s.probe_epsilon.unwrap_or(d.epsilon),
                    horizon: s.probe_horizon.unwrap_or(d.horizon),
                }
            });
            let grid = sweep::region_map(&base, &p_axis, &sigma, probe.as_ref(), &pool)?;

            let mut t = ctx.table(&[
                "P",
                "sigma",
                "region",
                "region_code",
                "empirical",
                "boundary_distance",
            ]);
            let mut counts = [0usize; 3];
            let mut agree = 0usize;
            for pt in &grid.points {
                counts[pt.region.code() as usize - 1] += 1;
                if pt.empirical == Some(pt.region) {
                    agree += 1;
                }
                t.push(vec![
                    pt.p.into(),
                    pt.sigma.into(),
                    pt.region.label().into(),
                    f64::from(pt.region.code()).into(),
                    pt.empirical.map(|r| r.label()).unwrap_or("").into(),
                    pt.boundary_distance.into(),
                ]);
            }
            ctx.write_csv("region_map.csv", &t, written)?;

            let mut plot = ctx.plot("regions", "P", "sigma");
            plot.raster = Some(Raster {
                xs: p_axis.values(),
                ys: sigma.values(),
                cells: grid
                    .points
                    .iter()
                    .map(|pt| pt.region.code() as usize - 1)
                    .collect(),
                classes: vec![
                    ("I".into(), "#dddddd".into()),
                    ("II".into(), "#9ecae1".into()),
                    ("III".into(), "#fdae6b".into()),
                ],
            });
            let ps: Vec<f64> = (0..=400)
                .map(|k| p_axis.min + (p_axis.max - p_axis.min) * k as f64 / 400.0)
                .filter(|&pp| pp >= 2.0 * base.xi)
                .collect();
            for (name, sign) in [("sigma_B1", 1.0), ("sigma_B2", -1.0)] {
                plot.series.push(Series::new(
                    name,
                    ps.iter()
                        .filter_map(|&pp| {
                            slowflow::bifurcation_sigmas(pp, base.xi)
                                .map(|b| (pp, if sign > 0.0 { b.0 } else { b.1 }))
                        })
                        .collect(),
                    if sign > 0.0 {
                        Style::Line
                    } else {
                        Style::Dashed
                    },
                    PALETTE[5],
                ));
            }
            ctx.write_svg("region_map.svg", &plot, written)?;
            extra.insert(
                "counts".into(),
                json!({"I": counts[0], "II": counts[1], "III": counts[2]}),
            );
            if probe.is_some() {
                extra.insert(
                    "empirical_agreement".into(),
                    json!(agree as f64 / grid.points.len().max(1) as f64),
                );
            }
            extra.insert("params".into(), json!(base));
        }
        SweepKind::Rotatory => {
            let base = {
                let mut c = cfg.clone();
                let mut a = c.averaged.unwrap_or_default();
                if a.omega.is_none() && c.nondim.is_none() && c.physical.is_none() {
                    a.eta.get_or_insert(1.0);
                }
                c.averaged = Some(a);
                c.averaged_params()?
            };
            let eta = axis("eta", s.eta_min, s.eta_max, s.eta_count, (0.5, 3.0, 26))?;
            let grid = sweep::rotatory_sweep_11(&base, &eta, &pool)?;
            let mut t = ctx.table(&[
                "eta",
                "omega",
                "locked",
                "phase_n0",
                "stability_n0",
                "phase_n1",
                "stability_n1",
                "D",
            ]);
            let mut curves: [Vec<(f64, f64, Stability)>; 2] = [Vec::new(), Vec::new()];
            for pt in &grid.points {
                let fam = |n: i64| pt.families.iter().find(|f| f.family == n);
                let mut cells: Vec<Cell> = vec![
                    pt.eta.into(),
                    pt.omega.into(),
                    (if pt.families.is_empty() { "no" } else { "yes" }).into(),
                ];
                for (n, curve) in curves.iter_mut().enumerate() {
                    match fam(n as i64) {
                        Some(f) => {
                            cells.extend([f.phase.into(), f.stability.label().into()]);
                            curve.push((pt.eta, f.phase, f.stability));
                        }
                        None => {
                            cells.extend([f64::NAN.into(), "".into()]);
                            curve.push((f64::NAN, f64::NAN, Stability::Saddle));
                        }
                    }
                }
                cells.push(nan_or(pt.drift));
                t.push(cells);
            }
            ctx.write_csv("rotatory.csv", &t, written)?;
            let mut plot = ctx.plot("phase-locked states", "eta", "phase");
            let mut named = [false; 2];
            for curve in &curves {
                plot.series
                    .extend(stability_runs(curve, PALETTE[5], &mut named));
            }
            if plot.series.is_empty() {
                plot.series.push(Series::new(
                    "no locking",
                    Vec::new(),
                    Style::Line,
                    PALETTE[5],
                ));
            }
            ctx.write_svg("rotatory.svg", &plot, written)?;
            extra.insert("params".into(), json!(base));
        }
        SweepKind::Scaling => {
            let base = sweep_base(cfg, 8.0, 0.0)?;
            let epsilons = s
                .epsilons
                .clone()
                .unwrap_or_else(|| vec![0.04, 0.02, 0.01, 0.005]);
            let report = sweep::error_scaling(
                &base,
                &epsilons,
                s.theta0.unwrap_or(crate::config::DEFAULT_VERIFY_THETA0),
                s.slow_horizon
                    .unwrap_or(crate::config::DEFAULT_SLOW_HORIZON),
                &pool,
            )?;
            let mut t = ctx.table(&[
                "epsilon",
                "mean_velocity",
                "predicted_velocity",
                "absolute_error",
                "relative_error",
                "regime",
                "converged",
            ]);
            for sp in &report.points {
                t.push(vec![
                    sp.epsilon.into(),
                    sp.mean_velocity.into(),
                    sp.predicted_velocity.into(),
                    sp.absolute_error.into(),
                    sp.relative_error.into(),
                    sp.regime.label().into(),
                    (if sp.converged { "yes" } else { "no" }).into(),
                ]);
            }
            ctx.write_csv("scaling.csv", &t, written)?;
            let mut plot = ctx.plot(
                "relative error against epsilon",
                "log10 epsilon",
                "log10 relative error",
            );
            plot.series.push(Series::new(
                "full vs slow flow",
                report
                    .points
                    .iter()
                    .map(|sp| (sp.epsilon.log10(), sp.relative_error.log10()))
                    .collect(),
                Style::Line,
                PALETTE[0],
            ));
            ctx.write_svg("scaling.svg", &plot, written)?;
            extra.insert("slope".into(), json!(report.slope));
            extra.insert("ratio".into(), json!(report.ratio));
            extra.insert("params".into(), json!(base));
            if let Some(last) = report.points.last() {
                head = Headline {
                    regime: Some(last.regime.label().into()),
                    mean_velocity: Some(last.mean_velocity),
                    predicted_velocity: Some(last.predicted_velocity),
                    relative_error: Some(last.relative_error),
                };
            }
        }
    }
    ctx.write_summary(head, extra, written)
}

/// Options for re-plotting a CSV produced by any mode.
pub struct PlotRequest {
    pub input: PathBuf,
    pub x: String,
    pub y: Vec<String>,
    pub scatter: bool,
    pub title: Option<String>,
    pub out_dir: Option<PathBuf>,
}

pub fn plot_csv(req: &PlotRequest) -> Result<PathBuf> {
    let table = read_csv(&req.input)?;
    let xs = table.column(&req.x).ok_or_else(|| {
        ConfigError::Invalid(format!("no column `{}` in {}", req.x, req.input.display()))
    })?;
    let mut plot = Plot {
        title: req.title.clone().unwrap_or_default(),
        x_label: req.x.clone(),
        y_label: req.y.join(", "),
        provenance: table
            .provenance
            .iter()
            .filter(|(k, _)| k == "config_hash")
            .cloned()
            .collect(),
        ..Plot::default()
    };
    for (k, name) in req.y.iter().enumerate() {
        let ys = table.column(name).ok_or_else(|| {
            ConfigError::Invalid(format!("no column `{name}` in {}", req.input.display()))
        })?;
        plot.series.push(Series::new(
            name,
            xs.iter().copied().zip(ys).collect(),
            if req.scatter {
                Style::Scatter
            } else {
                Style::Line
            },
            PALETTE[k % PALETTE.len()],
        ));
    }
    let dir = match &req.out_dir {
        Some(d) => d.clone(),
        None => req
            .input
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default(),
    };
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let stem = req
        .input
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("plot");
    let path = dir.join(format!("{stem}.svg"));
    emit_svg(&plot, &path)?;
    Ok(path)
}
