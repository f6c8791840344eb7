//! Acceptance suite: one pass/fail line per criterion, non-zero exit on any failure.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use capsule_core::averaged::{self, angular_distance, AveragedParams, AveragedState};
use capsule_core::integrator::{integrate, IntegratorOptions, Trajectory};
use capsule_core::model::{FullModel, FullState, NondimParams};
use capsule_core::slowflow::{self, SlowFlowParams, SlowFlowState};
use capsule_core::sweep::{self, CaseSpec, Regime, WorkerPool};

use common::{case2_params, d0_oracle, d1_oracle, rotatory_params, WithDampingWork};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn fig4_params(epsilon: f64) -> SlowFlowParams {
    SlowFlowParams {
        p: 8.0,
        xi: 1.0,
        sigma: 0.0,
        mu_forward: 1.0,
        mu_backward: 2.0,
        epsilon,
    }
}

fn rotatory_averaged() -> AveragedParams {
    averaged::to_averaged_params(&rotatory_params()).unwrap()
}

fn case_regimes() -> Outcome {
    let expected = [
        Regime::Trivial,
        Regime::Progressive,
        Regime::Progressive,
        Regime::Trivial,
    ];
    let cases = [
        CaseSpec::case1(),
        CaseSpec::case2(),
        CaseSpec::case3(),
        CaseSpec::case4(),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (spec, want) in cases.iter().zip(expected) {
        let t = Instant::now();
        let r = sweep::run_case(spec).unwrap();
        pass &= r.regime == want;
        parts.push(format!(
            "{}={} (v={:.2e}, {:.2}s)",
            spec.id,
            r.regime.label(),
            r.mean_velocity,
            t.elapsed().as_secs_f64()
        ));
    }
    outcome(pass, parts.join(", "))
}

fn region_consistency() -> Outcome {
    use slowflow::Region::*;
    let expected = [I, II, III, III];
    let cases = [
        CaseSpec::case1(),
        CaseSpec::case2(),
        CaseSpec::case3(),
        CaseSpec::case4(),
    ];
    let points = [(1.0, 0.0), (8.0, 0.0), (8.0, -6.0), (8.0, -6.0)];
    let mut pass = true;
    for ((spec, want), (p, sigma)) in cases.iter().zip(expected).zip(points) {
        let sp = slowflow::to_slowflow_params(&spec.params).unwrap();
        pass &= (sp.p - p).abs() < 1e-9
            && (sp.sigma - sigma).abs() < 1e-9
            && (sp.xi - 1.0).abs() < 1e-9;
        pass &= slowflow::classify_region(p, sigma, 1.0) == want;
    }
    let (b1, b2) = slowflow::bifurcation_sigmas(8.0, 1.0).unwrap();
    let half = 0.5 * 60f64.sqrt();
    pass &= (b1 - (1.0 + half)).abs() < 1e-9 && (b2 - (1.0 - half)).abs() < 1e-9;
    pass &= (b1 - 4.8730).abs() < 5e-5 && (b2 + 2.8730).abs() < 5e-5;
    // the trivial point's leading eigenvalue vanishes at both boundaries
    let lead = |s: f64| -0.5 + (64.0 / 16.0 - (1.0 - s).powi(2) / 4.0).sqrt();
    pass &= lead(b1).abs() < 1e-9 && lead(b2).abs() < 1e-9;
    outcome(
        pass,
        format!("regions I, II, III, III; sigma_B1 = {b1:.10}, sigma_B2 = {b2:.10}"),
    )
}

fn slowflow_agreement() -> Outcome {
    let pool = WorkerPool::default();
    let report =
        sweep::error_scaling(&fig4_params(0.01), &[0.01, 0.0025], 0.1, 30.0, &pool).unwrap();
    let e1 = report.points[0].relative_error;
    let e2 = report.points[1].relative_error;
    let ratio = e1 / e2;
    let pass = e1 < 0.15 && e2 < 0.05 && (2.0..=8.0).contains(&ratio);
    outcome(
        pass,
        format!(
            "rel. error {:.2}% at eps=0.01 (< 15%), {:.2}% at eps=0.0025 (< 5%), ratio {:.2} in [2, 8]",
            100.0 * e1,
            100.0 * e2,
            ratio
        ),
    )
}

fn fixed_point_residuals() -> Outcome {
    let base = fig4_params(0.01);
    let (b1, _) = slowflow::bifurcation_sigmas(base.p, base.xi).unwrap();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for k in 0..100 {
        let sigma = -8.0 + (b1 - -8.0) * k as f64 / 100.0;
        let p = base.with_sigma(sigma);
        for b in slowflow::amplitude_branches(&p).iter().filter(|b| b.exists) {
            let drift = slowflow::solve_drift(b.amplitude, p.mu_forward, p.mu_backward).unwrap();
            let phase = if b.amplitude > 0.0 {
                slowflow::fixed_point_phase(b.amplitude, &p)
            } else {
                0.0
            };
            let state = SlowFlowState::new(Complex64::from_polar(b.amplitude, phase), drift);
            let r = slowflow::slowflow_rhs(&state, &p);
            worst = worst
                .max(r.phi.re.abs())
                .max(r.phi.im.abs())
                .max(r.drift.abs());
            checked += 1;
        }
    }
    outcome(
        worst < 1e-10,
        format!("{checked} branch points, max |rhs| component {worst:.2e} (< 1e-10)"),
    )
}

fn fourier_oracle() -> Outcome {
    let (mu1, mu2) = (1.0, 2.0);
    let mut worst_d0: f64 = 0.0;
    let mut worst_d1: f64 = 0.0;
    for i in 0..50 {
        let a = 0.1 + 9.9 * i as f64 / 49.0;
        for j in 0..50 {
            let d = a * (-0.98 + 1.96 * j as f64 / 49.0);
            worst_d0 = worst_d0
                .max((slowflow::fourier_d0(a, d, mu1, mu2) - d0_oracle(a, d, mu1, mu2)).abs());
            worst_d1 = worst_d1.max(d1_oracle(a, d, mu1, mu2).abs());
        }
    }
    outcome(
        worst_d0 < 1e-8 && worst_d1 < 1e-10,
        format!(
            "max |d0 - oracle| {worst_d0:.2e} (< 1e-8), max |d1| {worst_d1:.2e} (< 1e-10) on 50x50"
        ),
    )
}

fn slowflow_radius_at(p: &SlowFlowParams, t1: f64) -> f64 {
    let ic = SlowFlowState::new(Complex64::new(1e-3, 0.0), 0.0);
    let traj = slowflow::integrate_slowflow(ic, p, &IntegratorOptions::new(0.005, t1)).unwrap();
    SlowFlowState::from_array(traj.final_state).amplitude()
}

fn pitchfork_by_simulation() -> Outcome {
    let base = fig4_params(0.01);
    let (b1, _) = slowflow::bifurcation_sigmas(base.p, base.xi).unwrap();
    let above = slowflow_radius_at(&base.with_sigma(b1 + 0.2), 200.0);
    let below_p = base.with_sigma(b1 - 0.2);
    let below = slowflow_radius_at(&below_p, 200.0);
    let target = slowflow::amplitude_branches(&below_p)[1].amplitude;
    let rel = (below - target).abs() / target;
    outcome(
        above < 1e-4 && rel < 0.02,
        format!("|phi(200)| = {above:.2e} above sigma_B1 (< 1e-4); {below:.5} vs |phi1| = {target:.5} below ({:.3}% < 2%)", 100.0 * rel),
    )
}

fn rotatory_case() -> Outcome {
    let r = sweep::run_case(&CaseSpec::rotatory()).unwrap();
    let omega = 2.0;
    let captured = (r.mean_theta_rate - omega).abs() <= 0.1 * omega;
    let p = rotatory_averaged();
    let d_ss = averaged::stationary_drift(&p).unwrap();
    let rel = (r.mean_velocity - d_ss).abs() / d_ss;

    let ic = averaged::map_initial_conditions(2.0, 0.0, &p).unwrap();
    let ic_ok = ic.phase == 2.0 && ic.phase_rate == -2.0;
    let traj =
        averaged::integrate_averaged(ic, &p, &IntegratorOptions::for_forcing(p.omega, 1500.0))
            .unwrap();
    let end = AveragedState::from_array(traj.final_state);
    let miss = angular_distance(end.phase, 5.0 * PI / 6.0);
    outcome(
        captured && rel < 0.2 && ic_ok && miss < 1e-3,
        format!(
            "mean theta' {:.4} (omega 2), mean v {:.4e} vs D_ss {:.4e} ({:.1}% < 20%), averaged phase off 5pi/6 by {miss:.1e} (< 1e-3)",
            r.mean_theta_rate,
            r.mean_velocity,
            d_ss,
            100.0 * rel
        ),
    )
}

fn saddle_node() -> Outcome {
    let base = rotatory_averaged();
    let above = averaged::fixed_points(&base.with_eta(1.01)).unwrap();
    let below = averaged::fixed_points(&base.with_eta(0.99)).unwrap();
    let to_merge = above
        .iter()
        .map(|f| angular_distance(f.phase, PI / 2.0))
        .fold(0.0, f64::max);
    let separation = if above.len() == 2 {
        angular_distance(above[0].phase, above[1].phase)
    } else {
        f64::NAN
    };
    outcome(
        !above.is_empty() && below.is_empty() && to_merge < 0.2,
        format!(
            "{} families at eta=1.01, {} at eta=0.99; max distance to pi/2 {to_merge:.4} rad (< 0.2); family separation {separation:.4} rad",
            above.len(),
            below.len()
        ),
    )
}

fn symmetric_null() -> Outcome {
    let sym = |p: NondimParams| NondimParams {
        mu_backward: p.mu_forward,
        ..p
    };
    let sf = slowflow::to_slowflow_params(&sym(case2_params())).unwrap();
    let drifts_zero = slowflow::fixed_points(&sf)
        .unwrap()
        .iter()
        .all(|f| f.drift == 0.0);
    let av = averaged::to_averaged_params(&sym(rotatory_params())).unwrap();
    let dss_zero = averaged::stationary_drift(&av).unwrap() == 0.0
        && averaged::fixed_points(&av)
            .unwrap()
            .iter()
            .all(|f| f.drift == 0.0);

    let mut case2 = CaseSpec::case2();
    case2.params = sym(case2.params);
    let mut rot = CaseSpec::rotatory();
    rot.params = sym(rot.params);
    let v2 = sweep::run_case(&case2).unwrap().mean_velocity;
    let vr = sweep::run_case(&rot).unwrap().mean_velocity;
    outcome(
        drifts_zero && dss_zero && v2.abs() < 1e-4 && vr.abs() < 1e-4,
        format!("reduced drifts exactly 0: {}; full-model |mean v| {:.1e} (oscillatory), {:.1e} (rotatory), < 1e-4", drifts_zero && dss_zero, v2.abs(), vr.abs()),
    )
}

fn final_error<const N: usize>(
    a: &Trajectory<N>,
    b: &Trajectory<N>,
    component: Option<usize>,
) -> f64 {
    match component {
        Some(i) => (a.final_state[i] - b.final_state[i]).abs(),
        None => a
            .final_state
            .iter()
            .zip(&b.final_state)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max),
    }
}

fn observed_order<const N: usize>(
    run: impl Fn(f64) -> Trajectory<N>,
    dt: f64,
    component: Option<usize>,
) -> f64 {
    let reference = run(dt / 64.0);
    let coarse = final_error(&run(dt), &reference, component);
    let fine = final_error(&run(dt / 2.0), &reference, component);
    (coarse / fine).log2()
}

fn property_suite() -> Outcome {
    let mut checks = Vec::new();

    // RK4 order on a smooth right-hand side
    let smooth = NondimParams {
        mu_backward: 0.01,
        ..rotatory_params()
    };
    let model = FullModel::new(smooth).unwrap();
    let ic = FullState::new(0.0, 0.0, 2.0, 0.0).to_array();
    let run_smooth = |dt: f64| {
        let mut o = IntegratorOptions::new(dt, 10.0);
        o.event_splitting = false;
        integrate(&model, 0.0, ic, &o).unwrap()
    };
    let rk4_order = observed_order(run_smooth, 0.05, None);
    checks.push((
        rk4_order >= 3.5,
        format!("RK4 order {rk4_order:.2} (>= 3.5)"),
    ));

    // damping work across velocity sign changes
    let work = &WithDampingWork(rotatory_params());
    let ic5 = [0.0, 0.0, 2.0, 0.0, 0.0];
    let run_work = |split: bool| {
        move |dt: f64| {
            let mut o = IntegratorOptions::new(dt, 10.0);
            o.event_splitting = split;
            integrate(work, 0.0, ic5, &o).unwrap()
        }
    };
    let split_order = observed_order(run_work(true), 0.04, Some(4));
    let plain_order = observed_order(run_work(false), 0.04, Some(4));
    checks.push((
        split_order >= 3.0,
        format!("damping-work order {split_order:.2} with event splitting (>= 3; {plain_order:.2} without)"),
    ));

    // mirror equivariance
    let sym = FullModel::new(NondimParams {
        mu_backward: 0.01,
        ..case2_params()
    })
    .unwrap();
    let start = FullState::new(0.0, 0.002, 0.3, -0.1);
    let opts = IntegratorOptions::for_forcing(2.0, 200.0);
    let a = integrate(&sym, 0.0, start.to_array(), &opts).unwrap();
    let b = integrate(&sym, 0.0, start.reflected().to_array(), &opts).unwrap();
    let mirror = a
        .states
        .iter()
        .zip(&b.states)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p + q).abs()))
        .fold(0.0, f64::max);
    checks.push((
        mirror < 1e-9,
        format!("mirror defect {mirror:.1e} (< 1e-9)"),
    ));

    // potential gradient
    let p = rotatory_averaged();
    let h = 1e-5;
    let grad = (0..200)
        .map(|k| -10.0 + 20.0 * k as f64 / 199.0)
        .map(|x| {
            let fd = (averaged::potential(x + h, &p).value - averaged::potential(x - h, &p).value)
                / (2.0 * h);
            (fd - averaged::potential(x, &p).slope).abs()
        })
        .fold(0.0, f64::max);
    checks.push((
        grad < 1e-8,
        format!("potential gradient defect {grad:.1e} (< 1e-8)"),
    ));

    // zero-mean oscillatory velocity and the release identity
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mean_worst: f64 = 0.0;
    let mut map_worst: f64 = 0.0;
    for _ in 0..100 {
        let theta0 = rng.gen_range(-PI..PI);
        let rate0 = rng.gen_range(-6.0..6.0);
        let s = averaged::map_initial_conditions(theta0, rate0, &p).unwrap();
        let osc = averaged::osc_component(&s, &p).unwrap();
        map_worst = map_worst.max((s.drift + osc.velocity(0.0, &p)).abs());
        let period = 2.0 * PI / p.omega;
        let n = 64;
        let mean = (0..n)
            .map(|k| osc.velocity(period * k as f64 / n as f64, &p))
            .sum::<f64>()
            / n as f64;
        mean_worst = mean_worst.max(mean.abs());
    }
    checks.push((
        mean_worst < 1e-10,
        format!("mean of u~ {mean_worst:.1e} (< 1e-10)"),
    ));
    checks.push((
        map_worst < 1e-12,
        format!("D(0) + u~(0) {map_worst:.1e} (< 1e-12)"),
    ));

    let pass = checks.iter().all(|c| c.0);
    outcome(
        pass,
        checks
            .into_iter()
            .map(|c| c.1)
            .collect::<Vec<_>>()
            .join("; "),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("case-study regimes", case_regimes),
        ("region consistency", region_consistency),
        ("slow-flow quantitative agreement", slowflow_agreement),
        ("fixed-point residuals", fixed_point_residuals),
        ("Fourier-coefficient oracle", fourier_oracle),
        ("pitchfork detection by simulation", pitchfork_by_simulation),
        ("rotatory case", rotatory_case),
        ("saddle-node at eta = 1", saddle_node),
        ("symmetric-damping null", symmetric_null),
        ("property suite", property_suite),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} [{verdict}] {name}: {} ({:.2}s)",
            i + 1,
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
