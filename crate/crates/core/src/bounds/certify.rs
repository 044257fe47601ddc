//! End-to-end trapping certificate.
//!
//! For parameters in the anomalous regime this module runs the full
//! comparison argument against a live simulation and reports every
//! inequality it checked:
//!
//! 1. evolve step data to a small anchor time `t0` and carve a seed
//!    `q0 <= v(t0, .)` out of the computed v-field;
//! 2. evolve the seed with the certified linear machinery ([`vsub`]) and
//!    locate the wedge where it dominates `e^{b y - delta t}`;
//! 3. build the spliced lower bound for u ([`usub`]), search for the
//!    earliest switch-on time at which *all* of its side conditions hold
//!    (wedge open and straddling the envelope crossing, convex splice,
//!    non-positive residual in both credit regions), and anchor its offset
//!    there;
//! 4. continue the simulation across the certification window, checking the
//!    initial ordering and spot-checking that both lower bounds indeed stay
//!    below the computed fields and the travelling upper bound
//!    ([`supersol`]) stays above;
//! 5. sample the residual upper bound densely over the window (at least
//!    `1e5` points across the four regions).
//!
//! The outcome is a [`Certificate`]: a pass/fail verdict per inequality plus
//! the constants that make the argument quantitative. Everything is checked
//! at stated tolerances on sampled grids — a numerical certificate, not a
//! formal proof.
//!
//! [`vsub`]: super::vsub
//! [`usub`]: super::usub
//! [`supersol`]: super::supersol

use serde::{Deserialize, Serialize};

use crate::bounds::supersol::SuperSolution;
use crate::bounds::usub::{critical_delta, USubSolution};
use crate::bounds::vsub::{SeedProfile, VSubSolution};
use crate::error::{Error, Result};
use crate::front::{solve_front, FrontOptions};
use crate::linear::{classify, require_anomalous_speed, Regime};
use crate::params::Params;
use crate::sim::{FieldState, Simulation};
use crate::speed::{fit_speed, FieldComponent, SpeedRecorder};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CertifyConfig {
    /// Scalar front speed being certified from below (`> 2 sqrt(d alpha)`).
    pub s: f64,
    /// Co-moving frame speed, strictly between `s` and the anomalous speed.
    pub sigma: f64,
    /// Frame speed for the travelling upper bound (above the anomalous
    /// speed).
    pub super_speed: f64,
    /// Lab time at which the frame is anchored and the seed is carved.
    pub t0: f64,
    pub dx: f64,
    /// Seed support in frame coordinates at anchor time.
    pub seed_support: (f64, f64),
    /// Seed height as a fraction of the minimum of v over the support.
    pub seed_height_fraction: f64,
    /// Initial amplitude cap for the spliced u-bound; halved automatically
    /// if the initial ordering needs more headroom.
    pub g_max: f64,
    /// Temporal decay of the coupling credit; defaults to the critical value
    /// that locks the envelope crossing onto the wedge midline.
    pub delta: Option<f64>,
    pub samples_per_region: usize,
    /// Time spacing of residual sampling (shrunk automatically if needed to
    /// reach `min_samples`).
    pub time_stride: f64,
    pub min_samples: usize,
    pub residual_tol: f64,
    pub ordering_tol: f64,
    /// Window for the analytic crossing-slope fit.
    pub slope_window: (f64, f64),
    pub slope_tol: f64,
    /// Give up searching for a switch-on time past this frame time.
    pub switch_horizon: f64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            s: 2.02,
            sigma: 2.1,
            super_speed: 2.3,
            t0: 1.0,
            dx: 0.05,
            seed_support: (1.0, 3.0),
            seed_height_fraction: 0.15,
            g_max: 0.01,
            delta: None,
            samples_per_region: 400,
            time_stride: 1.0,
            min_samples: 100_000,
            residual_tol: 1e-8,
            ordering_tol: 1e-12,
            slope_window: (1e3, 1e4),
            slope_tol: 1e-6,
            switch_horizon: 600.0,
        }
    }
}

/// One verified inequality.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    /// The measured extreme (worst case over all samples).
    pub value: f64,
    /// The bound it was held against.
    pub limit: f64,
    /// Whether `value` is on the required side of `limit`.
    pub pass: bool,
    pub detail: String,
}

fn check_le(name: &str, value: f64, limit: f64, detail: String) -> Check {
    Check {
        name: name.into(),
        value,
        limit,
        pass: value <= limit,
        detail,
    }
}

fn check_ge(name: &str, value: f64, limit: f64, detail: String) -> Check {
    Check {
        name: name.into(),
        value,
        limit,
        pass: value >= limit,
        detail,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub params: Params,
    pub config: CertifyConfig,
    /// Weak u-decay and steep v-decay at the frame speed.
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub dcoef: f64,
    pub bcoef: f64,
    pub c_bound: f64,
    pub seed_height: f64,
    /// Frame time at which the wedge first opens.
    pub t_wedge_open: f64,
    /// Closed-form estimate of the splice-kink threshold.
    pub t_kink_estimate: f64,
    /// Switch-on frame time actually used (start of the certified window).
    pub t_switch: f64,
    /// Amplitude cap after any automatic halving.
    pub g_max_used: f64,
    pub r_offset: f64,
    pub theta_offset: f64,
    pub n_residual_samples: usize,
    /// Observed u-front speed over the certified window (informative).
    pub measured_speed: Option<f64>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl Certificate {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Carve a seed below the computed v-field: a raised cosine on `support`
/// whose height is `fraction` times the minimum of v there. Returns the seed
/// and its pointwise clearance `min (v - q0)`.
pub fn seed_from_state(
    state: &FieldState,
    support: (f64, f64),
    fraction: f64,
) -> Result<(SeedProfile, f64)> {
    let (lo, hi) = support;
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::DataOutOfRange(format!(
            "seed fraction {fraction} must lie in (0, 1)"
        )));
    }
    let mut min_v = f64::INFINITY;
    let fine = 4 * ((hi - lo) / state.dx).ceil() as usize + 1;
    for k in 0..=fine {
        let x = lo + (hi - lo) * k as f64 / fine as f64;
        min_v = min_v.min(state.sample_v(x));
    }
    if !(min_v > 0.0) {
        return Err(Error::DataOutOfRange(format!(
            "v is not positive on the seed support (min {min_v:.3e})"
        )));
    }
    let seed = SeedProfile::raised_cosine(lo, hi, fraction * min_v)?;
    let mut clearance = f64::INFINITY;
    for k in 0..=fine {
        let x = lo + (hi - lo) * k as f64 / fine as f64;
        clearance = clearance.min(state.sample_v(x) - seed.eval(x));
    }
    Ok((seed, clearance))
}

/// All side conditions of the spliced bound at one frame time; `Ok` carries
/// the wedge for reuse.
fn side_conditions_at(
    sub: &USubSolution,
    vsub: &VSubSolution,
    t: f64,
    n_probe: usize,
) -> Result<(f64, f64)> {
    let (tau_m, tau_p) = vsub.wedge_rays(t, sub.b, sub.delta)?;
    let theta = sub.theta_plus(t);
    if !(tau_m < theta && theta < tau_p) {
        return Err(Error::OutOfRegime(format!(
            "crossing {theta:.3} outside wedge [{tau_m:.3}, {tau_p:.3}] at t = {t:.1}"
        )));
    }
    if sub.kink_margin(t) < 0.0 {
        return Err(Error::OutOfRegime(format!("concave splice at t = {t:.1}")));
    }
    for k in 1..=n_probe {
        let y_b = tau_m * k as f64 / n_probe as f64;
        if sub.residual_bound(t, y_b, 0.0) > 0.0 {
            return Err(Error::OutOfRegime(format!(
                "positive residual ahead of the wedge at (t, y) = ({t:.1}, {y_b:.2})"
            )));
        }
        let y_c = tau_m + (theta - tau_m) * k as f64 / n_probe as f64;
        let credit = (sub.b * y_c - sub.delta * t).exp();
        if sub.residual_bound(t, y_c, credit) > 0.0 {
            return Err(Error::OutOfRegime(format!(
                "positive residual inside the wedge at (t, y) = ({t:.1}, {y_c:.2})"
            )));
        }
    }
    Ok((tau_m, tau_p))
}

/// True when the spliced bound anchored at `t_switch` satisfies its side
/// conditions across the whole window `[t_switch, 2 t_switch]`.
fn window_admissible(
    sub: &USubSolution,
    vsub: &VSubSolution,
    t_switch: f64,
    g_max: f64,
) -> Result<bool> {
    let r = USubSolution::offset_for(sub.front(), sub.sigma, t_switch, g_max)?;
    let sub = sub.with_offset(r);
    let n_times = 48;
    for j in 0..=n_times {
        let t = t_switch + t_switch * j as f64 / n_times as f64;
        if side_conditions_at(&sub, vsub, t, 96).is_err() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Run the whole argument. Fails only on infrastructure errors (regime
/// mismatch, no admissible switch-on time within the horizon, simulation
/// blow-up); every checked inequality that merely *fails* is reported in the
/// returned certificate instead.
pub fn run_certification(p: &Params, cfg: &CertifyConfig) -> Result<Certificate> {
    if classify(p) != Regime::IV || p.beta == 0.0 {
        return Err(Error::OutOfRegime(
            "certification requires the anomalous regime with active coupling".into(),
        ));
    }
    let s_anom = require_anomalous_speed(p)?;
    if !(p.speed_u() < cfg.s && cfg.s < cfg.sigma && cfg.sigma < s_anom) {
        return Err(Error::InvalidParams(format!(
            "need speed_u < s < sigma < anomalous speed, got {} < {} < {} < {s_anom}",
            p.speed_u(),
            cfg.s,
            cfg.sigma
        )));
    }
    if !(cfg.super_speed > s_anom) {
        return Err(Error::InvalidParams(format!(
            "upper-bound speed {} must exceed the anomalous speed {s_anom}",
            cfg.super_speed
        )));
    }
    let delta = match cfg.delta {
        Some(d) => d,
        None => critical_delta(p, cfg.sigma)?,
    };

    let mut checks: Vec<Check> = Vec::new();

    // -- Phase 1: evolve step data to the anchor time and carve the seed.
    let state0 = FieldState::heaviside(-30.0, 30.0, cfg.dx, 0.0)?;
    let mut sim = Simulation::new(*p, state0)?;
    sim.run_until(cfg.t0)?;
    let snap_t0 = sim.state().clone();
    let (seed, clearance) = seed_from_state(&snap_t0, cfg.seed_support, cfg.seed_height_fraction)?;
    let seed_height = seed.sup();
    checks.push(check_ge(
        "seed-below-initial-v",
        clearance,
        0.0,
        format!(
            "min(v(t0) - q0) over the support; seed height {seed_height:.3e}"
        ),
    ));

    // -- Phase 2: certified linear evolution of the seed.
    let vsub = VSubSolution::new(cfg.sigma, seed, 1.0)?;

    // -- Phase 3: spliced u-bound and the switch-on search.
    let front = solve_front(p, cfg.s, &FrontOptions::default())?;
    let proto = USubSolution::new(p, front, cfg.sigma, delta, 0.0)?;
    let t_wedge_open = vsub.wedge_opening_time(proto.b, delta, 0.1, cfg.switch_horizon)?;
    let t_kink_estimate = proto.kink_threshold_estimate()?;

    let mut t_switch = (t_wedge_open.max(t_kink_estimate).max(10.0)).ceil();
    while !window_admissible(&proto, &vsub, t_switch, cfg.g_max)? {
        t_switch += (t_switch / 16.0).max(2.0);
        if t_switch > cfg.switch_horizon {
            return Err(Error::NotFoundWithinHorizon {
                what: "admissible switch-on time for the spliced bound".into(),
                horizon: cfg.switch_horizon,
            });
        }
    }

    // -- Phase 4: continue the simulation across the certified window,
    // capturing snapshots at the comparison times.
    let t_end = cfg.t0 + 2.0 * t_switch;
    let snap_targets: Vec<f64> = (0..=4)
        .map(|k| cfg.t0 + t_switch * (1.0 + 0.25 * k as f64))
        .collect();
    let mut snaps: Vec<FieldState> = Vec::new();
    let mut next_target = 0;
    let mut recorder = SpeedRecorder::new(FieldComponent::U, 0.01);
    sim.run_observed(t_end, 50, |state| {
        while next_target < snap_targets.len() && state.t >= snap_targets[next_target] - 1e-9 {
            snaps.push(state.clone());
            next_target += 1;
        }
        recorder.record(state)
    })?;
    let measured_speed = recorder
        .estimate(cfg.t0 + t_switch, t_end, false)
        .ok()
        .map(|f| f.speed);

    // -- Phase 5: anchor the offset, halving g_max while the initial
    // ordering against the computed field needs more headroom.
    let snap_switch = &snaps[0];
    let frame_of = |snap: &FieldState| snap.t - cfg.t0;
    let mut g_max_used = cfg.g_max;
    let mut sub = proto.with_offset(USubSolution::offset_for(
        proto.front(),
        cfg.sigma,
        t_switch,
        g_max_used,
    )?);
    let u_lower_margin = |sub: &USubSolution, snap: &FieldState| -> f64 {
        let t = frame_of(snap);
        let theta = sub.theta_plus(t);
        let mut worst = f64::INFINITY;
        for k in 0..=6000 {
            let y = -30.0 + (theta + 20.0 + 30.0) * k as f64 / 6000.0;
            let x = cfg.sigma * t + y;
            worst = worst.min(snap.sample_u(x) - sub.eval(t, y));
        }
        worst
    };
    let mut initial_margin = u_lower_margin(&sub, snap_switch);
    let mut halvings = 0;
    while initial_margin < -cfg.ordering_tol && halvings < 24 {
        g_max_used *= 0.5;
        halvings += 1;
        sub = proto.with_offset(USubSolution::offset_for(
            proto.front(),
            cfg.sigma,
            t_switch,
            g_max_used,
        )?);
        initial_margin = u_lower_margin(&sub, snap_switch);
    }
    let r_offset = sub.r;
    checks.push(check_ge(
        "u-lower-initial-ordering",
        initial_margin,
        -cfg.ordering_tol,
        format!(
            "min(u - u_lower) at switch-on (t = {:.2}), after {halvings} halvings of g_max",
            snap_switch.t
        ),
    ));

    // -- Phase 6: dense residual sampling over the window.
    let span = t_switch;
    let needed_times = cfg.min_samples.div_ceil(4 * cfg.samples_per_region);
    let stride = cfg
        .time_stride
        .min(span / needed_times.max(1) as f64);
    let n_times = (span / stride).ceil() as usize;
    let spr = cfg.samples_per_region;
    let mut n_samples = 0usize;
    let mut worst = [f64::NEG_INFINITY; 4];
    let mut sandwich = f64::INFINITY;
    let mut kink = f64::INFINITY;
    for j in 0..=n_times {
        let t = t_switch + span * j as f64 / n_times as f64;
        let (tau_m, tau_p) = vsub.wedge_rays(t, sub.b, sub.delta)?;
        let theta = sub.theta_plus(t);
        sandwich = sandwich.min(theta - tau_m).min(tau_p - theta);
        kink = kink.min(sub.kink_margin(t));
        for k in 1..=spr {
            let frac = k as f64 / spr as f64;
            let y_a = -30.0 * frac;
            worst[0] = worst[0].max(sub.residual_bound(t, y_a, 0.0));
            let y_b = tau_m * frac;
            worst[1] = worst[1].max(sub.residual_bound(t, y_b, 0.0));
            let y_c = tau_m + (theta - tau_m) * frac;
            let credit = (sub.b * y_c - sub.delta * t).exp();
            worst[2] = worst[2].max(sub.residual_bound(t, y_c, credit));
            let y_d = theta + 30.0 * frac;
            worst[3] = worst[3].max(sub.residual_bound(t, y_d, 0.0));
            n_samples += 4;
        }
    }
    let worst_all = worst.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    checks.push(check_le(
        "residual-u-max",
        worst_all,
        cfg.residual_tol,
        format!(
            "per region: behind {:.3e}, ahead-of-wedge {:.3e}, in-wedge {:.3e}, beyond {:.3e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    ));
    checks.push(check_ge(
        "residual-sample-count",
        n_samples as f64,
        cfg.min_samples as f64,
        format!("{} times x 4 regions x {spr} points", n_times + 1),
    ));
    checks.push(check_ge(
        "wedge-sandwich",
        sandwich,
        0.0,
        "min distance from the envelope crossing to either wedge edge".into(),
    ));
    checks.push(check_ge(
        "splice-kink-margin",
        kink,
        0.0,
        "min slope gain across the splice over the window".into(),
    ));

    // -- Phase 7: orderings against the computed fields.
    let mut later = f64::INFINITY;
    for snap in snaps.iter().skip(1) {
        later = later.min(u_lower_margin(&sub, snap));
    }
    checks.push(check_ge(
        "u-lower-later-ordering",
        later,
        -cfg.ordering_tol,
        "min(u - u_lower) over the later snapshots".into(),
    ));

    let mut v_margin = f64::INFINITY;
    for snap in &snaps {
        let t = frame_of(snap);
        let (_, tau_p) = vsub.wedge_rays(t, sub.b, sub.delta)?;
        for k in 1..=2000 {
            let y = (tau_p + 20.0) * k as f64 / 2000.0;
            let x = cfg.sigma * t + y;
            v_margin = v_margin.min(snap.sample_v(x) - vsub.eval(t, y)?);
        }
    }
    checks.push(check_ge(
        "v-lower-ordering",
        v_margin,
        -cfg.ordering_tol,
        "min(v - v_lower) over snapshots, 0 < y <= wedge edge + 20".into(),
    ));

    // -- Phase 8: travelling upper bound.
    let sup = SuperSolution::new(p, cfg.super_speed, None, 1.0)?;
    let mut sup_u = f64::INFINITY;
    let mut sup_v = f64::INFINITY;
    let mut sup_res = f64::INFINITY;
    for snap in std::iter::once(&snap_t0).chain(snaps.iter()) {
        for i in (0..snap.n()).step_by(4) {
            let y = snap.x(i) - cfg.super_speed * snap.t;
            sup_u = sup_u.min(sup.eval_u(y) - snap.u[i]);
            sup_v = sup_v.min(sup.eval_v(y) - snap.v[i]);
            sup_res = sup_res.min(sup.residual_u(y, snap.v[i]));
        }
    }
    checks.push(check_ge(
        "upper-u-ordering",
        sup_u,
        -cfg.ordering_tol,
        format!("min(u_upper - u) across snapshots at speed {}", cfg.super_speed),
    ));
    checks.push(check_ge(
        "upper-v-ordering",
        sup_v,
        -cfg.ordering_tol,
        "min(v_upper - v) across snapshots".into(),
    ));
    checks.push(check_ge(
        "upper-residual-min",
        sup_res,
        -cfg.residual_tol,
        "min residual of the upper bound against the computed v".into(),
    ));

    // -- Phase 9: the crossing moves at the wedge-midline slope.
    let slope_samples: Vec<(f64, f64)> = (0..=200)
        .map(|k| {
            let t = cfg.slope_window.0
                + (cfg.slope_window.1 - cfg.slope_window.0) * k as f64 / 200.0;
            (t, sub.theta_plus(t))
        })
        .collect();
    let slope_fit = fit_speed(&slope_samples, false)?;
    let slope_target = (cfg.sigma * cfg.sigma - 4.0).sqrt();
    checks.push(check_le(
        "crossing-slope",
        (slope_fit.speed - slope_target).abs(),
        cfg.slope_tol,
        format!(
            "|fitted {} - sqrt(sigma^2 - 4) = {slope_target}| on t in [{}, {}]",
            slope_fit.speed, cfg.slope_window.0, cfg.slope_window.1
        ),
    ));

    let pass = checks.iter().all(|c| c.pass);
    Ok(Certificate {
        params: *p,
        config: cfg.clone(),
        a: sub.a,
        b: sub.b,
        delta,
        dcoef: sub.dcoef,
        bcoef: sub.bcoef,
        c_bound: vsub.c_bound,
        seed_height,
        t_wedge_open,
        t_kink_estimate,
        t_switch,
        g_max_used,
        r_offset,
        theta_offset: sub.theta_offset(),
        n_residual_samples: n_samples,
        measured_speed,
        checks,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn canonical() -> Params {
        Params::new(0.5, 2.0, 1.0).unwrap()
    }

    #[test]
    fn seed_sits_below_the_computed_field() {
        let p = canonical();
        let state0 = FieldState::heaviside(-20.0, 20.0, 0.05, 0.0).unwrap();
        let mut sim = Simulation::new(p, state0).unwrap();
        sim.run_until(1.0).unwrap();
        let (seed, clearance) = seed_from_state(sim.state(), (1.0, 3.0), 0.15).unwrap();
        assert!(clearance > 0.0);
        assert!(seed.sup() > 0.0 && seed.sup() < 0.2);
        // The clearance must beat the mid-support field by construction.
        let mid_v = sim.state().sample_v(2.0);
        assert!(seed.sup() < mid_v);
    }

    #[test]
    fn crossing_slope_fit_matches_the_wedge_midline() {
        let p = canonical();
        let front = solve_front(&p, 2.02, &FrontOptions::default()).unwrap();
        let delta = critical_delta(&p, 2.1).unwrap();
        let sub = USubSolution::new(&p, front, 2.1, delta, 0.0).unwrap();
        let samples: Vec<(f64, f64)> = (0..=100)
            .map(|k| {
                let t = 1e3 + 9e3 * k as f64 / 100.0;
                (t, sub.theta_plus(t))
            })
            .collect();
        let fit = fit_speed(&samples, false).unwrap();
        assert_relative_eq!(fit.speed, (2.1_f64 * 2.1 - 4.0).sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn rejects_misordered_speeds() {
        let p = canonical();
        let mut cfg = CertifyConfig {
            sigma: 2.2, // above the anomalous speed 2.1213...
            ..CertifyConfig::default()
        };
        assert!(run_certification(&p, &cfg).is_err());
        cfg.sigma = 2.1;
        cfg.super_speed = 2.05; // below the anomalous speed
        assert!(run_certification(&p, &cfg).is_err());
        let off_regime = Params::new(0.5, 0.8, 1.0).unwrap();
        assert!(run_certification(&off_regime, &CertifyConfig::default()).is_err());
    }
}

