//! Implementations of the subcommands. Shared conventions: every command
//! writes its artifacts into the output directory and prints its primary
//! JSON document to stdout (never absolute paths, so runs are comparable
//! byte for byte); bulk numeric series go to CSV with every float printed
//! as `{:.16e}` (17 significant digits).

use std::fmt;
use std::path::{Path, PathBuf};

use anomalkpp_core::bounds::certify::{run_certification, Certificate, CertifyConfig};
use anomalkpp_core::front::{solve_front, FrontOptions};
use anomalkpp_core::linear::{
    mixed_collision, predict_speeds, u_double_root, v_double_root, Regime, RootLabel,
};
use anomalkpp_core::sim::{FieldState, Simulation};
use anomalkpp_core::speed::{fit_speed, invasion_point, FieldComponent};
use anomalkpp_core::{Error as CoreError, Params};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Component, ExperimentConfig, InitConfig};

pub enum CliError {
    Core(CoreError),
    Io(std::io::Error),
    Json(serde_json::Error),
    Usage(String),
}

impl CliError {
    /// 2 for anything the caller got wrong (parameters, config files,
    /// out-of-regime requests), 3 for failures of the computation itself.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Json(_) => 2,
            CliError::Io(_) => 3,
            CliError::Core(e) => match e {
                CoreError::InvalidParams(_)
                | CoreError::SubcriticalSpeed { .. }
                | CoreError::OutOfRegime(_)
                | CoreError::DataOutOfRange(_)
                | CoreError::NonpositiveD { .. }
                | CoreError::CuTooSmall { .. } => 2,
                _ => 3,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
            CliError::Json(e) => write!(f, "invalid JSON: {e}"),
            CliError::Usage(m) => write!(f, "{m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}
impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}
impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Json(e)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub struct Ctx {
    pub out: PathBuf,
}

impl Ctx {
    fn write(&self, name: &str, content: &str) -> Result<()> {
        std::fs::create_dir_all(&self.out)?;
        std::fs::write(self.out.join(name), content)?;
        Ok(())
    }

    fn emit_json<T: Serialize>(&self, name: &str, doc: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(doc)?;
        self.write(name, &(text.clone() + "\n"))?;
        println!("{text}");
        Ok(())
    }
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_default()
}

// ---------------------------------------------------------------- analyze

#[derive(Serialize)]
struct RootReport {
    kind: &'static str,
    s: f64,
    nu: f64,
    lambda: f64,
    branches: (RootLabel, RootLabel),
    pinched: bool,
}

impl RootReport {
    fn from(kind: &'static str, r: anomalkpp_core::DoubleRoot) -> Self {
        RootReport {
            kind,
            s: r.s,
            nu: r.nu,
            lambda: r.lambda,
            branches: r.labels,
            pinched: r.pinched,
        }
    }
}

#[derive(Serialize)]
struct AnalyzeReport {
    params: Params,
    regime: Regime,
    s_u: f64,
    s_v: f64,
    s_anom: Option<f64>,
    /// The linearly selected speed for the u-component.
    s_lin: f64,
    /// Branch collisions evaluated at `s_lin`.
    double_roots: Vec<RootReport>,
}

pub fn analyze(ctx: &Ctx, d: f64, alpha: f64, beta: f64) -> Result<()> {
    let p = Params::new(d, alpha, beta)?;
    let pred = predict_speeds(&p);
    let mut double_roots = vec![
        RootReport::from("u-branch", u_double_root(&p, pred.s_selected)),
        RootReport::from("v-branch", v_double_root(pred.s_selected)),
    ];
    if let Some(m) = mixed_collision(&p, pred.s_selected) {
        double_roots.push(RootReport::from("mixed", m));
    }
    ctx.emit_json(
        "analyze.json",
        &AnalyzeReport {
            params: p,
            regime: pred.regime,
            s_u: pred.s_u,
            s_v: pred.s_v,
            s_anom: pred.s_anom,
            s_lin: pred.s_selected,
            double_roots,
        },
    )
}

// ------------------------------------------------------------- regime-map

pub fn regime_map(
    ctx: &Ctx,
    d_range: (f64, f64),
    alpha_range: (f64, f64),
    resolution: usize,
) -> Result<()> {
    if resolution < 2 {
        return Err(CliError::Usage("resolution must be at least 2".into()));
    }
    if !(d_range.0 > 0.0 && d_range.1 > d_range.0 && alpha_range.0 > 0.0 && alpha_range.1 > alpha_range.0)
    {
        return Err(CliError::Usage(
            "ranges must be positive and increasing".into(),
        ));
    }
    let mut csv = String::from("d,alpha,regime,s_u,s_v,s_anom\n");
    let mut rows = 0usize;
    for i in 0..resolution {
        let d = d_range.0 + (d_range.1 - d_range.0) * i as f64 / (resolution - 1) as f64;
        for j in 0..resolution {
            let alpha =
                alpha_range.0 + (alpha_range.1 - alpha_range.0) * j as f64 / (resolution - 1) as f64;
            let p = Params::new(d, alpha, 1.0)?;
            let pred = predict_speeds(&p);
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fmt_f(d),
                fmt_f(alpha),
                pred.regime,
                fmt_f(pred.s_u),
                fmt_f(pred.s_v),
                fmt_opt(pred.s_anom),
            ));
            rows += 1;
        }
    }
    ctx.write("regime-map.csv", &csv)?;
    println!("{}", serde_json::json!({ "rows": rows, "file": "regime-map.csv" }));
    Ok(())
}

// ------------------------------------------------------------------ front

#[derive(Serialize)]
struct FrontReport {
    params: Params,
    s: f64,
    nu_weak: f64,
    mu_unstable: f64,
    eps: f64,
    h: f64,
    y_max: f64,
    fd_residual_max: f64,
    decay: DecayReport,
}

#[derive(Serialize)]
struct DecayReport {
    rate: f64,
    expected: f64,
    rel_err: f64,
    n_points: usize,
}

pub fn front(ctx: &Ctx, d: f64, alpha: f64, s: f64, y_range: (f64, f64), dy: f64) -> Result<()> {
    if !(dy > 0.0 && y_range.1 > y_range.0) {
        return Err(CliError::Usage("need y_max > y_min and dy > 0".into()));
    }
    let p = Params::new(d, alpha, 0.0)?;
    let profile = solve_front(&p, s, &FrontOptions::default())?;

    let n = ((y_range.1 - y_range.0) / dy).round() as usize;
    let mut csv = String::from("y,U,Uprime\n");
    for i in 0..=n {
        let y = y_range.0 + i as f64 * dy;
        csv.push_str(&format!(
            "{},{},{}\n",
            fmt_f(y),
            fmt_f(profile.eval(y)),
            fmt_f(profile.eval_deriv(y))
        ));
    }
    ctx.write("front.csv", &csv)?;

    ctx.emit_json(
        "front.json",
        &FrontReport {
            params: p,
            s,
            nu_weak: profile.nu_weak,
            mu_unstable: profile.mu_unstable,
            eps: profile.eps,
            h: profile.h,
            y_max: profile.y_max(),
            fd_residual_max: profile.fd_residual_max(),
            decay: DecayReport {
                rate: profile.decay_fit.rate,
                expected: profile.decay_fit.expected,
                rel_err: profile.decay_fit.rel_err,
                n_points: profile.decay_fit.n_points,
            },
        },
    )
}

// --------------------------------------------------------------- simulate

fn build_state(cfg: &ExperimentConfig) -> Result<FieldState> {
    let dom = cfg.simulation.domain;
    let state = match cfg.simulation.init {
        InitConfig::Heaviside { step_x } => {
            FieldState::heaviside(dom.x_left, dom.x_right, dom.dx, step_x)?
        }
        InitConfig::Bump {
            lo,
            hi,
            height_u,
            height_v,
        } => {
            if !(hi > lo) {
                return Err(CliError::Usage("bump needs hi > lo".into()));
            }
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            FieldState::from_profile(dom.x_left, dom.x_right, dom.dx, |x| {
                if x <= lo || x >= hi {
                    (0.0, 0.0)
                } else {
                    let c = (std::f64::consts::FRAC_PI_2 * (x - mid) / half).cos();
                    (height_u * c * c, height_v * c * c)
                }
            })?
        }
    };
    Ok(state)
}

fn make_sim(cfg: &ExperimentConfig) -> Result<Simulation> {
    let mut sim = Simulation::new(cfg.params, build_state(cfg)?)?;
    sim.policy = cfg.simulation.window.apply(sim.policy);
    Ok(sim)
}

fn snapshot_name(t: f64) -> String {
    format!("snapshot-{t:012.6}.csv")
}

fn snapshot_csv(state: &FieldState) -> String {
    let mut csv = format!("# t = {}\nx,u,v\n", fmt_f(state.t));
    for i in 0..state.n() {
        csv.push_str(&format!(
            "{},{},{}\n",
            fmt_f(state.x(i)),
            fmt_f(state.u[i]),
            fmt_f(state.v[i])
        ));
    }
    csv
}

#[derive(Serialize)]
struct RunManifest {
    name: String,
    params: Params,
    config: ExperimentConfig,
    dt: f64,
    steps: u64,
    window_shifts: u64,
    window_grows: u64,
    n_cells_final: usize,
    x_origin_final: f64,
    t_final: f64,
    snapshots: Vec<String>,
}

pub fn simulate(ctx: &Ctx, cfg: &ExperimentConfig) -> Result<()> {
    let mut sim = make_sim(cfg)?;
    let stride = cfg.simulation.snapshot_stride;
    let t_end = cfg.simulation.t_end;
    if !(stride > 0.0 && t_end >= 0.0) {
        return Err(CliError::Usage("need snapshot_stride > 0 and t_end >= 0".into()));
    }

    let mut snapshots = Vec::new();
    let save = |ctx: &Ctx, state: &FieldState, names: &mut Vec<String>| -> Result<()> {
        let name = snapshot_name(state.t);
        ctx.write(&name, &snapshot_csv(state))?;
        names.push(name);
        Ok(())
    };
    save(ctx, sim.state(), &mut snapshots)?;
    let mut k = 1u64;
    while (k as f64) * stride < t_end - 1e-9 {
        sim.run_until(k as f64 * stride)?;
        save(ctx, sim.state(), &mut snapshots)?;
        k += 1;
    }
    if t_end > 0.0 {
        sim.run_until(t_end)?;
        save(ctx, sim.state(), &mut snapshots)?;
    }

    let (shifts, grows) = sim.window_actions();
    ctx.emit_json(
        "manifest.json",
        &RunManifest {
            name: cfg.name.clone(),
            params: cfg.params,
            config: cfg.clone(),
            dt: sim.dt,
            steps: sim.steps_taken(),
            window_shifts: shifts,
            window_grows: grows,
            n_cells_final: sim.state().n(),
            x_origin_final: sim.state().x_origin,
            t_final: sim.state().t,
            snapshots,
        },
    )
}

// ------------------------------------------------------------------ speed

/// One invasion-point row; a component that has not crossed the level yet
/// is left empty.
type KappaRow = (f64, Option<f64>, Option<f64>);

fn invasion_or_pending(
    state: &FieldState,
    component: FieldComponent,
    level: f64,
) -> anomalkpp_core::Result<Option<f64>> {
    match invasion_point(state, component, level) {
        Ok(x) => Ok(Some(x)),
        Err(CoreError::NotCrossed { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn kappa_row(state: &FieldState, level: f64) -> anomalkpp_core::Result<KappaRow> {
    Ok((
        state.t,
        invasion_or_pending(state, FieldComponent::U, level)?,
        invasion_or_pending(state, FieldComponent::V, level)?,
    ))
}

/// Run the configured simulation, recording invasion points roughly every
/// `snapshot_stride` time units (and at the initial and final instants).
fn run_recorded(cfg: &ExperimentConfig) -> Result<Vec<KappaRow>> {
    let mut sim = make_sim(cfg)?;
    let level = cfg.measurement.level;
    let stride_steps = (cfg.simulation.snapshot_stride / sim.dt).round().max(1.0) as u64;
    let mut rows = vec![kappa_row(sim.state(), level)?];
    sim.run_observed(cfg.simulation.t_end, stride_steps, |state| {
        rows.push(kappa_row(state, level)?);
        Ok(())
    })?;
    Ok(rows)
}

fn kappa_csv(rows: &[KappaRow]) -> String {
    let mut csv = String::from("t,kappa_u,kappa_v\n");
    for &(t, ku, kv) in rows {
        csv.push_str(&format!("{},{},{}\n", fmt_f(t), fmt_opt(ku), fmt_opt(kv)));
    }
    csv
}

#[derive(Serialize)]
struct SpeedReport {
    component: Component,
    level: f64,
    s_fit_linear: f64,
    s_fit_log: f64,
    log_coeff: f64,
    /// Of the log fit; `rmse_linear` is the plain fit's.
    rmse: f64,
    rmse_linear: f64,
    window: (f64, f64),
    n_samples: usize,
}

fn fit_report(
    rows: &[KappaRow],
    component: Component,
    level: f64,
    window: Option<(f64, f64)>,
) -> Result<SpeedReport> {
    let pick = |row: &KappaRow| match component {
        Component::U => row.1,
        Component::V => row.2,
    };
    let t_last = rows.last().map(|r| r.0).unwrap_or(0.0);
    let window = window.unwrap_or((t_last / 2.0, t_last));
    let samples: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.0 >= window.0 && r.0 <= window.1)
        .filter_map(|r| pick(r).map(|x| (r.0, x)))
        .collect();
    let plain = fit_speed(&samples, false)?;
    let log = fit_speed(&samples, true)?;
    Ok(SpeedReport {
        component,
        level,
        s_fit_linear: plain.speed,
        s_fit_log: log.speed,
        log_coeff: log.log_coeff.unwrap(),
        rmse: log.rmse,
        rmse_linear: plain.rmse,
        window,
        n_samples: samples.len(),
    })
}

/// Parse a snapshot written by `simulate` back into a field state.
fn parse_snapshot(path: &Path) -> Result<FieldState> {
    let text = std::fs::read_to_string(path)?;
    let bad = |what: &str| CliError::Usage(format!("{}: {what}", path.display()));
    let mut lines = text.lines();
    let t: f64 = lines
        .next()
        .and_then(|l| l.strip_prefix("# t = "))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| bad("missing '# t = ...' header"))?;
    match lines.next() {
        Some("x,u,v") => {}
        _ => return Err(bad("missing 'x,u,v' column header")),
    }
    let (mut xs, mut us, mut vs) = (Vec::new(), Vec::new(), Vec::new());
    for line in lines {
        let mut cols = line.split(',');
        let mut take = || -> Result<f64> {
            cols.next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| bad("malformed row"))
        };
        xs.push(take()?);
        us.push(take()?);
        vs.push(take()?);
    }
    if xs.len() < 2 {
        return Err(bad("fewer than two rows"));
    }
    Ok(FieldState {
        t,
        x_origin: xs[0],
        dx: xs[1] - xs[0],
        u: us,
        v: vs,
    })
}

fn rows_from_dir(dir: &Path, level: f64) -> Result<Vec<KappaRow>> {
    let mut names: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("snapshot-") && n.ends_with(".csv"))
        })
        .collect();
    names.sort();
    let mut rows = Vec::with_capacity(names.len());
    for path in &names {
        let state = parse_snapshot(path)?;
        rows.push(kappa_row(&state, level).map_err(CliError::Core)?);
    }
    Ok(rows)
}

pub struct SpeedArgs {
    pub from: Option<PathBuf>,
    pub component: Option<Component>,
    pub level: Option<f64>,
    pub fit_window: Option<(f64, f64)>,
}

pub fn speed(ctx: &Ctx, cfg: Option<&ExperimentConfig>, args: &SpeedArgs) -> Result<()> {
    let (rows, component, level, window) = match (&args.from, cfg) {
        (Some(dir), _) => {
            let level = args.level.unwrap_or(0.01);
            (
                rows_from_dir(dir, level)?,
                args.component.unwrap_or(Component::U),
                level,
                args.fit_window,
            )
        }
        (None, Some(cfg)) => {
            let level = args.level.unwrap_or(cfg.measurement.level);
            let mut cfg = cfg.clone();
            cfg.measurement.level = level;
            (
                run_recorded(&cfg)?,
                args.component.unwrap_or(cfg.measurement.component),
                level,
                args.fit_window.or(cfg.measurement.fit_window),
            )
        }
        (None, None) => {
            return Err(CliError::Usage(
                "speed needs either --from <dir> or --config <file>".into(),
            ))
        }
    };
    ctx.write("speed.csv", &kappa_csv(&rows))?;
    ctx.emit_json("speed.json", &fit_report(&rows, component, level, window)?)
}

// ---------------------------------------------------------------- measure

#[derive(Serialize)]
struct MeasureReport {
    name: String,
    params: Params,
    regime: Regime,
    s_u: f64,
    s_v: f64,
    s_anom: Option<f64>,
    s_lin: f64,
    fit: SpeedReport,
    /// `s_fit_log - s_lin`.
    discrepancy: f64,
}

fn measure_report(cfg: &ExperimentConfig) -> Result<(Vec<KappaRow>, MeasureReport)> {
    let pred = predict_speeds(&cfg.params);
    let rows = run_recorded(cfg)?;
    let fit = fit_report(
        &rows,
        cfg.measurement.component,
        cfg.measurement.level,
        cfg.measurement.fit_window,
    )?;
    let discrepancy = fit.s_fit_log - pred.s_selected;
    let report = MeasureReport {
        name: cfg.name.clone(),
        params: cfg.params,
        regime: pred.regime,
        s_u: pred.s_u,
        s_v: pred.s_v,
        s_anom: pred.s_anom,
        s_lin: pred.s_selected,
        fit,
        discrepancy,
    };
    Ok((rows, report))
}

pub fn measure(ctx: &Ctx, cfg: &ExperimentConfig) -> Result<()> {
    let (rows, report) = measure_report(cfg)?;
    eprintln!(
        "measured {:.6} vs linear prediction {:.6} (discrepancy {:+.6})",
        report.fit.s_fit_log, report.s_lin, report.discrepancy
    );
    ctx.write("kappa.csv", &kappa_csv(&rows))?;
    ctx.emit_json("measure.json", &report)
}

// ------------------------------------------------------------------ sweep

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Axis {
    D,
    Alpha,
    Beta,
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Axis::D => "d",
            Axis::Alpha => "alpha",
            Axis::Beta => "beta",
        }
    }
}

struct SweepRow {
    value: f64,
    s_fit: Option<f64>,
    s_lin: Option<f64>,
    regime: Option<Regime>,
    error: Option<String>,
}

fn sweep_one(template: &ExperimentConfig, axis: Axis, value: f64) -> SweepRow {
    let base = template.params;
    let (d, alpha, beta) = match axis {
        Axis::D => (value, base.alpha, base.beta),
        Axis::Alpha => (base.d, value, base.beta),
        Axis::Beta => (base.d, base.alpha, value),
    };
    let mut row = SweepRow {
        value,
        s_fit: None,
        s_lin: None,
        regime: None,
        error: None,
    };
    let p = match Params::new(d, alpha, beta) {
        Ok(p) => p,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let pred = predict_speeds(&p);
    row.s_lin = Some(pred.s_selected);
    row.regime = Some(pred.regime);
    let mut cfg = template.clone();
    cfg.params = p;
    match measure_report(&cfg) {
        Ok((_, report)) => row.s_fit = Some(report.fit.s_fit_log),
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

pub fn sweep(ctx: &Ctx, template: &ExperimentConfig, axis: Axis, values: &[f64]) -> Result<()> {
    // Parallel across runs only; each run is single-threaded and
    // deterministic, and rows are aggregated in input order.
    let rows: Vec<SweepRow> = values
        .par_iter()
        .map(|&v| sweep_one(template, axis, v))
        .collect();

    let mut csv = format!("{},s_fit,s_lin,regime,error\n", axis.name());
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_f(row.value),
            fmt_opt(row.s_fit),
            fmt_opt(row.s_lin),
            row.regime.map(|r| r.to_string()).unwrap_or_default(),
            row.error.as_deref().map(csv_quote).unwrap_or_default(),
        ));
    }
    ctx.write("sweep.csv", &csv)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    println!(
        "{}",
        serde_json::json!({ "rows": rows.len(), "failed": failed, "file": "sweep.csv" })
    );
    Ok(())
}

// ---------------------------------------------------------------- certify

pub fn certify(ctx: &Ctx, p: Params, cfg: &CertifyConfig) -> Result<Certificate> {
    let cert = run_certification(&p, cfg)?;
    for c in &cert.checks {
        eprintln!(
            "[{}] {:26} {:+.6e} vs {:+.3e}  {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.limit,
            c.detail
        );
    }
    if !cert.pass {
        let mut csv = String::from("check,value,limit,detail\n");
        for c in cert.checks.iter().filter(|c| !c.pass) {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                c.name,
                fmt_f(c.value),
                fmt_f(c.limit),
                csv_quote(&c.detail)
            ));
        }
        ctx.write("violations.csv", &csv)?;
    }
    ctx.emit_json("certificate.json", &cert)?;
    Ok(cert)
}
