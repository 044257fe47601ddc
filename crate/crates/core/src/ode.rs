use crate::error::{Error, Result};

/// Tolerances and step limits for the adaptive Runge-Kutta driver.
///
/// The error test is component-wise against `atol + rtol * |y|`, so a very
/// small `atol` keeps the tolerance effectively relative even when the
/// solution decays through many orders of magnitude (front tails are tracked
/// down to ~1e-13).
#[derive(Debug, Clone, Copy)]
pub struct OdeConfig {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeConfig {
    fn default() -> Self {
        OdeConfig {
            rtol: 1e-10,
            atol: 1e-160,
            h_init: 1e-3,
            h_max: f64::INFINITY,
            max_steps: 50_000_000,
        }
    }
}

// Dormand-Prince 5(4) coefficients.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th- and embedded 4th-order weights, used for the
// error estimate (the 4th-order rule has a nonzero weight on the FSAL stage).
const E1: f64 = B1 - 5179.0 / 57600.0;
const E3: f64 = B3 - 7571.0 / 16695.0;
const E4: f64 = B4 - 393.0 / 640.0;
const E5: f64 = B5 + 92097.0 / 339200.0;
const E6: f64 = B6 - 187.0 / 2100.0;
const E7: f64 = -1.0 / 40.0;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

/// Integrate `y' = f(t, y)` with Dormand-Prince 5(4), landing *exactly* on the
/// uniform output grid `t0, t0 + h_out, t0 + 2 h_out, ...` (steps are
/// truncated at grid points rather than interpolated, so grid values carry the
/// full integration accuracy).
///
/// After each recorded grid point, `stop` decides whether to halt; the states
/// recorded so far (including the one that triggered the stop) are returned.
/// At most `max_points` output intervals are taken.
pub fn integrate_on_grid<const N: usize>(
    mut f: impl FnMut(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    h_out: f64,
    max_points: usize,
    mut stop: impl FnMut(f64, &[f64; N]) -> bool,
    cfg: &OdeConfig,
) -> Result<Vec<[f64; N]>> {
    if !(h_out > 0.0 && h_out.is_finite()) {
        return Err(Error::DataOutOfRange(format!(
            "output spacing must be positive and finite, got {h_out}"
        )));
    }

    let mut out = Vec::with_capacity(max_points.min(1 << 20) + 1);
    out.push(y0);
    if stop(t0, &y0) || max_points == 0 {
        return Ok(out);
    }

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut h_prop = cfg.h_init.min(cfg.h_max).min(h_out);
    let mut next_idx: usize = 1;
    let mut n_steps: usize = 0;

    loop {
        let t_target = t0 + next_idx as f64 * h_out;
        // `h_prop` is the controller's proposal; `h_try` is the step actually
        // taken, truncated so grid points are hit exactly. Keeping them
        // separate matters: a step truncated to land on the grid can be
        // arbitrarily short, and it must not pollute the proposal.
        let hitting = t + h_prop >= t_target - 1e-14 * h_out;
        let h_try = if hitting { t_target - t } else { h_prop };
        if !hitting && h_try <= f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::OdeFailure {
                t,
                what: format!("step size underflow (h = {h_try:.3e})"),
            });
        }
        n_steps += 1;
        if n_steps > cfg.max_steps {
            return Err(Error::OdeFailure {
                t,
                what: format!("step budget of {} exhausted", cfg.max_steps),
            });
        }

        let h = h_try;
        let mut ys = [0.0; N];
        for i in 0..N {
            ys[i] = y[i] + h * A21 * k1[i];
        }
        let k2 = f(t + C2 * h, &ys);
        for i in 0..N {
            ys[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        let k3 = f(t + C3 * h, &ys);
        for i in 0..N {
            ys[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        let k4 = f(t + C4 * h, &ys);
        for i in 0..N {
            ys[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        let k5 = f(t + C5 * h, &ys);
        for i in 0..N {
            ys[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let k6 = f(t + h, &ys);
        let mut y_new = [0.0; N];
        for i in 0..N {
            y_new[i] =
                y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        let k7 = f(t + h, &y_new);

        let mut err_sq = 0.0;
        for i in 0..N {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = cfg.atol + cfg.rtol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / scale) * (e / scale);
        }
        let err = (err_sq / N as f64).sqrt();

        if err <= 1.0 {
            y = y_new;
            k1 = k7; // first-same-as-last

            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if hitting {
                t = t_target; // kill accumulated rounding in t
                out.push(y);
                if stop(t, &y) || next_idx >= max_points {
                    return Ok(out);
                }
                next_idx += 1;
                // Restore the pre-truncation proposal (the controller learned
                // nothing useful from a shortened step), but let it grow if
                // the step was barely shortened.
                h_prop = h_prop.max(h_try * fac);
            } else {
                t += h_try;
                h_prop = h_try * fac;
            }
            h_prop = h_prop.min(cfg.h_max).min(h_out);
        } else {
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            h_prop = h_try * fac;
        }
    }
}

/// Convenience wrapper: integrate over exactly `n_intervals` output intervals
/// and return the `n_intervals + 1` grid states.
pub fn integrate_to_grid<const N: usize>(
    f: impl FnMut(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    h_out: f64,
    n_intervals: usize,
    cfg: &OdeConfig,
) -> Result<Vec<[f64; N]>> {
    let states = integrate_on_grid(f, t0, y0, h_out, n_intervals, |_, _| false, cfg)?;
    debug_assert_eq!(states.len(), n_intervals + 1);
    Ok(states)
}
