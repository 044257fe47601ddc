//! Measuring invasion speeds from simulation snapshots.
//!
//! The invasion point of a field is the rightmost crossing of a fixed level,
//! located by scanning from the right window edge and interpolating linearly
//! between the bracketing cells. Fitting its trajectory `x(t)` over a late
//! time window with either
//!
//! ```text
//!   x ~ s t + c          or          x ~ s t + b ln t + c
//! ```
//!
//! gives the realized speed; the logarithmic term absorbs the slowly decaying
//! `O(ln t / t)` drift that pulled-front positions carry, so the log fit
//! converges to the asymptotic speed much faster than the plain one.

use crate::error::{Error, Result};
use crate::sim::FieldState;
use serde::Serialize;

/// A crossing this close to the right window edge is rejected as clipped:
/// the level set would feel the artificial boundary.
pub const EDGE_MARGIN_CELLS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FieldComponent {
    U,
    V,
}

/// Lab coordinate of the rightmost crossing of `level`.
pub fn invasion_point(state: &FieldState, component: FieldComponent, level: f64) -> Result<f64> {
    let f = match component {
        FieldComponent::U => &state.u,
        FieldComponent::V => &state.v,
    };
    let n = f.len();
    let Some(i) = (0..n).rev().find(|&i| f[i] > level) else {
        return Err(Error::NotCrossed { level });
    };
    if i + EDGE_MARGIN_CELLS >= n {
        return Err(Error::WindowClipped {
            x: state.x(i),
            margin_cells: EDGE_MARGIN_CELLS,
        });
    }
    // f[i] > level >= f[i+1]: interpolate within the bracketing cell.
    let frac = (f[i] - level) / (f[i] - f[i + 1]);
    Ok(state.x(i) + frac * state.dx)
}

/// Result of fitting an invasion trajectory.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpeedFit {
    pub speed: f64,
    /// Coefficient of `ln t`; `None` for the plain linear fit.
    pub log_coeff: Option<f64>,
    pub intercept: f64,
    pub rmse: f64,
    pub n_samples: usize,
    pub t_first: f64,
    pub t_last: f64,
}

/// Least-squares fit of `(t, x)` samples against `s t + c` or
/// `s t + b ln t + c`. Uses a mean-centered basis so the normal equations
/// stay well-conditioned even for `t` in the hundreds.
pub fn fit_speed(samples: &[(f64, f64)], with_log: bool) -> Result<SpeedFit> {
    let needed = if with_log { 4 } else { 3 };
    if samples.len() < needed {
        return Err(Error::InsufficientSamples {
            needed,
            got: samples.len(),
        });
    }
    if with_log && samples.iter().any(|&(t, _)| t <= 0.0) {
        return Err(Error::DataOutOfRange(
            "log fit needs strictly positive times".into(),
        ));
    }
    let n = samples.len() as f64;
    let t_mean = samples.iter().map(|p| p.0).sum::<f64>() / n;
    let x_mean = samples.iter().map(|p| p.1).sum::<f64>() / n;

    let (speed, log_coeff, intercept) = if with_log {
        let l_mean = samples.iter().map(|p| p.0.ln()).sum::<f64>() / n;
        let (mut stt, mut stl, mut sll, mut stx, mut slx) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(t, x) in samples {
            let dt = t - t_mean;
            let dl = t.ln() - l_mean;
            let dx = x - x_mean;
            stt += dt * dt;
            stl += dt * dl;
            sll += dl * dl;
            stx += dt * dx;
            slx += dl * dx;
        }
        let det = stt * sll - stl * stl;
        if det.abs() <= 1e-14 * stt * sll {
            return Err(Error::DataOutOfRange(
                "time window too short to separate t from ln t".into(),
            ));
        }
        let s = (stx * sll - slx * stl) / det;
        let b = (slx * stt - stx * stl) / det;
        (s, Some(b), x_mean - s * t_mean - b * l_mean)
    } else {
        let (mut stt, mut stx) = (0.0, 0.0);
        for &(t, x) in samples {
            let dt = t - t_mean;
            stt += dt * dt;
            stx += dt * (x - x_mean);
        }
        if stt == 0.0 {
            return Err(Error::DataOutOfRange("all samples at the same time".into()));
        }
        let s = stx / stt;
        (s, None, x_mean - s * t_mean)
    };

    let mut ss = 0.0;
    for &(t, x) in samples {
        let model = speed * t + log_coeff.map_or(0.0, |b| b * t.ln()) + intercept;
        ss += (x - model) * (x - model);
    }
    Ok(SpeedFit {
        speed,
        log_coeff,
        intercept,
        rmse: (ss / n).sqrt(),
        n_samples: samples.len(),
        t_first: samples.first().unwrap().0,
        t_last: samples.last().unwrap().0,
    })
}

/// Observer-side collector: feed it snapshots, then fit a window.
#[derive(Debug, Clone)]
pub struct SpeedRecorder {
    pub component: FieldComponent,
    pub level: f64,
    pub samples: Vec<(f64, f64)>,
}

impl SpeedRecorder {
    pub fn new(component: FieldComponent, level: f64) -> Self {
        SpeedRecorder {
            component,
            level,
            samples: Vec::new(),
        }
    }

    /// Record the invasion point at the snapshot's time. A level that is not
    /// crossed yet is not an error (the front may not have formed); a clipped
    /// crossing is, since silently truncated trajectories would bias the fit.
    pub fn record(&mut self, state: &FieldState) -> Result<()> {
        match invasion_point(state, self.component, self.level) {
            Ok(x) => {
                self.samples.push((state.t, x));
                Ok(())
            }
            Err(Error::NotCrossed { .. }) => Ok(()),
            Err(e) => Err(e),
        }
    }

    /// Fit the samples with `t_min <= t <= t_max`.
    pub fn estimate(&self, t_min: f64, t_max: f64, with_log: bool) -> Result<SpeedFit> {
        let window: Vec<(f64, f64)> = self
            .samples
            .iter()
            .copied()
            .filter(|&(t, _)| t >= t_min && t <= t_max)
            .collect();
        fit_speed(&window, with_log)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Params;
    use crate::sim::Simulation;
    use approx::assert_relative_eq;

    fn ramp_state(n: usize, dx: f64, front_cell: f64) -> FieldState {
        // u descends linearly through the window; v is a shifted copy.
        let u: Vec<f64> = (0..n).map(|i| (1.0 - (i as f64 - front_cell) / 20.0).clamp(0.0, 1.0)).collect();
        let v: Vec<f64> = (0..n).map(|i| (1.0 - (i as f64 - front_cell + 40.0) / 20.0).clamp(0.0, 1.0)).collect();
        FieldState {
            t: 1.0,
            x_origin: 0.0,
            dx,
            u,
            v,
        }
    }

    #[test]
    fn locates_rightmost_crossing() {
        let st = ramp_state(400, 0.1, 100.0);
        // u = 0.5 at cell index 110 exactly.
        let x = invasion_point(&st, FieldComponent::U, 0.5).unwrap();
        assert_relative_eq!(x, 11.0, epsilon = 1e-12);
        let xv = invasion_point(&st, FieldComponent::V, 0.5).unwrap();
        assert_relative_eq!(xv, 7.0, epsilon = 1e-12);
    }

    #[test]
    fn interpolates_between_cells() {
        let st = ramp_state(400, 0.1, 100.0);
        // Level 0.525: crossing half a cell left of 110.
        let x = invasion_point(&st, FieldComponent::U, 0.525).unwrap();
        assert_relative_eq!(x, 10.95, epsilon = 1e-12);
    }

    #[test]
    fn rejects_clipped_and_uncrossed() {
        let st = ramp_state(400, 0.1, 380.0);
        assert!(matches!(
            invasion_point(&st, FieldComponent::U, 0.5),
            Err(Error::WindowClipped { .. })
        ));
        let st = ramp_state(400, 0.1, 100.0);
        assert!(matches!(
            invasion_point(&st, FieldComponent::U, 1.5),
            Err(Error::NotCrossed { .. })
        ));
    }

    #[test]
    fn linear_fit_recovers_exact_line() {
        let samples: Vec<(f64, f64)> = (10..60).map(|k| {
            let t = k as f64;
            (t, 2.5 * t + 3.0)
        }).collect();
        let fit = fit_speed(&samples, false).unwrap();
        assert_relative_eq!(fit.speed, 2.5, epsilon = 1e-12);
        assert_relative_eq!(fit.intercept, 3.0, epsilon = 1e-10);
        assert!(fit.rmse < 1e-12);
        assert_eq!(fit.log_coeff, None);
    }

    #[test]
    fn log_fit_separates_drift_from_speed() {
        let samples: Vec<(f64, f64)> = (50..300).map(|k| {
            let t = k as f64;
            (t, 2.1 * t - 1.5 * t.ln() + 0.7)
        }).collect();
        let fit = fit_speed(&samples, true).unwrap();
        assert_relative_eq!(fit.speed, 2.1, epsilon = 1e-9);
        assert_relative_eq!(fit.log_coeff.unwrap(), -1.5, epsilon = 1e-6);
        assert_relative_eq!(fit.intercept, 0.7, epsilon = 1e-5);
        // A plain linear fit on the same data is biased slow.
        let lin = fit_speed(&samples, false).unwrap();
        assert!(lin.speed < 2.1 - 1e-4);
    }

    #[test]
    fn recorder_tracks_a_real_front() {
        // Decoupled fields, modest resolution: v should move at roughly 2.
        let p = Params::new(1.0, 1.0, 0.0).unwrap();
        let st = crate::sim::FieldState::heaviside(-10.0, 40.0, 0.1, 0.0).unwrap();
        let mut sim = Simulation::new(p, st).unwrap();
        let mut rec = SpeedRecorder::new(FieldComponent::V, 0.5);
        sim.run_observed(40.0, 200, |s| rec.record(s)).unwrap();
        let fit = rec.estimate(20.0, 40.0, false).unwrap();
        assert!(
            (fit.speed - 2.0).abs() < 0.15,
            "measured v speed {}",
            fit.speed
        );
    }
}
