//! Travelling upper bound for both fields.
//!
//! For any frame speed `s` strictly above the anomalous collision speed, the
//! pair
//!
//! ```text
//!   v_bar(y) = min(1,   C_v e^{b y}),          b = steep v-root at s,
//!   u_bar(y) = min(u_c, C_u e^{a y} + C_v kappa e^{b y}),   a = weak u-root,
//! ```
//!
//! with `kappa = -beta / Du(b, 0; s)` is a (viscosity) super-solution pair in
//! `y = x - s t`: on the exponential branch the `kappa` term converts the
//! cross-coupling `beta v_bar` into an exact cancellation, leaving only
//! `alpha u_bar^2 >= 0`, and the plateau branches leave `beta (1 - v) >= 0`.
//! Both corners are concave (a min of super-solutions), so no slope condition
//! arises. Ordering at `t = 0` against step data then caps the invasion point
//! at `s t + O(1)` forever.
//!
//! `kappa > 0` — i.e. `b` trapped between the two u-roots — is exactly what
//! fails at and below the anomalous speed, so construction doubles as a
//! certificate that `s` is on the fast side.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linear::{nu_u_real, nu_v_real};
use crate::params::Params;

#[derive(Debug, Clone, Serialize)]
pub struct SuperSolution {
    pub params: Params,
    /// Frame speed.
    pub s: f64,
    /// Weak u-decay `nu_u^+(s)`.
    pub a: f64,
    /// Steep v-decay `nu_v^-(s)`.
    pub b: f64,
    /// Coupling amplitude `-beta / Du(b, 0)`.
    pub kappa: f64,
    /// Plateau height for u (the coupled saturation level).
    pub u_cap: f64,
    pub c_u: f64,
    pub c_v: f64,
    /// Corner where the u-envelope meets its plateau.
    pub theta: f64,
    /// Corner where the v-envelope meets 1.
    pub y_v: f64,
}

impl SuperSolution {
    /// Build the bound at frame speed `s`. `c_u` defaults to `1.05 u_c`;
    /// `c_v` must be at least 1 so the v-branch covers step data.
    pub fn new(p: &Params, s: f64, c_u: Option<f64>, c_v: f64) -> Result<Self> {
        let (_, b) = nu_v_real(s, 0.0).ok_or(Error::SubcriticalSpeed { s, s_min: 2.0 })?;
        let (a, _) = nu_u_real(p, s, 0.0).ok_or(Error::SubcriticalSpeed {
            s,
            s_min: p.speed_u(),
        })?;
        if !(c_v >= 1.0) {
            return Err(Error::DataOutOfRange(format!(
                "c_v = {c_v} must be >= 1 to dominate step data"
            )));
        }
        let du_at_b = p.d * b * b + s * b + p.alpha;
        if du_at_b >= 0.0 {
            return Err(Error::OutOfRegime(format!(
                "speed {s} is not above the collision speed: Du(nu_v^-) = {du_at_b:.3e} >= 0"
            )));
        }
        let kappa = -p.beta / du_at_b;
        let u_cap = p.u_plateau();
        let c_u = c_u.unwrap_or(1.05 * u_cap);
        if !(c_u > 0.0) {
            return Err(Error::DataOutOfRange(format!("c_u = {c_u} must be > 0")));
        }
        let y_v = (1.0 / c_v).ln() / b;

        // Corner of the u-envelope: unique root of the strictly decreasing
        // envelope minus the plateau.
        let envelope = |y: f64| c_u * (a * y).exp() + c_v * kappa * (b * y).exp() - u_cap;
        let mut lo = 0.0;
        while envelope(lo) < 0.0 {
            lo -= 5.0;
            if lo < -1e4 {
                return Err(Error::NoBracket {
                    what: "plateau corner of the travelling upper bound".into(),
                });
            }
        }
        let mut hi = lo + 5.0;
        while envelope(hi) > 0.0 {
            hi += 5.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if envelope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let theta = 0.5 * (lo + hi);
        if theta <= y_v {
            // With the corner inside the v-plateau the cancellation on the
            // exponential branch would be compared against v_bar = 1, which
            // it does not dominate; a larger c_u pushes the corner out.
            return Err(Error::CuTooSmall { theta, y_v });
        }
        Ok(SuperSolution {
            params: *p,
            s,
            a,
            b,
            kappa,
            u_cap,
            c_u,
            c_v,
            theta,
            y_v,
        })
    }

    pub fn eval_u(&self, y: f64) -> f64 {
        if y <= self.theta {
            self.u_cap
        } else {
            self.c_u * (self.a * y).exp() + self.c_v * self.kappa * (self.b * y).exp()
        }
    }

    pub fn eval_v(&self, y: f64) -> f64 {
        if y <= self.y_v {
            1.0
        } else {
            self.c_v * (self.b * y).exp()
        }
    }

    /// Residual of the u-equation at `y` against an actual value `v <= v_bar`:
    /// `beta (1 - v)` on the plateau, `alpha u_bar^2 + beta (v_bar - v)` on
    /// the envelope. Non-negative whenever the v-ordering holds.
    pub fn residual_u(&self, y: f64, v: f64) -> f64 {
        if y <= self.theta {
            self.params.beta * (1.0 - v)
        } else {
            let u_bar = self.eval_u(y);
            self.params.alpha * u_bar * u_bar + self.params.beta * (self.eval_v(y) - v)
        }
    }

    /// Residual of the v-equation: `v_bar^2` on the envelope, 0 on the
    /// plateau. Always non-negative.
    pub fn residual_v(&self, y: f64) -> f64 {
        if y <= self.y_v {
            0.0
        } else {
            let v_bar = self.eval_v(y);
            v_bar * v_bar
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn canonical() -> Params {
        Params::new(0.5, 2.0, 1.0).unwrap()
    }

    #[test]
    fn coupling_amplitude_at_reference_speed() {
        let sup = SuperSolution::new(&canonical(), 2.3, None, 1.0).unwrap();
        assert_relative_eq!(sup.b, -1.7178908345800274, epsilon = 1e-15);
        assert_relative_eq!(sup.kappa, 2.102720151308944, epsilon = 1e-9);
        assert_relative_eq!(sup.u_cap, 1.3660254037844386, epsilon = 1e-15);
        assert!(sup.theta > sup.y_v && sup.y_v == 0.0);
    }

    #[test]
    fn envelope_is_continuous_and_decreasing() {
        let sup = SuperSolution::new(&canonical(), 2.3, None, 1.0).unwrap();
        assert_relative_eq!(sup.eval_u(sup.theta), sup.u_cap, epsilon = 1e-10);
        let mut prev = sup.eval_u(-5.0);
        for k in 1..200 {
            let y = -5.0 + 0.2 * k as f64;
            let val = sup.eval_u(y);
            assert!(val <= prev + 1e-12, "u_bar must be non-increasing");
            prev = val;
        }
        assert!(sup.eval_u(40.0) > 0.0);
    }

    #[test]
    fn residuals_are_nonnegative_under_ordering() {
        let sup = SuperSolution::new(&canonical(), 2.3, None, 1.0).unwrap();
        for k in 0..400 {
            let y = -10.0 + 0.1 * k as f64;
            let v_actual = sup.eval_v(y); // worst admissible case
            assert!(sup.residual_u(y, v_actual) >= 0.0);
            assert!(sup.residual_v(y) >= 0.0);
        }
    }

    #[test]
    fn covers_step_data() {
        let sup = SuperSolution::new(&canonical(), 2.3, None, 1.0).unwrap();
        for k in 0..200 {
            let y = -20.0 + 0.2 * k as f64;
            let u0 = if y <= 0.0 { 1.0 } else { 0.0 };
            let v0 = u0;
            assert!(sup.eval_u(y) >= u0);
            assert!(sup.eval_v(y) >= v0);
        }
    }

    #[test]
    fn rejects_speeds_at_or_below_the_collision() {
        let p = canonical();
        // At the anomalous speed the steep v-root hits the weak u-root and
        // Du vanishes; below it Du is positive there.
        assert!(matches!(
            SuperSolution::new(&p, 2.05, None, 1.0),
            Err(Error::OutOfRegime(_))
        ));
        assert!(matches!(
            SuperSolution::new(&p, 1.5, None, 1.0),
            Err(Error::SubcriticalSpeed { .. })
        ));
    }

    #[test]
    fn small_c_u_is_caught() {
        // At s = 4 the coupling amplitude kappa drops below the plateau, so a
        // tiny c_u puts the corner inside the v-plateau region.
        let err = SuperSolution::new(&canonical(), 4.0, Some(1e-3), 1.0).unwrap_err();
        assert!(matches!(err, Error::CuTooSmall { .. }));
        assert!(SuperSolution::new(&canonical(), 4.0, None, 1.0).is_ok());
    }
}
