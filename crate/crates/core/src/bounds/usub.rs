//! Time-decaying lower bound for u whose edge outruns the scalar front.
//!
//! Work in the frame `y = x - sigma t` for a speed `sigma` strictly between
//! the scalar front speed `s` of interest and the anomalous collision speed.
//! Let `U` be the monotone front of the uncoupled u-equation at speed `s`,
//! `a = nu_u^+(sigma)` the weak u-decay and `b = nu_v^-(sigma)` the steep
//! v-decay (in this window `a < b < 0`). The bound is glued from three
//! pieces:
//!
//! ```text
//!   y <= 0:             U(y + (sigma - s) t - r)            (receding front)
//!   0 < y <= Theta(t):  g(t) psi(t, y),  g(t) = U((sigma-s) t - r),
//!                       psi = c1(t) e^{a y} - B e^{b y} e^{-delta t},
//!   y > Theta(t):       0,
//! ```
//!
//! with `D = d b^2 + sigma b + alpha + delta`, `B = beta / D`,
//! `c1 = 1 + B e^{-delta t}` (which makes `psi(t, 0) = 1`, so the splice is
//! continuous), and `Theta` the zero of `psi`. Because `a` is an exact root
//! of the u-symbol at `lambda = 0`, the residual of the middle piece
//! collapses to
//!
//! ```text
//!   N = g' psi + g c1' e^{a y} + g beta e^{b y - delta t}
//!       + alpha (g psi)^2 - beta v,
//! ```
//!
//! and the outer pieces leave `-beta v <= 0` exactly. The only genuinely
//! positive term is `g beta e^{b y - delta t}`; ahead of the v-credit wedge
//! it is overwhelmed by `g' psi < 0`, and inside the wedge it is paid for by
//! `beta v >= beta e^{b y - delta t}` (leaving `beta e^{b y - delta t}(g-1)`,
//! negative as soon as `g < 1`). The splice at `y = 0` is a convex corner
//! only once the outer front is steeper than the inner envelope — the kink
//! margin below — which caps how early the bound may be switched on.

use crate::error::{Error, Result};
use crate::front::FrontProfile;
use crate::linear::{nu_u_real, nu_v_real};
use crate::params::Params;

/// The decay rate `delta` for which the envelope crossing `Theta(t)` moves
/// at exactly the wedge-midpoint slope `sqrt(sigma^2 - 4)`:
/// `delta_crit = sqrt(sigma^2 - 4) (nu_v^-(sigma) - nu_u^+(sigma))`.
/// Positive precisely while `sigma` is below the anomalous collision speed.
pub fn critical_delta(p: &Params, sigma: f64) -> Result<f64> {
    let (a, _) = nu_u_real(p, sigma, 0.0).ok_or(Error::SubcriticalSpeed {
        s: sigma,
        s_min: p.speed_u(),
    })?;
    let (_, b) = nu_v_real(sigma, 0.0).ok_or(Error::SubcriticalSpeed {
        s: sigma,
        s_min: 2.0,
    })?;
    Ok((sigma * sigma - 4.0).sqrt() * (b - a))
}

#[derive(Debug, Clone)]
pub struct USubSolution {
    pub params: Params,
    /// Speed of the underlying scalar front.
    pub s: f64,
    /// Frame speed, `s < sigma <` anomalous speed.
    pub sigma: f64,
    /// Temporal decay of the coupling credit.
    pub delta: f64,
    /// Front offset: `g(t) = U((sigma - s) t - r)`.
    pub r: f64,
    /// Weak u-decay `nu_u^+(sigma)`.
    pub a: f64,
    /// Steep v-decay `nu_v^-(sigma)`.
    pub b: f64,
    /// `d b^2 + sigma b + alpha + delta`.
    pub dcoef: f64,
    /// Coupling amplitude `beta / dcoef`.
    pub bcoef: f64,
    front: FrontProfile,
}

impl USubSolution {
    pub fn new(
        p: &Params,
        front: FrontProfile,
        sigma: f64,
        delta: f64,
        r: f64,
    ) -> Result<Self> {
        let s = front.speed;
        if !(sigma > s) {
            return Err(Error::InvalidParams(format!(
                "frame speed {sigma} must exceed the front speed {s}"
            )));
        }
        if !(delta > 0.0) {
            return Err(Error::InvalidParams(format!(
                "credit decay delta = {delta} must be positive"
            )));
        }
        let (a, _) = nu_u_real(p, sigma, 0.0).ok_or(Error::SubcriticalSpeed {
            s: sigma,
            s_min: p.speed_u(),
        })?;
        let (_, b) = nu_v_real(sigma, 0.0).ok_or(Error::SubcriticalSpeed {
            s: sigma,
            s_min: 2.0,
        })?;
        if !(b > a) {
            return Err(Error::OutOfRegime(format!(
                "frame speed {sigma} is not below the collision speed \
                 (nu_v^- = {b} has crossed nu_u^+ = {a})"
            )));
        }
        let dcoef = p.d * b * b + sigma * b + p.alpha + delta;
        if dcoef <= 0.0 {
            return Err(Error::NonpositiveD { value: dcoef });
        }
        Ok(USubSolution {
            params: *p,
            s,
            sigma,
            delta,
            r,
            a,
            b,
            dcoef,
            bcoef: p.beta / dcoef,
            front: front.clone(),
        })
    }

    /// Same bound with a different front offset (used while searching for
    /// the earliest admissible switch-on time).
    pub fn with_offset(&self, r: f64) -> Self {
        let mut out = self.clone();
        out.r = r;
        out
    }

    /// Offset that makes `g(t_anchor) = g_max`.
    pub fn offset_for(front: &FrontProfile, sigma: f64, t_anchor: f64, g_max: f64) -> Result<f64> {
        Ok((sigma - front.speed) * t_anchor - front.y_at_level(g_max)?)
    }

    /// Front argument `(sigma - s) t - r`.
    pub fn xi(&self, t: f64) -> f64 {
        (self.sigma - self.s) * t - self.r
    }

    /// Amplitude `g(t) = U(xi(t))`, decreasing in `t`.
    pub fn g(&self, t: f64) -> f64 {
        self.front.eval(self.xi(t))
    }

    pub fn g_deriv(&self, t: f64) -> f64 {
        (self.sigma - self.s) * self.front.eval_deriv(self.xi(t))
    }

    pub fn c1(&self, t: f64) -> f64 {
        1.0 + self.bcoef * (-self.delta * t).exp()
    }

    /// Envelope `psi(t, y) = c1 e^{a y} - B e^{b y - delta t}`; equals 1 at
    /// `y = 0` and crosses zero at `theta_plus(t)`.
    pub fn psi(&self, t: f64, y: f64) -> f64 {
        self.c1(t) * (self.a * y).exp()
            - self.bcoef * (self.b * y - self.delta * t).exp()
    }

    /// Zero of the envelope:
    /// `Theta(t) = ln((D / beta) e^{delta t} + 1) / (b - a)`, computed in log
    /// form so it never overflows; infinite when `beta = 0`.
    pub fn theta_plus(&self, t: f64) -> f64 {
        if self.params.beta == 0.0 {
            return f64::INFINITY;
        }
        let log_ratio = (self.dcoef / self.params.beta).ln();
        (log_ratio + self.delta * t + f64::ln_1p((-self.delta * t - log_ratio).exp()))
            / (self.b - self.a)
    }

    /// The glued bound itself.
    pub fn eval(&self, t: f64, y: f64) -> f64 {
        if y <= 0.0 {
            self.front.eval(y + self.xi(t))
        } else if y < self.theta_plus(t) {
            (self.g(t) * self.psi(t, y)).max(0.0)
        } else {
            0.0
        }
    }

    /// Upper bound for the residual `N` at `(t, y)` given a certified lower
    /// bound `v_lower <= v` at the same point. On the outer pieces the
    /// equations hold exactly and only `-beta v_lower` remains.
    pub fn residual_bound(&self, t: f64, y: f64, v_lower: f64) -> f64 {
        if y <= 0.0 || y >= self.theta_plus(t) {
            return -self.params.beta * v_lower;
        }
        let g = self.g(t);
        let psi = self.psi(t, y);
        let ea = (self.a * y).exp();
        let credit = (self.b * y - self.delta * t).exp();
        let c1_deriv = -self.delta * self.bcoef * (-self.delta * t).exp();
        let gpsi = g * psi;
        self.g_deriv(t) * psi
            + g * c1_deriv * ea
            + g * self.params.beta * credit
            + self.params.alpha * gpsi * gpsi
            - self.params.beta * v_lower
    }

    /// Slope gain across the splice at `y = 0` (inner minus outer). The glue
    /// is a convex corner — hence admissible — iff this is `>= 0`.
    pub fn kink_margin(&self, t: f64) -> f64 {
        let inner = self.g(t)
            * (self.a * self.c1(t) - self.b * self.bcoef * (-self.delta * t).exp());
        let outer = self.front.eval_deriv(self.xi(t));
        inner - outer
    }

    /// Closed-form estimate of when the kink margin turns positive, obtained
    /// by replacing the front's logarithmic slope with its tail limit
    /// `nu_u^+(s)`. For fronts close to critical the orbit still carries
    /// strong-mode content at moderate depth, which flattens the outer slope
    /// and pushes the true flip later — treat this as a scan starting point
    /// and trust [`USubSolution::kink_margin`] for the actual condition.
    pub fn kink_threshold_estimate(&self) -> Result<f64> {
        let (a_s, _) = nu_u_real(&self.params, self.s, 0.0).ok_or(Error::SubcriticalSpeed {
            s: self.s,
            s_min: self.params.speed_u(),
        })?;
        let k = (self.a - a_s) / ((self.b - self.a) * self.bcoef);
        if !(k > 0.0 && k < 1.0) {
            // Margin already positive (or never positive) in the tail limit.
            return Ok(0.0);
        }
        Ok(-k.ln() / self.delta)
    }

    /// Asymptotic crossing offset `Theta(t) - delta t / (b - a)`.
    pub fn theta_offset(&self) -> f64 {
        (self.dcoef / self.params.beta).ln() / (self.b - self.a)
    }

    pub fn front(&self) -> &FrontProfile {
        &self.front
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::front::{solve_front, FrontOptions};
    use approx::assert_relative_eq;

    fn canonical() -> Params {
        Params::new(0.5, 2.0, 1.0).unwrap()
    }

    fn build(r: f64) -> USubSolution {
        let p = canonical();
        let front = solve_front(&p, 2.02, &FrontOptions::default()).unwrap();
        let delta = critical_delta(&p, 2.1).unwrap();
        USubSolution::new(&p, front, 2.1, delta, r).unwrap()
    }

    #[test]
    fn critical_delta_and_coefficients() {
        let p = canonical();
        let delta = critical_delta(&p, 2.1).unwrap();
        assert_relative_eq!(delta, 0.057328, epsilon = 1e-5);
        let sub = build(0.0);
        assert_relative_eq!(sub.a, -1.4596875762567151, epsilon = 1e-14);
        assert_relative_eq!(sub.b, -1.3701562118716424, epsilon = 1e-14);
        assert_relative_eq!(sub.dcoef, 0.118664, epsilon = 1e-5);
        assert_relative_eq!(sub.bcoef, 8.4271, epsilon = 1e-3);
    }

    #[test]
    fn envelope_normalisation_and_crossing() {
        let sub = build(3.0);
        for &t in &[0.0, 5.0, 40.0, 200.0] {
            assert_relative_eq!(sub.psi(t, 0.0), 1.0, epsilon = 1e-14);
            let theta = sub.theta_plus(t);
            assert!(
                sub.psi(t, theta).abs() < 1e-12,
                "psi({t}, theta) = {:.3e}",
                sub.psi(t, theta)
            );
            // Continuity of the splice at y = 0.
            assert_relative_eq!(sub.eval(t, -1e-13), sub.eval(t, 1e-13), epsilon = 1e-9);
            assert_eq!(sub.eval(t, theta + 1.0), 0.0);
        }
    }

    #[test]
    fn crossing_moves_at_the_wedge_slope() {
        // With delta = delta_crit the crossing speed in the frame is exactly
        // sqrt(sigma^2 - 4).
        let sub = build(0.0);
        let slope = (sub.theta_plus(2000.0) - sub.theta_plus(1000.0)) / 1000.0;
        assert_relative_eq!(slope, (2.1_f64 * 2.1 - 4.0).sqrt(), epsilon = 1e-9);
        let offset = sub.theta_plus(1000.0) - sub.delta * 1000.0 / (sub.b - sub.a);
        assert_relative_eq!(offset, sub.theta_offset(), epsilon = 1e-9);
        assert_relative_eq!(sub.theta_offset(), -23.807, epsilon = 1e-3);
    }

    #[test]
    fn residual_formula_matches_finite_differences() {
        // The closed-form residual relies on exact root cancellations; verify
        // it against a finite-difference application of the full operator to
        // the evaluated bound, at points inside the middle piece.
        let sub = build(5.0);
        let p = canonical();
        let v_lower = 0.3;
        let (ht, hy) = (2e-6, 2e-6);
        for &(t, y) in &[(30.0, 2.0), (30.0, 8.0), (60.0, 1.0), (60.0, 12.0)] {
            let w = |tt: f64, yy: f64| sub.g(tt) * sub.psi(tt, yy);
            let wt = (w(t + ht, y) - w(t - ht, y)) / (2.0 * ht);
            let wy = (w(t, y + hy) - w(t, y - hy)) / (2.0 * hy);
            let wyy = (w(t, y + hy) - 2.0 * w(t, y) + w(t, y - hy)) / (hy * hy);
            let u = w(t, y);
            let n_fd = wt - p.d * wyy - 2.1 * wy - p.alpha * u * (1.0 - u)
                - p.beta * v_lower;
            let n_closed = sub.residual_bound(t, y, v_lower);
            assert_relative_eq!(n_fd, n_closed, epsilon = 1e-6, max_relative = 2e-4);
        }
    }

    #[test]
    fn outer_pieces_leave_only_the_coupling_term() {
        let sub = build(5.0);
        assert_eq!(sub.residual_bound(30.0, -2.0, 0.25), -0.25);
        let beyond = sub.theta_plus(30.0) + 1.0;
        assert_eq!(sub.residual_bound(30.0, beyond, 0.1), -0.1);
        assert_eq!(sub.residual_bound(30.0, -2.0, 0.0), 0.0);
    }

    #[test]
    fn kink_margin_flips_after_a_transient() {
        let p = canonical();
        let front = solve_front(&p, 2.02, &FrontOptions::default()).unwrap();
        let r = USubSolution::offset_for(&front, 2.1, 17.5, 0.01).unwrap();
        let delta = critical_delta(&p, 2.1).unwrap();
        let sub = USubSolution::new(&p, front, 2.1, delta, r).unwrap();

        assert!(sub.kink_margin(2.0) < 0.0, "early splice must be rejected");
        assert!(sub.kink_margin(30.0) > 0.0);
        assert!(sub.kink_margin(100.0) > 0.0);

        let t_star = sub.kink_threshold_estimate().unwrap();
        assert_relative_eq!(t_star, 17.494, epsilon = 1e-2);
        // The estimate uses the pure tail slope; the real flip lands later
        // (around t = 29 here) because this near-critical front is still
        // visibly flatter than its tail limit at the 1e-2 level.
        assert!(sub.kink_margin(t_star) < 0.0);
        assert!(sub.kink_margin(2.0 * t_star) > 0.0);
    }

    #[test]
    fn residual_is_negative_along_both_credit_regions() {
        // Closed-form spot check of the two middle regions at late times,
        // using the nominal wedge edge (sqrt(sigma^2-4) - 2 sqrt(delta)) t:
        // ahead of it with no credit, behind it with the exponential credit.
        let p = canonical();
        let front = solve_front(&p, 2.02, &FrontOptions::default()).unwrap();
        let delta = critical_delta(&p, 2.1).unwrap();
        for &t_anchor in &[150.0_f64, 260.0] {
            let r = USubSolution::offset_for(&front, 2.1, t_anchor, 0.01).unwrap();
            let sub = USubSolution::new(&p, front.clone(), 2.1, delta, r).unwrap();
            let t = t_anchor;
            let tau_nominal = ((2.1_f64 * 2.1 - 4.0).sqrt() - 2.0 * delta.sqrt()) * t;
            let theta = sub.theta_plus(t);
            assert!(tau_nominal < theta);
            for k in 1..=200 {
                let y_b = tau_nominal * k as f64 / 200.0;
                let n_b = sub.residual_bound(t, y_b, 0.0);
                assert!(n_b < 0.0, "no-credit region: N = {n_b:.3e} at y = {y_b:.3}");

                let y_c = tau_nominal + (theta - tau_nominal) * k as f64 / 200.0;
                let credit = (sub.b * y_c - delta * t).exp();
                let n_c = sub.residual_bound(t, y_c, credit);
                assert!(n_c < 0.0, "credit region: N = {n_c:.3e} at y = {y_c:.3}");
            }
        }
    }
}
