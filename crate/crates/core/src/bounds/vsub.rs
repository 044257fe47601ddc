//! Lower bound for the v-field ahead of its front.
//!
//! In a frame `y = x - sigma t` moving faster than the v-front (`sigma > 2`),
//! seed a compactly supported profile `q0 <= v` at time zero and evolve it
//! with the *linear* equation `q_t = q_yy + sigma q_y + q` under an absorbing
//! (Dirichlet) condition at `y = 0`. The solution has the closed form
//!
//! ```text
//!   q(t, y) = e^{-omega t - sigma y / 2} / sqrt(4 pi t)
//!             * Int_0^inf [e^{-(y-y')^2/4t} - e^{-(y+y')^2/4t}]
//!                         e^{sigma y'/2} q0(y') dy',
//! ```
//!
//! with `omega = sigma^2/4 - 1 > 0` — the image-charge heat solution after
//! removing the drift with the weight `e^{sigma y'/2}` (the weight on the
//! *initial data* is easy to drop by accident and everything downstream
//! silently degrades: without it `q` does not solve the equation).
//!
//! The nonlinearity `-v^2` is absorbed by the amplitude `A(t)` solving
//! `A' = -C e^{-omega t} A^2` against a uniform bound `q e^{omega t} <= C`:
//! `v_lower = A(t) q(t, y)` then sits below `v` for all time.
//!
//! The payoff is the *wedge*: the set of rays `y = 2 z t` on which
//! `A q >= e^{nu y - delta t}` for a given decay pair `(nu, delta)`. Writing
//! `rho = 1/sqrt(t)`, membership reduces to `F(rho, z) <= 0` for an explicit
//! `F`, and the wedge boundaries are the two roots `z_-(rho) < z_+(rho)`. As
//! `rho -> 0` they tend to `z_pm = sqrt(sigma^2 - 4)/2 +- sqrt(delta)` (for
//! `nu` the steep v-root), so the wedge midpoint moves at lab speed
//! `sigma + sqrt(sigma^2 - 4)` — the group velocity of the mode it protects.

use crate::error::{Error, Result};
use crate::interp::CubicHermite;
use crate::quad::{integrate_with_knots, QuadConfig};

/// Compactly supported, non-negative seed profile.
#[derive(Debug, Clone)]
pub struct SeedProfile {
    lo: f64,
    hi: f64,
    sup: f64,
    shape: SeedShape,
}

#[derive(Debug, Clone)]
enum SeedShape {
    /// `h cos^2(pi (y - c) / w)` on the support, zero outside.
    RaisedCosine { height: f64 },
    /// Shape-preserving interpolation through samples, zero outside.
    Samples(CubicHermite),
}

impl SeedProfile {
    pub fn raised_cosine(lo: f64, hi: f64, height: f64) -> Result<Self> {
        if !(hi > lo && lo >= 0.0) {
            return Err(Error::DataOutOfRange(format!(
                "seed support [{lo}, {hi}] must be ordered and non-negative"
            )));
        }
        if !(height > 0.0 && height.is_finite()) {
            return Err(Error::DataOutOfRange(format!(
                "seed height {height} must be positive"
            )));
        }
        Ok(SeedProfile {
            lo,
            hi,
            sup: height,
            shape: SeedShape::RaisedCosine { height },
        })
    }

    /// Seed through `(y, q)` samples; the samples must start and end at zero
    /// so the extension by zero stays continuous.
    pub fn from_samples(ys: Vec<f64>, qs: Vec<f64>) -> Result<Self> {
        if qs.iter().any(|&q| q < 0.0) {
            return Err(Error::DataOutOfRange("seed samples must be >= 0".into()));
        }
        if qs.first().is_none_or(|&q| q != 0.0) || qs.last().is_none_or(|&q| q != 0.0) {
            return Err(Error::DataOutOfRange(
                "seed samples must start and end at exactly zero".into(),
            ));
        }
        let lo = ys[0];
        let hi = *ys.last().unwrap();
        if lo < 0.0 {
            return Err(Error::DataOutOfRange(
                "seed support must lie in y >= 0".into(),
            ));
        }
        let sup = qs.iter().cloned().fold(0.0, f64::max);
        let interp = CubicHermite::pchip(ys, qs)?;
        Ok(SeedProfile {
            lo,
            hi,
            sup,
            shape: SeedShape::Samples(interp),
        })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn sup(&self) -> f64 {
        self.sup
    }

    pub fn eval(&self, y: f64) -> f64 {
        if y <= self.lo || y >= self.hi {
            return 0.0;
        }
        match &self.shape {
            SeedShape::RaisedCosine { height } => {
                let c = 0.5 * (self.lo + self.hi);
                let w = self.hi - self.lo;
                let phase = std::f64::consts::PI * (y - c) / w;
                height * phase.cos().powi(2)
            }
            SeedShape::Samples(interp) => interp.eval(y).max(0.0),
        }
    }

    /// Quadrature breakpoints covering the support.
    fn knots(&self) -> Vec<f64> {
        match &self.shape {
            SeedShape::RaisedCosine { .. } => {
                vec![self.lo, 0.5 * (self.lo + self.hi), self.hi]
            }
            SeedShape::Samples(interp) => interp.xs().to_vec(),
        }
    }
}

/// The evolved lower bound `A(t) q(t, y)` and its wedge machinery.
#[derive(Debug, Clone)]
pub struct VSubSolution {
    pub sigma: f64,
    /// Essential decay rate `sigma^2/4 - 1`.
    pub omega: f64,
    /// Initial amplitude (the seed itself is `a0 * q0` at `t = 0`).
    pub a0: f64,
    /// Uniform bound `sup_y q(t, y) e^{omega t} <= c_bound`.
    pub c_bound: f64,
    pub seed: SeedProfile,
    quad: QuadConfig,
}

impl VSubSolution {
    /// Build the bound; scans `q e^{omega t}` over a generous `(t, y)` grid to
    /// produce `c_bound` (sampled maximum with a 1.5x safety factor — the
    /// surface is smooth and broad, so sampling is reliable here).
    pub fn new(sigma: f64, seed: SeedProfile, a0: f64) -> Result<Self> {
        if !(sigma > 2.0) {
            return Err(Error::OutOfRegime(format!(
                "the co-moving frame must outrun the v-front: sigma = {sigma} <= 2"
            )));
        }
        if !(a0 > 0.0 && a0 <= 1.0) {
            return Err(Error::DataOutOfRange(format!(
                "initial amplitude {a0} must lie in (0, 1]"
            )));
        }
        let omega = sigma * sigma / 4.0 - 1.0;
        let mut vs = VSubSolution {
            sigma,
            omega,
            a0,
            c_bound: f64::NAN,
            seed,
            quad: QuadConfig::default(),
        };
        // sup_y q(t, y) e^{omega t}: tends to sup q0 as t -> 0 and decays
        // like t^{-3/2} for large t, so the grid brackets the maximum.
        let mut raw: f64 = vs.seed.sup();
        let (_, hi) = vs.seed.support();
        let n_t = 48;
        for i in 0..=n_t {
            let t = 0.1 * (50.0_f64 / 0.1).powf(i as f64 / n_t as f64);
            let y_max = hi + 20.0 * t.sqrt();
            for j in 0..=240 {
                let y = y_max * j as f64 / 240.0;
                raw = raw.max(vs.kernel_q(t, y)? * (omega * t).exp());
            }
        }
        vs.c_bound = 1.5 * raw;
        Ok(vs)
    }

    /// The linear Dirichlet solution `q(t, y)` for `t > 0`, `y >= 0`.
    ///
    /// The image-pair difference is computed as
    /// `e^{-(y-y')^2/4t} (-expm1(-y y'/t))`, which is stable both for
    /// `y y'/t` tiny (no cancellation) and huge (no overflow).
    pub fn kernel_q(&self, t: f64, y: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::DataOutOfRange(format!(
                "kernel defined for t > 0, got {t}"
            )));
        }
        if y < 0.0 {
            return Err(Error::DataOutOfRange(format!(
                "kernel defined for y >= 0, got {y}"
            )));
        }
        let sigma = self.sigma;
        let knots = self.seed.knots();
        let (integral, _) = integrate_with_knots(
            |yp| {
                let gauss = (-(y - yp) * (y - yp) / (4.0 * t)).exp();
                let image = -f64::exp_m1(-y * yp / t);
                gauss * image * (0.5 * sigma * yp).exp() * self.seed.eval(yp)
            },
            &knots,
            &self.quad,
        )?;
        let prefactor = (-self.omega * t - 0.5 * sigma * y).exp()
            / (4.0 * std::f64::consts::PI * t).sqrt();
        Ok(prefactor * integral)
    }

    /// Amplitude `A(t) = a0 omega / (omega + c_bound a0 (1 - e^{-omega t}))`,
    /// the exact solution of `A' = -c_bound e^{-omega t} A^2`, `A(0) = a0`.
    pub fn amplitude(&self, t: f64) -> f64 {
        self.a0 * self.omega
            / (self.omega + self.c_bound * self.a0 * (-f64::exp_m1(-self.omega * t)))
    }

    /// The certified lower bound for v at frame time `t`, offset `y`.
    pub fn eval(&self, t: f64, y: f64) -> Result<f64> {
        Ok(self.amplitude(t) * self.kernel_q(t, y)?)
    }

    /// Scaled profile `H(rho, z)` entering the wedge function: with
    /// `t = rho^{-2}` and `y = 2 z t`,
    /// `A q = e^{-t (omega + sigma z + z^2)} rho H(rho, z)`.
    pub fn scaled_profile(&self, rho: f64, z: f64) -> Result<f64> {
        let t = 1.0 / (rho * rho);
        let knots = self.seed.knots();
        let (integral, _) = integrate_with_knots(
            |yp| {
                (z * yp).sinh()
                    * (-(yp * rho) * (yp * rho) / 4.0).exp()
                    * (0.5 * self.sigma * yp).exp()
                    * self.seed.eval(yp)
            },
            &knots,
            &self.quad,
        )?;
        Ok(self.amplitude(t) / std::f64::consts::PI.sqrt() * integral)
    }

    /// Wedge membership function: `A q >= e^{nu y - delta t}` on the ray
    /// `y = 2 z t` iff `F(rho, z) <= 0` where
    ///
    /// ```text
    ///   F = z^2 + (sigma + 2 nu) z - (1 - sigma^2/4 + delta)
    ///       - rho^2 ln(rho H(rho, z)).
    /// ```
    pub fn wedge_f(&self, rho: f64, z: f64, nu: f64, delta: f64) -> Result<f64> {
        let h = self.scaled_profile(rho, z)?;
        let log_term = if h > 0.0 {
            (rho * h).ln()
        } else {
            return Ok(f64::INFINITY);
        };
        Ok(z * z + (self.sigma + 2.0 * nu) * z - (1.0 - self.sigma * self.sigma / 4.0 + delta)
            - rho * rho * log_term)
    }

    /// Ray-slope roots `(z_-, z_+)` of `F(rho, .) = 0` at `t` for the decay
    /// pair `(nu, delta)`; the wedge itself is `y in [2 t z_-, 2 t z_+]`.
    /// Fails with [`Error::NoBracket`] while the wedge has not opened yet
    /// (early times, where the `rho^2 ln` correction still overwhelms
    /// `delta`).
    pub fn wedge_rays(&self, t: f64, nu: f64, delta: f64) -> Result<(f64, f64)> {
        if !(t > 0.0 && delta > 0.0) {
            return Err(Error::DataOutOfRange(format!(
                "wedge needs t > 0 and delta > 0, got t = {t}, delta = {delta}"
            )));
        }
        let rho = 1.0 / t.sqrt();
        let zm = -0.5 * (self.sigma + 2.0 * nu);
        if zm <= 0.0 {
            return Err(Error::OutOfRegime(format!(
                "mode nu = {nu} is not ahead of the frame (needs nu < -sigma/2)"
            )));
        }
        let f_mid = self.wedge_f(rho, zm, nu, delta)?;
        if f_mid >= 0.0 {
            return Err(Error::NoBracket {
                what: format!("wedge interior at t = {t} (F(midpoint) = {f_mid:.3e})"),
            });
        }

        // Left root: F -> +inf as z -> 0+.
        let mut z_out = zm;
        loop {
            z_out *= 0.5;
            if self.wedge_f(rho, z_out, nu, delta)? > 0.0 {
                break;
            }
            if z_out < 1e-300 {
                return Err(Error::NoBracket {
                    what: "left wedge edge".into(),
                });
            }
        }
        let z_minus = bisect_sign_change(
            |z| self.wedge_f(rho, z, nu, delta),
            z_out,
            zm,
            1e-13 * zm.max(1.0),
        )?;

        // Right root: the quadratic part takes over for large z.
        let mut z_hi = zm + delta.sqrt().max(0.25);
        for _ in 0..80 {
            if self.wedge_f(rho, z_hi, nu, delta)? > 0.0 {
                break;
            }
            z_hi += delta.sqrt().max(0.25);
        }
        if self.wedge_f(rho, z_hi, nu, delta)? <= 0.0 {
            return Err(Error::NoBracket {
                what: "right wedge edge".into(),
            });
        }
        let z_plus = bisect_sign_change(
            |z| self.wedge_f(rho, z, nu, delta),
            zm,
            z_hi,
            1e-13 * z_hi.max(1.0),
        )?;

        Ok((2.0 * t * z_minus, 2.0 * t * z_plus))
    }

    /// Earliest time the wedge for `(nu, delta)` is open, to absolute
    /// resolution `res`. Searches by doubling up to `horizon`, then bisects.
    pub fn wedge_opening_time(&self, nu: f64, delta: f64, res: f64, horizon: f64) -> Result<f64> {
        let mut hi = 1.0;
        let mut lo = 0.0;
        while self.wedge_rays(hi, nu, delta).is_err() {
            lo = hi;
            hi *= 2.0;
            if hi > horizon {
                return Err(Error::NotFoundWithinHorizon {
                    what: "wedge opening time".into(),
                    horizon,
                });
            }
        }
        while hi - lo > res {
            let mid = 0.5 * (lo + hi);
            if self.wedge_rays(mid, nu, delta).is_ok() {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

fn bisect_sign_change(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<f64> {
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoBracket {
            what: format!("sign change on [{lo}, {hi}]"),
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
