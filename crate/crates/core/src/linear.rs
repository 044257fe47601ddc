//! Linear analysis at the leading edge.
//!
//! Linearizing around the unstable state `(u, v) = (0, 0)` in a frame moving
//! with speed `s` and inserting `e^{nu y + lambda t}` gives the dispersion
//! relation as a product of two factors,
//!
//! ```text
//!   D(nu, lambda; s) = Du * Dv,
//!   Du = d nu^2 + s nu + alpha - lambda,
//!   Dv =   nu^2 + s nu + 1     - lambda,
//! ```
//!
//! because the coupling is triangular (v does not see u). The u-equation also
//! feels a *mixed* mode where one root of `Du` collides with one root of `Dv`:
//! subtracting the factors shows any common root must satisfy
//! `(d - 1) nu^2 + (alpha - 1) = 0`, independently of `s` and `lambda`. When
//! that collision happens at `lambda = 0` between roots that approach the
//! integration contour from opposite sides (a *pinched* double root), it acts
//! exactly like a classical marginal-stability point and can select a speed
//! faster than both single-equation speeds `2 sqrt(d alpha)` and `2`.
//!
//! [`classify`] partitions the `(d, alpha)` plane by which mechanism wins and
//! [`predict_speeds`] turns that into a concrete speed prediction.

use crate::error::{Error, Result};
use crate::params::Params;
use num_complex::Complex64;
use serde::Serialize;

/// Discriminants smaller than this (in absolute value) are treated as exact
/// double roots: the square root is snapped to zero so the two branches
/// coincide instead of acquiring a spurious ~1e-8 imaginary part.
pub const DOUBLE_ROOT_TOL: f64 = 1e-14;

/// Relative tolerance for deciding that parameters sit *on* a regime boundary.
pub const REGIME_BOUNDARY_TOL: f64 = 1e-12;

/// Which branch of which dispersion factor a root belongs to. `Plus` carries
/// the `+` sign in the quadratic formula; as `Re lambda -> +infinity` the
/// `Plus` roots escape to `+infinity` and the `Minus` roots to `-infinity`,
/// so a collision between a `Plus` and a `Minus` root pinches the contour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RootLabel {
    UPlus,
    UMinus,
    VPlus,
    VMinus,
}

impl RootLabel {
    pub fn is_plus(self) -> bool {
        matches!(self, RootLabel::UPlus | RootLabel::VPlus)
    }
}

/// First dispersion factor `d nu^2 + s nu + alpha - lambda`.
pub fn d_u(p: &Params, s: f64, nu: Complex64, lambda: Complex64) -> Complex64 {
    p.d * nu * nu + s * nu + p.alpha - lambda
}

/// Second dispersion factor `nu^2 + s nu + 1 - lambda`.
pub fn d_v(s: f64, nu: Complex64, lambda: Complex64) -> Complex64 {
    nu * nu + s * nu + 1.0 - lambda
}

/// Full dispersion function, the product of the two factors.
pub fn dispersion(p: &Params, s: f64, nu: Complex64, lambda: Complex64) -> Complex64 {
    d_u(p, s, nu, lambda) * d_v(s, nu, lambda)
}

/// Roots of the u-factor, `(plus, minus)` branch.
pub fn nu_u(p: &Params, s: f64, lambda: Complex64) -> (Complex64, Complex64) {
    let disc = Complex64::new(s * s - 4.0 * p.d * p.alpha, 0.0) + 4.0 * p.d * lambda;
    let sq = if disc.norm() < DOUBLE_ROOT_TOL {
        Complex64::new(0.0, 0.0)
    } else {
        disc.sqrt()
    };
    let two_a = 2.0 * p.d;
    (
        (Complex64::new(-s, 0.0) + sq) / two_a,
        (Complex64::new(-s, 0.0) - sq) / two_a,
    )
}

/// Roots of the v-factor, `(plus, minus)` branch.
pub fn nu_v(s: f64, lambda: Complex64) -> (Complex64, Complex64) {
    let disc = Complex64::new(s * s - 4.0, 0.0) + 4.0 * lambda;
    let sq = if disc.norm() < DOUBLE_ROOT_TOL {
        Complex64::new(0.0, 0.0)
    } else {
        disc.sqrt()
    };
    (
        (Complex64::new(-s, 0.0) + sq) / 2.0,
        (Complex64::new(-s, 0.0) - sq) / 2.0,
    )
}

/// Real roots of the u-factor at real `lambda`, or `None` when they are a
/// complex pair.
pub fn nu_u_real(p: &Params, s: f64, lambda: f64) -> Option<(f64, f64)> {
    let disc = s * s - 4.0 * p.d * (p.alpha - lambda);
    real_pair(disc, s, 2.0 * p.d)
}

/// Real roots of the v-factor at real `lambda`, or `None` when complex.
pub fn nu_v_real(s: f64, lambda: f64) -> Option<(f64, f64)> {
    let disc = s * s - 4.0 * (1.0 - lambda);
    real_pair(disc, s, 2.0)
}

fn real_pair(disc: f64, s: f64, two_a: f64) -> Option<(f64, f64)> {
    if disc.abs() < DOUBLE_ROOT_TOL {
        let r = -s / two_a;
        Some((r, r))
    } else if disc < 0.0 {
        None
    } else {
        let sq = disc.sqrt();
        Some(((-s + sq) / two_a, (-s - sq) / two_a))
    }
}

/// Speed at which the u-mode with decay rate `nu < 0` is marginally stable
/// (`Du(nu, 0; s) = 0` solved for `s`): `-d nu - alpha / nu`. Its minimum over
/// `nu < 0` is the scalar spreading speed `2 sqrt(d alpha)`.
pub fn envelope_velocity_u(p: &Params, nu: f64) -> f64 {
    -p.d * nu - p.alpha / nu
}

/// Counterpart for the v-factor: `-nu - 1/nu`, minimized at `nu = -1` where it
/// equals 2.
pub fn envelope_velocity_v(nu: f64) -> f64 {
    -nu - 1.0 / nu
}

/// Ray speed along which the u-mode `e^{nu x}` dominates a localized
/// superposition (saddle point of `nu c + d nu^2 + alpha` in `nu`).
pub fn group_velocity_u(p: &Params, nu: f64) -> f64 {
    -2.0 * p.d * nu
}

pub fn group_velocity_v(nu: f64) -> f64 {
    -2.0 * nu
}

/// A point where two roots of the dispersion relation collide.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DoubleRoot {
    /// Frame speed at which the collision sits at this `lambda`.
    pub s: f64,
    /// The common spatial decay rate.
    pub nu: f64,
    /// Temporal eigenvalue of the collision in the frame moving at `s`.
    pub lambda: f64,
    /// Branch labels of the two colliding roots.
    pub labels: (RootLabel, RootLabel),
    /// Whether the colliding roots come from opposite sides of the contour
    /// (one `Plus`, one `Minus`), which is what makes the collision dynamically
    /// relevant.
    pub pinched: bool,
}

impl DoubleRoot {
    /// How well the defining equations are satisfied. For a same-factor
    /// collision this is `(|factor|, |d factor / d nu|)`; for a mixed
    /// collision it is `(|Du|, |Dv|)`. Both entries should be at machine
    /// precision for a genuine double root.
    pub fn residual(&self, p: &Params) -> (f64, f64) {
        let nu = Complex64::new(self.nu, 0.0);
        let lambda = Complex64::new(self.lambda, 0.0);
        let u_involved = matches!(self.labels.0, RootLabel::UPlus | RootLabel::UMinus)
            || matches!(self.labels.1, RootLabel::UPlus | RootLabel::UMinus);
        let v_involved = matches!(self.labels.0, RootLabel::VPlus | RootLabel::VMinus)
            || matches!(self.labels.1, RootLabel::VPlus | RootLabel::VMinus);
        match (u_involved, v_involved) {
            (true, true) => (
                d_u(p, self.s, nu, lambda).norm(),
                d_v(self.s, nu, lambda).norm(),
            ),
            (true, false) => (
                d_u(p, self.s, nu, lambda).norm(),
                (2.0 * p.d * self.nu + self.s).abs(),
            ),
            (false, true) => (
                d_v(self.s, nu, lambda).norm(),
                (2.0 * self.nu + self.s).abs(),
            ),
            (false, false) => unreachable!("labels always involve at least one factor"),
        }
    }
}

/// The u-factor's own branch collision at speed `s`: `nu = -s / 2d`,
/// `lambda = alpha - s^2 / 4d`. Always pinched.
pub fn u_double_root(p: &Params, s: f64) -> DoubleRoot {
    DoubleRoot {
        s,
        nu: -s / (2.0 * p.d),
        lambda: p.alpha - s * s / (4.0 * p.d),
        labels: (RootLabel::UPlus, RootLabel::UMinus),
        pinched: true,
    }
}

/// The v-factor's own branch collision at speed `s`: `nu = -s / 2`,
/// `lambda = 1 - s^2 / 4`. Always pinched.
pub fn v_double_root(s: f64) -> DoubleRoot {
    DoubleRoot {
        s,
        nu: -s / 2.0,
        lambda: 1.0 - s * s / 4.0,
        labels: (RootLabel::VPlus, RootLabel::VMinus),
        pinched: true,
    }
}

/// Decay rate of the mixed collision, `nu* = -sqrt((alpha - 1) / (1 - d))`,
/// when that ratio is positive; this is where one u-root meets one v-root,
/// for every frame speed.
pub fn mixed_root_nu(p: &Params) -> Option<f64> {
    if p.d == 1.0 {
        return None;
    }
    let ratio = (p.alpha - 1.0) / (1.0 - p.d);
    if ratio > 0.0 {
        Some(-ratio.sqrt())
    } else {
        None
    }
}

/// The mixed collision at frame speed `s`, with `lambda(s) = nu*^2 + s nu* + 1`
/// and branch labels resolved by matching `nu*` against the explicit roots of
/// each factor at that `lambda`.
pub fn mixed_collision(p: &Params, s: f64) -> Option<DoubleRoot> {
    let nu = mixed_root_nu(p)?;
    let lambda = nu * nu + s * nu + 1.0;
    let label_u = nearest_label(nu_u_real(p, s, lambda), nu, RootLabel::UPlus, RootLabel::UMinus)?;
    let label_v = nearest_label(nu_v_real(s, lambda), nu, RootLabel::VPlus, RootLabel::VMinus)?;
    Some(DoubleRoot {
        s,
        nu,
        lambda,
        labels: (label_u, label_v),
        pinched: label_u.is_plus() != label_v.is_plus(),
    })
}

fn nearest_label(
    roots: Option<(f64, f64)>,
    nu: f64,
    plus: RootLabel,
    minus: RootLabel,
) -> Option<RootLabel> {
    let (rp, rm) = roots?;
    Some(if (nu - rp).abs() <= (nu - rm).abs() {
        plus
    } else {
        minus
    })
}

/// The speed at which the mixed collision sits exactly at `lambda = 0`:
///
/// ```text
///   s_anom = sqrt((alpha - 1) / (1 - d)) + sqrt((1 - d) / (alpha - 1)).
/// ```
///
/// This is a *candidate* invasion speed; whether it is realized depends on the
/// regime (see [`classify`]). By construction it is the u-envelope velocity at
/// `nu*`, hence `>= 2 sqrt(d alpha)`, and the v-envelope velocity at `nu*`,
/// hence `>= 2`.
pub fn anomalous_speed(p: &Params) -> Option<f64> {
    let nu = mixed_root_nu(p)?;
    Some(envelope_velocity_v(nu))
}

/// The mixed collision at `s = s_anom`, where its temporal eigenvalue is zero.
pub fn anomalous_double_root(p: &Params) -> Option<DoubleRoot> {
    let s = anomalous_speed(p)?;
    let root = mixed_collision(p, s)?;
    Some(DoubleRoot {
        lambda: 0.0, // exact by construction; drops the ~1e-16 rounding
        ..root
    })
}

/// Independent pinching check: follow both colliding roots along real
/// `lambda` from far above the collision point down to it, and see whether
/// they connect to branches escaping to opposite infinities. Provided as a
/// cross-check for the label-based criterion in [`mixed_collision`].
pub fn pinched_by_continuation(p: &Params, s: f64) -> Option<bool> {
    let target = mixed_collision(p, s)?;
    let lambda_hi = target.lambda + 10.0 * (1.0 + s * s * (0.25 / p.d + 0.25) + p.alpha);
    let n = 400;
    // At lambda_hi the branches of each factor are far apart and their side
    // of origin is unambiguous. Follow both roots of both factors down to the
    // collision by nearest-neighbor matching at each step.
    let (mut u_hi, mut u_lo) = nu_u_real(p, s, lambda_hi)?;
    let (mut v_hi, mut v_lo) = nu_v_real(s, lambda_hi)?;
    for k in (0..n).rev() {
        let lambda = target.lambda + (lambda_hi - target.lambda) * k as f64 / n as f64;
        let (a, b) = nu_u_real(p, s, lambda)?;
        (u_hi, u_lo) = follow(u_hi, u_lo, a, b);
        let (a, b) = nu_v_real(s, lambda)?;
        (v_hi, v_lo) = follow(v_hi, v_lo, a, b);
    }
    let u_from_plus = (target.nu - u_hi).abs() <= (target.nu - u_lo).abs();
    let v_from_plus = (target.nu - v_hi).abs() <= (target.nu - v_lo).abs();
    Some(u_from_plus != v_from_plus)
}

fn follow(prev_a: f64, prev_b: f64, a: f64, b: f64) -> (f64, f64) {
    // Assign the new root pair to the tracked pair by total displacement.
    if (prev_a - a).abs() + (prev_b - b).abs() <= (prev_a - b).abs() + (prev_b - a).abs() {
        (a, b)
    } else {
        (b, a)
    }
}

/// Parameter regimes of the `(d, alpha)` plane.
///
/// * `I`   — `alpha >= d / (2d - 1)`, `d > 1/2`: the u-equation's own speed
///   `2 sqrt(d alpha)` dominates everything; mixed collisions, if any, are
///   not pinched.
/// * `II`  — `alpha <= 2 - d`: u on its own is slower than v; the coupling
///   drags u along at exactly the v-speed 2.
/// * `III` — between the two curves with `d > 1`: the mixed collision is
///   pinched and nominally faster, but it requires a *shallower* tail than
///   the nonlinear v-front actually has, so it is never excited; the realized
///   speed is `max(2 sqrt(d alpha), 2)`.
/// * `IV`  — between the two curves with `d < 1`: the pinched mixed collision
///   matches the steep side of the v-tail, which is present, and the front
///   runs at the anomalous speed, strictly faster than both scalar speeds.
/// * `Boundary` — within relative tolerance [`REGIME_BOUNDARY_TOL`] of one of
///   the separating curves, where two candidate speeds degenerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    I,
    II,
    III,
    IV,
    Boundary,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::I => "I",
            Regime::II => "II",
            Regime::III => "III",
            Regime::IV => "IV",
            Regime::Boundary => "Boundary",
        };
        f.write_str(s)
    }
}

/// Classify `(d, alpha)`. The two boundary curves are `alpha = 2 - d` and
/// `alpha = d / (2d - 1)`; both are tested in polynomial form so the second
/// is also meaningful at `d <= 1/2` (where it is never active).
pub fn classify(p: &Params) -> Regime {
    classify_with_tol(p, REGIME_BOUNDARY_TOL)
}

pub fn classify_with_tol(p: &Params, rel_tol: f64) -> Regime {
    let (d, alpha) = (p.d, p.alpha);
    let g1 = alpha - (2.0 - d);
    let g1_scale = alpha.abs() + (2.0 - d).abs() + 1.0;
    let g2 = alpha * (2.0 * d - 1.0) - d;
    let g2_scale = (alpha * (2.0 * d - 1.0)).abs() + d.abs() + 1.0;
    if g1.abs() <= rel_tol * g1_scale || g2.abs() <= rel_tol * g2_scale {
        return Regime::Boundary;
    }
    if g1 < 0.0 {
        Regime::II
    } else if g2 > 0.0 {
        Regime::I
    } else if d > 1.0 {
        Regime::III
    } else {
        Regime::IV
    }
}

/// All candidate speeds and the one the coupled dynamics realizes for the
/// u-component (see [`classify`] for the case analysis). With `beta = 0` the
/// equations decouple and u runs at its own scalar speed.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpeedPrediction {
    pub regime: Regime,
    pub s_u: f64,
    pub s_v: f64,
    pub s_anom: Option<f64>,
    pub s_selected: f64,
}

pub fn predict_speeds(p: &Params) -> SpeedPrediction {
    let regime = classify(p);
    let s_u = p.speed_u();
    let s_v = p.speed_v();
    let s_anom = anomalous_speed(p);
    let s_selected = if p.beta == 0.0 {
        s_u
    } else {
        match regime {
            Regime::IV => s_anom.expect("mixed root exists throughout regime IV"),
            Regime::II => s_v,
            Regime::I | Regime::III => s_u.max(s_v),
            // On a boundary the degenerate candidates coincide; the max over
            // the always-valid pair plus the anomalous one (which equals one
            // of them there) is the right limit.
            Regime::Boundary => s_u.max(s_v).max(s_anom.unwrap_or(f64::NEG_INFINITY)),
        }
    };
    SpeedPrediction {
        regime,
        s_u,
        s_v,
        s_anom,
        s_selected,
    }
}

/// Error-typed variant used by pipelines that must not silently run with a
/// missing anomalous speed.
pub fn require_anomalous_speed(p: &Params) -> Result<f64> {
    anomalous_speed(p).ok_or_else(|| {
        Error::OutOfRegime(format!(
            "no real mixed-root decay rate for d = {}, alpha = {}: (alpha-1)/(1-d) must be positive",
            p.d, p.alpha
        ))
    })
}
