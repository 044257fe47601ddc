use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

// 15-point Kronrod rule with embedded 7-point Gauss rule. Abscissae are the
// non-negative half (the rule is symmetric); odd indices are the Gauss points.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_2,
    0.063_092_092_629_978_5,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_segments: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_segments: 2000,
        }
    }
}

/// One evaluated panel: `[a, b]` with its Kronrod value and error estimate.
#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Apply the 15-point Kronrod rule on `[a, b]`, returning the integral
/// estimate and a conservative error bound (the usual scaled |K15 - G7|
/// heuristic).
fn kronrod15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(c);
    let mut resk = WGK[7] * fc;
    let mut resg = WG[3] * fc;
    let mut resabs = WGK[7] * fc.abs();
    let mut samples = [(0.0_f64, 0.0_f64); 7];

    for (j, &x) in XGK[..7].iter().enumerate() {
        let dx = half * x;
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        samples[j] = (f1, f2);
        let s = f1 + f2;
        resk += WGK[j] * s;
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }

    let reskh = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for (j, &(f1, f2)) in samples.iter().enumerate() {
        resasc += WGK[j] * ((f1 - reskh).abs() + (f2 - reskh).abs());
    }

    let value = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let tiny = f64::MIN_POSITIVE / f64::EPSILON;
    if resabs > tiny {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (value, err)
}

/// Globally adaptive integration of `f` over the union of the intervals
/// between consecutive `knots`. Knots let the caller pre-split at known
/// non-smooth points (piecewise definitions, support edges) so the local rule
/// only ever sees smooth pieces.
///
/// Returns `(value, error_bound)` once
/// `error_bound <= max(abs_tol, rel_tol * |value|)`.
pub fn integrate_with_knots(
    mut f: impl FnMut(f64) -> f64,
    knots: &[f64],
    cfg: &QuadConfig,
) -> Result<(f64, f64)> {
    if knots.len() < 2 || knots.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::DataOutOfRange(
            "quadrature knots must be strictly increasing with at least two entries".into(),
        ));
    }
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in knots.windows(2) {
        let (v, e) = kronrod15(&mut f, w[0], w[1]);
        total += v;
        total_err += e;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value: v,
            err: e,
        });
    }

    while total_err > cfg.abs_tol.max(cfg.rel_tol * total.abs()) {
        if heap.len() >= cfg.max_segments {
            return Err(Error::QuadratureFailure {
                tol: cfg.abs_tol.max(cfg.rel_tol * total.abs()),
                estimate: total,
                error: total_err,
            });
        }
        let worst = heap.pop().expect("heap cannot be empty while error > 0");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel no longer splittable in f64; its error is what it is.
            return Err(Error::QuadratureFailure {
                tol: cfg.abs_tol.max(cfg.rel_tol * total.abs()),
                estimate: total,
                error: total_err,
            });
        }
        let (v1, e1) = kronrod15(&mut f, worst.a, mid);
        let (v2, e2) = kronrod15(&mut f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            err: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            err: e2,
        });
    }
    Ok((total, total_err))
}

pub fn integrate(
    f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    cfg: &QuadConfig,
) -> Result<(f64, f64)> {
    integrate_with_knots(f, &[a, b], cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact() {
        let cfg = QuadConfig::default();
        let (v, e) = integrate(|x| x * x, 0.0, 1.0, &cfg).unwrap();
        assert_relative_eq!(v, 1.0 / 3.0, epsilon = 1e-15);
        assert!(e < 1e-14);
    }

    #[test]
    fn sine_over_half_period() {
        let cfg = QuadConfig::default();
        let (v, _) = integrate(f64::sin, 0.0, std::f64::consts::PI, &cfg).unwrap();
        assert_relative_eq!(v, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn gaussian_tail_with_knots() {
        // Integral of exp(-y^2/4) over [0, 40] = sqrt(pi) * erf(20) which is
        // sqrt(pi) to far beyond double precision.
        let cfg = QuadConfig::default();
        let (v, _) =
            integrate_with_knots(|y| (-y * y / 4.0).exp(), &[0.0, 1.0, 3.0, 10.0, 40.0], &cfg)
                .unwrap();
        assert_relative_eq!(v, 1.772_453_850_905_516, epsilon = 1e-12);
    }

    #[test]
    fn oscillatory_integrand_forces_subdivision() {
        let cfg = QuadConfig::default();
        let (v, _) = integrate(|x: f64| (50.0 * x).cos(), 0.0, 1.0, &cfg).unwrap();
        assert_relative_eq!(v, 50.0_f64.sin() / 50.0, epsilon = 1e-12, max_relative = 1e-10);
    }

    #[test]
    fn zero_integrand_converges_immediately() {
        let cfg = QuadConfig::default();
        let (v, e) = integrate(|_| 0.0, 0.0, 5.0, &cfg).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(e, 0.0);
    }

    #[test]
    fn reports_failure_when_budget_exhausted() {
        let cfg = QuadConfig {
            rel_tol: 1e-14,
            abs_tol: 0.0,
            max_segments: 4,
        };
        // Kink at an irrational point: a handful of panels cannot resolve it.
        let r = integrate(|x: f64| (x - 0.567_143).abs().sqrt(), 0.0, 1.0, &cfg);
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }

    #[test]
    fn error_bound_is_honest() {
        let cfg = QuadConfig {
            rel_tol: 1e-8,
            ..Default::default()
        };
        let (v, e) = integrate(|x: f64| x.exp(), 0.0, 2.0, &cfg).unwrap();
        let exact = 2.0_f64.exp() - 1.0;
        assert!((v - exact).abs() <= e.max(1e-14), "|{v} - {exact}| > {e}");
    }
}
