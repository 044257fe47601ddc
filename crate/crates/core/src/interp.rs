use crate::error::{Error, Result};

/// Piecewise-cubic Hermite interpolant on a strictly increasing knot grid.
///
/// Two construction paths:
/// * [`CubicHermite::new`] with exact derivative data (e.g. from an ODE solve,
///   where the right-hand side gives the derivative at every knot) — this
///   reproduces the underlying function to fourth order;
/// * [`CubicHermite::pchip`] with Fritsch–Carlson slopes, which preserves
///   monotonicity of the data and never overshoots.
#[derive(Debug, Clone)]
pub struct CubicHermite {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ms: Vec<f64>,
}

impl CubicHermite {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, ms: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() || xs.len() != ms.len() {
            return Err(Error::DataOutOfRange(format!(
                "interpolation needs matching knot/value/slope arrays of length >= 2, got {}/{}/{}",
                xs.len(),
                ys.len(),
                ms.len()
            )));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::DataOutOfRange(
                "interpolation knots must be strictly increasing".into(),
            ));
        }
        if xs.iter().chain(&ys).chain(&ms).any(|v| !v.is_finite()) {
            return Err(Error::DataOutOfRange(
                "non-finite value in interpolation data".into(),
            ));
        }
        Ok(CubicHermite { xs, ys, ms })
    }

    /// Shape-preserving slopes (Fritsch–Carlson): harmonic-mean interior
    /// slopes, zeroed at local extrema, with the usual clamped three-point
    /// endpoint formula.
    pub fn pchip(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::DataOutOfRange(format!(
                "pchip needs matching knot/value arrays of length >= 2, got {}/{}",
                n,
                ys.len()
            )));
        }
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();

        let mut ms = vec![0.0; n];
        for k in 1..n - 1 {
            if delta[k - 1] * delta[k] > 0.0 {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                ms[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
            }
        }
        ms[0] = endpoint_slope(h[0], h.get(1).copied().unwrap_or(h[0]), delta[0], *delta.get(1).unwrap_or(&delta[0]));
        let last = n - 2;
        ms[n - 1] = endpoint_slope(
            h[last],
            if last == 0 { h[last] } else { h[last - 1] },
            delta[last],
            if last == 0 { delta[last] } else { delta[last - 1] },
        );

        Self::new(xs, ys, ms)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    fn segment(&self, x: f64) -> usize {
        // Index of the segment [xs[i], xs[i+1]] containing x, with points
        // outside the grid mapped to the nearest end segment.
        let i = self.xs.partition_point(|&k| k <= x);
        i.saturating_sub(1).min(self.xs.len() - 2)
    }

    /// Evaluate the interpolant. Outside the knot range the nearest cubic
    /// segment is extended.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.ms[i] + h01 * self.ys[i + 1] + h11 * h * self.ms[i + 1]
    }

    pub fn eval_deriv(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (-6.0 * t2 + 6.0 * t) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        d00 * self.ys[i] + d10 * self.ms[i] + d01 * self.ys[i + 1] + d11 * self.ms[i + 1]
    }
}

fn endpoint_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        0.0
    } else if d0 * d1 < 0.0 && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}
