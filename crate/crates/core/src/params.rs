use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Model parameters for the coupled system
///
/// ```text
///   u_t = d u_xx + alpha u (1 - u) + beta v
///   v_t =   v_xx +       v (1 - v)
/// ```
///
/// All three must be finite; `d` and `alpha` must be positive, `beta`
/// non-negative (`beta = 0` decouples the system into two scalar equations).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct Params {
    pub d: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Deserialize)]
struct RawParams {
    d: f64,
    alpha: f64,
    beta: f64,
}

impl TryFrom<RawParams> for Params {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        Params::new(raw.d, raw.alpha, raw.beta)
    }
}

impl Params {
    pub fn new(d: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(d.is_finite() && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "non-finite value in (d, alpha, beta) = ({d}, {alpha}, {beta})"
            )));
        }
        if d <= 0.0 {
            return Err(Error::InvalidParams(format!("d = {d} must be positive")));
        }
        if alpha <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "alpha = {alpha} must be positive"
            )));
        }
        if beta < 0.0 {
            return Err(Error::InvalidParams(format!(
                "beta = {beta} must be non-negative"
            )));
        }
        Ok(Params { d, alpha, beta })
    }

    /// Spreading speed of the scalar u-equation (beta = 0): `2 sqrt(d alpha)`.
    pub fn speed_u(&self) -> f64 {
        2.0 * (self.d * self.alpha).sqrt()
    }

    /// Spreading speed of the v-equation: always 2.
    pub fn speed_v(&self) -> f64 {
        2.0
    }

    /// The stable plateau value of u behind a fully developed front, i.e. the
    /// positive root of `alpha u (1 - u) + beta = 0`:
    /// `u_c = 1/2 + 1/2 sqrt(1 + 4 beta / alpha)`.
    ///
    /// Equals 1 when `beta = 0`.
    pub fn u_plateau(&self) -> f64 {
        0.5 + 0.5 * (1.0 + 4.0 * self.beta / self.alpha).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_bad_parameters() {
        assert!(Params::new(0.0, 1.0, 0.0).is_err());
        assert!(Params::new(-0.5, 1.0, 0.0).is_err());
        assert!(Params::new(1.0, 0.0, 0.0).is_err());
        assert!(Params::new(1.0, 1.0, -1e-12).is_err());
        assert!(Params::new(f64::NAN, 1.0, 0.0).is_err());
        assert!(Params::new(1.0, f64::INFINITY, 0.0).is_err());
        assert!(Params::new(0.5, 2.0, 1.0).is_ok());
    }

    #[test]
    fn derived_quantities() {
        let p = Params::new(0.5, 2.0, 1.0).unwrap();
        assert_relative_eq!(p.speed_u(), 2.0, max_relative = 1e-15);
        assert_relative_eq!(p.speed_v(), 2.0);
        // alpha = 2, beta = 1: u_c = 1/2 + 1/2 sqrt(3) = 1.3660254037844386
        assert_relative_eq!(p.u_plateau(), 1.366_025_403_784_438_6, epsilon = 1e-15);

        // alpha = 0.5, beta = 1: u_c = 1/2 + 1/2 sqrt(9) = 2
        let q = Params::new(3.0, 0.5, 1.0).unwrap();
        assert_relative_eq!(q.u_plateau(), 2.0, epsilon = 1e-15);
        assert_relative_eq!(q.speed_u(), 2.449_489_742_783_178, epsilon = 1e-15);

        let r = Params::new(1.0, 1.0, 0.0).unwrap();
        assert_relative_eq!(r.u_plateau(), 1.0);
    }

    #[test]
    fn serde_roundtrip_validates() {
        let p: Params = serde_json::from_str(r#"{"d":0.5,"alpha":2.0,"beta":1.0}"#).unwrap();
        assert_eq!(p, Params::new(0.5, 2.0, 1.0).unwrap());
        let bad: std::result::Result<Params, _> =
            serde_json::from_str(r#"{"d":-1.0,"alpha":2.0,"beta":1.0}"#);
        assert!(bad.is_err());
    }
}
