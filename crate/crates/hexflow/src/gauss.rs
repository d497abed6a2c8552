//! Anisotropic Gaussian weights in a direction-aligned frame.
//!
//! Every covariance in this crate is diagonal in the coordinate frame whose
//! first axis points along some velocity direction (the *longitudinal* axis)
//! and whose second axis is perpendicular to it (*transverse*). This module
//! evaluates the corresponding unnormalized Gaussian weights. Normalization
//! constants are deliberately dropped: the determinant of a rotated diagonal
//! covariance does not depend on the rotation, so every consumer either
//! normalizes explicitly or works with ratios where the constant cancels.

/// Unit longitudinal/transverse frame for a direction angle.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    cos: f64,
    sin: f64,
}

impl Frame {
    pub fn new(direction: f64) -> Self {
        Self {
            cos: direction.cos(),
            sin: direction.sin(),
        }
    }

    /// Longitudinal and transverse components of a displacement.
    #[inline]
    pub fn decompose(&self, d: [f64; 2]) -> (f64, f64) {
        (
            d[0] * self.cos + d[1] * self.sin,
            -d[0] * self.sin + d[1] * self.cos,
        )
    }
}

/// `exp(-(1/2) d^T Sigma^{-1} d)` for `Sigma` diagonal in the frame with
/// entries `sigma_l^2`, `sigma_t^2`. Both sigmas must be positive.
#[inline]
pub fn weight(frame: &Frame, d: [f64; 2], sigma_l: f64, sigma_t: f64) -> f64 {
    let (l, t) = frame.decompose(d);
    (-0.5 * (l * l / (sigma_l * sigma_l) + t * t / (sigma_t * sigma_t))).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_at_zero_offset() {
        let f = Frame::new(1.2);
        assert_eq!(weight(&f, [0.0, 0.0], 0.5, 0.25), 1.0);
    }

    #[test]
    fn matches_quadratic_form() {
        // Independent evaluation through the explicit rotated covariance.
        let theta = 0.7f64;
        let (sl, st) = (1.4f64, 0.6f64);
        let d = [0.3, -0.8];
        let (c, s) = (theta.cos(), theta.sin());
        // Sigma = R diag(sl^2, st^2) R^T; invert explicitly.
        let sxx = sl * sl * c * c + st * st * s * s;
        let sxy = (sl * sl - st * st) * s * c;
        let syy = sl * sl * s * s + st * st * c * c;
        let det = sxx * syy - sxy * sxy;
        let q = (syy * d[0] * d[0] - 2.0 * sxy * d[0] * d[1] + sxx * d[1] * d[1]) / det;
        let expected = (-0.5 * q).exp();
        let got = weight(&Frame::new(theta), d, sl, st);
        assert!((got - expected).abs() < 1e-14);
    }

    #[test]
    fn anisotropy_favours_longitudinal_offsets() {
        let f = Frame::new(0.0);
        let along = weight(&f, [1.0, 0.0], 1.0, 0.5);
        let across = weight(&f, [0.0, 1.0], 1.0, 0.5);
        assert!(along > across);
    }
}
