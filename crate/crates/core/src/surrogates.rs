//! Inner-approximation building blocks.
//!
//! Each constructor takes an expansion point and returns a surrogate that is
//! tight there and bounds the original function from the safe side, so the
//! convexified constraint set is contained in the true one.

use crate::channel::squared_distance;
use crate::error::{Error, Result};
use crate::scenario::Position3D;

const LOG2_E: f64 = std::f64::consts::LOG2_E;

fn log2_1p(t: f64) -> f64 {
    t.ln_1p() * LOG2_E
}

/// `a - b/t ≤ log2(1 + t)` for `t > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLowerTangent {
    pub a: f64,
    pub b: f64,
}

impl LogLowerTangent {
    pub fn eval(&self, t: f64) -> f64 {
        self.a - self.b / t
    }
}

/// Lower surrogate of `log2(1+t)` in the variable `1/t`, tight at `t0`.
pub fn log_lower_tangent(t0: f64) -> Result<LogLowerTangent> {
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(Error::ExpansionPoint(format!("log tangent needs t0 > 0, got {t0}")));
    }
    Ok(LogLowerTangent {
        a: log2_1p(t0) + LOG2_E * t0 / (t0 + 1.0),
        b: LOG2_E * t0 * t0 / (t0 + 1.0),
    })
}

/// Affine majorant of `log2(1+t)`: `value0 + slope (t - t0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogUpperTangent {
    pub t0: f64,
    pub value0: f64,
    pub slope: f64,
}

impl LogUpperTangent {
    pub fn eval(&self, t: f64) -> f64 {
        self.value0 + self.slope * (t - self.t0)
    }

    /// Returns `(coef, constant)` with `eval(t) = coef * t + constant`.
    pub fn affine(&self) -> (f64, f64) {
        (self.slope, self.value0 - self.slope * self.t0)
    }
}

pub fn log_upper_tangent(t0: f64) -> Result<LogUpperTangent> {
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(Error::ExpansionPoint(format!("log tangent needs t0 > 0, got {t0}")));
    }
    Ok(LogUpperTangent { t0, value0: log2_1p(t0), slope: LOG2_E / (1.0 + t0) })
}

/// `xy ≤ x_coef x² + y_coef y²` on the nonnegative orthant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearUpper {
    pub x_coef: f64,
    pub y_coef: f64,
}

impl BilinearUpper {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.x_coef * x * x + self.y_coef * y * y
    }
}

/// AM-GM majorant `0.5 (y0/x0 x² + x0/y0 y²)` of `xy`.
pub fn bilinear_upper(x0: f64, y0: f64) -> Result<BilinearUpper> {
    if !(x0 > 0.0 && y0 > 0.0 && x0.is_finite() && y0.is_finite()) {
        return Err(Error::ExpansionPoint(format!("bilinear point must be positive, got ({x0}, {y0})")));
    }
    Ok(BilinearUpper { x_coef: 0.5 * y0 / x0, y_coef: 0.5 * x0 / y0 })
}

/// Concave minorant of `xy` from the difference of squares
/// `xy = ¼[(λx + y/λ)² − (λx − y/λ)²]`, with the first square replaced by
/// its tangent at `(x0, y0)`. `λ = √(y0/x0)` balances the two factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearLower {
    pub lambda: f64,
    /// `λ x0 + y0/λ`.
    pub h0: f64,
}

impl BilinearLower {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let h = self.lambda * x + y / self.lambda;
        let g = self.lambda * x - y / self.lambda;
        0.25 * (2.0 * self.h0 * h - self.h0 * self.h0 - g * g)
    }
}

pub fn bilinear_lower(x0: f64, y0: f64) -> Result<BilinearLower> {
    if !(x0 > 0.0 && y0 > 0.0 && x0.is_finite() && y0.is_finite()) {
        return Err(Error::ExpansionPoint(format!("bilinear point must be positive, got ({x0}, {y0})")));
    }
    let lambda = (y0 / x0).sqrt();
    Ok(BilinearLower { lambda, h0: lambda * x0 + y0 / lambda })
}

/// Convex majorant of `gain · p / y` around `(p0, y0)`:
/// `(gain/2) (p²/(p0 y0) + p0/(2y − y0))`, valid where `2y − y0 > 0`.
///
/// With `y = β + 1` this bounds the eavesdropper SINR term; with `y = α_P`
/// it bounds the UAV interference term at the PR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOverLinUpper {
    pub gain: f64,
    pub p0: f64,
    pub y0: f64,
}

impl QuadOverLinUpper {
    pub fn with_denominator(gain: f64, p0: f64, y0: f64) -> Result<Self> {
        if !(p0 > 0.0 && y0 > 0.0 && gain >= 0.0 && p0.is_finite() && y0.is_finite()) {
            return Err(Error::ExpansionPoint(format!("quad-over-lin point must be positive, got ({p0}, {y0})")));
        }
        Ok(Self { gain, p0, y0 })
    }

    /// `2y − y0`, which must stay positive.
    pub fn trust_region(&self, y: f64) -> f64 {
        2.0 * y - self.y0
    }

    /// Coefficient of `p²`.
    pub fn quad_coef(&self) -> f64 {
        0.5 * self.gain / (self.p0 * self.y0)
    }

    /// Numerator of the hyperbolic term `(gain/2) p0 / (2y − y0)`.
    pub fn hyperbolic_numerator(&self) -> f64 {
        0.5 * self.gain * self.p0
    }

    pub fn eval_y(&self, p: f64, y: f64) -> f64 {
        let tr = self.trust_region(y);
        if tr <= 0.0 {
            return f64::INFINITY;
        }
        self.quad_coef() * p * p + self.hyperbolic_numerator() / tr
    }

    /// Evaluates with `y = β + 1`.
    pub fn eval(&self, p: f64, beta: f64) -> f64 {
        self.eval_y(p, beta + 1.0)
    }
}

/// Majorant of `gain · p_S / (β + 1)` around `(p0, β0)`.
pub fn quad_over_lin_upper(gain: f64, p0: f64, beta0: f64) -> Result<QuadOverLinUpper> {
    if !(beta0 >= 0.0) {
        return Err(Error::ExpansionPoint(format!("beta0 must be non-negative, got {beta0}")));
    }
    QuadOverLinUpper::with_denominator(gain, p0, beta0 + 1.0)
}

/// Tangent plane of `c ↦ f_d(anchor, c)` at `c0`: a global minorant since
/// `f_d` is convex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceFirstOrder {
    pub c0: Position3D,
    pub value0: f64,
    pub grad: [f64; 3],
}

impl DistanceFirstOrder {
    pub fn eval(&self, c: &Position3D) -> f64 {
        self.value0
            + self.grad[0] * (c.x - self.c0.x)
            + self.grad[1] * (c.y - self.c0.y)
            + self.grad[2] * (c.z - self.c0.z)
    }

    /// `(coefs, constant)` with `eval(c) = coefs · c + constant`.
    pub fn affine(&self) -> ([f64; 3], f64) {
        let [gx, gy, gz] = self.grad;
        (self.grad, self.value0 - gx * self.c0.x - gy * self.c0.y - gz * self.c0.z)
    }
}

pub fn distance_first_order(anchor: &Position3D, c0: &Position3D) -> DistanceFirstOrder {
    DistanceFirstOrder {
        c0: *c0,
        value0: squared_distance(anchor, c0),
        grad: [2.0 * (c0.x - anchor.x), 2.0 * (c0.y - anchor.y), 2.0 * (c0.z - anchor.z)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn log_lower_examples() {
        let s = log_lower_tangent(1.0).unwrap();
        assert_relative_eq!(s.eval(1.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(s.eval(3.0), 1.480_898_346_962_988, epsilon = 1e-12);
        assert!(s.eval(3.0) <= 2.0);
        assert!(s.eval(1e-12) < -1e11);
        assert!(log_lower_tangent(0.0).is_err());
        assert!(log_lower_tangent(-1.0).is_err());
    }

    #[test]
    fn log_upper_examples() {
        let s = log_upper_tangent(1.0).unwrap();
        assert_eq!(s.eval(1.0), 1.0);
        assert_relative_eq!(s.eval(3.0), 2.442_695_040_888_963_4, epsilon = 1e-12);
        assert_relative_eq!(s.eval(0.0), 0.278_652_479_555_518_3, epsilon = 1e-12);
        let (a, b) = s.affine();
        assert_relative_eq!(a * 3.0 + b, s.eval(3.0), epsilon = 1e-14);
        assert!(log_upper_tangent(0.0).is_err());
    }

    #[test]
    fn bilinear_examples() {
        let s = bilinear_upper(2.0, 3.0).unwrap();
        assert_relative_eq!(s.eval(2.0, 3.0), 6.0, epsilon = 1e-14);
        let s = bilinear_upper(1.0, 2.0).unwrap();
        assert_relative_eq!(s.eval(2.0, 1.0), 4.25, epsilon = 1e-14);
        assert!(bilinear_upper(0.0, 1.0).is_err());
        assert!(bilinear_upper(1.0, -1.0).is_err());

        let l = bilinear_lower(2.0, 3.0).unwrap();
        assert_relative_eq!(l.eval(2.0, 3.0), 6.0, epsilon = 1e-13);
        assert!(l.eval(5.0, 1.0) <= 5.0);
    }

    #[test]
    fn quad_over_lin_examples() {
        let c = 7.5;
        let s = quad_over_lin_upper(c, 1.0, 0.0).unwrap();
        assert_relative_eq!(s.eval(1.0, 0.0), c, epsilon = 1e-14);
        assert_relative_eq!(s.eval(1.0, 1.0), 2.0 * c / 3.0, epsilon = 1e-14);
        assert!(s.eval(1.0, 1.0) >= c / 2.0);
        // (β0+1)(2β−β0+1) = (β+1)² − (β−β0)²
        for (b, b0) in [(0.3, 1.7), (4.0, 2.0), (0.0, 0.5)] {
            let lhs = (b0 + 1.0) * (2.0 * b - b0 + 1.0);
            let rhs = (b + 1.0) * (b + 1.0) - (b - b0) * (b - b0);
            assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
        }
        assert!(quad_over_lin_upper(c, 0.0, 0.0).is_err());
        assert!(quad_over_lin_upper(c, 1.0, -0.5).is_err());
        assert_eq!(s.eval(1.0, -0.6), f64::INFINITY);
    }

    #[test]
    fn distance_first_order_examples() {
        let anchor = Position3D::new(0.0, 0.0, 0.0);
        let c0 = Position3D::new(1.0, 0.0, 0.0);
        let s = distance_first_order(&anchor, &c0);
        assert_eq!(s.eval(&c0), 1.0);
        assert_eq!(s.eval(&Position3D::new(2.0, 0.0, 0.0)), 3.0);
    }

    #[test]
    fn distance_gradient_matches_finite_differences() {
        let anchor = Position3D::new(12.0, -40.0, 0.0);
        for c0 in [Position3D::new(100.0, 3.0, 80.0), Position3D::new(-7.0, 220.0, 55.0)] {
            let s = distance_first_order(&anchor, &c0);
            let h = 1e-3;
            let fd = |c: Position3D| squared_distance(&anchor, &c);
            let num = [
                (fd(Position3D::new(c0.x + h, c0.y, c0.z)) - fd(Position3D::new(c0.x - h, c0.y, c0.z))) / (2.0 * h),
                (fd(Position3D::new(c0.x, c0.y + h, c0.z)) - fd(Position3D::new(c0.x, c0.y - h, c0.z))) / (2.0 * h),
                (fd(Position3D::new(c0.x, c0.y, c0.z + h)) - fd(Position3D::new(c0.x, c0.y, c0.z - h))) / (2.0 * h),
            ];
            for (n, g) in num.iter().zip(&s.grad) {
                assert!((n - g).abs() <= 1e-6 * g.abs().max(1.0));
            }
        }
    }
}
