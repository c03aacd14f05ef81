//! Poincaré-ball primitives with curvature `c`.
//!
//! The ball is `{x ∈ ℝⁿ : c‖x‖² < 1}` with radius `c^(-1/2)`. Every ball-valued
//! operation re-projects its result so that `c‖x‖² ≤ 1 − ε` holds afterwards
//! (see [`project_to_ball`]). All partial derivatives are analytic and account
//! for that projection when it is active.

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, neg, norm, norm_sq, scale, Jacobian};

/// Default projection margin `ε` for ball-valued results.
pub const DEFAULT_BALL_EPS: f64 = 1e-5;

/// Non-negative curvature parameter. `c = 0` is the Euclidean limit.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Curvature(f64);

impl Curvature {
    pub fn new(c: f64) -> Result<Self> {
        if c.is_finite() && c >= 0.0 {
            Ok(Self(c))
        } else {
            Err(Error::InvalidCurvature(c))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_euclidean(self) -> bool {
        self.0 == 0.0
    }

    /// Ball radius `c^(-1/2)`; infinite in the Euclidean limit.
    pub fn radius(self) -> f64 {
        if self.is_euclidean() {
            f64::INFINITY
        } else {
            self.0.sqrt().recip()
        }
    }
}

/// A Poincaré ball of fixed positive curvature together with its projection margin.
///
/// Points and tangent vectors are plain `&[f64]` slices interpreted in this ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoincareBall {
    c: f64,
    sqrt_c: f64,
    eps: f64,
}

impl PoincareBall {
    pub fn new(c: Curvature) -> Result<Self> {
        Self::with_eps(c, DEFAULT_BALL_EPS)
    }

    pub fn with_eps(c: Curvature, eps: f64) -> Result<Self> {
        if c.is_euclidean() {
            return Err(Error::ZeroCurvature);
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!("ball margin must lie in (0, 1), got {eps}")));
        }
        Ok(Self { c: c.value(), sqrt_c: c.value().sqrt(), eps })
    }

    /// Shorthand for `PoincareBall::new(Curvature::new(c)?)`.
    pub fn from_c(c: f64) -> Result<Self> {
        Self::new(Curvature::new(c)?)
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn curvature(&self) -> Curvature {
        Curvature(self.c)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn radius(&self) -> f64 {
        self.sqrt_c.recip()
    }

    /// Strict membership `c‖x‖² < 1`.
    pub fn contains(&self, x: &[f64]) -> bool {
        let v = self.c * norm_sq(x);
        v.is_finite() && v < 1.0
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideBall(self.c * norm_sq(x)))
        }
    }

    /// `λ_x = 2 / (1 − c‖x‖²)`.
    pub fn conformal_factor(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(2.0 / (1.0 - self.c * norm_sq(x)))
    }

    /// Möbius addition `x ⊕ y`, projected back inside the margin.
    pub fn mobius_add(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        check_dim(x.len(), y.len())?;
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.project(&MobiusTerms::new(x, y, self.c).value(x, y)))
    }

    /// Geodesic distance `(2/√c)·artanh(√c‖(−x) ⊕ y‖)`.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dim(x.len(), y.len())?;
        self.check_point(x)?;
        self.check_point(y)?;
        if x == y {
            return Ok(0.0);
        }
        let u = neg(x);
        let m = MobiusTerms::new(&u, y, self.c).value(&u, y);
        let arg = self.sqrt_c * norm(&m);
        if arg >= 1.0 {
            return Err(Error::OutsideBall(arg * arg));
        }
        Ok(2.0 / self.sqrt_c * arg.atanh())
    }

    /// Exponential map `exp_x(v) = x ⊕ (tanh(√c λ_x ‖v‖ / 2) · v / (√c‖v‖))`.
    pub fn exp_map(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        check_dim(x.len(), v.len())?;
        let lambda = self.conformal_factor(x)?;
        let s = norm(v);
        if s == 0.0 {
            return Ok(x.to_vec());
        }
        let k = self.sqrt_c * lambda / 2.0;
        let w = scale(v, TanhRatio::new(k, s).value / self.sqrt_c);
        Ok(self.project(&MobiusTerms::new(x, &w, self.c).value(x, &w)))
    }

    /// Rescales `x` onto the sphere `c‖x‖² = 1 − ε` when it lies beyond it.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let n = norm(x);
        let max = self.max_norm();
        if self.c * n * n <= 1.0 - self.eps {
            x.to_vec()
        } else {
            scale(x, max / n)
        }
    }

    fn max_norm(&self) -> f64 {
        (1.0 - self.eps).sqrt() / self.sqrt_c
    }

    /// Jacobian of [`project`](Self::project) at `x`, or `None` on the identity branch.
    pub(crate) fn project_jacobian(&self, x: &[f64]) -> Option<Jacobian> {
        let n = norm(x);
        if self.c * n * n <= 1.0 - self.eps {
            return None;
        }
        let s = self.max_norm() / n;
        let mut j = Jacobian::scaled_identity(x.len(), s);
        j.add_outer(-s / (n * n), x, x);
        Some(j)
    }

    pub(crate) fn finish(&self, raw: &[f64], j: Jacobian) -> Jacobian {
        match self.project_jacobian(raw) {
            Some(p) => p.matmul(&j),
            None => j,
        }
    }

    /// `∂λ_x/∂x = c λ_x² x`.
    pub fn conformal_factor_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        let lambda = self.conformal_factor(x)?;
        Ok(scale(x, self.c * lambda * lambda))
    }

    /// Jacobians of `x ⊕ y` with respect to `x` and to `y`.
    pub fn mobius_add_jacobians(&self, x: &[f64], y: &[f64]) -> Result<(Jacobian, Jacobian)> {
        check_dim(x.len(), y.len())?;
        self.check_point(x)?;
        self.check_point(y)?;
        let terms = MobiusTerms::new(x, y, self.c);
        let raw = terms.value(x, y);
        let (jx, jy) = terms.jacobians(x, y, &raw, self.c);
        Ok((self.finish(&raw, jx), self.finish(&raw, jy)))
    }

    /// Gradients of [`distance`](Self::distance) with respect to `x` and `y`.
    ///
    /// At `x = y` the distance is not differentiable; both gradients are zero.
    pub fn distance_grads(&self, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        check_dim(x.len(), y.len())?;
        self.check_point(x)?;
        self.check_point(y)?;
        if x == y {
            return Ok((vec![0.0; x.len()], vec![0.0; y.len()]));
        }
        let u = neg(x);
        let terms = MobiusTerms::new(&u, y, self.c);
        let m = terms.value(&u, y);
        let n = norm(&m);
        if n == 0.0 {
            return Ok((vec![0.0; x.len()], vec![0.0; y.len()]));
        }
        if self.c * n * n >= 1.0 {
            return Err(Error::OutsideBall(self.c * n * n));
        }
        let gm = scale(&m, 2.0 / ((1.0 - self.c * n * n) * n));
        let (ju, jy) = terms.jacobians(&u, y, &m, self.c);
        Ok((neg(&ju.t_mul_vec(&gm)), jy.t_mul_vec(&gm)))
    }

    /// Jacobians of `exp_x(v)` with respect to the base point `x` and the tangent `v`.
    pub fn exp_map_jacobians(&self, x: &[f64], v: &[f64]) -> Result<(Jacobian, Jacobian)> {
        check_dim(x.len(), v.len())?;
        let lambda = self.conformal_factor(x)?;
        let n = x.len();
        let s = norm(v);
        let k = self.sqrt_c * lambda / 2.0;
        let ratio = TanhRatio::new(k, s);
        let w = scale(v, ratio.value / self.sqrt_c);

        let terms = MobiusTerms::new(x, &w, self.c);
        let raw = terms.value(x, &w);
        let (mut jx, jw) = terms.jacobians(x, &w, &raw, self.c);

        // w = φ(s, λ) v with φ = tanh(k s) / (√c s)
        let mut dw_dv = Jacobian::scaled_identity(n, ratio.value / self.sqrt_c);
        dw_dv.add_outer(ratio.deriv_over_s / self.sqrt_c, v, v);
        let jv = jw.matmul(&dw_dv);

        // ∂w/∂λ = sech²(k s) v / 2, ∂λ/∂x = c λ² x
        let mut dw_dx = Jacobian::zeros(n, n);
        dw_dx.add_outer(ratio.sech_sq / 2.0 * self.c * lambda * lambda, v, x);
        jx.add(&jw.matmul(&dw_dx));

        Ok((self.finish(&raw, jx), self.finish(&raw, jv)))
    }
}

/// `project_to_ball` as a free function; `c` must be positive.
pub fn project_to_ball(x: &[f64], c: Curvature, eps: f64) -> Result<Vec<f64>> {
    Ok(PoincareBall::with_eps(c, eps)?.project(x))
}

/// The `c → 0` limit of the ball distance, `2‖x − y‖`.
pub fn euclidean_limit_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    check_dim(x.len(), y.len())?;
    Ok(2.0 * x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

/// Scalars shared by the Möbius sum and its Jacobians.
pub(crate) struct MobiusTerms {
    x_sq: f64,
    y_sq: f64,
    coef_x: f64,
    coef_y: f64,
    denom: f64,
}

impl MobiusTerms {
    pub(crate) fn new(x: &[f64], y: &[f64], c: f64) -> Self {
        let xy = dot(x, y);
        let x_sq = norm_sq(x);
        let y_sq = norm_sq(y);
        Self {
            x_sq,
            y_sq,
            coef_x: 1.0 + 2.0 * c * xy + c * y_sq,
            coef_y: 1.0 - c * x_sq,
            denom: 1.0 + 2.0 * c * xy + c * c * x_sq * y_sq,
        }
    }

    pub(crate) fn value(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(y)
            .map(|(a, b)| (self.coef_x * a + self.coef_y * b) / self.denom)
            .collect()
    }

    /// Unprojected Jacobians; `r` is the unprojected sum.
    pub(crate) fn jacobians(&self, x: &[f64], y: &[f64], r: &[f64], c: f64) -> (Jacobian, Jacobian) {
        let n = x.len();
        let inv = self.denom.recip();

        let mut jx = Jacobian::scaled_identity(n, self.coef_x * inv);
        jx.add_outer(2.0 * c * inv, x, y);
        jx.add_outer(-2.0 * c * inv, y, x);
        // ∂D/∂x = 2c y + 2c² ‖y‖² x
        let dd_dx: Vec<f64> = x.iter().zip(y).map(|(a, b)| 2.0 * c * b + 2.0 * c * c * self.y_sq * a).collect();
        jx.add_outer(-inv, r, &dd_dx);

        let mut jy = Jacobian::scaled_identity(n, self.coef_y * inv);
        let da_dy: Vec<f64> = x.iter().zip(y).map(|(a, b)| 2.0 * c * (a + b)).collect();
        jy.add_outer(inv, x, &da_dy);
        let dd_dy: Vec<f64> = x.iter().zip(y).map(|(a, b)| 2.0 * c * a + 2.0 * c * c * self.x_sq * b).collect();
        jy.add_outer(-inv, r, &dd_dy);

        (jx, jy)
    }
}

/// `g(s) = tanh(k s) / s` together with `g'(s) / s` and `sech²(k s)`.
///
/// Small arguments use the Taylor series to avoid cancellation.
pub(crate) struct TanhRatio {
    pub value: f64,
    pub deriv_over_s: f64,
    pub sech_sq: f64,
}

impl TanhRatio {
    pub fn new(k: f64, s: f64) -> Self {
        let u = k * s;
        let t = u.tanh();
        let sech_sq = 1.0 - t * t;
        if u < 1e-3 {
            let k2 = k * k;
            let k3 = k2 * k;
            Self {
                value: k - k3 * s * s / 3.0 + 2.0 * k3 * k2 * s.powi(4) / 15.0,
                deriv_over_s: -2.0 * k3 / 3.0 + 8.0 * k3 * k2 * s * s / 15.0,
                sech_sq,
            }
        } else {
            Self { value: t / s, deriv_over_s: (u * sech_sq - t) / (s * s * s), sech_sq }
        }
    }
}
