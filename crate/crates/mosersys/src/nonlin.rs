//! Exponential coupling nonlinearity and the system energy functional.
//!
//! The scalar kernel is g(t) = e^t - 1 - t. The coupling density on nodal
//! value pairs (x, y) is
//!
//!   H(x, y) = (mu1/2) g(x^2) + beta g(|x y|) + (mu2/2) g(y^2),
//!
//! and the energy of a field pair (u, v) is
//!
//!   I(u, v) = 1/2 ||u||_{lambda1}^2 + 1/2 ||v||_{lambda2}^2 - int H(u, v),
//!
//! with ||u||_lambda^2 = ||grad u||_2^2 + lambda ||u||_2^2.
//!
//! For the repulsive regime (beta < 0) the positive-part density
//!
//!   Ht(x, y) = (mu1/2) g(x+^2) + beta g(x+ y+) + (mu2/2) g(y+^2),  x+ = max(x,0)
//!
//! replaces H, so that negative excursions cost nothing nonlinear and the
//! associated functional is C^1.
//!
//! Pointwise helpers here are infallible and assume their arguments passed
//! the overflow preflight; the field-level entry points check it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// Hard cap on exponent arguments; e^700 is still finite in f64, anything
/// materially larger is not.
pub const OVERFLOW_CAP: f64 = 700.0;

/// Coefficients of the two-component model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub beta: f64,
}

impl ModelParams {
    /// Coercivity and positivity hypotheses. `principal_eigenvalue` is the
    /// discrete principal Dirichlet eigenvalue of the grid in use; each
    /// potential shift must satisfy lambda_i > -principal_eigenvalue.
    pub fn validate(&self, principal_eigenvalue: f64) -> Result<()> {
        for (name, v) in [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("beta", self.beta),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidArg(format!("{name} must be finite, got {v}")));
            }
        }
        if self.mu1 <= 0.0 || self.mu2 <= 0.0 {
            return Err(Error::Hypothesis(format!(
                "mu1, mu2 must be positive (got mu1 = {}, mu2 = {})",
                self.mu1, self.mu2
            )));
        }
        if self.lambda1 <= -principal_eigenvalue || self.lambda2 <= -principal_eigenvalue {
            return Err(Error::Hypothesis(format!(
                "coercivity needs lambda_i > -{principal_eigenvalue:.6} \
                 (principal eigenvalue); got lambda1 = {}, lambda2 = {}",
                self.lambda1, self.lambda2
            )));
        }
        Ok(())
    }

    /// Geometric mean of the self-interaction strengths.
    pub fn mu_geo(&self) -> f64 {
        (self.mu1 * self.mu2).sqrt()
    }

    pub fn with_beta(&self, beta: f64) -> ModelParams {
        ModelParams { beta, ..*self }
    }
}

/// g(t) = e^t - 1 - t, series-evaluated near zero to avoid cancellation.
pub(crate) fn g_raw(t: f64) -> f64 {
    if t.abs() < 1e-3 {
        t * t
            * (0.5 + t * (1.0 / 6.0 + t * (1.0 / 24.0 + t * (1.0 / 120.0 + t * (1.0 / 720.0)))))
    } else {
        t.exp_m1() - t
    }
}

/// g'(t) = e^t - 1.
#[inline]
pub(crate) fn gp_raw(t: f64) -> f64 {
    t.exp_m1()
}

/// Overflow-checked g(t).
pub fn g_val(t: f64) -> Result<f64> {
    if t > OVERFLOW_CAP {
        return Err(Error::Overflow {
            arg: t,
            cap: OVERFLOW_CAP,
        });
    }
    Ok(g_raw(t))
}

/// Overflow-checked g'(t).
pub fn g_prime(t: f64) -> Result<f64> {
    if t > OVERFLOW_CAP {
        return Err(Error::Overflow {
            arg: t,
            cap: OVERFLOW_CAP,
        });
    }
    Ok(gp_raw(t))
}

/// t g'(t) - (p/2) g(t) = sum_{k>=2} (k - p/2) t^k / k!  (nonnegative for
/// p <= 4, t >= 0). Series branch keeps the p = 4 cancellation harmless.
pub(crate) fn kp_kernel(t: f64, p: f64) -> f64 {
    if t <= 0.01 {
        let mut term = t;
        let mut s = 0.0;
        for k in 2..=12 {
            term *= t / k as f64;
            s += (k as f64 - 0.5 * p) * term;
        }
        s
    } else {
        let e = t.exp_m1();
        t * e - 0.5 * p * (e - t)
    }
}

/// s^2 e^s - s (e^s - 1), the coupling part of x^2 H_xx - x H_x; series
/// branch near zero (leading term s^3/2).
pub(crate) fn phi_minus(s: f64) -> f64 {
    if s < 1e-3 {
        s * s * s * (0.5 + s * (1.0 / 3.0 + s * (0.125 + s * (1.0 / 30.0))))
    } else {
        s * (s * s.exp() - s.exp_m1())
    }
}

/// s^2 e^s + s (e^s - 1), the coupling part of x y H_xy; no cancellation.
pub(crate) fn phi_plus(s: f64) -> f64 {
    s * (s * s.exp() + s.exp_m1())
}

#[inline]
pub(crate) fn pos(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// H(x, y).
pub fn h_val(p: &ModelParams, x: f64, y: f64) -> f64 {
    0.5 * p.mu1 * g_raw(x * x) + p.beta * g_raw((x * y).abs()) + 0.5 * p.mu2 * g_raw(y * y)
}

/// (H_x, H_y).
pub fn h_grad(p: &ModelParams, x: f64, y: f64) -> (f64, f64) {
    let s = (x * y).abs();
    let gps = gp_raw(s);
    let hx = p.mu1 * x * gp_raw(x * x) + p.beta * sgn(x) * y.abs() * gps;
    let hy = p.mu2 * y * gp_raw(y * y) + p.beta * sgn(y) * x.abs() * gps;
    (hx, hy)
}

/// (H_xx, H_xy, H_yy).
pub fn h_hess(p: &ModelParams, x: f64, y: f64) -> (f64, f64, f64) {
    let s = (x * y).abs();
    let es = s.exp();
    let gps = gp_raw(s);
    let hxx = p.mu1 * (gp_raw(x * x) + 2.0 * x * x * (x * x).exp()) + p.beta * y * y * es;
    let hyy = p.mu2 * (gp_raw(y * y) + 2.0 * y * y * (y * y).exp()) + p.beta * x * x * es;
    let hxy = p.beta * sgn(x * y) * (gps + s * es);
    (hxx, hxy, hyy)
}

#[inline]
fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// The three scale-curvature combinations that control fiber maps:
///   a = x^2 H_xx - x H_x,  b = y^2 H_yy - y H_y,  c = x y H_xy,
/// in cancellation-free closed form:
///   a = 2 mu1 x^4 e^{x^2} + beta phi_minus(|xy|),
///   b = 2 mu2 y^4 e^{y^2} + beta phi_minus(|xy|),
///   c = beta phi_plus(|xy|).
pub fn fiber_terms(p: &ModelParams, x: f64, y: f64) -> (f64, f64, f64) {
    let s = (x * y).abs();
    let pm = phi_minus(s);
    let x2 = x * x;
    let y2 = y * y;
    let a = 2.0 * p.mu1 * x2 * x2 * x2.exp() + p.beta * pm;
    let b = 2.0 * p.mu2 * y2 * y2 * y2.exp() + p.beta * pm;
    let c = p.beta * phi_plus(s);
    (a, b, c)
}

/// Positive-part density Ht(x, y).
pub fn h_tilde_val(p: &ModelParams, x: f64, y: f64) -> f64 {
    let (xp, yp) = (pos(x), pos(y));
    0.5 * p.mu1 * g_raw(xp * xp) + p.beta * g_raw(xp * yp) + 0.5 * p.mu2 * g_raw(yp * yp)
}

/// Gradient of the positive-part density; C^1 across the truncation because
/// g'(0) = 0.
pub fn h_tilde_grad(p: &ModelParams, x: f64, y: f64) -> (f64, f64) {
    let (xp, yp) = (pos(x), pos(y));
    let gps = gp_raw(xp * yp);
    (
        p.mu1 * xp * gp_raw(xp * xp) + p.beta * yp * gps,
        p.mu2 * yp * gp_raw(yp * yp) + p.beta * xp * gps,
    )
}

/// Largest exponent argument produced by the pair (u, v): max of sup|u|^2,
/// sup|v|^2 (which also dominates sup|uv|).
pub fn max_exponent_arg(u: &Field, v: &Field) -> f64 {
    let a = u.sup_norm();
    let b = v.sup_norm();
    let m = a.max(b);
    m * m
}

/// Reject field pairs whose nonlinear terms would overflow.
pub fn preflight(u: &Field, v: &Field) -> Result<()> {
    u.assert_finite()?;
    v.assert_finite()?;
    let m2 = max_exponent_arg(u, v);
    if m2 > OVERFLOW_CAP {
        return Err(Error::Overflow {
            arg: m2,
            cap: OVERFLOW_CAP,
        });
    }
    Ok(())
}

/// (||u||_{lambda1}^2, ||v||_{lambda2}^2).
pub fn component_norms_sq(grid: &Grid, p: &ModelParams, u: &Field, v: &Field) -> Result<(f64, f64)> {
    Ok((
        grid.h1_inner(u, u, p.lambda1)?,
        grid.h1_inner(v, v, p.lambda2)?,
    ))
}

/// int H(u, v).
pub fn h_integral(grid: &Grid, p: &ModelParams, u: &Field, v: &Field) -> Result<f64> {
    grid.check(u)?;
    grid.check(v)?;
    preflight(u, v)?;
    Ok(grid.integrate_map2(u.values(), v.values(), |x, y| h_val(p, x, y)))
}

/// I(u, v).
pub fn energy(grid: &Grid, p: &ModelParams, u: &Field, v: &Field) -> Result<f64> {
    let (nu, nv) = component_norms_sq(grid, p, u, v)?;
    let h = h_integral(grid, p, u, v)?;
    Ok(0.5 * (nu + nv) - h)
}

/// L2 gradient pair of I: ( -L u + lambda1 u - H_x(u,v),
///                          -L v + lambda2 v - H_y(u,v) ).
pub fn energy_grad(grid: &Grid, p: &ModelParams, u: &Field, v: &Field) -> Result<(Field, Field)> {
    grid.check(u)?;
    grid.check(v)?;
    preflight(u, v)?;
    let mut gu = vec![0.0; grid.len()];
    let mut gv = vec![0.0; grid.len()];
    grid.lap_into(u.values(), &mut gu);
    grid.lap_into(v.values(), &mut gv);
    for k in 0..grid.len() {
        let (x, y) = (u.values()[k], v.values()[k]);
        let (hx, hy) = h_grad(p, x, y);
        gu[k] += p.lambda1 * x - hx;
        gv[k] += p.lambda2 * y - hy;
    }
    Ok((grid.field_from_values(gu)?, grid.field_from_values(gv)?))
}

/// Positive-part energy It(u, v) (repulsive regime).
pub fn energy_tilde(grid: &Grid, p: &ModelParams, u: &Field, v: &Field) -> Result<f64> {
    let (nu, nv) = component_norms_sq(grid, p, u, v)?;
    grid.check(u)?;
    preflight(u, v)?;
    let h = grid.integrate_map2(u.values(), v.values(), |x, y| h_tilde_val(p, x, y));
    Ok(0.5 * (nu + nv) - h)
}

/// L2 gradient pair of It.
pub fn energy_tilde_grad(
    grid: &Grid,
    p: &ModelParams,
    u: &Field,
    v: &Field,
) -> Result<(Field, Field)> {
    grid.check(u)?;
    grid.check(v)?;
    preflight(u, v)?;
    let mut gu = vec![0.0; grid.len()];
    let mut gv = vec![0.0; grid.len()];
    grid.lap_into(u.values(), &mut gu);
    grid.lap_into(v.values(), &mut gv);
    for k in 0..grid.len() {
        let (x, y) = (u.values()[k], v.values()[k]);
        let (hx, hy) = h_tilde_grad(p, x, y);
        gu[k] += p.lambda1 * x - hx;
        gv[k] += p.lambda2 * y - hy;
    }
    Ok((grid.field_from_values(gu)?, grid.field_from_values(gv)?))
}

/// Superquadratic remainder
///   K_p(u, v) = (mu1/p) int kp(u^2) + (2 beta/p) int kp(|uv|) + (mu2/p) int kp(v^2)
/// with kp(t) = t g'(t) - (p/2) g(t); satisfies the exact decomposition
///   I - (1/p) <I'(u,v), (u,v)> = (p-2)/(2p) * (||u||^2 + ||v||^2) + K_p
/// and K_p >= 0 for p in [2, 4], beta >= 0.
pub fn k_p(grid: &Grid, p: &ModelParams, u: &Field, v: &Field, pexp: f64) -> Result<f64> {
    if !(2.0..=4.0).contains(&pexp) {
        return Err(Error::InvalidArg(format!(
            "superquadratic exponent must lie in [2, 4], got {pexp}"
        )));
    }
    grid.check(u)?;
    grid.check(v)?;
    preflight(u, v)?;
    let t1 = grid.integrate_map(u.values(), |x| kp_kernel(x * x, pexp));
    let t2 = grid.integrate_map(v.values(), |y| kp_kernel(y * y, pexp));
    let tc = grid.integrate_map2(u.values(), v.values(), |x, y| {
        kp_kernel((x * y).abs(), pexp)
    });
    Ok((p.mu1 * t1 + 2.0 * p.beta * tc + p.mu2 * t2) / pexp)
}

/// Both sides of the repulsive-regime splitting inequality
///   Ht(x, y) >= 1/2 (1 + beta / sqrt(mu1 mu2)) (mu1 g(x+^2) + mu2 g(y+^2)),
/// valid for -sqrt(mu1 mu2) < beta <= 0.
pub fn htilde_split_bound(p: &ModelParams, x: f64, y: f64) -> (f64, f64) {
    let lhs = h_tilde_val(p, x, y);
    let (xp, yp) = (pos(x), pos(y));
    let rhs = 0.5
        * (1.0 + p.beta / p.mu_geo())
        * (p.mu1 * g_raw(xp * xp) + p.mu2 * g_raw(yp * yp));
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Shape;
    use crate::util;
    use proptest::prelude::*;

    fn params(beta: f64) -> ModelParams {
        ModelParams {
            lambda1: 0.3,
            lambda2: -0.2,
            mu1: 1.0,
            mu2: 1.5,
            beta,
        }
    }

    /// 4th-order central difference.
    fn diff4(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h))) / (12.0 * h)
    }

    #[test]
    fn g_small_values_match_series_and_large_match_expm1() {
        assert_eq!(g_val(0.0).unwrap(), 0.0);
        let e = std::f64::consts::E;
        assert!((g_val(1.0).unwrap() - (e - 2.0)).abs() < 1e-15);
        // branch consistency around the cutoff
        for &t in &[9.0e-4f64, 9.99e-4, 1.0001e-3, 1.1e-3, 5e-3] {
            let series = t * t
                * (0.5
                    + t * (1.0 / 6.0 + t * (1.0 / 24.0 + t * (1.0 / 120.0 + t * (1.0 / 720.0)))));
            let direct = t.exp_m1() - t;
            assert!(
                (series - direct).abs() <= 2e-13 * series.abs(),
                "branches disagree at t = {t}: {series} vs {direct}"
            );
            assert!((g_val(t).unwrap() - series).abs() <= 2e-13 * series);
        }
    }

    #[test]
    fn g_overflow_is_reported() {
        assert!(matches!(
            g_val(700.5),
            Err(crate::error::Error::Overflow { .. })
        ));
        assert!(g_val(699.9).is_ok());
    }

    #[test]
    fn kernel_kp_signs_and_small_t_accuracy() {
        // p = 4: kernel = sum_{k>=3} (k-2) t^k / k!, head t^3/6 (1 + t/2 + ...)
        for &t in &[1e-6f64, 1e-4, 5e-3, 0.01, 0.5, 3.0] {
            let k4 = kp_kernel(t, 4.0);
            assert!(k4 >= 0.0);
            if t < 1e-2 {
                let head = t * t * t / 6.0;
                assert!((k4 - head).abs() <= 0.6 * t * head + 1e-300, "t = {t}");
            }
        }
        // branch agreement at the series cutoff
        for &t in &[0.0099f64, 0.0101] {
            let series = {
                let mut term = t;
                let mut s = 0.0;
                for k in 2..=12 {
                    term *= t / k as f64;
                    s += (k as f64 - 2.0) * term;
                }
                s
            };
            let e = t.exp_m1();
            let direct = t * e - 2.0 * (e - t);
            assert!((series - direct).abs() <= 1e-11 * direct);
        }
        // p < 4 keeps the quadratic head
        let t = 1e-5;
        let k3 = kp_kernel(t, 3.0);
        assert!((k3 - 0.5 * t * t * (2.0 - 1.5)).abs() < 1e-2 * k3);
    }

    #[test]
    fn phi_branches_agree_at_cutoff() {
        for &s in &[5e-4f64, 9.9e-4, 1.01e-3, 2e-3] {
            let direct = s * (s * s.exp() - s.exp_m1());
            let val = phi_minus(s);
            assert!((val - direct).abs() <= 1e-11 * direct.max(1e-300));
        }
    }

    #[test]
    fn h_grad_matches_finite_differences() {
        let p = params(0.8);
        for &(x, y) in &[(0.3f64, 0.7f64), (1.2, 0.4), (2.0, 1.5), (-0.6, 0.9), (0.5, -1.1)] {
            let h = 1e-4 * x.abs().max(y.abs()).max(1.0);
            let (hx, hy) = h_grad(&p, x, y);
            let fx = diff4(|t| h_val(&p, t, y), x, h);
            let fy = diff4(|t| h_val(&p, x, t), y, h);
            assert!((hx - fx).abs() <= 1e-8 * hx.abs().max(1.0), "{x},{y}");
            assert!((hy - fy).abs() <= 1e-8 * hy.abs().max(1.0), "{x},{y}");
        }
    }

    #[test]
    fn h_hess_matches_finite_differences() {
        let p = params(-0.4);
        for &(x, y) in &[(0.4, 0.9), (1.3, 0.2), (0.8, 1.6)] {
            let h = 1e-4;
            let (hxx, hxy, hyy) = h_hess(&p, x, y);
            let fxx = diff4(|t| h_grad(&p, t, y).0, x, h);
            let fxy = diff4(|t| h_grad(&p, x, t).0, y, h);
            let fyy = diff4(|t| h_grad(&p, x, t).1, y, h);
            assert!((hxx - fxx).abs() <= 1e-7 * hxx.abs().max(1.0));
            assert!((hxy - fxy).abs() <= 1e-7 * hxy.abs().max(1.0));
            assert!((hyy - fyy).abs() <= 1e-7 * hyy.abs().max(1.0));
        }
    }

    #[test]
    fn fiber_terms_match_their_definitions() {
        let p = params(0.6);
        for &(x, y) in &[(0.3, 0.5), (1.0, 1.0), (1.8, 0.7), (0.05, 0.02)] {
            let (a, b, c) = fiber_terms(&p, x, y);
            let (hx, hy) = h_grad(&p, x, y);
            let (hxx, hxy, hyy) = h_hess(&p, x, y);
            let a_def = x * x * hxx - x * hx;
            let b_def = y * y * hyy - y * hy;
            let c_def = x * y * hxy;
            let scale = a.abs().max(b.abs()).max(c.abs()).max(1e-300);
            assert!((a - a_def).abs() <= 1e-10 * scale, "a at ({x},{y})");
            assert!((b - b_def).abs() <= 1e-10 * scale);
            assert!((c - c_def).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn symmetry_in_components() {
        let p = params(0.7);
        let q = ModelParams {
            lambda1: p.lambda2,
            lambda2: p.lambda1,
            mu1: p.mu2,
            mu2: p.mu1,
            beta: p.beta,
        };
        for &(x, y) in &[(0.4, 1.1), (1.0, 0.3)] {
            let (hp, hq) = (h_val(&p, x, y), h_val(&q, y, x));
            assert!((hp - hq).abs() <= 4.0 * f64::EPSILON * hp.abs());
            let (a, b) = (h_grad(&p, x, y), h_grad(&q, y, x));
            assert_eq!(a.0, b.1);
            assert_eq!(a.1, b.0);
        }
    }

    #[test]
    fn energy_and_moment_identity_on_grid() {
        let grid = Grid::new(Shape::UnitSquare, 23).unwrap();
        let p = params(0.5);
        let pi = std::f64::consts::PI;
        let u = grid.field_from_fn(|x, y| 1.3 * (pi * x).sin() * (pi * y).sin());
        let v = grid.field_from_fn(|x, y| 0.9 * (pi * x).sin() * (2.0 * pi * y).sin().abs());
        for pexp in [2.5, 3.0, 4.0] {
            let lhs = {
                let i = energy(&grid, &p, &u, &v).unwrap();
                let (gu, gv) = energy_grad(&grid, &p, &u, &v).unwrap();
                let pairing = grid.h() * grid.h()
                    * (util::dot(gu.values(), u.values()) + util::dot(gv.values(), v.values()));
                i - pairing / pexp
            };
            let (nu, nv) = component_norms_sq(&grid, &p, &u, &v).unwrap();
            let rhs = (pexp - 2.0) / (2.0 * pexp) * (nu + nv)
                + k_p(&grid, &p, &u, &v, pexp).unwrap();
            assert!(
                (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0),
                "identity failed at p = {pexp}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn k4_nonnegative_on_random_fields() {
        use rand::{Rng, SeedableRng};
        let grid = Grid::new(Shape::UnitDisk, 19).unwrap();
        let p = params(0.9);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let u = grid
                .field_from_values((0..grid.len()).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect())
                .unwrap();
            let v = grid
                .field_from_values((0..grid.len()).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect())
                .unwrap();
            assert!(k_p(&grid, &p, &u, &v, 4.0).unwrap() >= 0.0);
        }
    }

    #[test]
    fn energy_overflow_preflight_triggers() {
        let grid = Grid::new(Shape::UnitSquare, 9).unwrap();
        let p = params(0.1);
        let u = grid.field_from_fn(|_, _| 30.0);
        let v = grid.field_zero();
        assert!(matches!(
            energy(&grid, &p, &u, &v),
            Err(crate::error::Error::Overflow { .. })
        ));
    }

    #[test]
    fn tilde_density_ignores_negative_parts() {
        let p = params(-0.5);
        assert_eq!(h_tilde_val(&p, -1.0, -2.0), 0.0);
        assert_eq!(h_tilde_val(&p, -1.0, 0.7), 0.5 * p.mu2 * g_raw(0.7 * 0.7));
        let (hx, hy) = h_tilde_grad(&p, -1.0, 0.7);
        assert_eq!(hx, 0.0);
        assert!((hy - p.mu2 * 0.7 * gp_raw(0.7 * 0.7)).abs() < 1e-16);
        // agrees with the full density on the positive quadrant
        assert_eq!(h_tilde_val(&p, 0.8, 0.3), h_val(&p, 0.8, 0.3));
    }

    #[test]
    fn tilde_split_bound_holds_on_a_sample_box() {
        let p = params(-0.9); // sqrt(mu1 mu2) ~ 1.2247, so beta is admissible
        assert!(p.beta > -p.mu_geo());
        for i in 0..40 {
            for j in 0..40 {
                let x = -1.0 + 3.0 * i as f64 / 39.0;
                let y = -1.0 + 3.0 * j as f64 / 39.0;
                let (lhs, rhs) = htilde_split_bound(&p, x, y);
                assert!(
                    lhs >= rhs - 1e-12 * rhs.abs().max(1.0),
                    "split bound failed at ({x}, {y}): {lhs} < {rhs}"
                );
            }
        }
    }

    #[test]
    fn validate_rejects_bad_hypotheses() {
        let lam1 = 19.0;
        assert!(params(0.0).validate(lam1).is_ok());
        let mut bad = params(0.0);
        bad.mu1 = 0.0;
        assert!(bad.validate(lam1).is_err());
        let mut bad = params(0.0);
        bad.lambda2 = -19.5;
        assert!(bad.validate(lam1).is_err());
    }

    proptest! {
        #[test]
        fn g_is_nonneg_increasing_convex(t1 in 0.0f64..50.0, t2 in 0.0f64..50.0) {
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let (glo, ghi) = (g_raw(lo), g_raw(hi));
            prop_assert!(glo >= 0.0);
            prop_assert!(ghi >= glo);
            // secant above tangent at midpoint (convexity)
            let mid = 0.5 * (lo + hi);
            prop_assert!(g_raw(mid) <= 0.5 * (glo + ghi) + 1e-12 * (1.0 + ghi));
        }

        #[test]
        fn grad_scaling_inequality(x in 0.01f64..3.0, y in 0.01f64..3.0, beta in 0.0f64..2.0) {
            // For beta >= 0 and x, y > 0: x H_x >= mu1 x^2 g'(x^2), with equality
            // only when beta = 0 or xy = 0.
            let p = ModelParams { lambda1: 0.0, lambda2: 0.0, mu1: 1.0, mu2: 1.0, beta };
            let (hx, _) = h_grad(&p, x, y);
            prop_assert!(x * hx >= x * x * gp_raw(x * x) - 1e-12);
        }

        #[test]
        fn fiber_det_positive_for_small_coupling(x in 0.05f64..2.0, y in 0.05f64..2.0) {
            // With mu1 = mu2 = 1 and beta = 0.05 the curvature matrix of the
            // double fiber map stays positive definite on this box.
            let p = ModelParams { lambda1: 0.0, lambda2: 0.0, mu1: 1.0, mu2: 1.0, beta: 0.05 };
            let (a, b, c) = fiber_terms(&p, x, y);
            prop_assert!(a > 0.0 && b > 0.0);
            prop_assert!(a * b - c * c > 0.0, "det failed at ({}, {}): {} {} {}", x, y, a, b, c);
        }
    }
}
