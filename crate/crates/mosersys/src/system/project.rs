//! Projection onto the two-constraint set along the fiber
//! (t, s) -> (sqrt(t) u, sqrt(s) v).
//!
//! The constraints reduce to two scalar equations in (t, s):
//!
//!   G1(t, s) = t A1 - mu1 t P1(t) - beta sigma Q(sigma) = 0,
//!   G2(t, s) = s A2 - mu2 s P2(s) - beta sigma Q(sigma) = 0,
//!
//! with sigma = sqrt(t s), P1(t) = int u^2 g'(t u^2), P2 the v-counterpart
//! and Q(sigma) = int |uv| g'(sigma |uv|). A damped Newton iteration with an
//! analytic Jacobian does the work; when it stalls and beta >= 0, a round of
//! alternating bisections re-centers it (each partial map t -> G1/t is
//! strictly decreasing, so the 1D roots are bracketable).

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::nonlin::{self, gp_raw, ModelParams, OVERFLOW_CAP};
use crate::scalar::fiber_root_scalar;
use crate::system::ops::PROJECTION_REL_TOL;
use crate::system::FiberCoords;
use crate::util;

/// Admissible scaling box demanded of the projection.
pub(super) const T_MIN: f64 = 1e-8;
pub(super) const T_MAX: f64 = 1e8;

struct FiberSystem<'a> {
    hh: f64,
    mu1: f64,
    mu2: f64,
    beta: f64,
    a1: f64,
    a2: f64,
    u: &'a [f64],
    v: &'a [f64],
    /// Componentwise overflow caps on t and s (sigma is dominated by them).
    t_cap: f64,
    s_cap: f64,
}

impl FiberSystem<'_> {
    fn p1(&self, t: f64) -> f64 {
        self.hh
            * util::map_sum(self.u, |x| {
                let q = x * x;
                q * gp_raw(t * q)
            })
    }

    fn p1_pair(&self, t: f64) -> (f64, f64) {
        let (a, b) = util::map_sum_pair(self.u, |x| {
            let q = x * x;
            let g = gp_raw(t * q);
            (q * g, q * q * (g + 1.0))
        });
        (self.hh * a, self.hh * b)
    }

    fn p2(&self, s: f64) -> f64 {
        self.hh
            * util::map_sum(self.v, |y| {
                let r = y * y;
                r * gp_raw(s * r)
            })
    }

    fn p2_pair(&self, s: f64) -> (f64, f64) {
        let (a, b) = util::map_sum_pair(self.v, |y| {
            let r = y * y;
            let g = gp_raw(s * r);
            (r * g, r * r * (g + 1.0))
        });
        (self.hh * a, self.hh * b)
    }

    fn q(&self, sigma: f64) -> f64 {
        self.hh
            * util::map2_sum(self.u, self.v, |x, y| {
                let m = (x * y).abs();
                m * gp_raw(sigma * m)
            })
    }

    fn q_pair(&self, sigma: f64) -> (f64, f64) {
        let (a, b) = util::map2_sum_pair(self.u, self.v, |x, y| {
            let m = (x * y).abs();
            let g = gp_raw(sigma * m);
            (m * g, m * m * (g + 1.0))
        });
        (self.hh * a, self.hh * b)
    }

    fn residuals(&self, t: f64, s: f64) -> (f64, f64) {
        let sigma = (t * s).sqrt();
        let coupling = self.beta * sigma * self.q(sigma);
        (
            t * self.a1 - self.mu1 * t * self.p1(t) - coupling,
            s * self.a2 - self.mu2 * s * self.p2(s) - coupling,
        )
    }

    fn rel_norm(&self, g1: f64, g2: f64, t: f64, s: f64) -> f64 {
        (g1 / (t * self.a1)).abs().max((g2 / (s * self.a2)).abs())
    }

    fn in_box(&self, t: f64, s: f64) -> bool {
        (T_MIN..=self.t_cap).contains(&t) && (T_MIN..=self.s_cap).contains(&s)
    }

    /// Root in t of the strictly decreasing map t -> G1(t, s)/t, for beta >= 0.
    fn root_t_given_s(&self, s: f64, start: f64) -> Result<f64> {
        let r = |t: f64| {
            let sigma = (t * s).sqrt();
            self.a1 - self.mu1 * self.p1(t) - self.beta * (s / t).sqrt() * self.q(sigma)
        };
        bisect_decreasing(r, start, self.t_cap, "first-component partial root")
    }

    fn root_s_given_t(&self, t: f64, start: f64) -> Result<f64> {
        let r = |s: f64| {
            let sigma = (t * s).sqrt();
            self.a2 - self.mu2 * self.p2(s) - self.beta * (t / s).sqrt() * self.q(sigma)
        };
        bisect_decreasing(r, start, self.s_cap, "second-component partial root")
    }
}

/// Bracket and bisect a strictly decreasing map to 1e-12 relative width.
fn bisect_decreasing(r: impl Fn(f64) -> f64, start: f64, cap: f64, what: &str) -> Result<f64> {
    let mut lo;
    let mut hi;
    let x0 = start.clamp(T_MIN, cap);
    if r(x0) > 0.0 {
        lo = x0;
        hi = x0;
        loop {
            hi *= 2.0;
            if hi > cap {
                return Err(Error::Projection(format!("{what} escapes the scaling box")));
            }
            if r(hi) <= 0.0 {
                break;
            }
            lo = hi;
        }
    } else {
        hi = x0;
        lo = x0;
        loop {
            lo *= 0.5;
            if lo < T_MIN {
                return Err(Error::Projection(format!(
                    "{what} falls below the scaling box"
                )));
            }
            if r(lo) >= 0.0 {
                break;
            }
            hi = lo;
        }
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..90 {
        if (hi - lo) <= 1e-12 * mid {
            return Ok(mid);
        }
        if r(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        mid = 0.5 * (lo + hi);
    }
    Ok(mid)
}

/// Scale pair (t, s) placing (sqrt(t) u, sqrt(s) v) on the two-constraint
/// set, with both constraint residuals within 1e-10 relative to the scaled
/// quadratic parts. Guaranteed path needs beta in [0, sqrt(mu1 mu2)); other
/// couplings are attempted with Newton only.
pub fn project_m_beta(grid: &Grid, p: &ModelParams, u: &Field, v: &Field) -> Result<FiberCoords> {
    project_m_beta_from(grid, p, u, v, None)
}

/// [`project_m_beta`] seeded with a previous coordinate pair.
pub fn project_m_beta_from(
    grid: &Grid,
    p: &ModelParams,
    u: &Field,
    v: &Field,
    hint: Option<FiberCoords>,
) -> Result<FiberCoords> {
    grid.check(u)?;
    grid.check(v)?;
    u.assert_finite()?;
    v.assert_finite()?;
    let (su, sv) = (u.sup_norm(), v.sup_norm());
    if su == 0.0 || sv == 0.0 {
        return Err(Error::InvalidArg(
            "two-parameter projection needs both components nontrivial".into(),
        ));
    }
    let (a1, a2) = nonlin::component_norms_sq(grid, p, u, v)?;
    if a1 <= 0.0 || a2 <= 0.0 {
        return Err(Error::Hypothesis(format!(
            "projection needs positive quadratic parts, got ({a1:.3e}, {a2:.3e})"
        )));
    }
    let sys = FiberSystem {
        hh: grid.h() * grid.h(),
        mu1: p.mu1,
        mu2: p.mu2,
        beta: p.beta,
        a1,
        a2,
        u: u.values(),
        v: v.values(),
        t_cap: T_MAX.min(OVERFLOW_CAP / (su * su)),
        s_cap: T_MAX.min(OVERFLOW_CAP / (sv * sv)),
    };

    // Start from the hint or from the decoupled scalar roots (exact at
    // beta = 0, close below sqrt(mu1 mu2)).
    let (mut t, mut s) = match hint {
        Some(fc) if fc.t.is_finite() && fc.s.is_finite() && fc.t > 0.0 && fc.s > 0.0 => {
            (fc.t.clamp(T_MIN, sys.t_cap), fc.s.clamp(T_MIN, sys.s_cap))
        }
        _ => (
            fiber_root_scalar(grid, p.lambda1, p.mu1, u)?.clamp(T_MIN, sys.t_cap),
            fiber_root_scalar(grid, p.lambda2, p.mu2, v)?.clamp(T_MIN, sys.s_cap),
        ),
    };

    let mut fallback_rounds = 0usize;
    let mut last_rel = f64::INFINITY;
    for _ in 0..120 {
        let sigma = (t * s).sqrt();
        let (p1, p1p) = sys.p1_pair(t);
        let (p2, p2p) = sys.p2_pair(s);
        let (q, qp) = sys.q_pair(sigma);
        let coupling = p.beta * sigma * q;
        let g1 = t * a1 - p.mu1 * t * p1 - coupling;
        let g2 = s * a2 - p.mu2 * s * p2 - coupling;
        let rel = sys.rel_norm(g1, g2, t, s);
        if rel <= PROJECTION_REL_TOL {
            return Ok(FiberCoords { t, s });
        }

        let cross = p.beta * (q + sigma * qp);
        let j11 = a1 - p.mu1 * (p1 + t * p1p) - cross * sigma / (2.0 * t);
        let j12 = -cross * sigma / (2.0 * s);
        let j21 = -cross * sigma / (2.0 * t);
        let j22 = a2 - p.mu2 * (p2 + s * p2p) - cross * sigma / (2.0 * s);
        let det = j11 * j22 - j12 * j21;
        let det_scale = (j11.abs() * j22.abs()).max(j12.abs() * j21.abs());

        let mut stepped = false;
        if det.abs() > 1e-14 * det_scale.max(f64::MIN_POSITIVE) {
            let dt = (-g1 * j22 + g2 * j12) / det;
            let ds = (g1 * j21 - g2 * j11) / det;
            let mut alpha = 1.0;
            for _ in 0..25 {
                let tc = (t + alpha * dt).clamp(T_MIN, sys.t_cap);
                let sc = (s + alpha * ds).clamp(T_MIN, sys.s_cap);
                if sys.in_box(tc, sc) {
                    let (c1, c2) = sys.residuals(tc, sc);
                    if sys.rel_norm(c1, c2, tc, sc) < rel {
                        t = tc;
                        s = sc;
                        stepped = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
        }

        // Newton stalled (or made no real progress): re-center with one
        // alternating round when the partial maps are monotone.
        if !stepped || rel > 0.99 * last_rel {
            if p.beta >= 0.0 && fallback_rounds < 50 {
                fallback_rounds += 1;
                t = sys.root_t_given_s(s, t)?;
                s = sys.root_s_given_t(t, s)?;
            } else if !stepped {
                return Err(Error::Projection(format!(
                    "two-parameter Newton stalled at relative residual {rel:.3e}"
                )));
            }
        }
        last_rel = rel;
    }
    let (g1, g2) = sys.residuals(t, s);
    Err(Error::Projection(format!(
        "two-parameter projection did not meet tolerance: relative residual {:.3e}",
        sys.rel_norm(g1, g2, t, s)
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Shape;
    use crate::system::ops::constraints_g;

    fn params(beta: f64) -> ModelParams {
        ModelParams {
            lambda1: 0.2,
            lambda2: -0.1,
            mu1: 1.2,
            mu2: 0.8,
            beta,
        }
    }

    fn bumps(grid: &Grid) -> (Field, Field) {
        let pi = std::f64::consts::PI;
        let u = grid.field_from_fn(|x, y| 0.8 * (pi * x).sin() * (pi * y).sin());
        let v = grid.field_from_fn(|x, y| {
            0.6 * (pi * x).sin() * (pi * y).sin() * (1.0 + 0.4 * (pi * y).cos())
        });
        (u, v)
    }

    #[test]
    fn projection_meets_residual_contract() {
        let grid = Grid::new(Shape::UnitSquare, 17).unwrap();
        let p = params(0.5 * (1.2f64 * 0.8).sqrt());
        let (u, v) = bumps(&grid);
        let fc = project_m_beta(&grid, &p, &u, &v).unwrap();
        let us = grid
            .field_from_values(u.values().iter().map(|x| x * fc.t.sqrt()).collect())
            .unwrap();
        let vs = grid
            .field_from_values(v.values().iter().map(|y| y * fc.s.sqrt()).collect())
            .unwrap();
        let (g1, g2) = constraints_g(&grid, &p, &us, &vs).unwrap();
        let a1 = grid.h1_inner(&us, &us, p.lambda1).unwrap();
        let a2 = grid.h1_inner(&vs, &vs, p.lambda2).unwrap();
        assert!(g1.abs() <= 1e-10 * a1, "G1 residual {:.3e}", g1.abs() / a1);
        assert!(g2.abs() <= 1e-10 * a2, "G2 residual {:.3e}", g2.abs() / a2);
    }

    #[test]
    fn projection_decouples_at_beta_zero() {
        // Seed away from the answer so the 2D iteration does the work
        // instead of inheriting the decoupled scalar start.
        let grid = Grid::new(Shape::UnitSquare, 17).unwrap();
        let p = params(0.0);
        let (u, v) = bumps(&grid);
        let fc = project_m_beta_from(&grid, &p, &u, &v, Some(FiberCoords { t: 1.0, s: 1.0 }))
            .unwrap();
        let t1 = fiber_root_scalar(&grid, p.lambda1, p.mu1, &u).unwrap();
        let s1 = fiber_root_scalar(&grid, p.lambda2, p.mu2, &v).unwrap();
        assert!((fc.t - t1).abs() <= 1e-10 * t1, "{} vs {}", fc.t, t1);
        assert!((fc.s - s1).abs() <= 1e-10 * s1, "{} vs {}", fc.s, s1);
    }

    #[test]
    fn projection_is_a_fixed_point_on_the_constraint_set() {
        let grid = Grid::new(Shape::UnitSquare, 17).unwrap();
        let p = params(0.3);
        let (u, v) = bumps(&grid);
        let fc = project_m_beta(&grid, &p, &u, &v).unwrap();
        let us = grid
            .field_from_values(u.values().iter().map(|x| x * fc.t.sqrt()).collect())
            .unwrap();
        let vs = grid
            .field_from_values(v.values().iter().map(|y| y * fc.s.sqrt()).collect())
            .unwrap();
        let fc2 = project_m_beta(&grid, &p, &us, &vs).unwrap();
        assert!((fc2.t - 1.0).abs() <= 1e-9, "t = {}", fc2.t);
        assert!((fc2.s - 1.0).abs() <= 1e-9, "s = {}", fc2.s);
    }

    #[test]
    fn projection_handles_disjoint_supports() {
        // Disjointly supported bumps decouple exactly regardless of beta:
        // the returned coordinates solve the two independent equations.
        let grid = Grid::new(Shape::UnitSquare, 33).unwrap();
        let pi = std::f64::consts::PI;
        let u = grid.field_from_fn(|x, y| {
            if x < 0.45 {
                (pi * x / 0.45).sin().max(0.0) * (pi * y).sin()
            } else {
                0.0
            }
        });
        let v = grid.field_from_fn(|x, y| {
            if x > 0.55 {
                (pi * (x - 0.55) / 0.45).sin().max(0.0) * (pi * y).sin()
            } else {
                0.0
            }
        });
        let p = params(0.9);
        let fc = project_m_beta(&grid, &p, &u, &v).unwrap();
        let t1 = fiber_root_scalar(&grid, p.lambda1, p.mu1, &u).unwrap();
        let s1 = fiber_root_scalar(&grid, p.lambda2, p.mu2, &v).unwrap();
        assert!((fc.t - t1).abs() <= 1e-8 * t1);
        assert!((fc.s - s1).abs() <= 1e-8 * s1);
    }

    #[test]
    fn projection_rejects_trivial_components() {
        let grid = Grid::new(Shape::UnitSquare, 9).unwrap();
        let p = params(0.1);
        let (u, _) = bumps(&grid);
        let z = grid.field_zero();
        assert!(project_m_beta(&grid, &p, &u, &z).is_err());
        assert!(project_m_beta(&grid, &p, &z, &u).is_err());
    }
}
