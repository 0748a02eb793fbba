//! Constraint-set primitives shared by the three regime solvers.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::nonlin::{self, fiber_terms, gp_raw, ModelParams, OVERFLOW_CAP};
use crate::scalar::FIBER_REL_TOL;
use crate::util;

/// Relative tolerance certified on constraint residuals at convergence.
pub const CONSTRAINT_REL_TOL: f64 = 1e-8;
/// Relative tolerance enforced by the two-parameter projection.
pub const PROJECTION_REL_TOL: f64 = 1e-10;

/// (G1, G2) with G1 = ||u||_{l1}^2 - int u H_u and G2 the v-counterpart;
/// both vanish exactly on the two-constraint set, and their sum is the
/// diagonal (Nehari) constraint <I'(u,v), (u,v)>.
pub fn constraints_g(grid: &Grid, p: &ModelParams, u: &Field, v: &Field) -> Result<(f64, f64)> {
    let (a1, a2) = nonlin::component_norms_sq(grid, p, u, v)?;
    nonlin::preflight(u, v)?;
    let hh = grid.h() * grid.h();
    // u H_u = mu1 u^2 g'(u^2) + beta |uv| g'(|uv|), v H_v symmetric; the
    // coupling term is shared.
    let (iu, iv) = util::map2_sum_pair(u.values(), v.values(), |x, y| {
        let s = (x * y).abs();
        let cross = p.beta * s * gp_raw(s);
        let q = x * x;
        let r = y * y;
        (p.mu1 * q * gp_raw(q) + cross, p.mu2 * r * gp_raw(r) + cross)
    });
    Ok((a1 - hh * iu, a2 - hh * iv))
}

/// The symmetric 2x2 matrix of fiber second-order terms,
///   a = int (u^2 H_uu - u H_u),  b = int (v^2 H_vv - v H_v),
///   c = int u v H_uv,
/// which controls both the Lagrange system on the two-constraint set and
/// the curvature of two-parameter fiber maps.
#[derive(Debug, Clone, Copy)]
pub struct MatrixJ {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl MatrixJ {
    pub fn det(&self) -> f64 {
        self.a * self.b - self.c * self.c
    }

    /// Solve [a c; c b] x = rhs. `None` when the determinant is numerically
    /// degenerate relative to the entries.
    pub fn solve(&self, rhs: (f64, f64)) -> Option<(f64, f64)> {
        let det = self.det();
        let scale = self.a.abs() * self.b.abs() + self.c * self.c;
        if det.abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
            return None;
        }
        let x = (rhs.0 * self.b - rhs.1 * self.c) / det;
        let y = (rhs.1 * self.a - rhs.0 * self.c) / det;
        Some((x, y))
    }
}

pub fn matrix_j(grid: &Grid, p: &ModelParams, u: &Field, v: &Field) -> Result<MatrixJ> {
    grid.check(u)?;
    grid.check(v)?;
    nonlin::preflight(u, v)?;
    let hh = grid.h() * grid.h();
    let (uv_a, uv_b) = util::map2_sum_pair(u.values(), v.values(), |x, y| {
        let (a, b, _) = fiber_terms(p, x, y);
        (a, b)
    });
    let c = util::map2_sum(u.values(), v.values(), |x, y| fiber_terms(p, x, y).2);
    Ok(MatrixJ {
        a: hh * uv_a,
        b: hh * uv_b,
        c: hh * c,
    })
}

/// Certified lower bound 4 (mu1 mu2 - beta^2) int u^4 e^{u^2} int v^4 e^{v^2}
/// on det(MatrixJ), valid for 0 <= beta < sqrt(mu1 mu2). Returns
/// (bound, scale) where `scale` = 4 mu1 mu2 int int sets the comparison
/// magnitude for slack.
pub fn det_j_lower_bound(
    grid: &Grid,
    p: &ModelParams,
    u: &Field,
    v: &Field,
) -> Result<(f64, f64)> {
    nonlin::preflight(u, v)?;
    let iu = grid.integrate_map(u.values(), |x| {
        let q = x * x;
        q * q * q.exp()
    });
    let iv = grid.integrate_map(v.values(), |y| {
        let r = y * y;
        r * r * r.exp()
    });
    let scale = 4.0 * p.mu1 * p.mu2 * iu * iv;
    Ok((4.0 * (p.mu1 * p.mu2 - p.beta * p.beta) * iu * iv, scale))
}

/// Directional derivatives of the two constraints at (u, v) in direction
/// (du, dv):
///   <G1', (du,dv)> = 2<u,du>_{l1} - int [du H_u + u (du H_uu + dv H_uv)],
///   <G2', (du,dv)> = 2<v,dv>_{l2} - int [dv H_v + v (du H_uv + dv H_vv)].
pub(super) fn constraint_pairings(
    grid: &Grid,
    p: &ModelParams,
    u: &Field,
    v: &Field,
    du: &[f64],
    dv: &[f64],
) -> Result<(f64, f64)> {
    nonlin::preflight(u, v)?;
    let quad1 = 2.0 * grid.h1_inner_raw(u.values(), du, p.lambda1);
    let quad2 = 2.0 * grid.h1_inner_raw(v.values(), dv, p.lambda2);
    let nn = grid.len();
    let mut n1 = vec![0.0; nn];
    let mut n2 = vec![0.0; nn];
    for k in 0..nn {
        let (x, y) = (u.values()[k], v.values()[k]);
        let (hx, hy) = nonlin::h_grad(p, x, y);
        let (hxx, hxy, hyy) = nonlin::h_hess(p, x, y);
        n1[k] = du[k] * hx + x * (du[k] * hxx + dv[k] * hxy);
        n2[k] = dv[k] * hy + y * (du[k] * hxy + dv[k] * hyy);
    }
    let hh = grid.h() * grid.h();
    Ok((
        quad1 - hh * util::pairwise_sum(&n1),
        quad2 - hh * util::pairwise_sum(&n2),
    ))
}

/// Unique t > 0 with d/dt I(sqrt(t) u, sqrt(t) v) = 0: the maximizer of the
/// diagonal fiber map. Requires beta >= 0 (strict monotonicity of the
/// constraint response). Residual contract: |D(t) - A| <= 1e-12 A with
/// A the quadratic part and D the response.
pub fn fiber_root_diag(grid: &Grid, p: &ModelParams, u: &Field, v: &Field) -> Result<f64> {
    fiber_root_diag_from(grid, p, u, v, None)
}

/// [`fiber_root_diag`] seeded with a previous root.
pub fn fiber_root_diag_from(
    grid: &Grid,
    p: &ModelParams,
    u: &Field,
    v: &Field,
    hint: Option<f64>,
) -> Result<f64> {
    grid.check(u)?;
    grid.check(v)?;
    if p.beta < 0.0 {
        return Err(Error::InvalidArg(format!(
            "diagonal fiber projection needs beta >= 0, got {}",
            p.beta
        )));
    }
    u.assert_finite()?;
    v.assert_finite()?;
    let sup2 = nonlin::max_exponent_arg(u, v);
    if sup2 == 0.0 {
        return Err(Error::InvalidArg(
            "diagonal fiber projection of the zero pair".into(),
        ));
    }
    let (a1, a2) = nonlin::component_norms_sq(grid, p, u, v)?;
    let a = a1 + a2;
    if a <= 0.0 {
        return Err(Error::InvalidArg(format!(
            "diagonal fiber projection needs a positive quadratic part, got {a:.3e}"
        )));
    }
    let t_cap = OVERFLOW_CAP / sup2;
    let hh = grid.h() * grid.h();
    let (uv, vv) = (u.values(), v.values());
    // Constraint response and its derivative in one pass; strictly
    // increasing and convex for beta >= 0.
    let d_pair = |t: f64| -> (f64, f64) {
        let (d, dp) = util::map2_sum_pair(uv, vv, |x, y| {
            let q = x * x;
            let r = y * y;
            let s = (x * y).abs();
            let (gq, gr, gs) = (gp_raw(t * q), gp_raw(t * r), gp_raw(t * s));
            (
                p.mu1 * q * gq + p.mu2 * r * gr + 2.0 * p.beta * s * gs,
                p.mu1 * q * q * (gq + 1.0)
                    + p.mu2 * r * r * (gr + 1.0)
                    + 2.0 * p.beta * s * s * (gs + 1.0),
            )
        });
        (hh * d, hh * dp)
    };
    let d_val = |t: f64| -> f64 {
        hh * util::map2_sum(uv, vv, |x, y| {
            let q = x * x;
            let r = y * y;
            let s = (x * y).abs();
            p.mu1 * q * gp_raw(t * q) + p.mu2 * r * gp_raw(t * r) + 2.0 * p.beta * s * gp_raw(t * s)
        })
    };

    let seed = hint
        .filter(|h| h.is_finite() && *h > 0.0)
        .unwrap_or(1.0)
        .min(0.5 * t_cap);
    let (mut lo, mut hi);
    if d_val(seed) > a {
        hi = seed;
        lo = seed;
        loop {
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(Error::NonConvergence {
                    what: "diagonal fiber bracket (lower)".into(),
                    iters: 0,
                    residual: f64::NAN,
                });
            }
            if d_val(lo) <= a {
                break;
            }
            hi = lo;
        }
    } else {
        lo = seed;
        hi = seed;
        loop {
            hi *= 2.0;
            if hi > t_cap {
                return Err(Error::Overflow {
                    arg: hi * sup2,
                    cap: OVERFLOW_CAP,
                });
            }
            if d_val(hi) >= a {
                break;
            }
            lo = hi;
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..8 {
        if (hi - lo) < 0.25 * t {
            break;
        }
        if d_val(t) < a {
            lo = t;
        } else {
            hi = t;
        }
        t = 0.5 * (lo + hi);
    }
    for _ in 0..100 {
        let (d, dp) = d_pair(t);
        let r = d - a;
        if r.abs() <= FIBER_REL_TOL * a {
            return Ok(t);
        }
        if r < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let mut t_next = t - r / dp;
        if !(t_next > lo && t_next < hi) {
            t_next = 0.5 * (lo + hi);
        }
        t = t_next;
    }
    let res = (d_val(t) - a).abs() / a;
    Err(Error::NonConvergence {
        what: "diagonal fiber root".into(),
        iters: 108,
        residual: res,
    })
}

/// Relative gap of the exact moment decomposition
///   I - (1/p) <I',(u,v)> = (p-2)/(2p) (A1 + A2) + K_p,
/// evaluated as |lhs - rhs| / max(|I|, A1 + A2).
pub fn moment_identity_gap(
    grid: &Grid,
    p: &ModelParams,
    u: &Field,
    v: &Field,
    pexp: f64,
) -> Result<f64> {
    let i = nonlin::energy(grid, p, u, v)?;
    let (g1, g2) = constraints_g(grid, p, u, v)?;
    let (a1, a2) = nonlin::component_norms_sq(grid, p, u, v)?;
    let kp = nonlin::k_p(grid, p, u, v, pexp)?;
    let lhs = i - (g1 + g2) / pexp;
    let rhs = (pexp - 2.0) / (2.0 * pexp) * (a1 + a2) + kp;
    let scale = i.abs().max(a1 + a2).max(f64::MIN_POSITIVE);
    Ok((lhs - rhs).abs() / scale)
}

/// sqrt(||grad(u - w)||^2 + ||grad(v - z)||^2): the seminorm distance used
/// for trust-ball checks and asymptotic sweeps.
pub fn pair_distance_h1(
    grid: &Grid,
    u: &Field,
    v: &Field,
    w: &Field,
    z: &Field,
) -> Result<f64> {
    grid.check(u)?;
    grid.check(v)?;
    grid.check(w)?;
    grid.check(z)?;
    let du: Vec<f64> = u.values().iter().zip(w.values()).map(|(a, b)| a - b).collect();
    let dv: Vec<f64> = v.values().iter().zip(z.values()).map(|(a, b)| a - b).collect();
    let n1 = grid.h1_inner_raw(&du, &du, 0.0);
    let n2 = grid.h1_inner_raw(&dv, &dv, 0.0);
    Ok((n1 + n2).sqrt())
}
