//! Shared projected-descent engine on the two-constraint set.
//!
//! Both the small-coupling solver and the negative-coupling solver minimize
//! the pair energy over the same constraint set; they differ only in the
//! seed, the admissible coupling range and the certificates attached to the
//! result. The engine below owns the common loop: preconditioned gradient,
//! first-order tangent correction, absolute-value cone enforcement,
//! reprojection line search, and the per-iterate guards (semitrivial
//! collapse, optional seed ball, determinant bound).

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::nonlin::{self, ModelParams};
use crate::system::ops::{self};
use crate::system::project;
use crate::system::{FiberCoords, SystemOptions};
use crate::util;

/// A component whose squared mass drops below this fraction of its seed
/// value is treated as collapsed to a semitrivial state.
pub(super) const MASS_COLLAPSE_REL: f64 = 1e-8;

const LINE_SEARCH_HALVINGS: usize = 40;

/// Keep-away constraint: every accepted iterate must stay within `radius`
/// of the center pair in the gradient seminorm.
pub(super) struct DeltaBall<'a> {
    pub center_u: &'a Field,
    pub center_v: &'a Field,
    pub radius: f64,
}

pub(super) struct DescentOutcome {
    pub u: Field,
    pub v: Field,
    pub iterations: usize,
    /// Whether the fiber-matrix determinant bound held at every accepted
    /// iterate (positive coupling) resp. stayed positive (negative coupling).
    pub det_ok_all: bool,
}

/// Determinant check appropriate to the sign of the coupling. Below the
/// geometric-mean threshold the product bound is certified; for negative
/// coupling only positivity of the determinant is meaningful.
fn det_bound_holds(grid: &Grid, p: &ModelParams, u: &Field, v: &Field) -> Result<bool> {
    let j = ops::matrix_j(grid, p, u, v)?;
    if p.beta >= 0.0 && p.beta < p.mu_geo() {
        let (bound, scale) = ops::det_j_lower_bound(grid, p, u, v)?;
        Ok(j.det() >= bound - 1e-10 * scale)
    } else {
        Ok(j.det() > 0.0)
    }
}

/// Minimize the pair energy over the two-constraint set, starting from a
/// pair already on it. Returns the final iterate; the caller recomputes
/// residuals and certificates from scratch.
pub(super) fn descend_on_m(
    grid: &Grid,
    p: &ModelParams,
    seed_u: &Field,
    seed_v: &Field,
    opts: &SystemOptions,
    ball: Option<&DeltaBall<'_>>,
) -> Result<DescentOutcome> {
    let nn = grid.len();
    let mut u = seed_u.clone();
    let mut v = seed_v.clone();
    let mass_u0 = grid.integrate_map(u.values(), |x| x * x);
    let mass_v0 = grid.integrate_map(v.values(), |x| x * x);
    if mass_u0 <= 0.0 || mass_v0 <= 0.0 {
        return Err(Error::InvalidArg(
            "descent seed has a trivial component".into(),
        ));
    }
    let mut energy = nonlin::energy(grid, p, &u, &v)?;
    let mut det_ok_all = det_bound_holds(grid, p, &u, &v)?;

    let mut lu = vec![0.0; nn];
    let mut lv = vec![0.0; nn];
    let mut rel = f64::INFINITY;
    for it in 0..opts.max_iter {
        let (gu, gv) = nonlin::energy_grad(grid, p, &u, &v)?;
        grid.lap_into(u.values(), &mut lu);
        grid.lap_into(v.values(), &mut lv);
        let gnorm = util::dot(gu.values(), gu.values()) + util::dot(gv.values(), gv.values());
        let scale = util::dot(&lu, &lu) + util::dot(&lv, &lv);
        rel = (gnorm / scale.max(f64::MIN_POSITIVE)).sqrt();
        if rel <= opts.stationarity_tol {
            return Ok(DescentOutcome {
                u,
                v,
                iterations: it,
                det_ok_all,
            });
        }

        // Preconditioned direction, then remove the first-order drift off the
        // constraint set: d' = d - c1 (u, 0) - c2 (0, v) with [a c; c b]
        // applied to (c1, c2) matching the pairings of the raw direction.
        let mut du = grid.poisson_solve_raw(gu.values())?;
        let mut dv = grid.poisson_solve_raw(gv.values())?;
        let j = ops::matrix_j(grid, p, &u, &v)?;
        let (r1, r2) = ops::constraint_pairings(grid, p, &u, &v, &du, &dv)?;
        if let Some((c1, c2)) = j.solve((-r1, -r2)) {
            if c1.is_finite() && c2.is_finite() {
                for k in 0..nn {
                    du[k] -= c1 * u.values()[k];
                    dv[k] -= c2 * v.values()[k];
                }
            }
        }

        // Backtracking with cone enforcement and exact reprojection. A trial
        // that overflows or escapes the projector's scaling box just shortens
        // the step.
        let mut alpha = 1.0;
        let mut hint = FiberCoords { t: 1.0, s: 1.0 };
        let mut accepted = false;
        for _ in 0..LINE_SEARCH_HALVINGS {
            let tu: Vec<f64> = u
                .values()
                .iter()
                .zip(&du)
                .map(|(x, d)| (x - alpha * d).abs())
                .collect();
            let tv: Vec<f64> = v
                .values()
                .iter()
                .zip(&dv)
                .map(|(x, d)| (x - alpha * d).abs())
                .collect();
            let tu = grid.field_from_values(tu)?;
            let tv = grid.field_from_values(tv)?;
            match project::project_m_beta_from(grid, p, &tu, &tv, Some(hint)) {
                Ok(fc) => {
                    let rt = fc.t.sqrt();
                    let rs = fc.s.sqrt();
                    let w = grid.field_from_values(
                        tu.values().iter().map(|x| rt * x).collect(),
                    )?;
                    let z = grid.field_from_values(
                        tv.values().iter().map(|x| rs * x).collect(),
                    )?;
                    match nonlin::energy(grid, p, &w, &z) {
                        Ok(e) if e < energy => {
                            u = w;
                            v = z;
                            energy = e;
                            accepted = true;
                        }
                        Ok(_) => {
                            hint = fc;
                            alpha *= 0.5;
                            continue;
                        }
                        Err(Error::Overflow { .. }) => {
                            alpha *= 0.5;
                            continue;
                        }
                        Err(e) => return Err(e),
                    }
                }
                Err(Error::Overflow { .. }) | Err(Error::Projection(_)) => {
                    alpha *= 0.5;
                    continue;
                }
                Err(e) => return Err(e),
            }
            break;
        }

        if !accepted {
            // The projector quantizes tiny steps; once the stationarity
            // residual is within an order of the target, a stalled line
            // search means the iterate is converged for practical purposes.
            if rel <= 10.0 * opts.stationarity_tol {
                return Ok(DescentOutcome {
                    u,
                    v,
                    iterations: it,
                    det_ok_all,
                });
            }
            return Err(Error::NonConvergence {
                what: "constrained pair descent (line search stalled)".into(),
                iters: it,
                residual: rel,
            });
        }

        let mu_now = grid.integrate_map(u.values(), |x| x * x);
        let mv_now = grid.integrate_map(v.values(), |x| x * x);
        if mu_now < MASS_COLLAPSE_REL * mass_u0 {
            return Err(Error::SemitrivialCollapse { component: "first" });
        }
        if mv_now < MASS_COLLAPSE_REL * mass_v0 {
            return Err(Error::SemitrivialCollapse {
                component: "second",
            });
        }
        if let Some(b) = ball {
            let dist = ops::pair_distance_h1(grid, &u, &v, b.center_u, b.center_v)?;
            if dist > b.radius {
                return Err(Error::RegimeFailure(format!(
                    "iterate left the seed ball: distance {dist:.6e} exceeds radius {:.6e}",
                    b.radius
                )));
            }
        }
        det_ok_all = det_ok_all && det_bound_holds(grid, p, &u, &v)?;
    }

    Err(Error::NonConvergence {
        what: "constrained pair descent".into(),
        iters: opts.max_iter,
        residual: rel,
    })
}

fn min_value(f: &Field) -> f64 {
    f.values().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Assemble the solution record for a two-constraint regime. The level
/// ordering predicate is regime-specific and supplied by the caller.
pub(super) fn finalize_two_constraint(
    grid: &Grid,
    p: &ModelParams,
    out: DescentOutcome,
    regime: crate::system::Regime,
    level_reference: f64,
    ordering: impl Fn(f64) -> bool,
    within_delta_ball: Option<bool>,
) -> Result<crate::system::SystemSolution> {
    let DescentOutcome {
        u,
        v,
        iterations,
        det_ok_all,
    } = out;
    let (g1, g2) = ops::constraints_g(grid, p, &u, &v)?;
    let (a1, a2) = nonlin::component_norms_sq(grid, p, &u, &v)?;
    let constraint_residuals = (
        g1.abs() / a1.max(f64::MIN_POSITIVE),
        g2.abs() / a2.max(f64::MIN_POSITIVE),
    );
    let level = nonlin::energy(grid, p, &u, &v)?;
    let det_j = ops::matrix_j(grid, p, &u, &v)?.det();
    let det_final = det_bound_holds(grid, p, &u, &v)?;

    let (gu, gv) = nonlin::energy_grad(grid, p, &u, &v)?;
    let mut lap = vec![0.0; grid.len()];
    grid.lap_into(u.values(), &mut lap);
    let r1 = util::l2_norm(gu.values()) / util::l2_norm(&lap).max(f64::MIN_POSITIVE);
    grid.lap_into(v.values(), &mut lap);
    let r2 = util::l2_norm(gv.values()) / util::l2_norm(&lap).max(f64::MIN_POSITIVE);

    let mut moment_ok = true;
    for pexp in [2.0, 3.0, 4.0] {
        moment_ok = moment_ok && ops::moment_identity_gap(grid, p, &u, &v, pexp)? <= 1e-10;
    }

    let masses = (
        grid.integrate_map(u.values(), |x| x * x),
        grid.integrate_map(v.values(), |x| x * x),
    );
    let min_values = (min_value(&u), min_value(&v));
    let grad_norms = (grid.grad_norm_sq(&u)?.sqrt(), grid.grad_norm_sq(&v)?.sqrt());

    let certificates = crate::system::SystemCertificates {
        nontrivial: masses.0 > 0.0 && masses.1 > 0.0,
        positive: min_values.0 > 0.0 && min_values.1 > 0.0,
        constraints_ok: constraint_residuals.0 <= ops::CONSTRAINT_REL_TOL
            && constraint_residuals.1 <= ops::CONSTRAINT_REL_TOL,
        level_ordering: ordering(level),
        det_j_ok: det_ok_all && det_final,
        moment_identity_ok: moment_ok,
        norm_bound_ok: None,
        beta_level_bound_ok: None,
        within_delta_ball,
    };

    Ok(crate::system::SystemSolution {
        u,
        v,
        params: *p,
        regime,
        level,
        level_reference,
        constraint_residuals,
        pde_residuals: (r1, r2),
        det_j,
        grad_norms,
        masses,
        min_values,
        certificates,
        iterations,
    })
}
