//! Config-driven pipeline behind the `mosersys` binary: build the domain,
//! dispatch the requested regime, emit artifacts through a single collector,
//! and reduce the run's certificates to an exit class.
//!
//! Exit taxonomy (stable for scripting): 0 all certificates pass, 2 the
//! request was rejected before solving (config, hypothesis, or input
//! validation), 3 a solver failed to produce a converged admissible state,
//! 4 the run completed but a certificate failed.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{RegimeRequest, RunConfig};
use crate::constants::{
    beta_star_lower_bound, check_quartic_moment_bound, check_subcritical_mass_bound,
    pointwise_inequality_suite, random_smooth_unit_field, threshold_report, PointwiseSuiteReport,
};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::nonlin::ModelParams;
use crate::report::{Manifest, OutputDir};
use crate::scalar::{solve_scalar_ground_state, ScalarGroundState};
use crate::system::{
    large_beta_sweep, solve_large_beta, solve_negative_beta, solve_small_beta, Regime,
    SystemCertificates, SystemSolution, CONSTRAINT_REL_TOL,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_CERTIFICATE: i32 = 4;

/// Simpson panels for the trial lower bound in constants runs.
const PROFILE_PANELS: usize = 512;

/// Map an error to its exit class: failures of the iteration (it ran and
/// gave up, collapsed, or left its trust region) are non-convergence;
/// everything rejected up front is validation.
pub fn exit_class(err: &Error) -> i32 {
    match err {
        Error::NonConvergence { .. }
        | Error::SemitrivialCollapse { .. }
        | Error::RegimeFailure(_)
        | Error::Projection(_)
        | Error::Overflow { .. }
        | Error::DegenerateOverlap => EXIT_NONCONVERGENCE,
        _ => EXIT_VALIDATION,
    }
}

/// Completed run: the sealed manifest plus the exit code the binary returns.
#[derive(Debug)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub exit_code: i32,
}

/// Execute one configured run, writing all artifacts under the output
/// directory (`out_override` beats the config's `out`).
pub fn run(config: &RunConfig, out_override: Option<&Path>, verbose: bool) -> Result<RunOutcome> {
    config.validate()?;
    let out_root: PathBuf = match (out_override, &config.out) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => p.clone(),
        (None, None) => {
            return Err(Error::Config(
                "no output directory: set `out` in the config or pass --out".into(),
            ))
        }
    };
    let grid = Grid::new(config.domain.shape, config.domain.n)?;
    let p = config.model_params();
    p.validate(grid.principal_eigenvalue()?)?;
    let mut sink = OutputDir::create(&out_root)?;
    // Echo the request so every artifact set is reproducible from itself.
    sink.write_json("config.json", config)?;
    let mut certs: BTreeMap<String, bool> = BTreeMap::new();

    let work = |sink: &mut OutputDir, certs: &mut BTreeMap<String, bool>| match config.regime {
        RegimeRequest::Scalar => run_scalar(&grid, config, sink, certs, verbose),
        RegimeRequest::SmallBeta | RegimeRequest::LargeBeta | RegimeRequest::NegativeBeta => {
            run_system(&grid, config, sink, certs, verbose)
        }
        RegimeRequest::Constants => run_constants(&grid, config, sink, certs, verbose),
        RegimeRequest::Inequalities => run_inequalities(&grid, config, sink, certs, verbose),
        RegimeRequest::Sweep => run_sweep(&grid, config, sink, certs, verbose),
    };
    if config.solver.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.solver.workers)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        pool.install(|| work(&mut sink, &mut certs))?;
    } else {
        work(&mut sink, &mut certs)?;
    }

    let manifest = sink.finish(&config.regime.to_string(), config.solver.seed, certs)?;
    let exit_code = if manifest.all_pass {
        EXIT_OK
    } else {
        EXIT_CERTIFICATE
    };
    Ok(RunOutcome {
        manifest,
        exit_code,
    })
}

fn note(verbose: bool, what: &str, t: Instant) {
    if verbose {
        eprintln!("[mosersys] {what} ({:.1} ms)", t.elapsed().as_secs_f64() * 1e3);
    }
}

fn solve_component(
    grid: &Grid,
    config: &RunConfig,
    lambda: f64,
    mu: f64,
    verbose: bool,
    tag: &str,
) -> Result<ScalarGroundState> {
    let t = Instant::now();
    let gs = solve_scalar_ground_state(grid, lambda, mu, &config.scalar_options())?;
    note(
        verbose,
        &format!("scalar ground state {tag}: level {:.6}", gs.energy),
        t,
    );
    Ok(gs)
}

#[derive(Serialize)]
struct ScalarReport<'a> {
    lambda: f64,
    mu: f64,
    energy: f64,
    energy_band: (f64, f64),
    norm_sq: f64,
    constraint_residual: f64,
    stationarity: f64,
    sup_norm: f64,
    min_value: f64,
    iterations: usize,
    restart_energies: &'a [f64],
}

fn run_scalar(
    grid: &Grid,
    config: &RunConfig,
    sink: &mut OutputDir,
    certs: &mut BTreeMap<String, bool>,
    verbose: bool,
) -> Result<()> {
    let p = config.model_params();
    let gs = solve_component(grid, config, p.lambda1, p.mu1, verbose, "u")?;
    sink.write_json(
        "report.json",
        &ScalarReport {
            lambda: p.lambda1,
            mu: p.mu1,
            energy: gs.energy,
            energy_band: gs.energy_band,
            norm_sq: gs.norm_sq,
            constraint_residual: gs.constraint_residual,
            stationarity: gs.stationarity,
            sup_norm: gs.u.sup_norm(),
            min_value: gs.min_value,
            iterations: gs.iterations,
            restart_energies: &gs.restart_energies,
        },
    )?;
    sink.write_field(grid, &gs.u, "u.csv")?;
    certs.insert(
        "constraint_residual".into(),
        gs.constraint_residual <= CONSTRAINT_REL_TOL,
    );
    certs.insert(
        "stationarity".into(),
        gs.stationarity <= 10.0 * config.solver.tol,
    );
    certs.insert("positive".into(), gs.min_value > 0.0);
    certs.insert(
        "level_band".into(),
        gs.energy_band.0 < gs.energy && gs.energy < gs.energy_band.1,
    );
    certs.insert(
        "level_window".into(),
        gs.energy > 0.0 && gs.energy < 2.0 * PI,
    );
    Ok(())
}

#[derive(Serialize)]
struct SystemReport<'a> {
    regime: Regime,
    params: &'a ModelParams,
    /// Uncoupled component levels (E1, E2) used as references.
    scalar_levels: (f64, f64),
    level: f64,
    level_reference: f64,
    constraint_residuals: (f64, f64),
    pde_residuals: (f64, f64),
    det_j: f64,
    grad_norms: (f64, f64),
    masses: (f64, f64),
    min_values: (f64, f64),
    iterations: usize,
    certificates: SystemCertificates,
}

fn insert_system_certs(certs: &mut BTreeMap<String, bool>, prefix: &str, c: &SystemCertificates) {
    let key = |name: &str| {
        if prefix.is_empty() {
            name.to_string()
        } else {
            format!("{prefix}{name}")
        }
    };
    certs.insert(key("nontrivial"), c.nontrivial);
    certs.insert(key("positive"), c.positive);
    certs.insert(key("constraints"), c.constraints_ok);
    certs.insert(key("level_ordering"), c.level_ordering);
    certs.insert(key("det_j"), c.det_j_ok);
    certs.insert(key("moment_identity"), c.moment_identity_ok);
    if let Some(ok) = c.norm_bound_ok {
        certs.insert(key("norm_bound"), ok);
    }
    if let Some(ok) = c.beta_level_bound_ok {
        certs.insert(key("beta_level_bound"), ok);
    }
    if let Some(ok) = c.within_delta_ball {
        certs.insert(key("within_delta_ball"), ok);
    }
}

fn run_system(
    grid: &Grid,
    config: &RunConfig,
    sink: &mut OutputDir,
    certs: &mut BTreeMap<String, bool>,
    verbose: bool,
) -> Result<()> {
    let p = config.model_params();
    let gs1 = solve_component(grid, config, p.lambda1, p.mu1, verbose, "u")?;
    let gs2 = solve_component(grid, config, p.lambda2, p.mu2, verbose, "v")?;
    let opts = config.system_options();
    let t = Instant::now();
    let sol: SystemSolution = match config.regime {
        RegimeRequest::SmallBeta => solve_small_beta(grid, &p, (&gs1, &gs2), &opts)?,
        RegimeRequest::LargeBeta => solve_large_beta(grid, &p, (&gs1, &gs2), &opts)?,
        RegimeRequest::NegativeBeta => solve_negative_beta(grid, &p, (&gs1, &gs2), &opts)?,
        _ => unreachable!("run_system only handles coupled regimes"),
    };
    note(
        verbose,
        &format!("{} state: level {:.6}", sol.regime, sol.level),
        t,
    );
    sink.write_json(
        "report.json",
        &SystemReport {
            regime: sol.regime,
            params: &sol.params,
            scalar_levels: (gs1.energy, gs2.energy),
            level: sol.level,
            level_reference: sol.level_reference,
            constraint_residuals: sol.constraint_residuals,
            pde_residuals: sol.pde_residuals,
            det_j: sol.det_j,
            grad_norms: sol.grad_norms,
            masses: sol.masses,
            min_values: sol.min_values,
            iterations: sol.iterations,
            certificates: sol.certificates,
        },
    )?;
    sink.write_field(grid, &sol.u, "u.csv")?;
    sink.write_field(grid, &sol.v, "v.csv")?;
    insert_system_certs(certs, "", &sol.certificates);
    Ok(())
}

fn run_constants(
    grid: &Grid,
    config: &RunConfig,
    sink: &mut OutputDir,
    certs: &mut BTreeMap<String, bool>,
    verbose: bool,
) -> Result<()> {
    let p = config.model_params();
    let gs1 = solve_component(grid, config, p.lambda1, p.mu1, verbose, "u")?;
    let gs2 = solve_component(grid, config, p.lambda2, p.mu2, verbose, "v")?;
    let t = Instant::now();
    let report = threshold_report(grid, &p, &gs1, &gs2, config.d4pi, PROFILE_PANELS)?;
    note(verbose, "threshold report assembled", t);

    let mut table = String::from("gamma,c_gamma\n");
    for row in &report.c_gamma_table {
        table.push_str(&format!("{},{}\n", row.gamma, row.c));
    }
    sink.write_text("c_gamma.csv", &table)?;
    sink.write_json("report.json", &report)?;

    let th = &report.thresholds;
    let positive = [
        th.beta1,
        th.beta2,
        th.beta3,
        th.beta4,
        th.beta5,
        th.beta6,
        th.beta_star,
        th.beta_bar0,
    ]
    .iter()
    .all(|b| b.is_finite() && *b > 0.0);
    certs.insert("thresholds_positive".into(), positive);
    certs.insert("scalar_levels_in_band".into(), report.e_band_conforming);
    certs.insert(
        "beta_star_bound_positive".into(),
        report.beta_star_lb.is_finite() && report.beta_star_lb > 0.0,
    );
    certs.insert(
        "critical_supremum_bounds_positive".into(),
        report.d4pi_trial_lb > 0.0 && report.d4pi_spectral_lb > 0.0,
    );
    // Symmetric models must collapse the cross ratios onto the self ratios
    // exactly; the flag only exists when the model is symmetric.
    if p.lambda1 == p.lambda2 && p.mu1 == p.mu2 {
        certs.insert(
            "beta1_eq_beta5".into(),
            th.beta1.to_bits() == th.beta5.to_bits() && th.beta2.to_bits() == th.beta6.to_bits(),
        );
    }
    // The subcritical mass bound is only a checkable certificate when the
    // critical supremum is supplied (a computed lower bound would make an
    // honest failure meaningless); see the check's direction caveat.
    if let Some(d) = config.d4pi {
        let mut rng = ChaCha8Rng::seed_from_u64(config.solver.seed);
        let mut ok = true;
        for _ in 0..5 {
            let u = random_smooth_unit_field(grid, &mut rng)?;
            for gamma in [PI, 2.0 * PI, 3.0 * PI] {
                let (_, _, pass) = check_subcritical_mass_bound(grid, &u, gamma, d)?;
                ok &= pass;
            }
        }
        certs.insert("subcritical_mass_bound".into(), ok);
        // Consistency of the closed-form threshold floor at the supplied d.
        let lb = beta_star_lower_bound(&p, report.lambda1_domain, d)?;
        certs.insert(
            "beta_star_bound_at_config_d4pi".into(),
            lb.is_finite() && lb > 0.0,
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct QuarticRow {
    gamma: f64,
    fields: usize,
    violations: usize,
    /// Largest observed lhs/rhs; stays below 1 when the bound holds.
    max_ratio: f64,
}

#[derive(Serialize)]
struct InequalitiesReport {
    pointwise: PointwiseSuiteReport,
    quartic_moment: Vec<QuarticRow>,
}

fn run_inequalities(
    grid: &Grid,
    config: &RunConfig,
    sink: &mut OutputDir,
    certs: &mut BTreeMap<String, bool>,
    verbose: bool,
) -> Result<()> {
    let t = Instant::now();
    let pointwise = pointwise_inequality_suite(100_000, config.solver.seed, 1e-12);
    note(verbose, "pointwise suite swept", t);

    let t = Instant::now();
    let gammas = [1.0, PI, 2.0 * PI, 3.9 * PI];
    let mut rows: Vec<QuarticRow> = gammas
        .iter()
        .map(|&gamma| QuarticRow {
            gamma,
            fields: 0,
            violations: 0,
            max_ratio: 0.0,
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.solver.seed);
    for _ in 0..50 {
        let u = random_smooth_unit_field(grid, &mut rng)?;
        for row in rows.iter_mut() {
            let (lhs, rhs, ok) = check_quartic_moment_bound(grid, &u, row.gamma)?;
            row.fields += 1;
            if !ok {
                row.violations += 1;
            }
            if rhs > 0.0 {
                row.max_ratio = row.max_ratio.max(lhs / rhs);
            }
        }
    }
    note(verbose, "quartic moment bound checked on 50 fields", t);

    certs.insert("pointwise_suite".into(), pointwise.all_pass());
    certs.insert(
        "quartic_moment_bound".into(),
        rows.iter().all(|r| r.violations == 0),
    );
    sink.write_json(
        "report.json",
        &InequalitiesReport {
            pointwise,
            quartic_moment: rows,
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    beta: f64,
    level: f64,
    level_reference: f64,
    grad_norm_u: f64,
    grad_norm_v: f64,
    constraint_residuals: (f64, f64),
    pde_residuals: (f64, f64),
    iterations: usize,
    certificates: SystemCertificates,
}

#[derive(Serialize)]
struct SweepReport {
    scalar_levels: (f64, f64),
    rows: Vec<SweepRow>,
}

fn run_sweep(
    grid: &Grid,
    config: &RunConfig,
    sink: &mut OutputDir,
    certs: &mut BTreeMap<String, bool>,
    verbose: bool,
) -> Result<()> {
    let p = config.model_params();
    let gs1 = solve_component(grid, config, p.lambda1, p.mu1, verbose, "u")?;
    let gs2 = solve_component(grid, config, p.lambda2, p.mu2, verbose, "v")?;
    let t = Instant::now();
    let sols = large_beta_sweep(
        grid,
        &p,
        &config.beta_list,
        (&gs1, &gs2),
        &config.system_options(),
    )?;
    note(
        verbose,
        &format!("sweep solved {} couplings", sols.len()),
        t,
    );

    let mut csv =
        String::from("beta,level,grad_norm_u,grad_norm_v,cert_level_ordering,cert_det_j,iters\n");
    for (beta, sol) in config.beta_list.iter().zip(&sols) {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            beta,
            sol.level,
            sol.grad_norms.0,
            sol.grad_norms.1,
            u8::from(sol.certificates.level_ordering),
            u8::from(sol.certificates.det_j_ok),
            sol.iterations
        ));
    }
    sink.write_text("sweep.csv", &csv)?;

    let rows: Vec<SweepRow> = config
        .beta_list
        .iter()
        .zip(&sols)
        .map(|(beta, sol)| SweepRow {
            beta: *beta,
            level: sol.level,
            level_reference: sol.level_reference,
            grad_norm_u: sol.grad_norms.0,
            grad_norm_v: sol.grad_norms.1,
            constraint_residuals: sol.constraint_residuals,
            pde_residuals: sol.pde_residuals,
            iterations: sol.iterations,
            certificates: sol.certificates,
        })
        .collect();
    sink.write_json(
        "report.json",
        &SweepReport {
            scalar_levels: (gs1.energy, gs2.energy),
            rows,
        },
    )?;

    for (k, sol) in sols.iter().enumerate() {
        certs.insert(
            format!("sweep_entry{k}_certified"),
            sol.certificates.all_pass(),
        );
    }
    let monotone = sols.windows(2).all(|w| {
        w[1].level <= w[0].level + 1e-10 * w[0].level.abs().max(1.0)
    });
    certs.insert("sweep_levels_monotone".into(), monotone);
    Ok(())
}
