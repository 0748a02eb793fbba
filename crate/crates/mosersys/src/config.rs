//! TOML run configuration: one file describes a domain, model weights, the
//! regime to execute, and solver knobs. Unknown keys are rejected so typos
//! fail loudly instead of silently running defaults.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Shape;
use crate::nonlin::ModelParams;
use crate::scalar::ScalarOptions;
use crate::system::SystemOptions;

/// Which pipeline a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeRequest {
    /// One scalar ground state at (lambda1, mu1).
    Scalar,
    /// Weak-coupling vector ground state on the two-constraint set.
    SmallBeta,
    /// Strong-coupling state on the diagonal constraint set.
    LargeBeta,
    /// Repulsive-coupling local state near the uncoupled pair.
    NegativeBeta,
    /// Threshold/constants certification ledger.
    Constants,
    /// Randomized pointwise and field inequality suites.
    Inequalities,
    /// Strong-coupling level sweep over `beta_list`.
    Sweep,
}

impl fmt::Display for RegimeRequest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RegimeRequest::Scalar => "scalar",
            RegimeRequest::SmallBeta => "small-beta",
            RegimeRequest::LargeBeta => "large-beta",
            RegimeRequest::NegativeBeta => "negative-beta",
            RegimeRequest::Constants => "constants",
            RegimeRequest::Inequalities => "inequalities",
            RegimeRequest::Sweep => "sweep",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub shape: Shape,
    /// Nodes per bounding-box axis.
    pub n: usize,
}

/// Model weights; flat keys so configs read like the equations.
#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub beta: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        ParamsConfig {
            lambda1: 0.0,
            lambda2: 0.0,
            mu1: 1.0,
            mu2: 1.0,
            beta: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Relative first-order stationarity target.
    pub tol: f64,
    pub max_iter: usize,
    /// Independent scalar descent starts.
    pub restarts: usize,
    /// Seed for every randomized piece of a run; fixed default so reruns are
    /// bit-identical.
    pub seed: u64,
    /// Worker threads for sweep dispatch; 0 keeps the library default.
    pub workers: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-6,
            max_iter: 6000,
            restarts: 5,
            seed: 42,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    #[serde(default)]
    pub params: ParamsConfig,
    pub regime: RegimeRequest,
    /// Couplings for `sweep`, ascending and positive.
    #[serde(default)]
    pub beta_list: Vec<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Output directory; a `--out` flag overrides it.
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Externally supplied value for the critical-growth supremum; gates the
    /// subcritical mass-bound check in constants runs.
    #[serde(default)]
    pub d4pi: Option<f64>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    /// Structural checks that need no grid: finiteness, signs, and the
    /// regime-specific shape of the request. Domain-dependent hypotheses
    /// (lambda_i > -Lambda1) are checked after the eigenvalue solve.
    pub fn validate(&self) -> Result<()> {
        if self.domain.n < 3 {
            return Err(Error::Config(format!(
                "domain.n must be at least 3, got {}",
                self.domain.n
            )));
        }
        let s = &self.solver;
        if !(s.tol > 0.0 && s.tol.is_finite()) {
            return Err(Error::Config(format!("solver.tol must be positive, got {}", s.tol)));
        }
        if s.max_iter == 0 {
            return Err(Error::Config("solver.max_iter must be at least 1".into()));
        }
        if s.restarts == 0 {
            return Err(Error::Config("solver.restarts must be at least 1".into()));
        }
        let p = self.params;
        for (name, v) in [
            ("lambda1", p.lambda1),
            ("lambda2", p.lambda2),
            ("mu1", p.mu1),
            ("mu2", p.mu2),
            ("beta", p.beta),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("params.{name} must be finite, got {v}")));
            }
        }
        if !(p.mu1 > 0.0 && p.mu2 > 0.0) {
            return Err(Error::Config(format!(
                "params.mu1 and params.mu2 must be positive, got ({}, {})",
                p.mu1, p.mu2
            )));
        }
        if let Some(d) = self.d4pi {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Config(format!("d4pi must be positive, got {d}")));
            }
        }
        match self.regime {
            RegimeRequest::Sweep => {
                if self.beta_list.is_empty() {
                    return Err(Error::Config("sweep needs a non-empty beta_list".into()));
                }
                for w in self.beta_list.windows(2) {
                    if !(w[1] > w[0]) {
                        return Err(Error::Config(format!(
                            "beta_list must be strictly ascending, got {} then {}",
                            w[0], w[1]
                        )));
                    }
                }
                if !self.beta_list.iter().all(|b| b.is_finite() && *b > 0.0) {
                    return Err(Error::Config("beta_list entries must be positive and finite".into()));
                }
            }
            RegimeRequest::SmallBeta | RegimeRequest::LargeBeta => {
                if !(p.beta > 0.0) {
                    return Err(Error::Config(format!(
                        "{} needs params.beta > 0, got {}",
                        self.regime, p.beta
                    )));
                }
            }
            RegimeRequest::NegativeBeta => {
                if !(p.beta < 0.0) {
                    return Err(Error::Config(format!(
                        "negative-beta needs params.beta < 0, got {}",
                        p.beta
                    )));
                }
            }
            RegimeRequest::Scalar | RegimeRequest::Constants | RegimeRequest::Inequalities => {}
        }
        Ok(())
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            lambda1: self.params.lambda1,
            lambda2: self.params.lambda2,
            mu1: self.params.mu1,
            mu2: self.params.mu2,
            beta: self.params.beta,
        }
    }

    pub fn scalar_options(&self) -> ScalarOptions {
        ScalarOptions {
            stationarity_tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            restarts: self.solver.restarts,
            seed: self.solver.seed,
        }
    }

    pub fn system_options(&self) -> SystemOptions {
        SystemOptions {
            stationarity_tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            beta_negative_cap: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        regime = "scalar"
        [domain]
        shape = "unit-square"
        n = 31
    "#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.regime, RegimeRequest::Scalar);
        assert_eq!(cfg.solver.seed, 42);
        assert_eq!(cfg.solver.restarts, 5);
        assert!((cfg.solver.tol - 1e-6).abs() < 1e-18);
        assert_eq!(cfg.params.mu1, 1.0);
        assert!(cfg.out.is_none() && cfg.d4pi.is_none());
        assert_eq!(cfg.model_params().beta, 0.0);
    }

    #[test]
    fn full_config_round_trips() {
        let cfg = RunConfig::from_toml(
            r#"
            regime = "sweep"
            beta_list = [1.0, 2.0, 5.0]
            out = "artifacts/run1"
            d4pi = 9.5
            [domain]
            shape = "unit-disk"
            n = 63
            [params]
            lambda1 = 0.5
            lambda2 = -1.0
            mu1 = 2.0
            mu2 = 3.0
            beta = 0.0
            [solver]
            tol = 1e-7
            max_iter = 9000
            restarts = 2
            seed = 7
            workers = 4
            "#,
        )
        .unwrap();
        assert_eq!(cfg.domain.shape, Shape::UnitDisk);
        assert_eq!(cfg.beta_list, vec![1.0, 2.0, 5.0]);
        assert_eq!(cfg.solver.workers, 4);
        assert_eq!(cfg.scalar_options().seed, 7);
        assert_eq!(cfg.system_options().max_iter, 9000);
        assert_eq!(cfg.out.as_deref(), Some(Path::new("artifacts/run1")));
    }

    #[test]
    fn rejects_malformed_requests() {
        // unknown key
        assert!(RunConfig::from_toml(&format!("{MINIMAL}\nbogus = 1")).is_err());
        // sweep without betas
        let sweep = MINIMAL.replace("\"scalar\"", "\"sweep\"");
        assert!(matches!(RunConfig::from_toml(&sweep), Err(Error::Config(_))));
        // descending sweep
        let desc = format!("{}\nbeta_list = [2.0, 1.0]", sweep);
        assert!(RunConfig::from_toml(&desc).is_err());
        // wrong coupling sign for the regime
        let neg = MINIMAL.replace("\"scalar\"", "\"negative-beta\"");
        assert!(RunConfig::from_toml(&neg).is_err());
        // bad solver knob
        let bad_tol = format!("{MINIMAL}\n[solver]\ntol = 0.0");
        assert!(RunConfig::from_toml(&bad_tol).is_err());
        // non-positive weight
        let bad_mu = format!("{MINIMAL}\n[params]\nmu1 = -1.0");
        assert!(RunConfig::from_toml(&bad_mu).is_err());
    }
}
