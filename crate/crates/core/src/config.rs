//! Declarative experiment configuration.
//!
//! Flat TOML with one section per concern. Unknown keys are errors, not
//! warnings: a silently ignored key would invalidate the provenance of any
//! run that used the file.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::backward_scheme::ObstacleForm;
use crate::delay_measure::DelayMeasure;
use crate::error::{Error, Result};
use crate::generator::{GeneratorForm, GeneratorSpec};
use crate::path_engine::PathEnsemble;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub delay_measure: DelayMeasureConfig,
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub obstacle: ObstacleForm,
    pub terminal: TerminalCondition,
    #[serde(default)]
    pub constants: ConstantsConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub paths: usize,
    pub steps: usize,
    pub horizon: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayMeasureConfig {
    /// `[lag, weight]` pairs.
    pub atoms: Vec<[f64; 2]>,
}

impl Default for DelayMeasureConfig {
    fn default() -> Self {
        Self {
            atoms: vec![[0.0, 1.0]],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub f: GeneratorForm,
    pub g: GeneratorForm,
    pub lipschitz: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum TerminalCondition {
    /// ξ = W_T
    WT,
    Constant { value: f64 },
    /// ξ = (strike - W_T)^+
    PutOnW { strike: f64 },
}

impl TerminalCondition {
    pub fn sample(&self, ensemble: &PathEnsemble) -> Vec<f64> {
        let n = ensemble.step_count;
        (0..ensemble.path_count)
            .map(|m| match self {
                TerminalCondition::WT => ensemble.w[m][n],
                TerminalCondition::Constant { value } => *value,
                TerminalCondition::PutOnW { strike } => (strike - ensemble.w[m][n]).max(0.0),
            })
            .collect()
    }
}

impl Default for ObstacleForm {
    fn default() -> Self {
        ObstacleForm::None
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    pub beta: f64,
    pub theta: f64,
    pub epsilon: f64,
    pub c_hat: f64,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            theta: 0.5,
            epsilon: 0.5,
            c_hat: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub basis_degree: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 15,
            basis_degree: 1,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: Config =
            toml::from_str(text).map_err(|e| Error::Config(format!("{e}")))?;
        config.validate()?;
        Ok(config)
    }

    /// Structural validation that needs no ensemble: positive dimensions,
    /// measure and generator invariants, constant signs.
    pub fn validate(&self) -> Result<()> {
        if self.ensemble.paths == 0 {
            return Err(Error::Config("ensemble.paths must be at least 1".into()));
        }
        if self.ensemble.steps == 0 {
            return Err(Error::Config("ensemble.steps must be at least 1".into()));
        }
        if !(self.ensemble.horizon > 0.0) {
            return Err(Error::Config("ensemble.horizon must be positive".into()));
        }
        self.delay()
            .map_err(|e| Error::Config(format!("delay_measure.atoms: {e}")))?;
        self.generator_spec()
            .map_err(|e| Error::Config(format!("generator: {e}")))?;
        if !(self.constants.beta > 0.0) {
            return Err(Error::Config("constants.beta must be positive".into()));
        }
        if !(self.constants.theta > 0.0) {
            return Err(Error::Config("constants.theta must be positive".into()));
        }
        if !(self.constants.epsilon > 0.0) {
            return Err(Error::Config("constants.epsilon must be positive".into()));
        }
        if !(self.constants.c_hat > 0.0) {
            return Err(Error::Config("constants.c_hat must be positive".into()));
        }
        if !(self.solver.tol > 0.0) {
            return Err(Error::Config("solver.tol must be positive".into()));
        }
        if self.solver.max_iter == 0 {
            return Err(Error::Config("solver.max_iter must be at least 1".into()));
        }
        if let ObstacleForm::Deterministic { coeffs } = &self.obstacle {
            if coeffs.is_empty() {
                return Err(Error::Config("obstacle.coeffs must be nonempty".into()));
            }
        }
        Ok(())
    }

    pub fn delay(&self) -> Result<DelayMeasure> {
        DelayMeasure::new(
            self.delay_measure.atoms.iter().map(|a| (a[0], a[1])).collect(),
            self.ensemble.horizon,
        )
    }

    pub fn generator_spec(&self) -> Result<GeneratorSpec> {
        GeneratorSpec::new(
            self.generator.f.clone(),
            self.generator.g.clone(),
            self.generator.lipschitz,
            self.generator.alpha,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        [ensemble]
        paths = 100
        steps = 10
        horizon = 1.0
        seed = 7

        [generator]
        lipschitz = 0.1
        alpha = 0.1
        f = { form = "zero" }
        g = { form = "zero" }

        [terminal]
        form = "w_t"
    "#;

    #[test]
    fn parses_minimal_config_with_defaults() {
        let c = Config::parse(BASE).unwrap();
        assert_eq!(c.ensemble.paths, 100);
        assert_eq!(c.delay_measure.atoms, vec![[0.0, 1.0]]);
        assert!(c.obstacle.is_none());
        assert_eq!(c.solver.basis_degree, 1);
    }

    #[test]
    fn unknown_key_is_an_error_naming_the_key() {
        let text = BASE.replace("seed = 7", "seed = 7\nworkers = 4");
        let err = Config::parse(&text).unwrap_err();
        assert!(err.to_string().contains("workers"), "{err}");
    }

    #[test]
    fn unknown_form_tag_is_an_error_naming_the_tag() {
        let text = BASE.replace("{ form = \"zero\" }\n        g", "{ form = \"quadratic\" }\n        g");
        let err = Config::parse(&text).unwrap_err();
        assert!(err.to_string().contains("quadratic"), "{err}");
    }

    #[test]
    fn alpha_outside_open_interval_is_rejected() {
        let text = BASE.replace("alpha = 0.1", "alpha = 1.5");
        let err = Config::parse(&text).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("open interval (0, 1)"), "{err}");
    }

    #[test]
    fn terminal_variants_sample_correctly() {
        let e = PathEnsemble::simulate(10, 4, 1.0, 5).unwrap();
        let n = e.step_count;
        let wt = TerminalCondition::WT.sample(&e);
        assert_eq!(wt[3], e.w[3][n]);
        let c = TerminalCondition::Constant { value: 2.5 }.sample(&e);
        assert!(c.iter().all(|&v| v == 2.5));
        let put = TerminalCondition::PutOnW { strike: 0.2 }.sample(&e);
        assert_eq!(put[3], (0.2 - e.w[3][n]).max(0.0));
    }
}
