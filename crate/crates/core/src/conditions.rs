//! Smallness/feasibility constants checked before any solve.
//!
//! `D1 = β - θ` and `D2 = 1 - 2γ̃(L/θ + α)` must both be positive for the
//! a priori estimate to hold; the contraction coefficient
//! `κ = γ̃ (L/ε + 2L + 2α) max(1, T) (2Ĉ + 3)` must stay at or below 1/2
//! (with `β - ε > 0`) for the fixed-point construction. `Ĉ` is a
//! configuration input with default 1: the underlying
//! Burkholder-Davis-Gundy constant is existential, so every verdict is
//! relative to the configured value.

use serde::Serialize;

use crate::delay_measure::DelayMeasure;
use crate::error::{Error, Result};

pub const DEFAULT_C_HAT: f64 = 1.0;

/// Feasibility constants and verdicts for a given parameter point.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub beta: f64,
    pub theta: Option<f64>,
    pub epsilon: Option<f64>,
    pub lipschitz: f64,
    pub alpha: f64,
    pub gamma_tilde: f64,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub kappa: Option<f64>,
    pub c_hat: Option<f64>,
    pub feasible_prop2: bool,
    pub feasible_thm6: bool,
}

impl ConditionReport {
    /// Worst margin across all checked conditions; positive iff feasible.
    pub fn slack(&self) -> f64 {
        let mut slack = f64::INFINITY;
        if let Some(d1) = self.d1 {
            slack = slack.min(d1);
        }
        if let Some(d2) = self.d2 {
            slack = slack.min(d2);
        }
        if let Some(kappa) = self.kappa {
            slack = slack.min(0.5 - kappa);
        }
        if let Some(eps) = self.epsilon {
            slack = slack.min(self.beta - eps);
        }
        slack
    }

    /// Aligned-text rendering for the CLI.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| out.push_str(&format!("{k:<16} {v}\n"));
        line("beta", format!("{}", self.beta));
        if let Some(theta) = self.theta {
            line("theta", format!("{theta}"));
        }
        if let Some(eps) = self.epsilon {
            line("epsilon", format!("{eps}"));
        }
        line("L", format!("{}", self.lipschitz));
        line("alpha", format!("{}", self.alpha));
        line("gamma_tilde", format!("{:.12}", self.gamma_tilde));
        if let Some(d1) = self.d1 {
            line("D1", format!("{d1:.12}"));
        }
        if let Some(d2) = self.d2 {
            line("D2", format!("{d2:.12}"));
        }
        if let Some(kappa) = self.kappa {
            line("kappa", format!("{kappa:.12}"));
        }
        if let Some(c_hat) = self.c_hat {
            line("C_hat", format!("{c_hat}"));
        }
        line("feasible_prop2", format!("{}", self.feasible_prop2));
        line("feasible_thm6", format!("{}", self.feasible_thm6));
        out
    }
}

fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("must be positive, got {value}"),
        });
    }
    Ok(())
}

/// Check `D1 = β - θ > 0` and `D2 = 1 - 2γ̃(L/θ + α) > 0`.
pub fn check_prop2(
    beta: f64,
    theta: f64,
    lipschitz: f64,
    alpha: f64,
    measure: &DelayMeasure,
) -> Result<ConditionReport> {
    require_positive("beta", beta)?;
    require_positive("theta", theta)?;
    let gamma_tilde = measure.gamma_tilde(beta);
    let d1 = beta - theta;
    let d2 = 1.0 - 2.0 * gamma_tilde * (lipschitz / theta + alpha);
    Ok(ConditionReport {
        beta,
        theta: Some(theta),
        epsilon: None,
        lipschitz,
        alpha,
        gamma_tilde,
        d1: Some(d1),
        d2: Some(d2),
        kappa: None,
        c_hat: None,
        feasible_prop2: d1 > 0.0 && d2 > 0.0,
        feasible_thm6: false,
    })
}

/// Check `κ = γ̃ (L/ε + 2L + 2α) max(1, T) (2Ĉ + 3) ≤ 1/2` with `β - ε > 0`.
pub fn check_thm6(
    beta: f64,
    epsilon: f64,
    lipschitz: f64,
    alpha: f64,
    horizon: f64,
    measure: &DelayMeasure,
    c_hat: f64,
) -> Result<ConditionReport> {
    require_positive("beta", beta)?;
    require_positive("epsilon", epsilon)?;
    require_positive("c_hat", c_hat)?;
    require_positive("horizon", horizon)?;
    let gamma_tilde = measure.gamma_tilde(beta);
    let kappa = gamma_tilde
        * (lipschitz / epsilon + 2.0 * lipschitz + 2.0 * alpha)
        * horizon.max(1.0)
        * (2.0 * c_hat + 3.0);
    Ok(ConditionReport {
        beta,
        theta: None,
        epsilon: Some(epsilon),
        lipschitz,
        alpha,
        gamma_tilde,
        d1: None,
        d2: None,
        kappa: Some(kappa),
        c_hat: Some(c_hat),
        feasible_prop2: false,
        feasible_thm6: kappa <= 0.5 && beta - epsilon > 0.0,
    })
}

/// Grid over `(β, θ, ε)` to search for a jointly feasible point.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub betas: Vec<f64>,
    pub thetas: Vec<f64>,
    pub epsilons: Vec<f64>,
}

/// Outcome of `search_feasible`.
#[derive(Debug, Clone, Serialize)]
pub enum SearchOutcome {
    /// Best point with positive slack.
    Feasible(ConditionReport),
    /// No grid point satisfied all conditions; the best (still infeasible)
    /// report is attached for diagnosis.
    Infeasible(ConditionReport),
}

/// Scan the grid maximizing `min(D1, D2, 1/2 - κ, β - ε)`.
pub fn search_feasible(
    lipschitz: f64,
    alpha: f64,
    horizon: f64,
    measure: &DelayMeasure,
    c_hat: f64,
    grid: &GridSpec,
) -> Result<SearchOutcome> {
    if grid.betas.is_empty() || grid.thetas.is_empty() || grid.epsilons.is_empty() {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: "grid spec must be nonempty in every dimension".into(),
        });
    }
    let mut best: Option<ConditionReport> = None;
    for &beta in &grid.betas {
        for &theta in &grid.thetas {
            for &epsilon in &grid.epsilons {
                let p2 = check_prop2(beta, theta, lipschitz, alpha, measure)?;
                let t6 = check_thm6(beta, epsilon, lipschitz, alpha, horizon, measure, c_hat)?;
                let combined = ConditionReport {
                    beta,
                    theta: Some(theta),
                    epsilon: Some(epsilon),
                    lipschitz,
                    alpha,
                    gamma_tilde: p2.gamma_tilde,
                    d1: p2.d1,
                    d2: p2.d2,
                    kappa: t6.kappa,
                    c_hat: Some(c_hat),
                    feasible_prop2: p2.feasible_prop2,
                    feasible_thm6: t6.feasible_thm6,
                };
                if best.as_ref().is_none_or(|b| combined.slack() > b.slack()) {
                    best = Some(combined);
                }
            }
        }
    }
    let best = best.expect("nonempty grid");
    if best.slack() > 0.0 {
        Ok(SearchOutcome::Feasible(best))
    } else {
        Ok(SearchOutcome::Infeasible(best))
    }
}

/// Default search grid: geometric sweeps around unit scale.
pub fn default_grid() -> GridSpec {
    let sweep: Vec<f64> = (-6..=4).map(|k| 2f64.powi(k)).collect();
    GridSpec {
        betas: sweep.iter().map(|v| v * 2.0).collect(),
        thetas: sweep.clone(),
        epsilons: sweep,
    }
}
