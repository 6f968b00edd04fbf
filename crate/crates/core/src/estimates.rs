//! Both sides of the a priori and stability estimates on computed solutions.
//!
//! The constants in front of the estimates are existential, so nothing here
//! asserts a numeric constant: callers test homogeneity, finiteness, and
//! cross-seed stability of the lhs/rhs ratios instead. Grid sups replace
//! continuous sups and dt-Riemann sums replace ds-integrals.

use serde::Serialize;
use std::collections::BTreeMap;

use crate::backward_scheme::{ObstacleForm, SolutionTriple};
use crate::delay_measure::DelayMeasure;
use crate::error::{Error, Result};
use crate::generator::{GeneratorSpec, Which};
use crate::path_engine::PathEnsemble;

/// Two-sided estimate evaluation with a labeled breakdown.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs` when `rhs > 0`, else 0.
    pub ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi: Option<f64>,
    pub components: BTreeMap<String, f64>,
}

impl EstimateReport {
    fn finish(lhs: f64, rhs: f64, psi: Option<f64>, components: BTreeMap<String, f64>) -> Self {
        let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
        Self {
            lhs,
            rhs,
            ratio,
            psi,
            components,
        }
    }

    /// CSV row `lhs,rhs,ratio,psi`.
    pub fn csv_row(&self) -> String {
        format!(
            "{:.17e},{:.17e},{:.17e},{}",
            self.lhs,
            self.rhs,
            self.ratio,
            self.psi.map_or(String::new(), |p| format!("{p:.17e}"))
        )
    }
}

/// Evaluate both sides of the a priori estimate:
/// lhs = `Ê[sup e^{βt}Y² + Σ e^{βt}Z² dt + e^{βT}K_T²]`,
/// rhs = `Ê[e^{βT}ξ² + Σ e^{βt}(f0² + g0²) dt + sup e^{βt}(S⁺)²]`.
pub fn apriori_sides(
    solution: &SolutionTriple,
    ensemble: &PathEnsemble,
    xi: &[f64],
    generator: &GeneratorSpec,
    obstacle: &ObstacleForm,
    beta: f64,
) -> Result<EstimateReport> {
    let m_count = ensemble.path_count;
    let n = ensemble.step_count;
    if solution.path_count() != m_count || xi.len() != m_count {
        return Err(Error::ShapeMismatch(format!(
            "solution/terminal paths vs ensemble: {} / {} vs {m_count}",
            solution.path_count(),
            xi.len()
        )));
    }
    let dt = ensemble.dt;
    let weight = |i: usize| (beta * i as f64 * dt).exp();
    let e_beta_t = (beta * ensemble.horizon).exp();

    let mut sup_y = 0.0;
    let mut z_energy = 0.0;
    let mut k_terminal = 0.0;
    let mut xi_term = 0.0;
    let mut obstacle_term = 0.0;
    for m in 0..m_count {
        let y_sup = (0..=n)
            .map(|i| weight(i) * solution.y[m][i] * solution.y[m][i])
            .fold(0.0f64, f64::max);
        sup_y += y_sup;
        z_energy += (0..n)
            .map(|i| weight(i) * solution.z[m][i] * solution.z[m][i] * dt)
            .sum::<f64>();
        k_terminal += e_beta_t * solution.k[m][n] * solution.k[m][n];
        xi_term += e_beta_t * xi[m] * xi[m];
        if !obstacle.is_none() {
            let s_sup = (0..=n)
                .map(|i| {
                    let s_plus = obstacle.value(ensemble.time(i), ensemble.w[m][i]).max(0.0);
                    weight(i) * s_plus * s_plus
                })
                .fold(0.0f64, f64::max);
            obstacle_term += s_sup;
        }
    }
    let scale = 1.0 / m_count as f64;
    sup_y *= scale;
    z_energy *= scale;
    k_terminal *= scale;
    xi_term *= scale;
    obstacle_term *= scale;

    let f0_term: f64 = (0..n)
        .map(|i| {
            let v = generator.at_zero(Which::F, ensemble.time(i));
            weight(i) * v * v * dt
        })
        .sum();
    let g0_term: f64 = (0..n)
        .map(|i| {
            let v = generator.at_zero(Which::G, ensemble.time(i));
            weight(i) * v * v * dt
        })
        .sum();

    let lhs = sup_y + z_energy + k_terminal;
    let rhs = xi_term + f0_term + g0_term + obstacle_term;
    let mut components = BTreeMap::new();
    components.insert("sup_y".into(), sup_y);
    components.insert("z_energy".into(), z_energy);
    components.insert("k_terminal".into(), k_terminal);
    components.insert("xi".into(), xi_term);
    components.insert("f0".into(), f0_term);
    components.insert("g0".into(), g0_term);
    components.insert("obstacle".into(), obstacle_term);
    Ok(EstimateReport::finish(lhs, rhs, None, components))
}

/// Per-problem data feeding the stability estimate.
#[derive(Debug, Clone)]
pub struct ProblemData {
    pub xi: Vec<f64>,
    /// `f(t_i, Y, Z)` along the base solution's paths, M x N.
    pub f_on_base: Vec<Vec<f64>>,
    /// Deterministic `f(t_i, 0, 0)`, length N.
    pub f0: Vec<f64>,
    /// Deterministic `g(t_i, 0, 0)`, length N.
    pub g0: Vec<f64>,
    /// Obstacle values on the ensemble, M x (N+1); `None` when absent.
    pub s: Option<Vec<Vec<f64>>>,
}

impl ProblemData {
    /// Assemble the data from a problem description and the base solution
    /// along which `Δf` is evaluated (the first problem's solution).
    pub fn assemble(
        ensemble: &PathEnsemble,
        generator: &GeneratorSpec,
        measure: &DelayMeasure,
        obstacle: &ObstacleForm,
        xi: &[f64],
        base: &SolutionTriple,
    ) -> Self {
        let n = ensemble.step_count;
        let dt = ensemble.dt;
        let f_on_base = (0..ensemble.path_count)
            .map(|m| {
                (0..n)
                    .map(|i| {
                        generator.evaluate(
                            Which::F,
                            ensemble.time(i),
                            &base.y[m],
                            &base.z[m],
                            measure,
                            dt,
                        )
                    })
                    .collect()
            })
            .collect();
        let f0 = (0..n).map(|i| generator.at_zero(Which::F, ensemble.time(i))).collect();
        let g0 = (0..n).map(|i| generator.at_zero(Which::G, ensemble.time(i))).collect();
        let s = if obstacle.is_none() {
            None
        } else {
            Some(
                (0..ensemble.path_count)
                    .map(|m| {
                        (0..=n)
                            .map(|i| obstacle.value(ensemble.time(i), ensemble.w[m][i]))
                            .collect()
                    })
                    .collect(),
            )
        };
        Self {
            xi: xi.to_vec(),
            f_on_base,
            f0,
            g0,
            s,
        }
    }
}

/// Evaluate the stability estimate between two problems solved on the same
/// ensemble (and sharing `g`):
/// lhs = `Ê[sup e^{βt}ΔY² + Σ e^{βt}ΔZ² dt]`,
/// rhs = `Ê e^{βT}Δξ² + Ê Σ e^{βt}Δf² dt + [Ê sup e^{βt}ΔS²]^{1/2} ψ^{1/2}`.
pub fn stability_gap(
    solution_a: &SolutionTriple,
    solution_b: &SolutionTriple,
    data_a: &ProblemData,
    data_b: &ProblemData,
    beta: f64,
    dt: f64,
) -> Result<EstimateReport> {
    let m_count = solution_a.path_count();
    let n = solution_a.step_count();
    if solution_b.path_count() != m_count || solution_b.step_count() != n {
        return Err(Error::ShapeMismatch(
            "solutions come from different ensembles".into(),
        ));
    }
    if data_a.xi.len() != m_count || data_b.xi.len() != m_count {
        return Err(Error::ShapeMismatch("terminal data vs solution paths".into()));
    }
    if data_a.s.is_some() != data_b.s.is_some() {
        return Err(Error::ShapeMismatch(
            "one problem has an obstacle and the other does not".into(),
        ));
    }
    let weight = |i: usize| (beta * i as f64 * dt).exp();
    let e_beta_t = (beta * n as f64 * dt).exp();
    let scale = 1.0 / m_count as f64;

    let mut lhs = 0.0;
    let mut dxi_term = 0.0;
    let mut df_term = 0.0;
    let mut ds_term = 0.0;
    for m in 0..m_count {
        let sup_dy = (0..=n)
            .map(|i| {
                let d = solution_a.y[m][i] - solution_b.y[m][i];
                weight(i) * d * d
            })
            .fold(0.0f64, f64::max);
        let dz: f64 = (0..n)
            .map(|i| {
                let d = solution_a.z[m][i] - solution_b.z[m][i];
                weight(i) * d * d * dt
            })
            .sum();
        lhs += sup_dy + dz;

        let dxi = data_a.xi[m] - data_b.xi[m];
        dxi_term += e_beta_t * dxi * dxi;
        df_term += (0..n)
            .map(|i| {
                let d = data_a.f_on_base[m][i] - data_b.f_on_base[m][i];
                weight(i) * d * d * dt
            })
            .sum::<f64>();
        if let (Some(sa), Some(sb)) = (&data_a.s, &data_b.s) {
            ds_term += (0..=n)
                .map(|i| {
                    let d = sa[m][i] - sb[m][i];
                    weight(i) * d * d
                })
                .fold(0.0f64, f64::max);
        }
    }
    lhs *= scale;
    dxi_term *= scale;
    df_term *= scale;
    ds_term *= scale;

    let psi = psi_functional(data_a, data_b, beta, dt);
    let rhs = dxi_term + df_term + ds_term.sqrt() * psi.sqrt();

    let mut components = BTreeMap::new();
    components.insert("delta_xi".into(), dxi_term);
    components.insert("delta_f".into(), df_term);
    components.insert("delta_s_sup".into(), ds_term);
    components.insert("psi".into(), psi);
    Ok(EstimateReport::finish(lhs, rhs, Some(psi), components))
}

/// The ψ functional: zero-data energies of both problems. The second
/// problem contributes no `g` term since `g` is shared.
fn psi_functional(data_a: &ProblemData, data_b: &ProblemData, beta: f64, dt: f64) -> f64 {
    let m_count = data_a.xi.len();
    let n = data_a.f0.len();
    let weight = |i: usize| (beta * i as f64 * dt).exp();
    let e_beta_t = (beta * n as f64 * dt).exp();

    let f0_a: f64 = data_a.f0.iter().enumerate().map(|(i, v)| weight(i) * v * v * dt).sum();
    let f0_b: f64 = data_b.f0.iter().enumerate().map(|(i, v)| weight(i) * v * v * dt).sum();
    let g0: f64 = data_a.g0.iter().enumerate().map(|(i, v)| weight(i) * v * v * dt).sum();

    let mut acc = 0.0;
    for m in 0..m_count {
        acc += e_beta_t * (data_a.xi[m] * data_a.xi[m] + data_b.xi[m] * data_b.xi[m]);
        for data in [data_a, data_b] {
            if let Some(s) = &data.s {
                acc += s[m]
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        let sp = v.max(0.0);
                        weight(i) * sp * sp
                    })
                    .fold(0.0f64, f64::max);
            }
        }
    }
    acc / m_count as f64 + f0_a + f0_b + g0
}

/// Per-path weighted Skorokhod residuals `Σ_i e^{βt_i}(Y_i - S_i)ΔK_i`.
pub fn skorokhod_residuals(
    solution: &SolutionTriple,
    obstacle: &ObstacleForm,
    ensemble: &PathEnsemble,
    beta: f64,
) -> Vec<f64> {
    let n = ensemble.step_count;
    (0..solution.path_count())
        .map(|m| {
            if obstacle.is_none() {
                return 0.0;
            }
            (0..n)
                .map(|i| {
                    let dk = solution.k[m][i + 1] - solution.k[m][i];
                    let s = obstacle.value(ensemble.time(i), ensemble.w[m][i]);
                    (beta * ensemble.time(i)).exp() * (solution.y[m][i] - s) * dk
                })
                .sum::<f64>()
        })
        .collect()
}
