//! Fixed-point construction: iterate Θ(U, V) = (Y, Z).
//!
//! Each iteration freezes the generator arguments at the previous iterate,
//! builds the integrand paths `F` and `G`, and solves the reflected problem
//! on the *same* noise ensemble. Re-sampling per iteration would confound
//! regression noise with the contraction, so the ensemble stays fixed.
//! The starting iterate is `(0, 0)`.

use serde::Serialize;

use crate::backward_scheme::{solve_frozen, ObstacleForm, RegressionBasis, SolutionTriple};
use crate::delay_measure::DelayMeasure;
use crate::error::{Error, Result};
use crate::generator::{GeneratorSpec, Which};
use crate::path_engine::PathEnsemble;

/// Distances below this are treated as exact zero when forming ratios.
const RATIO_FLOOR: f64 = 1e-15;

/// Iteration-by-iteration contraction record.
#[derive(Debug, Clone, Serialize)]
pub struct PicardDiagnostics {
    /// `d_k = ||x_k - x_{k-1}||_beta`, one entry per applied iteration.
    pub distances: Vec<f64>,
    /// `r_k = d_{k+1} / d_k`, only where `d_k` is meaningfully nonzero.
    pub ratios: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_distance: f64,
    pub tolerance: f64,
}

/// A full problem instance for the delayed-generator solver.
pub struct Problem<'a> {
    pub ensemble: &'a PathEnsemble,
    pub generator: &'a GeneratorSpec,
    pub measure: &'a DelayMeasure,
    pub obstacle: &'a ObstacleForm,
    pub terminal: &'a [f64],
    pub basis: RegressionBasis,
    pub beta: f64,
}

/// Empirical β-norm distance between two `(Y, Z)` pairs:
/// ensemble average of `Σ_i e^{β t_i} (|ΔY_i|² + |ΔZ_i|²) dt`, square-rooted.
pub fn beta_norm_distance(
    y1: &[Vec<f64>],
    z1: &[Vec<f64>],
    y2: &[Vec<f64>],
    z2: &[Vec<f64>],
    beta: f64,
    dt: f64,
) -> Result<f64> {
    if y1.len() != y2.len() || z1.len() != z2.len() || y1.len() != z1.len() {
        return Err(Error::ShapeMismatch(format!(
            "path counts differ: {} / {} Y, {} / {} Z",
            y1.len(),
            y2.len(),
            z1.len(),
            z2.len()
        )));
    }
    let m_count = y1.len();
    let mut total = 0.0;
    for m in 0..m_count {
        if y1[m].len() != y2[m].len() || z1[m].len() != z2[m].len() {
            return Err(Error::ShapeMismatch(format!("path {m} lengths differ")));
        }
        // left Riemann sum of the ds-integral: the terminal Y index is the
        // fixed terminal condition and carries no mass
        let mut acc = 0.0;
        let y_terms = y1[m].len().saturating_sub(1);
        for i in 0..y_terms {
            let d = y1[m][i] - y2[m][i];
            acc += (beta * i as f64 * dt).exp() * d * d * dt;
        }
        for (i, (a, b)) in z1[m].iter().zip(&z2[m]).enumerate() {
            let d = a - b;
            acc += (beta * i as f64 * dt).exp() * d * d * dt;
        }
        total += acc;
    }
    Ok((total / m_count as f64).sqrt())
}

/// Iterate Θ until the β-norm distance between successive iterates drops
/// below `tol` or `max_iter` is reached.
///
/// Divergence (distance growing by more than a factor 10) is an error: the
/// contraction guarantee only holds under smallness, and the solver must
/// fail loudly outside that regime.
pub fn solve(problem: &Problem, tol: f64, max_iter: usize) -> Result<(SolutionTriple, PicardDiagnostics)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: format!("must be positive, got {tol}"),
        });
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter {
            name: "max_iter",
            reason: "must be at least 1".into(),
        });
    }
    let ens = problem.ensemble;
    let m_count = ens.path_count;
    let n = ens.step_count;
    let dt = ens.dt;

    let mut u = vec![vec![0.0; n + 1]; m_count];
    let mut v = vec![vec![0.0; n]; m_count];
    let mut distances = Vec::new();
    let mut best: Option<SolutionTriple> = None;
    let mut converged = false;

    for iter in 0..max_iter {
        let (f_paths, g_paths) = frozen_integrands(problem, &u, &v);
        let solution = solve_frozen(
            ens,
            &f_paths,
            &g_paths,
            problem.terminal,
            problem.obstacle,
            &problem.basis,
            problem.beta,
        )?;

        let d = beta_norm_distance(&solution.y, &solution.z, &u, &v, problem.beta, dt)?;
        if let Some(&prev) = distances.last() {
            if d > 10.0 * prev && prev > RATIO_FLOOR {
                return Err(Error::Diverged {
                    iteration: iter + 1,
                    previous: prev,
                    current: d,
                });
            }
        }
        distances.push(d);
        u = solution.y.clone();
        v = solution.z.clone();
        best = Some(solution);

        if d < tol {
            converged = true;
            break;
        }
    }

    let ratios = distances
        .windows(2)
        .filter(|w| w[0] > RATIO_FLOOR)
        .map(|w| w[1] / w[0])
        .collect();
    let final_distance = *distances.last().expect("at least one iteration");
    let diagnostics = PicardDiagnostics {
        iterations: distances.len(),
        ratios,
        distances,
        converged,
        final_distance,
        tolerance: tol,
    };
    Ok((best.expect("at least one iteration"), diagnostics))
}

/// Evaluate the generators along the frozen iterate on every path.
fn frozen_integrands(
    problem: &Problem,
    u: &[Vec<f64>],
    v: &[Vec<f64>],
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let ens = problem.ensemble;
    let n = ens.step_count;
    let dt = ens.dt;
    let mut f_paths = Vec::with_capacity(u.len());
    let mut g_paths = Vec::with_capacity(u.len());
    for m in 0..u.len() {
        let mut f_m = vec![0.0; n + 1];
        let mut g_m = vec![0.0; n + 1];
        for i in 0..=n {
            let t = i as f64 * dt;
            f_m[i] = problem
                .generator
                .evaluate(Which::F, t, &u[m], &v[m], problem.measure, dt);
            g_m[i] = problem
                .generator
                .evaluate(Which::G, t, &u[m], &v[m], problem.measure, dt);
        }
        f_paths.push(f_m);
        g_paths.push(g_m);
    }
    (f_paths, g_paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::GeneratorForm;

    fn point_mass() -> DelayMeasure {
        DelayMeasure::point_mass(0.0, 1.0).unwrap()
    }

    #[test]
    fn distance_examples() {
        let y1 = vec![vec![1.0; 5]; 3];
        let z1 = vec![vec![0.0; 4]; 3];
        let y0 = vec![vec![0.0; 5]; 3];
        let z0 = vec![vec![0.0; 4]; 3];
        assert_eq!(
            beta_norm_distance(&y1, &z1, &y1, &z1, 0.7, 0.25).unwrap(),
            0.0
        );
        // ΔY ≡ 1, ΔZ ≡ 0, β = 0, T = 1: left Riemann sum Σ dt = 1
        let d = beta_norm_distance(&y1, &z1, &y0, &z0, 0.0, 0.25).unwrap();
        assert!((d - 1.0).abs() < 1e-14);

        let y3: Vec<Vec<f64>> = y1.iter().map(|p| p.iter().map(|v| 3.0 * v).collect()).collect();
        let d3 = beta_norm_distance(&y3, &z1, &y0, &z0, 0.0, 0.25).unwrap();
        assert!((d3 - 3.0 * d).abs() < 1e-12);

        assert!(beta_norm_distance(&y1, &z1, &y0[..2], &z0, 0.0, 0.25).is_err());
    }

    #[test]
    fn zero_data_gives_zero_solution_in_one_iteration() {
        let ens = PathEnsemble::simulate(100, 8, 1.0, 41).unwrap();
        let gen = GeneratorSpec::new(GeneratorForm::Zero, GeneratorForm::Zero, 0.1, 0.1).unwrap();
        let measure = point_mass();
        let xi = vec![0.0; 100];
        let problem = Problem {
            ensemble: &ens,
            generator: &gen,
            measure: &measure,
            obstacle: &ObstacleForm::Deterministic { coeffs: vec![-1.0] },
            terminal: &xi,
            basis: RegressionBasis::new(1),
            beta: 1.0,
        };
        let (sol, diag) = solve(&problem, 1e-10, 5).unwrap();
        assert!(diag.converged);
        assert_eq!(diag.iterations, 1);
        for m in 0..100 {
            assert!(sol.y[m].iter().all(|&v| v == 0.0));
            assert!(sol.z[m].iter().all(|&v| v == 0.0));
            assert!(sol.k[m].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn solution_independent_generator_converges_after_one_ratio() {
        let ens = PathEnsemble::simulate(500, 10, 1.0, 43).unwrap();
        let gen = GeneratorSpec::new(
            GeneratorForm::TimeOnly { coeffs: vec![0.5, 1.0] },
            GeneratorForm::Zero,
            0.1,
            0.1,
        )
        .unwrap();
        let measure = point_mass();
        let xi: Vec<f64> = (0..500).map(|m| ens.w[m][10]).collect();
        let problem = Problem {
            ensemble: &ens,
            generator: &gen,
            measure: &measure,
            obstacle: &ObstacleForm::None,
            terminal: &xi,
            basis: RegressionBasis::new(1),
            beta: 0.5,
        };
        let (_, diag) = solve(&problem, 1e-12, 5).unwrap();
        assert!(diag.converged);
        assert_eq!(diag.iterations, 2);
        // Θ is constant in (U, V): the second distance is exactly zero
        assert_eq!(diag.distances[1], 0.0);
    }

    #[test]
    fn reapplying_theta_moves_converged_solution_little() {
        let ens = PathEnsemble::simulate(2000, 20, 1.0, 47).unwrap();
        let gen = GeneratorSpec::new(
            GeneratorForm::PointDelay { a: 0.25, b: 0.0, c: 0.0, lag: -0.25 },
            GeneratorForm::Zero,
            0.0625,
            0.01,
        )
        .unwrap();
        let measure = DelayMeasure::point_mass(-0.25, 1.0).unwrap();
        let xi = vec![1.0; 2000];
        let tol = 1e-8;
        let problem = Problem {
            ensemble: &ens,
            generator: &gen,
            measure: &measure,
            obstacle: &ObstacleForm::None,
            terminal: &xi,
            basis: RegressionBasis::new(1),
            beta: 1.0,
        };
        let (sol, diag) = solve(&problem, tol, 30).unwrap();
        assert!(diag.converged, "distances: {:?}", diag.distances);

        // fixed-point residual: one more application stays within 2 tol
        let (f_paths, g_paths) = frozen_integrands(&problem, &sol.y, &sol.z);
        let again = solve_frozen(
            &ens,
            &f_paths,
            &g_paths,
            &xi,
            &ObstacleForm::None,
            &problem.basis,
            problem.beta,
        )
        .unwrap();
        let moved =
            beta_norm_distance(&again.y, &again.z, &sol.y, &sol.z, problem.beta, ens.dt).unwrap();
        assert!(moved < 2.0 * tol, "moved {moved}");
    }

    #[test]
    fn bitwise_reproducible_under_same_seed() {
        let run = || {
            let ens = PathEnsemble::simulate(300, 10, 1.0, 53).unwrap();
            let gen = GeneratorSpec::new(
                GeneratorForm::Affine { a: 0.2, b: 0.0, c: 0.1 },
                GeneratorForm::Zero,
                0.05,
                0.01,
            )
            .unwrap();
            let measure = DelayMeasure::point_mass(-0.2, 1.0).unwrap();
            let xi: Vec<f64> = (0..300).map(|m| ens.w[m][10]).collect();
            let problem = Problem {
                ensemble: &ens,
                generator: &gen,
                measure: &measure,
                obstacle: &ObstacleForm::None,
                terminal: &xi,
                basis: RegressionBasis::new(1),
                beta: 1.0,
            };
            solve(&problem, 1e-9, 20).map(|(s, _)| s)
        };
        let a = run().unwrap();
        let b = run().unwrap();
        assert_eq!(a, b);
    }
}
