//! Frozen-generator reflected backward recursion.
//!
//! Given a terminal condition ξ, exogenous integrand paths `F` and `G`, and
//! an obstacle `S`, the scheme runs `i = N-1 .. 0`:
//!
//! ```text
//! target_m = Y[m][i+1] + F[m][i] dt + G[m][i+1] dB[m][i]
//! Ytil     = fitted( target_m )
//! Z[m][i]  = fitted( (target_m - Ytil_m) dW[m][i] / dt )
//! Y[m][i]  = max(Ytil, S[m][i]),   dK[m][i] = Y[m][i] - Ytil
//! ```
//!
//! Conditional expectations are least-squares projections onto monomials in
//! the state `(W_{t_i}, B_T - B_{t_i})`. `Z` is read off the unreflected
//! target (the compensator carries no `dW` component), centered by the
//! fitted continuation so constant shifts of the data leave `Z` untouched.
//! `G` is taken at the right endpoint against `dB` since the `dB` integral
//! runs backward.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path_engine::PathEnsemble;

/// Columns below this relative size after orthogonalization are dropped.
const RANK_TOL: f64 = 1e-10;

/// Monomial basis in `(W_{t_i}, B_T - B_{t_i})` up to a total degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegressionBasis {
    pub degree: usize,
}

impl RegressionBasis {
    pub fn new(degree: usize) -> Self {
        Self { degree }
    }

    pub fn feature_count(&self) -> usize {
        (self.degree + 1) * (self.degree + 2) / 2
    }

    /// Fill `out` with monomials `w^p b^q`, `p + q <= degree`, ordered by
    /// total degree then by power of `w`. `out[0]` is the constant.
    pub fn fill_features(&self, w: f64, b_tail: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.feature_count());
        let mut k = 0;
        for total in 0..=self.degree {
            for p in 0..=total {
                let q = total - p;
                out[k] = w.powi(p as i32) * b_tail.powi(q as i32);
                k += 1;
            }
        }
    }
}

/// Least-squares fit result.
#[derive(Debug, Clone)]
pub struct Regression {
    /// One coefficient per feature column; dropped columns get 0.
    pub coefficients: Vec<f64>,
    pub fitted: Vec<f64>,
    /// Indices of columns dropped as linearly dependent.
    pub dropped: Vec<usize>,
}

/// Project `targets` onto the span of the feature columns.
///
/// Modified Gram-Schmidt in column order: a column whose residual after
/// orthogonalization falls below `RANK_TOL` times its original norm is
/// dropped, so ties resolve deterministically toward the lowest index.
pub fn condexp_project(targets: &[f64], features: &[f64], p: usize) -> Result<Regression> {
    let m = targets.len();
    if p == 0 || features.len() != m * p {
        return Err(Error::ShapeMismatch(format!(
            "features len {} vs {} samples x {} columns",
            features.len(),
            m,
            p
        )));
    }
    if m < p {
        return Err(Error::TooFewSamples { needed: p, got: m });
    }

    // q: kept orthonormal columns; r[k] holds the expansion of original
    // column kept[k] in terms of q[0..k]
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut r: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut kept: Vec<usize> = Vec::with_capacity(p);
    let mut dropped: Vec<usize> = Vec::new();

    for j in 0..p {
        let mut col: Vec<f64> = (0..m).map(|i| features[i * p + j]).collect();
        let orig_norm = norm(&col);
        let mut coeffs = Vec::with_capacity(q.len());
        for qk in &q {
            let d = dot(qk, &col);
            for (c, qv) in col.iter_mut().zip(qk) {
                *c -= d * qv;
            }
            coeffs.push(d);
        }
        // second orthogonalization pass for stability
        for (k, qk) in q.iter().enumerate() {
            let d = dot(qk, &col);
            for (c, qv) in col.iter_mut().zip(qk) {
                *c -= d * qv;
            }
            coeffs[k] += d;
        }
        let res_norm = norm(&col);
        if res_norm <= RANK_TOL * orig_norm.max(f64::MIN_POSITIVE) {
            dropped.push(j);
            continue;
        }
        for c in col.iter_mut() {
            *c /= res_norm;
        }
        coeffs.push(res_norm);
        q.push(col);
        r.push(coeffs);
        kept.push(j);
    }

    // fitted = Q Q^T y
    let qty: Vec<f64> = q.iter().map(|qk| dot(qk, targets)).collect();
    let mut fitted = vec![0.0; m];
    for (qk, &c) in q.iter().zip(&qty) {
        for (f, qv) in fitted.iter_mut().zip(qk) {
            *f += c * qv;
        }
    }

    // back-substitute R beta = Q^T y (r is lower-triangular by column)
    let rank = kept.len();
    let mut beta_kept = vec![0.0; rank];
    for k in (0..rank).rev() {
        let mut v = qty[k];
        for j in (k + 1)..rank {
            v -= r[j][k] * beta_kept[j];
        }
        beta_kept[k] = v / r[k][k];
    }
    let mut coefficients = vec![0.0; p];
    for (k, &j) in kept.iter().enumerate() {
        coefficients[j] = beta_kept[k];
    }

    Ok(Regression {
        coefficients,
        fitted,
        dropped,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Obstacle registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObstacleForm {
    None,
    /// `S(t) = Σ_k coeffs[k] t^k`, deterministic.
    Deterministic { coeffs: Vec<f64> },
    /// `S(t, W_t) = (strike - W_t)^+`.
    PutOnW { strike: f64 },
}

impl ObstacleForm {
    pub fn is_none(&self) -> bool {
        matches!(self, ObstacleForm::None)
    }

    /// Obstacle value; `-inf` when absent so `max` with it is a no-op.
    pub fn value(&self, t: f64, w: f64) -> f64 {
        match self {
            ObstacleForm::None => f64::NEG_INFINITY,
            ObstacleForm::Deterministic { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
            }
            ObstacleForm::PutOnW { strike } => (strike - w).max(0.0),
        }
    }

    /// Check `S_T <= xi` path by path on the ensemble.
    pub fn check_terminal(&self, ensemble: &PathEnsemble, xi: &[f64]) -> Result<()> {
        if self.is_none() {
            return Ok(());
        }
        let n = ensemble.step_count;
        let t = ensemble.horizon;
        for (m, &xi_m) in xi.iter().enumerate() {
            let s_t = self.value(t, ensemble.w[m][n]);
            if s_t > xi_m + 1e-12 {
                return Err(Error::InvalidObstacle(format!(
                    "terminal obstacle exceeds xi on path {m}: S_T = {s_t} > xi = {xi_m} \
                     (assumption H6 requires S_T <= xi)"
                )));
            }
        }
        Ok(())
    }
}

/// Discretized `(Y, Z, K)` paths.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionTriple {
    /// M x (N+1)
    pub y: Vec<Vec<f64>>,
    /// M x N
    pub z: Vec<Vec<f64>>,
    /// M x (N+1), nondecreasing with `k[m][0] = 0`.
    pub k: Vec<Vec<f64>>,
}

impl SolutionTriple {
    pub fn path_count(&self) -> usize {
        self.y.len()
    }

    pub fn step_count(&self) -> usize {
        self.z.first().map_or(0, |z| z.len())
    }

    /// `Y_0` averaged over paths.
    pub fn y0_mean(&self) -> f64 {
        self.y.iter().map(|p| p[0]).sum::<f64>() / self.y.len() as f64
    }

    /// `K_T` averaged over paths.
    pub fn k_terminal_mean(&self) -> f64 {
        let n = self.y[0].len() - 1;
        self.k.iter().map(|p| p[n]).sum::<f64>() / self.k.len() as f64
    }
}

/// Solve the frozen-generator reflected problem.
///
/// `f_paths` and `g_paths` are M x (N+1); `f_paths[m][i]` multiplies `dt` at
/// the left endpoint, `g_paths[m][i+1]` multiplies `dB[m][i]` at the right.
/// `beta` only enters the construction-time Skorokhod residual check.
pub fn solve_frozen(
    ensemble: &PathEnsemble,
    f_paths: &[Vec<f64>],
    g_paths: &[Vec<f64>],
    xi: &[f64],
    obstacle: &ObstacleForm,
    basis: &RegressionBasis,
    beta: f64,
) -> Result<SolutionTriple> {
    let m_count = ensemble.path_count;
    let n = ensemble.step_count;
    if f_paths.len() != m_count || g_paths.len() != m_count || xi.len() != m_count {
        return Err(Error::ShapeMismatch(format!(
            "ensemble has {m_count} paths, got {} F, {} G, {} xi",
            f_paths.len(),
            g_paths.len(),
            xi.len()
        )));
    }
    for (m, (f, g)) in f_paths.iter().zip(g_paths).enumerate() {
        if f.len() != n + 1 || g.len() != n + 1 {
            return Err(Error::ShapeMismatch(format!(
                "path {m}: F and G must have {} entries",
                n + 1
            )));
        }
        if f.iter().chain(g.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: n, what: "frozen integrand" });
        }
    }
    obstacle.check_terminal(ensemble, xi)?;

    let p = basis.feature_count();
    let dt = ensemble.dt;

    let mut y = vec![vec![0.0; n + 1]; m_count];
    let mut z = vec![vec![0.0; n]; m_count];
    let mut dk = vec![vec![0.0; n]; m_count];
    for (m, &xi_m) in xi.iter().enumerate() {
        if !xi_m.is_finite() {
            return Err(Error::NonFinite { step: n, what: "terminal condition" });
        }
        y[m][n] = xi_m;
    }

    let mut targets = vec![0.0; m_count];
    let mut z_targets = vec![0.0; m_count];
    let mut features = vec![0.0; m_count * p];

    for i in (0..n).rev() {
        let t_i = ensemble.time(i);
        // assemble targets and the design matrix for this step
        targets
            .par_iter_mut()
            .zip(features.par_chunks_mut(p))
            .enumerate()
            .for_each(|(m, (tgt, row))| {
                *tgt = y[m][i + 1] + f_paths[m][i] * dt + g_paths[m][i + 1] * ensemble.db[m][i];
                let w = ensemble.w[m][i];
                let b_tail = ensemble.b[m][n] - ensemble.b[m][i];
                basis.fill_features(w, b_tail, row);
            });

        let y_fit = condexp_project(&targets, &features, p)?;
        z_targets
            .par_iter_mut()
            .enumerate()
            .for_each(|(m, ztgt)| {
                *ztgt = (targets[m] - y_fit.fitted[m]) * ensemble.dw[m][i] / dt;
            });
        let z_fit = condexp_project(&z_targets, &features, p)?;

        for m in 0..m_count {
            let ytil = y_fit.fitted[m];
            let zval = z_fit.fitted[m];
            if !ytil.is_finite() || !zval.is_finite() {
                return Err(Error::NonFinite { step: i, what: "regression output" });
            }
            let s = obstacle.value(t_i, ensemble.w[m][i]);
            let y_i = ytil.max(s);
            y[m][i] = y_i;
            z[m][i] = zval;
            dk[m][i] = y_i - ytil;
        }
    }

    let mut k = vec![vec![0.0; n + 1]; m_count];
    for m in 0..m_count {
        for i in 0..n {
            k[m][i + 1] = k[m][i] + dk[m][i];
        }
    }

    let solution = SolutionTriple { y, z, k };

    // the reflection construction makes the residual vanish; keep the check
    // as a guard against regressions in the scheme itself
    debug_assert!(max_skorokhod_residual(&solution, obstacle, ensemble, beta) <= 1e-12);

    Ok(solution)
}

/// Low-bias readout of `Y_0` for zero-generator reflected problems.
///
/// The pathwise `Y` carries an upward bias: every regression error that dips
/// the continuation below the obstacle adds a spurious compensator push, and
/// those pushes accumulate over the steps. Evaluating the *policy* instead —
/// stop at the first time the obstacle binds, collect the obstacle value
/// there, otherwise collect the terminal value — replays only one decision
/// per path, so regression noise enters through the stopping rule alone and
/// the estimate is accurate to the policy's quality.
///
/// Only meaningful when both generators vanish, since stopped cash flows
/// carry no `f dt` or `g dB` contributions.
pub fn policy_value_estimate(
    solution: &SolutionTriple,
    obstacle: &ObstacleForm,
    ensemble: &PathEnsemble,
    xi: &[f64],
) -> f64 {
    let n = ensemble.step_count;
    let mut total = 0.0;
    for m in 0..solution.path_count() {
        let mut value = xi[m];
        for i in 0..n {
            if solution.k[m][i + 1] - solution.k[m][i] > 0.0 {
                value = obstacle.value(ensemble.time(i), ensemble.w[m][i]);
                break;
            }
        }
        total += value;
    }
    total / solution.path_count() as f64
}

/// `max_m | Σ_i e^{β t_i} (Y_i - S_i) ΔK_i |`.
pub fn max_skorokhod_residual(
    solution: &SolutionTriple,
    obstacle: &ObstacleForm,
    ensemble: &PathEnsemble,
    beta: f64,
) -> f64 {
    if obstacle.is_none() {
        return 0.0;
    }
    let n = ensemble.step_count;
    let mut worst: f64 = 0.0;
    for m in 0..solution.path_count() {
        let mut acc = 0.0;
        for i in 0..n {
            let dk = solution.k[m][i + 1] - solution.k[m][i];
            let s = obstacle.value(ensemble.time(i), ensemble.w[m][i]);
            acc += (beta * ensemble.time(i)).exp() * (solution.y[m][i] - s) * dk;
        }
        worst = worst.max(acc.abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_feature_count_and_order() {
        let basis = RegressionBasis::new(2);
        assert_eq!(basis.feature_count(), 6);
        let mut out = vec![0.0; 6];
        basis.fill_features(2.0, 3.0, &mut out);
        // constant, b, w, b^2, w b, w^2
        assert_eq!(out, vec![1.0, 3.0, 2.0, 9.0, 6.0, 4.0]);
    }

    #[test]
    fn project_exact_linear_model() {
        let m = 50;
        let p = 3;
        let mut features = vec![0.0; m * p];
        let mut targets = vec![0.0; m];
        for i in 0..m {
            let x = i as f64 * 0.1;
            let y = (i as f64).sin();
            features[i * p] = 1.0;
            features[i * p + 1] = x;
            features[i * p + 2] = y;
            targets[i] = 2.0 - 3.0 * x + 0.5 * y;
        }
        let fit = condexp_project(&targets, &features, p).unwrap();
        for (f, t) in fit.fitted.iter().zip(&targets) {
            assert!((f - t).abs() <= 1e-10 * t.abs().max(1.0));
        }
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-9);
        assert!((fit.coefficients[1] + 3.0).abs() < 1e-9);
        assert!((fit.coefficients[2] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn project_matches_normal_equations_hand_instance() {
        // 5 samples, features (1, x); targets unrelated to x
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let ys = [2.0, 2.0, 5.0, 4.0, 2.0];
        let mut features = vec![0.0; 10];
        for (i, &x) in xs.iter().enumerate() {
            features[i * 2] = 1.0;
            features[i * 2 + 1] = x;
        }
        let fit = condexp_project(&ys, &features, 2).unwrap();
        // closed-form OLS: slope = Sxy/Sxx, intercept = ybar - slope xbar
        let xbar = 3.0;
        let ybar = 3.0;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
        let slope = sxy / sxx;
        assert!((fit.coefficients[1] - slope).abs() < 1e-12);
        assert!((fit.coefficients[0] - (ybar - slope * xbar)).abs() < 1e-12);
    }

    #[test]
    fn project_drops_duplicate_column() {
        let m = 10;
        let p = 3;
        let mut features = vec![0.0; m * p];
        let mut targets = vec![0.0; m];
        for i in 0..m {
            features[i * p] = 1.0;
            features[i * p + 1] = i as f64;
            features[i * p + 2] = i as f64; // duplicate
            targets[i] = 1.0 + 2.0 * i as f64;
        }
        let fit = condexp_project(&targets, &features, p).unwrap();
        assert_eq!(fit.dropped, vec![2]);
        assert_eq!(fit.coefficients[2], 0.0);
        for (f, t) in fit.fitted.iter().zip(&targets) {
            assert!((f - t).abs() < 1e-9);
        }
    }

    #[test]
    fn project_rejects_underdetermined() {
        let targets = vec![1.0, 2.0];
        let features = vec![1.0; 2 * 3];
        assert!(matches!(
            condexp_project(&targets, &features, 3),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn obstacle_values() {
        assert_eq!(ObstacleForm::None.value(0.3, 1.0), f64::NEG_INFINITY);
        let det = ObstacleForm::Deterministic { coeffs: vec![1.0, -1.0] };
        assert_eq!(det.value(0.25, 123.0), 0.75);
        let put = ObstacleForm::PutOnW { strike: 0.2 };
        assert_eq!(put.value(0.0, -0.3), 0.5);
        assert_eq!(put.value(0.0, 0.3), 0.0);
    }

    #[test]
    fn terminal_compatibility_enforced() {
        let e = PathEnsemble::simulate(10, 4, 1.0, 3).unwrap();
        let xi = vec![0.0; 10];
        let det = ObstacleForm::Deterministic { coeffs: vec![2.0] };
        assert!(det.check_terminal(&e, &xi).is_err());
        let ok = ObstacleForm::Deterministic { coeffs: vec![-1.0] };
        assert!(ok.check_terminal(&e, &xi).is_ok());
    }

    fn zero_driver_paths(m: usize, n: usize) -> Vec<Vec<f64>> {
        vec![vec![0.0; n + 1]; m]
    }

    #[test]
    fn no_obstacle_means_zero_compensator() {
        let e = PathEnsemble::simulate(200, 10, 1.0, 17).unwrap();
        let f = zero_driver_paths(200, 10);
        let g = zero_driver_paths(200, 10);
        let xi: Vec<f64> = (0..200).map(|m| e.w[m][10]).collect();
        let sol = solve_frozen(&e, &f, &g, &xi, &ObstacleForm::None, &RegressionBasis::new(1), 0.0)
            .unwrap();
        for k in &sol.k {
            assert!(k.iter().all(|&v| v == 0.0));
        }
        for (m, y) in sol.y.iter().enumerate() {
            assert_eq!(y[10], xi[m]);
        }
    }

    #[test]
    fn deterministic_decreasing_obstacle_is_exact() {
        let n = 20;
        let e = PathEnsemble::simulate(500, n, 1.0, 23).unwrap();
        let f = zero_driver_paths(500, n);
        let g = zero_driver_paths(500, n);
        let xi = vec![0.0; 500];
        let obstacle = ObstacleForm::Deterministic { coeffs: vec![1.0, -1.0] };
        let sol =
            solve_frozen(&e, &f, &g, &xi, &obstacle, &RegressionBasis::new(1), 1.0).unwrap();
        for m in 0..500 {
            for i in 0..n {
                let s = 1.0 - e.time(i);
                assert!((sol.y[m][i] - s).abs() < 1e-10);
            }
            assert!((sol.k[m][n] - 1.0).abs() < 1e-10);
        }
        assert!(max_skorokhod_residual(&sol, &obstacle, &e, 1.0) <= 1e-12);
    }

    #[test]
    fn positive_homogeneity_and_shift_equivariance() {
        let n = 8;
        let m_count = 300;
        let e = PathEnsemble::simulate(m_count, n, 1.0, 31).unwrap();
        let basis = RegressionBasis::new(1);
        let f = zero_driver_paths(m_count, n);
        let g = zero_driver_paths(m_count, n);
        let xi: Vec<f64> = (0..m_count).map(|m| e.w[m][n].max(0.0)).collect();
        let obstacle = ObstacleForm::Deterministic { coeffs: vec![-0.2, 0.1] };

        let base = solve_frozen(&e, &f, &g, &xi, &obstacle, &basis, 0.0).unwrap();

        // scale (xi, S) by 3
        let xi3: Vec<f64> = xi.iter().map(|v| 3.0 * v).collect();
        let obstacle3 = ObstacleForm::Deterministic { coeffs: vec![-0.6, 0.3] };
        let scaled = solve_frozen(&e, &f, &g, &xi3, &obstacle3, &basis, 0.0).unwrap();
        for m in 0..m_count {
            for i in 0..=n {
                let rel = (scaled.y[m][i] - 3.0 * base.y[m][i]).abs()
                    / base.y[m][i].abs().max(1.0);
                assert!(rel < 1e-10);
                assert!((scaled.k[m][i] - 3.0 * base.k[m][i]).abs() < 1e-10);
            }
            for i in 0..n {
                assert!((scaled.z[m][i] - 3.0 * base.z[m][i]).abs() < 1e-10);
            }
        }

        // shift (xi, S) by c with no drivers: Y shifts, Z and K unchanged
        let c = 0.7;
        let xic: Vec<f64> = xi.iter().map(|v| v + c).collect();
        let obstaclec = ObstacleForm::Deterministic { coeffs: vec![-0.2 + c, 0.1] };
        let shifted = solve_frozen(&e, &f, &g, &xic, &obstaclec, &basis, 0.0).unwrap();
        for m in 0..m_count {
            for i in 0..=n {
                assert!((shifted.y[m][i] - base.y[m][i] - c).abs() < 1e-10);
                assert!((shifted.k[m][i] - base.k[m][i]).abs() < 1e-10);
            }
            for i in 0..n {
                assert!((shifted.z[m][i] - base.z[m][i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn raising_obstacle_never_lowers_y() {
        let n = 10;
        let m_count = 400;
        let e = PathEnsemble::simulate(m_count, n, 1.0, 37).unwrap();
        let basis = RegressionBasis::new(2);
        let f = zero_driver_paths(m_count, n);
        let g = zero_driver_paths(m_count, n);
        let xi: Vec<f64> = (0..m_count).map(|m| (0.2 - e.w[m][n]).max(0.0)).collect();
        let low = ObstacleForm::PutOnW { strike: 0.1 };
        let high = ObstacleForm::PutOnW { strike: 0.2 };
        let sol_low = solve_frozen(&e, &f, &g, &xi, &low, &basis, 0.0).unwrap();
        let sol_high = solve_frozen(&e, &f, &g, &xi, &high, &basis, 0.0).unwrap();
        // the projection is linear, not pointwise monotone, so individual
        // paths may dip by regression noise; the per-time ensemble averages
        // must still order, and pointwise dips stay within a noise band
        let mut worst_pointwise: f64 = 0.0;
        for i in 0..=n {
            let mean_low: f64 = sol_low.y.iter().map(|y| y[i]).sum::<f64>() / m_count as f64;
            let mean_high: f64 = sol_high.y.iter().map(|y| y[i]).sum::<f64>() / m_count as f64;
            assert!(mean_high >= mean_low - 1e-3, "time {i}: {mean_high} < {mean_low}");
            for m in 0..m_count {
                worst_pointwise = worst_pointwise.max(sol_low.y[m][i] - sol_high.y[m][i]);
            }
        }
        assert!(worst_pointwise < 0.1, "worst pointwise dip {worst_pointwise}");
    }
}
