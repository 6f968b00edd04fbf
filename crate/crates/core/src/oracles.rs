//! Independent reference solutions for tests.
//!
//! These are built and frozen before the main solver is tuned: test targets
//! come only from these oracles or from hand arithmetic, never from the
//! solver itself.

use crate::backward_scheme::ObstacleForm;
use crate::error::{Error, Result};
use crate::path_engine::PathEnsemble;

/// Closed form for ξ = W_T with zero generators: `Y = W`, `Z ≡ 1`.
pub fn martingale_reference(ensemble: &PathEnsemble) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = ensemble.step_count;
    let y = ensemble.w.clone();
    let z = vec![vec![1.0; n]; ensemble.path_count];
    (y, z)
}

/// Closed form for `g ≡ c`, `f = 0`, ξ = W_T:
/// `Y[m][i] = W[m][i] + c (B[m][N] - B[m][i])`, `Z ≡ 1`.
pub fn backward_integral_reference(
    ensemble: &PathEnsemble,
    c: f64,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = ensemble.step_count;
    let y = (0..ensemble.path_count)
        .map(|m| {
            (0..=n)
                .map(|i| ensemble.w[m][i] + c * (ensemble.b[m][n] - ensemble.b[m][i]))
                .collect()
        })
        .collect();
    let z = vec![vec![1.0; n]; ensemble.path_count];
    (y, z)
}

/// Dense-grid solution of the deterministic delayed integral equation
/// `Y(t) = xi0 + a ∫_t^T Y(s - delta0) ds`, with `Y(v) = 0` for `v < 0`.
///
/// Solved by fixed-point sweeps of the integral map with rectangle-rule
/// quadrature on `dense_n + 1` points; the delayed argument pulls values
/// from earlier times, so a single backward march cannot resolve it.
#[derive(Debug, Clone)]
pub struct DelayOdeTable {
    pub values: Vec<f64>,
    pub dt: f64,
}

impl DelayOdeTable {
    pub fn at_zero(&self) -> f64 {
        self.values[0]
    }

    /// Value at time `t` by nearest-grid lookup.
    pub fn at(&self, t: f64) -> f64 {
        let i = (t / self.dt).round() as usize;
        self.values[i.min(self.values.len() - 1)]
    }
}

pub fn delay_ode_reference(
    a: f64,
    delta0: f64,
    horizon: f64,
    xi0: f64,
    dense_n: usize,
) -> Result<DelayOdeTable> {
    if !(delta0 > 0.0 && delta0 <= horizon) {
        return Err(Error::InvalidParameter {
            name: "delta0",
            reason: format!("must lie in (0, {horizon}], got {delta0}"),
        });
    }
    if dense_n == 0 {
        return Err(Error::InvalidParameter {
            name: "dense_n",
            reason: "must be positive".into(),
        });
    }
    let h = horizon / dense_n as f64;
    let lag_steps = (delta0 / h).round() as i64;
    let mut values = vec![xi0; dense_n + 1];
    // fixed-point sweeps; geometric convergence for |a| T < 1 and still
    // convergent beyond by the Volterra structure of the delayed kernel
    for _ in 0..10_000 {
        let prev = values.clone();
        for i in 0..dense_n {
            // left rectangle rule over [t_i, T]
            let mut integral = 0.0;
            for s in i..dense_n {
                let shifted = s as i64 - lag_steps;
                if shifted >= 0 {
                    integral += prev[shifted as usize] * h;
                }
            }
            values[i] = xi0 + a * integral;
        }
        let delta = values
            .iter()
            .zip(&prev)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        if delta < 1e-13 {
            break;
        }
    }
    Ok(DelayOdeTable { values, dt: h })
}

/// Reference for the reflected zero-generator case with a deterministic
/// obstacle: `Y(t) = max(sup_{s >= t} S(s), xi0)` by backward dynamic
/// programming, with `K(t) = Y(0) - Y(t)` accumulated where the obstacle
/// binds (no martingale part in the deterministic case).
#[derive(Debug, Clone)]
pub struct SnellTable {
    pub y: Vec<f64>,
    pub k: Vec<f64>,
    pub dt: f64,
}

pub fn snell_deterministic(s: impl Fn(f64) -> f64, xi0: f64, horizon: f64, n: usize) -> SnellTable {
    let dt = horizon / n as f64;
    let mut y = vec![0.0; n + 1];
    y[n] = xi0;
    for i in (0..n).rev() {
        y[i] = y[i + 1].max(s(i as f64 * dt));
    }
    let mut k = vec![0.0; n + 1];
    for i in 0..n {
        k[i + 1] = k[i] + (y[i] - y[i + 1]);
    }
    SnellTable { y, k, dt }
}

/// Reflected zero-generator value at time 0 for an obstacle depending on
/// `W`, by dynamic programming on a recombining ±√dt binomial tree.
///
/// The terminal condition is the obstacle's terminal value. Callers should
/// require two-resolution agreement before freezing the result as a test
/// target.
pub fn snell_tree(obstacle: &ObstacleForm, horizon: f64, steps: usize) -> Result<f64> {
    if obstacle.is_none() {
        return Err(Error::InvalidObstacle(
            "tree oracle needs an obstacle".into(),
        ));
    }
    let dt = horizon / steps as f64;
    let step = dt.sqrt();
    // node j at level i carries W = (2j - i) sqrt(dt)
    let mut values: Vec<f64> = (0..=steps)
        .map(|j| {
            let w = (2.0 * j as f64 - steps as f64) * step;
            obstacle.value(horizon, w)
        })
        .collect();
    for i in (0..steps).rev() {
        let t = i as f64 * dt;
        for j in 0..=i {
            let w = (2.0 * j as f64 - i as f64) * step;
            let continuation = 0.5 * (values[j] + values[j + 1]);
            values[j] = continuation.max(obstacle.value(t, w));
        }
        values.truncate(i + 1);
    }
    Ok(values[0])
}
