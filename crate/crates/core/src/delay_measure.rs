//! Discrete delay measures on `[-T, 0]`.
//!
//! A `DelayMeasure` is a finitely-atomic probability measure γ whose atoms
//! sit at nonpositive lags. It drives the delayed arguments of the
//! generators: a path value at time `t` is aggregated over its past as
//! `Σ_j w_j x(t + u_j)`, with paths treated as 0 before time 0.
//!
//! The amplification factor `γ̃(β) = Σ_j w_j e^{-β u_j}` enters the
//! feasibility constants and the contraction coefficient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weight sum must match 1 to within this tolerance.
const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A probability measure with finitely many atoms at lags in `[-T, 0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayMeasure {
    atoms: Vec<(f64, f64)>,
    horizon: f64,
}

impl DelayMeasure {
    /// Build a measure from `(lag, weight)` pairs.
    ///
    /// Atoms are sorted by lag. Lags must lie in `[-horizon, 0]`, weights
    /// must be positive and sum to 1, and lags must be distinct.
    pub fn new(mut atoms: Vec<(f64, f64)>, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::InvalidParameter {
                name: "horizon",
                reason: format!("must be positive, got {horizon}"),
            });
        }
        if atoms.is_empty() {
            return Err(Error::InvalidDelayMeasure {
                index: 0,
                reason: "measure needs at least one atom".into(),
            });
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut weight_sum = 0.0;
        for (index, &(lag, weight)) in atoms.iter().enumerate() {
            if !lag.is_finite() || lag < -horizon || lag > 0.0 {
                return Err(Error::InvalidDelayMeasure {
                    index,
                    reason: format!("lag {lag} outside [-{horizon}, 0]"),
                });
            }
            if !(weight > 0.0) || !weight.is_finite() {
                return Err(Error::InvalidDelayMeasure {
                    index,
                    reason: format!("weight {weight} must be positive"),
                });
            }
            if index > 0 && atoms[index - 1].0 == lag {
                return Err(Error::InvalidDelayMeasure {
                    index,
                    reason: format!("duplicate lag {lag}"),
                });
            }
            weight_sum += weight;
        }
        if (weight_sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidDelayMeasure {
                index: atoms.len() - 1,
                reason: format!("weights sum to {weight_sum}, expected 1"),
            });
        }
        Ok(Self { atoms, horizon })
    }

    /// Point mass at a single lag.
    pub fn point_mass(lag: f64, horizon: f64) -> Result<Self> {
        Self::new(vec![(lag, 1.0)], horizon)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `γ̃(β) = Σ_j w_j e^{-β u_j}`.
    ///
    /// Always ≥ 1 for β ≥ 0 since every lag is nonpositive.
    pub fn gamma_tilde(&self, beta: f64) -> f64 {
        self.atoms
            .iter()
            .map(|&(lag, weight)| weight * (-beta * lag).exp())
            .sum()
    }

    /// Snap atom lags to the nearest multiple of `dt`.
    ///
    /// Segment lookup then stays exact-index. A warning is recorded per atom
    /// whose snap error exceeds `dt/2 * 1e-9`.
    pub fn snap_to_grid(&self, dt: f64) -> SnappedMeasure {
        let mut offsets = Vec::with_capacity(self.atoms.len());
        let mut warnings = Vec::new();
        for (index, &(lag, weight)) in self.atoms.iter().enumerate() {
            let steps = (lag / dt).round() as i64;
            let err = (lag - steps as f64 * dt).abs();
            if err > dt * 0.5e-9 {
                warnings.push(format!(
                    "atom {index}: lag {lag} snapped to {} (error {err:.3e})",
                    steps as f64 * dt
                ));
            }
            offsets.push((steps, weight));
        }
        SnappedMeasure { offsets, warnings }
    }
}

/// A delay measure with lags resolved to grid-step offsets (all ≤ 0).
#[derive(Debug, Clone)]
pub struct SnappedMeasure {
    /// `(step offset, weight)` pairs; offsets are nonpositive.
    pub offsets: Vec<(i64, f64)>,
    /// Snap-error warnings, one per offending atom.
    pub warnings: Vec<String>,
}

impl SnappedMeasure {
    /// `Σ_j w_j x[i + s_j]`, with `x` treated as 0 outside `[0, len)`.
    pub fn aggregate(&self, path: &[f64], t_index: usize) -> f64 {
        let n = path.len() as i64;
        let i = t_index as i64;
        self.offsets
            .iter()
            .map(|&(s, w)| {
                let idx = i + s;
                if idx >= 0 && idx < n {
                    w * path[idx as usize]
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// `Σ_j w_j |x¹[i+s_j] - x²[i+s_j]|²`, zero-extended like `aggregate`.
    pub fn sq_distance(&self, path1: &[f64], path2: &[f64], t_index: usize) -> f64 {
        let n1 = path1.len() as i64;
        let n2 = path2.len() as i64;
        let i = t_index as i64;
        self.offsets
            .iter()
            .map(|&(s, w)| {
                let idx = i + s;
                let a = if idx >= 0 && idx < n1 {
                    path1[idx as usize]
                } else {
                    0.0
                };
                let b = if idx >= 0 && idx < n2 {
                    path2[idx as usize]
                } else {
                    0.0
                };
                w * (a - b) * (a - b)
            })
            .sum()
    }
}

/// γ-weighted average of past path values, zero-extended before time 0.
pub fn delayed_aggregate(path: &[f64], t_index: usize, measure: &DelayMeasure, dt: f64) -> f64 {
    measure.snap_to_grid(dt).aggregate(path, t_index)
}

/// γ-weighted squared distance between two paths' past segments.
pub fn delayed_sq_distance(
    path1: &[f64],
    path2: &[f64],
    t_index: usize,
    measure: &DelayMeasure,
    dt: f64,
) -> f64 {
    measure.snap_to_grid(dt).sq_distance(path1, path2, t_index)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_atoms() {
        assert!(DelayMeasure::new(vec![(0.5, 1.0)], 1.0).is_err());
        assert!(DelayMeasure::new(vec![(-2.0, 1.0)], 1.0).is_err());
        assert!(DelayMeasure::new(vec![(-0.5, 0.5), (-0.5, 0.5)], 1.0).is_err());
        assert!(DelayMeasure::new(vec![(-0.5, 0.7), (0.0, 0.7)], 1.0).is_err());
        assert!(DelayMeasure::new(vec![(0.0, -1.0), (0.0, 2.0)], 1.0).is_err());
        assert!(DelayMeasure::new(vec![], 1.0).is_err());
    }

    #[test]
    fn gamma_tilde_point_masses() {
        let at_zero = DelayMeasure::point_mass(0.0, 1.0).unwrap();
        assert_eq!(at_zero.gamma_tilde(7.3), 1.0);

        let at_minus_one = DelayMeasure::point_mass(-1.0, 1.0).unwrap();
        assert_eq!(at_minus_one.gamma_tilde(0.0), 1.0);
    }

    #[test]
    fn gamma_tilde_two_atoms_hand_value() {
        let m = DelayMeasure::new(vec![(-1.0, 0.5), (0.0, 0.5)], 1.0).unwrap();
        // 0.5 * e^{ln 2} + 0.5 * 1 = 1.5
        assert!((m.gamma_tilde(2.0_f64.ln()) - 1.5).abs() < 1e-14);
    }

    #[test]
    fn aggregate_constant_path() {
        let m = DelayMeasure::new(vec![(-0.25, 0.3), (0.0, 0.7)], 1.0).unwrap();
        let path = vec![3.5; 5]; // grid T=1, N=4
        // t_index 1..4 keep every shifted index >= 0
        assert!((delayed_aggregate(&path, 4, &m, 0.25) - 3.5).abs() < 1e-15);
        assert!((delayed_aggregate(&path, 1, &m, 0.25) - 3.5).abs() < 1e-15);
    }

    #[test]
    fn aggregate_identity_lag() {
        let m = DelayMeasure::point_mass(0.0, 1.0).unwrap();
        let path = vec![1.0, 2.0, 3.0];
        assert_eq!(delayed_aggregate(&path, 1, &m, 0.5), 2.0);
    }

    #[test]
    fn aggregate_zero_extension() {
        // x(t_i) = t_i on grid T=1, N=4; point mass at -0.5; t = 0.25
        let path = vec![0.0, 0.25, 0.5, 0.75, 1.0];
        let m = DelayMeasure::point_mass(-0.5, 1.0).unwrap();
        assert_eq!(delayed_aggregate(&path, 1, &m, 0.25), 0.0);
    }

    #[test]
    fn sq_distance_examples() {
        let m = DelayMeasure::new(vec![(-0.5, 0.5), (0.0, 0.5)], 1.0).unwrap();
        let n = 4;
        let dt = 0.25;
        let x1: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
        let x2 = vec![0.0; n + 1];
        assert_eq!(delayed_sq_distance(&x1, &x1, 2, &m, dt), 0.0);
        // t = 0.5: lag -0.5 hits time 0 where x1 = 0, lag 0 hits 0.5
        assert!((delayed_sq_distance(&x1, &x2, 2, &m, dt) - 0.125).abs() < 1e-15);

        let ones = vec![1.0; n + 1];
        let zeros = vec![0.0; n + 1];
        let all_in = DelayMeasure::point_mass(0.0, 1.0).unwrap();
        assert_eq!(delayed_sq_distance(&ones, &zeros, 3, &all_in, dt), 1.0);
    }

    #[test]
    fn snap_warns_on_off_grid_lag() {
        let m = DelayMeasure::point_mass(-0.3, 1.0).unwrap();
        let snapped = m.snap_to_grid(0.25);
        assert_eq!(snapped.offsets, vec![(-1, 1.0)]);
        assert_eq!(snapped.warnings.len(), 1);

        let exact = DelayMeasure::point_mass(-0.25, 1.0).unwrap().snap_to_grid(0.25);
        assert!(exact.warnings.is_empty());
    }
}
