//! Seeded ensembles of the two independent Brownian drivers.
//!
//! `W` is integrated forward, `B` backward; the regression conditioning
//! state at step `i` is `(W_{t_i}, B_T - B_{t_i})`. Each path gets its own
//! RNG stream derived from `(seed, path index)`, so the ensemble is
//! bit-identical regardless of how simulation is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::io::Write;

use crate::error::{Error, Result};

/// M sampled trajectories of `(W, B)` on a uniform N-step grid over `[0, T]`.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    pub path_count: usize,
    pub step_count: usize,
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
    /// M x N forward increments, variance `dt`.
    pub dw: Vec<Vec<f64>>,
    /// M x N backward-driver increments, variance `dt`.
    pub db: Vec<Vec<f64>>,
    /// M x (N+1) cumulative paths, `w[m][0] = 0`.
    pub w: Vec<Vec<f64>>,
    /// M x (N+1) cumulative paths, `b[m][0] = 0`.
    pub b: Vec<Vec<f64>>,
}

impl PathEnsemble {
    /// Simulate `path_count` independent paths of both drivers.
    pub fn simulate(path_count: usize, step_count: usize, horizon: f64, seed: u64) -> Result<Self> {
        if path_count == 0 {
            return Err(Error::InvalidParameter {
                name: "path_count",
                reason: "must be at least 1".into(),
            });
        }
        if step_count == 0 {
            return Err(Error::InvalidParameter {
                name: "step_count",
                reason: "must be at least 1".into(),
            });
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidParameter {
                name: "horizon",
                reason: format!("must be positive and finite, got {horizon}"),
            });
        }
        let dt = horizon / step_count as f64;
        let sqrt_dt = dt.sqrt();

        let paths: Vec<(Vec<f64>, Vec<f64>)> = (0..path_count)
            .into_par_iter()
            .map(|m| {
                let mut rng = path_rng(seed, m as u64);
                let dw: Vec<f64> = (0..step_count)
                    .map(|_| sqrt_dt * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                    .collect();
                let db: Vec<f64> = (0..step_count)
                    .map(|_| sqrt_dt * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                    .collect();
                (dw, db)
            })
            .collect();

        let mut dw = Vec::with_capacity(path_count);
        let mut db = Vec::with_capacity(path_count);
        let mut w = Vec::with_capacity(path_count);
        let mut b = Vec::with_capacity(path_count);
        for (dw_m, db_m) in paths {
            w.push(cumulative(&dw_m));
            b.push(cumulative(&db_m));
            dw.push(dw_m);
            db.push(db_m);
        }

        Ok(Self {
            path_count,
            step_count,
            horizon,
            dt,
            seed,
            dw,
            db,
            w,
            b,
        })
    }

    /// Grid time `t_i = i * dt`.
    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    /// The conditioning state `(W_{t_i}, B_T - B_{t_i})` at step `i`.
    pub fn backward_state(&self, m: usize, i: usize) -> Result<(f64, f64)> {
        if m >= self.path_count || i > self.step_count {
            return Err(Error::IndexOutOfBounds(format!(
                "path {m}, step {i} (ensemble is {} x {})",
                self.path_count, self.step_count
            )));
        }
        let w = self.w[m][i];
        let b_tail = self.b[m][self.step_count] - self.b[m][i];
        Ok((w, b_tail))
    }

    /// Columnar text dump `(path, step, dW, dB)` for debugging.
    pub fn dump<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "path,step,dw,db")?;
        for m in 0..self.path_count {
            for i in 0..self.step_count {
                writeln!(out, "{m},{i},{:.17e},{:.17e}", self.dw[m][i], self.db[m][i])?;
            }
        }
        Ok(())
    }
}

fn cumulative(increments: &[f64]) -> Vec<f64> {
    let mut path = Vec::with_capacity(increments.len() + 1);
    let mut acc = 0.0;
    path.push(acc);
    for &d in increments {
        acc += d;
        path.push(acc);
    }
    path
}

/// Per-path stream: same ChaCha key, path index as the stream id.
fn path_rng(seed: u64, path: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}
