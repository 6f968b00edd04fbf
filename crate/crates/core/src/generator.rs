//! Delayed generators `f` and `g` with declared Lipschitz metadata.
//!
//! Forms come from a closed registry so the declared constants `(L, α)` can
//! actually be checked: an arbitrary callback could silently violate the
//! delayed Lipschitz bound and void every feasibility verdict downstream.
//! Both generators vanish for negative times.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::delay_measure::DelayMeasure;
use crate::error::{Error, Result};

/// Registry of generator forms.
///
/// `Affine` means `a * <Y>_γ + b * <Z>_γ + c` where `<.>_γ` is the
/// γ-weighted past aggregate. `PointDelay` is the same affine shape but
/// aggregated against a point mass at its own lag, ignoring the problem's
/// measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorForm {
    Zero,
    /// `h(t) = Σ_k coeffs[k] t^k`, independent of the solution.
    TimeOnly { coeffs: Vec<f64> },
    Affine { a: f64, b: f64, c: f64 },
    PointDelay { a: f64, b: f64, c: f64, lag: f64 },
}

impl GeneratorForm {
    fn poly(coeffs: &[f64], t: f64) -> f64 {
        coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    /// Value at zero solution paths, i.e. `f(t, 0, 0)`.
    pub fn at_zero(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match self {
            GeneratorForm::Zero => 0.0,
            GeneratorForm::TimeOnly { coeffs } => Self::poly(coeffs, t),
            GeneratorForm::Affine { c, .. } => *c,
            GeneratorForm::PointDelay { c, .. } => *c,
        }
    }
}

/// Which of the pair to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    F,
    G,
}

/// The generator pair `(f, g)` with declared constants `L` and `α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub f_form: GeneratorForm,
    pub g_form: GeneratorForm,
    /// Declared Lipschitz constant `L > 0`.
    pub lipschitz: f64,
    /// Declared `α`, strictly inside `(0, 1)`.
    pub alpha: f64,
}

impl GeneratorSpec {
    /// Build and validate a spec.
    ///
    /// Affine `f` forms need `a² + b² ≤ L`; affine `g` forms additionally
    /// need `a²/L + b²/α ≤ 1` so the `(L, α)`-split bound is attainable.
    pub fn new(f_form: GeneratorForm, g_form: GeneratorForm, lipschitz: f64, alpha: f64) -> Result<Self> {
        let spec = Self::new_unchecked(f_form, g_form, lipschitz, alpha);
        spec.validate()?;
        Ok(spec)
    }

    /// Skip validation; used by tests that exercise the audit on
    /// deliberately inconsistent declarations.
    pub fn new_unchecked(
        f_form: GeneratorForm,
        g_form: GeneratorForm,
        lipschitz: f64,
        alpha: f64,
    ) -> Self {
        Self {
            f_form,
            g_form,
            lipschitz,
            alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lipschitz > 0.0) || !self.lipschitz.is_finite() {
            return Err(Error::InvalidGenerator(format!(
                "lipschitz constant must be positive, got {}",
                self.lipschitz
            )));
        }
        // the open interval is strict: neither endpoint is admissible
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidGenerator(format!(
                "alpha must lie in the open interval (0, 1) (assumption H2), got {}",
                self.alpha
            )));
        }
        let tol = 1e-12;
        if let Some((a, b)) = affine_slopes(&self.f_form) {
            if a * a + b * b > self.lipschitz * (1.0 + tol) {
                return Err(Error::InvalidGenerator(format!(
                    "f slopes violate a^2 + b^2 <= L: {} > {}",
                    a * a + b * b,
                    self.lipschitz
                )));
            }
        }
        if let Some((a, b)) = affine_slopes(&self.g_form) {
            if a * a + b * b > self.lipschitz * (1.0 + tol) {
                return Err(Error::InvalidGenerator(format!(
                    "g slopes violate a^2 + b^2 <= L: {} > {}",
                    a * a + b * b,
                    self.lipschitz
                )));
            }
            if a * a / self.lipschitz + b * b / self.alpha > 1.0 + tol {
                return Err(Error::InvalidGenerator(format!(
                    "g slopes violate a^2/L + b^2/alpha <= 1: {}",
                    a * a / self.lipschitz + b * b / self.alpha
                )));
            }
        }
        if let GeneratorForm::PointDelay { lag, .. } = self.f_form {
            if lag > 0.0 {
                return Err(Error::InvalidGenerator(format!("point delay lag {lag} must be <= 0")));
            }
        }
        if let GeneratorForm::PointDelay { lag, .. } = self.g_form {
            if lag > 0.0 {
                return Err(Error::InvalidGenerator(format!("point delay lag {lag} must be <= 0")));
            }
        }
        Ok(())
    }

    /// Evaluate one generator at grid time `t` on discrete paths.
    ///
    /// Returns 0 for `t < 0`. Delayed arguments are the γ-aggregates of the
    /// path segments, zero-extended before time 0.
    pub fn evaluate(
        &self,
        which: Which,
        t: f64,
        y_path: &[f64],
        z_path: &[f64],
        measure: &DelayMeasure,
        dt: f64,
    ) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let form = match which {
            Which::F => &self.f_form,
            Which::G => &self.g_form,
        };
        let t_index = (t / dt).round() as usize;
        match form {
            GeneratorForm::Zero => 0.0,
            GeneratorForm::TimeOnly { coeffs } => GeneratorForm::poly(coeffs, t),
            GeneratorForm::Affine { a, b, c } => {
                let snapped = measure.snap_to_grid(dt);
                a * snapped.aggregate(y_path, t_index) + b * snapped.aggregate(z_path, t_index) + c
            }
            GeneratorForm::PointDelay { a, b, c, lag } => {
                let point = DelayMeasure::point_mass(*lag, measure.horizon())
                    .expect("validated lag")
                    .snap_to_grid(dt);
                a * point.aggregate(y_path, t_index) + b * point.aggregate(z_path, t_index) + c
            }
        }
    }

    /// `f(t, 0, 0)` for the `which` generator.
    pub fn at_zero(&self, which: Which, t: f64) -> f64 {
        match which {
            Which::F => self.f_form.at_zero(t),
            Which::G => self.g_form.at_zero(t),
        }
    }

    /// Sample random segment pairs and check the declared delayed Lipschitz
    /// bounds empirically. Passes iff the worst observed lhs/rhs ratio stays
    /// at or below 1 (up to 1e-12).
    pub fn lipschitz_audit(
        &self,
        measure: &DelayMeasure,
        sample_count: usize,
        seed: u64,
    ) -> Result<LipschitzAudit> {
        if sample_count == 0 {
            return Err(Error::InvalidParameter {
                name: "sample_count",
                reason: "must be at least 1".into(),
            });
        }
        let n = 16usize;
        let dt = measure.horizon() / n as f64;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut max_ratio_f: f64 = 0.0;
        let mut max_ratio_g: f64 = 0.0;

        for k in 0..sample_count {
            let y1 = random_segment(&mut rng, n + 1);
            let z1 = random_segment(&mut rng, n + 1);
            // cycle through perturbation modes so extremal directions
            // (y-only, z-only, constant shifts) are always represented
            let (y2, z2) = match k % 4 {
                0 => (random_segment(&mut rng, n + 1), random_segment(&mut rng, n + 1)),
                1 => (random_segment(&mut rng, n + 1), z1.clone()),
                2 => (y1.clone(), random_segment(&mut rng, n + 1)),
                _ => {
                    let sy: f64 = rng.gen_range(-2.0..2.0);
                    let sz: f64 = rng.gen_range(-2.0..2.0);
                    (
                        y1.iter().map(|v| v + sy).collect(),
                        z1.iter().map(|v| v + sz).collect(),
                    )
                }
            };
            // bias toward the fully in-range endpoint where equality cases live
            let t_index = if k % 2 == 0 { n } else { rng.gen_range(0..=n) };
            let t = t_index as f64 * dt;

            let snapped = measure.snap_to_grid(dt);
            let dy = snapped.sq_distance(&y1, &y2, t_index);
            let dz = snapped.sq_distance(&z1, &z2, t_index);

            let lhs_f = {
                let v1 = self.evaluate(Which::F, t, &y1, &z1, measure, dt);
                let v2 = self.evaluate(Which::F, t, &y2, &z2, measure, dt);
                (v1 - v2) * (v1 - v2)
            };
            let rhs_f = self.lipschitz * (dy + dz);
            update_ratio(&mut max_ratio_f, lhs_f, rhs_f);

            let lhs_g = {
                let v1 = self.evaluate(Which::G, t, &y1, &z1, measure, dt);
                let v2 = self.evaluate(Which::G, t, &y2, &z2, measure, dt);
                (v1 - v2) * (v1 - v2)
            };
            let rhs_g = self.lipschitz * dy + self.alpha * dz;
            update_ratio(&mut max_ratio_g, lhs_g, rhs_g);
        }

        let pass = max_ratio_f <= 1.0 + 1e-12 && max_ratio_g <= 1.0 + 1e-12;
        Ok(LipschitzAudit {
            samples: sample_count,
            max_ratio_f,
            max_ratio_g,
            pass,
        })
    }

    /// Verify the discrete integrability bound per path:
    /// `Σ_i |f(t_i, Y, Z)|² dt ≤ 2 Σ_i |f0(t_i)|² dt + 2L (T sup|Y|² + Σ|Z|² dt)`.
    pub fn integrability_check(
        &self,
        y_paths: &[Vec<f64>],
        z_paths: &[Vec<f64>],
        measure: &DelayMeasure,
        dt: f64,
    ) -> Result<IntegrabilityReport> {
        if y_paths.len() != z_paths.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} Y paths vs {} Z paths",
                y_paths.len(),
                z_paths.len()
            )));
        }
        let mut per_path = Vec::with_capacity(y_paths.len());
        let mut pass = true;
        for (y, z) in y_paths.iter().zip(z_paths) {
            let n = z.len();
            let horizon = n as f64 * dt;
            let mut lhs = 0.0;
            let mut f0_sum = 0.0;
            for i in 0..n {
                let t = i as f64 * dt;
                let v = self.evaluate(Which::F, t, y, z, measure, dt);
                lhs += v * v * dt;
                let f0 = self.at_zero(Which::F, t);
                f0_sum += f0 * f0 * dt;
            }
            let sup_y = y.iter().fold(0.0f64, |acc, v| acc.max(v * v));
            let z_energy: f64 = z.iter().map(|v| v * v * dt).sum();
            let rhs = 2.0 * f0_sum + 2.0 * self.lipschitz * (horizon * sup_y + z_energy);
            if lhs > rhs + 1e-9 * (1.0 + rhs) {
                pass = false;
            }
            per_path.push((lhs, rhs));
        }
        Ok(IntegrabilityReport { per_path, pass })
    }
}

fn affine_slopes(form: &GeneratorForm) -> Option<(f64, f64)> {
    match form {
        GeneratorForm::Affine { a, b, .. } => Some((*a, *b)),
        GeneratorForm::PointDelay { a, b, .. } => Some((*a, *b)),
        _ => None,
    }
}

fn random_segment(rng: &mut ChaCha12Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-3.0..3.0)).collect()
}

fn update_ratio(max_ratio: &mut f64, lhs: f64, rhs: f64) {
    if rhs > 1e-300 {
        *max_ratio = max_ratio.max(lhs / rhs);
    } else if lhs > 1e-300 {
        *max_ratio = f64::INFINITY;
    }
}

/// Outcome of a sampled Lipschitz audit.
#[derive(Debug, Clone, Serialize)]
pub struct LipschitzAudit {
    pub samples: usize,
    pub max_ratio_f: f64,
    pub max_ratio_g: f64,
    pub pass: bool,
}

/// Per-path sides of the discrete integrability inequality.
#[derive(Debug, Clone, Serialize)]
pub struct IntegrabilityReport {
    pub per_path: Vec<(f64, f64)>,
    pub pass: bool,
}
