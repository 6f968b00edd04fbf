//! Randomized structural properties of the delay-measure algebra and the
//! regression projector.

use proptest::prelude::*;

use rbdsde::backward_scheme::condexp_project;
use rbdsde::delay_measure::DelayMeasure;
use rbdsde::experiment::fubini_gap;
use rbdsde::picard_solver::beta_norm_distance;

/// Strategy for a valid delay measure on horizon 1: up to 4 atoms with
/// normalized positive weights and distinct nonpositive lags.
fn measure_strategy() -> impl Strategy<Value = DelayMeasure> {
    proptest::collection::vec((0..=16u8, 0.05f64..1.0), 1..=4).prop_map(|raw| {
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        for (slot, weight) in raw {
            let lag = -(slot as f64) / 16.0;
            if let Some(existing) = atoms.iter_mut().find(|(l, _)| *l == lag) {
                existing.1 += weight;
            } else {
                atoms.push((lag, weight));
            }
        }
        let total: f64 = atoms.iter().map(|(_, w)| w).sum();
        for atom in atoms.iter_mut() {
            atom.1 /= total;
        }
        DelayMeasure::new(atoms, 1.0).expect("constructed valid")
    })
}

proptest! {
    /// Exchanging the order of summation never increases the weighted
    /// energy: the delayed aggregate of z² is dominated by γ̃ times the
    /// plain weighted energy.
    #[test]
    fn delayed_energy_never_exceeds_gamma_tilde_bound(
        measure in measure_strategy(),
        z in proptest::collection::vec(-10.0f64..10.0, 1..=40),
        beta in 0.0f64..4.0,
    ) {
        let dt = 1.0 / z.len() as f64;
        let gap = fubini_gap(&[z], &measure, beta, dt);
        prop_assert!(gap <= 1e-9, "excess {gap}");
    }

    /// γ̃ is nondecreasing in β for nonpositive lags, and equals 1 at β = 0.
    #[test]
    fn gamma_tilde_monotone_and_normalized(
        measure in measure_strategy(),
        beta_lo in 0.0f64..4.0,
        bump in 0.0f64..4.0,
    ) {
        prop_assert!((measure.gamma_tilde(0.0) - 1.0).abs() < 1e-12);
        let lo = measure.gamma_tilde(beta_lo);
        let hi = measure.gamma_tilde(beta_lo + bump);
        prop_assert!(hi >= lo - 1e-12);
        prop_assert!(lo >= 1.0 - 1e-12);
    }

    /// The aggregate is linear in the path.
    #[test]
    fn aggregate_is_linear(
        measure in measure_strategy(),
        x in proptest::collection::vec(-5.0f64..5.0, 5..=20),
        y in proptest::collection::vec(-5.0f64..5.0, 5..=20),
        a in -3.0f64..3.0,
        t_index in 0usize..20,
    ) {
        let len = x.len().min(y.len());
        let t_index = t_index % len;
        let dt = 1.0 / (len - 1).max(1) as f64;
        let snapped = measure.snap_to_grid(dt);
        let combo: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + v).collect();
        let lhs = snapped.aggregate(&combo, t_index);
        let rhs = a * snapped.aggregate(&x[..len], t_index) + snapped.aggregate(&y[..len], t_index);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    /// Projection is idempotent: fitting the fitted values reproduces them.
    #[test]
    fn projection_is_idempotent(
        seedlike in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0, -5.0f64..5.0), 10..=40),
    ) {
        let m = seedlike.len();
        let p = 3;
        let mut features = vec![0.0; m * p];
        let mut targets = vec![0.0; m];
        for (i, &(x, y, t)) in seedlike.iter().enumerate() {
            features[i * p] = 1.0;
            features[i * p + 1] = x;
            features[i * p + 2] = y;
            targets[i] = t;
        }
        let once = condexp_project(&targets, &features, p).unwrap();
        let twice = condexp_project(&once.fitted, &features, p).unwrap();
        for (a, b) in once.fitted.iter().zip(&twice.fitted) {
            prop_assert!((a - b).abs() <= 1e-8 * (1.0 + a.abs()));
        }
    }

    /// The β-norm distance is symmetric and absolutely homogeneous.
    #[test]
    fn beta_norm_symmetry_and_homogeneity(
        y in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 6), 1..=5),
        lam in -3.0f64..3.0,
        beta in 0.0f64..2.0,
    ) {
        let z: Vec<Vec<f64>> = y.iter().map(|p| p[..5].to_vec()).collect();
        let y0 = vec![vec![0.0; 6]; y.len()];
        let z0 = vec![vec![0.0; 5]; y.len()];
        let d = beta_norm_distance(&y, &z, &y0, &z0, beta, 0.2).unwrap();
        let d_sym = beta_norm_distance(&y0, &z0, &y, &z, beta, 0.2).unwrap();
        prop_assert!((d - d_sym).abs() <= 1e-12 * (1.0 + d));

        let ys: Vec<Vec<f64>> = y.iter().map(|p| p.iter().map(|v| lam * v).collect()).collect();
        let zs: Vec<Vec<f64>> = z.iter().map(|p| p.iter().map(|v| lam * v).collect()).collect();
        let ds = beta_norm_distance(&ys, &zs, &y0, &z0, beta, 0.2).unwrap();
        prop_assert!((ds - lam.abs() * d).abs() <= 1e-9 * (1.0 + d));
    }
}
