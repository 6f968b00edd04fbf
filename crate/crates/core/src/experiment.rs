//! End-to-end experiment drivers: run a configured problem, audit the
//! solution's structural invariants, compare against reference solutions,
//! and sweep discretization parameters.
//!
//! All artifacts are written with fixed-precision formatting so a repeated
//! run with the same config and seed reproduces identical bytes. Wall-clock
//! timings are kept out of the deterministic files for that reason.

use serde::Serialize;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use crate::backward_scheme::{ObstacleForm, RegressionBasis, SolutionTriple};
use crate::conditions::{check_prop2, check_thm6, default_grid, search_feasible, SearchOutcome};
use crate::config::{Config, TerminalCondition};
use crate::delay_measure::DelayMeasure;
use crate::error::{Error, Result};
use crate::estimates::skorokhod_residuals;
use crate::generator::GeneratorForm;
use crate::oracles;
use crate::path_engine::PathEnsemble;
use crate::picard_solver::{solve, PicardDiagnostics, Problem};

/// Process exit code for an error.
///
/// 0 success, 2 configuration/validation, 3 fixed-point divergence,
/// 4 invariant violation, 1 anything else.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Config(_)
        | Error::InvalidDelayMeasure { .. }
        | Error::InvalidGenerator(_)
        | Error::InvalidObstacle(_)
        | Error::InvalidParameter { .. } => 2,
        Error::Diverged { .. } => 3,
        Error::InvariantViolation(_) => 4,
        _ => 1,
    }
}

/// Everything a single run produces.
#[derive(Debug)]
pub struct RunOutput {
    pub solution: SolutionTriple,
    pub diagnostics: PicardDiagnostics,
    pub ensemble: PathEnsemble,
    pub terminal: Vec<f64>,
    pub audit: AuditReport,
    pub summary: RunSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub y0_mean: f64,
    pub y0_std_error: f64,
    pub k_terminal_mean: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_distance: f64,
    pub distances: Vec<f64>,
    pub ratios: Vec<f64>,
    pub max_skorokhod_residual: f64,
    /// Delay-lag grid snap warnings, if any.
    pub warnings: Vec<String>,
}

/// One named structural check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Structural invariants audited on every run.
#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

impl AuditReport {
    pub fn failures(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

/// Solve the configured problem and audit the result in memory.
pub fn run(config: &Config) -> Result<RunOutput> {
    config.validate()?;
    let ensemble = PathEnsemble::simulate(
        config.ensemble.paths,
        config.ensemble.steps,
        config.ensemble.horizon,
        config.ensemble.seed,
    )?;
    let measure = config.delay()?;
    let generator = config.generator_spec()?;
    let terminal = config.terminal.sample(&ensemble);
    let basis = RegressionBasis::new(config.solver.basis_degree);
    let problem = Problem {
        ensemble: &ensemble,
        generator: &generator,
        measure: &measure,
        obstacle: &config.obstacle,
        terminal: &terminal,
        basis,
        beta: config.constants.beta,
    };
    let (solution, diagnostics) = solve(&problem, config.solver.tol, config.solver.max_iter)?;

    let audit = audit_solution(
        &solution,
        &ensemble,
        &config.obstacle,
        &terminal,
        &measure,
        config.constants.beta,
    );
    if !audit.pass {
        let names: Vec<&str> = audit.failures().iter().map(|c| c.name.as_str()).collect();
        return Err(Error::InvariantViolation(format!(
            "solution failed structural checks: {}",
            names.join(", ")
        )));
    }

    let warnings = measure
        .snap_to_grid(ensemble.dt)
        .warnings
        .iter()
        .map(|w| w.to_string())
        .collect();
    let summary = summarize(&solution, &diagnostics, &ensemble, &config.obstacle, config.constants.beta, warnings);
    Ok(RunOutput {
        solution,
        diagnostics,
        ensemble,
        terminal,
        audit,
        summary,
    })
}

fn summarize(
    solution: &SolutionTriple,
    diagnostics: &PicardDiagnostics,
    ensemble: &PathEnsemble,
    obstacle: &ObstacleForm,
    beta: f64,
    warnings: Vec<String>,
) -> RunSummary {
    let m = solution.path_count() as f64;
    let y0_mean = solution.y0_mean();
    let y0_var = solution
        .y
        .iter()
        .map(|p| (p[0] - y0_mean) * (p[0] - y0_mean))
        .sum::<f64>()
        / m;
    let residuals = skorokhod_residuals(solution, obstacle, ensemble, beta);
    RunSummary {
        y0_mean,
        y0_std_error: (y0_var / m).sqrt(),
        k_terminal_mean: solution.k_terminal_mean(),
        iterations: diagnostics.iterations,
        converged: diagnostics.converged,
        final_distance: diagnostics.final_distance,
        distances: diagnostics.distances.clone(),
        ratios: diagnostics.ratios.clone(),
        max_skorokhod_residual: residuals.iter().fold(0.0f64, |a, r| a.max(r.abs())),
        warnings,
    }
}

/// Run the configured problem and write artifacts into `out_dir`:
/// `conditions.json`, `summary.json`, `per_time.csv`, `audit.json`.
pub fn run_to_dir(config: &Config, out_dir: &Path) -> Result<RunOutput> {
    std::fs::create_dir_all(out_dir)?;
    let conditions = conditions_json(config)?;
    write_bytes(&out_dir.join("conditions.json"), conditions.as_bytes())?;

    let output = run(config)?;

    let summary = serde_json::to_string_pretty(&output.summary)
        .map_err(|e| Error::Config(format!("serialize summary: {e}")))?;
    write_bytes(&out_dir.join("summary.json"), summary.as_bytes())?;

    let audit = serde_json::to_string_pretty(&output.audit)
        .map_err(|e| Error::Config(format!("serialize audit: {e}")))?;
    write_bytes(&out_dir.join("audit.json"), audit.as_bytes())?;

    let csv = per_time_csv(&output.solution, &output.ensemble);
    write_bytes(&out_dir.join("per_time.csv"), csv.as_bytes())?;
    Ok(output)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(bytes)?;
    Ok(())
}

/// Feasibility verdicts at the configured constants plus a grid search.
pub fn conditions_json(config: &Config) -> Result<String> {
    let measure = config.delay()?;
    let l = config.generator.lipschitz;
    let a = config.generator.alpha;
    let t = config.ensemble.horizon;
    let c = &config.constants;
    let prop2 = check_prop2(c.beta, c.theta, l, a, &measure)?;
    let thm6 = check_thm6(c.beta, c.epsilon, l, a, t, &measure, c.c_hat)?;
    let searched = search_feasible(l, a, t, &measure, c.c_hat, &default_grid())?;

    #[derive(Serialize)]
    struct ConditionsDoc<'a> {
        at_configured_constants: [&'a crate::conditions::ConditionReport; 2],
        grid_search: &'a SearchOutcome,
    }
    serde_json::to_string_pretty(&ConditionsDoc {
        at_configured_constants: [&prop2, &thm6],
        grid_search: &searched,
    })
    .map_err(|e| Error::Config(format!("serialize conditions: {e}")))
}

/// Columns: `t, y_mean, y_std, z_mean, k_mean`; `z_mean` is empty at the
/// terminal row.
pub fn per_time_csv(solution: &SolutionTriple, ensemble: &PathEnsemble) -> String {
    let m = solution.path_count() as f64;
    let n = ensemble.step_count;
    let mut out = String::from("t,y_mean,y_std,z_mean,k_mean\n");
    for i in 0..=n {
        let y_mean = solution.y.iter().map(|p| p[i]).sum::<f64>() / m;
        let y_var = solution
            .y
            .iter()
            .map(|p| (p[i] - y_mean) * (p[i] - y_mean))
            .sum::<f64>()
            / m;
        let k_mean = solution.k.iter().map(|p| p[i]).sum::<f64>() / m;
        let z_col = if i < n {
            let z_mean = solution.z.iter().map(|p| p[i]).sum::<f64>() / m;
            format!("{z_mean:.17e}")
        } else {
            String::new()
        };
        out.push_str(&format!(
            "{:.17e},{y_mean:.17e},{:.17e},{z_col},{k_mean:.17e}\n",
            ensemble.time(i),
            y_var.sqrt(),
        ));
    }
    out
}

/// Audit the structural invariants every admissible solution must satisfy.
pub fn audit_solution(
    solution: &SolutionTriple,
    ensemble: &PathEnsemble,
    obstacle: &ObstacleForm,
    terminal: &[f64],
    measure: &DelayMeasure,
    beta: f64,
) -> AuditReport {
    let n = ensemble.step_count;
    let mut checks = Vec::new();
    let mut push = |name: &str, pass: bool, detail: String| {
        checks.push(CheckResult {
            name: name.into(),
            pass,
            detail,
        });
    };

    // K starts at zero and never decreases
    let mut k_ok = true;
    let mut worst_dk: f64 = 0.0;
    for k in &solution.k {
        if k[0] != 0.0 {
            k_ok = false;
        }
        for i in 0..n {
            let dk = k[i + 1] - k[i];
            if dk < -1e-12 {
                k_ok = false;
                worst_dk = worst_dk.min(dk);
            }
        }
    }
    push(
        "compensator_monotone",
        k_ok,
        format!("K(0) = 0 and dK >= 0; worst negative increment {worst_dk:.3e}"),
    );

    // Y dominates the obstacle
    let mut dominates = true;
    let mut worst_gap: f64 = 0.0;
    if !obstacle.is_none() {
        for m in 0..solution.path_count() {
            for i in 0..=n {
                let gap = solution.y[m][i] - obstacle.value(ensemble.time(i), ensemble.w[m][i]);
                if gap < -1e-12 {
                    dominates = false;
                    worst_gap = worst_gap.min(gap);
                }
            }
        }
    }
    push(
        "obstacle_dominated",
        dominates,
        format!("Y >= S everywhere; worst violation {worst_gap:.3e}"),
    );

    // terminal value matches the data exactly
    let terminal_ok = solution
        .y
        .iter()
        .zip(terminal)
        .all(|(p, &xi)| p[n] == xi);
    push("terminal_matches", terminal_ok, "Y(T) = xi path by path".into());

    // minimality of the push: weighted Skorokhod residual
    let residual = skorokhod_residuals(solution, obstacle, ensemble, beta)
        .iter()
        .fold(0.0f64, |a, r| a.max(r.abs()));
    push(
        "skorokhod_minimal",
        residual <= 1e-12,
        format!("max weighted residual {residual:.3e}"),
    );

    // delayed energy is controlled by gamma_tilde times plain energy
    let fubini = fubini_gap(&solution.z, measure, beta, ensemble.dt);
    push(
        "delayed_energy_bound",
        fubini <= 1e-12,
        format!("worst delayed-energy excess {fubini:.3e}"),
    );

    let pass = checks.iter().all(|c| c.pass);
    AuditReport { checks, pass }
}

/// Worst excess of `Σ_i e^{βt_i} <z²>_γ(i) dt` over
/// `γ̃(β) Σ_r e^{βt_r} z_r² dt` across paths (nonpositive when the
/// exchange-of-summation bound holds).
pub fn fubini_gap(z_paths: &[Vec<f64>], measure: &DelayMeasure, beta: f64, dt: f64) -> f64 {
    let snapped = measure.snap_to_grid(dt);
    // gamma_tilde of the measure as actually applied on the grid: lags off
    // the grid are rounded, and the exact-lag value can fall short of the
    // rounded one
    let gamma: f64 = snapped
        .offsets
        .iter()
        .map(|&(d, w)| w * (beta * (-d as f64) * dt).exp())
        .sum();
    let mut worst = f64::NEG_INFINITY;
    for z in z_paths {
        let sq: Vec<f64> = z.iter().map(|v| v * v).collect();
        let lhs: f64 = (0..z.len())
            .map(|i| (beta * i as f64 * dt).exp() * snapped.aggregate(&sq, i) * dt)
            .sum();
        let rhs: f64 = sq
            .iter()
            .enumerate()
            .map(|(r, v)| (beta * r as f64 * dt).exp() * v * dt)
            .sum::<f64>()
            * gamma;
        worst = worst.max(lhs - rhs);
    }
    if worst == f64::NEG_INFINITY {
        0.0
    } else {
        worst
    }
}

/// Reference solutions a configuration can be checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OracleKind {
    /// Zero generators, no obstacle, terminal `W_T`.
    Martingale,
    /// `f = 0`, constant `g`, no obstacle, terminal `W_T`.
    BackwardIntegral,
    /// Zero generators, deterministic obstacle, constant terminal.
    SnellDeterministic,
    /// Zero generators, put obstacle on `W`, matching put terminal.
    SnellTree,
    /// Pure point-delay drift in `Y`, zero `g`, constant terminal.
    DelayOde,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleComparison {
    pub kind: OracleKind,
    pub metric: String,
    pub error: f64,
}

/// Identify which oracle covers this configuration, if any.
pub fn classify_oracle(config: &Config) -> Result<OracleKind> {
    let f = &config.generator.f;
    let g = &config.generator.g;
    let f_zero = *f == GeneratorForm::Zero;
    let g_zero = *g == GeneratorForm::Zero;
    let g_const = match g {
        GeneratorForm::TimeOnly { coeffs } => coeffs.len() == 1,
        _ => false,
    };
    match (&config.obstacle, &config.terminal) {
        (ObstacleForm::None, TerminalCondition::WT) if f_zero && g_zero => {
            Ok(OracleKind::Martingale)
        }
        (ObstacleForm::None, TerminalCondition::WT) if f_zero && g_const => {
            Ok(OracleKind::BackwardIntegral)
        }
        (ObstacleForm::Deterministic { .. }, TerminalCondition::Constant { .. })
            if f_zero && g_zero =>
        {
            Ok(OracleKind::SnellDeterministic)
        }
        (ObstacleForm::PutOnW { strike: ks }, TerminalCondition::PutOnW { strike: kt })
            if f_zero && g_zero && ks == kt =>
        {
            Ok(OracleKind::SnellTree)
        }
        (ObstacleForm::None, TerminalCondition::Constant { .. }) if g_zero => match f {
            GeneratorForm::PointDelay { b, .. } if *b == 0.0 => Ok(OracleKind::DelayOde),
            GeneratorForm::Affine { b, .. } if *b == 0.0 && config.delay_measure.atoms.len() == 1 => {
                Ok(OracleKind::DelayOde)
            }
            _ => Err(Error::Config(
                "no reference solution covers this generator form".into(),
            )),
        },
        _ => Err(Error::Config(
            "no reference solution covers this configuration".into(),
        )),
    }
}

/// Solve the configured problem and measure its error against the matching
/// reference solution.
pub fn compare_oracle(config: &Config) -> Result<OracleComparison> {
    let kind = classify_oracle(config)?;
    let output = run(config)?;
    let sol = &output.solution;
    let ens = &output.ensemble;
    let n = ens.step_count;
    let m = ens.path_count as f64;
    let t = config.ensemble.horizon;

    let (metric, error) = match kind {
        OracleKind::Martingale => {
            let (y_ref, _) = oracles::martingale_reference(ens);
            let worst = (0..=n)
                .map(|i| {
                    sol.y.iter().zip(&y_ref).map(|(y, r)| (y[i] - r[i]).powi(2)).sum::<f64>() / m
                })
                .fold(0.0f64, f64::max);
            ("max_i mean squared Y error".to_string(), worst)
        }
        OracleKind::BackwardIntegral => {
            let c = match &config.generator.g {
                GeneratorForm::TimeOnly { coeffs } => coeffs[0],
                _ => unreachable!("classified as backward integral"),
            };
            let (y_ref, _) = oracles::backward_integral_reference(ens, c);
            let mse = (0..=n)
                .map(|i| {
                    sol.y.iter().zip(&y_ref).map(|(y, r)| (y[i] - r[i]).powi(2)).sum::<f64>() / m
                })
                .sum::<f64>()
                / (n + 1) as f64;
            ("rmse over paths and times".to_string(), mse.sqrt())
        }
        OracleKind::SnellDeterministic => {
            let (coeffs, xi0) = match (&config.obstacle, &config.terminal) {
                (
                    ObstacleForm::Deterministic { coeffs },
                    TerminalCondition::Constant { value },
                ) => (coeffs.clone(), *value),
                _ => unreachable!("classified as deterministic reflection"),
            };
            let table = oracles::snell_deterministic(
                |s| coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c),
                xi0,
                t,
                n,
            );
            let worst = (0..=n)
                .map(|i| {
                    let mean = sol.y.iter().map(|y| y[i]).sum::<f64>() / m;
                    (mean - table.y[i]).abs()
                })
                .fold(0.0f64, f64::max);
            ("max_i |mean Y - reference|".to_string(), worst)
        }
        OracleKind::SnellTree => {
            let reference = oracles::snell_tree(&config.obstacle, t, 4000)?;
            (
                "relative Y(0) error vs tree".to_string(),
                (sol.y0_mean() - reference).abs() / reference.abs(),
            )
        }
        OracleKind::DelayOde => {
            let (a, lag) = match &config.generator.f {
                GeneratorForm::PointDelay { a, lag, .. } => (*a, *lag),
                GeneratorForm::Affine { a, .. } => (*a, config.delay_measure.atoms[0][0]),
                _ => unreachable!("classified as delayed drift"),
            };
            let xi0 = match &config.terminal {
                TerminalCondition::Constant { value } => *value,
                _ => unreachable!("classified as delayed drift"),
            };
            let table = oracles::delay_ode_reference(a, -lag, t, xi0, 20_000)?;
            (
                "|Y(0) - reference|".to_string(),
                (sol.y0_mean() - table.at_zero()).abs(),
            )
        }
    };
    Ok(OracleComparison { kind, metric, error })
}

/// One row of a discretization sweep.
#[derive(Debug, Clone, Serialize)]
pub struct StudyRow {
    pub steps: usize,
    pub paths: usize,
    pub seed: u64,
    pub error: f64,
    pub runtime_ms: u128,
}

/// Sweep `(steps, paths, seed)` against the configuration's oracle.
pub fn convergence_study(
    base: &Config,
    steps_list: &[usize],
    paths_list: &[usize],
    seeds: &[u64],
) -> Result<Vec<StudyRow>> {
    classify_oracle(base)?;
    let mut rows = Vec::new();
    for &steps in steps_list {
        for &paths in paths_list {
            for &seed in seeds {
                let mut config = base.clone();
                config.ensemble.steps = steps;
                config.ensemble.paths = paths;
                config.ensemble.seed = seed;
                let started = Instant::now();
                let comparison = compare_oracle(&config)?;
                rows.push(StudyRow {
                    steps,
                    paths,
                    seed,
                    error: comparison.error,
                    runtime_ms: started.elapsed().as_millis(),
                });
            }
        }
    }
    Ok(rows)
}

/// Deterministic columns of the sweep (excludes runtime, which cannot be
/// byte-reproducible).
pub fn study_errors_csv(rows: &[StudyRow]) -> String {
    let mut out = String::from("steps,paths,seed,error\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{:.17e}\n", r.steps, r.paths, r.seed, r.error));
    }
    out
}

/// Timing companion to `study_errors_csv`.
pub fn study_timings_csv(rows: &[StudyRow]) -> String {
    let mut out = String::from("steps,paths,seed,runtime_ms\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.steps, r.paths, r.seed, r.runtime_ms));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn martingale_config() -> Config {
        Config::parse(
            r#"
            [ensemble]
            paths = 2000
            steps = 10
            horizon = 1.0
            seed = 11

            [generator]
            lipschitz = 0.1
            alpha = 0.1
            f = { form = "zero" }
            g = { form = "zero" }

            [terminal]
            form = "w_t"
        "#,
        )
        .unwrap()
    }

    #[test]
    fn run_martingale_and_audit() {
        let output = run(&martingale_config()).unwrap();
        assert!(output.audit.pass, "{:?}", output.audit.failures());
        assert!(output.summary.converged);
        assert!(output.summary.y0_mean.abs() < 0.1);
        assert_eq!(output.summary.max_skorokhod_residual, 0.0);
    }

    #[test]
    fn artifacts_are_byte_deterministic() {
        let config = martingale_config();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        run_to_dir(&config, dir_a.path()).unwrap();
        run_to_dir(&config, dir_b.path()).unwrap();
        for name in ["conditions.json", "summary.json", "per_time.csv", "audit.json"] {
            let a = std::fs::read(dir_a.path().join(name)).unwrap();
            let b = std::fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
        }
    }

    #[test]
    fn classification_covers_the_registry() {
        assert_eq!(classify_oracle(&martingale_config()).unwrap(), OracleKind::Martingale);

        let mut c = martingale_config();
        c.generator.g = GeneratorForm::TimeOnly { coeffs: vec![0.5] };
        assert_eq!(classify_oracle(&c).unwrap(), OracleKind::BackwardIntegral);

        let mut c = martingale_config();
        c.obstacle = ObstacleForm::Deterministic { coeffs: vec![1.0, -1.0] };
        c.terminal = TerminalCondition::Constant { value: 0.0 };
        assert_eq!(classify_oracle(&c).unwrap(), OracleKind::SnellDeterministic);

        let mut c = martingale_config();
        c.obstacle = ObstacleForm::PutOnW { strike: 0.2 };
        c.terminal = TerminalCondition::PutOnW { strike: 0.2 };
        assert_eq!(classify_oracle(&c).unwrap(), OracleKind::SnellTree);

        let mut c = martingale_config();
        c.generator.f = GeneratorForm::PointDelay { a: 0.25, b: 0.0, c: 0.0, lag: -0.25 };
        c.generator.lipschitz = 0.0625;
        c.terminal = TerminalCondition::Constant { value: 1.0 };
        assert_eq!(classify_oracle(&c).unwrap(), OracleKind::DelayOde);

        // an affine f with a z-slope has no oracle
        let mut c = martingale_config();
        c.generator.f = GeneratorForm::Affine { a: 0.1, b: 0.1, c: 0.0 };
        c.terminal = TerminalCondition::Constant { value: 1.0 };
        let err = classify_oracle(&c).unwrap_err();
        assert_eq!(exit_code(&err), 2);
    }

    #[test]
    fn compare_oracle_martingale_is_small() {
        let comparison = compare_oracle(&martingale_config()).unwrap();
        assert_eq!(comparison.kind, OracleKind::Martingale);
        assert!(comparison.error < 0.05, "error = {}", comparison.error);
    }

    #[test]
    fn fubini_gap_nonpositive_on_random_z() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let z: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..20).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let measure = DelayMeasure::new(vec![(-0.5, 0.5), (0.0, 0.5)], 1.0).unwrap();
        assert!(fubini_gap(&z, &measure, 0.7, 0.05) <= 1e-12);
    }

    #[test]
    fn study_csvs_have_deterministic_error_columns() {
        let config = martingale_config();
        let rows_a = convergence_study(&config, &[5], &[500], &[1, 2]).unwrap();
        let rows_b = convergence_study(&config, &[5], &[500], &[1, 2]).unwrap();
        assert_eq!(study_errors_csv(&rows_a), study_errors_csv(&rows_b));
        assert_eq!(rows_a.len(), 2);
    }

    #[test]
    fn terminal_obstacle_conflict_maps_to_config_exit_code() {
        let mut config = martingale_config();
        // S(T) = 2 > xi = 0 with a constant terminal: rejected up front
        config.obstacle = ObstacleForm::Deterministic { coeffs: vec![2.0] };
        config.terminal = TerminalCondition::Constant { value: 0.0 };
        let err = run(&config).unwrap_err();
        assert_eq!(exit_code(&err), 2, "{err}");
    }
}
