use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{Prepared, Scenario, ScenarioError, ScenarioResult};
use crate::analysis::{semistability_sweep, verify, SweepReport, SweepSetup, VerificationReport};
use crate::history::{fmt_f64, DenseTrajectory};
use crate::integrator::{integrate_with_stats, IntegrationStats};
use crate::network::{validate_laplacian_structure, DEFAULT_RANK_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

pub struct RunOutcome {
    pub report: VerificationReport,
    pub trajectory: DenseTrajectory,
    pub stats: IntegrationStats,
    pub checks: Vec<Check>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Integrates the scenario, verifies the trajectory and evaluates every
/// declared expectation.
pub fn run_scenario(sc: &Scenario) -> ScenarioResult<RunOutcome> {
    let Prepared {
        sys,
        profiles,
        history,
        cfg,
        settings,
    } = sc.prepare()?;
    let (trajectory, stats) = integrate_with_stats(&sys, &profiles, &history, &cfg)?;
    let report = verify(&sys, &profiles, &trajectory, &settings)?;
    let checks = expectation_checks(sc, &report);
    Ok(RunOutcome {
        report,
        trajectory,
        stats,
        checks,
    })
}

fn expectation_checks(sc: &Scenario, r: &VerificationReport) -> Vec<Check> {
    let e = &sc.expect;
    let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), fmt_f64);
    let mut checks = Vec::new();
    if let Some(want) = e.converged {
        checks.push(Check::new(
            "converged",
            r.converged == want,
            format!("observed {} expected {want}", r.converged),
        ));
    }
    if let Some(tol) = e.alpha_tol {
        let reference = e.alpha.or(r.alpha_predicted);
        let gap = reference.zip(r.alpha_observed).map(|(a, b)| (a - b).abs());
        checks.push(Check::new(
            "alpha",
            gap.is_some_and(|g| g <= tol),
            format!(
                "observed {} reference {} gap {} tol {}",
                opt(r.alpha_observed),
                opt(reference),
                opt(gap),
                fmt_f64(tol)
            ),
        ));
    }
    if let Some(min) = e.residual_decay_min {
        checks.push(Check::new(
            "residual_decay",
            r.residual_decay.is_some_and(|d| d >= min),
            format!("factor {} min {}", opt(r.residual_decay), fmt_f64(min)),
        ));
    }
    if let Some(max) = e.conservation_drift_max {
        checks.push(Check::new(
            "conservation",
            r.conservation_drift.is_some_and(|d| d <= max),
            format!("drift {} max {}", opt(r.conservation_drift), fmt_f64(max)),
        ));
    }
    if let Some(max) = e.razumikhin_violations_max {
        let count = r.razumikhin_violations.len();
        checks.push(Check::new(
            "razumikhin",
            count <= max,
            format!("violations {count} max {max}"),
        ));
    }
    if let Some(max) = e.krasovskii_increase_max {
        checks.push(Check::new(
            "krasovskii",
            r.krasovskii_max_increase.is_some_and(|d| d <= max),
            format!("increase {} max {}", opt(r.krasovskii_max_increase), fmt_f64(max)),
        ));
    }
    checks
}

fn create(path: &Path) -> ScenarioResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| ScenarioError::io(path, e))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> ScenarioResult<()> {
    let mut w = create(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| ScenarioError::io(path, e))
}

/// Writes `trajectory.csv`, `report.txt`, `residual.csv`, `extrema.csv` and,
/// for conserved runs, `conserved.csv` under `out_dir/<name>/`.
pub fn write_outputs(sc: &Scenario, outcome: &RunOutcome, out_dir: &Path) -> ScenarioResult<PathBuf> {
    let dir = out_dir.join(&sc.name);
    fs::create_dir_all(&dir).map_err(|e| ScenarioError::io(&dir, e))?;
    let r = &outcome.report;
    write_file(&dir.join("trajectory.csv"), |w| {
        outcome.trajectory.write_csv(w, sc.integration.record_every.max(1))
    })?;
    write_file(&dir.join("residual.csv"), |w| r.write_residual_csv(w))?;
    write_file(&dir.join("extrema.csv"), |w| r.write_extrema_csv(w))?;
    if r.conserved_series.is_some() {
        write_file(&dir.join("conserved.csv"), |w| r.write_conserved_csv(w))?;
    }
    let s = &outcome.stats;
    let mut extra = vec![
        ("steps".to_string(), s.steps.to_string()),
        ("iterated_steps".to_string(), s.iterated_steps.to_string()),
        ("max_fixed_point_iterations".to_string(), s.max_iterations.to_string()),
    ];
    for c in &outcome.checks {
        extra.push((
            format!("check.{}", c.name),
            format!("{} ({})", if c.pass { "pass" } else { "fail" }, c.detail),
        ));
    }
    extra.push(("pass".to_string(), outcome.passed().to_string()));
    let text = r.to_text(&sc.name, &extra);
    write_file(&dir.join("report.txt"), |w| w.write_all(text.as_bytes()))?;
    Ok(dir)
}

/// Structural checks that need no integration.
pub fn validate_scenario(sc: &Scenario) -> ScenarioResult<Vec<Check>> {
    let profiles = sc.build_profiles()?;
    let sys = sc.build_system(&profiles)?;
    let mut checks = Vec::new();

    let report = validate_laplacian_structure(&sys.structure(), DEFAULT_RANK_TOL);
    checks.push(Check::new(
        "row_sums_zero",
        report.row_sums_zero,
        format!("max |(E+F)1| = {}", fmt_f64(report.max_row_sum)),
    ));
    checks.push(Check::new(
        "col_sums_zero",
        report.col_sums_zero,
        format!("max |(E+F)^T 1| = {}", fmt_f64(report.max_col_sum)),
    ));
    checks.push(Check::new("nonnegative_fk", report.nonnegative_fk, ""));
    checks.push(Check::new(
        "rank_is_n_minus_1",
        report.rank_is_n_minus_1,
        format!("rank {} n {}", report.rank, sys.dim()),
    ));

    for (k, p) in profiles.iter().enumerate() {
        let bound = p.bound();
        checks.push(Check::new(
            format!("delay[{}].bound", k + 1),
            bound.is_finite() && bound >= 0.0,
            format!("bound {}", fmt_f64(bound)),
        ));
        let (pass, detail) = match p.limit() {
            Ok(l) => (l >= 0.0 && l <= bound, format!("limit {}", fmt_f64(l))),
            Err(e) => (false, e.to_string()),
        };
        checks.push(Check::new(format!("delay[{}].limit", k + 1), pass, detail));
    }

    let reach = Scenario::reach(&profiles);
    let history = sc.build_history(reach)?;
    checks.push(Check::new(
        "history_coverage",
        history.span() >= reach,
        format!("history span {} delay reach {}", fmt_f64(history.span()), fmt_f64(reach)),
    ));
    Ok(checks)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusRow {
    pub name: String,
    pub alpha_predicted: Option<f64>,
    pub alpha_observed: Option<f64>,
    pub residual_decay: Option<f64>,
    pub razumikhin_violations: Option<usize>,
    pub conservation_drift: Option<f64>,
    pub passed: bool,
    /// Set when the scenario could not be run at all.
    pub error: Option<String>,
    pub numeric_failure: bool,
}

impl CorpusRow {
    pub fn gap(&self) -> Option<f64> {
        Some((self.alpha_observed? - self.alpha_predicted?).abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSummary {
    pub rows: Vec<CorpusRow>,
}

impl CorpusSummary {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let opt = |v: Option<f64>| v.map_or_else(String::new, fmt_f64);
        writeln!(
            w,
            "scenario,alpha_predicted,alpha_observed,gap,residual_decay,razumikhin_violations,conservation_drift,pass"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.name,
                opt(r.alpha_predicted),
                opt(r.alpha_observed),
                opt(r.gap()),
                opt(r.residual_decay),
                r.razumikhin_violations.map_or_else(String::new, |v| v.to_string()),
                opt(r.conservation_drift),
                r.passed
            )?;
        }
        Ok(())
    }
}

fn corpus_row(sc: &Scenario, out_dir: &Path) -> ScenarioResult<CorpusRow> {
    let outcome = match run_scenario(sc) {
        Ok(o) => o,
        Err(ScenarioError::Io { .. }) => unreachable!("runs do not write"),
        Err(e) => {
            return Ok(CorpusRow {
                name: sc.name.clone(),
                alpha_predicted: None,
                alpha_observed: None,
                residual_decay: None,
                razumikhin_violations: None,
                conservation_drift: None,
                passed: false,
                numeric_failure: matches!(e, ScenarioError::Numeric(_)),
                error: Some(e.to_string()),
            })
        }
    };
    write_outputs(sc, &outcome, out_dir)?;
    let r = &outcome.report;
    Ok(CorpusRow {
        name: sc.name.clone(),
        alpha_predicted: r.alpha_predicted,
        alpha_observed: r.alpha_observed,
        residual_decay: r.residual_decay,
        razumikhin_violations: Some(r.razumikhin_violations.len()),
        conservation_drift: r.conservation_drift,
        passed: outcome.passed(),
        error: None,
        numeric_failure: false,
    })
}

/// Runs every scenario on up to `jobs` threads, writes per-scenario outputs
/// and `summary.csv`. Rows keep the input order.
pub fn run_corpus(scenarios: &[Scenario], out_dir: &Path, jobs: usize) -> ScenarioResult<CorpusSummary> {
    fs::create_dir_all(out_dir).map_err(|e| ScenarioError::io(out_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ScenarioError::invalid("jobs", e))?;
    let rows = pool.install(|| {
        scenarios
            .par_iter()
            .map(|sc| corpus_row(sc, out_dir))
            .collect::<ScenarioResult<Vec<_>>>()
    })?;
    let summary = CorpusSummary { rows };
    let path = out_dir.join("summary.csv");
    write_file(&path, |w| summary.write_csv(w))?;
    Ok(summary)
}

pub fn sweep_setup(sc: &Scenario) -> ScenarioResult<SweepSetup> {
    let p = sc.prepare()?;
    Ok(SweepSetup {
        history_span: p.history.span(),
        window: p.settings.window,
        convergence_tol: p.settings.convergence_tol,
        sys: p.sys,
        profiles: p.profiles,
        cfg: p.cfg,
    })
}

/// Writes `sweep.csv` (one row per run) and `sweep_summary.txt` under
/// `out_dir/<name>/`.
pub fn write_sweep(name: &str, report: &SweepReport, out_dir: &Path) -> ScenarioResult<PathBuf> {
    let dir = out_dir.join(name);
    fs::create_dir_all(&dir).map_err(|e| ScenarioError::io(&dir, e))?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, fmt_f64);
    let n = report.runs.first().map_or(0, |r| r.history.len());
    write_file(&dir.join("sweep.csv"), |w| {
        write!(w, "run")?;
        for i in 1..=n {
            write!(w, ",phi_{i}")?;
        }
        writeln!(w, ",converged,alpha_observed,alpha_predicted,excursion_ratio,error")?;
        for r in &report.runs {
            write!(w, "{}", r.index)?;
            for v in &r.history {
                write!(w, ",{}", fmt_f64(*v))?;
            }
            writeln!(
                w,
                ",{},{},{},{},{}",
                r.converged,
                opt(r.alpha_observed),
                opt(r.alpha_predicted),
                opt(r.excursion_ratio),
                r.error.as_deref().unwrap_or("").replace([',', '\n'], ";")
            )?;
        }
        Ok(())
    })?;
    let max_gap = report
        .runs
        .iter()
        .filter_map(|r| Some((r.alpha_observed? - r.alpha_predicted?).abs()))
        .reduce(f64::max);
    let text = format!(
        "runs: {}\nconverged: {}\nfailed: {}\ndistinct_limits: {}\nlimit_min: {}\nlimit_max: {}\nmax_prediction_gap: {}\nmax_excursion_ratio: {}\nnote: the excursion ratio is a numerical proxy for Lyapunov stability\n",
        report.runs.len(),
        report.converged_count,
        report.failed_count,
        report.distinct_limits,
        opt(report.limit_min),
        opt(report.limit_max),
        opt(max_gap),
        opt(report.max_excursion_ratio),
    );
    write_file(&dir.join("sweep_summary.txt"), |w| w.write_all(text.as_bytes()))?;
    Ok(dir)
}

/// Convenience wrapper used by the command-line front end.
pub fn sweep_scenario(sc: &Scenario, count: usize, amplitude: f64, seed: u64) -> ScenarioResult<SweepReport> {
    let setup = sweep_setup(sc)?;
    semistability_sweep(&setup, count, amplitude, seed).map_err(|e| match e {
        crate::Error::InvalidConfig(m) => ScenarioError::invalid("sweep", m),
        other => ScenarioError::Numeric(other),
    })
}
