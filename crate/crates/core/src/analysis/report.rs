use std::fmt::Write as _;
use std::io::{self, Write};

use crate::delays::DelayProfile;
use crate::error::Result;
use crate::history::{fmt_f64, DenseTrajectory};
use crate::systems::{SystemKind, SystemRhs};

use super::certificates::{
    certificate_from_extrema, conserved_quantity, krasovskii_functional, limiting_residual,
    windowed_extrema, Violation, WindowExtrema,
};
use super::consensus::predict_alpha;
use super::convergence::convergence_check;

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationSettings {
    pub convergence_tol: f64,
    pub razumikhin_slack: f64,
    /// Window for the convergence detector and the windowed extrema;
    /// normally the largest delay bound.
    pub window: f64,
    /// Approximate number of points kept in each exported series.
    pub series_points: usize,
}

/// Everything checked on one run.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub alpha_predicted: Option<f64>,
    pub alpha_observed: Option<f64>,
    pub converged: bool,
    pub convergence_time: Option<f64>,
    /// `(t, ||X(t)||)`.
    pub residual_series: Vec<(f64, f64)>,
    /// First-tenth mean over last-tenth mean of the residual series, for
    /// runs with at least one non-constant delay.
    pub residual_decay: Option<f64>,
    pub razumikhin_violations: Vec<Violation>,
    pub extrema_series: Vec<WindowExtrema>,
    /// `(t, Q(t))` for constant-delay linear runs.
    pub conserved_series: Option<Vec<(f64, f64)>>,
    /// `max_t |Q(t) - Q(t0)| / |Q(t0)|`.
    pub conservation_drift: Option<f64>,
    /// Largest rise of `x^2 + int x^2` between samples, scalar constant-delay runs.
    pub krasovskii_max_increase: Option<f64>,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn alpha_gap(&self) -> Option<f64> {
        Some((self.alpha_observed? - self.alpha_predicted?).abs())
    }

    /// One `key: value` line per metric.
    pub fn to_text(&self, name: &str, extra: &[(String, String)]) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), fmt_f64);
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k}: {v}");
        };
        line("scenario", name.to_string());
        line("alpha_predicted", opt(self.alpha_predicted));
        line("alpha_observed", opt(self.alpha_observed));
        line("alpha_gap", opt(self.alpha_gap()));
        line("converged", self.converged.to_string());
        line("convergence_time", opt(self.convergence_time));
        line("residual_decay", opt(self.residual_decay));
        line(
            "residual_final",
            opt(self.residual_series.last().map(|p| p.1)),
        );
        line(
            "razumikhin_violations",
            self.razumikhin_violations.len().to_string(),
        );
        line(
            "razumikhin_max_violation",
            opt(self.razumikhin_violations.iter().map(|v| v.magnitude).reduce(f64::max)),
        );
        line("conservation_drift", opt(self.conservation_drift));
        line("krasovskii_max_increase", opt(self.krasovskii_max_increase));
        for (k, v) in extra {
            line(k, v.clone());
        }
        for note in &self.notes {
            line("note", note.clone());
        }
        s
    }

    pub fn write_residual_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,residual")?;
        for (t, r) in &self.residual_series {
            writeln!(w, "{},{}", fmt_f64(*t), fmt_f64(*r))?;
        }
        Ok(())
    }

    pub fn write_extrema_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,window_max,window_min")?;
        for e in &self.extrema_series {
            writeln!(w, "{},{},{}", fmt_f64(e.t), fmt_f64(e.max), fmt_f64(e.min))?;
        }
        Ok(())
    }

    pub fn write_conserved_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,q")?;
        for (t, q) in self.conserved_series.iter().flatten() {
            writeln!(w, "{},{}", fmt_f64(*t), fmt_f64(*q))?;
        }
        Ok(())
    }
}

fn sample_indices(len: usize, points: usize) -> Vec<usize> {
    let stride = ((len.saturating_sub(1)) / points.max(1)).max(1);
    let mut idx: Vec<usize> = (0..len).step_by(stride).collect();
    if *idx.last().unwrap() != len - 1 {
        idx.push(len - 1);
    }
    idx
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = v.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Runs every applicable check on a finished trajectory.
pub fn verify(
    sys: &SystemRhs,
    profiles: &[DelayProfile],
    traj: &DenseTrajectory,
    settings: &VerificationSettings,
) -> Result<VerificationReport> {
    let mut notes = Vec::new();
    let limits = profiles.iter().map(DelayProfile::limit).collect::<Result<Vec<_>>>()?;
    let alpha_predicted = match predict_alpha(sys, profiles, traj.history()) {
        Ok(a) => Some(a),
        Err(e) => {
            notes.push(format!("no consensus prediction: {e}"));
            None
        }
    };
    let all_constant = profiles.iter().all(DelayProfile::is_constant);
    if !all_constant {
        notes.push(
            "prediction uses limiting delays; with time-varying delays the gap is measured, not bounded"
                .into(),
        );
    }

    let conv = convergence_check(traj, settings.convergence_tol, settings.window);
    let samples = sample_indices(traj.len(), settings.series_points);
    let times = traj.times();

    let mut residual_series = Vec::with_capacity(samples.len());
    for &i in &samples {
        let t = times[i];
        residual_series.push((t, limiting_residual(traj, sys, profiles, &limits, t)?));
    }
    let residual_decay = if all_constant {
        None
    } else {
        let (t0, t_end) = (traj.t0(), traj.t_last());
        let tenth = 0.1 * (t_end - t0);
        let first = mean(residual_series.iter().filter(|p| p.0 <= t0 + tenth).map(|p| p.1));
        let last = mean(residual_series.iter().filter(|p| p.0 >= t_end - tenth).map(|p| p.1));
        match (first, last) {
            (Some(a), Some(b)) if b > 0.0 => Some(a / b),
            (Some(a), Some(_)) if a > 0.0 => Some(f64::INFINITY),
            _ => None,
        }
    };

    let extrema = windowed_extrema(traj, settings.window);
    let razumikhin_violations = certificate_from_extrema(&extrema, settings.razumikhin_slack);
    let extrema_series = samples.iter().map(|&i| extrema[i]).collect();

    let (mut conserved_series, mut conservation_drift) = (None, None);
    if let (true, Some((_, f))) = (all_constant, sys.linear_parts()) {
        let mut series = Vec::with_capacity(samples.len());
        for &i in &samples {
            series.push((times[i], conserved_quantity(traj, &f, &limits, times[i])?));
        }
        let q0 = series[0].1;
        let scale = if q0.abs() > f64::MIN_POSITIVE { q0.abs() } else { 1.0 };
        conservation_drift = Some(series.iter().map(|p| (p.1 - q0).abs()).fold(0.0, f64::max) / scale);
        conserved_series = Some(series);
    }

    let mut krasovskii_max_increase = None;
    if let (true, SystemKind::ScalarNeutral { m: 1 }) = (all_constant, sys.kind()) {
        let h = limits[0];
        let mut prev: Option<f64> = None;
        let mut worst = 0.0f64;
        for &i in &samples {
            let v = krasovskii_functional(traj, h, times[i])?;
            if let Some(p) = prev {
                worst = worst.max(v - p);
            }
            prev = Some(v);
        }
        krasovskii_max_increase = Some(worst);
    }

    Ok(VerificationReport {
        alpha_predicted,
        alpha_observed: conv.alpha_observed,
        converged: conv.converged,
        convergence_time: conv.convergence_time,
        residual_series,
        residual_decay,
        razumikhin_violations,
        extrema_series,
        conserved_series,
        conservation_drift,
        krasovskii_max_increase,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_keeps_ends() {
        assert_eq!(sample_indices(1, 10), vec![0]);
        assert_eq!(sample_indices(5, 10), vec![0, 1, 2, 3, 4]);
        let idx = sample_indices(1001, 100);
        assert_eq!(idx.len(), 101);
        assert_eq!(*idx.last().unwrap(), 1000);
        let idx = sample_indices(1004, 100);
        assert_eq!(*idx.last().unwrap(), 1003);
    }

    #[test]
    fn text_has_one_metric_per_line() {
        let report = VerificationReport {
            alpha_predicted: Some(0.75),
            alpha_observed: Some(0.7501),
            converged: true,
            convergence_time: Some(12.0),
            residual_series: vec![],
            residual_decay: None,
            razumikhin_violations: vec![],
            extrema_series: vec![],
            conserved_series: None,
            conservation_drift: None,
            krasovskii_max_increase: None,
            notes: vec!["hello".into()],
        };
        let text = report.to_text("demo", &[("check.alpha".into(), "pass".into())]);
        assert!(text.lines().all(|l| l.contains(": ")));
        assert!(text.contains("converged: true\n"));
        assert!(text.contains("residual_decay: none\n"));
        assert!(text.contains("check.alpha: pass\n"));
        assert!((report.alpha_gap().unwrap() - 1e-4).abs() < 1e-12);
    }
}
