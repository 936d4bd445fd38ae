//! Fixed-step classical Runge-Kutta integration of retarded delay
//! equations with cubic Hermite dense output.
//!
//! Delays may be shorter than the step, or vanish. When a stage needs
//! `x(s - tau(s))` inside the step being computed, the value comes from a
//! provisional Hermite interpolant over `[t, t + dt]` and the whole step is
//! iterated to a fixed point.
//!
//! With constant delays, kinks in the history (and the join at `t0`) reappear
//! in the solution at shifted times. Steps that contain one of the first
//! three generations of these points are split there, which keeps the
//! method fourth order for piecewise-smooth histories.

use crate::delays::DelayProfile;
use crate::error::{Error, Result};
use crate::history::{hermite_into, DenseTrajectory, HistoryFunction};
use crate::systems::SystemRhs;

pub const DEFAULT_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationConfig {
    pub t0: f64,
    pub step: f64,
    pub t_end: f64,
    pub max_fixed_point_iters: usize,
    /// Relative to `1 + ||x||_inf`.
    pub fixed_point_tol: f64,
    /// Node thinning for exported trajectories; integration keeps every node.
    pub record_every: usize,
}

impl IntegrationConfig {
    pub fn new(step: f64, t_end: f64) -> Self {
        Self {
            t0: 0.0,
            step,
            t_end,
            max_fixed_point_iters: 10,
            fixed_point_tol: 1e-12,
            record_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.step.is_finite() && self.step > 0.0) {
            return bad(format!("step must be positive, got {}", self.step));
        }
        if !(self.t0.is_finite() && self.t_end.is_finite() && self.t_end > self.t0) {
            return bad(format!("t_end ({}) must exceed t0 ({})", self.t_end, self.t0));
        }
        if self.step > self.t_end - self.t0 {
            return bad(format!("step {} exceeds the horizon", self.step));
        }
        if self.max_fixed_point_iters == 0 {
            return bad("max_fixed_point_iters must be at least 1".into());
        }
        if !(self.fixed_point_tol > 0.0) {
            return bad("fixed_point_tol must be positive".into());
        }
        Ok(())
    }

    /// Node times `t0 + i*step`, with the last step shortened to land on
    /// `t_end` exactly.
    pub fn node_count(&self) -> usize {
        let ratio = (self.t_end - self.t0) / self.step;
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
            nearest as usize
        } else {
            ratio.ceil() as usize
        }
    }

    pub fn node_time(&self, i: usize, count: usize) -> f64 {
        if i == count {
            self.t_end
        } else {
            self.t0 + i as f64 * self.step
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntegrationStats {
    pub steps: usize,
    /// Steps in which some delayed argument fell inside the step.
    pub iterated_steps: usize,
    pub max_iterations: usize,
    pub total_iterations: usize,
    /// Extra nodes inserted at propagated breakpoints.
    pub split_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub x: Vec<f64>,
    pub d: Vec<f64>,
    pub iterations: usize,
}

/// Scratch space for one integration.
struct Stepper<'a> {
    sys: &'a SystemRhs,
    profiles: &'a [DelayProfile],
    n: usize,
    max_iters: usize,
    tol: f64,
    delayed: Vec<f64>,
    y: Vec<f64>,
    k: [Vec<f64>; 4],
}

impl<'a> Stepper<'a> {
    fn new(sys: &'a SystemRhs, profiles: &'a [DelayProfile], cfg: &IntegrationConfig) -> Self {
        let n = sys.dim();
        Self {
            sys,
            profiles,
            n,
            max_iters: cfg.max_fixed_point_iters,
            tol: cfg.fixed_point_tol,
            delayed: vec![0.0; n * profiles.len()],
            y: vec![0.0; n],
            k: std::array::from_fn(|_| vec![0.0; n]),
        }
    }

    /// Fills `self.delayed` with `x(s - tau_k(s))`. Arguments at or before
    /// `t` are read from `traj`; later ones from the provisional segment.
    /// Returns whether any argument fell inside the step.
    fn gather(
        &mut self,
        traj: &DenseTrajectory,
        s: f64,
        t: f64,
        dt: f64,
        provisional: (&[f64], &[f64]),
    ) -> Result<bool> {
        let n = self.n;
        let mut entered = false;
        for (k, prof) in self.profiles.iter().enumerate() {
            let q = s - prof.value(s);
            let out = &mut self.delayed[k * n..(k + 1) * n];
            if q <= t {
                traj.evaluate_into(q, out)?;
            } else {
                entered = true;
                let last = traj.len() - 1;
                let d_t = traj.derivative(last).ok_or(Error::MissingDerivative)?;
                hermite_into(
                    ((q - t) / dt).min(1.0),
                    dt,
                    traj.state(last),
                    d_t,
                    provisional.0,
                    provisional.1,
                    out,
                );
            }
        }
        Ok(entered)
    }

    fn eval_stage(&mut self, stage: usize) {
        let mut k = std::mem::take(&mut self.k[stage]);
        self.sys.rhs_into(&self.y, &self.delayed, &mut k);
        self.k[stage] = k;
    }

    fn initial_derivative(&mut self, traj: &DenseTrajectory) -> Result<Vec<f64>> {
        let t0 = traj.t0();
        let x0 = traj.state(0).to_vec();
        let n = self.n;
        for (k, prof) in self.profiles.iter().enumerate() {
            traj.evaluate_into(t0 - prof.value(t0), &mut self.delayed[k * n..(k + 1) * n])?;
        }
        let mut d = vec![0.0; n];
        self.sys.rhs_into(&x0, &self.delayed, &mut d);
        Ok(d)
    }

    fn step(&mut self, traj: &DenseTrajectory, dt: f64) -> Result<StepOutcome> {
        let n = self.n;
        let last = traj.len() - 1;
        let t = traj.times()[last];
        let x_t = traj.state(last).to_vec();
        let d_t = traj.derivative(last).ok_or(Error::MissingDerivative)?.to_vec();

        // Euler predictor for the provisional end point.
        let mut prov_x: Vec<f64> = x_t.iter().zip(&d_t).map(|(x, d)| x + dt * d).collect();
        let mut prov_d = d_t.clone();
        let mut x_new = vec![0.0; n];
        let mut d_new = vec![0.0; n];
        let (t_half, t_full) = (t + 0.5 * dt, t + dt);

        for iteration in 1..=self.max_iters {
            self.k[0].copy_from_slice(&d_t);

            let mut entered = self.gather(traj, t_half, t, dt, (&prov_x, &prov_d))?;
            for (stage, scale) in [(1, 0.5), (2, 0.5)] {
                for i in 0..n {
                    self.y[i] = x_t[i] + scale * dt * self.k[stage - 1][i];
                }
                self.eval_stage(stage);
            }

            let end_entered = self.gather(traj, t_full, t, dt, (&prov_x, &prov_d))?;
            entered |= end_entered;
            for i in 0..n {
                self.y[i] = x_t[i] + dt * self.k[2][i];
            }
            self.eval_stage(3);

            for i in 0..n {
                x_new[i] = x_t[i]
                    + dt / 6.0 * (self.k[0][i] + 2.0 * self.k[1][i] + 2.0 * self.k[2][i] + self.k[3][i]);
            }
            if end_entered {
                self.gather(traj, t_full, t, dt, (&x_new, &prov_d))?;
            }
            self.sys.rhs_into(&x_new, &self.delayed, &mut d_new);

            if !entered {
                return Ok(StepOutcome {
                    x: x_new,
                    d: d_new,
                    iterations: iteration,
                });
            }
            let mut change = 0.0f64;
            let mut scale = 0.0f64;
            for i in 0..n {
                change = change
                    .max((x_new[i] - prov_x[i]).abs())
                    .max(dt * (d_new[i] - prov_d[i]).abs());
                scale = scale.max(x_new[i].abs());
            }
            prov_x.copy_from_slice(&x_new);
            prov_d.copy_from_slice(&d_new);
            if change <= self.tol * (1.0 + scale) {
                return Ok(StepOutcome {
                    x: x_new,
                    d: d_new,
                    iterations: iteration,
                });
            }
        }
        Err(Error::NonconvergentStep { step: 0, t })
    }
}

const BREAKPOINT_GENERATIONS: usize = 3;

/// Times in `(t0, t_end)` where the solution may lose smoothness because a
/// constant delay maps a history kink, or an earlier such point, onto them.
pub fn propagated_breakpoints(
    profiles: &[DelayProfile],
    history: &HistoryFunction,
    t0: f64,
    t_end: f64,
) -> Vec<f64> {
    let mut delays: Vec<f64> = profiles
        .iter()
        .filter(|p| p.is_constant())
        .map(|p| p.value(t0))
        .filter(|&h| h > 0.0)
        .collect();
    delays.sort_by(f64::total_cmp);
    delays.dedup();
    let span = history.span();
    let mut sources: Vec<f64> = history
        .breakpoints()
        .into_iter()
        .filter(|&th| th > -span)
        .map(|th| t0 + th)
        .collect();
    let mut out = Vec::new();
    for _ in 0..BREAKPOINT_GENERATIONS {
        let mut next: Vec<f64> = sources
            .iter()
            .flat_map(|&b| delays.iter().map(move |&h| b + h))
            .filter(|&t| t > t0 && t < t_end)
            .collect();
        next.sort_by(f64::total_cmp);
        next.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
        out.extend_from_slice(&next);
        sources = next;
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    out
}

fn check_inputs(sys: &SystemRhs, profiles: &[DelayProfile], traj: &DenseTrajectory) -> Result<()> {
    if profiles.len() != sys.m() {
        return Err(Error::DimensionMismatch {
            expected: sys.m(),
            got: profiles.len(),
        });
    }
    if traj.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: traj.dim(),
        });
    }
    Ok(())
}

/// Advances `traj` by one step of size `dt` from its last node. Fills the
/// initial derivative slot if it is still unset.
pub fn step_rk4_dde(
    sys: &SystemRhs,
    profiles: &[DelayProfile],
    traj: &mut DenseTrajectory,
    dt: f64,
    cfg: &IntegrationConfig,
) -> Result<StepOutcome> {
    check_inputs(sys, profiles, traj)?;
    let mut stepper = Stepper::new(sys, profiles, cfg);
    if traj.derivative(traj.len() - 1).is_none() {
        let d0 = stepper.initial_derivative(traj)?;
        traj.set_initial_derivative(&d0)?;
    }
    stepper.step(traj, dt)
}

pub fn integrate(
    sys: &SystemRhs,
    profiles: &[DelayProfile],
    history: &HistoryFunction,
    cfg: &IntegrationConfig,
) -> Result<DenseTrajectory> {
    integrate_with_stats(sys, profiles, history, cfg).map(|(traj, _)| traj)
}

pub fn integrate_with_stats(
    sys: &SystemRhs,
    profiles: &[DelayProfile],
    history: &HistoryFunction,
    cfg: &IntegrationConfig,
) -> Result<(DenseTrajectory, IntegrationStats)> {
    cfg.validate()?;
    let reach = profiles.iter().map(DelayProfile::bound).fold(0.0, f64::max);
    if history.span() < reach {
        return Err(Error::InvalidHistory(format!(
            "history covers [-{}, 0] but delays reach back {reach}",
            history.span()
        )));
    }
    let mut traj = DenseTrajectory::new(history.clone(), cfg.t0, sys.dim())?;
    check_inputs(sys, profiles, &traj)?;

    let mut stepper = Stepper::new(sys, profiles, cfg);
    let d0 = stepper.initial_derivative(&traj)?;
    traj.set_initial_derivative(&d0)?;

    let count = cfg.node_count();
    let breakpoints = propagated_breakpoints(profiles, history, cfg.t0, cfg.t_end);
    // breakpoints this close to a grid node are treated as on it
    let snap = 1e-6 * cfg.step;
    let mut pending = breakpoints.iter().copied().peekable();
    let mut stats = IntegrationStats::default();
    for i in 1..=count {
        let t_next = cfg.node_time(i, count);
        loop {
            let t = traj.t_last();
            while pending.next_if(|&b| b <= t + snap).is_some() {}
            let target = match pending.peek() {
                Some(&b) if b < t_next - snap => {
                    stats.split_steps += 1;
                    b
                }
                _ => t_next,
            };
            let out = stepper.step(&traj, target - t).map_err(|e| match e {
                Error::NonconvergentStep { t, .. } => Error::NonconvergentStep { step: i, t },
                other => other,
            })?;
            stats.steps += 1;
            stats.total_iterations += out.iterations;
            stats.max_iterations = stats.max_iterations.max(out.iterations);
            if out.iterations > 1 {
                stats.iterated_steps += 1;
            }
            if target == t_next {
                traj.append_step(target, &out.x, &out.d)?;
                break;
            }
            traj.append_inner_step(target, &out.x, &out.d)?;
        }
    }
    Ok((traj, stats))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderEstimate {
    pub slope: f64,
    /// `(step, sup-norm error at the probe time)` per run.
    pub errors: Vec<(f64, f64)>,
}

/// Least-squares slope of `log(error)` against `log(step)`, with errors
/// measured at `t_probe` against a run at `min(steps) / 20`.
pub fn observed_order(
    sys: &SystemRhs,
    profiles: &[DelayProfile],
    history: &HistoryFunction,
    t_probe: f64,
    steps: &[f64],
    template: &IntegrationConfig,
) -> Result<OrderEstimate> {
    if steps.len() < 3 {
        return Err(Error::InvalidConfig("order study needs at least 3 step sizes".into()));
    }
    let horizon = t_probe - template.t0;
    for &dt in steps {
        let ratio = horizon / dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidConfig(format!(
                "step {dt} does not divide the probe horizon {horizon}"
            )));
        }
    }
    let run = |dt: f64| -> Result<Vec<f64>> {
        let cfg = IntegrationConfig {
            step: dt,
            t_end: t_probe,
            ..template.clone()
        };
        let traj = integrate(sys, profiles, history, &cfg)?;
        Ok(traj.last_state().to_vec())
    };
    let min_step = steps.iter().copied().fold(f64::INFINITY, f64::min);
    let reference = run(min_step / 20.0)?;
    let mut errors = Vec::with_capacity(steps.len());
    for &dt in steps {
        let x = run(dt)?;
        let err = x
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        errors.push((dt, err));
    }
    if errors.iter().any(|&(_, e)| !(e > 0.0)) {
        return Err(Error::InvalidConfig(
            "order study error vanished; cannot take logarithms".into(),
        ));
    }
    let pts: Vec<(f64, f64)> = errors.iter().map(|&(h, e)| (h.ln(), e.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(OrderEstimate {
        slope: sxy / sxx,
        errors,
    })
}
