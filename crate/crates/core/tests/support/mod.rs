//! Reference implementations that share no code path with the integrator
//! or the dense-output machinery.

#![allow(dead_code)]

use semistab_core::{DelayProfile, HistoryFunction, SystemRhs};

/// Explicit Euler on a uniform grid with its own linear interpolation of
/// past values. Delayed arguments inside the current step use the current
/// state. Returns the state at every grid point `i * dt`.
pub struct EulerRun {
    pub dt: f64,
    pub states: Vec<Vec<f64>>,
    history: HistoryFunction,
}

impl EulerRun {
    pub fn at(&self, s: f64) -> Vec<f64> {
        if s < 0.0 {
            return self.history.eval(s).unwrap();
        }
        let pos = s / self.dt;
        let i = pos.floor() as usize;
        if i + 1 >= self.states.len() {
            return self.states.last().unwrap().clone();
        }
        let w = pos - i as f64;
        self.states[i]
            .iter()
            .zip(&self.states[i + 1])
            .map(|(a, b)| a + w * (b - a))
            .collect()
    }
}

pub fn euler(sys: &SystemRhs, profiles: &[DelayProfile], history: &HistoryFunction, dt: f64, t_end: f64) -> EulerRun {
    let steps = (t_end / dt).round() as usize;
    let mut run = EulerRun {
        dt,
        states: Vec::with_capacity(steps + 1),
        history: history.clone(),
    };
    run.states.push(history.eval(0.0).unwrap());
    for i in 0..steps {
        let t = i as f64 * dt;
        let x = run.states[i].clone();
        let delayed: Vec<Vec<f64>> = profiles
            .iter()
            .map(|p| {
                let s = t - p.value(t);
                if s >= t { x.clone() } else { run.at(s) }
            })
            .collect();
        let d = sys.rhs_eval(&x, &delayed).unwrap();
        run.states.push(x.iter().zip(&d).map(|(a, b)| a + dt * b).collect());
    }
    run
}

/// Plain bisection for an increasing function on `[lo, hi]`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    assert!(f(lo) < 0.0 && f(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
