//! Pointwise checks run against a computed trajectory: the limiting
//! residual, the windowed max/min (Razumikhin) certificate, the linear
//! first integral and the Krasovskii functional.

use std::collections::VecDeque;

use crate::delays::DelayProfile;
use crate::error::{Error, Result};
use crate::history::DenseTrajectory;
use crate::matrix::Matrix;
use crate::systems::SystemRhs;

use super::quadrature::integrate_trajectory;

pub const DEFAULT_RAZUMIKHIN_SLACK: f64 = 1e-9;

/// `||sum_k g_k(x(t - tau_k(t))) - g_k(x(t - h_k))||_2`.
pub fn limiting_residual(
    traj: &DenseTrajectory,
    sys: &SystemRhs,
    profiles: &[DelayProfile],
    delays: &[f64],
    t: f64,
) -> Result<f64> {
    if profiles.len() != sys.m() || delays.len() != sys.m() {
        return Err(Error::DimensionMismatch {
            expected: sys.m(),
            got: profiles.len().min(delays.len()),
        });
    }
    let n = traj.dim();
    let mut acc = vec![0.0; n];
    let mut neg = vec![0.0; n];
    let mut y = vec![0.0; n];
    for (k, (prof, &h)) in profiles.iter().zip(delays).enumerate() {
        traj.evaluate_into(t - prof.value(t), &mut y)?;
        sys.add_g_into(k, &y, &mut acc);
        traj.evaluate_into(t - h, &mut y)?;
        sys.add_g_into(k, &y, &mut neg);
    }
    Ok(acc.iter().zip(&neg).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
}

/// Windowed extrema at one node time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowExtrema {
    pub t: f64,
    pub max: f64,
    pub min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub t: f64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GridPoint {
    pub t: f64,
    pub max: f64,
    pub min: f64,
    pub mean: f64,
}

impl GridPoint {
    fn new(t: f64, x: &[f64]) -> Self {
        Self {
            t,
            max: x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min: x.iter().copied().fold(f64::INFINITY, f64::min),
            mean: x.iter().sum::<f64>() / x.len() as f64,
        }
    }
}

/// Samples covering `[t0 - window, t_last]`: the history at the first
/// step's spacing (plus its breakpoints), then every node.
pub(crate) fn extended_grid(traj: &DenseTrajectory, window: f64) -> Vec<GridPoint> {
    let t0 = traj.t0();
    let reach = window.min(traj.history().span());
    let spacing = if traj.len() > 1 {
        traj.times()[1] - t0
    } else {
        reach.max(f64::MIN_POSITIVE)
    };
    let mut pts: Vec<f64> = Vec::new();
    if reach > 0.0 {
        let count = (reach / spacing).ceil() as usize;
        pts.extend((0..count).map(|j| t0 - reach + j as f64 * spacing).filter(|&s| s < t0));
        pts.extend(
            traj.history()
                .breakpoints()
                .into_iter()
                .map(|th| th + t0)
                .filter(|&s| s >= t0 - reach && s < t0),
        );
        pts.sort_by(f64::total_cmp);
        pts.dedup();
    }
    let mut grid: Vec<GridPoint> = pts
        .into_iter()
        .map(|s| GridPoint::new(s, &traj.evaluate(s).expect("history sample inside domain")))
        .collect();
    grid.extend((0..traj.len()).map(|i| GridPoint::new(traj.times()[i], traj.state(i))));
    grid
}

/// Monotone-deque sliding maximum over a window whose ends only advance.
pub(crate) struct SlidingMax {
    deque: VecDeque<(usize, f64)>,
}

impl SlidingMax {
    pub(crate) fn new() -> Self {
        Self {
            deque: VecDeque::new(),
        }
    }

    pub(crate) fn push(&mut self, idx: usize, v: f64) {
        while self.deque.back().is_some_and(|&(_, b)| b <= v) {
            self.deque.pop_back();
        }
        self.deque.push_back((idx, v));
    }

    pub(crate) fn expire_before(&mut self, idx: usize) {
        while self.deque.front().is_some_and(|&(i, _)| i < idx) {
            self.deque.pop_front();
        }
    }

    pub(crate) fn max(&self) -> f64 {
        self.deque.front().map_or(f64::NEG_INFINITY, |&(_, v)| v)
    }
}

/// `M(t) = max_{s in [t-window, t]} max_i x_i(s)` and the matching minimum,
/// at every node.
pub fn windowed_extrema(traj: &DenseTrajectory, window: f64) -> Vec<WindowExtrema> {
    let grid = extended_grid(traj, window);
    let first_node = grid.len() - traj.len();
    let slack = 1e-12 * window.max(1.0);
    let mut hi = SlidingMax::new();
    let mut lo = SlidingMax::new();
    let mut left = 0;
    let mut out = Vec::with_capacity(traj.len());
    for (j, p) in grid.iter().enumerate() {
        hi.push(j, p.max);
        lo.push(j, -p.min);
        if j < first_node {
            continue;
        }
        let t = p.t;
        while grid[left].t < t - window - slack {
            left += 1;
        }
        hi.expire_before(left);
        lo.expire_before(left);
        out.push(WindowExtrema {
            t,
            max: hi.max(),
            min: -lo.max(),
        });
    }
    out
}

/// Flags every node where the windowed maximum rises or the windowed
/// minimum falls by more than `slack * (1 + ||x||_inf)`.
pub fn razumikhin_certificate(traj: &DenseTrajectory, window: f64, slack: f64) -> Vec<Violation> {
    certificate_from_extrema(&windowed_extrema(traj, window), slack)
}

pub fn certificate_from_extrema(extrema: &[WindowExtrema], slack: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    for w in extrema.windows(2) {
        let (prev, cur) = (w[0], w[1]);
        let allowance = slack * (1.0 + cur.max.abs().max(cur.min.abs()));
        let rise = cur.max - prev.max;
        let fall = prev.min - cur.min;
        let worst = rise.max(fall);
        if worst > allowance {
            out.push(Violation {
                t: cur.t,
                magnitude: worst,
            });
        }
    }
    out
}

/// `Q(t) = 1ᵀx(t) + sum_k int_{t-h_k}^t 1ᵀF_k x(s) ds`, constant along
/// solutions of the constant-delay linear protocol when `1ᵀ(E+F) = 0`.
pub fn conserved_quantity(
    traj: &DenseTrajectory,
    f: &[Matrix],
    delays: &[f64],
    t: f64,
) -> Result<f64> {
    if f.len() != delays.len() {
        return Err(Error::DimensionMismatch {
            expected: f.len(),
            got: delays.len(),
        });
    }
    let mut q: f64 = traj.evaluate(t)?.iter().sum();
    for (fk, &h) in f.iter().zip(delays) {
        if t - h < traj.t_min() {
            return Err(Error::OutOfRange {
                t: t - h,
                lo: traj.t_min(),
                hi: traj.t_last(),
            });
        }
        let w = fk.col_sums();
        q += integrate_trajectory(traj, t - h, t, &|x| w.iter().zip(x).map(|(a, b)| a * b).sum())?;
    }
    Ok(q)
}

/// `V(x_t) = ||x(t)||^2 + int_{t-h}^t ||x(s)||^2 ds`.
pub fn krasovskii_functional(traj: &DenseTrajectory, h: f64, t: f64) -> Result<f64> {
    let sq = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    let now = sq(&traj.evaluate(t)?);
    Ok(now + integrate_trajectory(traj, t - h, t, &sq)?)
}
