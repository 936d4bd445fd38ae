use crate::history::{DenseTrajectory, HistoryFunction};

const MAX_DOUBLINGS: u32 = 20;

/// Composite Simpson on `[a, b]`, doubling the panel count until two
/// successive estimates agree to `tol` (relative to `max(1, |I|)`).
pub(crate) fn simpson_adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let mut panels = 2usize;
    let mut odds = f(0.5 * (a + b));
    let mut evens = 0.0;
    let mut prev = (b - a) / 6.0 * (fa + fb + 4.0 * odds);
    for _ in 0..MAX_DOUBLINGS {
        panels *= 2;
        let h = (b - a) / panels as f64;
        evens += odds;
        odds = (0..panels / 2).map(|j| f(a + (2 * j + 1) as f64 * h)).sum();
        let next = h / 3.0 * (fa + fb + 2.0 * evens + 4.0 * odds);
        if (next - prev).abs() <= tol * next.abs().max(1.0) {
            return next;
        }
        prev = next;
    }
    prev
}

/// `int_a^b f(phi(theta)) d theta` over a sub-interval of the history
/// domain, splitting at the history's breakpoints so each piece is smooth.
pub(crate) fn integrate_history(
    history: &HistoryFunction,
    a: f64,
    b: f64,
    f: &dyn Fn(&[f64]) -> f64,
) -> f64 {
    if a >= b {
        return 0.0;
    }
    let mut cuts: Vec<f64> = history
        .breakpoints()
        .into_iter()
        .filter(|&x| x > a && x < b)
        .collect();
    cuts.insert(0, a);
    cuts.push(b);
    let g = |theta: f64| -> f64 {
        let phi = history.eval(theta).expect("inside history domain");
        f(&phi)
    };
    cuts.windows(2)
        .map(|w| simpson_adaptive(&g, w[0], w[1], 1e-10))
        .sum()
}

/// `int_a^b f(x(s)) ds` along a trajectory, one Simpson panel per smooth
/// piece: history breakpoints before `t0` and node intervals after it.
/// Exact for integrands that are cubic on each piece.
pub(crate) fn integrate_trajectory(
    traj: &DenseTrajectory,
    a: f64,
    b: f64,
    f: &dyn Fn(&[f64]) -> f64,
) -> crate::Result<f64> {
    if a >= b {
        return Ok(0.0);
    }
    let t0 = traj.t0();
    let mut cuts = vec![a];
    if a < t0 {
        cuts.extend(
            traj.history()
                .breakpoints()
                .into_iter()
                .map(|th| th + t0)
                .filter(|&s| s > a && s < b.min(t0)),
        );
        if t0 < b {
            cuts.push(t0);
        }
    }
    let times = traj.times();
    let start = times.partition_point(|&t| t <= a.max(t0));
    let stop = times.partition_point(|&t| t < b);
    if start < stop {
        cuts.extend(times[start..stop].iter().copied().filter(|&t| t > a));
    }
    cuts.push(b);
    cuts.dedup();

    let mut x = vec![0.0; traj.dim()];
    let mut eval = |s: f64| -> crate::Result<f64> {
        traj.evaluate_into(s, &mut x)?;
        Ok(f(&x))
    };
    let mut total = 0.0;
    let mut left = eval(cuts[0])?;
    for w in cuts.windows(2) {
        let mid = eval(0.5 * (w[0] + w[1]))?;
        let right = eval(w[1])?;
        total += (w[1] - w[0]) / 6.0 * (left + 4.0 * mid + right);
        left = right;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_converges() {
        let v = simpson_adaptive(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert!((v - 2.0).abs() < 1e-10);
        assert_eq!(simpson_adaptive(&|x| x * x * x, -1.0, 2.0, 1e-12), 3.75);
    }

    #[test]
    fn history_pieces_are_exact_for_linear_data() {
        let h = HistoryFunction::sampled(vec![(-2.0, vec![0.0]), (-1.0, vec![2.0]), (0.0, vec![1.0])]).unwrap();
        let v = integrate_history(&h, -2.0, 0.0, &|x| x[0]);
        assert!((v - 2.5).abs() < 1e-14);
        let v = integrate_history(&h, -1.5, -0.5, &|x| x[0]);
        assert!((v - (0.75 + 0.875)).abs() < 1e-14);
    }
}
