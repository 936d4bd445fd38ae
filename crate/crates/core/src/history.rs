//! Initial history functions and the dense solution record used for
//! delayed-state lookups.

use std::io::{self, Write};

use crate::error::{Error, Result};

/// Relative slack accepted at the ends of the history domain to absorb
/// round-off in `t - tau(t) - t0`.
const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum HistoryKind {
    Constant { value: Vec<f64> },
    /// `phi(theta) = a + b * theta`.
    Affine { a: Vec<f64>, b: Vec<f64> },
    /// Piecewise-linear through `(thetas[j], values[j])`.
    Sampled {
        thetas: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
}

/// Initial data `phi` on the closed interval `[-span, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryFunction {
    span: f64,
    dim: usize,
    kind: HistoryKind,
}

impl HistoryFunction {
    pub fn constant(value: Vec<f64>, span: f64) -> Result<Self> {
        check_span(span)?;
        check_finite(&value)?;
        Ok(Self {
            span,
            dim: value.len(),
            kind: HistoryKind::Constant { value },
        })
    }

    pub fn affine(a: Vec<f64>, b: Vec<f64>, span: f64) -> Result<Self> {
        check_span(span)?;
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                got: b.len(),
            });
        }
        check_finite(&a)?;
        check_finite(&b)?;
        Ok(Self {
            span,
            dim: a.len(),
            kind: HistoryKind::Affine { a, b },
        })
    }

    /// Samples must have strictly increasing abscissae running from
    /// `-span` to exactly `0`.
    pub fn sampled(samples: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidHistory(
                "a sampled history needs at least two samples".into(),
            ));
        }
        let dim = samples[0].1.len();
        let mut thetas = Vec::with_capacity(samples.len());
        let mut values = Vec::with_capacity(samples.len());
        for (theta, v) in samples {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            check_finite(&v)?;
            if let Some(&prev) = thetas.last() {
                if !(theta > prev) {
                    return Err(Error::InvalidHistory(format!(
                        "sample abscissae must be strictly increasing ({theta} after {prev})"
                    )));
                }
            }
            thetas.push(theta);
            values.push(v);
        }
        if *thetas.last().unwrap() != 0.0 {
            return Err(Error::InvalidHistory(
                "the last sample abscissa must be 0".into(),
            ));
        }
        let span = -thetas[0];
        check_span(span)?;
        Ok(Self {
            span,
            dim,
            kind: HistoryKind::Sampled { thetas, values },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Length of the domain `[-span, 0]`.
    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn kind(&self) -> &HistoryKind {
        &self.kind
    }

    /// Abscissae where the history may fail to be smooth, including both
    /// domain ends.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            HistoryKind::Sampled { thetas, .. } => thetas.clone(),
            _ => vec![-self.span, 0.0],
        }
    }

    pub fn eval_into(&self, theta: f64, out: &mut [f64]) -> Result<()> {
        let slack = DOMAIN_SLACK * self.span.max(1.0);
        if !(theta >= -self.span - slack && theta <= slack) {
            return Err(Error::OutOfRange {
                t: theta,
                lo: -self.span,
                hi: 0.0,
            });
        }
        let theta = theta.clamp(-self.span, 0.0);
        match &self.kind {
            HistoryKind::Constant { value } => out.copy_from_slice(value),
            HistoryKind::Affine { a, b } => {
                for ((o, a), b) in out.iter_mut().zip(a).zip(b) {
                    *o = a + b * theta;
                }
            }
            HistoryKind::Sampled { thetas, values } => {
                let j = thetas.partition_point(|&s| s <= theta);
                if j >= thetas.len() {
                    out.copy_from_slice(&values[thetas.len() - 1]);
                } else if j == 0 {
                    out.copy_from_slice(&values[0]);
                } else {
                    let (l, r) = (thetas[j - 1], thetas[j]);
                    let w = (theta - l) / (r - l);
                    for ((o, vl), vr) in out.iter_mut().zip(&values[j - 1]).zip(&values[j]) {
                        *o = vl + w * (vr - vl);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, theta: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(theta, &mut out)?;
        Ok(out)
    }

    /// Returns a copy with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |v: &[f64]| v.iter().map(|x| x * factor).collect::<Vec<_>>();
        let kind = match &self.kind {
            HistoryKind::Constant { value } => HistoryKind::Constant {
                value: scale(value),
            },
            HistoryKind::Affine { a, b } => HistoryKind::Affine {
                a: scale(a),
                b: scale(b),
            },
            HistoryKind::Sampled { thetas, values } => HistoryKind::Sampled {
                thetas: thetas.clone(),
                values: values.iter().map(|v| scale(v)).collect(),
            },
        };
        Self { kind, ..self.clone() }
    }
}

fn check_span(span: f64) -> Result<()> {
    if span.is_finite() && span > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidHistory(format!(
            "history span must be positive and finite, got {span}"
        )))
    }
}

fn check_finite(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidHistory("history values must be finite".into()))
    }
}

/// Cubic Hermite interpolant on `[t_a, t_a + h]` at `theta = (s - t_a) / h`.
#[inline]
pub(crate) fn hermite_into(
    theta: f64,
    h: f64,
    xa: &[f64],
    da: &[f64],
    xb: &[f64],
    db: &[f64],
    out: &mut [f64],
) {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + theta;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    for i in 0..out.len() {
        out[i] = h00 * xa[i] + h10 * h * da[i] + h01 * xb[i] + h11 * h * db[i];
    }
}

/// Solution of a delay equation on `[t0 - span, t_last]`: the history
/// before `t0` and a cubic Hermite dense output through the accepted
/// nodes after it.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTrajectory {
    t0: f64,
    dim: usize,
    history: HistoryFunction,
    times: Vec<f64>,
    states: Vec<f64>,
    derivs: Vec<f64>,
    /// Indices of nodes inserted between regular grid points.
    inner: Vec<usize>,
    initial_derivative_set: bool,
}

impl DenseTrajectory {
    /// Starts a trajectory whose single node is `(t0, history(0))`.
    pub fn new(history: HistoryFunction, t0: f64, dim: usize) -> Result<Self> {
        if history.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: history.dim(),
            });
        }
        if !t0.is_finite() {
            return Err(Error::InvalidConfig(format!("t0 must be finite, got {t0}")));
        }
        let x0 = history.eval(0.0)?;
        Ok(Self {
            t0,
            dim,
            history,
            times: vec![t0],
            states: x0,
            derivs: vec![0.0; dim],
            inner: Vec::new(),
            initial_derivative_set: false,
        })
    }

    /// Fills the derivative slot of the `t0` node.
    pub fn set_initial_derivative(&mut self, d: &[f64]) -> Result<()> {
        self.check_dim(d.len())?;
        self.derivs[..self.dim].copy_from_slice(d);
        self.initial_derivative_set = true;
        Ok(())
    }

    pub fn append_step(&mut self, t_next: f64, x_next: &[f64], d_next: &[f64]) -> Result<()> {
        self.check_dim(x_next.len())?;
        self.check_dim(d_next.len())?;
        let last = self.t_last();
        if !(t_next > last) {
            return Err(Error::NonMonotoneTime { t: t_next, last });
        }
        self.times.push(t_next);
        self.states.extend_from_slice(x_next);
        self.derivs.extend_from_slice(d_next);
        Ok(())
    }

    /// Like [`append_step`](Self::append_step) for a node off the regular
    /// grid; such nodes are skipped by [`write_csv`](Self::write_csv).
    pub fn append_inner_step(&mut self, t_next: f64, x_next: &[f64], d_next: &[f64]) -> Result<()> {
        self.append_step(t_next, x_next, d_next)?;
        self.inner.push(self.len() - 1);
        Ok(())
    }

    /// Indices of the regular grid nodes.
    pub fn grid_indices(&self) -> Vec<usize> {
        let mut skip = self.inner.iter().peekable();
        (0..self.len()).filter(|i| skip.next_if_eq(&i).is_none()).collect()
    }

    pub fn evaluate(&self, s: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.evaluate_into(s, &mut out)?;
        Ok(out)
    }

    pub fn evaluate_into(&self, s: f64, out: &mut [f64]) -> Result<()> {
        self.check_dim(out.len())?;
        let last = self.t_last();
        if s < self.t0 {
            return self.history.eval_into(s - self.t0, out).map_err(|_| Error::OutOfRange {
                t: s,
                lo: self.t_min(),
                hi: last,
            });
        }
        if !(s <= last) {
            return Err(Error::OutOfRange {
                t: s,
                lo: self.t_min(),
                hi: last,
            });
        }
        let i = self.times.partition_point(|&t| t <= s) - 1;
        if self.times[i] == s {
            out.copy_from_slice(self.state(i));
            return Ok(());
        }
        if i == 0 && !self.initial_derivative_set {
            return Err(Error::MissingDerivative);
        }
        let (ta, tb) = (self.times[i], self.times[i + 1]);
        let h = tb - ta;
        hermite_into(
            (s - ta) / h,
            h,
            self.state(i),
            self.derivative_slice(i),
            self.state(i + 1),
            self.derivative_slice(i + 1),
            out,
        );
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Earliest queryable time, `t0 - span`.
    pub fn t_min(&self) -> f64 {
        self.t0 - self.history.span()
    }

    pub fn t_last(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn history(&self) -> &HistoryFunction {
        &self.history
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    /// Stored right-hand side at node `i`; `None` for an unset initial slot.
    pub fn derivative(&self, i: usize) -> Option<&[f64]> {
        if i == 0 && !self.initial_derivative_set {
            None
        } else {
            Some(self.derivative_slice(i))
        }
    }

    pub fn last_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    fn derivative_slice(&self, i: usize) -> &[f64] {
        &self.derivs[i * self.dim..(i + 1) * self.dim]
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got == self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                got,
            })
        }
    }

    /// Writes `t,x_1,...,x_n`, one row per `record_every`-th grid node (the
    /// final node is always included).
    pub fn write_csv<W: Write>(&self, mut w: W, record_every: usize) -> io::Result<()> {
        let stride = record_every.max(1);
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=self.dim).map(|i| format!("x_{i}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        let grid = self.grid_indices();
        let last = grid.len() - 1;
        for i in (0..grid.len()).filter(|&j| j % stride == 0 || j == last).map(|j| grid[j]) {
            write!(w, "{}", fmt_f64(self.times[i]))?;
            for v in self.state(i) {
                write!(w, ",{}", fmt_f64(*v))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Full-precision (17 significant digit) rendering used in every CSV.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_decay(step: f64, nodes: usize) -> DenseTrajectory {
        let hist = HistoryFunction::constant(vec![1.0], 1.0).unwrap();
        let mut traj = DenseTrajectory::new(hist, 0.0, 1).unwrap();
        traj.set_initial_derivative(&[-1.0]).unwrap();
        for i in 1..=nodes {
            let t = i as f64 * step;
            let x = (-t).exp();
            traj.append_step(t, &[x], &[-x]).unwrap();
        }
        traj
    }

    #[test]
    fn new_trajectory_junctions() {
        let c = HistoryFunction::constant(vec![1.0, 0.0], 1.0).unwrap();
        let traj = DenseTrajectory::new(c, 0.0, 2).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.state(0), &[1.0, 0.0]);
        assert!(traj.derivative(0).is_none());

        let a = HistoryFunction::affine(vec![1.0], vec![1.0], 1.0).unwrap();
        let traj = DenseTrajectory::new(a, 0.0, 1).unwrap();
        assert_eq!(traj.state(0), &[1.0]);

        let s = HistoryFunction::sampled(vec![(-1.0, vec![2.0]), (0.0, vec![0.5])]).unwrap();
        let traj = DenseTrajectory::new(s, 0.0, 1).unwrap();
        assert_eq!(traj.state(0), &[0.5]);
    }

    #[test]
    fn new_trajectory_dimension_mismatch() {
        let c = HistoryFunction::constant(vec![1.0, 0.0], 1.0).unwrap();
        assert!(matches!(
            DenseTrajectory::new(c, 0.0, 3),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn append_requires_strictly_increasing_time() {
        let c = HistoryFunction::constant(vec![1.0], 1.0).unwrap();
        let mut traj = DenseTrajectory::new(c, 0.0, 1).unwrap();
        traj.append_step(0.001, &[1.0], &[0.0]).unwrap();
        assert_eq!(traj.len(), 2);
        assert!(matches!(
            traj.append_step(0.001, &[1.0], &[0.0]),
            Err(Error::NonMonotoneTime { .. })
        ));
    }

    #[test]
    fn hermite_matches_exponential() {
        let traj = exp_decay(0.01, 100);
        let v = traj.evaluate(0.005).unwrap()[0];
        assert!((v - (-0.005f64).exp()).abs() < 1e-10);
        for k in 0..99 {
            let s = 0.01 * k as f64 + 0.0037;
            let v = traj.evaluate(s).unwrap()[0];
            assert!((v - (-s).exp()).abs() < 1e-10, "s = {s}");
        }
    }

    #[test]
    fn evaluate_history_and_nodes() {
        let a = HistoryFunction::affine(vec![1.0], vec![1.0], 1.0).unwrap();
        let mut traj = DenseTrajectory::new(a, 0.0, 1).unwrap();
        assert_eq!(traj.evaluate(-0.5).unwrap(), vec![0.5]);
        assert_eq!(traj.evaluate(-1.0).unwrap(), vec![0.0]);
        traj.set_initial_derivative(&[0.3]).unwrap();
        traj.append_step(0.1, &[0.123456789], &[0.2]).unwrap();
        assert_eq!(traj.evaluate(0.1).unwrap(), vec![0.123456789]);
        assert!(matches!(traj.evaluate(0.1000001), Err(Error::OutOfRange { .. })));
        assert!(matches!(traj.evaluate(-1.001), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn first_segment_needs_initial_derivative() {
        let c = HistoryFunction::constant(vec![1.0], 1.0).unwrap();
        let mut traj = DenseTrajectory::new(c, 0.0, 1).unwrap();
        traj.append_step(0.1, &[1.0], &[0.0]).unwrap();
        assert_eq!(traj.evaluate(0.05), Err(Error::MissingDerivative));
        traj.set_initial_derivative(&[0.0]).unwrap();
        assert_eq!(traj.evaluate(0.05).unwrap(), vec![1.0]);
    }

    #[test]
    fn sampled_history_validation() {
        assert!(HistoryFunction::sampled(vec![(-1.0, vec![0.0]), (-1.0, vec![0.0]), (0.0, vec![1.0])]).is_err());
        assert!(HistoryFunction::sampled(vec![(-1.0, vec![0.0]), (-0.1, vec![1.0])]).is_err());
        let h = HistoryFunction::sampled(vec![(-2.0, vec![0.0]), (-1.0, vec![2.0]), (0.0, vec![1.0])]).unwrap();
        assert_eq!(h.span(), 2.0);
        assert_eq!(h.eval(-1.5).unwrap(), vec![1.0]);
        assert_eq!(h.eval(-0.5).unwrap(), vec![1.5]);
        assert!(h.eval(0.5).is_err());
    }

    #[test]
    fn csv_export() {
        let traj = exp_decay(0.5, 2);
        let mut buf = Vec::new();
        traj.write_csv(&mut buf, 1).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,x_1");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "0.0000000000000000e0,1.0000000000000000e0");
        let parsed: f64 = lines[3].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(parsed, (-1.0f64).exp());
    }
}
