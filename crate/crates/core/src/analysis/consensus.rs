//! Predicted consensus values from the first integral of the protocol.

use crate::delays::DelayProfile;
use crate::error::{Error, Result};
use crate::history::{HistoryFunction, HistoryKind};
use crate::matrix::Matrix;
use crate::systems::SystemRhs;

use super::quadrature::integrate_history;

const BRACKET_LIMIT: f64 = 1e6;
const BISECTION_WIDTH: f64 = 1e-14;
const POLISH_STEP: f64 = 1e-6;
const MONOTONE_SAMPLES: usize = 256;

fn check_delays(history: &HistoryFunction, delays: &[f64]) -> Result<()> {
    for &h in delays {
        if !(h >= 0.0 && h.is_finite()) {
            return Err(Error::InvalidConfig(format!("delay {h} must be nonnegative")));
        }
        if h > history.span() {
            return Err(Error::OutOfRange {
                t: -h,
                lo: -history.span(),
                hi: 0.0,
            });
        }
    }
    Ok(())
}

/// `int_{-h}^0 phi(theta) d theta`, analytic for constant and affine data.
fn history_integral(history: &HistoryFunction, h: f64) -> Vec<f64> {
    match history.kind() {
        HistoryKind::Constant { value } => value.iter().map(|c| c * h).collect(),
        HistoryKind::Affine { a, b } => a.iter().zip(b).map(|(a, b)| a * h - 0.5 * b * h * h).collect(),
        HistoryKind::Sampled { .. } => (0..history.dim())
            .map(|i| integrate_history(history, -h, 0.0, &|x| x[i]))
            .collect(),
    }
}

/// Consensus value of the linear protocol:
///
/// `alpha* = (1ᵀphi(0) + sum_k int_{-h_k}^0 1ᵀF_k phi) / (n + sum_k h_k 1ᵀF_k 1)`.
pub fn predicted_consensus_linear(
    history: &HistoryFunction,
    f: &[Matrix],
    delays: &[f64],
    n: usize,
) -> Result<f64> {
    if history.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: history.dim(),
        });
    }
    if f.len() != delays.len() {
        return Err(Error::DimensionMismatch {
            expected: f.len(),
            got: delays.len(),
        });
    }
    check_delays(history, delays)?;
    let mut numerator: f64 = history.eval(0.0)?.iter().sum();
    let mut denominator = n as f64;
    for (fk, &h) in f.iter().zip(delays) {
        let weights = fk.col_sums();
        let integral = history_integral(history, h);
        numerator += weights.iter().zip(&integral).map(|(w, v)| w * v).sum::<f64>();
        denominator += h * fk.total();
    }
    if !(denominator > 0.0) {
        return Err(Error::DegenerateDenominator(denominator));
    }
    Ok(numerator / denominator)
}

/// Consensus value of a nonlinear additive protocol: the root of
///
/// `n a + sum_k h_k 1ᵀg_k(a 1) = 1ᵀphi(0) + sum_k int_{-h_k}^0 1ᵀg_k(phi)`.
///
/// Found by bracket expansion and bisection, then one Newton step with a
/// central-difference slope.
pub fn predicted_consensus_nonlinear(
    history: &HistoryFunction,
    sys: &SystemRhs,
    delays: &[f64],
    n: usize,
) -> Result<f64> {
    if history.dim() != n || sys.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: history.dim(),
        });
    }
    if delays.len() != sys.m() {
        return Err(Error::DimensionMismatch {
            expected: sys.m(),
            got: delays.len(),
        });
    }
    check_delays(history, delays)?;

    let g_total = |k: usize, y: &[f64]| -> f64 { sys.g(k, y).iter().sum() };
    let mut rhs: f64 = history.eval(0.0)?.iter().sum();
    for (k, &h) in delays.iter().enumerate() {
        rhs += integrate_history(history, -h, 0.0, &|y| g_total(k, y));
    }
    let lhs = |alpha: f64| -> f64 {
        let ones = vec![alpha; n];
        n as f64 * alpha
            + delays
                .iter()
                .enumerate()
                .map(|(k, &h)| h * g_total(k, &ones))
                .sum::<f64>()
    };
    solve_monotone(&lhs, rhs)
}

/// Consensus value predicted for `sys` from `history`, with every delay
/// replaced by its limit. Linear-in-state systems use the closed form.
pub fn predict_alpha(sys: &SystemRhs, profiles: &[DelayProfile], history: &HistoryFunction) -> Result<f64> {
    let delays = profiles.iter().map(DelayProfile::limit).collect::<Result<Vec<_>>>()?;
    match sys.linear_parts() {
        Some((_, f)) => predicted_consensus_linear(history, &f, &delays, sys.dim()),
        None => predicted_consensus_nonlinear(history, sys, &delays, sys.dim()),
    }
}

/// Root of `l(a) = target` for strictly increasing `l`.
fn solve_monotone(l: &dyn Fn(f64) -> f64, target: f64) -> Result<f64> {
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while l(lo) > target {
        lo *= 2.0;
        if lo < -BRACKET_LIMIT {
            return Err(Error::NoBracket(BRACKET_LIMIT));
        }
    }
    while l(hi) < target {
        hi *= 2.0;
        if hi > BRACKET_LIMIT {
            return Err(Error::NoBracket(BRACKET_LIMIT));
        }
    }

    let mut prev = l(lo);
    for j in 1..=MONOTONE_SAMPLES {
        let a = lo + (hi - lo) * j as f64 / MONOTONE_SAMPLES as f64;
        let v = l(a);
        if !(v > prev) {
            return Err(Error::NotMonotone(a));
        }
        prev = v;
    }

    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if l(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = 0.5 * (lo + hi);
    let slope = (l(alpha + POLISH_STEP) - l(alpha - POLISH_STEP)) / (2.0 * POLISH_STEP);
    if slope > 0.0 {
        let polished = alpha - (l(alpha) - target) / slope;
        if (l(polished) - target).abs() < (l(alpha) - target).abs() {
            return Ok(polished);
        }
    }
    Ok(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::SystemMatrices;

    fn two_node() -> SystemMatrices {
        SystemMatrices::new(
            &Matrix::from_diagonal(&[-1.0, -1.0]),
            vec![
                Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]),
                Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn scalar_affine_history() {
        let phi = HistoryFunction::affine(vec![1.0], vec![1.0], 1.0).unwrap();
        let alpha = predicted_consensus_linear(&phi, &[Matrix::identity(1)], &[1.0], 1).unwrap();
        assert!((alpha - 0.75).abs() < 1e-15);
    }

    #[test]
    fn constant_history_is_fixed() {
        let mats = two_node();
        let phi = HistoryFunction::constant(vec![0.3, 0.3], 2.0).unwrap();
        let alpha = predicted_consensus_linear(&phi, mats.f(), &[0.4, 1.7], 2).unwrap();
        assert!((alpha - 0.3).abs() < 1e-15);
        let sys = SystemRhs::cubic(mats);
        let alpha = predicted_consensus_nonlinear(&phi, &sys, &[0.4, 1.7], 2).unwrap();
        assert!((alpha - 0.3).abs() < 1e-14);
    }

    #[test]
    fn two_node_linear_value() {
        let phi = HistoryFunction::constant(vec![1.0, 0.0], 1.0).unwrap();
        let alpha = predicted_consensus_linear(&phi, two_node().f(), &[1.0, 1.0], 2).unwrap();
        assert_eq!(alpha, 0.5);
    }

    #[test]
    fn zero_history_nonlinear() {
        let phi = HistoryFunction::constant(vec![0.0, 0.0], 1.0).unwrap();
        let sys = SystemRhs::cubic(two_node());
        let alpha = predicted_consensus_nonlinear(&phi, &sys, &[1.0, 1.0], 2).unwrap();
        assert!(alpha.abs() < 1e-14, "{alpha}");
    }

    #[test]
    fn nonlinear_route_agrees_with_linear_formula() {
        let phi = HistoryFunction::sampled(vec![
            (-2.0, vec![0.5, -1.0]),
            (-0.7, vec![1.5, 0.2]),
            (0.0, vec![-0.3, 0.9]),
        ])
        .unwrap();
        let mats = two_node();
        let a = predicted_consensus_linear(&phi, mats.f(), &[0.8, 1.9], 2).unwrap();
        let b = predicted_consensus_nonlinear(&phi, &SystemRhs::linear(mats), &[0.8, 1.9], 2).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn delay_beyond_history_is_rejected() {
        let phi = HistoryFunction::constant(vec![1.0], 0.5).unwrap();
        assert!(predicted_consensus_linear(&phi, &[Matrix::identity(1)], &[1.0], 1).is_err());
    }

    #[test]
    fn solver_reports_non_monotone_maps() {
        assert!(matches!(solve_monotone(&|a| a * a * a - 3.0 * a, 0.5), Err(Error::NotMonotone(_))));
        assert!(matches!(solve_monotone(&|a| a.atan(), 5.0), Err(Error::NoBracket(_))));
    }
}
