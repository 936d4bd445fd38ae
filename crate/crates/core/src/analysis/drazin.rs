//! Diagonal Drazin inverses and the weighted inequality conditions that
//! certify semistability of nonlinear additive protocols.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::systems::SystemRhs;

pub const CONDITION_TOL: f64 = 1e-12;

/// Entrywise: zero stays zero, everything else is inverted.
pub fn drazin_diag(lambda: &Matrix) -> Result<Matrix> {
    if !lambda.is_diagonal() {
        return Err(Error::NotDiagonal);
    }
    let d: Vec<f64> = lambda
        .diagonal()
        .into_iter()
        .map(|v| if v == 0.0 { 0.0 } else { 1.0 / v })
        .collect();
    Ok(Matrix::from_diagonal(&d))
}

/// Outcome of the four conditions at one sample point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleConditions {
    /// `P_k^D P_k g_k(x) = g_k(x)` for every k.
    pub range: bool,
    /// `sum_k g_kᵀ P_k g_k <= fᵀ P f`.
    pub coupling: bool,
    /// `sum_k fᵀ P P_k^D P f <= fᵀ P f`.
    pub weighting: bool,
    /// `1ᵀ(f(x) + sum_k g_k(x)) = 0`.
    pub balance: bool,
}

impl SampleConditions {
    pub fn all(&self) -> bool {
        self.range && self.coupling && self.weighting && self.balance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coro1bCertificate {
    pub p_k: Vec<Matrix>,
    pub p: Matrix,
    pub samples: Vec<Vec<f64>>,
    pub results: Vec<SampleConditions>,
}

impl Coro1bCertificate {
    pub fn pass(&self) -> bool {
        self.results.iter().all(SampleConditions::all)
    }

    /// Index of the first sample failing any condition.
    pub fn first_violation(&self) -> Option<usize> {
        self.results.iter().position(|r| !r.all())
    }
}

fn quad(d: &[f64], v: &[f64]) -> f64 {
    d.iter().zip(v).map(|(w, x)| w * x * x).sum()
}

/// Evaluates the diagonal-weight conditions at every sample.
pub fn coro1b_conditions(
    sys: &SystemRhs,
    p_k: &[Matrix],
    samples: &[Vec<f64>],
) -> Result<Coro1bCertificate> {
    let n = sys.dim();
    if p_k.len() != sys.m() {
        return Err(Error::DimensionMismatch {
            expected: sys.m(),
            got: p_k.len(),
        });
    }
    for pk in p_k {
        if !pk.is_diagonal() {
            return Err(Error::NotDiagonal);
        }
        if pk.rows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: pk.rows(),
            });
        }
        if pk.diagonal().iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::InvalidSystem("P_k must be nonnegative".into()));
        }
    }
    let p = p_k[1..].iter().fold(p_k[0].clone(), |acc, pk| acc.add(pk));
    let pd = p.diagonal();
    if pd.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::NotPositiveDefinite);
    }
    let diags: Vec<Vec<f64>> = p_k.iter().map(Matrix::diagonal).collect();
    let inv: Vec<Vec<f64>> = p_k
        .iter()
        .map(|pk| drazin_diag(pk).map(|m| m.diagonal()))
        .collect::<Result<_>>()?;

    let mut results = Vec::with_capacity(samples.len());
    for x in samples {
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        let f = sys.f(x);
        let g: Vec<Vec<f64>> = (0..sys.m()).map(|k| sys.g(k, x)).collect();
        let fpf = quad(&pd, &f);

        let range = g.iter().enumerate().all(|(k, gk)| {
            gk.iter()
                .enumerate()
                .all(|(i, v)| (inv[k][i] * diags[k][i] * v - v).abs() <= CONDITION_TOL)
        });
        let coupling_lhs: f64 = g.iter().zip(&diags).map(|(gk, dk)| quad(dk, gk)).sum();
        // P P_k^D P is diagonal with entries p_i^2 / (P_k)_ii on the support of P_k
        let weighting_lhs: f64 = inv
            .iter()
            .map(|dk| {
                f.iter()
                    .enumerate()
                    .map(|(i, fi)| pd[i] * dk[i] * pd[i] * fi * fi)
                    .sum::<f64>()
            })
            .sum();
        let total: f64 = (0..n).map(|i| f[i] + g.iter().map(|gk| gk[i]).sum::<f64>()).sum();
        results.push(SampleConditions {
            range,
            coupling: coupling_lhs <= fpf + CONDITION_TOL,
            weighting: weighting_lhs <= fpf + CONDITION_TOL,
            balance: total.abs() <= CONDITION_TOL,
        });
    }
    Ok(Coro1bCertificate {
        p_k: p_k.to_vec(),
        p,
        samples: samples.to_vec(),
        results,
    })
}
