//! Right-hand sides `f(x(t)) + sum_k g_k(x(t - tau_k(t)))` and their
//! constant-delay limiting systems.

use crate::delays::DelayProfile;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::SystemMatrices;

#[derive(Debug, Clone, PartialEq)]
pub enum SystemKind {
    /// `E x + sum_k F_k y_k`.
    Linear(SystemMatrices),
    /// `E x^(2p+1) + sum_k F_k y_k^(2p+1)`, powers taken componentwise.
    /// `power = 1` is the cubic consensus protocol.
    OddPower { matrices: SystemMatrices, power: u32 },
    /// Scalar `-m x + sum_k y_k`.
    ScalarNeutral { m: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemRhs {
    kind: SystemKind,
}

impl SystemRhs {
    pub fn linear(matrices: SystemMatrices) -> Self {
        Self {
            kind: SystemKind::Linear(matrices),
        }
    }

    pub fn cubic(matrices: SystemMatrices) -> Self {
        Self::odd_power(matrices, 1).expect("power 1 is valid")
    }

    pub fn odd_power(matrices: SystemMatrices, power: u32) -> Result<Self> {
        if power == 0 || power > 20 {
            return Err(Error::InvalidSystem(format!(
                "odd power p must lie in 1..=20, got {power}"
            )));
        }
        Ok(Self {
            kind: SystemKind::OddPower { matrices, power },
        })
    }

    pub fn scalar_neutral(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidSystem("neutral system needs m >= 1".into()));
        }
        Ok(Self {
            kind: SystemKind::ScalarNeutral { m },
        })
    }

    pub fn kind(&self) -> &SystemKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            SystemKind::Linear(mats) | SystemKind::OddPower { matrices: mats, .. } => mats.n(),
            SystemKind::ScalarNeutral { .. } => 1,
        }
    }

    /// Number of delayed terms.
    pub fn m(&self) -> usize {
        match &self.kind {
            SystemKind::Linear(mats) | SystemKind::OddPower { matrices: mats, .. } => mats.m(),
            SystemKind::ScalarNeutral { m } => *m,
        }
    }

    /// `(diag E, [F_k])` for systems that are linear in the state.
    pub fn linear_parts(&self) -> Option<(Vec<f64>, Vec<Matrix>)> {
        match &self.kind {
            SystemKind::Linear(mats) => Some((mats.e_diag().to_vec(), mats.f().to_vec())),
            SystemKind::ScalarNeutral { m } => {
                Some((vec![-(*m as f64)], vec![Matrix::identity(1); *m]))
            }
            SystemKind::OddPower { .. } => None,
        }
    }

    /// The weight matrices behind the protocol, for structural validation.
    pub fn structure(&self) -> SystemMatrices {
        match &self.kind {
            SystemKind::Linear(mats) | SystemKind::OddPower { matrices: mats, .. } => mats.clone(),
            SystemKind::ScalarNeutral { m } => {
                let (e, f) = (Matrix::from_diagonal(&[-(*m as f64)]), vec![Matrix::identity(1); *m]);
                SystemMatrices::new(&e, f).expect("neutral structure is valid")
            }
        }
    }

    fn exponent(&self) -> i32 {
        match &self.kind {
            SystemKind::OddPower { power, .. } => 2 * *power as i32 + 1,
            _ => 1,
        }
    }

    /// Undelayed part `f(x)`.
    pub fn f_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.kind {
            SystemKind::Linear(mats) => {
                for ((o, e), xi) in out.iter_mut().zip(mats.e_diag()).zip(x) {
                    *o = e * xi;
                }
            }
            SystemKind::OddPower { matrices, .. } => {
                let p = self.exponent();
                for ((o, e), xi) in out.iter_mut().zip(matrices.e_diag()).zip(x) {
                    *o = e * xi.powi(p);
                }
            }
            SystemKind::ScalarNeutral { m } => out[0] = -(*m as f64) * x[0],
        }
    }

    /// Adds `g_k(y)` to `out`.
    pub fn add_g_into(&self, k: usize, y: &[f64], out: &mut [f64]) {
        match &self.kind {
            SystemKind::Linear(mats) => {
                let fk = &mats.f()[k];
                for (i, o) in out.iter_mut().enumerate() {
                    *o += fk.row(i).iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
                }
            }
            SystemKind::OddPower { matrices, .. } => {
                let p = self.exponent();
                let fk = &matrices.f()[k];
                for (i, o) in out.iter_mut().enumerate() {
                    *o += fk
                        .row(i)
                        .iter()
                        .zip(y)
                        .filter(|(a, _)| **a != 0.0)
                        .map(|(a, b)| a * b.powi(p))
                        .sum::<f64>();
                }
            }
            SystemKind::ScalarNeutral { .. } => out[0] += y[0],
        }
    }

    pub fn f(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.f_into(x, &mut out);
        out
    }

    pub fn g(&self, k: usize, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        self.add_g_into(k, y, &mut out);
        out
    }

    /// Unchecked hot-path evaluation; `delayed` holds the `m` delayed states
    /// back to back.
    #[inline]
    pub fn rhs_into(&self, x: &[f64], delayed: &[f64], out: &mut [f64]) {
        let n = x.len();
        self.f_into(x, out);
        for k in 0..self.m() {
            self.add_g_into(k, &delayed[k * n..(k + 1) * n], out);
        }
    }

    pub fn rhs_eval(&self, x_now: &[f64], x_delayed: &[Vec<f64>]) -> Result<Vec<f64>> {
        let n = self.dim();
        if x_now.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x_now.len(),
            });
        }
        if x_delayed.len() != self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                got: x_delayed.len(),
            });
        }
        let mut flat = Vec::with_capacity(n * self.m());
        for y in x_delayed {
            if y.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: y.len(),
                });
            }
            flat.extend_from_slice(y);
        }
        let mut out = vec![0.0; n];
        self.rhs_into(x_now, &flat, &mut out);
        Ok(out)
    }

    /// `||f(z) + sum_k g_k(z)||_2`; zero exactly on the equilibrium set.
    pub fn equilibrium_residual(&self, z: &[f64]) -> f64 {
        let n = z.len();
        let delayed: Vec<f64> = z.iter().copied().cycle().take(n * self.m()).collect();
        let mut out = vec![0.0; n];
        self.rhs_into(z, &delayed, &mut out);
        out.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// A system whose time-varying delays have been replaced by their limits.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitingSystem {
    pub base: SystemRhs,
    pub delays: Vec<f64>,
}

impl LimitingSystem {
    /// Constant profiles realizing the limiting delays.
    pub fn profiles(&self) -> Result<Vec<DelayProfile>> {
        self.delays.iter().map(|&h| DelayProfile::constant(h)).collect()
    }
}

pub fn limiting_of(sys: &SystemRhs, profiles: &[DelayProfile]) -> Result<LimitingSystem> {
    if profiles.len() != sys.m() {
        return Err(Error::DimensionMismatch {
            expected: sys.m(),
            got: profiles.len(),
        });
    }
    let delays = profiles.iter().map(DelayProfile::limit).collect::<Result<Vec<_>>>()?;
    Ok(LimitingSystem {
        base: sys.clone(),
        delays,
    })
}
