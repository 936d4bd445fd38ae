//! Weighted communication digraphs with per-link delay assignments and
//! the matrix form `(E, F_1, ..., F_m)` of the delayed consensus protocol.

use std::collections::HashSet;

use crate::delays::DelayProfile;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// `agent` uses `neighbor`'s delayed state through profile `delay`:
/// `x_agent' += weight * (x_neighbor(t - tau_delay(t)) - x_agent(t))`.
/// All indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub agent: usize,
    pub neighbor: usize,
    pub weight: f64,
    pub delay: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusNetwork {
    pub n: usize,
    pub links: Vec<Link>,
    pub profiles: Vec<DelayProfile>,
}

impl ConsensusNetwork {
    pub fn new(n: usize, links: Vec<Link>, profiles: Vec<DelayProfile>) -> Self {
        Self { n, links, profiles }
    }

    pub fn m(&self) -> usize {
        self.profiles.len()
    }

    fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidNetwork("network has no agents".into()));
        }
        if self.links.is_empty() {
            return Err(Error::InvalidNetwork("network has no links".into()));
        }
        let mut seen = HashSet::new();
        for (idx, l) in self.links.iter().enumerate() {
            if l.neighbor >= self.n || l.agent >= self.n {
                return Err(Error::InvalidNetwork(format!(
                    "link {idx} references an agent outside 1..={}",
                    self.n
                )));
            }
            if l.neighbor == l.agent {
                return Err(Error::InvalidNetwork(format!("link {idx} is a self-link")));
            }
            if !(l.weight.is_finite() && l.weight > 0.0) {
                return Err(Error::InvalidNetwork(format!(
                    "link {idx} weight must be positive, got {}",
                    l.weight
                )));
            }
            if l.delay >= self.m() {
                return Err(Error::InvalidNetwork(format!(
                    "link {idx} uses delay {} but only {} profiles exist",
                    l.delay + 1,
                    self.m()
                )));
            }
            if !seen.insert((l.agent, l.neighbor, l.delay)) {
                return Err(Error::InvalidNetwork(format!(
                    "duplicate link ({}, {}) on delay {}",
                    l.agent + 1,
                    l.neighbor + 1,
                    l.delay + 1
                )));
            }
        }
        Ok(())
    }

    /// Returns the network with agents relabelled `i -> perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let links = self
            .links
            .iter()
            .map(|l| Link {
                agent: perm[l.agent],
                neighbor: perm[l.neighbor],
                ..*l
            })
            .collect();
        Self::new(self.n, links, self.profiles.clone())
    }
}

/// `E` (diagonal) and the nonnegative coupling matrices `F_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrices {
    e_diag: Vec<f64>,
    f: Vec<Matrix>,
}

impl SystemMatrices {
    pub fn new(e: &Matrix, f: Vec<Matrix>) -> Result<Self> {
        if !e.is_diagonal() {
            return Err(Error::NotDiagonal);
        }
        let n = e.rows();
        if f.is_empty() {
            return Err(Error::InvalidSystem("at least one F_k is required".into()));
        }
        for fk in &f {
            if fk.rows() != n || fk.cols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: fk.rows(),
                });
            }
            if fk.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidSystem("F_k must be entrywise nonnegative".into()));
            }
        }
        Ok(Self {
            e_diag: e.diagonal(),
            f,
        })
    }

    pub fn n(&self) -> usize {
        self.e_diag.len()
    }

    pub fn m(&self) -> usize {
        self.f.len()
    }

    pub fn e_diag(&self) -> &[f64] {
        &self.e_diag
    }

    pub fn e(&self) -> Matrix {
        Matrix::from_diagonal(&self.e_diag)
    }

    pub fn f(&self) -> &[Matrix] {
        &self.f
    }

    /// `F = sum_k F_k`.
    pub fn f_sum(&self) -> Matrix {
        self.f[1..].iter().fold(self.f[0].clone(), |acc, fk| acc.add(fk))
    }

    /// `E + F`.
    pub fn laplacian(&self) -> Matrix {
        self.e().add(&self.f_sum())
    }
}

/// Compiles the network: `F_k(i, j) = a_ij` for links on delay `k`, and
/// `E(i, i) = -sum_k sum_j F_k(i, j)` so every row of `E + F` sums to zero.
/// Weights are summed in sorted order, which makes `E` independent of the
/// agent labelling bit for bit.
pub fn build_system_matrices(net: &ConsensusNetwork) -> Result<SystemMatrices> {
    net.check()?;
    let n = net.n;
    let mut f = vec![Matrix::zeros(n, n); net.m()];
    for l in &net.links {
        f[l.delay][(l.agent, l.neighbor)] = l.weight;
    }
    let mut e_diag = vec![0.0; n];
    for (i, e) in e_diag.iter_mut().enumerate() {
        let mut w: Vec<f64> = f.iter().flat_map(|fk| fk.row(i).iter().copied()).collect();
        w.sort_by(f64::total_cmp);
        *e = -w.iter().sum::<f64>();
    }
    Ok(SystemMatrices { e_diag, f })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub row_sums_zero: bool,
    pub col_sums_zero: bool,
    pub nonnegative_fk: bool,
    pub rank_is_n_minus_1: bool,
    pub rank: usize,
    pub max_row_sum: f64,
    pub max_col_sum: f64,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.row_sums_zero && self.col_sums_zero && self.nonnegative_fk && self.rank_is_n_minus_1
    }
}

/// Checks `(E+F)1 = 0`, `(E+F)ᵀ1 = 0`, `F_k >= 0` and `rank(E+F) = n-1`.
pub fn validate_laplacian_structure(m: &SystemMatrices, tol: f64) -> ValidationReport {
    let l = m.laplacian();
    let inf = |v: Vec<f64>| v.into_iter().map(f64::abs).fold(0.0, f64::max);
    let max_row_sum = inf(l.row_sums());
    let max_col_sum = inf(l.col_sums());
    let rank = rank_deficiency(&l, DEFAULT_RANK_TOL);
    ValidationReport {
        row_sums_zero: max_row_sum <= tol,
        col_sums_zero: max_col_sum <= tol,
        nonnegative_fk: m.f.iter().all(|fk| fk.iter().all(|&v| v >= 0.0)),
        rank_is_n_minus_1: rank + 1 == m.n(),
        rank,
        max_row_sum,
        max_col_sum,
    }
}

/// Numerical rank: the number of complete-pivoting elimination pivots whose
/// magnitude exceeds `tol * ||A||_inf`.
pub fn rank_deficiency(a: &Matrix, tol: f64) -> usize {
    let scale = a.inf_norm();
    if scale == 0.0 {
        return 0;
    }
    let threshold = tol * scale;
    let mut w = a.clone();
    let (rows, cols) = (w.rows(), w.cols());
    let mut rank = 0;
    for step in 0..rows.min(cols) {
        let mut best = (step, step, 0.0);
        for i in step..rows {
            for j in step..cols {
                let v = w[(i, j)].abs();
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        if best.2 <= threshold {
            break;
        }
        let (pi, pj, _) = best;
        for j in 0..cols {
            let tmp = w[(step, j)];
            w[(step, j)] = w[(pi, j)];
            w[(pi, j)] = tmp;
        }
        for i in 0..rows {
            let tmp = w[(i, step)];
            w[(i, step)] = w[(i, pj)];
            w[(i, pj)] = tmp;
        }
        let pivot = w[(step, step)];
        for i in step + 1..rows {
            let factor = w[(i, step)] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in step..cols {
                w[(i, j)] -= factor * w[(step, j)];
            }
        }
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_profiles(m: usize) -> Vec<DelayProfile> {
        (0..m).map(|_| DelayProfile::constant(1.0).unwrap()).collect()
    }

    fn link(agent: usize, neighbor: usize, weight: f64, delay: usize) -> Link {
        Link { agent, neighbor, weight, delay }
    }

    pub(crate) fn two_node() -> ConsensusNetwork {
        // x1' = -x1 + x2(t - tau1), x2' = -x2 + x1(t - tau2)
        ConsensusNetwork::new(2, vec![link(0, 1, 1.0, 0), link(1, 0, 1.0, 1)], unit_profiles(2))
    }

    #[test]
    fn two_node_matrices() {
        let m = build_system_matrices(&two_node()).unwrap();
        assert_eq!(m.e_diag(), &[-1.0, -1.0]);
        assert_eq!(m.f()[0], Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]));
        assert_eq!(m.f()[1], Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]));
        let report = validate_laplacian_structure(&m, 1e-12);
        assert!(report.pass(), "{report:?}");
        assert_eq!(report.rank, 1);
    }

    #[test]
    fn empty_and_bad_networks() {
        let empty = ConsensusNetwork::new(1, vec![], unit_profiles(1));
        assert!(matches!(build_system_matrices(&empty), Err(Error::InvalidNetwork(_))));
        let dup = ConsensusNetwork::new(2, vec![link(0, 1, 1.0, 0), link(0, 1, 2.0, 0)], unit_profiles(1));
        assert!(build_system_matrices(&dup).is_err());
        let selfl = ConsensusNetwork::new(2, vec![link(1, 1, 1.0, 0)], unit_profiles(1));
        assert!(build_system_matrices(&selfl).is_err());
        let bad_k = ConsensusNetwork::new(2, vec![link(0, 1, 1.0, 3)], unit_profiles(1));
        assert!(build_system_matrices(&bad_k).is_err());
        let neg = ConsensusNetwork::new(2, vec![link(0, 1, -1.0, 0)], unit_profiles(1));
        assert!(build_system_matrices(&neg).is_err());
        // same pair on a different delay is not a duplicate
        let multi = ConsensusNetwork::new(2, vec![link(0, 1, 1.0, 0), link(0, 1, 2.0, 1)], unit_profiles(2));
        assert!(build_system_matrices(&multi).is_ok());
    }

    #[test]
    fn directed_ring() {
        let net = ConsensusNetwork::new(
            3,
            vec![link(0, 1, 1.0, 0), link(1, 2, 1.0, 0), link(2, 0, 1.0, 0)],
            unit_profiles(1),
        );
        let m = build_system_matrices(&net).unwrap();
        assert_eq!(m.e(), Matrix::from_diagonal(&[-1.0; 3]));
        let ring = Matrix::from_rows(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]);
        assert_eq!(m.f()[0], ring);
        // a directed ring is balanced
        assert!(validate_laplacian_structure(&m, 1e-12).pass());
    }

    #[test]
    fn validation_failures() {
        let m = SystemMatrices::new(&Matrix::from_diagonal(&[-1.0, -1.0]), vec![Matrix::zeros(2, 2)]).unwrap();
        let r = validate_laplacian_structure(&m, 1e-12);
        assert!(!r.row_sums_zero);
        assert!(!r.pass());

        let unbalanced = ConsensusNetwork::new(2, vec![link(0, 1, 1.0, 0), link(1, 0, 2.0, 0)], unit_profiles(1));
        let m = build_system_matrices(&unbalanced).unwrap();
        let r = validate_laplacian_structure(&m, 1e-12);
        assert!(r.row_sums_zero);
        assert!(!r.col_sums_zero);
        assert!(r.rank_is_n_minus_1);
        assert!(!r.pass());
    }

    #[test]
    fn ranks() {
        let l = Matrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]);
        assert_eq!(rank_deficiency(&l, 1e-10), 1);
        assert_eq!(rank_deficiency(&Matrix::zeros(3, 3), 1e-10), 0);
        assert_eq!(rank_deficiency(&Matrix::identity(3), 1e-10), 3);
    }
}
