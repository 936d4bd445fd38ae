//! Bounded, continuous, not necessarily differentiable delay profiles.
//!
//! No derivative accessor exists on purpose: nothing downstream may rely
//! on `tau` being differentiable.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DelayKind {
    Constant,
    SinShift,
    TSinInv,
    ExpApproach,
    ExpSin,
    SinInvShift,
    Table,
}

impl DelayKind {
    pub const ALL_BUILTIN: [DelayKind; 6] = [
        DelayKind::Constant,
        DelayKind::SinShift,
        DelayKind::TSinInv,
        DelayKind::ExpApproach,
        DelayKind::ExpSin,
        DelayKind::SinInvShift,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DelayKind::Constant => "constant",
            DelayKind::SinShift => "sin_shift",
            DelayKind::TSinInv => "t_sin_inv",
            DelayKind::ExpApproach => "exp_approach",
            DelayKind::ExpSin => "exp_sin",
            DelayKind::SinInvShift => "sin_inv_shift",
            DelayKind::Table => "table",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL_BUILTIN
            .iter()
            .copied()
            .chain(std::iter::once(DelayKind::Table))
            .find(|k| k.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Builtin { kind: DelayKind, h: f64 },
    Table { samples: Vec<(f64, f64)>, tail: Option<f64> },
}

/// A delay `tau(t)` with a declared bound and asymptotic limit.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayProfile {
    shape: Shape,
}

impl DelayProfile {
    pub fn builtin(kind: DelayKind, h: f64) -> Result<Self> {
        if kind == DelayKind::Table {
            return Err(Error::InvalidProfile(
                "table profiles are built with DelayProfile::table".into(),
            ));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "h must be positive and finite, got {h}"
            )));
        }
        Ok(Self {
            shape: Shape::Builtin { kind, h },
        })
    }

    pub fn constant(h: f64) -> Result<Self> {
        Self::builtin(DelayKind::Constant, h)
    }

    /// Piecewise-linear `(t, tau)` samples. Beyond the last sample the
    /// profile equals `tail`; before the first it holds the first value.
    pub fn table(samples: Vec<(f64, f64)>, tail: Option<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidProfile("table needs at least one sample".into()));
        }
        for w in samples.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidProfile(
                    "table sample times must be strictly increasing".into(),
                ));
            }
        }
        let bad = |v: f64| !(v.is_finite() && v >= 0.0);
        if samples.iter().any(|&(t, tau)| !t.is_finite() || bad(tau)) || tail.is_some_and(bad) {
            return Err(Error::InvalidProfile(
                "table delays must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            shape: Shape::Table { samples, tail },
        })
    }

    pub fn kind(&self) -> DelayKind {
        match &self.shape {
            Shape::Builtin { kind, .. } => *kind,
            Shape::Table { .. } => DelayKind::Table,
        }
    }

    /// The `h` multiplier of a built-in profile.
    pub fn h_scale(&self) -> Option<f64> {
        match &self.shape {
            Shape::Builtin { h, .. } => Some(*h),
            Shape::Table { .. } => None,
        }
    }

    pub fn table_samples(&self) -> Option<(&[(f64, f64)], Option<f64>)> {
        match &self.shape {
            Shape::Table { samples, tail } => Some((samples, *tail)),
            Shape::Builtin { .. } => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.kind() == DelayKind::Constant
    }

    pub fn value(&self, t: f64) -> f64 {
        let (kind, h) = match &self.shape {
            Shape::Table { samples, tail } => return table_value(samples, *tail, t),
            Shape::Builtin { kind, h } => (*kind, *h),
        };
        let at = t.abs();
        match kind {
            DelayKind::Constant => h,
            DelayKind::SinShift => h * (FRAC_PI_2 + PI / (1.0 + at)).sin().abs(),
            DelayKind::TSinInv => {
                if t == 0.0 {
                    h
                } else {
                    h * (t * (1.0 / t).sin()).abs()
                }
            }
            DelayKind::ExpApproach => h * (1.0 - (-at).exp()),
            DelayKind::ExpSin => h - h * (-at).exp() * t.sin(),
            DelayKind::SinInvShift => h - h * (1.0 / (1.0 + at)).sin(),
            DelayKind::Table => unreachable!(),
        }
    }

    /// `lim_{t -> inf} tau(t)`.
    pub fn limit(&self) -> Result<f64> {
        match &self.shape {
            Shape::Builtin { h, .. } => Ok(*h),
            Shape::Table { tail, .. } => tail.ok_or(Error::NoLimit),
        }
    }

    /// Smallest constant bounding `tau` over the whole real line.
    pub fn bound(&self) -> f64 {
        match &self.shape {
            // -e^{-|t|} sin t peaks at t = -pi/4 with value e^{-pi/4}/sqrt(2).
            Shape::Builtin {
                kind: DelayKind::ExpSin,
                h,
            } => h * (1.0 + (-FRAC_PI_4).exp() * FRAC_1_SQRT_2),
            Shape::Builtin { h, .. } => *h,
            Shape::Table { samples, tail } => samples
                .iter()
                .map(|s| s.1)
                .chain(*tail)
                .fold(0.0, f64::max),
        }
    }
}

fn table_value(samples: &[(f64, f64)], tail: Option<f64>, t: f64) -> f64 {
    let last = samples[samples.len() - 1];
    if t > last.0 {
        return tail.unwrap_or(last.1);
    }
    let j = samples.partition_point(|s| s.0 <= t);
    if j == 0 {
        return samples[0].1;
    }
    if j == samples.len() {
        return last.1;
    }
    let (a, b) = (samples[j - 1], samples[j]);
    a.1 + (t - a.0) / (b.0 - a.0) * (b.1 - a.1)
}
