use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    AnalysisSpec, Expectations, HistorySpec, IntegrationSpec, LinkSpec, ProfileSpec, Scenario,
    SystemSpec,
};
use crate::delays::DelayKind;

const RECORD_EVERY: usize = 10;

fn integration(t_end: f64) -> IntegrationSpec {
    IntegrationSpec {
        record_every: RECORD_EVERY,
        ..IntegrationSpec::new(1e-3, t_end)
    }
}

fn analysis(convergence_tol: f64) -> AnalysisSpec {
    AnalysisSpec {
        convergence_tol,
        ..AnalysisSpec::default()
    }
}

/// Expectations shared by constant-delay (limiting) runs.
fn limiting_expect(alpha_tol: f64, conserved: bool) -> Expectations {
    Expectations {
        converged: Some(true),
        alpha_tol: Some(alpha_tol),
        conservation_drift_max: conserved.then_some(1e-6),
        razumikhin_violations_max: Some(0),
        ..Expectations::default()
    }
}

/// Time-varying runs report their gap to the limiting-system prediction
/// but do not gate on it: the first integral drifts while the delays move.
fn time_varying_expect() -> Expectations {
    Expectations {
        converged: Some(true),
        residual_decay_min: Some(10.0),
        razumikhin_violations_max: Some(0),
        ..Expectations::default()
    }
}

fn scalar(name: &str, profile: ProfileSpec, history: HistorySpec, t_end: f64, expect: Expectations) -> Scenario {
    Scenario {
        name: name.into(),
        n: 1,
        system: SystemSpec::Neutral {},
        links: vec![],
        profiles: vec![profile],
        history,
        integration: integration(t_end),
        analysis: analysis(1e-4),
        expect,
        seed: 0,
    }
}

fn two_node_links() -> Vec<LinkSpec> {
    vec![
        LinkSpec {
            from: 1,
            to: 2,
            weight: 1.0,
            delay: 1,
        },
        LinkSpec {
            from: 2,
            to: 1,
            weight: 1.0,
            delay: 2,
        },
    ]
}

fn two_node(
    name: &str,
    system: SystemSpec,
    profiles: [ProfileSpec; 2],
    span: f64,
    expect: Expectations,
) -> Scenario {
    Scenario {
        name: name.into(),
        n: 2,
        system,
        links: two_node_links(),
        profiles: profiles.into(),
        history: HistorySpec::Constant {
            value: vec![1.0, 0.0],
            span: Some(span),
        },
        integration: integration(60.0),
        analysis: analysis(1e-4),
        expect,
        seed: 0,
    }
}

/// Seeded random history for the three-delay neutral example, sampled on
/// a uniform grid over `[-h, 0]`.
fn neutral_history(seed: u64, h: f64, points: usize) -> HistorySpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..points)
        .map(|i| {
            let theta = if i + 1 == points {
                0.0
            } else {
                -h + h * i as f64 / (points - 1) as f64
            };
            (theta, vec![rng.random_range(-1.0..=1.0)])
        })
        .collect();
    HistorySpec::Sampled { samples }
}

fn neutral(name: &str, time_varying: bool) -> Scenario {
    const M: usize = 3;
    const H: f64 = 1.0;
    const SEED: u64 = 3;
    let profiles = (1..=M)
        .map(|k| {
            let hk = H * k as f64 / M as f64;
            if time_varying {
                ProfileSpec::builtin(DelayKind::SinShift, hk)
            } else {
                ProfileSpec::builtin(DelayKind::Constant, hk)
            }
        })
        .collect();
    Scenario {
        name: name.into(),
        n: 1,
        system: SystemSpec::Neutral {},
        links: vec![],
        profiles,
        history: neutral_history(SEED, H, 9),
        integration: integration(if time_varying { 120.0 } else { 60.0 }),
        analysis: analysis(1e-3),
        expect: if time_varying {
            time_varying_expect()
        } else {
            limiting_expect(1e-4, true)
        },
        seed: SEED,
    }
}

/// The ten built-in runs: each worked example with its time-varying delays
/// and with the constant delays of its limiting system.
pub fn builtin_corpus() -> Vec<Scenario> {
    let affine = || HistorySpec::Affine {
        a: vec![1.0],
        b: vec![1.0],
        span: Some(1.0),
    };
    let sampled = || HistorySpec::Sampled {
        samples: vec![
            (-2.0, vec![0.2]),
            (-1.5, vec![-0.5]),
            (-1.0, vec![1.0]),
            (-0.5, vec![0.3]),
            (0.0, vec![0.8]),
        ],
    };
    let mut krasovskii = limiting_expect(1e-4, true);
    krasovskii.krasovskii_increase_max = Some(1e-9);

    vec![
        scalar(
            "scalar_sinshift",
            ProfileSpec::builtin(DelayKind::SinShift, 1.0),
            affine(),
            200.0,
            time_varying_expect(),
        ),
        scalar(
            "scalar_const",
            ProfileSpec::builtin(DelayKind::Constant, 1.0),
            affine(),
            50.0,
            Expectations {
                alpha: Some(0.75),
                ..krasovskii.clone()
            },
        ),
        scalar(
            "scalar_sampled_sinshift",
            ProfileSpec::builtin(DelayKind::SinShift, 2.0),
            sampled(),
            200.0,
            time_varying_expect(),
        ),
        scalar(
            "scalar_sampled_const",
            ProfileSpec::builtin(DelayKind::Constant, 2.0),
            sampled(),
            80.0,
            krasovskii,
        ),
        neutral("neutral3_sinshift", true),
        neutral("neutral3", false),
        two_node(
            "twonode_linear_tv",
            SystemSpec::Linear {},
            [
                ProfileSpec::builtin(DelayKind::TSinInv, 1.0),
                ProfileSpec::builtin(DelayKind::ExpApproach, 1.0),
            ],
            1.0,
            time_varying_expect(),
        ),
        two_node(
            "twonode_linear",
            SystemSpec::Linear {},
            [
                ProfileSpec::builtin(DelayKind::Constant, 1.0),
                ProfileSpec::builtin(DelayKind::Constant, 1.0),
            ],
            1.0,
            Expectations {
                alpha: Some(0.5),
                ..limiting_expect(1e-4, true)
            },
        ),
        two_node(
            "twonode_cubic_tv",
            SystemSpec::Cubic {},
            [
                ProfileSpec::builtin(DelayKind::ExpSin, 1.0),
                ProfileSpec::builtin(DelayKind::SinInvShift, 1.0),
            ],
            2.0,
            time_varying_expect(),
        ),
        two_node(
            "twonode_cubic",
            SystemSpec::Cubic {},
            [
                ProfileSpec::builtin(DelayKind::Constant, 1.0),
                ProfileSpec::builtin(DelayKind::Constant, 1.0),
            ],
            2.0,
            limiting_expect(1e-3, false),
        ),
    ]
}
