use semistab_core::integrator::integrate_with_stats;
use semistab_core::{
    integrate, DelayKind, DelayProfile, HistoryFunction, IntegrationConfig, Matrix, SystemMatrices,
    SystemRhs,
};

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
fn constant_histories_are_preserved() {
    let two = [
        DelayProfile::builtin(DelayKind::TSinInv, 1.0).unwrap(),
        DelayProfile::builtin(DelayKind::ExpApproach, 1.0).unwrap(),
    ];
    let cases: Vec<(SystemRhs, Vec<DelayProfile>)> = vec![
        (SystemRhs::linear(two_node()), two.to_vec()),
        (SystemRhs::cubic(two_node()), two.to_vec()),
        (SystemRhs::odd_power(two_node(), 2).unwrap(), two.to_vec()),
        (
            SystemRhs::scalar_neutral(3).unwrap(),
            (1..=3)
                .map(|k| DelayProfile::builtin(DelayKind::SinShift, k as f64 / 3.0).unwrap())
                .collect(),
        ),
    ];
    let cfg = IntegrationConfig::new(1e-3, 10.0);
    for (sys, profiles) in &cases {
        for alpha in [-2.0, 0.0, 0.5, 3.0] {
            let phi = HistoryFunction::constant(vec![alpha; sys.dim()], 1.0).unwrap();
            let traj = integrate(sys, profiles, &phi, &cfg).unwrap();
            assert_eq!(traj.len(), 10_001);
            for i in 0..traj.len() {
                for v in traj.state(i) {
                    assert!((v - alpha).abs() <= 1e-12 * (1.0 + alpha.abs()), "{:?} alpha={alpha}", sys.kind());
                }
            }
        }
    }
}

#[test]
fn long_delays_need_one_iteration_per_step() {
    let sys = SystemRhs::linear(two_node());
    let profiles = [
        DelayProfile::constant(1.0).unwrap(),
        DelayProfile::builtin(DelayKind::SinInvShift, 1.0).unwrap(),
    ];
    let phi = HistoryFunction::affine(vec![1.0, -1.0], vec![0.5, 2.0], 1.0).unwrap();
    // sin_inv_shift stays above h (1 - sin 1) ~ 0.158 > step
    let (_, stats) = integrate_with_stats(&sys, &profiles, &phi, &IntegrationConfig::new(1e-2, 20.0)).unwrap();
    assert_eq!(stats.steps, 2000);
    assert_eq!(stats.max_iterations, 1);
    assert_eq!(stats.iterated_steps, 0);
}

#[test]
fn vanishing_delays_iterate_and_match_a_fine_run() {
    let sys = SystemRhs::linear(
        SystemMatrices::new(&Matrix::from_diagonal(&[-2.0]), vec![Matrix::identity(1)]).unwrap(),
    );
    let profiles = [DelayProfile::builtin(DelayKind::ExpApproach, 1.0).unwrap()];
    let phi = HistoryFunction::affine(vec![1.0], vec![1.0], 1.0).unwrap();
    let (coarse, stats) = integrate_with_stats(&sys, &profiles, &phi, &IntegrationConfig::new(1e-3, 1.0)).unwrap();
    assert!(stats.iterated_steps > 0);
    assert!(stats.max_iterations >= 2);
    let fine = integrate(&sys, &profiles, &phi, &IntegrationConfig::new(1e-5, 1.0)).unwrap();
    assert!((coarse.last_state()[0] - fine.last_state()[0]).abs() < 1e-8);
}

#[test]
fn runs_are_bit_identical() {
    let sys = SystemRhs::cubic(two_node());
    let profiles = [
        DelayProfile::builtin(DelayKind::ExpSin, 1.0).unwrap(),
        DelayProfile::builtin(DelayKind::SinInvShift, 1.0).unwrap(),
    ];
    let phi = HistoryFunction::constant(vec![1.0, 0.0], 2.0).unwrap();
    let cfg = IntegrationConfig::new(1e-3, 5.0);
    let a = integrate(&sys, &profiles, &phi, &cfg).unwrap();
    let b = integrate(&sys, &profiles, &phi, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn documented_endpoints() {
    // x' = -x + x(t - 1), phi = 1 + theta: limit (1 + 1/2) / 2
    let sys = SystemRhs::scalar_neutral(1).unwrap();
    let prof = [DelayProfile::constant(1.0).unwrap()];
    let phi = HistoryFunction::affine(vec![1.0], vec![1.0], 1.0).unwrap();
    let traj = integrate(&sys, &prof, &phi, &IntegrationConfig::new(1e-3, 50.0)).unwrap();
    assert!((traj.last_state()[0] - 0.75).abs() < 1e-4);

    let phi = HistoryFunction::constant(vec![1.0], 1.0).unwrap();
    let traj = integrate(&sys, &prof, &phi, &IntegrationConfig::new(1e-3, 5.0)).unwrap();
    assert!((0..traj.len()).all(|i| (traj.state(i)[0] - 1.0).abs() < 1e-13));

    let sys = SystemRhs::linear(two_node());
    let prof = [DelayProfile::constant(1.0).unwrap(), DelayProfile::constant(1.0).unwrap()];
    let phi = HistoryFunction::constant(vec![1.0, 0.0], 1.0).unwrap();
    let traj = integrate(&sys, &prof, &phi, &IntegrationConfig::new(1e-3, 60.0)).unwrap();
    assert!(traj.last_state().iter().all(|v| (v - 0.5).abs() < 1e-4));
}
