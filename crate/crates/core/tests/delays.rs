use semistab_core::{DelayKind, DelayProfile};

fn log_grid(points: usize, lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    let mut ts: Vec<f64> = (0..points)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64))
        .collect();
    ts.insert(0, 0.0);
    ts
}

fn builtins(h: f64) -> Vec<DelayProfile> {
    DelayKind::ALL_BUILTIN
        .iter()
        .map(|&k| DelayProfile::builtin(k, h).unwrap())
        .collect()
}

#[test]
fn values_stay_within_bounds() {
    let ts = log_grid(10_000, 1e-6, 1e6);
    for h in [0.3, 1.0, 2.5] {
        for p in builtins(h) {
            let bound = p.bound();
            for &t in &ts {
                for s in [t, -t] {
                    let v = p.value(s);
                    assert!((0.0..=bound).contains(&v), "{:?} h={h} t={s}: {v} > {bound}", p.kind());
                }
            }
        }
    }
}

#[test]
fn values_settle_to_their_limits() {
    let ts = log_grid(10_000, 1e-3, 1e6);
    for p in builtins(1.0) {
        let limit = p.limit().unwrap();
        let last_miss = ts
            .iter()
            .rev()
            .find(|&&t| (p.value(t) - limit).abs() > 1e-3)
            .copied()
            .unwrap_or(0.0);
        // every built-in settles well before the end of the grid
        assert!(last_miss < 2e3, "{:?} still off at t={last_miss}", p.kind());
        println!("{:>14}: within 1e-3 of its limit beyond t = {last_miss:.1}", p.kind().name());
    }
}

#[test]
fn kinks_are_continuous() {
    let sin_shift = DelayProfile::builtin(DelayKind::SinShift, 1.0).unwrap();
    let t_sin_inv = DelayProfile::builtin(DelayKind::TSinInv, 1.0).unwrap();
    let kinks = [
        (&sin_shift, 1.0),
        (&t_sin_inv, 1.0 / std::f64::consts::PI),
        (&t_sin_inv, 1.0 / (3.0 * std::f64::consts::PI)),
    ];
    for (p, t) in kinks {
        let mut prev = f64::INFINITY;
        for e in 2..12 {
            let d = 10f64.powi(-e);
            let jump = (p.value(t + d) - p.value(t)).abs().max((p.value(t - d) - p.value(t)).abs());
            assert!(jump <= 10.0 * d, "{:?} jump {jump} at t={t} delta={d}", p.kind());
            assert!(jump <= prev + 1e-15);
            prev = jump;
        }
    }
}

#[test]
fn table_profiles() {
    let p = DelayProfile::table(vec![(0.0, 0.2), (1.0, 0.7), (2.0, 0.4)], Some(0.5)).unwrap();
    assert_eq!(p.bound(), 0.7);
    assert_eq!(p.limit().unwrap(), 0.5);
    assert!((p.value(0.5) - 0.45).abs() < 1e-15);
    assert_eq!(p.value(10.0), 0.5);
    let open = DelayProfile::table(vec![(0.0, 0.2), (1.0, 0.7)], None).unwrap();
    assert!(open.limit().is_err());
}
