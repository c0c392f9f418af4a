use blockjacobi::fit::{geometric_grid, loglog_slope};
use blockjacobi::linalg::C64;
use blockjacobi::model::CoefficientFamily;
use blockjacobi::transfer::{
    eig_2x2, kstep_product, log_product, solve_recursion, transfer_step, Direction, SolutionPath,
    Transfer2,
};
use proptest::prelude::*;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn scalar_family(which: usize) -> CoefficientFamily {
    let name = [
        "scalar_power",
        "scalar_power_diag",
        "example1",
        "heuristic2step",
        "step3",
        "prop5",
    ][which];
    CoefficientFamily::named(name, &[]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn step_determinant(which in 0usize..6, n in 2usize..100_000, lambda in -10.0f64..10.0) {
        let f = scalar_family(which);
        let t = transfer_step(&f, n, lambda).unwrap();
        let (a_prev, a) = (f.scalar_at(n - 1).unwrap().unwrap().0, f.scalar_at(n).unwrap().unwrap().0);
        prop_assert_eq!(t.m[0], [c(0.0), c(1.0)]);
        prop_assert!((t.det() - c(a_prev / a)).norm() <= 1e-15 * (a_prev / a).abs());
    }

    #[test]
    fn product_determinant_is_multiplicative(which in 0usize..6, n in 2usize..30_000, k in 2usize..=3, lambda in -10.0f64..10.0) {
        let f = scalar_family(which);
        let p = kstep_product(&f, n, k, lambda).unwrap();
        let mut want = c(1.0);
        for s in (k * n - k + 1)..=(k * n) {
            want *= transfer_step(&f, s, lambda).unwrap().det();
        }
        prop_assert!((p.det() - want).norm() <= 1e-12 * want.norm());
        let (e1, e2) = eig_2x2(&p);
        let scale = 1.0 + p.norm() * p.norm();
        prop_assert!((e1 * e2 - p.det()).norm() <= 1e-12 * scale);
        prop_assert!((e1 + e2 - p.trace()).norm() <= 1e-12 * (1.0 + p.norm()));
    }

    #[test]
    fn wronskian_is_constant(lambda in -3.0f64..3.0) {
        let f = CoefficientFamily::step3(0.75, 1.0).unwrap();
        let u = solve_recursion(&f, lambda, (c(1.0), c(0.0)), 2000, Direction::Forward).unwrap();
        let v = solve_recursion(&f, lambda, (c(0.3), c(-1.2)), 2000, Direction::Forward).unwrap();
        let w = |n: usize| wronskian(&f, &u, &v, n);
        let w1 = w(1);
        for n in (1..2000).step_by(37) {
            prop_assert!((w(n) - w1).norm() <= 1e-8 * w1.norm(), "n = {n}");
        }
    }
}

fn wronskian(f: &CoefficientFamily, u: &SolutionPath, v: &SolutionPath, n: usize) -> C64 {
    let a = f.scalar_at(n).unwrap().unwrap().0;
    (u.get(n).value() * v.get(n + 1).value() - u.get(n + 1).value() * v.get(n).value()) * a
}

#[test]
fn step3_determinant_closed_form() {
    let f = CoefficientFamily::step3(0.75, 1.0).unwrap();
    for lambda in [-2.0, 1.0, 5.0] {
        for n in 2..=500 {
            let d = kstep_product(&f, n, 3, lambda).unwrap().det();
            let want = (1.0 - 1.0 / n as f64).powf(0.75);
            assert!((d - c(want)).norm() <= 1e-12, "n = {n}, lambda = {lambda}");
        }
    }
}

#[test]
fn step3_trace_asymptotics() {
    let (al, de, la) = (0.75, 1.0, 1.0);
    let f = CoefficientFamily::step3(al, de).unwrap();
    let mut worst: f64 = 0.0;
    for n in 10..=10_000 {
        let x = 3.0 * n as f64;
        let tr = kstep_product(&f, n, 3, la).unwrap().trace().re;
        let want = de - 3.0 * la / x.powf(al) - al * de / x;
        worst = worst.max((tr - want).abs() * (n as f64).powf(1.5));
    }
    assert!(worst <= 10.0, "fitted constant {worst}");
}

#[test]
fn conjugate_pair_modulus() {
    let f = CoefficientFamily::step3(0.75, 1.0).unwrap();
    let mut seen = 0;
    for n in 5..=500 {
        let p = kstep_product(&f, n, 3, 1.0).unwrap();
        let half = p.trace() * 0.5;
        if (half * half - p.det()).re < 0.0 {
            seen += 1;
            let (e1, e2) = eig_2x2(&p);
            assert!((e1.norm_sqr() - p.det().re).abs() <= 1e-10);
            assert!((e2.norm_sqr() - p.det().re).abs() <= 1e-10);
        }
    }
    assert!(seen > 400);
}

#[test]
fn two_step_first_row() {
    let (al, be, la) = (0.8, 0.3, 0.7);
    let f = CoefficientFamily::named("heuristic2step", &[("alpha", al), ("beta", be)]).unwrap();
    for n in [2usize, 3, 10, 100, 12_345] {
        let p = kstep_product(&f, n, 2, la).unwrap();
        let odd = (2 * n - 1) as f64;
        let want0 = -((2 * n - 2) as f64 / odd).powf(al);
        let want1 = (la - odd.powf(be)) / odd.powf(al);
        assert!((p.m[0][0] - c(want0)).norm() <= 1e-12);
        assert!((p.m[0][1] - c(want1)).norm() <= 1e-12);
    }
}

#[test]
fn two_step_cancellation() {
    let (al, be, la) = (0.8, 0.3, 1.0);
    let f = CoefficientFamily::named("heuristic2step", &[("alpha", al), ("beta", be)]).unwrap();
    let n = 100_000;
    let p: Transfer2 = kstep_product(&f, n, 2, la).unwrap();
    let half = p.trace() * 0.5;
    let disc = (half * half - p.det()).re;
    let b_odd = ((2 * n - 1) as f64).powf(be);
    let ratio = disc * (2.0 * n as f64).powf(2.0 * al) / (la * b_odd);
    assert!((ratio - 1.0).abs() <= 0.1, "ratio {ratio}");
}

#[test]
fn telescoping_log_product() {
    let r = log_product(|k| c((1.0 - 1.0 / k as f64).powf(0.375)), 2, 10_000).unwrap();
    assert!((r.log_modulus - 0.375 * (1.0 / 9_999.0f64).ln()).abs() <= 1e-10);
    assert_eq!(r.phase, 0.0);
}

#[test]
fn stretched_exponential_drift() {
    let (al, be, la) = (0.8f64, 0.3f64, 1.0f64);
    let gamma = al - be / 2.0;
    let mu = |k: usize| {
        let x = 2.0 * k as f64;
        c(-1.0 + al / x - la.sqrt() / x.powf(gamma))
    };
    let pts = geometric_grid(1000, 1_000_000, 20);
    let drift: Vec<f64> = pts
        .iter()
        .map(|&n| {
            let lp = log_product(mu, 1, n).unwrap();
            let harmonic: f64 = (1..n).map(|k| 1.0 / k as f64).sum();
            (lp.log_modulus + 0.5 * al * harmonic).abs()
        })
        .collect();
    let x: Vec<f64> = pts.iter().map(|&n| n as f64).collect();
    let slope = loglog_slope(&x, &drift).unwrap();
    assert!((slope - (1.0 - gamma)).abs() <= 0.05, "slope {slope}");
}

#[test]
fn backward_shot_satisfies_recursion() {
    let f = CoefficientFamily::example1(0.75, 1.0).unwrap();
    let p = solve_recursion(&f, 1.0, (c(1.0), c(1e-300)), 10_000, Direction::Backward).unwrap();
    assert!(p.max_relative_residual(&f).unwrap() <= 1e-9);
    let lm: Vec<f64> = (1..=10_000)
        .step_by(500)
        .map(|n| p.get(n).log_modulus())
        .collect();
    assert!(lm.windows(2).all(|w| w[1] < w[0]), "{lm:?}");
}
