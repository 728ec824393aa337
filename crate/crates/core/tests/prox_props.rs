use proptest::prelude::*;

use smoothcd::prox::{project_l2_ball, prox_tv_1d, AffineSet};
use smoothcd::{Pcg64, ProxOracle};

fn zoo(rng: &mut Pcg64, n: usize) -> Vec<ProxOracle> {
    let a: Vec<f64> = (0..n).map(|_| rng.uniform(0.5, 1.5)).collect();
    let b = 0.3 * a.iter().sum::<f64>();
    let half = n / 2;
    let mut out = vec![
        ProxOracle::L2Norm { lambda: rng.uniform(0.1, 2.0) },
        ProxOracle::L1Norm { lambda: rng.uniform(0.1, 2.0) },
        ProxOracle::Group { lambda: rng.uniform(0.1, 2.0), groups: vec![(0..half).collect(), (half..n).collect()] },
        ProxOracle::Ball2 { radius: rng.uniform(0.2, 2.0) },
        ProxOracle::Ball1 { radius: rng.uniform(0.2, 2.0), center: Vec::new() },
        ProxOracle::Simplex,
        ProxOracle::HyperBox { a, b, lower: vec![0.0; n], upper: vec![1.0; n] },
        ProxOracle::Tv1d { lambda: rng.uniform(0.1, 2.0) },
        ProxOracle::Power { r: rng.uniform(0.2, 2.0), weight: rng.uniform(0.1, 1.0) },
    ];
    let rows: Vec<f64> = rng.normal_vec(n);
    out.push(ProxOracle::Affine(
        AffineSet::new(nalgebra::DMatrix::from_row_slice(1, n, &rows), vec![rng.normal()]).unwrap(),
    ));
    if let ProxOracle::Group { groups, .. } = &mut out[2] {
        groups.retain(|g| !g.is_empty());
    }
    out
}

fn sq(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prox_is_firmly_nonexpansive(n in 2usize..10, seed in any::<u64>(), gamma in 0.1f64..3.0) {
        let mut rng = Pcg64::seed_from(seed);
        for psi in zoo(&mut rng, n) {
            let x: Vec<f64> = rng.normal_vec(n).iter().map(|v| 2.0 * v).collect();
            let y: Vec<f64> = rng.normal_vec(n).iter().map(|v| 2.0 * v).collect();
            let (px, py) = (psi.prox(gamma, &x).unwrap(), psi.prox(gamma, &y).unwrap());
            let d = sub(&px, &py);
            let inner: f64 = d.iter().zip(sub(&x, &y)).map(|(a, b)| a * b).sum();
            prop_assert!(sq(&d) <= inner + 1e-9 * (1.0 + sq(&x) + sq(&y)), "{}", psi.kind());
        }
    }

    #[test]
    fn prox_beats_other_points_of_the_domain(n in 2usize..10, seed in any::<u64>(), gamma in 0.1f64..3.0) {
        let mut rng = Pcg64::seed_from(seed);
        for psi in zoo(&mut rng, n) {
            let x: Vec<f64> = rng.normal_vec(n).iter().map(|v| 2.0 * v).collect();
            let p = psi.prox(gamma, &x).unwrap();
            let obj = |u: &[f64]| psi.value(u) + sq(&sub(u, &x)) / (2.0 * gamma);
            let best = obj(&p);
            prop_assert!(best.is_finite(), "{}", psi.kind());
            for _ in 0..5 {
                let z = rng.normal_vec(n);
                let u = psi.prox(rng.uniform(0.1, 3.0), &z).unwrap();
                prop_assert!(best <= obj(&u) + 1e-9 * (1.0 + best.abs()), "{}", psi.kind());
            }
        }
    }

    #[test]
    fn projections_are_idempotent(n in 2usize..10, seed in any::<u64>()) {
        let mut rng = Pcg64::seed_from(seed);
        for psi in zoo(&mut rng, n).into_iter().filter(ProxOracle::is_indicator) {
            let x: Vec<f64> = rng.normal_vec(n).iter().map(|v| 3.0 * v).collect();
            let p = psi.prox(1.0, &x).unwrap();
            prop_assert_eq!(psi.value(&p), 0.0, "{}", psi.kind());
            let pp = psi.prox(1.0, &p).unwrap();
            prop_assert!(sq(&sub(&p, &pp)).sqrt() <= 1e-9 * (1.0 + sq(&p).sqrt()), "{}", psi.kind());
        }
    }

    #[test]
    fn norm_prox_and_ball_projection_split_the_input(n in 1usize..12, seed in any::<u64>(), t in 0.05f64..3.0) {
        let mut rng = Pcg64::seed_from(seed);
        let x = rng.normal_vec(n);
        let p = ProxOracle::L2Norm { lambda: 1.0 }.prox(t, &x).unwrap();
        let q = project_l2_ball(t, &x).unwrap();
        for i in 0..n {
            prop_assert!((p[i] + q[i] - x[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn tv_prox_preserves_the_mean(n in 1usize..20, seed in any::<u64>(), lambda in 0.0f64..5.0) {
        let mut rng = Pcg64::seed_from(seed);
        let y = rng.normal_vec(n);
        let u = prox_tv_1d(lambda, &y);
        let (sy, su): (f64, f64) = (y.iter().sum(), u.iter().sum());
        prop_assert!((sy - su).abs() <= 1e-10 * (1.0 + sy.abs()));
    }
}
