use lightcone::fields::{inversion_pullback, make_annular_bump, AnalyticField, Monomial, Support};
use lightcone::geometry::{inversion_map, norm, OddDimension};
use lightcone::identities::Grids;
use lightcone::radon::{radon_point, PlaneRule};
use lightcone::sphmean::SphereAverager;
use lightcone::spline::{UniformQuinticHermite, UniformSpline};
use proptest::prelude::*;

fn d3() -> OddDimension {
    OddDimension::new(3).unwrap()
}

fn wavy() -> AnalyticField {
    let terms = vec![
        Monomial { coef: 1.0, powers: vec![0, 0, 0] },
        Monomial { coef: 0.5, powers: vec![1, 1, 0] },
        Monomial { coef: -0.3, powers: vec![0, 0, 1] },
    ];
    make_annular_bump(d3(), 0.5, 2.0, terms).unwrap()
}

fn direction() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 3)
        .prop_filter("away from the origin", |v| norm(v) > 0.1)
        .prop_map(|v| {
            let r = norm(&v);
            v.into_iter().map(|t| t / r).collect()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inversion_map_is_an_involution(theta in direction(), log_r in -4.0f64..4.0) {
        let r = 10f64.powf(log_r);
        let x: Vec<f64> = theta.iter().map(|t| r * t).collect();
        let y = inversion_map(&x).unwrap();
        prop_assert!((norm(&y) * r - 1.0).abs() < 1e-14);
        let back = inversion_map(&y).unwrap();
        for (a, b) in back.iter().zip(&x) {
            prop_assert!((a - b).abs() <= 1e-14 * r);
        }
    }

    #[test]
    fn radon_transform_is_even(theta in direction(), s in -2.5f64..2.5) {
        let f = wavy();
        let plane = PlaneRule::new(d3(), 16, 8).unwrap();
        let neg: Vec<f64> = theta.iter().map(|t| -t).collect();
        let a = radon_point(&f, &theta, s, &plane).unwrap();
        let b = radon_point(&f, &neg, -s, &plane).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn radon_transform_is_linear(theta in direction(), s in -2.5f64..2.5, alpha in -5.0f64..5.0) {
        let f = wavy();
        let plane = PlaneRule::new(d3(), 16, 8).unwrap();
        let a = radon_point(&f, &theta, s, &plane).unwrap();
        let b = radon_point(&f.scaled(alpha), &theta, s, &plane).unwrap();
        prop_assert!((b - alpha * a).abs() <= 1e-12 * (alpha * a).abs().max(1.0));
    }

    #[test]
    fn radon_transform_vanishes_beyond_the_support(theta in direction(), s in 2.0f64..5.0) {
        let plane = PlaneRule::new(d3(), 16, 8).unwrap();
        prop_assert_eq!(radon_point(&wavy(), &theta, s, &plane).unwrap(), 0.0);
    }

    #[test]
    fn inversion_pullback_support_is_inverted(theta in direction(), r in 0.01f64..4.0, k in -2i32..3) {
        let pulled = inversion_pullback(&wavy(), k);
        let Support::Annulus { inner, outer } = pulled.support() else {
            return Err(TestCaseError::fail("pullback lost its annulus"));
        };
        prop_assert!((inner - 0.5).abs() < 1e-15 && (outer - 2.0).abs() < 1e-15);
        let x: Vec<f64> = theta.iter().map(|t| r * t).collect();
        if r < inner || r > outer {
            prop_assert_eq!(pulled.eval(&x), 0.0);
        }
    }

    #[test]
    fn mean_of_a_constant_is_the_constant(theta in direction(), t in 0.1f64..3.0, c in -3.0f64..3.0) {
        let h = AnalyticField::constant(d3(), c);
        let zonal = Grids::reference().mean_rule(d3()).unwrap();
        let x: Vec<f64> = theta.iter().map(|v| 0.7 * v).collect();
        prop_assert!((zonal.mean(&h, &x, t) - c).abs() <= 1e-13 * c.abs().max(1.0));
    }

    #[test]
    fn natural_spline_reproduces_lines(a in -3.0f64..3.0, b in -3.0f64..3.0, x in -1.0f64..1.0) {
        let y = (0..21).map(|k| a + b * (-1.0 + 0.1 * k as f64)).collect();
        let spline = UniformSpline::new(-1.0, 0.1, y).unwrap();
        prop_assert!((spline.eval(x).unwrap() - (a + b * x)).abs() < 1e-12);
        prop_assert!((spline.derivative(x).unwrap() - b).abs() < 1e-10);
    }

    #[test]
    fn quintic_hermite_reproduces_quintics(c in prop::collection::vec(-2.0f64..2.0, 6), x in -1.0f64..1.0) {
        let p = |x: f64, d: usize| -> f64 {
            (d..6).map(|i| {
                let falling: f64 = (0..d).map(|j| (i - j) as f64).product();
                c[i] * falling * x.powi((i - d) as i32)
            }).sum()
        };
        let data = (0..11).map(|k| {
            let t = -1.0 + 0.2 * k as f64;
            [p(t, 0), p(t, 1), p(t, 2)]
        }).collect();
        let hermite = UniformQuinticHermite::new(-1.0, 0.2, data).unwrap();
        prop_assert!((hermite.eval(x).unwrap() - p(x, 0)).abs() < 1e-11);
        prop_assert!((hermite.derivative(x).unwrap() - p(x, 1)).abs() < 1e-9);
    }
}

#[test]
fn interpolants_refuse_to_extrapolate() {
    let spline = UniformSpline::new(0.0, 0.5, vec![1.0, 2.0, 0.0]).unwrap();
    assert_eq!(spline.eval(1.0), Some(0.0));
    assert!(spline.eval(1.0 + 1e-9).is_none());
    assert!(spline.eval(-1e-9).is_none());
}
