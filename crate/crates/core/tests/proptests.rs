use proptest::prelude::*;

use lacunary_crg::config::{LacunaryConfig, ScheduleRule};
use lacunary_crg::growth::{lacunary_log_max, nevanlinna, ExclusionRule};
use lacunary_crg::interp::RationalInterpolant;
use lacunary_crg::logdomain::log_add;
use lacunary_crg::product::LacunaryProduct;
use lacunary_crg::{Complex, LogValue, Mp, Precision, Real};

const P: u32 = 50;

fn ctx() -> Precision {
    Precision::from_digits(P)
}

fn c(re: f64, im: f64) -> Complex {
    Complex::from_f64(re, im, ctx())
}

fn factorial(k: usize) -> LacunaryConfig {
    LacunaryConfig::make_schedule_with_precision(0.5, k, ScheduleRule::Factorial, P).unwrap()
}

fn polar(r: f64, theta: f64) -> Complex {
    Complex::from_polar(&Mp::from_f64(r, ctx()), &Mp::from_f64(theta, ctx()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn log_add_matches_direct_sum(
        a in (-1e6f64..1e6, -1e6f64..1e6),
        b in (-1e6f64..1e6, -1e6f64..1e6),
    ) {
        let (za, zb) = (c(a.0, a.1), c(b.0, b.1));
        let want = &za + &zb;
        prop_assume!(want.abs().to_f64() > 1e-3 * (za.abs().to_f64() + zb.abs().to_f64()));
        let sum = log_add(&LogValue::from_value(&za), &LogValue::from_value(&zb)).unwrap();
        let got = sum.value.to_value().unwrap();
        prop_assert!(((&got - &want).abs() / want.abs()).to_f64() < 1e-40);
    }

    #[test]
    fn product_is_conjugate_symmetric(r in 0.1f64..200.0, theta in -3.1f64..3.1) {
        let f = LacunaryProduct::<Mp>::new(&factorial(3));
        let z = polar(r, theta);
        prop_assume!(f.nearest_zero(&z).is_none_or(|d| d.rel_dist.to_f64() > 1e-6));
        let a = f.eval_f(&z).unwrap().value.to_value().unwrap();
        let b = f.eval_f(&z.conj()).unwrap().value.to_value().unwrap();
        prop_assert!(((&a.conj() - &b).abs() / a.abs()).to_f64() < 1e-40);
    }

    #[test]
    fn interpolant_is_conjugate_symmetric(r in 0.1f64..200.0, theta in -3.1f64..3.1) {
        let cfg = factorial(3);
        let f = LacunaryProduct::<Mp>::new(&cfg);
        let g = RationalInterpolant::residues_from_f(&f, &cfg).unwrap();
        let z = polar(r, theta);
        prop_assume!(f.nearest_zero(&z).is_none_or(|d| d.rel_dist.to_f64() > 1e-6));
        let a = g.eval_g(&z).unwrap().value;
        let b = g.eval_g(&z.conj()).unwrap().value;
        prop_assert!(((&a.conj() - &b).abs() / a.abs()).to_f64() < 1e-40);
    }

    #[test]
    fn counting_function_is_nondecreasing(r1 in 0.5f64..1e4, factor in 1.01f64..10.0) {
        let cfg = factorial(3);
        let f = LacunaryProduct::<Mp>::new(&cfg);
        let g = RationalInterpolant::residues_from_f(&f, &cfg).unwrap();
        let moduli: Vec<Mp> = g.poles().iter().map(|p| p.modulus().clone()).collect();
        let near = |r: f64| moduli.iter().any(|m| (r / m.to_f64() - 1.0).abs() < 2e-3);
        let r2 = r1 * factor;
        prop_assume!(!near(r1) && !near(r2));
        let n1 = nevanlinna(&g, &moduli, &Mp::from_f64(r1, ctx()), 16).unwrap().n;
        let n2 = nevanlinna(&g, &moduli, &Mp::from_f64(r2, ctx()), 16).unwrap().n;
        prop_assert!(n2 >= n1);
    }

    #[test]
    fn exclusion_disk_contains_its_point(k in 1usize..=4, offset in -0.02f64..0.02, theta in -3.1f64..3.1) {
        let f = LacunaryProduct::<Mp>::new(&factorial(4));
        let r = f.radius(k).to_f64() * (1.0 + offset);
        let z = polar(r, theta);
        if let Some(d) = f.disk_containing(&z) {
            prop_assert!((&z - &d.center).abs() <= d.radius);
            let n = f.degree(d.block).to_f64();
            prop_assert!((d.radius.to_f64() - f.radius(d.block).to_f64() / n).abs() <= 1e-9 * d.radius.to_f64());
        }
    }

    #[test]
    fn max_modulus_bracket_is_ordered_and_monotone(log_r in 0.0f64..80.0, step in 0.01f64..5.0) {
        let cfg = factorial(5);
        let at = |x: f64| lacunary_log_max::<Mp>(&cfg, &Mp::from_f64(x, ctx()), ctx()).unwrap();
        let (lo, hi) = (at(log_r), at(log_r + step));
        prop_assert!(lo.lower <= lo.upper);
        prop_assert!(hi.upper > lo.upper);
        prop_assert!(hi.lower > lo.lower);
    }
}
