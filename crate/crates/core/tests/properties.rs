use gamow_lab::decay::{
    fit_exponential, fit_tail_exponent, geometric_times, CurveBuilder, CurvePoint, DecayCurve,
    MethodPolicy,
};
use gamow_lab::gamow::nonescape_asymptote;
use gamow_lab::poles::{enumerate_poles, first_pole};
use gamow_lab::profile::InitialProfile;
use gamow_lab::spectral::{continuum_eigenfunction, Method};
use gamow_lab::well::{
    coefficient_a, coefficient_a_bar, coefficient_b, denominator, quantization_residual,
    WellParameters,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn well(l: f64, a: f64) -> WellParameters {
    WellParameters::new(l, a).unwrap()
}

fn synthetic(f: impl Fn(f64) -> f64, times: &[f64]) -> DecayCurve {
    DecayCurve {
        opacity: 1.0,
        width: 1.0,
        profile: "synthetic".into(),
        points: times
            .iter()
            .map(|&t| CurvePoint {
                t,
                p: f(t),
                method: Method::Rotated,
                asymptote: None,
                discrepancy: None,
                nodes: 0,
            })
            .collect(),
    }
}

proptest! {
    #[test]
    fn reflection_is_unimodular(l in 0.1f64..500.0, a in 0.2f64..5.0, k in 1e-3f64..200.0) {
        let b = coefficient_b(Complex64::new(k, 0.0), &well(l, a)).unwrap();
        prop_assert!((b.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn abar_is_conjugate_on_real_axis(l in 0.1f64..500.0, a in 0.2f64..5.0, k in -200.0f64..200.0) {
        let w = well(l, a);
        let kc = Complex64::new(k, 0.0);
        let (x, y) = (coefficient_a(kc, &w).unwrap(), coefficient_a_bar(kc, &w).unwrap());
        prop_assert!((x.conj() - y).norm() <= 1e-12 * x.norm().max(1e-300));
    }

    #[test]
    fn denominator_factorises(l in 0.1f64..500.0, a in 0.2f64..5.0, re in -30.0f64..30.0, im in -3.0f64..3.0) {
        let w = well(l, a);
        let k = Complex64::new(re, im) / a;
        let d = denominator(k, &w);
        let f = (Complex64::i() * k * a).exp() * quantization_residual(k, &w);
        prop_assert!((d - f).norm() <= 1e-10 * (1.0 + d.norm()));
    }

    #[test]
    fn eigenfunction_conjugation(l in 0.1f64..500.0, k in 1e-2f64..100.0, x in 0.0f64..5.0) {
        let w = well(l, 1.0);
        let b = coefficient_b(Complex64::new(k, 0.0), &w).unwrap();
        let phi = continuum_eigenfunction(k, x, &w);
        prop_assert!((phi.conj() - b.conj() * phi).norm() < 1e-12 * (1.0 + phi.norm()));
    }

    #[test]
    fn asymptote_follows_cube_law(l in 1.0f64..300.0, t in 1.0f64..1e6) {
        let w = well(l, 1.0);
        let p = InitialProfile::box_mode(1, &w).unwrap();
        let ratio = nonescape_asymptote(t, &p, &w) / nonescape_asymptote(2.0 * t, &p, &w);
        prop_assert!((ratio - 8.0).abs() < 1e-10);
    }

    #[test]
    fn exponential_fit_is_exact(rate in 1e-3f64..2.0, c in 0.1f64..2.0) {
        let tau = 1.0 / rate;
        let times = geometric_times(tau, 5.0 * tau, 25).unwrap();
        let fit = fit_exponential(&synthetic(|t| c * (-rate * t).exp(), &times), (tau, 5.0 * tau)).unwrap();
        prop_assert!((fit.rate - rate).abs() < 1e-10 * rate);
        prop_assert!((fit.intercept - c).abs() < 1e-9 * c);
    }

    #[test]
    fn tail_fit_is_exact(s in 1.0f64..5.0, c in 1e-6f64..1.0, t0 in 1.0f64..1e4) {
        let times = geometric_times(t0, 100.0 * t0, 25).unwrap();
        let fit = fit_tail_exponent(&synthetic(|t| c * t.powf(-s), &times), (t0, 100.0 * t0), 0.5 * t0).unwrap();
        prop_assert!((fit.exponent + s).abs() < 1e-9);
    }

    #[test]
    fn geometric_times_are_ordered(start in 1e-3f64..10.0, span in 1.0f64..1e4, ppd in 1usize..50) {
        let ts = geometric_times(start, start * span, ppd).unwrap();
        prop_assert!((ts[0] - start).abs() < 1e-12 * start);
        prop_assert!((ts[ts.len() - 1] - start * span).abs() < 1e-9 * start * span);
        prop_assert!(ts.windows(2).all(|p| p[1] > p[0]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn poles_are_ordered_resonances(l in 0.5f64..300.0, a in 0.5f64..2.0) {
        let w = well(l, a);
        let poles = enumerate_poles(&w, 25.0 / a).unwrap();
        prop_assert!(!poles.is_empty());
        for r in &poles {
            let k = r.wavenumber();
            prop_assert!(k.re > 0.0 && k.im < 0.0);
            prop_assert!(r.residual < 1e-10);
            prop_assert!(quantization_residual(-k.conj(), &w).norm() < 1e-9 * (1.0 + l));
            if l > 10.0 {
                prop_assert!(r.energy().re > 0.0 && k.im > -k.re);
            }
        }
        prop_assert!(poles.windows(2).all(|p| p[1].wavenumber().re > p[0].wavenumber().re));
        prop_assert!(poles.windows(2).all(|p| p[1].width() > p[0].width()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn survival_is_monotone(l in 10.0f64..150.0) {
        let w = well(l, 1.0);
        let p = InitialProfile::box_mode(1, &w).unwrap();
        let tau = first_pole(&w).unwrap().lifetime();
        let times: Vec<f64> = (1..=20).map(|j| 0.25 * j as f64 * tau).collect();
        let curve = CurveBuilder::new(&p, &w, MethodPolicy::Auto).curve(&times).unwrap();
        let ps = curve.values();
        prop_assert!(ps[0] < 1.0);
        prop_assert!(ps.windows(2).all(|q| q[1] < q[0]));
    }
}
