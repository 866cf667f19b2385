use becgate::fit::synthetic::{synthetic_growth, synthetic_sinusoid_envelope, uniform_grid};
use becgate::fit::{
    fit_growth, fit_sinusoid_envelope, least_squares, DataSeries, LsqOptions, SinusoidEnvelope,
};
use becgate::fwm::GrowthModel;
use proptest::prelude::*;

fn reversed(d: &DataSeries) -> DataSeries {
    DataSeries::new(
        d.t().iter().rev().copied().collect(),
        d.y().iter().rev().copied().collect(),
        d.sigma().map(|s| s.iter().rev().copied().collect()),
    )
    .unwrap()
}

#[test]
fn growth_fit_ignores_point_order() {
    let truth = GrowthModel::new(2.4e-6, 1.2e-3, 3.5, 0.0).unwrap();
    let d = synthetic_growth(&truth, &uniform_grid(0.0, 3e-3, 3e-5), 0.02, 5).unwrap();
    assert_eq!(
        fit_growth(&d, 3.5).unwrap(),
        fit_growth(&reversed(&d), 3.5).unwrap()
    );
}

#[test]
fn sinusoid_fit_ignores_point_order() {
    let truth = SinusoidEnvelope {
        amplitude: 1.0,
        center: 0.45e-3,
        width: 0.15e-3,
        visibility: 0.35,
        omega: 2.0 * std::f64::consts::PI * 15.4e3,
        t5: 1e-5,
        y0: 0.05,
    };
    let d =
        synthetic_sinusoid_envelope(&truth, &uniform_grid(0.1e-3, 0.8e-3, 5e-6), 0.02, 3).unwrap();
    let a = fit_sinusoid_envelope(&d).unwrap();
    let b = fit_sinusoid_envelope(&reversed(&d)).unwrap();
    assert_eq!(a, b);
    assert!((a.params[3] - 0.35).abs() < 0.03);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn quadratic_model_matches_normal_equations(
        c in prop::array::uniform3(-5.0f64..5.0),
        noise in prop::collection::vec(-0.1f64..0.1, 20),
    ) {
        let t: Vec<f64> = (0..20).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().zip(&noise).map(|(t, e)| c[0] + c[1] * t + c[2] * t * t + e).collect();
        let d = DataSeries::new(t.clone(), y.clone(), None).unwrap();
        let fit = least_squares(
            |t, p| p[0] + p[1] * t + p[2] * t * t,
            &d,
            &[0.0, 0.0, 0.0],
            &["c0", "c1", "c2"],
            &LsqOptions::default(),
        )
        .unwrap();
        let a = nalgebra::DMatrix::from_fn(20, 3, |i, j| t[i].powi(j as i32));
        let exact = a.clone().svd(true, true).solve(&nalgebra::DVector::from_vec(y), 1e-14).unwrap();
        for j in 0..3 {
            prop_assert!((fit.params[j] - exact[j]).abs() <= 1e-8 * exact[j].abs().max(1.0));
        }
    }
}
