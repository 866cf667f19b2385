//! Analytic model of matter-wave four-wave mixing between Thomas-Fermi condensates.
//!
//! The three prepared components |1,0>, |2,k>, |2,k+q> share one Thomas-Fermi shape and
//! drift apart ballistically. The generated |1,q> population grows quadratically at
//! first and saturates once the clouds no longer overlap.

use std::f64::consts::PI;
use std::sync::Once;

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::physical::{CloudGeometry, PhysicalConstants};
use crate::quadrature::{integrate, integrate_nested, QuadOptions, QuadResult};

/// V = (8π/15) R_x R_y R_z, the ratio of particle number to peak density.
pub fn tf_volume(geometry: &CloudGeometry) -> f64 {
    let [rx, ry, rz] = geometry.radii();
    8.0 * PI / 15.0 * rx * ry * rz
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThomasFermiCloud {
    pub geometry: CloudGeometry,
    pub volume: f64,
}

impl ThomasFermiCloud {
    pub fn new(geometry: CloudGeometry) -> Self {
        Self {
            volume: tf_volume(&geometry),
            geometry,
        }
    }

    /// Normalized single-particle amplitude u(x), zero outside the ellipsoid.
    pub fn amplitude(&self, x: [f64; 3]) -> f64 {
        let radii = self.geometry.radii();
        let s: f64 = x.iter().zip(radii).map(|(xi, ri)| (xi / ri).powi(2)).sum();
        if s >= 1.0 {
            0.0
        } else {
            (1.0 - s).sqrt() / self.volume.sqrt()
        }
    }

    /// ∫|u|^{2k} d³x by nested quadrature in the coordinates
    /// x = R_x ρ cos φ, z = R_z ρ sin φ (the φ integral is done analytically).
    pub fn moment_quadrature(&self, k: i32, opts: QuadOptions) -> Result<QuadResult> {
        let [rx, ry, rz] = self.geometry.radii();
        let inner = integrate_nested(
            |s, rho| rho * (1.0 - rho * rho - s * s).max(0.0).powi(k),
            -1.0,
            1.0,
            |_| 0.0,
            |s| (1.0 - s * s).max(0.0).sqrt(),
            opts,
        )?;
        let scale = 2.0 * PI * rx * ry * rz / self.volume.powi(k);
        Ok(QuadResult {
            value: inner.value * scale,
            error: inner.error * scale,
            evaluations: inner.evaluations,
        })
    }
}

/// ∫|u|⁶ d³x = 8/(21 V²).
pub fn sextic_overlap(cloud: &ThomasFermiCloud) -> f64 {
    8.0 / (21.0 * cloud.volume * cloud.volume)
}

/// Quadrature version of [`sextic_overlap`] for cross-validation.
pub fn sextic_overlap_quadrature(cloud: &ThomasFermiCloud) -> Result<QuadResult> {
    cloud.moment_quadrature(
        3,
        QuadOptions {
            abs_tol: 1e-9,
            rel_tol: 1e-11,
            ..QuadOptions::default()
        },
    )
}

/// τ = (ħV/g12)·sqrt(21 / (8 N_0 N_k N_{k+q})), the timescale of the initial quadratic growth.
pub fn growth_timescale(constants: &PhysicalConstants, cloud: &ThomasFermiCloud) -> Result<f64> {
    let numbers = cloud.geometry.component_numbers();
    if let Some(index) = numbers.iter().position(|&n| n <= 0.0) {
        return Err(Error::ZeroPopulation { index });
    }
    let product: f64 = numbers.iter().product();
    Ok(constants.hbar * cloud.volume / constants.g12() * (21.0 / (8.0 * product)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationTimes {
    pub t0: f64,
    pub t1: f64,
}

/// t1 = 2 t0 / sqrt(1 + ε²)
pub fn t1_from_t0(t0: f64, epsilon: f64) -> f64 {
    2.0 * t0 / (1.0 + epsilon * epsilon).sqrt()
}

/// t0 = m R_y / (2ħ k_s), and t1 from the cloud aspect ratio.
pub fn saturation_times(
    constants: &PhysicalConstants,
    geometry: &CloudGeometry,
) -> SaturationTimes {
    let ry = geometry.radii()[1];
    let t0 = constants.atom_mass * ry / (2.0 * constants.hbar * constants.k_signal());
    SaturationTimes {
        t0,
        t1: t1_from_t0(t0, geometry.aspect_ratio()),
    }
}

static LARGE_EPSILON_WARNING: Once = Once::new();

/// Closed form of ∫_0^x (1 - u²(1+ε²)/4) sqrt(1 - u²) du.
pub fn f_profile(x: f64, epsilon: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            what: "f_profile argument",
            value: x,
            domain: "[0, 1]",
        });
    }
    let e2 = epsilon * epsilon;
    if e2 > 15.0 {
        LARGE_EPSILON_WARNING.call_once(|| {
            log::warn!("aspect ratio {epsilon} has ε² > 15; the arcsin term of f changes sign");
        });
    }
    let root = (1.0 - x * x).sqrt();
    Ok((x * root * (17.0 + e2 - 2.0 * x * x * (1.0 + e2)) + (15.0 - e2) * x.asin()) / 32.0)
}

/// Numerical integral behind [`f_profile`], used to cross-check the closed form.
pub fn f_profile_quadrature(x: f64, epsilon: f64) -> Result<QuadResult> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            what: "f_profile argument",
            value: x,
            domain: "[0, 1]",
        });
    }
    let c = (1.0 + epsilon * epsilon) / 4.0;
    integrate(
        |u| (1.0 - c * u * u) * (1.0 - u * u).max(0.0).sqrt(),
        0.0,
        x,
        QuadOptions {
            abs_tol: 1e-13,
            rel_tol: 1e-13,
            ..QuadOptions::default()
        },
    )
}

/// Parameters of the saturating growth curve N_q(t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthModel {
    pub tau: f64,
    pub t0: f64,
    pub epsilon: f64,
    pub n_offset: f64,
}

impl GrowthModel {
    pub fn new(tau: f64, t0: f64, epsilon: f64, n_offset: f64) -> Result<Self> {
        require_positive("tau", tau)?;
        require_positive("t0", t0)?;
        require_non_negative("epsilon", epsilon)?;
        if !n_offset.is_finite() {
            return Err(Error::InvalidParameter {
                name: "n_offset",
                reason: "must be finite".into(),
            });
        }
        Ok(Self {
            tau,
            t0,
            epsilon,
            n_offset,
        })
    }

    /// τ and t0 predicted from the cloud and constants.
    pub fn predicted(
        constants: &PhysicalConstants,
        cloud: &ThomasFermiCloud,
        n_offset: f64,
    ) -> Result<Self> {
        let tau = growth_timescale(constants, cloud)?;
        let sat = saturation_times(constants, &cloud.geometry);
        Self::new(tau, sat.t0, cloud.geometry.aspect_ratio(), n_offset)
    }

    pub fn t1(&self) -> f64 {
        t1_from_t0(self.t0, self.epsilon)
    }

    /// Time after which N_q(t) is flat, min(t0, t1).
    pub fn plateau_onset(&self) -> f64 {
        self.t0.min(self.t1())
    }

    /// Upper bound of the drift integral, t2(t) = min(t, t0, t1).
    pub fn t2(&self, t: f64) -> f64 {
        t.min(self.plateau_onset())
    }
}

/// N_q(t) = (t0/τ)² |f(t2(t)/t0)|² + N_offset.
pub fn fwm_population(t: f64, model: &GrowthModel) -> f64 {
    let x = (model.t2(t.max(0.0)) / model.t0).clamp(0.0, 1.0);
    let f = f_profile(x, model.epsilon).expect("argument clamped to [0, 1]");
    (model.t0 / model.tau).powi(2) * f * f + model.n_offset
}

/// First time at which N_q(t) - N_offset reaches `level`, or `None` if the plateau stays below it.
pub fn growth_crossing_time(model: &GrowthModel, level: f64) -> Option<f64> {
    let excess = |t: f64| fwm_population(t, model) - model.n_offset - level;
    let mut hi = model.plateau_onset();
    if excess(hi) < 0.0 {
        return None;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Fraction of one cloud that overlaps a displaced twin, h(x) with x = y0/R_y.
pub fn overlap_fraction(x: f64) -> f64 {
    let a = x.abs();
    if a >= 1.0 {
        0.0
    } else {
        (1.0 - a).powi(3) * (1.0 + 3.0 * a + a * a)
    }
}

/// Short-time FWM strength β = sqrt(8/21)·g12·t_FWM·N/(ħV), N being the total atom number.
pub fn beta_parameter(t_fwm: f64, constants: &PhysicalConstants, cloud: &ThomasFermiCloud) -> f64 {
    beta_rate(constants, cloud) * t_fwm
}

/// Inverse of [`beta_parameter`].
pub fn fwm_time_for_beta(
    beta: f64,
    constants: &PhysicalConstants,
    cloud: &ThomasFermiCloud,
) -> f64 {
    beta / beta_rate(constants, cloud)
}

fn beta_rate(constants: &PhysicalConstants, cloud: &ThomasFermiCloud) -> f64 {
    (8.0f64 / 21.0).sqrt() * constants.g12() * cloud.geometry.atom_number_total()
        / (constants.hbar * cloud.volume)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physical::default_experiment_config;
    use proptest::prelude::*;

    fn unit_cloud(radii: [f64; 3]) -> ThomasFermiCloud {
        ThomasFermiCloud::new(CloudGeometry::new(radii, 3.0, [1.0; 3], 1.0).unwrap())
    }

    #[test]
    fn volume_of_measured_radii() {
        let g = CloudGeometry::new([8e-6, 27e-6, 27e-6], 1.0, [1.0; 3], 1.0).unwrap();
        // 8π/15 * 5832 µm³ = 9771.6 µm³
        let v_um3 = tf_volume(&g) * 1e18;
        assert!((v_um3 - 8.0 * PI / 15.0 * 5832.0).abs() < 1e-8);
        assert!((v_um3 - 9.77e3).abs() < 5.0);
        assert!((tf_volume(&unit_cloud([1.0; 3]).geometry) - 8.0 * PI / 15.0).abs() < 1e-15);
    }

    #[test]
    fn amplitude_support() {
        let c = unit_cloud([2.0, 3.0, 4.0]);
        assert_eq!(c.amplitude([0.0; 3]), 1.0 / c.volume.sqrt());
        assert_eq!(c.amplitude([2.0, 0.0, 0.0]), 0.0);
        assert_eq!(c.amplitude([0.0, 3.5, 0.0]), 0.0);
        assert!(c.amplitude([1.0, 1.0, 1.0]) > 0.0);
    }

    #[test]
    fn sextic_overlap_scaling() {
        let c1 = unit_cloud([1.0, 1.0, 1.0]);
        let unit_volume = unit_cloud([1.0, 1.0, 15.0 / (8.0 * PI)]);
        assert!((sextic_overlap(&unit_volume) - 8.0 / 21.0).abs() < 1e-14);
        let c2 = unit_cloud([2.0f64.cbrt(), 2.0f64.cbrt(), 2.0f64.cbrt()]);
        assert!((sextic_overlap(&c2) / sextic_overlap(&c1) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn sextic_overlap_matches_quadrature_for_default_cloud() {
        let (_, g, _) = default_experiment_config();
        let c = ThomasFermiCloud::new(g);
        let q = sextic_overlap_quadrature(&c).unwrap();
        let a = sextic_overlap(&c);
        assert!((q.value - a).abs() / a < 1e-6, "{} vs {}", q.value, a);
    }

    #[test]
    fn growth_timescale_near_two_microseconds() {
        let (k, g, _) = default_experiment_config();
        let tau = growth_timescale(&k, &ThomasFermiCloud::new(g)).unwrap();
        assert!((tau - 2.1e-6).abs() / 2.1e-6 < 0.1, "{tau}");
    }

    #[test]
    fn growth_timescale_scaling() {
        let (k, g, _) = default_experiment_config();
        let base = growth_timescale(&k, &ThomasFermiCloud::new(g)).unwrap();
        let n = g.component_numbers();
        let g8 = CloudGeometry::new(
            g.radii(),
            g.atom_number_total(),
            [8.0 * n[0], 8.0 * n[1], 8.0 * n[2]],
            1.0,
        )
        .unwrap();
        let tau8 = growth_timescale(&k, &ThomasFermiCloud::new(g8)).unwrap();
        // product × 512 → τ / sqrt(512); a single component ×8 would give /sqrt(8)
        assert!((tau8 * 512f64.sqrt() / base - 1.0).abs() < 1e-12);
        let k2 = PhysicalConstants {
            a12: 2.0 * k.a12,
            ..k
        };
        let tau_a = growth_timescale(&k2, &ThomasFermiCloud::new(g)).unwrap();
        assert!((tau_a / base - 0.5).abs() < 1e-12);
        let r = g.radii();
        let g2 = CloudGeometry::new([2.0 * r[0], r[1], r[2]], 1.0, n, 1.0).unwrap();
        let tau_v = growth_timescale(&k, &ThomasFermiCloud::new(g2)).unwrap();
        assert!((tau_v / base - 2.0).abs() < 1e-12);
    }

    #[test]
    fn growth_timescale_rejects_empty_component() {
        let g = CloudGeometry::new([1.0; 3], 1.0, [1.0, 0.0, 1.0], 1.0).unwrap();
        let err = growth_timescale(&PhysicalConstants::default(), &ThomasFermiCloud::new(g));
        assert_eq!(err, Err(Error::ZeroPopulation { index: 1 }));
    }

    #[test]
    fn saturation_times_of_default_cloud() {
        let (k, g, _) = default_experiment_config();
        let s = saturation_times(&k, &g);
        assert!((s.t0 - 2.3e-3).abs() / 2.3e-3 < 0.05, "{}", s.t0);
        assert!((s.t1 - t1_from_t0(s.t0, 3.5)).abs() < 1e-15);
        assert_eq!(t1_from_t0(1.0, 0.0), 2.0);
        // best-fit t0 = 1.3 ms with ε = 3.5
        let t1 = t1_from_t0(1.3e-3, 3.5);
        assert!((t1 - 0.714e-3).abs() < 1e-6, "{t1}");
    }

    #[test]
    fn f_profile_edges() {
        assert_eq!(f_profile(0.0, 3.5).unwrap(), 0.0);
        for x in [1e-3, 1e-4, 1e-5] {
            assert!((f_profile(x, 3.5).unwrap() / x - 1.0).abs() < 10.0 * x * x);
        }
        assert!(f_profile(1.1, 3.5).is_err());
        assert!(f_profile(-0.1, 3.5).is_err());
        let q = f_profile_quadrature(0.5, 3.5).unwrap();
        assert!((q.value - f_profile(0.5, 3.5).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn f_profile_matches_quadrature_on_grid() {
        for eps in [0.5, 1.0, 3.5] {
            let upper = 1.0f64.min(t1_from_t0(1.0, eps));
            for i in 0..50 {
                let x = upper * i as f64 / 49.0;
                let a = f_profile(x, eps).unwrap();
                let q = f_profile_quadrature(x, eps).unwrap().value;
                assert!((a - q).abs() < 1e-8, "eps={eps} x={x}: {a} vs {q}");
            }
        }
    }

    #[test]
    fn population_short_time_and_plateau() {
        let m = GrowthModel::new(2.5e-6, 1.3e-3, 3.5, 0.0).unwrap();
        assert!((fwm_population(m.tau, &m) - 1.0).abs() < 1e-3);
        let t1 = m.t1();
        let plateau = fwm_population(t1, &m);
        for t in [t1, 1.01 * t1, 2e-3, 1.0] {
            assert_eq!(fwm_population(t, &m), plateau);
        }
        let with_offset = GrowthModel { n_offset: 7.0, ..m };
        assert_eq!(fwm_population(0.0, &with_offset), 7.0);
    }

    #[test]
    fn population_monotone() {
        let m = GrowthModel::new(2.5e-6, 1.3e-3, 3.5, 10.0).unwrap();
        let mut prev = fwm_population(0.0, &m);
        for i in 1..=3000 {
            let v = fwm_population(i as f64 * 1e-6, &m);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn crossing_time_short_time_limit() {
        // with a very late saturation the crossing follows t = τ sqrt(level)
        let m = GrowthModel::new(2.5e-6, 1.0, 3.5, 0.0).unwrap();
        let t = growth_crossing_time(&m, 1e4).unwrap();
        assert!((t - 0.25e-3).abs() / 0.25e-3 < 1e-4);
        let low = GrowthModel::new(1.0, 1e-3, 3.5, 0.0).unwrap();
        assert_eq!(growth_crossing_time(&low, 1e4), None);
    }

    #[test]
    fn overlap_fraction_values() {
        assert_eq!(overlap_fraction(0.0), 1.0);
        assert_eq!(overlap_fraction(1.0), 0.0);
        assert_eq!(overlap_fraction(-1.0), 0.0);
        assert_eq!(overlap_fraction(0.5), 0.34375);
        assert_eq!(overlap_fraction(3.0), 0.0);
        // h'(0) = 0
        let d = (overlap_fraction(1e-6) - overlap_fraction(-1e-6)) / 2e-6;
        assert!(d.abs() < 1e-9);
    }

    #[test]
    fn beta_linear_and_inverse() {
        let (k, g, _) = default_experiment_config();
        let c = ThomasFermiCloud::new(g);
        assert_eq!(beta_parameter(0.0, &k, &c), 0.0);
        let b1 = beta_parameter(1e-6, &k, &c);
        assert!((beta_parameter(2e-6, &k, &c) - 2.0 * b1).abs() < 1e-15 * b1.abs().max(1.0));
        let t = fwm_time_for_beta(2f64.sqrt(), &k, &c);
        assert!((beta_parameter(t, &k, &c) - 2f64.sqrt()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn normalization_and_sextic_by_quadrature(
            rx in 1e-6f64..5e-5, ry in 1e-6f64..5e-5, rz in 1e-6f64..5e-5
        ) {
            let c = unit_cloud([rx, ry, rz]);
            let norm = c.moment_quadrature(1, QuadOptions { abs_tol: 1e-10, rel_tol: 1e-11, ..Default::default() }).unwrap();
            prop_assert!((norm.value - 1.0).abs() < 1e-6);
            let s = sextic_overlap_quadrature(&c).unwrap();
            let a = sextic_overlap(&c);
            prop_assert!((s.value - a).abs() / a < 1e-6);
        }

        #[test]
        fn overlap_fraction_even_and_decreasing(x in 0.0f64..1.0, dx in 1e-6f64..0.5) {
            prop_assert_eq!(overlap_fraction(x), overlap_fraction(-x));
            let y = (x + dx).min(1.0);
            if y > x {
                prop_assert!(overlap_fraction(y) < overlap_fraction(x));
            }
        }
    }
}
