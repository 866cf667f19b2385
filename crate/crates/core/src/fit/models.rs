use std::f64::consts::PI;

use num_complex::Complex64;

use super::{least_squares, DataSeries, FitResult, LsqOptions};
use crate::error::{require_positive, Error, Result};
use crate::fwm::{f_profile, fwm_population, overlap_fraction, GrowthModel};

/// Fits N_q(t) = (t0/τ)² f(t2/t0)² + N_offset with τ, t0 and N_offset free.
///
/// `data.t` is in seconds. The returned parameters are `tau` (s), `t0` (s) and
/// `n_offset` (same unit as `data.y`).
pub fn fit_growth(data: &DataSeries, epsilon: f64) -> Result<FitResult> {
    require_positive("epsilon", epsilon)?;
    let y = data.y();
    let y_scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if y_scale == 0.0 {
        return Err(Error::FitFailure("growth data are identically zero".into()));
    }
    // internal units: µs, ms, and y / max|y|
    let model = |t: f64, p: &[f64]| {
        let m = GrowthModel {
            tau: p[0].abs() * 1e-6,
            t0: p[1].abs() * 1e-3,
            epsilon,
            n_offset: 0.0,
        };
        fwm_population(t, &m) / y_scale + p[2]
    };

    // the plateau fixes t0/τ for each trial t0; scan t0 and keep the best match
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let top = sorted[sorted.len() - 1];
    let plateau = median(
        &sorted
            .iter()
            .copied()
            .filter(|v| *v >= 0.9 * top)
            .collect::<Vec<_>>(),
    );
    let offset = sorted[0];
    let x1 = (2.0 / (1.0 + epsilon * epsilon).sqrt()).min(1.0);
    let f1 = f_profile(x1, epsilon)?.abs();
    let rise = plateau - offset;
    if rise.is_nan() || rise <= 0.0 || f1 == 0.0 {
        return Err(Error::FitFailure(
            "growth data show no rise above the offset".into(),
        ));
    }
    let scaled_data = data.scaled(1.0, 1.0 / y_scale)?;
    let t_max = data.t()[data.len() - 1].max(f64::MIN_POSITIVE);
    let mut best = (f64::INFINITY, [0.0; 3]);
    for k in 0..80 {
        let t0 = t_max * 0.05 * 400f64.powf(k as f64 / 79.0);
        let tau = t0 * f1 / rise.sqrt();
        let p = [tau * 1e6, t0 * 1e3, offset / y_scale];
        let cost: f64 = scaled_data
            .t()
            .iter()
            .zip(scaled_data.y())
            .map(|(&t, &v)| (model(t, &p) - v).powi(2))
            .sum();
        if cost < best.0 {
            best = (cost, p);
        }
    }
    let fit = least_squares(
        model,
        &scaled_data,
        &best.1,
        &["tau", "t0", "n_offset"],
        &LsqOptions::default(),
    )?;
    let factors = [1e-6, 1e-3, y_scale];
    Ok(FitResult {
        params: vec![
            fit.params[0].abs() * 1e-6,
            fit.params[1].abs() * 1e-3,
            fit.params[2] * y_scale,
        ],
        uncertainties: fit
            .uncertainties
            .iter()
            .zip(factors)
            .map(|(u, f)| u * f)
            .collect(),
        residual_norm: fit.residual_norm * if data.sigma().is_some() { 1.0 } else { y_scale },
        ..fit
    })
}

/// A exp(-(t - t_c)²/2w²) (1 + V cos ω(t - t5)) + y0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidEnvelope {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
    pub visibility: f64,
    /// rad/s
    pub omega: f64,
    pub t5: f64,
    pub y0: f64,
}

impl SinusoidEnvelope {
    pub fn eval(&self, t: f64) -> f64 {
        let g = (-(t - self.center).powi(2) / (2.0 * self.width * self.width)).exp();
        self.amplitude * g * (1.0 + self.visibility * (self.omega * (t - self.t5)).cos()) + self.y0
    }

    pub fn from_fit(fit: &FitResult) -> Self {
        let p = &fit.params;
        Self {
            amplitude: p[0],
            center: p[1],
            width: p[2],
            visibility: p[3],
            omega: p[4],
            t5: p[5],
            y0: p[6],
        }
    }
}

pub const SINUSOID_ENVELOPE_NAMES: [&str; 7] =
    ["amplitude", "center", "width", "V", "omega", "t5", "y0"];

/// Fits [`SinusoidEnvelope`] with all seven parameters free; `V` is reported in [0, 1].
///
/// Initialization: envelope center and width from the first two moments of |y - median|,
/// frequency from the periodogram peak of the envelope-subtracted data, and the remaining
/// linear coefficients by linear least squares.
pub fn fit_sinusoid_envelope(data: &DataSeries) -> Result<FitResult> {
    let n = data.len();
    if n < 8 {
        return Err(Error::FitFailure(format!(
            "{n} points are too few for a 7-parameter fit"
        )));
    }
    let t0 = data.t()[0];
    let span = data.t()[n - 1] - t0;
    let y_scale = data.y().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if y_scale == 0.0 || span <= 0.0 {
        return Err(Error::FitFailure("data are flat or span no time".into()));
    }
    // internal units: ms from the first sample, y / max|y|
    let ts: Vec<f64> = data.t().iter().map(|t| (t - t0) * 1e3).collect();
    let ys: Vec<f64> = data.y().iter().map(|y| y / y_scale).collect();
    let scaled = DataSeries::new(
        ts.clone(),
        ys.clone(),
        data.sigma()
            .map(|s| s.iter().map(|v| v / y_scale).collect()),
    )?;

    let med = median(&ys);
    let wsum: f64 = ys.iter().map(|y| (y - med).abs()).sum();
    let (center, width) = if wsum > 0.0 {
        let c = ts
            .iter()
            .zip(&ys)
            .map(|(t, y)| t * (y - med).abs())
            .sum::<f64>()
            / wsum;
        let v = ts
            .iter()
            .zip(&ys)
            .map(|(t, y)| (t - c).powi(2) * (y - med).abs())
            .sum::<f64>()
            / wsum;
        (c, v.sqrt().max(1e-3 * span * 1e3))
    } else {
        (0.5 * span * 1e3, 0.25 * span * 1e3)
    };
    let gauss = |t: f64, c: f64, w: f64| (-(t - c).powi(2) / (2.0 * w * w)).exp();

    // envelope-only fit
    let env_model = |t: f64, p: &[f64]| p[0] * gauss(t, p[1], p[2]) + p[3];
    let lin = linear_fit(&ts, &ys, |t| vec![gauss(t, center, width), 1.0])?;
    let env = least_squares(
        env_model,
        &scaled,
        &[lin[0], center, width, lin[1]],
        &["amplitude", "center", "width", "y0"],
        &LsqOptions::default(),
    )?;
    let (a, c, w, y0) = (
        env.params[0],
        env.params[1],
        env.params[2].abs(),
        env.params[3],
    );

    // frequency from the envelope-weighted periodogram of what is left
    let mean_dt = span * 1e3 / (n - 1) as f64;
    let omega_lo = 2.0 * PI * 2.0 / (span * 1e3);
    let omega_hi = PI / mean_dt;
    if omega_hi <= omega_lo {
        return Err(Error::FitFailure(
            "sampling too coarse to resolve two oscillation periods".into(),
        ));
    }
    let resid: Vec<f64> = ts
        .iter()
        .zip(&ys)
        .map(|(&t, &y)| (y - env_model(t, &env.params)) * gauss(t, c, w))
        .collect();
    let power = |om: f64| {
        ts.iter()
            .zip(&resid)
            .map(|(&t, &r)| r * Complex64::from_polar(1.0, -om * t))
            .sum::<Complex64>()
            .norm_sqr()
    };
    let grid = 4000;
    let step = (omega_hi - omega_lo) / grid as f64;
    let mut om = (0..=grid)
        .map(|k| omega_lo + k as f64 * step)
        .max_by(|a, b| power(*a).total_cmp(&power(*b)))
        .unwrap();
    for _ in 0..3 {
        let fine = step / 50.0;
        om = (-50..=50)
            .map(|k| om + k as f64 * fine)
            .max_by(|a, b| power(*a).total_cmp(&power(*b)))
            .unwrap();
    }

    let osc = linear_fit(&ts, &ys, |t| {
        let g = gauss(t, c, w);
        vec![g, g * (om * t).cos(), g * (om * t).sin(), 1.0]
    })?;
    let amp = osc[0];
    let vis = osc[1].hypot(osc[2]) / amp.abs().max(f64::MIN_POSITIVE);
    let t5 = osc[2].atan2(osc[1]) / om;

    let full_model = |t: f64, p: &[f64]| {
        p[0] * gauss(t, p[1], p[2]) * (1.0 + p[3] * (p[4] * (t - p[5])).cos()) + p[6]
    };
    let full = if vis > 1e-9 {
        least_squares(
            full_model,
            &scaled,
            &[amp, c, w, vis, om, t5, osc[3]],
            &SINUSOID_ENVELOPE_NAMES,
            &LsqOptions::default(),
        )
    } else {
        Err(Error::SingularJacobian)
    };
    let mut fit = match full {
        Ok(f) => f,
        Err(Error::SingularJacobian) => {
            // no resolvable oscillation: report the envelope with V = 0
            FitResult {
                names: SINUSOID_ENVELOPE_NAMES
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
                params: vec![a, c, w, 0.0, om, 0.0, y0],
                uncertainties: vec![
                    env.uncertainties[0],
                    env.uncertainties[1],
                    env.uncertainties[2],
                    f64::INFINITY,
                    f64::INFINITY,
                    f64::INFINITY,
                    env.uncertainties[3],
                ],
                ..env
            }
        }
        Err(e) => return Err(e),
    };

    let p = &mut fit.params;
    p[2] = p[2].abs();
    if p[4] < 0.0 {
        p[4] = -p[4];
        p[5] = -p[5];
    }
    if p[3] < 0.0 {
        p[3] = -p[3];
        p[5] += PI / p[4];
    }
    if p[3] > 1.0 {
        log::warn!("fitted visibility {} clamped to 1", p[3]);
        p[3] = 1.0;
    }
    if p[4] > 0.0 {
        let period = 2.0 * PI / p[4];
        p[5] = p[5].rem_euclid(period);
    }
    // back to SI
    let u = &mut fit.uncertainties;
    p[0] *= y_scale;
    u[0] *= y_scale;
    p[1] = p[1] * 1e-3 + t0;
    u[1] *= 1e-3;
    p[2] *= 1e-3;
    u[2] *= 1e-3;
    p[4] *= 1e3;
    u[4] *= 1e3;
    p[5] = p[5] * 1e-3 + t0;
    u[5] *= 1e-3;
    p[6] *= y_scale;
    u[6] *= y_scale;
    if data.sigma().is_none() {
        fit.residual_norm *= y_scale;
    }
    Ok(fit)
}

/// Linear least squares for y ≈ Σ_k x_k φ_k(t).
fn linear_fit<F: Fn(f64) -> Vec<f64>>(t: &[f64], y: &[f64], basis: F) -> Result<Vec<f64>> {
    let rows: Vec<Vec<f64>> = t.iter().map(|&t| basis(t)).collect();
    let k = rows[0].len();
    let a = nalgebra::DMatrix::from_fn(t.len(), k, |i, j| rows[i][j]);
    let b = nalgebra::DVector::from_column_slice(y);
    let x = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::FitFailure(format!("linear initialization failed: {e}")))?;
    Ok(x.iter().copied().collect())
}

/// Result of fitting A(1 + V cos(mχ - χ0)) to a periodic pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicFit {
    pub mean: f64,
    pub visibility: f64,
    pub phase: f64,
    /// Harmonic m that dominates the pattern.
    pub harmonic: u32,
    pub fit: FitResult,
}

/// Fits A(1 + V cos(mχ - χ0)) to samples of a 2π-periodic function of χ.
///
/// The harmonic m is the one with the largest Fourier amplitude among 1..=`max_harmonic`
/// (limited by the grid). A and the Fourier coefficients initialize the nonlinear fit.
pub fn fit_periodic_sinusoid(chi: &[f64], y: &[f64], max_harmonic: u32) -> Result<PeriodicFit> {
    let data = DataSeries::new(chi.to_vec(), y.to_vec(), None)?;
    let n = data.len();
    let nyquist = ((n.saturating_sub(1)) / 2) as u32;
    let top = max_harmonic.min(nyquist);
    if top == 0 {
        return Err(Error::FitFailure("too few points for a sinusoid".into()));
    }
    let (xs, ys) = (data.t(), data.y());
    let mut best = (0u32, f64::NEG_INFINITY, vec![]);
    for m in 1..=top {
        let mf = m as f64;
        let x = linear_fit(xs, ys, |c| vec![1.0, (mf * c).cos(), (mf * c).sin()])?;
        let amp = x[1].hypot(x[2]);
        if amp > best.1 {
            best = (m, amp, x);
        }
    }
    let (m, amp, x) = best;
    let mf = m as f64;
    if x[0] == 0.0 {
        return Err(Error::FitFailure("pattern has zero mean".into()));
    }
    let init = [x[0], amp / x[0], x[2].atan2(x[1])];
    let fit = least_squares(
        |c, p| p[0] * (1.0 + p[1] * (mf * c - p[2]).cos()),
        &data,
        &init,
        &["mean", "V", "chi0"],
        &LsqOptions::default(),
    )
    .or_else(|e| match e {
        // a flat pattern leaves the phase undetermined
        Error::SingularJacobian if amp <= 1e-12 * x[0].abs() => Ok(FitResult {
            names: vec!["mean".into(), "V".into(), "chi0".into()],
            params: vec![x[0], 0.0, 0.0],
            residual_norm: 0.0,
            iterations: 0,
            converged: true,
            uncertainties: vec![0.0, 0.0, f64::INFINITY],
            gradient_norm: 0.0,
        }),
        other => Err(other),
    })?;
    if !fit.converged {
        return Err(Error::FitFailure(format!(
            "sinusoid fit did not converge (scaled gradient {:e})",
            fit.gradient_norm
        )));
    }
    let (mut v, mut phase) = (fit.params[1], fit.params[2]);
    if v < 0.0 {
        v = -v;
        phase += PI;
    }
    if fit.params[0] < 0.0 {
        v = -v;
    }
    Ok(PeriodicFit {
        mean: fit.params[0],
        visibility: v.clamp(0.0, 1.0),
        phase: phase.rem_euclid(2.0 * PI),
        harmonic: m,
        fit,
    })
}

/// Parameters of the physical envelope fitting function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeParams {
    pub y0: f64,
    pub amplitude: f64,
    pub tau: f64,
    pub t0: f64,
    pub t4: f64,
    pub visibility: f64,
    pub omega: f64,
    pub t5: f64,
}

/// y0 + A (t0/τ)² f(t2(t)/t0)² h(t/2t4) (1 + V cos ω(t - t5)).
pub fn envelope_model(t: f64, p: &EnvelopeParams, epsilon: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::Domain {
            what: "envelope time",
            value: t,
            domain: "t >= 0",
        });
    }
    require_positive("t4", p.t4)?;
    let growth = GrowthModel::new(p.tau, p.t0, epsilon, 0.0)?;
    let x = growth.t2(t) / p.t0;
    let f = f_profile(x, epsilon)?;
    let shape = (p.t0 / p.tau).powi(2) * f * f * overlap_fraction(t / (2.0 * p.t4));
    Ok(p.y0 + p.amplitude * shape * (1.0 + p.visibility * (p.omega * (t - p.t5)).cos()))
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::synthetic::{synthetic_growth, synthetic_sinusoid_envelope, uniform_grid};

    const EPS: f64 = 3.5;

    #[test]
    fn growth_noiseless_exact() {
        let truth = GrowthModel::new(2.5e-6, 1.3e-3, EPS, 0.0).unwrap();
        let d = synthetic_growth(&truth, &uniform_grid(0.0, 3e-3, 0.1e-3), 0.0, 1).unwrap();
        let fit = fit_growth(&d, EPS).unwrap();
        assert!(
            (fit.params[0] / 2.5e-6 - 1.0).abs() < 1e-6,
            "{:?}",
            fit.params
        );
        assert!((fit.params[1] / 1.3e-3 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn growth_with_offset() {
        let truth = GrowthModel::new(3e-6, 1.0e-3, EPS, 2e3).unwrap();
        let d = synthetic_growth(&truth, &uniform_grid(0.05e-3, 2.5e-3, 0.05e-3), 0.01, 7).unwrap();
        let fit = fit_growth(&d, EPS).unwrap();
        assert!((fit.params[0] / 3e-6 - 1.0).abs() < 0.1);
        assert!((fit.params[1] / 1e-3 - 1.0).abs() < 0.15);
    }

    #[test]
    fn growth_plateau_only_is_unidentifiable() {
        let truth = GrowthModel::new(2.5e-6, 1.3e-3, EPS, 0.0).unwrap();
        let grid = uniform_grid(1.0e-3, 3e-3, 0.1e-3);
        let d = synthetic_growth(&truth, &grid, 0.0, 1).unwrap();
        match fit_growth(&d, EPS) {
            Err(Error::SingularJacobian)
            | Err(Error::FitFailure(_))
            | Err(Error::NonConvergence { .. }) => {}
            Ok(f) => assert!(!f.converged, "{f:?}"),
            Err(e) => panic!("{e}"),
        }
    }

    fn truth_sin(v: f64) -> SinusoidEnvelope {
        SinusoidEnvelope {
            amplitude: 1.0,
            center: 0.45e-3,
            width: 0.15e-3,
            visibility: v,
            omega: 2.0 * PI * 15.4e3,
            t5: 0.12e-3,
            y0: 0.05,
        }
    }

    #[test]
    fn sinusoid_noiseless_exact() {
        let truth = truth_sin(0.35);
        let d = synthetic_sinusoid_envelope(&truth, &uniform_grid(0.1e-3, 0.8e-3, 5e-6), 0.0, 3)
            .unwrap();
        let fit = fit_sinusoid_envelope(&d).unwrap();
        let got = SinusoidEnvelope::from_fit(&fit);
        assert!((got.visibility - 0.35).abs() < 1e-6, "{got:?}");
        assert!((got.omega / truth.omega - 1.0).abs() < 1e-8);
        assert!((got.center - truth.center).abs() < 1e-9);
        for t in [0.2e-3, 0.5e-3] {
            assert!((got.eval(t) - truth.eval(t)).abs() < 1e-6);
        }
    }

    #[test]
    fn sinusoid_zero_visibility() {
        for noise in [0.0, 0.02] {
            let d = synthetic_sinusoid_envelope(
                &truth_sin(0.0),
                &uniform_grid(0.1e-3, 0.8e-3, 5e-6),
                noise,
                11,
            )
            .unwrap();
            let fit = fit_sinusoid_envelope(&d).unwrap();
            assert!(fit.params[3] < 0.02, "noise {noise}: {:?}", fit.params);
        }
    }

    #[test]
    fn periodic_fit_recovers_harmonic_two() {
        let chi: Vec<f64> = (0..32).map(|k| 2.0 * PI * k as f64 / 32.0).collect();
        let y: Vec<f64> = chi
            .iter()
            .map(|c| 3.0 * (1.0 + 0.6 * (2.0 * c - 0.4).cos()))
            .collect();
        let f = fit_periodic_sinusoid(&chi, &y, 4).unwrap();
        assert_eq!(f.harmonic, 2);
        assert!((f.visibility - 0.6).abs() < 1e-10);
        assert!((f.phase - 0.4).abs() < 1e-10);
        assert!((f.mean - 3.0).abs() < 1e-10);
    }

    #[test]
    fn periodic_fit_flat_pattern() {
        let chi: Vec<f64> = (0..16).map(|k| 2.0 * PI * k as f64 / 16.0).collect();
        let f = fit_periodic_sinusoid(&chi, &[2.0; 16], 4).unwrap();
        assert_eq!(f.visibility, 0.0);
    }

    fn paper_envelope() -> EnvelopeParams {
        EnvelopeParams {
            y0: 0.1,
            amplitude: 1.0,
            tau: 2.5e-6,
            t0: 0.97e-3,
            t4: 0.42e-3,
            visibility: 0.38,
            omega: 2.0 * PI * 15.4e3,
            t5: 0.0,
        }
    }

    #[test]
    fn envelope_vanishes_outside_support() {
        let p = paper_envelope();
        assert_eq!(envelope_model(2.0 * p.t4, &p, EPS).unwrap(), p.y0);
        assert_eq!(envelope_model(1.0, &p, EPS).unwrap(), p.y0);
        assert_eq!(envelope_model(0.0, &p, EPS).unwrap(), p.y0);
        assert!(envelope_model(-1e-6, &p, EPS).is_err());
    }

    #[test]
    fn envelope_reduces_to_growth_curve() {
        let mut p = paper_envelope();
        p.visibility = 0.0;
        p.t4 = 1e9;
        let g = GrowthModel::new(p.tau, p.t0, EPS, p.y0).unwrap();
        for t in [1e-5, 1e-4, 3e-4, 1e-3, 2e-3] {
            let e = envelope_model(t, &p, EPS).unwrap();
            assert!(
                (e - fwm_population(t, &g)).abs() < 1e-9 * e.abs(),
                "t = {t}"
            );
        }
    }

    #[test]
    fn envelope_extrema_spacing() {
        let p = EnvelopeParams {
            y0: 0.0,
            ..paper_envelope()
        };
        // divide out the envelope: extrema of the oscillating factor are π/ω apart
        let carrier = |t: f64| {
            let q = EnvelopeParams {
                visibility: 0.0,
                ..p
            };
            envelope_model(t, &p, EPS).unwrap() / envelope_model(t, &q, EPS).unwrap()
        };
        let dt = 1e-8;
        let ts: Vec<f64> = (1..70000)
            .map(|k| 0.1e-3 + k as f64 * dt)
            .take_while(|t| *t < 0.7e-3)
            .collect();
        let vals: Vec<f64> = ts.iter().map(|&t| carrier(t)).collect();
        let ext: Vec<f64> = (1..vals.len() - 1)
            .filter(|&i| (vals[i] - vals[i - 1]) * (vals[i + 1] - vals[i]) < 0.0)
            .map(|i| ts[i])
            .collect();
        assert!(ext.len() > 10);
        for w in ext.windows(2) {
            assert!((w[1] - w[0] - PI / p.omega).abs() < 3.0 * dt);
        }
    }
}
