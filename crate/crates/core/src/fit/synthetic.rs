//! Seeded synthetic data for fit round trips.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{DataSeries, SinusoidEnvelope};
use crate::error::{require_non_negative, require_positive, Result};
use crate::fwm::{fwm_population, GrowthModel};

/// `start, start + step, …` up to and including `stop` (within half a step).
pub fn uniform_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if step.is_nan() || step <= 0.0 || stop < start {
        return vec![];
    }
    let n = ((stop - start) / step + 0.5).floor() as usize;
    (0..=n).map(|k| start + k as f64 * step).collect()
}

/// Growth curve samples with multiplicative Gaussian noise of relative size `rel_noise`.
pub fn synthetic_growth(
    model: &GrowthModel,
    times: &[f64],
    rel_noise: f64,
    seed: u64,
) -> Result<DataSeries> {
    require_non_negative("relative noise", rel_noise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = times
        .iter()
        .map(|&t| {
            let z: f64 = StandardNormal.sample(&mut rng);
            fwm_population(t, model) * (1.0 + rel_noise * z)
        })
        .collect();
    DataSeries::new(times.to_vec(), y, None)
}

/// Sinusoid-with-envelope samples with additive Gaussian noise of size `rel_noise · amplitude`.
pub fn synthetic_sinusoid_envelope(
    truth: &SinusoidEnvelope,
    times: &[f64],
    rel_noise: f64,
    seed: u64,
) -> Result<DataSeries> {
    require_non_negative("relative noise", rel_noise)?;
    require_positive("width", truth.width)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = times
        .iter()
        .map(|&t| {
            let z: f64 = StandardNormal.sample(&mut rng);
            truth.eval(t) + rel_noise * truth.amplitude.abs() * z
        })
        .collect();
    DataSeries::new(times.to_vec(), y, None)
}
