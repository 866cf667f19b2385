use std::f64::consts::PI;

use rayon::prelude::*;

use super::{build_initial_state, evolve, retrieve, InitialConditionSpec, RetrievalParams, Scheme};
use crate::error::{Error, Result};
use crate::fit::{fit_periodic_sinusoid, PeriodicFit};

/// Highest harmonic of χ considered when locating the dominant fringe.
const MAX_HARMONIC: u32 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityScan {
    /// (χ, N_d) in grid order.
    pub pattern: Vec<(f64, f64)>,
    pub visibility: f64,
    pub fit: PeriodicFit,
}

/// Retrieved downward photon number as a function of χ, with the fringe visibility from a
/// sinusoid fit at the dominant harmonic.
pub fn visibility_scan(
    spec_base: &InitialConditionSpec,
    params: &RetrievalParams,
    n_max: usize,
    chi_grid: &[f64],
) -> Result<VisibilityScan> {
    if chi_grid.len() < 16 {
        return Err(Error::InvalidParameter {
            name: "chi grid",
            reason: format!("needs at least 16 points, got {}", chi_grid.len()),
        });
    }
    let lo = chi_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = chi_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spacing = (hi - lo) / (chi_grid.len() - 1) as f64;
    if hi - lo + spacing < 2.0 * PI * (1.0 - 1e-9) {
        return Err(Error::InvalidParameter {
            name: "chi grid",
            reason: format!("must span a full 2π period, spans {:.4}", hi - lo),
        });
    }
    let n_d: Vec<f64> = chi_grid
        .par_iter()
        .map(|&chi| {
            let s = build_initial_state(&spec_base.with_chi(chi), n_max)?;
            Ok(retrieve(&s, params)?.n_d)
        })
        .collect::<Result<_>>()?;
    let fit = fit_periodic_sinusoid(chi_grid, &n_d, MAX_HARMONIC)?;
    Ok(VisibilityScan {
        pattern: chi_grid.iter().copied().zip(n_d).collect(),
        visibility: fit.visibility,
        fit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateRow {
    pub signal1_on: bool,
    pub signal2_on: bool,
    pub n_d: f64,
    pub n_r: f64,
}

/// Retrieved light for the four input combinations, ordered (off,off), (off,on), (on,off), (on,on).
pub fn gate_truth_table(
    spec_base: &InitialConditionSpec,
    params: &RetrievalParams,
    n_max: usize,
) -> Result<[GateRow; 4]> {
    if spec_base.scheme != Scheme::BasicGate {
        log::warn!(
            "gate truth table evaluated with the {} scheme",
            spec_base.scheme
        );
    }
    let inputs = [(false, false), (false, true), (true, false), (true, true)];
    let rows: Vec<GateRow> = inputs
        .par_iter()
        .map(|&(s1, s2)| {
            let s = build_initial_state(&spec_base.with_inputs(s1, s2), n_max)?;
            let end = retrieve(&s, params)?;
            Ok(GateRow {
                signal1_on: s1,
                signal2_on: s2,
                n_d: end.n_d,
                n_r: end.n_r,
            })
        })
        .collect::<Result<_>>()?;
    Ok([rows[0], rows[1], rows[2], rows[3]])
}

/// |N_d(with phase factors) - N_d(unity)| / N_d(unity) after `t_end` seconds.
pub fn phase_factor_validation(
    spec: &InitialConditionSpec,
    params: &RetrievalParams,
    n_max: usize,
    t_end: f64,
) -> Result<f64> {
    if params.g_n < 100.0 * params.omega_r {
        log::warn!(
            "g_N = {:e} rad/s is not large against omega_r = {:e} rad/s; unity phase factors are not justified",
            params.g_n,
            params.omega_r
        );
    }
    let s = build_initial_state(spec, n_max)?;
    let run = |phase: bool| -> Result<f64> {
        let p = RetrievalParams {
            use_phase_factors: phase,
            ..*params
        };
        let traj = evolve(&s, &p, t_end, t_end)?;
        Ok(traj.last().expect("trajectory has samples").n_d)
    };
    let with = run(true)?;
    let unity = run(false)?;
    if with == unity {
        return Ok(0.0);
    }
    Ok((with - unity).abs() / unity.abs())
}
