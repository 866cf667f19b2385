//! Mean-field plane-wave model of Raman amplification of matter waves.
//!
//! Atoms sit on a truncated momentum ladder: `b_n` is the amplitude of |2, k + nq⟩ and
//! `c_n` of |1, nq⟩ for `n ∈ [-n_max, n_max]`. Two damped signal modes `a_d` (downward)
//! and `a_r` (rightward) carry the retrieved light. Internally the equations are written
//! in the dimensionless time `g_N t`.

mod model;
mod propagate;
mod scan;

pub use model::{AdiabaticSystem, FullSystem};
pub use propagate::{evolve, retrieve, Sample, Trajectory, RETRIEVAL_MAX_TIMESCALES};
pub use scan::{
    gate_truth_table, phase_factor_validation, visibility_scan, GateRow, VisibilityScan,
};

use num_complex::Complex64;

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::optics::DampingRates;

pub const DEFAULT_CUTOFF: usize = 6;
/// Edge population above which the ladder truncation is considered unreliable.
pub const CUTOFF_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldState {
    pub n_max: usize,
    pub a_d: Complex64,
    pub a_r: Complex64,
    /// `b[n + n_max]` is b_n.
    pub b: Vec<Complex64>,
    /// `c[n + n_max]` is c_n.
    pub c: Vec<Complex64>,
    /// Photons emitted downward so far (absolute number).
    pub n_d: f64,
    /// Photons emitted rightward so far (absolute number).
    pub n_r: f64,
}

impl MeanFieldState {
    /// All atoms in |1, 0⟩.
    pub fn condensate(n_max: usize) -> Result<Self> {
        if n_max < 2 {
            return Err(Error::InvalidParameter {
                name: "cutoff",
                reason: format!("ladder cutoff must be at least 2, got {n_max}"),
            });
        }
        let len = 2 * n_max + 1;
        let mut c = vec![Complex64::new(0.0, 0.0); len];
        c[n_max] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_max,
            a_d: Complex64::new(0.0, 0.0),
            a_r: Complex64::new(0.0, 0.0),
            b: vec![Complex64::new(0.0, 0.0); len],
            c,
            n_d: 0.0,
            n_r: 0.0,
        })
    }

    fn index(&self, n: i64) -> Option<usize> {
        let m = self.n_max as i64;
        (-m..=m).contains(&n).then(|| (n + m) as usize)
    }

    /// b_n, zero outside the ladder.
    pub fn b(&self, n: i64) -> Complex64 {
        self.index(n)
            .map_or(Complex64::new(0.0, 0.0), |i| self.b[i])
    }

    /// c_n, zero outside the ladder.
    pub fn c(&self, n: i64) -> Complex64 {
        self.index(n)
            .map_or(Complex64::new(0.0, 0.0), |i| self.c[i])
    }

    pub fn set_b(&mut self, n: i64, value: Complex64) {
        let i = self.index(n).expect("ladder index in range");
        self.b[i] = value;
    }

    pub fn set_c(&mut self, n: i64, value: Complex64) {
        let i = self.index(n).expect("ladder index in range");
        self.c[i] = value;
    }

    /// Σ(|b_n|² + |c_n|²).
    pub fn atom_norm(&self) -> f64 {
        self.b.iter().chain(&self.c).map(|z| z.norm_sqr()).sum()
    }

    pub fn population_2(&self) -> f64 {
        self.b.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn population_1(&self) -> f64 {
        self.c.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest of |b_n|² + |c_n|² at n = ±n_max.
    pub fn edge_population(&self) -> f64 {
        let last = 2 * self.n_max;
        (self.b[0].norm_sqr() + self.c[0].norm_sqr())
            .max(self.b[last].norm_sqr() + self.c[last].norm_sqr())
    }

    /// |a_d|² + |a_r|² + (N_d + N_r)/N - Σ|c_n|²: constant along exact trajectories.
    pub fn photon_bookkeeping(&self, atom_number: f64) -> f64 {
        self.a_d.norm_sqr() + self.a_r.norm_sqr() + (self.n_d + self.n_r) / atom_number
            - self.population_1()
    }

    pub fn is_finite(&self) -> bool {
        let ok = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        ok(&self.a_d)
            && ok(&self.a_r)
            && self.b.iter().all(ok)
            && self.c.iter().all(ok)
            && self.n_d.is_finite()
            && self.n_r.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    /// Fields slaved to the atoms (∂_t a = 0); explicit adaptive steps.
    #[default]
    AdiabaticElimination,
    /// Full field dynamics with an implicit Radau solver.
    StiffAdaptive,
}

impl std::str::FromStr for Integrator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "adiabatic" | "adiabatic-elimination" => Ok(Self::AdiabaticElimination),
            "stiff" | "stiff-adaptive" => Ok(Self::StiffAdaptive),
            other => Err(format!(
                "unknown integrator `{other}` (expected `adiabatic` or `stiff`)"
            )),
        }
    }
}

impl std::fmt::Display for Integrator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::AdiabaticElimination => "adiabatic",
            Self::StiffAdaptive => "stiff",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievalParams {
    /// Collective coupling g sqrt(N), rad/s.
    pub g_n: f64,
    pub gamma_d: f64,
    pub gamma_r: f64,
    /// Recoil frequency, rad/s.
    pub omega_r: f64,
    pub delta_d: f64,
    pub delta_r: f64,
    /// N, converts per-atom tallies to photon numbers.
    pub atom_number: f64,
    pub use_phase_factors: bool,
    pub integrator: Integrator,
    pub rtol: f64,
}

impl RetrievalParams {
    /// Parameters from the dimensionless ratios γ_d/g_N and γ_r/γ_d.
    pub fn from_ratios(
        g_n: f64,
        gamma_d_over_g_n: f64,
        gamma_ratio: f64,
        omega_r: f64,
        atom_number: f64,
    ) -> Result<Self> {
        require_positive("g_N", g_n)?;
        require_positive("gamma_d/g_N", gamma_d_over_g_n)?;
        require_positive("gamma_r/gamma_d", gamma_ratio)?;
        let gamma_d = gamma_d_over_g_n * g_n;
        Ok(Self {
            g_n,
            gamma_d,
            gamma_r: gamma_ratio * gamma_d,
            omega_r,
            delta_d: 0.0,
            delta_r: 0.0,
            atom_number,
            use_phase_factors: false,
            integrator: Integrator::default(),
            rtol: 1e-10,
        })
    }

    pub fn from_damping(
        g_n: f64,
        damping: DampingRates,
        omega_r: f64,
        atom_number: f64,
    ) -> Result<Self> {
        Self::from_ratios(
            g_n,
            damping.gamma_d / g_n,
            damping.gamma_r / damping.gamma_d,
            omega_r,
            atom_number,
        )
    }

    pub fn validate(&self) -> Result<()> {
        require_non_negative("g_N", self.g_n)?;
        require_positive("gamma_d", self.gamma_d)?;
        require_positive("gamma_r", self.gamma_r)?;
        require_non_negative("omega_r", self.omega_r)?;
        require_positive("atom number", self.atom_number)?;
        require_positive("rtol", self.rtol)?;
        if !self.delta_d.is_finite() || !self.delta_r.is_finite() {
            return Err(Error::InvalidParameter {
                name: "two-photon detuning",
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }

    /// γ_d/g_N² in seconds: the time for retrieved light to leave.
    pub fn emission_timescale(&self) -> f64 {
        self.gamma_d / (self.g_n * self.g_n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Both Raman pathways of the second pulse are driven.
    #[default]
    Extended,
    /// The second pulse only transfers |1,0⟩ → |2,k+q⟩.
    BasicGate,
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "extended" => Ok(Self::Extended),
            "basic-gate" | "basic" => Ok(Self::BasicGate),
            other => Err(format!(
                "unknown scheme `{other}` (expected `extended` or `basic-gate`)"
            )),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Extended => "extended",
            Self::BasicGate => "basic-gate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialConditionSpec {
    pub theta1: f64,
    pub theta2: f64,
    pub beta: f64,
    /// χ = -2 ω_r t_FWM.
    pub chi: f64,
    pub scheme: Scheme,
    pub signal1_on: bool,
    pub signal2_on: bool,
}

impl InitialConditionSpec {
    pub fn new(theta1: f64, theta2: f64, beta: f64, chi: f64) -> Self {
        Self {
            theta1,
            theta2,
            beta,
            chi,
            scheme: Scheme::Extended,
            signal1_on: true,
            signal2_on: true,
        }
    }

    /// ϑ₁ = ϑ₂ = π/2, β = √2.
    pub fn nominal() -> Self {
        Self::new(
            std::f64::consts::FRAC_PI_2,
            std::f64::consts::FRAC_PI_2,
            std::f64::consts::SQRT_2,
            0.0,
        )
    }

    pub fn with_chi(mut self, chi: f64) -> Self {
        self.chi = chi;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_inputs(mut self, signal1_on: bool, signal2_on: bool) -> Self {
        self.signal1_on = signal1_on;
        self.signal2_on = signal2_on;
        self
    }
}

/// Amplitudes after the two Raman pulses and the FWM dark time.
pub fn build_initial_state(spec: &InitialConditionSpec, n_max: usize) -> Result<MeanFieldState> {
    for (name, v) in [
        ("theta1", spec.theta1),
        ("theta2", spec.theta2),
        ("beta", spec.beta),
        ("chi", spec.chi),
    ] {
        if !v.is_finite() {
            return Err(Error::InvalidParameter {
                name,
                reason: format!("must be finite, got {v}"),
            });
        }
    }
    let mut s = MeanFieldState::condensate(n_max)?;
    let th1 = if spec.signal1_on { spec.theta1 } else { 0.0 };
    let th2 = if spec.signal2_on { spec.theta2 } else { 0.0 };
    let (s1, c1) = (0.5 * th1).sin_cos();
    let (s2, c2) = (0.5 * th2).sin_cos();
    let phase = Complex64::from_polar(1.0, spec.chi);
    let phase2 = phase * phase;
    let i = Complex64::i();
    let beta = spec.beta;

    let c0 = Complex64::new(c1 * c2, 0.0);
    let b1 = phase2 * c1 * s2;
    match spec.scheme {
        Scheme::Extended => {
            let b0 = phase * s1 * c2;
            let cm1 = -phase * s1 * s2;
            s.set_b(-1, -i * beta * c0.conj() * cm1 * b0);
            s.set_c(1, -i * beta * b0.conj() * b1 * c0);
            s.set_c(0, c0);
            s.set_b(0, b0);
            s.set_c(-1, cm1);
            s.set_b(1, b1);
        }
        Scheme::BasicGate => {
            let b0 = phase * s1;
            s.set_c(1, -i * beta * b0.conj() * b1 * c0);
            s.set_c(0, c0);
            s.set_b(0, b0);
            s.set_b(1, b1);
        }
    }
    Ok(s)
}

/// g_N (c₀* b₋₁ + c₁* b₀): the two-pathway source of a_d before any depletion.
pub fn short_pulse_interference_rate(state: &MeanFieldState, g_n: f64) -> Complex64 {
    g_n * (state.c(0).conj() * state.b(-1) + state.c(1).conj() * state.b(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

    #[test]
    fn nominal_c1_population() {
        let s = build_initial_state(&InitialConditionSpec::nominal(), 6).unwrap();
        assert!((s.c(1).norm_sqr() - 1.0 / 32.0).abs() < 1e-15);
    }

    #[test]
    fn no_pulses_is_pristine() {
        let s = build_initial_state(&InitialConditionSpec::new(0.0, 0.0, SQRT_2, 0.3), 6).unwrap();
        assert_eq!(s, MeanFieldState::condensate(6).unwrap());
    }

    #[test]
    fn first_pulse_off_kills_fwm_product() {
        for beta in [0.0, 0.5, 3.0] {
            let s = build_initial_state(&InitialConditionSpec::new(0.0, FRAC_PI_2, beta, 1.1), 6)
                .unwrap();
            assert_eq!(s.c(1), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn extended_population_accounting() {
        let spec = InitialConditionSpec::new(0.35 * PI, 0.65 * PI, SQRT_2, 0.7);
        let s = build_initial_state(&spec, 6).unwrap();
        let extra = s.b(-1).norm_sqr() + s.c(1).norm_sqr();
        assert!((s.atom_norm() - 1.0 - extra).abs() < 1e-14);
    }

    #[test]
    fn basic_gate_has_no_minus_one_pathway() {
        let s = build_initial_state(
            &InitialConditionSpec::nominal().with_scheme(Scheme::BasicGate),
            6,
        )
        .unwrap();
        assert_eq!(s.c(-1), Complex64::new(0.0, 0.0));
        assert_eq!(s.b(-1), Complex64::new(0.0, 0.0));
        assert!((s.b(0).norm_sqr() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gate_inputs_switch_off_pulses() {
        let base = InitialConditionSpec::nominal().with_scheme(Scheme::BasicGate);
        let off_on = build_initial_state(&base.with_inputs(false, true), 6).unwrap();
        assert_eq!(off_on.c(1), Complex64::new(0.0, 0.0));
        let on_off = build_initial_state(&base.with_inputs(true, false), 6).unwrap();
        assert_eq!(on_off.c(1), Complex64::new(0.0, 0.0));
        assert_eq!(on_off.b(1), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn interference_rate_extrema_spacing() {
        let n = 720;
        let rates: Vec<f64> = (0..n)
            .map(|k| {
                let chi = 2.0 * PI * k as f64 / n as f64;
                let s =
                    build_initial_state(&InitialConditionSpec::nominal().with_chi(chi), 6).unwrap();
                short_pulse_interference_rate(&s, 1.0).norm()
            })
            .collect();
        let maxima: Vec<usize> = (0..n)
            .filter(|&k| rates[k] > rates[(k + n - 1) % n] && rates[k] >= rates[(k + 1) % n])
            .collect();
        assert_eq!(maxima.len(), 2);
        let spacing = (maxima[1] - maxima[0]) as f64 * 2.0 * PI / n as f64;
        assert!((spacing - PI).abs() < 1e-9);
    }

    #[test]
    fn interference_rate_trivial_cases() {
        let mut s = MeanFieldState::condensate(4).unwrap();
        assert_eq!(
            short_pulse_interference_rate(&s, 2.0),
            Complex64::new(0.0, 0.0)
        );
        s.set_b(-1, Complex64::new(0.1, 0.0));
        s.set_b(0, Complex64::new(0.1, 0.0));
        s.set_c(1, Complex64::new(-1.0, 0.0));
        assert!(short_pulse_interference_rate(&s, 2.0).norm() < 1e-16);
    }

    #[test]
    fn cutoff_must_hold_the_initial_state() {
        assert!(build_initial_state(&InitialConditionSpec::nominal(), 1).is_err());
    }
}
