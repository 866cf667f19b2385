//! Light-field quantities: intensities, Rabi frequencies, pulse areas, the retrieval
//! coupling, damping rates, and the interference frequency set by the beam geometry.

use std::f64::consts::PI;

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::fwm::ThomasFermiCloud;
use crate::physical::{BeamGeometry, CloudGeometry, PhysicalConstants};

/// Product of the two dipole matrix elements in units of d_cyc, for each excited state.
const DIPOLE_PRODUCT: f64 = 0.144_337_567_297_406_43; // √3/12

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserPulseSpec {
    /// W
    pub power: f64,
    /// 1/e² intensity radius, m
    pub waist: f64,
    /// Detuning from the |2> → |1'> transition, rad/s.
    pub detuning: f64,
    /// s
    pub duration: f64,
}

impl LaserPulseSpec {
    pub fn new(power: f64, waist: f64, detuning: f64, duration: f64) -> Result<Self> {
        require_non_negative("laser.power", power)?;
        require_positive("laser.waist", waist)?;
        require_non_negative("laser.duration", duration)?;
        if !detuning.is_finite() {
            return Err(Error::InvalidParameter {
                name: "laser.detuning",
                reason: "must be finite".into(),
            });
        }
        Ok(Self {
            power,
            waist,
            detuning,
            duration,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intensity {
    /// Peak intensity, W/m².
    pub intensity: f64,
    /// Field amplitude, V/m.
    pub field: f64,
}

/// Peak intensity I = 2P/(πw²) and field amplitude E = sqrt(2I/(cε₀)).
pub fn intensity(pulse: &LaserPulseSpec, constants: &PhysicalConstants) -> Intensity {
    let i = 2.0 * pulse.power / (PI * pulse.waist * pulse.waist);
    Intensity {
        intensity: i,
        field: (2.0 * i / (constants.light_speed * constants.vacuum_permittivity)).sqrt(),
    }
}

/// Rabi frequency the light would have on the closed D2 cycling transition, Γ sqrt(I/2I_sat).
pub fn cycling_rabi(intensity: f64, constants: &PhysicalConstants) -> f64 {
    constants.gamma_excited * (intensity.max(0.0) / (2.0 * constants.i_sat)).sqrt()
}

/// Cycling-transition Rabi frequency from a field amplitude, d_cyc E/ħ.
pub fn cycling_rabi_from_field(field: f64, constants: &PhysicalConstants) -> f64 {
    constants.d_cyc * field / constants.hbar
}

/// The two-level bracket 1/Δ - 1/(Δ - Δ_HFS) summing both excited hyperfine states.
pub fn detuning_bracket(delta: f64, constants: &PhysicalConstants) -> Result<f64> {
    let other = delta - constants.delta_hfs;
    if delta == 0.0 || other == 0.0 || !delta.is_finite() {
        return Err(Error::Pole { detuning: delta });
    }
    Ok(1.0 / delta - 1.0 / other)
}

/// Effective two-photon Rabi frequency (Ω_s Ω_c / 2)(√3/12)(1/Δ - 1/(Δ - Δ_HFS)).
pub fn effective_rabi(
    omega_s: f64,
    omega_c: f64,
    delta: f64,
    constants: &PhysicalConstants,
) -> Result<f64> {
    Ok(0.5 * omega_s * omega_c * DIPOLE_PRODUCT * detuning_bracket(delta, constants)?)
}

/// Pulse area of a Raman pulse; the control pulse carries detuning and duration.
pub fn pulse_area(
    signal: &LaserPulseSpec,
    control: &LaserPulseSpec,
    constants: &PhysicalConstants,
) -> Result<f64> {
    let omega_s = cycling_rabi(intensity(signal, constants).intensity, constants);
    let omega_c = cycling_rabi(intensity(control, constants).intensity, constants);
    Ok(effective_rabi(omega_s, omega_c, control.detuning, constants)? * control.duration)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    /// Single-atom retrieval coupling, rad/s.
    pub g: f64,
    /// Collective coupling g sqrt(N), rad/s.
    pub g_n: f64,
    /// Vacuum field of one signal photon in the condensate volume, V/m.
    pub signal_vacuum_field: f64,
    pub omega_cyc_signal: f64,
    pub omega_cyc_control: f64,
}

/// Retrieval coupling g = Ω_eff with a one-photon signal field sqrt(ħω/(2ε₀V)), where the
/// quantization volume is taken to be the Thomas-Fermi volume.
pub fn retrieval_coupling(
    control: &LaserPulseSpec,
    constants: &PhysicalConstants,
    cloud: &ThomasFermiCloud,
    atom_number: f64,
) -> Result<Coupling> {
    require_positive("cloud volume", cloud.volume)?;
    require_non_negative("atom number", atom_number)?;
    let field = (constants.hbar * constants.signal_angular_frequency()
        / (2.0 * constants.vacuum_permittivity * cloud.volume))
        .sqrt();
    let omega_s = cycling_rabi_from_field(field, constants);
    let omega_c = cycling_rabi(intensity(control, constants).intensity, constants);
    let g = effective_rabi(omega_s, omega_c, control.detuning, constants)?;
    Ok(Coupling {
        g,
        g_n: g * atom_number.sqrt(),
        signal_vacuum_field: field,
        omega_cyc_signal: omega_s,
        omega_cyc_control: omega_c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampingRates {
    pub gamma_d: f64,
    pub gamma_r: f64,
}

/// γ_d = c/R_y and γ_r = ε γ_d: light leaves the cloud after one transit.
pub fn damping_rates(constants: &PhysicalConstants, geometry: &CloudGeometry) -> DampingRates {
    let gamma_d = constants.light_speed / geometry.radii()[1];
    DampingRates {
        gamma_d,
        gamma_r: geometry.aspect_ratio() * gamma_d,
    }
}

/// Interference angular frequency ω = (ΔE₂ - ΔE₁)/ħ = (ħ/m)(q² - k·q).
pub fn oscillation_frequency(constants: &PhysicalConstants, beams: &BeamGeometry) -> f64 {
    let ks2 = beams.k_signal() * beams.k_signal();
    constants.hbar / constants.atom_mass * ks2 * (beams.q_sq_ratio() - beams.qk_ratio())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderFrequencies {
    pub omega_b: f64,
    pub omega_c: f64,
    pub delta_d: f64,
    pub delta_r: f64,
}

/// Kinetic frequencies of |2, k+nq> and |1, nq> in the rectangular geometry and the
/// phase-factor detunings of the two emission channels.
pub fn ladder_frequencies(n: i64, omega_r: f64, delta_d: f64, delta_r: f64) -> LadderFrequencies {
    let nf = n as f64;
    LadderFrequencies {
        omega_b: 2.0 * (nf * nf + 1.0) * omega_r,
        omega_c: 2.0 * nf * nf * omega_r,
        delta_d: delta_d - 4.0 * nf * omega_r,
        delta_r: delta_r + 2.0 * omega_r,
    }
}

/// Laser powers, waists, detunings and durations of the three pulses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserSettings {
    pub power_s1: f64,
    pub power_s2: f64,
    pub power_c1: f64,
    pub power_c2: f64,
    pub power_c3: f64,
    /// Signal waist, shared by pulses 1 and 2.
    pub waist_s: f64,
    /// Control waist of pulses 1 and 3.
    pub waist_c1: f64,
    pub waist_c2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub duration1: f64,
    pub duration2: f64,
}

impl Default for LaserSettings {
    fn default() -> Self {
        Self {
            power_s1: 1e-6,
            power_s2: 1e-6,
            power_c1: 5e-6,
            power_c2: 75e-6,
            power_c3: 180e-6,
            waist_s: 0.17e-3,
            waist_c1: 0.32e-3,
            waist_c2: 1.8e-3,
            delta1: 2.0 * PI * 406e6,
            delta2: 2.0 * PI * 406e6,
            delta3: 2.0 * PI * 512e6,
            duration1: 23e-6,
            duration2: 35e-6,
        }
    }
}

impl LaserSettings {
    pub fn signal(&self, pulse: usize) -> Result<LaserPulseSpec> {
        let (power, delta, duration) = match pulse {
            1 => (self.power_s1, self.delta1, self.duration1),
            2 => (self.power_s2, self.delta2, self.duration2),
            _ => {
                return Err(Error::InvalidParameter {
                    name: "pulse",
                    reason: format!("signal light exists only for pulses 1 and 2, not {pulse}"),
                })
            }
        };
        LaserPulseSpec::new(power, self.waist_s, delta, duration)
    }

    pub fn control(&self, pulse: usize) -> Result<LaserPulseSpec> {
        match pulse {
            1 => LaserPulseSpec::new(self.power_c1, self.waist_c1, self.delta1, self.duration1),
            2 => LaserPulseSpec::new(self.power_c2, self.waist_c2, self.delta2, self.duration2),
            // retrieval runs until no light is left; its duration does not enter g
            3 => LaserPulseSpec::new(self.power_c3, self.waist_c1, self.delta3, 0.0),
            _ => Err(Error::InvalidParameter {
                name: "pulse",
                reason: format!("no pulse {pulse}"),
            }),
        }
    }

    /// Raman pulse areas (ϑ₁, ϑ₂).
    pub fn pulse_areas(&self, constants: &PhysicalConstants) -> Result<(f64, f64)> {
        Ok((
            pulse_area(&self.signal(1)?, &self.control(1)?, constants)?,
            pulse_area(&self.signal(2)?, &self.control(2)?, constants)?,
        ))
    }
}

/// Everything the `rabi` table reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiTable {
    pub intensities: [(&'static str, f64); 5],
    pub omega_cyc: [(&'static str, f64); 5],
    pub omega_eff: [f64; 2],
    pub pulse_areas: [f64; 2],
    pub coupling: Coupling,
    pub damping: DampingRates,
}

pub fn rabi_table(
    lasers: &LaserSettings,
    constants: &PhysicalConstants,
    cloud: &ThomasFermiCloud,
) -> Result<RabiTable> {
    let beams = [
        ("s1", lasers.signal(1)?),
        ("s2", lasers.signal(2)?),
        ("c1", lasers.control(1)?),
        ("c2", lasers.control(2)?),
        ("c3", lasers.control(3)?),
    ];
    let intensities = beams.map(|(name, p)| (name, intensity(&p, constants).intensity));
    let omega_cyc = intensities.map(|(name, i)| (name, cycling_rabi(i, constants)));
    let omega_eff = [
        effective_rabi(omega_cyc[0].1, omega_cyc[2].1, lasers.delta1, constants)?,
        effective_rabi(omega_cyc[1].1, omega_cyc[3].1, lasers.delta2, constants)?,
    ];
    let pulse_areas = [
        omega_eff[0] * lasers.duration1,
        omega_eff[1] * lasers.duration2,
    ];
    let coupling = retrieval_coupling(
        &lasers.control(3)?,
        constants,
        cloud,
        cloud.geometry.coupling_atom_number(),
    )?;
    Ok(RabiTable {
        intensities,
        omega_cyc,
        omega_eff,
        pulse_areas,
        coupling,
        damping: damping_rates(constants, &cloud.geometry),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physical::{default_experiment_config, recoil_quantities};
    use proptest::prelude::*;

    const MHZ: f64 = 2.0 * PI * 1e6;

    #[test]
    fn dipole_factor() {
        assert!((DIPOLE_PRODUCT - 3f64.sqrt() / 12.0).abs() <= f64::EPSILON * DIPOLE_PRODUCT);
    }

    #[test]
    fn retrieval_beam_intensity() {
        let k = PhysicalConstants::default();
        let p = LaserPulseSpec::new(180e-6, 0.32e-3, 0.0, 0.0).unwrap();
        let i = intensity(&p, &k);
        // 2 * 180 µW / (π (0.32 mm)²) = 111.9 mW/cm² = 1119 W/m²
        assert!((i.intensity - 1119.0).abs() < 1.0, "{}", i.intensity);
        let e = (2.0 * i.intensity / (k.light_speed * k.vacuum_permittivity)).sqrt();
        assert_eq!(i.field, e);
        let zero = LaserPulseSpec::new(0.0, 0.32e-3, 0.0, 0.0).unwrap();
        assert_eq!(intensity(&zero, &k).intensity, 0.0);
        let wide = LaserPulseSpec::new(180e-6, 0.64e-3, 0.0, 0.0).unwrap();
        assert!((intensity(&wide, &k).intensity * 4.0 - i.intensity).abs() < 1e-9);
    }

    #[test]
    fn cycling_rabi_values() {
        let k = PhysicalConstants::default();
        assert!((cycling_rabi(2.0 * k.i_sat, &k) - k.gamma_excited).abs() < 1e-6);
        assert_eq!(cycling_rabi(0.0, &k), 0.0);
        // Γ sqrt(1119/32) / 2π ≈ 36 MHz
        let w = cycling_rabi(1119.0, &k) / MHZ;
        assert!((w - 36.0).abs() < 1.0, "{w}");
    }

    #[test]
    fn effective_rabi_poles_and_limits() {
        let k = PhysicalConstants::default();
        assert_eq!(
            effective_rabi(1.0, 1.0, 0.0, &k),
            Err(Error::Pole { detuning: 0.0 })
        );
        assert!(matches!(
            effective_rabi(1.0, 1.0, k.delta_hfs, &k),
            Err(Error::Pole { .. })
        ));
        assert!(effective_rabi(1.0, 1.0, 1e30, &k).unwrap().abs() < 1e-29);
        let b = detuning_bracket(k.delta_hfs / 2.0, &k).unwrap();
        assert!((b - 4.0 / k.delta_hfs).abs() < 1e-12 * b);
    }

    #[test]
    fn default_pulse_areas() {
        let k = PhysicalConstants::default();
        let (t1, t2) = LaserSettings::default().pulse_areas(&k).unwrap();
        assert!((t1 / PI - 0.49).abs() / 0.49 < 0.05, "{}", t1 / PI);
        assert!((t2 / PI - 0.51).abs() / 0.51 < 0.05, "{}", t2 / PI);
    }

    #[test]
    fn coupling_chain() {
        let (k, g, _) = default_experiment_config();
        let cloud = ThomasFermiCloud::new(g);
        let c3 = LaserSettings::default().control(3).unwrap();
        let c = retrieval_coupling(&c3, &k, &cloud, 1e6).unwrap();
        assert!((c.g / MHZ - 0.6).abs() / 0.6 < 0.15, "{}", c.g / MHZ);
        assert!((c.g_n / (1e3 * MHZ) - 0.6).abs() / 0.6 < 0.15);
        assert_eq!(retrieval_coupling(&c3, &k, &cloud, 0.0).unwrap().g_n, 0.0);
        let d = damping_rates(&k, &g);
        assert!((d.gamma_d - 1.1e13).abs() / 1.1e13 < 0.02);
        assert!((d.gamma_r / d.gamma_d - 3.5).abs() < 1e-12);
        let ratio = d.gamma_d / c.g_n;
        assert!((ratio - 3e3).abs() / 3e3 < 0.2, "{ratio}");
    }

    #[test]
    fn oscillation_frequency_measured_and_rectangular() {
        let (k, _, beams) = default_experiment_config();
        let khz = oscillation_frequency(&k, &beams) / (2.0 * PI * 1e3);
        assert!((khz - 15.4).abs() < 0.1, "{khz}");
        let rect = BeamGeometry::rectangular(k.k_signal()).unwrap();
        let w = oscillation_frequency(&k, &rect);
        let wr = recoil_quantities(&k).omega;
        assert!((w - 4.0 * wr).abs() <= 4.0 * f64::EPSILON * w);
        let degenerate = BeamGeometry::measured(k.k_signal(), 1.0, 1.0).unwrap();
        assert_eq!(oscillation_frequency(&k, &degenerate), 0.0);
    }

    #[test]
    fn ladder() {
        let l0 = ladder_frequencies(0, 1.0, 0.3, 0.0);
        assert_eq!((l0.omega_b, l0.omega_c, l0.delta_d), (2.0, 0.0, 0.3));
        let l1 = ladder_frequencies(1, 1.0, 0.0, 0.0);
        assert_eq!(l1.delta_d, -4.0);
        assert_eq!(l1.delta_r, 2.0);
        // Δ_{d,n} = δ_d + ω_{b,n} - ω_{c,n+1}, Δ_{r,n} = δ_r + ω_{b,n} - ω_{c,n}
        for n in -5..=5 {
            let l = ladder_frequencies(n, 1.7, 0.2, -0.1);
            let next = ladder_frequencies(n + 1, 1.7, 0.2, -0.1);
            assert!((l.delta_d - (0.2 + l.omega_b - next.omega_c)).abs() < 1e-12);
            assert!((l.delta_r - (-0.1 + l.omega_b - l.omega_c)).abs() < 1e-12);
        }
    }

    #[test]
    fn rabi_table_is_finite() {
        let (k, g, _) = default_experiment_config();
        let t = rabi_table(&LaserSettings::default(), &k, &ThomasFermiCloud::new(g)).unwrap();
        assert!(t.intensities.iter().all(|(_, v)| v.is_finite() && *v > 0.0));
        assert!(t.pulse_areas.iter().all(|v| v.is_finite()));
    }

    proptest! {
        #[test]
        fn bracket_mirror_symmetry(x in 0.01f64..0.99) {
            let k = PhysicalConstants::default();
            let d = x * k.delta_hfs;
            let a = detuning_bracket(d, &k).unwrap();
            let b = detuning_bracket(k.delta_hfs - d, &k).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs());
        }

        #[test]
        fn pulse_area_linearity(scale in 0.1f64..10.0) {
            let k = PhysicalConstants::default();
            let l = LaserSettings::default();
            let s = l.signal(1).unwrap();
            let c = l.control(1).unwrap();
            let base = pulse_area(&s, &c, &k).unwrap();
            let longer = LaserPulseSpec { duration: c.duration * scale, ..c };
            prop_assert!((pulse_area(&s, &longer, &k).unwrap() / base - scale).abs() < 1e-12);
            // scaling P_s by a and P_c by 1/a keeps sqrt(P_s P_c)
            let s2 = LaserPulseSpec { power: s.power * scale, ..s };
            let c2 = LaserPulseSpec { power: c.power / scale, ..c };
            prop_assert!((pulse_area(&s2, &c2, &k).unwrap() / base - 1.0).abs() < 1e-12);
            let s3 = LaserPulseSpec { power: s.power * scale * scale, ..s };
            prop_assert!((pulse_area(&s3, &c, &k).unwrap() / base - scale).abs() < 1e-12);
        }
    }
}
