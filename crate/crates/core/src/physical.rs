//! Physical constants, cloud and beam geometry, and the experiment's default parameter set.
//!
//! Everything in here is strict SI. Human units are only accepted by the config parser,
//! which converts at the boundary.

use std::f64::consts::PI;

use crate::error::{require_non_negative, require_positive, Error, Result};

/// Fundamental constants and the Rb-87 level data used by every other module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// J s (CODATA 2018, exact since the SI redefinition)
    pub hbar: f64,
    /// kg (Rb-87, Steck's D-line data)
    pub atom_mass: f64,
    /// m (CODATA 2018)
    pub bohr_radius: f64,
    /// m/s
    pub light_speed: f64,
    /// F/m (CODATA 2018)
    pub vacuum_permittivity: f64,
    /// Interspecies scattering length between |1> and |2>, m.
    pub a12: f64,
    /// Signal wavelength on the D1 line, m.
    pub lambda_signal: f64,
    /// Excited-state decay rate of the D2 cycling transition, 1/s.
    pub gamma_excited: f64,
    /// Dipole matrix element of the D2 cycling transition, C m.
    pub d_cyc: f64,
    /// Saturation intensity of the D2 cycling transition, W/m^2.
    pub i_sat: f64,
    /// D1 excited-state hyperfine splitting, rad/s.
    pub delta_hfs: f64,
}

pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
pub const A12_BOHR: f64 = 98.4;

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar: 1.054_571_817e-34,
            atom_mass: 1.443_160_648e-25,
            bohr_radius: BOHR_RADIUS,
            light_speed: 299_792_458.0,
            vacuum_permittivity: 8.854_187_812_8e-12,
            a12: A12_BOHR * BOHR_RADIUS,
            lambda_signal: 794.979e-9,
            gamma_excited: 1.0 / 26e-9,
            d_cyc: 2.5e-29,
            // 1.6 mW/cm^2
            i_sat: 16.0,
            delta_hfs: 2.0 * PI * 812e6,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        require_positive("hbar", self.hbar)?;
        require_positive("atom_mass", self.atom_mass)?;
        require_positive("bohr_radius", self.bohr_radius)?;
        require_positive("light_speed", self.light_speed)?;
        require_positive("vacuum_permittivity", self.vacuum_permittivity)?;
        require_positive("a12", self.a12)?;
        require_positive("lambda_signal", self.lambda_signal)?;
        require_positive("gamma_excited", self.gamma_excited)?;
        require_positive("d_cyc", self.d_cyc)?;
        require_positive("i_sat", self.i_sat)?;
        require_positive("delta_hfs", self.delta_hfs)
    }

    /// Signal wave number k_s = 2π/λ.
    pub fn k_signal(&self) -> f64 {
        2.0 * PI / self.lambda_signal
    }

    /// Interspecies coupling constant g12 = 4πħ²a12/m.
    pub fn g12(&self) -> f64 {
        4.0 * PI * self.hbar * self.hbar * self.a12 / self.atom_mass
    }

    /// Angular frequency of the signal light, 2πc/λ.
    pub fn signal_angular_frequency(&self) -> f64 {
        2.0 * PI * self.light_speed / self.lambda_signal
    }
}

/// Recoil energy of one signal photon and the matching angular frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recoil {
    /// J
    pub energy: f64,
    /// rad/s
    pub omega: f64,
}

pub fn recoil_quantities(constants: &PhysicalConstants) -> Recoil {
    let k = constants.k_signal();
    let energy = constants.hbar * constants.hbar * k * k / (2.0 * constants.atom_mass);
    Recoil {
        energy,
        omega: energy / constants.hbar,
    }
}

/// Thomas-Fermi radii and atom numbers of the condensate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudGeometry {
    radii: [f64; 3],
    atom_number_total: f64,
    component_numbers: [f64; 3],
    coupling_atom_number: f64,
}

impl CloudGeometry {
    /// `component_numbers` are (N_0, N_k, N_{k+q}) after the two Raman pulses.
    /// `coupling_atom_number` is the N entering g_N = g√N during retrieval.
    pub fn new(
        radii: [f64; 3],
        atom_number_total: f64,
        component_numbers: [f64; 3],
        coupling_atom_number: f64,
    ) -> Result<Self> {
        for r in radii {
            require_positive("cloud.radii", r)?;
        }
        require_non_negative("cloud.n_total", atom_number_total)?;
        for n in component_numbers {
            require_non_negative("cloud.n_components", n)?;
        }
        require_non_negative("cloud.n_coupling", coupling_atom_number)?;
        Ok(Self {
            radii,
            atom_number_total,
            component_numbers,
            coupling_atom_number,
        })
    }

    /// Equal thirds of the total atom number in the three prepared components.
    pub fn with_equal_thirds(radii: [f64; 3], atom_number_total: f64) -> Result<Self> {
        let third = atom_number_total / 3.0;
        Self::new(radii, atom_number_total, [third; 3], atom_number_total)
    }

    pub fn radii(&self) -> [f64; 3] {
        self.radii
    }

    pub fn atom_number_total(&self) -> f64 {
        self.atom_number_total
    }

    pub fn component_numbers(&self) -> [f64; 3] {
        self.component_numbers
    }

    pub fn coupling_atom_number(&self) -> f64 {
        self.coupling_atom_number
    }

    /// ε = R_y / R_x.
    pub fn aspect_ratio(&self) -> f64 {
        self.radii[1] / self.radii[0]
    }

    /// [N_0 N_k N_{k+q}]^{1/3}
    pub fn component_geometric_mean(&self) -> f64 {
        self.component_numbers.iter().product::<f64>().cbrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamMode {
    Measured,
    Rectangular,
}

/// Wave-vector geometry of the Raman beams, expressed as ratios to k_s².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamGeometry {
    k_signal: f64,
    q_sq_ratio: f64,
    qk_ratio: f64,
    mode: BeamMode,
}

impl BeamGeometry {
    pub fn measured(k_signal: f64, q_sq_ratio: f64, qk_ratio: f64) -> Result<Self> {
        require_positive("beams.k_signal", k_signal)?;
        if !q_sq_ratio.is_finite() || q_sq_ratio < 0.0 {
            return Err(Error::InvalidParameter {
                name: "beams.q_sq_ratio",
                reason: format!("must be a finite non-negative ratio, got {q_sq_ratio}"),
            });
        }
        if !qk_ratio.is_finite() {
            return Err(Error::InvalidParameter {
                name: "beams.qk_ratio",
                reason: format!("must be finite, got {qk_ratio}"),
            });
        }
        Ok(Self {
            k_signal,
            q_sq_ratio,
            qk_ratio,
            mode: BeamMode::Measured,
        })
    }

    /// q = k_s(1,1,0), k = k_s(1,-1,0): q² = 2k_s², q·k = 0.
    pub fn rectangular(k_signal: f64) -> Result<Self> {
        require_positive("beams.k_signal", k_signal)?;
        Ok(Self {
            k_signal,
            q_sq_ratio: 2.0,
            qk_ratio: 0.0,
            mode: BeamMode::Rectangular,
        })
    }

    pub fn k_signal(&self) -> f64 {
        self.k_signal
    }

    pub fn q_sq_ratio(&self) -> f64 {
        self.q_sq_ratio
    }

    pub fn qk_ratio(&self) -> f64 {
        self.qk_ratio
    }

    pub fn mode(&self) -> BeamMode {
        self.mode
    }
}

pub const DEFAULT_RADIUS_Y: f64 = 27e-6;
pub const DEFAULT_RADIUS_Z: f64 = 27e-6;
/// ω_x/ω_y = 70 Hz / 20 Hz
pub const DEFAULT_ASPECT_RATIO: f64 = 3.5;
pub const DEFAULT_N_TOTAL: f64 = 1.5e6;
pub const DEFAULT_COMPONENT_MEAN: f64 = 2.8e5;
pub const DEFAULT_N_COUPLING: f64 = 1e6;
pub const MEASURED_Q_SQ_RATIO: f64 = 2.08;
pub const MEASURED_QK_RATIO: f64 = -0.037;

/// The experiment's parameter set: radii ≈ (8, 27, 27) µm with R_x fixed by the trap
/// aspect ratio 3.5, N = 1.5×10⁶, component numbers 2.8×10⁵ each, measured beams.
pub fn default_experiment_config() -> (PhysicalConstants, CloudGeometry, BeamGeometry) {
    let constants = PhysicalConstants::default();
    let radii = [
        DEFAULT_RADIUS_Y / DEFAULT_ASPECT_RATIO,
        DEFAULT_RADIUS_Y,
        DEFAULT_RADIUS_Z,
    ];
    let cloud = CloudGeometry::new(
        radii,
        DEFAULT_N_TOTAL,
        [DEFAULT_COMPONENT_MEAN; 3],
        DEFAULT_N_COUPLING,
    )
    .expect("default cloud is valid");
    let beams =
        BeamGeometry::measured(constants.k_signal(), MEASURED_Q_SQ_RATIO, MEASURED_QK_RATIO)
            .expect("default beams are valid");
    (constants, cloud, beams)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recoil_frequency_of_default_constants() {
        // ħk²/2m evaluated by hand: 1.054571817e-34 * (2π/794.979e-9)² / (2 * 1.443160648e-25)
        let k = 2.0 * PI / 794.979e-9;
        let expected = 1.054_571_817e-34 * k * k / (2.0 * 1.443_160_648e-25);
        let r = recoil_quantities(&PhysicalConstants::default());
        assert!((r.omega - expected).abs() / expected < 1e-14);
        let khz = r.omega / (2.0 * PI) / 1e3;
        assert!((khz - 3.63).abs() < 0.01, "{khz}");
    }

    #[test]
    fn recoil_scaling_laws() {
        let base = PhysicalConstants::default();
        let w0 = recoil_quantities(&base).omega;
        let long = PhysicalConstants {
            lambda_signal: 2.0 * base.lambda_signal,
            ..base
        };
        assert!((recoil_quantities(&long).omega / w0 - 0.25).abs() < 1e-14);
        let heavy = PhysicalConstants {
            atom_mass: 2.0 * base.atom_mass,
            ..base
        };
        assert!((recoil_quantities(&heavy).omega / w0 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn a12_is_exactly_98_4_bohr() {
        let c = PhysicalConstants::default();
        assert_eq!(c.a12, 98.4 * c.bohr_radius);
        c.validate().unwrap();
    }

    #[test]
    fn defaults_match_experiment() {
        let (c, cloud, beams) = default_experiment_config();
        assert_eq!(cloud.radii()[1], 27e-6);
        assert!((cloud.radii()[0] - 8e-6).abs() < 0.5e-6);
        assert!((cloud.aspect_ratio() - 3.5).abs() < 1e-12);
        assert!((cloud.component_geometric_mean() - 2.8e5).abs() / 2.8e5 < 1e-12);
        assert_eq!(cloud.atom_number_total(), 1.5e6);
        assert_eq!(beams.mode(), BeamMode::Measured);
        assert_eq!(beams.k_signal(), c.k_signal());
    }

    #[test]
    fn defaults_are_deterministic() {
        assert_eq!(default_experiment_config(), default_experiment_config());
    }

    #[test]
    fn rectangular_beams_are_exact() {
        let b = BeamGeometry::rectangular(1.0).unwrap();
        assert_eq!(b.q_sq_ratio(), 2.0);
        assert_eq!(b.qk_ratio(), 0.0);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(CloudGeometry::new([0.0, 1.0, 1.0], 1.0, [1.0; 3], 1.0).is_err());
        assert!(CloudGeometry::new([1.0, 1.0, 1.0], -1.0, [1.0; 3], 1.0).is_err());
        assert!(CloudGeometry::new([1.0, f64::NAN, 1.0], 1.0, [1.0; 3], 1.0).is_err());
        assert!(BeamGeometry::measured(1.0, f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn equal_thirds() {
        let g = CloudGeometry::with_equal_thirds([1.0; 3], 3.0).unwrap();
        assert_eq!(g.component_numbers(), [1.0; 3]);
    }
}
