//! `key = value` settings files.
//!
//! Every dimensional key carries a unit suffix (`cloud.radii_um`, `laser.ps1_uw`,
//! `laser.delta1_mhz`, ...); values are converted to SI on parse. Frequencies given in
//! Hz/kHz/MHz/GHz are cyclic and become angular (×2π); `_rad_s` is already angular.
//! Angles take `_rad` or `_pi`. [`Settings::to_config_text`] writes the fully resolved
//! set back out with SI suffixes, and parsing that text reproduces the same settings.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fit::SinusoidEnvelope;
use crate::fwm::{GrowthModel, ThomasFermiCloud};
use crate::optics::{retrieval_coupling, LaserSettings};
use crate::physical::{
    recoil_quantities, BeamGeometry, BeamMode, CloudGeometry, PhysicalConstants,
    DEFAULT_ASPECT_RATIO, DEFAULT_COMPONENT_MEAN, DEFAULT_N_COUPLING, DEFAULT_N_TOTAL,
    DEFAULT_RADIUS_Y, DEFAULT_RADIUS_Z, MEASURED_QK_RATIO, MEASURED_Q_SQ_RATIO,
};
use crate::retrieval::{InitialConditionSpec, Integrator, RetrievalParams, Scheme, DEFAULT_CUTOFF};

/// All inputs of a run, in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub a12: f64,
    pub radii: [f64; 3],
    pub n_total: f64,
    pub component_numbers: [f64; 3],
    pub n_coupling: f64,
    pub beam_mode: BeamMode,
    pub q_sq_ratio: f64,
    pub qk_ratio: f64,
    pub lasers: LaserSettings,
    pub theta1: f64,
    pub theta2: f64,
    pub beta: f64,
    pub chi: f64,
    pub scheme: Scheme,
    pub gamma_over_gn: f64,
    /// γ_r/γ_d; `None` takes the cloud aspect ratio.
    pub gamma_ratio: Option<f64>,
    /// Collective coupling; `None` derives it from the retrieval beam.
    pub g_n: Option<f64>,
    pub cutoff: usize,
    pub integrator: Integrator,
    pub phase_factors: bool,
    pub rtol: f64,
    pub delta_d: f64,
    pub delta_r: f64,
    pub growth_tau: f64,
    pub growth_t0: f64,
    pub growth_offset: f64,
    pub growth_noise: f64,
    pub interference: SinusoidEnvelope,
    pub interference_noise: f64,
    pub envelope_t0: f64,
    pub envelope_t4: f64,
    pub envelope_visibility: f64,
    pub fig2_grid: [f64; 3],
    pub fig4_grid: [f64; 3],
    pub chi_points: usize,
    pub fit_data: Option<String>,
    pub seed: u64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            a12: PhysicalConstants::default().a12,
            radii: [
                DEFAULT_RADIUS_Y / DEFAULT_ASPECT_RATIO,
                DEFAULT_RADIUS_Y,
                DEFAULT_RADIUS_Z,
            ],
            n_total: DEFAULT_N_TOTAL,
            component_numbers: [DEFAULT_COMPONENT_MEAN; 3],
            n_coupling: DEFAULT_N_COUPLING,
            beam_mode: BeamMode::Measured,
            q_sq_ratio: MEASURED_Q_SQ_RATIO,
            qk_ratio: MEASURED_QK_RATIO,
            lasers: LaserSettings::default(),
            theta1: 0.5 * PI,
            theta2: 0.5 * PI,
            beta: std::f64::consts::SQRT_2,
            chi: 0.0,
            scheme: Scheme::Extended,
            gamma_over_gn: 3e3,
            gamma_ratio: None,
            g_n: None,
            cutoff: DEFAULT_CUTOFF,
            integrator: Integrator::AdiabaticElimination,
            phase_factors: false,
            rtol: 1e-10,
            delta_d: 0.0,
            delta_r: 0.0,
            growth_tau: 2.5e-6,
            growth_t0: 1.3e-3,
            growth_offset: 0.0,
            growth_noise: 0.02,
            interference: SinusoidEnvelope {
                amplitude: 1.0,
                center: 0.45e-3,
                width: 0.15e-3,
                visibility: 0.35,
                omega: 2.0 * PI * 15.4e3,
                t5: 0.0,
                y0: 0.05,
            },
            interference_noise: 0.02,
            envelope_t0: 0.97e-3,
            envelope_t4: 0.42e-3,
            envelope_visibility: 0.38,
            fig2_grid: [0.0, 3e-3, 3e-6],
            fig4_grid: [0.1e-3, 0.8e-3, 5e-6],
            chi_points: 32,
            fit_data: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Unit {
    Length,
    Power,
    Time,
    AngularFrequency,
    Angle,
    None,
}

impl Unit {
    /// Accepted suffixes as (suffix, multiplier, divisor) into SI; the first is written back out.
    /// Dividing makes whole numbers in a prefixed unit land on the nearest double (10 us is 1e-5 s).
    fn suffixes(self) -> &'static [(&'static str, f64, f64)] {
        const TWO_PI: f64 = 2.0 * PI;
        match self {
            Unit::Length => &[
                ("_m", 1.0, 1.0),
                ("_mm", 1.0, 1e3),
                ("_um", 1.0, 1e6),
                ("_nm", 1.0, 1e9),
            ],
            Unit::Power => &[("_w", 1.0, 1.0), ("_mw", 1.0, 1e3), ("_uw", 1.0, 1e6)],
            Unit::Time => &[
                ("_s", 1.0, 1.0),
                ("_ms", 1.0, 1e3),
                ("_us", 1.0, 1e6),
                ("_ns", 1.0, 1e9),
            ],
            Unit::AngularFrequency => &[
                ("_rad_s", 1.0, 1.0),
                ("_hz", TWO_PI, 1.0),
                ("_khz", TWO_PI * 1e3, 1.0),
                ("_mhz", TWO_PI * 1e6, 1.0),
                ("_ghz", TWO_PI * 1e9, 1.0),
            ],
            Unit::Angle => &[("_rad", 1.0, 1.0), ("_pi", PI, 1.0)],
            Unit::None => &[("", 1.0, 1.0)],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Num(f64),
    Triple([f64; 3]),
    Count(u64),
    Text(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Num,
    Triple,
    Count,
    Text,
}

type Getter = fn(&Settings) -> Option<Value>;
type Setter = fn(&mut Settings, Value) -> std::result::Result<(), String>;

struct Field {
    base: &'static str,
    unit: Unit,
    shape: Shape,
    get: Getter,
    set: Setter,
}

fn num(v: Value) -> f64 {
    match v {
        Value::Num(x) => x,
        _ => unreachable!("shape checked by the parser"),
    }
}

fn triple(v: Value) -> [f64; 3] {
    match v {
        Value::Triple(x) => x,
        _ => unreachable!("shape checked by the parser"),
    }
}

fn count(v: Value) -> u64 {
    match v {
        Value::Count(x) => x,
        _ => unreachable!("shape checked by the parser"),
    }
}

fn text(v: Value) -> String {
    match v {
        Value::Text(x) => x,
        _ => unreachable!("shape checked by the parser"),
    }
}

macro_rules! num_field {
    ($base:expr, $unit:expr, $($path:tt)+) => {
        Field {
            base: $base,
            unit: $unit,
            shape: Shape::Num,
            get: |s| Some(Value::Num(s.$($path)+)),
            set: |s, v| {
                s.$($path)+ = num(v);
                Ok(())
            },
        }
    };
}

fn fields() -> Vec<Field> {
    use Unit::*;
    vec![
        num_field!("constants.a12", Length, a12),
        Field {
            base: "cloud.radii",
            unit: Length,
            shape: Shape::Triple,
            get: |s| Some(Value::Triple(s.radii)),
            set: |s, v| {
                s.radii = triple(v);
                Ok(())
            },
        },
        num_field!("cloud.n_total", None, n_total),
        Field {
            base: "cloud.n_components",
            unit: None,
            shape: Shape::Triple,
            get: |s| Some(Value::Triple(s.component_numbers)),
            set: |s, v| {
                s.component_numbers = triple(v);
                Ok(())
            },
        },
        num_field!("cloud.n_coupling", None, n_coupling),
        Field {
            base: "beams.mode",
            unit: None,
            shape: Shape::Text,
            get: |s| {
                Some(Value::Text(
                    match s.beam_mode {
                        BeamMode::Measured => "measured",
                        BeamMode::Rectangular => "rectangular",
                    }
                    .into(),
                ))
            },
            set: |s, v| {
                s.beam_mode = match text(v).as_str() {
                    "measured" => BeamMode::Measured,
                    "rectangular" => BeamMode::Rectangular,
                    other => {
                        return Err(format!(
                            "unknown beam mode `{other}` (expected measured or rectangular)"
                        ))
                    }
                };
                Ok(())
            },
        },
        num_field!("beams.q_sq_ratio", None, q_sq_ratio),
        num_field!("beams.qk_ratio", None, qk_ratio),
        num_field!("laser.ps1", Power, lasers.power_s1),
        num_field!("laser.ps2", Power, lasers.power_s2),
        num_field!("laser.pc1", Power, lasers.power_c1),
        num_field!("laser.pc2", Power, lasers.power_c2),
        num_field!("laser.pc3", Power, lasers.power_c3),
        num_field!("laser.ws", Length, lasers.waist_s),
        num_field!("laser.wc1", Length, lasers.waist_c1),
        num_field!("laser.wc2", Length, lasers.waist_c2),
        num_field!("laser.delta1", AngularFrequency, lasers.delta1),
        num_field!("laser.delta2", AngularFrequency, lasers.delta2),
        num_field!("laser.delta3", AngularFrequency, lasers.delta3),
        num_field!("laser.duration1", Time, lasers.duration1),
        num_field!("laser.duration2", Time, lasers.duration2),
        num_field!("pulses.theta1", Angle, theta1),
        num_field!("pulses.theta2", Angle, theta2),
        num_field!("pulses.chi", Angle, chi),
        Field {
            base: "pulses.scheme",
            unit: None,
            shape: Shape::Text,
            get: |s| Some(Value::Text(s.scheme.to_string())),
            set: |s, v| {
                s.scheme = text(v).parse()?;
                Ok(())
            },
        },
        num_field!("fwm.beta", None, beta),
        num_field!("retrieval.gamma_over_gn", None, gamma_over_gn),
        Field {
            base: "retrieval.gamma_ratio",
            unit: None,
            shape: Shape::Num,
            get: |s| Some(Value::Num(s.resolved_gamma_ratio())),
            set: |s, v| {
                s.gamma_ratio = Some(num(v));
                Ok(())
            },
        },
        Field {
            base: "retrieval.g_n",
            unit: AngularFrequency,
            shape: Shape::Num,
            // left out of the dump when the coupling chain cannot produce a usable value
            get: |s| {
                s.resolved_g_n()
                    .ok()
                    .filter(|g| g.is_finite() && *g > 0.0)
                    .map(Value::Num)
            },
            set: |s, v| {
                s.g_n = Some(num(v));
                Ok(())
            },
        },
        Field {
            base: "retrieval.cutoff",
            unit: None,
            shape: Shape::Count,
            get: |s| Some(Value::Count(s.cutoff as u64)),
            set: |s, v| {
                s.cutoff = usize::try_from(count(v)).map_err(|e| e.to_string())?;
                Ok(())
            },
        },
        Field {
            base: "retrieval.integrator",
            unit: None,
            shape: Shape::Text,
            get: |s| Some(Value::Text(s.integrator.to_string())),
            set: |s, v| {
                s.integrator = text(v).parse()?;
                Ok(())
            },
        },
        Field {
            base: "retrieval.phase_factors",
            unit: None,
            shape: Shape::Text,
            get: |s| Some(Value::Text(s.phase_factors.to_string())),
            set: |s, v| {
                s.phase_factors = text(v)
                    .parse()
                    .map_err(|_| "expected true or false".to_string())?;
                Ok(())
            },
        },
        num_field!("retrieval.rtol", None, rtol),
        num_field!("retrieval.delta_d", AngularFrequency, delta_d),
        num_field!("retrieval.delta_r", AngularFrequency, delta_r),
        num_field!("growth.tau", Time, growth_tau),
        num_field!("growth.t0", Time, growth_t0),
        num_field!("growth.offset", None, growth_offset),
        num_field!("growth.noise", None, growth_noise),
        num_field!("interference.amplitude", None, interference.amplitude),
        num_field!("interference.center", Time, interference.center),
        num_field!("interference.width", Time, interference.width),
        num_field!("interference.visibility", None, interference.visibility),
        num_field!("interference.omega", AngularFrequency, interference.omega),
        num_field!("interference.t5", Time, interference.t5),
        num_field!("interference.y0", None, interference.y0),
        num_field!("interference.noise", None, interference_noise),
        num_field!("envelope.t0", Time, envelope_t0),
        num_field!("envelope.t4", Time, envelope_t4),
        num_field!("envelope.visibility", None, envelope_visibility),
        num_field!("grid.fig2_start", Time, fig2_grid[0]),
        num_field!("grid.fig2_stop", Time, fig2_grid[1]),
        num_field!("grid.fig2_step", Time, fig2_grid[2]),
        num_field!("grid.fig4_start", Time, fig4_grid[0]),
        num_field!("grid.fig4_stop", Time, fig4_grid[1]),
        num_field!("grid.fig4_step", Time, fig4_grid[2]),
        Field {
            base: "grid.chi_points",
            unit: None,
            shape: Shape::Count,
            get: |s| Some(Value::Count(s.chi_points as u64)),
            set: |s, v| {
                s.chi_points = usize::try_from(count(v)).map_err(|e| e.to_string())?;
                Ok(())
            },
        },
        Field {
            base: "fit.data",
            unit: None,
            shape: Shape::Text,
            get: |s| s.fit_data.clone().map(Value::Text),
            set: |s, v| {
                s.fit_data = Some(text(v));
                Ok(())
            },
        },
        Field {
            base: "run.seed",
            unit: None,
            shape: Shape::Count,
            get: |s| Some(Value::Count(s.seed)),
            set: |s, v| {
                s.seed = count(v);
                Ok(())
            },
        },
    ]
}

/// Finds the field for `key` and the SI conversion of its suffix.
fn lookup<'a>(table: &'a [Field], key: &str) -> Option<(&'a Field, (f64, f64))> {
    table.iter().find_map(|f| {
        let rest = key.strip_prefix(f.base)?;
        f.unit
            .suffixes()
            .iter()
            .find(|(suffix, _, _)| *suffix == rest)
            .map(|(_, mul, div)| (f, (*mul, *div)))
    })
}

fn parse_number(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{}` is not a number", s.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{}` is not finite", s.trim()))
    }
}

impl Settings {
    /// Parses settings on top of the defaults. Unknown and repeated keys are rejected with
    /// [`Error::Config`]; values that are well formed but inconsistent fail [`Settings::validate`].
    pub fn parse(text: &str) -> Result<Self> {
        let mut settings = Settings::default();
        settings.apply(text)?;
        Ok(settings)
    }

    /// Applies `key = value` lines on top of the current values.
    pub fn apply(&mut self, text: &str) -> Result<()> {
        let table = fields();
        let mut seen: Vec<&'static str> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let err = |message: String| Error::Config { line, message };
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, found `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let (field, (mul, div)) =
                lookup(&table, key).ok_or_else(|| err(format!("unknown key `{key}`")))?;
            if seen.contains(&field.base) {
                return Err(err(format!("`{}` is set more than once", field.base)));
            }
            seen.push(field.base);
            let parsed = match field.shape {
                Shape::Num => Value::Num(parse_number(value).map_err(&err)? * mul / div),
                Shape::Triple => {
                    let parts: Vec<&str> = value.split(',').collect();
                    if parts.len() != 3 {
                        return Err(err(format!("`{key}` takes three comma-separated numbers")));
                    }
                    let mut out = [0.0; 3];
                    for (o, p) in out.iter_mut().zip(parts) {
                        *o = parse_number(p).map_err(&err)? * mul / div;
                    }
                    Value::Triple(out)
                }
                Shape::Count => Value::Count(
                    value
                        .parse()
                        .map_err(|_| err(format!("`{value}` is not a non-negative integer")))?,
                ),
                Shape::Text => {
                    if value.is_empty() {
                        return Err(err(format!("`{key}` needs a value")));
                    }
                    Value::Text(value.to_string())
                }
            };
            (field.set)(self, parsed).map_err(|m| err(format!("`{key}`: {m}")))?;
        }
        self.validate()
    }

    /// Checks the cross-field constraints that single keys cannot.
    pub fn validate(&self) -> Result<()> {
        self.cloud()?;
        self.beams()?;
        self.constants().validate()?;
        let positive = |name: &'static str, v: f64| crate::error::require_positive(name, v);
        positive("retrieval.gamma_over_gn", self.gamma_over_gn)?;
        positive("retrieval.gamma_ratio", self.resolved_gamma_ratio())?;
        positive("retrieval.rtol", self.rtol)?;
        if let Some(g) = self.g_n {
            positive("retrieval.g_n", g)?;
        }
        for grid in [self.fig2_grid, self.fig4_grid] {
            if !(grid[2] > 0.0 && grid[1] >= grid[0] && grid[0] >= 0.0) {
                return Err(Error::InvalidParameter {
                    name: "grid",
                    reason: format!(
                        "time grid {grid:?} needs 0 <= start <= stop and a positive step"
                    ),
                });
            }
            if (grid[1] - grid[0]) / grid[2] > 1e7 {
                return Err(Error::InvalidParameter {
                    name: "grid",
                    reason: "time grid has more than 1e7 points".into(),
                });
            }
        }
        if self.chi_points < 16 || self.chi_points > 100_000 {
            return Err(Error::InvalidParameter {
                name: "grid.chi_points",
                reason: format!("must be between 16 and 100000, got {}", self.chi_points),
            });
        }
        if self.cutoff < 2 || self.cutoff > 64 {
            return Err(Error::InvalidParameter {
                name: "retrieval.cutoff",
                reason: format!("must be between 2 and 64, got {}", self.cutoff),
            });
        }
        Ok(())
    }

    /// Fully resolved settings with SI suffixes.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        for f in fields() {
            let suffix = f.unit.suffixes()[0].0;
            let Some(v) = (f.get)(self) else { continue };
            let _ = match v {
                Value::Num(x) => writeln!(out, "{}{} = {:e}", f.base, suffix, x),
                Value::Triple([a, b, c]) => {
                    writeln!(out, "{}{} = {:e}, {:e}, {:e}", f.base, suffix, a, b, c)
                }
                Value::Count(n) => writeln!(out, "{}{} = {}", f.base, suffix, n),
                Value::Text(t) => writeln!(out, "{}{} = {}", f.base, suffix, t),
            };
        }
        out
    }

    pub fn constants(&self) -> PhysicalConstants {
        PhysicalConstants {
            a12: self.a12,
            ..PhysicalConstants::default()
        }
    }

    pub fn cloud(&self) -> Result<CloudGeometry> {
        CloudGeometry::new(
            self.radii,
            self.n_total,
            self.component_numbers,
            self.n_coupling,
        )
    }

    pub fn tf_cloud(&self) -> Result<ThomasFermiCloud> {
        Ok(ThomasFermiCloud::new(self.cloud()?))
    }

    pub fn beams(&self) -> Result<BeamGeometry> {
        let k = self.constants().k_signal();
        match self.beam_mode {
            BeamMode::Measured => BeamGeometry::measured(k, self.q_sq_ratio, self.qk_ratio),
            BeamMode::Rectangular => BeamGeometry::rectangular(k),
        }
    }

    pub fn resolved_gamma_ratio(&self) -> f64 {
        self.gamma_ratio.unwrap_or(self.radii[1] / self.radii[0])
    }

    pub fn resolved_g_n(&self) -> Result<f64> {
        match self.g_n {
            Some(g) => Ok(g),
            None => {
                let control = self.lasers.control(3)?;
                Ok(retrieval_coupling(
                    &control,
                    &self.constants(),
                    &self.tf_cloud()?,
                    self.n_coupling,
                )?
                .g_n)
            }
        }
    }

    pub fn retrieval_params(&self) -> Result<RetrievalParams> {
        let mut p = RetrievalParams::from_ratios(
            self.resolved_g_n()?,
            self.gamma_over_gn,
            self.resolved_gamma_ratio(),
            recoil_quantities(&self.constants()).omega,
            self.n_coupling,
        )?;
        p.delta_d = self.delta_d;
        p.delta_r = self.delta_r;
        p.use_phase_factors = self.phase_factors;
        p.integrator = self.integrator;
        p.rtol = self.rtol;
        p.validate()?;
        Ok(p)
    }

    pub fn initial_spec(&self) -> InitialConditionSpec {
        InitialConditionSpec::new(self.theta1, self.theta2, self.beta, self.chi)
            .with_scheme(self.scheme)
    }

    pub fn growth_truth(&self) -> Result<GrowthModel> {
        GrowthModel::new(
            self.growth_tau,
            self.growth_t0,
            self.cloud()?.aspect_ratio(),
            self.growth_offset,
        )
    }
}
