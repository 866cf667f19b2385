use std::f64::consts::PI;
use std::fmt::Write as _;

use becgate::config::Settings;
use becgate::fit::synthetic::{synthetic_growth, synthetic_sinusoid_envelope, uniform_grid};
use becgate::fit::{
    envelope_model, fit_growth, fit_sinusoid_envelope, DataSeries, EnvelopeParams, SinusoidEnvelope,
};
use becgate::fwm::{fwm_population, GrowthModel};
use becgate::optics::{oscillation_frequency, rabi_table};
use becgate::retrieval::{
    build_initial_state, evolve, gate_truth_table, retrieve, visibility_scan, GateRow, Scheme,
};
use becgate::validation::{format_table, run_all};
use clap::ValueEnum;
use rayon::prelude::*;

use crate::output::{OutputDir, Table};
use crate::svg::{line_plot, Series};
use crate::{config_failure, numerical, Failure, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    Growth,
    Retrieval,
    Interference,
    Gate,
    Rabi,
    FitGrowth,
    FitInterference,
    ReproduceFig2,
    ReproduceFig3,
    ReproduceFig4,
    Validate,
}

impl Scenario {
    pub fn name(self) -> String {
        self.to_possible_value()
            .expect("no skipped variants")
            .get_name()
            .to_string()
    }
}

pub struct Context<'a> {
    pub settings: &'a Settings,
    pub out: &'a mut OutputDir,
    pub svg: bool,
}

impl Context<'_> {
    fn csv(&mut self, name: &str, table: &Table, what: &str) -> Outcome<()> {
        let text = table.to_csv(what)?;
        self.out.write(name, &text)
    }

    fn plot(
        &mut self,
        name: &str,
        title: &str,
        x_label: &str,
        y_label: &str,
        series: &[Series],
    ) -> Outcome<()> {
        if self.svg {
            self.out
                .write(name, &line_plot(title, x_label, y_label, series))?;
        }
        Ok(())
    }
}

/// Runs one scenario. Returns `false` only when `validate` finds a failing criterion.
pub fn run(scenario: Scenario, ctx: &mut Context) -> Outcome<bool> {
    match scenario {
        Scenario::Growth => growth(ctx)?,
        Scenario::Retrieval => retrieval(ctx)?,
        Scenario::Interference => interference(ctx)?,
        Scenario::Gate => gate(ctx, ctx.settings.scheme, "gate")?,
        Scenario::Rabi => rabi(ctx)?,
        Scenario::FitGrowth => fit_growth_scenario(ctx)?,
        Scenario::FitInterference => fit_interference_scenario(ctx)?,
        Scenario::ReproduceFig2 => fig2(ctx)?,
        Scenario::ReproduceFig3 => gate(ctx, Scheme::BasicGate, "fig3")?,
        Scenario::ReproduceFig4 => fig4(ctx)?,
        Scenario::Validate => return validate(ctx),
    }
    Ok(true)
}

fn grid(g: [f64; 3]) -> Vec<f64> {
    uniform_grid(g[0], g[1], g[2])
}

fn growth(ctx: &mut Context) -> Outcome<()> {
    let s = ctx.settings;
    let model = s.growth_truth().map_err(config_failure)?;
    let times = grid(s.fig2_grid);
    let mut table = Table::new(&["t_s", "N_q"]);
    for &t in &times {
        table.push(vec![t, fwm_population(t, &model)]);
    }
    ctx.csv("growth.csv", &table, "fwm_population")?;
    ctx.out.write(
        "growth_summary.txt",
        &format!(
            "tau_s = {:e}\nt0_s = {:e}\nt1_s = {:e}\nepsilon = {:e}\nplateau = {:e}\n",
            model.tau,
            model.t0,
            model.t1(),
            model.epsilon,
            fwm_population(model.t1(), &model)
        ),
    )?;
    let y = table.column(1);
    ctx.plot(
        "growth.svg",
        "FWM growth",
        "t_FWM [s]",
        "N_q",
        &[Series {
            name: "N_q",
            x: &times,
            y: &y,
        }],
    )
}

fn retrieval(ctx: &mut Context) -> Outcome<()> {
    let s = ctx.settings;
    let params = s.retrieval_params().map_err(config_failure)?;
    let spec = s.initial_spec();
    let state = build_initial_state(&spec, s.cutoff).map_err(config_failure)?;
    let tau = params.emission_timescale();
    let traj = evolve(&state, &params, 10.0 * tau, 0.05 * tau).map_err(numerical(
        "evolve",
        format!(
            "theta1={:e} theta2={:e} beta={:e} chi={:e} gamma_d/g_N={:e} integrator={}",
            spec.theta1, spec.theta2, spec.beta, spec.chi, s.gamma_over_gn, params.integrator
        ),
    ))?;
    ctx.out.write("retrieval.csv", &traj.to_csv())?;
    let t: Vec<f64> = traj.samples.iter().map(|x| x.t).collect();
    let nd: Vec<f64> = traj.samples.iter().map(|x| x.state.n_d).collect();
    let nr: Vec<f64> = traj.samples.iter().map(|x| x.state.n_r).collect();
    ctx.plot(
        "retrieval.svg",
        "Retrieved photons",
        "t [s]",
        "photons",
        &[
            Series {
                name: "N_d",
                x: &t,
                y: &nd,
            },
            Series {
                name: "N_r",
                x: &t,
                y: &nr,
            },
        ],
    )
}

fn interference(ctx: &mut Context) -> Outcome<()> {
    let s = ctx.settings;
    let params = s.retrieval_params().map_err(config_failure)?;
    let chi: Vec<f64> = (0..s.chi_points)
        .map(|k| 2.0 * PI * k as f64 / s.chi_points as f64)
        .collect();
    let spec = s.initial_spec();
    let scan = visibility_scan(&spec, &params, s.cutoff, &chi).map_err(numerical(
        "visibility_scan",
        format!(
            "theta1={:e} theta2={:e} beta={:e} points={} cutoff={}",
            spec.theta1, spec.theta2, spec.beta, s.chi_points, s.cutoff
        ),
    ))?;
    let mut table = Table::new(&["chi_rad", "N_d"]);
    for &(c, n) in &scan.pattern {
        table.push(vec![c, n]);
    }
    ctx.csv("interference.csv", &table, "visibility_scan")?;
    let f = &scan.fit;
    ctx.out.write(
        "interference_fit.txt",
        &format!(
            "visibility = {:e}\nharmonic = {}\nphase_rad = {:e}\nmean = {:e}\n{}",
            f.visibility,
            f.harmonic,
            f.phase,
            f.mean,
            f.fit.to_key_value()
        ),
    )?;
    let y = table.column(1);
    ctx.plot(
        "interference.svg",
        "Interference pattern",
        "chi [rad]",
        "N_d",
        &[Series {
            name: "N_d",
            x: &chi,
            y: &y,
        }],
    )
}

fn gate_rows(ctx: &Context, scheme: Scheme) -> Outcome<[GateRow; 4]> {
    let s = ctx.settings;
    let params = s.retrieval_params().map_err(config_failure)?;
    let spec = s.initial_spec().with_scheme(scheme);
    gate_truth_table(&spec, &params, s.cutoff).map_err(numerical(
        "gate_truth_table",
        format!(
            "scheme={scheme} theta1={:e} theta2={:e} beta={:e}",
            spec.theta1, spec.theta2, spec.beta
        ),
    ))
}

fn gate(ctx: &mut Context, scheme: Scheme, stem: &str) -> Outcome<()> {
    let rows = gate_rows(ctx, scheme)?;
    let threshold = 0.1 * rows.iter().map(|r| r.n_d).fold(0.0, f64::max);
    let mut table = Table::new(&["signal1_on", "signal2_on", "N_d", "N_r", "above_threshold"]);
    for r in rows {
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        table.push(vec![
            flag(r.signal1_on),
            flag(r.signal2_on),
            r.n_d,
            r.n_r,
            flag(r.n_d > threshold && threshold > 0.0),
        ]);
    }
    ctx.csv(&format!("{stem}.csv"), &table, "gate_truth_table")
}

fn rabi(ctx: &mut Context) -> Outcome<()> {
    let s = ctx.settings;
    let cloud = s.tf_cloud().map_err(config_failure)?;
    let t = rabi_table(&s.lasers, &s.constants(), &cloud).map_err(config_failure)?;
    let mut rows: Vec<(String, f64, &str)> = Vec::new();
    for (name, i) in t.intensities {
        rows.push((format!("intensity_{name}"), i, "W/m^2"));
    }
    for (name, w) in t.omega_cyc {
        rows.push((format!("omega_cyc_{name}"), w, "rad/s"));
    }
    rows.push(("omega_eff_1".into(), t.omega_eff[0], "rad/s"));
    rows.push(("omega_eff_2".into(), t.omega_eff[1], "rad/s"));
    rows.push(("theta1".into(), t.pulse_areas[0], "rad"));
    rows.push(("theta2".into(), t.pulse_areas[1], "rad"));
    rows.push(("g".into(), t.coupling.g, "rad/s"));
    rows.push(("g_N".into(), t.coupling.g_n, "rad/s"));
    rows.push(("gamma_d".into(), t.damping.gamma_d, "1/s"));
    rows.push(("gamma_r".into(), t.damping.gamma_r, "1/s"));
    rows.push((
        "gamma_d_over_g_N".into(),
        t.damping.gamma_d / t.coupling.g_n,
        "1",
    ));
    rows.push((
        "emission_timescale".into(),
        t.damping.gamma_d / (t.coupling.g_n * t.coupling.g_n),
        "s",
    ));
    let mut text = String::from("quantity,value,unit\n");
    for (name, value, unit) in rows {
        if !value.is_finite() {
            return Err(Failure::Numerical(format!(
                "rabi_table produced a non-finite {name}"
            )));
        }
        let _ = writeln!(text, "{name},{value:e},{unit}");
    }
    ctx.out.write("rabi.csv", &text)
}

fn load_or_synthesize(
    ctx: &Context,
    synthesize: impl FnOnce() -> becgate::Result<DataSeries>,
) -> Outcome<DataSeries> {
    match &ctx.settings.fit_data {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Setup(format!("cannot read data file {path}: {e}")))?;
            DataSeries::from_csv(&text).map_err(|e| Failure::Setup(format!("{path}: {e}")))
        }
        None => synthesize().map_err(config_failure),
    }
}

fn write_fit(
    ctx: &mut Context,
    stem: &str,
    data: &DataSeries,
    fitted: &dyn Fn(f64) -> f64,
    summary: &str,
) -> Outcome<()> {
    let mut table = Table::new(&["t_s", "y", "y_fit"]);
    for (&t, &y) in data.t().iter().zip(data.y()) {
        table.push(vec![t, y, fitted(t)]);
    }
    ctx.csv(&format!("{stem}.csv"), &table, stem)?;
    ctx.out.write(&format!("{stem}.txt"), summary)?;
    let (y, yf) = (table.column(1), table.column(2));
    ctx.plot(
        &format!("{stem}.svg"),
        stem,
        "t [s]",
        "y",
        &[
            Series {
                name: "data",
                x: data.t(),
                y: &y,
            },
            Series {
                name: "fit",
                x: data.t(),
                y: &yf,
            },
        ],
    )
}

fn fit_growth_scenario(ctx: &mut Context) -> Outcome<()> {
    let s = ctx.settings;
    let eps = s.cloud().map_err(config_failure)?.aspect_ratio();
    let data = load_or_synthesize(ctx, || {
        synthetic_growth(
            &s.growth_truth()?,
            &grid(s.fig2_grid),
            s.growth_noise,
            s.seed,
        )
    })?;
    let fit = fit_growth(&data, eps).map_err(numerical(
        "fit_growth",
        format!("points={} epsilon={eps:e}", data.len()),
    ))?;
    let model = GrowthModel::new(fit.params[0], fit.params[1], eps, fit.params[2]).map_err(
        numerical("fit_growth", "fitted parameters out of range".into()),
    )?;
    write_fit(
        ctx,
        "fit_growth",
        &data,
        &|t| fwm_population(t, &model),
        &fit.to_key_value(),
    )
}

fn fit_interference_scenario(ctx: &mut Context) -> Outcome<()> {
    let s = ctx.settings;
    let data = load_or_synthesize(ctx, || {
        synthetic_sinusoid_envelope(
            &s.interference,
            &grid(s.fig4_grid),
            s.interference_noise,
            s.seed,
        )
    })?;
    let fit = fit_sinusoid_envelope(&data).map_err(numerical(
        "fit_sinusoid_envelope",
        format!("points={}", data.len()),
    ))?;
    let model = SinusoidEnvelope::from_fit(&fit);
    let summary = format!(
        "{}omega_over_2pi_hz = {:e}\n",
        fit.to_key_value(),
        model.omega / (2.0 * PI)
    );
    write_fit(ctx, "fit_interference", &data, &|t| model.eval(t), &summary)
}

fn fig2(ctx: &mut Context) -> Outcome<()> {
    let s = ctx.settings;
    let cloud = s.tf_cloud().map_err(config_failure)?;
    let predicted = GrowthModel::predicted(&s.constants(), &cloud, 0.0).map_err(config_failure)?;
    let best = s.growth_truth().map_err(config_failure)?;
    let times = grid(s.fig2_grid);
    let mut table = Table::new(&["t_s", "N_q_predicted", "N_q_best_fit"]);
    for &t in &times {
        table.push(vec![
            t,
            fwm_population(t, &predicted),
            fwm_population(t, &best),
        ]);
    }
    ctx.csv("fig2.csv", &table, "fwm_population")?;
    let (a, b) = (table.column(1), table.column(2));
    ctx.plot(
        "fig2.svg",
        "FWM growth",
        "t_FWM [s]",
        "N_q",
        &[
            Series {
                name: "predicted",
                x: &times,
                y: &a,
            },
            Series {
                name: "best fit",
                x: &times,
                y: &b,
            },
        ],
    )
}

fn fig4(ctx: &mut Context) -> Outcome<()> {
    let s = ctx.settings;
    let params = s.retrieval_params().map_err(config_failure)?;
    let beams = s.beams().map_err(config_failure)?;
    let eps = s.cloud().map_err(config_failure)?.aspect_ratio();
    // χ = -2 ω_r t with ω_r → ω/4 of the configured beam geometry
    let omega = oscillation_frequency(&s.constants(), &beams);
    let times = grid(s.fig4_grid);
    let spec = s.initial_spec();
    let ladder: Vec<f64> = times
        .par_iter()
        .map(|&t| {
            let chi = -0.5 * omega * t;
            let state = build_initial_state(&spec.with_chi(chi), s.cutoff)?;
            Ok(retrieve(&state, &params)?.n_d)
        })
        .collect::<becgate::Result<_>>()
        .map_err(numerical(
            "retrieve",
            format!("fig4 grid, cutoff={}", s.cutoff),
        ))?;
    let shape = EnvelopeParams {
        y0: 0.0,
        amplitude: 1.0,
        tau: s.growth_tau,
        t0: s.envelope_t0,
        t4: s.envelope_t4,
        visibility: 0.0,
        omega: 0.0,
        t5: 0.0,
    };
    let envelope: Vec<f64> = times
        .iter()
        .map(|&t| envelope_model(t, &shape, eps))
        .collect::<becgate::Result<_>>()
        .map_err(numerical(
            "envelope_model",
            format!("t0={:e} t4={:e}", s.envelope_t0, s.envelope_t4),
        ))?;
    let peak = envelope.iter().copied().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(Failure::Numerical(
            "envelope_model vanishes on the whole fig4 grid".into(),
        ));
    }
    let mut table = Table::new(&["t_s", "chi_rad", "N_d_ladder", "envelope_rel", "N_d_model"]);
    for ((&t, &n), &e) in times.iter().zip(&ladder).zip(&envelope) {
        table.push(vec![t, -0.5 * omega * t, n, e / peak, n * e / peak]);
    }
    ctx.csv("fig4.csv", &table, "fig4")?;
    let model = table.column(4);
    let mut summary = format!(
        "omega_over_2pi_hz = {:e}\nperiod_s = {:e}\n",
        omega / (2.0 * PI),
        2.0 * PI / omega
    );
    let data = DataSeries::new(times.clone(), model.clone(), None)
        .map_err(numerical("fig4", "curve".into()))?;
    match fit_sinusoid_envelope(&data) {
        Ok(fit) => {
            let m = SinusoidEnvelope::from_fit(&fit);
            let _ = write!(
                summary,
                "fitted_omega_over_2pi_hz = {:e}\nfitted_visibility = {:e}\n",
                m.omega / (2.0 * PI),
                m.visibility
            );
        }
        Err(e) => log::warn!("sinusoid fit of the fig4 curve failed: {e}"),
    }
    ctx.out.write("fig4_summary.txt", &summary)?;
    ctx.plot(
        "fig4.svg",
        "Downward emission",
        "t_FWM [s]",
        "N_d",
        &[Series {
            name: "N_d model",
            x: &times,
            y: &model,
        }],
    )
}

fn validate(ctx: &mut Context) -> Outcome<bool> {
    let reports = run_all(ctx.settings);
    for r in &reports {
        println!("{}", r.summary_line());
    }
    let table = format_table(&reports);
    print!("{table}");
    ctx.out.write("validation.txt", &table)?;
    Ok(reports.iter().all(|r| r.passed()))
}
