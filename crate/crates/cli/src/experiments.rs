//! Experiment execution: builds the device from a [`Config`], runs one
//! protocol, and writes a self-describing output directory (resolved config,
//! data files, manifest).

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::Context;
use ferrosim_core::analysis::{self, EnergyInputs, MetricsParams};
use ferrosim_core::instrument::{FeFETDevice, PulseSeries};
use ferrosim_core::persist::{
    read_pulse_series_csv, write_pulse_series_csv, write_table_csv, write_trace_csv, FileMeta,
    Table,
};
use ferrosim_core::{xd_vs_nd_curve, DomainEnsemble, Trace};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Config;
use crate::svg;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "svg" => Ok(OutputFormat::Svg),
            other => Err(format!("unknown format {other:?}; expected csv, json, or svg")),
        }
    }
}

/// Which trace field drives the x axis of an SVG chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartAxis {
    DriveVoltage,
    Time,
}

/// Writes files into one output directory and records their names for the
/// manifest. All CSV data carries the experiment/seed/config-hash header.
pub struct Emitter {
    dir: PathBuf,
    meta: FileMeta,
    svg: bool,
    outputs: Vec<String>,
}

impl Emitter {
    pub fn new(dir: &Path, meta: FileMeta, format: OutputFormat) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            meta,
            svg: format == OutputFormat::Svg,
            outputs: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn write_trace(
        &mut self,
        name: &str,
        trace: &Trace,
        axis: ChartAxis,
    ) -> anyhow::Result<()> {
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, trace, &self.meta)?;
        self.write_text(name, std::str::from_utf8(&buf)?)?;
        if self.svg {
            let (points, x_label): (Vec<(f64, f64)>, &str) = match axis {
                ChartAxis::DriveVoltage => {
                    (trace.samples.iter().map(|s| (s.v, s.value)).collect(), "V (V)")
                }
                ChartAxis::Time => {
                    (trace.samples.iter().map(|s| (s.t, s.value)).collect(), "t (s)")
                }
            };
            let y_label = format!("{} ({})", trace.kind.label(), trace.kind.unit());
            let chart = svg::line_chart(&self.chart_title(name), x_label, &y_label, &points);
            self.write_text(&svg_name(name), &chart)?;
        }
        Ok(())
    }

    pub fn write_series(&mut self, name: &str, series: &PulseSeries) -> anyhow::Result<()> {
        let mut buf = Vec::new();
        write_pulse_series_csv(&mut buf, series, &self.meta)?;
        self.write_text(name, std::str::from_utf8(&buf)?)?;
        if self.svg {
            let points: Vec<(f64, f64)> =
                series.points.iter().enumerate().map(|(i, p)| ((i + 1) as f64, p.r_ds)).collect();
            let chart = svg::line_chart(&self.chart_title(name), "pulse #", "r_ds (ohm)", &points);
            self.write_text(&svg_name(name), &chart)?;
        }
        Ok(())
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> anyhow::Result<()> {
        let mut buf = Vec::new();
        write_table_csv(&mut buf, table, &self.meta)?;
        self.write_text(name, std::str::from_utf8(&buf)?)
    }

    /// CSV with arbitrary (possibly non-numeric) cells, same header block as
    /// the table writer.
    pub fn write_rows(
        &mut self,
        name: &str,
        columns: &[&str],
        rows: &[Vec<String>],
    ) -> anyhow::Result<()> {
        let mut text = String::new();
        text.push_str(&format!("# experiment: {}\n", self.meta.experiment));
        text.push_str(&format!("# seed: {}\n", self.meta.seed));
        text.push_str(&format!("# config_hash: {}\n", self.meta.config_hash));
        text.push_str(&columns.join(","));
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.write_text(name, &text)
    }

    fn chart_title(&self, name: &str) -> String {
        format!("{} {}", self.meta.experiment, name.trim_end_matches(".csv"))
    }
}

fn svg_name(csv_name: &str) -> String {
    format!("{}.svg", csv_name.trim_end_matches(".csv"))
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    PvLoop,
    CvButterfly,
    RvHysteresis,
    MinorLoops,
    Pund,
    Endurance,
    Retention,
    PotdepAmplitude,
    PotdepWidth,
    XdCurve,
    Metrics,
}

pub const ALL_EXPERIMENTS: [Experiment; 11] = [
    Experiment::PvLoop,
    Experiment::CvButterfly,
    Experiment::RvHysteresis,
    Experiment::MinorLoops,
    Experiment::Pund,
    Experiment::Endurance,
    Experiment::Retention,
    Experiment::PotdepAmplitude,
    Experiment::PotdepWidth,
    Experiment::XdCurve,
    Experiment::Metrics,
];

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::PvLoop => "pv-loop",
            Experiment::CvButterfly => "cv-butterfly",
            Experiment::RvHysteresis => "rv-hysteresis",
            Experiment::MinorLoops => "minor-loops",
            Experiment::Pund => "pund",
            Experiment::Endurance => "endurance",
            Experiment::Retention => "retention",
            Experiment::PotdepAmplitude => "potdep-amplitude",
            Experiment::PotdepWidth => "potdep-width",
            Experiment::XdCurve => "xd-curve",
            Experiment::Metrics => "metrics",
        }
    }

    pub fn parse(s: &str) -> Result<Self, String> {
        ALL_EXPERIMENTS.iter().copied().find(|e| e.name() == s).ok_or_else(|| {
            let names: Vec<&str> = ALL_EXPERIMENTS.iter().map(|e| e.name()).collect();
            format!("unknown experiment {s:?}; expected one of: {}", names.join(", "))
        })
    }
}

/// What a finished run hands back to the command layer.
pub struct RunOutcome {
    pub dir: PathBuf,
    pub n_files: usize,
    pub manifest_json: String,
    /// Full analysis report, present for the metrics experiment.
    pub report_json: Option<String>,
}

pub(crate) struct ExecResult {
    pub summary: Option<Value>,
    pub report_json: Option<String>,
}

impl ExecResult {
    fn summary(value: Value) -> Self {
        Self { summary: Some(value), report_json: None }
    }
}

/// Device as described by the config: seeded ensemble, stack, instrument,
/// and optional wake-up history.
pub fn build_device(cfg: &Config) -> anyhow::Result<FeFETDevice> {
    let seed = cfg.run.seed;
    let ensemble = DomainEnsemble::build(&cfg.ensemble_config(seed))?;
    let mut device = FeFETDevice::new(ensemble, cfg.device_stack(), cfg.instrument_config(seed))?;
    if let Some(w) = &cfg.device.wakeup {
        device.set_wakeup(w.n_cycles, w.n_w, w.a_min)?;
    }
    Ok(device)
}

/// Runs one experiment into `out_root/<experiment>/`: resolved config first,
/// data files, manifest last.
pub fn run_experiment(
    exp: Experiment,
    cfg: &Config,
    out_root: &Path,
    format: OutputFormat,
    input: Option<&Path>,
) -> anyhow::Result<RunOutcome> {
    let dir = out_root.join(exp.name());
    let meta = FileMeta {
        experiment: exp.name().to_string(),
        seed: cfg.run.seed,
        config_hash: cfg.hash(),
    };
    let mut em = Emitter::new(&dir, meta, format)?;
    em.write_text("resolved.toml", &cfg.resolved_toml())?;
    let result = exec(exp, cfg, &mut em, input)?;
    let manifest = json!({
        "experiment": exp.name(),
        "seed": cfg.run.seed,
        "config_hash": cfg.hash(),
        "outputs": em.outputs(),
        "summary": result.summary,
    });
    let mut manifest_json = serde_json::to_string_pretty(&manifest)?;
    manifest_json.push('\n');
    em.write_text("manifest.json", &manifest_json)?;
    Ok(RunOutcome {
        dir,
        n_files: em.outputs().len(),
        manifest_json,
        report_json: result.report_json,
    })
}

pub(crate) fn exec(
    exp: Experiment,
    cfg: &Config,
    em: &mut Emitter,
    input: Option<&Path>,
) -> anyhow::Result<ExecResult> {
    match exp {
        Experiment::PvLoop => exec_pv_loop(cfg, em),
        Experiment::CvButterfly => exec_cv_butterfly(cfg, em),
        Experiment::RvHysteresis => exec_rv_hysteresis(cfg, em),
        Experiment::MinorLoops => exec_minor_loops(cfg, em),
        Experiment::Pund => exec_pund(cfg, em),
        Experiment::Endurance => exec_endurance(cfg, em),
        Experiment::Retention => exec_retention(cfg, em),
        Experiment::PotdepAmplitude => exec_potdep(cfg, em, false),
        Experiment::PotdepWidth => exec_potdep(cfg, em, true),
        Experiment::XdCurve => exec_xd_curve(cfg, em),
        Experiment::Metrics => exec_metrics(cfg, em, input),
    }
}

fn exec_pv_loop(cfg: &Config, em: &mut Emitter) -> anyhow::Result<ExecResult> {
    let p = &cfg.pv_loop;
    let mut device = build_device(cfg)?;
    let trace = device.pv_loop(p.amplitude, p.frequency, p.samples_per_period, p.n_periods)?;
    em.write_trace("trace.csv", &trace, ChartAxis::DriveVoltage)?;
    // A loop that never crosses zero has no remanence to report; the trace
    // alone is still a valid outcome.
    let summary = analysis::loop_remanence(&trace).ok().map(|m| json!(m));
    Ok(ExecResult { summary, report_json: None })
}

fn exec_cv_butterfly(cfg: &Config, em: &mut Emitter) -> anyhow::Result<ExecResult> {
    let c = &cfg.cv_butterfly;
    let mut device = build_device(cfg)?;
    let trace = device.cv_butterfly(c.v_range, c.dv)?;
    em.write_trace("trace.csv", &trace, ChartAxis::DriveVoltage)?;
    Ok(ExecResult { summary: None, report_json: None })
}

fn exec_rv_hysteresis(cfg: &Config, em: &mut Emitter) -> anyhow::Result<ExecResult> {
    let r = &cfg.rv_hysteresis;
    let mut device = build_device(cfg)?;
    let trace = device.rv_hysteresis(r.v_max, r.v_min, r.n_steps, r.width)?;
    em.write_trace("trace.csv", &trace, ChartAxis::DriveVoltage)?;
    let (lo, hi) = trace
        .values()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    Ok(ExecResult::summary(json!({ "r_min": lo, "r_max": hi })))
}

fn exec_minor_loops(cfg: &Config, em: &mut Emitter) -> anyhow::Result<ExecResult> {
    let m = &cfg.minor_loops;
    let mut device = build_device(cfg)?;
    for (i, &amp) in m.amplitudes.iter().enumerate() {
        let trace = device.rv_hysteresis(amp, -amp, m.n_steps, m.width)?;
        em.write_trace(&format!("minor_loop_{}.csv", i + 1), &trace, ChartAxis::DriveVoltage)?;
    }
    Ok(ExecResult::summary(json!({ "amplitudes": m.amplitudes })))
}

fn exec_pund(cfg: &Config, em: &mut Emitter) -> anyhow::Result<ExecResult> {
    let p = &cfg.pund;
    let mut device = build_device(cfg)?;
    let r = device.pund(p.amplitude, p.width)?;
    let mut table =
        Table::new(&["p_switched", "u_switched", "n_switched", "d_switched", "total_remanent"]);
    table.push(vec![r.p_switched, r.u_switched, r.n_switched, r.d_switched, r.total_remanent]);
    em.write_table("pund.csv", &table)?;
    Ok(ExecResult::summary(json!(r)))
}

fn exec_endurance(cfg: &Config, em: &mut Emitter) -> anyhow::Result<ExecResult> {
    let e = &cfg.endurance;
    let mut device = build_device(cfg)?;
    let points = device.endurance_run(
        &e.points,
        &cfg.endurance_legs(),
        e.amplitude,
        e.width,
        e.n_w,
        e.a_min,
    )?;
    let mut table = Table::new(&["n_cycles", "t_seconds", "p_total", "active_fraction"]);
    for p in &points {
        table.push(vec![p.n_cycles as f64, p.t, p.p_total, p.active_fraction]);
    }
    em.write_table("endurance.csv", &table)?;
    let last = points.last().expect("endurance_run returns at least one point");
    Ok(ExecResult::summary(json!({
        "final_p_total": last.p_total,
        "final_active_fraction": last.active_fraction,
    })))
}

fn exec_retention(cfg: &Config, em: &mut Emitter) -> anyhow::Result<ExecResult> {
    let mut device = build_device(cfg)?;
    let result = device.retention_protocol(&cfg.retention_params())?;
    let mut ladder = Table::new(&["state", "write_amplitude", "target_r"]);
    for s in &result.states {
        ladder.push(vec![s.index as f64, s.write_amplitude, s.target_r]);
    }
    em.write_table("ladder.csv", &ladder)?;
    let pad = result.states.len().to_string().len();
    for (i, trace) in result.traces.iter().enumerate() {
        em.write_trace(&format!("state_{:0pad$}.csv", i + 1), trace, ChartAxis::Time)?;
    }
    let k = cfg.metrics.k_sigma;
    let n = analysis::states_distinguishable(&result.traces, k)?;
    Ok(ExecResult::summary(json!({ "states_distinguishable": n, "k_sigma": k })))
}

fn exec_potdep(cfg: &Config, em: &mut Emitter, width_ramp: bool) -> anyhow::Result<ExecResult> {
    let (scheme, n_cycles) = if width_ramp {
        (cfg.pulse_scheme_width(), cfg.potdep_width.n_cycles)
    } else {
        (cfg.pulse_scheme_amplitude(), cfg.potdep.n_cycles)
    };
    let mut device = build_device(cfg)?;
    let series = device.potentiation_depression(&scheme, n_cycles)?;
    em.write_series("pulses.csv", &series)?;
    Ok(ExecResult::summary(json!({
        "n_cycles": series.n_cycles(),
        "pulses_per_cycle": series.points.len() / series.n_cycles().max(1) as usize,
    })))
}

fn exec_xd_curve(cfg: &Config, em: &mut Emitter) -> anyhow::Result<ExecResult> {
    let x = &cfg.xd_curve;
    let grid = analysis::geomspace(x.n_d_min, x.n_d_max, x.n_points);
    let rows = xd_vs_nd_curve(&cfg.device_stack(), &grid, &x.v_gs)?;
    let mut table = Table::new(&["n_d", "v_gs", "x_d"]);
    for r in &rows {
        table.push(vec![r.n_d, r.v_gs, r.x_d]);
    }
    em.write_table("xd.csv", &table)?;
    Ok(ExecResult { summary: None, report_json: None })
}

fn exec_metrics(
    cfg: &Config,
    em: &mut Emitter,
    input: Option<&Path>,
) -> anyhow::Result<ExecResult> {
    let series = match input {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            read_pulse_series_csv(BufReader::new(file))
                .with_context(|| format!("reading pulse series from {}", path.display()))?
        }
        None => {
            let mut device = build_device(cfg)?;
            device.potentiation_depression(&cfg.pulse_scheme_amplitude(), cfg.potdep.n_cycles)?
        }
    };
    em.write_series("pulses.csv", &series)?;

    let m = &cfg.metrics;
    let stack = cfg.device_stack();
    let params = MetricsParams {
        pot_fit_window: (m.pot_fit_window[0], m.pot_fit_window[1]),
        dep_fit_window: (m.dep_fit_window[0], m.dep_fit_window[1]),
        sf_levels: m.sf_levels,
        r_on: stack.r_on(),
        energy: EnergyInputs {
            v: m.energy_v,
            i_gate: m.i_gate,
            t: m.energy_t,
            width_um: stack.width,
            length_um: stack.length,
        },
    };
    let bundle = analysis::metrics_bundle(&series, &params)?;
    let report = &bundle.report;

    let branches = [
        ("potentiation", &report.potentiation, &bundle.potentiation_fit),
        ("depression", &report.depression, &bundle.depression_fit),
    ];

    let mut gpr_rows = Vec::new();
    let mut residual_rows = Vec::new();
    let mut snr_rows = Vec::new();
    for (label, rep, fit) in branches {
        let xs: Vec<f64> = rep.pulse_index.iter().map(|i| *i as f64).collect();
        let mean = fit.posterior_mean(&xs);
        let var = fit.posterior_variance(&xs);
        for ((idx, mu), v) in rep.pulse_index.iter().zip(&mean).zip(&var) {
            gpr_rows.push(vec![label.to_string(), idx.to_string(), fmt(*mu), fmt(v.sqrt())]);
        }
        for (vw, res) in rep.fit_v_write.iter().zip(&rep.fit_residuals) {
            residual_rows.push(vec![label.to_string(), fmt(*vw), fmt(*res)]);
        }
        for ((idx, dr), s) in rep.pulse_index.iter().zip(&rep.delta_r).zip(&rep.snr) {
            snr_rows.push(vec![label.to_string(), idx.to_string(), fmt(*dr), fmt(*s)]);
        }
    }
    em.write_rows(
        "gpr.csv",
        &["branch", "pulse_index", "posterior_mean", "posterior_sd"],
        &gpr_rows,
    )?;
    em.write_rows("residuals.csv", &["branch", "v_write", "residual"], &residual_rows)?;
    em.write_rows("snr.csv", &["branch", "pulse_index", "delta_r", "snr"], &snr_rows)?;

    let mut sf_table = Table::new(&["level_ohm", "sf"]);
    for (level, sf) in report.sf.levels.iter().zip(&report.sf.sf) {
        sf_table.push(vec![*level, *sf]);
    }
    em.write_table("sf.csv", &sf_table)?;

    let mut cycle_rows = Vec::new();
    if series.n_cycles() >= 3 {
        let stats = analysis::cycle_stats(&series, params.r_on)?;
        for p in &stats.positions {
            cycle_rows.push(vec![
                p.branch.label().to_string(),
                p.pulse_index.to_string(),
                fmt(p.v_write),
                fmt(p.mean),
                fmt(p.sigma),
                fmt(p.sigma_over_r_on),
            ]);
        }
    }
    em.write_rows(
        "cycles.csv",
        &["branch", "pulse_index", "v_write", "mean", "sigma", "sigma_over_r_on"],
        &cycle_rows,
    )?;

    let mut report_json = serde_json::to_string_pretty(report)?;
    report_json.push('\n');
    em.write_text("metrics.json", &report_json)?;

    let summary = json!({
        "sf_mean": report.sf_mean,
        "sf_center": report.sf_center,
        "adj_r2_potentiation": report.potentiation.fit.adj_r2,
        "adj_r2_depression": report.depression.fit.adj_r2,
        "cycle_sigma_over_r_on": report.cycle_sigma_over_r_on,
        "energy_per_area_j_um2": report.energy_per_area_j_um2,
    });
    Ok(ExecResult { summary: Some(summary), report_json: Some(report_json) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_names_round_trip() {
        for e in ALL_EXPERIMENTS {
            assert_eq!(Experiment::parse(e.name()).unwrap(), e);
        }
    }

    #[test]
    fn unknown_experiment_lists_the_valid_names() {
        let err = Experiment::parse("pv_loop").unwrap_err();
        assert!(err.contains("pv-loop") && err.contains("metrics"), "{err}");
    }

    #[test]
    fn svg_names_replace_the_extension() {
        assert_eq!(svg_name("trace.csv"), "trace.svg");
        assert_eq!(svg_name("state_01.csv"), "state_01.svg");
    }
}
