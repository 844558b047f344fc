//! The bundled figure catalog: named, ready-made runs that produce the
//! plot data for the standard characterization panels, each in its own
//! self-describing directory under `<out>/figures/`.

use std::path::{Path, PathBuf};

use ferrosim_core::analysis;
use ferrosim_core::persist::FileMeta;
use serde_json::{json, Value};

use crate::config::Config;
use crate::experiments::{build_device, exec, ChartAxis, Emitter, Experiment, OutputFormat};

type DeriveFn = fn(&Config) -> Config;
type RunFn = fn(&Config, &mut Emitter) -> anyhow::Result<Option<Value>>;

enum FigureBody {
    /// Same output as the plain experiment subcommand.
    Std(Experiment),
    Custom(RunFn),
}

pub struct Figure {
    pub name: &'static str,
    pub description: &'static str,
    derive: DeriveFn,
    body: FigureBody,
}

fn identity(cfg: &Config) -> Config {
    cfg.clone()
}

fn std_run(exp: Experiment) -> FigureBody {
    FigureBody::Std(exp)
}

pub const FIGURE_NAMES: [&str; 14] = [
    "fig2a", "fig2b", "fig2c", "fig2d", "fig2e", "fig2f", "fig3a", "fig3b", "fig4ab", "fig4c",
    "fig4d", "fig5", "figs1", "figs6",
];

pub fn catalog() -> Vec<Figure> {
    vec![
        Figure {
            name: "fig2a",
            description: "C-V butterfly of the gate stack",
            derive: identity,
            body: std_run(Experiment::CvButterfly),
        },
        Figure {
            name: "fig2b",
            description: "P-V loops of the pristine and woken device",
            derive: |cfg| {
                let mut c = cfg.clone();
                c.device.wakeup =
                    Some(crate::config::WakeupSection { n_cycles: 0, ..Default::default() });
                c
            },
            body: FigureBody::Custom(run_fig2b),
        },
        Figure {
            name: "fig2c",
            description: "R-V staircase of a passive control stack (no switchable polarization)",
            derive: |cfg| {
                let mut c = cfg.clone();
                c.device.ensemble.p_sat = 0.0;
                c
            },
            body: std_run(Experiment::RvHysteresis),
        },
        Figure {
            name: "fig2d",
            description: "R-V hysteresis, 8 nm channel",
            derive: |cfg| {
                let mut c = cfg.clone();
                c.device.stack.d_wox = 8.0;
                c
            },
            body: std_run(Experiment::RvHysteresis),
        },
        Figure {
            name: "fig2e",
            description: "R-V hysteresis, 11.3 nm channel",
            derive: |cfg| {
                let mut c = cfg.clone();
                c.device.stack.d_wox = 11.3;
                c
            },
            body: std_run(Experiment::RvHysteresis),
        },
        Figure {
            name: "fig2f",
            description: "R-V hysteresis, 15 nm channel",
            derive: |cfg| {
                let mut c = cfg.clone();
                c.device.stack.d_wox = 15.0;
                c
            },
            body: std_run(Experiment::RvHysteresis),
        },
        Figure {
            name: "fig3a",
            description: "Nested minor resistance loops at decreasing sweep amplitude",
            derive: identity,
            body: std_run(Experiment::MinorLoops),
        },
        Figure {
            name: "fig3b",
            description: "Multilevel retention ladder with per-state read traces",
            derive: identity,
            body: std_run(Experiment::Retention),
        },
        Figure {
            name: "fig4ab",
            description: "Potentiation/depression pulse ladder, amplitude scheme",
            derive: identity,
            body: std_run(Experiment::PotdepAmplitude),
        },
        Figure {
            name: "fig4c",
            description: "Cycle-to-cycle scatter per pulse position over 20 cycles",
            derive: |cfg| {
                let mut c = cfg.clone();
                c.potdep.n_cycles = 20;
                c
            },
            body: FigureBody::Custom(run_fig4c),
        },
        Figure {
            name: "fig4d",
            description: "Potentiation/depression pulse ladder, width scheme",
            derive: identity,
            body: std_run(Experiment::PotdepWidth),
        },
        Figure {
            name: "fig5",
            description: "Linearity, symmetry, SNR, and energy metrics of the default ladder",
            derive: identity,
            body: std_run(Experiment::Metrics),
        },
        Figure {
            name: "figs1",
            description: "Wake-up endurance: switchable polarization vs cycle count",
            derive: identity,
            body: std_run(Experiment::Endurance),
        },
        Figure {
            name: "figs6",
            description: "Depletion width vs donor density at several gate biases",
            derive: identity,
            body: std_run(Experiment::XdCurve),
        },
    ]
}

/// Resolves a selector to catalog entries: a figure name, or "all".
pub fn select(selector: &str) -> Result<Vec<Figure>, String> {
    let all = catalog();
    if selector == "all" {
        return Ok(all);
    }
    let found: Vec<Figure> = all.into_iter().filter(|f| f.name == selector).collect();
    if found.is_empty() {
        return Err(format!(
            "unknown figure {selector:?}; expected \"all\" or one of: {}",
            FIGURE_NAMES.join(", ")
        ));
    }
    Ok(found)
}

pub struct FigureOutcome {
    pub name: &'static str,
    pub description: &'static str,
    pub dir: PathBuf,
    pub outputs: Vec<String>,
}

/// Runs one figure into `out_root/figures/<name>/` with its derived config.
pub fn run_figure(
    fig: &Figure,
    base: &Config,
    out_root: &Path,
    format: OutputFormat,
) -> anyhow::Result<FigureOutcome> {
    let cfg = (fig.derive)(base);
    let dir = out_root.join("figures").join(fig.name);
    let meta =
        FileMeta { experiment: fig.name.to_string(), seed: cfg.run.seed, config_hash: cfg.hash() };
    let mut em = Emitter::new(&dir, meta, format)?;
    em.write_text("resolved.toml", &cfg.resolved_toml())?;
    let summary = match fig.body {
        FigureBody::Std(exp) => exec(exp, &cfg, &mut em, None)?.summary,
        FigureBody::Custom(run) => run(&cfg, &mut em)?,
    };
    let manifest = json!({
        "figure": fig.name,
        "description": fig.description,
        "seed": cfg.run.seed,
        "config_hash": cfg.hash(),
        "outputs": em.outputs(),
        "summary": summary,
    });
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    em.write_text("manifest.json", &text)?;
    Ok(FigureOutcome {
        name: fig.name,
        description: fig.description,
        dir,
        outputs: em.outputs().to_vec(),
    })
}

/// Writes the invocation's index manifest at `out_root/figures/index.json`
/// and returns its text.
pub fn write_index(out_root: &Path, outcomes: &[FigureOutcome]) -> anyhow::Result<String> {
    let entries: Vec<Value> = outcomes
        .iter()
        .map(|o| {
            json!({
                "name": o.name,
                "description": o.description,
                "dir": o.name,
                "outputs": o.outputs,
            })
        })
        .collect();
    let index = json!({ "figures": entries });
    let mut text = serde_json::to_string_pretty(&index)?;
    text.push('\n');
    let dir = out_root.join("figures");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("index.json"), &text)?;
    Ok(text)
}

/// Pristine vs woken P-V loops from the same seeded ensemble. The derived
/// config pins the pristine state; the woken twin repeats the loop after
/// 100k wake-up cycles.
fn run_fig2b(cfg: &Config, em: &mut Emitter) -> anyhow::Result<Option<Value>> {
    const WOKEN_CYCLES: i64 = 100_000;
    let p = &cfg.pv_loop;

    let mut pristine = build_device(cfg)?;
    let trace = pristine.pv_loop(p.amplitude, p.frequency, p.samples_per_period, p.n_periods)?;
    em.write_trace("pristine.csv", &trace, ChartAxis::DriveVoltage)?;

    let mut woken_cfg = cfg.clone();
    if let Some(w) = &mut woken_cfg.device.wakeup {
        w.n_cycles = WOKEN_CYCLES;
    }
    let mut woken = build_device(&woken_cfg)?;
    let trace = woken.pv_loop(p.amplitude, p.frequency, p.samples_per_period, p.n_periods)?;
    em.write_trace("woken.csv", &trace, ChartAxis::DriveVoltage)?;

    let pristine_cycles = cfg.device.wakeup.as_ref().map_or(0, |w| w.n_cycles);
    Ok(Some(json!({
        "pristine_n_cycles": pristine_cycles,
        "woken_n_cycles": WOKEN_CYCLES,
    })))
}

/// Pulse ladder plus per-position cycle scatter.
fn run_fig4c(cfg: &Config, em: &mut Emitter) -> anyhow::Result<Option<Value>> {
    let mut device = build_device(cfg)?;
    let series =
        device.potentiation_depression(&cfg.pulse_scheme_amplitude(), cfg.potdep.n_cycles)?;
    em.write_series("pulses.csv", &series)?;

    let stats = analysis::cycle_stats(&series, cfg.device_stack().r_on())?;
    let rows: Vec<Vec<String>> = stats
        .positions
        .iter()
        .map(|p| {
            vec![
                p.branch.label().to_string(),
                p.pulse_index.to_string(),
                format!("{}", p.v_write),
                format!("{}", p.mean),
                format!("{}", p.sigma),
                format!("{}", p.sigma_over_r_on),
            ]
        })
        .collect();
    em.write_rows(
        "cycles.csv",
        &["branch", "pulse_index", "v_write", "mean", "sigma", "sigma_over_r_on"],
        &rows,
    )?;
    Ok(Some(json!({
        "n_cycles": series.n_cycles(),
        "mean_sigma_over_r_on": stats.mean_sigma_over_r_on(),
    })))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_matches_the_published_names() {
        let names: Vec<&str> = catalog().iter().map(|f| f.name).collect();
        assert_eq!(names, FIGURE_NAMES);
    }

    #[test]
    fn selecting_all_returns_the_whole_catalog() {
        assert_eq!(select("all").unwrap().len(), FIGURE_NAMES.len());
    }

    #[test]
    fn unknown_names_list_the_catalog() {
        let err = match select("fig9z") {
            Err(e) => e,
            Ok(_) => panic!("fig9z should not resolve"),
        };
        assert!(err.contains("fig2a") && err.contains("figs6"), "{err}");
    }

    #[test]
    fn derivations_stay_valid() {
        let base = Config::default();
        for fig in catalog() {
            let derived = (fig.derive)(&base);
            assert!(
                crate::config::violations(&derived).is_empty(),
                "figure {} derives an invalid config",
                fig.name
            );
        }
    }
}
