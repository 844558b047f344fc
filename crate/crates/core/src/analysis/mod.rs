//! Metrology for programmed pulse series: linear response fits, GP denoising,
//! per-pulse step sizes and signal-to-noise ratios, potentiation/depression
//! symmetry profiles, cycle-to-cycle statistics, write energy, and a count of
//! statistically distinguishable resistance states.
//!
//! Everything here is pure: no RNG, no I/O, no shared state.

pub mod gpr;

pub use gpr::{geomspace, gpr_fit, gpr_fit_with_grid, GprFit, GprModel, HyperGrid};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instrument::{Branch, PulseSeries};
use crate::waveform::Trace;

/// Number of matched-resistance levels in the default symmetry profile.
pub const SF_LEVELS: usize = 32;

/// Arithmetic mean. Zero for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator). Zero below two points.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Ordinary least-squares line fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// R² adjusted for the two fitted parameters:
    /// 1 − (1 − R²)(n − 1)/(n − 2).
    pub adj_r2: f64,
    /// Residuals (observed − fitted) divided by the observed value span,
    /// in input order. Left unscaled when the span is zero (they are all
    /// exactly zero in that case).
    pub residuals: Vec<f64>,
}

/// Least-squares fit of y against x. Needs at least 3 points and non-zero
/// x variance.
pub fn linear_fit(points: &[(f64, f64)]) -> Result<LinearFit> {
    let n = points.len();
    if n < 3 {
        return Err(Error::AnalysisInput(format!("linear fit needs at least 3 points, got {n}")));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::AnalysisInput("linear fit inputs must be finite".into()));
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::AnalysisInput("linear fit needs non-zero x variance".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;

    let ss_res: f64 = points.iter().map(|p| (p.1 - (slope * p.0 + intercept)).powi(2)).sum();
    let ss_tot: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    let adj_r2 = 1.0 - (1.0 - r2) * (nf - 1.0) / (nf - 2.0);

    let lo = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let residuals = points
        .iter()
        .map(|p| {
            let r = p.1 - (slope * p.0 + intercept);
            if span > 0.0 {
                r / span
            } else {
                r
            }
        })
        .collect();

    Ok(LinearFit { slope, intercept, r2, adj_r2, residuals })
}

/// Posterior-mean step between consecutive programming levels:
/// ΔR_i = mean(indices[i + 1]) − mean(indices[i]). Needs at least 2 indices.
pub fn delta_r(fit: &GprFit, indices: &[f64]) -> Result<Vec<f64>> {
    if indices.len() < 2 {
        return Err(Error::AnalysisInput(format!(
            "delta_r needs at least 2 indices, got {}",
            indices.len()
        )));
    }
    let m = fit.posterior_mean(indices);
    Ok(m.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Per-pulse signal-to-noise ratios |ΔR_i| / σ_res.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snr {
    pub values: Vec<f64>,
    /// Sample standard deviation of (observed − posterior mean) over the
    /// training series.
    pub sigma_res: f64,
    /// Set when σ_res is exactly zero; non-zero steps then report +∞.
    pub noise_free: bool,
}

/// Signal-to-noise of each programming step: the posterior-mean step size
/// divided by the residual scatter of the fit on its own training data.
pub fn snr(fit: &GprFit, x: &[f64], y: &[f64], indices: &[f64]) -> Result<Snr> {
    if x.len() != y.len() {
        return Err(Error::AnalysisInput(format!(
            "x and y lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let m = fit.posterior_mean(x);
    let residuals: Vec<f64> = y.iter().zip(&m).map(|(yi, mi)| yi - mi).collect();
    let sigma_res = sample_std(&residuals);
    let steps = delta_r(fit, indices)?;
    let noise_free = sigma_res == 0.0;
    let values = steps
        .iter()
        .map(|d| {
            if noise_free {
                if *d == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                d.abs() / sigma_res
            }
        })
        .collect();
    Ok(Snr { values, sigma_res, noise_free })
}

/// Symmetry factor |a − b| / (a + b) between matched potentiation and
/// depression step magnitudes. 0 means perfectly symmetric, 1 means one
/// branch is flat.
pub fn symmetry_factor(dr_pot: f64, dr_dep: f64) -> Result<f64> {
    if !(dr_pot.is_finite() && dr_dep.is_finite()) || dr_pot < 0.0 || dr_dep < 0.0 {
        return Err(Error::AnalysisInput(
            "symmetry factor takes non-negative step magnitudes".into(),
        ));
    }
    if dr_pot == 0.0 && dr_dep == 0.0 {
        return Err(Error::AnalysisInput("SF undefined at flat point".into()));
    }
    Ok((dr_pot - dr_dep).abs() / (dr_pot + dr_dep))
}

/// One branch reduced to (resistance level, step magnitude) pairs for
/// matched-level comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchProfile {
    /// Resistance at the midpoint of each step.
    pub r: Vec<f64>,
    /// Step magnitude |ΔR| at that level.
    pub dr: Vec<f64>,
}

impl BranchProfile {
    /// Builds the profile from a fitted branch: posterior means at the given
    /// programming indices, each step attached to the midpoint of the two
    /// levels it connects.
    pub fn from_fit(fit: &GprFit, indices: &[f64]) -> Result<Self> {
        if indices.len() < 3 {
            return Err(Error::AnalysisInput(format!(
                "branch profile needs at least 3 indices, got {}",
                indices.len()
            )));
        }
        let m = fit.posterior_mean(indices);
        let r = m.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let dr = m.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        Ok(Self { r, dr })
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.r.len() != self.dr.len() {
            return Err(Error::AnalysisInput(format!("{name} profile arrays differ in length")));
        }
        if self.r.len() < 2 {
            return Err(Error::AnalysisInput(format!(
                "{name} profile needs at least 2 levels, got {}",
                self.r.len()
            )));
        }
        if self.r.iter().chain(self.dr.iter()).any(|v| !v.is_finite()) {
            return Err(Error::AnalysisInput(format!("{name} profile must be finite")));
        }
        if self.dr.iter().any(|v| *v < 0.0) {
            return Err(Error::AnalysisInput(format!("{name} step magnitudes must be >= 0")));
        }
        Ok(())
    }

    /// Pairs sorted by resistance level, for interpolation.
    fn sorted(&self) -> (Vec<f64>, Vec<f64>) {
        let mut pairs: Vec<(f64, f64)> =
            self.r.iter().copied().zip(self.dr.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.into_iter().unzip()
    }
}

/// Symmetry factor evaluated on a shared resistance grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SfProfile {
    /// Matched resistance levels, ascending.
    pub levels: Vec<f64>,
    /// SF at each level.
    pub sf: Vec<f64>,
}

impl SfProfile {
    pub fn sf_mean(&self) -> f64 {
        mean(&self.sf)
    }

    /// Average over the central third of the level grid.
    pub fn sf_center(&self) -> f64 {
        central_third_mean(&self.sf)
    }
}

/// Mean of values[n/3 .. n − n/3].
fn central_third_mean(values: &[f64]) -> f64 {
    let n = values.len();
    let lo = n / 3;
    let hi = n - n / 3;
    mean(&values[lo..hi])
}

/// Matches the two branches on a common resistance grid over the overlap of
/// their level ranges and evaluates SF at `n_levels` points. Errors when the
/// ranges do not overlap.
pub fn sf_profile(pot: &BranchProfile, dep: &BranchProfile, n_levels: usize) -> Result<SfProfile> {
    pot.validate("potentiation")?;
    dep.validate("depression")?;
    if n_levels < 3 {
        return Err(Error::AnalysisInput(format!(
            "symmetry profile needs at least 3 levels, got {n_levels}"
        )));
    }
    let (pr, pd) = pot.sorted();
    let (dr_lv, dd) = dep.sorted();
    let lo = pr[0].max(dr_lv[0]);
    let hi = pr[pr.len() - 1].min(dr_lv[dr_lv.len() - 1]);
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Err(Error::AnalysisInput(
            "branch resistance ranges do not overlap; no matched levels exist".into(),
        ));
    }
    let mut levels = Vec::with_capacity(n_levels);
    let mut sf = Vec::with_capacity(n_levels);
    for i in 0..n_levels {
        let level = lo + (hi - lo) * i as f64 / (n_levels - 1) as f64;
        let a = interp_sorted(&pr, &pd, level);
        let b = interp_sorted(&dr_lv, &dd, level);
        let s = symmetry_factor(a, b)
            .map_err(|e| Error::AnalysisInput(format!("at matched level {level}: {e}")))?;
        levels.push(level);
        sf.push(s);
    }
    Ok(SfProfile { levels, sf })
}

/// Piecewise-linear interpolation on an ascending grid, clamped at the ends.
fn interp_sorted(xs: &[f64], ys: &[f64], q: f64) -> f64 {
    let n = xs.len();
    if q <= xs[0] {
        return ys[0];
    }
    if q >= xs[n - 1] {
        return ys[n - 1];
    }
    let j = xs.partition_point(|&x| x < q);
    let (x0, x1) = (xs[j - 1], xs[j]);
    if x1 == x0 {
        ys[j]
    } else {
        ys[j - 1] + (ys[j] - ys[j - 1]) * (q - x0) / (x1 - x0)
    }
}

/// Remanent values and coercive crossings extracted from a closed
/// polarization loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopMetrics {
    /// Polarization where the descending sweep crosses 0 V.
    pub p_r_plus: f64,
    /// Polarization where the ascending sweep crosses 0 V.
    pub p_r_minus: f64,
    /// Drive voltage where polarization crosses zero on the ascending sweep.
    pub v_c_plus: f64,
    /// Drive voltage where polarization crosses zero on the descending sweep.
    pub v_c_minus: f64,
}

/// Extracts remanence and coercive crossings from a polarization trace by
/// linear interpolation between samples. When a crossing occurs more than
/// once the last occurrence wins, so a multi-period trace reports the
/// settled loop. Errors unless all four crossings are present.
pub fn loop_remanence(trace: &Trace) -> Result<LoopMetrics> {
    let s = &trace.samples;
    if s.len() < 3 {
        return Err(Error::AnalysisInput(format!(
            "loop extraction needs at least 3 samples, got {}",
            s.len()
        )));
    }
    let mut p_r_plus = None;
    let mut p_r_minus = None;
    let mut v_c_plus = None;
    let mut v_c_minus = None;
    for w in s.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let descending = b.v < a.v;
        let ascending = b.v > a.v;
        // Drive crosses 0 V: read off the polarization there.
        if (a.v != b.v && (a.v > 0.0) != (b.v > 0.0)) || (b.v == 0.0 && a.v != 0.0) {
            let f = a.v / (a.v - b.v);
            let p = a.value + (b.value - a.value) * f;
            if descending {
                p_r_plus = Some(p);
            } else if ascending {
                p_r_minus = Some(p);
            }
        }
        // Polarization crosses zero: read off the drive voltage there.
        if (a.value != b.value && (a.value > 0.0) != (b.value > 0.0))
            || (b.value == 0.0 && a.value != 0.0)
        {
            let f = a.value / (a.value - b.value);
            let v = a.v + (b.v - a.v) * f;
            if ascending {
                v_c_plus = Some(v);
            } else if descending {
                v_c_minus = Some(v);
            }
        }
    }
    match (p_r_plus, p_r_minus, v_c_plus, v_c_minus) {
        (Some(pp), Some(pm), Some(vp), Some(vm)) => {
            Ok(LoopMetrics { p_r_plus: pp, p_r_minus: pm, v_c_plus: vp, v_c_minus: vm })
        }
        _ => Err(Error::AnalysisInput(
            "polarization loop does not close; zero crossings are missing".into(),
        )),
    }
}

/// Cycle-to-cycle statistics of one pulse position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionStat {
    pub branch: Branch,
    pub pulse_index: u32,
    pub v_write: f64,
    /// Mean resistance over cycles.
    pub mean: f64,
    /// Sample standard deviation over cycles.
    pub sigma: f64,
    /// σ normalized by the fully-on channel resistance.
    pub sigma_over_r_on: f64,
}

/// Per-position statistics over repeated cycles of the same pulse schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleStats {
    pub positions: Vec<PositionStat>,
    pub r_on: f64,
}

impl CycleStats {
    /// Mean over positions of σ / R_on.
    pub fn mean_sigma_over_r_on(&self) -> f64 {
        mean(&self.positions.iter().map(|p| p.sigma_over_r_on).collect::<Vec<_>>())
    }

    /// Mean over positions of σ, divided by the mean over positions of the
    /// per-position mean resistance.
    pub fn mean_sigma_over_mean(&self) -> f64 {
        let s = mean(&self.positions.iter().map(|p| p.sigma).collect::<Vec<_>>());
        let m = mean(&self.positions.iter().map(|p| p.mean).collect::<Vec<_>>());
        s / m
    }
}

/// Per-position mean and scatter across aligned cycles. Needs at least
/// 3 cycles with identical pulse layouts.
pub fn cycle_stats(series: &PulseSeries, r_on: f64) -> Result<CycleStats> {
    series.validate()?;
    let n_cycles = series.n_cycles();
    if n_cycles < 3 {
        return Err(Error::AnalysisInput(format!(
            "cycle statistics need at least 3 cycles, got {n_cycles}"
        )));
    }
    if !(r_on.is_finite() && r_on > 0.0) {
        return Err(Error::AnalysisInput("r_on must be finite and > 0".into()));
    }
    let per_cycle = series.points.len() / n_cycles as usize;
    let positions = (0..per_cycle)
        .map(|i| {
            let first = &series.points[i];
            let values: Vec<f64> =
                (0..n_cycles as usize).map(|c| series.points[c * per_cycle + i].r_ds).collect();
            let m = mean(&values);
            let s = sample_std(&values);
            PositionStat {
                branch: first.branch,
                pulse_index: first.pulse_index,
                v_write: first.v_write,
                mean: m,
                sigma: s,
                sigma_over_r_on: s / r_on,
            }
        })
        .collect();
    Ok(CycleStats { positions, r_on })
}

/// Energy delivered per unit channel area by one write pulse, in J/µm²:
/// E = V · I_gate · t / (W · L).
pub fn write_energy(v: f64, i_gate: f64, t: f64, width_um: f64, length_um: f64) -> Result<f64> {
    for (name, val) in [("v", v), ("i_gate", i_gate), ("width", width_um), ("length", length_um)] {
        if !(val.is_finite() && val > 0.0) {
            return Err(Error::AnalysisInput(format!("write energy needs {name} > 0, got {val}")));
        }
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::AnalysisInput(format!("write energy needs t >= 0, got {t}")));
    }
    Ok(v * i_gate * t / (width_um * length_um))
}

/// Largest subset of states whose time-averaged read levels are pairwise
/// separated by at least `k_sigma` pooled standard errors. Each trace is one
/// state's repeated reads; its level is the mean and its uncertainty the
/// standard error of that mean. Separation of s_i < s_j requires
/// mean_j − mean_i ≥ k_sigma · √(se_i² + se_j²); chain separation implies
/// pairwise separation because distances add while pooled errors do not.
pub fn states_distinguishable(traces: &[Trace], k_sigma: f64) -> Result<usize> {
    if traces.is_empty() {
        return Err(Error::AnalysisInput("state count needs at least one trace".into()));
    }
    if !(k_sigma.is_finite() && k_sigma > 0.0) {
        return Err(Error::AnalysisInput(format!("k_sigma must be > 0, got {k_sigma}")));
    }
    let mut stats: Vec<(f64, f64)> = Vec::with_capacity(traces.len());
    for (i, trace) in traces.iter().enumerate() {
        if trace.is_empty() {
            return Err(Error::AnalysisInput(format!("state trace {i} is empty")));
        }
        let values: Vec<f64> = trace.values().collect();
        let se = sample_std(&values) / (values.len() as f64).sqrt();
        stats.push((mean(&values), se));
    }
    stats.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Longest chain over the sorted levels where consecutive picks are
    // separated. Dynamic programming rather than a greedy scan: a level with
    // a large standard error can be worth skipping entirely.
    let n = stats.len();
    let mut best = vec![1usize; n];
    let mut overall = 1;
    for j in 1..n {
        for i in 0..j {
            let gap = stats[j].0 - stats[i].0;
            let pooled = (stats[i].1.powi(2) + stats[j].1.powi(2)).sqrt();
            if gap >= k_sigma * pooled && best[i] + 1 > best[j] {
                best[j] = best[i] + 1;
            }
        }
        overall = overall.max(best[j]);
    }
    Ok(overall)
}

/// Inputs for the write-energy entry of a metrics report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyInputs {
    /// Write amplitude in volts.
    pub v: f64,
    /// Gate current bound in amperes.
    pub i_gate: f64,
    /// Pulse duration in seconds.
    pub t: f64,
    /// Channel width in µm.
    pub width_um: f64,
    /// Channel length in µm.
    pub length_um: f64,
}

/// Knobs for assembling a full metrics report from a pulse series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsParams {
    /// Write-amplitude window [low, high] for the potentiation linear fit.
    pub pot_fit_window: (f64, f64),
    /// Write-amplitude window [low, high] for the depression linear fit.
    pub dep_fit_window: (f64, f64),
    /// Number of matched levels in the symmetry profile.
    pub sf_levels: usize,
    /// Fully-on channel resistance used to normalize cycle scatter.
    pub r_on: f64,
    pub energy: EnergyInputs,
}

/// Slope-level summary of a linear fit (residuals reported separately).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub adj_r2: f64,
}

/// All per-branch metrology: the windowed linear fit, the GP model selected
/// for the full branch, and per-pulse step sizes and SNR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    pub branch: Branch,
    pub n_points: usize,
    pub n_fit_points: usize,
    pub fit: FitSummary,
    /// Write amplitudes of the windowed points, in series order.
    pub fit_v_write: Vec<f64>,
    /// Normalized fit residuals, one per windowed point in series order.
    pub fit_residuals: Vec<f64>,
    pub gpr: GprModel,
    pub log_marginal_likelihood: f64,
    pub sigma_res: f64,
    /// Programming positions of this branch within a cycle.
    pub pulse_index: Vec<u32>,
    /// Signed posterior-mean step per consecutive position pair.
    pub delta_r: Vec<f64>,
    /// |ΔR| / σ_res per step.
    pub snr: Vec<f64>,
    pub snr_noise_free: bool,
}

/// The full metrics bundle computed from one potentiation/depression series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub potentiation: BranchReport,
    pub depression: BranchReport,
    pub sf: SfProfile,
    pub sf_mean: f64,
    pub sf_center: f64,
    /// Mean over positions of σ/R_on, present with 3 or more cycles.
    pub cycle_sigma_over_r_on: Option<f64>,
    /// Mean σ over mean resistance, present with 3 or more cycles.
    pub cycle_sigma_over_mean: Option<f64>,
    pub energy_per_area_j_um2: f64,
}

/// A [`MetricsReport`] together with the fitted per-branch GP models, for
/// callers that go on to evaluate posteriors (plot data, oracle checks).
#[derive(Debug, Clone)]
pub struct MetricsBundle {
    pub report: MetricsReport,
    pub potentiation_fit: GprFit,
    pub depression_fit: GprFit,
}

/// Runs the full metrology pipeline on a pulse series: per-branch windowed
/// linear fits, GP denoising over each complete branch, step sizes, SNR, the
/// matched-level symmetry profile, cycle statistics (when 3 or more cycles
/// are present), and write energy per area.
pub fn metrics_report(series: &PulseSeries, params: &MetricsParams) -> Result<MetricsReport> {
    Ok(metrics_bundle(series, params)?.report)
}

/// [`metrics_report`] plus the underlying GP fits.
pub fn metrics_bundle(series: &PulseSeries, params: &MetricsParams) -> Result<MetricsBundle> {
    series.validate()?;
    if params.sf_levels < 3 {
        return Err(Error::AnalysisInput(format!(
            "symmetry profile needs at least 3 levels, got {}",
            params.sf_levels
        )));
    }
    let (px, py) = branch_xy(series, Branch::Potentiation);
    let (dx, dy) = branch_xy(series, Branch::Depression);
    let pot_fit = gpr_fit(&px, &py)?;
    let dep_fit = gpr_fit(&dx, &dy)?;
    let pot = branch_report(series, Branch::Potentiation, params.pot_fit_window, &pot_fit)?;
    let dep = branch_report(series, Branch::Depression, params.dep_fit_window, &dep_fit)?;

    let pot_idx: Vec<f64> = pot.pulse_index.iter().map(|i| *i as f64).collect();
    let dep_idx: Vec<f64> = dep.pulse_index.iter().map(|i| *i as f64).collect();
    let profile = sf_profile(
        &BranchProfile::from_fit(&pot_fit, &pot_idx)?,
        &BranchProfile::from_fit(&dep_fit, &dep_idx)?,
        params.sf_levels,
    )?;
    let sf_mean = profile.sf_mean();
    let sf_center = profile.sf_center();

    let (cycle_sigma_over_r_on, cycle_sigma_over_mean) = if series.n_cycles() >= 3 {
        let stats = cycle_stats(series, params.r_on)?;
        (Some(stats.mean_sigma_over_r_on()), Some(stats.mean_sigma_over_mean()))
    } else {
        (None, None)
    };

    let e = &params.energy;
    let energy = write_energy(e.v, e.i_gate, e.t, e.width_um, e.length_um)?;

    let report = MetricsReport {
        potentiation: pot,
        depression: dep,
        sf: profile,
        sf_mean,
        sf_center,
        cycle_sigma_over_r_on,
        cycle_sigma_over_mean,
        energy_per_area_j_um2: energy,
    };
    Ok(MetricsBundle { report, potentiation_fit: pot_fit, depression_fit: dep_fit })
}

/// The (x = pulse index, y = resistance) training set for one branch, all
/// cycles pooled.
fn branch_xy(series: &PulseSeries, branch: Branch) -> (Vec<f64>, Vec<f64>) {
    series.branch_points(branch).map(|p| (p.pulse_index as f64, p.r_ds)).unzip()
}

fn branch_report(
    series: &PulseSeries,
    branch: Branch,
    window: (f64, f64),
    gp: &GprFit,
) -> Result<BranchReport> {
    let pts: Vec<&crate::instrument::PulsePoint> = series.branch_points(branch).collect();
    if pts.is_empty() {
        return Err(Error::AnalysisInput(format!("series has no {} points", branch.label())));
    }
    let (w_lo, w_hi) = (window.0.min(window.1), window.0.max(window.1));
    let tol = 1e-9;
    let windowed: Vec<(f64, f64)> = pts
        .iter()
        .filter(|p| p.v_write >= w_lo - tol && p.v_write <= w_hi + tol)
        .map(|p| (p.v_write, p.r_ds))
        .collect();
    if windowed.len() < 3 {
        return Err(Error::AnalysisInput(format!(
            "{} fit window [{w_lo}, {w_hi}] V covers {} points; at least 3 are needed",
            branch.label(),
            windowed.len()
        )));
    }
    let fit = linear_fit(&windowed)?;

    let (x, y) = branch_xy(series, branch);
    let mut pulse_index: Vec<u32> = pts.iter().map(|p| p.pulse_index).collect();
    pulse_index.sort_unstable();
    pulse_index.dedup();
    let idx_f: Vec<f64> = pulse_index.iter().map(|i| *i as f64).collect();
    let steps = delta_r(gp, &idx_f)?;
    let s = snr(gp, &x, &y, &idx_f)?;

    Ok(BranchReport {
        branch,
        n_points: pts.len(),
        n_fit_points: windowed.len(),
        fit: FitSummary {
            slope: fit.slope,
            intercept: fit.intercept,
            r2: fit.r2,
            adj_r2: fit.adj_r2,
        },
        fit_v_write: windowed.iter().map(|p| p.0).collect(),
        fit_residuals: fit.residuals,
        gpr: gp.model,
        log_marginal_likelihood: gp.log_marginal_likelihood,
        sigma_res: s.sigma_res,
        pulse_index,
        delta_r: steps,
        snr: s.values,
        snr_noise_free: s.noise_free,
    })
}
