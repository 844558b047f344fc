//! Exact-inference Gaussian-process regression with a squared-exponential
//! kernel, used to recover the noise-free resistance signal from a pulse
//! series.
//!
//! Hyperparameters (length scale, signal variance, noise variance) are
//! selected by maximizing the log marginal likelihood over a log-spaced grid
//! bracketing the data variance — deterministic and dependency-free, which
//! matters more here than squeezing out the last decibel of likelihood.
//! Factorizations use a dense Cholesky with a small diagonal jitter.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative diagonal jitter added to the kernel for factorization stability.
const JITTER_REL: f64 = 1e-10;

/// A selected kernel hyperparameter triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GprModel {
    /// Correlation length in pulse-index units.
    pub length_scale: f64,
    /// Kernel signal variance (Ω²).
    pub signal_variance: f64,
    /// Observation noise variance (Ω²).
    pub noise_variance: f64,
}

/// Log-spaced hyperparameter search grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperGrid {
    pub length_scales: Vec<f64>,
    pub signal_variances: Vec<f64>,
    pub noise_variances: Vec<f64>,
}

impl HyperGrid {
    /// Default grid: 16 length scales over [1, 30] pulses, signal variances
    /// bracketing the data variance by a decade each way, noise variances
    /// from 1e-4 of the data variance up to it. A constant series (zero
    /// variance) falls back to a unit bracket so the floor gets selected.
    pub fn bracketing(y: &[f64]) -> Self {
        let n = y.len().max(1) as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let base = if var > 0.0 { var } else { 1.0 };
        Self {
            length_scales: geomspace(1.0, 30.0, 16),
            signal_variances: geomspace(0.1 * base, 10.0 * base, 6),
            noise_variances: geomspace(1e-4 * base, base, 8),
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, axis) in [
            ("length_scales", &self.length_scales),
            ("signal_variances", &self.signal_variances),
            ("noise_variances", &self.noise_variances),
        ] {
            if axis.is_empty() {
                return Err(Error::AnalysisInput(format!("hyperparameter grid {name} is empty")));
            }
            if axis.iter().any(|v| !v.is_finite() || *v <= 0.0) {
                return Err(Error::AnalysisInput(format!(
                    "hyperparameter grid {name} must be finite and > 0"
                )));
            }
        }
        Ok(())
    }
}

/// A fitted GP: selected model plus the factorized training state needed for
/// posterior evaluation.
#[derive(Debug, Clone)]
pub struct GprFit {
    pub model: GprModel,
    pub log_marginal_likelihood: f64,
    x: Vec<f64>,
    y_mean: f64,
    alpha: Vec<f64>,
    chol: Vec<f64>,
}

/// Fits with the default bracketing grid. Needs at least 4 points.
pub fn gpr_fit(x: &[f64], y: &[f64]) -> Result<GprFit> {
    gpr_fit_with_grid(x, y, &HyperGrid::bracketing(y))
}

/// Grid-search fit: for every hyperparameter triple, factorize the kernel
/// and score the log marginal likelihood; keep the best factorizable triple.
pub fn gpr_fit_with_grid(x: &[f64], y: &[f64], grid: &HyperGrid) -> Result<GprFit> {
    if x.len() != y.len() {
        return Err(Error::AnalysisInput(format!(
            "x and y lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 4 {
        return Err(Error::AnalysisInput(format!("GPR needs at least 4 points, got {}", x.len())));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::AnalysisInput("GPR inputs must be finite".into()));
    }
    grid.validate()?;

    let n = x.len();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();

    let mut best: Option<GprFit> = None;
    let mut corr = vec![0.0; n * n];
    let mut k = vec![0.0; n * n];
    for &ell in &grid.length_scales {
        // The exp part is shared by every variance pair at this length scale.
        for i in 0..n {
            for j in 0..=i {
                let d = x[i] - x[j];
                let c = (-d * d / (2.0 * ell * ell)).exp();
                corr[i * n + j] = c;
                corr[j * n + i] = c;
            }
        }
        for &sf2 in &grid.signal_variances {
            for &sn2 in &grid.noise_variances {
                for i in 0..n {
                    for j in 0..=i {
                        k[i * n + j] = sf2 * corr[i * n + j];
                    }
                    k[i * n + i] += sn2 + JITTER_REL * sf2;
                }
                if cholesky_lower(&mut k, n).is_err() {
                    continue;
                }
                let mut alpha = yc.clone();
                solve_lower(&k, n, &mut alpha);
                solve_lower_transposed(&k, n, &mut alpha);
                let fit_term: f64 = yc.iter().zip(&alpha).map(|(a, b)| a * b).sum();
                let log_det: f64 = (0..n).map(|i| k[i * n + i].ln()).sum();
                let lml =
                    -0.5 * fit_term - log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
                if best.as_ref().is_none_or(|b| lml > b.log_marginal_likelihood) {
                    best = Some(GprFit {
                        model: GprModel {
                            length_scale: ell,
                            signal_variance: sf2,
                            noise_variance: sn2,
                        },
                        log_marginal_likelihood: lml,
                        x: x.to_vec(),
                        y_mean,
                        alpha,
                        chol: k.clone(),
                    });
                }
            }
        }
    }
    best.ok_or_else(|| {
        Error::AnalysisInput("kernel matrix singular over the entire hyperparameter grid".into())
    })
}

impl GprFit {
    /// Posterior mean of the latent signal at `xs`.
    pub fn posterior_mean(&self, xs: &[f64]) -> Vec<f64> {
        let n = self.x.len();
        xs.iter()
            .map(|&xq| {
                let mut m = 0.0;
                for i in 0..n {
                    m += self.kernel(xq, self.x[i]) * self.alpha[i];
                }
                self.y_mean + m
            })
            .collect()
    }

    /// Posterior variance of the latent signal at `xs` (clamped at 0).
    pub fn posterior_variance(&self, xs: &[f64]) -> Vec<f64> {
        let n = self.x.len();
        xs.iter()
            .map(|&xq| {
                let mut kstar: Vec<f64> = (0..n).map(|i| self.kernel(xq, self.x[i])).collect();
                solve_lower(&self.chol, n, &mut kstar);
                let reduction: f64 = kstar.iter().map(|v| v * v).sum();
                (self.model.signal_variance - reduction).max(0.0)
            })
            .collect()
    }

    pub fn training_x(&self) -> &[f64] {
        &self.x
    }

    fn kernel(&self, a: f64, b: f64) -> f64 {
        let d = a - b;
        self.model.signal_variance * (-d * d / (2.0 * self.model.length_scale.powi(2))).exp()
    }
}

/// Logarithmically spaced grid from `a` to `b` inclusive.
pub fn geomspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && a > 0.0 && b > 0.0);
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// In-place lower Cholesky of a symmetric matrix (row-major, lower triangle
/// read and written). Fails on non-positive pivots.
fn cholesky_lower(a: &mut [f64], n: usize) -> std::result::Result<(), ()> {
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            if i == j {
                if !(s.is_finite() && s > 0.0) {
                    return Err(());
                }
                a[i * n + i] = s.sqrt();
            } else {
                a[i * n + j] = s / a[j * n + j];
            }
        }
    }
    Ok(())
}

/// Solves L·x = b in place.
fn solve_lower(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solves Lᵀ·x = b in place.
fn solve_lower_transposed(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}
