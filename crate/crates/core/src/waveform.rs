//! Piecewise-linear drive waveforms and the common trace container.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One linear voltage ramp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// Segment length (s), strictly positive.
    pub duration: f64,
    /// Voltage at the segment start (V).
    pub v_start: f64,
    /// Voltage at the segment end (V).
    pub v_end: f64,
}

/// A piecewise-linear waveform sampled on a fixed grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub segments: Vec<Segment>,
    /// Sampling interval (s).
    pub sample_dt: f64,
}

impl Waveform {
    pub fn new(segments: Vec<Segment>, sample_dt: f64) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidWaveform("need at least one segment".into()));
        }
        for (i, s) in segments.iter().enumerate() {
            if !s.duration.is_finite() || s.duration <= 0.0 {
                return Err(Error::InvalidWaveform(format!(
                    "segment {i}: duration must be finite and > 0, got {}",
                    s.duration
                )));
            }
            if !(s.v_start.is_finite() && s.v_end.is_finite()) {
                return Err(Error::InvalidWaveform(format!(
                    "segment {i}: voltages must be finite"
                )));
            }
        }
        if !sample_dt.is_finite() || sample_dt <= 0.0 {
            return Err(Error::InvalidWaveform(format!(
                "sample_dt must be finite and > 0, got {sample_dt}"
            )));
        }
        let wf = Self { segments, sample_dt };
        let total = wf.total_duration();
        if total / wf.sample_dt > 20e6 {
            return Err(Error::InvalidWaveform(format!(
                "waveform would produce {:.0} samples; raise sample_dt",
                total / wf.sample_dt
            )));
        }
        Ok(wf)
    }

    /// One period of a symmetric triangular sweep 0 → +amplitude → -amplitude → 0.
    pub fn triangular(amplitude: f64, frequency: f64, samples_per_period: usize) -> Result<Self> {
        if !amplitude.is_finite() || amplitude <= 0.0 {
            return Err(Error::InvalidWaveform(format!(
                "amplitude must be finite and > 0, got {amplitude}"
            )));
        }
        if !frequency.is_finite() || frequency <= 0.0 {
            return Err(Error::InvalidWaveform(format!(
                "frequency must be finite and > 0, got {frequency}"
            )));
        }
        if samples_per_period < 8 {
            return Err(Error::InvalidWaveform(format!(
                "samples_per_period must be >= 8, got {samples_per_period}"
            )));
        }
        let period = 1.0 / frequency;
        let segments = vec![
            Segment { duration: period / 4.0, v_start: 0.0, v_end: amplitude },
            Segment { duration: period / 2.0, v_start: amplitude, v_end: -amplitude },
            Segment { duration: period / 4.0, v_start: -amplitude, v_end: 0.0 },
        ];
        Self::new(segments, period / samples_per_period as f64)
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Voltage at absolute time `t`, clamped to the waveform's span.
    pub fn voltage_at(&self, t: f64) -> f64 {
        let mut start = 0.0;
        for s in &self.segments {
            let end = start + s.duration;
            if t <= end {
                let frac = ((t - start) / s.duration).clamp(0.0, 1.0);
                return s.v_start + (s.v_end - s.v_start) * frac;
            }
            start = end;
        }
        self.segments.last().map(|s| s.v_end).unwrap_or(0.0)
    }

    /// The (t, v) sample grid: multiples of `sample_dt` from 0, plus the
    /// exact end point so the trace always closes on the final voltage.
    pub fn sample_points(&self) -> Vec<(f64, f64)> {
        let total = self.total_duration();
        let mut points = Vec::new();
        let mut k = 0u64;
        loop {
            let t = k as f64 * self.sample_dt;
            if t >= total {
                break;
            }
            points.push((t, self.voltage_at(t)));
            k += 1;
        }
        points.push((total, self.voltage_at(total)));
        points
    }
}

/// What a trace's value column holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    Polarization,
    Resistance,
    Capacitance,
}

impl TraceKind {
    pub fn label(self) -> &'static str {
        match self {
            TraceKind::Polarization => "polarization",
            TraceKind::Resistance => "resistance",
            TraceKind::Capacitance => "capacitance",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            TraceKind::Polarization => "uC/cm^2",
            TraceKind::Resistance => "ohm",
            TraceKind::Capacitance => "F",
        }
    }
}

/// A sampled (t, v, value) record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub v: f64,
    pub value: f64,
}

/// A time-ordered measurement trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub kind: TraceKind,
    pub samples: Vec<TraceSample>,
}

impl Trace {
    pub fn new(kind: TraceKind) -> Self {
        Self { kind, samples: Vec::new() }
    }

    /// Appends a sample; `t` must exceed the previous sample's time.
    pub fn push(&mut self, t: f64, v: f64, value: f64) {
        if let Some(last) = self.samples.last() {
            assert!(t > last.t, "trace times must be strictly increasing ({t} after {})", last.t);
        }
        self.samples.push(TraceSample { t, v, value });
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.value)
    }
}
