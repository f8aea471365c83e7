//! Sensogram reduction: parsing per-channel SPR time series, reference
//! subtraction, window statistics, step responses, and the conversion of
//! responses into mass, molecule counts, and surface coverage.
//!
//! Input format: CSV with header `time_s,channel,response_ru`, one sample
//! per row, `#` starting a comment. Injection events use the header
//! `label,t_start_s,t_end_s,conc_mg_ml` with an optional concentration.

use crate::constants::{AVOGADRO_PER_MOL, KRU_PER_NG_PER_MM2, NM2_PER_ANGSTROM2, NM2_PER_MM2};
use crate::error::{Error, Result};

pub const SENSOGRAM_HEADER: &str = "time_s,channel,response_ru";
pub const EVENTS_HEADER: &str = "label,t_start_s,t_end_s,conc_mg_ml";

/// One channel of an SPR sensogram: strictly increasing timestamps,
/// at least two samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SensogramSeries {
    pub channel: String,
    samples: Vec<(f64, f64)>,
}

impl SensogramSeries {
    pub fn new(channel: impl Into<String>, samples: Vec<(f64, f64)>) -> Result<Self> {
        let channel = channel.into();
        if samples.len() < 2 {
            return Err(Error::Validation(format!(
                "sensogram::SensogramSeries: channel '{channel}' has {} sample(s), need ≥ 2",
                samples.len()
            )));
        }
        for &(t, v) in &samples {
            if !t.is_finite() || !v.is_finite() {
                return Err(Error::Validation(format!(
                    "sensogram::SensogramSeries: non-finite sample ({t}, {v}) in channel '{channel}'"
                )));
            }
        }
        for pair in samples.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::Validation(format!(
                    "sensogram::SensogramSeries: timestamps not strictly increasing in channel \
                     '{channel}' at t = {}",
                    pair[1].0
                )));
            }
        }
        Ok(SensogramSeries { channel, samples })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn start_time(&self) -> f64 {
        self.samples[0].0
    }

    pub fn end_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].0
    }

    /// Linear interpolation at time `t`; `None` outside the sampled range.
    pub fn interpolate(&self, t: f64) -> Option<f64> {
        if t < self.start_time() || t > self.end_time() {
            return None;
        }
        let idx = self.samples.partition_point(|&(ts, _)| ts <= t);
        if idx == 0 {
            return Some(self.samples[0].1);
        }
        if idx == self.samples.len() {
            return Some(self.samples[idx - 1].1);
        }
        let (t0, v0) = self.samples[idx - 1];
        let (t1, v1) = self.samples[idx];
        let w = (t - t0) / (t1 - t0);
        Some(v0 + w * (v1 - v0))
    }
}

/// A labelled injection interval; concentration is carried as metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectionEvent {
    pub label: String,
    pub t_start_s: f64,
    pub t_end_s: f64,
    pub concentration_mg_ml: Option<f64>,
}

impl InjectionEvent {
    pub fn new(
        label: impl Into<String>,
        t_start_s: f64,
        t_end_s: f64,
        concentration_mg_ml: Option<f64>,
    ) -> Result<Self> {
        if !(t_start_s < t_end_s) {
            return Err(Error::Validation(format!(
                "sensogram::InjectionEvent: need t_start < t_end, got [{t_start_s}, {t_end_s}]"
            )));
        }
        Ok(InjectionEvent { label: label.into(), t_start_s, t_end_s, concentration_mg_ml })
    }
}

/// Mean and spread of a windowed segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowStats {
    pub mean_ru: f64,
    /// Sample standard deviation, the usual noise estimate.
    pub std_dev_ru: f64,
    pub samples: usize,
}

/// Baseline-to-plateau step of an injection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseStep {
    pub baseline_ru: f64,
    pub plateau_ru: f64,
    pub delta_ru: f64,
    pub baseline_window: (f64, f64),
    pub plateau_window: (f64, f64),
}

/// Pairwise face areas of a rectangular molecule, nm².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootprintRange {
    pub min_nm2: f64,
    pub max_nm2: f64,
    /// Arithmetic mean of the smallest and largest face.
    pub mean_nm2: f64,
}

/// Full mass/count/coverage chain for one immobilization step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageReport {
    pub response_ru: f64,
    pub area_mm2: f64,
    pub mass_ng: f64,
    pub molecular_weight_kda: f64,
    pub molecule_count: f64,
    pub footprint_nm2: f64,
    pub monolayer_capacity: f64,
    pub coverage_fraction: f64,
}

/// Parses a multi-channel sensogram CSV into one series per channel.
///
/// Channels appear in first-appearance order; samples within a channel are
/// sorted by time. Duplicate timestamps inside a channel, non-finite
/// values, and channels with fewer than two samples are rejected. An empty
/// input yields an empty list.
pub fn parse_sensogram(input: &str) -> Result<Vec<SensogramSeries>> {
    let mut channels: Vec<(String, Vec<(f64, f64, usize)>)> = Vec::new();
    let mut seen_header = false;

    for (line_no, raw) in input.lines().enumerate() {
        let line_no = line_no + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if !seen_header {
            if line != SENSOGRAM_HEADER {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected header '{SENSOGRAM_HEADER}', got '{line}'"),
                });
            }
            seen_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 3 comma-separated fields, got {}", fields.len()),
            });
        }
        let t = parse_finite(fields[0], "time_s", line_no)?;
        let channel = fields[1].trim();
        if channel.is_empty() {
            return Err(Error::Parse { line: line_no, message: "empty channel label".into() });
        }
        let v = parse_finite(fields[2], "response_ru", line_no)?;
        match channels.iter_mut().find(|(name, _)| name == channel) {
            Some((_, rows)) => rows.push((t, v, line_no)),
            None => channels.push((channel.to_string(), vec![(t, v, line_no)])),
        }
    }

    let mut out = Vec::with_capacity(channels.len());
    for (name, mut rows) in channels {
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(pair) = rows.windows(2).find(|p| p[1].0 == p[0].0) {
            return Err(Error::Validation(format!(
                "sensogram::parse_sensogram: duplicate timestamp {} in channel '{name}' \
                 (lines {} and {})",
                pair[0].0, pair[0].2, pair[1].2
            )));
        }
        let samples = rows.into_iter().map(|(t, v, _)| (t, v)).collect();
        out.push(SensogramSeries::new(name, samples)?);
    }
    Ok(out)
}

/// Parses an injection-event CSV. The trailing concentration field may be
/// empty.
pub fn parse_events(input: &str) -> Result<Vec<InjectionEvent>> {
    let mut events = Vec::new();
    let mut seen_header = false;
    for (line_no, raw) in input.lines().enumerate() {
        let line_no = line_no + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if !seen_header {
            if line != EVENTS_HEADER {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected header '{EVENTS_HEADER}', got '{line}'"),
                });
            }
            seen_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 4 comma-separated fields, got {}", fields.len()),
            });
        }
        let label = fields[0].trim();
        if label.is_empty() {
            return Err(Error::Parse { line: line_no, message: "empty event label".into() });
        }
        let t0 = parse_finite(fields[1], "t_start_s", line_no)?;
        let t1 = parse_finite(fields[2], "t_end_s", line_no)?;
        let conc = match fields[3].trim() {
            "" => None,
            text => Some(parse_finite(text, "conc_mg_ml", line_no)?),
        };
        events.push(
            InjectionEvent::new(label, t0, t1, conc)
                .map_err(|e| Error::Parse { line: line_no, message: e.to_string() })?,
        );
    }
    Ok(events)
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_finite(text: &str, what: &str, line: usize) -> Result<f64> {
    let value: f64 = text.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("cannot parse {what} from '{}'", text.trim()),
    })?;
    if !value.is_finite() {
        return Err(Error::Parse { line, message: format!("{what} must be finite, got '{}'", text.trim()) });
    }
    Ok(value)
}

/// Subtracts a reference channel from a signal channel.
///
/// The reference is shifted by `delay_s` (it samples the flow cell that
/// much later) and linearly interpolated at each signal timestamp; signal
/// samples with no shifted-reference coverage are dropped.
pub fn subtract_reference(
    signal: &SensogramSeries,
    reference: &SensogramSeries,
    delay_s: f64,
) -> Result<SensogramSeries> {
    if !delay_s.is_finite() {
        return Err(Error::Domain(format!(
            "sensogram::subtract_reference: delay must be finite, got {delay_s}"
        )));
    }
    let mut samples = Vec::with_capacity(signal.samples().len());
    for &(t, v) in signal.samples() {
        if let Some(r) = reference.interpolate(t - delay_s) {
            samples.push((t, v - r));
        }
    }
    if samples.len() < 2 {
        return Err(Error::Alignment(format!(
            "sensogram::subtract_reference: channels '{}' and '{}' share no usable time overlap \
             with delay {delay_s} s",
            signal.channel, reference.channel
        )));
    }
    SensogramSeries::new(format!("{}-{}", signal.channel, reference.channel), samples)
}

/// Removes all samples inside the given closed intervals (bubble masking
/// and similar documented exclusions).
pub fn mask_intervals(series: &SensogramSeries, intervals: &[(f64, f64)]) -> Result<SensogramSeries> {
    for &(a, b) in intervals {
        if !(a < b) {
            return Err(Error::Domain(format!(
                "sensogram::mask_intervals: invalid interval [{a}, {b}]"
            )));
        }
    }
    let kept: Vec<(f64, f64)> = series
        .samples()
        .iter()
        .copied()
        .filter(|&(t, _)| !intervals.iter().any(|&(a, b)| t >= a && t <= b))
        .collect();
    if kept.len() < 2 {
        return Err(Error::Window(format!(
            "sensogram::mask_intervals: masking leaves {} sample(s) in channel '{}'",
            kept.len(),
            series.channel
        )));
    }
    SensogramSeries::new(series.channel.clone(), kept)
}

/// Mean response over a closed time window, with its standard deviation.
pub fn baseline_level(series: &SensogramSeries, window: (f64, f64)) -> Result<WindowStats> {
    let (a, b) = window;
    if !(a < b) {
        return Err(Error::Window(format!(
            "sensogram::baseline_level: invalid window [{a}, {b}]"
        )));
    }
    let values: Vec<f64> = series
        .samples()
        .iter()
        .filter(|&&(t, _)| t >= a && t <= b)
        .map(|&(_, v)| v)
        .collect();
    if values.len() < 3 {
        return Err(Error::Window(format!(
            "sensogram::baseline_level: window [{a}, {b}] holds {} sample(s) of channel '{}', need ≥ 3",
            values.len(),
            series.channel
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(WindowStats { mean_ru: mean, std_dev_ru: var.sqrt(), samples: values.len() })
}

/// Baseline and plateau window means around an injection; the plateau
/// window must lie inside the event interval.
pub fn step_response(
    series: &SensogramSeries,
    event: &InjectionEvent,
    baseline_window: (f64, f64),
    plateau_window: (f64, f64),
) -> Result<ResponseStep> {
    if plateau_window.0 < event.t_start_s || plateau_window.1 > event.t_end_s {
        return Err(Error::Window(format!(
            "sensogram::step_response: plateau window [{}, {}] must lie inside event '{}' \
             [{}, {}]",
            plateau_window.0, plateau_window.1, event.label, event.t_start_s, event.t_end_s
        )));
    }
    let baseline = baseline_level(series, baseline_window)?;
    let plateau = baseline_level(series, plateau_window)?;
    Ok(ResponseStep {
        baseline_ru: baseline.mean_ru,
        plateau_ru: plateau.mean_ru,
        delta_ru: plateau.mean_ru - baseline.mean_ru,
        baseline_window,
        plateau_window,
    })
}

/// Immobilized mass in ng from a response step: 1 kRU reads 1 ng/mm².
pub fn mass_from_response(delta_ru: f64, area_mm2: f64) -> Result<f64> {
    if !(area_mm2 > 0.0) {
        return Err(Error::Domain(format!(
            "sensogram::mass_from_response: area must be positive, got {area_mm2} mm²"
        )));
    }
    Ok(delta_ru / 1000.0 * KRU_PER_NG_PER_MM2 * area_mm2)
}

/// Number of molecules in `mass_ng` of protein of the given molecular
/// weight.
pub fn molecule_count(mass_ng: f64, molecular_weight_kda: f64) -> Result<f64> {
    if !(molecular_weight_kda > 0.0) {
        return Err(Error::Domain(format!(
            "sensogram::molecule_count: molecular weight must be positive, got {molecular_weight_kda} kDa"
        )));
    }
    let grams = mass_ng * 1.0e-9;
    let grams_per_mol = molecular_weight_kda * 1000.0;
    Ok(grams * AVOGADRO_PER_MOL / grams_per_mol)
}

/// Face areas of a box-shaped molecule with edges in ångströms: the
/// smallest and largest of the three faces and their arithmetic mean.
pub fn footprint_range(dimensions_angstrom: (f64, f64, f64)) -> Result<FootprintRange> {
    let (a, b, c) = dimensions_angstrom;
    if !(a > 0.0 && b > 0.0 && c > 0.0) {
        return Err(Error::Domain(format!(
            "sensogram::footprint_range: dimensions must be positive, got ({a}, {b}, {c}) Å"
        )));
    }
    let faces = [a * b, a * c, b * c].map(|f| f * NM2_PER_ANGSTROM2);
    let min = faces.iter().copied().fold(f64::INFINITY, f64::min);
    let max = faces.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(FootprintRange { min_nm2: min, max_nm2: max, mean_nm2: 0.5 * (min + max) })
}

/// Number of molecules of the given footprint that tile a sensor area once.
pub fn monolayer_capacity(area_mm2: f64, footprint_nm2: f64) -> Result<f64> {
    if !(area_mm2 > 0.0) {
        return Err(Error::Domain(format!(
            "sensogram::monolayer_capacity: area must be positive, got {area_mm2} mm²"
        )));
    }
    if !(footprint_nm2 > 0.0) {
        return Err(Error::Domain(format!(
            "sensogram::monolayer_capacity: footprint must be positive, got {footprint_nm2} nm²"
        )));
    }
    Ok(area_mm2 * NM2_PER_MM2 / footprint_nm2)
}

/// Chains response → mass → molecules → monolayer → coverage with no
/// intermediate rounding; presentation layers round, this does not.
pub fn coverage_report(
    delta_ru: f64,
    area_mm2: f64,
    molecular_weight_kda: f64,
    footprint_nm2: f64,
) -> Result<CoverageReport> {
    let mass_ng = mass_from_response(delta_ru, area_mm2)?;
    let molecules = molecule_count(mass_ng, molecular_weight_kda)?;
    let capacity = monolayer_capacity(area_mm2, footprint_nm2)?;
    Ok(CoverageReport {
        response_ru: delta_ru,
        area_mm2,
        mass_ng,
        molecular_weight_kda,
        molecule_count: molecules,
        footprint_nm2,
        monolayer_capacity: capacity,
        coverage_fraction: molecules / capacity,
    })
}
