//! Tap segmentation, force/speed statistics and expert/novice classification.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::{ForceSample, Trace};

/// Minimum tap length in samples (30 ms at 100 Hz).
pub const MIN_TAP_SAMPLES: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum AssessmentError {
    #[error("invalid band configuration: {0}")]
    Band(String),
    #[error("invalid thresholds: {0}")]
    Thresholds(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandConfig {
    pub f_lo: f64,
    pub f_hi: f64,
    pub f_on: f64,
    pub f_off: f64,
}

impl Default for BandConfig {
    fn default() -> Self {
        Self {
            f_lo: 2.1,
            f_hi: 2.5,
            f_on: 0.5,
            f_off: 0.2,
        }
    }
}

impl BandConfig {
    pub fn validate(&self) -> Result<(), AssessmentError> {
        let ordered = 0.0 < self.f_off
            && self.f_off < self.f_on
            && self.f_on < self.f_lo
            && self.f_lo < self.f_hi
            && self.f_hi.is_finite();
        if ordered {
            Ok(())
        } else {
            Err(AssessmentError::Band(format!(
                "need 0 < f_off ({}) < f_on ({}) < f_lo ({}) < f_hi ({})",
                self.f_off, self.f_on, self.f_lo, self.f_hi
            )))
        }
    }

    pub fn contains(&self, force: f64) -> bool {
        (self.f_lo..=self.f_hi).contains(&force)
    }

    pub fn gauge(&self, force: f64) -> GaugeStatus {
        if force < self.f_lo {
            GaugeStatus::Below
        } else if force > self.f_hi {
            GaugeStatus::Above
        } else {
            GaugeStatus::InBand
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaugeStatus {
    Below,
    InBand,
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub t_force_cv: f64,
    pub t_speed_cv: f64,
    pub t_band: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            t_force_cv: 0.15,
            t_speed_cv: 0.25,
            t_band: 0.6,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), AssessmentError> {
        if [self.t_force_cv, self.t_speed_cv, self.t_band]
            .iter()
            .all(|t| *t > 0.0 && t.is_finite())
        {
            Ok(())
        } else {
            Err(AssessmentError::Thresholds(format!("{self:?} must be positive")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TapInterval {
    pub start_index: usize,
    pub end_index: usize,
    pub peak_force: f64,
    pub peak_sample_index: usize,
    pub mean_tangential_speed: f64,
}

impl TapInterval {
    pub fn len(&self) -> usize {
        self.end_index - self.start_index + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone)]
struct OpenTap {
    start: usize,
    end: usize,
    peak: f64,
    peak_index: usize,
    speed_sum: f64,
}

/// Streaming hysteresis segmenter. Feed samples in order; a finished tap is
/// returned by the call that closes it.
#[derive(Debug, Clone)]
pub struct TapSegmenter {
    f_on: f64,
    f_off: f64,
    next_index: usize,
    open: Option<OpenTap>,
}

impl TapSegmenter {
    pub fn new(f_on: f64, f_off: f64) -> Self {
        assert!(f_on > f_off && f_off > 0.0, "need f_on > f_off > 0");
        Self {
            f_on,
            f_off,
            next_index: 0,
            open: None,
        }
    }

    pub fn is_open(&self) -> bool {
        self.open.is_some()
    }

    pub fn push_sample(&mut self, sample: &ForceSample) -> Option<TapInterval> {
        self.push(sample.force.norm(), sample.tangential_speed())
    }

    /// Offers the next sample's force magnitude and tangential speed.
    pub fn push(&mut self, force: f64, tangential_speed: f64) -> Option<TapInterval> {
        let index = self.next_index;
        self.next_index += 1;
        match &mut self.open {
            Some(tap) if force >= self.f_off => {
                tap.end = index;
                tap.speed_sum += tangential_speed;
                if force > tap.peak {
                    tap.peak = force;
                    tap.peak_index = index;
                }
                None
            }
            Some(_) => self.close(),
            None if force > self.f_on => {
                self.open = Some(OpenTap {
                    start: index,
                    end: index,
                    peak: force,
                    peak_index: index,
                    speed_sum: tangential_speed,
                });
                None
            }
            None => None,
        }
    }

    /// Closes a tap still open at the end of the stream.
    pub fn finish(&mut self) -> Option<TapInterval> {
        self.close()
    }

    fn close(&mut self) -> Option<TapInterval> {
        let tap = self.open.take()?;
        let len = tap.end - tap.start + 1;
        (len >= MIN_TAP_SAMPLES).then(|| TapInterval {
            start_index: tap.start,
            end_index: tap.end,
            peak_force: tap.peak,
            peak_sample_index: tap.peak_index,
            mean_tangential_speed: tap.speed_sum / len as f64,
        })
    }
}

pub fn segment_taps(trace: &Trace, f_on: f64, f_off: f64) -> Vec<TapInterval> {
    let mut seg = TapSegmenter::new(f_on, f_off);
    let mut taps: Vec<TapInterval> = trace
        .samples
        .iter()
        .filter_map(|s| seg.push_sample(s))
        .collect();
    taps.extend(seg.finish());
    taps
}

/// Population standard deviation over mean; 0 for an empty or all-zero series.
pub fn coefficient_of_variation(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return 0.0;
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean.abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Expert,
    Novice,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentReport {
    pub taps: Vec<TapInterval>,
    pub mean_peak_force: f64,
    pub cv_peak_force: f64,
    pub mean_speed: f64,
    pub cv_speed: f64,
    pub in_band_fraction: f64,
    pub classification: Classification,
    pub band: BandConfig,
    pub thresholds: Option<Thresholds>,
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Statistics over `taps`; classification is left `Indeterminate`.
/// With no taps every statistic is zero.
pub fn compute_metrics(taps: &[TapInterval], band: &BandConfig) -> AssessmentReport {
    let peaks: Vec<f64> = taps.iter().map(|t| t.peak_force).collect();
    let speeds: Vec<f64> = taps.iter().map(|t| t.mean_tangential_speed).collect();
    let in_band = peaks.iter().filter(|&&p| band.contains(p)).count();
    AssessmentReport {
        taps: taps.to_vec(),
        mean_peak_force: mean(&peaks),
        cv_peak_force: coefficient_of_variation(&peaks),
        mean_speed: mean(&speeds),
        cv_speed: coefficient_of_variation(&speeds),
        in_band_fraction: if taps.is_empty() {
            0.0
        } else {
            in_band as f64 / taps.len() as f64
        },
        classification: Classification::Indeterminate,
        band: *band,
        thresholds: None,
    }
}

pub fn classify(report: &AssessmentReport, thresholds: &Thresholds) -> Classification {
    if report.taps.is_empty() {
        return Classification::Indeterminate;
    }
    let rough = report.cv_peak_force > thresholds.t_force_cv || report.cv_speed > thresholds.t_speed_cv;
    if rough {
        Classification::Novice
    } else if report.in_band_fraction >= thresholds.t_band {
        Classification::Expert
    } else {
        Classification::Indeterminate
    }
}

/// Segment, measure and classify in one pass.
pub fn assess(trace: &Trace, band: &BandConfig, thresholds: &Thresholds) -> AssessmentReport {
    let taps = segment_taps(trace, band.f_on, band.f_off);
    let mut report = compute_metrics(&taps, band);
    report.classification = classify(&report, thresholds);
    report.thresholds = Some(*thresholds);
    report
}
