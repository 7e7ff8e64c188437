//! Recording statistics: per stream feature vectors, dataset aggregates,
//! firing rate profiles, temporal spectra, and frame rendering.

use std::io;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::event::{EventStream, Polarity};

/// The ten per recording statistics, in canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Feature {
    Total,
    OnCount,
    OffCount,
    OnOffRatio,
    MeanX,
    MeanY,
    StdX,
    StdY,
    MaxX,
    MaxY,
}

impl Feature {
    pub const ALL: [Feature; 10] = [
        Feature::Total,
        Feature::OnCount,
        Feature::OffCount,
        Feature::OnOffRatio,
        Feature::MeanX,
        Feature::MeanY,
        Feature::StdX,
        Feature::StdY,
        Feature::MaxX,
        Feature::MaxY,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Feature::Total => "total",
            Feature::OnCount => "on",
            Feature::OffCount => "off",
            Feature::OnOffRatio => "on_off_ratio",
            Feature::MeanX => "mean_x",
            Feature::MeanY => "mean_y",
            Feature::StdX => "std_x",
            Feature::StdY => "std_y",
            Feature::MaxX => "max_x",
            Feature::MaxY => "max_y",
        }
    }
}

impl std::str::FromStr for Feature {
    type Err = String;

    fn from_str(s: &str) -> Result<Feature, String> {
        Feature::ALL
            .into_iter()
            .find(|f| f.label() == s)
            .ok_or_else(|| format!("unknown feature {s:?}"))
    }
}

/// Summary statistics of one recording.
///
/// Count features are always meaningful. The ON/OFF ratio is flagged
/// undefined when there are no OFF events (the count of ON events stands in
/// as a sentinel value); position features are flagged undefined for empty
/// streams.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureVector {
    pub total: f64,
    pub on: f64,
    pub off: f64,
    pub on_off_ratio: f64,
    pub mean_x: f64,
    pub mean_y: f64,
    pub std_x: f64,
    pub std_y: f64,
    pub max_x: f64,
    pub max_y: f64,
    pub ratio_defined: bool,
    pub position_defined: bool,
}

impl FeatureVector {
    /// Value of one feature, `None` when it is flagged undefined.
    pub fn get(&self, feature: Feature) -> Option<f64> {
        let positional = |v: f64| self.position_defined.then_some(v);
        match feature {
            Feature::Total => Some(self.total),
            Feature::OnCount => Some(self.on),
            Feature::OffCount => Some(self.off),
            Feature::OnOffRatio => self.ratio_defined.then_some(self.on_off_ratio),
            Feature::MeanX => positional(self.mean_x),
            Feature::MeanY => positional(self.mean_y),
            Feature::StdX => positional(self.std_x),
            Feature::StdY => positional(self.std_y),
            Feature::MaxX => positional(self.max_x),
            Feature::MaxY => positional(self.max_y),
        }
    }
}

pub fn compute_features(stream: &EventStream) -> FeatureVector {
    let total = stream.len();
    let on = stream.count(Polarity::On);
    let off = total - on;
    let (ratio, ratio_defined) = if off > 0 {
        (on as f64 / off as f64, true)
    } else {
        (on as f64, false)
    };
    if total == 0 {
        return FeatureVector {
            total: 0.0,
            on: 0.0,
            off: 0.0,
            on_off_ratio: ratio,
            mean_x: 0.0,
            mean_y: 0.0,
            std_x: 0.0,
            std_y: 0.0,
            max_x: 0.0,
            max_y: 0.0,
            ratio_defined,
            position_defined: false,
        };
    }
    let n = total as f64;
    let mut sum = (0.0f64, 0.0f64);
    let mut max = (0u8, 0u8);
    for e in &stream.events {
        sum.0 += f64::from(e.x);
        sum.1 += f64::from(e.y);
        max.0 = max.0.max(e.x);
        max.1 = max.1.max(e.y);
    }
    let mean = (sum.0 / n, sum.1 / n);
    let mut sq = (0.0f64, 0.0f64);
    for e in &stream.events {
        let dx = f64::from(e.x) - mean.0;
        let dy = f64::from(e.y) - mean.1;
        sq.0 += dx * dx;
        sq.1 += dy * dy;
    }
    let std = if total > 1 {
        ((sq.0 / (n - 1.0)).sqrt(), (sq.1 / (n - 1.0)).sqrt())
    } else {
        (0.0, 0.0)
    };
    FeatureVector {
        total: n,
        on: on as f64,
        off: off as f64,
        on_off_ratio: ratio,
        mean_x: mean.0,
        mean_y: mean.1,
        std_x: std.0,
        std_y: std.1,
        max_x: f64::from(max.0),
        max_y: f64::from(max.1),
        ratio_defined,
        position_defined: true,
    }
}

/// Occupied address extent as `(x_range, y_range)` in pixels, `None` for an
/// empty stream.
pub fn address_extent(stream: &EventStream) -> Option<(u16, u16)> {
    let first = stream.events.first()?;
    let mut min = (first.x, first.y);
    let mut max = (first.x, first.y);
    for e in &stream.events {
        min.0 = min.0.min(e.x);
        min.1 = min.1.min(e.y);
        max.0 = max.0.max(e.x);
        max.1 = max.1.max(e.y);
    }
    Some((
        u16::from(max.0 - min.0) + 1,
        u16::from(max.1 - min.1) + 1,
    ))
}

/// Per feature sample mean and sample standard deviation over a set of
/// recordings, counting only recordings where the feature is defined.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSummary {
    pub mean: [f64; 10],
    pub std: [f64; 10],
    pub defined: [usize; 10],
}

pub fn aggregate_features(vectors: &[FeatureVector]) -> FeatureSummary {
    let mut mean = [0.0; 10];
    let mut std = [0.0; 10];
    let mut defined = [0usize; 10];
    for (slot, feature) in Feature::ALL.into_iter().enumerate() {
        let values: Vec<f64> = vectors.iter().filter_map(|v| v.get(feature)).collect();
        defined[slot] = values.len();
        if values.is_empty() {
            continue;
        }
        let n = values.len() as f64;
        let m = values.iter().sum::<f64>() / n;
        mean[slot] = m;
        if values.len() > 1 {
            let ss = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
            std[slot] = (ss / (n - 1.0)).sqrt();
        }
    }
    FeatureSummary { mean, std, defined }
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no recordings supplied")]
    NoRecordings,
    #[error("rate bin width must be positive")]
    ZeroBin,
    #[error("recordings mix durations: expected {expected} us, found {got} us")]
    MixedDurations { expected: u32, got: u32 },
    #[error("spectrum length exponent {exp} outside the supported 4..=27")]
    LengthOutOfRange { exp: u32 },
    #[error("cannot concatenate zero duration recordings")]
    ZeroDurationRecording,
    #[error("event count signal is identically zero")]
    NoEvents,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Mean and spread of firing rate over time across recordings.
#[derive(Clone, Debug, PartialEq)]
pub struct RateProfile {
    pub bin_us: u32,
    pub duration_us: u32,
    pub recordings: usize,
    /// Mean rate per bin in events per millisecond.
    pub mean: Vec<f64>,
    /// Sample standard deviation per bin, zero for a single recording.
    pub std: Vec<f64>,
}

impl RateProfile {
    /// Mean rate over `[t_start, t_end)`, averaging whole bins inside it.
    pub fn window_mean(&self, t_start: u32, t_end: u32) -> f64 {
        let lo = (t_start / self.bin_us) as usize;
        let hi = ((t_end + self.bin_us - 1) / self.bin_us) as usize;
        let bins = &self.mean[lo..hi.min(self.mean.len())];
        if bins.is_empty() {
            0.0
        } else {
            bins.iter().sum::<f64>() / bins.len() as f64
        }
    }
}

pub fn rate_profile(streams: &[EventStream], bin_us: u32) -> Result<RateProfile, AnalysisError> {
    if bin_us == 0 {
        return Err(AnalysisError::ZeroBin);
    }
    let first = streams.first().ok_or(AnalysisError::NoRecordings)?;
    let duration = first.duration_us;
    let bins = ((duration + bin_us - 1) / bin_us).max(1) as usize;
    let ms_per_bin = f64::from(bin_us) / 1000.0;
    let mut mean = vec![0.0f64; bins];
    let mut m2 = vec![0.0f64; bins];
    let mut counts = vec![0u32; bins];
    for (i, stream) in streams.iter().enumerate() {
        if stream.duration_us != duration {
            return Err(AnalysisError::MixedDurations {
                expected: duration,
                got: stream.duration_us,
            });
        }
        counts.iter_mut().for_each(|c| *c = 0);
        for e in &stream.events {
            let idx = ((e.t / bin_us) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        // Welford over recordings, one pass
        let n = (i + 1) as f64;
        for b in 0..bins {
            let rate = f64::from(counts[b]) / ms_per_bin;
            let delta = rate - mean[b];
            mean[b] += delta / n;
            m2[b] += delta * (rate - mean[b]);
        }
    }
    let n = streams.len();
    let std = m2
        .into_iter()
        .map(|m| if n > 1 { (m / (n as f64 - 1.0)).sqrt() } else { 0.0 })
        .collect();
    Ok(RateProfile {
        bin_us,
        duration_us: duration,
        recordings: n,
        mean,
        std,
    })
}

/// Magnitude spectrum of the per microsecond event count signal.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub length_exp: u32,
    /// Spacing between adjacent frequency bins in Hz.
    pub freq_step_hz: f64,
    /// Magnitudes for bins 0 (DC) through Nyquist.
    pub magnitude: Vec<f64>,
}

impl Spectrum {
    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.freq_step_hz
    }

    /// A bin is a peak when it exceeds five times the median magnitude of
    /// its +-2 Hz neighborhood (the bin itself excluded). DC is never a peak.
    pub fn is_peak(&self, bin: usize) -> bool {
        if bin == 0 || bin >= self.magnitude.len() {
            return false;
        }
        let span = ((2.0 / self.freq_step_hz).round() as usize).max(1);
        let lo = bin.saturating_sub(span);
        let hi = (bin + span).min(self.magnitude.len() - 1);
        let mut neighbors: Vec<f64> = (lo..=hi)
            .filter(|&i| i != bin)
            .map(|i| self.magnitude[i])
            .collect();
        if neighbors.is_empty() {
            return false;
        }
        neighbors.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = neighbors[neighbors.len() / 2];
        self.magnitude[bin] > 5.0 * median
    }

    /// Any peak within `tol_hz` of the target frequency.
    pub fn has_peak_near(&self, f_hz: f64, tol_hz: f64) -> bool {
        let lo = ((f_hz - tol_hz) / self.freq_step_hz).floor().max(0.0) as usize;
        let hi = ((f_hz + tol_hz) / self.freq_step_hz).ceil() as usize;
        (lo..=hi.min(self.magnitude.len().saturating_sub(1))).any(|b| self.is_peak(b))
    }
}

/// Build the spectrum of randomly concatenated recordings.
///
/// Recordings are drawn uniformly with replacement and laid end to end until
/// `2^length_exp` microseconds are covered; the per microsecond event counts
/// are mean subtracted, normalized to unit energy, and transformed. Memory
/// scales with `2^length_exp` (the default 22 needs ~130 MB, 27 ~4 GB).
pub fn temporal_spectrum(
    streams: &[EventStream],
    length_exp: u32,
    seed: u64,
) -> Result<Spectrum, AnalysisError> {
    if !(4..=27).contains(&length_exp) {
        return Err(AnalysisError::LengthOutOfRange { exp: length_exp });
    }
    if streams.is_empty() {
        return Err(AnalysisError::NoRecordings);
    }
    if streams.iter().any(|s| s.duration_us == 0) {
        return Err(AnalysisError::ZeroDurationRecording);
    }
    let n = 1usize << length_exp;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut counts = vec![0.0f32; n];
    let mut offset = 0u64;
    while offset < n as u64 {
        let stream = &streams[rng.gen_range(0..streams.len())];
        for e in &stream.events {
            let pos = offset + u64::from(e.t);
            if pos < n as u64 {
                counts[pos as usize] += 1.0;
            }
        }
        offset += u64::from(stream.duration_us);
    }
    let mean = counts.iter().map(|&c| f64::from(c)).sum::<f64>() / n as f64;
    let energy: f64 = counts
        .iter()
        .map(|&c| {
            let v = f64::from(c) - mean;
            v * v
        })
        .sum();
    if energy <= 0.0 {
        return Err(AnalysisError::NoEvents);
    }
    let scale = 1.0 / energy.sqrt();
    let mut signal: Vec<Complex<f64>> = counts
        .iter()
        .map(|&c| Complex::new((f64::from(c) - mean) * scale, 0.0))
        .collect();
    drop(counts);
    FftPlanner::new().plan_fft_forward(n).process(&mut signal);
    let magnitude = signal[..n / 2 + 1].iter().map(|c| c.norm()).collect();
    Ok(Spectrum {
        length_exp,
        freq_step_hz: 1e6 / n as f64,
        magnitude,
    })
}

/// One rendered frame: most recent polarity per pixel within the window,
/// ON red, OFF blue, silence black.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub width: u16,
    pub height: u16,
    pub rgb: Vec<u8>,
}

pub fn render_frames(stream: &EventStream, window_us: u32) -> Vec<Frame> {
    assert!(window_us > 0, "frame window must be positive");
    let count = ((stream.duration_us + window_us - 1) / window_us) as usize;
    let px = stream.width as usize * stream.height as usize;
    let mut frames = vec![
        Frame {
            width: stream.width,
            height: stream.height,
            rgb: vec![0; px * 3],
        };
        count
    ];
    for e in &stream.events {
        let frame = ((e.t / window_us) as usize).min(count.saturating_sub(1));
        let base = (e.y as usize * stream.width as usize + e.x as usize) * 3;
        let rgb = &mut frames[frame].rgb;
        let (r, b) = if e.polarity.is_on() { (255, 0) } else { (0, 255) };
        rgb[base] = r;
        rgb[base + 1] = 0;
        rgb[base + 2] = b;
    }
    frames
}

/// Write frames as binary PPM files named `<prefix>_0000.ppm` onward.
pub fn save_frames_ppm(frames: &[Frame], dir: &Path, prefix: &str) -> io::Result<Vec<PathBuf>> {
    let mut paths = Vec::with_capacity(frames.len());
    for (i, frame) in frames.iter().enumerate() {
        let path = dir.join(format!("{prefix}_{i:04}.ppm"));
        let mut out = Vec::with_capacity(frame.rgb.len() + 32);
        write!(out, "P6\n{} {}\n255\n", frame.width, frame.height)?;
        out.extend_from_slice(&frame.rgb);
        std::fs::write(&path, out)?;
        paths.push(path);
    }
    Ok(paths)
}
