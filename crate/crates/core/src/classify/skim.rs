//! Synaptic-kernel classifier: a fixed random hidden layer whose neurons see
//! per-pixel spike trains through delayed alpha-function synapses, and a
//! linear output layer fit by regularized least squares one recording at a
//! time so memory stays bounded by the hidden size, not the dataset.

use std::fs;
use std::io::{Read as _, Write as _};
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use thiserror::Error;

use super::EvalReport;
use crate::event::EventStream;

/// Hidden activations tick at 1 ms.
pub const TIMESTEP_US: u32 = 1_000;
/// Longest recording the hidden layer models; later events are dropped.
pub const MAX_STEPS: usize = 316;
/// Width of the supervision pulse at the end of each recording.
pub const TARGET_PULSE_STEPS: usize = 10;
pub const DEFAULT_HIDDEN: usize = 500;
pub const DEFAULT_RIDGE: f64 = 1e-4;

const MAX_DELAY_MS: f64 = 200.0;
const TAU_MIN_MS: f64 = 5.0;
const TAU_MAX_MS: f64 = 40.0;
/// An alpha kernel u*exp(1-u) has fallen below 1e-3 of its peak once
/// u = (t-d)/tau reaches 10.5, so delay + 10.5*tau is the effective support.
const KERNEL_SPAN_TAUS: f64 = 10.5;
const KERNEL_FLOOR: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct SkimConfig {
    pub hidden: usize,
    /// Fold ON and OFF events into one channel per pixel (default); otherwise
    /// each pixel contributes two channels.
    pub merge_polarity: bool,
    /// Side of the square pixel block pooled into one input channel; 1 keeps
    /// full resolution. Large frames stay tractable at 4.
    pub downsample: usize,
    pub ridge: f64,
    pub seed: u64,
}

impl Default for SkimConfig {
    fn default() -> SkimConfig {
        SkimConfig {
            hidden: DEFAULT_HIDDEN,
            merge_polarity: true,
            downsample: 1,
            ridge: DEFAULT_RIDGE,
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum SkimError {
    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },
    #[error("no training recordings")]
    EmptyTraining,
    #[error("recording frame {got:?} does not match the trained frame {expected:?}")]
    FrameMismatch {
        expected: (u16, u16),
        got: (u16, u16),
    },
    #[error("normal equations stayed singular after raising the ridge to {last_ridge}")]
    SolverFailed { last_ridge: f64 },
    #[error("weights file rejected: {reason}")]
    WeightsFile { reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One hidden neuron: static input weights plus a discretized synaptic kernel
/// that starts `lead` steps after an input spike.
#[derive(Clone, Debug)]
struct HiddenNeuron {
    weights: Vec<f64>,
    lead: usize,
    taps: Vec<f64>,
}

/// The alpha kernel h(t) = (t-d)/tau * exp(1 - (t-d)/tau) for t >= d sampled
/// at whole milliseconds, trimmed to where it exceeds 1e-3 of its peak.
fn kernel_taps(delay_ms: f64, tau_ms: f64) -> (usize, Vec<f64>) {
    let full: Vec<f64> = (0..MAX_STEPS)
        .map(|t| {
            let u = (t as f64 - delay_ms) / tau_ms;
            if u < 0.0 {
                0.0
            } else {
                u * (1.0 - u).exp()
            }
        })
        .collect();
    let peak = full.iter().cloned().fold(0.0f64, f64::max);
    let keep = |v: f64| v >= KERNEL_FLOOR * peak;
    let lead = full.iter().position(|&v| keep(v)).unwrap_or(0);
    let end = full.iter().rposition(|&v| keep(v)).map_or(0, |i| i + 1);
    (lead, full[lead..end].to_vec())
}

fn sample_neurons(rng: &mut ChaCha12Rng, hidden: usize, channels: usize) -> Vec<HiddenNeuron> {
    let scale = 1.0 / (channels as f64).sqrt();
    (0..hidden)
        .map(|_| {
            let weights = (0..channels)
                .map(|_| rng.gen_range(-1.0..1.0) * scale)
                .collect();
            let delay = rng.gen_range(0.0..MAX_DELAY_MS);
            let tau_max = TAU_MAX_MS.min((MAX_STEPS as f64 - delay) / KERNEL_SPAN_TAUS);
            let tau = rng.gen_range(TAU_MIN_MS..tau_max);
            let (lead, taps) = kernel_taps(delay, tau);
            HiddenNeuron {
                weights,
                lead,
                taps,
            }
        })
        .collect()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Result of training: the usable network plus anything worth surfacing
/// (truncated recordings, a raised ridge).
#[derive(Clone, Debug)]
pub struct SkimTraining {
    pub network: SkimNetwork,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct SkimNetwork {
    width: u16,
    height: u16,
    merge_polarity: bool,
    downsample: usize,
    channels: usize,
    neurons: Vec<HiddenNeuron>,
    classes: Vec<String>,
    out_weights: DMatrix<f64>,
}

impl SkimNetwork {
    /// Deterministically sample the hidden layer and fit the output layer to
    /// end-of-recording target pulses over the labeled training set.
    pub fn train(
        config: &SkimConfig,
        training: &[(String, EventStream)],
    ) -> Result<SkimTraining, SkimError> {
        if config.hidden == 0 {
            return Err(SkimError::InvalidConfig {
                reason: "need at least one hidden neuron".into(),
            });
        }
        if config.downsample == 0 {
            return Err(SkimError::InvalidConfig {
                reason: "downsample factor must be at least 1".into(),
            });
        }
        if !(config.ridge >= 0.0) {
            return Err(SkimError::InvalidConfig {
                reason: "ridge must be a nonnegative number".into(),
            });
        }
        let (width, height) = training
            .first()
            .map(|(_, s)| (s.width, s.height))
            .ok_or(SkimError::EmptyTraining)?;
        let mut classes: Vec<String> = training.iter().map(|(l, _)| l.clone()).collect();
        classes.sort();
        classes.dedup();

        let cols = (width as usize).div_ceil(config.downsample);
        let rows = (height as usize).div_ceil(config.downsample);
        let channels = cols * rows * if config.merge_polarity { 1 } else { 2 };
        let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
        let mut net = SkimNetwork {
            width,
            height,
            merge_polarity: config.merge_polarity,
            downsample: config.downsample,
            channels,
            neurons: sample_neurons(&mut rng, config.hidden, channels),
            classes,
            out_weights: DMatrix::zeros(config.hidden, 0),
        };

        let n = config.hidden;
        let mut gram = DMatrix::<f64>::zeros(n, n);
        let mut moment = DMatrix::<f64>::zeros(n, net.classes.len());
        let mut truncated = 0usize;
        // forward passes run in parallel inside each chunk; the accumulation
        // below stays in dataset order so a rerun is bit-identical
        for chunk in training.chunks(16) {
            let passes: Vec<(DMatrix<f64>, usize, bool, usize)> = chunk
                .par_iter()
                .map(|(label, stream)| {
                    let class = net.classes.binary_search(label).expect("label known");
                    let (a, t_rec, cut) = net.forward(stream)?;
                    Ok((a, t_rec, cut, class))
                })
                .collect::<Result<_, SkimError>>()?;
            for (a, t_rec, cut, class) in passes {
                truncated += cut as usize;
                let y = targets(t_rec, class, net.classes.len());
                gram.gemm_tr(1.0, &a, &a, 1.0);
                moment.gemm_tr(1.0, &a, &y, 1.0);
            }
        }

        let mut warnings = Vec::new();
        if truncated > 0 {
            warnings.push(format!(
                "{truncated} recording(s) exceeded {MAX_STEPS} ms and were truncated"
            ));
        }
        net.out_weights = solve_ridge(&gram, &moment, config.ridge, &mut warnings)?;
        Ok(SkimTraining {
            network: net,
            warnings,
        })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    /// Input channels after polarity merging and block pooling.
    pub fn input_channels(&self) -> usize {
        self.channels
    }

    fn channel(&self, x: u8, y: u8, on: bool) -> usize {
        let cols = (self.width as usize).div_ceil(self.downsample);
        let cell = (y as usize / self.downsample) * cols + x as usize / self.downsample;
        if self.merge_polarity {
            cell
        } else {
            cell * 2 + on as usize
        }
    }

    /// Hidden activation matrix (timesteps x hidden) plus the recording's
    /// step count and whether it had to be truncated.
    fn forward(&self, stream: &EventStream) -> Result<(DMatrix<f64>, usize, bool), SkimError> {
        if (stream.width, stream.height) != (self.width, self.height) {
            return Err(SkimError::FrameMismatch {
                expected: (self.width, self.height),
                got: (stream.width, stream.height),
            });
        }
        let full_steps = (stream.duration_us.div_ceil(TIMESTEP_US)).max(1) as usize;
        let t_rec = full_steps.min(MAX_STEPS);
        let truncated = full_steps > MAX_STEPS;

        // sparse per-step spike counts: (step, channel, count), step-ordered
        let mut bins: Vec<(u32, u32, f64)> = stream
            .events
            .iter()
            .filter(|e| (e.t / TIMESTEP_US) < t_rec as u32)
            .map(|e| {
                (
                    e.t / TIMESTEP_US,
                    self.channel(e.x, e.y, e.polarity.is_on()) as u32,
                    1.0,
                )
            })
            .collect();
        bins.sort_unstable_by_key(|&(t, ch, _)| (t, ch));
        bins.dedup_by(|a, b| {
            if (a.0, a.1) == (b.0, b.1) {
                b.2 += a.2;
                true
            } else {
                false
            }
        });

        let mut activations = DMatrix::zeros(t_rec, self.neurons.len());
        let mut projected = vec![0.0f64; t_rec];
        let mut drive = vec![0.0f64; t_rec];
        for (j, neuron) in self.neurons.iter().enumerate() {
            projected.iter_mut().for_each(|v| *v = 0.0);
            for &(t, ch, count) in &bins {
                projected[t as usize] += neuron.weights[ch as usize] * count;
            }
            drive.iter_mut().for_each(|v| *v = 0.0);
            for (t0, &source) in projected.iter().enumerate() {
                if source == 0.0 {
                    continue;
                }
                let start = t0 + neuron.lead;
                for (i, &tap) in neuron.taps.iter().enumerate() {
                    let Some(slot) = drive.get_mut(start + i) else {
                        break;
                    };
                    *slot += source * tap;
                }
            }
            for (t, &d) in drive.iter().enumerate() {
                activations[(t, j)] = sigmoid(d);
            }
        }
        Ok((activations, t_rec, truncated))
    }

    /// Hidden activation matrix (timesteps x hidden) for one recording — the
    /// design rows the output-layer regression sees.
    pub fn hidden_trace(&self, stream: &EventStream) -> Result<DMatrix<f64>, SkimError> {
        Ok(self.forward(stream)?.0)
    }

    /// Trained output weight matrix (hidden x classes).
    pub fn output_weights(&self) -> &DMatrix<f64> {
        &self.out_weights
    }

    /// Per-class output traces (timesteps x classes) for one recording.
    pub fn output_trace(&self, stream: &EventStream) -> Result<DMatrix<f64>, SkimError> {
        let (a, _, _) = self.forward(stream)?;
        Ok(a * &self.out_weights)
    }

    /// The class whose output trace peaks highest inside the final 10 ms of
    /// the recording; ties go to the lowest class index.
    pub fn classify(&self, stream: &EventStream) -> Result<&str, SkimError> {
        let outputs = self.output_trace(stream)?;
        let scores = window_scores(&outputs);
        Ok(self.classes[decide(&scores)].as_str())
    }

    /// Balanced-accuracy report with 0/1 credit per recording.
    pub fn evaluate(&self, test: &[(String, EventStream)]) -> Result<EvalReport, SkimError> {
        let scored: Vec<(&str, f64)> = test
            .par_iter()
            .map(|(label, stream)| {
                let hit = self.classify(stream)? == label;
                Ok((label.as_str(), hit as u8 as f64))
            })
            .collect::<Result<_, SkimError>>()?;
        Ok(EvalReport::from_scores(&scored))
    }

    /// Write the trained output matrix: 8-byte magic, rows and cols as u32
    /// little-endian, then row-major f64 little-endian.
    pub fn save_output_weights(&self, path: &Path) -> Result<(), SkimError> {
        let mut file = fs::File::create(path)?;
        file.write_all(WEIGHTS_MAGIC)?;
        file.write_all(&(self.out_weights.nrows() as u32).to_le_bytes())?;
        file.write_all(&(self.out_weights.ncols() as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.out_weights.len() * 8);
        for r in 0..self.out_weights.nrows() {
            for c in 0..self.out_weights.ncols() {
                buf.extend_from_slice(&self.out_weights[(r, c)].to_le_bytes());
            }
        }
        file.write_all(&buf)?;
        Ok(())
    }

    /// Replace the output matrix with one saved earlier; the hidden size and
    /// class count must match this network.
    pub fn load_output_weights(&mut self, path: &Path) -> Result<(), SkimError> {
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() < 16 || &bytes[..8] != WEIGHTS_MAGIC {
            return Err(SkimError::WeightsFile {
                reason: "missing or wrong magic".into(),
            });
        }
        let rows = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        if (rows, cols) != (self.neurons.len(), self.classes.len()) {
            return Err(SkimError::WeightsFile {
                reason: format!(
                    "matrix is {rows}x{cols}, network needs {}x{}",
                    self.neurons.len(),
                    self.classes.len()
                ),
            });
        }
        let body = &bytes[16..];
        if body.len() != rows * cols * 8 {
            return Err(SkimError::WeightsFile {
                reason: format!(
                    "payload is {} bytes, expected {}",
                    body.len(),
                    rows * cols * 8
                ),
            });
        }
        let mut out = DMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                let at = (r * cols + c) * 8;
                out[(r, c)] = f64::from_le_bytes(body[at..at + 8].try_into().unwrap());
            }
        }
        self.out_weights = out;
        Ok(())
    }
}

const WEIGHTS_MAGIC: &[u8; 8] = b"SKIMWTS1";

/// Supervision trace: 1 for the labeled class over the final 10 steps.
fn targets(t_rec: usize, class: usize, n_classes: usize) -> DMatrix<f64> {
    let mut y = DMatrix::zeros(t_rec, n_classes);
    for t in t_rec.saturating_sub(TARGET_PULSE_STEPS)..t_rec {
        y[(t, class)] = 1.0;
    }
    y
}

/// Solve (G + ridge*I) W = B, raising the ridge a hundredfold (with a
/// warning) whenever the factorization reports the system singular.
fn solve_ridge(
    gram: &DMatrix<f64>,
    moment: &DMatrix<f64>,
    ridge: f64,
    warnings: &mut Vec<String>,
) -> Result<DMatrix<f64>, SkimError> {
    let n = gram.nrows();
    let mut lambda = ridge;
    for attempt in 0..7 {
        let mut reg = gram.clone();
        for i in 0..n {
            reg[(i, i)] += lambda;
        }
        if let Some(chol) = reg.cholesky() {
            if attempt > 0 {
                warnings.push(format!(
                    "normal equations singular at ridge {ridge}; solved with ridge {lambda}"
                ));
            }
            return Ok(chol.solve(moment));
        }
        lambda = if lambda > 0.0 { lambda * 100.0 } else { 1e-10 };
    }
    Err(SkimError::SolverFailed { last_ridge: lambda })
}

/// Highest output value per class across the final 10 steps.
fn window_scores(outputs: &DMatrix<f64>) -> Vec<f64> {
    let from = outputs.nrows().saturating_sub(TARGET_PULSE_STEPS);
    (0..outputs.ncols())
        .map(|c| {
            (from..outputs.nrows())
                .map(|t| outputs[(t, c)])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Argmax with ties to the lowest index.
fn decide(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{Event, Polarity};
    use crate::schedule::SaccadeSchedule;
    use crate::sim::{simulate, SensorModel, SimParams};
    use crate::synth::digit_set;
    use approx::assert_relative_eq;

    fn empty_stream(width: u16, height: u16, duration_us: u32) -> EventStream {
        EventStream::new(width, height, duration_us)
    }

    fn push(stream: &mut EventStream, x: u8, y: u8, on: bool, t: u32) {
        stream.events.push(Event {
            x,
            y,
            polarity: if on { Polarity::On } else { Polarity::Off },
            t,
        });
    }

    /// Tiny deterministic recordings: class k fires a burst on pixel column k.
    fn toy_set(
        width: u16,
        classes: usize,
        per_class: usize,
        seed: u64,
    ) -> Vec<(String, EventStream)> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for class in 0..classes {
            for _ in 0..per_class {
                let mut s = empty_stream(width, 1, 60_000);
                for burst in 0..4 {
                    let t0 = 2_000 + burst * 12_000 + rng.gen_range(0..3_000);
                    for k in 0..5 {
                        push(&mut s, class as u8, 0, true, t0 + k * 200);
                    }
                }
                out.push((class.to_string(), s));
            }
        }
        out
    }

    #[test]
    fn kernel_peaks_one_tau_after_the_delay() {
        let (lead, taps) = kernel_taps(20.0, 10.0);
        let peak = taps
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        assert_eq!(lead + peak.0, 30);
        assert_relative_eq!(*peak.1, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn kernel_support_trimmed_at_a_thousandth_of_peak() {
        let (lead, taps) = kernel_taps(20.0, 10.0);
        assert!(taps.iter().all(|&v| v >= KERNEL_FLOOR));
        // support well short of the full window: 20 + 10.5*10 = 125
        assert!(lead + taps.len() <= 126);
    }

    #[test]
    fn sampled_kernels_die_out_inside_the_window() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let neurons = sample_neurons(&mut rng, 200, 16);
        for n in &neurons {
            assert!(n.lead + n.taps.len() <= MAX_STEPS);
        }
        // and the continuous-time tail past the window is below the floor
        for _ in 0..200 {
            let d = rng.gen_range(0.0..MAX_DELAY_MS);
            let tau_max = TAU_MAX_MS.min((MAX_STEPS as f64 - d) / KERNEL_SPAN_TAUS);
            let tau = rng.gen_range(TAU_MIN_MS..tau_max);
            for t in [316.0f64, 317.0, 350.0, 400.0] {
                let u = (t - d) / tau;
                assert!(u * (1.0 - u).exp() < KERNEL_FLOOR, "d {d} tau {tau} t {t}");
            }
        }
    }

    #[test]
    fn no_input_rests_at_one_half() {
        let train = toy_set(4, 2, 2, 0);
        let net = SkimNetwork::train(&SkimConfig { hidden: 8, ..SkimConfig::default() }, &train)
            .unwrap()
            .network;
        let (a, t_rec, truncated) = net.forward(&empty_stream(4, 1, 60_000)).unwrap();
        assert_eq!(t_rec, 60);
        assert!(!truncated);
        assert!(a.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn single_spike_deviation_peaks_at_delay_plus_tau() {
        let mut net = SkimNetwork {
            width: 1,
            height: 1,
            merge_polarity: true,
            downsample: 1,
            channels: 1,
            neurons: Vec::new(),
            classes: vec!["0".into()],
            out_weights: DMatrix::zeros(1, 1),
        };
        let (lead, taps) = kernel_taps(40.0, 12.0);
        net.neurons.push(HiddenNeuron {
            weights: vec![0.8],
            lead,
            taps,
        });
        let mut s = empty_stream(1, 1, 300_000);
        push(&mut s, 0, 0, true, 0);
        let (a, _, _) = net.forward(&s).unwrap();
        let peak_t = (0..a.nrows())
            .max_by(|&p, &q| {
                (a[(p, 0)] - 0.5)
                    .abs()
                    .partial_cmp(&(a[(q, 0)] - 0.5).abs())
                    .unwrap()
            })
            .unwrap();
        assert_eq!(peak_t, 52);
        assert!(a.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn doubling_weights_pushes_activations_from_rest() {
        let train = toy_set(6, 3, 2, 1);
        let net = SkimNetwork::train(&SkimConfig { hidden: 12, ..SkimConfig::default() }, &train)
            .unwrap()
            .network;
        let mut doubled = net.clone();
        for n in &mut doubled.neurons {
            n.weights.iter_mut().for_each(|w| *w *= 2.0);
        }
        let (a1, _, _) = net.forward(&train[0].1).unwrap();
        let (a2, _, _) = doubled.forward(&train[0].1).unwrap();
        for (v1, v2) in a1.iter().zip(a2.iter()) {
            assert!((v2 - 0.5).abs() >= (v1 - 0.5).abs() - 1e-15);
            if (v1 - 0.5).abs() > 1e-12 {
                assert!((v2 - 0.5).abs() > (v1 - 0.5).abs());
                assert_eq!(v1 > &0.5, v2 > &0.5);
            }
        }
    }

    #[test]
    fn zero_targets_give_zero_weights() {
        let mut warnings = Vec::new();
        let a = DMatrix::from_fn(6, 5, |r, c| ((r * 5 + c) as f64 * 0.37).sin());
        let gram = a.transpose() * &a;
        let moment = DMatrix::zeros(5, 3);
        let w = solve_ridge(&gram, &moment, 1e-4, &mut warnings).unwrap();
        assert!(w.iter().all(|&v| v == 0.0));
        assert!(warnings.is_empty());
    }

    #[test]
    fn singular_system_is_solved_by_raising_the_ridge() {
        // rank-1 gram with a zero ridge cannot factor until escalation
        let a = DMatrix::from_row_slice(1, 4, &[1.0, 2.0, 3.0, 4.0]);
        let gram = a.transpose() * &a;
        let moment = DMatrix::from_row_slice(4, 1, &[1.0, 0.0, 0.0, 0.0]);
        let mut warnings = Vec::new();
        let w = solve_ridge(&gram, &moment, 0.0, &mut warnings).unwrap();
        assert!(w.iter().all(|v| v.is_finite()));
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("singular"));
    }

    /// Independent batch oracle: stack every activation block over a ridge
    /// block and solve the tall least-squares problem by SVD.
    fn batch_solve(
        passes: &[(DMatrix<f64>, DMatrix<f64>)],
        hidden: usize,
        classes: usize,
        ridge: f64,
    ) -> DMatrix<f64> {
        let t_total: usize = passes.iter().map(|(a, _)| a.nrows()).sum();
        let mut stacked = DMatrix::zeros(t_total + hidden, hidden);
        let mut rhs = DMatrix::zeros(t_total + hidden, classes);
        let mut row = 0;
        for (a, y) in passes {
            stacked.view_mut((row, 0), (a.nrows(), hidden)).copy_from(a);
            rhs.view_mut((row, 0), (y.nrows(), classes)).copy_from(y);
            row += a.nrows();
        }
        for i in 0..hidden {
            stacked[(row + i, i)] = ridge.sqrt();
        }
        stacked.svd(true, true).solve(&rhs, 1e-12).unwrap()
    }

    fn training_passes(
        net: &SkimNetwork,
        set: &[(String, EventStream)],
    ) -> Vec<(DMatrix<f64>, DMatrix<f64>)> {
        set.iter()
            .map(|(label, stream)| {
                let class = net.classes.binary_search(label).unwrap();
                let (a, t_rec, _) = net.forward(stream).unwrap();
                (a, targets(t_rec, class, net.classes.len()))
            })
            .collect()
    }

    #[test]
    fn incremental_solution_matches_the_batch_solver() {
        let set = toy_set(8, 4, 13, 7); // 52 recordings
        let config = SkimConfig {
            hidden: 40,
            ..SkimConfig::default()
        };
        let trained = SkimNetwork::train(&config, &set).unwrap();
        assert!(trained.warnings.is_empty());
        let net = trained.network;
        let batch = batch_solve(&training_passes(&net, &set), 40, 4, config.ridge);
        let diff = (&net.out_weights - &batch).abs().max();
        assert!(diff <= 1e-6, "max-abs weight difference {diff}");
    }

    #[test]
    fn training_order_does_not_change_the_weights() {
        let set = toy_set(6, 3, 7, 11);
        let mut reversed = set.clone();
        reversed.reverse();
        let config = SkimConfig {
            hidden: 24,
            ..SkimConfig::default()
        };
        let a = SkimNetwork::train(&config, &set).unwrap().network;
        let b = SkimNetwork::train(&config, &reversed).unwrap().network;
        let diff = (&a.out_weights - &b.out_weights).abs().max();
        assert!(diff <= 1e-6, "max-abs weight difference {diff}");
    }

    #[test]
    fn same_seed_reproduces_training_exactly() {
        let set = toy_set(5, 2, 4, 2);
        let config = SkimConfig {
            hidden: 16,
            ..SkimConfig::default()
        };
        let a = SkimNetwork::train(&config, &set).unwrap().network;
        let b = SkimNetwork::train(&config, &set).unwrap().network;
        assert_eq!(a.out_weights, b.out_weights);
        let other = SkimNetwork::train(
            &SkimConfig {
                seed: 1,
                ..config.clone()
            },
            &set,
        )
        .unwrap()
        .network;
        assert_ne!(a.out_weights, other.out_weights);
    }

    #[test]
    fn single_class_training_reproduces_the_pulse() {
        // one long recording with activity throughout, and more hidden
        // neurons than timesteps, so the ridge fit nearly interpolates
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mut s = empty_stream(4, 1, 300_000);
        for burst in 0..24 {
            let t0 = 2_000 + burst * 12_000 + rng.gen_range(0..3_000);
            for k in 0..5 {
                push(&mut s, (burst % 4) as u8, 0, true, t0 + k * 200);
            }
        }
        let set = vec![("solo".to_string(), s)];
        let config = SkimConfig {
            hidden: 400,
            ..SkimConfig::default()
        };
        let net = SkimNetwork::train(&config, &set).unwrap().network;
        let outputs = net.output_trace(&set[0].1).unwrap();
        let t = outputs.nrows();
        for row in t - TARGET_PULSE_STEPS..t {
            assert!(
                (outputs[(row, 0)] - 1.0).abs() < 0.1,
                "pulse row {row} read {}",
                outputs[(row, 0)]
            );
        }
        let off_mean = (0..t - TARGET_PULSE_STEPS)
            .map(|row| outputs[(row, 0)].abs())
            .sum::<f64>()
            / (t - TARGET_PULSE_STEPS) as f64;
        assert!(off_mean < 0.05, "off-pulse mean {off_mean}");
    }

    #[test]
    fn toy_classes_are_memorized() {
        let set = toy_set(8, 2, 5, 9);
        let config = SkimConfig {
            hidden: 60,
            ..SkimConfig::default()
        };
        let net = SkimNetwork::train(&config, &set).unwrap().network;
        for (label, stream) in &set {
            assert_eq!(net.classify(stream).unwrap(), label);
        }
        let report = net.evaluate(&set).unwrap();
        assert_eq!(report.balanced_accuracy(), 1.0);
    }

    #[test]
    fn window_decision_takes_peak_then_lowest_index() {
        let outputs = DMatrix::from_row_slice(
            4,
            3,
            &[
                9.0, 0.0, 0.0, // before the window in a 4-row trace? no: window covers all
                0.1, 0.3, 0.2, //
                0.1, 0.6, 0.2, //
                0.4, 0.1, 0.6,
            ],
        );
        // 4 rows < 10, so the whole trace is the window
        let scores = window_scores(&outputs);
        assert_eq!(scores, vec![9.0, 0.6, 0.6]);
        assert_eq!(decide(&scores), 0);
        assert_eq!(decide(&[0.2, 0.7, 0.7]), 1);
    }

    #[test]
    fn events_past_the_window_are_dropped_with_a_note() {
        let mut long = empty_stream(4, 1, 400_000);
        push(&mut long, 0, 0, true, 10_000);
        push(&mut long, 1, 0, true, 350_000);
        let mut clipped = empty_stream(4, 1, 316_000);
        push(&mut clipped, 0, 0, true, 10_000);

        let train = vec![("a".to_string(), long.clone()), {
            let mut s = empty_stream(4, 1, 60_000);
            push(&mut s, 2, 0, true, 5_000);
            ("b".to_string(), s)
        }];
        let trained = SkimNetwork::train(
            &SkimConfig {
                hidden: 6,
                ..SkimConfig::default()
            },
            &train,
        )
        .unwrap();
        assert!(trained.warnings.iter().any(|w| w.contains("truncated")));

        let (a_long, t_long, cut) = trained.network.forward(&long).unwrap();
        let (a_clip, t_clip, unclipped) = trained.network.forward(&clipped).unwrap();
        assert!(cut && !unclipped);
        assert_eq!((t_long, t_clip), (MAX_STEPS, MAX_STEPS));
        assert_eq!(a_long, a_clip);
    }

    #[test]
    fn block_downsampling_pools_pixels_into_one_channel() {
        let train = vec![
            ("a".to_string(), {
                let mut s = empty_stream(8, 8, 60_000);
                push(&mut s, 0, 0, true, 5_000);
                s
            }),
            ("b".to_string(), {
                let mut s = empty_stream(8, 8, 60_000);
                push(&mut s, 7, 7, true, 5_000);
                s
            }),
        ];
        let config = SkimConfig {
            hidden: 10,
            downsample: 4,
            ..SkimConfig::default()
        };
        let net = SkimNetwork::train(&config, &train).unwrap().network;
        assert_eq!(net.input_channels(), 4);
        let mut corner = empty_stream(8, 8, 60_000);
        push(&mut corner, 0, 0, true, 7_000);
        let mut same_block = empty_stream(8, 8, 60_000);
        push(&mut same_block, 3, 3, true, 7_000);
        let mut other_block = empty_stream(8, 8, 60_000);
        push(&mut other_block, 4, 3, true, 7_000);
        let (a, _, _) = net.forward(&corner).unwrap();
        let (b, _, _) = net.forward(&same_block).unwrap();
        let (c, _, _) = net.forward(&other_block).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn split_polarity_separates_on_and_off() {
        let train = vec![
            ("a".to_string(), {
                let mut s = empty_stream(3, 1, 60_000);
                push(&mut s, 0, 0, true, 5_000);
                s
            }),
            ("b".to_string(), {
                let mut s = empty_stream(3, 1, 60_000);
                push(&mut s, 1, 0, false, 5_000);
                s
            }),
        ];
        let config = SkimConfig {
            hidden: 10,
            merge_polarity: false,
            ..SkimConfig::default()
        };
        let net = SkimNetwork::train(&config, &train).unwrap().network;
        assert_eq!(net.input_channels(), 6);
        let mut on = empty_stream(3, 1, 60_000);
        push(&mut on, 2, 0, true, 9_000);
        let mut off = empty_stream(3, 1, 60_000);
        push(&mut off, 2, 0, false, 9_000);
        let (a, _, _) = net.forward(&on).unwrap();
        let (b, _, _) = net.forward(&off).unwrap();
        assert_ne!(a, b);

        let merged = SkimNetwork::train(
            &SkimConfig {
                merge_polarity: true,
                ..config
            },
            &train,
        )
        .unwrap()
        .network;
        let (a, _, _) = merged.forward(&on).unwrap();
        let (b, _, _) = merged.forward(&off).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn weights_survive_a_save_and_load_round_trip() {
        let set = toy_set(5, 3, 3, 13);
        let config = SkimConfig {
            hidden: 14,
            ..SkimConfig::default()
        };
        let net = SkimNetwork::train(&config, &set).unwrap().network;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.skimw");
        net.save_output_weights(&path).unwrap();

        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..8], WEIGHTS_MAGIC);
        assert_eq!(bytes.len(), 16 + 14 * 3 * 8);

        let mut relisted = SkimNetwork::train(&config, &set).unwrap().network;
        relisted.out_weights = DMatrix::zeros(14, 3);
        relisted.load_output_weights(&path).unwrap();
        assert_eq!(relisted.out_weights, net.out_weights);

        let mut mismatched = SkimNetwork::train(
            &SkimConfig {
                hidden: 9,
                ..SkimConfig::default()
            },
            &set,
        )
        .unwrap()
        .network;
        let err = mismatched.load_output_weights(&path).unwrap_err();
        assert!(matches!(err, SkimError::WeightsFile { .. }));

        std::fs::write(dir.path().join("short.skimw"), b"SKIMWTS1\x01").unwrap();
        let err = relisted
            .load_output_weights(&dir.path().join("short.skimw"))
            .unwrap_err();
        assert!(matches!(err, SkimError::WeightsFile { .. }));
    }

    #[test]
    fn frame_mismatch_is_rejected() {
        let set = toy_set(4, 2, 2, 17);
        let net = SkimNetwork::train(
            &SkimConfig {
                hidden: 6,
                ..SkimConfig::default()
            },
            &set,
        )
        .unwrap()
        .network;
        let err = net.classify(&empty_stream(9, 9, 60_000)).unwrap_err();
        assert!(matches!(err, SkimError::FrameMismatch { .. }));
    }

    #[test]
    fn zero_hidden_neurons_is_an_invalid_config() {
        let set = toy_set(4, 2, 2, 19);
        let err = SkimNetwork::train(
            &SkimConfig {
                hidden: 0,
                ..SkimConfig::default()
            },
            &set,
        )
        .unwrap_err();
        assert!(matches!(err, SkimError::InvalidConfig { .. }));
        assert!(matches!(
            SkimNetwork::train(&SkimConfig::default(), &[]).unwrap_err(),
            SkimError::EmptyTraining
        ));
    }

    #[test]
    fn separates_two_simulated_digit_classes() {
        let schedule = SaccadeSchedule::triangle();
        let sensor = SensorModel::new(34, 34);
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, (img, class)) in digit_set(8, 33).into_iter().enumerate() {
            if class > 1 {
                continue;
            }
            let params = SimParams {
                seed: 500 + i as u64,
                ..SimParams::default()
            };
            let stream = simulate(&img, &schedule, &sensor, &params).unwrap();
            if i % 8 < 5 {
                train.push((class.to_string(), stream));
            } else {
                test.push((class.to_string(), stream));
            }
        }
        let config = SkimConfig {
            hidden: 120,
            ..SkimConfig::default()
        };
        let net = SkimNetwork::train(&config, &train).unwrap().network;
        let report = net.evaluate(&test).unwrap();
        assert!(
            report.balanced_accuracy() >= 0.8,
            "2-class balanced accuracy {}",
            report.balanced_accuracy()
        );
    }
}
