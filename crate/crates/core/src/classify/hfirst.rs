//! Spiking convolutional hierarchy (S1 -> C1 -> S2 -> C2) with event-driven
//! integrate-and-fire neurons.
//!
//! S1 convolves input spikes with oriented Gabor kernels, C1 pools each
//! orientation map 4x4, S2 holds one trained kernel per class (accumulated
//! C1 activity of that class's training recordings), and C2 passes S2
//! spikes through one refractory neuron per class. Classification counts
//! C2 output spikes.

use rayon::prelude::*;
use thiserror::Error;

use super::EvalReport;
use crate::event::EventStream;

/// One spike traveling between layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Spike {
    pub t: u32,
    pub x: u16,
    pub y: u16,
    pub ch: u16,
}

/// Integrate-and-fire parameters and output geometry of one layer.
#[derive(Clone, Debug)]
pub struct LayerSpec {
    /// Firing threshold in mV.
    pub v_thresh: f32,
    /// Linear decay toward zero in mV per ms.
    pub leak_per_ms: f32,
    /// Refractory period in ms; input arriving inside it is discarded.
    pub t_refr_ms: f32,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
}

impl LayerSpec {
    fn neuron_count(&self) -> usize {
        self.width * self.height * self.channels
    }

    fn refr_us(&self) -> u32 {
        (self.t_refr_ms * 1000.0).round() as u32
    }
}

/// How input spikes map onto a layer's synapses.
#[derive(Clone, Debug)]
pub enum Wiring {
    /// Same-padded 2-D convolution; kernel k applied to input channel c
    /// feeds output channel `k * in_channels + c`.
    Conv {
        kernels: Vec<Vec<f32>>,
        size: usize,
        in_channels: usize,
    },
    /// Non-overlapping pooling with weight 1 per input spike, per channel.
    Pool { window: usize },
    /// Every input spike reaches every output neuron, weighted by that
    /// neuron's kernel entry for the spike's (channel, y, x) address.
    Dense { weights: Vec<Vec<f32>> },
    /// Identity wiring with weight 1: input channel n feeds neuron n.
    PassThrough,
}

#[derive(Clone, Copy)]
struct Neuron {
    v: f32,
    last_us: u32,
    refr_until_us: u32,
}

impl Neuron {
    const REST: Neuron = Neuron {
        v: 0.0,
        last_us: 0,
        refr_until_us: 0,
    };

    /// Deliver one weighted input; true when the neuron fires.
    fn receive(&mut self, t: u32, weight: f32, spec: &LayerSpec) -> bool {
        if t < self.refr_until_us {
            return false;
        }
        let dt_ms = (t - self.last_us) as f32 / 1000.0;
        self.v = (self.v - spec.leak_per_ms * dt_ms).max(0.0);
        self.last_us = t;
        self.v = (self.v + weight).max(0.0);
        if self.v >= spec.v_thresh {
            self.v = 0.0;
            self.refr_until_us = t + spec.refr_us();
            true
        } else {
            false
        }
    }
}

fn flat(spec_w: usize, spec_h: usize, x: usize, y: usize, ch: usize) -> usize {
    (ch * spec_h + y) * spec_w + x
}

/// Run one event-driven layer pass over time-sorted input.
///
/// Input is canonically re-sorted by (t, ch, y, x), so any permutation of
/// same-timestamp spikes produces identical output. Neuron state is fresh
/// per call; nothing carries across recordings.
pub fn run_layer(
    spec: &LayerSpec,
    wiring: &Wiring,
    in_dims: (usize, usize, usize),
    input: &[Spike],
) -> Vec<Spike> {
    let mut input = input.to_vec();
    input.sort_by_key(|s| (s.t, s.ch, s.y, s.x));
    let mut neurons = vec![Neuron::REST; spec.neuron_count()];
    let mut out = Vec::new();
    let (in_w, in_h, _) = in_dims;
    for s in &input {
        match wiring {
            Wiring::Conv {
                kernels,
                size,
                in_channels,
            } => {
                let r = (size - 1) / 2;
                for (k, kernel) in kernels.iter().enumerate() {
                    let out_ch = k * in_channels + s.ch as usize;
                    for ky in 0..*size {
                        let oy = s.y as i64 + r as i64 - ky as i64;
                        if oy < 0 || oy >= spec.height as i64 {
                            continue;
                        }
                        for kx in 0..*size {
                            let ox = s.x as i64 + r as i64 - kx as i64;
                            if ox < 0 || ox >= spec.width as i64 {
                                continue;
                            }
                            let w = kernel[ky * size + kx];
                            let idx = flat(spec.width, spec.height, ox as usize, oy as usize, out_ch);
                            if neurons[idx].receive(s.t, w, spec) {
                                out.push(Spike {
                                    t: s.t,
                                    x: ox as u16,
                                    y: oy as u16,
                                    ch: out_ch as u16,
                                });
                            }
                        }
                    }
                }
            }
            Wiring::Pool { window } => {
                let (ox, oy) = (s.x as usize / window, s.y as usize / window);
                let idx = flat(spec.width, spec.height, ox, oy, s.ch as usize);
                if neurons[idx].receive(s.t, 1.0, spec) {
                    out.push(Spike {
                        t: s.t,
                        x: ox as u16,
                        y: oy as u16,
                        ch: s.ch,
                    });
                }
            }
            Wiring::Dense { weights } => {
                let in_idx = flat(in_w, in_h, s.x as usize, s.y as usize, s.ch as usize);
                for (n, kernel) in weights.iter().enumerate() {
                    if neurons[n].receive(s.t, kernel[in_idx], spec) {
                        out.push(Spike {
                            t: s.t,
                            x: 0,
                            y: 0,
                            ch: n as u16,
                        });
                    }
                }
            }
            Wiring::PassThrough => {
                let idx = flat(spec.width, spec.height, s.x as usize, s.y as usize, s.ch as usize);
                if neurons[idx].receive(s.t, 1.0, spec) {
                    out.push(*s);
                }
            }
        }
    }
    out
}

/// Oriented filter construction for the S1 bank.
#[derive(Clone, Copy, Debug)]
pub struct GaborParams {
    /// Stripe wavelength in pixels.
    pub wavelength: f32,
    /// Aspect ratio gamma; 1.0 is isotropic.
    pub aspect: f32,
    pub sigma: f32,
    pub phase: f32,
}

impl Default for GaborParams {
    fn default() -> GaborParams {
        GaborParams {
            wavelength: 5.0,
            aspect: 0.5,
            sigma: 2.8,
            phase: 0.0,
        }
    }
}

/// Zero-mean oriented kernels, orientation k spanning 180 degrees in
/// `orientations` steps, max-normalized then scaled to `scale` mV.
pub fn build_s1_kernels(
    params: &GaborParams,
    orientations: usize,
    size: usize,
    scale: f32,
) -> Vec<Vec<f32>> {
    let r = (size as f32 - 1.0) / 2.0;
    (0..orientations)
        .map(|k| {
            let theta = k as f32 * std::f32::consts::PI / orientations as f32;
            let (sin, cos) = theta.sin_cos();
            let mut kernel: Vec<f32> = (0..size * size)
                .map(|i| {
                    let x = (i % size) as f32 - r;
                    let y = (i / size) as f32 - r;
                    let xp = x * cos + y * sin;
                    let yp = -x * sin + y * cos;
                    let envelope =
                        (-(xp * xp + params.aspect * params.aspect * yp * yp)
                            / (2.0 * params.sigma * params.sigma))
                            .exp();
                    envelope
                        * (2.0 * std::f32::consts::PI * xp / params.wavelength + params.phase).cos()
                })
                .collect();
            let mean = kernel.iter().sum::<f32>() / kernel.len() as f32;
            kernel.iter_mut().for_each(|w| *w -= mean);
            let max = kernel.iter().fold(0.0f32, |m, w| m.max(w.abs()));
            kernel.iter_mut().for_each(|w| *w *= scale / max);
            kernel
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct HfirstConfig {
    /// Feed both polarities into one unsigned input channel (default);
    /// otherwise ON and OFF stay separate channels all the way up, doubling
    /// every channel count.
    pub merge_polarity: bool,
    /// Peak synaptic weight of an S1 kernel in mV.
    pub s1_scale: f32,
    /// Total l1 synaptic mass of each trained S2 kernel in mV.
    pub s2_scale: f32,
    pub orientations: usize,
    pub kernel_size: usize,
    pub gabor: GaborParams,
}

impl Default for HfirstConfig {
    fn default() -> HfirstConfig {
        HfirstConfig {
            merge_polarity: true,
            s1_scale: 25.0,
            s2_scale: 1000.0,
            orientations: 12,
            kernel_size: 7,
            gabor: GaborParams::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum HfirstError {
    #[error("no training recordings")]
    EmptyTraining,
    #[error("class {label} produced no C1 spikes; its kernel cannot be normalized")]
    SilentClass { label: String },
    #[error("recording frame {got:?} does not match the trained frame {expected:?}")]
    FrameMismatch {
        expected: (u16, u16),
        got: (u16, u16),
    },
    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },
}

/// Input stage shared by training and inference: events -> S1 -> C1.
#[derive(Clone, Debug)]
struct FrontEnd {
    width: u16,
    height: u16,
    merge_polarity: bool,
    in_channels: usize,
    kernels: Vec<Vec<f32>>,
    kernel_size: usize,
    s1: LayerSpec,
    c1: LayerSpec,
}

impl FrontEnd {
    fn new(config: &HfirstConfig, width: u16, height: u16) -> Result<FrontEnd, HfirstError> {
        if config.orientations == 0 || config.kernel_size % 2 == 0 || config.kernel_size == 0 {
            return Err(HfirstError::InvalidConfig {
                reason: "need at least one orientation and an odd kernel size".into(),
            });
        }
        if config.s1_scale <= 0.0 || config.s2_scale <= 0.0 {
            return Err(HfirstError::InvalidConfig {
                reason: "synaptic scales must be positive".into(),
            });
        }
        let in_channels = if config.merge_polarity { 1 } else { 2 };
        let (w, h) = (width as usize, height as usize);
        let s1 = LayerSpec {
            v_thresh: 150.0,
            leak_per_ms: 25.0,
            t_refr_ms: 5.0,
            width: w,
            height: h,
            channels: config.orientations * in_channels,
        };
        let c1 = LayerSpec {
            v_thresh: 1.0,
            leak_per_ms: 0.0,
            t_refr_ms: 5.0,
            width: w.div_ceil(4),
            height: h.div_ceil(4),
            channels: s1.channels,
        };
        Ok(FrontEnd {
            width,
            height,
            merge_polarity: config.merge_polarity,
            in_channels,
            kernels: build_s1_kernels(
                &config.gabor,
                config.orientations,
                config.kernel_size,
                config.s1_scale,
            ),
            kernel_size: config.kernel_size,
            s1,
            c1,
        })
    }

    fn input_spikes(&self, stream: &EventStream) -> Vec<Spike> {
        stream
            .events
            .iter()
            .map(|e| Spike {
                t: e.t,
                x: e.x as u16,
                y: e.y as u16,
                ch: if self.merge_polarity || !e.polarity.is_on() {
                    0
                } else {
                    1
                },
            })
            .collect()
    }

    fn c1_spikes(&self, stream: &EventStream) -> Result<Vec<Spike>, HfirstError> {
        if (stream.width, stream.height) != (self.width, self.height) {
            return Err(HfirstError::FrameMismatch {
                expected: (self.width, self.height),
                got: (stream.width, stream.height),
            });
        }
        let input = self.input_spikes(stream);
        let in_dims = (self.width as usize, self.height as usize, self.in_channels);
        let s1_out = run_layer(
            &self.s1,
            &Wiring::Conv {
                kernels: self.kernels.clone(),
                size: self.kernel_size,
                in_channels: self.in_channels,
            },
            in_dims,
            &input,
        );
        let s1_dims = (self.s1.width, self.s1.height, self.s1.channels);
        Ok(run_layer(&self.c1, &Wiring::Pool { window: 4 }, s1_dims, &s1_out))
    }

    fn c1_flat_len(&self) -> usize {
        self.c1.width * self.c1.height * self.c1.channels
    }
}

/// Normalize per-class C1 spike-count accumulations into S2 kernels with a
/// fixed l1 mass. A silent class is an error naming it.
fn s2_kernels_from_counts(
    classes: &[String],
    counts: &[Vec<f64>],
    s2_scale: f32,
) -> Result<Vec<Vec<f32>>, HfirstError> {
    classes
        .iter()
        .zip(counts)
        .map(|(label, grid)| {
            let l1: f64 = grid.iter().map(|c| c.abs()).sum();
            if l1 <= 0.0 {
                return Err(HfirstError::SilentClass {
                    label: label.clone(),
                });
            }
            Ok(grid
                .iter()
                .map(|&c| (c / l1) as f32 * s2_scale)
                .collect())
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct HfirstNetwork {
    front: FrontEnd,
    s2: LayerSpec,
    c2: LayerSpec,
    classes: Vec<String>,
    s2_weights: Vec<Vec<f32>>,
}

impl HfirstNetwork {
    /// Build the hierarchy and train S2 kernels by summing each class's C1
    /// responses over its training recordings.
    pub fn train(
        config: &HfirstConfig,
        training: &[(String, EventStream)],
    ) -> Result<HfirstNetwork, HfirstError> {
        let (width, height) = training
            .first()
            .map(|(_, s)| (s.width, s.height))
            .ok_or(HfirstError::EmptyTraining)?;
        let front = FrontEnd::new(config, width, height)?;
        let mut classes: Vec<String> = training.iter().map(|(l, _)| l.clone()).collect();
        classes.sort();
        classes.dedup();

        let per_recording: Vec<(usize, Vec<Spike>)> = training
            .par_iter()
            .map(|(label, stream)| {
                let class = classes.binary_search(label).expect("label known");
                Ok((class, front.c1_spikes(stream)?))
            })
            .collect::<Result<_, HfirstError>>()?;
        let mut counts = vec![vec![0.0f64; front.c1_flat_len()]; classes.len()];
        for (class, spikes) in per_recording {
            for s in spikes {
                counts[class][flat(
                    front.c1.width,
                    front.c1.height,
                    s.x as usize,
                    s.y as usize,
                    s.ch as usize,
                )] += 1.0;
            }
        }
        let s2_weights = s2_kernels_from_counts(&classes, &counts, config.s2_scale)?;

        let s2 = LayerSpec {
            v_thresh: 150.0,
            leak_per_ms: 1.0,
            t_refr_ms: 5.0,
            width: 1,
            height: 1,
            channels: classes.len(),
        };
        let c2 = LayerSpec {
            v_thresh: 1.0,
            leak_per_ms: 0.0,
            t_refr_ms: 5.0,
            width: 1,
            height: 1,
            channels: classes.len(),
        };
        Ok(HfirstNetwork {
            front,
            s2,
            c2,
            classes,
            s2_weights,
        })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    /// Trained S2 kernels paired with their class labels, for inspection.
    pub fn s2_kernels(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.classes
            .iter()
            .zip(&self.s2_weights)
            .map(|(c, w)| (c.as_str(), w.as_slice()))
    }

    /// C2 output spike count per class for one recording.
    pub fn class_spike_counts(&self, stream: &EventStream) -> Result<Vec<u32>, HfirstError> {
        let c1_out = self.front.c1_spikes(stream)?;
        let c1_dims = (self.front.c1.width, self.front.c1.height, self.front.c1.channels);
        let s2_out = run_layer(
            &self.s2,
            &Wiring::Dense {
                weights: self.s2_weights.clone(),
            },
            c1_dims,
            &c1_out,
        );
        let c2_out = run_layer(
            &self.c2,
            &Wiring::PassThrough,
            (1, 1, self.classes.len()),
            &s2_out,
        );
        let mut counts = vec![0u32; self.classes.len()];
        for s in c2_out {
            counts[s.ch as usize] += 1;
        }
        Ok(counts)
    }

    /// The class with the most output spikes; ties go to the lowest class
    /// index. `None` when no spikes were produced at all.
    pub fn classify_hard(&self, stream: &EventStream) -> Result<Option<&str>, HfirstError> {
        let counts = self.class_spike_counts(stream)?;
        Ok(hard_decision(&counts).map(|i| self.classes[i].as_str()))
    }

    /// Per-class probability = share of output spikes; all zero when the
    /// network stays silent.
    pub fn classify_soft(&self, stream: &EventStream) -> Result<Vec<f64>, HfirstError> {
        Ok(soft_decision(&self.class_spike_counts(stream)?))
    }

    /// Hard and soft balanced-accuracy reports over a labeled test set.
    /// Hard credit is 0/1 on the argmax; soft credit is the probability
    /// assigned to the true class. Silent recordings earn no credit.
    pub fn evaluate(
        &self,
        test: &[(String, EventStream)],
    ) -> Result<(EvalReport, EvalReport), HfirstError> {
        let scored: Vec<(&str, f64, f64)> = test
            .par_iter()
            .map(|(label, stream)| {
                let counts = self.class_spike_counts(stream)?;
                let hard = match hard_decision(&counts) {
                    Some(i) if self.classes[i] == *label => 1.0,
                    _ => 0.0,
                };
                let soft = match self.classes.binary_search(label) {
                    Ok(i) => soft_decision(&counts)[i],
                    Err(_) => 0.0,
                };
                Ok((label.as_str(), hard, soft))
            })
            .collect::<Result<_, HfirstError>>()?;
        let hard: Vec<(&str, f64)> = scored.iter().map(|&(l, h, _)| (l, h)).collect();
        let soft: Vec<(&str, f64)> = scored.iter().map(|&(l, _, s)| (l, s)).collect();
        Ok((EvalReport::from_scores(&hard), EvalReport::from_scores(&soft)))
    }
}

fn hard_decision(counts: &[u32]) -> Option<usize> {
    let best = *counts.iter().max()?;
    if best == 0 {
        return None;
    }
    counts.iter().position(|&c| c == best)
}

fn soft_decision(counts: &[u32]) -> Vec<f64> {
    let total: u32 = counts.iter().sum();
    if total == 0 {
        return vec![0.0; counts.len()];
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}
