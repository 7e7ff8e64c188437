//! Change detection sensor simulation.
//!
//! The virtual sensor is a pan/tilt camera looking at a flat scene. A
//! schedule rotates the camera; each sensor pixel tracks the log luminance it
//! sees and emits an event whenever that signal moves a full contrast step
//! away from the pixel's reference level, exactly like an integrate and fire
//! change detector. Event timestamps are interpolated linearly inside the
//! integration step.
//!
//! Scene luminance between grid points is reconstructed by bilinear
//! interpolation of the log luminance field, the domain the detector actually
//! senses. One consequence worth knowing: inverting the contrast of a two
//! level scene swaps ON and OFF events exactly.

use rand::distributions::Distribution;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Normal, Poisson};
use thiserror::Error;

use crate::event::{Event, EventStream, Polarity, MAX_TIMESTAMP};
use crate::raster::IntensityImage;
use crate::schedule::SaccadeSchedule;

/// Default contrast step in log luminance units.
pub const DEFAULT_THRESHOLD: f32 = 1.0;

/// Default integration step.
pub const DEFAULT_STEP_US: u32 = 100;

/// Default additive offset before the log, the sensor's dark floor.
pub const DEFAULT_LOG_EPSILON: f32 = 0.01;

/// Default spontaneous event rate per pixel.
pub const DEFAULT_BACKGROUND_RATE_HZ: f64 = 2.0;

/// Default per pixel threshold mismatch (relative standard deviation).
pub const DEFAULT_THRESHOLD_SIGMA: f64 = 0.03;

/// Default event latency jitter (standard deviation, microseconds).
pub const DEFAULT_LATENCY_JITTER_US: f64 = 300.0;

/// Geometry of the simulated sensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensorModel {
    pub width: u16,
    pub height: u16,
    /// Angular resolution: how many pixels one degree of rotation sweeps.
    pub pixels_per_degree: f64,
    /// Optical axis position in pixel coordinates.
    pub principal_point: (f64, f64),
    /// Dark floor added to intensity before taking the log.
    pub log_epsilon: f32,
}

impl SensorModel {
    pub fn new(width: u16, height: u16) -> SensorModel {
        SensorModel {
            width,
            height,
            pixels_per_degree: 6.0,
            principal_point: ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0),
            log_epsilon: DEFAULT_LOG_EPSILON,
        }
    }

    pub fn pixels_per_radian(&self) -> f64 {
        self.pixels_per_degree * 180.0 / std::f64::consts::PI
    }

    fn validate(&self) -> Result<(), SimError> {
        let bad = |reason| Err(SimError::InvalidSensor { reason });
        if self.width == 0 || self.height == 0 {
            return bad("frame is empty");
        }
        if self.width > 256 || self.height > 256 {
            return bad("frame exceeds the 8 bit address range");
        }
        if !(self.pixels_per_degree > 0.0) {
            return bad("pixels_per_degree must be positive");
        }
        if !(self.log_epsilon > 0.0) {
            return bad("log_epsilon must be positive");
        }
        Ok(())
    }
}

/// Instantaneous sensor motion: rotation rates in rad/s, plus an optional
/// translation (units of scene depth per second) against a scene at `depth`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensorMotion {
    pub omega: (f64, f64, f64),
    pub translation: (f64, f64, f64),
    pub depth: f64,
}

impl SensorMotion {
    pub fn rotation(omega_x: f64, omega_y: f64) -> SensorMotion {
        SensorMotion {
            omega: (omega_x, omega_y, 0.0),
            translation: (0.0, 0.0, 0.0),
            depth: 1.0,
        }
    }
}

/// Apparent image motion at one pixel, in pixels per second.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowSample {
    pub v_x: f64,
    pub v_y: f64,
}

/// Stochastic parts of the sensor response.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseConfig {
    /// Spontaneous events per pixel per second, uniform in time and space.
    pub background_rate_hz: f64,
    /// Relative per pixel spread of the contrast threshold.
    pub threshold_sigma: f64,
    /// Standard deviation of timestamp jitter in microseconds.
    pub latency_jitter_us: f64,
}

impl NoiseConfig {
    pub fn off() -> NoiseConfig {
        NoiseConfig {
            background_rate_hz: 0.0,
            threshold_sigma: 0.0,
            latency_jitter_us: 0.0,
        }
    }
}

impl Default for NoiseConfig {
    fn default() -> NoiseConfig {
        NoiseConfig {
            background_rate_hz: DEFAULT_BACKGROUND_RATE_HZ,
            threshold_sigma: DEFAULT_THRESHOLD_SIGMA,
            latency_jitter_us: DEFAULT_LATENCY_JITTER_US,
        }
    }
}

/// Everything `simulate` needs besides the scene and the schedule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimParams {
    /// Contrast step in log luminance units.
    pub threshold: f32,
    /// Integration step in microseconds.
    pub step_us: u32,
    /// Scene luminance outside the placed content.
    pub backdrop: f32,
    pub noise: NoiseConfig,
    pub seed: u64,
}

impl Default for SimParams {
    fn default() -> SimParams {
        SimParams {
            threshold: DEFAULT_THRESHOLD,
            step_us: DEFAULT_STEP_US,
            backdrop: 0.0,
            noise: NoiseConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("content {content:?} exceeds the {frame:?} sensor frame")]
    ContentExceedsFrame {
        content: (usize, usize),
        frame: (u16, u16),
    },
    #[error("invalid sensor: {reason}")]
    InvalidSensor { reason: &'static str },
    #[error("invalid simulation parameters: {reason}")]
    InvalidParams { reason: &'static str },
    #[error("schedule runs {total_us} us, beyond the encodable timestamp range")]
    DurationOverflow { total_us: u32 },
}

/// Apparent velocity of the scene at pixel `(x, y)` for the given motion.
///
/// Positions are normalized by the focal length before applying the rigid
/// motion field, so rotation rates enter in radians per second.
pub fn image_velocity(motion: &SensorMotion, sensor: &SensorModel, x: f64, y: f64) -> FlowSample {
    let f = sensor.pixels_per_radian();
    let u = (x - sensor.principal_point.0) / f;
    let v = (y - sensor.principal_point.1) / f;
    let (wx, wy, wz) = motion.omega;
    let (tx, ty, tz) = motion.translation;
    let z = motion.depth;
    let v_u = (tz * u - tx) / z - wy + wz * v + wx * u * v - wy * u * u;
    let v_v = (tz * v - ty) / z + wx - wz * u - wy * u * v + wx * v * v;
    FlowSample {
        v_x: v_u * f,
        v_y: v_v * f,
    }
}

/// Predicted rate of intensity change at a pixel under brightness constancy:
/// `I_t = -(I_x v_x + I_y v_y)`.
pub fn brightness_derivative(
    image: &IntensityImage,
    flow: FlowSample,
    x: usize,
    y: usize,
) -> f64 {
    -(image.gradient_x(x, y) as f64 * flow.v_x + image.gradient_y(x, y) as f64 * flow.v_y)
}

/// Camera to world rotation for a pan/tilt pose.
fn pose_rotation(pan_deg: f64, tilt_deg: f64) -> [[f64; 3]; 3] {
    let a = pan_deg.to_radians();
    let b = tilt_deg.to_radians();
    let (sa, ca) = a.sin_cos();
    let (sb, cb) = b.sin_cos();
    // R_y(pan) * R_x(tilt); positive pan looks right, positive tilt looks up
    // (y axis points down the image).
    [
        [ca, sa * sb, sa * cb],
        [0.0, cb, -sb],
        [-sa, ca * sb, ca * cb],
    ]
}

/// Where each sensor pixel lands on the scene canvas at the given pose.
fn scene_positions(
    out: &mut Vec<(f32, f32)>,
    pan_deg: f64,
    tilt_deg: f64,
    sensor: &SensorModel,
    canvas_center: (f64, f64),
) {
    out.clear();
    let r = pose_rotation(pan_deg, tilt_deg);
    let f = sensor.pixels_per_radian();
    let (cx, cy) = sensor.principal_point;
    let (kx, ky) = canvas_center;
    for row in 0..sensor.height as usize {
        let v = (row as f64 - cy) / f;
        // the y direction does not depend on u, hoist it
        let dy = r[1][1] * v + r[1][2];
        for col in 0..sensor.width as usize {
            let u = (col as f64 - cx) / f;
            let dx = r[0][0] * u + r[0][1] * v + r[0][2];
            let dz = r[2][0] * u + r[2][1] * v + r[2][2];
            let sx = dx / dz * f + kx;
            let sy = dy / dz * f + ky;
            out.push((sx as f32, sy as f32));
        }
    }
}

/// Render the sensor's view of the scene canvas at one pose.
///
/// The canvas is aligned so its center sits on the optical axis of the zero
/// pose. Returns the view and a per pixel mask of which positions actually
/// hit the canvas; missed pixels read as zero.
pub fn warp_image(
    canvas: &IntensityImage,
    pan_deg: f64,
    tilt_deg: f64,
    sensor: &SensorModel,
) -> Result<(IntensityImage, Vec<bool>), SimError> {
    sensor.validate()?;
    let mut positions = Vec::new();
    let center = (
        (canvas.width as f64 - 1.0) / 2.0,
        (canvas.height as f64 - 1.0) / 2.0,
    );
    scene_positions(&mut positions, pan_deg, tilt_deg, sensor, center);
    let mut view = IntensityImage::new(sensor.width as usize, sensor.height as usize);
    let mut mask = vec![false; positions.len()];
    for (i, &(sx, sy)) in positions.iter().enumerate() {
        if let Some(value) = canvas.sample_bilinear(sx, sy) {
            view.data[i] = value;
            mask[i] = true;
        }
    }
    Ok((view, mask))
}

/// Simulate a recording of a scene canvas that is taken as the whole world:
/// sensor pixels looking past its edge see nothing and stay silent.
pub fn simulate_canvas(
    canvas: &IntensityImage,
    schedule: &SaccadeSchedule,
    sensor: &SensorModel,
    params: &SimParams,
) -> Result<EventStream, SimError> {
    sensor.validate()?;
    let log_canvas = IntensityImage {
        width: canvas.width,
        height: canvas.height,
        data: canvas
            .data
            .iter()
            .map(|&v| (v + sensor.log_epsilon).ln())
            .collect(),
    };
    simulate_log_canvas(&log_canvas, schedule, sensor, params)
}

/// Detector core operating directly on the log luminance field.
fn simulate_log_canvas(
    log_canvas: &IntensityImage,
    schedule: &SaccadeSchedule,
    sensor: &SensorModel,
    params: &SimParams,
) -> Result<EventStream, SimError> {
    if !(params.threshold > 0.0) {
        return Err(SimError::InvalidParams {
            reason: "threshold must be positive",
        });
    }
    if params.step_us == 0 {
        return Err(SimError::InvalidParams {
            reason: "step_us must be positive",
        });
    }
    let total = schedule.total_us();
    if total > MAX_TIMESTAMP {
        return Err(SimError::DurationOverflow { total_us: total });
    }

    let width = sensor.width as usize;
    let height = sensor.height as usize;
    let npx = width * height;
    let mut rng = ChaCha12Rng::seed_from_u64(params.seed);

    let thresholds: Vec<f32> = if params.noise.threshold_sigma > 0.0 {
        let normal = Normal::new(1.0, params.noise.threshold_sigma).unwrap();
        (0..npx)
            .map(|_| params.threshold * (normal.sample(&mut rng) as f32).max(0.1))
            .collect()
    } else {
        vec![params.threshold; npx]
    };

    let canvas_center = (
        (log_canvas.width as f64 - 1.0) / 2.0,
        (log_canvas.height as f64 - 1.0) / 2.0,
    );

    let mut positions = Vec::with_capacity(npx);
    let mut reference = vec![0.0f32; npx];
    let mut last = vec![0.0f32; npx];
    let mut live = vec![false; npx];

    let pose0 = schedule.pose_at(0);
    scene_positions(&mut positions, pose0.pan_deg, pose0.tilt_deg, sensor, canvas_center);
    for (i, &(sx, sy)) in positions.iter().enumerate() {
        if let Some(l) = log_canvas.sample_bilinear(sx, sy) {
            reference[i] = l;
            last[i] = l;
            live[i] = true;
        }
    }

    // (time us, x, y, polarity) with time kept fractional until jitter
    let mut raw: Vec<(f64, u8, u8, Polarity)> = Vec::new();
    let mut prev_pose = (pose0.pan_deg, pose0.tilt_deg);
    let mut t_prev = 0u32;
    while t_prev < total {
        let t = (t_prev + params.step_us).min(total);
        let pose = schedule.pose_at(t);
        let here = (pose.pan_deg, pose.tilt_deg);
        if here == prev_pose {
            // resting gaze, nothing can change
            t_prev = t;
            continue;
        }
        prev_pose = here;
        scene_positions(&mut positions, pose.pan_deg, pose.tilt_deg, sensor, canvas_center);
        let t_prev_f = t_prev as f64;
        let dt = (t - t_prev) as f64;
        for (i, &(sx, sy)) in positions.iter().enumerate() {
            let l = match log_canvas.sample_bilinear(sx, sy) {
                Some(l) => l,
                None => {
                    live[i] = false;
                    continue;
                }
            };
            if !live[i] {
                // re-entry: start tracking afresh, no event for the jump
                live[i] = true;
                reference[i] = l;
                last[i] = l;
                continue;
            }
            let threshold = thresholds[i];
            let prev_l = last[i];
            let mut level = reference[i];
            if l - level >= threshold || level - l >= threshold {
                let x = (i % width) as u8;
                let y = (i / width) as u8;
                let span = l - prev_l;
                if l > level {
                    while l - level >= threshold {
                        level += threshold;
                        let frac = f64::from((level - prev_l) / span);
                        raw.push((t_prev_f + frac * dt, x, y, Polarity::On));
                    }
                } else {
                    while level - l >= threshold {
                        level -= threshold;
                        let frac = f64::from((level - prev_l) / span);
                        raw.push((t_prev_f + frac * dt, x, y, Polarity::Off));
                    }
                }
                reference[i] = level;
            }
            last[i] = l;
        }
        t_prev = t;
    }

    if params.noise.latency_jitter_us > 0.0 {
        let normal = Normal::new(0.0, params.noise.latency_jitter_us).unwrap();
        for entry in &mut raw {
            entry.0 += normal.sample(&mut rng);
        }
    }
    if params.noise.background_rate_hz > 0.0 {
        let lambda = params.noise.background_rate_hz * npx as f64 * total as f64 * 1e-6;
        let count = Poisson::new(lambda).unwrap().sample(&mut rng) as u64;
        for _ in 0..count {
            raw.push((
                rng.gen_range(0.0..total as f64),
                rng.gen_range(0..width) as u8,
                rng.gen_range(0..height) as u8,
                if rng.gen::<bool>() { Polarity::On } else { Polarity::Off },
            ));
        }
    }

    let mut events: Vec<Event> = raw
        .into_iter()
        .map(|(t, x, y, polarity)| Event {
            x,
            y,
            polarity,
            t: (t.round().max(0.0) as u32).min(total),
        })
        .collect();
    events.sort_by_key(|e| (e.t, e.y, e.x, e.polarity));
    Ok(EventStream {
        width: sensor.width,
        height: sensor.height,
        duration_us: total,
        events,
    })
}

/// Simulate a recording of a piece of content centered in the sensor frame.
///
/// The content is placed on a backdrop canvas padded far enough that the
/// schedule never sweeps the frame off the scene. Content larger than the
/// frame is rejected.
pub fn simulate(
    content: &IntensityImage,
    schedule: &SaccadeSchedule,
    sensor: &SensorModel,
    params: &SimParams,
) -> Result<EventStream, SimError> {
    sensor.validate()?;
    if content.width > sensor.width as usize || content.height > sensor.height as usize {
        return Err(SimError::ContentExceedsFrame {
            content: (content.width, content.height),
            frame: (sensor.width, sensor.height),
        });
    }
    let canvas = scene_canvas(content, schedule, sensor, params.backdrop);
    simulate_canvas(&canvas, schedule, sensor, params)
}

/// Pad content onto a backdrop large enough to stay under the whole sweep.
pub fn scene_canvas(
    content: &IntensityImage,
    schedule: &SaccadeSchedule,
    sensor: &SensorModel,
    backdrop: f32,
) -> IntensityImage {
    let (pan_deg, tilt_deg) = schedule.max_excursion_deg();
    let margin_x = (pan_deg * sensor.pixels_per_degree).ceil() as usize + 2;
    let margin_y = (tilt_deg * sensor.pixels_per_degree).ceil() as usize + 2;
    let width = sensor.width as usize + 2 * margin_x;
    let height = sensor.height as usize + 2 * margin_y;
    let mut canvas = IntensityImage::uniform(width, height, backdrop);
    let off_x = (width - content.width) / 2;
    let off_y = (height - content.height) / 2;
    for y in 0..content.height {
        let src = y * content.width;
        let dst = (y + off_y) * width + off_x;
        canvas.data[dst..dst + content.width]
            .copy_from_slice(&content.data[src..src + content.width]);
    }
    canvas
}
