//! Pan/tilt fixation schedules driving the simulated sensor.
//!
//! A schedule is a contiguous chain of segments. Each segment sweeps the gaze
//! linearly from one pose to another over its motion interval and then holds
//! the end pose for a dwell interval. Poses are (pan, tilt) in degrees: pan
//! positive rightward, tilt positive upward.

use thiserror::Error;

/// One linear sweep plus the hold that follows it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub from_deg: (f64, f64),
    pub to_deg: (f64, f64),
    pub motion_us: u32,
    pub dwell_us: u32,
}

/// Gaze state at a queried time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoseSample {
    pub pan_deg: f64,
    pub tilt_deg: f64,
    /// Rotation rate about the horizontal axis in rad/s (positive tilts up).
    pub omega_x: f64,
    /// Rotation rate about the vertical axis in rad/s (positive pans right).
    pub omega_y: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SaccadeSchedule {
    segments: Vec<Segment>,
    onsets_us: Vec<u32>,
    total_us: u32,
}

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("schedule has no segments")]
    Empty,
    #[error("segment {index} has zero motion time")]
    ZeroMotion { index: usize },
    #[error("segment {index} starts at {got:?} but the previous segment ended at {expected:?}")]
    Discontinuous {
        index: usize,
        expected: (f64, f64),
        got: (f64, f64),
    },
}

impl SaccadeSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<SaccadeSchedule, ScheduleError> {
        if segments.is_empty() {
            return Err(ScheduleError::Empty);
        }
        let mut onsets_us = Vec::with_capacity(segments.len());
        let mut t = 0u32;
        for (index, seg) in segments.iter().enumerate() {
            if seg.motion_us == 0 {
                return Err(ScheduleError::ZeroMotion { index });
            }
            if index > 0 {
                let prev = segments[index - 1].to_deg;
                if prev != seg.from_deg {
                    return Err(ScheduleError::Discontinuous {
                        index,
                        expected: prev,
                        got: seg.from_deg,
                    });
                }
            }
            onsets_us.push(t);
            t += seg.motion_us + seg.dwell_us;
        }
        Ok(SaccadeSchedule {
            segments,
            onsets_us,
            total_us: t,
        })
    }

    /// Three saccades tracing a closed triangle over 300 ms: two slanted
    /// sweeps and a horizontal return, each 50 ms of motion and 50 ms of rest.
    pub fn triangle() -> SaccadeSchedule {
        let seg = |from_deg, to_deg| Segment {
            from_deg,
            to_deg,
            motion_us: 50_000,
            dwell_us: 50_000,
        };
        SaccadeSchedule::new(vec![
            seg((-0.5, 0.5), (0.0, -0.5)),
            seg((0.0, -0.5), (0.5, 0.5)),
            seg((0.5, 0.5), (-0.5, 0.5)),
        ])
        .unwrap()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_us(&self) -> u32 {
        self.total_us
    }

    /// End pose equals start pose.
    pub fn is_closed(&self) -> bool {
        self.segments[0].from_deg == self.segments[self.segments.len() - 1].to_deg
    }

    /// Largest absolute pan and tilt reached at any segment endpoint.
    pub fn max_excursion_deg(&self) -> (f64, f64) {
        let mut pan: f64 = 0.0;
        let mut tilt: f64 = 0.0;
        for seg in &self.segments {
            for pose in [seg.from_deg, seg.to_deg] {
                pan = pan.max(pose.0.abs());
                tilt = tilt.max(pose.1.abs());
            }
        }
        (pan, tilt)
    }

    /// Pose and angular rates at `t_us`. Times past the end hold the final
    /// pose at rest.
    pub fn pose_at(&self, t_us: u32) -> PoseSample {
        let index = match self.onsets_us.binary_search(&t_us) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let seg = &self.segments[index];
        let local = t_us - self.onsets_us[index];
        if local >= seg.motion_us {
            return PoseSample {
                pan_deg: seg.to_deg.0,
                tilt_deg: seg.to_deg.1,
                omega_x: 0.0,
                omega_y: 0.0,
            };
        }
        let frac = local as f64 / seg.motion_us as f64;
        let motion_s = seg.motion_us as f64 * 1e-6;
        let rad = std::f64::consts::PI / 180.0;
        PoseSample {
            pan_deg: seg.from_deg.0 + (seg.to_deg.0 - seg.from_deg.0) * frac,
            tilt_deg: seg.from_deg.1 + (seg.to_deg.1 - seg.from_deg.1) * frac,
            omega_x: (seg.to_deg.1 - seg.from_deg.1) / motion_s * rad,
            omega_y: (seg.to_deg.0 - seg.from_deg.0) / motion_s * rad,
        }
    }
}

/// Free function form of [`SaccadeSchedule::pose_at`].
pub fn saccade_pose(schedule: &SaccadeSchedule, t_us: u32) -> PoseSample {
    schedule.pose_at(t_us)
}
