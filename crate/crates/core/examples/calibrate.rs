use std::time::Instant;

use saccade::schedule::SaccadeSchedule;
use saccade::sim::{simulate, NoiseConfig, SensorModel, SimParams};
use saccade::synth::digit_set;
use saccade::Polarity;

fn main() {
    let set = digit_set(10, 42);
    let schedule = SaccadeSchedule::triangle();
    let sensor = SensorModel::new(34, 34);
    for &threshold in &[0.4f32, 0.6, 0.8, 1.0, 1.2, 1.5] {
        let start = Instant::now();
        let mut on = 0usize;
        let mut off = 0usize;
        let mut xr_min = u32::MAX;
        let mut xr_max = 0u32;
        let mut yr_min = u32::MAX;
        let mut n = 0usize;
        for (i, (img, _)) in set.iter().enumerate() {
            let params = SimParams {
                threshold,
                noise: NoiseConfig::default(),
                seed: i as u64,
                ..SimParams::default()
            };
            let s = simulate(img, &schedule, &sensor, &params).unwrap();
            on += s.count(Polarity::On);
            off += s.count(Polarity::Off);
            let xs: Vec<u8> = s.events.iter().map(|e| e.x).collect();
            let ys: Vec<u8> = s.events.iter().map(|e| e.y).collect();
            let xr = (*xs.iter().max().unwrap() - *xs.iter().min().unwrap()) as u32 + 1;
            let yr = (*ys.iter().max().unwrap() - *ys.iter().min().unwrap()) as u32 + 1;
            xr_min = xr_min.min(xr);
            xr_max = xr_max.max(xr);
            yr_min = yr_min.min(yr);
            n += 1;
        }
        let el = start.elapsed().as_secs_f64();
        println!(
            "theta {:4.2}: mean ON {:6.0} OFF {:6.0}  xrange [{} {}] yrange_min {}  {:5.1} ms/img",
            threshold,
            on as f64 / n as f64,
            off as f64 / n as f64,
            xr_min,
            xr_max,
            yr_min,
            el / n as f64 * 1e3
        );
    }
}
