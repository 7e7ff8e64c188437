//! Sizes the synaptic-kernel classifier on simulated digit recordings: hidden
//! width against balanced accuracy and wall time.

use std::time::Instant;

use saccade::classify::skim::{SkimConfig, SkimNetwork};
use saccade::event::EventStream;
use saccade::schedule::SaccadeSchedule;
use saccade::sim::{simulate, SensorModel, SimParams};
use saccade::synth::digit_set;

fn recordings(per_class: usize, set_seed: u64, sim_seed: u64) -> Vec<(String, EventStream)> {
    let schedule = SaccadeSchedule::triangle();
    let sensor = SensorModel::new(34, 34);
    digit_set(per_class, set_seed)
        .into_iter()
        .enumerate()
        .map(|(i, (img, class))| {
            let params = SimParams {
                seed: sim_seed + i as u64,
                ..SimParams::default()
            };
            let s = simulate(&img, &schedule, &sensor, &params).unwrap();
            (class.to_string(), s)
        })
        .collect()
}

fn main() {
    let start = Instant::now();
    let train = recordings(100, 42, 0);
    let test = recordings(100, 99, 10_000);
    println!(
        "simulated {} train / {} test in {:.1} s",
        train.len(),
        test.len(),
        start.elapsed().as_secs_f64()
    );
    for &hidden in &[100usize, 250, 500] {
        let config = SkimConfig {
            hidden,
            seed: 7,
            ..SkimConfig::default()
        };
        let t0 = Instant::now();
        let trained = SkimNetwork::train(&config, &train).unwrap();
        let t_train = t0.elapsed().as_secs_f64();
        for w in &trained.warnings {
            println!("  warning: {w}");
        }
        let t1 = Instant::now();
        let report = trained.network.evaluate(&test).unwrap();
        println!(
            "hidden {hidden:4}: balanced {:.3}  train {:.1} s  eval {:.1} s",
            report.balanced_accuracy(),
            t_train,
            t1.elapsed().as_secs_f64()
        );
    }
}
