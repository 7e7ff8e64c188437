//! Grid-sweeps the S1/S2 synaptic scales on simulated digit recordings and
//! then re-checks the frozen defaults on an independent split. Low scales win
//! because they keep S1 sparse: a neuron has to see several coincident
//! same-orientation inputs before the leak erases them.

use std::time::Instant;

use saccade::classify::hfirst::{HfirstConfig, HfirstNetwork};
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

fn run(config: &HfirstConfig, train: &[(String, EventStream)], test: &[(String, EventStream)]) {
    let start = Instant::now();
    let net = HfirstNetwork::train(config, train).unwrap();
    let (hard, soft) = net.evaluate(test).unwrap();
    println!(
        "s1 {:5.0} s2 {:6.0}: hard {:.3} soft {:.3}  ({:.1} s)",
        config.s1_scale,
        config.s2_scale,
        hard.balanced_accuracy(),
        soft.balanced_accuracy(),
        start.elapsed().as_secs_f64()
    );
}

fn main() {
    let train = recordings(20, 42, 0);
    let test = recordings(20, 99, 10_000);
    println!("sweep on {} train / {} test", train.len(), test.len());
    for &s1_scale in &[20.0f32, 25.0, 30.0] {
        for &s2_scale in &[500.0f32, 1_000.0, 2_000.0] {
            let config = HfirstConfig {
                s1_scale,
                s2_scale,
                ..HfirstConfig::default()
            };
            run(&config, &train, &test);
        }
    }

    let train = recordings(50, 7, 50_000);
    let test = recordings(50, 8, 90_000);
    println!("defaults on {} train / {} test", train.len(), test.len());
    run(&HfirstConfig::default(), &train, &test);
}
