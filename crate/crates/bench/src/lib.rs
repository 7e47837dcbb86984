//! Fixtures shared by the benchmarks.

use srw_core::synthgen::generate_samples;
use srw_core::{SynthConfig, TrainingInstance};

/// `count` copying-model instances on `nodes` nodes with the default planted
/// weights, seeded deterministically.
pub fn synthetic_instances(nodes: usize, count: usize) -> Vec<TrainingInstance> {
    let cfg = SynthConfig {
        nodes,
        seed: 7,
        ..SynthConfig::default()
    };
    generate_samples(&cfg, count)
        .expect("synthetic generation")
        .iter()
        .map(|s| s.instance().expect("synthetic instance"))
        .collect()
}
