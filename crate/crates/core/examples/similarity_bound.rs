//! Certifies a lower bound on the Kantorovich distance between the output
//! distributions of the transmission pair, for each supported metric.

use esm_refute::pipeline::{run, RunConfig};
use esm_refute::synth::{Metric, Mode};

const A: &str = include_str!("../fixtures/transmission_a.ppl");
const B: &str = include_str!("../fixtures/transmission_b.ppl");

fn main() {
    for metric in [Metric::L1, Metric::L2, Metric::Uniform, Metric::Discrete] {
        let mut cfg = RunConfig::new(A, B);
        cfg.mode = Mode::Similarity;
        cfg.metric = metric;
        cfg.degree_max = 2;
        let out = run(&cfg);
        let eps = out.epsilon.map_or("-".to_string(), |e| format!("{e} ~ {:.3}", e.to_f64()));
        println!("{:<9} {:?}  epsilon = {eps}", metric.name(), out.verdict);
    }
}
