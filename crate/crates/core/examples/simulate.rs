//! Samples a program and prints the empirical mean of each output.
//!
//! `cargo run --release --example simulate -- [PATH] [RUNS]`

use esm_refute::certificate::mc_expectation;
use esm_refute::frontend::compile;
use esm_refute::poly::Polynomial;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "fixtures/bench/simple_example_a.ppl".into());
    let runs: u64 = args.next().map_or(Ok(10_000), |s| s.parse())?;
    let p = compile(&std::fs::read_to_string(&path)?)?;
    for (j, name) in p.out_var_names().iter().enumerate() {
        let e = mc_expectation(&p, &Polynomial::var(j as u32), runs, 0, 1_000_000_000, None);
        println!("E[{name}] = {:.4} ± {:.4} ({} censored)", e.mean, e.half_width, e.censored);
    }
    Ok(())
}
