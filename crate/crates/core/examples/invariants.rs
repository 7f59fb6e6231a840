//! Generates interval invariants for a program and checks them.
//!
//! `cargo run --example invariants -- [PATH]`

use esm_refute::frontend::compile;
use esm_refute::invariant::{check_inductive, emit_invariant_file, generate_interval_invariants, DEFAULT_WIDEN_AFTER};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "fixtures/transmission_a.ppl".into());
    let p = compile(&std::fs::read_to_string(&path)?)?;
    let inv = generate_interval_invariants(&p, DEFAULT_WIDEN_AFTER);
    print!("{}", emit_invariant_file(&inv, &p));
    let report = check_inductive(&p, &inv, 200, 0);
    println!("# inductive: {}", report.ok());
    Ok(())
}
