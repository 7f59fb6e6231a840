//! Parses a program, pretty-prints it and shows the lowered control-flow graph.
//!
//! `cargo run --example parse_and_lower -- [PATH]`

use esm_refute::frontend::{lower_to_pcfg, parse_program, pretty_print};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "fixtures/transmission_a.ppl".into());
    let ast = parse_program(&std::fs::read_to_string(&path)?)?;
    println!("{}", pretty_print(&ast));
    let p = lower_to_pcfg(&ast);
    if let Err(errs) = p.validate() {
        for e in errs {
            eprintln!("invalid: {e}");
        }
    }
    println!("{p}");
    Ok(())
}
