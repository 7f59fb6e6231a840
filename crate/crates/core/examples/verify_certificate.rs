//! Checks a certificate file against the two programs it refers to, exactly
//! and by sampling.
//!
//! `cargo run --release --example verify_certificate -- CERT.json [SAMPLES]`
//!
//! Without arguments a certificate for the transmission pair is produced first.

use esm_refute::certificate::{mc_consistency, verify_certificate, Certificate};
use esm_refute::frontend::compile;
use esm_refute::pipeline::{run, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let cert = match args.next() {
        Some(path) => Certificate::from_json(&std::fs::read_to_string(path)?)?,
        None => {
            let a = include_str!("../fixtures/transmission_a.ppl");
            let b = include_str!("../fixtures/transmission_b.ppl");
            run(&RunConfig::new(a, b)).certificate.ok_or("no certificate produced")?
        }
    };
    let samples: u64 = args.next().map_or(Ok(10_000), |s| s.parse())?;
    let a = compile(&cert.meta.program_a)?;
    let b = compile(&cert.meta.program_b)?;
    match verify_certificate(&cert, &a, &b) {
        Ok(()) => println!("exact check: ok"),
        Err(e) => println!("exact check: {e}"),
    }
    let r = mc_consistency(&cert, &a, &b, samples, cert.meta.seed, 1_000_000_000)?;
    println!("E_a[f] ~ {:.3} ± {:.3}, bound {:.3}", r.a.mean, r.a.half_width, r.upper);
    println!("E_b[f] ~ {:.3} ± {:.3}, bound {:.3}", r.b.mean, r.b.half_width, r.lower);
    println!("sampling: {:?}", r.verdict);
    Ok(())
}
