//! Refutes output equivalence of the transmission pair and prints the
//! synthesized output function and the two bounds that separate the programs.

use esm_refute::pipeline::{run, RunConfig};

const A: &str = include_str!("../fixtures/transmission_a.ppl");
const B: &str = include_str!("../fixtures/transmission_b.ppl");

fn main() {
    let out = run(&RunConfig::new(A, B));
    println!("{}", out.summary_line());
    let Some(cert) = out.certificate else {
        for d in &out.diagnostics {
            eprintln!("{d}");
        }
        return;
    };
    let a = esm_refute::frontend::compile(A).unwrap();
    let b = esm_refute::frontend::compile(B).unwrap();
    let polys = cert.polys(&a, &b).unwrap();
    let (upper, lower) = cert.bounds(&a, &b).unwrap();
    println!("f(out) = {}", polys.f.display(&a.out_var_names()));
    println!("E_a[f] <= {upper} ~ {:.3}", upper.to_f64());
    println!("E_b[f] >= {lower} ~ {:.3}", lower.to_f64());
}
