//! Shows which optional-stopping condition is selected for each of the
//! bundled fixture pairs, and the ranking supermartingales found.

use esm_refute::frontend::compile;
use esm_refute::invariant::{generate_interval_invariants, DEFAULT_WIDEN_AFTER};
use esm_refute::synth::select_ost;

fn main() {
    for name in ["c1", "c4", "c3", "c2"] {
        let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/ost");
        let a = compile(&std::fs::read_to_string(format!("{dir}/{name}_a.ppl")).unwrap()).unwrap();
        let b = compile(&std::fs::read_to_string(format!("{dir}/{name}_b.ppl")).unwrap()).unwrap();
        let ia = generate_interval_invariants(&a, DEFAULT_WIDEN_AFTER);
        let ib = generate_interval_invariants(&b, DEFAULT_WIDEN_AFTER);
        let sel = select_ost(&a, &ia, &b, &ib, 1, None);
        println!("{name}: {} ({})", sel.condition.name(), sel.reason);
        if let Some((ra, _)) = &sel.rsm {
            println!("    R at {} = {}", a.labels[a.init], ra.r[a.init].display(&a.vars));
        }
    }
}
