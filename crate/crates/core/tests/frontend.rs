mod common;

use esm_refute::frontend::interp::AstInterpreter;
use esm_refute::frontend::{compile, lower_to_pcfg, parse_program, pretty_print};
use esm_refute::pcfg::{run_to_termination, CompiledPcfg};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn generated_programs_compile_and_validate() {
    for seed in 0..200 {
        let src = common::random_program(seed);
        let p = compile(&src).unwrap_or_else(|e| panic!("{e}\n{src}"));
        assert!(p.validate().is_ok(), "{src}");
    }
}

#[test]
fn fixtures_compile() {
    let dir = common::fixture_path("");
    for sub in ["", "bench", "ost"] {
        for entry in std::fs::read_dir(dir.join(sub)).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|e| e == "ppl") {
                let p = compile(&std::fs::read_to_string(&path).unwrap()).unwrap();
                assert!(p.validate().is_ok(), "{}", path.display());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pretty_printing_round_trips(seed in any::<u64>()) {
        let ast = parse_program(&common::random_program(seed)).unwrap();
        let again = parse_program(&pretty_print(&ast)).unwrap();
        prop_assert_eq!(&ast, &again);
        prop_assert_eq!(pretty_print(&ast), pretty_print(&again));
    }

    #[test]
    fn interpreter_and_control_flow_graph_agree(seed in any::<u64>(), run_seed in any::<u64>()) {
        let ast = parse_program(&common::random_program(seed)).unwrap();
        let interp = AstInterpreter::new(&ast);
        let cp = CompiledPcfg::new(&lower_to_pcfg(&ast));
        for k in 0..8 {
            let a = interp.run(&mut ChaCha8Rng::seed_from_u64(run_seed ^ k), 100_000).unwrap();
            let b = run_to_termination(&cp, &mut ChaCha8Rng::seed_from_u64(run_seed ^ k), 100_000).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
