mod common;

use std::time::Duration;

use proptest::prelude::*;

use esm_refute::certificate::{verify_certificate, Certificate};
use esm_refute::frontend::compile;
use esm_refute::pipeline::{run, RunConfig, Verdict};

use common::random_program;

/// The same program with its first output shifted by `k` before returning.
fn shifted(src: &str, k: i64) -> String {
    let body = src.trim_end().strip_suffix("return x, y").expect("generated programs return x, y");
    format!("{body}x := x + {k}\nreturn x, y\n")
}

/// Certificate JSON with the wall-clock timestamp zeroed.
fn stamped_json(mut c: Certificate) -> String {
    c.meta.timestamp = 0;
    c.to_json()
}

fn config(a: &str, b: &str) -> RunConfig {
    let mut cfg = RunConfig::new(a, b);
    cfg.degree_max = 2;
    cfg.timeout = Some(Duration::from_secs(10));
    cfg
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn refutations_carry_standalone_certificates(seed in 0u64..10_000, k in 1i64..20) {
        let a = random_program(seed);
        let b = shifted(&a, k);
        let out = run(&config(&a, &b));
        prop_assert_ne!(out.verdict, Verdict::PreconditionFailed, "{:?}", out.diagnostics);
        if out.verdict == Verdict::Refuted {
            let cert = out.certificate.expect("refutation without certificate");
            let text = cert.to_json();
            let reread = Certificate::from_json(&text).unwrap();
            verify_certificate(&reread, &compile(&a).unwrap(), &compile(&b).unwrap()).unwrap();
        }
    }

    #[test]
    fn runs_are_deterministic(seed in 0u64..10_000, k in 1i64..20) {
        let a = random_program(seed);
        let b = shifted(&a, k);
        let cfg = config(&a, &b);
        let (x, y) = (run(&cfg), run(&cfg));
        if x.verdict != Verdict::Timeout && y.verdict != Verdict::Timeout {
            prop_assert_eq!(x.verdict, y.verdict);
            prop_assert_eq!(x.degree, y.degree);
            prop_assert_eq!(x.epsilon, y.epsilon);
            prop_assert_eq!(x.certificate.map(stamped_json), y.certificate.map(stamped_json));
        }
    }
}

#[test]
fn shifted_outputs_are_refuted() {
    let a = "x := 0\ny := 0\nwhile x <= 3 {\n if prob(1/2) { x := x + 1 } else { x := x + 2 }\n}\nreturn x, y\n";
    let b = shifted(a, 5);
    let out = run(&config(a, &b));
    assert_eq!(out.verdict, Verdict::Refuted, "{:?}", out.diagnostics);
}
