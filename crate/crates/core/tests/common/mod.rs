#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

const DISTS: &[&str] = &[
    "bernoulli(1/3)",
    "uniform(0, 1)",
    "uniform(-1, 2)",
    "uniformint(0, 3)",
    "discrete(0: 1/2, 2: 1/4, 5: 1/4)",
    "normal(0, 1)",
    "normal(1, 1/4)",
];

struct Gen {
    rng: ChaCha8Rng,
    counters: usize,
    out: String,
}

impl Gen {
    fn var(&mut self) -> &'static str {
        ["x", "y", "z"][self.rng.random_range(0..3)]
    }

    fn small(&mut self) -> i64 {
        self.rng.random_range(-3..=3)
    }

    fn line(&mut self, indent: usize, s: &str) {
        self.out.push_str(&"    ".repeat(indent));
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn block(&mut self, indent: usize, depth: u32) {
        let n = self.rng.random_range(1..=3);
        for _ in 0..n {
            self.stmt(indent, depth);
        }
    }

    fn stmt(&mut self, indent: usize, depth: u32) {
        let pick = if depth == 0 { self.rng.random_range(0..2) } else { self.rng.random_range(0..5) };
        match pick {
            0 => {
                let (v, a, c, b) = (self.var(), self.var(), self.small(), self.small());
                let s = if self.rng.random_bool(0.2) {
                    format!("{v} := {a} * {a} + {c}")
                } else {
                    format!("{v} := {c} * {a} + {v} + {b}")
                };
                self.line(indent, &s);
            }
            1 => {
                let v = self.var();
                let d = DISTS[self.rng.random_range(0..DISTS.len())];
                self.line(indent, &format!("{v} := sample({d})"));
            }
            2 => {
                let p = ["1/2", "1/3", "0.9", "3/4"][self.rng.random_range(0..4)];
                self.line(indent, &format!("if prob({p}) {{"));
                self.block(indent + 1, depth - 1);
                if self.rng.random_bool(0.5) {
                    self.line(indent, "} else {");
                    self.block(indent + 1, depth - 1);
                }
                self.line(indent, "}");
            }
            3 => {
                let (v, c) = (self.var(), self.small());
                let op = ["<=", ">=", "<", ">"][self.rng.random_range(0..4)];
                self.line(indent, &format!("if {v} {op} {c} {{"));
                self.block(indent + 1, depth - 1);
                self.line(indent, "} else {");
                self.block(indent + 1, depth - 1);
                self.line(indent, "}");
            }
            _ => {
                self.counters += 1;
                let k = format!("k{}", self.counters);
                let m = self.rng.random_range(0..=2);
                self.line(indent, &format!("{k} := 0"));
                self.line(indent, &format!("while {k} <= {m} {{"));
                self.block(indent + 1, depth - 1);
                self.line(indent + 1, &format!("{k} := {k} + 1"));
                self.line(indent, "}");
            }
        }
    }
}

/// A random terminating program over `x`, `y`, `z` returning `x` and `y`.
pub fn random_program(seed: u64) -> String {
    let mut g = Gen { rng: ChaCha8Rng::seed_from_u64(seed), counters: 0, out: String::new() };
    let (a, b) = (g.small(), g.small());
    g.out.push_str(&format!("x := {a}\ny := {b}\nz := 0\n"));
    g.block(0, 2);
    g.out.push_str("return x, y\n");
    g.out
}
