//! Handelman certificates for small entailments: `x - x^2 >= 0` on the unit
//! interval and the product degree it needs.

use esm_refute::handelman::{handelman_products, solve_constraints, HandelmanOptions, DEFAULT_BASIS_CAP};
use esm_refute::linear::LinExpr;
use esm_refute::poly::{Monomial, Polynomial};
use esm_refute::rational::rat;
use esm_refute::synth::{ConstraintSet, Entailment};

fn main() {
    // x >= 0, 1 - x >= 0
    let premise = vec![LinExpr::var(0), LinExpr::from_terms(rat(1, 1), [(0, rat(-1, 1))])];
    let basis = handelman_products(&premise, 2, DEFAULT_BASIS_CAP).unwrap();
    println!("{} products of degree <= 2:", basis.len());
    for p in &basis.products {
        println!("  {}", p.display(&["x".into()]));
    }
    let target = Polynomial::var(0).sub(&Polynomial::term(Monomial::var_pow(0, 2), rat(1, 1)));
    for d in [1, 2] {
        let cs = ConstraintSet {
            entailments: vec![Entailment {
                nvars: 1,
                premise: premise.clone(),
                conclusion: target.to_template(),
                label: "x - x^2".into(),
            }],
            ..ConstraintSet::default()
        };
        match solve_constraints(&cs, d, &HandelmanOptions::default()).unwrap() {
            Some(s) => println!("D = {d}: certified, lambda = {:?}", s.multipliers[0]),
            None => println!("D = {d}: no certificate"),
        }
    }
}
