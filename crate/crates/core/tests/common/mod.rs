#![allow(dead_code)]

use proptest::prelude::*;
use wtgc::gen::{random_eq_restricted, random_grammar, GenConfig};
use wtgc::{fixtures, Semiring, Wtgc};

pub const SEMIRINGS: [Semiring; 6] = [
    Semiring::Boolean,
    Semiring::Natural,
    Semiring::Tropical,
    Semiring::Arctic,
    Semiring::ZMod(4),
    Semiring::ZMod(5),
];

pub fn fixture(name: &str) -> Wtgc {
    fixtures::grammar(name).expect("known fixture")
}

pub fn all_fixtures() -> Vec<(&'static str, Wtgc)> {
    fixtures::GRAMMARS.iter().map(|(n, _)| (*n, fixture(n))).collect()
}

pub fn arb_semiring() -> impl Strategy<Value = Semiring> {
    prop::sample::select(SEMIRINGS.to_vec())
}

/// Random general grammars over every shipped semiring.
pub fn arb_grammar() -> impl Strategy<Value = Wtgc> {
    (any::<u64>(), arb_semiring()).prop_map(|(seed, s)| random_grammar(seed, s, GenConfig::default()))
}

pub fn arb_eq_restricted() -> impl Strategy<Value = Wtgc> {
    any::<u64>().prop_map(|seed| random_eq_restricted(seed, GenConfig::default()))
}

/// Same grammar with its productions handed over in reverse order.
pub fn reversed(g: &Wtgc) -> Wtgc {
    let mut prods = g.productions().to_vec();
    prods.reverse();
    Wtgc::from_parts(
        g.semiring(),
        g.alphabet().clone(),
        g.nonterminals().iter().cloned(),
        g.finals().map(|(q, w)| (q.clone(), w.clone())),
        prods,
    )
}
