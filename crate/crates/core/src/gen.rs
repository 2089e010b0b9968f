//! Seeded random eq-restricted grammars for cross-checking the decision
//! procedures.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::grammar::{GrammarBuilder, Production, Wtgc};
use crate::semiring::Semiring;
use crate::trees::{Label, Name, Position, RankedAlphabet, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenConfig {
    /// Non-sink nonterminals, at least one.
    pub max_states: usize,
    pub max_productions: usize,
    /// Chance in percent that a child slot is the sink.
    pub sink_percent: u32,
    /// Chance in percent that a child slot is a nested symbol.
    pub nest_percent: u32,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_states: 3,
            max_productions: 6,
            sink_percent: 30,
            nest_percent: 20,
        }
    }
}

pub fn alphabet() -> RankedAlphabet {
    RankedAlphabet::from_pairs([("a", 0), ("b", 0), ("g", 1), ("f", 2)])
}

/// An eq-restricted positive classic grammar over `nat` with states
/// `q0 ..`, sink `bot`, and symbols `a b g f`.
pub fn random_eq_restricted(seed: u64, cfg: GenConfig) -> Wtgc {
    let mut rng = StdRng::seed_from_u64(seed);
    let sigma = alphabet();
    let symbols: Vec<(Name, usize)> = sigma.iter().map(|(s, r)| (s.clone(), r)).collect();
    let n = rng.gen_range(1..=cfg.max_states.max(1));
    let states: Vec<Name> = (0..n).map(|i| Name::from(format!("q{i}"))).collect();
    let bot = Name::from("bot");
    let s = Semiring::Natural;
    let mut b = GrammarBuilder::new(s, sigma.clone());
    b.add_sink(&bot);
    for q in &states {
        b.nonterminal(q.clone());
        if rng.gen_bool(0.5) {
            b.add_final(q.clone(), s.from_u64(rng.gen_range(1..=3)));
        }
    }
    b.add_final(states[0].clone(), s.one());
    let m = rng.gen_range(2..=cfg.max_productions.max(2));
    for _ in 0..m {
        let (sym, rank) = symbols[rng.gen_range(0..symbols.len())].clone();
        let children: Vec<Tree> = (0..rank)
            .map(|_| {
                if rng.gen_ratio(cfg.nest_percent, 100) {
                    let (inner, r) = symbols[rng.gen_range(0..symbols.len())].clone();
                    let kids = (0..r).map(|_| Tree::nonterminal(&pick(&mut rng, &states, &bot, cfg))).collect();
                    Tree::node(&inner, kids)
                } else {
                    Tree::nonterminal(&pick(&mut rng, &states, &bot, cfg))
                }
            })
            .collect();
        let lhs = Tree::node(&sym, children);
        let leaves: Vec<(Position, bool)> = lhs
            .positions()
            .into_iter()
            .filter_map(|w| match lhs.get(&w).map(Tree::label) {
                Some(Label::Nonterminal(q)) => Some((w, q == &bot)),
                _ => None,
            })
            .collect();
        let governors: Vec<&Position> = leaves.iter().filter(|(_, sink)| !sink).map(|(w, _)| w).collect();
        let target = states[rng.gen_range(0..n)].clone();
        let mut p = Production::new(lhs.clone(), target, s.from_u64(rng.gen_range(1..=3)));
        for (w, sink) in &leaves {
            if *sink && !governors.is_empty() && rng.gen_bool(0.5) {
                let g = governors[rng.gen_range(0..governors.len())];
                p = p.with_eq(g.clone(), w.clone());
            }
        }
        b.add(p);
    }
    let g = b.build();
    debug_assert!(g.eq_restriction().is_some(), "{g}");
    g
}

/// An arbitrary grammar over `semiring` with equality and inequality
/// constraints between positions of depth at most two, possibly below the
/// left-hand side. States are `q0 ..`.
pub fn random_grammar(seed: u64, semiring: Semiring, cfg: GenConfig) -> Wtgc {
    let mut rng = StdRng::seed_from_u64(seed);
    let sigma = alphabet();
    let symbols: Vec<(Name, usize)> = sigma.iter().map(|(s, r)| (s.clone(), r)).collect();
    let n = rng.gen_range(1..=cfg.max_states.max(1));
    let states: Vec<Name> = (0..n).map(|i| Name::from(format!("q{i}"))).collect();
    let weight = |rng: &mut StdRng| loop {
        let w = semiring.from_u64(rng.gen_range(0..=3));
        if !semiring.is_zero(&w) {
            return w;
        }
    };
    let mut b = GrammarBuilder::new(semiring, sigma.clone());
    for q in &states {
        b.nonterminal(q.clone());
        if rng.gen_bool(0.5) {
            let w = weight(&mut rng);
            b.add_final(q.clone(), w);
        }
    }
    let w = weight(&mut rng);
    b.add_final(states[0].clone(), w);
    let depth_two: Vec<Position> = [vec![1], vec![2], vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]
        .into_iter()
        .map(Position)
        .collect();
    let m = rng.gen_range(2..=cfg.max_productions.max(2));
    for _ in 0..m {
        let (sym, rank) = symbols[rng.gen_range(0..symbols.len())].clone();
        let children: Vec<Tree> = (0..rank)
            .map(|_| {
                let q = states[rng.gen_range(0..n)].clone();
                if rng.gen_ratio(cfg.nest_percent, 100) {
                    let (inner, r) = symbols[rng.gen_range(0..symbols.len())].clone();
                    Tree::node(&inner, (0..r).map(|_| Tree::nonterminal(&q)).collect())
                } else {
                    Tree::nonterminal(&q)
                }
            })
            .collect();
        let target = states[rng.gen_range(0..n)].clone();
        let w = weight(&mut rng);
        let mut p = Production::new(Tree::node(&sym, children), target, w);
        if rank > 0 {
            for _ in 0..rng.gen_range(0..=2) {
                let a = depth_two[rng.gen_range(0..depth_two.len())].clone();
                let c = depth_two[rng.gen_range(0..depth_two.len())].clone();
                if a == c {
                    continue;
                }
                p = if rng.gen_bool(0.5) { p.with_eq(a, c) } else { p.with_ne(a, c) };
            }
        }
        b.add(p);
    }
    b.build()
}

fn pick(rng: &mut StdRng, states: &[Name], bot: &Name, cfg: GenConfig) -> Name {
    if rng.gen_ratio(cfg.sink_percent, 100) {
        bot.clone()
    } else {
        states[rng.gen_range(0..states.len())].clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_grammars_are_eq_restricted() {
        for seed in 0..200 {
            let g = random_eq_restricted(seed, GenConfig::default());
            assert!(g.eq_restriction().is_some(), "seed {seed}: {g}");
            assert!(g.validate().is_empty(), "seed {seed}");
        }
    }

    #[test]
    fn general_grammars_validate() {
        for seed in 0..100 {
            let g = random_grammar(seed, Semiring::ZMod(4), GenConfig::default());
            assert!(g.validate().is_empty(), "seed {seed}: {g}");
        }
    }

    #[test]
    fn seeds_are_reproducible() {
        assert_eq!(
            random_eq_restricted(7, GenConfig::default()),
            random_eq_restricted(7, GenConfig::default())
        );
    }
}
