use std::collections::BTreeMap;

use crate::grammar::{GrammarBuilder, Production, ProductionId, Wtgc};
use crate::semiring::{support_hom, Weight};
use crate::trees::{Name, Tree};

use super::zero::for_each_choice;
use super::{check_compatible, map_weights, normalize, pair_name, support_automaton, TransformError};

/// Equivalent constraint-determined grammar: each state `q` is split into
/// `<q,p>`, one copy per production `p` targeting `q`, so that every
/// left-hand side with its constraints determines the target.
pub fn constraint_determine(g: &Wtgc) -> Result<Wtgc, TransformError> {
    if !g.classify().normalized {
        return Err(TransformError::NotNormalized);
    }
    let s = g.semiring();
    let mut by_target: BTreeMap<&Name, Vec<ProductionId>> = BTreeMap::new();
    for (id, p) in g.ids() {
        by_target.entry(&p.target).or_default().push(id);
    }
    let copy = |q: &Name, id: ProductionId| pair_name(q, &id);
    let mut b = GrammarBuilder::new(s, g.alphabet().clone());
    for (id, p) in g.ids() {
        let fw = g.final_weight(&p.target);
        b.nonterminal(copy(&p.target, id));
        b.add_final(copy(&p.target, id), fw);
    }
    for (id, p) in g.ids() {
        let children = p.children();
        let options: Vec<Vec<ProductionId>> = children
            .iter()
            .map(|q| by_target.get(q).cloned().unwrap_or_default())
            .collect();
        let symbol = p.symbol().expect("normalized");
        for_each_choice(&options, &mut |choice| {
            let lhs = Tree::node(
                symbol,
                children
                    .iter()
                    .zip(choice)
                    .map(|(q, &rid)| Tree::nonterminal(&copy(q, rid)))
                    .collect(),
            );
            b.add(Production {
                lhs,
                target: copy(&p.target, id),
                ..p.clone()
            });
        });
    }
    Ok(b.build())
}

/// Union with disjoint state sets; clashing names of `h` get a `_2` suffix.
pub fn disjoint_union(g: &Wtgc, h: &Wtgc) -> Result<Wtgc, TransformError> {
    check_compatible(g, h)?;
    let taken = |n: &str| g.is_nonterminal(n) || g.alphabet().contains(n);
    let rename = |q: &Name| -> Name {
        if !taken(q) {
            return q.clone();
        }
        let mut candidate = format!("{}_2", q.as_str());
        while taken(&candidate) || h.is_nonterminal(&candidate) {
            candidate.push_str("_2");
        }
        Name::from(candidate)
    };
    let renamed = super::rename_nonterminals(h, rename);
    let mut b = GrammarBuilder::new(g.semiring(), g.alphabet().clone());
    for part in [g, &renamed] {
        for q in part.nonterminals() {
            b.nonterminal(q.clone());
        }
        for (q, w) in part.finals() {
            b.add_final(q.clone(), w.clone());
        }
        for p in part.productions() {
            b.add(p.clone());
        }
    }
    Ok(b.build())
}

fn prepare(g: &Wtgc) -> Result<Wtgc, TransformError> {
    let g = if g.classify().normalized { g.clone() } else { normalize(g) };
    if g.classify().constraint_determined {
        Ok(g)
    } else {
        constraint_determine(&g)
    }
}

/// Pointwise product `(g x h)(t) = g(t) * h(t)`.
///
/// Both inputs are normalized and made constraint-determined first when
/// they are not already; states are pairs `<q,z>`.
pub fn hadamard(g: &Wtgc, h: &Wtgc) -> Result<Wtgc, TransformError> {
    check_compatible(g, h)?;
    Ok(pair_product(&prepare(g)?, &prepare(h)?))
}

/// Product of two normalized grammars. Pairs of productions that yield the
/// same product production have their weights summed, which keeps the
/// result exact without constraint-determined inputs.
fn pair_product(g: &Wtgc, h: &Wtgc) -> Wtgc {
    let s = g.semiring();
    let mut b = GrammarBuilder::new(s, g.alphabet().clone());
    for (q, w) in g.finals() {
        for (z, v) in h.finals() {
            b.add_final(pair_name(q, z), s.times(w, v));
        }
    }
    let mut by_symbol: BTreeMap<&Name, Vec<&Production>> = BTreeMap::new();
    for p in h.productions() {
        by_symbol.entry(p.symbol().expect("normalized")).or_default().push(p);
    }
    for p in g.productions() {
        let symbol = p.symbol().expect("normalized");
        let left = p.children();
        for r in by_symbol.get(symbol).into_iter().flatten() {
            let right = r.children();
            let lhs = Tree::node(
                symbol,
                left.iter()
                    .zip(&right)
                    .map(|(a, b)| Tree::nonterminal(&pair_name(a, b)))
                    .collect(),
            );
            b.add(Production {
                lhs,
                target: pair_name(&p.target, &r.target),
                eq: p.eq.union(&r.eq).cloned().collect(),
                ineq: p.ineq.union(&r.ineq).cloned().collect(),
                weight: s.times(&p.weight, &r.weight),
            });
        }
    }
    b.build()
}

/// `g` restricted to the support of `h`: `g(t)` where `h(t) != 0` and zero
/// elsewhere. The support of `h` must be computable, i.e. its semiring zero-
/// sum and zero-divisor free.
pub fn restrict_support(g: &Wtgc, h: &Wtgc) -> Result<Wtgc, TransformError> {
    if !g.alphabet().same_symbols(h.alphabet()) {
        return Err(TransformError::AlphabetMismatch);
    }
    support_hom(h.semiring())?;
    let s = g.semiring();
    let indicator = map_weights(&support_automaton(h)?, s, |w| match w {
        Weight::Bool(true) => s.one(),
        _ => s.zero(),
    });
    check_compatible(g, &indicator)?;
    Ok(pair_product(&normalize(g), &indicator))
}
