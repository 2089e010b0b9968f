use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::grammar::{fresh_name, GrammarBuilder, Production, ProductionKey, Wtgc};
use crate::trees::{Label, Name, Tree};

/// Equivalent grammar whose productions all have the shape
/// `sigma(q1, ..., qk) -> q`.
///
/// Every non-nonterminal child `l` of a left-hand side is replaced by a
/// fresh nonterminal named after `l`, produced only by `l -> [l]` with
/// weight one. Constraints stay on the shortened production, so the result
/// may be non-classic.
pub fn normalize(g: &Wtgc) -> Wtgc {
    let s = g.semiring();
    let taken = |n: &str| g.is_nonterminal(n) || g.alphabet().contains(n);
    let mut fresh: BTreeMap<Tree, Name> = BTreeMap::new();
    let mut added: BTreeSet<ProductionKey> = BTreeSet::new();
    let mut b = GrammarBuilder::new(s, g.alphabet().clone());
    for q in g.nonterminals() {
        b.nonterminal(q.clone());
    }
    for (q, w) in g.finals() {
        b.add_final(q.clone(), w.clone());
    }
    let mut queue: VecDeque<Production> = g.productions().iter().cloned().collect();
    while let Some(p) = queue.pop_front() {
        if p.is_normalized() || p.symbol().is_none() {
            b.add(p);
            continue;
        }
        let children = p
            .lhs
            .children()
            .iter()
            .map(|child| match child.label() {
                Label::Nonterminal(_) => child.clone(),
                _ => {
                    let name = fresh
                        .entry(child.clone())
                        .or_insert_with(|| {
                            let name = fresh_name(&child.to_string(), &taken);
                            let intro = Production::new(child.clone(), name.clone(), s.one());
                            if added.insert(intro.key()) {
                                queue.push_back(intro);
                            }
                            name
                        })
                        .clone();
                    Tree::nonterminal(&name)
                }
            })
            .collect();
        b.add(Production {
            lhs: Tree::new(p.lhs.label().clone(), children),
            ..p
        });
    }
    b.build()
}

/// Equivalent grammar with final weights in `{0, 1}`: every final state `q`
/// gets a copy `q_fin` whose incoming productions carry the factor `F(q)`.
pub fn boolean_finals(g: &Wtgc) -> Wtgc {
    let s = g.semiring();
    let taken = |n: &str| g.is_nonterminal(n) || g.alphabet().contains(n);
    let mut b = GrammarBuilder::new(s, g.alphabet().clone());
    for q in g.nonterminals() {
        b.nonterminal(q.clone());
    }
    let mut copies: BTreeMap<Name, (Name, crate::Weight)> = BTreeMap::new();
    let mut used: BTreeSet<Name> = BTreeSet::new();
    for (q, w) in g.finals() {
        let mut copy = fresh_name(&format!("{}_fin", q.as_str()), &taken);
        while used.contains(&copy) {
            copy = Name::from(format!("{}'", copy.as_str()));
        }
        used.insert(copy.clone());
        b.add_final(copy.clone(), s.one());
        copies.insert(q.clone(), (copy, w.clone()));
    }
    for p in g.productions() {
        if let Some((copy, fw)) = copies.get(&p.target) {
            b.add(Production {
                target: copy.clone(),
                weight: s.times(&p.weight, fw),
                ..p.clone()
            });
        }
        b.add(p.clone());
    }
    b.build()
}
