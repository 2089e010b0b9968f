use std::collections::{BTreeMap, BTreeSet};

use crate::grammar::{index_classes, GrammarBuilder, Production, Wtgc};
use crate::trees::{Name, RankedAlphabet};

use super::TransformError;

/// A rank-preserving symbol map into a target alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relabeling {
    pub map: BTreeMap<Name, Name>,
    pub target: RankedAlphabet,
}

impl Relabeling {
    pub fn apply(&self, symbol: &Name) -> Option<&Name> {
        self.map.get(symbol)
    }

    pub fn is_injective(&self) -> bool {
        self.map.values().collect::<BTreeSet<_>>().len() == self.map.len()
    }
}

/// Image of an eq-restricted grammar under a relabeling: non-sink
/// productions are relabeled (weights of collisions add up) and the sink
/// productions are regenerated over the target alphabet.
///
/// Rejects non-injective relabelings when some non-sink production has a
/// sink child outside any equality class, since distinct source symbols
/// below that child would collapse onto one target tree and lose weight.
pub fn relabel(g: &Wtgc, pi: &Relabeling) -> Result<Wtgc, TransformError> {
    let er = g.eq_restriction().ok_or(TransformError::NotEqRestricted)?;
    for (sym, rank) in g.alphabet().iter() {
        let image = pi.apply(sym).ok_or_else(|| TransformError::Unmapped(sym.clone()))?;
        let to = pi.target.rank(image);
        if to != Some(rank) {
            return Err(TransformError::RankMismatch {
                symbol: sym.clone(),
                image: image.clone(),
                from: rank,
                to,
            });
        }
    }
    let bot = &er.sink;
    let injective = pi.is_injective();
    let mut b = GrammarBuilder::new(g.semiring(), pi.target.clone());
    for q in g.nonterminals() {
        b.nonterminal(q.clone());
    }
    for (q, w) in g.finals() {
        b.add_final(q.clone(), w.clone());
    }
    for p in g.productions() {
        if &p.target == bot {
            continue;
        }
        if !injective {
            let dec = p.decompose();
            let pairs = p.index_constraints().expect("classic");
            let free_sink = index_classes(dec.arity(), &pairs)
                .iter()
                .any(|c| c.len() == 1 && &dec.states[c[0] - 1] == bot);
            if free_sink {
                return Err(TransformError::FreeSinkChild(p.to_string()));
            }
        }
        b.add(Production {
            lhs: p.lhs.map_symbols(&|s| pi.apply(s).expect("checked").clone()),
            ..p.clone()
        });
    }
    b.add_sink(bot);
    Ok(b.build())
}
