//! Grammar-to-grammar constructions. Each one preserves the weighted tree
//! language unless its documentation says otherwise.

mod normalize;
mod product;
mod relabel;
mod unamb;
mod zero;

use thiserror::Error;

use crate::grammar::{GrammarBuilder, Production, Wtgc};
use crate::semiring::{Semiring, SemiringError};
use crate::trees::{Name, Tree};

pub use normalize::{boolean_finals, normalize};
pub use product::{constraint_determine, disjoint_union, hadamard, restrict_support};
pub use relabel::{relabel, Relabeling};
pub use unamb::{complement_support, disambiguate, support_automaton, DisambiguateOptions};
pub(crate) use zero::for_each_choice;
pub use zero::{eliminate_zero_derivations, support_grammar, zero_cap, DicksonVector};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("semiring mismatch: {0} vs {1}")]
    SemiringMismatch(Semiring, Semiring),
    #[error("alphabet mismatch")]
    AlphabetMismatch,
    #[error("grammar is not a WTAc (some production is not normalized)")]
    NotNormalized,
    #[error(transparent)]
    Semiring(#[from] SemiringError),
    #[error("target semiring {0} is not finite")]
    InfiniteTarget(Semiring),
    #[error("homomorphism source {found} does not match grammar semiring {expected}")]
    HomSource { expected: Semiring, found: Semiring },
    #[error("grammar is not eq-restricted positive classic")]
    NotEqRestricted,
    #[error("symbol `{0}` has no image under the relabeling")]
    Unmapped(Name),
    #[error("relabeling maps `{symbol}` of rank {from} to `{image}` of rank {to:?}")]
    RankMismatch {
        symbol: Name,
        image: Name,
        from: usize,
        to: Option<usize>,
    },
    #[error("production `{0}` has an unconstrained sink child and the relabeling is not injective; the summed weights would be wrong")]
    FreeSinkChild(String),
    #[error("state limit of {0} exceeded")]
    TooManyStates(usize),
}

pub(crate) fn check_compatible(g: &Wtgc, h: &Wtgc) -> Result<(), TransformError> {
    if g.semiring() != h.semiring() {
        return Err(TransformError::SemiringMismatch(g.semiring(), h.semiring()));
    }
    if !g.alphabet().same_symbols(h.alphabet()) {
        return Err(TransformError::AlphabetMismatch);
    }
    Ok(())
}

/// Renames every nonterminal through `f`, which must be injective.
pub fn rename_nonterminals(g: &Wtgc, f: impl Fn(&Name) -> Name) -> Wtgc {
    let mut b = GrammarBuilder::new(g.semiring(), g.alphabet().clone());
    for q in g.nonterminals() {
        b.nonterminal(f(q));
    }
    for (q, w) in g.finals() {
        b.add_final(f(q), w.clone());
    }
    for p in g.productions() {
        b.add(Production {
            lhs: p.lhs.map_nonterminals(&mut |q| Tree::nonterminal(&f(q))),
            target: f(&p.target),
            eq: p.eq.clone(),
            ineq: p.ineq.clone(),
            weight: p.weight.clone(),
        });
    }
    b.build()
}

/// Composite state name `<a,b>`; components use their printed form so
/// distinct pairs get distinct names.
pub(crate) fn pair_name(a: &impl std::fmt::Display, b: &impl std::fmt::Display) -> Name {
    Name::from(format!("<{a},{b}>"))
}

/// Maps weights into another semiring, keeping the structure.
pub fn map_weights(g: &Wtgc, target: Semiring, f: impl Fn(&crate::Weight) -> crate::Weight) -> Wtgc {
    let mut b = GrammarBuilder::new(target, g.alphabet().clone());
    for q in g.nonterminals() {
        b.nonterminal(q.clone());
    }
    for (q, w) in g.finals() {
        b.add_final(q.clone(), f(w));
    }
    for p in g.productions() {
        b.add(Production {
            weight: f(&p.weight),
            ..p.clone()
        });
    }
    b.build()
}
