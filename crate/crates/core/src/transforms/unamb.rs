use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::grammar::{GrammarBuilder, Production, Wtgc};
use crate::semiring::{support_hom, SemiringHom, Weight};
use crate::trees::{ConstraintSet, Name, Position, RankedAlphabet, Tree};

use super::{boolean_finals, eliminate_zero_derivations, normalize, TransformError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DisambiguateOptions {
    /// Drop splits with no witness tree of at most this size.
    pub prune_unsat: Option<usize>,
    pub max_states: usize,
}

impl Default for DisambiguateOptions {
    fn default() -> Self {
        DisambiguateOptions {
            prune_unsat: None,
            max_states: 1_000_000,
        }
    }
}

type Vector = Vec<Weight>;

struct SymbolRules<'g> {
    rank: usize,
    /// All constraint pairs used by some production with this root.
    pairs: Vec<(Position, Position)>,
    productions: Vec<(&'g Production, Vec<usize>)>,
}

/// Unambiguous grammar over the (finite) target of `hom` with weights in
/// `{0,1}` such that its value on `t` is `hom(g(t))`.
///
/// States are vectors `Q -> target`; for every split of the constraint pairs
/// of a symbol into those that hold and those that fail there is exactly one
/// production per tuple of child vectors. Only reachable vectors are built.
pub fn disambiguate(g: &Wtgc, hom: &SemiringHom, opts: DisambiguateOptions) -> Result<Wtgc, TransformError> {
    if !g.classify().normalized {
        return Err(TransformError::NotNormalized);
    }
    if hom.source() != g.semiring() {
        return Err(TransformError::HomSource {
            expected: g.semiring(),
            found: hom.source(),
        });
    }
    let target = hom.target();
    if !target.flags().finite {
        return Err(TransformError::InfiniteTarget(target));
    }
    let states: Vec<&Name> = g.nonterminals().iter().collect();
    let index: HashMap<&Name, usize> = states.iter().enumerate().map(|(i, q)| (*q, i)).collect();

    let mut rules: Vec<(Name, SymbolRules)> = g
        .alphabet()
        .iter()
        .map(|(sym, rank)| {
            (
                sym.clone(),
                SymbolRules {
                    rank,
                    pairs: Vec::new(),
                    productions: Vec::new(),
                },
            )
        })
        .collect();
    for p in g.productions() {
        let sym = p.symbol().expect("normalized");
        let entry = &mut rules.iter_mut().find(|(s, _)| s == sym).expect("known symbol").1;
        for c in p.eq.iter().chain(&p.ineq) {
            if !entry.pairs.contains(c) {
                entry.pairs.push(c.clone());
            }
        }
        let children = p.children().iter().map(|q| index[q]).collect();
        entry.productions.push((p, children));
    }
    for (_, r) in &mut rules {
        r.pairs.sort();
    }

    let splits: Vec<Vec<(ConstraintSet, ConstraintSet)>> = rules
        .iter()
        .map(|(sym, r)| {
            let n = r.pairs.len();
            (0..1u64 << n)
                .map(|mask| {
                    let (mut eq, mut ne) = (ConstraintSet::new(), ConstraintSet::new());
                    for (i, c) in r.pairs.iter().enumerate() {
                        if mask >> i & 1 == 1 {
                            eq.insert(c.clone());
                        } else {
                            ne.insert(c.clone());
                        }
                    }
                    (eq, ne)
                })
                .filter(|(eq, ne)| match opts.prune_unsat {
                    Some(bound) => has_witness(g.alphabet(), sym, r.rank, eq, ne, bound),
                    None => true,
                })
                .collect()
        })
        .collect();

    let hw: HashMap<*const Production, Weight> = g
        .productions()
        .iter()
        .map(|p| (p as *const _, hom.apply(&p.weight)))
        .collect();

    let mut vectors: Vec<Vector> = Vec::new();
    let mut vindex: HashMap<Vector, usize> = HashMap::new();
    let mut emitted: BTreeSet<(usize, Vec<usize>, usize, usize)> = BTreeSet::new();
    let mut frontier_start = 0;
    let mut first_round = true;
    loop {
        let known = vectors.len();
        for (si, (_, r)) in rules.iter().enumerate() {
            if r.rank == 0 && !first_round {
                continue;
            }
            let mut tuple = vec![0usize; r.rank];
            let total = known;
            if r.rank > 0 && total == 0 {
                continue;
            }
            loop {
                if r.rank == 0 || tuple.iter().any(|&i| i >= frontier_start) {
                    for (split_idx, (eq, ne)) in splits[si].iter().enumerate() {
                        let phi: Vector = (0..states.len())
                            .map(|qi| {
                                let mut acc = target.zero();
                                for (p, kids) in &r.productions {
                                    if index[&p.target] != qi || !p.eq.is_subset(eq) || !p.ineq.is_subset(ne) {
                                        continue;
                                    }
                                    let mut term = hw[&(*p as *const _)].clone();
                                    for (&child_vec, &kq) in tuple.iter().zip(kids) {
                                        term = target.times(&term, &vectors[child_vec][kq]);
                                    }
                                    acc = target.plus(&acc, &term);
                                }
                                acc
                            })
                            .collect();
                        let id = match vindex.get(&phi) {
                            Some(&id) => id,
                            None => {
                                if vectors.len() >= opts.max_states {
                                    return Err(TransformError::TooManyStates(opts.max_states));
                                }
                                vindex.insert(phi.clone(), vectors.len());
                                vectors.push(phi);
                                vectors.len() - 1
                            }
                        };
                        emitted.insert((si, tuple.clone(), split_idx, id));
                    }
                }
                if !advance(&mut tuple, total) {
                    break;
                }
            }
        }
        first_round = false;
        if vectors.len() == known {
            break;
        }
        frontier_start = known;
    }

    let names: Vec<Name> = vectors.iter().map(|v| vector_name(&states, v)).collect();
    let mut b = GrammarBuilder::new(target, g.alphabet().clone());
    for (v, name) in vectors.iter().zip(&names) {
        b.nonterminal(name.clone());
        let fw = target.sum_all(
            states
                .iter()
                .zip(v)
                .map(|(q, x)| target.times(&hom.apply(&g.final_weight(q)), x))
                .collect::<Vec<_>>()
                .iter(),
        );
        b.add_final(name.clone(), fw);
    }
    for (si, tuple, split_idx, id) in emitted {
        let (sym, _) = &rules[si];
        let (eq, ne) = &splits[si][split_idx];
        b.add(Production {
            lhs: Tree::node(sym, tuple.iter().map(|&c| Tree::nonterminal(&names[c])).collect()),
            target: names[id].clone(),
            eq: eq.clone(),
            ineq: ne.clone(),
            weight: target.one(),
        });
    }
    Ok(b.build())
}

fn advance(tuple: &mut [usize], base: usize) -> bool {
    for slot in tuple.iter_mut().rev() {
        *slot += 1;
        if *slot < base {
            return true;
        }
        *slot = 0;
    }
    false
}

fn vector_name(states: &[&Name], v: &[Weight]) -> Name {
    let boolean = v.iter().all(|w| matches!(w, Weight::Bool(_)));
    let parts: Vec<String> = states
        .iter()
        .zip(v)
        .filter_map(|(q, w)| match w {
            Weight::Bool(true) => Some(q.to_string()),
            Weight::Bool(false) => None,
            _ if boolean => None,
            Weight::ZMod(0) => None,
            w => Some(format!("{q}={w}")),
        })
        .collect();
    Name::from(format!("{{{}}}", parts.join(",")))
}

fn has_witness(
    alphabet: &RankedAlphabet,
    symbol: &Name,
    rank: usize,
    eq: &ConstraintSet,
    ne: &ConstraintSet,
    bound: usize,
) -> bool {
    alphabet.trees_up_to(bound).iter().any(|t| {
        t.symbol() == Some(symbol) && t.children().len() == rank && t.satisfies_all(eq) && t.dissatisfies_all(ne)
    })
}

/// Unambiguous Boolean automaton recognizing the support of `g`.
pub fn support_automaton(g: &Wtgc) -> Result<Wtgc, TransformError> {
    let hom = support_hom(g.semiring())?;
    let prepared = eliminate_zero_derivations(&boolean_finals(&normalize(g)))?;
    disambiguate(&prepared, &hom, DisambiguateOptions::default())
}

/// Unambiguous Boolean automaton recognizing the complement of the support.
pub fn complement_support(g: &Wtgc) -> Result<Wtgc, TransformError> {
    let a = support_automaton(g)?;
    let finals: BTreeMap<Name, Weight> = a
        .nonterminals()
        .iter()
        .map(|q| (q.clone(), Weight::Bool(a.final_weight(q) != Weight::Bool(true))))
        .collect();
    Ok(Wtgc::from_parts(
        a.semiring(),
        a.alphabet().clone(),
        a.nonterminals().iter().cloned(),
        finals,
        a.productions().to_vec(),
    ))
}
