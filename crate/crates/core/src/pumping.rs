//! Derivation substitution, pumping of tall derivations, and the tree
//! family separating constrained grammars from their images.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::grammar::{fresh_name, index_classes, sink_productions, EqRestriction, GrammarBuilder, Production, ProductionId, Wtgc};
use crate::semantics::{check_complete, DerivTree, Derivation, SemanticsError};
use crate::trees::{Name, Position, Tree};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PumpingError {
    #[error("grammar is not eq-restricted positive classic")]
    NotEqRestricted,
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error("derivation targets the sink")]
    SinkTarget,
    #[error("no derivation step at position {0}")]
    NotIncorporated(Position),
    #[error("derivation at {position} targets `{found}`, donor targets `{expected}`")]
    TargetMismatch { position: Position, expected: Name, found: Name },
    #[error("derivation does not produce the given tree")]
    TreeMismatch,
    #[error("tree height {height} does not exceed the grammar height {bound}")]
    TooShort { height: usize, bound: usize },
    #[error("production `{0}` has a sink child free of equality constraints; run ensure_nonbot_child first")]
    FreeSinkChild(String),
    #[error("derivation weight is zero")]
    ZeroWeight,
    #[error("no repeated nonterminal on the deepest path")]
    NoRepeat,
}

/// A derivation `base` of `base_tree` and a `donor` derivation to be put
/// at position `at`.
#[derive(Debug, Clone)]
pub struct SubstitutionSite<'a> {
    pub base_tree: &'a Tree,
    pub base: &'a Derivation,
    pub donor_tree: &'a Tree,
    pub donor: &'a Derivation,
    pub at: Position,
}

struct Pumper<'g> {
    g: &'g Wtgc,
    er: EqRestriction,
    sink_by_symbol: HashMap<Name, ProductionId>,
}

impl<'g> Pumper<'g> {
    fn new(g: &'g Wtgc) -> Result<Self, PumpingError> {
        let er = g.eq_restriction().ok_or(PumpingError::NotEqRestricted)?;
        let sink_by_symbol = g
            .ids()
            .filter(|(_, p)| p.target == er.sink)
            .map(|(id, p)| (p.symbol().expect("sink production").clone(), id))
            .collect();
        Ok(Pumper { g, er, sink_by_symbol })
    }

    fn production(&self, id: ProductionId) -> &'g Production {
        self.g.production(id).expect("own production")
    }

    fn target(&self, d: &DerivTree) -> &'g Name {
        &self.production(d.production).target
    }

    /// The unique derivation of `t` to the sink.
    fn sink_derivation(&self, t: &Tree) -> DerivTree {
        DerivTree {
            production: self.sink_by_symbol[t.symbol().expect("ground tree")],
            children: t.children().iter().map(|c| self.sink_derivation(c)).collect(),
        }
    }

    fn load(&self, t: &Tree, d: &Derivation) -> Result<DerivTree, PumpingError> {
        if &d.input != t {
            return Err(PumpingError::TreeMismatch);
        }
        let tree = DerivTree::from_derivation(self.g, d)?;
        tree.check_against(self.g, t)?;
        if tree.steps(self.g) != d.steps {
            return Err(SemanticsError::Incomplete("steps are not the left-most derivation of a tree".into()).into());
        }
        match &d.target {
            Some(q) if q == self.target(&tree) => {}
            Some(q) => {
                return Err(SemanticsError::WrongTarget {
                    found: self.target(&tree).clone(),
                    expected: q.clone(),
                }
                .into())
            }
            None => return Err(SemanticsError::Incomplete("derivation has no target".into()).into()),
        }
        if self.target(&tree) == &self.er.sink {
            return Err(PumpingError::SinkTarget);
        }
        Ok(tree)
    }

    fn at<'d>(&self, d: &'d DerivTree, w: &Position) -> Option<&'d DerivTree> {
        if w.is_root() {
            return Some(d);
        }
        let dec = self.production(d.production).decompose();
        let (j, wj) = dec.positions.iter().enumerate().find(|(_, wj)| wj.is_prefix_of(w))?;
        self.at(&d.children[j], &w.strip_prefix(wj).expect("prefix"))
    }

    fn substitute(&self, t: &Tree, d: &DerivTree, w: &Position, donor: (&Tree, &DerivTree)) -> Result<(Tree, DerivTree), PumpingError> {
        if w.is_root() {
            return Ok((donor.0.clone(), donor.1.clone()));
        }
        let p = self.production(d.production);
        let dec = p.decompose();
        let j = dec
            .positions
            .iter()
            .position(|wj| wj.is_prefix_of(w))
            .ok_or_else(|| PumpingError::NotIncorporated(w.clone()))?;
        let below = w.strip_prefix(&dec.positions[j]).expect("prefix");
        let sub = t.subtree(&dec.positions[j]).map_err(|_| PumpingError::TreeMismatch)?;
        let (new_tree, new_deriv) = self.substitute(sub, &d.children[j], &below, donor)?;
        let pairs = p.index_constraints().expect("classic");
        let linked = index_classes(dec.arity(), &pairs)
            .into_iter()
            .find(|c| c.contains(&(j + 1)))
            .unwrap_or_default();
        let mut trees = Vec::with_capacity(dec.arity());
        let mut children = Vec::with_capacity(dec.arity());
        for i in 0..dec.arity() {
            if i == j {
                trees.push(new_tree.clone());
                children.push(new_deriv.clone());
            } else if dec.states[i] == self.er.sink && linked.contains(&(i + 1)) {
                children.push(self.sink_derivation(&new_tree));
                trees.push(new_tree.clone());
            } else {
                trees.push(t.subtree(&dec.positions[i]).map_err(|_| PumpingError::TreeMismatch)?.clone());
                children.push(d.children[i].clone());
            }
        }
        Ok((
            dec.context.apply_args(&trees),
            DerivTree {
                production: d.production,
                children,
            },
        ))
    }

    /// Positions of non-sink steps with their sub-derivations.
    fn non_sink_steps<'d>(&self, d: &'d DerivTree, at: Position, out: &mut Vec<(Position, &'d DerivTree)>) {
        if self.target(d) == &self.er.sink {
            return;
        }
        let dec = self.production(d.production).decompose();
        for (c, w) in d.children.iter().zip(&dec.positions) {
            self.non_sink_steps(c, at.concat(w), out);
        }
        out.push((at, d));
    }

    fn pump_once(&self, t: &Tree, d: &DerivTree) -> Result<(Tree, DerivTree), PumpingError> {
        let mut steps = Vec::new();
        self.non_sink_steps(d, Position::root(), &mut steps);
        let (deepest, _) = steps
            .iter()
            .min_by(|(a, _), (b, _)| b.len().cmp(&a.len()).then_with(|| a.0.cmp(&b.0)))
            .ok_or(PumpingError::NoRepeat)?;
        let mut path: Vec<(&Position, &DerivTree)> = steps
            .iter()
            .filter(|(w, _)| w.is_prefix_of(deepest))
            .map(|(w, sub)| (w, *sub))
            .collect();
        path.sort_by_key(|(w, _)| w.len());
        let mut best: Option<(usize, usize)> = None;
        for b in 0..path.len() {
            for a in (0..b).rev() {
                if self.target(path[a].1) != self.target(path[b].1) {
                    continue;
                }
                let gap = path[b].0.len() - path[a].0.len();
                let better = match best {
                    None => true,
                    Some((ba, bb)) => {
                        let old = path[bb].0.len() - path[ba].0.len();
                        gap < old || (gap == old && path[b].0.len() > path[bb].0.len())
                    }
                };
                if better {
                    best = Some((a, b));
                }
                break;
            }
        }
        let (a, b) = best.ok_or(PumpingError::NoRepeat)?;
        let donor_tree = t.subtree(path[a].0).map_err(|_| PumpingError::TreeMismatch)?.clone();
        let donor = path[a].1.clone();
        self.substitute(t, d, path[b].0, (&donor_tree, &donor))
    }
}

/// The tree and derivation obtained by putting `donor` at `at` in `base`;
/// sink subtrees tied to the replaced one by equality are re-derived from
/// the new subtree, everything else is kept.
pub fn substitute_derivation(g: &Wtgc, site: &SubstitutionSite<'_>) -> Result<(Tree, Derivation), PumpingError> {
    let pumper = Pumper::new(g)?;
    let base = pumper.load(site.base_tree, site.base)?;
    let donor = pumper.load(site.donor_tree, site.donor)?;
    let here = pumper
        .at(&base, &site.at)
        .ok_or_else(|| PumpingError::NotIncorporated(site.at.clone()))?;
    if pumper.target(here) != pumper.target(&donor) {
        return Err(PumpingError::TargetMismatch {
            position: site.at.clone(),
            expected: pumper.target(&donor).clone(),
            found: pumper.target(here).clone(),
        });
    }
    let (tree, deriv) = pumper.substitute(site.base_tree, &base, &site.at, (site.donor_tree, &donor))?;
    let out = deriv.to_derivation(g, &tree);
    debug_assert_eq!(check_complete(g, &out), Ok(()));
    Ok((tree, out))
}

/// Equivalent grammar in which no non-sink production has a free sink
/// child: every sink child not tied by equality to a non-sink sibling is
/// replaced by a copy `top` of the sink. Afterwards every non-sink
/// production of positive rank has a non-sink child, and the subtree
/// below every sink child is a copy of a subtree below a non-sink one.
pub fn ensure_nonbot_child(g: &Wtgc) -> Result<Wtgc, PumpingError> {
    let er = g.eq_restriction().ok_or(PumpingError::NotEqRestricted)?;
    let bot = &er.sink;
    let free = free_sink_children(g, &er);
    if free.iter().all(Vec::is_empty) {
        return Ok(g.clone());
    }
    let taken = |n: &str| g.is_nonterminal(n) || g.alphabet().contains(n);
    let top = fresh_name("top", &taken);
    let mut b = GrammarBuilder::new(g.semiring(), g.alphabet().clone());
    for q in g.nonterminals() {
        b.nonterminal(q.clone());
    }
    for (q, w) in g.finals() {
        b.add_final(q.clone(), w.clone());
    }
    for ((_, p), free) in g.ids().zip(&free) {
        if free.is_empty() {
            b.add(p.clone());
            continue;
        }
        let mut index = 0;
        let lhs = p.lhs.map_nonterminals(&mut |q| {
            index += 1;
            if q == bot && free.contains(&index) {
                Tree::nonterminal(&top)
            } else {
                Tree::nonterminal(q)
            }
        });
        b.add(Production { lhs, ..p.clone() });
    }
    for p in sink_productions(g.alphabet(), &top, g.semiring()) {
        b.add(p);
    }
    Ok(b.build())
}

/// Per production, the 1-based indices of sink children that govern
/// themselves, for productions not targeting the sink.
fn free_sink_children(g: &Wtgc, er: &EqRestriction) -> Vec<Vec<usize>> {
    g.ids()
        .map(|(id, p)| {
            if p.target == er.sink {
                return Vec::new();
            }
            p.children()
                .iter()
                .enumerate()
                .filter(|(i, q)| **q == er.sink && er.is_governing(id, i + 1))
                .map(|(i, _)| i + 1)
                .collect()
        })
        .collect()
}

/// `(|Q| + 1) * height(P)`: derivations of taller trees can be pumped.
pub fn grammar_height(g: &Wtgc) -> usize {
    (g.nonterminals().len() + 1) * g.height_of_productions()
}

/// `count` pumped versions of the derivation `d` of `t`, each of strictly
/// greater height than the one before.
///
/// `g` must be eq-restricted without free sink children in non-sink
/// productions (see [`ensure_nonbot_child`]), and `t` must be taller than
/// [`grammar_height`].
pub fn pump(g: &Wtgc, t: &Tree, d: &Derivation, count: usize) -> Result<Vec<(Tree, Derivation)>, PumpingError> {
    let pumper = Pumper::new(g)?;
    let free = free_sink_children(g, &pumper.er);
    if let Some((p, _)) = g.productions().iter().zip(&free).find(|(_, f)| !f.is_empty()) {
        return Err(PumpingError::FreeSinkChild(p.to_string()));
    }
    let mut deriv = pumper.load(t, d)?;
    if g.semiring().is_zero(&deriv.weight(g)) {
        return Err(PumpingError::ZeroWeight);
    }
    let bound = grammar_height(g);
    if t.height() <= bound {
        return Err(PumpingError::TooShort {
            height: t.height(),
            bound,
        });
    }
    let mut tree = t.clone();
    let mut out = Vec::with_capacity(count);
    const MAX_ROUNDS: usize = 64;
    for _ in 0..count {
        let start = tree.height();
        let mut rounds = 0;
        while tree.height() <= start {
            if rounds == MAX_ROUNDS {
                return Err(PumpingError::NoRepeat);
            }
            (tree, deriv) = pumper.pump_once(&tree, &deriv)?;
            rounds += 1;
        }
        if g.semiring().is_zero(&deriv.weight(g)) {
            return Err(PumpingError::ZeroWeight);
        }
        out.push((tree.clone(), deriv.to_derivation(g, &tree)));
    }
    Ok(out)
}

/// Searches for a derivation to `q` of a tree of height at least `min_height`,
/// growing the tallest and shortest known trees of each state for at most
/// `max_rounds` rounds. Returns the shortest such tree found. Trees more
/// than one production height above `min_height` are not kept.
pub fn tall_witness(g: &Wtgc, q: &str, min_height: usize, max_rounds: usize) -> Result<Option<(Tree, Derivation)>, PumpingError> {
    let pumper = Pumper::new(g)?;
    let mut table: BTreeMap<Name, BTreeMap<usize, (Tree, DerivTree)>> = BTreeMap::new();
    let found = |table: &BTreeMap<Name, BTreeMap<usize, (Tree, DerivTree)>>| {
        table
            .get(q)
            .and_then(|m| m.range(min_height..).next())
            .map(|(_, (t, d))| (t.clone(), d.to_derivation(g, t)))
    };
    // Children taller than this cannot be needed for the first tree of
    // height `min_height`; keeping them only inflates copies.
    let cap = min_height + g.height_of_productions();
    for _ in 0..max_rounds {
        let mut changed = false;
        for (id, p) in g.ids() {
            let dec = p.decompose();
            let pairs = p.index_constraints().expect("classic");
            let governors: Vec<usize> = (1..=dec.arity()).filter(|&i| pumper.er.is_governing(id, i)).collect();
            let mut options: Vec<Vec<(Tree, DerivTree)>> = Vec::new();
            for &i in &governors {
                let Some(known) = table.get(&dec.states[i - 1]) else {
                    options.clear();
                    break;
                };
                let mut opts = vec![known.values().next().expect("nonempty").clone()];
                let tallest = known.values().next_back().expect("nonempty");
                if tallest.0 != opts[0].0 {
                    opts.push(tallest.clone());
                }
                options.push(opts);
            }
            if options.len() != governors.len() {
                continue;
            }
            let classes = index_classes(dec.arity(), &pairs);
            let mut results = Vec::new();
            crate::transforms::for_each_choice(&options, &mut |choice| {
                let mut trees = vec![None; dec.arity()];
                let mut derivs = vec![None; dec.arity()];
                for (&i, (t, d)) in governors.iter().zip(choice) {
                    trees[i - 1] = Some(t.clone());
                    derivs[i - 1] = Some(d.clone());
                }
                for class in &classes {
                    let gov = class.iter().copied().find(|&i| pumper.er.is_governing(id, i)).expect("governed");
                    let t = trees[gov - 1].clone().expect("chosen");
                    for &i in class {
                        if i != gov {
                            derivs[i - 1] = Some(pumper.sink_derivation(&t));
                            trees[i - 1] = Some(t.clone());
                        }
                    }
                }
                let trees: Vec<Tree> = trees.into_iter().map(|t| t.expect("filled")).collect();
                let tree = dec.context.apply_args(&trees);
                let deriv = DerivTree {
                    production: id,
                    children: derivs.into_iter().map(|d| d.expect("filled")).collect(),
                };
                results.push((tree, deriv));
            });
            for (tree, deriv) in results {
                if tree.height() > cap {
                    continue;
                }
                let entry = table.entry(p.target.clone()).or_default();
                if let std::collections::btree_map::Entry::Vacant(v) = entry.entry(tree.height()) {
                    v.insert((tree, deriv));
                    changed = true;
                }
            }
        }
        if let Some(hit) = found(&table) {
            return Ok(Some(hit));
        }
        if !changed {
            break;
        }
    }
    Ok(found(&table))
}

/// `(t_n, t'_n)` with `t_1 = t'_1 = g(a, a)`, `t_{n+1} = f(t_n, t_n)` and
/// `t'_{n+1} = fbar(t'_n, t_n)`.
pub fn separation_family(n: usize) -> (Tree, Tree) {
    assert!(n >= 1, "the family starts at n = 1");
    let base = Tree::node("g", vec![Tree::leaf("a"), Tree::leaf("a")]);
    let (mut t, mut tbar) = (base.clone(), base);
    for _ in 1..n {
        tbar = Tree::node("fbar", vec![tbar, t.clone()]);
        t = Tree::node("f", vec![t.clone(), t]);
    }
    (t, tbar)
}
