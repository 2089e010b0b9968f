//! Derivation semantics and the recursive (initial-algebra) weight map.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::grammar::{ProductionId, Wtgc};
use crate::semiring::Weight;
use crate::trees::{IndexedTree, Label, Name, Position, Tree};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SemanticsError {
    #[error("production {0} does not belong to the grammar")]
    ForeignProduction(ProductionId),
    #[error("invalid position {0}")]
    InvalidPosition(Position),
    #[error("step {index} ({production} @ {position}): {reason}")]
    Replay {
        index: usize,
        production: ProductionId,
        position: Position,
        reason: String,
    },
    #[error("derivation is not complete: ends in {0}")]
    Incomplete(String),
    #[error("derivation ends in {found}, expected {expected}")]
    WrongTarget { found: Name, expected: Name },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Step {
    pub production: ProductionId,
    pub position: Position,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} @ {})", self.production, self.position)
    }
}

/// A derivation for a fixed input tree. `target` is the nonterminal the
/// last step produces, absent for derivations without a root step.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Derivation {
    pub input: Tree,
    pub target: Option<Name>,
    pub steps: Vec<Step>,
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// A derivation viewed as a tree of production applications; children
/// follow the variable order of the production's context.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DerivTree {
    pub production: ProductionId,
    pub children: Vec<DerivTree>,
}

impl DerivTree {
    /// Left-most step sequence: children in order (shifted by their
    /// context position), then the root step.
    pub fn steps(&self, g: &Wtgc) -> Vec<Step> {
        let mut out = Vec::new();
        self.push_steps(g, &Position::root(), &mut out);
        out
    }

    fn push_steps(&self, g: &Wtgc, at: &Position, out: &mut Vec<Step>) {
        let p = g.production(self.production).expect("own production");
        let dec = p.decompose();
        for (child, w) in self.children.iter().zip(&dec.positions) {
            child.push_steps(g, &at.concat(w), out);
        }
        out.push(Step {
            production: self.production,
            position: at.clone(),
        });
    }

    pub fn weight(&self, g: &Wtgc) -> Weight {
        let s = g.semiring();
        let own = &g.production(self.production).expect("own production").weight;
        self.children.iter().fold(own.clone(), |acc, c| s.times(&acc, &c.weight(g)))
    }

    pub fn to_derivation(&self, g: &Wtgc, input: &Tree) -> Derivation {
        let target = g.production(self.production).map(|p| p.target.clone());
        Derivation {
            input: input.clone(),
            target,
            steps: self.steps(g),
        }
    }

    /// Checks that this derivation tree derives `t`: every production's
    /// context matches and its constraints hold at its node. Linear in the
    /// derivation size apart from constraint comparisons.
    pub fn check_against(&self, g: &Wtgc, t: &Tree) -> Result<(), SemanticsError> {
        self.check_at(g, t, &Position::root())
    }

    fn check_at(&self, g: &Wtgc, t: &Tree, at: &Position) -> Result<(), SemanticsError> {
        let p = g
            .production(self.production)
            .ok_or(SemanticsError::ForeignProduction(self.production))?;
        let fail = |reason: &str| SemanticsError::Replay {
            index: 0,
            production: self.production,
            position: at.clone(),
            reason: reason.into(),
        };
        let dec = p.decompose();
        if !context_matches(&dec.context, t) {
            return Err(fail("left-hand side does not match the input"));
        }
        if !t.satisfies_all(&p.eq) {
            return Err(fail("equality constraint violated"));
        }
        if !t.dissatisfies_all(&p.ineq) {
            return Err(fail("inequality constraint violated"));
        }
        if self.children.len() != dec.positions.len() {
            return Err(fail("wrong number of sub-derivations"));
        }
        for ((child, w), q) in self.children.iter().zip(&dec.positions).zip(&dec.states) {
            let sub = t.get(w).ok_or_else(|| SemanticsError::InvalidPosition(at.concat(w)))?;
            let cp = g
                .production(child.production)
                .ok_or(SemanticsError::ForeignProduction(child.production))?;
            if &cp.target != q {
                return Err(fail("sub-derivation targets the wrong nonterminal"));
            }
            child.check_at(g, sub, &at.concat(w))?;
        }
        Ok(())
    }

    /// Rebuilds the tree form from a complete left-most derivation.
    pub fn from_derivation(g: &Wtgc, d: &Derivation) -> Result<DerivTree, SemanticsError> {
        let mut by_pos: HashMap<&Position, ProductionId> = HashMap::new();
        for s in &d.steps {
            by_pos.insert(&s.position, s.production);
        }
        fn build(
            g: &Wtgc,
            by_pos: &HashMap<&Position, ProductionId>,
            at: &Position,
        ) -> Result<DerivTree, SemanticsError> {
            let id = *by_pos.get(at).ok_or_else(|| SemanticsError::InvalidPosition(at.clone()))?;
            let p = g.production(id).ok_or(SemanticsError::ForeignProduction(id))?;
            let children = p
                .decompose()
                .positions
                .iter()
                .map(|w| build(g, by_pos, &at.concat(w)))
                .collect::<Result<_, _>>()?;
            Ok(DerivTree { production: id, children })
        }
        build(g, &by_pos, &Position::root())
    }
}

/// Whether `t` is an instance of the context `ctx` (variables match anything).
fn context_matches(ctx: &Tree, t: &Tree) -> bool {
    match ctx.label() {
        Label::Var(_) => true,
        label => {
            label == t.label()
                && ctx.children().len() == t.children().len()
                && ctx.children().iter().zip(t.children()).all(|(c, u)| context_matches(c, u))
        }
    }
}

struct CompiledProduction {
    id: ProductionId,
    context: Tree,
    children: Vec<usize>,
    target: usize,
}

/// A grammar prepared for repeated bottom-up evaluation.
pub struct Evaluator<'g> {
    g: &'g Wtgc,
    states: Vec<Name>,
    index: HashMap<Name, usize>,
    by_symbol: HashMap<Name, Vec<CompiledProduction>>,
}

/// Per-node table of `wt^q` for every nonterminal `q`.
pub struct NodeWeights {
    pub tree: IndexedTree,
    table: Vec<Vec<Weight>>,
}

impl NodeWeights {
    pub fn at(&self, node: usize, state: usize) -> &Weight {
        &self.table[node][state]
    }

    pub fn root(&self) -> &[Weight] {
        &self.table[self.tree.root()]
    }
}

impl<'g> Evaluator<'g> {
    pub fn new(g: &'g Wtgc) -> Self {
        let states: Vec<Name> = g.nonterminals().iter().cloned().collect();
        let index: HashMap<Name, usize> = states.iter().enumerate().map(|(i, q)| (q.clone(), i)).collect();
        let mut by_symbol: HashMap<Name, Vec<CompiledProduction>> = HashMap::new();
        for (id, p) in g.ids() {
            let Some(sym) = p.symbol() else { continue };
            let dec = p.decompose();
            by_symbol.entry(sym.clone()).or_default().push(CompiledProduction {
                id,
                context: dec.context,
                children: dec.states.iter().map(|q| index[q]).collect(),
                target: index[&p.target],
            });
        }
        Evaluator {
            g,
            states,
            index,
            by_symbol,
        }
    }

    pub fn grammar(&self) -> &'g Wtgc {
        self.g
    }

    pub fn states(&self) -> &[Name] {
        &self.states
    }

    pub fn state_index(&self, q: &str) -> Option<usize> {
        self.index.get(q).copied()
    }

    /// Calls `f(production, children nodes)` for every production that
    /// applies at `node`, constraints included.
    fn for_each_match(&self, ix: &IndexedTree, node: usize, mut f: impl FnMut(&CompiledProduction, &[usize])) {
        let Label::Symbol(sym) = ix.label(node) else { return };
        let Some(cands) = self.by_symbol.get(sym) else { return };
        let mut kids = Vec::new();
        for cp in cands {
            kids.clear();
            if !ix.match_context(node, &cp.context, &mut kids) {
                continue;
            }
            let p = &self.g.productions()[cp.id.0];
            if p.eq.iter().all(|c| ix.satisfies(node, c)) && p.ineq.iter().all(|c| !ix.satisfies(node, c)) {
                f(cp, &kids);
            }
        }
    }

    pub fn node_weights(&self, t: &Tree) -> NodeWeights {
        let ix = IndexedTree::new(t);
        let s = self.g.semiring();
        let mut table: Vec<Vec<Weight>> = Vec::with_capacity(ix.len());
        let mut by_class: HashMap<usize, usize> = HashMap::new();
        for n in 0..ix.len() {
            if let Some(&prev) = by_class.get(&ix.class(n)) {
                let row = table[prev].clone();
                table.push(row);
                continue;
            }
            let mut row = vec![s.zero(); self.states.len()];
            self.for_each_match(&ix, n, |cp, kids| {
                let p = &self.g.productions()[cp.id.0];
                let mut w = p.weight.clone();
                for (&k, &q) in kids.iter().zip(&cp.children) {
                    if s.is_zero(&w) {
                        break;
                    }
                    w = s.times(&w, &table[k][q]);
                }
                row[cp.target] = s.plus(&row[cp.target], &w);
            });
            by_class.insert(ix.class(n), n);
            table.push(row);
        }
        NodeWeights { tree: ix, table }
    }

    /// `wt^q(t)` for every nonterminal.
    pub fn state_weights(&self, t: &Tree) -> BTreeMap<Name, Weight> {
        let nw = self.node_weights(t);
        self.states.iter().cloned().zip(nw.root().iter().cloned()).collect()
    }

    pub fn state_weight(&self, q: &str, t: &Tree) -> Weight {
        match self.state_index(q) {
            Some(i) => self.node_weights(t).root()[i].clone(),
            None => self.g.semiring().zero(),
        }
    }

    pub fn evaluate(&self, t: &Tree) -> Weight {
        let s = self.g.semiring();
        let nw = self.node_weights(t);
        let root = nw.root();
        self.g
            .finals()
            .fold(s.zero(), |acc, (q, f)| s.plus(&acc, &s.times(f, &root[self.index[q]])))
    }

    /// Derivation trees for the subtree at `node` to `state`.
    fn deriv_trees(
        &self,
        ix: &IndexedTree,
        node: usize,
        state: usize,
        memo: &mut HashMap<(usize, usize), Vec<DerivTree>>,
    ) -> Vec<DerivTree> {
        if let Some(v) = memo.get(&(node, state)) {
            return v.clone();
        }
        let mut matches: Vec<(ProductionId, Vec<usize>, Vec<usize>)> = Vec::new();
        self.for_each_match(ix, node, |cp, kids| {
            if cp.target == state {
                matches.push((cp.id, kids.to_vec(), cp.children.clone()));
            }
        });
        let mut out = Vec::new();
        for (id, kids, states) in matches {
            let mut partial: Vec<Vec<DerivTree>> = vec![Vec::new()];
            for (&k, &q) in kids.iter().zip(&states) {
                let options = self.deriv_trees(ix, k, q, memo);
                let mut next = Vec::with_capacity(partial.len() * options.len());
                for pre in &partial {
                    for o in &options {
                        let mut v = pre.clone();
                        v.push(o.clone());
                        next.push(v);
                    }
                }
                partial = next;
                if partial.is_empty() {
                    break;
                }
            }
            out.extend(partial.into_iter().map(|children| DerivTree { production: id, children }));
        }
        memo.insert((node, state), out.clone());
        out
    }

    pub fn derivation_trees(&self, t: &Tree, q: &str) -> Vec<DerivTree> {
        let Some(state) = self.state_index(q) else { return Vec::new() };
        let ix = IndexedTree::new(t);
        self.deriv_trees(&ix, ix.root(), state, &mut HashMap::new())
    }

    /// Number of complete left-most derivations to each nonterminal,
    /// saturating.
    pub fn derivation_counts(&self, t: &Tree) -> Vec<u128> {
        let ix = IndexedTree::new(t);
        let mut table: Vec<Vec<u128>> = Vec::with_capacity(ix.len());
        for n in 0..ix.len() {
            let mut row = vec![0u128; self.states.len()];
            self.for_each_match(&ix, n, |cp, kids| {
                let c = kids
                    .iter()
                    .zip(&cp.children)
                    .fold(1u128, |acc, (&k, &q)| acc.saturating_mul(table[k][q]));
                row[cp.target] = row[cp.target].saturating_add(c);
            });
            table.push(row);
        }
        table.pop().unwrap_or_default()
    }
}

pub fn state_weight(g: &Wtgc, q: &str, t: &Tree) -> Weight {
    Evaluator::new(g).state_weight(q, t)
}

pub fn evaluate(g: &Wtgc, t: &Tree) -> Weight {
    Evaluator::new(g).evaluate(t)
}

/// All complete left-most derivations of `t` to `q`.
pub fn derivations(g: &Wtgc, t: &Tree, q: &str) -> Vec<Derivation> {
    Evaluator::new(g)
        .derivation_trees(t, q)
        .iter()
        .map(|d| d.to_derivation(g, t))
        .collect()
}

pub fn derivation_weight(g: &Wtgc, d: &Derivation) -> Result<Weight, SemanticsError> {
    let s = g.semiring();
    d.steps.iter().try_fold(s.one(), |acc, step| {
        let p = g
            .production(step.production)
            .ok_or(SemanticsError::ForeignProduction(step.production))?;
        Ok(s.times(&acc, &p.weight))
    })
}

/// Replays the steps as sentential-form rewrites, checking constraints on
/// the original input and the left-most order. Returns the final form.
pub fn replay(g: &Wtgc, d: &Derivation) -> Result<Tree, SemanticsError> {
    let mut form = d.input.clone();
    let mut prev: Option<&Position> = None;
    for (index, step) in d.steps.iter().enumerate() {
        let fail = |reason: String| SemanticsError::Replay {
            index,
            production: step.production,
            position: step.position.clone(),
            reason,
        };
        let p = g
            .production(step.production)
            .ok_or(SemanticsError::ForeignProduction(step.production))?;
        if let Some(prev) = prev {
            if prev.leftmost_cmp(&step.position) != Ordering::Less {
                return Err(fail(format!("not left-most after {prev}")));
            }
        }
        prev = Some(&step.position);
        let here = form.get(&step.position).ok_or_else(|| fail("position not in sentential form".into()))?;
        if *here != p.lhs {
            return Err(fail(format!("sentential form has {here}, lhs is {}", p.lhs)));
        }
        let sub = d
            .input
            .get(&step.position)
            .ok_or_else(|| fail("position not in input".into()))?;
        if !sub.satisfies_all(&p.eq) {
            return Err(fail("equality constraint violated".into()));
        }
        if !sub.dissatisfies_all(&p.ineq) {
            return Err(fail("inequality constraint violated".into()));
        }
        form = form
            .replace(Tree::nonterminal(&p.target), &step.position)
            .map_err(|e| fail(e.to_string()))?;
    }
    Ok(form)
}

/// Replays and additionally requires a complete derivation to `d.target`.
pub fn check_complete(g: &Wtgc, d: &Derivation) -> Result<(), SemanticsError> {
    let form = replay(g, d)?;
    match (form.label(), &d.target) {
        (Label::Nonterminal(q), Some(t)) if q == t => Ok(()),
        (Label::Nonterminal(q), Some(t)) => Err(SemanticsError::WrongTarget {
            found: q.clone(),
            expected: t.clone(),
        }),
        _ => Err(SemanticsError::Incomplete(form.to_string())),
    }
}

/// The derivation for `t|_w` incorporated in `d`.
pub fn incorporated(g: &Wtgc, d: &Derivation, w: &Position) -> Result<Derivation, SemanticsError> {
    let input = d
        .input
        .get(w)
        .ok_or_else(|| SemanticsError::InvalidPosition(w.clone()))?
        .clone();
    let steps: Vec<Step> = d
        .steps
        .iter()
        .filter_map(|s| {
            s.position.strip_prefix(w).map(|rest| Step {
                production: s.production,
                position: rest,
            })
        })
        .collect();
    let target = match steps.last() {
        Some(s) if s.position.is_root() => Some(
            g.production(s.production)
                .ok_or(SemanticsError::ForeignProduction(s.production))?
                .target
                .clone(),
        ),
        _ => None,
    };
    Ok(Derivation { input, target, steps })
}

/// Prefixes every step position with `w`.
pub fn shift_steps(steps: &[Step], w: &Position) -> Vec<Step> {
    steps
        .iter()
        .map(|s| Step {
            production: s.production,
            position: w.concat(&s.position),
        })
        .collect()
}

/// First tree (by size, then text) of size at most `max_size` with more
/// than one complete derivation to final-supported nonterminals.
pub fn check_unambiguous_upto(g: &Wtgc, max_size: usize) -> Option<Tree> {
    let ev = Evaluator::new(g);
    let finals: Vec<usize> = g.finals().map(|(q, _)| ev.index[q]).collect();
    g.alphabet().trees_up_to(max_size).into_iter().find(|t| {
        let counts = ev.derivation_counts(t);
        finals.iter().map(|&i| counts[i]).fold(0u128, u128::saturating_add) > 1
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_grammar, parse_tree};
    use crate::trees::pos;

    const FX1: &str = "semiring arctic
alphabet alpha:0 gamma:1 sigma:2
nonterminals q qf
final qf = 0
prod alpha -> q @ 0
prod gamma(q) -> q @ 1
prod sigma(gamma(q), q) -> qf [eq 1.1=2] @ 1
";

    fn fx1() -> Wtgc {
        parse_grammar(FX1).unwrap()
    }

    fn id(g: &Wtgc, text: &str) -> ProductionId {
        g.ids().find(|(_, p)| p.to_string() == text).unwrap().0
    }

    #[test]
    fn left_most_derivation_of_lopsided_tree() {
        let g = fx1();
        let t = parse_tree("sigma(gamma(gamma(alpha)), gamma(alpha))").unwrap();
        let ds = derivations(&g, &t, "qf");
        assert_eq!(ds.len(), 1);
        let (p1, p2, p3) = (
            id(&g, "alpha -> q @ 0"),
            id(&g, "gamma(q) -> q @ 1"),
            id(&g, "sigma(gamma(q), q) -> qf [eq 1.1=2] @ 1"),
        );
        let expected: Vec<Step> = [
            (p1, pos(&[1, 1, 1])),
            (p2, pos(&[1, 1])),
            (p1, pos(&[2, 1])),
            (p2, pos(&[2])),
            (p3, pos(&[])),
        ]
        .into_iter()
        .map(|(production, position)| Step { production, position })
        .collect();
        assert_eq!(ds[0].steps, expected);
        check_complete(&g, &ds[0]).unwrap();
        assert_eq!(derivation_weight(&g, &ds[0]).unwrap(), g.semiring().from_u64(3));
        assert_eq!(evaluate(&g, &t), g.semiring().from_u64(3));

        let at1 = incorporated(&g, &ds[0], &pos(&[1])).unwrap();
        assert_eq!(at1.target, None);
        assert_eq!(
            at1.steps.iter().map(|s| (s.production, s.position.clone())).collect::<Vec<_>>(),
            vec![(p1, pos(&[1])), (p2, pos(&[]))].into_iter().map(|(p, w)| (p, pos(&[1]).concat(&w))).collect::<Vec<_>>()
        );
        let at11 = incorporated(&g, &ds[0], &pos(&[1, 1])).unwrap();
        assert_eq!(at11.target.as_deref(), Some("q"));
        assert_eq!(at11.steps, vec![
            Step { production: p1, position: pos(&[1]) },
            Step { production: p2, position: pos(&[]) },
        ]);
        assert_eq!(incorporated(&g, &ds[0], &Position::root()).unwrap(), ds[0]);
        assert!(incorporated(&g, &ds[0], &pos(&[3])).is_err());
    }

    #[test]
    fn no_derivation_for_leaf() {
        let g = fx1();
        assert!(derivations(&g, &parse_tree("alpha").unwrap(), "qf").is_empty());
        assert_eq!(
            state_weight(&g, "q", &parse_tree("gamma(gamma(alpha))").unwrap()),
            g.semiring().from_u64(2)
        );
        assert_eq!(evaluate(&g, &parse_tree("sigma(alpha, alpha)").unwrap()), g.semiring().zero());
    }

    #[test]
    fn empty_derivation_weighs_one() {
        let g = fx1();
        let d = Derivation {
            input: parse_tree("alpha").unwrap(),
            target: None,
            steps: Vec::new(),
        };
        assert_eq!(derivation_weight(&g, &d).unwrap(), g.semiring().one());
    }

    #[test]
    fn replay_rejects_bad_order() {
        let g = fx1();
        let t = parse_tree("sigma(gamma(gamma(alpha)), gamma(alpha))").unwrap();
        let mut d = derivations(&g, &t, "qf").remove(0);
        d.steps.swap(0, 2);
        assert!(replay(&g, &d).is_err());
    }

    #[test]
    fn tree_check_agrees_with_replay() {
        let g = fx1();
        let t = parse_tree("sigma(gamma(gamma(alpha)), gamma(alpha))").unwrap();
        let d = Evaluator::new(&g).derivation_trees(&t, "qf").remove(0);
        d.check_against(&g, &t).unwrap();
        let other = parse_tree("sigma(gamma(gamma(alpha)), gamma(gamma(alpha)))").unwrap();
        assert!(d.check_against(&g, &other).is_err());
        let mut broken = d.clone();
        broken.children[0] = broken.children[0].children[0].clone();
        assert!(broken.check_against(&g, &t).is_err());
    }

    #[test]
    fn ambiguity_witness() {
        let g = parse_grammar(
            "semiring nat
alphabet a:0 f:2
nonterminals q
final q = 1
prod a -> q @ 1
prod f(q, q) -> q [eq 1=2] @ 1
prod f(q, q) -> q @ 1
",
        )
        .unwrap();
        let t = check_unambiguous_upto(&g, 5).unwrap();
        assert_eq!(t.to_string(), "f(a, a)");
        assert_eq!(derivations(&g, &t, "q").len(), 2);
        let empty = Wtgc::from_parts(g.semiring(), g.alphabet().clone(), [], [], vec![]);
        assert_eq!(check_unambiguous_upto(&empty, 5), None);
    }
}
