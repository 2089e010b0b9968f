//! The WTGc data model: productions, grammars, validation and classification.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

use crate::semiring::{Semiring, Weight};
use crate::trees::{normalize_pair, ConstraintSet, Label, Name, Position, RankedAlphabet, Tree};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("invalid grammar: {}", join_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("production {0} is not classic")]
    NotClassic(ProductionId),
    #[error("unknown production {0}")]
    UnknownProduction(ProductionId),
}

fn join_diagnostics(ds: &[Diagnostic]) -> String {
    ds.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Index of a production in the canonical (sorted) production list.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ProductionId(pub usize);

impl fmt::Display for ProductionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

impl ProductionId {
    pub fn parse(s: &str) -> Option<ProductionId> {
        s.strip_prefix('p')?.parse().ok().map(ProductionId)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub production: Option<ProductionId>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.production {
            Some(p) => write!(f, "{p}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// `lhs --E,I-->_weight target`
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Production {
    pub lhs: Tree,
    pub target: Name,
    pub eq: ConstraintSet,
    pub ineq: ConstraintSet,
    pub weight: Weight,
}

/// Everything but the weight; productions with equal keys are merged.
pub type ProductionKey = (Tree, Name, ConstraintSet, ConstraintSet);

/// `lhs = context[states]` with the context's variables in yield order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecomposedLhs {
    pub context: Tree,
    pub states: Vec<Name>,
    /// `positions[i]` is where `x_{i+1}` sits in the context.
    pub positions: Vec<Position>,
}

impl DecomposedLhs {
    pub fn arity(&self) -> usize {
        self.states.len()
    }

    /// Index (0-based) of the variable at `w`, if any.
    pub fn index_at(&self, w: &Position) -> Option<usize> {
        self.positions.iter().position(|p| p == w)
    }
}

impl Production {
    pub fn new(lhs: Tree, target: impl Into<Name>, weight: Weight) -> Self {
        Production {
            lhs,
            target: target.into(),
            eq: ConstraintSet::new(),
            ineq: ConstraintSet::new(),
            weight,
        }
    }

    /// `symbol(children...) -> target` with nonterminal children.
    pub fn normalized(symbol: &str, children: &[Name], target: impl Into<Name>, weight: Weight) -> Self {
        let lhs = Tree::node(symbol, children.iter().map(Tree::nonterminal).collect());
        Production::new(lhs, target, weight)
    }

    pub fn with_eq(mut self, a: Position, b: Position) -> Self {
        self.eq.insert(normalize_pair(a, b));
        self
    }

    pub fn with_ne(mut self, a: Position, b: Position) -> Self {
        self.ineq.insert(normalize_pair(a, b));
        self
    }

    pub fn key(&self) -> ProductionKey {
        (self.lhs.clone(), self.target.clone(), self.eq.clone(), self.ineq.clone())
    }

    pub fn from_key(key: ProductionKey, weight: Weight) -> Self {
        let (lhs, target, eq, ineq) = key;
        Production {
            lhs,
            target,
            eq,
            ineq,
            weight,
        }
    }

    /// Root symbol of the left-hand side.
    pub fn symbol(&self) -> Option<&Name> {
        self.lhs.symbol()
    }

    pub fn decompose(&self) -> DecomposedLhs {
        let mut states = Vec::new();
        let mut positions = Vec::new();
        let context = decompose_rec(&self.lhs, &mut Vec::new(), &mut states, &mut positions);
        DecomposedLhs {
            context,
            states,
            positions,
        }
    }

    /// Nonterminals of the left-hand side in left-to-right order.
    pub fn children(&self) -> Vec<Name> {
        self.lhs
            .yield_of()
            .into_iter()
            .filter_map(|l| match l {
                Label::Nonterminal(q) => Some(q),
                _ => None,
            })
            .collect()
    }

    pub fn is_normalized(&self) -> bool {
        self.symbol().is_some()
            && self
                .lhs
                .children()
                .iter()
                .all(|c| matches!(c.label(), Label::Nonterminal(_)))
    }

    pub fn is_positive(&self) -> bool {
        self.ineq.is_empty()
    }

    pub fn is_unconstrained(&self) -> bool {
        self.eq.is_empty() && self.ineq.is_empty()
    }

    pub fn is_classic(&self) -> bool {
        let is_state = |w: &Position| matches!(self.lhs.get(w).map(Tree::label), Some(Label::Nonterminal(_)));
        self.eq
            .iter()
            .chain(&self.ineq)
            .all(|(a, b)| is_state(a) && is_state(b))
    }

    pub fn height(&self) -> usize {
        self.lhs.height()
    }

    /// `c(E)` as 1-based index pairs.
    pub fn index_constraints(&self) -> Option<BTreeSet<(usize, usize)>> {
        if !self.is_classic() {
            return None;
        }
        let dec = self.decompose();
        Some(
            self.eq
                .iter()
                .map(|(a, b)| {
                    let i = dec.index_at(a).expect("classic") + 1;
                    let j = dec.index_at(b).expect("classic") + 1;
                    (i, j)
                })
                .collect(),
        )
    }
}

fn decompose_rec(t: &Tree, path: &mut Vec<u32>, states: &mut Vec<Name>, positions: &mut Vec<Position>) -> Tree {
    match t.label() {
        Label::Nonterminal(q) => {
            states.push(q.clone());
            positions.push(Position(path.clone()));
            Tree::var(states.len())
        }
        label => {
            let children = t
                .children()
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    path.push(i as u32 + 1);
                    let out = decompose_rec(c, path, states, positions);
                    path.pop();
                    out
                })
                .collect();
            Tree::new(label.clone(), children)
        }
    }
}

fn write_constraints(f: &mut fmt::Formatter<'_>, kw: &str, cs: &ConstraintSet) -> fmt::Result {
    if cs.is_empty() {
        return Ok(());
    }
    write!(f, " [{kw} ")?;
    for (i, (a, b)) in cs.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{a}={b}")?;
    }
    f.write_str("]")
}

impl fmt::Display for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.lhs, self.target)?;
        write_constraints(f, "eq", &self.eq)?;
        write_constraints(f, "ne", &self.ineq)?;
        write!(f, " @ {}", self.weight)
    }
}

/// A weighted tree grammar with constraints over one semiring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Wtgc {
    semiring: Semiring,
    alphabet: RankedAlphabet,
    nonterminals: BTreeSet<Name>,
    finals: BTreeMap<Name, Weight>,
    productions: Vec<Production>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Classification {
    pub normalized: bool,
    pub positive: bool,
    pub classic: bool,
    pub unconstrained: bool,
    pub boolean_final: bool,
    pub constraint_determined: bool,
}

impl Classification {
    pub fn is_wta(&self) -> bool {
        self.normalized && self.unconstrained
    }
}

/// Sink nonterminal plus the governing index map of every production.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EqRestriction {
    pub sink: Name,
    /// `governing[p][i-1]` is the governing index (1-based) for `i` in `p`.
    pub governing: Vec<Vec<usize>>,
}

impl EqRestriction {
    pub fn governor(&self, p: ProductionId, i: usize) -> usize {
        self.governing[p.0][i - 1]
    }

    /// Whether index `i` (1-based) governs itself in `p`.
    pub fn is_governing(&self, p: ProductionId, i: usize) -> bool {
        self.governor(p, i) == i
    }
}

impl Wtgc {
    /// Assembles a grammar without validation; productions are put in
    /// canonical order and zero final weights are dropped.
    pub fn from_parts(
        semiring: Semiring,
        alphabet: RankedAlphabet,
        nonterminals: impl IntoIterator<Item = Name>,
        finals: impl IntoIterator<Item = (Name, Weight)>,
        productions: Vec<Production>,
    ) -> Self {
        let mut productions = productions;
        productions.sort_by_cached_key(|p| p.to_string());
        Wtgc {
            finals: finals.into_iter().filter(|(_, w)| !semiring.is_zero(w)).collect(),
            semiring,
            alphabet,
            nonterminals: nonterminals.into_iter().collect(),
            productions,
        }
    }

    /// Like [`Wtgc::from_parts`] but rejects grammars with diagnostics.
    pub fn new(
        semiring: Semiring,
        alphabet: RankedAlphabet,
        nonterminals: impl IntoIterator<Item = Name>,
        finals: impl IntoIterator<Item = (Name, Weight)>,
        productions: Vec<Production>,
    ) -> Result<Self, GrammarError> {
        let g = Self::from_parts(semiring, alphabet, nonterminals, finals, productions);
        let ds = g.validate();
        if ds.is_empty() {
            Ok(g)
        } else {
            Err(GrammarError::Invalid(ds))
        }
    }

    pub fn semiring(&self) -> Semiring {
        self.semiring
    }

    pub fn alphabet(&self) -> &RankedAlphabet {
        &self.alphabet
    }

    pub fn nonterminals(&self) -> &BTreeSet<Name> {
        &self.nonterminals
    }

    pub fn is_nonterminal(&self, q: &str) -> bool {
        self.nonterminals.contains(q)
    }

    pub fn final_weight(&self, q: &str) -> Weight {
        self.finals.get(q).cloned().unwrap_or_else(|| self.semiring.zero())
    }

    /// Nonterminals with nonzero final weight.
    pub fn finals(&self) -> impl Iterator<Item = (&Name, &Weight)> {
        self.finals.iter()
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn production(&self, id: ProductionId) -> Option<&Production> {
        self.productions.get(id.0)
    }

    pub fn ids(&self) -> impl Iterator<Item = (ProductionId, &Production)> {
        self.productions.iter().enumerate().map(|(i, p)| (ProductionId(i), p))
    }

    pub fn id_of(&self, p: &Production) -> Option<ProductionId> {
        self.productions.iter().position(|x| x == p).map(ProductionId)
    }

    /// Every invariant violation, in a stable order.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let global = |m: String| Diagnostic {
            production: None,
            message: m,
        };
        for (s, _) in self.alphabet.iter() {
            if self.nonterminals.contains(s.as_str()) {
                out.push(global(format!("`{s}` is both a symbol and a nonterminal")));
            }
        }
        for (q, w) in &self.finals {
            if !self.nonterminals.contains(q) {
                out.push(global(format!("final weight for undeclared nonterminal `{q}`")));
            }
            if !self.semiring.contains(w) {
                out.push(global(format!("final weight {w} of `{q}` is not in {}", self.semiring)));
            }
        }
        let mut seen = BTreeMap::new();
        for (id, p) in self.ids() {
            let mut diag = |m: String| {
                out.push(Diagnostic {
                    production: Some(id),
                    message: m,
                })
            };
            if matches!(p.lhs.label(), Label::Nonterminal(_)) {
                diag("lhs is a bare nonterminal".into());
            }
            if !self.semiring.contains(&p.weight) {
                diag(format!("weight {} is not in {}", p.weight, self.semiring));
            } else if self.semiring.is_zero(&p.weight) {
                diag("zero-weight production".into());
            }
            if !self.nonterminals.contains(&p.target) {
                diag(format!("undeclared target nonterminal `{}`", p.target));
            }
            self.check_lhs(&p.lhs, &mut diag);
            if let Some(prev) = seen.insert(p.key(), id) {
                diag(format!("duplicates production {prev}"));
            }
        }
        out
    }

    fn check_lhs(&self, t: &Tree, diag: &mut impl FnMut(String)) {
        match t.label() {
            Label::Symbol(s) => match self.alphabet.rank(s) {
                None => diag(format!("unknown symbol `{s}`")),
                Some(r) if r != t.children().len() => diag(format!(
                    "arity mismatch: `{s}` has rank {r} but {} children",
                    t.children().len()
                )),
                Some(_) => {}
            },
            Label::Nonterminal(q) => {
                if !self.nonterminals.contains(q) {
                    diag(format!("undeclared nonterminal `{q}`"));
                }
                if !t.children().is_empty() {
                    diag(format!("nonterminal `{q}` has children"));
                }
            }
            Label::Var(i) => diag(format!("variable x{i} in lhs")),
        }
        for c in t.children() {
            self.check_lhs(c, diag);
        }
    }

    pub fn classify(&self) -> Classification {
        let ps = &self.productions;
        let mut by_shape: BTreeMap<(String, &Name), &Production> = BTreeMap::new();
        let mut determined = true;
        for p in ps {
            if let Some(other) = by_shape.insert((p.lhs.to_string(), &p.target), p) {
                if other.eq != p.eq || other.ineq != p.ineq {
                    determined = false;
                }
            }
        }
        let normalized = ps.iter().all(Production::is_normalized);
        Classification {
            normalized,
            positive: ps.iter().all(Production::is_positive),
            classic: ps.iter().all(Production::is_classic),
            unconstrained: ps.iter().all(Production::is_unconstrained),
            boolean_final: self
                .nonterminals
                .iter()
                .all(|q| self.semiring.is_zero(&self.final_weight(q)) || self.semiring.is_one(&self.final_weight(q))),
            constraint_determined: normalized && determined,
        }
    }

    pub fn index_constraints(&self, id: ProductionId) -> Result<BTreeSet<(usize, usize)>, GrammarError> {
        self.production(id)
            .ok_or(GrammarError::UnknownProduction(id))?
            .index_constraints()
            .ok_or(GrammarError::NotClassic(id))
    }

    /// Whether `bot` is a sink nonterminal: zero final weight and exactly
    /// the productions `sigma(bot, ..., bot) ->_1 bot` target it.
    pub fn is_sink(&self, bot: &Name) -> bool {
        if !self.nonterminals.contains(bot) || self.finals.contains_key(bot) {
            return false;
        }
        let expected: BTreeSet<ProductionKey> = sink_productions(&self.alphabet, bot, self.semiring)
            .into_iter()
            .map(|p| p.key())
            .collect();
        let actual: Vec<&Production> = self.productions.iter().filter(|p| &p.target == bot).collect();
        actual.len() == expected.len()
            && actual
                .iter()
                .all(|p| self.semiring.is_one(&p.weight) && expected.contains(&p.key()))
    }

    /// The sink and governing maps if the grammar is eq-restricted.
    pub fn eq_restriction(&self) -> Option<EqRestriction> {
        let class = self.classify();
        if !class.classic || !class.positive {
            return None;
        }
        self.nonterminals
            .iter()
            .filter(|q| self.is_sink(q))
            .find_map(|bot| self.governing_maps(bot))
    }

    /// Governing maps with respect to a given sink, ignoring whether it is
    /// one; `None` when some class has no unique governor.
    pub fn governing_maps(&self, bot: &Name) -> Option<EqRestriction> {
        let mut governing = Vec::with_capacity(self.productions.len());
        for p in &self.productions {
            governing.push(governing_map(p, bot)?);
        }
        Some(EqRestriction {
            sink: bot.clone(),
            governing,
        })
    }

    pub fn height_of_productions(&self) -> usize {
        self.productions.iter().map(Production::height).max().unwrap_or(0)
    }
}

/// Equivalence classes of `≡_{c(E)}` over `1..=k`, each sorted.
pub fn index_classes(k: usize, pairs: &BTreeSet<(usize, usize)>) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..=k).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut y = x;
        while parent[y] != r {
            let next = parent[y];
            parent[y] = r;
            y = next;
        }
        r
    }
    for &(i, j) in pairs {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 1..=k {
        let r = find(&mut parent, i);
        classes.entry(r).or_default().push(i);
    }
    classes.into_values().collect()
}

fn governing_map(p: &Production, bot: &Name) -> Option<Vec<usize>> {
    let dec = p.decompose();
    let k = dec.arity();
    let pairs = p.index_constraints()?;
    let mut map = vec![0; k];
    for class in index_classes(k, &pairs) {
        let non_sink: BTreeSet<&Name> = class.iter().map(|&i| &dec.states[i - 1]).filter(|q| *q != bot).collect();
        let governor = match non_sink.len() {
            0 if class.len() == 1 => class[0],
            1 => {
                let q = *non_sink.iter().next().expect("one");
                let mut holders = class.iter().filter(|&&i| &dec.states[i - 1] == q);
                let g = *holders.next().expect("present");
                if holders.next().is_some() {
                    return None;
                }
                g
            }
            _ => return None,
        };
        for &i in &class {
            map[i - 1] = governor;
        }
    }
    Some(map)
}

/// `sigma(bot, ..., bot) ->_1 bot` for every symbol.
pub fn sink_productions(alphabet: &RankedAlphabet, bot: &Name, semiring: Semiring) -> Vec<Production> {
    alphabet
        .iter()
        .map(|(s, r)| Production::normalized(s, &vec![bot.clone(); r], bot.clone(), semiring.one()))
        .collect()
}

/// Accumulates productions, summing the weights of equal ones.
#[derive(Debug, Clone)]
pub struct GrammarBuilder {
    semiring: Semiring,
    alphabet: RankedAlphabet,
    nonterminals: BTreeSet<Name>,
    finals: BTreeMap<Name, Weight>,
    productions: IndexMap<ProductionKey, Weight>,
}

impl GrammarBuilder {
    pub fn new(semiring: Semiring, alphabet: RankedAlphabet) -> Self {
        GrammarBuilder {
            semiring,
            alphabet,
            nonterminals: BTreeSet::new(),
            finals: BTreeMap::new(),
            productions: IndexMap::new(),
        }
    }

    pub fn semiring(&self) -> Semiring {
        self.semiring
    }

    pub fn nonterminal(&mut self, q: impl Into<Name>) -> &mut Self {
        self.nonterminals.insert(q.into());
        self
    }

    /// Adds `w` to the final weight of `q`.
    pub fn add_final(&mut self, q: impl Into<Name>, w: Weight) -> &mut Self {
        let q = q.into();
        self.nonterminals.insert(q.clone());
        let s = self.semiring;
        let cur = self.finals.entry(q).or_insert_with(|| s.zero());
        *cur = s.plus(cur, &w);
        self
    }

    /// Adds a production, summing with an existing one of the same key;
    /// all nonterminals it mentions are declared.
    pub fn add(&mut self, p: Production) -> &mut Self {
        self.nonterminals.insert(p.target.clone());
        self.nonterminals.extend(p.children());
        let s = self.semiring;
        let key = p.key();
        match self.productions.get_mut(&key) {
            Some(w) => *w = s.plus(w, &p.weight),
            None => {
                self.productions.insert(key, p.weight);
            }
        }
        self
    }

    pub fn add_sink(&mut self, bot: &Name) -> &mut Self {
        self.nonterminal(bot.clone());
        for p in sink_productions(&self.alphabet.clone(), bot, self.semiring) {
            self.add(p);
        }
        self
    }

    pub fn build(self) -> Wtgc {
        let s = self.semiring;
        let productions = self
            .productions
            .into_iter()
            .filter(|(_, w)| !s.is_zero(w))
            .map(|(k, w)| Production::from_key(k, w))
            .collect();
        Wtgc::from_parts(s, self.alphabet, self.nonterminals, self.finals, productions)
    }
}

/// Drops zero-weight productions.
pub fn strip_zero(g: &Wtgc) -> Wtgc {
    let s = g.semiring();
    Wtgc::from_parts(
        s,
        g.alphabet().clone(),
        g.nonterminals().iter().cloned(),
        g.finals().map(|(q, w)| (q.clone(), w.clone())),
        g.productions().iter().filter(|p| !s.is_zero(&p.weight)).cloned().collect(),
    )
}

/// A name not in `taken`, derived from `base` by appending primes.
pub fn fresh_name(base: &str, taken: &impl Fn(&str) -> bool) -> Name {
    let mut candidate = base.to_string();
    while taken(&candidate) {
        candidate.push('\'');
    }
    Name::from(candidate)
}
